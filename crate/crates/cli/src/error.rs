use bhlab::Error;
use serde_json::json;
use thiserror::Error as ThisError;

/// Module names in exit-code order.
pub const MODULES: [&str; 8] = [
    "geometry",
    "plaplace_solver",
    "spherical_exponents",
    "barriers",
    "harnack_verifier",
    "singular_solutions",
    "io",
    "config",
];

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("configuration: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{module}: check failed: {message}")]
    Check {
        module: &'static str,
        message: String,
    },
}

fn index(module: &str) -> i32 {
    MODULES.iter().position(|&m| m == module).unwrap_or(6) as i32
}

/// First identifier of a `Debug` rendering, i.e. the variant name.
fn variant(debug: String) -> String {
    debug
        .split(|c: char| !c.is_alphanumeric() && c != '_')
        .next()
        .unwrap_or_default()
        .to_string()
}

impl CliError {
    pub fn module(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.module(),
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Check { module, .. } => module,
        }
    }

    pub fn kind(&self) -> String {
        match self {
            CliError::Core(e) => match e {
                Error::Geometry(x) => variant(format!("{x:?}")),
                Error::Solver(x) => variant(format!("{x:?}")),
                Error::Exponent(x) => variant(format!("{x:?}")),
                Error::Barrier(x) => variant(format!("{x:?}")),
                Error::Harnack(x) => variant(format!("{x:?}")),
                Error::Singular(x) => variant(format!("{x:?}")),
                Error::Io(_) => "Io".into(),
            },
            CliError::Config(_) => "Config".into(),
            CliError::Io(_) => "Io".into(),
            CliError::Check { .. } => "CheckFailed".into(),
        }
    }

    /// `10 + module index` for errors, `30 + module index` for failed checks.
    pub fn exit_code(&self) -> i32 {
        let base = match self {
            CliError::Check { .. } => 30,
            _ => 10,
        };
        base + index(self.module())
    }

    pub fn to_json(&self, config_hash: Option<&str>) -> serde_json::Value {
        json!({
            "error": {
                "module": self.module(),
                "kind": self.kind(),
                "message": self.to_string(),
            },
            "config_hash": config_hash,
        })
    }
}
