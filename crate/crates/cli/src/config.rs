//! Run configuration: a TOML file with shared keys at the top level and one section per
//! command, plus command-line overrides.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Command that produced the outputs; the subcommand overwrites the file value.
    pub command: String,
    pub p: f64,
    /// Space dimension `N`.
    pub dim: u32,
    /// Sector opening `ω`; `π` is the half-disk.
    pub opening: f64,
    /// Potential constant `c` in `d = −c|x|^{−p}`.
    pub c: f64,
    /// Truncation radius `ε`.
    pub epsilon: f64,
    /// Domain radius `R`.
    pub radius: f64,
    /// `[n_r, n_θ]`.
    pub grid: [usize; 2],
    /// Geometric radial ratio `q`; log-uniform radii when absent.
    pub q: Option<f64>,
    pub tol: f64,
    /// Output directory; not part of the configuration hash.
    pub out: PathBuf,
    pub exponent: ExponentSection,
    pub solve: SolveSection,
    pub singular: SingularSection,
    pub harnack: HarnackSection,
    pub barrier: BarrierSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: String::new(),
            p: 2.0,
            dim: 2,
            opening: PI,
            c: 0.0,
            epsilon: 0.125,
            radius: 1.0,
            grid: [97, 65],
            q: None,
            tol: 1e-8,
            out: PathBuf::from("out"),
            exponent: ExponentSection::default(),
            solve: SolveSection::default(),
            singular: SingularSection::default(),
            harnack: HarnackSection::default(),
            barrier: BarrierSection::default(),
        }
    }
}

/// Sweep lists; an empty list means the top-level value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExponentSection {
    pub p: Vec<f64>,
    pub dim: Vec<u32>,
    pub opening: Vec<f64>,
    pub c: Vec<f64>,
    /// `"regular"` and/or `"singular"`.
    pub kind: Vec<String>,
    pub tol: f64,
}

impl Default for ExponentSection {
    fn default() -> Self {
        ExponentSection {
            p: vec![],
            dim: vec![],
            opening: vec![],
            c: vec![],
            kind: vec!["singular".into()],
            tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveSection {
    /// `"constant"`: the value `arc_scale` on the truncation arc. `"profile"`: `arc_scale`
    /// times the singular separable solution of the sector.
    pub arc: String,
    pub arc_scale: f64,
}

impl Default for SolveSection {
    fn default() -> Self {
        SolveSection {
            arc: "constant".into(),
            arc_scale: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SingularSection {
    pub levels: usize,
    /// Rings per octave; `--grid` sets this from its first entry.
    pub per_octave: usize,
    pub arc_scale: f64,
    pub modulation: f64,
    pub slack_c: f64,
    /// Write every ladder level, not only the limit.
    pub write_levels: bool,
}

impl Default for SingularSection {
    fn default() -> Self {
        SingularSection {
            levels: 5,
            per_octave: 16,
            arc_scale: 1.0,
            modulation: 0.0,
            slack_c: 1.0,
            write_levels: false,
        }
    }
}

/// Measurement points and radii, in units of the field's outer radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnackSection {
    pub fields: Vec<PathBuf>,
    pub q: [f64; 2],
    pub r: f64,
    pub chain_levels: u32,
    pub interior_point: [f64; 2],
    pub interior_r: f64,
    pub decay_point: [f64; 2],
    pub apriori_point: [f64; 2],
    /// `bhi2` is measured on `2^{−k}R` for `k = 1..=annuli`.
    pub annuli: u32,
    /// Quotient window `[lo, hi]`; `lo` is in units of the truncation radius.
    pub quotient_lo_eps: f64,
    pub quotient_hi: f64,
}

impl Default for HarnackSection {
    fn default() -> Self {
        HarnackSection {
            fields: vec![],
            q: [0.4, 0.0],
            r: 0.1,
            chain_levels: 3,
            interior_point: [0.1, 0.3],
            interior_r: 0.05,
            decay_point: [-0.3, 0.0],
            apriori_point: [0.0, 0.5],
            annuli: 5,
            quotient_lo_eps: 32.0,
            quotient_hi: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarrierSection {
    /// Bound `C̃₀` on the rescaled potential; the top-level `c` when absent.
    pub c0_tilde: Option<f64>,
    /// Also certify the lower barrier with `a` multiplied by this factor.
    pub probe_factor: Option<f64>,
}

impl Default for BarrierSection {
    fn default() -> Self {
        BarrierSection {
            c0_tilde: None,
            probe_factor: Some(0.5),
        }
    }
}

/// Values given on the command line; each replaces the file value.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub p: Option<f64>,
    pub dim: Option<u32>,
    pub opening: Option<f64>,
    pub c: Option<f64>,
    pub epsilon: Option<f64>,
    pub grid: Option<[usize; 2]>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                Self::parse(&text)
            }
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// TOML without the output directory, as written next to the outputs.
    pub fn canonical_toml(&self) -> String {
        let mut table = toml::Table::try_from(self).expect("configuration serializes");
        table.remove("out");
        toml::to_string(&table).expect("table serializes")
    }

    /// Apply overrides. A sweep list is replaced by the single overriding value.
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(p) = o.p {
            self.p = p;
            self.exponent.p.clear();
        }
        if let Some(d) = o.dim {
            self.dim = d;
            self.exponent.dim.clear();
        }
        if let Some(w) = o.opening {
            self.opening = w;
            self.exponent.opening.clear();
        }
        if let Some(c) = o.c {
            self.c = c;
            self.exponent.c.clear();
        }
        if let Some(e) = o.epsilon {
            self.epsilon = e;
        }
        if let Some(g) = o.grid {
            self.grid = g;
            self.singular.per_octave = g[0];
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(self.p > 1.0) || !self.p.is_finite() {
            return bad(format!("p = {} must be a finite number above 1", self.p));
        }
        if self.dim < 2 {
            return bad(format!("dim = {} must be at least 2", self.dim));
        }
        if !(self.opening > 0.0 && self.opening < 2.0 * PI) {
            return bad(format!("opening = {} must lie in (0, 2pi)", self.opening));
        }
        if !(self.c >= 0.0) || !self.c.is_finite() {
            return bad(format!("c = {} must be finite and >= 0", self.c));
        }
        if !(self.radius > 0.0) || !(self.epsilon > 0.0 && self.epsilon < self.radius) {
            return bad(format!(
                "need 0 < epsilon < radius, got {} and {}",
                self.epsilon, self.radius
            ));
        }
        if self.grid[0] < 4 || self.grid[1] < 4 {
            return bad(format!(
                "grid {:?} needs at least 4 nodes per direction",
                self.grid
            ));
        }
        if let Some(q) = self.q {
            if !(q > 0.0 && q < 1.0) {
                return bad(format!("q = {q} must lie in (0, 1)"));
            }
        }
        if !(self.tol > 0.0) || !(self.exponent.tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        for k in &self.exponent.kind {
            if k != "regular" && k != "singular" {
                return bad(format!("unknown exponent kind {k:?}"));
            }
        }
        if self.solve.arc != "constant" && self.solve.arc != "profile" {
            return bad(format!("unknown arc data {:?}", self.solve.arc));
        }
        if let Some(c0) = self.barrier.c0_tilde {
            if !(c0 >= 0.0) {
                return bad(format!("c0_tilde = {c0} must be >= 0"));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON serialization, with the output directory blanked.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.out = PathBuf::new();
        let json = serde_json::to_vec(&canon).expect("configuration serializes");
        hex::encode(Sha256::digest(&json))
    }
}

/// Parse `nr,ntheta`.
pub fn parse_grid(s: &str) -> Result<[usize; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("expected nr,ntheta, got {s:?}"));
    }
    let n = |t: &str| t.parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    Ok([n(parts[0])?, n(parts[1])?])
}
