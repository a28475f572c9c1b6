use serde::{Deserialize, Serialize};

use crate::error::SolverError;

/// Zero-order coefficient of the equation, written as `d(x) = −c|x|^{−p}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum PotentialSpec {
    Zero,
    /// `d(x) = −c|x|^{−p}` with `c ≥ 0`.
    InversePower {
        c: f64,
    },
}

impl PotentialSpec {
    pub fn inverse_power(c: f64) -> Result<Self, SolverError> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(SolverError::Input(format!(
                "potential strength c = {c} must be >= 0"
            )));
        }
        Ok(if c == 0.0 {
            PotentialSpec::Zero
        } else {
            PotentialSpec::InversePower { c }
        })
    }

    /// Strength `c` of the term `c|x|^{−p}u^{p−1}`.
    pub fn c(&self) -> f64 {
        match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::InversePower { c } => *c,
        }
    }

    /// Bound constant `C₀` in `|d(x)| ≤ C₀|x|^{−p}`.
    pub fn c0(&self) -> f64 {
        self.c()
    }

    /// `d(x)` at distance `r` from the singular point.
    pub fn d(&self, r: f64, p: f64) -> f64 {
        match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::InversePower { c } => -c * r.powf(-p),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_holds_on_samples() {
        let pot = PotentialSpec::inverse_power(1.5).unwrap();
        for k in 0..40 {
            let r = 2f64.powf(-(k as f64) / 4.0);
            for &p in &[1.5, 2.0, 3.0] {
                let d = pot.d(r, p);
                assert!(d <= 0.0);
                assert!(d.abs() <= pot.c0() * r.powf(-p) * (1.0 + 1e-15));
            }
        }
        assert!(PotentialSpec::inverse_power(-1.0).is_err());
        assert_eq!(
            PotentialSpec::inverse_power(0.0).unwrap(),
            PotentialSpec::Zero
        );
    }
}
