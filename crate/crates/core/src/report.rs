use serde::{Deserialize, Serialize};

/// One named residual with its verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Named residuals per equation group. `overall_pass` is always the
/// conjunction of the individual verdicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ReportRepr")]
pub struct CertificateReport {
    pub tolerance: f64,
    pub checks: Vec<Check>,
    pub overall_pass: bool,
}

#[derive(Deserialize)]
struct ReportRepr {
    tolerance: f64,
    checks: Vec<Check>,
    overall_pass: bool,
}

impl TryFrom<ReportRepr> for CertificateReport {
    type Error = String;

    fn try_from(r: ReportRepr) -> Result<Self, Self::Error> {
        if let Some(c) = r.checks.iter().find(|c| !c.residual.is_finite() || c.residual < 0.0) {
            return Err(format!("check `{}` has invalid residual {}", c.name, c.residual));
        }
        if let Some(c) = r.checks.iter().find(|c| c.pass != (c.residual <= c.threshold)) {
            return Err(format!("check `{}` has a verdict inconsistent with its threshold", c.name));
        }
        let all = r.checks.iter().all(|c| c.pass);
        if all != r.overall_pass {
            return Err("overall_pass disagrees with the individual checks".into());
        }
        Ok(CertificateReport {
            tolerance: r.tolerance,
            checks: r.checks,
            overall_pass: r.overall_pass,
        })
    }
}

impl CertificateReport {
    pub fn new(tolerance: f64) -> Self {
        CertificateReport {
            tolerance,
            checks: Vec::new(),
            overall_pass: true,
        }
    }

    /// Records `residual <= threshold` under `name`. A NaN residual fails.
    pub fn push(&mut self, name: impl Into<String>, residual: f64, threshold: f64) -> bool {
        let pass = residual <= threshold;
        self.overall_pass &= pass;
        self.checks.push(Check {
            name: name.into(),
            residual,
            threshold,
            pass,
        });
        pass
    }

    /// Appends all checks of `other`, prefixing their names.
    pub fn extend_prefixed(&mut self, prefix: &str, other: &CertificateReport) {
        for c in &other.checks {
            self.overall_pass &= c.pass;
            self.checks.push(Check {
                name: format!("{prefix}{}", c.name),
                ..c.clone()
            });
        }
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn residual(&self, name: &str) -> Option<f64> {
        self.get(name).map(|c| c.residual)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.residual).fold(0.0, f64::max)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn len(&self) -> usize {
        self.checks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.checks.is_empty()
    }
}
