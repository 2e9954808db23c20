//! Numerical checks of the lemmas, the proposition bounding `Z`, and the
//! series machinery behind its proof.

pub mod iteration;
pub mod lambda;
pub mod lemmas;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One named check. For equality checks `margin` is an error and passes when
/// `margin <= tolerance`; for inequality checks it is a slack and passes when
/// `margin >= -tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub margin: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn error(name: impl Into<String>, err: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            pass: err <= tolerance,
            margin: err,
            tolerance,
        }
    }

    pub fn slack(name: impl Into<String>, slack: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            pass: slack >= -tolerance,
            margin: slack,
            tolerance,
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self {
            name: name.into(),
            pass: ok,
            margin: if ok { 0.0 } else { 1.0 },
            tolerance: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    /// `(passed, total)`.
    pub fn summary(&self) -> (usize, usize) {
        (self.checks.iter().filter(|c| c.pass).count(), self.checks.len())
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// Combines reports, ordering checks by name.
    pub fn merge(reports: impl IntoIterator<Item = VerificationReport>) -> Self {
        let mut checks: Vec<Check> = reports.into_iter().flat_map(|r| r.checks).collect();
        checks.sort_by(|a, b| a.name.cmp(&b.name));
        Self { checks }
    }
}

impl Extend<Check> for VerificationReport {
    fn extend<I: IntoIterator<Item = Check>>(&mut self, iter: I) {
        self.checks.extend(iter);
    }
}

/// `(n, γ, steps)` for the invariance check: `|γ| < 2`, `γ > 0`, and the
/// δ-form point `α = 0.5, δ = 1`.
pub const INVARIANCE_CASES: [(f64, f64, usize); 4] =
    [(1.0, -0.5, 10), (2.0, 1.5, 15), (1.0, 2.0, 12), (4.5, -3.0, 12)];
/// `(n, γ)` for the first family of bounds.
pub const P_CASES: [(f64, f64); 4] = [(1.0, 2.0), (0.5, 5.0), (2.0, 1.5), (3.0, 0.5)];
/// `δ` for the second family of bounds.
pub const Q_CASES: [f64; 6] = [0.1, 1.0, 3.0, 10.0, 30.0, 100.0];
/// `(α, δ)` for the comparison bounds.
pub const R_CASES: [(f64, f64); 5] = [(2.0, 1.0), (0.5, 4.0), (0.1, 30.0), (5.0, 0.5), (1.0, 100.0)];
/// Highest recursion index checked.
pub const R_MAX: usize = 60;

/// The series machinery: shift invariance, sign and identity for `H`, the
/// tabulated polynomials, and the three inductive bound families.
pub fn appendix_checks() -> Result<VerificationReport> {
    let mut reports = Vec::new();
    for (n, gamma, steps) in INVARIANCE_CASES {
        reports.push(lambda::lambda_iterate_invariance(&lambda::LambdaParams::h(n, gamma), steps)?);
    }
    reports.push(lambda::h_grid_report(&lemmas::PARAM_GRID)?);
    reports.push(iteration::table1_report());
    for (n, gamma) in P_CASES {
        reports.push(iteration::check_p(n, gamma, R_MAX)?);
    }
    for delta in Q_CASES {
        reports.push(iteration::check_q(delta, R_MAX)?);
    }
    for (alpha, delta) in R_CASES {
        reports.push(iteration::check_r(alpha, delta, R_MAX)?);
    }
    Ok(VerificationReport::merge(reports))
}

/// Excursion lemma plus the general checks over the 9 × 9 grid.
pub fn lemma_suite() -> Result<VerificationReport> {
    Ok(VerificationReport::merge([
        lemmas::excursion_checks()?,
        lemmas::grid_lemma_checks()?,
    ]))
}
