//! Power-series solution ψ of `4y g'' + 2(α - y) g' - n g = 0` with `g(0) = 1`.
//!
//! The coefficients obey
//!
//! ```text
//! A_0 = 1,    A_{k+1} = (2k + n) / (2 (k + 1) (2k + α)) · A_k
//! ```
//!
//! so every `A_k` is positive and the series is entire. ψ is Kummer's
//! `M(n/2, α/2, y/2)`. The smooth-fit defect `F(z) = Σ (2k - n) A_k z^k`
//! equals `2 z ψ'(z) - n ψ(z)` and has exactly one positive root.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Hard cap on the number of retained coefficients.
pub const MAX_TERMS: usize = 500;

/// Default relative tail tolerance for [`build_coefficients`].
pub const DEFAULT_EPS: f64 = 1e-14;

/// The problem instance: Bessel dimension `alpha` and payoff exponent `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    alpha: T,
    n: T,
}

impl<T: Real> ModelParams<T> {
    pub fn new(alpha: T, n: T) -> Result<Self> {
        if !(alpha > T::zero()) || !alpha.is_finite() {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: alpha.as_f64(),
                reason: "must be a finite positive number",
            });
        }
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::InvalidParameter {
                name: "n",
                value: n.as_f64(),
                reason: "must be a finite positive number",
            });
        }
        Ok(Self { alpha, n })
    }

    #[inline]
    pub fn alpha(&self) -> T {
        self.alpha
    }

    #[inline]
    pub fn n(&self) -> T {
        self.n
    }

    /// Initial guess for the boundary scale, `max(1, (α + n)/2)`.
    pub fn z_guess(&self) -> T {
        T::one().max((self.alpha + self.n) / T::lit(2.0))
    }

    /// Default validated range for coefficient tables, `max(4, 4 Z_guess)`.
    pub fn default_ymax(&self) -> T {
        T::lit(4.0).max(T::lit(4.0) * self.z_guess())
    }

    /// Lower bound `(α + n - 2)/2` for the boundary scale.
    pub fn proposition_bound(&self) -> T {
        (self.alpha + self.n - T::lit(2.0)) / T::lit(2.0)
    }

    /// Ratio `A_{k+1} / A_k`.
    #[inline]
    pub fn coefficient_ratio(&self, k: usize) -> T {
        let k = T::from_usize_lossy(k);
        let two = T::lit(2.0);
        (two * k + self.n) / (two * (k + T::one()) * (two * k + self.alpha))
    }

    pub fn to_f64(&self) -> ModelParams<f64> {
        ModelParams {
            alpha: self.alpha.as_f64(),
            n: self.n.as_f64(),
        }
    }
}

/// Truncated coefficients `A_0..=A_K` of ψ, validated on `[0, ymax]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable<T> {
    params: ModelParams<T>,
    coeffs: Vec<T>,
    ymax: T,
    eps: T,
}

impl<T: Real> CoefficientTable<T> {
    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Truncation order `K` (index of the last retained coefficient).
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn ymax(&self) -> T {
        self.ymax
    }

    pub fn eps(&self) -> T {
        self.eps
    }

    fn check_range(&self, y: T) -> Result<()> {
        if y >= T::zero() && y <= self.ymax {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                name: "y",
                value: y.as_f64(),
                lo: 0.0,
                hi: self.ymax.as_f64(),
            })
        }
    }

    /// ψ(y) by Horner's rule.
    pub fn psi(&self, y: T) -> Result<T> {
        self.check_range(y)?;
        Ok(self.psi_unchecked(y))
    }

    pub(crate) fn psi_unchecked(&self, y: T) -> T {
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, &a| acc * y + a)
    }

    /// First or second derivative of ψ, term-wise.
    pub fn psi_derivative(&self, y: T, order: u32) -> Result<T> {
        self.check_range(y)?;
        match order {
            1 => Ok(self.psi_prime_unchecked(y)),
            2 => Ok(self.psi_second_unchecked(y)),
            _ => Err(Error::InvalidParameter {
                name: "order",
                value: order as f64,
                reason: "derivative order must be 1 or 2",
            }),
        }
    }

    pub(crate) fn psi_prime_unchecked(&self, y: T) -> T {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(T::zero(), |acc, (k, &a)| acc * y + T::from_usize_lossy(k) * a)
    }

    pub(crate) fn psi_second_unchecked(&self, y: T) -> T {
        self.coeffs
            .iter()
            .enumerate()
            .skip(2)
            .rev()
            .fold(T::zero(), |acc, (k, &a)| {
                let k = T::from_usize_lossy(k);
                acc * y + k * (k - T::one()) * a
            })
    }

    /// `F(z) = Σ (2k - n) A_k z^k`.
    pub fn f_eval(&self, z: T) -> Result<T> {
        self.check_range(z)?;
        Ok(self.f_unchecked(z))
    }

    pub(crate) fn f_unchecked(&self, z: T) -> T {
        let n = self.params.n;
        let two = T::lit(2.0);
        self.coeffs
            .iter()
            .enumerate()
            .rev()
            .fold(T::zero(), |acc, (k, &a)| {
                acc * z + (two * T::from_usize_lossy(k) - n) * a
            })
    }

    /// `F'(z) = Σ k (2k - n) A_k z^{k-1}`.
    pub fn f_derivative(&self, z: T) -> Result<T> {
        self.check_range(z)?;
        Ok(self.f_prime_unchecked(z))
    }

    pub(crate) fn f_prime_unchecked(&self, z: T) -> T {
        let n = self.params.n;
        let two = T::lit(2.0);
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(T::zero(), |acc, (k, &a)| {
                let k = T::from_usize_lossy(k);
                acc * z + k * (two * k - n) * a
            })
    }

    /// `Σ |2k - n| A_k z^k`, the natural scale for relative checks on `F`.
    pub fn f_abs_scale(&self, z: T) -> T {
        let n = self.params.n;
        let two = T::lit(2.0);
        self.coeffs
            .iter()
            .enumerate()
            .rev()
            .fold(T::zero(), |acc, (k, &a)| {
                acc * z + (two * T::from_usize_lossy(k) - n).abs() * a
            })
    }

    /// Residual `4yψ'' + 2(α - y)ψ' - nψ` of the defining ODE.
    pub fn ode_residual(&self, y: T) -> Result<T> {
        self.check_range(y)?;
        let a = self.params.alpha;
        let n = self.params.n;
        Ok(T::lit(4.0) * y * self.psi_second_unchecked(y)
            + T::lit(2.0) * (a - y) * self.psi_prime_unchecked(y)
            - n * self.psi_unchecked(y))
    }
}

/// Builds the coefficient table by the two-term recursion, keeping the
/// smallest `K` with `A_K ymax^K <= eps · Σ_{k<=K} A_k ymax^k`.
pub fn build_coefficients<T: Real>(
    params: ModelParams<T>,
    ymax: T,
    eps: T,
) -> Result<CoefficientTable<T>> {
    if !(ymax > T::zero()) || !ymax.is_finite() {
        return Err(Error::InvalidParameter {
            name: "ymax",
            value: ymax.as_f64(),
            reason: "must be a finite positive number",
        });
    }
    if !(eps > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "eps",
            value: eps.as_f64(),
            reason: "must be positive",
        });
    }

    let mut coeffs = Vec::with_capacity(64);
    coeffs.push(T::one());
    let mut term = T::one();
    let mut sum = T::one();
    let mut a = T::one();
    for k in 0..MAX_TERMS {
        let ratio = params.coefficient_ratio(k);
        a = a * ratio;
        term = term * ratio * ymax;
        sum = sum + term;
        coeffs.push(a);
        if !sum.is_finite() {
            break;
        }
        if term <= eps * sum {
            let table = CoefficientTable {
                params,
                coeffs,
                ymax,
                eps,
            };
            debug_assert!(
                closed_form_mismatch(&table) <= 1e-10f64.max(1e4 * T::epsilon().as_f64()),
                "recursion and Gamma closed form disagree"
            );
            return Ok(table);
        }
    }
    Err(Error::Truncation {
        max_terms: MAX_TERMS,
        ymax: ymax.as_f64(),
        last_ratio: (term / sum).as_f64(),
        partial: coeffs.iter().map(|c| c.as_f64()).collect(),
    })
}

/// Table on the default domain `[0, max(4, 4 Z_guess)]` with `eps = 1e-14`.
pub fn default_table<T: Real>(params: ModelParams<T>) -> Result<CoefficientTable<T>> {
    build_coefficients(params, params.default_ymax(), T::lit(DEFAULT_EPS))
}

/// `A_k` from the Gamma-ratio closed form, evaluated in log space:
///
/// `A_k = Γ(α/2) Γ(k + n/2) / (Γ(n/2) Γ(k + α/2) 2^k k!)`.
pub fn coefficient_closed_form(params: &ModelParams<f64>, k: usize) -> f64 {
    let a2 = params.alpha() / 2.0;
    let n2 = params.n() / 2.0;
    let kf = k as f64;
    let log = libm::lgamma(a2) - libm::lgamma(n2) + libm::lgamma(kf + n2)
        - libm::lgamma(kf + a2)
        - kf * std::f64::consts::LN_2
        - libm::lgamma(kf + 1.0);
    log.exp()
}

/// Largest relative deviation between the recursion and the closed form.
pub fn closed_form_mismatch<T: Real>(table: &CoefficientTable<T>) -> f64 {
    let p = table.params.to_f64();
    table
        .coeffs
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let exact = coefficient_closed_form(&p, k);
            if exact == 0.0 {
                0.0
            } else {
                (a.as_f64() / exact - 1.0).abs()
            }
        })
        .fold(0.0, f64::max)
}
