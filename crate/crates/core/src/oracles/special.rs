//! Explicit solutions of `4y g'' + 2(α - y) g' - n g = 0` in the two
//! parameter families where they reduce to a single quadrature.
//!
//! * `n = α - 2`: `H(y) = y^{-n/2} ∫_0^y e^{s/2} s^{n/2-1} ds/2`, with `H(0) = 1/n`.
//! * `n = 2, α > 2`: `H(y) = y^{1-α/2} e^{y/2} ∫_0^y e^{-v/2} v^{α/2-2} dv/2`,
//!   with `H(0) = 1/(α - 2)` (the multiplicative constant is left at one).
//!
//! Both integrands carry an integrable power singularity at zero. The first
//! panel `[0, min(y, 1/2)]` is integrated term-by-term against the power
//! weight; the remainder goes to adaptive Gauss–Kronrod.

use serde::{Deserialize, Serialize};

use crate::boundary::{bisect_then_polish, RootResult};
use crate::error::{Error, Result};
use crate::quadrature::Quadrature;
use crate::scalar::Real;
use crate::series::ModelParams;

/// Relative tolerance for the H quadratures.
pub const H_REL_TOL: f64 = 1e-12;

const FIRST_PANEL: f64 = 0.5;

/// Which explicit family a parameter pair belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecialCase {
    /// `n = α - 2`.
    PowerLaw,
    /// `n = 2` with `α > 2`.
    Quadratic,
}

impl SpecialCase {
    pub fn classify<T: Real>(params: &ModelParams<T>) -> Option<Self> {
        let (alpha, n) = (params.alpha(), params.n());
        let eps = T::lit(1e-12);
        if (n - (alpha - T::lit(2.0))).abs() <= eps * alpha {
            Some(Self::PowerLaw)
        } else if (n - T::lit(2.0)).abs() <= eps && alpha > T::lit(2.0) {
            Some(Self::Quadratic)
        } else {
            None
        }
    }
}

/// `∫_0^a e^{c s} s^{p-1} ds` by the term-wise series, for small `a`.
fn weighted_first_panel<T: Real>(c: T, p: T, a: T) -> T {
    let mut sum = T::zero();
    let mut coef = T::one(); // c^j / j!
    let ln_a = a.ln();
    for j in 0..200 {
        let jf = T::from_usize_lossy(j);
        let term = coef * ((jf + p) * ln_a).exp() / (jf + p);
        sum = sum + term;
        if term.abs() <= T::epsilon() * sum.abs() {
            break;
        }
        coef = coef * c / (jf + T::one());
    }
    sum
}

/// `∫_0^y e^{c s} s^{p-1} ds` with `p > 0`.
fn power_weighted_integral<T: Real>(c: T, p: T, y: T) -> Result<T> {
    if y == T::zero() {
        return Ok(T::zero());
    }
    let a = y.min(T::lit(FIRST_PANEL));
    let head = weighted_first_panel(c, p, a);
    let tail = Quadrature::with_rel_tol(H_REL_TOL)
        .integrate(|s: T| (c * s).exp() * s.powf(p - T::one()), a, y)?;
    Ok(head + tail)
}

fn check_y<T: Real>(y: T) -> Result<()> {
    if y >= T::zero() && y.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "y",
            value: y.as_f64(),
            reason: "must be finite and non-negative",
        })
    }
}

/// `H(y) = y^{-n/2} ∫_0^y e^{s/2} s^{n/2-1} ds/2` for the `n = α - 2` family.
pub fn h_power_law<T: Real>(n: T, y: T) -> Result<T> {
    check_y(y)?;
    if y == T::zero() {
        return Ok(T::one() / n);
    }
    let half = T::lit(0.5);
    let integral = power_weighted_integral(half, half * n, y)?;
    Ok(half * integral / y.powf(half * n))
}

/// `H'(y)` for the `n = α - 2` family, from `2y H' = e^{y/2} - n H`.
pub fn h_power_law_derivative<T: Real>(n: T, y: T) -> Result<T> {
    check_y(y)?;
    if y == T::zero() {
        return Ok(T::one() / (T::lit(2.0) * (n + T::lit(2.0))));
    }
    let h = h_power_law(n, y)?;
    Ok(((y / T::lit(2.0)).exp() - n * h) / (T::lit(2.0) * y))
}

/// `J(y) = ∫_0^y e^{-v/2} v^{α/2-2} dv/2` for the `n = 2` family.
fn j_quadratic<T: Real>(alpha: T, y: T) -> Result<T> {
    let half = T::lit(0.5);
    Ok(half * power_weighted_integral(-half, half * alpha - T::one(), y)?)
}

/// `H(y) = y^{1-α/2} e^{y/2} J(y)` for the `n = 2, α > 2` family.
pub fn h_quadratic<T: Real>(alpha: T, y: T) -> Result<T> {
    check_y(y)?;
    if !(alpha > T::lit(2.0)) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha.as_f64(),
            reason: "the n = 2 explicit solution needs alpha > 2",
        });
    }
    if y == T::zero() {
        return Ok(T::one() / (alpha - T::lit(2.0)));
    }
    let half = T::lit(0.5);
    Ok(y.powf(T::one() - half * alpha) * (half * y).exp() * j_quadratic(alpha, y)?)
}

/// `H(y)` for whichever explicit family `params` belongs to.
pub fn quadrature_h<T: Real>(params: &ModelParams<T>, y: T) -> Result<T> {
    match SpecialCase::classify(params) {
        Some(SpecialCase::PowerLaw) => h_power_law(params.n(), y),
        Some(SpecialCase::Quadratic) => h_quadratic(params.alpha(), y),
        None => Err(Error::InvalidParameter {
            name: "n",
            value: params.n().as_f64(),
            reason: "explicit H needs n = alpha - 2, or n = 2 with alpha > 2",
        }),
    }
}

/// `H(y) / H(0)`, which coincides with the power series ψ.
pub fn normalized_h<T: Real>(params: &ModelParams<T>, y: T) -> Result<T> {
    let h0 = quadrature_h(params, T::zero())?;
    Ok(quadrature_h(params, y)? / h0)
}

/// Smooth-fit root for the `n = α - 2` family:
/// `2n ∫_0^Z e^{s/2} s^{n/2-1} ds/2 = Z^{n/2} e^{Z/2}`.
pub fn root_power_case<T: Real>(n: T) -> Result<T> {
    let half = T::lit(0.5);
    // phi > 0 near zero, < 0 for large Z; bisect on -phi.
    let neg_phi = |z: T| -> Result<T> {
        let i = half * power_weighted_integral(half, half * n, z)?;
        Ok(z.powf(half * n) * (half * z).exp() - T::lit(2.0) * n * i)
    };
    let d_neg_phi = |z: T| -> Result<T> { Ok((half * z).exp() * z.powf(half * n - T::one()) * (z - n) * half) };
    root_by_growth(neg_phi, d_neg_phi, n + T::one()).map(|r| r.value)
}

/// Smooth-fit root for the `n = 2` family: `(Z - α) J(Z) + Z^{α/2-1} e^{-Z/2} = 0`.
pub fn root_quadratic_case<T: Real>(alpha: T) -> Result<T> {
    let half = T::lit(0.5);
    let f = |z: T| -> Result<T> {
        Ok((z - alpha) * j_quadratic(alpha, z)? + z.powf(half * alpha - T::one()) * (-half * z).exp())
    };
    // d/dz = J(z) + (z - α) J'(z) + ((α/2 - 1)/z - 1/2) z^{α/2-1} e^{-z/2}
    let df = |z: T| -> Result<T> {
        let w = z.powf(half * alpha - T::one()) * (-half * z).exp();
        let jp = half * w / z;
        Ok(j_quadratic(alpha, z)? + (z - alpha) * jp + ((half * alpha - T::one()) / z - half) * w)
    };
    root_by_growth(f, df, alpha)
        .map(|r| r.value)
}

fn root_by_growth<T: Real>(
    f: impl Fn(T) -> Result<T>,
    df: impl Fn(T) -> Result<T>,
    start: T,
) -> Result<RootResult<T>> {
    let mut lo = T::lit(1e-3);
    let mut hi = start.max(T::one());
    let mut guard = 0;
    while f(hi)? <= T::zero() {
        lo = hi;
        hi = hi * T::lit(2.0);
        guard += 1;
        if guard > 60 {
            return Err(Error::NoRoot { limit: hi.as_f64() });
        }
    }
    if f(lo)? >= T::zero() {
        return Err(Error::NoRoot { limit: lo.as_f64() });
    }
    bisect_then_polish(f, df, lo, hi, T::lit(1e-13))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_growth_integral;
    use approx::assert_relative_eq;

    #[test]
    fn excursion_h_matches_change_of_variables() {
        // n = 1: H(y) = y^{-1/2} ∫_0^{√y} e^{t²/2} dt exactly.
        for y in [0.01f64, 0.3, 1.0, 2.26, 5.0, 9.0] {
            let h = h_power_law(1.0, y).unwrap();
            let direct = gauss_growth_integral(y.sqrt()).unwrap() / y.sqrt();
            assert_relative_eq!(h, direct, max_relative = 1e-9);
        }
    }

    #[test]
    fn limits_at_zero() {
        assert_eq!(h_power_law(1.0, 0.0).unwrap(), 1.0);
        assert_relative_eq!(h_power_law(3.0, 1e-9).unwrap(), 1.0 / 3.0, max_relative = 1e-8);
        let p = ModelParams::new(4.0, 2.0).unwrap();
        let h0 = quadrature_h(&p, 0.0).unwrap();
        assert_eq!(h0, 0.5);
        let small: f64 = quadrature_h(&p, 1e-8).unwrap();
        assert!(small.is_finite() && (small - h0).abs() < 1e-6);
        let d: f64 = h_power_law_derivative(2.0, 1e-6).unwrap();
        assert!(d > 0.0 && (d - 0.125).abs() < 1e-4);
    }

    #[test]
    fn quadratic_family_normalizes_to_series() {
        // n = 2, α = 6: ψ(y) = 1 + y/6 + ... ; check the first-order behaviour.
        let p = ModelParams::new(6.0, 2.0).unwrap();
        let y = 1e-4;
        let psi = normalized_h(&p, y).unwrap();
        assert_relative_eq!(psi, 1.0 + y / 6.0, max_relative = 1e-8);
    }

    #[test]
    fn roots_match_reference() {
        // mpmath reference roots of the series smooth-fit condition
        assert_relative_eq!(root_power_case(1.0).unwrap(), 2.260_197_657_993_723_7, max_relative = 1e-11);
        assert_relative_eq!(root_power_case(3.0).unwrap(), 4.142_719_526_139_799, max_relative = 1e-11);
        assert_relative_eq!(root_quadratic_case(7.0).unwrap(), 4.840_097_315_571_535, max_relative = 1e-11);
        assert_relative_eq!(root_quadratic_case(6.0).unwrap(), 4.298_251_599_814_125, max_relative = 1e-11);
    }

    #[test]
    fn invalid_family() {
        let p = ModelParams::new(5.0, 1.0).unwrap();
        assert!(quadrature_h(&p, 1.0).is_err());
        assert!(h_quadratic(1.5, 1.0).is_err());
        assert!(h_power_law(1.0, -1.0).is_err());
    }
}
