//! Boundary constants: the scale `Z` of the linear boundary `z(t) = Z (1 - t)`
//! in squared coordinates, and the excursion constant `C` of `c(t) = C √(1 - t)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracles::special;
use crate::quadrature::Quadrature;
use crate::scalar::Real;
use crate::series::{build_coefficients, default_table, CoefficientTable, ModelParams, DEFAULT_EPS};

/// Default bisection width for `Z`.
pub const DEFAULT_Z_TOL: f64 = 1e-10;
/// Default bisection width for `C`.
pub const DEFAULT_C_TOL: f64 = 1e-8;

/// Bracket growth limit, `2^60`.
const BRACKET_LIMIT: f64 = 1_152_921_504_606_846_976.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootMethod {
    Bisection,
    NewtonPolished,
}

/// A bracketed root.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootResult<T> {
    pub value: T,
    pub residual: T,
    pub iterations: usize,
    pub bracket: (T, T),
    pub method: RootMethod,
}

/// Bisection on a sign change `f(lo) < 0 < f(hi)` followed by one guarded
/// Newton step. The Newton step is kept only if it stays inside the closed
/// final bracket and does not increase `|f|`.
pub(crate) fn bisect_then_polish<T: Real>(
    f: impl Fn(T) -> Result<T>,
    df: impl Fn(T) -> Result<T>,
    mut lo: T,
    mut hi: T,
    tol: T,
) -> Result<RootResult<T>> {
    let two = T::lit(2.0);
    let mut iterations = 0;
    while hi - lo > tol {
        let mid = (lo + hi) / two;
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid)?;
        iterations += 1;
        if fm == T::zero() {
            return Ok(RootResult {
                value: mid,
                residual: fm,
                iterations,
                bracket: (lo, hi),
                method: RootMethod::Bisection,
            });
        }
        if fm < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = (lo + hi) / two;
    let fx = f(x)?;
    let mut out = RootResult {
        value: x,
        residual: fx,
        iterations,
        bracket: (lo, hi),
        method: RootMethod::Bisection,
    };
    let d = df(x)?;
    if d != T::zero() && d.is_finite() {
        let xn = x - fx / d;
        if xn >= lo && xn <= hi {
            let fxn = f(xn)?;
            if fxn.abs() <= fx.abs() {
                out.value = xn;
                out.residual = fxn;
                out.method = RootMethod::NewtonPolished;
            }
        }
    }
    Ok(out)
}

/// Table covering `[0, y]`, reusing `table` when it already does.
fn table_covering<T: Real>(
    params: ModelParams<T>,
    table: CoefficientTable<T>,
    y: T,
) -> Result<CoefficientTable<T>> {
    if y <= table.ymax() {
        Ok(table)
    } else {
        build_coefficients(params, T::lit(2.0) * y, T::lit(DEFAULT_EPS))
    }
}

/// The unique positive root `Z` of `F_{α,n}`.
///
/// The bracket starts at `[0, max(1, (α+n)/2)]` and doubles its upper end
/// until `F > 0`; `F(0) = -n < 0` anchors the lower end.
pub fn find_z<T: Real>(params: ModelParams<T>, tol: T) -> Result<RootResult<T>> {
    if !(tol > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: tol.as_f64(),
            reason: "must be positive",
        });
    }
    let mut table = default_table(params)?;
    let mut lo = T::zero();
    let mut hi = params.z_guess();
    loop {
        table = table_covering(params, table, hi)?;
        if table.f_unchecked(hi) > T::zero() {
            break;
        }
        lo = hi;
        hi = hi * T::lit(2.0);
        if hi.as_f64() > BRACKET_LIMIT || !hi.is_finite() {
            return Err(Error::NoRoot {
                limit: BRACKET_LIMIT,
            });
        }
    }
    bisect_then_polish(
        |z| Ok(table.f_unchecked(z)),
        |z| Ok(table.f_prime_unchecked(z)),
        lo,
        hi,
        tol,
    )
}

/// `Z` with the default tolerance.
pub fn boundary_scale<T: Real>(params: ModelParams<T>) -> Result<T> {
    find_z(params, T::lit(DEFAULT_Z_TOL)).map(|r| r.value)
}

/// `h(c) = 2 ∫_0^c e^{t²/2} dt - c e^{c²/2}`, whose positive root is `C`.
pub fn excursion_h<T: Real>(c: T) -> Result<T> {
    let half = T::lit(0.5);
    let integral = Quadrature::default().integrate(|t: T| (half * t * t).exp(), T::zero(), c)?;
    Ok(T::lit(2.0) * integral - c * (half * c * c).exp())
}

/// The excursion boundary constant `C`, bracketed in `(1, 2)`.
pub fn find_c_excursion<T: Real>(tol: T) -> Result<RootResult<T>> {
    if !(tol > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: tol.as_f64(),
            reason: "must be positive",
        });
    }
    // h > 0 on (0, C) and h < 0 beyond: negate so the bracket reads f(lo) < 0 < f(hi).
    bisect_then_polish(
        |c| excursion_h(c).map(|h| -h),
        |c: T| Ok((c * c / T::lit(2.0)).exp() * (c * c - T::one())),
        T::one(),
        T::lit(2.0),
        tol,
    )
    .map(|mut r| {
        r.residual = -r.residual;
        r
    })
}

/// `Z` from a closed form when one exists: `α = n` gives `Z = n`; `n = α - 2`
/// gives the root of the smooth-fit condition for the explicit solution `H`.
pub fn closed_form_z<T: Real>(params: ModelParams<T>) -> Result<Option<T>> {
    let (alpha, n) = (params.alpha(), params.n());
    let eps = T::lit(1e-12);
    if (alpha - n).abs() <= eps * alpha.max(n) {
        return Ok(Some(n));
    }
    if (n - (alpha - T::lit(2.0))).abs() <= eps * alpha {
        return special::root_power_case(n).map(Some);
    }
    Ok(None)
}

/// `Z - (α + n - 2)/2`; never negative for a correct boundary.
pub fn proposition_margin<T: Real>(params: ModelParams<T>) -> Result<T> {
    let z = find_z(params, T::lit(DEFAULT_Z_TOL))?.value;
    Ok(z - params.proposition_bound())
}

#[cfg(test)]
mod tests {
    use super::*;

    // mpmath: root of 2∫_0^c e^{t²/2}dt = c e^{c²/2}
    const C_REF: f64 = 1.503_395_376_470_781_8;

    fn p(alpha: f64, n: f64) -> ModelParams<f64> {
        ModelParams::new(alpha, n).unwrap()
    }

    #[test]
    fn excursion_constant() {
        let r = find_c_excursion(1e-8f64).unwrap();
        assert!((r.value - 1.503_395_38).abs() < 1e-6);
        assert!((r.value - C_REF).abs() < 1e-12);
        assert!(r.bracket.0 <= r.value && r.value <= r.bracket.1);
        assert!(excursion_h(1.0).unwrap() > 0.0);
        assert!(excursion_h(2.0).unwrap() < 0.0);
    }

    #[test]
    fn brownian_bridge_root_is_one() {
        let r = find_z(p(1.0, 1.0), 1e-10).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
        assert!(r.bracket.0 <= r.value && r.value <= r.bracket.1);
    }

    #[test]
    fn excursion_root_is_c_squared() {
        let r = find_z(p(3.0, 1.0), 1e-10).unwrap();
        assert!((r.value - C_REF * C_REF).abs() < 1e-9);
    }

    #[test]
    fn equal_params_root_is_n() {
        for n in [0.5, 2.0, 5.0] {
            let z = find_z(p(n, n), 1e-10).unwrap().value;
            assert!((z - n).abs() < 1e-8, "n = {n}: {z}");
        }
    }

    #[test]
    fn mpmath_reference_roots() {
        // Roots of 2zM'(z) = nM(z), M = 1F1(n/2; α/2; z/2), computed with mpmath at 40 digits.
        let cases = [
            (7.0, 2.0, 4.840_097_315_571_535),
            (5.0, 1.0, 3.384_062_085_402_439),
            (0.25, 10.0, 4.757_008_227_586_683),
            (10.0, 0.25, 5.765_498_125_664_170),
            (5.0, 3.0, 4.142_719_526_139_799),
        ];
        for (a, n, z) in cases {
            let r = find_z(p(a, n), 1e-12).unwrap().value;
            assert!((r - z).abs() < 1e-9, "({a},{n}): {r} vs {z}");
        }
    }

    #[test]
    fn closed_forms() {
        assert_eq!(closed_form_z(p(2.0, 2.0)).unwrap(), Some(2.0));
        let z = closed_form_z(p(3.0, 1.0)).unwrap().unwrap();
        assert!((z - C_REF * C_REF).abs() < 1e-8);
        assert_eq!(closed_form_z(p(5.0, 1.0)).unwrap(), None);
        let z = closed_form_z(p(5.0, 3.0)).unwrap().unwrap();
        assert!((z - 4.142_719_526_139_799).abs() < 1e-8);
    }

    #[test]
    fn margins() {
        let m = proposition_margin(p(3.0, 1.0)).unwrap();
        assert!((m - (C_REF * C_REF - 1.0)).abs() < 1e-9);
        assert!((proposition_margin(p(1.0, 1.0)).unwrap() - 1.0).abs() < 1e-9);
        assert!(proposition_margin(p(0.5, 0.5)).unwrap() > 0.5);
    }

    #[test]
    fn bad_tolerance() {
        assert!(find_z(p(1.0, 1.0), 0.0).is_err());
        assert!(find_c_excursion::<f64>(-1.0).is_err());
    }

    #[test]
    fn f32_root() {
        let r = find_z(ModelParams::new(1.0f32, 1.0f32).unwrap(), 1e-5).unwrap();
        assert!((r.value - 1.0).abs() < 1e-4);
    }
}
