//! Candidate value functions and their boundary diagnostics.
//!
//! In squared coordinates the candidate is
//!
//! ```text
//! U*(t, q) = E1 (1 - t)^{n/2} ψ(q / (1 - t))    if q < Z (1 - t)
//!          = q^{n/2}                             otherwise
//! ```
//!
//! with `E1 = Z^{n/2} / ψ(Z)`, and `V*(t, x) = U*(t, x²)`.

use serde::{Deserialize, Serialize};

use crate::boundary::{find_c_excursion, find_z, DEFAULT_C_TOL, DEFAULT_Z_TOL};
use crate::error::{Error, Result};
use crate::oracles::special::{self, SpecialCase};
use crate::quadrature::gauss_growth_integral;
use crate::scalar::Real;
use crate::series::{build_coefficients, CoefficientTable, ModelParams, DEFAULT_EPS};

/// Everything needed to evaluate `U*`, `V*` and the boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSolution<T> {
    params: ModelParams<T>,
    z: T,
    e1: T,
    table: CoefficientTable<T>,
}

fn check_time<T: Real>(t: T, allow_terminal: bool) -> Result<()> {
    let ok = t >= T::zero() && (t < T::one() || (allow_terminal && t == T::one()));
    if ok {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: "t",
            value: t.as_f64(),
            lo: 0.0,
            hi: 1.0,
        })
    }
}

fn check_nonneg<T: Real>(name: &'static str, v: T) -> Result<()> {
    if v >= T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value: v.as_f64(),
            reason: "must be finite and non-negative",
        })
    }
}

/// Solves for `Z`, tabulates ψ on `[0, 2Z]` and fixes `E1` by value matching.
pub fn build_candidate<T: Real>(params: ModelParams<T>) -> Result<CandidateSolution<T>> {
    let z = find_z(params, T::lit(DEFAULT_Z_TOL))?.value;
    CandidateSolution::from_root(params, z)
}

impl<T: Real> CandidateSolution<T> {
    /// Assembles the candidate around a given boundary scale.
    pub fn from_root(params: ModelParams<T>, z: T) -> Result<Self> {
        let ymax = params.default_ymax().max(T::lit(2.0) * z);
        let table = build_coefficients(params, ymax, T::lit(DEFAULT_EPS))?;
        let e1 = z.powf(params.n() / T::lit(2.0)) / table.psi(z)?;
        Ok(Self {
            params,
            z,
            e1,
            table,
        })
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    /// Boundary scale `Z`.
    pub fn z(&self) -> T {
        self.z
    }

    pub fn e1(&self) -> T {
        self.e1
    }

    pub fn table(&self) -> &CoefficientTable<T> {
        &self.table
    }

    fn half_n(&self) -> T {
        self.params.n() / T::lit(2.0)
    }

    /// `g(y) = E1 ψ(y)` on `[0, Z]`.
    pub fn g(&self, y: T) -> Result<T> {
        Ok(self.e1 * self.table.psi(y)?)
    }

    /// `U*(t, q)` for `0 <= t < 1`. Points with `q >= Z (1 - t)` take the payoff.
    pub fn u_star(&self, t: T, q: T) -> Result<T> {
        check_time(t, false)?;
        check_nonneg("q", q)?;
        let tau = T::one() - t;
        if q >= self.z * tau {
            Ok(q.powf(self.half_n()))
        } else {
            Ok(self.e1 * tau.powf(self.half_n()) * self.table.psi_unchecked(q / tau))
        }
    }

    /// `U*` extended to `t = 1` by the terminal payoff `q^{n/2}`.
    pub fn u_star_with_terminal(&self, t: T, q: T) -> Result<T> {
        check_time(t, true)?;
        if t == T::one() {
            check_nonneg("q", q)?;
            return Ok(q.powf(self.half_n()));
        }
        self.u_star(t, q)
    }

    /// `V*(t, x) = U*(t, x²)`.
    pub fn v_star(&self, t: T, x: T) -> Result<T> {
        check_nonneg("x", x)?;
        self.u_star(t, x * x)
    }

    /// `z(t) = Z (1 - t)`.
    pub fn boundary_q(&self, t: T) -> Result<T> {
        check_time(t, true)?;
        Ok(self.z * (T::one() - t))
    }

    /// `√z(t)`, the boundary for the Bessel bridge itself.
    pub fn boundary_x(&self, t: T) -> Result<T> {
        self.boundary_q(t).map(|z| z.sqrt())
    }

    /// `|∂_q U*(t, z(t)⁻) - (n/2) z(t)^{n/2-1}|`, from the series derivative.
    pub fn smooth_fit_residual(&self, t: T) -> Result<T> {
        check_time(t, false)?;
        let tau = T::one() - t;
        let h = self.half_n();
        let left = self.e1 * self.table.psi_derivative(self.z, 1)? * tau.powf(h - T::one());
        let right = h * (self.z * tau).powf(h - T::one());
        Ok((left - right).abs())
    }

    /// `|U*(t, z(t)⁻) - z(t)^{n/2}|` with the continuation branch forced.
    pub fn value_matching_residual(&self, t: T) -> Result<T> {
        check_time(t, false)?;
        let tau = T::one() - t;
        let h = self.half_n();
        let left = self.e1 * tau.powf(h) * self.table.psi(self.z)?;
        Ok((left - (self.z * tau).powf(h)).abs())
    }

    /// `U_t + (α - 2q/(1-t)) U_q + 2q U_qq` on the continuation branch.
    ///
    /// Through the self-similar form this equals
    /// `(1-t)^{n/2-1} E1 [4yψ'' + 2(α - y)ψ' - nψ](y) / 2` at `y = q/(1-t)`.
    pub fn pde_residual(&self, t: T, q: T) -> Result<T> {
        check_time(t, false)?;
        let tau = T::one() - t;
        let y = q / tau;
        let r = self.table.ode_residual(y)?;
        Ok(self.e1 * tau.powf(self.half_n() - T::one()) * r / T::lit(2.0))
    }
}

/// The α = 3, n = 1 constants: `C` and `B = C² / ∫_0^C e^{t²/2} dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcursionSolution<T> {
    pub c: T,
    pub b: T,
}

impl<T: Real> ExcursionSolution<T> {
    pub fn solve() -> Result<Self> {
        let c = find_c_excursion(T::lit(DEFAULT_C_TOL))?.value;
        let b = c * c / gauss_growth_integral(c)?;
        Ok(Self { c, b })
    }

    /// `B` through the alternative identity `2C e^{-C²/2}`.
    pub fn b_from_identity(&self) -> T {
        T::lit(2.0) * self.c * (-self.c * self.c / T::lit(2.0)).exp()
    }

    /// `f(y) = (B / y) ∫_0^y e^{s²/2} ds`, with `f(0) = B`.
    pub fn f(&self, y: T) -> Result<T> {
        check_nonneg("y", y)?;
        if y == T::zero() {
            return Ok(self.b);
        }
        Ok(self.b * gauss_growth_integral(y)? / y)
    }

    /// `f'(y) = (B e^{y²/2} - f(y)) / y`, with `f'(0) = 0`.
    pub fn f_prime(&self, y: T) -> Result<T> {
        check_nonneg("y", y)?;
        if y == T::zero() {
            return Ok(T::zero());
        }
        Ok((self.b * (y * y / T::lit(2.0)).exp() - self.f(y)?) / y)
    }

    /// `f''(y) = (y f - (2 - y²) f') / y`, with `f''(0) = B/3`.
    pub fn f_second(&self, y: T) -> Result<T> {
        check_nonneg("y", y)?;
        if y == T::zero() {
            return Ok(self.b / T::lit(3.0));
        }
        let f = self.f(y)?;
        let fp = self.f_prime(y)?;
        Ok((y * f - (T::lit(2.0) - y * y) * fp) / y)
    }

    /// `V*(t, x)` for the excursion with identity payoff, by direct quadrature.
    pub fn value(&self, t: T, x: T) -> Result<T> {
        check_time(t, false)?;
        check_nonneg("x", x)?;
        let root = (T::one() - t).sqrt();
        if x >= self.c * root {
            return Ok(x);
        }
        Ok(root * self.f(x / root)?)
    }
}

/// `V*` for α = 3, n = 1 via the excursion closed form.
pub fn excursion_value<T: Real>(t: T, x: T) -> Result<T> {
    ExcursionSolution::solve()?.value(t, x)
}

/// `U*(t, q)` from a closed-form family when `(α, n)` admits one; `None` otherwise.
///
/// * `α = n`: `(1-t)^{n/2} n^{n/2} e^{-n/2} e^{q/(2(1-t))}` below `Z = n`.
/// * `n = α - 2` and `n = 2, α > 2`: `H` by quadrature, scaled by value matching
///   at the root of its own smooth-fit condition.
pub fn explicit_special_values<T: Real>(
    params: &ModelParams<T>,
    t: T,
    q: T,
) -> Result<Option<T>> {
    check_time(t, false)?;
    check_nonneg("q", q)?;
    let (alpha, n) = (params.alpha(), params.n());
    let h = n / T::lit(2.0);
    let tau = T::one() - t;
    let y = q / tau;

    if (alpha - n).abs() <= T::lit(1e-12) * alpha.max(n) {
        if q >= n * tau {
            return Ok(Some(q.powf(h)));
        }
        let e1 = n.powf(h) * (-h).exp();
        return Ok(Some(tau.powf(h) * e1 * (y / T::lit(2.0)).exp()));
    }

    let (z, hfun): (T, Box<dyn Fn(T) -> Result<T>>) = match SpecialCase::classify(params) {
        Some(SpecialCase::PowerLaw) => (
            special::root_power_case(n)?,
            Box::new(move |y| special::h_power_law(n, y)),
        ),
        Some(SpecialCase::Quadratic) => (
            special::root_quadratic_case(alpha)?,
            Box::new(move |y| special::h_quadratic(alpha, y)),
        ),
        None => return Ok(None),
    };
    if q >= z * tau {
        return Ok(Some(q.powf(h)));
    }
    let scale = z.powf(h) / hfun(z)?;
    Ok(Some(tau.powf(h) * scale * hfun(y)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const C_REF: f64 = 1.503_395_376_470_781_8;
    // mpmath: 2C e^{-C²/2}
    const B_REF: f64 = 0.971_197_421_093_067_9;

    fn cand(alpha: f64, n: f64) -> CandidateSolution<f64> {
        build_candidate(ModelParams::new(alpha, n).unwrap()).unwrap()
    }

    #[test]
    fn e1_examples() {
        let s = cand(1.0, 1.0);
        assert_relative_eq!(s.z(), 1.0, max_relative = 1e-10);
        assert_relative_eq!(s.e1(), (-0.5f64).exp(), max_relative = 1e-10);
        let s = cand(2.0, 2.0);
        assert_relative_eq!(s.e1(), 2.0 / std::f64::consts::E, max_relative = 1e-10);
        let s = cand(3.0, 1.0);
        assert_relative_eq!(s.e1(), B_REF, max_relative = 1e-10);
        assert_relative_eq!(s.u_star(0.0, 0.0).unwrap(), B_REF, max_relative = 1e-10);
    }

    #[test]
    fn u_star_branches() {
        let s = cand(1.0, 1.0);
        assert_relative_eq!(s.u_star(0.0, 1.0).unwrap(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(s.u_star(0.75, 0.5).unwrap(), 0.5f64.sqrt(), max_relative = 1e-15);
        assert!(s.u_star(1.0, 0.0).is_err());
        assert!(s.u_star(0.5, -1.0).is_err());
        assert_eq!(s.u_star_with_terminal(1.0, 4.0).unwrap(), 2.0);
    }

    #[test]
    fn v_star_examples() {
        let s = cand(3.0, 1.0);
        assert_relative_eq!(s.v_star(0.0, 0.0).unwrap(), B_REF, max_relative = 1e-10);
        assert_eq!(s.v_star(0.0, 2.0).unwrap(), 2.0);
        let t = 0.3;
        let xb = s.boundary_x(t).unwrap();
        assert_relative_eq!(s.v_star(t, xb).unwrap(), xb, max_relative = 1e-12);
    }

    #[test]
    fn boundary_curves() {
        let s = cand(1.0, 1.0);
        assert_relative_eq!(s.boundary_q(0.5).unwrap(), 0.5, max_relative = 1e-10);
        assert_eq!(s.boundary_q(1.0).unwrap(), 0.0);
        assert!(s.boundary_q(1.5).is_err());
        let s = cand(3.0, 1.0);
        assert_relative_eq!(s.boundary_x(0.0).unwrap(), C_REF, max_relative = 1e-10);
    }

    #[test]
    fn excursion_examples() {
        let e = ExcursionSolution::<f64>::solve().unwrap();
        assert_relative_eq!(e.b, B_REF, max_relative = 1e-11);
        assert_relative_eq!(e.b_from_identity(), B_REF, max_relative = 1e-11);
        assert_relative_eq!(excursion_value(0.0, 0.0).unwrap(), B_REF, max_relative = 1e-11);
        assert_relative_eq!(excursion_value(0.0, C_REF).unwrap(), C_REF, max_relative = 1e-9);
        assert_eq!(excursion_value(0.96, 1.0).unwrap(), 1.0);
        let s = cand(3.0, 1.0);
        for &(t, x) in &[(0.0, 0.5), (0.2, 1.0), (0.6, 0.01), (0.9, 0.3)] {
            let a = e.value(t, x).unwrap();
            let b = s.v_star(t, x).unwrap();
            assert!((a - b).abs() < 1e-8, "({t},{x}): {a} vs {b}");
        }
    }

    #[test]
    fn smooth_fit() {
        assert!(cand(1.0, 1.0).smooth_fit_residual(0.0).unwrap() < 1e-12);
        assert!(cand(3.0, 1.0).smooth_fit_residual(0.5).unwrap() < 1e-9);
        let s = cand(2.0, 2.0);
        for t in [0.0, 0.3, 0.9] {
            assert!(s.smooth_fit_residual(t).unwrap() < 1e-12);
        }
    }

    #[test]
    fn explicit_values() {
        let p = |a, n| ModelParams::new(a, n).unwrap();
        let v = explicit_special_values(&p(1.0, 1.0), 0.0, 0.0).unwrap().unwrap();
        assert_relative_eq!(v, (-0.5f64).exp(), max_relative = 1e-14);
        let v = explicit_special_values(&p(3.0, 1.0), 0.0, 0.0).unwrap().unwrap();
        assert_relative_eq!(v, B_REF, max_relative = 1e-10);
        for (a, n) in [(5.0, 3.0), (6.0, 2.0), (2.5, 2.5)] {
            let s = cand(a, n);
            for &(t, q) in &[(0.0, 0.0), (0.25, 1.0), (0.5, 0.7), (0.1, 30.0)] {
                let e = explicit_special_values(&p(a, n), t, q).unwrap().unwrap();
                let u = s.u_star(t, q).unwrap();
                assert!((e - u).abs() < 1e-7, "({a},{n}) at ({t},{q}): {e} vs {u}");
            }
        }
        assert!(explicit_special_values(&p(5.0, 1.0), 0.0, 0.0).unwrap().is_none());
    }
}
