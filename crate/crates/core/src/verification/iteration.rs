//! The coefficient recursions behind `Λ`, their closed forms at `α = 0`, and
//! the inductive bounds used to show `H < 0`.
//!
//! The recursions are generic over any [`Num`] so the bound checks can run in
//! exact rational arithmetic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{Check, VerificationReport};
use crate::error::{Error, Result};

/// Which variables drive the recursion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameterization<T> {
    /// `α = n + 2 + 2γ`.
    Gamma { n: T, gamma: T },
    /// `n = α + 2 + 2δ`.
    Delta { alpha: T, delta: T },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterState<T> {
    pub r: usize,
    pub d: T,
    pub b: T,
}

fn of_usize<T: Num + FromPrimitive>(k: usize) -> T {
    T::from_usize(k).expect("small integer is representable")
}

/// `(D_r, B_r)` for `r = 0..=r_max`, from `D_0 = 1`, `B_0 = -1`.
pub fn iterate_db<T>(form: &Parameterization<T>, r_max: usize) -> Vec<IterState<T>>
where
    T: Num + Clone + FromPrimitive,
{
    let two: T = of_usize(2);
    let mut out = Vec::with_capacity(r_max + 1);
    let (mut d, mut b) = (T::one(), T::zero() - T::one());
    out.push(IterState {
        r: 0,
        d: d.clone(),
        b: b.clone(),
    });
    for r in 0..r_max {
        let rr: T = of_usize(r);
        let (nd, nb) = match form {
            Parameterization::Gamma { n, gamma } => {
                let x = n.clone() + gamma.clone();
                let nd = x.clone() * d.clone() + n.clone() * b.clone();
                let coef = n.clone() + two.clone() * rr + two.clone() + two.clone() * gamma.clone();
                (nd, x * d.clone() + coef * b.clone())
            }
            Parameterization::Delta { alpha, delta } => {
                let x = alpha.clone() + delta.clone();
                let cb = alpha.clone() + two.clone() + two.clone() * delta.clone();
                let nd = x.clone() * d.clone() + cb * b.clone();
                (nd, x * d.clone() + (two.clone() * rr + alpha.clone()) * b.clone())
            }
        };
        d = nd;
        b = nb;
        out.push(IterState {
            r: r + 1,
            d: d.clone(),
            b: b.clone(),
        });
    }
    out
}

/// Coefficients of `D_{0,j}` and `B_{0,j}` in ascending powers of `δ`, `j = 2..=7`.
const TABLE1: [([i64; 8], [i64; 8]); 6] = [
    ([0, 0, 1, 0, 0, 0, 0, 0], [0, 0, -1, 0, 0, 0, 0, 0]),
    ([0, 0, -2, -1, 0, 0, 0, 0], [0, 0, -4, 1, 0, 0, 0, 0]),
    ([0, 0, -8, -8, 1, 0, 0, 0], [0, 0, -24, 4, -1, 0, 0, 0]),
    ([0, 0, -48, -48, -2, -1, 0, 0], [0, 0, -192, 24, -16, 1, 0, 0]),
    ([0, 0, -384, -384, -32, -32, 1, 0], [0, 0, -1920, 192, -208, 8, -1, 0]),
    (
        [0, 0, -3840, -3840, -416, -432, -18, -1],
        [0, 0, -23040, 1920, -2880, 64, -44, 1],
    ),
];

/// Tabulated coefficient vectors for row `j`.
pub fn table1_coefficients(j: usize) -> Result<([i64; 8], [i64; 8])> {
    if !(2..=7).contains(&j) {
        return Err(Error::OutOfRange {
            name: "j",
            value: j as f64,
            lo: 2.0,
            hi: 7.0,
        });
    }
    Ok(TABLE1[j - 2])
}

fn horner<T: Num + Clone + FromPrimitive>(coeffs: &[i64], x: &T) -> T {
    coeffs.iter().rev().fold(T::zero(), |acc, &c| {
        acc * x.clone() + T::from_i64(c).expect("small integer is representable")
    })
}

/// `(D_{0,j}(δ), B_{0,j}(δ))` from the tabulated polynomials.
pub fn table1_polynomials<T: Num + Clone + FromPrimitive>(delta: T, j: usize) -> Result<(T, T)> {
    let (d, b) = table1_coefficients(j)?;
    Ok((horner(&d, &delta), horner(&b, &delta)))
}

type Poly = Vec<BigInt>;

fn poly_trim(mut p: Poly) -> Poly {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

fn poly_add(a: &Poly, b: &Poly) -> Poly {
    let len = a.len().max(b.len());
    (0..len)
        .map(|i| a.get(i).cloned().unwrap_or_default() + b.get(i).cloned().unwrap_or_default())
        .collect()
}

fn poly_scale(a: &Poly, c: i64) -> Poly {
    a.iter().map(|x| x * c).collect()
}

fn poly_shift(a: &Poly) -> Poly {
    std::iter::once(BigInt::zero()).chain(a.iter().cloned()).collect()
}

/// `(D_{0,r}, B_{0,r})` as integer polynomials in `δ`, `r = 0..=r_max`.
pub fn symbolic_alpha_zero(r_max: usize) -> Vec<(Poly, Poly)> {
    let mut d: Poly = vec![BigInt::one()];
    let mut b: Poly = vec![-BigInt::one()];
    let mut out = vec![(d.clone(), b.clone())];
    for r in 0..r_max {
        // D' = δD + (2 + 2δ)B,  B' = δD + 2rB
        let nd = poly_add(&poly_add(&poly_shift(&d), &poly_scale(&b, 2)), &poly_scale(&poly_shift(&b), 2));
        let nb = poly_add(&poly_shift(&d), &poly_scale(&b, 2 * r as i64));
        d = poly_trim(nd);
        b = poly_trim(nb);
        out.push((d.clone(), b.clone()));
    }
    out
}

/// Exact comparison of the tabulated rows against the symbolic recursion,
/// plus a rational-arithmetic spot check at `δ = 1` for `j = 7`.
pub fn table1_report() -> VerificationReport {
    let mut report = VerificationReport::default();
    let sym = symbolic_alpha_zero(7);
    for j in 2..=7 {
        let (dt, bt) = table1_coefficients(j).expect("j in range");
        let as_poly = |c: [i64; 8]| poly_trim(c.iter().map(|&x| BigInt::from(x)).collect());
        report.push(Check::flag(format!("table1[j={j}] D exact"), as_poly(dt) == sym[j].0));
        report.push(Check::flag(format!("table1[j={j}] B exact"), as_poly(bt) == sym[j].1));
    }
    let one = BigRational::one();
    let it = iterate_db(
        &Parameterization::Delta {
            alpha: BigRational::zero(),
            delta: one.clone(),
        },
        7,
    );
    let (d7, b7) = table1_polynomials(one, 7).expect("j in range");
    report.push(Check::flag("table1[j=7] delta=1 rational", d7 == it[7].d && b7 == it[7].b));
    report
}

/// Exact rational from a finite `f64`.
pub fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite input")
}

fn pow(x: &BigRational, k: usize) -> BigRational {
    (0..k).fold(BigRational::one(), |acc, _| acc * x.clone())
}

/// `(bound - value) / max(1, |bound|)` as `f64`; negative means the bound fails.
fn relative_slack(bound: &BigRational, value: &BigRational) -> f64 {
    let scale = bound.abs().max(BigRational::one());
    ((bound - value) / scale).to_f64().unwrap_or(f64::NAN)
}

fn check_params(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value: v,
            reason: "must be positive",
        })
    }
}

/// `D_r <= γ^r` and `B_r <= -γ^r (1 + 2r/γ)` for `r = 0..=r_max`, and
/// `D_{r0+1} < 0` for the least integer `r0 > γ²/(2n)`.
pub fn check_p(n: f64, gamma: f64, r_max: usize) -> Result<VerificationReport> {
    check_params("n", n)?;
    check_params("gamma", gamma)?;
    let (nq, gq) = (exact(n), exact(gamma));
    let r0 = (gamma * gamma / (2.0 * n)).floor() as usize + 1;
    let states = iterate_db(
        &Parameterization::Gamma {
            n: nq,
            gamma: gq.clone(),
        },
        r_max.max(r0 + 1),
    );
    let mut report = VerificationReport::default();
    let two = BigRational::from_integer(2.into());
    for s in states.iter().take(r_max + 1) {
        let gr = pow(&gq, s.r);
        let rr = BigRational::from_integer(s.r.into());
        let b_bound = -(gr.clone() * (BigRational::one() + two.clone() * rr / gq.clone()));
        report.push(Check::slack(format!("P(n={n},gamma={gamma})[r={:02}] D", s.r), relative_slack(&gr, &s.d), 0.0));
        report.push(Check::slack(format!("P(n={n},gamma={gamma})[r={:02}] B", s.r), relative_slack(&b_bound, &s.b), 0.0));
    }
    let d = &states[r0 + 1].d;
    report.push(Check::flag(format!("P(n={n},gamma={gamma}) termination D[{}] < 0", r0 + 1), d.is_negative()));
    Ok(report)
}

/// The odd/even bounds on `(D_{0,r}, B_{0,r})` for `r = 7..=r_max`, and the
/// sign of both at the least odd `r* >= 7` with `2r* > δ`.
///
/// Odd `r`: `D <= -δ^r - 2rδ^{r-1}`, `B <= δ^r - 2rδ^{r-1}`.
/// Even `r`: `D <= δ^r - 4rδ^{r-1}`, `B <= -δ^r`.
pub fn check_q(delta: f64, r_max: usize) -> Result<VerificationReport> {
    check_params("delta", delta)?;
    let dq = exact(delta);
    let mut r_star = 7usize;
    while (2 * r_star) as f64 <= delta {
        r_star += 2;
    }
    let states = iterate_db(
        &Parameterization::Delta {
            alpha: BigRational::zero(),
            delta: dq.clone(),
        },
        r_max.max(r_star),
    );
    let mut report = VerificationReport::default();
    for s in states.iter().take(r_max + 1).skip(7) {
        let r = s.r;
        let top = pow(&dq, r);
        let lower = BigRational::from_integer(r.into()) * pow(&dq, r - 1);
        let (db, bb) = if r % 2 == 1 {
            let two_l = lower.clone() + lower;
            (-top.clone() - two_l.clone(), top - two_l)
        } else {
            let four_l = BigRational::from_integer(4.into()) * lower;
            (top.clone() - four_l, -top)
        };
        report.push(Check::slack(format!("Q(delta={delta})[r={r:02}] D"), relative_slack(&db, &s.d), 0.0));
        report.push(Check::slack(format!("Q(delta={delta})[r={r:02}] B"), relative_slack(&bb, &s.b), 0.0));
    }
    let s = &states[r_star];
    report.push(Check::flag(
        format!("Q(delta={delta}) termination r*={r_star} D, B < 0"),
        s.d.is_negative() && s.b.is_negative(),
    ));
    Ok(report)
}

/// `D_{α,r} <= D_{0,r}`, `B_{α,r} <= B_{0,r}` and `D_{0,r} + B_{0,r} <= 0`
/// for `r = 0..=r_max`.
pub fn check_r(alpha: f64, delta: f64, r_max: usize) -> Result<VerificationReport> {
    check_params("alpha", alpha)?;
    check_params("delta", delta)?;
    let dq = exact(delta);
    let with = iterate_db(
        &Parameterization::Delta {
            alpha: exact(alpha),
            delta: dq.clone(),
        },
        r_max,
    );
    let without = iterate_db(
        &Parameterization::Delta {
            alpha: BigRational::zero(),
            delta: dq,
        },
        r_max,
    );
    let mut report = VerificationReport::default();
    for (a, z) in with.iter().zip(&without) {
        let r = a.r;
        report.push(Check::slack(format!("R(alpha={alpha},delta={delta})[r={r:02}] D"), relative_slack(&z.d, &a.d), 0.0));
        report.push(Check::slack(format!("R(alpha={alpha},delta={delta})[r={r:02}] B"), relative_slack(&z.b, &a.b), 0.0));
        let sum = z.d.clone() + z.b.clone();
        report.push(Check::slack(
            format!("R(alpha={alpha},delta={delta})[r={r:02}] D0+B0"),
            relative_slack(&BigRational::zero(), &sum),
            0.0,
        ));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_terms() {
        let (n, g) = (1.5f64, 0.7f64);
        let s = iterate_db(&Parameterization::Gamma { n, gamma: g }, 2);
        assert!((s[1].d - g).abs() < 1e-15 && (s[1].b + 2.0 + g).abs() < 1e-15);
        assert!((s[2].d - (g * g - 2.0 * n)).abs() < 1e-14);
        assert!((s[2].b + (g * g + 8.0 * g + 2.0 * n + 8.0)).abs() < 1e-13);
        let delta = 2.5f64;
        let s = iterate_db(&Parameterization::Delta { alpha: 0.0, delta }, 1);
        assert_eq!((s[1].d, s[1].b), (-(delta + 2.0), delta));
    }

    #[test]
    fn table_matches_recursion() {
        assert!(table1_report().all_pass());
        assert_eq!(table1_polynomials(3.0, 2).unwrap(), (9.0, -9.0));
        assert_eq!(table1_polynomials(2.0, 3).unwrap(), (-16.0, -8.0));
        assert!(table1_polynomials(1.0, 8).is_err());
        for j in 2..=7 {
            for delta in [0.3f64, 1.0, 4.0] {
                let s = iterate_db(&Parameterization::Delta { alpha: 0.0, delta }, j);
                let (d, b) = table1_polynomials(delta, j).unwrap();
                assert!((d - s[j].d).abs() <= 1e-12 * d.abs().max(1.0));
                assert!((b - s[j].b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn inductive_bounds() {
        for (n, g, r) in [(1.0, 2.0, 40), (0.5, 5.0, 60), (2.0, 1.5, 60)] {
            let rep = check_p(n, g, r).unwrap();
            assert!(rep.all_pass(), "P({n},{g}): {:?}", rep.failures().next());
        }
        for d in [0.1, 1.0, 3.0, 10.0, 30.0, 100.0] {
            let rep = check_q(d, 60).unwrap();
            assert!(rep.all_pass(), "Q({d}): {:?}", rep.failures().next());
        }
        for (a, d) in [(2.0, 1.0), (0.5, 4.0), (0.1, 30.0)] {
            let rep = check_r(a, d, 60).unwrap();
            assert!(rep.all_pass(), "R({a},{d}): {:?}", rep.failures().next());
        }
    }

    #[test]
    fn base_cases() {
        let p = check_p(1.0, 2.0, 0).unwrap();
        assert!(p.checks[0].pass && p.checks[0].margin == 0.0);
        let r = check_r(2.0, 1.0, 0).unwrap();
        assert!(r.checks.iter().all(|c| c.margin == 0.0));
    }

    #[test]
    fn printed_even_bound_is_too_strong() {
        // D_{0,8} <= -δ^8 - 32δ^7 fails for large δ; the sign pattern of the
        // odd case is reversed for even r.
        let delta = exact(100.0);
        let s = iterate_db(&Parameterization::Delta { alpha: BigRational::zero(), delta: delta.clone() }, 8);
        let printed = -pow(&delta, 8) - BigRational::from_integer(32.into()) * pow(&delta, 7);
        assert!(s[8].d > printed);
    }
}
