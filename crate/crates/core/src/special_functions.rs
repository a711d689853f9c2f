//! Modified Bessel functions of orders zero and one.
//!
//! Every routine is built from three kernels:
//!
//! * the ascending power series (I for `x <= 20`, K for `x <= 2`),
//! * Steed's continued fraction for K on `2 < x <= 25`,
//! * the Hankel asymptotic expansion above those thresholds.
//!
//! The kernels work with the exponentially scaled functions `e^{-x} I_n(x)`
//! and `e^{x} K_n(x)`, so products such as `I_1(x) K_1(x)` stay representable
//! far beyond the point where the unscaled factors overflow.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Largest argument accepted by the unscaled [`bessel_i`].
pub const I_OVERFLOW_LIMIT: f64 = 700.0;

const I_SERIES_MAX: f64 = 20.0;
const K_SERIES_MAX: f64 = 2.0;
const K_FRACTION_MAX: f64 = 25.0;

/// Order of a modified Bessel function. Only orders 0 and 1 are supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BesselOrder {
    Zero,
    One,
}

impl BesselOrder {
    pub fn as_u32(self) -> u32 {
        match self {
            BesselOrder::Zero => 0,
            BesselOrder::One => 1,
        }
    }
}

impl TryFrom<u32> for BesselOrder {
    type Error = Error;

    fn try_from(order: u32) -> Result<Self> {
        match order {
            0 => Ok(BesselOrder::Zero),
            1 => Ok(BesselOrder::One),
            n => Err(Error::Domain {
                what: "bessel order",
                value: f64::from(n),
                expected: "order 0 or 1",
            }),
        }
    }
}

/// `I_n(x)` for `0 <= x <= 700`.
pub fn bessel_i(order: BesselOrder, x: f64) -> Result<f64> {
    check_nonnegative("bessel_i", x)?;
    if x > I_OVERFLOW_LIMIT {
        return Err(Error::Overflow {
            what: "bessel_i",
            value: x,
            limit: I_OVERFLOW_LIMIT,
        });
    }
    if x <= I_SERIES_MAX {
        return Ok(i_series(order, x));
    }
    Ok(i_scaled_unchecked(order, x) * x.exp())
}

/// `K_n(x)` for `x > 0`. Underflows gracefully to zero for very large `x`.
pub fn bessel_k(order: BesselOrder, x: f64) -> Result<f64> {
    check_positive("bessel_k", x)?;
    if x <= K_SERIES_MAX {
        return Ok(k_series(order, x));
    }
    Ok(k_scaled_unchecked(order, x) * (-x).exp())
}

/// Exponentially scaled `e^{-x} I_n(x)`, valid for every `x >= 0`.
pub fn bessel_i_scaled(order: BesselOrder, x: f64) -> Result<f64> {
    check_nonnegative("bessel_i_scaled", x)?;
    Ok(i_scaled_unchecked(order, x))
}

/// Exponentially scaled `e^{x} K_n(x)`, valid for every `x > 0`.
pub fn bessel_k_scaled(order: BesselOrder, x: f64) -> Result<f64> {
    check_positive("bessel_k_scaled", x)?;
    Ok(k_scaled_unchecked(order, x))
}

/// `K_1(x) I_0(x) + I_1(x) K_0(x) - 1/x`, which vanishes identically.
///
/// Evaluated from the scaled kernels so the exponentials cancel exactly.
pub fn wronskian_defect(x: f64) -> Result<f64> {
    check_positive("wronskian_defect", x)?;
    let (i0, i1) = (i0e(x), i1e(x));
    let (k0, k1) = (k0e(x), k1e(x));
    Ok(k1 * i0 + i1 * k0 - x.recip())
}

fn check_nonnegative(what: &'static str, x: f64) -> Result<()> {
    if x >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value: x,
            expected: "x >= 0",
        })
    }
}

fn check_positive(what: &'static str, x: f64) -> Result<()> {
    if x > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value: x,
            expected: "x > 0",
        })
    }
}

pub(crate) fn i_scaled_unchecked(order: BesselOrder, x: f64) -> f64 {
    if x <= I_SERIES_MAX {
        i_series(order, x) * (-x).exp()
    } else {
        i_asymptotic_scaled(order, x)
    }
}

pub(crate) fn k_scaled_unchecked(order: BesselOrder, x: f64) -> f64 {
    if x <= K_SERIES_MAX {
        k_series(order, x) * x.exp()
    } else if x <= K_FRACTION_MAX {
        let (k0, k1) = k_steed_scaled(x);
        match order {
            BesselOrder::Zero => k0,
            BesselOrder::One => k1,
        }
    } else {
        k_asymptotic_scaled(order, x)
    }
}

#[inline]
pub(crate) fn i0e(x: f64) -> f64 {
    i_scaled_unchecked(BesselOrder::Zero, x)
}

#[inline]
pub(crate) fn i1e(x: f64) -> f64 {
    i_scaled_unchecked(BesselOrder::One, x)
}

#[inline]
pub(crate) fn k0e(x: f64) -> f64 {
    k_scaled_unchecked(BesselOrder::Zero, x)
}

#[inline]
pub(crate) fn k1e(x: f64) -> f64 {
    k_scaled_unchecked(BesselOrder::One, x)
}

/// `I_n(x) = sum_m (x/2)^{2m+n} / (m! (m+n)!)`; all terms positive.
pub(crate) fn i_series(order: BesselOrder, x: f64) -> f64 {
    let n = f64::from(order.as_u32());
    let q = 0.25 * x * x;
    let mut term = if order == BesselOrder::Zero { 1.0 } else { 0.5 * x };
    let mut sum = term;
    for m in 1..500 {
        let m = f64::from(m);
        term *= q / (m * (m + n));
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Ascending series for `K_0` and `K_1`, accurate for small arguments.
pub(crate) fn k_series(order: BesselOrder, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let log_half = (0.5 * x).ln();
    match order {
        BesselOrder::Zero => {
            // K0 = -(ln(x/2) + gamma) I0 + sum_{k>=1} H_k q^k / (k!)^2
            let mut term = 1.0;
            let mut harmonic = 0.0;
            let mut sum = 0.0;
            for k in 1..200 {
                let kf = f64::from(k);
                term *= q / (kf * kf);
                harmonic += 1.0 / kf;
                let add = harmonic * term;
                sum += add;
                if add <= 1e-17 * sum.abs() {
                    break;
                }
            }
            -(log_half + EULER_GAMMA) * i_series(BesselOrder::Zero, x) + sum
        }
        BesselOrder::One => {
            // K1 = 1/x + ln(x/2) I1 - (x/4) sum_{k>=0} (psi(k+1) + psi(k+2)) q^k / (k! (k+1)!)
            let mut term = 1.0;
            let mut h_k = 0.0;
            let mut h_k1 = 1.0;
            let mut sum = (h_k - EULER_GAMMA) + (h_k1 - EULER_GAMMA);
            for k in 1..200 {
                let kf = f64::from(k);
                term *= q / (kf * (kf + 1.0));
                h_k += 1.0 / kf;
                h_k1 += 1.0 / (kf + 1.0);
                let add = (h_k + h_k1 - 2.0 * EULER_GAMMA) * term;
                sum += add;
                if add.abs() <= 1e-17 * sum.abs() {
                    break;
                }
            }
            x.recip() + log_half * i_series(BesselOrder::One, x) - 0.25 * x * sum
        }
    }
}

/// Steed's continued-fraction method (Temme's CF2) returning
/// `(e^x K_0(x), e^x K_1(x))`. Converges quickly for `x >= 2`.
fn k_steed_scaled(x: f64) -> (f64, f64) {
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..10_000 {
        let fi = f64::from(i);
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    h *= a1;
    let k0 = (PI / (2.0 * x)).sqrt() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}

/// Hankel expansion coefficients share the recursion
/// `a_k = a_{k-1} (4n^2 - (2k-1)^2) / (8 k x)`.
fn hankel_sum(order: BesselOrder, x: f64, alternating: bool) -> f64 {
    let mu = 4.0 * f64::from(order.as_u32()).powi(2);
    let mut term = 1.0_f64;
    let mut sum = 1.0;
    for k in 1..200 {
        let kf = f64::from(k);
        let odd = 2.0 * kf - 1.0;
        let mut next = term * (mu - odd * odd) / (8.0 * kf * x);
        if alternating {
            next = -next;
        }
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn i_asymptotic_scaled(order: BesselOrder, x: f64) -> f64 {
    hankel_sum(order, x, true) / (2.0 * PI * x).sqrt()
}

fn k_asymptotic_scaled(order: BesselOrder, x: f64) -> f64 {
    hankel_sum(order, x, false) * (PI / (2.0 * x)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use BesselOrder::{One, Zero};

    // Reference values from 40-digit arbitrary precision evaluation.
    const TABLE: [(f64, f64, f64, f64, f64); 8] = [
        (1e-3, 1.000000250000015625, 5.000000625000026e-4, 7.023688800562381, 999.9962381560856),
        (0.5, 1.0634833707413235, 0.2578943053908963, 0.9244190712276659, 1.6564411200033009),
        (1.0, 1.2660658777520084, 0.5651591039924850, 0.4210244382407083, 0.6019072301972346),
        (2.0, 2.2795853023360673, 1.5906368546373291, 0.11389387274953344, 0.13986588181652243),
        (5.0, 27.239871823604447, 24.335642142450527, 3.6910983340425943e-3, 4.044613445452164e-3),
        (10.0, 2815.716628466254, 2670.988303701255, 1.7780062316167652e-5, 1.8648773453825585e-5),
        (20.0, 43558282.55955353, 42454973.38512777, 5.741237815336524e-10, 5.883057969557038e-10),
        (50.0, 2.9325537838493363e20, 2.9030785901035568e20, 3.4101677497894955e-23, 3.4441022267175556e-23),
    ];

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn origin_values() {
        assert_eq!(bessel_i(Zero, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_i(One, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn i0_at_one_matches_series_oracle() {
        let oracle: f64 = (0..40)
            .map(|m| {
                let fact: f64 = (1..=m).map(f64::from).product();
                0.5_f64.powi(2 * m) / (fact * fact)
            })
            .sum();
        assert!(rel(bessel_i(Zero, 1.0).unwrap(), oracle) < 1e-15);
        assert!(rel(oracle, 1.2660658777520084) < 1e-15);
    }

    #[test]
    fn reference_table() {
        for &(x, i0, i1, k0, k1) in &TABLE {
            let tol_i = if x <= 50.0 { 1e-13 } else { 1e-11 };
            assert!(rel(bessel_i(Zero, x).unwrap(), i0) < tol_i, "I0({x})");
            assert!(rel(bessel_i(One, x).unwrap(), i1) < tol_i, "I1({x})");
            assert!(rel(bessel_k(Zero, x).unwrap(), k0) < 1e-12, "K0({x})");
            assert!(rel(bessel_k(One, x).unwrap(), k1) < 1e-12, "K1({x})");
        }
    }

    #[test]
    fn large_argument_scaled_values() {
        // x = 600: I0 = 6.146305403936845e258, K0 = 1.3558285309948524e-262
        let x = 600.0_f64;
        let i0 = 6.146_305_403_936_845e258 * (-x).exp();
        let k0 = 1.355_828_530_994_852_4e-262 * x.exp();
        assert!(rel(bessel_i_scaled(Zero, x).unwrap(), i0) < 1e-11);
        assert!(rel(bessel_k_scaled(Zero, x).unwrap(), k0) < 1e-12);
        assert!(rel(bessel_i(Zero, x).unwrap(), 6.146_305_403_936_845e258) < 1e-11);
    }

    #[test]
    fn domain_and_overflow_errors() {
        assert!(matches!(bessel_i(Zero, -1.0), Err(Error::Domain { .. })));
        assert!(matches!(bessel_i(One, 701.0), Err(Error::Overflow { .. })));
        assert!(matches!(bessel_k(Zero, 0.0), Err(Error::Domain { .. })));
        assert!(matches!(bessel_k(One, -2.0), Err(Error::Domain { .. })));
        assert!(matches!(bessel_i(Zero, f64::NAN), Err(Error::Domain { .. })));
        assert!(matches!(wronskian_defect(0.0), Err(Error::Domain { .. })));
        assert!(BesselOrder::try_from(2).is_err());
        assert_eq!(BesselOrder::try_from(1).unwrap(), One);
    }

    #[test]
    fn k1_diverges_like_inverse_x() {
        for &x in &[1e-3, 1e-5, 1e-8] {
            let k1 = bessel_k(One, x).unwrap();
            assert!((k1 * x - 1.0).abs() < 10.0 * x * x.ln().abs().max(1.0));
        }
        let k = bessel_k(One, 50.0).unwrap();
        assert!(k > 0.0 && k < 1e-20);
    }

    #[test]
    fn wronskian_examples() {
        assert!(wronskian_defect(1.0).unwrap().abs() <= 1e-12);
        assert!(wronskian_defect(10.0).unwrap().abs() <= 1e-13);
        assert!(wronskian_defect(0.01).unwrap().abs() <= 1e-10 * 100.0);
    }

    fn steed(order: BesselOrder, x: f64) -> f64 {
        let (k0, k1) = k_steed_scaled(x);
        if order == Zero { k0 } else { k1 }
    }

    #[test]
    fn branch_seams_agree() {
        for order in [Zero, One] {
            let x = K_SERIES_MAX;
            assert!(rel(steed(order, x), k_series(order, x) * x.exp()) < 1e-12);
            let x = K_FRACTION_MAX;
            assert!(rel(steed(order, x), k_asymptotic_scaled(order, x)) < 1e-12);
            let x = I_SERIES_MAX;
            assert!(rel(i_series(order, x) * (-x).exp(), i_asymptotic_scaled(order, x)) < 1e-12);
        }
    }

    #[test]
    fn wronskian_log_grid() {
        let n = 1000;
        let (lo, hi) = (1e-3_f64.ln(), 600_f64.ln());
        for j in 0..n {
            let x = (lo + (hi - lo) * j as f64 / (n - 1) as f64).exp();
            let d = wronskian_defect(x).unwrap();
            assert!((d * x).abs() <= 1e-11, "x = {x}: {d:e}");
        }
    }

    #[test]
    fn monotone_on_grid() {
        let xs: Vec<f64> = (1..=400).map(|j| 0.05 * j as f64).collect();
        for w in xs.windows(2) {
            let (a, b) = (w[0], w[1]);
            assert!(bessel_i(Zero, b).unwrap() > bessel_i(Zero, a).unwrap());
            assert!(bessel_i(One, b).unwrap() > bessel_i(One, a).unwrap());
            assert!(bessel_k(Zero, b).unwrap() < bessel_k(Zero, a).unwrap());
            assert!(bessel_k(One, b).unwrap() < bessel_k(One, a).unwrap());
        }
    }

    #[test]
    fn derivative_identities_by_central_differences() {
        let h = 1e-6;
        for j in 1..=60 {
            let x = 0.1 * j as f64;
            let di0 = (bessel_i(Zero, x + h).unwrap() - bessel_i(Zero, x - h).unwrap()) / (2.0 * h);
            let dk0 = (bessel_k(Zero, x + h).unwrap() - bessel_k(Zero, x - h).unwrap()) / (2.0 * h);
            assert!((di0 - bessel_i(One, x).unwrap()).abs() < 1e-7, "I0' at {x}");
            assert!((dk0 + bessel_k(One, x).unwrap()).abs() < 1e-7, "K0' at {x}");
        }
    }
}
