//! Integer-order Bessel functions J_n and I_n.
//!
//! Ascending power series where it does not cancel (always for I_n up to
//! |x| = 12, for J_n only while x²/4 ≤ max(1, (n+1)/2)), Miller backward
//! recurrence elsewhere, normalised with the Neumann identities
//! `J₀ + 2ΣJ₂ₖ = 1` and `e^{-x}(I₀ + 2ΣIₖ) = 1`.
//! Target accuracy is 1e-12 for |n| ≤ 64, |x| ≤ 50.

use crate::error::{Error, Result};

const SERIES_LIMIT: f64 = 12.0;
const RESCALE: f64 = 1e250;

/// Bessel function of the first kind, J_n(x).
pub fn bessel_j(order: i32, x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let n = order.unsigned_abs();
    // J_{-n} = (-1)^n J_n,  J_n(-x) = (-1)^n J_n(x)
    let sign = if (order < 0) ^ (x < 0.0) && n % 2 == 1 {
        -1.0
    } else {
        1.0
    };
    let ax = x.abs();
    let v = if ax == 0.0 {
        if n == 0 {
            1.0
        } else {
            0.0
        }
    } else if j_series_converges(n, ax * ax / 4.0) {
        (ax / 2.0).powi(n as i32) * clifford_series(n, -ax * ax / 4.0)
    } else {
        j_miller(n, ax)
    };
    sign * v
}

/// Exponentially scaled modified Bessel function e^{-|x|} I_n(x).
pub fn bessel_i_scaled(order: i32, x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let n = order.unsigned_abs();
    let sign = if x < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
    let ax = x.abs();
    let v = if ax == 0.0 {
        if n == 0 {
            1.0
        } else {
            0.0
        }
    } else if ax <= SERIES_LIMIT {
        (-ax).exp() * (ax / 2.0).powi(n as i32) * clifford_series(n, ax * ax / 4.0)
    } else {
        i_scaled_miller(n, ax)
    };
    sign * v
}

/// Modified Bessel function of the first kind, I_n(x).
///
/// Fails with [`Error::BesselOverflow`] once the value leaves the f64 range
/// (|x| ≳ 713); use [`bessel_i_scaled`] for large arguments.
pub fn bessel_i(order: i32, x: f64) -> Result<f64> {
    let scaled = bessel_i_scaled(order, x);
    let v = scaled * x.abs().exp();
    if v.is_finite() || scaled == 0.0 || x.is_nan() {
        Ok(if scaled == 0.0 { 0.0 } else { v })
    } else {
        Err(Error::BesselOverflow { order, x })
    }
}

/// Bessel–Clifford function C_n(z) = Σ_k z^k / (k! (n+k)!).
///
/// Entire in z, so J_n(x) = (x/2)^n C_n(-x²/4) and I_n(x) = (x/2)^n C_n(x²/4)
/// without any branch choice. Summed directly where the series is benign,
/// otherwise routed through J/I.
pub fn bessel_clifford(n: u32, z: f64) -> f64 {
    let series = if z >= 0.0 {
        z <= SERIES_LIMIT * SERIES_LIMIT / 4.0
    } else {
        j_series_converges(n, -z)
    };
    if series {
        return clifford_series(n, z);
    }
    let y = 2.0 * z.abs().sqrt();
    let scale = (2.0 / y).powi(n as i32);
    if z < 0.0 {
        scale * j_miller(n, y)
    } else {
        // may overflow to inf for huge z, which is the honest answer
        scale * i_scaled_miller(n, y) * y.exp()
    }
}

/// Alternating series loses at most about a factor e² to cancellation here.
fn j_series_converges(n: u32, quarter_x2: f64) -> bool {
    quarter_x2 <= 1.0f64.max((n as f64 + 1.0) / 2.0)
}

fn clifford_series(n: u32, z: f64) -> f64 {
    // first term 1/n!
    let mut term = 1.0;
    for j in 1..=n {
        term /= j as f64;
    }
    let mut sum = term;
    let mut k = 0u32;
    loop {
        k += 1;
        term *= z / (k as f64 * (n + k) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() && (k as f64) > z.abs().sqrt() {
            break;
        }
        if k > 500 {
            break;
        }
    }
    sum
}

fn miller_start(n: u32, x: f64) -> u32 {
    let m = (n as f64).max(x);
    let start = m + 30.0 + (60.0 * m).sqrt();
    let s = start.ceil() as u32;
    s + (s % 2)
}

fn j_miller(n: u32, x: f64) -> f64 {
    let start = miller_start(n, x);
    let two_over_x = 2.0 / x;
    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-300; // J_k, arbitrary seed
    let mut result = 0.0;
    let mut norm = 0.0;
    let mut k = start;
    while k > 0 {
        let prev = k as f64 * two_over_x * cur - next; // J_{k-1}
        next = cur;
        cur = prev;
        k -= 1;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            next /= RESCALE;
            result /= RESCALE;
            norm /= RESCALE;
        }
        if k == n {
            result = cur;
        }
        if k > 0 && k % 2 == 0 {
            norm += 2.0 * cur;
        }
    }
    norm += cur;
    if n == 0 {
        result = cur;
    }
    result / norm
}

fn i_scaled_miller(n: u32, x: f64) -> f64 {
    let start = miller_start(n, x);
    let two_over_x = 2.0 / x;
    let mut next = 0.0;
    let mut cur = 1e-300;
    let mut result = 0.0;
    let mut norm = 0.0;
    let mut k = start;
    while k > 0 {
        let prev = k as f64 * two_over_x * cur + next; // I_{k-1}
        next = cur;
        cur = prev;
        k -= 1;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            next /= RESCALE;
            result /= RESCALE;
            norm /= RESCALE;
        }
        if k == n {
            result = cur;
        }
        if k > 0 {
            norm += 2.0 * cur;
        }
    }
    norm += cur;
    if n == 0 {
        result = cur;
    }
    result / norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn values_at_zero() {
        assert_eq!(bessel_j(0, 0.0), 1.0);
        assert_eq!(bessel_i(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(3, 0.0), 0.0);
        assert_eq!(bessel_i(-2, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn i0_at_one_and_a_half_matches_power_series() {
        // Σ (x²/4)^k/(k!)², fifteen terms is far below 1e-14 at x = 1.5
        let q: f64 = 1.5f64 * 1.5 / 4.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..15 {
            term *= q / (k * k) as f64;
            sum += term;
        }
        assert!((bessel_i(0, 1.5).unwrap() - sum).abs() < 1e-14);
        assert!((sum - 1.646_723_189_772_891).abs() < 1e-14);
    }

    #[test]
    fn branches_agree_at_the_switch() {
        for n in [0u32, 1, 5, 20] {
            let switch = 2.0 * 1.0f64.max((n as f64 + 1.0) / 2.0).sqrt();
            for x in [0.97 * switch, switch, 1.03 * switch] {
                let series = (x / 2.0f64).powi(n as i32) * clifford_series(n, -x * x / 4.0);
                let miller = j_miller(n, x);
                assert!((series - miller).abs() < 1e-13 * miller.abs(), "J n={n} x={x}");
            }
            for x in [11.5f64, 12.0, 12.5] {
                let series_i = (-x).exp() * (x / 2.0f64).powi(n as i32) * clifford_series(n, x * x / 4.0);
                let miller_i = i_scaled_miller(n, x);
                assert!(((series_i - miller_i) / miller_i).abs() < 1e-12, "I n={n} x={x}");
            }
        }
    }

    #[test]
    fn clifford_consistent_with_bessel() {
        for n in [0u32, 1, 3, 10] {
            for y in [0.3, 4.0, 15.0, 30.0] {
                let z = -y * y / 4.0;
                let via_j = bessel_j(n as i32, y) / (y / 2.0f64).powi(n as i32);
                assert!((bessel_clifford(n, z) - via_j).abs() < 1e-12 * via_j.abs().max(1e-3));
                let via_i = bessel_i(n as i32, y).unwrap() / (y / 2.0f64).powi(n as i32);
                assert!(((bessel_clifford(n, -z) - via_i) / via_i).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn overflow_is_reported() {
        assert!(matches!(bessel_i(0, 800.0), Err(Error::BesselOverflow { .. })));
        assert!(bessel_i_scaled(0, 800.0).is_finite());
    }

    proptest! {
        #[test]
        fn j_parity_in_order(n in 0i32..40, x in -50.0f64..50.0) {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            prop_assert_eq!(bessel_j(-n, x), sign * bessel_j(n, x));
        }

        #[test]
        fn j_recurrence(n in 1i32..30, x in 0.5f64..50.0) {
            let lhs = bessel_j(n - 1, x) + bessel_j(n + 1, x);
            let rhs = 2.0 * n as f64 / x * bessel_j(n, x);
            prop_assert!((lhs - rhs).abs() < 1e-11 * (1.0 + rhs.abs()));
        }

        #[test]
        fn i_scaled_recurrence(n in 1i32..30, x in 0.5f64..50.0) {
            let lhs = bessel_i_scaled(n - 1, x) - bessel_i_scaled(n + 1, x);
            let rhs = 2.0 * n as f64 / x * bessel_i_scaled(n, x);
            prop_assert!((lhs - rhs).abs() < 1e-11 * rhs.abs() + 1e-300);
        }
    }
}
