//! Bessel function of the first kind, order zero.
//!
//! `J0` enters the geometric factor `g = (J0(a) - 1)/2`, so its accuracy is
//! part of the public contract: absolute error below 1e-10 over the full
//! real line. The implementation uses the Taylor series with compensated
//! summation for `|x| <= 16` and the Hankel asymptotic expansion beyond.

/// Zeroth-order Bessel function of the first kind, |error| < 1e-10.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= 16.0 {
        j0_series(x)
    } else {
        j0_asymptotic(x)
    }
}

/// Taylor series sum_k (-x^2/4)^k / (k!)^2 with Kahan compensation.
///
/// At x = 16 the largest term is ~2e5, so compensated summation keeps the
/// absolute rounding error near 1e-11.
fn j0_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut comp = 0.0_f64;
    for k in 1..200 {
        term *= q / ((k * k) as f64);
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if term.abs() < 1e-18 {
            break;
        }
    }
    sum
}

/// Hankel expansion J0(x) = sqrt(2/(pi x)) [P(x) cos(x - pi/4) - Q(x) sin(x - pi/4)].
///
/// Terms through m = 17; at x = 16 the first omitted term is below 1e-13,
/// and the expansion only improves with larger arguments.
fn j0_asymptotic(x: f64) -> f64 {
    // term_m = prod_{j=1..m} (2j-1)^2 / (m! (8x)^m); even m feed P, odd m feed Q,
    // with signs +,-,+,... inside each series
    let inv = 1.0 / (8.0 * x);
    let mut p = 0.0_f64;
    let mut q = 0.0_f64;
    let mut term = 1.0_f64;
    for m in 0..18u32 {
        if m % 2 == 0 {
            p += if m % 4 == 0 { term } else { -term };
        } else {
            q += if m % 4 == 1 { -term } else { term };
        }
        let odd = (2 * m + 1) as f64;
        term *= odd * odd / ((m + 1) as f64) * inv;
    }
    let chi = x - std::f64::consts::FRAC_PI_4;
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}
