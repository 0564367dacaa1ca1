//! Special functions used by the aging and quantization models.

use core::f64::consts::{FRAC_PI_4, PI};

const SERIES_LIMIT: f64 = 14.0;

/// Zeroth-order Bessel function of the first kind.
///
/// Ascending series for `|x| <= 14`, Hankel asymptotic expansion beyond.
/// Absolute error stays below `1e-11` on the real line.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= SERIES_LIMIT {
        j0_series(x)
    } else {
        j0_asymptotic(x)
    }
}

fn j0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let peak = libm::sqrt(q);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while k < 200.0 {
        term *= -q / (k * k);
        sum += term;
        if k > peak && term.abs() < 1e-20 {
            break;
        }
        k += 1.0;
    }
    sum
}

fn j0_asymptotic(x: f64) -> f64 {
    // P and Q series in powers of 1/x, truncated at the smallest term.
    let mut p = 0.0;
    let mut q = 0.0;
    let mut b: f64 = 1.0; // b_m / x^m with b_m = prod_{i<=m} (2i-1)^2 / (m! 8^m)
    let mut prev = f64::INFINITY;
    let mut m = 0u32;
    loop {
        let mag = b.abs();
        if mag > prev || mag < 1e-17 {
            break;
        }
        prev = mag;
        // sign pattern: P = b0 - b2 + b4 - ...; Q = -b1 + b3 - b5 + ...
        match m % 4 {
            0 => p += b,
            1 => q -= b,
            2 => p -= b,
            _ => q += b,
        }
        m += 1;
        let odd = (2 * m - 1) as f64;
        b *= odd * odd / (8.0 * m as f64 * x);
        if m > 200 {
            break;
        }
    }
    let chi = x - FRAC_PI_4;
    libm::sqrt(2.0 / (PI * x)) * (p * libm::cos(chi) - q * libm::sin(chi))
}

/// Standard normal density.
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    libm::exp(-0.5 * x * x) / libm::sqrt(2.0 * PI)
}

/// Standard normal CDF.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Trapezoidal rule on `(1/pi) int_0^pi cos(x sin t) dt`; exponentially
    /// convergent for this periodic integrand.
    fn j0_integral(x: f64) -> f64 {
        let n = 400;
        let h = PI / n as f64;
        let mut s = 0.5 * (libm::cos(0.0) + libm::cos(x * libm::sin(PI)));
        for i in 1..n {
            s += libm::cos(x * libm::sin(i as f64 * h));
        }
        s * h / PI
    }

    #[test]
    fn matches_integral_representation() {
        let mut x = 0.0;
        while x <= 50.0 {
            let err = (bessel_j0(x) - j0_integral(x)).abs();
            assert!(err < 1e-10, "x={x} err={err}");
            x += 0.173;
        }
        for x in [13.99, 14.0, 14.01, 20.0, 35.5, 50.0] {
            assert!((bessel_j0(x) - j0_integral(x)).abs() < 1e-10, "x={x}");
        }
    }

    #[test]
    fn first_zero_and_origin() {
        assert_eq!(bessel_j0(0.0), 1.0);
        assert!(bessel_j0(2.404826).abs() < 1e-6);
        assert!(bessel_j0(-1.3) == bessel_j0(1.3));
    }

    #[test]
    fn bounded_by_one() {
        for i in 0..2000 {
            assert!(bessel_j0(i as f64 * 0.05).abs() <= 1.0);
        }
    }

    #[test]
    fn normal_cdf_symmetry() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(1.3) + normal_cdf(-1.3) - 1.0).abs() < 1e-15);
        assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 1e-12);
    }
}
