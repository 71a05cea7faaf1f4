//! Complementary error function in forms that stay finite for large arguments.

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;
const CF_THRESHOLD: f64 = 4.0;

pub fn erfc(z: f64) -> f64 {
    libm::erfc(z)
}

/// Scaled complementary error function `exp(z^2) erfc(z)` for `z >= 0`.
///
/// Below the threshold the product is formed directly; above it the
/// Laplace continued fraction is evaluated with the modified Lentz method.
pub fn erfcx(z: f64) -> f64 {
    debug_assert!(z >= 0.0 || z.is_nan());
    if z < CF_THRESHOLD {
        return (z * z).exp() * libm::erfc(z);
    }
    // erfc(z) = exp(-z^2)/sqrt(pi) * 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
    const TINY: f64 = 1e-300;
    let mut f = z;
    let mut c = z;
    let mut d = 0.0;
    for n in 1..500 {
        let a = 0.5 * n as f64;
        d = z + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = z + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    FRAC_1_SQRT_PI / f
}

/// `ln erfc(z)` for any finite `z`, without underflow.
pub fn ln_erfc(z: f64) -> f64 {
    if z < 0.0 {
        // erfc(z) lies in (1, 2]
        libm::erfc(z).ln()
    } else {
        erfcx(z).ln() - z * z
    }
}

/// `exp(-z^2) / erfc(z)` for any finite `z`.
pub fn gauss_over_erfc(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / erfcx(z)
    } else {
        (-z * z).exp() / libm::erfc(z)
    }
}

/// Numerically stable `ln(1 + e^s)`.
pub fn softplus(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}
