//! Scalar helpers shared by the control laws and differentiators.

/// Signum with `sign(0) = 0`.
#[inline]
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Signed power `|x|^p sign(x)`; `p = 0` gives `sign(x)`.
#[inline]
pub fn spow(x: f64, p: f64) -> f64 {
    if p == 0.0 {
        sign(x)
    } else if x == 0.0 {
        0.0
    } else {
        libm::pow(x.abs(), p) * sign(x)
    }
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn pow(x: f64, p: f64) -> f64 {
    libm::pow(x, p)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

/// Rounds half away from zero.
#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

/// Euclidean norm.
pub fn norm(v: &[f64]) -> f64 {
    sqrt(v.iter().map(|x| x * x).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_of_zero_is_zero() {
        assert_eq!(sign(0.0), 0.0);
        assert_eq!(sign(-0.0), 0.0);
        assert_eq!(sign(3.0), 1.0);
        assert_eq!(sign(-1e-300), -1.0);
    }

    #[test]
    fn signed_power() {
        assert_eq!(spow(-8.0, 1.0 / 3.0), -2.0);
        assert_eq!(spow(4.0, 0.5), 2.0);
        assert_eq!(spow(-4.0, 0.0), -1.0);
        assert_eq!(spow(0.0, 0.5), 0.0);
    }
}
