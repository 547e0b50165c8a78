//! Sliding-variable design by ITAE pole placement and online evaluation.
//!
//! For relative degree `r` the sliding variable is
//! `σ = e^(r−1) + c_{r−2} e^(r−2) + … + c_0 e + c_int ∫e`.
//! On `σ ≡ 0` the error obeys the characteristic polynomial
//! `s^r + c_{r−2} s^(r−1) + … + c_0 s + c_int` (or its order-`r−1` truncation without the
//! integral term), whose coefficients are read off the normalized ITAE polynomial of that order
//! with natural frequency `ω_n = 10 / t_settle`.
//!
//! The order 3–5 rows come from the standard ITAE table; only the order-2 row is pinned by
//! published designs (t_s = 2, 5, 8 s).

use alloc::vec::Vec;
use alloc::{format, vec};

use crate::error::{Error, Result};
use crate::lti::is_hurwitz;
use crate::math::pow;

/// Normalized ITAE polynomial coefficients (descending powers, leading 1, `ω = 1`).
const ITAE: [&[f64]; 5] = [
    &[1.0, 1.0],
    &[1.0, 1.4, 1.0],
    &[1.0, 1.75, 2.15, 1.0],
    &[1.0, 2.1, 3.4, 2.7, 1.0],
    &[1.0, 2.8, 5.0, 5.5, 3.4, 1.0],
];

/// Settling-time rule: `ω_n = 10 / t_settle`.
pub fn natural_frequency(t_settle: f64) -> f64 {
    10.0 / t_settle
}

/// ITAE polynomial of `order` (1..=5) scaled to natural frequency `omega`.
pub fn itae_polynomial(order: usize, omega: f64) -> Result<Vec<f64>> {
    if !(1..=5).contains(&order) {
        return Err(Error::invalid("order", format!("ITAE table covers 1..=5, got {order}")));
    }
    Ok(ITAE[order - 1]
        .iter()
        .enumerate()
        .map(|(k, a)| a * pow(omega, k as f64))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlidingVariableSpec {
    r: usize,
    /// `c_0 .. c_{r−2}` in ascending derivative order.
    coeffs: Vec<f64>,
    c_int: f64,
    t_settle: f64,
}

impl SlidingVariableSpec {
    /// Builds a spec from explicit coefficients (`coeffs[j]` multiplies `e^(j)`).
    pub fn from_coefficients(coeffs: Vec<f64>, c_int: f64, t_settle: f64) -> Result<Self> {
        let spec = SlidingVariableSpec {
            r: coeffs.len() + 1,
            coeffs,
            c_int,
            t_settle,
        };
        if !is_hurwitz(&spec.characteristic_polynomial()) {
            return Err(Error::invalid(
                "coeffs",
                "characteristic polynomial of the sliding manifold is not Hurwitz",
            ));
        }
        Ok(spec)
    }

    pub fn relative_degree(&self) -> usize {
        self.r
    }

    /// `c_j` multiplying `e^(j)`, `j = 0..r−2`.
    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn integral_coefficient(&self) -> f64 {
        self.c_int
    }

    pub fn t_settle(&self) -> f64 {
        self.t_settle
    }

    /// Error dynamics on the manifold, descending powers of `s`.
    pub fn characteristic_polynomial(&self) -> Vec<f64> {
        let mut p = vec![1.0];
        p.extend(self.coeffs.iter().rev());
        if self.c_int != 0.0 {
            p.push(self.c_int);
        }
        p
    }

    /// `σ` for the error stack `[e, ė, …, e^(r−1)]` and the current error integral.
    pub fn sigma(&self, error_stack: &[f64], integral: f64) -> Result<f64> {
        if error_stack.len() != self.r {
            return Err(Error::DimensionMismatch {
                what: "error stack",
                expected: self.r,
                got: error_stack.len(),
            });
        }
        let mut s = error_stack[self.r - 1] + self.c_int * integral;
        for (c, e) in self.coeffs.iter().zip(error_stack) {
            s += c * e;
        }
        Ok(s)
    }
}

/// Designs sliding-variable coefficients for relative degree `r` (2..=5) and settling time.
pub fn design_coefficients(r: usize, t_settle: f64, with_integral: bool) -> Result<SlidingVariableSpec> {
    if !(2..=5).contains(&r) {
        return Err(Error::invalid("r", format!("must be in 2..=5, got {r}")));
    }
    if !(t_settle > 0.0) || !t_settle.is_finite() {
        return Err(Error::invalid("t_settle", format!("must be positive, got {t_settle}")));
    }
    let omega = natural_frequency(t_settle);
    let order = if with_integral { r } else { r - 1 };
    let poly = itae_polynomial(order, omega)?;
    // poly = [1, p1, ..., p_order]; drop the leading 1 and map onto c_{r−2} .. c_0 [, c_int]
    let tail = &poly[1..];
    let (coeff_desc, c_int) = if with_integral {
        (&tail[..r - 1], tail[r - 1])
    } else {
        (tail, 0.0)
    };
    let coeffs: Vec<f64> = coeff_desc.iter().rev().copied().collect();
    SlidingVariableSpec::from_coefficients(coeffs, c_int, t_settle)
}

/// Running error integral for one control channel (rectangle rule).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SigmaAccumulator {
    pub integral: f64,
    pub last_sigma: f64,
}

impl SigmaAccumulator {
    pub fn with_integral(integral: f64) -> Self {
        SigmaAccumulator {
            integral,
            last_sigma: 0.0,
        }
    }
}

/// Evaluates `σ` with the accumulated integral, then advances the integral by `e · dt`.
pub fn eval_sigma(
    spec: &SlidingVariableSpec,
    error_stack: &[f64],
    acc: &mut SigmaAccumulator,
    dt: f64,
) -> Result<f64> {
    let sigma = spec.sigma(error_stack, acc.integral)?;
    acc.integral += error_stack[0] * dt;
    acc.last_sigma = sigma;
    Ok(sigma)
}
