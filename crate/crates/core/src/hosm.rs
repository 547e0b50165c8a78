//! Arbitrary-order sliding-mode controllers for `σ^(r) = ξ − v`, `r = 2..=5`.
//!
//! * quasi-continuous: degree-0 homogeneous ratio `v = α φ/N`, continuous away from the origin;
//! * nested: the `Ψ` recursion `Ψ_i = σ^(i) + β_i N_i sign Ψ_{i−1}`;
//! * adaptive continuous (ACHOSM): finite-time continuous stabilizer `v_σ` on the chain plus a
//!   super-twisting loop on the auxiliary variable `s` whose gains follow an adapted `L(t)`.
//!
//! `derivs` is always `[σ, σ̇, …, σ^(r−1)]`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{pow, sign, spow, sqrt};

fn check_order(r: usize, derivs: &[f64]) -> Result<()> {
    if !(2..=5).contains(&r) {
        return Err(Error::invalid("r", format!("must be in 2..=5, got {r}")));
    }
    if derivs.len() != r {
        return Err(Error::DimensionMismatch {
            what: "derivative stack",
            expected: r,
            got: derivs.len(),
        });
    }
    Ok(())
}

/// Weight of `σ^(i)` under the homogeneity dilation: `r − i`.
pub fn homogeneity_weights(r: usize) -> Vec<f64> {
    (0..r).map(|i| (r - i) as f64).collect()
}

/// Power constants used by the quasi-continuous law of order `r`.
///
/// r = 2..4 list the exponents in order of appearance, inner-most first; r = 5 lists the powers of
/// `σ^(4), σ⃛, σ̈, σ̇, σ`.
pub fn quasi_continuous_exponents(r: usize) -> Result<Vec<f64>> {
    Ok(match r {
        2 => vec![0.5],
        3 => vec![2.0 / 3.0, -0.5, 0.5],
        4 => vec![0.75, -1.0 / 3.0, 2.0 / 3.0, -0.5, 0.5],
        5 => vec![5.0, 2.5, 5.0 / 3.0, 1.25, 1.0],
        _ => return Err(Error::invalid("r", format!("must be in 2..=5, got {r}"))),
    })
}

/// Outer powers of the nested law: `N_{r−1}, …, N_2` exponents `(r−i)/p` followed by `(r−1)/r`
/// on `|σ|` inside `N_1`. For `r = 4` this is `(1/12, 1/6, 3/4)`.
pub fn nested_exponents(r: usize) -> Result<Vec<f64>> {
    if !(2..=5).contains(&r) {
        return Err(Error::invalid("r", format!("must be in 2..=5, got {r}")));
    }
    let p = nested_p(r);
    let mut e: Vec<f64> = (2..r).rev().map(|i| (r - i) as f64 / p).collect();
    e.push((r - 1) as f64 / r as f64);
    Ok(e)
}

/// `v = α φ_r / N_r`; 0 at the origin.
pub fn quasi_continuous(r: usize, derivs: &[f64], alpha: f64) -> Result<f64> {
    check_order(r, derivs)?;
    if derivs.iter().all(|d| *d == 0.0) {
        return Ok(0.0);
    }
    let d = derivs;
    let (num, den) = match r {
        2 => {
            let a = pow(d[0].abs(), 0.5);
            (d[1] + a * sign(d[0]), d[1].abs() + a)
        }
        3 => {
            let a = pow(d[0].abs(), 2.0 / 3.0);
            let m = d[1].abs() + a;
            let inner = if m == 0.0 { 0.0 } else { pow(m, -0.5) * (d[1] + a * sign(d[0])) };
            (d[2] + 2.0 * inner, d[2].abs() + 2.0 * sqrt(m))
        }
        4 => {
            let a = 0.5 * pow(d[0].abs(), 0.75);
            let m = d[1].abs() + a;
            let phi23 = if m == 0.0 {
                d[2]
            } else {
                d[2] + pow(m, -1.0 / 3.0) * (d[1] + a * sign(d[0]))
            };
            let n23 = d[2].abs() + pow(m, 2.0 / 3.0);
            let outer = if n23 == 0.0 { 0.0 } else { phi23 / sqrt(n23) };
            (d[3] + 3.0 * outer, d[3].abs() + 3.0 * sqrt(n23))
        }
        _ => {
            let w = [1.0, 6.0, 5.0, 6.0, 1.0];
            let p = [5.0, 2.5, 5.0 / 3.0, 1.25, 1.0];
            let mut num = 0.0;
            let mut den = 0.0;
            // σ^(4), σ⃛, σ̈, σ̇, σ
            for k in 0..5 {
                let x = d[4 - k];
                num += w[k] * spow(x, p[k]);
                den += w[k] * pow(x.abs(), p[k]);
            }
            (num, den)
        }
    };
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(alpha * num / den)
}

/// Upper bound `C_r` with `|quasi_continuous| ≤ α C_r`. Every numerator term is dominated by its
/// denominator counterpart, so `C_r = 1` for all orders.
pub fn quasi_continuous_bound(_r: usize) -> f64 {
    1.0
}

fn nested_p(r: usize) -> f64 {
    match r {
        2 => 2.0,
        3 => 6.0,
        4 => 12.0,
        _ => 60.0,
    }
}

fn nested_betas(r: usize) -> &'static [f64] {
    match r {
        2 => &[1.0],
        3 => &[1.0, 2.0],
        4 => &[0.5, 1.0, 3.0],
        _ => &[0.5, 1.0, 2.0, 3.0],
    }
}

/// `Ψ_{r−1}` of the nested recursion.
pub fn nested_psi(r: usize, derivs: &[f64]) -> Result<f64> {
    check_order(r, derivs)?;
    let p = nested_p(r);
    let betas = nested_betas(r);
    let mut psi = derivs[0];
    for i in 1..r {
        let sum: f64 = (0..i)
            .map(|j| pow(derivs[j].abs(), p / (r - j) as f64))
            .sum();
        let n = pow(sum, (r - i) as f64 / p);
        psi = derivs[i] + betas[i - 1] * n * sign(psi);
    }
    Ok(psi)
}

/// Nested law in the printed bracket form `v = α Ψ_{r−1}`: the inner switchings are relays, the
/// outer level keeps `σ^(r−1)` and the `β_{r−1} N_{r−1}` level literally. For `r = 4`:
/// `α{σ⃛ + 3(σ̈⁶ + σ̇⁴ + |σ|³)^{1/12} sign[σ̈ + (σ̇⁴ + |σ|³)^{1/6} sign(σ̇ + 0.5|σ|^{3/4} sign σ)]}`.
pub fn nested(r: usize, derivs: &[f64], alpha: f64) -> Result<f64> {
    Ok(alpha * nested_psi(r, derivs)?)
}

/// Fully discontinuous nested law `v = α sign Ψ_{r−1}`.
pub fn nested_relay(r: usize, derivs: &[f64], alpha: f64) -> Result<f64> {
    Ok(alpha * sign(nested_psi(r, derivs)?))
}

/// Exponents `α_1..α_r` of a homogeneous finite-time stabilizer for an `r`-chain:
/// `α_r = kappa`, `α_{i−1} = α_i α_{i+1} / (2α_{i+1} − α_i)`, `α_{r+1} = 1`.
pub fn finite_time_exponents(r: usize, kappa: f64) -> Result<Vec<f64>> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::invalid("kappa", "must lie in (0, 1)"));
    }
    let mut a = vec![0.0; r + 2];
    a[r + 1] = 1.0;
    a[r] = kappa;
    for i in (2..=r).rev() {
        a[i - 1] = a[i] * a[i + 1] / (2.0 * a[i + 1] - a[i]);
    }
    Ok(a[1..=r].to_vec())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AchosmParams {
    pub r: usize,
    /// Gains of `v_σ`, one per derivative.
    pub gammas: Vec<f64>,
    /// Exponents of `v_σ`, one per derivative.
    pub exponents: Vec<f64>,
    pub beta0: f64,
    pub alpha: f64,
    pub eps: f64,
    pub l0: f64,
    pub r0: f64,
    pub gamma: f64,
    pub delta0: f64,
    /// Equivalent-control low-pass time constant.
    pub tau_f: f64,
    pub l_init: f64,
}

impl AchosmParams {
    /// Defaults for order `r`: ITAE gains at unit frequency and finite-time exponents with
    /// `κ = 0.75`.
    pub fn defaults(r: usize) -> Result<Self> {
        let poly = crate::sliding_variable::itae_polynomial(r, 1.0)?;
        // poly = [1, a_1, …, a_r]; σ^(i) gets a_{r−i}
        let gammas = (0..r).map(|i| poly[r - i]).collect();
        Ok(AchosmParams {
            r,
            gammas,
            exponents: finite_time_exponents(r, 0.75)?,
            beta0: 2.0,
            alpha: 0.4,
            eps: 0.01,
            l0: 0.01,
            r0: 0.1,
            gamma: 1.0,
            delta0: 0.05,
            tau_f: 0.05,
            l_init: 0.5,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AchosmState {
    pub p: AchosmParams,
    pub s: f64,
    /// `∫ v_σ`.
    pub vsigma_integral: f64,
    /// `∫ β sign s`.
    pub beta_sign_integral: f64,
    pub l: f64,
    pub r_adapt: f64,
    pub veq: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AchosmStep {
    pub v: f64,
    pub v_sigma: f64,
    pub v_s: f64,
    pub big_l: f64,
    pub lambda: f64,
    pub beta: f64,
    /// Set when `L` was held at `l0`.
    pub clamped: bool,
}

impl AchosmState {
    pub fn new(p: AchosmParams) -> Result<Self> {
        if !(2..=5).contains(&p.r) {
            return Err(Error::invalid("r", format!("must be in 2..=5, got {}", p.r)));
        }
        if p.gammas.len() != p.r || p.exponents.len() != p.r {
            return Err(Error::DimensionMismatch {
                what: "gammas/exponents",
                expected: p.r,
                got: p.gammas.len().min(p.exponents.len()),
            });
        }
        if !(p.beta0 > 1.0) {
            return Err(Error::invalid("beta0", "must exceed 1"));
        }
        if !(p.alpha > 0.0 && p.alpha < 1.0 / p.beta0) {
            return Err(Error::invalid(
                "alpha",
                format!("must satisfy 0 < alpha < 1/beta0 = {}", 1.0 / p.beta0),
            ));
        }
        if !(p.l0 > 0.0) || !(p.r0 > 0.0) || !(p.gamma > 0.0) || !(p.delta0 > 0.0) || !(p.tau_f > 0.0) {
            return Err(Error::invalid("l0/r0/gamma/delta0/tau_f", "must be positive"));
        }
        if p.l_init < 0.0 {
            return Err(Error::invalid("l_init", "must be non-negative"));
        }
        Ok(AchosmState {
            s: 0.0,
            vsigma_integral: 0.0,
            beta_sign_integral: 0.0,
            l: p.l_init,
            r_adapt: 0.0,
            veq: 0.0,
            delta: 0.0,
            p,
        })
    }

    pub fn big_l(&self) -> f64 {
        self.p.l0 + self.l
    }

    pub fn lambda(&self) -> f64 {
        achosm_lambda(self.p.beta0, self.big_l())
    }

    pub fn beta(&self) -> f64 {
        self.p.beta0 * self.big_l()
    }
}

/// `λ = 2 √(2 β0 L)`.
pub fn achosm_lambda(beta0: f64, big_l: f64) -> f64 {
    2.0 * sqrt(2.0 * beta0 * big_l)
}

/// Safety-margin condition `|v̄_eq|/(αβ0) + ε/2 > |v_eq|/β0`.
pub fn safety_margin_holds(veq_bar: f64, veq: f64, alpha: f64, beta0: f64, eps: f64) -> bool {
    veq_bar.abs() / (alpha * beta0) + eps / 2.0 > veq.abs() / beta0
}

/// One control step. Returns `v` for `σ^(r) = ξ − v`: `v = v_σ + v_s` with
/// `s = σ^(r−1) + ∫v_σ` so that `ṡ = ξ − v_s`.
pub fn achosm_step(st: &mut AchosmState, derivs: &[f64], dt: f64) -> Result<AchosmStep> {
    check_order(st.p.r, derivs)?;
    let r = st.p.r;
    let v_sigma: f64 = (0..r)
        .map(|i| st.p.gammas[i] * spow(derivs[i], st.p.exponents[i]))
        .sum();
    let s = derivs[r - 1] + st.vsigma_integral;
    st.s = s;

    let big_l = st.big_l();
    let delta = big_l - st.veq.abs() / (st.p.alpha * st.p.beta0);
    st.delta = delta;
    let rho = st.p.r0 + st.r_adapt;
    let mut l_dot = -rho * sign(delta);
    let mut clamped = false;
    if st.l + l_dot * dt < 0.0 {
        l_dot = -st.l / dt;
        clamped = true;
    }
    let lambda = achosm_lambda(st.p.beta0, big_l);
    let beta = st.p.beta0 * big_l;
    let v_s = s * l_dot / big_l + lambda * sqrt(s.abs()) * sign(s) + st.beta_sign_integral;
    let v = v_sigma + v_s;

    st.vsigma_integral += v_sigma * dt;
    st.beta_sign_integral += beta * sign(s) * dt;
    st.veq += dt / st.p.tau_f * (beta * sign(s) - st.veq);
    st.l += l_dot * dt;
    if clamped {
        st.l = 0.0;
    }
    if delta.abs() > st.p.delta0 {
        st.r_adapt += st.p.gamma * delta.abs() * dt;
    }
    Ok(AchosmStep {
        v,
        v_sigma,
        v_s,
        big_l,
        lambda,
        beta,
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quasi_continuous_examples() {
        for r in 2..=5 {
            assert_eq!(quasi_continuous(r, &vec![0.0; r], 3.0).unwrap(), 0.0);
        }
        assert_relative_eq!(quasi_continuous(2, &[1.0, 0.0], 1.0).unwrap(), 1.0);
        assert_relative_eq!(quasi_continuous(5, &[1.0, 0.0, 0.0, 0.0, 0.0], 2.5).unwrap(), 2.5);
        assert!(quasi_continuous(3, &[1.0, 0.0], 1.0).is_err());
        assert!(quasi_continuous(6, &[0.0; 6], 1.0).is_err());
    }

    #[test]
    fn quasi_continuous_r5_matches_printed_form() {
        let d = [0.3, -1.2, 0.7, 2.0, -0.4];
        let (s, s1, s2, s3, s4) = (d[0], d[1], d[2], d[3], d[4]);
        let sp = |x: f64, p: f64| x.abs().powf(p) * x.signum();
        let num = sp(s4, 5.0) + 6.0 * sp(s3, 2.5) + 5.0 * sp(s2, 5.0 / 3.0) + 6.0 * sp(s1, 1.25) + s;
        let den = s4.abs().powi(5)
            + 6.0 * s3.abs().powf(2.5)
            + 5.0 * s2.abs().powf(5.0 / 3.0)
            + 6.0 * s1.abs().powf(1.25)
            + s.abs();
        assert_relative_eq!(quasi_continuous(5, &d, 1.7).unwrap(), 1.7 * num / den, epsilon = 1e-12);
    }

    #[test]
    fn nested_examples() {
        assert_eq!(nested(4, &[0.0; 4], 1.0).unwrap(), 0.0);
        assert_relative_eq!(nested(4, &[1.0, 0.0, 0.0, 0.0], 1.0).unwrap(), 3.0);
        assert_relative_eq!(nested(2, &[-1.0, 0.0], 2.0).unwrap(), -2.0);
        assert_eq!(nested_relay(4, &[1.0, 0.0, 0.0, 0.0], 5.0).unwrap(), 5.0);
    }

    #[test]
    fn nested_r4_matches_printed_form() {
        let (s, s1, s2, s3) = (0.4_f64, -0.9_f64, 0.3_f64, -0.2_f64);
        let sg = |x: f64| if x == 0.0 { 0.0 } else { x.signum() };
        let inner = s1 + 0.5 * s.abs().powf(0.75) * sg(s);
        let mid = s2 + (s1.powi(4) + s.abs().powi(3)).powf(1.0 / 6.0) * sg(inner);
        let v = 1.3 * (s3 + 3.0 * (s2.powi(6) + s1.powi(4) + s.abs().powi(3)).powf(1.0 / 12.0) * sg(mid));
        assert_relative_eq!(nested(4, &[s, s1, s2, s3], 1.3).unwrap(), v, epsilon = 1e-12);
    }

    #[test]
    fn exponent_tables() {
        let q5 = quasi_continuous_exponents(5).unwrap();
        assert_eq!(q5, vec![5.0, 2.5, 5.0 / 3.0, 1.25, 1.0]);
        let n4 = nested_exponents(4).unwrap();
        assert_relative_eq!(n4[0], 1.0 / 12.0);
        assert_relative_eq!(n4[1], 1.0 / 6.0);
        assert_relative_eq!(n4[2], 0.75);
        assert_eq!(quasi_continuous_exponents(2).unwrap(), vec![0.5]);
        assert!(quasi_continuous_exponents(1).is_err());
        assert_eq!(homogeneity_weights(3), vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn finite_time_exponent_recursion() {
        let a = finite_time_exponents(3, 0.75).unwrap();
        assert_relative_eq!(a[2], 0.75);
        assert_relative_eq!(a[1], 0.6, epsilon = 1e-12);
        assert_relative_eq!(a[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn achosm_gain_formulas() {
        assert_relative_eq!(achosm_lambda(2.0, 2.0), 2.0 * 8.0_f64.sqrt());
        let mut p = AchosmParams::defaults(3).unwrap();
        p.alpha = 0.6;
        assert!(AchosmState::new(p).is_err());
        let mut p = AchosmParams::defaults(3).unwrap();
        p.beta0 = 1.0;
        assert!(AchosmState::new(p).is_err());
        assert!(safety_margin_holds(1.0, 1.0, 0.4, 2.0, 0.01));
    }

    #[test]
    fn achosm_second_layer_grows_when_delta_large() {
        let mut st = AchosmState::new(AchosmParams::defaults(3).unwrap()).unwrap();
        st.veq = 100.0;
        achosm_step(&mut st, &[0.0, 0.0, 0.0], 1e-3).unwrap();
        assert!(st.delta.abs() > st.p.delta0);
        assert!(st.r_adapt > 0.0);
    }

    #[test]
    fn achosm_at_rest_only_integral_persists() {
        let mut st = AchosmState::new(AchosmParams::defaults(3).unwrap()).unwrap();
        st.beta_sign_integral = 0.3;
        let out = achosm_step(&mut st, &[0.0, 0.0, 0.0], 1e-3).unwrap();
        assert_eq!(out.v_sigma, 0.0);
        assert_relative_eq!(out.v_s, 0.3);
    }
}
