//! Second-order sliding-mode laws for relative degree one: super-twisting and twisting, fixed and
//! adaptive gains.
//!
//! Both act on `σ̇ = ξ − v` (scalar, `u = G0⁻¹ v`). The twisting law is defined on the control
//! derivative, so the loop it closes is `σ̈ = ξ̇ − v̇`; with that orientation the printed law
//! `v̇ = α1 sign σ + α2 sign σ̇` already decreases `σ² + c σ̇²`. `invert` flips the law for plants
//! wired with the opposite input sign.

use crate::error::{Error, Result};
use crate::math::{sign, sqrt};

/// `λ = 1.5 √L̄`, `β = 1.1 L̄`.
pub fn gains_from_lipschitz(l_bar: f64) -> (f64, f64) {
    (1.5 * sqrt(l_bar), 1.1 * l_bar)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StwAdaptation {
    pub gamma: f64,
    pub mu: f64,
    pub lambda_min: f64,
    /// `β = eps_ratio · λ`.
    pub eps_ratio: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StwState {
    pub w: f64,
    pub lambda: f64,
    pub beta: f64,
    pub adaptation: Option<StwAdaptation>,
}

impl StwState {
    pub fn fixed(lambda: f64, beta: f64) -> Result<Self> {
        if !(lambda > 0.0) || !(beta > 0.0) {
            return Err(Error::invalid("lambda/beta", "gains must be positive"));
        }
        Ok(StwState {
            w: 0.0,
            lambda,
            beta,
            adaptation: None,
        })
    }

    /// Adaptive gains starting from `lambda0`; `β` follows `λ`.
    pub fn adaptive(lambda0: f64, a: StwAdaptation) -> Result<Self> {
        if !(a.gamma > 0.0) || !(a.mu > 0.0) {
            return Err(Error::invalid("gamma/mu", "must be positive"));
        }
        if !(a.eps_ratio > 0.0) || !(a.eta > 0.0) || a.lambda_min < 0.0 {
            return Err(Error::invalid("eps_ratio/eta/lambda_min", "eps_ratio, eta > 0 and lambda_min >= 0"));
        }
        if lambda0 < a.lambda_min {
            return Err(Error::invalid("lambda0", "must be at least lambda_min"));
        }
        Ok(StwState {
            w: 0.0,
            lambda: lambda0,
            beta: a.eps_ratio * lambda0,
            adaptation: Some(a),
        })
    }
}

/// `v = λ √|σ| sign σ + w`, then `w += β sign σ · dt`.
pub fn stw_step(st: &mut StwState, sigma: f64, dt: f64) -> f64 {
    let v = st.lambda * sqrt(sigma.abs()) * sign(sigma) + st.w;
    st.w += st.beta * sign(sigma) * dt;
    v
}

/// `λ̇ = γ sign(|σ| − μ)` while `λ > λ_m`, else `λ̇ = η`; then `β = ε λ`. No-op for fixed gains.
pub fn stw_adapt(st: &mut StwState, sigma: f64, dt: f64) {
    let Some(a) = st.adaptation else {
        return;
    };
    let rate = if st.lambda > a.lambda_min {
        a.gamma * sign(sigma.abs() - a.mu)
    } else {
        a.eta
    };
    st.lambda += rate * dt;
    st.beta = a.eps_ratio * st.lambda;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwAdaptation {
    pub gamma1: f64,
    pub mu1: f64,
    pub c: f64,
    pub alpha1_min: f64,
    pub eta1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwState {
    pub v: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub v_max: f64,
    pub invert: bool,
    pub adaptation: Option<TwAdaptation>,
}

/// `α1 + α2 − L̃ > α1 − α2 + L̃` and `α1 − α2 > L̃`.
pub fn twisting_conditions_hold(alpha1: f64, alpha2: f64, l_tilde: f64) -> bool {
    alpha1 + alpha2 - l_tilde > alpha1 - alpha2 + l_tilde && alpha1 - alpha2 > l_tilde
}

impl TwState {
    /// Fixed gains; rejected unless the twisting conditions hold for `l_tilde`.
    pub fn fixed(alpha1: f64, alpha2: f64, v_max: f64, l_tilde: f64) -> Result<Self> {
        if !(v_max > 0.0) {
            return Err(Error::invalid("v_max", "must be positive"));
        }
        if !twisting_conditions_hold(alpha1, alpha2, l_tilde) {
            return Err(Error::invalid(
                "alpha1/alpha2",
                alloc::format!("twisting conditions fail for alpha1={alpha1}, alpha2={alpha2}, L={l_tilde}"),
            ));
        }
        Ok(TwState {
            v: 0.0,
            alpha1,
            alpha2,
            v_max,
            invert: false,
            adaptation: None,
        })
    }

    /// Adaptive gains with `α2 = 0.5 α1`.
    pub fn adaptive(alpha1_0: f64, v_max: f64, a: TwAdaptation) -> Result<Self> {
        if !(v_max > 0.0) {
            return Err(Error::invalid("v_max", "must be positive"));
        }
        if !(a.gamma1 > 0.0) || !(a.mu1 > 0.0) || !(a.c > 0.0) || !(a.eta1 > 0.0) {
            return Err(Error::invalid("gamma1/mu1/c/eta1", "must be positive"));
        }
        Ok(TwState {
            v: 0.0,
            alpha1: alpha1_0,
            alpha2: 0.5 * alpha1_0,
            v_max,
            invert: false,
            adaptation: Some(a),
        })
    }

    pub fn inverted(mut self, invert: bool) -> Self {
        self.invert = invert;
        self
    }

    /// Control-derivative `v̇` at the current state.
    pub fn v_dot(&self, sigma: f64, sigma_dot: f64) -> f64 {
        if self.v.abs() >= self.v_max {
            return -self.v;
        }
        let d = self.alpha1 * sign(sigma) + self.alpha2 * sign(sigma_dot);
        if self.invert {
            -d
        } else {
            d
        }
    }
}

/// Returns the current `v`, then integrates `v̇` over `dt`.
pub fn tw_step(st: &mut TwState, sigma: f64, sigma_dot: f64, dt: f64) -> f64 {
    let v = st.v;
    st.v += st.v_dot(sigma, sigma_dot) * dt;
    v
}

/// `α̇1 = γ1 sign(V − μ1)` while `α1 ≥ α1min`, else `η1`, with `V = σ² + c σ̇²`; `α2 = 0.5 α1`.
pub fn tw_adapt(st: &mut TwState, sigma: f64, sigma_dot: f64, dt: f64) {
    let Some(a) = st.adaptation else {
        return;
    };
    let v = sigma * sigma + a.c * sigma_dot * sigma_dot;
    let rate = if st.alpha1 >= a.alpha1_min {
        a.gamma1 * sign(v - a.mu1)
    } else {
        a.eta1
    };
    st.alpha1 += rate * dt;
    st.alpha2 = 0.5 * st.alpha1;
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn adapt() -> StwAdaptation {
        StwAdaptation {
            gamma: 1.0,
            mu: 0.05,
            lambda_min: 0.1,
            eps_ratio: 0.5,
            eta: 0.2,
        }
    }

    #[test]
    fn stw_examples() {
        let mut st = StwState::fixed(1.5, 1.1).unwrap();
        assert_eq!(stw_step(&mut st, 0.0, 0.01), 0.0);
        assert_eq!(st.w, 0.0);
        st.w = 0.2;
        assert_relative_eq!(stw_step(&mut st, 4.0, 0.01), 3.2);
        assert_relative_eq!(st.w, 0.2 + 1.1 * 0.01);
        assert_eq!(gains_from_lipschitz(1.0), (1.5, 1.1));
    }

    #[test]
    fn stw_adaptation_branches() {
        let mut st = StwState::adaptive(1.0, adapt()).unwrap();
        stw_adapt(&mut st, 0.5, 0.01);
        assert_relative_eq!(st.lambda, 1.01);
        stw_adapt(&mut st, 0.01, 0.01);
        assert_relative_eq!(st.lambda, 1.0);
        st.lambda = 0.1;
        stw_adapt(&mut st, 0.01, 0.01);
        assert_relative_eq!(st.lambda, 0.1 + 0.2 * 0.01);
        assert_eq!(st.beta, 0.5 * st.lambda);
    }

    #[test]
    fn tw_examples() {
        let mut st = TwState::fixed(3.0, 1.5, 10.0, 1.0).unwrap();
        assert_eq!(st.v_dot(1.0, 1.0), 4.5);
        let inv = st.inverted(true);
        assert_eq!(inv.v_dot(1.0, 1.0), -4.5);
        st.v = 20.0;
        let v0 = st.v;
        tw_step(&mut st, 1.0, 1.0, 0.01);
        assert!(st.v < v0);
        assert_relative_eq!(st.v, 20.0 * 0.99);
        assert!(twisting_conditions_hold(3.0, 1.5, 1.0));
        assert!(!twisting_conditions_hold(3.0, 0.5, 1.0));
        assert!(TwState::fixed(3.0, 2.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn tw_adaptation() {
        let a = TwAdaptation {
            gamma1: 2.0,
            mu1: 0.1,
            c: 1.0,
            alpha1_min: 0.5,
            eta1: 0.3,
        };
        let mut st = TwState::adaptive(2.0, 10.0, a).unwrap();
        tw_adapt(&mut st, 1.0, 0.0, 0.01);
        assert_relative_eq!(st.alpha1, 2.02);
        tw_adapt(&mut st, 0.0, 0.1, 0.01);
        assert_relative_eq!(st.alpha1, 2.0);
        st.alpha1 = 0.4;
        tw_adapt(&mut st, 0.0, 0.0, 0.01);
        assert_relative_eq!(st.alpha1, 0.403);
        assert_eq!(st.alpha2, 0.5 * st.alpha1);
    }

    /// Double integrator `σ̈ = −v̇`: the printed orientation converges, the inverted one does not.
    #[test]
    fn tw_orientation_on_double_integrator() {
        let run = |invert: bool| {
            let mut st = TwState::fixed(3.0, 1.5, 100.0, 1.0).unwrap().inverted(invert);
            let (mut s, mut sd, dt) = (1.0, 0.0, 1e-4);
            for _ in 0..100_000 {
                let vd = st.v_dot(s, sd);
                tw_step(&mut st, s, sd, dt);
                s += sd * dt;
                sd += -vd * dt;
            }
            (s, sd)
        };
        let (s, sd) = run(false);
        assert!(s.abs() < 1e-3 && sd.abs() < 0.05, "σ={s}, σ̇={sd}");
        let (s, _) = run(true);
        assert!(s.abs() > 1.0);
    }
}
