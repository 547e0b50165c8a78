//! First-order sliding-mode control: unit-vector, componentwise relay and sigmoid (quasi-SMC)
//! laws, plus simple and double-layer gain adaptation.
//!
//! All laws compute a virtual control `v` from the sliding variable and map it to the plant input
//! with `u = G0⁻¹ v`, where `σ̇ = ξ − G0 u`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::math::{norm, sign};

/// Condition number above which `G0` is rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Precomputed `G0⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputGain {
    inv: DMatrix<f64>,
}

impl InputGain {
    /// Inverts `G0`, rejecting singular or ill-conditioned matrices (1-norm condition number).
    pub fn from_g0(g0: DMatrix<f64>) -> Result<Self> {
        if !g0.is_square() {
            return Err(Error::DimensionMismatch {
                what: "G0 columns",
                expected: g0.nrows(),
                got: g0.ncols(),
            });
        }
        let inv = g0
            .clone()
            .try_inverse()
            .ok_or(Error::IllConditioned { condition: f64::INFINITY })?;
        let condition = one_norm(&g0) * one_norm(&inv);
        if !condition.is_finite() || condition > MAX_CONDITION {
            return Err(Error::IllConditioned { condition });
        }
        Ok(InputGain { inv })
    }

    /// Uses `inv` directly as `G0⁻¹`.
    pub fn from_inverse(inv: DMatrix<f64>) -> Self {
        InputGain { inv }
    }

    pub fn identity(n: usize) -> Self {
        InputGain {
            inv: DMatrix::identity(n, n),
        }
    }

    /// Scalar channel with `G0⁻¹ = g0_inv`.
    pub fn scalar(g0_inv: f64) -> Self {
        InputGain {
            inv: DMatrix::from_element(1, 1, g0_inv),
        }
    }

    pub fn dim(&self) -> usize {
        self.inv.nrows()
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inv
    }

    /// `u = G0⁻¹ v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let u = &self.inv * DVector::from_column_slice(v);
        u.iter().copied().collect()
    }
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn check_dim(sigma: &[f64], g: &InputGain) -> Result<()> {
    if sigma.len() != g.dim() {
        return Err(Error::DimensionMismatch {
            what: "sliding variable",
            expected: g.dim(),
            got: sigma.len(),
        });
    }
    Ok(())
}

/// `u = G0⁻¹ ρ0 σ/‖σ‖`, zero on the manifold.
pub fn unit_vector_control(sigma: &[f64], g: &InputGain, rho0: f64) -> Result<Vec<f64>> {
    check_dim(sigma, g)?;
    let n = norm(sigma);
    if n == 0.0 {
        return Ok(vec![0.0; sigma.len()]);
    }
    let v: Vec<f64> = sigma.iter().map(|s| rho0 * s / n).collect();
    Ok(g.apply(&v))
}

/// `u = G0⁻¹ R SIGN(σ)` with `R = diag(rho)`.
pub fn sign_control(sigma: &[f64], g: &InputGain, rho: &[f64]) -> Result<Vec<f64>> {
    check_dim(sigma, g)?;
    check_dim(rho, g)?;
    let v: Vec<f64> = sigma.iter().zip(rho).map(|(s, r)| r * sign(*s)).collect();
    Ok(g.apply(&v))
}

/// Componentwise quasi-SMC: `sign(σ_i)` replaced by `σ_i / (|σ_i| + ε_i)`.
pub fn sigmoid_control(sigma: &[f64], g: &InputGain, rho: &[f64], eps: &[f64]) -> Result<Vec<f64>> {
    check_dim(sigma, g)?;
    check_dim(rho, g)?;
    check_dim(eps, g)?;
    if let Some(e) = eps.iter().find(|e| !(**e > 0.0)) {
        return Err(Error::invalid("eps", format!("smoothing widths must be positive, got {e}")));
    }
    let v: Vec<f64> = sigma
        .iter()
        .zip(rho)
        .zip(eps)
        .map(|((s, r), e)| r * s / (s.abs() + e))
        .collect();
    Ok(g.apply(&v))
}

/// Unit-vector quasi-SMC: `σ/‖σ‖` replaced by `σ / (‖σ‖ + ε0)`.
pub fn unit_vector_sigmoid_control(sigma: &[f64], g: &InputGain, rho0: f64, eps0: f64) -> Result<Vec<f64>> {
    check_dim(sigma, g)?;
    if !(eps0 > 0.0) {
        return Err(Error::invalid("eps0", "must be positive"));
    }
    let n = norm(sigma);
    let v: Vec<f64> = sigma.iter().map(|s| rho0 * s / (n + eps0)).collect();
    Ok(g.apply(&v))
}

/// Scalar sigmoid `ρ σ / (|σ| + ε)`.
#[inline]
pub fn sigmoid(sigma: f64, rho: f64, eps: f64) -> f64 {
    rho * sigma / (sigma.abs() + eps)
}

/// Gains for the componentwise relay with simple adaptation.
#[derive(Debug, Clone, PartialEq)]
pub struct Smc1Gains {
    pub rho: Vec<f64>,
    pub gamma: Vec<f64>,
    pub delta: Vec<f64>,
}

impl Smc1Gains {
    pub fn new(rho: Vec<f64>, gamma: Vec<f64>, delta: Vec<f64>) -> Result<Self> {
        if gamma.len() != rho.len() || delta.len() != rho.len() {
            return Err(Error::DimensionMismatch {
                what: "adaptation parameters",
                expected: rho.len(),
                got: gamma.len().min(delta.len()),
            });
        }
        if rho.iter().any(|r| *r < 0.0) {
            return Err(Error::invalid("rho", "gains must be non-negative"));
        }
        if gamma.iter().chain(&delta).any(|p| !(*p > 0.0)) {
            return Err(Error::invalid("gamma/delta", "must be positive"));
        }
        Ok(Smc1Gains { rho, gamma, delta })
    }
}

/// `ρ̇_i = γ_i |σ_i|` while `|σ_i| > δ_i`, else 0; one Euler step.
pub fn adapt_gain_simple(gains: &mut Smc1Gains, sigma: &[f64], dt: f64) {
    for (i, s) in sigma.iter().enumerate() {
        if s.abs() > gains.delta[i] {
            gains.rho[i] += gains.gamma[i] * s.abs() * dt;
        }
    }
}

/// Unit-vector form: `ρ̇0 = γ0 ‖σ‖` while `‖σ‖ > δ0`.
pub fn adapt_gain_unit(rho0: f64, gamma0: f64, delta0: f64, sigma: &[f64], dt: f64) -> f64 {
    let n = norm(sigma);
    if n > delta0 {
        rho0 + gamma0 * n * dt
    } else {
        rho0
    }
}

/// Two-layer adaptation of the unit-vector gain with equivalent-control estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleLayerState {
    /// First-layer gain.
    pub k: f64,
    /// Second-layer adaptive component of `ρ = r0 + r`.
    pub r: f64,
    pub eta: f64,
    pub eps: f64,
    pub alpha: f64,
    pub r0: f64,
    pub gamma: f64,
    pub delta0: f64,
    /// Equivalent-control low-pass time constant.
    pub tau_f: f64,
    pub veq: Vec<f64>,
    /// Last computed `δ`.
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleLayerParams {
    pub k0: f64,
    pub eta: f64,
    pub eps: f64,
    pub alpha: f64,
    pub r0: f64,
    pub gamma: f64,
    pub delta0: f64,
    pub tau_f: f64,
}

impl DoubleLayerState {
    pub fn new(dim: usize, p: DoubleLayerParams) -> Result<Self> {
        if !(p.alpha > 0.0 && p.alpha < 1.0) {
            return Err(Error::invalid("alpha", format!("must lie in (0, 1), got {}", p.alpha)));
        }
        if !(p.r0 > 0.0) {
            return Err(Error::invalid("r0", "must be positive"));
        }
        if !(p.eps > 0.0) || !(p.gamma > 0.0) || !(p.delta0 > 0.0) || !(p.tau_f > 0.0) {
            return Err(Error::invalid("eps/gamma/delta0/tau_f", "must be positive"));
        }
        if p.eta < 0.0 || p.k0 < 0.0 {
            return Err(Error::invalid("eta/k0", "must be non-negative"));
        }
        Ok(DoubleLayerState {
            k: p.k0,
            r: 0.0,
            eta: p.eta,
            eps: p.eps,
            alpha: p.alpha,
            r0: p.r0,
            gamma: p.gamma,
            delta0: p.delta0,
            tau_f: p.tau_f,
            veq: vec![0.0; dim],
            delta: 0.0,
        })
    }

    pub fn rho(&self) -> f64 {
        self.r0 + self.r
    }

    pub fn gain(&self) -> f64 {
        self.k + self.eta
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleLayerStep {
    /// Effective gain `k + η` applied over this step.
    pub gain: f64,
    /// Set when `k` was driven below zero and clamped.
    pub clamped: bool,
}

/// Advances the two-layer adaptation by one step given the previously applied virtual control.
pub fn double_layer_step(st: &mut DoubleLayerState, v_prev: &[f64], dt: f64) -> DoubleLayerStep {
    let gain = st.gain();
    let a = dt / st.tau_f;
    for (f, v) in st.veq.iter_mut().zip(v_prev) {
        *f += a * (v - *f);
    }
    let delta = st.k - norm(&st.veq) / st.alpha - st.eps;
    st.delta = delta;
    let rho = st.rho();
    st.k -= rho * sign(delta) * dt;
    if delta.abs() > st.delta0 {
        st.r += st.gamma * delta.abs() * dt;
    }
    let clamped = st.k < 0.0;
    if clamped {
        st.k = 0.0;
    }
    DoubleLayerStep { gain, clamped }
}

/// Unit-vector control with the two-layer gain: `v = (k + η) σ/‖σ‖`. Returns `(u, v, step)`.
pub fn double_layer_control(
    st: &mut DoubleLayerState,
    sigma: &[f64],
    g: &InputGain,
    v_prev: &[f64],
    dt: f64,
) -> Result<(Vec<f64>, Vec<f64>, DoubleLayerStep)> {
    check_dim(sigma, g)?;
    let step = double_layer_step(st, v_prev, dt);
    let n = norm(sigma);
    let v: Vec<f64> = if n == 0.0 {
        vec![0.0; sigma.len()]
    } else {
        sigma.iter().map(|s| step.gain * s / n).collect()
    };
    Ok((g.apply(&v), v, step))
}

/// Row sums `Σ_j |g̃_ij|` of the normalized input-gain uncertainty; the adaptive laws assume
/// every row sum stays below some `γ < 1`.
pub fn uncertainty_row_sums(delta_g: &DMatrix<f64>) -> Vec<f64> {
    delta_g
        .row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum())
        .collect()
}

/// Logs a warning when the input-gain uncertainty is not diagonally dominated; returns the worst
/// row sum.
pub fn check_uncertainty(delta_g: &DMatrix<f64>) -> f64 {
    let worst = uncertainty_row_sums(delta_g).into_iter().fold(0.0, f64::max);
    if worst >= 1.0 {
        log::warn!("input-gain uncertainty row sum {worst} >= 1; relay gains may not dominate");
    }
    worst
}
