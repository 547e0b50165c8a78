//! Robust exact (Levant) differentiators and their filtering variants, Euler-discretized.
//!
//! With `k = nd + nf`, the state is ordered `[w_1 … w_nf, z_0 … z_nd]` and equation `j` reads
//! `ẋ_j = −λ_{k−j} L^{(j+1)/(k+1)} ⌊s⌉^{(k−j)/(k+1)} + next_j`, where `s = w_1` when filtering
//! (`s = z_0 − f` otherwise), `next` of `w_nf` is `z_0 − f`, and the last equation has no `next`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{pow, spow};

/// Highest supported `k = nd + nf`.
pub const MAX_ORDER: usize = 5;

/// `λ_0 … λ_k` for differentiator order `k`.
pub fn coefficient_table(k: usize) -> Result<Vec<f64>> {
    Ok(match k {
        1 => vec![1.1, 1.5],
        2 => vec![1.1, 2.12, 3.0],
        3 => vec![1.1, 3.06, 4.16, 3.0],
        4 => vec![1.1, 4.57, 9.30, 10.03, 5.0],
        5 => vec![1.1, 6.75, 20.26, 32.24, 23.72, 7.0],
        _ => {
            return Err(Error::Unsupported(format!(
                "differentiator order k = {k}; coefficients are tabulated for 1..=5"
            )))
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffConfig {
    pub nd: usize,
    pub nf: usize,
    /// Bound on `|f₀^(nd+1)|`.
    pub big_l: f64,
    pub lambdas: Vec<f64>,
}

impl DiffConfig {
    /// Tabulated coefficients for `k = nd + nf`.
    pub fn new(nd: usize, nf: usize, big_l: f64) -> Result<Self> {
        if nd == 0 {
            return Err(Error::invalid("nd", "differentiation order must be at least 1"));
        }
        let lambdas = coefficient_table(nd + nf)?;
        Self::with_lambdas(nd, nf, big_l, lambdas)
    }

    pub fn with_lambdas(nd: usize, nf: usize, big_l: f64, lambdas: Vec<f64>) -> Result<Self> {
        let k = nd + nf;
        if nd == 0 || k > MAX_ORDER {
            return Err(Error::invalid("nd/nf", format!("need nd >= 1 and nd + nf <= {MAX_ORDER}")));
        }
        if !(big_l > 0.0) || !big_l.is_finite() {
            return Err(Error::invalid("L", format!("must be positive and finite, got {big_l}")));
        }
        if lambdas.len() != k + 1 {
            return Err(Error::DimensionMismatch {
                what: "lambdas",
                expected: k + 1,
                got: lambdas.len(),
            });
        }
        if lambdas.iter().any(|l| !(*l > 0.0)) {
            return Err(Error::invalid("lambdas", "must be strictly positive"));
        }
        Ok(DiffConfig {
            nd,
            nf,
            big_l,
            lambdas,
        })
    }

    pub fn order(&self) -> usize {
        self.nd + self.nf
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffState {
    pub w: Vec<f64>,
    /// `z_0 … z_nd`.
    pub z: Vec<f64>,
}

impl DiffState {
    pub fn zeros(cfg: &DiffConfig) -> Self {
        DiffState {
            w: vec![0.0; cfg.nf],
            z: vec![0.0; cfg.nd + 1],
        }
    }
}

/// One Euler step driven by the sample `f`.
pub fn diff_step(cfg: &DiffConfig, st: &mut DiffState, f: f64, dt: f64) {
    let k = cfg.order();
    let kp1 = (k + 1) as f64;
    let nf = cfg.nf;
    let resid = st.z[0] - f;
    let s = if nf > 0 { st.w[0] } else { resid };
    let state = |j: usize, st: &DiffState| if j < nf { st.w[j] } else { st.z[j - nf] };
    let mut dx = [0.0; MAX_ORDER + 1];
    for (j, d) in dx.iter_mut().enumerate().take(k + 1) {
        let gain = cfg.lambdas[k - j] * pow(cfg.big_l, (j + 1) as f64 / kp1);
        let mut v = -gain * spow(s, (k - j) as f64 / kp1);
        if j + 1 == nf {
            v += resid;
        } else if j < k {
            v += state(j + 1, st);
        }
        *d = v;
    }
    for j in 0..=k {
        if j < nf {
            st.w[j] += dx[j] * dt;
        } else {
            st.z[j - nf] += dx[j] * dt;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffTrace {
    /// `z[i][n]`: estimate of `f₀^(i)` after sample `n`.
    pub z: Vec<Vec<f64>>,
    /// `z_0 − f` at each sample, before the update.
    pub residual: Vec<f64>,
    /// First time after which `|z_0 − f|` stays below `tolerance`.
    pub converged_at: Option<f64>,
    pub tolerance: f64,
}

/// Default convergence tolerance for the residual: `10 L dt^(k+1)`, floored at rounding level of
/// the signal.
pub fn convergence_tolerance(cfg: &DiffConfig, dt: f64, signal_scale: f64) -> f64 {
    let ideal = 10.0 * cfg.big_l * pow(dt, (cfg.order() + 1) as f64);
    ideal.max(1e3 * f64::EPSILON * signal_scale.max(1.0))
}

/// Runs the differentiator over uniformly sampled `samples` from the zero state. `z[i][n]` is the
/// estimate at the time of sample `n` (before it is consumed).
pub fn differentiate_trace(cfg: &DiffConfig, samples: &[f64], dt: f64, t0: f64) -> Result<DiffTrace> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    let mut st = DiffState::zeros(cfg);
    let mut z = vec![Vec::with_capacity(samples.len()); cfg.nd + 1];
    let mut residual = Vec::with_capacity(samples.len());
    for f in samples {
        for (i, zi) in z.iter_mut().enumerate() {
            zi.push(st.z[i]);
        }
        residual.push(st.z[0] - f);
        diff_step(cfg, &mut st, *f, dt);
    }
    let scale = samples.iter().fold(0.0_f64, |m, f| m.max(f.abs()));
    let tolerance = convergence_tolerance(cfg, dt, scale);
    let converged_at = match residual.iter().rposition(|r| !(r.abs() < tolerance)) {
        None if !residual.is_empty() => Some(t0),
        None => None,
        Some(n) if n + 1 < residual.len() => Some(t0 + (n + 1) as f64 * dt),
        Some(_) => None,
    };
    Ok(DiffTrace {
        z,
        residual,
        converged_at,
        tolerance,
    })
}
