//! Practical relative degree (PRD) identification from a step response.
//!
//! A step is applied at `τ`, the output is differentiated with one order-`j` robust differentiator
//! per probe, and a performance analyzer inspects each estimate around `τ`:
//!
//! * step score: jump of the estimate across `τ` relative to its amplitude in the window;
//! * slope score: jump of its slope across `τ` relative to the largest slope in the window.
//!
//! A step-like order `j` gives PRD `j`; a slope break at order `j` gives PRD `j + 1`. Lower orders
//! are probed first, so the step criterion wins ties.
//!
//! The analyzer compares averages over an analysis step `h = window / step_ratio` rather than
//! single samples, since a differentiator estimate moves at most `λ_0 L dt` per sample. Each
//! probe's `L` is rescaled from its own output amplitude (`L = κ · max|z_j| / h`) until the
//! amplitude settles.

use alloc::vec;
use alloc::vec::Vec;

use crate::differentiator::{differentiate_trace, DiffConfig, MAX_ORDER};
use crate::error::{Error, Result};
use crate::lti::{poly_mul, LtiPlant, TransferFunction};
use crate::sim::{OpenLoop, Plant, Scenario, SimConfig, StepTrain};

#[derive(Debug, Clone, PartialEq)]
pub struct PrdConfig {
    /// Steep-change threshold.
    pub alpha: f64,
    /// Samples simulated after `τ`.
    pub n_iter: usize,
    /// Input application time.
    pub tau: f64,
    pub dt: f64,
    /// Highest derivative probed (at most 5).
    pub max_order: usize,
    /// Initial differentiator `L`; `None` derives it from the output amplitude in the window.
    pub diff_l: Option<f64>,
    /// Half-width of the analysis window around `τ`.
    pub window: f64,
    /// `window / h`.
    pub step_ratio: usize,
    /// `κ` in the `L` rescaling rule.
    pub l_scale: f64,
    pub refine_passes: usize,
    /// Analysis steps skipped after `τ` to let the differentiator absorb the step.
    pub gap_steps: usize,
    /// Step amplitude of the default Heaviside input.
    pub amplitude: f64,
}

impl Default for PrdConfig {
    fn default() -> Self {
        PrdConfig {
            alpha: 0.1,
            n_iter: 10_000,
            tau: 1.0,
            dt: 1e-4,
            max_order: 5,
            diff_l: None,
            window: 0.25,
            step_ratio: 50,
            l_scale: 10.0,
            refine_passes: 8,
            gap_steps: 1,
            amplitude: 1.0,
        }
    }
}

impl PrdConfig {
    /// Fine time scale for plants with poles up to ~10 rad/s: the analysis step (0.5 ms) must be
    /// short against the fastest dynamics and long against the differentiator's sample-level
    /// chattering, which needs `dt ≈ 1e-6`.
    pub fn fine() -> Self {
        PrdConfig {
            dt: 1e-6,
            window: 0.025,
            tau: 0.05,
            n_iter: 50_000,
            ..PrdConfig::default()
        }
    }
}

/// Guards all-zero traces.
pub const SCORE_FLOOR: f64 = 1e-12;

impl PrdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid("alpha", "must lie in (0, 1)"));
        }
        if !(self.dt > 0.0) || !(self.window > 0.0) {
            return Err(Error::invalid("dt/window", "must be positive"));
        }
        if !(self.tau > self.window) {
            return Err(Error::invalid("tau", "must exceed the analysis window"));
        }
        if (self.n_iter as f64) * self.dt < self.window {
            return Err(Error::invalid("n_iter", "post-step horizon n_iter*dt shorter than the window"));
        }
        if self.max_order == 0 {
            return Err(Error::invalid("max_order", "must be at least 1"));
        }
        if self.max_order > MAX_ORDER {
            return Err(Error::Unsupported(alloc::format!(
                "max_order {} exceeds the highest tabulated differentiator order {MAX_ORDER}",
                self.max_order
            )));
        }
        if self.step_ratio < 2 || !(self.l_scale > 0.0) || self.diff_l.is_some_and(|l| !(l > 0.0)) {
            return Err(Error::invalid("step_ratio/l_scale/diff_l", "step_ratio >= 2, l_scale and diff_l > 0"));
        }
        if self.window / (self.step_ratio as f64) < self.dt {
            return Err(Error::invalid("step_ratio", "analysis step shorter than dt"));
        }
        Ok(())
    }

    fn step_samples(&self) -> usize {
        let h = self.window / self.step_ratio as f64;
        ((h / self.dt).round() as usize).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzerVerdict {
    pub step_score: f64,
    pub slope_score: f64,
    pub step_like: bool,
    pub slope_break: bool,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Scores a uniformly sampled trace (`trace[n]` at `t0 + n dt`) around `tau`.
pub fn performance_analyzer(trace: &[f64], t0: f64, tau: f64, cfg: &PrdConfig) -> Result<AnalyzerVerdict> {
    let dt = cfg.dt;
    let nh = cfg.step_samples();
    let nw = ((cfg.window / dt).round() as usize).max(2 * nh);
    let kt = (tau - t0) / dt;
    let end = t0 + trace.len().saturating_sub(1) as f64 * dt;
    if !(kt >= nw as f64) || (kt.round() as usize) + nw >= trace.len() {
        return Err(Error::WindowOutsideTrace {
            from: tau - cfg.window,
            to: tau + cfg.window,
            start: t0,
            end,
        });
    }
    let k = kt.round() as usize;
    let g = cfg.gap_steps * nh;
    if k + g + 3 * nh >= trace.len() || g + 3 * nh > nw {
        return Err(Error::invalid("gap_steps", "post-step segments do not fit in the window"));
    }
    let m = |a: usize| mean(&trace[a..a + nh]);
    let amp = trace[k - nw..=k + nw].iter().fold(0.0_f64, |a, x| a.max(x.abs()));

    // value just after τ, extrapolated back linearly from two post-gap averages
    let before = m(k - nh);
    let (m1, m2) = (m(k + g), m(k + g + nh));
    let back = g as f64 / nh as f64 + 0.5;
    let jump = m1 - (m2 - m1) * back - before;
    let step_score = jump.abs() / (amp + SCORE_FLOOR);

    // slope just after τ, extrapolated back from two post-gap slopes
    let hs = nh as f64 * dt;
    let slope = |a: usize| (m(a + nh) - m(a)) / hs;
    let slope_before = slope(k - 2 * nh);
    let (s1, s2) = (slope(k + g), slope(k + g + nh));
    let slope_jump = s1 - (s2 - s1) * (back + 0.5) - slope_before;
    let max_slope = (k - nw..=k + nw - 2 * nh)
        .step_by(nh)
        .map(|a| slope(a).abs())
        .fold(0.0_f64, f64::max);
    let slope_score = slope_jump.abs() / (max_slope + SCORE_FLOOR);
    Ok(AnalyzerVerdict {
        step_score,
        slope_score,
        step_like: step_score >= cfg.alpha,
        slope_break: slope_score >= cfg.alpha,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    /// Quasi-discontinuity in derivative `prd`.
    Step,
    /// Slope break in derivative `prd − 1`.
    SlopeBreak,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub order: usize,
    pub big_l: f64,
    pub verdict: AnalyzerVerdict,
    /// Estimate of `y^(order)`.
    pub estimate: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrdReport {
    pub prd: Option<usize>,
    pub criterion: Option<Criterion>,
    pub probes: Vec<Probe>,
    pub t0: f64,
    pub dt: f64,
    pub output: Vec<f64>,
}

impl PrdReport {
    pub fn probe(&self, order: usize) -> Option<&Probe> {
        self.probes.iter().find(|p| p.order == order)
    }
}

fn run_probe(y: &[f64], t0: f64, order: usize, cfg: &PrdConfig) -> Result<Probe> {
    let nh = cfg.step_samples();
    let h = nh as f64 * cfg.dt;
    let k = ((cfg.tau - t0) / cfg.dt).round() as usize;
    let nw = ((cfg.window / cfg.dt).round() as usize).max(2 * nh);
    let mut big_l = match cfg.diff_l {
        Some(l) => l,
        None => {
            // A / W^(j+1): a lower bound on sup |y^(j+1)| for polynomial-like onsets
            let hi = (k + nw).min(y.len() - 1);
            let a = y[k..=hi].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let w = nw as f64 * cfg.dt;
            (cfg.l_scale * a / crate::math::pow(w, (order + 1) as f64)).max(f64::MIN_POSITIVE)
        }
    };
    let mut prev_amp = f64::NAN;
    let mut estimate = Vec::new();
    for _ in 0..cfg.refine_passes.max(1) {
        let diff = DiffConfig::new(order, 0, big_l)?;
        let tr = differentiate_trace(&diff, y, cfg.dt, t0)?;
        estimate = tr.z[order].clone();
        let hi = (k + nw).min(estimate.len() - 1);
        // largest slope between consecutive h-averages after τ: estimates sup |f^(j+1)|, and
        // J/h for a jump J
        let amp = (k..hi.saturating_sub(2 * nh))
            .step_by(nh)
            .map(|a| (mean(&estimate[a + nh..a + 2 * nh]) - mean(&estimate[a..a + nh])).abs() / h)
            .fold(0.0_f64, f64::max);
        if amp <= SCORE_FLOOR {
            break;
        }
        let settled = (amp - prev_amp).abs() <= 0.1 * amp;
        prev_amp = amp;
        if settled {
            break;
        }
        big_l = cfg.l_scale * amp;
    }
    let verdict = performance_analyzer(&estimate, t0, cfg.tau, cfg)?;
    log::debug!(
        "PRD probe order {order}: L = {big_l:.3e}, step {:.3}, slope {:.3}",
        verdict.step_score,
        verdict.slope_score
    );
    Ok(Probe {
        order,
        big_l,
        verdict,
        estimate,
    })
}

/// Identifies the PRD from output samples `y[n]` at `t0 + n dt` of a step experiment at `cfg.tau`.
pub fn identify_prd_samples(y: &[f64], t0: f64, cfg: &PrdConfig) -> Result<PrdReport> {
    cfg.validate()?;
    let mut probes = Vec::new();
    let mut prd = None;
    let mut criterion = None;
    for j in 1..=cfg.max_order {
        let probe = run_probe(y, t0, j, cfg)?;
        let v = probe.verdict;
        probes.push(probe);
        if v.step_like {
            prd = Some(j);
            criterion = Some(Criterion::Step);
            break;
        }
        if v.slope_break {
            prd = Some(j + 1);
            criterion = Some(Criterion::SlopeBreak);
            if j < cfg.max_order {
                probes.push(run_probe(y, t0, j + 1, cfg)?);
            }
            break;
        }
    }
    match prd {
        Some(p) => log::info!("The experimentally determined PRD is equal to {p}"),
        None => log::info!("PRD not found up to order {}", cfg.max_order),
    }
    Ok(PrdReport {
        prd,
        criterion,
        probes,
        t0,
        dt: cfg.dt,
        output: y.to_vec(),
    })
}

/// Simulates `plant` from rest under `input` (default: `amplitude · 1(t − τ)`) and identifies its
/// PRD from output channel 0.
pub fn identify_prd<P: Plant>(plant: P, input: Option<StepTrain>, cfg: &PrdConfig) -> Result<PrdReport> {
    cfg.validate()?;
    if plant.input_dim() != 1 || plant.output_dim() != 1 {
        return Err(Error::Unsupported("PRD identification needs a SISO plant".into()));
    }
    let input = match input {
        Some(i) => i,
        None => StepTrain::new(vec![(cfg.amplitude, cfg.tau)])?,
    };
    let t_end = cfg.tau + cfg.n_iter as f64 * cfg.dt;
    let x0_len = plant.state_dim();
    let x0 = vec![0.0; x0_len];
    let sim = SimConfig::new(0.0, t_end, cfg.dt, 1)?;
    let controller = OpenLoop::new(move |t| input.eval(t));
    let (trace, _) = Scenario::new(plant, controller, x0, sim).run()?;
    // columns: time, states, outputs, controls
    let y = trace.columns()[1 + x0_len].clone();
    identify_prd_samples(&y, 0.0, cfg)
}

/// Transfer-function front end: realizes `tf` in controllable canonical form and probes it.
pub fn identify_prd_tf(tf: &TransferFunction, input: Option<StepTrain>, cfg: &PrdConfig) -> Result<PrdReport> {
    identify_prd(LtiPlant::new(tf)?, input, cfg)
}

/// Random stable minimum-phase system of relative degree `r` with 0–2 real zeros, real poles and
/// zeros in `[−10, −0.5]` and gain magnitude in `[0.5, 5]`. `uniform` must return samples in
/// `[0, 1)`.
pub fn corpus_system(r: usize, mut uniform: impl FnMut() -> f64) -> Result<TransferFunction> {
    if r == 0 {
        return Err(Error::invalid("r", "relative degree must be at least 1"));
    }
    let m = ((uniform() * 3.0) as usize).min(2);
    let mut den = vec![1.0];
    for _ in 0..r + m {
        den = poly_mul(&den, &[1.0, 10.0 - 9.5 * uniform()]);
    }
    let mut num = vec![1.0];
    for _ in 0..m {
        num = poly_mul(&num, &[1.0, 10.0 - 9.5 * uniform()]);
    }
    let k = 0.5 + 4.5 * uniform();
    let k = if uniform() < 0.5 { -k } else { k };
    TransferFunction::new(num.iter().map(|c| c * k).collect(), den)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn heaviside_trace(cfg: &PrdConfig, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let n = ((cfg.tau + cfg.n_iter as f64 * cfg.dt) / cfg.dt) as usize;
        (0..=n).map(|k| f(k as f64 * cfg.dt)).collect()
    }

    #[test]
    fn analyzer_on_heaviside_and_ramp() {
        let cfg = PrdConfig::default();
        let step = heaviside_trace(&cfg, |t| if t >= cfg.tau { 1.0 } else { 0.0 });
        let v = performance_analyzer(&step, 0.0, cfg.tau, &cfg).unwrap();
        assert!(v.step_like);
        assert!((v.step_score - 1.0).abs() < 1e-9);
        let ramp = heaviside_trace(&cfg, |t| 3.0 * t);
        let v = performance_analyzer(&ramp, 0.0, cfg.tau, &cfg).unwrap();
        assert!(!v.step_like && !v.slope_break, "{v:?}");
        let zeros = heaviside_trace(&cfg, |_| 0.0);
        let v = performance_analyzer(&zeros, 0.0, cfg.tau, &cfg).unwrap();
        assert_eq!(v.step_score, 0.0);
    }

    #[test]
    fn analyzer_window_outside_trace() {
        let cfg = PrdConfig::default();
        let short = vec![0.0; 100];
        assert!(matches!(
            performance_analyzer(&short, 0.0, cfg.tau, &cfg),
            Err(Error::WindowOutsideTrace { .. })
        ));
    }

    #[test]
    fn elementary_systems() {
        let cfg = PrdConfig::default();
        let lag = TransferFunction::new(vec![1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(identify_prd_tf(&lag, None, &cfg).unwrap().prd, Some(1));
        let dint = TransferFunction::new(vec![1.0], vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(identify_prd_tf(&dint, None, &cfg).unwrap().prd, Some(2));
    }

    #[test]
    fn config_validation() {
        let mut cfg = PrdConfig::default();
        cfg.max_order = 8;
        assert!(matches!(cfg.validate(), Err(Error::Unsupported(_))));
        let mut cfg = PrdConfig::default();
        cfg.tau = 0.1;
        assert!(cfg.validate().is_err());
    }
}
