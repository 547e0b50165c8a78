//! User-supplied SISO transfer function under a designed sliding variable, with a sigmoid/relay
//! 1-SMC or an adaptive super-twisting law.
//!
//! The error derivatives come from the realization (`y^(k) = C A^k x` below the relative degree),
//! so the loop is free of differentiator effects.

use smc_core::lti::{relative_degree, to_state_space, LtiPlant, StateSpace, TransferFunction};
use smc_core::math::sign;
use smc_core::metrics::average_abs;
use smc_core::sim::{Controller, Plant, Scenario, SimConfig, SimTrace, StepTrain};
use smc_core::sliding_variable::{design_coefficients, SlidingVariableSpec};
use smc_core::smc1::sigmoid;
use smc_core::smc2::{stw_adapt, stw_step, StwState};

use crate::config::CustomSection;
use crate::CliError;

/// Plant with an additive input perturbation.
struct PerturbedPlant {
    inner: LtiPlant,
    perturbation: [f64; 3],
    active: bool,
}

impl PerturbedPlant {
    fn disturbance(&self, t: f64) -> f64 {
        if self.active {
            let [bias, amp, omega] = self.perturbation;
            bias + amp * (omega * t).sin()
        } else {
            0.0
        }
    }
}

impl Plant for PerturbedPlant {
    fn state_dim(&self) -> usize {
        self.inner.state_dim()
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn output_dim(&self) -> usize {
        1
    }

    fn derivative(&self, x: &[f64], u: &[f64], t: f64, dx: &mut [f64]) {
        self.inner.derivative(x, &[u[0] + self.disturbance(t)], t, dx);
    }

    fn output(&self, x: &[f64], t: f64, y: &mut [f64]) {
        self.inner.output(x, t, y);
    }

    fn output_names(&self) -> Vec<String> {
        vec!["y".into()]
    }
}

enum Law {
    Smc1 { rho: f64, eps: f64 },
    Stw(StwState),
}

struct CustomController {
    ss: StateSpace,
    r: usize,
    /// Sign of the high-frequency gain `C A^(r−1) B`.
    b_sign: f64,
    spec: Option<SlidingVariableSpec>,
    command: StepTrain,
    law: Law,
    integral: f64,
    last: [f64; 4],
}

impl Controller for CustomController {
    fn control_dim(&self) -> usize {
        1
    }

    fn control_names(&self) -> Vec<String> {
        vec!["u".into()]
    }

    fn signal_names(&self) -> Vec<String> {
        ["y_cmd", "e", "sigma", "gain"].iter().map(|s| s.to_string()).collect()
    }

    fn signals(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.last);
    }

    fn control(&mut self, t: f64, x: &[f64], _y: &[f64], dt: f64, u: &mut [f64]) -> smc_core::Result<()> {
        let cmd = self.command.eval(t);
        let dy = self.ss.output_derivatives(x, self.r);
        let mut stack: Vec<f64> = dy.iter().map(|v| -v).collect();
        stack[0] += cmd;
        let sigma = match &self.spec {
            Some(spec) => spec.sigma(&stack, self.integral)?,
            None => stack[0],
        };
        let (v, gain) = match &mut self.law {
            Law::Smc1 { rho, eps } => {
                let v = if *eps > 0.0 { sigmoid(sigma, *rho, *eps) } else { *rho * sign(sigma) };
                (v, *rho)
            }
            Law::Stw(st) => {
                let v = stw_step(st, sigma, dt);
                stw_adapt(st, sigma, dt);
                (v, st.lambda)
            }
        };
        // e^(r) = −y^(r) = −(… + b u): u = sign(b) v drives σ̇ against σ
        u[0] = self.b_sign * v;
        self.last = [cmd, stack[0], sigma, gain];
        self.integral += stack[0] * dt;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CustomMetrics {
    pub relative_degree: usize,
    pub j_e: f64,
    pub j_u: f64,
    pub final_abs_error: f64,
}

pub fn run_custom(
    s: &CustomSection,
    controller: &str,
    perturbed: bool,
    sim: (f64, f64, usize),
) -> Result<(SimTrace, CustomMetrics), CliError> {
    let tf = TransferFunction::new(s.num.clone(), s.den.clone())?;
    let r = relative_degree(&tf)?;
    if r == 0 {
        return Err(CliError::Config("custom plant must be strictly proper".into()));
    }
    let ss = to_state_space(&tf)?;
    let b = ss.markov_parameters(r)[r - 1];
    let spec = match r {
        1 => None,
        _ => Some(design_coefficients(r, s.t_settle, s.integral)?),
    };
    let law = match controller {
        "smc1" => {
            if !(s.rho > 0.0) || !(s.eps >= 0.0) {
                return Err(CliError::Config("custom: rho > 0 and eps >= 0 required".into()));
            }
            Law::Smc1 { rho: s.rho, eps: s.eps }
        }
        "stw" => Law::Stw(StwState::adaptive(s.stw.lambda0, s.stw.adaptation())?),
        other => return Err(CliError::Config(format!("unknown custom controller `{other}`"))),
    };
    let command = StepTrain::new(s.command.iter().map(|c| (c[0], c[1])).collect())?;
    let n = ss.order();
    let ctl = CustomController {
        ss,
        r,
        b_sign: sign(b),
        spec,
        command,
        law,
        integral: 0.0,
        last: [0.0; 4],
    };
    let plant = PerturbedPlant {
        inner: LtiPlant::new(&tf)?,
        perturbation: s.perturbation,
        active: perturbed,
    };
    let cfg = SimConfig::new(0.0, sim.0, sim.1, sim.2)?;
    let (trace, _) = Scenario::new(plant, ctl, vec![0.0; n], cfg).run()?;
    let col = |name: &str| trace.column(name).expect("custom trace columns");
    let metrics = CustomMetrics {
        relative_degree: r,
        j_e: average_abs(trace.time(), col("e"))?,
        j_u: average_abs(trace.time(), col("u"))?,
        final_abs_error: col("e").last().copied().unwrap_or(0.0).abs(),
    };
    Ok((trace, metrics))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_plant_tracks_its_step() {
        let s = CustomSection::default();
        for ctl in ["smc1", "stw"] {
            let (_, m) = run_custom(&s, ctl, true, (10.0, 1e-4, 10)).unwrap();
            assert_eq!(m.relative_degree, 2);
            assert!(m.final_abs_error < 0.02, "{ctl}: {m:?}");
        }
    }

    #[test]
    fn first_order_plant_uses_the_error() {
        let s = CustomSection {
            num: vec![3.0],
            den: vec![1.0, 2.0],
            ..CustomSection::default()
        };
        let (_, m) = run_custom(&s, "smc1", true, (5.0, 1e-4, 10)).unwrap();
        assert_eq!(m.relative_degree, 1);
        assert!(m.final_abs_error < 0.02, "{m:?}");
    }
}
