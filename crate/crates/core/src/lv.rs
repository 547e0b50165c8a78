//! Launch-vehicle pitch attitude in ascent: actuator, rigid body and one bending mode, with PD,
//! continuous (sigmoid) 1-SMC and adaptive super-twisting autopilots.
//!
//! Angles, the gimbal `β` and the control `u_θ` share one unit (degrees); the perturbation is added
//! to `u_θ` at the actuator input.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::differentiator::{diff_step, DiffConfig, DiffState};
use crate::error::{Error, Result};
use crate::lti::{tf_parallel, to_state_space, StateSpace, TransferFunction};
use crate::math::{sin, sqrt};
use crate::metrics::average_abs;
use crate::sim::{Controller, Plant, Scenario, SimConfig, SimTrace, StepTrain};
use crate::smc1::sigmoid;
use crate::smc2::{stw_adapt, stw_step, StwAdaptation, StwState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LvParams {
    pub inertia: f64,
    pub c_n_alpha: f64,
    pub q_bar: f64,
    pub s_ref: f64,
    pub l_a: f64,
    pub s_n: f64,
    pub v: f64,
    pub l_g: f64,
    pub thrust: f64,
    pub g_bar: f64,
    pub mass: f64,
    pub i_n: f64,
    pub omega_e: f64,
    pub zeta_e: f64,
    pub tau_a: f64,
    pub omega_b: f64,
    pub zeta_b: f64,
    pub phi_g: f64,
    pub psi_g: f64,
    pub psi_s: f64,
}

impl Default for LvParams {
    fn default() -> Self {
        LvParams {
            inertia: 1.355e8,
            c_n_alpha: 8.0,
            q_bar: 4880.0,
            s_ref: 9.2,
            l_a: 15.24,
            s_n: 135.58,
            v: 457.2,
            l_g: 22.86,
            thrust: 0.4535e6,
            g_bar: 18.29,
            mass: 21.89e4,
            i_n: 1355.8,
            omega_e: 12.0,
            zeta_e: 0.5,
            tau_a: 0.2,
            omega_b: 12.5,
            zeta_b: 0.005,
            phi_g: -0.0005,
            psi_g: 0.0001,
            psi_s: 0.0001,
        }
    }
}

impl LvParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("inertia", self.inertia),
            ("c_n_alpha", self.c_n_alpha),
            ("q_bar", self.q_bar),
            ("s_ref", self.s_ref),
            ("l_a", self.l_a),
            ("l_g", self.l_g),
            ("thrust", self.thrust),
            ("omega_e", self.omega_e),
            ("zeta_e", self.zeta_e),
            ("tau_a", self.tau_a),
            ("omega_b", self.omega_b),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid("lv params", format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    /// `C_Nα q̄ S l_a`.
    pub fn aero_moment(&self) -> f64 {
        self.c_n_alpha * self.q_bar * self.s_ref * self.l_a
    }

    /// Rigid body `θ/β`.
    pub fn g1(&self) -> Result<TransferFunction> {
        TransferFunction::new(
            vec![-(self.l_g * self.s_n + self.i_n), 0.0, -self.l_g * self.thrust],
            vec![self.inertia, 0.0, -self.aero_moment()],
        )
    }

    /// Servo lag times engine pendulum, `β/u`.
    pub fn actuator(&self) -> Result<TransferFunction> {
        let w2 = self.omega_e * self.omega_e;
        let den = crate::lti::poly_mul(&[self.tau_a, 1.0], &[1.0, 2.0 * self.zeta_e * self.omega_e, w2]);
        TransferFunction::new(vec![w2], den)
    }

    /// Bending mode `θ/β` at the sensor.
    pub fn bending(&self) -> Result<TransferFunction> {
        let wb = self.omega_b;
        TransferFunction::new(
            vec![
                self.psi_s * (self.s_n * self.phi_g - self.i_n * self.psi_g),
                0.0,
                self.psi_s * self.thrust * self.phi_g,
            ],
            vec![1.0, 2.0 * self.zeta_b * wb, wb * wb],
        )
    }

    /// `G_a (G_1 + G_b)`.
    pub fn open_loop(&self) -> Result<TransferFunction> {
        Ok(crate::lti::tf_series(&tf_parallel(&self.g1()?, &self.bending()?), &self.actuator()?))
    }
}

/// `f_θ = 0.2 + 0.1 sin 0.1t`.
pub fn lv_perturbation(t: f64) -> f64 {
    0.2 + 0.1 * sin(0.1 * t)
}

/// Actuator and body realized separately so the gimbal angle stays observable.
#[derive(Debug, Clone, PartialEq)]
pub struct LvPlant {
    pub actuator: StateSpace,
    pub body: StateSpace,
    pub perturbed: bool,
}

impl LvPlant {
    pub fn new(p: &LvParams, perturbed: bool) -> Result<Self> {
        p.validate()?;
        let actuator = to_state_space(&p.actuator()?)?;
        let body = to_state_space(&tf_parallel(&p.g1()?, &p.bending()?))?;
        Ok(LvPlant {
            actuator,
            body,
            perturbed,
        })
    }

    pub fn order(&self) -> usize {
        self.actuator.order() + self.body.order()
    }

    fn split<'a>(&self, x: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        x.split_at(self.actuator.order())
    }

    /// Gimbal angle `β` (the actuator is strictly proper).
    pub fn beta(&self, x: &[f64]) -> f64 {
        self.actuator.output(self.split(x).0, 0.0)
    }

    pub fn theta(&self, x: &[f64]) -> f64 {
        let (_, xb) = self.split(x);
        self.body.output(xb, self.beta(x))
    }

    /// `θ̇` from the state and the current actuator input.
    pub fn theta_dot(&self, x: &[f64], u_total: f64) -> f64 {
        let (xa, xb) = self.split(x);
        let mut dxa = vec![0.0; xa.len()];
        self.actuator.derivative(xa, u_total, &mut dxa);
        let beta_dot = self.actuator.output(&dxa, 0.0);
        let mut dxb = vec![0.0; xb.len()];
        self.body.derivative(xb, self.beta(x), &mut dxb);
        self.body.output(&dxb, 0.0) + self.body.d * beta_dot
    }

    pub fn input_total(&self, u: f64, t: f64) -> f64 {
        if self.perturbed {
            u + lv_perturbation(t)
        } else {
            u
        }
    }
}

impl Plant for LvPlant {
    fn state_dim(&self) -> usize {
        self.order()
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn output_dim(&self) -> usize {
        2
    }

    fn derivative(&self, x: &[f64], u: &[f64], t: f64, dx: &mut [f64]) {
        let na = self.actuator.order();
        let beta = self.beta(x);
        let (xa, xb) = self.split(x);
        let (dxa, dxb) = dx.split_at_mut(na);
        self.actuator.derivative(xa, self.input_total(u[0], t), dxa);
        self.body.derivative(xb, beta, dxb);
    }

    fn output(&self, x: &[f64], _t: f64, y: &mut [f64]) {
        y[0] = self.theta(x);
        y[1] = self.beta(x);
    }

    fn state_names(&self) -> Vec<String> {
        let na = self.actuator.order();
        (0..self.order())
            .map(|i| if i < na { format!("xa{i}") } else { format!("xb{}", i - na) })
            .collect()
    }

    fn output_names(&self) -> Vec<String> {
        vec![String::from("theta"), String::from("beta")]
    }
}

/// `u = −(k_p e + k_d ė)`: the vehicle's negative high-frequency gain makes the printed
/// `H(s) = k_p + k_d s` stabilizing only with this polarity.
pub fn pd_control(kp: f64, kd: f64, e: f64, e_dot: f64) -> f64 {
    -(kp * e + kd * e_dot)
}

/// `u = −(ρ + L̄) σ/(|σ| + ε)`.
pub fn lv_smc_control(sigma: f64, rho: f64, l_bar: f64, eps: f64) -> f64 {
    -sigmoid(sigma, rho + l_bar, eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LvControllerKind {
    Pd,
    #[default]
    Smc1,
    Stw,
}

impl LvControllerKind {
    pub fn name(self) -> &'static str {
        match self {
            LvControllerKind::Pd => "pd",
            LvControllerKind::Smc1 => "smc1",
            LvControllerKind::Stw => "stw",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "pd" => Some(LvControllerKind::Pd),
            "smc1" | "smc1-continuous" => Some(LvControllerKind::Smc1),
            "stw" | "stw-adaptive" => Some(LvControllerKind::Stw),
            _ => None,
        }
    }
}

/// Where `ė_θ` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RateSource {
    /// Second-order differentiator on `θ` with the given `L`; `ė = −ż₁` between command steps.
    Differentiator { big_l: f64 },
    /// Exact `θ̇` from the plant state.
    #[default]
    Model,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LvScenario {
    pub params: LvParams,
    pub controller: LvControllerKind,
    pub perturbed: bool,
    pub command: StepTrain,
    pub t_end: f64,
    pub dt: f64,
    pub record_stride: usize,
    pub kp: f64,
    pub kd: f64,
    /// `σ = ė + c1 e + c0 ∫e`.
    pub c1: f64,
    pub c0: f64,
    pub rho: f64,
    pub l_bar: f64,
    pub eps: f64,
    pub stw_lambda0: f64,
    pub stw: StwAdaptation,
    pub rate: RateSource,
    /// `∫e` accumulates only while `|σ| ≤ integral_window` (SMC and STW); infinite restores the
    /// literal integral.
    pub integral_window: f64,
}

impl Default for LvScenario {
    fn default() -> Self {
        LvScenario {
            params: LvParams::default(),
            controller: LvControllerKind::Smc1,
            perturbed: true,
            command: StepTrain::lv_pitch_command(),
            t_end: 30.0,
            dt: 1e-4,
            record_stride: 10,
            kp: 1.87,
            kd: 2.13,
            c1: 1.75,
            c0: 1.5625,
            rho: 0.45,
            l_bar: 4.0,
            eps: 0.1,
            stw_lambda0: 0.5,
            stw: StwAdaptation {
                gamma: 0.5,
                mu: 0.5,
                lambda_min: 0.1,
                eps_ratio: 0.1,
                eta: 0.5,
            },
            rate: RateSource::Differentiator { big_l: 5.0 },
            integral_window: 0.05,
        }
    }
}

impl LvScenario {
    pub fn with_controller(mut self, kind: LvControllerKind) -> Self {
        self.controller = kind;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        SimConfig::new(0.0, self.t_end, self.dt, self.record_stride)?;
        if !(self.rho > 0.0) || !(self.eps > 0.0) || !(self.l_bar >= 0.0) {
            return Err(Error::invalid("rho/eps/l_bar", "rho, eps > 0 and l_bar >= 0 required"));
        }
        if !(self.integral_window >= 0.0) {
            return Err(Error::invalid("integral_window", "must be non-negative"));
        }
        Ok(())
    }
}

enum LvLaw {
    Pd,
    Smc1,
    Stw(StwState),
}

/// Signals: command, error, error rate, `σ`, and the adaptive `λ`, `β` (zero unless STW).
pub struct LvController {
    sc: LvScenario,
    plant: LvPlant,
    law: LvLaw,
    diff: Option<(DiffConfig, DiffState)>,
    integral: f64,
    u_prev: f64,
    last: [f64; 6],
}

impl LvController {
    pub fn new(sc: &LvScenario, plant: LvPlant) -> Result<Self> {
        sc.validate()?;
        let law = match sc.controller {
            LvControllerKind::Pd => LvLaw::Pd,
            LvControllerKind::Smc1 => LvLaw::Smc1,
            LvControllerKind::Stw => LvLaw::Stw(StwState::adaptive(sc.stw_lambda0, sc.stw)?),
        };
        let diff = match sc.rate {
            RateSource::Differentiator { big_l } => {
                let cfg = DiffConfig::new(2, 0, big_l)?;
                let st = DiffState::zeros(&cfg);
                Some((cfg, st))
            }
            RateSource::Model => None,
        };
        Ok(LvController {
            sc: sc.clone(),
            plant,
            law,
            diff,
            integral: 0.0,
            u_prev: 0.0,
            last: [0.0; 6],
        })
    }

    pub fn stw_gains(&self) -> Option<(f64, f64)> {
        match &self.law {
            LvLaw::Stw(s) => Some((s.lambda, s.beta)),
            _ => None,
        }
    }
}

impl Controller for LvController {
    fn control_dim(&self) -> usize {
        1
    }

    fn control_names(&self) -> Vec<String> {
        vec![String::from("u")]
    }

    fn signal_names(&self) -> Vec<String> {
        ["theta_cmd", "e", "e_dot", "sigma", "lambda", "beta_gain"]
            .iter()
            .map(|s| String::from(*s))
            .collect()
    }

    fn signals(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.last);
    }

    fn control(&mut self, t: f64, x: &[f64], y: &[f64], dt: f64, u: &mut [f64]) -> Result<()> {
        let theta = y[0];
        let cmd = self.sc.command.eval(t);
        let e = cmd - theta;
        let e_dot = match &mut self.diff {
            Some((cfg, st)) => {
                let rate = st.z[1];
                diff_step(cfg, st, theta, dt);
                -rate
            }
            None => -self.plant.theta_dot(x, self.plant.input_total(self.u_prev, t)),
        };
        let sigma = e_dot + self.sc.c1 * e + self.sc.c0 * self.integral;
        let out = match &mut self.law {
            LvLaw::Pd => pd_control(self.sc.kp, self.sc.kd, e, e_dot),
            LvLaw::Smc1 => lv_smc_control(sigma, self.sc.rho, self.sc.l_bar, self.sc.eps),
            LvLaw::Stw(st) => {
                let v = stw_step(st, sigma, dt);
                stw_adapt(st, sigma, dt);
                -v
            }
        };
        u[0] = out;
        self.u_prev = out;
        let (lam, bet) = self.stw_gains().unwrap_or((0.0, 0.0));
        self.last = [cmd, e, e_dot, sigma, lam, bet];
        let window = match self.law {
            LvLaw::Pd => f64::INFINITY,
            _ => self.sc.integral_window,
        };
        if sigma.abs() <= window {
            self.integral += e * dt;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LvMetrics {
    pub j_e: f64,
    pub j_u: f64,
    pub max_abs_beta: f64,
}

pub fn lv_metrics(trace: &SimTrace) -> Result<LvMetrics> {
    let col = |n: &str| {
        trace
            .column(n)
            .ok_or_else(|| Error::invalid("trace", format!("missing column `{n}`")))
    };
    let t = trace.time();
    Ok(LvMetrics {
        j_e: average_abs(t, col("e")?)?,
        j_u: average_abs(t, col("u")?)?,
        max_abs_beta: col("beta")?.iter().fold(0.0, |m, b| m.max(b.abs())),
    })
}

#[derive(Debug, Clone)]
pub struct LvRun {
    pub trace: SimTrace,
    pub metrics: LvMetrics,
}

pub fn run_lv(sc: &LvScenario) -> Result<LvRun> {
    let plant = LvPlant::new(&sc.params, sc.perturbed)?;
    let ctl = LvController::new(sc, plant.clone())?;
    let cfg = SimConfig::new(0.0, sc.t_end, sc.dt, sc.record_stride)?;
    let x0 = vec![0.0; plant.order()];
    let (trace, _) = Scenario::new(plant, ctl, x0, cfg).run()?;
    let metrics = lv_metrics(&trace)?;
    Ok(LvRun { trace, metrics })
}

/// Uncontrolled, perturbed response over `[0, t_end]`; returns the first time `|θ|` exceeds
/// `bound` degrees, if any.
pub fn open_loop_escape(p: &LvParams, t_end: f64, dt: f64, bound: f64) -> Result<Option<f64>> {
    let plant = LvPlant::new(p, true)?;
    let x0 = vec![0.0; plant.order()];
    let cfg = SimConfig::new(0.0, t_end, dt, 1)?;
    let (trace, _) = Scenario::new(plant, crate::sim::OpenLoop::new(|_| 0.0), x0, cfg).run()?;
    let theta = trace
        .column("theta")
        .ok_or_else(|| Error::invalid("trace", "missing column `theta`"))?;
    Ok(theta
        .iter()
        .position(|v| v.abs() > bound)
        .map(|i| trace.time()[i]))
}

/// Unstable rigid-body pole `+√(C_Nα q̄ S l_a / I)`.
pub fn rigid_body_unstable_pole(p: &LvParams) -> f64 {
    sqrt(p.aero_moment() / p.inertia)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn component_gains() {
        let p = LvParams::default();
        let g1 = p.g1().unwrap();
        assert_relative_eq!(g1.dc_gain(), 22.86 * 4.535e5 / (8.0 * 4880.0 * 9.2 * 15.24), epsilon = 1e-12);
        assert_relative_eq!(g1.dc_gain(), 1.894, epsilon = 1e-3);
        assert_relative_eq!(p.actuator().unwrap().dc_gain(), 1.0, epsilon = 1e-12);
        let pole = rigid_body_unstable_pole(&p);
        assert_relative_eq!(pole, 0.2009, epsilon = 1e-4);
        assert!(g1.poles().iter().any(|r| (r.re - pole).abs() < 1e-9 && r.im.abs() < 1e-12));
        let ol = p.open_loop().unwrap();
        assert_eq!(ol.den_degree(), 7);
        assert_eq!(crate::lti::relative_degree(&ol).unwrap(), 3);
    }

    #[test]
    fn realization_matches_transfer_function_gains() {
        let p = LvParams::default();
        let plant = LvPlant::new(&p, false).unwrap();
        assert_eq!(plant.order(), 7);
        // DC: a constant u settles the actuator at β = u, and the body D + C(−A)⁻¹B equals G1(0) + Gb(0).
        let body_tf = tf_parallel(&p.g1().unwrap(), &p.bending().unwrap());
        let a_inv = plant.body.a.clone().try_inverse().unwrap();
        let dc = plant.body.d - (&plant.body.c * &a_inv * &plant.body.b)[0];
        assert_relative_eq!(dc, body_tf.dc_gain(), max_relative = 1e-9);
    }

    #[test]
    fn control_laws() {
        assert_eq!(pd_control(1.87, 2.13, 1.0, 0.0), -1.87);
        assert_eq!(pd_control(1.87, 2.13, 0.0, 1.0), -2.13);
        assert_eq!(lv_smc_control(0.0, 0.45, 0.35, 0.1), 0.0);
        assert_relative_eq!(lv_smc_control(0.1, 0.45, 0.0, 0.1), -0.225);
        assert!(lv_smc_control(2.0, 0.45, 0.35, 0.1) < 0.0);
    }

    #[test]
    fn open_loop_diverges() {
        let t = open_loop_escape(&LvParams::default(), 60.0, 1e-3, 10.0).unwrap();
        assert!(t.is_some_and(|t| t < 60.0), "{t:?}");
    }

    #[test]
    fn quiet_run_stays_at_rest() {
        let sc = LvScenario {
            perturbed: false,
            command: StepTrain::new(vec![(0.0, 1.0)]).unwrap(),
            t_end: 2.0,
            ..LvScenario::default()
        };
        for kind in [LvControllerKind::Pd, LvControllerKind::Smc1, LvControllerKind::Stw] {
            let run = run_lv(&sc.clone().with_controller(kind)).unwrap();
            assert_eq!(run.metrics.j_e, 0.0);
            assert_eq!(run.metrics.j_u, 0.0);
        }
    }
}
