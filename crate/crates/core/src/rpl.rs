//! Lunar lander pitch-plane descent: plant, guidance commands, adaptive off-pulse 1-SMC, PID and
//! adaptive super-twisting comparators, landing metrics.
//!
//! State `[θ, θ̇, x, ẋ]` in rad and m. Attitude errors are reported in degrees.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{sign, sin};
use crate::metrics::average_abs;
use crate::pwm::{deadband_at, modified_sigma, offpulse_control, DeadbandSchedule, PwmConfig, SampleHoldState};
use crate::sim::{Controller, Plant, Scenario, SimConfig, SimTrace, TraceEvent};
use crate::smc2::{stw_adapt, stw_step, StwAdaptation, StwState};

pub const DEG: f64 = core::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RplParams {
    pub j_yy: f64,
    pub m: f64,
    pub l_a: f64,
    pub g_m: f64,
    /// Attitude input gain; the rounded 9.3e-3 keeps the allocation at 107.5.
    pub b_a: f64,
    pub ua_max: f64,
    pub ud_min: f64,
    pub ud_max: f64,
}

impl Default for RplParams {
    fn default() -> Self {
        RplParams {
            j_yy: 300.0,
            m: 1000.0,
            l_a: 2.8,
            g_m: 1.6,
            b_a: 9.3e-3,
            ua_max: 15.0,
            ud_min: 0.0,
            ud_max: 2800.0,
        }
    }
}

impl RplParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("j_yy", self.j_yy), ("m", self.m), ("l_a", self.l_a), ("g_m", self.g_m), ("b_a", self.b_a)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid("rpl params", format!("{name} must be positive")));
            }
        }
        if !(self.ua_max > 0.0) || !(self.ud_max > self.ud_min) {
            return Err(Error::invalid("rpl params", "control limits are empty"));
        }
        Ok(())
    }
}

/// `φ_a = 0.06 sin 0.2t` (rad/s²), `φ_d = 0.5 sin 0.2t` (m/s²).
pub fn rpl_perturbation(t: f64) -> (f64, f64) {
    (0.06 * sin(0.2 * t), 0.5 * sin(0.2 * t))
}

/// `[θ̈, ẍ]` for saturated controls.
pub fn rpl_dynamics(p: &RplParams, theta: f64, u: (f64, f64), phi: (f64, f64)) -> (f64, f64) {
    let (ua, ud) = u;
    (p.b_a * ua + phi.0, sin(theta) / p.m * (ua + ud) - p.g_m + phi.1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RplPlant {
    pub params: RplParams,
    pub perturbed: bool,
}

impl Plant for RplPlant {
    fn state_dim(&self) -> usize {
        4
    }

    fn input_dim(&self) -> usize {
        2
    }

    fn output_dim(&self) -> usize {
        0
    }

    fn derivative(&self, x: &[f64], u: &[f64], t: f64, dx: &mut [f64]) {
        let phi = if self.perturbed { rpl_perturbation(t) } else { (0.0, 0.0) };
        let (tdd, xdd) = rpl_dynamics(&self.params, x[0], (u[0], u[1]), phi);
        dx[0] = x[1];
        dx[1] = tdd;
        dx[2] = x[3];
        dx[3] = xdd;
    }

    fn output(&self, _x: &[f64], _t: f64, _y: &mut [f64]) {}

    fn state_names(&self) -> Vec<String> {
        ["theta", "theta_dot", "x", "x_dot"].iter().map(|s| String::from(*s)).collect()
    }
}

/// Descent command cubic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DescentProfile {
    /// `6.9e-4 t³ − 0.23 t² − 10 t + 6000`.
    Printed,
    /// `t³/1440 − 11 t²/48 − 10 t + 6000`: reaches `x = 0`, `ẋ = 0` at `t = 240`, and rounds to
    /// the printed coefficients.
    #[default]
    Exact,
}

impl DescentProfile {
    fn coefficients(self) -> (f64, f64) {
        match self {
            DescentProfile::Printed => (6.9e-4, -0.23),
            DescentProfile::Exact => (1.0 / 1440.0, -11.0 / 48.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RplCommands {
    pub theta: [f64; 3],
    pub x: [f64; 3],
}

/// `θ_c = 90°` and the descent cubic, each with first and second derivatives.
pub fn rpl_commands(t: f64, profile: DescentProfile) -> RplCommands {
    let (a, b) = profile.coefficients();
    RplCommands {
        theta: [90.0 * DEG, 0.0, 0.0],
        x: [
            a * t * t * t + b * t * t - 10.0 * t + 6000.0,
            3.0 * a * t * t + 2.0 * b * t - 10.0,
            6.0 * a * t + 2.0 * b,
        ],
    }
}

/// Unsaturated `u = B⁻¹ v`: `u_a = v_a / b_a`, `u_d = −u_a + m v_d / sin θ`.
pub fn allocate_controls(p: &RplParams, v: (f64, f64), theta: f64, t: f64) -> Result<(f64, f64)> {
    let s = sin(theta);
    if s.abs() < 0.1 {
        return Err(Error::AllocationSingularity { t, sin_theta: s.abs() });
    }
    let ua = v.0 / p.b_a;
    Ok((ua, -ua + p.m / s * v.1))
}

/// Clamps to the actuator limits; the flags report which channel was clipped.
pub fn saturate(p: &RplParams, u: (f64, f64)) -> ((f64, f64), (bool, bool)) {
    let ua = u.0.clamp(-p.ua_max, p.ua_max);
    let ud = u.1.clamp(p.ud_min, p.ud_max);
    ((ua, ud), (ua != u.0, ud != u.1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RplControllerKind {
    #[default]
    AdaptiveSmc1,
    Pid,
    AdaptiveStw,
}

impl RplControllerKind {
    pub fn name(self) -> &'static str {
        match self {
            RplControllerKind::AdaptiveSmc1 => "smc1",
            RplControllerKind::Pid => "pid",
            RplControllerKind::AdaptiveStw => "stw",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "smc1" | "adaptive-1smc" => Some(RplControllerKind::AdaptiveSmc1),
            "pid" => Some(RplControllerKind::Pid),
            "stw" | "adaptive-stw" => Some(RplControllerKind::AdaptiveStw),
            _ => None,
        }
    }
}

/// `σ = ė + c1 e + c0 ∫e` coefficients per channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RplSliding {
    pub c_a: (f64, f64),
    pub c_d: (f64, f64),
}

impl Default for RplSliding {
    fn default() -> Self {
        RplSliding {
            c_a: (7.0, 25.0),
            c_d: (2.8, 4.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Smc1Tuning {
    pub gamma_a: f64,
    pub gamma_d: f64,
    pub rho_a0: f64,
    pub rho_d0: f64,
}

impl Default for Smc1Tuning {
    fn default() -> Self {
        Smc1Tuning {
            gamma_a: 5.0,
            gamma_d: 1e-3,
            rho_a0: 0.01,
            rho_d0: 0.01,
        }
    }
}

/// `[k_p, k_i, k_d]` per channel; the attitude loop acts on errors in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidTuning {
    pub attitude: [f64; 3],
    pub descent: [f64; 3],
}

impl Default for PidTuning {
    fn default() -> Self {
        PidTuning {
            attitude: [10.0, 0.1, 0.5],
            descent: [30.0, 0.2, 0.1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StwTuning {
    pub lambda_a0: f64,
    pub lambda_d0: f64,
    pub attitude: StwAdaptation,
    pub descent: StwAdaptation,
}

impl Default for StwTuning {
    fn default() -> Self {
        StwTuning {
            lambda_a0: 0.2,
            lambda_d0: 2.0,
            attitude: StwAdaptation {
                gamma: 0.1,
                mu: 0.005,
                lambda_min: 0.02,
                eps_ratio: 0.1,
                eta: 0.02,
            },
            descent: StwAdaptation {
                gamma: 1.0,
                mu: 0.05,
                lambda_min: 0.1,
                eps_ratio: 0.5,
                eta: 0.2,
            },
        }
    }
}

/// Scenario settings; defaults are the published descent setup.
#[derive(Debug, Clone, PartialEq)]
pub struct RplScenario {
    pub params: RplParams,
    pub controller: RplControllerKind,
    pub profile: DescentProfile,
    pub perturbed: bool,
    /// `[θ, θ̇, x, ẋ]` in rad, rad/s, m, m/s.
    pub x0: [f64; 4],
    pub t_end: f64,
    pub dt: f64,
    pub record_stride: usize,
    pub sliding: RplSliding,
    pub pwm_a: PwmConfig,
    pub pwm_d: PwmConfig,
    pub smc1: Smc1Tuning,
    pub pid: PidTuning,
    pub stw: StwTuning,
    /// Clamp the PID commands to the actuator limits.
    pub pid_saturate: bool,
    /// For the sliding-mode laws the integrals in `σ_a`, `σ_d` accumulate only while `|σ_a|`,
    /// `|σ_d|` lie within these windows; infinite windows integrate always. PID always integrates.
    pub integral_window: (f64, f64),
}

impl Default for RplScenario {
    fn default() -> Self {
        RplScenario {
            params: RplParams::default(),
            controller: RplControllerKind::AdaptiveSmc1,
            profile: DescentProfile::Exact,
            perturbed: true,
            x0: [91.67 * DEG, 5.73 * DEG, 6500.0, -10.0],
            t_end: 240.0,
            dt: 1e-3,
            record_stride: 10,
            sliding: RplSliding::default(),
            pwm_a: PwmConfig {
                a: 0.05,
                freq_hz: 20.0,
                hold: 0.05,
                schedule: DeadbandSchedule::rpl_attitude(),
            },
            pwm_d: PwmConfig {
                a: 0.05,
                freq_hz: 20.0,
                hold: 0.05,
                schedule: DeadbandSchedule::rpl_descent(),
            },
            smc1: Smc1Tuning::default(),
            pid: PidTuning::default(),
            stw: StwTuning::default(),
            pid_saturate: true,
            integral_window: (0.01, 0.1),
        }
    }
}

impl RplScenario {
    pub fn with_controller(mut self, kind: RplControllerKind) -> Self {
        self.controller = kind;
        self
    }

    /// Drops the descent thrust ceiling and the PID clamps, the setting under which the published
    /// comparison metrics come out.
    pub fn with_relaxed_limits(mut self) -> Self {
        self.params.ud_max = f64::INFINITY;
        self.pid_saturate = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.integral_window.0 >= 0.0) || !(self.integral_window.1 >= 0.0) {
            return Err(Error::invalid("integral_window", "must be non-negative"));
        }
        self.pwm_a.validate()?;
        self.pwm_d.validate()?;
        SimConfig::new(0.0, self.t_end, self.dt, self.record_stride)?;
        let t = self.smc1;
        if !(t.gamma_a > 0.0 && t.gamma_d > 0.0 && t.rho_a0 >= 0.0 && t.rho_d0 >= 0.0) {
            return Err(Error::invalid("smc1", "gamma > 0 and rho0 >= 0 required"));
        }
        Ok(())
    }
}

enum Law {
    Smc1 {
        rho_a: f64,
        rho_d: f64,
        sh_a: SampleHoldState,
        sh_d: SampleHoldState,
    },
    Pid {
        sh_a: SampleHoldState,
        sh_d: SampleHoldState,
    },
    Stw {
        a: StwState,
        d: StwState,
        sh_a: SampleHoldState,
        sh_d: SampleHoldState,
    },
}

/// Closed-loop controller for one of the three laws. Signals: commands, errors, sliding
/// variables, virtual controls and the adaptive gains.
pub struct RplController {
    sc: RplScenario,
    law: Law,
    int_a: f64,
    int_d: f64,
    last: [f64; 10],
    sat: (bool, bool),
    events: Vec<TraceEvent>,
}

impl RplController {
    pub fn new(sc: &RplScenario) -> Result<Self> {
        sc.validate()?;
        let law = match sc.controller {
            RplControllerKind::AdaptiveSmc1 => Law::Smc1 {
                rho_a: sc.smc1.rho_a0,
                rho_d: sc.smc1.rho_d0,
                sh_a: SampleHoldState::default(),
                sh_d: SampleHoldState::default(),
            },
            RplControllerKind::Pid => Law::Pid {
                sh_a: SampleHoldState::default(),
                sh_d: SampleHoldState::default(),
            },
            RplControllerKind::AdaptiveStw => Law::Stw {
                a: StwState::adaptive(sc.stw.lambda_a0, sc.stw.attitude)?,
                d: StwState::adaptive(sc.stw.lambda_d0, sc.stw.descent)?,
                sh_a: SampleHoldState::default(),
                sh_d: SampleHoldState::default(),
            },
        };
        Ok(RplController {
            sc: sc.clone(),
            law,
            int_a: 0.0,
            int_d: 0.0,
            last: [0.0; 10],
            sat: (false, false),
            events: Vec::new(),
        })
    }

    /// `(gain_a, gain_d)`: `ρ` for the relay, `λ` for super-twisting, zero for PID.
    pub fn gains(&self) -> (f64, f64) {
        match &self.law {
            Law::Smc1 { rho_a, rho_d, .. } => (*rho_a, *rho_d),
            Law::Stw { a, d, .. } => (a.lambda, d.lambda),
            Law::Pid { .. } => (0.0, 0.0),
        }
    }

    fn note_saturation(&mut self, t: f64, flags: (bool, bool), u: (f64, f64)) {
        if flags.0 && !self.sat.0 {
            self.events.push(TraceEvent {
                t,
                message: format!("u_a saturated (requested {:.6})", u.0),
            });
        }
        if flags.1 && !self.sat.1 {
            self.events.push(TraceEvent {
                t,
                message: format!("u_d saturated (requested {:.6})", u.1),
            });
        }
        self.sat = flags;
    }
}

impl Controller for RplController {
    fn control_dim(&self) -> usize {
        2
    }

    fn control_names(&self) -> Vec<String> {
        vec![String::from("u_a"), String::from("u_d")]
    }

    fn signal_names(&self) -> Vec<String> {
        let (ga, gd) = match self.sc.controller {
            RplControllerKind::AdaptiveStw => ("lambda_a", "lambda_d"),
            _ => ("rho_a", "rho_d"),
        };
        ["theta_cmd", "x_cmd", "e_a_deg", "e_d", "sigma_a", "sigma_d", "v_a", "v_d", ga, gd]
            .iter()
            .map(|s| String::from(*s))
            .collect()
    }

    fn signals(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.last);
    }

    fn drain_events(&mut self, out: &mut Vec<TraceEvent>) {
        out.append(&mut self.events);
    }

    fn control(&mut self, t: f64, x: &[f64], _y: &[f64], dt: f64, u: &mut [f64]) -> Result<()> {
        let c = rpl_commands(t, self.sc.profile);
        let (e_a, ed_a) = (c.theta[0] - x[0], c.theta[1] - x[1]);
        let (e_d, ed_d) = (c.x[0] - x[2], c.x[1] - x[3]);
        let sl = self.sc.sliding;
        let sigma_a = ed_a + sl.c_a.0 * e_a + sl.c_a.1 * self.int_a;
        let sigma_d = ed_d + sl.c_d.0 * e_d + sl.c_d.1 * self.int_d;
        let p = self.sc.params;

        let (v, requested) = match &mut self.law {
            Law::Smc1 { rho_a, rho_d, sh_a, sh_d } => {
                let (pa, pd) = (&self.sc.pwm_a, &self.sc.pwm_d);
                let va = offpulse_control(*rho_a, modified_sigma(sigma_a, t, pa), t, pa, sh_a);
                let vd = offpulse_control(*rho_d, modified_sigma(sigma_d, t, pd), t, pd, sh_d);
                if sigma_a.abs() > deadband_at(t, &pa.schedule) {
                    *rho_a += self.sc.smc1.gamma_a * sigma_a.abs() * dt;
                }
                if sigma_d.abs() > deadband_at(t, &pd.schedule) {
                    *rho_d += self.sc.smc1.gamma_d * sigma_d.abs() * dt;
                }
                ((va, vd), allocate_controls(&p, (va, vd), x[0], t)?)
            }
            Law::Pid { sh_a, sh_d } => {
                let [kp, ki, kd] = self.sc.pid.attitude;
                let ua = (kp * e_a + ki * self.int_a + kd * ed_a) / DEG;
                let [kp, ki, kd] = self.sc.pid.descent;
                let ud = kp * e_d + ki * self.int_d + kd * ed_d;
                let ua = sh_a.update(ua, t, self.sc.pwm_a.hold);
                let ud = sh_d.update(ud, t, self.sc.pwm_d.hold);
                let s = sin(x[0]);
                ((p.b_a * ua, s / p.m * (ua + ud)), (ua, ud))
            }
            Law::Stw { a, d, sh_a, sh_d } => {
                let va = stw_step(a, sigma_a, dt);
                let vd = stw_step(d, sigma_d, dt);
                stw_adapt(a, sigma_a, dt);
                stw_adapt(d, sigma_d, dt);
                let va = sh_a.update(va, t, self.sc.pwm_a.hold);
                let vd = sh_d.update(vd, t, self.sc.pwm_d.hold);
                ((va, vd), allocate_controls(&p, (va, vd), x[0], t)?)
            }
        };

        let saturate_now = !matches!(self.law, Law::Pid { .. }) || self.sc.pid_saturate;
        let applied = if saturate_now {
            let (us, flags) = saturate(&p, requested);
            self.note_saturation(t, flags, requested);
            us
        } else {
            requested
        };
        u[0] = applied.0;
        u[1] = applied.1;

        let (ga, gd) = self.gains();
        self.last = [c.theta[0], c.x[0], e_a / DEG, e_d, sigma_a, sigma_d, v.0, v.1, ga, gd];
        let w = match self.law {
            Law::Pid { .. } => (f64::INFINITY, f64::INFINITY),
            _ => self.sc.integral_window,
        };
        if sigma_a.abs() <= w.0 {
            self.int_a += e_a * dt;
        }
        if sigma_d.abs() <= w.1 {
            self.int_d += e_d * dt;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RplMetrics {
    /// Degrees.
    pub j_ea: f64,
    pub j_ed: f64,
    pub j_ua: f64,
    pub j_ud: f64,
}

fn column<'a>(trace: &'a SimTrace, name: &str) -> Result<&'a [f64]> {
    trace
        .column(name)
        .ok_or_else(|| Error::invalid("trace", format!("missing column `{name}`")))
}

pub fn rpl_metrics(trace: &SimTrace) -> Result<RplMetrics> {
    let t = trace.time();
    Ok(RplMetrics {
        j_ea: average_abs(t, column(trace, "e_a_deg")?)?,
        j_ed: average_abs(t, column(trace, "e_d")?)?,
        j_ua: average_abs(t, column(trace, "u_a")?)?,
        j_ud: average_abs(t, column(trace, "u_d")?)?,
    })
}

#[derive(Debug, Clone)]
pub struct RplRun {
    pub trace: SimTrace,
    pub metrics: RplMetrics,
    /// Final `(gain_a, gain_d)`.
    pub final_gains: (f64, f64),
}

pub fn run_rpl(sc: &RplScenario) -> Result<RplRun> {
    let controller = RplController::new(sc)?;
    let plant = RplPlant {
        params: sc.params,
        perturbed: sc.perturbed,
    };
    let cfg = SimConfig::new(0.0, sc.t_end, sc.dt, sc.record_stride)?;
    let (trace, ctl) = Scenario::new(plant, controller, sc.x0.to_vec(), cfg).run()?;
    let metrics = rpl_metrics(&trace)?;
    Ok(RplRun {
        trace,
        metrics,
        final_gains: ctl.gains(),
    })
}

/// Shortest nonzero constant-sign run in `u`, in seconds, ignoring runs that touch either end.
pub fn min_interior_pulse(time: &[f64], u: &[f64]) -> Option<f64> {
    let n = u.len();
    crate::pwm::pulse_runs(u)
        .into_iter()
        .filter(|&(s, len)| s > 0 && s + len < n)
        .map(|(s, len)| time[s + len] - time[s])
        .reduce(f64::min)
}

/// `true` if `sign(u)` is constant between consecutive sampling instants `k·hold`.
pub fn pulses_follow_hold_grid(time: &[f64], u: &[f64], hold: f64) -> bool {
    let slot = |t: f64| libm::floor(t / hold + 1e-9) as i64;
    (1..u.len()).all(|i| sign(u[i]) == sign(u[i - 1]) || slot(time[i]) != slot(time[i - 1]))
}
