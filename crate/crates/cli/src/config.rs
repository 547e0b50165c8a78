//! Run configuration: JSON in, fully resolved JSON out. Absent fields take the built-in defaults,
//! unknown keys are rejected.

use serde::{Deserialize, Serialize};
use smc_core::lv::{LvControllerKind, LvParams, LvScenario, RateSource};
use smc_core::pwm::{DeadbandSchedule, PwmConfig};
use smc_core::rpl::{
    DescentProfile, PidTuning, RplControllerKind, RplParams, RplScenario, RplSliding, Smc1Tuning, DEG,
};
use smc_core::sim::StepTrain;
use smc_core::smc2::StwAdaptation;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    Rpl,
    Lv,
    Custom,
}

impl Case {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rpl" => Some(Case::Rpl),
            "lv" => Some(Case::Lv),
            "custom" => Some(Case::Custom),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Case::Rpl => "rpl",
            Case::Lv => "lv",
            Case::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub case: Case,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controller: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbed: Option<bool>,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rpl: Option<RplSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lv: Option<LvSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom: Option<CustomSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_stride: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StwSection {
    pub lambda0: f64,
    pub gamma: f64,
    pub mu: f64,
    pub lambda_min: f64,
    pub eps_ratio: f64,
    pub eta: f64,
}

impl StwSection {
    fn from_core(lambda0: f64, a: StwAdaptation) -> Self {
        StwSection {
            lambda0,
            gamma: a.gamma,
            mu: a.mu,
            lambda_min: a.lambda_min,
            eps_ratio: a.eps_ratio,
            eta: a.eta,
        }
    }

    pub fn adaptation(&self) -> StwAdaptation {
        StwAdaptation {
            gamma: self.gamma,
            mu: self.mu,
            lambda_min: self.lambda_min,
            eps_ratio: self.eps_ratio,
            eta: self.eta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Exact,
    Printed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RplSection {
    pub profile: Profile,
    /// Drops the descent thrust ceiling and the PID clamps.
    pub relaxed_limits: bool,
    /// `[θ (deg), θ̇ (deg/s), x (m), ẋ (m/s)]`.
    pub x0: [f64; 4],
    /// `null` restores the literal integrals in both sliding variables.
    pub integral_window: Option<[f64; 2]>,
    pub params: RplParamsSection,
    pub sliding: RplSlidingSection,
    pub pwm: RplPwmSection,
    pub smc1: Smc1Section,
    pub pid: PidSection,
    pub stw_attitude: StwSection,
    pub stw_descent: StwSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RplParamsSection {
    pub j_yy: f64,
    pub m: f64,
    pub l_a: f64,
    pub g_m: f64,
    pub b_a: f64,
    pub ua_max: f64,
    pub ud_min: f64,
    pub ud_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RplSlidingSection {
    pub c_a: [f64; 2],
    pub c_d: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RplPwmSection {
    pub a_attitude: f64,
    pub a_descent: f64,
    pub freq_hz: f64,
    pub hold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Smc1Section {
    pub gamma_a: f64,
    pub gamma_d: f64,
    pub rho_a0: f64,
    pub rho_d0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidSection {
    /// `[k_p, k_i, k_d]` on the attitude error in degrees.
    pub attitude: [f64; 3],
    pub descent: [f64; 3],
    pub saturate: bool,
}

impl Default for RplSection {
    fn default() -> Self {
        let sc = RplScenario::default();
        let p = sc.params;
        RplSection {
            profile: Profile::Exact,
            relaxed_limits: false,
            x0: [sc.x0[0] / DEG, sc.x0[1] / DEG, sc.x0[2], sc.x0[3]],
            integral_window: Some([sc.integral_window.0, sc.integral_window.1]),
            params: RplParamsSection {
                j_yy: p.j_yy,
                m: p.m,
                l_a: p.l_a,
                g_m: p.g_m,
                b_a: p.b_a,
                ua_max: p.ua_max,
                ud_min: p.ud_min,
                ud_max: p.ud_max,
            },
            sliding: RplSlidingSection {
                c_a: [sc.sliding.c_a.0, sc.sliding.c_a.1],
                c_d: [sc.sliding.c_d.0, sc.sliding.c_d.1],
            },
            pwm: RplPwmSection {
                a_attitude: sc.pwm_a.a,
                a_descent: sc.pwm_d.a,
                freq_hz: sc.pwm_a.freq_hz,
                hold: sc.pwm_a.hold,
            },
            smc1: Smc1Section {
                gamma_a: sc.smc1.gamma_a,
                gamma_d: sc.smc1.gamma_d,
                rho_a0: sc.smc1.rho_a0,
                rho_d0: sc.smc1.rho_d0,
            },
            pid: PidSection {
                attitude: sc.pid.attitude,
                descent: sc.pid.descent,
                saturate: sc.pid_saturate,
            },
            stw_attitude: StwSection::from_core(sc.stw.lambda_a0, sc.stw.attitude),
            stw_descent: StwSection::from_core(sc.stw.lambda_d0, sc.stw.descent),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateSection {
    Differentiator,
    Model,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LvSection {
    /// Step train `[[amplitude, time], ...]` in degrees.
    pub command: Vec<[f64; 2]>,
    pub kp: f64,
    pub kd: f64,
    pub c1: f64,
    pub c0: f64,
    pub rho: f64,
    pub l_bar: f64,
    pub eps: f64,
    /// `null` restores the literal integral.
    pub integral_window: Option<f64>,
    pub rate: RateSection,
    pub diff_l: f64,
    pub stw: StwSection,
}

impl Default for LvSection {
    fn default() -> Self {
        let sc = LvScenario::default();
        let diff_l = match sc.rate {
            RateSource::Differentiator { big_l } => big_l,
            RateSource::Model => 5.0,
        };
        LvSection {
            command: sc.command.terms().iter().map(|&(a, t)| [a, t]).collect(),
            kp: sc.kp,
            kd: sc.kd,
            c1: sc.c1,
            c0: sc.c0,
            rho: sc.rho,
            l_bar: sc.l_bar,
            eps: sc.eps,
            integral_window: Some(sc.integral_window),
            rate: RateSection::Differentiator,
            diff_l,
            stw: StwSection::from_core(sc.stw_lambda0, sc.stw),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CustomSection {
    /// Strictly proper SISO plant, descending coefficients.
    pub num: Vec<f64>,
    pub den: Vec<f64>,
    /// Step train `[[amplitude, time], ...]`.
    pub command: Vec<[f64; 2]>,
    /// Input perturbation `bias + amplitude sin(omega t)`.
    pub perturbation: [f64; 3],
    /// Sliding-variable settling time.
    pub t_settle: f64,
    pub integral: bool,
    pub rho: f64,
    /// Sigmoid width; `0` gives the plain relay.
    pub eps: f64,
    pub stw: StwSection,
}

impl Default for CustomSection {
    fn default() -> Self {
        CustomSection {
            num: vec![1.0],
            den: vec![1.0, 1.0, 0.0],
            command: vec![[1.0, 1.0]],
            perturbation: [0.1, 0.1, 1.0],
            t_settle: 5.0,
            integral: true,
            rho: 2.0,
            eps: 0.01,
            stw: StwSection {
                lambda0: 1.5,
                gamma: 0.5,
                mu: 0.05,
                lambda_min: 0.1,
                eps_ratio: 0.5,
                eta: 0.5,
            },
        }
    }
}

/// Built-in named scenarios.
pub const SCENARIOS: &[&str] = &[
    "rpl-smc1",
    "rpl-pid",
    "rpl-stw",
    "rpl-smc1-relaxed",
    "rpl-pid-relaxed",
    "rpl-stw-relaxed",
    "lv-pd",
    "lv-pd-unperturbed",
    "lv-smc1",
    "lv-stw",
    "lv-smc1-fine",
    "custom-smc1",
    "custom-stw",
];

pub fn builtin(name: &str) -> Result<RunConfig, CliError> {
    if !SCENARIOS.contains(&name) {
        return Err(CliError::Config(format!(
            "unknown scenario `{name}`; available: {}",
            SCENARIOS.join(", ")
        )));
    }
    let mut parts = name.split('-');
    let case = Case::parse(parts.next().unwrap_or_default()).expect("scenario names start with a case");
    let controller = parts.next().map(String::from);
    let mut cfg = RunConfig::new(case);
    cfg.controller = controller;
    for flag in parts {
        match flag {
            "relaxed" => cfg.rpl.get_or_insert_with(Default::default).relaxed_limits = true,
            "unperturbed" => cfg.perturbed = Some(false),
            "fine" => cfg.sim.dt = Some(1e-5),
            _ => unreachable!("scenario table and flags out of sync"),
        }
    }
    Ok(cfg)
}

pub fn load(path: &std::path::Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn default_controller(case: Case) -> &'static str {
    match case {
        Case::Rpl | Case::Lv | Case::Custom => "smc1",
    }
}

fn default_sim(case: Case) -> (f64, f64, usize) {
    match case {
        Case::Rpl => {
            let sc = RplScenario::default();
            (sc.t_end, sc.dt, sc.record_stride)
        }
        Case::Lv => {
            let sc = LvScenario::default();
            (sc.t_end, sc.dt, sc.record_stride)
        }
        Case::Custom => (10.0, 1e-4, 10),
    }
}

impl RunConfig {
    pub fn new(case: Case) -> Self {
        RunConfig {
            case,
            controller: None,
            perturbed: None,
            sim: SimSection::default(),
            rpl: None,
            lv: None,
            custom: None,
        }
    }

    /// Fills every default and checks that only the section of the selected case is present.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        let stray = match self.case {
            Case::Rpl => [("lv", self.lv.is_some()), ("custom", self.custom.is_some())],
            Case::Lv => [("rpl", self.rpl.is_some()), ("custom", self.custom.is_some())],
            Case::Custom => [("rpl", self.rpl.is_some()), ("lv", self.lv.is_some())],
        };
        if let Some((name, _)) = stray.iter().find(|(_, present)| *present) {
            return Err(CliError::Config(format!(
                "section `{name}` does not apply to case `{}`",
                self.case.name()
            )));
        }
        let controller = self
            .controller
            .get_or_insert_with(|| default_controller(self.case).into())
            .clone();
        let known = match self.case {
            Case::Rpl => RplControllerKind::parse(&controller).is_some(),
            Case::Lv => LvControllerKind::parse(&controller).is_some(),
            Case::Custom => matches!(controller.as_str(), "smc1" | "stw"),
        };
        if !known {
            return Err(CliError::Config(format!(
                "unknown controller `{controller}` for case `{}`",
                self.case.name()
            )));
        }
        self.perturbed.get_or_insert(true);
        let (t_end, dt, stride) = default_sim(self.case);
        self.sim.t_end.get_or_insert(t_end);
        self.sim.dt.get_or_insert(dt);
        self.sim.record_stride.get_or_insert(stride);
        match self.case {
            Case::Rpl => {
                self.rpl.get_or_insert_with(Default::default);
            }
            Case::Lv => {
                self.lv.get_or_insert_with(Default::default);
            }
            Case::Custom => {
                self.custom.get_or_insert_with(Default::default);
            }
        }
        Ok(self)
    }

    fn sim_values(&self) -> (f64, f64, usize) {
        let d = default_sim(self.case);
        (
            self.sim.t_end.unwrap_or(d.0),
            self.sim.dt.unwrap_or(d.1),
            self.sim.record_stride.unwrap_or(d.2),
        )
    }

    pub fn rpl_scenario(&self) -> Result<RplScenario, CliError> {
        let s = self.rpl.clone().unwrap_or_default();
        let controller = self.controller.as_deref().unwrap_or("smc1");
        let (t_end, dt, record_stride) = self.sim_values();
        let p = s.params;
        let pwm = |a: f64, schedule: DeadbandSchedule| PwmConfig::new(a, s.pwm.freq_hz, s.pwm.hold, schedule);
        let base = RplScenario::default();
        let mut sc = RplScenario {
            params: RplParams {
                j_yy: p.j_yy,
                m: p.m,
                l_a: p.l_a,
                g_m: p.g_m,
                b_a: p.b_a,
                ua_max: p.ua_max,
                ud_min: p.ud_min,
                ud_max: p.ud_max,
            },
            controller: RplControllerKind::parse(controller)
                .ok_or_else(|| CliError::Config(format!("unknown rpl controller `{controller}`")))?,
            profile: match s.profile {
                Profile::Exact => DescentProfile::Exact,
                Profile::Printed => DescentProfile::Printed,
            },
            perturbed: self.perturbed.unwrap_or(true),
            x0: [s.x0[0] * DEG, s.x0[1] * DEG, s.x0[2], s.x0[3]],
            t_end,
            dt,
            record_stride,
            sliding: RplSliding {
                c_a: (s.sliding.c_a[0], s.sliding.c_a[1]),
                c_d: (s.sliding.c_d[0], s.sliding.c_d[1]),
            },
            pwm_a: pwm(s.pwm.a_attitude, base.pwm_a.schedule.clone())?,
            pwm_d: pwm(s.pwm.a_descent, base.pwm_d.schedule.clone())?,
            smc1: Smc1Tuning {
                gamma_a: s.smc1.gamma_a,
                gamma_d: s.smc1.gamma_d,
                rho_a0: s.smc1.rho_a0,
                rho_d0: s.smc1.rho_d0,
            },
            pid: PidTuning {
                attitude: s.pid.attitude,
                descent: s.pid.descent,
            },
            stw: smc_core::rpl::StwTuning {
                lambda_a0: s.stw_attitude.lambda0,
                lambda_d0: s.stw_descent.lambda0,
                attitude: s.stw_attitude.adaptation(),
                descent: s.stw_descent.adaptation(),
            },
            pid_saturate: s.pid.saturate,
            integral_window: s
                .integral_window
                .map_or((f64::INFINITY, f64::INFINITY), |w| (w[0], w[1])),
        };
        if s.relaxed_limits {
            sc = sc.with_relaxed_limits();
        }
        sc.validate()?;
        Ok(sc)
    }

    pub fn lv_scenario(&self) -> Result<LvScenario, CliError> {
        let s = self.lv.clone().unwrap_or_default();
        let controller = self.controller.as_deref().unwrap_or("smc1");
        let (t_end, dt, record_stride) = self.sim_values();
        let sc = LvScenario {
            params: LvParams::default(),
            controller: LvControllerKind::parse(controller)
                .ok_or_else(|| CliError::Config(format!("unknown lv controller `{controller}`")))?,
            perturbed: self.perturbed.unwrap_or(true),
            command: StepTrain::new(s.command.iter().map(|c| (c[0], c[1])).collect())?,
            t_end,
            dt,
            record_stride,
            kp: s.kp,
            kd: s.kd,
            c1: s.c1,
            c0: s.c0,
            rho: s.rho,
            l_bar: s.l_bar,
            eps: s.eps,
            stw_lambda0: s.stw.lambda0,
            stw: s.stw.adaptation(),
            rate: match s.rate {
                RateSection::Differentiator => RateSource::Differentiator { big_l: s.diff_l },
                RateSection::Model => RateSource::Model,
            },
            integral_window: s.integral_window.unwrap_or(f64::INFINITY),
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn custom_section(&self) -> CustomSection {
        self.custom.clone().unwrap_or_default()
    }

    pub fn sim(&self) -> (f64, f64, usize) {
        self.sim_values()
    }
}
