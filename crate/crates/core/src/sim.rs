//! Fixed-step closed-loop simulation.
//!
//! A [`Scenario`] couples a [`Plant`] with a [`Controller`]. At every integration step the
//! controller sees the current time, state and output, produces a control vector (advancing its
//! own state by one step), the row is recorded when due, and the plant state is advanced by the
//! configured [`Integrator`]. Rows are recorded at `k % record_stride == 0` for step index `k`,
//! so a run of `N` steps yields `N / record_stride + 1` rows.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{floor, round};

/// Default bound on any state component before a run is aborted.
pub const DEFAULT_DIVERGENCE_BOUND: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub t0: f64,
    pub t_end: f64,
    pub dt: f64,
    pub record_stride: usize,
}

impl SimConfig {
    pub fn new(t0: f64, t_end: f64, dt: f64, record_stride: usize) -> Result<Self> {
        let cfg = SimConfig {
            t0,
            t_end,
            dt,
            record_stride,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_end > self.t0) || !self.t0.is_finite() || !self.t_end.is_finite() {
            return Err(Error::invalid(
                "t_end",
                format!("must exceed t0 ({} <= {})", self.t_end, self.t0),
            ));
        }
        if self.record_stride == 0 {
            return Err(Error::invalid("record_stride", "must be at least 1"));
        }
        Ok(())
    }

    /// Number of integration steps covering `[t0, t_end]`.
    pub fn steps(&self) -> usize {
        round((self.t_end - self.t0) / self.dt) as usize
    }

    /// Number of rows a run of this configuration records.
    pub fn trace_len(&self) -> usize {
        floor((self.t_end - self.t0) / (self.dt * self.record_stride as f64) + 1e-9) as usize + 1
    }

    #[inline]
    pub fn time_at(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }
}

/// Something that happened during a run that did not abort it (clamps, saturations).
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub t: f64,
    pub message: String,
}

/// Column-oriented record of a simulation run. All columns have equal length; `time` is first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimTrace {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    pub events: Vec<TraceEvent>,
}

impl SimTrace {
    pub fn new(names: Vec<String>) -> Self {
        let columns = vec![Vec::new(); names.len()];
        SimTrace {
            names,
            columns,
            events: Vec::new(),
        }
    }

    /// Builds a trace from pre-computed columns.
    pub fn from_columns(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::DimensionMismatch {
                what: "trace columns",
                expected: names.len(),
                got: columns.len(),
            });
        }
        if let Some(first) = columns.first() {
            for c in &columns {
                if c.len() != first.len() {
                    return Err(Error::DimensionMismatch {
                        what: "trace column length",
                        expected: first.len(),
                        got: c.len(),
                    });
                }
            }
        }
        Ok(SimTrace {
            names,
            columns,
            events: Vec::new(),
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn push_row(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.columns.len());
        for (c, v) in self.columns.iter_mut().zip(row) {
            c.push(*v);
        }
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn time(&self) -> &[f64] {
        &self.columns[0]
    }

    /// Appends a derived column of the same length.
    pub fn add_column(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        if !self.columns.is_empty() && values.len() != self.len() {
            return Err(Error::DimensionMismatch {
                what: "added column",
                expected: self.len(),
                got: values.len(),
            });
        }
        self.names.push(name.into());
        self.columns.push(values);
        Ok(())
    }

    /// True when every entry is finite.
    pub fn is_finite(&self) -> bool {
        self.columns.iter().flatten().all(|v| v.is_finite())
    }

    /// Value of column `name` at the last recorded sample.
    pub fn last(&self, name: &str) -> Option<f64> {
        self.column(name).and_then(|c| c.last().copied())
    }
}

/// Continuous-time plant `ẋ = f(x, u, t)`, `y = h(x, t)`.
pub trait Plant {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn derivative(&self, x: &[f64], u: &[f64], t: f64, dx: &mut [f64]);
    fn output(&self, x: &[f64], t: f64, y: &mut [f64]);

    fn state_names(&self) -> Vec<String> {
        (0..self.state_dim()).map(|i| format!("x{i}")).collect()
    }

    fn output_names(&self) -> Vec<String> {
        (0..self.output_dim()).map(|i| format!("y{i}")).collect()
    }
}

/// Discrete-time controller executed once per integration step.
pub trait Controller {
    fn control_dim(&self) -> usize;

    /// Computes the control applied over `[t, t + dt)` and advances internal state by `dt`.
    fn control(&mut self, t: f64, x: &[f64], y: &[f64], dt: f64, u: &mut [f64]) -> Result<()>;

    fn control_names(&self) -> Vec<String> {
        (0..self.control_dim()).map(|i| format!("u{i}")).collect()
    }

    /// Names of extra recorded signals (sliding variables, gains, commands).
    fn signal_names(&self) -> Vec<String> {
        Vec::new()
    }

    /// Values matching [`Controller::signal_names`], as of the last `control` call.
    fn signals(&self, _out: &mut Vec<f64>) {}

    /// Moves any events raised since the last call into `out`.
    fn drain_events(&mut self, _out: &mut Vec<TraceEvent>) {}
}

/// Feeds a time function to the plant input, ignoring feedback.
pub struct OpenLoop<F> {
    input: F,
}

impl<F: Fn(f64) -> f64> OpenLoop<F> {
    pub fn new(input: F) -> Self {
        OpenLoop { input }
    }
}

impl<F: Fn(f64) -> f64> Controller for OpenLoop<F> {
    fn control_dim(&self) -> usize {
        1
    }

    fn control(&mut self, t: f64, _x: &[f64], _y: &[f64], _dt: f64, u: &mut [f64]) -> Result<()> {
        u[0] = (self.input)(t);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    #[default]
    Euler,
    /// Classical fourth-order Runge–Kutta with the control held over the step. Used for
    /// convergence cross-checks only.
    Rk4,
}

fn check_finite(dx: &[f64], t: f64) -> Result<()> {
    match dx.iter().position(|v| !v.is_finite()) {
        Some(component) => Err(Error::Diverged {
            t,
            component,
            value: dx[component],
        }),
        None => Ok(()),
    }
}

/// One forward Euler step `x + dt·f(x, u, t)`.
pub fn euler_step<F>(x: &[f64], deriv: F, u: &[f64], t: f64, dt: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64], &[f64], f64, &mut [f64]),
{
    let mut dx = vec![0.0; x.len()];
    deriv(x, u, t, &mut dx);
    check_finite(&dx, t)?;
    Ok(x.iter().zip(&dx).map(|(xi, di)| xi + dt * di).collect())
}

/// One RK4 step with `u` held constant.
pub fn rk4_step<F>(x: &[f64], deriv: F, u: &[f64], t: f64, dt: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64], &[f64], f64, &mut [f64]),
{
    let mut ws = StepWorkspace::new(x.len());
    let mut out = x.to_vec();
    ws.rk4(&mut out, &deriv, u, t, dt)?;
    Ok(out)
}

struct StepWorkspace {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl StepWorkspace {
    fn new(n: usize) -> Self {
        StepWorkspace {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }

    fn euler<F>(&mut self, x: &mut [f64], deriv: &F, u: &[f64], t: f64, dt: f64) -> Result<()>
    where
        F: Fn(&[f64], &[f64], f64, &mut [f64]),
    {
        deriv(x, u, t, &mut self.k1);
        check_finite(&self.k1, t)?;
        for (xi, di) in x.iter_mut().zip(&self.k1) {
            *xi += dt * di;
        }
        Ok(())
    }

    fn rk4<F>(&mut self, x: &mut [f64], deriv: &F, u: &[f64], t: f64, dt: f64) -> Result<()>
    where
        F: Fn(&[f64], &[f64], f64, &mut [f64]),
    {
        let n = x.len();
        deriv(x, u, t, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * dt * self.k1[i];
        }
        deriv(&self.tmp, u, t + 0.5 * dt, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = x[i] + 0.5 * dt * self.k2[i];
        }
        deriv(&self.tmp, u, t + 0.5 * dt, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = x[i] + dt * self.k3[i];
        }
        deriv(&self.tmp, u, t + dt, &mut self.k4);
        for k in [&self.k1, &self.k2, &self.k3, &self.k4] {
            check_finite(k, t)?;
        }
        for i in 0..n {
            x[i] += dt / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        Ok(())
    }
}

/// Plant, controller, initial state and integration settings of one run.
pub struct Scenario<P, C> {
    pub plant: P,
    pub controller: C,
    pub x0: Vec<f64>,
    pub config: SimConfig,
    pub integrator: Integrator,
    pub divergence_bound: f64,
}

impl<P: Plant, C: Controller> Scenario<P, C> {
    pub fn new(plant: P, controller: C, x0: Vec<f64>, config: SimConfig) -> Self {
        Scenario {
            plant,
            controller,
            x0,
            config,
            integrator: Integrator::Euler,
            divergence_bound: DEFAULT_DIVERGENCE_BOUND,
        }
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn with_divergence_bound(mut self, bound: f64) -> Self {
        self.divergence_bound = bound;
        self
    }

    fn check_consistent(&self) -> Result<()> {
        self.config.validate()?;
        if self.x0.len() != self.plant.state_dim() {
            return Err(Error::DimensionMismatch {
                what: "initial state",
                expected: self.plant.state_dim(),
                got: self.x0.len(),
            });
        }
        if self.controller.control_dim() != self.plant.input_dim() {
            return Err(Error::DimensionMismatch {
                what: "control vector",
                expected: self.plant.input_dim(),
                got: self.controller.control_dim(),
            });
        }
        Ok(())
    }

    /// Runs the closed loop over `[t0, t_end]`, returning the recorded trace together with the
    /// final controller (so callers can inspect its terminal state).
    pub fn run(self) -> Result<(SimTrace, C)> {
        self.check_consistent()?;
        let Scenario {
            plant,
            mut controller,
            x0,
            config,
            integrator,
            divergence_bound,
        } = self;

        let mut names = vec![String::from("time")];
        names.extend(plant.state_names());
        names.extend(plant.output_names());
        names.extend(controller.control_names());
        names.extend(controller.signal_names());
        let mut trace = SimTrace::new(names);
        for c in trace.columns.iter_mut() {
            c.reserve(config.trace_len());
        }

        let n = plant.state_dim();
        let mut x = x0;
        let mut y = vec![0.0; plant.output_dim()];
        let mut u = vec![0.0; plant.input_dim()];
        let mut row = Vec::with_capacity(trace.names.len());
        let mut ws = StepWorkspace::new(n);
        let deriv = |x: &[f64], u: &[f64], t: f64, dx: &mut [f64]| plant.derivative(x, u, t, dx);

        let steps = config.steps();
        for k in 0..=steps {
            let t = config.time_at(k);
            plant.output(&x, t, &mut y);
            controller.control(t, &x, &y, config.dt, &mut u)?;
            controller.drain_events(&mut trace.events);
            if k % config.record_stride == 0 {
                row.clear();
                row.push(t);
                row.extend_from_slice(&x);
                row.extend_from_slice(&y);
                row.extend_from_slice(&u);
                controller.signals(&mut row);
                trace.push_row(&row);
            }
            if k == steps {
                break;
            }
            match integrator {
                Integrator::Euler => ws.euler(&mut x, &deriv, &u, t, config.dt)?,
                Integrator::Rk4 => ws.rk4(&mut x, &deriv, &u, t, config.dt)?,
            }
            if let Some(component) = x
                .iter()
                .position(|v| !v.is_finite() || v.abs() > divergence_bound)
            {
                return Err(Error::Diverged {
                    t: t + config.dt,
                    component,
                    value: x[component],
                });
            }
        }
        Ok((trace, controller))
    }
}

/// Runs a scenario and returns its trace.
pub fn run_simulation<P: Plant, C: Controller>(scenario: Scenario<P, C>) -> Result<SimTrace> {
    scenario.run().map(|(trace, _)| trace)
}

/// Unit step `1(t − τ)`: 1 when `t ≥ τ`, else 0.
#[inline]
pub fn heaviside(t: f64, tau: f64) -> f64 {
    if t >= tau {
        1.0
    } else {
        0.0
    }
}

/// Sum of scaled, delayed unit steps.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTrain {
    terms: Vec<(f64, f64)>,
}

impl StepTrain {
    /// `terms` are `(amplitude, tau)` pairs; must be non-empty.
    pub fn new(terms: Vec<(f64, f64)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::invalid("terms", "step train needs at least one term"));
        }
        Ok(StepTrain { terms })
    }

    pub fn eval(&self, t: f64) -> f64 {
        step_train(t, &self.terms)
    }

    pub fn terms(&self) -> &[(f64, f64)] {
        &self.terms
    }

    /// Gimbal input used for the launch-vehicle relative-degree benchmark.
    pub fn lv_prd_input() -> Self {
        StepTrain {
            terms: vec![(-17.5, 1.0), (35.0, 1.3), (-35.0, 1.85)],
        }
    }

    /// Launch-vehicle pitch command (degrees).
    pub fn lv_pitch_command() -> Self {
        StepTrain {
            terms: vec![(-1.2, 2.0), (2.3, 6.0), (-1.2, 10.0)],
        }
    }
}

/// `Σ amplitude · 1(t − τ)` over `(amplitude, τ)` terms.
pub fn step_train(t: f64, terms: &[(f64, f64)]) -> f64 {
    terms.iter().map(|&(a, tau)| a * heaviside(t, tau)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heaviside_edges() {
        assert_eq!(heaviside(0.99, 1.0), 0.0);
        assert_eq!(heaviside(1.0, 1.0), 1.0);
        assert_eq!(heaviside(2.0, 1.0), 1.0);
    }

    #[test]
    fn step_trains() {
        let prd = StepTrain::lv_prd_input();
        assert_eq!(prd.eval(1.1), -17.5);
        assert_eq!(prd.eval(1.5), 17.5);
        assert_eq!(prd.eval(0.5), 0.0);
        assert_eq!(prd.eval(2.0), -17.5);
        let lv = StepTrain::lv_pitch_command();
        assert!((lv.eval(7.0) - 1.1).abs() < 1e-15);
        assert!(StepTrain::new(Vec::new()).is_err());
    }

    #[test]
    fn euler_trivial_cases() {
        let zero = |_: &[f64], _: &[f64], _: f64, dx: &mut [f64]| dx[0] = 0.0;
        assert_eq!(euler_step(&[5.0], zero, &[], 0.0, 0.1).unwrap(), vec![5.0]);
        let one = |_: &[f64], _: &[f64], _: f64, dx: &mut [f64]| dx[0] = 1.0;
        assert_eq!(euler_step(&[0.0], one, &[], 0.0, 1e-4).unwrap(), vec![1e-4]);
    }

    #[test]
    fn euler_reports_non_finite_derivative() {
        let bad = |_: &[f64], _: &[f64], _: f64, dx: &mut [f64]| {
            dx[0] = 1.0;
            dx[1] = f64::NAN;
        };
        match euler_step(&[0.0, 0.0], bad, &[], 2.5, 0.1) {
            Err(Error::Diverged { t, component, .. }) => {
                assert_eq!(t, 2.5);
                assert_eq!(component, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(0.0, 1.0, 0.0, 1).is_err());
        assert!(SimConfig::new(1.0, 1.0, 0.1, 1).is_err());
        assert!(SimConfig::new(0.0, 1.0, 0.1, 0).is_err());
        let cfg = SimConfig::new(0.0, 1.0, 0.01, 3).unwrap();
        assert_eq!(cfg.steps(), 100);
        assert_eq!(cfg.trace_len(), 34);
    }
}
