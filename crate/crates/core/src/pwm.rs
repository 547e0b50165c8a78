//! Off-pulse layer: dithered sliding variable, time-varying dead band and sample-and-hold.
//!
//! The relay `ρ sign(σ̄)` fires only outside the dead band, and the sample-and-hold quantizes the
//! resulting three-level signal to multiples of `hold`, so every pulse lasts at least `hold`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math::{sign, sin};

#[derive(Debug, Clone, PartialEq)]
pub struct DeadbandSchedule {
    /// `(t_start, t_end, delta)`, contiguous and ascending.
    intervals: Vec<(f64, f64, f64)>,
}

impl DeadbandSchedule {
    pub fn new(intervals: Vec<(f64, f64, f64)>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::invalid("deadband", "schedule is empty"));
        }
        for (i, &(a, b, d)) in intervals.iter().enumerate() {
            if !(b > a) || !a.is_finite() || !b.is_finite() {
                return Err(Error::invalid("deadband", "each interval needs t_start < t_end"));
            }
            if !(d > 0.0) {
                return Err(Error::invalid("deadband", "dead band widths must be positive"));
            }
            if i > 0 && (a - intervals[i - 1].1).abs() > 1e-12 * b.abs().max(1.0) {
                return Err(Error::invalid("deadband", "intervals must be contiguous"));
            }
        }
        Ok(DeadbandSchedule { intervals })
    }

    /// Single band over `[0, t_end]`.
    pub fn constant(delta: f64, t_end: f64) -> Result<Self> {
        Self::new(alloc::vec![(0.0, t_end, delta)])
    }

    /// RPL attitude channel: 0.05, 0.025, 0.01 over 0–100, 100–200, 200–240 s.
    pub fn rpl_attitude() -> Self {
        DeadbandSchedule {
            intervals: alloc::vec![(0.0, 100.0, 0.05), (100.0, 200.0, 0.025), (200.0, 240.0, 0.01)],
        }
    }

    /// RPL descent channel: 0.1, 0.075, 0.05 over 0–100, 100–200, 200–240 s.
    pub fn rpl_descent() -> Self {
        DeadbandSchedule {
            intervals: alloc::vec![(0.0, 100.0, 0.1), (100.0, 200.0, 0.075), (200.0, 240.0, 0.05)],
        }
    }

    pub fn intervals(&self) -> &[(f64, f64, f64)] {
        &self.intervals
    }

    pub fn start(&self) -> f64 {
        self.intervals[0].0
    }

    pub fn end(&self) -> f64 {
        self.intervals[self.intervals.len() - 1].1
    }

    /// Returns `(delta, covered)`. A boundary belongs to the later interval; outside coverage the
    /// last interval's width is returned with `covered = false`.
    pub fn lookup(&self, t: f64) -> (f64, bool) {
        let last = self.intervals[self.intervals.len() - 1];
        if t < self.start() || t > self.end() {
            return (last.2, false);
        }
        for &(_, b, d) in &self.intervals {
            if t < b {
                return (d, true);
            }
        }
        (last.2, true)
    }
}

/// Dead band width at `t`; logs a warning outside the schedule.
pub fn deadband_at(t: f64, schedule: &DeadbandSchedule) -> f64 {
    let (d, covered) = schedule.lookup(t);
    if !covered {
        log::warn!("t = {t} s outside dead band schedule, using last width {d}");
    }
    d
}

#[derive(Debug, Clone, PartialEq)]
pub struct PwmConfig {
    /// Dither amplitude.
    pub a: f64,
    /// Dither frequency in Hz.
    pub freq_hz: f64,
    /// Sample-and-hold period in seconds.
    pub hold: f64,
    pub schedule: DeadbandSchedule,
}

impl PwmConfig {
    pub fn new(a: f64, freq_hz: f64, hold: f64, schedule: DeadbandSchedule) -> Result<Self> {
        let cfg = PwmConfig {
            a,
            freq_hz,
            hold,
            schedule,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a >= 0.0) {
            return Err(Error::invalid("a", "dither amplitude must be non-negative"));
        }
        if !(self.freq_hz >= 0.0) || !self.freq_hz.is_finite() {
            return Err(Error::invalid("freq_hz", "must be finite and non-negative"));
        }
        if !(self.hold > 0.0) {
            return Err(Error::invalid("hold", "must be positive"));
        }
        Ok(())
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * self.freq_hz
    }
}

/// Held output and the next sampling instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SampleHoldState {
    pub held: f64,
    pub next_sample: Option<f64>,
}

impl SampleHoldState {
    /// Samples `raw` if a sampling instant has been reached, and returns the held value.
    pub fn update(&mut self, raw: f64, t: f64, hold: f64) -> f64 {
        let due = match self.next_sample {
            None => true,
            Some(next) => t >= next - 1e-9 * hold,
        };
        if due {
            self.held = raw;
            let mut next = self.next_sample.unwrap_or(t) + hold;
            while next <= t + 1e-9 * hold {
                next += hold;
            }
            self.next_sample = Some(next);
        }
        self.held
    }
}

/// `σ̄ = σ + a sin(2π f t)`.
pub fn modified_sigma(sigma: f64, t: f64, cfg: &PwmConfig) -> f64 {
    sigma + cfg.a * sin(cfg.omega() * t)
}

/// Dead-band relay before the hold.
pub fn deadband_relay(rho: f64, sigma_bar: f64, delta: f64) -> f64 {
    if sigma_bar.abs() > delta {
        rho * sign(sigma_bar)
    } else {
        0.0
    }
}

/// Three-level pulse `{−ρ, 0, ρ}` after dead band and sample-and-hold.
pub fn offpulse_control(rho: f64, sigma_bar: f64, t: f64, cfg: &PwmConfig, sh: &mut SampleHoldState) -> f64 {
    let raw = deadband_relay(rho, sigma_bar, deadband_at(t, &cfg.schedule));
    sh.update(raw, t, cfg.hold)
}

/// Fractions of a dither period spent at `+ρ` and at `−ρ`, for constant `σ` and `a > 0`.
pub fn duty_cycle(sigma: f64, a: f64, delta: f64) -> (f64, f64) {
    let above = |x: f64| 0.5 - libm::asin(x.clamp(-1.0, 1.0)) / PI;
    (above((delta - sigma) / a), 1.0 - above((-delta - sigma) / a))
}

/// Maximal runs of nonzero values with constant sign, as `(start index, length)`.
pub fn pulse_runs(u: &[f64]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut i = 0;
    while i < u.len() {
        if u[i] == 0.0 {
            i += 1;
            continue;
        }
        let s = sign(u[i]);
        let start = i;
        while i < u.len() && sign(u[i]) == s {
            i += 1;
        }
        runs.push((start, i - start));
    }
    runs
}
