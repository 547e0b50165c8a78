use sha2::{Digest, Sha256};

use smc_core::lti::{to_state_space, LtiPlant, TransferFunction};
use smc_core::lv::{run_lv, LvControllerKind, LvScenario};
use smc_core::rpl::{run_rpl, RplControllerKind, RplScenario};
use smc_core::sim::{Integrator, OpenLoop, Plant, Scenario, SimConfig, SimTrace};
use smc_core::Error;

struct Decay;

impl Plant for Decay {
    fn state_dim(&self) -> usize {
        1
    }
    fn input_dim(&self) -> usize {
        1
    }
    fn output_dim(&self) -> usize {
        1
    }
    fn derivative(&self, x: &[f64], u: &[f64], _t: f64, dx: &mut [f64]) {
        dx[0] = -x[0] + u[0];
    }
    fn output(&self, x: &[f64], _t: f64, y: &mut [f64]) {
        y[0] = x[0];
    }
}

fn decay_run(t_end: f64, dt: f64, stride: usize) -> SimTrace {
    let cfg = SimConfig::new(0.0, t_end, dt, stride).unwrap();
    Scenario::new(Decay, OpenLoop::new(|_| 0.0), vec![1.0], cfg).run().unwrap().0
}

fn trace_hash(trace: &SimTrace) -> [u8; 32] {
    let mut h = Sha256::new();
    for name in trace.names() {
        h.update(name.as_bytes());
        h.update([0]);
    }
    for col in trace.columns() {
        for v in col {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    h.finalize().into()
}

#[test]
fn euler_on_exponential_decay() {
    let tr = decay_run(10.0, 1e-4, 1000);
    let x = tr.last("x0").unwrap();
    assert!((x - (-10.0f64).exp()).abs() < 1e-3, "{x}");
    // (1 − dt)^n is the exact Euler iterate
    assert!((x - (1.0f64 - 1e-4).powi(100_000)).abs() < 1e-12);
}

#[test]
fn euler_error_halves_with_dt() {
    let err = |dt: f64| (decay_run(1.0, dt, 1).last("x0").unwrap() - (-1.0f64).exp()).abs();
    for dt in [1e-2, 1e-3] {
        let ratio = err(dt) / err(dt / 2.0);
        assert!((ratio - 2.0).abs() <= 0.4, "dt {dt}: ratio {ratio}");
    }
}

#[test]
fn trace_length_and_time_grid() {
    for (t_end, dt, stride) in [(1.0, 1e-3, 1), (1.0, 1e-3, 7), (2.5, 0.01, 3), (0.05, 0.01, 10)] {
        let tr = decay_run(t_end, dt, stride);
        let expected = ((t_end / (dt * stride as f64)) + 1e-9).floor() as usize + 1;
        assert_eq!(tr.len(), expected, "{t_end} {dt} {stride}");
        let t = tr.time();
        for w in t.windows(2) {
            assert!((w[1] - w[0] - dt * stride as f64).abs() < 1e-9);
        }
        assert!(tr.is_finite());
    }
}

#[test]
fn columns_are_time_states_outputs_controls() {
    let tr = decay_run(0.1, 0.01, 1);
    assert_eq!(tr.names(), ["time", "x0", "y0", "u0"]);
}

#[test]
fn divergence_aborts() {
    struct Blowup;
    impl Plant for Blowup {
        fn state_dim(&self) -> usize {
            1
        }
        fn input_dim(&self) -> usize {
            1
        }
        fn output_dim(&self) -> usize {
            1
        }
        fn derivative(&self, x: &[f64], _u: &[f64], _t: f64, dx: &mut [f64]) {
            dx[0] = 10.0 * x[0];
        }
        fn output(&self, x: &[f64], _t: f64, y: &mut [f64]) {
            y[0] = x[0];
        }
    }
    let cfg = SimConfig::new(0.0, 100.0, 1e-3, 1).unwrap();
    let r = Scenario::new(Blowup, OpenLoop::new(|_| 0.0), vec![1.0], cfg).run();
    assert!(matches!(r, Err(Error::Diverged { .. })));
}

#[test]
fn realization_step_response_matches_closed_form() {
    // 2 / ((s + 1)(s + 2)): y = 1 − 2e^(−t) + e^(−2t)
    let tf = TransferFunction::new(vec![2.0], vec![1.0, 3.0, 2.0]).unwrap();
    let plant = LtiPlant::new(&tf).unwrap();
    let n = to_state_space(&tf).unwrap().order();
    let cfg = SimConfig::new(0.0, 5.0, 1e-5, 1000).unwrap();
    let (tr, _) = Scenario::new(plant, OpenLoop::new(|_| 1.0), vec![0.0; n], cfg)
        .with_integrator(Integrator::Rk4)
        .run()
        .unwrap();
    for (t, y) in tr.time().iter().zip(tr.column("y").unwrap()).skip(1) {
        let want = 1.0 - 2.0 * (-t).exp() + (-2.0 * t).exp();
        assert!((y - want).abs() <= 1e-6 * want.abs(), "t {t}: {y} vs {want}");
    }
}

#[test]
fn runs_are_bit_identical() {
    let a = decay_run(3.0, 1e-3, 3);
    let b = decay_run(3.0, 1e-3, 3);
    assert_eq!(trace_hash(&a), trace_hash(&b));

    let sc = RplScenario {
        t_end: 30.0,
        ..RplScenario::default().with_controller(RplControllerKind::AdaptiveStw)
    };
    assert_eq!(trace_hash(&run_rpl(&sc).unwrap().trace), trace_hash(&run_rpl(&sc).unwrap().trace));

    let sc = LvScenario {
        t_end: 5.0,
        ..LvScenario::default().with_controller(LvControllerKind::Stw)
    };
    let (a, b) = (run_lv(&sc).unwrap(), run_lv(&sc.clone()).unwrap());
    assert_eq!(trace_hash(&a.trace), trace_hash(&b.trace));
    assert_ne!(trace_hash(&a.trace), trace_hash(&decay_run(3.0, 1e-3, 3)));
}
