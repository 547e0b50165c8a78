mod config;
mod custom;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use smc_core::differentiator::{differentiate_trace, DiffConfig};
use smc_core::lti::{relative_degree, TransferFunction};
use smc_core::lv::{run_lv, LvControllerKind};
use smc_core::prd::{corpus_system, identify_prd_tf, Criterion, PrdConfig, PrdReport};
use smc_core::rpl::{min_interior_pulse, run_rpl, RplControllerKind, DEG};
use smc_core::sim::{SimTrace, StepTrain};
use smc_core::sliding_variable::design_coefficients;

use config::{Case, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Core(smc_core::Error),
    CheckFailed(Vec<String>),
}

impl From<smc_core::Error> for CliError {
    fn from(e: smc_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Core(smc_core::Error::Diverged { .. } | smc_core::Error::AllocationSingularity { .. }) => 2,
            CliError::Core(_) => 1,
            CliError::CheckFailed(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Core(smc_core::Error::Diverged { .. } | smc_core::Error::AllocationSingularity { .. }) => {
                "divergence"
            }
            CliError::Core(_) => "invalid",
            CliError::CheckFailed(_) => "check",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Config(m) | CliError::Io(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
            CliError::CheckFailed(names) => format!("checks failed: {}", names.join(", ")),
        }
    }
}

#[derive(Parser)]
#[command(name = "smc", version, about = "Sliding-mode control design and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a closed loop and write its trace and metrics.
    Run(RunArgs),
    /// List the built-in scenarios.
    Scenarios,
    /// Identify the practical relative degree from a step experiment.
    PrdId(PrdArgs),
    /// Design sliding-variable coefficients for relative degree r and a settling time.
    DesignSigma {
        #[arg(long)]
        r: usize,
        #[arg(long)]
        ts: f64,
        #[arg(long)]
        no_integral: bool,
    },
    /// Run the HOSM differentiator over a sampled signal.
    Diff(DiffArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// rpl, lv or custom; optional with --scenario or --config.
    case: Option<String>,
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    controller: Option<String>,
    #[arg(long, conflicts_with = "unperturbed")]
    perturbed: bool,
    #[arg(long)]
    unperturbed: bool,
    /// RPL only: no descent thrust ceiling, no PID clamps.
    #[arg(long)]
    relaxed_limits: bool,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    tend: Option<f64>,
    #[arg(long)]
    stride: Option<usize>,
    /// Trace CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Metrics JSON.
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Resolved config JSON; defaults to `<out stem>.config.json` next to the trace.
    #[arg(long)]
    resolved: Option<PathBuf>,
    /// Exit with 3 if any acceptance check fails.
    #[arg(long)]
    check: bool,
}

#[derive(clap::Args)]
struct PrdArgs {
    /// `lv_prd_bench` or a JSON file `{"num": [...], "den": [...]}`.
    #[arg(long, default_value = "lv_prd_bench")]
    model: String,
    /// `step` (amplitude at tau) or `lv` (the launch-vehicle gimbal train); default depends on model.
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    max_order: Option<usize>,
    #[arg(long)]
    n_iter: Option<usize>,
    #[arg(long)]
    window: Option<f64>,
    /// Fine time scale preset (dt 1e-6) for plants with fast poles.
    #[arg(long)]
    fine: bool,
    /// Identify a random corpus of this many systems instead of a model.
    #[arg(long)]
    corpus: Option<usize>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// CSV of the output and the derivative estimates.
    #[arg(long)]
    traces: Option<PathBuf>,
    /// Report JSON file (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with 3 if the identified degree differs from the algebraic one.
    #[arg(long)]
    check: bool,
}

#[derive(clap::Args)]
struct DiffArgs {
    input: Option<PathBuf>,
    #[arg(long)]
    order: usize,
    #[arg(long, default_value_t = 0)]
    filter: usize,
    #[arg(long = "L")]
    big_l: f64,
    #[arg(long)]
    dt: f64,
    /// Column name in a CSV with a header.
    #[arg(long)]
    column: Option<String>,
    /// Use sin(t) sampled over [0, T] instead of an input file.
    #[arg(long)]
    sine: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Scenarios => {
            emit(&config::SCENARIOS.join("\n"))
        }
        Command::PrdId(a) => cmd_prd(a),
        Command::DesignSigma { r, ts, no_integral } => cmd_design(r, ts, !no_integral),
        Command::Diff(a) => cmd_diff(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            let payload = json!({"error": {"kind": e.kind(), "message": e.message(), "exit_code": e.exit_code()}});
            eprintln!("{payload}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run_config(a: &RunArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match (&a.scenario, &a.config) {
        (Some(_), Some(_)) => return Err(CliError::Config("--scenario and --config are exclusive".into())),
        (Some(name), None) => config::builtin(name)?,
        (None, Some(path)) => config::load(path)?,
        (None, None) => {
            let name = a
                .case
                .as_deref()
                .ok_or_else(|| CliError::Config("give a case (rpl, lv, custom), --scenario or --config".into()))?;
            RunConfig::new(
                Case::parse(name).ok_or_else(|| CliError::Config(format!("unknown case `{name}`")))?,
            )
        }
    };
    if let Some(name) = &a.case {
        if Case::parse(name) != Some(cfg.case) {
            return Err(CliError::Config(format!(
                "case `{name}` conflicts with the configured case `{}`",
                cfg.case.name()
            )));
        }
    }
    if let Some(c) = &a.controller {
        cfg.controller = Some(c.clone());
    }
    if a.perturbed {
        cfg.perturbed = Some(true);
    }
    if a.unperturbed {
        cfg.perturbed = Some(false);
    }
    if a.relaxed_limits {
        if cfg.case != Case::Rpl {
            return Err(CliError::Config("--relaxed-limits applies to the rpl case only".into()));
        }
        cfg.rpl.get_or_insert_with(Default::default).relaxed_limits = true;
    }
    if a.dt.is_some() {
        cfg.sim.dt = a.dt;
    }
    if a.tend.is_some() {
        cfg.sim.t_end = a.tend;
    }
    if a.stride.is_some() {
        cfg.sim.record_stride = a.stride;
    }
    cfg.resolve()
}

#[derive(serde::Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    limit: f64,
    pass: bool,
}

impl Check {
    fn at_most(name: &'static str, value: f64, limit: f64) -> Self {
        Check {
            name,
            value,
            limit,
            pass: value <= limit,
        }
    }

    fn at_least(name: &'static str, value: f64, limit: f64) -> Self {
        Check {
            name,
            value,
            limit,
            pass: value >= limit,
        }
    }
}

fn col<'a>(trace: &'a SimTrace, name: &str) -> &'a [f64] {
    trace.column(name).unwrap_or_else(|| panic!("trace has no column `{name}`"))
}

fn non_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] >= w[0])
}

/// Angles to degrees at the file boundary.
fn rpl_trace_in_degrees(trace: &SimTrace) -> Result<SimTrace, CliError> {
    let mut names = trace.names().to_vec();
    let mut cols = trace.columns().to_vec();
    for (name, c) in names.iter_mut().zip(cols.iter_mut()) {
        if name == "theta" || name == "theta_dot" {
            name.push_str("_deg");
            c.iter_mut().for_each(|v| *v /= DEG);
        }
    }
    let mut out = SimTrace::from_columns(names, cols)?;
    out.events = trace.events.clone();
    Ok(out)
}

fn cmd_run(a: RunArgs) -> Result<(), CliError> {
    let cfg = run_config(&a)?;
    let mut checks = Vec::new();
    let (trace, metrics) = match cfg.case {
        Case::Rpl => {
            let sc = cfg.rpl_scenario()?;
            let run = run_rpl(&sc)?;
            let t = run.trace.time();
            let theta_dot = run.trace.last("theta_dot").unwrap_or(f64::NAN) / DEG;
            let x_dot = run.trace.last("x_dot").unwrap_or(f64::NAN);
            checks.push(Check::at_most("abs_theta_dot_end_deg_s", theta_dot.abs(), 1.14));
            checks.push(Check::at_most("abs_x_dot_end_m_s", x_dot.abs(), 0.5));
            let hold = sc.pwm_a.hold;
            let pulse = [col(&run.trace, "u_a"), col(&run.trace, "u_d")]
                .iter()
                .filter_map(|u| min_interior_pulse(t, u))
                .fold(f64::INFINITY, f64::min);
            // trace samples are record_stride·dt apart: allow one sample of quantization
            let tol = sc.dt * sc.record_stride as f64 * 0.5;
            checks.push(Check::at_least("min_pulse_s", pulse, hold - tol));
            if sc.controller == RplControllerKind::AdaptiveSmc1 {
                let mono = non_decreasing(col(&run.trace, "rho_a")) && non_decreasing(col(&run.trace, "rho_d"));
                checks.push(Check::at_least("gains_non_decreasing", mono as u8 as f64, 1.0));
            }
            let m = json!({
                "j_ea_deg": run.metrics.j_ea,
                "j_ed_m": run.metrics.j_ed,
                "j_ua": run.metrics.j_ua,
                "j_ud": run.metrics.j_ud,
                "final_gains": [run.final_gains.0, run.final_gains.1],
                "theta_end_deg": run.trace.last("theta").unwrap_or(f64::NAN) / DEG,
                "theta_dot_end_deg_s": theta_dot,
                "x_end_m": run.trace.last("x").unwrap_or(f64::NAN),
                "x_dot_end_m_s": x_dot,
            });
            (rpl_trace_in_degrees(&run.trace)?, m)
        }
        Case::Lv => {
            let sc = cfg.lv_scenario()?;
            let run = run_lv(&sc)?;
            if sc.controller == LvControllerKind::Smc1 {
                checks.push(Check::at_most("j_e_deg", run.metrics.j_e, 0.005));
            }
            checks.push(Check::at_most("max_abs_beta_deg", run.metrics.max_abs_beta, 5.0));
            let lambda = col(&run.trace, "lambda");
            let m = json!({
                "j_e_deg": run.metrics.j_e,
                "j_u": run.metrics.j_u,
                "max_abs_beta_deg": run.metrics.max_abs_beta,
                "lambda_end": lambda.last().copied().unwrap_or(0.0),
                "lambda_max": lambda.iter().copied().fold(0.0, f64::max),
            });
            (run.trace, m)
        }
        Case::Custom => {
            let (trace, m) = custom::run_custom(
                &cfg.custom_section(),
                cfg.controller.as_deref().unwrap_or("smc1"),
                cfg.perturbed.unwrap_or(true),
                cfg.sim(),
            )?;
            (trace, serde_json::to_value(m).map_err(|e| CliError::Io(e.to_string()))?)
        }
    };
    let resolved = serde_json::to_value(&cfg).map_err(|e| CliError::Io(e.to_string()))?;
    if let Some(path) = &a.out {
        output::write_trace(path, &trace)?;
    }
    let resolved_path = a.resolved.clone().or_else(|| a.out.as_deref().map(config_path_for));
    if let Some(path) = &resolved_path {
        output::write_json(path, &resolved)?;
    }
    let failed: Vec<String> = checks.iter().filter(|c| !c.pass).map(|c| c.name.to_string()).collect();
    let report = json!({
        "case": cfg.case.name(),
        "controller": cfg.controller,
        "perturbed": cfg.perturbed,
        "metrics": metrics,
        "checks": checks,
        "events": trace.events.iter().map(|e| json!({"t": e.t, "message": e.message})).collect::<Vec<_>>(),
        "config": resolved,
    });
    match &a.metrics {
        Some(path) => output::write_json(path, &report)?,
        None => emit(&serde_json::to_string_pretty(&report["metrics"]).unwrap_or_default())?,
    }
    if a.check && !failed.is_empty() {
        return Err(CliError::CheckFailed(failed));
    }
    Ok(())
}

/// Writes a line to stdout; a closed pipe (`| head`) is not an error.
fn emit(text: &str) -> Result<(), CliError> {
    use std::io::Write;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io(e.to_string())),
        _ => Ok(()),
    }
}

fn config_path_for(trace: &Path) -> PathBuf {
    let stem = trace.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    trace.with_file_name(format!("{stem}.config.json"))
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    num: Vec<f64>,
    den: Vec<f64>,
}

fn prd_config(a: &PrdArgs) -> Result<PrdConfig, CliError> {
    let mut cfg = if a.fine || a.corpus.is_some() {
        PrdConfig::fine()
    } else {
        PrdConfig::default()
    };
    if let Some(v) = a.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = a.tau {
        cfg.tau = v;
    }
    if let Some(v) = a.dt {
        cfg.dt = v;
    }
    if let Some(v) = a.max_order {
        cfg.max_order = v;
    }
    if let Some(v) = a.n_iter {
        cfg.n_iter = v;
    }
    if let Some(v) = a.window {
        cfg.window = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn criterion_name(c: Option<Criterion>) -> Option<&'static str> {
    c.map(|c| match c {
        Criterion::Step => "step",
        Criterion::SlopeBreak => "slope_break",
    })
}

fn report_json(rep: &PrdReport, algebraic: usize) -> Value {
    json!({
        "prd": rep.prd,
        "criterion": criterion_name(rep.criterion),
        "algebraic_relative_degree": algebraic,
        "probes": rep.probes.iter().map(|p| json!({
            "order": p.order,
            "big_l": p.big_l,
            "step_score": p.verdict.step_score,
            "slope_score": p.verdict.slope_score,
            "step_like": p.verdict.step_like,
            "slope_break": p.verdict.slope_break,
        })).collect::<Vec<_>>(),
    })
}

fn cmd_prd(a: PrdArgs) -> Result<(), CliError> {
    let cfg = prd_config(&a)?;
    let cfg_json = json!({
        "alpha": cfg.alpha, "tau": cfg.tau, "dt": cfg.dt, "max_order": cfg.max_order,
        "n_iter": cfg.n_iter, "window": cfg.window,
    });
    let (report, agree) = match a.corpus {
        Some(n) => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            let mut systems = Vec::with_capacity(n);
            let mut hits = 0;
            for i in 0..n {
                let r = 1 + i % 5;
                let tf = corpus_system(r, || rng.random::<f64>())?;
                let rep = identify_prd_tf(&tf, None, &cfg)?;
                hits += usize::from(rep.prd == Some(r));
                let mut j = report_json(&rep, r);
                j["num"] = json!(tf.num());
                j["den"] = json!(tf.den());
                systems.push(j);
            }
            let report = json!({"seed": a.seed, "systems": systems, "agreement": hits, "total": n, "config": cfg_json});
            (report, hits == n)
        }
        None => {
            let (tf, default_input) = match a.model.as_str() {
                "lv_prd_bench" => (TransferFunction::lv_prd_bench(), "lv"),
                path => {
                    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{path}: {e}")))?;
                    let m: ModelFile =
                        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{path}: {e}")))?;
                    (TransferFunction::new(m.num, m.den)?, "step")
                }
            };
            let input = match a.input.as_deref().unwrap_or(default_input) {
                "lv" => Some(StepTrain::lv_prd_input()),
                "step" => None,
                other => return Err(CliError::Config(format!("unknown input `{other}` (step, lv)"))),
            };
            let algebraic = relative_degree(&tf)?;
            let rep = identify_prd_tf(&tf, input, &cfg)?;
            if let Some(path) = &a.traces {
                let mut names = vec!["time".to_string(), "y".to_string()];
                let time: Vec<f64> = (0..rep.output.len()).map(|k| rep.t0 + k as f64 * rep.dt).collect();
                let mut cols: Vec<&[f64]> = vec![&time, &rep.output];
                for p in &rep.probes {
                    names.push(format!("d{}", p.order));
                    cols.push(&p.estimate);
                }
                let file =
                    std::fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                output::write_csv(std::io::BufWriter::new(file), &names, &cols)?;
            }
            let mut report = report_json(&rep, algebraic);
            report["model"] = json!(a.model);
            report["config"] = cfg_json;
            let ok = rep.prd == Some(algebraic);
            (report, ok)
        }
    };
    match &a.out {
        Some(path) => output::write_json(path, &report)?,
        None => emit(&serde_json::to_string_pretty(&report).unwrap_or_default())?,
    }
    if a.check && !agree {
        return Err(CliError::CheckFailed(vec!["prd_matches_relative_degree".into()]));
    }
    Ok(())
}

fn cmd_design(r: usize, ts: f64, integral: bool) -> Result<(), CliError> {
    let spec = design_coefficients(r, ts, integral)?;
    let mut out = json!({"c": spec.coefficients()});
    if integral {
        out["c_int"] = json!(spec.integral_coefficient());
    }
    emit(&out.to_string())
}

fn cmd_diff(a: DiffArgs) -> Result<(), CliError> {
    if !(a.dt > 0.0) {
        return Err(CliError::Config("--dt must be positive".into()));
    }
    let samples = match (&a.input, a.sine) {
        (Some(_), Some(_)) => return Err(CliError::Config("give an input file or --sine, not both".into())),
        (Some(path), None) => output::read_samples(path, a.column.as_deref())?,
        (None, Some(t_end)) => {
            let n = (t_end / a.dt).round() as usize;
            (0..=n).map(|k| (k as f64 * a.dt).sin()).collect()
        }
        (None, None) => return Err(CliError::Config("give an input file or --sine T".into())),
    };
    let cfg = DiffConfig::new(a.order, a.filter, a.big_l)?;
    let tr = differentiate_trace(&cfg, &samples, a.dt, 0.0)?;
    let mut names: Vec<String> = (0..=a.order).map(|i| format!("z{i}")).collect();
    names.push("residual".into());
    let mut cols: Vec<&[f64]> = tr.z.iter().map(|z| z.as_slice()).collect();
    cols.push(&tr.residual);
    match &a.out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            output::write_csv(std::io::BufWriter::new(file), &names, &cols)
        }
        None => output::write_csv(std::io::stdout().lock(), &names, &cols),
    }
}
