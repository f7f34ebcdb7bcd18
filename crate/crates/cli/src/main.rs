//! Batch front-end for the hysteresis toolkit. Every subcommand reads one
//! TOML config, writes its artifacts into the output directory, and exits
//! with a code that tells failure classes apart:
//! 0 success, 2 config error, 3 data error, 4 solver divergence,
//! 5 identification failure.

mod config;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use boucwen::compensate::{evaluate_cascade, CompensatorSpec, LoopMode, PlantSpec};
use boucwen::csv::{read_csv, write_csv};
use boucwen::fracdiff::{gl_derivative, Memory};
use boucwen::identify::{identify, IdentificationProblem, ModelKind, PENALTY_OBJECTIVE};
use boucwen::models::{
    loop_branches, loop_metrics, normalize_cbw, simulate_anbw, simulate_cbw, simulate_cbw_aux,
    simulate_fonbw, simulate_nbw, simulate_zhu, CbwAuxParams, CbwParams, FonbwParams, NbwParams,
    PolynomialGain, ZhuParams,
};
use boucwen::signals::{gen_decaying_sweep, gen_multifreq, gen_sine_offset, TimeSeries};

use config::{
    CommandName, CompensateMode, CompensateSpec, GeneratorName, ModelName, RunConfig, SignalSpec,
};

#[derive(Debug)]
pub enum AppError {
    Config(String),
    Data(String),
    Solver(String),
    Identification(String),
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::Config(_) => 2,
            AppError::Data(_) => 3,
            AppError::Solver(_) => 4,
            AppError::Identification(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            AppError::Config(m)
            | AppError::Data(m)
            | AppError::Solver(m)
            | AppError::Identification(m) => m,
        }
    }
}

impl From<boucwen::Error> for AppError {
    fn from(e: boucwen::Error) -> Self {
        match &e {
            boucwen::Error::InvalidArgument(_) => AppError::Config(e.to_string()),
            boucwen::Error::Data(_) => AppError::Data(e.to_string()),
            boucwen::Error::Diverged { .. } | boucwen::Error::SolverFailed { .. } => {
                AppError::Solver(e.to_string())
            }
        }
    }
}

#[derive(Parser)]
#[command(
    name = "boucwen",
    version,
    about = "Bouc-Wen hysteresis toolkit: simulation, identification, compensation"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Run a model over an input signal and write the response
    Simulate(CommonArgs),
    /// Fit model parameters to a measured t,u,H record
    Identify(CommonArgs),
    /// Build an inverse command signal and check the closed cascade
    Compensate(CommonArgs),
    /// Apply a fractional derivative to a signal
    Fracdiff(CommonArgs),
    /// Map classical parameters to the normalized form
    Normalize(CommonArgs),
    /// Loop area, width, and centering of a t,u,H record
    Metrics(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration document
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in [identify]
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (defaults to out_dir in the config, then ".")
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides [signal] dt (generated signals only)
    #[arg(long)]
    dt: Option<f64>,
    /// Overrides [solver] memory: a sample count or "unbounded"
    #[arg(long)]
    memory: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match &cli.command {
        Sub::Simulate(a) => (CommandName::Simulate, a),
        Sub::Identify(a) => (CommandName::Identify, a),
        Sub::Compensate(a) => (CommandName::Compensate, a),
        Sub::Fracdiff(a) => (CommandName::Fracdiff, a),
        Sub::Normalize(a) => (CommandName::Normalize, a),
        Sub::Metrics(a) => (CommandName::Metrics, a),
    };
    match run(name, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(name: CommandName, args: &CommonArgs) -> Result<(), AppError> {
    let cfg = RunConfig::load(&args.config)?;
    if let Some(declared) = cfg.command {
        if declared != name {
            return Err(AppError::Config(format!(
                "config declares command '{}' but '{}' was invoked",
                declared.as_str(),
                name.as_str()
            )));
        }
    }
    if args.seed.is_some() && name != CommandName::Identify {
        return Err(AppError::Config("--seed only applies to identify".into()));
    }
    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| AppError::Data(format!("cannot create {}: {e}", out_dir.display())))?;
    let memory = resolve_memory(&cfg, args)?;

    match name {
        CommandName::Simulate => cmd_simulate(&cfg, args, &out_dir, memory),
        CommandName::Identify => cmd_identify(&cfg, args, &out_dir, memory),
        CommandName::Compensate => cmd_compensate(&cfg, args, &out_dir, memory),
        CommandName::Fracdiff => cmd_fracdiff(&cfg, args, &out_dir, memory),
        CommandName::Normalize => cmd_normalize(&cfg, &out_dir, memory),
        CommandName::Metrics => cmd_metrics(&cfg, args, &out_dir, memory),
    }
}

fn resolve_memory(cfg: &RunConfig, args: &CommonArgs) -> Result<Option<Memory>, AppError> {
    if let Some(text) = &args.memory {
        let mem: Memory = text
            .parse()
            .map_err(|e| AppError::Config(format!("--memory: {e}")))?;
        return Ok(Some(mem));
    }
    match &cfg.solver.memory {
        Some(doc) => Ok(Some(doc.to_memory()?)),
        None => Ok(None),
    }
}

fn reject_memory(memory: &Option<Memory>, what: &str) -> Result<(), AppError> {
    if memory.is_some() {
        return Err(AppError::Config(format!("memory does not apply to {what}")));
    }
    Ok(())
}

fn echo<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

/// Builds the input series plus a JSON echo of where it came from.
fn build_signal(
    spec: &SignalSpec,
    dt_override: Option<f64>,
) -> Result<(TimeSeries, Option<TimeSeries>, Value), AppError> {
    if let Some(path) = &spec.csv {
        if dt_override.is_some() {
            return Err(AppError::Config(
                "--dt cannot override a csv source".into(),
            ));
        }
        let (u, h) = read_csv(path)?;
        return Ok((u, h, json!({ "csv": path.display().to_string() })));
    }
    let gen = spec.generator.expect("validated signal spec");
    let dt = dt_override.or(spec.dt).expect("validated signal spec");
    let duration = spec.duration.expect("validated signal spec");
    let (u, name) = match gen {
        GeneratorName::SineOffset => (
            gen_sine_offset(
                spec.amplitude.expect("validated signal spec"),
                spec.frequency.expect("validated signal spec"),
                duration,
                dt,
            )?,
            "sine_offset",
        ),
        GeneratorName::DecayingSweep => (gen_decaying_sweep(duration, dt)?, "decaying_sweep"),
        GeneratorName::Multifreq => (gen_multifreq(duration, dt)?, "multifreq"),
    };
    let mut m = serde_json::Map::new();
    m.insert("generator".into(), json!(name));
    if let Some(a) = spec.amplitude {
        m.insert("amplitude".into(), json!(a));
    }
    if let Some(f) = spec.frequency {
        m.insert("frequency".into(), json!(f));
    }
    m.insert("duration".into(), json!(duration));
    m.insert("dt".into(), json!(dt));
    Ok((u, None, Value::Object(m)))
}

fn export_loops(
    u: &TimeSeries,
    h: &TimeSeries,
    cfg: &RunConfig,
    out_dir: &Path,
) -> Result<(), AppError> {
    let points = cfg.export.grid_points.unwrap_or(201);
    if points < 2 {
        return Err(AppError::Config(
            "[export] grid_points must be at least 2".into(),
        ));
    }
    let (lo, hi) = u.value_range();
    let grid: Vec<f64> = (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect();
    let b = loop_branches(u, h, &grid)?;
    report::write_branches(
        &out_dir.join("loop_branches.csv"),
        &b.u_grid,
        &b.ascending,
        &b.descending,
    )
}

fn cmd_simulate(
    cfg: &RunConfig,
    args: &CommonArgs,
    out_dir: &Path,
    memory: Option<Memory>,
) -> Result<(), AppError> {
    let model = cfg.required_model()?;
    let (u, _, signal_echo) = build_signal(cfg.required_signal()?, args.dt)?;
    let mut mem_echo = Value::Null;
    let (h, params_echo) = match model {
        ModelName::Cbw => {
            reject_memory(&memory, "the classical model")?;
            let p: CbwParams = cfg.typed_params()?;
            (simulate_cbw(&p, &u)?, echo(&p))
        }
        ModelName::CbwAux => {
            reject_memory(&memory, "the classical model")?;
            let p: CbwAuxParams = cfg.typed_params()?;
            (simulate_cbw_aux(&p, &u)?, echo(&p))
        }
        ModelName::Nbw => {
            reject_memory(&memory, "the normalized integer-order model")?;
            let p: NbwParams = cfg.typed_params()?;
            (simulate_nbw(&p, &u)?, echo(&p))
        }
        ModelName::Anbw => {
            reject_memory(&memory, "the asymmetric integer-order model")?;
            let doc: config::AnbwDoc = cfg.typed_params()?;
            let poly = PolynomialGain::new(doc.poly.clone())?;
            let nb = NbwParams {
                k_u: 0.0,
                k_h: doc.k_h,
                rho: doc.rho,
                sigma: doc.sigma,
                n: doc.n,
                hbar_init: doc.hbar_init,
            };
            let sim = simulate_anbw(&poly, &nb, &u)?;
            (
                sim,
                json!({
                    "poly": doc.poly,
                    "k_h": doc.k_h,
                    "rho": doc.rho,
                    "sigma": doc.sigma,
                    "n": doc.n,
                    "hbar_init": doc.hbar_init,
                }),
            )
        }
        ModelName::Fonbw => {
            let p: FonbwParams = cfg.typed_params()?;
            let mem = memory.unwrap_or_default();
            mem_echo = json!(mem.to_string());
            (simulate_fonbw(&p, &u, mem)?, echo(&p))
        }
        ModelName::Zhu => {
            reject_memory(&memory, "the comparison model")?;
            let p: ZhuParams = cfg.typed_params()?;
            (simulate_zhu(&p, &u)?, echo(&p))
        }
    };
    write_csv(out_dir.join("simulation.csv"), &u, Some(&h))?;
    let mut outputs = vec!["simulation.csv"];
    if cfg.export.loops {
        export_loops(&u, &h, cfg, out_dir)?;
        outputs.push("loop_branches.csv");
    }
    let (lo, hi) = h.value_range();
    report::write_report(
        out_dir,
        &json!({
            "command": "simulate",
            "version": report::VERSION,
            "model": model.as_str(),
            "params": params_echo,
            "signal": signal_echo,
            "memory": mem_echo,
            "samples": u.len(),
            "h_range": [lo, hi],
            "outputs": outputs,
        }),
    )?;
    Ok(())
}

fn cmd_identify(
    cfg: &RunConfig,
    args: &CommonArgs,
    out_dir: &Path,
    memory: Option<Memory>,
) -> Result<(), AppError> {
    let model = cfg.required_model()?;
    let spec = cfg
        .identify
        .as_ref()
        .ok_or_else(|| AppError::Config("missing [identify] section".into()))?;
    let signal = cfg.required_signal()?;
    if signal.csv.is_none() {
        return Err(AppError::Config(
            "identify needs a csv data source with u and H columns".into(),
        ));
    }
    let (u, h, signal_echo) = build_signal(signal, args.dt)?;
    let h = h.ok_or_else(|| AppError::Data("identification data must include the H column".into()))?;

    let kind = match model {
        ModelName::Cbw | ModelName::CbwAux => ModelKind::Cbw,
        ModelName::Nbw => ModelKind::Nbw,
        ModelName::Anbw => {
            let dim = spec.bounds.len();
            if dim < 5 {
                return Err(AppError::Config(
                    "anbw identification needs at least 5 bounds: the polynomial \
                     coefficients plus k_h, rho, sigma, n"
                        .into(),
                ));
            }
            ModelKind::Anbw { order: dim - 4 }
        }
        ModelName::Fonbw => ModelKind::Fonbw,
        ModelName::Zhu => ModelKind::Zhu,
    };
    if !matches!(model, ModelName::Fonbw) {
        reject_memory(&memory, "this model's identification")?;
    }
    let mut problem = IdentificationProblem::new(kind, u, h);
    let mem = memory.unwrap_or_default();
    if memory.is_some() {
        problem = problem.with_memory(mem);
    }
    let de = spec.to_de_config(args.seed);
    let result = identify(&problem, &de)?;
    report::write_report(
        out_dir,
        &json!({
            "command": "identify",
            "version": report::VERSION,
            "model": model.as_str(),
            "signal": signal_echo,
            "memory": mem.to_string(),
            "theta_names": kind.theta_names(),
            "de": echo(&de),
            "result": echo(&result),
        }),
    )?;
    if result.best_objective >= PENALTY_OBJECTIVE {
        return Err(AppError::Identification(format!(
            "no feasible candidate found: best objective {} is the infeasibility penalty",
            result.best_objective
        )));
    }
    Ok(())
}

fn resolve_loop_mode(spec: Option<&CompensateSpec>) -> Result<LoopMode, AppError> {
    let Some(s) = spec else {
        return Ok(LoopMode::Delay);
    };
    match (s.mode.unwrap_or(CompensateMode::Delay), s.iterations) {
        (CompensateMode::Delay, None) => Ok(LoopMode::Delay),
        (CompensateMode::Delay, Some(_)) => Err(AppError::Config(
            "[compensate] iterations only applies to fixed_point mode".into(),
        )),
        (CompensateMode::FixedPoint, Some(n)) => Ok(LoopMode::FixedPoint(n)),
        (CompensateMode::FixedPoint, None) => Err(AppError::Config(
            "[compensate] fixed_point mode needs iterations".into(),
        )),
    }
}

fn cmd_compensate(
    cfg: &RunConfig,
    args: &CommonArgs,
    out_dir: &Path,
    memory: Option<Memory>,
) -> Result<(), AppError> {
    let model = cfg.required_model()?;
    let (hd, _, signal_echo) = build_signal(cfg.required_signal()?, args.dt)?;
    let mode = resolve_loop_mode(cfg.compensate.as_ref())?;
    if !matches!(model, ModelName::Fonbw) && mode != LoopMode::Delay {
        return Err(AppError::Config(
            "fixed_point mode only applies to the fractional compensator".into(),
        ));
    }
    let mut mem_echo = Value::Null;
    let (comp, plant, params_echo) = match model {
        ModelName::Fonbw => {
            let p: FonbwParams = cfg.typed_params()?;
            let mem = memory.unwrap_or_default();
            mem_echo = json!(mem.to_string());
            (
                CompensatorSpec::Fonbw {
                    params: p.clone(),
                    memory: mem,
                    mode,
                },
                PlantSpec::Fonbw {
                    params: p.clone(),
                    memory: mem,
                },
                echo(&p),
            )
        }
        ModelName::Cbw => {
            reject_memory(&memory, "the classical compensator")?;
            let p: CbwParams = cfg.typed_params()?;
            let aux = p.to_aux();
            (
                CompensatorSpec::Cbw { params: aux.clone() },
                PlantSpec::CbwAux(aux.clone()),
                echo(&aux),
            )
        }
        ModelName::CbwAux => {
            reject_memory(&memory, "the classical compensator")?;
            let p: CbwAuxParams = cfg.typed_params()?;
            (
                CompensatorSpec::Cbw { params: p.clone() },
                PlantSpec::CbwAux(p.clone()),
                echo(&p),
            )
        }
        ModelName::Zhu => {
            reject_memory(&memory, "the comparison compensator")?;
            let p: ZhuParams = cfg.typed_params()?;
            (
                CompensatorSpec::Zhu { params: p.clone() },
                PlantSpec::Zhu(p.clone()),
                echo(&p),
            )
        }
        ModelName::Nbw | ModelName::Anbw => {
            return Err(AppError::Config(
                "no inverse compensator for this model kind; use fonbw, cbw, cbw_aux, or zhu"
                    .into(),
            ))
        }
    };
    let rep = evaluate_cascade(&comp, &plant, &hd)?;
    write_csv(out_dir.join("cascade.csv"), &rep.u_cmd, Some(&rep.h_achieved))?;
    let range = hd.span();
    let mode_echo = match mode {
        LoopMode::Delay => "delay".to_string(),
        LoopMode::FixedPoint(n) => format!("fixed_point({n})"),
    };
    report::write_report(
        out_dir,
        &json!({
            "command": "compensate",
            "version": report::VERSION,
            "model": model.as_str(),
            "params": params_echo,
            "signal": signal_echo,
            "memory": mem_echo,
            "mode": mode_echo,
            "rms_tracking_error": rep.rms_tracking_error,
            "rms_input": rep.rms_input,
            "relative_tracking_error": rep.rms_tracking_error / range,
            "outputs": ["cascade.csv"],
        }),
    )?;
    Ok(())
}

fn cmd_fracdiff(
    cfg: &RunConfig,
    args: &CommonArgs,
    out_dir: &Path,
    memory: Option<Memory>,
) -> Result<(), AppError> {
    if cfg.model.is_some() {
        return Err(AppError::Config("model does not apply to fracdiff".into()));
    }
    let spec = cfg
        .fracdiff
        .as_ref()
        .ok_or_else(|| AppError::Config("missing [fracdiff] section".into()))?;
    let (u, _, signal_echo) = build_signal(cfg.required_signal()?, args.dt)?;
    let mem = memory.unwrap_or_default();
    let d = gl_derivative(&u, spec.lambda, mem)?;
    write_csv(out_dir.join("fracdiff.csv"), &u, Some(&d))?;
    report::write_report(
        out_dir,
        &json!({
            "command": "fracdiff",
            "version": report::VERSION,
            "lambda": spec.lambda,
            "signal": signal_echo,
            "memory": mem.to_string(),
            "outputs": ["fracdiff.csv"],
        }),
    )?;
    Ok(())
}

fn cmd_normalize(
    cfg: &RunConfig,
    out_dir: &Path,
    memory: Option<Memory>,
) -> Result<(), AppError> {
    reject_memory(&memory, "normalize")?;
    match cfg.model {
        Some(ModelName::Cbw) => {}
        _ => {
            return Err(AppError::Config(
                "normalize applies to the classical model (model = \"cbw\")".into(),
            ))
        }
    }
    if cfg.signal.is_some() {
        return Err(AppError::Config("[signal] does not apply to normalize".into()));
    }
    let p: CbwParams = cfg.typed_params()?;
    let nb = normalize_cbw(&p)?;
    report::write_report(
        out_dir,
        &json!({
            "command": "normalize",
            "version": report::VERSION,
            "model": "cbw",
            "params": echo(&p),
            "normalized": echo(&nb),
        }),
    )?;
    Ok(())
}

fn cmd_metrics(
    cfg: &RunConfig,
    args: &CommonArgs,
    out_dir: &Path,
    memory: Option<Memory>,
) -> Result<(), AppError> {
    reject_memory(&memory, "metrics")?;
    if cfg.model.is_some() {
        return Err(AppError::Config(
            "model does not apply to metrics; provide a csv with u and H columns".into(),
        ));
    }
    let signal = cfg.required_signal()?;
    if signal.csv.is_none() {
        return Err(AppError::Config(
            "metrics needs a csv source with u and H columns".into(),
        ));
    }
    let (u, h, signal_echo) = build_signal(signal, args.dt)?;
    let h = h.ok_or_else(|| AppError::Data("metrics data must include the H column".into()))?;
    // A record that is too short or flat for loop extraction is a data
    // problem, not a config problem.
    let m = loop_metrics(&u, &h).map_err(|e| match e {
        boucwen::Error::InvalidArgument(msg) => AppError::Data(msg),
        other => other.into(),
    })?;
    let mut outputs: Vec<&str> = Vec::new();
    if cfg.export.loops {
        export_loops(&u, &h, cfg, out_dir)?;
        outputs.push("loop_branches.csv");
    }
    report::write_report(
        out_dir,
        &json!({
            "command": "metrics",
            "version": report::VERSION,
            "signal": signal_echo,
            "metrics": echo(&m),
            "outputs": outputs,
        }),
    )?;
    Ok(())
}
