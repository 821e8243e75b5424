use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use wqflow::closedform::{profile_entropy, profile_fisher, solve_scale_ode, SpecialSolutionParams};
use wqflow::config::Config;
use wqflow::diagnostics::{write_csv, wq_distance_1d, Functionals, CDF_SAMPLES};
use wqflow::fields::{snapshot, ModelParams};
use wqflow::flows::{special_state, Regime, RunSummary};
use wqflow::verify::{record_run, run_check, Check, RunRecord};

/// Flows on the L^q-Wasserstein space and their entropy identities.
#[derive(Parser)]
#[command(name = "wqflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one flow and write its diagnostics.
    Simulate(SimulateArgs),
    /// Run a verification scenario; exit status 2 when a criterion fails.
    Verify(VerifyArgs),
    /// Solve the scale ODE and write the state and residual columns.
    Ode(OdeArgs),
    /// Write a self-similar solution and its closed-form functionals.
    Special(SpecialArgs),
    /// L^q-Wasserstein distance between two 1D density snapshots.
    Distance1d(DistanceArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat key = value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key (repeatable), e.g. `--set N=128`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        for kv in &self.overrides {
            let Some((k, v)) = kv.split_once('=') else {
                bail!("--set expects KEY=VALUE, got '{kv}'");
            };
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Write initial and final fields as snapshots.
    #[arg(long)]
    dump_fields: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// wentropy, wie, hamiltonian, bochner, conservation, convexity, curl or residuals.
    #[arg(long)]
    check: Check,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OdeArgs {
    #[arg(long)]
    p: f64,
    /// Coupling; `0` and `inf` select the closed-form modes.
    #[arg(long)]
    c: f64,
    #[arg(long, default_value_t = 1.0)]
    t0: f64,
    #[arg(long = "T")]
    t_end: f64,
    #[arg(long, default_value_t = 1.0)]
    w0: f64,
    #[arg(long, default_value_t = 1.0)]
    wdot0: f64,
    #[arg(long, default_value_t = 1e-4)]
    dt: f64,
    /// Dimension used for beta.
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 0.0)]
    beta0: f64,
    #[arg(long, default_value = "ode-out")]
    out: PathBuf,
}

#[derive(Args)]
struct SpecialArgs {
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = f64::INFINITY)]
    c: f64,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long = "N", default_value_t = 512)]
    points: usize,
    /// Evaluation time; the scale ODE starts at `t0` with `w = w' = 1`.
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = 1.0)]
    t0: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DistanceArgs {
    #[arg(long)]
    rho0: PathBuf,
    #[arg(long)]
    rho1: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    #[arg(long, default_value_t = CDF_SAMPLES)]
    samples: usize,
    #[arg(long, default_value = "distance-out")]
    out: PathBuf,
}

fn prepare(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}

fn write_records(path: &Path, run: &RunRecord) -> Result<()> {
    let f = fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    write_csv(BufWriter::new(f), &run.records)?;
    Ok(())
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

fn summary_json(s: &RunSummary) -> Value {
    json!({
        "steps": s.steps,
        "dt": num(s.dt),
        "records": s.records,
        "max_mass_drift": num(s.max_mass_drift),
        "max_consistency": num(s.max_consistency),
        "max_curl": num(s.max_curl),
    })
}

fn resolved_json(cfg: &Config) -> Result<Value> {
    Ok(Value::Object(cfg.resolved()?.into_iter().map(|(k, v)| (k, Value::String(v))).collect()))
}

fn dump_fields(out: &Path, run: &RunRecord) -> Result<()> {
    for (tag, st) in [("initial", &run.initial), ("final", &run.last)] {
        snapshot::save(out.join(format!("rho_{tag}.field")), &st.rho())?;
        snapshot::save(out.join(format!("phi_{tag}.field")), &st.phi)?;
    }
    Ok(())
}

fn simulate(args: &SimulateArgs) -> Result<ExitCode> {
    let cfg = args.config.load()?;
    let rc = cfg.run_config()?;
    let run = record_run("run", &rc)?;
    prepare(&args.out)?;
    write_records(&args.out.join("diagnostics.csv"), &run)?;
    if args.dump_fields || cfg.dump_fields()? {
        dump_fields(&args.out, &run)?;
    }
    write_json(
        &args.out.join("run.json"),
        &json!({ "command": "simulate", "config": resolved_json(&cfg)?, "summary": summary_json(&run.summary) }),
    )?;
    println!("{} steps, dt = {:.4e}, {} records", run.summary.steps, run.summary.dt, run.summary.records);
    Ok(ExitCode::SUCCESS)
}

fn verify(args: &VerifyArgs) -> Result<ExitCode> {
    let user = args.config.load()?;
    let cfg = args.check.reference().overridden_by(&user);
    let report = run_check(args.check, &user)?;
    prepare(&args.out)?;
    for (i, run) in report.runs.iter().enumerate() {
        let name = if i == 0 { "diagnostics.csv".to_string() } else { format!("diagnostics_{}.csv", run.label) };
        write_records(&args.out.join(name), run)?;
    }
    let criteria: Vec<Value> = report
        .criteria
        .iter()
        .map(|c| json!({ "name": c.name, "measured": num(c.measured), "bound": c.bound.to_string(), "passed": c.passed() }))
        .collect();
    let runs: Map<String, Value> = report.runs.iter().map(|r| (r.label.clone(), summary_json(&r.summary))).collect();
    write_json(
        &args.out.join("run.json"),
        &json!({
            "command": "verify",
            "check": args.check.name(),
            "config": resolved_json(&cfg)?,
            "passed": report.passed(),
            "criteria": criteria,
            "runs": runs,
        }),
    )?;
    for c in &report.criteria {
        println!("{c}");
    }
    if report.passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        for c in report.failures() {
            eprintln!("violated: {} (measured {:.4e}, required {})", c.name, c.measured, c.bound);
        }
        Ok(ExitCode::from(2))
    }
}

fn ode(args: &OdeArgs) -> Result<ExitCode> {
    let traj = solve_scale_ode(args.c, args.p, args.w0, args.wdot0, args.t0, args.t_end, args.dt)?
        .with_beta(args.n, args.beta0)?;
    let res = traj.residuals();
    prepare(&args.out)?;
    let mut text = String::from("t,w,wdot,alpha,beta,eta,pode,alphaeq,eta_residual\n");
    let mut worst = [0.0f64; 3];
    for (s, r) in traj.states().iter().zip(&res) {
        let cols = [s.t, s.w, s.wdot, s.alpha, s.beta, s.eta, r.pode, r.alphaeq, r.eta];
        let row: Vec<String> = cols.iter().map(|v| if v.is_finite() { format!("{v:.15e}") } else { "NaN".into() }).collect();
        text.push_str(&row.join(","));
        text.push('\n');
        for (w, v) in worst.iter_mut().zip([r.pode, r.alphaeq, r.eta]) {
            if v.is_finite() {
                *w = w.max(v.abs());
            }
        }
    }
    fs::write(args.out.join("ode.csv"), text)?;
    write_json(
        &args.out.join("run.json"),
        &json!({
            "command": "ode",
            "p": args.p, "c": num(args.c), "t0": args.t0, "T": args.t_end, "w0": args.w0,
            "wdot0": args.wdot0, "dt": traj.dt(), "n": args.n, "beta0": args.beta0,
            "max_residual": { "pode": worst[0], "alphaeq": worst[1], "eta": worst[2] },
        }),
    )?;
    println!("max |pode| = {:.3e}, max |alphaeq| = {:.3e}, max |eta| = {:.3e}", worst[0], worst[1], worst[2]);
    Ok(ExitCode::SUCCESS)
}

fn special(args: &SpecialArgs) -> Result<ExitCode> {
    let (n, p, c) = (args.n, args.p, args.c);
    let t_end = args.t.max(args.t0);
    let traj = solve_scale_ode(c, p, 1.0, 1.0, args.t0, t_end + 1e-3, 1e-4)?.with_beta(n, 0.0)?;
    let s = traj.state_at(args.t)?;
    let grid = SpecialSolutionParams::new(n, p, c, s.w)?.grid(args.points)?;
    let regime = if c.is_infinite() {
        Regime::Geodesic
    } else if c == 0.0 {
        Regime::Pheat
    } else {
        Regime::Langevin
    };
    let params = ModelParams::new(p, c, ModelParams::DEFAULT_EPS, n)?;
    let state = special_state(regime, &params, &grid, &s)?;
    let f = Functionals::compute(&state, &params, Some(s));
    prepare(&args.out)?;
    snapshot::save(args.out.join("rho.field"), &state.rho())?;
    snapshot::save(args.out.join("phi.field"), &state.phi)?;
    let ent_closed = profile_entropy(n, p, s.w)?;
    let fisher_closed = profile_fisher(n, p, s.w, s.alpha);
    let (ent_quad, fisher_quad) = (f.ent, f.fisher);
    write_json(
        &args.out.join("run.json"),
        &json!({
            "command": "special",
            "n": n, "p": p, "c": num(c), "N": args.points, "t": args.t,
            "half_width": grid.hi()[0],
            "scale": { "w": s.w, "wdot": s.wdot, "alpha": s.alpha, "beta": s.beta, "eta": s.eta },
            "mass": f.mass,
            "entropy": { "closed_form": ent_closed, "quadrature": ent_quad },
            "fisher": { "closed_form": fisher_closed, "quadrature": fisher_quad },
        }),
    )?;
    println!("Ent: closed form {ent_closed:.10}, quadrature {ent_quad:.10}");
    println!("Fisher: closed form {fisher_closed:.10}, quadrature {fisher_quad:.10}");
    Ok(ExitCode::SUCCESS)
}

fn distance(args: &DistanceArgs) -> Result<ExitCode> {
    let r0 = snapshot::load(&args.rho0)?;
    let r1 = snapshot::load(&args.rho1)?;
    let d = wq_distance_1d(&r0, &r1, args.q, args.samples)?;
    prepare(&args.out)?;
    write_json(
        &args.out.join("run.json"),
        &json!({ "command": "distance1d", "q": args.q, "samples": args.samples, "distance": d }),
    )?;
    println!("{d:.12e}");
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Verify(a) => verify(a),
        Command::Ode(a) => ode(a),
        Command::Special(a) => special(a),
        Command::Distance1d(a) => distance(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
