//! `renewalshot` command-line front end.
//!
//! Exit codes: 0 success, 1 a verification test failed, 2 configuration or
//! usage error, 3 inadmissible scenario, 4 resource cap exceeded.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use renewalshot::laws::{IncrementLaw, LawFamily};
use renewalshot::limits::{covariance_inverse_case, increment_dependence_gap, moments_inverse_case, stationary_covariance};
use renewalshot::shotnoise::solve_c;
use renewalshot::stable::abs_moment;
use renewalshot::verify::{replicate_path, run_scenario, simulate, Scenario, VerifyError};
use serde_json::json;

#[derive(Parser)]
#[command(name = "renewalshot", version, about = "Simulate renewal shot noise and verify its scaling limits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output file (simulate, path-dump) or directory (verify).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, env = "RENEWALSHOT_THREADS", default_value_t = 1)]
    threads: usize,
    /// Print machine-readable JSON on stdout.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Scaled statistics at the largest horizon, as `replicate,u,value` CSV.
    Simulate(RunArgs),
    /// Run the test plan; writes report.json, report.csv and quantile files.
    Verify(RunArgs),
    /// Evaluate a closed-form formula.
    Formula(FormulaArgs),
    /// Epochs of one replicate path at the largest horizon, as `k,S_k` CSV.
    PathDump {
        #[command(flatten)]
        run: RunArgs,
        /// Replicate index.
        #[arg(long, default_value_t = 0)]
        replicate: u64,
    },
}

#[derive(Args)]
struct FormulaArgs {
    /// One of: moments, covariance, Rs, absmoment, solve_c, gap.
    name: String,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    u: Option<f64>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    t1: Option<f64>,
    #[arg(long)]
    t2: Option<f64>,
    #[arg(long)]
    t3: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    /// Horizon for solve_c.
    #[arg(long)]
    t: Option<f64>,
    /// Pareto scale x_m for solve_c.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long)]
    json: bool,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<VerifyError> for Failure {
    fn from(e: VerifyError) -> Self {
        let code = match &e {
            VerifyError::ShotNoise(_) | VerifyError::Inapplicable { .. } => 3,
            VerifyError::ResourceCap { .. } => 4,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

fn load(args: &RunArgs) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", args.config.display())))?;
    let mut scenario: Scenario =
        toml::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", args.config.display())))?;
    if let Some(seed) = args.seed {
        scenario.run.seed = seed;
    }
    Ok(scenario)
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn csv_failure(e: impl std::fmt::Display) -> Failure {
    Failure::usage(format!("writing output: {e}"))
}

fn cmd_simulate(args: &RunArgs) -> Result<u8, Failure> {
    let scenario = load(args)?;
    let samples = simulate(&scenario, args.threads)?;
    if args.out.is_some() || !args.json {
        samples.write_csv(open_out(args.out.as_deref())?).map_err(csv_failure)?;
    }
    if args.json {
        println!("{}", serde_json::to_string_pretty(&samples.summary(&scenario)).map_err(csv_failure)?);
    }
    Ok(0)
}

fn cmd_verify(args: &RunArgs) -> Result<u8, Failure> {
    let scenario = load(args)?;
    let out = run_scenario(&scenario, args.threads)?;
    let report = &out.report;
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), report.to_json().map_err(csv_failure)?)?;
        report.write_csv(fs::File::create(dir.join("report.csv"))?).map_err(csv_failure)?;
        for plot in &out.plots {
            plot.write_csv(fs::File::create(dir.join(plot.file_name()))?).map_err(csv_failure)?;
        }
    }
    if args.json {
        print!("{}", report.to_json().map_err(csv_failure)?);
    } else {
        for r in &report.records {
            let mut fields = vec![r.test.clone(), format!("t={}", r.t.unwrap_or(f64::NAN))];
            match (r.u, r.u2) {
                (Some(u), Some(u2)) => fields.push(format!("u={u},{u2}")),
                (Some(u), None) => fields.push(format!("u={u}")),
                _ => {}
            }
            if let Some(k) = r.k {
                fields.push(format!("k={k}"));
            }
            let score = match (r.p_value, r.z_score) {
                (Some(p), _) => format!("p={p:.4}"),
                (None, Some(z)) => format!("z={z:.3}"),
                _ => format!("stat={:.6}", r.statistic),
            };
            let verdict = if r.pass { "PASS" } else { "FAIL" };
            println!("{verdict} {} {score}", fields.join(" "));
        }
        println!("verdict: {}", if report.verdict { "PASS" } else { "FAIL" });
    }
    Ok(if report.verdict { 0 } else { 1 })
}

fn cmd_path_dump(args: &RunArgs, replicate: u64) -> Result<u8, Failure> {
    let scenario = load(args)?;
    let path = replicate_path(&scenario, replicate)?;
    path.write_csv(open_out(args.out.as_deref())?).map_err(csv_failure)?;
    Ok(0)
}

/// `v` to 12 significant digits.
fn significant(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        format!("{:.*}", (11 - exp).max(0) as usize, v)
    } else {
        format!("{v:.11e}")
    }
}

fn need<T: Copy>(v: Option<T>, name: &str, formula: &str) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::usage(format!("formula {formula} needs --{name}")))
}

fn cmd_formula(a: &FormulaArgs) -> Result<u8, Failure> {
    let n = a.name.as_str();
    let bad = |e: &dyn std::fmt::Display| Failure::usage(format!("formula {n}: {e}"));
    let (value, params) = match n {
        "moments" => {
            let (al, be, u, k) = (need(a.alpha, "alpha", n)?, need(a.beta, "beta", n)?, need(a.u, "u", n)?, need(a.k, "k", n)?);
            let v = moments_inverse_case(al, be, u, k).map_err(|e| bad(&e))?;
            (v, json!({"alpha": al, "beta": be, "u": u, "k": k}))
        }
        "covariance" => {
            let (al, be, t1, t2) = (need(a.alpha, "alpha", n)?, need(a.beta, "beta", n)?, need(a.t1, "t1", n)?, need(a.t2, "t2", n)?);
            let v = covariance_inverse_case(al, be, t1, t2).map_err(|e| bad(&e))?;
            (v, json!({"alpha": al, "beta": be, "t1": t1, "t2": t2}))
        }
        "Rs" => {
            let (al, s) = (need(a.alpha, "alpha", n)?, need(a.s, "s", n)?);
            let v = stationary_covariance(al, s).map_err(|e| bad(&e))?;
            (v, json!({"alpha": al, "s": s}))
        }
        "absmoment" => {
            let (al, r) = (need(a.alpha, "alpha", n)?, need(a.r, "r", n)?);
            let v = abs_moment(al, r).map_err(|e| bad(&e))?;
            (v, json!({"alpha": al, "r": r}))
        }
        "solve_c" => {
            let t = need(a.t, "t", n)?;
            let law = IncrementLaw::new(LawFamily::Pareto {
                tail_index: 2.0,
                scale: a.scale,
            })
            .map_err(|e| bad(&e))?;
            let v = solve_c(&law, t).map_err(|e| bad(&e))?;
            (v, json!({"scale": a.scale, "t": t}))
        }
        "gap" => {
            let (al, be) = (need(a.alpha, "alpha", n)?, need(a.beta, "beta", n)?);
            let (t1, t2, t3) = (need(a.t1, "t1", n)?, need(a.t2, "t2", n)?, need(a.t3, "t3", n)?);
            let v = increment_dependence_gap(al, be, t1, t2, t3).map_err(|e| bad(&e))?;
            (v, json!({"alpha": al, "beta": be, "t1": t1, "t2": t2, "t3": t3}))
        }
        _ => {
            return Err(Failure::usage(format!(
                "unknown formula {n:?}; expected moments, covariance, Rs, absmoment, solve_c or gap"
            )))
        }
    };
    if a.json {
        println!("{}", json!({"formula": n, "params": params, "value": value}));
    } else {
        println!("{}", significant(value));
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Formula(a) => cmd_formula(a),
        Command::PathDump { run, replicate } => cmd_path_dump(run, *replicate),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
