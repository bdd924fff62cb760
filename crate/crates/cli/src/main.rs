//! `qwork`: run, sweep and verify adaptive work-extraction experiments.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use qwork::bandit::proof_zeta;
use qwork::harness::{run, sweep, write_json, write_outputs, EngineKind, ExperimentConfig, PsiMode, SweepOptions};
use qwork::strategies::StrategyKind;
use qwork::verify::{verify_all, VerifyOptions};

// Bad flags, bad config and I/O failures all exit with 1.
const EXIT_USAGE: u8 = 1;
const EXIT_CHECK_FAILED: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "qwork", version, about = "Adaptive work extraction from an unknown qubit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one configuration and write rounds.csv and summary.json.
    Run(RunArgs),
    /// Run over several horizons and fit scaling laws.
    Sweep(SweepArgs),
    /// Run the built-in oracle suites.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Default)]
struct ExperimentArgs {
    /// TOML file with the same keys as the long flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// thermal-quasistatic, thermal-finite-m or jc.
    #[arg(long)]
    engine: Option<String>,
    /// adaptive, twophase, oracle or constant-half.
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    /// Schedule constant C.
    #[arg(long)]
    c_const: Option<f64>,
    /// Two-phase accuracy constant.
    #[arg(long)]
    c_tp: Option<f64>,
    #[arg(long, conflicts_with = "zeta_paper")]
    zeta: Option<f64>,
    /// Use ζ = 334812√2 + 1296√6.
    #[arg(long)]
    zeta_paper: bool,
    #[arg(long)]
    lambda0: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    /// Swap repetitions M for the finite-M engine.
    #[arg(long)]
    m_reps: Option<u32>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// `haar` or a direction `x,y,z`.
    #[arg(long, allow_hyphen_values = true)]
    psi: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Skip the per-round CSV.
    #[arg(long)]
    no_csv: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Horizons, ascending.
    #[arg(long, value_delimiter = ',')]
    ns: Option<Vec<usize>>,
    /// α grid for the two-phase comparison.
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    /// Skip the two-phase comparison.
    #[arg(long)]
    no_twophase: bool,
    /// Also write per-round CSVs for every cell.
    #[arg(long)]
    csv: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Write the suite report as JSON into this directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Keys accepted in a config file.
#[derive(Deserialize, Debug, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct FileConfig {
    engine: Option<String>,
    strategy: Option<String>,
    n: Option<usize>,
    trials: Option<usize>,
    delta: Option<f64>,
    c_const: Option<f64>,
    c_tp: Option<f64>,
    zeta: Option<f64>,
    zeta_paper: Option<bool>,
    lambda0: Option<f64>,
    beta: Option<f64>,
    omega: Option<f64>,
    m_reps: Option<u32>,
    alpha: Option<f64>,
    seed: Option<u64>,
    psi: Option<String>,
    out: Option<PathBuf>,
    ns: Option<Vec<usize>>,
    alphas: Option<Vec<f64>>,
}

struct Resolved {
    config: ExperimentConfig,
    out: Option<PathBuf>,
    file: FileConfig,
}

fn resolve(args: &ExperimentArgs) -> Result<Resolved> {
    let file = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| anyhow!("cannot read {}: {e}", path.display()))?;
            toml::from_str::<FileConfig>(&text).map_err(|e| anyhow!("bad config file {}: {e}", path.display()))?
        }
        None => FileConfig::default(),
    };
    let mut c = ExperimentConfig::default();
    macro_rules! pick {
        ($field:ident, $flag:ident) => {
            if let Some(v) = args.$flag.clone().or(file.$flag.clone()) {
                c.$field = v;
            }
        };
    }
    pick!(n, n);
    pick!(trials, trials);
    pick!(delta, delta);
    pick!(c_const, c_const);
    pick!(c_tp, c_tp);
    pick!(zeta, zeta);
    pick!(lambda0, lambda0);
    pick!(beta, beta);
    pick!(omega, omega);
    pick!(m_reps, m_reps);
    pick!(alpha, alpha);
    pick!(base_seed, seed);
    if let Some(e) = args.engine.as_ref().or(file.engine.as_ref()) {
        c.engine = e.parse::<EngineKind>().map_err(|e| anyhow!("{e}"))?;
    }
    if let Some(s) = args.strategy.as_ref().or(file.strategy.as_ref()) {
        c.strategy = s.parse::<StrategyKind>().map_err(|e| anyhow!("{e}"))?;
    }
    if let Some(p) = args.psi.as_ref().or(file.psi.as_ref()) {
        c.psi = p.parse::<PsiMode>().map_err(|e| anyhow!("{e}"))?;
    }
    let zeta_paper = args.zeta_paper || (args.zeta.is_none() && file.zeta_paper.unwrap_or(false));
    if zeta_paper {
        c.zeta = proof_zeta();
    }
    c.validate().map_err(|e| anyhow!("{e}"))?;
    let out = args.out.clone().or(file.out.clone());
    Ok(Resolved { config: c, out, file })
}

fn cmd_run(args: &RunArgs) -> Result<u8> {
    let r = resolve(&args.exp)?;
    let out = r.out.unwrap_or_else(|| PathBuf::from("qwork-run"));
    let result = run(&r.config, !args.no_csv)?;
    write_outputs(&out, &result).with_context(|| format!("writing outputs to {}", out.display()))?;
    let s = &result.summary;
    let f = s.final_checkpoint();
    println!("config hash {}", s.config_hash);
    println!(
        "{} / {} N={} trials={} ζ={} ({})",
        r.config.engine.name(),
        r.config.strategy.name(),
        r.config.n,
        r.config.trials,
        r.config.zeta,
        s.zeta_mode
    );
    if let Some(p) = s.stage_plan {
        println!("stage plan: t={} stages={} leftover={}", p.t, p.stages, p.leftover);
    }
    println!(
        "median W_diss={} regret={} landauer={}",
        f.diss_cum.median, f.regret_cum.median, f.landauer_cum.median
    );
    for c in &s.checks {
        println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("wrote {}", out.display());
    Ok(if s.all_checks_pass() { 0 } else { EXIT_CHECK_FAILED })
}

fn cmd_sweep(args: &SweepArgs) -> Result<u8> {
    let r = resolve(&args.exp)?;
    let out = r.out.unwrap_or_else(|| PathBuf::from("qwork-sweep"));
    let ns = args
        .ns
        .clone()
        .or(r.file.ns.clone())
        .unwrap_or_else(|| vec![4096, 16384, 65536]);
    let alphas = if args.no_twophase {
        Vec::new()
    } else {
        args.alphas
            .clone()
            .or(r.file.alphas.clone())
            .unwrap_or_else(|| vec![0.01, 0.03, 0.1, 0.3])
    };
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(anyhow!("alpha {a} not in (0,1)"));
    }
    if ns.len() < 3 || ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(anyhow!("--ns needs at least three strictly increasing values"));
    }
    let opts = SweepOptions {
        ns,
        alphas,
        out_dir: Some(out.as_path()),
        keep_rounds: args.csv,
    };
    let report = sweep(&r.config, &opts)?;
    for p in &report.points {
        let tag = match p.alpha {
            Some(a) => format!("{} α={a}", p.strategy.name()),
            None => p.strategy.name().to_string(),
        };
        println!(
            "{tag:<22} N={:<8} median W_diss={:<12.4} regret={:<10.4} landauer={:.4}",
            p.n, p.median_diss, p.median_regret, p.median_landauer
        );
    }
    let fit = &report.fit;
    println!(
        "{} fit: ln²N slope={:.5} residual={:.4}; √N slope={:.5} residual={:.4}; polylog constant spread ×{:.3}",
        report.strategy.name(),
        fit.log_squared.slope,
        fit.log_squared.residual,
        fit.sqrt.slope,
        fit.sqrt.residual,
        fit.polylog_constant_spread
    );
    if let Some(t) = &report.twophase_fit {
        println!(
            "twophase best fit: √N slope={:.5} residual={:.4}; ln²N residual={:.4}",
            t.sqrt.slope, t.sqrt.residual, t.log_squared.residual
        );
    }
    if let Some(ratio) = report.ratio_at_largest_n {
        println!("ratio to best twophase at largest N: {ratio:.4}");
    }
    println!("wrote {}", out.join("sweep.json").display());
    let ok = report.points.iter().all(|p| p.checks_passed);
    Ok(if ok { 0 } else { EXIT_CHECK_FAILED })
}

fn cmd_verify(args: &VerifyArgs) -> Result<u8> {
    let mut opts = VerifyOptions::default();
    if let Some(s) = args.seed {
        opts.seed = s;
    }
    let reports = verify_all(&opts)?;
    for r in &reports {
        println!("{}", r.line());
    }
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write_json(&dir.join("verify.json"), &reports)?;
    }
    let ok = reports.iter().all(|r| r.passed);
    println!("{}", if ok { "all suites passed" } else { "verification FAILED" });
    Ok(if ok { 0 } else { EXIT_CHECK_FAILED })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let outcome = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
