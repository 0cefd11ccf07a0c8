//! `stlab`: runs spacetime-lab experiments from TOML configs.
//!
//! Exit status: 0 when every verdict passes, 1 on a failed verdict or a
//! module error, 2 on usage or config errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spacetime_lab::lab::{run, suite, Experiment, ExperimentConfig, ExperimentReport, LabError, SuiteConfig};

/// Environment variable consulted for the output directory when `--out` is
/// not given.
const OUT_ENV: &str = "STLAB_OUT";

#[derive(Parser, Debug)]
#[command(name = "stlab", version, about = "Wave-operator experiments on asymptotically Minkowski spacetimes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for reports and CSV series.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 keeps the default pool).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Symbol decay constants and accposi positivity of the field.
    MetricValidate,
    /// Non-trapping certificate from the Hamilton flow.
    FlowCertify,
    /// Escape function construction and sampled inequality.
    EscapeVerify,
    /// Weight, cutoff, accposi and ellipticity inequalities.
    SymbolsAppendix,
    /// Localised commutator positivity on two grids.
    Mourre,
    /// Weighted resolvent norms as ε → 0.
    Lap,
    /// Subelliptic constant under one grid doubling.
    Subelliptic,
    /// Local compactness constant and its δ = 0 control.
    LocalCompactness,
    /// Weighted seminorms of resolvent solutions under refinement.
    Schwartz,
    /// Gabor masses of the outgoing solution.
    Radiation,
    /// Boundary-value inverse against the absorbing-collar resolvent.
    FeynmanCompare,
    /// Runs whichever experiment the config names.
    Run,
    /// Runs every `[[runs]]` entry of a suite config.
    Suite,
}

impl Command {
    fn experiment_name(self) -> Option<&'static str> {
        Some(match self {
            Command::MetricValidate => "metric-validate",
            Command::FlowCertify => "flow-certify",
            Command::EscapeVerify => "escape-verify",
            Command::SymbolsAppendix => "symbols-appendix",
            Command::Mourre => "mourre",
            Command::Lap => "lap",
            Command::Subelliptic => "subelliptic",
            Command::LocalCompactness => "local-compactness",
            Command::Schwartz => "schwartz",
            Command::Radiation => "radiation",
            Command::FeynmanCompare => "feynman-compare",
            Command::Run | Command::Suite => return None,
        })
    }
}

fn out_dir(common: &Common) -> Option<PathBuf> {
    common.out.clone().or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
}

fn apply_overrides(mut c: ExperimentConfig, common: &Common, out: Option<PathBuf>) -> ExperimentConfig {
    if let Some(s) = common.seed {
        c.seed = s;
    }
    if let Some(t) = common.threads {
        c.threads = t;
    }
    if out.is_some() {
        c.out = out;
    }
    c
}

fn single_config(cmd: Command, common: &Common) -> Result<ExperimentConfig, LabError> {
    let config = match (&common.config, cmd.experiment_name()) {
        (Some(p), want) => {
            let c = ExperimentConfig::from_path(p)?;
            if let Some(w) = want {
                if c.experiment.name() != w {
                    return Err(LabError::Config(format!("{} configures {:?}, not {w:?}", p.display(), c.experiment.name())));
                }
            }
            c
        }
        (None, Some(name)) => ExperimentConfig::new(Experiment::default_named(name)?),
        (None, None) => return Err(LabError::Config("`run` needs --config".into())),
    };
    Ok(apply_overrides(config, common, out_dir(common)))
}

fn print_report(r: &ExperimentReport) {
    for (k, v) in &r.verdicts {
        println!("{} {k}: {}", r.experiment, if *v { "PASS" } else { "FAIL" });
    }
    for (k, v) in &r.constants {
        println!("{} {k} = {v:e}", r.experiment);
    }
    println!("{}: {} ({:.2} s)", r.experiment, if r.pass { "PASS" } else { "FAIL" }, r.elapsed_seconds);
}

fn run_suite(path: &Path, common: &Common) -> Result<bool, LabError> {
    let set = SuiteConfig::from_path(path)?;
    let out = out_dir(common);
    let configs: Vec<ExperimentConfig> = set
        .runs
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            let dir = out.as_ref().map(|d| d.join(format!("{i:02}-{}", c.experiment.name())));
            apply_overrides(c, common, dir)
        })
        .collect();
    let report = suite(&configs);
    for item in &report.items {
        match (&item.report, &item.error) {
            (Some(r), _) => print_report(r),
            (None, Some(e)) => println!("{}: ERROR {e}", item.experiment),
            (None, None) => {}
        }
    }
    println!("suite: {} passed, {} failed", report.passed, report.failed);
    if let Some(d) = &out {
        std::fs::create_dir_all(d).map_err(|e| LabError::Io(e.to_string()))?;
        let text = serde_json::to_string_pretty(&report).map_err(|e| LabError::Io(e.to_string()))?;
        std::fs::write(d.join("suite.json"), text).map_err(|e| LabError::Io(e.to_string()))?;
    }
    Ok(report.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Suite => match &cli.common.config {
            Some(p) => run_suite(p, &cli.common),
            None => Err(LabError::Config("`suite` needs --config".into())),
        },
        cmd => single_config(cmd, &cli.common).and_then(|c| run(&c)).map(|r| {
            print_report(&r);
            r.pass
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("stlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
