//! `analogy`: Wasserstein distances, parameter estimation and admissibility
//! checks from the command line.
//!
//! Exit codes: 0 verified / pass, 1 not verified / fail, 2 error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use analogy_core::data_io::config::{EstimatorKind, SemanticsChoice};
use analogy_core::data_io::{
    load_dataset, write_plot_data, write_report, Dataset, DatasetFile, LabelColumn, Report, RunConfig, X0Spec,
};
use analogy_core::estimation::EpsilonMethod;
use analogy_core::pipeline;
use analogy_core::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "analogy",
    version,
    about = "Decide whether knowledge transfer between two data domains is admissible"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Wasserstein distance between two CSV samples.
    Wasserstein {
        /// Source-domain CSV
        source: PathBuf,
        /// Target-domain CSV
        target: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Bootstrap the distance and estimate ε, η, γ, ξ (and δ when labelled).
    Estimate {
        /// Source-domain CSV
        source: PathBuf,
        /// Target-domain CSV
        target: PathBuf,
        /// JSON run config
        config: Option<PathBuf>,
        #[command(flatten)]
        flags: Flags,
    },
    /// Full admissibility run; exits 0 when verified, 1 when not.
    Check {
        /// Source-domain CSV
        source: PathBuf,
        /// Target-domain CSV
        target: PathBuf,
        /// JSON run config
        config: Option<PathBuf>,
        #[command(flatten)]
        flags: Flags,
    },
    /// Check the Hoare triples of a transformer over a set of states.
    Hoare {
        /// States CSV
        states: PathBuf,
        /// JSON run config with epsilon, gamma and the transformer
        config: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Generate model data, write it beside the report, then run `check`.
    Simulate {
        /// JSON run config
        config: Option<PathBuf>,
        #[command(flatten)]
        flags: Flags,
    },
    /// Time exact and sliced estimators over a size sweep.
    Bench {
        /// JSON run config
        config: Option<PathBuf>,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Exact,
    Sliced,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EpsMethodArg {
    Normal,
    Quantile,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SemanticsArg {
    Demonic,
    Angelic,
    Both,
}

/// Flags override the corresponding config keys.
#[derive(Debug, Args)]
struct Flags {
    /// Order p of W_p [default: 1]
    #[arg(long)]
    p: Option<f64>,
    /// Confidence level α for ε and η [default: 0.05]
    #[arg(long)]
    alpha: Option<f64>,
    /// Tail level β for γ [default: 0.05]
    #[arg(long)]
    beta: Option<f64>,
    /// Bootstrap replicates B [default: 1000]
    #[arg(long, value_name = "B")]
    bootstrap: Option<usize>,
    /// Distance estimator [default: exact]
    #[arg(long, value_enum)]
    estimator: Option<EstimatorArg>,
    /// Projections for the sliced estimator [default: 1000]
    #[arg(long)]
    n_proj: Option<usize>,
    /// Seed for every random stream; required by stochastic commands
    #[arg(long)]
    seed: Option<u64>,
    /// ε estimator [default: normal]
    #[arg(long, value_enum)]
    eps_method: Option<EpsMethodArg>,
    /// Reference point: "barycenter" or comma-separated coordinates [default: barycenter]
    #[arg(long)]
    x0: Option<String>,
    /// Explicit ε instead of the bootstrap estimate
    #[arg(long)]
    epsilon: Option<f64>,
    /// Explicit δ instead of the class-label estimate
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    /// Explicit γ instead of the transformer-displacement estimate
    #[arg(long)]
    gamma: Option<f64>,
    /// Reading of nondeterministic U2 [default: both]
    #[arg(long, value_enum)]
    semantics: Option<SemanticsArg>,
    /// CSV files have a header row [default: false]
    #[arg(long)]
    header: bool,
    /// Label column, by zero-based index or header name
    #[arg(long)]
    label_column: Option<String>,
    /// Worker threads [default: available parallelism]
    #[arg(long)]
    threads: Option<usize>,
    /// Write the JSON report here
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write bootstrap replicates as CSV here
    #[arg(long)]
    plot_data: Option<PathBuf>,
}

impl Flags {
    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    cfg.$field = v;
                }
            )*};
        }
        set!(p, alpha, beta, bootstrap, n_proj);
        macro_rules! set_opt {
            ($($field:ident),*) => {$(
                if self.$field.is_some() {
                    cfg.$field = self.$field;
                }
            )*};
        }
        set_opt!(seed, epsilon, delta, gamma, threads);
        if let Some(e) = self.estimator {
            cfg.estimator = match e {
                EstimatorArg::Exact => EstimatorKind::Exact,
                EstimatorArg::Sliced => EstimatorKind::Sliced,
            };
        }
        if let Some(m) = self.eps_method {
            cfg.eps_method = match m {
                EpsMethodArg::Normal => EpsilonMethod::Normal,
                EpsMethodArg::Quantile => EpsilonMethod::Quantile,
            };
        }
        if let Some(s) = self.semantics {
            cfg.semantics = match s {
                SemanticsArg::Demonic => SemanticsChoice::Demonic,
                SemanticsArg::Angelic => SemanticsChoice::Angelic,
                SemanticsArg::Both => SemanticsChoice::Both,
            };
        }
        if let Some(x0) = &self.x0 {
            cfg.x0 = parse_x0(x0)?;
        }
        if self.header {
            cfg.has_header = true;
        }
        if let Some(col) = &self.label_column {
            cfg.label_column = Some(match col.parse::<usize>() {
                Ok(i) => LabelColumn::Index(i),
                Err(_) => LabelColumn::Name(col.clone()),
            });
        }
        cfg.validate()
    }
}

fn parse_x0(text: &str) -> Result<X0Spec> {
    if text.trim() == "barycenter" {
        return Ok(X0Spec::Barycenter);
    }
    text.split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(X0Spec::Point)
        .map_err(|e| Error::Config(format!("--x0 must be \"barycenter\" or comma-separated numbers: {e}")))
}

fn load_config(path: Option<&Path>, fallback: RunConfig, flags: &Flags) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => fallback,
    };
    flags.apply(&mut cfg)?;
    Ok(cfg)
}

fn load(path: &Path, cfg: &RunConfig) -> Result<Dataset> {
    load_dataset(
        &DatasetFile::new(path)
            .with_header(cfg.has_header)
            .with_labels(cfg.label_column.clone()),
    )
}

fn emit(report: &Report, flags: &Flags) -> Result<()> {
    if let Some(out) = &flags.out {
        write_report(report, out)?;
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{v:.6}"))
}

fn print_summary(report: &Report) {
    if let Some(w) = &report.wasserstein {
        println!("W_{} ({}) = {}", w.p, w.estimator, w.estimate);
    }
    if let Some(b) = &report.bootstrap {
        println!(
            "bootstrap B={}: mean {:.6}  sd {:.6}  95% interval [{:.6}, {:.6}]",
            b.b, b.mean, b.sd, b.q.q025, b.q.q975
        );
    }
    if let Some(p) = &report.parameters {
        println!(
            "epsilon {:.6}  eta {:.6}  gamma {:.6}  xi {:.6}  delta {}",
            p.epsilon,
            p.eta,
            p.gamma,
            p.xi,
            fmt_opt(p.delta)
        );
        if p.separable == Some(false) {
            println!("classes not separable (delta <= 0)");
        }
    }
    if let Some(fol) = &report.fol {
        println!(
            "statement 3 on {} points in the epsilon-ball: {}",
            fol.ball_size,
            if fol.stmt3_holds { "holds" } else { "fails" }
        );
        match fol.stmt4_witness {
            Some(i) => println!("statement 4 witness found in sample: row {i}"),
            None => println!("statement 4 witness not found in sample (inconclusive)"),
        }
    }
    if let Some(r) = &report.regularity {
        println!(
            "regularity: L_F >= {:.6}, L_L >= {:.6} (empirical lower bounds), {}",
            r.lipschitz_f,
            r.lipschitz_l,
            if r.satisfied { "satisfied" } else { "not satisfied" }
        );
    }
    for t in &report.hoare {
        let state = match (t.vacuous, t.holds) {
            (true, _) => "vacuous".to_string(),
            (false, true) => "holds".to_string(),
            (false, false) => format!("fails, counterexamples {:?}", t.counterexamples),
        };
        println!("{:<13} {}/{}  {}", t.triple.to_string(), t.satisfied, t.total, state);
    }
    if let Some(v) = &report.verdict {
        let v = &v.verdict;
        println!(
            "threshold {:.6} (joint {:.6}, split {:.6}), margin {:.6}",
            v.threshold, v.threshold_joint, v.threshold_split, v.margin
        );
        println!(
            "violation bounds: alpha+2beta = {:.4}, 2beta = {:.4}",
            v.violation_bound_union, v.violation_bound_tail
        );
        println!("Result of theorem verification: {}", v.status);
    }
    for note in &report.notes {
        println!("note: {note}");
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Wasserstein { source, target, flags } => {
            let cfg = load_config(None, RunConfig::default(), &flags)?;
            let (x, y) = (load(&source, &cfg)?, load(&target, &cfg)?);
            let report = pipeline::run_wasserstein(&cfg, x.sample(), y.sample())?;
            println!("{}", report.wasserstein.as_ref().map_or(f64::NAN, |w| w.estimate));
            emit(&report, &flags)?;
            Ok(true)
        }
        Command::Estimate {
            source,
            target,
            config,
            flags,
        } => {
            let cfg = load_config(config.as_deref(), RunConfig::default(), &flags)?;
            let (x, y) = (load(&source, &cfg)?, load(&target, &cfg)?);
            let (report, summary) = pipeline::run_estimate(&cfg, x.sample(), y.sample(), x.labeled())?;
            print_summary(&report);
            if let Some(path) = &flags.plot_data {
                write_plot_data(&summary, path)?;
            }
            emit(&report, &flags)?;
            Ok(true)
        }
        Command::Check {
            source,
            target,
            config,
            flags,
        } => {
            let cfg = load_config(config.as_deref(), RunConfig::default(), &flags)?;
            let (x, y) = (load(&source, &cfg)?, load(&target, &cfg)?);
            let outcome = pipeline::run_check(&cfg, x.sample(), y.sample(), x.labeled())?;
            finish_check(&outcome, &flags)
        }
        Command::Hoare { states, config, flags } => {
            let cfg = load_config(Some(&config), RunConfig::default(), &flags)?;
            let s = load(&states, &cfg)?;
            let outcome = pipeline::run_hoare(&cfg, s.sample())?;
            print_summary(&outcome.report);
            println!("{}", if outcome.passed { "PASS" } else { "FAIL" });
            emit(&outcome.report, &flags)?;
            Ok(outcome.passed)
        }
        Command::Simulate { config, flags } => {
            let mut cfg = load_config(config.as_deref(), RunConfig::simulation_default(), &flags)?;
            if cfg.generator.is_none() {
                cfg.generator = RunConfig::simulation_default().generator;
            }
            let dir = flags
                .out
                .as_deref()
                .and_then(Path::parent)
                .filter(|p| !p.as_os_str().is_empty())
                .unwrap_or(Path::new("."))
                .to_path_buf();
            let (outcome, files) = pipeline::run_simulate(&cfg, &dir)?;
            println!("wrote {} and {}", files.source.display(), files.target.display());
            if let Some(c) = &files.classes {
                println!("wrote {}", c.display());
            }
            finish_check(&outcome, &flags)
        }
        Command::Bench { config, flags } => {
            let cfg = load_config(config.as_deref(), RunConfig::default(), &flags)?;
            let rows = pipeline::run_bench(&cfg)?;
            println!("estimator,n,n_proj,wall_ms,distance");
            for r in &rows {
                println!(
                    "{},{},{},{:.3},{}",
                    r.estimator,
                    r.n,
                    r.n_proj.map(|k| k.to_string()).unwrap_or_default(),
                    r.wall_ms,
                    r.distance
                );
            }
            if let Some(out) = &flags.out {
                let text = serde_json::to_string_pretty(&rows)?;
                std::fs::write(out, text).map_err(|e| Error::io(format!("writing {}", out.display()), e))?;
            }
            Ok(true)
        }
    }
}

fn finish_check(outcome: &pipeline::CheckOutcome, flags: &Flags) -> Result<bool> {
    print_summary(&outcome.report);
    if let Some(path) = &flags.plot_data {
        write_plot_data(&outcome.summary, path)?;
    }
    emit(&outcome.report, flags)?;
    Ok(outcome.verified)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
