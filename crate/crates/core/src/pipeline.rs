//! End-to-end runs: each function takes a validated [`RunConfig`] plus data
//! and returns a [`Report`]. All of them are deterministic given the config
//! (including its seed) and independent of the worker count.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analogy::{audit_regularity, check_analogy, check_fol_statements, AnalogyParameters, ThresholdPredicate};
use crate::data_io::config::SemanticsChoice;
use crate::data_io::report::{BootstrapBlock, ParametersBlock, Provenance, VerdictBlock, WassersteinBlock};
use crate::data_io::rng::domain;
use crate::data_io::{generate_class_blobs, generate_gaussian, write_sample_csv, Report, RunConfig, SeededStream};
use crate::error::{Error, Result};
use crate::estimation::{
    bootstrap_wasserstein, class_geometry, estimate_delta, estimate_epsilon, estimate_eta, estimate_gamma, estimate_xi,
    BootstrapSummary, DisplacementSample,
};
use crate::hoare::{
    check_c1, check_c2, check_u2_nondet, check_u4, check_u5, check_u6, effective_region, sample_pairs, Semantics,
    StateTransformer, TransformerKind, TripleReport,
};
use crate::metric::{euclidean, EmpiricalSample, Estimator, ExactSolver, LabeledSample};

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot build a pool of {n} threads: {e}")))?
            .install(f),
    }
}

struct Clock(BTreeMap<String, f64>);

impl Clock {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.0.insert(stage.to_string(), start.elapsed().as_secs_f64() * 1e3);
        out
    }
}

fn check_same_dim(source: &EmpiricalSample, target: &EmpiricalSample) -> Result<()> {
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: source.dim(),
            got: target.dim(),
        });
    }
    Ok(())
}

/// `W_p(source, target)` with the configured estimator.
pub fn run_wasserstein(cfg: &RunConfig, source: &EmpiricalSample, target: &EmpiricalSample) -> Result<Report> {
    cfg.validate()?;
    check_same_dim(source, target)?;
    let estimator = cfg.estimator()?;
    with_threads(cfg.threads, || {
        let mut clock = Clock(BTreeMap::new());
        let mut report = Report::new("wasserstein", cfg);
        let estimate = clock.time("wasserstein", || estimator.distance(source, target, &cfg.metric()))?;
        report.wasserstein = Some(WassersteinBlock {
            estimate,
            estimator: estimator.name().into(),
            p: cfg.p,
        });
        report.timings_ms = clock.0;
        Ok(report)
    })
}

/// Largest displacement of each state over its successor set.
fn displacements(states: &EmpiricalSample, succ: &[Vec<Vec<f64>>]) -> Result<DisplacementSample> {
    DisplacementSample::new(
        states
            .iter()
            .zip(succ)
            .map(|(s, set)| set.iter().map(|n| euclidean(s, n)).fold(0.0, f64::max))
            .collect(),
    )
}

struct Estimates {
    summary: BootstrapSummary,
    params: ParametersBlock,
}

/// Bootstrap, ε, η, γ, ξ and (if available) δ.
#[allow(clippy::too_many_arguments)]
fn estimate_parameters(
    cfg: &RunConfig,
    source: &EmpiricalSample,
    target: &EmpiricalSample,
    classes: Option<&LabeledSample>,
    transformer: &dyn StateTransformer,
    require_delta: bool,
    report: &mut Report,
    clock: &mut Clock,
) -> Result<Estimates> {
    let seed = cfg.require_seed()?;
    let metric = cfg.metric();
    let estimator = cfg.estimator()?;
    if require_delta && cfg.delta.is_none() && classes.is_none() {
        return Err(Error::Config("δ requires labels or explicit value".into()));
    }

    let estimate = clock.time("wasserstein", || estimator.distance(source, target, &metric))?;
    report.wasserstein = Some(WassersteinBlock {
        estimate,
        estimator: estimator.name().into(),
        p: cfg.p,
    });

    let summary = clock.time("bootstrap", || {
        bootstrap_wasserstein(source, target, &metric, cfg.bootstrap, seed, estimator)
    })?;
    report.bootstrap = Some(BootstrapBlock::from_summary(&summary)?);

    let mut sources = BTreeMap::new();
    let mut provenance = |name: &str, explicit: bool| {
        sources.insert(
            name.to_string(),
            if explicit {
                Provenance::Explicit
            } else {
                Provenance::Estimated
            },
        );
    };

    let epsilon_estimate = estimate_epsilon(&summary, cfg.alpha, cfg.eps_method)?;
    let epsilon = cfg.epsilon.unwrap_or(epsilon_estimate);
    provenance("epsilon", cfg.epsilon.is_some());
    let eta = estimate_eta(&summary, cfg.alpha)?;
    provenance("eta", false);

    let succ = clock.time("transformer", || transformer.apply_all(source))?;
    let disp = displacements(source, &succ)?;
    let gamma = match cfg.gamma {
        Some(g) => g,
        None => estimate_gamma(&disp, cfg.beta)?,
    };
    provenance("gamma", cfg.gamma.is_some());
    let xi = estimate_xi(&disp)?;
    provenance("xi", false);

    let (delta, delta_pair) = match (cfg.delta, classes) {
        (Some(d), _) => (d, None),
        (None, Some(labeled)) => {
            let geom = clock.time("delta", || class_geometry(labeled, &metric, estimator))?;
            let est = estimate_delta(&geom);
            (est.value, Some(est.pair))
        }
        (None, None) => (f64::NAN, None),
    };
    let delta = (!delta.is_nan()).then_some(delta);
    if delta.is_some() {
        provenance("delta", cfg.delta.is_some());
    }

    Ok(Estimates {
        summary,
        params: ParametersBlock {
            epsilon,
            epsilon_estimate,
            eta,
            gamma,
            xi,
            delta,
            separable: delta.map(|d| d > 0.0),
            delta_pair,
            epsilon_level: 1.0 - cfg.alpha,
            eta_level: 1.0 - cfg.alpha / 2.0,
            sources,
        },
    })
}

/// Bootstrap and parameter estimates without a verdict. δ is included when
/// labels or an explicit value are available.
pub fn run_estimate(
    cfg: &RunConfig,
    source: &EmpiricalSample,
    target: &EmpiricalSample,
    classes: Option<&LabeledSample>,
) -> Result<(Report, BootstrapSummary)> {
    cfg.validate()?;
    check_same_dim(source, target)?;
    let transformer = cfg.transformer.build(cfg.seed)?;
    with_threads(cfg.threads, || {
        let mut clock = Clock(BTreeMap::new());
        let mut report = Report::new("estimate", cfg);
        let est = estimate_parameters(
            cfg,
            source,
            target,
            classes,
            &*transformer,
            false,
            &mut report,
            &mut clock,
        )?;
        if est.params.delta.is_none() {
            report
                .notes
                .push("δ not estimated: no labels and no explicit value".into());
        }
        report.parameters = Some(est.params);
        report.timings_ms = clock.0;
        Ok((report, est.summary))
    })
}

/// Outcome of a verdict-producing run.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub report: Report,
    pub summary: BootstrapSummary,
    pub verified: bool,
}

/// The full admissibility run: bootstrap, parameters, verdict, and, when
/// predicates are configured, the statement checks, regularity audit and
/// triples over the source states.
pub fn run_check(
    cfg: &RunConfig,
    source: &EmpiricalSample,
    target: &EmpiricalSample,
    classes: Option<&LabeledSample>,
) -> Result<CheckOutcome> {
    cfg.validate()?;
    check_same_dim(source, target)?;
    cfg.require_seed()?;
    if cfg.delta.is_none() && classes.is_none() {
        return Err(Error::Config("δ requires labels or explicit value".into()));
    }
    let transformer = cfg.transformer.build(cfg.seed)?;
    let predicates = build_predicates(cfg, source.dim())?;
    let x0 = cfg.x0.resolve(source)?;
    with_threads(cfg.threads, || {
        let mut clock = Clock(BTreeMap::new());
        let mut report = Report::new("check", cfg);
        let est = estimate_parameters(
            cfg,
            source,
            target,
            classes,
            &*transformer,
            true,
            &mut report,
            &mut clock,
        )?;
        let p = &est.params;
        let delta = p.delta.expect("checked above: δ is explicit or estimated from labels");
        let params = AnalogyParameters {
            epsilon: p.epsilon,
            eta: p.eta,
            gamma: p.gamma,
            xi: p.xi,
            delta,
            alpha: cfg.alpha,
            beta: cfg.beta,
        };
        let verdict = check_analogy(&params)?;
        let region = (delta >= 0.0)
            .then(|| effective_region(p.epsilon, delta, p.gamma))
            .transpose()?;
        if delta <= 0.0 {
            report.notes.push("not separable: δ ≤ 0, the classes overlap".into());
        }

        if cfg.gamma.is_none() {
            report.notes.push(format!(
                "C1 is checked against the estimated γ, the {} quantile of displacements; about a fraction β of states exceed it by construction",
                1.0 - cfg.beta
            ));
        }
        let seed = cfg.require_seed()?;
        let mut triples = clock.time("hoare", || -> Result<Vec<TripleReport>> {
            Ok(vec![check_c1(source, &*transformer, p.gamma)?])
        })?;
        if let Some((f, l)) = &predicates {
            report.fol = Some(clock.time("fol", || check_fol_statements(source, x0.coords(), p.epsilon, f, l))?);
            if delta > 0.0 {
                report.regularity = Some(clock.time("regularity", || {
                    audit_regularity(source, x0.coords(), delta, f, l, cfg.pair_budget, seed)
                })?);
            } else {
                report.notes.push("regularity audit skipped: δ ≤ 0".into());
            }
            let more = clock.time("hoare_triples", || {
                triple_suite(
                    cfg,
                    source,
                    &*transformer,
                    x0.coords(),
                    p.epsilon,
                    Some(delta),
                    p.gamma,
                    f,
                    l,
                    &mut report.notes,
                )
            })?;
            triples.extend(more);
        }
        report.hoare = triples;

        let within_epsilon = p.epsilon_estimate <= p.epsilon;
        if !within_epsilon {
            report.notes.push(format!(
                "domains are not ε-close: the bootstrap bound {} exceeds ε = {}",
                p.epsilon_estimate, p.epsilon
            ));
        }
        let block = VerdictBlock::new(verdict, within_epsilon, region);
        report.parameters = Some(est.params.clone());
        let verified = block.verdict.verified;
        report.verdict = Some(block);
        report.timings_ms = clock.0;
        Ok(CheckOutcome {
            report,
            summary: est.summary,
            verified,
        })
    })
}

fn build_predicates(cfg: &RunConfig, dim: usize) -> Result<Option<(ThresholdPredicate, ThresholdPredicate)>> {
    cfg.predicates
        .as_ref()
        .map(|p| Ok((p.f.build(dim)?, p.l.build(dim)?)))
        .transpose()
}

/// C2, U4, U5, U6 and, for nondeterministic transformers, U2. Triples whose
/// parameter preconditions fail are skipped with a note.
#[allow(clippy::too_many_arguments)]
fn triple_suite(
    cfg: &RunConfig,
    states: &EmpiricalSample,
    t: &dyn StateTransformer,
    x0: &[f64],
    eps: f64,
    delta: Option<f64>,
    gamma: f64,
    f: &ThresholdPredicate,
    l: &ThresholdPredicate,
    notes: &mut Vec<String>,
) -> Result<Vec<TripleReport>> {
    let mut out = vec![check_c2(states, t, f)?];
    if eps > gamma {
        out.push(check_u4(states, t, x0, eps, gamma, f, l)?);
    } else {
        notes.push(format!("U4 skipped: ε = {eps} does not exceed γ = {gamma}"));
    }
    out.push(check_u5(states, t, x0, eps, gamma, f, l)?);
    match delta {
        Some(delta) if delta > 2.0 * gamma => {
            let n = states.len();
            let all_pairs = n * n.saturating_sub(1) / 2;
            let seed = if all_pairs > cfg.pair_budget {
                cfg.require_seed()?
            } else {
                cfg.seed.unwrap_or_default()
            };
            let pairs = sample_pairs(states, cfg.pair_budget, seed);
            out.push(check_u6(&pairs, t, delta, gamma, f)?);
            if t.kind() == TransformerKind::Nondeterministic {
                let semantics: &[Semantics] = match cfg.semantics {
                    SemanticsChoice::Demonic => &[Semantics::Demonic],
                    SemanticsChoice::Angelic => &[Semantics::Angelic],
                    SemanticsChoice::Both => &[Semantics::Demonic, Semantics::Angelic],
                };
                for &s in semantics {
                    out.push(check_u2_nondet(states, t, x0, eps, delta, gamma, f, l, s)?);
                }
            }
        }
        Some(delta) => notes.push(format!(
            "U6 and U2 skipped: δ = {delta} does not exceed 2γ = {}",
            2.0 * gamma
        )),
        None => notes.push("U6 and U2 skipped: no δ configured".into()),
    }
    Ok(out)
}

/// Outcome of [`run_hoare`]: passes when every non-vacuous triple holds and
/// the effective region is valid.
#[derive(Debug, Clone)]
pub struct HoareOutcome {
    pub report: Report,
    pub passed: bool,
}

/// Runtime checks of the triples over `states`. Needs explicit ε and γ;
/// δ enables U6 and U2. Without configured predicates both `F` and `L` are
/// the constant-true predicate.
pub fn run_hoare(cfg: &RunConfig, states: &EmpiricalSample) -> Result<HoareOutcome> {
    cfg.validate()?;
    let eps = cfg
        .epsilon
        .ok_or_else(|| Error::Config("hoare needs an explicit epsilon".into()))?;
    let gamma = cfg
        .gamma
        .ok_or_else(|| Error::Config("hoare needs an explicit gamma".into()))?;
    let transformer = cfg.transformer.build(cfg.seed)?;
    let (f, l) = build_predicates(cfg, states.dim())?
        .unwrap_or_else(|| (ThresholdPredicate::constant(1.0), ThresholdPredicate::constant(1.0)));
    let x0 = cfg.x0.resolve(states)?;
    with_threads(cfg.threads, || {
        let mut clock = Clock(BTreeMap::new());
        let mut report = Report::new("hoare", cfg);
        let mut triples = vec![clock.time("c1", || check_c1(states, &*transformer, gamma))?];
        let more = clock.time("triples", || {
            triple_suite(
                cfg,
                states,
                &*transformer,
                x0.coords(),
                eps,
                cfg.delta,
                gamma,
                &f,
                &l,
                &mut report.notes,
            )
        })?;
        triples.extend(more);

        let mut region_ok = true;
        if let Some(delta) = cfg.delta {
            let params = AnalogyParameters {
                epsilon: eps,
                eta: 0.0,
                gamma,
                xi: 0.0,
                delta,
                alpha: cfg.alpha,
                beta: cfg.beta,
            };
            let region = (delta >= 0.0)
                .then(|| effective_region(eps, delta, gamma))
                .transpose()?;
            region_ok = region.is_some_and(|r| r.valid);
            report.verdict = Some(VerdictBlock::new(check_analogy(&params)?, true, region));
        }
        let passed = region_ok && triples.iter().all(|t| t.vacuous || t.holds);
        report.hoare = triples;
        report.timings_ms = clock.0;
        Ok(HoareOutcome { report, passed })
    })
}

/// Generated data behind a simulation run.
#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub source: EmpiricalSample,
    pub target: EmpiricalSample,
    pub classes: Option<LabeledSample>,
}

/// Draws source, target and class blobs from the generator section (or its
/// default).
pub fn simulate_data(cfg: &RunConfig) -> Result<SimulatedData> {
    let seed = cfg.require_seed()?;
    let gen = cfg.generator.clone().unwrap_or_default();
    if gen.n == 0 || gen.d == 0 {
        return Err(Error::Config("generator needs n >= 1 and d >= 1".into()));
    }
    let zeros = vec![0.0; gen.d];
    let source_mean = gen.source.mean.as_deref().unwrap_or(&zeros);
    let source = generate_gaussian(
        gen.n,
        gen.d,
        source_mean,
        &gen.source.scale,
        SeededStream::for_domain(seed, domain::SAMPLES, 0),
    )?;
    let target = if gen.target_is_source {
        source.clone()
    } else {
        let law = gen.target.as_ref().unwrap_or(&gen.source);
        generate_gaussian(
            gen.m.unwrap_or(gen.n),
            gen.d,
            law.mean.as_deref().unwrap_or(&zeros),
            &law.scale,
            SeededStream::for_domain(seed, domain::SAMPLES, 1),
        )?
    };
    let classes = if gen.classes.is_empty() {
        None
    } else {
        Some(generate_class_blobs(&gen.classes, seed)?)
    };
    Ok(SimulatedData {
        source,
        target,
        classes,
    })
}

/// Paths of the CSVs written by [`run_simulate`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulatedFiles {
    pub source: PathBuf,
    pub target: PathBuf,
    pub classes: Option<PathBuf>,
}

/// Generates data, writes it to `out_dir` as `source.csv`, `target.csv` and
/// `classes.csv`, then runs [`run_check`] on it with δ from the blobs.
pub fn run_simulate(cfg: &RunConfig, out_dir: &Path) -> Result<(CheckOutcome, SimulatedFiles)> {
    cfg.validate()?;
    let data = with_threads(cfg.threads, || simulate_data(cfg))?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(format!("creating {}", out_dir.display()), e))?;
    let files = SimulatedFiles {
        source: out_dir.join("source.csv"),
        target: out_dir.join("target.csv"),
        classes: data.classes.as_ref().map(|_| out_dir.join("classes.csv")),
    };
    write_sample_csv(&files.source, &data.source, None)?;
    write_sample_csv(&files.target, &data.target, None)?;
    if let (Some(path), Some(labeled)) = (&files.classes, &data.classes) {
        write_sample_csv(path, labeled.sample(), Some(labeled))?;
    }
    let mut outcome = run_check(cfg, &data.source, &data.target, data.classes.as_ref())?;
    outcome.report.command = "simulate".into();
    Ok((outcome, files))
}

/// One line of the timing table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub estimator: String,
    pub n: usize,
    pub n_proj: Option<usize>,
    /// Median over the repetitions.
    pub wall_ms: f64,
    pub distance: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Times exact and sliced `W_p` on pairs of standard-normal samples for each
/// configured size.
pub fn run_bench(cfg: &RunConfig) -> Result<Vec<BenchRow>> {
    cfg.validate()?;
    let seed = cfg.require_seed()?;
    let bench = cfg.bench.clone().unwrap_or_default();
    if bench.repetitions < 5 {
        return Err(Error::Config(format!(
            "bench needs >= 5 repetitions, got {}",
            bench.repetitions
        )));
    }
    if bench.sizes.is_empty() || bench.sizes.contains(&0) || bench.d == 0 {
        return Err(Error::Config("bench needs non-empty positive sizes and d >= 1".into()));
    }
    if bench.n_proj.contains(&0) {
        return Err(Error::Config("bench projection counts must be >= 1".into()));
    }
    let metric = cfg.metric();
    with_threads(cfg.threads, || {
        let mut rows = Vec::new();
        for (k, &n) in bench.sizes.iter().enumerate() {
            let zeros = vec![0.0; bench.d];
            let unit = crate::data_io::Spread::Isotropic(1.0);
            let x = generate_gaussian(
                n,
                bench.d,
                &zeros,
                &unit,
                SeededStream::for_domain(seed, domain::SAMPLES, 2 * k as u64),
            )?;
            let y = generate_gaussian(
                n,
                bench.d,
                &zeros,
                &unit,
                SeededStream::for_domain(seed, domain::SAMPLES, 2 * k as u64 + 1),
            )?;
            let time = |estimator: Estimator| -> Result<(f64, f64)> {
                let mut walls = Vec::with_capacity(bench.repetitions);
                let mut distance = 0.0;
                for _ in 0..bench.repetitions {
                    let start = Instant::now();
                    distance = estimator.distance(&x, &y, &metric)?;
                    walls.push(start.elapsed().as_secs_f64() * 1e3);
                }
                Ok((median(walls), distance))
            };
            let exact_allowed = bench.exact_max_n.is_none_or(|m| n <= m) && n * n <= ExactSolver::default().cost_cap;
            if exact_allowed {
                let (wall_ms, distance) = time(Estimator::Exact)?;
                rows.push(BenchRow {
                    estimator: "exact".into(),
                    n,
                    n_proj: None,
                    wall_ms,
                    distance,
                });
            }
            for &n_proj in &bench.n_proj {
                let (wall_ms, distance) = time(Estimator::Sliced { n_proj, seed })?;
                rows.push(BenchRow {
                    estimator: "sliced".into(),
                    n,
                    n_proj: Some(n_proj),
                    wall_ms,
                    distance,
                });
            }
        }
        Ok(rows)
    })
}
