//! Run configuration: one JSON document, unknown keys rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::LabelColumn;
use super::generate::{BlobSpec, Spread};
use crate::analogy::ThresholdPredicate;
use crate::error::{Error, Result};
use crate::estimation::EpsilonMethod;
use crate::hoare::{
    Identity, Jitter, Scaling, StateTransformer, SubprocessTransformer, TransformerKind, Translation, TwoBranchJump,
};
use crate::metric::{EmpiricalSample, Estimator, MetricConfig, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    #[default]
    Exact,
    Sliced,
}

/// Reference element: explicit coordinates or the source barycenter.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "X0Repr", into = "X0Repr")]
pub enum X0Spec {
    #[default]
    Barycenter,
    Point(Vec<f64>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum X0Repr {
    Name(String),
    Coords(Vec<f64>),
}

impl TryFrom<X0Repr> for X0Spec {
    type Error = String;
    fn try_from(r: X0Repr) -> std::result::Result<Self, String> {
        match r {
            X0Repr::Name(n) if n == "barycenter" => Ok(X0Spec::Barycenter),
            X0Repr::Name(n) => Err(format!("x0 must be \"barycenter\" or a coordinate list, got {n:?}")),
            X0Repr::Coords(c) => Ok(X0Spec::Point(c)),
        }
    }
}

impl From<X0Spec> for X0Repr {
    fn from(x: X0Spec) -> Self {
        match x {
            X0Spec::Barycenter => X0Repr::Name("barycenter".into()),
            X0Spec::Point(c) => X0Repr::Coords(c),
        }
    }
}

impl X0Spec {
    pub fn resolve(&self, sample: &EmpiricalSample) -> Result<Point> {
        match self {
            X0Spec::Barycenter => Ok(sample.barycenter()),
            X0Spec::Point(c) => {
                let p = Point::new(c.clone())?;
                if p.dim() != sample.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: sample.dim(),
                        got: p.dim(),
                    });
                }
                Ok(p)
            }
        }
    }
}

/// Built-in transformers and the subprocess plug-in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TransformerSpec {
    Identity {},
    Translation {
        vector: Vec<f64>,
    },
    Scaling {
        factors: Vec<f64>,
    },
    Jitter {
        sigma: f64,
        bound: f64,
        /// Falls back to the run seed.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Jump {
        vector: Vec<f64>,
    },
    Subprocess {
        command: Vec<String>,
        #[serde(default)]
        nondeterministic: bool,
    },
}

impl Default for TransformerSpec {
    fn default() -> Self {
        TransformerSpec::Identity {}
    }
}

impl TransformerSpec {
    pub fn build(&self, run_seed: Option<u64>) -> Result<Box<dyn StateTransformer>> {
        Ok(match self {
            TransformerSpec::Identity {} => Box::new(Identity),
            TransformerSpec::Translation { vector } => Box::new(Translation { offset: vector.clone() }),
            TransformerSpec::Scaling { factors } => Box::new(Scaling {
                factors: factors.clone(),
            }),
            TransformerSpec::Jitter { sigma, bound, seed } => {
                if !(*sigma >= 0.0 && *bound >= 0.0) {
                    return Err(Error::Config("jitter needs sigma >= 0 and bound >= 0".into()));
                }
                let seed = seed.or(run_seed).ok_or_else(|| {
                    Error::Config("jitter transformer needs a seed (--seed or transformer.seed)".into())
                })?;
                Box::new(Jitter {
                    sigma: *sigma,
                    bound: *bound,
                    seed,
                })
            }
            TransformerSpec::Jump { vector } => Box::new(TwoBranchJump { jump: vector.clone() }),
            TransformerSpec::Subprocess {
                command,
                nondeterministic,
            } => {
                let (program, args) = command
                    .split_first()
                    .ok_or_else(|| Error::Config("subprocess transformer needs a command".into()))?;
                Box::new(SubprocessTransformer {
                    program: program.clone(),
                    args: args.to_vec(),
                    kind: if *nondeterministic {
                        TransformerKind::Nondeterministic
                    } else {
                        TransformerKind::Deterministic
                    },
                })
            }
        })
    }
}

/// Threshold predicates selectable from config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PredicateSpec {
    /// Score `value` everywhere.
    Constant { value: f64 },
    /// Score `radius − ‖x − center‖`.
    Ball { center: Vec<f64>, radius: f64 },
    /// Score `normal · x + offset`.
    Halfspace { normal: Vec<f64>, offset: f64 },
    /// Score `x[index] − threshold`.
    Coordinate { index: usize, threshold: f64 },
}

impl PredicateSpec {
    pub fn build(&self, dim: usize) -> Result<ThresholdPredicate> {
        let check = |len: usize, what: &str| {
            if len != dim {
                Err(Error::Config(format!(
                    "predicate {what} has dimension {len}, data has {dim}"
                )))
            } else {
                Ok(())
            }
        };
        Ok(match self {
            PredicateSpec::Constant { value } => ThresholdPredicate::constant(*value),
            PredicateSpec::Ball { center, radius } => {
                check(center.len(), "center")?;
                ThresholdPredicate::ball(center.clone(), *radius)
            }
            PredicateSpec::Halfspace { normal, offset } => {
                check(normal.len(), "normal")?;
                ThresholdPredicate::halfspace(normal.clone(), *offset)
            }
            PredicateSpec::Coordinate { index, threshold } => {
                if *index >= dim {
                    return Err(Error::Config(format!(
                        "coordinate index {index} out of range for d={dim}"
                    )));
                }
                let (k, t) = (*index, *threshold);
                ThresholdPredicate::new(format!("x[{k}] >= {t}"), move |x| x[k] - t)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Predicates {
    #[serde(rename = "F")]
    pub f: PredicateSpec,
    #[serde(rename = "L")]
    pub l: PredicateSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemanticsChoice {
    Demonic,
    Angelic,
    #[default]
    Both,
}

/// Gaussian population for the simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSpec {
    /// Defaults to the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<Vec<f64>>,
    #[serde(default)]
    pub scale: Spread,
}

impl Default for GaussianSpec {
    fn default() -> Self {
        GaussianSpec {
            mean: None,
            scale: Spread::Isotropic(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub n: usize,
    /// Target size; defaults to `n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub d: usize,
    #[serde(default)]
    pub source: GaussianSpec,
    /// Target population; defaults to an independent draw from the source law.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<GaussianSpec>,
    /// Use the source sample itself as the target.
    #[serde(default)]
    pub target_is_source: bool,
    /// Labelled blobs that determine δ.
    #[serde(default)]
    pub classes: Vec<BlobSpec>,
}

impl Default for GeneratorSpec {
    /// n = 500 standard-normal points in the plane for both domains, plus two
    /// blobs of 100 points 11.5 apart, which puts the sliced δ near 2.
    fn default() -> Self {
        GeneratorSpec {
            n: 500,
            m: None,
            d: 2,
            source: GaussianSpec::default(),
            target: None,
            target_is_source: false,
            classes: vec![
                BlobSpec {
                    n: 100,
                    mean: vec![0.0, 0.0],
                    scale: Spread::Isotropic(0.5),
                },
                BlobSpec {
                    n: 100,
                    mean: vec![11.5, 0.0],
                    scale: Spread::Isotropic(0.5),
                },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSpec {
    pub sizes: Vec<usize>,
    #[serde(default = "defaults::bench_dim")]
    pub d: usize,
    #[serde(default = "defaults::bench_projections")]
    pub n_proj: Vec<usize>,
    #[serde(default = "defaults::bench_repetitions")]
    pub repetitions: usize,
    /// Skip the exact solver above this n.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_max_n: Option<usize>,
}

impl Default for BenchSpec {
    fn default() -> Self {
        BenchSpec {
            sizes: vec![250, 500, 1000, 2000],
            d: defaults::bench_dim(),
            n_proj: defaults::bench_projections(),
            repetitions: defaults::bench_repetitions(),
            exact_max_n: None,
        }
    }
}

mod defaults {
    pub fn p() -> f64 {
        1.0
    }
    pub fn level() -> f64 {
        0.05
    }
    pub fn bootstrap() -> usize {
        1000
    }
    pub fn n_proj() -> usize {
        1000
    }
    pub fn pair_budget() -> usize {
        10_000
    }
    pub fn bench_dim() -> usize {
        16
    }
    pub fn bench_projections() -> Vec<usize> {
        vec![1000, 2000]
    }
    pub fn bench_repetitions() -> usize {
        5
    }
}

/// Every knob of a run. Field defaults: `p = 1`, `α = β = 0.05`,
/// `B = 1000`, `n_proj = 1000`, exact estimator, normal ε, barycenter x0,
/// identity transformer, 10⁴ pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "defaults::p")]
    pub p: f64,
    #[serde(default = "defaults::level")]
    pub alpha: f64,
    #[serde(default = "defaults::level")]
    pub beta: f64,
    #[serde(default = "defaults::bootstrap")]
    pub bootstrap: usize,
    #[serde(default = "defaults::n_proj")]
    pub n_proj: usize,
    #[serde(default)]
    pub estimator: EstimatorKind,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub eps_method: EpsilonMethod,
    #[serde(default)]
    pub x0: X0Spec,
    #[serde(default)]
    pub transformer: TransformerSpec,
    #[serde(default = "defaults::pair_budget")]
    pub pair_budget: usize,
    /// Explicit ε; otherwise estimated from the bootstrap.
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Explicit δ; otherwise estimated from class labels.
    #[serde(default)]
    pub delta: Option<f64>,
    /// Explicit γ; otherwise estimated from transformer displacements.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub has_header: bool,
    #[serde(default)]
    pub label_column: Option<LabelColumn>,
    #[serde(default)]
    pub predicates: Option<Predicates>,
    #[serde(default)]
    pub semantics: SemanticsChoice,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub generator: Option<GeneratorSpec>,
    #[serde(default)]
    pub bench: Option<BenchSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_json(&text)
    }

    /// The model-data setup: independent standard-normal source and target
    /// with n = 500, d = 2, sliced `W_1` with 1000 projections, two blobs for
    /// δ, ε = 0.5 and a jitter transformer bounded by 0.05.
    pub fn simulation_default() -> Self {
        RunConfig {
            estimator: EstimatorKind::Sliced,
            epsilon: Some(0.5),
            transformer: TransformerSpec::Jitter {
                sigma: 0.02,
                bound: 0.05,
                seed: None,
            },
            generator: Some(GeneratorSpec::default()),
            ..RunConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        MetricConfig::new(self.p).map_err(|e| Error::Config(e.to_string()))?;
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if self.bootstrap < 2 {
            return Err(Error::Config(format!("bootstrap must be >= 2, got {}", self.bootstrap)));
        }
        if self.n_proj == 0 {
            return Err(Error::Config("n_proj must be >= 1".into()));
        }
        if self.pair_budget == 0 {
            return Err(Error::Config("pair_budget must be >= 1".into()));
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::Config(format!("epsilon must be positive, got {e}")));
            }
        }
        if let Some(g) = self.gamma {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(Error::Config(format!("gamma must be >= 0, got {g}")));
            }
        }
        if let Some(d) = self.delta {
            if !d.is_finite() {
                return Err(Error::Config(format!("delta must be finite, got {d}")));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be >= 1".into()));
        }
        Ok(())
    }

    pub fn metric(&self) -> MetricConfig {
        MetricConfig {
            p: self.p,
            ..MetricConfig::default()
        }
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config("this command is stochastic: --seed (or \"seed\") is required".into()))
    }

    /// The configured estimator; sliced needs a seed.
    pub fn estimator(&self) -> Result<Estimator> {
        Ok(match self.estimator {
            EstimatorKind::Exact => Estimator::Exact,
            EstimatorKind::Sliced => Estimator::Sliced {
                n_proj: self.n_proj,
                seed: self.require_seed()?,
            },
        })
    }
}
