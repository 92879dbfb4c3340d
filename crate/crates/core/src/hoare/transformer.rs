//! State transformers: the programs whose behaviour the triples constrain.

use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data_io::rng::{domain, mix, SeededStream};
use crate::error::{Error, Result};
use crate::metric::EmpiricalSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformerKind {
    /// Exactly one successor per state.
    Deterministic,
    /// A non-empty successor set per state.
    Nondeterministic,
}

/// Successor sets, one per input state, in input order.
pub type Successors = Vec<Vec<Vec<f64>>>;

pub trait StateTransformer: Send + Sync {
    fn kind(&self) -> TransformerKind;

    /// Successors of a single state.
    fn successors(&self, state: &[f64]) -> Result<Vec<Vec<f64>>>;

    /// True when the transformer must not be invoked concurrently.
    fn serial(&self) -> bool {
        false
    }

    /// Successor sets for every row of `states`, validated against the
    /// transformer contract. Runs in parallel unless [`serial`](Self::serial).
    fn apply_all(&self, states: &EmpiricalSample) -> Result<Successors> {
        let out: Successors = if self.serial() {
            states.iter().map(|s| self.successors(s)).collect::<Result<_>>()?
        } else {
            states
                .iter()
                .collect::<Vec<_>>()
                .into_par_iter()
                .map(|s| self.successors(s))
                .collect::<Result<_>>()?
        };
        validate_successors(&out, states.dim(), self.kind())?;
        Ok(out)
    }
}

pub(crate) fn validate_successors(out: &Successors, dim: usize, kind: TransformerKind) -> Result<()> {
    for (i, set) in out.iter().enumerate() {
        if set.is_empty() {
            return Err(Error::Transformer(format!("state {i}: empty successor set")));
        }
        if kind == TransformerKind::Deterministic && set.len() != 1 {
            return Err(Error::Transformer(format!(
                "state {i}: deterministic transformer returned {} successors",
                set.len()
            )));
        }
        for s in set {
            if s.len() != dim {
                return Err(Error::Transformer(format!(
                    "state {i}: successor has dimension {}, expected {dim}",
                    s.len()
                )));
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::Transformer(format!("state {i}: non-finite successor")));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl StateTransformer for Identity {
    fn kind(&self) -> TransformerKind {
        TransformerKind::Deterministic
    }
    fn successors(&self, state: &[f64]) -> Result<Vec<Vec<f64>>> {
        Ok(vec![state.to_vec()])
    }
}

/// `s ↦ s + offset`
#[derive(Debug, Clone)]
pub struct Translation {
    pub offset: Vec<f64>,
}

impl StateTransformer for Translation {
    fn kind(&self) -> TransformerKind {
        TransformerKind::Deterministic
    }
    fn successors(&self, state: &[f64]) -> Result<Vec<Vec<f64>>> {
        check_len(state, &self.offset)?;
        Ok(vec![state.iter().zip(&self.offset).map(|(a, b)| a + b).collect()])
    }
}

/// Coordinate-wise scaling `s_k ↦ factors_k · s_k`.
#[derive(Debug, Clone)]
pub struct Scaling {
    pub factors: Vec<f64>,
}

impl StateTransformer for Scaling {
    fn kind(&self) -> TransformerKind {
        TransformerKind::Deterministic
    }
    fn successors(&self, state: &[f64]) -> Result<Vec<Vec<f64>>> {
        check_len(state, &self.factors)?;
        Ok(vec![state.iter().zip(&self.factors).map(|(a, b)| a * b).collect()])
    }
}

/// Gaussian jitter with standard deviation `sigma` per coordinate, clipped to
/// Euclidean norm `bound`. The noise is a pure function of `(seed, state)`,
/// so repeated calls on the same state agree.
#[derive(Debug, Clone)]
pub struct Jitter {
    pub sigma: f64,
    pub bound: f64,
    pub seed: u64,
}

impl StateTransformer for Jitter {
    fn kind(&self) -> TransformerKind {
        TransformerKind::Deterministic
    }
    fn successors(&self, state: &[f64]) -> Result<Vec<Vec<f64>>> {
        let key = state.iter().fold(0x51_7cc1_b727_220a_u64, |h, v| mix(h ^ v.to_bits()));
        let mut rng = SeededStream::for_domain(self.seed, domain::JITTER, key).rng();
        let mut noise: Vec<f64> = (0..state.len())
            .map(|_| self.sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let norm = noise.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > self.bound {
            let shrink = self.bound / norm;
            noise.iter_mut().for_each(|v| *v *= shrink);
        }
        Ok(vec![state.iter().zip(&noise).map(|(a, b)| a + b).collect()])
    }
}

/// Two-branch nondeterministic program: `Post(s) = {s, s + jump}`.
#[derive(Debug, Clone)]
pub struct TwoBranchJump {
    pub jump: Vec<f64>,
}

impl StateTransformer for TwoBranchJump {
    fn kind(&self) -> TransformerKind {
        TransformerKind::Nondeterministic
    }
    fn successors(&self, state: &[f64]) -> Result<Vec<Vec<f64>>> {
        check_len(state, &self.jump)?;
        Ok(vec![
            state.to_vec(),
            state.iter().zip(&self.jump).map(|(a, b)| a + b).collect(),
        ])
    }
}

type MapFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type SetFn = dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync;

/// Deterministic transformer from a closure.
#[derive(Clone)]
pub struct FnTransformer(Arc<MapFn>);

impl FnTransformer {
    pub fn new(f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        FnTransformer(Arc::new(f))
    }
}

impl StateTransformer for FnTransformer {
    fn kind(&self) -> TransformerKind {
        TransformerKind::Deterministic
    }
    fn successors(&self, state: &[f64]) -> Result<Vec<Vec<f64>>> {
        Ok(vec![(self.0)(state)])
    }
}

/// Nondeterministic transformer from a closure returning the successor set.
#[derive(Clone)]
pub struct FnSetTransformer(Arc<SetFn>);

impl FnSetTransformer {
    pub fn new(f: impl Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync + 'static) -> Self {
        FnSetTransformer(Arc::new(f))
    }
}

impl StateTransformer for FnSetTransformer {
    fn kind(&self) -> TransformerKind {
        TransformerKind::Nondeterministic
    }
    fn successors(&self, state: &[f64]) -> Result<Vec<Vec<f64>>> {
        Ok((self.0)(state))
    }
}

/// External program speaking the line protocol:
///
/// - stdin: one state per line, comma-separated coordinates;
/// - stdout, deterministic: one line per input state, same order;
/// - stdout, nondeterministic: one block of lines per input state, blocks
///   separated by a blank line.
#[derive(Debug, Clone)]
pub struct SubprocessTransformer {
    pub program: String,
    pub args: Vec<String>,
    pub kind: TransformerKind,
}

impl SubprocessTransformer {
    fn run(&self, states: &[&[f64]]) -> Result<Successors> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Transformer(format!("cannot start {:?}: {e}", self.program)))?;

        let mut input = String::new();
        for s in states {
            let line: Vec<String> = s.iter().map(|v| v.to_string()).collect();
            input.push_str(&line.join(","));
            input.push('\n');
        }
        let mut stdin = child.stdin.take().expect("stdin is piped");
        let writer = std::thread::spawn(move || stdin.write_all(input.as_bytes()));

        let stdout = child.stdout.take().expect("stdout is piped");
        let mut blocks: Successors = Vec::new();
        let mut current: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in BufReader::new(stdout).lines().enumerate() {
            let line = line.map_err(|e| Error::Transformer(format!("reading transformer output: {e}")))?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                if self.kind == TransformerKind::Deterministic {
                    return Err(Error::Transformer(format!(
                        "output line {}: blank line from a deterministic transformer",
                        lineno + 1
                    )));
                }
                if !current.is_empty() {
                    blocks.push(std::mem::take(&mut current));
                }
                continue;
            }
            let point = trimmed
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::Transformer(format!("output line {}: {e}", lineno + 1)))?;
            match self.kind {
                TransformerKind::Deterministic => blocks.push(vec![point]),
                TransformerKind::Nondeterministic => current.push(point),
            }
        }
        if !current.is_empty() {
            blocks.push(current);
        }

        let status = child
            .wait()
            .map_err(|e| Error::Transformer(format!("waiting for transformer: {e}")))?;
        if let Ok(Err(e)) = writer.join() {
            if e.kind() != std::io::ErrorKind::BrokenPipe {
                return Err(Error::Transformer(format!("writing transformer input: {e}")));
            }
        }
        if !status.success() {
            return Err(Error::Transformer(format!("transformer exited with {status}")));
        }
        if blocks.len() != states.len() {
            return Err(Error::Transformer(format!(
                "transformer returned {} successor sets for {} states",
                blocks.len(),
                states.len()
            )));
        }
        Ok(blocks)
    }
}

impl StateTransformer for SubprocessTransformer {
    fn kind(&self) -> TransformerKind {
        self.kind
    }

    fn serial(&self) -> bool {
        true
    }

    fn successors(&self, state: &[f64]) -> Result<Vec<Vec<f64>>> {
        Ok(self.run(&[state])?.pop().unwrap_or_default())
    }

    fn apply_all(&self, states: &EmpiricalSample) -> Result<Successors> {
        let rows: Vec<&[f64]> = states.iter().collect();
        let out = self.run(&rows)?;
        validate_successors(&out, states.dim(), self.kind)?;
        Ok(out)
    }
}

fn check_len(state: &[f64], param: &[f64]) -> Result<()> {
    if state.len() != param.len() {
        return Err(Error::Transformer(format!(
            "transformer parameter has dimension {}, state has {}",
            param.len(),
            state.len()
        )));
    }
    Ok(())
}
