use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::assignment::solve_assignment;
use super::{check_dims, EmpiricalSample, MetricConfig};
use crate::error::{Error, Result};
use crate::numeric::fsum;

/// Largest `n·m` cost matrix the exact solver accepts by default.
pub const DEFAULT_COST_CAP: usize = 4_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub source: usize,
    pub target: usize,
    pub mass: f64,
}

/// A coupling of two uniform empirical measures.
///
/// `cost` is `Σ mass · d(x_i, y_j)^p`, i.e. `W_p^p` when the plan is optimal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub entries: Vec<PlanEntry>,
    pub cost: f64,
}

impl TransportPlan {
    /// Row and column sums, in that order.
    pub fn marginals(&self, n: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
        let mut rows = vec![0.0; n];
        let mut cols = vec![0.0; m];
        for e in &self.entries {
            rows[e.source] += e.mass;
            cols[e.target] += e.mass;
        }
        (rows, cols)
    }

    pub fn total_mass(&self) -> f64 {
        fsum(self.entries.iter().map(|e| e.mass))
    }

    /// Recomputes `Σ mass · d^p` against the given samples.
    pub fn evaluate(&self, x: &EmpiricalSample, y: &EmpiricalSample, cfg: &MetricConfig) -> f64 {
        fsum(
            self.entries
                .iter()
                .map(|e| e.mass * cfg.cost(x.point(e.source), y.point(e.target))),
        )
    }
}

/// Exact discrete optimal transport between uniform empirical measures.
#[derive(Debug, Clone, Copy)]
pub struct ExactSolver {
    pub cost_cap: usize,
}

impl Default for ExactSolver {
    fn default() -> Self {
        ExactSolver {
            cost_cap: DEFAULT_COST_CAP,
        }
    }
}

impl ExactSolver {
    pub fn with_cap(cost_cap: usize) -> Self {
        ExactSolver { cost_cap }
    }

    pub fn distance(&self, x: &EmpiricalSample, y: &EmpiricalSample, cfg: &MetricConfig) -> Result<f64> {
        let plan = self.solve(x, y, cfg)?;
        Ok(cfg.root(plan.cost))
    }

    pub fn solve(&self, x: &EmpiricalSample, y: &EmpiricalSample, cfg: &MetricConfig) -> Result<TransportPlan> {
        cfg.validate()?;
        check_dims(x.dim(), y.dim())?;
        let (n, m) = (x.len(), y.len());
        let entries = n.saturating_mul(m);
        if entries > self.cost_cap {
            return Err(Error::SizeCap {
                entries,
                cap: self.cost_cap,
            });
        }
        let cost = cost_matrix(x, y, cfg);

        if n == m {
            let col = solve_assignment(&cost, n);
            let mass = 1.0 / n as f64;
            let entries: Vec<PlanEntry> = col
                .iter()
                .enumerate()
                .map(|(i, &j)| PlanEntry {
                    source: i,
                    target: j,
                    mass,
                })
                .collect();
            let total = fsum(col.iter().enumerate().map(|(i, &j)| cost[i * n + j])) / n as f64;
            return Ok(TransportPlan { entries, cost: total });
        }

        let flows = solve_transport(&cost, n, m);
        let scale = (n as f64) * (m as f64);
        let total = fsum(flows.iter().map(|&(i, j, f)| f as f64 * cost[i * m + j])) / scale;
        let entries = flows
            .into_iter()
            .map(|(i, j, f)| PlanEntry {
                source: i,
                target: j,
                mass: f as f64 / scale,
            })
            .collect();
        Ok(TransportPlan { entries, cost: total })
    }
}

/// Exact `W_p` and an optimal plan, with the default size cap.
pub fn wasserstein_exact(x: &EmpiricalSample, y: &EmpiricalSample, cfg: &MetricConfig) -> Result<(f64, TransportPlan)> {
    let plan = ExactSolver::default().solve(x, y, cfg)?;
    Ok((cfg.root(plan.cost), plan))
}

fn cost_matrix(x: &EmpiricalSample, y: &EmpiricalSample, cfg: &MetricConfig) -> Vec<f64> {
    let m = y.len();
    let mut cost = vec![0.0; x.len() * m];
    cost.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
        let xi = x.point(i);
        for (j, c) in row.iter_mut().enumerate() {
            *c = cfg.cost(xi, y.point(j));
        }
    });
    cost
}

/// Balanced transportation problem with every source supplying `m` units and
/// every sink demanding `n` units (so each unit is `1/(n·m)` of mass), solved
/// by successive shortest paths. Dijkstra runs on reduced costs kept
/// non-negative by node potentials; flows stay integral throughout.
///
/// Returns the non-zero flows as `(source, sink, units)`.
fn solve_transport(cost: &[f64], n: usize, m: usize) -> Vec<(usize, usize, u64)> {
    const NONE: usize = usize::MAX;
    let nodes = n + m;
    let mut supply = vec![m as u64; n];
    let mut demand = vec![n as u64; m];
    let mut flow = vec![0u64; n * m];
    let mut potential = vec![0.0_f64; nodes];
    let mut dist = vec![f64::INFINITY; nodes];
    let mut parent = vec![NONE; nodes];
    let mut done = vec![false; nodes];
    let mut remaining = (n as u64) * (m as u64);

    while remaining > 0 {
        dist.fill(f64::INFINITY);
        parent.fill(NONE);
        done.fill(false);
        for i in 0..n {
            if supply[i] > 0 {
                dist[i] = 0.0;
            }
        }

        let target = loop {
            let mut u = NONE;
            let mut best = f64::INFINITY;
            for (v, &d) in dist.iter().enumerate() {
                if !done[v] && d < best {
                    best = d;
                    u = v;
                }
            }
            assert!(u != NONE, "transport network disconnected");
            done[u] = true;
            if u >= n {
                let j = u - n;
                if demand[j] > 0 {
                    break u;
                }
                // Residual backward arcs sink j -> source i exist where flow > 0.
                for i in 0..n {
                    if done[i] || flow[i * m + j] == 0 {
                        continue;
                    }
                    let rc = (-cost[i * m + j] + potential[u] - potential[i]).max(0.0);
                    let nd = best + rc;
                    if nd < dist[i] {
                        dist[i] = nd;
                        parent[i] = u;
                    }
                }
            } else {
                let row = &cost[u * m..(u + 1) * m];
                let pu = potential[u];
                for (j, &c) in row.iter().enumerate() {
                    let v = n + j;
                    if done[v] {
                        continue;
                    }
                    let rc = (c + pu - potential[v]).max(0.0);
                    let nd = best + rc;
                    if nd < dist[v] {
                        dist[v] = nd;
                        parent[v] = u;
                    }
                }
            }
        };

        let reach = dist[target];
        for v in 0..nodes {
            potential[v] += if done[v] { dist[v] } else { reach };
        }

        // Bottleneck along the path, then push.
        let mut amount = demand[target - n];
        let mut v = target;
        while parent[v] != NONE {
            let u = parent[v];
            if u >= n {
                // backward arc: sink u -> source v
                amount = amount.min(flow[v * m + (u - n)]);
            }
            v = u;
        }
        amount = amount.min(supply[v]);
        debug_assert!(amount > 0);

        let origin = v;
        let mut v = target;
        while parent[v] != NONE {
            let u = parent[v];
            if u >= n {
                flow[v * m + (u - n)] -= amount;
            } else {
                flow[u * m + (v - n)] += amount;
            }
            v = u;
        }
        supply[origin] -= amount;
        demand[target - n] -= amount;
        remaining -= amount;
    }

    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..m {
            let f = flow[i * m + j];
            if f > 0 {
                out.push((i, j, f));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(points: &[&[f64]]) -> EmpiricalSample {
        EmpiricalSample::new(points.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    #[test]
    fn identical_multisets_in_any_order() {
        let x = sample(&[&[0.0, 0.0], &[1.0, 2.0], &[1.0, 2.0]]);
        let y = sample(&[&[1.0, 2.0], &[0.0, 0.0], &[1.0, 2.0]]);
        let (w, plan) = wasserstein_exact(&x, &y, &MetricConfig::default()).unwrap();
        assert_eq!(w, 0.0);
        assert_eq!(plan.cost, 0.0);
    }

    #[test]
    fn unequal_sizes_hand_value() {
        // {0} vs {0, 2} in 1-D: half the mass stays, half moves by 2.
        let x = sample(&[&[0.0]]);
        let y = sample(&[&[0.0], &[2.0]]);
        let (w, plan) = wasserstein_exact(&x, &y, &MetricConfig::default()).unwrap();
        assert!((w - 1.0).abs() < 1e-15);
        let (rows, cols) = plan.marginals(1, 2);
        assert!((rows[0] - 1.0).abs() < 1e-12);
        assert!(cols.iter().all(|c| (c - 0.5).abs() < 1e-12));
    }

    #[test]
    fn size_cap_is_enforced() {
        let x = sample(&[&[0.0], &[1.0], &[2.0]]);
        let err = ExactSolver::with_cap(8).solve(&x, &x, &MetricConfig::default());
        assert!(matches!(err, Err(Error::SizeCap { entries: 9, cap: 8 })));
    }

    #[test]
    fn dimension_mismatch() {
        let x = sample(&[&[0.0]]);
        let y = sample(&[&[0.0, 1.0]]);
        assert!(wasserstein_exact(&x, &y, &MetricConfig::default()).is_err());
    }

    #[test]
    fn transport_route_agrees_with_assignment_on_square_instances() {
        let x = sample(&[&[0.0, 1.0], &[2.0, -1.0], &[0.5, 0.5], &[3.0, 3.0]]);
        let y = sample(&[&[1.0, 1.0], &[-2.0, 0.0], &[0.0, 4.0], &[2.5, 0.0]]);
        let cfg = MetricConfig::default();
        let cost = cost_matrix(&x, &y, &cfg);
        let flows = solve_transport(&cost, 4, 4);
        let via_flow: f64 = flows.iter().map(|&(i, j, f)| f as f64 * cost[i * 4 + j]).sum::<f64>() / 16.0;
        let (w, _) = wasserstein_exact(&x, &y, &cfg).unwrap();
        assert!((via_flow - w).abs() < 1e-12, "{via_flow} vs {w}");
    }
}
