//! Central-tendency estimators for compositional samples: weighted
//! arithmetic mean, normalized geometric mean, ilr mean, componentwise
//! quasi-arithmetic means, the MST graph median and the L1 median.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::{half_taxi_distance, Composition, CompositionalDataset, RealSimplexPoint};
use crate::transforms::{check_weights, ilr, ilr_inv, quasi_arithmetic_mean, GeneratingFunction};

/// Which estimator produced a [`MeanEstimate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeanMethod {
    WeightedArithmetic { weights: Option<Vec<f64>> },
    NormalizedGeometric,
    IlrMean { weights: Option<Vec<f64>> },
    QuasiArithmeticComponentwise {
        phi: GeneratingFunction,
        weights: Option<Vec<f64>>,
    },
    GraphMedian,
    L1Median,
}

impl MeanMethod {
    pub fn name(&self) -> &'static str {
        match self {
            Self::WeightedArithmetic { .. } => "weighted-arithmetic",
            Self::NormalizedGeometric => "normalized-geometric",
            Self::IlrMean { .. } => "ilr-mean",
            Self::QuasiArithmeticComponentwise { .. } => "quasi-arithmetic-componentwise",
            Self::GraphMedian => "graph-median",
            Self::L1Median => "l1-median",
        }
    }

    /// Evaluate this method on a dataset.
    pub fn evaluate(&self, ds: &CompositionalDataset) -> Result<MeanEstimate> {
        match self {
            Self::WeightedArithmetic { weights } => {
                let w = resolve_weights(weights, ds.len());
                weighted_arithmetic_mean(ds, &w)
            }
            Self::NormalizedGeometric => normalized_geometric_mean(ds),
            Self::IlrMean { weights } => ilr_mean(ds, weights.as_deref()),
            Self::QuasiArithmeticComponentwise { phi, weights } => {
                let w = resolve_weights(weights, ds.len());
                let c = quasi_arithmetic_componentwise(ds, phi, &w)?;
                // The raw component means generally do not sum to one for
                // p >= 3; they are reported as-is, never renormalized.
                Ok(MeanEstimate {
                    point: c.components,
                    method: self.clone(),
                    weights_used: Some(w),
                })
            }
            Self::GraphMedian => graph_median(ds),
            Self::L1Median => l1_median(ds, 1e-10),
        }
    }
}

fn resolve_weights(weights: &Option<Vec<f64>>, n: usize) -> Vec<f64> {
    weights
        .clone()
        .unwrap_or_else(|| vec![1.0 / n as f64; n])
}

/// The output of a mean estimator.
///
/// `point` sums to one for every method except componentwise
/// quasi-arithmetic means, whose raw components are reported unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub point: Vec<f64>,
    pub method: MeanMethod,
    pub weights_used: Option<Vec<f64>>,
}

impl MeanEstimate {
    pub fn sum(&self) -> f64 {
        self.point.iter().sum()
    }

    pub fn in_simplex(&self, tol: f64) -> bool {
        (self.sum() - 1.0).abs() <= tol.max(crate::simplex::RENORM_TOL)
            && self.point.iter().all(|&v| v >= -tol && v <= 1.0 + tol)
    }

    pub fn as_real_simplex_point(&self) -> Result<RealSimplexPoint> {
        RealSimplexPoint::new(self.point.clone())
    }
}

/// Componentwise weighted arithmetic mean M^k = sum_i lambda_i x_i^k.
///
/// With negative weights the result can leave the simplex; it always lies
/// on the sum-to-one hyperplane, which is what the estimate reports.
pub fn weighted_arithmetic_mean(
    ds: &CompositionalDataset,
    weights: &[f64],
) -> Result<MeanEstimate> {
    check_weights(weights, ds.len())?;
    let p = ds.part_count();
    let mut parts = vec![0.0; p];
    for (row, &w) in ds.rows().iter().zip(weights) {
        for (k, &x) in row.parts().iter().enumerate() {
            parts[k] += w * x;
        }
    }
    Ok(MeanEstimate {
        point: parts,
        method: MeanMethod::WeightedArithmetic {
            weights: Some(weights.to_vec()),
        },
        weights_used: Some(weights.to_vec()),
    })
}

/// Normalized geometric mean: the componentwise geometric mean, closed
/// back onto the simplex.
pub fn normalized_geometric_mean(ds: &CompositionalDataset) -> Result<MeanEstimate> {
    if !ds.all_strictly_positive() {
        let index = ds
            .rows()
            .iter()
            .find_map(|r| r.first_zero())
            .unwrap_or(0);
        return Err(Error::ZeroPart { index });
    }
    let n = ds.len() as f64;
    let p = ds.part_count();
    let mut logs = vec![0.0; p];
    for row in ds.rows() {
        for (k, &x) in row.parts().iter().enumerate() {
            logs[k] += x.ln() / n;
        }
    }
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logs.iter().map(|&l| (l - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let parts: Vec<f64> = exps.iter().map(|&e| e / sum).collect();
    Ok(MeanEstimate {
        point: parts,
        method: MeanMethod::NormalizedGeometric,
        weights_used: None,
    })
}

/// Weighted arithmetic mean taken in ilr coordinates and back-transformed.
/// With equal weights this is exactly the normalized geometric mean.
pub fn ilr_mean(ds: &CompositionalDataset, weights: Option<&[f64]>) -> Result<MeanEstimate> {
    let n = ds.len();
    let w = weights
        .map(|w| w.to_vec())
        .unwrap_or_else(|| vec![1.0 / n as f64; n]);
    check_weights(&w, n)?;
    let p = ds.part_count();
    let mut mean = vec![0.0; p - 1];
    for (row, &wi) in ds.rows().iter().zip(&w) {
        let u = ilr(row)?;
        for (k, &c) in u.coords().iter().enumerate() {
            mean[k] += wi * c;
        }
    }
    let back = ilr_inv(&crate::transforms::IlrCoordinates::new(mean), p)?;
    Ok(MeanEstimate {
        point: back.parts().to_vec(),
        method: MeanMethod::IlrMean {
            weights: Some(w.clone()),
        },
        weights_used: Some(w),
    })
}

/// Raw componentwise quasi-arithmetic means and their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentwiseMeans {
    pub components: Vec<f64>,
    pub sum: f64,
}

/// phi^{-1}( sum_i lambda_i phi(x_i^k) ) for each part k, deliberately not
/// renormalized: the sum-to-one failure for p >= 3 is the point of interest.
pub fn quasi_arithmetic_componentwise(
    ds: &CompositionalDataset,
    phi: &GeneratingFunction,
    weights: &[f64],
) -> Result<ComponentwiseMeans> {
    check_weights(weights, ds.len())?;
    let p = ds.part_count();
    let mut components = Vec::with_capacity(p);
    for k in 0..p {
        components.push(quasi_arithmetic_mean(&ds.column(k), weights, phi)?);
    }
    let sum = components.iter().sum();
    Ok(ComponentwiseMeans { components, sum })
}

/// Kruskal MST under the half-taxi metric, with ties broken by
/// (distance, smaller index, larger index). Returns adjacency lists.
fn minimum_spanning_tree(ds: &CompositionalDataset) -> Result<Vec<Vec<usize>>> {
    let n = ds.len();
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = half_taxi_distance(&ds.rows()[i], &ds.rows()[j])?;
            edges.push((d, i, j));
        }
    }
    edges.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut adj = vec![Vec::new(); n];
    let mut used = 0;
    for (_, i, j) in edges {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri] = rj;
            adj[i].push(j);
            adj[j].push(i);
            used += 1;
            if used == n - 1 {
                break;
            }
        }
    }
    Ok(adj)
}

/// Graph median: build the MST under the half-taxi metric, then repeatedly
/// delete all current leaves until one vertex remains, or two adjacent
/// vertices whose midpoint is returned.
pub fn graph_median(ds: &CompositionalDataset) -> Result<MeanEstimate> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = ds.len();
    let point = if n == 1 {
        ds.rows()[0].clone()
    } else {
        let adj = minimum_spanning_tree(ds)?;
        let mut alive = vec![true; n];
        let mut degree: Vec<usize> = adj.iter().map(|a| a.len()).collect();
        let mut remaining = n;
        while remaining > 2 {
            let leaves: Vec<usize> = (0..n)
                .filter(|&v| alive[v] && degree[v] <= 1)
                .collect();
            if leaves.len() >= remaining {
                // all remaining vertices are leaves of each other
                break;
            }
            for &v in &leaves {
                alive[v] = false;
                remaining -= 1;
                for &u in &adj[v] {
                    if alive[u] {
                        degree[u] -= 1;
                    }
                }
            }
        }
        let survivors: Vec<usize> = (0..n).filter(|&v| alive[v]).collect();
        match survivors.as_slice() {
            [v] => ds.rows()[*v].clone(),
            [a, b] => {
                debug_assert!(adj[*a].contains(b), "two survivors in a tree are adjacent");
                let parts: Vec<f64> = ds.rows()[*a]
                    .parts()
                    .iter()
                    .zip(ds.rows()[*b].parts())
                    .map(|(x, y)| 0.5 * (x + y))
                    .collect();
                Composition::new(parts)?
            }
            _ => unreachable!("pruning a tree leaves one or two vertices"),
        }
    };
    Ok(MeanEstimate {
        point: point.parts().to_vec(),
        method: MeanMethod::GraphMedian,
        weights_used: None,
    })
}

const L1_MAX_ITER: usize = 10_000;
const L1_ANCHOR_TOL: f64 = 1e-12;

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Sum of Euclidean distances from `m` to the dataset rows.
pub fn l1_objective(ds: &CompositionalDataset, m: &[f64]) -> f64 {
    ds.rows().iter().map(|r| euclid(m, r.parts())).sum()
}

/// L1 (geometric) median by Weiszfeld iteration with anchor handling:
/// an iterate landing on a datum is tested via the subgradient condition.
pub fn l1_median(ds: &CompositionalDataset, tol: f64) -> Result<MeanEstimate> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = ds.len();
    let p = ds.part_count();
    if n == 1 {
        return Ok(MeanEstimate {
            point: ds.rows()[0].parts().to_vec(),
            method: MeanMethod::L1Median,
            weights_used: None,
        });
    }
    // start at the arithmetic mean
    let mut m: Vec<f64> = (0..p)
        .map(|k| ds.column(k).iter().sum::<f64>() / n as f64)
        .collect();
    let mut obj = l1_objective(ds, &m);
    for iter in 0..L1_MAX_ITER {
        let mut num = vec![0.0; p];
        let mut den = 0.0;
        let mut anchor = None;
        for (i, row) in ds.rows().iter().enumerate() {
            let d = euclid(&m, row.parts());
            if d <= L1_ANCHOR_TOL {
                anchor = Some(i);
                continue;
            }
            for (nk, xk) in num.iter_mut().zip(row.parts()) {
                *nk += xk / d;
            }
            den += 1.0 / d;
        }
        let next = if let Some(i) = anchor {
            // Subgradient test at the datum: optimal iff the pull of the
            // other points does not exceed the unit ball.
            let ri: Vec<f64> = (0..p)
                .map(|k| num[k] - den * ds.rows()[i].parts()[k])
                .collect();
            let r_norm = ri.iter().map(|v| v * v).sum::<f64>().sqrt();
            if r_norm <= 1.0 + 1e-12 {
                return Ok(MeanEstimate {
                    point: m,
                    method: MeanMethod::L1Median,
                    weights_used: None,
                });
            }
            // step off the anchor along the pull direction
            let step = (r_norm - 1.0) / den;
            (0..p)
                .map(|k| ds.rows()[i].parts()[k] + step * ri[k] / r_norm)
                .collect()
        } else {
            (0..p).map(|k| num[k] / den).collect::<Vec<f64>>()
        };
        let next_obj = l1_objective(ds, &next);
        let shift = euclid(&m, &next);
        m = next;
        let improved = obj - next_obj;
        obj = next_obj;
        if shift <= tol && improved.abs() <= tol {
            return Ok(MeanEstimate {
                point: m,
                method: MeanMethod::L1Median,
                weights_used: None,
            });
        }
        let _ = iter;
    }
    Err(Error::NonConvergence {
        iterations: L1_MAX_ITER,
        objective: obj,
    })
}
