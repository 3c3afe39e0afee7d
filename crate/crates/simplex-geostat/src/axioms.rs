//! Empirical verification harness for the mean axioms (reflexivity,
//! marginal stability, continuity, symmetry), the two-part exception
//! family, and the proportional-model weight equivalence.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::covariance::{correlation_matrix, CorrelationFamily, CorrelationFunction, CovModel, LmcTerm};
use crate::error::Result;
use crate::kriging::{cokrige_means, krige_mean_single, weights_equal_across_variables};
use crate::means::MeanMethod;
use crate::simplex::{
    amalgamate, closure, Composition, CompositionalDataset, Grouping, SiteSet,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axiom {
    C1,
    C2,
    C3,
    C4,
    SumToOne,
    EqualWeightsForward,
    EqualWeightsConverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    WitnessFound,
    /// Preconditions of the check are not met (e.g. the linearity probe on
    /// a method that already fails marginal stability).
    Inapplicable,
}

/// Outcome of one axiom check. Fail and witness-found verdicts always carry
/// a replayable witness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AxiomReport {
    pub axiom: Axiom,
    pub subject: String,
    pub verdict: Verdict,
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        matches!(self.verdict, Verdict::Pass)
    }
}

const EXACT_TOL: f64 = 1e-10;

/// C1: the mean of n copies of x is x.
pub fn check_reflexivity(method: &MeanMethod, x: &Composition, n: usize) -> AxiomReport {
    let subject = method.name().to_string();
    let rows = vec![x.clone(); n];
    let ds = match CompositionalDataset::from_rows(rows) {
        Ok(ds) => ds,
        Err(e) => return inapplicable(Axiom::C1, subject, e.to_string()),
    };
    let estimate = match method.evaluate(&ds) {
        Ok(m) => m,
        Err(e) => {
            return AxiomReport {
                axiom: Axiom::C1,
                subject,
                verdict: Verdict::Fail,
                residual: f64::NAN,
                witness: Some(json!({ "x": x.parts(), "n": n })),
                detail: Some(format!("method failed: {e}")),
            }
        }
    };
    let residual = estimate
        .point
        .iter()
        .zip(x.parts())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    AxiomReport {
        axiom: Axiom::C1,
        subject,
        verdict: if residual <= EXACT_TOL {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
        residual,
        witness: if residual <= EXACT_TOL {
            None
        } else {
            Some(json!({ "x": x.parts(), "n": n }))
        },
        detail: None,
    }
}

/// C2 via amalgamation: part-1 means must agree for two groupings sharing
/// their first block.
pub fn check_marginal_stability(
    method: &MeanMethod,
    ds: &CompositionalDataset,
    group_a: &Grouping,
    group_b: &Grouping,
) -> Result<AxiomReport> {
    let subject = method.name().to_string();
    if group_a.groups()[0] != group_b.groups()[0] {
        return Ok(inapplicable(
            Axiom::C2,
            subject,
            "groupings do not share their first block".into(),
        ));
    }
    let ds_a = amalgamate(ds, group_a)?;
    let ds_b = amalgamate(ds, group_b)?;
    let (ma, mb) = match (method.evaluate(&ds_a), method.evaluate(&ds_b)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            return Ok(inapplicable(Axiom::C2, subject, e.to_string()))
        }
    };
    // the axiom concerns means valued in the sum-to-one space; outputs that
    // leave it are compared after closure, and the report says so
    let mut renormalized = false;
    let part1 = |m: &crate::means::MeanEstimate, renormalized: &mut bool| -> f64 {
        let sum = m.sum();
        if (sum - 1.0).abs() > crate::simplex::RENORM_TOL {
            *renormalized = true;
            m.point[0] / sum
        } else {
            m.point[0]
        }
    };
    let a1 = part1(&ma, &mut renormalized);
    let b1 = part1(&mb, &mut renormalized);
    let residual = (a1 - b1).abs();
    Ok(AxiomReport {
        axiom: Axiom::C2,
        subject,
        verdict: if residual <= EXACT_TOL {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
        residual,
        witness: if residual <= EXACT_TOL {
            None
        } else {
            Some(json!({
                "rows": ds.rows().iter().map(|r| r.parts().to_vec()).collect::<Vec<_>>(),
                "grouping_a": group_a.groups(),
                "grouping_b": group_b.groups(),
                "part1_mean_a": a1,
                "part1_mean_b": b1,
            }))
        },
        detail: if renormalized {
            Some("output does not sum to one; compared after closure".to_string())
        } else {
            None
        },
    })
}

/// C3, checked empirically: perturb each row by shrinking deltas and watch
/// the response ratio. A bounded, non-exploding ratio reports "no
/// discontinuity detected"; a jump flags failure with the witness.
pub fn check_continuity(
    method: &MeanMethod,
    ds: &CompositionalDataset,
    deltas: &[f64],
) -> Result<AxiomReport> {
    let subject = method.name().to_string();
    let base = match method.evaluate(ds) {
        Ok(m) => m,
        Err(e) => return Ok(inapplicable(Axiom::C3, subject, e.to_string())),
    };
    let p = ds.part_count();
    let mut moduli = Vec::with_capacity(deltas.len());
    let mut worst_witness = None;
    for &delta in deltas {
        let mut modulus = 0.0_f64;
        for i in 0..ds.len() {
            // shift mass delta from the largest part to the smallest
            let row = &ds.rows()[i];
            let (mut lo, mut hi) = (0, 0);
            for k in 0..p {
                if row.parts()[k] < row.parts()[lo] {
                    lo = k;
                }
                if row.parts()[k] > row.parts()[hi] {
                    hi = k;
                }
            }
            let mut parts = row.parts().to_vec();
            let shift = delta.min(parts[hi] * 0.5);
            parts[hi] -= shift;
            parts[lo] += shift;
            let mut rows = ds.rows().to_vec();
            rows[i] = Composition::new(parts)?;
            let perturbed = CompositionalDataset::new(ds.sites().clone(), rows)?;
            let m = match method.evaluate(&perturbed) {
                Ok(m) => m,
                Err(_) => continue,
            };
            let response = m
                .point
                .iter()
                .zip(&base.point)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0_f64, f64::max);
            let ratio = response / shift;
            if ratio > modulus {
                modulus = ratio;
                worst_witness = Some(json!({
                    "row": i,
                    "delta": shift,
                    "response": response,
                }));
            }
        }
        moduli.push(modulus);
    }
    // a jump shows up as a response that refuses to shrink with delta
    let max_modulus = moduli.iter().cloned().fold(0.0_f64, f64::max);
    let exploding = moduli
        .windows(2)
        .any(|w| w[1] > 10.0 * w[0].max(1.0) && w[1] * deltas[deltas.len() - 1] > 1e-3);
    let jump = *moduli.last().unwrap_or(&0.0) * deltas.last().unwrap_or(&1.0) > 1e-2;
    let failed = exploding || jump;
    Ok(AxiomReport {
        axiom: Axiom::C3,
        subject,
        verdict: if failed { Verdict::Fail } else { Verdict::Pass },
        residual: max_modulus,
        witness: if failed { worst_witness } else { None },
        detail: Some(if failed {
            "discontinuity detected".into()
        } else {
            "no discontinuity detected".into()
        }),
    })
}

/// C4: invariance under random row permutations.
pub fn check_symmetry(
    method: &MeanMethod,
    ds: &CompositionalDataset,
    trials: usize,
    seed: u64,
) -> Result<AxiomReport> {
    let subject = method.name().to_string();
    let base = match method.evaluate(ds) {
        Ok(m) => m,
        Err(e) => return Ok(inapplicable(Axiom::C4, subject, e.to_string())),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut residual = 0.0_f64;
    let mut witness = None;
    for _ in 0..trials {
        let mut order: Vec<usize> = (0..ds.len()).collect();
        order.shuffle(&mut rng);
        let rows: Vec<Composition> = order.iter().map(|&i| ds.rows()[i].clone()).collect();
        let permuted = CompositionalDataset::new(ds.sites().clone(), rows)?;
        let m = match method.evaluate(&permuted) {
            Ok(m) => m,
            Err(_) => continue,
        };
        let dev = m
            .point
            .iter()
            .zip(&base.point)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        if dev > residual {
            residual = dev;
            witness = Some(json!({ "permutation": order, "deviation": dev }));
        }
    }
    let pass = residual <= 1e-12;
    Ok(AxiomReport {
        axiom: Axiom::C4,
        subject,
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        residual,
        witness: if pass { None } else { witness },
        detail: None,
    })
}

/// Random interior dataset (all parts >= 0.01 before closure slack), for
/// fair comparison across log-ratio methods.
pub fn random_interior_dataset(
    rng: &mut ChaCha8Rng,
    n: usize,
    p: usize,
) -> Result<CompositionalDataset> {
    let rows = (0..n)
        .map(|_| {
            let v: Vec<f64> = (0..p).map(|_| 0.01 + rng.random::<f64>()).collect();
            closure(&v)
        })
        .collect::<Result<Vec<_>>>()?;
    CompositionalDataset::from_rows(rows)
}

/// A random grouping pair over q parts sharing the first block.
pub fn random_grouping_pair(rng: &mut ChaCha8Rng, q: usize) -> Result<(Grouping, Grouping)> {
    assert!(q >= 4, "need q >= 4 for two distinct groupings");
    // first block: a single random index
    let first = rng.random_range(0..q);
    let rest: Vec<usize> = (0..q).filter(|&i| i != first).collect();
    let make = |rng: &mut ChaCha8Rng| -> Vec<Vec<usize>> {
        // merge a random adjacent pair of the remaining indices
        let cut = rng.random_range(0..rest.len() - 1);
        let mut groups = vec![vec![first]];
        let mut i = 0;
        while i < rest.len() {
            if i == cut {
                groups.push(vec![rest[i], rest[i + 1]]);
                i += 2;
            } else {
                groups.push(vec![rest[i]]);
                i += 1;
            }
        }
        groups
    };
    let a = make(rng);
    let mut b = make(rng);
    // force the pair to differ so the check is informative
    for _ in 0..16 {
        if b != a {
            break;
        }
        b = make(rng);
    }
    Ok((Grouping::new(a, q)?, Grouping::new(b, q)?))
}

/// Specification for the proportional / LMC weight-equality sweeps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub seed: u64,
    pub trials: usize,
    pub tol: f64,
}

fn random_spd(rng: &mut ChaCha8Rng, p: usize) -> Vec<Vec<f64>> {
    let a: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..p).map(|_| rng.random::<f64>() - 0.5).collect())
        .collect();
    (0..p)
        .map(|i| {
            (0..p)
                .map(|j| {
                    let dot: f64 = (0..p).map(|k| a[i][k] * a[j][k]).sum();
                    dot + if i == j { 0.5 + rng.random::<f64>() } else { 0.0 }
                })
                .collect()
        })
        .collect()
}

fn random_family(rng: &mut ChaCha8Rng) -> CorrelationFamily {
    match rng.random_range(0..4u32) {
        0 => CorrelationFamily::Exponential,
        1 => CorrelationFamily::Gaussian,
        2 => CorrelationFamily::Spherical,
        _ => CorrelationFamily::Nugget,
    }
}

fn random_sites(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Result<SiteSet> {
    SiteSet::new(
        (0..n)
            .map(|_| (0..d).map(|_| rng.random::<f64>() * 10.0).collect())
            .collect(),
    )
}

/// Weight-equality sweep, forward direction: every random proportional config must
/// produce cokriging weights equal across variables and equal to the
/// single-variable GLS weights on the correlation matrix.
pub fn proportional_sweep(config: &SweepConfig) -> Result<Vec<AxiomReport>> {
    let mut reports = Vec::with_capacity(config.trials);
    for trial in 0..config.trials {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(trial as u64));
        let p = rng.random_range(2..=5);
        let n = rng.random_range(2..=10);
        let d = rng.random_range(1..=3);
        let family = random_family(&mut rng);
        // a nugget component keeps close random site pairs well conditioned,
        // which matters most for the gaussian family
        let nugget_fraction = match family {
            CorrelationFamily::Gaussian => 0.05 + rng.random::<f64>() * 0.25,
            _ if rng.random::<bool>() => rng.random::<f64>() * 0.3,
            _ => 0.0,
        };
        let rho = CorrelationFunction::new(
            family,
            0.5 + rng.random::<f64>() * 4.0,
            nugget_fraction,
        )?;
        let sigma = random_spd(&mut rng, p);
        let model = CovModel::proportional(sigma, rho.clone())?;
        let sites = random_sites(&mut rng, n, d)?;
        let sol = cokrige_means(&model, &sites)?;
        let (equal, dev) = weights_equal_across_variables(&sol, config.tol);
        let r = correlation_matrix(&rho, &sites)?;
        let (single, _, _) = krige_mean_single(&r)?;
        let shared = sol.own_weights(0);
        let gls_dev = (0..n)
            .map(|i| (shared[i] - single[i]).abs())
            .fold(0.0_f64, f64::max);
        let pass = equal && gls_dev <= 1e-10;
        reports.push(AxiomReport {
            axiom: Axiom::EqualWeightsForward,
            subject: format!("proportional/{}", rho.family.name()),
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            residual: dev.max(gls_dev),
            witness: if pass {
                None
            } else {
                Some(json!({ "trial": trial, "seed": config.seed, "p": p, "n": n, "d": d }))
            },
            detail: None,
        });
    }
    Ok(reports)
}

/// Result of the converse sweep over random separated-range LMC configs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConverseSweep {
    pub trials: usize,
    pub divergent: usize,
    pub fraction_divergent: f64,
    pub max_deviation: f64,
    pub max_deviation_witness: serde_json::Value,
    pub reports: Vec<AxiomReport>,
}

/// Weight-equality sweep, converse direction: random two-term LMCs with
/// well-separated ranges should essentially always produce unequal weights.
/// Reported, not asserted; the frozen witness carries the hard assertion.
pub fn lmc_converse_sweep(config: &SweepConfig) -> Result<ConverseSweep> {
    let mut divergent = 0usize;
    let mut max_dev = 0.0_f64;
    let mut max_witness = json!(null);
    let mut reports = Vec::with_capacity(config.trials);
    for trial in 0..config.trials {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(trial as u64));
        let p = rng.random_range(2..=4);
        let n = rng.random_range(3..=8);
        let short = 0.3 + rng.random::<f64>() * 0.4;
        let long = 4.0 + rng.random::<f64>() * 4.0;
        // two rank-balanced diagonal-dominant terms with swapped emphasis
        let mut s1 = vec![vec![0.0; p]; p];
        let mut s2 = vec![vec![0.0; p]; p];
        for k in 0..p {
            let w = rng.random::<f64>();
            s1[k][k] = 0.2 + 0.8 * w;
            s2[k][k] = 1.0 - 0.8 * w;
        }
        let model = CovModel::lmc(vec![
            LmcTerm {
                sigma: s1,
                rho: CorrelationFunction::exponential(short),
            },
            LmcTerm {
                sigma: s2,
                rho: CorrelationFunction::exponential(long),
            },
        ])?;
        let sites = random_sites(&mut rng, n, 1)?;
        let sol = cokrige_means(&model, &sites)?;
        let (_, dev) = weights_equal_across_variables(&sol, config.tol);
        let witness = json!({ "trial": trial, "seed": config.seed, "p": p, "n": n });
        if dev > 1e-6 {
            divergent += 1;
        }
        if dev > max_dev {
            max_dev = dev;
            max_witness = witness.clone();
        }
        reports.push(AxiomReport {
            axiom: Axiom::EqualWeightsConverse,
            subject: "lmc/separated-ranges".into(),
            verdict: if dev > 1e-6 {
                Verdict::WitnessFound
            } else {
                Verdict::Pass
            },
            residual: dev,
            witness: Some(witness),
            detail: None,
        });
    }
    Ok(ConverseSweep {
        trials: config.trials,
        divergent,
        fraction_divergent: divergent as f64 / config.trials.max(1) as f64,
        max_deviation: max_dev,
        max_deviation_witness: max_witness,
        reports,
    })
}

/// Numerical echo of the linearity characterization: a method passing C1
/// and C2 should be a fixed linear combination with component-independent
/// weights summing to one. Recovers the weights by exact interpolation on
/// probe datasets and verifies them on random ones.
pub fn arithmetic_linearity_probe(
    method: &MeanMethod,
    p: usize,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<AxiomReport> {
    let subject = method.name().to_string();
    assert!(p >= 3, "the probe is stated for p >= 3");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // precondition: C1 and C2 on a few random probes
    for _ in 0..5 {
        let x = random_interior_dataset(&mut rng, 1, p)?.rows()[0].clone();
        if !check_reflexivity(method, &x, n).passed() {
            return Ok(inapplicable(
                Axiom::EqualWeightsForward,
                subject,
                "method fails reflexivity; probe inapplicable".into(),
            ));
        }
    }
    let q = p + 1;
    let ga = Grouping::new(
        std::iter::once(vec![0])
            .chain((1..q - 2).map(|i| vec![i]))
            .chain(std::iter::once(vec![q - 2, q - 1]))
            .collect(),
        q,
    )?;
    let gb = Grouping::new(
        std::iter::once(vec![0])
            .chain(std::iter::once(vec![1, 2]))
            .chain((3..q).map(|i| vec![i]))
            .collect(),
        q,
    )?;
    for _ in 0..5 {
        let ds = random_interior_dataset(&mut rng, n, q)?;
        let report = check_marginal_stability(method, &ds, &ga, &gb)?;
        if !report.passed() {
            return Ok(AxiomReport {
                axiom: Axiom::EqualWeightsForward,
                subject,
                verdict: Verdict::Inapplicable,
                residual: report.residual,
                witness: report.witness,
                detail: Some("method fails marginal stability; probe inapplicable".into()),
            });
        }
    }

    // recover candidate weights per component from single-row perturbations
    // around the uniform dataset, then check linearity on random datasets
    let base_rows = vec![Composition::uniform(p); n];
    let base_ds = CompositionalDataset::from_rows(base_rows.clone())?;
    let base = method.evaluate(&base_ds)?;
    let eps = 1e-4;
    let mut lambda = vec![vec![0.0; n]; p];
    for i in 0..n {
        let mut rows = base_rows.clone();
        let mut parts = vec![1.0 / p as f64; p];
        parts[0] += eps;
        parts[p - 1] -= eps;
        rows[i] = Composition::new(parts)?;
        let m = method.evaluate(&CompositionalDataset::from_rows(rows)?)?;
        for (k, lam) in lambda.iter_mut().enumerate() {
            let dx = if k == 0 {
                eps
            } else if k == p - 1 {
                -eps
            } else {
                continue;
            };
            lam[i] = (m.point[k] - base.point[k]) / dx;
        }
        for k in 1..p - 1 {
            lambda[k][i] = lambda[0][i];
        }
    }
    // component independence of the recovered weights
    let mut weight_dev = 0.0_f64;
    let (first, rest) = lambda.split_first().expect("p >= 2");
    for lam in rest {
        for (a, b) in lam.iter().zip(first) {
            weight_dev = weight_dev.max((a - b).abs());
        }
    }
    let sum_dev = (lambda[0].iter().sum::<f64>() - 1.0).abs();

    // residual of the linear fit on random datasets
    let mut fit_residual = 0.0_f64;
    for _ in 0..trials {
        let ds = random_interior_dataset(&mut rng, n, p)?;
        let m = method.evaluate(&ds)?;
        for k in 0..p {
            let predicted: f64 = (0..n).map(|i| lambda[0][i] * ds.rows()[i].parts()[k]).sum();
            fit_residual = fit_residual.max((m.point[k] - predicted).abs());
        }
    }
    let residual = fit_residual.max(weight_dev.max(sum_dev));
    let pass = fit_residual <= 1e-8 && weight_dev <= 1e-8 && sum_dev <= 1e-8;
    Ok(AxiomReport {
        axiom: Axiom::EqualWeightsForward,
        subject,
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        residual,
        witness: if pass {
            None
        } else {
            Some(json!({ "recovered_weights": lambda[0], "seed": seed }))
        },
        detail: Some("linearity probe".into()),
    })
}

fn inapplicable(axiom: Axiom, subject: String, reason: String) -> AxiomReport {
    AxiomReport {
        axiom,
        subject,
        verdict: Verdict::Inapplicable,
        residual: f64::NAN,
        witness: None,
        detail: Some(reason),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::transforms::GeneratingFunction;
    use approx::assert_abs_diff_eq;

    fn arith() -> MeanMethod {
        MeanMethod::WeightedArithmetic { weights: None }
    }

    #[test]
    fn reflexivity_passes_for_standard_methods() {
        let x = Composition::new(vec![0.2, 0.5, 0.3]).unwrap();
        assert!(check_reflexivity(&arith(), &x, 4).passed());
        assert!(check_reflexivity(&MeanMethod::NormalizedGeometric, &x, 4).passed());
        assert!(check_reflexivity(&MeanMethod::GraphMedian, &x, 4).passed());
    }

    #[test]
    fn marginal_stability_arithmetic_passes_geometric_fails() {
        let ds = fixtures::c2_geometric_witness();
        let ga = Grouping::new(vec![vec![0], vec![1, 2], vec![3]], 4).unwrap();
        let gb = Grouping::new(vec![vec![0], vec![1], vec![2, 3]], 4).unwrap();
        let r = check_marginal_stability(&arith(), &ds, &ga, &gb).unwrap();
        assert!(r.passed());
        assert!(r.residual <= 1e-14);
        let r = check_marginal_stability(&MeanMethod::NormalizedGeometric, &ds, &ga, &gb).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        let w = r.witness.unwrap();
        let a = w["part1_mean_a"].as_f64().unwrap();
        let b = w["part1_mean_b"].as_f64().unwrap();
        assert_abs_diff_eq!(a, 0.2222, epsilon = 5e-4);
        assert_abs_diff_eq!(b, 0.2214, epsilon = 5e-4);
    }

    #[test]
    fn marginal_stability_reflexive_on_identical_rows() {
        let row = Composition::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let ds = CompositionalDataset::from_rows(vec![row.clone(), row]).unwrap();
        let ga = Grouping::new(vec![vec![0], vec![1, 2], vec![3]], 4).unwrap();
        let gb = Grouping::new(vec![vec![0], vec![1], vec![2, 3]], 4).unwrap();
        let r = check_marginal_stability(&MeanMethod::NormalizedGeometric, &ds, &ga, &gb).unwrap();
        assert!(r.passed());
    }

    #[test]
    fn continuity_linear_method_has_small_modulus() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ds = random_interior_dataset(&mut rng, 5, 3).unwrap();
        let deltas = [1e-3, 1e-4, 1e-5, 1e-6, 1e-7];
        let r = check_continuity(&arith(), &ds, &deltas).unwrap();
        assert!(r.passed());
        assert!(r.residual <= 0.2 + 1e-6); // max weight is 1/5
        let r = check_continuity(&MeanMethod::IlrMean { weights: None }, &ds, &deltas).unwrap();
        assert!(r.passed());
    }

    #[test]
    fn continuity_flags_graph_median_fixture() {
        let (base, _) = fixtures::graph_median_discontinuity_pair();
        let deltas = [1e-3, 1e-4, 1e-5, 1e-6];
        let r = check_continuity(&MeanMethod::GraphMedian, &base, &deltas).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.witness.is_some());
    }

    #[test]
    fn symmetry_checks() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ds = random_interior_dataset(&mut rng, 4, 3).unwrap();
        assert!(check_symmetry(&arith(), &ds, 20, 3).unwrap().passed());
        assert!(check_symmetry(&MeanMethod::NormalizedGeometric, &ds, 20, 3)
            .unwrap()
            .passed());
        let skew = MeanMethod::WeightedArithmetic {
            weights: Some(vec![0.9, 0.05, 0.03, 0.02]),
        };
        let r = check_symmetry(&skew, &ds, 20, 3).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.witness.is_some());
    }

    #[test]
    fn proportional_sweep_small() {
        let reports = proportional_sweep(&SweepConfig {
            seed: 7,
            trials: 25,
            tol: 1e-9,
        })
        .unwrap();
        assert!(reports.iter().all(|r| r.passed()));
    }

    #[test]
    fn lmc_sweep_small() {
        let sweep = lmc_converse_sweep(&SweepConfig {
            seed: 7,
            trials: 25,
            tol: 1e-9,
        })
        .unwrap();
        assert!(sweep.fraction_divergent >= 0.9, "{}", sweep.fraction_divergent);
    }

    #[test]
    fn linearity_probe_recovers_arithmetic_weights() {
        let method = MeanMethod::WeightedArithmetic {
            weights: Some(vec![0.5, 0.3, 0.2]),
        };
        let r = arithmetic_linearity_probe(&method, 3, 3, 20, 9).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn linearity_probe_rejects_geometric_via_c2() {
        let r = arithmetic_linearity_probe(&MeanMethod::NormalizedGeometric, 3, 3, 20, 9).unwrap();
        assert_eq!(r.verdict, Verdict::Inapplicable);
        let r = arithmetic_linearity_probe(&MeanMethod::IlrMean { weights: None }, 3, 3, 20, 9)
            .unwrap();
        assert_eq!(r.verdict, Verdict::Inapplicable);
    }

    #[test]
    fn p2_symmetric_sine_family_passes() {
        let phi = GeneratingFunction::symmetric_sine(0.1).unwrap();
        let method = MeanMethod::QuasiArithmeticComponentwise {
            phi,
            weights: None,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let ds = random_interior_dataset(&mut rng, 4, 2).unwrap();
            let m = method.evaluate(&ds).unwrap();
            assert_abs_diff_eq!(m.sum(), 1.0, epsilon = 1e-10);
        }
        let x = Composition::new(vec![0.4, 0.6]).unwrap();
        assert!(check_reflexivity(&method, &x, 4).passed());
    }
}
