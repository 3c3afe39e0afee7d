//! Core compositional types: closed-simplex points, sites, datasets and
//! amalgamation (grouping of parts).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on the sum-to-one constraint.
pub const SUM_TOL: f64 = 1e-12;
/// Constructors re-normalize inputs whose sum deviates by at most this much.
pub const RENORM_TOL: f64 = 1e-9;

/// A point of the closed simplex: `p >= 2` nonnegative parts summing to one.
///
/// Zero parts are allowed; operations that need strict positivity reject
/// them explicitly instead of perturbing the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Composition {
    parts: Vec<f64>,
}

impl Composition {
    pub fn new(parts: Vec<f64>) -> Result<Self> {
        if parts.len() < 2 {
            return Err(Error::InvalidComposition(format!(
                "need at least 2 parts, got {}",
                parts.len()
            )));
        }
        if let Some(k) = parts.iter().position(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidComposition(format!(
                "part {} is {} (must be finite and >= 0)",
                k, parts[k]
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() <= SUM_TOL {
            return Ok(Self { parts });
        }
        if (sum - 1.0).abs() <= RENORM_TOL {
            let parts = parts.iter().map(|v| v / sum).collect();
            return Ok(Self { parts });
        }
        Err(Error::InvalidComposition(format!(
            "parts sum to {sum}, deviation from 1 exceeds {RENORM_TOL}"
        )))
    }

    /// Uniform composition (1/p, ..., 1/p).
    pub fn uniform(p: usize) -> Self {
        Self {
            parts: vec![1.0 / p as f64; p],
        }
    }

    pub fn parts(&self) -> &[f64] {
        &self.parts
    }

    pub fn part_count(&self) -> usize {
        self.parts.len()
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.parts.iter().all(|&v| v > 0.0)
    }

    /// Index of the first zero part, if any.
    pub fn first_zero(&self) -> Option<usize> {
        self.parts.iter().position(|&v| v == 0.0)
    }
}

/// A real vector summing to one; components may be negative.
///
/// This is the codomain of unconstrained means: estimates with negative
/// weights can leave the simplex but always stay on this hyperplane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealSimplexPoint {
    parts: Vec<f64>,
}

impl RealSimplexPoint {
    pub fn new(parts: Vec<f64>) -> Result<Self> {
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > RENORM_TOL {
            return Err(Error::InvalidComposition(format!(
                "parts sum to {sum}, not 1"
            )));
        }
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[f64] {
        &self.parts
    }

    pub fn part_count(&self) -> usize {
        self.parts.len()
    }

    /// True when every part lies in [-tol, 1 + tol].
    pub fn in_simplex(&self, tol: f64) -> bool {
        self.parts.iter().all(|&v| v >= -tol && v <= 1.0 + tol)
    }

    /// Convert to a `Composition`, clamping parts within `tol` of the
    /// boundary to it; fails if any part is outside [-tol, 1 + tol].
    pub fn into_composition(self, tol: f64) -> Result<Composition> {
        if !self.in_simplex(tol) {
            return Err(Error::InvalidComposition(
                "point lies outside the closed simplex".into(),
            ));
        }
        let parts = self.parts.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        Composition::new(parts)
    }
}

impl From<Composition> for RealSimplexPoint {
    fn from(c: Composition) -> Self {
        Self { parts: c.parts }
    }
}

/// Sampling sites in R^d. Sites must be pairwise distinct so that the
/// induced covariance matrices are invertible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteSet {
    sites: Vec<Vec<f64>>,
}

impl SiteSet {
    pub fn new(sites: Vec<Vec<f64>>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidSites("no sites".into()));
        }
        let d = sites[0].len();
        if d == 0 {
            return Err(Error::InvalidSites("zero-dimensional sites".into()));
        }
        if sites.iter().any(|s| s.len() != d) {
            return Err(Error::InvalidSites("inconsistent site dimensions".into()));
        }
        for i in 0..sites.len() {
            for j in (i + 1)..sites.len() {
                if sites[i] == sites[j] {
                    return Err(Error::InvalidSites(format!(
                        "sites {i} and {j} are identical"
                    )));
                }
            }
        }
        Ok(Self { sites })
    }

    /// Evenly spaced sites 0, spacing, 2*spacing, ... on a line.
    pub fn line(coords: &[f64]) -> Result<Self> {
        Self::new(coords.iter().map(|&x| vec![x]).collect())
    }

    pub fn sites(&self) -> &[Vec<f64>] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.sites[0].len()
    }

    /// Lag vector s_j - s_i.
    pub fn lag(&self, i: usize, j: usize) -> Vec<f64> {
        self.sites[j]
            .iter()
            .zip(&self.sites[i])
            .map(|(a, b)| a - b)
            .collect()
    }
}

/// n compositions with a common part count, one per sampling site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionalDataset {
    sites: SiteSet,
    rows: Vec<Composition>,
}

impl CompositionalDataset {
    pub fn new(sites: SiteSet, rows: Vec<Composition>) -> Result<Self> {
        if rows.len() != sites.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} rows but {} sites",
                rows.len(),
                sites.len()
            )));
        }
        let p = rows[0].part_count();
        if rows.iter().any(|r| r.part_count() != p) {
            return Err(Error::DimensionMismatch(
                "rows have differing part counts".into(),
            ));
        }
        Ok(Self { sites, rows })
    }

    /// Dataset with unit-interval dummy sites, for purely compositional work.
    pub fn from_rows(rows: Vec<Composition>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let sites = SiteSet::new((0..rows.len()).map(|i| vec![i as f64]).collect())?;
        Self::new(sites, rows)
    }

    pub fn sites(&self) -> &SiteSet {
        &self.sites
    }

    pub fn rows(&self) -> &[Composition] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn part_count(&self) -> usize {
        self.rows[0].part_count()
    }

    /// Values of part `k` across the sample, in row order.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.parts()[k]).collect()
    }

    pub fn all_strictly_positive(&self) -> bool {
        self.rows.iter().all(|r| r.is_strictly_positive())
    }
}

/// An ordered partition of {0,...,q-1} into nonempty blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grouping {
    groups: Vec<Vec<usize>>,
    q: usize,
}

impl Grouping {
    pub fn new(groups: Vec<Vec<usize>>, q: usize) -> Result<Self> {
        let mut seen = vec![false; q];
        for g in &groups {
            if g.is_empty() {
                return Err(Error::InvalidGrouping("empty block".into()));
            }
            for &i in g {
                if i >= q {
                    return Err(Error::InvalidGrouping(format!(
                        "index {i} out of range for q = {q}"
                    )));
                }
                if seen[i] {
                    return Err(Error::InvalidGrouping(format!("index {i} repeated")));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::InvalidGrouping("blocks do not cover {0..q}".into()));
        }
        Ok(Self { groups, q })
    }

    /// The identity grouping {0},...,{q-1}.
    pub fn identity(q: usize) -> Self {
        Self {
            groups: (0..q).map(|i| vec![i]).collect(),
            q,
        }
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn source_len(&self) -> usize {
        self.q
    }

    pub fn block_count(&self) -> usize {
        self.groups.len()
    }
}

/// closure(v) = v / sum(v): projection of a nonnegative vector onto the simplex.
pub fn closure(v: &[f64]) -> Result<Composition> {
    if v.len() < 2 {
        return Err(Error::InvalidComposition("need at least 2 parts".into()));
    }
    if let Some(k) = v.iter().position(|&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::InvalidComposition(format!(
            "entry {} is {} (must be finite and >= 0)",
            k, v[k]
        )));
    }
    let sum: f64 = v.iter().sum();
    if sum <= 0.0 {
        return Err(Error::InvalidComposition("all entries are zero".into()));
    }
    Composition::new(v.iter().map(|x| x / sum).collect())
}

/// Half-taxi metric d(x, y) = 0.5 * sum_k |x^k - y^k|.
pub fn half_taxi_distance(x: &Composition, y: &Composition) -> Result<f64> {
    if x.part_count() != y.part_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {} parts",
            x.part_count(),
            y.part_count()
        )));
    }
    Ok(0.5
        * x.parts()
            .iter()
            .zip(y.parts())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>())
}

fn log_geometric_mean(parts: &[f64]) -> f64 {
    parts.iter().map(|v| v.ln()).sum::<f64>() / parts.len() as f64
}

fn require_positive(x: &Composition) -> Result<()> {
    if let Some(index) = x.first_zero() {
        return Err(Error::ZeroPart { index });
    }
    Ok(())
}

/// Aitchison inner product, computed in its clr form
/// `sum_k ln(x_k / g(x)) ln(y_k / g(y))`.
pub fn aitchison_inner(x: &Composition, y: &Composition) -> Result<f64> {
    if x.part_count() != y.part_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {} parts",
            x.part_count(),
            y.part_count()
        )));
    }
    require_positive(x)?;
    require_positive(y)?;
    let gx = log_geometric_mean(x.parts());
    let gy = log_geometric_mean(y.parts());
    Ok(x.parts()
        .iter()
        .zip(y.parts())
        .map(|(&a, &b)| (a.ln() - gx) * (b.ln() - gy))
        .sum())
}

/// Aitchison inner product via the pairwise log-ratio double sum
/// `(1/p) sum_{i<j} ln(x_i/x_j) ln(y_i/y_j)`. Algebraically equal to
/// [`aitchison_inner`]; kept as an independent route for cross-checking.
pub fn aitchison_inner_pairwise(x: &Composition, y: &Composition) -> Result<f64> {
    if x.part_count() != y.part_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} vs {} parts",
            x.part_count(),
            y.part_count()
        )));
    }
    require_positive(x)?;
    require_positive(y)?;
    let p = x.part_count();
    let mut acc = 0.0;
    for i in 0..p {
        for j in (i + 1)..p {
            acc += (x.parts()[i] / x.parts()[j]).ln() * (y.parts()[i] / y.parts()[j]).ln();
        }
    }
    Ok(acc / p as f64)
}

/// Sum parts within each block of `g`, keeping sites unchanged.
pub fn amalgamate(ds: &CompositionalDataset, g: &Grouping) -> Result<CompositionalDataset> {
    if g.source_len() != ds.part_count() {
        return Err(Error::InvalidGrouping(format!(
            "grouping over {} parts applied to {}-part dataset",
            g.source_len(),
            ds.part_count()
        )));
    }
    let rows = ds
        .rows()
        .iter()
        .map(|r| {
            let parts: Vec<f64> = g
                .groups()
                .iter()
                .map(|block| block.iter().map(|&i| r.parts()[i]).sum())
                .collect();
            Composition::new(parts)
        })
        .collect::<Result<Vec<_>>>()?;
    CompositionalDataset::new(ds.sites().clone(), rows)
}

/// Amalgamate a single composition.
pub fn amalgamate_one(x: &Composition, g: &Grouping) -> Result<Composition> {
    if g.source_len() != x.part_count() {
        return Err(Error::InvalidGrouping(format!(
            "grouping over {} parts applied to {}-part composition",
            g.source_len(),
            x.part_count()
        )));
    }
    let parts: Vec<f64> = g
        .groups()
        .iter()
        .map(|block| block.iter().map(|&i| x.parts()[i]).sum())
        .collect();
    Composition::new(parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn comp(parts: &[f64]) -> Composition {
        Composition::new(parts.to_vec()).unwrap()
    }

    #[test]
    fn closure_normalizes() {
        let c = closure(&[2.0, 2.0, 4.0]).unwrap();
        assert_eq!(c.parts(), &[0.25, 0.25, 0.5]);
    }

    #[test]
    fn closure_identity_on_closed_input() {
        let c = closure(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(c.parts(), &[1.0, 0.0, 0.0]);
        let c = closure(&[0.3, 0.3, 0.4]).unwrap();
        assert_eq!(c.parts(), &[0.3, 0.3, 0.4]);
    }

    #[test]
    fn closure_rejects_bad_input() {
        assert!(closure(&[0.0, 0.0]).is_err());
        assert!(closure(&[1.0, -0.5]).is_err());
        assert!(closure(&[1.0]).is_err());
    }

    #[test]
    fn closure_idempotent() {
        let v = [0.123, 4.56, 0.0789, 2.0];
        let once = closure(&v).unwrap();
        let twice = closure(once.parts()).unwrap();
        for (a, b) in once.parts().iter().zip(twice.parts()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn composition_renormalizes_small_deviation() {
        let c = Composition::new(vec![0.5, 0.5 + 3e-10]).unwrap();
        assert_abs_diff_eq!(c.parts().iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert!(Composition::new(vec![0.5, 0.6]).is_err());
    }

    #[test]
    fn half_taxi_basic() {
        let x = comp(&[0.6, 0.3, 0.1]);
        let y = comp(&[0.3, 0.3, 0.4]);
        assert_eq!(half_taxi_distance(&x, &x).unwrap(), 0.0);
        assert_abs_diff_eq!(half_taxi_distance(&x, &y).unwrap(), 0.3, epsilon = 1e-15);
        let e1 = comp(&[1.0, 0.0, 0.0]);
        let e2 = comp(&[0.0, 1.0, 0.0]);
        assert_abs_diff_eq!(half_taxi_distance(&e1, &e2).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn aitchison_inner_uniform_is_zero() {
        let u = Composition::uniform(4);
        let y = comp(&[0.1, 0.2, 0.3, 0.4]);
        assert_abs_diff_eq!(aitchison_inner(&u, &y).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn aitchison_inner_forms_agree() {
        let x = comp(&[0.6, 0.3, 0.1]);
        let y = comp(&[0.3, 0.3, 0.4]);
        let a = aitchison_inner(&x, &y).unwrap();
        let b = aitchison_inner_pairwise(&x, &y).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        assert!(aitchison_inner(&x, &x).unwrap() >= 0.0);
    }

    #[test]
    fn aitchison_inner_rejects_zero_parts() {
        let x = comp(&[1.0, 0.0, 0.0]);
        let y = comp(&[0.3, 0.3, 0.4]);
        assert!(matches!(
            aitchison_inner(&x, &y),
            Err(Error::ZeroPart { index: 1 })
        ));
    }

    #[test]
    fn amalgamate_sums_blocks() {
        let ds = CompositionalDataset::from_rows(vec![comp(&[0.1, 0.2, 0.3, 0.4])]).unwrap();
        let g = Grouping::new(vec![vec![0], vec![1, 2], vec![3]], 4).unwrap();
        let out = amalgamate(&ds, &g).unwrap();
        assert_eq!(out.rows()[0].parts(), &[0.1, 0.5, 0.4]);
        let g = Grouping::new(vec![vec![0], vec![1], vec![2, 3]], 4).unwrap();
        let out = amalgamate(&ds, &g).unwrap();
        assert_eq!(out.rows()[0].parts(), &[0.1, 0.2, 0.7]);
    }

    #[test]
    fn amalgamate_identity_grouping() {
        let ds = CompositionalDataset::from_rows(vec![
            comp(&[0.1, 0.2, 0.3, 0.4]),
            comp(&[0.4, 0.3, 0.2, 0.1]),
        ])
        .unwrap();
        let out = amalgamate(&ds, &Grouping::identity(4)).unwrap();
        assert_eq!(out, ds);
    }

    #[test]
    fn grouping_validation() {
        assert!(Grouping::new(vec![vec![0], vec![1]], 3).is_err());
        assert!(Grouping::new(vec![vec![0, 1], vec![1, 2]], 3).is_err());
        assert!(Grouping::new(vec![vec![0], vec![]], 1).is_err());
    }

    #[test]
    fn sites_must_be_distinct() {
        assert!(SiteSet::new(vec![vec![0.0], vec![0.0]]).is_err());
        assert!(SiteSet::new(vec![vec![0.0], vec![1.0]]).is_ok());
    }
}
