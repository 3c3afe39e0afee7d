//! Seeded generation of synthetic site configurations and compositional
//! datasets. Identical specs produce bitwise-identical output.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::covariance::{build_block_matrix, CovModel};
use crate::error::{Error, Result};
use crate::simplex::{closure, Composition, CompositionalDataset, SiteSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "kebab-case")]
pub enum SiteScheme {
    /// i.i.d. uniform sites in [0, extent]^d.
    UniformBox { extent: f64 },
    /// Regular grid along the first axis (d = 1) or a square-ish grid.
    Grid { spacing: f64 },
    /// Uniform sites, with sites 0 and 1 forced to distance `pair_gap`.
    Clustered { pair_gap: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "kebab-case")]
pub enum DataScheme {
    /// i.i.d. symmetric Dirichlet rows (normalized unit-rate gamma draws).
    Dirichlet { concentration: f64 },
    /// Sample the np-variate normal via Cholesky of the block covariance
    /// matrix, then map each site's p-vector to the simplex by closure of
    /// componentwise exponentials.
    GaussianField { model: CovModel },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub seed: u64,
    pub n: usize,
    pub p: usize,
    pub d: usize,
    pub site_scheme: SiteScheme,
    pub data_scheme: DataScheme,
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Deterministic site generation; streams are split from the seed so site
/// and data draws never interleave.
pub fn gen_sites(spec: &GeneratorSpec) -> Result<SiteSet> {
    if spec.n == 0 || spec.d == 0 {
        return Err(Error::InvalidSites("need n >= 1 and d >= 1".into()));
    }
    let mut rng = rng_for(spec.seed, 0);
    let sites: Vec<Vec<f64>> = match &spec.site_scheme {
        SiteScheme::UniformBox { extent } => (0..spec.n)
            .map(|_| (0..spec.d).map(|_| rng.random::<f64>() * extent).collect())
            .collect(),
        SiteScheme::Grid { spacing } => {
            if *spacing <= 0.0 {
                return Err(Error::InvalidSites(format!(
                    "grid spacing {spacing} must be > 0"
                )));
            }
            (0..spec.n)
                .map(|i| {
                    let mut s = vec![0.0; spec.d];
                    s[0] = i as f64 * spacing;
                    s
                })
                .collect()
        }
        SiteScheme::Clustered { pair_gap } => {
            let extent = 10.0_f64.max(*pair_gap * 4.0);
            let mut sites: Vec<Vec<f64>> = (0..spec.n)
                .map(|_| (0..spec.d).map(|_| rng.random::<f64>() * extent).collect())
                .collect();
            if spec.n >= 2 {
                // place site 1 at exactly pair_gap from site 0
                let mut dir = vec![0.0; spec.d];
                dir[0] = 1.0;
                sites[1] = sites[0]
                    .iter()
                    .zip(&dir)
                    .map(|(a, b)| a + b * pair_gap)
                    .collect();
            }
            sites
        }
    };
    SiteSet::new(sites)
}

/// Generate a compositional dataset over the given sites.
pub fn gen_compositions(spec: &GeneratorSpec, sites: &SiteSet) -> Result<CompositionalDataset> {
    let mut rng = rng_for(spec.seed, 1);
    let rows: Vec<Composition> = match &spec.data_scheme {
        DataScheme::Dirichlet { concentration } => {
            if *concentration <= 0.0 {
                return Err(Error::InvalidModel(format!(
                    "dirichlet concentration {concentration} must be > 0"
                )));
            }
            let gamma = Gamma::new(*concentration, 1.0)
                .map_err(|e| Error::InvalidModel(e.to_string()))?;
            (0..sites.len())
                .map(|_| {
                    let draws: Vec<f64> =
                        (0..spec.p).map(|_| gamma.sample(&mut rng)).collect();
                    closure(&draws)
                })
                .collect::<Result<Vec<_>>>()?
        }
        DataScheme::GaussianField { model } => {
            let field = sample_gaussian_field(model, sites, &mut rng)?;
            let n = sites.len();
            let p = model.part_count();
            (0..n)
                .map(|i| {
                    // variable-major field vector: entry k*n + i is part k at site i
                    let exps: Vec<f64> =
                        (0..p).map(|k| field[k * n + i].exp()).collect();
                    closure(&exps)
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    CompositionalDataset::new(sites.clone(), rows)
}

/// One draw of the np-variate centered normal with the model's block
/// covariance, via Cholesky.
pub fn sample_gaussian_field(
    model: &CovModel,
    sites: &SiteSet,
    rng: &mut impl Rng,
) -> Result<DVector<f64>> {
    let block = build_block_matrix(model, sites)?;
    let chol = block
        .matrix()
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidModel("block covariance is not positive definite".into()))?;
    let dim = block.matrix().nrows();
    let z = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    Ok(chol.l() * z)
}

/// Empirical covariance of `reps` Gaussian-field draws; Monte-Carlo oracle
/// for the Cholesky sampler.
pub fn empirical_field_covariance(
    model: &CovModel,
    sites: &SiteSet,
    reps: usize,
    seed: u64,
) -> Result<DMatrix<f64>> {
    let mut rng = rng_for(seed, 2);
    let dim = sites.len() * model.part_count();
    let mut acc = DMatrix::zeros(dim, dim);
    for _ in 0..reps {
        let x = sample_gaussian_field(model, sites, &mut rng)?;
        acc += &x * x.transpose();
    }
    Ok(acc / reps as f64)
}
