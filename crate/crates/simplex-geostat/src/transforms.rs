//! Isometric log-ratio transform and quasi-arithmetic (Kolmogorov) means.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::Composition;

/// Coordinates of a composition under the ilr map; length p-1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IlrCoordinates {
    coords: Vec<f64>,
}

impl IlrCoordinates {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

/// ilr(x): u^i = [i(i+1)]^{-1/2} ln( x^1 ... x^i / (x^{i+1})^i ),
/// for i = 1, ..., p-1.
pub fn ilr(x: &Composition) -> Result<IlrCoordinates> {
    if let Some(index) = x.first_zero() {
        return Err(Error::ZeroPart { index });
    }
    let p = x.part_count();
    let logs: Vec<f64> = x.parts().iter().map(|v| v.ln()).collect();
    let mut coords = Vec::with_capacity(p - 1);
    let mut prefix = 0.0;
    for i in 1..p {
        prefix += logs[i - 1];
        let norm = (i as f64 * (i + 1) as f64).sqrt();
        coords.push((prefix - i as f64 * logs[i]) / norm);
    }
    Ok(IlrCoordinates::new(coords))
}

/// Inverse of [`ilr`]: recovers the unique strictly positive composition
/// with the given coordinates.
pub fn ilr_inv(u: &IlrCoordinates, p: usize) -> Result<Composition> {
    if u.len() + 1 != p {
        return Err(Error::DimensionMismatch(format!(
            "{} coordinates for p = {p}",
            u.len()
        )));
    }
    // Solve for log-parts up to an additive constant: with L_1 = 0 and
    // S_i = L_1 + ... + L_i, coordinate i gives S_i - i L_{i+1}.
    let mut logs = vec![0.0_f64; p];
    let mut prefix = 0.0;
    for (i, log) in logs.iter_mut().enumerate().skip(1) {
        let t = u.coords()[i - 1] * (i as f64 * (i + 1) as f64).sqrt();
        *log = (prefix - t) / i as f64;
        prefix += *log;
    }
    // Exponentiate against the max log for overflow safety, then close.
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logs.iter().map(|&l| (l - m).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Composition::new(exps.iter().map(|&e| e / sum).collect())
}

/// A strictly monotone continuous generating function for quasi-arithmetic
/// means, together with its domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratingFunction {
    /// phi(t) = t on all of R; the arithmetic mean.
    Identity,
    /// phi(t) = ln t on (0, inf); the geometric mean.
    Log,
    /// phi(t) = 1/t on (0, inf); the harmonic mean.
    Reciprocal,
    /// phi(t) = t^alpha, alpha != 0; the power mean.
    Power { alpha: f64 },
    /// phi(t) = t + a sin(2 pi t) on [0, 1], |a| < 1/(2 pi).
    ///
    /// Satisfies phi(t) = 1 - phi(1-t) with phi(0) = 0, phi(1) = 1, the
    /// symmetry that makes two-part componentwise means sum to one.
    SymmetricSine { a: f64 },
}

impl GeneratingFunction {
    pub fn symmetric_sine(a: f64) -> Result<Self> {
        if a.abs() >= 1.0 / (2.0 * std::f64::consts::PI) {
            return Err(Error::InvalidWeights(format!(
                "symmetric-sine amplitude {a} must satisfy |a| < 1/(2*pi)"
            )));
        }
        Ok(Self::SymmetricSine { a })
    }

    pub fn power(alpha: f64) -> Result<Self> {
        if alpha == 0.0 {
            return Err(Error::InvalidWeights("power exponent must be nonzero".into()));
        }
        Ok(Self::Power { alpha })
    }

    pub fn name(&self) -> String {
        match self {
            Self::Identity => "identity".into(),
            Self::Log => "log".into(),
            Self::Reciprocal => "reciprocal".into(),
            Self::Power { alpha } => format!("power({alpha})"),
            Self::SymmetricSine { a } => format!("symmetric-sine({a})"),
        }
    }

    fn in_domain(&self, t: f64) -> bool {
        match self {
            Self::Identity => t.is_finite(),
            Self::Log | Self::Reciprocal => t > 0.0,
            Self::Power { alpha } => {
                if *alpha < 0.0 {
                    t > 0.0
                } else {
                    t >= 0.0
                }
            }
            Self::SymmetricSine { .. } => (0.0..=1.0).contains(&t),
        }
    }

    pub fn apply(&self, t: f64) -> Result<f64> {
        if !self.in_domain(t) {
            return Err(Error::OutOfDomain {
                phi: self.name(),
                value: t,
            });
        }
        Ok(match self {
            Self::Identity => t,
            Self::Log => t.ln(),
            Self::Reciprocal => 1.0 / t,
            Self::Power { alpha } => t.powf(*alpha),
            Self::SymmetricSine { a } => t + a * (2.0 * std::f64::consts::PI * t).sin(),
        })
    }

    pub fn invert(&self, y: f64) -> Result<f64> {
        match self {
            Self::Identity => Ok(y),
            Self::Log => Ok(y.exp()),
            Self::Reciprocal => {
                if y <= 0.0 {
                    return Err(Error::OutOfRange {
                        phi: self.name(),
                        value: y,
                    });
                }
                Ok(1.0 / y)
            }
            Self::Power { alpha } => {
                if y < 0.0 || (y == 0.0 && *alpha < 0.0) {
                    return Err(Error::OutOfRange {
                        phi: self.name(),
                        value: y,
                    });
                }
                Ok(y.powf(1.0 / alpha))
            }
            Self::SymmetricSine { .. } => {
                // phi maps [0,1] onto [0,1] monotonically; no closed-form
                // inverse, so bisect with Newton refinement.
                if !(0.0..=1.0).contains(&y) {
                    return Err(Error::OutOfRange {
                        phi: self.name(),
                        value: y,
                    });
                }
                Ok(self.invert_by_bisection(y))
            }
        }
    }

    fn invert_by_bisection(&self, y: f64) -> f64 {
        let a = match self {
            Self::SymmetricSine { a } => *a,
            _ => unreachable!(),
        };
        let two_pi = 2.0 * std::f64::consts::PI;
        let f = |t: f64| t + a * (two_pi * t).sin() - y;
        let df = |t: f64| 1.0 + a * two_pi * (two_pi * t).cos();
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let mut t = y.clamp(0.0, 1.0);
        for _ in 0..200 {
            let ft = f(t);
            if ft.abs() <= 1e-15 {
                break;
            }
            if ft > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let newton = t - ft / df(t);
            t = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 1e-16 {
                break;
            }
        }
        t
    }
}

/// Validate that weights sum to one within `SUM_TOL`.
pub fn check_weights(weights: &[f64], n: usize) -> Result<()> {
    if weights.len() != n {
        return Err(Error::InvalidWeights(format!(
            "{} weights for {} values",
            weights.len(),
            n
        )));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > crate::simplex::SUM_TOL {
        return Err(Error::InvalidWeights(format!(
            "weights sum to {sum}, not 1"
        )));
    }
    Ok(())
}

/// Weighted quasi-arithmetic mean phi^{-1}( sum_i lambda_i phi(x_i) ).
pub fn quasi_arithmetic_mean(
    values: &[f64],
    weights: &[f64],
    phi: &GeneratingFunction,
) -> Result<f64> {
    check_weights(weights, values.len())?;
    let mut acc = 0.0;
    for (&v, &w) in values.iter().zip(weights) {
        acc += w * phi.apply(v)?;
    }
    phi.invert(acc)
}
