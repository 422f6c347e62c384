//! Synthetic two-sample problems. Every generator returns `2n` points per
//! sample, i.e. `n` tuples for the linear-time estimate.

use super::mnist::MnistPool;
use crate::error::{Error, Result};
use crate::kernels::Sample;
use crate::numerics::RngStream;
use rand::Rng;
use rand_distr::StandardNormal;
use std::sync::Arc;

pub const DIFF_VAR_VARIANCE: f64 = 1.5;
/// Mixture offset of the matched-moment dataset; `σ₀² = 1 − μ₀²`.
pub const SYMMETRIC_MU0: f64 = 0.98;

const BLOB_VAR_P: [f64; 2] = [0.1, 0.3];
const BLOB_VAR_Q: [f64; 2] = [0.3, 0.1];

#[derive(Debug, Clone)]
pub enum DatasetKind {
    /// `N(0, 1)` against `N(0, variance)`.
    DiffVar { variance: f64 },
    /// Gaussians centered on the grid `{0,1,2}²` with transposed covariances.
    Blobs,
    /// All digits against odd digits, drawn with replacement.
    MnistAllVsOdd(Arc<MnistPool>),
    /// `Uniform(−√3, √3)` against `½N(−μ₀, σ₀²) + ½N(μ₀, σ₀²)`.
    SymmetricMatched { mu0: f64 },
    /// Resampling with replacement from two fixed point sets.
    CustomFiles { x: Arc<Sample>, y: Arc<Sample> },
}

#[derive(Debug, Clone)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    /// Draw both samples from `P`.
    pub null_mode: bool,
}

impl DatasetSpec {
    pub fn new(kind: DatasetKind, null_mode: bool) -> Result<Self> {
        let spec = DatasetSpec { kind, null_mode };
        spec.validate()?;
        Ok(spec)
    }

    pub fn diff_var(null_mode: bool) -> Self {
        DatasetSpec {
            kind: DatasetKind::DiffVar {
                variance: DIFF_VAR_VARIANCE,
            },
            null_mode,
        }
    }

    pub fn blobs(null_mode: bool) -> Self {
        DatasetSpec {
            kind: DatasetKind::Blobs,
            null_mode,
        }
    }

    pub fn symmetric_matched(null_mode: bool) -> Self {
        DatasetSpec {
            kind: DatasetKind::SymmetricMatched { mu0: SYMMETRIC_MU0 },
            null_mode,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            DatasetKind::DiffVar { .. } => "diff_var",
            DatasetKind::Blobs => "blobs",
            DatasetKind::MnistAllVsOdd(_) => "mnist_all_vs_odd",
            DatasetKind::SymmetricMatched { .. } => "symmetric_matched_moments",
            DatasetKind::CustomFiles { .. } => "custom_files",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            DatasetKind::DiffVar { variance } => {
                if !(*variance > 0.0 && variance.is_finite()) {
                    return Err(Error::domain(format!("variance must be positive, got {variance}")));
                }
            }
            DatasetKind::SymmetricMatched { mu0 } => {
                if !(*mu0 >= 0.0 && *mu0 < 1.0) {
                    return Err(Error::domain(format!("mu0 must lie in [0, 1), got {mu0}")));
                }
            }
            DatasetKind::MnistAllVsOdd(pool) => pool.check_usable()?,
            DatasetKind::CustomFiles { x, y } => {
                if x.is_empty() || y.is_empty() {
                    return Err(Error::domain("custom samples must be nonempty"));
                }
                if x.dim() != y.dim() {
                    return Err(Error::DimensionMismatch(x.dim(), y.dim()));
                }
            }
            DatasetKind::Blobs => {}
        }
        Ok(())
    }

    /// Draws `2n` points from each distribution.
    pub fn generate<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<(Sample, Sample)> {
        if n < 2 {
            return Err(Error::domain(format!("sample size must be at least 2, got {n}")));
        }
        let m = 2 * n;
        let null = self.null_mode;
        match &self.kind {
            DatasetKind::DiffVar { variance } => {
                let x = normal_points(rng, m, 1.0);
                let y = normal_points(rng, m, if null { 1.0 } else { *variance });
                Ok((Sample::from_scalars(&x), Sample::from_scalars(&y)))
            }
            DatasetKind::Blobs => {
                let x = blob_points(rng, m, BLOB_VAR_P);
                let y = blob_points(rng, m, if null { BLOB_VAR_P } else { BLOB_VAR_Q });
                Ok((Sample::new(2, x)?, Sample::new(2, y)?))
            }
            DatasetKind::SymmetricMatched { mu0 } => {
                let x: Vec<f64> = (0..m)
                    .map(|_| 3f64.sqrt() * (2.0 * rng.random::<f64>() - 1.0))
                    .collect();
                let y = if null {
                    (0..m)
                        .map(|_| 3f64.sqrt() * (2.0 * rng.random::<f64>() - 1.0))
                        .collect()
                } else {
                    mixture_points(rng, m, *mu0)
                };
                Ok((Sample::from_scalars(&x), Sample::from_scalars(&y)))
            }
            DatasetKind::MnistAllVsOdd(pool) => pool.draw_pair(n, null, rng),
            DatasetKind::CustomFiles { x, y } => {
                if null {
                    // Both samples from the pooled points.
                    let total = x.len() + y.len();
                    let pick = |rng: &mut R| {
                        let mut out = Vec::with_capacity(m * x.dim());
                        for _ in 0..m {
                            let i = rng.random_range(0..total);
                            let p = if i < x.len() { x.point(i) } else { y.point(i - x.len()) };
                            out.extend_from_slice(p);
                        }
                        out
                    };
                    let a = pick(rng);
                    let b = pick(rng);
                    Ok((Sample::new(x.dim(), a)?, Sample::new(x.dim(), b)?))
                } else {
                    Ok((resample(x, m, rng)?, resample(y, m, rng)?))
                }
            }
        }
    }
}

fn normal_points<R: Rng + ?Sized>(rng: &mut R, m: usize, variance: f64) -> Vec<f64> {
    let s = variance.sqrt();
    (0..m).map(|_| s * rng.sample::<f64, _>(StandardNormal)).collect()
}

fn blob_points<R: Rng + ?Sized>(rng: &mut R, m: usize, var: [f64; 2]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * m);
    for _ in 0..m {
        let c = rng.random_range(0..9usize);
        let (cx, cy) = ((c % 3) as f64, (c / 3) as f64);
        out.push(cx + var[0].sqrt() * rng.sample::<f64, _>(StandardNormal));
        out.push(cy + var[1].sqrt() * rng.sample::<f64, _>(StandardNormal));
    }
    out
}

fn mixture_points<R: Rng + ?Sized>(rng: &mut R, m: usize, mu0: f64) -> Vec<f64> {
    let s0 = (1.0 - mu0 * mu0).sqrt();
    (0..m)
        .map(|_| {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            sign * mu0 + s0 * rng.sample::<f64, _>(StandardNormal)
        })
        .collect()
}

fn resample<R: Rng + ?Sized>(s: &Sample, m: usize, rng: &mut R) -> Result<Sample> {
    let mut out = Vec::with_capacity(m * s.dim());
    for _ in 0..m {
        out.extend_from_slice(s.point(rng.random_range(0..s.len())));
    }
    Sample::new(s.dim(), out)
}

pub fn gen_diff_var(n: usize, seed: u64, null_mode: bool) -> Result<(Sample, Sample)> {
    DatasetSpec::diff_var(null_mode).generate(n, &mut RngStream::new(seed, 0).generator())
}

pub fn gen_blobs(n: usize, seed: u64, null_mode: bool) -> Result<(Sample, Sample)> {
    DatasetSpec::blobs(null_mode).generate(n, &mut RngStream::new(seed, 0).generator())
}

pub fn gen_symmetric_matched(n: usize, seed: u64, null_mode: bool) -> Result<(Sample, Sample)> {
    DatasetSpec::symmetric_matched(null_mode).generate(n, &mut RngStream::new(seed, 0).generator())
}
