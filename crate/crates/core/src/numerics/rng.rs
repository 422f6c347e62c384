//! Deterministic random streams.
//!
//! A stream is ChaCha8 keyed by `seed` with the 64-bit ChaCha stream counter
//! set to `stream_id`. Distinct ids give non-overlapping keystreams of the same
//! key, so Monte-Carlo trial `t` can draw from stream `t` on any worker in any
//! order. Normal draws use `rand_distr::StandardNormal` (ziggurat). The crate
//! versions are pinned exactly in the workspace manifest since a change in
//! either would alter every simulated number.

use super::linalg::{sym_eigen, SymMatrix};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    pub fn generator(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

pub fn rng_standard_normal(stream: RngStream, n: usize) -> Vec<f64> {
    let mut rng = stream.generator();
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Uniform draws on `[0, 1)`.
pub fn rng_uniform(stream: RngStream, n: usize) -> Vec<f64> {
    let mut rng = stream.generator();
    (0..n).map(|_| rng.random::<f64>()).collect()
}

pub fn rng_multivariate_normal(
    stream: RngStream,
    mean: &[f64],
    cov: &SymMatrix,
    n: usize,
) -> Result<Vec<Vec<f64>>> {
    let mvn = MultivariateNormal::new(mean, cov)?;
    let mut rng = stream.generator();
    Ok((0..n).map(|_| mvn.sample(&mut rng)).collect())
}

/// `N(mean, cov)` sampled as `mean + V Λ^{1/2} ξ`. Works for singular
/// covariances; slightly negative eigenvalues from rounding are clipped.
#[derive(Debug, Clone)]
pub struct MultivariateNormal {
    mean: Vec<f64>,
    // Row-major d × d factor with `factor · factorᵀ = cov`.
    factor: Vec<f64>,
}

impl MultivariateNormal {
    pub fn new(mean: &[f64], cov: &SymMatrix) -> Result<Self> {
        let d = cov.dim();
        if mean.len() != d {
            return Err(Error::DimensionMismatch(mean.len(), d));
        }
        let eig = sym_eigen(cov)?;
        if let Some(&bad) = eig.eigenvalues.iter().find(|&&l| l < -1e-8) {
            return Err(Error::domain(format!(
                "covariance is not positive semidefinite (eigenvalue {bad:.3e})"
            )));
        }
        let mut factor = vec![0.0; d * d];
        for k in 0..d {
            let s = eig.eigenvalues[k].max(0.0).sqrt();
            let v = eig.vector(k);
            for i in 0..d {
                factor[i * d + k] = v[i] * s;
            }
        }
        Ok(MultivariateNormal {
            mean: mean.to_vec(),
            factor,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.dim();
        let xi: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        (0..d)
            .map(|i| {
                self.mean[i]
                    + self.factor[i * d..(i + 1) * d]
                        .iter()
                        .zip(&xi)
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
            })
            .collect()
    }
}

/// Random symmetric positive definite matrix with Haar-distributed
/// eigenvectors and eigenvalues uniform on `[eig_lo, eig_hi]`.
pub fn random_spd<R: Rng + ?Sized>(rng: &mut R, d: usize, eig_lo: f64, eig_hi: f64) -> SymMatrix {
    // Eigenvectors of a GOE matrix are Haar distributed.
    let goe = SymMatrix::from_fn(d, |i, j| {
        let g: f64 = rng.sample(StandardNormal);
        if i == j {
            g * std::f64::consts::SQRT_2
        } else {
            g
        }
    });
    let eig = sym_eigen(&goe).expect("GOE matrix is finite");
    let lambdas: Vec<f64> = (0..d)
        .map(|_| eig_lo + (eig_hi - eig_lo) * rng.random::<f64>())
        .collect();
    SymMatrix::from_fn(d, |i, j| {
        (0..d)
            .map(|k| lambdas[k] * eig.vector(k)[i] * eig.vector(k)[j])
            .sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_stream_same_sequence() {
        let s = RngStream::new(42, 7);
        assert_eq!(rng_standard_normal(s, 100), rng_standard_normal(s, 100));
        assert_eq!(rng_uniform(s, 100), rng_uniform(s, 100));
        assert_ne!(
            rng_standard_normal(s, 10),
            rng_standard_normal(RngStream::new(42, 8), 10)
        );
        assert_ne!(
            rng_standard_normal(s, 10),
            rng_standard_normal(RngStream::new(43, 7), 10)
        );
    }

    #[test]
    fn uniform_in_unit_interval() {
        let u = rng_uniform(RngStream::new(1, 0), 10_000);
        assert!(u.iter().all(|&v| (0.0..1.0).contains(&v)));
        let mean = u.iter().sum::<f64>() / u.len() as f64;
        assert!((mean - 0.5).abs() < 0.02);
    }

    #[test]
    fn zero_covariance_returns_mean() {
        let cov = SymMatrix::zeros(3);
        let mean = [1.0, -2.0, 0.5];
        let draws = rng_multivariate_normal(RngStream::new(3, 0), &mean, &cov, 20).unwrap();
        for d in draws {
            assert_eq!(d, mean.to_vec());
        }
    }

    #[test]
    fn negative_eigenvalue_rejected() {
        let cov = SymMatrix::from_diag(&[1.0, -1e-3]);
        assert!(matches!(
            rng_multivariate_normal(RngStream::new(0, 0), &[0.0, 0.0], &cov, 1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn random_spd_spectrum_in_range() {
        let mut rng = RngStream::new(8, 0).generator();
        for _ in 0..20 {
            let m = random_spd(&mut rng, 5, 0.1, 10.0);
            let e = sym_eigen(&m).unwrap();
            assert!(e.min_eigenvalue() >= 0.1 - 1e-10 && e.max_eigenvalue() <= 10.0 + 1e-10);
        }
    }

    #[test]
    fn identity_covariance_converges() {
        let n = 1_000_000;
        let draws =
            rng_multivariate_normal(RngStream::new(11, 0), &[0.0; 3], &SymMatrix::identity(3), n)
                .unwrap();
        let mut acc = [[0.0f64; 3]; 3];
        for x in &draws {
            for i in 0..3 {
                for j in 0..3 {
                    acc[i][j] += x[i] * x[j];
                }
            }
        }
        for (i, row) in acc.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let c = v / n as f64;
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((c - want).abs() < 5e-3, "({i},{j}) = {c}");
                if i != j {
                    assert!(c.abs() < 4.0 / (n as f64).sqrt());
                }
            }
        }
    }

    #[test]
    fn correlated_covariance_recovered() {
        let cov = SymMatrix::from_rows(&[vec![2.0, 0.8], vec![0.8, 1.0]]).unwrap();
        let n = 200_000;
        let draws = rng_multivariate_normal(RngStream::new(5, 1), &[1.0, 2.0], &cov, n).unwrap();
        let m0 = draws.iter().map(|x| x[0]).sum::<f64>() / n as f64;
        let m1 = draws.iter().map(|x| x[1]).sum::<f64>() / n as f64;
        let c01 = draws.iter().map(|x| (x[0] - m0) * (x[1] - m1)).sum::<f64>() / n as f64;
        assert!((m0 - 1.0).abs() < 0.02 && (m1 - 2.0).abs() < 0.02);
        assert!((c01 - 0.8).abs() < 0.02);
    }
}
