//! Kernels, the linear-time MMD statistic and its covariance.
//!
//! A sample of `2n` points per distribution is cut into `n` disjoint 4-tuples
//! `z_i = (x_i, x_{n+i}, y_i, y_{n+i})`. For each kernel `u` in a menu the
//! h-statistic `h_u(z_i)` is evaluated on every tuple; the base statistic is
//! `τ_u = √n · mean_i h_u(z_i)` and `Σ` is the (1/n-normalized) empirical
//! covariance of the h-vectors.

use crate::error::{Error, Result};
use crate::numerics::{sym_eigen, RngStream, SymMatrix};
use rand::seq::SliceRandom;
use std::fmt;
use std::str::FromStr;

/// Default number of points the median heuristic looks at.
pub const MEDIAN_HEURISTIC_CAP: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// `exp(−‖a−b‖² / (2·bandwidth²))`
    Gaussian { bandwidth: f64 },
    /// `a·b`
    Linear,
    /// `(a·b)^degree`
    HomogeneousPolynomial { degree: u32 },
}

impl KernelSpec {
    pub fn gaussian(bandwidth: f64) -> Result<Self> {
        let k = KernelSpec::Gaussian { bandwidth };
        k.validate()?;
        Ok(k)
    }

    pub fn polynomial(degree: u32) -> Result<Self> {
        let k = KernelSpec::HomogeneousPolynomial { degree };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Gaussian { bandwidth } if !(bandwidth > 0.0 && bandwidth.is_finite()) => {
                Err(Error::domain(format!(
                    "gaussian bandwidth must be positive and finite, got {bandwidth}"
                )))
            }
            KernelSpec::HomogeneousPolynomial { degree: 0 } => {
                Err(Error::domain("polynomial degree must be at least 1"))
            }
            _ => Ok(()),
        }
    }

    /// Kernel value from the squared distance and the inner product of the
    /// two points; every supported kernel is a function of one of them.
    #[inline]
    fn from_parts(&self, sq_dist: f64, inner: f64) -> f64 {
        match *self {
            KernelSpec::Gaussian { bandwidth } => {
                (-sq_dist / (2.0 * bandwidth * bandwidth)).exp()
            }
            KernelSpec::Linear => inner,
            KernelSpec::HomogeneousPolynomial { degree } => inner.powi(degree as i32),
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Gaussian { bandwidth } => write!(f, "gaussian:{bandwidth}"),
            KernelSpec::Linear => write!(f, "linear"),
            KernelSpec::HomogeneousPolynomial { degree } => write!(f, "poly:{degree}"),
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    /// Parses `gaussian:<bandwidth>`, `linear` or `poly:<degree>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s, None),
        };
        let bad = || Error::domain(format!("cannot parse kernel '{s}'"));
        match (name, arg) {
            ("linear", None) => Ok(KernelSpec::Linear),
            ("gaussian", Some(a)) => KernelSpec::gaussian(a.parse().map_err(|_| bad())?),
            ("poly", Some(a)) => KernelSpec::polynomial(a.parse().map_err(|_| bad())?),
            _ => Err(bad()),
        }
    }
}

pub fn eval_kernel(k: &KernelSpec, a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(a.len(), b.len()));
    }
    k.validate()?;
    Ok(k.from_parts(sq_dist(a, b), inner(a, b)))
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
fn inner(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Points of equal dimension stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    dim: usize,
    data: Vec<f64>,
}

impl Sample {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("points must have dimension at least 1"));
        }
        if data.len() % dim != 0 {
            return Err(Error::domain(format!(
                "{} values do not form points of dimension {dim}",
                data.len()
            )));
        }
        Ok(Sample { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.len())
            .ok_or_else(|| Error::domain("sample is empty"))?;
        let mut data = Vec::with_capacity(dim * rows.len());
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch(r.len(), dim));
            }
            data.extend_from_slice(r);
        }
        Sample::new(dim, data)
    }

    /// One-dimensional sample.
    pub fn from_scalars(values: &[f64]) -> Self {
        Sample {
            dim: 1,
            data: values.to_vec(),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }
}

/// Median of pairwise Euclidean distances among the first `cap` points.
///
/// Uses the lower median when the number of pairs is even.
pub fn median_heuristic(pooled: &Sample, cap: usize) -> Result<f64> {
    let m = pooled.len().min(cap);
    if m < 2 {
        return Err(Error::DegenerateSample(
            "median heuristic needs at least two points".into(),
        ));
    }
    let mut dists = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        let a = pooled.point(i);
        for j in (i + 1)..m {
            dists.push(sq_dist(a, pooled.point(j)));
        }
    }
    let k = (dists.len() - 1) / 2;
    let (_, med, _) = dists.select_nth_unstable_by(k, f64::total_cmp);
    let med = med.sqrt();
    if !(med > 0.0) || !med.is_finite() {
        return Err(Error::DegenerateSample(
            "median pairwise distance is zero; the pooled points are (mostly) identical".into(),
        ));
    }
    Ok(med)
}

#[derive(Debug, Clone, Copy)]
pub struct PairedSample<'a> {
    pub x: &'a [f64],
    pub x_prime: &'a [f64],
    pub y: &'a [f64],
    pub y_prime: &'a [f64],
}

/// `k(x,x') + k(y,y') − k(x,y') − k(y,x')`.
pub fn h_statistic(k: &KernelSpec, z: &PairedSample<'_>) -> Result<f64> {
    let p = z.x.len();
    for q in [z.x_prime, z.y, z.y_prime] {
        if q.len() != p {
            return Err(Error::DimensionMismatch(q.len(), p));
        }
    }
    Ok(eval_kernel(k, z.x, z.x_prime)? + eval_kernel(k, z.y, z.y_prime)?
        - eval_kernel(k, z.x, z.y_prime)?
        - eval_kernel(k, z.y, z.x_prime)?)
}

/// Scaled MMD estimates `τ` for a kernel menu and their covariance `Σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseStatistics {
    pub tau: Vec<f64>,
    pub sigma: SymMatrix,
    /// Number of 4-tuples the estimates were averaged over.
    pub n: usize,
}

impl BaseStatistics {
    pub fn new(tau: Vec<f64>, sigma: SymMatrix, n: usize) -> Result<Self> {
        if tau.len() != sigma.dim() {
            return Err(Error::DimensionMismatch(tau.len(), sigma.dim()));
        }
        if n < 2 {
            return Err(Error::domain(format!("need at least 2 pairs, got {n}")));
        }
        if !tau.iter().all(|t| t.is_finite()) || !sigma.is_finite() {
            return Err(Error::domain("statistics contain non-finite values"));
        }
        let eig = sym_eigen(&sigma)?;
        let tol = 1e-8 * sigma.trace().abs();
        if eig.min_eigenvalue() < -tol {
            return Err(Error::domain(format!(
                "covariance is not positive semidefinite (eigenvalue {:.3e})",
                eig.min_eigenvalue()
            )));
        }
        Ok(BaseStatistics { tau, sigma, n })
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.tau.len()
    }
}

/// The h-statistics `h_u(z_i)` of every kernel on every tuple.
#[derive(Debug, Clone)]
pub struct HMatrix {
    d: usize,
    n: usize,
    // Kernel-major: the n values of kernel u occupy `values[u*n..(u+1)*n]`.
    values: Vec<f64>,
}

impl HMatrix {
    /// Builds the tuples from `X` and `Y`; a trailing odd point is dropped.
    pub fn compute(x: &Sample, y: &Sample, kernels: &[KernelSpec]) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::domain(format!(
                "samples must have equal size, got {} and {}",
                x.len(),
                y.len()
            )));
        }
        if x.dim() != y.dim() {
            return Err(Error::DimensionMismatch(x.dim(), y.dim()));
        }
        if kernels.is_empty() {
            return Err(Error::domain("kernel menu is empty"));
        }
        for k in kernels {
            k.validate()?;
        }
        let n = x.len() / 2;
        if n < 2 {
            return Err(Error::domain(format!(
                "need at least 4 points per sample, got {}",
                x.len()
            )));
        }
        let d = kernels.len();
        let mut values = vec![0.0; d * n];
        for i in 0..n {
            let (xa, xb) = (x.point(i), x.point(n + i));
            let (ya, yb) = (y.point(i), y.point(n + i));
            let parts = [
                (sq_dist(xa, xb), inner(xa, xb)),
                (sq_dist(ya, yb), inner(ya, yb)),
                (sq_dist(xa, yb), inner(xa, yb)),
                (sq_dist(ya, xb), inner(ya, xb)),
            ];
            for (u, k) in kernels.iter().enumerate() {
                values[u * n + i] = k.from_parts(parts[0].0, parts[0].1)
                    + k.from_parts(parts[1].0, parts[1].1)
                    - k.from_parts(parts[2].0, parts[2].1)
                    - k.from_parts(parts[3].0, parts[3].1);
            }
        }
        Ok(HMatrix { d, n, values })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kernel_values(&self, u: usize) -> &[f64] {
        &self.values[u * self.n..(u + 1) * self.n]
    }

    pub fn statistics(&self) -> Result<BaseStatistics> {
        let (tau, sigma) = self.moments(|u| self.kernel_values(u).to_vec());
        BaseStatistics::new(tau, sigma, self.n)
    }

    /// Statistics restricted to the tuples in `idx`.
    pub fn statistics_on(&self, idx: &[usize]) -> Result<BaseStatistics> {
        if idx.len() < 2 {
            return Err(Error::domain(format!(
                "need at least 2 pairs, got {}",
                idx.len()
            )));
        }
        let (tau, sigma) = self.moments(|u| {
            let row = self.kernel_values(u);
            idx.iter().map(|&i| row[i]).collect()
        });
        BaseStatistics::new(tau, sigma, idx.len())
    }

    /// Training and test statistics for a split; both carry the full-sample
    /// covariance.
    pub fn split_statistics(&self, plan: &SplitPlan) -> Result<(BaseStatistics, BaseStatistics)> {
        let full = self.statistics()?;
        self.split_statistics_with(plan, &full.sigma)
    }

    /// As [`HMatrix::split_statistics`] with an already computed full-sample
    /// covariance.
    pub fn split_statistics_with(
        &self,
        plan: &SplitPlan,
        full_sigma: &SymMatrix,
    ) -> Result<(BaseStatistics, BaseStatistics)> {
        if full_sigma.dim() != self.d {
            return Err(Error::DimensionMismatch(full_sigma.dim(), self.d));
        }
        let mut train = self.statistics_on(&plan.train)?;
        let mut test = self.statistics_on(&plan.test)?;
        train.sigma = full_sigma.clone();
        test.sigma = full_sigma.clone();
        Ok((train, test))
    }

    fn moments(&self, row: impl Fn(usize) -> Vec<f64>) -> (Vec<f64>, SymMatrix) {
        let rows: Vec<Vec<f64>> = (0..self.d).map(row).collect();
        let m = rows[0].len() as f64;
        let means: Vec<f64> = rows.iter().map(|r| pairwise_sum(r) / m).collect();
        let centered: Vec<Vec<f64>> = rows
            .iter()
            .zip(&means)
            .map(|(r, mu)| r.iter().map(|v| v - mu).collect())
            .collect();
        let mut buf = vec![0.0; rows[0].len()];
        let sigma = SymMatrix::from_fn(self.d, |i, j| {
            for (b, (a, c)) in buf.iter_mut().zip(centered[i].iter().zip(&centered[j])) {
                *b = a * c;
            }
            pairwise_sum(&buf) / m
        });
        let tau = means.iter().map(|mu| m.sqrt() * mu).collect();
        (tau, sigma)
    }
}

pub fn compute_base_statistics(
    x: &Sample,
    y: &Sample,
    kernels: &[KernelSpec],
) -> Result<BaseStatistics> {
    HMatrix::compute(x, y, kernels)?.statistics()
}

/// A shuffled partition of tuple indices into a training prefix and a test
/// suffix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitPlan {
    /// `floor(fraction · n)` training tuples; each side must keep two.
    pub fn new<R: rand::Rng + ?Sized>(n: usize, fraction: f64, rng: &mut R) -> Result<Self> {
        let n_train = train_size(n, fraction)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let test = order.split_off(n_train);
        Ok(SplitPlan { train: order, test })
    }

    /// Same partition for every training fraction: a fixed permutation, cut
    /// at different points.
    pub fn from_permutation(order: &[usize], fraction: f64) -> Result<Self> {
        let n_train = train_size(order.len(), fraction)?;
        Ok(SplitPlan {
            train: order[..n_train].to_vec(),
            test: order[n_train..].to_vec(),
        })
    }
}

fn train_size(n: usize, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::domain(format!(
            "train fraction must lie in (0, 1), got {fraction}"
        )));
    }
    // The epsilon keeps e.g. 0.29 · 100 from flooring to 28.
    let n_train = (fraction * n as f64 + 1e-9).floor() as usize;
    if n_train < 2 || n - n_train < 2 {
        return Err(Error::domain(format!(
            "train fraction {fraction} leaves {n_train} training and {} test pairs; need at least 2 each",
            n - n_train.min(n)
        )));
    }
    Ok(n_train)
}

/// Splits the tuples with a permutation drawn from stream `(seed, 0)` and
/// returns training and test statistics.
pub fn split_base_statistics(
    x: &Sample,
    y: &Sample,
    kernels: &[KernelSpec],
    train_fraction: f64,
    seed: u64,
) -> Result<(BaseStatistics, BaseStatistics)> {
    let h = HMatrix::compute(x, y, kernels)?;
    let mut rng = RngStream::new(seed, 0).generator();
    let plan = SplitPlan::new(h.n(), train_fraction, &mut rng)?;
    h.split_statistics(&plan)
}

/// Summation with a fixed binary reduction tree.
pub(crate) fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng_standard_normal;
    use proptest::prelude::*;

    fn brute_stats(x: &[f64], y: &[f64], k: &KernelSpec) -> (f64, f64) {
        let n = x.len() / 2;
        let hs: Vec<f64> = (0..n)
            .map(|i| {
                let kk = |a: f64, b: f64| eval_kernel(k, &[a], &[b]).unwrap();
                kk(x[i], x[n + i]) + kk(y[i], y[n + i]) - kk(x[i], y[n + i]) - kk(y[i], x[n + i])
            })
            .collect();
        let mean = hs.iter().sum::<f64>() / n as f64;
        let second = hs.iter().map(|h| h * h).sum::<f64>() / n as f64;
        ((n as f64).sqrt() * mean, second - mean * mean)
    }

    #[test]
    fn kernel_values() {
        let g = KernelSpec::gaussian(0.7).unwrap();
        assert_eq!(eval_kernel(&g, &[1.0, 2.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(eval_kernel(&KernelSpec::Linear, &[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        let p = KernelSpec::polynomial(2).unwrap();
        assert_eq!(eval_kernel(&p, &[1.0], &[3.0]).unwrap(), 9.0);
        let v = eval_kernel(&KernelSpec::gaussian(2.0).unwrap(), &[0.0], &[1.0]).unwrap();
        assert!((v - (-1.0f64 / 8.0).exp()).abs() < 1e-15);
        assert!(eval_kernel(&g, &[1.0], &[1.0, 2.0]).is_err());
        assert!(KernelSpec::gaussian(0.0).is_err());
        assert!(KernelSpec::polynomial(0).is_err());
    }

    #[test]
    fn kernel_string_roundtrip() {
        for s in ["gaussian:1.5", "linear", "poly:4"] {
            let k: KernelSpec = s.parse().unwrap();
            assert_eq!(k.to_string(), s);
        }
        assert!("gaussian".parse::<KernelSpec>().is_err());
        assert!("poly:-1".parse::<KernelSpec>().is_err());
        assert!("rbf:1".parse::<KernelSpec>().is_err());
    }

    #[test]
    fn median_small_cases() {
        assert_eq!(median_heuristic(&Sample::from_scalars(&[0.0, 2.0]), 1000).unwrap(), 2.0);
        assert_eq!(
            median_heuristic(&Sample::from_scalars(&[0.0, 1.0, 3.0]), 1000).unwrap(),
            2.0
        );
        // Four pairs {1, 2, 3, 4}: lower median.
        let s = Sample::from_scalars(&[0.0, 1.0, 3.0, 3.0]);
        // distances 1, 3, 3, 2, 2, 0 → sorted 0 1 2 2 3 3 → lower median 2
        assert_eq!(median_heuristic(&s, 1000).unwrap(), 2.0);
        assert!(matches!(
            median_heuristic(&Sample::from_scalars(&[1.0, 1.0, 1.0]), 1000),
            Err(Error::DegenerateSample(_))
        ));
        // The cap keeps only the front of the sample.
        let s = Sample::from_scalars(&[0.0, 2.0, 100.0, 200.0]);
        assert_eq!(median_heuristic(&s, 2).unwrap(), 2.0);
    }

    #[test]
    fn median_of_normal_sample() {
        let v = rng_standard_normal(RngStream::new(2024, 0), 1000);
        let got = median_heuristic(&Sample::from_scalars(&v), 1000).unwrap();
        let mut all: Vec<f64> = Vec::new();
        for i in 0..v.len() {
            for j in (i + 1)..v.len() {
                all.push((v[i] - v[j]).abs());
            }
        }
        all.sort_by(f64::total_cmp);
        assert_eq!(got, all[(all.len() - 1) / 2]);
        // |X − X'| ~ |N(0, 2)| has median √2 · Φ⁻¹(0.75) ≈ 0.954.
        assert!((got - 0.9539).abs() < 0.1, "median {got}");
    }

    #[test]
    fn h_statistic_cases() {
        let p = [0.3, -1.2];
        let z = PairedSample { x: &p, x_prime: &p, y: &p, y_prime: &p };
        for k in [KernelSpec::Linear, KernelSpec::gaussian(1.0).unwrap()] {
            assert_eq!(h_statistic(&k, &z).unwrap(), 0.0);
        }
        let z = PairedSample { x: &[1.0], x_prime: &[2.0], y: &[0.0], y_prime: &[0.0] };
        assert_eq!(h_statistic(&KernelSpec::Linear, &z).unwrap(), 2.0);
        let (a, b, c, d) = ([0.1], [0.7], [-1.0], [2.5]);
        let g = KernelSpec::gaussian(0.8).unwrap();
        let z1 = PairedSample { x: &a, x_prime: &b, y: &c, y_prime: &d };
        let z2 = PairedSample { x: &c, x_prime: &d, y: &a, y_prime: &b };
        assert_eq!(h_statistic(&g, &z1).unwrap(), h_statistic(&g, &z2).unwrap());
    }

    #[test]
    fn identical_points_give_zero_statistics() {
        let x = Sample::from_scalars(&[1.5; 10]);
        let s = compute_base_statistics(&x, &x, &[KernelSpec::Linear, KernelSpec::gaussian(1.0).unwrap()])
            .unwrap();
        assert_eq!(s.tau, vec![0.0, 0.0]);
        assert_eq!(s.sigma, SymMatrix::zeros(2));
        assert_eq!(s.n, 5);
    }

    #[test]
    fn hand_dataset_matches_brute_force() {
        let x = [0.2, -0.5, 1.1, 0.4, -0.9, 0.0, 0.6, 1.7];
        let y = [1.3, 0.1, -0.2, 2.2, 0.5, -1.4, 0.9, 0.3];
        for k in [
            KernelSpec::Linear,
            KernelSpec::gaussian(0.9).unwrap(),
            KernelSpec::polynomial(3).unwrap(),
        ] {
            let s = compute_base_statistics(&Sample::from_scalars(&x), &Sample::from_scalars(&y), &[k])
                .unwrap();
            let (tau, var) = brute_stats(&x, &y, &k);
            assert_eq!(s.n, 4);
            assert!((s.tau[0] - tau).abs() < 1e-13);
            assert!((s.sigma.get(0, 0) - var).abs() < 1e-13);
        }
    }

    #[test]
    fn odd_size_drops_trailing_point() {
        let x = [0.2, -0.5, 1.1, 0.4, -0.9, 0.0, 0.6, 1.7, 99.0];
        let y = [1.3, 0.1, -0.2, 2.2, 0.5, -1.4, 0.9, 0.3, -99.0];
        let k = [KernelSpec::Linear];
        let odd = compute_base_statistics(&Sample::from_scalars(&x), &Sample::from_scalars(&y), &k);
        let even = compute_base_statistics(
            &Sample::from_scalars(&x[..8]),
            &Sample::from_scalars(&y[..8]),
            &k,
        );
        assert_eq!(odd.unwrap(), even.unwrap());
        assert!(compute_base_statistics(
            &Sample::from_scalars(&x),
            &Sample::from_scalars(&y[..8]),
            &k
        )
        .is_err());
    }

    #[test]
    fn cross_covariance_matches_formula() {
        let x: Vec<f64> = rng_standard_normal(RngStream::new(1, 0), 40);
        let y: Vec<f64> = rng_standard_normal(RngStream::new(1, 1), 40);
        let ks = [KernelSpec::Linear, KernelSpec::gaussian(0.5).unwrap()];
        let h = HMatrix::compute(&Sample::from_scalars(&x), &Sample::from_scalars(&y), &ks).unwrap();
        let s = h.statistics().unwrap();
        let (a, b) = (h.kernel_values(0), h.kernel_values(1));
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let cross = a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>() / n - ma * mb;
        assert!((s.sigma.get(0, 1) - cross).abs() < 1e-12);
    }

    #[test]
    fn null_tau_within_four_sigma() {
        let k = [KernelSpec::gaussian(1.0).unwrap()];
        let seeds = 200;
        let mut inside = 0;
        for seed in 0..seeds {
            let x = rng_standard_normal(RngStream::new(seed, 0), 20_000);
            let y = rng_standard_normal(RngStream::new(seed, 1), 20_000);
            let s = compute_base_statistics(&Sample::from_scalars(&x), &Sample::from_scalars(&y), &k)
                .unwrap();
            if s.tau[0].abs() < 4.0 * s.sigma.get(0, 0).sqrt() {
                inside += 1;
            }
        }
        assert!(inside as f64 >= 0.99 * seeds as f64, "{inside}/{seeds}");
    }

    #[test]
    fn huge_bandwidth_kills_h() {
        let g = KernelSpec::gaussian(1e8).unwrap();
        let z = PairedSample { x: &[0.0], x_prime: &[3.0], y: &[-2.0], y_prime: &[5.0] };
        assert!(h_statistic(&g, &z).unwrap().abs() < 1e-14);
    }

    #[test]
    fn split_sizes_and_partition() {
        let mut rng = RngStream::new(0, 0).generator();
        let plan = SplitPlan::new(8, 0.5, &mut rng).unwrap();
        assert_eq!((plan.train.len(), plan.test.len()), (4, 4));
        let plan = SplitPlan::new(100, 0.3, &mut rng).unwrap();
        assert_eq!(plan.train.len(), 30);
        let plan = SplitPlan::new(100, 0.29, &mut rng).unwrap();
        assert_eq!(plan.train.len(), 29);
        let mut all: Vec<usize> = plan.train.iter().chain(&plan.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert!(SplitPlan::new(10, 0.1, &mut rng).is_err());
        assert!(SplitPlan::new(10, 0.9, &mut rng).is_err());
        assert!(SplitPlan::new(10, 1.0, &mut rng).is_err());
    }

    #[test]
    fn split_statistics_use_full_covariance() {
        let x = rng_standard_normal(RngStream::new(9, 0), 200);
        let y = rng_standard_normal(RngStream::new(9, 1), 200);
        let (xs, ys) = (Sample::from_scalars(&x), Sample::from_scalars(&y));
        let ks = [KernelSpec::Linear, KernelSpec::gaussian(1.0).unwrap()];
        let full = compute_base_statistics(&xs, &ys, &ks).unwrap();
        let (tr, te) = split_base_statistics(&xs, &ys, &ks, 0.3, 4).unwrap();
        assert_eq!((tr.n, te.n), (30, 70));
        assert_eq!(tr.sigma, full.sigma);
        assert_eq!(te.sigma, full.sigma);
        let again = split_base_statistics(&xs, &ys, &ks, 0.3, 4).unwrap();
        assert_eq!(again.0, tr);
    }

    proptest! {
        #[test]
        fn permutation_invariance(seed in 0u64..1000, shift in 1usize..20) {
            let x = rng_standard_normal(RngStream::new(seed, 0), 40);
            let y = rng_standard_normal(RngStream::new(seed, 1), 40);
            let ks = [KernelSpec::Linear, KernelSpec::gaussian(0.7).unwrap()];
            let h = HMatrix::compute(&Sample::from_scalars(&x), &Sample::from_scalars(&y), &ks).unwrap();
            let base = h.statistics().unwrap();
            let idx: Vec<usize> = (0..20).map(|i| (i + shift) % 20).collect();
            let perm = h.statistics_on(&idx).unwrap();
            for u in 0..2 {
                prop_assert!((base.tau[u] - perm.tau[u]).abs() < 1e-12);
            }
            for i in 0..2 { for j in 0..2 {
                prop_assert!((base.sigma.get(i, j) - perm.sigma.get(i, j)).abs() < 1e-12);
            }}
        }

        #[test]
        fn covariance_is_psd(seed in 0u64..1000) {
            let x = rng_standard_normal(RngStream::new(seed, 0), 30);
            let y = rng_standard_normal(RngStream::new(seed, 1), 30);
            let ks: Vec<KernelSpec> = [0.25, 0.5, 1.0, 2.0]
                .iter()
                .map(|&b| KernelSpec::gaussian(b).unwrap())
                .chain([KernelSpec::Linear])
                .collect();
            let s = compute_base_statistics(&Sample::from_scalars(&x), &Sample::from_scalars(&y), &ks).unwrap();
            let e = sym_eigen(&s.sigma).unwrap();
            prop_assert!(e.min_eigenvalue() >= -1e-10 * s.sigma.trace());
        }

        #[test]
        fn h_symmetric_in_samples(a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0, d in -3.0f64..3.0) {
            for k in [KernelSpec::Linear, KernelSpec::gaussian(1.3).unwrap(), KernelSpec::polynomial(2).unwrap()] {
                let z1 = PairedSample { x: &[a], x_prime: &[b], y: &[c], y_prime: &[d] };
                let z2 = PairedSample { x: &[c], x_prime: &[d], y: &[a], y_prime: &[b] };
                prop_assert!((h_statistic(&k, &z1).unwrap() - h_statistic(&k, &z2).unwrap()).abs() < 1e-12);
            }
        }
    }
}
