//! Selective hypothesis tests on base statistics `(τ, Σ)`.
//!
//! * [`ost_test`]: maximize the ratio over `Σβ ≥ 0` by solving the
//!   non-negative problem on the canonical form `(Σ⁻¹τ, Σ⁻¹)`. Conditional on
//!   the selected active set `𝒰` the statistic is `χ_l` when `l = |𝒰| ≥ 2`
//!   and a normal truncated below at `𝒱⁻` when `l = 1`.
//! * [`wald_test`]: the unconstrained maximum `(τᵀΣ⁻¹τ)^{1/2}` against `χ_d`.
//! * [`base_test`]: the best single kernel, truncated normal null.
//! * [`split_test`]: learn the combination on one part of the data and test
//!   on the other with a standard normal null.
//! * [`naive_test`]: the OST statistic against the standard normal quantile,
//!   ignoring selection. Deliberately miscalibrated.
//! * [`ost_beta_pos_test`]: the selective machinery applied with the
//!   constraint `β ≥ 0` directly on `(τ, Σ)`.
//!
//! p-values invert the same conditional laws used for the thresholds.

use crate::error::{Error, Result};
use crate::kernels::{BaseStatistics, HMatrix, KernelSpec, Sample, SplitPlan};
use crate::numerics::{
    chi_quantile, chi_sf, dot, norm, normal_isf_ln, pseudoinverse_from, std_normal_isf, std_normal_log_sf,
    std_normal_sf, sym_eigen, truncated_normal_sf, RngStream, SymMatrix, DEFAULT_COND_THRESHOLD,
};
use crate::optimizer::{
    compute_z, solve_ost, solve_ost_semidefinite, v_minus, OptResult,
};
use std::fmt;
use std::str::FromStr;

pub const DEFAULT_NULL_TOL: f64 = 1e-6;
/// Multiples of the null standard deviation `√λ` that a projection onto a
/// numerically null direction must exceed to force a rejection.
pub const NULL_NOISE_SIGMAS: f64 = 8.0;
const RANK_TOL: f64 = 1e-10;

pub const WARN_NOT_CALIBRATED: &str =
    "not-calibrated: the naive test ignores the selection of the statistic";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelTestConfig {
    /// Condition numbers above this send `Σ` down the pseudoinverse path.
    pub cond_threshold: f64,
    /// Relative size of `|vᵀτ|` along a null direction `v` that triggers an
    /// immediate rejection (on top of [`NULL_NOISE_SIGMAS`]`·√λ`).
    pub null_tol: f64,
    /// Optional `Σ + λI` regularization. Off by default; makes every test
    /// conservative.
    pub ridge: Option<f64>,
}

impl Default for SelTestConfig {
    fn default() -> Self {
        SelTestConfig {
            cond_threshold: DEFAULT_COND_THRESHOLD,
            null_tol: DEFAULT_NULL_TOL,
            ridge: None,
        }
    }
}

impl SelTestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cond_threshold > 1.0) {
            return Err(Error::domain(format!(
                "condition threshold must exceed 1, got {}",
                self.cond_threshold
            )));
        }
        if !(self.null_tol >= 0.0) {
            return Err(Error::domain("null tolerance must be non-negative"));
        }
        if let Some(l) = self.ridge {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::domain(format!("ridge must be non-negative, got {l}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    /// `Σβ ≥ 0`, solved on the canonical form.
    SigmaBetaPos,
    /// `β ≥ 0` on the original coordinates.
    BetaPos,
}

impl FromStr for Constraint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigma_beta_pos" => Ok(Constraint::SigmaBetaPos),
            "beta_pos" => Ok(Constraint::BetaPos),
            _ => Err(Error::domain(format!(
                "unknown constraint '{s}' (expected sigma_beta_pos or beta_pos)"
            ))),
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Constraint::SigmaBetaPos => "sigma_beta_pos",
            Constraint::BetaPos => "beta_pos",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Ost,
    Wald,
    Base,
    Split { fraction: f64, constraint: Constraint },
    Naive,
    OstBetaPos,
}

impl Method {
    pub fn split(fraction: f64) -> Self {
        Method::Split {
            fraction,
            constraint: Constraint::SigmaBetaPos,
        }
    }

    /// Whether the method controls the Type-I error.
    pub fn is_calibrated(&self) -> bool {
        !matches!(self, Method::Naive)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Ost => f.write_str("ost"),
            Method::Wald => f.write_str("wald"),
            Method::Base => f.write_str("base"),
            Method::Naive => f.write_str("naive"),
            Method::OstBetaPos => f.write_str("ost_beta_pos"),
            Method::Split {
                fraction,
                constraint,
            } => {
                write!(f, "split{fraction}")?;
                if *constraint == Constraint::BetaPos {
                    f.write_str("_betapos")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    /// Parses `ost`, `wald`, `base`, `naive`, `ost_beta_pos` and
    /// `split<fraction>[_betapos]`, e.g. `split0.1`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "ost" => return Ok(Method::Ost),
            "wald" => return Ok(Method::Wald),
            "base" => return Ok(Method::Base),
            "naive" => return Ok(Method::Naive),
            "ost_beta_pos" => return Ok(Method::OstBetaPos),
            _ => {}
        }
        let bad = || Error::domain(format!("unknown method '{s}'"));
        let rest = s.strip_prefix("split").ok_or_else(bad)?;
        let (frac, constraint) = match rest.strip_suffix("_betapos") {
            Some(f) => (f, Constraint::BetaPos),
            None => (rest, Constraint::SigmaBetaPos),
        };
        let fraction: f64 = frac.parse().map_err(|_| bad())?;
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::domain(format!(
                "split fraction must lie in (0, 1), got {fraction}"
            )));
        }
        Ok(Method::Split {
            fraction,
            constraint,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    pub method: Method,
    pub statistic: f64,
    pub threshold: f64,
    pub p_value: f64,
    pub reject: bool,
    pub l: usize,
    pub active_set: Vec<usize>,
    /// Lower truncation point; `−∞` when the null law is not truncated.
    pub v_minus: f64,
    pub immediate_reject: bool,
    pub warnings: Vec<String>,
}

/// How the degrees of freedom follow from the active set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankRule {
    /// `l = |𝒰|`
    ActiveSetSize,
    /// `l = rank(Π Σ' Π)`, used on the pseudoinverse path.
    ProjectedRank,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalStatistics {
    /// `Σ⁻¹τ` or `Σ⁺τ`
    pub rho: Vec<f64>,
    /// `Σ⁻¹` or `Σ⁺`
    pub sigma_prime: SymMatrix,
    pub rank_rule: RankRule,
    pub immediate_reject: bool,
    pub cond_number: f64,
    /// `rank(Σ)` as used on the pseudoinverse path; `d` otherwise.
    pub rank: usize,
    pub warnings: Vec<String>,
}

/// Applies the optional ridge and classifies `Σ` as regular or singular.
struct Spectral {
    sigma: SymMatrix,
    cond: f64,
    singular: bool,
    immediate_reject: bool,
    pinv: Option<(SymMatrix, usize)>,
    warnings: Vec<String>,
}

fn spectral(stats: &BaseStatistics, config: &SelTestConfig) -> Result<Spectral> {
    config.validate()?;
    let mut warnings = Vec::new();
    let sigma = match config.ridge {
        Some(l) if l > 0.0 => {
            warnings.push(format!(
                "ridge {l} added to the covariance diagonal; the test is conservative"
            ));
            stats.sigma.add_ridge(l)
        }
        _ => stats.sigma.clone(),
    };
    let eig = sym_eigen(&sigma)?;
    let cond = eig.condition_number();
    if cond <= config.cond_threshold {
        return Ok(Spectral {
            sigma,
            cond,
            singular: false,
            immediate_reject: false,
            pinv: None,
            warnings,
        });
    }
    // Eigenvalues below λ_max / cond_threshold are treated as exact zeros.
    let rank_tol = 1.0 / config.cond_threshold;
    let cutoff = rank_tol * eig.max_eigenvalue().max(0.0);
    let tau = &stats.tau;
    let tau_norm = norm(tau);
    let mut immediate_reject = false;
    for k in 0..eig.dim() {
        if eig.eigenvalues[k] > cutoff && eig.eigenvalues[k] > 0.0 {
            continue;
        }
        // A direction with a tiny but nonzero eigenvalue still carries null
        // noise of size √λ; only signal well beyond it is conclusive.
        let noise = NULL_NOISE_SIGMAS * eig.eigenvalues[k].max(0.0).sqrt();
        let proj = dot(eig.vector(k), tau).abs();
        if proj > config.null_tol * tau_norm + noise && tau_norm > 0.0 {
            immediate_reject = true;
        }
    }
    warnings.push(format!(
        "covariance condition number {cond:.3e} exceeds {:.1e}; using the pseudoinverse",
        config.cond_threshold
    ));
    let pinv = pseudoinverse_from(&eig, rank_tol);
    Ok(Spectral {
        sigma,
        cond,
        singular: true,
        immediate_reject,
        pinv: Some(pinv),
        warnings,
    })
}

/// Maps `(τ, Σ)` to the canonical pair `(Σ⁻¹τ, Σ⁻¹)`, falling back to the
/// pseudoinverse when `Σ` is ill-conditioned. A singular `Σ` with signal along
/// one of its null directions flags an immediate rejection.
pub fn canonicalize(stats: &BaseStatistics, config: &SelTestConfig) -> Result<CanonicalStatistics> {
    let sp = spectral(stats, config)?;
    let d = stats.d();
    match sp.pinv {
        None => {
            let eig = sym_eigen(&sp.sigma)?;
            let inv = eig.reconstruct_with(|l| 1.0 / l);
            let rho = inv.mul_vec(&stats.tau);
            Ok(CanonicalStatistics {
                rho,
                sigma_prime: inv,
                rank_rule: RankRule::ActiveSetSize,
                immediate_reject: false,
                cond_number: sp.cond,
                rank: d,
                warnings: sp.warnings,
            })
        }
        Some((pinv, rank)) => Ok(CanonicalStatistics {
            rho: pinv.mul_vec(&stats.tau),
            sigma_prime: pinv,
            rank_rule: RankRule::ProjectedRank,
            immediate_reject: sp.immediate_reject,
            cond_number: sp.cond,
            rank,
            warnings: sp.warnings,
        }),
    }
}

/// `𝒱⁻` for an `l = 1` selection on `(ρ, Σ')`.
pub fn v_minus_ost(opt: &OptResult, z: &crate::optimizer::ZVector, sigma_prime: &SymMatrix) -> Result<f64> {
    v_minus(&opt.beta_star, &z.z, sigma_prime, &opt.active_set, true)
}

/// `Φ⁻¹((1−α)(1−Φ(𝒱⁻)) + Φ(𝒱⁻))` for `l = 1`, `χ_l` quantile `1−α` otherwise.
pub fn ost_threshold(alpha: f64, l: usize, v_minus: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if l == 0 {
        return Err(Error::domain("degrees of freedom must be at least 1"));
    }
    if l >= 2 {
        return chi_quantile(l as u32, 1.0 - alpha);
    }
    if v_minus.is_nan() || v_minus == f64::INFINITY {
        return Err(Error::domain(format!("invalid truncation point {v_minus}")));
    }
    if v_minus == f64::NEG_INFINITY {
        return std_normal_isf(alpha);
    }
    // 1 − Φ(t) = α (1 − Φ(𝒱⁻)), solved in log space.
    Ok(normal_isf_ln(alpha.ln() + std_normal_log_sf(v_minus)))
}

/// Selective p-value `1 − F^{𝒱⁻}(stat)` (`l = 1`) or `1 − F_{χ_l}(stat)`.
fn selective_p_value(statistic: f64, l: usize, v_minus: f64) -> Result<f64> {
    if l >= 2 {
        return Ok(chi_sf(l as u32, statistic));
    }
    if statistic < v_minus {
        return Ok(1.0);
    }
    truncated_normal_sf(statistic, v_minus)
}

pub fn ost_test(stats: &BaseStatistics, alpha: f64, config: &SelTestConfig) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    let canon = canonicalize(stats, config)?;
    if canon.immediate_reject {
        return Ok(immediate(Method::Ost, alpha, canon.warnings));
    }
    selective_outcome(
        Method::Ost,
        &canon.rho,
        &canon.sigma_prime,
        canon.rank_rule,
        alpha,
        canon.warnings,
    )
}

/// OST with the constraint `β ≥ 0` applied to `(τ, Σ)` directly.
pub fn ost_beta_pos_test(
    stats: &BaseStatistics,
    alpha: f64,
    config: &SelTestConfig,
) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    let sp = spectral(stats, config)?;
    if sp.immediate_reject {
        return Ok(immediate(Method::OstBetaPos, alpha, sp.warnings));
    }
    let rule = if sp.singular {
        RankRule::ProjectedRank
    } else {
        RankRule::ActiveSetSize
    };
    selective_outcome(Method::OstBetaPos, &stats.tau, &sp.sigma, rule, alpha, sp.warnings)
}

/// The OST statistic with the unconditional `Φ⁻¹(1−α)` threshold.
pub fn naive_test(stats: &BaseStatistics, alpha: f64, config: &SelTestConfig) -> Result<TestOutcome> {
    let mut out = ost_test(stats, alpha, config)?;
    out.method = Method::Naive;
    out.warnings.push(WARN_NOT_CALIBRATED.to_string());
    if out.immediate_reject {
        return Ok(out);
    }
    out.threshold = std_normal_isf(alpha)?;
    out.p_value = std_normal_sf(out.statistic);
    out.v_minus = f64::NEG_INFINITY;
    out.reject = out.statistic > out.threshold;
    Ok(out)
}

fn selective_outcome(
    method: Method,
    tau: &[f64],
    sigma: &SymMatrix,
    rule: RankRule,
    alpha: f64,
    warnings: Vec<String>,
) -> Result<TestOutcome> {
    let opt = match rule {
        RankRule::ActiveSetSize => solve_ost(tau, sigma)?,
        RankRule::ProjectedRank => solve_ost_semidefinite(tau, sigma)?,
    };
    let z = compute_z(&opt, tau, sigma);
    let l = match rule {
        RankRule::ActiveSetSize => opt.l(),
        RankRule::ProjectedRank => {
            let proj = sigma.project(&opt.active_set);
            let eig = sym_eigen(&proj)?;
            pseudoinverse_from(&eig, RANK_TOL).1
        }
    };
    if l == 0 {
        return Err(Error::NumericalFailure(
            "selected direction has zero variance".into(),
        ));
    }
    let vm = if l == 1 {
        v_minus(
            &opt.beta_star,
            &z.z,
            sigma,
            &opt.active_set,
            rule == RankRule::ActiveSetSize,
        )?
    } else {
        f64::NEG_INFINITY
    };
    let threshold = ost_threshold(alpha, l, vm)?;
    let statistic = opt.snr;
    Ok(TestOutcome {
        method,
        statistic,
        threshold,
        p_value: selective_p_value(statistic, l, vm)?,
        reject: statistic > threshold,
        l,
        active_set: opt.active_set,
        v_minus: vm,
        immediate_reject: false,
        warnings,
    })
}

fn immediate(method: Method, alpha: f64, mut warnings: Vec<String>) -> TestOutcome {
    warnings.push(
        "immediate rejection: the statistic has signal along a null direction of the covariance"
            .into(),
    );
    TestOutcome {
        method,
        statistic: f64::INFINITY,
        threshold: std_normal_isf(alpha).unwrap_or(f64::NAN),
        p_value: 0.0,
        reject: true,
        l: 1,
        active_set: Vec::new(),
        v_minus: f64::NEG_INFINITY,
        immediate_reject: true,
        warnings,
    }
}

/// `(τᵀΣ⁻¹τ)^{1/2}` against `χ_d`; on the pseudoinverse path `Σ⁺` and
/// `χ_{rank Σ}`.
pub fn wald_test(stats: &BaseStatistics, alpha: f64, config: &SelTestConfig) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    let sp = spectral(stats, config)?;
    if sp.immediate_reject {
        return Ok(immediate(Method::Wald, alpha, sp.warnings));
    }
    let tau = &stats.tau;
    let (q, df) = match &sp.pinv {
        None => {
            let ch = sp.sigma.cholesky().ok_or_else(|| {
                Error::NumericalFailure("covariance failed to factor".into())
            })?;
            (dot(tau, &ch.solve(tau)), tau.len())
        }
        Some((pinv, rank)) => (pinv.quad_form(tau), *rank),
    };
    if df == 0 {
        return Err(Error::DegenerateInput("covariance is zero".into()));
    }
    let statistic = q.max(0.0).sqrt();
    let threshold = chi_quantile(df as u32, 1.0 - alpha)?;
    Ok(TestOutcome {
        method: Method::Wald,
        statistic,
        threshold,
        p_value: chi_sf(df as u32, statistic),
        reject: statistic > threshold,
        l: df,
        active_set: (0..tau.len()).collect(),
        v_minus: f64::NEG_INFINITY,
        immediate_reject: false,
        warnings: sp.warnings,
    })
}

/// Best single kernel `u* = argmax τ_u/σ_u` with a truncated-normal null.
pub fn base_test(stats: &BaseStatistics, alpha: f64, _config: &SelTestConfig) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    let tau = &stats.tau;
    let sigma = &stats.sigma;
    let d = tau.len();
    let sd: Vec<f64> = (0..d).map(|u| sigma.get(u, u).sqrt()).collect();
    if let Some(u) = (0..d).find(|&u| !(sd[u] > 0.0)) {
        return Err(Error::DegenerateInput(format!(
            "kernel {u} has zero variance"
        )));
    }
    let mut u_star = 0;
    for u in 1..d {
        if tau[u] / sd[u] > tau[u_star] / sd[u_star] {
            u_star = u;
        }
    }
    let s_star = sd[u_star];
    let statistic = tau[u_star] / s_star;
    let mut vm = f64::NEG_INFINITY;
    for j in 0..d {
        if j == u_star {
            continue;
        }
        let scale = s_star * sd[j];
        let den = scale - sigma.get(u_star, j);
        if den <= 1e-12 * scale {
            return Err(Error::DegenerateKernel(u_star, j));
        }
        let zj = tau[j] - sigma.get(j, u_star) * tau[u_star] / (s_star * s_star);
        vm = vm.max(s_star * zj / den);
    }
    let threshold = ost_threshold(alpha, 1, vm)?;
    Ok(TestOutcome {
        method: Method::Base,
        statistic,
        threshold,
        p_value: selective_p_value(statistic, 1, vm)?,
        reject: statistic > threshold,
        l: 1,
        active_set: vec![u_star],
        v_minus: vm,
        immediate_reject: false,
        warnings: Vec::new(),
    })
}

/// Data-splitting test from precomputed training and test statistics (both
/// carrying the same covariance).
pub fn split_test_from_stats(
    train: &BaseStatistics,
    test: &BaseStatistics,
    fraction: f64,
    alpha: f64,
    constraint: Constraint,
    config: &SelTestConfig,
) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    if train.d() != test.d() {
        return Err(Error::DimensionMismatch(train.d(), test.d()));
    }
    let mut warnings = Vec::new();
    let (tau_tr, tau_te, sigma) = match constraint {
        Constraint::SigmaBetaPos => {
            let canon = canonicalize(train, config)?;
            warnings.extend(canon.warnings);
            (
                canon.rho,
                canon.sigma_prime.mul_vec(&test.tau),
                canon.sigma_prime,
            )
        }
        Constraint::BetaPos => {
            let sp = spectral(train, config)?;
            warnings.extend(sp.warnings);
            (train.tau.clone(), test.tau.clone(), sp.sigma)
        }
    };
    let beta = match solve_ost_semidefinite(&tau_tr, &sigma) {
        Ok(opt) => opt.beta_star,
        Err(Error::DegenerateInput(_)) => {
            warnings.push(
                "training statistics vanish; fell back to the best single kernel".into(),
            );
            let mut e = vec![0.0; tau_tr.len()];
            e[best_single(&tau_tr, &sigma)] = 1.0;
            e
        }
        Err(e) => return Err(e),
    };
    let statistic = crate::optimizer::snr(&beta, &tau_te, &sigma)?;
    let threshold = std_normal_isf(alpha)?;
    let active_set: Vec<usize> = (0..beta.len()).filter(|&u| beta[u] > 0.0).collect();
    Ok(TestOutcome {
        method: Method::Split {
            fraction,
            constraint,
        },
        statistic,
        threshold,
        p_value: std_normal_sf(statistic),
        reject: statistic > threshold,
        l: active_set.len(),
        active_set,
        v_minus: f64::NEG_INFINITY,
        immediate_reject: false,
        warnings,
    })
}

fn best_single(tau: &[f64], sigma: &SymMatrix) -> usize {
    let mut best = 0;
    let ratio = |u: usize| tau[u] / sigma.get(u, u).max(f64::MIN_POSITIVE).sqrt();
    for u in 1..tau.len() {
        if ratio(u) > ratio(best) {
            best = u;
        }
    }
    best
}

/// Splits the tuples with a permutation drawn from stream `(seed, 0)`, learns
/// the combination on the training part and tests on the rest.
pub fn split_test(
    x: &Sample,
    y: &Sample,
    kernels: &[KernelSpec],
    train_fraction: f64,
    alpha: f64,
    constraint: Constraint,
    seed: u64,
    config: &SelTestConfig,
) -> Result<TestOutcome> {
    let h = HMatrix::compute(x, y, kernels)?;
    let mut rng = RngStream::new(seed, 0).generator();
    let plan = SplitPlan::new(h.n(), train_fraction, &mut rng)?;
    let (train, test) = h.split_statistics(&plan)?;
    split_test_from_stats(&train, &test, train_fraction, alpha, constraint, config)
}

/// Runs `method` on precomputed h-statistics. `permutation` orders the tuples
/// for split methods; the first `floor(f·n)` entries form the training part.
pub fn run_method(
    method: &Method,
    h: &HMatrix,
    full: &BaseStatistics,
    permutation: &[usize],
    alpha: f64,
    config: &SelTestConfig,
) -> Result<TestOutcome> {
    match *method {
        Method::Ost => ost_test(full, alpha, config),
        Method::Wald => wald_test(full, alpha, config),
        Method::Base => base_test(full, alpha, config),
        Method::Naive => naive_test(full, alpha, config),
        Method::OstBetaPos => ost_beta_pos_test(full, alpha, config),
        Method::Split {
            fraction,
            constraint,
        } => {
            let plan = SplitPlan::from_permutation(permutation, fraction)?;
            let (train, test) = h.split_statistics_with(&plan, &full.sigma)?;
            split_test_from_stats(&train, &test, fraction, alpha, constraint, config)
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{random_spd, std_normal_cdf, std_normal_quantile, truncated_normal_cdf};
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn stats(tau: &[f64], sigma: SymMatrix) -> BaseStatistics {
        BaseStatistics::new(tau.to_vec(), sigma, 100).unwrap()
    }

    fn cfg() -> SelTestConfig {
        SelTestConfig::default()
    }

    #[test]
    fn canonical_identity() {
        let c = canonicalize(&stats(&[1.0, -2.0], SymMatrix::identity(2)), &cfg()).unwrap();
        assert_eq!(c.rho, vec![1.0, -2.0]);
        assert_eq!(c.sigma_prime, SymMatrix::identity(2));
        assert_eq!(c.rank_rule, RankRule::ActiveSetSize);
        assert!(!c.immediate_reject);
    }

    #[test]
    fn canonical_singular_paths() {
        let s = SymMatrix::from_diag(&[1.0, 1e-20]);
        let c = canonicalize(&stats(&[1.0, 0.0], s.clone()), &cfg()).unwrap();
        assert!(!c.immediate_reject);
        assert_eq!(c.rank_rule, RankRule::ProjectedRank);
        assert_eq!(c.sigma_prime, SymMatrix::from_diag(&[1.0, 0.0]));
        assert_eq!(c.rank, 1);
        let c = canonicalize(&stats(&[1.0, 1.0], s), &cfg()).unwrap();
        assert!(c.immediate_reject);
    }

    #[test]
    fn v_minus_examples() {
        let opt = solve_ost(&[-1.0, -2.0], &SymMatrix::identity(2)).unwrap();
        let z = compute_z(&opt, &[-1.0, -2.0], &SymMatrix::identity(2));
        assert_eq!(v_minus_ost(&opt, &z, &SymMatrix::identity(2)).unwrap(), -2.0);
        let tau = [1.0, -2.0, -6.0];
        let opt = solve_ost(&tau, &SymMatrix::identity(3)).unwrap();
        let z = compute_z(&opt, &tau, &SymMatrix::identity(3));
        assert_eq!(z.z, vec![0.0, -2.0, -6.0]);
        assert_eq!(v_minus_ost(&opt, &z, &SymMatrix::identity(3)).unwrap(), -2.0);
        let opt = solve_ost(&[3.0], &SymMatrix::identity(1)).unwrap();
        let z = compute_z(&opt, &[3.0], &SymMatrix::identity(1));
        assert_eq!(v_minus_ost(&opt, &z, &SymMatrix::identity(1)).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn threshold_examples() {
        assert!((ost_threshold(0.05, 2, f64::NEG_INFINITY).unwrap() - 2.447746830680816).abs() < 1e-9);
        assert!((ost_threshold(0.05, 1, f64::NEG_INFINITY).unwrap() - 1.6448536269514722).abs() < 1e-9);
        let want = std_normal_quantile(0.95 * (1.0 - std_normal_cdf(1.0)) + std_normal_cdf(1.0)).unwrap();
        let got = ost_threshold(0.05, 1, 1.0).unwrap();
        assert!((got - want).abs() < 1e-9);
        assert!((got - 2.4119943957872017).abs() < 1e-9);
        assert!(ost_threshold(0.0, 1, 0.0).is_err());
        assert!(ost_threshold(1.0, 2, 0.0).is_err());
        assert!(ost_threshold(0.05, 1, f64::INFINITY).is_err());
    }

    #[test]
    fn ost_examples() {
        let o = ost_test(&stats(&[3.0, 4.0], SymMatrix::identity(2)), 0.05, &cfg()).unwrap();
        assert!((o.statistic - 5.0).abs() < 1e-12);
        assert_eq!(o.l, 2);
        assert!((o.threshold - 2.4477468).abs() < 1e-6);
        assert!(o.reject);

        let o = ost_test(&stats(&[-1.0, -2.0], SymMatrix::identity(2)), 0.05, &cfg()).unwrap();
        assert_eq!(o.statistic, -1.0);
        assert_eq!(o.l, 1);
        assert_eq!(o.v_minus, -2.0);
        let want = std_normal_quantile(0.95 * (1.0 - std_normal_cdf(-2.0)) + std_normal_cdf(-2.0)).unwrap();
        assert!((o.threshold - want).abs() < 1e-9);
        assert!((o.threshold - 1.6559843567138284).abs() < 1e-9);
        assert!(!o.reject);

        let o = ost_test(&stats(&[2.0], SymMatrix::identity(1)), 0.05, &cfg()).unwrap();
        assert_eq!(o.statistic, 2.0);
        assert!((o.threshold - 1.6448536).abs() < 1e-6);
        assert!(o.reject);
        assert!((o.p_value - std_normal_sf(2.0)).abs() < 1e-15);
    }

    #[test]
    fn immediate_reject_outcome() {
        let s = stats(&[1.0, 1.0], SymMatrix::from_diag(&[1.0, 1e-20]));
        let o = ost_test(&s, 0.05, &cfg()).unwrap();
        assert!(o.immediate_reject && o.reject);
        assert_eq!(o.p_value, 0.0);
        let o = wald_test(&s, 0.05, &cfg()).unwrap();
        assert!(o.immediate_reject && o.reject);
    }

    #[test]
    fn near_null_noise_does_not_reject() {
        // λ = 1e-12 with a projection of two null standard deviations.
        let s = stats(&[1.0, 2e-6], SymMatrix::from_diag(&[1.0, 1e-12]));
        let o = ost_test(&s, 0.05, &cfg()).unwrap();
        assert!(!o.immediate_reject);
        assert!(o.warnings.iter().any(|w| w.contains("pseudoinverse")));
        let s = stats(&[1.0, 1e-3], SymMatrix::from_diag(&[1.0, 1e-12]));
        assert!(ost_test(&s, 0.05, &cfg()).unwrap().immediate_reject);
    }

    #[test]
    fn singular_without_signal_uses_projected_rank() {
        // Two identical kernels plus an independent one.
        let sigma = SymMatrix::from_rows(&[
            vec![1.0, 1.0, 0.0],
            vec![1.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let s = stats(&[1.0, 1.0, 2.0], sigma);
        let o = ost_test(&s, 0.05, &cfg()).unwrap();
        assert!(!o.immediate_reject);
        assert!(o.l <= 2);
        // Σ⁺ = diag block (1/4)·[[1,1],[1,1]] ⊕ 1, so ρ = (0.5, 0.5, 2) and the
        // optimum matches the full-rank problem with one merged kernel.
        assert!((o.statistic - (1.0f64 + 4.0).sqrt()).abs() < 1e-9);
        let w = wald_test(&s, 0.05, &cfg()).unwrap();
        assert_eq!(w.l, 2);
        assert!((w.statistic - 5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn ridge_flag_warns_and_shrinks() {
        let s = stats(&[3.0, 4.0], SymMatrix::identity(2));
        let c = SelTestConfig { ridge: Some(1.0), ..cfg() };
        let o = ost_test(&s, 0.05, &c).unwrap();
        assert!((o.statistic - 5.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!(o.warnings.iter().any(|w| w.contains("ridge")));
    }

    #[test]
    fn wald_examples() {
        let o = wald_test(&stats(&[3.0, 4.0], SymMatrix::identity(2)), 0.05, &cfg()).unwrap();
        assert!((o.statistic - 5.0).abs() < 1e-12);
        assert!((o.threshold - 2.4477468).abs() < 1e-6);
        assert!(o.reject);
        let o = wald_test(&stats(&[0.0, 0.0], SymMatrix::identity(2)), 0.5, &cfg()).unwrap();
        assert_eq!(o.statistic, 0.0);
        assert!(!o.reject);
        let o = wald_test(&stats(&[2.0, 1.0], SymMatrix::from_diag(&[4.0, 1.0])), 0.05, &cfg()).unwrap();
        assert!((o.statistic - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn wald_squared_matches_direct_solve() {
        let mut rng = RngStream::new(12, 0).generator();
        for _ in 0..100 {
            let sigma = random_spd(&mut rng, 5, 0.1, 10.0);
            let tau: Vec<f64> = (0..5).map(|_| rng.sample(StandardNormal)).collect();
            let o = wald_test(&stats(&tau, sigma.clone()), 0.05, &cfg()).unwrap();
            let inv = crate::numerics::sym_inverse(&sigma).unwrap();
            let direct = inv.quad_form(&tau);
            assert!((o.statistic.powi(2) - direct).abs() < 1e-10 * (1.0 + direct));
        }
    }

    #[test]
    fn base_examples() {
        let o = base_test(&stats(&[2.0, 1.0], SymMatrix::identity(2)), 0.05, &cfg()).unwrap();
        assert_eq!(o.active_set, vec![0]);
        assert_eq!(o.statistic, 2.0);
        assert_eq!(o.v_minus, 1.0);
        assert!((o.threshold - 2.4119943957872017).abs() < 1e-9);
        assert!(!o.reject);

        let o = base_test(&stats(&[2.0], SymMatrix::identity(1)), 0.05, &cfg()).unwrap();
        assert!((o.threshold - 1.6448536).abs() < 1e-6);

        let o = base_test(&stats(&[2.0, -3.0], SymMatrix::identity(2)), 0.05, &cfg()).unwrap();
        assert_eq!(o.v_minus, -3.0);
        assert!(o.threshold < 1.65);
        assert!(o.reject);

        let dup = SymMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(
            base_test(&stats(&[1.0, 1.0], dup), 0.05, &cfg()),
            Err(Error::DegenerateKernel(0, 1))
        ));
    }

    #[test]
    fn naive_examples() {
        let o = naive_test(&stats(&[2.0, 1.0], SymMatrix::identity(2)), 0.05, &cfg()).unwrap();
        assert!((o.statistic - 5f64.sqrt()).abs() < 1e-12);
        assert!((o.threshold - 1.6448536).abs() < 1e-6);
        assert!(o.reject);
        assert!(o.warnings.iter().any(|w| w.starts_with("not-calibrated")));
        let s = stats(&[1.2], SymMatrix::from_diag(&[2.0]));
        let a = naive_test(&s, 0.05, &cfg()).unwrap();
        let b = ost_test(&s, 0.05, &cfg()).unwrap();
        assert_eq!((a.statistic, a.reject), (b.statistic, b.reject));
        assert!((a.threshold - b.threshold).abs() < 1e-15);
    }

    #[test]
    fn beta_pos_matches_ost_on_identity_and_d1() {
        for tau in [vec![3.0, -1.0, 0.5], vec![-0.3, -0.1, -2.0]] {
            let s = stats(&tau, SymMatrix::identity(3));
            let a = ost_test(&s, 0.05, &cfg()).unwrap();
            let b = ost_beta_pos_test(&s, 0.05, &cfg()).unwrap();
            assert_eq!(a.active_set, b.active_set);
            assert!((a.statistic - b.statistic).abs() < 1e-12);
            assert!((a.threshold - b.threshold).abs() < 1e-12);
        }
        let s = stats(&[0.7], SymMatrix::from_diag(&[3.0]));
        let a = ost_test(&s, 0.05, &cfg()).unwrap();
        let b = ost_beta_pos_test(&s, 0.05, &cfg()).unwrap();
        assert!((a.statistic - b.statistic).abs() < 1e-12);
        assert_eq!(a.reject, b.reject);
    }

    #[test]
    fn split_constraints_coincide_in_one_dimension() {
        let x = crate::numerics::rng_standard_normal(RngStream::new(1, 0), 400);
        let y: Vec<f64> = crate::numerics::rng_standard_normal(RngStream::new(1, 1), 400)
            .into_iter()
            .map(|v| v * 1.3)
            .collect();
        let (xs, ys) = (Sample::from_scalars(&x), Sample::from_scalars(&y));
        let k = [KernelSpec::gaussian(1.0).unwrap()];
        let a = split_test(&xs, &ys, &k, 0.5, 0.05, Constraint::SigmaBetaPos, 3, &cfg()).unwrap();
        let b = split_test(&xs, &ys, &k, 0.5, 0.05, Constraint::BetaPos, 3, &cfg()).unwrap();
        assert!((a.statistic - b.statistic).abs() < 1e-12);
        assert_eq!(a.reject, b.reject);
        assert_eq!(a.method.to_string(), "split0.5");
        assert_eq!(b.method.to_string(), "split0.5_betapos");
    }

    #[test]
    fn split_falls_back_on_zero_training_signal() {
        let train = stats(&[0.0, 0.0], SymMatrix::identity(2));
        let test = stats(&[1.0, 2.0], SymMatrix::identity(2));
        let o = split_test_from_stats(&train, &test, 0.5, 0.05, Constraint::BetaPos, &cfg()).unwrap();
        assert_eq!(o.statistic, 1.0);
        assert!(o.warnings.iter().any(|w| w.contains("fell back")));
    }

    #[test]
    fn method_names_roundtrip() {
        for s in ["ost", "wald", "base", "naive", "ost_beta_pos", "split0.1", "split0.5_betapos"] {
            assert_eq!(s.parse::<Method>().unwrap().to_string(), s);
        }
        assert!("split1.5".parse::<Method>().is_err());
        assert!("magic".parse::<Method>().is_err());
    }

    fn consistent(o: &TestOutcome, alpha: f64) -> bool {
        if (o.statistic - o.threshold).abs() <= 1e-10 * (1.0 + o.threshold.abs()) {
            return true;
        }
        o.reject == (o.statistic > o.threshold) && o.reject == (o.p_value < alpha)
            && (0.0..=1.0).contains(&o.p_value)
    }

    proptest! {
        #[test]
        fn reject_threshold_pvalue_agree(seed in 0u64..100_000, alpha in 0.001f64..0.5) {
            let mut rng = RngStream::new(seed, 3).generator();
            let d = rng.random_range(1..=6);
            let sigma = random_spd(&mut rng, d, 0.1, 10.0);
            let tau: Vec<f64> = (0..d).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
            let s = stats(&tau, sigma);
            for o in [
                ost_test(&s, alpha, &cfg()).unwrap(),
                wald_test(&s, alpha, &cfg()).unwrap(),
                base_test(&s, alpha, &cfg()).unwrap(),
                naive_test(&s, alpha, &cfg()).unwrap(),
                ost_beta_pos_test(&s, alpha, &cfg()).unwrap(),
            ] {
                prop_assert!(consistent(&o, alpha), "{:?}", o);
            }
        }

        #[test]
        fn threshold_monotone(a1 in 0.001f64..0.4, da in 0.001f64..0.3, v in -6.0f64..4.0, dv in 0.0f64..2.0) {
            let t1 = ost_threshold(a1, 1, v).unwrap();
            prop_assert!(ost_threshold(a1 + da, 1, v).unwrap() <= t1 + 1e-12);
            prop_assert!(ost_threshold(a1, 1, v + dv).unwrap() >= t1 - 1e-12);
            let f = truncated_normal_cdf(t1, v).unwrap();
            prop_assert!((f - (1.0 - a1)).abs() < 1e-9);
        }
    }
}
