//! Constrained signal-to-noise maximization.
//!
//! Solves `max_{β ≥ 0, ‖β‖ = 1} βᵀτ / (βᵀΣβ)^{1/2}`. When some `τ_u > 0`
//! the problem is equivalent to the convex quadratic program
//! `min βᵀΣβ  s.t.  β ≥ 0, τᵀβ = 1`, solved here with a primal active-set
//! method. When no coordinate of `τ` is positive the maximum sits at a single
//! coordinate. [`kkt_check`] certifies a solution against the optimality
//! conditions written in terms of the residual vector
//! `z = τ − Σβ (βᵀτ)/(βᵀΣβ)`, and [`enumerate_oracle`] brute-forces every
//! active set for testing.

use crate::error::{Error, Result};
use crate::numerics::{dot, norm, sym_eigen, sym_inverse, sym_pseudoinverse, SymMatrix};

/// Coordinates of a normalized maximizer below this value are set to zero.
pub const ZERO_THRESHOLD: f64 = 1e-9;

/// Tolerance the solver's output is certified to.
pub const KKT_TOL: f64 = 1e-8;

const PINV_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Two or more coordinates active.
    InteriorLike,
    /// One active coordinate, found while some `τ_u ≥ 0`.
    SingleCoordinate,
    /// Every `τ_u < 0`.
    AllNegative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub beta_star: Vec<f64>,
    /// Sorted indices with `beta_star[u] > 0`.
    pub active_set: Vec<usize>,
    pub snr: f64,
    pub kkt_residual: f64,
    pub branch: Branch,
}

impl OptResult {
    /// `l = |𝒰|`
    pub fn l(&self) -> usize {
        self.active_set.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZVector {
    pub z: Vec<f64>,
}

/// `βᵀτ / (βᵀΣβ)^{1/2}`
pub fn snr(beta: &[f64], tau: &[f64], sigma: &SymMatrix) -> Result<f64> {
    check_dims(beta, tau, sigma)?;
    let q = sigma.quad_form(beta);
    if !(q > 0.0) {
        return Err(Error::domain(format!(
            "βᵀΣβ = {q:e} is not positive; the ratio is undefined"
        )));
    }
    Ok(dot(beta, tau) / q.sqrt())
}

/// Gradient of [`snr`] with respect to `β`: `z / (βᵀΣβ)^{1/2}`.
pub fn snr_gradient(beta: &[f64], tau: &[f64], sigma: &SymMatrix) -> Result<Vec<f64>> {
    check_dims(beta, tau, sigma)?;
    let q = sigma.quad_form(beta);
    if !(q > 0.0) {
        return Err(Error::domain(format!(
            "βᵀΣβ = {q:e} is not positive; the gradient is undefined"
        )));
    }
    let z = residual(beta, tau, sigma);
    let s = q.sqrt();
    Ok(z.into_iter().map(|v| v / s).collect())
}

/// The unconstrained maximizer `Σ⁻¹μ / ‖Σ⁻¹μ‖`.
pub fn beta_infinity(mu: &[f64], sigma: &SymMatrix) -> Result<Vec<f64>> {
    if mu.len() != sigma.dim() {
        return Err(Error::DimensionMismatch(mu.len(), sigma.dim()));
    }
    let v = sym_inverse(sigma)?.mul_vec(mu);
    let nv = norm(&v);
    if !(nv > 0.0) {
        return Err(Error::domain("mu must be nonzero"));
    }
    Ok(v.into_iter().map(|x| x / nv).collect())
}

/// Maximizer for a positive definite `Σ`.
pub fn solve_ost(tau: &[f64], sigma: &SymMatrix) -> Result<OptResult> {
    check_input(tau, sigma)?;
    if sigma.cholesky().is_none() {
        let cond = sym_eigen(sigma)?.condition_number();
        return Err(Error::Singular { cond });
    }
    solve(tau, sigma, Mode::Definite)
}

/// Maximizer for a positive semidefinite `Σ` (the pseudoinverse path).
/// Equality-constrained subproblems use pseudoinverses of the free block, so
/// the returned maximizer is the minimum-norm one on its face.
pub fn solve_ost_semidefinite(tau: &[f64], sigma: &SymMatrix) -> Result<OptResult> {
    check_input(tau, sigma)?;
    solve(tau, sigma, Mode::Semidefinite)
}

/// `z = τ − Σβ* (β*ᵀτ)/(β*ᵀΣβ*)`
pub fn compute_z(opt: &OptResult, tau: &[f64], sigma: &SymMatrix) -> ZVector {
    ZVector {
        z: residual(&opt.beta_star, tau, sigma),
    }
}

/// Lower truncation point
/// `max_{u∉𝒰} z_u (βᵀΣβ)^{1/2} / (Σ_uu^{1/2}(βᵀΣβ)^{1/2} − (Σβ)_u)`;
/// `−∞` when every coordinate is active.
///
/// With `strict`, a non-positive denominator is an error. Otherwise
/// coordinates whose denominator vanishes relative to its scale are skipped,
/// which only happens for singular `Σ` (the coordinate is then parallel to
/// `β` in the `Σ` geometry and imposes no constraint).
pub fn v_minus(
    beta: &[f64],
    z: &[f64],
    sigma: &SymMatrix,
    active_set: &[usize],
    strict: bool,
) -> Result<f64> {
    let q = sigma.quad_form(beta).max(0.0).sqrt();
    let sb = sigma.mul_vec(beta);
    let mut best = f64::NEG_INFINITY;
    for u in 0..beta.len() {
        if active_set.contains(&u) {
            continue;
        }
        let scale = sigma.get(u, u).max(0.0).sqrt() * q;
        let den = scale - sb[u];
        if !(den > 1e-12 * scale) {
            if strict {
                return Err(Error::NumericalFailure(format!(
                    "truncation denominator for coordinate {u} is not positive ({den:e})"
                )));
            }
            continue;
        }
        best = best.max(z[u] * q / den);
    }
    Ok(best)
}

/// Largest violation of the optimality conditions: `z_u ≤ 0` off the active
/// set, `z_u = 0` on it, `snr ≥ 𝒱⁻(z)`, `β_u > 0` exactly on the active set
/// and `‖β‖ = 1`. Violations in `z` and the ratio are measured relative to
/// `max(1, ‖τ‖_∞)`.
pub fn kkt_check(opt: &OptResult, tau: &[f64], sigma: &SymMatrix) -> f64 {
    let beta = &opt.beta_star;
    if beta.len() != tau.len() || tau.len() != sigma.dim() {
        return f64::INFINITY;
    }
    let q = sigma.quad_form(beta);
    if !(q > 0.0) {
        return f64::INFINITY;
    }
    let scale = tau.iter().fold(1.0_f64, |m, t| m.max(t.abs()));
    let z = residual(beta, tau, sigma);
    let mut worst = 0.0_f64;
    for u in 0..beta.len() {
        let active = opt.active_set.contains(&u);
        if active {
            worst = worst.max(z[u].abs() / scale);
            worst = worst.max(ZERO_THRESHOLD - beta[u]);
        } else {
            worst = worst.max(z[u] / scale);
            worst = worst.max(beta[u].abs());
        }
    }
    let ratio = dot(beta, tau) / q.sqrt();
    match v_minus(beta, &z, sigma, &opt.active_set, false) {
        Ok(vm) => worst = worst.max((vm - ratio) / scale),
        Err(_) => return f64::INFINITY,
    }
    worst = worst.max((norm(beta) - 1.0).abs());
    if opt.active_set.is_empty() {
        return f64::INFINITY;
    }
    worst
}

/// Brute-force maximizer: the closed-form candidate `Σ̄τ/‖Σ̄τ‖` (with `Σ̄` the
/// pseudoinverse of `ΠΣΠ`) for every nonempty active set, plus every
/// coordinate vector, keeping the feasible one with the largest ratio.
pub fn enumerate_oracle(tau: &[f64], sigma: &SymMatrix) -> Result<OptResult> {
    check_input(tau, sigma)?;
    let d = tau.len();
    if d > 20 {
        return Err(Error::Capacity(format!(
            "enumeration over 2^{d} active sets is too large (limit d = 20)"
        )));
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut consider = |beta: Vec<f64>| {
        let q = sigma.quad_form(&beta);
        if !(q > 0.0) {
            return;
        }
        let r = dot(&beta, tau) / q.sqrt();
        if best.as_ref().map_or(true, |(b, _)| r > *b) {
            best = Some((r, beta));
        }
    };
    for u in 0..d {
        let mut e = vec![0.0; d];
        e[u] = 1.0;
        consider(e);
    }
    for mask in 1u32..(1u32 << d) {
        if mask.count_ones() < 2 {
            continue;
        }
        let idx: Vec<usize> = (0..d).filter(|&u| mask & (1 << u) != 0).collect();
        let tau_f: Vec<f64> = idx.iter().map(|&u| tau[u]).collect();
        let w = solve_block(sigma, &idx, &tau_f, Mode::Semidefinite)?;
        let nw = norm(&w);
        if !(nw > 0.0) || w.iter().any(|&v| v / nw < -1e-12) {
            continue;
        }
        let mut beta = vec![0.0; d];
        for (k, &u) in idx.iter().enumerate() {
            beta[u] = (w[k] / nw).max(0.0);
        }
        consider(beta);
    }
    let (_, beta) = best.ok_or_else(|| Error::NumericalFailure("no feasible candidate".into()))?;
    let all_negative = tau.iter().all(|&t| t < 0.0);
    finish(beta, tau, sigma, all_negative)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Definite,
    Semidefinite,
}

fn solve(tau: &[f64], sigma: &SymMatrix, mode: Mode) -> Result<OptResult> {
    let d = tau.len();
    let max_tau = tau.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max_tau <= 0.0 {
        // The ratio is negative (or zero) everywhere; maximizing it means
        // maximizing a convex function over a simplex, so a vertex wins.
        let u = best_coordinate(tau, sigma, |_| true).ok_or_else(|| {
            Error::DegenerateInput("covariance has no positive diagonal entry".into())
        })?;
        let mut beta = vec![0.0; d];
        beta[u] = 1.0;
        return finish(beta, tau, sigma, tau.iter().all(|&t| t < 0.0));
    }

    let scale = tau.iter().fold(0.0_f64, |m, t| m.max(t.abs()));
    let u0 = best_coordinate(tau, sigma, |t| t > 0.0).ok_or_else(|| {
        Error::DegenerateInput("no coordinate with positive tau has positive variance".into())
    })?;
    let mut free = vec![u0];
    let mut beta = vec![0.0; d];
    beta[u0] = 1.0 / tau[u0];
    let mut just_added: Option<usize> = None;

    let max_iter = 50 * d;
    let mut converged = false;
    for _ in 0..max_iter {
        let tau_f: Vec<f64> = free.iter().map(|&u| tau[u]).collect();
        let w = solve_block(sigma, &free, &tau_f, mode)?;
        let denom = dot(&tau_f, &w);
        if !(denom > 0.0) || !denom.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "active-set subproblem has non-positive curvature ({denom:e})"
            )));
        }
        let cand: Vec<f64> = w.iter().map(|v| v / denom).collect();

        if cand.iter().all(|&c| c > 0.0) {
            beta.iter_mut().for_each(|b| *b = 0.0);
            for (k, &u) in free.iter().enumerate() {
                beta[u] = cand[k];
            }
            // Off the free set z_u = τ_u − (Σβ)_u / λ with λ = 1/denom.
            let sb = sigma.mul_vec(&beta);
            let mut entering: Option<(usize, f64)> = None;
            for u in 0..d {
                if free.contains(&u) {
                    continue;
                }
                let zu = tau[u] - sb[u] * denom;
                if zu > 1e-13 * scale && entering.map_or(true, |(_, b)| zu > b) {
                    entering = Some((u, zu));
                }
            }
            match entering {
                None => {
                    converged = true;
                    break;
                }
                Some((u, _)) => {
                    let pos = free.partition_point(|&v| v < u);
                    free.insert(pos, u);
                    just_added = Some(u);
                }
            }
        } else {
            let mut step = 1.0;
            let mut blocking = None;
            for (k, &u) in free.iter().enumerate() {
                if cand[k] <= 0.0 {
                    let t = beta[u] / (beta[u] - cand[k]);
                    if t < step {
                        step = t;
                        blocking = Some(k);
                    }
                }
            }
            let k = blocking.expect("a non-positive candidate entry blocks the step");
            if step <= 0.0 && just_added == Some(free[k]) {
                // The entering coordinate cannot grow: its multiplier was zero
                // up to rounding, so the previous point is optimal.
                free.remove(k);
                converged = true;
                break;
            }
            for (j, &u) in free.iter().enumerate() {
                beta[u] += step * (cand[j] - beta[u]);
            }
            beta[free[k]] = 0.0;
            free.remove(k);
            free.retain(|&u| beta[u] > 0.0);
            just_added = None;
            if free.is_empty() {
                return Err(Error::NumericalFailure(
                    "active-set iteration emptied the free set".into(),
                ));
            }
        }
    }
    if !converged {
        return Err(Error::NumericalFailure(format!(
            "active-set solver did not converge in {max_iter} iterations"
        )));
    }
    let out = finish(beta, tau, sigma, false)?;
    if out.l() >= 2 && out.snr < -1e-12 * scale {
        return Err(Error::NumericalFailure(format!(
            "solver returned l = {} with negative ratio {}",
            out.l(),
            out.snr
        )));
    }
    Ok(out)
}

/// Normalizes, applies the zero threshold and fills in the diagnostics.
fn finish(mut beta: Vec<f64>, tau: &[f64], sigma: &SymMatrix, all_negative: bool) -> Result<OptResult> {
    for _ in 0..2 {
        let nb = norm(&beta);
        if !(nb > 0.0) {
            return Err(Error::NumericalFailure("maximizer vanished".into()));
        }
        for b in beta.iter_mut() {
            *b /= nb;
            if *b < ZERO_THRESHOLD {
                *b = 0.0;
            }
        }
    }
    let active_set: Vec<usize> = (0..beta.len()).filter(|&u| beta[u] > 0.0).collect();
    let snr = snr(&beta, tau, sigma)?;
    let branch = if all_negative {
        Branch::AllNegative
    } else if active_set.len() == 1 {
        Branch::SingleCoordinate
    } else {
        Branch::InteriorLike
    };
    let mut out = OptResult {
        beta_star: beta,
        active_set,
        snr,
        kkt_residual: 0.0,
        branch,
    };
    out.kkt_residual = kkt_check(&out, tau, sigma);
    Ok(out)
}

/// `argmax τ_u / √Σ_uu` over coordinates passing `keep`; lowest index on ties.
fn best_coordinate(tau: &[f64], sigma: &SymMatrix, keep: impl Fn(f64) -> bool) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (u, &t) in tau.iter().enumerate() {
        let s = sigma.get(u, u);
        if !keep(t) || !(s > 0.0) {
            continue;
        }
        let r = t / s.sqrt();
        if best.map_or(true, |(_, b)| r > b) {
            best = Some((u, r));
        }
    }
    best.map(|(u, _)| u)
}

/// `Σ_FF⁻¹ τ_F` (pseudoinverse in semidefinite mode).
fn solve_block(sigma: &SymMatrix, free: &[usize], tau_f: &[f64], mode: Mode) -> Result<Vec<f64>> {
    let sub = sigma.submatrix(free);
    if let Some(ch) = sub.cholesky() {
        if mode == Mode::Definite {
            return Ok(ch.solve(tau_f));
        }
        // Cholesky may succeed on a numerically singular block; only trust it
        // when the block is comfortably conditioned.
        let eig = sym_eigen(&sub)?;
        if eig.condition_number() < 1e8 {
            return Ok(ch.solve(tau_f));
        }
    } else if mode == Mode::Definite {
        return Err(Error::NumericalFailure(
            "principal submatrix of a positive definite matrix failed to factor".into(),
        ));
    }
    let (pinv, _) = sym_pseudoinverse(&sub, PINV_RANK_TOL)?;
    Ok(pinv.mul_vec(tau_f))
}

fn residual(beta: &[f64], tau: &[f64], sigma: &SymMatrix) -> Vec<f64> {
    let sb = sigma.mul_vec(beta);
    let q = dot(beta, &sb);
    let c = dot(beta, tau) / q;
    tau.iter().zip(&sb).map(|(t, s)| t - s * c).collect()
}

fn check_dims(beta: &[f64], tau: &[f64], sigma: &SymMatrix) -> Result<()> {
    if beta.len() != tau.len() {
        return Err(Error::DimensionMismatch(beta.len(), tau.len()));
    }
    if tau.len() != sigma.dim() {
        return Err(Error::DimensionMismatch(tau.len(), sigma.dim()));
    }
    Ok(())
}

fn check_input(tau: &[f64], sigma: &SymMatrix) -> Result<()> {
    if tau.len() != sigma.dim() {
        return Err(Error::DimensionMismatch(tau.len(), sigma.dim()));
    }
    if !tau.iter().all(|t| t.is_finite()) || !sigma.is_finite() {
        return Err(Error::domain("tau and sigma must be finite"));
    }
    if tau.iter().all(|&t| t == 0.0) {
        return Err(Error::DegenerateInput(
            "tau is the zero vector; the maximizer is not well defined".into(),
        ));
    }
    Ok(())
}
