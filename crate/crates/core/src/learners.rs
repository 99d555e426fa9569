//! Online PCA learners, hyperparameter derivations and condition validators.
//!
//! All step functions are pure: they take a [`LearnerState`] and one block of
//! observations and return the next state. A block's observations are only
//! touched after the caller has read the current prediction.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::stream_model::{block_length_for, ModelStats};
use crate::symmat::{self, normalized, SymMatrix, Vector, TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LearnerKind {
    /// One power-iteration step per block.
    NonconvexOga,
    /// Exact top eigenvector of the lifted rank-one update.
    RankOneOga,
    /// Projected gradient ascent over the spectrahedron.
    ConvexOga,
    /// Never moves from its initial vector.
    Fixed,
}

impl LearnerKind {
    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::NonconvexOga => "nonconvex_oga",
            LearnerKind::RankOneOga => "rank_one_oga",
            LearnerKind::ConvexOga => "convex_oga",
            LearnerKind::Fixed => "fixed",
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nonconvex_oga" => Ok(LearnerKind::NonconvexOga),
            "rank_one_oga" => Ok(LearnerKind::RankOneOga),
            "convex_oga" => Ok(LearnerKind::ConvexOga),
            "fixed" => Ok(LearnerKind::Fixed),
            other => Err(Error::Config(format!("unknown learner kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    w_hat: Vector,
    t: usize,
    kind: LearnerKind,
    lifted: Option<SymMatrix>,
}

impl LearnerState {
    /// Starts a learner at `w0 / ‖w0‖`. The convex learner lifts it to `w0 w0ᵀ`.
    pub fn new(kind: LearnerKind, w0: &Vector) -> Result<Self> {
        if w0.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("initial vector has non-finite entries"));
        }
        let w_hat = normalized(w0).ok_or_else(|| Error::invalid("initial vector is zero"))?;
        let lifted = (kind == LearnerKind::ConvexOga).then(|| SymMatrix::outer(&w_hat));
        Ok(LearnerState {
            w_hat,
            t: 0,
            kind,
            lifted,
        })
    }

    /// Convex learner started from an arbitrary member of the spectrahedron.
    pub fn convex_from_matrix(w: SymMatrix) -> Result<Self> {
        let e = symmat::eig_sym(&w)?;
        if (w.trace() - 1.0).abs() > TOL.trace || e.eigenvalues().last().is_some_and(|l| *l < -TOL.psd) {
            return Err(Error::invalid("matrix is not in the spectrahedron"));
        }
        Ok(LearnerState {
            w_hat: e.vector(0),
            t: 0,
            kind: LearnerKind::ConvexOga,
            lifted: Some(w),
        })
    }

    /// The prediction `ŵ_t` for the next block.
    pub fn w_hat(&self) -> &Vector {
        &self.w_hat
    }

    /// Number of completed steps.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn kind(&self) -> LearnerKind {
        self.kind
    }

    /// The lifted iterate `W_t` of the convex learner.
    pub fn lifted(&self) -> Option<&SymMatrix> {
        self.lifted.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.w_hat.len()
    }

    /// Dispatches to the step function of this learner's kind. The
    /// certificate is present only for the rank-one learner.
    pub fn step(&self, block: &[Vector], eta: f64, alpha: f64) -> Result<(LearnerState, Option<bool>)> {
        match self.kind {
            LearnerKind::NonconvexOga => nonconvex_oga_step(self, block, eta, alpha).map(|s| (s, None)),
            LearnerKind::RankOneOga => rank_one_oga_step(self, block, eta, alpha).map(|(s, c)| (s, Some(c))),
            LearnerKind::ConvexOga => convex_oga_step(self, block, eta, alpha).map(|s| (s, None)),
            LearnerKind::Fixed => {
                check_block(self, block)?;
                Ok((self.advanced(self.w_hat.clone(), None), None))
            }
        }
    }

    fn advanced(&self, w_hat: Vector, lifted: Option<SymMatrix>) -> LearnerState {
        LearnerState {
            w_hat,
            t: self.t + 1,
            kind: self.kind,
            lifted,
        }
    }
}

fn check_kind(state: &LearnerState, kind: LearnerKind) -> Result<()> {
    if state.kind != kind {
        return Err(Error::invalid(format!("{} step applied to a {} learner", kind, state.kind)));
    }
    Ok(())
}

fn check_block(state: &LearnerState, block: &[Vector]) -> Result<()> {
    let d = state.dim();
    if let Some((i, x)) = block.iter().enumerate().find(|(_, x)| x.len() != d) {
        return Err(Error::invalid(format!(
            "observation {i} has dimension {}, learner dimension is {d}",
            x.len()
        )));
    }
    Ok(())
}

fn check_rates(eta: f64, alpha: f64) -> Result<()> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::invalid(format!("η must be finite and non-negative, got {eta}")));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("α must be finite and non-negative, got {alpha}")));
    }
    if eta * alpha >= 1.0 {
        return Err(Error::invalid(format!("η·α = {} must be below 1", eta * alpha)));
    }
    Ok(())
}

/// Flips `v` so it points the same way as `prev`.
fn align_sign(mut v: Vector, prev: &Vector) -> Vector {
    if v.dot(prev) < 0.0 {
        v.neg_mut();
    }
    v
}

/// `ŵ ← ((1−ηα)ŵ + η Σ x (xᵀŵ)) / ‖·‖`, in `O(ℓd)` without forming `Σ x xᵀ`.
pub fn nonconvex_oga_step(state: &LearnerState, block: &[Vector], eta: f64, alpha: f64) -> Result<LearnerState> {
    check_kind(state, LearnerKind::NonconvexOga)?;
    check_block(state, block)?;
    check_rates(eta, alpha)?;
    let w = &state.w_hat;
    let mut u = w * (1.0 - eta * alpha);
    for x in block {
        u.axpy(eta * x.dot(w), x, 1.0);
    }
    let norm = u.norm();
    if !(norm >= TOL.degenerate) {
        return Err(Error::DegenerateUpdate(format!(
            "nonconvex update norm {norm:e} at step {}",
            state.t
        )));
    }
    Ok(state.advanced(u / norm, None))
}

/// Largest two eigenvalues and the top eigenvector of
/// `W = (1−ηα) w wᵀ + η Σ x xᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedEigen {
    pub lambda1: f64,
    pub lambda2: f64,
    pub vector: Vector,
}

/// Eigen-summary of the lifted rank-one update, computed on the
/// `d×(ℓ+1)` factor `F = [√(1−ηα) w, √η x₁, …, √η x_ℓ]` through `FᵀF`
/// whenever `ℓ+1 < d`. The returned vector is sign-aligned with `w`.
pub fn lifted_eigen(w: &Vector, block: &[Vector], eta: f64, alpha: f64) -> Result<LiftedEigen> {
    check_rates(eta, alpha)?;
    let d = w.len();
    let k = block.len() + 1;
    let a = (1.0 - eta * alpha).sqrt();
    let s = eta.sqrt();
    let mut f = DMatrix::<f64>::zeros(d, k);
    f.column_mut(0).copy_from(&(w * a));
    for (j, x) in block.iter().enumerate() {
        if x.len() != d {
            return Err(Error::invalid(format!("observation {j} has dimension {}, expected {d}", x.len())));
        }
        f.column_mut(j + 1).copy_from(&(x * s));
    }
    let (values, top) = if k < d {
        let gram = SymMatrix::symmetrized(f.transpose() * &f);
        let e = symmat::eig_sym(&gram)?;
        let (mu, v) = e.top();
        if !(mu > TOL.degenerate) {
            return Err(Error::DegenerateUpdate(format!("lifted matrix has top eigenvalue {mu:e}")));
        }
        let u = (&f * v) / mu.sqrt();
        (e.eigenvalues().to_vec(), u.normalize())
    } else {
        let wm = SymMatrix::symmetrized(&f * f.transpose());
        let e = symmat::eig_sym(&wm)?;
        let (mu, u) = e.top();
        if !(mu > TOL.degenerate) {
            return Err(Error::DegenerateUpdate(format!("lifted matrix has top eigenvalue {mu:e}")));
        }
        (e.eigenvalues().to_vec(), u)
    };
    Ok(LiftedEigen {
        lambda1: values[0],
        lambda2: values.get(1).copied().unwrap_or(0.0).max(0.0),
        vector: align_sign(top, w),
    })
}

/// Exact top eigenvector of `(1−ηα)ŵŵᵀ + η Σ x xᵀ`, plus the rank-one
/// certificate evaluated on the pre-step iterate.
pub fn rank_one_oga_step(
    state: &LearnerState,
    block: &[Vector],
    eta: f64,
    alpha: f64,
) -> Result<(LearnerState, bool)> {
    check_kind(state, LearnerKind::RankOneOga)?;
    check_block(state, block)?;
    let certificate = rank_one_condition_for_block(&state.w_hat, block, alpha)?;
    let lifted = lifted_eigen(&state.w_hat, block, eta, alpha)?;
    Ok((state.advanced(lifted.vector, None), certificate))
}

/// `λ₁` and `λ₂` of `X = Σ x xᵀ` from the smaller of the `ℓ×ℓ` Gram matrix
/// and `X` itself. Missing eigenvalues count as zero.
fn block_top_two(block: &[Vector], d: usize) -> Result<(f64, f64)> {
    let values = if block.len() < d {
        let l = block.len();
        let gram = DMatrix::from_fn(l, l, |i, j| block[i].dot(&block[j]));
        symmat::eigenvalues_sym(&SymMatrix::symmetrized(gram))?
    } else {
        symmat::eigenvalues_sym(&SymMatrix::sum_of_outers(d, block))?
    };
    Ok((
        values.first().copied().unwrap_or(0.0),
        values.get(1).copied().unwrap_or(0.0).max(0.0),
    ))
}

fn rank_one_condition_for_block(w: &Vector, block: &[Vector], alpha: f64) -> Result<bool> {
    if block.is_empty() {
        return Ok(alpha <= TOL.psd);
    }
    let (l1, l2) = block_top_two(block, w.len())?;
    let wxw: f64 = block.iter().map(|x| x.dot(w).powi(2)).sum();
    Ok(wxw >= (l1 + l2 + alpha) / 2.0 - 1e-9)
}

/// `wᵀXw ≥ (λ₁(X) + λ₂(X) + α)/2 − 1e−9`: when it holds, the spectrahedron
/// projection of `(1−ηα)wwᵀ + ηX` is rank one. `η` does not enter.
pub fn rank_one_condition(w: &Vector, x: &SymMatrix, _eta: f64, alpha: f64) -> bool {
    let Ok(values) = symmat::eigenvalues_sym(x) else {
        return false;
    };
    let l1 = values[0];
    let l2 = values.get(1).copied().unwrap_or(0.0);
    x.quadratic_form(w) >= (l1 + l2 + alpha) / 2.0 - 1e-9
}

/// `W ← Π_S[(1−ηα)W + ηX]` with a full eigendecomposition. The prediction
/// is the top eigenvector of the new `W`.
pub fn convex_oga_step(state: &LearnerState, block: &[Vector], eta: f64, alpha: f64) -> Result<LearnerState> {
    check_kind(state, LearnerKind::ConvexOga)?;
    check_block(state, block)?;
    check_rates(eta, alpha)?;
    let d = state.dim();
    let mut m = state.lifted.clone().expect("convex learner carries its lifted iterate");
    m.scale_add(1.0 - eta * alpha, 0.0, &SymMatrix::zeros(d));
    for x in block {
        m.add_outer(x, eta);
    }
    let proj = symmat::spectrahedron_project_full(&m)?;
    let top = align_sign(proj.eigen.vector(0), &state.w_hat);
    Ok(state.advanced(top, Some(proj.matrix)))
}

/// Top eigenvector of `(1/n) Σ_{i<n} x_i x_iᵀ`, sign-canonicalized.
pub fn warm_start(samples: &[Vector], n: usize) -> Result<Vector> {
    if n == 0 {
        return Err(Error::invalid("warm start needs at least one sample"));
    }
    if n > samples.len() {
        return Err(Error::InsufficientData(format!(
            "warm start asks for {n} samples, {} available",
            samples.len()
        )));
    }
    let d = samples[0].len();
    let mut c = SymMatrix::sum_of_outers(d, &samples[..n]);
    c.scale_add(1.0 / n as f64, 0.0, &SymMatrix::zeros(d));
    if c.trace() <= 0.0 {
        return Err(Error::DegenerateUpdate("warm-start samples are all zero".into()));
    }
    Ok(symmat::top_eigenpair(&c)?.1)
}

/// Samples needed for the warm start to reach alignment
/// `1 − c(δ−V²)/(2λ₁)` with probability `1 − p`:
/// `⌈131072 (R+V)⁴ λ₁ ln(2d/p) / (19 c δ³)⌉`.
pub fn warm_start_sample_size(stats: &ModelStats, c: f64, p: f64, d: usize) -> Result<usize> {
    let ModelStats {
        radius,
        perturbation: v,
        lambda1,
        eigengap: delta,
    } = *stats;
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::invalid(format!("c must lie in (0, 1], got {c}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("p must lie in (0, 1), got {p}")));
    }
    if d == 0 || !(lambda1 > 0.0) || !(delta > 0.0) {
        return Err(Error::invalid("warm start needs d ≥ 1, λ₁ > 0 and δ > 0"));
    }
    let needed = (32.0 * lambda1 * v.powi(4) / c).cbrt();
    if delta < needed {
        return Err(Error::ModelViolation(format!(
            "warm start requires δ ≥ (32 λ₁ V⁴ / c)^(1/3): δ = {delta} < {needed}"
        )));
    }
    let n = 131072.0 * (radius + v).powi(4) * lambda1 * (2.0 * d as f64 / p).ln() / (19.0 * c * delta.powi(3));
    if n >= usize::MAX as f64 {
        return Err(Error::InsufficientData(format!("warm-start sample size {n:e} overflows")));
    }
    Ok(n.ceil() as usize)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaSchedule {
    Constant(f64),
    /// `η_t = 1/(α t + T₀)`.
    Decaying { alpha: f64, t0: f64 },
}

impl EtaSchedule {
    /// Learning rate for block `t ≥ 1`.
    pub fn eta(&self, t: usize) -> f64 {
        match *self {
            EtaSchedule::Constant(eta) => eta,
            EtaSchedule::Decaying { alpha, t0 } => 1.0 / (alpha * t as f64 + t0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    /// `ℓ`.
    pub block_length: usize,
    pub schedule: EtaSchedule,
    /// `α ≥ 0`.
    pub alpha: f64,
    /// Approximation target `γ` at `t = 1`, when derived.
    pub gamma: Option<f64>,
    /// `ε` used to size the block, when derived.
    pub epsilon: Option<f64>,
    /// Failure probability, when derived.
    pub p: Option<f64>,
    /// Number of full blocks `T = ⌊N/ℓ⌋`, when derived.
    pub blocks: Option<usize>,
    /// Required initial alignment `(w₁ᵀx)²`, when derived.
    pub init_threshold: Option<f64>,
}

impl HyperParams {
    pub fn manual(block_length: usize, eta: f64, alpha: f64) -> Result<Self> {
        if block_length == 0 {
            return Err(Error::invalid("block length must be at least 1"));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::invalid(format!("η must be positive, got {eta}")));
        }
        check_rates(eta, alpha)?;
        Ok(HyperParams {
            block_length,
            schedule: EtaSchedule::Constant(eta),
            alpha,
            gamma: None,
            epsilon: None,
            p: None,
            blocks: None,
            init_threshold: None,
        })
    }

    pub fn eta(&self, t: usize) -> f64 {
        self.schedule.eta(t)
    }
}

/// `(δ² − V⁴ − 2V²λ₁)`, the quantity every derivation needs positive.
fn gap_excess(stats: &ModelStats) -> f64 {
    let v2 = stats.perturbation * stats.perturbation;
    stats.eigengap * stats.eigengap - v2 * v2 - 2.0 * v2 * stats.lambda1
}

fn check_stats(stats: &ModelStats) -> Result<()> {
    let ModelStats {
        radius,
        perturbation,
        lambda1,
        eigengap,
    } = *stats;
    if !(radius > 0.0 && perturbation >= 0.0 && lambda1 > 0.0 && eigengap > 0.0)
        || ![radius, perturbation, lambda1, eigengap].iter().all(|x| x.is_finite())
    {
        return Err(Error::invalid(format!("invalid model statistics {stats:?}")));
    }
    Ok(())
}

/// `ε = (δ² − V²(V² + 2λ₁)) / (72 λ₁)`.
pub fn theorem_epsilon(stats: &ModelStats) -> Result<f64> {
    check_stats(stats)?;
    let eps = gap_excess(stats) / (72.0 * stats.lambda1);
    if !(eps > 0.0) {
        return Err(Error::ModelViolation(format!(
            "δ² − V⁴ − 2V²λ₁ = {} must be positive",
            gap_excess(stats)
        )));
    }
    Ok(eps)
}

/// Smallest `ℓ ≤ N` with `ℓ ≥ block_length_for(ε, p, d, ⌊N/ℓ⌋, R)`.
///
/// The right side is non-increasing in `ℓ`, so the set of consistent block
/// lengths is an interval ending at `N` and bisection finds its left end.
pub fn joint_block_length(epsilon: f64, p: f64, d: usize, n: usize, radius: f64) -> Result<usize> {
    if n == 0 {
        return Err(Error::InsufficientData("stream length N is zero".into()));
    }
    let required = |ell: usize| block_length_for(epsilon, p, d, n / ell, radius);
    let at_n = required(n)?;
    if at_n > n {
        return Err(Error::InsufficientData(format!(
            "block length {at_n} exceeds stream length {n}"
        )));
    }
    let (mut lo, mut hi) = (1usize, n);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if mid >= required(mid)? {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(lo)
}

/// Constant-rate parameters: `η = 1/(√T ℓ (R+V)²)`, `α = 0`.
pub fn derive_theorem1_params(stats: &ModelStats, n: usize, d: usize, p: f64) -> Result<HyperParams> {
    let eps = theorem_epsilon(stats)?;
    let ell = joint_block_length(eps, p, d, n, stats.radius)?;
    let blocks = n / ell;
    let rv2 = (stats.radius + stats.perturbation).powi(2);
    let eta = 1.0 / ((blocks as f64).sqrt() * ell as f64 * rv2);
    let gamma = 33f64.sqrt() * (eta * ell as f64 * rv2).powi(2);
    let ratio = (stats.eigengap - stats.perturbation.powi(2)) / (2.0 * stats.lambda1);
    let init_threshold = 1.0 - ratio * (1.0 - stats.eigengap / (9.0 * stats.lambda1));
    Ok(HyperParams {
        block_length: ell,
        schedule: EtaSchedule::Constant(eta),
        alpha: 0.0,
        gamma: Some(gamma),
        epsilon: Some(eps),
        p: Some(p),
        blocks: Some(blocks),
        init_threshold: Some(init_threshold),
    })
}

/// Regularized parameters: `α = ℓ(δ² − V⁴ − 2V²λ₁)/(10(δ+V²))`,
/// `η_t = 1/(αt + T₀)` with
/// `T₀ = max{4ℓλ₁(V²+4ε)/ε, ℓ(R+V)², 72ℓλ₁, ℓ(R+V)⁴/ε}`.
pub fn derive_theorem2_params(stats: &ModelStats, n: usize, d: usize, p: f64) -> Result<HyperParams> {
    let eps = theorem_epsilon(stats)?;
    let ell = joint_block_length(eps, p, d, n, stats.radius)?;
    let l = ell as f64;
    let v2 = stats.perturbation.powi(2);
    let l1 = stats.lambda1;
    let delta = stats.eigengap;
    let rv2 = (stats.radius + stats.perturbation).powi(2);
    let alpha = l * gap_excess(stats) / (10.0 * (delta + v2));
    let t0 = [
        4.0 * l * l1 * (v2 + 4.0 * eps) / eps,
        l * rv2,
        72.0 * l * l1,
        l * rv2 * rv2 / eps,
    ]
    .into_iter()
    .fold(f64::NEG_INFINITY, f64::max);
    let schedule = EtaSchedule::Decaying { alpha, t0 };
    let gamma = 33f64.sqrt() * (schedule.eta(1) * l * rv2).powi(2);
    let ratio = (delta - v2) / (2.0 * l1);
    let init_threshold = 1.0 - ratio * (0.9 - delta / (9.0 * l1));
    Ok(HyperParams {
        block_length: ell,
        schedule,
        alpha,
        gamma: Some(gamma),
        epsilon: Some(eps),
        p: Some(p),
        blocks: Some(n / ell),
        init_threshold: Some(init_threshold),
    })
}

/// One inequality `lhs ≤ rhs` (or `≥` for the init bound) with its margin;
/// a negative margin means the inequality fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Condition {
    pub ok: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

impl Condition {
    fn at_most(lhs: f64, rhs: f64) -> Self {
        Condition {
            ok: lhs <= rhs,
            lhs,
            rhs,
            margin: rhs - lhs,
        }
    }

    fn at_least(lhs: f64, rhs: f64) -> Self {
        Condition {
            ok: lhs >= rhs,
            lhs,
            rhs,
            margin: lhs - rhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoodProjReport {
    pub epsilon: Condition,
    pub eta: Condition,
    pub gamma: Condition,
    pub alpha: Condition,
    pub init: Condition,
    pub overall_ok: bool,
}

impl GoodProjReport {
    pub fn conditions(&self) -> [(&'static str, Condition); 5] {
        [
            ("epsilon", self.epsilon),
            ("eta", self.eta),
            ("gamma", self.gamma),
            ("alpha", self.alpha),
            ("init", self.init),
        ]
    }

    /// Names of the failing inequalities.
    pub fn failures(&self) -> Vec<&'static str> {
        self.conditions().into_iter().filter(|(_, c)| !c.ok).map(|(n, _)| n).collect()
    }
}

/// Checks the five conditions under which the rank-one projection keeps the
/// iterates aligned. Rate-dependent conditions are evaluated at `t = 1`,
/// where `η_t` is largest and each of them is tightest. When `hp.gamma` is
/// unset, `γ₁ = √33(η₁ℓ(R+V)²)²` from a single power step is used.
pub fn good_proj_validate(hp: &HyperParams, stats: &ModelStats, epsilon: f64, init_alignment: f64) -> GoodProjReport {
    let l = hp.block_length as f64;
    let v2 = stats.perturbation.powi(2);
    let l1 = stats.lambda1;
    let delta = stats.eigengap;
    let rv2 = (stats.radius + stats.perturbation).powi(2);
    let excess = gap_excess(stats);
    let eta1 = hp.eta(1);
    let gamma1 = hp.gamma.unwrap_or_else(|| 33f64.sqrt() * (eta1 * l * rv2).powi(2));

    let epsilon_c = Condition::at_most(epsilon, excess / (72.0 * l1));
    let eta_c = Condition::at_most(
        eta1,
        (epsilon / (4.0 * l * l1 * (v2 + 4.0 * epsilon))).min(1.0 / (l * rv2)),
    );
    let gamma_c = Condition::at_most(gamma1, (epsilon / (4.0 * l1)).min(18.0 * epsilon * eta1 * l));
    let alpha_c = Condition::at_most(hp.alpha, l * excess / (4.0 * (delta + v2)));
    let init_c = Condition::at_least(
        init_alignment,
        1.0 - (delta - v2 - hp.alpha / l - 4.0 * epsilon) / (2.0 * l1),
    );
    GoodProjReport {
        overall_ok: epsilon_c.ok && eta_c.ok && gamma_c.ok && alpha_c.ok && init_c.ok,
        epsilon: epsilon_c,
        eta: eta_c,
        gamma: gamma_c,
        alpha: alpha_c,
        init: init_c,
    }
}

/// Bound `√33 (ηℓ(R+V)²)²` on the Frobenius distance between the power-step
/// iterate and the exact top eigenvector of the lifted update. Valid for
/// `η ≤ 1/(3ℓ(R+V)²)` and `α ≤ ℓ(R+V)²`.
pub fn power_step_gap_bound(eta: f64, ell: usize, radius: f64, perturbation: f64, alpha: f64) -> Result<f64> {
    let scale = ell as f64 * (radius + perturbation).powi(2);
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::invalid("ℓ(R+V)² must be positive and finite"));
    }
    if !(eta > 0.0) || eta > 1.0 / (3.0 * scale) {
        return Err(Error::ModelViolation(format!(
            "power-step bound needs 0 < η ≤ 1/(3ℓ(R+V)²) = {}, got η = {eta}",
            1.0 / (3.0 * scale)
        )));
    }
    if !(alpha >= 0.0) || alpha > scale {
        return Err(Error::ModelViolation(format!(
            "power-step bound needs 0 ≤ α ≤ ℓ(R+V)² = {scale}, got α = {alpha}"
        )));
    }
    Ok(33f64.sqrt() * (eta * scale).powi(2))
}
