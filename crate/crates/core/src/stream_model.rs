//! Perturbed spiked-covariance streams.
//!
//! Every observation is `x = q + v` where `q` is drawn i.i.d. from a zero-mean
//! distribution with covariance `Q = B diag(λ) Bᵀ` and `v` is a perturbation of
//! norm at most `V` chosen by an [`AdversarySpec`]. The `q`/`v` split is kept on
//! each [`StreamRecord`] for diagnostics; learners only ever see `x`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::symmat::{self, normalized, SymMatrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistributionKind {
    /// Gaussian rejection-resampled to the ball of radius `R`.
    TruncatedGaussian,
    /// Plain Gaussian; `R` is only nominal.
    RawGaussian,
    /// Whitened coordinates drawn from an even mixture of Rademacher and
    /// `U[−√3, √3]`, so `‖q‖ ≤ √(3·Tr Q)` surely and the covariance is exactly `Q`.
    BoundedUniformMixture,
}

impl DistributionKind {
    pub fn name(self) -> &'static str {
        match self {
            DistributionKind::TruncatedGaussian => "truncated_gaussian",
            DistributionKind::RawGaussian => "raw_gaussian",
            DistributionKind::BoundedUniformMixture => "bounded_uniform_mixture",
        }
    }

    pub fn has_bounded_support(self) -> bool {
        !matches!(self, DistributionKind::RawGaussian)
    }
}

impl fmt::Display for DistributionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistributionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "truncated_gaussian" => Ok(DistributionKind::TruncatedGaussian),
            "raw_gaussian" => Ok(DistributionKind::RawGaussian),
            "bounded_uniform_mixture" => Ok(DistributionKind::BoundedUniformMixture),
            other => Err(Error::Config(format!("unknown distribution kind `{other}`"))),
        }
    }
}

/// `λ_i = top · ratio^{i−1}` for `i = 1..=d`.
pub fn geometric_spectrum(d: usize, top: f64, ratio: f64) -> Vec<f64> {
    (0..d).map(|i| top * ratio.powi(i as i32)).collect()
}

/// Haar-random orthogonal matrix (QR of a Gaussian matrix with the sign of
/// `R`'s diagonal folded into `Q`).
pub fn random_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            let mut col = q.column_mut(j);
            col.neg_mut();
        }
    }
    q
}

/// Summary quantities used by the hyperparameter derivations and validators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelStats {
    /// `R`, radius of the stochastic support.
    pub radius: f64,
    /// `V`, bound on the perturbation norm.
    pub perturbation: f64,
    /// `λ₁(Q)`.
    pub lambda1: f64,
    /// `δ(Q) = λ₁(Q) − λ₂(Q)`.
    pub eigengap: f64,
}

#[derive(Debug, Clone)]
pub struct SpikedModel {
    eigenvalues: Vec<f64>,
    basis: DMatrix<f64>,
    kind: DistributionKind,
    radius: f64,
    covariance: SymMatrix,
    factor: DMatrix<f64>,
}

impl SpikedModel {
    /// Builds a model with the default radius for its kind: `4·√Tr Q` for the
    /// Gaussian kinds and `√(3·Tr Q)` for the bounded mixture.
    pub fn new(eigenvalues: Vec<f64>, basis: DMatrix<f64>, kind: DistributionKind) -> Result<Self> {
        let d = eigenvalues.len();
        if d == 0 {
            return Err(Error::invalid("model dimension must be at least 1"));
        }
        if eigenvalues.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::invalid("model eigenvalues must be finite and non-negative"));
        }
        if eigenvalues.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::invalid("model eigenvalues must be sorted descending"));
        }
        if d >= 2 && eigenvalues[0] - eigenvalues[1] <= 0.0 {
            return Err(Error::invalid("model needs a positive eigengap λ₁ − λ₂"));
        }
        if eigenvalues[0] <= 0.0 {
            return Err(Error::invalid("λ₁(Q) must be positive"));
        }
        Self::build(eigenvalues, basis, kind)
    }

    /// The point mass at the origin (`Q = 0`). It has no eigengap and exists
    /// to exercise the residual machinery on a degenerate input.
    pub fn point_mass(d: usize) -> Self {
        Self::build(vec![0.0; d], DMatrix::identity(d, d), DistributionKind::BoundedUniformMixture)
            .expect("identity basis is orthonormal")
    }

    pub fn with_random_basis<R: Rng + ?Sized>(
        eigenvalues: Vec<f64>,
        kind: DistributionKind,
        rng: &mut R,
    ) -> Result<Self> {
        let basis = random_orthogonal(eigenvalues.len(), rng);
        Self::new(eigenvalues, basis, kind)
    }

    fn build(eigenvalues: Vec<f64>, basis: DMatrix<f64>, kind: DistributionKind) -> Result<Self> {
        let d = eigenvalues.len();
        if basis.nrows() != d || basis.ncols() != d {
            return Err(Error::invalid(format!(
                "basis is {}x{}, expected {d}x{d}",
                basis.nrows(),
                basis.ncols()
            )));
        }
        let gram = basis.transpose() * &basis;
        let off = (gram - DMatrix::<f64>::identity(d, d)).amax();
        if off > 1e-8 {
            return Err(Error::invalid(format!("basis columns not orthonormal (deviation {off:e})")));
        }
        let mut factor = basis.clone();
        for (j, l) in eigenvalues.iter().enumerate() {
            let s = l.sqrt();
            factor.column_mut(j).scale_mut(s);
        }
        let covariance = SymMatrix::symmetrized(&factor * factor.transpose());
        let trace: f64 = eigenvalues.iter().sum();
        let radius = match kind {
            DistributionKind::BoundedUniformMixture => (3.0 * trace).sqrt(),
            _ => 4.0 * trace.sqrt(),
        };
        Ok(SpikedModel {
            eigenvalues,
            basis,
            kind,
            radius,
            covariance,
            factor,
        })
    }

    /// Overrides the truncation radius of a Gaussian kind. The bounded
    /// mixture's radius is fixed by its construction.
    pub fn with_radius(mut self, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid("radius must be positive and finite"));
        }
        if self.kind == DistributionKind::BoundedUniformMixture {
            return Err(Error::invalid(
                "bounded_uniform_mixture has a fixed support radius √(3·Tr Q)",
            ));
        }
        self.radius = radius;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    /// `R`. For `raw_gaussian` this is nominal only.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `Q`.
    pub fn covariance(&self) -> &SymMatrix {
        &self.covariance
    }

    pub fn lambda1(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn eigengap(&self) -> f64 {
        match self.eigenvalues.get(1) {
            Some(l2) => self.eigenvalues[0] - l2,
            None => self.eigenvalues[0],
        }
    }

    /// Leading eigenvector of `Q` (the spike), sign-canonicalized.
    pub fn spike(&self) -> Vector {
        let mut s = self.basis.column(0).into_owned();
        symmat::canonicalize_sign(&mut s);
        s
    }

    pub fn stats(&self, perturbation: f64) -> ModelStats {
        ModelStats {
            radius: self.radius,
            perturbation,
            lambda1: self.lambda1(),
            eigengap: self.eigengap(),
        }
    }

    /// One draw of the stochastic part `q`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        let d = self.dim();
        loop {
            let z = match self.kind {
                DistributionKind::TruncatedGaussian | DistributionKind::RawGaussian => {
                    Vector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal))
                }
                DistributionKind::BoundedUniformMixture => Vector::from_fn(d, |_, _| {
                    if rng.random::<bool>() {
                        if rng.random::<bool>() {
                            1.0
                        } else {
                            -1.0
                        }
                    } else {
                        rng.random_range(-3f64.sqrt()..=3f64.sqrt())
                    }
                }),
            };
            let q = &self.factor * z;
            if self.kind != DistributionKind::TruncatedGaussian || q.norm() <= self.radius {
                return q;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdversaryKind {
    None,
    /// `v = V · direction / ‖direction‖` on every step.
    FixedVector { direction: Vector },
    /// `v_t = V (cos(2πt/period) a + sin(2πt/period) b)` for a seeded
    /// orthonormal pair `(a, b)`.
    Rotating { period: usize },
    /// Pushes the second eigen-direction of `Q`, projected orthogonally to the
    /// reference vector supplied by the harness, with norm `min(V, magnitude)`.
    GreedyOrthogonal { magnitude: f64 },
    /// Zero-mean Gaussian noise with covariance `C diag(μ) Cᵀ` for a seeded
    /// random rotation `C`. With `truncate`, draws beyond `V` are resampled;
    /// otherwise `V` is nominal.
    GaussianNoise { eigenvalues: Vec<f64>, truncate: bool },
}

impl AdversaryKind {
    pub fn name(&self) -> &'static str {
        match self {
            AdversaryKind::None => "none",
            AdversaryKind::FixedVector { .. } => "fixed_vector",
            AdversaryKind::Rotating { .. } => "rotating",
            AdversaryKind::GreedyOrthogonal { .. } => "greedy_orthogonal",
            AdversaryKind::GaussianNoise { .. } => "gaussian_noise",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdversarySpec {
    pub kind: AdversaryKind,
    /// `V`.
    pub radius: f64,
    pub seed: u64,
}

impl AdversarySpec {
    pub fn none() -> Self {
        AdversarySpec {
            kind: AdversaryKind::None,
            radius: 0.0,
            seed: 0,
        }
    }

    pub fn fixed(direction: Vector, radius: f64) -> Self {
        AdversarySpec {
            kind: AdversaryKind::FixedVector { direction },
            radius,
            seed: 0,
        }
    }

    /// The perturbation bound the model checks use: zero for `none`.
    pub fn bound(&self) -> f64 {
        match self.kind {
            AdversaryKind::None => 0.0,
            _ => self.radius,
        }
    }

    /// Whether `‖v‖ ≤ V` holds surely for this kind.
    pub fn is_bounded(&self) -> bool {
        !matches!(self.kind, AdversaryKind::GaussianNoise { truncate: false, .. })
    }
}

/// Stateful realization of an [`AdversarySpec`] for a given model.
#[derive(Debug, Clone)]
pub struct Adversary {
    spec: AdversarySpec,
    d: usize,
    step: usize,
    rng: ChaCha8Rng,
    plane: Option<(Vector, Vector)>,
    noise_factor: Option<DMatrix<f64>>,
    targets: Vec<Vector>,
}

impl Adversary {
    pub fn new(spec: AdversarySpec, model: &SpikedModel) -> Result<Self> {
        let d = model.dim();
        if !(spec.radius >= 0.0 && spec.radius.is_finite()) {
            return Err(Error::invalid("perturbation radius V must be finite and non-negative"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut plane = None;
        let mut noise_factor = None;
        let mut targets = Vec::new();
        match &spec.kind {
            AdversaryKind::None => {}
            AdversaryKind::FixedVector { direction } => {
                if direction.len() != d {
                    return Err(Error::invalid(format!(
                        "fixed_vector direction has length {}, model dimension is {d}",
                        direction.len()
                    )));
                }
                if normalized(direction).is_none() {
                    return Err(Error::invalid("fixed_vector direction must be nonzero"));
                }
            }
            AdversaryKind::Rotating { period } => {
                if *period == 0 {
                    return Err(Error::invalid("rotation period must be at least 1"));
                }
                let o = random_orthogonal(d, &mut rng);
                let a = o.column(0).into_owned();
                let b = if d >= 2 {
                    o.column(1).into_owned()
                } else {
                    Vector::zeros(d)
                };
                plane = Some((a, b));
            }
            AdversaryKind::GreedyOrthogonal { magnitude } => {
                if !(*magnitude >= 0.0) {
                    return Err(Error::invalid("greedy_orthogonal magnitude must be non-negative"));
                }
                // Second eigen-direction first, then the rest of Q's basis as fallbacks.
                let b = model.basis();
                let order = (1..d).chain(std::iter::once(0));
                targets = order.map(|j| b.column(j).into_owned()).collect();
            }
            AdversaryKind::GaussianNoise { eigenvalues, truncate } => {
                if eigenvalues.len() != d {
                    return Err(Error::invalid(format!(
                        "gaussian_noise has {} eigenvalues, model dimension is {d}",
                        eigenvalues.len()
                    )));
                }
                if eigenvalues.iter().any(|m| !m.is_finite() || *m < 0.0) {
                    return Err(Error::invalid("noise eigenvalues must be finite and non-negative"));
                }
                if *truncate && spec.radius <= 0.0 && eigenvalues.iter().any(|m| *m > 0.0) {
                    return Err(Error::invalid("truncated gaussian_noise needs V > 0"));
                }
                let mut f = random_orthogonal(d, &mut rng);
                for (j, m) in eigenvalues.iter().enumerate() {
                    f.column_mut(j).scale_mut(m.sqrt());
                }
                noise_factor = Some(f);
            }
        }
        Ok(Adversary {
            spec,
            d,
            step: 0,
            rng,
            plane,
            noise_factor,
            targets,
        })
    }

    pub fn spec(&self) -> &AdversarySpec {
        &self.spec
    }

    /// Perturbation for the next observation. `q` is the concurrent
    /// stochastic draw; `reference` is the direction a greedy adversary
    /// plays against.
    pub fn perturb(&mut self, reference: Option<&Vector>) -> Vector {
        let t = self.step;
        self.step += 1;
        let big_v = self.spec.radius;
        match &self.spec.kind {
            AdversaryKind::None => Vector::zeros(self.d),
            AdversaryKind::FixedVector { direction } => {
                normalized(direction).expect("checked at construction") * big_v
            }
            AdversaryKind::Rotating { period } => {
                let (a, b) = self.plane.as_ref().expect("rotating plane");
                let phase = 2.0 * PI * (t % period) as f64 / *period as f64;
                let mut v = a * phase.cos() + b * phase.sin();
                if let Some(u) = normalized(&v) {
                    v = u;
                }
                v * big_v
            }
            AdversaryKind::GreedyOrthogonal { magnitude } => {
                let m = big_v.min(*magnitude);
                let r = reference.and_then(normalized);
                for target in &self.targets {
                    let mut dir = target.clone();
                    if let Some(r) = &r {
                        // Two passes of Gram-Schmidt keep |rᵀv| at rounding level.
                        for _ in 0..2 {
                            let c = r.dot(&dir);
                            dir.axpy(-c, r, 1.0);
                        }
                    }
                    if dir.norm() > 1e-6 {
                        return dir.normalize() * m;
                    }
                }
                Vector::zeros(self.d)
            }
            AdversaryKind::GaussianNoise { truncate, .. } => {
                let f = self.noise_factor.as_ref().expect("noise factor");
                loop {
                    let z = Vector::from_fn(self.d, |_, _| self.rng.sample::<f64, _>(StandardNormal));
                    let v = f * z;
                    if !*truncate || v.norm() <= big_v {
                        return v;
                    }
                }
            }
        }
    }
}

/// One observation together with its stochastic/adversarial split when known.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamRecord {
    x: Vector,
    split: Option<(Vector, Vector)>,
}

impl StreamRecord {
    /// `x = q + v`.
    pub fn from_parts(q: Vector, v: Vector) -> Self {
        assert_eq!(q.len(), v.len(), "q and v must have equal length");
        let x = &q + &v;
        StreamRecord {
            x,
            split: Some((q, v)),
        }
    }

    pub fn observed(x: Vector) -> Self {
        StreamRecord { x, split: None }
    }

    pub fn x(&self) -> &Vector {
        &self.x
    }

    pub fn q(&self) -> Option<&Vector> {
        self.split.as_ref().map(|(q, _)| q)
    }

    pub fn v(&self) -> Option<&Vector> {
        self.split.as_ref().map(|(_, v)| v)
    }

    pub fn has_split(&self) -> bool {
        self.split.is_some()
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub index: usize,
    pub records: Vec<StreamRecord>,
}

impl Block {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn observations(&self) -> Vec<Vector> {
        self.records.iter().map(|r| r.x.clone()).collect()
    }

    /// `X_t = Σ x xᵀ`.
    pub fn outer_sum(&self) -> SymMatrix {
        let d = self.records.first().map_or(0, StreamRecord::dim);
        SymMatrix::sum_of_outers(d, self.records.iter().map(|r| &r.x))
    }
}

/// Deterministic source of [`StreamRecord`]s for a model/adversary pair.
#[derive(Debug, Clone)]
pub struct StreamGenerator {
    model: SpikedModel,
    adversary: Adversary,
    rng: ChaCha8Rng,
    reference: Option<Vector>,
    blocks_emitted: usize,
    max_q_norm: f64,
    max_v_norm: f64,
}

impl StreamGenerator {
    pub fn new(model: SpikedModel, adversary: AdversarySpec, seed: u64) -> Result<Self> {
        let adversary = Adversary::new(adversary, &model)?;
        Ok(StreamGenerator {
            model,
            adversary,
            rng: ChaCha8Rng::seed_from_u64(seed),
            reference: None,
            blocks_emitted: 0,
            max_q_norm: 0.0,
            max_v_norm: 0.0,
        })
    }

    pub fn model(&self) -> &SpikedModel {
        &self.model
    }

    pub fn adversary(&self) -> &Adversary {
        &self.adversary
    }

    /// Reference direction handed to a greedy adversary.
    pub fn set_reference(&mut self, reference: Option<Vector>) {
        self.reference = reference;
    }

    pub fn next_record(&mut self) -> StreamRecord {
        let q = self.model.sample(&mut self.rng);
        let v = self.adversary.perturb(self.reference.as_ref());
        self.max_q_norm = self.max_q_norm.max(q.norm());
        self.max_v_norm = self.max_v_norm.max(v.norm());
        StreamRecord::from_parts(q, v)
    }

    pub fn records(&mut self, n: usize) -> Vec<StreamRecord> {
        (0..n).map(|_| self.next_record()).collect()
    }

    pub fn sample_block(&mut self, ell: usize) -> Block {
        let records = self.records(ell);
        let index = self.blocks_emitted;
        self.blocks_emitted += 1;
        Block { index, records }
    }

    /// Unperturbed draws from the stochastic part only; the adversary does
    /// not advance.
    pub fn sample_clean(&mut self, n: usize) -> Vec<Vector> {
        (0..n)
            .map(|_| {
                let q = self.model.sample(&mut self.rng);
                self.max_q_norm = self.max_q_norm.max(q.norm());
                q
            })
            .collect()
    }

    /// Largest `‖q‖` emitted so far (the effective `R` of a raw Gaussian stream).
    pub fn observed_radius(&self) -> f64 {
        self.max_q_norm
    }

    pub fn observed_perturbation(&self) -> f64 {
        self.max_v_norm
    }
}

/// `ℓ` records from a fresh generator seeded with `seed`.
pub fn sample_block(
    model: &SpikedModel,
    adversary: &AdversarySpec,
    ell: usize,
    seed: u64,
) -> Result<Block> {
    if ell == 0 {
        return Err(Error::invalid("block length must be at least 1"));
    }
    let mut generator = StreamGenerator::new(model.clone(), adversary.clone(), seed)?;
    Ok(generator.sample_block(ell))
}

/// `D_t = Σ q qᵀ − ℓ·Q + Σ (q vᵀ + v qᵀ)`, so that `X_t = ℓQ + V_t + D_t`.
pub fn residual_matrix(block: &Block, model: &SpikedModel) -> Result<SymMatrix> {
    let d = model.dim();
    let mut acc = DMatrix::<f64>::zeros(d, d);
    for (i, rec) in block.records.iter().enumerate() {
        let (q, v) = rec.split.as_ref().ok_or_else(|| {
            Error::invalid(format!("record {i} of block {} has no q/v split", block.index))
        })?;
        if q.len() != d {
            return Err(Error::invalid(format!(
                "record {i} has dimension {}, model dimension is {d}",
                q.len()
            )));
        }
        // q qᵀ + q vᵀ + v qᵀ = q (q + v)ᵀ + v qᵀ
        acc.ger(1.0, q, &(q + v), 1.0);
        acc.ger(1.0, v, q, 1.0);
    }
    acc -= model.covariance().as_matrix() * block.len() as f64;
    Ok(SymMatrix::symmetrized(acc))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelCheckReport {
    /// `slack > 0`.
    pub gap_condition_ok: bool,
    /// `δ(Q) − V·√(2λ₁(Q) + V²)`.
    pub slack: f64,
    /// Largest admissible `ε` in the gap condition (`max(slack, 0)`).
    pub epsilon_available: f64,
    /// `(δ² − V²(V² + 2λ₁)) / (72 λ₁)` when positive.
    pub theorem1_epsilon: Option<f64>,
    pub radius: f64,
    pub perturbation: f64,
    pub messages: Vec<String>,
}

/// Checks the eigengap condition `δ(Q) ≥ V√(2λ₁(Q) + V²) + ε` for some `ε > 0`.
pub fn validate_model(model: &SpikedModel, adversary: &AdversarySpec) -> ModelCheckReport {
    let l1 = model.lambda1();
    let delta = model.eigengap();
    let v = adversary.bound();
    let slack = delta - v * (2.0 * l1 + v * v).sqrt();
    let gap_condition_ok = slack > 0.0;
    let eps1 = (delta * delta - v * v * (v * v + 2.0 * l1)) / (72.0 * l1);
    let mut messages = Vec::new();
    if gap_condition_ok {
        messages.push(format!("eigengap condition holds with slack {slack:.6}"));
    } else {
        messages.push(format!(
            "eigengap condition fails: δ(Q) = {delta:.6} < V·√(2λ₁+V²) = {:.6}",
            delta - slack
        ));
    }
    if !model.kind().has_bounded_support() {
        messages.push(format!(
            "raw_gaussian has unbounded support; R = {:.6} is nominal, use the max observed norm as the effective R",
            model.radius()
        ));
    }
    if !adversary.is_bounded() {
        messages.push(format!(
            "untruncated gaussian_noise perturbations are unbounded; V = {v:.6} is nominal"
        ));
    }
    if v > model.radius() {
        messages.push(format!("V = {v:.6} exceeds R = {:.6}", model.radius()));
    }
    ModelCheckReport {
        gap_condition_ok,
        slack,
        epsilon_available: slack.max(0.0),
        theorem1_epsilon: (eps1 > 0.0).then_some(eps1),
        radius: model.radius(),
        perturbation: v,
        messages,
    }
}

/// Smallest `ℓ` with `T · 2d · exp(−ε²ℓ / (128 R⁴)) ≤ p`, i.e.
/// `⌈128 R⁴ ln(2dT/p) / ε²⌉`.
pub fn block_length_for(epsilon: f64, p: f64, d: usize, blocks: usize, radius: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!("ε must be positive, got {epsilon}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("p must lie in (0, 1), got {p}")));
    }
    if blocks == 0 || d == 0 {
        return Err(Error::invalid("T and d must be at least 1"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("R must be positive, got {radius}")));
    }
    let ell = 128.0 * radius.powi(4) * (2.0 * d as f64 * blocks as f64 / p).ln() / (epsilon * epsilon);
    if ell >= usize::MAX as f64 {
        return Err(Error::InsufficientData(format!("block length {ell:e} overflows")));
    }
    Ok((ell.ceil() as usize).max(1))
}

/// Monte-Carlo estimate of `Pr(‖D_t/ℓ‖₂ ≥ ε)` over `trials` independent blocks.
pub fn empirical_hoeffding_check(
    model: &SpikedModel,
    adversary: &AdversarySpec,
    ell: usize,
    epsilon: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return Err(Error::invalid("at least one trial is required"));
    }
    if ell == 0 {
        return Err(Error::invalid("block length must be at least 1"));
    }
    let mut generator = StreamGenerator::new(model.clone(), adversary.clone(), seed)?;
    let mut hits = 0usize;
    for _ in 0..trials {
        let block = generator.sample_block(ell);
        let dev = symmat::spectral_norm(&residual_matrix(&block, model)?)? / ell as f64;
        if dev >= epsilon {
            hits += 1;
        }
    }
    Ok(hits as f64 / trials as f64)
}
