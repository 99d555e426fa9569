//! Dense symmetric linear algebra.
//!
//! Everything spectral in the crate goes through [`eig_sym`]: eigenvalues come
//! back sorted in descending order, eigenvectors are sign-canonicalized (first
//! coordinate with magnitude above [`Tolerances::sign_zero`] is non-negative)
//! and repeated eigenvalues get a deterministic basis. The spectrahedron
//! projection `Π_S[W]` is water-filling over the eigenvalues of `W`.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;

/// Numerical tolerances shared by validators and property tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative asymmetry accepted by [`SymMatrix::new`].
    pub symmetry: f64,
    /// `|‖v‖ − 1|` accepted for unit vectors.
    pub unit_norm: f64,
    /// Relative eigen-residual `‖Au − λu‖ / (1 + |λ|)`.
    pub eig_residual: f64,
    /// Pairwise `|u_i · u_j|` between eigenvectors.
    pub orthogonality: f64,
    /// `|‖u_i‖ − 1|` for eigenvectors.
    pub eigvec_norm: f64,
    /// Coordinates at or below this magnitude are skipped by the sign convention.
    pub sign_zero: f64,
    pub simplex_sum: f64,
    pub trace: f64,
    /// Slack for positive semidefiniteness checks (`A ⪰ −psd·I`).
    pub psd: f64,
    /// Norm below which an update direction counts as zero.
    pub degenerate: f64,
}

pub const TOL: Tolerances = Tolerances {
    symmetry: 1e-12,
    unit_norm: 1e-9,
    eig_residual: 1e-8,
    orthogonality: 1e-8,
    eigvec_norm: 1e-10,
    sign_zero: 1e-12,
    simplex_sum: 1e-10,
    trace: 1e-9,
    psd: 1e-9,
    degenerate: 1e-14,
};

/// A dense real symmetric `d × d` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Wraps `m`, rejecting non-square input and asymmetry beyond
    /// `1e-12 · (1 + max|A_ij|)`. Non-finite entries are accepted here and
    /// rejected by the spectral routines.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::invalid(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = 1.0 + m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let d = m.nrows();
        for j in 0..d {
            for i in (j + 1)..d {
                let diff = (m[(i, j)] - m[(j, i)]).abs();
                if diff > TOL.symmetry * scale {
                    return Err(Error::invalid(format!(
                        "matrix not symmetric at ({i},{j}): |A_ij - A_ji| = {diff:e}"
                    )));
                }
            }
        }
        Ok(SymMatrix(m))
    }

    pub fn from_row_slice(d: usize, data: &[f64]) -> Result<Self> {
        if data.len() != d * d {
            return Err(Error::invalid(format!(
                "expected {} entries for a {d}x{d} matrix, got {}",
                d * d,
                data.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(d, d, data))
    }

    pub fn zeros(d: usize) -> Self {
        SymMatrix(DMatrix::zeros(d, d))
    }

    pub fn identity(d: usize) -> Self {
        SymMatrix(DMatrix::identity(d, d))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        SymMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    /// `v vᵀ`.
    pub fn outer(v: &Vector) -> Self {
        let mut m = Self::zeros(v.len());
        m.add_outer(v, 1.0);
        m
    }

    /// `Σ_i x_i x_iᵀ` over a set of points of dimension `d`.
    pub fn sum_of_outers<'a>(d: usize, points: impl IntoIterator<Item = &'a Vector>) -> Self {
        let mut m = Self::zeros(d);
        for x in points {
            m.add_outer(x, 1.0);
        }
        m
    }

    /// Symmetrizes `(M + Mᵀ)/2` without validation. For internal use on
    /// products that are symmetric up to rounding.
    pub(crate) fn symmetrized(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        SymMatrix((m + t) * 0.5)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// `A += scale · v vᵀ`, writing each off-diagonal pair once so the
    /// result stays exactly symmetric.
    pub fn add_outer(&mut self, v: &Vector, scale: f64) {
        let d = self.dim();
        assert_eq!(v.len(), d, "add_outer: dimension mismatch");
        for j in 0..d {
            let svj = scale * v[j];
            if svj == 0.0 {
                continue;
            }
            for i in 0..j {
                let val = v[i] * svj;
                self.0[(i, j)] += val;
                self.0[(j, i)] += val;
            }
            self.0[(j, j)] += v[j] * svj;
        }
    }

    /// `A ← c·A + s·B`.
    pub fn scale_add(&mut self, c: f64, s: f64, other: &SymMatrix) {
        assert_eq!(self.dim(), other.dim(), "scale_add: dimension mismatch");
        for (a, b) in self.0.iter_mut().zip(other.0.iter()) {
            *a = c * *a + s * *b;
        }
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn mul_vec(&self, v: &Vector) -> Vector {
        &self.0 * v
    }

    /// `vᵀ A v`.
    pub fn quadratic_form(&self, v: &Vector) -> f64 {
        v.dot(&(&self.0 * v))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// Largest absolute asymmetry `max |A_ij − A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for j in 0..d {
            for i in (j + 1)..d {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)]).abs());
            }
        }
        worst
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 - &rhs.0)
    }
}

impl Mul<f64> for &SymMatrix {
    type Output = SymMatrix;
    fn mul(self, rhs: f64) -> SymMatrix {
        SymMatrix(&self.0 * rhs)
    }
}

/// Eigenpairs sorted by descending eigenvalue; column `i` of the vector
/// matrix pairs with `eigenvalues()[i]`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl EigenDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> Vector {
        self.vectors.column(i).into_owned()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn top(&self) -> (f64, Vector) {
        (self.values[0], self.vector(0))
    }

    /// `Σ λ_i u_i u_iᵀ`.
    pub fn reconstruct(&self) -> SymMatrix {
        self.weighted_sum(&self.values)
    }

    /// `Σ weights_i u_i u_iᵀ`, skipping zero weights.
    pub fn weighted_sum(&self, weights: &[f64]) -> SymMatrix {
        let d = self.vectors.nrows();
        let mut m = SymMatrix::zeros(d);
        for (i, &w) in weights.iter().enumerate() {
            if w != 0.0 {
                m.add_outer(&self.vector(i), w);
            }
        }
        m
    }
}

/// Flips `v` so its first coordinate of magnitude above `TOL.sign_zero` is
/// non-negative.
pub fn canonicalize_sign(v: &mut Vector) {
    if let Some(first) = v.iter().find(|c| c.abs() > TOL.sign_zero) {
        if *first < 0.0 {
            v.neg_mut();
        }
    }
}

pub fn basis_vector(d: usize, i: usize) -> Vector {
    let mut e = Vector::zeros(d);
    e[i] = 1.0;
    e
}

/// Returns `v / ‖v‖`, or `None` when the norm is below `TOL.degenerate`.
pub fn normalized(v: &Vector) -> Option<Vector> {
    let n = v.norm();
    if n < TOL.degenerate || !n.is_finite() {
        None
    } else {
        Some(v / n)
    }
}

fn ensure_finite(a: &SymMatrix) -> Result<()> {
    if a.dim() == 0 {
        return Err(Error::invalid("empty matrix"));
    }
    if !a.is_finite() {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    Ok(())
}

/// Full symmetric eigendecomposition.
///
/// Eigenvalues are sorted descending. Within a cluster of numerically equal
/// eigenvalues the basis is rebuilt from the cluster's spectral projector by
/// pivoted Gram-Schmidt on its columns, sign-canonicalized and ordered
/// lexicographically descending, so the output is a function of the
/// eigenspaces alone (`identity(d)` yields `e_1, …, e_d`).
pub fn eig_sym(a: &SymMatrix) -> Result<EigenDecomposition> {
    let mut eig = eig_sorted(a)?;
    resolve_ties(&mut eig, |_| true);
    Ok(eig)
}

/// Sorted, sign-canonicalized eigendecomposition without tie resolution.
fn eig_sorted(a: &SymMatrix) -> Result<EigenDecomposition> {
    ensure_finite(a)?;
    let d = a.dim();
    let raw = SymmetricEigen::try_new(a.0.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::invalid("symmetric eigensolver did not converge"))?;

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| raw.eigenvalues[j].total_cmp(&raw.eigenvalues[i]));

    let values: Vec<f64> = order.iter().map(|&i| raw.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        let mut v = raw.eigenvectors.column(src).into_owned();
        canonicalize_sign(&mut v);
        vectors.set_column(dst, &v);
    }
    Ok(EigenDecomposition { values, vectors })
}

/// Eigenvalues only, sorted descending.
pub fn eigenvalues_sym(a: &SymMatrix) -> Result<Vec<f64>> {
    ensure_finite(a)?;
    let mut vals: Vec<f64> = a.0.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|x, y| y.total_cmp(x));
    Ok(vals)
}

/// Canonicalizes every cluster of tied eigenvalues whose first index
/// satisfies `wanted`.
fn resolve_ties(eig: &mut EigenDecomposition, wanted: impl Fn(usize) -> bool) {
    let d = eig.values.len();
    if d < 2 {
        return;
    }
    let scale = eig.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let tie_tol = 64.0 * f64::EPSILON * scale;

    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && eig.values[end - 1] - eig.values[end] <= tie_tol {
            end += 1;
        }
        if end - start > 1 && wanted(start) {
            let basis = canonical_cluster_basis(&eig.vectors.columns(start, end - start).into_owned());
            for (k, v) in basis.into_iter().enumerate() {
                eig.vectors.set_column(start + k, &v);
            }
        }
        start = end;
    }
}

fn lex_desc(a: &Vector, b: &Vector) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match y.total_cmp(x) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

fn canonical_cluster_basis(u: &DMatrix<f64>) -> Vec<Vector> {
    let m = u.ncols();
    let mut residual = u * u.transpose();
    let mut basis: Vec<Vector> = Vec::with_capacity(m);
    for _ in 0..m {
        let mut best = 0;
        let mut best_norm = -1.0;
        for j in 0..residual.ncols() {
            let n = residual.column(j).norm();
            if n > best_norm {
                best_norm = n;
                best = j;
            }
        }
        let mut b: Vector = residual.column(best).into_owned();
        b /= best_norm;
        // Re-orthogonalize against the chosen vectors for stability.
        for prev in &basis {
            let c = prev.dot(&b);
            b.axpy(-c, prev, 1.0);
        }
        b /= b.norm();
        let coeffs = b.transpose() * &residual;
        residual -= &b * coeffs;
        canonicalize_sign(&mut b);
        basis.push(b);
    }
    basis.sort_by(lex_desc);
    basis
}

/// `(λ₁(A), u₁)`, identical to the first pair of [`eig_sym`].
pub fn top_eigenpair(a: &SymMatrix) -> Result<(f64, Vector)> {
    Ok(eig_sym(a)?.top())
}

/// Euclidean projection onto the probability simplex by sorted water-filling:
/// the result is `max{0, v_i − θ}` with `θ` chosen so the entries sum to one.
pub fn simplex_project(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::invalid("simplex projection of an empty sequence"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("simplex projection input has non-finite entries"));
    }
    let theta = water_level(v);
    Ok(v.iter().map(|&x| (x - theta).max(0.0)).collect())
}

fn water_level(v: &[f64]) -> f64 {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cum += u;
        let t = (cum - 1.0) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    theta
}

/// A spectrahedron projection together with the eigendecomposition it was
/// built from.
#[derive(Debug, Clone)]
pub struct SpectrahedronProjection {
    pub matrix: SymMatrix,
    pub eigen: EigenDecomposition,
    /// Simplex weights paired with `eigen`'s eigenvectors.
    pub weights: Vec<f64>,
}

impl SpectrahedronProjection {
    pub fn rank(&self) -> usize {
        self.weights.iter().filter(|w| **w > 0.0).count()
    }
}

/// `Π_S[W]` for `S = {P ⪰ 0, Tr P = 1}`.
pub fn spectrahedron_project(w: &SymMatrix) -> Result<SymMatrix> {
    Ok(spectrahedron_project_full(w)?.matrix)
}

/// Like [`spectrahedron_project`], also returning the eigendecomposition.
/// Tied eigenvalues that receive zero weight do not affect the projection, so
/// their eigenvectors are left as the solver produced them; all other ties
/// are resolved as in [`eig_sym`].
pub fn spectrahedron_project_full(w: &SymMatrix) -> Result<SpectrahedronProjection> {
    let mut eigen = eig_sorted(w)?;
    let weights = simplex_project(eigen.eigenvalues())?;
    resolve_ties(&mut eigen, |i| weights[i] > 0.0);
    let matrix = eigen.weighted_sum(&weights);
    Ok(SpectrahedronProjection {
        matrix,
        eigen,
        weights,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub frobenius: f64,
    pub spectral: f64,
}

pub fn norms(a: &SymMatrix) -> Result<Norms> {
    let vals = eigenvalues_sym(a)?;
    let spectral = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(Norms {
        frobenius: a.frobenius_norm(),
        spectral,
    })
}

/// Spectral norm `max |λ_i(A)|`.
pub fn spectral_norm(a: &SymMatrix) -> Result<f64> {
    Ok(norms(a)?.spectral)
}
