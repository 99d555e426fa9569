//! Helpers shared by the integration suites: reference implementations that
//! do not go through the library's eigensolver, and random test inputs.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use streampca::symmat::{SymMatrix, Vector};

/// Cyclic Jacobi rotations on a dense symmetric matrix. Returns eigenvalues
/// in descending order with matching unit eigenvectors as columns.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].powi(2))
            .sum();
        if off < 1e-30 * (1.0 + m.norm_squared()) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Simplex projection by exhaustive search over supports: for each support
/// `S`, the KKT candidate is `v_i − θ` on `S` with `θ = (Σ_S v − 1)/|S|`; the
/// optimum is the candidate that is non-negative on `S` and has
/// `v_i ≤ θ` off `S`.
pub fn active_set_simplex(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    assert!(n <= 16, "exhaustive search is for small inputs");
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << n) {
        let support: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let theta = (support.iter().map(|&i| v[i]).sum::<f64>() - 1.0) / support.len() as f64;
        let mut x = vec![0.0; n];
        let mut violation = 0.0f64;
        for i in 0..n {
            if mask & (1 << i) != 0 {
                x[i] = v[i] - theta;
                violation = violation.max(-x[i]);
            } else {
                violation = violation.max(v[i] - theta);
            }
        }
        if best.as_ref().is_none_or(|(b, _)| violation < *b) {
            best = Some((violation, x));
        }
    }
    best.expect("at least one support").1
}

/// `Π_S[W]` from the Jacobi eigenbasis and the exhaustive simplex oracle.
pub fn spectrahedron_oracle(w: &DMatrix<f64>) -> DMatrix<f64> {
    let (values, vectors) = jacobi_eigen(w);
    let weights = active_set_simplex(&values);
    let n = w.nrows();
    let mut p = DMatrix::<f64>::zeros(n, n);
    for (i, wi) in weights.iter().enumerate() {
        let u = vectors.column(i);
        p += &u * u.transpose() * *wi;
    }
    p
}

pub fn gaussian_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vector {
    Vector::from_fn(d, |_, _| rng.sample(StandardNormal))
}

pub fn random_unit<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vector {
    loop {
        let v = gaussian_vector(d, rng);
        let n = v.norm();
        if n > 1e-6 {
            return v / n;
        }
    }
}

/// Symmetric matrix with i.i.d. `N(0, scale²)` upper triangle.
pub fn random_symmetric<R: Rng + ?Sized>(d: usize, scale: f64, rng: &mut R) -> DMatrix<f64> {
    let mut m = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let x: f64 = rng.sample::<f64, _>(StandardNormal) * scale;
            m[(i, j)] = x;
            m[(j, i)] = x;
        }
    }
    m
}

pub fn sym(m: DMatrix<f64>) -> SymMatrix {
    SymMatrix::new(m).expect("symmetric by construction")
}

pub fn outer(u: &Vector) -> DMatrix<f64> {
    u * u.transpose()
}

/// `‖a aᵀ − b bᵀ‖_F`, formed entrywise so no cancellation hides in `1 − (aᵀb)²`.
pub fn outer_distance(a: &Vector, b: &Vector) -> f64 {
    (outer(a) - outer(b)).norm()
}
