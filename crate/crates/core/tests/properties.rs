//! Property tests over randomized inputs.

mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{gaussian_vector, outer, outer_distance, random_symmetric, random_unit, sym};
use streampca::evaluation::{BlockDiagnostics, RegretLedger};
use streampca::learners::{lifted_eigen, LearnerKind, LearnerState};
use streampca::stream_model::{AdversaryKind, AdversarySpec, DistributionKind, SpikedModel, StreamGenerator};
use streampca::symmat::{
    eig_sym, eigenvalues_sym, simplex_project, spectrahedron_project, top_eigenpair, SymMatrix, Vector,
};

fn kind_from(i: u8) -> DistributionKind {
    match i % 3 {
        0 => DistributionKind::TruncatedGaussian,
        1 => DistributionKind::RawGaussian,
        _ => DistributionKind::BoundedUniformMixture,
    }
}

fn model(d: usize, kind: DistributionKind, rng: &mut ChaCha8Rng) -> SpikedModel {
    let mut eigs: Vec<f64> = (0..d).map(|_| rng.random_range(0.01..1.0)).collect();
    eigs.sort_by(|a, b| b.total_cmp(a));
    eigs[0] += 0.5;
    SpikedModel::with_random_basis(eigs, kind, rng).unwrap()
}

fn adversary(i: u8, d: usize, v: f64, rng: &mut ChaCha8Rng) -> AdversarySpec {
    let kind = match i % 5 {
        0 => AdversaryKind::None,
        1 => AdversaryKind::FixedVector {
            direction: random_unit(d, rng),
        },
        2 => AdversaryKind::Rotating { period: 7 },
        3 => AdversaryKind::GreedyOrthogonal { magnitude: v },
        _ => AdversaryKind::GaussianNoise {
            eigenvalues: vec![(v / 2.0).powi(2) / d as f64; d],
            truncate: true,
        },
    };
    AdversarySpec {
        kind,
        radius: v,
        seed: rng.random(),
    }
}

fn learner_kind(i: u8) -> LearnerKind {
    match i % 4 {
        0 => LearnerKind::NonconvexOga,
        1 => LearnerKind::RankOneOga,
        2 => LearnerKind::ConvexOga,
        _ => LearnerKind::Fixed,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eig_reconstructs_orthonormal_descending(seed: u64, d in 1usize..10, scale in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_symmetric(d, scale, &mut rng);
        let e = eig_sym(&sym(m.clone())).unwrap();
        let a_norm = m.norm();
        prop_assert!((e.reconstruct().as_matrix() - &m).norm() <= 1e-10 * (1.0 + a_norm));
        let u = e.eigenvectors();
        prop_assert!((u.transpose() * u - DMatrix::<f64>::identity(d, d)).amax() <= 1e-10);
        prop_assert!(e.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
        let (top, v) = top_eigenpair(&sym(m)).unwrap();
        prop_assert_eq!(top, e.eigenvalues()[0]);
        prop_assert_eq!(v, e.vector(0));
    }

    #[test]
    fn simplex_projection_lands_on_simplex(xs in prop::collection::vec(-50.0f64..50.0, 1..20)) {
        let p = simplex_project(&xs).unwrap();
        prop_assert!(p.iter().all(|x| *x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12 * xs.len() as f64);
        let again = simplex_project(&p).unwrap();
        prop_assert!(p.iter().zip(&again).all(|(a, b)| (a - b).abs() <= 1e-12));
        // Order is preserved.
        for i in 0..xs.len() {
            for j in 0..xs.len() {
                if xs[i] > xs[j] {
                    prop_assert!(p[i] >= p[j]);
                }
            }
        }
    }

    #[test]
    fn spectrahedron_projection_is_a_projection(seed: u64, d in 1usize..8, scale in 0.01f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_symmetric(d, scale, &mut rng);
        let p = spectrahedron_project(&sym(m)).unwrap();
        prop_assert!((p.trace() - 1.0).abs() <= 1e-10);
        prop_assert!(*eigenvalues_sym(&p).unwrap().last().unwrap() >= -1e-12);
        let again = spectrahedron_project(&p).unwrap();
        prop_assert!((again.as_matrix() - p.as_matrix()).norm() <= 1e-10);
    }

    #[test]
    fn stream_records_decompose_and_respect_bounds(
        seed: u64, d in 1usize..8, k in 0u8..3, a in 0u8..5, v in 0.05f64..1.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kind = kind_from(k);
        let m = model(d, kind, &mut rng);
        let spec = adversary(a, d, v, &mut rng);
        let stream_seed = rng.random();
        let mut g = StreamGenerator::new(m.clone(), spec.clone(), stream_seed).unwrap();
        let reference = random_unit(d, &mut rng);
        g.set_reference(Some(reference.clone()));
        let records = g.records(50);
        for r in &records {
            let (q, pert) = (r.q().unwrap(), r.v().unwrap());
            prop_assert_eq!(r.x(), &(q + pert));
            if kind.has_bounded_support() {
                prop_assert!(q.norm() <= m.radius() * (1.0 + 1e-12));
            }
            prop_assert!(pert.norm() <= spec.bound() * (1.0 + 1e-12) + 1e-15);
            if matches!(spec.kind, AdversaryKind::GreedyOrthogonal { .. }) {
                prop_assert!(pert.dot(&reference).abs() <= 1e-12);
            }
        }
        let mut again = StreamGenerator::new(m, spec, stream_seed).unwrap();
        again.set_reference(Some(reference));
        prop_assert_eq!(again.records(50), records);
    }

    #[test]
    fn learner_iterates_stay_unit(seed: u64, d in 2usize..8, kind in 0u8..4, ell in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = LearnerState::new(learner_kind(kind), &gaussian_vector(d, &mut rng)).unwrap();
        for _ in 0..10 {
            let block: Vec<Vector> = (0..ell).map(|_| gaussian_vector(d, &mut rng)).collect();
            let eta = rng.random_range(1e-4..1.0);
            let alpha = rng.random_range(0.0..0.9 / eta);
            state = state.step(&block, eta, alpha).unwrap().0;
            prop_assert!((state.w_hat().norm() - 1.0).abs() <= 1e-12);
            if let Some(w) = state.lifted() {
                prop_assert!((w.trace() - 1.0).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn nonconvex_step_is_one_power_iteration(seed: u64, d in 2usize..8, ell in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_unit(d, &mut rng);
        let block: Vec<Vector> = (0..ell).map(|_| gaussian_vector(d, &mut rng)).collect();
        let eta = rng.random_range(1e-4..1.0);
        let alpha = rng.random_range(0.0..0.99 / eta);
        let next = LearnerState::new(LearnerKind::NonconvexOga, &w).unwrap().step(&block, eta, alpha).unwrap().0;
        let mut lifted = outer(&w) * (1.0 - eta * alpha);
        for x in &block {
            lifted += outer(x) * eta;
        }
        let power = (&lifted * &w).normalize();
        prop_assert!((next.w_hat() - power).amax() <= 1e-12);
    }

    #[test]
    fn alpha_zero_rank_one_step_is_top_eigenvector_of_data_plus_prior(seed: u64, d in 2usize..8, ell in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_unit(d, &mut rng);
        let block: Vec<Vector> = (0..ell).map(|_| gaussian_vector(d, &mut rng)).collect();
        let eta = rng.random_range(1e-3..1.0);
        let next = LearnerState::new(LearnerKind::RankOneOga, &w).unwrap().step(&block, eta, 0.0).unwrap().0;
        let mut lifted = outer(&w);
        for x in &block {
            lifted += outer(x) * eta;
        }
        let e = eig_sym(&sym(lifted)).unwrap();
        let gap = e.eigenvalues()[0] - e.eigenvalues()[1];
        prop_assume!(gap > 1e-6);
        prop_assert!(outer_distance(next.w_hat(), &e.vector(0)) <= 1e-8 / gap.min(1.0));
        prop_assert!(next.w_hat().dot(&w) >= 0.0);
    }

    #[test]
    fn gram_path_matches_dense_eigensolve(seed: u64, d in 3usize..12, ell in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_unit(d, &mut rng);
        let block: Vec<Vector> = (0..ell).map(|_| gaussian_vector(d, &mut rng)).collect();
        let eta = rng.random_range(1e-3..1.0);
        let alpha = rng.random_range(0.0..0.99 / eta);
        let fast = lifted_eigen(&w, &block, eta, alpha).unwrap();
        let mut lifted = outer(&w) * (1.0 - eta * alpha);
        for x in &block {
            lifted += outer(x) * eta;
        }
        let e = eig_sym(&sym(lifted)).unwrap();
        let scale = 1.0 + e.eigenvalues()[0];
        prop_assert!((fast.lambda1 - e.eigenvalues()[0]).abs() <= 1e-10 * scale);
        prop_assert!((fast.lambda2 - e.eigenvalues()[1].max(0.0)).abs() <= 1e-10 * scale);
        let gap = e.eigenvalues()[0] - e.eigenvalues()[1];
        prop_assume!(gap > 1e-6);
        prop_assert!(outer_distance(&fast.vector, &e.vector(0)) <= 1e-8 / gap.min(1.0));
    }

    #[test]
    fn ledger_is_additive_and_regret_is_exact(seed: u64, d in 1usize..6, n in 1usize..60, ell in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stream: Vec<Vector> = (0..n).map(|_| gaussian_vector(d, &mut rng)).collect();
        let w = random_unit(d, &mut rng);
        let mut incremental = RegretLedger::new(d);
        for block in stream.chunks(ell) {
            incremental.record_block(&w, block, BlockDiagnostics::default()).unwrap();
        }
        let mut batch = RegretLedger::new(d);
        batch.record_block(&w, &stream, BlockDiagnostics::default()).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()));
        prop_assert!(rel(incremental.cumulative_payoff(), batch.cumulative_payoff()));
        prop_assert!(rel(incremental.sum_sq_norms(), batch.sum_sq_norms()));
        prop_assert_eq!(incremental.n_seen(), batch.n_seen());
        prop_assert!((incremental.sum_outer().as_matrix() - batch.sum_outer().as_matrix()).norm()
            <= 1e-9 * (1.0 + batch.sum_outer().frobenius_norm()));
        prop_assert!(rel(incremental.regret().unwrap(), batch.regret().unwrap()));

        // Literal identity against a recomputation from the raw stream.
        let outer_sum = SymMatrix::sum_of_outers(d, &stream);
        let payoff: f64 = stream.iter().map(|x| x.dot(&w).powi(2)).sum();
        let lambda1 = eigenvalues_sym(&outer_sum).unwrap()[0];
        prop_assert!(rel(incremental.regret().unwrap(), lambda1 - payoff));
        prop_assert!(incremental.cumulative_payoff() <= outer_sum.trace() * (1.0 + 1e-6));
        prop_assert!(incremental.regret().unwrap() >= -1e-9 * (1.0 + outer_sum.trace()));
    }

    #[test]
    fn online_predictions_never_beat_the_trace(seed: u64, d in 1usize..6, n in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ledger = RegretLedger::new(d);
        for _ in 0..n {
            let x = gaussian_vector(d, &mut rng);
            ledger.record_block(&random_unit(d, &mut rng), &[x], BlockDiagnostics::default()).unwrap();
        }
        prop_assert!(ledger.cumulative_payoff() <= ledger.sum_outer().trace() * (1.0 + 1e-6));
        prop_assert!((ledger.sum_sq_norms() - ledger.sum_outer().trace()).abs() <= 1e-9 * (1.0 + ledger.sum_sq_norms()));
    }
}
