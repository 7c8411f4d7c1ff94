mod common;

use common::{active_blocks, convex_oracle, kkt_cu_oracle, naive_objective, random_instance, rng};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use sglst::solver::{
    fidelity_gradient, max_block_spread, objective, precompute, residuals, solve, solve_batch,
    solve_from, update_chat, update_cu, update_duals, update_uhat, CandidateFeatures, SolverConfig,
    SolverState,
};
use sglst::projections::project_simplex;

fn oracle_cfg(lambda: f64) -> SolverConfig {
    SolverConfig {
        lambda,
        mu: 0.1,
        max_iters: 2000,
        tol: 1e-6,
        trace_objective: false,
    }
}

fn random_matrix<R: Rng>(r: &mut R, rows: usize, cols: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| r.random_range(lo..hi))
}

#[test]
fn gram_reconstruction() {
    let (dict, _) = random_instance(5, 10, 4, 3);
    let cfg = SolverConfig::default();
    let pre = precompute(&dict, &cfg).unwrap();
    let mut direct = dict.matrix().transpose() * dict.matrix() * 2.0;
    for i in 0..12 {
        direct[(i, i)] += 0.2;
    }
    assert!((pre.gram_reconstructed() - direct).amax() < 1e-10);
}

#[test]
fn cu_update_matches_kkt_oracle() {
    let mut r = rng(21);
    for seed in 0..10 {
        let (dict, x) = random_instance(100 + seed, 10, 3, 2);
        let cfg = SolverConfig { lambda: 0.1, mu: 0.1, ..SolverConfig::default() };
        let pre = precompute(&dict, &cfg).unwrap();
        let mut st = SolverState::initial(3, 2);
        st.c_hat = random_matrix(&mut r, 6, 3, 0.0, 1.0);
        st.u_hat = random_matrix(&mut r, 6, 3, 0.0, 1.0);
        st.lambda1 = random_matrix(&mut r, 6, 3, -0.5, 0.5);
        st.lambda2 = random_matrix(&mut r, 6, 3, -0.5, 0.5);
        let (c_ref, u_ref) = kkt_cu_oracle(&dict, &x, &st.c_hat, &st.u_hat, &st.lambda1, &st.lambda2, 0.1, 0.1);
        update_cu(&mut st, &x, &pre, &cfg).unwrap();
        assert!((&st.c - c_ref).amax() < 1e-6, "C differs on seed {seed}");
        assert!((&st.u - u_ref).amax() < 1e-6, "U differs on seed {seed}");
        assert!(max_block_spread(&(&st.c + &st.u), 3) <= 1e-10);
    }
}

#[test]
fn uhat_matches_elementwise_clamp() {
    let mut r = rng(3);
    let cfg = SolverConfig::default();
    let mut st = SolverState::initial(3, 2);
    st.u = random_matrix(&mut r, 6, 3, -1.0, 1.0);
    st.lambda2 = random_matrix(&mut r, 6, 3, -0.1, 0.1);
    update_uhat(&mut st, &cfg).unwrap();
    for i in 0..6 {
        for j in 0..3 {
            let v = st.u[(i, j)] + st.lambda2[(i, j)] / cfg.mu;
            assert_eq!(st.u_hat[(i, j)], if v > 0.0 { v } else { 0.0 });
        }
    }
}

#[test]
fn chat_matches_columnwise_projection() {
    let mut r = rng(4);
    let cfg = SolverConfig::default();
    let mut st = SolverState::initial(3, 2);
    st.c = random_matrix(&mut r, 6, 3, -1.0, 1.0);
    st.lambda1 = random_matrix(&mut r, 6, 3, -0.1, 0.1);
    update_chat(&mut st, &cfg).unwrap();
    for j in 0..3 {
        let v: Vec<f64> = (0..6).map(|i| st.c[(i, j)] + st.lambda1[(i, j)] / cfg.mu).collect();
        let w = project_simplex(&v).unwrap();
        for i in 0..6 {
            assert_eq!(st.c_hat[(i, j)], w[i]);
        }
    }
}

#[test]
fn duals_and_residuals_match_direct_formulas() {
    let mut r = rng(5);
    let cfg = SolverConfig::default();
    let mut st = SolverState::initial(2, 2);
    st.c = random_matrix(&mut r, 4, 2, -1.0, 1.0);
    st.c_hat = random_matrix(&mut r, 4, 2, -1.0, 1.0);
    st.u = random_matrix(&mut r, 4, 2, -1.0, 1.0);
    st.u_hat = random_matrix(&mut r, 4, 2, -1.0, 1.0);
    st.lambda1 = random_matrix(&mut r, 4, 2, -1.0, 1.0);
    st.lambda2 = random_matrix(&mut r, 4, 2, -1.0, 1.0);
    let before = st.clone();
    update_duals(&mut st, &cfg);
    for i in 0..4 {
        for j in 0..2 {
            let l1 = before.lambda1[(i, j)] + cfg.mu * (before.c[(i, j)] - before.c_hat[(i, j)]);
            let l2 = before.lambda2[(i, j)] + cfg.mu * (before.u[(i, j)] - before.u_hat[(i, j)]);
            assert!((st.lambda1[(i, j)] - l1).abs() < 1e-15);
            assert!((st.lambda2[(i, j)] - l2).abs() < 1e-15);
        }
    }
    let (r1, r2) = residuals(&st);
    let sq = |a: &DMatrix<f64>, b: &DMatrix<f64>| {
        a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    };
    assert!((r1 - sq(&st.c, &st.c_hat)).abs() < 1e-14);
    assert!((r2 - sq(&st.u, &st.u_hat)).abs() < 1e-14);
}

#[test]
fn objective_matches_naive_loops() {
    let mut r = rng(6);
    for seed in 0..5 {
        let (dict, x) = random_instance(seed, 8, 3, 4);
        let c = random_matrix(&mut r, 12, 3, -1.0, 1.0);
        let fast = objective(&c, &x, &dict, 0.3).unwrap();
        let slow = naive_objective(&c, &x.data, dict.matrix(), 3, 4, 0.3);
        assert!((fast - slow).abs() <= 1e-12 * slow.max(1.0));
    }
}

#[test]
fn fidelity_gradient_matches_finite_differences() {
    let mut r = rng(7);
    for seed in 0..5 {
        let (dict, x) = random_instance(200 + seed, 10, 3, 3);
        let c = random_matrix(&mut r, 9, 3, 0.0, 1.0);
        let grad = fidelity_gradient(&c, &x, &dict);
        let h = 1e-5;
        let mut fd = DMatrix::zeros(9, 3);
        for i in 0..9 {
            for j in 0..3 {
                let mut cp = c.clone();
                let mut cm = c.clone();
                cp[(i, j)] += h;
                cm[(i, j)] -= h;
                fd[(i, j)] = (objective(&cp, &x, &dict, 0.0).unwrap()
                    - objective(&cm, &x, &dict, 0.0).unwrap())
                    / (2.0 * h);
            }
        }
        assert!((&grad - &fd).norm() <= 1e-4 * grad.norm());
    }
}

#[test]
fn reformulated_linear_term_equals_level_sum() {
    let mut r = rng(8);
    let (l, k) = (3, 4);
    for _ in 0..20 {
        let m = DVector::from_fn(k, |_, _| r.random_range(0.0..1.0));
        let c = DMatrix::from_fn(l * k, l, |i, _| m[i / l] * r.random_range(0.0..1.0));
        let levels = DMatrix::from_fn(l * k, l, |i, _| m[i / l]);
        let u = &levels - &c;
        let lambda = 0.1;
        let lifted = lambda / (l * l) as f64 * (&c + &u).sum();
        assert!((lifted - lambda * m.sum()).abs() <= 1e-15 * (1.0 + lifted.abs()));
    }
}

#[test]
fn solve_matches_convex_oracle_on_random_instances() {
    for seed in 0..10 {
        let (dict, x) = random_instance(1000 + seed, 10, 3, 3);
        let cfg = oracle_cfg(0.1);
        let pre = precompute(&dict, &cfg).unwrap();
        let (c, diag) = solve(&x, &dict, &pre, &cfg).unwrap();
        let oracle = convex_oracle(&dict, &x, 0.1);
        let rel = (diag.final_objective - oracle.objective).abs() / oracle.objective.abs();
        assert!(rel <= 1e-3, "seed {seed}: {} vs {}", diag.final_objective, oracle.objective);
        for col in c.column_iter() {
            assert!((col.sum() - 1.0).abs() <= 1e-15);
            assert!(col.iter().all(|&v| v >= 0.0));
        }
    }
}

#[test]
fn single_template_reaches_oracle_optimum() {
    let (dict, x) = random_instance(77, 10, 3, 1);
    let cfg = oracle_cfg(0.1);
    let pre = precompute(&dict, &cfg).unwrap();
    let (_, diag) = solve(&x, &dict, &pre, &cfg).unwrap();
    let oracle = convex_oracle(&dict, &x, 0.1);
    assert!((diag.final_objective - oracle.objective).abs() <= 1e-3 * oracle.objective);
}

#[test]
fn exact_template_match_concentrates_mass() {
    let (dict, _) = random_instance(31, 10, 3, 3);
    let x = sglst::CandidateFeatures::new(dict.block(1));
    let cfg = oracle_cfg(0.01);
    let pre = precompute(&dict, &cfg).unwrap();
    let (c, _) = solve(&x, &dict, &pre, &cfg).unwrap();
    let oracle = convex_oracle(&dict, &x, 0.01);
    for j in 0..3 {
        let inside: f64 = c.view((3, j), (3, 1)).sum();
        let inside_ref: f64 = oracle.code.view((3, j), (3, 1)).sum();
        assert!(inside_ref >= 0.9, "oracle puts {inside_ref} in block 1");
        assert!(inside >= 0.9, "column {j}: only {inside} of the mass in block 1");
    }
}

#[test]
fn residuals_shrink_over_the_run() {
    for seed in 0..10 {
        let (dict, x) = random_instance(1000 + seed, 10, 3, 3);
        let cfg = SolverConfig { tol: 1e-300, ..oracle_cfg(0.1) };
        let pre = precompute(&dict, &cfg).unwrap();
        let (_, diag) = solve(&x, &dict, &pre, &cfg).unwrap();
        let at = |i: usize| {
            let (a, b) = diag.residual_trace[i];
            a.max(b)
        };
        assert_eq!(diag.residual_trace.len(), 2000);
        assert!(at(1999) <= at(9), "seed {seed}");
    }
}

#[test]
fn cu_iterates_stay_block_constant() {
    let (dict, x) = random_instance(9, 10, 3, 3);
    let cfg = oracle_cfg(0.1);
    let pre = precompute(&dict, &cfg).unwrap();
    let mut st = SolverState::initial(3, 3);
    for _ in 0..200 {
        update_cu(&mut st, &x, &pre, &cfg).unwrap();
        assert!(max_block_spread(&(&st.c + &st.u), 3) <= 1e-10);
        update_chat(&mut st, &cfg).unwrap();
        update_uhat(&mut st, &cfg).unwrap();
        assert!(st.u_hat.iter().all(|&v| v >= 0.0));
        update_duals(&mut st, &cfg);
    }
}

#[test]
fn nonconvergence_is_soft() {
    let (dict, x) = random_instance(12, 10, 3, 3);
    let cfg = SolverConfig { max_iters: 3, tol: 1e-12, ..SolverConfig::default() };
    let pre = precompute(&dict, &cfg).unwrap();
    let (c, diag) = solve(&x, &dict, &pre, &cfg).unwrap();
    assert!(!diag.converged);
    assert_eq!(diag.iterations, 3);
    assert!(c.iter().all(|&v| v >= 0.0));
}

#[test]
fn objective_trace_is_recorded_on_request() {
    let (dict, x) = random_instance(13, 10, 3, 3);
    let cfg = SolverConfig { trace_objective: true, ..SolverConfig::default() };
    let pre = precompute(&dict, &cfg).unwrap();
    let (_, diag) = solve(&x, &dict, &pre, &cfg).unwrap();
    assert_eq!(diag.objective_trace.len(), diag.iterations);
    assert_eq!(*diag.objective_trace.last().unwrap(), diag.final_objective);
}

#[test]
fn large_lambda_selects_one_template() {
    let (dict, x) = random_instance(common::GROUP_SPARSITY_SEED, 10, 3, 3);
    let oracle = convex_oracle(&dict, &x, 10.0);
    assert_eq!(active_blocks(&oracle.code, 3, 1e-3), 1);
    let cfg = oracle_cfg(10.0);
    let pre = precompute(&dict, &cfg).unwrap();
    let (c, _) = solve(&x, &dict, &pre, &cfg).unwrap();
    assert_eq!(active_blocks(&c, 3, 1e-3), 1);
}

#[test]
fn batch_matches_one_at_a_time() {
    let (dict, _) = random_instance(14, 12, 4, 3);
    let mut r = rng(15);
    let xs: Vec<CandidateFeatures> = (0..7)
        .map(|_| CandidateFeatures::new(random_matrix(&mut r, 12, 4, 0.0, 1.0)))
        .collect();
    for cfg in [
        SolverConfig::default(),
        SolverConfig { max_iters: 5, tol: 1e-12, trace_objective: true, ..SolverConfig::default() },
        oracle_cfg(0.5),
    ] {
        let pre = precompute(&dict, &cfg).unwrap();
        let batch = solve_batch(&xs, &dict, &pre, &cfg).unwrap();
        for (x, (code, diag)) in xs.iter().zip(&batch) {
            let mut state = SolverState::initial(4, 3);
            let one = solve_from(&mut state, x, &dict, &pre, &cfg).unwrap();
            assert_eq!(diag.iterations, one.iterations);
            assert_eq!(diag.converged, one.converged);
            assert_eq!(diag.objective_trace.len(), one.objective_trace.len());
            assert!((code - &state.c_hat).amax() < 1e-9);
            assert!((diag.final_objective - one.final_objective).abs() < 1e-9);
        }
    }
}
