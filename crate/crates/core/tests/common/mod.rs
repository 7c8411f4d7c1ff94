//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SolverStatus, ZeroConeT,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sglst::{CandidateFeatures, Dictionary};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn unit_columns(mut m: DMatrix<f64>) -> DMatrix<f64> {
    for mut c in m.column_iter_mut() {
        let n = c.norm();
        c /= n;
    }
    m
}

/// Random nonnegative unit-column dictionary and candidate.
pub fn random_instance(seed: u64, d: usize, l: usize, k: usize) -> (Dictionary, CandidateFeatures) {
    let mut r = rng(seed);
    let dict = unit_columns(DMatrix::from_fn(d, l * k, |_, _| r.random::<f64>()));
    let x = unit_columns(DMatrix::from_fn(d, l, |_, _| r.random::<f64>()));
    (
        Dictionary::new(dict, l, k).unwrap(),
        CandidateFeatures::new(x),
    )
}

/// Objective with explicit loops (no matrix products).
pub fn naive_objective(c: &DMatrix<f64>, x: &DMatrix<f64>, dict: &DMatrix<f64>, l: usize, k: usize, lambda: f64) -> f64 {
    let (d, n) = x.shape();
    let mut fid = 0.0;
    for j in 0..n {
        for i in 0..d {
            let mut recon = 0.0;
            for p in 0..l * k {
                recon += dict[(i, p)] * c[(p, j)];
            }
            fid += (x[(i, j)] - recon).powi(2);
        }
    }
    let mut pen = 0.0;
    for q in 0..k {
        let mut mx: f64 = 0.0;
        for r in 0..l {
            for j in 0..n {
                mx = mx.max(c[(q * l + r, j)].abs());
            }
        }
        pen += mx;
    }
    fid + lambda * pen
}

pub struct OracleSolution {
    pub code: DMatrix<f64>,
    pub objective: f64,
}

/// Solves the group-sparse coding problem as a generic QP with Clarabel:
/// variables `vec(C)` and per-template bounds `t`, minimizing
/// `||X - D C||^2 + lambda * sum(t)` s.t. `1'C = 1'`, `C >= 0`, `C <= t_q`.
pub fn convex_oracle(dict: &Dictionary, x: &CandidateFeatures, lambda: f64) -> OracleSolution {
    let l = dict.patches();
    let k = dict.templates();
    let lk = l * k;
    let nc = lk * l;
    let n = nc + k;
    let dm = dict.matrix();
    let gram = dm.transpose() * dm;
    let dtx = dm.transpose() * &x.data;

    let mut p = vec![vec![0.0; n]; n];
    let mut q = vec![0.0; n];
    for j in 0..l {
        for a in 0..lk {
            for b in 0..lk {
                p[j * lk + a][j * lk + b] = 2.0 * gram[(a, b)];
            }
            q[j * lk + a] = -2.0 * dtx[(a, j)];
        }
    }
    for t in 0..k {
        q[nc + t] = lambda;
    }

    let mut a = Vec::new();
    let mut b = Vec::new();
    for j in 0..l {
        let mut row = vec![0.0; n];
        for i in 0..lk {
            row[j * lk + i] = 1.0;
        }
        a.push(row);
        b.push(1.0);
    }
    for v in 0..nc {
        let mut row = vec![0.0; n];
        row[v] = -1.0;
        a.push(row);
        b.push(0.0);
    }
    for j in 0..l {
        for i in 0..lk {
            let mut row = vec![0.0; n];
            row[j * lk + i] = 1.0;
            row[nc + i / l] = -1.0;
            a.push(row);
            b.push(0.0);
        }
    }

    let p = CscMatrix::from(&p).to_triu();
    let a = CscMatrix::from(&a);
    let cones = [ZeroConeT(l), NonnegativeConeT(2 * nc)];
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .tol_gap_abs(1e-12)
        .tol_gap_rel(1e-12)
        .tol_feas(1e-12)
        .max_iter(500)
        .build()
        .unwrap();
    let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings).unwrap();
    solver.solve();
    assert!(
        matches!(
            solver.solution.status,
            SolverStatus::Solved | SolverStatus::AlmostSolved
        ),
        "oracle status {:?}",
        solver.solution.status
    );
    let code = DMatrix::from_column_slice(lk, l, &solver.solution.x[..nc]);
    let objective = solver.solution.obj_val + x.data.norm_squared();
    OracleSolution { code, objective }
}

/// Number of template blocks whose largest entry exceeds `threshold`.
pub fn active_blocks(c: &DMatrix<f64>, l: usize, threshold: f64) -> usize {
    (0..c.nrows() / l)
        .filter(|&q| c.rows(q * l, l).amax() > threshold)
        .count()
}

/// Exact minimizer of the (C, U) augmented Lagrangian under block-constant
/// `C + U`, via one dense KKT system with explicit equality rows.
#[allow(clippy::too_many_arguments)]
pub fn kkt_cu_oracle(
    dict: &Dictionary,
    x: &CandidateFeatures,
    c_hat: &DMatrix<f64>,
    u_hat: &DMatrix<f64>,
    lambda1: &DMatrix<f64>,
    lambda2: &DMatrix<f64>,
    lambda: f64,
    mu: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let l = dict.patches();
    let k = dict.templates();
    let lk = l * k;
    let nc = lk * l;
    let nv = 2 * nc;
    let dm = dict.matrix();
    let gram = dm.transpose() * dm;
    let dtx = dm.transpose() * &x.data;
    let lin = lambda / (l * l) as f64;

    let idx = |i: usize, j: usize| j * lk + i;
    let mut h = DMatrix::zeros(nv, nv);
    let mut g = vec![0.0; nv];
    for j in 0..l {
        for a in 0..lk {
            for b in 0..lk {
                h[(idx(a, j), idx(b, j))] += 2.0 * gram[(a, b)];
            }
            h[(idx(a, j), idx(a, j))] += mu;
            h[(nc + idx(a, j), nc + idx(a, j))] += mu;
            g[idx(a, j)] = -2.0 * dtx[(a, j)] + lin - mu * (c_hat[(a, j)] - lambda1[(a, j)] / mu);
            g[nc + idx(a, j)] = lin - mu * (u_hat[(a, j)] - lambda2[(a, j)] / mu);
        }
    }

    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    for q in 0..k {
        for r in 0..l {
            for j in 0..l {
                if r == 0 && j == 0 {
                    continue;
                }
                let a = idx(q * l + r, j);
                let z = idx(q * l, 0);
                rows.push(vec![(a, 1.0), (nc + a, 1.0), (z, -1.0), (nc + z, -1.0)]);
            }
        }
    }
    let ne = rows.len();
    let mut kkt = DMatrix::zeros(nv + ne, nv + ne);
    kkt.view_mut((0, 0), (nv, nv)).copy_from(&h);
    let mut rhs = nalgebra::DVector::zeros(nv + ne);
    for (e, row) in rows.iter().enumerate() {
        for &(v, coef) in row {
            kkt[(nv + e, v)] += coef;
            kkt[(v, nv + e)] += coef;
        }
    }
    for v in 0..nv {
        rhs[v] = -g[v];
    }
    let sol = kkt.full_piv_lu().solve(&rhs).expect("KKT system is nonsingular");
    let c = DMatrix::from_fn(lk, l, |i, j| sol[idx(i, j)]);
    let u = DMatrix::from_fn(lk, l, |i, j| sol[nc + idx(i, j)]);
    (c, u)
}

/// Instance seed for which the oracle code at lambda = 10 (d=10, l=3, k=3)
/// uses exactly one template; most seeds keep two or three.
pub const GROUP_SPARSITY_SEED: u64 = 0;
