mod common;

use proptest::prelude::*;
use rand::Rng;
use sglst::projections::{project_nonneg, project_simplex};

/// Michelot's iterative active-set projection: repeatedly project onto the
/// affine hull of the current support and drop negative coordinates.
fn michelot(v: &[f64]) -> Vec<f64> {
    let mut active: Vec<bool> = vec![true; v.len()];
    loop {
        let count = active.iter().filter(|&&a| a).count() as f64;
        let sum: f64 = v.iter().zip(&active).filter(|(_, &a)| a).map(|(x, _)| x).sum();
        let shift = (sum - 1.0) / count;
        let mut changed = false;
        for (i, a) in active.iter_mut().enumerate() {
            if *a && v[i] - shift < 0.0 {
                *a = false;
                changed = true;
            }
        }
        if !changed {
            return v
                .iter()
                .zip(&active)
                .map(|(x, &a)| if a { x - shift } else { 0.0 })
                .collect();
        }
    }
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn hand_case_matches_oracle() {
    let oracle = michelot(&[0.5, 0.5, 1.0]);
    assert!(linf(&oracle, &[1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0]) < 1e-15);
    assert!(linf(&project_simplex(&[0.5, 0.5, 1.0]).unwrap(), &oracle) < 1e-15);
}

#[test]
fn matches_active_set_oracle_on_random_vectors() {
    let mut r = common::rng(11);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = r.random_range(2..=20);
        let v: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
        worst = worst.max(linf(&project_simplex(&v).unwrap(), &michelot(&v)));
    }
    assert!(worst <= 1e-8, "worst l_inf gap {worst}");
}

fn vec_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, 2..20)
}

proptest! {
    #[test]
    fn simplex_output_is_feasible(v in vec_strategy()) {
        let w = project_simplex(&v).unwrap();
        prop_assert!(w.iter().all(|&x| x >= 0.0));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn simplex_is_idempotent(v in vec_strategy()) {
        let w = project_simplex(&v).unwrap();
        let ww = project_simplex(&w).unwrap();
        prop_assert!(linf(&w, &ww) <= 1e-12);
    }

    #[test]
    fn simplex_is_permutation_equivariant(v in vec_strategy(), seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let mut perm: Vec<usize> = (0..v.len()).collect();
        for i in (1..perm.len()).rev() {
            perm.swap(i, r.random_range(0..=i));
        }
        let permuted: Vec<f64> = perm.iter().map(|&i| v[i]).collect();
        let w = project_simplex(&v).unwrap();
        let wp = project_simplex(&permuted).unwrap();
        let expected: Vec<f64> = perm.iter().map(|&i| w[i]).collect();
        prop_assert!(linf(&wp, &expected) <= 1e-12);
    }

    #[test]
    fn nonneg_is_a_contraction(pair in (2usize..20).prop_flat_map(|n| (
        prop::collection::vec(-5.0f64..5.0, n),
        prop::collection::vec(-5.0f64..5.0, n),
    ))) {
        let (a, b) = pair;
        let pa = project_nonneg(&a).unwrap();
        let pb = project_nonneg(&b).unwrap();
        let d = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        prop_assert!(d(&pa, &pb) <= d(&a, &b) + 1e-15);
    }
}
