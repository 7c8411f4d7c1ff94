//! Euclidean projections onto the probability simplex and the nonnegative
//! orthant.
//!
//! Both are the closed-form kernels of the auxiliary-variable updates in the
//! ADMM solver: each code column is projected onto the simplex, each slack
//! entry is clamped at zero.

use crate::error::{Error, Result};

fn check_finite(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::invalid(format!(
            "non-finite entry {} at index {i}",
            v[i]
        ))),
        None => Ok(()),
    }
}

/// Projects `v` onto `{w : w >= 0, sum(w) = 1}` by sort-and-threshold.
pub fn project_simplex(v: &[f64]) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    project_simplex_in_place(&mut out)?;
    Ok(out)
}

/// In-place variant of [`project_simplex`].
pub fn project_simplex_in_place(v: &mut [f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::invalid("cannot project an empty vector"));
    }
    check_finite(v)?;

    // The threshold is at least max(v) - 1 and at least (sum(v) - 1) / n, so
    // entries at or below either bound are outside the support.
    let n = v.len() as f64;
    let (mut max, mut sum) = (f64::NEG_INFINITY, 0.0);
    for &x in v.iter() {
        max = max.max(x);
        sum += x;
    }
    let floor = (max - 1.0).max((sum - 1.0) / n);
    let mut sorted: Vec<f64> = v.iter().copied().filter(|&x| x > floor).collect();

    // The support condition holds on a prefix of the descending order, so
    // only a leading run needs sorting; widen it until the scan stops inside.
    let desc = |a: &f64, b: &f64| b.total_cmp(a);
    let mut theta = 0.0;
    let mut head = sorted.len().min(16);
    loop {
        if head < sorted.len() {
            sorted.select_nth_unstable_by(head - 1, desc);
        }
        sorted[..head].sort_unstable_by(desc);
        let mut cumsum = 0.0;
        let mut stopped = false;
        for (i, &u) in sorted[..head].iter().enumerate() {
            cumsum += u;
            let t = (cumsum - 1.0) / (i + 1) as f64;
            if u - t <= 0.0 {
                stopped = true;
                break;
            }
            theta = t;
        }
        if stopped || head == sorted.len() {
            break;
        }
        head = (2 * head).min(sorted.len());
    }

    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }

    // Absorb rounding drift into the largest entry so the sum is exactly one.
    let mut largest = 0;
    for i in 1..v.len() {
        if v[i] > v[largest] {
            largest = i;
        }
    }

    let drift = v.iter().sum::<f64>() - 1.0;
    v[largest] -= drift;
    Ok(())
}

/// Elementwise `max(v, 0)`.
pub fn project_nonneg(v: &[f64]) -> Result<Vec<f64>> {
    check_finite(v)?;
    Ok(v.iter().map(|&x| x.max(0.0)).collect())
}
