//! ADMM solver for structured group-local sparse coding.
//!
//! For one candidate with patch features `X` (d x l) and a dictionary `D`
//! (d x lk) built from `k` templates of `l` patches each, the solver finds the
//! code `C` ((lk) x l) minimizing
//!
//! ```text
//!     ||X - D C||_F^2 + lambda * sum_q max |C_q(:)|
//!     subject to  C >= 0,  1' C = 1'
//! ```
//!
//! where `C_q` is the l x l block of rows belonging to template `q`.
//!
//! The group max is lifted into a per-template level `m` with a nonnegative
//! slack `U` so that `C + U = m (x) 1 1'`, and the simplex and orthant
//! constraints are split off onto the copies `C_hat` and `U_hat`. One
//! iteration is
//!
//! 1. exact joint minimization over `(C, U)` with every l x l block of
//!    `C + U` constant (a linear solve with a cached inverse plus a k x k
//!    system for `m`),
//! 2. column-wise simplex projection for `C_hat`,
//! 3. clamping for `U_hat`,
//! 4. dual ascent on both consensus constraints.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::projections::project_simplex_in_place;

/// Patch dictionary: `k` templates of `l` patch columns each, template-major.
///
/// Column `q * l + r` is patch `r` of template `q`. The feature extractors
/// produce unit-norm (or zero) columns; this type does not enforce it.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    data: DMatrix<f64>,
    patches: usize,
    templates: usize,
}

impl Dictionary {
    pub fn new(data: DMatrix<f64>, patches: usize, templates: usize) -> Result<Self> {
        if patches == 0 || templates == 0 || data.nrows() == 0 {
            return Err(Error::invalid("dictionary dimensions must be positive"));
        }
        if data.ncols() != patches * templates {
            return Err(Error::invalid(format!(
                "dictionary has {} columns, expected l*k = {}",
                data.ncols(),
                patches * templates
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("dictionary contains non-finite entries"));
        }
        Ok(Self {
            data,
            patches,
            templates,
        })
    }

    /// Concatenates per-template feature matrices horizontally.
    pub fn from_templates<'a, I>(blocks: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a CandidateFeatures>,
    {
        let blocks: Vec<&CandidateFeatures> = blocks.into_iter().collect();
        let first = blocks
            .first()
            .ok_or_else(|| Error::invalid("at least one template is required"))?;
        let (d, l) = first.data.shape();
        if blocks.iter().any(|b| b.data.shape() != (d, l)) {
            return Err(Error::invalid("template feature matrices differ in shape"));
        }
        let k = blocks.len();
        let mut data = DMatrix::zeros(d, l * k);
        for (q, b) in blocks.iter().enumerate() {
            data.columns_mut(q * l, l).copy_from(&b.data);
        }
        Self::new(data, l, k)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn patches(&self) -> usize {
        self.patches
    }

    pub fn templates(&self) -> usize {
        self.templates
    }

    /// The d x l block of template `q`.
    pub fn block(&self, q: usize) -> DMatrix<f64> {
        self.data.columns(q * self.patches, self.patches).into_owned()
    }
}

/// Patch features of one candidate: d x l, column `r` is patch `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateFeatures {
    pub data: DMatrix<f64>,
    /// Set when at least one patch had zero energy and was left unnormalized.
    pub degenerate: bool,
}

impl CandidateFeatures {
    pub fn new(data: DMatrix<f64>) -> Self {
        Self {
            data,
            degenerate: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn patches(&self) -> usize {
        self.data.ncols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolverConfig {
    pub lambda: f64,
    pub mu: f64,
    pub max_iters: usize,
    /// Relative primal-residual tolerance.
    pub tol: f64,
    /// Record the objective of `C_hat` after every iteration.
    #[serde(default)]
    pub trace_objective: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            mu: 0.1,
            max_iters: 100,
            tol: 1e-4,
            trace_objective: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::invalid(format!("mu must be > 0, got {}", self.mu)));
        }
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be positive"));
        }
        Ok(())
    }
}

/// Cached factorizations for one dictionary and penalty `mu`.
///
/// `G = 2 D'D + 2 mu I` is factorized once; its inverse, `D'`, the matrix
/// `W = G^{-1} P` (with `P` the block-indicator `I_k (x) 1_l`) and the
/// Cholesky factor of the k x k system for `m` are kept for reuse across
/// iterations and candidates.
#[derive(Debug, Clone)]
pub struct Precomputation {
    patches: usize,
    templates: usize,
    mu: f64,
    gram_factor: Cholesky<f64, Dyn>,
    gram_inv: DMatrix<f64>,
    dict_t: DMatrix<f64>,
    block_response: DMatrix<f64>,
    level_factor: Cholesky<f64, Dyn>,
}

impl Precomputation {
    pub fn patches(&self) -> usize {
        self.patches
    }

    pub fn templates(&self) -> usize {
        self.templates
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `L L'` from the stored Cholesky factor of `G`.
    pub fn gram_reconstructed(&self) -> DMatrix<f64> {
        let l = self.gram_factor.l();
        &l * l.transpose()
    }

    /// `2 D' X`, the only candidate-dependent term of the (C, U) update.
    pub fn data_term(&self, x: &CandidateFeatures) -> Result<DMatrix<f64>> {
        if x.dim() != self.dict_t.ncols() || x.patches() != self.patches {
            return Err(Error::invalid(format!(
                "candidate is {}x{}, dictionary expects {}x{}",
                x.dim(),
                x.patches(),
                self.dict_t.ncols(),
                self.patches
            )));
        }
        Ok(&self.dict_t * &x.data * 2.0)
    }
}

pub fn precompute(dict: &Dictionary, cfg: &SolverConfig) -> Result<Precomputation> {
    cfg.validate()?;
    let l = dict.patches();
    let k = dict.templates();
    let lk = l * k;
    let mu = cfg.mu;

    let dict_t = dict.matrix().transpose();
    let mut gram = &dict_t * dict.matrix() * 2.0;
    for i in 0..lk {
        gram[(i, i)] += 2.0 * mu;
    }
    let gram_factor = Cholesky::new(gram).ok_or_else(|| {
        Error::Numerical(format!(
            "2D'D + 2mu I ({lk}x{lk}, mu = {mu}) is not positive definite"
        ))
    })?;
    let gram_inv = gram_factor.inverse();

    // W[:, q] = G^{-1} (e_q (x) 1_l)
    let mut block_response = DMatrix::zeros(lk, k);
    for q in 0..k {
        for i in 0..lk {
            block_response[(i, q)] = gram_inv.columns(q * l, l).row(i).sum();
        }
    }

    // K = l^2 I - mu l P' W
    let lf = l as f64;
    let mut level = DMatrix::zeros(k, k);
    for p in 0..k {
        for q in 0..k {
            let s: f64 = block_response.view((p * l, q), (l, 1)).sum();
            level[(p, q)] = -mu * lf * s;
        }
        level[(p, p)] += lf * lf;
    }
    let level_factor = Cholesky::new(level)
        .ok_or_else(|| Error::Numerical("reduced level system is not positive definite".into()))?;

    Ok(Precomputation {
        patches: l,
        templates: k,
        mu,
        gram_factor,
        gram_inv,
        dict_t,
        block_response,
        level_factor,
    })
}

/// All ADMM iterates for one candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub c: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub c_hat: DMatrix<f64>,
    pub u_hat: DMatrix<f64>,
    pub lambda1: DMatrix<f64>,
    pub lambda2: DMatrix<f64>,
    /// Per-template level: every entry of block `q` of `C + U` equals `m[q]`.
    pub m: DVector<f64>,
    pub iter: usize,
    pub residual_trace: Vec<(f64, f64)>,
}

impl SolverState {
    /// Uniform feasible code, zero slack and zero multipliers.
    pub fn initial(patches: usize, templates: usize) -> Self {
        let lk = patches * templates;
        let zeros = DMatrix::zeros(lk, patches);
        Self {
            c: DMatrix::from_element(lk, patches, 1.0 / lk as f64),
            u: zeros.clone(),
            c_hat: DMatrix::from_element(lk, patches, 1.0 / lk as f64),
            u_hat: zeros.clone(),
            lambda1: zeros.clone(),
            lambda2: zeros,
            m: DVector::zeros(templates),
            iter: 0,
            residual_trace: Vec::new(),
        }
    }
}

/// Joint (C, U) minimization of the augmented Lagrangian with block-constant
/// `C + U`.
pub fn update_cu(
    state: &mut SolverState,
    x: &CandidateFeatures,
    pre: &Precomputation,
    cfg: &SolverConfig,
) -> Result<()> {
    let data_term = pre.data_term(x)?;
    update_cu_with(state, &data_term, pre, cfg);
    Ok(())
}

/// [`update_cu`] with `2 D' X` already computed.
pub fn update_cu_with(
    state: &mut SolverState,
    data_term: &DMatrix<f64>,
    pre: &Precomputation,
    cfg: &SolverConfig,
) {
    let l = pre.patches;
    let k = pre.templates;
    let mu = pre.mu;
    let inv_mu = 1.0 / mu;

    // R0 = 2D'X + mu (C_hat - Lambda1/mu) - mu B, with slack target B = U_hat - Lambda2/mu
    let mut rhs = data_term.clone();
    let mut slack_sums = DVector::<f64>::zeros(k);
    for j in 0..l {
        for i in 0..l * k {
            let b = state.u_hat[(i, j)] - state.lambda2[(i, j)] * inv_mu;
            slack_sums[i / l] += b;
            rhs[(i, j)] += mu * (state.c_hat[(i, j)] - b) - state.lambda1[(i, j)];
        }
    }
    state.c.gemm(1.0, &pre.gram_inv, &rhs, 0.0);

    let mut levels = DVector::zeros(k);
    for q in 0..k {
        levels[q] = state.c.rows(q * l, l).sum() + slack_sums[q] - cfg.lambda * inv_mu;
    }
    pre.level_factor.solve_mut(&mut levels);

    let shift = &pre.block_response * &levels * mu;
    for j in 0..l {
        state.c.column_mut(j).axpy(1.0, &shift, 1.0);
    }
    for j in 0..l {
        for i in 0..l * k {
            state.u[(i, j)] = levels[i / l] - state.c[(i, j)];
        }
    }

    state.m = levels;
}

/// `C_hat[:, j] = project_simplex(C[:, j] + Lambda1[:, j] / mu)`.
pub fn update_chat(state: &mut SolverState, cfg: &SolverConfig) -> Result<()> {
    let mut next = &state.c + &state.lambda1 / cfg.mu;
    for mut col in next.column_iter_mut() {
        project_simplex_in_place(col.as_mut_slice())?;
    }
    state.c_hat = next;
    Ok(())
}

/// `U_hat = max(U + Lambda2 / mu, 0)`.
pub fn update_uhat(state: &mut SolverState, cfg: &SolverConfig) -> Result<()> {
    let next = (&state.u + &state.lambda2 / cfg.mu).map(|v| v.max(0.0));
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("slack iterate became non-finite".into()));
    }
    state.u_hat = next;
    Ok(())
}

pub fn update_duals(state: &mut SolverState, cfg: &SolverConfig) {
    state.lambda1 += (&state.c - &state.c_hat) * cfg.mu;
    state.lambda2 += (&state.u - &state.u_hat) * cfg.mu;
}

/// `(||C - C_hat||_F, ||U - U_hat||_F)`.
pub fn residuals(state: &SolverState) -> (f64, f64) {
    (
        (&state.c - &state.c_hat).norm(),
        (&state.u - &state.u_hat).norm(),
    )
}

/// Fidelity plus group penalty: `||X - D C||_F^2 + lambda * sum_q max|C_q(:)|`.
pub fn objective(
    c: &DMatrix<f64>,
    x: &CandidateFeatures,
    dict: &Dictionary,
    lambda: f64,
) -> Result<f64> {
    let l = dict.patches();
    if c.nrows() != dict.matrix().ncols() || c.ncols() != x.patches() || x.dim() != dict.dim()
    {
        return Err(Error::invalid(format!(
            "shape mismatch: C {}x{}, X {}x{}, D {}x{}",
            c.nrows(),
            c.ncols(),
            x.dim(),
            x.patches(),
            dict.dim(),
            dict.matrix().ncols()
        )));
    }
    let fidelity = (&x.data - dict.matrix() * c).norm_squared();
    let penalty: f64 = (0..dict.templates())
        .map(|q| c.rows(q * l, l).amax())
        .sum();
    Ok(fidelity + lambda * penalty)
}

/// Gradient of the fidelity term `||X - D C||_F^2` with respect to `C`.
pub fn fidelity_gradient(c: &DMatrix<f64>, x: &CandidateFeatures, dict: &Dictionary) -> DMatrix<f64> {
    let residual = &x.data - dict.matrix() * c;
    dict.matrix().transpose() * residual * -2.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub final_residuals: (f64, f64),
    pub final_objective: f64,
    /// Objective of `C_hat` per iteration; empty unless `trace_objective`.
    pub objective_trace: Vec<f64>,
    pub residual_trace: Vec<(f64, f64)>,
    /// Block levels `m` from the last (C, U) update.
    pub levels: DVector<f64>,
}

/// Runs ADMM from the uniform initialization and returns the feasible code
/// `C_hat`. Hitting `max_iters` is reported through `converged = false`.
pub fn solve(
    x: &CandidateFeatures,
    dict: &Dictionary,
    pre: &Precomputation,
    cfg: &SolverConfig,
) -> Result<(DMatrix<f64>, SolverDiagnostics)> {
    let mut out = solve_batch(std::slice::from_ref(x), dict, pre, cfg)?;
    Ok(out.pop().expect("one result per candidate"))
}

/// Solves many candidates against one dictionary in lockstep, so the linear
/// solve of each iteration is a single wide product instead of one narrow
/// product per candidate. Each candidate stops on its own residuals; the
/// results are those [`solve`] gives one at a time.
pub fn solve_batch(
    xs: &[CandidateFeatures],
    dict: &Dictionary,
    pre: &Precomputation,
    cfg: &SolverConfig,
) -> Result<Vec<(DMatrix<f64>, SolverDiagnostics)>> {
    cfg.validate()?;
    check_precomputation(dict, pre, cfg)?;
    let l = pre.patches;
    let k = pre.templates;
    let lk = l * k;
    let mu = pre.mu;
    let inv_mu = 1.0 / mu;

    let mut data_term = DMatrix::zeros(lk, l * xs.len());
    for (b, x) in xs.iter().enumerate() {
        data_term.columns_mut(b * l, l).copy_from(&pre.data_term(x)?);
    }

    // Column block `b` of the wide iterates belongs to candidate `live[b]`,
    // or to nobody once that candidate has finished. Finished blocks are
    // dropped from the matrices in bulk.
    let mut live: Vec<Option<usize>> = (0..xs.len()).map(Some).collect();
    let width = l * xs.len();
    let mut c = DMatrix::from_element(lk, width, 1.0 / lk as f64);
    let mut u = DMatrix::<f64>::zeros(lk, width);
    let mut c_hat = c.clone();
    let mut u_hat = DMatrix::<f64>::zeros(lk, width);
    let mut lambda1 = DMatrix::<f64>::zeros(lk, width);
    let mut lambda2 = DMatrix::<f64>::zeros(lk, width);
    let mut rhs = DMatrix::<f64>::zeros(lk, width);

    let mut residual_traces = vec![Vec::new(); xs.len()];
    let mut objective_traces = vec![Vec::new(); xs.len()];
    let mut results: Vec<Option<(DMatrix<f64>, SolverDiagnostics)>> = vec![None; xs.len()];
    let mut slack_sums = DVector::<f64>::zeros(k);
    let span = lk * l;

    for iter in 1..=cfg.max_iters {
        for (b, id) in live.iter().enumerate() {
            if id.is_none() {
                continue;
            }
            let block = b * span..(b + 1) * span;
            let out = &mut rhs.as_mut_slice()[block.clone()];
            let terms = data_term.as_slice()[block.clone()]
                .iter()
                .zip(&c_hat.as_slice()[block.clone()])
                .zip(&u_hat.as_slice()[block.clone()])
                .zip(&lambda1.as_slice()[block.clone()])
                .zip(&lambda2.as_slice()[block]);
            for (o, ((((&dt, &ch), &uh), &l1), &l2)) in out.iter_mut().zip(terms) {
                let slack = uh - l2 * inv_mu;
                *o = dt + mu * (ch - slack) - l1;
            }
        }
        c.gemm(1.0, &pre.gram_inv, &rhs, 0.0);

        let mut finished = 0;
        for (b, slot) in live.iter_mut().enumerate() {
            let Some(id) = *slot else {
                continue;
            };
            let block = b * span..(b + 1) * span;

            // Entries come in runs of `l` rows sharing one template block.
            slack_sums.fill(-cfg.lambda * inv_mu);
            let runs = u_hat.as_slice()[block.clone()]
                .chunks_exact(l)
                .zip(lambda2.as_slice()[block.clone()].chunks_exact(l))
                .zip(c.as_slice()[block.clone()].chunks_exact(l));
            for (r, ((uh, l2), cc)) in runs.enumerate() {
                let mut acc = 0.0;
                for t in 0..l {
                    acc += cc[t] + (uh[t] - l2[t] * inv_mu);
                }
                slack_sums[r % k] += acc;
            }
            let cb = &mut c.as_mut_slice()[block.clone()];
            let mut m = slack_sums.clone();
            pre.level_factor.solve_mut(&mut m);
            let shift = &pre.block_response * &m * mu;

            let (mut r1, mut r2, mut cn) = (0.0, 0.0, 0.0);
            for j in 0..l {
                let col = j * lk..(j + 1) * lk;
                let base = block.start + j * lk;
                let cc = &mut cb[col];
                let ch = &mut c_hat.as_mut_slice()[base..base + lk];
                let l1 = &mut lambda1.as_mut_slice()[base..base + lk];
                for i in 0..lk {
                    cc[i] += shift[i];
                    ch[i] = cc[i] + l1[i] * inv_mu;
                }
                project_simplex_in_place(ch)?;
                for i in 0..lk {
                    let d = cc[i] - ch[i];
                    l1[i] += d * mu;
                    r1 += d * d;
                    cn += cc[i] * cc[i];
                }

                let uu = &mut u.as_mut_slice()[base..base + lk];
                let uh = &mut u_hat.as_mut_slice()[base..base + lk];
                let l2 = &mut lambda2.as_mut_slice()[base..base + lk];
                for i in 0..lk {
                    uu[i] = m[i / l] - cc[i];
                }
                let mut finite = true;
                for i in 0..lk {
                    let v = uu[i] + l2[i] * inv_mu;
                    finite &= v.is_finite();
                    uh[i] = v.max(0.0);
                    let d = uu[i] - uh[i];
                    l2[i] += d * mu;
                    r2 += d * d;
                }
                if !finite {
                    return Err(Error::Numerical("slack iterate became non-finite".into()));
                }
            }

            let r = (r1.sqrt(), r2.sqrt());
            residual_traces[id].push(r);
            let code = || c_hat.columns(b * l, l).into_owned();
            if cfg.trace_objective {
                objective_traces[id].push(objective(&code(), &xs[id], dict, cfg.lambda)?);
            }
            let converged = r.0.max(r.1) / cn.sqrt().max(1.0) <= cfg.tol;
            if converged || iter == cfg.max_iters {
                let code = code();
                if !converged {
                    log::debug!("ADMM stopped at max_iters = {} with residuals {:?}", cfg.max_iters, r);
                }
                let diag = SolverDiagnostics {
                    iterations: iter,
                    converged,
                    final_residuals: r,
                    final_objective: objective(&code, &xs[id], dict, cfg.lambda)?,
                    objective_trace: std::mem::take(&mut objective_traces[id]),
                    residual_trace: std::mem::take(&mut residual_traces[id]),
                    levels: m,
                };
                results[id] = Some((code, diag));
                *slot = None;
            }
            if slot.is_none() {
                finished += 1;
            }
        }

        if finished == live.len() {
            break;
        }
        if 4 * finished >= live.len() {
            let keep: Vec<usize> = (0..live.len()).filter(|&b| live[b].is_some()).collect();
            let cols: Vec<usize> = keep.iter().flat_map(|&b| b * l..(b + 1) * l).collect();
            for m in [
                &mut data_term,
                &mut c,
                &mut u,
                &mut c_hat,
                &mut u_hat,
                &mut lambda1,
                &mut lambda2,
                &mut rhs,
            ] {
                *m = m.select_columns(&cols);
            }
            live = keep.iter().map(|&b| live[b]).collect();
        }
    }

    Ok(results
        .into_iter()
        .map(|r| r.expect("every candidate finishes by max_iters"))
        .collect())
}

fn check_precomputation(dict: &Dictionary, pre: &Precomputation, cfg: &SolverConfig) -> Result<()> {
    if dict.patches() != pre.patches
        || dict.templates() != pre.templates
        || dict.dim() != pre.dict_t.ncols()
    {
        return Err(Error::invalid("precomputation was built for a different dictionary"));
    }
    if (cfg.mu - pre.mu).abs() > 0.0 {
        return Err(Error::invalid(format!(
            "precomputation uses mu = {}, config has mu = {}",
            pre.mu, cfg.mu
        )));
    }
    Ok(())
}

/// Runs ADMM starting from an arbitrary state.
pub fn solve_from(
    state: &mut SolverState,
    x: &CandidateFeatures,
    dict: &Dictionary,
    pre: &Precomputation,
    cfg: &SolverConfig,
) -> Result<SolverDiagnostics> {
    cfg.validate()?;
    check_precomputation(dict, pre, cfg)?;
    let shape = (pre.patches * pre.templates, pre.patches);
    if [&state.c, &state.u, &state.c_hat, &state.u_hat, &state.lambda1, &state.lambda2]
        .iter()
        .any(|m| m.shape() != shape)
    {
        return Err(Error::invalid(format!("solver state iterates must all be {}x{}", shape.0, shape.1)));
    }
    let data_term = pre.data_term(x)?;

    let mut objective_trace = Vec::new();
    let mut converged = false;
    let mut last = (f64::INFINITY, f64::INFINITY);
    for _ in 0..cfg.max_iters {
        update_cu_with(state, &data_term, pre, cfg);
        update_chat(state, cfg)?;
        update_uhat(state, cfg)?;
        update_duals(state, cfg);
        state.iter += 1;

        last = residuals(state);
        state.residual_trace.push(last);
        if cfg.trace_objective {
            objective_trace.push(objective(&state.c_hat, x, dict, cfg.lambda)?);
        }
        if last.0.max(last.1) / state.c.norm().max(1.0) <= cfg.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::debug!(
            "ADMM stopped at max_iters = {} with residuals {:?}",
            cfg.max_iters,
            last
        );
    }

    Ok(SolverDiagnostics {
        iterations: state.iter,
        converged,
        final_residuals: last,
        final_objective: objective(&state.c_hat, x, dict, cfg.lambda)?,
        objective_trace,
        residual_trace: state.residual_trace.clone(),
        levels: state.m.clone(),
    })
}

/// Largest spread (max - min) of entries within any l x l block of `y`.
pub fn max_block_spread(y: &DMatrix<f64>, patches: usize) -> f64 {
    let k = y.nrows() / patches;
    (0..k)
        .map(|q| {
            let block = y.rows(q * patches, patches);
            block.max() - block.min()
        })
        .fold(0.0, f64::max)
}
