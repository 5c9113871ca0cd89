//! Convex quadratic programs over the nonnegative cone:
//! (P1)  minimize w'Kw - 2 b'w  subject to  w >= 0
//! (P2)  the same with the extra constraint  sum(w) = m.
//! Solved by a primal active-set method with an updatable Cholesky factor,
//! plus a brute-force support-enumeration oracle for small instances.

use crate::linalg::{pairwise_dot, pairwise_sum, solve_dense, LinalgError, SymMatrix, UpdatableCholesky};

#[derive(Debug, thiserror::Error)]
pub enum QpError {
    #[error("kernel matrix is not positive definite: {0}")]
    NotPositiveDefinite(#[from] LinalgError),
    #[error("dimension mismatch between K ({k}) and b ({b})")]
    DimMismatch { k: usize, b: usize },
    #[error("mass constraint must be positive, got {0}")]
    BadMass(f64),
    #[error("oracle limited to N <= {cap}, got {n}")]
    OracleTooLarge { n: usize, cap: usize },
    #[error("oracle found no KKT point (tolerance issue)")]
    OracleFailed,
    #[error("empty problem")]
    Empty,
}

#[derive(Clone, Copy, Debug)]
pub enum Start {
    /// Uniform feasible vector for (P2); positive-coefficient support for (P1).
    Auto,
    /// All mass on one point (P2 only); used to probe uniqueness.
    Vertex(usize),
}

#[derive(Clone, Copy, Debug)]
pub struct QpOptions {
    /// Relative KKT tolerance; absolute tolerance is this times the
    /// potential scale max(|b|, max|K| * max(w)).
    pub eps_kkt_rel: f64,
    pub max_iters: usize,
    pub start: Start,
}

impl Default for QpOptions {
    fn default() -> Self {
        QpOptions { eps_kkt_rel: 1e-7, max_iters: 0, start: Start::Auto }
    }
}

#[derive(Clone, Debug)]
pub struct QpSolution {
    pub w: Vec<f64>,
    pub objective: f64,
    /// Mass-constraint multiplier (the constant value of (Kw - b)_i on the
    /// solution support); present for (P2).
    pub multiplier: Option<f64>,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective value after every weight-changing iteration (monotone).
    pub objective_trace: Vec<f64>,
}

fn objective_of(k: &SymMatrix, b: &[f64], w: &[f64]) -> f64 {
    k.quad_form(w) - 2.0 * pairwise_dot(b, w)
}

/// Objective restricted to a known support: valid only when `w` vanishes off
/// `free`; costs O(|free|^2) instead of O(n^2).
fn objective_sparse(k: &SymMatrix, b: &[f64], w: &[f64], free: &[usize]) -> f64 {
    let mut terms = Vec::with_capacity(free.len());
    for &i in free {
        let mut row = 0.0;
        for &j in free {
            row += k.get(i, j) * w[j];
        }
        terms.push(w[i] * (row - 2.0 * b[i]));
    }
    pairwise_sum(&terms)
}

/// Scale of potential-valued quantities for relative tolerances:
/// max(|b|_inf, max|K| * max(w)).
pub fn potential_scale(k: &SymMatrix, b: &[f64], w: &[f64]) -> f64 {
    let max_b = b.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let max_w = w.iter().fold(0.0f64, |m, &v| m.max(v));
    (k.max_abs() * max_w).max(max_b).max(1e-300)
}

/// KKT residual in potential units: dual feasibility everywhere, stationarity
/// on the support, and (for P2) the mass defect.
pub fn kkt_residual(k: &SymMatrix, b: &[f64], mass: Option<f64>, w: &[f64]) -> f64 {
    let phi = {
        let kw = k.mul_vec(w);
        kw.iter().zip(b).map(|(a, c)| a - c).collect::<Vec<f64>>()
    };
    let max_w = w.iter().fold(0.0f64, |m, &v| m.max(v));
    let support_cut = 1e-8 * max_w;
    let c = match mass {
        Some(_) => {
            // Weight-averaged phi over the support.
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..w.len() {
                if w[i] > support_cut {
                    num += w[i] * phi[i];
                    den += w[i];
                }
            }
            if den > 0.0 {
                num / den
            } else {
                0.0
            }
        }
        None => 0.0,
    };
    let mut r = 0.0f64;
    for i in 0..w.len() {
        r = r.max(c - phi[i]); // dual feasibility
        if w[i] > support_cut {
            r = r.max((phi[i] - c).abs()); // stationarity on support
        }
    }
    if let Some(m) = mass {
        let scale = potential_scale(k, b, w);
        r = r.max((pairwise_sum(w) - m).abs() / m * scale);
    }
    r.max(0.0)
}

struct ActiveSet<'a> {
    k: &'a SymMatrix,
    free: Vec<usize>,
    chol: UpdatableCholesky,
    updates: usize,
}

impl<'a> ActiveSet<'a> {
    fn factor(k: &'a SymMatrix, free: Vec<usize>) -> Result<Self, QpError> {
        let chol = UpdatableCholesky::factor(k, &free)?;
        Ok(ActiveSet { k, free, chol, updates: 0 })
    }

    fn refactor(&mut self) -> Result<(), QpError> {
        self.chol = UpdatableCholesky::factor(self.k, &self.free)?;
        self.updates = 0;
        Ok(())
    }

    fn maybe_refactor(&mut self) -> Result<(), QpError> {
        if self.updates > self.free.len() / 2 + 16 {
            self.refactor()?;
        }
        Ok(())
    }

    fn add(&mut self, idx: usize) -> Result<(), QpError> {
        let col: Vec<f64> = self.free.iter().map(|&j| self.k.get(idx, j)).collect();
        if self.chol.append(&col, self.k.get(idx, idx)).is_err() {
            // Update drift: rebuild and retry once.
            self.free.push(idx);
            self.refactor()?;
            return Ok(());
        }
        self.free.push(idx);
        self.updates += 1;
        Ok(())
    }

    /// Remove positions (into `free`) given in any order. Large batches
    /// rebuild the factor outright instead of applying one Givens sweep
    /// per column.
    fn remove_positions(&mut self, mut pos: Vec<usize>) -> Result<(), QpError> {
        pos.sort_unstable_by(|a, b| b.cmp(a));
        if pos.len() * 4 > self.free.len() {
            for p in pos {
                self.free.remove(p);
            }
            self.refactor()?;
        } else {
            for p in pos {
                self.free.remove(p);
                self.chol.remove(p);
                self.updates += 1;
            }
        }
        Ok(())
    }

    /// Unconstrained-subspace minimizer (and multiplier for P2).
    fn subspace_solution(&self, b: &[f64], mass: Option<f64>) -> (Vec<f64>, f64) {
        let bf: Vec<f64> = self.free.iter().map(|&i| b[i]).collect();
        match mass {
            None => (self.chol.solve(&bf), 0.0),
            Some(m) => {
                let u = self.chol.solve(&bf);
                let ones = vec![1.0; self.free.len()];
                let v = self.chol.solve(&ones);
                let sv = pairwise_sum(&v);
                let su = pairwise_sum(&u);
                let c = (m - su) / sv;
                let z: Vec<f64> = u.iter().zip(&v).map(|(a, d)| a + c * d).collect();
                (z, c)
            }
        }
    }
}

pub fn solve(
    k: &SymMatrix,
    b: &[f64],
    mass: Option<f64>,
    opts: &QpOptions,
) -> Result<QpSolution, QpError> {
    let n = k.dim();
    if n == 0 {
        return Err(QpError::Empty);
    }
    if b.len() != n {
        return Err(QpError::DimMismatch { k: n, b: b.len() });
    }
    if let Some(m) = mass {
        if !(m > 0.0) {
            return Err(QpError::BadMass(m));
        }
    }
    let max_iters = if opts.max_iters == 0 { 60 * n + 200 } else { opts.max_iters };

    // Starting point and free set.
    let mut w = vec![0.0; n];
    let free0: Vec<usize> = match (mass, opts.start) {
        (Some(m), Start::Auto) => {
            let u = m / n as f64;
            w.iter_mut().for_each(|v| *v = u);
            (0..n).collect()
        }
        (Some(m), Start::Vertex(i)) => {
            w[i] = m;
            vec![i]
        }
        (None, _) => (0..n).filter(|&i| b[i] > 0.0).collect(),
    };
    if free0.is_empty() {
        // P1 with b <= 0 everywhere: w = 0 is optimal.
        let res = kkt_residual(k, b, mass, &w);
        return Ok(QpSolution {
            w,
            objective: 0.0,
            multiplier: mass.map(|_| 0.0),
            kkt_residual: res,
            iterations: 0,
            converged: true,
            objective_trace: vec![0.0],
        });
    }

    let mut act = ActiveSet::factor(k, free0)?;
    let mut iterations = 0usize;
    let mut add_block = 50usize;
    let mut last_obj = objective_of(k, b, &w);
    let mut trace = vec![last_obj];
    let mut converged = false;
    let mut multiplier = 0.0;

    while iterations < max_iters {
        iterations += 1;
        act.maybe_refactor()?;
        let (z, c) = act.subspace_solution(b, mass);
        let max_w = w.iter().fold(0.0f64, |m, &v| m.max(v)).max(
            z.iter().fold(0.0f64, |m, &v| m.max(v)),
        );
        let zero_cut = 1e-13 * max_w.max(1e-300);

        if z.iter().all(|&v| v >= -zero_cut) {
            // Accept the subspace minimizer.
            w.iter_mut().for_each(|v| *v = 0.0);
            for (p, &i) in act.free.iter().enumerate() {
                w[i] = z[p].max(0.0);
            }
            let eps = opts.eps_kkt_rel * potential_scale(k, b, &w);
            // Dual feasibility scan; the matrix-vector product also yields
            // the objective in O(n).
            let kw = k.mul_vec(&w);
            let obj = pairwise_dot(&w, &kw) - 2.0 * pairwise_dot(b, &w);
            trace.push(obj);
            let mut in_free = vec![false; n];
            for &i in &act.free {
                in_free[i] = true;
            }
            let mut violators: Vec<(f64, usize)> = (0..n)
                .filter(|&i| !in_free[i])
                .map(|i| (kw[i] - b[i], i))
                .filter(|&(phi, _)| phi < c - eps)
                .collect();
            if violators.is_empty() {
                multiplier = c;
                converged = true;
                break;
            }
            // Most violated first, index-ordered ties (determinism).
            violators.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let made_progress = obj < last_obj - 0.0;
            if !made_progress && add_block > 1 {
                add_block = (add_block / 2).max(1);
            }
            last_obj = obj;
            for &(_, i) in violators.iter().take(add_block) {
                act.add(i)?;
            }
        } else {
            // Line search from w toward z; at least one variable hits zero.
            let mut t = 1.0f64;
            for (p, &i) in act.free.iter().enumerate() {
                let d = z[p] - w[i];
                if d < 0.0 && z[p] < -zero_cut {
                    let ti = w[i] / (w[i] - z[p]);
                    t = t.min(ti.max(0.0));
                }
            }
            let mut drop = Vec::new();
            for (p, &i) in act.free.iter().enumerate() {
                let nv = w[i] + t * (z[p] - w[i]);
                w[i] = if nv <= zero_cut { 0.0 } else { nv };
                if w[i] == 0.0 && z[p] < -zero_cut {
                    drop.push(p);
                }
            }
            if drop.is_empty() {
                // Numerical corner: force out the most negative z.
                let p = z
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .map(|(p, _)| p)
                    .unwrap();
                w[act.free[p]] = 0.0;
                drop.push(p);
            }
            act.remove_positions(drop)?;
            let obj = objective_sparse(k, b, &w, &act.free);
            trace.push(obj);
            last_obj = obj;

            // Fast path: speculatively shrink the free set until the
            // subspace minimizer is nonnegative and jump there, but only if
            // the jump does not increase the objective (the iterate above is
            // kept otherwise, so the trace stays monotone either way).
            let saved_free = act.free.clone();
            let mut jumped = true;
            loop {
                act.maybe_refactor()?;
                let (z2, _) = act.subspace_solution(b, mass);
                let mz = z2.iter().fold(0.0f64, |m, &v| m.max(v));
                let cut2 = 1e-13 * mz.max(1e-300);
                let neg: Vec<usize> =
                    (0..z2.len()).filter(|&p| z2[p] < -cut2).collect();
                if neg.is_empty() {
                    let mut cand = vec![0.0; n];
                    for (p, &i) in act.free.iter().enumerate() {
                        cand[i] = z2[p].max(0.0);
                    }
                    let cobj = objective_sparse(k, b, &cand, &act.free);
                    if cobj <= obj + 1e-12 * obj.abs().max(1.0) {
                        w = cand;
                        trace.push(cobj);
                        last_obj = cobj;
                    } else {
                        jumped = false;
                    }
                    break;
                }
                if neg.len() == act.free.len() {
                    jumped = false;
                    break;
                }
                act.remove_positions(neg)?;
                iterations += 1;
                if iterations >= max_iters {
                    jumped = false;
                    break;
                }
            }
            if !jumped {
                act.free = saved_free;
                act.refactor()?;
            }
        }
    }

    let objective = objective_of(k, b, &w);
    let residual = kkt_residual(k, b, mass, &w);
    Ok(QpSolution {
        w,
        objective,
        multiplier: mass.map(|_| multiplier),
        kkt_residual: residual,
        iterations,
        converged,
        objective_trace: trace,
    })
}

pub const ORACLE_CAP: usize = 16;

/// Enumerates every support set, solves the equality-constrained system on
/// it, and returns the (unique, by strict convexity) primal/dual feasible
/// KKT point. Independent of the active-set machinery above.
pub fn oracle_solve(k: &SymMatrix, b: &[f64], mass: Option<f64>) -> Result<QpSolution, QpError> {
    let n = k.dim();
    if n > ORACLE_CAP {
        return Err(QpError::OracleTooLarge { n, cap: ORACLE_CAP });
    }
    if b.len() != n {
        return Err(QpError::DimMismatch { k: n, b: b.len() });
    }
    let mut best: Option<QpSolution> = None;
    let mut tried = 0usize;
    for mask in 0..(1u32 << n) {
        let s: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        if s.is_empty() && mass.is_some() {
            continue;
        }
        tried += 1;
        let (mut w, c) = if s.is_empty() {
            (vec![0.0; n], 0.0)
        } else {
            let candidate = match mass {
                None => {
                    let chol = match UpdatableCholesky::factor(k, &s) {
                        Ok(c) => c,
                        Err(_) => continue,
                    };
                    let bs: Vec<f64> = s.iter().map(|&i| b[i]).collect();
                    (chol.solve(&bs), 0.0)
                }
                Some(m) => {
                    // Saddle system [K_SS  -1; 1'  0] (w, c) = (b_S, m).
                    let d = s.len() + 1;
                    let mut a = vec![vec![0.0; d]; d];
                    let mut rhs = vec![0.0; d];
                    for (p, &i) in s.iter().enumerate() {
                        for (q, &j) in s.iter().enumerate() {
                            a[p][q] = k.get(i, j);
                        }
                        a[p][s.len()] = -1.0;
                        a[s.len()][p] = 1.0;
                        rhs[p] = b[i];
                    }
                    rhs[s.len()] = m;
                    let sol = match solve_dense(&mut a, rhs) {
                        Ok(x) => x,
                        Err(_) => continue,
                    };
                    (sol[..s.len()].to_vec(), sol[s.len()])
                }
            };
            let mut w = vec![0.0; n];
            for (p, &i) in s.iter().enumerate() {
                w[i] = candidate.0[p];
            }
            (w, candidate.1)
        };
        let scale = potential_scale(k, b, &w);
        let max_w = w.iter().fold(0.0f64, |m, &v| m.max(v.abs())).max(1e-300);
        // Primal feasibility on the support.
        if w.iter().any(|&v| v < -1e-11 * max_w) {
            continue;
        }
        w.iter_mut().for_each(|v| {
            if *v < 0.0 {
                *v = 0.0;
            }
        });
        // Dual feasibility off the support.
        let kw = k.mul_vec(&w);
        let tol_d = 1e-9 * scale;
        let mut ok = true;
        for i in 0..n {
            if mask >> i & 1 == 0 && kw[i] - b[i] < c - tol_d {
                ok = false;
                break;
            }
        }
        if !ok {
            continue;
        }
        let obj = objective_of(k, b, &w);
        let candidate = QpSolution {
            kkt_residual: kkt_residual(k, b, mass, &w),
            w,
            objective: obj,
            multiplier: mass.map(|_| c),
            iterations: tried,
            converged: true,
            objective_trace: vec![obj],
        };
        match &best {
            Some(bst) if bst.objective <= obj => {}
            _ => best = Some(candidate),
        }
    }
    best.ok_or(QpError::OracleFailed)
}

/// Energy-norm distance ||sigma - mu_w|| for a (P1) projection instance with
/// b_i = (K sigma)-type cross energies and sigma self-energy given:
/// ||sigma - mu_w||^2 = sigma_energy - 2 b'w + w'Kw.
pub fn projection_residual(k: &SymMatrix, b: &[f64], sigma_energy: f64, w: &[f64]) -> f64 {
    (sigma_energy - 2.0 * pairwise_dot(b, w) + k.quad_form(w)).max(0.0).sqrt()
}
