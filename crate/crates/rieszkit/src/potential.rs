//! Potential-theoretic operations: equilibrium measures and capacity,
//! balayage (sweeping-out) as cone projection, harmonic measure, the
//! weighted minimum-energy (Gauss) problem and its equilibrium constant,
//! Kelvin transforms, and Wiener-type thinness diagnostics.

use crate::geometry::{
    build_set, dist, invert_point, invert_set, shell_decompose, DiscretizedSet, GeometryError,
    PointTag, ShapeSpec, ShellMode,
};
use crate::kernel::{assemble, source_potential, EnergyContext, KernelError, RieszParams};
use crate::linalg::{pairwise_dot, SymMatrix};
use crate::measure::{DiscreteMeasure, MeasureError, SourceMeasure};
use crate::qp::{self, QpError, QpOptions};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum PotentialError {
    #[error(transparent)]
    Qp(#[from] QpError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("solver did not converge: kkt residual {residual:.3e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },
}

type Result<T> = std::result::Result<T, PotentialError>;

fn solve_checked(
    k: &SymMatrix,
    b: &[f64],
    mass: Option<f64>,
    opts: &QpOptions,
) -> Result<qp::QpSolution> {
    let sol = qp::solve(k, b, mass, opts)?;
    if !sol.converged {
        return Err(PotentialError::NonConvergence {
            residual: sol.kkt_residual,
            iterations: sol.iterations,
        });
    }
    Ok(sol)
}

// ---------------------------------------------------------------------------
// Equilibrium measure / capacity (Robin problem)
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct EquilibriumResult {
    /// Normalized equilibrium measure: mass = capacity, potential 1 on its
    /// support.
    pub gamma: DiscreteMeasure,
    pub capacity: f64,
    /// Minimal energy over unit-mass measures (the Robin constant).
    pub robin_energy: f64,
    /// U^gamma at every grid point.
    pub potential_on_set: Vec<f64>,
    /// True when the underlying set is a clipped unbounded shape, so this is
    /// a truncation approximant.
    pub truncated: bool,
    pub qp_iterations: usize,
    pub kkt_residual: f64,
}

pub fn equilibrium(ctx: &EnergyContext) -> Result<EquilibriumResult> {
    let n = ctx.len();
    if n == 0 {
        return Err(PotentialError::Precondition("empty context".into()));
    }
    let b = vec![0.0; n];
    let sol = solve_checked(ctx.matrix(), &b, Some(1.0), &QpOptions::default())?;
    let robin_energy = ctx.matrix().quad_form(&sol.w);
    let capacity = 1.0 / robin_energy;
    let gamma_w: Vec<f64> = sol.w.iter().map(|&v| v * capacity).collect();
    let gamma = DiscreteMeasure::new(ctx.set(), gamma_w)?;
    let potential_on_set = ctx.matrix().mul_vec(gamma.weights());
    Ok(EquilibriumResult {
        gamma,
        capacity,
        robin_energy,
        potential_on_set,
        truncated: ctx.set().truncation_radius().is_some(),
        qp_iterations: sol.iterations,
        kkt_residual: sol.kkt_residual,
    })
}

/// Capacity of the sub-cloud on `idx`, reusing the parent kernel matrix
/// (and hence the parent's diagonal regularization).
pub fn capacity_on_subset(ctx: &EnergyContext, idx: &[usize]) -> Result<f64> {
    match idx.len() {
        0 => Ok(0.0),
        1 => Ok(1.0 / ctx.matrix().get(idx[0], idx[0])),
        m => {
            let mut sub = SymMatrix::zeros(m);
            for (p, &i) in idx.iter().enumerate() {
                for (q, &j) in idx.iter().enumerate().take(p + 1) {
                    sub.set(p, q, ctx.matrix().get(i, j));
                }
            }
            let sol = solve_checked(&sub, &vec![0.0; m], Some(1.0), &QpOptions::default())?;
            Ok(1.0 / sub.quad_form(&sol.w))
        }
    }
}

// ---------------------------------------------------------------------------
// Balayage
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct BalayageResult {
    pub swept: DiscreteMeasure,
    pub mass_before: f64,
    pub mass_after: f64,
    /// U^zeta - U^{swept} at every target grid point (>= -tol on support).
    pub potential_gap: Vec<f64>,
    /// ||zeta - swept|| in the energy norm, when the self-energy of zeta
    /// is available.
    pub projection_distance: Option<f64>,
    pub kkt_residual: f64,
    /// True when a source point coincided with a grid point (the diagonal
    /// rule was used for that pair).
    pub source_on_grid: bool,
}

/// Sweep a free-standing source onto the context's set: the (P1) projection
/// with b_i = U^zeta(x_i). `source_energy` (the self-energy ||zeta||^2, if
/// known) enables the projection-distance report.
pub fn balayage(
    ctx: &EnergyContext,
    source: &SourceMeasure,
    source_energy: Option<f64>,
) -> Result<BalayageResult> {
    let (b, on_grid) = ctx.cross_potential(source)?;
    let sol = solve_checked(ctx.matrix(), &b, None, &QpOptions::default())?;
    let swept = DiscreteMeasure::new(ctx.set(), sol.w.clone())?;
    let u_swept = ctx.matrix().mul_vec(swept.weights());
    let potential_gap: Vec<f64> = b.iter().zip(&u_swept).map(|(s, t)| s - t).collect();
    let projection_distance =
        source_energy.map(|se| qp::projection_residual(ctx.matrix(), &b, se, &sol.w));
    Ok(BalayageResult {
        mass_before: source.mass(),
        mass_after: swept.mass(),
        swept,
        potential_gap,
        projection_distance,
        kkt_residual: sol.kkt_residual,
        source_on_grid: on_grid,
    })
}

/// Sweep a measure living on `ctx_source`'s grid onto `ctx_target`'s set.
/// The zero measure sweeps to zero.
pub fn balayage_of_measure(
    ctx_target: &EnergyContext,
    ctx_source: &EnergyContext,
    mu: &DiscreteMeasure,
) -> Result<BalayageResult> {
    if mu.is_zero() {
        let swept = DiscreteMeasure::zero(ctx_target.set());
        return Ok(BalayageResult {
            swept,
            mass_before: 0.0,
            mass_after: 0.0,
            potential_gap: vec![0.0; ctx_target.len()],
            projection_distance: Some(0.0),
            kkt_residual: 0.0,
            source_on_grid: false,
        });
    }
    let se = ctx_source.energy(mu)?;
    let src = mu.as_source(ctx_source.set())?;
    balayage(ctx_target, &src, Some(se))
}

/// Harmonic measure: balayage of the unit Dirac at z.
pub fn harmonic_measure(ctx: &EnergyContext, z: &[f64]) -> Result<BalayageResult> {
    if ctx.on_grid(z).is_some() {
        return Err(PotentialError::Precondition(
            "harmonic-measure pole coincides with a grid point".into(),
        ));
    }
    let dirac = SourceMeasure::dirac(z.to_vec(), 1.0)?;
    balayage(ctx, &dirac, None)
}

/// |I(zeta^A, sigma) - I(zeta, sigma^A)| relative — the symmetry relation,
/// each side computed through its own projection.
pub fn balayage_symmetry_check(
    ctx: &EnergyContext,
    zeta: &SourceMeasure,
    sigma: &SourceMeasure,
) -> Result<f64> {
    let (b_z, _) = ctx.cross_potential(zeta)?;
    let (b_s, _) = ctx.cross_potential(sigma)?;
    let wz = solve_checked(ctx.matrix(), &b_z, None, &QpOptions::default())?.w;
    let ws = solve_checked(ctx.matrix(), &b_s, None, &QpOptions::default())?.w;
    let lhs = pairwise_dot(&wz, &b_s); // I(zeta^A, sigma)
    let rhs = pairwise_dot(&ws, &b_z); // I(zeta, sigma^A)
    Ok((lhs - rhs).abs() / lhs.abs().max(1e-300))
}

/// Relative energy-norm gap between zeta^A and (zeta^Q)^A for A a sub-cloud
/// of Q ("balayage with a rest").
pub fn balayage_rest_check(
    ctx_a: &EnergyContext,
    ctx_q: &EnergyContext,
    source: &SourceMeasure,
) -> Result<f64> {
    // A's points must all appear in Q.
    let tol = 1e-12 * (1.0 + ctx_q.set().mesh_size());
    for p in ctx_a.set().points() {
        if !ctx_q.set().points().any(|q| dist(p, q) <= tol) {
            return Err(PotentialError::Precondition(
                "target set is not a sub-cloud of the intermediate set".into(),
            ));
        }
    }
    let direct = balayage(ctx_a, source, None)?;
    let via_q = balayage(ctx_q, source, None)?;
    let staged = balayage_of_measure(ctx_a, ctx_q, &via_q.swept)?;
    let gap = ctx_a.energy_distance(&direct.swept, &staged.swept)?;
    let norm = ctx_a.energy(&direct.swept)?.max(0.0).sqrt();
    Ok(gap / norm.max(1e-300))
}

/// Spot check of the minimum-energy characterization of balayage: among
/// random feasible competitors (U^nu >= U^zeta on the target grid), none
/// beats the swept measure's energy.
pub fn minimum_energy_spot_check<R: Rng>(
    ctx: &EnergyContext,
    source: &SourceMeasure,
    bal: &BalayageResult,
    rng: &mut R,
    trials: usize,
) -> Result<bool> {
    let (b, _) = ctx.cross_potential(source)?;
    let base_energy = ctx.energy(&bal.swept)?;
    let max_w = bal.swept.weights().iter().cloned().fold(0.0f64, f64::max);
    let mut checked = 0usize;
    let mut attempts = 0usize;
    while checked < trials && attempts < trials * 20 {
        attempts += 1;
        let w: Vec<f64> = bal
            .swept
            .weights()
            .iter()
            .map(|&v| (v + rng.gen_range(0.0..0.3) * max_w).max(0.0))
            .collect();
        let u = ctx.matrix().mul_vec(&w);
        let eps = 1e-9 * qp::potential_scale(ctx.matrix(), &b, &w);
        if u.iter().zip(&b).all(|(a, c)| *a >= c - eps) {
            checked += 1;
            let e = ctx.matrix().quad_form(&w);
            if e < base_energy - 1e-9 * base_energy.max(1.0) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Gauss problem
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct GaussSolution {
    /// Minimizer with the requested total mass.
    pub lambda: DiscreteMeasure,
    /// Weighted equilibrium constant (support-averaged estimate,
    /// cross-checked against the QP multiplier).
    pub c_const: f64,
    pub c_multiplier: f64,
    pub c_support: f64,
    pub c_estimates_agree: bool,
    /// Minimal value of the Gauss functional.
    pub w_value: f64,
    pub kkt_residual: f64,
    pub eps_kkt: f64,
    /// U^lambda - U^omega at every grid point.
    pub weighted_potential: Vec<f64>,
    pub solvable: bool,
    pub reason: String,
    pub omega_on_grid: bool,
    pub qp_iterations: usize,
}

pub fn solve_gauss(
    ctx: &EnergyContext,
    omega: Option<&SourceMeasure>,
    total_mass: f64,
) -> Result<GaussSolution> {
    if !(total_mass > 0.0) {
        return Err(PotentialError::Precondition(format!(
            "total mass must be positive, got {total_mass}"
        )));
    }
    let (b, on_grid) = match omega {
        Some(src) => ctx.cross_potential(src)?,
        None => (vec![0.0; ctx.len()], false),
    };
    let sol = solve_checked(ctx.matrix(), &b, Some(total_mass), &QpOptions::default())?;
    let lambda = DiscreteMeasure::new(ctx.set(), sol.w.clone())?;
    let u_lambda = ctx.matrix().mul_vec(lambda.weights());
    let weighted_potential: Vec<f64> = u_lambda.iter().zip(&b).map(|(a, c)| a - c).collect();
    let support = lambda.support();
    let (mut num, mut den) = (0.0, 0.0);
    for &i in &support {
        num += lambda.weights()[i] * weighted_potential[i];
        den += lambda.weights()[i];
    }
    let c_support = if den > 0.0 { num / den } else { 0.0 };
    let c_multiplier = sol.multiplier.unwrap_or(0.0);
    let eps_kkt = 1e-7 * qp::potential_scale(ctx.matrix(), &b, lambda.weights());
    let w_value = ctx.matrix().quad_form(lambda.weights()) - 2.0 * pairwise_dot(&b, lambda.weights());
    Ok(GaussSolution {
        c_const: c_support,
        c_estimates_agree: (c_support - c_multiplier).abs() <= eps_kkt,
        c_multiplier,
        c_support,
        w_value,
        kkt_residual: sol.kkt_residual,
        eps_kkt,
        weighted_potential,
        lambda,
        solvable: true,
        reason: String::new(),
        omega_on_grid: on_grid,
        qp_iterations: sol.iterations,
    })
}

// ---------------------------------------------------------------------------
// Solvability classification across truncations
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TruncationRun {
    pub radius: f64,
    pub capacity: f64,
    pub swept_mass: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolvabilityVerdict {
    SolvableFiniteCapacity,
    SolvableSweptMass,
    Unsolvable,
    Inconclusive,
}

#[derive(Clone, Copy, Debug)]
pub struct SolvabilityThresholds {
    /// Capacity growth per doubling below which capacity counts as stable.
    pub stable_growth: f64,
    /// Growth per doubling above which capacity counts as divergent.
    pub divergent_growth: f64,
    /// Swept mass at least 1 - this margin counts as mass >= 1.
    pub swept_margin: f64,
    /// Swept mass at most 1 - this margin supports unsolvability.
    pub swept_deficit: f64,
}

impl Default for SolvabilityThresholds {
    fn default() -> Self {
        SolvabilityThresholds {
            stable_growth: 0.05,
            divergent_growth: 0.20,
            swept_margin: 0.02,
            swept_deficit: 0.05,
        }
    }
}

pub fn classify_solvability(
    runs: &[TruncationRun],
    th: &SolvabilityThresholds,
) -> Result<SolvabilityVerdict> {
    if runs.len() < 3 {
        return Err(PotentialError::Precondition(format!(
            "need at least 3 truncation radii, got {}",
            runs.len()
        )));
    }
    // Capacity growth rate per doubling over the last step.
    let a = &runs[runs.len() - 2];
    let b = &runs[runs.len() - 1];
    let octaves = (b.radius / a.radius).log2();
    if !(octaves > 0.0) {
        return Err(PotentialError::Precondition("truncation radii must increase".into()));
    }
    let growth = (b.capacity / a.capacity - 1.0) / octaves;
    let swept = b.swept_mass;
    if growth < th.stable_growth {
        return Ok(SolvabilityVerdict::SolvableFiniteCapacity);
    }
    if swept >= 1.0 - th.swept_margin {
        return Ok(SolvabilityVerdict::SolvableSweptMass);
    }
    if growth > th.divergent_growth && swept <= 1.0 - th.swept_deficit {
        return Ok(SolvabilityVerdict::Unsolvable);
    }
    Ok(SolvabilityVerdict::Inconclusive)
}

// ---------------------------------------------------------------------------
// Representation and sign checks
// ---------------------------------------------------------------------------

/// Relative energy-norm error of lambda = swept + c * gamma (or lambda =
/// swept when the finite-capacity branch does not apply).
pub fn representation_check(
    ctx: &EnergyContext,
    gauss: &GaussSolution,
    bal: &BalayageResult,
    eq: &EquilibriumResult,
    finite_capacity: bool,
) -> Result<f64> {
    if bal.mass_after > gauss.lambda.mass() + 0.02 {
        return Err(PotentialError::Precondition(format!(
            "swept mass {} exceeds the minimizer mass {}; the representation hypothesis fails",
            bal.mass_after,
            gauss.lambda.mass()
        )));
    }
    let c = if finite_capacity { gauss.c_const } else { 0.0 };
    let diff: Vec<f64> = (0..ctx.len())
        .map(|i| gauss.lambda.weights()[i] - (bal.swept.weights()[i] + c * eq.gamma.weights()[i]))
        .collect();
    let err = ctx.matrix().quad_form(&diff).max(0.0).sqrt();
    let norm = ctx.matrix().quad_form(gauss.lambda.weights()).max(0.0).sqrt();
    Ok(err / norm.max(1e-300))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrichotomyVerdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrichotomyOutcome {
    pub expected: &'static str,
    pub c_const: f64,
    pub swept_mass: f64,
    pub tol_c: f64,
    pub verdict: TrichotomyVerdict,
}

/// Checks sign(c) against the swept-mass trichotomy: c > 0 when the swept
/// mass falls short of the prescribed mass, c ~ 0 at equality, c < 0 in
/// excess.
pub fn sign_trichotomy_check(
    gauss: &GaussSolution,
    swept_mass: f64,
    delta: f64,
    tol_c_rel: f64,
) -> TrichotomyOutcome {
    let scale = {
        let max_wp = gauss
            .weighted_potential
            .iter()
            .fold(0.0f64, |m, &v| m.max(v.abs()));
        max_wp.max(1.0)
    };
    let tol_c = tol_c_rel * scale;
    let m = gauss.lambda.mass();
    let c = gauss.c_const;
    let (expected, verdict) = if swept_mass < m - delta {
        ("positive", if c > tol_c { TrichotomyVerdict::Pass } else { TrichotomyVerdict::Fail })
    } else if swept_mass > m + delta {
        ("negative", if c < -tol_c { TrichotomyVerdict::Pass } else { TrichotomyVerdict::Fail })
    } else {
        (
            "near_zero",
            if c.abs() <= tol_c { TrichotomyVerdict::Pass } else { TrichotomyVerdict::Inconclusive },
        )
    };
    TrichotomyOutcome { expected, c_const: c, swept_mass, tol_c, verdict }
}

// ---------------------------------------------------------------------------
// Dual field
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct DualFieldReport {
    /// Max over samples of the relative gap between the two functionals.
    pub max_rel_gap: f64,
    /// Whether the swept source minimizes the Gauss functional among random
    /// nonnegative perturbations on the grid.
    pub sweep_minimizes: bool,
    /// Gauss functional at the swept source (equals -||omega^A||^2 up to
    /// discretization).
    pub value_at_sweep: f64,
}

pub fn dual_field_check<R: Rng>(
    ctx: &EnergyContext,
    omega: &SourceMeasure,
    samples: &[DiscreteMeasure],
    rng: &mut R,
) -> Result<DualFieldReport> {
    let (b_f, _) = ctx.cross_potential(omega)?;
    let bal = solve_checked(ctx.matrix(), &b_f, None, &QpOptions::default())?;
    let b_dual = ctx.matrix().mul_vec(&bal.w); // U^{omega^A} on the grid
    let mut max_rel_gap = 0.0f64;
    for mu in samples {
        if mu.set_id() != ctx.set().id() {
            return Err(PotentialError::Precondition("sample not on the context's set".into()));
        }
        let quad = ctx.matrix().quad_form(mu.weights());
        let i_f = quad - 2.0 * pairwise_dot(&b_f, mu.weights());
        let i_dual = quad - 2.0 * pairwise_dot(&b_dual, mu.weights());
        max_rel_gap = max_rel_gap.max((i_f - i_dual).abs() / (1.0 + i_f.abs()));
    }
    // omega^A minimizes I_f over the cone (no mass constraint).
    let value_at_sweep =
        ctx.matrix().quad_form(&bal.w) - 2.0 * pairwise_dot(&b_f, &bal.w);
    let max_w = bal.w.iter().cloned().fold(0.0f64, f64::max);
    let mut sweep_minimizes = true;
    for _ in 0..50 {
        let w: Vec<f64> = bal
            .w
            .iter()
            .map(|&v| (v + (rng.gen_range(0.0..1.0) - 0.5) * 0.2 * max_w).max(0.0))
            .collect();
        let val = ctx.matrix().quad_form(&w) - 2.0 * pairwise_dot(&b_f, &w);
        if val < value_at_sweep - 1e-9 * value_at_sweep.abs().max(1.0) {
            sweep_minimizes = false;
        }
    }
    Ok(DualFieldReport { max_rel_gap, sweep_minimizes, value_at_sweep })
}

// ---------------------------------------------------------------------------
// Kelvin machinery
// ---------------------------------------------------------------------------

/// Kelvin transform of a point source: locations inverted about `center`,
/// charge at y multiplied by |y - center|^(alpha - n).
pub fn kelvin_transform(
    params: RieszParams,
    source: &SourceMeasure,
    center: &[f64],
) -> Result<SourceMeasure> {
    let mut points = Vec::with_capacity(source.len());
    let mut charges = Vec::with_capacity(source.len());
    for (y, &s) in source.points().iter().zip(source.charges()) {
        let r = dist(y, center);
        if r <= 1e-12 * (1.0 + center.iter().map(|c| c.abs()).fold(0.0, f64::max)) {
            return Err(PotentialError::Precondition(
                "inversion center lies in the source support".into(),
            ));
        }
        points.push(invert_point(y, center)?);
        charges.push(s * r.powf(params.alpha - params.dim as f64));
    }
    Ok(SourceMeasure::new(points, charges)?)
}

/// Max relative violation of U^{mu*}(x*) = |x - center|^(n - alpha) U^mu(x)
/// over the probes (each side evaluated independently).
pub fn kelvin_potential_identity_error(
    params: RieszParams,
    source: &SourceMeasure,
    center: &[f64],
    probes: &[Vec<f64>],
) -> Result<f64> {
    let transformed = kelvin_transform(params, source, center)?;
    let mut worst = 0.0f64;
    for x in probes {
        let xs = invert_point(x, center)?;
        let lhs = source_potential(params, &transformed, &xs);
        let r = dist(x, center);
        let rhs = r.powf(params.dim as f64 - params.alpha) * source_potential(params, source, x);
        worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1e-300));
    }
    Ok(worst)
}

#[derive(Clone, Debug, Serialize)]
pub struct KelvinEquilibriumReport {
    /// Relative energy-norm distance between the harmonic measure at z and
    /// the Kelvin transform of the inverted set's equilibrium measure.
    pub distance: f64,
    pub mass_harmonic: f64,
    pub mass_kelvin: f64,
}

/// Two-path identity: the harmonic measure of A at z equals the Kelvin
/// transform (about z) of the equilibrium measure of the inverted set A*.
pub fn kelvin_equilibrium_check(
    params: RieszParams,
    a: &DiscretizedSet,
    z: &[f64],
) -> Result<KelvinEquilibriumReport> {
    let ctx = assemble(params, a.clone())?;
    let hm = harmonic_measure(&ctx, z)?;
    let a_star = invert_set(a, z)?;
    let ctx_star = assemble(params, a_star.clone())?;
    let eq_star = equilibrium(&ctx_star)?;
    // invert_set preserves point order, so index i of A* maps back to index
    // i of A; transform the weights in place.
    let na = params.dim as f64 - params.alpha;
    let mut w = vec![0.0; a.len()];
    for i in 0..a.len() {
        let r_star = dist(a_star.point(i), z); // = 1/|x_i - z|
        w[i] = eq_star.gamma.weights()[i] * r_star.powf(-na);
    }
    let kelvin_side = DiscreteMeasure::new(a, w)?;
    let gap = ctx.energy_distance(&hm.swept, &kelvin_side)?;
    let norm = ctx.energy(&hm.swept)?.max(0.0).sqrt();
    Ok(KelvinEquilibriumReport {
        distance: gap / norm.max(1e-300),
        mass_harmonic: hm.swept.mass(),
        mass_kelvin: kelvin_side.mass(),
    })
}

// ---------------------------------------------------------------------------
// Wiener-type series
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThinnessMode {
    /// Irregular boundary point: inward shells, denominator r^(j(n-alpha)).
    IrregularPoint,
    /// Thinness at infinity: outward shells, same denominator.
    ThinAtInfinity,
    /// Ultrathinness at infinity tested at an inverted point: inward shells,
    /// denominator r^(2j(n-alpha)).
    Ultrathin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesVerdict {
    Convergent,
    Divergent,
    Inconclusive,
}

#[derive(Clone, Copy, Debug)]
pub struct ThinnessThresholds {
    /// Geometric decay ratio under which the tail counts as convergent.
    pub decay_ratio: f64,
    /// Fraction of the running mean above which increments count as
    /// bounded below (divergent).
    pub floor_fraction: f64,
}

impl Default for ThinnessThresholds {
    fn default() -> Self {
        ThinnessThresholds { decay_ratio: 0.7, floor_fraction: 0.1 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ThinnessReport {
    pub mode: ThinnessMode,
    pub ratio: f64,
    pub shell_indices: Vec<i64>,
    pub shell_sizes: Vec<usize>,
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub verdict: SeriesVerdict,
    pub shells_used: usize,
    pub decay_ratio_threshold: f64,
    pub floor_fraction_threshold: f64,
}

pub fn wiener_series(
    ctx: &EnergyContext,
    center: &[f64],
    mode: ThinnessMode,
    ratio: f64,
    max_shells: usize,
    th: &ThinnessThresholds,
) -> Result<ThinnessReport> {
    let smode = match mode {
        ThinnessMode::IrregularPoint | ThinnessMode::Ultrathin => ShellMode::Inward,
        ThinnessMode::ThinAtInfinity => ShellMode::Outward,
    };
    let decomp = shell_decompose(ctx.set(), center, ratio, smode)?;
    let na = ctx.params().dim as f64 - ctx.params().alpha;
    let denom_exp = match mode {
        ThinnessMode::Ultrathin => 2.0 * na,
        _ => na,
    };
    let mut shell_indices = Vec::new();
    let mut shell_sizes = Vec::new();
    let mut terms = Vec::new();
    let mut partial_sums = Vec::new();
    let mut acc = 0.0;
    for (j, members) in decomp.shells.iter().take(max_shells) {
        let cap = capacity_on_subset(ctx, members)?;
        let term = cap / ratio.powf(*j as f64 * denom_exp);
        acc += term;
        shell_indices.push(*j);
        shell_sizes.push(members.len());
        terms.push(term);
        partial_sums.push(acc);
    }
    // If the decomposition ran out of populated shells before max_shells,
    // the discrete series has finitely many nonzero terms: its tail is zero.
    // This only applies to genuinely bounded sets; a clipped unbounded shape
    // runs out of shells because of the clipping, not because the series
    // terminates, so no zero tail may be inferred there.
    let exhausted =
        decomp.shells.len() <= max_shells && ctx.set().truncation_radius().is_none();
    let verdict = if exhausted {
        let mut padded = terms.clone();
        padded.extend([0.0; 3]);
        series_verdict(&padded, th)
    } else {
        series_verdict(&terms, th)
    };
    Ok(ThinnessReport {
        mode,
        ratio,
        shell_indices,
        shell_sizes,
        terms,
        partial_sums,
        verdict,
        shells_used: decomp.shells.len().min(max_shells),
        decay_ratio_threshold: th.decay_ratio,
        floor_fraction_threshold: th.floor_fraction,
    })
}

fn series_verdict(terms: &[f64], th: &ThinnessThresholds) -> SeriesVerdict {
    if terms.is_empty() {
        return SeriesVerdict::Convergent; // empty sum
    }
    let max_term = terms.iter().cloned().fold(0.0f64, f64::max);
    if max_term == 0.0 {
        return SeriesVerdict::Convergent;
    }
    let n = terms.len();
    if n >= 4 {
        // Tail collapse: last three terms negligible.
        if terms[n - 3..].iter().all(|&t| t <= 1e-12 * max_term) {
            return SeriesVerdict::Convergent;
        }
        // Geometric decay of the last three increments.
        let tail = &terms[n - 4..];
        if tail.windows(2).all(|w| w[1] <= th.decay_ratio * w[0]) {
            return SeriesVerdict::Convergent;
        }
        // Bounded below by a fraction of the running mean.
        let mean = terms.iter().sum::<f64>() / n as f64;
        if terms[n - 3..].iter().all(|&t| t >= th.floor_fraction * mean) {
            return SeriesVerdict::Divergent;
        }
        return SeriesVerdict::Inconclusive;
    }
    // Few shells: only a collapsing tail is decisive.
    if terms.last().copied().unwrap_or(0.0) <= 1e-12 * max_term {
        SeriesVerdict::Convergent
    } else {
        SeriesVerdict::Inconclusive
    }
}

// ---------------------------------------------------------------------------
// Support classification
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportClass {
    FullSupport,
    BoundaryConcentrated,
    CompactlyContained,
    Mixed,
}

#[derive(Clone, Debug, Serialize)]
pub struct SupportReport {
    pub fraction_points_in_support: f64,
    pub fraction_support_mass_on_boundary: f64,
    pub outermost_support_radius: f64,
    pub truncation_radius: Option<f64>,
    pub classification: SupportClass,
}

pub fn support_report(gauss: &GaussSolution, a: &DiscretizedSet) -> Result<SupportReport> {
    if gauss.lambda.set_id() != a.id() {
        return Err(PotentialError::Precondition("measure does not live on the given set".into()));
    }
    let support = gauss.lambda.support();
    let frac_points = support.len() as f64 / a.len() as f64;
    let mut boundary_mass = 0.0;
    let mut total_mass = 0.0;
    let mut outer = 0.0f64;
    for &i in &support {
        let w = gauss.lambda.weights()[i];
        total_mass += w;
        if a.tag(i) == PointTag::Boundary {
            boundary_mass += w;
        }
        let r = a.point(i).iter().map(|c| c * c).sum::<f64>().sqrt();
        outer = outer.max(r);
    }
    let frac_boundary = if total_mass > 0.0 { boundary_mass / total_mass } else { 0.0 };
    let trunc = a.truncation_radius();
    let classification = if let Some(t) = trunc {
        if outer < 0.6 * t {
            SupportClass::CompactlyContained
        } else if frac_boundary >= 0.95 {
            SupportClass::BoundaryConcentrated
        } else if frac_points >= 0.95 {
            SupportClass::FullSupport
        } else {
            SupportClass::Mixed
        }
    } else if frac_points >= 0.95 {
        SupportClass::FullSupport
    } else if frac_boundary >= 0.95 {
        SupportClass::BoundaryConcentrated
    } else {
        SupportClass::Mixed
    };
    Ok(SupportReport {
        fraction_points_in_support: frac_points,
        fraction_support_mass_on_boundary: frac_boundary,
        outermost_support_radius: outer,
        truncation_radius: trunc,
        classification,
    })
}

// ---------------------------------------------------------------------------
// Weighted-equilibrium suite on a non-thin set with a one-point field
// ---------------------------------------------------------------------------

/// Per-charge findings on the finest truncations.
#[derive(Clone, Debug, Serialize)]
pub struct ChargeCaseReport {
    pub q: f64,
    pub solvability: SolvabilityVerdict,
    /// ||lambda - q * eps_z|| / ||lambda|| in the energy norm at the finest
    /// truncation (the minimizer equals the swept field exactly at q = 1).
    pub lambda_vs_harmonic_rel: f64,
    /// (radius, c) at the last two truncation radii.
    pub c_by_radius: Vec<(f64, f64)>,
    /// Sign-trichotomy outcomes at the last two truncation radii.
    pub trichotomy: Vec<TrichotomyOutcome>,
    /// Support classification at the finest truncation.
    pub support: SupportReport,
    /// Relative change of the outermost support radius across the last two
    /// truncations (compact-support stability proxy).
    pub support_radius_drift: f64,
    pub runs: Vec<TruncationRun>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChargeSuiteReport {
    /// Outward-shell series verdict on the finest truncation: `Divergent`
    /// certifies the hypothesis that the set is not thin at infinity.
    pub thinness_at_infinity: SeriesVerdict,
    pub cases: Vec<ChargeCaseReport>,
}

/// For each charge q, solves the weighted problem with the field of a
/// q-charged point at z across a ladder of truncations of an unbounded set,
/// classifies solvability, and reports the minimizer-vs-swept-field distance,
/// the equilibrium constant, and the support shape at the finest level.
pub fn theorem_ap_suite(
    params: RieszParams,
    spec: &ShapeSpec,
    resolution: usize,
    trunc_ladder: &[f64],
    z: &[f64],
    q_list: &[f64],
    tol_c_rel: f64,
) -> Result<ChargeSuiteReport> {
    if trunc_ladder.len() < 3 {
        return Err(PotentialError::Precondition(format!(
            "need at least 3 truncation radii, got {}",
            trunc_ladder.len()
        )));
    }
    if trunc_ladder.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(PotentialError::Precondition("truncation radii must increase".into()));
    }
    // Per truncation: capacity and the unit harmonic measure (balayage is
    // linear in the charge, so one sweep serves every q).
    let mut ctxs = Vec::new();
    let mut caps = Vec::new();
    let mut unit_mass = Vec::new();
    for &radius in trunc_ladder {
        let set = build_set(spec, resolution, Some(radius))?;
        let ctx = assemble(params, set)?;
        let eq = equilibrium(&ctx)?;
        let hm = harmonic_measure(&ctx, z)?;
        caps.push(eq.capacity);
        unit_mass.push(hm.mass_after);
        ctxs.push((radius, ctx, hm));
    }
    // Hypothesis probe: the untruncated set must not be thin at infinity.
    let (_, finest_ctx, finest_hm) = ctxs.last().unwrap();
    let thinness = wiener_series(
        finest_ctx,
        &vec![0.0; params.dim],
        ThinnessMode::ThinAtInfinity,
        2.0,
        32,
        &ThinnessThresholds::default(),
    )?
    .verdict;

    let th = SolvabilityThresholds::default();
    let mut cases = Vec::new();
    for &q in q_list {
        let runs: Vec<TruncationRun> = trunc_ladder
            .iter()
            .enumerate()
            .map(|(i, &radius)| TruncationRun {
                radius,
                capacity: caps[i],
                swept_mass: q * unit_mass[i],
            })
            .collect();
        let solvability = classify_solvability(&runs, &th)?;
        let omega = SourceMeasure::dirac(z.to_vec(), q)?;
        // Gauss solves at the last two truncations.
        let mut c_by_radius = Vec::new();
        let mut trichotomy = Vec::new();
        let mut supports = Vec::new();
        for (radius, ctx, hm) in &ctxs[trunc_ladder.len() - 2..] {
            let gauss = solve_gauss(ctx, Some(&omega), 1.0)?;
            c_by_radius.push((*radius, gauss.c_const));
            trichotomy.push(sign_trichotomy_check(&gauss, q * hm.mass_after, 0.02, tol_c_rel));
            supports.push((support_report(&gauss, ctx.set())?, gauss));
        }
        let (support, gauss_finest) = supports.pop().unwrap();
        let (support_prev, _) = supports.pop().unwrap();
        let drift = (support.outermost_support_radius - support_prev.outermost_support_radius)
            .abs()
            / support.outermost_support_radius.max(1e-300);
        // Distance to the swept field at the finest truncation.
        let diff: Vec<f64> = (0..finest_ctx.len())
            .map(|i| gauss_finest.lambda.weights()[i] - q * finest_hm.swept.weights()[i])
            .collect();
        let num = finest_ctx.matrix().quad_form(&diff).max(0.0).sqrt();
        let den = finest_ctx
            .matrix()
            .quad_form(gauss_finest.lambda.weights())
            .max(0.0)
            .sqrt();
        cases.push(ChargeCaseReport {
            q,
            solvability,
            lambda_vs_harmonic_rel: num / den.max(1e-300),
            c_by_radius,
            trichotomy,
            support,
            support_radius_drift: drift,
            runs,
        });
    }
    Ok(ChargeSuiteReport { thinness_at_infinity: thinness, cases })
}
