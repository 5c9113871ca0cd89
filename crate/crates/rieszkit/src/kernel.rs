//! Riesz kernel |x-y|^(alpha-n): matrix assembly with a regularized
//! diagonal, and potential / energy / mutual-energy evaluators.

use crate::geometry::{dist, DiscretizedSet};
use crate::linalg::{pairwise_dot, SymMatrix};
use crate::measure::{DiscreteMeasure, SourceMeasure};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum KernelError {
    #[error("invalid Riesz parameters: dim={dim}, alpha={alpha} (need dim >= 2, 0 < alpha <= 2, alpha < dim)")]
    InvalidParams { dim: usize, alpha: f64 },
    #[error("set has {n} points, exceeding the cap of {cap}")]
    TooManyPoints { n: usize, cap: usize },
    #[error("measure does not live on this context's set")]
    SetMismatch,
    #[error("dimension mismatch: expected {want}, got {got}")]
    DimMismatch { want: usize, got: usize },
}

/// Fraction of the nearest-neighbor distance used as the self-interaction
/// length scale on the regularized diagonal.
pub const C_DIAG: f64 = 0.5;
pub const DIAG_RULE_ID: &str = "half-nn-distance";
pub const DEFAULT_MAX_POINTS: usize = 20_000;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RieszParams {
    pub dim: usize,
    pub alpha: f64,
}

impl RieszParams {
    pub fn new(dim: usize, alpha: f64) -> Result<Self, KernelError> {
        if dim < 2 || !(alpha > 0.0 && alpha <= 2.0 && alpha < dim as f64) {
            return Err(KernelError::InvalidParams { dim, alpha });
        }
        Ok(RieszParams { dim, alpha })
    }

    /// |x - y|^(alpha - n) for distinct points.
    pub fn kernel(&self, x: &[f64], y: &[f64]) -> f64 {
        dist(x, y).powf(self.alpha - self.dim as f64)
    }

    fn diag_value(&self, nn: f64) -> f64 {
        (C_DIAG * nn).powf(self.alpha - self.dim as f64)
    }
}

/// Potential of a free-standing source at an arbitrary point (exact kernel,
/// no regularization; the point must not sit on the source).
pub fn source_potential(params: RieszParams, source: &SourceMeasure, x: &[f64]) -> f64 {
    let vals: Vec<f64> = source
        .points()
        .iter()
        .zip(source.charges())
        .map(|(y, &s)| s * params.kernel(x, y))
        .collect();
    crate::linalg::pairwise_sum(&vals)
}

/// A set together with its assembled kernel matrix.
pub struct EnergyContext {
    params: RieszParams,
    set: DiscretizedSet,
    k: SymMatrix,
}

pub fn assemble(params: RieszParams, set: DiscretizedSet) -> Result<EnergyContext, KernelError> {
    assemble_with_cap(params, set, DEFAULT_MAX_POINTS)
}

pub fn assemble_with_cap(
    params: RieszParams,
    set: DiscretizedSet,
    max_points: usize,
) -> Result<EnergyContext, KernelError> {
    let n = set.len();
    if n > max_points {
        return Err(KernelError::TooManyPoints { n, cap: max_points });
    }
    if set.dim() != params.dim {
        return Err(KernelError::DimMismatch { want: params.dim, got: set.dim() });
    }
    let mut k = SymMatrix::zeros(n);
    for i in 0..n {
        k.set(i, i, params.diag_value(set.nn_dist(i)));
        for j in i + 1..n {
            k.set(i, j, params.kernel(set.point(i), set.point(j)));
        }
    }
    Ok(EnergyContext { params, set, k })
}

impl EnergyContext {
    pub fn params(&self) -> RieszParams {
        self.params
    }
    pub fn set(&self) -> &DiscretizedSet {
        &self.set
    }
    pub fn matrix(&self) -> &SymMatrix {
        &self.k
    }
    pub fn len(&self) -> usize {
        self.set.len()
    }
    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }
    pub fn diag_rule_id(&self) -> &'static str {
        DIAG_RULE_ID
    }

    fn check(&self, mu: &DiscreteMeasure) -> Result<(), KernelError> {
        if mu.set_id() != self.set.id() || mu.len() != self.set.len() {
            return Err(KernelError::SetMismatch);
        }
        Ok(())
    }

    /// U^mu at every grid point of the context's set (matrix-vector product;
    /// the regularized diagonal handles the self term).
    pub fn potential_on_grid(&self, mu: &DiscreteMeasure) -> Result<Vec<f64>, KernelError> {
        self.check(mu)?;
        Ok(self.k.mul_vec(mu.weights()))
    }

    /// U^mu at arbitrary evaluation points. An evaluation point that
    /// coincides with a grid point (within 1e-12 of the local scale) reuses
    /// that point's matrix row, so the diagonal rule applies there too.
    pub fn potential(
        &self,
        mu: &DiscreteMeasure,
        eval_points: &[Vec<f64>],
    ) -> Result<Vec<f64>, KernelError> {
        self.check(mu)?;
        let mut out = Vec::with_capacity(eval_points.len());
        for x in eval_points {
            if x.len() != self.params.dim {
                return Err(KernelError::DimMismatch { want: self.params.dim, got: x.len() });
            }
            out.push(match self.grid_index_of(x) {
                Some(i) => pairwise_dot(self.k.row(i), mu.weights()),
                None => {
                    let vals: Vec<f64> = (0..self.set.len())
                        .map(|j| mu.weights()[j] * self.params.kernel(x, self.set.point(j)))
                        .collect();
                    crate::linalg::pairwise_sum(&vals)
                }
            });
        }
        Ok(out)
    }

    fn grid_index_of(&self, x: &[f64]) -> Option<usize> {
        let tol = 1e-12 * (1.0 + self.set.mesh_size());
        (0..self.set.len()).find(|&i| dist(x, self.set.point(i)) <= tol)
    }

    /// Whether `x` lies on (within tolerance of) a grid point.
    pub fn on_grid(&self, x: &[f64]) -> Option<usize> {
        self.grid_index_of(x)
    }

    pub fn energy(&self, mu: &DiscreteMeasure) -> Result<f64, KernelError> {
        self.check(mu)?;
        Ok(self.k.quad_form(mu.weights()))
    }

    pub fn mutual_energy(
        &self,
        mu: &DiscreteMeasure,
        nu: &DiscreteMeasure,
    ) -> Result<f64, KernelError> {
        self.check(mu)?;
        self.check(nu)?;
        Ok(self.k.bilinear(mu.weights(), nu.weights()))
    }

    /// Energy norm of the signed difference mu - nu (signed vectors appear
    /// only transiently here).
    pub fn energy_distance(
        &self,
        mu: &DiscreteMeasure,
        nu: &DiscreteMeasure,
    ) -> Result<f64, KernelError> {
        self.check(mu)?;
        self.check(nu)?;
        let d: Vec<f64> = mu.weights().iter().zip(nu.weights()).map(|(a, b)| a - b).collect();
        Ok(self.k.quad_form(&d).max(0.0).sqrt())
    }

    /// Cross potential of an off-grid source evaluated at every grid point:
    /// b_i = sum_j s_j kernel(x_i, y_j). Returns the vector and a flag that
    /// is true when some source point coincides with a grid point (the
    /// diagonal rule was used there).
    pub fn cross_potential(&self, source: &SourceMeasure) -> Result<(Vec<f64>, bool), KernelError> {
        if source.dim() != self.params.dim {
            return Err(KernelError::DimMismatch { want: self.params.dim, got: source.dim() });
        }
        let tol = 1e-12 * (1.0 + self.set.mesh_size());
        let mut coincident = false;
        let mut b = Vec::with_capacity(self.set.len());
        for i in 0..self.set.len() {
            let xi = self.set.point(i);
            let vals: Vec<f64> = source
                .points()
                .iter()
                .zip(source.charges())
                .map(|(y, &s)| {
                    let d = dist(xi, y);
                    if d <= tol {
                        coincident = true;
                        s * self.k.get(i, i)
                    } else {
                        s * d.powf(self.params.alpha - self.params.dim as f64)
                    }
                })
                .collect();
            b.push(crate::linalg::pairwise_sum(&vals));
        }
        Ok((b, coincident))
    }

    /// Potential of an off-grid source at an arbitrary point (exact kernel,
    /// no regularization; the evaluation point must avoid the source).
    pub fn source_potential_at(&self, source: &SourceMeasure, x: &[f64]) -> f64 {
        source_potential(self.params, source, x)
    }

    /// Gauss functional I_f(mu) with external field f = -U^omega:
    /// w'Kw - 2 * sum_ij w_i s_j kernel(x_i, y_j).
    pub fn gauss_functional(
        &self,
        mu: &DiscreteMeasure,
        omega: &SourceMeasure,
    ) -> Result<f64, KernelError> {
        let (b, _) = self.cross_potential(omega)?;
        Ok(self.k.quad_form(mu.weights()) - 2.0 * pairwise_dot(mu.weights(), &b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_set, DiscretizedSet, PointTag, ShapeSpec};

    fn two_points(d: f64) -> DiscretizedSet {
        DiscretizedSet::new(
            3,
            vec![0.0, 0.0, 0.0, d, 0.0, 0.0],
            vec![1.0, 1.0],
            vec![PointTag::Interior, PointTag::Interior],
            None,
        )
        .unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(RieszParams::new(3, 2.0).is_ok());
        assert!(RieszParams::new(2, 2.0).is_err()); // alpha < dim fails
        assert!(RieszParams::new(3, 0.0).is_err());
        assert!(RieszParams::new(5, 2.5).is_err());
        assert!(RieszParams::new(1, 0.5).is_err());
    }

    #[test]
    fn unit_distance_off_diagonal() {
        for &(n, a) in &[(3usize, 2.0f64), (3, 1.5), (4, 2.0), (2, 1.0)] {
            let p = RieszParams::new(n, a).unwrap();
            let mut set = two_points(1.0);
            if n != 3 {
                let coords: Vec<f64> = match n {
                    2 => vec![0.0, 0.0, 1.0, 0.0],
                    4 => vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
                    _ => unreachable!(),
                };
                set = DiscretizedSet::new(
                    n,
                    coords,
                    vec![1.0, 1.0],
                    vec![PointTag::Interior, PointTag::Interior],
                    None,
                )
                .unwrap();
            }
            let ctx = assemble(p, set).unwrap();
            assert_eq!(ctx.matrix().get(0, 1), 1.0);
            assert_eq!(ctx.matrix().get(1, 0), 1.0);
        }
    }

    #[test]
    fn newtonian_distance_two() {
        let p = RieszParams::new(3, 2.0).unwrap();
        let ctx = assemble(p, two_points(2.0)).unwrap();
        assert!((ctx.matrix().get(0, 1) - 0.5).abs() < 1e-15);
        // Diagonal: (0.5 * 2)^(2-3) = 1.
        assert!((ctx.matrix().get(0, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn matrix_matches_bruteforce() {
        let p = RieszParams::new(3, 1.5).unwrap();
        let set = build_set(&ShapeSpec::Ball { center: vec![0.0; 3], radius: 1.0 }, 3, None).unwrap();
        let ctx = assemble(p, set.clone()).unwrap();
        for i in 0..set.len() {
            for j in 0..set.len() {
                let want = if i == j {
                    (0.5 * set.nn_dist(i)).powf(1.5 - 3.0)
                } else {
                    dist(set.point(i), set.point(j)).powf(1.5 - 3.0)
                };
                let got = ctx.matrix().get(i, j);
                assert!((got - want).abs() <= 1e-15 * want.abs());
            }
        }
    }

    #[test]
    fn potential_oracle_and_diagonal_use() {
        let p = RieszParams::new(3, 2.0).unwrap();
        let set = build_set(&ShapeSpec::Ball { center: vec![0.0; 3], radius: 1.0 }, 3, None).unwrap();
        let ctx = assemble(p, set.clone()).unwrap();
        let w: Vec<f64> = (0..set.len()).map(|i| 0.1 + (i % 5) as f64 * 0.2).collect();
        let mu = DiscreteMeasure::new(&set, w.clone()).unwrap();
        // Off-grid probes: brute-force double loop.
        let probes = vec![vec![2.0, 0.3, -0.4], vec![-1.5, 2.5, 0.0], vec![0.0, 0.0, 3.0]];
        let vals = ctx.potential(&mu, &probes).unwrap();
        for (x, &v) in probes.iter().zip(&vals) {
            let mut want = 0.0;
            for j in 0..set.len() {
                want += w[j] * p.kernel(x, set.point(j));
            }
            assert!((v - want).abs() <= 1e-12 * want.abs());
            assert!(v.is_finite() && v >= 0.0);
        }
        // On-grid probe reuses the matrix row.
        let on = ctx.potential(&mu, &[set.point(2).to_vec()]).unwrap();
        let grid = ctx.potential_on_grid(&mu).unwrap();
        assert_eq!(on[0], grid[2]);
        // Zero measure -> zeros.
        let z = DiscreteMeasure::zero(&set);
        assert!(ctx.potential(&z, &probes).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn energy_bilinearity() {
        let p = RieszParams::new(3, 2.0).unwrap();
        let set = build_set(&ShapeSpec::Ball { center: vec![0.0; 3], radius: 1.0 }, 3, None).unwrap();
        let ctx = assemble(p, set.clone()).unwrap();
        let mu = DiscreteMeasure::new(&set, (0..set.len()).map(|i| 0.3 + (i as f64 * 0.7).sin().abs()).collect()).unwrap();
        let nu = DiscreteMeasure::new(&set, (0..set.len()).map(|i| 0.1 + (i as f64 * 1.3).cos().abs()).collect()).unwrap();
        assert_eq!(ctx.energy(&DiscreteMeasure::zero(&set)).unwrap(), 0.0);
        let iuv = ctx.mutual_energy(&mu, &nu).unwrap();
        let ivu = ctx.mutual_energy(&nu, &mu).unwrap();
        assert!((iuv - ivu).abs() <= 1e-14 * iuv.abs());
        let sum = DiscreteMeasure::combine(1.0, &mu, 1.0, &nu).unwrap();
        let lhs = ctx.energy(&sum).unwrap();
        let rhs = ctx.energy(&mu).unwrap() + 2.0 * iuv + ctx.energy(&nu).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs());
    }

    #[test]
    fn positive_definiteness_random_signed() {
        let p = RieszParams::new(3, 2.0).unwrap();
        let set = build_set(&ShapeSpec::Ball { center: vec![0.0; 3], radius: 1.0 }, 4, None).unwrap();
        let ctx = assemble(p, set.clone()).unwrap();
        let mut state = 0x12345678u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for _ in 0..100 {
            let w: Vec<f64> = (0..set.len()).map(|_| next()).collect();
            if w.iter().all(|&v| v == 0.0) {
                continue;
            }
            assert!(ctx.matrix().quad_form(&w) > 0.0);
        }
    }

    #[test]
    fn scaling_law() {
        let p = RieszParams::new(3, 1.5).unwrap();
        let base = build_set(&ShapeSpec::Ball { center: vec![0.0; 3], radius: 1.0 }, 3, None).unwrap();
        let s = 2.7;
        let scaled_coords: Vec<f64> = base.points().flat_map(|p| p.iter().map(|&c| c * s)).collect();
        let scaled = DiscretizedSet::new(
            3,
            scaled_coords,
            base.quad_weights().to_vec(),
            (0..base.len()).map(|i| base.tag(i)).collect(),
            None,
        )
        .unwrap();
        let c1 = assemble(p, base.clone()).unwrap();
        let c2 = assemble(p, scaled).unwrap();
        let f = s.powf(1.5 - 3.0);
        for i in 0..base.len() {
            for j in 0..base.len() {
                if i != j {
                    let want = c1.matrix().get(i, j) * f;
                    assert!((c2.matrix().get(i, j) - want).abs() <= 1e-12 * want.abs());
                }
            }
        }
    }

    #[test]
    fn gauss_functional_oracle() {
        let p = RieszParams::new(3, 2.0).unwrap();
        let set = build_set(&ShapeSpec::Ball { center: vec![0.0; 3], radius: 1.0 }, 3, None).unwrap();
        let ctx = assemble(p, set.clone()).unwrap();
        let w: Vec<f64> = (0..set.len()).map(|i| 0.2 + (i % 4) as f64 * 0.1).collect();
        let mu = DiscreteMeasure::new(&set, w.clone()).unwrap();
        let omega = SourceMeasure::new(
            vec![vec![3.0, 0.0, 0.0], vec![0.0, -2.5, 1.0]],
            vec![0.7, 1.1],
        )
        .unwrap();
        let got = ctx.gauss_functional(&mu, &omega).unwrap();
        let mut want = 0.0;
        for i in 0..set.len() {
            for j in 0..set.len() {
                want += w[i] * w[j] * ctx.matrix().get(i, j);
            }
            for (y, &sgn) in omega.points().iter().zip(omega.charges()) {
                want -= 2.0 * w[i] * sgn * p.kernel(set.point(i), y);
            }
        }
        assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
        // mu = 0 -> 0; omega absent -> plain energy.
        assert_eq!(ctx.gauss_functional(&DiscreteMeasure::zero(&set), &omega).unwrap(), 0.0);
    }
}
