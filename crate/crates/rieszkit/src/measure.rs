//! Nonnegative discrete measures on a `DiscretizedSet`, plus free-standing
//! weighted point sources (Dirac combinations off the grid).

use crate::geometry::DiscretizedSet;
use crate::linalg::pairwise_sum;

#[derive(Debug, thiserror::Error)]
pub enum MeasureError {
    #[error("negative weight {value} at index {index}")]
    NegativeWeight { index: usize, value: f64 },
    #[error("weight vector length {got} does not match set size {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("measures live on different sets")]
    SetMismatch,
    #[error("operation requires a nonzero measure")]
    ZeroMeasure,
    #[error("{0}")]
    Invalid(String),
}

/// Element of the cone of nonnegative measures on a fixed point cloud.
#[derive(Clone, Debug)]
pub struct DiscreteMeasure {
    set_id: u64,
    weights: Vec<f64>,
    mass: f64,
}

impl DiscreteMeasure {
    pub fn new(set: &DiscretizedSet, weights: Vec<f64>) -> Result<Self, MeasureError> {
        if weights.len() != set.len() {
            return Err(MeasureError::LengthMismatch { got: weights.len(), want: set.len() });
        }
        for (i, &w) in weights.iter().enumerate() {
            if !(w >= 0.0) {
                return Err(MeasureError::NegativeWeight { index: i, value: w });
            }
        }
        let mass = pairwise_sum(&weights);
        Ok(DiscreteMeasure { set_id: set.id(), weights, mass })
    }

    pub fn zero(set: &DiscretizedSet) -> Self {
        DiscreteMeasure { set_id: set.id(), weights: vec![0.0; set.len()], mass: 0.0 }
    }

    pub fn set_id(&self) -> u64 {
        self.set_id
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn len(&self) -> usize {
        self.weights.len()
    }
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
    pub fn mass(&self) -> f64 {
        self.mass
    }
    pub fn is_zero(&self) -> bool {
        self.mass == 0.0
    }

    pub fn same_set(&self, other: &DiscreteMeasure) -> Result<(), MeasureError> {
        if self.set_id != other.set_id || self.weights.len() != other.weights.len() {
            Err(MeasureError::SetMismatch)
        } else {
            Ok(())
        }
    }

    /// Trace of the measure: weights zeroed outside the mask.
    pub fn restrict(&self, mask: &[bool]) -> Result<DiscreteMeasure, MeasureError> {
        if mask.len() != self.weights.len() {
            return Err(MeasureError::LengthMismatch { got: mask.len(), want: self.weights.len() });
        }
        let weights: Vec<f64> = self
            .weights
            .iter()
            .zip(mask)
            .map(|(&w, &keep)| if keep { w } else { 0.0 })
            .collect();
        let mass = pairwise_sum(&weights);
        Ok(DiscreteMeasure { set_id: self.set_id, weights, mass })
    }

    /// a1*mu1 + a2*mu2 with a1, a2 >= 0.
    pub fn combine(
        a1: f64,
        mu1: &DiscreteMeasure,
        a2: f64,
        mu2: &DiscreteMeasure,
    ) -> Result<DiscreteMeasure, MeasureError> {
        mu1.same_set(mu2)?;
        if !(a1 >= 0.0) || !(a2 >= 0.0) {
            return Err(MeasureError::Invalid(format!("negative coefficient ({a1}, {a2})")));
        }
        let weights: Vec<f64> = mu1
            .weights
            .iter()
            .zip(&mu2.weights)
            .map(|(&w1, &w2)| a1 * w1 + a2 * w2)
            .collect();
        let mass = pairwise_sum(&weights);
        Ok(DiscreteMeasure { set_id: mu1.set_id, weights, mass })
    }

    pub fn scale(&self, a: f64) -> Result<DiscreteMeasure, MeasureError> {
        if !(a >= 0.0) {
            return Err(MeasureError::Invalid(format!("negative scale {a}")));
        }
        let weights: Vec<f64> = self.weights.iter().map(|&w| a * w).collect();
        let mass = pairwise_sum(&weights);
        Ok(DiscreteMeasure { set_id: self.set_id, weights, mass })
    }

    pub fn normalize(&self) -> Result<DiscreteMeasure, MeasureError> {
        if !(self.mass > 0.0) {
            return Err(MeasureError::ZeroMeasure);
        }
        self.scale(1.0 / self.mass)
    }

    /// Indices with weight > tol * max_weight.
    pub fn support_points(&self, tol: f64) -> Vec<usize> {
        let max_w = self.weights.iter().cloned().fold(0.0f64, f64::max);
        if max_w == 0.0 {
            return Vec::new();
        }
        let cut = tol * max_w;
        (0..self.weights.len()).filter(|&i| self.weights[i] > cut).collect()
    }

    pub const DEFAULT_SUPPORT_TOL: f64 = 1e-8;

    pub fn support(&self) -> Vec<usize> {
        self.support_points(Self::DEFAULT_SUPPORT_TOL)
    }

    /// The measure as a free-standing point source (support points only).
    pub fn as_source(&self, set: &DiscretizedSet) -> Result<SourceMeasure, MeasureError> {
        if set.id() != self.set_id {
            return Err(MeasureError::SetMismatch);
        }
        let mut points = Vec::new();
        let mut charges = Vec::new();
        for i in 0..self.weights.len() {
            if self.weights[i] > 0.0 {
                points.push(set.point(i).to_vec());
                charges.push(self.weights[i]);
            }
        }
        SourceMeasure::new(points, charges)
    }
}

/// A finite positive combination of Dirac measures at arbitrary locations,
/// used for external-field sources and balayage inputs whose support need
/// not lie on any grid.
#[derive(Clone, Debug)]
pub struct SourceMeasure {
    points: Vec<Vec<f64>>,
    charges: Vec<f64>,
    mass: f64,
}

impl SourceMeasure {
    pub fn new(points: Vec<Vec<f64>>, charges: Vec<f64>) -> Result<Self, MeasureError> {
        if points.len() != charges.len() {
            return Err(MeasureError::LengthMismatch { got: charges.len(), want: points.len() });
        }
        if points.is_empty() {
            return Err(MeasureError::ZeroMeasure);
        }
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim) {
            return Err(MeasureError::Invalid("source points of mixed dimension".into()));
        }
        for (i, &c) in charges.iter().enumerate() {
            if !(c > 0.0) {
                return Err(MeasureError::NegativeWeight { index: i, value: c });
            }
        }
        let mass = pairwise_sum(&charges);
        Ok(SourceMeasure { points, charges, mass })
    }

    pub fn dirac(location: Vec<f64>, charge: f64) -> Result<Self, MeasureError> {
        SourceMeasure::new(vec![location], vec![charge])
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }
    pub fn len(&self) -> usize {
        self.charges.len()
    }
    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }
    pub fn charges(&self) -> &[f64] {
        &self.charges
    }
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn scale(&self, a: f64) -> Result<Self, MeasureError> {
        if !(a > 0.0) {
            return Err(MeasureError::Invalid(format!("non-positive scale {a}")));
        }
        SourceMeasure::new(self.points.clone(), self.charges.iter().map(|&c| a * c).collect())
    }
}
