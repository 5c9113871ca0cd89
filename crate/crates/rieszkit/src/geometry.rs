//! Finite point-cloud discretizations of the sets the solvers operate on,
//! plus sphere inversion and radial shell decompositions.

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointTag {
    Interior,
    Boundary,
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// A finite quadrature point cloud standing in for a subset of R^n.
#[derive(Clone, Debug)]
pub struct DiscretizedSet {
    dim: usize,
    coords: Vec<f64>, // N x dim, row-major
    quad_weights: Vec<f64>,
    tags: Vec<PointTag>,
    mesh_size: f64,
    nn_dist: Vec<f64>, // distance to nearest other point
    truncation_radius: Option<f64>,
    id: u64,
}

impl DiscretizedSet {
    pub fn new(
        dim: usize,
        coords: Vec<f64>,
        quad_weights: Vec<f64>,
        tags: Vec<PointTag>,
        truncation_radius: Option<f64>,
    ) -> Result<Self, GeometryError> {
        if dim < 2 {
            return Err(GeometryError::Config(format!("ambient dimension {dim} < 2")));
        }
        let n = quad_weights.len();
        if coords.len() != n * dim || tags.len() != n {
            return Err(GeometryError::Config("inconsistent field lengths".into()));
        }
        if n < 2 {
            return Err(GeometryError::Config(format!("set has {n} point(s), need >= 2")));
        }
        if quad_weights.iter().any(|&w| !(w > 0.0)) {
            return Err(GeometryError::Config("non-positive quadrature weight".into()));
        }
        let mut nn_dist = vec![f64::INFINITY; n];
        for i in 0..n {
            for j in i + 1..n {
                let d = dist(&coords[i * dim..(i + 1) * dim], &coords[j * dim..(j + 1) * dim]);
                if d < nn_dist[i] {
                    nn_dist[i] = d;
                }
                if d < nn_dist[j] {
                    nn_dist[j] = d;
                }
            }
        }
        let mesh_size = nn_dist.iter().cloned().fold(0.0f64, f64::max);
        if nn_dist.iter().any(|&d| !(d > 0.0)) {
            return Err(GeometryError::Config("duplicate points in set".into()));
        }
        let id = fingerprint(dim, &coords);
        Ok(DiscretizedSet { dim, coords, quad_weights, tags, mesh_size, nn_dist, truncation_radius, id })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn len(&self) -> usize {
        self.quad_weights.len()
    }
    pub fn is_empty(&self) -> bool {
        self.quad_weights.is_empty()
    }
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }
    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks(self.dim)
    }
    pub fn quad_weight(&self, i: usize) -> f64 {
        self.quad_weights[i]
    }
    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }
    pub fn tag(&self, i: usize) -> PointTag {
        self.tags[i]
    }
    pub fn mesh_size(&self) -> f64 {
        self.mesh_size
    }
    /// Distance from point `i` to its nearest neighbor in the set.
    pub fn nn_dist(&self, i: usize) -> f64 {
        self.nn_dist[i]
    }
    pub fn truncation_radius(&self) -> Option<f64> {
        self.truncation_radius
    }
    pub fn id(&self) -> u64 {
        self.id
    }

    /// Sub-cloud on the given (strictly increasing) point indices. The
    /// per-point nearest-neighbor distances of the parent are kept, so
    /// kernel regularization is consistent between a set and its subsets.
    pub fn subset(&self, idx: &[usize]) -> Result<Self, GeometryError> {
        let mut coords = Vec::with_capacity(idx.len() * self.dim);
        let mut weights = Vec::with_capacity(idx.len());
        let mut tags = Vec::with_capacity(idx.len());
        let mut nn = Vec::with_capacity(idx.len());
        for &i in idx {
            coords.extend_from_slice(self.point(i));
            weights.push(self.quad_weights[i]);
            tags.push(self.tags[i]);
            nn.push(self.nn_dist[i]);
        }
        if weights.len() < 2 {
            return Err(GeometryError::Config("subset has fewer than 2 points".into()));
        }
        let mesh_size = nn.iter().cloned().fold(0.0f64, f64::max);
        let id = fingerprint(self.dim, &coords);
        Ok(DiscretizedSet {
            dim: self.dim,
            coords,
            quad_weights: weights,
            tags,
            mesh_size,
            nn_dist: nn,
            truncation_radius: self.truncation_radius,
            id,
        })
    }
}

fn fingerprint(dim: usize, coords: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    let mut eat = |v: u64| {
        h ^= v;
        h = h.wrapping_mul(0x100000001b3);
    };
    eat(dim as u64);
    for &c in coords {
        eat(c.to_bits());
    }
    h
}

/// Shape catalog for `build_set`. Center vectors fix the ambient dimension;
/// `half_space_slab` and `rotation_body` are three-dimensional.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ShapeSpec {
    Ball { center: Vec<f64>, radius: f64 },
    Sphere { center: Vec<f64>, radius: f64 },
    Box { min: Vec<f64>, max: Vec<f64> },
    /// Boundary face x_1 = offset of the half-space {x_1 >= offset},
    /// gridded as a polar disc graded geometrically toward the axis.
    HalfSpaceSlab { offset: f64 },
    /// Square patch of the hyperplane x_1 = center_1, side 2*halfwidth.
    HyperplanePatch { center: Vec<f64>, halfwidth: f64 },
    /// Lateral surface of {0 <= x_1 <= 1, x_2^2+x_3^2 <= exp(-2 x_1^-rho)},
    /// sampled on rings graded toward the cusp at the origin.
    RotationBody { rho: f64 },
    Annulus { center: Vec<f64>, inner: f64, outer: f64 },
    Union { parts: Vec<ShapeSpec> },
}

impl ShapeSpec {
    pub fn ambient_dim(&self) -> usize {
        match self {
            ShapeSpec::Ball { center, .. }
            | ShapeSpec::Sphere { center, .. }
            | ShapeSpec::Annulus { center, .. }
            | ShapeSpec::HyperplanePatch { center, .. } => center.len(),
            ShapeSpec::Box { min, .. } => min.len(),
            ShapeSpec::HalfSpaceSlab { .. } | ShapeSpec::RotationBody { .. } => 3,
            ShapeSpec::Union { parts } => parts.first().map(|p| p.ambient_dim()).unwrap_or(0),
        }
    }

    pub fn is_unbounded(&self) -> bool {
        match self {
            ShapeSpec::HalfSpaceSlab { .. } => true,
            ShapeSpec::Union { parts } => parts.iter().any(|p| p.is_unbounded()),
            _ => false,
        }
    }
}

struct CloudBuilder {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
    tags: Vec<PointTag>,
}

impl CloudBuilder {
    fn new(dim: usize) -> Self {
        CloudBuilder { dim, coords: Vec::new(), weights: Vec::new(), tags: Vec::new() }
    }
    fn push(&mut self, p: &[f64], w: f64, tag: PointTag) {
        debug_assert_eq!(p.len(), self.dim);
        self.coords.extend_from_slice(p);
        self.weights.push(w);
        self.tags.push(tag);
    }
}

pub fn build_set(
    spec: &ShapeSpec,
    resolution: usize,
    truncation_radius: Option<f64>,
) -> Result<DiscretizedSet, GeometryError> {
    if resolution < 2 {
        return Err(GeometryError::Config(format!("resolution {resolution} < 2")));
    }
    if spec.is_unbounded() && truncation_radius.is_none() {
        return Err(GeometryError::Config(
            "unbounded shape requires a truncation radius".into(),
        ));
    }
    let dim = spec.ambient_dim();
    if dim < 2 {
        return Err(GeometryError::Config("shape has ambient dimension < 2".into()));
    }
    let mut b = CloudBuilder::new(dim);
    emit(spec, resolution, truncation_radius, &mut b)?;
    let trunc = if spec.is_unbounded() { truncation_radius } else { None };
    DiscretizedSet::new(dim, b.coords, b.weights, b.tags, trunc)
}

fn emit(
    spec: &ShapeSpec,
    res: usize,
    trunc: Option<f64>,
    b: &mut CloudBuilder,
) -> Result<(), GeometryError> {
    match spec {
        ShapeSpec::Ball { center, radius } => emit_ball(center, *radius, res, b),
        ShapeSpec::Sphere { center, radius } => emit_sphere(center, *radius, res, b),
        ShapeSpec::Box { min, max } => emit_box(min, max, res, b),
        ShapeSpec::HalfSpaceSlab { offset } => {
            let r = trunc.ok_or_else(|| {
                GeometryError::Config("half_space_slab requires a truncation radius".into())
            })?;
            emit_disc_face(*offset, r, res, b);
            Ok(())
        }
        ShapeSpec::HyperplanePatch { center, halfwidth } => {
            emit_patch(center, *halfwidth, res, b)
        }
        ShapeSpec::RotationBody { rho } => emit_rotation_body(*rho, res, b),
        ShapeSpec::Annulus { center, inner, outer } => emit_annulus(center, *inner, *outer, res, b),
        ShapeSpec::Union { parts } => {
            if parts.is_empty() {
                return Err(GeometryError::Config("empty union".into()));
            }
            for p in parts {
                if p.ambient_dim() != b.dim {
                    return Err(GeometryError::Config("union parts of mixed dimension".into()));
                }
                // Emit each part on its own, then drop points duplicating
                // earlier parts. Overlap only happens across parts; a part's
                // internal structure may be legitimately finer than the
                // duplicate tolerance (e.g. sub-tolerance cusp rings, whose
                // nearest-neighbor scale carries the thin-wire
                // self-interaction) and must survive untouched.
                let mut part = CloudBuilder::new(b.dim);
                emit(p, res, trunc, &mut part)?;
                let existing = b.weights.len();
                let dim = b.dim;
                for i in 0..part.weights.len() {
                    let pc = &part.coords[i * dim..(i + 1) * dim];
                    let dup = (0..existing)
                        .any(|j| dist(pc, &b.coords[j * dim..(j + 1) * dim]) < 1e-9);
                    if !dup {
                        b.push(pc, part.weights[i], part.tags[i]);
                    }
                }
            }
            Ok(())
        }
    }
}

fn emit_ball(center: &[f64], radius: f64, res: usize, b: &mut CloudBuilder) -> Result<(), GeometryError> {
    if !(radius > 0.0) {
        return Err(GeometryError::Config("ball radius must be positive".into()));
    }
    let dim = center.len();
    if dim == 2 || dim == 3 {
        // Concentric shells ("onion"): a staircase-free crust keeps the
        // discrete equilibrium support clean near the sphere. `res` counts
        // cells across the diameter, as in the lattice case; the outermost
        // shell sits exactly on the sphere.
        let shells = (res / 2).max(1);
        let h = radius / shells as f64;
        for k in 0..shells {
            let r = (k as f64 + 1.0) * h;
            let tag = if k + 1 == shells { PointTag::Boundary } else { PointTag::Interior };
            if dim == 2 {
                let m = ((2.0 * std::f64::consts::PI * r / h).round() as usize).max(1);
                let w = 2.0 * std::f64::consts::PI * r * h / m as f64;
                let spin = 0.61 * k as f64;
                for q in 0..m {
                    let t = 2.0 * std::f64::consts::PI * q as f64 / m as f64 + spin;
                    let p = [center[0] + r * t.cos(), center[1] + r * t.sin()];
                    b.push(&p, w, tag);
                }
            } else {
                let m = ((4.0 * std::f64::consts::PI * r * r / (h * h)).round() as usize).max(1);
                let w = 4.0 * std::f64::consts::PI * r * r * h / m.max(1) as f64;
                let golden = (1.0 + 5f64.sqrt()) / 2.0;
                let spin = 0.61 * k as f64;
                for q in 0..m {
                    let z = 1.0 - (2.0 * q as f64 + 1.0) / m as f64;
                    let rho = (1.0 - z * z).max(0.0).sqrt();
                    let phi = 2.0 * std::f64::consts::PI * (q as f64 / golden).fract() + spin;
                    let p = [
                        center[0] + r * rho * phi.cos(),
                        center[1] + r * rho * phi.sin(),
                        center[2] + r * z,
                    ];
                    b.push(&p, w, tag);
                }
            }
        }
        return Ok(());
    }
    // Other dimensions: cell-centered lattice clipped to the ball.
    let h = 2.0 * radius / res as f64;
    let cell = h.powi(dim as i32);
    let mut idx = vec![0usize; dim];
    loop {
        let p: Vec<f64> = (0..dim)
            .map(|d| center[d] - radius + (idx[d] as f64 + 0.5) * h)
            .collect();
        let r = dist(&p, center);
        if r <= radius {
            let tag = if r >= radius - h { PointTag::Boundary } else { PointTag::Interior };
            b.push(&p, cell, tag);
        }
        if !advance(&mut idx, res) {
            break;
        }
    }
    Ok(())
}

fn advance(idx: &mut [usize], res: usize) -> bool {
    for d in (0..idx.len()).rev() {
        idx[d] += 1;
        if idx[d] < res {
            return true;
        }
        idx[d] = 0;
    }
    false
}

fn emit_sphere(center: &[f64], radius: f64, res: usize, b: &mut CloudBuilder) -> Result<(), GeometryError> {
    if !(radius > 0.0) {
        return Err(GeometryError::Config("sphere radius must be positive".into()));
    }
    match center.len() {
        2 => {
            let n = res.max(3);
            let w = 2.0 * std::f64::consts::PI * radius / n as f64;
            for k in 0..n {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                let p = [center[0] + radius * t.cos(), center[1] + radius * t.sin()];
                b.push(&p, w, PointTag::Boundary);
            }
            Ok(())
        }
        3 => {
            // Fibonacci lattice, res^2 points.
            let n = res * res;
            let w = 4.0 * std::f64::consts::PI * radius * radius / n as f64;
            let golden = (1.0 + 5f64.sqrt()) / 2.0;
            for k in 0..n {
                let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
                let rho = (1.0 - z * z).max(0.0).sqrt();
                let phi = 2.0 * std::f64::consts::PI * (k as f64 / golden).fract();
                let p = [
                    center[0] + radius * rho * phi.cos(),
                    center[1] + radius * rho * phi.sin(),
                    center[2] + radius * z,
                ];
                b.push(&p, w, PointTag::Boundary);
            }
            Ok(())
        }
        d => Err(GeometryError::Config(format!("sphere sampling not available in dimension {d}"))),
    }
}

fn emit_box(min: &[f64], max: &[f64], res: usize, b: &mut CloudBuilder) -> Result<(), GeometryError> {
    let dim = min.len();
    if max.len() != dim || min.iter().zip(max).any(|(a, c)| !(c > a)) {
        return Err(GeometryError::Config("degenerate box".into()));
    }
    let h: Vec<f64> = (0..dim).map(|d| (max[d] - min[d]) / res as f64).collect();
    let cell: f64 = h.iter().product();
    let mut idx = vec![0usize; dim];
    loop {
        let p: Vec<f64> = (0..dim).map(|d| min[d] + (idx[d] as f64 + 0.5) * h[d]).collect();
        let near_face = (0..dim).any(|d| idx[d] == 0 || idx[d] == res - 1);
        let tag = if near_face { PointTag::Boundary } else { PointTag::Interior };
        b.push(&p, cell, tag);
        if !advance(&mut idx, res) {
            break;
        }
    }
    Ok(())
}

/// Polar disc grid on the plane x_1 = offset, radius `outer`, ring radii in
/// geometric progression toward the center so a source placed on the axis is
/// well resolved while large truncation radii stay affordable.
fn emit_disc_face(offset: f64, outer: f64, res: usize, b: &mut CloudBuilder) {
    // Geometrically graded polar grid on the plane x0 = offset. The inner
    // radius and grading ratio depend only on `res`, never on the
    // truncation radius, so grids built for different truncations are
    // nested: every ring of the smaller grid reappears verbatim in the
    // larger one. Ladder comparisons (support radii, swept masses) are then
    // free of regridding noise.
    let inner = 1.0 / (res * res) as f64;
    let g = 1.0 + 1.2 / res as f64;
    // Roughly unit-aspect cells: constant point count per ring.
    let per_ring = ((2.0 * std::f64::consts::PI / (1.0 - 1.0 / g)).round() as usize).clamp(6, 48);
    let center = [offset, 0.0, 0.0];
    b.push(&center, std::f64::consts::PI * inner * inner, PointTag::Boundary);
    let mut k = 0usize;
    loop {
        let r = inner * g.powi(k as i32);
        if r > outer * (1.0 + 1e-12) {
            break;
        }
        let r_lo = if k == 0 { 0.0 } else { inner * g.powi(k as i32 - 1) };
        let r_hi = (r * g).min(outer);
        let area = std::f64::consts::PI * (0.25 * (r + r_hi).powi(2) - 0.25 * (r + r_lo).powi(2));
        let w = area.max(1e-12) / per_ring as f64;
        let spin = 0.5 * k as f64; // stagger consecutive rings
        for m in 0..per_ring {
            let t = 2.0 * std::f64::consts::PI * m as f64 / per_ring as f64 + spin;
            let p = [offset, r * t.cos(), r * t.sin()];
            b.push(&p, w, PointTag::Boundary);
        }
        k += 1;
    }
}

fn emit_patch(center: &[f64], halfwidth: f64, res: usize, b: &mut CloudBuilder) -> Result<(), GeometryError> {
    if center.len() != 3 {
        return Err(GeometryError::Config("hyperplane_patch requires dimension 3".into()));
    }
    if !(halfwidth > 0.0) {
        return Err(GeometryError::Config("patch halfwidth must be positive".into()));
    }
    let h = 2.0 * halfwidth / res as f64;
    for i in 0..res {
        for j in 0..res {
            let p = [
                center[0],
                center[1] - halfwidth + (i as f64 + 0.5) * h,
                center[2] - halfwidth + (j as f64 + 0.5) * h,
            ];
            b.push(&p, h * h, PointTag::Boundary);
        }
    }
    Ok(())
}

fn emit_annulus(center: &[f64], inner: f64, outer: f64, res: usize, b: &mut CloudBuilder) -> Result<(), GeometryError> {
    if !(0.0 < inner && inner < outer) {
        return Err(GeometryError::Config("annulus requires 0 < inner < outer".into()));
    }
    let dim = center.len();
    let h = 2.0 * outer / res as f64;
    let cell = h.powi(dim as i32);
    let mut idx = vec![0usize; dim];
    loop {
        let p: Vec<f64> = (0..dim)
            .map(|d| center[d] - outer + (idx[d] as f64 + 0.5) * h)
            .collect();
        let r = dist(&p, center);
        if r >= inner && r <= outer {
            let tag = if r >= outer - h || r <= inner + h {
                PointTag::Boundary
            } else {
                PointTag::Interior
            };
            b.push(&p, cell, tag);
        }
        if !advance(&mut idx, res) {
            break;
        }
    }
    Ok(())
}

/// Cusp-body profile radius at axial coordinate x.
pub fn rotation_body_radius(rho: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-x.powf(-rho)).exp()
    }
}

fn emit_rotation_body(rho: f64, res: usize, b: &mut CloudBuilder) -> Result<(), GeometryError> {
    if !(rho > 0.0) {
        return Err(GeometryError::Config("rotation body exponent must be positive".into()));
    }
    let g = 1.0 - 0.48 / res as f64; // coarse geometric axial ratio
    let refine_cap = 32.0 * res as f64;
    let x_min = 0.052;
    let profile = |x: f64| rotation_body_radius(rho, x);

    let mut stations: Vec<f64> = Vec::new();
    let mut x = 1.0f64;
    while x > x_min {
        stations.push(x);
        let coarse = x * (1.0 - g);
        let a = profile(x);
        // Refine toward the wall scale where that is affordable; below the
        // refinement cap the surface is unresolvable and coarse steps do.
        let dx = if 2.0 * a < coarse / refine_cap {
            coarse
        } else {
            (2.0 * a).clamp(coarse / refine_cap, coarse)
        };
        x -= dx;
    }
    stations.push(x_min);

    // Grading quota near the cusp: at least a quarter of the axial samples
    // must sit in x < 0.1.
    let n_hi = stations.iter().filter(|&&s| s >= 0.1).count();
    let mut n_lo = stations.iter().filter(|&&s| s < 0.1).count();
    while n_lo * 3 < n_hi {
        // Subdivide the sub-0.1 range geometrically one level deeper.
        let lo: Vec<f64> = stations.iter().cloned().filter(|&s| s < 0.1).collect();
        let mut extra = Vec::new();
        for w in lo.windows(2) {
            extra.push((w[0] * w[1]).sqrt());
        }
        if extra.is_empty() {
            break;
        }
        stations.extend(extra);
        stations.sort_by(|p, q| q.partial_cmp(p).unwrap());
        stations.dedup();
        n_lo = stations.iter().filter(|&&s| s < 0.1).count();
    }

    for (si, &xs) in stations.iter().enumerate() {
        // Floor the ring radius so squared coordinate differences stay well
        // above the subnormal range: the ring's nearest-neighbor distance is
        // the discrete stand-in for the wall radius and must not collapse.
        let a = profile(xs).max(1e-150);
        let dx_here = if si + 1 < stations.len() {
            stations[si] - stations[si + 1]
        } else {
            stations[si.saturating_sub(1)] - stations[si]
        };
        let m = if dx_here > 0.0 {
            ((2.0 * std::f64::consts::PI * a / dx_here).ceil() as usize).clamp(6, 4 * res)
        } else {
            6
        };
        let w = 2.0 * std::f64::consts::PI * a * dx_here.abs().max(1e-300) / m as f64;
        let spin = 0.37 * si as f64;
        for k in 0..m {
            let t = 2.0 * std::f64::consts::PI * k as f64 / m as f64 + spin;
            let p = [xs, a * t.cos(), a * t.sin()];
            b.push(&p, w, PointTag::Boundary);
        }
    }

    // End cap at x_1 = 1.
    let a1 = profile(1.0);
    let cap_rings = (res / 2).max(2);
    for k in 0..cap_rings {
        let r = a1 * (k as f64 + 0.5) / cap_rings as f64;
        let m = (6 * (k + 1)).min(24);
        let w = std::f64::consts::PI * a1 * a1 / (cap_rings * m) as f64;
        for q in 0..m {
            let t = 2.0 * std::f64::consts::PI * q as f64 / m as f64 + 0.21 * k as f64;
            let p = [1.0, r * t.cos(), r * t.sin()];
            b.push(&p, w, PointTag::Boundary);
        }
    }
    Ok(())
}

/// x* = center + (x - center)/|x - center|^2.
pub fn invert_point(x: &[f64], center: &[f64]) -> Result<Vec<f64>, GeometryError> {
    let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
    if r2 == 0.0 {
        return Err(GeometryError::Domain("inversion pole: x equals the center".into()));
    }
    Ok(x.iter().zip(center).map(|(a, c)| c + (a - c) / r2).collect())
}

/// Pointwise inversion of a set, quadrature weights rescaled by the
/// volume Jacobian |x - center|^{-2n}.
pub fn invert_set(a: &DiscretizedSet, center: &[f64]) -> Result<DiscretizedSet, GeometryError> {
    let n = a.dim();
    let tol = a.mesh_size() * 1e-6;
    let mut coords = Vec::with_capacity(a.len() * n);
    let mut weights = Vec::with_capacity(a.len());
    for i in 0..a.len() {
        let p = a.point(i);
        let r = dist(p, center);
        if r <= tol {
            return Err(GeometryError::Domain(
                "inversion center lies on (or too close to) the set".into(),
            ));
        }
        coords.extend(invert_point(p, center)?);
        weights.push(a.quad_weight(i) * r.powi(-2 * n as i32));
    }
    let tags = (0..a.len()).map(|i| a.tag(i)).collect();
    DiscretizedSet::new(n, coords, weights, tags, a.truncation_radius())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShellMode {
    /// Shell j holds r^{j+1} < |x - c| <= r^j, ratio in (0,1).
    Inward,
    /// Shell j holds r^j <= |x - c| < r^{j+1}, ratio > 1.
    Outward,
}

#[derive(Clone, Debug)]
pub struct ShellDecomposition {
    pub center: Vec<f64>,
    pub ratio: f64,
    pub mode: ShellMode,
    /// (shell index, point indices), sorted by shell index; empty shells omitted.
    pub shells: Vec<(i64, Vec<usize>)>,
}

pub fn shell_decompose(
    a: &DiscretizedSet,
    center: &[f64],
    ratio: f64,
    mode: ShellMode,
) -> Result<ShellDecomposition, GeometryError> {
    match mode {
        ShellMode::Inward if !(ratio > 0.0 && ratio < 1.0) => {
            return Err(GeometryError::Config(format!("inward shells need 0 < ratio < 1, got {ratio}")));
        }
        ShellMode::Outward if !(ratio > 1.0) => {
            return Err(GeometryError::Config(format!("outward shells need ratio > 1, got {ratio}")));
        }
        _ => {}
    }
    let mut buckets: std::collections::BTreeMap<i64, Vec<usize>> = Default::default();
    for i in 0..a.len() {
        let d = dist(a.point(i), center);
        if d == 0.0 {
            continue;
        }
        let mut j = (d.ln() / ratio.ln()).floor() as i64;
        // Fix the bracket at floating boundaries.
        let inside = |j: i64| match mode {
            ShellMode::Inward => ratio.powi(j as i32 + 1) < d && d <= ratio.powi(j as i32),
            ShellMode::Outward => ratio.powi(j as i32) <= d && d < ratio.powi(j as i32 + 1),
        };
        for _ in 0..4 {
            if inside(j) {
                break;
            }
            if match mode {
                ShellMode::Inward => d > ratio.powi(j as i32),
                ShellMode::Outward => d < ratio.powi(j as i32),
            } {
                j -= 1;
            } else {
                j += 1;
            }
        }
        buckets.entry(j).or_default().push(i);
    }
    Ok(ShellDecomposition {
        center: center.to_vec(),
        ratio,
        mode,
        shells: buckets.into_iter().collect(),
    })
}
