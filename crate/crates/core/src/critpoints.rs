//! Detection, refinement, classification and Brouwer indexing of interior
//! critical points of a [`Field`], plus the degree-sum audit.
//!
//! The detector flags every grid cell on which both gradient components
//! change sign, refines each seed by Newton on the biquadratic gradient, and
//! deduplicates within 2h. Indices come from the winding number of the
//! sampled gradient on a small circle; when that computation degenerates for
//! many azimuthally spread candidates at a common radius from the hole, the
//! candidates are reported as a ring diagnostic instead of isolated points.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use crate::fmath::FloatExt;

use crate::elliptic::Field;
use crate::geometry::{Domain, NodeClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CritClass {
    Max,
    Min,
    Saddle,
    Degenerate,
}

impl fmt::Display for CritClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CritClass::Max => "MAX",
            CritClass::Min => "MIN",
            CritClass::Saddle => "SADDLE",
            CritClass::Degenerate => "DEGENERATE",
        };
        f.write_str(s)
    }
}

/// Why a winding index could not be computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexError {
    /// min |∇u| on the circle below 10⁻³ of its max: possibly a degenerate
    /// ring.
    GradientTooSmallOnCircle,
    /// An angle increment exceeded π/2 even at 1024 samples.
    UnderSampled,
    /// The circle does not keep 2h clearance from the boundaries.
    InvalidCircle,
}

impl fmt::Display for IndexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexError::GradientTooSmallOnCircle => {
                write!(f, "gradient too small somewhere on the index circle")
            }
            IndexError::UnderSampled => write!(f, "winding number undersampled"),
            IndexError::InvalidCircle => write!(f, "index circle leaves the sampling region"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for IndexError {}

/// One refined critical point.
#[derive(Debug, Clone)]
pub struct CriticalPoint {
    pub location: [f64; 2],
    pub value: f64,
    pub grad_norm: f64,
    /// [uxx, uxy, uyy]
    pub hessian: [f64; 3],
    pub class: CritClass,
    pub index: Option<i32>,
    pub index_error: Option<IndexError>,
}

impl CriticalPoint {
    pub fn hessian_eigenvalues(&self) -> [f64; 2] {
        let [a, b, c] = self.hessian;
        let m = 0.5 * (a + c);
        let d = (0.25 * (a - c) * (a - c) + b * b).sqrt();
        [m - d, m + d]
    }
}

/// Degenerate critical ring around the hole centre.
#[derive(Debug, Clone)]
pub struct RingDiagnostic {
    pub center: [f64; 2],
    pub mean_radius: f64,
    pub radius_spread: f64,
    pub member_count: usize,
    pub gradient_too_small: usize,
    pub under_sampled: usize,
    /// Largest angular gap between consecutive members.
    pub max_gap: f64,
}

/// Result of a detection pass.
#[derive(Debug, Clone)]
pub struct CritSet {
    pub points: Vec<CriticalPoint>,
    pub ring: Option<RingDiagnostic>,
    pub margin: f64,
    pub dropped_seeds: usize,
    pub gradient_sup: f64,
}

impl CritSet {
    pub fn index_sum(&self) -> Option<i64> {
        let mut s = 0i64;
        for p in &self.points {
            s += p.index? as i64;
        }
        Some(s)
    }

    pub fn count_by_class(&self, class: CritClass) -> usize {
        self.points.iter().filter(|p| p.class == class).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CritError {
    /// Detection margin below 3h.
    MarginTooSmall { margin: f64, minimum: f64 },
    /// persistence base set contains a degenerate point.
    BaseDegenerate { base: usize },
    /// Two candidates fell within the pairing radius of one base point.
    PairingAmbiguous { base: usize },
}

impl fmt::Display for CritError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CritError::MarginTooSmall { margin, minimum } => {
                write!(f, "margin {margin} below the minimum {minimum}")
            }
            CritError::BaseDegenerate { base } => {
                write!(f, "base critical point {base} is degenerate")
            }
            CritError::PairingAmbiguous { base } => {
                write!(f, "more than one candidate pairs with base point {base}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CritError {}

const DEDUP_FACTOR: f64 = 2.0; // dedup radius = 2h
const NEWTON_MAX_STEPS: usize = 40;
const GRAD_TOL_FACTOR: f64 = 1e-8;
const HESS_CLASS_FACTOR: f64 = 1e-4;
const RING_MIN_MEMBERS: usize = 8;
const RING_MAX_GAP: f64 = PI / 2.0;

fn hessian_spectral_radius(h: &[f64; 3]) -> f64 {
    let m = 0.5 * (h[0] + h[2]);
    let d = (0.25 * (h[0] - h[2]) * (h[0] - h[2]) + h[1] * h[1]).sqrt();
    (m - d).abs().max((m + d).abs())
}

fn classify_hessian(h: &[f64; 3]) -> CritClass {
    let tau = HESS_CLASS_FACTOR * hessian_spectral_radius(h);
    let m = 0.5 * (h[0] + h[2]);
    let d = (0.25 * (h[0] - h[2]) * (h[0] - h[2]) + h[1] * h[1]).sqrt();
    let lo = m - d;
    let hi = m + d;
    let det = h[0] * h[2] - h[1] * h[1];
    if hi < -tau {
        CritClass::Max
    } else if lo > tau {
        CritClass::Min
    } else if det < -tau * tau {
        CritClass::Saddle
    } else {
        CritClass::Degenerate
    }
}

/// Winding number of the sampled gradient on the circle of radius `rho`
/// around `x`: +1 for extrema, −1 for nondegenerate saddles.
pub fn index_of(field: &Field, x: [f64; 2], rho: f64) -> Result<i32, IndexError> {
    let g = field.grid();
    let clearance = g.domain.boundary_distance(x[0], x[1]);
    if !(rho > 0.0) || clearance < rho + 2.0 * g.h * (1.0 - 1e-9) {
        return Err(IndexError::InvalidCircle);
    }
    for &n in &[256usize, 1024] {
        let mut angles = Vec::with_capacity(n);
        let mut gmin = f64::INFINITY;
        let mut gmax = 0.0f64;
        for k in 0..n {
            let t = 2.0 * PI * k as f64 / n as f64;
            let p = [x[0] + rho * t.cos(), x[1] + rho * t.sin()];
            let grad = field
                .sample_gradient(p[0], p[1])
                .map_err(|_| IndexError::InvalidCircle)?;
            let mag = grad[0].hypot(grad[1]);
            gmin = gmin.min(mag);
            gmax = gmax.max(mag);
            angles.push(grad[1].atan2(grad[0]));
        }
        if gmin < 1e-3 * gmax {
            return Err(IndexError::GradientTooSmallOnCircle);
        }
        let mut total = 0.0f64;
        let mut ok = true;
        for k in 0..n {
            let mut d = angles[(k + 1) % n] - angles[k];
            while d > PI {
                d -= 2.0 * PI;
            }
            while d <= -PI {
                d += 2.0 * PI;
            }
            if d.abs() > PI / 2.0 {
                ok = false;
                break;
            }
            total += d;
        }
        if ok {
            return Ok((total / (2.0 * PI)).round() as i32);
        }
    }
    Err(IndexError::UnderSampled)
}

/// Default index-circle radius: max(4h, eps/2) near the hole, 4h elsewhere.
fn default_rho(field: &Field, x: [f64; 2]) -> f64 {
    let g = field.grid();
    let base = 4.0 * g.h;
    match g.domain.hole() {
        Some((p, eps)) => {
            let d = (x[0] - p[0]).hypot(x[1] - p[1]);
            if d <= 2.0 * eps + 8.0 * g.h {
                base.max(eps / 2.0)
            } else {
                base
            }
        }
        None => base,
    }
}

/// Finds, refines and classifies all interior critical points at distance
/// ≥ `margin` from every boundary.
pub fn find_critical_points(field: &Field, margin: f64) -> Result<CritSet, CritError> {
    let g = field.grid();
    let h = g.h;
    if margin < 3.0 * h * (1.0 - 1e-12) {
        return Err(CritError::MarginTooSmall {
            margin,
            minimum: 3.0 * h,
        });
    }
    let grad_sup = field.gradient_sup();
    let grad_tol = GRAD_TOL_FACTOR * grad_sup;

    // nodal gradients by central differences (None where unavailable)
    let nx = g.nx;
    let ny = g.ny;
    let mut node_grad: Vec<Option<[f64; 2]>> = alloc::vec![None; g.len()];
    let values = field.values();
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let k = j * nx + i;
            if g.class_at(k) == NodeClass::Exterior {
                continue;
            }
            let (e, w, n, s) = (values[k + 1], values[k - 1], values[k + nx], values[k - nx]);
            if e.is_nan() || w.is_nan() || n.is_nan() || s.is_nan() {
                continue;
            }
            node_grad[k] = Some([(e - w) / (2.0 * h), (n - s) / (2.0 * h)]);
        }
    }

    let admissible = |x: f64, y: f64| g.domain.boundary_distance(x, y) >= margin;

    // coarse pass: cells whose corner gradients straddle zero in both
    // components
    let mut seeds: Vec<(usize, [f64; 2])> = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let ks = [
                j * nx + i,
                j * nx + i + 1,
                (j + 1) * nx + i,
                (j + 1) * nx + i + 1,
            ];
            let mut gs = [[0.0f64; 2]; 4];
            let mut valid = true;
            for (q, &k) in ks.iter().enumerate() {
                match node_grad[k] {
                    Some(v) => gs[q] = v,
                    None => {
                        valid = false;
                        break;
                    }
                }
            }
            if !valid {
                continue;
            }
            let c = g.node_pos(i, j);
            if !admissible(c[0], c[1])
                || !admissible(c[0] + h, c[1])
                || !admissible(c[0], c[1] + h)
                || !admissible(c[0] + h, c[1] + h)
            {
                continue;
            }
            let straddles = |comp: usize| {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for q in gs.iter() {
                    lo = lo.min(q[comp]);
                    hi = hi.max(q[comp]);
                }
                lo <= 0.0 && hi >= 0.0
            };
            if straddles(0) && straddles(1) {
                seeds.push((j * nx + i, [c[0] + 0.5 * h, c[1] + 0.5 * h]));
            }
        }
    }

    // Newton refinement on the biquadratic gradient
    let mut dropped = 0usize;
    let mut refined: Vec<(usize, [f64; 2], f64)> = Vec::new();
    'seed: for &(cell, start) in &seeds {
        let mut x = start;
        for _ in 0..NEWTON_MAX_STEPS {
            let (_, grad, hess) = match field.sample_all(x[0], x[1]) {
                Ok(v) => v,
                Err(_) => {
                    dropped += 1;
                    continue 'seed;
                }
            };
            let gn = grad[0].hypot(grad[1]);
            if gn <= grad_tol {
                if admissible(x[0], x[1]) {
                    refined.push((cell, x, gn));
                } else {
                    dropped += 1;
                }
                continue 'seed;
            }
            let det = hess[0] * hess[2] - hess[1] * hess[1];
            let scale = hessian_spectral_radius(&hess);
            let mut a = hess[0];
            let mut c = hess[2];
            if det.abs() < 1e-14 * scale * scale {
                // regularize a near-singular Hessian
                let mu = 1e-7 * scale.max(1e-300);
                a += mu;
                c += mu;
            }
            let det_r = a * c - hess[1] * hess[1];
            if det_r == 0.0 {
                dropped += 1;
                continue 'seed;
            }
            let mut dx = -(c * grad[0] - hess[1] * grad[1]) / det_r;
            let mut dy = -(a * grad[1] - hess[1] * grad[0]) / det_r;
            let dn = dx.hypot(dy);
            if dn > h {
                dx *= h / dn;
                dy *= h / dn;
            }
            x = [x[0] + dx, x[1] + dy];
            if !admissible(x[0], x[1]) {
                dropped += 1;
                continue 'seed;
            }
        }
        dropped += 1;
    }

    // deduplicate within 2h, keeping the smallest gradient norm
    refined.sort_by(|a, b| a.0.cmp(&b.0));
    let dedup_r = DEDUP_FACTOR * h;
    let mut kept: Vec<([f64; 2], f64)> = Vec::new();
    for &(_, x, gn) in &refined {
        let mut merged = false;
        for k in kept.iter_mut() {
            if (k.0[0] - x[0]).hypot(k.0[1] - x[1]) < dedup_r {
                if gn < k.1 {
                    *k = (x, gn);
                }
                merged = true;
                break;
            }
        }
        if !merged {
            kept.push((x, gn));
        }
    }

    // classify and index
    let mut points: Vec<CriticalPoint> = Vec::new();
    for &(x, gn) in &kept {
        let (value, _, hess) = match field.sample_all(x[0], x[1]) {
            Ok(v) => v,
            Err(_) => {
                dropped += 1;
                continue;
            }
        };
        let class = classify_hessian(&hess);
        let rho = default_rho(field, x);
        let (index, index_error) = match index_of(field, x, rho) {
            Ok(i) => (Some(i), None),
            Err(e) => (None, Some(e)),
        };
        points.push(CriticalPoint {
            location: x,
            value,
            grad_norm: gn,
            hessian: hess,
            class,
            index,
            index_error,
        });
    }

    // ring bookkeeping: many azimuthally spread index-degenerate candidates
    // at a common radius from the hole centre
    let ring = detect_ring(g.domain.hole().map(|(p, _)| p), &points, h);
    if let Some(ref r) = ring {
        points.retain(|p| {
            let keep = match p.index_error {
                Some(IndexError::GradientTooSmallOnCircle) | Some(IndexError::UnderSampled) => {
                    let d = (p.location[0] - r.center[0]).hypot(p.location[1] - r.center[1]);
                    (d - r.mean_radius).abs() > 3.0 * h
                }
                _ => true,
            };
            keep
        });
    }

    points.sort_by(|a, b| {
        (a.location[0], a.location[1])
            .partial_cmp(&(b.location[0], b.location[1]))
            .unwrap_or(core::cmp::Ordering::Equal)
    });

    Ok(CritSet {
        points,
        ring,
        margin,
        dropped_seeds: dropped,
        gradient_sup: grad_sup,
    })
}

fn detect_ring(
    hole_center: Option<[f64; 2]>,
    points: &[CriticalPoint],
    h: f64,
) -> Option<RingDiagnostic> {
    let center = hole_center?;
    let mut members: Vec<(f64, f64, IndexError)> = Vec::new(); // (radius, angle, kind)
    for p in points {
        if let Some(e) = p.index_error {
            if matches!(
                e,
                IndexError::GradientTooSmallOnCircle | IndexError::UnderSampled
            ) {
                let dx = p.location[0] - center[0];
                let dy = p.location[1] - center[1];
                members.push((dx.hypot(dy), dy.atan2(dx), e));
            }
        }
    }
    if members.len() < RING_MIN_MEMBERS {
        return None;
    }
    // common radius: take the median and keep members within 3h of it
    let mut radii: Vec<f64> = members.iter().map(|m| m.0).collect();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    let median = radii[radii.len() / 2];
    members.retain(|m| (m.0 - median).abs() <= 3.0 * h);
    if members.len() < RING_MIN_MEMBERS {
        return None;
    }
    let mut angles: Vec<f64> = members.iter().map(|m| m.1).collect();
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    let mut max_gap = 2.0 * PI + angles[0] - angles[angles.len() - 1];
    for w in angles.windows(2) {
        max_gap = max_gap.max(w[1] - w[0]);
    }
    if max_gap > RING_MAX_GAP {
        return None;
    }
    let mean_radius = members.iter().map(|m| m.0).sum::<f64>() / members.len() as f64;
    let spread = members
        .iter()
        .map(|m| (m.0 - mean_radius).abs())
        .fold(0.0f64, f64::max);
    let gradient_too_small = members
        .iter()
        .filter(|m| m.2 == IndexError::GradientTooSmallOnCircle)
        .count();
    Some(RingDiagnostic {
        center,
        mean_radius,
        radius_spread: spread,
        member_count: members.len(),
        gradient_too_small,
        under_sampled: members.len() - gradient_too_small,
        max_gap,
    })
}

/// Outcome of the degree-sum audit.
#[derive(Debug, Clone)]
pub struct AuditRecord {
    pub index_sum: i64,
    pub target: i64,
    pub pass: bool,
    pub probes_per_boundary: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AuditError {
    /// ∇u does not point strictly inward at some boundary probe; the audit
    /// is inapplicable, not failed.
    BoundaryConditionViolated { probe: [f64; 2] },
    /// A probe point could not be sampled.
    Unprobeable { probe: [f64; 2] },
    /// Some detected point has no winding index.
    UnindexedPoint { point: [f64; 2] },
    /// A degenerate ring was detected; the sum is not defined pointwise.
    DegenerateRing,
}

impl fmt::Display for AuditError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AuditError::BoundaryConditionViolated { probe } => write!(
                f,
                "gradient not inward-pointing near ({}, {})",
                probe[0], probe[1]
            ),
            AuditError::Unprobeable { probe } => {
                write!(f, "cannot sample near boundary at ({}, {})", probe[0], probe[1])
            }
            AuditError::UnindexedPoint { point } => {
                write!(f, "point ({}, {}) has no winding index", point[0], point[1])
            }
            AuditError::DegenerateRing => write!(f, "degenerate critical ring present"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for AuditError {}

/// Checks that the gradient points strictly inward on probe rings just
/// inside each boundary and compares Σ indices against the Euler
/// characteristic of the domain (1 for a plain disc/ellipse, 0 punctured).
pub fn poincare_hopf_audit(cs: &CritSet, field: &Field) -> Result<AuditRecord, AuditError> {
    let g = field.grid();
    let domain: &Domain = &g.domain;
    let probes = 128usize;
    let offset = 3.0 * g.h;

    let check_probe = |x: [f64; 2], outward: [f64; 2]| -> Result<(), AuditError> {
        let grad = field
            .sample_gradient(x[0], x[1])
            .map_err(|_| AuditError::Unprobeable { probe: x })?;
        let vn = grad[0] * outward[0] + grad[1] * outward[1];
        if vn >= 0.0 {
            return Err(AuditError::BoundaryConditionViolated { probe: x });
        }
        Ok(())
    };

    for k in 0..probes {
        let t = 2.0 * PI * k as f64 / probes as f64;
        let (p, nrm) = domain.outer().boundary_point(t);
        let x = [p[0] - offset * nrm[0], p[1] - offset * nrm[1]];
        check_probe(x, nrm)?;
    }
    if let Some((p, eps)) = domain.hole() {
        for k in 0..probes {
            let t = 2.0 * PI * k as f64 / probes as f64;
            let r = eps + offset;
            let x = [p[0] + r * t.cos(), p[1] + r * t.sin()];
            // outward normal of the domain points toward the hole centre
            let outward = [-t.cos(), -t.sin()];
            check_probe(x, outward)?;
        }
    }

    if cs.ring.is_some() {
        return Err(AuditError::DegenerateRing);
    }
    let mut sum = 0i64;
    for p in &cs.points {
        match p.index {
            Some(i) => sum += i as i64,
            None => {
                return Err(AuditError::UnindexedPoint { point: p.location });
            }
        }
    }
    let target = match domain {
        Domain::Plain(_) => 1,
        Domain::Punctured(_) => 0,
    };
    Ok(AuditRecord {
        index_sum: sum,
        target,
        pass: sum == target,
        probes_per_boundary: probes,
    })
}

/// Pairing of a perturbed critical set against a base set.
#[derive(Debug, Clone)]
pub struct Pairing {
    /// (base index, perturbed index)
    pub pairs: Vec<(usize, usize)>,
    /// base points with no partner within the radius
    pub unmatched_base: Vec<usize>,
    /// perturbed points not claimed by any base point
    pub extras: Vec<usize>,
}

/// Pairs each base point with the unique perturbed point within `d`.
pub fn persistence_match(
    cs_eps: &CritSet,
    cs_base: &CritSet,
    d: f64,
) -> Result<Pairing, CritError> {
    for (bi, b) in cs_base.points.iter().enumerate() {
        if b.class == CritClass::Degenerate {
            return Err(CritError::BaseDegenerate { base: bi });
        }
    }
    let mut claimed = alloc::vec![false; cs_eps.points.len()];
    let mut pairs = Vec::new();
    let mut unmatched = Vec::new();
    for (bi, b) in cs_base.points.iter().enumerate() {
        let mut found: Option<usize> = None;
        for (ei, e) in cs_eps.points.iter().enumerate() {
            let dist = (b.location[0] - e.location[0]).hypot(b.location[1] - e.location[1]);
            if dist <= d {
                if found.is_some() {
                    return Err(CritError::PairingAmbiguous { base: bi });
                }
                found = Some(ei);
            }
        }
        match found {
            Some(ei) => {
                claimed[ei] = true;
                pairs.push((bi, ei));
            }
            None => unmatched.push(bi),
        }
    }
    let extras = (0..cs_eps.points.len()).filter(|&e| !claimed[e]).collect();
    Ok(Pairing {
        pairs,
        unmatched_base: unmatched,
        extras,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::{EllipticSolver, Field};
    use crate::geometry::{classify, Domain, LevelSetDomain, PuncturedDomain};
    use alloc::sync::Arc;

    fn disc_grid(h: f64) -> Arc<crate::geometry::Grid2D> {
        Arc::new(classify(Domain::Plain(LevelSetDomain::Disc { r: 1.0 }), h).unwrap())
    }

    #[test]
    fn paraboloid_min_detected() {
        let g = disc_grid(1.0 / 32.0);
        let f = Field::from_fn(g, |x, y| x * x + y * y);
        let cs = find_critical_points(&f, 0.1).unwrap();
        assert_eq!(cs.points.len(), 1);
        let p = &cs.points[0];
        assert!(p.location[0].abs() < 1e-9 && p.location[1].abs() < 1e-9);
        assert_eq!(p.class, CritClass::Min);
        assert_eq!(p.index, Some(1));
    }

    #[test]
    fn saddle_detected_with_negative_index() {
        let g = disc_grid(1.0 / 32.0);
        let f = Field::from_fn(g, |x, y| x * x - y * y);
        let cs = find_critical_points(&f, 0.1).unwrap();
        assert_eq!(cs.points.len(), 1);
        assert_eq!(cs.points[0].class, CritClass::Saddle);
        assert_eq!(cs.points[0].index, Some(-1));
    }

    #[test]
    fn winding_numbers_on_synthetic_fields() {
        let g = disc_grid(1.0 / 32.0);
        let fmin = Field::from_fn(g.clone(), |x, y| x * x + y * y);
        assert_eq!(index_of(&fmin, [0.0, 0.0], 0.1).unwrap(), 1);
        let fsad = Field::from_fn(g.clone(), |x, y| x * x - y * y);
        assert_eq!(index_of(&fsad, [0.0, 0.0], 0.1).unwrap(), -1);
        let fmax = Field::from_fn(g, |x, y| -(x * x) - y * y * 1.5);
        assert_eq!(index_of(&fmax, [0.0, 0.0], 0.1).unwrap(), 1);
    }

    #[test]
    fn margin_precondition() {
        let g = disc_grid(1.0 / 16.0);
        let f = Field::from_fn(g, |x, y| x * x + y * y);
        assert!(matches!(
            find_critical_points(&f, 0.1).unwrap_err(),
            CritError::MarginTooSmall { .. }
        ));
    }

    #[test]
    fn audit_on_plain_disc_torsion() {
        let g = disc_grid(1.0 / 64.0);
        let s = EllipticSolver::new(g);
        let rhs = s.grid().eval(|_, _| 1.0);
        let u = s.solve_poisson(&rhs).unwrap();
        let cs = find_critical_points(&u, 3.0 / 64.0).unwrap();
        assert_eq!(cs.points.len(), 1);
        assert_eq!(cs.points[0].class, CritClass::Max);
        let audit = poincare_hopf_audit(&cs, &u).unwrap();
        assert_eq!(audit.index_sum, 1);
        assert!(audit.pass);
    }

    #[test]
    fn audit_inapplicable_for_outward_gradient() {
        let g = disc_grid(1.0 / 32.0);
        let f = Field::from_fn(g, |x, y| x * x - y * y);
        let cs = find_critical_points(&f, 0.1).unwrap();
        match poincare_hopf_audit(&cs, &f) {
            Err(AuditError::BoundaryConditionViolated { .. }) => {}
            other => panic!("expected boundary violation, got {other:?}"),
        }
    }

    #[test]
    fn persistence_pairs_and_extras() {
        let g = disc_grid(1.0 / 32.0);
        let base = Field::from_fn(g.clone(), |x, y| -(x * x) - y * y);
        let cs0 = find_critical_points(&base, 0.1).unwrap();
        // perturbed: extremum shifts, a saddle appears further out
        let pert = Field::from_fn(g, |x, y| {
            let dx = x - 0.05;
            -(dx * dx) - y * y + 0.4 * ((x - 0.5) * (x - 0.5) + y * y + 0.05).ln() * 0.05
        });
        let cs1 = find_critical_points(&pert, 0.1).unwrap();
        let pairing = persistence_match(&cs1, &cs0, 0.2).unwrap();
        assert_eq!(pairing.pairs.len(), 1);
        assert_eq!(
            pairing.extras.len() + pairing.pairs.len(),
            cs1.points.len()
        );
    }

    #[test]
    fn persistence_empty_base() {
        let g = disc_grid(1.0 / 32.0);
        let f = Field::from_fn(g.clone(), |x, y| x * x + y * y);
        let cs = find_critical_points(&f, 0.1).unwrap();
        let empty = CritSet {
            points: alloc::vec::Vec::new(),
            ring: None,
            margin: 0.1,
            dropped_seeds: 0,
            gradient_sup: 1.0,
        };
        let pairing = persistence_match(&cs, &empty, 0.2).unwrap();
        assert!(pairing.pairs.is_empty());
        assert_eq!(pairing.extras.len(), cs.points.len());
    }

    #[test]
    fn synthetic_ring_reported() {
        let pd =
            PuncturedDomain::new(LevelSetDomain::Disc { r: 1.0 }, [0.0, 0.0], 0.04).unwrap();
        let g = Arc::new(classify(Domain::Punctured(pd), 0.01).unwrap());
        // radial quartic with a degenerate max ring at r = 0.5
        let f = Field::from_fn(g, |x, y| {
            let r2 = x * x + y * y;
            1.0 - (r2 - 0.25) * (r2 - 0.25)
        });
        let cs = find_critical_points(&f, 0.03).unwrap();
        let ring = cs.ring.expect("ring diagnostic expected");
        assert!(ring.member_count >= 8, "members {}", ring.member_count);
        assert!((ring.mean_radius - 0.5).abs() < 0.02, "{}", ring.mean_radius);
        assert!(ring.max_gap <= PI / 2.0);
    }

    #[test]
    fn detector_recall_on_bump_field() {
        // quadratic bowl plus a Gaussian bump: three axis critical points
        let w = 0.25f64;
        let amp = 0.5f64;
        let field_fn = move |x: f64, y: f64| {
            let r2 = (x - 0.35) * (x - 0.35) + y * y;
            x * x + y * y + amp * (-r2 / (w * w)).exp()
        };
        let gx = move |x: f64| {
            2.0 * x - amp * 2.0 * (x - 0.35) / (w * w)
                * (-((x - 0.35) * (x - 0.35)) / (w * w)).exp()
        };
        // oracle roots on the axis by bisection
        let mut roots = alloc::vec::Vec::new();
        let mut prev = gx(-0.9);
        let mut xprev = -0.9;
        let mut x = -0.9;
        while x < 0.9 {
            x += 1e-3;
            let v = gx(x);
            if prev.signum() != v.signum() {
                let mut lo = xprev;
                let mut hi = x;
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if gx(mid).signum() == gx(lo).signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            prev = v;
            xprev = x;
        }
        assert_eq!(roots.len(), 3, "oracle must see three axis roots");
        let h = w / 8.0 / 1.5; // below bump-width/8
        let g = disc_grid(h);
        let f = Field::from_fn(g, field_fn);
        let cs = find_critical_points(&f, 3.0 * h).unwrap();
        for r in &roots {
            let hit = cs
                .points
                .iter()
                .any(|p| (p.location[0] - r).hypot(p.location[1]) < 2.0 * h);
            assert!(hit, "root at x = {r} not detected");
        }
        assert_eq!(cs.points.len(), 3);
    }

    #[test]
    fn symmetric_fields_give_symmetric_points() {
        let g = disc_grid(1.0 / 48.0);
        let f = Field::from_fn(g.clone(), |x, y| {
            // symmetric about the x-axis
            -(x - 0.2) * (x - 0.2) - 0.8 * y * y
        });
        let cs = find_critical_points(&f, 0.1).unwrap();
        for p in &cs.points {
            assert!(p.location[1].abs() <= 2.0 * g.h);
        }
    }

    #[test]
    fn winding_hessian_consistency() {
        let g = disc_grid(1.0 / 48.0);
        for f in [
            Field::from_fn(g.clone(), |x, y| x * x + 2.0 * y * y + 0.3 * x * y),
            Field::from_fn(g.clone(), |x, y| -(x * x) - 2.0 * y * y + 0.3 * x * y),
            Field::from_fn(g.clone(), |x, y| x * x - 2.0 * y * y + 0.5 * x * y),
        ] {
            let cs = find_critical_points(&f, 0.1).unwrap();
            assert_eq!(cs.points.len(), 1);
            let p = &cs.points[0];
            let expected = match p.class {
                CritClass::Max | CritClass::Min => 1,
                CritClass::Saddle => -1,
                CritClass::Degenerate => continue,
            };
            assert_eq!(p.index, Some(expected));
        }
    }
}
