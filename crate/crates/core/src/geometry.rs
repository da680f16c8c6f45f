//! Level-set domains, punctured domains and the classified finite-difference
//! grid.
//!
//! A grid node is `Exterior` iff the outer level function is ≥ 0 there or the
//! node lies inside the hole. Non-exterior nodes whose four axis neighbours
//! are all non-exterior are `Interior`; the rest are `BoundaryCut` and carry
//! the fraction of a grid spacing at which each cut stencil arm meets the
//! boundary (found by bisection on the level function).

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use crate::fmath::FloatExt;

/// Planar domain given as the negative set of an analytic level function.
#[derive(Debug, Clone, PartialEq)]
pub enum LevelSetDomain {
    /// Disc of radius `r` centred at the origin; φ(x) = |x| − r.
    Disc { r: f64 },
    /// Ellipse with semi-axes `a`, `b`; φ(x) = sqrt((x/a)² + (y/b)²) − 1.
    Ellipse { a: f64, b: f64 },
    /// Outer boundary of an annulus, i.e. a disc of radius `r`; intended to
    /// be combined with a centred hole.
    AnnulusOuter { r: f64 },
}

impl LevelSetDomain {
    /// Signed indicator: negative inside, zero on the boundary, positive
    /// outside.
    pub fn phi(&self, x: f64, y: f64) -> f64 {
        match *self {
            LevelSetDomain::Disc { r } | LevelSetDomain::AnnulusOuter { r } => x.hypot(y) - r,
            LevelSetDomain::Ellipse { a, b } => {
                let qx = x / a;
                let qy = y / b;
                qx.hypot(qy) - 1.0
            }
        }
    }

    /// Half-extents of the bounding box, centred at the origin.
    pub fn half_extents(&self) -> [f64; 2] {
        match *self {
            LevelSetDomain::Disc { r } | LevelSetDomain::AnnulusOuter { r } => [r, r],
            LevelSetDomain::Ellipse { a, b } => [a, b],
        }
    }

    /// Distance to the boundary, exact for circles and a first-order level
    /// set estimate for ellipses. Positive inside.
    pub fn boundary_distance(&self, x: f64, y: f64) -> f64 {
        match *self {
            LevelSetDomain::Disc { r } | LevelSetDomain::AnnulusOuter { r } => r - x.hypot(y),
            LevelSetDomain::Ellipse { a, b } => {
                let q = (x / a).hypot(y / b);
                if q == 0.0 {
                    return a.min(b);
                }
                let gx = x / (a * a);
                let gy = y / (b * b);
                let grad = gx.hypot(gy) / q;
                (1.0 - q) * q / (grad * q).max(1e-300)
            }
        }
    }

    /// Point on the boundary at parameter `t` ∈ [0, 2π) together with the
    /// outward unit normal.
    pub fn boundary_point(&self, t: f64) -> ([f64; 2], [f64; 2]) {
        match *self {
            LevelSetDomain::Disc { r } | LevelSetDomain::AnnulusOuter { r } => {
                let (s, c) = (t.sin(), t.cos());
                ([r * c, r * s], [c, s])
            }
            LevelSetDomain::Ellipse { a, b } => {
                let (s, c) = (t.sin(), t.cos());
                let p = [a * c, b * s];
                let g = [c / a, s / b];
                let n = g[0].hypot(g[1]);
                (p, [g[0] / n, g[1] / n])
            }
        }
    }
}

/// Outer domain with a circular hole `B(p, eps)` removed.
#[derive(Debug, Clone, PartialEq)]
pub struct PuncturedDomain {
    pub outer: LevelSetDomain,
    pub p: [f64; 2],
    pub eps: f64,
}

impl PuncturedDomain {
    /// Builds a punctured domain, checking that the hole sits well inside the
    /// outer boundary: φ_outer must be negative on the whole circle
    /// |x − p| = 3·eps.
    pub fn new(outer: LevelSetDomain, p: [f64; 2], eps: f64) -> Result<Self, GeometryError> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(GeometryError::InvalidHole);
        }
        let m = 256;
        for k in 0..m {
            let t = 2.0 * core::f64::consts::PI * (k as f64) / (m as f64);
            let x = p[0] + 3.0 * eps * t.cos();
            let y = p[1] + 3.0 * eps * t.sin();
            if outer.phi(x, y) >= 0.0 {
                return Err(GeometryError::HoleTooCloseToBoundary);
            }
        }
        Ok(PuncturedDomain { outer, p, eps })
    }
}

/// Either a plain level-set domain or a punctured one.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Plain(LevelSetDomain),
    Punctured(PuncturedDomain),
}

impl Domain {
    pub fn outer(&self) -> &LevelSetDomain {
        match self {
            Domain::Plain(d) => d,
            Domain::Punctured(p) => &p.outer,
        }
    }

    /// Hole centre and radius, if any.
    pub fn hole(&self) -> Option<([f64; 2], f64)> {
        match self {
            Domain::Plain(_) => None,
            Domain::Punctured(p) => Some((p.p, p.eps)),
        }
    }

    /// Combined level function: negative exactly on the computational domain.
    pub fn phi(&self, x: f64, y: f64) -> f64 {
        match self {
            Domain::Plain(d) => d.phi(x, y),
            Domain::Punctured(p) => {
                let outer = p.outer.phi(x, y);
                let hole = p.eps - (x - p.p[0]).hypot(y - p.p[1]);
                outer.max(hole)
            }
        }
    }

    /// Distance to the nearest boundary (outer or hole), positive inside.
    /// Exact for circles, level-set estimate for ellipses.
    pub fn boundary_distance(&self, x: f64, y: f64) -> f64 {
        match self {
            Domain::Plain(d) => d.boundary_distance(x, y),
            Domain::Punctured(p) => {
                let outer = p.outer.boundary_distance(x, y);
                let hole = (x - p.p[0]).hypot(y - p.p[1]) - p.eps;
                outer.min(hole)
            }
        }
    }
}

/// Node classification on the uniform grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum NodeClass {
    Interior,
    BoundaryCut,
    Exterior,
}

/// Which boundary a cut stencil arm lands on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum ArmBoundary {
    None,
    Outer,
    Hole,
}

/// Arm data for one `BoundaryCut` node. Fraction order is E, W, N, S;
/// uncut arms carry fraction 1 and `ArmBoundary::None`.
#[derive(Debug, Clone, Copy)]
pub struct CutArms {
    pub node: u32,
    pub frac: [f64; 4],
    pub hits: [ArmBoundary; 4],
}

/// Axis neighbour offsets in arm order E, W, N, S.
pub const ARM_DIRS: [[i64; 2]; 4] = [[1, 0], [-1, 0], [0, 1], [0, -1]];

/// Classified uniform grid over a domain. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Grid2D {
    pub domain: Domain,
    pub h: f64,
    pub origin: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    class: Vec<NodeClass>,
    /// Index into `cuts` for BoundaryCut nodes, `u32::MAX` otherwise.
    cut_of_node: Vec<u32>,
    cuts: Vec<CutArms>,
    interior_count: usize,
}

/// Errors from domain construction and grid classification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GeometryError {
    /// Hole radius not positive or not finite.
    InvalidHole,
    /// The safety circle |x − p| = 3·eps leaves the outer domain.
    HoleTooCloseToBoundary,
    /// Grid spacing does not resolve the hole (needs h ≤ eps/4).
    HoleUnresolved,
    /// No interior node at this spacing.
    EmptyInterior,
    /// Spacing not positive or not finite.
    InvalidSpacing,
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::InvalidHole => write!(f, "hole radius must be positive and finite"),
            GeometryError::HoleTooCloseToBoundary => {
                write!(f, "hole must keep a 2*eps margin from the outer boundary")
            }
            GeometryError::HoleUnresolved => {
                write!(f, "grid spacing too coarse for the hole (needs h <= eps/4)")
            }
            GeometryError::EmptyInterior => write!(f, "grid has no interior node"),
            GeometryError::InvalidSpacing => write!(f, "grid spacing must be positive and finite"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GeometryError {}

/// Classifies a uniform grid of spacing `h` over `domain`.
///
/// The node lattice is symmetric about the origin (node coordinates are
/// integer multiples of `h`), padded one cell beyond the bounding box, so
/// refining `h` keeps node locations nested.
pub fn classify(domain: Domain, h: f64) -> Result<Grid2D, GeometryError> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(GeometryError::InvalidSpacing);
    }
    if let Some((_, eps)) = domain.hole() {
        if h > eps / 4.0 * (1.0 + 1e-12) {
            return Err(GeometryError::HoleUnresolved);
        }
    }
    let ext = domain.outer().half_extents();
    let kx = (ext[0] / h).ceil() as i64 + 1;
    let ky = (ext[1] / h).ceil() as i64 + 1;
    let nx = (2 * kx + 1) as usize;
    let ny = (2 * ky + 1) as usize;
    let origin = [-(kx as f64) * h, -(ky as f64) * h];

    let node_x = |i: usize| origin[0] + i as f64 * h;
    let node_y = |j: usize| origin[1] + j as f64 * h;

    let mut class = vec![NodeClass::Exterior; nx * ny];
    for j in 0..ny {
        let y = node_y(j);
        for i in 0..nx {
            if domain.phi(node_x(i), y) < 0.0 {
                class[j * nx + i] = NodeClass::Interior; // provisional
            }
        }
    }

    let mut cuts: Vec<CutArms> = Vec::new();
    let mut cut_of_node = vec![u32::MAX; nx * ny];
    let mut interior_count = 0usize;
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            if class[k] == NodeClass::Exterior {
                continue;
            }
            let mut frac = [1.0f64; 4];
            let mut hits = [ArmBoundary::None; 4];
            let mut any_cut = false;
            for (a, d) in ARM_DIRS.iter().enumerate() {
                let ni = i as i64 + d[0];
                let nj = j as i64 + d[1];
                let exterior_neighbour = ni < 0
                    || nj < 0
                    || ni >= nx as i64
                    || nj >= ny as i64
                    || class[nj as usize * nx + ni as usize] == NodeClass::Exterior;
                if exterior_neighbour {
                    any_cut = true;
                    let x0 = node_x(i);
                    let y0 = node_y(j);
                    let (theta, hit) = arm_fraction(&domain, x0, y0, d[0] as f64, d[1] as f64, h);
                    frac[a] = theta;
                    hits[a] = hit;
                }
            }
            if any_cut {
                class[k] = NodeClass::BoundaryCut;
                cut_of_node[k] = cuts.len() as u32;
                cuts.push(CutArms {
                    node: k as u32,
                    frac,
                    hits,
                });
            } else {
                interior_count += 1;
            }
        }
    }
    if interior_count == 0 {
        return Err(GeometryError::EmptyInterior);
    }
    Ok(Grid2D {
        domain,
        h,
        origin,
        nx,
        ny,
        class,
        cut_of_node,
        cuts,
        interior_count,
    })
}

/// Bisection for the boundary crossing along one stencil arm. The node is
/// strictly inside (φ < 0) and the far end is outside or on the boundary
/// (φ ≥ 0); returns the fraction of `h` to the crossing and the boundary hit.
fn arm_fraction(domain: &Domain, x0: f64, y0: f64, dx: f64, dy: f64, h: f64) -> (f64, ArmBoundary) {
    let phi_at = |t: f64| domain.phi(x0 + t * h * dx, y0 + t * h * dy);
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    // |hi - lo| falls below 1e-12 after 40 halvings; fixed count keeps the
    // result bit-deterministic.
    for _ in 0..41 {
        let mid = 0.5 * (lo + hi);
        if phi_at(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    let cx = x0 + theta * h * dx;
    let cy = y0 + theta * h * dy;
    let hit = match domain.hole() {
        Some((p, eps)) => {
            let d_hole = ((cx - p[0]).hypot(cy - p[1]) - eps).abs();
            let d_outer = domain.outer().phi(cx, cy).abs();
            if d_hole < d_outer {
                ArmBoundary::Hole
            } else {
                ArmBoundary::Outer
            }
        }
        None => ArmBoundary::Outer,
    };
    (theta.max(f64::MIN_POSITIVE), hit)
}

impl Grid2D {
    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn node_pos(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + i as f64 * self.h,
            self.origin[1] + j as f64 * self.h,
        ]
    }

    pub fn class(&self, i: usize, j: usize) -> NodeClass {
        self.class[j * self.nx + i]
    }

    pub fn class_at(&self, k: usize) -> NodeClass {
        self.class[k]
    }

    pub fn classes(&self) -> &[NodeClass] {
        &self.class
    }

    pub fn cut_arms(&self) -> &[CutArms] {
        &self.cuts
    }

    pub fn cut_arms_of(&self, k: usize) -> Option<&CutArms> {
        let c = self.cut_of_node[k];
        if c == u32::MAX {
            None
        } else {
            Some(&self.cuts[c as usize])
        }
    }

    /// Number of strictly interior nodes.
    pub fn interior_count(&self) -> usize {
        self.interior_count
    }

    /// Number of solver unknowns (interior + boundary-cut nodes).
    pub fn unknown_count(&self) -> usize {
        self.interior_count + self.cuts.len()
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Nearest node indices to a physical point (clamped to the grid).
    pub fn nearest_node(&self, x: f64, y: f64) -> (usize, usize) {
        let fi = ((x - self.origin[0]) / self.h).round();
        let fj = ((y - self.origin[1]) / self.h).round();
        let i = fi.max(0.0).min((self.nx - 1) as f64) as usize;
        let j = fj.max(0.0).min((self.ny - 1) as f64) as usize;
        (i, j)
    }

    /// Evaluates a function at every non-exterior node; exterior slots are 0.
    pub fn eval<F: Fn(f64, f64) -> f64>(&self, f: F) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for j in 0..self.ny {
            for i in 0..self.nx {
                let k = self.node_index(i, j);
                if self.class[k] != NodeClass::Exterior {
                    let p = self.node_pos(i, j);
                    out[k] = f(p[0], p[1]);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc(r: f64) -> Domain {
        Domain::Plain(LevelSetDomain::Disc { r })
    }

    fn punctured_disc(r: f64, p: [f64; 2], eps: f64) -> Domain {
        Domain::Punctured(PuncturedDomain::new(LevelSetDomain::Disc { r }, p, eps).unwrap())
    }

    #[test]
    fn disc_phi_is_exact() {
        let d = LevelSetDomain::Disc { r: 1.0 };
        assert_eq!(d.phi(0.0, 0.0), -1.0);
        assert_eq!(d.phi(1.0, 0.0), 0.0);
        assert_eq!(d.phi(0.6, 0.8), 0.0);
        assert!(d.phi(2.0, 0.0) > 0.0);
    }

    #[test]
    fn coarse_disc_classification() {
        let g = classify(disc(1.0), 0.5).unwrap();
        assert!(g.interior_count() >= 1);
        // nodes on |x| = 1 satisfy phi = 0 and must be exterior
        let (i, j) = g.nearest_node(1.0, 0.0);
        assert_eq!(g.class(i, j), NodeClass::Exterior);
        // centre is interior
        let (i, j) = g.nearest_node(0.0, 0.0);
        assert_eq!(g.class(i, j), NodeClass::Interior);
        for c in g.cut_arms() {
            for a in 0..4 {
                assert!(c.frac[a] > 0.0 && c.frac[a] <= 1.0);
            }
        }
    }

    #[test]
    fn punctured_classification_geometry() {
        let g = classify(punctured_disc(1.0, [0.3, 0.0], 0.01), 0.0025).unwrap();
        // no exterior node strictly between |x-P| = 0.02 and |x-P| = 0.05
        for j in 0..g.ny {
            for i in 0..g.nx {
                let p = g.node_pos(i, j);
                let d = (p[0] - 0.3).hypot(p[1]);
                if d > 0.02 && d < 0.05 {
                    assert_ne!(g.class(i, j), NodeClass::Exterior, "node at {:?}", p);
                }
            }
        }
    }

    #[test]
    fn hole_unresolved_rejected() {
        let err = classify(punctured_disc(1.0, [0.3, 0.0], 0.01), 0.01).unwrap_err();
        assert_eq!(err, GeometryError::HoleUnresolved);
    }

    #[test]
    fn hole_margin_enforced() {
        let err = PuncturedDomain::new(LevelSetDomain::Disc { r: 1.0 }, [0.9, 0.0], 0.05);
        assert_eq!(err.unwrap_err(), GeometryError::HoleTooCloseToBoundary);
    }

    #[test]
    fn interior_nodes_have_nonexterior_neighbours() {
        let g = classify(disc(1.0), 1.0 / 16.0).unwrap();
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                if g.class(i, j) == NodeClass::Interior {
                    for d in ARM_DIRS {
                        let c = g.class(
                            (i as i64 + d[0]) as usize,
                            (j as i64 + d[1]) as usize,
                        );
                        assert_ne!(c, NodeClass::Exterior);
                    }
                }
            }
        }
    }

    #[test]
    fn classify_is_deterministic() {
        let a = classify(punctured_disc(1.0, [0.3, 0.0], 0.04), 0.01).unwrap();
        let b = classify(punctured_disc(1.0, [0.3, 0.0], 0.04), 0.01).unwrap();
        assert_eq!(a.classes(), b.classes());
        for (ca, cb) in a.cut_arms().iter().zip(b.cut_arms()) {
            assert_eq!(ca.node, cb.node);
            assert_eq!(ca.frac, cb.frac);
        }
    }

    #[test]
    fn refinement_keeps_deep_nodes_interior() {
        let coarse = classify(disc(1.0), 1.0 / 16.0).unwrap();
        let fine = classify(disc(1.0), 1.0 / 32.0).unwrap();
        for j in 0..coarse.ny {
            for i in 0..coarse.nx {
                let p = coarse.node_pos(i, j);
                if coarse.class(i, j) == NodeClass::Interior
                    && coarse.domain.boundary_distance(p[0], p[1]) > 1.0 / 16.0
                {
                    let (fi, fj) = fine.nearest_node(p[0], p[1]);
                    assert_ne!(fine.class(fi, fj), NodeClass::Exterior);
                }
            }
        }
    }

    #[test]
    fn ellipse_unit_matches_disc() {
        let ge = classify(Domain::Plain(LevelSetDomain::Ellipse { a: 1.0, b: 1.0 }), 0.1).unwrap();
        let gd = classify(disc(1.0), 0.1).unwrap();
        assert_eq!(ge.classes(), gd.classes());
    }
}
