//! Analytic Green kernels and their numerical verification.
//!
//! `g0` is the Green function of the complement of the unit ball; its
//! formula coincides with the Poisson kernel of the ball and, for N = 2,
//! with the Green function of the unit disc itself. `psi_eps_verify` solves
//! the harmonic problem (1 on the outer boundary, 0 on the hole) and
//! compares it with the logarithmic correction built from the disc Green
//! function.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use crate::fmath::FloatExt;

use crate::elliptic::{EllipticSolver, SolveError};
use crate::geometry::{classify, Domain, GeometryError, LevelSetDomain, PuncturedDomain};
use crate::laplacian::BoundaryValues;

/// Unit-ball volumes for the supported dimensions.
#[derive(Debug, Clone, Copy)]
pub struct KernelContext {
    pub dim: usize,
    pub omega: f64,
}

impl KernelContext {
    pub fn new(dim: usize) -> Result<KernelContext, GreenError> {
        let omega = match dim {
            2 => PI,
            3 => 4.0 * PI / 3.0,
            4 => PI * PI / 2.0,
            5 => 8.0 * PI * PI / 15.0,
            6 => PI * PI * PI / 6.0,
            _ => return Err(GreenError::UnsupportedDimension(dim)),
        };
        Ok(KernelContext { dim, omega })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GreenError {
    /// Argument outside the kernel's domain of validity.
    DomainViolation,
    /// Adaptive quadrature failed to meet its internal tolerance.
    QuadratureFailure,
    UnsupportedDimension(usize),
    Solve(SolveError),
    Geometry(GeometryError),
}

impl fmt::Display for GreenError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GreenError::DomainViolation => write!(f, "argument outside the kernel domain"),
            GreenError::QuadratureFailure => write!(f, "quadrature failed its internal tolerance"),
            GreenError::UnsupportedDimension(n) => write!(f, "unsupported dimension {n}"),
            GreenError::Solve(e) => write!(f, "{e}"),
            GreenError::Geometry(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GreenError {}

impl From<SolveError> for GreenError {
    fn from(e: SolveError) -> Self {
        GreenError::Solve(e)
    }
}

impl From<GeometryError> for GreenError {
    fn from(e: GeometryError) -> Self {
        GreenError::Geometry(e)
    }
}

fn norm(v: &[f64]) -> f64 {
    let mut s = 0.0;
    for &x in v {
        s += x * x;
    }
    s.sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        let d = a[k] - b[k];
        s += d * d;
    }
    s.sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        s += a[k] * b[k];
    }
    s
}

/// |  |w| z − w/|w|  | computed in the symmetric form
/// sqrt(|w|²|z|² − 2⟨w,z⟩ + 1).
fn image_distance(w: &[f64], z: &[f64]) -> f64 {
    let w2 = dot(w, w);
    let z2 = dot(z, z);
    (w2 * z2 - 2.0 * dot(w, z) + 1.0).max(0.0).sqrt()
}

fn g0_formula(w: &[f64], z: &[f64], ctx: KernelContext) -> f64 {
    let r = dist(w, z);
    let k = image_distance(w, z);
    match ctx.dim {
        2 => (k.ln() - r.ln()) / (2.0 * PI),
        n => {
            let nn = n as f64;
            let c = 1.0 / (nn * (nn - 2.0) * ctx.omega);
            c * (r.powi(2 - n as i32) - k.powi(2 - n as i32))
        }
    }
}

/// Green function of the exterior of the unit ball in dimension `dim`.
///
/// Requires |w| ≥ 1, |z| ≥ 1 and w ≠ z; vanishes for |z| = 1.
pub fn g0(w: &[f64], z: &[f64], dim: usize) -> Result<f64, GreenError> {
    let ctx = KernelContext::new(dim)?;
    if w.len() != dim || z.len() != dim {
        return Err(GreenError::DomainViolation);
    }
    const TOL: f64 = 1e-12;
    if norm(w) < 1.0 - TOL || norm(z) < 1.0 - TOL {
        return Err(GreenError::DomainViolation);
    }
    if dist(w, z) == 0.0 {
        return Err(GreenError::DomainViolation);
    }
    Ok(g0_formula(w, z, ctx))
}

/// Normal derivative of `g0` on the unit sphere with ν_z = −z:
/// (1/(N ω_N)) (1 − |w|²) / |w − z|^N.
pub fn g0_normal_derivative(w: &[f64], z: &[f64], dim: usize) -> Result<f64, GreenError> {
    let ctx = KernelContext::new(dim)?;
    if w.len() != dim || z.len() != dim {
        return Err(GreenError::DomainViolation);
    }
    const TOL: f64 = 1e-12;
    if norm(w) <= 1.0 || (norm(z) - 1.0).abs() > TOL {
        return Err(GreenError::DomainViolation);
    }
    let w2 = dot(w, w);
    let r = dist(w, z);
    Ok((1.0 - w2) / (ctx.dim as f64 * ctx.omega * r.powi(dim as i32)))
}

/// Green function of the open unit disc (method of images); vanishes for
/// |y| = 1.
pub fn disc_green(x: &[f64; 2], y: &[f64; 2]) -> Result<f64, GreenError> {
    if norm(x) >= 1.0 + 1e-12 || norm(y) > 1.0 + 1e-12 {
        return Err(GreenError::DomainViolation);
    }
    if dist(x, y) == 0.0 {
        return Err(GreenError::DomainViolation);
    }
    Ok(g0_formula(x, y, KernelContext::new(2).expect("dim 2")))
}

/// Regular part H with G = S + H, S = −log|x−y|/2π. For the unit disc
/// H(x, y) = log(|y|·|x − y/|y|²|)/2π, negative at coincident interior
/// arguments.
pub fn disc_regular_part(x: &[f64; 2], y: &[f64; 2]) -> Result<f64, GreenError> {
    if norm(x) >= 1.0 + 1e-12 || norm(y) >= 1.0 + 1e-12 {
        return Err(GreenError::DomainViolation);
    }
    Ok(image_distance(x, y).ln() / (2.0 * PI))
}

/// Fundamental solution of −Δ.
pub fn fundamental_solution(x: &[f64], y: &[f64], dim: usize) -> Result<f64, GreenError> {
    let ctx = KernelContext::new(dim)?;
    let r = dist(x, y);
    if r == 0.0 {
        return Err(GreenError::DomainViolation);
    }
    Ok(match dim {
        2 => -r.ln() / (2.0 * PI),
        n => {
            let nn = n as f64;
            1.0 / (nn * (nn - 2.0) * ctx.omega * r.powi(n as i32 - 2))
        }
    })
}

/// Quadratic test polynomial c + l·x + xᵀQx with constant Laplacian.
#[derive(Debug, Clone)]
pub struct QuadPoly {
    pub c: f64,
    pub lin: Vec<f64>,
    /// Symmetric matrix, row-major dim×dim.
    pub quad: Vec<f64>,
}

impl QuadPoly {
    pub fn constant(dim: usize, c: f64) -> QuadPoly {
        QuadPoly {
            c,
            lin: vec![0.0; dim],
            quad: vec![0.0; dim * dim],
        }
    }

    pub fn coordinate(dim: usize, axis: usize) -> QuadPoly {
        let mut lin = vec![0.0; dim];
        lin[axis] = 1.0;
        QuadPoly {
            c: 0.0,
            lin,
            quad: vec![0.0; dim * dim],
        }
    }

    pub fn radius_squared(dim: usize) -> QuadPoly {
        let mut quad = vec![0.0; dim * dim];
        for i in 0..dim {
            quad[i * dim + i] = 1.0;
        }
        QuadPoly {
            c: 0.0,
            lin: vec![0.0; dim],
            quad,
        }
    }

    pub fn dim(&self) -> usize {
        self.lin.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        let mut v = self.c;
        for i in 0..d {
            v += self.lin[i] * x[i];
            for j in 0..d {
                v += x[i] * self.quad[i * d + j] * x[j];
            }
        }
        v
    }

    pub fn laplacian(&self) -> f64 {
        let d = self.dim();
        let mut tr = 0.0;
        for i in 0..d {
            tr += self.quad[i * d + i];
        }
        2.0 * tr
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1] (Newton on Legendre roots).
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        xs[i] = -x;
        ws[i] = w;
        xs[n - 1 - i] = x;
        ws[n - 1 - i] = w;
    }
    (xs, ws)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Distance from `s` (inside the unit ball) to the sphere along direction `d`.
fn ray_to_sphere(s: &[f64], d: &[f64]) -> f64 {
    let sd = dot(s, d);
    let s2 = dot(s, s);
    -sd + (sd * sd + 1.0 - s2).max(0.0).sqrt()
}

/// Surface integral of the Poisson kernel times `phi` over the unit sphere.
fn poisson_surface(phi: &QuadPoly, s: &[f64], ctx: KernelContext, level: usize) -> f64 {
    let dim = ctx.dim;
    let s2 = dot(s, s);
    let c = (1.0 - s2) / (dim as f64 * ctx.omega);
    match dim {
        2 => {
            let m = 256 << level;
            let mut acc = 0.0;
            for k in 0..m {
                let t = 2.0 * PI * k as f64 / m as f64;
                let y = [t.cos(), t.sin()];
                let r = dist(s, &y);
                acc += phi.eval(&y) / r.powi(2);
            }
            c * acc * (2.0 * PI / m as f64)
        }
        3 => {
            let nmu = 24 << level;
            let nph = 2 * nmu;
            let (mu, wmu) = gauss_legendre(nmu);
            let mut acc = 0.0;
            for i in 0..nmu {
                let st = (1.0 - mu[i] * mu[i]).max(0.0).sqrt();
                for k in 0..nph {
                    let ph = 2.0 * PI * k as f64 / nph as f64;
                    let y = [st * ph.cos(), st * ph.sin(), mu[i]];
                    let r = dist(s, &y);
                    acc += wmu[i] * phi.eval(&y) / r.powi(3);
                }
            }
            c * acc * (2.0 * PI / nph as f64)
        }
        _ => f64::NAN,
    }
}

/// Interior integral ∫ Δφ(y) G₀(s, y) dy over the unit ball, polar around `s`
/// with a τ² substitution that tames the kernel singularity.
fn poisson_volume(phi: &QuadPoly, s: &[f64], ctx: KernelContext, level: usize) -> f64 {
    let dim = ctx.dim;
    let lap = phi.laplacian();
    if lap == 0.0 {
        return 0.0;
    }
    let nr = 48 << level;
    let (xt, wt) = gauss_legendre(nr);
    let radial = |dirv: &[f64]| -> f64 {
        let rmax = ray_to_sphere(s, dirv);
        let mut acc = 0.0;
        let mut y = vec![0.0; dim];
        for q in 0..nr {
            let tau = 0.5 * (xt[q] + 1.0);
            let wq = 0.5 * wt[q];
            let t = rmax * tau * tau;
            for c in 0..dim {
                y[c] = s[c] + t * dirv[c];
            }
            let g = g0_formula(s, &y, ctx);
            // t^{dim-1} dt with t = R τ²  →  2 R^dim τ^{2 dim - 1} dτ
            let jac = 2.0 * rmax.powi(dim as i32) * tau.powi(2 * dim as i32 - 1);
            acc += wq * g * jac;
        }
        acc
    };
    match dim {
        2 => {
            let m = 256 << level;
            let mut acc = 0.0;
            for k in 0..m {
                let t = 2.0 * PI * k as f64 / m as f64;
                acc += radial(&[t.cos(), t.sin()]);
            }
            lap * acc * (2.0 * PI / m as f64)
        }
        3 => {
            let nmu = 16 << level;
            let nph = 2 * nmu;
            let (mu, wmu) = gauss_legendre(nmu);
            let mut acc = 0.0;
            for i in 0..nmu {
                let st = (1.0 - mu[i] * mu[i]).max(0.0).sqrt();
                for k in 0..nph {
                    let ph = 2.0 * PI * k as f64 / nph as f64;
                    acc += wmu[i] * radial(&[st * ph.cos(), st * ph.sin(), mu[i]]);
                }
            }
            lap * acc * (2.0 * PI / nph as f64)
        }
        _ => f64::NAN,
    }
}

/// Checks the Green representation identity
/// φ(s) = ∮ P(s,y) φ(y) dσ(y) − ∫ Δφ(y) G₀(s,y) dy
/// by quadrature; returns |lhs − rhs|.
pub fn poisson_identity_check(phi: &QuadPoly, s: &[f64], dim: usize) -> Result<f64, GreenError> {
    let ctx = KernelContext::new(dim)?;
    if dim != 2 && dim != 3 {
        return Err(GreenError::UnsupportedDimension(dim));
    }
    if phi.dim() != dim || s.len() != dim || norm(s) >= 1.0 {
        return Err(GreenError::DomainViolation);
    }
    let rhs_at = |level: usize| {
        poisson_surface(phi, s, ctx, level) - poisson_volume(phi, s, ctx, level)
    };
    let coarse = rhs_at(0);
    let fine = rhs_at(1);
    let scale = 1.0 + phi.eval(s).abs();
    if (fine - coarse).abs() > 1e-7 * scale {
        return Err(GreenError::QuadratureFailure);
    }
    Ok((phi.eval(s) - fine).abs())
}

/// Surface integral of the Poisson kernel alone (should be 1 for |s| < 1).
pub fn poisson_kernel_mass(s: &[f64], dim: usize) -> Result<f64, GreenError> {
    let ctx = KernelContext::new(dim)?;
    if dim != 2 && dim != 3 {
        return Err(GreenError::UnsupportedDimension(dim));
    }
    if s.len() != dim || norm(s) >= 1.0 {
        return Err(GreenError::DomainViolation);
    }
    let one = QuadPoly::constant(dim, 1.0);
    Ok(poisson_surface(&one, s, ctx, 1))
}

/// Result of one harmonic-correction verification.
#[derive(Debug, Clone)]
pub struct PsiVerifyReport {
    pub eps: f64,
    pub h: f64,
    /// max over the probe circle of |ψ_num − (1 + 2π G(x,P)/log ε)|
    pub max_deviation: f64,
    pub probe_radius: f64,
    pub probes: usize,
    pub linear_iterations: usize,
}

/// Solves the harmonic problem (Δψ = 0, ψ = 1 on the outer circle, ψ = 0 on
/// the hole) on the punctured unit disc and measures the deviation from the
/// predicted logarithmic correction on the circle |x − p| = 0.2.
pub fn psi_eps_verify(p: [f64; 2], eps: f64, h: f64) -> Result<PsiVerifyReport, GreenError> {
    let outer = LevelSetDomain::Disc { r: 1.0 };
    let pd = PuncturedDomain::new(outer, p, eps)?;
    let grid = classify(Domain::Punctured(pd), h)?;
    let solver = EllipticSolver::new(Arc::new(grid));
    let rhs = vec![0.0; solver.grid().len()];
    let psi = solver.solve_dirichlet(
        &rhs,
        BoundaryValues {
            outer: 1.0,
            hole: 0.0,
        },
    )?;
    let probe_radius = 0.2;
    let probes = 256;
    let log_eps = eps.ln();
    let mut max_dev = 0.0f64;
    for k in 0..probes {
        let t = 2.0 * PI * k as f64 / probes as f64;
        let x = [p[0] + probe_radius * t.cos(), p[1] + probe_radius * t.sin()];
        let num = psi
            .sample_value(x[0], x[1])
            .map_err(|_| GreenError::DomainViolation)?;
        let g = disc_green(&x, &p)?;
        let predicted = 1.0 + (2.0 * PI / log_eps) * g;
        max_dev = max_dev.max((num - predicted).abs());
    }
    Ok(PsiVerifyReport {
        eps,
        h,
        max_deviation: max_dev,
        probe_radius,
        probes,
        linear_iterations: psi.meta.linear_iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g0_vanishes_on_unit_sphere() {
        let w = [2.0, 0.0, 0.0];
        for z in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.6, 0.8, 0.0]] {
            let v = g0(&w, &z, 3).unwrap();
            assert!(v.abs() < 1e-14, "g0 = {v}");
        }
    }

    #[test]
    fn g0_hand_value_dim3() {
        let v = g0(&[2.0, 0.0, 0.0], &[3.0, 0.0, 0.0], 3).unwrap();
        let exact = (1.0 - 1.0 / 5.0) / (4.0 * PI);
        assert!((v - exact).abs() < 1e-15, "{v} vs {exact}");
    }

    #[test]
    fn g0_rejects_interior_points() {
        assert_eq!(
            g0(&[0.5, 0.0], &[2.0, 0.0], 2).unwrap_err(),
            GreenError::DomainViolation
        );
    }

    #[test]
    fn g0_normal_derivative_hand_value_dim2() {
        let v = g0_normal_derivative(&[2.0, 0.0], &[1.0, 0.0], 2).unwrap();
        let exact = (1.0 - 4.0) / (2.0 * PI);
        assert!((v - exact).abs() < 1e-15, "{v} vs {exact}");
    }

    #[test]
    fn g0_normal_derivative_vanishes_towards_sphere() {
        // |w| → 1⁺ away from z: the (1 - |w|²) factor kills the kernel
        let z = [0.0, 1.0];
        let v = g0_normal_derivative(&[1.0 + 1e-8, 0.0], &z, 2).unwrap();
        assert!(v.abs() < 1e-7, "{v}");
    }

    #[test]
    fn g0_normal_derivative_matches_directional_difference() {
        // directional difference of g0 along -z at the sphere
        let w = [1.7, 0.4, -0.2];
        let z = [0.6, -0.64, 0.48];
        let zn = norm(&z);
        let z1: Vec<f64> = z.iter().map(|v| v / zn).collect();
        let delta = 1e-6;
        let z_in: Vec<f64> = z1.iter().map(|v| v * (1.0 + delta)).collect();
        let fd = (g0(&w, &z_in, 3).unwrap() - 0.0) / delta;
        // ∂/∂ν with ν = -z equals -d/dt g0(w, (1+t)z) at t=0⁺ … directional
        let exact = g0_normal_derivative(&w, &z1, 3).unwrap();
        assert!(
            (fd - (-exact) * 1.0).abs() / exact.abs().max(1e-12) < 1e-4,
            "fd {fd} vs {exact}"
        );
    }

    #[test]
    fn disc_regular_part_at_coincident_point() {
        let p = [0.3, 0.0];
        let h = disc_regular_part(&p, &p).unwrap();
        let exact = (1.0f64 - 0.09).ln() / (2.0 * PI);
        assert!((h - exact).abs() < 1e-15, "{h} vs {exact}");
        assert!(h < 0.0);
    }

    #[test]
    fn disc_green_is_fundamental_plus_regular() {
        let pts = [
            ([0.1, 0.2], [0.5, -0.3]),
            ([-0.7, 0.1], [0.2, 0.6]),
            ([0.0, 0.0], [0.3, 0.3]),
        ];
        for (x, y) in pts {
            let g = disc_green(&x, &y).unwrap();
            let s = fundamental_solution(&x, &y, 2).unwrap();
            let h = disc_regular_part(&x, &y).unwrap();
            assert!((g - (s + h)).abs() < 1e-14);
        }
    }

    #[test]
    fn disc_green_vanishes_on_circle() {
        let x = [0.3, 0.1];
        let y = [0.6, 0.8];
        assert!(disc_green(&x, &y).unwrap().abs() < 1e-14);
    }

    #[test]
    fn poisson_identity_constant_and_linear() {
        let one = QuadPoly::constant(2, 1.0);
        let r = poisson_identity_check(&one, &[0.0, 0.0], 2).unwrap();
        assert!(r < 1e-8, "residual {r}");
        let x1 = QuadPoly::coordinate(2, 0);
        let r = poisson_identity_check(&x1, &[0.2, -0.1], 2).unwrap();
        assert!(r < 1e-8, "residual {r}");
    }

    #[test]
    fn poisson_identity_quadratic() {
        let q = QuadPoly::radius_squared(2);
        let r = poisson_identity_check(&q, &[0.0, 0.0], 2).unwrap();
        assert!(r < 1e-6, "residual {r}");
    }

    #[test]
    fn poisson_identity_dim3() {
        let q = QuadPoly::radius_squared(3);
        let r = poisson_identity_check(&q, &[0.0, 0.0, 0.0], 3).unwrap();
        assert!(r < 1e-6, "residual {r}");
        let x1 = QuadPoly::coordinate(3, 1);
        let r = poisson_identity_check(&x1, &[0.1, 0.0, -0.2], 3).unwrap();
        assert!(r < 1e-6, "residual {r}");
    }

    #[test]
    fn poisson_kernel_mass_is_one() {
        for s in [[0.0, 0.0], [0.3, 0.2], [-0.5, 0.1]] {
            let m = poisson_kernel_mass(&s, 2).unwrap();
            assert!((m - 1.0).abs() < 1e-8, "mass {m}");
        }
        let m = poisson_kernel_mass(&[0.2, 0.1, -0.3], 3).unwrap();
        assert!((m - 1.0).abs() < 1e-8, "mass {m}");
    }
}
