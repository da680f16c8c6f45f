//! Elliptic solves on the classified grid and C¹/C² field sampling.
//!
//! `-Δu = f(u)` with zero Dirichlet data is solved by preconditioned CG for
//! linear right-hand sides and by damped Newton otherwise; the first
//! Dirichlet eigenpair comes from inverse power iteration with CG inner
//! solves. Solutions are [`Field`]s: one value per grid node (NaN outside the
//! domain) plus solver metadata, sampled anywhere in the interior through a
//! biquadratic fit on the 3×3 node neighbourhood.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use crate::fmath::FloatExt;

use crate::geometry::{Grid2D, NodeClass};
use crate::laplacian::{build_laplacian, BoundaryValues, SwOperator};
use crate::linsolve::{self, LinSolveError, LinearOp, StopRule};

/// Right-hand side nonlinearity of `-Δu = f(u)`.
#[derive(Clone, Copy)]
pub enum Nonlinearity<'a> {
    /// Torsion problem: f ≡ 1.
    Torsion,
    /// f = λ₁·u with λ₁ produced by the eigenvalue solve itself.
    LinearEigen,
    /// Smooth user nonlinearity with derivative.
    Custom {
        f: &'a dyn Fn(f64) -> f64,
        df: &'a dyn Fn(f64) -> f64,
    },
}

impl<'a> Nonlinearity<'a> {
    pub fn name(&self) -> &'static str {
        match self {
            Nonlinearity::Torsion => "torsion",
            Nonlinearity::LinearEigen => "linear-eigen",
            Nonlinearity::Custom { .. } => "custom",
        }
    }
}

impl<'a> fmt::Debug for Nonlinearity<'a> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Solver metadata carried by a [`Field`].
#[derive(Debug, Clone, Default)]
pub struct FieldMeta {
    pub label: String,
    pub residual: f64,
    pub newton_iterations: usize,
    pub linear_iterations: usize,
    /// Sup-norm residual after each Newton step.
    pub residual_trace: Vec<f64>,
    pub eigenvalue: Option<f64>,
}

/// Discrete scalar field on a classified grid.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<Grid2D>,
    /// Full-grid values, row-major; exterior slots are NaN.
    values: Vec<f64>,
    pub meta: FieldMeta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleError {
    /// Point closer than 2h to a boundary (or its 3×3 stencil leaves the
    /// domain).
    TooCloseToBoundary,
}

impl fmt::Display for SampleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sample point is too close to a boundary")
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SampleError {}

/// 1-D quadratic Lagrange basis on nodes {-1, 0, 1} and derivatives.
#[inline]
fn lagr(t: f64) -> [f64; 3] {
    [0.5 * t * (t - 1.0), 1.0 - t * t, 0.5 * t * (t + 1.0)]
}

#[inline]
fn dlagr(t: f64) -> [f64; 3] {
    [t - 0.5, -2.0 * t, t + 0.5]
}

const DDLAGR: [f64; 3] = [1.0, -2.0, 1.0];

impl Field {
    /// Builds a field by evaluating `f` at every non-exterior node.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: Arc<Grid2D>, f: F) -> Field {
        let mut values = vec![f64::NAN; grid.len()];
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let k = grid.node_index(i, j);
                if grid.class_at(k) != NodeClass::Exterior {
                    let p = grid.node_pos(i, j);
                    values[k] = f(p[0], p[1]);
                }
            }
        }
        Field {
            grid,
            values,
            meta: FieldMeta {
                label: String::from("synthetic"),
                ..FieldMeta::default()
            },
        }
    }

    fn from_solution(grid: Arc<Grid2D>, mut x: Vec<f64>, meta: FieldMeta) -> Field {
        for (k, v) in x.iter_mut().enumerate() {
            if grid.class_at(k) == NodeClass::Exterior {
                *v = f64::NAN;
            }
        }
        Field {
            grid,
            values: x,
            meta,
        }
    }

    pub fn grid(&self) -> &Arc<Grid2D> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at_node(&self, k: usize) -> f64 {
        self.values[k]
    }

    /// Copy of the values with exterior slots set to zero (solver layout).
    pub fn values_zeroed(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|v| if v.is_nan() { 0.0 } else { *v })
            .collect()
    }

    /// Maximum |u| over non-exterior nodes.
    pub fn sup_norm(&self) -> f64 {
        let mut m = 0.0f64;
        for &v in &self.values {
            if !v.is_nan() && v.abs() > m {
                m = v.abs();
            }
        }
        m
    }

    /// Maximum |∇u| over nodes where central differences are available.
    pub fn gradient_sup(&self) -> f64 {
        let g = &self.grid;
        let mut m = 0.0f64;
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                let k = g.node_index(i, j);
                if g.class_at(k) != NodeClass::Interior {
                    continue;
                }
                let gx = (self.values[k + 1] - self.values[k - 1]) / (2.0 * g.h);
                let gy = (self.values[k + g.nx] - self.values[k - g.nx]) / (2.0 * g.h);
                if gx.is_nan() || gy.is_nan() {
                    continue;
                }
                let n = gx.hypot(gy);
                if n > m {
                    m = n;
                }
            }
        }
        m
    }

    /// Stencil centre for a sampled point, requiring the full 3×3 block
    /// inside the domain and the point at distance ≥ 2h from both boundaries.
    fn stencil_centre(&self, x: f64, y: f64) -> Result<(usize, usize), SampleError> {
        let g = &self.grid;
        if g.domain.boundary_distance(x, y) < 2.0 * g.h * (1.0 - 1e-9) {
            return Err(SampleError::TooCloseToBoundary);
        }
        let (i, j) = g.nearest_node(x, y);
        if i < 1 || j < 1 || i + 1 >= g.nx || j + 1 >= g.ny {
            return Err(SampleError::TooCloseToBoundary);
        }
        for dj in 0..3 {
            for di in 0..3 {
                if g.class(i + di - 1, j + dj - 1) == NodeClass::Exterior {
                    return Err(SampleError::TooCloseToBoundary);
                }
            }
        }
        Ok((i, j))
    }

    fn stencil_values(&self, i: usize, j: usize) -> [[f64; 3]; 3] {
        let g = &self.grid;
        let mut v = [[0.0; 3]; 3];
        for (dj, row) in v.iter_mut().enumerate() {
            for (di, val) in row.iter_mut().enumerate() {
                *val = self.values[g.node_index(i + di - 1, j + dj - 1)];
            }
        }
        v
    }

    /// Biquadratic value at a point; exact on quadratic polynomials.
    pub fn sample_value(&self, x: f64, y: f64) -> Result<f64, SampleError> {
        let (i, j) = self.stencil_centre(x, y)?;
        Ok(self.eval_stencil(i, j, x, y).0)
    }

    /// Gradient of the biquadratic interpolant.
    pub fn sample_gradient(&self, x: f64, y: f64) -> Result<[f64; 2], SampleError> {
        let (i, j) = self.stencil_centre(x, y)?;
        Ok(self.eval_stencil(i, j, x, y).1)
    }

    /// Hessian of the biquadratic interpolant as [uxx, uxy, uyy].
    pub fn sample_hessian(&self, x: f64, y: f64) -> Result<[f64; 3], SampleError> {
        let (i, j) = self.stencil_centre(x, y)?;
        Ok(self.eval_stencil(i, j, x, y).2)
    }

    /// Value, gradient and Hessian in one fit.
    pub fn sample_all(&self, x: f64, y: f64) -> Result<(f64, [f64; 2], [f64; 3]), SampleError> {
        let (i, j) = self.stencil_centre(x, y)?;
        Ok(self.eval_stencil(i, j, x, y))
    }

    fn eval_stencil(&self, i: usize, j: usize, x: f64, y: f64) -> (f64, [f64; 2], [f64; 3]) {
        let g = &self.grid;
        let c = g.node_pos(i, j);
        let xi = (x - c[0]) / g.h;
        let eta = (y - c[1]) / g.h;
        let v = self.stencil_values(i, j);
        let lx = lagr(xi);
        let ly = lagr(eta);
        let dlx = dlagr(xi);
        let dly = dlagr(eta);
        let mut val = 0.0;
        let mut gx = 0.0;
        let mut gy = 0.0;
        let mut hxx = 0.0;
        let mut hxy = 0.0;
        let mut hyy = 0.0;
        for dj in 0..3 {
            for di in 0..3 {
                let u = v[dj][di];
                val += u * lx[di] * ly[dj];
                gx += u * dlx[di] * ly[dj];
                gy += u * lx[di] * dly[dj];
                hxx += u * DDLAGR[di] * ly[dj];
                hxy += u * dlx[di] * dly[dj];
                hyy += u * lx[di] * DDLAGR[dj];
            }
        }
        let h = g.h;
        (
            val,
            [gx / h, gy / h],
            [hxx / (h * h), hxy / (h * h), hyy / (h * h)],
        )
    }

    /// Extrapolates the field onto a boundary point from a stencil centred
    /// ~3h inside along the inward normal. Used to audit the Dirichlet data.
    pub fn extrapolate_to(&self, bx: f64, by: f64, inward: [f64; 2]) -> Option<f64> {
        let g = &self.grid;
        let cx = bx + 3.0 * g.h * inward[0];
        let cy = by + 3.0 * g.h * inward[1];
        let (i, j) = g.nearest_node(cx, cy);
        if i < 1 || j < 1 || i + 1 >= g.nx || j + 1 >= g.ny {
            return None;
        }
        for dj in 0..3 {
            for di in 0..3 {
                if g.class(i + di - 1, j + dj - 1) == NodeClass::Exterior {
                    return None;
                }
            }
        }
        Some(self.eval_stencil(i, j, bx, by).0)
    }
}

/// Solver error taxonomy.
#[derive(Debug, Clone, PartialEq)]
pub enum SolveError {
    /// Linear iteration cap exceeded.
    NoConvergence { iterations: usize },
    /// Newton damping hit its floor twice in a row.
    NewtonStalled { at_iteration: usize },
    /// Newton step cap exceeded.
    NewtonNoConvergence { residual: f64 },
    Linear(LinSolveError),
    InvalidInput(&'static str),
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::NoConvergence { iterations } => {
                write!(f, "no convergence within {iterations} iterations")
            }
            SolveError::NewtonStalled { at_iteration } => {
                write!(f, "newton damping stalled at iteration {at_iteration}")
            }
            SolveError::NewtonNoConvergence { residual } => {
                write!(f, "newton did not converge (residual {residual:.3e})")
            }
            SolveError::Linear(e) => write!(f, "{e}"),
            SolveError::InvalidInput(m) => write!(f, "invalid input: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SolveError {}

impl From<LinSolveError> for SolveError {
    fn from(e: LinSolveError) -> Self {
        match e {
            LinSolveError::NoConvergence { iterations, .. } => {
                SolveError::NoConvergence { iterations }
            }
            other => SolveError::Linear(other),
        }
    }
}

/// Operator shifted by a nonnegative diagonal: `A - diag(w)`.
struct ShiftedOp<'a> {
    base: &'a SwOperator,
    shift: &'a [f64],
    diag: Vec<f64>,
}

impl<'a> ShiftedOp<'a> {
    fn new(base: &'a SwOperator, shift: &'a [f64]) -> Self {
        let mut diag: Vec<f64> = base.diag().to_vec();
        for (k, d) in diag.iter_mut().enumerate() {
            if base.node_kind()[k] != 0 {
                *d -= shift[k];
                if d.abs() < 1e-300 {
                    *d = 1e-300;
                }
            }
        }
        ShiftedOp { base, shift, diag }
    }
}

impl<'a> LinearOp for ShiftedOp<'a> {
    fn len(&self) -> usize {
        self.base.len()
    }
    fn apply(&self, u: &[f64], out: &mut [f64]) {
        self.base.apply(u, out);
        for (k, o) in out.iter_mut().enumerate() {
            if self.base.node_kind()[k] != 0 {
                *o -= self.shift[k] * u[k];
            }
        }
    }
    fn diag(&self) -> &[f64] {
        &self.diag
    }
}

/// Owns the discrete operator for one grid; solves are methods.
pub struct EllipticSolver {
    grid: Arc<Grid2D>,
    op: SwOperator,
}

const POISSON_REL_TOL: f64 = 1e-10;
// Newton residuals are measured on the h²-scaled difference equations: the
// unscaled residual cannot be evaluated below ~1/h² times machine precision.
const NEWTON_SUP_TOL: f64 = 1e-9;
const NEWTON_MAX_STEPS: usize = 60;
const DAMPING_FLOOR: f64 = 1.0 / 32768.0; // 2^-15
const EIGEN_REL_TOL: f64 = 1e-8;
const EIGEN_MAX_OUTER: usize = 200;

impl EllipticSolver {
    pub fn new(grid: Arc<Grid2D>) -> EllipticSolver {
        let op = build_laplacian(&grid);
        EllipticSolver { grid, op }
    }

    pub fn grid(&self) -> &Arc<Grid2D> {
        &self.grid
    }

    pub fn operator(&self) -> &SwOperator {
        &self.op
    }

    fn iter_cap(&self) -> usize {
        20 * (self.op.unknowns() as f64).sqrt().ceil() as usize
    }

    fn linear_rule(&self) -> StopRule {
        StopRule {
            rel_l2: POISSON_REL_TOL,
            sup_abs: None,
            max_iter: self.iter_cap(),
        }
    }

    /// Solves `-Δu = rhs`, `u = 0` on both boundaries.
    pub fn solve_poisson(&self, rhs: &[f64]) -> Result<Field, SolveError> {
        self.solve_dirichlet(rhs, BoundaryValues::ZERO)
    }

    /// Solves `-Δu = rhs` with constant Dirichlet data per boundary.
    pub fn solve_dirichlet(&self, rhs: &[f64], bc: BoundaryValues) -> Result<Field, SolveError> {
        if rhs.len() != self.op.len() || rhs.iter().any(|v| !v.is_finite()) {
            return Err(SolveError::InvalidInput("rhs must be finite, full-grid"));
        }
        let b = self.op.rhs_from(rhs, bc);
        let (x, stats) = linsolve::solve(&self.op, &b, None, self.linear_rule())?;
        Ok(Field::from_solution(
            self.grid.clone(),
            x,
            FieldMeta {
                label: String::from("poisson"),
                residual: stats.rel_residual,
                newton_iterations: 0,
                linear_iterations: stats.iterations,
                residual_trace: Vec::new(),
                eigenvalue: None,
            },
        ))
    }

    /// Damped-Newton solve of `-Δu = f(u)` with zero Dirichlet data.
    ///
    /// Step halving on sup-residual increase, damping floor 2⁻¹⁵; stalls
    /// after two consecutive floor hits.
    pub fn solve_semilinear(
        &self,
        nl: &Nonlinearity<'_>,
        u_init: &Field,
    ) -> Result<Field, SolveError> {
        let (f, df): (&dyn Fn(f64) -> f64, &dyn Fn(f64) -> f64) = match nl {
            Nonlinearity::Torsion => (&|_| 1.0, &|_| 0.0),
            Nonlinearity::Custom { f, df } => (*f, *df),
            Nonlinearity::LinearEigen => {
                return Err(SolveError::InvalidInput(
                    "linear-eigen is solved by solve_eigen",
                ))
            }
        };
        let n = self.op.len();
        let kind = self.op.node_kind();
        let mut u = u_init.values_zeroed();
        if u.len() != n || u.iter().any(|v| !v.is_finite()) {
            return Err(SolveError::InvalidInput("u_init must be finite, full-grid"));
        }

        let h2 = self.grid.h * self.grid.h;
        let residual = |u: &[f64], r: &mut Vec<f64>| {
            self.op.apply(u, r);
            let mut supn = 0.0f64;
            for k in 0..n {
                if kind[k] != 0 {
                    r[k] -= f(u[k]);
                    supn = supn.max(r[k].abs());
                } else {
                    r[k] = 0.0;
                }
            }
            supn * h2
        };

        let mut r = vec![0.0; n];
        let mut res = residual(&u, &mut r);
        let mut trace = vec![res];
        let mut lin_iters = 0usize;
        let mut floored_prev = false;
        for step in 0..NEWTON_MAX_STEPS {
            if res <= NEWTON_SUP_TOL {
                return Ok(Field::from_solution(
                    self.grid.clone(),
                    u,
                    FieldMeta {
                        label: String::from(nl.name()),
                        residual: res,
                        newton_iterations: step,
                        linear_iterations: lin_iters,
                        residual_trace: trace,
                        eigenvalue: None,
                    },
                ));
            }
            // J δ = -R with J = A - diag(f'(u))
            let mut shift = vec![0.0; n];
            for k in 0..n {
                if kind[k] != 0 {
                    shift[k] = df(u[k]);
                }
            }
            let jac = ShiftedOp::new(&self.op, &shift);
            let mut neg_r = r.clone();
            neg_r.iter_mut().for_each(|v| *v = -*v);
            let rule = self.linear_rule();
            let (delta, stats) = linsolve::solve(&jac, &neg_r, None, rule)?;
            lin_iters += stats.iterations;

            let mut alpha = 1.0f64;
            let best: (Vec<f64>, f64);
            let mut floored = false;
            loop {
                let mut trial = u.clone();
                for k in 0..n {
                    trial[k] += alpha * delta[k];
                }
                let tres = residual(&trial, &mut r);
                if tres.is_finite() && tres < res {
                    best = (trial, tres);
                    break;
                }
                if alpha <= DAMPING_FLOOR {
                    floored = true;
                    best = (trial, tres);
                    break;
                }
                alpha *= 0.5;
            }
            if floored && floored_prev {
                return Err(SolveError::NewtonStalled { at_iteration: step });
            }
            floored_prev = floored;
            let (unew, rnew) = best;
            u = unew;
            res = rnew;
            trace.push(res);
            // r currently holds the residual of the accepted trial
        }
        if res <= NEWTON_SUP_TOL {
            return Ok(Field::from_solution(
                self.grid.clone(),
                u,
                FieldMeta {
                    label: String::from(nl.name()),
                    residual: res,
                    newton_iterations: NEWTON_MAX_STEPS,
                    linear_iterations: lin_iters,
                    residual_trace: trace,
                    eigenvalue: None,
                },
            ));
        }
        Err(SolveError::NewtonNoConvergence { residual: res })
    }

    /// First Dirichlet eigenpair by inverse power iteration with CG inner
    /// solves. The eigenfunction is normalized to maximum value +1.
    pub fn solve_eigen(&self) -> Result<(f64, Field), SolveError> {
        let n = self.op.len();
        let kind = self.op.node_kind();
        let mut x: Vec<f64> = kind
            .iter()
            .map(|&k| if k != 0 { 1.0 } else { 0.0 })
            .collect();
        normalize_l2(&mut x);
        let mut lambda = 0.0f64;
        let mut rel = 1.0f64;
        let mut lin_iters = 0usize;
        let mut ax = vec![0.0; n];
        for outer in 0..EIGEN_MAX_OUTER {
            // inexact inverse iteration: inner tolerance tracks progress
            let inner_tol = (0.05 * rel).clamp(1e-12, 1e-6);
            let warm: Option<Vec<f64>> = if lambda > 0.0 {
                Some(x.iter().map(|v| v / lambda).collect())
            } else {
                None
            };
            let rule = StopRule {
                rel_l2: inner_tol,
                sup_abs: None,
                max_iter: self.iter_cap(),
            };
            let (mut y, stats) = linsolve::solve(&self.op, &x, warm.as_deref(), rule)?;
            lin_iters += stats.iterations;
            normalize_l2(&mut y);
            self.op.apply(&y, &mut ax);
            let mut num = 0.0;
            for k in 0..n {
                num += y[k] * ax[k];
            }
            lambda = num; // Rayleigh quotient, ‖y‖₂ = 1
            let mut rnorm2 = 0.0;
            for k in 0..n {
                let rk = ax[k] - lambda * y[k];
                rnorm2 += rk * rk;
            }
            rel = rnorm2.sqrt() / lambda.abs().max(1e-300);
            x = y;
            if rel <= EIGEN_REL_TOL {
                // normalize: maximum value +1
                let mut mx = 0.0f64;
                for (k, &v) in x.iter().enumerate() {
                    if kind[k] != 0 && v.abs() > mx.abs() {
                        mx = v;
                    }
                }
                if mx == 0.0 {
                    return Err(SolveError::InvalidInput("eigenvector vanished"));
                }
                for v in x.iter_mut() {
                    *v /= mx;
                }
                let field = Field::from_solution(
                    self.grid.clone(),
                    x,
                    FieldMeta {
                        label: String::from("eigenfunction"),
                        residual: rel,
                        newton_iterations: outer + 1,
                        linear_iterations: lin_iters,
                        residual_trace: Vec::new(),
                        eigenvalue: Some(lambda),
                    },
                );
                return Ok((lambda, field));
            }
        }
        Err(SolveError::NoConvergence {
            iterations: EIGEN_MAX_OUTER,
        })
    }
}

fn normalize_l2(x: &mut [f64]) {
    let mut n2 = 0.0;
    for &v in x.iter() {
        n2 += v * v;
    }
    let n = n2.sqrt();
    if n > 0.0 {
        for v in x.iter_mut() {
            *v /= n;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{classify, Domain, LevelSetDomain, PuncturedDomain};

    fn disc_solver(h: f64) -> EllipticSolver {
        let g = classify(Domain::Plain(LevelSetDomain::Disc { r: 1.0 }), h).unwrap();
        EllipticSolver::new(Arc::new(g))
    }

    #[test]
    fn torsion_centre_value_matches_closed_form() {
        let s = disc_solver(1.0 / 128.0);
        let rhs = s.grid().eval(|_, _| 1.0);
        let u = s.solve_poisson(&rhs).unwrap();
        let v = u.sample_value(0.0, 0.0).unwrap();
        assert!((v - 0.25).abs() <= 2e-4, "u(0,0) = {v}");
    }

    #[test]
    fn ellipse_torsion_centre_value() {
        let g = classify(
            Domain::Plain(LevelSetDomain::Ellipse { a: 1.5, b: 1.0 }),
            1.0 / 96.0,
        )
        .unwrap();
        let s = EllipticSolver::new(Arc::new(g));
        let rhs = s.grid().eval(|_, _| 1.0);
        let u = s.solve_poisson(&rhs).unwrap();
        let v = u.sample_value(0.0, 0.0).unwrap();
        let exact = 2.25 / 6.5; // a²b²/(2(a²+b²))
        assert!((v - exact).abs() <= 5e-4, "u(0,0) = {v} vs {exact}");
    }

    #[test]
    fn zero_rhs_zero_solution() {
        let s = disc_solver(1.0 / 32.0);
        let rhs = vec![0.0; s.grid().len()];
        let u = s.solve_poisson(&rhs).unwrap();
        assert!(u.values().iter().all(|v| v.is_nan() || *v == 0.0));
    }

    #[test]
    fn semilinear_torsion_equals_poisson() {
        let s = disc_solver(1.0 / 64.0);
        let rhs = s.grid().eval(|_, _| 1.0);
        let up = s.solve_poisson(&rhs).unwrap();
        let zero = Field::from_fn(s.grid().clone(), |_, _| 0.0);
        let un = s.solve_semilinear(&Nonlinearity::Torsion, &zero).unwrap();
        let mut diff = 0.0f64;
        for (a, b) in up.values().iter().zip(un.values()) {
            if !a.is_nan() {
                diff = diff.max((a - b).abs());
            }
        }
        assert!(diff <= 1e-12, "max |poisson - newton(torsion)| = {diff:e}");
        assert_eq!(un.meta.newton_iterations, 1);
    }

    #[test]
    fn semilinear_monotone_perturbation_is_positive() {
        let outer = LevelSetDomain::Disc { r: 1.0 };
        let pd = PuncturedDomain::new(outer, [0.3, 0.0], 0.05).unwrap();
        let g = classify(Domain::Punctured(pd), 0.0125).unwrap();
        let s = EllipticSolver::new(Arc::new(g));
        let zero = Field::from_fn(s.grid().clone(), |_, _| 0.0);
        let f = |v: f64| 1.0 + 0.1 * v;
        let df = |_: f64| 0.1;
        let u = s
            .solve_semilinear(&Nonlinearity::Custom { f: &f, df: &df }, &zero)
            .unwrap();
        for (k, &v) in u.values().iter().enumerate() {
            if !v.is_nan() {
                assert!(v > 0.0, "node {k} value {v}");
            }
        }
    }

    #[test]
    fn gelfand_converges_with_monotone_residuals() {
        let s = disc_solver(1.0 / 32.0);
        let zero = Field::from_fn(s.grid().clone(), |_, _| 0.0);
        let f = |v: f64| v.exp();
        let df = |v: f64| v.exp();
        let u = s
            .solve_semilinear(&Nonlinearity::Custom { f: &f, df: &df }, &zero)
            .unwrap();
        let tr = &u.meta.residual_trace;
        for w in tr.windows(2) {
            assert!(w[1] < w[0], "residual trace not decreasing: {tr:?}");
        }
    }

    #[test]
    fn eigen_disc_small_grid() {
        let s = disc_solver(1.0 / 64.0);
        let (lambda, phi) = s.solve_eigen().unwrap();
        // j_{0,1}² = 5.7832, coarse grid tolerance
        assert!((lambda - 5.7832).abs() < 2e-2, "lambda = {lambda}");
        assert!((phi.sample_value(0.0, 0.0).unwrap() - 1.0).abs() < 1e-6);
        for &v in phi.values() {
            if !v.is_nan() {
                assert!(v > 0.0);
            }
        }
    }

    #[test]
    fn eigen_domain_monotonicity() {
        let s0 = disc_solver(1.0 / 64.0);
        let (l0, _) = s0.solve_eigen().unwrap();
        let pd = PuncturedDomain::new(LevelSetDomain::Disc { r: 1.0 }, [0.0, 0.0], 0.05).unwrap();
        let g = classify(Domain::Punctured(pd), 1.0 / 96.0).unwrap();
        let s1 = EllipticSolver::new(Arc::new(g));
        let (l1, _) = s1.solve_eigen().unwrap();
        assert!(l1 > l0, "lambda punctured {l1} vs {l0}");
    }

    #[test]
    fn sampling_exact_on_quadratics() {
        let s = disc_solver(1.0 / 16.0);
        let f = Field::from_fn(s.grid().clone(), |x, y| x * x - y * y);
        let (v, g, h) = f.sample_all(0.21, -0.13).unwrap();
        assert!((v - (0.21f64 * 0.21 - 0.13 * 0.13)).abs() < 1e-13);
        assert!((g[0] - 0.42).abs() < 1e-12 && (g[1] - 0.26).abs() < 1e-12);
        assert!((h[0] - 2.0).abs() < 1e-10);
        assert!(h[1].abs() < 1e-10);
        assert!((h[2] + 2.0).abs() < 1e-10);
    }

    #[test]
    fn sampling_rejects_near_boundary_points() {
        let s = disc_solver(1.0 / 16.0);
        let f = Field::from_fn(s.grid().clone(), |x, y| x + y);
        assert_eq!(
            f.sample_value(0.99, 0.0).unwrap_err(),
            SampleError::TooCloseToBoundary
        );
    }

    #[test]
    fn torsion_gradient_and_hessian_match_closed_form() {
        let h = 1.0 / 128.0;
        let s = disc_solver(h);
        let rhs = s.grid().eval(|_, _| 1.0);
        let u = s.solve_poisson(&rhs).unwrap();
        let g = u.sample_gradient(0.3, 0.0).unwrap();
        assert!((g[0] + 0.15).abs() <= 3.0 * h * h, "ux = {}", g[0]);
        assert!(g[1].abs() <= 3.0 * h * h);
        let hess = u.sample_hessian(0.0, 0.0).unwrap();
        assert!((hess[0] + 0.5).abs() <= 10.0 * h);
        assert!((hess[2] + 0.5).abs() <= 10.0 * h);
    }

    #[test]
    fn dirichlet_consistency_on_outer_boundary() {
        let pd = PuncturedDomain::new(LevelSetDomain::Disc { r: 1.0 }, [0.3, 0.0], 0.05).unwrap();
        let g = classify(Domain::Punctured(pd), 0.0125).unwrap();
        let s = EllipticSolver::new(Arc::new(g));
        let rhs = s.grid().eval(|_, _| 1.0);
        let u = s.solve_poisson(&rhs).unwrap();
        let tol = 10.0 * s.grid().h * s.grid().h * u.sup_norm().max(1.0);
        for k in 0..64 {
            let t = 2.0 * core::f64::consts::PI * k as f64 / 64.0;
            let (p, nrm) = s.grid().domain.outer().boundary_point(t);
            if let Some(v) = u.extrapolate_to(p[0], p[1], [-nrm[0], -nrm[1]]) {
                assert!(v.abs() <= tol, "outer boundary value {v} at {p:?}");
            }
        }
    }

    #[test]
    fn dirichlet_consistency_at_hole_via_exact_annulus() {
        // centred annulus torsion has the closed form
        // u = -r²/4 + A log r + 1/4 with A = (1 - eps²)/(4 |log eps|);
        // nodal agreement down to the hole boundary checks the cut stencil
        let eps = 0.05;
        let h = 0.0125;
        let pd = PuncturedDomain::new(LevelSetDomain::Disc { r: 1.0 }, [0.0, 0.0], eps).unwrap();
        let g = classify(Domain::Punctured(pd), h).unwrap();
        let s = EllipticSolver::new(Arc::new(g));
        let rhs = s.grid().eval(|_, _| 1.0);
        let u = s.solve_poisson(&rhs).unwrap();
        let a = (1.0 - eps * eps) / (4.0 * (1.0f64 / eps).ln());
        let exact = |x: f64, y: f64| {
            let r = x.hypot(y);
            -r * r / 4.0 + a * r.ln() + 0.25
        };
        let mut emax = 0.0f64;
        for j in 0..s.grid().ny {
            for i in 0..s.grid().nx {
                let k = s.grid().node_index(i, j);
                let v = u.value_at_node(k);
                if !v.is_nan() {
                    let p = s.grid().node_pos(i, j);
                    emax = emax.max((v - exact(p[0], p[1])).abs());
                }
            }
        }
        let tol = 10.0 * h * h * u.sup_norm().max(1.0);
        assert!(emax <= tol, "sup error vs exact annulus: {emax} (tol {tol})");
    }

    #[test]
    fn determinism_bitwise() {
        let s1 = disc_solver(1.0 / 32.0);
        let s2 = disc_solver(1.0 / 32.0);
        let rhs1 = s1.grid().eval(|x, y| 1.0 + x - y);
        let rhs2 = s2.grid().eval(|x, y| 1.0 + x - y);
        let u1 = s1.solve_poisson(&rhs1).unwrap();
        let u2 = s2.solve_poisson(&rhs2).unwrap();
        for (a, b) in u1.values().iter().zip(u2.values()) {
            assert!(a.is_nan() && b.is_nan() || a == b);
        }
    }
}
