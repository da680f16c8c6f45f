//! Discrete `-Δ` with Dirichlet data on the classified grid.
//!
//! Interior nodes get the 5-point stencil, boundary-cut nodes the
//! Shortley–Weller unequal-arm stencil. Vectors are full-grid (row-major,
//! one slot per node); exterior slots are kept at zero throughout.

use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{ArmBoundary, Grid2D, NodeClass, ARM_DIRS};

/// Per-row data for a boundary-cut node.
#[derive(Debug, Clone, Copy)]
pub struct CutRow {
    pub node: u32,
    /// Off-diagonal coefficient per arm (E, W, N, S); zero when the arm is
    /// cut (the neighbour is then a boundary point, see `bnd_coef`).
    pub nbr_coef: [f64; 4],
    /// Neighbour node index per arm, valid when `nbr_coef` is nonzero.
    pub nbr: [u32; 4],
    /// Coefficient multiplying the Dirichlet value at the arm's boundary
    /// crossing; zero when the arm is uncut.
    pub bnd_coef: [f64; 4],
    pub bnd_hits: [ArmBoundary; 4],
}

/// Sparse `-Δ` acting on full-grid vectors.
#[derive(Debug, Clone)]
pub struct SwOperator {
    nx: usize,
    ny: usize,
    inv_h2: f64,
    /// 0 exterior, 1 regular interior, 2 boundary-cut.
    kind: Vec<u8>,
    /// Diagonal; 1.0 at exterior slots so Jacobi scaling is always defined.
    diag: Vec<f64>,
    cut_of_node: Vec<u32>,
    cuts: Vec<CutRow>,
    unknowns: usize,
}

/// Dirichlet data, constant per boundary component.
#[derive(Debug, Clone, Copy, Default)]
pub struct BoundaryValues {
    pub outer: f64,
    pub hole: f64,
}

impl BoundaryValues {
    pub const ZERO: BoundaryValues = BoundaryValues {
        outer: 0.0,
        hole: 0.0,
    };

    fn value(&self, hit: ArmBoundary) -> f64 {
        match hit {
            ArmBoundary::Outer => self.outer,
            ArmBoundary::Hole => self.hole,
            ArmBoundary::None => 0.0,
        }
    }
}

/// Builds the Shortley–Weller operator for a classified grid.
pub fn build_laplacian(grid: &Grid2D) -> SwOperator {
    let nx = grid.nx;
    let ny = grid.ny;
    let n = nx * ny;
    let inv_h2 = 1.0 / (grid.h * grid.h);
    let mut kind = vec![0u8; n];
    let mut diag = vec![1.0f64; n];
    let mut cut_of_node = vec![u32::MAX; n];
    let mut cuts: Vec<CutRow> = Vec::with_capacity(grid.cut_arms().len());
    let mut unknowns = 0usize;

    for k in 0..n {
        match grid.class_at(k) {
            NodeClass::Exterior => {}
            NodeClass::Interior => {
                kind[k] = 1;
                diag[k] = 4.0 * inv_h2;
                unknowns += 1;
            }
            NodeClass::BoundaryCut => {
                kind[k] = 2;
                unknowns += 1;
                let arms = grid.cut_arms_of(k).expect("cut node has arm data");
                let i = k % nx;
                let j = k / nx;
                let t = arms.frac;
                // 1-D unequal-arm second difference per axis:
                //   u'' ≈ 2/h² [ u_+/(t_+(t_+ + t_-)) - u_0/(t_+ t_-) + u_-/(t_-(t_+ + t_-)) ]
                let d = 2.0 * inv_h2 * (1.0 / (t[0] * t[1]) + 1.0 / (t[2] * t[3]));
                let mut nbr_coef = [0.0f64; 4];
                let mut nbr = [u32::MAX; 4];
                let mut bnd_coef = [0.0f64; 4];
                let pair = |a: usize| if a % 2 == 0 { a + 1 } else { a - 1 };
                for a in 0..4 {
                    let c = -2.0 * inv_h2 / (t[a] * (t[a] + t[pair(a)]));
                    if arms.hits[a] == ArmBoundary::None {
                        let ni = (i as i64 + ARM_DIRS[a][0]) as usize;
                        let nj = (j as i64 + ARM_DIRS[a][1]) as usize;
                        nbr_coef[a] = c;
                        nbr[a] = (nj * nx + ni) as u32;
                    } else {
                        bnd_coef[a] = c;
                    }
                }
                diag[k] = d;
                cut_of_node[k] = cuts.len() as u32;
                cuts.push(CutRow {
                    node: k as u32,
                    nbr_coef,
                    nbr,
                    bnd_coef,
                    bnd_hits: arms.hits,
                });
            }
        }
    }
    SwOperator {
        nx,
        ny,
        inv_h2,
        kind,
        diag,
        cut_of_node,
        cuts,
        unknowns,
    }
}

impl SwOperator {
    pub fn len(&self) -> usize {
        self.kind.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kind.is_empty()
    }

    pub fn unknowns(&self) -> usize {
        self.unknowns
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn node_kind(&self) -> &[u8] {
        &self.kind
    }

    pub fn cut_rows(&self) -> &[CutRow] {
        &self.cuts
    }

    /// `out = A·u` over unknown slots; exterior slots are written 0.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        let nx = self.nx;
        let n = self.len();
        debug_assert_eq!(u.len(), n);
        debug_assert_eq!(out.len(), n);
        let inv_h2 = self.inv_h2;
        for j in 0..self.ny {
            let row = j * nx;
            for i in 0..nx {
                let k = row + i;
                match self.kind[k] {
                    1 => {
                        out[k] = inv_h2
                            * (4.0 * u[k] - u[k - 1] - u[k + 1] - u[k - nx] - u[k + nx]);
                    }
                    2 => {
                        let c = &self.cuts[self.cut_of_node[k] as usize];
                        let mut v = self.diag[k] * u[k];
                        for a in 0..4 {
                            if c.nbr_coef[a] != 0.0 {
                                v += c.nbr_coef[a] * u[c.nbr[a] as usize];
                            }
                        }
                        out[k] = v;
                    }
                    _ => out[k] = 0.0,
                }
            }
        }
    }

    /// Assembles the right-hand side `b` such that `A u = b` imposes
    /// `-Δu = f` with the given Dirichlet data: boundary terms of cut arms
    /// move to the right-hand side.
    pub fn rhs_from(&self, f: &[f64], bc: BoundaryValues) -> Vec<f64> {
        let mut b = vec![0.0; self.len()];
        for (k, &kind) in self.kind.iter().enumerate() {
            if kind != 0 {
                b[k] = f[k];
            }
        }
        if bc.outer != 0.0 || bc.hole != 0.0 {
            for c in &self.cuts {
                let k = c.node as usize;
                for a in 0..4 {
                    if c.bnd_coef[a] != 0.0 {
                        b[k] -= c.bnd_coef[a] * bc.value(c.bnd_hits[a]);
                    }
                }
            }
        }
        b
    }

    /// M-matrix structure: positive diagonal, non-positive off-diagonals,
    /// weak diagonal dominance with strictness at rows with a cut arm.
    /// Returns the first offending node, if any.
    pub fn m_matrix_violation(&self) -> Option<usize> {
        for (k, &kind) in self.kind.iter().enumerate() {
            match kind {
                1 => {
                    // 5-point row: diag 4/h², off-diags -1/h² each, row sum 0
                    if self.diag[k] <= 0.0 {
                        return Some(k);
                    }
                }
                2 => {
                    let c = &self.cuts[self.cut_of_node[k] as usize];
                    if self.diag[k] <= 0.0 {
                        return Some(k);
                    }
                    let mut off = 0.0;
                    let mut cutset = false;
                    for a in 0..4 {
                        if c.nbr_coef[a] > 0.0 || c.bnd_coef[a] > 0.0 {
                            return Some(k);
                        }
                        off += -c.nbr_coef[a];
                        cutset |= c.bnd_coef[a] != 0.0;
                    }
                    let slack = self.diag[k] - off;
                    if cutset {
                        if slack <= 0.0 {
                            return Some(k);
                        }
                    } else if slack < -1e-12 * self.diag[k] {
                        return Some(k);
                    }
                }
                _ => {}
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{classify, Domain, LevelSetDomain};

    fn disc_grid(h: f64) -> Grid2D {
        classify(Domain::Plain(LevelSetDomain::Disc { r: 1.0 }), h).unwrap()
    }

    #[test]
    fn five_point_exact_on_quadratic() {
        let g = disc_grid(1.0 / 16.0);
        let op = build_laplacian(&g);
        let q = g.eval(|x, y| x * x + y * y);
        let mut out = vec![0.0; g.len()];
        op.apply(&q, &mut out);
        for (k, &kind) in op.node_kind().iter().enumerate() {
            if kind == 1 {
                assert!(
                    (out[k] - (-4.0)).abs() < 1e-9,
                    "node {}: {} != -4",
                    k,
                    out[k]
                );
            }
        }
    }

    #[test]
    fn constant_rows_match_row_sums() {
        let g = disc_grid(1.0 / 16.0);
        let op = build_laplacian(&g);
        let ones = g.eval(|_, _| 1.0);
        let mut out = vec![0.0; g.len()];
        op.apply(&ones, &mut out);
        for (k, &kind) in op.node_kind().iter().enumerate() {
            match kind {
                1 => assert!(out[k].abs() < 1e-9 / (g.h * g.h)),
                2 => assert!(out[k] > 0.0, "cut row {} must be strictly dominant", k),
                _ => {}
            }
        }
    }

    #[test]
    fn m_matrix_structure_holds() {
        for h in [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0] {
            let g = disc_grid(h);
            let op = build_laplacian(&g);
            assert_eq!(op.m_matrix_violation(), None);
        }
        let pd = Domain::Punctured(
            crate::geometry::PuncturedDomain::new(
                LevelSetDomain::Disc { r: 1.0 },
                [0.3, 0.0],
                0.08,
            )
            .unwrap(),
        );
        let g = classify(pd, 0.02).unwrap();
        let op = build_laplacian(&g);
        assert_eq!(op.m_matrix_violation(), None);
    }

    #[test]
    fn truncation_error_second_order_on_smooth_field() {
        use core::f64::consts::PI;
        let err_for = |h: f64| -> f64 {
            let g = disc_grid(h);
            let op = build_laplacian(&g);
            let u = g.eval(|x, y| (PI * x).sin() * (PI * y).sin());
            let mut out = vec![0.0; g.len()];
            op.apply(&u, &mut out);
            let mut emax = 0.0f64;
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let k = g.node_index(i, j);
                    if op.node_kind()[k] == 1 {
                        let p = g.node_pos(i, j);
                        let exact = 2.0 * PI * PI * (PI * p[0]).sin() * (PI * p[1]).sin();
                        emax = emax.max((out[k] - exact).abs());
                    }
                }
            }
            emax
        };
        let e1 = err_for(1.0 / 64.0);
        let e2 = err_for(1.0 / 128.0);
        let order = (e1 / e2).ln() / 2f64.ln();
        assert!(order >= 1.8, "observed order {order}");
    }
}
