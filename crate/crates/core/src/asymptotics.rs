//! Closed-form predictors for hole-generated critical points.
//!
//! When the hole centre P is not a critical point of the limit solution u₀,
//! one extra saddle appears at
//!   P + C_N ∇u₀(P) ε^((N−2)/(N−1))   (N ≥ 3)
//!   P + C₂ ∇u₀(P) / |log ε|         (N = 2)
//! with C_N = −[(N−2)u₀(P)/|∇u₀(P)|^N]^(1/(N−1)) and C₂ = −u₀(P)/|∇u₀(P)|².
//!
//! When P is a nondegenerate critical point of u₀ with m negative Hessian
//! eigenvalues λ_i (unit eigenvectors v_i), the extra points come in pairs
//!   P ± r_i v_i,  r_i = [(2−N)u₀(P)/λ_i]^(1/N) ε^((N−2)/N)  (N ≥ 3)
//!              r_i = sqrt(−u₀(P)/λ_i) / sqrt(|log ε|)       (N = 2)
//! and the net count change is 2m − 1 (−1 for a nondegenerate minimum).
//!
//! For radial solutions on the annulus the unique critical radius follows the
//! same laws; in two dimensions the module reports both the PRINTED constant
//! sqrt(u₀(0)/(2f)) and the CROSS constant sqrt(2u₀(0)/f) implied by the
//! degenerate family with λ = −f/2, which disagree by a factor 2 — the exact
//! annulus solution matches CROSS.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use crate::fmath::FloatExt;

use crate::elliptic::Field;

/// Pointwise data of the limit solution u₀ at the hole centre.
#[derive(Debug, Clone)]
pub struct LocalData {
    pub dim: usize,
    /// hole centre
    pub p: Vec<f64>,
    pub u0_at_p: f64,
    pub grad: Vec<f64>,
    /// symmetric dim×dim Hessian, row-major
    pub hess: Vec<f64>,
    /// f(u₀(P)), used by the radial reduction
    pub f_at_u0p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PredictError {
    ZeroGradient,
    DegenerateHessian,
    NonpositiveF,
    ZeroVector,
    InsufficientData,
    TooCloseToHole,
    InvalidLocalData(&'static str),
}

impl fmt::Display for PredictError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredictError::ZeroGradient => write!(f, "gradient of u0 at P vanishes"),
            PredictError::DegenerateHessian => write!(f, "Hessian of u0 at P is degenerate"),
            PredictError::NonpositiveF => write!(f, "f(u0(0)) must be positive"),
            PredictError::ZeroVector => write!(f, "direction vector must be nonzero"),
            PredictError::InsufficientData => write!(f, "need at least 3 records to fit"),
            PredictError::TooCloseToHole => write!(f, "expansion point inside the hole scale"),
            PredictError::InvalidLocalData(m) => write!(f, "invalid local data: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PredictError {}

impl LocalData {
    pub fn new(
        dim: usize,
        p: Vec<f64>,
        u0_at_p: f64,
        grad: Vec<f64>,
        hess: Vec<f64>,
        f_at_u0p: f64,
    ) -> Result<LocalData, PredictError> {
        if dim < 2 || p.len() != dim || grad.len() != dim || hess.len() != dim * dim {
            return Err(PredictError::InvalidLocalData("dimension mismatch"));
        }
        if !(u0_at_p > 0.0) {
            return Err(PredictError::InvalidLocalData("u0(P) must be positive"));
        }
        let mut scale = 0.0f64;
        for v in &hess {
            scale = scale.max(v.abs());
        }
        for i in 0..dim {
            for j in 0..i {
                if (hess[i * dim + j] - hess[j * dim + i]).abs() > 1e-12 * scale.max(1.0) {
                    return Err(PredictError::InvalidLocalData("Hessian not symmetric"));
                }
            }
        }
        Ok(LocalData {
            dim,
            p,
            u0_at_p,
            grad,
            hess,
            f_at_u0p,
        })
    }

    /// Extracts 2-D local data from a numerical limit field by biquadratic
    /// sampling, so predictions share the discretization of measurements.
    pub fn from_field(u0: &Field, p: [f64; 2], f_at_u0p: f64) -> Result<LocalData, PredictError> {
        let (value, grad, hess) = u0
            .sample_all(p[0], p[1])
            .map_err(|_| PredictError::InvalidLocalData("P not sampleable"))?;
        LocalData::new(
            2,
            vec![p[0], p[1]],
            value,
            vec![grad[0], grad[1]],
            vec![hess[0], hess[1], hess[1], hess[2]],
            f_at_u0p,
        )
    }

    pub fn grad_norm(&self) -> f64 {
        let mut s = 0.0;
        for g in &self.grad {
            s += g * g;
        }
        s.sqrt()
    }

    /// Heuristic for branch selection: the gradient counts as zero when
    /// |∇u₀(P)|² is negligible against u₀(P)·ρ(H).
    pub fn gradient_is_small(&self) -> bool {
        let eig = jacobi_eigenvalues(&self.hess, self.dim);
        let rho = eig.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
        let g2 = self.grad.iter().map(|g| g * g).sum::<f64>();
        g2 < 1e-6 * self.u0_at_p * rho.max(1e-300)
    }
}

/// Scaling law of a predicted offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalingLaw {
    /// offset ∝ 1/|log ε|
    Log,
    /// offset ∝ ε^p
    Power(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictionKind {
    NondegenerateSaddle,
    DegenerateFamily,
    Radial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountDelta {
    Exact(i64),
    AtLeast(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictionFlag {
    MultipleEigenvalue,
    PrintedVsCrossDiscrepancy,
}

/// One predicted critical point.
#[derive(Debug, Clone)]
pub struct PredictedPoint {
    pub location: Vec<f64>,
    /// unit offset direction from P
    pub direction: Vec<f64>,
    /// offset magnitude at the given ε
    pub offset: f64,
    /// coefficient multiplying the scaling law
    pub coefficient: f64,
    /// Hessian eigenvalue that generated the point (degenerate family)
    pub eigenvalue: Option<f64>,
}

/// Asymptotic prediction for one ε.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub kind: PredictionKind,
    pub law: ScalingLaw,
    pub eps: f64,
    pub points: Vec<PredictedPoint>,
    pub count_delta: CountDelta,
    /// law coefficient vector: C_N ∇u₀(P) for the saddle branch, per-family
    /// magnitudes for the degenerate branch, [printed, cross] for radial 2-D
    pub constant: Vec<f64>,
    pub expected_value: f64,
    pub flags: Vec<PredictionFlag>,
}

/// C_N of the saddle location law.
pub fn c_constant(dim: usize, u0_at_p: f64, grad: &[f64]) -> Result<f64, PredictError> {
    let g2: f64 = grad.iter().map(|g| g * g).sum();
    if g2 == 0.0 {
        return Err(PredictError::ZeroGradient);
    }
    if !(u0_at_p > 0.0) {
        return Err(PredictError::InvalidLocalData("u0(P) must be positive"));
    }
    let gn = g2.sqrt();
    Ok(match dim {
        2 => -u0_at_p / g2,
        n => {
            let nn = n as f64;
            -(((nn - 2.0) * u0_at_p) / gn.powi(n as i32)).powf(1.0 / (nn - 1.0))
        }
    })
}

fn law_factor(law: ScalingLaw, eps: f64) -> f64 {
    match law {
        ScalingLaw::Log => 1.0 / eps.ln().abs(),
        ScalingLaw::Power(p) => eps.powf(p),
    }
}

/// Location of the extra saddle when ∇u₀(P) ≠ 0.
pub fn predict_nondegenerate(ld: &LocalData, eps: f64) -> Result<Prediction, PredictError> {
    let c = c_constant(ld.dim, ld.u0_at_p, &ld.grad)?;
    let law = if ld.dim == 2 {
        ScalingLaw::Log
    } else {
        let n = ld.dim as f64;
        ScalingLaw::Power((n - 2.0) / (n - 1.0))
    };
    let factor = law_factor(law, eps);
    let constant: Vec<f64> = ld.grad.iter().map(|g| c * g).collect();
    let offset_vec: Vec<f64> = constant.iter().map(|v| v * factor).collect();
    let offset: f64 = offset_vec.iter().map(|v| v * v).sum::<f64>().sqrt();
    let location: Vec<f64> = ld.p.iter().zip(&offset_vec).map(|(p, o)| p + o).collect();
    let direction: Vec<f64> = if offset > 0.0 {
        offset_vec.iter().map(|v| v / offset).collect()
    } else {
        vec![0.0; ld.dim]
    };
    Ok(Prediction {
        kind: PredictionKind::NondegenerateSaddle,
        law,
        eps,
        points: vec![PredictedPoint {
            location,
            direction,
            offset,
            coefficient: c * ld.grad_norm(),
            eigenvalue: None,
        }],
        count_delta: CountDelta::Exact(1),
        constant,
        expected_value: ld.u0_at_p,
        flags: Vec::new(),
    })
}

/// Point family when P is a nondegenerate critical point of u₀: one pair per
/// simple negative eigenvalue, count change 2m − 1 (or −1 at a minimum).
pub fn predict_degenerate(ld: &LocalData, eps: f64) -> Result<Prediction, PredictError> {
    let dim = ld.dim;
    let (eigvals, eigvecs) = jacobi_eigen(&ld.hess, dim);
    let rho = eigvals.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
    if rho == 0.0 {
        return Err(PredictError::DegenerateHessian);
    }
    let min_abs = eigvals.iter().fold(f64::INFINITY, |m, &l| m.min(l.abs()));
    if min_abs <= 1e-8 * rho {
        return Err(PredictError::DegenerateHessian);
    }
    let negatives: Vec<usize> = (0..dim).filter(|&i| eigvals[i] < 0.0).collect();
    let m = negatives.len() as i64;

    let mut flags = Vec::new();
    for w in negatives.windows(2) {
        if (eigvals[w[0]] - eigvals[w[1]]).abs() <= 1e-6 * rho {
            flags.push(PredictionFlag::MultipleEigenvalue);
            break;
        }
    }

    let law = if dim == 2 {
        ScalingLaw::Log
    } else {
        let n = dim as f64;
        ScalingLaw::Power((n - 2.0) / n)
    };
    let factor = match law {
        ScalingLaw::Log => 1.0 / eps.ln().abs().sqrt(),
        ScalingLaw::Power(p) => eps.powf(p),
    };

    let mut points = Vec::new();
    let mut constant = Vec::new();
    for &i in &negatives {
        let lam = eigvals[i];
        let coeff = if dim == 2 {
            (-ld.u0_at_p / lam).sqrt()
        } else {
            let n = dim as f64;
            ((2.0 - n) * ld.u0_at_p / lam).powf(1.0 / n)
        };
        constant.push(coeff);
        let r = coeff * factor;
        for sign in [1.0f64, -1.0] {
            let mut loc = ld.p.clone();
            let mut dir = vec![0.0; dim];
            for c in 0..dim {
                dir[c] = sign * eigvecs[c * dim + i];
                loc[c] += r * dir[c];
            }
            points.push(PredictedPoint {
                location: loc,
                direction: dir,
                offset: r,
                coefficient: coeff,
                eigenvalue: Some(lam),
            });
        }
    }

    let delta = 2 * m - 1;
    let count_delta = if m == 0 {
        CountDelta::Exact(-1)
    } else if flags.contains(&PredictionFlag::MultipleEigenvalue) {
        CountDelta::AtLeast(delta)
    } else {
        CountDelta::Exact(delta)
    };
    Ok(Prediction {
        kind: PredictionKind::DegenerateFamily,
        law,
        eps,
        points,
        count_delta,
        constant,
        expected_value: ld.u0_at_p,
        flags,
    })
}

/// Unique critical radius of the radial annulus problem. For N = 2 the
/// constant vector carries [printed, cross]; the sweep data matches CROSS.
pub fn predict_radial(
    dim: usize,
    eps: f64,
    u0_at_0: f64,
    f_at_u0_0: f64,
) -> Result<Prediction, PredictError> {
    if !(f_at_u0_0 > 0.0) {
        return Err(PredictError::NonpositiveF);
    }
    if !(u0_at_0 > 0.0) {
        return Err(PredictError::InvalidLocalData("u0(0) must be positive"));
    }
    if dim == 2 {
        let printed = (u0_at_0 / (2.0 * f_at_u0_0)).sqrt();
        let cross = (2.0 * u0_at_0 / f_at_u0_0).sqrt();
        let factor = 1.0 / eps.ln().abs().sqrt();
        let mk = |coeff: f64| PredictedPoint {
            location: vec![coeff * factor, 0.0],
            direction: vec![1.0, 0.0],
            offset: coeff * factor,
            coefficient: coeff,
            eigenvalue: Some(-f_at_u0_0 / 2.0),
        };
        Ok(Prediction {
            kind: PredictionKind::Radial,
            law: ScalingLaw::Log,
            eps,
            points: vec![mk(printed), mk(cross)],
            count_delta: CountDelta::AtLeast(1),
            constant: vec![printed, cross],
            expected_value: u0_at_0,
            flags: vec![PredictionFlag::PrintedVsCrossDiscrepancy],
        })
    } else {
        let n = dim as f64;
        let coeff = (n * (n - 2.0) * u0_at_0 / f_at_u0_0).powf(1.0 / n);
        let p = (n - 2.0) / n;
        let r = coeff * eps.powf(p);
        Ok(Prediction {
            kind: PredictionKind::Radial,
            law: ScalingLaw::Power(p),
            eps,
            points: vec![PredictedPoint {
                location: vec![r, 0.0],
                direction: vec![1.0, 0.0],
                offset: r,
                coefficient: coeff,
                eigenvalue: Some(-f_at_u0_0 / n),
            }],
            count_delta: CountDelta::AtLeast(1),
            constant: vec![coeff],
            expected_value: u0_at_0,
            flags: Vec::new(),
        })
    }
}

/// Verdict of the necessary-location test.
#[derive(Debug, Clone, PartialEq)]
pub enum LocationVerdict {
    /// matched the saddle branch
    MatchNondegenerate { residual: f64 },
    /// matched a degenerate-family point (family index, sign)
    MatchDegenerate { family: usize, residual: f64 },
    NoMatch { best_residual: f64 },
}

/// Tests whether a candidate is within relative tolerance of an admissible
/// predicted location; the relative residual is measured against the
/// predicted offset from P.
pub fn necessary_location_check(
    candidate: &[f64],
    ld: &LocalData,
    eps: f64,
    rel_tol: f64,
) -> LocationVerdict {
    let mut best: Option<(LocationVerdict, f64)> = None;
    let mut consider = |verdict: LocationVerdict, residual: f64| {
        if best.as_ref().map_or(true, |(_, r)| residual < *r) {
            best = Some((verdict, residual));
        }
    };
    if !ld.gradient_is_small() {
        // the saddle branch is the only admissible law when ∇u₀(P) ≠ 0
        if let Ok(pred) = predict_nondegenerate(ld, eps) {
            let pt = &pred.points[0];
            let mut d2 = 0.0;
            for c in 0..ld.dim {
                let d = candidate[c] - pt.location[c];
                d2 += d * d;
            }
            let residual = d2.sqrt() / pt.offset.max(1e-300);
            consider(LocationVerdict::MatchNondegenerate { residual }, residual);
        }
    } else if let Ok(pred) = predict_degenerate(ld, eps) {
        for (q, pt) in pred.points.iter().enumerate() {
            let mut d2 = 0.0;
            for c in 0..ld.dim {
                let d = candidate[c] - pt.location[c];
                d2 += d * d;
            }
            let residual = d2.sqrt() / pt.offset.max(1e-300);
            consider(
                LocationVerdict::MatchDegenerate {
                    family: q / 2,
                    residual,
                },
                residual,
            );
        }
    }
    match best {
        Some((verdict, residual)) if residual <= rel_tol => verdict,
        Some((_, residual)) => LocationVerdict::NoMatch {
            best_residual: residual,
        },
        None => LocationVerdict::NoMatch {
            best_residual: f64::INFINITY,
        },
    }
}

/// Near-hole expansion value at distance `dist` from P:
///   u₀(x) − u₀(P) ε^(N−2) / |x−P|^(N−2)          (N ≥ 3)
///   u₀(x) − u₀(P) (log|x−P| + 2π H(P,P)) / log ε (N = 2)
pub fn expansion_value(
    u0_at_x: f64,
    u0_at_p: f64,
    dist: f64,
    eps: f64,
    dim: usize,
    h_pp: f64,
) -> Result<f64, PredictError> {
    if dist <= eps {
        return Err(PredictError::TooCloseToHole);
    }
    Ok(match dim {
        2 => u0_at_x - u0_at_p * (dist.ln() + 2.0 * core::f64::consts::PI * h_pp) / eps.ln(),
        n => {
            let k = n as i32 - 2;
            u0_at_x - u0_at_p * eps.powi(k) / dist.powi(k)
        }
    })
}

/// Samples the 2-D expansion field against a numerical limit field.
pub fn expansion_field(
    u0: &Field,
    x: [f64; 2],
    p: [f64; 2],
    eps: f64,
    h_pp: f64,
) -> Result<f64, PredictError> {
    let dist = (x[0] - p[0]).hypot(x[1] - p[1]);
    let u0x = u0
        .sample_value(x[0], x[1])
        .map_err(|_| PredictError::InvalidLocalData("x not sampleable"))?;
    let u0p = u0
        .sample_value(p[0], p[1])
        .map_err(|_| PredictError::InvalidLocalData("P not sampleable"))?;
    expansion_value(u0x, u0p, dist, eps, 2, h_pp)
}

/// Spectrum of B = I − N ξξᵀ/|ξ|²: 1 − N once and 1 with multiplicity N − 1.
pub fn b_matrix_spectrum(xi: &[f64]) -> Result<Vec<f64>, PredictError> {
    let n = xi.len();
    let norm2: f64 = xi.iter().map(|v| v * v).sum();
    if norm2 == 0.0 || n == 0 {
        return Err(PredictError::ZeroVector);
    }
    let mut b = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            b[i * n + j] = if i == j { 1.0 } else { 0.0 } - (n as f64) * xi[i] * xi[j] / norm2;
        }
    }
    Ok(jacobi_eigenvalues(&b, n))
}

/// Least-squares fit of per-ε offsets against a scaling law; returns the
/// coefficient vector and the normalized residual.
pub fn fit_rate(
    records: &[(f64, Vec<f64>)],
    law: ScalingLaw,
) -> Result<(Vec<f64>, f64), PredictError> {
    if records.len() < 3 {
        return Err(PredictError::InsufficientData);
    }
    for w in records.windows(2) {
        if !(w[1].0 < w[0].0) {
            return Err(PredictError::InvalidLocalData("eps must strictly decrease"));
        }
    }
    let dim = records[0].1.len();
    let g: Vec<f64> = records.iter().map(|r| law_factor(law, r.0)).collect();
    let gg: f64 = g.iter().map(|v| v * v).sum();
    if gg == 0.0 {
        return Err(PredictError::InsufficientData);
    }
    let mut c = vec![0.0; dim];
    for (ri, rec) in records.iter().enumerate() {
        for d in 0..dim {
            c[d] += g[ri] * rec.1[d];
        }
    }
    for v in c.iter_mut() {
        *v /= gg;
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (ri, rec) in records.iter().enumerate() {
        for d in 0..dim {
            let r = rec.1[d] - c[d] * g[ri];
            num += r * r;
            den += rec.1[d] * rec.1[d];
        }
    }
    let residual = if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    };
    Ok((c, residual))
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    jacobi_eigen(a, n).0
}

/// Eigenvalues (ascending) and eigenvectors (columns) by cyclic Jacobi.
pub fn jacobi_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i * n + j] * m[i * n + j];
            }
        }
        if off <= 1e-30 * frob2(&m, n).max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = 0.5 * (aqq - app) / apq;
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    idx.sort_by(|&a, &b| diag[a].partial_cmp(&diag[b]).unwrap_or(core::cmp::Ordering::Equal));
    let vals: Vec<f64> = idx.iter().map(|&i| diag[i]).collect();
    let mut vecs = vec![0.0; n * n];
    for (new_col, &old_col) in idx.iter().enumerate() {
        for r in 0..n {
            vecs[r * n + new_col] = v[r * n + old_col];
        }
    }
    (vals, vecs)
}

fn frob2(m: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n * n {
        s += m[i] * m[i];
    }
    s
}
