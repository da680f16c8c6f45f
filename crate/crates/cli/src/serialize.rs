//! JSON shapes for critical-point sets and predictions.

use serde::{Deserialize, Serialize};

use holepoint_core::asymptotics::{
    CountDelta, Prediction, PredictionFlag, PredictionKind, ScalingLaw,
};
use holepoint_core::critpoints::{CritSet, CriticalPoint, RingDiagnostic};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PointJson {
    pub x: f64,
    pub y: f64,
    pub value: f64,
    pub index: Option<i32>,
    pub class: String,
    pub grad_norm: f64,
    pub hess: [f64; 3],
}

impl From<&CriticalPoint> for PointJson {
    fn from(p: &CriticalPoint) -> Self {
        PointJson {
            x: p.location[0],
            y: p.location[1],
            value: p.value,
            index: p.index,
            class: p.class.to_string(),
            grad_norm: p.grad_norm,
            hess: p.hessian,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RingJson {
    pub center: [f64; 2],
    pub mean_radius: f64,
    pub radius_spread: f64,
    pub member_count: usize,
    pub gradient_too_small: usize,
    pub under_sampled: usize,
    pub max_gap: f64,
}

impl From<&RingDiagnostic> for RingJson {
    fn from(r: &RingDiagnostic) -> Self {
        RingJson {
            center: r.center,
            mean_radius: r.mean_radius,
            radius_spread: r.radius_spread,
            member_count: r.member_count,
            gradient_too_small: r.gradient_too_small,
            under_sampled: r.under_sampled,
            max_gap: r.max_gap,
        }
    }
}

pub fn points_json(cs: &CritSet) -> Vec<PointJson> {
    cs.points.iter().map(PointJson::from).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PredictionJson {
    pub kind: String,
    pub law: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    pub eps: f64,
    pub c: Vec<f64>,
    pub count_delta: i64,
    /// false when the count is only a lower bound
    pub count_exact: bool,
    pub points: Vec<PredictedPointJson>,
    pub expected_value: f64,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PredictedPointJson {
    pub location: Vec<f64>,
    pub direction: Vec<f64>,
    pub offset: f64,
    pub coefficient: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigenvalue: Option<f64>,
}

impl From<&Prediction> for PredictionJson {
    fn from(p: &Prediction) -> Self {
        let (law, exponent) = match p.law {
            ScalingLaw::Log => ("LOG".to_string(), None),
            ScalingLaw::Power(e) => ("POWER".to_string(), Some(e)),
        };
        let kind = match p.kind {
            PredictionKind::NondegenerateSaddle => "NONDEG_SADDLE",
            PredictionKind::DegenerateFamily => "DEGEN_FAMILY",
            PredictionKind::Radial => "RADIAL",
        };
        let (count_delta, count_exact) = match p.count_delta {
            CountDelta::Exact(n) => (n, true),
            CountDelta::AtLeast(n) => (n, false),
        };
        PredictionJson {
            kind: kind.to_string(),
            law,
            exponent,
            eps: p.eps,
            c: p.constant.clone(),
            count_delta,
            count_exact,
            points: p
                .points
                .iter()
                .map(|q| PredictedPointJson {
                    location: q.location.clone(),
                    direction: q.direction.clone(),
                    offset: q.offset,
                    coefficient: q.coefficient,
                    eigenvalue: q.eigenvalue,
                })
                .collect(),
            expected_value: p.expected_value,
            flags: p
                .flags
                .iter()
                .map(|f| {
                    match f {
                        PredictionFlag::MultipleEigenvalue => "MULTIPLE_EIGENVALUE",
                        PredictionFlag::PrintedVsCrossDiscrepancy => "PRINTED_VS_CROSS",
                    }
                    .to_string()
                })
                .collect(),
        }
    }
}
