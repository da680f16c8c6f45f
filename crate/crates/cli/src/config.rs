//! JSON experiment configuration: schema-validated before any compute,
//! unknown keys rejected.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use holepoint_core::geometry::{Domain, LevelSetDomain, PuncturedDomain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Critpoints,
    Sweep,
    RadialSweep,
    GreenVerify,
    Predict,
}

impl std::fmt::Display for Command {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Command::Solve => "solve",
            Command::Critpoints => "critpoints",
            Command::Sweep => "sweep",
            Command::RadialSweep => "radial-sweep",
            Command::GreenVerify => "green-verify",
            Command::Predict => "predict",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OuterSpec {
    Disc { r: f64 },
    Ellipse { a: f64, b: f64 },
    AnnulusOuter { r: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoleSpec {
    pub p: [f64; 2],
    pub eps: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub outer: OuterSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hole: Option<HoleSpec>,
    /// absolute spacing; an `h_rule` at the top level takes precedence
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum HRule {
    Absolute { h: f64 },
    /// h = eps / k
    EpsOver { k: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NonlinearitySpec {
    /// f ≡ 1
    Torsion,
    /// first eigenpair of −Δ
    Eigen,
    /// f(s) = c0 + c1·s
    Linear { c0: f64, c1: f64 },
    /// f(s) = eˢ
    Exp,
}

impl Default for NonlinearitySpec {
    fn default() -> Self {
        NonlinearitySpec::Torsion
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadialSpec {
    pub dim: usize,
    #[serde(default = "default_radial_n")]
    pub n: usize,
}

fn default_radial_n() -> usize {
    4096
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    /// detection margin as a multiple of h
    #[serde(default = "default_margin_factor")]
    pub margin_factor: f64,
    /// persistence pairing radius
    #[serde(default = "default_pairing_radius")]
    pub pairing_radius: f64,
    /// relative tolerance of the location check
    #[serde(default = "default_location_tolerance")]
    pub location_tolerance: f64,
}

fn default_margin_factor() -> f64 {
    3.0
}
fn default_pairing_radius() -> f64 {
    0.35
}
fn default_location_tolerance() -> f64 {
    0.2
}

impl Default for ProbeSpec {
    fn default() -> Self {
        ProbeSpec {
            margin_factor: default_margin_factor(),
            pairing_radius: default_pairing_radius(),
            location_tolerance: default_location_tolerance(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Timing {
    /// runtime_s columns report 0.0: reports are byte-stable across runs
    #[default]
    None,
    /// wall-clock runtimes (reports then vary run to run)
    Wall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PredictMode {
    #[default]
    Auto,
    Nondegenerate,
    Degenerate,
    Radial,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalDataSpec {
    pub dim: usize,
    pub p: Vec<f64>,
    pub u0_at_p: f64,
    pub grad: Vec<f64>,
    /// row-major dim×dim symmetric matrix
    pub hess: Vec<f64>,
    #[serde(default = "one")]
    pub f_at_u0p: f64,
    pub eps: f64,
    #[serde(default)]
    pub mode: PredictMode,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    #[serde(default)]
    pub nonlinearity: NonlinearitySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_list: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_rule: Option<HRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radial: Option<RadialSpec>,
    #[serde(default)]
    pub probes: ProbeSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub timing: Timing,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_data: Option<LocalDataSpec>,
}

impl OuterSpec {
    pub fn to_domain(&self) -> LevelSetDomain {
        match *self {
            OuterSpec::Disc { r } => LevelSetDomain::Disc { r },
            OuterSpec::Ellipse { a, b } => LevelSetDomain::Ellipse { a, b },
            OuterSpec::AnnulusOuter { r } => LevelSetDomain::AnnulusOuter { r },
        }
    }
}

impl DomainSpec {
    /// Builds the geometric domain, overriding the hole radius when a sweep
    /// supplies one.
    pub fn build(&self, eps_override: Option<f64>) -> Result<Domain> {
        let outer = self.outer.to_domain();
        match (&self.hole, eps_override) {
            (Some(hole), eps) => {
                let eps = eps.unwrap_or(hole.eps);
                let pd = PuncturedDomain::new(outer, hole.p, eps)
                    .map_err(|e| anyhow::anyhow!("invalid hole: {e}"))?;
                Ok(Domain::Punctured(pd))
            }
            (None, Some(_)) => bail!("eps supplied but the domain has no hole"),
            (None, None) => Ok(Domain::Plain(outer)),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).context("config does not match the schema")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn spacing_for(&self, eps: Option<f64>) -> Result<f64> {
        if let Some(rule) = &self.h_rule {
            return match (rule, eps) {
                (HRule::Absolute { h }, _) => Ok(*h),
                (HRule::EpsOver { k }, Some(e)) => Ok(e / k),
                (HRule::EpsOver { .. }, None) => {
                    bail!("h rule eps-over needs a hole radius")
                }
            };
        }
        if let Some(d) = &self.domain {
            if let Some(h) = d.h {
                return Ok(h);
            }
            if let (Some(e), true) = (eps.or(d.hole.as_ref().map(|h| h.eps)), true) {
                return Ok(e / 4.0);
            }
        }
        bail!("no grid spacing: set domain.h or h_rule")
    }

    fn validate(&self) -> Result<()> {
        if let Some(d) = &self.domain {
            let ok = match d.outer {
                OuterSpec::Disc { r } | OuterSpec::AnnulusOuter { r } => r > 0.0 && r.is_finite(),
                OuterSpec::Ellipse { a, b } => a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite(),
            };
            if !ok {
                bail!("outer domain parameters must be positive and finite");
            }
            if let Some(hole) = &d.hole {
                if !(hole.eps > 0.0 && hole.eps.is_finite()) {
                    bail!("hole radius must be positive and finite");
                }
            }
            if let Some(h) = d.h {
                if !(h > 0.0 && h.is_finite()) {
                    bail!("domain.h must be positive and finite");
                }
            }
        }
        if let Some(rule) = &self.h_rule {
            match rule {
                HRule::Absolute { h } if !(*h > 0.0 && h.is_finite()) => {
                    bail!("h_rule.h must be positive and finite")
                }
                HRule::EpsOver { k } if !(*k >= 1.0 && k.is_finite()) => {
                    bail!("h_rule.k must be at least 1")
                }
                _ => {}
            }
        }
        if let Some(list) = &self.eps_list {
            for w in list.windows(2) {
                if !(w[1] < w[0]) {
                    bail!("eps_list must be strictly decreasing");
                }
            }
            for &e in list {
                if !(e > 0.0 && e.is_finite()) {
                    bail!("eps values must be positive and finite");
                }
            }
        }
        if !(self.probes.margin_factor >= 3.0) {
            bail!("probes.margin_factor must be at least 3");
        }
        match self.command {
            Command::Solve | Command::Critpoints => {
                if self.domain.is_none() {
                    bail!("{} needs a domain block", self.command);
                }
            }
            Command::Sweep => {
                let d = self
                    .domain
                    .as_ref()
                    .with_context(|| "sweep needs a domain block")?;
                if d.hole.is_none() {
                    bail!("sweep needs a hole in the domain block");
                }
                // an empty eps_list is legal and yields a header-only report
                if self.eps_list.is_none() {
                    bail!("sweep needs eps_list");
                }
            }
            Command::RadialSweep => {
                let r = self
                    .radial
                    .as_ref()
                    .with_context(|| "radial-sweep needs the radial block")?;
                if r.dim < 2 {
                    bail!("radial.dim must be at least 2");
                }
                if self.eps_list.is_none() {
                    bail!("radial-sweep needs eps_list");
                }
                if matches!(self.nonlinearity, NonlinearitySpec::Eigen) {
                    bail!("radial-sweep does not support the eigen nonlinearity");
                }
            }
            Command::GreenVerify => {
                let d = self
                    .domain
                    .as_ref()
                    .with_context(|| "green-verify needs a domain block")?;
                match d.outer {
                    OuterSpec::Disc { r } if (r - 1.0).abs() < 1e-14 => {}
                    _ => bail!("green-verify requires the unit disc outer domain"),
                }
                if d.hole.is_none() {
                    bail!("green-verify needs a hole centre");
                }
                if self.eps_list.is_none() {
                    bail!("green-verify needs eps_list");
                }
            }
            Command::Predict => {
                let ld = self
                    .local_data
                    .as_ref()
                    .with_context(|| "predict needs local_data")?;
                if ld.p.len() != ld.dim
                    || ld.grad.len() != ld.dim
                    || ld.hess.len() != ld.dim * ld.dim
                {
                    bail!("local_data dimensions are inconsistent");
                }
                if !(ld.eps > 0.0 && ld.eps < 1.0) {
                    bail!("local_data.eps must lie in (0, 1)");
                }
            }
        }
        Ok(())
    }
}

/// Canonical JSON of the domain block, used for the field-file hash.
pub fn canonical_domain_json(d: &DomainSpec) -> String {
    serde_json::to_string(d).expect("domain spec serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_documented_domain_block() {
        let text = r#"{
            "command": "sweep",
            "domain": {"outer": {"kind": "ellipse", "a": 1.5, "b": 1.0},
                       "hole": {"p": [0.0, 0.0], "eps": 0.01}, "h": 0.0025},
            "eps_list": [0.04, 0.02, 0.01]
        }"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.command, Command::Sweep);
        assert_eq!(cfg.spacing_for(Some(0.01)).unwrap(), 0.0025);
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = r#"{"command": "solve",
            "domain": {"outer": {"kind": "disc", "r": 1.0}, "h": 0.1},
            "surprise": 1}"#;
        assert!(ExperimentConfig::from_json(text).is_err());
    }

    #[test]
    fn rejects_increasing_eps_list() {
        let text = r#"{"command": "sweep",
            "domain": {"outer": {"kind": "disc", "r": 1.0},
                       "hole": {"p": [0.3, 0.0], "eps": 0.01}},
            "eps_list": [0.01, 0.02]}"#;
        assert!(ExperimentConfig::from_json(text).is_err());
    }

    #[test]
    fn eps_over_rule() {
        let text = r#"{"command": "sweep",
            "domain": {"outer": {"kind": "disc", "r": 1.0},
                       "hole": {"p": [0.3, 0.0], "eps": 0.04}},
            "h_rule": {"kind": "eps-over", "k": 4.0},
            "eps_list": [0.04, 0.02]}"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.spacing_for(Some(0.02)).unwrap(), 0.005);
    }
}
