//! Command pipelines: solve / critpoints / sweep / radial-sweep /
//! green-verify / predict.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};

use holepoint_core::asymptotics::{self, LocalData, Prediction, ScalingLaw};
use holepoint_core::critpoints::{self, CritClass, CritSet};
use holepoint_core::elliptic::{EllipticSolver, Field, Nonlinearity};
use holepoint_core::geometry::{classify, Domain};
use holepoint_core::green;
use holepoint_core::radial;

use crate::config::{
    canonical_domain_json, Command, ExperimentConfig, NonlinearitySpec, PredictMode, Timing,
};
use crate::fieldfile;
use crate::report::{
    EnvStamp, ExtraMatch, FitSummary, GreenVerifyEntry, GreenVerifyReport, RadialReport,
    RadialReportEntry, SweepData, SweepRecord, SweepReport,
};
use crate::serialize::{points_json, PredictionJson, RingJson};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success,
    ConfigError,
    PartialFailure,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::ConfigError => 1,
            ExitStatus::PartialFailure => 2,
        }
    }
}

pub struct RunOutput {
    pub status: ExitStatus,
    pub summary: String,
}

fn out_path(dir: Option<&Path>, name: &str) -> PathBuf {
    match dir {
        Some(d) => d.join(name),
        None => PathBuf::from(name),
    }
}

/// Solves the configured problem on one grid; returns the field and, for the
/// eigen nonlinearity, the eigenvalue.
fn solve_on(
    solver: &EllipticSolver,
    nl: &NonlinearitySpec,
) -> Result<(Field, Option<f64>)> {
    match nl {
        NonlinearitySpec::Torsion => {
            let rhs = solver.grid().eval(|_, _| 1.0);
            Ok((solver.solve_poisson(&rhs).map_err(|e| anyhow!("{e}"))?, None))
        }
        NonlinearitySpec::Eigen => {
            let (lambda, phi) = solver.solve_eigen().map_err(|e| anyhow!("{e}"))?;
            Ok((phi, Some(lambda)))
        }
        NonlinearitySpec::Linear { c0, c1 } => {
            let (c0, c1) = (*c0, *c1);
            let f = move |s: f64| c0 + c1 * s;
            let df = move |_: f64| c1;
            let zero = Field::from_fn(solver.grid().clone(), |_, _| 0.0);
            let u = solver
                .solve_semilinear(&Nonlinearity::Custom { f: &f, df: &df }, &zero)
                .map_err(|e| anyhow!("{e}"))?;
            Ok((u, None))
        }
        NonlinearitySpec::Exp => {
            let f = |s: f64| s.exp();
            let df = |s: f64| s.exp();
            let zero = Field::from_fn(solver.grid().clone(), |_, _| 0.0);
            let u = solver
                .solve_semilinear(&Nonlinearity::Custom { f: &f, df: &df }, &zero)
                .map_err(|e| anyhow!("{e}"))?;
            Ok((u, None))
        }
    }
}

fn f_value(nl: &NonlinearitySpec, u0p: f64, lambda: Option<f64>) -> f64 {
    match nl {
        NonlinearitySpec::Torsion => 1.0,
        NonlinearitySpec::Eigen => lambda.unwrap_or(f64::NAN) * u0p,
        NonlinearitySpec::Linear { c0, c1 } => c0 + c1 * u0p,
        NonlinearitySpec::Exp => u0p.exp(),
    }
}

pub fn run(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<RunOutput> {
    match cfg.command {
        Command::Solve => run_solve(cfg, out_dir),
        Command::Critpoints => run_critpoints(cfg, out_dir),
        Command::Sweep => run_sweep(cfg, out_dir),
        Command::RadialSweep => run_radial_sweep(cfg, out_dir),
        Command::GreenVerify => run_green_verify(cfg, out_dir),
        Command::Predict => run_predict(cfg, out_dir),
    }
}

fn run_solve(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<RunOutput> {
    let dspec = cfg.domain.as_ref().expect("validated");
    let h = cfg.spacing_for(dspec.hole.as_ref().map(|x| x.eps))?;
    let domain = dspec.build(None)?;
    let grid = classify(domain, h).map_err(|e| anyhow!("{e}"))?;
    let solver = EllipticSolver::new(Arc::new(grid));
    let (field, lambda) = solve_on(&solver, &cfg.nonlinearity)?;
    let mut summary = format!(
        "solve: {} unknowns, residual {:.3e}, {} linear iterations\n",
        solver.operator().unknowns(),
        field.meta.residual,
        field.meta.linear_iterations
    );
    if let Some(l) = lambda {
        summary.push_str(&format!("eigenvalue: {:.8}\n", l));
    }
    if let Some(name) = &cfg.output.field {
        let hash = fieldfile::fnv1a64(canonical_domain_json(dspec).as_bytes());
        let path = out_path(out_dir, name);
        fieldfile::write_field(&path, &field, hash)?;
        summary.push_str(&format!("field written to {}\n", path.display()));
    }
    Ok(RunOutput {
        status: ExitStatus::Success,
        summary,
    })
}

fn audit_string(cs: &CritSet, field: &Field) -> (String, Option<i64>) {
    match critpoints::poincare_hopf_audit(cs, field) {
        Ok(a) => (
            format!(
                "{} (sum {} target {})",
                if a.pass { "PASS" } else { "FAIL" },
                a.index_sum,
                a.target
            ),
            Some(a.index_sum),
        ),
        Err(e) => (format!("INAPPLICABLE: {e}"), cs.index_sum()),
    }
}

fn run_critpoints(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<RunOutput> {
    let dspec = cfg.domain.as_ref().expect("validated");
    let h = cfg.spacing_for(dspec.hole.as_ref().map(|x| x.eps))?;
    let domain = dspec.build(None)?;
    let grid = classify(domain, h).map_err(|e| anyhow!("{e}"))?;
    let solver = EllipticSolver::new(Arc::new(grid));
    let (field, _) = solve_on(&solver, &cfg.nonlinearity)?;
    let cs = critpoints::find_critical_points(&field, cfg.probes.margin_factor * h)
        .map_err(|e| anyhow!("{e}"))?;
    let (audit, index_sum) = audit_string(&cs, &field);
    let doc = serde_json::json!({
        "environment": EnvStamp::current(),
        "h": h,
        "points": points_json(&cs),
        "ring": cs.ring.as_ref().map(RingJson::from),
        "index_sum": index_sum,
        "audit": audit,
        "dropped_seeds": cs.dropped_seeds,
    });
    let mut summary = format!(
        "critpoints: {} points, audit {}\n",
        cs.points.len(),
        audit
    );
    if let Some(r) = &cs.ring {
        summary.push_str(&format!(
            "ring: radius {:.5} with {} members\n",
            r.mean_radius, r.member_count
        ));
    }
    if let Some(name) = &cfg.output.json {
        let path = out_path(out_dir, name);
        crate::report::write_text(&path, &format!("{:#}\n", doc))?;
        summary.push_str(&format!("report written to {}\n", path.display()));
    }
    Ok(RunOutput {
        status: ExitStatus::Success,
        summary,
    })
}

struct SweepEntryOutcome {
    data: SweepData,
    /// measured offset of the primary extra point from the hole centre
    measured_offset: Option<[f64; 2]>,
}

fn sweep_entry(
    cfg: &ExperimentConfig,
    eps: f64,
    h: f64,
) -> Result<SweepEntryOutcome> {
    let dspec = cfg.domain.as_ref().expect("validated");
    let hole = dspec.hole.as_ref().expect("validated");
    let p = hole.p;
    let margin = cfg.probes.margin_factor * h;

    // limit problem on the unpunctured domain at the same spacing
    let dom0 = Domain::Plain(dspec.outer.to_domain());
    let g0 = classify(dom0, h).map_err(|e| anyhow!("limit grid: {e}"))?;
    let s0 = EllipticSolver::new(Arc::new(g0));
    let (u0, lambda0) = solve_on(&s0, &cfg.nonlinearity)?;
    let cs0 = critpoints::find_critical_points(&u0, margin).map_err(|e| anyhow!("{e}"))?;

    let u0p = u0
        .sample_value(p[0], p[1])
        .map_err(|e| anyhow!("hole centre not sampleable: {e}"))?;
    let ld = LocalData::from_field(&u0, p, f_value(&cfg.nonlinearity, u0p, lambda0))
        .map_err(|e| anyhow!("{e}"))?;
    let prediction: Prediction = if ld.gradient_is_small() {
        asymptotics::predict_degenerate(&ld, eps).map_err(|e| anyhow!("{e}"))?
    } else {
        asymptotics::predict_nondegenerate(&ld, eps).map_err(|e| anyhow!("{e}"))?
    };

    // punctured solve
    let dom1 = dspec.build(Some(eps))?;
    let g1 = classify(dom1, h).map_err(|e| anyhow!("punctured grid: {e}"))?;
    let s1 = EllipticSolver::new(Arc::new(g1));
    let (ue, _) = solve_on(&s1, &cfg.nonlinearity)?;
    let cs1 = critpoints::find_critical_points(&ue, margin).map_err(|e| anyhow!("{e}"))?;
    let (audit, index_sum) = audit_string(&cs1, &ue);

    // base points swallowed by the hole cannot persist; drop them before
    // pairing (this is the −1 of the degenerate count bookkeeping)
    let mut cs0_alive = cs0.clone();
    cs0_alive
        .points
        .retain(|pt| (pt.location[0] - p[0]).hypot(pt.location[1] - p[1]) > eps + margin);
    let pairing = critpoints::persistence_match(&cs1, &cs0_alive, cfg.probes.pairing_radius)
        .map_err(|e| anyhow!("{e}"))?;

    // primary extra: the saddle-classified extra closest to a predicted
    // location (falling back to the closest extra of any class)
    let mut extra: Option<ExtraMatch> = None;
    let mut measured_offset = None;
    let candidate = |want_saddle: bool| -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for &ei in &pairing.extras {
            let pt = &cs1.points[ei];
            if want_saddle && pt.class != CritClass::Saddle {
                continue;
            }
            for (qi, q) in prediction.points.iter().enumerate() {
                let d = (pt.location[0] - q.location[0]).hypot(pt.location[1] - q.location[1]);
                if best.map_or(true, |(_, _, bd)| d < bd) {
                    best = Some((ei, qi, d));
                }
            }
        }
        best
    };
    if let Some((ei, qi, d)) = candidate(true).or_else(|| candidate(false)) {
        let pt = &cs1.points[ei];
        let q = &prediction.points[qi];
        let mv = [pt.location[0] - p[0], pt.location[1] - p[1]];
        let pv = [q.location[0] - p[0], q.location[1] - p[1]];
        let mn = mv[0].hypot(mv[1]);
        let pn = pv[0].hypot(pv[1]);
        let cosang = ((mv[0] * pv[0] + mv[1] * pv[1]) / (mn * pn).max(1e-300)).clamp(-1.0, 1.0);
        let verdict = asymptotics::necessary_location_check(
            &pt.location,
            &ld,
            eps,
            cfg.probes.location_tolerance,
        );
        extra = Some(ExtraMatch {
            sad_x: pt.location[0],
            sad_y: pt.location[1],
            pred_x: q.location[0],
            pred_y: q.location[1],
            err_abs: d,
            err_rel: d / pn.max(1e-300),
            align_deg: cosang.acos().to_degrees(),
            measured_value: pt.value,
            location_verdict: format!("{verdict:?}"),
        });
        measured_offset = Some(mv);
    }

    Ok(SweepEntryOutcome {
        data: SweepData {
            crit_count: cs1.points.len(),
            index_sum,
            audit,
            points: points_json(&cs1),
            ring: cs1.ring.as_ref().map(RingJson::from),
            prediction: PredictionJson::from(&prediction),
            extra,
            paired: pairing.pairs.len(),
            extras_total: pairing.extras.len(),
            dropped_seeds: cs1.dropped_seeds,
        },
        measured_offset,
    })
}

fn run_sweep(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<RunOutput> {
    let eps_list = cfg.eps_list.as_ref().expect("validated");
    let mut records = Vec::new();
    let mut offsets: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut failed = false;
    for &eps in eps_list {
        let t0 = Instant::now();
        let h = cfg.spacing_for(Some(eps))?;
        let outcome = sweep_entry(cfg, eps, h);
        let runtime_s = match cfg.timing {
            Timing::Wall => t0.elapsed().as_secs_f64(),
            Timing::None => 0.0,
        };
        match outcome {
            Ok(o) => {
                if let Some(mv) = o.measured_offset {
                    offsets.push((eps, vec![mv[0], mv[1]]));
                }
                records.push(SweepRecord {
                    eps,
                    h,
                    runtime_s,
                    data: Some(o.data),
                    error: None,
                });
            }
            Err(e) => {
                failed = true;
                records.push(SweepRecord {
                    eps,
                    h,
                    runtime_s,
                    data: None,
                    error: Some(format!("{e:#}")),
                });
            }
        }
    }
    let fit = if offsets.len() >= 3 {
        asymptotics::fit_rate(&offsets, ScalingLaw::Log)
            .ok()
            .map(|(c, residual)| FitSummary {
                law: "LOG".into(),
                c,
                residual,
                records_used: offsets.len(),
            })
    } else {
        None
    };
    let report = SweepReport {
        command: "sweep".into(),
        environment: EnvStamp::current(),
        records,
        fit,
    };
    let mut summary = String::new();
    for r in &report.records {
        match (&r.data, &r.error) {
            (Some(d), _) => summary.push_str(&format!(
                "eps {:.4}: {} critical points, audit {}\n",
                r.eps, d.crit_count, d.audit
            )),
            (None, Some(e)) => summary.push_str(&format!("eps {:.4}: ERROR {e}\n", r.eps)),
            _ => {}
        }
    }
    if let Some(f) = &report.fit {
        summary.push_str(&format!(
            "fitted LOG constant: ({:.5}, {:.5}), residual {:.3e}\n",
            f.c[0], f.c[1], f.residual
        ));
    }
    if let Some(name) = &cfg.output.csv {
        let path = out_path(out_dir, name);
        crate::report::write_text(&path, &report.to_csv())?;
        summary.push_str(&format!("csv written to {}\n", path.display()));
    }
    if let Some(name) = &cfg.output.json {
        let path = out_path(out_dir, name);
        crate::report::write_text(&path, &report.to_json()?)?;
        summary.push_str(&format!("json written to {}\n", path.display()));
    }
    Ok(RunOutput {
        status: if failed {
            ExitStatus::PartialFailure
        } else {
            ExitStatus::Success
        },
        summary,
    })
}

fn run_radial_sweep(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<RunOutput> {
    let rspec = cfg.radial.as_ref().expect("validated");
    let eps_list = cfg.eps_list.as_ref().expect("validated");
    let entries = match &cfg.nonlinearity {
        NonlinearitySpec::Torsion => {
            radial::radial_sweep(rspec.dim, eps_list, &Nonlinearity::Torsion, rspec.n)
        }
        NonlinearitySpec::Linear { c0, c1 } => {
            let (c0, c1) = (*c0, *c1);
            let f = move |s: f64| c0 + c1 * s;
            let df = move |_: f64| c1;
            radial::radial_sweep(
                rspec.dim,
                eps_list,
                &Nonlinearity::Custom { f: &f, df: &df },
                rspec.n,
            )
        }
        NonlinearitySpec::Exp => {
            let f = |s: f64| s.exp();
            let df = |s: f64| s.exp();
            radial::radial_sweep(
                rspec.dim,
                eps_list,
                &Nonlinearity::Custom { f: &f, df: &df },
                rspec.n,
            )
        }
        NonlinearitySpec::Eigen => bail!("radial-sweep does not support eigen"),
    }
    .map_err(|e| anyhow!("{e}"))?;

    let mut failed = false;
    let report_entries: Vec<RadialReportEntry> = entries
        .iter()
        .map(|e| match &e.outcome {
            Ok(d) => RadialReportEntry {
                eps: e.eps,
                n: e.n,
                r_eps: Some(d.r_eps),
                ratio_to_law: Some(d.ratio_to_law),
                pred_printed: Some(d.pred_printed),
                pred_cross: Some(d.pred_cross),
                newton_iters: d.newton_iterations,
                error: None,
            },
            Err(err) => {
                failed = true;
                RadialReportEntry {
                    eps: e.eps,
                    n: e.n,
                    r_eps: None,
                    ratio_to_law: None,
                    pred_printed: None,
                    pred_cross: None,
                    newton_iters: 0,
                    error: Some(format!("{err}")),
                }
            }
        })
        .collect();
    let report = RadialReport {
        command: "radial-sweep".into(),
        environment: EnvStamp::current(),
        dim: rspec.dim,
        entries: report_entries,
    };
    let mut summary = String::new();
    for e in &report.entries {
        match (&e.r_eps, &e.error) {
            (Some(r), _) => summary.push_str(&format!(
                "eps {:.2e}: r_eps {:.6}, ratio {:.6}\n",
                e.eps,
                r,
                e.ratio_to_law.unwrap_or(f64::NAN)
            )),
            (None, Some(err)) => summary.push_str(&format!("eps {:.2e}: ERROR {err}\n", e.eps)),
            _ => {}
        }
    }
    if let Some(name) = &cfg.output.csv {
        let path = out_path(out_dir, name);
        crate::report::write_text(&path, &report.to_csv())?;
        summary.push_str(&format!("csv written to {}\n", path.display()));
    }
    if let Some(name) = &cfg.output.json {
        let path = out_path(out_dir, name);
        crate::report::write_text(&path, &report.to_json()?)?;
        summary.push_str(&format!("json written to {}\n", path.display()));
    }
    Ok(RunOutput {
        status: if failed {
            ExitStatus::PartialFailure
        } else {
            ExitStatus::Success
        },
        summary,
    })
}

fn run_green_verify(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<RunOutput> {
    let dspec = cfg.domain.as_ref().expect("validated");
    let hole = dspec.hole.as_ref().expect("validated");
    let eps_list = cfg.eps_list.as_ref().expect("validated");
    let mut entries = Vec::new();
    let mut failed = false;
    for &eps in eps_list {
        let h = cfg.spacing_for(Some(eps))?;
        match green::psi_eps_verify(hole.p, eps, h) {
            Ok(rep) => entries.push(GreenVerifyEntry {
                eps,
                h,
                max_deviation: Some(rep.max_deviation),
                error: None,
            }),
            Err(e) => {
                failed = true;
                entries.push(GreenVerifyEntry {
                    eps,
                    h,
                    max_deviation: None,
                    error: Some(format!("{e}")),
                });
            }
        }
    }
    let devs: Vec<f64> = entries.iter().filter_map(|e| e.max_deviation).collect();
    let decreasing = devs.len() >= 2 && devs.windows(2).all(|w| w[1] < w[0]);

    // static kernel identities
    let mut kernel_checks = Vec::new();
    let v = green::g0(&[2.0, 0.0, 0.0], &[0.6, 0.8, 0.0], 3).map_err(|e| anyhow!("{e}"))?;
    kernel_checks.push(("g0_boundary_dim3".to_string(), v.abs()));
    let v = green::g0(&[2.0, 0.0, 0.0], &[3.0, 0.0, 0.0], 3).map_err(|e| anyhow!("{e}"))?;
    let hand = (1.0 - 0.2) / (4.0 * std::f64::consts::PI);
    kernel_checks.push(("g0_hand_value_dim3".to_string(), (v - hand).abs()));
    let a = green::g0(&[1.3, 0.4], &[2.0, -1.0], 2).map_err(|e| anyhow!("{e}"))?;
    let b = green::g0(&[2.0, -1.0], &[1.3, 0.4], 2).map_err(|e| anyhow!("{e}"))?;
    kernel_checks.push(("g0_symmetry_dim2".to_string(), (a - b).abs()));
    for (name, poly, s) in [
        ("poisson_identity_const", green::QuadPoly::constant(2, 1.0), [0.0, 0.0]),
        ("poisson_identity_linear", green::QuadPoly::coordinate(2, 0), [0.2, -0.1]),
        ("poisson_identity_quadratic", green::QuadPoly::radius_squared(2), [0.0, 0.0]),
    ] {
        let r = green::poisson_identity_check(&poly, &s, 2).map_err(|e| anyhow!("{e}"))?;
        kernel_checks.push((name.to_string(), r));
    }

    let report = GreenVerifyReport {
        command: "green-verify".into(),
        environment: EnvStamp::current(),
        p: hole.p,
        probe_radius: 0.2,
        entries,
        deviations_decreasing: decreasing,
        kernel_checks,
    };
    let mut summary = String::new();
    for e in &report.entries {
        match (e.max_deviation, &e.error) {
            (Some(d), _) => summary.push_str(&format!("eps {:.4}: deviation {:.6e}\n", e.eps, d)),
            (None, Some(err)) => summary.push_str(&format!("eps {:.4}: ERROR {err}\n", e.eps)),
            _ => {}
        }
    }
    summary.push_str(&format!("deviations decreasing: {}\n", decreasing));
    if let Some(name) = &cfg.output.json {
        let path = out_path(out_dir, name);
        crate::report::write_text(&path, &report.to_json()?)?;
        summary.push_str(&format!("json written to {}\n", path.display()));
    }
    Ok(RunOutput {
        status: if failed {
            ExitStatus::PartialFailure
        } else {
            ExitStatus::Success
        },
        summary,
    })
}

fn run_predict(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<RunOutput> {
    let spec = cfg.local_data.as_ref().expect("validated");
    let prediction = match spec.mode {
        PredictMode::Radial => {
            asymptotics::predict_radial(spec.dim, spec.eps, spec.u0_at_p, spec.f_at_u0p)
                .map_err(|e| anyhow!("{e}"))?
        }
        mode => {
            let ld = LocalData::new(
                spec.dim,
                spec.p.clone(),
                spec.u0_at_p,
                spec.grad.clone(),
                spec.hess.clone(),
                spec.f_at_u0p,
            )
            .map_err(|e| anyhow!("{e}"))?;
            let degen = match mode {
                PredictMode::Auto => ld.gradient_is_small(),
                PredictMode::Degenerate => true,
                _ => false,
            };
            if degen {
                asymptotics::predict_degenerate(&ld, spec.eps).map_err(|e| anyhow!("{e}"))?
            } else {
                asymptotics::predict_nondegenerate(&ld, spec.eps).map_err(|e| anyhow!("{e}"))?
            }
        }
    };
    let json = PredictionJson::from(&prediction);
    let text = format!("{}\n", serde_json::to_string_pretty(&json)?);
    let mut summary = format!(
        "prediction: {} with count delta {}{}\n",
        json.kind,
        json.count_delta,
        if json.count_exact { "" } else { " (lower bound)" }
    );
    if let Some(name) = &cfg.output.json {
        let path = out_path(out_dir, name);
        crate::report::write_text(&path, &text)?;
        summary.push_str(&format!("json written to {}\n", path.display()));
    } else {
        summary.push_str(&text);
    }
    Ok(RunOutput {
        status: ExitStatus::Success,
        summary,
    })
}

/// Loads a config file and runs it; maps config problems to exit code 1.
pub fn run_config_file(path: &Path, out_dir: Option<&Path>) -> (i32, String) {
    let text = match std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
    {
        Ok(t) => t,
        Err(e) => return (ExitStatus::ConfigError.code(), format!("config error: {e:#}\n")),
    };
    let cfg = match ExperimentConfig::from_json(&text) {
        Ok(c) => c,
        Err(e) => return (ExitStatus::ConfigError.code(), format!("config error: {e:#}\n")),
    };
    match run(&cfg, out_dir) {
        Ok(out) => (out.status.code(), out.summary),
        Err(e) => (ExitStatus::PartialFailure.code(), format!("run failed: {e:#}\n")),
    }
}
