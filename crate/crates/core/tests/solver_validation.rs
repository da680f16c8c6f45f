//! Cross-module validation: closed-form oracles, refinement orders and the
//! punctured-domain critical-point census on moderate grids.

use std::sync::Arc;

use holepoint_core::asymptotics::{self, LocalData, ScalingLaw};
use holepoint_core::critpoints::{self, CritClass};
use holepoint_core::elliptic::{EllipticSolver, Field};
use holepoint_core::geometry::{classify, Domain, LevelSetDomain, PuncturedDomain};

fn disc_solver(h: f64) -> EllipticSolver {
    let g = classify(Domain::Plain(LevelSetDomain::Disc { r: 1.0 }), h).unwrap();
    EllipticSolver::new(Arc::new(g))
}

fn punctured_solver(p: [f64; 2], eps: f64, h: f64) -> EllipticSolver {
    let pd = PuncturedDomain::new(LevelSetDomain::Disc { r: 1.0 }, p, eps).unwrap();
    let g = classify(Domain::Punctured(pd), h).unwrap();
    EllipticSolver::new(Arc::new(g))
}

fn torsion(solver: &EllipticSolver) -> Field {
    let rhs = solver.grid().eval(|_, _| 1.0);
    solver.solve_poisson(&rhs).unwrap()
}

/// sup-norm error of the disc torsion solve against (1 - |x|²)/4.
fn disc_torsion_sup_error(h: f64) -> f64 {
    let s = disc_solver(h);
    let u = torsion(&s);
    let g = s.grid();
    let mut emax = 0.0f64;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = g.node_index(i, j);
            let v = u.value_at_node(k);
            if !v.is_nan() {
                let p = g.node_pos(i, j);
                let exact = (1.0 - p[0] * p[0] - p[1] * p[1]) / 4.0;
                emax = emax.max((v - exact).abs());
            }
        }
    }
    emax
}

/// sup-norm error for the manufactured solution u = (1 - |x|²) eˣ / 4,
/// which vanishes on the unit circle and is not a polynomial.
fn manufactured_sup_error(h: f64) -> f64 {
    let s = disc_solver(h);
    let rhs = s
        .grid()
        .eval(|x, y| (3.0 + x * x + y * y + 4.0 * x) * x.exp() / 4.0);
    let u = s.solve_poisson(&rhs).unwrap();
    let g = s.grid();
    let mut emax = 0.0f64;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = g.node_index(i, j);
            let v = u.value_at_node(k);
            if !v.is_nan() {
                let p = g.node_pos(i, j);
                let exact = (1.0 - p[0] * p[0] - p[1] * p[1]) * p[0].exp() / 4.0;
                emax = emax.max((v - exact).abs());
            }
        }
    }
    emax
}

#[test]
fn refinement_order_at_least_1_8() {
    // the disc torsion function is quadratic, so the cut stencil reproduces
    // it to solver tolerance at every spacing …
    for h in [1.0 / 32.0, 1.0 / 64.0] {
        let e = disc_torsion_sup_error(h);
        assert!(e <= 1e-9, "torsion sup error {e:.3e} at h = {h}");
    }
    // … the refinement order is measured on a non-polynomial solution
    let e1 = manufactured_sup_error(1.0 / 32.0);
    let e2 = manufactured_sup_error(1.0 / 64.0);
    let order = (e1 / e2).ln() / 2f64.ln();
    assert!(order >= 1.8, "observed order {order} (errors {e1:.3e}, {e2:.3e})");
}

#[test]
fn punctured_disc_torsion_census_and_persistence() {
    // coarse instance of the punctured-disc experiment
    let eps = 0.04;
    let h = eps / 4.0;
    let p = [0.3, 0.0];
    let s0 = disc_solver(h);
    let u0 = torsion(&s0);
    let cs0 = critpoints::find_critical_points(&u0, 3.0 * h).unwrap();
    assert_eq!(cs0.points.len(), 1);
    assert_eq!(cs0.points[0].class, CritClass::Max);

    let s1 = punctured_solver(p, eps, h);
    let u1 = torsion(&s1);
    let cs1 = critpoints::find_critical_points(&u1, 3.0 * h).unwrap();
    assert_eq!(cs1.points.len(), 2, "points: {:?}", cs1.points);
    assert_eq!(cs1.count_by_class(CritClass::Max), 1);
    assert_eq!(cs1.count_by_class(CritClass::Saddle), 1);

    let audit = critpoints::poincare_hopf_audit(&cs1, &u1).unwrap();
    assert_eq!(audit.index_sum, 0);
    assert!(audit.pass);

    let pairing = critpoints::persistence_match(&cs1, &cs0, 0.35).unwrap();
    assert_eq!(pairing.pairs.len(), 1);
    assert_eq!(pairing.extras.len(), 1);
    let extra = &cs1.points[pairing.extras[0]];
    assert_eq!(extra.class, CritClass::Saddle);
    assert_eq!(extra.index, Some(-1));
    // both critical points sit on the symmetry axis
    for pt in &cs1.points {
        assert!(pt.location[1].abs() <= 2.0 * h);
    }

    // the saddle location matches the admissible branch of the location law
    let ld = LocalData::from_field(&u0, p, 1.0).unwrap();
    match asymptotics::necessary_location_check(&extra.location, &ld, eps, 0.55) {
        asymptotics::LocationVerdict::MatchNondegenerate { .. } => {}
        v => panic!("saddle failed the location check: {v:?}"),
    }
}

#[test]
fn index_sum_stable_under_refinement() {
    let eps = 0.08;
    let p = [0.3, 0.0];
    let mut sums = Vec::new();
    for h in [eps / 4.0, eps / 8.0] {
        let s = punctured_solver(p, eps, h);
        let u = torsion(&s);
        let cs = critpoints::find_critical_points(&u, 3.0 * h).unwrap();
        let audit = critpoints::poincare_hopf_audit(&cs, &u).unwrap();
        sums.push(audit.index_sum);
    }
    assert_eq!(sums[0], sums[1]);
}

#[test]
fn centered_hole_ring_matches_radial_module() {
    // centred-hole disc torsion: the critical set is a ring whose radius the
    // radial module reproduces
    let eps = 0.04;
    let h = eps / 4.0;
    let s = punctured_solver([0.0, 0.0], eps, h);
    let u = torsion(&s);
    let cs = critpoints::find_critical_points(&u, 3.0 * h).unwrap();
    let ring = cs.ring.expect("expected a ring diagnostic");
    let rp = holepoint_core::radial::RadialProblem {
        dim: 2,
        eps,
        n: 4096,
        nl: holepoint_core::elliptic::Nonlinearity::Torsion,
    };
    let sol = holepoint_core::radial::solve_radial(&rp).unwrap();
    assert!(
        (ring.mean_radius - sol.r_eps).abs() <= 3.0 * h,
        "ring {} vs radial {}",
        ring.mean_radius,
        sol.r_eps
    );
}

#[test]
fn fit_rate_recovers_constant_under_noise() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20240811);
    let truth = [2.0f64, 0.0];
    let eps_list = [0.04f64, 0.02, 0.01, 0.005];
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let recs: Vec<(f64, Vec<f64>)> = eps_list
            .iter()
            .map(|&e| {
                let noise = 1.0 + 0.05 * (2.0 * rng.gen::<f64>() - 1.0);
                (
                    e,
                    vec![truth[0] / e.ln().abs() * noise, truth[1] / e.ln().abs()],
                )
            })
            .collect();
        let (c, _) = asymptotics::fit_rate(&recs, ScalingLaw::Log).unwrap();
        worst = worst.max((c[0] - truth[0]).abs() / truth[0]);
    }
    assert!(worst <= 0.10, "worst relative error {worst}");
}
