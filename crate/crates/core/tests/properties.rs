//! Property suites for the analytic kernels and predictors.

use proptest::prelude::*;

use holepoint_core::asymptotics::{self, LocalData};
use holepoint_core::geometry::{classify, Domain, LevelSetDomain};
use holepoint_core::green;

fn unit_vec_2d(angle: f64) -> [f64; 2] {
    [angle.cos(), angle.sin()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn g0_symmetry_and_positivity_2d(
        a1 in 0.0..std::f64::consts::TAU,
        a2 in 0.0..std::f64::consts::TAU,
        r1 in 1.001f64..5.0,
        r2 in 1.001f64..5.0,
    ) {
        let w = [r1 * unit_vec_2d(a1)[0], r1 * unit_vec_2d(a1)[1]];
        let z = [r2 * unit_vec_2d(a2)[0], r2 * unit_vec_2d(a2)[1]];
        prop_assume!((w[0] - z[0]).hypot(w[1] - z[1]) > 1e-9);
        let gwz = green::g0(&w, &z, 2).unwrap();
        let gzw = green::g0(&z, &w, 2).unwrap();
        prop_assert!((gwz - gzw).abs() <= 1e-12 * gwz.abs().max(1e-30));
        prop_assert!(gwz > 0.0);
    }

    #[test]
    fn g0_symmetry_dims_3_4(
        a1 in 0.0..std::f64::consts::TAU,
        mu in -0.99f64..0.99,
        r1 in 1.001f64..5.0,
        r2 in 1.001f64..5.0,
    ) {
        for dim in [3usize, 4] {
            let mut w = vec![0.0; dim];
            let mut z = vec![0.0; dim];
            w[0] = r1 * a1.cos();
            w[1] = r1 * a1.sin();
            z[0] = r2 * mu;
            z[dim - 1] = r2 * (1.0 - mu * mu).sqrt();
            let d: f64 = w.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum();
            prop_assume!(d.sqrt() > 1e-9);
            let gwz = green::g0(&w, &z, dim).unwrap();
            let gzw = green::g0(&z, &w, dim).unwrap();
            prop_assert!((gwz - gzw).abs() <= 1e-12 * gwz.abs().max(1e-30));
            prop_assert!(gwz > 0.0);
        }
    }

    #[test]
    fn b_matrix_spectrum_any_direction(
        x0 in -3.0f64..3.0,
        x1 in -3.0f64..3.0,
        x2 in -3.0f64..3.0,
        x3 in -3.0f64..3.0,
    ) {
        let xi = [x0, x1, x2, x3];
        let norm2: f64 = xi.iter().map(|v| v * v).sum();
        prop_assume!(norm2 > 1e-6);
        let s = asymptotics::b_matrix_spectrum(&xi).unwrap();
        prop_assert!((s[0] - (1.0 - 4.0)).abs() < 1e-10);
        for v in &s[1..] {
            prop_assert!((v - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn nondegenerate_offset_scales_exactly(
        u0 in 0.05f64..2.0,
        gx in 0.05f64..1.0,
        gy in -0.5f64..0.5,
        eps in 1e-6f64..0.05,
    ) {
        let ld = LocalData::new(
            2,
            vec![0.0, 0.0],
            u0,
            vec![gx, gy],
            vec![-1.0, 0.0, 0.0, -1.0],
            1.0,
        ).unwrap();
        let p1 = asymptotics::predict_nondegenerate(&ld, eps).unwrap();
        let p2 = asymptotics::predict_nondegenerate(&ld, eps / 2.0).unwrap();
        let expected = eps.ln().abs() / (eps / 2.0).ln().abs();
        let ratio = p2.points[0].offset / p1.points[0].offset;
        prop_assert!((ratio - expected).abs() < 1e-12);
    }

    #[test]
    fn degenerate_offsets_align_with_eigendirections(
        lx in -2.0f64..-0.1,
        ly in -2.0f64..-0.1,
        b in -0.3f64..0.3,
        u0 in 0.05f64..1.0,
    ) {
        let hess = vec![lx, b, b, ly];
        let eig = asymptotics::jacobi_eigen(&hess, 2);
        prop_assume!(eig.0.iter().all(|l| l.abs() > 1e-3));
        prop_assume!((eig.0[0] - eig.0[1]).abs() > 1e-3);
        let ld = LocalData::new(2, vec![0.0, 0.0], u0, vec![0.0, 0.0], hess.clone(), 1.0);
        prop_assume!(ld.is_ok());
        let pred = asymptotics::predict_degenerate(&ld.unwrap(), 0.01);
        prop_assume!(pred.is_ok());
        let pred = pred.unwrap();
        for pt in &pred.points {
            let lam = pt.eigenvalue.unwrap();
            // direction must be an eigenvector: H d = λ d
            let hd = [
                hess[0] * pt.direction[0] + hess[1] * pt.direction[1],
                hess[2] * pt.direction[0] + hess[3] * pt.direction[1],
            ];
            let dot = hd[0] * pt.direction[0] + hd[1] * pt.direction[1];
            let cos = dot / lam;
            prop_assert!((cos - 1.0).abs() <= 1e-10, "cos {cos}");
        }
    }

    #[test]
    fn classification_nested_under_refinement(
        cx in -0.4f64..0.4,
        cy in -0.4f64..0.4,
    ) {
        // nodes well inside at spacing h stay non-exterior at h/2
        let h = 1.0 / 24.0;
        let coarse = classify(Domain::Plain(LevelSetDomain::Disc { r: 1.0 }), h).unwrap();
        let fine = classify(Domain::Plain(LevelSetDomain::Disc { r: 1.0 }), h / 2.0).unwrap();
        let (i, j) = coarse.nearest_node(cx, cy);
        let p = coarse.node_pos(i, j);
        prop_assume!(coarse.domain.boundary_distance(p[0], p[1]) > h);
        let (fi, fj) = fine.nearest_node(p[0], p[1]);
        prop_assert_ne!(fine.class(fi, fj), holepoint_core::geometry::NodeClass::Exterior);
    }
}

#[test]
fn poisson_kernel_mass_across_interior_points() {
    for (sx, sy) in [(0.0, 0.0), (0.4, 0.3), (-0.6, 0.2), (0.1, -0.7)] {
        let m = green::poisson_kernel_mass(&[sx, sy], 2).unwrap();
        assert!((m - 1.0).abs() < 1e-8, "mass at ({sx},{sy}) = {m}");
    }
}
