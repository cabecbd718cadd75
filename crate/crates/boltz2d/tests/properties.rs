//! Property-based invariants: kernel round trips, collision geometry
//! identities, cutoff bounds, exponent-calculus relations, and threshold
//! equivalences over randomized parameter sweeps.

use boltz2d::kernel::{post_collision, post_collision_rotation_form, DeviationMatrix, KernelParams};
use boltz2d::math::smoothstep;
use boltz2d::mollifier::{indicator_i_zeta, indicator_u_zeta, MollifierParams};
use boltz2d::regularity::{admissibility_gap, exponent_a, exponent_q, p_alpha};
use boltz2d::{Mat2, Vec2};
use proptest::prelude::*;

fn admissible_kernel() -> impl Strategy<Value = KernelParams> {
    // delta close to 1 keeps eta0's window open for every (gamma, nu).
    (0.02f64..0.45, 0.05f64..0.98)
        .prop_filter_map("admissible", |(nu, gamma)| {
            let k = KernelParams::new(gamma, nu, 0.995, 1.0 / 0.995 + 1e-4).ok()?;
            (admissibility_gap(&k) > 1e-4).then_some(k)
        })
}

fn any_kernel() -> impl Strategy<Value = KernelParams> {
    (0.02f64..0.48, 0.05f64..0.98).prop_filter_map("valid", |(nu, gamma)| {
        KernelParams::new(gamma, nu, 0.995, 1.0 / 0.995 + 1e-4).ok()
    })
}

proptest! {
    #[test]
    fn g_vartheta_round_trip(k in any_kernel(), log_z in -6.0f64..8.0) {
        let z = 10f64.powf(log_z);
        let round = k.eval_g(k.vartheta(z)).unwrap();
        prop_assert!((round - z).abs() <= 1e-10 * (1.0 + z));
    }

    #[test]
    fn vartheta_odd(k in any_kernel(), z in -1e6f64..1e6) {
        prop_assume!(z != 0.0);
        prop_assert_eq!(k.vartheta(-z), -k.vartheta(z));
    }

    #[test]
    fn deviation_identities(theta in -1.57f64..1.57, x in -5.0f64..5.0, y in -5.0f64..5.0) {
        let dev = DeviationMatrix::new(theta);
        let v = Vec2::new(x, y);
        let img = dev.matrix().mul_vec(v);
        let expected = 0.5 * (1.0 - theta.cos()) * v.norm_sq();
        prop_assert!((img.norm_sq() - expected).abs() <= 1e-12 * (1.0 + expected));
        let n = dev.one_plus().op_norm();
        prop_assert!((n * n - 0.5 * (1.0 + theta.cos())).abs() <= 1e-12);
    }

    #[test]
    fn collision_forms_agree(
        vx in -4.0f64..4.0, vy in -4.0f64..4.0,
        sx in -4.0f64..4.0, sy in -4.0f64..4.0,
        theta in -1.57f64..1.57,
    ) {
        let v = Vec2::new(vx, vy);
        let vs = Vec2::new(sx, sy);
        let a = post_collision(v, vs, theta);
        let b = post_collision_rotation_form(v, vs, theta);
        prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn angular_equivalence(k in any_kernel(), z in -40.0f64..40.0, zeta in 0.01f64..0.95) {
        // |vartheta(z)| > zeta iff |z| < G(zeta), away from the boundary.
        prop_assume!(z != 0.0);
        let g = k.eval_g(zeta).unwrap();
        prop_assume!((z.abs() - g).abs() > 1e-9);
        prop_assert_eq!(k.vartheta(z).abs() > zeta, z.abs() < g);
    }

    #[test]
    fn phi_bounds_and_lipschitz(x in 0.0f64..30.0, y in 0.0f64..30.0) {
        let m = MollifierParams::new(0.01, 1.3).unwrap();
        let (px, py) = (m.phi(x).unwrap(), m.phi(y).unwrap());
        prop_assert!(px >= 2.0 * 0.01 - 1e-13 && px <= m.gamma_eps() + 1e-12);
        prop_assert!((px - py).abs() <= (x - y).abs() + 1e-12);
    }

    #[test]
    fn indicators_land_in_unit_interval(k in any_kernel(), z in -30.0f64..30.0, zeta in 0.01f64..0.4) {
        let i = indicator_i_zeta(z, zeta, &k).unwrap();
        prop_assert!((0.0..=1.0).contains(&i));
        prop_assert_eq!(i, indicator_i_zeta(-z, zeta, &k).unwrap());
        if let Ok(u) = indicator_u_zeta(z, zeta, &k) {
            prop_assert!((0.0..=1.0).contains(&u));
            prop_assert_eq!(u, indicator_u_zeta(-z, zeta, &k).unwrap());
        }
    }

    #[test]
    fn smoothstep_clamped_monotone(a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(smoothstep(lo) <= smoothstep(hi));
        prop_assert!((0.0..=1.0).contains(&smoothstep(a)));
    }

    #[test]
    fn exponent_fixed_point_and_cap(k in admissible_kernel()) {
        let a = exponent_a(&k).unwrap();
        prop_assert!(a > 0.0);
        prop_assert!((p_alpha(a, &k).unwrap() / a - 1.0).abs() < 1e-12);
        let exps = exponent_q(&k).unwrap();
        prop_assert!((exps.q - p_alpha(a.min(2.0), &k).unwrap()).abs() < 1e-12);
        prop_assert!(exps.sobolev_sup < 2.0);
    }

    #[test]
    fn p_alpha_monotone_ratio_decreasing(k in admissible_kernel(), a1 in 0.01f64..6.0, a2 in 0.01f64..6.0) {
        prop_assume!((a1 - a2).abs() > 1e-9);
        let (lo, hi) = if a1 < a2 { (a1, a2) } else { (a2, a1) };
        let (plo, phi) = (p_alpha(lo, &k).unwrap(), p_alpha(hi, &k).unwrap());
        prop_assert!(plo < phi);
        prop_assert!(plo / lo > phi / hi);
    }

    #[test]
    fn threshold_equivalences(k in admissible_kernel()) {
        // q > 1 iff nu < 1/3 and gamma > (2nu+2nu^2)/(1-3nu);
        // q > 2 iff nu < 1/4 and gamma > (6nu+3nu^2)/(1-4nu);
        // checked away from the predicate boundaries.
        let (g, n) = (k.gamma(), k.nu());
        let exps = exponent_q(&k).unwrap();
        let closed_1 = n < 1.0 / 3.0 && g > (2.0 * n + 2.0 * n * n) / (1.0 - 3.0 * n);
        let closed_2 = n < 0.25 && g > (6.0 * n + 3.0 * n * n) / (1.0 - 4.0 * n);
        if (exps.q - 1.0).abs() > 1e-9 {
            prop_assert_eq!(exps.q > 1.0, closed_1);
        }
        if (exps.q - 2.0).abs() > 1e-9 {
            prop_assert_eq!(exps.q > 2.0, closed_2);
        }
    }

    #[test]
    fn psd_core_determinant_dominates_floor(
        x1 in -2.0f64..2.0, y1 in -2.0f64..2.0,
        x2 in -2.0f64..2.0, y2 in -2.0f64..2.0,
        t in 0.01f64..2.0, zeta in 0.02f64..0.3,
    ) {
        let v1 = Vec2::new(x1, y1);
        let v2 = Vec2::new(x2, y2);
        let sigma = v1.outer(v1) + v2.outer(v2);
        let d = boltz2d::malliavin::regularized_det(&sigma, t, zeta, 0.25).unwrap();
        let u = boltz2d::malliavin::u_floor(t, zeta, 0.25);
        prop_assert!(d >= u * u * (1.0 - 1e-12));
        if sigma.trace() > 1e-9 {
            prop_assert!(d > u * u);
        }
        let _ = Mat2::IDENTITY;
    }
}
