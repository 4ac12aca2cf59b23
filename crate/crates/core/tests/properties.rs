use proptest::prelude::*;

use voigt_lab::dynamics::{SimState, VoigtParams, Workspace};
use voigt_lab::init::{random_field, random_solenoidal};
use voigt_lab::io::{parse_config, parse_config_with, read_snapshot, write_snapshot};
use voigt_lab::spectral::{
    dealias_truncate, helmholtz_apply, helmholtz_inverse, leray_project, sobolev_norm, sobolev_seminorm, GridSpec,
    Transform, Truncation,
};
use voigt_lab::Field;

fn grid() -> impl Strategy<Value = GridSpec> {
    (2usize..=3, prop::sample::select(vec![4usize, 6, 8]))
        .prop_map(|(d, n)| GridSpec::tiny(d, n).unwrap())
}

fn run_grid() -> impl Strategy<Value = GridSpec> {
    (2usize..=3, prop::sample::select(vec![8usize, 10, 12]))
        .prop_map(|(d, n)| GridSpec::new(d, n).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projection_is_idempotent_and_self_adjoint(g in grid(), s in any::<u64>()) {
        let mut f: Field = random_field(g, g.dim(), s);
        f.zero_nyquist();
        let h: Field = {
            let mut h = random_field(g, g.dim(), s ^ 0x5555);
            h.zero_nyquist();
            h
        };
        let p = leray_project(&f);
        prop_assert!(leray_project(&p).sub(&p).max_abs() <= 1e-14 * p.max_abs().max(1.0));
        prop_assert!(p.divergence_defect() < 1e-13);
        let lhs = p.inner(&h);
        let rhs = f.inner(&leray_project(&h));
        prop_assert!((lhs - rhs).abs() <= 1e-12 * f.norm_sq().sqrt() * h.norm_sq().sqrt());
    }

    #[test]
    fn transform_round_trip(g in grid(), s in any::<u64>()) {
        let f: Field = random_field(g, g.dim(), s);
        let mut tr = Transform::<f64>::new(g);
        let phys = tr.to_physical(&f).unwrap();
        let back = tr.to_spectral(&phys).unwrap();
        prop_assert!(back.sub(&f).max_abs() <= 1e-13 * f.max_abs());
    }

    #[test]
    fn helmholtz_inverse_undoes_apply(g in grid(), s in any::<u64>(), alpha in 0.0f64..0.5) {
        let f: Field = random_solenoidal(g, s);
        let round = helmholtz_inverse(&helmholtz_apply(&f, alpha).unwrap(), alpha).unwrap();
        prop_assert!(round.sub(&f).max_abs() <= 1e-12 * f.max_abs().max(1e-300));
    }

    #[test]
    fn poincare_inequality(g in grid(), s in any::<u64>()) {
        let f: Field = random_solenoidal(g, s);
        let lo = std::f64::consts::TAU * sobolev_norm(&f, 0.0);
        prop_assert!(sobolev_seminorm(&f, 1.0) >= lo * (1.0 - 1e-14));
    }

    #[test]
    fn bilinear_is_antisymmetric(g in grid(), s in any::<u64>()) {
        let (a, b, c): (Field, Field, Field) =
            (random_solenoidal(g, s), random_solenoidal(g, s ^ 1), random_solenoidal(g, s ^ 2));
        let mut ws = Workspace::<f64>::new(g);
        let x = ws.bilinear(&a, &b).unwrap();
        let y = ws.bilinear(&a, &c).unwrap();
        let scale = x.norm_sq().sqrt() * c.norm_sq().sqrt() + y.norm_sq().sqrt() * b.norm_sq().sqrt();
        prop_assert!((x.inner(&c) + y.inner(&b)).abs() <= 1e-12 * scale.max(1e-300));
    }

    #[test]
    fn dealiasing_is_idempotent(g in grid(), s in any::<u64>()) {
        let f: Field = random_field(g, 1, s);
        let once = dealias_truncate(&f, Truncation::TwoThirds);
        prop_assert_eq!(dealias_truncate(&once, Truncation::TwoThirds), once);
    }

    #[test]
    fn snapshot_round_trip_is_bit_exact(g in run_grid(), s in any::<u64>(), t in -10.0f64..10.0, mhd in any::<bool>()) {
        let u: Field = random_solenoidal(g, s);
        let mut state = if mhd { SimState::with_magnetic(u.clone(), random_solenoidal(g, s ^ 9)) } else { SimState::new(u) };
        state.time = t;
        let p = VoigtParams::new(0.1, 0.05).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.snap");
        write_snapshot(&state, &p, &path).unwrap();
        let back = read_snapshot(&path).unwrap();
        prop_assert_eq!(back.state, state);
        prop_assert_eq!(back.params, p);
    }

    #[test]
    fn config_text_round_trips(n in prop::sample::select(vec![8usize, 16, 32]), alpha in 0.0f64..1.0, dt in 1e-4f64..1e-1) {
        let over = vec![format!("n={n}"), format!("alpha={alpha}"), format!("dt={dt}")];
        let cfg = parse_config_with("", &over).unwrap();
        prop_assert_eq!(parse_config(&cfg.to_text()).unwrap(), cfg);
    }
}
