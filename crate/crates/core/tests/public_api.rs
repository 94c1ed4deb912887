use fracheat::kernel_series::RhoSpec;
use fracheat::spde_solver::{make_noise, run_ensemble, simulate, SpaceTimeGrid};
use fracheat::stable_green::{green_cdf, green_density, j0, make_params, InitialMeasure};
use proptest::prelude::*;
use std::f64::consts::PI;

#[test]
fn noise_free_path_is_j0() {
    let params = make_params(1.5, 0.3).unwrap();
    let mu = InitialMeasure::dirac(0.0, 1.0);
    let grid = SpaceTimeGrid::new(0.5, 4.0, 32, 64).unwrap();
    let noise = make_noise(&grid, 7);
    let path = simulate(params, &mu, None, grid.clone(), &noise).unwrap();
    for &x in &[-1.0, 0.0, 0.5, 1.25] {
        let got = path.value_at(0.5, x).unwrap();
        let want = j0(&mu, params, 0.5, x);
        assert!(
            (got - want).abs() <= 1e-12 * want.abs().max(1.0),
            "{x}: {got} vs {want}"
        );
    }
}

#[test]
fn same_seed_same_path() {
    let params = make_params(1.5, 0.0).unwrap();
    let mu = InitialMeasure::lebesgue();
    let rho = Some(RhoSpec::linear(1.0).unwrap());
    let grid = SpaceTimeGrid::new(0.25, 2.0, 16, 32).unwrap();
    let a = simulate(
        params,
        &mu,
        rho.clone(),
        grid.clone(),
        &make_noise(&grid, 11),
    )
    .unwrap();
    let b = simulate(params, &mu, rho, grid.clone(), &make_noise(&grid, 11)).unwrap();
    assert_eq!(a.row(a.n_rows() - 1), b.row(b.n_rows() - 1));
}

#[test]
fn ensemble_keeps_replicate_order() {
    let out = run_ensemble(20, 3, |r, seed| Ok((r, seed))).unwrap();
    for (i, (r, _)) in out.iter().enumerate() {
        assert_eq!(i, *r);
    }
    let again = run_ensemble(20, 3, |r, seed| Ok((r, seed))).unwrap();
    assert_eq!(out, again);
}

proptest! {
    #[test]
    fn gaussian_case_is_heat_kernel(t in 0.05f64..4.0, x in -6.0f64..6.0) {
        let g = green_density(make_params(2.0, 0.0).unwrap(), t, x);
        let heat = (-x * x / (4.0 * t)).exp() / (4.0 * PI * t).sqrt();
        prop_assert!((g - heat).abs() < 1e-10, "{} vs {}", g, heat);
    }

    #[test]
    fn density_scales_self_similarly(a in 1.1f64..2.0, t in 0.1f64..3.0, x in -3.0f64..3.0) {
        let p = make_params(a, 0.0).unwrap();
        let s = t.powf(-1.0 / a);
        let lhs = green_density(p, t, x);
        let rhs = s * green_density(p, 1.0, x * s);
        prop_assert!((lhs - rhs).abs() < 1e-8 * rhs.max(1e-3), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn cdf_is_monotone(a in 1.1f64..2.0, t in 0.1f64..2.0, x in -4.0f64..4.0, h in 0.01f64..1.0) {
        let p = make_params(a, 0.0).unwrap();
        let (lo, hi) = (green_cdf(p, t, x), green_cdf(p, t, x + h));
        prop_assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
        prop_assert!(hi >= lo - 1e-12);
    }
}
