use super::*;
use crate::stable_green::{green_cdf, green_table, lambda_const, make_params};
use proptest::prelude::*;

#[test]
fn f_b_closed_forms() {
    for z in [0.1, 1.0, 10.0] {
        assert!((approx_series_f(0.0, z) - (1.0 - (-z as f64).exp())).abs() < 1e-12);
    }
    assert!((approx_series_f(0.0, 1.0) - 0.6321205588285577).abs() < 1e-12);
    assert_eq!(approx_series_f(-1.0, 0.0), 1.0);
    assert_eq!(approx_series_f(0.5, 0.0), 0.0);
}

#[test]
fn f_b_limit_at_large_z() {
    for b in [-1.0, 0.0, 0.5, 1.0 / 1.5] {
        assert!((approx_series_f(b, 500.0) - 1.0).abs() < 0.02);
    }
    // mpmath references at z = 500
    assert!((approx_series_f(0.5, 500.0) - 1.000752040885182).abs() < 1e-12);
    assert!((approx_series_f(2.0 / 3.0, 500.0) - 1.001114585733267).abs() < 1e-12);
}

#[test]
fn f_b_large_z_log_space() {
    // k runs past 170 where k! overflows a double
    let v = approx_series_f(0.3, 1000.0);
    assert!(v.is_finite() && (v - 1.0).abs() < 1e-2);
}

#[test]
fn c_b_values() {
    assert!((c_b_sup(0.0).unwrap() - 1.0).abs() < 1e-12);
    let c = c_b_sup(0.5).unwrap();
    assert!((c - 1.0843299948151449).abs() < 1e-9, "{c}");
    assert!(c_b_sup(-1.0).unwrap() >= 1.0);
    assert!(c_b_sup(-1.5).is_err());
    assert!((l1_sup_factor() - 14.624303145779091).abs() < 1e-8);
}

#[test]
fn r_mass_identity() {
    let p = make_params(1.5, 0.4).unwrap();
    for (eps, t) in [(0.1, 0.25), (0.01, 1.0), (0.5, 0.2)] {
        let m = r_interval_mass(p, eps, t, -1e9, 1e9).unwrap();
        let want = 1.0 - (-t / eps as f64).exp();
        assert!((m - want).abs() < 1e-8, "eps={eps} t={t}: {m} vs {want}");
    }
}

#[test]
fn r_kernel_gaussian_direct_sum() {
    // a = 2, eps = t: e^{-1} sum 1/n! G(n t, x); compare three leading terms
    let p = make_params(2.0, 0.0).unwrap();
    let t = 0.3;
    for x in [0.0, 0.4, 1.5] {
        let g = |s: f64| (-x * x / (4.0 * s)).exp() / (4.0 * std::f64::consts::PI * s).sqrt();
        let head = (-1.0f64).exp() * (g(t) + g(2.0 * t) / 2.0 + g(3.0 * t) / 6.0);
        let three = r_kernel(p, t, t, x, 3);
        assert!(three.is_err(), "n_cut = 3 leaves too much Poisson tail");
        let full = r_kernel(p, t, t, x, default_n_cut(1.0)).unwrap();
        let rest: f64 = (4..40)
            .map(|n| (-1.0f64).exp() / crate::quad::gamma(n as f64 + 1.0) * g(n as f64 * t))
            .sum();
        assert!((full - head - rest).abs() < 1e-14);
    }
}

#[test]
fn truncation_too_tight_reported() {
    let p = make_params(1.5, 0.0).unwrap();
    match r_kernel(p, 0.01, 1.0, 0.0, 110) {
        Err(Error::TruncationTooTight { n_cut, tail }) => {
            assert_eq!(n_cut, 110);
            assert!(tail > 1e-12);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn r_converges_to_green_at_origin() {
    let p = make_params(1.5, 0.3).unwrap();
    let t = 0.5;
    let g = green_density(p, t, 0.0);
    let mut prev = f64::INFINITY;
    for eps in [0.1, 0.03, 0.01, 0.003, 0.001] {
        let r = r_kernel(p, eps, t, 0.0, default_n_cut(t / eps)).unwrap();
        let gap = (r - g).abs();
        assert!(gap < prev);
        prev = gap;
    }
    assert!(prev < 2e-3 * g, "gap {prev}");
}

#[test]
fn r_converges_to_green_off_origin() {
    let p = make_params(1.5, 0.3).unwrap();
    let t = 0.5;
    for x in [-0.7, 0.9] {
        let g = green_density(p, t, x);
        let r = r_kernel(p, 1e-3, t, x, default_n_cut(t / 1e-3)).unwrap();
        assert!((r - g).abs() < 3e-3 * g.max(0.05));
    }
}

#[test]
fn approx_kernel_table_mass() {
    let p = make_params(1.8, 0.1).unwrap();
    let xs: Vec<f64> = (0..=4000).map(|i| -40.0 + 0.02 * i as f64).collect();
    let k = ApproxKernel::new(p, 0.05, 0.5, xs).unwrap();
    assert!(k.r_values.iter().all(|v| *v >= 0.0));
    assert!((k.atom_weight - (-10.0f64).exp()).abs() < 1e-18);
    // window [-40, 40] misses tails of order 40^{-1.8}
    let tail = 2.0 * (1.0 - crate::stable_green::green_cdf(p, 1.0, 40.0 / 0.5f64.powf(1.0 / 1.8)));
    assert!((k.trapezoid_mass() - (1.0 - k.atom_weight)).abs() < 1e-5 + tail + k.trunc_error);
}

#[test]
fn g_eps_apply_basics() {
    let p = make_params(1.5, 0.2).unwrap();
    let f = GridFunction {
        x0: -5.0,
        dx: 0.05,
        values: (0..201)
            .map(|i| (-(i as f64 * 0.05 - 5.0).powi(2)).exp())
            .collect(),
    };
    assert_eq!(g_eps_apply(&f, p, 0.1, 0.0).unwrap(), f);
    let ones = GridFunction {
        x0: -5.0,
        dx: 0.05,
        values: vec![1.0; 201],
    };
    let out = g_eps_apply(&ones, p, 0.1, 0.7).unwrap();
    assert!(out.values.iter().all(|v| (v - 1.0).abs() < 1e-11));
    let g = g_eps_apply(&f, p, 0.1, 0.7).unwrap();
    let sup = f.values.iter().cloned().fold(0.0, f64::max);
    assert!(g.values.iter().all(|&v| v >= 0.0 && v <= sup + 1e-15));
}

#[test]
fn g_eps_apply_on_green_approaches_later_green() {
    let p = make_params(1.5, 0.0).unwrap();
    let (s, t) = (0.3, 0.4);
    let dx = 0.02;
    let xs: Vec<f64> = (0..1001).map(|i| -10.0 + dx * i as f64).collect();
    let f = GridFunction {
        x0: -10.0,
        dx,
        values: green_table(p, s, &xs).unwrap().values,
    };
    let target = green_table(p, s + t, &xs).unwrap().values;
    let mut prev = f64::INFINITY;
    for eps in [0.1, 0.02, 0.004] {
        let g = g_eps_apply(&f, p, eps, t).unwrap();
        let gap: f64 = g
            .values
            .iter()
            .zip(&target)
            .map(|(a, b)| (a - b).abs() * dx)
            .sum();
        let bound = l1_error(p, eps, t).unwrap().bound;
        assert!(
            gap < prev && gap <= bound,
            "eps={eps} gap={gap} bound={bound}"
        );
        prev = gap;
    }
}

#[test]
fn l1_bound_holds_on_lattice() {
    let p = make_params(1.5, 0.3).unwrap();
    for eps in [1e-3, 1e-2, 3e-2, 1e-1] {
        for t in [0.25, 0.5, 1.0, 2.0] {
            let e = l1_error(p, eps, t).unwrap();
            assert!(e.numeric <= e.bound, "eps={eps} t={t}: {e:?}");
            assert!(e.outside_mass < 1e-6);
        }
    }
}

#[test]
fn l1_numeric_decreases_with_eps() {
    let p = make_params(1.2, 0.7).unwrap();
    let mut prev = f64::INFINITY;
    for eps in [0.2, 0.05, 0.0125, 0.003] {
        let e = l1_error(p, eps, 1.0).unwrap();
        assert!(e.numeric < prev);
        prev = e.numeric;
    }
    // eps >> t: most R~ mass is missing, numeric ~ 1
    let big = l1_error(p, 50.0, 0.5).unwrap();
    assert!(big.numeric > 0.95 && big.numeric <= big.bound);
}

#[test]
fn l2_profile_decreases() {
    let p = make_params(1.5, 0.3).unwrap();
    let mut prev = f64::INFINITY;
    for eps in [0.1, 0.05, 0.025, 0.0125] {
        let v = l2_error_profile(p, eps, 1.0).unwrap().integral;
        assert!(v < prev, "eps={eps}: {v} >= {prev}");
        prev = v;
    }
}

#[test]
fn gaussian_l2_anchor() {
    // int G^2(s, .) = (8 pi s)^{-1/2}, so int_0^T = sqrt(T / (2 pi))
    let p = make_params(2.0, 0.0).unwrap();
    for t in [0.5, 1.0, 3.0] {
        let v = green_l2_time_integral(p, t);
        assert!((v - (t / (2.0 * std::f64::consts::PI)).sqrt()).abs() < 1e-6);
    }
    // skewed: int G^2(s, .) = Gamma(1 + 1/a) / (pi (2 s cos theta)^{1/a})
    let p = make_params(1.5, 0.3).unwrap();
    let (a, th) = (1.5f64, 0.3 * std::f64::consts::PI / 2.0);
    let t: f64 = 2.0;
    let want = crate::quad::gamma(1.0 + 1.0 / a)
        / (std::f64::consts::PI * (2.0 * th.cos()).powf(1.0 / a))
        * t.powf(1.0 - 1.0 / a)
        / (1.0 - 1.0 / a);
    let v = green_l2_time_integral(p, t);
    assert!((v - want).abs() < 1e-6 * want, "{v} {want}");
}

#[test]
fn r_l2_mass_scaling_bound() {
    let p = make_params(1.5, 0.3).unwrap();
    let a = p.a();
    let fit: f64 = [(0.1, 0.3), (0.02, 0.5), (0.05, 1.5), (0.01, 0.1)]
        .iter()
        .map(|&(e, t): &(f64, f64)| r_l2_mass(p, e, t) * t.powf(1.0 / a))
        .fold(0.0, f64::max);
    let c = 1.05 * fit;
    for (e, t) in [
        (0.07, 0.2),
        (0.005, 0.8),
        (0.2, 2.0),
        (0.001, 0.05),
        (0.03, 0.03),
    ] {
        let m: f64 = r_l2_mass(p, e, t);
        assert!(m <= c * t.powf(-1.0 / a), "eps={e} t={t}");
    }
}

#[test]
fn cutoff_shape() {
    let eps = 0.25;
    assert_eq!(psi_cutoff(eps, 0.0), 1.0);
    assert_eq!(psi_cutoff(eps, 4.0), 1.0);
    assert!((psi_cutoff(eps, 4.5) - 0.5).abs() < 1e-15);
    assert_eq!(psi_cutoff(eps, 5.0), 0.0);
    assert_eq!(psi_cutoff(eps, -7.0), 0.0);
}

#[test]
fn smooth_initial_dirac_and_bounds() {
    let p = make_params(1.5, 0.3).unwrap();
    let eps = 0.05;
    let xs: Vec<f64> = (0..=400).map(|i| -4.0 + 0.02 * i as f64).collect();
    let out = smooth_initial(&InitialMeasure::dirac(0.0, 1.0), p, eps, &xs).unwrap();
    for (x, v) in xs.iter().zip(&out.values) {
        assert!((v - green_density(p, eps, *x)).abs() < 1e-12);
    }
    let lam = lambda_const(p);
    let mu = InitialMeasure::dirac(0.5, 2.0)
        .plus(&InitialMeasure::indicator(-1.0, 3.0))
        .unwrap();
    let out = smooth_initial(&mu, p, eps, &xs).unwrap();
    let cap = lam * eps.powf(-1.0 / 1.5) * (2.0 + 4.0);
    assert!(out.sup_density() <= cap);
}

#[test]
fn smooth_initial_lebesgue_is_cut() {
    let p = make_params(1.5, 0.0).unwrap();
    let eps = 0.2;
    let xs: Vec<f64> = (0..=2400).map(|i| -60.0 + 0.05 * i as f64).collect();
    let out = smooth_initial(&InitialMeasure::lebesgue(), p, eps, &xs).unwrap();
    // at 0 the value is 1 minus the G(eps) mass leaking past the plateau, at most
    // the mass outside [-5, 5]
    let leak = 1.0 - (green_cdf(p, eps, 5.0) - green_cdf(p, eps, -5.0));
    let v0 = out.density_at(0.0);
    assert!(
        v0 <= 1.0 + 1e-12 && v0 >= 1.0 - leak - 1e-12,
        "{v0} leak {leak}"
    );
    assert!(out.density_at(50.0) < 1e-3);
    // mass at most that of psi_eps, i.e. 2/eps + 1
    assert!(out.density_mass() <= 2.0 / eps + 1.0 + 1e-9);
    let cut = cut_off(&InitialMeasure::lebesgue(), eps).unwrap();
    assert!((cut.density_mass() - (2.0 / eps + 1.0)).abs() < 1e-12);
}

proptest! {
    #[test]
    fn f_b_summation_order_insensitive(b in -1.0f64..3.0, z in 0.01f64..200.0) {
        let v = approx_series_f(b, z);
        // plain ascending sum, terms by the linear recurrence from k = 1
        let mut t = (-z).exp() * z.powf(b + 1.0);
        let mut s = t;
        for k in 1..(z as usize * 3 + 200) {
            let k = k as f64;
            t *= z / (k + 1.0) * (k / (k + 1.0)).powf(b);
            s += t;
        }
        // the reference picks up ~1e-16 per recurrence step
        prop_assert!((v - s).abs() <= 5e-13 * s.max(1e-300), "{v} {s}");
    }

    #[test]
    fn g_eps_apply_preserves_order(shift in 0.0f64..1.0, eps in 0.01f64..0.5, t in 0.01f64..1.0) {
        let p = make_params(1.5, 0.1).unwrap();
        let lo: Vec<f64> = (0..81).map(|i| (i as f64 * 0.1 - 4.0).sin() + 1.0).collect();
        let hi: Vec<f64> = lo.iter().map(|v| v + shift).collect();
        let a = g_eps_apply(&GridFunction { x0: -4.0, dx: 0.1, values: lo }, p, eps, t).unwrap();
        let b = g_eps_apply(&GridFunction { x0: -4.0, dx: 0.1, values: hi }, p, eps, t).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!(*x >= 0.0 && y >= x);
        }
    }
}

#[test]
fn skewed_green_square_mass_is_not_green_at_2s() {
    // int G^2(s, .) equals G(2s, 0) only with reflection symmetry
    let s = 1.0;
    for (delta, same) in [(0.0, true), (0.4, false)] {
        let p = make_params(1.5, delta).unwrap();
        let xs: Vec<f64> = (0..=40000).map(|i| -200.0 + 0.01 * i as f64).collect();
        let g = green_table(p, s, &xs).unwrap();
        let sq: Vec<f64> = g.values.iter().map(|v| v * v).collect();
        let direct = trapezoid(&xs, &sq);
        let th = delta * std::f64::consts::PI / 2.0;
        let parseval = crate::quad::gamma(1.0 + 1.0 / 1.5)
            / (std::f64::consts::PI * (2.0 * s * th.cos()).powf(1.0 / 1.5));
        assert!((direct - parseval).abs() < 1e-6, "{direct} {parseval}");
        let g2 = green_density(p, 2.0 * s, 0.0);
        assert_eq!(
            (direct - g2).abs() < 1e-6,
            same,
            "delta={delta}: {direct} vs {g2}"
        );
    }
}
