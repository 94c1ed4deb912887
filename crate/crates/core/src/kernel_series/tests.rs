use super::spectrum::{spectrum_for, Resolution};
use super::*;
use crate::special::bessel_i0;
use crate::stable_green::{green_density, lambda_const, law_for, make_params, InitialMeasure};
use crate::testutil::simpson_pieces;
use proptest::prelude::*;

fn heat_probe() -> KernelGrid {
    let ts = (0..16).map(|i| 0.25 + 0.1 * i as f64).collect();
    let xs = (0..16).map(|j| -2.0 + 4.0 * j as f64 / 15.0).collect();
    KernelGrid::new(ts, xs).unwrap()
}

fn max_heat_error(res: Resolution) -> f64 {
    let p = make_params(2.0, 0.0).unwrap();
    let g = heat_probe();
    let opts = SeriesOptions {
        tol: 1e-13,
        max_terms: DEFAULT_MAX_TERMS,
        res,
    };
    let k = k_kernel_with(1.0, p, &g, opts).unwrap();
    let mut worst = 0.0f64;
    for (i, &t) in g.ts.iter().enumerate() {
        for (j, &x) in g.xs.iter().enumerate() {
            let c = k_heat_closed(2.0, 1.0, t, x);
            worst = worst.max((k.values[i][j] - c).abs() / c);
        }
    }
    worst
}

#[test]
fn heat_series_matches_closed_form() {
    let e = max_heat_error(Resolution::default());
    assert!(e < 1e-3, "max relative error {e}");
}

#[test]
fn heat_error_drops_under_refinement() {
    let coarse = max_heat_error(Resolution::level(0));
    let fine = max_heat_error(Resolution::level(1));
    assert!(coarse < 1e-3, "coarse error {coarse}");
    assert!(fine < coarse, "coarse {coarse} fine {fine}");
}

#[test]
fn heat_closed_golden() {
    assert!((k_heat_closed(2.0, 1.0, 1.0, 0.0) - 0.15772324472224478).abs() < 1e-13);
    assert_eq!(k_heat_closed(2.0, 0.0, 1.0, 0.3), 0.0);
    let far = k_heat_closed(2.0, 1.0, 1.0, 12.0);
    assert!(far > 0.0 && far < 1e-30);
}

#[test]
fn wave_closed_values() {
    assert_eq!(k_wave_closed(1.0, 2.0, 1.0, 1.5), 0.0);
    assert!((k_wave_closed(2.0, 3.0, 0.5, 1.0) - 9.0 / 4.0).abs() < 1e-15);
    assert!((k_wave_closed(1.0, 2.0, 1.0, 0.0) - 1.5660829297563506).abs() < 1e-13);
    assert!((k_wave_closed(1.0, 2.0, 1.0, 0.0) - bessel_i0(2f64.sqrt())).abs() < 1e-15);
}

#[test]
fn l0_at_origin_scales() {
    let p = make_params(1.5, 0.0).unwrap();
    let lam = lambda_const(p);
    let g = KernelGrid::new(vec![0.1, 1.0, 3.0], vec![0.0]).unwrap();
    let l0 = ln_kernel(0, 1.3, p, &g).unwrap();
    for (i, &t) in g.ts.iter().enumerate() {
        let want = 1.69 * lam * lam * t.powf(-2.0 / 1.5);
        assert!((l0.values[i][0] / want - 1.0).abs() < 1e-9);
    }
}

#[test]
fn zero_lambda_gives_zero() {
    let p = make_params(1.5, 0.2).unwrap();
    let g = KernelGrid::uniform(1.0, 3, 2.0, 5).unwrap();
    for n in 0..3 {
        assert_eq!(ln_kernel(n, 0.0, p, &g).unwrap().max_value(), 0.0);
    }
    let k = k_kernel(0.0, p, &g, 1e-8).unwrap();
    assert_eq!(k.n_terms, 1);
    assert_eq!(k.max_value(), 0.0);
}

#[test]
fn spectral_l0_matches_real_space_transform() {
    // E(zeta) Q(zeta) = int g(x)^2 e^{-i zeta x} dx with g = G(1, .)
    for (a, d) in [(1.5, 0.0), (1.5, 0.4), (1.2, 0.7)] {
        let p = make_params(a, d).unwrap();
        let law = law_for(p);
        let spec = spectrum_for(p, Resolution::default());
        for zeta in [0.0, 0.3, 1.7, 4.0] {
            let re = simpson_pieces(
                &|x: f64| law.density(x).powi(2) * (zeta * x).cos(),
                -60.0,
                60.0,
                240,
                1e-13,
            );
            let im = -simpson_pieces(
                &|x: f64| law.density(x).powi(2) * (zeta * x).sin(),
                -60.0,
                60.0,
                240,
                1e-13,
            );
            let got = spec.decay(zeta) * spec.q.eval(zeta);
            // tails beyond |x| = 60 carry g^2 mass below 1e-8
            assert!(
                (got.re - re).abs() < 2e-8,
                "a={a} d={d} zeta={zeta}: {} vs {re}",
                got.re
            );
            assert!(
                (got.im - im).abs() < 2e-8,
                "a={a} d={d} zeta={zeta}: {} vs {im}",
                got.im
            );
        }
    }
}

/// Brute-force int_0^t int L_1 with L_1 = L_0 * L_0 evaluated as a real-space
/// double sum: trapezoid grids in y and x - y scaled to each factor's width,
/// and time substitutions r = (s/2) w^q, s = t v^q removing the endpoint
/// singularities, midpoint rule in w and v.
fn brute_l1_integral(a: f64, d: f64, lambda: f64, t: f64, nt: usize, nx: usize) -> f64 {
    let p = make_params(a, d).unwrap();
    let q = 1.0 / (1.0 - 1.0 / a);
    let l0 = |tau: f64, x: f64| lambda * lambda * green_density(p, tau, x).powi(2);
    // int dy int dx L0(s - r, x - y) L0(r, y)
    let space = |s_r: f64, r: f64| {
        let (w1, w2) = (s_r.powf(1.0 / a), r.powf(1.0 / a));
        let span = 12.0;
        let (h1, h2) = (2.0 * span * w1 / nx as f64, 2.0 * span * w2 / nx as f64);
        let mut acc = 0.0;
        for k in 0..=nx {
            let y = -span * w2 + k as f64 * h2;
            let wy = if k == 0 || k == nx { 0.5 } else { 1.0 };
            let mut inner = 0.0;
            for i in 0..=nx {
                let x = y - span * w1 + i as f64 * h1;
                let wx = if i == 0 || i == nx { 0.5 } else { 1.0 };
                inner += wx * l0(s_r, x - y);
            }
            acc += wy * l0(r, y) * inner * h1;
        }
        acc * h2
    };
    let half = nt / 2;
    let inner_time = |s: f64| {
        let mut acc = 0.0;
        for k in 0..half {
            let w = (k as f64 + 0.5) / half as f64;
            let r = 0.5 * s * w.powf(q);
            let jac = 0.5 * s * q * w.powf(q - 1.0) / half as f64;
            // both halves of [0, s] by symmetry of the substitution
            acc += jac * (space(s - r, r) + space(r, s - r));
        }
        acc
    };
    let mut total = 0.0;
    for k in 0..nt {
        let v = (k as f64 + 0.5) / nt as f64;
        let s = t * v.powf(q);
        total += t * q * v.powf(q - 1.0) / nt as f64 * inner_time(s);
    }
    total
}

#[test]
fn l1_integral_matches_brute_force() {
    let (a, d, lambda, t) = (1.5, 0.0, 1.0, 1.0);
    let p = make_params(a, d).unwrap();
    let spec = spectrum_for(p, Resolution::default());
    let exact = super::moment::layer_time_integral(&spec, lambda, 1, t);
    let brute = brute_l1_integral(a, d, lambda, t, 64, 64);
    assert!(
        (brute / exact - 1.0).abs() < 0.05,
        "brute {brute} series {exact}"
    );
}

#[test]
fn series_is_monotone_in_terms() {
    let p = make_params(1.5, 0.4).unwrap();
    let g = KernelGrid::uniform(1.0, 4, 3.0, 9).unwrap();
    let loose = k_kernel(1.0, p, &g, 1e-3).unwrap();
    let tight = k_kernel(1.0, p, &g, 1e-10).unwrap();
    assert!(tight.n_terms > loose.n_terms);
    for (r0, r1) in loose.values.iter().zip(&tight.values) {
        for (v0, v1) in r0.iter().zip(r1) {
            assert!(v1 >= v0);
        }
    }
    let l0 = ln_kernel(0, 1.0, p, &g).unwrap();
    for n in 1..4 {
        let ln = ln_kernel(n, 1.0, p, &g).unwrap();
        assert!(ln.min_value() >= 0.0);
        assert!(
            ln.clamped < 1e-10 * l0.max_value(),
            "layer {n} clamped {}",
            ln.clamped
        );
    }
}

#[test]
fn layers_sum_to_kernel() {
    let p = make_params(1.8, -0.1).unwrap();
    let g = KernelGrid::uniform(0.8, 3, 2.0, 7).unwrap();
    let k = k_kernel(0.7, p, &g, 1e-9).unwrap();
    let mut sum = vec![vec![0.0; 7]; 3];
    for n in 0..k.n_terms {
        let l = ln_kernel(n, 0.7, p, &g).unwrap();
        for (s, r) in sum.iter_mut().zip(&l.values) {
            for (a, b) in s.iter_mut().zip(r) {
                *a += b;
            }
        }
    }
    for (s, r) in sum.iter().zip(&k.values) {
        for (a, b) in s.iter().zip(r) {
            assert!((a - b).abs() <= 1e-12 * b);
        }
    }
}

#[test]
fn gamma_for_symmetric_three_halves() {
    let p = make_params(1.5, 0.0).unwrap();
    let g = upper_gamma(p, 1.0);
    assert!((g - lambda_const(p) * 2.678938534707747).abs() < 1e-12);
}

#[test]
fn zero_lambda_bound_is_positive() {
    let p = make_params(1.5, 0.0).unwrap();
    let b = k_upper_bound(p, 0.0, 0.5, 0.2, 1.0);
    let want = green_density(p, 0.5, 0.2) * (1.0 + 0.5f64.powf(1.0 / 1.5)) / 0.5f64.powf(1.0 / 1.5);
    assert!((b - want).abs() < 1e-14);
}

#[test]
fn fitted_bound_dominates_on_disjoint_grid() {
    for (a, d, lambda) in [
        (2.0, 0.0, 1.0),
        (1.5, 0.0, 1.0),
        (1.5, 0.4, 1.5),
        (1.2, 0.7, 0.8),
    ] {
        let p = make_params(a, d).unwrap();
        let cal_ts = (0..12).map(|i| 0.05 + 0.17 * i as f64).collect();
        let cal =
            KernelGrid::new(cal_ts, (0..41).map(|j| -4.0 + 0.2 * j as f64).collect()).unwrap();
        let ts = (0..8).map(|i| 0.125 + 0.25 * i as f64).collect();
        let xs = (0..16).map(|j| -3.875 + 0.5 * j as f64).collect();
        let ver = KernelGrid::new(ts, xs).unwrap();
        let kc = k_kernel(lambda, p, &cal, 1e-10).unwrap();
        let c = fit_upper_constant(&kc).unwrap();
        let kv = k_kernel(lambda, p, &ver, 1e-10).unwrap();
        for (i, &t) in ver.ts.iter().enumerate() {
            for (j, &x) in ver.xs.iter().enumerate() {
                let b = k_upper_bound(p, lambda, t, x, c);
                assert!(
                    kv.values[i][j] <= b,
                    "a={a} d={d} at ({t},{x}): {} > {b}",
                    kv.values[i][j]
                );
            }
        }
    }
}

#[test]
fn kernel_grows_in_time_and_decays_in_space() {
    let p = make_params(1.5, 0.0).unwrap();
    // the short-time decay of L_0 gives way to exponential growth
    let g = KernelGrid::new(vec![8.0, 16.0, 32.0], vec![0.0, 5.0, 50.0]).unwrap();
    let k = k_kernel(1.0, p, &g, 1e-10).unwrap();
    for w in k.values.windows(2) {
        assert!(w[1][0] > w[0][0]);
    }
    assert!(k.values[2][0] > 4.0 * k.values[0][0]);
    for row in &k.values {
        assert!(row[2] < row[1] && row[1] < row[0]);
        assert!(row[2] < 1e-3 * row[0]);
    }
}

#[test]
fn growth_envelope() {
    let (a, q) = (1.5, 0.7);
    assert!((moment_growth_bound(a, 3.0, 0.0, q) - q.powi(3)).abs() < 1e-15);
    let slope = q * 3f64.powf((2.0 * a - 1.0) / (a - 1.0));
    let (l1, l2) = (
        moment_growth_bound(a, 3.0, 1.0, q).ln(),
        moment_growth_bound(a, 3.0, 2.5, q).ln(),
    );
    assert!(((l2 - l1) / 1.5 - slope).abs() < 1e-12);
    assert!(moment_growth_bound(a, 4.0, 1.0, q) > moment_growth_bound(a, 3.0, 1.0, q));
}

#[test]
fn moment_bound_cases() {
    let p = make_params(1.5, 0.0).unwrap();
    let rho = RhoSpec::linear(1.0).unwrap();
    assert_eq!(
        moment_upper_bound(2, &InitialMeasure::zero(), &rho, p, 1.0, 0.0).unwrap(),
        0.0
    );
    let dirac = InitialMeasure::dirac(0.0, 1.0);
    let b = moment_upper_bound(2, &dirac, &rho, p, 0.5, 0.1).unwrap();
    let j0 = green_density(p, 0.5, 0.1);
    assert!(b.is_finite() && b > j0 * j0);
    // constant data: c^2 (1 + int_0^t int K)
    let leb = InitialMeasure::lebesgue();
    let bl = moment_upper_bound(2, &leb, &rho, p, 1.0, 3.0).unwrap();
    let m = integrated_mass(p, 1.0, 1.0, Resolution::default()).unwrap();
    assert!((bl - 1.0 - m).abs() < 1e-12);
    let b4 = moment_upper_bound(4, &leb, &rho, p, 1.0, 0.0).unwrap();
    assert!(b4 > bl);
    assert!(moment_upper_bound(3, &leb, &rho, p, 1.0, 0.0).is_err());
    assert!(
        moment_upper_bound(2, &InitialMeasure::indicator(0.0, 1.0), &rho, p, 1.0, 0.0).is_err()
    );
    // vartheta > 0 with zero data
    let sq = RhoSpec::new(RhoKind::SqrtAffine {
        lambda: 1.0,
        vartheta: 0.5,
    })
    .unwrap();
    let bz = moment_upper_bound(2, &InitialMeasure::zero(), &sq, p, 1.0, 0.0).unwrap();
    assert!((bz - 0.25 * m).abs() < 1e-12);
}

#[test]
fn integrated_mass_matches_layer_masses_heat() {
    // a = 2: int_0^t int K = int_0^t (closed form of its mass)
    let p = make_params(2.0, 0.0).unwrap();
    let t = 1.3f64;
    // mass of K(s, .) with s = r^2, times ds/dr = 2r
    let mass = |r: f64| {
        let s = r * r;
        2.0 / (8.0 * std::f64::consts::PI).sqrt()
            + 2.0 * r / 4.0 * (s / 8.0).exp() * crate::special::normal_cdf((s / 4.0).sqrt())
    };
    let want = simpson_pieces(&mass, 0.0, t.sqrt(), 64, 1e-14);
    let got = integrated_mass(p, 1.0, t, Resolution::default()).unwrap();
    assert!((got / want - 1.0).abs() < 1e-9, "{got} vs {want}");
}

#[test]
fn table_round_trip() {
    let p = make_params(1.5, 0.4).unwrap();
    let g = KernelGrid::uniform(1.0, 3, 2.0, 5).unwrap();
    let mut k = k_kernel(1.0, p, &g, 1e-8).unwrap();
    k.fitted_c = Some(fit_upper_constant(&k).unwrap());
    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("kernel");
    k.write(&stem).unwrap();
    let back = KernelTable::read(&stem).unwrap();
    assert_eq!(back, k);
}

#[test]
fn rho_spec_invariants() {
    let l = RhoSpec::linear(-2.0).unwrap();
    assert_eq!(
        (l.lip, l.lip_rho(), l.vartheta(), l.rho_zero),
        (2.0, 2.0, 0.0, 0.0)
    );
    assert!(RhoSpec::linear(0.0).is_err());
    assert!(RhoSpec::new(RhoKind::SqrtAffine {
        lambda: 1.0,
        vartheta: -1.0
    })
    .is_err());
    let json = serde_json::to_string(&l).unwrap();
    assert_eq!(serde_json::from_str::<RhoSpec>(&json).unwrap(), l);
    assert!(serde_json::from_str::<RhoSpec>(r#"{"kind":"linear","lambda":0.0}"#).is_err());
}

proptest! {
    #[test]
    fn rho_growth_and_lipschitz(lambda in -3.0f64..3.0, vt in 0.0f64..2.0, x in -50.0f64..50.0, y in -50.0f64..50.0) {
        prop_assume!(lambda.abs() > 1e-3);
        let kinds = [
            RhoKind::Linear { lambda },
            RhoKind::Sine { lambda },
            RhoKind::SqrtAffine { lambda, vartheta: vt },
            RhoKind::Saturating { lambda },
        ];
        for k in kinds {
            let r = RhoSpec::new(k).unwrap();
            let (lr, th) = r.growth;
            prop_assert!(r.eval(x).powi(2) <= lr * lr * (th * th + x * x) * (1.0 + 1e-12) + 1e-300);
            prop_assert!((r.eval(x) - r.eval(y)).abs() <= r.lip * (x - y).abs() * (1.0 + 1e-12) + 1e-12);
            prop_assert_eq!(r.eval(0.0), r.rho_zero);
        }
    }

    #[test]
    fn heat_closed_is_even_and_positive(x in -5.0f64..5.0, t in 0.05f64..3.0, lambda in 0.1f64..2.0) {
        let v = k_heat_closed(2.0, lambda, t, x);
        prop_assert!(v > 0.0);
        prop_assert!((v - k_heat_closed(2.0, lambda, t, -x)).abs() <= 1e-15 * v);
    }
}
