use super::{plot, Ctx};
use crate::error::CliError;
use fracheat::kernel_series::{
    k_heat_closed, k_kernel_with, KernelGrid, Resolution, SeriesOptions, DEFAULT_MAX_TERMS,
};
use fracheat::quad::{composite, gamma, gauss_legendre};
use fracheat::semigroup_approx::{approx_series_f, l1_error, l2_error_profile, r_interval_mass};
use fracheat::spde_solver::replicate_seed;
use fracheat::stable_green::{
    beta_integral, green_density, green_table, lambda_const, make_params, StableParams, TOL_NEG,
};
use std::f64::consts::PI;

fn fmt_worst(name: &str, worst: f64, tol: f64) -> String {
    format!("worst {name} {worst:.3e} (tol {tol:.1e})")
}

/// (G(s) * G(t))(x) by composite Gauss-Legendre on graded panels.
fn convolve_real_space(prm: StableParams, s: f64, t: f64, x: f64) -> f64 {
    let mut br = vec![0.0];
    let mut r = 0.05;
    while r < 1e5 {
        br.push(r);
        r *= if r < 8.0 { 1.25 } else { 1.5 };
    }
    let mut breaks: Vec<f64> = br.iter().rev().map(|v| -v).collect();
    breaks.extend(br.iter().skip(1));
    composite(&breaks, &gauss_legendre(16))
        .integrate(|y| green_density(prm, s, y) * green_density(prm, t, x - y))
}

/// int_0^inf y^b / (1 + y^(2+a)) dy after y = e^s.
fn beta_by_quadrature(a: f64, b: f64) -> f64 {
    let q = a + 2.0;
    let breaks: Vec<f64> = (0..=1600).map(|i| -800.0 + i as f64).collect();
    composite(&breaks, &gauss_legendre(16)).integrate(|s| {
        if s > 0.0 {
            ((b + 1.0 - q) * s).exp() / (1.0 + (-q * s).exp())
        } else {
            ((b + 1.0) * s).exp() / (1.0 + (q * s).exp())
        }
    })
}

fn unit_uniform(seed: u64, i: u64) -> f64 {
    (replicate_seed(seed, i) >> 11) as f64 / (1u64 << 53) as f64
}

pub(crate) fn green_checks(ctx: &mut Ctx) -> Result<(), CliError> {
    let o = ctx.cfg.green_opts();
    let mut mass_rows = Vec::new();
    let (mut mass_ok, mut worst_mass, mut min_ok) = (true, 0.0f64, true);
    let mut curves = Vec::new();
    for c in &o.cases {
        let prm = make_params(c[0], c[1])?;
        for &t in &o.times {
            let w = 30.0 * t.powf(1.0 / prm.a());
            let n = 30000;
            let xs: Vec<f64> = (0..=n)
                .map(|i| -w + 2.0 * w * i as f64 / n as f64)
                .collect();
            let tab = green_table(prm, t, &xs)?;
            let mass = tab.trapezoid_mass();
            let defect = (mass - 1.0).abs();
            mass_ok &= defect <= o.mass_tol + tab.trunc_error;
            min_ok &= tab.min_value() >= -TOL_NEG;
            worst_mass = worst_mass.max((defect - tab.trunc_error).max(0.0));
            mass_rows.push(vec![c[0], c[1], t, mass, tab.trunc_error, defect]);
        }
        let pts = (0..=200)
            .map(|i| -5.0 + 0.05 * i as f64)
            .map(|x| (x, green_density(prm, 1.0, x)))
            .collect();
        curves.push((format!("a={} delta={}", c[0], c[1]), pts));
    }
    ctx.csv(
        "green_mass.csv",
        &["a", "delta", "t", "mass", "trunc_error", "defect"],
        &mass_rows,
    )?;
    ctx.svg(
        "green_density.svg",
        &plot("G(1, x)", "x", "G", (false, false), curves),
    )?;
    ctx.check(
        "mass_within_tolerance",
        mass_ok,
        fmt_worst("defect beyond truncation", worst_mass, o.mass_tol),
    );
    ctx.check(
        "density_nonnegative",
        min_ok,
        format!("min >= -{TOL_NEG:e}"),
    );

    let mut sg_rows = Vec::new();
    let mut worst = 0.0f64;
    for c in &o.cases {
        let prm = make_params(c[0], c[1])?;
        for pr in &o.semigroup_pairs {
            for &x in &o.semigroup_xs {
                let conv = convolve_real_space(prm, pr[0], pr[1], x);
                let want = green_density(prm, pr[0] + pr[1], x);
                worst = worst.max((conv - want).abs());
                sg_rows.push(vec![c[0], c[1], pr[0], pr[1], x, conv, want]);
            }
        }
    }
    ctx.csv(
        "semigroup.csv",
        &["a", "delta", "s", "t", "x", "convolution", "direct"],
        &sg_rows,
    )?;
    ctx.check(
        "semigroup_residual",
        worst <= o.semigroup_tol,
        fmt_worst("residual", worst, o.semigroup_tol),
    );

    let gauss = lambda_const(make_params(2.0, 0.0)?);
    let gauss_want = 1.0 / (2.0 * PI.sqrt());
    let mut lam_rows = vec![vec![2.0, gauss, gauss_want]];
    let mut lam_worst = 0.0f64;
    for &a in &o.lambda_as {
        let got = lambda_const(make_params(a, 0.0)?);
        let want = gamma(1.0 + 1.0 / a) / PI;
        lam_worst = lam_worst.max((got - want).abs());
        lam_rows.push(vec![a, got, want]);
    }
    ctx.csv("lambda.csv", &["a", "lambda", "anchor"], &lam_rows)?;
    ctx.check(
        "lambda_gaussian_anchor",
        (gauss - gauss_want).abs() <= 1e-6,
        format!("{gauss} vs {gauss_want}"),
    );
    ctx.check(
        "lambda_symmetric_anchor",
        lam_worst <= 1e-5,
        fmt_worst("error", lam_worst, 1e-5),
    );

    let mut beta_rows = Vec::new();
    let mut beta_worst = 0.0f64;
    for i in 0..o.beta_points as u64 {
        let a = 0.2 + 2.0 * unit_uniform(ctx.cfg.seed, 2 * i);
        let b = -0.9 + (a + 1.8) * unit_uniform(ctx.cfg.seed, 2 * i + 1);
        let got = beta_integral(a, b)?;
        let want = beta_by_quadrature(a, b);
        beta_worst = beta_worst.max((got - want).abs() / want.max(1.0));
        beta_rows.push(vec![a, b, got, want]);
    }
    ctx.csv("beta.csv", &["a", "b", "closed", "quadrature"], &beta_rows)?;
    ctx.check(
        "beta_vs_quadrature",
        beta_worst <= o.beta_tol,
        fmt_worst("scaled error", beta_worst, o.beta_tol),
    );
    let anchor = beta_integral(2.0, 0.0)?;
    let want = PI / (2.0 * 2f64.sqrt());
    ctx.check(
        "beta_closed_anchor",
        (anchor - want).abs() <= 1e-12,
        format!("{anchor} vs {want}"),
    );
    Ok(())
}

pub(crate) fn kernel_checks(ctx: &mut Ctx) -> Result<(), CliError> {
    let o = ctx.cfg.kernel_opts();
    let prm = ctx.res.params.expect("validated");
    let grid = KernelGrid::new(o.ts.clone(), o.xs.clone())?;
    let table = |res: Resolution| {
        k_kernel_with(
            o.lambda,
            prm,
            &grid,
            SeriesOptions {
                tol: o.series_tol,
                max_terms: DEFAULT_MAX_TERMS,
                res,
            },
        )
    };
    let k = table(Resolution::default())?;
    ctx.value("n_terms", k.n_terms)?;
    ctx.value("series_tail_bound", k.series_tail_bound)?;
    let mid = o.xs.len() / 2;
    if prm.is_gaussian() {
        let max_err = |k: &fracheat::kernel_series::KernelTable| {
            let mut worst = 0.0f64;
            for (i, &t) in o.ts.iter().enumerate() {
                for (j, &x) in o.xs.iter().enumerate() {
                    let c = k_heat_closed(2.0, o.lambda, t, x);
                    worst = worst.max((k.values[i][j] - c).abs() / c);
                }
            }
            worst
        };
        let mut rows = Vec::new();
        for (i, &t) in o.ts.iter().enumerate() {
            for (j, &x) in o.xs.iter().enumerate() {
                let c = k_heat_closed(2.0, o.lambda, t, x);
                rows.push(vec![
                    t,
                    x,
                    k.values[i][j],
                    c,
                    (k.values[i][j] - c).abs() / c,
                ]);
            }
        }
        ctx.csv("kernel.csv", &["t", "x", "K", "closed", "rel_err"], &rows)?;
        let series =
            o.ts.iter()
                .enumerate()
                .map(|(i, &t)| (t, k.values[i][mid]))
                .collect();
        let closed =
            o.ts.iter()
                .map(|&t| (t, k_heat_closed(2.0, o.lambda, t, o.xs[mid])))
                .collect();
        ctx.svg(
            "kernel.svg",
            &plot(
                &format!("K(t, {:.3})", o.xs[mid]),
                "t",
                "K",
                (false, false),
                vec![("series".into(), series), ("closed form".into(), closed)],
            ),
        )?;
        let e = max_err(&k);
        let coarse = max_err(&table(Resolution::level(0))?);
        let fine = max_err(&table(Resolution::level(1))?);
        ctx.value("max_rel_err", e)?;
        ctx.value("refinement_errors", [coarse, fine])?;
        ctx.check(
            "matches_closed_form",
            e < o.closed_tol,
            fmt_worst("relative error", e, o.closed_tol),
        );
        ctx.check(
            "error_drops_under_refinement",
            fine < coarse,
            format!("level 0 {coarse:.3e}, level 1 {fine:.3e}"),
        );
    } else {
        let mut rows = Vec::new();
        for (i, &t) in o.ts.iter().enumerate() {
            for (j, &x) in o.xs.iter().enumerate() {
                rows.push(vec![t, x, k.values[i][j]]);
            }
        }
        ctx.csv("kernel.csv", &["t", "x", "K"], &rows)?;
        let series =
            o.ts.iter()
                .enumerate()
                .map(|(i, &t)| (t, k.values[i][mid]))
                .collect();
        ctx.svg(
            "kernel.svg",
            &plot(
                &format!("K(t, {:.3})", o.xs[mid]),
                "t",
                "K",
                (false, false),
                vec![("series".into(), series)],
            ),
        )?;
        ctx.check(
            "kernel_nonnegative",
            k.min_value() >= 0.0,
            format!("min {:e}", k.min_value()),
        );
        ctx.check(
            "series_converged",
            k.n_terms < DEFAULT_MAX_TERMS,
            format!("{} terms", k.n_terms),
        );
    }
    Ok(())
}

pub(crate) fn approx_ladder(ctx: &mut Ctx) -> Result<(), CliError> {
    let o = ctx.cfg.approx_opts();
    let prm = ctx.res.params.expect("validated");

    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for &b in &o.series_bs {
        let v = approx_series_f(b, o.series_z);
        worst = worst.max((v - 1.0).abs());
        rows.push(vec![b, o.series_z, v]);
    }
    let mut f0_worst = 0.0f64;
    for z in [0.1, 1.0, 10.0] {
        let v = approx_series_f(0.0, z);
        f0_worst = f0_worst.max((v - (1.0 - (-z as f64).exp())).abs());
        rows.push(vec![0.0, z, v]);
    }
    let fm1 = approx_series_f(-1.0, 0.0);
    rows.push(vec![-1.0, 0.0, fm1]);
    ctx.csv("series_f.csv", &["b", "z", "f"], &rows)?;
    ctx.check(
        "series_limit_at_large_z",
        worst < o.series_tol,
        fmt_worst("|f - 1|", worst, o.series_tol),
    );
    ctx.check(
        "series_f0_closed_form",
        f0_worst < 1e-12,
        fmt_worst("error", f0_worst, 1e-12),
    );
    ctx.check("series_f_minus1_at_0", fm1 == 1.0, format!("{fm1}"));

    let mut rows = Vec::new();
    let mut mass_worst = 0.0f64;
    for c in &o.mass_cases {
        let m = r_interval_mass(prm, c[0], c[1], -1e9, 1e9)?;
        let want = 1.0 - (-c[1] / c[0]).exp();
        mass_worst = mass_worst.max((m - want).abs());
        rows.push(vec![c[0], c[1], m, want]);
    }
    ctx.csv("mass_identity.csv", &["eps", "t", "mass", "closed"], &rows)?;
    ctx.check(
        "mass_identity",
        mass_worst < o.mass_tol,
        fmt_worst("error", mass_worst, o.mass_tol),
    );

    let mut rows = Vec::new();
    let mut l1_ok = true;
    let mut curves = Vec::new();
    for &t in &o.l1_ts {
        let mut pts = Vec::new();
        for &eps in &o.l1_eps {
            let e = l1_error(prm, eps, t)?;
            l1_ok &= e.numeric <= e.bound;
            rows.push(vec![eps, t, e.numeric, e.bound, e.outside_mass]);
            pts.push((eps, e.numeric));
        }
        curves.push((format!("t={t}"), pts));
    }
    ctx.csv(
        "l1_lattice.csv",
        &["eps", "t", "numeric", "bound", "outside_mass"],
        &rows,
    )?;
    ctx.svg(
        "l1_lattice.svg",
        &plot("L1 distance to G(t)", "eps", "L1", (true, true), curves),
    )?;
    ctx.check(
        "l1_within_bound",
        l1_ok,
        format!("{} lattice points", rows.len()),
    );

    let mut rows = Vec::new();
    for &eps in &o.l2_eps {
        let p = l2_error_profile(prm, eps, o.l2_t)?;
        rows.push(vec![eps, p.integral, p.r_l2_at_t]);
    }
    let vals: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    ctx.csv("l2_ladder.csv", &["eps", "l2_gap", "r_l2_at_t"], &rows)?;
    let pts = rows.iter().map(|r| (r[0], r[1])).collect();
    ctx.svg(
        "l2_ladder.svg",
        &plot(
            "space-time L2 gap",
            "eps",
            "gap",
            (true, true),
            vec![("gap".into(), pts)],
        ),
    )?;
    ctx.check(
        "l2_strictly_decreasing",
        fracheat::analysis::strictly_decreasing(&vals),
        format!("{vals:?}"),
    );
    Ok(())
}
