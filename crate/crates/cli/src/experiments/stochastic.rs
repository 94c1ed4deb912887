use super::{plot, Ctx};
use crate::error::CliError;
use fracheat::analysis::{
    box_minimum, comparison_report, ensemble_stats, holder_exponent, lyapunov_estimate, pair_row,
    path_increments, positivity_tail, refinement_study, strictly_decreasing, tail_shape_regression,
    wilson_interval, Direction, Ensemble, ViolationReport,
};
use fracheat::kernel_series::moment_upper_bound;
use fracheat::spde_solver::{make_noise, replicate_seed, run_ensemble, MildSolver, SpaceTimeGrid};
use fracheat::stable_green::{j0, InitialMeasure, StableParams};

struct Setup {
    params: StableParams,
    measure: InitialMeasure,
    grid: SpaceTimeGrid,
}

fn setup(ctx: &Ctx) -> Setup {
    Setup {
        params: ctx.res.params.expect("validated"),
        measure: ctx.res.measure.clone().expect("validated"),
        grid: ctx.res.grid.expect("validated"),
    }
}

fn solver(
    ctx: &Ctx,
    measure: &InitialMeasure,
    grid: SpaceTimeGrid,
) -> Result<MildSolver, CliError> {
    let p = ctx.res.params.expect("validated");
    Ok(MildSolver::new(p, measure, ctx.res.rho, grid)?.with_noise_lag(ctx.cfg.noise_lag))
}

fn replicates<T: Send>(
    ctx: &Ctx,
    f: impl Fn(usize, u64) -> fracheat::Result<T> + Sync,
) -> Result<Vec<T>, CliError> {
    Ok(run_ensemble(ctx.cfg.replicates(), ctx.cfg.seed, f)?)
}

fn write_first_path(ctx: &mut Ctx, s: &MildSolver, stem: &str) -> Result<(), CliError> {
    let path = s.path(&make_noise(&s.grid, replicate_seed(ctx.cfg.seed, 0)))?;
    path.write(&ctx.dir.join(stem))?;
    ctx.artifacts.push(format!("{stem}.csv"));
    ctx.artifacts.push(format!("{stem}.json"));
    Ok(())
}

pub(crate) fn simulate(ctx: &mut Ctx) -> Result<(), CliError> {
    let o = ctx.cfg.simulate_opts();
    let st = setup(ctx);
    let probes: Vec<(f64, f64)> = o.probes.iter().map(|p| (p[0], p[1])).collect();
    let s = solver(ctx, &st.measure, st.grid)?;

    // noise off: the scheme must return J0 exactly
    let quiet = MildSolver::new(st.params, &st.measure, None, st.grid)?
        .path(&make_noise(&st.grid, ctx.cfg.seed))?;
    let xs = st.grid.xs();
    let exact = quiet.times.iter().enumerate().all(|(k, &t)| {
        xs.iter()
            .enumerate()
            .all(|(j, &x)| quiet.row(k)[j] == j0(&st.measure, st.params, t, x))
    });
    ctx.check(
        "noise_off_reproduces_j0",
        exact,
        "bitwise equality on every cell",
    );

    let zero = MildSolver::new(st.params, &InitialMeasure::zero(), ctx.res.rho, st.grid)?
        .path(&make_noise(&st.grid, ctx.cfg.seed))?;
    let zmax = zero.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    ctx.check(
        "zero_data_stays_zero",
        zmax == 0.0,
        format!("max |u| = {zmax:e}"),
    );

    let samples = replicates(ctx, |_, seed| {
        let path = s.path(&make_noise(&st.grid, seed))?;
        Ok(probes
            .iter()
            .map(|&(t, x)| path.value_at(t, x).expect("probe validated"))
            .collect::<Vec<f64>>())
    })?;
    let ens = Ensemble {
        probes: probes.clone(),
        samples,
        seed_base: ctx.cfg.seed,
    };
    let stats = ensemble_stats(&ens, &[1, 2])?;
    let (m1, m2) = (&stats.moments[0].1, &stats.moments[1].1);
    let mut rows = Vec::new();
    let (mut mean_ok, mut bound_ok) = (true, true);
    let mut mean_detail = Vec::new();
    let mut bound_detail = Vec::new();
    let check_bound = o.moment_bound && ctx.res.rho.is_some();
    for (i, &(t, x)) in probes.iter().enumerate() {
        // the stochastic part has mean zero
        let mean: f64 = ens.column(i).iter().sum::<f64>() / ens.n_rep() as f64;
        let want = j0(&st.measure, st.params, t, x);
        let z = if m1[i].stderr > 0.0 || mean != want {
            (mean - want).abs() / m1[i].stderr
        } else {
            0.0
        };
        mean_ok &= z <= o.n_se;
        mean_detail.push(format!("({t},{x}): {z:.2} SE"));
        let bound = if check_bound {
            let b = moment_upper_bound(
                2,
                &st.measure,
                ctx.res.rho.as_ref().unwrap(),
                st.params,
                t,
                x,
            )?;
            let ok = m2[i].estimate <= b + o.n_se * m2[i].stderr;
            bound_ok &= ok;
            bound_detail.push(format!(
                "({t},{x}): {:.4} +- {:.4} vs {:.4}",
                m2[i].estimate, m2[i].stderr, b
            ));
            b
        } else {
            f64::NAN
        };
        rows.push(vec![
            t,
            x,
            want,
            mean,
            m1[i].stderr,
            m2[i].estimate,
            m2[i].stderr,
            bound,
        ]);
    }
    ctx.csv(
        "moments.csv",
        &["t", "x", "j0", "mean", "mean_se", "m2", "m2_se", "m2_bound"],
        &rows,
    )?;
    let idx = |col: usize| {
        rows.iter()
            .enumerate()
            .map(|(i, r)| (i as f64, r[col]))
            .collect::<Vec<_>>()
    };
    let mut series = vec![
        ("E u^2".to_string(), idx(5)),
        (
            "J0^2".to_string(),
            rows.iter()
                .enumerate()
                .map(|(i, r)| (i as f64, r[2] * r[2]))
                .collect(),
        ),
    ];
    if check_bound {
        series.push(("bound".to_string(), idx(7)));
    }
    ctx.svg(
        "moments.svg",
        &plot(
            "second moment at the probes",
            "probe",
            "m2",
            (false, false),
            series,
        ),
    )?;
    ctx.check("mean_matches_j0", mean_ok, mean_detail.join("; "));
    if check_bound {
        ctx.check(
            "second_moment_below_bound",
            bound_ok,
            bound_detail.join("; "),
        );
    }
    ctx.value("n_rep", ens.n_rep())?;
    write_first_path(ctx, &s, "field_r0")
}

pub(crate) fn compare(ctx: &mut Ctx) -> Result<(), CliError> {
    let o = ctx.cfg.compare_opts();
    let st = setup(ctx);
    let mu2 = ctx.res.measure2.clone().expect("validated");
    let mut family = Vec::new();
    let mut rows = Vec::new();
    for &k in &o.refinements {
        let g = st.grid.refined(k, st.params.a());
        let s1 = solver(ctx, &st.measure, g)?;
        let s2 = solver(ctx, &mu2, g)?;
        let reports = replicates(ctx, |_, seed| {
            let noise = make_noise(&g, seed);
            comparison_report(&s1.path(&noise)?, &s2.path(&noise)?, o.tol)
        })?;
        let pooled = reports
            .iter()
            .fold(ViolationReport::empty(), |acc, r| acc.merge(r));
        rows.push(vec![
            k as f64,
            g.n_t as f64,
            g.n_x as f64,
            pooled.total_cells as f64,
            pooled.violating_cells as f64,
            pooled.fraction(),
            pooled.violation_l1 / reports.len() as f64,
            pooled.max_violation,
        ]);
        if k == 1 {
            write_first_path(ctx, &s1, "field1_r0")?;
            write_first_path(ctx, &s2, "field2_r0")?;
        }
        family.push(pooled);
    }
    let study = refinement_study(&family)?;
    let trend = study.refinement_trend.clone().unwrap_or_default();
    ctx.csv(
        "violations.csv",
        &[
            "level",
            "n_t",
            "n_x",
            "cells",
            "violating",
            "fraction",
            "mean_l1",
            "max_violation",
        ],
        &rows,
    )?;
    let pts = |col: usize| {
        rows.iter()
            .map(|r| (r[0], r[col].max(1e-300)))
            .collect::<Vec<_>>()
    };
    ctx.svg(
        "violations.svg",
        &plot(
            "ordering violations under refinement",
            "level",
            "value",
            (true, true),
            vec![("fraction".into(), pts(5)), ("mean L1".into(), pts(6))],
        ),
    )?;
    ctx.value("report", &study)?;
    ctx.value("l1_trend", rows.iter().map(|r| r[6]).collect::<Vec<_>>())?;
    if ctx.res.rho.map(|r| r.is_linear()).unwrap_or(false) {
        let total: usize = family.iter().map(|r| r.violating_cells).sum();
        ctx.check(
            "zero_violations",
            total == 0,
            format!("{total} violating cells at tol {:e}", o.tol),
        );
    }
    ctx.check(
        "base_fraction_within_limit",
        study.fraction() <= o.max_fraction,
        format!(
            "fraction {:.3e} (limit {})",
            study.fraction(),
            o.max_fraction
        ),
    );
    ctx.check(
        "fraction_non_increasing",
        trend.windows(2).all(|w| w[1] <= w[0]),
        format!("{trend:?}"),
    );
    Ok(())
}

pub(crate) fn positivity(ctx: &mut Ctx) -> Result<(), CliError> {
    let o = ctx.cfg.positivity_opts();
    let st = setup(ctx);
    let s = solver(ctx, &st.measure, st.grid)?;
    let t_range = (o.t_range[0], o.t_range[1]);
    let x_range = (o.x_range[0], o.x_range[1]);
    let minima = replicates(ctx, |_, seed| {
        Ok(box_minimum(
            &s.path(&make_noise(&st.grid, seed))?,
            t_range,
            x_range,
        ))
    })?;
    let a = st.params.a();
    let tail = positivity_tail(&minima, &o.eps, a);
    ctx.csv(
        "minima.csv",
        &["replicate", "box_min"],
        &minima
            .iter()
            .enumerate()
            .map(|(r, &m)| vec![r as f64, m])
            .collect::<Vec<_>>(),
    )?;
    ctx.csv(
        "tail.csv",
        &["eps", "count", "prob", "wilson_lo", "wilson_hi", "ell"],
        &tail
            .iter()
            .map(|p| {
                vec![
                    p.eps,
                    p.count as f64,
                    p.prob,
                    p.wilson_lo,
                    p.wilson_hi,
                    p.ell,
                ]
            })
            .collect::<Vec<_>>(),
    )?;
    let negative = minima.iter().filter(|m| **m < 0.0).count();
    let (nlo, nhi) = wilson_interval(negative, minima.len(), 0.99);
    ctx.value(
        "negative_fraction_ci99",
        (negative as f64 / minima.len() as f64, nlo, nhi),
    )?;
    let shape = tail_shape_regression(&minima, &o.eps, a, o.min_count, o.n_boot, ctx.cfg.seed)?;
    let pts: Vec<(f64, f64)> = tail
        .iter()
        .filter(|p| p.ell.is_finite() && p.count > 0)
        .map(|p| (p.ell, p.prob.ln()))
        .collect();
    ctx.svg(
        "tail.svg",
        &plot(
            "lower tail of the box minimum",
            "l(eps)",
            "log P(min < eps)",
            (false, false),
            vec![("empirical".into(), pts)],
        ),
    )?;
    ctx.value("tail_shape", &shape)?;
    ctx.check(
        "tail_slope_negative_99",
        shape.ci99.1 < 0.0,
        format!(
            "slope {:.3}, 99% CI ({:.3}, {:.3}) over {} rungs",
            shape.slope,
            shape.ci99.0,
            shape.ci99.1,
            shape.eps_used.len()
        ),
    );
    Ok(())
}

pub(crate) fn holder(ctx: &mut Ctx) -> Result<(), CliError> {
    let o = ctx.cfg.holder_opts();
    let st = setup(ctx);
    let s = solver(ctx, &st.measure, st.grid)?;
    let g = st.grid;
    let t_min = o.t_min_frac * g.t_end;
    let x_max = o.x_max_frac * g.half_width;
    let incs = replicates(ctx, |_, seed| {
        let path = s.path(&make_noise(&g, seed))?;
        Ok((
            path_increments(&path, Direction::Time, &o.time_lags, t_min, x_max),
            path_increments(&path, Direction::Space, &o.space_lags, t_min, x_max),
        ))
    })?;
    let (time_sq, space_sq): (Vec<Vec<f64>>, Vec<Vec<f64>>) = incs.into_iter().unzip();
    let tl: Vec<f64> = o.time_lags.iter().map(|&h| h as f64 * g.dt()).collect();
    let sl: Vec<f64> = o.space_lags.iter().map(|&h| h as f64 * g.dx()).collect();
    let tf = holder_exponent(&tl, &time_sq)?;
    let sf = holder_exponent(&sl, &space_sq)?;
    let a = st.params.a();
    let (t_target, s_target) = (1.0 - 1.0 / a, a - 1.0);
    let mut rows = Vec::new();
    for (h, v) in tf.lags.iter().zip(&tf.mean_sq_increments) {
        rows.push(vec![0.0, *h, *v]);
    }
    for (h, v) in sf.lags.iter().zip(&sf.mean_sq_increments) {
        rows.push(vec![1.0, *h, *v]);
    }
    ctx.csv(
        "increments.csv",
        &["direction", "lag", "mean_sq_increment"],
        &rows,
    )?;
    let pts = |f: &fracheat::analysis::HolderFit| {
        f.lags
            .iter()
            .cloned()
            .zip(f.mean_sq_increments.iter().cloned())
            .collect::<Vec<_>>()
    };
    ctx.svg(
        "increments.svg",
        &plot(
            "mean squared increments",
            "lag",
            "E|du|^2",
            (true, true),
            vec![("time".into(), pts(&tf)), ("space".into(), pts(&sf))],
        ),
    )?;
    ctx.value("time_fit", &tf)?;
    ctx.value("space_fit", &sf)?;
    ctx.check(
        "time_slope",
        (tf.slope - t_target).abs() <= o.tol,
        format!(
            "{:.4} +- {:.4} vs {t_target:.4} (tol {})",
            tf.slope, tf.stderr, o.tol
        ),
    );
    ctx.check(
        "space_slope",
        (sf.slope - s_target).abs() <= o.tol,
        format!(
            "{:.4} +- {:.4} vs {s_target:.4} (tol {})",
            sf.slope, sf.stderr, o.tol
        ),
    );
    Ok(())
}

/// exp(1 - 1/(1 - r^2)) on |r| < 1, r = (x - c)/w; equals 1 at the centre.
pub(crate) fn bump(c: f64, w: f64) -> impl Fn(f64) -> f64 + Sync {
    move |x| {
        let r = (x - c) / w;
        if r.abs() < 1.0 {
            (1.0 - 1.0 / (1.0 - r * r)).exp()
        } else {
            0.0
        }
    }
}

pub(crate) fn weak_convergence(ctx: &mut Ctx) -> Result<(), CliError> {
    let o = ctx.cfg.weak_opts();
    let st = setup(ctx);
    let s = solver(ctx, &st.measure, st.grid)?;
    let phi = bump(o.bump_center, o.bump_width);
    let target = st.measure.pair_with(
        &phi,
        (o.bump_center - o.bump_width, o.bump_center + o.bump_width),
    );
    let pairings = replicates(ctx, |_, seed| {
        let path = s.path(&make_noise(&st.grid, seed))?;
        Ok(o.ts
            .iter()
            .map(|&t| pair_row(&path, path.row_of(t).expect("validated"), &phi))
            .collect::<Vec<f64>>())
    })?;
    let gaps = fracheat::analysis::weak_convergence(&o.ts, &pairings, target);
    ctx.csv(
        "gaps.csv",
        &["t", "gap", "stderr", "median"],
        &gaps
            .iter()
            .map(|g| vec![g.at, g.gap, g.stderr, g.median])
            .collect::<Vec<_>>(),
    )?;
    let pts = gaps.iter().map(|g| (g.at, g.gap)).collect();
    ctx.svg(
        "gaps.svg",
        &plot(
            "squared weak gap",
            "t",
            "E(<u,phi> - <mu,phi>)^2",
            (true, true),
            vec![("gap".into(), pts)],
        ),
    )?;
    let vals: Vec<f64> = gaps.iter().map(|g| g.gap).collect();
    let ratio = vals[0] / vals[vals.len() - 1];
    ctx.value("target", target)?;
    ctx.value("ratio", ratio)?;
    ctx.check(
        "gap_decreasing",
        strictly_decreasing(&vals),
        format!("{vals:?}"),
    );
    ctx.check(
        "gap_ratio",
        ratio >= o.min_ratio,
        format!("first/last = {ratio:.2} (need {})", o.min_ratio),
    );
    Ok(())
}

pub(crate) fn intermittency(ctx: &mut Ctx) -> Result<(), CliError> {
    let o = ctx.cfg.intermittency_opts();
    let st = setup(ctx);
    let s = solver(ctx, &st.measure, st.grid)?;
    let g = st.grid;
    let cols: Vec<usize> = (0..g.n_nodes())
        .filter(|&j| g.x(j).abs() <= o.x_max)
        .collect();
    let samples = replicates(ctx, |_, seed| {
        let path = s.path(&make_noise(&g, seed))?;
        Ok(o.ts
            .iter()
            .map(|&t| {
                let row = path.row(path.row_of(t).expect("validated"));
                cols.iter().map(|&j| row[j]).collect::<Vec<f64>>()
            })
            .collect::<Vec<_>>())
    })?;
    let l1 = lyapunov_estimate(&o.ts, &samples, 1)?;
    let l2 = lyapunov_estimate(&o.ts, &samples, 2)?;
    let log_moment = |i: usize, p: i32| {
        let n = (samples.len() * cols.len()) as f64;
        (samples
            .iter()
            .map(|r| r[i].iter().map(|v| v.abs().powi(p)).sum::<f64>())
            .sum::<f64>()
            / n)
            .ln()
    };
    let rows: Vec<Vec<f64>> =
        o.ts.iter()
            .enumerate()
            .map(|(i, &t)| vec![t, log_moment(i, 1), log_moment(i, 2)])
            .collect();
    ctx.csv("log_moments.csv", &["t", "log_m1", "log_m2"], &rows)?;
    let pts = |c: usize| rows.iter().map(|r| (r[0], r[c])).collect::<Vec<_>>();
    ctx.svg(
        "log_moments.svg",
        &plot(
            "log moments",
            "t",
            "log E|u|^p",
            (false, false),
            vec![("p=1".into(), pts(1)), ("p=2".into(), pts(2))],
        ),
    )?;
    ctx.value("p1", &l1)?;
    ctx.value("p2", &l2)?;
    ctx.check(
        "p1_slope_zero",
        l1.lower_slope <= 0.0 && 0.0 <= l1.upper_slope,
        format!(
            "{:.4} +- {:.4}, 99% ({:.4}, {:.4})",
            l1.slope, l1.stderr, l1.lower_slope, l1.upper_slope
        ),
    );
    ctx.check(
        "p2_slope_positive_99",
        l2.lower_slope > 0.0,
        format!(
            "{:.4} +- {:.4}, 99% ({:.4}, {:.4})",
            l2.slope, l2.stderr, l2.lower_slope, l2.upper_slope
        ),
    );
    Ok(())
}
