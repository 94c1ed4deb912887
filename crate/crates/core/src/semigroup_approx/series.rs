use crate::error::{out_of_range, Result};

fn ln_term(b: f64, z: f64, k: f64) -> f64 {
    // e^{-z} z^{b+1} z^{k-1} / (k! k^b)
    if k < 60.0 {
        // z^k / k! as a running product; ln_gamma loses ~1e-13 here
        let mut p = (-z).exp();
        for j in 1..=k as usize {
            p *= z / j as f64;
        }
        return p.ln() + b * (z / k).ln();
    }
    // Stirling form keeps the cancellation between -z, k ln z and ln k! exact
    let corr = 1.0 / (12.0 * k) - 1.0 / (360.0 * k.powi(3)) + 1.0 / (1260.0 * k.powi(5));
    (k - z) + k * ((z - k) / k).ln_1p() - 0.5 * (2.0 * std::f64::consts::PI * k).ln() - corr
        + b * (z / k).ln()
}

/// ln(t_{k+1} / t_k) for the terms above.
fn ln_ratio(b: f64, z: f64, k: f64) -> f64 {
    z.ln() - (k + 1.0).ln() - b * (1.0 / k).ln_1p()
}

/// f_b(z) = e^{-z} z^{b+1} sum_{k>=1} z^{k-1} / (k! k^b), summed in log space
/// outward from the largest term.
pub fn approx_series_f(b: f64, z: f64) -> f64 {
    if z == 0.0 {
        return if b == -1.0 {
            1.0
        } else if b > -1.0 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    if !(z > 0.0) || !b.is_finite() {
        return f64::NAN;
    }
    // terms peak near k ~ z
    let peak = z.round().max(1.0);
    let l_peak = ln_term(b, z, peak);
    let mut sum = l_peak.exp();
    let (mut k, mut l) = (peak, l_peak);
    loop {
        l += ln_ratio(b, z, k);
        k += 1.0;
        let t = l.exp();
        sum += t;
        if t <= 1e-16 * sum && k > z + 2.0 {
            break;
        }
    }
    let (mut k, mut l) = (peak, l_peak);
    while k > 1.0 {
        l -= ln_ratio(b, z, k - 1.0);
        k -= 1.0;
        let t = l.exp();
        sum += t;
        if t <= 1e-16 * sum && k < z {
            break;
        }
    }
    sum
}

/// Supremum over z >= 0 of `f`, given its limit at infinity: log-spaced scan
/// on [1e-8, 1e5] followed by golden-section refinement at the best cell.
pub(crate) fn sup_on_half_line(f: impl Fn(f64) -> f64, at_zero: f64, at_inf: f64) -> f64 {
    let n = 1300;
    let (lo, hi) = (1e-8f64.ln(), 1e5f64.ln());
    let node = |i: usize| (lo + (hi - lo) * i as f64 / n as f64).exp();
    let (mut best_i, mut best) = (0, f64::MIN);
    for i in 0..=n {
        let v = f(node(i));
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let (mut a, mut b) = (
        node(best_i.saturating_sub(1)).ln(),
        node((best_i + 1).min(n)).ln(),
    );
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let fl = |u: f64| f(u.exp());
    let (mut x1, mut x2) = (b - g * (b - a), a + g * (b - a));
    let (mut f1, mut f2) = (fl(x1), fl(x2));
    while b - a > 1e-10 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = fl(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = fl(x1);
        }
    }
    best.max(f1).max(f2).max(at_zero).max(at_inf)
}

/// C_b = sup_{z >= 0} f_b(z), including the limit f_b(infinity) = 1.
pub fn c_b_sup(b: f64) -> Result<f64> {
    if !(b >= -1.0) {
        return Err(out_of_range("b", b, "need b >= -1"));
    }
    Ok(sup_on_half_line(
        |z| approx_series_f(b, z),
        approx_series_f(b, 0.0),
        1.0,
    ))
}

/// sup_{z >= 0} e^{-z} z (4z^2 + 7z + 1) sum_k z^{k-1} / (k! k^2), limit 4 at infinity.
pub fn l1_sup_factor() -> f64 {
    sup_on_half_line(
        |z| approx_series_f(2.0, z) * (4.0 * z * z + 7.0 * z + 1.0) / (z * z),
        0.0,
        4.0,
    )
}
