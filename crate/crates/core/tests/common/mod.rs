//! Shared statistics helpers for the integration tests: Kolmogorov-
//! Smirnov machinery and windowed slope fits on recorded time series.
// Each test binary compiles its own copy and uses a different subset.
#![allow(dead_code)]

use coalsim::diagnostics::{fit_line, MomentRecord};
use statrs::distribution::{ContinuousCDF, Normal};

/// One-sample Kolmogorov-Smirnov statistic of `samples` against the CDF
/// `f`. Sorts a copy; ties are handled by the usual sup over both
/// one-sided gaps at each order statistic.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], f: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (k, &x) in xs.iter().enumerate() {
        let cdf = f(x);
        d = d.max((k as f64 + 1.0) / n - cdf).max(cdf - k as f64 / n);
    }
    d
}

/// Two-sample Kolmogorov-Smirnov statistic: sup over the pooled sample of
/// the gap between the two empirical CDFs.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(|p, q| p.total_cmp(q));
    xb.sort_by(|p, q| p.total_cmp(q));
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic Kolmogorov-Smirnov critical coefficient
/// `c(alpha) = sqrt(-ln(alpha/2) / 2)`; the one-sample critical value is
/// `c / sqrt(n)` and the two-sample one is `c * sqrt((n + m) / (n m))`.
pub fn ks_critical_coefficient(alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().cdf(x)
}

/// OLS fit of `value(record)` against time over the records with
/// `t0 <= t <= t1`; returns `(slope, r_squared)`.
pub fn windowed_slope<F: Fn(&MomentRecord) -> f64>(
    records: &[MomentRecord],
    t0: f64,
    t1: f64,
    value: F,
) -> (f64, f64) {
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for r in records {
        if r.time >= t0 - 1e-12 && r.time <= t1 + 1e-12 {
            ts.push(r.time);
            ys.push(value(r));
        }
    }
    let (slope, _, r2) = fit_line(&ts, &ys).expect("slope window holds at least two records");
    (slope, r2)
}

/// Print the per-criterion verdict line and return whether it passed, so
/// the assertion site stays next to the numbers.
pub fn verdict(label: &str, pass: bool, detail: &str) -> bool {
    println!(
        "acceptance {label}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}
