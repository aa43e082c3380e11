//! Statistics kit backing the Monte Carlo assertions: summary moments,
//! one- and two-sample Kolmogorov-Smirnov tests, chi-square goodness of
//! fit, and a paired variance comparison.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};

/// Sample moments: unbiased variance; skewness `m3/m2^{3/2}` and excess
/// kurtosis `m4/m2^2 − 3` from central moments (zero for exact normality).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis_excess: f64,
}

pub fn moments(sample: &[f64]) -> Result<Moments> {
    if sample.len() < 2 {
        return Err(Error::invalid("moments need at least two observations"));
    }
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in sample {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let variance = m2 / (n - 1.0);
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let (skewness, kurtosis_excess) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    } else {
        (0.0, 0.0)
    };
    Ok(Moments { mean, variance, skewness, kurtosis_excess })
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// One-sample Kolmogorov-Smirnov statistic against a reference CDF.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::invalid("KS statistic of an empty sample"));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

/// Asymptotic Kolmogorov distribution survival function with the
/// small-sample effective-size correction `sqrt(n) + 0.12 + 0.11/sqrt(n)`.
pub fn ks_p_value(statistic: f64, n: usize) -> f64 {
    let sqrt_n = (n as f64).sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * statistic;
    kolmogorov_survival(lambda)
}

fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = (-2.0 * (j as f64) * (j as f64) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-12 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS test: statistic plus asymptotic p-value.
pub fn one_sample_ks(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
    let d = ks_statistic(sample, cdf)?;
    Ok((d, ks_p_value(d, sample.len())))
}

/// Two-sample Kolmogorov-Smirnov test with the effective sample size
/// `n_a n_b / (n_a + n_b)` in the asymptotic p-value.
pub fn two_sample_ks(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("two-sample KS needs nonempty samples"));
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let n_eff = na * nb / (na + nb);
    let sqrt_n = n_eff.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    Ok((d, kolmogorov_survival(lambda)))
}

/// Chi-square goodness of fit of observed counts against expected counts.
/// Degrees of freedom: bins − 1.
pub fn chi_square_gof(observed: &[f64], expected: &[f64]) -> Result<(f64, f64)> {
    if observed.is_empty() || observed.len() != expected.len() {
        return Err(Error::invalid("observed and expected must be equal-length and nonempty"));
    }
    if observed.len() < 2 {
        return Err(Error::invalid("chi-square needs at least two bins"));
    }
    if expected.iter().any(|&e| e < 5.0) {
        return Err(Error::invalid("chi-square expects at least 5 expected counts per bin"));
    }
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| {
            let d = o - e;
            d * d / e
        })
        .sum();
    let df = (observed.len() - 1) as f64;
    let dist = ChiSquared::new(df).map_err(|e| Error::invalid(format!("chi-square df: {e}")))?;
    Ok((stat, 1.0 - dist.cdf(stat)))
}

/// Paired one-sided variance comparison (Pitman-Morgan): for paired
/// samples `(a_i, b_i)`, `Var[a] > Var[b]` exactly when the sums and
/// differences are positively correlated, so the test is a one-sided
/// t-test on `corr(a+b, a−b)` with `m − 2` degrees of freedom. Returns
/// `(t, p)` with small `p` favoring `Var[a] > Var[b]`.
pub fn paired_variance_gt(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.len() != b.len() || a.len() < 3 {
        return Err(Error::invalid("paired variance test needs equal lengths of at least 3"));
    }
    let m = a.len() as f64;
    let sums: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + y).collect();
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean_s = sums.iter().sum::<f64>() / m;
    let mean_d = diffs.iter().sum::<f64>() / m;
    let (mut css, mut cdd, mut csd) = (0.0, 0.0, 0.0);
    for i in 0..a.len() {
        let ds = sums[i] - mean_s;
        let dd = diffs[i] - mean_d;
        css += ds * ds;
        cdd += dd * dd;
        csd += ds * dd;
    }
    if css <= 0.0 || cdd <= 0.0 {
        // One of the transformed samples is constant: no evidence either way.
        return Ok((0.0, 0.5));
    }
    let rho = (csd / (css * cdd).sqrt()).clamp(-1.0, 1.0);
    let df = m - 2.0;
    let t = if rho.abs() >= 1.0 {
        f64::INFINITY * rho.signum()
    } else {
        rho * (df / (1.0 - rho * rho)).sqrt()
    };
    let dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::invalid(format!("t distribution: {e}")))?;
    let p = if t.is_infinite() {
        if t > 0.0 {
            0.0
        } else {
            1.0
        }
    } else {
        1.0 - dist.cdf(t)
    };
    Ok((t, p))
}
