//! t-tests over per-item outcomes, with a self-contained Student-t tail.

mod special;

use serde::{Deserialize, Serialize};

pub use special::{beta_inc, ln_beta, ln_gamma, BETA_MAX_ITER, BETA_TOL};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("degenerate: no variance")]
    Degenerate,
    #[error("need at least {needed} observations, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("degrees of freedom must be positive, got {0}")]
    InvalidDf(f64),
    #[error("non-finite input")]
    NonFinite,
    #[error("incomplete beta did not converge")]
    NoConvergence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Positive,
    Negative,
    Zero,
}

impl Direction {
    fn of(v: f64) -> Self {
        if v > 0.0 {
            Direction::Positive
        } else if v < 0.0 {
            Direction::Negative
        } else {
            Direction::Zero
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsResult {
    pub test_name: String,
    pub t: f64,
    pub df: f64,
    /// Two-sided p-value.
    pub p: f64,
    /// Sign of the mean difference `x − y`.
    pub direction: Direction,
    pub mean_difference: f64,
    pub n: usize,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample variance with `n − 1` denominator.
fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

fn check_finite(v: &[f64]) -> Result<(), StatsError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}

/// Student-t CDF.
pub fn t_cdf(t: f64, df: f64) -> Result<f64, StatsError> {
    let tail = t_sf(t, df)? / 2.0;
    Ok(if t >= 0.0 { 1.0 - tail } else { tail })
}

/// Two-sided tail probability `2·(1 − CDF(|t|, df))`.
pub fn t_sf(t: f64, df: f64) -> Result<f64, StatsError> {
    if !df.is_finite() || df <= 0.0 {
        return Err(StatsError::InvalidDf(df));
    }
    if t.is_nan() {
        return Err(StatsError::NonFinite);
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    let x = df / (df + t * t);
    beta_inc(df / 2.0, 0.5, x).ok_or(StatsError::NoConvergence)
}

/// Paired t-test on `d = x − y`.
pub fn paired_t(x: &[f64], y: &[f64]) -> Result<StatsResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let diffs: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    one_sample_t(&diffs, "paired_t")
}

/// One-sample t-test of `mean(d) = 0`.
pub fn one_sample_t(d: &[f64], name: &str) -> Result<StatsResult, StatsError> {
    let n = d.len();
    if n < 2 {
        return Err(StatsError::TooFew { needed: 2, got: n });
    }
    check_finite(d)?;
    let m = mean(d);
    let sd = variance(d).sqrt();
    if sd == 0.0 {
        return Err(StatsError::Degenerate);
    }
    let t = m / (sd / (n as f64).sqrt());
    let df = (n - 1) as f64;
    Ok(StatsResult {
        test_name: name.into(),
        t,
        df,
        p: t_sf(t, df)?,
        direction: Direction::of(m),
        mean_difference: m,
        n,
    })
}

/// Welch's unequal-variance t-test of `mean(x) = mean(y)`.
///
/// Degenerate only when both samples have zero variance.
pub fn welch_t(x: &[f64], y: &[f64]) -> Result<StatsResult, StatsError> {
    for s in [x, y] {
        if s.len() < 2 {
            return Err(StatsError::TooFew { needed: 2, got: s.len() });
        }
        check_finite(s)?;
    }
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let (vx, vy) = (variance(x) / nx, variance(y) / ny);
    let se2 = vx + vy;
    if se2 == 0.0 {
        return Err(StatsError::Degenerate);
    }
    let diff = mean(x) - mean(y);
    let t = diff / se2.sqrt();
    let df = se2 * se2 / (vx * vx / (nx - 1.0) + vy * vy / (ny - 1.0));
    Ok(StatsResult {
        test_name: "welch_t".into(),
        t,
        df,
        p: t_sf(t, df)?,
        direction: Direction::of(diff),
        mean_difference: diff,
        n: x.len() + y.len(),
    })
}

/// Exact two-sided binomial test: total probability of outcomes no more
/// likely than `successes` under `Binomial(n, p0)`.
pub fn binomial_test(successes: usize, n: usize, p0: f64) -> Result<f64, StatsError> {
    if successes > n {
        return Err(StatsError::TooFew { needed: successes, got: n });
    }
    if !(0.0..=1.0).contains(&p0) {
        return Err(StatsError::NonFinite);
    }
    let ln_pmf = |k: usize| -> f64 {
        let (k, nf) = (k as f64, n as f64);
        let ln_choose = ln_gamma(nf + 1.0) - ln_gamma(k + 1.0) - ln_gamma(nf - k + 1.0);
        let term = |count: f64, p: f64| if count == 0.0 { 0.0 } else { count * p.ln() };
        ln_choose + term(k, p0) + term(nf - k, 1.0 - p0)
    };
    let observed = ln_pmf(successes);
    let p: f64 = (0..=n)
        .map(ln_pmf)
        .filter(|&lp| lp <= observed + 1e-7 * observed.abs().max(1.0))
        .map(f64::exp)
        .sum();
    Ok(p.min(1.0))
}
