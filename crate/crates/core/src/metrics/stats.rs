use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Pooled two-sample Student's t result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatResult {
    pub t: f64,
    pub df: f64,
    /// Two-sided p-value.
    pub p: f64,
    /// `mean(xs) − mean(ys)`.
    pub mean_diff: f64,
    /// 95% CI of the mean difference.
    pub ci_low: f64,
    pub ci_high: f64,
}

impl StatResult {
    /// One-sided p-value for the alternative `mean(xs) > mean(ys)`.
    pub fn p_greater(&self) -> f64 {
        if self.t == 0.0 && self.mean_diff == 0.0 && self.p == 1.0 {
            return 0.5;
        }
        1.0 - student_t(self.df).cdf(self.t)
    }

    /// One-sided p-value for the alternative `mean(xs) < mean(ys)`.
    pub fn p_less(&self) -> f64 {
        if self.t == 0.0 && self.mean_diff == 0.0 && self.p == 1.0 {
            return 0.5;
        }
        student_t(self.df).cdf(self.t)
    }
}

fn student_t(df: f64) -> StudentsT {
    StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom")
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sum of squared deviations from the mean.
fn ss(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum()
}

fn check_sample(xs: &[f64], what: &str) -> Result<()> {
    if xs.len() < 2 {
        return Err(Error::DegenerateSample(format!("{what} needs at least 2 values, got {}", xs.len())));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateSample(format!("{what} contains a non-finite value")));
    }
    Ok(())
}

/// Pooled-variance two-sample t-test with df = n1 + n2 − 2.
pub fn two_sample_t(xs: &[f64], ys: &[f64]) -> Result<StatResult> {
    check_sample(xs, "first sample")?;
    check_sample(ys, "second sample")?;
    let (n1, n2) = (xs.len() as f64, ys.len() as f64);
    let df = n1 + n2 - 2.0;
    let mean_diff = mean(xs) - mean(ys);
    let pooled = (ss(xs) + ss(ys)) / df;
    let se = (pooled * (1.0 / n1 + 1.0 / n2)).sqrt();
    if se == 0.0 {
        if mean_diff == 0.0 {
            return Ok(StatResult { t: 0.0, df, p: 1.0, mean_diff, ci_low: 0.0, ci_high: 0.0 });
        }
        return Err(Error::DegenerateSample("zero pooled variance with unequal means".into()));
    }
    let dist = student_t(df);
    let t = mean_diff / se;
    let p = (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0);
    let crit = dist.inverse_cdf(0.975);
    Ok(StatResult { t, df, p, mean_diff, ci_low: mean_diff - crit * se, ci_high: mean_diff + crit * se })
}

/// `(mean, t_{0.975, n−1} · s / √n)`.
pub fn ci95(xs: &[f64]) -> Result<(f64, f64)> {
    check_sample(xs, "sample")?;
    let n = xs.len() as f64;
    let s = (ss(xs) / (n - 1.0)).sqrt();
    let crit = student_t(n - 1.0).inverse_cdf(0.975);
    Ok((mean(xs), crit * s / n.sqrt()))
}
