//! Classical statistics used by the result analyses: Welch's t-test,
//! ordinary least squares with a slope t-test, a two-proportion z-test
//! and trajectory path lengths.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("need at least {need} samples, got {got}")]
    SampleTooSmall { need: usize, got: usize },
    #[error("both samples have zero variance")]
    ZeroVariance,
    #[error("x values are constant; regression undefined")]
    ConstantX,
    #[error("x and y lengths differ: {0} vs {1}")]
    MismatchedLengths(usize, usize),
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_var(v: &[f64], m: f64) -> f64 {
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TTestResult {
    pub t: f64,
    /// Welch-Satterthwaite degrees of freedom.
    pub dof: f64,
    pub p_two_sided: f64,
}

/// Welch's unequal-variance t-test.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult, StatsError> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(StatsError::SampleTooSmall {
                need: 2,
                got: s.len(),
            });
        }
    }
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (sample_var(a, ma), sample_var(b, mb));
    if va == 0.0 && vb == 0.0 {
        if ma == mb {
            // Identical constant samples: no evidence of a difference.
            return Ok(TTestResult {
                t: 0.0,
                dof: (a.len() + b.len() - 2) as f64,
                p_two_sided: 1.0,
            });
        }
        return Err(StatsError::ZeroVariance);
    }
    let sa = va / a.len() as f64;
    let sb = vb / b.len() as f64;
    let t = (ma - mb) / (sa + sb).sqrt();
    let dof = (sa + sb) * (sa + sb)
        / (sa * sa / (a.len() as f64 - 1.0) + sb * sb / (b.len() as f64 - 1.0));
    let dist = StudentsT::new(0.0, 1.0, dof).expect("valid dof");
    let p = 2.0 * (1.0 - dist.cdf(t.abs()));
    Ok(TTestResult {
        t,
        dof,
        p_two_sided: p,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_se: f64,
    /// Two-sided p-value of the slope against zero.
    pub p_slope: f64,
    pub n: usize,
}

/// Ordinary least squares of `y` on `x` with a t-test on the slope.
pub fn linear_regression(x: &[f64], y: &[f64]) -> Result<Regression, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::MismatchedLengths(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(StatsError::SampleTooSmall {
            need: 3,
            got: x.len(),
        });
    }
    let n = x.len() as f64;
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return Err(StatsError::ConstantX);
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;

    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let e = b - (intercept + slope * a);
            e * e
        })
        .sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };

    let dof = n - 2.0;
    let sigma2 = sse / dof;
    let slope_se = (sigma2 / sxx).sqrt();
    let p_slope = if slope_se == 0.0 {
        0.0
    } else {
        let dist = StudentsT::new(0.0, 1.0, dof).expect("valid dof");
        2.0 * (1.0 - dist.cdf((slope / slope_se).abs()))
    };
    Ok(Regression {
        slope,
        intercept,
        r_squared,
        slope_se,
        p_slope,
        n: x.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoProportionResult {
    pub z: f64,
    pub p_two_sided: f64,
}

/// Pooled two-proportion z-test for success counts.
pub fn two_proportion_test(
    successes_a: usize,
    n_a: usize,
    successes_b: usize,
    n_b: usize,
) -> Result<TwoProportionResult, StatsError> {
    if n_a == 0 || n_b == 0 {
        return Err(StatsError::SampleTooSmall { need: 1, got: 0 });
    }
    let pa = successes_a as f64 / n_a as f64;
    let pb = successes_b as f64 / n_b as f64;
    let pool = (successes_a + successes_b) as f64 / (n_a + n_b) as f64;
    let se = (pool * (1.0 - pool) * (1.0 / n_a as f64 + 1.0 / n_b as f64)).sqrt();
    if se == 0.0 {
        return Ok(TwoProportionResult {
            z: 0.0,
            p_two_sided: 1.0,
        });
    }
    let z = (pa - pb) / se;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    Ok(TwoProportionResult {
        z,
        p_two_sided: 2.0 * (1.0 - normal.cdf(z.abs())),
    })
}

/// Sum of Euclidean segment lengths along a polyline.
pub fn path_length(points: &[[f64; 2]]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
        .sum()
}
