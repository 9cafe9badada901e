use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Ordinary least-squares fit `y ≈ intercept + slope·x` with the usual
/// t-test on the slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearTrend {
    pub n: usize,
    pub slope: f64,
    pub intercept: f64,
    pub slope_std_err: f64,
    pub t_stat: f64,
    /// Two-sided p-value for `slope = 0`.
    pub p_value: f64,
    pub mean_y: f64,
}

pub fn linear_trend(xs: &[f64], ys: &[f64]) -> Result<LinearTrend> {
    if xs.len() != ys.len() {
        return Err(Error::invalid("trend inputs differ in length"));
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::invalid("trend needs at least 3 points"));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::invalid("trend abscissae are all equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(&x, &y)| (y - intercept - slope * x).powi(2)).sum();
    let dof = nf - 2.0;
    let se = (sse / dof / sxx).sqrt();
    let (t_stat, p_value) = if se == 0.0 {
        (if slope == 0.0 { 0.0 } else { slope.signum() * f64::INFINITY }, if slope == 0.0 { 1.0 } else { 0.0 })
    } else {
        let t = slope / se;
        let dist = StudentsT::new(0.0, 1.0, dof).expect("positive dof");
        (t, 2.0 * (1.0 - dist.cdf(t.abs())))
    };
    Ok(LinearTrend { n, slope, intercept, slope_std_err: se, t_stat, p_value, mean_y: my })
}

/// Population mean and standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    // Shifting by the first value makes identical inputs give exactly zero spread.
    let n = xs.len() as f64;
    let shift = xs[0];
    let mean = shift + xs.iter().map(|x| x - shift).sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}
