use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::IndexError;

pub const DEFAULT_BANDWIDTH_DAYS: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    pub date: NaiveDate,
    pub value: Option<f64>,
    pub se: Option<f64>,
}

fn tricube(u: f64) -> f64 {
    let a = 1.0 - u.abs().powi(3);
    if a <= 0.0 {
        0.0
    } else {
        a * a * a
    }
}

/// Local-linear regression with tricube weights of half-width `bandwidth`
/// days, evaluated at every input date (missing inputs included).
///
/// The standard error is the pointwise SE of the fitted intercept,
/// `σ̂ ·‖l‖` where `l` are the equivalent kernel weights and `σ̂²` is the
/// weighted residual variance of the local fit. Windows with fewer than
/// three observations give a missing trend.
pub fn local_linear_trend(
    series: &[(NaiveDate, Option<f64>)],
    bandwidth: f64,
) -> Result<Vec<TrendPoint>, IndexError> {
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(IndexError::Bandwidth(bandwidth));
    }
    let obs: Vec<(f64, f64)> = series
        .iter()
        .filter_map(|(d, v)| Some((d.num_days_from_ce() as f64, (*v)?)))
        .collect();
    if obs.len() < 5 {
        return Err(IndexError::TooFewPoints {
            needed: 5,
            got: obs.len(),
        });
    }
    Ok(series
        .iter()
        .map(|(date, _)| {
            let t0 = date.num_days_from_ce() as f64;
            let (value, se) = fit_at(&obs, t0, bandwidth).unzip();
            TrendPoint {
                date: *date,
                value,
                se,
            }
        })
        .collect())
}

use chrono::Datelike;

fn fit_at(obs: &[(f64, f64)], t0: f64, h: f64) -> Option<(f64, f64)> {
    let local: Vec<(f64, f64, f64)> = obs
        .iter()
        .filter_map(|&(t, y)| {
            let w = tricube((t - t0) / h);
            (w > 0.0).then_some((t - t0, y, w))
        })
        .collect();
    let m = local.len();
    if m < 3 {
        return None;
    }
    let (mut s0, mut s1, mut s2, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y, w) in &local {
        s0 += w;
        s1 += w * x;
        s2 += w * x * x;
        sy += w * y;
        sxy += w * x * y;
    }
    let det = s0 * s2 - s1 * s1;
    if det <= 1e-12 * s0 * s2.max(1.0) {
        return None;
    }
    let intercept = (s2 * sy - s1 * sxy) / det;
    let slope = (s0 * sxy - s1 * sy) / det;

    let mut rss = 0.0;
    let mut leverage = 0.0;
    for &(x, y, w) in &local {
        let r = y - intercept - slope * x;
        rss += w * r * r;
        let l = w * (s2 - s1 * x) / det;
        leverage += l * l;
    }
    let sigma2 = rss / s0 * m as f64 / (m as f64 - 2.0);
    Some((intercept, (sigma2 * leverage).sqrt()))
}
