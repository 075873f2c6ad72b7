//! Scaling exponents of structure-function curves and the Onsager indicator
//! `(1/ε) d_ε³(ν²)³`.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::structure::StructureFunctionCurve;

/// Ordinary least squares on `(x, y)` pairs: `(slope, intercept, rms)`.
pub fn least_squares(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (points
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, intercept, rms)
}

fn log_points(eps: &[f64], values: &[f64], window: (usize, usize)) -> Vec<(f64, f64)> {
    let hi = window.1.min(eps.len().saturating_sub(1));
    (window.0..=hi)
        .filter(|&j| values[j] > 0.0)
        .map(|j| (eps[j].ln(), values[j].ln()))
        .collect()
}

/// Slope of `log d_ε` against `log ε` over `window` (the curve's own window
/// when `None`) and the RMS residual of the fit.
pub fn fit_exponent(
    curve: &StructureFunctionCurve,
    window: Option<(usize, usize)>,
) -> Result<(f64, f64)> {
    let window = window
        .or(curve.window)
        .unwrap_or((0, curve.eps.len().saturating_sub(1)));
    let pts = log_points(&curve.eps, &curve.values, window);
    if pts.len() < 3 {
        return Err(Error::DegenerateFit);
    }
    let (slope, _, rms) = least_squares(&pts);
    Ok((slope, rms))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OnsagerVerdict {
    ConservativeRegime,
    DissipativeRisk,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OnsagerIndicator {
    pub eps: Vec<f64>,
    pub values: Vec<f64>,
    /// Slope of `log values` against `log ε`, equal to `3α - 1`.
    pub trend_slope: Option<f64>,
    /// Smallest value over the fit window.
    pub tail_min: f64,
    pub verdict: OnsagerVerdict,
}

impl OnsagerIndicator {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,value\n");
        for (e, v) in self.eps.iter().zip(&self.values) {
            let _ = writeln!(out, "{e:.16e},{v:.16e}");
        }
        out
    }
}

const SLOPE_BAND: f64 = 0.05;

/// Classifies a `q = 3` curve: values decreasing toward small ε with slope
/// at least 0.05 is the conservative regime, slope at most -0.05 is a
/// dissipative risk, anything between is inconclusive. A curve that is
/// identically zero satisfies the condition trivially.
pub fn onsager_indicator(curve: &StructureFunctionCurve) -> Result<OnsagerIndicator> {
    if curve.q != 3.0 {
        return Err(Error::UnsupportedExponent(curve.q));
    }
    let values: Vec<f64> = curve
        .eps
        .iter()
        .zip(&curve.values)
        .map(|(e, d)| d * d * d / e)
        .collect();
    let window = curve.window.unwrap_or((0, values.len().saturating_sub(1)));
    let hi = window.1.min(values.len().saturating_sub(1));
    let tail_min = values[window.0..=hi]
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let pts = log_points(&curve.eps, &values, window);
    let (trend_slope, verdict) = if values[window.0..=hi].iter().all(|&v| v == 0.0) {
        (None, OnsagerVerdict::ConservativeRegime)
    } else if pts.len() < 2 {
        (None, OnsagerVerdict::Inconclusive)
    } else {
        let slope = least_squares(&pts).0;
        let verdict = if slope >= SLOPE_BAND {
            OnsagerVerdict::ConservativeRegime
        } else if slope <= -SLOPE_BAND {
            OnsagerVerdict::DissipativeRisk
        } else {
            OnsagerVerdict::Inconclusive
        };
        (Some(slope), verdict)
    };
    Ok(OnsagerIndicator {
        eps: curve.eps.clone(),
        values,
        trend_slope,
        tail_min,
        verdict,
    })
}
