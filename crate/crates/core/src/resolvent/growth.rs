use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit_slope;
use super::norms::resolvent_norm;
use crate::pencil::QuadraticPencil;
use crate::{Error, Result, C64};

/// Distance from the circle `|λ| = r` to the nearest pole.
pub fn circle_pole_distance(r: f64, poles: &[C64]) -> f64 {
    poles
        .iter()
        .map(|z| (z.norm() - r).abs())
        .fold(f64::INFINITY, f64::min)
}

/// One radius per band `[lo, hi]`, chosen to maximize the distance to the
/// poles over `candidates` equally spaced trial radii.
pub fn select_radii(
    bands: &[(f64, f64)],
    poles: &[C64],
    candidates: usize,
    min_gap: f64,
) -> Result<Vec<f64>> {
    let candidates = candidates.max(2);
    bands
        .iter()
        .map(|&(lo, hi)| {
            if !(lo > 0.0 && hi > lo) {
                return Err(Error::InvalidInput(format!("band [{lo}, {hi}] is empty")));
            }
            let (r, d) = (0..candidates)
                .map(|k| lo + (hi - lo) * k as f64 / (candidates - 1) as f64)
                .map(|r| (r, circle_pole_distance(r, poles)))
                .fold((lo, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if d < min_gap {
                return Err(Error::Contour(format!(
                    "no radius in [{lo}, {hi}] keeps {min_gap} away from the poles"
                )));
            }
            Ok(r)
        })
        .collect()
}

/// Geometric bands `[r, 2r]` covering `[r0, r1]`.
pub fn dyadic_bands(r0: f64, r1: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut lo = r0;
    while lo < r1 {
        let hi = (2.0 * lo).min(r1);
        out.push((lo, hi));
        lo = hi;
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CircleRow {
    pub radius: f64,
    pub max_log_norm: f64,
    pub min_pole_distance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CircleReport {
    pub rows: Vec<CircleRow>,
    /// Slope of `ln(1 + ln⁺ max‖T⁻¹‖)` against `ln r`.
    pub growth_exponent: f64,
    pub p: f64,
    pub eps: f64,
    pub within_bound: bool,
}

/// Maximum of `ln‖T(λ)⁻¹‖` over `n_theta` points of each circle `|λ| = r`.
pub fn circle_growth_scan(
    p: &QuadraticPencil,
    radii: &[f64],
    poles: &[C64],
    n_theta: usize,
    p_exp: f64,
    eps: f64,
) -> Result<CircleReport> {
    if radii.len() < 2 || n_theta < 4 {
        return Err(Error::InvalidInput("need two radii and four angles".into()));
    }
    let rows = radii
        .iter()
        .map(|&r| {
            let logs = (0..n_theta)
                .into_par_iter()
                .map(|k| {
                    let th = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n_theta as f64;
                    resolvent_norm(p, C64::from_polar(r, th)).map(f64::ln)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(CircleRow {
                radius: r,
                max_log_norm: logs.into_iter().fold(f64::NEG_INFINITY, f64::max),
                min_pole_distance: circle_pole_distance(r, poles),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .map(|row| (row.radius.ln(), (1.0 + row.max_log_norm.max(0.0)).ln()))
        .unzip();
    let growth_exponent = fit_slope(&xs, &ys);
    Ok(CircleReport {
        rows,
        growth_exponent,
        p: p_exp,
        eps,
        within_bound: growth_exponent <= p_exp + eps,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TInfinity {
    pub radius: f64,
    /// Circle average of `ln⁺‖T(λ)⁻¹‖` over the unmasked samples.
    pub log_term: f64,
    /// `Σ_{0<|λⱼ|<r} ln(r/|λⱼ|) + n(0) ln r`, with multiplicity.
    pub pole_term: f64,
    pub value: f64,
    pub masked: usize,
    pub samples: usize,
}

/// Largest fraction of circle samples that may be skipped near poles.
pub const MAX_MASKED_FRACTION: f64 = 0.05;

/// Circle characteristic of `T⁻¹`: mean of `ln⁺‖T⁻¹‖` plus the counting
/// integral of the poles inside the circle.
pub fn t_infinity_estimate(
    p: &QuadraticPencil,
    radius: f64,
    n_samples: usize,
    poles: &[(C64, usize)],
) -> Result<TInfinity> {
    if !(radius > 0.0) || n_samples < 4 {
        return Err(Error::InvalidInput("need a positive radius and four samples".into()));
    }
    let mask_dist = 1e-8 * radius.max(1.0);
    let vals: Vec<Option<f64>> = (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n_samples as f64;
            let l = C64::from_polar(radius, th);
            if poles.iter().any(|(z, _)| (z - l).norm() < mask_dist) {
                return None;
            }
            resolvent_norm(p, l).ok().map(|v| v.ln().max(0.0))
        })
        .collect();
    let masked = vals.iter().filter(|v| v.is_none()).count();
    if masked as f64 > MAX_MASKED_FRACTION * n_samples as f64 {
        return Err(Error::Contour(format!(
            "{masked} of {n_samples} samples on |λ| = {radius} hit poles"
        )));
    }
    let kept: Vec<f64> = vals.into_iter().flatten().collect();
    let log_term = kept.iter().sum::<f64>() / kept.len() as f64;
    let floor = 1e-12 * radius;
    let pole_term = poles
        .iter()
        .filter(|(z, _)| z.norm() < radius)
        .map(|&(z, m)| {
            let a = z.norm();
            m as f64 * if a <= floor { radius.ln() } else { (radius / a).ln() }
        })
        .sum();
    Ok(TInfinity {
        radius,
        log_term,
        pole_term,
        value: log_term + pole_term,
        masked,
        samples: n_samples,
    })
}
