use nalgebra::DVector;
use rayon::prelude::*;

use crate::linalg::{self, CMat, CVec};
use crate::pencil::QuadraticPencil;
use crate::{Error, Result, C64};

/// Default number of trapezoid nodes on the contour.
pub const DEFAULT_N_QUAD: usize = 256;

/// Relative threshold below which a singular coefficient counts as zero.
pub const NOISE_FLOOR: f64 = 1e-8;

/// Laurent expansion `T(λ)⁻¹ = Σ_{n ≥ −N} C_n (λ − λ₀)ⁿ` from contour
/// integrals on `|λ − λ₀| = radius`.
#[derive(Clone, Debug)]
pub struct LaurentData {
    pub lambda0: C64,
    /// Pole order `N`.
    pub order: usize,
    pub radius: f64,
    pub n_quad: usize,
    /// `(n, C_n)` in increasing `n`, from `−(max_order + 1)` up.
    pub coefficients: Vec<(i32, CMat)>,
    /// Relative residual of `Σ_{j≤k} B_{k−j} C_{j−N}` for `k < N`.
    pub relation_residuals: Vec<f64>,
    /// Change in `C_{−1}` when the contour uses half the nodes.
    pub quadrature_error: f64,
}

impl LaurentData {
    pub fn coefficient(&self, n: i32) -> Option<&CMat> {
        self.coefficients.iter().find(|(k, _)| *k == n).map(|(_, c)| c)
    }
}

fn contour_sums(
    p: &QuadraticPencil,
    lambda0: C64,
    radius: f64,
    n_quad: usize,
    ns: &[i32],
) -> Result<Vec<CMat>> {
    let dim = p.dim();
    let inverses = (0..n_quad)
        .into_par_iter()
        .map(|k| {
            let w = C64::from_polar(radius, 2.0 * std::f64::consts::PI * k as f64 / n_quad as f64);
            p.inverse_at(lambda0 + w)
                .map(|inv| (w, inv))
                .map_err(|_| Error::Contour(format!("contour passes through a pole near {}", lambda0 + w)))
        })
        .collect::<Result<Vec<_>>>()?;
    // fixed summation order keeps results independent of scheduling
    Ok(ns
        .iter()
        .map(|&n| {
            let mut acc = CMat::zeros(dim, dim);
            for (w, inv) in &inverses {
                acc += inv * w.powi(-n);
            }
            acc / C64::new(n_quad as f64, 0.0)
        })
        .collect())
}

/// Laurent coefficients `C_n`, `n = −(max_order + 1) … n_coeffs − 1`.
///
/// `poles`, when given, must place exactly one cluster (points within
/// `1e-6·(1 + |λ|)` of each other) inside the contour and none on it.
pub fn laurent_coefficients(
    p: &QuadraticPencil,
    lambda0: C64,
    radius: f64,
    n_coeffs: usize,
    n_quad: usize,
    max_order: usize,
    poles: Option<&[C64]>,
) -> Result<LaurentData> {
    if !(radius > 0.0) || n_quad < 8 || max_order == 0 {
        return Err(Error::InvalidInput(
            "need a positive radius, at least 8 nodes and max_order ≥ 1".into(),
        ));
    }
    if let Some(poles) = poles {
        if let Some(z) = poles.iter().find(|z| ((*z - lambda0).norm() - radius).abs() <= 1e-6 * radius) {
            return Err(Error::Contour(format!("contour passes through the pole {z}")));
        }
        let inside: Vec<C64> = poles.iter().copied().filter(|z| (z - lambda0).norm() < radius).collect();
        let spread = inside
            .iter()
            .flat_map(|a| inside.iter().map(move |b| (a - b).norm() / (1.0 + a.norm())))
            .fold(0.0, f64::max);
        if inside.is_empty() {
            return Err(Error::Contour("no pole inside the contour".into()));
        }
        if spread > 1e-6 {
            return Err(Error::Contour(format!(
                "{} poles in more than one cluster inside the contour",
                inside.len()
            )));
        }
    }
    let lo = -(max_order as i32) - 1;
    let ns: Vec<i32> = (lo..n_coeffs as i32).collect();
    let cs = contour_sums(p, lambda0, radius, n_quad, &ns)?;
    let half = contour_sums(p, lambda0, radius, n_quad / 2, &[-1])?;
    let coefficients: Vec<(i32, CMat)> = ns.into_iter().zip(cs).collect();
    let norm = |m: &CMat| linalg::frobenius(m);
    let singular_scale = coefficients
        .iter()
        .filter(|(n, _)| *n <= 0)
        .map(|(_, c)| norm(c))
        .fold(0.0, f64::max);
    let order = (1..=max_order)
        .rev()
        .find(|&k| {
            let c = &coefficients[(-(k as i32) - lo) as usize].1;
            norm(c) > NOISE_FLOOR * singular_scale
        })
        .unwrap_or(0);
    let get = |n: i32| &coefficients[(n - lo) as usize].1;
    let c_m1 = get(-1);
    let quadrature_error = norm(&(c_m1 - &half[0])) / norm(c_m1).max(f64::MIN_POSITIVE);
    let b: Vec<CMat> = (0..3).map(|m| p.taylor(m, lambda0)).collect();
    let n = order as i32;
    let relation_residuals = (0..order)
        .map(|k| {
            let mut acc = CMat::zeros(p.dim(), p.dim());
            let mut scale = 0.0;
            for j in k.saturating_sub(2)..=k {
                let c = get(j as i32 - n);
                acc += &b[k - j] * c;
                scale += norm(&b[k - j]) * norm(c);
            }
            if scale == 0.0 {
                0.0
            } else {
                norm(&acc) / scale
            }
        })
        .collect();
    Ok(LaurentData {
        lambda0,
        order,
        radius,
        n_quad,
        coefficients,
        relation_residuals,
        quadrature_error,
    })
}

/// Sine of the largest principal angle between the column range of `c` and
/// the span of `vectors`, in the weighted pairing.
pub fn range_angle(c: &CMat, vectors: &[CVec], weights: &DVector<f64>) -> f64 {
    let s: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let scale_rows = |m: &CMat| CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s[i]);
    let u = linalg::range_basis(&scale_rows(c), 1e-8, 0.0);
    if u.ncols() == 0 {
        return 0.0;
    }
    if vectors.is_empty() {
        return 1.0;
    }
    let v = linalg::range_basis(&scale_rows(&CMat::from_columns(vectors)), 1e-10, 0.0);
    linalg::spectral_norm(&linalg::project_out(&u, &v))
}
