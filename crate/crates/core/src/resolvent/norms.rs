use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit_slope;
use crate::linalg::{self, CMat};
use crate::pencil::QuadraticPencil;
use crate::spectra::companion::{block_inverse_from, CompanionOperator};
use crate::{Error, Result, C64};

/// Weights of the companion space: the pencil weights on both components.
pub(crate) fn block_weights(p: &QuadraticPencil) -> DVector<f64> {
    let w = &p.weights;
    DVector::from_iterator(2 * w.len(), w.iter().chain(w.iter()).copied())
}

/// `‖T(λ)⁻¹‖` in the weighted `L²` operator norm.
pub fn resolvent_norm(p: &QuadraticPencil, lambda: C64) -> Result<f64> {
    let inv = p.inverse_at(lambda)?;
    Ok(linalg::spectral_norm(&linalg::weighted(&inv, &p.weights)))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RayScan {
    pub direction: C64,
    pub radii: Vec<f64>,
    pub norms: Vec<f64>,
    /// Least-squares slope of `ln‖T⁻¹‖` against `ln r` over the top decade.
    pub fitted_slope: f64,
}

/// `‖T(λ)⁻¹‖` at `λ = r·direction` for each radius.
pub fn ray_scan(p: &QuadraticPencil, direction: C64, radii: &[f64]) -> Result<RayScan> {
    if direction.norm() == 0.0 || !direction.re.is_finite() || !direction.im.is_finite() {
        return Err(Error::InvalidInput("ray direction must be a nonzero number".into()));
    }
    let dir = direction / direction.norm();
    if (dir + 1.0).norm() < 1e-12 {
        return Err(Error::InvalidInput("ray along the negative axis".into()));
    }
    if radii.len() < 2 || radii.windows(2).any(|w| !(w[0] < w[1])) || !(radii[0] > 0.0) {
        return Err(Error::InvalidInput("radii must be positive and strictly increasing".into()));
    }
    let norms = radii
        .par_iter()
        .map(|&r| {
            resolvent_norm(p, dir * r).map_err(|e| match e {
                Error::Singular(_) => Error::Singular(format!("pole on the ray at r = {r}")),
                other => other,
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let rmax = radii[radii.len() - 1];
    let (xs, ys): (Vec<f64>, Vec<f64>) = radii
        .iter()
        .zip(&norms)
        .filter(|(r, _)| **r >= rmax / 10.0 * (1.0 - 1e-12))
        .map(|(r, n)| (r.ln(), n.ln()))
        .unzip();
    let fitted_slope = if xs.len() >= 2 {
        fit_slope(&xs, &ys)
    } else {
        let (x, y): (Vec<f64>, Vec<f64>) = radii.iter().zip(&norms).map(|(r, n)| (r.ln(), n.ln())).unzip();
        fit_slope(&x, &y)
    };
    Ok(RayScan {
        direction: dir,
        radii: radii.to_vec(),
        norms,
        fitted_slope,
    })
}

/// Geometric radii `r₀ … r₁` with `n` points.
pub fn log_radii(r0: f64, r1: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|k| r0 * (r1 / r0).powf(k as f64 / (n - 1) as f64))
        .collect()
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BlockInverseCheck {
    /// `max |((𝒜 − λ)B − I)ᵢⱼ|` for the block formula `B`.
    pub max_error: f64,
    pub t_inverse_norm: f64,
    pub companion_inverse_norm: f64,
    /// `‖T(λ)⁻¹‖ ≤ ‖(𝒜 − λ)⁻¹‖`, with `1e-12` relative slack.
    pub inequality_holds: bool,
}

/// Verifies the block formula for `(𝒜 − λ)⁻¹` against the companion matrix
/// and compares the norms of the two inverses.
pub fn companion_block_inverse_check(
    comp: &CompanionOperator,
    p: &QuadraticPencil,
    lambda: C64,
) -> Result<BlockInverseCheck> {
    let t_inv = p.inverse_at(lambda)?;
    let b = block_inverse_from(p, lambda, &t_inv);
    let n2 = comp.dim();
    let shifted = &comp.matrix - linalg::identity(n2) * lambda;
    let e = &shifted * &b - linalg::identity(n2);
    let max_error = e.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let t_inverse_norm = linalg::spectral_norm(&linalg::weighted(&t_inv, &p.weights));
    let companion_inverse_norm =
        linalg::spectral_norm(&linalg::weighted(&b, &block_weights(p)));
    Ok(BlockInverseCheck {
        max_error,
        t_inverse_norm,
        companion_inverse_norm,
        inequality_holds: t_inverse_norm <= companion_inverse_norm * (1.0 + 1e-12),
    })
}

/// Relative discrepancy `‖L − R‖_F / ‖L‖_F` between `(𝒜 − λ)⁻¹` and
/// `(𝒜 − λ′)⁻¹(I − (λ − λ′)(𝒜 − λ′)⁻¹)⁻¹`.
pub fn resolvent_identity_check(comp: &CompanionOperator, lambda: C64, lambda_prime: C64) -> Result<f64> {
    let n2 = comp.dim();
    let id = linalg::identity(n2);
    let left = linalg::inverse(&(&comp.matrix - &id * lambda), "𝒜 − λ")?;
    let rp = linalg::inverse(&(&comp.matrix - &id * lambda_prime), "𝒜 − λ′")?;
    let inner: CMat = &id - &rp * (lambda - lambda_prime);
    let right = &rp * linalg::inverse(&inner, "I − (λ − λ′)(𝒜 − λ′)⁻¹")?;
    Ok(linalg::frobenius(&(&left - right)) / linalg::frobenius(&left))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::linearize;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn random_pencil(n: usize, seed: u64) -> QuadraticPencil {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut r = || CMat::from_fn(n, n, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        let a0 = r();
        let a1 = r();
        let a2 = r() + linalg::identity(n) * c(2.0);
        QuadraticPencil::new(a0, a1, a2).unwrap()
    }

    #[test]
    fn scalar_resolvent_norm() {
        let p = QuadraticPencil::scalar(c(0.0), c(1.0), c(1.0));
        assert!((resolvent_norm(&p, c(1.0)).unwrap() - 0.5).abs() < 1e-15);
        assert!(resolvent_norm(&p, c(0.0)).is_err());
        // blows up towards the pole at −1
        let near: Vec<f64> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|d| resolvent_norm(&p, c(-1.0 + d)).unwrap())
            .collect();
        assert!(near.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn scalar_ray_slope() {
        let p = QuadraticPencil::scalar(c(0.0), c(1.0), c(1.0));
        let s = ray_scan(&p, C64::new(0.0, 1.0), &log_radii(10.0, 1e3, 20)).unwrap();
        assert!((s.fitted_slope + 2.0).abs() < 1e-3);
        assert!(ray_scan(&p, c(-2.0), &[1.0, 2.0]).is_err());
        assert!(ray_scan(&p, c(1.0), &[2.0, 1.0]).is_err());
    }

    #[test]
    fn block_formula_on_random_pencil() {
        let p = random_pencil(4, 1);
        let comp = linearize(&p).unwrap();
        let chk = companion_block_inverse_check(&comp, &p, C64::new(0.3, 0.7)).unwrap();
        assert!(chk.max_error <= 1e-10);
        assert!(chk.inequality_holds);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let l = C64::new(rng.gen::<f64>() * 8.0 - 4.0, rng.gen::<f64>() * 8.0 - 4.0);
            assert!(companion_block_inverse_check(&comp, &p, l).unwrap().inequality_holds);
        }
    }

    #[test]
    fn resolvent_identity() {
        let p = random_pencil(6, 2);
        let comp = linearize(&p).unwrap();
        let l = C64::new(0.4, -1.1);
        assert!(resolvent_identity_check(&comp, l, l).unwrap() < 1e-15);
        assert!(resolvent_identity_check(&comp, l, C64::new(2.0, 0.5)).unwrap() < 1e-9);
        // scalar companion: 1/(a − λ) = 1/(a − λ′) · 1/(1 − (λ − λ′)/(a − λ′))
        let s = linearize(&QuadraticPencil::scalar(c(2.0), c(-3.0), c(1.0))).unwrap();
        assert!(resolvent_identity_check(&s, c(0.5), C64::new(0.0, 3.0)).unwrap() < 1e-14);
    }
}
