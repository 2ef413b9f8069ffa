use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::norms::block_weights;
use crate::linalg;
use crate::pencil::QuadraticPencil;
use crate::spectra::companion::block_inverse_from;
use crate::spectra::EigenSolution;
use crate::{Error, Result, C64};

/// Truncated canonical product
/// `φ(λ) = Π (1 − zⱼ) exp(zⱼ + zⱼ²/2 + … + zⱼ^{k−1}/(k−1))`,
/// `zⱼ = (λ − λ′)/(λⱼ − λ′)`, with `k = ⌈p⌉`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeierstrassProduct {
    pub lambda_prime: C64,
    /// Zeros with multiplicity.
    pub zeros: Vec<(C64, usize)>,
    pub k: usize,
    pub p: f64,
}

impl WeierstrassProduct {
    pub fn new(lambda_prime: C64, zeros: Vec<(C64, usize)>, p: f64) -> Result<Self> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::InvalidInput(format!("exponent p = {p} must be positive")));
        }
        let floor = 1e-12 * lambda_prime.norm().max(1.0);
        if zeros.iter().any(|(z, _)| (z - lambda_prime).norm() <= floor) {
            return Err(Error::InvalidInput("λ′ coincides with a zero".into()));
        }
        Ok(Self {
            lambda_prime,
            zeros,
            k: (p.ceil() as usize).max(1),
            p,
        })
    }

    /// Product over the trusted eigenvalues of `eig`.
    pub fn from_solution(eig: &EigenSolution, lambda_prime: C64, p: f64) -> Result<Self> {
        let zeros = eig.trusted().map(|e| (e.lambda, e.multiplicity)).collect();
        Self::new(lambda_prime, zeros, p)
    }

    /// `ln φ(λ)` summed factor by factor; real part `−∞` at a zero.
    pub fn log_eval(&self, lambda: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for &(zj, m) in &self.zeros {
            let z = (lambda - self.lambda_prime) / (zj - self.lambda_prime);
            let one_minus = C64::new(1.0, 0.0) - z;
            if one_minus.norm() == 0.0 {
                return C64::new(f64::NEG_INFINITY, 0.0);
            }
            let mut term = one_minus.ln();
            let mut zi = z;
            for i in 1..self.k {
                term += zi / i as f64;
                zi *= z;
            }
            acc += term * m as f64;
        }
        acc
    }

    /// `Σ |λⱼ − λ′|^{−p}` with multiplicity.
    pub fn zero_sum(&self) -> f64 {
        self.zeros
            .iter()
            .map(|&(z, m)| m as f64 * (z - self.lambda_prime).norm().powf(-self.p))
            .sum()
    }
}

pub fn phi_eval(wp: &WeierstrassProduct, lambda: C64) -> C64 {
    let l = wp.log_eval(lambda);
    if l.re == f64::NEG_INFINITY {
        C64::new(0.0, 0.0)
    } else {
        l.exp()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CarlemanReport {
    pub radius: f64,
    /// Points on `|λ − λ′| = radius`.
    pub samples: Vec<C64>,
    /// `‖φ(λ)(I − K(λ))⁻¹‖` at each sample.
    pub values: Vec<f64>,
    pub probes: Vec<C64>,
    pub probe_values: Vec<f64>,
    pub max_lhs: f64,
    pub median: f64,
    /// `exp(Σ|λⱼ − λ′|^{−p} rᵖ)`, the shape of the bound with unit constants.
    pub bound_rhs: f64,
}

impl CarlemanReport {
    /// Largest value, probes included, relative to the circle median.
    pub fn max_ratio(&self) -> f64 {
        let top = self.probe_values.iter().copied().fold(self.max_lhs, f64::max);
        top / self.median
    }

    /// Largest probe value relative to the circle median; stays small when
    /// `φ` cancels the poles of the resolvent.
    pub fn probe_ratio(&self) -> f64 {
        self.probe_values.iter().copied().fold(0.0, f64::max) / self.median
    }
}

/// `‖φ(λ)(I − K(λ))⁻¹‖` with `K(λ) = (λ − λ′)(𝒜 − λ′)⁻¹`.
///
/// Uses `(I − K)⁻¹ = I + (λ − λ′)(𝒜 − λ)⁻¹` with the block formula for the
/// companion resolvent, so poles of the resolvent meet the zeros of `φ`
/// only through a finite product.
pub fn carleman_value(p: &QuadraticPencil, wp: &WeierstrassProduct, lambda: C64) -> Result<f64> {
    let phi = phi_eval(wp, lambda);
    let d = lambda - wp.lambda_prime;
    if d.norm() == 0.0 {
        return Ok(phi.norm());
    }
    let t_inv = p.inverse_at(lambda)?;
    let r = block_inverse_from(p, lambda, &t_inv);
    let m = (linalg::identity(2 * p.dim()) + r * d) * phi;
    Ok(linalg::spectral_norm(&linalg::weighted(&m, &block_weights(p))))
}

/// Samples the Carleman quantity on a circle around `λ′` and at extra probe
/// points (typically close to eigenvalues).
pub fn carleman_check(
    p: &QuadraticPencil,
    wp: &WeierstrassProduct,
    radius: f64,
    n_samples: usize,
    probes: &[C64],
) -> Result<CarlemanReport> {
    if !(radius > 0.0) || n_samples < 1 {
        return Err(Error::InvalidInput("need a positive radius and samples".into()));
    }
    let samples: Vec<C64> = (0..n_samples)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n_samples as f64;
            wp.lambda_prime + C64::from_polar(radius, th)
        })
        .collect();
    let eval = |pts: &[C64]| -> Result<Vec<f64>> {
        pts.par_iter().map(|&l| carleman_value(p, wp, l)).collect()
    };
    let values = eval(&samples)?;
    let probe_values = eval(probes)?;
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    Ok(CarlemanReport {
        radius,
        max_lhs: sorted[sorted.len() - 1],
        median,
        bound_rhs: (wp.zero_sum() * radius.powf(wp.p)).exp(),
        samples,
        values,
        probes: probes.to_vec(),
        probe_values,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CarlemanGrowth {
    pub radii: Vec<f64>,
    /// Largest Carleman quantity on each circle `|λ − λ′| = r`.
    pub max_values: Vec<f64>,
    /// Slope of `ln(1 + ln⁺ max)` against `ln r`.
    pub exponent: f64,
}

/// Growth of the Carleman quantity over circles around `λ′`.
pub fn carleman_growth(
    p: &QuadraticPencil,
    wp: &WeierstrassProduct,
    radii: &[f64],
    n_samples: usize,
) -> Result<CarlemanGrowth> {
    if radii.len() < 2 {
        return Err(Error::InvalidInput("need at least two radii".into()));
    }
    let max_values = radii
        .iter()
        .map(|&r| carleman_check(p, wp, r, n_samples, &[]).map(|rep| rep.max_lhs))
        .collect::<Result<Vec<f64>>>()?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = radii
        .iter()
        .zip(&max_values)
        .map(|(r, m)| (r.ln(), (1.0 + m.ln().max(0.0)).ln()))
        .unzip();
    Ok(CarlemanGrowth {
        radii: radii.to_vec(),
        max_values,
        exponent: super::fit_slope(&xs, &ys),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMat;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn phi_basic_values() {
        let wp = WeierstrassProduct::new(c(1.0), vec![(c(-1.0), 1), (c(-4.0), 2)], 1.5).unwrap();
        assert_eq!(wp.k, 2);
        assert_eq!(phi_eval(&wp, c(1.0)), c(1.0));
        assert_eq!(phi_eval(&wp, c(-4.0)), c(0.0));
        assert!(phi_eval(&wp, c(-1.0 + 1e-9)).norm() < 1e-8);
        // k = 2: (1 − z) e^{z} per factor
        let l = C64::new(0.3, 2.0);
        let f = |zj: f64, m: i32| {
            let z = (l - 1.0) / (zj - 1.0);
            ((C64::new(1.0, 0.0) - z) * z.exp()).powi(m)
        };
        assert!((phi_eval(&wp, l) - f(-1.0, 1) * f(-4.0, 2)).norm() < 1e-13);
        assert!(WeierstrassProduct::new(c(1.0), vec![(c(1.0), 1)], 1.0).is_err());
    }

    #[test]
    fn carleman_scalar_closed_form() {
        // (λ − a)(λ − b): φ(𝒜 − λ′)(𝒜 − λ)⁻¹ = (𝒜 − λ′) adj(𝒜 − λ) / ((a − λ′)(b − λ′))
        let (a, b, lp) = (c(-1.0), c(-3.0), c(1.0));
        let p = QuadraticPencil::scalar(a * b, -(a + b), c(1.0));
        let wp = WeierstrassProduct::new(lp, vec![(a, 1), (b, 1)], 1.0).unwrap();
        let comp = CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), -(a * b), a + b]);
        let exact = |l: C64| {
            let s = &comp - linalg::identity(2) * l;
            let adj = CMat::from_row_slice(2, 2, &[s[(1, 1)], -s[(0, 1)], -s[(1, 0)], s[(0, 0)]]);
            let m = (&comp - linalg::identity(2) * lp) * adj / ((a - lp) * (b - lp));
            linalg::spectral_norm(&m)
        };
        for l in [C64::new(0.5, 2.0), c(-1.0 + 1e-3), C64::new(-3.0, 1e-6), c(4.0)] {
            let v = carleman_value(&p, &wp, l).unwrap();
            assert!((v - exact(l)).abs() < 1e-9 * exact(l), "{l}");
        }
        assert!((carleman_value(&p, &wp, lp).unwrap() - 1.0).abs() < 1e-15);
        let rep = carleman_check(&p, &wp, 2.0, 64, &[c(-1.0 + 1e-3)]).unwrap();
        assert!(rep.values.iter().all(|v| v.is_finite()));
        assert!(rep.max_ratio() < 10.0);
        assert!(rep.probe_ratio() < 1.0);
    }

    #[test]
    fn carleman_growth_of_scalar_pencil_is_slow() {
        // finitely many zeros: the quantity grows at most polynomially
        let (a, b) = (c(-1.0), c(-3.0));
        let p = QuadraticPencil::scalar(a * b, -(a + b), c(1.0));
        let wp = WeierstrassProduct::new(c(1.0), vec![(a, 1), (b, 1)], 1.0).unwrap();
        let g = carleman_growth(&p, &wp, &[5.5, 11.0, 22.5, 45.0], 64).unwrap();
        assert!(g.max_values.windows(2).all(|w| w[1] > w[0]));
        assert!(g.exponent < 1.0, "{}", g.exponent);
    }
}
