use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::companion::shifted_inverse;
use super::eigen::EigenSolution;
use crate::linalg::{self, CMat};
use crate::pencil::QuadraticPencil;
use crate::{Error, Result, C64};

/// `(Σ σⱼᵖ)^{1/p}` over all singular values.
pub fn schatten_norm(m: &CMat, p: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidInput(format!("Schatten exponent p = {p} must be ≥ 1")));
    }
    let s = linalg::singular_values(m);
    let top = s.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return Ok(0.0);
    }
    // scaled by σ_max so large p cannot overflow
    let sum: f64 = s.iter().map(|x| (x / top).powf(p)).sum();
    Ok(top * sum.powf(1.0 / p))
}

/// Partial lattice sum of `(1 + |ξ|²)^{−p}` with a rigorous bound on the rest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusSum {
    /// Sum over `ξ ∈ ℤⁿ` with `|ξ|_∞ ≤ cutoff`.
    pub partial: f64,
    /// Upper bound for the sum over `|ξ|_∞ > cutoff`.
    pub tail_bound: f64,
}

impl TorusSum {
    pub fn upper(&self) -> f64 {
        self.partial + self.tail_bound
    }
}

/// Most lattice points enumerated by [`torus_embedding_sum`].
pub const TORUS_POINT_CAP: f64 = 1e8;

/// `Σ_{ξ∈ℤⁿ} (1 + |ξ|²)^{−p}`, finite exactly when `p > n/2`.
///
/// The tail uses `1 + |x|² ≤ (1 + n)(1 + |ξ|²)` on the unit cube `ξ + [0, 1)ⁿ`;
/// those cubes tile `{|x|_∞ > cutoff}` for the omitted `ξ`, so
/// `tail ≤ (1 + n)ᵖ ∫_{|x| > c} (1 + |x|²)^{−p} dx ≤ (1 + n)ᵖ |Sⁿ⁻¹| c^{n−2p}/(2p − n)`.
pub fn torus_embedding_sum(n: usize, p: f64, cutoff: u64) -> Result<TorusSum> {
    if n == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    if !(p > n as f64 / 2.0) {
        return Err(Error::Divergent(format!(
            "Σ (1 + |ξ|²)^(-p) diverges in dimension {n} for p = {p} ≤ n/2"
        )));
    }
    if cutoff == 0 {
        return Err(Error::InvalidInput("cutoff must be at least 1".into()));
    }
    if (cutoff as f64 + 1.0).powi(n as i32) > TORUS_POINT_CAP {
        return Err(Error::SizeCap {
            size: (cutoff as f64 + 1.0).powi(n as i32).min(usize::MAX as f64) as usize,
            cap: TORUS_POINT_CAP as usize,
        });
    }
    // nonnegative orthant with weight 2^{#nonzero}; largest terms summed last
    // would lose the tail, so accumulate from the outside in
    fn walk(dim: usize, c: u64, p: f64, sq: f64, weight: f64) -> f64 {
        if dim == 0 {
            return weight * (1.0 + sq).powf(-p);
        }
        let mut s = 0.0;
        for k in (0..=c).rev() {
            let w = if k == 0 { weight } else { 2.0 * weight };
            s += walk(dim - 1, c, p, sq + (k * k) as f64, w);
        }
        s
    }
    let partial = walk(n, cutoff, p, 0.0, 1.0);
    let nf = n as f64;
    let c = cutoff as f64;
    let tail_bound = (1.0 + nf).powf(p) * sphere_area(n) * c.powf(nf - 2.0 * p) / (2.0 * p - nf);
    Ok(TorusSum {
        partial,
        tail_bound,
    })
}

/// Surface area of the unit sphere in `ℝⁿ`, `2π^{n/2}/Γ(n/2)`.
fn sphere_area(n: usize) -> f64 {
    use std::f64::consts::PI;
    // Γ(n/2) by recursion from Γ(1/2) = √π, Γ(1) = 1
    let mut g = if n % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut x = if n % 2 == 0 { 1.0 } else { 0.5 };
    while x < n as f64 / 2.0 {
        g *= x;
        x += 1.0;
    }
    2.0 * PI.powf(n as f64 / 2.0) / g
}

/// Eigenvalue counting function against two Chebyshev-type bounds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CountingReport {
    pub lambda_prime: C64,
    pub p: f64,
    pub t_values: Vec<f64>,
    /// `N(t) = #{j : |λⱼ − λ′| < t}` with multiplicity.
    pub counts: Vec<usize>,
    /// `Σⱼ (t/|λⱼ − λ′|)ᵖ` over the same eigenvalues.
    pub bound_values: Vec<f64>,
    /// `tᵖ ‖(𝒜 − λ′)⁻¹‖ᵖ_{Cᵖ}` when the pencil was supplied.
    pub schatten_bound: Option<Vec<f64>>,
}

impl CountingReport {
    /// Whether `N(t)` stays below the discrete bound at every `t`.
    pub fn discrete_certifies(&self) -> bool {
        self.counts
            .iter()
            .zip(&self.bound_values)
            .all(|(&c, &b)| c as f64 <= b)
    }

    /// Same for the Schatten bound; `None` if it was not computed.
    pub fn schatten_certifies(&self) -> Option<bool> {
        self.schatten_bound.as_ref().map(|sb| {
            self.counts.iter().zip(sb).all(|(&c, &b)| c as f64 <= b)
        })
    }
}

/// Counting function of `(λⱼ, multiplicity)` pairs around `λ′`.
///
/// Every eigenvalue with `|λⱼ − λ′| < t` contributes a term `(t/|λⱼ − λ′|)ᵖ ≥ 1`
/// to the bound, so `N(t) ≤ bound` holds exactly in floating point too.
pub fn counting_values(
    values: &[(C64, usize)],
    lambda_prime: C64,
    p: f64,
    t_values: &[f64],
) -> Result<CountingReport> {
    if !(p > 0.0) {
        return Err(Error::InvalidInput(format!("exponent p = {p} must be positive")));
    }
    let floor = 1e-12 * lambda_prime.norm().max(1.0);
    let dist: Vec<(f64, usize)> = values
        .iter()
        .map(|&(l, m)| ((l - lambda_prime).norm(), m))
        .collect();
    if let Some(&(d, _)) = dist.iter().find(|(d, _)| *d <= floor) {
        return Err(Error::InvalidInput(format!(
            "λ′ = {lambda_prime} lies within {d:.2e} of an eigenvalue"
        )));
    }
    let mut counts = Vec::with_capacity(t_values.len());
    let mut bounds = Vec::with_capacity(t_values.len());
    for &t in t_values {
        if !(t >= 0.0) {
            return Err(Error::InvalidInput(format!("radius t = {t} must be nonnegative")));
        }
        counts.push(dist.iter().filter(|(d, _)| *d < t).map(|(_, m)| m).sum());
        bounds.push(dist.iter().map(|&(d, m)| m as f64 * (t / d).powf(p)).sum());
    }
    Ok(CountingReport {
        lambda_prime,
        p,
        t_values: t_values.to_vec(),
        counts,
        bound_values: bounds,
        schatten_bound: None,
    })
}

/// Counting report over the trusted eigenvalues of `eig`.
pub fn counting(
    eig: &EigenSolution,
    lambda_prime: C64,
    p: f64,
    t_values: &[f64],
) -> Result<CountingReport> {
    let vals: Vec<(C64, usize)> = eig.trusted().map(|e| (e.lambda, e.multiplicity)).collect();
    counting_values(&vals, lambda_prime, p, t_values)
}

/// Adds the bound `tᵖ ‖(𝒜 − λ′)⁻¹‖ᵖ_{Cᵖ}`, with the resolvent measured in
/// the weighted pairing on both components of `(u, v)`.
pub fn with_schatten_bound(
    mut report: CountingReport,
    pencil: &QuadraticPencil,
) -> Result<CountingReport> {
    let p = report.p.max(1.0);
    let r = shifted_inverse(pencil, report.lambda_prime)?;
    let w = &pencil.weights;
    let w2 = DVector::from_iterator(2 * w.len(), w.iter().chain(w.iter()).copied());
    let sp = schatten_norm(&linalg::weighted(&r, &w2), p)?.powf(p);
    report.schatten_bound = Some(report.t_values.iter().map(|t| t.powf(p) * sp).collect());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn schatten_examples() {
        assert!((schatten_norm(&linalg::identity(2), 1.0).unwrap() - 2.0).abs() < 1e-14);
        let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(3.0), c(4.0)]));
        assert!((schatten_norm(&d, 2.0).unwrap() - 5.0).abs() < 1e-14);
        assert!(schatten_norm(&d, 0.5).is_err());
    }

    #[test]
    fn schatten_two_is_frobenius_and_unitarily_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut r = |n| CMat::from_fn(n, n, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        let m = r(5);
        let s2 = schatten_norm(&m, 2.0).unwrap();
        assert!((s2 - linalg::frobenius(&m)).abs() < 1e-13);
        let (u, _) = linalg::schur(&r(5)).unwrap();
        let (v, _) = linalg::schur(&r(5)).unwrap();
        let s3 = schatten_norm(&m, 3.0).unwrap();
        assert!((schatten_norm(&(&u * &m * &v), 3.0).unwrap() - s3).abs() < 1e-12);
    }

    #[test]
    fn torus_sum_one_dimensional() {
        let exact = PI / PI.tanh();
        let s = torus_embedding_sum(1, 1.0, 100_000).unwrap();
        assert!(s.partial <= exact && exact <= s.upper());
        assert!((exact - s.partial).abs() < 3e-5);
        assert!(matches!(torus_embedding_sum(1, 0.5, 10), Err(Error::Divergent(_))));
    }

    #[test]
    fn torus_tail_bounds_the_rest() {
        let far = torus_embedding_sum(2, 2.0, 2000).unwrap();
        let near = torus_embedding_sum(2, 2.0, 50).unwrap();
        assert!(far.partial - near.partial <= near.tail_bound);
        assert!(near.tail_bound > 0.0);
        assert!(torus_embedding_sum(2, 1.0, 5).is_err());
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn chebyshev_hand_example() {
        let vals = [(c(1.0), 1), (c(2.0), 1), (c(4.0), 1)];
        let r = counting_values(&vals, c(0.0), 1.0, &[0.5, 3.0]).unwrap();
        assert_eq!(r.counts, vec![0, 2]);
        assert!((r.bound_values[1] - 5.25).abs() < 1e-14);
        assert!(r.discrete_certifies());
        assert!(counting_values(&vals, c(2.0), 1.0, &[1.0]).is_err());
    }

    #[test]
    fn counts_are_monotone_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let vals: Vec<(C64, usize)> = (0..40)
            .map(|_| (C64::new(-rng.gen::<f64>() * 100.0, rng.gen::<f64>() - 0.5), 1 + rng.gen_range(0..2)))
            .collect();
        let ts: Vec<f64> = (0..200).map(|k| k as f64 * 0.6).collect();
        let r = counting_values(&vals, c(1.0), 1.0, &ts).unwrap();
        assert!(r.counts.windows(2).all(|w| w[0] <= w[1]));
        assert!(r.discrete_certifies());
    }

    #[test]
    fn schatten_bound_on_scalar_pencil() {
        // (λ − 1)(λ − 2): 𝒜 has eigenvalues 1, 2
        let p = QuadraticPencil::scalar(c(2.0), c(-3.0), c(1.0));
        let r = counting_values(&[(c(1.0), 1), (c(2.0), 1)], c(0.0), 1.0, &[1.5, 3.0]).unwrap();
        let r = with_schatten_bound(r, &p).unwrap();
        assert_eq!(r.schatten_certifies(), Some(true));
        // ‖A⁻¹‖_{C¹} ≥ Σ 1/|λⱼ| = 1.5
        assert!(r.schatten_bound.unwrap()[0] >= 1.5 * 1.5 - 1e-12);
    }
}
