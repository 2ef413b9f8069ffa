use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::eigen::EigenSolution;
use crate::linalg::{self, CVec};
use crate::{Error, Result, C64};

/// Relative distances from `f` to the spans of the chain vectors of the
/// first `m` trusted eigenvalues, for `m = 1, 2, …`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompletenessReport {
    /// `residuals[m − 1]` belongs to the first `m` eigenvalues.
    pub residuals: Vec<f64>,
    /// Chain vectors dropped as numerically dependent on earlier ones.
    pub dependent: usize,
}

/// Vectors whose norm falls below this fraction after orthogonalization are
/// treated as dependent.
const DEPENDENCE_TOL: f64 = 1e-10;

/// Weighted least-squares projection of `f` onto nested chain spans.
///
/// The trusted eigenvalues are taken in the solution's order (nearest to `λ′`
/// first). Each new chain vector is orthogonalized twice against the running
/// basis, so `residuals` is computed from one residual vector that is only
/// ever projected further; a final running minimum removes rounding-level
/// increases.
pub fn completeness_profile(
    eig: &EigenSolution,
    weights: &DVector<f64>,
    f: &CVec,
    max_m: usize,
) -> Result<CompletenessReport> {
    if f.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: weights.len(),
            got: f.len(),
        });
    }
    let trusted: Vec<_> = eig.trusted().collect();
    if max_m > trusted.len() {
        return Err(Error::InvalidInput(format!(
            "m = {max_m} exceeds the {} trusted eigenvalues",
            trusted.len()
        )));
    }
    let ip = |a: &CVec, b: &CVec| -> C64 {
        a.iter()
            .zip(b.iter())
            .zip(weights.iter())
            .map(|((x, y), w)| x.conj() * y * *w)
            .sum()
    };
    let fnorm = linalg::weighted_norm(f, weights);
    if fnorm == 0.0 {
        return Err(Error::InvalidInput("f is zero".into()));
    }
    let mut basis: Vec<CVec> = Vec::new();
    let mut r = f.clone();
    let mut residuals = Vec::with_capacity(max_m);
    let mut dependent = 0;
    let mut last = 1.0_f64;
    for e in trusted.iter().take(max_m) {
        for ch in &e.chains {
            for v in &ch.vectors {
                let vn = linalg::weighted_norm(v, weights);
                if vn == 0.0 {
                    dependent += 1;
                    continue;
                }
                let mut x = v / C64::new(vn, 0.0);
                for _ in 0..2 {
                    for b in &basis {
                        x -= b * ip(b, &x);
                    }
                }
                let xn = linalg::weighted_norm(&x, weights);
                if xn <= DEPENDENCE_TOL {
                    dependent += 1;
                    continue;
                }
                let q = x / C64::new(xn, 0.0);
                r -= &q * ip(&q, &r);
                basis.push(q);
            }
        }
        // re-project against the whole basis to keep r orthogonal to it
        for b in &basis {
            r -= b * ip(b, &r);
        }
        last = last.min(linalg::weighted_norm(&r, weights) / fnorm);
        residuals.push(last);
    }
    Ok(CompletenessReport {
        residuals,
        dependent,
    })
}

/// Relative weighted distance from `f` to the chain span of the `m` trusted
/// eigenvalues nearest `λ′`; `1` for `m = 0`.
pub fn completeness_residual(
    eig: &EigenSolution,
    weights: &DVector<f64>,
    f: &CVec,
    m: usize,
) -> Result<f64> {
    if m == 0 {
        return Ok(1.0);
    }
    Ok(completeness_profile(eig, weights, f, m)?.residuals[m - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMat;
    use crate::pencil::QuadraticPencil;
    use crate::spectra::{solve, EigenOptions};

    fn diag_pencil() -> QuadraticPencil {
        // diag((λ+1)(λ+2), (λ+3)(λ+4), (λ+5)(λ+6))
        let d = |v: [f64; 3]| CMat::from_diagonal(&CVec::from_iterator(3, v.iter().map(|&x| C64::new(x, 0.0))));
        QuadraticPencil::new(d([2.0, 12.0, 30.0]), d([3.0, 7.0, 11.0]), linalg::identity(3)).unwrap()
    }

    #[test]
    fn eigenvector_is_in_its_own_span() {
        let p = diag_pencil();
        let s = solve(&p, &EigenOptions::default()).unwrap();
        let f = s.eigenvalues[0].eigenvector().clone();
        assert!(completeness_residual(&s, &p.weights, &f, 1).unwrap() <= 1e-12);
    }

    #[test]
    fn residual_is_nonincreasing_and_reaches_zero() {
        let p = diag_pencil();
        let s = solve(&p, &EigenOptions::default()).unwrap();
        let f = CVec::from_vec(vec![C64::new(1.0, 0.2), C64::new(-0.5, 0.0), C64::new(0.3, 1.0)]);
        let rep = completeness_profile(&s, &p.weights, &f, 6).unwrap();
        assert!(rep.residuals.windows(2).all(|w| w[1] <= w[0]));
        // each coordinate direction appears twice (two eigenvalues per entry)
        assert!(rep.residuals[5] < 1e-12);
        assert_eq!(rep.dependent, 3);
        assert_eq!(completeness_residual(&s, &p.weights, &f, 0).unwrap(), 1.0);
        assert!(completeness_residual(&s, &p.weights, &f, 7).is_err());
    }
}
