//! The quadratic matrix pencil `T(λ) = A₀ + λA₁ + λ²A₂`.

use nalgebra::DVector;

use crate::linalg::{self, CMat, CVec};
use crate::{Error, Result, C64};

/// Dense quadratic pencil with the quadrature weights of its discrete `L²`
/// pairing. Weights are all one for pencils that do not come from a grid.
#[derive(Clone, Debug)]
pub struct QuadraticPencil {
    pub a0: CMat,
    pub a1: CMat,
    pub a2: CMat,
    pub weights: DVector<f64>,
}

impl QuadraticPencil {
    pub fn new(a0: CMat, a1: CMat, a2: CMat) -> Result<Self> {
        let n = a0.nrows();
        Self::with_weights(a0, a1, a2, DVector::from_element(n, 1.0))
    }

    pub fn with_weights(a0: CMat, a1: CMat, a2: CMat, weights: DVector<f64>) -> Result<Self> {
        let n = a0.nrows();
        for m in [&a0, &a1, &a2] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: if m.nrows() != n { m.nrows() } else { m.ncols() },
                });
            }
        }
        if weights.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: weights.len(),
            });
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::InvalidInput("weights must be positive".into()));
        }
        Ok(Self { a0, a1, a2, weights })
    }

    /// Scalar pencil `a0 + a1 λ + a2 λ²`.
    pub fn scalar(a0: C64, a1: C64, a2: C64) -> Self {
        let one = |z| CMat::from_element(1, 1, z);
        Self::new(one(a0), one(a1), one(a2)).expect("1x1")
    }

    pub fn dim(&self) -> usize {
        self.a0.nrows()
    }

    pub fn eval(&self, lambda: C64) -> CMat {
        &self.a0 + &self.a1 * lambda + &self.a2 * (lambda * lambda)
    }

    /// `T'(λ) = A₁ + 2λA₂`.
    pub fn derivative(&self, lambda: C64) -> CMat {
        &self.a1 + &self.a2 * (lambda * 2.0)
    }

    /// Taylor coefficient `B_m = T⁽ᵐ⁾(λ₀)/m!`.
    pub fn taylor(&self, m: usize, lambda0: C64) -> CMat {
        match m {
            0 => self.eval(lambda0),
            1 => self.derivative(lambda0),
            2 => self.a2.clone(),
            _ => CMat::zeros(self.dim(), self.dim()),
        }
    }

    /// `(A₀ + λA₁ + λ²A₂) u`.
    pub fn apply(&self, lambda: C64, u: &CVec) -> Result<CVec> {
        if u.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: u.len(),
            });
        }
        Ok(&self.a0 * u + (&self.a1 * u) * lambda + (&self.a2 * u) * (lambda * lambda))
    }

    /// `‖A₀‖ + |λ|‖A₁‖ + |λ|²‖A₂‖` in the weighted 1-norm, the natural scale
    /// for backward errors of approximate eigenpairs.
    pub fn coefficient_scale(&self, lambda: C64) -> f64 {
        let r = lambda.norm();
        let w = &self.weights;
        linalg::norm1(&linalg::weighted(&self.a0, w))
            + r * linalg::norm1(&linalg::weighted(&self.a1, w))
            + r * r * linalg::norm1(&linalg::weighted(&self.a2, w))
    }

    /// Backward error `‖T(λ)u‖ / (scale(λ)·‖u‖)` in the weighted norm.
    pub fn backward_error(&self, lambda: C64, u: &CVec) -> f64 {
        let r = self.apply(lambda, u).expect("dimension checked by caller");
        let num = linalg::weighted_norm(&r, &self.weights);
        let den = self.coefficient_scale(lambda) * linalg::weighted_norm(u, &self.weights);
        if den == 0.0 {
            f64::INFINITY
        } else {
            num / den
        }
    }

    /// `T(λ)⁻¹`.
    pub fn inverse_at(&self, lambda: C64) -> Result<CMat> {
        linalg::inverse(&self.eval(lambda), "T(λ)")
    }
}
