use crate::linalg::{self, CMat, CVec};
use crate::pencil::QuadraticPencil;
use crate::{Error, Result, C64};

/// Block linearization `𝒜 = [[0, A₂⁻¹], [−A₀, −A₁A₂⁻¹]]` acting on `(u, v)`.
///
/// `(u, v)` is an eigenvector of `𝒜` at `λ` exactly when `T(λ)u = 0` and
/// `v = λA₂u`.
#[derive(Clone, Debug)]
pub struct CompanionOperator {
    pub matrix: CMat,
    pub a2_inv: CMat,
    n: usize,
}

pub fn linearize(p: &QuadraticPencil) -> Result<CompanionOperator> {
    let n = p.dim();
    let a2_inv = linalg::inverse(&p.a2, "A₂")?;
    let mut m = CMat::zeros(2 * n, 2 * n);
    m.view_mut((0, n), (n, n)).copy_from(&a2_inv);
    m.view_mut((n, 0), (n, n)).copy_from(&(-&p.a0));
    m.view_mut((n, n), (n, n)).copy_from(&(-(&p.a1 * &a2_inv)));
    Ok(CompanionOperator { matrix: m, a2_inv, n })
}

impl CompanionOperator {
    /// Size `N` of the pencil; the operator itself is `2N × 2N`.
    pub fn pencil_dim(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// Block `(i, j)` with `i, j ∈ {0, 1}`.
    pub fn block(&self, i: usize, j: usize) -> CMat {
        self.matrix.view((i * self.n, j * self.n), (self.n, self.n)).into_owned()
    }

    pub fn apply(&self, x: &CVec) -> Result<CVec> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(&self.matrix * x)
    }
}

/// `(𝒜 − λ)⁻¹` assembled from `T(λ)⁻¹` through the block formula
///
/// ```text
/// [[−T⁻¹(A₁ + λA₂),           −T⁻¹     ],
///  [A₂ − A₂T⁻¹(λA₁ + λ²A₂),  −λA₂T⁻¹  ]]
/// ```
///
/// which never forms `𝒜` and so avoids its large `A₀` block.
pub fn shifted_inverse(p: &QuadraticPencil, lambda: C64) -> Result<CMat> {
    let t_inv = p.inverse_at(lambda)?;
    Ok(block_inverse_from(p, lambda, &t_inv))
}

pub(crate) fn block_inverse_from(p: &QuadraticPencil, lambda: C64, t_inv: &CMat) -> CMat {
    let n = p.dim();
    let mut m = CMat::zeros(2 * n, 2 * n);
    let a1l = &p.a1 + &p.a2 * lambda;
    m.view_mut((0, 0), (n, n)).copy_from(&(-(t_inv * &a1l)));
    m.view_mut((0, n), (n, n)).copy_from(&(-t_inv));
    let a2t = &p.a2 * t_inv;
    m.view_mut((n, 0), (n, n))
        .copy_from(&(&p.a2 - &a2t * (&a1l * lambda)));
    m.view_mut((n, n), (n, n)).copy_from(&(-(a2t * lambda)));
    m
}

/// Positive real point where `T` is comfortably invertible, used as the
/// default shift and reference point `λ′`.
pub fn invertibility_scan(p: &QuadraticPencil) -> Result<C64> {
    const CANDIDATES: [f64; 8] = [1.0, 0.5, 2.0, 0.25, 4.0, 1.5, 3.0, 0.75];
    let mut best: Option<(f64, C64)> = None;
    for &s in &CANDIDATES {
        let z = C64::new(s, 0.0);
        if let Ok(inv) = p.inverse_at(z) {
            // distance-to-spectrum proxy: smaller weighted ‖T⁻¹‖ is better
            let nrm = linalg::norm1(&linalg::weighted(&inv, &p.weights));
            if best.map_or(true, |(b, _)| nrm < 0.5 * b) {
                best = Some((nrm, z));
            }
        }
    }
    best.map(|(_, z)| z)
        .ok_or_else(|| Error::Singular("no invertible positive real point found".into()))
}
