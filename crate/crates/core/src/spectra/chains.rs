use crate::linalg::{self, CVec};
use crate::pencil::QuadraticPencil;
use crate::{Error, Result, C64};

/// Generalized eigenstate `u₀, …, u_{k−1}` at `λ₀`:
/// `Σ_{j≤m} B_{m−j} u_j = 0` for `m < k`, with `B_m = T⁽ᵐ⁾(λ₀)/m!`.
#[derive(Clone, Debug, PartialEq)]
pub struct KeldyshChain {
    pub lambda0: C64,
    pub vectors: Vec<CVec>,
    pub residuals: Vec<f64>,
}

impl KeldyshChain {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Residual of each chain equation,
/// `‖Σ_{j≤m} B_{m−j}u_j‖ / (s(λ₀)·max‖u_j‖)` in the weighted norm, where
/// `s(λ₀) = ‖A₀‖ + |λ₀|‖A₁‖ + |λ₀|²‖A₂‖` makes the value a backward error.
pub fn verify_chain(p: &QuadraticPencil, lambda0: C64, vectors: &[CVec]) -> Vec<f64> {
    let w = &p.weights;
    let umax = vectors
        .iter()
        .map(|u| linalg::weighted_norm(u, w))
        .fold(0.0, f64::max);
    let scale = p.coefficient_scale(lambda0) * umax;
    let b: Vec<_> = (0..3).map(|m| p.taylor(m, lambda0)).collect();
    (0..vectors.len())
        .map(|m| {
            let mut acc = CVec::zeros(p.dim());
            for j in m.saturating_sub(2)..=m {
                acc += &b[m - j] * &vectors[j];
            }
            if scale == 0.0 {
                f64::INFINITY
            } else {
                linalg::weighted_norm(&acc, w) / scale
            }
        })
        .collect()
}

pub fn make_chain(p: &QuadraticPencil, lambda0: C64, vectors: Vec<CVec>) -> KeldyshChain {
    let residuals = verify_chain(p, lambda0, &vectors);
    KeldyshChain {
        lambda0,
        vectors,
        residuals,
    }
}

/// Relative tolerance on `v_j = A₂(λ₀u_j + u_{j−1})`.
pub const RELATION_TOL: f64 = 1e-6;

/// Extracts the Keldysh chain from a Jordan chain `(u_j, v_j)` of the
/// companion operator, checking the coupling `v_j = A₂(λ₀u_j + u_{j−1})`.
pub fn keldysh_from_jordan(
    p: &QuadraticPencil,
    lambda0: C64,
    jordan: &[CVec],
) -> Result<KeldyshChain> {
    let n = p.dim();
    if jordan.is_empty() {
        return Err(Error::InvalidInput("empty Jordan chain".into()));
    }
    let mut us: Vec<CVec> = Vec::with_capacity(jordan.len());
    for (j, x) in jordan.iter().enumerate() {
        if x.len() != 2 * n {
            return Err(Error::DimensionMismatch {
                expected: 2 * n,
                got: x.len(),
            });
        }
        let u = x.rows(0, n).into_owned();
        let v = x.rows(n, n).into_owned();
        let mut expect = &u * lambda0;
        if j > 0 {
            expect += &us[j - 1];
        }
        let expect = &p.a2 * expect;
        let err = linalg::vec_norm(&(&v - &expect));
        let size = linalg::vec_norm(&v).max(linalg::vec_norm(&expect));
        let unorm = linalg::vec_norm(&u).max(if j > 0 { linalg::vec_norm(&us[j - 1]) } else { 0.0 });
        let floor = linalg::norm1(&p.a2) * unorm;
        if err > RELATION_TOL * size.max(floor) {
            return Err(Error::Relation(format!(
                "v_{j} deviates from A₂(λ₀u_{j} + u_{}) by {err:.3e}",
                j as i64 - 1
            )));
        }
        us.push(u);
    }
    Ok(make_chain(p, lambda0, us))
}

/// Rebuilds the companion Jordan chain `(u_j, A₂(λ₀u_j + u_{j−1}))`.
pub fn jordan_from_keldysh(p: &QuadraticPencil, chain: &KeldyshChain) -> Vec<CVec> {
    let n = p.dim();
    let mut out = Vec::with_capacity(chain.len());
    for (j, u) in chain.vectors.iter().enumerate() {
        let mut s = u * chain.lambda0;
        if j > 0 {
            s += &chain.vectors[j - 1];
        }
        let v = &p.a2 * s;
        let mut x = CVec::zeros(2 * n);
        x.rows_mut(0, n).copy_from(u);
        x.rows_mut(n, n).copy_from(&v);
        out.push(x);
    }
    out
}
