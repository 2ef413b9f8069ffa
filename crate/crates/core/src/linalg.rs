//! Dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, Schur};

use crate::{Error, Result, C64};

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Largest 1-norm condition number accepted before a matrix is treated as singular.
pub const SINGULAR_COND: f64 = 1e18;

pub fn to_complex(m: &DMatrix<f64>) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn norm1(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vec_norm(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Singular value decomposition with the singular values in descending order.
pub struct SortedSvd {
    pub s: Vec<f64>,
    /// Left singular vectors as columns, when requested.
    pub u: Option<CMat>,
    /// Right singular vectors as columns (not adjoint), when requested.
    pub v: Option<CMat>,
}

// nalgebra's complex SVD loses accuracy on some nearly rank-deficient
// inputs, so decompositions go through faer.
pub fn svd(m: &CMat, want_u: bool, want_v: bool) -> SortedSvd {
    let (r, c) = (m.nrows(), m.ncols());
    let k = r.min(c);
    if k == 0 {
        return SortedSvd {
            s: Vec::new(),
            u: want_u.then(|| CMat::zeros(r, 0)),
            v: want_v.then(|| CMat::zeros(c, 0)),
        };
    }
    let f = faer::Mat::<C64>::from_fn(r, c, |i, j| m[(i, j)]);
    if !want_u && !want_v {
        let mut s = f.singular_values().expect("SVD converges");
        s.sort_by(|a, b| b.total_cmp(a));
        return SortedSvd { s, u: None, v: None };
    }
    let d = f.thin_svd().expect("SVD converges");
    let sv = d.S().column_vector();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| sv[b].re.total_cmp(&sv[a].re));
    let s = order.iter().map(|&i| sv[i].re).collect();
    let (fu, fv) = (d.U(), d.V());
    let u = want_u.then(|| CMat::from_fn(r, k, |i, j| fu[(i, order[j])]));
    let v = want_v.then(|| CMat::from_fn(c, k, |i, j| fv[(i, order[j])]));
    SortedSvd { s, u, v }
}

/// Descending singular values.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    svd(m, false, false).s
}

pub fn spectral_norm(m: &CMat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Inverse by partial-pivoting LU with a condition-number guard.
pub fn inverse(m: &CMat, what: &str) -> Result<CMat> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: m.ncols(),
        });
    }
    let lu = m.clone().lu();
    let inv = lu
        .try_inverse()
        .ok_or_else(|| Error::Singular(what.to_string()))?;
    if inv.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Singular(what.to_string()));
    }
    let cond = norm1(m) * norm1(&inv);
    if !(cond < SINGULAR_COND) {
        return Err(Error::Singular(format!("{what}: condition {cond:.3e}")));
    }
    Ok(inv)
}

/// Symmetric diagonal scaling `S M S⁻¹` with `S = diag(√w)`.
///
/// The Euclidean norm of the result is the operator norm of `M` in the
/// discrete `L²` pairing defined by the quadrature weights `w`.
pub fn weighted(m: &CMat, w: &DVector<f64>) -> CMat {
    let s: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * (s[i] / s[j]))
}

pub fn weighted_norm(v: &CVec, w: &DVector<f64>) -> f64 {
    v.iter()
        .zip(w.iter())
        .map(|(z, wi)| z.norm_sqr() * wi)
        .sum::<f64>()
        .sqrt()
}

/// Complex Schur decomposition `M = Q T Qᴴ`.
pub fn schur(m: &CMat) -> Result<(CMat, CMat)> {
    let n = m.nrows();
    let s = Schur::try_new(m.clone(), f64::EPSILON, 200 * n.max(10)).ok_or(Error::NoConvergence)?;
    let (q, mut t) = s.unpack();
    for j in 0..n {
        for i in j + 1..n {
            t[(i, j)] = C64::new(0.0, 0.0);
        }
    }
    Ok((q, t))
}

/// Eigenvectors of an upper-triangular matrix by back substitution, one per
/// diagonal entry, normalized to unit Euclidean norm.
pub fn triangular_eigenvectors(t: &CMat) -> CMat {
    let n = t.nrows();
    let scale = t.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let small = scale * f64::EPSILON;
    let mut out = CMat::zeros(n, n);
    for k in 0..n {
        let lam = t[(k, k)];
        let mut y = vec![C64::new(0.0, 0.0); n];
        y[k] = C64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut s = C64::new(0.0, 0.0);
            for j in i + 1..=k {
                s += t[(i, j)] * y[j];
            }
            let mut d = t[(i, i)] - lam;
            if d.norm() < small {
                d = C64::new(small, 0.0);
            }
            y[i] = -s / d;
        }
        let nrm = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for i in 0..=k {
            out[(i, k)] = y[i] / nrm;
        }
    }
    out
}

/// Swaps the diagonal entries `i` and `i + 1` of the Schur form in place.
pub fn schur_swap(q: &mut CMat, t: &mut CMat, i: usize) {
    let n = t.nrows();
    let a = t[(i, i)];
    let b = t[(i + 1, i + 1)];
    let c = t[(i, i + 1)];
    let d = b - a;
    let r = (c.norm_sqr() + d.norm_sqr()).sqrt();
    if r == 0.0 {
        return;
    }
    let cs = c / r;
    let sn = d / r;
    // Rows: T <- G T with G = [[cs̄, sn̄], [−sn, cs]].
    for j in 0..n {
        let x = t[(i, j)];
        let y = t[(i + 1, j)];
        t[(i, j)] = cs.conj() * x + sn.conj() * y;
        t[(i + 1, j)] = -sn * x + cs * y;
    }
    // Columns: T <- T Gᴴ, Q <- Q Gᴴ.
    for m in [&mut *t, &mut *q] {
        for k in 0..n {
            let x = m[(k, i)];
            let y = m[(k, i + 1)];
            m[(k, i)] = x * cs + y * sn;
            m[(k, i + 1)] = -x * sn.conj() + y * cs.conj();
        }
    }
    t[(i + 1, i)] = C64::new(0.0, 0.0);
    t[(i, i)] = b;
    t[(i + 1, i + 1)] = a;
}

/// Reorders a Schur form so that the diagonal positions in `selected` occupy
/// the leading block, preserving their relative order.
pub fn schur_reorder_front(q: &mut CMat, t: &mut CMat, selected: &[usize]) {
    let mut sel: Vec<usize> = selected.to_vec();
    sel.sort_unstable();
    for (target, &pos) in sel.iter().enumerate() {
        let mut p = pos;
        while p > target {
            schur_swap(q, t, p - 1);
            p -= 1;
        }
    }
}

/// Orthonormal basis of the numerical null space of a square matrix.
pub fn null_space(m: &CMat, tol: f64) -> CMat {
    let n = m.ncols();
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    let d = svd(m, false, true);
    let v = d.v.expect("requested V");
    let rank = d.s.iter().filter(|&&s| s > tol).count();
    v.columns(rank, n - rank).into_owned()
}

/// Orthonormal basis of the column range, dropping directions with singular
/// value below `rel_tol · σ_max` (or below `abs_floor`).
pub fn range_basis(m: &CMat, rel_tol: f64, abs_floor: f64) -> CMat {
    if m.ncols() == 0 || m.nrows() == 0 {
        return CMat::zeros(m.nrows(), 0);
    }
    let d = svd(m, true, false);
    let u = d.u.expect("requested U");
    let smax = d.s.first().copied().unwrap_or(0.0);
    let cut = (rel_tol * smax).max(abs_floor);
    let rank = d.s.iter().filter(|&&s| s > cut).count();
    u.columns(0, rank).into_owned()
}

/// Removes from the columns of `m` their components along the orthonormal
/// columns of `basis`.
pub fn project_out(m: &CMat, basis: &CMat) -> CMat {
    if basis.ncols() == 0 {
        return m.clone();
    }
    m - basis * (basis.adjoint() * m)
}

/// Jordan chains of `m` at `lambda0` from the staircase of null spaces of
/// `(m − λ₀)^j`.
///
/// Each chain is returned eigenvector first: `(m − λ₀) x₀ = 0` and
/// `(m − λ₀) x_{j+1} = x_j`. `tol` is the relative singular-value threshold
/// used for every numerical rank decision.
pub fn jordan_chains(m: &CMat, lambda0: C64, tol: f64) -> Vec<Vec<CVec>> {
    let n = m.nrows();
    let b = m - CMat::identity(n, n) * lambda0;
    let bnorm = spectral_norm(&b).max(1.0);
    let mut kernels: Vec<CMat> = vec![CMat::zeros(n, 0)];
    let mut power = CMat::identity(n, n);
    for j in 1..=n {
        power = &b * &power;
        let k = null_space(&power, tol * bnorm.powi(j as i32));
        let grew = k.ncols() > kernels[j - 1].ncols();
        kernels.push(k);
        if !grew || kernels[j].ncols() == n {
            if !grew {
                kernels.pop();
            }
            break;
        }
    }
    let depth = kernels.len() - 1;
    let mut chains: Vec<Vec<CVec>> = Vec::new();
    for j in (1..=depth).rev() {
        let mut cols: Vec<CVec> = (0..kernels[j - 1].ncols())
            .map(|c| kernels[j - 1].column(c).into_owned())
            .collect();
        for ch in &chains {
            // level j vector of a longer chain
            cols.push(ch[j - 1].clone());
        }
        let w = if cols.is_empty() {
            CMat::zeros(n, 0)
        } else {
            range_basis(&CMat::from_columns(&cols), tol, 0.0)
        };
        let cand = project_out(&kernels[j], &w);
        // genuinely new directions have O(1) weight in the orthonormal kernel basis
        let tops = range_basis(&cand, 1e-3, tol.sqrt());
        for c in 0..tops.ncols() {
            let top = tops.column(c).into_owned();
            let mut chain = vec![top];
            for _ in 1..j {
                let next = &b * chain.last().expect("nonempty");
                chain.push(next);
            }
            chain.reverse();
            chains.push(chain);
        }
    }
    chains
}
