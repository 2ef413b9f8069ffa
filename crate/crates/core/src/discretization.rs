//! Spectral Galerkin discretization of the Helmholtz and Schrödinger pencils.
//!
//! The trial and test space on `[a, b]` is the set of polynomials of degree
//! below `n` that satisfy `∂^{m₁}u = ∂^{m₂}u = 0` at both ends. A basis is
//! obtained by recombining Chebyshev polynomials, `T_k + αT_{k+2} + βT_{k+4}`,
//! so that every basis function meets the boundary pair exactly, and is then
//! orthonormalized in `L²(a, b)`. Unknowns are coefficients in that basis,
//! which makes the Euclidean norm of a coefficient vector its `L²` norm.
//!
//! Derivatives act exactly on Chebyshev coefficients and products with `q`
//! are formed on a grid of twice the size, so `A_k[i, j] = ∫ φ_i L_k φ_j` is
//! integrated without aliasing. Working on coefficients rather than nodal
//! values matters: nodal fourth derivatives carry `ε·n⁸` rounding noise,
//! which ruins eigenvalues for boundary pairs whose eigenfunctions do not
//! vanish at the ends.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{self, CVec};
use crate::pencil::QuadraticPencil;
use crate::symbol::{BoundaryPair, PencilKind};
use crate::{Error, Result, C64};

/// Smallest admissible number of grid points per direction.
pub const MIN_POINTS: usize = 8;

/// Default cap on the number of unknowns of a tensor-product pencil.
pub const DEFAULT_2D_CAP: usize = 3600;

/// Chebyshev–Gauss–Lobatto grid on `[a, b]` with Clenshaw–Curtis weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid1D {
    pub a: f64,
    pub b: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Grid1D {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Barycentric interpolation of nodal values to arbitrary points.
    pub fn interpolate(&self, values: &[f64], at: &[f64]) -> Vec<f64> {
        let n = self.len();
        let bw: Vec<f64> = (0..n)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == n - 1 {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();
        at.iter()
            .map(|&x| {
                let (mut num, mut den) = (0.0, 0.0);
                for j in 0..n {
                    let dx = x - self.nodes[j];
                    if dx == 0.0 {
                        return values[j];
                    }
                    let c = bw[j] / dx;
                    num += c * values[j];
                    den += c;
                }
                num / den
            })
            .collect()
    }
}

pub fn make_grid(a: f64, b: f64, n_pts: usize) -> Result<Grid1D> {
    if n_pts < MIN_POINTS {
        return Err(Error::InvalidInput(format!(
            "grid needs at least {MIN_POINTS} points, got {n_pts}"
        )));
    }
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInput(format!("interval [{a}, {b}] is empty")));
    }
    let m = n_pts - 1;
    let half = 0.5 * (b - a);
    let mut grid = sample_grid(a, b, n_pts);
    let mut weights = vec![0.0; n_pts];
    for (k, w) in weights.iter_mut().enumerate() {
        let th = PI * k as f64 / m as f64;
        let mut s = 1.0;
        for j in 1..=m / 2 {
            let bj = if 2 * j == m { 1.0 } else { 2.0 };
            s -= bj * (2.0 * j as f64 * th).cos() / (4.0 * (j * j) as f64 - 1.0);
        }
        let ck = if k == 0 || k == m { 1.0 } else { 2.0 };
        *w = ck * s / m as f64 * half;
    }
    grid.weights = weights;
    Ok(grid)
}

/// Lobatto nodes without the size floor applied to solver grids.
fn sample_grid(a: f64, b: f64, n: usize) -> Grid1D {
    let m = (n - 1) as f64;
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    // sin form keeps the nodes exactly symmetric
    let nodes = (0..n)
        .map(|j| match j {
            0 => a,
            _ if j == n - 1 => b,
            _ => mid + half * (PI * (2.0 * j as f64 - m) / (2.0 * m)).sin(),
        })
        .collect();
    Grid1D {
        a,
        b,
        nodes,
        weights: vec![0.0; n],
    }
}

/// Chebyshev coefficient-space operators on `[a, b]`.
mod cheb {
    use super::*;

    /// Angles of the ascending Lobatto nodes, `x_j = mid + half·cos θ_j`.
    pub fn thetas(n: usize) -> Vec<f64> {
        let m = (n - 1) as f64;
        (0..n).map(|j| PI * (m - j as f64) / m).collect()
    }

    pub fn nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
        sample_grid(a, b, n).nodes
    }

    /// Values at the `n` Lobatto nodes of a series of length `len`.
    pub fn eval(n: usize, len: usize) -> DMatrix<f64> {
        let th = thetas(n);
        DMatrix::from_fn(n, len, |i, k| (k as f64 * th[i]).cos())
    }

    /// Interpolation coefficients from values at the `n` Lobatto nodes.
    pub fn transform(n: usize) -> DMatrix<f64> {
        let th = thetas(n);
        let m = (n - 1) as f64;
        let end = |i: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        DMatrix::from_fn(n, n, |k, j| {
            2.0 / m * end(j) * end(k) * (k as f64 * th[j]).cos()
        })
    }

    /// `d/dx` on coefficient vectors of length `len`.
    pub fn derivative(len: usize, a: f64, b: f64) -> DMatrix<f64> {
        let scale = 2.0 / (b - a);
        DMatrix::from_fn(len, len, |k, j| {
            if j > k && (j - k) % 2 == 1 {
                let c = if k == 0 { 1.0 } else { 2.0 };
                c * j as f64 * scale
            } else {
                0.0
            }
        })
    }

    /// `∫_a^b T_m T_k dx` for the mapped polynomials.
    pub fn gram(len: usize, a: f64, b: f64) -> DMatrix<f64> {
        let int = |j: usize| {
            if j % 2 == 1 {
                0.0
            } else {
                2.0 / (1.0 - (j * j) as f64)
            }
        };
        let half = 0.5 * (b - a);
        DMatrix::from_fn(len, len, |m, k| {
            0.5 * half * (int(m + k) + int(m.abs_diff(k)))
        })
    }

    /// `T_k^{(m)}(1)` on the reference interval.
    pub fn trace(k: usize, m: u8) -> f64 {
        let kk = (k * k) as f64;
        (0..m as usize)
            .map(|i| (kk - (i * i) as f64) / (2 * i + 1) as f64)
            .product()
    }
}

/// Orthonormal recombined basis in one direction.
#[derive(Clone, Debug)]
struct Basis {
    n: usize,
    a: f64,
    b: f64,
    /// `n × (n − 4)` Chebyshev coefficients of the basis functions.
    coef: DMatrix<f64>,
}

impl Basis {
    fn new(grid: &Grid1D, bc: BoundaryPair) -> Result<Self> {
        let n = grid.len();
        let dim = n - 4;
        let (m1, m2) = (bc.m1(), bc.m2());
        let mut s = DMatrix::<f64>::zeros(n, dim);
        // conditions at x = −1 follow by parity
        for k in 0..dim {
            let row = |m: u8| {
                let r = [cheb::trace(k + 2, m), cheb::trace(k + 4, m), -cheb::trace(k, m)];
                let nrm = r[0].abs().max(r[1].abs());
                [r[0] / nrm, r[1] / nrm, r[2] / nrm]
            };
            let ([a11, a12, f1], [a21, a22, f2]) = (row(m1), row(m2));
            let det = a11 * a22 - a12 * a21;
            if !(det.abs() > 1e-12) {
                return Err(Error::Singular(format!(
                    "boundary rows for orders {:?} are rank deficient",
                    bc.orders()
                )));
            }
            s[(k, k)] = 1.0;
            s[(k + 2, k)] = (f1 * a22 - a12 * f2) / det;
            s[(k + 4, k)] = (a11 * f2 - f1 * a21) / det;
        }
        let mass = s.transpose() * cheb::gram(n, grid.a, grid.b) * &s;
        let chol = mass
            .cholesky()
            .ok_or_else(|| Error::Singular("basis Gram matrix".into()))?;
        // C = S L⁻ᵀ
        let coef = chol
            .l()
            .solve_lower_triangular(&s.transpose())
            .ok_or_else(|| Error::Singular("basis Gram factor".into()))?
            .transpose();
        Ok(Self {
            n,
            a: grid.a,
            b: grid.b,
            coef,
        })
    }

    fn dim(&self) -> usize {
        self.coef.ncols()
    }

    /// Length of the oversampled coefficient space used for products.
    fn fine(&self) -> usize {
        2 * self.n
    }

    fn padded(&self) -> DMatrix<f64> {
        let mut p = DMatrix::zeros(self.fine(), self.dim());
        p.view_mut((0, 0), (self.n, self.dim())).copy_from(&self.coef);
        p
    }

    /// Nodal values of the basis on the grid.
    fn prolongation(&self) -> DMatrix<f64> {
        cheb::eval(self.n, self.n) * &self.coef
    }

    /// `L²` projection of grid values, through their interpolant.
    fn restriction(&self) -> DMatrix<f64> {
        self.coef.transpose() * cheb::gram(self.n, self.a, self.b) * cheb::transform(self.n)
    }
}

/// Per-direction pieces of the Galerkin forms on the oversampled space.
struct Forms {
    /// `Cᵀ G`: pairs test functions with coefficient vectors.
    test: DMatrix<f64>,
    trial: DMatrix<f64>,
    d2: DMatrix<f64>,
    fine: usize,
}

impl Forms {
    fn new(basis: &Basis) -> Self {
        let fine = basis.fine();
        let trial = basis.padded();
        let test = trial.transpose() * cheb::gram(fine, basis.a, basis.b);
        let d = cheb::derivative(fine, basis.a, basis.b);
        Self {
            test,
            trial,
            d2: &d * &d,
            fine,
        }
    }

    fn k2(&self) -> DMatrix<f64> {
        &self.test * &self.d2 * &self.trial
    }

    fn k4(&self) -> DMatrix<f64> {
        &self.test * &self.d2 * &self.d2 * &self.trial
    }
}

/// Specification of the coefficient `q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "data", rename_all = "lowercase")]
pub enum Coefficient {
    Constant(f64),
    /// Monomial coefficients `c₀ + c₁x + c₂x² + …` (a function of `x` only).
    Polynomial(Vec<f64>),
    /// Values at the Chebyshev–Gauss–Lobatto nodes of the domain, interpolated
    /// by the same basis. On a square, `m²` values in x-major order.
    Samples(Vec<f64>),
}

impl Coefficient {
    fn constant_value(&self) -> Option<f64> {
        match self {
            Coefficient::Constant(c) => Some(*c),
            _ => None,
        }
    }

    fn eval_1d(&self, a: f64, b: f64, xs: &[f64]) -> Result<Vec<f64>> {
        match self {
            Coefficient::Constant(c) => Ok(vec![*c; xs.len()]),
            Coefficient::Polynomial(cs) => Ok(xs
                .iter()
                .map(|&x| cs.iter().rev().fold(0.0, |acc, c| acc * x + c))
                .collect()),
            Coefficient::Samples(v) => {
                if v.len() < 2 {
                    return Err(Error::InvalidInput("q needs at least two samples".into()));
                }
                Ok(sample_grid(a, b, v.len()).interpolate(v, xs))
            }
        }
    }

    /// Values on a tensor grid, x-major.
    fn eval_2d(&self, gx: (f64, f64, &[f64]), gy: (f64, f64, &[f64])) -> Result<Vec<f64>> {
        let (nx, ny) = (gx.2.len(), gy.2.len());
        match self {
            Coefficient::Samples(v) => {
                let m = (v.len() as f64).sqrt().round() as usize;
                if m < 2 || m * m != v.len() {
                    return Err(Error::InvalidInput(format!(
                        "2D q samples must form an m×m array, got {} values",
                        v.len()
                    )));
                }
                let sx = sample_grid(gx.0, gx.1, m);
                let sy = sample_grid(gy.0, gy.1, m);
                // along y for each sample row, then along x
                let rows: Vec<Vec<f64>> = (0..m)
                    .map(|i| sy.interpolate(&v[i * m..(i + 1) * m], gy.2))
                    .collect();
                let mut out = vec![0.0; nx * ny];
                for j in 0..ny {
                    let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
                    for (i, val) in sx.interpolate(&col, gx.2).into_iter().enumerate() {
                        out[i * ny + j] = val;
                    }
                }
                Ok(out)
            }
            _ => {
                let qx = self.eval_1d(gx.0, gx.1, gx.2)?;
                Ok((0..nx * ny).map(|k| qx[k / ny]).collect())
            }
        }
    }
}

/// Pencil kind together with the coefficient `q` and its admissible bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MediumProfile {
    pub kind: PencilKind,
    pub q: Coefficient,
    pub q_min: f64,
    pub q_max: f64,
}

impl MediumProfile {
    pub fn new(kind: PencilKind, q: Coefficient, q_min: f64, q_max: f64) -> Result<Self> {
        if !(q_min > 0.0) || !(q_max >= q_min) || !q_max.is_finite() {
            return Err(Error::InvalidInput(format!(
                "q bounds [{q_min}, {q_max}] must be positive and ordered"
            )));
        }
        Ok(Self {
            kind,
            q,
            q_min,
            q_max,
        })
    }

    /// Constant coefficient with tight bounds.
    pub fn constant(kind: PencilKind, q: f64) -> Result<Self> {
        Self::new(kind, Coefficient::Constant(q), q, q)
    }

    fn check_bounds(&self, values: &[f64]) -> Result<()> {
        let slack = 1e-12 * self.q_max;
        for &v in values {
            if !(v >= self.q_min - slack && v <= self.q_max + slack) {
                return Err(Error::InvalidInput(format!(
                    "q = {v} leaves the bounds [{}, {}]",
                    self.q_min, self.q_max
                )));
            }
        }
        Ok(())
    }
}

/// Dense Galerkin pencil with the boundary pair built into the basis.
#[derive(Clone, Debug)]
pub struct DiscretePencil {
    pub pencil: QuadraticPencil,
    pub kind: PencilKind,
    pub bc: BoundaryPair,
    pub grids: Vec<Grid1D>,
    /// Maps coefficient vectors to values at every grid node (x-major in 2D).
    pub prolongation: DMatrix<f64>,
    /// `L²` projection of grid values onto the basis; left inverse of
    /// `prolongation`.
    pub restriction: DMatrix<f64>,
}

impl DiscretePencil {
    pub fn dim(&self) -> usize {
        self.pencil.dim()
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.pencil.weights
    }

    pub fn apply(&self, lambda: C64, u: &CVec) -> Result<CVec> {
        self.pencil.apply(lambda, u)
    }

    /// Values at every grid node of a coefficient vector.
    pub fn prolong(&self, u: &CVec) -> Result<CVec> {
        if u.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: u.len(),
            });
        }
        Ok(linalg::to_complex(&self.prolongation) * u)
    }

    /// Coefficients of the `L²` projection of a grid function.
    pub fn restrict(&self, values: &CVec) -> Result<CVec> {
        if values.len() != self.restriction.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.restriction.ncols(),
                got: values.len(),
            });
        }
        Ok(linalg::to_complex(&self.restriction) * values)
    }
}

fn pencil_from(coeffs: [DMatrix<f64>; 3]) -> Result<QuadraticPencil> {
    let [a0, a1, a2] = coeffs;
    QuadraticPencil::new(
        linalg::to_complex(&a0),
        linalg::to_complex(&a1),
        linalg::to_complex(&a2),
    )
}

fn check_grid(g: &Grid1D) -> Result<()> {
    if g.len() < MIN_POINTS {
        return Err(Error::InvalidInput(format!(
            "grid needs at least {MIN_POINTS} points"
        )));
    }
    Ok(())
}

/// Assembles the pencil on an interval with `∂^{m₁}u = ∂^{m₂}u = 0` at both ends.
pub fn assemble_pencil(
    profile: &MediumProfile,
    grid: &Grid1D,
    bc: BoundaryPair,
) -> Result<DiscretePencil> {
    check_grid(grid)?;
    let basis = Basis::new(grid, bc)?;
    let f = Forms::new(&basis);
    let (ct, cp, d2) = (&f.test, &f.trial, &f.d2);
    let y = d2 * cp;
    let qv = profile
        .q
        .eval_1d(grid.a, grid.b, &cheb::nodes(grid.a, grid.b, f.fine))?;
    profile.check_bounds(&qv)?;
    profile.check_bounds(&profile.q.eval_1d(grid.a, grid.b, &grid.nodes)?)?;
    // multiplication by q on the oversampled coefficient space
    let mq = |m: &DMatrix<f64>| -> DMatrix<f64> {
        match profile.q.constant_value() {
            Some(c) => m * c,
            None => {
                let mut vals = cheb::eval(f.fine, f.fine) * m;
                for (i, mut row) in vals.row_iter_mut().enumerate() {
                    row *= qv[i];
                }
                cheb::transform(f.fine) * vals
            }
        }
    };
    let qy = mq(&y);
    let qc = mq(cp);
    let id = ct * cp;
    let lap = ct * &y;
    let coeffs = match profile.kind {
        PencilKind::Helmholtz => [
            ct * d2 * &qy,
            -(ct * d2 * &qc + ct * &qy + &lap),
            &id + ct * &qc,
        ],
        PencilKind::Schrodinger => [
            ct * d2 * &qy + &lap,
            -(ct * d2 * &qc + ct * &qy + &id),
            ct * &qc,
        ],
    };
    Ok(DiscretePencil {
        pencil: pencil_from(coeffs)?,
        kind: profile.kind,
        bc,
        grids: vec![grid.clone()],
        prolongation: basis.prolongation(),
        restriction: basis.restriction(),
    })
}

/// Tensor-product assembly on a rectangle with the boundary pair on all four
/// sides, capped at [`DEFAULT_2D_CAP`] unknowns.
pub fn assemble_pencil_2d(
    profile: &MediumProfile,
    grid_x: &Grid1D,
    grid_y: &Grid1D,
    bc: BoundaryPair,
) -> Result<DiscretePencil> {
    assemble_pencil_2d_capped(profile, grid_x, grid_y, bc, DEFAULT_2D_CAP)
}

pub fn assemble_pencil_2d_capped(
    profile: &MediumProfile,
    grid_x: &Grid1D,
    grid_y: &Grid1D,
    bc: BoundaryPair,
    cap: usize,
) -> Result<DiscretePencil> {
    check_grid(grid_x)?;
    check_grid(grid_y)?;
    let size = (grid_x.len() - 4) * (grid_y.len() - 4);
    if size > cap {
        return Err(Error::SizeCap { size, cap });
    }
    let (bx, by) = (Basis::new(grid_x, bc)?, Basis::new(grid_y, bc)?);
    let (fx, fy) = (Forms::new(&bx), Forms::new(&by));
    let ix = DMatrix::<f64>::identity(bx.dim(), bx.dim());
    let iy = DMatrix::<f64>::identity(by.dim(), by.dim());
    let (k2x, k2y) = (fx.k2(), fy.k2());
    let lap = k2x.kronecker(&iy) + ix.kronecker(&k2y);
    let id = DMatrix::<f64>::identity(size, size);
    let xs = cheb::nodes(grid_x.a, grid_x.b, fx.fine);
    let ys = cheb::nodes(grid_y.a, grid_y.b, fy.fine);
    let qv = profile
        .q
        .eval_2d((grid_x.a, grid_x.b, &xs), (grid_y.a, grid_y.b, &ys))?;
    profile.check_bounds(&qv)?;
    profile.check_bounds(&profile.q.eval_2d(
        (grid_x.a, grid_x.b, &grid_x.nodes),
        (grid_y.a, grid_y.b, &grid_y.nodes),
    )?)?;
    let coeffs = match profile.q.constant_value() {
        Some(q) => {
            let bih =
                fx.k4().kronecker(&iy) + k2x.kronecker(&k2y) * 2.0 + ix.kronecker(&fy.k4());
            match profile.kind {
                PencilKind::Helmholtz => [&bih * q, &lap * (-(2.0 * q + 1.0)), &id * (1.0 + q)],
                PencilKind::Schrodinger => [&bih * q + &lap, -(&lap * (2.0 * q) + &id), &id * q],
            }
        }
        None => {
            let t = QForms::new(&fx, &fy, DMatrix::from_row_slice(fx.fine, fy.fine, &qv));
            let lql = t.form(&t.lap_test, &t.lap_trial);
            let lq = t.form(&t.lap_test, &t.id_trial);
            let ql = t.form(&t.id_test, &t.lap_trial);
            let qi = t.form(&t.id_test, &t.id_trial);
            match profile.kind {
                PencilKind::Helmholtz => [lql, -(lq + ql + &lap), &id + qi],
                PencilKind::Schrodinger => [lql + &lap, -(lq + ql + &id), qi],
            }
        }
    };
    Ok(DiscretePencil {
        pencil: pencil_from(coeffs)?,
        kind: profile.kind,
        bc,
        grids: vec![grid_x.clone(), grid_y.clone()],
        prolongation: bx.prolongation().kronecker(&by.prolongation()),
        restriction: bx.restriction().kronecker(&by.restriction()),
    })
}

type Factors = Vec<(DMatrix<f64>, DMatrix<f64>)>;

/// Separable factors of `⟨ψ, P q R ψ′⟩` for `P, R ∈ {Id, Δ}` on a rectangle.
///
/// Each operator is a sum of tensor products `X ⊗ Y`. Test factors are mapped
/// to the dual of nodal values so the pairing becomes a `q`-weighted sum over
/// the oversampled tensor grid.
struct QForms {
    q: DMatrix<f64>,
    id_test: Factors,
    lap_test: Factors,
    id_trial: Factors,
    lap_trial: Factors,
}

impl QForms {
    fn new(fx: &Forms, fy: &Forms, q: DMatrix<f64>) -> Self {
        let test = |f: &Forms, d: bool| {
            let m = if d { &f.test * &f.d2 } else { f.test.clone() };
            (m * cheb::transform(f.fine)).transpose()
        };
        let trial = |f: &Forms, d: bool| {
            let m = if d { &f.d2 * &f.trial } else { f.trial.clone() };
            cheb::eval(f.fine, f.fine) * m
        };
        Self {
            q,
            id_test: vec![(test(fx, false), test(fy, false))],
            lap_test: vec![
                (test(fx, true), test(fy, false)),
                (test(fx, false), test(fy, true)),
            ],
            id_trial: vec![(trial(fx, false), trial(fy, false))],
            lap_trial: vec![
                (trial(fx, true), trial(fy, false)),
                (trial(fx, false), trial(fy, true)),
            ],
        }
    }

    fn form(&self, test: &Factors, trial: &Factors) -> DMatrix<f64> {
        let (nx, ny) = (test[0].0.ncols(), test[0].1.ncols());
        let my = self.q.ncols();
        let mut out = DMatrix::<f64>::zeros(nx * ny, nx * ny);
        for (tx, ty) in test {
            for (ux, uy) in trial {
                // r[j][(a, c)] = Σ_i tx[i,a] q[i,j] ux[i,c]
                let r: Vec<DMatrix<f64>> = (0..my)
                    .map(|j| {
                        let mut w = ux.clone();
                        for (i, mut row) in w.row_iter_mut().enumerate() {
                            row *= self.q[(i, j)];
                        }
                        tx.transpose() * w
                    })
                    .collect();
                let tyt = ty.transpose();
                for a in 0..nx {
                    for c in 0..nx {
                        let mut w = uy.clone();
                        for (j, mut row) in w.row_iter_mut().enumerate() {
                            row *= r[j][(a, c)];
                        }
                        let mut view = out.view_mut((a * ny, c * ny), (ny, ny));
                        view += &tyt * w;
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_examples() {
        let g = make_grid(0.0, 1.0, 8).unwrap();
        assert_eq!(g.len(), 8);
        assert_eq!(g.nodes[0], 0.0);
        assert_eq!(g.nodes[7], 1.0);
        assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
        for n in [8, 9, 33, 96] {
            let g = make_grid(0.0, 1.0, n).unwrap();
            assert!((g.weights.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            assert!(g.weights.iter().all(|&w| w > 0.0));
        }
        let g = make_grid(-1.0, 1.0, 16).unwrap();
        for j in 0..16 {
            assert_eq!(g.nodes[j], -g.nodes[15 - j]);
        }
        assert!(make_grid(0.0, 1.0, 7).is_err());
        assert!(make_grid(1.0, 1.0, 9).is_err());
    }

    #[test]
    fn clenshaw_curtis_integrates_polynomials() {
        let g = make_grid(-1.0, 2.0, 12).unwrap();
        let s: f64 = g.nodes.iter().zip(&g.weights).map(|(x, w)| w * x.powi(6)).sum();
        let exact = (2f64.powi(7) + 1.0) / 7.0;
        assert!((s - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn coefficient_derivative_and_gram() {
        let (a, b) = (0.0, 2.0);
        let n = 10;
        let nodes = cheb::nodes(a, b, n);
        let vals = DVector::from_iterator(n, nodes.iter().map(|x| x.powi(3)));
        let c = cheb::transform(n) * vals;
        let back = cheb::eval(n, n) * (cheb::derivative(n, a, b) * &c);
        for (x, v) in nodes.iter().zip(back.iter()) {
            assert!((v - 3.0 * x * x).abs() < 1e-12);
        }
        let int = (c.transpose() * cheb::gram(n, a, b) * &c)[(0, 0)];
        assert!((int - 2f64.powi(7) / 7.0).abs() < 1e-11);
    }

    #[test]
    fn basis_meets_boundary_pair_and_is_orthonormal() {
        let n = 24;
        let g = make_grid(0.0, 1.0, n).unwrap();
        for (m1, m2) in [(0, 1), (0, 2), (1, 3), (2, 3), (0, 3), (1, 2)] {
            let basis = Basis::new(&g, BoundaryPair::new(m1, m2).unwrap()).unwrap();
            for m in [m1, m2] {
                for col in 0..basis.dim() {
                    let c = basis.coef.column(col);
                    let term = |k: usize| c[k] * cheb::trace(k, m);
                    let sign = |k: usize| if (k + m as usize) % 2 == 0 { 1.0 } else { -1.0 };
                    let scale: f64 = (0..n).map(|k| term(k).abs()).sum();
                    let right: f64 = (0..n).map(term).sum();
                    let left: f64 = (0..n).map(|k| term(k) * sign(k)).sum();
                    assert!(right.abs() <= 1e-13 * scale && left.abs() <= 1e-13 * scale);
                }
            }
            let gram = basis.coef.transpose() * cheb::gram(n, 0.0, 1.0) * &basis.coef;
            assert!((gram - DMatrix::<f64>::identity(n - 4, n - 4)).amax() < 1e-12);
        }
    }

    #[test]
    fn prolong_and_restrict_are_inverse() {
        let g = make_grid(0.0, 1.0, 16).unwrap();
        let prof = MediumProfile::constant(PencilKind::Schrodinger, 2.0).unwrap();
        let p = assemble_pencil(&prof, &g, BoundaryPair::new(1, 3).unwrap()).unwrap();
        let u = CVec::from_fn(12, |i, _| C64::new(i as f64 - 3.0, 0.5));
        let back = p.restrict(&p.prolong(&u).unwrap()).unwrap();
        assert!((back - u).norm() < 1e-11);
        assert!(p.restrict(&CVec::zeros(3)).is_err());
    }

    #[test]
    fn constant_q_gives_scalar_a2_and_symmetric_a0() {
        let g = make_grid(0.0, 1.0, 20).unwrap();
        for (m1, m2) in [(0, 1), (0, 2), (1, 3), (2, 3)] {
            let bc = BoundaryPair::new(m1, m2).unwrap();
            for kind in [PencilKind::Helmholtz, PencilKind::Schrodinger] {
                let prof = MediumProfile::constant(kind, 1.5).unwrap();
                let p = assemble_pencil(&prof, &g, bc).unwrap();
                let d = if kind == PencilKind::Helmholtz { 2.5 } else { 1.5 };
                assert!((&p.pencil.a2 - linalg::identity(16) * C64::new(d, 0.0)).camax() < 1e-12);
                // ∂⁴ is symmetric under every pair; ∂² only when u'·v vanishes
                // at the ends, which fails for (2, 3)
                let a0 = &p.pencil.a0;
                let symmetric = kind == PencilKind::Helmholtz || (m1, m2) != (2, 3);
                let asym = (a0 - a0.transpose()).camax();
                assert_eq!(asym <= 1e-12 * a0.camax(), symmetric, "{m1}{m2} {kind:?}");
            }
        }
    }

    #[test]
    fn variable_q_a2_is_spd_within_bounds() {
        let g = make_grid(0.0, 1.0, 20).unwrap();
        let prof = MediumProfile::new(
            PencilKind::Helmholtz,
            Coefficient::Polynomial(vec![1.0, 0.5]),
            1.0,
            1.5,
        )
        .unwrap();
        let p = assemble_pencil(&prof, &g, BoundaryPair::clamped()).unwrap();
        assert_eq!(p.dim(), 16);
        let a2 = p.pencil.a2.map(|z| z.re);
        assert!((&a2 - a2.transpose()).amax() < 1e-13);
        let ev = a2.symmetric_eigen().eigenvalues;
        assert!(ev.iter().all(|&v| v >= 2.0 - 1e-12 && v <= 2.5 + 1e-12));
    }

    #[test]
    fn sine_rayleigh_quotient_matches_symbol() {
        // sin(kπx) satisfies u = u'' = 0 and is an exact eigenfunction of the
        // constant-coefficient operator with ξ = kπ
        let n = 40;
        let g = make_grid(0.0, 1.0, n).unwrap();
        let bc = BoundaryPair::new(0, 2).unwrap();
        let q = 0.7;
        let lam = C64::new(-3.0, 1.0);
        for kind in [PencilKind::Helmholtz, PencilKind::Schrodinger] {
            let p = assemble_pencil(&MediumProfile::constant(kind, q).unwrap(), &g, bc).unwrap();
            for k in 1..4 {
                let xi = k as f64 * PI;
                let vals = CVec::from_iterator(
                    n,
                    g.nodes.iter().map(|x| C64::new((xi * x).sin(), 0.0)),
                );
                let u = p.restrict(&vals).unwrap();
                let rq = u.dotc(&p.apply(lam, &u).unwrap()) / u.dotc(&u);
                let (x2, x4) = (xi * xi, xi.powi(4));
                let sym = match kind {
                    PencilKind::Helmholtz => {
                        q * x4 + lam * (2.0 * q + 1.0) * x2 + lam * lam * (1.0 + q)
                    }
                    PencilKind::Schrodinger => {
                        C64::new(q * x4 - x2, 0.0) + lam * (2.0 * q * x2 - 1.0) + lam * lam * q
                    }
                };
                assert!((rq - sym).norm() < 1e-9 * sym.norm(), "{kind:?} k={k}: {rq} vs {sym}");
            }
        }
    }

    #[test]
    fn q_out_of_bounds_rejected() {
        let g = make_grid(0.0, 1.0, 12).unwrap();
        let prof = MediumProfile::new(
            PencilKind::Schrodinger,
            Coefficient::Polynomial(vec![1.0, 2.0]),
            1.0,
            2.0,
        )
        .unwrap();
        assert!(assemble_pencil(&prof, &g, BoundaryPair::clamped()).is_err());
    }

    #[test]
    fn samples_interpolate_polynomials_exactly() {
        let xs = cheb::nodes(0.0, 1.0, 16);
        let src = sample_grid(0.0, 1.0, 6);
        let vals: Vec<f64> = src.nodes.iter().map(|x| 1.0 + x * x).collect();
        let q = Coefficient::Samples(vals).eval_1d(0.0, 1.0, &xs).unwrap();
        for (x, v) in xs.iter().zip(q) {
            assert!((v - 1.0 - x * x).abs() < 1e-13);
        }
    }

    #[test]
    fn samples_match_polynomial_pencil() {
        let g = make_grid(0.0, 1.0, 14).unwrap();
        let src = sample_grid(0.0, 1.0, 5);
        let vals: Vec<f64> = src.nodes.iter().map(|x| 1.0 + 0.5 * x * x).collect();
        let bc = BoundaryPair::new(1, 3).unwrap();
        let build = |q: Coefficient| {
            let prof = MediumProfile::new(PencilKind::Helmholtz, q, 1.0, 1.5).unwrap();
            assemble_pencil(&prof, &g, bc).unwrap()
        };
        let a = build(Coefficient::Samples(vals));
        let b = build(Coefficient::Polynomial(vec![1.0, 0.0, 0.5]));
        let scale = a.pencil.a0.camax();
        assert!((&a.pencil.a0 - &b.pencil.a0).camax() < 1e-12 * scale);
        assert!((&a.pencil.a1 - &b.pencil.a1).camax() < 1e-12 * scale);
    }

    #[test]
    fn coefficient_json_schema() {
        let c: Coefficient = serde_json::from_str(r#"{"type":"constant","data":2.0}"#).unwrap();
        assert_eq!(c, Coefficient::Constant(2.0));
        let c: Coefficient =
            serde_json::from_str(r#"{"type":"polynomial","data":[1,0.5]}"#).unwrap();
        assert_eq!(c, Coefficient::Polynomial(vec![1.0, 0.5]));
    }

    #[test]
    fn two_d_dimensions_and_cap() {
        let g = make_grid(0.0, 1.0, 12).unwrap();
        let prof = MediumProfile::constant(PencilKind::Helmholtz, 1.0).unwrap();
        let p = assemble_pencil_2d(&prof, &g, &g, BoundaryPair::clamped()).unwrap();
        assert_eq!(p.dim(), 64);
        assert!(p.pencil.a2.diagonal().iter().all(|z| (z.re - 2.0).abs() < 1e-12));
        let e = assemble_pencil_2d_capped(&prof, &g, &g, BoundaryPair::clamped(), 50);
        assert!(matches!(e, Err(Error::SizeCap { size: 64, cap: 50 })));
    }

    #[test]
    fn two_d_general_q_path_agrees_with_constant_path() {
        let g = make_grid(0.0, 1.0, 10).unwrap();
        let bc = BoundaryPair::new(0, 2).unwrap();
        for kind in [PencilKind::Helmholtz, PencilKind::Schrodinger] {
            let c = assemble_pencil_2d(&MediumProfile::constant(kind, 1.3).unwrap(), &g, &g, bc)
                .unwrap();
            // a flat sample array takes the general path
            let flat =
                MediumProfile::new(kind, Coefficient::Samples(vec![1.3; 9]), 1.3, 1.3).unwrap();
            let v = assemble_pencil_2d(&flat, &g, &g, bc).unwrap();
            for (x, y) in [
                (&c.pencil.a0, &v.pencil.a0),
                (&c.pencil.a1, &v.pencil.a1),
                (&c.pencil.a2, &v.pencil.a2),
            ] {
                assert!((x - y).camax() <= 1e-10 * x.camax(), "{kind:?}");
            }
        }
    }
}
