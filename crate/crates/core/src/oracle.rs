//! Exact characteristic determinant of constant-coefficient 1D pencils.
//!
//! At constant `q` the pencils factor as
//!
//! ```text
//! T_H(λ) = (∂² − λ(1 + 1/q)) q (∂² − λ)      exponents μ₁ = λ, μ₂ = λ(1 + 1/q)
//! T_S(λ) = (∂² − λ)(q(∂² − λ) + 1)           exponents μ₁ = λ, μ₂ = λ − 1/q
//! ```
//!
//! so the null space of `T(λ)` on an interval is spanned by
//! `C(μ, x) = cosh(√μ x)` and `S(μ, x) = sinh(√μ x)/√μ` for `μ ∈ {μ₁, μ₂}`.
//! Both are entire in `μ`. Replacing the `μ₂` pair by divided differences
//! `[f(μ₂) − f(μ₁)]/(μ₂ − μ₁)` keeps the basis valid when the exponents merge,
//! so the determinant of boundary traces is an entire function of `λ` whose
//! zeros are exactly the eigenvalues.

use std::f64::consts::PI;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::symbol::{BoundaryPair, PencilKind};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicFunction {
    pub kind: PencilKind,
    pub q: f64,
    pub length: f64,
    pub bc: BoundaryPair,
}

/// Axis-aligned rectangle in the complex plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        if !(re_min < re_max && im_min < im_max) {
            return Err(Error::InvalidInput(format!(
                "rectangle [{re_min}, {re_max}] × [{im_min}, {im_max}] is empty"
            )));
        }
        Ok(Self {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }

    pub fn contains(&self, z: C64) -> bool {
        z.re > self.re_min && z.re < self.re_max && z.im > self.im_min && z.im < self.im_max
    }

    fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    fn height(&self) -> f64 {
        self.im_max - self.im_min
    }

    fn center(&self) -> C64 {
        C64::new(
            0.5 * (self.re_min + self.re_max),
            0.5 * (self.im_min + self.im_max),
        )
    }

    fn corners(&self) -> [C64; 4] {
        [
            C64::new(self.re_min, self.im_min),
            C64::new(self.re_max, self.im_min),
            C64::new(self.re_max, self.im_max),
            C64::new(self.re_min, self.im_max),
        ]
    }

    fn grown(&self, by: f64) -> Self {
        Self {
            re_min: self.re_min - by,
            re_max: self.re_max + by,
            im_min: self.im_min - by,
            im_max: self.im_max + by,
        }
    }
}

/// A zero of the characteristic determinant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub lambda: C64,
    pub multiplicity: usize,
    /// `|f(λ)|` relative to the largest `|f|` seen on the enclosing contour.
    pub newton_residual: f64,
}

const SERIES_RADIUS: f64 = 4.0;

/// `(C, S, ∂C/∂μ, ∂S/∂μ)` at `(μ, x)`.
fn basis(mu: C64, x: f64) -> [C64; 4] {
    let z = mu * (x * x);
    if z.norm() < SERIES_RADIUS {
        // C = Σ zᵏ/(2k)!, S = x Σ zᵏ/(2k+1)!
        let (mut c, mut s, mut dc, mut ds) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        let mut zk = C64::new(1.0, 0.0); // z^k
        let mut zk1 = C64::new(0.0, 0.0); // k z^{k-1}
        let mut fe = 1.0; // (2k)!
        for k in 0..40 {
            let fo = fe * (2 * k + 1) as f64;
            c += zk / fe;
            s += zk / fo;
            dc += zk1 / fe;
            ds += zk1 / fo;
            zk1 = zk * (k + 1) as f64;
            zk *= z;
            fe = fo * (2 * k + 2) as f64;
        }
        let x2 = x * x;
        [c, s * x, dc * x2, ds * x2 * x]
    } else {
        let r = mu.sqrt();
        let c = (r * x).cosh();
        let s = (r * x).sinh() / r;
        [c, s, s * (x / 2.0), (c * x - s) / (mu * 2.0)]
    }
}

/// `∂ᵐ_x` of `(C, S)` and of their `μ`-derivatives.
fn traces(mu: C64, x: f64, m: u8) -> ([C64; 2], [C64; 2]) {
    let [c, s, dc, ds] = basis(mu, x);
    match m {
        0 => ([c, s], [dc, ds]),
        1 => ([mu * s, c], [s + mu * ds, dc]),
        2 => ([mu * c, mu * s], [c + mu * dc, s + mu * ds]),
        _ => ([mu * mu * s, mu * c], [mu * s * 2.0 + mu * mu * ds, c + mu * dc]),
    }
}

impl CharacteristicFunction {
    pub fn new(kind: PencilKind, q: f64, length: f64, bc: BoundaryPair) -> Result<Self> {
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::InvalidInput(format!("q must be positive, got {q}")));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidInput(format!("length must be positive, got {length}")));
        }
        Ok(Self {
            kind,
            q,
            length,
            bc,
        })
    }

    pub fn exponents(&self, lambda: C64) -> (C64, C64) {
        match self.kind {
            PencilKind::Helmholtz => (lambda, lambda * (1.0 + 1.0 / self.q)),
            PencilKind::Schrodinger => (lambda, lambda - 1.0 / self.q),
        }
    }

    /// Boundary-trace matrix: rows `∂^{m₁}, ∂^{m₂}` at `0` then at `L`.
    pub fn trace_matrix(&self, lambda: C64) -> Matrix4<C64> {
        let (mu1, mu2) = self.exponents(lambda);
        let gap = mu2 - mu1;
        // divided differences lose ε/|gap|; the midpoint derivative errs by O(gap²)
        let confluent = gap.norm() < 1e-6 * (1.0 + lambda.norm()).sqrt();
        let mid = (mu1 + mu2) * 0.5;
        let mut m = Matrix4::zeros();
        let rows = [
            (self.bc.m1(), 0.0),
            (self.bc.m2(), 0.0),
            (self.bc.m1(), self.length),
            (self.bc.m2(), self.length),
        ];
        for (r, &(order, x)) in rows.iter().enumerate() {
            let (f1, _) = traces(mu1, x, order);
            let second = if confluent {
                traces(mid, x, order).1
            } else {
                let (f2, _) = traces(mu2, x, order);
                [(f2[0] - f1[0]) / gap, (f2[1] - f1[1]) / gap]
            };
            m[(r, 0)] = f1[0];
            m[(r, 1)] = f1[1];
            m[(r, 2)] = second[0];
            m[(r, 3)] = second[1];
        }
        m
    }

    pub fn char_det(&self, lambda: C64) -> C64 {
        self.trace_matrix(lambda).determinant()
    }

    /// `char_det(λ)·e^{−ρ}`: a constant rescaling that keeps the function
    /// analytic while avoiding overflow on large contours.
    pub fn char_det_scaled(&self, lambda: C64, rho: f64) -> C64 {
        self.char_det(lambda) * (-rho).exp()
    }

    /// Growth exponent `2L·max Re √μ` over a rectangle, used as `ρ`.
    pub fn scale_exponent(&self, rect: &Rect) -> f64 {
        rect.corners()
            .iter()
            .map(|&z| {
                let (a, b) = self.exponents(C64::new(z.norm(), 0.0));
                a.norm().sqrt().max(b.norm().sqrt())
            })
            .fold(0.0, f64::max)
            * 2.0
            * self.length
    }
}

/// Tuning of the argument-principle root finder.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootOptions {
    /// Boundary samples per rectangle side on the first pass.
    pub points_per_side: usize,
    pub max_points_per_side: usize,
    pub max_depth: usize,
    pub newton_tol: f64,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            points_per_side: 128,
            max_points_per_side: 1 << 14,
            max_depth: 160,
            newton_tol: 1e-10,
        }
    }
}

/// Largest argument increment accepted between consecutive boundary samples.
const MAX_STEP_ARG: f64 = 0.5;

struct Finder<'a> {
    cf: &'a CharacteristicFunction,
    rho: f64,
    opts: RootOptions,
}

struct Winding {
    count: i64,
    max_abs: f64,
}

impl Finder<'_> {
    fn f(&self, z: C64) -> C64 {
        self.cf.char_det_scaled(z, self.rho)
    }

    fn boundary(&self, rect: &Rect, per_side: usize) -> Vec<C64> {
        let c = rect.corners();
        let mut pts = Vec::with_capacity(4 * per_side);
        for k in 0..4 {
            let (a, b) = (c[k], c[(k + 1) % 4]);
            for i in 0..per_side {
                pts.push(a + (b - a) * (i as f64 / per_side as f64));
            }
        }
        pts
    }

    /// Winding number of `f` around the rectangle, `None` when the boundary
    /// passes too close to a zero to resolve the argument.
    fn winding(&self, rect: &Rect) -> Option<Winding> {
        let mut per_side = self.opts.points_per_side;
        while per_side <= self.opts.max_points_per_side {
            let vals: Vec<C64> = self.boundary(rect, per_side).into_iter().map(|z| self.f(z)).collect();
            if vals.iter().any(|v| v.norm() == 0.0 || !v.re.is_finite() || !v.im.is_finite()) {
                return None;
            }
            let mut total = 0.0;
            let mut worst: f64 = 0.0;
            for k in 0..vals.len() {
                let d = (vals[(k + 1) % vals.len()] / vals[k]).arg();
                worst = worst.max(d.abs());
                total += d;
            }
            if worst < MAX_STEP_ARG {
                let w = total / (2.0 * PI);
                let count = w.round();
                if (w - count).abs() > 1e-3 {
                    return None;
                }
                let max_abs = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
                return Some(Winding {
                    count: count as i64,
                    max_abs,
                });
            }
            per_side *= 2;
        }
        None
    }

    fn split(&self, rect: &Rect, w: &Winding) -> Option<(Rect, Winding, Rect, Winding)> {
        for frac in [0.4937, 0.5411, 0.4519, 0.5773, 0.4213, 0.6131] {
            let (a, b) = if rect.width() >= rect.height() {
                let x = rect.re_min + frac * rect.width();
                (
                    Rect { re_max: x, ..*rect },
                    Rect { re_min: x, ..*rect },
                )
            } else {
                let y = rect.im_min + frac * rect.height();
                (
                    Rect { im_max: y, ..*rect },
                    Rect { im_min: y, ..*rect },
                )
            };
            if let (Some(wa), Some(wb)) = (self.winding(&a), self.winding(&b)) {
                if wa.count + wb.count == w.count {
                    return Some((a, wa, b, wb));
                }
            }
        }
        None
    }

    fn derivative(&self, z: C64) -> C64 {
        let h = 1e-6 * z.norm().max(1.0);
        (self.f(z + h) - self.f(z - h)) / (2.0 * h)
    }

    /// Mean of the zeros inside a circle through the trapezoid rule applied
    /// to `(1/2πi)∮ z f′/f dz`.
    fn cluster_mean(&self, center: C64, radius: f64, k: usize) -> C64 {
        let n = 64;
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..n {
            let e = C64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64);
            let z = center + e * radius;
            let dz = e * C64::new(0.0, radius * 2.0 * PI / n as f64);
            acc += z * self.derivative(z) / self.f(z) * dz;
        }
        acc / C64::new(0.0, 2.0 * PI) / k as f64
    }

    fn polish(&self, start: C64, k: usize, rect: &Rect, scale: f64) -> Root {
        let mut z = start;
        let limit = rect.grown(0.25 * rect.width().max(rect.height()));
        for _ in 0..60 {
            let fz = self.f(z);
            if fz.norm() == 0.0 {
                break;
            }
            let step = fz / self.derivative(z) * k as f64;
            if !step.re.is_finite() || !step.im.is_finite() {
                break;
            }
            let next = z - step;
            if !limit.contains(next) {
                break;
            }
            z = next;
            if step.norm() <= self.opts.newton_tol * 1e-3 * z.norm().max(1.0) {
                break;
            }
        }
        let residual = self.f(z).norm() / scale.max(f64::MIN_POSITIVE);
        Root {
            lambda: z,
            multiplicity: k,
            newton_residual: residual,
        }
    }

    fn search(&self, rect: Rect, w: Winding, depth: usize, out: &mut Vec<Root>) -> Result<()> {
        if w.count < 0 {
            return Err(Error::Contour(format!(
                "negative winding number {} on an entire function",
                w.count
            )));
        }
        if w.count == 0 {
            return Ok(());
        }
        let size = rect.width().max(rect.height());
        let scale = rect.center().norm().max(1.0);
        let tiny = size < 1e-7 * scale;
        // single zeros are isolated to a small box so Newton starts in its basin
        if (w.count == 1 && size < 1e-2 * scale) || tiny {
            let k = w.count as usize;
            let start = if k == 1 {
                rect.center()
            } else {
                self.cluster_mean(rect.center(), size, k)
            };
            out.push(self.polish(start, k, &rect, w.max_abs));
            return Ok(());
        }
        if depth >= self.opts.max_depth {
            return Err(Error::Contour(format!(
                "winding number {} unresolved after {depth} subdivisions",
                w.count
            )));
        }
        let (a, wa, b, wb) = self.split(&rect, &w).ok_or_else(|| {
            Error::Contour(format!(
                "inconsistent winding numbers while subdividing [{}, {}] × [{}, {}]",
                rect.re_min, rect.re_max, rect.im_min, rect.im_max
            ))
        })?;
        let (ra, rb) = rayon::join(
            || {
                let mut v = Vec::new();
                self.search(a, wa, depth + 1, &mut v).map(|_| v)
            },
            || {
                let mut v = Vec::new();
                self.search(b, wb, depth + 1, &mut v).map(|_| v)
            },
        );
        out.extend(ra?);
        out.extend(rb?);
        Ok(())
    }
}

/// Winding number of `char_det` around `rect`, nudging the rectangle outward
/// when its boundary grazes a zero.
pub fn winding_number(cf: &CharacteristicFunction, rect: &Rect) -> Result<i64> {
    let (_, w) = resolved_rect(cf, rect, &RootOptions::default())?;
    Ok(w.count)
}

fn resolved_rect(cf: &CharacteristicFunction, rect: &Rect, opts: &RootOptions) -> Result<(Rect, Winding)> {
    let finder = Finder {
        cf,
        rho: cf.scale_exponent(rect),
        opts: *opts,
    };
    let size = rect.width().max(rect.height());
    for k in 0..8 {
        let r = rect.grown(size * 1e-6 * k as f64 * 1.37);
        if let Some(w) = finder.winding(&r) {
            return Ok((r, w));
        }
    }
    Err(Error::Contour("rectangle boundary passes through a zero".into()))
}

/// All zeros of `char_det` inside `rect`, sorted by real then imaginary part,
/// with multiplicities from the winding numbers of the enclosing boxes.
pub fn find_roots(cf: &CharacteristicFunction, rect: &Rect, max_roots: usize) -> Result<Vec<Root>> {
    find_roots_with(cf, rect, max_roots, &RootOptions::default())
}

pub fn find_roots_with(
    cf: &CharacteristicFunction,
    rect: &Rect,
    max_roots: usize,
    opts: &RootOptions,
) -> Result<Vec<Root>> {
    let (r, w) = resolved_rect(cf, rect, opts)?;
    if w.count as usize > max_roots {
        return Err(Error::Contour(format!(
            "{} zeros inside the rectangle exceed the limit {max_roots}",
            w.count
        )));
    }
    let finder = Finder {
        cf,
        rho: cf.scale_exponent(&r),
        opts: *opts,
    };
    let total = w.count;
    let mut roots = Vec::new();
    finder.search(r, w, 0, &mut roots)?;
    let found: usize = roots.iter().map(|r| r.multiplicity).sum();
    if found as i64 != total {
        return Err(Error::Contour(format!(
            "found {found} zeros, winding number is {total}"
        )));
    }
    roots.sort_by(|a, b| {
        a.lambda
            .re
            .total_cmp(&b.lambda.re)
            .then(a.lambda.im.total_cmp(&b.lambda.im))
    });
    Ok(roots)
}
