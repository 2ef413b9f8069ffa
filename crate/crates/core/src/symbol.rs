//! Principal symbols and the parameter-ellipticity conditions.
//!
//! With `τ = 2` weighting (`λ` counts as two derivatives) the principal
//! symbols of the two pencils are
//!
//! ```text
//! T_H0 = q|ξ|⁴ + λ(1 + 2q)|ξ|² + λ²(1 + q)
//! T_S0 = q(|ξ|² + λ)²
//! ```
//!
//! Condition I asks that they do not vanish for `λ ∉ ℝ₋`, `|ξ| + |λ| ≠ 0`.
//! Condition II asks that the half-line boundary problem with the pair
//! `∂^{m₁}, ∂^{m₂}` is uniquely solvable among decaying solutions, which
//! reduces to the nonvanishing of a 2×2 Lopatinsky determinant built from
//! the roots with negative real part.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::sampling::Kronecker;
use crate::{Error, Result, C64};

/// Tolerance on `|Re r|` below which a characteristic root is treated as
/// lying on the imaginary axis.
pub const ROOT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PencilKind {
    Helmholtz,
    #[serde(alias = "schroedinger")]
    Schrodinger,
}

impl std::fmt::Display for PencilKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PencilKind::Helmholtz => f.write_str("helmholtz"),
            PencilKind::Schrodinger => f.write_str("schrodinger"),
        }
    }
}

/// Orders `(m₁, m₂)` of the two normal derivatives that vanish on the
/// boundary. Both lie in `0..=3` and differ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[u8; 2]", into = "[u8; 2]")]
pub struct BoundaryPair {
    m1: u8,
    m2: u8,
}

impl BoundaryPair {
    pub fn new(m1: u8, m2: u8) -> Result<Self> {
        if m1 > 3 || m2 > 3 {
            return Err(Error::InvalidInput(format!(
                "boundary orders must lie in 0..=3, got ({m1}, {m2})"
            )));
        }
        if m1 == m2 {
            return Err(Error::InvalidInput(format!(
                "boundary orders must differ, got ({m1}, {m2})"
            )));
        }
        Ok(Self { m1, m2 })
    }

    /// The clamped pair `u = ∂ₙu = 0`.
    pub fn clamped() -> Self {
        Self { m1: 0, m2: 1 }
    }

    pub fn m1(&self) -> u8 {
        self.m1
    }

    pub fn m2(&self) -> u8 {
        self.m2
    }

    pub fn orders(&self) -> [u8; 2] {
        [self.m1, self.m2]
    }

    pub fn swapped(&self) -> Self {
        Self {
            m1: self.m2,
            m2: self.m1,
        }
    }
}

impl TryFrom<[u8; 2]> for BoundaryPair {
    type Error = Error;

    fn try_from(v: [u8; 2]) -> Result<Self> {
        Self::new(v[0], v[1])
    }
}

impl From<BoundaryPair> for [u8; 2] {
    fn from(b: BoundaryPair) -> Self {
        [b.m1, b.m2]
    }
}

/// A point `(q(x), |ξ|², λ)` of the symbol's domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymbolPoint {
    pub q: f64,
    pub xi_sq: f64,
    pub lambda: C64,
}

impl SymbolPoint {
    pub fn new(q: f64, xi_sq: f64, lambda: C64) -> Result<Self> {
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::InvalidInput(format!("q must be positive, got {q}")));
        }
        if !(xi_sq >= 0.0) || !xi_sq.is_finite() {
            return Err(Error::InvalidInput(format!("|ξ|² must be nonnegative, got {xi_sq}")));
        }
        Ok(Self { q, xi_sq, lambda })
    }
}

pub fn principal_symbol(kind: PencilKind, pt: &SymbolPoint) -> C64 {
    let (q, x, l) = (pt.q, pt.xi_sq, pt.lambda);
    match kind {
        PencilKind::Helmholtz => q * x * x + l * ((1.0 + 2.0 * q) * x) + l * l * (1.0 + q),
        PencilKind::Schrodinger => {
            let s = l + x;
            s * s * q
        }
    }
}

/// The two `λ`-roots of the principal symbol at fixed `(q, |ξ|²)`.
///
/// `T_H0` is quadratic in `λ` with leading coefficient `1 + q`, so its roots
/// are `−|ξ|²` and `−|ξ|²/(1 + 1/q)`, matching the factorization
/// `(Δ − λ(1 + 1/q)) q (Δ − λ)`.
pub fn condition1_roots(kind: PencilKind, q: f64, xi_sq: f64) -> (C64, C64) {
    match kind {
        PencilKind::Helmholtz => (
            C64::new(-xi_sq, 0.0),
            C64::new(-xi_sq * q / (1.0 + q), 0.0),
        ),
        PencilKind::Schrodinger => (C64::new(-xi_sq, 0.0), C64::new(-xi_sq, 0.0)),
    }
}

/// Closed angular sector `min_arg ≤ arg λ ≤ max_arg` with vertex at the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    pub min_arg: f64,
    pub max_arg: f64,
}

impl Cone {
    pub fn new(min_arg: f64, max_arg: f64) -> Result<Self> {
        if !(min_arg <= max_arg) || min_arg < -PI || max_arg > PI {
            return Err(Error::InvalidInput(format!(
                "cone [{min_arg}, {max_arg}] must satisfy -π ≤ min ≤ max ≤ π"
            )));
        }
        Ok(Self { min_arg, max_arg })
    }

    /// `|arg λ| ≤ half_angle`.
    pub fn symmetric(half_angle: f64) -> Result<Self> {
        Self::new(-half_angle, half_angle)
    }

    /// True when the closed sector meets the negative real axis.
    pub fn touches_negative_axis(&self) -> bool {
        self.min_arg <= -PI + 1e-15 || self.max_arg >= PI - 1e-15
    }

    fn at(&self, u: f64) -> f64 {
        self.min_arg + u * (self.max_arg - self.min_arg)
    }
}

/// Parameters of a sampled ellipticity sweep over the normalized set
/// `|ξ|² + |λ| = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub q_min: f64,
    pub q_max: f64,
    pub cone: Cone,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
}

impl SweepOptions {
    pub fn new(q_min: f64, q_max: f64, cone: Cone, samples: usize) -> Self {
        Self {
            q_min,
            q_max,
            cone,
            samples,
            seed: 0,
            tol: 1e-8,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.q_min > 0.0) || !(self.q_max >= self.q_min) || !self.q_max.is_finite() {
            return Err(Error::InvalidInput(format!(
                "q range [{}, {}] must be positive and ordered",
                self.q_min, self.q_max
            )));
        }
        if self.samples == 0 {
            return Err(Error::InvalidInput("at least one sample is required".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidInput("tolerance must be positive".into()));
        }
        Ok(())
    }

    fn q_at(&self, u: f64) -> f64 {
        self.q_min + u * (self.q_max - self.q_min)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub q: f64,
    pub xi_sq: f64,
    pub lambda_re: f64,
    pub lambda_im: f64,
}

impl From<SymbolPoint> for Witness {
    fn from(p: SymbolPoint) -> Self {
        Self {
            q: p.q,
            xi_sq: p.xi_sq,
            lambda_re: p.lambda.re,
            lambda_im: p.lambda.im,
        }
    }
}

/// Minimum sampled modulus and where it is attained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticityReport {
    pub min_modulus: f64,
    pub witness: Witness,
    pub passed: bool,
}

fn normalized_point(q: f64, s: f64, theta: f64) -> SymbolPoint {
    let s = s.clamp(0.0, 1.0);
    SymbolPoint {
        q,
        xi_sq: s,
        lambda: C64::from_polar(1.0 - s, theta),
    }
}

fn reduce_min(cands: impl IntoIterator<Item = (f64, SymbolPoint)>) -> Option<(f64, SymbolPoint)> {
    cands.into_iter().fold(None, |best, c| match best {
        Some(b) if b.0 <= c.0 => Some(b),
        _ => Some(c),
    })
}

/// Golden-section minimization of `f` on `[lo, hi]` after a coarse scan.
fn minimize_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let n = 64;
    let h = (hi - lo) / n as f64;
    let (mut bi, mut bv) = (0, f64::INFINITY);
    for i in 0..=n {
        let v = f(lo + i as f64 * h);
        if v < bv {
            bv = v;
            bi = i;
        }
    }
    let mut a = (lo + (bi as f64 - 1.0) * h).max(lo);
    let mut b = (lo + (bi as f64 + 1.0) * h).min(hi);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    if fx < bv {
        (x, fx)
    } else {
        (lo + bi as f64 * h, bv)
    }
}

/// Samples `|T₀|` over `q ∈ [q_min, q_max]`, `λ` in the cone, on the
/// normalized set `|ξ|² + |λ| = 1`.
///
/// Interior points come from a low-discrepancy sequence. Because the
/// `λ`-roots of the symbol are nonpositive reals, `|T₀|` decreases as `arg λ`
/// moves towards `±π`, so the minimum over the cone sits on an edge ray; those
/// edges are additionally minimized in `|ξ|²` for a ladder of `q` values.
pub fn check_condition1(kind: PencilKind, opts: &SweepOptions) -> Result<EllipticityReport> {
    opts.validate()?;
    let seq = Kronecker::new(3, opts.seed);
    let interior = (0..opts.samples)
        .into_par_iter()
        .map(|i| {
            let u = seq.point(i);
            let pt = normalized_point(opts.q_at(u[0]), u[1], opts.cone.at(u[2]));
            (principal_symbol(kind, &pt).norm(), pt)
        })
        .collect::<Vec<_>>();
    let q_ladder = 17;
    let edges = (0..q_ladder)
        .into_par_iter()
        .flat_map_iter(|k| {
            let q = opts.q_at(k as f64 / (q_ladder - 1) as f64);
            [opts.cone.min_arg, opts.cone.max_arg].map(move |theta| {
                let (s, v) = minimize_1d(
                    |s| principal_symbol(kind, &normalized_point(q, s, theta)).norm(),
                    0.0,
                    1.0,
                );
                (v, normalized_point(q, s, theta))
            })
        })
        .collect::<Vec<_>>();
    let (min_modulus, pt) = reduce_min(interior.into_iter().chain(edges)).expect("nonempty");
    Ok(EllipticityReport {
        min_modulus,
        witness: pt.into(),
        passed: min_modulus > opts.tol,
    })
}

/// The four roots of the boundary ODE's characteristic polynomial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharacteristicRoots {
    pub r1: C64,
    pub r2: C64,
    pub r3: C64,
    pub r4: C64,
}

/// `r₁² = r₂² = λ + |ξ′|²`, and `r₃² = r₄² = λ(1 + 1/q) + |ξ′|²` for Helmholtz
/// (`r₃ = r₁` for Schrödinger), with `Re r₁, Re r₃ > 0 > Re r₂, Re r₄`.
pub fn characteristic_roots(
    kind: PencilKind,
    q: f64,
    xi_prime_sq: f64,
    lambda: C64,
) -> Result<CharacteristicRoots> {
    SymbolPoint::new(q, xi_prime_sq, lambda)?;
    let r1 = (lambda + xi_prime_sq).sqrt();
    let r3 = match kind {
        PencilKind::Helmholtz => (lambda * (1.0 + 1.0 / q) + xi_prime_sq).sqrt(),
        PencilKind::Schrodinger => r1,
    };
    for r in [r1, r3] {
        if r.re.abs() < ROOT_TOL {
            return Err(Error::Degenerate(format!(
                "characteristic root {r} lies on the imaginary axis (λ = {lambda}, |ξ′|² = {xi_prime_sq})"
            )));
        }
    }
    Ok(CharacteristicRoots {
        r1,
        r2: -r1,
        r3,
        r4: -r3,
    })
}

/// Value of a Lopatinsky determinant plus the Condition II failure flag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lopatinsky {
    pub det: C64,
    /// `det` divided by its homogeneity scale `(|ξ′|² + |λ|)^{d/2}`.
    pub normalized: f64,
    pub near_zero: bool,
}

/// Row `(∂ᵐ e^{rt}, ∂ᵐ (t e^{rt}))` at `t = 0`.
fn confluent_row(r: C64, m: u8) -> [C64; 2] {
    let first = r.powu(m as u32);
    let second = if m == 0 {
        C64::new(0.0, 0.0)
    } else {
        r.powu(m as u32 - 1) * m as f64
    };
    [first, second]
}

/// Lopatinsky determinant of the pair `(∂^{m₁}, ∂^{m₂})` on the decaying
/// solutions.
///
/// Helmholtz with `λ ≠ 0` has two distinct decaying roots `r₂, r₄` and the
/// determinant is `r₂^{m₁}r₄^{m₂} − r₂^{m₂}r₄^{m₁}`. Schrödinger (double root)
/// and Helmholtz at `λ = 0` (where `r₂ = r₄ = −|ξ′|`) use the decaying basis
/// `e^{r₂t}, t e^{r₂t}`.
pub fn lopatinsky_determinant(
    kind: PencilKind,
    bc: BoundaryPair,
    q: f64,
    xi_prime_sq: f64,
    lambda: C64,
) -> Result<Lopatinsky> {
    if xi_prime_sq == 0.0 && lambda.norm() == 0.0 {
        return Err(Error::InvalidInput("|ξ′| + |λ| must be nonzero".into()));
    }
    let roots = characteristic_roots(kind, q, xi_prime_sq, lambda)?;
    let (m1, m2) = (bc.m1, bc.m2);
    let confluent = kind == PencilKind::Schrodinger || lambda.norm() == 0.0;
    let (det, degree) = if confluent {
        let a = confluent_row(roots.r2, m1);
        let b = confluent_row(roots.r2, m2);
        (a[0] * b[1] - a[1] * b[0], m1 as i32 + m2 as i32 - 1)
    } else {
        let (r2, r4) = (roots.r2, roots.r4);
        (
            r2.powu(m1 as u32) * r4.powu(m2 as u32) - r2.powu(m2 as u32) * r4.powu(m1 as u32),
            m1 as i32 + m2 as i32,
        )
    };
    let scale = (xi_prime_sq + lambda.norm()).powf(degree as f64 / 2.0);
    let normalized = det.norm() / scale;
    Ok(Lopatinsky {
        det,
        normalized,
        near_zero: normalized < ROOT_TOL,
    })
}

/// Samples the normalized Lopatinsky determinant over the normalized set.
/// Points where a root degenerates onto the imaginary axis count as zero.
pub fn check_condition2(
    kind: PencilKind,
    bc: BoundaryPair,
    opts: &SweepOptions,
) -> Result<EllipticityReport> {
    opts.validate()?;
    let seq = Kronecker::new(3, opts.seed);
    let vals = (0..opts.samples)
        .into_par_iter()
        .map(|i| {
            let u = seq.point(i);
            let pt = normalized_point(opts.q_at(u[0]), u[1], opts.cone.at(u[2]));
            let v = match lopatinsky_determinant(kind, bc, pt.q, pt.xi_sq, pt.lambda) {
                Ok(l) => l.normalized,
                Err(_) => 0.0,
            };
            (v, pt)
        })
        .collect::<Vec<_>>();
    let (min_modulus, pt) = reduce_min(vals).expect("nonempty");
    Ok(EllipticityReport {
        min_modulus,
        witness: pt.into(),
        passed: min_modulus > opts.tol,
    })
}

/// Evaluates the normalized Lopatinsky determinant at explicit points and
/// reports the minimum; used for single-point reductions of the sweep.
pub fn condition2_at(
    kind: PencilKind,
    bc: BoundaryPair,
    points: &[SymbolPoint],
    tol: f64,
) -> Result<EllipticityReport> {
    let mut best: Option<(f64, SymbolPoint)> = None;
    for pt in points {
        let v = lopatinsky_determinant(kind, bc, pt.q, pt.xi_sq, pt.lambda)?.normalized;
        best = reduce_min(best.into_iter().chain([(v, *pt)]));
    }
    let (min_modulus, pt) =
        best.ok_or_else(|| Error::InvalidInput("no sample points given".into()))?;
    Ok(EllipticityReport {
        min_modulus,
        witness: pt.into(),
        passed: min_modulus > tol,
    })
}
