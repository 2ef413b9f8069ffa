use std::f64::consts::PI;

use itep::linalg::CMat;
use itep::spectra::EigenOptions;
use itep::{
    assemble_pencil, assemble_pencil_2d, make_grid, BoundaryPair, Coefficient, DiscretePencil,
    MediumProfile, PencilKind, QuadraticPencil, C64,
};
use nalgebra::DVector;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize};

use crate::CliError;

/// Everything a run reads from `--config`. Sections a command does not use
/// are ignored; missing sections take their defaults.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pencil: Option<PencilSpec>,
    #[serde(default)]
    pub eigen: EigenOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ellipticity: Option<EllipticityCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolvent: Option<ResolventCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counting: Option<CountingCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completeness: Option<CompletenessCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleCfg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub laurent: Option<LaurentCfg>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum PencilSpec {
    Grid(GridPencil),
    Matrices(MatrixPencil),
}

// dispatch on the `a0` key so that schema errors name the offending field
impl<'de> Deserialize<'de> for PencilSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        if v.get("a0").is_some() {
            serde_json::from_value(v).map(PencilSpec::Matrices).map_err(D::Error::custom)
        } else {
            serde_json::from_value(v).map(PencilSpec::Grid).map_err(D::Error::custom)
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPencil {
    pub kind: PencilKind,
    pub q: Coefficient,
    /// Required unless `q` is constant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_bounds: Option<[f64; 2]>,
    pub domain: Domain,
    pub bc: BoundaryPair,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Domain {
    Interval(Interval),
    Rectangle(Rectangle),
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rectangle {
    pub ax: f64,
    pub bx: f64,
    pub nx: usize,
    pub ay: f64,
    pub by: f64,
    pub ny: usize,
}

/// Explicit matrices, row-major, entries `[re, im]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixPencil {
    pub a0: Vec<Vec<[f64; 2]>>,
    pub a1: Vec<Vec<[f64; 2]>>,
    pub a2: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EllipticityCfg {
    /// Defaults to the pencil's kind, `q` bounds and boundary pair.
    pub kind: Option<PencilKind>,
    pub q_range: Option<[f64; 2]>,
    pub bc: Option<BoundaryPair>,
    /// `[min_arg, max_arg]` in radians.
    pub cone: [f64; 2],
    pub samples: usize,
    pub tol: f64,
}

impl Default for EllipticityCfg {
    fn default() -> Self {
        Self {
            kind: None,
            q_range: None,
            bc: None,
            cone: [-0.75 * PI, 0.75 * PI],
            samples: 4096,
            tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumCfg {
    /// Solve again on a grid with `refine_extra` more points per direction
    /// and keep trust only for reproduced eigenvalues.
    pub refine: bool,
    pub refine_extra: usize,
    pub trust_tol: f64,
    /// Compare with the exact characteristic determinant (constant `q`,
    /// interval domains only).
    pub verify_oracle: bool,
    pub oracle_radius: f64,
    pub oracle_tol: f64,
    /// Also write `A0`, `A1`, `A2` as CSV.
    pub export_pencil: bool,
}

impl Default for SpectrumCfg {
    fn default() -> Self {
        Self {
            refine: false,
            refine_extra: 8,
            trust_tol: 1e-6,
            verify_oracle: false,
            oracle_radius: 200.0,
            oracle_tol: 1e-6,
            export_pencil: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResolventCfg {
    /// Ray angles in radians.
    pub directions: Vec<f64>,
    pub r_min: f64,
    pub r_max: f64,
    pub n_radii: usize,
    pub expected_slope: f64,
    pub slope_tol: f64,
    pub circle: Option<CircleCfg>,
}

impl Default for ResolventCfg {
    fn default() -> Self {
        Self {
            directions: vec![0.0, 0.25 * PI, 0.5 * PI, 0.75 * PI],
            r_min: 10.0,
            r_max: 1000.0,
            n_radii: 25,
            expected_slope: -2.0,
            slope_tol: 0.15,
            circle: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircleCfg {
    pub r0: f64,
    pub r1: f64,
    pub n_theta: usize,
    /// Defaults to `d/2 + eps` for a `d`-dimensional domain.
    pub p: Option<f64>,
    pub eps: f64,
    pub candidates: usize,
    pub min_gap: f64,
}

impl Default for CircleCfg {
    fn default() -> Self {
        Self {
            r0: 1.0,
            r1: 100.0,
            n_theta: 128,
            p: None,
            eps: 0.1,
            candidates: 64,
            min_gap: 1e-3,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CountingCfg {
    /// Defaults to the eigensolver's reference point, or 0 with `eigenvalues`.
    pub lambda_prime: Option<[f64; 2]>,
    /// Defaults to `d/2 + 0.5`.
    pub p: Option<f64>,
    pub t_values: Vec<f64>,
    /// `[re, im, multiplicity]`; replaces the pencil spectrum when given.
    pub eigenvalues: Option<Vec<[f64; 3]>>,
    pub schatten: bool,
}

impl Default for CountingCfg {
    fn default() -> Self {
        Self {
            lambda_prime: None,
            p: None,
            t_values: vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0],
            eigenvalues: None,
            schatten: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompletenessCfg {
    pub samples: usize,
    /// Number of cosine modes per direction in each random `f`.
    pub modes: usize,
    pub tol: f64,
}

impl Default for CompletenessCfg {
    fn default() -> Self {
        Self {
            samples: 20,
            modes: 6,
            tol: 0.1,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleCfg {
    /// `[re_min, re_max, im_min, im_max]`.
    pub rect: [f64; 4],
    pub max_roots: usize,
}

impl Default for OracleCfg {
    fn default() -> Self {
        Self {
            rect: [-200.0, 200.0, -200.0, 200.0],
            max_roots: 1000,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaurentCfg {
    /// Expansion point; defaults to the `index`-th smallest trusted eigenvalue.
    pub lambda0: Option<[f64; 2]>,
    pub index: usize,
    /// Defaults to half the distance to the nearest other eigenvalue.
    pub radius: Option<f64>,
    pub n_coeffs: usize,
    pub n_quad: usize,
    pub max_order: usize,
    pub relation_tol: f64,
    pub angle_tol: f64,
}

impl Default for LaurentCfg {
    fn default() -> Self {
        Self {
            lambda0: None,
            index: 0,
            radius: None,
            n_coeffs: 2,
            n_quad: itep::resolvent::DEFAULT_N_QUAD,
            max_order: 4,
            relation_tol: 1e-7,
            angle_tol: 1e-6,
        }
    }
}

pub fn complex(v: [f64; 2]) -> C64 {
    C64::new(v[0], v[1])
}

fn cfg_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(cfg_err(format!("{name} must be positive, got {v}")))
    }
}

impl RunConfig {
    /// Checks that do not need any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        let e = &self.eigen;
        for (n, v) in [
            ("eigen.cluster_tol", e.cluster_tol),
            ("eigen.merge_tol", e.merge_tol),
            ("eigen.merge_residual_tol", e.merge_residual_tol),
            ("eigen.chain_tol", e.chain_tol),
            ("eigen.residual_tol", e.residual_tol),
        ] {
            positive(n, v)?;
        }
        if let Some(PencilSpec::Grid(g)) = &self.pencil {
            if let Some([lo, hi]) = g.q_bounds {
                positive("q_bounds[0]", lo)?;
                if !(hi >= lo) {
                    return Err(cfg_err("q_bounds must be ordered"));
                }
            }
        }
        if let Some(s) = &self.ellipticity {
            positive("ellipticity.tol", s.tol)?;
        }
        if let Some(s) = &self.spectrum {
            positive("spectrum.trust_tol", s.trust_tol)?;
            positive("spectrum.oracle_tol", s.oracle_tol)?;
            positive("spectrum.oracle_radius", s.oracle_radius)?;
        }
        if let Some(s) = &self.resolvent {
            positive("resolvent.r_min", s.r_min)?;
            positive("resolvent.slope_tol", s.slope_tol)?;
            if !(s.r_max > s.r_min) {
                return Err(cfg_err("resolvent.r_max must exceed r_min"));
            }
            if let Some(c) = &s.circle {
                positive("circle.r0", c.r0)?;
                positive("circle.eps", c.eps)?;
                if !(c.r1 > c.r0) {
                    return Err(cfg_err("circle.r1 must exceed r0"));
                }
            }
        }
        if let Some(s) = &self.counting {
            if let Some(p) = s.p {
                positive("counting.p", p)?;
            }
        }
        if let Some(s) = &self.completeness {
            positive("completeness.tol", s.tol)?;
        }
        if let Some(s) = &self.laurent {
            positive("laurent.relation_tol", s.relation_tol)?;
            positive("laurent.angle_tol", s.angle_tol)?;
            if let Some(r) = s.radius {
                positive("laurent.radius", r)?;
            }
        }
        Ok(())
    }

    pub fn pencil_spec(&self) -> Result<&PencilSpec, CliError> {
        self.pencil
            .as_ref()
            .ok_or_else(|| cfg_err("this command needs a `pencil` section"))
    }
}

/// An assembled pencil together with its grid data when it has one.
pub struct Built {
    pub pencil: QuadraticPencil,
    pub discrete: Option<DiscretePencil>,
    /// Spatial dimension of the domain (`1` for explicit matrices).
    pub space_dim: usize,
}

impl GridPencil {
    pub fn profile(&self) -> Result<MediumProfile, CliError> {
        let (lo, hi) = match (&self.q, self.q_bounds) {
            (_, Some(b)) => (b[0], b[1]),
            (Coefficient::Constant(c), None) => (*c, *c),
            _ => return Err(cfg_err("non-constant q needs `q_bounds`")),
        };
        Ok(MediumProfile::new(self.kind, self.q.clone(), lo, hi)?)
    }

    pub fn constant_q(&self) -> Option<f64> {
        match self.q {
            Coefficient::Constant(c) => Some(c),
            _ => None,
        }
    }

    pub fn space_dim(&self) -> usize {
        match self.domain {
            Domain::Interval(_) => 1,
            Domain::Rectangle(_) => 2,
        }
    }

    /// Assembles with `extra` additional points per direction.
    pub fn assemble(&self, extra: usize) -> Result<DiscretePencil, CliError> {
        let prof = self.profile()?;
        Ok(match self.domain {
            Domain::Interval(d) => assemble_pencil(&prof, &make_grid(d.a, d.b, d.n + extra)?, self.bc)?,
            Domain::Rectangle(d) => assemble_pencil_2d(
                &prof,
                &make_grid(d.ax, d.bx, d.nx + extra)?,
                &make_grid(d.ay, d.by, d.ny + extra)?,
                self.bc,
            )?,
        })
    }
}

fn dense(rows: &[Vec<[f64; 2]>], name: &str) -> Result<CMat, CliError> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(cfg_err(format!("{name} must be a nonempty square matrix")));
    }
    Ok(CMat::from_fn(n, n, |i, j| complex(rows[i][j])))
}

impl PencilSpec {
    pub fn build(&self) -> Result<Built, CliError> {
        match self {
            PencilSpec::Grid(g) => {
                let dp = g.assemble(0)?;
                Ok(Built {
                    pencil: dp.pencil.clone(),
                    discrete: Some(dp),
                    space_dim: g.space_dim(),
                })
            }
            PencilSpec::Matrices(m) => {
                let (a0, a1, a2) = (dense(&m.a0, "a0")?, dense(&m.a1, "a1")?, dense(&m.a2, "a2")?);
                let pencil = match &m.weights {
                    Some(w) => QuadraticPencil::with_weights(a0, a1, a2, DVector::from_vec(w.clone()))?,
                    None => QuadraticPencil::new(a0, a1, a2)?,
                };
                Ok(Built {
                    pencil,
                    discrete: None,
                    space_dim: 1,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<RunConfig, serde_json::Error> {
        serde_json::from_str(s)
    }

    #[test]
    fn grid_pencil_schema() {
        let c = parse(
            r#"{"pencil": {"kind": "helmholtz", "q": {"type": "constant", "data": 1.0},
                "domain": {"a": 0, "b": 1, "n": 24}, "bc": [0, 1]}}"#,
        )
        .unwrap();
        c.validate().unwrap();
        let b = c.pencil_spec().unwrap().build().unwrap();
        assert_eq!(b.pencil.dim(), 20);
        assert_eq!(b.space_dim, 1);
    }

    #[test]
    fn rectangle_and_matrices() {
        let c = parse(
            r#"{"pencil": {"kind": "schrodinger", "q": {"type": "constant", "data": 2.0},
                "domain": {"ax": 0, "bx": 1, "nx": 10, "ay": 0, "by": 2, "ny": 11}, "bc": [0, 2]}}"#,
        )
        .unwrap();
        assert_eq!(c.pencil_spec().unwrap().build().unwrap().pencil.dim(), 6 * 7);
        let c = parse(r#"{"pencil": {"a0": [[[0, 0]]], "a1": [[[1, 0]]], "a2": [[[1, 0]]]}}"#).unwrap();
        assert_eq!(c.pencil_spec().unwrap().build().unwrap().pencil.dim(), 1);
    }

    #[test]
    fn schema_violations() {
        assert!(parse(r#"{"pencil": {"kind": "helmholtz", "q": {"type": "constant", "data": 1},
            "domain": {"a": 0, "b": 1, "n": 24}, "bc": [1, 1]}}"#)
        .is_err());
        assert!(parse(r#"{"bogus": 1}"#).is_err());
        assert!(parse(r#"{"counting": {"t": [1]}}"#).is_err());
        let c = parse(r#"{"eigen": {"residual_tol": -1}}"#).unwrap();
        assert!(matches!(c.validate(), Err(CliError::Config(_))));
        let c = parse(r#"{"pencil": {"kind": "helmholtz", "q": {"type": "polynomial", "data": [1, 0.5]},
            "domain": {"a": 0, "b": 1, "n": 24}, "bc": [0, 1]}}"#)
        .unwrap();
        assert!(matches!(c.pencil_spec().unwrap().build(), Err(CliError::Config(_))));
    }
}
