use serde::{Deserialize, Serialize};

use super::chains::{make_chain, KeldyshChain};
use super::companion::{block_inverse_from, invertibility_scan};
use crate::linalg::{self, CMat, CVec};
use crate::pencil::QuadraticPencil;
use crate::{Error, Result, C64};

/// Largest companion dimension `2N` handled by default.
pub const DEFAULT_CAP: usize = 1600;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct EigenOptions {
    /// Reference point `λ′`; defaults to the result of the invertibility scan.
    pub lambda_prime: Option<C64>,
    /// Eigenvalues within `cluster_tol·(1 + |λ|)` are treated as one.
    pub cluster_tol: f64,
    /// Looser radius within which clusters are merged when the merged group
    /// still yields chains below `residual_tol`. Rounding splits a defective
    /// eigenvalue of index `k` by roughly `ε^{1/k}`, far beyond `cluster_tol`.
    pub merge_tol: f64,
    /// Largest backward error of a merged cluster; far below `residual_tol`
    /// so that close but distinct eigenvalues stay apart.
    pub merge_residual_tol: f64,
    /// Relative singular-value threshold for the Jordan staircase.
    pub chain_tol: f64,
    /// Largest trusted backward error.
    pub residual_tol: f64,
    /// Newton polishing of simple eigenpairs.
    pub refine: bool,
    pub cap: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            lambda_prime: None,
            cluster_tol: 1e-6,
            merge_tol: 1e-3,
            merge_residual_tol: 1e-12,
            chain_tol: 1e-5,
            residual_tol: 1e-7,
            refine: false,
            cap: DEFAULT_CAP,
        }
    }
}

/// One (possibly multiple) eigenvalue with its Keldysh chains.
#[derive(Clone, Debug)]
pub struct Eigenvalue {
    pub lambda: C64,
    /// Algebraic multiplicity.
    pub multiplicity: usize,
    pub chains: Vec<KeldyshChain>,
    /// Largest chain-equation backward error.
    pub residual: f64,
    pub trusted: bool,
}

impl Eigenvalue {
    pub fn chain_length(&self) -> usize {
        self.chains.iter().map(|c| c.len()).max().unwrap_or(0)
    }

    pub fn eigenvector(&self) -> &CVec {
        &self.chains[0].vectors[0]
    }
}

#[derive(Clone, Debug)]
pub struct EigenSolution {
    pub lambda_prime: C64,
    pub shift: C64,
    /// Sorted by distance to `λ′`.
    pub eigenvalues: Vec<Eigenvalue>,
}

impl EigenSolution {
    /// Eigenvalues repeated according to algebraic multiplicity.
    pub fn values(&self) -> Vec<C64> {
        self.eigenvalues
            .iter()
            .flat_map(|e| std::iter::repeat(e.lambda).take(e.multiplicity))
            .collect()
    }

    pub fn trust_mask(&self) -> Vec<bool> {
        self.eigenvalues.iter().map(|e| e.trusted).collect()
    }

    pub fn trusted(&self) -> impl Iterator<Item = &Eigenvalue> {
        self.eigenvalues.iter().filter(|e| e.trusted)
    }

    /// Leading eigenvector of each eigenvalue, as columns.
    pub fn right_vectors(&self) -> CMat {
        let cols: Vec<CVec> = self.eigenvalues.iter().map(|e| e.eigenvector().clone()).collect();
        if cols.is_empty() {
            CMat::zeros(0, 0)
        } else {
            CMat::from_columns(&cols)
        }
    }

    /// Keeps trust only for eigenvalues reproduced by `other` (typically the
    /// same problem on a finer grid) within `rel_tol·max(|λ|, 1)`.
    pub fn cross_check(&mut self, other: &EigenSolution, rel_tol: f64) {
        for e in &mut self.eigenvalues {
            let tol = rel_tol * e.lambda.norm().max(1.0);
            let hit = other
                .eigenvalues
                .iter()
                .any(|o| (o.lambda - e.lambda).norm() <= tol);
            e.trusted &= hit;
        }
    }
}

fn distance_key(z: C64, lp: C64) -> (f64, f64, f64) {
    ((z - lp).norm(), z.re, z.im)
}

/// All eigenvalues of the pencil with Keldysh chains and residual-based
/// trust flags.
///
/// Works on `M = (𝒜 − σ)⁻¹` for a positive real shift `σ`, so the large
/// stiffness block never enters the eigenvalue iteration; eigenvalues follow
/// from `λ = σ + 1/μ`.
pub fn solve(p: &QuadraticPencil, opts: &EigenOptions) -> Result<EigenSolution> {
    let n = p.dim();
    if 2 * n > opts.cap {
        return Err(Error::SizeCap {
            size: 2 * n,
            cap: opts.cap,
        });
    }
    let shift = invertibility_scan(p)?;
    let lambda_prime = opts.lambda_prime.unwrap_or(shift);
    let t_inv = p.inverse_at(shift)?;
    let m = block_inverse_from(p, shift, &t_inv);
    let (q, t) = linalg::schur(&m)?;
    let back = linalg::frobenius(&(&q * &t * q.adjoint() - &m));
    if back > 1e-10 * linalg::frobenius(&m) {
        return Err(Error::NoConvergence);
    }
    let mscale = t.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let lambdas: Vec<C64> = (0..2 * n)
        .map(|i| {
            let mu = t[(i, i)];
            if mu.norm() <= f64::EPSILON * mscale {
                C64::new(f64::INFINITY, 0.0)
            } else {
                shift + mu.inv()
            }
        })
        .collect();

    let yvec = linalg::triangular_eigenvectors(&t);
    let tight = cluster(&lambdas, opts.cluster_tol);
    let mut out: Vec<Eigenvalue> = Vec::with_capacity(tight.len());
    for wide in cluster(&lambdas, opts.merge_tol) {
        let parts: Vec<&Vec<usize>> = tight.iter().filter(|g| wide.contains(&g[0])).collect();
        if parts.len() > 1 {
            let merged = group_eigenvalue(p, &q, &t, &yvec, &lambdas, &wide, shift, opts);
            if let Ok(Some(e)) = merged {
                if e.residual <= opts.merge_residual_tol && e.chains.iter().map(|c| c.len()).sum::<usize>() == wide.len() {
                    out.push(e);
                    continue;
                }
            }
        }
        for g in parts {
            out.extend(group_eigenvalue(p, &q, &t, &yvec, &lambdas, g, shift, opts)?);
        }
    }
    out.sort_by(|a, b| {
        distance_key(a.lambda, lambda_prime)
            .partial_cmp(&distance_key(b.lambda, lambda_prime))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(EigenSolution {
        lambda_prime,
        shift,
        eigenvalues: out,
    })
}

/// Eigenvalue and chains of one cluster of Schur indices; `None` for the
/// cluster at infinity.
#[allow(clippy::too_many_arguments)]
fn group_eigenvalue(
    p: &QuadraticPencil,
    q: &CMat,
    t: &CMat,
    yvec: &CMat,
    lambdas: &[C64],
    g: &[usize],
    shift: C64,
    opts: &EigenOptions,
) -> Result<Option<Eigenvalue>> {
    let n = p.dim();
    let lambda0 = g.iter().map(|&i| lambdas[i]).sum::<C64>() / g.len() as f64;
    if !lambda0.re.is_finite() {
        return Ok(None);
    }
    let chains = if g.len() == 1 {
        let x = q * yvec.column(g[0]);
        let u = normalize(x.rows(0, n).into_owned(), &p.weights);
        let (l, u) = if opts.refine {
            newton_refine(p, lambda0, u)
        } else {
            (lambda0, u)
        };
        vec![make_chain(p, l, vec![u])]
    } else {
        cluster_chains(p, q, t, g, shift, lambda0, opts.chain_tol)?
    };
    let Some(first) = chains.first() else {
        return Err(Error::Degenerate(format!("no Jordan chain found near {lambda0}")));
    };
    let lambda = first.lambda0;
    let residual = chains.iter().map(|c| c.max_residual()).fold(0.0, f64::max);
    Ok(Some(Eigenvalue {
        lambda,
        multiplicity: g.len(),
        chains,
        residual,
        trusted: residual <= opts.residual_tol,
    }))
}

/// Groups indices whose eigenvalues lie within `tol·(1 + |λ|)` of each other,
/// closing transitively.
fn cluster(lambdas: &[C64], tol: f64) -> Vec<Vec<usize>> {
    let n = lambdas.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut k = i;
        while p[k] != r {
            let nx = p[k];
            p[k] = r;
            k = nx;
        }
        r
    }
    let mut order: Vec<usize> = (0..n).filter(|&i| lambdas[i].re.is_finite()).collect();
    order.sort_by(|&a, &b| lambdas[a].re.total_cmp(&lambdas[b].re));
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            let li = lambdas[i];
            let lj = lambdas[j];
            let t = tol * (1.0 + li.norm().max(lj.norm()));
            if lj.re - li.re > t {
                break;
            }
            if (li - lj).norm() <= t {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

fn normalize(u: CVec, w: &nalgebra::DVector<f64>) -> CVec {
    let nrm = linalg::weighted_norm(&u, w);
    // fix the phase so the largest entry is real positive
    let k = (0..u.len()).fold(0, |b, i| if u[i].norm() > u[b].norm() { i } else { b });
    let ph = if u[k].norm() > 0.0 { u[k].conj() / u[k].norm() } else { C64::new(1.0, 0.0) };
    u * (ph / nrm)
}

/// Jordan chains of a cluster from the restriction of `𝒜` to its invariant
/// subspace.
fn cluster_chains(
    p: &QuadraticPencil,
    q: &CMat,
    t: &CMat,
    members: &[usize],
    shift: C64,
    lambda0: C64,
    tol: f64,
) -> Result<Vec<KeldyshChain>> {
    let n = p.dim();
    let k = members.len();
    let mut q = q.clone();
    let mut t = t.clone();
    linalg::schur_reorder_front(&mut q, &mut t, members);
    let v = q.columns(0, k).into_owned();
    let rm = t.view((0, 0), (k, k)).into_owned();
    let ra = linalg::inverse(&rm, "cluster block")? + linalg::identity(k) * shift;
    let chains = linalg::jordan_chains(&ra, lambda0, tol);
    let mut out = Vec::with_capacity(chains.len());
    for ch in chains {
        let us: Vec<CVec> = ch.iter().map(|y| (&v * y).rows(0, n).into_owned()).collect();
        let scale = linalg::weighted_norm(&us[0], &p.weights);
        let us: Vec<CVec> = us.into_iter().map(|u| u / C64::new(scale, 0.0)).collect();
        out.push(make_chain(p, lambda0, us));
    }
    out.sort_by(|a, b| b.len().cmp(&a.len()));
    Ok(out)
}

/// Newton's method on `T(λ)u = 0`, `wᴴu = 1`, for a simple eigenpair.
/// Keeps the input when an iterate does not lower the backward error.
pub fn newton_refine(p: &QuadraticPencil, lambda: C64, u: CVec) -> (C64, CVec) {
    let n = p.dim();
    let w = u.clone();
    let wu = w.dotc(&u);
    if wu.norm() == 0.0 {
        return (lambda, u);
    }
    let mut best = (lambda, u.clone() / wu, p.backward_error(lambda, &u));
    let (mut l, mut x) = (best.0, best.1.clone());
    for _ in 0..4 {
        let mut j = CMat::zeros(n + 1, n + 1);
        j.view_mut((0, 0), (n, n)).copy_from(&p.eval(l));
        j.view_mut((0, n), (n, 1)).copy_from(&(p.derivative(l) * &x));
        for c in 0..n {
            j[(n, c)] = w[c].conj();
        }
        let mut rhs = CVec::zeros(n + 1);
        rhs.rows_mut(0, n).copy_from(&(-p.apply(l, &x).expect("dim")));
        rhs[n] = C64::new(1.0, 0.0) - w.dotc(&x);
        let Some(d) = j.lu().solve(&rhs) else { break };
        x += d.rows(0, n);
        l += d[n];
        let be = p.backward_error(l, &x);
        if !(be < best.2) {
            break;
        }
        best = (l, x.clone(), be);
    }
    (best.0, normalize(best.1, &p.weights))
}
