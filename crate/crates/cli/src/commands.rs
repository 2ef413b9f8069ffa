use std::f64::consts::PI;

use itep::io;
use itep::linalg::CVec;
use itep::oracle::{find_roots, CharacteristicFunction, Rect};
use itep::resolvent::{
    carleman_growth, circle_growth_scan, dyadic_bands, laurent_coefficients, log_radii, range_angle,
    ray_scan, select_radii, t_infinity_estimate, WeierstrassProduct,
};
use itep::spectra::{completeness_profile, counting_values, solve, with_schatten_bound, EigenSolution};
use itep::symbol::{check_condition1, check_condition2, Cone, SweepOptions};
use itep::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{complex, Built, Domain, GridPencil, PencilSpec, RunConfig};
use crate::output::Output;
use crate::CliError;

fn cfg_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn grid_pencil(cfg: &RunConfig) -> Option<&GridPencil> {
    match &cfg.pencil {
        Some(PencilSpec::Grid(g)) => Some(g),
        _ => None,
    }
}

/// Eigenvalues with the `(λ, multiplicity)` pairs of the trusted ones.
fn trusted_values(sol: &EigenSolution) -> Vec<(C64, usize)> {
    sol.trusted().map(|e| (e.lambda, e.multiplicity)).collect()
}

pub fn check_ellipticity(cfg: &mut RunConfig, seed: u64, out: &mut Output) -> Result<bool, CliError> {
    let mut ec = cfg.ellipticity.clone().unwrap_or_default();
    let g = grid_pencil(cfg);
    let kind = ec
        .kind
        .or(g.map(|g| g.kind))
        .ok_or_else(|| cfg_err("ellipticity needs `kind` (or a grid pencil)"))?;
    let bc = ec
        .bc
        .or(g.map(|g| g.bc))
        .ok_or_else(|| cfg_err("ellipticity needs `bc` (or a grid pencil)"))?;
    let q_range = match (ec.q_range, g) {
        (Some(r), _) => r,
        (None, Some(g)) => {
            let p = g.profile()?;
            [p.q_min, p.q_max]
        }
        (None, None) => return Err(cfg_err("ellipticity needs `q_range` (or a grid pencil)")),
    };
    let cone = Cone::new(ec.cone[0], ec.cone[1])?;
    let mut opts = SweepOptions::new(q_range[0], q_range[1], cone, ec.samples);
    opts.seed = seed;
    opts.tol = ec.tol;
    let c1 = check_condition1(kind, &opts)?;
    let c2 = check_condition2(kind, bc, &opts)?;
    (ec.kind, ec.bc, ec.q_range) = (Some(kind), Some(bc), Some(q_range));
    cfg.ellipticity = Some(ec);
    let passed = c1.passed && c2.passed;
    out.note("condition1_min_modulus", c1.min_modulus);
    out.note("condition2_min_modulus", c2.min_modulus);
    if !passed {
        let w = if c1.passed { c2.witness } else { c1.witness };
        out.note("witness", w);
    }
    out.json(
        "ellipticity.json",
        &json!({"condition1": c1, "condition2": c2, "passed": passed}),
    )?;
    Ok(passed)
}

fn solve_spectrum(cfg: &RunConfig, built: &Built) -> Result<EigenSolution, CliError> {
    Ok(solve(&built.pencil, &cfg.eigen)?)
}

pub fn spectrum(cfg: &mut RunConfig, out: &mut Output) -> Result<bool, CliError> {
    let sc = cfg.spectrum.clone().unwrap_or_default();
    cfg.spectrum = Some(sc.clone());
    let spec = cfg.pencil_spec()?;
    let built = spec.build()?;
    let g = grid_pencil(cfg);
    if (sc.refine || sc.verify_oracle) && g.is_none() {
        return Err(cfg_err("refine and verify_oracle need a grid pencil"));
    }
    let mut sol = solve_spectrum(cfg, &built)?;
    if sc.refine {
        let fine = g.expect("checked").assemble(sc.refine_extra)?;
        let sol2 = solve(&fine.pencil, &cfg.eigen)?;
        sol.cross_check(&sol2, sc.trust_tol);
    }
    out.csv("eigenvalues.csv", &io::eigenvalue_csv(&sol));
    let chains: Vec<_> = sol
        .eigenvalues
        .iter()
        .map(|e| {
            json!({
                "lambda": [e.lambda.re, e.lambda.im],
                "multiplicity": e.multiplicity,
                "chain_lengths": e.chains.iter().map(|c| c.len()).collect::<Vec<_>>(),
                "chain_residuals": e.chains.iter().map(|c| c.max_residual()).collect::<Vec<_>>(),
                "trusted": e.trusted,
            })
        })
        .collect();
    out.json(
        "chains.json",
        &json!({"lambda_prime": [sol.lambda_prime.re, sol.lambda_prime.im], "eigenvalues": chains}),
    )?;
    if sc.export_pencil {
        for (name, m) in [("a0.csv", &built.pencil.a0), ("a1.csv", &built.pencil.a1), ("a2.csv", &built.pencil.a2)] {
            out.csv(name, &io::matrix_csv(m));
        }
    }
    out.note("eigenvalues", sol.eigenvalues.len());
    out.note("trusted", sol.trusted().count());
    if !sc.verify_oracle {
        return Ok(true);
    }
    let g = g.expect("checked");
    let (cf, _) = oracle_function(g)?;
    let r = sc.oracle_radius;
    let rect = Rect::new(-r, r, -r, r)?;
    let roots = find_roots(&cf, &rect, 100_000)?;
    let winding: usize = roots.iter().map(|z| z.multiplicity).sum();
    let mut worst = 0.0_f64;
    let mut in_rect = 0;
    for e in sol.trusted() {
        if rect.contains(e.lambda) {
            in_rect += e.multiplicity;
        }
        if e.lambda.norm() <= r {
            let d = roots
                .iter()
                .map(|z| (z.lambda - e.lambda).norm())
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(d / e.lambda.norm().max(1.0));
        }
    }
    let passed = worst <= sc.oracle_tol && in_rect == winding;
    out.csv("oracle_roots.csv", &io::roots_csv(&roots));
    out.note("oracle_max_rel_error", worst);
    out.note("oracle_winding", winding);
    out.note("trusted_in_rect", in_rect);
    Ok(passed)
}

fn oracle_function(g: &GridPencil) -> Result<(CharacteristicFunction, f64), CliError> {
    let q = g
        .constant_q()
        .ok_or_else(|| cfg_err("the oracle needs a constant q"))?;
    let Domain::Interval(d) = g.domain else {
        return Err(cfg_err("the oracle needs an interval domain"));
    };
    Ok((CharacteristicFunction::new(g.kind, q, d.b - d.a, g.bc)?, d.b - d.a))
}

pub fn oracle(cfg: &mut RunConfig, out: &mut Output) -> Result<bool, CliError> {
    let oc = cfg.oracle.clone().unwrap_or_default();
    cfg.oracle = Some(oc.clone());
    let g = grid_pencil(cfg).ok_or_else(|| cfg_err("the oracle needs a grid pencil"))?;
    let (cf, _) = oracle_function(g)?;
    let [a, b, c, d] = oc.rect;
    let roots = find_roots(&cf, &Rect::new(a, b, c, d)?, oc.max_roots)?;
    out.csv("roots.csv", &io::roots_csv(&roots));
    out.note("roots", roots.iter().map(|z| z.multiplicity).sum::<usize>());
    Ok(true)
}

pub fn resolvent_scan(cfg: &mut RunConfig, out: &mut Output) -> Result<bool, CliError> {
    let rc = cfg.resolvent.clone().unwrap_or_default();
    cfg.resolvent = Some(rc.clone());
    let built = cfg.pencil_spec()?.build()?;
    let radii = log_radii(rc.r_min, rc.r_max, rc.n_radii);
    let mut passed = true;
    let mut rays = Vec::new();
    for (k, &theta) in rc.directions.iter().enumerate() {
        let scan = ray_scan(&built.pencil, C64::from_polar(1.0, theta), &radii)?;
        let ok = (scan.fitted_slope - rc.expected_slope).abs() <= rc.slope_tol;
        passed &= ok;
        out.csv(&format!("ray_{k}.csv"), &io::ray_csv(&scan));
        rays.push(json!({"angle": theta, "fitted_slope": scan.fitted_slope, "within_tolerance": ok}));
    }
    out.note("ray_slopes", rays.iter().map(|r| r["fitted_slope"].clone()).collect::<Vec<_>>());
    out.json("rays.json", &rays)?;
    let Some(cc) = rc.circle else {
        return Ok(passed);
    };
    let sol = solve_spectrum(cfg, &built)?;
    let trusted = trusted_values(&sol);
    let poles: Vec<C64> = sol.eigenvalues.iter().map(|e| e.lambda).collect();
    let p_exp = cc.p.unwrap_or(built.space_dim as f64 / 2.0 + cc.eps);
    let bands = dyadic_bands(cc.r0, cc.r1);
    let radii = select_radii(&bands, &poles, cc.candidates, cc.min_gap)?;
    let circle = circle_growth_scan(&built.pencil, &radii, &poles, cc.n_theta, p_exp, cc.eps)?;
    passed &= circle.within_bound;
    out.csv("circle.csv", &io::circle_csv(&circle));
    out.note("circle_growth_exponent", circle.growth_exponent);

    // Carleman quantity on circles around λ′, avoiding the shifted poles
    let lp = sol.lambda_prime;
    let shifted: Vec<C64> = poles.iter().map(|z| z - lp).collect();
    let c_radii = select_radii(&bands, &shifted, cc.candidates, cc.min_gap)?;
    let wp = WeierstrassProduct::new(lp, trusted.clone(), p_exp)?;
    let growth = carleman_growth(&built.pencil, &wp, &c_radii, cc.n_theta)?;
    passed &= growth.exponent <= p_exp + cc.eps;
    let mut t = io::Csv::new(&["radius", "max_value"]);
    for (r, m) in growth.radii.iter().zip(&growth.max_values) {
        t.push(vec![io::sci(*r), io::sci(*m)]);
    }
    out.csv("carleman.csv", &t);
    out.note("carleman_growth_exponent", growth.exponent);

    let all: Vec<(C64, usize)> = sol.eigenvalues.iter().map(|e| (e.lambda, e.multiplicity)).collect();
    let mut t = io::Csv::new(&["radius", "log_term", "pole_term", "value", "masked"]);
    for &r in &radii {
        let ti = t_infinity_estimate(&built.pencil, r, cc.n_theta, &all)?;
        t.push(vec![
            io::sci(r),
            io::sci(ti.log_term),
            io::sci(ti.pole_term),
            io::sci(ti.value),
            ti.masked.to_string(),
        ]);
    }
    out.csv("t_infinity.csv", &t);
    Ok(passed)
}

pub fn counting(cfg: &mut RunConfig, out: &mut Output) -> Result<bool, CliError> {
    let mut cc = cfg.counting.clone().unwrap_or_default();
    let (values, lp, pencil, space_dim) = match &cc.eigenvalues {
        Some(list) => {
            let vals: Vec<(C64, usize)> = list
                .iter()
                .map(|v| {
                    if v[2] < 1.0 || v[2].fract() != 0.0 {
                        Err(cfg_err(format!("multiplicity {} must be a positive integer", v[2])))
                    } else {
                        Ok((C64::new(v[0], v[1]), v[2] as usize))
                    }
                })
                .collect::<Result<_, _>>()?;
            (vals, cc.lambda_prime.map(complex).unwrap_or_default(), None, 1)
        }
        None => {
            let built = cfg.pencil_spec()?.build()?;
            let mut opts = cfg.eigen.clone();
            if let Some(l) = cc.lambda_prime {
                opts.lambda_prime = Some(complex(l));
            }
            let sol = solve(&built.pencil, &opts)?;
            (trusted_values(&sol), sol.lambda_prime, Some(built.pencil), built.space_dim)
        }
    };
    let p = cc.p.unwrap_or(space_dim as f64 / 2.0 + 0.5);
    let mut rep = counting_values(&values, lp, p, &cc.t_values)?;
    if cc.schatten {
        let pencil = pencil.ok_or_else(|| cfg_err("the Schatten bound needs a pencil"))?;
        rep = with_schatten_bound(rep, &pencil)?;
    }
    (cc.p, cc.lambda_prime) = (Some(p), Some([lp.re, lp.im]));
    cfg.counting = Some(cc);
    let passed = rep.discrete_certifies() && rep.schatten_certifies().unwrap_or(true);
    out.csv("counting.csv", &io::counting_csv(&rep));
    out.note("counts", &rep.counts);
    Ok(passed)
}

/// Random smooth function sampled at the grid nodes (x-major in 2D): a
/// cosine series with coefficients decaying like `1/(1 + k)²`.
fn smooth_sample(g: &itep::DiscretePencil, modes: usize, rng: &mut ChaCha8Rng) -> CVec {
    let mut coef = |n: usize| -> Vec<C64> {
        (0..n)
            .map(|k| {
                let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                z / ((1 + k) * (1 + k)) as f64
            })
            .collect()
    };
    let series = |c: &[C64], grid: &itep::Grid1D, x: f64| -> C64 {
        let t = (x - grid.a) / (grid.b - grid.a);
        c.iter()
            .enumerate()
            .map(|(k, ck)| ck * (k as f64 * PI * t).cos())
            .sum()
    };
    match g.grids.as_slice() {
        [gx] => {
            let c = coef(modes);
            CVec::from_iterator(gx.len(), gx.nodes.iter().map(|&x| series(&c, gx, x)))
        }
        [gx, gy] => {
            let (cx, cy) = (coef(modes), coef(modes));
            let mut v = Vec::with_capacity(gx.len() * gy.len());
            for &x in &gx.nodes {
                let fx = series(&cx, gx, x);
                for &y in &gy.nodes {
                    v.push(fx * series(&cy, gy, y));
                }
            }
            CVec::from_vec(v)
        }
        _ => unreachable!("grids are 1D or 2D"),
    }
}

pub fn completeness(cfg: &mut RunConfig, seed: u64, out: &mut Output) -> Result<bool, CliError> {
    let cc = cfg.completeness.clone().unwrap_or_default();
    cfg.completeness = Some(cc.clone());
    let built = cfg.pencil_spec()?.build()?;
    let sol = solve_spectrum(cfg, &built)?;
    let m = sol.trusted().count();
    if m == 0 {
        return Err(CliError::Numeric(itep::Error::Degenerate("no trusted eigenvalues".into())));
    }
    let w = &built.pencil.weights;
    let mut table = io::Csv::new(&["sample", "m", "residual"]);
    let mut finals = Vec::with_capacity(cc.samples);
    let mut passed = true;
    for i in 0..cc.samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        let f = match &built.discrete {
            Some(dp) => dp.restrict(&smooth_sample(dp, cc.modes, &mut rng))?,
            None => CVec::from_fn(built.pencil.dim(), |_, _| {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            }),
        };
        let rep = completeness_profile(&sol, w, &f, m)?;
        for (k, r) in rep.residuals.iter().enumerate() {
            table.push(vec![i.to_string(), (k + 1).to_string(), io::sci(*r)]);
        }
        let last = rep.residuals[m - 1];
        passed &= last < cc.tol && rep.residuals.windows(2).all(|w| w[1] <= w[0]);
        finals.push(last);
    }
    // every chain vector lies in the span of all chains
    let mut own = 0.0_f64;
    for e in sol.trusted() {
        for ch in &e.chains {
            for v in &ch.vectors {
                own = own.max(completeness_profile(&sol, w, v, m)?.residuals[m - 1]);
            }
        }
    }
    passed &= own <= 1e-8;
    out.csv("completeness.csv", &table);
    out.note("trusted", m);
    out.note("final_residuals", &finals);
    out.note("chain_vector_residual", own);
    Ok(passed)
}

pub fn laurent(cfg: &mut RunConfig, out: &mut Output) -> Result<bool, CliError> {
    let mut lc = cfg.laurent.clone().unwrap_or_default();
    let built = cfg.pencil_spec()?.build()?;
    let sol = solve_spectrum(cfg, &built)?;
    let lambda0 = match lc.lambda0 {
        Some(l) => complex(l),
        None => {
            let mut t: Vec<C64> = sol.trusted().map(|e| e.lambda).collect();
            t.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.im.total_cmp(&b.im)));
            *t.get(lc.index).ok_or_else(|| {
                cfg_err(format!("index {} exceeds the {} trusted eigenvalues", lc.index, t.len()))
            })?
        }
    };
    let near = |z: C64| (z - lambda0).norm() <= 1e-6 * lambda0.norm().max(1.0);
    let poles: Vec<C64> = sol.eigenvalues.iter().map(|e| e.lambda).collect();
    let radius = match lc.radius {
        Some(r) => r,
        None => {
            0.5 * poles
                .iter()
                .filter(|z| !near(**z))
                .map(|z| (z - lambda0).norm())
                .fold(f64::INFINITY, f64::min)
                .min(lambda0.norm().max(1.0))
        }
    };
    let data = laurent_coefficients(
        &built.pencil,
        lambda0,
        radius,
        lc.n_coeffs,
        lc.n_quad,
        lc.max_order,
        Some(&poles),
    )?;
    let chain_vectors: Vec<CVec> = sol
        .eigenvalues
        .iter()
        .filter(|e| near(e.lambda))
        .flat_map(|e| e.chains.iter().flat_map(|c| c.vectors.iter().cloned()))
        .collect();
    let angles: Vec<f64> = (1..=data.order as i32)
        .map(|n| range_angle(data.coefficient(-n).expect("computed"), &chain_vectors, &built.pencil.weights))
        .collect();
    let passed = data.relation_residuals.iter().all(|&r| r <= lc.relation_tol)
        && angles.iter().all(|&a| a <= lc.angle_tol)
        && data.order >= 1;
    for (n, c) in &data.coefficients {
        if *n >= -(data.order as i32) - 1 {
            out.csv(&format!("coef_{n}.csv"), &io::matrix_csv(c));
        }
    }
    out.json(
        "laurent.json",
        &json!({
            "lambda0": [lambda0.re, lambda0.im],
            "N": data.order,
            "radius": radius,
            "residuals": data.relation_residuals,
            "range_angles": angles,
            "quadrature_error": data.quadrature_error,
        }),
    )?;
    out.note("order", data.order);
    out.note("residuals", &data.relation_residuals);
    out.note("range_angles", &angles);
    (lc.lambda0, lc.radius) = (Some([lambda0.re, lambda0.im]), Some(radius));
    cfg.laurent = Some(lc);
    Ok(passed)
}
