//! Numerical probes of the resolvent `T(λ)⁻¹`: decay on rays, the companion
//! block inverse and resolvent identities, the Weierstrass product and the
//! Carleman quantity, growth on circles and Laurent coefficients at poles.

pub mod growth;
pub mod laurent;
pub mod norms;
pub mod weierstrass;

pub use growth::{
    circle_growth_scan, circle_pole_distance, dyadic_bands, select_radii, t_infinity_estimate,
    CircleReport, CircleRow, TInfinity,
};
pub use laurent::{laurent_coefficients, range_angle, LaurentData, DEFAULT_N_QUAD};
pub use norms::{
    companion_block_inverse_check, log_radii, ray_scan, resolvent_identity_check,
    resolvent_norm, BlockInverseCheck, RayScan,
};
pub use weierstrass::{
    carleman_check, carleman_growth, carleman_value, phi_eval, CarlemanGrowth, CarlemanReport,
    WeierstrassProduct,
};

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
