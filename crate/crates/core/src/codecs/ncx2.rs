//! Non-central chi-squared distribution function.

use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};

/// Poisson mass left out of the mixture sum.
const TAIL_TOLERANCE: f64 = 1e-12;

pub fn central_chi2_cdf(x: f64, dof: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    gamma_lr(dof / 2.0, x / 2.0)
}

/// CDF of the non-central chi-squared distribution with `dof` degrees of
/// freedom and non-centrality `lambda`, as a Poisson(`lambda/2`) mixture of
/// central chi-squared CDFs with `dof + 2j` degrees of freedom.
///
/// Summation starts at the Poisson mode and walks outwards in both
/// directions until the omitted Poisson mass is below `1e-12`.
pub fn ncx2_cdf(x: f64, dof: u32, lambda: f64) -> Result<f64> {
    if dof == 0 {
        return Err(Error::invalid("chi-squared dof must be positive"));
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::invalid(format!("chi-squared argument must be >= 0, got {x}")));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("non-centrality must be finite and >= 0, got {lambda}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let k = dof as f64;
    if lambda == 0.0 {
        return Ok(central_chi2_cdf(x, k));
    }
    let half = lambda / 2.0;
    let log_weight = |j: f64| -half + j * half.ln() - ln_gamma(j + 1.0);
    let mode = half.floor();

    let mut total = 0.0;
    let mut mass = 0.0;
    let mut j = mode;
    loop {
        let w = log_weight(j).exp();
        total += w * central_chi2_cdf(x, k + 2.0 * j);
        mass += w;
        if j == 0.0 || (w < TAIL_TOLERANCE * 1e-3 && mass > 0.5) {
            break;
        }
        j -= 1.0;
    }
    j = mode + 1.0;
    loop {
        let w = log_weight(j).exp();
        let c = central_chi2_cdf(x, k + 2.0 * j);
        total += w * c;
        mass += w;
        // The upward terms are dominated by `w`, and the CDF values shrink
        // with growing dof, so the remaining contribution is below the
        // remaining mass.
        if 1.0 - mass < TAIL_TOLERANCE || c == 0.0 || w < 1e-300 {
            break;
        }
        j += 1.0;
    }
    Ok(total.clamp(0.0, 1.0))
}
