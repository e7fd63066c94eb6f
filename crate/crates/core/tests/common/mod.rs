//! Reference values computed independently of the engine.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::hermite::GaussHermite;
use gauss_quad::legendre::GaussLegendre;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::factorial::ln_binomial;

pub const GH_NODES: usize = 128;

/// `E[f(mean + √var · Z)]`, `Z ~ N(0, 1)`.
pub fn gauss_expectation(f: impl Fn(f64) -> f64, mean: f64, var: f64) -> f64 {
    let rule = GaussHermite::new(NonZeroUsize::new(GH_NODES).unwrap());
    let s = (2.0 * var).sqrt();
    rule.integrate(|y| f(mean + s * y)) / PI.sqrt()
}

/// Same expectation for an integrand with kinks at `kinks`: Gauss–Legendre
/// on each smooth piece of `mean ± 12√var`. Plain Gauss–Hermite only
/// converges like `1/nodes` across a kink.
pub fn gauss_expectation_split(f: impl Fn(f64) -> f64, mean: f64, var: f64, kinks: &[f64]) -> f64 {
    let s = var.sqrt();
    let (lo, hi) = (mean - 12.0 * s, mean + 12.0 * s);
    let mut cuts = vec![lo];
    cuts.extend(kinks.iter().copied().filter(|k| *k > lo && *k < hi));
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    let rule = GaussLegendre::new(NonZeroUsize::new(64).unwrap());
    let density = |x: f64| (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt();
    cuts.windows(2)
        .map(|w| rule.integrate(w[0], w[1], |x| f(x) * density(x)))
        .sum()
}

pub fn put(x: f64, strike: f64) -> f64 {
    (strike - x.exp()).max(0.0)
}

/// `e^{-rT} E[(K − e^{X_T})^+]` with `X_T ~ N(x0 + μT, var_factor·σ²T)`.
pub fn put_oracle(x0: f64, mu: f64, sigma: f64, r: f64, horizon: f64, strike: f64, var_factor: f64) -> f64 {
    let var = var_factor * sigma * sigma * horizon;
    (-r * horizon).exp()
        * gauss_expectation_split(|x| put(x, strike), x0 + mu * horizon, var, &[strike.ln()])
}

/// Closed form of [`put_oracle`].
pub fn put_closed_form(x0: f64, mu: f64, sigma: f64, r: f64, horizon: f64, strike: f64, var_factor: f64) -> f64 {
    let m = x0 + mu * horizon;
    let s = (var_factor * sigma * sigma * horizon).sqrt();
    let z = Normal::standard();
    let d = (strike.ln() - m) / s;
    (-r * horizon).exp() * (strike * z.cdf(d) - (m + 0.5 * s * s).exp() * z.cdf(d - s))
}

/// Exact mean of `f(x0 + steps·drift + step·(2B − steps))`,
/// `B ~ Binomial(steps, 1/2)`.
pub fn binomial_expectation(f: impl Fn(f64) -> f64, x0: f64, drift: f64, step: f64, steps: u64) -> f64 {
    let ln2 = std::f64::consts::LN_2;
    (0..=steps)
        .map(|k| {
            let w = (ln_binomial(steps, k) - steps as f64 * ln2).exp();
            w * f(x0 + steps as f64 * drift + step * (2.0 * k as f64 - steps as f64))
        })
        .sum()
}

/// `5e^{-r τ}` style constant payoff with constant running cost `h`:
/// `g e^{-rτ} + h (1 − e^{-rτ})/r`.
pub fn constant_with_running_cost(g: f64, h: f64, r: f64, tau: f64) -> f64 {
    g * (-r * tau).exp() + h * (1.0 - (-r * tau).exp()) / r
}
