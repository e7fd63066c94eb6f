//! Bellman–Isaacs operators of the bounded-control tug-of-war game.
//!
//! `Φ(θ⁺, θ⁻, d⁺, d⁻, p, M)` is the (negated) generator of the controlled
//! dynamics. The bounded-control Hamiltonians are
//!
//! ```text
//! H_m^+(ξ, p, M) = sup_{(θ⁻,d⁻)} inf_{(θ⁺,d⁺)} Φ + rξ
//! H_m^-(ξ, p, M) = inf_{(θ⁺,d⁺)} sup_{(θ⁻,d⁻)} Φ + rξ
//! ```
//!
//! over `θ± ∈ S^{n-1}`, `0 <= d± <= m`. Φ is affine in each of `d⁺` and `d⁻`,
//! so only `d ∈ {0, m}` is enumerated. The sphere is replaced by a
//! [`DirectionSet`] augmented with `±p/|p|`; for `n = 1` the set `{-1, +1}`
//! is the whole sphere and the operators are exact.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, SymMatrix};
use crate::market::{halton, MarketParams};

const UNIT_TOL: f64 = 1e-12;

/// The triple `(ξ, p, M) = (u, Du, D²u)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorInput {
    pub xi: f64,
    pub p: Vec<f64>,
    pub hessian: SymMatrix,
}

impl OperatorInput {
    pub fn new(xi: f64, p: Vec<f64>, hessian: SymMatrix) -> Result<Self> {
        if p.len() != hessian.dim() {
            return Err(Error::invalid(format!(
                "gradient has dimension {} but Hessian is {}x{}",
                p.len(),
                hessian.dim(),
                hessian.dim()
            )));
        }
        if !xi.is_finite() || p.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("operator input must be finite"));
        }
        Ok(Self { xi, p, hessian })
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }
}

/// Which bounded-control Hamiltonian: `Plus` is sup-inf, `Minus` is inf-sup.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Plus => "plus",
            Side::Minus => "minus",
        }
    }
}

/// A control action `(θ, d)`: a unit direction and a step length.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ControlPoint {
    pub theta: Vec<f64>,
    pub d: f64,
}

impl ControlPoint {
    pub fn new(theta: Vec<f64>, d: f64, m: f64) -> Result<Self> {
        let cp = Self { theta, d };
        cp.check(cp.theta.len(), m).map_err(Error::InvalidInput)?;
        Ok(cp)
    }

    /// Verifies `|θ| = 1` and `0 <= d <= m` for a state of dimension `n`.
    pub fn check(&self, n: usize, m: f64) -> std::result::Result<(), String> {
        if self.theta.len() != n {
            return Err(format!(
                "control direction has dimension {}, expected {n}",
                self.theta.len()
            ));
        }
        let len = norm(&self.theta);
        if !((len - 1.0).abs() <= UNIT_TOL) {
            return Err(format!("control direction has norm {len}, expected 1"));
        }
        if !(self.d >= 0.0 && self.d <= m * (1.0 + 1e-12)) {
            return Err(format!("control length {} outside [0, {m}]", self.d));
        }
        Ok(())
    }
}

/// Finite subset of the unit sphere used in place of `S^{n-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionSet {
    dim: usize,
    dirs: Vec<f64>,
}

impl DirectionSet {
    /// Default direction count for dimension `n`.
    pub fn default_count(n: usize) -> usize {
        match n {
            1 => 2,
            2 => 720,
            _ => 2048,
        }
    }

    pub fn default_for_dim(n: usize) -> Self {
        Self::for_dim(n, Self::default_count(n))
    }

    /// `n = 1`: exactly `{-1, +1}`; `n = 2`: `count` equally spaced angles;
    /// `n = 3`: Fibonacci sphere; `n >= 4`: normalized Gaussian images of a
    /// Halton sequence.
    pub fn for_dim(n: usize, count: usize) -> Self {
        assert!(n >= 1, "direction set needs a positive dimension");
        let count = count.max(2);
        let mut dirs = Vec::with_capacity(n * count);
        match n {
            1 => dirs.extend([-1.0, 1.0]),
            2 => {
                for k in 0..count {
                    let a = std::f64::consts::TAU * k as f64 / count as f64;
                    push_unit(&mut dirs, &[a.cos(), a.sin()]);
                }
            }
            3 => {
                let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
                for k in 0..count {
                    let y = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let rad = (1.0 - y * y).sqrt();
                    let phi = golden * k as f64;
                    push_unit(&mut dirs, &[rad * phi.cos(), y, rad * phi.sin()]);
                }
            }
            _ => {
                let pairs = n.div_ceil(2);
                for k in 0..count {
                    let u = halton(k as u64 + 1, 2 * pairs);
                    let mut g = Vec::with_capacity(2 * pairs);
                    for j in 0..pairs {
                        let rad = (-2.0 * (1.0 - u[2 * j]).ln()).sqrt();
                        let ang = std::f64::consts::TAU * u[2 * j + 1];
                        g.push(rad * ang.cos());
                        g.push(rad * ang.sin());
                    }
                    g.truncate(n);
                    push_unit(&mut dirs, &g);
                }
            }
        }
        Self { dim: n, dirs }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.dirs.len() / self.dim
    }

    pub fn get(&self, k: usize) -> &[f64] {
        &self.dirs[k * self.dim..(k + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.dirs.chunks_exact(self.dim)
    }

    /// The set with `p/|p|` and `-p/|p|` appended (when `p != 0` and not
    /// already members).
    pub fn augmented(&self, p: &[f64]) -> DirectionSet {
        let mut out = self.clone();
        let len = norm(p);
        if len > 0.0 {
            let unit: Vec<f64> = p.iter().map(|v| v / len).collect();
            let neg: Vec<f64> = unit.iter().map(|v| -v).collect();
            for cand in [unit, neg] {
                let present = out.iter().any(|d| {
                    d.iter().zip(&cand).all(|(a, b)| (a - b).abs() <= UNIT_TOL)
                });
                if !present {
                    out.dirs.extend_from_slice(&cand);
                }
            }
        }
        out
    }
}

fn push_unit(dirs: &mut Vec<f64>, v: &[f64]) {
    let len = norm(v);
    dirs.extend(v.iter().map(|x| x / len));
}

/// Per-direction precomputation for one operator input. Every Φ value in
/// this module goes through [`Tableau::phi`], so values compared across
/// functions agree bit for bit.
struct Tableau {
    n: usize,
    dirs: DirectionSet,
    /// θ' ΣMΣ θ
    quad: Vec<f64>,
    /// ΣMΣ θ, flattened
    a_theta: Vec<f64>,
    /// θ · p
    slope: Vec<f64>,
    half_trace: f64,
    mu_p: f64,
}

impl Tableau {
    fn new(dirs: DirectionSet, input: &OperatorInput, params: &MarketParams) -> Self {
        let n = input.dim();
        let a = input.hessian.congruence_diag(params.sigma());
        let k = dirs.count();
        let mut quad = Vec::with_capacity(k);
        let mut a_theta = vec![0.0; k * n];
        let mut slope = Vec::with_capacity(k);
        for (j, th) in dirs.iter().enumerate() {
            let out = &mut a_theta[j * n..(j + 1) * n];
            a.mul_vec(th, out);
            quad.push(dot(th, out));
            slope.push(dot(th, &input.p));
        }
        let half_trace = 0.5 * a.trace();
        let mu_p = dot(params.mu(), &input.p);
        Self {
            n,
            dirs,
            quad,
            a_theta,
            slope,
            half_trace,
            mu_p,
        }
    }

    fn len(&self) -> usize {
        self.quad.len()
    }

    /// Φ with θ⁺ = direction `a`, θ⁻ = direction `b`.
    #[inline]
    fn phi(&self, a: usize, b: usize, d_plus: f64, d_minus: f64) -> f64 {
        let n = self.n;
        let th = &self.dirs.dirs[a * n..(a + 1) * n];
        let ab = &self.a_theta[b * n..(b + 1) * n];
        let cross = dot(th, ab);
        -0.5 * (self.quad[a] - 2.0 * cross + self.quad[b])
            - self.half_trace
            - (d_plus + d_minus) * (self.slope[a] + self.slope[b])
            - self.mu_p
    }

    /// Discrete sup-inf (`Plus`) or inf-sup (`Minus`) with the optimizing
    /// indices. Ties go to the first direction, then to `d = 0`.
    fn solve(&self, m: f64, side: Side) -> Solution {
        let lengths = [0.0, m];
        let k = self.len();
        let mut best = match side {
            Side::Plus => f64::NEG_INFINITY,
            Side::Minus => f64::INFINITY,
        };
        let mut sol = Solution::default();
        for outer in 0..k {
            for &d_outer in &lengths {
                let mut inner_best = match side {
                    Side::Plus => f64::INFINITY,
                    Side::Minus => f64::NEG_INFINITY,
                };
                let mut inner_arg = (0, 0.0);
                let mut pruned = false;
                'inner: for inner in 0..k {
                    for &d_inner in &lengths {
                        match side {
                            Side::Plus => {
                                let v = self.phi(inner, outer, d_inner, d_outer);
                                if v < inner_best {
                                    inner_best = v;
                                    inner_arg = (inner, d_inner);
                                    if inner_best <= best {
                                        pruned = true;
                                        break 'inner;
                                    }
                                }
                            }
                            Side::Minus => {
                                let v = self.phi(outer, inner, d_outer, d_inner);
                                if v > inner_best {
                                    inner_best = v;
                                    inner_arg = (inner, d_inner);
                                    if inner_best >= best {
                                        pruned = true;
                                        break 'inner;
                                    }
                                }
                            }
                        }
                    }
                }
                if pruned {
                    continue;
                }
                let improves = match side {
                    Side::Plus => inner_best > best,
                    Side::Minus => inner_best < best,
                };
                if improves {
                    best = inner_best;
                    sol = match side {
                        Side::Plus => Solution {
                            value: best,
                            plus: inner_arg,
                            minus: (outer, d_outer),
                        },
                        Side::Minus => Solution {
                            value: best,
                            plus: (outer, d_outer),
                            minus: inner_arg,
                        },
                    };
                }
            }
        }
        sol
    }
}

#[derive(Default, Debug)]
struct Solution {
    value: f64,
    plus: (usize, f64),
    minus: (usize, f64),
}

fn check_dims(input: &OperatorInput, params: &MarketParams) -> Result<()> {
    if input.dim() != params.dim() {
        return Err(Error::invalid(format!(
            "operator input has dimension {} but market has {}",
            input.dim(),
            params.dim()
        )));
    }
    Ok(())
}

fn check_m(m: f64) -> Result<()> {
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::invalid(format!("control bound m must be positive, got {m}")));
    }
    Ok(())
}

/// `Φ(θ⁺, θ⁻, d⁺, d⁻, p, M) = -½(θ⁺-θ⁻)'ΣMΣ(θ⁺-θ⁻) - ½tr(Σ²M) - (d⁺+d⁻)(θ⁺+θ⁻)·p - μ·p`.
pub fn phi(
    theta_plus: &[f64],
    theta_minus: &[f64],
    d_plus: f64,
    d_minus: f64,
    input: &OperatorInput,
    params: &MarketParams,
) -> Result<f64> {
    check_dims(input, params)?;
    let n = input.dim();
    for (name, th, d) in [("theta_plus", theta_plus, d_plus), ("theta_minus", theta_minus, d_minus)] {
        ControlPoint {
            theta: th.to_vec(),
            d,
        }
        .check(n, f64::INFINITY)
        .map_err(|e| Error::invalid(format!("{name}: {e}")))?;
    }
    let mut dirs = theta_plus.to_vec();
    dirs.extend_from_slice(theta_minus);
    let tab = Tableau::new(DirectionSet { dim: n, dirs }, input, params);
    Ok(tab.phi(0, 1, d_plus, d_minus))
}

fn hm(
    input: &OperatorInput,
    m: f64,
    params: &MarketParams,
    dirs: &DirectionSet,
    side: Side,
) -> Result<f64> {
    check_dims(input, params)?;
    check_m(m)?;
    if dirs.dim() != input.dim() {
        return Err(Error::invalid("direction set dimension does not match input"));
    }
    let tab = Tableau::new(dirs.augmented(&input.p), input, params);
    Ok(tab.solve(m, side).value + params.rate() * input.xi)
}

/// `H_m^+(ξ, p, M)`: sup over the minimizer's action of the inf over the
/// maximizer's, plus `rξ`.
pub fn hm_plus(input: &OperatorInput, m: f64, params: &MarketParams, dirs: &DirectionSet) -> Result<f64> {
    hm(input, m, params, dirs, Side::Plus)
}

/// `H_m^-(ξ, p, M)`: inf over the maximizer's action of the sup over the
/// minimizer's, plus `rξ`.
pub fn hm_minus(input: &OperatorInput, m: f64, params: &MarketParams, dirs: &DirectionSet) -> Result<f64> {
    hm(input, m, params, dirs, Side::Minus)
}

pub fn hm_side(
    input: &OperatorInput,
    m: f64,
    params: &MarketParams,
    dirs: &DirectionSet,
    side: Side,
) -> Result<f64> {
    hm(input, m, params, dirs, side)
}

/// The limit operator
/// `F = (2/|p|²) Σ M_ij p_i p_j σ_i σ_j + ½ Σ σ_i² M_ii + μ·p - rξ`.
pub fn f_limit(input: &OperatorInput, params: &MarketParams) -> Result<f64> {
    check_dims(input, params)?;
    let p2 = dot(&input.p, &input.p);
    if p2 == 0.0 {
        return Err(Error::GradientDegenerate);
    }
    let a = input.hessian.congruence_diag(params.sigma());
    Ok(2.0 * a.quad_form(&input.p) / p2 + 0.5 * a.trace() + dot(params.mu(), &input.p)
        - params.rate() * input.xi)
}

/// Lower and upper envelopes of `F`. They coincide with [`f_limit`] when
/// `p != 0`; at `p = 0` the normalized term ranges over
/// `[2 λ_min(ΣMΣ), 2 λ_max(ΣMΣ)]`.
pub fn f_envelopes(input: &OperatorInput, params: &MarketParams) -> Result<(f64, f64)> {
    check_dims(input, params)?;
    match f_limit(input, params) {
        Ok(f) => Ok((f, f)),
        Err(Error::GradientDegenerate) => {
            let a = input.hessian.congruence_diag(params.sigma());
            let ev = a.eigenvalues();
            let rest = 0.5 * a.trace() - params.rate() * input.xi;
            Ok((2.0 * ev[0] + rest, 2.0 * ev[ev.len() - 1] + rest))
        }
        Err(e) => Err(e),
    }
}

/// Optimizing actions of the discretized game at one input.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GreedyControls {
    /// Action of the maximizing player (`θ⁺, d⁺`).
    pub maximizer: ControlPoint,
    /// Action of the minimizing player (`θ⁻, d⁻`).
    pub minimizer: ControlPoint,
    /// The corresponding `H_m^±` value (including `rξ`).
    pub value: f64,
}

/// Controls attaining the discretized sup-inf (`Plus`) or inf-sup (`Minus`).
/// The outer player's action is the optimizer of the outer problem; the
/// inner player's is its best response to it.
pub fn greedy_controls(
    input: &OperatorInput,
    m: f64,
    params: &MarketParams,
    dirs: &DirectionSet,
    side: Side,
) -> Result<GreedyControls> {
    check_dims(input, params)?;
    check_m(m)?;
    let tab = Tableau::new(dirs.augmented(&input.p), input, params);
    let sol = tab.solve(m, side);
    Ok(GreedyControls {
        maximizer: ControlPoint {
            theta: tab.dirs.get(sol.plus.0).to_vec(),
            d: sol.plus.1,
        },
        minimizer: ControlPoint {
            theta: tab.dirs.get(sol.minus.0).to_vec(),
            d: sol.minus.1,
        },
        value: sol.value + params.rate() * input.xi,
    })
}

/// Random input with `|p| ∈ [0.5, 1.5]`, `ξ ∈ [-1, 1]` and a symmetric
/// Hessian of spectral norm at most `0.5`.
pub fn sample_normalized_input<R: Rng + ?Sized>(n: usize, rng: &mut R) -> OperatorInput {
    let mut p: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut len = norm(&p);
    while len < 1e-3 {
        p = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        len = norm(&p);
    }
    let mag = rng.random_range(0.5..1.5);
    p.iter_mut().for_each(|v| *v *= mag / len);

    let mut h = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            h.set(i, j, rng.random_range(-1.0..1.0));
        }
    }
    let target = rng.random_range(0.0..0.5);
    let sn = h.spectral_norm();
    let h = if sn > 0.0 { h.scaled(target / sn) } else { h };
    OperatorInput {
        xi: rng.random_range(-1.0..1.0),
        p,
        hessian: h,
    }
}

/// One row of the `|H_m^± + F|` convergence table.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub trial: usize,
    pub m: f64,
    pub err_plus: f64,
    pub err_minus: f64,
}

/// `|H_m^± + F|` for every input and every `m` in the ladder. Inputs must
/// have nonzero gradient.
pub fn operator_convergence(
    inputs: &[OperatorInput],
    ladder: &[f64],
    params: &MarketParams,
    dirs: &DirectionSet,
) -> Result<Vec<ConvergenceRow>> {
    let rows: Vec<Vec<ConvergenceRow>> = inputs
        .par_iter()
        .enumerate()
        .map(|(trial, input)| {
            let f = f_limit(input, params)?;
            ladder
                .iter()
                .map(|&m| {
                    Ok(ConvergenceRow {
                        trial,
                        m,
                        err_plus: (hm_plus(input, m, params, dirs)? + f).abs(),
                        err_minus: (hm_minus(input, m, params, dirs)? + f).abs(),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params1(mu: f64, r: f64) -> MarketParams {
        MarketParams::new(vec![mu], vec![1.0], r, 1.0).unwrap()
    }

    fn input1(xi: f64, p: f64, m: f64) -> OperatorInput {
        OperatorInput::new(xi, vec![p], SymMatrix::diag(&[m])).unwrap()
    }

    /// Literal transcription of Φ for n = 1, used as an enumeration oracle.
    fn phi_1d(tp: f64, tm: f64, dp: f64, dm: f64, p: f64, mm: f64, sigma: f64, mu: f64) -> f64 {
        -0.5 * (tp - tm) * sigma * mm * sigma * (tp - tm)
            - 0.5 * sigma * sigma * mm
            - (dp + dm) * (tp + tm) * p
            - mu * p
    }

    fn brute_1d(side: Side, p: f64, mm: f64, sigma: f64, mu: f64, m: f64) -> f64 {
        let th = [-1.0, 1.0];
        let ds = [0.0, m];
        let mut outer_best = match side {
            Side::Plus => f64::NEG_INFINITY,
            Side::Minus => f64::INFINITY,
        };
        for &to in &th {
            for &dout in &ds {
                let mut inner: f64 = match side {
                    Side::Plus => f64::INFINITY,
                    Side::Minus => f64::NEG_INFINITY,
                };
                for &ti in &th {
                    for &din in &ds {
                        inner = match side {
                            Side::Plus => inner.min(phi_1d(ti, to, din, dout, p, mm, sigma, mu)),
                            Side::Minus => inner.max(phi_1d(to, ti, dout, din, p, mm, sigma, mu)),
                        };
                    }
                }
                outer_best = match side {
                    Side::Plus => outer_best.max(inner),
                    Side::Minus => outer_best.min(inner),
                };
            }
        }
        outer_best
    }

    #[test]
    fn phi_examples() {
        let p = params1(0.0, 0.0);
        let v = phi(&[1.0], &[-1.0], 3.0, 7.0, &input1(0.0, 5.0, 1.0), &p).unwrap();
        assert_eq!(v, -2.5);
        let v = phi(&[1.0], &[1.0], 0.0, 0.0, &input1(0.0, 1.0, 1.0), &p).unwrap();
        assert_eq!(v, -0.5);
        let p = params1(0.1, 0.0);
        let v = phi(&[1.0], &[1.0], 0.0, 0.0, &input1(0.0, 2.0, 1.0), &p).unwrap();
        assert!((v + 0.7).abs() < 1e-15);
    }

    #[test]
    fn phi_rejects_non_unit_direction() {
        let p = params1(0.0, 0.0);
        assert!(phi(&[0.5], &[1.0], 0.0, 0.0, &input1(0.0, 1.0, 1.0), &p).is_err());
    }

    #[test]
    fn hm_examples_1d() {
        let dirs = DirectionSet::default_for_dim(1);
        let p = params1(0.0, 0.0);
        assert_eq!(hm_plus(&input1(0.0, 1.0, 1.0), 10.0, &p, &dirs).unwrap(), -2.5);
        assert_eq!(hm_plus(&input1(0.0, 0.0, 1.0), 10.0, &p, &dirs).unwrap(), -2.5);
        assert_eq!(hm_minus(&input1(0.0, 1.0, 1.0), 10.0, &p, &dirs).unwrap(), -2.5);
        assert_eq!(hm_minus(&input1(0.0, 0.0, 1.0), 10.0, &p, &dirs).unwrap(), -0.5);
        let pr = params1(0.0, 0.05);
        let v = hm_plus(&input1(10.0, 0.0, 1.0), 10.0, &pr, &dirs).unwrap();
        assert!((v - (-2.5 + 0.5)).abs() < 1e-15);
        // Φ vanishes identically when M = 0, p = 0, μ = 0
        let v = hm_minus(&input1(3.0, 0.0, 0.0), 10.0, &pr, &dirs).unwrap();
        assert!((v - 0.15).abs() < 1e-15);
    }

    #[test]
    fn hm_matches_enumeration_oracle_1d() {
        let dirs = DirectionSet::default_for_dim(1);
        for &(pp, mm, sigma, mu, m) in &[
            (1.0, 1.0, 1.0, 0.0, 10.0),
            (-0.3, 4.0, 0.7, 0.1, 1.0),
            (0.2, -3.0, 1.3, -0.2, 2.0),
            (0.0, -1.0, 0.5, 0.0, 5.0),
            (2.0, 0.5, 0.2, 0.05, 0.1),
        ] {
            let params = MarketParams::new(vec![mu], vec![sigma], 0.0, 1.0).unwrap();
            let inp = input1(0.0, pp, mm);
            for side in [Side::Plus, Side::Minus] {
                let got = hm_side(&inp, m, &params, &dirs, side).unwrap();
                let want = brute_1d(side, pp, mm, sigma, mu, m);
                assert!((got - want).abs() < 1e-12, "{side:?} {pp} {mm}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn f_limit_examples() {
        let p = params1(0.0, 0.0);
        assert!((f_limit(&input1(0.0, 3.0, 2.0), &p).unwrap() - 5.0).abs() < 1e-14);
        let a = f_limit(&input1(0.0, 0.001, 2.0), &p).unwrap();
        let b = f_limit(&input1(0.0, 7.0, 2.0), &p).unwrap();
        assert!((a - b).abs() < 1e-12);
        let p2 = MarketParams::new(vec![0.0, 0.0], vec![1.0, 1.0], 0.0, 1.0).unwrap();
        let inp = OperatorInput::new(0.0, vec![1.0, 0.0], SymMatrix::diag(&[2.0, -1.0])).unwrap();
        assert!((f_limit(&inp, &p2).unwrap() - 4.5).abs() < 1e-14);
        assert!(matches!(
            f_limit(&input1(0.0, 0.0, 1.0), &p),
            Err(Error::GradientDegenerate)
        ));
    }

    #[test]
    fn envelope_examples() {
        let p = params1(0.0, 0.0);
        let (lo, hi) = f_envelopes(&input1(0.0, 0.0, 1.0), &p).unwrap();
        assert!((lo - 2.5).abs() < 1e-14 && (hi - 2.5).abs() < 1e-14);
        let p2 = MarketParams::new(vec![0.0, 0.0], vec![1.0, 1.0], 0.0, 1.0).unwrap();
        let inp = OperatorInput::new(0.0, vec![0.0, 0.0], SymMatrix::diag(&[2.0, -1.0])).unwrap();
        let (lo, hi) = f_envelopes(&inp, &p2).unwrap();
        assert!((lo + 1.5).abs() < 1e-12 && (hi - 4.5).abs() < 1e-12);
        let inp = OperatorInput::new(0.3, vec![1.0, 2.0], SymMatrix::diag(&[2.0, -1.0])).unwrap();
        let f = f_limit(&inp, &p2).unwrap();
        assert_eq!(f_envelopes(&inp, &p2).unwrap(), (f, f));
    }

    #[test]
    fn greedy_example_side_minus() {
        let dirs = DirectionSet::default_for_dim(1);
        let p = params1(0.0, 0.0);
        let inp = input1(0.0, 1.0, 1.0);
        let g = greedy_controls(&inp, 10.0, &p, &dirs, Side::Minus).unwrap();
        assert_eq!(g.maximizer, ControlPoint { theta: vec![1.0], d: 10.0 });
        assert_eq!(g.minimizer, ControlPoint { theta: vec![-1.0], d: 0.0 });
        let v = phi(&g.maximizer.theta, &g.minimizer.theta, g.maximizer.d, g.minimizer.d, &inp, &p)
            .unwrap();
        assert_eq!(v, -2.5);
        assert_eq!(v, hm_minus(&inp, 10.0, &p, &dirs).unwrap());
    }

    #[test]
    fn greedy_sign_symmetry() {
        let dirs = DirectionSet::default_for_dim(1);
        let p = params1(0.0, 0.0);
        for side in [Side::Plus, Side::Minus] {
            let a = greedy_controls(&input1(0.0, 1.0, 1.0), 10.0, &p, &dirs, side).unwrap();
            let b = greedy_controls(&input1(0.0, -1.0, 1.0), 10.0, &p, &dirs, side).unwrap();
            assert_eq!(a.value, b.value);
            assert_eq!(a.maximizer.theta[0], -b.maximizer.theta[0]);
            assert_eq!(a.minimizer.theta[0], -b.minimizer.theta[0]);
        }
    }

    #[test]
    fn greedy_flat_objective() {
        let dirs = DirectionSet::default_for_dim(2);
        let p = MarketParams::new(vec![0.0, 0.0], vec![1.0, 1.0], 0.0, 1.0).unwrap();
        let inp = OperatorInput::new(0.0, vec![0.0, 0.0], SymMatrix::zeros(2)).unwrap();
        for side in [Side::Plus, Side::Minus] {
            let g = greedy_controls(&inp, 4.0, &p, &dirs, side).unwrap();
            let v = phi(&g.maximizer.theta, &g.minimizer.theta, g.maximizer.d, g.minimizer.d, &inp, &p)
                .unwrap();
            assert_eq!(v, 0.0);
            assert_eq!(g.value, 0.0);
        }
    }

    #[test]
    fn direction_sets_are_unit() {
        for n in 1..=4 {
            let d = DirectionSet::for_dim(n, 200);
            for v in d.iter() {
                assert!((norm(v) - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(DirectionSet::for_dim(1, 999).count(), 2);
        assert_eq!(DirectionSet::default_for_dim(2).count(), 720);
        // augmentation does not duplicate members
        assert_eq!(DirectionSet::for_dim(1, 2).augmented(&[3.0]).count(), 2);
        assert_eq!(DirectionSet::for_dim(2, 8).augmented(&[0.3, 0.4]).count(), 10);
        assert_eq!(DirectionSet::for_dim(2, 8).augmented(&[1.0, 0.0]).count(), 8);
    }
}
