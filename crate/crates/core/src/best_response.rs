//! Closed-form critical points and best-response maps.
//!
//! The greedy cost is quartic in `g`. Writing its throughput as `g * X` with
//! clearance `X`, the stationary points are `r1 = Θ₀/X` (a zero of the cost)
//! and the pair
//!
//! ```text
//! r2,3 = 1/N + [ (Θ₀ - X/N)/X ± sqrt(((Θ₀ - X/N)/X)² - 8/λ) ] / 4
//! ```
//!
//! ordered `r3 < r2 < r1`: local minimum, local maximum, global minimum. Once
//! `r1` leaves `[0, 1]` the best response is either the boundary `g = 1` or
//! `r3`, and the switch between them is a jump.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::model::{theta, utility_a, utility_g, GameConfig};

/// Resolution of the sign scan used to bracket `a⁺`.
pub const DISCONTINUITY_SCAN: usize = 10_000;

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// First derivative of the greedy cost in `g` at clearance `x`.
pub fn greedy_slope(g: f64, x: f64, lambda: f64, config: &GameConfig) -> f64 {
    let theta0 = config.baselines().theta0;
    let e = g * x - theta0;
    let u = g - config.fair_rate();
    2.0 * x * e * (1.0 + lambda * u * u) + 2.0 * lambda * e * e * u
}

/// Second derivative of the greedy cost in `g` at clearance `x`.
pub fn greedy_curvature(g: f64, x: f64, lambda: f64, config: &GameConfig) -> f64 {
    let theta0 = config.baselines().theta0;
    let e = g * x - theta0;
    let u = g - config.fair_rate();
    2.0 * x * x * (1.0 + lambda * u * u) + 8.0 * lambda * x * e * u + 2.0 * lambda * e * e
}

/// `∂U_a/∂a` when the vigilante believes the greedy rate is `g`.
pub fn vigilante_slope(g: f64, a: f64, rho: f64, config: &GameConfig) -> f64 {
    let b = config.baselines();
    -2.0 * g * b.c * (theta(g, a, config) - b.phi0) + 2.0 * rho * (a - config.fair_rate())
}

/// `∂²U_a/∂a²`, constant in `a`.
pub fn vigilante_curvature(g: f64, rho: f64, config: &GameConfig) -> f64 {
    let c = config.c();
    2.0 * g * g * c * c + 2.0 * rho
}

/// Intermediates of the closed-form second-derivative test at `r3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureTest {
    pub s1: f64,
    pub s2: f64,
    /// `sqrt(-s2 / (N² (1-a)² λ))`; present when `s2 <= 0`.
    pub gamma: Option<f64>,
}

impl CurvatureTest {
    /// Evaluated at the vigilante rate `a` (clearance `(1-a)c`).
    pub fn at(a: f64, lambda: f64, config: &GameConfig) -> Self {
        let n = config.n() as f64;
        let s1 = 3.0 * n * lambda * (a - 1.0) * (a - 2.0 + n);
        let s2 = 8.0 * n * n * (1.0 - a).powi(2) - lambda * (n + a - 2.0).powi(2);
        let gamma = if s2 <= 0.0 && lambda > 0.0 {
            Some((-s2 / (n * n * (1.0 - a).powi(2) * lambda)).sqrt())
        } else {
            None
        };
        Self { s1, s2, gamma }
    }

    /// `s1·γ + s2`, the sign-carrying factor of the curvature at `r3`.
    pub fn combined(&self) -> Option<f64> {
        self.gamma.map(|g| self.s1 * g + self.s2)
    }

    /// The curvature of the greedy cost at `r3` expressed through `s1`, `s2`, `γ`.
    pub fn curvature(&self, config: &GameConfig) -> Option<f64> {
        let n = config.n() as f64;
        self.combined().map(|k| {
            -0.5 * n * n * ((n - 1.0) / n).powi(2 * config.n() as i32) * k / (n - 1.0).powi(4)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoints {
    /// `Θ₀/X`; the cost vanishes here.
    pub r1: f64,
    /// Local maximum.
    pub r2: Option<f64>,
    /// Local minimum.
    pub r3: Option<f64>,
    /// `((Θ₀ - X/N)/X)² - 8/λ`; `r2` and `r3` are real iff this is `>= 0`.
    pub discriminant: f64,
    /// Second-derivative intermediates at the equivalent single-vigilante rate `a = 1 - X/c`.
    pub curvature_test: CurvatureTest,
}

/// All real stationary points of the greedy cost at clearance `x`.
pub fn critical_points_g(x: f64, lambda: f64, config: &GameConfig) -> Result<CriticalPoints> {
    if x <= 0.0 {
        return Err(Error::DegenerateChannel);
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParams(format!("lambda = {lambda} must be >= 0")));
    }
    let b = config.baselines();
    let q = config.fair_rate();
    let r1 = b.theta0 / x;
    let shift = (b.theta0 - x * q) / x;
    let discriminant = if lambda > 0.0 { shift * shift - 8.0 / lambda } else { f64::NEG_INFINITY };
    let (r2, r3) = if discriminant >= 0.0 {
        let root = discriminant.sqrt();
        (Some(q + (shift + root) / 4.0), Some(q + (shift - root) / 4.0))
    } else {
        (None, None)
    };
    let a_equiv = 1.0 - x / b.c;
    Ok(CriticalPoints {
        r1,
        r2,
        r3,
        discriminant,
        curvature_test: CurvatureTest::at(a_equiv, lambda, config),
    })
}

/// [`critical_points_g`] for a single vigilante at rate `a`.
pub fn critical_points_at(a: f64, lambda: f64, config: &GameConfig) -> Result<CriticalPoints> {
    critical_points_g((1.0 - a) * config.c(), lambda, config)
}

/// Which piece of the greedy best-response map is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Interior zero-cost point `r1 < 1`; for the vigilante map, the unclamped stationary point.
    Left,
    /// Clamped at the edge of `[0, 1]`.
    Boundary,
    /// Interior local minimum `r3`.
    Right,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Left => "left",
            Branch::Boundary => "boundary",
            Branch::Right => "right",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Response {
    pub value: f64,
    pub branch: Branch,
}

/// Global minimizer of the greedy cost on `[0, 1]` at clearance `x`.
///
/// Ties between `g = 1` and `r3` go to `r3`.
pub fn greedy_response(x: f64, lambda: f64, config: &GameConfig) -> Result<Response> {
    let cp = critical_points_g(x, lambda, config)?;
    if cp.r1 < 1.0 {
        return Ok(Response { value: cp.r1, branch: Branch::Left });
    }
    if let Some(r3) = cp.r3.filter(|r| *r <= 1.0) {
        if utility_g(r3, x, lambda, config) <= utility_g(1.0, x, lambda, config) {
            return Ok(Response { value: r3, branch: Branch::Right });
        }
    }
    Ok(Response { value: 1.0, branch: Branch::Boundary })
}

/// Greedy best response to vigilante rate `a` with one greedy player and one vigilante.
pub fn beta_g(a: f64, lambda: f64, config: &GameConfig) -> Result<f64> {
    beta_g_response(a, lambda, config).map(|r| r.value)
}

pub fn beta_g_response(a: f64, lambda: f64, config: &GameConfig) -> Result<Response> {
    if a >= 1.0 {
        return Err(Error::DegenerateChannel);
    }
    greedy_response((1.0 - a) * config.c(), lambda, config)
}

/// Unclamped stationary point of the vigilante cost for believed greedy rate `g`.
pub fn vigilante_stationary(g: f64, rho: f64, config: &GameConfig) -> Result<f64> {
    if g == 0.0 && rho == 0.0 {
        return Err(Error::IndifferentVigilante);
    }
    let b = config.baselines();
    let gc = g * b.c;
    Ok((gc * gc - gc * b.phi0 + rho * config.fair_rate()) / (gc * gc + rho))
}

pub fn beta_a_response(g: f64, rho: f64, config: &GameConfig) -> Result<Response> {
    let s = vigilante_stationary(g, rho, config)?;
    Ok(if (0.0..=1.0).contains(&s) {
        Response { value: s, branch: Branch::Left }
    } else {
        Response { value: s.clamp(0.0, 1.0), branch: Branch::Boundary }
    })
}

/// Vigilante best response to (believed) greedy rate `g`.
pub fn beta_a(g: f64, rho: f64, config: &GameConfig) -> Result<f64> {
    beta_a_response(g, rho, config).map(|r| r.value)
}

/// `U_g(1, a) - U_g(r3(a), a)` where `r3` is real and feasible; positive when `r3` wins.
pub fn jump_residual(a: f64, lambda: f64, config: &GameConfig) -> Option<f64> {
    if !(a < 1.0) {
        return None;
    }
    let x = (1.0 - a) * config.c();
    let r3 = critical_points_g(x, lambda, config).ok()?.r3?;
    (r3 <= 1.0).then(|| utility_g(1.0, x, lambda, config) - utility_g(r3, x, lambda, config))
}

/// Every root of `U_g(1, a) = U_g(r3(a), a)` on `[1/N, 1)`.
///
/// Each root is the bracket endpoint on which `r3` wins, so the greedy map is
/// already on its `r3` branch at the returned value.
pub fn discontinuity_points(lambda: f64, config: &GameConfig) -> Vec<f64> {
    let lo = config.fair_rate();
    let step = (1.0 - lo) / DISCONTINUITY_SCAN as f64;
    let wins = |a: f64| jump_residual(a, lambda, config).map(|h| h >= 0.0);

    let mut roots = Vec::new();
    let mut prev: Option<(f64, bool)> = None;
    for k in 0..DISCONTINUITY_SCAN {
        let a = lo + k as f64 * step;
        let cur = wins(a).map(|w| (a, w));
        if let (Some((a0, w0)), Some((a1, w1))) = (prev, cur) {
            if w0 != w1 {
                let (mut left, mut right) = (a0, a1);
                for _ in 0..200 {
                    if right - left < 1e-14 {
                        break;
                    }
                    let mid = 0.5 * (left + right);
                    match wins(mid) {
                        Some(w) if w == w0 => left = mid,
                        _ => right = mid,
                    }
                }
                roots.push(if w0 { left } else { right });
            }
        }
        prev = cur;
    }
    if roots.len() > 1 {
        log::warn!(
            "greedy best response has {} jump points for lambda = {lambda}: {roots:?}",
            roots.len()
        );
    }
    roots
}

/// The jump point `a⁺` of the greedy best response, if it has one.
pub fn discontinuity_point(lambda: f64, config: &GameConfig) -> Option<f64> {
    discontinuity_points(lambda, config).into_iter().next()
}

/// Grid argmin of `f` on `[0, 1]` with `resolution` cells, refined by golden
/// section inside the neighbouring cells.
pub fn oracle_argmin<F: Fn(f64) -> f64>(f: F, resolution: usize) -> f64 {
    assert!(resolution >= 1000, "oracle resolution must be at least 10^3");
    let h = 1.0 / resolution as f64;
    let (mut best_k, mut best_v) = (0, f(0.0));
    for k in 1..=resolution {
        let v = f(k as f64 * h);
        if v < best_v {
            best_k = k;
            best_v = v;
        }
    }
    let grid_x = best_k as f64 * h;
    let mut lo = (grid_x - h).max(0.0);
    let mut hi = (grid_x + h).min(1.0);
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-10 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = f(x2);
        }
    }
    let refined = 0.5 * (lo + hi);
    if f(refined) <= best_v {
        refined
    } else {
        grid_x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub input: f64,
    pub response: f64,
    pub branch: Branch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponseCurve {
    pub samples: Vec<CurvePoint>,
    pub a_plus: Option<f64>,
    pub jump_size: Option<f64>,
}

impl BestResponseCurve {
    /// Writes `input,response,branch` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "input,response,branch")?;
        for p in &self.samples {
            writeln!(w, "{},{},{}", p.input, p.response, p.branch.as_str())?;
        }
        Ok(())
    }
}

fn unit_grid(points: usize, include_one: bool) -> impl IndexedParallelIterator<Item = f64> {
    let denom = if include_one { points.saturating_sub(1).max(1) } else { points.max(1) } as f64;
    (0..points).into_par_iter().map(move |k| k as f64 / denom)
}

/// Samples the greedy best response on `points` evenly spaced `a` in `[0, 1)`.
pub fn sample_beta_g(lambda: f64, config: &GameConfig, points: usize) -> Result<BestResponseCurve> {
    let samples = unit_grid(points, false)
        .map(|a| {
            beta_g_response(a, lambda, config).map(|r| CurvePoint {
                input: a,
                response: r.value,
                branch: r.branch,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let a_plus = discontinuity_point(lambda, config);
    let jump_size = match a_plus {
        Some(a) => Some((1.0 - beta_g(a, lambda, config)?).abs()),
        None => None,
    };
    Ok(BestResponseCurve { samples, a_plus, jump_size })
}

/// Samples the vigilante best response on `points` evenly spaced `g` in `[0, 1]`.
/// With `inverse` set, each sample is written as `(β_a(g), g)` so it overlays the greedy curve.
pub fn sample_beta_a(
    rho: f64,
    config: &GameConfig,
    points: usize,
    inverse: bool,
) -> Result<BestResponseCurve> {
    let samples = unit_grid(points, true)
        .filter(|&g| !(g == 0.0 && rho == 0.0))
        .map(|g| {
            beta_a_response(g, rho, config).map(|r| {
                let (input, response) = if inverse { (r.value, g) } else { (g, r.value) };
                CurvePoint { input, response, branch: r.branch }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BestResponseCurve { samples, a_plus: None, jump_size: None })
}

/// Vigilante cost as a function of her own rate, with the true greedy throughput.
pub fn vigilante_cost(g: f64, rho: f64, config: &GameConfig) -> impl Fn(f64) -> f64 + '_ {
    move |a| utility_a(theta(g, a, config), a, rho, config)
}

/// Greedy cost as a function of his own rate against vigilante rate `a`.
pub fn greedy_cost(a: f64, lambda: f64, config: &GameConfig) -> impl Fn(f64) -> f64 + '_ {
    let x = (1.0 - a) * config.c();
    move |g| utility_g(g, x, lambda, config)
}
