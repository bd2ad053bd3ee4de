//! Gradient flow: each player follows the negative gradient of their own cost,
//!
//! ```text
//! dg/dt = -∂U_g/∂g,    da/dt = -∂U_a/∂a
//! ```
//!
//! integrated with classic RK4 and projected back onto `[0, 1]²` after every
//! step. Interior fixed points are located with Newton's method and classified
//! by the eigenvalues of the analytic Jacobian.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};

use crate::best_response::{greedy_curvature, greedy_slope, vigilante_curvature, vigilante_slope};
use crate::equilibrium::{verify_nash, UTILITY_TOL};
use crate::error::{Error, Result};
use crate::model::{clearance, estimate_g, phi_multi, GameConfig, StrategyProfile};
use crate::trajectory::{Trajectory, Verdict};

pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 100;
pub const SEED_GRID: usize = 50;
const DEDUP_TOL: f64 = 1e-6;
const BASIN_GRID: usize = 10;
const BASIN_DT: f64 = 0.1;
const BASIN_STEPS: usize = 30_000;

pub type Point = (f64, f64);

fn single_weights(config: &GameConfig) -> Result<(f64, f64)> {
    if !config.is_single() {
        return Err(Error::Unsupported("the analytic gradient flow"));
    }
    Ok((config.lambda()[0], config.rho()[0]))
}

/// `(∂U_g/∂g, ∂U_a/∂a)`; zero exactly at fixed points of the flow.
fn stationarity(p: Point, lambda: f64, rho: f64, config: &GameConfig) -> Point {
    let (g, a) = p;
    (
        greedy_slope(g, (1.0 - a) * config.c(), lambda, config),
        vigilante_slope(g, a, rho, config),
    )
}

/// Hessian-like matrix of [`stationarity`]; the flow Jacobian is its negative.
fn stationarity_jacobian(p: Point, lambda: f64, rho: f64, config: &GameConfig) -> [[f64; 2]; 2] {
    let (g, a) = p;
    let b = config.baselines();
    let c = b.c;
    let x = (1.0 - a) * c;
    let e = g * x - b.theta0;
    let u = g - config.fair_rate();
    let h = 1.0 + lambda * u * u;
    let ugg = greedy_curvature(g, x, lambda, config);
    let uga = -2.0 * c * (h * (e + g * x) + 2.0 * lambda * g * e * u);
    let uag = -4.0 * g * c * c * (1.0 - a) + 2.0 * c * b.phi0;
    let uaa = vigilante_curvature(g, rho, config);
    [[ugg, uga], [uag, uaa]]
}

/// Velocity `(dg/dt, da/dt)` of the flow at `point`.
pub fn gradient_field(point: Point, config: &GameConfig) -> Result<Point> {
    let (lambda, rho) = single_weights(config)?;
    let (sg, sa) = stationarity(point, lambda, rho, config);
    Ok((-sg, -sa))
}

/// Analytic Jacobian of [`gradient_field`], rows `(dg, da)`, columns `(g, a)`.
pub fn jacobian(point: Point, config: &GameConfig) -> Result<[[f64; 2]; 2]> {
    let (lambda, rho) = single_weights(config)?;
    let m = stationarity_jacobian(point, lambda, rho, config);
    Ok([[-m[0][0], -m[0][1]], [-m[1][0], -m[1][1]]])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

pub fn eigenvalues(m: [[f64; 2]; 2]) -> [Eigenvalue; 2] {
    let half_tr = 0.5 * (m[0][0] + m[1][1]);
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = half_tr * half_tr - det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        // Order by real part, most negative first.
        [Eigenvalue { re: half_tr - s, im: 0.0 }, Eigenvalue { re: half_tr + s, im: 0.0 }]
    } else {
        let s = (-disc).sqrt();
        [Eigenvalue { re: half_tr, im: -s }, Eigenvalue { re: half_tr, im: s }]
    }
}

/// Velocity for every strategic component of a multi-player profile, greedy first.
///
/// Experimental. Each vigilante's estimate does not depend on her own rate, so
/// her component is the analytic slope of her believed cost.
pub fn gradient_field_multi(profile: &StrategyProfile, config: &GameConfig) -> Result<Vec<f64>> {
    profile.check_shape(config)?;
    let mut v = Vec::with_capacity(config.n_greedy() + config.n_vigilante());
    for (i, (&g, &lambda)) in profile.greedy.iter().zip(config.lambda()).enumerate() {
        v.push(-greedy_slope(g, clearance(profile, config, i)?, lambda, config));
    }
    for (j, (&a, &rho)) in profile.vigilante.iter().zip(config.rho()).enumerate() {
        let g_hat = estimate_g(phi_multi(profile, config, j)?, a, config)?;
        v.push(-vigilante_slope(g_hat, a, rho, config));
    }
    Ok(v)
}

/// Experimental central-difference Jacobian of [`gradient_field_multi`].
pub fn jacobian_multi_fd(profile: &StrategyProfile, config: &GameConfig, h: f64) -> Result<Vec<Vec<f64>>> {
    let dim = profile.greedy.len() + profile.vigilante.len();
    let m = profile.greedy.len();
    let shifted = |k: usize, d: f64| {
        let mut p = profile.clone();
        if k < m {
            p.greedy[k] += d;
        } else {
            p.vigilante[k - m] += d;
        }
        p
    };
    let mut cols = Vec::with_capacity(dim);
    for k in 0..dim {
        // Shifted profiles may leave [0, 1]; evaluate the polynomial field anyway.
        let plus = field_unchecked(&shifted(k, h), config)?;
        let minus = field_unchecked(&shifted(k, -h), config)?;
        cols.push(plus.iter().zip(&minus).map(|(p, q)| (p - q) / (2.0 * h)).collect::<Vec<_>>());
    }
    Ok((0..dim).map(|r| (0..dim).map(|k| cols[k][r]).collect()).collect())
}

fn field_unchecked(profile: &StrategyProfile, config: &GameConfig) -> Result<Vec<f64>> {
    let mut v = Vec::new();
    for (i, (&g, &lambda)) in profile.greedy.iter().zip(config.lambda()).enumerate() {
        v.push(-greedy_slope(g, clearance(profile, config, i)?, lambda, config));
    }
    for (j, (&a, &rho)) in profile.vigilante.iter().zip(config.rho()).enumerate() {
        let phi = phi_multi(profile, config, j)?;
        let g_hat = ((a * config.c() - phi) / (a * config.c())).clamp(0.0, 1.0);
        v.push(-vigilante_slope(g_hat, a, rho, config));
    }
    Ok(v)
}

fn clamp_unit(p: Point) -> Point {
    (p.0.clamp(0.0, 1.0), p.1.clamp(0.0, 1.0))
}

fn rk4_step(p: Point, dt: f64, lambda: f64, rho: f64, config: &GameConfig) -> Point {
    let f = |q: Point| {
        let (sg, sa) = stationarity(q, lambda, rho, config);
        (-sg, -sa)
    };
    let k1 = f(p);
    let k2 = f((p.0 + 0.5 * dt * k1.0, p.1 + 0.5 * dt * k1.1));
    let k3 = f((p.0 + 0.5 * dt * k2.0, p.1 + 0.5 * dt * k2.1));
    let k4 = f((p.0 + dt * k3.0, p.1 + dt * k3.1));
    clamp_unit((
        p.0 + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        p.1 + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    ))
}

fn integrate_points(init: Point, dt: f64, steps: usize, lambda: f64, rho: f64, config: &GameConfig) -> Vec<Point> {
    let mut path = Vec::with_capacity(steps + 1);
    let mut p = clamp_unit(init);
    path.push(p);
    for _ in 0..steps {
        p = rk4_step(p, dt, lambda, rho, config);
        path.push(p);
    }
    path
}

fn classify(path: &[Point], dt: f64) -> Verdict {
    let last = *path.last().unwrap();
    let point = StrategyProfile { greedy: vec![last.0], vigilante: vec![last.1] };
    if last.0 >= 1.0 - 1e-12 {
        return Verdict::DeadlockBound { point };
    }
    if path.len() >= 2 {
        let prev = path[path.len() - 2];
        let speed = (last.0 - prev.0).abs().max((last.1 - prev.1).abs()) / dt;
        if speed < 1e-8 {
            return Verdict::Converged { point };
        }
    }
    Verdict::MaxedOut
}

/// Integrates the flow from `init` for `steps` RK4 steps of size `dt`.
pub fn integrate(init: Point, dt: f64, steps: usize, config: &GameConfig) -> Result<Trajectory> {
    let (lambda, rho) = single_weights(config)?;
    if !(dt > 0.0) {
        return Err(Error::InvalidParams(format!("dt = {dt} must be positive")));
    }
    if !((0.0..=1.0).contains(&init.0) && (0.0..=1.0).contains(&init.1)) {
        return Err(Error::InvalidProfile(format!("initial point {init:?} is outside [0, 1]²")));
    }
    let path = integrate_points(init, dt, steps, lambda, rho, config);
    let verdict = classify(&path, dt);
    let states = path
        .into_iter()
        .map(|(g, a)| StrategyProfile { greedy: vec![g], vigilante: vec![a] })
        .collect();
    Ok(Trajectory { time_step: dt, states, verdict })
}

/// Where a sample of initial conditions ends up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinNote {
    pub samples: usize,
    pub reached: usize,
    pub deadlock: usize,
    pub other: usize,
    /// One initial condition that ends at `g = 1`, if any was found.
    pub deadlock_example: Option<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub g: f64,
    pub a: f64,
    pub eigenvalues: [Eigenvalue; 2],
    /// All eigenvalues have negative real part.
    pub stable: bool,
    pub is_nash: bool,
    pub basin_note: Option<BasinNote>,
}

impl FixedPointReport {
    pub fn point(&self) -> Point {
        (self.g, self.a)
    }
}

fn newton(seed: Point, lambda: f64, rho: f64, config: &GameConfig) -> Option<Point> {
    let mut p = seed;
    for _ in 0..NEWTON_MAX_ITER {
        let (fg, fa) = stationarity(p, lambda, rho, config);
        let m = stationarity_jacobian(p, lambda, rho, config);
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dg = (m[1][1] * fg - m[0][1] * fa) / det;
        let da = (m[0][0] * fa - m[1][0] * fg) / det;
        p = (p.0 - dg, p.1 - da);
        if !(p.0.is_finite() && p.1.is_finite()) || p.0.abs() > 1e3 || p.1.abs() > 1e3 {
            return None;
        }
        if dg.abs().max(da.abs()) < NEWTON_TOL {
            let (rg, ra) = stationarity(p, lambda, rho, config);
            return (rg.abs().max(ra.abs()) < 1e-9).then_some(p);
        }
    }
    None
}

fn basin_note(point: Point, lambda: f64, rho: f64, config: &GameConfig) -> BasinNote {
    let inits: Vec<Point> = (0..BASIN_GRID)
        .flat_map(|i| (0..BASIN_GRID).map(move |j| ((i as f64 + 0.5) / BASIN_GRID as f64, (j as f64 + 0.5) / BASIN_GRID as f64)))
        .collect();
    let ends: Vec<(Point, Point)> = inits
        .par_iter()
        .map(|&init| {
            let path = integrate_points(init, BASIN_DT, BASIN_STEPS, lambda, rho, config);
            (init, *path.last().unwrap())
        })
        .collect();
    let mut note = BasinNote { samples: ends.len(), reached: 0, deadlock: 0, other: 0, deadlock_example: None };
    for (init, end) in ends {
        if (end.0 - point.0).abs().max((end.1 - point.1).abs()) < 1e-3 {
            note.reached += 1;
        } else if end.0 >= 1.0 - 1e-12 {
            note.deadlock += 1;
            note.deadlock_example.get_or_insert(init);
        } else {
            note.other += 1;
        }
    }
    note
}

/// Newton from a grid of seeds; every converged point in `[0, 1]²`, deduplicated,
/// with eigenvalues, equilibrium check and, for stable points, a basin sample.
pub fn find_fixed_points(config: &GameConfig) -> Result<Vec<FixedPointReport>> {
    let (lambda, rho) = single_weights(config)?;
    let seeds: Vec<Point> = (0..SEED_GRID)
        .flat_map(|i| (0..SEED_GRID).map(move |j| ((i as f64 + 0.5) / SEED_GRID as f64, (j as f64 + 0.5) / SEED_GRID as f64)))
        .collect();
    let converged: Vec<Option<Point>> = seeds.par_iter().map(|&s| newton(s, lambda, rho, config)).collect();
    if converged.iter().all(Option::is_none) {
        return Err(Error::NewtonFailed);
    }
    let mut points: Vec<Point> = Vec::new();
    for p in converged.into_iter().flatten() {
        let inside = (-1e-9..=1.0 + 1e-9).contains(&p.0) && (-1e-9..=1.0 + 1e-9).contains(&p.1);
        let fresh = points.iter().all(|q| (q.0 - p.0).abs().max((q.1 - p.1).abs()) > DEDUP_TOL);
        if inside && fresh {
            points.push(p);
        }
    }
    points.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));

    points
        .into_iter()
        .map(|p| {
            let eig = eigenvalues(jacobian(p, config)?);
            let stable = eig.iter().all(|e| e.re < 0.0);
            let clamped = clamp_unit(p);
            Ok(FixedPointReport {
                g: p.0,
                a: p.1,
                eigenvalues: eig,
                stable,
                is_nash: verify_nash(clamped, config, UTILITY_TOL)?,
                basin_note: stable.then(|| basin_note(p, lambda, rho, config)),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub g: f64,
    pub a: f64,
    pub dg: f64,
    pub da: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Streamline {
    pub id: usize,
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePortrait {
    pub samples: Vec<FieldSample>,
    pub streamlines: Vec<Streamline>,
    pub dt: f64,
}

impl PhasePortrait {
    /// Writes `g,a,dg,da` rows.
    pub fn write_field_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "g,a,dg,da")?;
        for s in &self.samples {
            writeln!(w, "{},{},{},{}", s.g, s.a, s.dg, s.da)?;
        }
        Ok(())
    }

    /// Writes `id,step,t,g,a` rows.
    pub fn write_streamlines_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "id,step,t,g,a")?;
        for line in &self.streamlines {
            for (k, p) in line.points.iter().enumerate() {
                writeln!(w, "{},{},{},{},{}", line.id, k, k as f64 * self.dt, p.0, p.1)?;
            }
        }
        Ok(())
    }
}

/// Velocity samples on a `resolution × resolution` grid over `[0, 1]²` plus one
/// integrated streamline per seed.
pub fn phase_portrait(
    resolution: usize,
    config: &GameConfig,
    seeds: &[Point],
    dt: f64,
    steps: usize,
) -> Result<PhasePortrait> {
    let (lambda, rho) = single_weights(config)?;
    if resolution < 2 {
        return Err(Error::InvalidParams("phase portrait needs a grid of at least 2".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParams(format!("dt = {dt} must be positive")));
    }
    let h = 1.0 / (resolution - 1) as f64;
    let samples = (0..resolution * resolution)
        .into_par_iter()
        .map(|k| {
            let (g, a) = ((k / resolution) as f64 * h, (k % resolution) as f64 * h);
            let (sg, sa) = stationarity((g, a), lambda, rho, config);
            FieldSample { g, a, dg: -sg, da: -sa }
        })
        .collect();
    let streamlines = seeds
        .par_iter()
        .enumerate()
        .map(|(id, &s)| Streamline { id, points: integrate_points(s, dt, steps, lambda, rho, config) })
        .collect();
    Ok(PhasePortrait { samples, streamlines, dt })
}
