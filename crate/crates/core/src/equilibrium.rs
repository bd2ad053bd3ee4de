//! Nash-equilibrium detection for one greedy player and one vigilante.
//!
//! Equilibria are the fixed points of the composed map `F(a) = β_a(β_g(a))`.
//! `β_a` is continuous, so `F` only jumps where `β_g` does; when the jump
//! carries `F(a) - a` from positive to negative without a continuous
//! crossing, there is no equilibrium.

use serde::{Deserialize, Serialize};

use crate::best_response::{beta_a, beta_g, greedy_cost, oracle_argmin, vigilante_cost};
use crate::error::{Error, Result};
use crate::model::GameConfig;

pub const NASH_SCAN: usize = 10_000;
/// Default tolerance on utility gaps when verifying a candidate.
pub const UTILITY_TOL: f64 = 1e-8;
/// Default tolerance on best-response residuals.
pub const RESPONSE_TOL: f64 = 1e-6;

const VERIFY_RESOLUTION: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub g: f64,
    pub a: f64,
    /// `|g - β_g(a)|`.
    pub greedy_residual: f64,
    /// `|a - β_a(g)|`.
    pub vigilante_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashVerdict {
    pub exists: bool,
    /// Every fixed point found, ordered by `a`.
    pub equilibria: Vec<Equilibrium>,
    /// Scan cell in which the composed map jumps over the diagonal.
    pub gap: Option<(f64, f64)>,
}

impl NashVerdict {
    pub fn point(&self) -> Option<(f64, f64)> {
        self.equilibria.first().map(|e| (e.g, e.a))
    }

    pub fn report(&self) -> NashReport {
        let first = self.equilibria.first();
        NashReport {
            exists: self.exists,
            g: first.map(|e| e.g),
            a: first.map(|e| e.a),
            gap_lo: self.gap.map(|g| g.0),
            gap_hi: self.gap.map(|g| g.1),
            residuals: first.map(|e| Residuals {
                greedy: e.greedy_residual,
                vigilante: e.vigilante_residual,
            }),
        }
    }
}

/// Serialized form of a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashReport {
    pub exists: bool,
    pub g: Option<f64>,
    pub a: Option<f64>,
    pub gap_lo: Option<f64>,
    pub gap_hi: Option<f64>,
    pub residuals: Option<Residuals>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub greedy: f64,
    pub vigilante: f64,
}

pub fn find_nash(config: &GameConfig) -> Result<NashVerdict> {
    find_nash_with(config, NASH_SCAN)
}

/// [`find_nash`] with an explicit scan resolution over `a ∈ [0, 1)`.
pub fn find_nash_with(config: &GameConfig, resolution: usize) -> Result<NashVerdict> {
    if !config.is_single() {
        return Err(Error::Unsupported("analytic equilibrium search"));
    }
    let (lambda, rho) = (config.lambda()[0], config.rho()[0]);
    let excess = |a: f64| -> Result<f64> { Ok(beta_a(beta_g(a, lambda, config)?, rho, config)? - a) };

    let mut equilibria = Vec::new();
    let mut gap = None;
    let push = |a: f64, equilibria: &mut Vec<Equilibrium>| -> Result<()> {
        let g = beta_g(a, lambda, config)?;
        equilibria.push(Equilibrium {
            g,
            a,
            greedy_residual: 0.0,
            vigilante_residual: (beta_a(g, rho, config)? - a).abs(),
        });
        Ok(())
    };

    let step = 1.0 / resolution as f64;
    let mut prev_a = 0.0;
    let mut prev_d = excess(0.0)?;
    if prev_d == 0.0 {
        push(0.0, &mut equilibria)?;
    }
    for k in 1..resolution {
        let a = k as f64 * step;
        let d = excess(a)?;
        if d == 0.0 {
            push(a, &mut equilibria)?;
        } else if prev_d != 0.0 && prev_d.signum() != d.signum() {
            let (mut lo, mut hi) = (prev_a, a);
            let lo_sign = prev_d.signum();
            for _ in 0..200 {
                if hi - lo < 1e-14 {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                let dm = excess(mid)?;
                if dm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if dm.signum() == lo_sign {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let (dl, dh) = (excess(lo)?, excess(hi)?);
            let root = if dl.abs() <= dh.abs() { lo } else { hi };
            if dl.abs().min(dh.abs()) < RESPONSE_TOL {
                push(root, &mut equilibria)?;
            } else if gap.is_none() {
                gap = Some((prev_a, a));
            }
        }
        prev_a = a;
        prev_d = d;
    }
    Ok(NashVerdict { exists: !equilibria.is_empty(), equilibria, gap })
}

/// Checks that neither player can lower their cost by more than `tolerance`
/// through a unilateral deviation found on a fine oracle grid.
pub fn verify_nash(point: (f64, f64), config: &GameConfig, tolerance: f64) -> Result<bool> {
    if !config.is_single() {
        return Err(Error::Unsupported("equilibrium verification"));
    }
    let (g, a) = point;
    let (lambda, rho) = (config.lambda()[0], config.rho()[0]);
    let ug = greedy_cost(a, lambda, config);
    let ua = vigilante_cost(g, rho, config);
    let best_g = ug(oracle_argmin(&ug, VERIFY_RESOLUTION));
    let best_a = ua(oracle_argmin(&ua, VERIFY_RESOLUTION));
    Ok(ug(g) <= best_g + tolerance && ua(a) <= best_a + tolerance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::best_response::discontinuity_point;

    #[test]
    fn low_rho_has_an_equilibrium() {
        let cfg = GameConfig::single(10, 10.0, 0.001).unwrap();
        let v = find_nash(&cfg).unwrap();
        assert!(v.exists);
        assert_eq!(v.equilibria.len(), 1);
        let (g, a) = v.point().unwrap();
        assert!((g - 0.175).abs() < 1e-3 && (a - 0.429).abs() < 1e-3, "{g} {a}");
        assert!(verify_nash((g, a), &cfg, UTILITY_TOL).unwrap());
        let e = v.equilibria[0];
        assert!((g - beta_g(a, 10.0, &cfg).unwrap()).abs() < RESPONSE_TOL);
        assert!(e.vigilante_residual < RESPONSE_TOL);
    }

    #[test]
    fn higher_rho_has_none() {
        let cfg = GameConfig::single(10, 10.0, 0.01).unwrap();
        let v = find_nash(&cfg).unwrap();
        assert!(!v.exists);
        let (lo, hi) = v.gap.unwrap();
        let a_plus = discontinuity_point(10.0, &cfg).unwrap();
        assert!(lo <= a_plus && a_plus <= hi);
        let report = v.report();
        assert_eq!(report.g, None);
        assert_eq!(report.gap_lo, Some(lo));
    }

    #[test]
    fn huge_penalty_pins_vigilante() {
        let cfg = GameConfig::single(10, 10.0, 1e9).unwrap();
        let v = find_nash(&cfg).unwrap();
        let (g, a) = v.point().unwrap();
        assert!((g - 1.0).abs() < 1e-9 && (a - 0.1).abs() < 1e-6, "{g} {a}");
        assert!(verify_nash((1.0, 0.1), &cfg, UTILITY_TOL).unwrap());
    }

    #[test]
    fn arbitrary_point_is_not_an_equilibrium() {
        let cfg = GameConfig::single(10, 10.0, 0.001).unwrap();
        assert!(!verify_nash((0.5, 0.5), &cfg, UTILITY_TOL).unwrap());
    }

    #[test]
    fn verdict_stable_under_finer_scan() {
        for rho in [0.001, 0.01, 0.005, 0.05] {
            let cfg = GameConfig::single(10, 10.0, rho).unwrap();
            let a = find_nash_with(&cfg, 10_000).unwrap();
            let b = find_nash_with(&cfg, 20_000).unwrap();
            assert_eq!(a.exists, b.exists);
            if let (Some(p), Some(q)) = (a.point(), b.point()) {
                assert!((p.0 - q.0).abs() < 1e-4 && (p.1 - q.1).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn report_serializes() {
        let cfg = GameConfig::single(10, 10.0, 0.001).unwrap();
        let json = serde_json::to_value(find_nash(&cfg).unwrap().report()).unwrap();
        for key in ["exists", "g", "a", "gap_lo", "gap_hi", "residuals"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn multi_player_is_rejected() {
        let cfg = GameConfig::new(10, vec![10.0, 10.0], vec![0.01], Default::default()).unwrap();
        assert!(matches!(find_nash(&cfg), Err(Error::Unsupported(_))));
    }
}
