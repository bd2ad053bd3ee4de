//! Game quantities: configuration, strategy profiles, throughputs, fair
//! baselines, utilities and the vigilante's greedy-rate estimator.
//!
//! Players are laid out as `M` greedy players, then `V` vigilantes, then
//! `N - M - V` cooperative players who always transmit with probability `1/N`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which exponent the vigilante's fair throughput target uses.
///
/// `AsPrinted` is `(1/N)(1 - 1/N)^N`; `Fair` is `(1/N)(1 - 1/N)^(N-1)`, the
/// per-player rate when everyone transmits at `1/N`. `Fair` reproduces the
/// reference fixed points and eigenvalues of the gradient flow and is the
/// default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phi0Convention {
    AsPrinted,
    #[default]
    Fair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    n_total: usize,
    lambda: Vec<f64>,
    rho: Vec<f64>,
    phi0_exponent: Phi0Convention,
}

impl GameConfig {
    /// `lambda` holds one penalty weight per greedy player and `rho` one per
    /// vigilante, so their lengths fix `M` and `V`.
    pub fn new(
        n_total: usize,
        lambda: Vec<f64>,
        rho: Vec<f64>,
        phi0_exponent: Phi0Convention,
    ) -> Result<Self> {
        let m = lambda.len();
        let v = rho.len();
        if m == 0 {
            return Err(Error::InvalidConfig("at least one greedy player is required".into()));
        }
        if v == 0 {
            return Err(Error::InvalidConfig("at least one vigilante is required".into()));
        }
        if n_total < 3 {
            return Err(Error::InvalidConfig(format!("N = {n_total} must be at least 3")));
        }
        if n_total < m + v + 1 {
            return Err(Error::InvalidConfig(format!(
                "N = {n_total} leaves no cooperative player with M = {m}, V = {v}"
            )));
        }
        if let Some(l) = lambda.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(Error::InvalidConfig(format!("lambda = {l} must be finite and >= 0")));
        }
        if let Some(r) = rho.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return Err(Error::InvalidConfig(format!("rho = {r} must be finite and >= 0")));
        }
        Ok(Self { n_total, lambda, rho, phi0_exponent })
    }

    /// One greedy player, one vigilante, `Fair` target convention.
    pub fn single(n_total: usize, lambda: f64, rho: f64) -> Result<Self> {
        Self::new(n_total, vec![lambda], vec![rho], Phi0Convention::Fair)
    }

    pub fn with_convention(mut self, convention: Phi0Convention) -> Self {
        self.phi0_exponent = convention;
        self
    }

    pub fn n(&self) -> usize {
        self.n_total
    }

    pub fn n_greedy(&self) -> usize {
        self.lambda.len()
    }

    pub fn n_vigilante(&self) -> usize {
        self.rho.len()
    }

    pub fn n_cooperative(&self) -> usize {
        self.n_total - self.n_greedy() - self.n_vigilante()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn convention(&self) -> Phi0Convention {
        self.phi0_exponent
    }

    pub fn is_single(&self) -> bool {
        self.n_greedy() == 1 && self.n_vigilante() == 1
    }

    /// Cooperative access probability `1/N`.
    pub fn fair_rate(&self) -> f64 {
        1.0 / self.n_total as f64
    }

    /// `(1 - 1/N)^k`.
    pub(crate) fn idle_pow(&self, k: i32) -> f64 {
        (1.0 - self.fair_rate()).powi(k)
    }

    /// `c = (1 - 1/N)^(N-2)`.
    pub fn c(&self) -> f64 {
        self.idle_pow(self.n_total as i32 - 2)
    }

    pub fn baselines(&self) -> FairBaselines {
        fair_baselines(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub greedy: Vec<f64>,
    pub vigilante: Vec<f64>,
}

impl StrategyProfile {
    pub fn new(greedy: Vec<f64>, vigilante: Vec<f64>) -> Result<Self> {
        let p = Self { greedy, vigilante };
        p.validate()?;
        Ok(p)
    }

    pub fn single(g: f64, a: f64) -> Result<Self> {
        Self::new(vec![g], vec![a])
    }

    /// Everybody at `1/N`.
    pub fn fair(config: &GameConfig) -> Self {
        let q = config.fair_rate();
        Self {
            greedy: vec![q; config.n_greedy()],
            vigilante: vec![q; config.n_vigilante()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in self
            .greedy
            .iter()
            .map(|v| ("g", v))
            .chain(self.vigilante.iter().map(|v| ("a", v)))
        {
            if !(0.0..=1.0).contains(v) {
                return Err(Error::InvalidProfile(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn check_shape(&self, config: &GameConfig) -> Result<()> {
        if self.greedy.len() != config.n_greedy() || self.vigilante.len() != config.n_vigilante() {
            return Err(Error::InvalidProfile(format!(
                "profile has {} greedy / {} vigilante entries, config expects {} / {}",
                self.greedy.len(),
                self.vigilante.len(),
                config.n_greedy(),
                config.n_vigilante()
            )));
        }
        self.validate()
    }

    pub fn q_coop(&self, config: &GameConfig) -> f64 {
        config.fair_rate()
    }

    /// Full per-player access vector: greedy, vigilantes, then cooperative players.
    pub fn access_vector(&self, config: &GameConfig) -> Vec<f64> {
        let mut q = Vec::with_capacity(config.n());
        q.extend_from_slice(&self.greedy);
        q.extend_from_slice(&self.vigilante);
        q.resize(config.n(), config.fair_rate());
        q
    }

    /// Max-norm distance over all strategic components.
    pub fn max_abs_diff(&self, other: &StrategyProfile) -> f64 {
        self.components()
            .zip(other.components())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    pub fn components(&self) -> impl Iterator<Item = f64> + '_ {
        self.greedy.iter().chain(self.vigilante.iter()).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairBaselines {
    /// Greedy target throughput.
    pub theta0: f64,
    /// Vigilante's fair throughput target.
    pub phi0: f64,
    /// `(1 - 1/N)^(N-2)`.
    pub c: f64,
}

/// Probability that player `i` alone accesses the resource in a slot.
pub fn access_prob(q: &[f64], i: usize) -> Result<f64> {
    let qi = *q.get(i).ok_or(Error::IndexOutOfRange { index: i, len: q.len() })?;
    let others: f64 = q
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, qj)| 1.0 - qj)
        .product();
    Ok(qi * others)
}

pub fn fair_baselines(config: &GameConfig) -> FairBaselines {
    let n = config.n() as i32;
    let phi_exp = match config.convention() {
        Phi0Convention::AsPrinted => n,
        Phi0Convention::Fair => n - 1,
    };
    FairBaselines {
        theta0: config.idle_pow(n - 1),
        phi0: config.fair_rate() * config.idle_pow(phi_exp),
        c: config.c(),
    }
}

/// Greedy throughput with one greedy player and one vigilante.
pub fn theta(g: f64, a: f64, config: &GameConfig) -> f64 {
    g * (1.0 - a) * config.c()
}

/// Vigilante throughput; the mirror image of [`theta`].
pub fn phi(g: f64, a: f64, config: &GameConfig) -> f64 {
    theta(a, g, config)
}

/// Throughput of each cooperative player in the one-greedy/one-vigilante game.
pub fn coop_throughput(g: f64, a: f64, config: &GameConfig) -> f64 {
    config.fair_rate() * (1.0 - a) * (1.0 - g) * config.idle_pow(config.n() as i32 - 3)
}

/// Probability `X_i` that everyone except greedy player `i` is silent, so that
/// greedy player `i` gets throughput `g_i * X_i`.
pub fn clearance(profile: &StrategyProfile, config: &GameConfig, i: usize) -> Result<f64> {
    let m = profile.greedy.len();
    if i >= m {
        return Err(Error::IndexOutOfRange { index: i, len: m });
    }
    let others: f64 = profile
        .greedy
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != i)
        .map(|(_, g)| 1.0 - g)
        .product();
    let vig: f64 = profile.vigilante.iter().map(|a| 1.0 - a).product();
    Ok(others * vig * config.idle_pow(config.n_cooperative() as i32))
}

/// Probability that everyone except vigilante `j` is silent.
pub fn vigilante_clearance(profile: &StrategyProfile, config: &GameConfig, j: usize) -> Result<f64> {
    let v = profile.vigilante.len();
    if j >= v {
        return Err(Error::IndexOutOfRange { index: j, len: v });
    }
    let greedy: f64 = profile.greedy.iter().map(|g| 1.0 - g).product();
    let others: f64 = profile
        .vigilante
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != j)
        .map(|(_, a)| 1.0 - a)
        .product();
    Ok(greedy * others * config.idle_pow(config.n_cooperative() as i32))
}

pub fn theta_multi(profile: &StrategyProfile, config: &GameConfig, i: usize) -> Result<f64> {
    let x = clearance(profile, config, i)?;
    Ok(profile.greedy[i] * x)
}

/// True throughput of vigilante `j` in a multi-player profile.
pub fn phi_multi(profile: &StrategyProfile, config: &GameConfig, j: usize) -> Result<f64> {
    let x = vigilante_clearance(profile, config, j)?;
    Ok(profile.vigilante[j] * x)
}

/// Per-player throughput of each cooperative player in a multi-player profile.
pub fn coop_throughput_multi(profile: &StrategyProfile, config: &GameConfig) -> f64 {
    let greedy: f64 = profile.greedy.iter().map(|g| 1.0 - g).product();
    let vig: f64 = profile.vigilante.iter().map(|a| 1.0 - a).product();
    config.fair_rate() * greedy * vig * config.idle_pow(config.n_cooperative() as i32 - 1)
}

/// Greedy cost `(gX - Θ₀)² (1 + λ(g - 1/N)²)` for clearance `x`.
pub fn utility_g(g: f64, x: f64, lambda: f64, config: &GameConfig) -> f64 {
    let theta0 = config.baselines().theta0;
    let e = g * x - theta0;
    let u = g - config.fair_rate();
    e * e * (1.0 + lambda * u * u)
}

/// Vigilante cost `(θ - Φ₀)² + ρ(a - 1/N)²`. `theta_val` may be the true greedy
/// throughput or the vigilante's believed one.
pub fn utility_a(theta_val: f64, a: f64, rho: f64, config: &GameConfig) -> f64 {
    let d = theta_val - config.baselines().phi0;
    let u = a - config.fair_rate();
    d * d + rho * u * u
}

/// Invert the vigilante's observed throughput into a greedy access estimate,
/// assuming a single greedy player and cooperative players at `1/N`.
pub fn estimate_g(phi_hat: f64, a: f64, config: &GameConfig) -> Result<f64> {
    if a <= 0.0 {
        return Err(Error::UndefinedEstimate);
    }
    let expected = a * config.c();
    Ok(((expected - phi_hat) / expected).clamp(0.0, 1.0))
}

/// The vigilante's belief about the greedy throughput given her estimate `g_hat`.
pub fn theta_believed(g_hat: f64, a: f64, config: &GameConfig) -> f64 {
    theta(g_hat, a, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg10() -> GameConfig {
        GameConfig::single(10, 10.0, 0.001).unwrap()
    }

    #[test]
    fn config_invariants() {
        assert!(GameConfig::single(2, 1.0, 1.0).is_err());
        assert!(GameConfig::new(4, vec![1.0, 1.0], vec![1.0, 1.0], Phi0Convention::Fair).is_err());
        assert!(GameConfig::new(5, vec![1.0, 1.0], vec![1.0, 1.0], Phi0Convention::Fair).is_ok());
        assert!(GameConfig::single(10, -1.0, 1.0).is_err());
        assert!(GameConfig::single(10, 1.0, f64::NAN).is_err());
        assert!(GameConfig::new(10, vec![], vec![1.0], Phi0Convention::Fair).is_err());
    }

    #[test]
    fn access_prob_examples() {
        assert_eq!(access_prob(&[1.0, 0.0, 0.0], 0).unwrap(), 1.0);
        assert_eq!(access_prob(&[0.5, 0.5], 0).unwrap(), 0.25);
        assert_eq!(access_prob(&[0.0, 0.3, 0.9], 0).unwrap(), 0.0);
        assert_eq!(
            access_prob(&[0.5], 3),
            Err(Error::IndexOutOfRange { index: 3, len: 1 })
        );
    }

    #[test]
    fn baselines_n10() {
        let b = fair_baselines(&cfg10().with_convention(Phi0Convention::AsPrinted));
        assert!((b.theta0 - 0.387_420_489).abs() < 1e-9);
        assert!((b.phi0 - 0.034_867_844_01).abs() < 1e-10);
        assert!((b.c - 0.430_467_21).abs() < 1e-9);
        let f = fair_baselines(&cfg10());
        assert!((f.phi0 - 0.038_742_048_9).abs() < 1e-10);
        for n in 3..40 {
            let b = GameConfig::single(n, 1.0, 1.0).unwrap().baselines();
            assert!(0.0 < b.phi0 && b.phi0 < b.theta0 && b.theta0 < 1.0);
        }
    }

    #[test]
    fn throughput_examples() {
        let cfg = cfg10();
        assert_eq!(theta(0.0, 0.4, &cfg), 0.0);
        assert_eq!(theta(1.0, 1.0, &cfg), 0.0);
        assert!((theta(1.0, 0.1, &cfg) - cfg.baselines().theta0).abs() < 1e-15);
        assert_eq!(phi(0.3, 0.0, &cfg), 0.0);
        assert!((phi(0.5, 0.5, &cfg) - 0.107_616_802_5).abs() < 1e-9);
        assert_eq!(coop_throughput(1.0, 0.2, &cfg), 0.0);
        assert_eq!(coop_throughput(0.2, 1.0, &cfg), 0.0);
        let fair = 0.1 * 0.9f64.powi(9);
        assert!((coop_throughput(0.1, 0.1, &cfg) - fair).abs() < 1e-15);
        assert!((fair - 0.038_742).abs() < 1e-6);
    }

    #[test]
    fn phi_is_mirrored_theta_on_grid() {
        let cfg = cfg10();
        for i in 0..100 {
            for j in 0..100 {
                let (g, a) = (i as f64 / 99.0, j as f64 / 99.0);
                assert_eq!(phi(g, a, &cfg), theta(a, g, &cfg));
            }
        }
    }

    #[test]
    fn clearance_examples() {
        let cfg = cfg10();
        let p = StrategyProfile::single(0.6, 0.3).unwrap();
        let x = clearance(&p, &cfg, 0).unwrap();
        assert!((x - 0.7 * cfg.c()).abs() < 1e-15);
        assert!((x - 0.301_327).abs() < 1e-6);
        let jammed = StrategyProfile::single(0.6, 1.0).unwrap();
        assert_eq!(clearance(&jammed, &cfg, 0).unwrap(), 0.0);

        let cfg2 = GameConfig::new(10, vec![10.0, 10.0], vec![0.01], Phi0Convention::Fair).unwrap();
        // A second greedy player sitting at 1/N is indistinguishable from a cooperative one.
        let p2 = StrategyProfile::new(vec![0.6, 0.1], vec![0.3]).unwrap();
        let x2 = clearance(&p2, &cfg2, 0).unwrap();
        assert!((x2 - x).abs() < 1e-15);
        // A silent one frees the slot a cooperative player would have used.
        let silent = StrategyProfile::new(vec![0.6, 0.0], vec![0.3]).unwrap();
        assert!((clearance(&silent, &cfg2, 0).unwrap() - x / 0.9).abs() < 1e-15);
    }

    #[test]
    fn theta_multi_examples() {
        let cfg2 = GameConfig::new(10, vec![10.0, 10.0], vec![0.01], Phi0Convention::Fair).unwrap();
        let p = StrategyProfile::new(vec![0.5, 0.5], vec![0.1]).unwrap();
        let t = theta_multi(&p, &cfg2, 0).unwrap();
        assert!((t - 0.5 * 0.9 * 0.5 * 0.9f64.powi(7)).abs() < 1e-15);
        assert!((t - 0.107_617).abs() < 1e-6);
        let p0 = StrategyProfile::new(vec![0.0, 0.5], vec![0.1]).unwrap();
        assert_eq!(theta_multi(&p0, &cfg2, 0).unwrap(), 0.0);
        assert!(theta_multi(&p, &cfg2, 2).is_err());
    }

    #[test]
    fn utility_examples() {
        let cfg = cfg10();
        let b = cfg.baselines();
        // g = Θ₀/X lands exactly on the target.
        let x = 0.5 * b.c;
        let g = b.theta0 / x;
        assert!(g > 1.0);
        let x = 0.95 * b.c;
        let g = b.theta0 / x;
        assert!(g <= 1.0);
        assert!(utility_g(g, x, 10.0, &cfg) < 1e-30);
        let v = utility_g(1.0, b.c, 0.0, &cfg);
        assert!((v - (b.c - b.theta0).powi(2)).abs() < 1e-16);
        assert!((v - 0.001_853).abs() < 1e-6);
        let xs = b.theta0 / 0.1;
        assert!(utility_g(0.1, xs, 3.0, &cfg).abs() < 1e-28);

        assert_eq!(utility_a(b.phi0, 0.1, 5.0, &cfg), 0.0);
        assert_eq!(utility_a(b.phi0, 0.7, 0.0, &cfg), 0.0);
        let printed = cfg.clone().with_convention(Phi0Convention::AsPrinted);
        let pb = printed.baselines();
        let u = utility_a(pb.theta0, 0.1, 123.0, &printed);
        assert!((u - (pb.theta0 - pb.phi0).powi(2)).abs() < 1e-15);
        assert!((u - 0.124_293).abs() < 1e-6);
    }

    #[test]
    fn estimate_g_examples() {
        let cfg = cfg10();
        let c = cfg.c();
        assert_eq!(estimate_g(0.4 * c, 0.4, &cfg).unwrap(), 0.0);
        assert_eq!(estimate_g(0.0, 0.4, &cfg).unwrap(), 1.0);
        let g = estimate_g(phi(0.4, 0.3, &cfg), 0.3, &cfg).unwrap();
        assert!((g - 0.4).abs() < 1e-12);
        assert_eq!(estimate_g(0.1, 0.0, &cfg), Err(Error::UndefinedEstimate));
        // Observed throughput above the fair expectation clamps to zero.
        assert_eq!(estimate_g(0.9, 0.5, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn access_vector_layout() {
        let cfg = GameConfig::new(6, vec![1.0, 1.0], vec![1.0], Phi0Convention::Fair).unwrap();
        let p = StrategyProfile::new(vec![0.2, 0.3], vec![0.4]).unwrap();
        let q = p.access_vector(&cfg);
        assert_eq!(q.len(), 6);
        assert_eq!(&q[..3], &[0.2, 0.3, 0.4]);
        assert!(q[3..].iter().all(|&x| x == 1.0 / 6.0));
        // Closed forms agree with the generic product formula.
        assert!((theta_multi(&p, &cfg, 1).unwrap() - access_prob(&q, 1).unwrap()).abs() < 1e-15);
        assert!((phi_multi(&p, &cfg, 0).unwrap() - access_prob(&q, 2).unwrap()).abs() < 1e-15);
        assert!((coop_throughput_multi(&p, &cfg) - access_prob(&q, 4).unwrap()).abs() < 1e-15);
    }

    fn multi_cfg() -> impl Strategy<Value = (GameConfig, StrategyProfile)> {
        (1usize..4, 1usize..4, 0usize..6).prop_flat_map(|(m, v, extra)| {
            let n = m + v + 1 + extra.max(if m + v + 1 < 3 { 3 - (m + v + 1) } else { 0 });
            (
                prop::collection::vec(0.0f64..=1.0, m),
                prop::collection::vec(0.0f64..=1.0, v),
            )
                .prop_map(move |(g, a)| {
                    let cfg = GameConfig::new(n, vec![1.0; m], vec![1.0; v], Phi0Convention::Fair)
                        .unwrap();
                    (cfg, StrategyProfile::new(g, a).unwrap())
                })
        })
    }

    proptest! {
        #[test]
        fn utilities_nonnegative(g in 0.0f64..=1.0, a in 0.0f64..=1.0, lam in 0.0f64..100.0, rho in 0.0f64..10.0) {
            let cfg = cfg10();
            prop_assert!(utility_g(g, (1.0 - a) * cfg.c(), lam, &cfg) >= 0.0);
            prop_assert!(utility_a(theta(g, a, &cfg), a, rho, &cfg) >= 0.0);
        }

        #[test]
        fn estimate_round_trip(g in 0.0f64..=1.0, a in 1e-6f64..=1.0) {
            let cfg = cfg10();
            let est = estimate_g(phi(g, a, &cfg), a, &cfg).unwrap();
            prop_assert!((est - g).abs() < 1e-12);
        }

        #[test]
        fn successes_are_disjoint((cfg, p) in multi_cfg()) {
            let mut total = 0.0;
            for i in 0..cfg.n_greedy() { total += theta_multi(&p, &cfg, i).unwrap(); }
            for j in 0..cfg.n_vigilante() { total += phi_multi(&p, &cfg, j).unwrap(); }
            total += cfg.n_cooperative() as f64 * coop_throughput_multi(&p, &cfg);
            prop_assert!(total <= 1.0 + 1e-12);
        }

        #[test]
        fn extra_vigilantes_inflate_the_estimate(
            g in 0.0f64..=1.0,
            a in prop::collection::vec(0.1f64..=1.0, 2..4),
        ) {
            let v = a.len();
            let cfg = GameConfig::new(10, vec![10.0], vec![0.1; v], Phi0Convention::Fair).unwrap();
            let p = StrategyProfile::new(vec![g], a.clone()).unwrap();
            for j in 0..v {
                let est = estimate_g(phi_multi(&p, &cfg, j).unwrap(), a[j], &cfg).unwrap();
                prop_assert!(est >= g - 1e-12);
            }
        }

        #[test]
        fn theta_multi_reduces_to_theta(g in 0.0f64..=1.0, a in 0.0f64..=1.0) {
            let cfg = cfg10();
            let p = StrategyProfile::single(g, a).unwrap();
            prop_assert!((theta_multi(&p, &cfg, 0).unwrap() - theta(g, a, &cfg)).abs() < 1e-15);
            prop_assert!((phi_multi(&p, &cfg, 0).unwrap() - phi(g, a, &cfg)).abs() < 1e-15);
        }
    }
}
