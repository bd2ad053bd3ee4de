//! Slotted random-access channel.
//!
//! Every slot each player transmits independently with their access
//! probability; the slot succeeds for a player iff they were the only one
//! transmitting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::model::{estimate_g, GameConfig, StrategyProfile};

/// Per-slot transmitter record, stored as a flattened slot index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelTrace {
    seed: u64,
    n_players: usize,
    slot_start: Vec<u32>,
    transmitters: Vec<u16>,
}

impl ChannelTrace {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn slots(&self) -> usize {
        self.slot_start.len() - 1
    }

    pub fn n_players(&self) -> usize {
        self.n_players
    }

    pub fn transmitters(&self, slot: usize) -> &[u16] {
        let lo = self.slot_start[slot] as usize;
        let hi = self.slot_start[slot + 1] as usize;
        &self.transmitters[lo..hi]
    }

    /// The successful player of a slot, if exactly one transmitted.
    pub fn success(&self, slot: usize) -> Option<usize> {
        match self.transmitters(slot) {
            [only] => Some(*only as usize),
            _ => None,
        }
    }

    pub fn summary(&self) -> ChannelSummary {
        let mut s = ChannelSummary::empty(self.n_players);
        for slot in 0..self.slots() {
            s.record(self.transmitters(slot).iter().map(|&p| p as usize));
        }
        s
    }
}

/// Per-player transmit and success counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelSummary {
    pub slots: u64,
    pub transmits: Vec<u64>,
    pub successes: Vec<u64>,
}

impl ChannelSummary {
    fn empty(n_players: usize) -> Self {
        Self { slots: 0, transmits: vec![0; n_players], successes: vec![0; n_players] }
    }

    fn record<I: Iterator<Item = usize>>(&mut self, senders: I) {
        self.slots += 1;
        let mut count = 0;
        let mut last = 0;
        for p in senders {
            self.transmits[p] += 1;
            count += 1;
            last = p;
        }
        if count == 1 {
            self.successes[last] += 1;
        }
    }

    pub fn rate(&self, player: usize) -> f64 {
        if self.slots == 0 {
            return 0.0;
        }
        self.successes[player] as f64 / self.slots as f64
    }

    /// Writes `player,transmits,successes,rate` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "player,transmits,successes,rate")?;
        for p in 0..self.transmits.len() {
            writeln!(w, "{},{},{},{}", p, self.transmits[p], self.successes[p], self.rate(p))?;
        }
        Ok(())
    }
}

fn check_access(q: &[f64]) -> Result<()> {
    if q.len() > u16::MAX as usize {
        return Err(Error::InvalidParams(format!("{} players exceed the channel limit", q.len())));
    }
    match q.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        Some(p) => Err(Error::InvalidProfile(format!("access probability {p} is outside [0, 1]"))),
        None => Ok(()),
    }
}

/// One slot's transmit decisions, in player order.
fn draw_slot<'a, R: Rng>(q: &'a [f64], rng: &'a mut R) -> impl Iterator<Item = usize> + 'a {
    q.iter().enumerate().filter_map(move |(p, &qp)| (rng.random::<f64>() < qp).then_some(p))
}

/// Simulates `slots` slots for the raw access vector `q`.
pub fn simulate_access(q: &[f64], slots: usize, seed: u64) -> Result<ChannelTrace> {
    check_access(q)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slot_start = Vec::with_capacity(slots + 1);
    let mut transmitters = Vec::new();
    slot_start.push(0u32);
    for _ in 0..slots {
        transmitters.extend(draw_slot(q, &mut rng).map(|p| p as u16));
        let end = u32::try_from(transmitters.len())
            .map_err(|_| Error::InvalidParams("trace too long to index".into()))?;
        slot_start.push(end);
    }
    Ok(ChannelTrace { seed, n_players: q.len(), slot_start, transmitters })
}

/// Simulates a strategy profile; player order is greedy, vigilantes, cooperative.
pub fn simulate(
    profile: &StrategyProfile,
    config: &GameConfig,
    slots: usize,
    seed: u64,
) -> Result<ChannelTrace> {
    profile.check_shape(config)?;
    simulate_access(&profile.access_vector(config), slots, seed)
}

/// Streams `slots` slots from `rng` and keeps only the counts. Consumes the
/// generator exactly as [`simulate_access`] does, so equal seeds give equal counts.
pub fn simulate_counts<R: Rng>(q: &[f64], slots: u64, rng: &mut R) -> Result<ChannelSummary> {
    check_access(q)?;
    let mut s = ChannelSummary::empty(q.len());
    for _ in 0..slots {
        let senders: Vec<usize> = draw_slot(q, rng).collect();
        s.record(senders.into_iter());
    }
    Ok(s)
}

/// Fraction of slots won by `player`.
pub fn empirical_throughput(trace: &ChannelTrace, player: usize) -> Result<f64> {
    if player >= trace.n_players() {
        return Err(Error::IndexOutOfRange { index: player, len: trace.n_players() });
    }
    if trace.slots() == 0 {
        return Err(Error::InvalidParams("empty trace".into()));
    }
    let wins = (0..trace.slots()).filter(|&s| trace.success(s) == Some(player)).count();
    Ok(wins as f64 / trace.slots() as f64)
}

/// Vigilante `vigilante`'s greedy-rate estimate from her measured throughput.
pub fn estimate_g_empirical(
    trace: &ChannelTrace,
    vigilante: usize,
    profile: &StrategyProfile,
    config: &GameConfig,
) -> Result<f64> {
    let a = *profile
        .vigilante
        .get(vigilante)
        .ok_or(Error::IndexOutOfRange { index: vigilante, len: profile.vigilante.len() })?;
    let phi_hat = empirical_throughput(trace, config.n_greedy() + vigilante)?;
    estimate_g(phi_hat, a, config)
}

/// Seeded generator used throughout the crate.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
