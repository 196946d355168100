//! Bit-exact simulation of the deterministic channel model.
//!
//! Uplink: the relay receives `q = max_i n_{i4}` levels; user i's transmit
//! level l lands on received level `q - n_{i4} + l` and overlapping bits add
//! over GF(2). Downlink: user i hears the top `n_{4i}` levels of the relay's
//! transmit vector.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::coding::{Carrier, FullScheme, Slot, TransmissionScheme};
use crate::model::{ChannelGains, Flow, RateTuple, User};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("node {node} transmits {got} levels but its channel has {expected}")]
    LengthMismatch { node: User, expected: u32, got: u32 },
    #[error("{slot} uses level {level}, outside the {len} available")]
    LevelOutOfRange { slot: Slot, level: u32, len: u32 },
    #[error("scheme was built for {built} but simulated on {given}")]
    SchemeMismatch { built: ChannelGains, given: ChannelGains },
    #[error("message {flow} bit {index} decoded wrongly")]
    DecodeFailure { flow: Flow, index: u32 },
}

/// Fixed-length GF(2) vector; level 1 is the most significant.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize)]
pub struct BitVector(Vec<bool>);

impl BitVector {
    pub fn zeros(len: u32) -> Self {
        BitVector(vec![false; len as usize])
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        BitVector(bits.to_vec())
    }

    pub fn len(&self) -> u32 {
        self.0.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Panics when `level` is 0 or beyond the length.
    pub fn get(&self, level: u32) -> bool {
        self.0[level as usize - 1]
    }

    pub fn set(&mut self, level: u32, bit: bool) {
        self.0[level as usize - 1] = bit;
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn xor(&self, other: &BitVector) -> BitVector {
        assert_eq!(self.len(), other.len(), "xor of unequal lengths");
        BitVector(self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect())
    }

    /// Top `n` levels.
    pub fn top(&self, n: u32) -> BitVector {
        BitVector(self.0[..(n as usize).min(self.0.len())].to_vec())
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Superposes the three users' transmit vectors at the relay.
pub fn uplink_receive(transmit: &[BitVector; 3], gains: &ChannelGains) -> Result<BitVector, SimError> {
    let q = gains.relay_rx_len();
    let mut rx = BitVector::zeros(q);
    for user in User::ALL {
        let tx = &transmit[user.index()];
        let n = gains.up(user);
        if tx.len() != n {
            return Err(SimError::LengthMismatch {
                node: user,
                expected: n,
                got: tx.len(),
            });
        }
        let offset = q - n;
        for l in 1..=n {
            if tx.get(l) {
                let p = offset + l;
                rx.set(p, !rx.get(p));
            }
        }
    }
    Ok(rx)
}

/// What `node` hears of the relay's transmission.
pub fn downlink_receive(relay_transmit: &BitVector, gains: &ChannelGains, node: User) -> BitVector {
    relay_transmit.top(gains.down(node))
}

/// Random message bits for every positive-rate flow.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MessageSet {
    pub seed: u64,
    pub bits: BTreeMap<Flow, Vec<bool>>,
}

impl MessageSet {
    pub fn random(rates: &RateTuple, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits = RateTuple::FLOWS
            .iter()
            .filter(|f| rates.get(**f) > 0)
            .map(|&f| (f, (0..rates.get(f)).map(|_| rng.gen::<bool>()).collect()))
            .collect();
        MessageSet { seed, bits }
    }

    pub fn zeros(rates: &RateTuple) -> Self {
        let bits = RateTuple::FLOWS
            .iter()
            .filter(|f| rates.get(**f) > 0)
            .map(|&f| (f, vec![false; rates.get(f) as usize]))
            .collect();
        MessageSet { seed: 0, bits }
    }

    pub fn get(&self, flow: Flow) -> &[bool] {
        self.bits.get(&flow).map_or(&[], Vec::as_slice)
    }

    /// Bitwise XOR of two message sets over the same rates.
    pub fn xor(&self, other: &MessageSet) -> MessageSet {
        let bits = self
            .bits
            .iter()
            .map(|(f, a)| {
                let b = other.get(*f);
                (*f, a.iter().zip(b).map(|(x, y)| x ^ y).collect())
            })
            .collect();
        MessageSet { seed: 0, bits }
    }
}

/// Every intermediate signal of one uplink/downlink round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockTrace {
    pub transmit: [BitVector; 3],
    pub relay_rx: BitVector,
    pub relay_tx: BitVector,
    pub received: [BitVector; 3],
}

/// Bit value on each slot; missing slots carry 0.
pub type SlotValues = BTreeMap<Slot, bool>;

/// Runs one round of `scheme` with the given slot payload and returns the
/// signals together with every slot as decoded at its destination.
pub fn run_block(scheme: &TransmissionScheme, payload: &SlotValues) -> Result<(BlockTrace, SlotValues), SimError> {
    let ch = &scheme.channel;
    let value = |s: &Slot| payload.get(s).copied().unwrap_or(false);

    let mut transmit: [BitVector; 3] = User::ALL.map(|u| BitVector::zeros(ch.up(u)));
    for user in User::ALL {
        let n = ch.up(user);
        for b in &scheme.uplink_placement[user.index()] {
            if b.level == 0 || b.level > n {
                return Err(SimError::LevelOutOfRange {
                    slot: b.slot,
                    level: b.level,
                    len: n,
                });
            }
            transmit[user.index()].set(b.level, value(&b.slot));
        }
    }
    let relay_rx = uplink_receive(&transmit, ch)?;

    let mut decoded = SlotValues::new();
    for r in &scheme.relay_decode {
        decoded.insert(r.slot, relay_rx.get(r.level));
    }

    let q_tx = ch.relay_tx_len();
    let mut relay_tx = BitVector::zeros(q_tx);
    for f in &scheme.relay_map {
        if f.tx_level == 0 || f.tx_level > q_tx || f.rx_level == 0 || f.rx_level > relay_rx.len() {
            return Err(SimError::LevelOutOfRange {
                slot: f.content.slots()[0],
                level: f.tx_level,
                len: q_tx,
            });
        }
        relay_tx.set(f.tx_level, relay_rx.get(f.rx_level));
    }
    for r in &scheme.relay_insert {
        if r.level == 0 || r.level > q_tx {
            return Err(SimError::LevelOutOfRange {
                slot: r.slot,
                level: r.level,
                len: q_tx,
            });
        }
        relay_tx.set(r.level, value(&r.slot));
    }

    let received = User::ALL.map(|u| downlink_receive(&relay_tx, ch, u));
    for user in User::ALL {
        let rx = &received[user.index()];
        for d in &scheme.downlink_decode[user.index()] {
            if d.rx_level == 0 || d.rx_level > rx.len() {
                return Err(SimError::LevelOutOfRange {
                    slot: d.slot,
                    level: d.rx_level,
                    len: rx.len(),
                });
            }
            let bit = d.side_info.iter().fold(rx.get(d.rx_level), |acc, s| acc ^ value(s));
            decoded.insert(d.slot, bit);
        }
    }

    Ok((
        BlockTrace {
            transmit,
            relay_rx,
            relay_tx,
            received,
        },
        decoded,
    ))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MessageOutcome {
    pub flow: Flow,
    pub sent: String,
    pub decoded: String,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecodeReport {
    pub seed: u64,
    pub rounds: u32,
    pub messages: Vec<MessageOutcome>,
}

impl DecodeReport {
    pub fn all_ok(&self) -> bool {
        self.messages.iter().all(|m| m.ok)
    }
}

fn bit_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Slot payload of the first round: every message bit on its first carrier.
pub fn first_round_payload(full: &FullScheme, messages: &MessageSet) -> SlotValues {
    let mut payload = SlotValues::new();
    for (&flow, bits) in &messages.bits {
        for (k, &bit) in bits.iter().enumerate() {
            let slot = match full.carrier(flow, k as u32) {
                Carrier::Direct(s) => s,
                Carrier::Detoured { first, .. } => first,
            };
            payload.insert(slot, bit);
        }
    }
    payload
}

/// Sends every message through `full` and checks each bit arrives intact.
///
/// Detoured bits need a second round: the midpoint forwards in round two
/// what it decoded in round one, with all other payload silent.
pub fn run_end_to_end(gains: &ChannelGains, full: &FullScheme, messages: &MessageSet) -> Result<DecodeReport, SimError> {
    if full.gains != *gains {
        return Err(SimError::SchemeMismatch {
            built: full.gains,
            given: *gains,
        });
    }
    let (_, first) = run_block(&full.scheme, &first_round_payload(full, messages))?;

    let mut second = SlotValues::new();
    if full.detour.is_some() {
        let mut payload = SlotValues::new();
        for (&flow, bits) in &messages.bits {
            for k in 0..bits.len() as u32 {
                if let Carrier::Detoured { first: hop1, second: hop2 } = full.carrier(flow, k) {
                    payload.insert(hop2, first.get(&hop1).copied().unwrap_or(false));
                }
            }
        }
        second = run_block(&full.scheme, &payload)?.1;
    }

    let mut outcomes = Vec::new();
    let mut failure = None;
    for flow in RateTuple::FLOWS {
        let sent = messages.get(flow);
        if sent.is_empty() {
            continue;
        }
        let decoded: Vec<bool> = (0..sent.len() as u32)
            .map(|k| match full.carrier(flow, k) {
                Carrier::Direct(s) => first.get(&s).copied().unwrap_or(false),
                Carrier::Detoured { second: s, .. } => second.get(&s).copied().unwrap_or(false),
            })
            .collect();
        if failure.is_none() {
            if let Some(k) = sent.iter().zip(&decoded).position(|(a, b)| a != b) {
                failure = Some(SimError::DecodeFailure { flow, index: k as u32 });
            }
        }
        outcomes.push(MessageOutcome {
            flow,
            sent: bit_string(sent),
            decoded: bit_string(&decoded),
            ok: sent == decoded.as_slice(),
        });
    }
    if let Some(err) = failure {
        return Err(err);
    }
    Ok(DecodeReport {
        seed: messages.seed,
        rounds: full.rounds(),
        messages: outcomes,
    })
}
