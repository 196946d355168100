//! Scheme construction: detour planning for the reduced 3-user network, the
//! simple ordering scheme (SOS) that aligns opposite messages so they XOR at
//! the relay, and the composition with the relay's private-message levels.

use std::collections::HashSet;

use serde::Serialize;
use thiserror::Error;

use crate::model::{assign_roles, ChannelGains, Flow, Node, RateTuple, RoleAssignment, User, UserRates};
use crate::reduction::{assign_relay_levels, reduce_network, LevelAssignment, ReducedGains, ReductionError};
use crate::region::{check_cycle_conditions, check_theorem1, check_theorem2, Violation};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodingError {
    #[error("rate tuple is outside the capacity region (first violated: {})", .0.first().map(|v| v.label.as_str()).unwrap_or("?"))]
    OutOfRegion(Vec<Violation>),
    #[error("user rates {0} are outside the reduced region")]
    OutOfReducedRegion(UserRates),
    #[error("both 3-cycle conditions are violated (forward {forward}, backward {backward}, n* {n_star})")]
    BothCyclesViolated { forward: u32, backward: u32, n_star: u32 },
    #[error("cycle edge {edge} lacks {lambda} bits of slack over its reverse")]
    DetourPrecondition { edge: Flow, lambda: u32 },
    #[error("no detour applies to {rates}")]
    NoApplicableDetour { rates: UserRates },
    #[error("detoured rates {modified} still fail the reduced region or a cycle condition")]
    DetourFailed { modified: UserRates },
    #[error("simple ordering scheme cannot place {item} in the {phase}")]
    SosInfeasible { item: String, phase: &'static str },
    #[error(transparent)]
    Reduction(#[from] ReductionError),
}

/// One bit position of a (possibly detour-enlarged) flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Slot {
    pub flow: Flow,
    pub index: u32,
}

impl Slot {
    pub fn new(flow: Flow, index: u32) -> Self {
        Slot { flow, index }
    }
}

impl std::fmt::Display for Slot {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "x{}{}#{}", self.flow.from, self.flow.to, self.index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CycleDirection {
    /// 1 -> 2 -> 3 -> 1
    Forward,
    /// 2 -> 1, 1 -> 3, 3 -> 2
    Backward,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DetourPlan {
    pub lambda: u32,
    pub direction: CycleDirection,
    /// The cycle edge whose rate is lowered.
    pub edge: (User, User),
    pub via: User,
    pub original: UserRates,
    pub modified: UserRates,
}

/// How one original message bit travels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Carrier {
    Direct(Slot),
    /// Sent to `via` on `first`, then forwarded by `via` on `second`.
    Detoured { first: Slot, second: Slot },
}

impl DetourPlan {
    pub fn routing_note(&self) -> String {
        let (i, j) = self.edge;
        format!(
            "{} bits of {}->{} travel {}->{} then {}->{}",
            self.lambda, i, j, i, self.via, self.via, j
        )
    }

    /// Carrier of bit `index` of the original user message `from -> to`.
    pub fn carrier(&self, from: User, to: User, index: u32) -> Carrier {
        let (i, j) = self.edge;
        let direct = Carrier::Direct(Slot::new(Flow::users(from, to), index));
        if (from, to) != (i, j) {
            return direct;
        }
        let kept = self.original.get(i, j) - self.lambda;
        if index < kept {
            return direct;
        }
        let d = index - kept;
        let k = self.via;
        Carrier::Detoured {
            first: Slot::new(Flow::users(i, k), self.original.get(i, k) + d),
            second: Slot::new(Flow::users(k, j), self.original.get(k, j) + d),
        }
    }
}

// A node may serve as the detour midpoint unless it alone has the smallest
// gain in some phase.
fn can_relay_detour(reduced: &ReducedGains, k: User) -> bool {
    let not_uniquely_lowest = |gains: [u32; 3]| {
        User::ALL
            .iter()
            .any(|&x| x != k && gains[x.index()] <= gains[k.index()])
    };
    not_uniquely_lowest(reduced.uplink) && not_uniquely_lowest(reduced.downlink)
}

/// Repairs a single violated 3-cycle condition by rerouting λ bits of one
/// cycle edge through the third user. `Ok(None)` when no repair is needed.
pub fn plan_detour(reduced: &ReducedGains, rates: &UserRates) -> Result<Option<DetourPlan>, CodingError> {
    if !check_theorem2(reduced, rates).in_region {
        return Err(CodingError::OutOfReducedRegion(*rates));
    }
    let cyc = check_cycle_conditions(reduced, rates);
    use User::{N1, N2, N3};
    let (direction, lambda, options) = match (cyc.forward_ok, cyc.backward_ok) {
        (true, true) => return Ok(None),
        (false, false) => {
            return Err(CodingError::BothCyclesViolated {
                forward: cyc.forward_sum,
                backward: cyc.backward_sum,
                n_star: cyc.n_star,
            })
        }
        (false, true) => (
            CycleDirection::Forward,
            cyc.forward_sum - cyc.n_star,
            [((N1, N2), N3), ((N2, N3), N1), ((N3, N1), N2)],
        ),
        (true, false) => (
            CycleDirection::Backward,
            cyc.backward_sum - cyc.n_star,
            [((N2, N1), N3), ((N3, N2), N1), ((N1, N3), N2)],
        ),
    };

    // Every cycle edge must exceed its reverse by at least λ.
    for ((i, j), _) in options {
        if rates.get(i, j) < rates.get(j, i) + lambda {
            return Err(CodingError::DetourPrecondition {
                edge: Flow::users(i, j),
                lambda,
            });
        }
    }

    let ((i, j), k) = options
        .into_iter()
        .find(|&(_, k)| can_relay_detour(reduced, k))
        .ok_or(CodingError::NoApplicableDetour { rates: *rates })?;

    let mut modified = *rates;
    modified.set(i, j, rates.get(i, j) - lambda);
    modified.set(i, k, rates.get(i, k) + lambda);
    modified.set(k, j, rates.get(k, j) + lambda);

    if !check_theorem2(reduced, &modified).in_region || !check_cycle_conditions(reduced, &modified).both_ok() {
        return Err(CodingError::DetourFailed { modified });
    }
    Ok(Some(DetourPlan {
        lambda,
        direction,
        edge: (i, j),
        via: k,
        original: *rates,
        modified,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LevelContent {
    Clean(Slot),
    /// Two opposite bits x_ij and x_ji superposed on one relay level.
    Xor(Slot, Slot),
}

impl LevelContent {
    pub fn slots(&self) -> Vec<Slot> {
        match *self {
            LevelContent::Clean(a) => vec![a],
            LevelContent::Xor(a, b) => vec![a, b],
        }
    }
}

impl std::fmt::Display for LevelContent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LevelContent::Clean(a) => write!(f, "{a}"),
            LevelContent::Xor(a, b) => write!(f, "{a}^{b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct UplinkBit {
    pub slot: Slot,
    /// Transmit level of the sending user.
    pub level: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RelayForward {
    pub rx_level: u32,
    pub tx_level: u32,
    pub content: LevelContent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RelayLevel {
    pub slot: Slot,
    pub level: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecodeEntry {
    pub slot: Slot,
    pub rx_level: u32,
    /// Own transmitted bits to XOR out of the received level.
    pub side_info: Vec<Slot>,
}

/// A complete bit-level plan for one uplink/downlink round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransmissionScheme {
    /// The channel the levels refer to.
    pub channel: ChannelGains,
    pub uplink_placement: [Vec<UplinkBit>; 3],
    pub relay_map: Vec<RelayForward>,
    /// Relay-originated bits and the transmit level each is inserted at.
    pub relay_insert: Vec<RelayLevel>,
    pub downlink_decode: [Vec<DecodeEntry>; 3],
    /// Relay-bound bits and the received level each is read from.
    pub relay_decode: Vec<RelayLevel>,
}

impl TransmissionScheme {
    pub fn empty(channel: ChannelGains) -> Self {
        TransmissionScheme {
            channel,
            uplink_placement: Default::default(),
            relay_map: Vec::new(),
            relay_insert: Vec::new(),
            downlink_decode: Default::default(),
            relay_decode: Vec::new(),
        }
    }

    pub fn placed_bits(&self) -> usize {
        self.uplink_placement.iter().map(Vec::len).sum::<usize>() + self.relay_insert.len()
    }

    pub fn decoded_bits(&self) -> usize {
        self.downlink_decode.iter().map(Vec::len).sum::<usize>() + self.relay_decode.len()
    }

    /// Structural checks: every slot is sent once and decoded once at its
    /// destination, levels stay inside the channel, the relay map is
    /// injective, XOR levels pair opposite messages, and side information
    /// is always the decoder's own traffic.
    pub fn validate(&self) -> Result<(), String> {
        let ch = &self.channel;
        let q = ch.relay_rx_len();
        let q_tx = ch.relay_tx_len();
        let mut sent = HashSet::new();
        for user in User::ALL {
            let mut levels = HashSet::new();
            for b in &self.uplink_placement[user.index()] {
                if b.slot.flow.from != Node::User(user) {
                    return Err(format!("{} placed on node {user}", b.slot));
                }
                if b.level == 0 || b.level > ch.up(user) {
                    return Err(format!("{} on level {} beyond n={}", b.slot, b.level, ch.up(user)));
                }
                if !levels.insert(b.level) {
                    return Err(format!("node {user} reuses level {}", b.level));
                }
                if !sent.insert(b.slot) {
                    return Err(format!("{} placed twice", b.slot));
                }
            }
        }
        for r in &self.relay_insert {
            if r.slot.flow.from != Node::Relay || r.level == 0 || r.level > q_tx || !sent.insert(r.slot) {
                return Err(format!("bad relay insert {}", r.slot));
            }
        }

        let mut rx_seen = HashSet::new();
        let mut tx_seen: HashSet<u32> = self.relay_insert.iter().map(|r| r.level).collect();
        if tx_seen.len() != self.relay_insert.len() {
            return Err("relay inserts share a level".into());
        }
        for f in &self.relay_map {
            if f.rx_level == 0 || f.rx_level > q || f.tx_level == 0 || f.tx_level > q_tx {
                return Err(format!("relay map entry {:?} out of range", f));
            }
            if !rx_seen.insert(f.rx_level) || !tx_seen.insert(f.tx_level) {
                return Err(format!("relay map not injective at {:?}", f));
            }
            if let LevelContent::Xor(a, b) = f.content {
                if a.flow != b.flow.reversed() {
                    return Err(format!("{a} and {b} are not opposite messages"));
                }
            }
        }
        for r in &self.relay_decode {
            if r.level == 0 || r.level > q || !rx_seen.insert(r.level) {
                return Err(format!("bad relay decode level for {}", r.slot));
            }
        }

        let mut decoded = HashSet::new();
        for user in User::ALL {
            for d in &self.downlink_decode[user.index()] {
                if d.slot.flow.to != Node::User(user) {
                    return Err(format!("{} decoded at node {user}", d.slot));
                }
                if d.rx_level == 0 || d.rx_level > ch.down(user) {
                    return Err(format!("{} read above horizon of node {user}", d.slot));
                }
                if d.side_info.iter().any(|s| s.flow.from != Node::User(user)) {
                    return Err(format!("{} needs side information node {user} lacks", d.slot));
                }
                if !decoded.insert(d.slot) {
                    return Err(format!("{} decoded twice", d.slot));
                }
            }
        }
        for r in &self.relay_decode {
            if !decoded.insert(r.slot) {
                return Err(format!("{} decoded twice", r.slot));
            }
        }
        if sent != decoded {
            return Err("sent and decoded slot sets differ".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Item {
    content: LevelContent,
    up_window: u32,
    down_horizon: u32,
}

/// Places the user messages of a reduced network.
///
/// Each opposite pair x_ij, x_ji is aligned on one relay level; leftover
/// bits travel alone. Levels are then handed out most-constrained first: on
/// the uplink, items whose senders reach the fewest relay levels take the
/// least significant received levels; on the downlink, items whose
/// recipients hear the fewest levels take the most significant transmit
/// levels. The relay forwards each received level unchanged.
pub fn build_sos(reduced: &ReducedGains, rates: &UserRates) -> Result<TransmissionScheme, CodingError> {
    let channel = reduced.as_channel();
    let mut items = Vec::new();
    for (a, b) in [(User::N1, User::N2), (User::N1, User::N3), (User::N2, User::N3)] {
        let (ab, ba) = (rates.get(a, b), rates.get(b, a));
        let paired = ab.min(ba);
        let fab = Flow::users(a, b);
        let fba = Flow::users(b, a);
        for k in 0..paired {
            items.push(Item {
                content: LevelContent::Xor(Slot::new(fab, k), Slot::new(fba, k)),
                up_window: channel.up(a).min(channel.up(b)),
                down_horizon: channel.down(a).min(channel.down(b)),
            });
        }
        for k in paired..ab {
            items.push(Item {
                content: LevelContent::Clean(Slot::new(fab, k)),
                up_window: channel.up(a),
                down_horizon: channel.down(b),
            });
        }
        for k in paired..ba {
            items.push(Item {
                content: LevelContent::Clean(Slot::new(fba, k)),
                up_window: channel.up(b),
                down_horizon: channel.down(a),
            });
        }
    }

    let q = channel.relay_rx_len();
    let q_tx = channel.relay_tx_len();
    let n = items.len() as u32;
    if n > q || n > q_tx {
        let phase = if n > q { "uplink" } else { "downlink" };
        return Err(CodingError::SosInfeasible {
            item: format!("{n} relay levels"),
            phase,
        });
    }

    let mut rx_of = vec![0u32; items.len()];
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by_key(|&i| items[i].up_window);
    for (rank, &i) in order.iter().enumerate() {
        let level = q - rank as u32;
        if level + items[i].up_window <= q {
            return Err(CodingError::SosInfeasible {
                item: items[i].content.to_string(),
                phase: "uplink",
            });
        }
        rx_of[i] = level;
    }

    let mut tx_of = vec![0u32; items.len()];
    order.sort_by_key(|&i| items[i].down_horizon);
    for (rank, &i) in order.iter().enumerate() {
        let level = rank as u32 + 1;
        if level > items[i].down_horizon {
            return Err(CodingError::SosInfeasible {
                item: items[i].content.to_string(),
                phase: "downlink",
            });
        }
        tx_of[i] = level;
    }

    let mut scheme = TransmissionScheme::empty(channel);
    for (i, item) in items.iter().enumerate() {
        let (rx, tx) = (rx_of[i], tx_of[i]);
        scheme.relay_map.push(RelayForward {
            rx_level: rx,
            tx_level: tx,
            content: item.content,
        });
        for slot in item.content.slots() {
            let Node::User(sender) = slot.flow.from else { unreachable!() };
            let Node::User(recipient) = slot.flow.to else { unreachable!() };
            scheme.uplink_placement[sender.index()].push(UplinkBit {
                slot,
                level: rx - (q - channel.up(sender)),
            });
            let side_info = match item.content {
                LevelContent::Xor(..) => vec![Slot::new(slot.flow.reversed(), slot.index)],
                LevelContent::Clean(_) => Vec::new(),
            };
            scheme.downlink_decode[recipient.index()].push(DecodeEntry {
                slot,
                rx_level: tx,
                side_info,
            });
        }
    }
    scheme.relay_map.sort_by_key(|f| f.rx_level);
    for v in scheme
        .uplink_placement
        .iter_mut()
    {
        v.sort_by_key(|b| b.level);
    }
    for v in scheme.downlink_decode.iter_mut() {
        v.sort_by_key(|d| d.rx_level);
    }
    Ok(scheme)
}

/// Everything needed to run the 4-node network for one rate tuple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FullScheme {
    pub gains: ChannelGains,
    pub rates: RateTuple,
    pub roles: RoleAssignment,
    pub levels: LevelAssignment,
    pub reduced: ReducedGains,
    pub detour: Option<DetourPlan>,
    /// User rates actually carried by the SOS (after any detour).
    pub effective: UserRates,
    /// The SOS in reduced-network coordinates.
    pub reduced_scheme: TransmissionScheme,
    /// The same scheme plus relay traffic, in physical level coordinates.
    pub scheme: TransmissionScheme,
}

impl FullScheme {
    /// Carrier of bit `index` of the original message on `flow`.
    pub fn carrier(&self, flow: Flow, index: u32) -> Carrier {
        match (&self.detour, flow.from, flow.to) {
            (Some(plan), Node::User(a), Node::User(b)) => plan.carrier(a, b, index),
            _ => Carrier::Direct(Slot::new(flow, index)),
        }
    }

    /// Number of transmission rounds needed to deliver every bit.
    pub fn rounds(&self) -> u32 {
        if self.detour.is_some() {
            2
        } else {
            1
        }
    }
}

/// Reserves relay-message levels, reduces, detours if needed, builds the SOS
/// and maps its levels back onto the physical network.
pub fn build_full_scheme(gains: &ChannelGains, rates: &RateTuple) -> Result<FullScheme, CodingError> {
    let verdict = check_theorem1(gains, rates);
    if !verdict.in_region {
        return Err(CodingError::OutOfRegion(verdict.violations));
    }
    let roles = assign_roles(gains);
    let levels = assign_relay_levels(gains, rates, &roles)?;
    let reduced = reduce_network(gains, rates, &roles)?;
    let users = rates.user_rates();
    let detour = plan_detour(&reduced, &users)?;
    let effective = detour.as_ref().map_or(users, |d| d.modified);
    let reduced_scheme = build_sos(&reduced, &effective)?;

    let free_rx = levels.free_rx_levels();
    let free_tx = levels.free_tx_levels();
    let red_q = reduced.as_channel().relay_rx_len();
    let q = gains.relay_rx_len();
    debug_assert_eq!(free_rx.len() as u32, red_q);
    debug_assert_eq!(free_tx.len() as u32, reduced.as_channel().relay_tx_len());

    let mut scheme = TransmissionScheme::empty(*gains);
    for user in User::ALL {
        for b in &reduced_scheme.uplink_placement[user.index()] {
            let compressed = b.level + (red_q - reduced.up(user));
            let physical = free_rx[compressed as usize - 1];
            scheme.uplink_placement[user.index()].push(UplinkBit {
                slot: b.slot,
                level: physical - (q - gains.up(user)),
            });
        }
        for d in &reduced_scheme.downlink_decode[user.index()] {
            scheme.downlink_decode[user.index()].push(DecodeEntry {
                rx_level: free_tx[d.rx_level as usize - 1],
                ..d.clone()
            });
        }
        let to_relay = Flow::new(user, Node::Relay);
        for (k, (&tx, &rx)) in levels.uplink_levels[user.index()]
            .iter()
            .zip(&levels.relay_rx_levels[user.index()])
            .enumerate()
        {
            let slot = Slot::new(to_relay, k as u32);
            scheme.uplink_placement[user.index()].push(UplinkBit { slot, level: tx });
            scheme.relay_decode.push(RelayLevel { slot, level: rx });
        }
        let from_relay = Flow::new(Node::Relay, user);
        for (k, &tx) in levels.downlink_levels[user.index()].iter().enumerate() {
            let slot = Slot::new(from_relay, k as u32);
            scheme.relay_insert.push(RelayLevel { slot, level: tx });
            scheme.downlink_decode[user.index()].push(DecodeEntry {
                slot,
                rx_level: tx,
                side_info: Vec::new(),
            });
        }
    }
    for f in &reduced_scheme.relay_map {
        scheme.relay_map.push(RelayForward {
            rx_level: free_rx[f.rx_level as usize - 1],
            tx_level: free_tx[f.tx_level as usize - 1],
            content: f.content,
        });
    }
    for v in scheme.uplink_placement.iter_mut() {
        v.sort_by_key(|b| b.level);
    }
    for v in scheme.downlink_decode.iter_mut() {
        v.sort_by_key(|d| d.rx_level);
    }
    scheme.relay_decode.sort_by_key(|r| r.level);
    scheme.relay_insert.sort_by_key(|r| r.level);

    Ok(FullScheme {
        gains: *gains,
        rates: *rates,
        roles,
        levels,
        reduced,
        detour,
        effective,
        reduced_scheme,
        scheme,
    })
}
