//! Domain types shared by every stage: users, flows, channel gains, rate
//! tuples and the role orderings induced by sorting gains.

use std::fmt;

use serde::{Deserialize, Serialize};

/// One of the three user nodes. Node 4, the relay, is [`Node::Relay`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum User {
    N1,
    N2,
    N3,
}

impl User {
    pub const ALL: [User; 3] = [User::N1, User::N2, User::N3];

    /// Zero-based array index.
    pub fn index(self) -> usize {
        match self {
            User::N1 => 0,
            User::N2 => 1,
            User::N3 => 2,
        }
    }

    /// The node number as written in the network description (1, 2 or 3).
    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn from_number(n: u8) -> Option<User> {
        match n {
            1 => Some(User::N1),
            2 => Some(User::N2),
            3 => Some(User::N3),
            _ => None,
        }
    }

    /// The user that is neither `self` nor `other`. Panics if they are equal.
    pub fn third(self, other: User) -> User {
        assert_ne!(self, other, "third() needs two distinct users");
        User::ALL
            .into_iter()
            .find(|&k| k != self && k != other)
            .unwrap()
    }
}

impl fmt::Display for User {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Any of the four nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Node {
    User(User),
    Relay,
}

impl Node {
    pub fn number(self) -> u8 {
        match self {
            Node::User(u) => u.number(),
            Node::Relay => 4,
        }
    }
}

impl From<User> for Node {
    fn from(u: User) -> Self {
        Node::User(u)
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// An ordered (source, destination) pair carrying a private message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Flow {
    pub from: Node,
    pub to: Node,
}

impl Flow {
    pub fn new(from: impl Into<Node>, to: impl Into<Node>) -> Flow {
        Flow {
            from: from.into(),
            to: to.into(),
        }
    }

    pub fn users(from: User, to: User) -> Flow {
        Flow::new(from, to)
    }

    pub fn reversed(self) -> Flow {
        Flow {
            from: self.to,
            to: self.from,
        }
    }

    /// Position of this flow in [`RateTuple::FLOWS`], or `None` for a
    /// self-loop.
    pub fn tuple_index(self) -> Option<usize> {
        RateTuple::FLOWS.iter().position(|&f| f == self)
    }

    /// Short name such as `r12` or `r43`.
    pub fn key(self) -> String {
        format!("r{}{}", self.from.number(), self.to.number())
    }
}

impl fmt::Display for Flow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.from, self.to)
    }
}

/// Anything that can answer "what is the rate on this flow".
pub trait Rates {
    fn rate(&self, flow: Flow) -> u32;
}

/// Deterministic channel gains: `uplink[i]` is n_{i4}, `downlink[i]` is n_{4i}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ChannelGains {
    pub uplink: [u32; 3],
    pub downlink: [u32; 3],
}

impl ChannelGains {
    pub fn new(uplink: [u32; 3], downlink: [u32; 3]) -> Self {
        ChannelGains { uplink, downlink }
    }

    pub fn up(&self, user: User) -> u32 {
        self.uplink[user.index()]
    }

    pub fn down(&self, user: User) -> u32 {
        self.downlink[user.index()]
    }

    /// Number of levels at the relay's receiver.
    pub fn relay_rx_len(&self) -> u32 {
        self.uplink.iter().copied().max().unwrap_or(0)
    }

    /// Number of levels the relay transmits on.
    pub fn relay_tx_len(&self) -> u32 {
        self.downlink.iter().copied().max().unwrap_or(0)
    }

    pub fn as_array(&self) -> [u32; 6] {
        let [a, b, c] = self.uplink;
        let [d, e, f] = self.downlink;
        [a, b, c, d, e, f]
    }

    pub fn from_array(v: [u32; 6]) -> Self {
        ChannelGains::new([v[0], v[1], v[2]], [v[3], v[4], v[5]])
    }
}

impl fmt::Display for ChannelGains {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.uplink;
        let [d, e, g] = self.downlink;
        write!(f, "({a},{b},{c})/({d},{e},{g})")
    }
}

/// The six user-to-user rates, in the order R12, R13, R21, R23, R31, R32.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct UserRates(pub [u32; 6]);

impl UserRates {
    pub const FLOWS: [(User, User); 6] = [
        (User::N1, User::N2),
        (User::N1, User::N3),
        (User::N2, User::N1),
        (User::N2, User::N3),
        (User::N3, User::N1),
        (User::N3, User::N2),
    ];

    pub fn zero() -> Self {
        UserRates([0; 6])
    }

    fn slot(from: User, to: User) -> usize {
        assert_ne!(from, to, "no rate from a user to itself");
        Self::FLOWS
            .iter()
            .position(|&p| p == (from, to))
            .expect("user pair")
    }

    pub fn get(&self, from: User, to: User) -> u32 {
        self.0[Self::slot(from, to)]
    }

    pub fn set(&mut self, from: User, to: User, value: u32) {
        self.0[Self::slot(from, to)] = value;
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    /// R12 + R23 + R31.
    pub fn forward_cycle(&self) -> u32 {
        self.get(User::N1, User::N2) + self.get(User::N2, User::N3) + self.get(User::N3, User::N1)
    }

    /// R21 + R13 + R32.
    pub fn backward_cycle(&self) -> u32 {
        self.get(User::N2, User::N1) + self.get(User::N1, User::N3) + self.get(User::N3, User::N2)
    }
}

impl Rates for UserRates {
    fn rate(&self, flow: Flow) -> u32 {
        match (flow.from, flow.to) {
            (Node::User(a), Node::User(b)) if a != b => self.get(a, b),
            _ => 0,
        }
    }
}

impl fmt::Display for UserRates {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.0;
        write!(f, "({},{},{},{},{},{})", v[0], v[1], v[2], v[3], v[4], v[5])
    }
}

/// All twelve rates of the 4-node network.
///
/// Stored in the order R12, R13, R14, R21, R23, R24, R31, R32, R34, R41,
/// R42, R43 (see [`RateTuple::FLOWS`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct RateTuple(pub [u32; 12]);

impl RateTuple {
    pub const FLOWS: [Flow; 12] = {
        use Node::{Relay as R4, User as U};
        use User::{N1, N2, N3};
        [
            Flow { from: U(N1), to: U(N2) },
            Flow { from: U(N1), to: U(N3) },
            Flow { from: U(N1), to: R4 },
            Flow { from: U(N2), to: U(N1) },
            Flow { from: U(N2), to: U(N3) },
            Flow { from: U(N2), to: R4 },
            Flow { from: U(N3), to: U(N1) },
            Flow { from: U(N3), to: U(N2) },
            Flow { from: U(N3), to: R4 },
            Flow { from: R4, to: U(N1) },
            Flow { from: R4, to: U(N2) },
            Flow { from: R4, to: U(N3) },
        ]
    };

    pub fn zero() -> Self {
        RateTuple([0; 12])
    }

    pub fn get(&self, flow: Flow) -> u32 {
        flow.tuple_index().map_or(0, |i| self.0[i])
    }

    /// Panics on a self-loop flow.
    pub fn set(&mut self, flow: Flow, value: u32) {
        let i = flow.tuple_index().expect("no rate on a self-loop");
        self.0[i] = value;
    }

    /// R_{i4}
    pub fn to_relay(&self, user: User) -> u32 {
        self.get(Flow::new(user, Node::Relay))
    }

    /// R_{4i}
    pub fn from_relay(&self, user: User) -> u32 {
        self.get(Flow::new(Node::Relay, user))
    }

    pub fn user_rates(&self) -> UserRates {
        let mut out = UserRates::zero();
        for (a, b) in UserRates::FLOWS {
            out.set(a, b, self.get(Flow::users(a, b)));
        }
        out
    }

    pub fn with_user_rates(mut self, users: UserRates) -> Self {
        for (a, b) in UserRates::FLOWS {
            self.set(Flow::users(a, b), users.get(a, b));
        }
        self
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn has_relay_traffic(&self) -> bool {
        User::ALL
            .iter()
            .any(|&u| self.to_relay(u) > 0 || self.from_relay(u) > 0)
    }
}

impl Rates for RateTuple {
    fn rate(&self, flow: Flow) -> u32 {
        self.get(flow)
    }
}

impl fmt::Display for RateTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Users sorted by non-increasing gain, per phase.
///
/// `uplink = [u, v, t]` with n_{u4} >= n_{v4} >= n_{t4} and
/// `downlink = [w, y, z]` with n_{4w} >= n_{4y} >= n_{4z}. Equal gains are
/// broken by node index: the lower index takes the earlier role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RoleAssignment {
    pub uplink: [User; 3],
    pub downlink: [User; 3],
}

/// Name of the tie-break rule used by [`assign_roles`].
pub const TIE_BREAK_RULE: &str = "lower node index takes the stronger role on equal gains";

fn sort_by_gain(gains: [u32; 3]) -> [User; 3] {
    let mut order = User::ALL;
    order.sort_by_key(|u| (std::cmp::Reverse(gains[u.index()]), u.index()));
    order
}

/// Sorts each phase's users by non-increasing gain.
pub fn assign_roles(gains: &ChannelGains) -> RoleAssignment {
    RoleAssignment::from_gain_arrays(gains.uplink, gains.downlink)
}

impl RoleAssignment {
    pub fn from_gain_arrays(uplink: [u32; 3], downlink: [u32; 3]) -> Self {
        RoleAssignment {
            uplink: sort_by_gain(uplink),
            downlink: sort_by_gain(downlink),
        }
    }

    pub fn u(&self) -> User {
        self.uplink[0]
    }
    pub fn v(&self) -> User {
        self.uplink[1]
    }
    pub fn t(&self) -> User {
        self.uplink[2]
    }
    pub fn w(&self) -> User {
        self.downlink[0]
    }
    pub fn y(&self) -> User {
        self.downlink[1]
    }
    pub fn z(&self) -> User {
        self.downlink[2]
    }

    /// Uplink rank of a user: 0 for u, 1 for v, 2 for t.
    pub fn uplink_rank(&self, user: User) -> usize {
        self.uplink.iter().position(|&x| x == user).unwrap()
    }

    /// Downlink rank of a user: 0 for w, 1 for y, 2 for z.
    pub fn downlink_rank(&self, user: User) -> usize {
        self.downlink.iter().position(|&x| x == user).unwrap()
    }

    /// `[u=.,v=.,t=.]`
    pub fn uplink_tag(&self) -> String {
        format!("[u={},v={},t={}]", self.u(), self.v(), self.t())
    }

    /// `[w=.,y=.,z=.]`
    pub fn downlink_tag(&self) -> String {
        format!("[w={},y={},z={}]", self.w(), self.y(), self.z())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn nums(r: [User; 3]) -> [u8; 3] {
        r.map(User::number)
    }

    #[test]
    fn worked_example_roles() {
        let roles = assign_roles(&ChannelGains::new([7, 6, 4], [6, 7, 5]));
        assert_eq!(nums(roles.uplink), [1, 2, 3]);
        assert_eq!(nums(roles.downlink), [2, 1, 3]);
    }

    #[test]
    fn all_equal_gains_break_ties_by_index() {
        let roles = assign_roles(&ChannelGains::new([3, 3, 3], [3, 3, 3]));
        assert_eq!(nums(roles.uplink), [1, 2, 3]);
        assert_eq!(nums(roles.downlink), [1, 2, 3]);
    }

    #[test]
    fn one_tie() {
        let roles = assign_roles(&ChannelGains::new([2, 5, 5], [1, 1, 4]));
        assert_eq!(nums(roles.uplink), [2, 3, 1]);
        assert_eq!(nums(roles.downlink), [3, 1, 2]);
    }

    #[test]
    fn tuple_layout() {
        let r = RateTuple([2, 0, 2, 0, 2, 1, 1, 0, 1, 1, 1, 1]);
        assert_eq!(r.get(Flow::users(User::N1, User::N2)), 2);
        assert_eq!(r.to_relay(User::N2), 1);
        assert_eq!(r.from_relay(User::N3), 1);
        assert_eq!(r.user_rates(), UserRates([2, 0, 0, 2, 1, 0]));
        assert_eq!(r.get(Flow::new(Node::Relay, Node::Relay)), 0);
        let keys: Vec<String> = RateTuple::FLOWS.iter().map(|f| f.key()).collect();
        assert_eq!(keys[0], "r12");
        assert_eq!(keys[11], "r43");
    }

    #[test]
    fn cycle_sums() {
        let r = UserRates([2, 0, 0, 1, 1, 0]);
        assert_eq!(r.forward_cycle(), 4);
        assert_eq!(r.backward_cycle(), 0);
    }

    proptest! {
        #[test]
        fn roles_are_sorted_permutations(up in prop::array::uniform3(0u32..6), down in prop::array::uniform3(0u32..6)) {
            let g = ChannelGains::new(up, down);
            let roles = assign_roles(&g);
            prop_assert_eq!(roles, assign_roles(&g));
            prop_assert!(g.up(roles.u()) >= g.up(roles.v()) && g.up(roles.v()) >= g.up(roles.t()));
            prop_assert!(g.down(roles.w()) >= g.down(roles.y()) && g.down(roles.y()) >= g.down(roles.z()));
            let mut a = nums(roles.uplink);
            a.sort();
            prop_assert_eq!(a, [1, 2, 3]);
            let mut b = nums(roles.downlink);
            b.sort();
            prop_assert_eq!(b, [1, 2, 3]);
            for u in User::ALL {
                prop_assert_eq!(roles.uplink[roles.uplink_rank(u)], u);
            }
        }
    }
}
