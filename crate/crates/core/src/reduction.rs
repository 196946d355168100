//! Level placement for the relay's own private messages, and the reduced
//! 3-user network left over once those levels are reserved.
//!
//! Level indices are 1-based with 1 the most significant level. At the relay
//! receiver a user with gain n lands on the bottom n of the
//! `max_i n_{i4}` received levels; on the downlink a user with gain n hears
//! the top n of the relay's transmitted levels.

use serde::Serialize;
use thiserror::Error;

use crate::model::{ChannelGains, RateTuple, RoleAssignment, User};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReductionError {
    #[error("cannot place {rate} {phase} relay-message bits for node {node}: only {available} levels free")]
    InfeasibleAssignment {
        node: User,
        phase: Phase,
        rate: u32,
        available: u32,
    },
    #[error("reduced {phase} gain of node {node} is negative ({value})")]
    NegativeReducedGain { node: User, phase: Phase, value: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Phase {
    Uplink,
    Downlink,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Phase::Uplink => "uplink",
            Phase::Downlink => "downlink",
        })
    }
}

/// Gains of the equivalent 3-user relay network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ReducedGains {
    /// n_{iR}
    pub uplink: [u32; 3],
    /// n_{Ri}
    pub downlink: [u32; 3],
    pub beta: u32,
    pub gamma: u32,
    /// min(n_uR, n_Rw)
    pub n_star: u32,
}

impl ReducedGains {
    /// A reduced network given directly by its six gains (β = γ = 0).
    pub fn from_gains(uplink: [u32; 3], downlink: [u32; 3]) -> Self {
        let n_star = uplink.iter().max().unwrap().min(downlink.iter().max().unwrap()).to_owned();
        ReducedGains {
            uplink,
            downlink,
            beta: 0,
            gamma: 0,
            n_star,
        }
    }

    pub fn roles(&self) -> RoleAssignment {
        RoleAssignment::from_gain_arrays(self.uplink, self.downlink)
    }

    pub fn n_star(&self) -> u32 {
        self.n_star
    }

    pub fn up(&self, user: User) -> u32 {
        self.uplink[user.index()]
    }

    pub fn down(&self, user: User) -> u32 {
        self.downlink[user.index()]
    }

    /// The reduced network viewed as a channel in its own right.
    pub fn as_channel(&self) -> ChannelGains {
        ChannelGains::new(self.uplink, self.downlink)
    }
}

/// Where the relay's private messages sit.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct LevelAssignment {
    /// Transmit levels of user i carrying its R_{i4} bits.
    pub uplink_levels: [Vec<u32>; 3],
    /// Relay transmit levels carrying R_{4i} bits.
    pub downlink_levels: [Vec<u32>; 3],
    /// Relay received levels carrying user i's R_{i4} bits.
    pub relay_rx_levels: [Vec<u32>; 3],
    pub relay_rx_len: u32,
    pub relay_tx_len: u32,
}

impl LevelAssignment {
    /// Relay received levels not holding relay-bound bits, ascending.
    pub fn free_rx_levels(&self) -> Vec<u32> {
        let used: Vec<u32> = self.relay_rx_levels.iter().flatten().copied().collect();
        (1..=self.relay_rx_len).filter(|l| !used.contains(l)).collect()
    }

    /// Relay transmit levels not holding relay-originated bits, ascending.
    pub fn free_tx_levels(&self) -> Vec<u32> {
        let used: Vec<u32> = self.downlink_levels.iter().flatten().copied().collect();
        (1..=self.relay_tx_len).filter(|l| !used.contains(l)).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.uplink_levels.iter().all(Vec::is_empty) && self.downlink_levels.iter().all(Vec::is_empty)
    }
}

/// Reserves levels for the relay's private messages.
///
/// Uplink: in order u, v, t each user takes the most significant levels of
/// its own channel whose relay-received positions are still free. Downlink:
/// in order w, y, z each message takes the least significant free relay
/// transmit levels inside its recipient's horizon.
pub fn assign_relay_levels(
    gains: &ChannelGains,
    rates: &RateTuple,
    roles: &RoleAssignment,
) -> Result<LevelAssignment, ReductionError> {
    let q = gains.relay_rx_len();
    let q_tx = gains.relay_tx_len();
    let mut out = LevelAssignment {
        relay_rx_len: q,
        relay_tx_len: q_tx,
        ..Default::default()
    };

    let mut rx_used = vec![false; q as usize + 1];
    for user in roles.uplink {
        let n = gains.up(user);
        let want = rates.to_relay(user);
        let offset = q - n;
        let picked: Vec<u32> = (offset + 1..=q)
            .filter(|&p| !rx_used[p as usize])
            .take(want as usize)
            .collect();
        if picked.len() < want as usize {
            return Err(ReductionError::InfeasibleAssignment {
                node: user,
                phase: Phase::Uplink,
                rate: want,
                available: picked.len() as u32,
            });
        }
        for &p in &picked {
            rx_used[p as usize] = true;
        }
        out.uplink_levels[user.index()] = picked.iter().map(|p| p - offset).collect();
        out.relay_rx_levels[user.index()] = picked;
    }

    let mut tx_used = vec![false; q_tx as usize + 1];
    for user in roles.downlink {
        let n = gains.down(user);
        let want = rates.from_relay(user);
        let mut picked: Vec<u32> = (1..=n)
            .rev()
            .filter(|&p| !tx_used[p as usize])
            .take(want as usize)
            .collect();
        if picked.len() < want as usize {
            return Err(ReductionError::InfeasibleAssignment {
                node: user,
                phase: Phase::Downlink,
                rate: want,
                available: picked.len() as u32,
            });
        }
        for &p in &picked {
            tx_used[p as usize] = true;
        }
        picked.sort_unstable();
        out.downlink_levels[user.index()] = picked;
    }
    Ok(out)
}

fn pos(x: i64) -> i64 {
    x.max(0)
}

/// Relay-received levels inside the weakest user's window that are taken by
/// the two stronger users' relay-bound bits.
pub fn compute_beta(gains: &ChannelGains, rates: &RateTuple, roles: &RoleAssignment) -> i64 {
    let [nu, nv, nt] = roles.uplink.map(|x| i64::from(gains.up(x)));
    let ru = i64::from(rates.to_relay(roles.u()));
    let rv = i64::from(rates.to_relay(roles.v()));
    weak_window_overlap(nu, nv, nt, ru, rv)
}

/// Downlink counterpart of [`compute_beta`]: relay transmit levels inside
/// the weakest receiver's horizon taken by the two stronger receivers'
/// private bits.
pub fn compute_gamma(gains: &ChannelGains, rates: &RateTuple, roles: &RoleAssignment) -> i64 {
    let [nw, ny, nz] = roles.downlink.map(|x| i64::from(gains.down(x)));
    let rw = i64::from(rates.from_relay(roles.w()));
    let ry = i64::from(rates.from_relay(roles.y()));
    weak_window_overlap(nw, ny, nz, rw, ry)
}

/// Shared three-case formula. `a >= b >= c` are the gains, `ra` and `rb` the
/// private rates of the two strongest users.
fn weak_window_overlap(a: i64, b: i64, c: i64, ra: i64, rb: i64) -> i64 {
    if ra >= a - c {
        // Both stronger users' bits all reach into the weakest window.
        pos(ra - (a - c)) + rb
    } else if ra >= a - b {
        pos(rb - (b - c - pos(ra - (a - b))))
    } else {
        pos(rb - (b - c))
    }
}

/// Closed-form reduced gains.
pub fn reduce_network(
    gains: &ChannelGains,
    rates: &RateTuple,
    roles: &RoleAssignment,
) -> Result<ReducedGains, ReductionError> {
    let g = |x: u32| i64::from(x);
    let (u, v, t) = (roles.u(), roles.v(), roles.t());
    let (w, y, z) = (roles.w(), roles.y(), roles.z());
    let (nu, nv, nt) = (g(gains.up(u)), g(gains.up(v)), g(gains.up(t)));
    let (nw, ny, nz) = (g(gains.down(w)), g(gains.down(y)), g(gains.down(z)));
    let (ru, rv, rt) = (g(rates.to_relay(u)), g(rates.to_relay(v)), g(rates.to_relay(t)));
    let (rw, ry, rz) = (g(rates.from_relay(w)), g(rates.from_relay(y)), g(rates.from_relay(z)));

    let beta = compute_beta(gains, rates, roles);
    let gamma = compute_gamma(gains, rates, roles);

    let n_ur = nu - ru - rv - rt;
    let n_vr = nv - rt - rv - pos(ru - (nu - nv));
    let n_tr = nt - rt - beta;
    let n_rw = nw - rw - ry - rz;
    let n_ry = ny - rz - ry - pos(rw - (nw - ny));
    let n_rz = nz - rz - gamma;

    let mut uplink = [0u32; 3];
    let mut downlink = [0u32; 3];
    for (user, value) in [(u, n_ur), (v, n_vr), (t, n_tr)] {
        uplink[user.index()] = u32::try_from(value).map_err(|_| ReductionError::NegativeReducedGain {
            node: user,
            phase: Phase::Uplink,
            value,
        })?;
    }
    for (user, value) in [(w, n_rw), (y, n_ry), (z, n_rz)] {
        downlink[user.index()] = u32::try_from(value).map_err(|_| ReductionError::NegativeReducedGain {
            node: user,
            phase: Phase::Downlink,
            value,
        })?;
    }
    let mut out = ReducedGains::from_gains(uplink, downlink);
    out.beta = beta as u32;
    out.gamma = gamma as u32;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{assign_roles, Flow, Node};

    fn example() -> (ChannelGains, RateTuple) {
        (
            ChannelGains::new([7, 6, 4], [6, 7, 5]),
            RateTuple([2, 0, 2, 0, 2, 1, 1, 0, 1, 1, 1, 1]),
        )
    }

    fn with_relay_rates(up: [u32; 3], down: [u32; 3]) -> RateTuple {
        let mut r = RateTuple::zero();
        for u in User::ALL {
            r.set(Flow::new(u, Node::Relay), up[u.index()]);
            r.set(Flow::new(Node::Relay, u), down[u.index()]);
        }
        r
    }

    // Free levels seen by each user, counted directly from the placement.
    fn counted(gains: &ChannelGains, la: &LevelAssignment) -> ([u32; 3], [u32; 3]) {
        let free_rx = la.free_rx_levels();
        let free_tx = la.free_tx_levels();
        let q = gains.relay_rx_len();
        let up = User::ALL.map(|u| free_rx.iter().filter(|&&p| p > q - gains.up(u)).count() as u32);
        let down = User::ALL.map(|u| free_tx.iter().filter(|&&p| p <= gains.down(u)).count() as u32);
        (up, down)
    }

    #[test]
    fn worked_example_placement() {
        let (g, r) = example();
        let la = assign_relay_levels(&g, &r, &assign_roles(&g)).unwrap();
        assert_eq!(la.uplink_levels, [vec![1, 2], vec![2], vec![1]]);
        assert_eq!(la.relay_rx_levels, [vec![1, 2], vec![3], vec![4]]);
        // lowest level inside each recipient's horizon
        assert_eq!(la.downlink_levels, [vec![6], vec![7], vec![5]]);
    }

    #[test]
    fn worked_example_reduction() {
        let (g, r) = example();
        let red = reduce_network(&g, &r, &assign_roles(&g)).unwrap();
        assert_eq!(red.uplink, [3, 3, 3]);
        assert_eq!(red.downlink, [4, 4, 4]);
        assert_eq!((red.beta, red.gamma, red.n_star), (0, 0, 3));
    }

    #[test]
    fn no_relay_traffic_is_identity() {
        let g = ChannelGains::new([4, 0, 2], [1, 3, 3]);
        let roles = assign_roles(&g);
        let r = RateTuple([1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]);
        let la = assign_relay_levels(&g, &r, &roles).unwrap();
        assert!(la.is_empty());
        let red = reduce_network(&g, &r, &roles).unwrap();
        assert_eq!((red.uplink, red.downlink), (g.uplink, g.downlink));
        assert_eq!((red.beta, red.gamma), (0, 0));
    }

    #[test]
    fn beta_middle_case_on_example() {
        let (g, r) = example();
        assert_eq!(compute_beta(&g, &r, &assign_roles(&g)), 0);
        assert_eq!(compute_gamma(&g, &r, &assign_roles(&g)), 0);
    }

    #[test]
    fn beta_first_case_matches_level_count() {
        // u takes relay levels 1..3, v takes 4; t's window is 3..5, so two
        // of its levels are gone.
        let g = ChannelGains::new([5, 4, 3], [0, 0, 0]);
        let roles = assign_roles(&g);
        let r = with_relay_rates([3, 1, 0], [0, 0, 0]);
        assert_eq!(compute_beta(&g, &r, &roles), 2);
        let la = assign_relay_levels(&g, &r, &roles).unwrap();
        assert_eq!(la.relay_rx_levels, [vec![1, 2, 3], vec![4], vec![]]);
        let red = reduce_network(&g, &r, &roles).unwrap();
        assert_eq!(red.uplink, counted(&g, &la).0);
        assert_eq!(red.uplink, [1, 1, 1]);
    }

    #[test]
    fn gamma_first_case_matches_level_count() {
        let g = ChannelGains::new([0, 0, 0], [6, 3, 2]);
        let roles = assign_roles(&g);
        for ry in 0..=1 {
            let r = with_relay_rates([0, 0, 0], [5, ry, 0]);
            let gamma = compute_gamma(&g, &r, &roles);
            assert_eq!(gamma, 1 + i64::from(ry));
            let la = assign_relay_levels(&g, &r, &roles).unwrap();
            let red = reduce_network(&g, &r, &roles).unwrap();
            assert_eq!(red.downlink, counted(&g, &la).1);
        }
    }

    #[test]
    fn third_case_and_zero_rates() {
        let g = ChannelGains::new([6, 4, 1], [2, 2, 2]);
        let roles = assign_roles(&g);
        assert_eq!(compute_beta(&g, &RateTuple::zero(), &roles), 0);
        let r = with_relay_rates([1, 4, 0], [0, 0, 0]);
        assert_eq!(compute_beta(&g, &r, &roles), 1);
    }

    #[test]
    fn overfull_uplink_is_rejected() {
        let g = ChannelGains::new([2, 1, 1], [1, 1, 1]);
        let r = with_relay_rates([0, 1, 1], [0, 0, 0]);
        let roles = assign_roles(&g);
        assert!(matches!(
            assign_relay_levels(&g, &r, &roles),
            Err(ReductionError::InfeasibleAssignment { phase: Phase::Uplink, .. })
        ));
        assert!(matches!(
            reduce_network(&g, &r, &roles),
            Err(ReductionError::NegativeReducedGain { .. })
        ));
    }

    #[test]
    fn exhaustive_small_counts_agree() {
        // All in-region relay-only tuples on every gain vector up to 3.
        for a in 0..=3u32 {
            for b in 0..=3 {
                for c in 0..=3 {
                    let g = ChannelGains::new([a, b, c], [c, a, b]);
                    let roles = assign_roles(&g);
                    for ru in 0..=3 {
                        for rv in 0..=3 {
                            for rt in 0..=3 {
                                let r = with_relay_rates([ru, rv, rt], [rt, ru, rv]);
                                if !crate::region::check_theorem1(&g, &r).in_region {
                                    continue;
                                }
                                let la = assign_relay_levels(&g, &r, &roles).unwrap();
                                let red = reduce_network(&g, &r, &roles).unwrap();
                                assert_eq!((red.uplink, red.downlink), counted(&g, &la), "{g} {r}");
                            }
                        }
                    }
                }
            }
        }
    }
}
