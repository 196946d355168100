//! Inequality sets for the 4-node capacity region, the reduced 3-user
//! region, and the two 3-cycle conditions that gate the simple ordering
//! scheme.
//!
//! Inequalities keep `max(a, b)` terms structurally; they are resolved only
//! when evaluated against concrete rates.

use std::fmt;

use serde::Serialize;

use crate::model::{assign_roles, ChannelGains, Flow, Node, RateTuple, Rates, RoleAssignment, User, UserRates};
use crate::reduction::ReducedGains;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Term {
    Rate(Flow),
    Max(Flow, Flow),
}

impl Term {
    fn value<R: Rates + ?Sized>(&self, rates: &R) -> u32 {
        match *self {
            Term::Rate(f) => rates.rate(f),
            Term::Max(a, b) => rates.rate(a).max(rates.rate(b)),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = |fl: Flow| format!("R{}{}", fl.from, fl.to);
        match *self {
            Term::Rate(a) => write!(f, "{}", name(a)),
            Term::Max(a, b) => write!(f, "max({},{})", name(a), name(b)),
        }
    }
}

/// `sum(coefficient * term) <= rhs`
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Inequality {
    pub label: String,
    pub terms: Vec<(u32, Term)>,
    pub rhs: u32,
}

impl Inequality {
    pub fn lhs<R: Rates + ?Sized>(&self, rates: &R) -> u32 {
        self.terms.iter().map(|(c, t)| c * t.value(rates)).sum()
    }

    pub fn holds<R: Rates + ?Sized>(&self, rates: &R) -> bool {
        self.lhs(rates) <= self.rhs
    }

    /// Every flow mentioned by the left-hand side.
    pub fn flows(&self) -> impl Iterator<Item = Flow> + '_ {
        self.terms.iter().flat_map(|(_, t)| match *t {
            Term::Rate(a) => vec![a],
            Term::Max(a, b) => vec![a, b],
        })
    }
}

impl fmt::Display for Inequality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lhs: Vec<String> = self
            .terms
            .iter()
            .map(|(c, t)| if *c == 1 { t.to_string() } else { format!("{c}*{t}") })
            .collect();
        let lhs = if lhs.is_empty() { "0".to_string() } else { lhs.join(" + ") };
        write!(f, "{}: {} <= {}", self.label, lhs, self.rhs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub label: String,
    pub lhs: u32,
    pub rhs: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Slack {
    pub label: String,
    pub slack: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegionVerdict {
    pub in_region: bool,
    pub violations: Vec<Violation>,
    /// rhs - lhs for every inequality, in generation order.
    pub slack: Vec<Slack>,
}

impl RegionVerdict {
    pub fn slack_of(&self, label: &str) -> Option<i64> {
        self.slack.iter().find(|s| s.label == label).map(|s| s.slack)
    }
}

pub fn evaluate<R: Rates + ?Sized>(inequalities: &[Inequality], rates: &R) -> RegionVerdict {
    let mut violations = Vec::new();
    let mut slack = Vec::with_capacity(inequalities.len());
    for ineq in inequalities {
        let lhs = ineq.lhs(rates);
        if lhs > ineq.rhs {
            violations.push(Violation {
                label: ineq.label.clone(),
                lhs,
                rhs: ineq.rhs,
            });
        }
        slack.push(Slack {
            label: ineq.label.clone(),
            slack: i64::from(ineq.rhs) - i64::from(lhs),
        });
    }
    RegionVerdict {
        in_region: violations.is_empty(),
        violations,
        slack,
    }
}

pub fn satisfies_all<R: Rates + ?Sized>(inequalities: &[Inequality], rates: &R) -> bool {
    inequalities.iter().all(|i| i.holds(rates))
}

/// Builds the ten-inequality family shared by both networks. With
/// `relay_traffic` the relay's private rates are added to each bound.
fn family(
    prefix: &str,
    up: [u32; 3],
    down: [u32; 3],
    roles: &RoleAssignment,
    relay_traffic: bool,
) -> Vec<Inequality> {
    let (u, v, t) = (roles.u(), roles.v(), roles.t());
    let (w, y, z) = (roles.w(), roles.y(), roles.z());
    let r = |a: User, b: User| Term::Rate(Flow::users(a, b));
    let mx = |a: User, b: User, c: User, d: User| Term::Max(Flow::users(a, b), Flow::users(c, d));
    let to4 = |a: User| Term::Rate(Flow::new(a, Node::Relay));
    let from4 = |a: User| Term::Rate(Flow::new(Node::Relay, a));
    let (nu, nv, nt) = (up[u.index()], up[v.index()], up[t.index()]);
    let (nw, ny, nz) = (down[w.index()], down[y.index()], down[z.index()]);
    let ut = roles.uplink_tag();
    let dt = roles.downlink_tag();

    let relay_terms = |terms: &[Term]| -> Vec<Term> {
        if relay_traffic {
            terms.to_vec()
        } else {
            Vec::new()
        }
    };
    let all_up = [to4(u), to4(v), to4(t)];
    let all_down = [from4(w), from4(y), from4(z)];

    // (name, role tag, relay terms, user terms, rhs)
    type Row<'a> = (&'a str, &'a String, Vec<Term>, Vec<Term>, u32);
    let spec: Vec<Row> = vec![
        ("UL1", &ut, relay_terms(&[to4(t)]), vec![r(t, u), r(t, v)], nt),
        ("DL1", &dt, relay_terms(&[from4(z)]), vec![r(w, z), r(y, z)], nz),
        (
            "UL2",
            &ut,
            relay_terms(&[to4(t), to4(v)]),
            vec![r(t, u), r(v, u), mx(t, v, v, t)],
            nv,
        ),
        (
            "DL2",
            &dt,
            relay_terms(&[from4(z), from4(y)]),
            vec![r(w, z), r(w, y), mx(z, y, y, z)],
            ny,
        ),
        ("UL3", &ut, relay_terms(&all_up), vec![r(u, v), r(u, t), mx(t, v, v, t)], nu),
        ("UL4", &ut, relay_terms(&all_up), vec![r(v, u), r(v, t), mx(t, u, u, t)], nu),
        ("UL5", &ut, relay_terms(&all_up), vec![r(t, u), r(t, v), mx(u, v, v, u)], nu),
        ("DL3", &dt, relay_terms(&all_down), vec![r(w, z), r(y, z), mx(w, y, y, w)], nw),
        ("DL4", &dt, relay_terms(&all_down), vec![r(y, w), r(z, w), mx(z, y, y, z)], nw),
        ("DL5", &dt, relay_terms(&all_down), vec![r(w, y), r(z, y), mx(w, z, z, w)], nw),
    ];

    spec.into_iter()
        .map(|(name, tag, relay, users, rhs)| Inequality {
            label: format!("{prefix}-{name}{tag}"),
            terms: relay.into_iter().chain(users).map(|t| (1, t)).collect(),
            rhs,
        })
        .collect()
}

/// The ten inequalities bounding the 4-node network, with role symbols
/// replaced by concrete nodes.
pub fn theorem1_inequalities(gains: &ChannelGains, roles: &RoleAssignment) -> Vec<Inequality> {
    family("4N", gains.uplink, gains.downlink, roles, true)
}

pub fn check_theorem1(gains: &ChannelGains, rates: &RateTuple) -> RegionVerdict {
    evaluate(&theorem1_inequalities(gains, &assign_roles(gains)), rates)
}

/// The ten inequalities of the reduced 3-user relay network. Roles come from
/// sorting the reduced gains themselves.
pub fn theorem2_inequalities(reduced: &ReducedGains) -> Vec<Inequality> {
    family("3U", reduced.uplink, reduced.downlink, &reduced.roles(), false)
}

pub fn check_theorem2(reduced: &ReducedGains, rates: &UserRates) -> RegionVerdict {
    evaluate(&theorem2_inequalities(reduced), rates)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CycleCheck {
    pub forward_ok: bool,
    pub backward_ok: bool,
    pub n_star: u32,
    pub forward_sum: u32,
    pub backward_sum: u32,
}

impl CycleCheck {
    pub fn both_ok(&self) -> bool {
        self.forward_ok && self.backward_ok
    }
}

/// Compares R12+R23+R31 and R21+R13+R32 against min(n_uR, n_Rw).
pub fn check_cycle_conditions(reduced: &ReducedGains, rates: &UserRates) -> CycleCheck {
    let n_star = reduced.n_star();
    let forward_sum = rates.forward_cycle();
    let backward_sum = rates.backward_cycle();
    CycleCheck {
        forward_ok: forward_sum <= n_star,
        backward_ok: backward_sum <= n_star,
        n_star,
        forward_sum,
        backward_sum,
    }
}

/// An inequality set lowered onto positions of a flat rate slice, for the
/// hot loops of the enumeration oracles.
#[derive(Debug, Clone)]
pub struct IndexedRegion {
    rows: Vec<(Vec<IndexedTerm>, u32)>,
}

// (coefficient, first index, second index or usize::MAX for a plain term)
type IndexedTerm = (u32, usize, usize);

impl IndexedRegion {
    pub fn new(inequalities: &[Inequality], index_of: impl Fn(Flow) -> usize) -> Self {
        let rows = inequalities
            .iter()
            .map(|ineq| {
                let terms = ineq
                    .terms
                    .iter()
                    .map(|&(c, t)| match t {
                        Term::Rate(a) => (c, index_of(a), usize::MAX),
                        Term::Max(a, b) => (c, index_of(a), index_of(b)),
                    })
                    .collect();
                (terms, ineq.rhs)
            })
            .collect();
        IndexedRegion { rows }
    }

    pub fn for_rate_tuple(inequalities: &[Inequality]) -> Self {
        Self::new(inequalities, |f| f.tuple_index().expect("tuple flow"))
    }

    pub fn for_user_rates(inequalities: &[Inequality]) -> Self {
        Self::new(inequalities, |f| match (f.from, f.to) {
            (Node::User(a), Node::User(b)) => UserRates::FLOWS
                .iter()
                .position(|&p| p == (a, b))
                .expect("user flow"),
            _ => panic!("relay flow in a user-only region"),
        })
    }

    pub fn contains(&self, values: &[u32]) -> bool {
        self.rows.iter().all(|(terms, rhs)| {
            let lhs: u32 = terms
                .iter()
                .map(|&(c, a, b)| {
                    let x = if b == usize::MAX { values[a] } else { values[a].max(values[b]) };
                    c * x
                })
                .sum();
            lhs <= *rhs
        })
    }

    /// Per-coordinate upper bound: the smallest rhs among rows mentioning the
    /// coordinate (all coefficients are 1 here, so this never cuts a point).
    pub fn coordinate_bounds(&self, dims: usize) -> Vec<u32> {
        let mut bounds = vec![u32::MAX; dims];
        for (terms, rhs) in &self.rows {
            for &(c, a, b) in terms {
                bounds[a] = bounds[a].min(rhs / c.max(1));
                if b != usize::MAX {
                    bounds[b] = bounds[b].min(rhs / c.max(1));
                }
            }
        }
        bounds
    }
}
