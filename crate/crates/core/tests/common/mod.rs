#![allow(dead_code)]

use detrelay::model::{assign_roles, ChannelGains, RateTuple};
use detrelay::region::{theorem1_inequalities, IndexedRegion};
use rand::Rng;

pub fn random_gains(rng: &mut impl Rng, max: u32) -> ChannelGains {
    ChannelGains::from_array(std::array::from_fn(|_| rng.gen_range(0..=max)))
}

/// A random in-region tuple grown one unit at a time from zero.
pub fn random_tuple(rng: &mut impl Rng, gains: &ChannelGains) -> RateTuple {
    let region = IndexedRegion::for_rate_tuple(&theorem1_inequalities(gains, &assign_roles(gains)));
    let mut v = [0u32; 12];
    let steps = rng.gen_range(0..=40);
    let mut grown = 0;
    let mut misses = 0;
    while grown < steps && misses < 30 {
        let i = rng.gen_range(0..12);
        v[i] += 1;
        if region.contains(&v) {
            grown += 1;
        } else {
            v[i] -= 1;
            misses += 1;
        }
    }
    RateTuple(v)
}

pub const WORKED_GAINS: ([u32; 3], [u32; 3]) = ([7, 6, 4], [6, 7, 5]);
pub const WORKED_TUPLE: [u32; 12] = [2, 0, 2, 0, 2, 1, 1, 0, 1, 1, 1, 1];
/// The worked example with R23 = 1, matching its reduced tuple.
pub const CONSISTENT_TUPLE: [u32; 12] = [2, 0, 2, 0, 1, 1, 1, 0, 1, 1, 1, 1];

pub fn worked_gains() -> ChannelGains {
    ChannelGains::new(WORKED_GAINS.0, WORKED_GAINS.1)
}
