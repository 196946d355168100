//! Brute-force verification: integral-point enumeration of the regions and
//! exhaustive (or reservoir-sampled) sweeps over small networks.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::coding::{build_full_scheme, plan_detour};
use crate::model::{assign_roles, ChannelGains, RateTuple, UserRates};
use crate::reduction::ReducedGains;
use crate::region::{check_cycle_conditions, check_theorem2, theorem1_inequalities, theorem2_inequalities, IndexedRegion};
use crate::simulate::{run_end_to_end, MessageSet};

/// Walks the integral points of a down-closed region in lexicographic order.
///
/// Membership must be monotone: if a point is outside, so is every point
/// that is coordinatewise larger. An odometer then only has to carry into
/// the previous coordinate whenever the current one steps outside.
pub struct DownClosedPoints<F> {
    values: Vec<u32>,
    bounds: Vec<u32>,
    contains: F,
    started: bool,
    done: bool,
}

impl<F: Fn(&[u32]) -> bool> DownClosedPoints<F> {
    pub fn new(bounds: Vec<u32>, contains: F) -> Self {
        let values = vec![0; bounds.len()];
        let done = !contains(&values);
        DownClosedPoints {
            values,
            bounds,
            contains,
            started: false,
            done,
        }
    }
}

impl<F: Fn(&[u32]) -> bool> Iterator for DownClosedPoints<F> {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(self.values.clone());
        }
        let mut i = self.values.len();
        while i > 0 {
            i -= 1;
            self.values[i] += 1;
            if self.values[i] <= self.bounds[i] && (self.contains)(&self.values) {
                return Some(self.values.clone());
            }
            self.values[i] = 0;
        }
        self.done = true;
        None
    }
}

/// All integral rate tuples of the 4-node region for `gains`.
pub fn enumerate_region(gains: &ChannelGains) -> impl Iterator<Item = RateTuple> {
    let region = IndexedRegion::for_rate_tuple(&theorem1_inequalities(gains, &assign_roles(gains)));
    let bounds = region.coordinate_bounds(12);
    DownClosedPoints::new(bounds, move |v| region.contains(v)).map(|v| RateTuple(v.try_into().unwrap()))
}

/// All integral user tuples of the reduced 3-user region.
pub fn enumerate_reduced_region(reduced: &ReducedGains) -> impl Iterator<Item = UserRates> {
    let region = IndexedRegion::for_user_rates(&theorem2_inequalities(reduced));
    let bounds = region.coordinate_bounds(6);
    DownClosedPoints::new(bounds, move |v| region.contains(v)).map(|v| UserRates(v.try_into().unwrap()))
}

/// Uniform sample of at most `k` items (Algorithm R).
pub fn reservoir_sample<T>(items: impl Iterator<Item = T>, k: usize, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(k);
    for (n, item) in items.enumerate() {
        if out.len() < k {
            out.push(item);
        } else {
            let j = rng.gen_range(0..=n);
            if j < k {
                out[j] = item;
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SweepConfig {
    pub max_gain: u32,
    /// Cap on tuples per network; above it, a fixed-seed reservoir sample.
    pub tuple_budget: Option<usize>,
    pub seeds: Vec<u64>,
    /// Worker count; `None` uses the global pool.
    pub parallelism: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            max_gain: 2,
            tuple_budget: None,
            seeds: vec![0, 1],
            parallelism: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SweepFailure {
    pub gains: Vec<u32>,
    pub rates: Vec<u32>,
    pub stage: String,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SweepReport {
    pub networks_tested: u64,
    pub tuples_tested: u64,
    /// Tuples looked at but not exercised (e.g. no detour needed).
    pub skipped: u64,
    pub failures: Vec<SweepFailure>,
    #[serde(serialize_with = "as_secs")]
    pub wall_clock: Duration,
}

fn as_secs<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn merge(mut self, other: SweepReport) -> SweepReport {
        self.networks_tested += other.networks_tested;
        self.tuples_tested += other.tuples_tested;
        self.skipped += other.skipped;
        self.failures.extend(other.failures);
        self
    }
}

fn in_pool<T: Send>(parallelism: Option<usize>, job: impl FnOnce() -> T + Send) -> T {
    match parallelism {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(job),
        None => job(),
    }
}

/// Every six-tuple with entries in `0..=max`.
pub fn gain_grid(max: u32) -> Vec<[u32; 6]> {
    let side = max as usize + 1;
    (0..side.pow(6))
        .map(|mut code| {
            let mut g = [0u32; 6];
            for slot in g.iter_mut().rev() {
                *slot = (code % side) as u32;
                code /= side;
            }
            g
        })
        .collect()
}

/// Builds and simulates one tuple under every seed. Returns the failing
/// stage and detail, if any.
pub fn exercise_tuple(gains: &ChannelGains, rates: &RateTuple, seeds: &[u64]) -> Result<(), (String, String)> {
    let full = build_full_scheme(gains, rates).map_err(|e| ("build".to_string(), e.to_string()))?;
    full.scheme
        .validate()
        .map_err(|e| ("validate".to_string(), e))?;
    for &seed in seeds {
        let msgs = MessageSet::random(rates, seed);
        run_end_to_end(gains, &full, &msgs).map_err(|e| ("simulate".to_string(), format!("seed {seed}: {e}")))?;
    }
    Ok(())
}

fn sweep_network(index: usize, gains: &ChannelGains, config: &SweepConfig) -> SweepReport {
    let tuples: Vec<RateTuple> = match config.tuple_budget {
        Some(k) => reservoir_sample(enumerate_region(gains), k, 0x5eed ^ index as u64),
        None => enumerate_region(gains).collect(),
    };
    let mut report = SweepReport {
        networks_tested: 1,
        ..Default::default()
    };
    for rates in &tuples {
        report.tuples_tested += 1;
        if let Err((stage, detail)) = exercise_tuple(gains, rates, &config.seeds) {
            report.failures.push(SweepFailure {
                gains: gains.as_array().to_vec(),
                rates: rates.0.to_vec(),
                stage,
                detail,
            });
        }
    }
    report
}

/// Achievability sweep over an explicit list of networks.
pub fn sweep_networks(networks: &[ChannelGains], config: &SweepConfig) -> SweepReport {
    let start = Instant::now();
    let mut report = in_pool(config.parallelism, || {
        networks
            .par_iter()
            .enumerate()
            .map(|(i, g)| sweep_network(i, g, config))
            .reduce(SweepReport::default, SweepReport::merge)
    });
    report.failures.sort_by(|a, b| (&a.gains, &a.rates).cmp(&(&b.gains, &b.rates)));
    report.wall_clock = start.elapsed();
    report
}

/// For every network with gains in `0..=max_gain`: every (or a sampled)
/// in-region tuple must build and decode exactly for every seed.
pub fn achievability_sweep(config: &SweepConfig) -> SweepReport {
    let networks: Vec<ChannelGains> = gain_grid(config.max_gain)
        .into_iter()
        .map(ChannelGains::from_array)
        .collect();
    sweep_networks(&networks, config)
}

fn reduced_sweep(
    max_reduced_gain: u32,
    check: impl Fn(&ReducedGains, &UserRates) -> Option<Result<(), (String, String)>> + Sync,
) -> SweepReport {
    let start = Instant::now();
    let mut report = gain_grid(max_reduced_gain)
        .par_iter()
        .map(|g| {
            let reduced = ReducedGains::from_gains([g[0], g[1], g[2]], [g[3], g[4], g[5]]);
            let mut rep = SweepReport {
                networks_tested: 1,
                ..Default::default()
            };
            for rates in enumerate_reduced_region(&reduced) {
                match check(&reduced, &rates) {
                    None => rep.skipped += 1,
                    Some(outcome) => {
                        rep.tuples_tested += 1;
                        if let Err((stage, detail)) = outcome {
                            rep.failures.push(SweepFailure {
                                gains: g.to_vec(),
                                rates: rates.0.to_vec(),
                                stage,
                                detail,
                            });
                        }
                    }
                }
            }
            rep
        })
        .reduce(SweepReport::default, SweepReport::merge);
    report.failures.sort_by(|a, b| (&a.gains, &a.rates).cmp(&(&b.gains, &b.rates)));
    report.wall_clock = start.elapsed();
    report
}

/// No reduced-region tuple may overload both 3-cycles at once.
pub fn verify_lemma3(max_reduced_gain: u32) -> SweepReport {
    reduced_sweep(max_reduced_gain, |reduced, rates| {
        let c = check_cycle_conditions(reduced, rates);
        Some(if !c.forward_ok && !c.backward_ok {
            Err((
                "both-cycles".to_string(),
                format!("forward {} backward {} n* {}", c.forward_sum, c.backward_sum, c.n_star),
            ))
        } else {
            Ok(())
        })
    })
}

/// Checks one detour independently of the planner's own validation.
pub fn check_detour(reduced: &ReducedGains, rates: &UserRates) -> Result<(), (String, String)> {
    let before = check_cycle_conditions(reduced, rates);
    let plan = plan_detour(reduced, rates)
        .map_err(|e| ("plan".to_string(), e.to_string()))?
        .ok_or_else(|| ("plan".to_string(), "no detour returned".to_string()))?;
    let fail = |msg: String| Err(("verify".to_string(), msg));
    let (i, j) = plan.edge;
    let k = plan.via;
    let m = plan.modified;
    let lam = plan.lambda;
    let violated_sum = before.forward_sum.max(before.backward_sum);
    if lam != violated_sum - before.n_star {
        return fail(format!("lambda {lam} is not the violation amount"));
    }
    if m.get(i, j) + lam != rates.get(i, j) || m.get(i, k) != rates.get(i, k) + lam || m.get(k, j) != rates.get(k, j) + lam {
        return fail(format!("detour arithmetic off: {rates} -> {m}"));
    }
    if m.total() != rates.total() + lam {
        return fail("untouched rates changed".to_string());
    }
    if !check_theorem2(reduced, &m).in_region {
        return fail(format!("{m} leaves the reduced region"));
    }
    let after = check_cycle_conditions(reduced, &m);
    if !after.both_ok() {
        return fail(format!("{m} still overloads a cycle"));
    }
    let (shrunk, grown) = if before.forward_ok {
        ((before.backward_sum, after.backward_sum), (before.forward_sum, after.forward_sum))
    } else {
        ((before.forward_sum, after.forward_sum), (before.backward_sum, after.backward_sum))
    };
    if shrunk.1 + lam != shrunk.0 || grown.1 != grown.0 + 2 * lam {
        return fail("cycle sums did not move by -lambda / +2 lambda".to_string());
    }
    Ok(())
}

/// Every tuple violating exactly one cycle condition must be repaired by
/// its detour.
pub fn detour_sweep(max_reduced_gain: u32) -> SweepReport {
    reduced_sweep(max_reduced_gain, |reduced, rates| {
        let c = check_cycle_conditions(reduced, rates);
        if c.forward_ok == c.backward_ok {
            return None;
        }
        Some(check_detour(reduced, rates))
    })
}
