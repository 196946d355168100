//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Tolerances are exact throughout (integers and bits). Runtime budgets are
//! printed next to the measured time.

mod common;

use std::time::{Duration, Instant};

use common::*;
use detrelay::coding::{build_full_scheme, plan_detour, CycleDirection};
use detrelay::model::{assign_roles, ChannelGains, Flow, Node, RateTuple, User, UserRates};
use detrelay::oracle::{achievability_sweep, detour_sweep, enumerate_reduced_region, verify_lemma3, SweepConfig, SweepReport};
use detrelay::reduction::{assign_relay_levels, reduce_network, LevelAssignment, ReducedGains};
use detrelay::region::{check_cycle_conditions, check_theorem1, satisfies_all, theorem2_inequalities};
use detrelay::simulate::{first_round_payload, run_block, run_end_to_end, BitVector, MessageSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS_8: [u64; 8] = [1, 2, 3, 5, 8, 13, 21, 34];

struct Outcome {
    id: u32,
    title: &'static str,
    pass: bool,
    details: Vec<String>,
    elapsed: Duration,
}

fn run(id: u32, title: &'static str, f: impl FnOnce(&mut Vec<String>) -> bool) -> Outcome {
    let start = Instant::now();
    let mut details = Vec::new();
    let pass = f(&mut details);
    Outcome {
        id,
        title,
        pass,
        details,
        elapsed: start.elapsed(),
    }
}

fn clause(details: &mut Vec<String>, name: &str, ok: bool, info: String) -> bool {
    details.push(format!("[{}] {name}: {info}", if ok { "ok" } else { "FAIL" }));
    ok
}

fn sweep_line(r: &SweepReport) -> String {
    let mut s = format!(
        "networks {} tuples {} skipped {} failures {} in {:.2}s",
        r.networks_tested,
        r.tuples_tested,
        r.skipped,
        r.failures.len(),
        r.wall_clock.as_secs_f64()
    );
    if let Some(f) = r.failures.first() {
        s += &format!("; first: gains {:?} rates {:?} [{}] {}", f.gains, f.rates, f.stage, f.detail);
    }
    s
}

// Builds and decodes `rates` for every seed; returns (ok, messages per run).
fn decode_all(gains: &ChannelGains, rates: &RateTuple, seeds: &[u64]) -> Result<usize, String> {
    let full = build_full_scheme(gains, rates).map_err(|e| e.to_string())?;
    let mut count = 0;
    for &s in seeds {
        let report = run_end_to_end(gains, &full, &MessageSet::random(rates, s)).map_err(|e| format!("seed {s}: {e}"))?;
        if !report.all_ok() {
            return Err(format!("seed {s}: mismatch"));
        }
        count = report.messages.len();
    }
    Ok(count)
}

fn criterion_1(d: &mut Vec<String>) -> bool {
    let gains = worked_gains();
    let rates = RateTuple(WORKED_TUPLE);
    let roles = assign_roles(&gains);
    let mut ok = true;

    let verdict = check_theorem1(&gains, &rates);
    let viol: Vec<String> = verdict
        .violations
        .iter()
        .map(|v| format!("{} lhs {} > {}", v.label, v.lhs, v.rhs))
        .collect();
    ok &= clause(
        d,
        "check_theorem1 in-region",
        verdict.in_region,
        if verdict.in_region { "all ten hold".into() } else { viol.join("; ") },
    );

    let reduced = reduce_network(&gains, &rates, &roles);
    let red_ok = matches!(reduced, Ok(r) if r.uplink == [3, 3, 3] && r.downlink == [4, 4, 4] && r.beta == 0 && r.gamma == 0);
    ok &= clause(d, "reduce_network (3,3,3)/(4,4,4), beta=gamma=0", red_ok, format!("{reduced:?}"));

    let red = ReducedGains::from_gains([3, 3, 3], [4, 4, 4]);
    let user = UserRates([2, 0, 0, 1, 1, 0]);
    let c = check_cycle_conditions(&red, &user);
    ok &= clause(
        d,
        "forward cycle 4 > n*=3",
        c.forward_sum == 4 && c.n_star == 3 && !c.forward_ok && c.backward_ok,
        format!("forward {} backward {} n* {}", c.forward_sum, c.backward_sum, c.n_star),
    );

    let plan = plan_detour(&red, &user);
    let plan_ok = matches!(&plan, Ok(Some(p)) if p.lambda == 1
        && p.direction == CycleDirection::Forward
        && p.edge == (User::N1, User::N2)
        && p.via == User::N3
        && p.modified == UserRates([1, 1, 0, 1, 1, 1]));
    ok &= clause(
        d,
        "plan_detour lambda=1, R12 via 3, -> (1,1,0,1,1,1)",
        plan_ok,
        match &plan {
            Ok(Some(p)) => p.routing_note(),
            other => format!("{other:?}"),
        },
    );

    let decoded = decode_all(&gains, &rates, &SEEDS_8);
    ok &= clause(
        d,
        "build_full_scheme + run_end_to_end, 8 seeds",
        decoded.is_ok(),
        match &decoded {
            Ok(n) => format!("{n} non-empty messages exact"),
            Err(e) => e.clone(),
        },
    );

    // Informational: the tuple with R23 = 1 that the reduced tuple implies.
    let consistent = RateTuple(CONSISTENT_TUPLE);
    let info = match decode_all(&gains, &consistent, &SEEDS_8) {
        Ok(n) => format!(
            "in region {}, {n} non-empty messages exact for 8 seeds",
            check_theorem1(&gains, &consistent).in_region
        ),
        Err(e) => format!("failed: {e}"),
    };
    d.push(format!("[info] R23=1 variant {consistent}: {info}"));
    ok
}

fn criterion_2(d: &mut Vec<String>) -> bool {
    let r = achievability_sweep(&SweepConfig {
        max_gain: 2,
        tuple_budget: None,
        seeds: vec![0, 1],
        parallelism: None,
    });
    clause(d, "gains in [0,2], exhaustive, 2 seeds", r.passed() && r.networks_tested == 729, sweep_line(&r))
}

fn criterion_3(d: &mut Vec<String>) -> bool {
    let r = achievability_sweep(&SweepConfig {
        max_gain: 3,
        tuple_budget: Some(200),
        seeds: vec![0, 1],
        parallelism: None,
    });
    clause(d, "gains in [0,3], <=200 sampled per network, 2 seeds", r.passed() && r.networks_tested == 4096, sweep_line(&r))
}

fn naive_reduced_count(red: &ReducedGains, max: u32) -> usize {
    let ineqs = theorem2_inequalities(red);
    let side = max + 1;
    (0..side.pow(6))
        .filter(|code| {
            let r = UserRates(std::array::from_fn(|i| (code / side.pow(i as u32)) % side));
            satisfies_all(&ineqs, &r)
        })
        .count()
}

fn criterion_4(d: &mut Vec<String>) -> bool {
    let r = verify_lemma3(4);
    let mut ok = clause(d, "reduced gains <= 4, no tuple violates both cycles", r.passed() && r.networks_tested == 15625, sweep_line(&r));
    // The sweep enumerates through the down-closed walker; cross-check its
    // point counts against a flat filter on random slices.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatches = 0;
    for _ in 0..12 {
        let g: [u32; 6] = std::array::from_fn(|_| rng.gen_range(0..=4));
        let red = ReducedGains::from_gains([g[0], g[1], g[2]], [g[3], g[4], g[5]]);
        if enumerate_reduced_region(&red).count() != naive_reduced_count(&red, 4) {
            mismatches += 1;
        }
    }
    ok &= clause(d, "enumeration count == flat filter (12 random slices)", mismatches == 0, format!("{mismatches} mismatches"));
    ok
}

fn criterion_5(d: &mut Vec<String>) -> bool {
    let r = detour_sweep(4);
    clause(
        d,
        "reduced gains <= 4, every single-cycle violation repaired",
        r.passed() && r.tuples_tested > 0,
        sweep_line(&r),
    )
}

// Free levels per user counted straight from the placement, independent of
// the closed form and of the library's own free-level helpers.
fn counted_free_levels(gains: &ChannelGains, rates: &RateTuple, la: &LevelAssignment) -> Result<([u32; 3], [u32; 3]), String> {
    let q = gains.relay_rx_len();
    let mut rx_used = vec![false; q as usize + 1];
    for u in User::ALL {
        let sent = &la.uplink_levels[u.index()];
        let landed = &la.relay_rx_levels[u.index()];
        if sent.len() as u32 != rates.to_relay(u) || landed.len() != sent.len() {
            return Err(format!("user {u}: wrong uplink level count"));
        }
        for (&l, &p) in sent.iter().zip(landed) {
            if l == 0 || l > gains.up(u) || p != q - gains.up(u) + l || rx_used[p as usize] {
                return Err(format!("user {u}: bad uplink level {l} -> {p}"));
            }
            rx_used[p as usize] = true;
        }
    }
    let q_tx = gains.relay_tx_len();
    let mut tx_used = vec![false; q_tx as usize + 1];
    for u in User::ALL {
        let levels = &la.downlink_levels[u.index()];
        if levels.len() as u32 != rates.from_relay(u) {
            return Err(format!("user {u}: wrong downlink level count"));
        }
        for &l in levels {
            if l == 0 || l > gains.down(u) || tx_used[l as usize] {
                return Err(format!("user {u}: bad downlink level {l}"));
            }
            tx_used[l as usize] = true;
        }
    }
    let up = User::ALL.map(|u| ((q - gains.up(u) + 1)..=q).filter(|&p| !rx_used[p as usize]).count() as u32);
    let down = User::ALL.map(|u| (1..=gains.down(u)).filter(|&l| !tx_used[l as usize]).count() as u32);
    Ok((up, down))
}

fn criterion_6(d: &mut Vec<String>) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut failures = Vec::new();
    let mut with_beta = 0;
    let mut with_gamma = 0;
    for n in 0..10_000 {
        let gains = random_gains(&mut rng, 8);
        let rates = random_tuple(&mut rng, &gains);
        let roles = assign_roles(&gains);
        let check = (|| {
            let la = assign_relay_levels(&gains, &rates, &roles).map_err(|e| e.to_string())?;
            let red = reduce_network(&gains, &rates, &roles).map_err(|e| e.to_string())?;
            let (up, down) = counted_free_levels(&gains, &rates, &la)?;
            if (red.uplink, red.downlink) != (up, down) {
                return Err(format!("closed form {:?}/{:?} vs counted {up:?}/{down:?}", red.uplink, red.downlink));
            }
            let ordered = red.uplink[roles.u().index()] >= red.uplink[roles.v().index()]
                && red.uplink[roles.v().index()] >= red.uplink[roles.t().index()]
                && red.downlink[roles.w().index()] >= red.downlink[roles.y().index()]
                && red.downlink[roles.y().index()] >= red.downlink[roles.z().index()];
            if !ordered {
                return Err("role ordering broken".into());
            }
            Ok((red.beta > 0, red.gamma > 0))
        })();
        match check {
            Ok((b, g)) => {
                with_beta += b as u32;
                with_gamma += g as u32;
            }
            Err(e) => failures.push(format!("#{n} {gains} {rates}: {e}")),
        }
    }
    clause(
        d,
        "10,000 random in-region instances, gains <= 8",
        failures.is_empty(),
        format!(
            "{} failures; beta > 0 in {with_beta}, gamma > 0 in {with_gamma}{}",
            failures.len(),
            failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    )
}

fn xor_all(a: &[BitVector], b: &[BitVector]) -> Vec<BitVector> {
    a.iter().zip(b).map(|(x, y)| x.xor(y)).collect()
}

fn trace_vectors(t: &detrelay::simulate::BlockTrace) -> Vec<BitVector> {
    let mut v: Vec<BitVector> = t.transmit.to_vec();
    v.push(t.relay_rx.clone());
    v.push(t.relay_tx.clone());
    v.extend(t.received.iter().cloned());
    v
}

fn criterion_7(d: &mut Vec<String>) -> bool {
    const N: usize = 1_000;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let instances: Vec<(ChannelGains, RateTuple)> = (0..N)
        .map(|_| {
            let g = random_gains(&mut rng, 6);
            let r = random_tuple(&mut rng, &g);
            (g, r)
        })
        .collect();
    let mut ok = true;

    // GF(2) linearity of the channel itself and of a full scheme round.
    let mut bad = 0;
    for (g, r) in &instances {
        let rand_vec = |rng: &mut ChaCha8Rng, n: u32| BitVector::from_bits(&(0..n).map(|_| rng.gen()).collect::<Vec<bool>>());
        let a: [BitVector; 3] = User::ALL.map(|u| rand_vec(&mut rng, g.up(u)));
        let b: [BitVector; 3] = User::ALL.map(|u| rand_vec(&mut rng, g.up(u)));
        let ab: [BitVector; 3] = std::array::from_fn(|i| a[i].xor(&b[i]));
        let rx = |t: &[BitVector; 3]| detrelay::simulate::uplink_receive(t, g).unwrap();
        if rx(&a).xor(&rx(&b)) != rx(&ab) {
            bad += 1;
            continue;
        }
        let full = build_full_scheme(g, r).unwrap();
        let m1 = MessageSet::random(r, rng.gen());
        let m2 = MessageSet::random(r, rng.gen());
        let m12 = m1.xor(&m2);
        let block = |m: &MessageSet| run_block(&full.scheme, &first_round_payload(&full, m)).unwrap();
        let ((t1, d1), (t2, d2), (t12, d12)) = (block(&m1), block(&m2), block(&m12));
        let decoded_linear = d12.iter().all(|(s, &v)| v == (d1[s] ^ d2[s]));
        if xor_all(&trace_vectors(&t1), &trace_vectors(&t2)) != trace_vectors(&t12) || !decoded_linear {
            bad += 1;
        }
    }
    ok &= clause(d, "linearity rx(m1)^rx(m2) = rx(m1^m2)", bad == 0, format!("{N} instances, {bad} violations"));

    let mut bad = 0;
    for (g, r) in &instances {
        let full = build_full_scheme(g, r).unwrap();
        let zeros = MessageSet::zeros(r);
        let (trace, decoded) = run_block(&full.scheme, &first_round_payload(&full, &zeros)).unwrap();
        let silent = trace_vectors(&trace).iter().all(|v| v.bits().iter().all(|b| !b));
        let report = run_end_to_end(g, &full, &zeros).unwrap();
        if !silent || decoded.values().any(|&b| b) || !report.all_ok() {
            bad += 1;
        }
    }
    ok &= clause(d, "zero messages give all-zero signals", bad == 0, format!("{N} instances, {bad} violations"));

    let mut bad = 0;
    for (i, (g, r)) in instances.iter().enumerate() {
        let seed = i as u64 * 7919;
        let (f1, f2) = (build_full_scheme(g, r).unwrap(), build_full_scheme(g, r).unwrap());
        let (m1, m2) = (MessageSet::random(r, seed), MessageSet::random(r, seed));
        if f1 != f2 || m1 != m2 || run_end_to_end(g, &f1, &m1).unwrap() != run_end_to_end(g, &f2, &m2).unwrap() {
            bad += 1;
        }
    }
    ok &= clause(d, "determinism under a fixed seed", bad == 0, format!("{N} instances, {bad} violations"));

    let mut bad = Vec::new();
    for (g, r) in &instances {
        let full = build_full_scheme(g, r).unwrap();
        let sc = &full.scheme;
        let (trace, _) = run_block(sc, &first_round_payload(&full, &MessageSet::random(r, 1))).unwrap();
        let lens_ok = User::ALL.iter().all(|&u| trace.transmit[u.index()].len() == g.up(u) && trace.received[u.index()].len() == g.down(u))
            && trace.relay_rx.len() == g.relay_rx_len()
            && trace.relay_tx.len() == g.relay_tx_len();
        let uplink_ok = User::ALL.iter().all(|&u| {
            let mut levels: Vec<u32> = sc.uplink_placement[u.index()].iter().map(|b| b.level).collect();
            let sent: u32 = User::ALL
                .iter()
                .filter(|&&v| v != u)
                .map(|&v| full.effective.get(u, v))
                .sum::<u32>()
                + r.get(Flow::new(u, Node::Relay));
            levels.sort_unstable();
            levels.dedup();
            levels.len() == sc.uplink_placement[u.index()].len()
                && levels.len() as u32 == sent
                && levels.iter().all(|&l| (1..=g.up(u)).contains(&l))
        });
        let mut tx: Vec<u32> = sc.relay_map.iter().map(|f| f.tx_level).chain(sc.relay_insert.iter().map(|x| x.level)).collect();
        let n_tx = tx.len();
        tx.sort_unstable();
        tx.dedup();
        let relay_ok = tx.len() == n_tx && tx.iter().all(|&l| (1..=g.relay_tx_len()).contains(&l));
        let decode_ok = User::ALL
            .iter()
            .all(|&u| sc.downlink_decode[u.index()].iter().all(|e| (1..=g.down(u)).contains(&e.rx_level)));
        if !(lens_ok && uplink_ok && relay_ok && decode_ok) {
            bad.push(format!("{g} {r}"));
        }
    }
    ok &= clause(
        d,
        "level budget (vector lengths, levels in range, no double use)",
        bad.is_empty(),
        format!("{N} instances, {} violations{}", bad.len(), bad.first().map(|b| format!("; first {b}")).unwrap_or_default()),
    );
    ok
}

fn main() {
    let outcomes = [
        run(1, "worked example reproduction", criterion_1),
        run(2, "exhaustive achievability sweep, gains <= 2", criterion_2),
        run(3, "sampled achievability sweep, gains <= 3", criterion_3),
        run(4, "no tuple violates both cycle conditions", criterion_4),
        run(5, "detour repairs every single-cycle violation", criterion_5),
        run(6, "closed-form reduced gains == counted free levels", criterion_6),
        run(7, "simulator properties", criterion_7),
    ];
    println!();
    for o in &outcomes {
        for line in &o.details {
            println!("    criterion {} {line}", o.id);
        }
    }
    println!();
    for o in &outcomes {
        println!(
            "criterion {}: {} - {} ({:.2}s)",
            o.id,
            if o.pass { "PASS" } else { "FAIL" },
            o.title,
            o.elapsed.as_secs_f64()
        );
    }
    let failed: Vec<u32> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
