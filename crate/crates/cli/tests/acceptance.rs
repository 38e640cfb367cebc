//! End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
//! the process exits nonzero if any fails.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use flc_core::engine::{gamma, gap_decide, grid_budget, normalize_point_to_point, CapacityOptions, GapVerdict};
use flc_core::feasibility::{
    build_feasible_set_generic, build_feasible_set_structured, check_box, max_residual, BoxParams, StructuredGrid,
    Verdict,
};
use flc_core::flc::{builtin_dmc, builtin_marton};
use flc_core::grid::{build_delta_net, nearest_counts, GridNet, DEFAULT_GRID_CAP};
use flc_core::info::{entropy, entropy_continuity_bound};
use flc_core::pfa::{
    acceptance_prob, bounded_emptiness_search, gap_constants, simulate_two_phase_scheme, Matrix, Pfa, SearchOutcome,
    DEFAULT_SEARCH_CAP,
};
use flc_core::polynomial::Polynomial;
use flc_core::rational::{int, ratio, to_f64};
use flc_core::region::{is_convex_ccw, region_2user, DEFAULT_FAN};
use flc_core::{ChannelSpec, Distribution, Rational};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Runs `flc capacity` and returns `(beta, elapsed)`.
fn cli_capacity(flc: &str, channel: &str, epsilon: &str) -> Result<(f64, Duration), String> {
    let out = std::env::temp_dir().join(format!("flc-acceptance-{}-{channel}.json", std::process::id()));
    let started = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_flc"))
        .arg("capacity")
        .arg(fixture(flc))
        .arg(fixture(channel))
        .args(["--epsilon", epsilon, "--mode", "structured", "--out"])
        .arg(&out)
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    if !status.status.success() {
        return Err(format!("{channel}: {}", String::from_utf8_lossy(&status.stderr)));
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let _ = std::fs::remove_file(&out);
    let beta = report["results"]["beta"].as_f64().ok_or("no beta in report")?;
    Ok((beta, elapsed))
}

fn bsc_capacity() -> Outcome {
    let mut worst: f64 = 0.0;
    for (p, file) in [
        (0.05, "bsc05.chan"),
        (0.11, "bsc11.chan"),
        (0.25, "bsc25.chan"),
        (0.45, "bsc45.chan"),
    ] {
        let (beta, t) = cli_capacity("dmc.flc", file, "0.01")?;
        let oracle = 2f64.ln() - h2(p);
        ensure((beta - oracle).abs() <= 0.01, || {
            format!("p = {p}: beta {beta} vs {oracle}")
        })?;
        ensure(t < Duration::from_secs(10), || format!("p = {p}: took {t:?}"))?;
        worst = worst.max((beta - oracle).abs());
    }
    Ok(format!("max |beta - (ln2 - h(p))| = {worst:.2e}"))
}

fn bec_capacity() -> Outcome {
    let mut worst: f64 = 0.0;
    for (e, file) in [(0.1, "bec10.chan"), (0.5, "bec50.chan"), (0.9, "bec90.chan")] {
        let (beta, t) = cli_capacity("dmc_bec.flc", file, "0.01")?;
        let oracle = (1.0 - e) * 2f64.ln();
        ensure((beta - oracle).abs() <= 0.01, || {
            format!("e = {e}: beta {beta} vs {oracle}")
        })?;
        ensure(t < Duration::from_secs(10), || format!("e = {e}: took {t:?}"))?;
        worst = worst.max((beta - oracle).abs());
    }
    Ok(format!("max |beta - (1-e) ln2| = {worst:.2e}"))
}

/// Shannon entropy computed directly from the rationals.
fn entropy_oracle(probs: &[Rational]) -> f64 {
    probs.iter().map(to_f64).filter(|&p| p > 0.0).map(|p| -p * p.ln()).sum()
}

fn random_distribution(rng: &mut ChaCha8Rng, g: usize, den: i64) -> Vec<i64> {
    // stars and bars over `den` units
    let mut cuts: Vec<i64> = (0..g - 1).map(|_| rng.gen_range(0..=den)).collect();
    cuts.sort_unstable();
    let mut counts = Vec::with_capacity(g);
    let mut prev = 0;
    for c in cuts {
        counts.push(c - prev);
        prev = c;
    }
    counts.push(den - prev);
    counts
}

fn continuity_bound() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let den = 1000i64;
    let mut tight: f64 = 0.0;
    for trial in 0..10_000 {
        let g = rng.gen_range(2..=16);
        let a = random_distribution(&mut rng, g, den);
        let mut b = a.clone();
        // move at most den/4 units so that the L1 distance stays within 1/2
        let budget = rng.gen_range(1..=den / 4);
        let mut moved = 0;
        while moved < budget {
            let from = rng.gen_range(0..g);
            let to = rng.gen_range(0..g);
            if from != to && b[from] > 0 {
                b[from] -= 1;
                b[to] += 1;
                moved += 1;
            }
        }
        let l1_units: i64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
        if l1_units == 0 {
            continue;
        }
        let pa: Vec<Rational> = a.iter().map(|&x| ratio(x, den)).collect();
        let pb: Vec<Rational> = b.iter().map(|&x| ratio(x, den)).collect();
        let l1 = l1_units as f64 / den as f64;
        let diff = (entropy_oracle(&pa) - entropy_oracle(&pb)).abs();
        let bound = entropy_continuity_bound(l1, g).map_err(|e| e.to_string())?.0;
        let independent = l1 * (g as f64 / l1).ln();
        ensure((bound - independent).abs() <= 1e-12, || {
            format!("trial {trial}: bound {bound} vs {independent}")
        })?;
        ensure(diff <= bound + 1e-12, || {
            format!("trial {trial}: |dH| = {diff} > {bound} (g = {g}, l1 = {l1})")
        })?;
        let da = Distribution::from_sizes(&[g], pa).map_err(|e| e.to_string())?;
        ensure((entropy(&da).0 - entropy_oracle(da.probs())).abs() <= 1e-12, || {
            format!("trial {trial}: entropy")
        })?;
        tight = tight.max(diff / bound);
    }
    let t = started.elapsed();
    ensure(t < Duration::from_secs(5), || format!("took {t:?}"))?;
    Ok(format!(
        "0 violations in 10^4 pairs, max |dH|/bound = {tight:.3}, {t:.2?}"
    ))
}

fn random_simplex_point(rng: &mut ChaCha8Rng, g: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..g).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn delta_net() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_ratio: f64 = 0.0;
    for g in [2usize, 3, 4] {
        for delta in [ratio(1, 2), ratio(1, 10)] {
            let d = to_f64(&delta);
            let net = build_delta_net(&[g], &delta, DEFAULT_GRID_CAP).map_err(|e| e.to_string())?;
            let m = net.denominator();
            let points: Vec<Vec<f64>> = (0..net.len())
                .map(|i| net.counts(i).iter().map(|&c| c as f64 / m as f64).collect())
                .collect();
            for k in 0..10_000 {
                let s = random_simplex_point(&mut rng, g);
                let counts = nearest_counts(&s, m);
                ensure(net.rank(&counts).is_some(), || {
                    format!("G={g}: rounding left the lattice")
                })?;
                let dist: f64 = s
                    .iter()
                    .zip(&counts)
                    .map(|(x, &c)| (x - c as f64 / m as f64).abs())
                    .sum();
                ensure(dist < d, || format!("G={g}, delta={d}: L1 {dist}"))?;
                // brute-force nearest point on a subsample
                if k % 100 == 0 {
                    let best = points
                        .iter()
                        .map(|u| s.iter().zip(u).map(|(x, y)| (x - y).abs()).sum::<f64>())
                        .fold(f64::INFINITY, f64::min);
                    ensure(best < d, || format!("G={g}, delta={d}: brute-force L1 {best}"))?;
                    ensure(best <= dist + 1e-12, || "rounding beat brute force".into())?;
                }
                worst_ratio = worst_ratio.max(dist / d);
            }
        }
    }
    Ok(format!("6 nets x 10^4 samples, max L1/delta = {worst_ratio:.3}"))
}

fn monotone_refinement() -> Outcome {
    let flc = builtin_dmc(2, 2);
    let c = ChannelSpec::bsc(ratio(1, 4)).map_err(|e| e.to_string())?;
    let ptp = normalize_point_to_point(&flc).map_err(|e| e.to_string())?;
    let closed = 2f64.ln() - h2(0.25);
    let mut prev = f64::NEG_INFINITY;
    let mut line = Vec::new();
    for m in [10usize, 20, 40, 80, 160] {
        let set = build_feasible_set_structured(&flc, &c, m, DEFAULT_GRID_CAP).map_err(|e| e.to_string())?;
        let g = gamma(&flc, &c, &set).map_err(|e| e.to_string())?.gamma.0;
        let budget = grid_budget(&ptp, &flc.sizes(), 4.0 / m as f64).0;
        ensure(g >= prev, || format!("m = {m}: gamma {g} < {prev}"))?;
        ensure(g <= closed + 1e-12, || {
            format!("m = {m}: gamma {g} above capacity {closed}")
        })?;
        ensure(closed - g <= budget, || {
            format!("m = {m}: gap {} > budget {budget}", closed - g)
        })?;
        line.push(format!("m={m}:{g:.6}"));
        prev = g;
    }
    Ok(line.join(" "))
}

/// A random system with a planted simplex point, sometimes shifted by a
/// constant so that it is likely infeasible.
fn random_system(rng: &mut ChaCha8Rng, n: usize) -> (Vec<Polynomial>, Vec<Rational>) {
    let den = 24i64;
    let counts = random_distribution(rng, n, den);
    let w: Vec<Rational> = counts.iter().map(|&c| ratio(c, den)).collect();
    let mut system = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        let mut f = Polynomial::zero();
        for _ in 0..rng.gen_range(1..=3) {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            let coef = Polynomial::constant(ratio(rng.gen_range(-5..=5), rng.gen_range(1..=4)));
            let a = &Polynomial::p(i) - &Polynomial::constant(w[i].clone());
            let term = if rng.gen_bool(0.5) { &a * &Polynomial::p(j) } else { a };
            f = &f + &(&coef * &term);
        }
        if rng.gen_bool(0.4) {
            f = &f + &Polynomial::constant(ratio(rng.gen_range(1..=20), 40));
        }
        system.push(f);
    }
    let u_counts = random_distribution(rng, n, 10);
    let u = u_counts.iter().map(|&c| ratio(c, 10)).collect();
    (system, u)
}

fn feasibility_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut feasible, mut infeasible, mut unknown) = (0, 0, 0);
    for sys in 0..200 {
        let n = rng.gen_range(2..=4);
        let (f, u) = random_system(&mut rng, n);
        let delta = ratio(rng.gen_range(1..=4), 10);
        let eta = &delta * &delta;
        match check_box(&f, &u, &delta, &eta, 12).map_err(|e| e.to_string())? {
            Verdict::Feasible(w) => {
                feasible += 1;
                ensure(w.iter().sum::<Rational>().is_one(), || {
                    format!("system {sys}: witness off the simplex")
                })?;
                ensure(
                    w.iter()
                        .zip(&u)
                        .all(|(x, c)| (x - c).abs() <= delta && *x >= Rational::zero()),
                    || format!("system {sys}: witness outside the box"),
                )?;
                ensure(max_residual(&f, &w) <= eta, || {
                    format!("system {sys}: witness residual above eta")
                })?;
            }
            Verdict::Infeasible { certificate } => {
                infeasible += 1;
                let lo: Vec<f64> = u.iter().map(|x| (to_f64(x) - to_f64(&delta)).max(0.0)).collect();
                let hi: Vec<f64> = u.iter().map(|x| (to_f64(x) + to_f64(&delta)).min(1.0)).collect();
                let (mut found, mut tries) = (0, 0);
                while found < 1000 && tries < 200_000 {
                    tries += 1;
                    let scale = 1i64 << 20;
                    let mut pt: Vec<i64> = (0..n - 1)
                        .map(|i| ((lo[i] + rng.gen::<f64>() * (hi[i] - lo[i])) * scale as f64).round() as i64)
                        .collect();
                    let last = scale - pt.iter().sum::<i64>();
                    let last_f = last as f64 / scale as f64;
                    if last_f < lo[n - 1] || last_f > hi[n - 1] || last < 0 {
                        continue;
                    }
                    pt.push(last);
                    let w: Vec<Rational> = pt.iter().map(|&x| ratio(x, scale)).collect();
                    if !w.iter().zip(&u).all(|(x, c)| (x - c).abs() <= delta) {
                        continue;
                    }
                    found += 1;
                    let r = to_f64(&max_residual(&f, &w));
                    match certificate {
                        Some(cert) => ensure(r >= cert * (1.0 - 1e-9), || {
                            format!("system {sys}: sample residual {r} below certificate {cert}")
                        })?,
                        None => return Err(format!("system {sys}: certified empty box contains a sample")),
                    }
                }
            }
            Verdict::Unknown => unknown += 1,
        }
    }
    ensure(feasible > 0 && infeasible > 0, || {
        format!("degenerate suite: {feasible} feasible, {infeasible} infeasible")
    })?;
    Ok(format!(
        "{feasible} feasible, {infeasible} infeasible, {unknown} unknown; all verified"
    ))
}

fn structured_generic_agreement() -> Outcome {
    let flc = builtin_dmc(2, 2);
    let c = ChannelSpec::bsc(ratio(1, 4)).map_err(|e| e.to_string())?;
    let sizes = flc.sizes();
    let m = 10;
    let structured = build_feasible_set_structured(&flc, &c, m, DEFAULT_GRID_CAP).map_err(|e| e.to_string())?;
    let plan = flc.structured.as_ref().ok_or("dmc has no plan")?;
    let grid = StructuredGrid::new(plan, &sizes, &flatten(&c), m, DEFAULT_GRID_CAP).map_err(|e| e.to_string())?;
    // joints have denominator lcm(m, 4) = 20 | 40; the generic lattice at 40 holds them all
    let net = GridNet::with_denominator(&sizes, 40, DEFAULT_GRID_CAP).map_err(|e| e.to_string())?;
    let delta = net.delta();
    let params = BoxParams::defaults(delta.clone());
    let eta = params.eta.clone();
    let generic_net = net.clone();
    let generic = build_feasible_set_generic(&flc, &c, net, params).map_err(|e| e.to_string())?;
    for k in 0..grid.len() {
        let probs = grid.probs(k);
        let idx = generic_net
            .rank_of(&probs)
            .ok_or_else(|| format!("structured joint {k} is not on the generic lattice"))?;
        ensure(generic.members().binary_search(&idx).is_ok(), || {
            format!("structured joint {k} rejected by generic")
        })?;
        ensure(
            matches!(
                check_box(&substituted(&flc, &c), &probs, &delta, &Rational::zero(), 12),
                Ok(Verdict::Feasible(_))
            ),
            || format!("structured joint {k} not exactly feasible"),
        )?;
    }
    let gs = gamma(&flc, &c, &structured).map_err(|e| e.to_string())?.gamma.0;
    let gg = gamma(&flc, &c, &generic).map_err(|e| e.to_string())?.gamma.0;
    let ptp = normalize_point_to_point(&flc).map_err(|e| e.to_string())?;
    let reach = (flc.joint_size() as f64 * to_f64(&delta)).min(2.0);
    let eta_slack = grid_budget(&ptp, &sizes, reach).0;
    ensure((gs - gg).abs() <= eta_slack, || {
        format!("|{gs} - {gg}| > eta slack {eta_slack}")
    })?;
    Ok(format!(
        "{} structured joints all in generic set ({} of {}, eta = {}), |gamma_s - gamma_g| = {:.2e} <= {:.3}",
        grid.len(),
        generic.len(),
        generic.grid_size(),
        flc_core::rational::format_rational(&eta),
        (gs - gg).abs(),
        eta_slack
    ))
}

fn flatten(c: &ChannelSpec) -> Vec<Rational> {
    flc_core::prob::flatten_channel(c)
}

fn substituted(flc: &flc_core::flc::FlcSpec, c: &ChannelSpec) -> Vec<Polynomial> {
    let q = flatten(c);
    flc.constraints
        .iter()
        .map(|f| f.substitute_q(&q).expect("q in range"))
        .collect()
}

fn marton_broadcast() -> Outcome {
    let flc = builtin_marton(2, 2, 2, 2);
    let text = std::fs::read_to_string(fixture("det_broadcast.chan")).map_err(|e| e.to_string())?;
    let c = ChannelSpec::from_json(&text).map_err(|e| e.to_string())?;
    let set = build_feasible_set_structured(&flc, &c, 40, DEFAULT_GRID_CAP).map_err(|e| e.to_string())?;
    let region = region_2user(&flc, &c, &set, DEFAULT_FAN).map_err(|e| e.to_string())?;
    let ln2 = 2f64.ln();
    ensure((region.sum_rate - ln2).abs() <= 0.02, || {
        format!("sum-rate {}", region.sum_rate)
    })?;
    let diag = region
        .support
        .iter()
        .min_by(|a, b| {
            (a.theta - std::f64::consts::FRAC_PI_4)
                .abs()
                .total_cmp(&(b.theta - std::f64::consts::FRAC_PI_4).abs())
        })
        .ok_or("empty fan")?;
    ensure((diag.value - ln2 / 2f64.sqrt()).abs() <= 0.02, || {
        format!("support at pi/4 = {}", diag.value)
    })?;
    for m in &region.members {
        ensure(!m.unbounded, || format!("member {} unbounded", m.grid_index))?;
        ensure(m.polygon.len() < 3 || is_convex_ccw(&m.polygon), || {
            format!("member {} not convex", m.grid_index)
        })?;
        ensure(
            m.polygon
                .iter()
                .all(|v| v.iter().all(|&x| (-1e-9..=ln2 + 1e-9).contains(&x))),
            || format!("member {} leaves [0, ln2]^2", m.grid_index),
        )?;
    }
    Ok(format!(
        "sum-rate {:.6} (ln2 = {ln2:.6}), {} convex polygons in [0, ln2]^2",
        region.sum_rate,
        region.members.len()
    ))
}

fn gap_decisions() -> Outcome {
    let lambda = flc_core::Nats(0.6);
    // binary inputs keep the lattice within the default cap at epsilon = lambda/20
    let zero_cap = [
        ChannelSpec::useless(&[2], &[2]),
        ChannelSpec::useless(&[2], &[3]),
        ChannelSpec::useless(&[2], &[4]),
    ];
    let half = ratio(1, 2);
    let one = Rational::one();
    let zero = Rational::zero();
    let ln2_cap = [
        ChannelSpec::identity(2),
        // input 1 lands on outputs 1 or 2 with probability 1/2 each
        ChannelSpec::memoryless(&[2], &[3], |y, x| match (x[0], y[0]) {
            (0, 0) => one.clone(),
            (1, 1) | (1, 2) => half.clone(),
            _ => zero.clone(),
        }),
        // input x lands on 2x or 2x + 1
        ChannelSpec::memoryless(
            &[2],
            &[4],
            |y, x| if y[0] / 2 == x[0] { half.clone() } else { zero.clone() },
        ),
    ];
    let mut correct = 0;
    let mut betas = Vec::new();
    for (channels, expect) in [
        (zero_cap, GapVerdict::AtMostHalfLambda),
        (ln2_cap, GapVerdict::AtLeastLambda),
    ] {
        for c in channels {
            let c = c.map_err(|e| e.to_string())?;
            let flc = builtin_dmc(c.input_sizes()[0], c.output_sizes()[0]);
            let d = gap_decide(&flc, &c, lambda, &CapacityOptions::default()).map_err(|e| e.to_string())?;
            ensure((d.estimate.epsilon.0 - 0.03).abs() < 1e-15, || {
                "epsilon is not lambda/20".into()
            })?;
            if d.verdict == expect {
                correct += 1;
            }
            betas.push(format!("{:.4}", d.estimate.beta.0));
        }
    }
    ensure(correct == 6, || format!("{correct}/6 correct"))?;
    Ok(format!("6/6 correct, betas [{}]", betas.join(", ")))
}

/// Dense matrix product oracle: `P = M_{s_1} ··· M_{s_k}`, read off `P[start][accept]`.
fn matrix_power_oracle(matrices: &[Matrix], word: &[usize], start: usize, accept: usize) -> Rational {
    let n = matrices[0].len();
    let mut p: Matrix = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { Rational::one() } else { Rational::zero() })
                .collect()
        })
        .collect();
    for &a in word {
        let m = &matrices[a];
        p = (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| &p[i][k] * &m[k][j]).sum()).collect())
            .collect();
    }
    p[start][accept].clone()
}

fn random_pfa(rng: &mut ChaCha8Rng, n: usize, sigma: usize) -> (Vec<Matrix>, usize, usize) {
    let accept = n - 1;
    let den = rng.gen_range(1..=12);
    let matrices = (0..sigma)
        .map(|_| {
            (0..n)
                .map(|i| {
                    if i == accept {
                        (0..n)
                            .map(|j| if j == accept { Rational::one() } else { Rational::zero() })
                            .collect()
                    } else {
                        random_distribution(rng, n, den)
                            .into_iter()
                            .map(|c| ratio(c, den))
                            .collect()
                    }
                })
                .collect()
        })
        .collect();
    (matrices, rng.gen_range(0..n), accept)
}

fn halving() -> Result<Pfa, String> {
    let text = std::fs::read_to_string(fixture("halving.pfa")).map_err(|e| e.to_string())?;
    Pfa::from_json(&text).map_err(|e| e.to_string())
}

fn pfa_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for trial in 0..1000 {
        let sigma_size = rng.gen_range(1..=3);
        let (matrices, start, accept) = random_pfa(&mut rng, 3, sigma_size);
        let sigma: Vec<String> = (0..sigma_size)
            .map(|i| ((b'a' + i as u8) as char).to_string())
            .collect();
        let pfa = Pfa::new(sigma, matrices.clone(), start, accept).map_err(|e| e.to_string())?;
        let len = rng.gen_range(0..=8);
        let word: Vec<usize> = (0..len).map(|_| rng.gen_range(0..sigma_size)).collect();
        let got = acceptance_prob(&pfa, &word).map_err(|e| e.to_string())?.prob;
        let want = matrix_power_oracle(&matrices, &word, start, accept);
        ensure(got == want, || format!("trial {trial}: {got} vs oracle {want}"))?;
    }
    let h = halving()?;
    let p = acceptance_prob(&h, &h.parse_word("aaa").map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?
        .prob;
    ensure(p == ratio(7, 8), || format!("halving fixture on aaa gave {p}"))?;
    Ok("10^3 random 3-state PFAs match the oracle exactly; aaa -> 7/8".into())
}

fn bounded_emptiness() -> Outcome {
    let text = std::fs::read_to_string(fixture("contains_ab.pfa")).map_err(|e| e.to_string())?;
    let ab = Pfa::from_json(&text).map_err(|e| e.to_string())?;
    match bounded_emptiness_search(&ab, &ratio(9, 10), 2, DEFAULT_SEARCH_CAP).map_err(|e| e.to_string())? {
        SearchOutcome::Witness { word, prob } if word == "ab" && prob.is_one() => {}
        other => return Err(format!("contains_ab: {other:?}")),
    }
    let h = halving()?;
    let tau = ratio(3, 4);
    match bounded_emptiness_search(&h, &tau, 1, DEFAULT_SEARCH_CAP).map_err(|e| e.to_string())? {
        SearchOutcome::NoWitnessUpTo {
            max_len: 1, best_prob, ..
        } if best_prob == ratio(1, 2) => {}
        other => return Err(format!("halving, max_len 1: {other:?}")),
    }
    match bounded_emptiness_search(&h, &tau, 3, DEFAULT_SEARCH_CAP).map_err(|e| e.to_string())? {
        SearchOutcome::Witness { word, prob } if word == "aaa" && prob == ratio(7, 8) => {}
        other => return Err(format!("halving, max_len 3: {other:?}")),
    }
    Ok("ab at probability 1; halving flips from no witness (len 1) to aaa at 7/8 (len 3)".into())
}

fn appendix_constants() -> Outcome {
    let g = gap_constants(&int(100), 2, &ratio(1, 10), &ratio(1, 100)).map_err(|e| e.to_string())?;
    let c_l = 10.0 + 2f64.ln();
    ensure((g.c_l - c_l).abs() <= 1e-4 && (g.c_l - 10.6931).abs() <= 1e-4, || {
        format!("C_l = {}", g.c_l)
    })?;
    ensure(g.c_u_exact == ratio(8999, 100), || format!("C_u = {}", g.c_u_exact))?;
    ensure((g.delta - 9.9121).abs() <= 1e-4, || format!("Delta = {}", g.delta))?;
    ensure((g.c_u - g.c_l) / 8.0 == g.delta, || {
        "Delta does not recompute exactly".into()
    })?;
    Ok(format!("C_l = {:.6}, C_u = 8999/100, Delta = {:.6}", g.c_l, g.delta))
}

fn two_phase_simulation() -> Outcome {
    let h = halving()?;
    let prefix = h.parse_word("aaa").map_err(|e| e.to_string())?;
    let k = 16f64.ln();
    let seed = 2024;
    let a = simulate_two_phase_scheme(&h, &prefix, k, 1000, 10_000, seed).map_err(|e| e.to_string())?;
    let b = simulate_two_phase_scheme(&h, &prefix, k, 1000, 10_000, seed).map_err(|e| e.to_string())?;
    ensure(a == b, || "not deterministic under the seed".into())?;
    let target = 7.0 / 8.0 * k * (1.0 - 3.0 / 1000.0);
    let z = (a.mean_rate - target).abs() / a.std_error;
    ensure(z <= 3.0, || {
        format!("mean {} vs {target}: {z:.2} standard errors", a.mean_rate)
    })?;
    // the command line gives the same payload
    let out = Command::new(env!("CARGO_BIN_EXE_flc"))
        .args(["pfa", "simulate"])
        .arg(fixture("halving.pfa"))
        .args([
            "--prefix",
            "aaa",
            "--k",
            &k.to_string(),
            "--horizon",
            "1000",
            "--trials",
            "10000",
        ])
        .args(["--seed", &seed.to_string()])
        .output()
        .map_err(|e| e.to_string())?;
    let stdout = String::from_utf8_lossy(&out.stdout);
    ensure(
        out.status.success() && stdout.contains(&format!("{:.6}", a.mean_rate)),
        || format!("cli: {stdout}"),
    )?;
    Ok(format!(
        "mean {:.5} +- {:.5}, target {target:.5} ({z:.2} s.e.)",
        a.mean_rate, a.std_error
    ))
}

fn main() {
    let criteria: [Criterion; 13] = [
        ("BSC capacity", bsc_capacity),
        ("BEC capacity", bec_capacity),
        ("entropy continuity bound", continuity_bound),
        ("delta-net property", delta_net),
        ("monotone refinement and sandwich", monotone_refinement),
        ("feasibility soundness", feasibility_soundness),
        ("structured/generic agreement", structured_generic_agreement),
        ("Marton degenerate broadcast", marton_broadcast),
        ("gap decision", gap_decisions),
        ("PFA exactness", pfa_exactness),
        ("bounded emptiness", bounded_emptiness),
        ("gap constants", appendix_constants),
        ("two-phase simulation", two_phase_simulation),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let t = started.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{t:.2?}]", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{t:.2?}]", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
