//! Acceptance gate: ten end-to-end criteria covering oracle agreement,
//! duality certificates, canonical structure, exact and sharp
//! constructions, conformance counting, the grid oracle sweep, baseline
//! dominance, counter correctness, and the decomposition census.
//! Run with `cargo test -p itbound-core --test acceptance -- --nocapture`
//! to see one line per criterion.

use itbound_core::bounds::{
    crosscheck, fhl_baseline, main_bound, triangle_bound, triangle_grid_oracle, Method,
    TriangleProgram,
};
use itbound_core::canonicalize::support_graph;
use itbound_core::construct::build_extremal;
use itbound_core::count::{count_exact, count_naive, CountValue};
use itbound_core::decomp::{census, enumerate, for_each_decomposition, ENUMERATION_CAP};
use itbound_core::lp::{build_log_weights, check_complementary_slackness, solve_lp2, solve_lp2_dual};
use itbound_core::model::{DensityMatrix, Frac, Mode, MultipartiteGraph, PartSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

const ORACLE_REL_TOL: f64 = 1e-7;
const DUALITY_TOL: f64 = 1e-9;
const PER_MOVE_TOL: f64 = 1e-9;
const DOMINANCE_SLACK: f64 = 1e-9;
const CANON_TOL: f64 = 1e-9;

fn report(number: usize, name: &str, failures: &[String]) {
    if failures.is_empty() {
        println!("acceptance {} ({}): PASS", number, name);
    } else {
        println!("acceptance {} ({}): FAIL", number, name);
        panic!(
            "criterion {} failed {} checks, first: {}",
            number,
            failures.len(),
            failures[0]
        );
    }
}

fn rational_matrix(k: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let mut rows = vec![vec![0.0; k]; k];
    let mut rats = vec![vec![Frac::new(0, 1); k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let den = rng.random_range(2..=16u64);
            let num = rng.random_range(0..den);
            let fr = Frac::new(num, den);
            rows[i][j] = fr.as_f64();
            rows[j][i] = fr.as_f64();
            rats[i][j] = fr;
            rats[j][i] = fr;
        }
    }
    DensityMatrix::new(rows).unwrap().with_rationals(rats).unwrap()
}

fn oracle_trials() -> Vec<DensityMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0acce97);
    let mut out = Vec::new();
    for k in 2..=7 {
        for _ in 0..200 {
            out.push(rational_matrix(k, &mut rng));
        }
    }
    out
}

#[test]
fn acceptance_01_oracle_equivalence() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for (t, d) in oracle_trials().iter().enumerate() {
        match crosscheck(d, 1e-9) {
            Ok((lp, en)) => {
                let scale = lp.abs().max(en.abs()).max(1e-12);
                if (lp - en).abs() > ORACLE_REL_TOL * scale {
                    failures.push(format!("trial {}: lp {} vs enumeration {}", t, lp, en));
                }
            }
            Err(e) => failures.push(format!("trial {}: {}", t, e)),
        }
    }
    let elapsed = start.elapsed();
    if elapsed.as_secs_f64() >= 60.0 {
        failures.push(format!("sweep took {:?}, budget is 60s", elapsed));
    }
    report(1, "oracle equivalence", &failures);
}

#[test]
fn acceptance_02_duality_certificates() {
    let mut failures = Vec::new();
    for (t, d) in oracle_trials().iter().enumerate() {
        let w = build_log_weights(d);
        if !w.is_finite() {
            continue;
        }
        let primal = solve_lp2(&w).unwrap();
        let dual = solve_lp2_dual(&w).unwrap();
        let gap = (primal.objective - dual.objective).abs();
        if gap > DUALITY_TOL * (1.0 + primal.objective.abs()) {
            failures.push(format!("trial {}: duality gap {}", t, gap));
        }
        let slack = check_complementary_slackness(&w, &primal, &dual, 1e-7);
        if !slack.ok {
            failures.push(format!(
                "trial {}: slackness violated (primal {}, dual {}, pairing {})",
                t, slack.max_primal_violation, slack.max_dual_violation, slack.max_slackness_violation
            ));
        }
    }
    report(2, "duality certificates", &failures);
}

#[test]
fn acceptance_03_canonical_structure() {
    let mut failures = Vec::new();
    for (t, d) in oracle_trials().iter().enumerate() {
        let w = build_log_weights(d);
        if !w.is_finite() {
            continue;
        }
        let k = d.k();
        let dual = solve_lp2_dual(&w).unwrap();
        let mut q = match support_graph(&dual, k, CANON_TOL) {
            Ok(q) => q,
            Err(e) => {
                failures.push(format!("trial {}: support rejected: {}", t, e));
                continue;
            }
        };
        let stats = match q.canonicalize(&w) {
            Ok(s) => s,
            Err(e) => {
                failures.push(format!("trial {}: canonicalize failed: {}", t, e));
                continue;
            }
        };
        if stats.moves > 10 * k * k {
            failures.push(format!("trial {}: {} moves exceeds 10k^2", t, stats.moves));
        }
        if let Err(e) = q.to_decomposition() {
            failures.push(format!("trial {}: support is not canonical: {}", t, e));
        }
        let mut objective = 0.0;
        for i in 0..k {
            for j in (i + 1)..k {
                objective += w.p(i, j) * q.weight(i, j);
            }
        }
        let budget = (stats.moves as f64 + 1.0) * PER_MOVE_TOL * (1.0 + dual.objective.abs());
        if (objective - dual.objective).abs() > budget {
            failures.push(format!(
                "trial {}: objective drifted by {} over {} moves",
                t,
                (objective - dual.objective).abs(),
                stats.moves
            ));
        }
    }
    report(3, "canonical structure", &failures);
}

#[test]
fn acceptance_04_exact_two_part_constructions() {
    let mut failures = Vec::new();
    let cases: [(u64, u64, usize, usize); 6] =
        [(1, 2, 4, 4), (1, 3, 3, 5), (2, 5, 5, 8), (3, 7, 7, 6), (5, 8, 8, 9), (7, 12, 12, 10)];
    for &(num, den, n1, n2) in &cases {
        let fr = Frac::new(num, den);
        let rows = vec![vec![0.0, fr.as_f64()], vec![fr.as_f64(), 0.0]];
        let rats = vec![vec![Frac::new(0, 1), fr], vec![fr, Frac::new(0, 1)]];
        let d = DensityMatrix::new(rows).unwrap().with_rationals(rats).unwrap();
        let parts = PartSpec::new(vec![n1, n2]).unwrap();
        let pr = main_bound(&d, Method::Auto, 1e-9).unwrap().primal;
        let c = build_extremal(&d, &parts, &pr, 0).unwrap();
        let r = count_exact(&c.graph, Mode::IndependentTransversal, 1).unwrap();
        let count = match r.value {
            CountValue::Exact(c) => c,
            _ => unreachable!(),
        };
        let total = n1 as u128 * n2 as u128;
        // count must equal (1 - num/den) * n1 * n2 as exact integers
        if count * den as u128 != (den - num) as u128 * total {
            failures.push(format!(
                "d = {}/{}, parts ({}, {}): count {} is not (1-d) * {}",
                num, den, n1, n2, count, total
            ));
        }
        if num == 1 && den == 2 && n1 == 4 && count != 8 {
            failures.push(format!("half density on 4x4 gave {}, expected 8", count));
        }
    }
    report(4, "exact two-part constructions", &failures);
}

#[test]
fn acceptance_05_three_part_sharpness() {
    let mut failures = Vec::new();
    let d = DensityMatrix::uniform(3, 0.75).unwrap();
    let report_bound = main_bound(&d, Method::Auto, 1e-9).unwrap();
    for n in [8usize, 16, 32, 64] {
        let start = Instant::now();
        let parts = PartSpec::new(vec![n, n, n]).unwrap();
        let c = build_extremal(&d, &parts, &report_bound.primal, 0).unwrap();
        let r = count_exact(&c.graph, Mode::IndependentTransversal, 1).unwrap();
        let count = match r.value {
            CountValue::Exact(v) => v,
            _ => unreachable!(),
        };
        let half = (n / 2) as u128;
        if count < half * half * half {
            failures.push(format!("n = {}: count {} below floor(n/2)^3", n, count));
        }
        let ratio = count as f64 / (report_bound.coefficient * (n * n * n) as f64);
        let target = ((n / 2) as f64 / (n as f64 / 2.0)).powi(3);
        if ratio < target - 1e-12 {
            failures.push(format!("n = {}: ratio {} below {}", n, ratio, target));
        }
        if n == 16 {
            if count != 512 {
                failures.push(format!("n = 16: count {} is not 512", count));
            }
            if ratio != 1.0 {
                failures.push(format!("n = 16: ratio {} is not exactly 1", ratio));
            }
        }
        let elapsed = start.elapsed();
        if n == 64 && elapsed.as_secs_f64() >= 10.0 {
            failures.push(format!("n = 64 took {:?}, budget is 10s", elapsed));
        }
    }
    report(5, "three-part sharpness", &failures);
}

#[test]
fn acceptance_06_triangle_conformance() {
    let mut failures = Vec::new();
    let n = 24usize;
    let parts = PartSpec::new(vec![n, n, n]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x7a1);
    for seed in 0..100u64 {
        let mut rows = vec![vec![0.0; 3]; 3];
        for i in 0..3 {
            for j in (i + 1)..3 {
                let v: f64 = rng.random_range(0.05..0.95);
                rows[i][j] = v;
                rows[j][i] = v;
            }
        }
        let d = DensityMatrix::new(rows).unwrap();
        let g = MultipartiteGraph::random(parts.clone(), &d, seed);
        let r = count_exact(&g, Mode::TransversalClique, 1).unwrap();
        let count = match r.value {
            CountValue::Exact(v) => v,
            _ => unreachable!(),
        };
        let d12 = g.realized_density(0, 1).unwrap().as_f64();
        let d13 = g.realized_density(0, 2).unwrap().as_f64();
        let d23 = g.realized_density(1, 2).unwrap().as_f64();
        let coeff = triangle_bound(d12, d13, d23);
        let bound = coeff * (n * n * n) as f64 + (n * n) as f64;
        if count as f64 > bound + 0.5 {
            failures.push(format!("seed {}: {} cliques exceed {}", seed, count, bound));
        }
    }
    report(6, "triangle conformance", &failures);
}

#[test]
fn acceptance_07_grid_oracle_sweep() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let n1 = 3usize;
    let g = 8usize;
    for t12 in 0..=10u32 {
        for t13 in t12..=10 {
            for t23 in t13..=10 {
                let (d12, d13, d23) = (t12 as f64 / 10.0, t13 as f64 / 10.0, t23 as f64 / 10.0);
                let tp = TriangleProgram::new(n1, d12, d13, d23, g).unwrap();
                let value = triangle_grid_oracle(&tp).unwrap();
                let cap = n1 as f64 * (d12 * d13 * d23).sqrt() + 1.0;
                if value > cap + 1e-9 {
                    failures.push(format!(
                        "triple ({}, {}, {}): oracle {} exceeds {}",
                        d12, d13, d23, value, cap
                    ));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed.as_secs_f64() >= 120.0 {
        failures.push(format!("sweep took {:?}, budget is 120s", elapsed));
    }
    report(7, "grid oracle sweep", &failures);
}

#[test]
fn acceptance_08_baseline_dominance() {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0xba5e);
    for k in 2..=7usize {
        for trial in 0..500 {
            let mut rows = vec![vec![0.0; k]; k];
            for i in 0..k {
                for j in (i + 1)..k {
                    let v: f64 = rng.random_range(0.0..1.0);
                    rows[i][j] = v;
                    rows[j][i] = v;
                }
            }
            let d = DensityMatrix::new(rows).unwrap();
            let b = main_bound(&d, Method::Auto, 1e-9).unwrap();
            let base = fhl_baseline(&d);
            if b.coefficient > base + DOMINANCE_SLACK {
                failures.push(format!(
                    "k = {}, trial {}: coefficient {} above baseline {}",
                    k, trial, b.coefficient, base
                ));
            }
        }
    }
    report(8, "baseline dominance", &failures);
}

#[test]
fn acceptance_09_counter_correctness() {
    let mut failures = Vec::new();
    for seed in 0..500u64 {
        let k = 2 + (seed as usize % 2);
        let sizes: Vec<usize> = (0..k).map(|i| 2 + ((seed as usize + 3 * i) % 4)).collect();
        let parts = PartSpec::new(sizes).unwrap();
        let d = DensityMatrix::uniform(k, (seed % 11) as f64 / 10.0).unwrap();
        let g = MultipartiteGraph::random(parts, &d, seed);
        for mode in [Mode::IndependentTransversal, Mode::TransversalClique] {
            let fast = match count_exact(&g, mode, 1).unwrap().value {
                CountValue::Exact(v) => v,
                _ => unreachable!(),
            };
            let slow = count_naive(&g, mode).unwrap();
            if fast != slow {
                failures.push(format!("seed {}, {:?}: {} vs naive {}", seed, mode, fast, slow));
            }
        }
    }
    for seed in 0..200u64 {
        let k = 2 + (seed as usize % 3);
        let sizes: Vec<usize> = (0..k).map(|i| 3 + ((seed as usize * 5 + i) % 6)).collect();
        let parts = PartSpec::new(sizes).unwrap();
        let d = DensityMatrix::uniform(k, 0.2 + 0.06 * (seed % 10) as f64).unwrap();
        let g = MultipartiteGraph::random(parts, &d, 7000 + seed);
        let gc = g.complement();
        let it = match count_exact(&g, Mode::IndependentTransversal, 1).unwrap().value {
            CountValue::Exact(v) => v,
            _ => unreachable!(),
        };
        let clique = match count_exact(&gc, Mode::TransversalClique, 1).unwrap().value {
            CountValue::Exact(v) => v,
            _ => unreachable!(),
        };
        if it != clique {
            failures.push(format!(
                "seed {}: it count {} differs from complement clique count {}",
                seed, it, clique
            ));
        }
    }
    report(9, "counter correctness", &failures);
}

#[test]
fn acceptance_10_census() {
    let mut failures = Vec::new();
    for k in 2..=8usize {
        let listed = enumerate(k).unwrap().len() as u128;
        if listed != census(k) {
            failures.push(format!("k = {}: enumerate held {}, census says {}", k, listed, census(k)));
        }
    }
    for k in 9..=ENUMERATION_CAP {
        let mut walked = 0u128;
        for_each_decomposition(k, |_| walked += 1);
        if walked != census(k) {
            failures.push(format!("k = {}: walked {}, census says {}", k, walked, census(k)));
        }
    }
    if enumerate(ENUMERATION_CAP + 1).is_ok() {
        failures.push("enumeration accepted an instance past its cap".into());
    }
    report(10, "census", &failures);
}
