//! Acceptance suite. Each criterion is its own test and prints one
//! `criterion N: PASS|FAIL ...` line; run with `--nocapture` to see them.
//!
//! Tests hold a shared lock so that wall-clock limits are measured without
//! other criteria competing for the same cores.

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;
use std::sync::{Mutex, MutexGuard};
use std::time::{Duration, Instant};

use pedlump::bootstrap::{auto_generators, bootstrap_maximum_ensemble};
use pedlump::emission::{emission_partition, AlleleFrequencies, Emitter};
use pedlump::ensemble::{maximum_ensemble_with, EnsembleOptions, Representative};
use pedlump::hmm::{build_reduced, naive_forward, reduced_forward, site_thetas};
use pedlump::pedigree::{Individual, Sex};
use pedlump::sim::{replicate_rng, simulate_genotypes, simulate_pedigree, PedigreeParams};
use pedlump::state::hamming;
use pedlump::{fixtures, Partition, Pedigree};
use pedlump_cli::pipeline::prune;
use pedlump_cli::{run, EXIT_VERIFY_FAILED};
use rand::seq::SliceRandom;

const ONE_SECOND: Duration = Duration::from_secs(1);
const TWO_GENERATION_LIMIT: Duration = Duration::from_secs(60);
const BOOTSTRAP_16_LIMIT: Duration = Duration::from_secs(600);
const LIKELIHOOD_LIMIT: Duration = Duration::from_secs(300);
const BENCH_LIMIT: Duration = Duration::from_secs(600);

const COEFFICIENT_TOLERANCE: f64 = 1e-15;
const LIKELIHOOD_TOLERANCE: f64 = 1e-9;
const ROW_SUM_TOLERANCE: f64 = 1e-12;
const STATIONARY_TOLERANCE: f64 = 1e-10;

/// Relevant meioses allowed in the bench. Replicates above it count as
/// showing no reduction.
const BENCH_MAX_MEIOSES: &str = "24";

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(criterion: u32, ok: bool, detail: impl AsRef<str>) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("criterion {criterion}: {verdict} {}", detail.as_ref());
    assert!(ok, "criterion {criterion} failed: {}", detail.as_ref());
}

fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(
        std::iter::once("pedlump").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (
        code,
        String::from_utf8(out).expect("utf-8 stdout"),
        String::from_utf8(err).expect("utf-8 stderr"),
    )
}

/// Every bundled pedigree, reduced to its relevant meioses.
fn pruned_fixtures() -> Vec<(&'static str, Pedigree)> {
    [
        ("full_sibs", fixtures::full_sibs()),
        ("half_cousins", fixtures::half_cousins()),
        ("first_cousins", fixtures::first_cousins()),
        ("grandparent", fixtures::grandparent()),
        ("lineage", fixtures::lineage()),
        ("parent_child", fixtures::parent_child()),
        ("trio_sibs", fixtures::trio_sibs()),
    ]
    .into_iter()
    .map(|(name, ped)| (name, prune(&ped).expect("fixture prunes")))
    .collect()
}

/// Pruned simulated pedigrees with `lo..=hi` relevant meioses, drawn
/// replicate by replicate until `count` are found.
fn random_pedigrees(seed: u64, count: usize, lo: usize, hi: usize, generations: &[usize]) -> Vec<Pedigree> {
    let mut found = Vec::new();
    for rep in 0..10_000u64 {
        let params = PedigreeParams {
            generations: generations[rep as usize % generations.len()],
            per_gen_n: [2, 4, 6][(rep / 2) as usize % 3],
            offspring_mean: 1.5,
            halfsib: rep % 5 == 4,
        };
        let ped = simulate_pedigree(&params, seed, rep).expect("valid parameters");
        let Ok(ped) = prune(&ped) else { continue };
        if (lo..=hi).contains(&ped.n()) {
            found.push(ped);
            if found.len() == count {
                return found;
            }
        }
    }
    panic!("only {} pedigrees with {lo}..={hi} meioses", found.len());
}

fn full_ensemble(e: &Partition) -> Partition {
    maximum_ensemble_with(e, EnsembleOptions::default()).expect("ensemble converges")
}

#[test]
fn criterion_01_half_cousin_partition() {
    let _guard = serial();
    let order = format!("@{}", fixture_path("half_cousins.order").display());
    let ped = fixture_path("half_cousins.ped");
    let start = Instant::now();
    let (code, out, _) = cli(&["--meiosis-order", &order, "reduce", ped.to_str().unwrap()]);
    let elapsed = start.elapsed();
    let ok = code == 0 && out == fixtures::HALF_COUSINS_ENSEMBLE && elapsed < ONE_SECOND;
    report(1, ok, format!("exit {code}, byte-exact {}, {elapsed:?}", out == fixtures::HALF_COUSINS_ENSEMBLE));
}

#[test]
fn criterion_02_full_sib_emission_partition() {
    let _guard = serial();
    let ped = fixture_path("full_sibs.ped");
    let start = Instant::now();
    let (code, out, _) = cli(&["reduce", "--emission-only", ped.to_str().unwrap()]);
    let elapsed = start.elapsed();
    let ok = code == 0 && out == fixtures::FULL_SIBS_ENSEMBLE && elapsed < ONE_SECOND;
    report(2, ok, format!("exit {code}, byte-exact {}, {elapsed:?}", out == fixtures::FULL_SIBS_ENSEMBLE));
}

#[test]
fn criterion_03_markov_violation_witness() {
    let _guard = serial();
    let order = format!("@{}", fixture_path("half_cousins.order").display());
    let ped = fixture_path("half_cousins.ped");
    let partition = fixture_path("half_cousins_emission.partition");
    let (code, out, _) = cli(&[
        "--meiosis-order",
        &order,
        "verify",
        ped.to_str().unwrap(),
        partition.to_str().unwrap(),
    ]);
    let expected = "FAIL markov witness (0001, 0011, {1001,1111})\n  0001 (0,1,0,1,0)\n  0011 (0,0,2,0,0)\n";
    report(3, code == EXIT_VERIFY_FAILED && out == expected, format!("exit {code}, output {out:?}"));
}

#[test]
fn criterion_04_reduced_transition_value() {
    let _guard = serial();
    let p = Partition::parse(fixtures::HALF_COUSINS_ENSEMBLE).unwrap();
    let model = build_reduced(&p).unwrap();
    let k = model.partition().block_of(0b0011);
    let l = model.partition().block_of(0b0001);
    let coeffs = &model.trans_coeffs(k, l).0;
    let t: f64 = 0.1;
    let expected = 2.0 * t * (1.0 - t).powi(3) + 2.0 * t.powi(3) * (1.0 - t);
    let q = model.transition_matrix(t).unwrap()[k * model.num_blocks() + l];
    let err = (q - expected).abs();
    let ok = coeffs[..] == [0, 2, 0, 2, 0] && err <= COEFFICIENT_TOLERANCE;
    report(4, ok, format!("coefficients {coeffs:?}, value {q}, error {err:e}"));
}

#[test]
fn criterion_05_two_generation_pedigrees_are_already_markov() {
    let _guard = serial();
    let start = Instant::now();
    let peds = random_pedigrees(5, 50, 1, 12, &[2]);
    let mut changed = 0;
    for ped in &peds {
        let e = emission_partition(ped).unwrap();
        if full_ensemble(&e).to_text() != e.to_text() {
            changed += 1;
        }
    }
    let elapsed = start.elapsed();
    let max_n = peds.iter().map(Pedigree::n).max().unwrap();
    report(
        5,
        changed == 0 && elapsed < TWO_GENERATION_LIMIT,
        format!("{changed}/50 refined further, n <= {max_n}, {elapsed:?}"),
    );
}

#[test]
fn criterion_06_order_invariance() {
    let _guard = serial();
    let mut rng = replicate_rng(6, 0, 0);
    let mut mismatches = Vec::new();
    for (name, ped) in pruned_fixtures() {
        let e = emission_partition(&ped).unwrap();
        let reference = full_ensemble(&e).to_text();
        for _ in 0..20 {
            let mut blocks = e.blocks().to_vec();
            for b in blocks.iter_mut() {
                b.shuffle(&mut rng);
            }
            blocks.shuffle(&mut rng);
            let shuffled = Partition::from_blocks(e.width(), blocks).unwrap();
            for representative in [Representative::Smallest, Representative::First] {
                let got = maximum_ensemble_with(&shuffled, EnsembleOptions { representative }).unwrap();
                if got.to_text() != reference {
                    mismatches.push(format!("{name} {representative:?}"));
                }
            }
        }
    }
    report(6, mismatches.is_empty(), format!("mismatches {mismatches:?}"));
}

/// Two founder couples with a son and a daughter each, whose children
/// marry across families and have two children per couple.
fn cross_cousins() -> Pedigree {
    let mut people = vec![
        Individual::founder("f1", Sex::Male),
        Individual::founder("m1", Sex::Female),
        Individual::founder("f2", Sex::Male),
        Individual::founder("m2", Sex::Female),
        Individual::child("a1", "f1", "m1", Sex::Male),
        Individual::child("a2", "f1", "m1", Sex::Female),
        Individual::child("b1", "f2", "m2", Sex::Male),
        Individual::child("b2", "f2", "m2", Sex::Female),
    ];
    for (father, mother) in [("a1", "b2"), ("b1", "a2")] {
        for k in 0..2 {
            let id = format!("{father}{mother}_{k}");
            people.push(Individual::child(&id, father, mother, Sex::Female).interest());
        }
    }
    Pedigree::new(people).unwrap()
}

#[test]
fn criterion_07_bootstrap_equivalence() {
    let _guard = serial();
    let mut peds: Vec<(String, Pedigree)> =
        pruned_fixtures().into_iter().map(|(name, ped)| (name.to_string(), ped)).collect();
    for (i, ped) in random_pedigrees(7, 50, 1, 14, &[2, 3]).into_iter().enumerate() {
        peds.push((format!("random {i}"), ped));
    }
    let mut mismatches = Vec::new();
    for (name, ped) in &peds {
        let e = emission_partition(ped).unwrap();
        let boot = bootstrap_maximum_ensemble(&e, &auto_generators(ped)).unwrap();
        if boot.result.to_text() != full_ensemble(&e).to_text() {
            mismatches.push(name.clone());
        }
    }

    let big = prune(&cross_cousins()).unwrap();
    let start = Instant::now();
    let e = emission_partition(&big).unwrap();
    let boot = bootstrap_maximum_ensemble(&e, &auto_generators(&big)).unwrap();
    let elapsed = start.elapsed();
    let ok = mismatches.is_empty() && big.n() == 16 && elapsed < BOOTSTRAP_16_LIMIT;
    report(
        7,
        ok,
        format!(
            "{} pedigrees, mismatches {mismatches:?}; n={} bootstrap {} blocks in {elapsed:?}",
            peds.len(),
            big.n(),
            boot.result.num_blocks()
        ),
    );
}

#[test]
fn criterion_08_likelihood_equivalence() {
    let _guard = serial();
    let start = Instant::now();
    let freqs = AlleleFrequencies::new(&[("A", 0.5), ("B", 0.3), ("C", 0.2)]).unwrap();
    let peds = random_pedigrees(8, 25, 1, 12, &[2, 3]);
    let mut worst: f64 = 0.0;
    for (i, ped) in peds.iter().enumerate() {
        let sites = 10 + (i * 7) % 41;
        let distances = vec![0.02; sites - 1];
        let (data, _) = simulate_genotypes(ped, &distances, &freqs, 1.0, 8, i as u64).unwrap();
        let emitter = Emitter::new(ped, &data, &freqs).unwrap();
        let per_site: Vec<f64> = data.sites.iter().map(|s| s.distance).collect();
        let thetas = site_thetas(&per_site, 1.0).unwrap();
        let model = build_reduced(&full_ensemble(&emission_partition(ped).unwrap())).unwrap();
        let reduced = reduced_forward(&model, &emitter, &thetas).unwrap().log_likelihood;
        let naive = naive_forward(&emitter, &thetas).unwrap().log_likelihood;
        // Relative error of the likelihood itself.
        worst = worst.max((reduced - naive).exp_m1().abs());
    }
    let elapsed = start.elapsed();
    report(
        8,
        worst <= LIKELIHOOD_TOLERANCE && elapsed < LIKELIHOOD_LIMIT,
        format!("25 instances, worst relative error {worst:e}, {elapsed:?}"),
    );
}

#[test]
fn criterion_09_lumped_chain_properties() {
    let _guard = serial();
    let (mut worst_row, mut worst_fixed): (f64, f64) = (0.0, 0.0);
    for (_, ped) in pruned_fixtures() {
        let model = build_reduced(&full_ensemble(&emission_partition(&ped).unwrap())).unwrap();
        let k = model.num_blocks();
        let pi = model.stationary();
        for theta in [0.01, 0.1, 0.25, 0.49] {
            let q = model.transition_matrix(theta).unwrap();
            for i in 0..k {
                let row: f64 = q[i * k..(i + 1) * k].iter().sum();
                worst_row = worst_row.max((row - 1.0).abs());
            }
            for j in 0..k {
                let v: f64 = (0..k).map(|i| pi[i] * q[i * k + j]).sum();
                worst_fixed = worst_fixed.max((v - pi[j]).abs());
            }
        }
    }
    report(
        9,
        worst_row <= ROW_SUM_TOLERANCE && worst_fixed <= STATIONARY_TOLERANCE,
        format!("row sum error {worst_row:e}, stationary error {worst_fixed:e}"),
    );
}

#[test]
fn criterion_10_bench_reductions() {
    let _guard = serial();
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    let start = Instant::now();
    let (code, _, err) = cli(&[
        "--bootstrap",
        "auto",
        "--max-meioses",
        BENCH_MAX_MEIOSES,
        "--seed",
        "1",
        "bench",
        "--replicates",
        "100",
        "--generations",
        "3",
        "--per-gen",
        "4",
        "--offspring-mean",
        "2",
        "-o",
        csv.to_str().unwrap(),
    ]);
    let elapsed = start.elapsed();
    assert_eq!(code, 0, "{err}");

    let mut reader = csv::Reader::from_path(&csv).unwrap();
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (full_col, ens_col) = (col("full_states"), col("ensemble_states"));
    let mut ratios = Vec::new();
    let mut reduced = 0;
    for record in reader.records() {
        let record = record.unwrap();
        let full: f64 = record[full_col].parse().unwrap();
        // Skipped replicates show no reduction.
        let ratio = match record[ens_col].parse::<f64>() {
            Ok(ens) => full / ens,
            Err(_) => 1.0,
        };
        if ratio > 1.0 {
            reduced += 1;
        }
        ratios.push(ratio);
    }
    ratios.sort_by(f64::total_cmp);
    let median = (ratios[49] + ratios[50]) / 2.0;
    let ok = ratios.len() == 100 && reduced >= 95 && median >= 2.0 && elapsed < BENCH_LIMIT;
    report(
        10,
        ok,
        format!("{reduced}/{} reduced, median ratio {median:.1}, {elapsed:?}", ratios.len()),
    );
}

#[test]
fn criterion_11_translations_permute_blocks() {
    let _guard = serial();
    let mut lines = Vec::new();
    let mut all_ok = true;
    for (name, ped) in pruned_fixtures() {
        let n = ped.n();
        assert!(n <= 8);
        let m = full_ensemble(&emission_partition(&ped).unwrap());
        let blocks: BTreeSet<Vec<u32>> = m.canonical().blocks().iter().cloned().collect();
        let (mut pairs, mut bad) = (0, 0);
        for block in m.blocks() {
            for (i, &x1) in block.iter().enumerate() {
                for &x2 in &block[i + 1..] {
                    pairs += 1;
                    let t = x1 ^ x2;
                    let isometric = (0..1u32 << n)
                        .all(|y| (0..1u32 << n).all(|z| hamming(y ^ t, z ^ t) == hamming(y, z)));
                    let images: HashMap<usize, BTreeSet<u32>> = m.blocks().iter().enumerate().fold(
                        HashMap::new(),
                        |mut acc, (b, members)| {
                            acc.entry(b).or_default().extend(members.iter().map(|&y| y ^ t));
                            acc
                        },
                    );
                    let permutes = images
                        .values()
                        .all(|image| blocks.contains(&image.iter().copied().collect::<Vec<_>>()));
                    if !(isometric && permutes) {
                        bad += 1;
                    }
                }
            }
        }
        all_ok &= bad == 0;
        lines.push(format!("{name} {bad}/{pairs}"));
    }
    report(11, all_ok, format!("failing pairs per fixture: {}", lines.join(", ")));
}
