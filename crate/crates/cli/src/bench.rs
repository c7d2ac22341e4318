//! Benchmark harness: simulate, prune and reduce replicates in parallel and
//! tabulate original against ensemble state-space sizes.

use std::io::Write;
use std::time::Instant;

use pedlump::sim::{simulate_pedigree, PedigreeParams};
use pedlump::Error;
use rayon::prelude::*;
use serde::Serialize;

use crate::pipeline::{prune, reduce_pedigree, write_file, Variant};
use crate::{BenchArgs, CliError, CliResult, Shared, EXIT_OK};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub replicate: u64,
    /// Meioses of the simulated pedigree before pruning.
    pub n_meioses: usize,
    /// `2^n_meioses`.
    pub full_states: u128,
    pub ensemble_states: Option<usize>,
    pub runtime_ms: Option<f64>,
    pub variant: &'static str,
    pub relevant_meioses: Option<usize>,
    pub emission_states: Option<usize>,
    /// `ok`, or `skipped` with the reason.
    pub status: String,
}

#[derive(Debug, Clone, Copy)]
pub struct BenchConfig {
    pub params: PedigreeParams,
    pub replicates: u64,
    pub seed: u64,
    pub variant: Variant,
    pub max_meioses: usize,
    pub timing: bool,
}

/// One replicate. Replicates whose relevant meioses exceed the cap are
/// recorded as skipped rather than failing the run.
pub fn bench_replicate(cfg: &BenchConfig, replicate: u64) -> pedlump::Result<BenchRow> {
    let ped = simulate_pedigree(&cfg.params, cfg.seed, replicate)?;
    let n = ped.n();
    let mut row = BenchRow {
        replicate,
        n_meioses: n,
        full_states: 1u128 << n,
        ensemble_states: None,
        runtime_ms: None,
        variant: cfg.variant.name(),
        relevant_meioses: None,
        emission_states: None,
        status: "ok".into(),
    };
    let start = Instant::now();
    let pruned = match prune(&ped) {
        Ok(p) => p,
        Err(Error::TooManyMeioses { n, .. }) => {
            row.status = format!("skipped: {n} meioses after structural pruning");
            return Ok(row);
        }
        Err(e) => return Err(e),
    };
    row.relevant_meioses = Some(pruned.n());
    match reduce_pedigree(&pruned, cfg.variant, cfg.max_meioses) {
        Ok(r) => {
            row.emission_states = Some(r.emission.num_blocks());
            row.ensemble_states = Some(r.ensemble.num_blocks());
            if cfg.timing {
                let ms = start.elapsed().as_secs_f64() * 1e3;
                row.runtime_ms = Some((ms * 1e3).round() / 1e3);
            }
        }
        Err(Error::TooManyMeioses { n, cap }) => {
            row.status = format!("skipped: {n} relevant meioses exceeds {cap}");
        }
        Err(e) => return Err(e),
    }
    Ok(row)
}

/// All replicates, in replicate order, using the current rayon pool.
pub fn bench_rows(cfg: &BenchConfig) -> pedlump::Result<Vec<BenchRow>> {
    (0..cfg.replicates)
        .into_par_iter()
        .map(|r| bench_replicate(cfg, r))
        .collect()
}

pub fn to_csv(rows: &[BenchRow]) -> CliResult<String> {
    // The header is written by hand so that an empty run still has one.
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record([
        "replicate",
        "n_meioses",
        "full_states",
        "ensemble_states",
        "runtime_ms",
        "variant",
        "relevant_meioses",
        "emission_states",
        "status",
    ])?;
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Output(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn run(shared: &Shared, args: &BenchArgs, out: &mut dyn Write) -> CliResult<i32> {
    if shared.meiosis_order.is_some() {
        return Err(CliError::Usage("--meiosis-order needs an input pedigree".into()));
    }
    let cfg = BenchConfig {
        params: args.params.pedigree_params(),
        replicates: args.params.replicates,
        seed: shared.seed,
        variant: shared.variant(),
        max_meioses: shared.max_meioses(),
        timing: !shared.no_timing,
    };
    let text = to_csv(&bench_rows(&cfg)?)?;
    match &args.out {
        Some(path) => write_file(path, &text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(EXIT_OK)
}
