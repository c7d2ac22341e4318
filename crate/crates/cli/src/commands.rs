use std::fs;
use std::io::Write;
use std::time::Instant;

use pedlump::emission::{emission_partition, AlleleFrequencies, Emitter, GenotypeData};
use pedlump::ensemble::{coefficient_vector, verify_markov};
use pedlump::hmm::{build_reduced, naive_forward, reduced_forward, site_thetas};
use pedlump::sim::{simulate_genotypes, simulate_pedigree};
use pedlump::state::format_state;
use pedlump::{InheritanceState, Partition};
use serde::Serialize;

use crate::pipeline::{load_pedigree, prune, read_file, reduce_pedigree, write_file, Variant};
use crate::{
    CliError, CliResult, LikelihoodArgs, ReduceArgs, Shared, SimulateArgs, VerifyArgs, EXIT_OK,
    EXIT_VERIFY_FAILED, SCHEMA_VERSION,
};

/// Describes how the simulator sizes generations; echoed in its metadata.
pub const OFFSPRING_MODEL: &str = "interior generations hold exactly per_gen children spread \
uniformly over couples; the last generation draws an unconditioned Poisson count per couple";

fn elapsed_ms(shared: &Shared, start: Instant) -> Option<f64> {
    (!shared.no_timing).then(|| start.elapsed().as_secs_f64() * 1e3)
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(std::io::Error::from)?;
    writeln!(out)?;
    Ok(())
}

fn full_states(n: usize) -> u64 {
    1u64 << n
}

#[derive(Serialize)]
struct ReduceSummary {
    schema_version: u32,
    command: &'static str,
    variant: Variant,
    original_meioses: usize,
    meioses: Vec<String>,
    n: usize,
    full_states: u64,
    emission_blocks: usize,
    ensemble_blocks: usize,
    generators: usize,
    representatives: usize,
    passes: usize,
    coefficient_tables: u64,
    runtime_ms: Option<f64>,
}

pub fn reduce(shared: &Shared, args: &ReduceArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<i32> {
    let start = Instant::now();
    let prepared = load_pedigree(&args.pedigree, shared.meiosis_order.as_deref())?;
    let ped = &prepared.pedigree;
    let r = reduce_pedigree(ped, shared.variant(), shared.max_meioses())?;
    let runtime_ms = elapsed_ms(shared, start);

    let chosen = if args.emission_only { &r.emission } else { &r.ensemble };
    match &args.out {
        Some(path) => write_file(path, &chosen.to_text())?,
        None => out.write_all(chosen.to_text().as_bytes())?,
    }
    let summary = ReduceSummary {
        schema_version: SCHEMA_VERSION,
        command: "reduce",
        variant: r.variant,
        original_meioses: prepared.original_n,
        meioses: ped.meioses().iter().map(|&m| ped.meiosis_label(m)).collect(),
        n: ped.n(),
        full_states: full_states(ped.n()),
        emission_blocks: r.emission.num_blocks(),
        ensemble_blocks: r.ensemble.num_blocks(),
        generators: r.generators,
        representatives: r.representatives,
        passes: r.passes,
        coefficient_tables: r.tables,
        runtime_ms,
    };
    match &args.summary {
        Some(path) => {
            let mut buf = Vec::new();
            write_json(&mut buf, &summary)?;
            write_file(path, &String::from_utf8_lossy(&buf))?;
        }
        None => write_json(err, &summary)?,
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct LikelihoodSummary {
    schema_version: u32,
    command: &'static str,
    variant: Variant,
    n: usize,
    full_states: u64,
    reduced_states: usize,
    sites: usize,
    lambda: f64,
    log_likelihood: f64,
    naive_log_likelihood: Option<f64>,
    transition_ops: u64,
    naive_transition_ops: Option<u64>,
    runtime_ms: Option<f64>,
}

pub fn likelihood(shared: &Shared, args: &LikelihoodArgs, out: &mut dyn Write) -> CliResult<i32> {
    let start = Instant::now();
    let prepared = load_pedigree(&args.pedigree, shared.meiosis_order.as_deref())?;
    let ped = &prepared.pedigree;
    let data = GenotypeData::parse(&read_file(&args.genotypes)?)?;
    let freqs = AlleleFrequencies::parse(&read_file(&args.frequencies)?)?;
    let r = reduce_pedigree(ped, shared.variant(), shared.max_meioses())?;
    let model = build_reduced(&r.ensemble)?;
    let emitter = Emitter::new(ped, &data, &freqs)?;
    let distances: Vec<f64> = data.sites.iter().map(|s| s.distance).collect();
    let thetas = site_thetas(&distances, args.lambda)?;
    let reduced = reduced_forward(&model, &emitter, &thetas)?;
    let naive = if args.check_naive {
        Some(naive_forward(&emitter, &thetas)?)
    } else {
        None
    };
    let summary = LikelihoodSummary {
        schema_version: SCHEMA_VERSION,
        command: "likelihood",
        variant: r.variant,
        n: ped.n(),
        full_states: full_states(ped.n()),
        reduced_states: model.num_blocks(),
        sites: data.num_sites(),
        lambda: args.lambda,
        log_likelihood: reduced.log_likelihood,
        naive_log_likelihood: naive.map(|f| f.log_likelihood),
        transition_ops: reduced.transition_ops,
        naive_transition_ops: naive.map(|f| f.transition_ops),
        runtime_ms: elapsed_ms(shared, start),
    };
    write_json(out, &summary)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SimulatedReplicate {
    replicate: u64,
    individuals: usize,
    meioses: usize,
    relevant_meioses: Option<usize>,
    pedigree: Option<String>,
    genotypes: Option<String>,
    status: String,
}

#[derive(Serialize)]
struct SimulateSummary {
    schema_version: u32,
    command: &'static str,
    seed: u64,
    generations: usize,
    per_gen: usize,
    offspring_mean: f64,
    halfsib: bool,
    offspring_model: &'static str,
    sites: usize,
    spacing: f64,
    lambda: f64,
    frequencies: String,
    replicates: Vec<SimulatedReplicate>,
}

pub fn simulate(shared: &Shared, args: &SimulateArgs, out: &mut dyn Write) -> CliResult<i32> {
    if shared.meiosis_order.is_some() {
        return Err(CliError::Usage("--meiosis-order needs an input pedigree".into()));
    }
    let freqs = match &args.frequencies {
        Some(path) => AlleleFrequencies::parse(&read_file(path)?)?,
        None => AlleleFrequencies::uniform(args.alleles)?,
    };
    fs::create_dir_all(&args.out_dir).map_err(|source| CliError::Io {
        path: args.out_dir.clone(),
        source,
    })?;
    write_file(&args.out_dir.join("freqs.txt"), &freqs.to_text())?;
    let params = args.params.pedigree_params();
    let distances = vec![args.spacing; args.sites.saturating_sub(1)];
    let mut replicates = Vec::new();
    for rep in 0..args.params.replicates {
        let ped = simulate_pedigree(&params, shared.seed, rep)?;
        let mut record = SimulatedReplicate {
            replicate: rep,
            individuals: ped.individuals().len(),
            meioses: ped.n(),
            relevant_meioses: None,
            pedigree: None,
            genotypes: None,
            status: "ok".into(),
        };
        let ped_name = format!("rep{rep}.ped");
        // Genotypes are sampled on the pruned pedigree: dropped meioses
        // never change which interest alleles share a founder allele.
        let pruned = match prune(&ped) {
            Ok(p) => p,
            Err(e) => {
                if !args.reducible_only {
                    write_file(&args.out_dir.join(&ped_name), &ped.to_text())?;
                    record.pedigree = Some(ped_name);
                }
                record.status = format!("no genotypes: {e}");
                replicates.push(record);
                continue;
            }
        };
        record.relevant_meioses = Some(pruned.n());
        if args.reducible_only && pruned.n() > shared.max_meioses() {
            record.status = format!("skipped: {} relevant meioses", pruned.n());
            replicates.push(record);
            continue;
        }
        write_file(&args.out_dir.join(&ped_name), &ped.to_text())?;
        record.pedigree = Some(ped_name);
        if args.sites > 0 {
            let (data, _) = simulate_genotypes(&pruned, &distances, &freqs, args.lambda, shared.seed, rep)?;
            let geno_name = format!("rep{rep}.geno");
            write_file(&args.out_dir.join(&geno_name), &data.to_text())?;
            record.genotypes = Some(geno_name);
        }
        replicates.push(record);
    }
    let summary = SimulateSummary {
        schema_version: SCHEMA_VERSION,
        command: "simulate",
        seed: shared.seed,
        generations: params.generations,
        per_gen: params.per_gen_n,
        offspring_mean: params.offspring_mean,
        halfsib: params.halfsib,
        offspring_model: OFFSPRING_MODEL,
        sites: args.sites,
        spacing: args.spacing,
        lambda: args.lambda,
        frequencies: "freqs.txt".into(),
        replicates,
    };
    let mut buf = Vec::new();
    write_json(&mut buf, &summary)?;
    write_file(&args.out_dir.join("simulate.json"), &String::from_utf8_lossy(&buf))?;
    out.write_all(&buf)?;
    Ok(EXIT_OK)
}

pub fn verify(shared: &Shared, args: &VerifyArgs, out: &mut dyn Write) -> CliResult<i32> {
    let prepared = load_pedigree(&args.pedigree, shared.meiosis_order.as_deref())?;
    let ped = &prepared.pedigree;
    let p = Partition::parse(&read_file(&args.partition)?)?;
    let n = ped.n();
    if p.width() != n {
        return Err(CliError::Usage(format!(
            "partition is over {} meioses but the pedigree has {n} relevant meioses",
            p.width()
        )));
    }
    if let Err(w) = verify_markov(&p) {
        writeln!(out, "FAIL markov witness {w}")?;
        for x in [w.x1, w.x2] {
            let c = coefficient_vector(InheritanceState::new(x, n)?, &w.target);
            writeln!(out, "  {} {c}", format_state(x, n))?;
        }
        return Ok(EXIT_VERIFY_FAILED);
    }
    let e = emission_partition(ped)?;
    let canon = p.canonical();
    for block in canon.blocks() {
        if let Some(&y) = block.iter().find(|&&y| e.block_of(y) != e.block_of(block[0])) {
            writeln!(
                out,
                "FAIL emission {} and {} share a block but differ in emission",
                format_state(block[0], n),
                format_state(y, n)
            )?;
            return Ok(EXIT_VERIFY_FAILED);
        }
    }
    writeln!(out, "OK {} blocks, markov, refines emission", p.num_blocks())?;
    Ok(EXIT_OK)
}
