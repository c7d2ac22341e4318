//! Loading, pruning and reducing a pedigree; shared by every subcommand.

use std::fs;
use std::path::Path;

use pedlump::bootstrap::{auto_generators, bootstrap_maximum_ensemble};
use pedlump::emission::emission_partition;
use pedlump::ensemble::{maximum_ensemble_traced, EnsembleOptions};
use pedlump::pedigree::PruneOptions;
use pedlump::{Error, Partition, Pedigree};
use serde::Serialize;

use crate::{CliError, CliResult};

/// Meiosis count up to which pruning enumerates states.
pub const PRUNE_CAP: usize = pedlump::state::MAX_WIDTH;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Full,
    Bootstrap,
}

impl Variant {
    pub fn default_max_meioses(self) -> usize {
        match self {
            Variant::Full => 14,
            Variant::Bootstrap => 18,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::Bootstrap => "bootstrap",
        }
    }
}

pub fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// A pedigree ready for reduction.
#[derive(Debug, Clone)]
pub struct Prepared {
    /// Meioses before pruning.
    pub original_n: usize,
    pub pedigree: Pedigree,
}

pub fn prune(ped: &Pedigree) -> pedlump::Result<Pedigree> {
    ped.prune_with(&PruneOptions {
        cap: PRUNE_CAP,
        structural_shortcut: true,
    })
}

/// Reads a pedigree, applies the meiosis order and prunes.
///
/// An order naming every meiosis is applied before pruning; one naming only
/// the relevant meioses is applied after.
pub fn load_pedigree(path: &Path, order: Option<&str>) -> CliResult<Prepared> {
    let ped = Pedigree::parse(&read_file(path)?)?;
    let order = match order {
        Some(spec) => Some(match spec.strip_prefix('@') {
            Some(file) => read_file(Path::new(file))?,
            None => spec.to_string(),
        }),
        None => None,
    };
    let original_n = ped.n();
    let pedigree = match order.as_deref().map(str::trim) {
        None => prune(&ped)?,
        Some(spec) => match ped.meiosis_order(Some(spec)) {
            Ok(ordered) => prune(&ordered)?,
            Err(first) => prune(&ped)?.meiosis_order(Some(spec)).map_err(|_| first)?,
        },
    };
    Ok(Prepared {
        original_n,
        pedigree,
    })
}

#[derive(Debug, Clone)]
pub struct Reduction {
    pub variant: Variant,
    pub emission: Partition,
    pub ensemble: Partition,
    /// Symmetry generators used; zero for the full variant.
    pub generators: usize,
    /// States whose coefficient tables were refined each pass.
    pub representatives: usize,
    pub passes: usize,
    /// Coefficient tables evaluated, each over `2^n` states.
    pub tables: u64,
}

/// Emission partition and maximum ensemble of an already pruned pedigree.
pub fn reduce_pedigree(ped: &Pedigree, variant: Variant, max_meioses: usize) -> pedlump::Result<Reduction> {
    let n = ped.n();
    if n > max_meioses {
        return Err(Error::TooManyMeioses { n, cap: max_meioses });
    }
    let emission = emission_partition(ped)?;
    match variant {
        Variant::Full => {
            let trace = maximum_ensemble_traced(&emission, EnsembleOptions::default())?;
            Ok(Reduction {
                variant,
                representatives: emission.num_states(),
                emission,
                ensemble: trace.result,
                generators: 0,
                passes: trace.passes,
                tables: trace.tables,
            })
        }
        Variant::Bootstrap => {
            let gens = auto_generators(ped);
            let report = bootstrap_maximum_ensemble(&emission, &gens)?;
            Ok(Reduction {
                variant,
                emission,
                ensemble: report.result,
                generators: gens.len(),
                representatives: report.orbits,
                passes: report.passes,
                tables: report.tables,
            })
        }
    }
}
