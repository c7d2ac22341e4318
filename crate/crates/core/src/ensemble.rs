//! The maximum ensemble: the coarsest refinement of a partition of `H_n`
//! that lumps the hypercube recombination chain into a Markov chain.
//!
//! Two states `x1, x2` of one block are compatible when, for every block
//! `W`, the number of members of `W` at each Hamming distance agrees. Those
//! counts are the coefficients of the transition polynomial in `θ`, so
//! integer comparison decides equality for every `θ` at once.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::refine::{refine, Units};
use crate::state::{format_state, hamming, InheritanceState, State};

/// `a_k = #{y ∈ W : |x ⊕ y| = k}` for `k = 0..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoefficientVector(pub Vec<u32>);

impl CoefficientVector {
    /// `Σ_k a_k θ^k (1-θ)^{n-k}`.
    pub fn eval(&self, theta: f64) -> f64 {
        let n = self.0.len() - 1;
        self.0
            .iter()
            .enumerate()
            .filter(|&(_, &a)| a != 0)
            .map(|(k, &a)| a as f64 * theta.powi(k as i32) * (1.0 - theta).powi((n - k) as i32))
            .sum()
    }
}

impl fmt::Display for CoefficientVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

pub fn coefficient_vector(x: InheritanceState, w: &[State]) -> CoefficientVector {
    let mut out = vec![0u32; x.width() + 1];
    for &y in w {
        out[hamming(x.bits(), y) as usize] += 1;
    }
    CoefficientVector(out)
}

/// Coefficient vectors of `x` against every block at once, flattened as
/// `block * (n + 1) + distance`.
pub(crate) fn coefficient_table(x: State, block_of: &[u32], n: usize, out: &mut Vec<u32>, blocks: usize) {
    out.clear();
    out.resize(blocks * (n + 1), 0);
    for (y, &b) in block_of.iter().enumerate() {
        out[b as usize * (n + 1) + hamming(x, y as State) as usize] += 1;
    }
}

/// Which member of a block the others are compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Representative {
    /// Numerically smallest member.
    #[default]
    Smallest,
    /// First member in the block's stored order.
    First,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EnsembleOptions {
    pub representative: Representative,
}

/// One refinement step: each block splits into the members whose
/// coefficient vectors against every current block match the
/// representative's, and the rest. Blocks keep their order, with a split
/// block's remainder directly after it.
pub fn bipartition(p: &Partition) -> Partition {
    bipartition_with(p, EnsembleOptions::default()).0
}

/// Also returns the number of coefficient tables evaluated.
pub fn bipartition_with(p: &Partition, opts: EnsembleOptions) -> (Partition, u64) {
    let n = p.width();
    let k = p.num_blocks();
    let block_of = p.block_index();
    let pieces: Vec<(Vec<State>, Vec<State>, u64)> = p
        .blocks()
        .par_iter()
        .map_init(
            || (Vec::new(), Vec::new()),
            |(reference, scratch), block| {
                if block.len() == 1 {
                    return (block.clone(), Vec::new(), 0);
                }
                let rep = match opts.representative {
                    Representative::Smallest => *block.iter().min().expect("non-empty"),
                    Representative::First => block[0],
                };
                coefficient_table(rep, block_of, n, reference, k);
                let (mut same, mut rest) = (Vec::new(), Vec::new());
                for &x in block {
                    if x == rep {
                        same.push(x);
                        continue;
                    }
                    coefficient_table(x, block_of, n, scratch, k);
                    if scratch == reference {
                        same.push(x);
                    } else {
                        rest.push(x);
                    }
                }
                (same, rest, block.len() as u64)
            },
        )
        .collect();
    let mut tables = 0;
    let mut blocks = Vec::with_capacity(k);
    for (same, rest, t) in pieces {
        tables += t;
        blocks.push(same);
        if !rest.is_empty() {
            blocks.push(rest);
        }
    }
    let out = Partition::from_blocks(n, blocks).expect("split of a partition is a partition");
    (out, tables)
}

/// Record of one run of the refinement loop.
#[derive(Debug, Clone)]
pub struct EnsembleTrace {
    pub result: Partition,
    /// Passes run, including the final one that changed nothing.
    pub passes: usize,
    /// Block count after each pass.
    pub block_counts: Vec<usize>,
    /// Coefficient comparisons over all passes.
    pub tables: u64,
    /// Distances computed for those comparisons.
    pub scanned: u64,
    /// For every block split, the pass number and the part that matched the
    /// representative.
    pub kept_parts: Vec<(usize, Vec<State>)>,
}

/// Upper bound on refinement passes: every productive pass adds a block.
pub fn pass_cap(n: usize) -> usize {
    (1usize << n) + 1
}

pub fn maximum_ensemble(e: &Partition) -> Result<Partition> {
    Ok(maximum_ensemble_traced(e, EnsembleOptions::default())?.result)
}

pub fn maximum_ensemble_with(e: &Partition, opts: EnsembleOptions) -> Result<Partition> {
    Ok(maximum_ensemble_traced(e, opts)?.result)
}

/// Iterates [`bipartition`] to its fixpoint.
pub fn maximum_ensemble_traced(e: &Partition, opts: EnsembleOptions) -> Result<EnsembleTrace> {
    let n = e.width();
    let units = Units::singletons(n);
    let groups = e
        .blocks()
        .iter()
        .map(|b| b.iter().map(|&x| x as usize).collect())
        .collect();
    let run = refine(&units, groups, n, opts.representative, pass_cap(n))?;
    let to_states = |g: &[usize]| g.iter().map(|&u| u as State).collect::<Vec<State>>();
    let blocks = run.groups.iter().map(|g| to_states(g)).collect();
    Ok(EnsembleTrace {
        result: Partition::from_blocks(n, blocks)?.canonical(),
        passes: run.passes,
        block_counts: run.block_counts,
        tables: run.tables,
        scanned: run.scanned,
        kept_parts: run.kept.iter().map(|(p, g)| (*p, to_states(g))).collect(),
    })
}

/// A pair of states in one block whose coefficient vectors against a
/// target block differ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub width: usize,
    pub x1: State,
    pub x2: State,
    pub target: Vec<State>,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let target: Vec<String> = self.target.iter().map(|&y| format_state(y, self.width)).collect();
        write!(
            f,
            "({}, {}, {{{}}})",
            format_state(self.x1, self.width),
            format_state(self.x2, self.width),
            target.join(",")
        )
    }
}

impl From<Witness> for Error {
    fn from(w: Witness) -> Self {
        let target: Vec<String> = w.target.iter().map(|&y| format_state(y, w.width)).collect();
        Error::NotMarkov {
            x1: format_state(w.x1, w.width),
            x2: format_state(w.x2, w.width),
            target: format!("{{{}}}", target.join(",")),
        }
    }
}

/// Checks the lumpability condition for every block pair.
///
/// On failure the witness is taken from the first violating source block in
/// canonical order and, against it, the violating target block of smallest
/// size (then smallest member). Within the source block, members are grouped
/// by their coefficient vector against the target; `x1` and `x2` are the
/// smallest members of the two largest groups, larger group first and ties
/// going to the group with the smaller minimum.
pub fn verify_markov(p: &Partition) -> Result<(), Witness> {
    let canon = p.canonical();
    let n = canon.width();
    let k = canon.num_blocks();
    let block_of = canon.block_index();
    let mut reference = Vec::new();
    let mut scratch = Vec::new();
    for block in canon.blocks() {
        if block.len() == 1 {
            continue;
        }
        coefficient_table(block[0], block_of, n, &mut reference, k);
        let mut bad = vec![false; k];
        for &x in &block[1..] {
            coefficient_table(x, block_of, n, &mut scratch, k);
            for (j, flag) in bad.iter_mut().enumerate() {
                let r = j * (n + 1)..(j + 1) * (n + 1);
                *flag |= scratch[r.clone()] != reference[r];
            }
        }
        let Some(j) = (0..k)
            .filter(|&j| bad[j])
            .min_by_key(|&j| (canon.block(j).len(), canon.block(j)[0]))
        else {
            continue;
        };
        let target = canon.block(j);
        let mut groups: Vec<(CoefficientVector, Vec<State>)> = Vec::new();
        for &x in block {
            let v = coefficient_vector(InheritanceState::new(x, n).expect("in range"), target);
            match groups.iter_mut().find(|g| g.0 == v) {
                Some(g) => g.1.push(x),
                None => groups.push((v, vec![x])),
            }
        }
        groups.sort_by_key(|g| (std::cmp::Reverse(g.1.len()), g.1[0]));
        return Err(Witness {
            width: n,
            x1: groups[0].1[0],
            x2: groups[1].1[0],
            target: target.to_vec(),
        });
    }
    Ok(())
}

/// True iff every block of `p` lies inside a block of `q`.
pub fn verify_refines(p: &Partition, q: &Partition) -> Result<bool> {
    p.refines(q)
}
