//! The refinement loop shared by the full and orbit-based algorithms.
//!
//! A unit is a set of states known to share coefficient tables: a single
//! state, or an orbit of isometries fixing every block. Each unit is
//! represented by its first member.
//!
//! Each group carries the last pass at whose starting partition all its
//! members had equal tables: the pass it was confirmed in, inherited by the
//! part that split off. Against every block that existed then and did not
//! split since, its members still agree. For a block `D` that split into `S`
//! and `R`, agreement on `D` and on the smaller of `S`, `R` implies agreement
//! on the other, so such groups only count distances to the smaller halves
//! of the splits made since. Tables are compared block by block, and a group
//! stops scanning once every member has differed from its reference. The
//! outcome of every comparison, and therefore every pass, is the same as
//! recomputing full tables.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::ensemble::Representative;
use crate::error::{Error, Result};
use crate::state::{hamming, State};

pub(crate) struct Units {
    reps: Vec<State>,
    offsets: Vec<usize>,
    members: Vec<State>,
}

impl Units {
    pub(crate) fn singletons(n: usize) -> Units {
        let size = 1usize << n;
        Units {
            reps: (0..size as State).collect(),
            offsets: (0..=size).collect(),
            members: (0..size as State).collect(),
        }
    }

    /// Units from blocks listed with their representative first.
    pub(crate) fn from_blocks(blocks: &[Vec<State>]) -> Units {
        let mut offsets = vec![0];
        let mut members = Vec::new();
        for b in blocks {
            members.extend_from_slice(b);
            offsets.push(members.len());
        }
        Units {
            reps: blocks.iter().map(|b| b[0]).collect(),
            offsets,
            members,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.reps.len()
    }

    pub(crate) fn rep(&self, u: usize) -> State {
        self.reps[u]
    }

    pub(crate) fn members(&self, u: usize) -> &[State] {
        &self.members[self.offsets[u]..self.offsets[u + 1]]
    }

    fn states_in(&self, group: &[usize]) -> usize {
        group.iter().map(|&u| self.offsets[u + 1] - self.offsets[u]).sum()
    }
}

pub(crate) struct Outcome {
    pub groups: Vec<Vec<usize>>,
    pub passes: usize,
    pub block_counts: Vec<usize>,
    /// Unit comparisons made.
    pub tables: u64,
    /// Distances computed over all comparisons.
    pub scanned: u64,
    /// `(pass, kept part)` for every split.
    pub kept: Vec<(usize, Vec<usize>)>,
}

struct Split {
    same: Vec<usize>,
    rest: Vec<usize>,
    tables: u64,
    scanned: u64,
}

/// States listed block by block.
#[derive(Default)]
struct Layout {
    states: Vec<State>,
    starts: Vec<usize>,
}

impl Layout {
    fn push_block(&mut self, members: impl IntoIterator<Item = State>) {
        if self.starts.is_empty() {
            self.starts.push(0);
        }
        self.states.extend(members);
        self.starts.push(self.states.len());
    }

    fn clear(&mut self) {
        self.states.clear();
        self.starts.clear();
    }

    fn blocks(&self) -> usize {
        self.starts.len().saturating_sub(1)
    }

    fn histogram(&self, x: State, b: usize, out: &mut [u32]) {
        out.fill(0);
        for &y in &self.states[self.starts[b]..self.starts[b + 1]] {
            out[hamming(x, y) as usize] += 1;
        }
    }
}

/// Which of `others` have the same table against `layouts` as
/// `reference`. Blocks are visited in order and the scan stops once every
/// one has differed somewhere. Also returns the states visited.
fn same_tables(
    layouts: &[&Layout],
    reference: State,
    others: &[State],
    n: usize,
    hists: &mut (Vec<u32>, Vec<u32>),
) -> (Vec<bool>, u64) {
    let (ref_hist, hist) = hists;
    ref_hist.resize(n + 1, 0);
    hist.resize(n + 1, 0);
    let mut same = vec![true; others.len()];
    let mut undecided: Vec<usize> = (0..others.len()).collect();
    let mut scanned = 0;
    'scan: for layout in layouts {
        for b in 0..layout.blocks() {
            if undecided.is_empty() {
                break 'scan;
            }
            let size = (layout.starts[b + 1] - layout.starts[b]) as u64;
            layout.histogram(reference, b, ref_hist);
            scanned += size * (1 + undecided.len() as u64);
            undecided.retain(|&i| {
                layout.histogram(others[i], b, hist);
                same[i] = hist == ref_hist;
                same[i]
            });
        }
    }
    (same, scanned)
}

/// Iterates the split-off-the-reference step until no group splits.
pub(crate) fn refine(
    units: &Units,
    mut groups: Vec<Vec<usize>>,
    n: usize,
    representative: Representative,
    cap: usize,
) -> Result<Outcome> {
    let mut out = Outcome {
        groups: Vec::new(),
        passes: 0,
        block_counts: Vec::new(),
        tables: 0,
        scanned: 0,
        kept: Vec::new(),
    };
    // Pass whose starting partition a group's members agree on, if any.
    let mut stamps: Vec<Option<usize>> = vec![None; groups.len()];
    // `deltas[p - oldest]` holds the smaller halves of pass `p`'s splits.
    let mut deltas: VecDeque<Layout> = VecDeque::new();
    let mut oldest = 1;
    let mut current = Layout::default();
    loop {
        if out.passes == cap {
            return Err(Error::NoConvergence(cap));
        }
        out.passes += 1;
        let pass = out.passes;
        current.clear();
        for group in &groups {
            current.push_block(group.iter().flat_map(|&u| units.members(u).iter().copied()));
        }
        let k = groups.len();
        let splits: Vec<Split> = groups
            .par_iter()
            .zip(stamps.par_iter())
            .map_init(
                || (Vec::new(), Vec::new()),
                |hists, (group, &stamp)| {
                    if group.len() == 1 {
                        return Split {
                            same: group.clone(),
                            rest: Vec::new(),
                            tables: 0,
                            scanned: 0,
                        };
                    }
                    let ref_unit = match representative {
                        Representative::Smallest => *group
                            .iter()
                            .min_by_key(|&&u| units.rep(u))
                            .expect("non-empty"),
                        Representative::First => group[0],
                    };
                    let layouts: Vec<&Layout> = match stamp {
                        Some(s) => deltas.range(s - oldest..).collect(),
                        None => vec![&current],
                    };
                    let others: Vec<usize> = group.iter().copied().filter(|&u| u != ref_unit).collect();
                    let reps: Vec<State> = others.iter().map(|&u| units.rep(u)).collect();
                    let (flags, scanned) = same_tables(&layouts, units.rep(ref_unit), &reps, n, hists);
                    let (mut same, mut rest) = (Vec::new(), Vec::new());
                    let mut flags = flags.into_iter();
                    for &u in group {
                        if u == ref_unit || flags.next().expect("one flag per other unit") {
                            same.push(u);
                        } else {
                            rest.push(u);
                        }
                    }
                    Split {
                        same,
                        rest,
                        tables: group.len() as u64,
                        scanned,
                    }
                },
            )
            .collect();

        let mut next = Vec::with_capacity(k);
        let mut next_stamps = Vec::with_capacity(k);
        let mut delta = Layout::default();
        for (split, stamp) in splits.into_iter().zip(stamps) {
            out.tables += split.tables;
            out.scanned += split.scanned;
            let split_here = !split.rest.is_empty();
            if split_here {
                out.kept.push((pass, split.same.clone()));
                let smaller = if units.states_in(&split.same) <= units.states_in(&split.rest) {
                    &split.same
                } else {
                    &split.rest
                };
                delta.push_block(smaller.iter().flat_map(|&u| units.members(u).iter().copied()));
            }
            next.push(split.same);
            next_stamps.push(Some(pass));
            if split_here {
                next.push(split.rest);
                next_stamps.push(stamp);
            }
        }
        deltas.push_back(delta);
        out.block_counts.push(next.len());
        let done = next.len() == groups.len();
        groups = next;
        stamps = next_stamps;
        if done {
            break;
        }
        // Deltas older than every stamp are never read again.
        let live = stamps.iter().flatten().min().copied().unwrap_or(pass + 1);
        while oldest < live && !deltas.is_empty() {
            deltas.pop_front();
            oldest += 1;
        }
    }
    out.groups = groups;
    Ok(out)
}
