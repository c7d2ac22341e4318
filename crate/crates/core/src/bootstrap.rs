//! Isometries that can be read off the pedigree structure, and the maximum
//! ensemble computed on orbit representatives only.

use std::collections::BTreeSet;

use crate::ensemble::{pass_cap, Representative};
use crate::emission::proper_automorphisms;
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::refine::{refine, Units};
use crate::pedigree::{Pedigree, Role};
use crate::state::{mask_of, State};
use crate::symmetry::{orbits, Isometry};

fn untyped(ped: &Pedigree, i: usize) -> bool {
    let ind = &ped.individuals()[i];
    !ind.genotyped && !ind.of_interest
}

/// Role an individual plays as a parent of `child`.
fn role_towards(ped: &Pedigree, parent: usize, child: usize) -> Role {
    match ped.parents(child) {
        Some([father, _]) if father == parent => Role::Paternal,
        _ => Role::Maternal,
    }
}

/// Bits of the live meioses from `parent` into its children.
fn outgoing_bits(ped: &Pedigree, parent: usize) -> Vec<usize> {
    ped.children(parent)
        .iter()
        .filter_map(|&c| ped.bit_of(c, role_towards(ped, parent, c)))
        .collect()
}

/// Whether both of `i`'s alleles are effectively founder alleles: `i` is a
/// founder, or both meioses into `i` were pruned.
fn founder_like(ped: &Pedigree, i: usize) -> bool {
    ped.is_founder(i) || Role::BOTH.into_iter().all(|r| ped.bit_of(i, r).is_none())
}

/// For each untyped founder, or individual whose incoming meioses were both
/// pruned, the switch flipping every live meiosis out of it: relabelling
/// its two alleles.
pub fn founder_isometries(ped: &Pedigree) -> Vec<Isometry> {
    let n = ped.n();
    (0..ped.individuals().len())
        .filter(|&i| founder_like(ped, i) && untyped(ped, i))
        .filter_map(|i| {
            let switch = outgoing_bits(ped, i)
                .into_iter()
                .fold(0, |acc, b| acc | mask_of(b, n));
            (switch != 0).then(|| Isometry::switch_only(switch, n).expect("bits in range"))
        })
        .collect()
}

/// For each untyped founder couple whose members have children only with
/// each other, swap every child's paternal and maternal meiosis. A child's
/// two alleles trade places under that swap, so the meioses out of the
/// children are switched as well.
pub fn couple_isometries(ped: &Pedigree) -> Vec<Isometry> {
    let n = ped.n();
    let mut out = Vec::new();
    for father in 0..ped.individuals().len() {
        if !ped.is_founder(father) || !untyped(ped, father) || ped.children(father).is_empty() {
            continue;
        }
        let kids = ped.children(father);
        let Some([_, mother]) = ped.parents(kids[0]) else {
            continue;
        };
        if role_towards(ped, father, kids[0]) != Role::Paternal
            || !ped.is_founder(mother)
            || !untyped(ped, mother)
            || kids.iter().any(|&c| ped.parents(c) != Some([father, mother]))
            || ped.children(mother).len() != kids.len()
        {
            continue;
        }
        let mut cycles = Vec::new();
        let mut switch = 0;
        let mut live = true;
        for &c in kids {
            match (ped.bit_of(c, Role::Paternal), ped.bit_of(c, Role::Maternal)) {
                (Some(p), Some(m)) => cycles.push(vec![p, m]),
                _ => live = false,
            }
            for b in outgoing_bits(ped, c) {
                switch |= mask_of(b, n);
            }
        }
        if !live {
            continue;
        }
        let refs: Vec<&[usize]> = cycles.iter().map(Vec::as_slice).collect();
        let perm = Isometry::from_cycles(n, &refs).expect("disjoint transpositions");
        out.push(Isometry::new(perm.perm().to_vec(), switch).expect("valid switch"));
    }
    out
}

/// The parent through which `i` continues a lineage, if `i` can sit inside
/// one: untyped, both parents known, exactly one child, and at least one
/// parent an untyped founder whose only child is `i`.
fn lineage_parent(ped: &Pedigree, i: usize) -> Option<(usize, Role)> {
    let [father, mother] = ped.parents(i)?;
    if !untyped(ped, i) || ped.children(i).len() != 1 {
        return None;
    }
    let private = |p: usize| ped.is_founder(p) && untyped(ped, p) && ped.children(p) == [i];
    if private(mother) {
        Some((father, Role::Paternal))
    } else if private(father) {
        Some((mother, Role::Maternal))
    } else {
        None
    }
}

/// For each maximal lineage `P_1 -> ... -> P_r` (r ≥ 2) of single-child
/// untyped individuals, each with a private founder parent, a cycle over the
/// meioses `P_k -> child(P_k)`. Which of those meioses carries the lineage
/// allele depends on whether the lineage runs through `P_k`'s father or
/// mother, so the cycle is paired with the switch that realigns them.
pub fn chain_isometries(ped: &Pedigree) -> Vec<Isometry> {
    let n = ped.n();
    let m = ped.individuals().len();
    let lineage: Vec<Option<(usize, Role)>> = (0..m).map(|i| lineage_parent(ped, i)).collect();
    let next = |i: usize| -> Option<usize> {
        let c = ped.children(i)[0];
        match lineage[c] {
            Some((p, _)) if p == i => Some(c),
            _ => None,
        }
    };
    let mut out = Vec::new();
    for start in 0..m {
        if lineage[start].is_none() {
            continue;
        }
        if let Some((p, _)) = lineage[start] {
            if lineage[p].is_some() && next(p) == Some(start) {
                continue;
            }
        }
        let mut chain = vec![start];
        while let Some(c) = next(*chain.last().expect("non-empty")) {
            chain.push(c);
        }
        if chain.len() < 2 {
            continue;
        }
        let mut bits = Vec::with_capacity(chain.len());
        for &p in &chain {
            let c = ped.children(p)[0];
            bits.push(ped.bit_of(c, role_towards(ped, p, c)));
        }
        let Some(bits) = bits.into_iter().collect::<Option<Vec<usize>>>() else {
            continue;
        };
        let side: Vec<bool> = chain
            .iter()
            .map(|&p| lineage[p].expect("in lineage").1 == Role::Maternal)
            .collect();
        let r = chain.len();
        let mut switch = 0;
        for k in 0..r {
            if side[k] != side[(k + 1) % r] {
                switch |= mask_of(bits[k], n);
            }
        }
        let perm = Isometry::from_cycles(n, &[&bits]).expect("distinct bits");
        out.push(Isometry::new(perm.perm().to_vec(), switch).expect("valid switch"));
    }
    out
}

/// Founder, couple and chain isometries, plus the proper automorphisms
/// behind the emission partition, without duplicates or identities. All of
/// them fix every emission block.
pub fn auto_generators(ped: &Pedigree) -> Vec<Isometry> {
    let mut seen = BTreeSet::new();
    founder_isometries(ped)
        .into_iter()
        .chain(couple_isometries(ped))
        .chain(chain_isometries(ped))
        .chain(proper_automorphisms(ped))
        .filter(|t| !t.is_identity() && seen.insert(t.clone()))
        .collect()
}

/// Rejects generators that move any state out of its block of `e`.
pub fn validate_generators(e: &Partition, gens: &[Isometry]) -> Result<()> {
    for g in gens {
        if g.width() != e.width() {
            return Err(Error::WidthMismatch {
                expected: e.width(),
                got: g.width(),
            });
        }
        if (0..(1u32 << e.width())).any(|x| e.block_of(g.apply_bits(x)) != e.block_of(x)) {
            return Err(Error::GeneratorViolatesEmission(g.to_string()));
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct BootstrapReport {
    pub result: Partition,
    /// Number of orbits, i.e. representatives.
    pub orbits: usize,
    pub passes: usize,
    /// Coefficient comparisons, one per representative per pass at most.
    pub tables: u64,
    /// Distances computed for those comparisons.
    pub scanned: u64,
}

/// Maximum ensemble of `e`, evaluating coefficient tables only at the
/// smallest member of each orbit of `⟨gens⟩`.
///
/// Generators must fix every block of `e`. Every partition reached is then
/// a union of orbits and every orbit member shares its representative's
/// table, so splitting representatives and carrying their orbits along
/// reproduces the full refinement pass for pass.
pub fn bootstrap_maximum_ensemble(e: &Partition, gens: &[Isometry]) -> Result<BootstrapReport> {
    validate_generators(e, gens)?;
    let n = e.width();
    // Canonical order lists orbits by increasing representative.
    let units = Units::from_blocks(orbits(gens, n)?.canonical().blocks());
    let canon = e.canonical();
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); canon.num_blocks()];
    for o in 0..units.len() {
        groups[canon.block_of(units.rep(o))].push(o);
    }

    let run = refine(&units, groups, n, Representative::Smallest, pass_cap(n))?;
    let blocks: Vec<Vec<State>> = run
        .groups
        .iter()
        .map(|g| g.iter().flat_map(|&o| units.members(o).iter().copied()).collect())
        .collect();
    Ok(BootstrapReport {
        result: Partition::from_blocks(n, blocks)?.canonical(),
        orbits: units.len(),
        passes: run.passes,
        tables: run.tables,
        scanned: run.scanned,
    })
}
