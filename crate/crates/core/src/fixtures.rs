//! Small reference pedigrees used by tests, examples and the CLI self-check.

use crate::pedigree::Pedigree;

pub const FULL_SIBS_PED: &str = include_str!("../fixtures/full_sibs.ped");
pub const HALF_COUSINS_PED: &str = include_str!("../fixtures/half_cousins.ped");
pub const HALF_COUSINS_ORDER: &str = include_str!("../fixtures/half_cousins.order");
pub const FIRST_COUSINS_PED: &str = include_str!("../fixtures/first_cousins.ped");
pub const GRANDPARENT_PED: &str = include_str!("../fixtures/grandparent.ped");
pub const LINEAGE_PED: &str = include_str!("../fixtures/lineage.ped");
pub const PARENT_CHILD_PED: &str = include_str!("../fixtures/parent_child.ped");
pub const TRIO_SIBS_PED: &str = include_str!("../fixtures/trio_sibs.ped");

/// Maximum ensemble of the full-sibling quartet.
pub const FULL_SIBS_ENSEMBLE: &str = include_str!("../fixtures/full_sibs.partition");
/// Maximum ensemble of the pruned half-cousin pedigree.
pub const HALF_COUSINS_ENSEMBLE: &str = include_str!("../fixtures/half_cousins.partition");
/// Emission partition of the pruned half-cousin pedigree.
pub const HALF_COUSINS_EMISSION: &str = include_str!("../fixtures/half_cousins_emission.partition");

fn load(text: &str) -> Pedigree {
    Pedigree::parse(text).expect("bundled pedigree is valid")
}

pub fn full_sibs() -> Pedigree {
    load(FULL_SIBS_PED)
}

/// Half-cousins with the maternal-line meioses ordered first.
pub fn half_cousins_unpruned() -> Pedigree {
    load(HALF_COUSINS_PED)
        .meiosis_order(Some(HALF_COUSINS_ORDER.trim()))
        .expect("bundled order is valid")
}

/// Half-cousins reduced to the four relevant meioses `A:m P1:m P2:m B:m`.
pub fn half_cousins() -> Pedigree {
    half_cousins_unpruned()
        .prune_irrelevant()
        .expect("small pedigree")
}

pub fn first_cousins() -> Pedigree {
    load(FIRST_COUSINS_PED)
}

pub fn grandparent() -> Pedigree {
    load(GRANDPARENT_PED)
}

pub fn lineage() -> Pedigree {
    load(LINEAGE_PED)
}

pub fn parent_child() -> Pedigree {
    load(PARENT_CHILD_PED)
}

pub fn trio_sibs() -> Pedigree {
    load(TRIO_SIBS_PED)
}
