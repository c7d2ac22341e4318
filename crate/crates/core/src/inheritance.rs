//! Inheritance graphs, IBD signatures and the identity-state partition.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::pedigree::{Pedigree, Role};
use crate::state::{mask_of, InheritanceState, State, MAX_WIDTH};

/// Allele node `2 * individual + role`.
pub type Allele = usize;

pub fn allele(individual: usize, role: Role) -> Allele {
    2 * individual + role.index()
}

pub fn allele_name(ped: &Pedigree, a: Allele) -> String {
    let tag = if a % 2 == 0 { "p" } else { "m" };
    format!("{}_{}", ped.individuals()[a / 2].id, tag)
}

/// Forest over allele nodes for one inheritance state. Every allele with an
/// indexed meiosis has exactly one incoming edge; the rest are roots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InheritanceGraph {
    parent: Vec<Option<Allele>>,
    root: Vec<Allele>,
}

impl InheritanceGraph {
    pub fn num_alleles(&self) -> usize {
        self.parent.len()
    }

    pub fn parent(&self, a: Allele) -> Option<Allele> {
        self.parent[a]
    }

    /// `(parent allele, child allele)` edges, ordered by child.
    pub fn edges(&self) -> Vec<(Allele, Allele)> {
        self.parent
            .iter()
            .enumerate()
            .filter_map(|(child, p)| p.map(|p| (p, child)))
            .collect()
    }

    pub fn in_degree(&self, a: Allele) -> usize {
        usize::from(self.parent[a].is_some())
    }

    /// The founder allele at the top of `a`'s tree.
    pub fn root(&self, a: Allele) -> Allele {
        self.root[a]
    }

    pub fn connected(&self, a: Allele, b: Allele) -> bool {
        self.root[a] == self.root[b]
    }
}

pub fn inheritance_graph(ped: &Pedigree, x: InheritanceState) -> Result<InheritanceGraph> {
    let x = x.expect_width(ped.n())?;
    let prog = Program::compile(ped);
    let mut root = vec![0; prog.alleles];
    prog.roots(x.bits(), &mut root);
    let mut parent = vec![None; prog.alleles];
    for step in &prog.steps {
        if let Some((p, mask)) = step.source {
            parent[step.allele] = Some(allele(p, Role::from_index(usize::from(x.bits() & mask != 0))));
        }
    }
    Ok(InheritanceGraph { parent, root })
}

/// Set partition of the labelled alleles (`Pedigree::labeled_alleles`) into
/// shared components, stored as a restricted growth string: entry `k` is the
/// block of the `k`-th labelled allele and blocks are numbered by first
/// appearance, so blocks are ordered by their smallest allele.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IbdSignature(pub Vec<u8>);

impl IbdSignature {
    pub fn num_blocks(&self) -> usize {
        self.0.iter().map(|&c| c as usize + 1).max().unwrap_or(0)
    }

    /// Blocks of labelled allele slots.
    pub fn blocks(&self, ped: &Pedigree) -> Vec<Vec<(usize, Role)>> {
        let labels = ped.labeled_alleles();
        let mut out = vec![Vec::new(); self.num_blocks()];
        for (k, &c) in self.0.iter().enumerate() {
            out[c as usize].push(labels[k]);
        }
        out
    }

    pub fn describe(&self, ped: &Pedigree) -> String {
        let parts: Vec<String> = self
            .blocks(ped)
            .iter()
            .map(|b| {
                let names: Vec<String> =
                    b.iter().map(|&(i, r)| allele_name(ped, allele(i, r))).collect();
                format!("{{{}}}", names.join(","))
            })
            .collect();
        parts.join("")
    }
}

pub fn ibd_signature(ped: &Pedigree, x: InheritanceState) -> Result<IbdSignature> {
    let x = x.expect_width(ped.n())?;
    let prog = Program::compile(ped);
    let mut root = vec![0; prog.alleles];
    let mut scratch = vec![u8::MAX; prog.alleles];
    let mut out = Vec::with_capacity(prog.labeled.len());
    prog.signature(x.bits(), &mut root, &mut scratch, &mut out);
    Ok(IbdSignature(out))
}

/// Classes of `ibd_signature` over all of `H_n`, blocks in order of their
/// smallest state.
pub fn identity_states(ped: &Pedigree) -> Result<Partition> {
    let table = SignatureTable::build(ped)?;
    Partition::from_labels(ped.n(), table.ids())
}

/// One signature id per state plus the distinct signatures.
#[derive(Debug, Clone)]
pub struct SignatureTable {
    ids: Vec<u32>,
    signatures: Vec<IbdSignature>,
}

impl SignatureTable {
    pub fn build(ped: &Pedigree) -> Result<Self> {
        let n = ped.n();
        if n > MAX_WIDTH {
            return Err(Error::TooManyMeioses { n, cap: MAX_WIDTH });
        }
        let prog = Program::compile(ped);
        let mut root = vec![0; prog.alleles];
        let mut scratch = vec![u8::MAX; prog.alleles];
        let mut buf = Vec::with_capacity(prog.labeled.len());
        let mut lookup: HashMap<Box<[u8]>, u32> = HashMap::new();
        let mut signatures = Vec::new();
        let mut ids = Vec::with_capacity(1 << n);
        for x in 0..(1u32 << n) {
            prog.signature(x, &mut root, &mut scratch, &mut buf);
            let id = match lookup.get(&buf[..]) {
                Some(&id) => id,
                None => {
                    let id = signatures.len() as u32;
                    lookup.insert(buf.clone().into_boxed_slice(), id);
                    signatures.push(IbdSignature(buf.clone()));
                    id
                }
            };
            ids.push(id);
        }
        Ok(SignatureTable { ids, signatures })
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn signature(&self, x: State) -> &IbdSignature {
        &self.signatures[self.ids[x as usize] as usize]
    }

    pub fn signatures(&self) -> &[IbdSignature] {
        &self.signatures
    }
}

struct Step {
    allele: Allele,
    /// Parent individual and the state mask of the meiosis, if indexed.
    source: Option<(usize, State)>,
}

/// Allele updates in topological order, so one sweep resolves every root.
pub(crate) struct Program {
    alleles: usize,
    steps: Vec<Step>,
    labeled: Vec<Allele>,
}

impl Program {
    pub(crate) fn compile(ped: &Pedigree) -> Self {
        let n = ped.n();
        let mut steps = Vec::with_capacity(2 * ped.individuals().len());
        for &i in ped.topological_order() {
            for role in Role::BOTH {
                let source = ped
                    .bit_of(i, role)
                    .map(|bit| (ped.parent(i, role).expect("indexed meiosis"), mask_of(bit, n)));
                steps.push(Step {
                    allele: allele(i, role),
                    source,
                });
            }
        }
        let labeled = ped
            .labeled_alleles()
            .into_iter()
            .map(|(i, r)| allele(i, r))
            .collect();
        Program {
            alleles: 2 * ped.individuals().len(),
            steps,
            labeled,
        }
    }

    pub(crate) fn num_alleles(&self) -> usize {
        self.alleles
    }

    #[inline]
    pub(crate) fn roots(&self, x: State, root: &mut [Allele]) {
        for step in &self.steps {
            root[step.allele] = match step.source {
                None => step.allele,
                Some((p, mask)) => root[2 * p + usize::from(x & mask != 0)],
            };
        }
    }

    /// Writes the restricted growth string of state `x` into `out`.
    /// `scratch` must be all `u8::MAX` on entry and is restored on exit.
    #[inline]
    pub(crate) fn signature(
        &self,
        x: State,
        root: &mut [Allele],
        scratch: &mut [u8],
        out: &mut Vec<u8>,
    ) {
        self.roots(x, root);
        out.clear();
        let mut next = 0u8;
        for &a in &self.labeled {
            let r = root[a];
            if scratch[r] == u8::MAX {
                scratch[r] = next;
                next += 1;
            }
            out.push(scratch[r]);
        }
        for &a in &self.labeled {
            scratch[root[a]] = u8::MAX;
        }
    }
}
