//! Pedigree data model: parsing, validation, meiosis indexing and pruning of
//! meioses that can never influence the IBD pattern of the individuals of
//! interest.
//!
//! The text format is line oriented, one individual per line:
//!
//! ```text
//! # id  father  mother  sex  genotyped  interest
//! dad   0       0       M    0          0
//! mom   0       0       F    0          0
//! c1    dad     mom     M    1          1
//! ```
//!
//! `0` marks a missing parent. Sex accepts `M`/`F` (or `1`/`2`); the two flags
//! accept `0`/`1`.

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::inheritance::SignatureTable;

/// Largest pre-pruning meiosis count the exhaustive flip test accepts.
pub const DEFAULT_PRUNE_CAP: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sex {
    Male,
    Female,
}

/// Which parent a meiosis comes from, equivalently which allele slot of the
/// child it fills.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Paternal,
    Maternal,
}

impl Role {
    pub const BOTH: [Role; 2] = [Role::Paternal, Role::Maternal];

    pub fn index(self) -> usize {
        match self {
            Role::Paternal => 0,
            Role::Maternal => 1,
        }
    }

    pub fn flip(self) -> Role {
        match self {
            Role::Paternal => Role::Maternal,
            Role::Maternal => Role::Paternal,
        }
    }

    pub fn from_index(i: usize) -> Role {
        if i == 0 {
            Role::Paternal
        } else {
            Role::Maternal
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Individual {
    pub id: String,
    pub father: Option<String>,
    pub mother: Option<String>,
    pub sex: Sex,
    pub genotyped: bool,
    pub of_interest: bool,
}

impl Individual {
    pub fn founder(id: &str, sex: Sex) -> Self {
        Individual {
            id: id.to_string(),
            father: None,
            mother: None,
            sex,
            genotyped: false,
            of_interest: false,
        }
    }

    pub fn child(id: &str, father: &str, mother: &str, sex: Sex) -> Self {
        Individual {
            id: id.to_string(),
            father: Some(father.to_string()),
            mother: Some(mother.to_string()),
            sex,
            genotyped: false,
            of_interest: false,
        }
    }

    pub fn interest(mut self) -> Self {
        self.of_interest = true;
        self.genotyped = true;
        self
    }
}

/// A transmission from a parent to one allele slot of a child.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Meiosis {
    /// Index of the child in [`Pedigree::individuals`].
    pub child: usize,
    pub role: Role,
}

/// A validated pedigree with an ordered meiosis index.
///
/// Individuals are stored sorted by id; that order is also the global allele
/// order used for IBD signatures. Bit `i` of an inheritance state belongs to
/// `meioses()[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pedigree {
    individuals: Vec<Individual>,
    index: HashMap<String, usize>,
    parents: Vec<Option<[usize; 2]>>,
    children: Vec<Vec<usize>>,
    topo: Vec<usize>,
    meioses: Vec<Meiosis>,
    bit_of: Vec<[Option<usize>; 2]>,
    pruned: Vec<Meiosis>,
}

impl Pedigree {
    /// Builds and validates a pedigree, assigning the default meiosis order
    /// (child id ascending, paternal before maternal).
    pub fn new(mut individuals: Vec<Individual>) -> Result<Self> {
        individuals.sort_by(|a, b| a.id.cmp(&b.id));
        let mut index = HashMap::with_capacity(individuals.len());
        for (i, ind) in individuals.iter().enumerate() {
            if index.insert(ind.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(ind.id.clone()));
            }
        }

        let mut parents = Vec::with_capacity(individuals.len());
        for ind in &individuals {
            let lookup = |p: &Option<String>| -> Result<Option<usize>> {
                match p {
                    None => Ok(None),
                    Some(pid) => index.get(pid).copied().map(Some).ok_or_else(|| {
                        Error::MissingParent {
                            child: ind.id.clone(),
                            parent: pid.clone(),
                        }
                    }),
                }
            };
            let f = lookup(&ind.father)?;
            let m = lookup(&ind.mother)?;
            match (f, m) {
                (None, None) => parents.push(None),
                (Some(f), Some(m)) => {
                    if individuals[f].sex != Sex::Male {
                        return Err(Error::SexMismatch {
                            child: ind.id.clone(),
                            parent: individuals[f].id.clone(),
                            role: "father",
                        });
                    }
                    if individuals[m].sex != Sex::Female {
                        return Err(Error::SexMismatch {
                            child: ind.id.clone(),
                            parent: individuals[m].id.clone(),
                            role: "mother",
                        });
                    }
                    parents.push(Some([f, m]));
                }
                _ => return Err(Error::SingleParent(ind.id.clone())),
            }
        }

        let mut children = vec![Vec::new(); individuals.len()];
        for (c, p) in parents.iter().enumerate() {
            if let Some([f, m]) = *p {
                children[f].push(c);
                if m != f {
                    children[m].push(c);
                }
            }
        }

        // Kahn's algorithm, smallest index first for a deterministic order.
        let mut indegree: Vec<usize> = parents
            .iter()
            .map(|p| if p.is_some() { 2 } else { 0 })
            .collect();
        let mut ready: std::collections::BTreeSet<usize> =
            (0..individuals.len()).filter(|&i| indegree[i] == 0).collect();
        let mut topo = Vec::with_capacity(individuals.len());
        while let Some(i) = ready.pop_first() {
            topo.push(i);
            for &c in &children[i] {
                let [f, m] = parents[c].expect("child has parents");
                let hits = usize::from(f == i) + usize::from(m == i);
                indegree[c] -= hits;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if topo.len() != individuals.len() {
            let stuck = (0..individuals.len())
                .find(|&i| indegree[i] > 0)
                .expect("some individual left unsorted");
            return Err(Error::Cycle(individuals[stuck].id.clone()));
        }

        let meioses: Vec<Meiosis> = (0..individuals.len())
            .filter(|&c| parents[c].is_some())
            .flat_map(|c| Role::BOTH.map(|role| Meiosis { child: c, role }))
            .collect();

        let mut ped = Pedigree {
            bit_of: vec![[None, None]; individuals.len()],
            individuals,
            index,
            parents,
            children,
            topo,
            meioses: Vec::new(),
            pruned: Vec::new(),
        };
        ped.set_meioses(meioses);
        Ok(ped)
    }

    fn set_meioses(&mut self, meioses: Vec<Meiosis>) {
        for slot in self.bit_of.iter_mut() {
            *slot = [None, None];
        }
        for (bit, m) in meioses.iter().enumerate() {
            self.bit_of[m.child][m.role.index()] = Some(bit);
        }
        self.meioses = meioses;
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut individuals = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let line_no = lineno + 1;
            let err = |msg: String| Error::Parse { line: line_no, msg };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 6 {
                return Err(err(format!("expected 6 fields, found {}", fields.len())));
            }
            let parent = |s: &str| (s != "0").then(|| s.to_string());
            let sex = match fields[3] {
                "M" | "m" | "1" | "male" => Sex::Male,
                "F" | "f" | "2" | "female" => Sex::Female,
                other => return Err(err(format!("unknown sex `{other}`"))),
            };
            let flag = |s: &str, what: &str| match s {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(err(format!("{what} flag must be 0 or 1, found `{other}`"))),
            };
            individuals.push(Individual {
                id: fields[0].to_string(),
                father: parent(fields[1]),
                mother: parent(fields[2]),
                sex,
                genotyped: flag(fields[4], "genotyped")?,
                of_interest: flag(fields[5], "interest")?,
            });
        }
        Pedigree::new(individuals)
    }

    /// Serializes in the same format `parse` reads.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# id father mother sex genotyped interest\n");
        for ind in &self.individuals {
            out.push_str(&format!(
                "{} {} {} {} {} {}\n",
                ind.id,
                ind.father.as_deref().unwrap_or("0"),
                ind.mother.as_deref().unwrap_or("0"),
                if ind.sex == Sex::Male { "M" } else { "F" },
                u8::from(ind.genotyped),
                u8::from(ind.of_interest),
            ));
        }
        out
    }

    pub fn individuals(&self) -> &[Individual] {
        &self.individuals
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// `[father, mother]` indices, or `None` for a founder.
    pub fn parents(&self, i: usize) -> Option<[usize; 2]> {
        self.parents[i]
    }

    pub fn parent(&self, i: usize, role: Role) -> Option<usize> {
        self.parents[i].map(|p| p[role.index()])
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub fn is_founder(&self, i: usize) -> bool {
        self.parents[i].is_none()
    }

    /// Individuals in an order where parents precede children.
    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    pub fn meioses(&self) -> &[Meiosis] {
        &self.meioses
    }

    /// Number of meioses, i.e. the inheritance-state width.
    pub fn n(&self) -> usize {
        self.meioses.len()
    }

    /// Meioses dropped by [`Pedigree::prune_irrelevant`].
    pub fn pruned_meioses(&self) -> &[Meiosis] {
        &self.pruned
    }

    /// Bit index of the meiosis filling `role` of `child`, if it is indexed.
    pub fn bit_of(&self, child: usize, role: Role) -> Option<usize> {
        self.bit_of[child][role.index()]
    }

    /// Parent on the other end of the meiosis filling `role` of `child`, when
    /// that meiosis is still indexed.
    pub fn source(&self, child: usize, role: Role) -> Option<usize> {
        self.bit_of(child, role).and_then(|_| self.parent(child, role))
    }

    pub fn interest(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.individuals.len()).filter(|&i| self.individuals[i].of_interest)
    }

    pub fn meiosis_label(&self, m: Meiosis) -> String {
        let tag = match m.role {
            Role::Paternal => "p",
            Role::Maternal => "m",
        };
        format!("{}:{}", self.individuals[m.child].id, tag)
    }

    /// Parses a comma-separated list of `child:p` / `child:m` tokens.
    pub fn parse_meiosis_list(&self, text: &str) -> Result<Vec<Meiosis>> {
        text.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|token| {
                let (id, tag) = token.rsplit_once(':').ok_or_else(|| {
                    Error::MeiosisOrder(format!("`{token}` is not of the form id:p or id:m"))
                })?;
                let role = match tag {
                    "p" | "pat" | "paternal" => Role::Paternal,
                    "m" | "mat" | "maternal" => Role::Maternal,
                    _ => return Err(Error::MeiosisOrder(format!("unknown role in `{token}`"))),
                };
                let child = self
                    .index_of(id)
                    .ok_or_else(|| Error::MeiosisOrder(format!("unknown individual `{id}`")))?;
                Ok(Meiosis { child, role })
            })
            .collect()
    }

    /// Re-indexes the meioses. `order` must be a permutation of the current
    /// meiosis set.
    pub fn with_meiosis_order(&self, order: &[Meiosis]) -> Result<Pedigree> {
        let current: HashSet<Meiosis> = self.meioses.iter().copied().collect();
        let mut seen = HashSet::with_capacity(order.len());
        for m in order {
            if !current.contains(m) {
                return Err(Error::MeiosisOrder(format!(
                    "`{}` is not a meiosis of this pedigree",
                    self.meiosis_label(*m)
                )));
            }
            if !seen.insert(*m) {
                return Err(Error::MeiosisOrder(format!(
                    "`{}` listed twice",
                    self.meiosis_label(*m)
                )));
            }
        }
        if let Some(missing) = self.meioses.iter().find(|m| !seen.contains(m)) {
            return Err(Error::MeiosisOrder(format!(
                "`{}` missing from the order",
                self.meiosis_label(*missing)
            )));
        }
        let mut out = self.clone();
        out.set_meioses(order.to_vec());
        Ok(out)
    }

    /// Applies an optional textual override (see [`Pedigree::parse_meiosis_list`]).
    pub fn meiosis_order(&self, spec: Option<&str>) -> Result<Pedigree> {
        match spec {
            None => Ok(self.clone()),
            Some(text) => {
                let order = self.parse_meiosis_list(text)?;
                self.with_meiosis_order(&order)
            }
        }
    }

    /// Drops the meioses in `drop`, keeping the order of the rest.
    pub fn without_meioses(&self, drop: &HashSet<Meiosis>) -> Pedigree {
        let mut out = self.clone();
        let kept = self
            .meioses
            .iter()
            .copied()
            .filter(|m| !drop.contains(m))
            .collect();
        out.pruned.extend(self.meioses.iter().filter(|m| drop.contains(m)));
        out.set_meioses(kept);
        out
    }

    /// Removes every meiosis whose flip never changes the IBD signature of
    /// any state.
    pub fn prune_irrelevant(&self) -> Result<Pedigree> {
        self.prune_with(&PruneOptions::default())
    }

    pub fn prune_with(&self, opts: &PruneOptions) -> Result<Pedigree> {
        let start = if opts.structural_shortcut {
            self.without_meioses(&self.structurally_irrelevant())
        } else {
            self.clone()
        };
        let n = start.n();
        if n > opts.cap {
            return Err(Error::TooManyMeioses { n, cap: opts.cap });
        }
        if self.interest().next().is_none() {
            return Err(Error::NoInterest);
        }
        let table = SignatureTable::build(&start)?;
        let ids = table.ids();
        let drop: HashSet<Meiosis> = (0..n)
            .filter(|&bit| {
                let mask = 1u32 << (n - 1 - bit);
                (0..ids.len() as u32)
                    .filter(|x| x & mask == 0)
                    .all(|x| ids[x as usize] == ids[(x | mask) as usize])
            })
            .map(|bit| start.meioses[bit])
            .collect();
        Ok(start.without_meioses(&drop))
    }

    /// Meioses that are provably irrelevant without enumerating states.
    ///
    /// Two rules, iterated to a fixpoint:
    /// * the child can never pass the allele on to an individual of interest;
    /// * the parent carries no other route to a labelled allele: it is not of
    ///   interest, none of its alleles has an indexed source, and no other
    ///   child leads to an individual of interest.
    pub fn structurally_irrelevant(&self) -> HashSet<Meiosis> {
        let mut drop: HashSet<Meiosis> = HashSet::new();
        loop {
            let live = |m: &Meiosis, drop: &HashSet<Meiosis>| {
                self.bit_of(m.child, m.role).is_some() && !drop.contains(m)
            };
            // reach[i]: some allele of i can flow into a labelled allele.
            let mut reach = vec![false; self.individuals.len()];
            for &i in self.topo.iter().rev() {
                reach[i] = self.individuals[i].of_interest
                    || self.children[i].iter().any(|&c| {
                        reach[c]
                            && Role::BOTH.iter().any(|&r| {
                                self.parent(c, r) == Some(i)
                                    && live(&Meiosis { child: c, role: r }, &drop)
                            })
                    });
            }
            let mut changed = false;
            for m in self.meioses.clone() {
                if drop.contains(&m) {
                    continue;
                }
                let parent = self.parent(m.child, m.role).expect("meiosis has a parent");
                let rooted = Role::BOTH.iter().all(|&r| {
                    !live(&Meiosis { child: parent, role: r }, &drop)
                });
                let other_route = self.children[parent].iter().any(|&c| {
                    c != m.child
                        && reach[c]
                        && Role::BOTH.iter().any(|&r| {
                            self.parent(c, r) == Some(parent)
                                && live(&Meiosis { child: c, role: r }, &drop)
                        })
                });
                let isolated =
                    rooted && !self.individuals[parent].of_interest && !other_route;
                if !reach[m.child] || isolated {
                    drop.insert(m);
                    changed = true;
                }
            }
            if !changed {
                return drop;
            }
        }
    }

    /// Allele slots of interest individuals in the global allele order
    /// (individual id, paternal before maternal).
    pub fn labeled_alleles(&self) -> Vec<(usize, Role)> {
        self.interest()
            .flat_map(|i| Role::BOTH.map(|r| (i, r)))
            .collect()
    }
}

impl fmt::Display for Pedigree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PruneOptions {
    /// Largest meiosis count handed to the exhaustive flip test.
    pub cap: usize,
    /// Remove structurally irrelevant meioses before the flip test.
    pub structural_shortcut: bool,
}

impl Default for PruneOptions {
    fn default() -> Self {
        PruneOptions {
            cap: DEFAULT_PRUNE_CAP,
            structural_shortcut: false,
        }
    }
}
