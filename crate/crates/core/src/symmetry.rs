//! Hypercube isometries `T = π ∘ φ_a` and the orbits they generate.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::state::{format_state, mask_of, parse_state, InheritanceState, State, MAX_WIDTH};

/// `T(x) = π(a ⊕ x)`: first flip the bits set in `switch`, then move the
/// value of meiosis `i` to position `perm[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Isometry {
    perm: Vec<usize>,
    switch: State,
}

impl Isometry {
    pub fn new(perm: Vec<usize>, switch: State) -> Result<Self> {
        let n = perm.len();
        if n > MAX_WIDTH {
            return Err(Error::InvalidIsometry(format!("width {n} too large")));
        }
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidIsometry(format!("{perm:?} is not a permutation")));
            }
        }
        if n < 32 && switch >> n != 0 {
            return Err(Error::InvalidIsometry(format!("switch wider than {n} bits")));
        }
        Ok(Isometry { perm, switch })
    }

    pub fn identity(width: usize) -> Self {
        Isometry {
            perm: (0..width).collect(),
            switch: 0,
        }
    }

    /// Pure switch `φ_a`.
    pub fn switch_only(switch: State, width: usize) -> Result<Self> {
        Isometry::new((0..width).collect(), switch)
    }

    /// Pure bit permutation given as disjoint zero-based cycles.
    pub fn from_cycles(width: usize, cycles: &[&[usize]]) -> Result<Self> {
        let mut perm: Vec<usize> = (0..width).collect();
        let mut touched = vec![false; width];
        for cycle in cycles {
            for (k, &from) in cycle.iter().enumerate() {
                let to = cycle[(k + 1) % cycle.len()];
                if from >= width || to >= width || std::mem::replace(&mut touched[from], true) {
                    return Err(Error::InvalidIsometry(format!("bad cycle {cycle:?}")));
                }
                perm[from] = to;
            }
        }
        Isometry::new(perm, 0)
    }

    pub fn width(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn switch(&self) -> State {
        self.switch
    }

    pub fn is_identity(&self) -> bool {
        self.switch == 0 && self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }

    /// Action on raw states of this isometry's width.
    #[inline]
    pub fn apply_bits(&self, x: State) -> State {
        let n = self.perm.len();
        let y = x ^ self.switch;
        let mut out = 0;
        for (i, &p) in self.perm.iter().enumerate() {
            if y & mask_of(i, n) != 0 {
                out |= mask_of(p, n);
            }
        }
        out
    }

    pub fn apply(&self, x: InheritanceState) -> Result<InheritanceState> {
        let x = x.expect_width(self.width())?;
        InheritanceState::new(self.apply_bits(x.bits()), self.width())
    }

    /// Moves bits without switching: `π(x)`.
    fn permute_bits(&self, x: State) -> State {
        let n = self.perm.len();
        self.perm
            .iter()
            .enumerate()
            .filter(|&(i, _)| x & mask_of(i, n) != 0)
            .fold(0, |acc, (_, &p)| acc | mask_of(p, n))
    }

    fn inverse_perm(&self) -> Vec<usize> {
        let mut inv = vec![0; self.perm.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            inv[p] = i;
        }
        inv
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Isometry) -> Result<Isometry> {
        if self.width() != other.width() {
            return Err(Error::WidthMismatch {
                expected: self.width(),
                got: other.width(),
            });
        }
        // π1(a1 ⊕ π2(a2 ⊕ x)) = π1π2(π2⁻¹(a1) ⊕ a2 ⊕ x)
        let perm = other.perm.iter().map(|&p| self.perm[p]).collect();
        let back = Isometry {
            perm: other.inverse_perm(),
            switch: 0,
        };
        let switch = other.switch ^ back.permute_bits(self.switch);
        Ok(Isometry { perm, switch })
    }

    pub fn inverse(&self) -> Isometry {
        // T⁻¹(y) = a ⊕ π⁻¹(y) = π⁻¹(π(a) ⊕ y)
        Isometry {
            perm: self.inverse_perm(),
            switch: self.permute_bits(self.switch),
        }
    }

    /// Disjoint cycles of length at least two, zero based, each starting at
    /// its smallest element.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.perm.len()];
        let mut out = Vec::new();
        for start in 0..self.perm.len() {
            if seen[start] || self.perm[start] == start {
                continue;
            }
            let mut cycle = Vec::new();
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                cycle.push(i);
                i = self.perm[i];
            }
            out.push(cycle);
        }
        out
    }
}

impl fmt::Display for Isometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("perm=")?;
        let cycles = self.cycles();
        if cycles.is_empty() {
            f.write_str("()")?;
        }
        for cycle in cycles {
            let items: Vec<String> = cycle.iter().map(|i| (i + 1).to_string()).collect();
            write!(f, "({})", items.join(" "))?;
        }
        write!(f, " switch={}", format_state(self.switch, self.width()))
    }
}

impl FromStr for Isometry {
    type Err = Error;

    /// Parses `perm=(1 4)(2 3) switch=0110`; cycles are one based and the
    /// width is the length of the switch string.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidIsometry(format!("`{s}`: {msg}"));
        let s = s.trim();
        let at = s.find("switch=").ok_or_else(|| bad("missing switch="))?;
        let switch_text = s[at + "switch=".len()..].trim();
        let head = s[..at].trim();
        let perm_text = match head {
            "" => "()",
            _ => head.strip_prefix("perm=").ok_or_else(|| bad("expected perm="))?,
        };
        let (switch, width) = parse_state(switch_text).map_err(|_| bad("switch is not binary"))?;
        let mut cycles: Vec<Vec<usize>> = Vec::new();
        let mut rest = perm_text.trim();
        while !rest.is_empty() {
            let inner = rest.strip_prefix('(').ok_or_else(|| bad("expected `(`"))?;
            let close = inner.find(')').ok_or_else(|| bad("unclosed cycle"))?;
            let mut cycle = Vec::new();
            for tok in inner[..close].split_whitespace() {
                let k: usize = tok.parse().map_err(|_| bad("cycle entry is not an integer"))?;
                if k == 0 {
                    return Err(bad("cycle entries are one based"));
                }
                cycle.push(k - 1);
            }
            if !cycle.is_empty() {
                cycles.push(cycle);
            }
            rest = inner[close + 1..].trim_start();
        }
        let refs: Vec<&[usize]> = cycles.iter().map(Vec::as_slice).collect();
        let base = Isometry::from_cycles(width, &refs)?;
        Isometry::new(base.perm, switch)
    }
}

/// Orbits of the group generated by `generators` acting on `H_n`, blocks in
/// canonical order.
pub fn orbits(generators: &[Isometry], n: usize) -> Result<Partition> {
    for g in generators {
        if g.width() != n {
            return Err(Error::WidthMismatch {
                expected: n,
                got: g.width(),
            });
        }
    }
    if n > MAX_WIDTH {
        return Err(Error::TooManyMeioses { n, cap: MAX_WIDTH });
    }
    let size = 1usize << n;
    let mut block_of = vec![u32::MAX; size];
    let mut blocks: Vec<Vec<State>> = Vec::new();
    let mut work = Vec::new();
    for start in 0..size as State {
        if block_of[start as usize] != u32::MAX {
            continue;
        }
        let b = blocks.len() as u32;
        block_of[start as usize] = b;
        let mut block = vec![start];
        work.push(start);
        // Forward closure suffices: every generator has finite order.
        while let Some(x) = work.pop() {
            for g in generators {
                let y = g.apply_bits(x);
                if block_of[y as usize] == u32::MAX {
                    block_of[y as usize] = b;
                    block.push(y);
                    work.push(y);
                }
            }
        }
        block.sort_unstable();
        blocks.push(block);
    }
    Partition::from_blocks(n, blocks)
}

/// Merges blocks of `base` that generators connect: blocks `B1` and `B2`
/// end up together whenever some generator maps a member of one into the
/// other.
pub fn orbits_on_blocks(generators: &[Isometry], base: &Partition) -> Result<Partition> {
    let n = base.width();
    for g in generators {
        if g.width() != n {
            return Err(Error::WidthMismatch {
                expected: n,
                got: g.width(),
            });
        }
    }
    let mut parent: Vec<usize> = (0..base.num_blocks()).collect();
    fn find(parent: &mut [usize], mut b: usize) -> usize {
        while parent[b] != b {
            parent[b] = parent[parent[b]];
            b = parent[b];
        }
        b
    }
    for g in generators {
        for x in 0..(1u32 << n) {
            let a = find(&mut parent, base.block_of(x));
            let b = find(&mut parent, base.block_of(g.apply_bits(x)));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let labels: Vec<usize> = (0..(1u32 << n))
        .map(|x| find(&mut parent, base.block_of(x)))
        .collect();
    Partition::from_labels(n, &labels)
}
