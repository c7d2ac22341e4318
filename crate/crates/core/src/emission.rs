//! Proper pedigree automorphisms, the emission partition, and genotype
//! emission probabilities.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Zero};

use crate::error::{Error, Result};
use crate::inheritance::{allele, identity_states, Allele, Program};
use crate::partition::Partition;
use crate::pedigree::{Pedigree, Role};
use crate::state::{InheritanceState, State};
use crate::symmetry::{orbits_on_blocks, Isometry};

/// Allele symbols with their founder population frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct AlleleFrequencies {
    symbols: Vec<String>,
    freqs: Vec<f64>,
    exact: Vec<BigRational>,
}

impl AlleleFrequencies {
    pub fn new(entries: &[(&str, f64)]) -> Result<Self> {
        let pairs = entries
            .iter()
            .map(|&(s, f)| {
                let exact = BigRational::from_f64(f)
                    .ok_or_else(|| Error::Frequencies(format!("`{s}` has frequency {f}")))?;
                Ok((s.to_string(), f, exact))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(pairs)
    }

    /// Equal frequencies over `k` symbols named `1..=k`.
    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Frequencies("empty alphabet".into()));
        }
        let exact = BigRational::new(BigInt::one(), BigInt::from(k));
        Self::from_parts(
            (1..=k)
                .map(|i| (i.to_string(), 1.0 / k as f64, exact.clone()))
                .collect(),
        )
    }

    /// `symbol frequency` lines; frequencies may be decimals or `p/q`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let err = |msg: String| Error::Parse {
                line: lineno + 1,
                msg,
            };
            if fields.len() != 2 {
                return Err(err(format!("expected `symbol frequency`, got `{line}`")));
            }
            let exact = parse_rational(fields[1])
                .ok_or_else(|| err(format!("`{}` is not a frequency", fields[1])))?;
            let approx = rational_to_f64(&exact);
            pairs.push((fields[0].to_string(), approx, exact));
        }
        Self::from_parts(pairs)
    }

    fn from_parts(pairs: Vec<(String, f64, BigRational)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Frequencies("empty alphabet".into()));
        }
        let mut seen = BTreeSet::new();
        for (s, f, _) in &pairs {
            if !seen.insert(s.as_str()) {
                return Err(Error::Frequencies(format!("duplicate symbol `{s}`")));
            }
            if s == "." || s.contains('/') {
                return Err(Error::Frequencies(format!("`{s}` is not a usable symbol")));
            }
            if !(*f > 0.0 && *f <= 1.0) {
                return Err(Error::Frequencies(format!("`{s}` has frequency {f} outside (0, 1]")));
            }
        }
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Frequencies(format!("frequencies sum to {total}")));
        }
        let (symbols, rest): (Vec<_>, Vec<_>) = pairs.into_iter().map(|(s, f, e)| (s, (f, e))).unzip();
        let (freqs, exact) = rest.into_iter().unzip();
        Ok(AlleleFrequencies {
            symbols,
            freqs,
            exact,
        })
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn exact(&self) -> &[BigRational] {
        &self.exact
    }

    pub fn index_of(&self, symbol: &str) -> Result<usize> {
        self.symbols
            .iter()
            .position(|s| s == symbol)
            .ok_or_else(|| Error::UnknownAllele(symbol.to_string()))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (s, f) in self.symbols.iter().zip(&self.freqs) {
            let _ = writeln!(out, "{s} {f}");
        }
        out
    }
}

fn parse_rational(s: &str) -> Option<BigRational> {
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.parse().ok()?;
        let q: BigInt = q.parse().ok()?;
        return (!q.is_zero()).then(|| BigRational::new(p, q));
    }
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) || int.len() + frac.len() == 0 {
        return s.parse::<f64>().ok().and_then(BigRational::from_f64);
    }
    let digits: BigInt = format!("{int}{frac}").parse().ok()?;
    let scale = num_traits::pow(BigInt::from(10), frac.len());
    Some(BigRational::new(digits, scale))
}

fn rational_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// An unordered genotype call; `None` is missing.
pub type Call = Option<[String; 2]>;

#[derive(Debug, Clone, PartialEq)]
pub struct Site {
    /// Distance from the previous site in Morgans; ignored for the first site.
    pub distance: f64,
    /// One call per column of [`GenotypeData::ids`].
    pub calls: Vec<Call>,
}

/// Genotype calls of a set of individuals over an ordered list of sites.
#[derive(Debug, Clone, PartialEq)]
pub struct GenotypeData {
    pub ids: Vec<String>,
    pub sites: Vec<Site>,
}

impl GenotypeData {
    /// Header line of individual ids, then one line per site: the distance
    /// followed by one `a/b` or `./.` per individual.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Genotype("missing header".into()))?;
        let ids: Vec<String> = header.split_whitespace().map(str::to_string).collect();
        let mut unique = BTreeSet::new();
        for id in &ids {
            if !unique.insert(id) {
                return Err(Error::Genotype(format!("individual `{id}` listed twice")));
            }
        }
        let mut sites = Vec::new();
        for (line, text) in lines {
            let fields: Vec<&str> = text.split_whitespace().collect();
            let err = |msg: String| Error::Parse { line, msg };
            if fields.len() != ids.len() + 1 {
                return Err(err(format!(
                    "expected distance and {} calls, got {} fields",
                    ids.len(),
                    fields.len()
                )));
            }
            let distance: f64 = fields[0]
                .parse()
                .map_err(|_| err(format!("`{}` is not a distance", fields[0])))?;
            if !distance.is_finite() {
                return Err(err(format!("`{}` is not a distance", fields[0])));
            }
            if distance < 0.0 {
                return Err(Error::NegativeDistance(distance));
            }
            let calls = fields[1..]
                .iter()
                .map(|f| parse_call(f).ok_or_else(|| err(format!("`{f}` is not a genotype call"))))
                .collect::<Result<Vec<_>>>()?;
            sites.push(Site { distance, calls });
        }
        Ok(GenotypeData { ids, sites })
    }

    pub fn to_text(&self) -> String {
        let mut out = self.ids.join(" ");
        out.push('\n');
        for site in &self.sites {
            let _ = write!(out, "{}", site.distance);
            for call in &site.calls {
                match call {
                    Some([a, b]) => {
                        let _ = write!(out, " {a}/{b}");
                    }
                    None => out.push_str(" ./."),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    /// A single-site view.
    pub fn site(&self, k: usize) -> GenotypeData {
        GenotypeData {
            ids: self.ids.clone(),
            sites: vec![self.sites[k].clone()],
        }
    }
}

fn parse_call(s: &str) -> Option<Call> {
    let (a, b) = s.split_once('/')?;
    match (a, b) {
        (".", ".") => Some(None),
        (".", _) | (_, ".") | ("", _) | (_, "") => None,
        _ => Some(Some([a.to_string(), b.to_string()])),
    }
}

struct ObservedCall {
    pat: Allele,
    mat: Allele,
    a: usize,
    b: usize,
}

/// Emission probabilities of one data set, with allele symbols resolved
/// against a frequency table once.
pub struct Emitter<'a> {
    prog: Program,
    freqs: &'a AlleleFrequencies,
    sites: Vec<Vec<ObservedCall>>,
    width: usize,
}

impl<'a> Emitter<'a> {
    pub fn new(ped: &Pedigree, data: &GenotypeData, freqs: &'a AlleleFrequencies) -> Result<Self> {
        let mut columns = Vec::with_capacity(data.ids.len());
        for id in &data.ids {
            let i = ped
                .index_of(id)
                .ok_or_else(|| Error::Genotype(format!("`{id}` is not in the pedigree")))?;
            if !ped.individuals()[i].of_interest {
                return Err(Error::Genotype(format!("`{id}` is not an individual of interest")));
            }
            columns.push(i);
        }
        let mut sites = Vec::with_capacity(data.sites.len());
        for site in &data.sites {
            if site.calls.len() != columns.len() {
                return Err(Error::Genotype(format!(
                    "site has {} calls for {} individuals",
                    site.calls.len(),
                    columns.len()
                )));
            }
            let mut observed = Vec::new();
            for (&i, call) in columns.iter().zip(&site.calls) {
                if let Some([a, b]) = call {
                    observed.push(ObservedCall {
                        pat: allele(i, Role::Paternal),
                        mat: allele(i, Role::Maternal),
                        a: freqs.index_of(a)?,
                        b: freqs.index_of(b)?,
                    });
                }
            }
            sites.push(observed);
        }
        Ok(Emitter {
            prog: Program::compile(ped),
            freqs,
            sites,
            width: ped.n(),
        })
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn probability(&self, x: State, site: usize) -> f64 {
        self.evaluate(x, site, self.freqs.freqs())
    }

    pub fn exact(&self, x: State, site: usize) -> BigRational {
        self.evaluate(x, site, self.freqs.exact())
    }

    /// Probabilities of one site for every state of `H_n`.
    pub fn site_vector(&self, site: usize) -> Vec<f64> {
        let mut root = vec![0; self.prog.num_alleles()];
        (0..(1u32 << self.width))
            .map(|x| {
                self.prog.roots(x, &mut root);
                site_sum(&self.sites[site], &root, self.freqs.freqs())
            })
            .collect()
    }

    fn evaluate<T: Num + Clone>(&self, x: State, site: usize, freq: &[T]) -> T {
        let mut root = vec![0; self.prog.num_alleles()];
        self.prog.roots(x, &mut root);
        site_sum(&self.sites[site], &root, freq)
    }
}

/// Σ over ordered allele assignments consistent with the components of the
/// state, of Π f(component allele) over observed components, times 1/2^h.
fn site_sum<T: Num + Clone>(calls: &[ObservedCall], root: &[Allele], freq: &[T]) -> T {
    fn go<T: Num + Clone>(
        calls: &[ObservedCall],
        root: &[Allele],
        freq: &[T],
        assigned: &mut Vec<(Allele, usize)>,
    ) -> T {
        let Some((call, rest)) = calls.split_first() else {
            return assigned
                .iter()
                .fold(T::one(), |acc, &(_, sym)| acc * freq[sym].clone());
        };
        let orders: &[(usize, usize)] = if call.a == call.b {
            &[(call.a, call.b)][..]
        } else {
            &[(call.a, call.b), (call.b, call.a)][..]
        };
        let mut total = T::zero();
        for &(p, m) in orders {
            let mark = assigned.len();
            if assign(assigned, root[call.pat], p) && assign(assigned, root[call.mat], m) {
                total = total + go(rest, root, freq, assigned);
            }
            assigned.truncate(mark);
        }
        total
    }

    fn assign(assigned: &mut Vec<(Allele, usize)>, component: Allele, sym: usize) -> bool {
        match assigned.iter().find(|(c, _)| *c == component) {
            Some(&(_, s)) => s == sym,
            None => {
                assigned.push((component, sym));
                true
            }
        }
    }

    let mut assigned = Vec::with_capacity(2 * calls.len());
    let sum = go(calls, root, freq, &mut assigned);
    let two = T::one() + T::one();
    let het = calls.iter().filter(|c| c.a != c.b).count();
    let mut scale = T::one();
    for _ in 0..het {
        scale = scale * two.clone();
    }
    sum / scale
}

/// Single-site emission probability in floating point.
pub fn emission_probability(
    ped: &Pedigree,
    x: InheritanceState,
    data: &GenotypeData,
    freqs: &AlleleFrequencies,
) -> Result<f64> {
    let x = x.expect_width(ped.n())?;
    let emitter = Emitter::new(ped, data, freqs)?;
    Ok((0..emitter.num_sites()).map(|k| emitter.probability(x.bits(), k)).product())
}

/// Single-site emission probability in exact rational arithmetic.
pub fn emission_probability_exact(
    ped: &Pedigree,
    x: InheritanceState,
    data: &GenotypeData,
    freqs: &AlleleFrequencies,
) -> Result<BigRational> {
    let x = x.expect_width(ped.n())?;
    let emitter = Emitter::new(ped, data, freqs)?;
    Ok((0..emitter.num_sites()).fold(BigRational::one(), |acc, k| acc * emitter.exact(x.bits(), k)))
}

/// Individual map `σ` with a per-individual orientation: allele `(i, r)`
/// goes to `(σ(i), r ⊕ orient(i))`.
#[derive(Debug, Clone)]
struct AlleleMap {
    target: Vec<Option<(usize, bool)>>,
}

impl AlleleMap {
    fn get(&self, i: usize) -> (usize, bool) {
        self.target[i].unwrap_or((i, false))
    }

    /// Records `a ↦ b` and `b ↦ a`; false on a conflicting earlier choice.
    fn bind(&mut self, a: usize, b: usize, orient: bool) -> bool {
        for (u, v) in [(a, b), (b, a)] {
            match self.target[u] {
                Some(prev) if prev != (v, orient) => return false,
                _ => self.target[u] = Some((v, orient)),
            }
        }
        true
    }
}

/// Pedigree automorphisms that swap the maternal and paternal lineages of an
/// eligible individual and its full siblings, as hypercube isometries.
///
/// An individual is eligible when it has both parents and either lies
/// outside the interest set or has both parents outside it. Per eligible
/// individual the first valid orientation assignment in depth-first order
/// (straight before crossed) is kept. The identity and duplicates are
/// dropped.
pub fn proper_automorphisms(ped: &Pedigree) -> Vec<Isometry> {
    let inds = ped.individuals();
    let fixed: Vec<bool> = inds.iter().map(|ind| ind.of_interest || ind.genotyped).collect();
    let mut found = BTreeSet::new();
    let mut out = Vec::new();
    for i in 0..inds.len() {
        let Some([father, mother]) = ped.parents(i) else {
            continue;
        };
        if inds[i].of_interest && (inds[father].of_interest || inds[mother].of_interest) {
            continue;
        }
        // Lineage swaps need both incoming meioses to be live.
        if ped.bit_of(i, Role::Paternal).is_none() || ped.bit_of(i, Role::Maternal).is_none() {
            continue;
        }
        let mut map = AlleleMap {
            target: vec![None; inds.len()],
        };
        let sibs = ped
            .children(father)
            .iter()
            .copied()
            .filter(|&c| ped.parents(c) == Some([father, mother]));
        let mut ok = true;
        for j in sibs {
            ok &= map.bind(j, j, true);
        }
        if !ok {
            continue;
        }
        let pending = vec![(father, mother)];
        if let Some(map) = search(ped, map, pending, &fixed) {
            if let Some(iso) = to_isometry(ped, &map) {
                if !iso.is_identity() && found.insert(iso.clone()) {
                    out.push(iso);
                }
            }
        }
    }
    out
}

/// Depth-first search over orientations of the pending individual pairs.
fn search(
    ped: &Pedigree,
    map: AlleleMap,
    mut pending: Vec<(usize, usize)>,
    fixed: &[bool],
) -> Option<AlleleMap> {
    let Some((a, b)) = pending.pop() else {
        return is_automorphism(ped, &map, fixed).then_some(map);
    };
    for orient in [false, true] {
        let mut next = map.clone();
        if !next.bind(a, b, orient) {
            continue;
        }
        let mut queue = pending.clone();
        let mut consistent = true;
        for r in Role::BOTH {
            let r2 = if orient { r.flip() } else { r };
            match (ped.source(a, r), ped.source(b, r2)) {
                (None, None) => {}
                (Some(pa), Some(pb)) => {
                    if let Some(prev) = next.target[pa] {
                        consistent &= prev.0 == pb;
                    } else {
                        queue.push((pa, pb));
                    }
                }
                _ => consistent = false,
            }
        }
        if !consistent {
            continue;
        }
        if let Some(done) = search(ped, next, queue, fixed) {
            return Some(done);
        }
    }
    None
}

fn is_automorphism(ped: &Pedigree, map: &AlleleMap, fixed: &[bool]) -> bool {
    for i in 0..ped.individuals().len() {
        let (ti, oi) = map.get(i);
        if fixed[i] && ti != i {
            return false;
        }
        for r in Role::BOTH {
            let tr = if oi { r.flip() } else { r };
            let ok = match (ped.source(i, r), ped.source(ti, tr)) {
                (None, None) => true,
                (Some(p), Some(q)) => map.get(p).0 == q,
                _ => false,
            };
            if !ok {
                return false;
            }
        }
    }
    true
}

fn to_isometry(ped: &Pedigree, map: &AlleleMap) -> Option<Isometry> {
    let n = ped.n();
    let mut perm = vec![0; n];
    let mut switch = 0;
    for (b, m) in ped.meioses().iter().enumerate() {
        let (ti, oi) = map.get(m.child);
        let tr = if oi { m.role.flip() } else { m.role };
        perm[b] = ped.bit_of(ti, tr)?;
        let parent = ped.parent(m.child, m.role)?;
        if map.get(parent).1 {
            switch |= crate::state::mask_of(b, n);
        }
    }
    Isometry::new(perm, switch).ok()
}

/// Orbits of the proper automorphisms on the identity states.
pub fn emission_partition(ped: &Pedigree) -> Result<Partition> {
    let d = identity_states(ped)?;
    orbits_on_blocks(&proper_automorphisms(ped), &d)
}
