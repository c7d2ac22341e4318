//! Wright-Fisher pedigrees with monogamous couples, and genotype data
//! sampled along a chromosome.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::emission::{AlleleFrequencies, GenotypeData, Site};
use crate::error::{Error, Result};
use crate::hmm::theta_from_distance;
use crate::inheritance::{allele, Program};
use crate::pedigree::{Individual, Pedigree, Role, Sex};
use crate::state::{mask_of, State};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PedigreeParams {
    /// Generations including the founders; the last one is of interest.
    pub generations: usize,
    /// Size of every generation except the last.
    pub per_gen_n: usize,
    /// Poisson mean of each couple's offspring in the last generation.
    pub offspring_mean: f64,
    /// Reassign each parent edge with probability 1/2.
    pub halfsib: bool,
}

impl Default for PedigreeParams {
    fn default() -> Self {
        PedigreeParams {
            generations: 3,
            per_gen_n: 4,
            offspring_mean: 2.0,
            halfsib: false,
        }
    }
}

/// Random stream for one replicate of one purpose.
pub fn replicate_rng(seed: u64, replicate: u64, purpose: u8) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((replicate << 8) | u64::from(purpose));
    rng
}

const PEDIGREE_STREAM: u8 = 0;
const GENOTYPE_STREAM: u8 = 1;

struct Member {
    sex: Sex,
    parents: Option<[usize; 2]>,
}

/// Simulates a pedigree.
///
/// Generation 0 has `per_gen_n` founders. Each later generation is formed by
/// pairing its parents' generation at random into male-female couples. Up
/// to the second-to-last generation exactly `per_gen_n` children are spread
/// uniformly over the couples (Poisson counts conditioned on the total); the
/// last generation draws an independent Poisson count per couple, redrawn
/// if every couple comes up empty. Sexes alternate within a generation. The
/// last generation is genotyped and of interest, and anyone without a
/// descendant there is dropped.
pub fn simulate_pedigree(params: &PedigreeParams, seed: u64, replicate: u64) -> Result<Pedigree> {
    let PedigreeParams {
        generations,
        per_gen_n,
        offspring_mean,
        halfsib,
    } = *params;
    if generations < 2 {
        return Err(Error::Parameter("need at least two generations".into()));
    }
    if per_gen_n < 2 {
        return Err(Error::Parameter("a generation of fewer than two has no couple".into()));
    }
    if !(offspring_mean > 0.0) || !offspring_mean.is_finite() {
        return Err(Error::Parameter(format!("offspring mean {offspring_mean} must be positive")));
    }
    let poisson = Poisson::new(offspring_mean).map_err(|e| Error::Parameter(e.to_string()))?;
    let mut rng = replicate_rng(seed, replicate, PEDIGREE_STREAM);

    let sex_of = |k: usize| if k % 2 == 0 { Sex::Male } else { Sex::Female };
    let mut members: Vec<Member> = (0..per_gen_n)
        .map(|k| Member {
            sex: sex_of(k),
            parents: None,
        })
        .collect();
    let mut generation_of = vec![0usize; per_gen_n];
    let mut current: Vec<usize> = (0..per_gen_n).collect();

    for gen in 1..generations {
        let mut males: Vec<usize> = current.iter().copied().filter(|&i| members[i].sex == Sex::Male).collect();
        let mut females: Vec<usize> = current.iter().copied().filter(|&i| members[i].sex == Sex::Female).collect();
        males.shuffle(&mut rng);
        females.shuffle(&mut rng);
        let couples: Vec<[usize; 2]> = males.iter().zip(&females).map(|(&m, &f)| [m, f]).collect();
        let last = gen + 1 == generations;
        let counts: Vec<usize> = if last {
            loop {
                let c: Vec<usize> = couples.iter().map(|_| poisson.sample(&mut rng) as usize).collect();
                if c.iter().sum::<usize>() > 0 {
                    break c;
                }
            }
        } else {
            let mut c = vec![0; couples.len()];
            for _ in 0..per_gen_n {
                c[rng.random_range(0..couples.len())] += 1;
            }
            c
        };
        let mut next = Vec::new();
        for (couple, &count) in couples.iter().zip(&counts) {
            for _ in 0..count {
                let k = next.len();
                members.push(Member {
                    sex: sex_of(k),
                    parents: Some(*couple),
                });
                generation_of.push(gen);
                next.push(members.len() - 1);
            }
        }
        if halfsib {
            for &child in &next {
                let mut parents = members[child].parents.expect("non-founder");
                for (slot, sex) in [(0, Sex::Male), (1, Sex::Female)] {
                    if rng.random_bool(0.5) {
                        let pool: Vec<usize> = current.iter().copied().filter(|&i| members[i].sex == sex).collect();
                        parents[slot] = pool[rng.random_range(0..pool.len())];
                    }
                }
                members[child].parents = Some(parents);
            }
        }
        current = next;
    }

    // Keep ancestors of the final generation only.
    let mut keep = vec![false; members.len()];
    let mut stack = current.clone();
    while let Some(i) = stack.pop() {
        if std::mem::replace(&mut keep[i], true) {
            continue;
        }
        if let Some(ps) = members[i].parents {
            stack.extend(ps);
        }
    }
    let last_gen = generations - 1;
    let mut serial = vec![0usize; generations];
    let mut names = vec![String::new(); members.len()];
    for i in 0..members.len() {
        let g = generation_of[i];
        names[i] = format!("g{g}_{}", serial[g]);
        serial[g] += 1;
    }
    let individuals = (0..members.len())
        .filter(|&i| keep[i])
        .map(|i| {
            let mut ind = match members[i].parents {
                None => Individual::founder(&names[i], members[i].sex),
                Some([f, m]) => Individual::child(&names[i], &names[f], &names[m], members[i].sex),
            };
            if generation_of[i] == last_gen {
                ind = ind.interest();
            }
            ind
        })
        .collect();
    Pedigree::new(individuals)
}

/// Samples an inheritance path and genotypes of the interest individuals.
///
/// `distances` holds the `m - 1` gaps between consecutive sites. The first
/// state is uniform; each gap flips every meiosis independently with
/// probability `θ(d)`. Founder alleles are drawn afresh at every site.
pub fn simulate_genotypes(
    ped: &Pedigree,
    distances: &[f64],
    freqs: &AlleleFrequencies,
    lambda: f64,
    seed: u64,
    replicate: u64,
) -> Result<(GenotypeData, Vec<State>)> {
    let thetas = distances
        .iter()
        .map(|&d| theta_from_distance(d, lambda))
        .collect::<Result<Vec<_>>>()?;
    let n = ped.n();
    let mut rng = replicate_rng(seed, replicate, GENOTYPE_STREAM);
    let prog = Program::compile(ped);
    let interest: Vec<usize> = ped.interest().collect();
    let ids = interest.iter().map(|&i| ped.individuals()[i].id.clone()).collect();

    let mut cumulative = Vec::with_capacity(freqs.freqs().len());
    let mut acc = 0.0;
    for f in freqs.freqs() {
        acc += f;
        cumulative.push(acc);
    }
    let draw = |rng: &mut ChaCha8Rng| {
        let u: f64 = rng.random::<f64>() * acc;
        cumulative.iter().position(|&c| u < c).unwrap_or(cumulative.len() - 1)
    };

    let mut x: State = if n == 0 { 0 } else { rng.random_range(0..(1u32 << n)) };
    let mut path = Vec::with_capacity(thetas.len() + 1);
    let mut sites = Vec::with_capacity(thetas.len() + 1);
    let mut root = vec![0; prog.num_alleles()];
    let mut founder_allele = vec![usize::MAX; prog.num_alleles()];
    for t in 0..=thetas.len() {
        if t > 0 {
            for bit in 0..n {
                if rng.random_bool(thetas[t - 1]) {
                    x ^= mask_of(bit, n);
                }
            }
        }
        path.push(x);
        prog.roots(x, &mut root);
        founder_allele.iter_mut().for_each(|a| *a = usize::MAX);
        let mut calls = Vec::with_capacity(interest.len());
        for &i in &interest {
            let mut pair = [String::new(), String::new()];
            for (slot, role) in Role::BOTH.into_iter().enumerate() {
                let r = root[allele(i, role)];
                if founder_allele[r] == usize::MAX {
                    founder_allele[r] = draw(&mut rng);
                }
                pair[slot] = freqs.symbols()[founder_allele[r]].clone();
            }
            calls.push(Some(pair));
        }
        let distance = if t == 0 { 0.0 } else { distances[t - 1] };
        sites.push(Site { distance, calls });
    }
    Ok((GenotypeData { ids, sites }, path))
}
