//! Forward likelihood on the full inheritance chain and on a lumped chain.

use std::collections::HashMap;

use crate::emission::Emitter;
use crate::ensemble::{coefficient_table, verify_markov, CoefficientVector};
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::state::{hamming, InheritanceState, State};

/// Probability of an odd number of crossovers over `d` Morgans:
/// `θ = (1 - e^{-2λd}) / 2`.
pub fn theta_from_distance(d: f64, lambda: f64) -> Result<f64> {
    if d.is_nan() || d < 0.0 {
        return Err(Error::NegativeDistance(d));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Parameter(format!("rate λ = {lambda} must be positive")));
    }
    Ok(0.5 * (1.0 - (-2.0 * lambda * d).exp()))
}

fn check_theta(theta: f64) -> Result<()> {
    if (0.0..=0.5).contains(&theta) {
        Ok(())
    } else {
        Err(Error::Theta(theta))
    }
}

/// `θ^{|x⊕y|} (1-θ)^{n-|x⊕y|}`.
pub fn full_transition(x: InheritanceState, y: InheritanceState, theta: f64) -> Result<f64> {
    check_theta(theta)?;
    let y = y.expect_width(x.width())?;
    let k = hamming(x.bits(), y.bits()) as i32;
    Ok(theta.powi(k) * (1.0 - theta).powi(x.width() as i32 - k))
}

/// The lumped chain on the blocks of a Markov partition.
#[derive(Debug, Clone)]
pub struct ReducedHmm {
    partition: Partition,
    /// `k × k`, row-major: `trans_coeffs[i * k + j]` gives `Pr[i → j]`.
    trans_coeffs: Vec<CoefficientVector>,
    stationary: Vec<f64>,
}

impl ReducedHmm {
    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn num_blocks(&self) -> usize {
        self.partition.num_blocks()
    }

    pub fn width(&self) -> usize {
        self.partition.width()
    }

    pub fn trans_coeffs(&self, i: usize, j: usize) -> &CoefficientVector {
        &self.trans_coeffs[i * self.num_blocks() + j]
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    /// Row-major `k × k` transition matrix at `θ`.
    pub fn transition_matrix(&self, theta: f64) -> Result<Vec<f64>> {
        check_theta(theta)?;
        Ok(self.trans_coeffs.iter().map(|c| c.eval(theta)).collect())
    }
}

/// Lumps the hypercube chain along `p`, whose blocks must satisfy the
/// Markov condition. Blocks are taken in canonical order and coefficients
/// are read at each block's smallest member.
pub fn build_reduced(p: &Partition) -> Result<ReducedHmm> {
    verify_markov(p).map_err(Error::from)?;
    let partition = p.canonical();
    let n = partition.width();
    let k = partition.num_blocks();
    let mut table = Vec::new();
    let mut trans_coeffs = Vec::with_capacity(k * k);
    for block in partition.blocks() {
        coefficient_table(block[0], partition.block_index(), n, &mut table, k);
        for j in 0..k {
            trans_coeffs.push(CoefficientVector(table[j * (n + 1)..(j + 1) * (n + 1)].to_vec()));
        }
    }
    let total = (1u64 << n) as f64;
    let stationary = partition
        .blocks()
        .iter()
        .map(|b| b.len() as f64 / total)
        .collect();
    Ok(ReducedHmm {
        partition,
        trans_coeffs,
        stationary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardResult {
    /// Natural log; `-inf` when the data are impossible.
    pub log_likelihood: f64,
    /// Multiply-adds spent propagating the forward vector.
    pub transition_ops: u64,
    /// Emission probabilities evaluated.
    pub emission_evals: u64,
}

/// Recombination fractions between consecutive sites of the data.
pub fn site_thetas(distances: &[f64], lambda: f64) -> Result<Vec<f64>> {
    distances
        .iter()
        .skip(1)
        .map(|&d| theta_from_distance(d, lambda))
        .collect()
}

/// Scales `v` to sum to one and returns the log of the removed factor.
fn rescale(v: &mut [f64]) -> f64 {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        for a in v.iter_mut() {
            *a /= s;
        }
    }
    s.ln()
}

/// Applies the hypercube transition at `θ` in place, one meiosis at a time:
/// the full matrix is the Kronecker product of `n` two-state flips.
fn hypercube_step(v: &mut [f64], n: usize, theta: f64) {
    let stay = 1.0 - theta;
    for bit in 0..n {
        let m = 1usize << bit;
        for x in 0..v.len() {
            if x & m == 0 {
                let (a, b) = (v[x], v[x | m]);
                v[x] = stay * a + theta * b;
                v[x | m] = theta * a + stay * b;
            }
        }
    }
}

/// Forward recursion over all `2^n` states.
pub fn naive_forward(emitter: &Emitter, thetas: &[f64]) -> Result<ForwardResult> {
    let m = emitter.num_sites();
    check_intervals(m, thetas)?;
    let n = emitter.width();
    let size = 1usize << n;
    let mut result = ForwardResult {
        log_likelihood: 0.0,
        transition_ops: 0,
        emission_evals: 0,
    };
    if m == 0 {
        return Ok(result);
    }
    let mut alpha = vec![1.0 / size as f64; size];
    for t in 0..m {
        if t > 0 {
            hypercube_step(&mut alpha, n, thetas[t - 1]);
            result.transition_ops += (2 * n * size) as u64;
        }
        let e = emitter.site_vector(t);
        result.emission_evals += size as u64;
        for (a, p) in alpha.iter_mut().zip(e) {
            *a *= p;
        }
        result.log_likelihood += rescale(&mut alpha);
        if result.log_likelihood == f64::NEG_INFINITY {
            break;
        }
    }
    Ok(result)
}

/// Forward recursion with the dense `2^n × 2^n` matrix; for checking.
pub fn dense_forward(emitter: &Emitter, thetas: &[f64]) -> Result<f64> {
    let m = emitter.num_sites();
    check_intervals(m, thetas)?;
    let n = emitter.width();
    let size = 1usize << n;
    let mut alpha = vec![1.0 / size as f64; size];
    let mut log_l = 0.0;
    for t in 0..m {
        if t > 0 {
            let theta = thetas[t - 1];
            let mut next = vec![0.0; size];
            for (x, &a) in alpha.iter().enumerate() {
                let x = InheritanceState::new(x as State, n)?;
                for (y, slot) in next.iter_mut().enumerate() {
                    *slot += a * full_transition(x, InheritanceState::new(y as State, n)?, theta)?;
                }
            }
            alpha = next;
        }
        for (x, a) in alpha.iter_mut().enumerate() {
            *a *= emitter.probability(x as State, t);
        }
        log_l += rescale(&mut alpha);
    }
    Ok(log_l)
}

/// Forward recursion on the lumped chain; emissions are read at each
/// block's smallest member.
pub fn reduced_forward(model: &ReducedHmm, emitter: &Emitter, thetas: &[f64]) -> Result<ForwardResult> {
    let m = emitter.num_sites();
    check_intervals(m, thetas)?;
    if emitter.width() != model.width() {
        return Err(Error::WidthMismatch {
            expected: model.width(),
            got: emitter.width(),
        });
    }
    let k = model.num_blocks();
    let mut result = ForwardResult {
        log_likelihood: 0.0,
        transition_ops: 0,
        emission_evals: 0,
    };
    if m == 0 {
        return Ok(result);
    }
    let blocks = model.partition().blocks();
    let mut matrices: HashMap<u64, Vec<f64>> = HashMap::new();
    let mut alpha = model.stationary().to_vec();
    let mut next = vec![0.0; k];
    for t in 0..m {
        if t > 0 {
            let theta = thetas[t - 1];
            if !matrices.contains_key(&theta.to_bits()) {
                matrices.insert(theta.to_bits(), model.transition_matrix(theta)?);
            }
            let q = &matrices[&theta.to_bits()];
            next.iter_mut().for_each(|v| *v = 0.0);
            for (i, &a) in alpha.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (j, slot) in next.iter_mut().enumerate() {
                    *slot += a * q[i * k + j];
                }
            }
            result.transition_ops += (k * k) as u64;
            std::mem::swap(&mut alpha, &mut next);
        }
        for (a, block) in alpha.iter_mut().zip(blocks) {
            let e = emitter.probability(block[0], t);
            debug_assert!(
                (e - emitter.probability(*block.last().expect("non-empty"), t)).abs() <= 1e-12,
                "emission differs inside a block"
            );
            *a *= e;
        }
        result.emission_evals += k as u64;
        result.log_likelihood += rescale(&mut alpha);
        if result.log_likelihood == f64::NEG_INFINITY {
            break;
        }
    }
    Ok(result)
}

fn check_intervals(sites: usize, thetas: &[f64]) -> Result<()> {
    if thetas.len() + 1 != sites.max(1) {
        return Err(Error::Parameter(format!(
            "{} sites need {} recombination fractions, got {}",
            sites,
            sites.saturating_sub(1),
            thetas.len()
        )));
    }
    thetas.iter().try_for_each(|&t| check_theta(t))
}
