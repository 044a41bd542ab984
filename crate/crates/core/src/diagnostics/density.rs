use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::double_well_potential;

/// Mass assigned to empty bins before taking a KL divergence.
pub const KL_FLOOR: f64 = 1e-10;

/// Probability masses on a uniform grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
    /// Samples that fell outside `[lo, hi]` (always 0 for quadrature densities).
    pub overflow: u64,
    /// Samples that fell inside the grid.
    pub count: u64,
}

impl DensityEstimate {
    pub fn bins(&self) -> usize {
        self.masses.len()
    }

    pub fn width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Masses divided by bin width, i.e. a piecewise-constant density.
    pub fn densities(&self) -> Vec<f64> {
        let w = self.width();
        self.masses.iter().map(|m| m / w).collect()
    }

    /// Fraction of all samples that were out of range.
    pub fn overflow_fraction(&self) -> f64 {
        let total = self.count + self.overflow;
        if total == 0 {
            0.0
        } else {
            self.overflow as f64 / total as f64
        }
    }
}

fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Result<Vec<f64>> {
    if bins == 0 {
        return Err(Error::invalid("need at least one bin"));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid(format!("invalid range [{lo}, {hi}]")));
    }
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| lo + i as f64 * width).collect();
    edges.push(hi);
    Ok(edges)
}

/// Streaming histogram accumulator.
#[derive(Clone, Debug)]
pub struct Histogram {
    lo: f64,
    hi: f64,
    counts: Vec<u64>,
    overflow: u64,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        uniform_edges(lo, hi, bins)?;
        Ok(Self { lo, hi, counts: vec![0; bins], overflow: 0 })
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        if !(x >= self.lo && x <= self.hi) {
            self.overflow += 1;
            return;
        }
        let bins = self.counts.len();
        let k = (((x - self.lo) / (self.hi - self.lo)) * bins as f64) as usize;
        self.counts[k.min(bins - 1)] += 1;
    }

    /// Adds another accumulator's counts; the grids must agree.
    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if self.lo != other.lo || self.hi != other.hi || self.counts.len() != other.counts.len() {
            return Err(Error::invalid("cannot merge histograms on different grids"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.overflow += other.overflow;
        Ok(())
    }

    pub fn in_range(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn overflow(&self) -> u64 {
        self.overflow
    }

    pub fn finish(&self) -> Result<DensityEstimate> {
        let count = self.in_range();
        if count == 0 {
            return Err(Error::EmptyEstimate { lo: self.lo, hi: self.hi });
        }
        Ok(DensityEstimate {
            edges: uniform_edges(self.lo, self.hi, self.counts.len())?,
            masses: self.counts.iter().map(|&c| c as f64 / count as f64).collect(),
            overflow: self.overflow,
            count,
        })
    }
}

/// Normalized histogram of `samples` over `[lo, hi]`; out-of-range samples
/// are counted in `overflow` and excluded from the masses.
pub fn histogram_density(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Result<DensityEstimate> {
    let mut hist = Histogram::new(lo, hi, bins)?;
    samples.iter().for_each(|&x| hist.push(x));
    hist.finish()
}

/// Bin masses of `exp(-energy)` by composite Simpson quadrature with `refine`
/// (rounded up to even) subintervals per bin, normalized over the grid.
pub fn quadrature_density(
    energy: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    bins: usize,
    refine: usize,
) -> Result<DensityEstimate> {
    let edges = uniform_edges(lo, hi, bins)?;
    let sub = (refine.max(2) + 1) & !1;
    let width = (hi - lo) / bins as f64;
    let step = width / sub as f64;
    let weight = |x: f64| (-energy(x)).exp();
    let mut masses: Vec<f64> = edges
        .windows(2)
        .map(|w| {
            let a = w[0];
            let mut acc = weight(a) + weight(w[1]);
            for k in 1..sub {
                let x = a + k as f64 * step;
                acc += if k % 2 == 1 { 4.0 } else { 2.0 } * weight(x);
            }
            acc * step / 3.0
        })
        .collect();
    let z: f64 = masses.iter().sum();
    masses.iter_mut().for_each(|m| *m /= z);
    Ok(DensityEstimate { edges, masses, overflow: 0, count: 0 })
}

/// Reference bin masses of the double-well target `exp(-U)`.
pub fn double_well_true_density(lo: f64, hi: f64, bins: usize) -> Result<DensityEstimate> {
    quadrature_density(double_well_potential, lo, hi, bins, 10)
}

fn smoothed(masses: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = masses.iter().map(|&m| if m > 0.0 { m } else { KL_FLOOR }).collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|m| *m /= total);
    out
}

/// `KL(p || q) = sum_i p_i ln(p_i / q_i)` after replacing empty bins by
/// [`KL_FLOOR`] and renormalizing.
pub fn kl_divergence(p: &DensityEstimate, q: &DensityEstimate) -> Result<f64> {
    let same_grid = p.edges.len() == q.edges.len()
        && p.edges.iter().zip(&q.edges).all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(1.0));
    if !same_grid || p.masses.len() != q.masses.len() {
        return Err(Error::invalid("KL divergence needs densities on identical grids"));
    }
    let (p, q) = (smoothed(&p.masses), smoothed(&q.masses));
    let kl: f64 = p.iter().zip(&q).map(|(a, b)| a * (a / b).ln()).sum();
    // Gibbs' inequality; only rounding can push it below zero
    Ok(kl.max(0.0))
}
