//! Exhaustive enumeration of small Potts instances.

use crate::error::{Error, Result};
use crate::potts::PottsHamiltonian;

/// Default ceiling on the number of enumerated assignments.
pub const DEFAULT_LIMIT: u128 = 1 << 24;

/// Every assignment with its energy, ascending; ties keep lexicographic
/// (row-major, state-ascending) order.
#[derive(Debug, Clone)]
pub struct ExactSpectrum {
    pub states: Vec<Vec<usize>>,
    pub energies: Vec<f64>,
}

impl ExactSpectrum {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    /// `ln Z(beta) = ln Σ exp(-beta E)`.
    pub fn log_partition_function(&self, beta: f64) -> f64 {
        log_sum_exp(self.energies.iter().map(|e| -beta * e))
    }

    pub fn partition_function(&self, beta: f64) -> f64 {
        self.log_partition_function(beta).exp()
    }
}

/// Calls `f` on every assignment of `dims` in lexicographic order.
pub fn for_each_assignment(dims: &[usize], mut f: impl FnMut(&[usize])) {
    let mut x = vec![0usize; dims.len()];
    loop {
        f(&x);
        let mut k = dims.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            x[k] += 1;
            if x[k] < dims[k] {
                break;
            }
            x[k] = 0;
        }
    }
}

fn guard(count: u128, limit: u128) -> Result<()> {
    if count > limit {
        return Err(Error::TooLarge { count, limit });
    }
    Ok(())
}

pub fn exact_spectrum(h: &PottsHamiltonian, limit: u128) -> Result<ExactSpectrum> {
    guard(h.total_states(), limit.min(DEFAULT_LIMIT))?;
    let mut entries = Vec::with_capacity(h.total_states() as usize);
    for_each_assignment(h.dims(), |x| {
        let e = h.energy(x).expect("enumerated assignment is in range");
        entries.push((x.to_vec(), e));
    });
    entries.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (states, energies) = entries.into_iter().unzip();
    Ok(ExactSpectrum { states, energies })
}

/// `p(x_k = s | partial)` for `k = partial.len()` in row-major order of `h`,
/// summing over every completion.
pub fn exact_conditional(h: &PottsHamiltonian, beta: f64, partial: &[usize], limit: u128) -> Result<Vec<f64>> {
    let k = partial.len();
    if k >= h.num_sites() {
        return Err(Error::Index(format!("no site left after {k} assigned values")));
    }
    let free = &h.dims()[k..];
    let count = free.iter().fold(1u128, |a, &d| a.saturating_mul(d as u128));
    guard(count, limit)?;
    let d = h.dim(k);
    let mut exponents: Vec<Vec<f64>> = vec![Vec::new(); d];
    let mut x = partial.to_vec();
    x.resize(h.num_sites(), 0);
    for_each_assignment(free, |tail| {
        x[k..].copy_from_slice(tail);
        let e = h.energy(&x).expect("enumerated assignment is in range");
        exponents[tail[0]].push(-beta * e);
    });
    let logs: Vec<f64> = exponents.into_iter().map(|v| log_sum_exp(v.into_iter())).collect();
    let total = log_sum_exp(logs.iter().copied());
    Ok(logs.into_iter().map(|l| (l - total).exp()).collect())
}

/// Brute-force ground state over spin assignments of an Ising graph.
pub fn ising_ground_energy(g: &crate::ising::IsingGraph) -> Result<f64> {
    let n = g.num_spins();
    guard(1u128 << n.min(127), DEFAULT_LIMIT)?;
    let mut best = f64::INFINITY;
    let mut spins = vec![1i8; n];
    for code in 0u64..(1u64 << n) {
        for (q, s) in spins.iter_mut().enumerate() {
            *s = if (code >> q) & 1 == 0 { 1 } else { -1 };
        }
        best = best.min(g.energy(&spins)?);
    }
    Ok(best)
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let mx = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        return mx;
    }
    mx + values.map(|v| (v - mx).exp()).sum::<f64>().ln()
}
