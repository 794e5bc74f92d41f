//! Branch-and-bound over the sites of the lattice in row-major order.
//!
//! Each step extends every kept partial configuration by one site, weighting
//! children by the conditional probabilities from the contracted network.
//! Configurations that agree on the boundary between assigned and unassigned
//! sites have identical futures, so only the lowest-energy one survives a
//! merge; the rest may be stored as droplets on the survivor.

mod droplets;
mod solution;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::peps::{EnvironmentCache, LatticeTransform, PepsNetwork};
use crate::potts::PottsHamiltonian;
use crate::tensor::{ContractionParams, Real};

pub use droplets::{droplet_distance, Droplet, DropletMode, DropletParams};
pub use solution::{unpack_droplets, Solution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    /// Number of partial configurations kept after each step.
    pub max_states: usize,
    /// Children with probability below `cut_off_prob` times the best
    /// probability of the step are dropped.
    pub cut_off_prob: f64,
    /// Merge branches with equal boundaries.
    pub merge: bool,
}

impl SearchParams {
    pub fn new(max_states: usize, cut_off_prob: f64) -> Result<Self> {
        let p = Self { max_states, cut_off_prob, merge: true };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_states == 0 {
            return Err(Error::InvalidParameter("max_states must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.cut_off_prob) {
            return Err(Error::InvalidParameter(format!("cut_off_prob must lie in [0, 1], got {}", self.cut_off_prob)));
        }
        Ok(())
    }
}

impl Default for SearchParams {
    fn default() -> Self {
        Self { max_states: 256, cut_off_prob: 1e-4, merge: true }
    }
}

/// A configuration of the first `values.len()` sites.
#[derive(Debug, Clone)]
pub struct PartialConfig<T> {
    pub values: Vec<usize>,
    pub log_probability: f64,
    /// Energy of every term whose sites are all assigned.
    pub energy: f64,
    pub droplets: Arc<Vec<Droplet>>,
    left: Vec<T>,
}

impl<T: Real> PartialConfig<T> {
    fn root() -> Self {
        Self {
            values: Vec::new(),
            log_probability: 0.0,
            energy: 0.0,
            droplets: Arc::new(Vec::new()),
            left: vec![T::one()],
        }
    }
}

/// Assigned sites with a king neighbour among the unassigned ones, given the
/// first `assigned` sites of an `m x n` lattice, in increasing order.
pub fn boundary_sites(dims: (usize, usize), assigned: usize) -> Vec<usize> {
    let (m, n) = dims;
    let total = m * n;
    let first = assigned.saturating_sub(n + 1);
    (first..assigned.min(total))
        .filter(|&s| {
            let (r, c) = ((s / n) as isize, (s % n) as isize);
            (-1..=1).any(|dr| {
                (-1..=1).any(|dc| {
                    let (rr, cc) = (r + dr, c + dc);
                    rr >= 0
                        && cc >= 0
                        && (rr as usize) < m
                        && (cc as usize) < n
                        && rr as usize * n + cc as usize >= assigned
                })
            })
        })
        .collect()
}

/// Energy terms that become complete when site `k` takes `x`.
fn energy_increment(h: &PottsHamiltonian, values: &[usize], x: usize) -> f64 {
    let k = values.len();
    let n = h.cols();
    let (row, col) = (k / n, k % n);
    let mut e = h.node(k)[x];
    if col > 0 {
        e += h.edge_energy(k - 1, k, values[k - 1], x);
    }
    if row > 0 {
        let up = k - n;
        e += h.edge_energy(up, k, values[up], x);
        if col > 0 {
            e += h.edge_energy(up - 1, k, values[up - 1], x);
        }
        if col + 1 < n {
            e += h.edge_energy(up + 1, k, values[up + 1], x);
        }
    }
    e
}

/// Children of every state for the next site.
fn branch<T: Real>(
    net: &PepsNetwork,
    states: &[PartialConfig<T>],
    cache: &mut EnvironmentCache<T>,
) -> Result<Vec<PartialConfig<T>>> {
    let h = net.potts();
    let n = h.cols();
    let mut out = Vec::new();
    for parent in states {
        let k = parent.values.len();
        let (row, col) = (k / n, k % n);
        let probs = net.conditional_with_left(&parent.values, &parent.left, cache)?;
        for (x, &p) in probs.iter().enumerate() {
            let left = if col + 1 < n {
                net.extend_left(row, col, &parent.left, x, cache)?
            } else {
                vec![T::one()]
            };
            let energy = parent.energy + energy_increment(h, &parent.values, x);
            let mut values = Vec::with_capacity(k + 1);
            values.extend_from_slice(&parent.values);
            values.push(x);
            out.push(PartialConfig {
                values,
                log_probability: parent.log_probability + p.ln(),
                energy,
                droplets: Arc::clone(&parent.droplets),
                left,
            });
        }
    }
    Ok(out)
}

fn better<T>(a: &PartialConfig<T>, b: &PartialConfig<T>) -> std::cmp::Ordering {
    a.energy.total_cmp(&b.energy).then_with(|| a.values.cmp(&b.values))
}

/// Collapses states with equal boundary values onto the lowest-energy one.
fn merge_and_collect<T: Real>(
    h: &PottsHamiltonian,
    states: Vec<PartialConfig<T>>,
    droplet_params: Option<&DropletParams>,
) -> Vec<PartialConfig<T>> {
    let Some(k) = states.first().map(|s| s.values.len()) else {
        return states;
    };
    let boundary = boundary_sites((h.rows(), h.cols()), k);
    let mut groups: BTreeMap<Vec<usize>, Vec<PartialConfig<T>>> = BTreeMap::new();
    for s in states {
        let key = boundary.iter().map(|&b| s.values[b]).collect();
        groups.entry(key).or_default().push(s);
    }
    let mut out = Vec::with_capacity(groups.len());
    for (_, mut group) in groups {
        group.sort_by(better);
        let mut it = group.into_iter();
        let mut survivor = it.next().expect("groups are non-empty");
        if let Some(dp) = droplet_params {
            for other in it {
                let delta = other.energy - survivor.energy;
                if delta > dp.energy_cutoff {
                    break;
                }
                let flips: BTreeMap<usize, usize> = other
                    .values
                    .iter()
                    .zip(&survivor.values)
                    .enumerate()
                    .filter(|(_, (a, b))| a != b)
                    .map(|(i, (&a, _))| (i, a))
                    .collect();
                if flips.is_empty() {
                    continue;
                }
                let mut candidate = Droplet { flips, delta_energy: delta, sub_droplets: (*other.droplets).clone() };
                candidate.truncate_depth(dp.max_depth.max(1));
                let list = Arc::make_mut(&mut survivor.droplets);
                droplets::insert_separated(h, &survivor.values, list, candidate, dp);
            }
        }
        out.push(survivor);
    }
    out
}

/// Keeps the most probable states. Returns the largest probability among the
/// dropped ones.
fn prune<T>(states: &mut Vec<PartialConfig<T>>, params: &SearchParams) -> f64 {
    states.sort_by(|a, b| {
        b.log_probability
            .total_cmp(&a.log_probability)
            .then_with(|| better(a, b))
    });
    let Some(best) = states.first().map(|s| s.log_probability) else {
        return 0.0;
    };
    let mut keep = states.len().min(params.max_states);
    if params.cut_off_prob > 0.0 {
        let threshold = best + params.cut_off_prob.ln();
        keep = states[..keep].partition_point(|s| s.log_probability >= threshold);
    }
    let dropped = states.get(keep).map_or(0.0, |s| s.log_probability.exp());
    states.truncate(keep);
    dropped
}

/// Low-energy configurations of `h` found by sweeping the lattice in the
/// frame given by `transform`.
pub fn low_energy_spectrum<T: Real>(
    h: &PottsHamiltonian,
    transform: LatticeTransform,
    contraction: &ContractionParams,
    params: &SearchParams,
    droplets: Option<&DropletParams>,
) -> Result<Solution> {
    params.validate()?;
    contraction.validate()?;
    let net = PepsNetwork::new(h, transform, contraction.beta)?;
    let mut cache = EnvironmentCache::<T>::new(*contraction);
    let sites = net.potts().num_sites();
    let n = net.cols();
    let mut states = vec![PartialConfig::<T>::root()];
    let mut largest_discarded = 0.0f64;
    for k in 0..sites {
        if k % n == 0 {
            cache.release_rows_above(k / n);
        }
        let children = branch(&net, &states, &mut cache)?;
        let branched = children.len();
        states = if params.merge { merge_and_collect(net.potts(), children, droplets) } else { children };
        let merged = states.len();
        largest_discarded = largest_discarded.max(prune(&mut states, params));
        log::trace!("site {}/{sites}: {branched} children, {merged} after merge, {} kept", k + 1, states.len());
        if k % n == n - 1 {
            let stats = cache.stats();
            log::debug!(
                "{}: row {} done, {} states, {} right environments cached",
                transform.name(),
                k / n + 1,
                states.len(),
                stats.right_envs
            );
        }
    }
    Solution::from_search(h, &net, states, largest_discarded)
}
