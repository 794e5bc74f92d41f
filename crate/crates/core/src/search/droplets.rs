use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potts::PottsHamiltonian;

/// How distances between droplets are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DropletMode {
    /// Differing Ising spins after decoding clusters. Falls back to
    /// [`DropletMode::Potts`] for Hamiltonians without a cluster map.
    Spin,
    /// Differing Potts variables.
    Potts,
}

impl std::str::FromStr for DropletMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spin" | "hamming" => Ok(Self::Spin),
            "potts" | "rmf" => Ok(Self::Potts),
            other => Err(Error::Unsupported(format!("droplet mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropletParams {
    /// Largest energy above the carrier for which a droplet is recorded.
    pub energy_cutoff: f64,
    /// Minimum Hamming distance between droplets attached to one state.
    pub hamming_cutoff: usize,
    pub mode: DropletMode,
    /// Nesting depth kept when droplets of a discarded branch are re-anchored.
    pub max_depth: usize,
}

impl DropletParams {
    pub fn new(energy_cutoff: f64, hamming_cutoff: usize, mode: DropletMode) -> Result<Self> {
        if energy_cutoff.is_nan() || energy_cutoff < 0.0 {
            return Err(Error::InvalidParameter(format!("energy_cutoff must be non-negative, got {energy_cutoff}")));
        }
        Ok(Self { energy_cutoff, hamming_cutoff, mode, max_depth: 2 })
    }
}

/// Localized excitation on top of a carrier configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Droplet {
    /// Site → alternative state.
    pub flips: BTreeMap<usize, usize>,
    /// Energy of the flipped configuration minus the carrier's.
    pub delta_energy: f64,
    /// Droplets of the branch that was merged away, relative to the
    /// configuration obtained by applying `flips`.
    pub sub_droplets: Vec<Droplet>,
}

impl Droplet {
    pub fn depth(&self) -> usize {
        1 + self.sub_droplets.iter().map(Droplet::depth).max().unwrap_or(0)
    }

    pub(crate) fn truncate_depth(&mut self, depth: usize) {
        if depth <= 1 {
            self.sub_droplets.clear();
        } else {
            self.sub_droplets.iter_mut().for_each(|d| d.truncate_depth(depth - 1));
        }
    }

    /// Writes the flips into `config`.
    pub fn apply(&self, config: &mut [usize]) {
        for (&site, &state) in &self.flips {
            config[site] = state;
        }
    }

    /// Same droplet with sites renamed by `map`.
    pub fn relabel(&self, map: &impl Fn(usize) -> usize) -> Droplet {
        Droplet {
            flips: self.flips.iter().map(|(&s, &v)| (map(s), v)).collect(),
            delta_energy: self.delta_energy,
            sub_droplets: self.sub_droplets.iter().map(|d| d.relabel(map)).collect(),
        }
    }
}

/// Hamming distance between `carrier ⊕ a` and `carrier ⊕ b`.
pub fn droplet_distance(
    h: &PottsHamiltonian,
    carrier: &[usize],
    a: &Droplet,
    b: &Droplet,
    mode: DropletMode,
) -> usize {
    let spin_level = mode == DropletMode::Spin;
    let value = |d: &Droplet, site: usize| d.flips.get(&site).copied().unwrap_or(carrier[site]);
    let mut total = 0;
    for &site in a.flips.keys() {
        total += h.state_distance(value(a, site), value(b, site), spin_level);
    }
    for &site in b.flips.keys().filter(|s| !a.flips.contains_key(s)) {
        total += h.state_distance(value(a, site), value(b, site), spin_level);
    }
    total
}

/// Adds `candidate` to `droplets` unless one within `hamming_cutoff` has an
/// equal or lower energy. Accepted candidates evict every droplet they clash
/// with.
pub(crate) fn insert_separated(
    h: &PottsHamiltonian,
    carrier: &[usize],
    droplets: &mut Vec<Droplet>,
    candidate: Droplet,
    params: &DropletParams,
) {
    let clashing: Vec<usize> = droplets
        .iter()
        .enumerate()
        .filter(|(_, d)| droplet_distance(h, carrier, d, &candidate, params.mode) < params.hamming_cutoff)
        .map(|(i, _)| i)
        .collect();
    if clashing.iter().any(|&i| droplets[i].delta_energy <= candidate.delta_energy) {
        return;
    }
    for &i in clashing.iter().rev() {
        droplets.remove(i);
    }
    droplets.push(candidate);
}
