use serde::{Deserialize, Serialize};

use super::droplets::Droplet;
use super::PartialConfig;
use crate::error::Result;
use crate::peps::{LatticeTransform, PepsNetwork};
use crate::potts::PottsHamiltonian;

/// Result of a search, in the frame of the input Hamiltonian. States are
/// sorted by energy, ties broken lexicographically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub states: Vec<Vec<usize>>,
    pub energies: Vec<f64>,
    pub log_probabilities: Vec<f64>,
    /// Droplets attached to each state.
    pub droplets: Vec<Vec<Droplet>>,
    pub largest_discarded_probability: f64,
    pub beta: f64,
    /// Lowest energy reached by each lattice transform that contributed.
    pub transform_energies: Vec<(LatticeTransform, f64)>,
}

impl Solution {
    pub(crate) fn from_search<T>(
        h: &PottsHamiltonian,
        net: &PepsNetwork,
        states: Vec<PartialConfig<T>>,
        largest_discarded_probability: f64,
    ) -> Result<Self> {
        let mut rows = Vec::with_capacity(states.len());
        for s in states {
            let values = net.to_source_assignment(&s.values);
            let energy = h.energy(&values)?;
            let map = |site| net.to_source_site(site);
            let droplets = s.droplets.iter().map(|d| d.relabel(&map)).collect();
            rows.push(Entry { state: values, energy, log_probability: s.log_probability, droplets });
        }
        let mut sol = Self::from_entries(rows, largest_discarded_probability, net.beta());
        if let Some(&best) = sol.energies.first() {
            sol.transform_energies.push((net.transform(), best));
        }
        Ok(sol)
    }

    fn from_entries(mut rows: Vec<Entry>, largest_discarded_probability: f64, beta: f64) -> Self {
        rows.sort_by(|a, b| {
            a.energy
                .total_cmp(&b.energy)
                .then_with(|| a.state.cmp(&b.state))
                .then_with(|| b.log_probability.total_cmp(&a.log_probability))
        });
        rows.dedup_by(|b, a| a.state == b.state);
        let mut sol = Self {
            states: Vec::with_capacity(rows.len()),
            energies: Vec::with_capacity(rows.len()),
            log_probabilities: Vec::with_capacity(rows.len()),
            droplets: Vec::with_capacity(rows.len()),
            largest_discarded_probability,
            beta,
            transform_energies: Vec::new(),
        };
        for r in rows {
            sol.states.push(r.state);
            sol.energies.push(r.energy);
            sol.log_probabilities.push(r.log_probability);
            sol.droplets.push(r.droplets);
        }
        sol
    }

    fn into_entries(self) -> (Vec<Entry>, f64, f64, Vec<(LatticeTransform, f64)>) {
        let rows = self
            .states
            .into_iter()
            .zip(self.energies)
            .zip(self.log_probabilities)
            .zip(self.droplets)
            .map(|(((state, energy), log_probability), droplets)| Entry { state, energy, log_probability, droplets })
            .collect();
        (rows, self.largest_discarded_probability, self.beta, self.transform_energies)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn best_energy(&self) -> Option<f64> {
        self.energies.first().copied()
    }

    /// Union of several searches of the same Hamiltonian. Duplicate states
    /// are kept once.
    pub fn combine(solutions: impl IntoIterator<Item = Solution>) -> Solution {
        let mut rows = Vec::new();
        let mut discarded = 0.0f64;
        let mut beta = 0.0;
        let mut per_transform = Vec::new();
        for s in solutions {
            let (r, d, b, t) = s.into_entries();
            rows.extend(r);
            discarded = discarded.max(d);
            beta = b;
            per_transform.extend(t);
        }
        let mut sol = Self::from_entries(rows, discarded, beta);
        sol.transform_energies = per_transform;
        sol
    }

    /// Keeps the `n` lowest-energy states.
    pub fn truncate(&mut self, n: usize) {
        self.states.truncate(n);
        self.energies.truncate(n);
        self.log_probabilities.truncate(n);
        self.droplets.truncate(n);
    }
}

struct Entry {
    state: Vec<usize>,
    energy: f64,
    log_probability: f64,
    droplets: Vec<Droplet>,
}

/// Expands every droplet, recursively, into a state of its own. Carriers
/// keep their droplets; expanded states have none. Energies follow from the
/// recorded energy differences and log probabilities from the Boltzmann
/// weight relative to the carrier.
pub fn unpack_droplets(sol: &Solution) -> Solution {
    fn expand(
        base: &[usize],
        energy: f64,
        log_probability: f64,
        beta: f64,
        droplets: &[Droplet],
        out: &mut Vec<Entry>,
    ) {
        for d in droplets {
            let mut state = base.to_vec();
            d.apply(&mut state);
            let e = energy + d.delta_energy;
            let lp = log_probability - beta * d.delta_energy;
            expand(&state, e, lp, beta, &d.sub_droplets, out);
            out.push(Entry { state, energy: e, log_probability: lp, droplets: Vec::new() });
        }
    }

    let mut rows = Vec::new();
    for i in 0..sol.len() {
        expand(&sol.states[i], sol.energies[i], sol.log_probabilities[i], sol.beta, &sol.droplets[i], &mut rows);
        rows.push(Entry {
            state: sol.states[i].clone(),
            energy: sol.energies[i],
            log_probability: sol.log_probabilities[i],
            droplets: sol.droplets[i].clone(),
        });
    }
    let mut out = Solution::from_entries(rows, sol.largest_discarded_probability, sol.beta);
    out.transform_energies = sol.transform_energies.clone();
    out
}
