//! Seeded random instances on king's-graph geometries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ising::IsingGraph;
use crate::potts::{ClusterTopology, PottsHamiltonian};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Distribution {
    /// Uniform on `[low, high]`.
    Uniform { low: f64, high: f64 },
    /// `-1` or `+1` with equal probability.
    PlusMinusOne,
}

impl Distribution {
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            Distribution::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            Distribution::PlusMinusOne => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

/// King's-graph neighbours of cluster `k` that come after it in row-major
/// order: right, lower-left, lower, lower-right.
fn forward_neighbors(k: usize, rows: usize, cols: usize) -> Vec<usize> {
    let (r, c) = (k / cols, k % cols);
    let mut out = Vec::with_capacity(4);
    if c + 1 < cols {
        out.push(k + 1);
    }
    if r + 1 < rows {
        if c > 0 {
            out.push(k + cols - 1);
        }
        out.push(k + cols);
        if c + 1 < cols {
            out.push(k + cols + 1);
        }
    }
    out
}

/// Ising instance with couplings on every intra-cluster spin pair and every
/// spin pair of king-adjacent clusters. Deterministic under `seed`.
pub fn king_ising(
    topo: ClusterTopology,
    couplings: Distribution,
    fields: Option<Distribution>,
    seed: u64,
) -> IsingGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = topo.spins_per_cluster;
    let mut g = IsingGraph::new(topo.num_spins());
    for k in 0..topo.rows * topo.cols {
        for a in 0..t {
            for b in a + 1..t {
                g.add_coupling(k * t + a, k * t + b, couplings.sample(&mut rng))
                    .expect("fresh pair");
            }
        }
        for other in forward_neighbors(k, topo.rows, topo.cols) {
            for a in 0..t {
                for b in 0..t {
                    g.add_coupling(k * t + a, other * t + b, couplings.sample(&mut rng))
                        .expect("fresh pair");
                }
            }
        }
    }
    if let Some(dist) = fields {
        for i in 0..g.num_spins() {
            g.set_field(i, dist.sample(&mut rng)).expect("spin in range");
        }
    }
    g
}

/// Native Potts instance with `dim` states per site, random node tables and
/// random tables on every king's-graph edge, entries uniform in `[-scale, scale]`.
pub fn random_potts(rows: usize, cols: usize, dim: usize, scale: f64, seed: u64) -> PottsHamiltonian {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Distribution::Uniform { low: -scale, high: scale };
    let mut h = PottsHamiltonian::new(rows, cols, vec![dim; rows * cols]).expect("positive dims");
    for site in 0..rows * cols {
        for x in 0..dim {
            h.set_node_energy(site, x, dist.sample(&mut rng)).expect("state in range");
        }
        for other in forward_neighbors(site, rows, cols) {
            for x in 0..dim {
                for y in 0..dim {
                    h.set_edge_energy(site, other, x, y, dist.sample(&mut rng))
                        .expect("king-adjacent pair");
                }
            }
        }
    }
    h
}
