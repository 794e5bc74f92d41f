//! Potts Hamiltonian `E(x) = sum_<a,b> E_ab(x_a, x_b) + sum_a E_a(x_a)` on a
//! king's graph, and the clustering of Ising spins into Potts variables.
//!
//! Sites are addressed by their 0-based row-major index `r * cols + c`;
//! states are 0-based in memory and 1-based in files.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::IsingGraph;
use crate::peps::LatticeTransform;

/// Grid shape `rows x cols` with `spins_per_cluster` spins grouped per site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterTopology {
    pub rows: usize,
    pub cols: usize,
    pub spins_per_cluster: usize,
}

impl ClusterTopology {
    pub fn new(rows: usize, cols: usize, spins_per_cluster: usize) -> Self {
        Self { rows, cols, spins_per_cluster }
    }

    pub fn num_spins(&self) -> usize {
        self.rows * self.cols * self.spins_per_cluster
    }

    /// Grid site `(row, col)` (0-based) holding spin `spin` (0-based).
    pub fn site_of_spin(&self, spin: usize) -> (usize, usize) {
        let k = spin / self.spins_per_cluster;
        (k / self.cols, k % self.cols)
    }
}

/// Pairwise table `E_ab(x_a, x_b)` stored row-major with `x_a` major, for `a < b`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeTable {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl EdgeTable {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, values: vec![0.0; rows * cols] }
    }

    #[inline]
    pub fn get(&self, xa: usize, xb: usize) -> f64 {
        self.values[xa * self.cols + xb]
    }

    pub fn transposed(&self) -> Self {
        let mut values = vec![0.0; self.values.len()];
        for a in 0..self.rows {
            for b in 0..self.cols {
                values[b * self.rows + a] = self.values[a * self.cols + b];
            }
        }
        Self { rows: self.cols, cols: self.rows, values }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PottsHamiltonian {
    rows: usize,
    cols: usize,
    dims: Vec<usize>,
    nodes: Vec<Vec<f64>>,
    edges: BTreeMap<(usize, usize), EdgeTable>,
    clusters: Option<Vec<Vec<usize>>>,
    num_source_spins: usize,
}

impl PottsHamiltonian {
    /// All-zero Hamiltonian on a `rows x cols` grid with per-site dimensions
    /// `dims` in row-major order.
    pub fn new(rows: usize, cols: usize, dims: Vec<usize>) -> Result<Self> {
        if dims.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} site dimensions for a {rows}x{cols} grid",
                dims.len()
            )));
        }
        if let Some(bad) = dims.iter().position(|&d| d == 0) {
            return Err(Error::Dimension(format!("site {bad} has dimension 0")));
        }
        let nodes = dims.iter().map(|&d| vec![0.0; d]).collect();
        Ok(Self {
            rows,
            cols,
            dims,
            nodes,
            edges: BTreeMap::new(),
            clusters: None,
            num_source_spins: 0,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn num_sites(&self) -> usize {
        self.rows * self.cols
    }

    pub fn site(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    pub fn coords(&self, site: usize) -> (usize, usize) {
        (site / self.cols, site % self.cols)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self, site: usize) -> usize {
        self.dims[site]
    }

    /// Number of full assignments, saturating at `u128::MAX`.
    pub fn total_states(&self) -> u128 {
        self.dims.iter().fold(1u128, |acc, &d| acc.saturating_mul(d as u128))
    }

    pub fn node(&self, site: usize) -> &[f64] {
        &self.nodes[site]
    }

    pub fn set_node_energy(&mut self, site: usize, state: usize, energy: f64) -> Result<()> {
        let d = self.dims[site];
        let slot = self.nodes[site].get_mut(state).ok_or_else(|| {
            Error::Index(format!("state {state} out of range for site {site} (d={d})"))
        })?;
        *slot = energy;
        Ok(())
    }

    pub fn is_king_adjacent(&self, a: usize, b: usize) -> bool {
        let (ra, ca) = self.coords(a);
        let (rb, cb) = self.coords(b);
        a != b && ra.abs_diff(rb) <= 1 && ca.abs_diff(cb) <= 1
    }

    /// Mutable pairwise table between `a` and `b`, created on first access.
    /// The table is always oriented with the lower site index first.
    fn edge_mut(&mut self, a: usize, b: usize) -> Result<&mut EdgeTable> {
        if !self.is_king_adjacent(a, b) {
            let (ra, ca) = self.coords(a);
            let (rb, cb) = self.coords(b);
            return Err(Error::Geometry(format!(
                "sites ({}, {}) and ({}, {}) are not king-adjacent",
                ra + 1,
                ca + 1,
                rb + 1,
                cb + 1
            )));
        }
        let key = (a.min(b), a.max(b));
        let (da, db) = (self.dims[key.0], self.dims[key.1]);
        Ok(self.edges.entry(key).or_insert_with(|| EdgeTable::zeros(da, db)))
    }

    /// Sets `E_ab(xa, xb)`; the orientation of `(a, b)` is arbitrary.
    pub fn set_edge_energy(
        &mut self,
        a: usize,
        b: usize,
        xa: usize,
        xb: usize,
        energy: f64,
    ) -> Result<()> {
        self.check_state(a, xa)?;
        self.check_state(b, xb)?;
        let table = self.edge_mut(a, b)?;
        let (lo, hi) = if a < b { (xa, xb) } else { (xb, xa) };
        table.values[lo * table.cols + hi] = energy;
        Ok(())
    }

    fn add_edge_energy(&mut self, a: usize, b: usize, xa: usize, xb: usize, energy: f64) -> Result<()> {
        let table = self.edge_mut(a, b)?;
        let (lo, hi) = if a < b { (xa, xb) } else { (xb, xa) };
        table.values[lo * table.cols + hi] += energy;
        Ok(())
    }

    fn check_state(&self, site: usize, state: usize) -> Result<()> {
        if state >= self.dims[site] {
            return Err(Error::Index(format!(
                "state {} out of range for site {site} (d={})",
                state + 1,
                self.dims[site]
            )));
        }
        Ok(())
    }

    /// `E_ab(xa, xb)`, zero when the pair carries no table.
    #[inline]
    pub fn edge_energy(&self, a: usize, b: usize, xa: usize, xb: usize) -> f64 {
        if a < b {
            self.edges.get(&(a, b)).map_or(0.0, |t| t.get(xa, xb))
        } else {
            self.edges.get(&(b, a)).map_or(0.0, |t| t.get(xb, xa))
        }
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains_key(&(a.min(b), a.max(b)))
    }

    /// Pairwise tables keyed by `(a, b)` with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (&(usize, usize), &EdgeTable)> {
        self.edges.iter()
    }

    /// Spins of the source Ising graph grouped per site, if built by clustering.
    pub fn clusters(&self) -> Option<&[Vec<usize>]> {
        self.clusters.as_deref()
    }

    pub fn energy(&self, x: &[usize]) -> Result<f64> {
        if x.len() != self.num_sites() {
            return Err(Error::Dimension(format!(
                "assignment covers {} sites, grid has {}",
                x.len(),
                self.num_sites()
            )));
        }
        for (site, &s) in x.iter().enumerate() {
            self.check_state(site, s)?;
        }
        let nodes: f64 = x.iter().enumerate().map(|(site, &s)| self.nodes[site][s]).sum();
        let edges: f64 = self.edges.iter().map(|(&(a, b), t)| t.get(x[a], x[b])).sum();
        Ok(nodes + edges)
    }

    /// Groups spins of `graph` into consecutive blocks of `t`, placed row-major
    /// on the grid. State `b` of a cluster gives its `q`-th spin the value
    /// `(-1)^(bit q of b)`.
    pub fn cluster(graph: &IsingGraph, topo: ClusterTopology) -> Result<Self> {
        let t = topo.spins_per_cluster;
        if t == 0 || topo.rows == 0 || topo.cols == 0 {
            return Err(Error::Dimension("topology extents must be positive".into()));
        }
        if t > 16 {
            return Err(Error::Unsupported(format!("{t} spins per cluster exceed the dense limit of 16")));
        }
        if graph.num_spins() != topo.num_spins() {
            return Err(Error::Dimension(format!(
                "graph has {} spins, topology {}x{}x{} needs {}",
                graph.num_spins(),
                topo.rows,
                topo.cols,
                t,
                topo.num_spins()
            )));
        }
        let d = 1usize << t;
        let num_sites = topo.rows * topo.cols;
        let mut h = Self::new(topo.rows, topo.cols, vec![d; num_sites])?;
        let cluster_of = |spin: usize| spin / t;
        let local = |spin: usize| spin % t;
        let spin_value = |state: usize, q: usize| if (state >> q) & 1 == 0 { 1.0 } else { -1.0 };

        for k in 0..num_sites {
            let base = k * t;
            let mut table = vec![0.0; d];
            for (b, e) in table.iter_mut().enumerate() {
                for q in 0..t {
                    *e += graph.fields()[base + q] * spin_value(b, q);
                }
            }
            h.nodes[k] = table;
        }
        for ((i, j), v) in graph.couplings() {
            let (ki, kj) = (cluster_of(i), cluster_of(j));
            if ki == kj {
                let (qi, qj) = (local(i), local(j));
                for (b, e) in h.nodes[ki].iter_mut().enumerate() {
                    *e += v * spin_value(b, qi) * spin_value(b, qj);
                }
            } else {
                if !h.is_king_adjacent(ki, kj) {
                    return Err(Error::Geometry(format!(
                        "coupling between spins {} and {} joins clusters at ({}, {}) and ({}, {}), which are not king-adjacent",
                        i + 1,
                        j + 1,
                        ki / topo.cols + 1,
                        ki % topo.cols + 1,
                        kj / topo.cols + 1,
                        kj % topo.cols + 1
                    )));
                }
                let (qi, qj) = (local(i), local(j));
                for xi in 0..d {
                    for xj in 0..d {
                        h.add_edge_energy(ki, kj, xi, xj, v * spin_value(xi, qi) * spin_value(xj, qj))?;
                    }
                }
            }
        }
        h.clusters = Some((0..num_sites).map(|k| (k * t..(k + 1) * t).collect()).collect());
        h.num_source_spins = graph.num_spins();
        Ok(h)
    }

    /// Spin assignment encoded by the Potts assignment `x`.
    pub fn decode(&self, x: &[usize]) -> Result<Vec<i8>> {
        let clusters = self
            .clusters
            .as_ref()
            .ok_or_else(|| Error::Unsupported("Hamiltonian carries no cluster map".into()))?;
        if x.len() != self.num_sites() {
            return Err(Error::Dimension(format!(
                "assignment covers {} sites, grid has {}",
                x.len(),
                self.num_sites()
            )));
        }
        let mut spins = vec![0i8; self.num_source_spins];
        for (site, spins_here) in clusters.iter().enumerate() {
            self.check_state(site, x[site])?;
            for (q, &spin) in spins_here.iter().enumerate() {
                spins[spin] = if (x[site] >> q) & 1 == 0 { 1 } else { -1 };
            }
        }
        Ok(spins)
    }

    /// Inverse of [`decode`](Self::decode).
    pub fn encode(&self, spins: &[i8]) -> Result<Vec<usize>> {
        let clusters = self
            .clusters
            .as_ref()
            .ok_or_else(|| Error::Unsupported("Hamiltonian carries no cluster map".into()))?;
        if spins.len() != self.num_source_spins {
            return Err(Error::Dimension(format!(
                "{} spins given, source graph has {}",
                spins.len(),
                self.num_source_spins
            )));
        }
        Ok(clusters
            .iter()
            .map(|members| {
                members
                    .iter()
                    .enumerate()
                    .map(|(q, &spin)| usize::from(spins[spin] < 0) << q)
                    .sum()
            })
            .collect())
    }

    /// Number of spins that differ between the decoded forms of states `a`
    /// and `b` at `site`, or 1/0 for native Potts variables.
    pub fn state_distance(&self, a: usize, b: usize, spin_level: bool) -> usize {
        if spin_level && self.clusters.is_some() {
            (a ^ b).count_ones() as usize
        } else {
            usize::from(a != b)
        }
    }

    /// The same Hamiltonian expressed in the frame produced by `tr`. Node and
    /// edge tables move with their sites; the cluster map moves too.
    pub fn transformed(&self, tr: LatticeTransform) -> Self {
        let (rows, cols) = tr.transformed_dims(self.rows, self.cols);
        let map = |site: usize| {
            let (r, c) = tr.apply(self.coords(site), (self.rows, self.cols));
            r * cols + c
        };
        let mut dims = vec![0; rows * cols];
        let mut nodes = vec![Vec::new(); rows * cols];
        for site in 0..self.num_sites() {
            let t = map(site);
            dims[t] = self.dims[site];
            nodes[t] = self.nodes[site].clone();
        }
        let mut edges = BTreeMap::new();
        for (&(a, b), table) in &self.edges {
            let (ta, tb) = (map(a), map(b));
            if ta < tb {
                edges.insert((ta, tb), table.clone());
            } else {
                edges.insert((tb, ta), table.transposed());
            }
        }
        let clusters = self.clusters.as_ref().map(|cl| {
            let mut moved = vec![Vec::new(); rows * cols];
            for (site, members) in cl.iter().enumerate() {
                moved[map(site)] = members.clone();
            }
            moved
        });
        Self {
            rows,
            cols,
            dims,
            nodes,
            edges,
            clusters,
            num_source_spins: self.num_source_spins,
        }
    }
}
