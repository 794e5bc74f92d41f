//! Ising model `E(s) = sum_<ij> J_ij s_i s_j + sum_i h_i s_i`.
//!
//! Spins are indexed from 0 in memory; the text format is 1-based.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct IsingGraph {
    num_spins: usize,
    couplings: BTreeMap<(usize, usize), f64>,
    fields: Vec<f64>,
    neighbors: Vec<Vec<usize>>,
}

impl IsingGraph {
    /// A graph with `num_spins` free spins and no interactions.
    pub fn new(num_spins: usize) -> Self {
        Self {
            num_spins,
            couplings: BTreeMap::new(),
            fields: vec![0.0; num_spins],
            neighbors: vec![Vec::new(); num_spins],
        }
    }

    /// Adds `J_ij`, stored once under `(min, max)`. A second coupling on the
    /// same pair, in either order, is rejected.
    pub fn add_coupling(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        if i == j {
            return Err(Error::Index(format!("self-coupling on spin {i}")));
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        if b >= self.num_spins {
            return Err(Error::Index(format!(
                "spin {b} outside graph of {} spins",
                self.num_spins
            )));
        }
        if self.couplings.insert((a, b), value).is_some() {
            return Err(Error::DuplicateEntry { line: 0, what: format!("coupling ({a}, {b})") });
        }
        self.neighbors[a].push(b);
        self.neighbors[b].push(a);
        Ok(())
    }

    pub fn set_field(&mut self, i: usize, value: f64) -> Result<()> {
        let slot = self
            .fields
            .get_mut(i)
            .ok_or_else(|| Error::Index(format!("spin {i} outside graph")))?;
        *slot = value;
        Ok(())
    }

    pub fn num_spins(&self) -> usize {
        self.num_spins
    }

    /// Couplings as `((i, j), J_ij)` with `i < j`, in ascending pair order.
    pub fn couplings(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.couplings.iter().map(|(&k, &v)| (k, v))
    }

    pub fn num_couplings(&self) -> usize {
        self.couplings.len()
    }

    pub fn coupling(&self, i: usize, j: usize) -> Option<f64> {
        let key = if i < j { (i, j) } else { (j, i) };
        self.couplings.get(&key).copied()
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Energy of a spin assignment with entries in `{-1, +1}`.
    pub fn energy(&self, spins: &[i8]) -> Result<f64> {
        if spins.len() != self.num_spins {
            return Err(Error::Dimension(format!(
                "assignment has {} spins, graph has {}",
                spins.len(),
                self.num_spins
            )));
        }
        let coupling: f64 = self
            .couplings
            .iter()
            .map(|(&(i, j), &v)| v * f64::from(spins[i]) * f64::from(spins[j]))
            .sum();
        let field: f64 = self.fields.iter().zip(spins).map(|(h, &s)| h * f64::from(s)).sum();
        Ok(coupling + field)
    }

    /// Splits the energy into its coupling and field parts.
    pub fn energy_parts(&self, spins: &[i8]) -> Result<(f64, f64)> {
        let total = self.energy(spins)?;
        let field: f64 = self.fields.iter().zip(spins).map(|(h, &s)| h * f64::from(s)).sum();
        Ok((total - field, field))
    }
}
