use std::collections::HashMap;
use std::sync::Arc;

use crate::tensor::{BoundaryMps, ContractionParams, Real};

/// Key of a cached right environment: the row, the first free column and the
/// fixed values of the row above from `col - 1` to the end.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct RightKey {
    row: usize,
    col: usize,
    top: Vec<u32>,
}

impl RightKey {
    pub(crate) fn new(row: usize, col: usize, top: &[usize]) -> Self {
        Self { row, col, top: top.iter().map(|&x| x as u32).collect() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub bottom_envs: usize,
    pub right_envs: usize,
    pub right_hits: usize,
    pub right_misses: usize,
    /// Conditional entries that came out negative and were set to zero.
    pub clamped_entries: usize,
}

/// Memoized boundary environments of one network. Use a fresh cache for
/// every network (in particular every lattice transform).
#[derive(Debug, Clone)]
pub struct EnvironmentCache<T: Real> {
    params: ContractionParams,
    enabled: bool,
    bottom: HashMap<usize, Arc<BoundaryMps<T>>>,
    right: HashMap<RightKey, Arc<Vec<T>>>,
    stats: CacheStats,
}

impl<T: Real> EnvironmentCache<T> {
    pub fn new(params: ContractionParams) -> Self {
        Self {
            params,
            enabled: true,
            bottom: HashMap::new(),
            right: HashMap::new(),
            stats: CacheStats::default(),
        }
    }

    /// A cache that never stores anything; every environment is recomputed.
    pub fn disabled(params: ContractionParams) -> Self {
        Self { enabled: false, ..Self::new(params) }
    }

    pub fn params(&self) -> &ContractionParams {
        &self.params
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            bottom_envs: self.bottom.len(),
            right_envs: self.right.len(),
            ..self.stats
        }
    }

    pub fn clear(&mut self) {
        self.bottom.clear();
        self.right.clear();
        self.stats = CacheStats::default();
    }

    /// Drops everything belonging to rows above `row`.
    pub fn release_rows_above(&mut self, row: usize) {
        self.bottom.retain(|&r, _| r >= row);
        self.right.retain(|k, _| k.row >= row);
    }

    pub(crate) fn bottom(&self, row: usize) -> Option<Arc<BoundaryMps<T>>> {
        self.bottom.get(&row).cloned()
    }

    pub(crate) fn store_bottom(&mut self, row: usize, env: Arc<BoundaryMps<T>>) {
        if self.enabled {
            self.bottom.insert(row, env);
        }
    }

    pub(crate) fn right(&mut self, key: &RightKey) -> Option<Arc<Vec<T>>> {
        let hit = self.right.get(key).cloned();
        if hit.is_some() {
            self.stats.right_hits += 1;
        } else {
            self.stats.right_misses += 1;
        }
        hit
    }

    pub(crate) fn store_right(&mut self, key: RightKey, env: Arc<Vec<T>>) {
        if self.enabled {
            self.right.insert(key, env);
        }
    }

    pub(crate) fn record_clamped(&mut self, count: usize) {
        self.stats.clamped_entries += count;
    }
}
