use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the eight symmetries of the square grid: an optional horizontal
/// reflection followed by `rotation` quarter turns.
///
/// A quarter turn sends `(r, c)` on an `m x n` grid to `(c, m - 1 - r)` on the
/// `n x m` grid (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeTransform {
    rotation: u8,
    reflect: bool,
}

impl LatticeTransform {
    pub const IDENTITY: Self = Self { rotation: 0, reflect: false };

    pub const ALL: [Self; 8] = [
        Self { rotation: 0, reflect: false },
        Self { rotation: 1, reflect: false },
        Self { rotation: 2, reflect: false },
        Self { rotation: 3, reflect: false },
        Self { rotation: 0, reflect: true },
        Self { rotation: 1, reflect: true },
        Self { rotation: 2, reflect: true },
        Self { rotation: 3, reflect: true },
    ];

    pub fn new(rotation: u8, reflect: bool) -> Self {
        Self { rotation: rotation % 4, reflect }
    }

    /// Code in `0..8`: `rotation + 4 * reflect`.
    pub fn code(self) -> u8 {
        self.rotation + if self.reflect { 4 } else { 0 }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        if code >= 8 {
            return Err(Error::Index(format!("lattice transform code {code} not in 0..8")));
        }
        Ok(Self::ALL[code as usize])
    }

    pub fn rotation(self) -> u8 {
        self.rotation
    }

    pub fn is_reflection(self) -> bool {
        self.reflect
    }

    pub fn name(self) -> &'static str {
        const NAMES: [&str; 8] = [
            "identity",
            "rotation_90",
            "rotation_180",
            "rotation_270",
            "reflection",
            "reflection_rotation_90",
            "reflection_rotation_180",
            "reflection_rotation_270",
        ];
        NAMES[self.code() as usize]
    }

    pub fn inverse(self) -> Self {
        if self.reflect {
            self
        } else {
            Self::new((4 - self.rotation) % 4, false)
        }
    }

    /// Grid shape after the transform.
    pub fn transformed_dims(self, rows: usize, cols: usize) -> (usize, usize) {
        if self.rotation % 2 == 1 {
            (cols, rows)
        } else {
            (rows, cols)
        }
    }

    /// Maps a 0-based site of a `dims` grid into the transformed frame.
    pub fn apply(self, site: (usize, usize), dims: (usize, usize)) -> (usize, usize) {
        let (mut r, mut c) = site;
        let (mut m, mut n) = dims;
        debug_assert!(r < m && c < n);
        if self.reflect {
            c = n - 1 - c;
        }
        for _ in 0..self.rotation {
            (r, c) = (c, m - 1 - r);
            (m, n) = (n, m);
        }
        (r, c)
    }

    /// Checked form of [`apply`](Self::apply).
    pub fn try_apply(self, site: (usize, usize), dims: (usize, usize)) -> Result<(usize, usize)> {
        if site.0 >= dims.0 || site.1 >= dims.1 {
            return Err(Error::Index(format!(
                "site ({}, {}) outside {}x{} grid",
                site.0 + 1,
                site.1 + 1,
                dims.0,
                dims.1
            )));
        }
        Ok(self.apply(site, dims))
    }

    /// Maps a site of the transformed frame back to the original `dims` grid.
    pub fn apply_inverse(self, site: (usize, usize), dims: (usize, usize)) -> (usize, usize) {
        self.inverse().apply(site, self.transformed_dims(dims.0, dims.1))
    }
}

impl Default for LatticeTransform {
    fn default() -> Self {
        Self::IDENTITY
    }
}
