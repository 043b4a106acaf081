//! Truncated mode bases for the zero-mean function spaces on the torus.
//!
//! Two truncations are supported: the full 2D Fourier lattice with the
//! constant mode removed, and the invariant sine-lattice subspace spanned by
//! `sin((j + m p) y) e^{i k x}` for `p` in `[-P, P]`, which is preserved by
//! every operator built from a `cos(m y)` shear state.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GridError {
    #[error("truncation sizes must be positive, got {0}")]
    NonPositiveSize(String),
    #[error("base wavenumber m must be at least 2, got {0}")]
    BaseWavenumberTooSmall(i32),
    #[error("residue j={j} outside [1, floor(m/2)] = [1, {max_j}] for m={m}")]
    ResidueOutOfRange { m: i32, j: i32, max_j: i32 },
    #[error("residue j = m/2 = {0} is excluded for even m: sine modes would collide up to sign")]
    ResidueCollision(i32),
    #[error("sine lattice has colliding |n| values (n = {0} and n = {1})")]
    LatticeCollision(i32, i32),
}

/// A single Fourier mode `e^{i (k1 x + k2 y)}` on the torus.
///
/// The constant mode `(0, 0)` is excluded everywhere: all spaces carry zero
/// space average.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WaveIndex {
    pub k1: i32,
    pub k2: i32,
}

impl WaveIndex {
    pub fn new(k1: i32, k2: i32) -> Self {
        assert!(k1 != 0 || k2 != 0, "the constant mode (0,0) is excluded");
        Self { k1, k2 }
    }

    /// `|k|^2`, the eigenvalue of the negative Laplacian on this mode.
    pub fn norm_sq(&self) -> f64 {
        (self.k1 as f64) * (self.k1 as f64) + (self.k2 as f64) * (self.k2 as f64)
    }
}

impl fmt::Display for WaveIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.k1, self.k2)
    }
}

/// How the infinite mode lattice is cut down to a finite basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Truncation {
    /// All modes with `|k1| <= n1`, `|k2| <= n2`, excluding the origin.
    Full2d { n1: i32, n2: i32 },
    /// The invariant subspace of `sin((j + m p) y) e^{i k x}`, `p` in
    /// `[-p_max, p_max]`.
    Subspace { m: i32, j: i32, k: i32, p_max: i32 },
}

impl Truncation {
    pub fn validate(&self) -> Result<(), GridError> {
        match *self {
            Truncation::Full2d { n1, n2 } => {
                if n1 < 1 || n2 < 1 {
                    return Err(GridError::NonPositiveSize(format!("N1={n1}, N2={n2}")));
                }
                Ok(())
            }
            Truncation::Subspace { m, j, k, p_max } => {
                if m < 2 {
                    return Err(GridError::BaseWavenumberTooSmall(m));
                }
                if k < 1 || p_max < 1 {
                    return Err(GridError::NonPositiveSize(format!("k={k}, P={p_max}")));
                }
                let max_j = m / 2;
                if j < 1 || j > max_j {
                    return Err(GridError::ResidueOutOfRange { m, j, max_j });
                }
                // For even m, j = m/2 makes sin((j+mp)y) and sin((j+mp')y)
                // coincide up to sign for distinct p; the family would be
                // linearly dependent.
                if m % 2 == 0 && j == m / 2 {
                    return Err(GridError::ResidueCollision(j));
                }
                Ok(())
            }
        }
    }

    pub fn size(&self) -> usize {
        match *self {
            Truncation::Full2d { n1, n2 } => {
                ((2 * n1 + 1) as usize) * ((2 * n2 + 1) as usize) - 1
            }
            Truncation::Subspace { p_max, .. } => (2 * p_max + 1) as usize,
        }
    }
}

/// Label of one basis element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeLabel {
    /// Plane wave `e^{i(k1 x + k2 y)}` of a full 2D basis.
    Wave(WaveIndex),
    /// Lattice position `p` of a subspace basis, standing for
    /// `sin((j + m p) y) e^{i k x}`.
    Harmonic(i32),
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeLabel::Wave(w) => write!(f, "{w}"),
            ModeLabel::Harmonic(p) => write!(f, "p={p}"),
        }
    }
}

/// An ordered, immutable truncated basis with O(1) label lookup.
///
/// Ordering is deterministic: lexicographic in `(k1, k2)` for full bases,
/// increasing `p` for subspace bases, so assembled matrices are reproducible
/// byte for byte.
#[derive(Clone, Debug)]
pub struct ModeBasis {
    truncation: Truncation,
    labels: Vec<ModeLabel>,
    lookup: HashMap<ModeLabel, usize>,
}

/// Builds the basis for a truncation, validating its invariants.
pub fn build_basis(truncation: Truncation) -> Result<ModeBasis, GridError> {
    truncation.validate()?;
    let labels: Vec<ModeLabel> = match truncation {
        Truncation::Full2d { n1, n2 } => {
            let mut v = Vec::with_capacity(truncation.size());
            for k1 in -n1..=n1 {
                for k2 in -n2..=n2 {
                    if k1 != 0 || k2 != 0 {
                        v.push(ModeLabel::Wave(WaveIndex { k1, k2 }));
                    }
                }
            }
            v
        }
        Truncation::Subspace { m, j, p_max, .. } => {
            // Distinct |n| is implied by 0 < 2j < m, but assert anyway: the
            // sine family is a basis only under this condition.
            let ns: Vec<i32> = (-p_max..=p_max).map(|p| j + m * p).collect();
            for (a, &na) in ns.iter().enumerate() {
                for &nb in ns.iter().skip(a + 1) {
                    if na.abs() == nb.abs() {
                        return Err(GridError::LatticeCollision(na, nb));
                    }
                }
            }
            (-p_max..=p_max).map(ModeLabel::Harmonic).collect()
        }
    };
    let lookup = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| (l, i))
        .collect::<HashMap<_, _>>();
    assert_eq!(lookup.len(), labels.len(), "duplicate mode labels");
    Ok(ModeBasis {
        truncation,
        labels,
        lookup,
    })
}

impl ModeBasis {
    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[ModeLabel] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> ModeLabel {
        self.labels[index]
    }

    pub fn index_of(&self, label: &ModeLabel) -> Option<usize> {
        self.lookup.get(label).copied()
    }

    /// Eigenvalue of the truncated negative Laplacian on mode `index`:
    /// `k1^2 + k2^2` for plane waves, `n_p^2 + k^2` for sine modes.
    pub fn laplacian_symbol(&self, index: usize) -> f64 {
        match (self.labels[index], self.truncation) {
            (ModeLabel::Wave(w), _) => w.norm_sq(),
            (ModeLabel::Harmonic(p), Truncation::Subspace { m, j, k, .. }) => {
                let n = (j + m * p) as f64;
                n * n + (k as f64) * (k as f64)
            }
            _ => unreachable!("label kind matches truncation kind by construction"),
        }
    }

    /// x-wavenumber of mode `index` (`k1`, or the fixed `k` of a subspace).
    pub fn x_wavenumber(&self, index: usize) -> i32 {
        match (self.labels[index], self.truncation) {
            (ModeLabel::Wave(w), _) => w.k1,
            (ModeLabel::Harmonic(_), Truncation::Subspace { k, .. }) => k,
            _ => unreachable!(),
        }
    }

    /// Sine wavenumber `n_p = j + m p` of a subspace mode.
    pub fn sine_wavenumber(&self, index: usize) -> Option<i32> {
        match (self.labels[index], self.truncation) {
            (ModeLabel::Harmonic(p), Truncation::Subspace { m, j, .. }) => Some(j + m * p),
            _ => None,
        }
    }

    /// True for modes spanning the kernel of the streamline derivative:
    /// x-independent plane waves. Subspace bases have none (k >= 1).
    pub fn is_mean_flow_mode(&self, index: usize) -> bool {
        matches!(self.labels[index], ModeLabel::Wave(w) if w.k1 == 0)
    }

    /// Index of the mode shifted by `step` in the y-direction (k2 -> k2 +
    /// step, or p -> p + step/m for subspace bases when step is a multiple of
    /// m). Returns None when the target leaves the truncation.
    pub fn shifted(&self, index: usize, step: i32) -> Option<usize> {
        match (self.labels[index], self.truncation) {
            (ModeLabel::Wave(w), _) => {
                let target = WaveIndex {
                    k1: w.k1,
                    k2: w.k2 + step,
                };
                if target.k1 == 0 && target.k2 == 0 {
                    return None;
                }
                self.index_of(&ModeLabel::Wave(target))
            }
            (ModeLabel::Harmonic(p), Truncation::Subspace { m, .. }) => {
                debug_assert!(step % m == 0);
                self.index_of(&ModeLabel::Harmonic(p + step / m))
            }
            _ => unreachable!(),
        }
    }
}
