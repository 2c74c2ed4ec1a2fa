use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type Vec3<T> = [T; 3];

/// One-dimensional chain along `x` with alternating gaps `r1, r2, r1, …`.
///
/// The gap between sites `(2j−1, 2j)` is `r1`, between `(2j, 2j+1)` is `r2`.
/// Per-site displacements (default zero) model frozen thermal disorder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainGeometry<T: Real> {
    n_sites: usize,
    r1: T,
    r2: T,
    displacements: Vec<Vec3<T>>,
}

impl<T: Real> ChainGeometry<T> {
    pub fn new(n_sites: usize, r1: T, r2: T) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::InvalidParams(format!("chain needs at least 2 atoms (got {n_sites})")));
        }
        if !(r1 > T::zero() && r2 > r1) {
            return Err(Error::InvalidParams(format!("need 0 < r1 < r2 (got r1 = {r1}, r2 = {r2})")));
        }
        Ok(Self { n_sites, r1, r2, displacements: vec![[T::zero(); 3]; n_sites] })
    }

    /// Geometry with `r1 = 1` and `r2` chosen so that `C₆/r2⁶ = v2` when
    /// `C₆ = v1 r1⁶`.
    pub fn matched(n_sites: usize, v1: T, v2: T) -> Result<Self> {
        if v2 == T::zero() {
            return Err(Error::ZeroCoupling);
        }
        let ratio = Float::abs(v1 / v2);
        Self::new(n_sites, T::one(), Float::powf(ratio, T::one() / T::lit(6.0)))
    }

    pub fn with_displacements(mut self, displacements: Vec<Vec3<T>>) -> Result<Self> {
        if displacements.len() != self.n_sites {
            return Err(Error::DimensionMismatch { expected: self.n_sites, got: displacements.len() });
        }
        self.displacements = displacements;
        let pos = self.positions();
        if pos.windows(2).any(|w| !(w[1][0] > w[0][0])) {
            return Err(Error::InvalidParams("displaced atoms cross along the chain axis".into()));
        }
        Ok(self)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn r1(&self) -> T {
        self.r1
    }

    pub fn r2(&self) -> T {
        self.r2
    }

    pub fn displacements(&self) -> &[Vec3<T>] {
        &self.displacements
    }

    pub fn is_clean(&self) -> bool {
        self.displacements.iter().all(|d| d.iter().all(|x| *x == T::zero()))
    }

    /// Ideal gap to the right of `site` (1-based): `r1` for odd sites.
    pub fn gap(&self, site: usize) -> T {
        if site % 2 == 1 {
            self.r1
        } else {
            self.r2
        }
    }

    /// Pulse type (1 or 2) resonant with a hop across the gap right of `site`.
    pub fn gap_kind(site: usize) -> u8 {
        if site % 2 == 1 {
            1
        } else {
            2
        }
    }

    pub fn ideal_positions(&self) -> Vec<Vec3<T>> {
        let mut x = T::zero();
        let mut out = Vec::with_capacity(self.n_sites);
        for site in 1..=self.n_sites {
            out.push([x, T::zero(), T::zero()]);
            x += self.gap(site);
        }
        out
    }

    pub fn positions(&self) -> Vec<Vec3<T>> {
        self.ideal_positions()
            .into_iter()
            .zip(&self.displacements)
            .map(|(p, d)| [p[0] + d[0], p[1] + d[1], p[2] + d[2]])
            .collect()
    }

    /// Smallest separation between any NN or NNN pair of displaced atoms.
    pub fn min_separation(&self) -> T {
        let pos = self.positions();
        let mut best = T::infinity();
        for i in 0..self.n_sites {
            for j in (i + 1)..(i + 3).min(self.n_sites) {
                best = Float::min(best, norm3(sub3(pos[j], pos[i])));
            }
        }
        best
    }
}

/// Nearest- and next-nearest-neighbor couplings of a chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingTable<T: Real> {
    /// `nn[j]` couples sites `j+1` and `j+2` (1-based).
    pub nn: Vec<T>,
    /// `nnn[j]` couples sites `j+1` and `j+3`.
    pub nnn: Vec<T>,
}

/// Van der Waals interaction `C₆ / |r|⁶`.
pub fn interaction_strength<T: Real>(displacement: Vec3<T>, c6: T) -> Result<T> {
    let r = norm3(displacement);
    if r == T::zero() {
        return Err(Error::ZeroDistance);
    }
    Ok(c6 / Float::powi(r, 6))
}

/// NNN coupling at the ideal distance `r1 + r2`.
pub fn ideal_nnn<T: Real>(r1: T, r2: T, c6: T) -> T {
    c6 / Float::powi(r1 + r2, 6)
}

/// Couplings of the undisplaced chain, taking the NN values from `v1, v2`.
pub fn ideal_couplings<T: Real>(n: usize, v1: T, v2: T, nnn: T) -> CouplingTable<T> {
    CouplingTable {
        nn: (1..n).map(|site| if site % 2 == 1 { v1 } else { v2 }).collect(),
        nnn: vec![nnn; n.saturating_sub(2)],
    }
}

/// Couplings recomputed from the displaced 3D positions.
pub fn disordered_couplings<T: Real>(geometry: &ChainGeometry<T>, c6: T) -> Result<CouplingTable<T>> {
    let pos = geometry.positions();
    let n = geometry.n_sites();
    let pair = |i: usize, j: usize| interaction_strength(sub3(pos[j], pos[i]), c6);
    Ok(CouplingTable {
        nn: (0..n - 1).map(|i| pair(i, i + 1)).collect::<Result<_>>()?,
        nnn: (0..n.saturating_sub(2)).map(|i| pair(i, i + 2)).collect::<Result<_>>()?,
    })
}

#[inline]
pub(crate) fn sub3<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn norm3<T: Real>(v: Vec3<T>) -> T {
    Float::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
}
