//! Evaluation grids: equiangular colatitude × longitude lattices (optionally restricted to a
//! colatitude band, e.g. a polar cap) and explicit point lists.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geom::{Cap, SpherePoint};

/// Equiangular grid: `n_theta` rows at the midpoints of equal colatitude slices of
/// `[theta_lo, theta_hi]`, `n_phi` uniformly spaced longitudes starting at 0.
///
/// Each point carries the exact area of its lat-lon cell, so the weights of a full-sphere
/// grid sum to 4π up to rounding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquiangularGrid {
    n_theta: usize,
    n_phi: usize,
    theta_lo: f64,
    theta_hi: f64,
}

impl EquiangularGrid {
    /// Full-sphere grid.
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        Self::band(n_theta, n_phi, 0.0, PI)
    }

    /// Grid restricted to colatitudes in `[theta_lo, theta_hi]`.
    pub fn band(n_theta: usize, n_phi: usize, theta_lo: f64, theta_hi: f64) -> Result<Self> {
        if n_theta == 0 || n_phi < 3 {
            return Err(invalid("grid", format!("need n_theta ≥ 1 and n_phi ≥ 3, got {n_theta}×{n_phi}")));
        }
        if !(0.0 <= theta_lo && theta_lo < theta_hi && theta_hi <= PI) {
            return Err(invalid("grid", format!("bad colatitude band [{theta_lo}, {theta_hi}]")));
        }
        Ok(EquiangularGrid {
            n_theta,
            n_phi,
            theta_lo,
            theta_hi,
        })
    }

    /// Polar cap grid around the north pole covering colatitudes `[0, radius]`.
    pub fn polar_cap(radius: f64, n_theta: usize, n_phi: usize) -> Result<Self> {
        Self::band(n_theta, n_phi, 0.0, radius.min(PI))
    }

    /// Smallest full-sphere grid that synthesizes degree `l_max` without aliasing, with
    /// `oversample` times that resolution in each direction.
    pub fn for_degree(l_max: usize, oversample: usize) -> Self {
        let n_phi = (2 * l_max + 2) * oversample.max(1);
        let n_theta = (l_max + 1) * oversample.max(1);
        EquiangularGrid {
            n_theta,
            n_phi,
            theta_lo: 0.0,
            theta_hi: PI,
        }
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn theta_range(&self) -> (f64, f64) {
        (self.theta_lo, self.theta_hi)
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_full_sphere(&self) -> bool {
        self.theta_lo == 0.0 && self.theta_hi == PI
    }

    pub fn d_theta(&self) -> f64 {
        (self.theta_hi - self.theta_lo) / self.n_theta as f64
    }

    pub fn d_phi(&self) -> f64 {
        TAU / self.n_phi as f64
    }

    /// Largest geodesic distance between neighbouring grid points.
    pub fn spacing(&self) -> f64 {
        let max_sin = if self.theta_lo <= PI / 2.0 && self.theta_hi >= PI / 2.0 {
            1.0
        } else {
            self.theta_lo.sin().max(self.theta_hi.sin())
        };
        self.d_theta().max(self.d_phi() * max_sin)
    }

    #[inline]
    pub fn theta(&self, row: usize) -> f64 {
        self.theta_lo + (row as f64 + 0.5) * self.d_theta()
    }

    #[inline]
    pub fn phi(&self, col: usize) -> f64 {
        col as f64 * self.d_phi()
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.n_phi + col
    }

    #[inline]
    pub fn row_col(&self, index: usize) -> (usize, usize) {
        (index / self.n_phi, index % self.n_phi)
    }

    pub fn point(&self, index: usize) -> SpherePoint {
        let (r, c) = self.row_col(index);
        SpherePoint::from_angles_unchecked(self.theta(r), self.phi(c))
    }

    /// Area of the lat-lon cell of any point in `row`.
    pub fn row_weight(&self, row: usize) -> f64 {
        let a = self.theta_lo + row as f64 * self.d_theta();
        let b = a + self.d_theta();
        // cos a − cos b = 2 sin((a+b)/2) sin((b−a)/2)
        2.0 * (0.5 * (a + b)).sin() * (0.5 * (b - a)).sin() * self.d_phi()
    }

    /// Indices of grid points strictly inside `cap`, in grid order.
    pub fn indices_in_cap(&self, cap: &Cap) -> Vec<usize> {
        if cap.radius >= PI {
            return (0..self.len()).collect();
        }
        let c = cap.center.vector();
        let cos_r = cap.radius.cos();
        let t0 = cap.center.colatitude() - cap.radius;
        let t1 = cap.center.colatitude() + cap.radius;
        let mut out = Vec::new();
        for row in 0..self.n_theta {
            let th = self.theta(row);
            if th < t0 - 1e-12 || th > t1 + 1e-12 {
                continue;
            }
            let (st, ct) = th.sin_cos();
            for col in 0..self.n_phi {
                let (sp, cp) = self.phi(col).sin_cos();
                let d = c[0] * st * cp + c[1] * st * sp + c[2] * ct;
                if d > cos_r {
                    let p = self.point(self.index(row, col));
                    if cap.contains(&p) {
                        out.push(self.index(row, col));
                    }
                }
            }
        }
        out
    }

    /// Undirected edges between horizontally (wrapping) and vertically adjacent points.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let np = self.n_phi;
        let nt = self.n_theta;
        (0..nt).flat_map(move |r| {
            (0..np).flat_map(move |c| {
                let here = r * np + c;
                let east = Some((here, r * np + (c + 1) % np));
                let south = if r + 1 < nt {
                    Some((here, (r + 1) * np + c))
                } else {
                    None
                };
                east.into_iter().chain(south)
            })
        })
    }
}

/// Where a field is evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Grid {
    Equiangular(EquiangularGrid),
    Points(Vec<SpherePoint>),
}

impl Grid {
    pub fn len(&self) -> usize {
        match self {
            Grid::Equiangular(g) => g.len(),
            Grid::Points(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, index: usize) -> SpherePoint {
        match self {
            Grid::Equiangular(g) => g.point(index),
            Grid::Points(p) => p[index],
        }
    }

    /// Quadrature weight of a point; point lists carry none.
    pub fn weight(&self, index: usize) -> Option<f64> {
        match self {
            Grid::Equiangular(g) => Some(g.row_weight(index / g.n_phi)),
            Grid::Points(_) => None,
        }
    }

    pub fn equiangular(&self) -> Result<&EquiangularGrid> {
        match self {
            Grid::Equiangular(g) => Ok(g),
            Grid::Points(_) => Err(invalid("grid", "operation needs an equiangular grid")),
        }
    }

    pub fn indices_in_cap(&self, cap: &Cap) -> Vec<usize> {
        match self {
            Grid::Equiangular(g) => g.indices_in_cap(cap),
            Grid::Points(p) => p
                .iter()
                .enumerate()
                .filter(|(_, q)| cap.contains(q))
                .map(|(i, _)| i)
                .collect(),
        }
    }

    /// Typical distance between neighbouring points (equiangular grids only).
    pub fn spacing(&self) -> Result<f64> {
        Ok(self.equiangular()?.spacing())
    }

    pub(crate) fn require_weights(&self) -> Result<&EquiangularGrid> {
        self.equiangular()
            .map_err(|_| Error::EmptyRegion("point-list grids carry no quadrature weights".into()))
    }
}
