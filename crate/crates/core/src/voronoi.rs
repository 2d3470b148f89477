//! Nested Voronoi partition of the sphere at grid resolution.
//!
//! Level 1 has the two poles as centers. Each level-`k` cell is split by greedy
//! farthest-point packing of its grid points at separation `2^{-k}`; every grid point of the
//! cell then goes to its nearest new center, ties to the lower index.

use std::f64::consts::FRAC_PI_2;
use std::ops::Range;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::geom::{dot, SpherePoint};
use crate::grid::EquiangularGrid;

#[derive(Debug, Clone)]
pub struct VoronoiLevel {
    centers: Vec<SpherePoint>,
    parents: Vec<usize>,
    children: Vec<Range<usize>>,
    assignment: Vec<u32>,
}

impl VoronoiLevel {
    pub fn centers(&self) -> &[SpherePoint] {
        &self.centers
    }

    /// Parent index (into the previous level) per center; empty for level 1.
    pub fn parents(&self) -> &[usize] {
        &self.parents
    }

    /// Cell index of every grid point.
    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct VoronoiHierarchy {
    grid: EquiangularGrid,
    levels: Vec<VoronoiLevel>,
}

impl VoronoiHierarchy {
    /// Builds levels `1..=k_max` over the points of `grid`.
    ///
    /// Fails when the grid spacing exceeds half the finest separation `2^{-k_max}`, since the
    /// packing could then not resolve the finest cells.
    pub fn build(k_max: usize, grid: &EquiangularGrid) -> Result<Self> {
        if k_max == 0 {
            return Err(invalid("k_max", "must be at least 1"));
        }
        if k_max > 30 {
            return Err(invalid("k_max", format!("{k_max} exceeds 30")));
        }
        let finest = separation(k_max);
        if grid.spacing() > 0.5 * finest {
            return Err(Error::GridTooCoarse(format!(
                "grid spacing {:.3e} exceeds half the level-{k_max} separation {:.3e}",
                grid.spacing(),
                finest
            )));
        }
        let vectors: Vec<[f64; 3]> = (0..grid.len()).map(|i| grid.point(i).vector()).collect();

        let level1 = {
            let centers = vec![SpherePoint::north_pole(), SpherePoint::south_pole()];
            let assignment = (0..grid.len())
                .map(|i| {
                    let (r, _) = grid.row_col(i);
                    u32::from(grid.theta(r) > FRAC_PI_2)
                })
                .collect();
            VoronoiLevel {
                centers,
                parents: Vec::new(),
                children: Vec::new(),
                assignment,
            }
        };
        let mut levels = vec![level1];

        for k in 2..=k_max {
            let prev = levels.last_mut().expect("level 1 exists");
            let sep = separation(k);
            let cos_sep = sep.cos();
            let mut members: Vec<Vec<usize>> = vec![Vec::new(); prev.len()];
            for (i, &c) in prev.assignment.iter().enumerate() {
                members[c as usize].push(i);
            }
            let mut centers = Vec::new();
            let mut parents = Vec::new();
            let mut children = Vec::with_capacity(prev.len());
            let mut assignment = vec![u32::MAX; grid.len()];
            let mut best_dot: Vec<f64> = Vec::new();
            let mut best_idx: Vec<u32> = Vec::new();

            for (p, pts) in members.iter().enumerate() {
                let start = centers.len();
                if pts.is_empty() {
                    children.push(start..start);
                    continue;
                }
                let pc = prev.centers[p].vector();
                let first = pts
                    .iter()
                    .copied()
                    .max_by(|&a, &b| {
                        dot(&vectors[a], &pc)
                            .partial_cmp(&dot(&vectors[b], &pc))
                            .expect("finite")
                            .then(b.cmp(&a))
                    })
                    .expect("nonempty");

                best_dot.clear();
                best_idx.clear();
                best_dot.resize(pts.len(), f64::NEG_INFINITY);
                best_idx.resize(pts.len(), u32::MAX);
                let mut next = Some(first);
                while let Some(g) = next {
                    let ci = centers.len() as u32;
                    let cv = vectors[g];
                    centers.push(grid.point(g));
                    parents.push(p);
                    let mut far_j = usize::MAX;
                    let mut far_dot = f64::INFINITY;
                    for (j, &i) in pts.iter().enumerate() {
                        let d = dot(&vectors[i], &cv);
                        if d > best_dot[j] {
                            best_dot[j] = d;
                            best_idx[j] = ci;
                        }
                        if best_dot[j] < far_dot {
                            far_dot = best_dot[j];
                            far_j = j;
                        }
                    }
                    // Farthest point still at least `sep` from every chosen center?
                    next = if far_dot <= cos_sep && geodesic_from_dot(far_dot) >= sep {
                        Some(pts[far_j])
                    } else {
                        None
                    };
                }
                for (j, &i) in pts.iter().enumerate() {
                    assignment[i] = best_idx[j];
                }
                children.push(start..centers.len());
            }
            prev.children = children;
            levels.push(VoronoiLevel {
                centers,
                parents,
                children: Vec::new(),
                assignment,
            });
        }
        Ok(VoronoiHierarchy {
            grid: grid.clone(),
            levels,
        })
    }

    pub fn k_max(&self) -> usize {
        self.levels.len()
    }

    pub fn grid(&self) -> &EquiangularGrid {
        &self.grid
    }

    /// Level `k`, counted from 1.
    pub fn level(&self, k: usize) -> Result<&VoronoiLevel> {
        if k == 0 || k > self.levels.len() {
            return Err(invalid("level", format!("{k} outside 1..={}", self.levels.len())));
        }
        Ok(&self.levels[k - 1])
    }

    /// Cell of an arbitrary point at level `k`, by descent through nearest children.
    pub fn locate(&self, p: &SpherePoint, k: usize) -> Result<usize> {
        self.level(k)?;
        let v = p.vector();
        let mut cell = usize::from(p.colatitude() > FRAC_PI_2);
        for lvl in 0..k - 1 {
            let range = self.levels[lvl].children[cell].clone();
            if range.is_empty() {
                return Err(Error::EmptyRegion(format!(
                    "cell {cell} at level {} has no grid points",
                    lvl + 1
                )));
            }
            let next = &self.levels[lvl + 1].centers;
            let mut best = range.start;
            let mut best_dot = f64::NEG_INFINITY;
            for c in range {
                let d = dot(&next[c].vector(), &v);
                if d > best_dot {
                    best_dot = d;
                    best = c;
                }
            }
            cell = best;
        }
        Ok(cell)
    }

    /// JSON description: per level, center coordinates and parent indices.
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct LevelOut<'a> {
            level: usize,
            separation: f64,
            centers: &'a [SpherePoint],
            parents: &'a [usize],
        }
        let out: Vec<LevelOut> = self
            .levels
            .iter()
            .enumerate()
            .map(|(i, l)| LevelOut {
                level: i + 1,
                separation: separation(i + 1),
                centers: &l.centers,
                parents: &l.parents,
            })
            .collect();
        Ok(serde_json::to_string_pretty(&out)?)
    }
}

/// Minimum sibling-center separation `2^{-k}` at level `k`.
pub fn separation(k: usize) -> f64 {
    (-(k as f64)).exp2()
}

fn geodesic_from_dot(d: f64) -> f64 {
    d.clamp(-1.0, 1.0).acos()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> VoronoiHierarchy {
        let g = EquiangularGrid::new(128, 256).unwrap();
        VoronoiHierarchy::build(4, &g).unwrap()
    }

    #[test]
    fn level_one_is_the_poles() {
        let g = EquiangularGrid::new(16, 32).unwrap();
        let h = VoronoiHierarchy::build(1, &g).unwrap();
        let l = h.level(1).unwrap();
        assert_eq!(l.len(), 2);
        assert_eq!(l.centers()[0].colatitude(), 0.0);
        assert_eq!(l.centers()[1].colatitude(), std::f64::consts::PI);
    }

    #[test]
    fn siblings_are_separated_and_not_too_far() {
        let h = small();
        let slack = 2.0 * h.grid().spacing();
        for k in 2..=h.k_max() {
            let lvl = h.level(k).unwrap();
            let parent = h.level(k - 1).unwrap();
            for range in &parent.children {
                let c = &lvl.centers()[range.clone()];
                for i in 0..c.len() {
                    let mut nearest = f64::INFINITY;
                    for j in 0..c.len() {
                        if i != j {
                            let dist = c[i].distance(&c[j]);
                            assert!(dist >= separation(k) - 1e-12, "level {k}: {dist}");
                            nearest = nearest.min(dist);
                        }
                    }
                    if c.len() > 1 {
                        assert!(nearest <= 2.0 * separation(k) + slack, "level {k}: {nearest}");
                    }
                }
            }
        }
    }

    #[test]
    fn cells_partition_and_nest() {
        let h = small();
        for k in 2..=h.k_max() {
            let lvl = h.level(k).unwrap();
            let up = h.level(k - 1).unwrap();
            for (i, &c) in lvl.assignment().iter().enumerate() {
                assert!((c as usize) < lvl.len());
                assert_eq!(lvl.parents()[c as usize], up.assignment()[i] as usize);
            }
        }
    }

    #[test]
    fn points_go_to_nearest_sibling() {
        let h = small();
        let g = h.grid();
        let k = 3;
        let lvl = h.level(k).unwrap();
        let up = h.level(k - 1).unwrap();
        for i in (0..g.len()).step_by(7) {
            let p = g.point(i);
            let c = lvl.assignment()[i] as usize;
            let range = up.children[lvl.parents()[c]].clone();
            let own = p.distance(&lvl.centers()[c]);
            for s in range {
                assert!(own <= p.distance(&lvl.centers()[s]) + 1e-12);
            }
        }
    }

    #[test]
    fn locate_matches_assignment_on_grid_points() {
        let h = small();
        let g = h.grid();
        let k = h.k_max();
        let lvl = h.level(k).unwrap();
        for i in (0..g.len()).step_by(13) {
            assert_eq!(h.locate(&g.point(i), k).unwrap(), lvl.assignment()[i] as usize);
        }
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let g = EquiangularGrid::new(16, 32).unwrap();
        assert!(matches!(VoronoiHierarchy::build(5, &g), Err(Error::GridTooCoarse(_))));
    }

    #[test]
    fn json_export_lists_levels() {
        let h = small();
        let v: serde_json::Value = serde_json::from_str(&h.to_json().unwrap()).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 4);
        assert_eq!(v[0]["centers"].as_array().unwrap().len(), 2);
    }
}
