//! Level sets at grid resolution, box-counting dimension over the Voronoi hierarchy and
//! the `φ`-premeasure of the occupied cells.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::geom::{Cap, SpherePoint};
use crate::grid::{EquiangularGrid, Grid};
use crate::local_time::{w, GaugeFunction};
use crate::stats::{linear_fit, LinearFit};
use crate::synthesis::{FieldProvenance, FieldSample};
use crate::voronoi::{separation, VoronoiHierarchy};

/// Grid points with `|T(x) − t|_∞ ≤ ε`, plus for scalar fields the midpoints of grid edges
/// across which `T − t` changes sign.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSetEstimate {
    pub level: Vec<f64>,
    pub eps: f64,
    pub points: Vec<usize>,
    pub crossings: Vec<SpherePoint>,
    pub provenance: FieldProvenance,
    #[serde(skip)]
    grid: Grid,
}

impl LevelSetEstimate {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.crossings.is_empty()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Sorted indices of the level-`k` cells holding at least one member.
    pub fn occupied_cells(&self, h: &VoronoiHierarchy, k: usize) -> Result<Vec<usize>> {
        Ok(self.occupancy(h)?[k - 1].clone())
    }

    /// Occupied cells at every level `1..=k_max`.
    fn occupancy(&self, h: &VoronoiHierarchy) -> Result<Vec<Vec<usize>>> {
        let g = self.grid.equiangular()?;
        if g != h.grid() {
            return Err(invalid("hierarchy", "hierarchy was built on a different grid"));
        }
        let k_max = h.k_max();
        let finest = h.level(k_max)?;
        let mut cells: Vec<usize> = self.points.iter().map(|&i| finest.assignment()[i] as usize).collect();
        let located: Vec<usize> = self
            .crossings
            .par_iter()
            .map(|p| h.locate(p, k_max))
            .collect::<Result<_>>()?;
        cells.extend(located);
        cells.sort_unstable();
        cells.dedup();
        let mut out = vec![Vec::new(); k_max];
        out[k_max - 1] = cells;
        for k in (1..k_max).rev() {
            let parents = h.level(k + 1)?.parents();
            let mut up: Vec<usize> = out[k].iter().map(|&c| parents[c]).collect();
            up.sort_unstable();
            up.dedup();
            out[k - 1] = up;
        }
        Ok(out)
    }

    /// CSV point list: `kind,colatitude,longitude` with `kind` either `grid` or `crossing`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["kind", "colatitude", "longitude"])?;
        for &i in &self.points {
            let p = self.grid.point(i);
            w.write_record(["grid", &p.colatitude().to_string(), &p.longitude().to_string()])?;
        }
        for p in &self.crossings {
            w.write_record(["crossing", &p.colatitude().to_string(), &p.longitude().to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn member(f: &FieldSample, i: usize, t: &[f64], eps: f64) -> bool {
    (0..f.d()).all(|c| (f.value(c, i) - t[c]).abs() <= eps)
}

fn midpoint(a: &SpherePoint, b: &SpherePoint) -> SpherePoint {
    let (u, v) = (a.vector(), b.vector());
    SpherePoint::from_vector([u[0] + v[0], u[1] + v[1], u[2] + v[2]]).unwrap_or(*a)
}

fn sign_change_edges(g: &EquiangularGrid, values: &[f64], t: f64) -> Vec<(usize, usize)> {
    let np = g.n_phi();
    (0..g.n_theta())
        .into_par_iter()
        .flat_map_iter(|r| {
            let mut row = Vec::new();
            for c in 0..np {
                let here = r * np + c;
                let mut check = |j: usize| {
                    if (values[here] - t) * (values[j] - t) < 0.0 {
                        row.push((here, j));
                    }
                };
                check(r * np + (c + 1) % np);
                if r + 1 < g.n_theta() {
                    check((r + 1) * np + c);
                }
            }
            row
        })
        .collect()
}

pub fn extract_level_set(f: &FieldSample, t: &[f64], eps: f64) -> Result<LevelSetEstimate> {
    if !(eps > 0.0) {
        return Err(invalid("eps", "tolerance must be positive"));
    }
    if t.len() != f.d() {
        return Err(invalid("t", format!("level has dimension {}, field {}", t.len(), f.d())));
    }
    let points: Vec<usize> = (0..f.len()).into_par_iter().filter(|&i| member(f, i, t, eps)).collect();
    let crossings = match (f.d(), f.grid()) {
        (1, Grid::Equiangular(g)) => sign_change_edges(g, f.component(0), t[0])
            .into_iter()
            .map(|(a, b)| midpoint(&g.point(a), &g.point(b)))
            .collect(),
        _ => Vec::new(),
    };
    Ok(LevelSetEstimate {
        level: t.to_vec(),
        eps,
        points,
        crossings,
        provenance: f.provenance(),
        grid: f.grid().clone(),
    })
}

/// Resolution-matched tolerance `2 K_osc w(h)`.
pub fn default_tolerance(alpha: f64, h: f64, k_osc: f64) -> Result<f64> {
    Ok(2.0 * k_osc * w(h, alpha)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionFit {
    pub slope: f64,
    pub stderr: f64,
    /// 95% band `slope ± 1.96 stderr`.
    pub band: (f64, f64),
    /// Occupied cell count at every level `1..=k_max`.
    pub counts: Vec<usize>,
    pub total_cells: Vec<usize>,
    /// Levels entering the fit.
    pub levels: Vec<usize>,
    pub residuals: Vec<f64>,
}

/// Least-squares slope of `log N_k` against `−log r_k` over `levels`, where `r_k = √(A / M_k)`
/// is the effective scale of the `M_k` level-`k` cells covering grid area `A`. With
/// `window = Some((lo, frac))` only levels whose count lies in `[lo, frac × M_k]` enter the fit.
pub fn box_dimension(
    ls: &LevelSetEstimate,
    h: &VoronoiHierarchy,
    levels: std::ops::RangeInclusive<usize>,
    window: Option<(f64, f64)>,
) -> Result<DimensionFit> {
    if ls.is_empty() {
        return Err(Error::EmptySet("level set has no members".into()));
    }
    if *levels.start() == 0 || *levels.end() > h.k_max() {
        return Err(invalid("levels", format!("range must lie in 1..={}", h.k_max())));
    }
    let occ = ls.occupancy(h)?;
    let counts: Vec<usize> = occ.iter().map(Vec::len).collect();
    let total_cells: Vec<usize> = (1..=h.k_max()).map(|k| h.level(k).map(|l| l.len())).collect::<Result<_>>()?;
    let used: Vec<usize> = levels
        .filter(|&k| match window {
            Some((lo, frac)) => {
                let n = counts[k - 1] as f64;
                n >= lo && n <= frac * total_cells[k - 1] as f64
            }
            None => true,
        })
        .collect();
    if used.len() < 3 {
        return Err(Error::TooFewLevels(format!("{} level(s) usable, need 3", used.len())));
    }
    let area = grid_area(h.grid());
    let x: Vec<f64> = used
        .iter()
        .map(|&k| 0.5 * (total_cells[k - 1] as f64 / area).ln())
        .collect();
    let y: Vec<f64> = used.iter().map(|&k| (counts[k - 1] as f64).ln()).collect();
    let LinearFit {
        slope,
        stderr,
        residuals,
        ..
    } = linear_fit(&x, &y)?;
    Ok(DimensionFit {
        slope,
        stderr,
        band: (slope - 1.96 * stderr, slope + 1.96 * stderr),
        counts,
        total_cells,
        levels: used,
        residuals,
    })
}

fn grid_area(g: &EquiangularGrid) -> f64 {
    (0..g.n_theta()).map(|r| g.row_weight(r)).sum::<f64>() * g.n_phi() as f64
}

/// `Σ φ(2^{1−k})` over the occupied level-`k` cells.
pub fn phi_premeasure(ls: &LevelSetEstimate, h: &VoronoiHierarchy, k: usize, g: &GaugeFunction) -> Result<f64> {
    if k == 0 || k > h.k_max() {
        return Err(invalid("level", format!("{k} outside 1..={}", h.k_max())));
    }
    if ls.is_empty() {
        return Ok(0.0);
    }
    let n = ls.occupied_cells(h, k)?.len();
    Ok(n as f64 * g.phi(2.0 * separation(k))?)
}

/// Whether the level set restricted to `cap` is nonempty at tolerance `eps`.
pub fn hitting_indicator(f: &FieldSample, t: &[f64], cap: &Cap, eps: f64) -> Result<bool> {
    if !(eps > 0.0) {
        return Err(invalid("eps", "tolerance must be positive"));
    }
    if t.len() != f.d() {
        return Err(invalid("t", format!("level has dimension {}, field {}", t.len(), f.d())));
    }
    let idx = f.grid().indices_in_cap(cap);
    if idx.iter().any(|&i| member(f, i, t, eps)) {
        return Ok(true);
    }
    if let (1, Grid::Equiangular(g)) = (f.d(), f.grid()) {
        let v = f.component(0);
        let inside = |i: usize| cap.contains(&g.point(i));
        for &i in &idx {
            let (r, c) = g.row_col(i);
            let mut nbrs = vec![g.index(r, (c + 1) % g.n_phi())];
            if r + 1 < g.n_theta() {
                nbrs.push(g.index(r + 1, c));
            }
            for j in nbrs {
                if (v[i] - t[0]) * (v[j] - t[0]) < 0.0 && (inside(j) || cap.contains(&midpoint(&g.point(i), &g.point(j)))) {
                    return Ok(true);
                }
            }
        }
    }
    Ok(false)
}

/// Writes a dimension fit as JSON.
pub fn write_dimension_json(fit: &DimensionFit, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(serde_json::to_string_pretty(fit)?.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::power_law_spectrum;
    use crate::synthesis::vector_field;
    use std::f64::consts::FRAC_PI_2;

    fn grid() -> EquiangularGrid {
        EquiangularGrid::new(256, 512).unwrap()
    }

    fn field(d: usize, seed: u64) -> FieldSample {
        let s = power_law_spectrum(2.5, 64).unwrap();
        vector_field(&s, d, (0, 64), &Grid::Equiangular(grid()), seed).unwrap()
    }

    #[test]
    fn constant_field_levels() {
        let g = Grid::Equiangular(EquiangularGrid::new(8, 16).unwrap());
        let f = FieldSample::constant(g, 2, 1.5).unwrap();
        assert_eq!(extract_level_set(&f, &[1.5, 1.5], 1e-9).unwrap().points.len(), 128);
        assert!(extract_level_set(&f, &[1.5, 1.0], 0.1).unwrap().is_empty());
    }

    #[test]
    fn crossings_straddle_the_level() {
        let f = field(1, 3);
        let g = f.grid().equiangular().unwrap().clone();
        let edges = sign_change_edges(&g, f.component(0), 0.2);
        assert!(!edges.is_empty());
        for (a, b) in edges {
            let (x, y) = (f.value(0, a) - 0.2, f.value(0, b) - 0.2);
            assert!(x * y < 0.0);
        }
    }

    #[test]
    fn tolerance_nests() {
        let f = field(2, 4);
        let small = extract_level_set(&f, &[0.0, 0.0], 0.05).unwrap();
        let big = extract_level_set(&f, &[0.0, 0.0], 0.2).unwrap();
        assert!(small.points.iter().all(|i| big.points.binary_search(i).is_ok()));
    }

    #[test]
    fn whole_sphere_has_dimension_two() {
        let g = grid();
        let h = VoronoiHierarchy::build(5, &g).unwrap();
        let f = FieldSample::constant(Grid::Equiangular(g), 1, 0.0).unwrap();
        let ls = extract_level_set(&f, &[0.0], 1.0).unwrap();
        let fit = box_dimension(&ls, &h, 2..=5, None).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12, "{fit:?}");
        assert!(fit.counts.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn great_circle_has_dimension_one() {
        let g = grid();
        let h = VoronoiHierarchy::build(5, &g).unwrap();
        let n = g.len();
        let values: Vec<f64> = (0..n).map(|i| g.point(i).colatitude() - FRAC_PI_2).collect();
        let prov = FieldProvenance {
            spectrum_hash: 0,
            band: (0, 0),
            seed: 0,
        };
        let f = FieldSample::from_values(Grid::Equiangular(g), 1, values, prov).unwrap();
        let ls = extract_level_set(&f, &[0.0], 1e-9).unwrap();
        assert!(ls.points.is_empty() && !ls.crossings.is_empty());
        let fit = box_dimension(&ls, &h, 2..=5, None).unwrap();
        assert!((fit.slope - 1.0).abs() < 0.1, "{fit:?}");
    }

    #[test]
    fn box_dimension_errors() {
        let g = grid();
        let h = VoronoiHierarchy::build(4, &g).unwrap();
        let f = field(1, 5);
        let empty = extract_level_set(&f, &[100.0], 0.1).unwrap();
        assert!(matches!(box_dimension(&empty, &h, 1..=4, None), Err(Error::EmptySet(_))));
        let ls = extract_level_set(&f, &[0.0], 0.01).unwrap();
        assert!(matches!(box_dimension(&ls, &h, 3..=4, None), Err(Error::TooFewLevels(_))));
    }

    #[test]
    fn premeasure_basics() {
        let g = grid();
        let h = VoronoiHierarchy::build(5, &g).unwrap();
        let gauge = GaugeFunction::new(2.5, 1).unwrap();
        let f = field(1, 6);
        let empty = extract_level_set(&f, &[100.0], 0.1).unwrap();
        assert_eq!(phi_premeasure(&empty, &h, 4, &gauge).unwrap(), 0.0);
        let ls = extract_level_set(&f, &[0.0], 0.01).unwrap();
        let p4 = phi_premeasure(&ls, &h, 4, &gauge).unwrap();
        let p5 = phi_premeasure(&ls, &h, 5, &gauge).unwrap();
        // Each cell has a bounded number of children, so the premeasure cannot jump by more
        // than that count times the gauge ratio.
        let max_children = 12.0;
        let ratio = gauge.phi(separation(4)).unwrap() / gauge.phi(separation(3)).unwrap();
        assert!(p5 <= max_children * ratio * p4);
        assert!(phi_premeasure(&ls, &h, 1, &gauge).is_err());
    }

    #[test]
    fn hitting_basics() {
        let f = field(1, 7);
        let sphere = Cap::sphere();
        assert!(!hitting_indicator(&f, &[50.0], &sphere, 0.1).unwrap());
        let t = f.value(0, 1234);
        assert!(hitting_indicator(&f, &[t], &sphere, 1e-12).unwrap());
        let cap = Cap::new(SpherePoint::new(1.0, 1.0).unwrap(), 0.3).unwrap();
        let a = hitting_indicator(&f, &[1.0], &cap, 0.01).unwrap();
        let b = hitting_indicator(&f, &[1.0], &cap, 0.5).unwrap();
        assert!(!a || b);
    }
}
