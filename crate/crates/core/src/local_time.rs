//! Occupation measures, counting-estimator local times and the gauge functions `φ`, `w`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::geom::{Cap, SpherePoint};
use crate::grid::{EquiangularGrid, Grid};
use crate::rng::derive_seed;
use crate::spectrum::PowerSpectrum;
use crate::synthesis::{band_split, FieldSample};

/// Part of the sphere over which a field is observed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Region {
    /// Every point of the sample's grid.
    Sphere,
    Cap(Cap),
}

impl Region {
    pub fn indices(&self, grid: &Grid) -> Vec<usize> {
        match self {
            Region::Sphere => (0..grid.len()).collect(),
            Region::Cap(c) => grid.indices_in_cap(c),
        }
    }
}

/// Half-open box `[lo_j, hi_j)` in `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl LevelBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(invalid("box", "lower and upper corners need the same positive dimension"));
        }
        Ok(LevelBox { lo, hi })
    }

    /// Sup-norm ball `[t − ε, t + ε)`.
    pub fn around(t: &[f64], eps: f64) -> Self {
        LevelBox {
            lo: t.iter().map(|v| v - eps).collect(),
            hi: t.iter().map(|v| v + eps).collect(),
        }
    }

    /// The whole of `R^d`.
    pub fn everything(d: usize) -> Self {
        LevelBox {
            lo: vec![f64::NEG_INFINITY; d],
            hi: vec![f64::INFINITY; d],
        }
    }
}

fn weighted_indices(f: &FieldSample, region: &Region) -> Result<(EquiangularGrid, Vec<usize>)> {
    let g = f.grid().require_weights()?.clone();
    let idx = region.indices(f.grid());
    if idx.is_empty() {
        return Err(Error::EmptyRegion("region contains no grid points".into()));
    }
    Ok((g, idx))
}

/// Quadrature area of the grid points in `region`.
pub fn region_area(f: &FieldSample, region: &Region) -> Result<f64> {
    let (g, idx) = weighted_indices(f, region)?;
    Ok(idx.iter().map(|&i| g.row_weight(i / g.n_phi())).sum())
}

/// `μ_D(B)`: total weight of grid points `x ∈ D` with `T(x) ∈ B`.
pub fn occupation_measure(f: &FieldSample, region: &Region, bx: &LevelBox) -> Result<f64> {
    if bx.lo.len() != f.d() {
        return Err(invalid("box", format!("dimension {} ≠ field dimension {}", bx.lo.len(), f.d())));
    }
    let (g, idx) = weighted_indices(f, region)?;
    let np = g.n_phi();
    Ok(idx
        .iter()
        .filter(|&&i| (0..f.d()).all(|c| {
            let v = f.value(c, i);
            bx.lo[c] <= v && v < bx.hi[c]
        }))
        .map(|&i| g.row_weight(i / np))
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalTimeEstimate {
    pub level: Vec<f64>,
    pub region: Region,
    pub eps: f64,
    pub value: f64,
    pub grid_spacing: f64,
    /// Set when `eps` is below the field's oscillation scale at grid resolution.
    pub under_resolved: bool,
}

/// `(2ε)^{-d} μ_D([t − ε, t + ε)^d)`.
pub fn local_time_estimate(f: &FieldSample, t: &[f64], region: &Region, eps: f64) -> Result<LocalTimeEstimate> {
    if !(eps > 0.0) {
        return Err(invalid("eps", "bandwidth must be positive"));
    }
    if t.len() != f.d() {
        return Err(invalid("t", format!("level has dimension {}, field {}", t.len(), f.d())));
    }
    let mu = occupation_measure(f, region, &LevelBox::around(t, eps))?;
    let h = f.grid().spacing()?;
    Ok(LocalTimeEstimate {
        level: t.to_vec(),
        region: *region,
        eps,
        value: mu / (2.0 * eps).powi(f.d() as i32),
        grid_spacing: h,
        under_resolved: eps < typical_increment(f, h),
    })
}

/// Median absolute difference between longitudinal neighbours in the first component,
/// a cheap proxy for the field's oscillation over one grid step.
fn typical_increment(f: &FieldSample, _h: f64) -> f64 {
    let Ok(g) = f.grid().equiangular() else { return 0.0 };
    let c = f.component(0);
    let np = g.n_phi();
    let mut diffs: Vec<f64> = (0..g.len())
        .step_by(7)
        .map(|i| (c[i] - c[(i / np) * np + (i % np + 1) % np]).abs())
        .collect();
    if diffs.is_empty() {
        return 0.0;
    }
    let mid = diffs.len() / 2;
    *diffs.select_nth_unstable_by(mid, |a, b| a.total_cmp(b)).1 * 0.25
}

/// `∫ L(t, D) dt` by the midpoint rule on the lattice `t ∈ step·Z^d`, computed per grid
/// point by counting the lattice levels whose box contains `T(x)`.
pub fn occupation_integral(f: &FieldSample, region: &Region, eps: f64, step: f64) -> Result<f64> {
    if !(eps > 0.0 && step > 0.0) {
        return Err(invalid("eps", "bandwidth and lattice step must be positive"));
    }
    let (g, idx) = weighted_indices(f, region)?;
    let np = g.n_phi();
    let scale = (step / (2.0 * eps)).powi(f.d() as i32);
    let mut total = 0.0;
    for &i in &idx {
        // Lattice points t with t − ε ≤ v < t + ε, i.e. v − ε < t ≤ v + ε.
        let mut count = 1.0;
        for c in 0..f.d() {
            let v = f.value(c, i);
            let k_hi = ((v + eps) / step).floor();
            let k_lo = ((v - eps) / step).floor();
            count *= k_hi - k_lo;
        }
        total += g.row_weight(i / np) * count;
    }
    Ok(total * scale)
}

/// The gauge `φ(r) = r² / w(r)^d` with `w(r) = ρ_α(r / √(log|log r|))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaugeFunction {
    pub alpha: f64,
    pub d: usize,
}

impl GaugeFunction {
    pub fn new(alpha: f64, d: usize) -> Result<Self> {
        if !(alpha > 2.0) {
            return Err(invalid("alpha", format!("need α > 2, got {alpha}")));
        }
        if d == 0 {
            return Err(invalid("d", "need d ≥ 1"));
        }
        Ok(GaugeFunction { alpha, d })
    }

    pub fn phi(&self, r: f64) -> Result<f64> {
        phi(r, self)
    }

    pub fn w(&self, r: f64) -> Result<f64> {
        w(r, self.alpha)
    }
}

fn check_gauge_domain(r: f64) -> Result<()> {
    if !(r > 0.0 && r < (-1.0f64).exp()) {
        return Err(invalid("r", format!("{r} outside (0, 1/e)")));
    }
    Ok(())
}

pub fn w(r: f64, alpha: f64) -> Result<f64> {
    check_gauge_domain(r)?;
    if !(alpha > 2.0) {
        return Err(invalid("alpha", format!("need α > 2, got {alpha}")));
    }
    let s = r / (-r.ln()).ln().sqrt();
    Ok(s.powf(0.5 * (alpha - 2.0)))
}

pub fn phi(r: f64, g: &GaugeFunction) -> Result<f64> {
    let wr = w(r, g.alpha)?;
    Ok(r * r / wr.powi(g.d as i32))
}

/// Default counting bandwidth `4 w(h)` for grid spacing `h`.
pub fn default_bandwidth(alpha: f64, h: f64) -> Result<f64> {
    Ok(4.0 * w(h, alpha)?)
}

/// Geometric radius schedule `r_max, 0.8 r_max, …` down to `r_min`.
pub fn radius_schedule(r_max: f64, r_min: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = r_max;
    while r >= r_min {
        out.push(r);
        r *= 0.8;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityRow {
    pub radius: f64,
    pub local_time: f64,
    pub phi: f64,
    pub ratio: f64,
    pub running_max: f64,
}

/// `L(t, D(x, r)) / φ(r)` along a decreasing radius schedule, with the running maximum as
/// the finite-schedule stand-in for the upper limit.
pub fn upper_density_profile(
    f: &FieldSample,
    t: &[f64],
    x: &SpherePoint,
    radii: &[f64],
    gauge: &GaugeFunction,
    eps: f64,
) -> Result<Vec<DensityRow>> {
    let h = f.grid().spacing()?;
    let mut out = Vec::with_capacity(radii.len());
    let mut running: f64 = 0.0;
    for &r in radii {
        if r <= h {
            return Err(Error::GridTooCoarse(format!("radius {r} not above grid spacing {h}")));
        }
        let phi_r = gauge.phi(r)?;
        let lt = local_time_estimate(f, t, &Region::Cap(Cap::new(*x, r)?), eps)?.value;
        let ratio = lt / phi_r;
        running = running.max(ratio);
        out.push(DensityRow {
            radius: r,
            local_time: lt,
            phi: phi_r,
            ratio,
            running_max: running,
        });
    }
    Ok(out)
}

/// Monte Carlo second moment of `L(T(x), D) − L^{L,U}(T^{L,U}(x), D)` for `D = D(x, r)`,
/// `x` the north pole.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandLocalTimeError {
    pub band: (usize, usize),
    pub second_moment: f64,
    pub std_error: f64,
    pub differences: Vec<f64>,
}

pub struct BandLocalTimeSetup<'a> {
    pub spectrum: &'a PowerSpectrum,
    pub d: usize,
    pub radius: f64,
    pub band: (usize, usize),
    pub replicates: usize,
    pub eps: f64,
    pub seed: u64,
    /// Polar-cap grid covering at least `[0, radius]`.
    pub grid: &'a EquiangularGrid,
}

pub fn band_local_time_error_mc(setup: &BandLocalTimeSetup) -> Result<BandLocalTimeError> {
    if setup.replicates < 30 {
        return Err(Error::InsufficientReplicates {
            min: 30,
            got: setup.replicates,
        });
    }
    let (lo, hi) = setup.band;
    let x = SpherePoint::north_pole();
    let region = Region::Cap(Cap::new(x, setup.radius)?);
    let grid = Grid::Equiangular(setup.grid.clone());
    let probe = Grid::Points(vec![x]);
    let differences: Vec<f64> = (0..setup.replicates)
        .into_par_iter()
        .map(|rep| -> Result<f64> {
            let seed = derive_seed(setup.seed, rep as u64);
            let split = band_split(setup.spectrum, setup.d, lo, hi, &grid, seed)?;
            let at_x = band_split(setup.spectrum, setup.d, lo, hi, &probe, seed)?;
            let full = split.main.add(&split.residual)?;
            let full_x = at_x.main.add(&at_x.residual)?;
            let t_full: Vec<f64> = (0..setup.d).map(|c| full_x.value(c, 0)).collect();
            let t_band: Vec<f64> = (0..setup.d).map(|c| at_x.main.value(c, 0)).collect();
            let l_full = local_time_estimate(&full, &t_full, &region, setup.eps)?.value;
            let l_band = local_time_estimate(&split.main, &t_band, &region, setup.eps)?.value;
            Ok(l_full - l_band)
        })
        .collect::<Result<_>>()?;
    let n = differences.len() as f64;
    let sq: Vec<f64> = differences.iter().map(|v| v * v).collect();
    let second_moment = sq.iter().sum::<f64>() / n;
    let var = sq.iter().map(|v| (v - second_moment).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(BandLocalTimeError {
        band: setup.band,
        second_moment,
        std_error: (var / n).sqrt(),
        differences,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::power_law_spectrum;
    use crate::synthesis::vector_field;
    use std::f64::consts::PI;

    fn sample(d: usize, seed: u64) -> FieldSample {
        let s = power_law_spectrum(2.5, 32).unwrap();
        let g = Grid::Equiangular(EquiangularGrid::new(64, 128).unwrap());
        vector_field(&s, d, (0, 32), &g, seed).unwrap()
    }

    #[test]
    fn full_box_gives_region_area() {
        let f = sample(2, 1);
        let all = occupation_measure(&f, &Region::Sphere, &LevelBox::everything(2)).unwrap();
        assert!((all - 4.0 * PI).abs() < 1e-10);
        let cap = Region::Cap(Cap::new(SpherePoint::new(1.0, 2.0).unwrap(), 0.4).unwrap());
        let part = occupation_measure(&f, &cap, &LevelBox::everything(2)).unwrap();
        assert!((part - region_area(&f, &cap).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn disjoint_boxes_add() {
        let f = sample(1, 2);
        let a = occupation_measure(&f, &Region::Sphere, &LevelBox::new(vec![-1.0], vec![0.2]).unwrap()).unwrap();
        let b = occupation_measure(&f, &Region::Sphere, &LevelBox::new(vec![0.2], vec![3.0]).unwrap()).unwrap();
        let ab = occupation_measure(&f, &Region::Sphere, &LevelBox::new(vec![-1.0], vec![3.0]).unwrap()).unwrap();
        assert!((a + b - ab).abs() < 1e-12);
    }

    #[test]
    fn constant_field_occupation() {
        let g = Grid::Equiangular(EquiangularGrid::new(10, 20).unwrap());
        let f = FieldSample::constant(g, 1, 0.7).unwrap();
        let hit = occupation_measure(&f, &Region::Sphere, &LevelBox::around(&[0.7], 0.1)).unwrap();
        assert!((hit - 4.0 * PI).abs() < 1e-12);
        let miss = occupation_measure(&f, &Region::Sphere, &LevelBox::around(&[0.0], 0.1)).unwrap();
        assert_eq!(miss, 0.0);
    }

    #[test]
    fn local_time_far_level_is_zero_and_monotone_in_region() {
        let f = sample(1, 3);
        let lt = local_time_estimate(&f, &[50.0], &Region::Sphere, 0.1).unwrap();
        assert_eq!(lt.value, 0.0);
        let x = SpherePoint::new(1.2, 0.3).unwrap();
        let small = local_time_estimate(&f, &[0.0], &Region::Cap(Cap::new(x, 0.3).unwrap()), 0.2).unwrap();
        let big = local_time_estimate(&f, &[0.0], &Region::Cap(Cap::new(x, 0.6).unwrap()), 0.2).unwrap();
        assert!(small.value <= big.value);
        assert!(local_time_estimate(&f, &[0.0], &Region::Sphere, 0.0).is_err());
    }

    #[test]
    fn occupation_integral_recovers_area() {
        let f = sample(2, 4);
        for step_ratio in [0.5, 0.37] {
            let v = occupation_integral(&f, &Region::Sphere, 0.2, 0.4 * step_ratio).unwrap();
            assert!((v / (4.0 * PI) - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn gauge_identities() {
        let g = GaugeFunction::new(3.0, 2).unwrap();
        let r0 = (-std::f64::consts::E).exp();
        assert!((g.phi(r0).unwrap() - r0).abs() < 1e-15);
        for k in 1..200 {
            let r = 0.3678 * k as f64 / 200.0;
            let lhs = g.phi(r).unwrap() * g.w(r).unwrap().powi(2);
            assert!((lhs / (r * r) - 1.0).abs() < 1e-14);
            // φ(r) = r √(log|log r|) for α = 3, d = 2.
            assert!((g.phi(r).unwrap() / (r * (-r.ln()).ln().sqrt()) - 1.0).abs() < 1e-12);
        }
        assert!((w(0.01, 4.0).unwrap() - 0.01 / (-(0.01f64).ln()).ln().sqrt()).abs() < 1e-16);
        assert!(phi(0.5, &g).is_err());
        assert!(phi(0.0, &g).is_err());
    }

    #[test]
    fn schedule_is_geometric() {
        let s = radius_schedule(0.1, 0.01);
        assert!((s[1] / s[0] - 0.8).abs() < 1e-15);
        assert!(*s.last().unwrap() >= 0.01);
    }

    #[test]
    fn band_error_needs_replicates() {
        let s = power_law_spectrum(3.0, 64).unwrap();
        let g = EquiangularGrid::polar_cap(0.1, 8, 130).unwrap();
        let setup = BandLocalTimeSetup {
            spectrum: &s,
            d: 1,
            radius: 0.1,
            band: (2, 20),
            replicates: 10,
            eps: 0.1,
            seed: 1,
            grid: &g,
        };
        assert!(matches!(
            band_local_time_error_mc(&setup),
            Err(Error::InsufficientReplicates { .. })
        ));
    }
}
