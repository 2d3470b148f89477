//! Monte Carlo diagnostics built from the library operations. Replicate `i` always uses
//! seed `derive_seed(master, i)`, and results are merged in replicate order.

use std::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

use crate::capacity::{hitting_probability_mc, HittingSetup, HittingTable};
use crate::covariance::{slnd_ratio, CovarianceModel};
use crate::error::{invalid, Error, Result};
use crate::geom::{Cap, SpherePoint};
use crate::grid::{EquiangularGrid, Grid};
use crate::level_set::{box_dimension, default_tolerance, extract_level_set, phi_premeasure, DimensionFit};
use crate::local_time::{
    band_local_time_error_mc, default_bandwidth, local_time_estimate, radius_schedule, w, BandLocalTimeSetup,
    GaugeFunction, Region,
};
use crate::rng::derive_seed;
use crate::spectrum::PowerSpectrum;
use crate::stats::{linear_fit, median};
use crate::synthesis::{band_split, field_from_coefficients, oscillation_of, vector_coefficients, vector_field, FieldSample};
use crate::voronoi::VoronoiHierarchy;

use super::config::band_limits;

/// Median over `samples` grid points of `osc(D(x, h)) / w(h)`, `h` the grid spacing.
pub fn fit_oscillation_constant(f: &FieldSample, alpha: f64, samples: usize) -> Result<f64> {
    let g = f.grid().equiangular()?;
    let h = g.spacing();
    let wh = w(h, alpha)?;
    let step = (g.len() / samples.max(1)).max(1);
    let ratios: Vec<f64> = (0..samples.min(g.len()))
        .map(|i| {
            let p = g.point((i * step + step / 2) % g.len());
            let idx = g.indices_in_cap(&Cap::new(p, h)?);
            Ok(if idx.len() < 2 { f64::NAN } else { oscillation_of(f, &idx) / wh })
        })
        .collect::<Result<_>>()?;
    let k = median(&ratios);
    if !k.is_finite() {
        return Err(Error::GridTooCoarse("caps of one grid spacing hold fewer than two points".into()));
    }
    Ok(k)
}

/// Fraction of `samples` at or above `u`.
pub fn empirical_tail(samples: &[f64], u: f64) -> f64 {
    samples.iter().filter(|&&s| s >= u).count() as f64 / samples.len() as f64
}

/// Upper-tail probabilities at which Gaussian tail fits are taken.
pub const TAIL_PROBABILITIES: [f64; 6] = [0.5, 0.4, 0.3, 0.2, 0.1, 0.05];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailFit {
    /// Slope of `log P{osc ≥ u}` against `u²`.
    pub slope: f64,
    pub r_squared: f64,
    pub points: Vec<(f64, f64)>,
}

/// Fits `log P{X ≥ u} ≈ a + b u²` at the empirical quantiles of [`TAIL_PROBABILITIES`].
pub fn tail_fit(samples: &[f64]) -> Result<TailFit> {
    if samples.len() < 20 {
        return Err(Error::InsufficientReplicates {
            min: 20,
            got: samples.len(),
        });
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let points: Vec<(f64, f64)> = TAIL_PROBABILITIES
        .iter()
        .map(|&q| {
            let idx = (((1.0 - q) * n as f64).floor() as usize).min(n - 1);
            let u = s[idx];
            (u, empirical_tail(&s, u))
        })
        .collect();
    let x: Vec<f64> = points.iter().map(|(u, _)| u * u).collect();
    let y: Vec<f64> = points.iter().map(|(_, p)| p.ln()).collect();
    let fit = linear_fit(&x, &y)?;
    Ok(TailFit {
        slope: fit.slope,
        r_squared: fit.r_squared,
        points,
    })
}

pub struct OscillationTailSetup<'a> {
    pub spectrum: &'a PowerSpectrum,
    pub d: usize,
    pub radius: f64,
    pub b: Vec<f64>,
    pub beta: f64,
    pub replicates: usize,
    pub batches: usize,
    pub seed: u64,
    /// Polar-cap grid covering `[0, radius]`.
    pub grid: &'a EquiangularGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandTail {
    pub b: f64,
    pub band: (usize, usize),
    pub batch_slopes: Vec<f64>,
    pub median_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscillationTailReport {
    pub radius: f64,
    pub full: TailFit,
    pub bands: Vec<BandTail>,
    pub full_oscillations: Vec<f64>,
    pub delta_oscillations: Vec<Vec<f64>>,
}

impl OscillationTailReport {
    /// Whether `|median slope|` increases strictly with `B`.
    pub fn slope_magnitude_increases(&self) -> bool {
        self.bands
            .windows(2)
            .all(|w| w[1].median_slope.abs() > w[0].median_slope.abs())
    }
}

/// Oscillation over `D(x, r)`, `x` the north pole, of the full field and of `T^Δ = T − T^{L,U}`
/// for each `B`, with Gaussian tail fits (per batch for `T^Δ`).
pub fn oscillation_tail(setup: &OscillationTailSetup) -> Result<OscillationTailReport> {
    if setup.replicates < 200 {
        return Err(Error::InsufficientReplicates {
            min: 200,
            got: setup.replicates,
        });
    }
    if setup.batches == 0 || setup.replicates / setup.batches < 20 {
        return Err(invalid("batches", "need at least 20 replicates per batch"));
    }
    let bands: Vec<(usize, usize)> = setup.b.iter().map(|&b| band_limits(b, setup.beta, setup.radius)).collect();
    let grid = Grid::Equiangular(setup.grid.clone());
    let idx = grid.indices_in_cap(&Cap::new(SpherePoint::north_pole(), setup.radius)?);
    if idx.len() < 2 {
        return Err(Error::EmptyRegion("cap holds fewer than two grid points".into()));
    }
    let per_rep: Vec<(f64, Vec<f64>)> = (0..setup.replicates)
        .into_par_iter()
        .map(|rep| {
            let seed = derive_seed(setup.seed, rep as u64);
            let mut full = 0.0;
            let mut deltas = Vec::with_capacity(bands.len());
            for (j, &(lo, hi)) in bands.iter().enumerate() {
                let split = band_split(setup.spectrum, setup.d, lo, hi, &grid, seed)?;
                if j == 0 {
                    full = oscillation_of(&split.main.add(&split.residual)?, &idx);
                }
                deltas.push(oscillation_of(&split.residual, &idx));
            }
            Ok((full, deltas))
        })
        .collect::<Result<_>>()?;
    let full_osc: Vec<f64> = per_rep.iter().map(|r| r.0).collect();
    let delta_osc: Vec<Vec<f64>> = (0..bands.len()).map(|j| per_rep.iter().map(|r| r.1[j]).collect()).collect();
    let batch = setup.replicates / setup.batches;
    let band_tails = bands
        .iter()
        .zip(&setup.b)
        .zip(&delta_osc)
        .map(|((&band, &b), osc)| {
            let batch_slopes: Vec<f64> = osc
                .chunks(batch)
                .filter(|c| c.len() == batch)
                .map(|c| tail_fit(c).map(|f| f.slope))
                .collect::<Result<_>>()?;
            Ok(BandTail {
                b,
                band,
                median_slope: median(&batch_slopes),
                batch_slopes,
            })
        })
        .collect::<Result<_>>()?;
    Ok(OscillationTailReport {
        radius: setup.radius,
        full: tail_fit(&full_osc)?,
        bands: band_tails,
        full_oscillations: full_osc,
        delta_oscillations: delta_osc,
    })
}

pub struct BandErrorSetup<'a> {
    pub spectrum: &'a PowerSpectrum,
    pub d: usize,
    pub radius: f64,
    pub b: Vec<f64>,
    pub beta: f64,
    pub replicates: usize,
    pub batches: usize,
    pub eps: f64,
    pub seed: u64,
    pub grid: &'a EquiangularGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandErrorRow {
    pub b: f64,
    pub band: (usize, usize),
    pub second_moment: f64,
    pub std_error: f64,
    pub batch_moments: Vec<f64>,
    pub median_moment: f64,
    /// `second_moment / (B^{-κβ(4−α)} r^{4−d(α−2)})`.
    pub scaled: f64,
}

/// `κ = min{2, (4 − d(α−2))/(α−2)}`.
pub fn kappa(alpha: f64, d: usize) -> f64 {
    let a = alpha - 2.0;
    ((4.0 - d as f64 * a) / a).clamp(0.0, 2.0)
}

/// Band local-time second moments for each `B`, all on the same replicate seeds.
pub fn band_error_scan(setup: &BandErrorSetup) -> Result<Vec<BandErrorRow>> {
    if setup.batches == 0 || setup.replicates / setup.batches < 2 {
        return Err(invalid("batches", "need at least two replicates per batch"));
    }
    let alpha = setup.spectrum.alpha();
    let k = kappa(alpha, setup.d);
    setup
        .b
        .iter()
        .map(|&b| {
            let band = band_limits(b, setup.beta, setup.radius);
            let res = band_local_time_error_mc(&BandLocalTimeSetup {
                spectrum: setup.spectrum,
                d: setup.d,
                radius: setup.radius,
                band,
                replicates: setup.replicates,
                eps: setup.eps,
                seed: setup.seed,
                grid: setup.grid,
            })?;
            let batch = setup.replicates / setup.batches;
            let batch_moments: Vec<f64> = res
                .differences
                .chunks(batch)
                .filter(|c| c.len() == batch)
                .map(|c| c.iter().map(|v| v * v).sum::<f64>() / c.len() as f64)
                .collect();
            let bound = b.powf(-k * setup.beta * (4.0 - alpha)) * setup.radius.powf(4.0 - setup.d as f64 * (alpha - 2.0));
            Ok(BandErrorRow {
                b,
                band,
                second_moment: res.second_moment,
                std_error: res.std_error,
                median_moment: median(&batch_moments),
                batch_moments,
                scaled: res.second_moment / bound,
            })
        })
        .collect()
}

pub struct SmoothEventSetup<'a> {
    pub spectrum: &'a PowerSpectrum,
    pub d: usize,
    pub r0: f64,
    /// Radii to test; defaults to the 0.8-geometric schedule inside `(r0², r0)`.
    pub radii: Option<Vec<f64>>,
    pub c_grid: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
    /// Polar-cap grid covering `[0, r0]`.
    pub grid: &'a EquiangularGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothEventReport {
    pub r0: f64,
    pub radii: Vec<f64>,
    /// `(C, frequency)` for every constant on the grid.
    pub frequencies: Vec<(f64, f64)>,
    pub best_c: f64,
    pub best_frequency: f64,
    /// `1 − 1/|log r0|²`.
    pub target: f64,
}

/// Default constant grid `2^{-2}, …, 2^6`.
pub fn default_c_grid() -> Vec<f64> {
    (-2..=6).map(|k| (k as f64).exp2()).collect()
}

/// Frequency of the event: some radius in the schedule has `sup_{D(x,r)} ‖T(x) − T(y)‖ ≤ 2C w(r)`
/// and `L(T(x), D(x, r)) > (π/C) φ(r)`, `x` the north pole.
pub fn smooth_event(setup: &SmoothEventSetup) -> Result<SmoothEventReport> {
    if setup.replicates < 200 {
        return Err(Error::InsufficientReplicates {
            min: 200,
            got: setup.replicates,
        });
    }
    if !(setup.r0 > 0.0 && setup.r0 < (-1.0f64).exp()) {
        return Err(invalid("r0", "need 0 < r0 < 1/e"));
    }
    let h = setup.grid.spacing();
    let radii: Vec<f64> = match &setup.radii {
        Some(r) => r.clone(),
        None => radius_schedule(0.8 * setup.r0, setup.r0 * setup.r0)
            .into_iter()
            .filter(|&r| r > setup.r0 * setup.r0 && r < setup.r0)
            .collect(),
    };
    let radii: Vec<f64> = radii.into_iter().filter(|&r| r > 2.0 * h).collect();
    if radii.is_empty() {
        return Err(Error::EmptySet("no radius of the schedule is resolved by the grid".into()));
    }
    if setup.c_grid.is_empty() {
        return Err(invalid("c_grid", "constant grid is empty"));
    }
    let alpha = setup.spectrum.alpha();
    let gauge = GaugeFunction::new(alpha, setup.d)?;
    let eps = default_bandwidth(alpha, h)?;
    let grid = Grid::Equiangular(setup.grid.clone());
    let probe = Grid::Points(vec![SpherePoint::north_pole()]);
    let x = SpherePoint::north_pole();
    let caps: Vec<(Vec<usize>, Cap)> = radii
        .iter()
        .map(|&r| {
            let cap = Cap::new(x, r)?;
            Ok((grid.indices_in_cap(&cap), cap))
        })
        .collect::<Result<_>>()?;
    let thresholds: Vec<(f64, f64)> = radii.iter().map(|&r| Ok((w(r, alpha)?, gauge.phi(r)?))).collect::<Result<_>>()?;
    let l = setup.spectrum.l_max();
    // Per replicate and radius: (sup deviation, local time).
    let stats: Vec<Vec<(f64, f64)>> = (0..setup.replicates)
        .into_par_iter()
        .map(|rep| {
            let coeffs = vector_coefficients(setup.spectrum, setup.d, (0, l), derive_seed(setup.seed, rep as u64))?;
            let f = field_from_coefficients(&coeffs, &grid, setup.spectrum.hash64())?;
            let fx = field_from_coefficients(&coeffs, &probe, setup.spectrum.hash64())?;
            let tx: Vec<f64> = (0..setup.d).map(|c| fx.value(c, 0)).collect();
            caps.iter()
                .map(|(idx, cap)| {
                    let dev = idx
                        .iter()
                        .map(|&i| (0..setup.d).map(|c| (f.value(c, i) - tx[c]).powi(2)).sum::<f64>().sqrt())
                        .fold(0.0, f64::max);
                    let lt = local_time_estimate(&f, &tx, &Region::Cap(*cap), eps)?.value;
                    Ok((dev, lt))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let frequencies: Vec<(f64, f64)> = setup
        .c_grid
        .iter()
        .map(|&c| {
            let hits = stats
                .iter()
                .filter(|rep| {
                    rep.iter()
                        .zip(&thresholds)
                        .any(|(&(dev, lt), &(wr, phir))| dev <= 2.0 * c * wr && lt > PI / c * phir)
                })
                .count();
            (c, hits as f64 / setup.replicates as f64)
        })
        .collect();
    let (best_c, best_frequency) = frequencies
        .iter()
        .copied()
        .fold((f64::NAN, -1.0), |acc, (c, f)| if f > acc.1 { (c, f) } else { acc });
    Ok(SmoothEventReport {
        r0: setup.r0,
        radii,
        frequencies,
        best_c,
        best_frequency,
        target: 1.0 - 1.0 / setup.r0.ln().powi(2),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSetRun {
    pub replicate: usize,
    pub seed: u64,
    pub k_osc: f64,
    pub eps: f64,
    pub fit: Option<DimensionFit>,
    pub premeasure: f64,
    pub local_time: f64,
    pub ratio: f64,
}

/// Scalar-field level set at `t` on the hierarchy's grid: box dimension over the window
/// `[10, 0.5 × cells]`, the `φ`-premeasure at the finest level and `L(t, S²)`.
pub fn level_set_runs(
    spectrum: &PowerSpectrum,
    h: &VoronoiHierarchy,
    t: f64,
    replicates: usize,
    seed: u64,
) -> Result<Vec<LevelSetRun>> {
    let alpha = spectrum.alpha();
    let grid = Grid::Equiangular(h.grid().clone());
    let spacing = h.grid().spacing();
    let gauge = GaugeFunction::new(alpha, 1)?;
    let lt_eps = default_bandwidth(alpha, spacing)?;
    let k = h.k_max();
    let l = spectrum.l_max();
    (0..replicates)
        .map(|rep| {
            let s = derive_seed(seed, rep as u64);
            let f = vector_field(spectrum, 1, (0, l), &grid, s)?;
            let k_osc = fit_oscillation_constant(&f, alpha, 200)?;
            let eps = default_tolerance(alpha, spacing, k_osc)?;
            let ls = extract_level_set(&f, &[t], eps)?;
            let fit = match box_dimension(&ls, h, 1..=k, Some((10.0, 0.5))) {
                Ok(fit) => Some(fit),
                Err(Error::TooFewLevels(_)) | Err(Error::EmptySet(_)) => None,
                Err(e) => return Err(e),
            };
            let premeasure = phi_premeasure(&ls, h, k, &gauge)?;
            let local_time = local_time_estimate(&f, &[t], &Region::Sphere, lt_eps)?.value;
            Ok(LevelSetRun {
                replicate: rep,
                seed: s,
                k_osc,
                eps,
                fit,
                premeasure,
                local_time,
                ratio: premeasure / local_time,
            })
        })
        .collect()
}

/// Minimum and median SLND ratio over `configs` random configurations at `scale`: a uniform
/// point `x` and four conditioning points drawn uniformly from the cap of radius `scale`
/// around it (no closer than `scale/1000`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlndRow {
    pub scale: f64,
    pub configs: usize,
    pub min: f64,
    pub median: f64,
}

pub fn slnd_scan(model: &CovarianceModel, scales: &[f64], configs: usize, seed: u64) -> Result<Vec<SlndRow>> {
    if configs == 0 {
        return Err(invalid("configs", "need at least one configuration"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    scales
        .iter()
        .map(|&scale| {
            if !(scale > 0.0 && scale < PI) {
                return Err(invalid("scale", format!("{scale} not in (0, π)")));
            }
            let ratios: Vec<f64> = (0..configs)
                .map(|_| {
                    let x = uniform_point(&mut rng);
                    let conds: Vec<SpherePoint> = (0..4)
                        .map(|_| {
                            let r = scale * uniform(&mut rng).sqrt().max(1e-3);
                            x.offset(r, 2.0 * PI * uniform(&mut rng))
                        })
                        .collect();
                    slnd_ratio(model, &x, &conds, None)
                })
                .collect::<Result<_>>()?;
            Ok(SlndRow {
                scale,
                configs,
                min: ratios.iter().copied().fold(f64::INFINITY, f64::min),
                median: median(&ratios),
            })
        })
        .collect()
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Point uniform on the sphere.
pub fn uniform_point(rng: &mut ChaCha8Rng) -> SpherePoint {
    let z = 2.0 * uniform(rng) - 1.0;
    let lon = 2.0 * PI * uniform(rng);
    SpherePoint::new(z.clamp(-1.0, 1.0).acos(), lon).expect("angles in range")
}

/// Hitting tables for each `d` on common seeds; components nest across `d`.
pub fn hitting_scan(
    spectrum: &PowerSpectrum,
    ds: &[usize],
    cap: Cap,
    grid: &Grid,
    eps: &[f64],
    replicates: usize,
    seed: u64,
) -> Result<Vec<HittingTable>> {
    ds.iter()
        .map(|&d| {
            hitting_probability_mc(&HittingSetup {
                spectrum,
                d,
                cap,
                t: vec![0.0; d],
                eps: eps.to_vec(),
                replicates,
                seed,
                grid,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::power_law_spectrum;

    #[test]
    fn tail_below_minimum_is_one() {
        let s = [0.3, 0.5, 0.9];
        assert_eq!(empirical_tail(&s, 0.1), 1.0);
        assert_eq!(empirical_tail(&s, 1.0), 0.0);
    }

    #[test]
    fn gaussian_tail_fits_well() {
        let mut g = crate::rng::GaussianStream::new(11, 0);
        let samples: Vec<f64> = (0..1000).map(|m| g.pair(1000, m).0.abs()).collect();
        let fit = tail_fit(&samples).unwrap();
        assert!(fit.slope < 0.0 && fit.r_squared > 0.95, "{fit:?}");
    }

    #[test]
    fn kappa_values() {
        assert_eq!(kappa(3.0, 1), 2.0);
        assert!((kappa(3.0, 3) - 1.0).abs() < 1e-15);
        assert_eq!(kappa(3.0, 4), 0.0);
    }

    #[test]
    fn smooth_event_monotone_in_c() {
        let s = power_law_spectrum(2.5, 128).unwrap();
        let g = EquiangularGrid::polar_cap(0.1, 24, 258).unwrap();
        let rep = smooth_event(&SmoothEventSetup {
            spectrum: &s,
            d: 1,
            r0: 0.1,
            radii: None,
            c_grid: default_c_grid(),
            replicates: 200,
            seed: 5,
            grid: &g,
        })
        .unwrap();
        assert!(rep.frequencies.windows(2).all(|w| w[0].1 <= w[1].1));
        let single = smooth_event(&SmoothEventSetup {
            spectrum: &s,
            d: 1,
            r0: 0.1,
            radii: Some(vec![0.05]),
            c_grid: vec![1.0],
            replicates: 200,
            seed: 5,
            grid: &g,
        })
        .unwrap();
        assert_eq!(single.radii, vec![0.05]);
    }
}
