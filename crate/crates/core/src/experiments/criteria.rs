//! The verification suite: ten checks of the model's identities and predictions, each with
//! its tolerance fixed here.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use serde::Serialize;
use serde_json::json;

use crate::capacity::{capacity_from_quadrature, integrability_test, resolvable_eps, EnergyQuadrature, QuadratureSpec};
use crate::covariance::CovarianceModel;
use crate::error::{Error, Result};
use crate::geom::{Cap, SpherePoint};
use crate::grid::{EquiangularGrid, Grid};
use crate::harmonics::{addition_theorem_check, LegendreTable};
use crate::local_time::{default_bandwidth, occupation_integral, GaugeFunction, Region};
use crate::spectrum::{example2_closed_form, example2_power_spectrum, power_law_spectrum};
use crate::stats::{is_monotone, linear_fit, median};
use crate::synthesis::vector_field;
use crate::voronoi::VoronoiHierarchy;

use super::diagnostics::{
    band_error_scan, hitting_scan, level_set_runs, oscillation_tail, slnd_scan, uniform_point, BandErrorSetup, LevelSetRun,
    OscillationTailSetup,
};

/// Master seed of every criterion's Monte Carlo draws.
pub const SUITE_SEED: u64 = 0x5eed_2024;
/// Seed of the calibration run that fixed [`PREMEASURE_BAND`].
pub const CALIBRATION_SEED: u64 = 0xca1b;

pub const ADDITION_TOL: f64 = 1e-10;
pub const ADDITION_MAX_DEGREE: usize = 1024;
pub const LEGENDRE_ONE_TOL: f64 = 1e-14;
pub const NORMALIZATION_TOL: f64 = 1e-12;
pub const GAUGE_TOL: f64 = 1e-14;
pub const VARZ_TOL: f64 = 1e-10;
pub const EXAMPLE2_L_MAX: usize = 2001;
pub const EXAMPLE2_TOL: f64 = 5e-3;
pub const EXAMPLE2_BRACKET_DEGREES: (usize, usize) = (2, 200);
pub const VARIOGRAM_SLOPE_TOL: f64 = 0.1;
pub const SLND_CONFIGS: usize = 200;
pub const SLND_FACTOR: f64 = 3.0;
pub const OCCUPATION_TOL: f64 = 0.02;
pub const DIMENSION_TOL: f64 = 0.15;
pub const HITTING_MIN_FREQUENCY: f64 = 0.9;
pub const HITTING_REPLICATES: usize = 500;
pub const BAND_REPLICATES: usize = 200;
/// Two-sided band for `φ-premeasure / L(0, S²)`, from the calibration run (seed
/// [`CALIBRATION_SEED`], 20 replicates at each α, half the minimum to twice the maximum).
pub const PREMEASURE_BAND: (f64, f64) = (4.47, 27.6);

/// Truncation degree of the models used for small-angle quantities.
pub const FINE_L_MAX: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: String,
    pub name: String,
    pub passed: bool,
    /// Exact identities and analytic/numeric agreements; statistical checks are soft.
    pub hard: bool,
    /// For soft checks: whether the miss exceeds twice the tolerance.
    pub severe: bool,
    pub measured: serde_json::Value,
    pub tolerance: String,
    /// Wall-clock time; kept out of serialized reports so they stay reproducible.
    #[serde(skip)]
    pub seconds: f64,
    pub runtime_limit: f64,
}

impl CriterionResult {
    /// One-line summary `PASS|FAIL id name: measured`.
    pub fn line(&self) -> String {
        format!(
            "{} [{}] {} ({:.1} s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds,
            self.measured
        )
    }
}

struct Draft {
    name: &'static str,
    hard: bool,
    passed: bool,
    severe: bool,
    measured: serde_json::Value,
    tolerance: String,
    limit: f64,
}

fn timed(id: &str, f: impl FnOnce() -> Result<Draft>) -> Result<CriterionResult> {
    let t0 = Instant::now();
    let d = f()?;
    let seconds = t0.elapsed().as_secs_f64();
    Ok(CriterionResult {
        id: id.to_string(),
        name: d.name.to_string(),
        passed: d.passed && seconds < d.limit,
        hard: d.hard,
        severe: d.severe,
        measured: d.measured,
        tolerance: d.tolerance,
        seconds,
        runtime_limit: d.limit,
    })
}

/// Identity suite: addition theorem, `P_ℓ(1) = 1`, normalization, `φ w^d = r²` and the
/// variance identity of the kernel.
pub fn criterion_1() -> Result<CriterionResult> {
    timed("1", || {
        let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED);
        let mut addition: f64 = 0.0;
        for ell in [0, 1, 2, 3, 7, 31, 100, 255, 512, 777, ADDITION_MAX_DEGREE] {
            for _ in 0..3 {
                let (p, q) = (uniform_point(&mut rng), uniform_point(&mut rng));
                addition = addition.max(addition_theorem_check(ell, &p, &q));
            }
        }
        let p_one = LegendreTable::new(ADDITION_MAX_DEGREE, 1.0)?
            .values()
            .iter()
            .map(|v| (v - 1.0).abs())
            .fold(0.0, f64::max);
        let mut normalization: f64 = 0.0;
        for alpha in [2.2, 2.5, 3.0, 3.5, 3.9] {
            for l in [16, 512, 4096] {
                normalization = normalization.max((power_law_spectrum(alpha, l)?.variance() - 1.0).abs());
            }
        }
        let mut gauge: f64 = 0.0;
        for alpha in [2.2, 2.5, 3.0, 3.9] {
            for d in [1, 2, 4, 8] {
                let g = GaugeFunction::new(alpha, d)?;
                for k in 1..100 {
                    let r = 0.3678 * k as f64 / 100.0;
                    let lhs = g.phi(r)? * g.w(r)?.powi(d as i32);
                    gauge = gauge.max((lhs / (r * r) - 1.0).abs());
                }
            }
        }
        let model = CovarianceModel::with_tail_correction(power_law_spectrum(3.0, 1 << 14)?);
        let varz = EnergyQuadrature::new(&model, 0.2, &QuadratureSpec::for_model(&model))?.var_identity_residual();
        let passed = addition <= ADDITION_TOL
            && p_one <= LEGENDRE_ONE_TOL
            && normalization <= NORMALIZATION_TOL
            && gauge <= GAUGE_TOL
            && varz <= VARZ_TOL;
        Ok(Draft {
            name: "identity suite",
            hard: true,
            passed,
            severe: !passed,
            measured: json!({
                "addition_residual": addition,
                "legendre_at_one": p_one,
                "normalization": normalization,
                "gauge_relative": gauge,
                "var_identity": varz,
            }),
            tolerance: format!(
                "addition ≤ {ADDITION_TOL:e} (ℓ ≤ {ADDITION_MAX_DEGREE}); |P_ℓ(1) − 1| ≤ {LEGENDRE_ONE_TOL:e}; \
                 normalization ≤ {NORMALIZATION_TOL:e}; φ·w^d/r² ≤ {GAUGE_TOL:e}; variance identity ≤ {VARZ_TOL:e}"
            ),
            limit: 60.0,
        })
    })
}

/// Covariance `1 − (2/π)θ` rebuilt from its Schoenberg spectrum.
pub fn criterion_2a() -> Result<CriterionResult> {
    timed("2a", || {
        let model = CovarianceModel::new(example2_power_spectrum(EXAMPLE2_L_MAX)?);
        let n = 400;
        let mut worst: f64 = 0.0;
        for i in 0..=n {
            let theta = 0.05 + (PI - 0.1) * i as f64 / n as f64;
            worst = worst.max((model.covariance(theta)? - (1.0 - 2.0 * theta / PI)).abs());
        }
        Ok(Draft {
            name: "arc-covariance reconstruction",
            hard: true,
            passed: worst <= EXAMPLE2_TOL,
            severe: worst > EXAMPLE2_TOL,
            measured: json!({ "max_abs_error": worst }),
            tolerance: format!("≤ {EXAMPLE2_TOL:e} on [0.05, π − 0.05] at L_max = {EXAMPLE2_L_MAX}"),
            limit: 120.0,
        })
    })
}

/// Series values inside `[ℓ^{-1}/(8√e), ℓ^{-1}/4]`.
pub fn criterion_2b() -> Result<CriterionResult> {
    timed("2b", || {
        let (lo, hi) = EXAMPLE2_BRACKET_DEGREES;
        let c = example2_closed_form(hi);
        let mut outside = Vec::new();
        for (ell, &v) in c.iter().enumerate().take(hi + 1).skip(lo) {
            let l = ell as f64;
            if !(v >= 1.0 / (l * 8.0 * 0.5f64.exp()) && v <= 1.0 / (4.0 * l)) {
                outside.push(ell);
            }
        }
        Ok(Draft {
            name: "arc-covariance spectrum bracket",
            hard: true,
            passed: outside.is_empty(),
            severe: !outside.is_empty(),
            measured: json!({
                "degrees_outside": outside.len(),
                "first_outside": outside.first(),
                "c_2": c[2],
                "c_200_times_200": c[hi] * hi as f64,
            }),
            tolerance: format!("every ℓ ∈ [{lo}, {hi}] inside [ℓ^-1/(8√e), ℓ^-1/4]"),
            limit: 120.0,
        })
    })
}

/// Log-log slope of the variogram on `[1e-3, 1e-1]` equals `α − 2`.
pub fn criterion_3() -> Result<CriterionResult> {
    timed("3", || {
        let mut slopes = Vec::new();
        let mut passed = true;
        for alpha in [2.5, 3.0, 3.5] {
            let model = CovarianceModel::with_tail_correction(power_law_spectrum(alpha, FINE_L_MAX)?);
            let thetas: Vec<f64> = (0..15).map(|i| 1e-3 * 100f64.powf(i as f64 / 14.0)).collect();
            let x: Vec<f64> = thetas.iter().map(|t| t.ln()).collect();
            let y: Vec<f64> = thetas.iter().map(|&t| model.variogram(t).map(f64::ln)).collect::<Result<_>>()?;
            let s = linear_fit(&x, &y)?.slope;
            passed &= (s - (alpha - 2.0)).abs() <= VARIOGRAM_SLOPE_TOL;
            slopes.push(json!({ "alpha": alpha, "slope": s }));
        }
        Ok(Draft {
            name: "variogram scaling",
            hard: true,
            passed,
            severe: !passed,
            measured: json!(slopes),
            tolerance: format!("|slope − (α − 2)| ≤ {VARIOGRAM_SLOPE_TOL}"),
            limit: 60.0,
        })
    })
}

/// Minimum SLND ratio over random 5-point configurations at three scales.
pub fn criterion_4() -> Result<CriterionResult> {
    timed("4", || {
        let model = CovarianceModel::with_tail_correction(power_law_spectrum(3.0, 1 << 18)?);
        let rows = slnd_scan(&model, &[1e-3, 1e-2, 1e-1], SLND_CONFIGS, SUITE_SEED ^ 4)?;
        let minima: Vec<f64> = rows.iter().map(|r| r.min).collect();
        let lo = minima.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = minima.iter().copied().fold(0.0, f64::max);
        let passed = lo > 0.0 && hi / lo <= SLND_FACTOR;
        Ok(Draft {
            name: "SLND floor stability",
            hard: false,
            passed,
            severe: !(lo > 0.0 && hi / lo <= 2.0 * SLND_FACTOR),
            measured: json!({ "minima": minima, "spread": hi / lo }),
            tolerance: format!("minimum > 0 and per-scale minima within a factor {SLND_FACTOR}"),
            limit: 300.0,
        })
    })
}

/// `∫ L(t, D) dt = ν(D)` for the sphere and a cap.
pub fn criterion_5() -> Result<CriterionResult> {
    timed("5", || {
        let s = power_law_spectrum(3.0, 64)?;
        let grid = Grid::Equiangular(EquiangularGrid::new(256, 512)?);
        let cap = Cap::new(SpherePoint::new(1.0, 2.0)?, 1.0)?;
        let eps = 0.1;
        let step = 2.0 * eps / 2.5;
        let mut worst: f64 = 0.0;
        for d in [1, 2] {
            for rep in 0..20 {
                let f = vector_field(&s, d, (0, 64), &grid, crate::rng::derive_seed(SUITE_SEED ^ 5, rep))?;
                for (region, area) in [(Region::Sphere, 4.0 * PI), (Region::Cap(cap), cap.area())] {
                    let v = occupation_integral(&f, &region, eps, step)?;
                    worst = worst.max((v / area - 1.0).abs());
                }
            }
        }
        Ok(Draft {
            name: "occupation identity",
            hard: true,
            passed: worst <= OCCUPATION_TOL,
            severe: worst > OCCUPATION_TOL,
            measured: json!({ "max_relative_error": worst }),
            tolerance: format!("relative error ≤ {OCCUPATION_TOL}"),
            limit: 300.0,
        })
    })
}

/// Grid and hierarchy for the level-set criteria: `L_max = 512` on a 1024×2048 grid with
/// Voronoi levels 1..=7.
pub fn level_set_hierarchy() -> Result<VoronoiHierarchy> {
    VoronoiHierarchy::build(7, &EquiangularGrid::new(1024, 2048)?)
}

pub fn level_set_sample(alpha: f64, h: &VoronoiHierarchy, seed: u64) -> Result<Vec<LevelSetRun>> {
    level_set_runs(&power_law_spectrum(alpha, 512)?, h, 0.0, 20, seed)
}

/// Median box-counting slope against `2 − (α − 2)/2` for α ∈ {2.5, 3}.
pub fn criterion_6() -> Result<CriterionResult> {
    timed("6", || {
        let h = level_set_hierarchy()?;
        let mut rows = Vec::new();
        let mut passed = true;
        let mut severe = false;
        for alpha in [2.5, 3.0] {
            let runs = level_set_sample(alpha, &h, SUITE_SEED)?;
            let slopes: Vec<f64> = runs.iter().filter_map(|r| r.fit.as_ref().map(|f| f.slope)).collect();
            let m = median(&slopes);
            let predicted = 2.0 - (alpha - 2.0) / 2.0;
            passed &= (m - predicted).abs() <= DIMENSION_TOL;
            severe |= !((m - predicted).abs() <= 2.0 * DIMENSION_TOL);
            rows.push(json!({ "alpha": alpha, "predicted": predicted, "median_slope": m, "fits": slopes.len() }));
        }
        Ok(Draft {
            name: "level-set dimension",
            hard: false,
            passed,
            severe,
            measured: json!(rows),
            tolerance: format!("|median slope − (2 − (α−2)/2)| ≤ {DIMENSION_TOL}"),
            limit: 1800.0,
        })
    })
}

/// Sign of `4 − (α−2)d` against integrability and positive capacity.
pub fn criterion_7() -> Result<CriterionResult> {
    timed("7", || {
        let radius = 0.1;
        let mut disagreements = Vec::new();
        let mut checked = 0;
        for alpha in [2.2, 2.5, 3.0, 3.5, 3.9] {
            let model = CovarianceModel::with_tail_correction(power_law_spectrum(alpha, FINE_L_MAX)?);
            let q = EnergyQuadrature::new(&model, radius, &QuadratureSpec::for_model(&model))?;
            for d in 1..=12 {
                checked += 1;
                let sign = 4.0 - (alpha - 2.0) * d as f64 > 0.0;
                let integrable = match integrability_test(alpha, d, radius) {
                    Ok(r) => Some(r.classification == crate::capacity::Integrability::Integrable),
                    Err(Error::Disagreement(_)) => None,
                    Err(e) => return Err(e),
                };
                let cap = capacity_from_quadrature(&q, d)?.value > 0.0;
                if integrable != Some(sign) || cap != sign {
                    disagreements.push(json!({ "alpha": alpha, "d": d, "integrable": integrable, "capacity_positive": cap }));
                }
            }
        }
        Ok(Draft {
            name: "criterion consistency triangle",
            hard: true,
            passed: disagreements.is_empty(),
            severe: !disagreements.is_empty(),
            measured: json!({ "grid_points": checked, "disagreements": disagreements }),
            tolerance: "zero disagreements".into(),
            limit: 600.0,
        })
    })
}

/// ε-hitting of level 0 in the northern hemisphere at α = 2.5 for d ∈ {1, 2, 4, 8, 12}.
pub fn criterion_8() -> Result<CriterionResult> {
    timed("8", || {
        let s = power_law_spectrum(2.5, 64)?;
        let g = EquiangularGrid::polar_cap(FRAC_PI_2, 64, 130)?;
        let floor = resolvable_eps(&CovarianceModel::new(s.clone()), g.spacing())?;
        let eps: Vec<f64> = [8.0, 4.0, 2.0, 1.0].iter().map(|k| k * floor).collect();
        let cap = Cap::new(SpherePoint::north_pole(), FRAC_PI_2)?;
        let ds = [1, 2, 4, 8, 12];
        let tables = hitting_scan(&s, &ds, cap, &Grid::Equiangular(g), &eps, HITTING_REPLICATES, SUITE_SEED ^ 8)?;
        let finest: Vec<f64> = tables.iter().map(|t| t.finest().frequency).collect();
        let passed = finest[0] >= HITTING_MIN_FREQUENCY && is_monotone(&finest, false);
        Ok(Draft {
            name: "hitting trend",
            hard: false,
            passed,
            severe: !is_monotone(&finest, false) || finest[0] < 1.0 - 2.0 * (1.0 - HITTING_MIN_FREQUENCY),
            measured: json!({ "d": ds, "finest_eps": floor, "frequency": finest }),
            tolerance: format!("d = 1 frequency ≥ {HITTING_MIN_FREQUENCY}; non-increasing in d"),
            limit: 3600.0,
        })
    })
}

/// Tail slope of `T^Δ` oscillations steepens and the band local-time error shrinks as `B` grows.
pub fn criterion_9() -> Result<CriterionResult> {
    timed("9", || {
        let alpha = 3.0;
        let s = power_law_spectrum(alpha, 256)?;
        let r = 0.05;
        let beta = (alpha - 2.0) / 4.0;
        let b = vec![4.0, 8.0, 16.0];
        let g = EquiangularGrid::polar_cap(r, 16, 514)?;
        let tail = oscillation_tail(&OscillationTailSetup {
            spectrum: &s,
            d: 1,
            radius: r,
            b: b.clone(),
            beta,
            replicates: BAND_REPLICATES,
            batches: 5,
            seed: SUITE_SEED ^ 9,
            grid: &g,
        })?;
        let errors = band_error_scan(&BandErrorSetup {
            spectrum: &s,
            d: 1,
            radius: r,
            b,
            beta,
            replicates: BAND_REPLICATES,
            batches: 5,
            eps: default_bandwidth(alpha, g.spacing())?,
            seed: SUITE_SEED ^ 9,
            grid: &g,
        })?;
        let slopes: Vec<f64> = tail.bands.iter().map(|t| t.median_slope.abs()).collect();
        let moments: Vec<f64> = errors.iter().map(|e| e.median_moment).collect();
        let tail_ok = tail.slope_magnitude_increases();
        let error_ok = moments.windows(2).all(|w| w[1] < w[0]);
        Ok(Draft {
            name: "band diagnostics",
            hard: false,
            passed: tail_ok && error_ok,
            severe: !(tail_ok && error_ok),
            measured: json!({
                "tail_slope_magnitude": slopes,
                "band_lt_second_moment": moments,
                "full_field_r_squared": tail.full.r_squared,
            }),
            tolerance: "median tail slope magnitude increasing in B; median second moment decreasing in B".into(),
            limit: 1800.0,
        })
    })
}

/// Premeasure / local-time ratio inside the frozen band for 20 fresh replicates per α.
pub fn criterion_10() -> Result<CriterionResult> {
    timed("10", || {
        let h = level_set_hierarchy()?;
        let (lo, hi) = PREMEASURE_BAND;
        let mut outside = 0;
        let mut ranges = Vec::new();
        for alpha in [2.5, 3.0] {
            let runs = level_set_sample(alpha, &h, SUITE_SEED ^ 10)?;
            let ratios: Vec<f64> = runs.iter().map(|r| r.ratio).collect();
            outside += ratios.iter().filter(|&&v| !(v >= lo && v <= hi)).count();
            let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
            let max = ratios.iter().copied().fold(0.0, f64::max);
            ranges.push(json!({ "alpha": alpha, "min": min, "max": max }));
        }
        Ok(Draft {
            name: "premeasure / local-time ratio",
            hard: false,
            passed: outside == 0,
            severe: outside > 2,
            measured: json!({ "outside": outside, "ranges": ranges }),
            tolerance: format!("all 40 ratios in [{lo:.4e}, {hi:.4e}]"),
            limit: 1200.0,
        })
    })
}

pub const CRITERIA: [&str; 11] = ["1", "2a", "2b", "3", "4", "5", "6", "7", "8", "9", "10"];

pub fn run_criterion(id: &str) -> Result<CriterionResult> {
    match id {
        "1" => criterion_1(),
        "2a" => criterion_2a(),
        "2b" => criterion_2b(),
        "3" => criterion_3(),
        "4" => criterion_4(),
        "5" => criterion_5(),
        "6" => criterion_6(),
        "7" => criterion_7(),
        "8" => criterion_8(),
        "9" => criterion_9(),
        "10" => criterion_10(),
        other => Err(crate::error::invalid("criterion", format!("unknown id {other}"))),
    }
}
