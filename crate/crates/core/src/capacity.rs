//! The kernel `Φ(θ; a)`, Φ-energies of measures on caps, parametric capacity estimates, the
//! integrability criterion and Monte Carlo ε-hitting frequencies.

use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::covariance::{bivariate_density, CovarianceModel};
use crate::error::{invalid, Error, Result};
use crate::geom::{Cap, SpherePoint};
use crate::grid::Grid;
use crate::harmonics::gauss_legendre;
use crate::level_set::hitting_indicator;
use crate::rng::derive_seed;
use crate::spectrum::PowerSpectrum;
use crate::stats::{linear_fit, wilson_interval};
use crate::synthesis::vector_field;

/// Slope of `log2` level increments at or above which an integral is declared divergent.
pub const DIVERGENCE_SLOPE: f64 = -0.05;

/// Tilt exponents of the measure family `g_γ(s) ∝ (1 − s/R)^γ`.
pub const FAMILY_GAMMAS: [f64; 4] = [0.0, 0.5, 1.0, 2.0];

/// `Π_j p(θ; a_j, a_j)`, with `p` the joint density of `(T_1(x), T_1(y))` at distance θ.
pub fn phi_kernel(model: &CovarianceModel, theta: f64, d: usize, a: &[f64]) -> Result<f64> {
    if !(theta > 0.0 && theta <= PI) {
        return Err(invalid("theta", format!("{theta} outside (0, π]")));
    }
    if a.len() != d {
        return Err(invalid("a", format!("expected {d} levels, got {}", a.len())));
    }
    let (rho, det) = model.correlation(theta)?;
    if !(det > 0.0) {
        return Err(invalid("theta", format!("correlation {rho} is degenerate")));
    }
    Ok(kernel_from(rho, det, a))
}

fn kernel_from(rho: f64, det: f64, a: &[f64]) -> f64 {
    a.iter().map(|&aj| bivariate_density(rho, det, [aj, aj])).product()
}

/// Probability measures whose energy can be computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Measure {
    PointMass(SpherePoint),
    /// Density `∝ (1 − s/R)^γ` on a cap of radius `R`, `s` the distance to its center.
    Cap { cap: Cap, gamma: f64 },
}

impl Measure {
    pub fn uniform(cap: Cap) -> Self {
        Measure::Cap { cap, gamma: 0.0 }
    }

    pub fn describe(&self) -> String {
        match self {
            Measure::PointMass(p) => format!("point mass at ({:.6}, {:.6})", p.colatitude(), p.longitude()),
            Measure::Cap { cap, gamma } => format!("cap radius {:.6} tilt {gamma}", cap.radius),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureSpec {
    /// Smallest distance resolved by the dyadic refinement.
    pub theta_min: f64,
    /// Gauss–Legendre nodes per dyadic interval.
    pub nodes: usize,
}

impl QuadratureSpec {
    /// Stops at `θ = 64 / L_max`, where the truncated spectrum still resolves the kernel.
    pub fn for_model(model: &CovarianceModel) -> Self {
        QuadratureSpec {
            theta_min: 64.0 / model.spectrum().l_max() as f64,
            nodes: 12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyStatus {
    Finite,
    Divergent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    /// Lower end of the dyadic interval `[θ_{j+1}, θ_j]`.
    pub theta: f64,
    pub increment: f64,
    pub cumulative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyResult {
    pub measure: String,
    pub status: EnergyStatus,
    /// `+∞` when divergent; otherwise the refined sum plus a geometric tail.
    pub value: f64,
    /// Least-squares slope of `log2 increment` over the last three levels.
    pub slope: f64,
    pub trace: Vec<TraceRow>,
}

impl EnergyResult {
    pub fn is_infinite(&self) -> bool {
        self.status == EnergyStatus::Divergent
    }

    fn infinite(measure: String) -> Self {
        EnergyResult {
            measure,
            status: EnergyStatus::Divergent,
            value: f64::INFINITY,
            slope: f64::INFINITY,
            trace: Vec::new(),
        }
    }
}

/// Classifies dyadic increments by the divergence rule and sums them.
fn classify_increments(increments: &[f64]) -> Result<(EnergyStatus, f64, f64)> {
    if increments.len() < 3 {
        return Err(Error::Indeterminate(format!("{} refinement level(s), need 3", increments.len())));
    }
    if increments.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Indeterminate("non-positive or non-finite increment".into()));
    }
    let n = increments.len();
    let x = [0.0, 1.0, 2.0];
    let y: Vec<f64> = increments[n - 3..].iter().map(|v| v.log2()).collect();
    let slope = linear_fit(&x, &y)?.slope;
    if slope >= DIVERGENCE_SLOPE {
        return Ok((EnergyStatus::Divergent, f64::INFINITY, slope));
    }
    let r = slope.exp2();
    let total = increments.iter().sum::<f64>() + increments[n - 1] * r / (1.0 - r);
    Ok((EnergyStatus::Finite, total, slope))
}

/// Dyadic nodes `θ ∈ [θ_{j+1}, θ_j]`, `θ_j = 2R·2^{-j}`, with the correlation at every node
/// cached so that several measures and dimensions share one pass over the spectrum.
pub struct EnergyQuadrature {
    radius: f64,
    levels: Vec<(f64, f64)>,
    nodes: Vec<Vec<(f64, f64)>>,
    corr: Vec<Vec<(f64, f64)>>,
}

impl EnergyQuadrature {
    pub fn new(model: &CovarianceModel, radius: f64, spec: &QuadratureSpec) -> Result<Self> {
        if !(radius > 0.0 && radius <= PI / 2.0) {
            return Err(invalid("radius", format!("{radius} outside (0, π/2]")));
        }
        if !(spec.theta_min > 0.0) || spec.nodes == 0 {
            return Err(invalid("quadrature", "need θ_min > 0 and at least one node"));
        }
        let mut levels = Vec::new();
        let mut hi = 2.0 * radius;
        while hi / 2.0 >= spec.theta_min {
            levels.push((hi / 2.0, hi));
            hi /= 2.0;
        }
        if levels.len() < 3 {
            return Err(Error::GridTooCoarse(format!(
                "θ_min = {:.3e} leaves {} dyadic level(s) below 2R = {:.3e}",
                spec.theta_min,
                levels.len(),
                2.0 * radius
            )));
        }
        let (x, w) = gauss_legendre(spec.nodes);
        let nodes: Vec<Vec<(f64, f64)>> = levels
            .iter()
            .map(|&(a, b)| {
                x.iter()
                    .zip(&w)
                    .map(|(xi, wi)| (0.5 * (a + b) + 0.5 * (b - a) * xi, 0.5 * (b - a) * wi))
                    .collect()
            })
            .collect();
        let corr = nodes
            .par_iter()
            .map(|lvl| lvl.iter().map(|&(t, _)| model.correlation(t)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(EnergyQuadrature {
            radius,
            levels,
            nodes,
            corr,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Largest deviation of `[2π p(θ; 0)]^{-2}` from `1 − C(θ)²` over the cached nodes.
    pub fn var_identity_residual(&self) -> f64 {
        self.corr
            .iter()
            .flatten()
            .map(|&(rho, det)| {
                let p = bivariate_density(rho, det, [0.0, 0.0]);
                ((2.0 * PI * p).powi(-2) - (1.0 - rho * rho)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Energy of the tilted cap measure with exponent `gamma` for a `d`-vector field at level `a`.
    pub fn energy(&self, d: usize, a: &[f64], gamma: f64) -> Result<EnergyResult> {
        if a.len() != d {
            return Err(invalid("a", format!("expected {d} levels, got {}", a.len())));
        }
        let density = PairDensity::new(self.radius, gamma)?;
        let increments: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.corr)
            .map(|(lvl, corr)| {
                lvl.iter()
                    .zip(corr)
                    .map(|(&(t, w), &(rho, det))| w * density.eval(t) * kernel_from(rho, det, a))
                    .sum()
            })
            .collect();
        let (status, value, slope) = classify_increments(&increments)?;
        let mut cumulative = 0.0;
        let trace = self
            .levels
            .iter()
            .zip(&increments)
            .map(|(&(lo, _), &inc)| {
                cumulative += inc;
                TraceRow {
                    theta: lo,
                    increment: inc,
                    cumulative,
                }
            })
            .collect();
        Ok(EnergyResult {
            measure: format!("cap radius {:.6} tilt {gamma}", self.radius),
            status,
            value,
            slope,
            trace,
        })
    }
}

/// Density of `d(x, y)` for `x, y` independent with density `∝ (1 − s/R)^γ` on a cap.
struct PairDensity {
    radius: f64,
    gamma: f64,
    norm: f64,
    gl: (Vec<f64>, Vec<f64>),
}

impl PairDensity {
    fn new(radius: f64, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0) {
            return Err(invalid("gamma", "tilt exponent must be non-negative"));
        }
        let gl = gauss_legendre(32);
        let mut pd = PairDensity {
            radius,
            gamma,
            norm: 1.0,
            gl,
        };
        let mass = pd.integrate(0.0, radius, |s| 2.0 * PI * s.sin() * pd.g(s));
        pd.norm = 1.0 / mass;
        Ok(pd)
    }

    fn g(&self, s: f64) -> f64 {
        if s >= self.radius {
            return 0.0;
        }
        self.norm * (1.0 - s / self.radius).powf(self.gamma)
    }

    fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let (x, w) = &self.gl;
        let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
        x.iter().zip(w).map(|(xi, wi)| wi * f(m + h * xi)).sum::<f64>() * h
    }

    fn eval(&self, theta: f64) -> f64 {
        let r = self.radius;
        let (st, ct) = theta.sin_cos();
        let cos_r = r.cos();
        let inner = |s: f64| -> f64 {
            let (ss, cs) = s.sin_cos();
            let c = (cos_r - cs * ct) / (ss * st);
            if c >= 1.0 {
                return 0.0;
            }
            let beta_max = c.max(-1.0).acos();
            let arc = self.integrate(0.0, beta_max, |b| {
                let cos_sp = (cs * ct + ss * st * b.cos()).clamp(-1.0, 1.0);
                self.g(cos_sp.acos())
            });
            2.0 * PI * ss * self.g(s) * 2.0 * arc
        };
        let mut breaks = vec![0.0, r];
        for b in [theta, r - theta] {
            if b > 0.0 && b < r {
                breaks.push(b);
            }
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        st * breaks.windows(2).map(|w| self.integrate(w[0], w[1], inner)).sum::<f64>()
    }
}

/// Φ-energy of `mu` for a `d`-vector field (kernel at `a = 0`).
pub fn energy(model: &CovarianceModel, d: usize, mu: &Measure, spec: &QuadratureSpec) -> Result<EnergyResult> {
    if d == 0 {
        return Err(invalid("d", "need d ≥ 1"));
    }
    match mu {
        Measure::PointMass(_) => Ok(EnergyResult::infinite(mu.describe())),
        Measure::Cap { cap, gamma } => {
            let q = EnergyQuadrature::new(model, cap.radius, spec)?;
            let mut r = q.energy(d, &vec![0.0; d], *gamma)?;
            r.measure = mu.describe();
            Ok(r)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityEstimate {
    pub value: f64,
    /// Energy per family member, in the order of [`FAMILY_GAMMAS`].
    pub energies: Vec<EnergyResult>,
}

/// `1 / min energy` over the tilted family on `cap`; zero when every member diverges. A lower
/// bound for the capacity over all probability measures on the cap.
pub fn capacity_estimate(model: &CovarianceModel, d: usize, cap: &Cap, spec: &QuadratureSpec) -> Result<CapacityEstimate> {
    let q = EnergyQuadrature::new(model, cap.radius, spec)?;
    capacity_from_quadrature(&q, d)
}

/// Same as [`capacity_estimate`] on a prepared quadrature.
pub fn capacity_from_quadrature(q: &EnergyQuadrature, d: usize) -> Result<CapacityEstimate> {
    let zero = vec![0.0; d];
    let energies: Vec<EnergyResult> = FAMILY_GAMMAS
        .iter()
        .map(|&g| q.energy(d, &zero, g))
        .collect::<Result<_>>()?;
    let min = energies.iter().map(|e| e.value).fold(f64::INFINITY, f64::min);
    Ok(CapacityEstimate {
        value: if min.is_finite() { 1.0 / min } else { 0.0 },
        energies,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrability {
    Integrable,
    Divergent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegrabilityReport {
    pub alpha: f64,
    pub d: usize,
    /// `d(1 − α/2)`, the power of θ in the integrand near 0.
    pub exponent: f64,
    pub classification: Integrability,
    pub numeric_slope: f64,
}

/// Classifies `∫_0^r θ^{d(1−α/2)} sin θ dθ` analytically (exponent `> −2`) and by dyadic
/// refinement with the divergence rule; the two must agree.
pub fn integrability_test(alpha: f64, d: usize, r: f64) -> Result<IntegrabilityReport> {
    if !(alpha > 2.0) {
        return Err(invalid("alpha", format!("need α > 2, got {alpha}")));
    }
    if d == 0 {
        return Err(invalid("d", "need d ≥ 1"));
    }
    if !(r > 0.0 && r < PI) {
        return Err(invalid("r", format!("{r} outside (0, π)")));
    }
    let e = d as f64 * (1.0 - alpha / 2.0);
    let analytic = if e > -2.0 {
        Integrability::Integrable
    } else {
        Integrability::Divergent
    };
    let (x, w) = gauss_legendre(16);
    let increments: Vec<f64> = (0..40)
        .map(|j| {
            let b = r * (-(j as f64)).exp2();
            let a = b / 2.0;
            let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
            x.iter()
                .zip(&w)
                .map(|(xi, wi)| {
                    let t: f64 = m + h * xi;
                    wi * t.powf(e) * t.sin()
                })
                .sum::<f64>()
                * h
        })
        .collect();
    let (status, _, slope) = classify_increments(&increments)?;
    let numeric = match status {
        EnergyStatus::Finite => Integrability::Integrable,
        EnergyStatus::Divergent => Integrability::Divergent,
    };
    if numeric != analytic {
        return Err(Error::Disagreement(format!(
            "α = {alpha}, d = {d}: analytic {analytic:?}, numeric {numeric:?} (slope {slope:.4})"
        )));
    }
    Ok(IntegrabilityReport {
        alpha,
        d,
        exponent: e,
        classification: analytic,
        numeric_slope: slope,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HittingTrend {
    Stable,
    Declining,
    Collapsed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HittingRow {
    pub eps: f64,
    pub hits: usize,
    pub replicates: usize,
    pub frequency: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HittingTable {
    pub d: usize,
    pub rows: Vec<HittingRow>,
    pub trend: HittingTrend,
}

impl HittingTable {
    /// Row at the smallest tolerance.
    pub fn finest(&self) -> &HittingRow {
        self.rows
            .iter()
            .min_by(|a, b| a.eps.total_cmp(&b.eps))
            .expect("table has rows")
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["d", "eps", "hits", "replicates", "frequency", "ci_low", "ci_high"])?;
        for r in &self.rows {
            w.write_record([
                self.d.to_string(),
                r.eps.to_string(),
                r.hits.to_string(),
                r.replicates.to_string(),
                r.frequency.to_string(),
                r.ci_low.to_string(),
                r.ci_high.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Geometric tolerance schedule `eps_max · 2^{-j}`, `j = 0..n`.
pub fn eps_schedule(eps_max: f64, n: usize) -> Vec<f64> {
    (0..n).map(|j| eps_max * (-(j as f64)).exp2()).collect()
}

/// Smallest tolerance the grid resolves: a quarter of the mean absolute increment
/// `σ(h)√(2/π)` between neighbouring points.
pub fn resolvable_eps(model: &CovarianceModel, h: f64) -> Result<f64> {
    Ok(0.25 * model.variogram(h)?.sqrt() * (2.0 / PI).sqrt())
}

pub struct HittingSetup<'a> {
    pub spectrum: &'a PowerSpectrum,
    pub d: usize,
    pub cap: Cap,
    pub t: Vec<f64>,
    pub eps: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
    /// Equiangular grid covering the cap.
    pub grid: &'a Grid,
}

/// ε-hitting frequencies of `T^{-1}(t) ∩ cap` over independent replicates.
pub fn hitting_probability_mc(setup: &HittingSetup) -> Result<HittingTable> {
    if setup.replicates < 100 {
        return Err(Error::InsufficientReplicates {
            min: 100,
            got: setup.replicates,
        });
    }
    if setup.eps.is_empty() {
        return Err(invalid("eps", "schedule is empty"));
    }
    if setup.t.len() != setup.d {
        return Err(invalid("t", format!("level has dimension {}, need {}", setup.t.len(), setup.d)));
    }
    let h = setup.grid.spacing()?;
    let floor = resolvable_eps(&CovarianceModel::new(setup.spectrum.clone()), h)?;
    let finest = setup.eps.iter().copied().fold(f64::INFINITY, f64::min);
    if finest < floor {
        return Err(Error::GridTooCoarse(format!(
            "eps {finest:.3e} below the resolvable tolerance {floor:.3e} at spacing {h:.3e}"
        )));
    }
    let l = setup.spectrum.l_max();
    let hits: Vec<Vec<bool>> = (0..setup.replicates)
        .into_par_iter()
        .map(|rep| {
            let f = vector_field(setup.spectrum, setup.d, (0, l), setup.grid, derive_seed(setup.seed, rep as u64))?;
            setup
                .eps
                .iter()
                .map(|&e| hitting_indicator(&f, &setup.t, &setup.cap, e))
                .collect()
        })
        .collect::<Result<_>>()?;
    let n = setup.replicates;
    let rows: Vec<HittingRow> = setup
        .eps
        .iter()
        .enumerate()
        .map(|(j, &eps)| {
            let k = hits.iter().filter(|h| h[j]).count();
            let (lo, hi) = wilson_interval(k, n);
            HittingRow {
                eps,
                hits: k,
                replicates: n,
                frequency: k as f64 / n as f64,
                ci_low: lo,
                ci_high: hi,
            }
        })
        .collect();
    let coarsest = rows.iter().max_by(|a, b| a.eps.total_cmp(&b.eps)).expect("nonempty");
    let fine = rows.iter().min_by(|a, b| a.eps.total_cmp(&b.eps)).expect("nonempty");
    let trend = if fine.hits == 0 {
        HittingTrend::Collapsed
    } else if fine.frequency < 0.5 * coarsest.frequency {
        HittingTrend::Declining
    } else {
        HittingTrend::Stable
    };
    Ok(HittingTable {
        d: setup.d,
        rows,
        trend,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::EquiangularGrid;
    use crate::spectrum::{example2_power_spectrum, power_law_spectrum};
    use std::f64::consts::FRAC_PI_2;

    fn model(alpha: f64, l: usize) -> CovarianceModel {
        CovarianceModel::with_tail_correction(power_law_spectrum(alpha, l).unwrap())
    }

    #[test]
    fn kernel_is_largest_at_zero_level() {
        let m = model(3.0, 2048);
        for theta in [0.01, 0.3, 1.5, 3.0] {
            let k0 = phi_kernel(&m, theta, 2, &[0.0, 0.0]).unwrap();
            let ka = phi_kernel(&m, theta, 2, &[0.7, -1.2]).unwrap();
            assert!(ka <= k0);
        }
        assert!(phi_kernel(&m, 0.0, 1, &[0.0]).is_err());
    }

    #[test]
    fn example2_kernel_at_right_angle() {
        let m = CovarianceModel::new(example2_power_spectrum(4001).unwrap());
        let k = phi_kernel(&m, FRAC_PI_2, 1, &[0.0]).unwrap();
        assert!((k - 1.0 / (2.0 * PI)).abs() < 1e-3);
    }

    #[test]
    fn kernel_small_angle_slope() {
        let m = model(3.0, 1 << 16);
        let thetas: Vec<f64> = (0..8).map(|i| 1e-3 * 10f64.powf(i as f64 / 7.0)).collect();
        let x: Vec<f64> = thetas.iter().map(|t| t.ln()).collect();
        let y: Vec<f64> = thetas.iter().map(|&t| phi_kernel(&m, t, 2, &[0.0, 0.0]).unwrap().ln()).collect();
        let fit = linear_fit(&x, &y).unwrap();
        assert!((fit.slope + 1.0).abs() < 0.1, "{}", fit.slope);
    }

    #[test]
    fn pair_density_is_a_probability_density() {
        for gamma in FAMILY_GAMMAS {
            let pd = PairDensity::new(0.2, gamma).unwrap();
            let total: f64 = (0..64)
                .map(|j| {
                    let (a, b) = (0.4 * j as f64 / 64.0, 0.4 * (j + 1) as f64 / 64.0);
                    pd.integrate(a, b, |t| pd.eval(t))
                })
                .sum();
            assert!((total - 1.0).abs() < 1e-3, "γ = {gamma}: {total}");
        }
    }

    #[test]
    fn energy_classification() {
        let spec = QuadratureSpec {
            theta_min: 64.0 / (1 << 20) as f64,
            nodes: 12,
        };
        let cap = Cap::new(SpherePoint::north_pole(), 0.1).unwrap();
        let m = model(2.5, 1 << 20);
        let e = energy(&m, 1, &Measure::uniform(cap), &spec).unwrap();
        assert_eq!(e.status, EnergyStatus::Finite);
        assert!(e.value >= (2.0 * PI).powi(-1));
        let m3 = model(3.0, 1 << 20);
        let e = energy(&m3, 4, &Measure::uniform(cap), &spec).unwrap();
        assert_eq!(e.status, EnergyStatus::Divergent, "{e:?}");
        let p = energy(&m3, 1, &Measure::PointMass(SpherePoint::north_pole()), &spec).unwrap();
        assert!(p.is_infinite());
    }

    #[test]
    fn var_identity_holds_on_nodes() {
        let m = model(3.0, 4096);
        let q = EnergyQuadrature::new(&m, 0.2, &QuadratureSpec::for_model(&m)).unwrap();
        assert!(q.var_identity_residual() < 1e-10);
    }

    #[test]
    fn capacity_grows_with_the_cap() {
        let m = model(3.0, 1 << 14);
        let spec = QuadratureSpec::for_model(&m);
        let small = capacity_estimate(&m, 1, &Cap::new(SpherePoint::north_pole(), 0.1).unwrap(), &spec).unwrap();
        let big = capacity_estimate(&m, 1, &Cap::new(SpherePoint::north_pole(), 0.3).unwrap(), &spec).unwrap();
        assert!(small.value > 0.0 && small.value <= big.value);
    }

    #[test]
    fn integrability_examples() {
        let r = integrability_test(3.0, 2, 0.5).unwrap();
        assert_eq!(r.classification, Integrability::Integrable);
        assert!((r.exponent + 1.0).abs() < 1e-15);
        assert_eq!(integrability_test(3.0, 4, 0.5).unwrap().classification, Integrability::Divergent);
        assert_eq!(integrability_test(2.5, 7, 0.5).unwrap().classification, Integrability::Integrable);
        assert!(integrability_test(2.0, 1, 0.5).is_err());
    }

    #[test]
    fn hitting_far_level_and_replicate_floor() {
        let s = power_law_spectrum(2.5, 32).unwrap();
        let g = Grid::Equiangular(EquiangularGrid::polar_cap(FRAC_PI_2, 24, 66).unwrap());
        let cap = Cap::new(SpherePoint::north_pole(), FRAC_PI_2).unwrap();
        let mut setup = HittingSetup {
            spectrum: &s,
            d: 1,
            cap,
            t: vec![40.0],
            eps: vec![0.2, 0.1],
            replicates: 100,
            seed: 9,
            grid: &g,
        };
        let table = hitting_probability_mc(&setup).unwrap();
        assert!(table.rows.iter().all(|r| r.hits == 0));
        assert_eq!(table.trend, HittingTrend::Collapsed);
        setup.replicates = 50;
        assert!(hitting_probability_mc(&setup).is_err());
    }
}
