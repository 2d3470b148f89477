//! Schoenberg covariance, variogram, the scale function `ρ_α`, Gaussian conditioning and
//! the bivariate density of a pair of field values.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::geom::{geodesic_distance, SpherePoint};
use crate::spectrum::PowerSpectrum;

/// Ridge added to the diagonal when a conditioning matrix is not numerically positive definite.
pub const RIDGE: f64 = 1e-12;

/// Default radius below which local (small-scale) statements are checked.
pub const DEFAULT_DELTA0: f64 = 0.1;

/// Isotropic covariance `C(θ) = Σ_ℓ (2ℓ+1)/(4π) C_ℓ P_ℓ(cos θ)` of a truncated spectrum.
#[derive(Debug, Clone)]
pub struct CovarianceModel {
    spectrum: PowerSpectrum,
    weights: Vec<f64>,
    variance: f64,
    remainder: f64,
    tail: f64,
}

impl CovarianceModel {
    pub fn new(spectrum: PowerSpectrum) -> Self {
        let weights = spectrum.weights();
        let variance = weights.iter().sum();
        let remainder = spectrum.remainder_weight(spectrum.l_max() + 1);
        CovarianceModel {
            spectrum,
            weights,
            variance,
            remainder,
            tail: 0.0,
        }
    }

    /// Model whose variogram and variance include the estimated weight of the degrees above
    /// `L_max` (`1 − P_ℓ` averages to 1 there once `ℓθ ≫ 1`). Small-angle quantities then keep
    /// their power-law form down to `θ ≈ 1/L_max` instead of flattening into the smooth regime.
    pub fn with_tail_correction(spectrum: PowerSpectrum) -> Self {
        let mut m = Self::new(spectrum);
        m.tail = m.spectrum.tail_estimate();
        m.variance += m.tail;
        m
    }

    pub fn spectrum(&self) -> &PowerSpectrum {
        &self.spectrum
    }

    /// `C(0)`, the pointwise variance.
    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Bound on the covariance error caused by truncating the spectrum at `L_max`.
    pub fn truncation_bound(&self) -> f64 {
        self.remainder
    }

    pub fn covariance(&self, theta: f64) -> Result<f64> {
        check_angle(theta)?;
        let x = theta.cos();
        let mut p0 = 1.0;
        let mut p1 = x;
        let mut sum = self.weights[0];
        if let Some(w1) = self.weights.get(1) {
            sum += w1 * x;
        }
        for (l, w) in self.weights.iter().enumerate().skip(2) {
            let lf = l as f64;
            let p2 = ((2.0 * lf - 1.0) * x * p1 - (lf - 1.0) * p0) / lf;
            sum += w * p2;
            p0 = p1;
            p1 = p2;
        }
        Ok(sum)
    }

    /// Covariance together with its truncation bound.
    pub fn covariance_with_bound(&self, theta: f64) -> Result<(f64, f64)> {
        Ok((self.covariance(theta)?, self.remainder))
    }

    /// `σ²(θ) = E[(T(x) − T(y))²] = 2 Σ_ℓ (2ℓ+1)/(4π) C_ℓ (1 − P_ℓ(cos θ))`, summed without
    /// cancellation so that it keeps full relative accuracy at small θ.
    pub fn variogram(&self, theta: f64) -> Result<f64> {
        check_angle(theta)?;
        Ok(2.0 * self.half_variogram(theta))
    }

    pub(crate) fn half_variogram(&self, theta: f64) -> f64 {
        let s = (0.5 * theta).sin();
        let u = 2.0 * s * s;
        let x = theta.cos();
        let mut q0 = 0.0;
        let mut q1 = u;
        let mut sum = self.weights.get(1).map_or(0.0, |w| w * u);
        for (l, w) in self.weights.iter().enumerate().skip(2) {
            let lf = l as f64;
            let a = 2.0 * lf - 1.0;
            let q2 = (a * u + a * x * q1 - (lf - 1.0) * q0) / lf;
            sum += w * q2;
            q0 = q1;
            q1 = q2;
        }
        sum + self.tail
    }

    /// Variogram and its truncation bound (`1 − P_ℓ ≤ 2`).
    pub fn variogram_with_bound(&self, theta: f64) -> Result<(f64, f64)> {
        Ok((self.variogram(theta)?, 4.0 * self.remainder))
    }

    /// Correlation `C(θ)/C(0)` and `1 − C(θ)²/C(0)²`, the latter without cancellation.
    pub fn correlation(&self, theta: f64) -> Result<(f64, f64)> {
        check_angle(theta)?;
        let one_minus = self.half_variogram(theta) / self.variance;
        let rho = 1.0 - one_minus;
        Ok((rho, one_minus * (2.0 - one_minus)))
    }

    /// Rows `(theta, value, tail_bound)` for covariance or variogram tables.
    pub fn table(&self, thetas: &[f64], kind: TableKind) -> Result<Vec<TableRow>> {
        thetas
            .iter()
            .map(|&theta| {
                let (value, tail_bound) = match kind {
                    TableKind::Covariance => self.covariance_with_bound(theta)?,
                    TableKind::Variogram => self.variogram_with_bound(theta)?,
                };
                Ok(TableRow {
                    theta,
                    value,
                    tail_bound,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    Covariance,
    Variogram,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableRow {
    pub theta: f64,
    pub value: f64,
    pub tail_bound: f64,
}

pub fn write_table_csv(rows: &[TableRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn check_angle(theta: f64) -> Result<()> {
    if !(0.0..=PI).contains(&theta) {
        return Err(invalid("theta", format!("{theta} not in [0, π]")));
    }
    Ok(())
}

/// `ρ_α(r) = r^{(α−2)/2}`.
pub fn rho_alpha(r: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 2.0) {
        return Err(invalid("alpha", format!("need α > 2, got {alpha}")));
    }
    if !(r >= 0.0) {
        return Err(invalid("r", format!("need r ≥ 0, got {r}")));
    }
    Ok(r.powf(0.5 * (alpha - 2.0)))
}

/// The scale function `ρ_α` as a value type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleFunction {
    alpha: f64,
}

impl ScaleFunction {
    pub fn new(alpha: f64) -> Result<Self> {
        rho_alpha(0.0, alpha)?;
        Ok(ScaleFunction { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eval(&self, r: f64) -> f64 {
        r.max(0.0).powf(0.5 * (self.alpha - 2.0))
    }
}

/// Conditional variance together with whether a ridge had to be added.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionalVariance {
    pub value: f64,
    pub regularized: bool,
}

/// `Var(T(x) | T(x_1), …, T(x_n))` via the Schur complement of the joint covariance.
pub fn conditional_variance(
    model: &CovarianceModel,
    x: &SpherePoint,
    conditioners: &[SpherePoint],
) -> Result<ConditionalVariance> {
    let c0 = model.variance();
    let n = conditioners.len();
    if n == 0 {
        return Ok(ConditionalVariance {
            value: c0,
            regularized: false,
        });
    }
    let cov = |p: &SpherePoint, q: &SpherePoint| -> f64 {
        let d = geodesic_distance(p, q);
        c0 - model.half_variogram(d)
    };
    let mut sigma = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        sigma[(i, i)] = c0;
        for j in 0..i {
            let v = cov(&conditioners[i], &conditioners[j]);
            sigma[(i, j)] = v;
            sigma[(j, i)] = v;
        }
    }
    let b = DVector::from_iterator(n, conditioners.iter().map(|c| cov(x, c)));
    let mut regularized = false;
    let chol = match sigma.clone().cholesky() {
        Some(c) => c,
        None => {
            regularized = true;
            let mut ridged = sigma;
            for i in 0..n {
                ridged[(i, i)] += RIDGE;
            }
            ridged.cholesky().ok_or_else(|| {
                Error::InvalidParameter {
                    name: "conditioners",
                    reason: "covariance matrix is singular even after regularization".into(),
                }
            })?
        }
    };
    // bᵀ Σ⁻¹ b = |L⁻¹ b|².
    let y = chol
        .l()
        .solve_lower_triangular(&b)
        .ok_or_else(|| invalid("conditioners", "triangular solve failed"))?;
    let value = (c0 - y.norm_squared()).clamp(0.0, c0);
    Ok(ConditionalVariance { value, regularized })
}

/// Conditional variance divided by `min_k ρ_α²(d(x, x_k))`.
///
/// With `x0` given, the pair `(x0, d(x, x0))` joins the conditioning set, which is the
/// form needed for the increment field `T(·) − T(x0)`.
pub fn slnd_ratio(
    model: &CovarianceModel,
    x: &SpherePoint,
    conditioners: &[SpherePoint],
    x0: Option<&SpherePoint>,
) -> Result<f64> {
    let alpha = model.spectrum().alpha();
    let mut all: Vec<SpherePoint> = conditioners.to_vec();
    if let Some(p) = x0 {
        all.push(*p);
    }
    if all.is_empty() {
        return Err(invalid("conditioners", "need at least one conditioning point"));
    }
    let min_d = all
        .iter()
        .map(|c| geodesic_distance(x, c))
        .fold(f64::INFINITY, f64::min);
    if min_d == 0.0 {
        return Ok(0.0);
    }
    let cv = conditional_variance(model, x, &all)?;
    Ok(cv.value / rho_alpha(min_d, alpha)?.powi(2))
}

/// Density of `(T(x), T(y))` at `t2` for `d(x, y) = θ`, with unit variances and
/// correlation `C(θ)/C(0)`.
pub fn joint_density_p(model: &CovarianceModel, theta: f64, t2: [f64; 2]) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(invalid("theta", "θ = 0 gives a singular covariance matrix"));
    }
    let (rho, det) = model.correlation(theta)?;
    if !(det > 0.0) {
        return Err(invalid("theta", format!("correlation {rho} is degenerate")));
    }
    Ok(bivariate_density(rho, det, t2))
}

pub(crate) fn bivariate_density(rho: f64, det: f64, t: [f64; 2]) -> f64 {
    let q = (t[0] * t[0] - 2.0 * rho * t[0] * t[1] + t[1] * t[1]) / det;
    (-0.5 * q).exp() / (2.0 * PI * det.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{example2_power_spectrum, power_law_spectrum};

    fn alpha3() -> CovarianceModel {
        CovarianceModel::new(power_law_spectrum(3.0, 2048).unwrap())
    }

    #[test]
    fn covariance_at_zero_is_one() {
        let m = alpha3();
        assert!((m.covariance(0.0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(m.variogram(0.0).unwrap(), 0.0);
        assert!(m.covariance(4.0).is_err());
    }

    #[test]
    fn example2_covariance_is_linear() {
        let m = CovarianceModel::new(example2_power_spectrum(2001).unwrap());
        assert!(m.covariance(PI / 2.0).unwrap().abs() < 2e-3);
        assert!((m.covariance(PI).unwrap() + 1.0).abs() < 5e-3);
        let d = joint_density_p(&m, PI / 2.0, [0.0, 0.0]).unwrap();
        assert!((d - 1.0 / (2.0 * PI)).abs() < 1e-3);
    }

    #[test]
    fn variogram_matches_two_minus_twice_covariance() {
        let m = alpha3();
        for &t in &[0.3, 1.0, 2.5] {
            let v = m.variogram(t).unwrap();
            let c = m.covariance(t).unwrap();
            assert!((v - (2.0 - 2.0 * c)).abs() < 1e-12);
        }
    }

    #[test]
    fn rho_values() {
        assert_eq!(rho_alpha(0.0, 3.0).unwrap(), 0.0);
        assert!((rho_alpha(0.04, 3.0).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(rho_alpha(0.37, 4.0).unwrap(), 0.37);
        assert!(rho_alpha(0.1, 2.0).is_err());
    }

    #[test]
    fn conditioning_closed_forms() {
        let m = alpha3();
        let x = SpherePoint::new(1.0, 1.0).unwrap();
        let self_cond = conditional_variance(&m, &x, &[x]).unwrap();
        assert!(self_cond.value < 1e-8);
        let y = SpherePoint::new(2.5, 3.0).unwrap();
        let c = m.covariance(x.distance(&y)).unwrap();
        let one = conditional_variance(&m, &x, &[y]).unwrap();
        assert!((one.value - (1.0 - c * c)).abs() < 1e-12);
        let ratio = slnd_ratio(&m, &x, &[y], None).unwrap();
        let expect = (1.0 - c * c) / rho_alpha(x.distance(&y), 3.0).unwrap().powi(2);
        assert!((ratio - expect).abs() < 1e-12);
        assert_eq!(slnd_ratio(&m, &x, &[x, y], None).unwrap(), 0.0);
    }

    #[test]
    fn more_conditioners_never_increase_variance() {
        let m = alpha3();
        let x = SpherePoint::new(1.0, 1.0).unwrap();
        let pts: Vec<SpherePoint> = (0..6).map(|k| x.offset(0.01 * (k + 1) as f64, k as f64)).collect();
        let mut last = f64::INFINITY;
        for n in 1..=pts.len() {
            let v = conditional_variance(&m, &x, &pts[..n]).unwrap().value;
            assert!(v <= last + 1e-14);
            last = v;
        }
    }

    #[test]
    fn duplicate_conditioners_are_regularized() {
        let m = alpha3();
        let x = SpherePoint::new(1.0, 1.0).unwrap();
        let y = SpherePoint::new(1.2, 1.0).unwrap();
        let r = conditional_variance(&m, &x, &[y, y]).unwrap();
        assert!(r.regularized);
        let single = conditional_variance(&m, &x, &[y]).unwrap();
        assert!((r.value - single.value).abs() < 1e-6);
    }

    #[test]
    fn density_identity_and_mass() {
        let m = alpha3();
        for &t in &[1e-3, 0.1, 1.0, 3.0] {
            let p = joint_density_p(&m, t, [0.0, 0.0]).unwrap();
            let c = m.covariance(t).unwrap();
            let lhs = (2.0 * PI * p).powi(-2);
            assert!((lhs - (1.0 - c * c)).abs() < 1e-10, "θ={t}");
        }
        let h = 0.05;
        let mut mass = 0.0;
        for i in -200..200 {
            for j in -200..200 {
                let t = [(i as f64 + 0.5) * h, (j as f64 + 0.5) * h];
                mass += joint_density_p(&m, 0.5, t).unwrap() * h * h;
            }
        }
        assert!((mass - 1.0).abs() < 1e-3);
        assert!(joint_density_p(&m, 0.0, [0.0, 0.0]).is_err());
    }

    #[test]
    fn csv_export() {
        let m = alpha3();
        let rows = m.table(&[0.1, 0.2], TableKind::Variogram).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.csv");
        write_table_csv(&rows, &p).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        assert!(text.starts_with("theta,value,tail_bound"));
        assert_eq!(text.lines().count(), 3);
    }
}
