//! Angular power spectra: power-law families, two closed-form families, tail sums and
//! CSV/JSON persistence.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::harmonics::legendre_complement;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ConditionA,
    Example1,
    Example2,
    Custom,
}

/// Declared bound `C_ℓ ≤ coefficient · ℓ^{-exponent}` for degrees beyond the stored range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailModel {
    pub coefficient: f64,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSpectrum {
    values: Vec<f64>,
    alpha: f64,
    k0: Option<f64>,
    provenance: Provenance,
    normalized: bool,
    tail: Option<TailModel>,
    warning: Option<String>,
}

impl PowerSpectrum {
    /// A custom spectrum with `C_ℓ ≥ 0` and no declared tail beyond `values.len() − 1`.
    pub fn custom(values: Vec<f64>, alpha: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("values", "spectrum needs at least C_0"));
        }
        if values.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(invalid("values", "C_ℓ must be finite and nonnegative"));
        }
        Ok(PowerSpectrum {
            values,
            alpha,
            k0: None,
            provenance: Provenance::Custom,
            normalized: false,
            tail: None,
            warning: None,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, ell: usize) -> f64 {
        self.values.get(ell).copied().unwrap_or(0.0)
    }

    pub fn l_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn k0(&self) -> Option<f64> {
        self.k0
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn tail(&self) -> Option<TailModel> {
        self.tail
    }

    pub fn warning(&self) -> Option<&str> {
        self.warning.as_deref()
    }

    /// Whether the spectrum satisfies the regularity hypothesis with `2 < α < 4` that the
    /// theory-facing diagnostics require.
    pub fn supports_theory(&self) -> bool {
        self.provenance == Provenance::ConditionA && self.alpha > 2.0 && self.alpha < 4.0
    }

    /// `Σ_{ℓ ≤ L_max} (2ℓ+1) C_ℓ / (4π)`, the variance of the truncated field.
    pub fn variance(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(l, c)| (2 * l + 1) as f64 * c)
            .sum::<f64>()
            / (4.0 * PI)
    }

    /// `(2ℓ+1) C_ℓ / (4π)` for every stored degree.
    pub fn weights(&self) -> Vec<f64> {
        self.values
            .iter()
            .enumerate()
            .map(|(l, c)| (2 * l + 1) as f64 * c / (4.0 * PI))
            .collect()
    }

    /// Upper bound on `Σ_{ℓ > L_max, ℓ ≥ from} (2ℓ+1) C_ℓ / (4π)` from the declared tail.
    pub fn remainder_weight(&self, from: usize) -> f64 {
        let Some(t) = self.tail else { return 0.0 };
        let start = from.max(self.l_max() + 1) as f64;
        // The summand is decreasing, so the sum over ℓ ≥ start is below the integral from start − 1.
        let x = (start - 1.0).max(1.0);
        let a = t.exponent;
        if a <= 2.0 {
            return f64::INFINITY;
        }
        t.coefficient / (4.0 * PI) * (2.0 * x.powf(2.0 - a) / (a - 2.0) + x.powf(1.0 - a) / (a - 1.0))
    }

    /// Midpoint-rule estimate of `Σ_{ℓ > L_max} (2ℓ+1) C_ℓ / (4π)` from the declared tail,
    /// zero without one.
    pub fn tail_estimate(&self) -> f64 {
        let Some(t) = self.tail else { return 0.0 };
        let a = t.exponent;
        if a <= 2.0 {
            return f64::INFINITY;
        }
        let x = self.l_max() as f64 + 0.5;
        t.coefficient / (4.0 * PI) * (2.0 * x.powf(2.0 - a) / (a - 2.0) + x.powf(1.0 - a) / (a - 1.0))
    }

    /// Same spectrum truncated to degrees `0..=l_max` (the dropped part moves into the tail
    /// bound only if a tail model is declared).
    pub fn truncated(&self, l_max: usize) -> Self {
        let mut s = self.clone();
        s.values.truncate(l_max + 1);
        s
    }

    /// Stable 64-bit digest of values and metadata.
    pub fn hash64(&self) -> u64 {
        let mut h = Sha256::new();
        for v in &self.values {
            h.update(v.to_le_bytes());
        }
        h.update(self.alpha.to_le_bytes());
        h.update([self.provenance as u8, self.normalized as u8]);
        let out = h.finalize();
        u64::from_le_bytes(out[..8].try_into().expect("digest has 32 bytes"))
    }

    /// Writes `ell,C_ell` rows to `path` and the metadata sidecar next to it.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["ell", "C_ell"])?;
        for (l, c) in self.values.iter().enumerate() {
            w.write_record([l.to_string(), format!("{c:e}")])?;
        }
        w.flush()?;
        let meta = Metadata {
            alpha: self.alpha,
            k0: self.k0,
            provenance: self.provenance,
            normalized: self.normalized,
            tail: self.tail,
            warning: self.warning.clone(),
        };
        std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let mut values = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::Format(format!("row {}: expected 2 columns", i + 2)));
            }
            let ell: usize = rec[0]
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("row {}: bad degree {:?}", i + 2, &rec[0])))?;
            if ell != i {
                return Err(Error::Format(format!("row {}: expected degree {i}, got {ell}", i + 2)));
            }
            let c: f64 = rec[1]
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("row {}: bad value {:?}", i + 2, &rec[1])))?;
            values.push(c);
        }
        let meta: Metadata = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
        let mut s = PowerSpectrum::custom(values, meta.alpha)?;
        s.k0 = meta.k0;
        s.provenance = meta.provenance;
        s.normalized = meta.normalized;
        s.tail = meta.tail;
        s.warning = meta.warning;
        if s.provenance == Provenance::ConditionA {
            check_condition_a(&s.values, s.alpha, s.k0.unwrap_or(f64::INFINITY))?;
        }
        Ok(s)
    }
}

#[derive(Serialize, Deserialize)]
struct Metadata {
    alpha: f64,
    #[serde(rename = "K0")]
    k0: Option<f64>,
    provenance: Provenance,
    normalized: bool,
    tail: Option<TailModel>,
    warning: Option<String>,
}

fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn check_condition_a(values: &[f64], alpha: f64, k0: f64) -> Result<()> {
    // Normalization rescales every C_ℓ by the same factor, so the check is on the ratio spread.
    let ratios: Vec<f64> = values
        .iter()
        .enumerate()
        .skip(1)
        .map(|(l, c)| (l as f64).powf(alpha) * c)
        .collect();
    if ratios.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(invalid("values", "C_ℓ must be positive for ℓ ≥ 1"));
    }
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    if hi / lo > k0 * k0 * (1.0 + 1e-12) {
        return Err(invalid("values", format!("ℓ^α C_ℓ spread {:.3} exceeds K0² = {:.3}", hi / lo, k0 * k0)));
    }
    Ok(())
}

/// `C_0 = 0`, `C_ℓ = ℓ^{-α} g(ℓ)` for `1 ≤ ℓ ≤ l_max`. `K0` is the smallest constant with
/// `K0^{-1} ≤ g ≤ K0` on the stored range.
pub fn condition_a_spectrum(alpha: f64, g: impl Fn(usize) -> f64, l_max: usize) -> Result<PowerSpectrum> {
    if !(alpha > 2.0) || !alpha.is_finite() {
        return Err(invalid("alpha", format!("need α > 2, got {alpha}")));
    }
    if l_max == 0 {
        return Err(invalid("l_max", "must be at least 1"));
    }
    let mut values = vec![0.0; l_max + 1];
    let mut k0: f64 = 1.0;
    for (l, v) in values.iter_mut().enumerate().skip(1) {
        let gl = g(l);
        if !gl.is_finite() || gl <= 0.0 {
            return Err(invalid("g", format!("g({l}) = {gl} is not a positive finite value")));
        }
        k0 = k0.max(gl).max(1.0 / gl);
        *v = (l as f64).powf(-alpha) * gl;
    }
    Ok(PowerSpectrum {
        values,
        alpha,
        k0: Some(k0),
        provenance: Provenance::ConditionA,
        normalized: false,
        tail: Some(TailModel {
            coefficient: k0,
            exponent: alpha,
        }),
        warning: None,
    })
}

/// Normalized pure power law `C_ℓ ∝ ℓ^{-α}`.
pub fn power_law_spectrum(alpha: f64, l_max: usize) -> Result<PowerSpectrum> {
    normalize(&condition_a_spectrum(alpha, |_| 1.0, l_max)?)
}

/// Rescales so that `Σ_{ℓ ≤ L_max} (2ℓ+1) C_ℓ / (4π) = 1`.
pub fn normalize(s: &PowerSpectrum) -> Result<PowerSpectrum> {
    let v = s.variance();
    if !(v > 0.0) {
        return Err(invalid("spectrum", "all-zero spectrum cannot be normalized"));
    }
    let mut out = s.clone();
    out.normalized = true;
    if (v - 1.0).abs() <= 1e-14 {
        return Ok(out);
    }
    for c in &mut out.values {
        *c /= v;
    }
    // A second pass absorbs the rounding of the first.
    let v2 = out.variance();
    for c in &mut out.values {
        *c /= v2;
    }
    if let Some(t) = &mut out.tail {
        t.coefficient /= v * v2;
    }
    Ok(out)
}

/// Idealized spectrum `C_ℓ = ℓ^{-(2H+2)}` (`C_0 = 0`) with optional odd-degree
/// corrections `(2j+1)^{-2} (2π)^{-(2j+1)}` added at degrees `2j+1`.
pub fn example1_spectrum(h: f64, l_max: usize, odd_terms: bool) -> Result<PowerSpectrum> {
    if !(h > 0.0 && h < 1.0) {
        return Err(invalid("h", format!("need 0 < H < 1, got {h}")));
    }
    if l_max == 0 {
        return Err(invalid("l_max", "must be at least 1"));
    }
    let alpha = 2.0 * h + 2.0;
    let mut values = vec![0.0; l_max + 1];
    for (l, v) in values.iter_mut().enumerate().skip(1) {
        *v = (l as f64).powf(-alpha);
        if odd_terms && l % 2 == 1 {
            let lf = l as f64;
            *v += lf.powi(-2) * (-lf * (2.0 * PI).ln()).exp();
        }
    }
    let warning = (h >= 0.5).then(|| format!("H = {h} ≥ 1/2: α = {alpha} is outside (2, 3)"));
    Ok(PowerSpectrum {
        values,
        alpha,
        k0: Some(if odd_terms { 1.0 + 1.0 / (2.0 * PI) } else { 1.0 }),
        provenance: Provenance::Example1,
        normalized: false,
        tail: Some(TailModel {
            coefficient: 1.0 + 1.0 / (2.0 * PI),
            exponent: alpha,
        }),
        warning,
    })
}

/// Ratio of consecutive terms `t_{n+1}/t_n` of the double-factorial series.
fn example2_term_ratio(n: usize, ell: usize) -> f64 {
    let n = n as f64;
    let l = ell as f64;
    (2.0 * n + 1.0).powi(2) / ((2.0 * n + 2.0 * l + 5.0) * (2.0 * n - 2.0 * l + 2.0))
}

/// `ln t_ℓ = 2 ln (2ℓ−1)!! − ln (4ℓ+3)!!`, the first term of the series.
fn example2_ln_first_term(ell: usize) -> f64 {
    let mut s = 0.0;
    for k in 1..=ell {
        s += 2.0 * ((2 * k - 1) as f64).ln();
    }
    for k in 1..=(2 * ell + 2) {
        s -= ((2 * k - 1) as f64).ln();
    }
    s
}

/// Partial sums of `C_ℓ = Σ_{n ≥ ℓ} [(2n−1)!!]² / ((2n+2ℓ+3)!! (2n−2ℓ)!!)`, terms by ratio
/// recursion from a log-space first term.
///
/// Stops once the next term falls below `1e-15` times the running sum; fails with
/// [`Error::NotConverged`] if that takes more than `truncation` terms.
pub fn example2_spectrum(ell: usize, truncation: usize) -> Result<f64> {
    if truncation == 0 {
        return Err(invalid("truncation", "must be at least 1"));
    }
    let mut term = example2_ln_first_term(ell).exp();
    let mut sum = 0.0;
    for n in ell..ell + truncation {
        sum += term;
        term *= example2_term_ratio(n, ell);
        if term < 1e-15 * sum {
            return Ok(sum);
        }
    }
    Err(Error::NotConverged {
        terms: truncation,
        partial: sum,
        next_term: term,
    })
}

/// Partial sum of the first `terms` terms of the series (no convergence test).
pub fn example2_partial_sum(ell: usize, terms: usize) -> f64 {
    let mut term = example2_ln_first_term(ell).exp();
    let mut sum = 0.0;
    for n in ell..ell + terms {
        sum += term;
        term *= example2_term_ratio(n, ell);
    }
    sum
}

/// Closed form of the same series: `C_0 = π/8`, `C_{ℓ+1} = C_ℓ (2ℓ+1)² / (4(ℓ+2)²)`.
pub fn example2_closed_form(l_max: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(l_max + 1);
    let mut v = PI / 8.0;
    for l in 0..=l_max {
        c.push(v);
        let lf = l as f64;
        v *= (2.0 * lf + 1.0).powi(2) / (4.0 * (lf + 2.0).powi(2));
    }
    c
}

/// Schoenberg spectrum of the covariance `1 − (2/π)θ`, degrees `0..=l_max`.
///
/// Only odd degrees carry power: `C_{2j+1} = 8·c_j` with `c_j` the double-factorial series
/// above. The result is not normalized (its truncated variance is slightly below 1) and is
/// not of condition-A type since even degrees vanish.
pub fn example2_power_spectrum(l_max: usize) -> Result<PowerSpectrum> {
    if l_max == 0 {
        return Err(invalid("l_max", "must be at least 1"));
    }
    let series = example2_closed_form(l_max / 2);
    let mut values = vec![0.0; l_max + 1];
    for (j, c) in series.iter().enumerate() {
        let n = 2 * j + 1;
        if n <= l_max {
            values[n] = 8.0 * c;
        }
    }
    Ok(PowerSpectrum {
        values,
        alpha: 3.0,
        k0: None,
        provenance: Provenance::Example2,
        normalized: false,
        // c_j ≤ j^{-3}/8 and j = (n−1)/2 give C_n ≤ 8/(n−1)³ ≤ 8.1 n^{-3} for n > 2000.
        tail: Some(TailModel {
            coefficient: if l_max >= 2000 { 8.1 } else { 64.0 },
            exponent: 3.0,
        }),
        warning: None,
    })
}

/// Area of the intersection of two caps of radius `r` whose centers are `theta` apart.
pub fn cap_overlap_psi(theta: f64, r: f64) -> f64 {
    let cap = 2.0 * PI * (1.0 - r.cos());
    if theta <= 0.0 {
        return cap;
    }
    if theta >= 2.0 * r {
        return 0.0;
    }
    // Each lens half is cut off by the great circle bisecting the two centers. With γ the
    // half-angle at a center subtended by the chord, the half-lens is a cap sector minus a
    // spherical triangle.
    let c = ((0.5 * theta).tan() / r.tan()).clamp(-1.0, 1.0);
    let gamma = c.acos();
    let delta = c.atan2(r.cos() * (1.0 - c * c).sqrt());
    let area = 4.0 * (PI / 2.0 - delta - gamma * r.cos());
    area.clamp(0.0, cap)
}

/// `Σ_{ℓ=1}^{l_cut} (2ℓ+1)/(4π) C_ℓ (1 − P_ℓ(cos θ))`.
pub fn tail_sum_low(s: &PowerSpectrum, l_cut: usize, theta: f64) -> Result<f64> {
    if l_cut == 0 || l_cut > s.l_max() {
        return Err(invalid("l_cut", format!("{l_cut} outside 1..={}", s.l_max())));
    }
    let q = legendre_complement(l_cut, theta);
    Ok((1..=l_cut)
        .map(|l| (2 * l + 1) as f64 / (4.0 * PI) * s.get(l) * q[l])
        .sum())
}

/// `Σ_{ℓ ≥ u_cut} (2ℓ+1)/(2π) C_ℓ` over stored degrees plus the declared-tail remainder; an
/// upper bound for the high-degree part of the variogram at every angle.
pub fn tail_sum_high(s: &PowerSpectrum, u_cut: usize) -> Result<f64> {
    if u_cut < 2 {
        return Err(invalid("u_cut", "must be at least 2"));
    }
    let stored: f64 = (u_cut..=s.l_max())
        .map(|l| (2 * l + 1) as f64 / (2.0 * PI) * s.get(l))
        .sum();
    Ok(stored + 2.0 * s.remainder_weight(u_cut))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn condition_a_direct_values() {
        let s = condition_a_spectrum(3.0, |_| 1.0, 10).unwrap();
        assert_eq!(s.get(0), 0.0);
        assert_eq!(s.get(2), 0.125);
        let s = condition_a_spectrum(2.5, |_| 1.0, 50).unwrap();
        for l in 1..=50 {
            assert!(((l as f64).powf(2.5) * s.get(l) - 1.0).abs() < 1e-12);
        }
        assert_eq!(s.k0(), Some(1.0));
        assert!(condition_a_spectrum(3.99, |_| 1.0, 10).is_ok());
        assert!(condition_a_spectrum(2.0, |_| 1.0, 10).is_err());
        assert!(condition_a_spectrum(3.0, |l| if l == 4 { f64::INFINITY } else { 1.0 }, 10).is_err());
    }

    #[test]
    fn k0_tracks_modulation() {
        let s = condition_a_spectrum(3.0, |l| 1.0 + 0.5 * (l as f64).sin(), 200).unwrap();
        let k0 = s.k0().unwrap();
        assert!(k0 > 1.9 && k0 <= 2.0);
    }

    #[test]
    fn normalization() {
        let s = power_law_spectrum(3.0, 1000).unwrap();
        assert!((s.variance() - 1.0).abs() < 1e-12);
        let again = normalize(&s).unwrap();
        assert_eq!(again.values(), s.values());
        let mut scaled = condition_a_spectrum(3.0, |_| 7.0, 1000).unwrap();
        scaled = normalize(&scaled).unwrap();
        for (a, b) in scaled.values().iter().zip(s.values()) {
            assert!((a - b).abs() <= 1e-15 * b.abs().max(1e-300));
        }
        assert!(normalize(&PowerSpectrum::custom(vec![0.0; 5], 3.0).unwrap()).is_err());
    }

    #[test]
    fn example1_declares_alpha() {
        let s = example1_spectrum(0.3, 100, false).unwrap();
        assert!((s.alpha() - 2.6).abs() < 1e-15);
        assert!(s.warning().is_none());
        let with = example1_spectrum(0.3, 100, true).unwrap();
        for l in (2..=100).step_by(2) {
            assert_eq!(with.get(l), s.get(l));
        }
        assert!(with.get(1) > s.get(1));
        assert!(example1_spectrum(0.7, 10, false).unwrap().warning().is_some());
        assert!(example1_spectrum(1.0, 10, false).is_err());
        assert!(example1_spectrum(0.0, 10, false).is_err());
    }

    #[test]
    fn example2_closed_form_values() {
        let c = example2_closed_form(100);
        assert!((c[0] - PI / 8.0).abs() < 1e-16);
        assert!((c[1] - PI / 128.0).abs() < 1e-17);
        assert!((c[10] - 1.00756e-4).abs() < 1e-9);
        assert!((c[100] - 1.22231e-7).abs() < 1e-12);
    }

    #[test]
    fn example2_series_agrees_with_closed_form() {
        // Terms decay like n^{-5/2}, so the tail after N terms is ≈ (2/3) N t_N.
        let closed = example2_closed_form(20);
        for ell in [0usize, 2, 5, 20] {
            let n = 200_000;
            let partial = example2_partial_sum(ell, n);
            let next = example2_partial_sum(ell, n + 1) - partial;
            let tail = 2.0 / 3.0 * (n + ell) as f64 * next;
            let est = partial + tail;
            assert!((est / closed[ell] - 1.0).abs() < 1e-6, "ℓ={ell}: {est} vs {}", closed[ell]);
            assert!(partial < closed[ell]);
        }
    }

    #[test]
    fn example2_series_reports_non_convergence() {
        match example2_spectrum(10, 1000) {
            Err(Error::NotConverged { terms, partial, .. }) => {
                assert_eq!(terms, 1000);
                assert!(partial > 0.0 && partial < example2_closed_form(10)[10]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn example2_schoenberg_reconstruction() {
        let s = example2_power_spectrum(2001).unwrap();
        let w = s.weights();
        for &th in &[0.05, 0.5, 1.0, std::f64::consts::FRAC_PI_2, 2.5, PI - 0.05] {
            let t = crate::harmonics::LegendreTable::new(2001, f64::cos(th)).unwrap();
            let c: f64 = w.iter().zip(t.values()).map(|(a, b)| a * b).sum();
            assert!((c - (1.0 - 2.0 / PI * th)).abs() < 5e-3, "θ={th}: {c}");
        }
        assert_eq!(s.get(2), 0.0);
    }

    #[test]
    fn psi_limits() {
        let r = 0.3;
        assert!((cap_overlap_psi(0.0, r) - 2.0 * PI * (1.0 - r.cos())).abs() < 1e-15);
        assert_eq!(cap_overlap_psi(2.0 * r, r), 0.0);
        assert!(cap_overlap_psi(2.0 * r - 1e-9, r) < 1e-10);
        assert!((cap_overlap_psi(1e-12, r) - 2.0 * PI * (1.0 - r.cos())).abs() < 1e-9);
    }

    #[test]
    fn tail_sums() {
        let s = condition_a_spectrum(3.0, |_| 1.0, 500).unwrap();
        let th: f64 = 0.2;
        let one = tail_sum_low(&s, 1, th).unwrap();
        assert!((one - 3.0 / (4.0 * PI) * (1.0 - th.cos())).abs() < 1e-16);
        assert!(tail_sum_low(&s, 50, 1e-9).unwrap() < 1e-12);
        let custom = PowerSpectrum::custom(vec![0.0, 1.0, 1.0], 3.0).unwrap();
        assert_eq!(tail_sum_high(&custom, 5).unwrap(), 0.0);
        let a = tail_sum_high(&s, 100).unwrap();
        let b = tail_sum_high(&s, 200).unwrap();
        assert!((a / b / 2.0 - 1.0).abs() < 0.05);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("spec.csv");
        let s = power_law_spectrum(2.7, 64).unwrap();
        s.write_csv(&path).unwrap();
        let back = PowerSpectrum::read_csv(&path).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.hash64(), s.hash64());
        std::fs::write(&path, "ell,C_ell\n0,0\n2,1\n").unwrap();
        assert!(matches!(PowerSpectrum::read_csv(&path), Err(Error::Format(_))));
    }

    proptest! {
        #[test]
        fn psi_non_increasing(r in 0.01f64..1.5, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (t1, t2) = if a < b { (a * 2.0 * r, b * 2.0 * r) } else { (b * 2.0 * r, a * 2.0 * r) };
            prop_assert!(cap_overlap_psi(t2, r) <= cap_overlap_psi(t1, r) + 1e-12);
        }

        #[test]
        fn normalize_scale_invariant(k in 0.01f64..100.0, alpha in 2.1f64..3.9) {
            let a = normalize(&condition_a_spectrum(alpha, |_| 1.0, 64).unwrap()).unwrap();
            let b = normalize(&condition_a_spectrum(alpha, |_| k, 64).unwrap()).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                prop_assert!((x - y).abs() <= 1e-14 * x.abs().max(1e-300));
            }
        }
    }
}
