//! Legendre polynomials, fully normalized associated Legendre functions and complex
//! orthonormal spherical harmonics (Condon–Shortley phase).
//!
//! `λ_ℓm(θ)` denotes the θ-part of `Y_ℓm`, so that `Y_ℓm(θ, φ) = λ_ℓm(θ) e^{imφ}` and
//! `∫ λ_ℓm² sin θ dθ = 1/(2π)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::geom::SpherePoint;

/// Diagonal values below `2^-300` are carried as `value · 2^600` with an exponent counter,
/// so the recurrences stay finite for degrees in the thousands near the poles.
const SCALE_BITS: i32 = 600;
const RESCALE_BELOW: f64 = 4.909_093_465_297_727e-91; // 2^-300
const RESCALE_ABOVE: f64 = 2.037_035_976_334_486e90; // 2^300

/// Legendre polynomial `P_ℓ(x)` by the three-term recurrence.
pub fn legendre_p(ell: usize, x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(invalid("x", format!("{x} outside [-1, 1]")));
    }
    Ok(legendre_p_unchecked(ell, x))
}

pub(crate) fn legendre_p_unchecked(ell: usize, x: f64) -> f64 {
    if ell == 0 {
        return 1.0;
    }
    let (mut p0, mut p1) = (1.0, x);
    for l in 2..=ell {
        let lf = l as f64;
        let p2 = ((2.0 * lf - 1.0) * x * p1 - (lf - 1.0) * p0) / lf;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// `P_0(x), …, P_{L_max}(x)` at one abscissa.
#[derive(Debug, Clone)]
pub struct LegendreTable {
    x: f64,
    values: Vec<f64>,
}

impl LegendreTable {
    pub fn new(l_max: usize, x: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&x) {
            return Err(invalid("x", format!("{x} outside [-1, 1]")));
        }
        let mut values = Vec::with_capacity(l_max + 1);
        values.push(1.0);
        if l_max >= 1 {
            values.push(x);
        }
        for l in 2..=l_max {
            let lf = l as f64;
            let v = ((2.0 * lf - 1.0) * x * values[l - 1] - (lf - 1.0) * values[l - 2]) / lf;
            values.push(v);
        }
        Ok(LegendreTable { x, values })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn l_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// `1 − P_ℓ(cos θ)` for `ℓ = 0..=l_max`, computed without cancellation for small θ.
pub fn legendre_complement(l_max: usize, theta: f64) -> Vec<f64> {
    let mut q = Vec::with_capacity(l_max + 1);
    q.push(0.0);
    if l_max == 0 {
        return q;
    }
    let s = (0.5 * theta).sin();
    let u = 2.0 * s * s;
    let x = theta.cos();
    q.push(u);
    for l in 2..=l_max {
        let lf = l as f64;
        let a = 2.0 * lf - 1.0;
        let v = (a * u + a * x * q[l - 1] - (lf - 1.0) * q[l - 2]) / lf;
        q.push(v);
    }
    q
}

/// Precomputed coefficients of the fully normalized associated Legendre recurrence up to
/// degree `l_max`.
#[derive(Debug, Clone)]
pub struct AlfRecurrence {
    l_max: usize,
    offsets: Vec<usize>,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl AlfRecurrence {
    pub fn new(l_max: usize) -> Self {
        let mut offsets = Vec::with_capacity(l_max + 2);
        let mut off = 0;
        for m in 0..=l_max {
            offsets.push(off);
            off += l_max - m + 1;
        }
        offsets.push(off);
        let mut a = vec![0.0; off];
        let mut b = vec![0.0; off];
        for m in 0..=l_max {
            let mf = m as f64;
            for l in (m + 2)..=l_max {
                let lf = l as f64;
                let i = offsets[m] + l - m;
                a[i] = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let lm1 = lf - 1.0;
                b[i] = ((lm1 * lm1 - mf * mf) / (4.0 * lm1 * lm1 - 1.0)).sqrt();
            }
        }
        AlfRecurrence { l_max, offsets, a, b }
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    /// Calls `f(m, column)` for `m = 0..=m_max`, where `column[j] = λ_{m+j,m}(θ)` for
    /// `j = 0..=l_max−m`.
    pub fn for_each_column(&self, theta: f64, m_max: usize, mut f: impl FnMut(usize, &[f64])) {
        let (st, ct) = theta.sin_cos();
        let st = st.abs();
        let mut col = vec![0.0; self.l_max + 1];
        let mut diag = 1.0 / (4.0 * PI).sqrt();
        let mut diag_exp = 0i32;
        for m in 0..=m_max.min(self.l_max) {
            if m > 0 {
                let mf = m as f64;
                diag *= -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * st;
                if diag != 0.0 && diag.abs() < RESCALE_BELOW {
                    diag = scale_up(diag);
                    diag_exp += 1;
                }
            }
            let n = self.l_max - m + 1;
            self.fill_column(m, ct, diag, diag_exp, &mut col[..n]);
            f(m, &col[..n]);
        }
    }

    fn fill_column(&self, m: usize, ct: f64, diag: f64, diag_exp: i32, out: &mut [f64]) {
        let mut exp = diag_exp;
        let mut p_prev;
        let mut p = diag;
        out[0] = unscale(p, exp);
        if out.len() == 1 {
            return;
        }
        let mut p_next = (2.0 * m as f64 + 3.0).sqrt() * ct * p;
        out[1] = unscale(p_next, exp);
        let base = self.offsets[m];
        for j in 2..out.len() {
            p_prev = p;
            p = p_next;
            if exp > 0 && p.abs() > RESCALE_ABOVE {
                p = scale_down(p);
                p_prev = scale_down(p_prev);
                exp -= 1;
            }
            let i = base + j;
            p_next = self.a[i] * (ct * p - self.b[i] * p_prev);
            out[j] = unscale(p_next, exp);
        }
    }
}

#[inline]
fn scale_up(v: f64) -> f64 {
    v * 2f64.powi(SCALE_BITS)
}

#[inline]
fn scale_down(v: f64) -> f64 {
    v * 2f64.powi(-SCALE_BITS)
}

#[inline]
fn unscale(v: f64, exp: i32) -> f64 {
    if exp == 0 {
        v
    } else {
        // Anything still carrying a scale is below 2^-300 in magnitude.
        let mut r = v;
        for _ in 0..exp {
            r = scale_down(r);
        }
        r
    }
}

/// `λ_ℓm(θ)` for `0 ≤ m ≤ ℓ` without a precomputed table.
pub fn normalized_alf(ell: usize, m: usize, theta: f64) -> Result<f64> {
    if m > ell {
        return Err(invalid("m", format!("order {m} exceeds degree {ell}")));
    }
    let (st, ct) = theta.sin_cos();
    let st = st.abs();
    let mut diag = 1.0 / (4.0 * PI).sqrt();
    let mut exp = 0i32;
    for k in 1..=m {
        let kf = k as f64;
        diag *= -((2.0 * kf + 1.0) / (2.0 * kf)).sqrt() * st;
        if diag != 0.0 && diag.abs() < RESCALE_BELOW {
            diag = scale_up(diag);
            exp += 1;
        }
    }
    if ell == m {
        return Ok(unscale(diag, exp));
    }
    let mf = m as f64;
    let mut p_prev = diag;
    let mut p = (2.0 * mf + 3.0).sqrt() * ct * diag;
    for l in (m + 2)..=ell {
        if exp > 0 && p.abs() > RESCALE_ABOVE {
            p = scale_down(p);
            p_prev = scale_down(p_prev);
            exp -= 1;
        }
        let lf = l as f64;
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let lm1 = lf - 1.0;
        let b = ((lm1 * lm1 - mf * mf) / (4.0 * lm1 * lm1 - 1.0)).sqrt();
        let next = a * (ct * p - b * p_prev);
        p_prev = p;
        p = next;
    }
    Ok(unscale(p, exp))
}

/// Complex orthonormal spherical harmonic `Y_ℓm` at `p`.
pub fn spherical_harmonic(ell: usize, m: i64, p: &SpherePoint) -> Result<Complex64> {
    let am = m.unsigned_abs() as usize;
    if am > ell {
        return Err(invalid("m", format!("|m| = {am} exceeds degree {ell}")));
    }
    let lam = normalized_alf(ell, am, p.colatitude())?;
    let y = Complex64::from_polar(lam, am as f64 * p.longitude());
    if m < 0 {
        let sign = if am.is_multiple_of(2) { 1.0 } else { -1.0 };
        Ok(y.conj() * sign)
    } else {
        Ok(y)
    }
}

/// `|Σ_m Y_ℓm(p) conj(Y_ℓm(q)) − (2ℓ+1)/(4π) P_ℓ(⟨p,q⟩)|`.
pub fn addition_theorem_check(ell: usize, p: &SpherePoint, q: &SpherePoint) -> f64 {
    let rec = AlfRecurrence::new(ell);
    let mut lp = vec![0.0; ell + 1];
    let mut lq = vec![0.0; ell + 1];
    rec.for_each_column(p.colatitude(), ell, |m, c| lp[m] = c[ell - m]);
    rec.for_each_column(q.colatitude(), ell, |m, c| lq[m] = c[ell - m]);
    let dphi = p.longitude() - q.longitude();
    let mut sum = lp[0] * lq[0];
    for m in 1..=ell {
        sum += 2.0 * lp[m] * lq[m] * (m as f64 * dphi).cos();
    }
    let x = p.dot(q).clamp(-1.0, 1.0);
    let rhs = (2.0 * ell as f64 + 1.0) / (4.0 * PI) * legendre_p_unchecked(ell, x);
    (sum - rhs).abs()
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes in decreasing order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for l in 2..=n {
        let lf = l as f64;
        let p2 = ((2.0 * lf - 1.0) * x * p1 - (lf - 1.0) * p0) / lf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn legendre_closed_forms() {
        assert_eq!(legendre_p(7, 1.0).unwrap(), 1.0);
        assert_eq!(legendre_p(1, 0.3).unwrap(), 0.3);
        assert!((legendre_p(2, 0.5).unwrap() + 0.125).abs() < 1e-15);
        assert!(legendre_p(3, 1.5).is_err());
        let t = LegendreTable::new(10, 0.2).unwrap();
        for (l, &v) in t.values().iter().enumerate() {
            assert_eq!(v, legendre_p(l, 0.2).unwrap());
        }
    }

    #[test]
    fn complement_matches_direct_difference() {
        for &th in &[1e-4, 0.01, 0.5, 2.0, 3.1] {
            let q = legendre_complement(300, th);
            for l in [0, 1, 2, 17, 300] {
                let direct = 1.0 - legendre_p(l, th.cos()).unwrap();
                // The direct difference itself loses ~ℓ²·ε near θ = 0.
                assert!((q[l] - direct).abs() < 1e-10, "l={l} θ={th}");
            }
        }
        // Small angles: 1 − P_ℓ ≈ ℓ(ℓ+1)θ²/4.
        let q = legendre_complement(10, 1e-7);
        assert!((q[10] / (110.0 * 1e-14 / 4.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn low_degree_harmonics() {
        let p = SpherePoint::new(0.7, 1.3).unwrap();
        let y00 = spherical_harmonic(0, 0, &p).unwrap();
        assert!((y00.re - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-15);
        let y10 = spherical_harmonic(1, 0, &p).unwrap();
        assert!((y10.re - (3.0 / (4.0 * PI)).sqrt() * 0.7f64.cos()).abs() < 1e-15);
        let y11 = spherical_harmonic(1, 1, &p).unwrap();
        let expect = Complex64::from_polar(-(3.0 / (8.0 * PI)).sqrt() * 0.7f64.sin(), 1.3);
        assert!((y11 - expect).norm() < 1e-15);
        let y22 = spherical_harmonic(2, 2, &p).unwrap();
        let expect = Complex64::from_polar(0.25 * (15.0 / (2.0 * PI)).sqrt() * 0.7f64.sin().powi(2), 2.6);
        assert!((y22 - expect).norm() < 1e-14);
        assert!(spherical_harmonic(2, 3, &p).is_err());
    }

    #[test]
    fn conjugation_symmetry() {
        let p = SpherePoint::new(2.1, 4.0).unwrap();
        for l in 0..8usize {
            for m in 0..=l as i64 {
                let a = spherical_harmonic(l, m, &p).unwrap();
                let b = spherical_harmonic(l, -m, &p).unwrap();
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                assert!((b - a.conj() * sign).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let rec = AlfRecurrence::new(60);
        rec.for_each_column(0.9, 60, |m, col| {
            for (j, &v) in col.iter().enumerate() {
                let d = normalized_alf(m + j, m, 0.9).unwrap();
                assert!((v - d).abs() < 1e-13 * (1.0 + d.abs()));
            }
        });
    }

    #[test]
    fn high_degree_near_pole_stays_finite() {
        let rec = AlfRecurrence::new(4096);
        let mut bad = 0usize;
        let mut sum_sq = 0.0;
        let theta = 1e-3;
        rec.for_each_column(theta, 4096, |m, col| {
            bad += col.iter().filter(|v| !v.is_finite()).count();
            let last = col[col.len() - 1];
            sum_sq += if m == 0 { last * last } else { 2.0 * last * last };
        });
        assert_eq!(bad, 0);
        // Σ_m |Y_{4096,m}|² = (2ℓ+1)/(4π).
        assert!((sum_sq / (8193.0 / (4.0 * PI)) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn addition_theorem_small_degrees() {
        let p = SpherePoint::new(0.4, 0.1).unwrap();
        let q = SpherePoint::new(1.9, 5.2).unwrap();
        assert!(addition_theorem_check(0, &p, &q) < 1e-15);
        for l in [1, 5, 64] {
            assert!(addition_theorem_check(l, &p, &q) < 1e-12);
            assert!(addition_theorem_check(l, &p, &p) < 1e-12);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(12);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(22)).sum();
        assert!((i - 2.0 / 23.0).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn legendre_bounded(l in 0usize..400, x in -1.0f64..=1.0) {
            let v = legendre_p(l, x).unwrap();
            prop_assert!(v.abs() <= 1.0 + 1e-12);
        }
    }
}
