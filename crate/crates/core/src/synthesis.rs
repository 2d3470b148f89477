//! Gaussian harmonic coefficients and band-limited field synthesis on grids.

use std::f64::consts::PI;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geom::{Cap, SpherePoint};
use crate::grid::{EquiangularGrid, Grid};
use crate::harmonics::AlfRecurrence;
use crate::rng::GaussianStream;
use crate::spectrum::PowerSpectrum;

/// Coefficients `a_ℓm`, `0 ≤ m ≤ ℓ ≤ l_hi`, stored by order. Negative orders follow from
/// `a_{ℓ,−m} = (−1)^m conj(a_ℓm)`. Degrees outside the active band are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicCoefficients {
    band: (usize, usize),
    excluded: Option<(usize, usize)>,
    l_hi: usize,
    offsets: Vec<usize>,
    data: Vec<Complex64>,
    seed: u64,
    component: u64,
}

impl HarmonicCoefficients {
    /// All-zero coefficients up to degree `l_hi`.
    pub fn zeros(l_hi: usize) -> Self {
        let mut offsets = Vec::with_capacity(l_hi + 2);
        let mut off = 0;
        for m in 0..=l_hi {
            offsets.push(off);
            off += l_hi - m + 1;
        }
        offsets.push(off);
        HarmonicCoefficients {
            band: (0, l_hi),
            excluded: None,
            l_hi,
            offsets,
            data: vec![Complex64::new(0.0, 0.0); off],
            seed: 0,
            component: 0,
        }
    }

    #[inline]
    fn slot(&self, ell: usize, m: usize) -> usize {
        self.offsets[m] + ell - m
    }

    /// Degrees carried: `band.0 ..= band.1`, minus `excluded()` if set.
    pub fn band(&self) -> (usize, usize) {
        self.band
    }

    pub fn excluded(&self) -> Option<(usize, usize)> {
        self.excluded
    }

    pub fn l_hi(&self) -> usize {
        self.l_hi
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn component(&self) -> u64 {
        self.component
    }

    /// `a_ℓm` for any `|m| ≤ ℓ`; zero beyond `l_hi`.
    pub fn get(&self, ell: usize, m: i64) -> Complex64 {
        let am = m.unsigned_abs() as usize;
        if ell > self.l_hi || am > ell {
            return Complex64::new(0.0, 0.0);
        }
        let a = self.data[self.slot(ell, am)];
        if m >= 0 {
            a
        } else if am.is_multiple_of(2) {
            a.conj()
        } else {
            -a.conj()
        }
    }

    /// Sets `a_ℓm` for `m ≥ 0`; `a_ℓ0` must be real.
    pub fn set(&mut self, ell: usize, m: usize, value: Complex64) -> Result<()> {
        if ell > self.l_hi || m > ell {
            return Err(invalid("ell", format!("({ell}, {m}) outside degree {}", self.l_hi)));
        }
        if m == 0 && value.im != 0.0 {
            return Err(invalid("value", "a_ℓ0 must be real"));
        }
        let s = self.slot(ell, m);
        self.data[s] = value;
        Ok(())
    }

    /// Same draw restricted to degrees `lo..=hi`.
    pub fn restrict(&self, lo: usize, hi: usize) -> Result<Self> {
        if lo > hi || hi > self.l_hi {
            return Err(invalid("band", format!("[{lo}, {hi}] outside [0, {}]", self.l_hi)));
        }
        let mut out = self.clone();
        out.band = (lo.max(self.band.0), hi.min(self.band.1));
        out.zero_degrees(|l| l < lo || l > hi);
        Ok(out)
    }

    /// Same draw with degrees `lo..=hi` removed.
    pub fn exclude(&self, lo: usize, hi: usize) -> Result<Self> {
        if lo > hi || hi > self.l_hi {
            return Err(invalid("band", format!("[{lo}, {hi}] outside [0, {}]", self.l_hi)));
        }
        let mut out = self.clone();
        out.excluded = Some((lo, hi));
        out.zero_degrees(|l| (lo..=hi).contains(&l));
        Ok(out)
    }

    fn zero_degrees(&mut self, drop: impl Fn(usize) -> bool) {
        for m in 0..=self.l_hi {
            for l in m..=self.l_hi {
                if drop(l) {
                    let s = self.slot(l, m);
                    self.data[s] = Complex64::new(0.0, 0.0);
                }
            }
        }
    }
}

/// Draws `a_ℓm` for degrees in `band` (component 0).
pub fn sample_coefficients(s: &PowerSpectrum, band: (usize, usize), seed: u64) -> Result<HarmonicCoefficients> {
    sample_component(s, band, seed, 0)
}

/// Draws component `component` of a vector field: `a_ℓ0 ~ N(0, C_ℓ)` real and, for
/// `m > 0`, real and imaginary parts independent `N(0, C_ℓ/2)`.
pub fn sample_component(
    s: &PowerSpectrum,
    band: (usize, usize),
    seed: u64,
    component: u64,
) -> Result<HarmonicCoefficients> {
    let (lo, hi) = band;
    if lo > hi || hi > s.l_max() {
        return Err(invalid("band", format!("[{lo}, {hi}] outside [0, {}]", s.l_max())));
    }
    let mut c = HarmonicCoefficients::zeros(hi);
    c.band = band;
    c.seed = seed;
    c.component = component;
    let mut stream = GaussianStream::new(seed, component);
    for l in lo..=hi {
        let var = s.get(l);
        if var == 0.0 {
            continue;
        }
        let sd = var.sqrt();
        let sd2 = (0.5 * var).sqrt();
        for m in 0..=l {
            let (z1, z2) = stream.pair(l, m);
            let a = if m == 0 {
                Complex64::new(sd * z1, 0.0)
            } else {
                Complex64::new(sd2 * z1, sd2 * z2)
            };
            let slot = c.slot(l, m);
            c.data[slot] = a;
        }
    }
    Ok(c)
}

/// Where a sample came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldProvenance {
    pub spectrum_hash: u64,
    pub band: (usize, usize),
    pub seed: u64,
}

/// Values of a `d`-component field at the points of a grid, stored component by component.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    grid: Grid,
    d: usize,
    values: Vec<f64>,
    provenance: FieldProvenance,
    max_imaginary: f64,
}

impl FieldSample {
    /// Wraps externally computed values (`values[c * n + i]` is component `c` at point `i`).
    pub fn from_values(grid: Grid, d: usize, values: Vec<f64>, provenance: FieldProvenance) -> Result<Self> {
        if d == 0 {
            return Err(invalid("d", "need at least one component"));
        }
        if values.len() != d * grid.len() {
            return Err(invalid("values", format!("expected {} values, got {}", d * grid.len(), values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("values", "field values must be finite"));
        }
        Ok(FieldSample {
            grid,
            d,
            values,
            provenance,
            max_imaginary: 0.0,
        })
    }

    /// Constant field equal to `value` in every component.
    pub fn constant(grid: Grid, d: usize, value: f64) -> Result<Self> {
        let n = grid.len();
        Self::from_values(
            grid,
            d,
            vec![value; d * n],
            FieldProvenance {
                spectrum_hash: 0,
                band: (0, 0),
                seed: 0,
            },
        )
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn provenance(&self) -> FieldProvenance {
        self.provenance
    }

    /// Largest imaginary part discarded during synthesis.
    pub fn max_imaginary(&self) -> f64 {
        self.max_imaginary
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.len();
        &self.values[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn value(&self, c: usize, i: usize) -> f64 {
        self.values[c * self.len() + i]
    }

    /// The first `d` components.
    pub fn leading_components(&self, d: usize) -> Result<Self> {
        if d == 0 || d > self.d {
            return Err(invalid("d", format!("{d} not in 1..={}", self.d)));
        }
        let mut out = self.clone();
        out.values.truncate(d * self.len());
        out.d = d;
        Ok(out)
    }

    /// Pointwise sum of two samples on the same grid.
    pub fn add(&self, other: &FieldSample) -> Result<FieldSample> {
        if self.grid != other.grid || self.d != other.d {
            return Err(invalid("other", "samples live on different grids"));
        }
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(out)
    }

    /// Sample mean and variance over all points and components (unweighted).
    pub fn summary(&self) -> (f64, f64) {
        let n = self.values.len() as f64;
        let mean = self.values.iter().sum::<f64>() / n;
        let var = self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        (mean, var)
    }

    /// Binary layout: magic `SGRFFLD1`; `u32` n_theta, n_phi, d, kind (0 equiangular,
    /// 1 point list); `u64` seed, spectrum hash; `f64` theta_lo, theta_hi; `u32` band_lo,
    /// band_hi; for point lists the (colatitude, longitude) pairs; then the values
    /// component by component, rows in order. Everything little-endian.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        w.write_all(MAGIC)?;
        let (nt, np, kind, lo, hi) = match &self.grid {
            Grid::Equiangular(g) => {
                let (a, b) = g.theta_range();
                (g.n_theta() as u32, g.n_phi() as u32, 0u32, a, b)
            }
            Grid::Points(p) => (p.len() as u32, 1, 1, 0.0, PI),
        };
        for v in [nt, np, self.d as u32, kind] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.provenance.seed.to_le_bytes())?;
        w.write_all(&self.provenance.spectrum_hash.to_le_bytes())?;
        w.write_all(&lo.to_le_bytes())?;
        w.write_all(&hi.to_le_bytes())?;
        w.write_all(&(self.provenance.band.0 as u32).to_le_bytes())?;
        w.write_all(&(self.provenance.band.1 as u32).to_le_bytes())?;
        if let Grid::Points(pts) = &self.grid {
            for p in pts {
                w.write_all(&p.colatitude().to_le_bytes())?;
                w.write_all(&p.longitude().to_le_bytes())?;
            }
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a field sample file".into()));
        }
        let nt = read_u32(&mut r)? as usize;
        let np = read_u32(&mut r)? as usize;
        let d = read_u32(&mut r)? as usize;
        let kind = read_u32(&mut r)?;
        let seed = read_u64(&mut r)?;
        let spectrum_hash = read_u64(&mut r)?;
        let lo = read_f64(&mut r)?;
        let hi = read_f64(&mut r)?;
        let band = (read_u32(&mut r)? as usize, read_u32(&mut r)? as usize);
        let grid = match kind {
            0 => Grid::Equiangular(EquiangularGrid::band(nt, np, lo, hi)?),
            1 => {
                let mut pts = Vec::with_capacity(nt);
                for _ in 0..nt {
                    let c = read_f64(&mut r)?;
                    let l = read_f64(&mut r)?;
                    pts.push(SpherePoint::new(c, l)?);
                }
                Grid::Points(pts)
            }
            k => return Err(Error::Format(format!("unknown grid kind {k}"))),
        };
        let n = d * grid.len();
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            values.push(read_f64(&mut r)?);
        }
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::Format(format!("{} trailing bytes", rest.len())));
        }
        Self::from_values(
            grid,
            d,
            values,
            FieldProvenance {
                spectrum_hash,
                band,
                seed,
            },
        )
    }

    /// CSV with one row per point: `index,colatitude,longitude,T1,…,Td`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["index".to_string(), "colatitude".into(), "longitude".into()];
        header.extend((1..=self.d).map(|c| format!("T{c}")));
        w.write_record(&header)?;
        for i in 0..self.len() {
            let p = self.grid.point(i);
            let mut row = vec![i.to_string(), p.colatitude().to_string(), p.longitude().to_string()];
            row.extend((0..self.d).map(|c| self.value(c, i).to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

const MAGIC: &[u8; 8] = b"SGRFFLD1";

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

/// Synthesizes one field per coefficient set on `grid`. All sets must share `l_hi`.
///
/// Equiangular grids: per colatitude row, `g_m(θ) = Σ_ℓ a_ℓm λ_ℓm(θ)` followed by an inverse
/// FFT over longitude; rows mirrored about the equator share one Legendre sweep. Point lists
/// are summed directly.
pub fn synthesize(coeffs: &[&HarmonicCoefficients], grid: &Grid) -> Result<(Vec<f64>, f64)> {
    let Some(first) = coeffs.first() else {
        return Err(invalid("coeffs", "need at least one coefficient set"));
    };
    let l_hi = first.l_hi;
    if coeffs.iter().any(|c| c.l_hi != l_hi) {
        return Err(invalid("coeffs", "coefficient sets have different degree limits"));
    }
    let rec = AlfRecurrence::new(l_hi);
    match grid {
        Grid::Equiangular(g) => synthesize_grid(coeffs, g, &rec),
        Grid::Points(pts) => Ok((synthesize_points(coeffs, pts, &rec), 0.0)),
    }
}

fn synthesize_grid(
    coeffs: &[&HarmonicCoefficients],
    g: &EquiangularGrid,
    rec: &AlfRecurrence,
) -> Result<(Vec<f64>, f64)> {
    let l_hi = rec.l_max();
    let np = g.n_phi();
    if np < 2 * l_hi + 1 {
        return Err(Error::GridTooCoarse(format!(
            "{np} longitudes cannot resolve degree {l_hi} (need ≥ {})",
            2 * l_hi + 1
        )));
    }
    let nt = g.n_theta();
    let n = g.len();
    let d = coeffs.len();
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_inverse(np);
    let mirrored = g.is_full_sphere();
    let tasks: Vec<(usize, Option<usize>)> = if mirrored {
        (0..nt.div_ceil(2))
            .map(|r| {
                let s = nt - 1 - r;
                (r, (s != r).then_some(s))
            })
            .collect()
    } else {
        (0..nt).map(|r| (r, None)).collect()
    };

    type RowOut = (usize, Vec<f64>, f64);
    let rows: Vec<Vec<RowOut>> = tasks
        .par_iter()
        .map(|&(north, south)| {
            let theta = g.theta(north);
            let mut even = vec![vec![Complex64::new(0.0, 0.0); l_hi + 1]; d];
            let mut odd = vec![vec![Complex64::new(0.0, 0.0); l_hi + 1]; d];
            rec.for_each_column(theta, l_hi, |m, col| {
                for (c, coef) in coeffs.iter().enumerate() {
                    let a = &coef.data[coef.offsets[m]..coef.offsets[m + 1]];
                    let (mut e, mut o) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
                    let mut j = 0;
                    while j + 1 < col.len() {
                        e += a[j] * col[j];
                        o += a[j + 1] * col[j + 1];
                        j += 2;
                    }
                    if j < col.len() {
                        e += a[j] * col[j];
                    }
                    even[c][m] = e;
                    odd[c][m] = o;
                }
            });
            let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
            let mut buf = vec![Complex64::new(0.0, 0.0); np];
            let mut out = Vec::with_capacity(2);
            let rows_here: Vec<(usize, f64)> = match south {
                Some(s) => vec![(north, 1.0), (s, -1.0)],
                None => vec![(north, 1.0)],
            };
            for (row, sign) in rows_here {
                let mut vals = Vec::with_capacity(d * np);
                let mut imag: f64 = 0.0;
                for c in 0..d {
                    buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
                    for m in 0..=l_hi {
                        let gm = even[c][m] + odd[c][m] * sign;
                        buf[m] = gm;
                        // λ_{ℓ,−m} = (−1)^m λ_ℓm and a_{ℓ,−m} = (−1)^m conj(a_ℓm): the signs cancel.
                        if m > 0 {
                            buf[np - m] = gm.conj();
                        }
                    }
                    fft.process_with_scratch(&mut buf, &mut scratch);
                    for b in &buf {
                        vals.push(b.re);
                        imag = imag.max(b.im.abs());
                    }
                }
                out.push((row, vals, imag));
            }
            out
        })
        .collect();

    let mut values = vec![0.0; d * n];
    let mut max_imag: f64 = 0.0;
    for (row, vals, imag) in rows.into_iter().flatten() {
        max_imag = max_imag.max(imag);
        for c in 0..d {
            let dst = c * n + row * np;
            values[dst..dst + np].copy_from_slice(&vals[c * np..(c + 1) * np]);
        }
    }
    Ok((values, max_imag))
}

fn synthesize_points(coeffs: &[&HarmonicCoefficients], pts: &[SpherePoint], rec: &AlfRecurrence) -> Vec<f64> {
    let l_hi = rec.l_max();
    let n = pts.len();
    let d = coeffs.len();
    let per_point: Vec<Vec<f64>> = pts
        .par_iter()
        .map(|p| {
            let mut acc = vec![0.0; d];
            let phi = p.longitude();
            rec.for_each_column(p.colatitude(), l_hi, |m, col| {
                let e = Complex64::from_polar(1.0, m as f64 * phi);
                for (c, coef) in coeffs.iter().enumerate() {
                    let a = &coef.data[coef.offsets[m]..coef.offsets[m + 1]];
                    let gm: Complex64 = a.iter().zip(col).map(|(a, l)| a * l).sum();
                    let v = (gm * e).re;
                    acc[c] += if m == 0 { v } else { 2.0 * v };
                }
            });
            acc
        })
        .collect();
    let mut values = vec![0.0; d * n];
    for (i, acc) in per_point.iter().enumerate() {
        for c in 0..d {
            values[c * n + i] = acc[c];
        }
    }
    values
}

/// Synthesizes one coefficient set as a single-component field.
pub fn evaluate_field(c: &HarmonicCoefficients, grid: &Grid, spectrum_hash: u64) -> Result<FieldSample> {
    let (values, max_imaginary) = synthesize(&[c], grid)?;
    let mut f = FieldSample::from_values(
        grid.clone(),
        1,
        values,
        FieldProvenance {
            spectrum_hash,
            band: c.band(),
            seed: c.seed(),
        },
    )?;
    f.max_imaginary = max_imaginary;
    Ok(f)
}

/// Draws the `d` independent components (streams `0..d` of `seed`) of a field.
pub fn vector_coefficients(
    s: &PowerSpectrum,
    d: usize,
    band: (usize, usize),
    seed: u64,
) -> Result<Vec<HarmonicCoefficients>> {
    if d == 0 {
        return Err(invalid("d", "need at least one component"));
    }
    (0..d).map(|c| sample_component(s, band, seed, c as u64)).collect()
}

/// `d`-component field: component `c` uses stream `c` of `seed`, so the leading components
/// of a larger `d` coincide with a smaller one.
pub fn vector_field(s: &PowerSpectrum, d: usize, band: (usize, usize), grid: &Grid, seed: u64) -> Result<FieldSample> {
    let coeffs = vector_coefficients(s, d, band, seed)?;
    field_from_coefficients(&coeffs, grid, s.hash64())
}

pub fn field_from_coefficients(coeffs: &[HarmonicCoefficients], grid: &Grid, spectrum_hash: u64) -> Result<FieldSample> {
    let refs: Vec<&HarmonicCoefficients> = coeffs.iter().collect();
    let (values, max_imaginary) = synthesize(&refs, grid)?;
    let first = &coeffs[0];
    let mut f = FieldSample::from_values(
        grid.clone(),
        coeffs.len(),
        values,
        FieldProvenance {
            spectrum_hash,
            band: first.band(),
            seed: first.seed(),
        },
    )?;
    f.max_imaginary = max_imaginary;
    Ok(f)
}

/// `T = T^{L,U} + T^Δ` for one coefficient draw.
#[derive(Debug, Clone)]
pub struct BandSplit {
    pub low: usize,
    pub high: usize,
    pub main: FieldSample,
    pub residual: FieldSample,
}

/// Splits the field drawn from `(s, d, seed)` into degrees `[low, high]` and the rest.
pub fn band_split(
    s: &PowerSpectrum,
    d: usize,
    low: usize,
    high: usize,
    grid: &Grid,
    seed: u64,
) -> Result<BandSplit> {
    if !(1 <= low && low < high && high <= s.l_max()) {
        return Err(invalid("band", format!("need 1 ≤ L < U ≤ {}, got [{low}, {high}]", s.l_max())));
    }
    let full = vector_coefficients(s, d, (0, s.l_max()), seed)?;
    let main: Vec<_> = full.iter().map(|c| c.restrict(low, high)).collect::<Result<_>>()?;
    let rest: Vec<_> = full.iter().map(|c| c.exclude(low, high)).collect::<Result<_>>()?;
    let mut both = main.clone();
    both.extend(rest);
    let joint = field_from_coefficients(&both, grid, s.hash64())?;
    let n = grid.len();
    let (a, b) = joint.values.split_at(d * n);
    let mut main_f = FieldSample::from_values(grid.clone(), d, a.to_vec(), joint.provenance)?;
    main_f.provenance.band = (low, high);
    main_f.max_imaginary = joint.max_imaginary;
    let residual = FieldSample::from_values(grid.clone(), d, b.to_vec(), joint.provenance)?;
    Ok(BandSplit {
        low,
        high,
        main: main_f,
        residual,
    })
}

/// `max ‖T(x) − T(y)‖` over grid points `x, y` in `cap`.
pub fn oscillation(f: &FieldSample, cap: &Cap) -> Result<f64> {
    let idx = f.grid().indices_in_cap(cap);
    if idx.len() < 2 {
        return Err(Error::EmptyRegion(format!(
            "cap of radius {} holds {} grid point(s)",
            cap.radius,
            idx.len()
        )));
    }
    Ok(oscillation_of(f, &idx))
}

pub(crate) fn oscillation_of(f: &FieldSample, idx: &[usize]) -> f64 {
    if f.d() == 1 {
        let c = f.component(0);
        let (lo, hi) = idx
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| (lo.min(c[i]), hi.max(c[i])));
        return hi - lo;
    }
    let pts: Vec<Vec<f64>> = idx
        .iter()
        .map(|&i| (0..f.d()).map(|c| f.value(c, i)).collect())
        .collect();
    let mut best: f64 = 0.0;
    for i in 0..pts.len() {
        for j in 0..i {
            let s: f64 = pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            best = best.max(s);
        }
    }
    best.sqrt()
}
