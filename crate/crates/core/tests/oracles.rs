//! Library results against independent references computed here.

use std::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use spherefield::covariance::CovarianceModel;
use spherefield::geom::SpherePoint;
use spherefield::grid::Grid;
use spherefield::harmonics::{gauss_legendre, legendre_p, normalized_alf};
use spherefield::rng::derive_seed;
use spherefield::spectrum::{cap_overlap_psi, power_law_spectrum};
use spherefield::synthesis::vector_field;

/// Unevaluated sum `hi + lo`.
#[derive(Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    Dd {
        hi: s,
        lo: (a - (s - bb)) + (b - bb),
    }
}

impl Dd {
    fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn add(self, o: Dd) -> Dd {
        let s = two_sum(self.hi, o.hi);
        let lo = s.lo + self.lo + o.lo;
        two_sum(s.hi, lo)
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        two_sum(p, e + self.hi * o.lo + self.lo * o.hi)
    }

    fn div_f64(self, d: f64) -> Dd {
        let q = self.hi / d;
        let r = self.add(Dd::new(q).mul(Dd::new(-d)));
        two_sum(q, r.hi / d)
    }

    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

/// `P_ℓ(x)` by the three-term recurrence in double-double arithmetic.
fn legendre_dd(ell: usize, x: f64) -> f64 {
    let x = Dd::new(x);
    let (mut p0, mut p1) = (Dd::new(1.0), x);
    if ell == 0 {
        return 1.0;
    }
    for n in 1..ell {
        let nf = n as f64;
        let a = Dd::new(2.0 * nf + 1.0).mul(x).mul(p1);
        let b = Dd::new(nf).mul(p0).neg();
        let p2 = a.add(b).div_f64(nf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1.hi + p1.lo
}

#[test]
fn legendre_matches_double_double_to_2048() {
    let mut worst: f64 = 0.0;
    for &x in &[-0.999_9, -0.73, -0.1, 0.0, 0.31, 0.5, 0.87, 0.999, 0.999_999] {
        for ell in [0, 1, 2, 5, 64, 255, 511, 1000, 1537, 2048] {
            worst = worst.max((legendre_p(ell, x).unwrap() - legendre_dd(ell, x)).abs());
        }
    }
    assert!(worst < 1e-10, "max deviation {worst:e}");
}

#[test]
fn associated_functions_are_orthonormal_under_gauss_legendre() {
    let l_max = 128;
    let (nodes, weights) = gauss_legendre(l_max + 2);
    for m in [0, 1, 7, 64, 127] {
        let cols: Vec<Vec<f64>> = (m..=l_max)
            .map(|ell| nodes.iter().map(|&x| normalized_alf(ell, m, x.acos()).unwrap()).collect())
            .collect();
        for (i, a) in cols.iter().enumerate() {
            for (j, b) in cols.iter().enumerate().skip(i) {
                let ip: f64 = 2.0 * PI * a.iter().zip(b).zip(&weights).map(|((u, v), w)| u * v * w).sum::<f64>();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-8, "m {m}, ℓ {} vs {}: {ip}", m + i, m + j);
            }
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

#[test]
fn cap_overlap_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let r = 0.4;
    let n = 400_000;
    let a = SpherePoint::north_pole();
    for theta in [0.05, 0.3, 0.6, 0.79] {
        let b = SpherePoint::new(theta, 1.0).unwrap();
        let mut hits = 0usize;
        for _ in 0..n {
            let z = 2.0 * uniform(&mut rng) - 1.0;
            let p = SpherePoint::new(z.acos(), 2.0 * PI * uniform(&mut rng)).unwrap();
            if p.distance(&a) < r && p.distance(&b) < r {
                hits += 1;
            }
        }
        let frac = hits as f64 / n as f64;
        let est = 4.0 * PI * frac;
        let se = 4.0 * PI * (frac * (1.0 - frac) / n as f64).sqrt();
        let psi = cap_overlap_psi(theta, r);
        assert!((est - psi).abs() < 4.0 * se + 1e-12, "θ {theta}: ψ {psi}, MC {est} ± {se}");
    }
}

#[test]
fn synthesized_pairs_have_the_model_moments() {
    let s = power_law_spectrum(3.0, 32).unwrap();
    let theta = 0.3;
    let x = SpherePoint::new(1.1, 0.4).unwrap();
    let grid = Grid::Points(vec![x, x.offset(theta, 0.9)]);
    let n = 3000;
    let (mut s1, mut s2, mut s11, mut s22, mut s12) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for rep in 0..n {
        let f = vector_field(&s, 1, (0, 32), &grid, derive_seed(17, rep)).unwrap();
        let (a, b) = (f.value(0, 0), f.value(0, 1));
        s1 += a;
        s2 += b;
        s11 += a * a;
        s22 += b * b;
        s12 += a * b;
    }
    let nf = n as f64;
    let se = 1.0 / nf.sqrt();
    assert!((s1 / nf).abs() < 4.0 * se);
    assert!((s2 / nf).abs() < 4.0 * se);
    assert!((s11 / nf - 1.0).abs() < 4.0 * 2f64.sqrt() * se);
    assert!((s22 / nf - 1.0).abs() < 4.0 * 2f64.sqrt() * se);
    let c = CovarianceModel::new(s).covariance(theta).unwrap();
    assert!((s12 / nf - c).abs() < 4.0 * (1.0 + c * c).sqrt() * se, "{} vs {c}", s12 / nf);
}
