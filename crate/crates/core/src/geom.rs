//! Points, geodesic distance and caps on the unit sphere.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A point on the unit sphere in spherical coordinates, with its cached unit vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Angles", into = "Angles")]
pub struct SpherePoint {
    colatitude: f64,
    longitude: f64,
    xyz: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct Angles {
    colatitude: f64,
    longitude: f64,
}

impl TryFrom<Angles> for SpherePoint {
    type Error = crate::Error;
    fn try_from(a: Angles) -> Result<Self> {
        SpherePoint::new(a.colatitude, a.longitude)
    }
}

impl From<SpherePoint> for Angles {
    fn from(p: SpherePoint) -> Self {
        Angles {
            colatitude: p.colatitude,
            longitude: p.longitude,
        }
    }
}

impl SpherePoint {
    /// Builds a point from colatitude in `[0, π]` and any finite longitude
    /// (wrapped into `[0, 2π)`).
    pub fn new(colatitude: f64, longitude: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&colatitude) {
            return Err(invalid("colatitude", format!("{colatitude} not in [0, π]")));
        }
        if !longitude.is_finite() {
            return Err(invalid("longitude", "must be finite"));
        }
        let mut lon = longitude.rem_euclid(TAU);
        if lon >= TAU {
            lon = 0.0;
        }
        Ok(Self::from_angles_unchecked(colatitude, lon))
    }

    pub(crate) fn from_angles_unchecked(colatitude: f64, longitude: f64) -> Self {
        let (st, ct) = colatitude.sin_cos();
        let (sp, cp) = longitude.sin_cos();
        SpherePoint {
            colatitude,
            longitude,
            xyz: [st * cp, st * sp, ct],
        }
    }

    /// Builds a point from any nonzero 3-vector, normalizing it.
    pub fn from_vector(v: [f64; 3]) -> Result<Self> {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !n.is_finite() || n == 0.0 {
            return Err(invalid("vector", "must be finite and nonzero"));
        }
        let u = [v[0] / n, v[1] / n, v[2] / n];
        let colatitude = u[0].hypot(u[1]).atan2(u[2]);
        let mut longitude = u[1].atan2(u[0]).rem_euclid(TAU);
        if longitude >= TAU {
            longitude = 0.0;
        }
        Ok(SpherePoint {
            colatitude,
            longitude,
            xyz: u,
        })
    }

    pub fn north_pole() -> Self {
        Self::from_angles_unchecked(0.0, 0.0)
    }

    pub fn south_pole() -> Self {
        Self::from_angles_unchecked(PI, 0.0)
    }

    pub fn colatitude(&self) -> f64 {
        self.colatitude
    }

    pub fn longitude(&self) -> f64 {
        self.longitude
    }

    pub fn vector(&self) -> [f64; 3] {
        self.xyz
    }

    #[inline]
    pub fn dot(&self, other: &SpherePoint) -> f64 {
        dot(&self.xyz, &other.xyz)
    }

    pub fn distance(&self, other: &SpherePoint) -> f64 {
        geodesic_distance(self, other)
    }

    /// Point reached by travelling `distance` radians from `self` along initial bearing
    /// `azimuth` (measured from the direction of decreasing colatitude).
    pub fn offset(&self, distance: f64, azimuth: f64) -> SpherePoint {
        let (e_north, e_east) = self.tangent_frame();
        let (sd, cd) = distance.sin_cos();
        let (sa, ca) = azimuth.sin_cos();
        let v = [
            cd * self.xyz[0] + sd * (ca * e_north[0] + sa * e_east[0]),
            cd * self.xyz[1] + sd * (ca * e_north[1] + sa * e_east[1]),
            cd * self.xyz[2] + sd * (ca * e_north[2] + sa * e_east[2]),
        ];
        SpherePoint::from_vector(v).expect("offset of a unit vector is nonzero")
    }

    /// Orthonormal tangent basis (north, east) at the point. At the poles an arbitrary but
    /// fixed basis is used.
    fn tangent_frame(&self) -> ([f64; 3], [f64; 3]) {
        let [x, y, z] = self.xyz;
        let rho = x.hypot(y);
        if rho < 1e-15 {
            let s = z.signum();
            return ([-s, 0.0, 0.0], [0.0, 1.0, 0.0]);
        }
        let east = [-y / rho, x / rho, 0.0];
        let north = [-z * x / rho, -z * y / rho, rho];
        (north, east)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn cross_norm(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let c = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
}

/// Great-circle distance in radians, in `[0, π]`.
///
/// Evaluated as `atan2(|p×q|, ⟨p,q⟩)`, which equals `arccos⟨p,q⟩` but keeps full
/// relative precision for nearly coincident and nearly antipodal points.
pub fn geodesic_distance(p: &SpherePoint, q: &SpherePoint) -> f64 {
    let d = cross_norm(&p.xyz, &q.xyz).atan2(dot(&p.xyz, &q.xyz));
    d.clamp(0.0, PI)
}

/// Area of a cap of geodesic radius `r`.
pub fn cap_area(r: f64) -> Result<f64> {
    if !(r > 0.0 && r <= PI) {
        return Err(invalid("radius", format!("{r} not in (0, π]")));
    }
    Ok(cap_area_unchecked(r))
}

#[inline]
pub(crate) fn cap_area_unchecked(r: f64) -> f64 {
    // 2π(1 − cos r) = 4π sin²(r/2), the latter without cancellation for small r
    let s = (0.5 * r).sin();
    4.0 * PI * s * s
}

/// An open geodesic disk `D(center, radius)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cap {
    pub center: SpherePoint,
    pub radius: f64,
}

impl Cap {
    pub fn new(center: SpherePoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius <= PI) {
            return Err(invalid("radius", format!("{radius} not in (0, π]")));
        }
        Ok(Cap { center, radius })
    }

    /// The whole sphere as a cap of radius π centred on the north pole.
    pub fn sphere() -> Self {
        Cap {
            center: SpherePoint::north_pole(),
            radius: PI,
        }
    }

    pub fn area(&self) -> f64 {
        cap_area_unchecked(self.radius)
    }

    /// Open-disk membership; the full-radius cap contains every point.
    pub fn contains(&self, p: &SpherePoint) -> bool {
        if self.radius >= PI {
            return true;
        }
        geodesic_distance(&self.center, p) < self.radius
    }
}

/// Number of balls of radius `eps` a greedy covering needs for `cap`.
///
/// Radii are snapped down onto the fixed ladder `r·2^{-j/8}` so that the returned cover is
/// valid at `eps`, and the count is made non-increasing in `eps` by carrying the running
/// maximum down the ladder. Candidate points form a polar lattice of spacing `eps/8`.
pub fn covering_number(cap: &Cap, eps: f64) -> Result<usize> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(invalid("eps", format!("{eps} must be positive and finite")));
    }
    let r = cap.radius;
    if eps >= r {
        return Ok(1);
    }
    let steps = (8.0 * (r / eps).log2()).ceil() as usize;
    let mut best = 1usize;
    for j in 1..=steps {
        let rung = r * 2f64.powf(-(j as f64) / 8.0);
        best = best.max(greedy_cover(cap, rung));
    }
    Ok(best)
}

fn greedy_cover(cap: &Cap, eps: f64) -> usize {
    let spacing = eps / 8.0;
    let cos_eps = eps.cos();
    let mut centers: HashMap<(i64, i64, i64), Vec<[f64; 3]>> = HashMap::new();
    let key = |v: &[f64; 3]| {
        (
            (v[0] / eps).floor() as i64,
            (v[1] / eps).floor() as i64,
            (v[2] / eps).floor() as i64,
        )
    };
    let mut count = 0usize;
    let rings = (cap.radius / spacing).ceil() as usize;
    for ring in 0..rings {
        let rho = ring as f64 * spacing;
        let n = if ring == 0 {
            1
        } else {
            ((TAU * rho.sin() / spacing).ceil() as usize).max(1)
        };
        for k in 0..n {
            let p = cap.center.offset(rho, TAU * k as f64 / n as f64);
            let v = p.vector();
            let (i, j, l) = key(&v);
            let mut covered = false;
            'scan: for di in -1..=1 {
                for dj in -1..=1 {
                    for dl in -1..=1 {
                        if let Some(list) = centers.get(&(i + di, j + dj, l + dl)) {
                            if list.iter().any(|c| dot(c, &v) >= cos_eps) {
                                covered = true;
                                break 'scan;
                            }
                        }
                    }
                }
            }
            if !covered {
                centers.entry((i, j, l)).or_default().push(v);
                count += 1;
            }
        }
    }
    count
}
