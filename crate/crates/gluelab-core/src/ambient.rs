//! Ambient Riemannian geometries.
//!
//! All surfaces in this crate live in one of three backgrounds:
//!
//! - [`AmbientSpace::Euclidean3`] — flat ℝ³ with the identity metric;
//! - [`AmbientSpace::RoundSphere3`] — the unit round 3-sphere S³ ⊂ ℝ⁴,
//!   represented extrinsically by unit 4-vectors (the canonical
//!   representation; coordinate charts are derived views);
//! - [`AmbientSpace::CliffordChart`] — the chart (x, y, z) with metric
//!   `g = diag(1 + sin 2z, 1 − sin 2z, 1)`, a patch of the unit 3-sphere
//!   adapted to the Clifford torus {z = 0}; the metric degenerates at
//!   z = ±π/4, so the chart is guarded at |sin 2z| ≤ 1 − 10⁻⁶.
//!
//! The module provides metric evaluation, Christoffel symbols by central
//! differences of the metric, the geodesic exponential map, and the
//! normal-normal Ricci curvature Ric(ν,ν) needed by the Jacobi operator
//! Δ + |A|² + Ric(ν,ν).
//!
//! Conventions: points and tangent vectors are `Vector4<f64>`. For the two
//! chart-coordinate spaces the layout is (x, y, z, 0); for the sphere the
//! full extrinsic 4-vector is used. The isometric embedding of the Clifford
//! chart into S³,
//!
//! ```text
//! Φ(x,y,z) = (cos(π/4+z)·cos(√2·y), cos(π/4+z)·sin(√2·y),
//!             sin(π/4+z)·cos(√2·x), sin(π/4+z)·sin(√2·x)),
//! ```
//!
//! pulls the round metric back to exactly diag(1+sin 2z, 1−sin 2z, 1); it is
//! exposed so that discrete mesh operators can work extrinsically.

use crate::error::{Error, Result};
use crate::{Vec3, Vec4};
use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

/// Chart-domain guard: CliffordChart points must satisfy
/// |sin 2z| ≤ 1 − CHART_GUARD, and sphere stereographic coordinates must stay
/// this far from the projection pole.
pub const CHART_GUARD: f64 = 1e-6;

/// Central-difference step for Christoffel symbols (charts have O(1) scale).
pub const CHRISTOFFEL_STEP: f64 = 1e-5;

/// Maximum RK4 step, as a fraction of the requested geodesic length.
const GEODESIC_STEP: f64 = 1e-3;

/// One of the three background geometries.
///
/// The round sphere has radius fixed to 1; [`AmbientSpace::radius`] exists so
/// that formulas can name the constant instead of hard-coding it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AmbientSpace {
    /// Flat Euclidean 3-space.
    Euclidean3,
    /// The unit round 3-sphere S³ ⊂ ℝ⁴ (extrinsic representation).
    RoundSphere3,
    /// The Clifford-torus-adapted chart of S³ with metric
    /// diag(1+sin 2z, 1−sin 2z, 1).
    CliffordChart,
}

impl AmbientSpace {
    /// Radius of the space where meaningful (RoundSphere3); fixed to 1.
    pub fn radius(self) -> f64 {
        1.0
    }

    /// Number of coordinates a point of this space occupies in its `Vec4`.
    pub fn coord_dim(self) -> usize {
        match self {
            AmbientSpace::RoundSphere3 => 4,
            _ => 3,
        }
    }

    /// Whether this space is a representation of the curved background S³.
    pub fn is_curved(self) -> bool {
        !matches!(self, AmbientSpace::Euclidean3)
    }

    /// Validate that `p` is an admissible point of this space.
    pub fn check_point(self, p: Vec4) -> Result<()> {
        match self {
            AmbientSpace::Euclidean3 => Ok(()),
            AmbientSpace::RoundSphere3 => {
                let n = p.norm();
                if (n - 1.0).abs() > 1e-8 {
                    Err(Error::ChartDomain(format!(
                        "sphere point has |p| = {n:.12}, expected 1"
                    )))
                } else {
                    Ok(())
                }
            }
            AmbientSpace::CliffordChart => {
                let s = (2.0 * p.z).sin();
                if s.abs() > 1.0 - CHART_GUARD {
                    Err(Error::ChartDomain(format!(
                        "|sin 2z| = {:.9} exceeds chart guard 1 - 1e-6 (z = {:.9})",
                        s.abs(),
                        p.z
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Metric tensor at `p` as a 3×3 symmetric positive-definite matrix in
    /// chart coordinates.
    ///
    /// For `CliffordChart` this is diag(1+sin 2z, 1−sin 2z, 1); for
    /// `Euclidean3` the identity. For `RoundSphere3` (canonically extrinsic)
    /// the declared local chart is stereographic projection from −e₄, whose
    /// induced metric is the conformal factor 4/(1+|u|²)² times the identity;
    /// points too close to the projection pole are rejected.
    pub fn metric_at(self, p: Vec4) -> Result<Matrix3<f64>> {
        self.check_point(p)?;
        match self {
            AmbientSpace::Euclidean3 => Ok(Matrix3::identity()),
            AmbientSpace::CliffordChart => {
                let s = (2.0 * p.z).sin();
                Ok(Matrix3::from_diagonal(&Vec3::new(1.0 + s, 1.0 - s, 1.0)))
            }
            AmbientSpace::RoundSphere3 => {
                let denom = 1.0 + p.w;
                if denom < CHART_GUARD {
                    return Err(Error::ChartDomain(
                        "point at the stereographic projection pole -e4".into(),
                    ));
                }
                let u2 = (p.x * p.x + p.y * p.y + p.z * p.z) / (denom * denom);
                let c = 4.0 / ((1.0 + u2) * (1.0 + u2));
                Ok(Matrix3::identity() * c)
            }
        }
    }

    /// Inner product of tangent vectors `u`, `v` at `p` in the ambient
    /// metric. For the sphere this is the extrinsic 4-dot-product.
    pub fn metric_dot(self, p: Vec4, u: Vec4, v: Vec4) -> Result<f64> {
        match self {
            AmbientSpace::Euclidean3 => Ok(u.x * v.x + u.y * v.y + u.z * v.z),
            AmbientSpace::RoundSphere3 => Ok(u.dot(&v)),
            AmbientSpace::CliffordChart => {
                let g = self.metric_at(p)?;
                let (u3, v3) = (u.xyz(), v.xyz());
                Ok((g * u3).dot(&v3))
            }
        }
    }

    /// Norm of a tangent vector at `p` in the ambient metric.
    pub fn metric_norm(self, p: Vec4, v: Vec4) -> Result<f64> {
        Ok(self.metric_dot(p, v, v)?.max(0.0).sqrt())
    }

    /// Christoffel symbols Γ^k_{ij} at `p`, computed by central differences
    /// of [`AmbientSpace::metric_at`] with step [`CHRISTOFFEL_STEP`].
    ///
    /// Returned as three symmetric matrices indexed by the upper index k.
    /// Only chart-coordinate spaces support this; the sphere is handled
    /// extrinsically throughout and has no canonical chart here.
    pub fn christoffel(self, p: Vec4) -> Result<[Matrix3<f64>; 3]> {
        match self {
            AmbientSpace::Euclidean3 => Ok([Matrix3::zeros(); 3]),
            AmbientSpace::RoundSphere3 => Err(Error::BadParameter(
                "RoundSphere3 is extrinsic; chart Christoffel symbols are not defined".into(),
            )),
            AmbientSpace::CliffordChart => {
                let h = CHRISTOFFEL_STEP;
                // dg[l] = ∂_l g, central differences.
                let mut dg = [Matrix3::<f64>::zeros(); 3];
                for l in 0..3 {
                    let mut dp = Vec4::zeros();
                    dp[l] = h;
                    let gp = self.metric_at(p + dp)?;
                    let gm = self.metric_at(p - dp)?;
                    dg[l] = (gp - gm) / (2.0 * h);
                }
                let g = self.metric_at(p)?;
                let ginv = g.try_inverse().ok_or_else(|| {
                    Error::ChartDomain("metric not invertible inside chart guard".into())
                })?;
                // Γ^k_{ij} = ½ g^{kl} (∂_i g_{jl} + ∂_j g_{il} − ∂_l g_{ij})
                let mut gamma = [Matrix3::<f64>::zeros(); 3];
                for k in 0..3 {
                    for i in 0..3 {
                        for j in 0..3 {
                            let mut s = 0.0;
                            for l in 0..3 {
                                s += ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                            }
                            gamma[k][(i, j)] = 0.5 * s;
                        }
                    }
                }
                Ok(gamma)
            }
        }
    }

    /// Geodesic exponential map: the point at geodesic distance |v| from `p`
    /// along `v`.
    ///
    /// Euclidean: `p + v`. Sphere: the great-circle formula
    /// cos(|v|)·p + sin(|v|)·v/|v| (requires v ⟂ p). CliffordChart: classical
    /// RK4 integration of the geodesic equation with fixed step ≤ 10⁻³ of the
    /// requested length. Lengths beyond π (the injectivity radius of S³)
    /// are rejected for the curved spaces.
    pub fn exp_map(self, p: Vec4, v: Vec4) -> Result<Vec4> {
        match self {
            AmbientSpace::Euclidean3 => Ok(p + v),
            AmbientSpace::RoundSphere3 => {
                self.check_point(p)?;
                let n = v.norm();
                if n == 0.0 {
                    return Ok(p);
                }
                let dot = p.dot(&v);
                if dot.abs() > 1e-8 * n.max(1.0) {
                    return Err(Error::NonTangent { dot });
                }
                let bound = std::f64::consts::PI;
                if n > bound + 1e-12 {
                    return Err(Error::InjectivityExceeded { len: n, bound });
                }
                let q = p * n.cos() + v * (n.sin() / n);
                Ok(q / q.norm())
            }
            AmbientSpace::CliffordChart => {
                let len = self.metric_norm(p, v)?;
                if len == 0.0 {
                    self.check_point(p)?;
                    return Ok(p);
                }
                let bound = std::f64::consts::PI;
                if len > bound + 1e-12 {
                    return Err(Error::InjectivityExceeded { len, bound });
                }
                let n = (len / GEODESIC_STEP).ceil() as usize;
                let path = self.geodesic_path(p, v, n.max(1))?;
                Ok(path.last().expect("nonempty path").0)
            }
        }
    }

    /// Integrate the geodesic t ↦ exp_p(t·v), t ∈ [0,1], with `nsteps` RK4
    /// steps, returning the (point, velocity) samples at all nsteps+1 nodes.
    ///
    /// Used by the exponential map in charts and by tests that verify the
    /// constant-speed property. For the non-chart spaces the closed forms
    /// are sampled instead.
    pub fn geodesic_path(self, p: Vec4, v: Vec4, nsteps: usize) -> Result<Vec<(Vec4, Vec4)>> {
        let n = nsteps.max(1);
        match self {
            AmbientSpace::Euclidean3 => Ok((0..=n)
                .map(|i| {
                    let t = i as f64 / n as f64;
                    (p + v * t, v)
                })
                .collect()),
            AmbientSpace::RoundSphere3 => {
                let vn = v.norm();
                (0..=n)
                    .map(|i| {
                        let t = i as f64 / n as f64;
                        if vn == 0.0 {
                            return Ok((p, v));
                        }
                        let q = self.exp_map(p, v * t)?;
                        // Parallel-transported velocity along the great circle.
                        let vel = v * (t * vn).cos() - p * (vn * (t * vn).sin());
                        Ok((q, vel))
                    })
                    .collect()
            }
            AmbientSpace::CliffordChart => {
                self.check_point(p)?;
                let mut x = p;
                let mut u = v;
                let h = 1.0 / n as f64;
                let mut out = Vec::with_capacity(n + 1);
                out.push((x, u));
                for _ in 0..n {
                    let (k1x, k1u) = self.geodesic_rhs(x, u)?;
                    let (k2x, k2u) = self.geodesic_rhs(x + k1x * (h / 2.0), u + k1u * (h / 2.0))?;
                    let (k3x, k3u) = self.geodesic_rhs(x + k2x * (h / 2.0), u + k2u * (h / 2.0))?;
                    let (k4x, k4u) = self.geodesic_rhs(x + k3x * h, u + k3u * h)?;
                    x += (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (h / 6.0);
                    u += (k1u + k2u * 2.0 + k3u * 2.0 + k4u) * (h / 6.0);
                    self.check_point(x)?;
                    out.push((x, u));
                }
                Ok(out)
            }
        }
    }

    /// Right-hand side of the first-order geodesic system (ẋ, u̇) =
    /// (u, −Γ(x)(u,u)).
    fn geodesic_rhs(self, x: Vec4, u: Vec4) -> Result<(Vec4, Vec4)> {
        let gamma = self.christoffel(x)?;
        let u3 = u.xyz();
        let mut acc = Vec4::zeros();
        for k in 0..3 {
            acc[k] = -(gamma[k] * u3).dot(&u3);
        }
        Ok((u, acc))
    }

    /// Ricci curvature in the direction of the unit normal, Ric(ν,ν):
    /// 0 for Euclidean 3-space, 2 for the unit round 3-sphere in either
    /// representation. Exactly even in ν by construction.
    pub fn ricci_normal(self, p: Vec4, nu: Vec4) -> Result<f64> {
        self.check_point(p)?;
        let n = self.metric_norm(p, nu)?;
        if (n - 1.0).abs() > 1e-6 {
            return Err(Error::NonUnitVector { norm: n });
        }
        if self == AmbientSpace::RoundSphere3 {
            let dot = p.dot(&nu);
            if dot.abs() > 1e-6 {
                return Err(Error::NonTangent { dot });
            }
        }
        Ok(match self {
            AmbientSpace::Euclidean3 => 0.0,
            _ => 2.0,
        })
    }

    /// Extrinsic ℝ⁴ position of a point: identity for the sphere, (x,y,z,0)
    /// for Euclidean space, and the isometric embedding Φ into S³ for the
    /// Clifford chart (see module docs).
    pub fn embed_r4(self, p: Vec4) -> Result<Vec4> {
        match self {
            AmbientSpace::Euclidean3 => Ok(Vec4::new(p.x, p.y, p.z, 0.0)),
            AmbientSpace::RoundSphere3 => {
                self.check_point(p)?;
                Ok(p)
            }
            AmbientSpace::CliffordChart => {
                self.check_point(p)?;
                let a = std::f64::consts::FRAC_PI_4 + p.z;
                let r2 = std::f64::consts::SQRT_2;
                Ok(Vec4::new(
                    a.cos() * (r2 * p.y).cos(),
                    a.cos() * (r2 * p.y).sin(),
                    a.sin() * (r2 * p.x).cos(),
                    a.sin() * (r2 * p.x).sin(),
                ))
            }
        }
    }

    /// Push a tangent vector at `p` forward along [`AmbientSpace::embed_r4`]
    /// (analytic differential; identity for the non-chart spaces).
    pub fn embed_tangent_r4(self, p: Vec4, v: Vec4) -> Result<Vec4> {
        match self {
            AmbientSpace::Euclidean3 => Ok(Vec4::new(v.x, v.y, v.z, 0.0)),
            AmbientSpace::RoundSphere3 => Ok(v),
            AmbientSpace::CliffordChart => {
                self.check_point(p)?;
                let a = std::f64::consts::FRAC_PI_4 + p.z;
                let r2 = std::f64::consts::SQRT_2;
                let (sy, cy) = (r2 * p.y).sin_cos();
                let (sx, cx) = (r2 * p.x).sin_cos();
                let dx = Vec4::new(0.0, 0.0, -r2 * a.sin() * sx, r2 * a.sin() * cx);
                let dy = Vec4::new(-r2 * a.cos() * sy, r2 * a.cos() * cy, 0.0, 0.0);
                let dz = Vec4::new(-a.sin() * cy, -a.sin() * sy, a.cos() * cx, a.cos() * sx);
                Ok(dx * v.x + dy * v.y + dz * v.z)
            }
        }
    }

    /// Principal-branch chart coordinates (x, y, z, 0) of a unit 4-vector on
    /// the Clifford-chart patch of S³. Inverse of [`AmbientSpace::embed_r4`]
    /// up to the √2·π periodicity of x and y.
    pub fn chart_from_r4(p4: Vec4) -> Vec3 {
        let rxy = p4.x.hypot(p4.y);
        let rzw = p4.z.hypot(p4.w);
        let z = rzw.atan2(rxy) - std::f64::consts::FRAC_PI_4;
        let r2 = std::f64::consts::SQRT_2;
        let y = p4.y.atan2(p4.x) / r2;
        let x = p4.w.atan2(p4.z) / r2;
        Vec3::new(x, y, z)
    }
}
