//! The singly periodic Scherk family: implicit surface, wing asymptotics,
//! Gauss-map conformal factor, dislocations, and extended tetrads.
//!
//! The family is the zero set of
//!
//!   F_α(x) = cos²α·cosh(x₁/cos α) − sin²α·cosh(x₂/sin α) − cos x₃,
//!
//! a singly periodic embedded minimal surface (period (0,0,2π)) with four
//! flat "wings" asymptotic to vertical half-planes in the directions
//! e_{i,α} = R_i(cos α, sin α, 0), offset sideways by
//! b_α = sin 2α·ln(cot α). Here R₁ is the identity and R₂, R₋₁, R₋₂ are
//! the planar reflections in the x₁-axis, the origin, and the x₂-axis.
//! At α = π/4 the wings are orthogonal and the surface admits the cleaner
//! normalization sinh x₁ sinh x₂ = sin x₃.
//!
//! Each wing is the normal graph of a function f_α(x, s) ∈ [−ε, ε] over
//! its half-plane, decaying like e^{−s}; the wing start distance s₀ is
//! chosen adaptively so that |f_α| ≤ ε holds from s = 0 on. Near the axis
//! the surface is the graph x₃ = arccos(cos²α·cosh(x₁/cosα) −
//! sin²α·cosh(x₂/sinα)), which covers the slab x₃ ∈ [0, π] and carries
//! the saddle points at x₃ = 2α and π − ... (its reflections).
//!
//! Dislocations bend the configuration: D_ϑ rotates the four far sectors
//! of the plane by ±ϑ₁/2, ±ϑ₂/2 (identity near the coordinate axes and
//! the x₃-axis), each wing may be rotated by φ_i about its vertical root
//! line with a smooth blend over s ∈ [0, 1], and a final rotation φ_rot
//! about the x₃-axis is applied. The asymptotic directions plus the φ_i
//! form the "extended tetrad", in bijection with (α, ϑ, φ, φ_rot).

use crate::ambient::AmbientSpace;
use crate::error::{Error, Result};
use crate::surfacecalc::{cutoff_psi, ParamPatch, RegionTag};
use crate::{Vec2, Vec3, Vec4};
use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Default angle margin δ₀ (radians); keeps the admissible α-interval
/// [10δ₀, π/2 − 10δ₀] wide.
pub const DEFAULT_DELTA0: f64 = 0.05;

/// Default wing-graph bound ε; must lie in (0, 10⁻³).
pub const DEFAULT_EPS: f64 = 5.0e-4;

/// Default wing truncation length: e⁻⁸ ≈ 3×10⁻⁴ is below mesh error.
pub const DEFAULT_S_MAX: f64 = 8.0;

/// Radius where dislocation sector rotations are fully engaged.
const DISLOCATION_R_OUT: f64 = 5.0;

/// Radius below which dislocations are the identity.
const DISLOCATION_R_IN: f64 = 2.0;

/// Parameters of one Scherk surface and its wing description.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ScherkParams {
    /// Asymptote half-angle; the wings point along R_i(cos α, sin α, 0).
    pub alpha: f64,
    /// Angle margin δ₀; α must lie in [10δ₀, π/2 − 10δ₀].
    pub delta0: f64,
    /// Wing start distance (adaptive: smallest half-integer making
    /// |f_α| ≤ eps on s ≥ 0 across the admissible α-range).
    pub s0: f64,
    /// Wing-graph bound ε ∈ (0, 10⁻³).
    pub eps: f64,
    /// Wing truncation length in s.
    pub s_max: f64,
}

/// Dislocation controls: sector rotations ϑ, per-wing rotations φ_i, and
/// a final rotation about the x₃-axis.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DislocationParams {
    /// (ϑ₁, ϑ₂): relative rotations of opposing wing pairs.
    pub theta: [f64; 2],
    /// φ_i for wings (1, 2, −1, −2): rotation of each wing about its
    /// vertical root line.
    pub phi: [f64; 4],
    /// Rotation of the whole configuration about the x₃-axis.
    pub phi_rot: f64,
}

/// Regions of the Scherk surface that can be meshed as structured patches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScherkRegion {
    /// The graph piece over a square around the axis (slab x₃ ∈ [0, π]).
    Core,
    /// Wing i ∈ {1, 2, −1, −2} in its (x, s) coordinates.
    Wing(i8),
}

/// Asymptotic directions of the four (possibly dislocated) wings plus the
/// wing rotation angles; in bijection with (α, ϑ, φ, φ_rot).
#[derive(Clone, Debug)]
pub struct ExtendedTetrad {
    /// Unit asymptote directions for wings (1, 2, −1, −2).
    pub e: [Vec2; 4],
    /// Wing rotation angles φ_i in the same order.
    pub phi: [f64; 4],
}

/// Which graph family a horizontal slice of the surface belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArcFamily {
    /// cos x₃ < cos 2α: two arcs above and below the x₁-axis, each a
    /// graph x₂ = ±ρ(x₁).
    TopBottom,
    /// cos x₃ > cos 2α: two arcs right and left of the x₂-axis, each a
    /// graph x₁ = ±σ(x₂).
    LeftRight,
}

/// Slot of wing index i ∈ {1, 2, −1, −2} in fixed array order.
pub fn wing_slot(i: i8) -> Result<usize> {
    match i {
        1 => Ok(0),
        2 => Ok(1),
        -1 => Ok(2),
        -2 => Ok(3),
        _ => Err(Error::BadParameter(format!(
            "wing index must be one of 1, 2, -1, -2 (got {i})"
        ))),
    }
}

const WING_INDICES: [i8; 4] = [1, 2, -1, -2];

/// The planar reflection R_i: identity, x₁-axis, origin, x₂-axis for
/// i = 1, 2, −1, −2.
fn reflect_ri(i: i8, v: Vec2) -> Vec2 {
    match i {
        1 => v,
        2 => Vec2::new(v.x, -v.y),
        -1 => Vec2::new(-v.x, -v.y),
        _ => Vec2::new(-v.x, v.y),
    }
}

/// Unit wing direction e_{i,α} and its left normal e⊥_{i,α}.
pub fn wing_frame(alpha: f64, i: i8) -> Result<(Vec2, Vec2)> {
    wing_slot(i)?;
    let e1 = Vec2::new(alpha.cos(), alpha.sin());
    let p1 = Vec2::new(-alpha.sin(), alpha.cos());
    Ok((reflect_ri(i, e1), reflect_ri(i, p1)))
}

/// Sideways offset b_α = sin 2α·ln(cot α) of the asymptotic half-planes.
pub fn asymptote_offset(alpha: f64) -> f64 {
    -(2.0 * alpha).sin() * alpha.tan().ln()
}

/// F_α at a point (free-standing form used before parameters exist).
pub fn implicit_value_at(alpha: f64, p: Vec3) -> f64 {
    let (sa, ca) = alpha.sin_cos();
    ca * ca * (p.x / ca).cosh() - sa * sa * (p.y / sa).cosh() - p.z.cos()
}

/// The magnitude of the terms summed in F_α; |F| can only be evaluated to
/// machine precision relative to this scale.
pub fn implicit_scale(alpha: f64, p: Vec3) -> f64 {
    let (sa, ca) = alpha.sin_cos();
    ca * ca * (p.x / ca).cosh() + sa * sa * (p.y / sa).cosh() + 1.0
}

/// ∇F_α.
pub fn implicit_gradient(alpha: f64, p: Vec3) -> Vec3 {
    let (sa, ca) = alpha.sin_cos();
    Vec3::new(
        ca * (p.x / ca).sinh(),
        -sa * (p.y / sa).sinh(),
        p.z.sin(),
    )
}

/// The defining function of the Scherk surface with parameters `params`.
pub fn implicit_value(params: &ScherkParams, p: Vec3) -> f64 {
    implicit_value_at(params.alpha, p)
}

/// The orthogonal-wing normalization sinh x₁ sinh x₂ − sin x₃, whose zero
/// set is the α = π/4 surface rotated by 45° about the x₃-axis.
pub fn implicit_value_ortho(p: Vec3) -> f64 {
    p.x.sinh() * p.y.sinh() - p.z.sin()
}

/// |A|² of the level set {F_α = 0} at an on-surface point, from the
/// projected Hessian: |A|² = ‖P(∇²F)P‖²_F / |∇F|² with P = 1 − n⊗n.
/// The Hessian of F_α is diagonal, which keeps this exact and cheap.
pub fn second_form_sq_implicit(alpha: f64, p: Vec3) -> Result<f64> {
    let g = implicit_gradient(alpha, p);
    let gn2 = g.norm_squared();
    if gn2 < 1e-24 {
        return Err(Error::BadParameter(
            "second fundamental form undefined where the gradient vanishes".into(),
        ));
    }
    let n = g / gn2.sqrt();
    let (sa, ca) = alpha.sin_cos();
    let h = Matrix3::from_diagonal(&Vec3::new(
        (p.x / ca).cosh(),
        -(p.y / sa).cosh(),
        p.z.cos(),
    ));
    let proj = Matrix3::identity() - n * n.transpose();
    let m = proj * h * proj;
    Ok(m.norm_squared() / gn2)
}

impl ScherkParams {
    /// Construct with default margin, graph bound, and truncation.
    pub fn new(alpha: f64) -> Result<ScherkParams> {
        ScherkParams::with_delta0(alpha, DEFAULT_DELTA0)
    }

    /// Construct with an explicit angle margin δ₀ (for α close to 0 or
    /// π/2 a smaller margin widens the admissible interval).
    pub fn with_delta0(alpha: f64, delta0: f64) -> Result<ScherkParams> {
        ScherkParams::with_config(alpha, delta0, DEFAULT_EPS, DEFAULT_S_MAX)
    }

    pub fn with_config(alpha: f64, delta0: f64, eps: f64, s_max: f64) -> Result<ScherkParams> {
        if !(delta0 > 0.0 && delta0 < 0.1) {
            return Err(Error::BadParameter(format!(
                "angle margin must lie in (0, 0.1), got {delta0}"
            )));
        }
        if !(alpha >= 10.0 * delta0 && alpha <= PI / 2.0 - 10.0 * delta0) {
            return Err(Error::BadParameter(format!(
                "asymptote angle {alpha:.4} outside [{:.4}, {:.4}]",
                10.0 * delta0,
                PI / 2.0 - 10.0 * delta0
            )));
        }
        if !(eps > 0.0 && eps < 1e-3) {
            return Err(Error::BadParameter(format!(
                "wing graph bound must lie in (0, 10⁻³), got {eps}"
            )));
        }
        if !(s_max >= 1.0 && s_max.is_finite()) {
            return Err(Error::BadParameter(format!(
                "wing truncation must be ≥ 1, got {s_max}"
            )));
        }
        let s0 = adaptive_s0(delta0, eps)?;
        Ok(ScherkParams {
            alpha,
            delta0,
            s0,
            eps,
            s_max,
        })
    }

    /// Heights of the two saddle rows in [0, 2π): x₃ = 2α and 2π − 2α.
    pub fn saddle_heights(&self) -> (f64, f64) {
        (2.0 * self.alpha, 2.0 * PI - 2.0 * self.alpha)
    }

    /// b_α for these parameters.
    pub fn b_alpha(&self) -> f64 {
        asymptote_offset(self.alpha)
    }
}

/// Smallest half-integer wing start distance such that the measured wing
/// graph satisfies |f_α| ≤ ε on s ≥ 0 across the admissible α-range.
fn adaptive_s0(delta0: f64, eps: f64) -> Result<f64> {
    let alphas = [
        10.0 * delta0,
        PI / 8.0,
        PI / 4.0,
        3.0 * PI / 8.0,
        PI / 2.0 - 10.0 * delta0,
    ];
    'candidates: for k in 2..=60 {
        let s0 = 0.5 * k as f64;
        for &alpha in &alphas {
            for j in 0..48 {
                let x = 2.0 * PI * j as f64 / 48.0;
                match wing_offset(alpha, s0, eps, 1, x, 0.0) {
                    Ok(f) if f.abs() <= eps => {}
                    _ => continue 'candidates,
                }
            }
        }
        return Ok(s0);
    }
    Err(Error::RootFind(
        "no wing start distance ≤ 30 meets the graph bound".into(),
    ))
}

/// Root-find the wing-graph offset f_α(x, s) for wing i: the unique w with
/// |w| ≤ 3ε such that F_α vanishes at b_{i,α}(x,s) + w·e⊥_{i,α}.
fn wing_offset(alpha: f64, s0: f64, eps: f64, i: i8, x: f64, s: f64) -> Result<f64> {
    let (e, ep) = wing_frame(alpha, i)?;
    let b = asymptote_offset(alpha);
    let t = s0 + s;
    let base = Vec3::new(t * e.x + b * ep.x, t * e.y + b * ep.y, x);
    let ep3 = Vec3::new(ep.x, ep.y, 0.0);
    let eval = |w: f64| implicit_value_at(alpha, base + ep3 * w);

    let (mut lo, mut hi) = (-3.0 * eps, 3.0 * eps);
    let mut flo = eval(lo);
    let fhi = eval(hi);
    if (flo > 0.0) == (fhi > 0.0) {
        return Err(Error::RootFind(format!(
            "no wing-graph zero within ±3ε at (x, s) = ({x:.3}, {s:.3}); \
             wing start distance too small"
        )));
    }
    let mut w = 0.0;
    for _ in 0..40 {
        w = 0.5 * (lo + hi);
        let fw = eval(w);
        if (fw > 0.0) == (flo > 0.0) {
            lo = w;
            flo = fw;
        } else {
            hi = w;
        }
        if hi - lo < 1e-3 * eps {
            break;
        }
    }
    // Newton polish; F is transverse to the surface so this is quadratic.
    for _ in 0..6 {
        let p = base + ep3 * w;
        let f = implicit_value_at(alpha, p);
        let slope = implicit_gradient(alpha, p).dot(&ep3);
        if slope == 0.0 {
            break;
        }
        let step = f / slope;
        w -= step;
        if step.abs() < 1e-16 * (1.0 + w.abs()) {
            break;
        }
    }
    if !w.is_finite() || w.abs() > 4.0 * eps {
        return Err(Error::RootFind(format!(
            "wing-graph root escaped its bracket at (x, s) = ({x:.3}, {s:.3})"
        )));
    }
    Ok(w)
}

/// Wing graph offset and half-plane offset: (f_α(x, s), b_α).
pub fn wing_profile(params: &ScherkParams, i: i8, x: f64, s: f64) -> Result<(f64, f64)> {
    if !(s >= 0.0) {
        return Err(Error::BadParameter(format!(
            "wing coordinate s must be ≥ 0, got {s}"
        )));
    }
    if s > params.s_max {
        return Err(Error::BadParameter(format!(
            "wing coordinate s = {s} beyond the truncation {}",
            params.s_max
        )));
    }
    let f = wing_offset(params.alpha, params.s0, params.eps, i, x, s)?;
    Ok((f, params.b_alpha()))
}

/// The wing-graph point b̃_{i,α}(x, s) ∈ ℝ³.
pub fn wing_point(params: &ScherkParams, i: i8, x: f64, s: f64) -> Result<Vec3> {
    let (f, b) = wing_profile(params, i, x, s)?;
    let (e, ep) = wing_frame(params.alpha, i)?;
    let t = params.s0 + s;
    Ok(Vec3::new(
        t * e.x + (b + f) * ep.x,
        t * e.y + (b + f) * ep.y,
        x,
    ))
}

/// Half width of the axis square over which the slab x₃ ∈ [0, π] is a
/// graph: 0.95·min of the exits along the two axes.
fn core_half_width(alpha: f64) -> f64 {
    let (sa, ca) = alpha.sin_cos();
    let acosh = |z: f64| (z + (z * z - 1.0).sqrt()).ln();
    let exit_x = ca * acosh((1.0 + sa * sa) / (ca * ca));
    let exit_y = sa * acosh((1.0 + ca * ca) / (sa * sa));
    0.95 * exit_x.min(exit_y)
}

/// Height of the surface over a point of the axis square.
fn core_height(alpha: f64, x1: f64, x2: f64) -> f64 {
    let (sa, ca) = alpha.sin_cos();
    let g = ca * ca * (x1 / ca).cosh() - sa * sa * (x2 / sa).cosh();
    g.clamp(-1.0, 1.0).acos()
}

/// Sample a structured patch of the surface: the core graph over the axis
/// square, or a wing over (x, s) ∈ [−π, 3π] × [0, s_max]. `n` is the
/// sample count per 2π of the periodic coordinate (and per side for the
/// core square).
pub fn scherk_patch(
    params: &ScherkParams,
    region: ScherkRegion,
    n: usize,
) -> Result<ParamPatch> {
    if n < 8 {
        return Err(Error::BadParameter(format!(
            "resolution must be at least 8 samples per period, got {n}"
        )));
    }
    let linspace = |a: f64, b: f64, m: usize| -> Vec<f64> {
        (0..m)
            .map(|k| a + (b - a) * k as f64 / (m - 1) as f64)
            .collect()
    };
    match region {
        ScherkRegion::Core => {
            let a = core_half_width(params.alpha);
            let grid = linspace(-a, a, n);
            let alpha = params.alpha;
            ParamPatch::from_fn(
                AmbientSpace::Euclidean3,
                grid.clone(),
                grid,
                None,
                None,
                RegionTag::Core,
                move |u, v| Vec4::new(u, v, core_height(alpha, u, v), 0.0),
            )
        }
        ScherkRegion::Wing(i) => {
            wing_slot(i)?;
            let us = linspace(-PI, 3.0 * PI, 2 * n + 1);
            let ns = ((n as f64 * params.s_max / (2.0 * PI)).ceil() as usize).max(2) + 1;
            let vs = linspace(0.0, params.s_max, ns);
            let mut pts = Vec::with_capacity(us.len() * vs.len());
            for &x in &us {
                for &s in &vs {
                    let p = wing_point(params, i, x, s)?;
                    pts.push(Vec4::new(p.x, p.y, p.z, 0.0));
                }
            }
            ParamPatch::new(
                AmbientSpace::Euclidean3,
                us,
                vs,
                pts,
                None,
                None,
                RegionTag::Wing,
            )
        }
    }
}

/// Conformal factor of the Gauss map at a patch node: the pullback of the
/// round metric is ν*g = ½|A|²·g on a minimal surface, and ½|A|² > 0 on
/// the Scherk family (no umbilics).
pub fn gauss_conformal_factor(patch: &ParamPatch, iu: usize, iv: usize) -> Result<f64> {
    Ok(0.5 * patch.second_form_sq(iu, iv)?)
}

/// Which arc family the slice at height t belongs to.
pub fn slice_family(alpha: f64, t: f64) -> ArcFamily {
    if t.cos() < (2.0 * alpha).cos() {
        ArcFamily::TopBottom
    } else {
        ArcFamily::LeftRight
    }
}

/// One point of the positive slice arc at height t: for TopBottom the arc
/// is the graph x₂ = ρ(x₁) with `a` = x₁; for LeftRight it is x₁ = σ(x₂)
/// with `a` = x₂. The negative arc is the image under (x₁,x₂) ↦ (−x₁,−x₂).
pub fn arc_point(alpha: f64, t: f64, family: ArcFamily, a: f64) -> Result<Vec3> {
    let (sa, ca) = alpha.sin_cos();
    let acosh = |z: f64| (z + (z * z - 1.0).max(0.0).sqrt()).ln();
    match family {
        ArcFamily::TopBottom => {
            let z = (ca * ca * (a / ca).cosh() - t.cos()) / (sa * sa);
            if z < 1.0 - 1e-12 {
                return Err(Error::RootFind(format!(
                    "slice at height {t:.4} has no upper arc over x₁ = {a:.4}"
                )));
            }
            Ok(Vec3::new(a, sa * acosh(z.max(1.0)), t))
        }
        ArcFamily::LeftRight => {
            let z = (sa * sa * (a / sa).cosh() + t.cos()) / (ca * ca);
            if z < 1.0 - 1e-12 {
                return Err(Error::RootFind(format!(
                    "slice at height {t:.4} has no right arc over x₂ = {a:.4}"
                )));
            }
            Ok(Vec3::new(ca * acosh(z.max(1.0)), a, t))
        }
    }
}

/// Nodes and weights of n-point Gauss–Legendre quadrature on [0, 1].
fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Newton iteration on P_n from the Chebyshev-like initial guess.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        nodes[i] = 0.5 * (1.0 - x); // descending x maps to ascending node
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Total Gauss-map area ∫ ½|A|² dA of the slab S₀ = {x₃ ∈ [0, π]},
/// which equals the area 2π of the hemisphere the Gauss map covers.
///
/// The integral is taken slice-wise by the coarea formula,
/// ∫ dt ∮ ½|A|²·|∇F|/|F_⟂| da along each slice graph, with the height
/// integral split at the saddle t = 2α and regularized by t = 2α ± u²
/// (the slice integral has an integrable logarithmic peak there).
pub fn slab_gauss_area(params: &ScherkParams, n_quad: usize, r_max: f64) -> Result<f64> {
    let alpha = params.alpha;
    let (nodes, weights) = gauss_legendre_unit(n_quad.max(4));

    // ∮ over both arcs of the slice at height t.
    let slice_integral = |t: f64| -> Result<f64> {
        let family = slice_family(alpha, t);
        // Arc-length substitution a = w·sinh(v) resolves the near-origin
        // peak of near-saddle slices; w is the closest-approach scale.
        let origin_gap = arc_point(alpha, t, family, 0.0)?;
        let w = origin_gap.y.abs().max(origin_gap.x.abs()).max(1e-9);
        let vmax = (r_max / w).asinh();
        let m = 220usize;
        let mut acc = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        for k in 0..=m {
            let v = -vmax + 2.0 * vmax * k as f64 / m as f64;
            let a = w * v.sinh();
            let p = arc_point(alpha, t, family, a)?;
            let grad = implicit_gradient(alpha, p);
            let transverse = match family {
                ArcFamily::TopBottom => grad.y.abs(),
                ArcFamily::LeftRight => grad.x.abs(),
            };
            let a2 = second_form_sq_implicit(alpha, p)?;
            let integrand = 0.5 * a2 * grad.norm() / transverse.max(1e-300);
            if let Some((pa, pi)) = prev {
                acc += 0.5 * (pi + integrand) * (a - pa);
            }
            prev = Some((a, integrand));
        }
        Ok(2.0 * acc) // the mirror arc contributes equally
    };

    let saddle = 2.0 * alpha;
    let mut total = 0.0;
    for (lo, hi) in [(0.0, saddle), (saddle, PI)] {
        let umax = (hi - lo).sqrt();
        for (&x, &wq) in nodes.iter().zip(&weights) {
            let u = umax * x;
            // t approaches the saddle as u → 0 regardless of side.
            let t = if lo == saddle { lo + u * u } else { hi - u * u };
            total += wq * umax * 2.0 * u * slice_integral(t)?;
        }
    }
    Ok(total)
}

impl DislocationParams {
    pub fn zero() -> DislocationParams {
        DislocationParams {
            theta: [0.0; 2],
            phi: [0.0; 4],
            phi_rot: 0.0,
        }
    }

    pub fn validate(&self, delta0: f64) -> Result<()> {
        for (label, v) in [("ϑ₁", self.theta[0]), ("ϑ₂", self.theta[1])] {
            if v.abs() > delta0 {
                return Err(Error::BadParameter(format!(
                    "dislocation {label} = {v:.4} exceeds the margin {delta0}"
                )));
            }
        }
        for (slot, v) in self.phi.iter().enumerate() {
            if v.abs() > delta0 {
                return Err(Error::BadParameter(format!(
                    "wing rotation φ[{slot}] = {v:.4} exceeds the margin {delta0}"
                )));
            }
        }
        if self.phi_rot.abs() > delta0 {
            return Err(Error::BadParameter(format!(
                "axial rotation {:.4} exceeds the margin {delta0}",
                self.phi_rot
            )));
        }
        Ok(())
    }
}

/// Centers of the four rotation sectors, labeled like the reflections:
/// sector i is R_i of the third-quadrant sector.
fn sector_center(i: i8) -> f64 {
    match i {
        1 => 5.0 * PI / 4.0,
        -1 => PI / 4.0,
        2 => 3.0 * PI / 4.0,
        _ => 7.0 * PI / 4.0,
    }
}

/// Smallest absolute angular difference between two angles.
fn angle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// The dislocation diffeomorphism D_ϑ of ℝ³ (x₃ fixed): identity near the
/// coordinate axes and the x₃-axis; on the four far sectors (radius > 5,
/// margins 5δ₀ from the axes) a rotation about the origin by +ϑ₁/2 in
/// quadrant III, −ϑ₁/2 in quadrant I, +ϑ₂/2 in II, −ϑ₂/2 in IV. Satisfies
/// R₋₁∘D_ϑ = D₋ϑ∘R₋₁ by the symmetric construction.
pub fn dislocation_map(d: &DislocationParams, delta0: f64, p: Vec3) -> Result<Vec3> {
    d.validate(delta0)?;
    let r = p.x.hypot(p.y);
    if r < 1e-300 {
        return Ok(p);
    }
    let phi = p.y.atan2(p.x);
    let gate = cutoff_psi(DISLOCATION_R_IN, DISLOCATION_R_OUT, r)?;
    let mut turn = 0.0;
    for i in WING_INDICES {
        let amp = match i {
            1 => d.theta[0] / 2.0,
            -1 => -d.theta[0] / 2.0,
            2 => d.theta[1] / 2.0,
            _ => -d.theta[1] / 2.0,
        };
        if amp == 0.0 {
            continue;
        }
        let dist = angle_dist(phi, sector_center(i));
        // 1 inside the sector (within π/4 − 5δ₀ of the center), 0 within
        // 2δ₀ of the coordinate axes.
        let w = cutoff_psi(PI / 4.0 - 2.0 * delta0, PI / 4.0 - 5.0 * delta0, dist)?;
        turn += amp * w;
    }
    let delta = gate * turn;
    if delta == 0.0 {
        return Ok(p);
    }
    let (s, c) = delta.sin_cos();
    Ok(Vec3::new(c * p.x - s * p.y, s * p.x + c * p.y, p.z))
}

/// Rotation about the x₃-axis.
fn rot_z(angle: f64, p: Vec3) -> Vec3 {
    if angle == 0.0 {
        return p;
    }
    let (s, c) = angle.sin_cos();
    Vec3::new(c * p.x - s * p.y, s * p.x + c * p.y, p.z)
}

/// Rotation angle the sector map applies to wing i when fully engaged.
fn wing_sector_turn(d: &DislocationParams, i: i8) -> f64 {
    // Wing i points into the quadrant labeled −i (wing 1 sits in
    // quadrant I which is sector −1), so it turns by −sign(i)·ϑ_{|i|}/2.
    let t = d.theta[(i.abs() - 1) as usize];
    -f64::from(i.signum()) * t / 2.0
}

/// The dislocated embedding: D_ϑ∘Z_α on the core; each wing rigidly
/// rotated about the x₃-axis by its sector angle and about its vertical
/// root line by φ_i beyond s = 1, blended over s ∈ [0, 1]; everything
/// finally rotated by φ_rot about the x₃-axis.
pub fn dislocated_embedding(
    params: &ScherkParams,
    d: &DislocationParams,
    region: ScherkRegion,
    n: usize,
) -> Result<ParamPatch> {
    d.validate(params.delta0)?;
    let base = scherk_patch(params, region, n)?;
    let mut pts = Vec::with_capacity(base.pts.len());
    match region {
        ScherkRegion::Core => {
            // The core square lies within radius 2 of the axis, where the
            // sector map is the identity; only the final rotation acts.
            for p in &base.pts {
                let q = dislocation_map(d, params.delta0, p.xyz())?;
                let q = rot_z(d.phi_rot, q);
                pts.push(Vec4::new(q.x, q.y, q.z, 0.0));
            }
        }
        ScherkRegion::Wing(i) => {
            let slot = wing_slot(i)?;
            let turn = wing_sector_turn(d, i);
            // Root line of the rotated wing: vertical, through the sector
            // image of b_{i,α}(·, 0).
            let (e, ep) = wing_frame(params.alpha, i)?;
            let b = params.b_alpha();
            let root = Vec2::new(
                params.s0 * e.x + b * ep.x,
                params.s0 * e.y + b * ep.y,
            );
            let (ts, tc) = turn.sin_cos();
            let root = Vec2::new(tc * root.x - ts * root.y, ts * root.x + tc * root.y);
            let (ps, pc) = d.phi[slot].sin_cos();
            let wing_rigid = |q: Vec3| -> Vec3 {
                let q = rot_z(turn, q);
                // Rotation by φ_i about the vertical line through `root`.
                let (dx, dy) = (q.x - root.x, q.y - root.y);
                Vec3::new(
                    root.x + pc * dx - ps * dy,
                    root.y + ps * dx + pc * dy,
                    q.z,
                )
            };
            for (iu, &_x) in base.us.iter().enumerate() {
                for (iv, &s) in base.vs.iter().enumerate() {
                    let bt = base.pts[iu * base.vs.len() + iv].xyz();
                    let q = if s >= 1.0 {
                        wing_rigid(bt)
                    } else {
                        let blend = cutoff_psi(0.0, 1.0, s)?;
                        let near = dislocation_map(d, params.delta0, bt)?;
                        let far = wing_rigid(bt);
                        near * (1.0 - blend) + far * blend
                    };
                    let q = rot_z(d.phi_rot, q);
                    pts.push(Vec4::new(q.x, q.y, q.z, 0.0));
                }
            }
        }
    }
    ParamPatch::new(
        base.space,
        base.us,
        base.vs,
        pts,
        base.wrap_u,
        base.wrap_v,
        base.region,
    )
}

/// Base direction angle of the undislocated wing i.
fn wing_base_angle(alpha: f64, i: i8) -> f64 {
    match i {
        1 => alpha,
        2 => -alpha,
        -1 => PI + alpha,
        _ => PI - alpha,
    }
}

/// The extended tetrad of Z_{α,ϑ,φ,φ_rot}: asymptote directions
/// e″_i = Rot(φ_rot + φ_i)·Rot(sector turn)·e_{i,α} plus the angles φ_i.
pub fn tetrad_of(alpha: f64, theta: [f64; 2], phi: [f64; 4], phi_rot: f64) -> ExtendedTetrad {
    let d = DislocationParams {
        theta,
        phi,
        phi_rot,
    };
    let mut e = [Vec2::zeros(); 4];
    for (slot, &i) in WING_INDICES.iter().enumerate() {
        let ang = wing_base_angle(alpha, i) + wing_sector_turn(&d, i) + phi[slot] + phi_rot;
        e[slot] = Vec2::new(ang.cos(), ang.sin());
    }
    ExtendedTetrad { e, phi }
}

/// Wrap an angle to (−π, π].
fn wrap_pi(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Recover (α, ϑ, φ, φ_rot) from an extended tetrad. The tetrad must be
/// admissible: wing-pair bending and the φ_i within δ₀/3 of undislocated,
/// and the recovered α within the margin interval.
pub fn tetrad_params(t: &ExtendedTetrad, delta0: f64) -> Result<(f64, [f64; 2], [f64; 4], f64)> {
    let mut hat = [0.0f64; 4];
    for slot in 0..4 {
        let v = t.e[slot];
        let norm = v.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::NonUnitVector { norm });
        }
        hat[slot] = v.y.atan2(v.x) - t.phi[slot];
    }
    // With c = φ_rot and wing order (1, 2, −1, −2):
    //   â₀ = c + α − ϑ₁/2,  â₂ = c + π + α + ϑ₁/2,
    //   â₁ = c − α − ϑ₂/2,  â₃ = c + π − α + ϑ₂/2.
    let th1 = wrap_pi(hat[2] - hat[0] - PI);
    let th2 = wrap_pi(hat[3] - hat[1] - PI);
    let m1 = hat[0] + th1 / 2.0; // c + α
    let m2 = hat[1] + th2 / 2.0; // c − α
    let alpha = 0.5 * wrap_pi(m1 - m2);
    let phi_rot = wrap_pi(m1 - alpha);
    let bound = delta0 / 3.0 + 1e-9;
    for (label, v) in [("ϑ₁", th1), ("ϑ₂", th2)] {
        if v.abs() > bound {
            return Err(Error::BadParameter(format!(
                "tetrad out of range: {label} = {v:.5} exceeds δ₀/3"
            )));
        }
    }
    for (slot, v) in t.phi.iter().enumerate() {
        if v.abs() > bound {
            return Err(Error::BadParameter(format!(
                "tetrad out of range: φ[{slot}] = {v:.5} exceeds δ₀/3"
            )));
        }
    }
    if !(alpha >= 10.0 * delta0 - 1e-9 && alpha <= PI / 2.0 - 10.0 * delta0 + 1e-9) {
        return Err(Error::BadParameter(format!(
            "tetrad out of range: recovered angle {alpha:.5} outside the margin interval"
        )));
    }
    if phi_rot.abs() > delta0 + 1e-9 {
        return Err(Error::BadParameter(format!(
            "tetrad out of range: axial rotation {phi_rot:.5} exceeds δ₀"
        )));
    }
    Ok((alpha, [th1, th2], t.phi, phi_rot))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn implicit_value_examples() {
        let p = ScherkParams::new(PI / 4.0).unwrap();
        // ½·cosh(0) − ½·cosh(0) − cos(π/2) = 0.
        assert!(implicit_value(&p, Vec3::new(0.0, 0.0, PI / 2.0)).abs() < 1e-15);
        // Orthogonal normalization vanishes at the origin.
        assert_eq!(implicit_value_ortho(Vec3::new(0.0, 0.0, 0.0)), 0.0);
        // Periodicity in x₃.
        for k in 0..40 {
            let q = Vec3::new(0.3 * k as f64 % 2.0, -0.1 * k as f64 % 1.5, 0.7 * k as f64);
            let shifted = q + Vec3::new(0.0, 0.0, 2.0 * PI);
            let scale = implicit_scale(p.alpha, q);
            assert!(
                (implicit_value(&p, q) - implicit_value(&p, shifted)).abs() < 1e-12 * scale
            );
        }
    }

    #[test]
    fn asymptote_offset_values_and_symmetry() {
        // b_{π/4} = sin(π/2)·ln(1) = 0.
        assert!(asymptote_offset(PI / 4.0).abs() < 1e-15);
        // b_{π/6} = (√3/2)·ln √3.
        let want = 3.0f64.sqrt() / 2.0 * 3.0f64.sqrt().ln();
        assert!((asymptote_offset(PI / 6.0) - want).abs() < 1e-14);
        assert!((asymptote_offset(PI / 6.0) - 0.4757).abs() < 1e-3);
        // b_{π/2−α} = −b_α.
        for k in 1..40 {
            let a = 0.3 + 0.97 * k as f64 / 40.0; // within (0.3, 1.27)
            let b1 = asymptote_offset(a);
            let b2 = asymptote_offset(PI / 2.0 - a);
            assert!((b1 + b2).abs() < 1e-13, "b symmetry violated at α = {a}");
        }
    }

    #[test]
    fn adaptive_wing_start_matches_asymptotic_prediction() {
        // Leading wing asymptotics: f ≈ −(sin 2α/K)e^{−s₀−s}cos x₃ with
        // K = cos²α·(tan α)^{2 sin²α}, so the required start distance is
        // ln(max_α(sin2α/K)/ε), attained near α = π/4 where the ratio is 2.
        let p = ScherkParams::new(PI / 4.0).unwrap();
        let predicted = (2.0 / p.eps).ln();
        assert!(
            (p.s0 - predicted).abs() <= 0.75,
            "adaptive s₀ = {} vs prediction {predicted}",
            p.s0
        );
        // Half-integer by construction.
        assert_eq!((2.0 * p.s0).fract(), 0.0);
    }

    #[test]
    fn wing_profile_bound_periodicity_decay() {
        let p = ScherkParams::new(PI / 6.0).unwrap();
        let sup_at = |s: f64| -> f64 {
            (0..64)
                .map(|j| {
                    let x = 2.0 * PI * j as f64 / 64.0;
                    wing_profile(&p, 1, x, s).unwrap().0.abs()
                })
                .fold(0.0f64, f64::max)
        };
        // Graph bound from s = 0 on.
        assert!(sup_at(0.0) <= p.eps);
        // Periodicity f(x + 2π, s) = f(x, s).
        for j in 0..16 {
            let x = 2.0 * PI * j as f64 / 16.0 - PI;
            let f1 = wing_profile(&p, 1, x, 0.7).unwrap().0;
            let f2 = wing_profile(&p, 1, x + 2.0 * PI, 0.7).unwrap().0;
            assert!((f1 - f2).abs() < 1e-12);
        }
        // Decay ratio within 20% of e⁻¹ per unit of s.
        for s in [0.0, 1.0, 2.0] {
            let ratio = sup_at(s + 1.0) / sup_at(s);
            assert!(
                (ratio - (-1.0f64).exp()).abs() <= 0.2 * (-1.0f64).exp(),
                "decay ratio {ratio} at s = {s}"
            );
        }
        // All four wings see the same profile in their own frames.
        for i in [2, -1, -2] {
            let f1 = wing_profile(&p, 1, 0.9, 0.4).unwrap().0;
            let fi = wing_profile(&p, i, 0.9, 0.4).unwrap().0;
            assert!((f1 - fi).abs() < 1e-12);
        }
    }

    #[test]
    fn core_patch_symmetric_and_on_surface() {
        let p = ScherkParams::new(PI / 4.0).unwrap();
        let patch = scherk_patch(&p, ScherkRegion::Core, 41).unwrap();
        let n = 41;
        for iu in 0..n {
            for iv in 0..n {
                let a = patch.pts[iu * n + iv];
                let b = patch.pts[(n - 1 - iu) * n + (n - 1 - iv)];
                // Invariance under (x₁,x₂,x₃) ↦ (−x₁,−x₂,x₃).
                assert!((a.x + b.x).abs() < 1e-13);
                assert!((a.y + b.y).abs() < 1e-13);
                assert!((a.z - b.z).abs() < 1e-13);
                let q = a.xyz();
                let res = implicit_value(&p, q).abs();
                assert!(
                    res <= 1e-10 * implicit_scale(p.alpha, q),
                    "off-surface vertex, residual {res:.3e}"
                );
            }
        }
        // The core saddle sits at height 2α.
        let mid = patch.pts[(n / 2) * n + n / 2];
        assert!((mid.z - 2.0 * p.alpha).abs() < 1e-12);
        // Interior mean curvature vanishes to discretization error.
        for iu in (2..n - 2).step_by(6) {
            for iv in (2..n - 2).step_by(6) {
                assert!(patch.mean_curvature(iu, iv).unwrap().abs() < 5e-2);
            }
        }
    }

    #[test]
    fn wing_patch_stays_on_surface_near_half_plane() {
        let p = ScherkParams::new(0.65).unwrap();
        let patch = scherk_patch(&p, ScherkRegion::Wing(2), 12).unwrap();
        let (e, ep) = wing_frame(p.alpha, 2).unwrap();
        let b = p.b_alpha();
        for (iu, &x) in patch.us.iter().enumerate() {
            for (iv, &s) in patch.vs.iter().enumerate() {
                let q = patch.pts[iu * patch.vs.len() + iv].xyz();
                let res = implicit_value(&p, q).abs();
                assert!(res <= 1e-10 * implicit_scale(p.alpha, q));
                // Distance to the asymptotic half-plane is the graph
                // offset, bounded by ε and decaying with s.
                let base = Vec3::new(
                    (p.s0 + s) * e.x + b * ep.x,
                    (p.s0 + s) * e.y + b * ep.y,
                    x,
                );
                let off = (q - base).norm();
                assert!(off <= p.eps * 1.0000001, "offset {off:.2e} at s = {s}");
            }
        }
        // Periodicity of the emitted patch: x and x + 2π rows agree up to
        // the vertical period.
        let n = 12;
        let nv = patch.vs.len();
        for iu in 0..=n {
            for iv in 0..nv {
                let a = patch.pts[iu * nv + iv];
                let b2 = patch.pts[(iu + n) * nv + iv];
                assert!((b2 - a - Vec4::new(0.0, 0.0, 2.0 * PI, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn gauss_factor_positive_and_wing_flatness() {
        let p = ScherkParams::new(PI / 4.0).unwrap();
        let patch = scherk_patch(&p, ScherkRegion::Core, 81).unwrap();
        for iu in (1..80).step_by(4) {
            for iv in (1..80).step_by(4) {
                let c = gauss_conformal_factor(&patch, iu, iv).unwrap();
                assert!(c > 0.0, "umbilic or degenerate point at ({iu},{iv})");
            }
        }
        // Agreement with the implicit-surface formula away from the steep
        // rim (the rim accuracy is limited by one-sided resolution there).
        for iu in (4..77).step_by(4) {
            for iv in (4..77).step_by(4) {
                let c = gauss_conformal_factor(&patch, iu, iv).unwrap();
                let q = patch.pts[iu * 81 + iv].xyz();
                let exact = 0.5 * second_form_sq_implicit(p.alpha, q).unwrap();
                assert!(
                    (c - exact).abs() <= 2e-2 * exact.max(1e-3),
                    "({iu},{iv}): patch {c} vs implicit {exact}"
                );
            }
        }
        // |A|² decays like e^{−2s} along a wing.
        let sup_a2 = |s: f64| -> f64 {
            (0..32)
                .map(|j| {
                    let x = 2.0 * PI * j as f64 / 32.0;
                    let q = wing_point(&p, 1, x, s).unwrap();
                    second_form_sq_implicit(p.alpha, q).unwrap()
                })
                .fold(0.0f64, f64::max)
        };
        for s in [1.0, 2.0] {
            let ratio = sup_a2(s + 1.0) / sup_a2(s);
            let want = (-2.0f64).exp();
            assert!(
                (ratio - want).abs() <= 0.3 * want,
                "|A|² decay ratio {ratio} at s = {s}"
            );
        }
    }

    #[test]
    fn slab_gauss_area_matches_hemisphere() {
        // The Gauss map is a diffeomorphism from the slab onto a
        // hemisphere, so ∫ ½|A|² dA = 2π.
        for alpha in [PI / 4.0, PI / 6.0] {
            let p = ScherkParams::new(alpha).unwrap();
            let area = slab_gauss_area(&p, 16, 14.0).unwrap();
            assert!(
                (area - 2.0 * PI).abs() <= 0.02 * 2.0 * PI,
                "slab Gauss area {area} at α = {alpha}"
            );
        }
    }

    #[test]
    fn dislocation_map_sector_action() {
        let delta0 = DEFAULT_DELTA0;
        let zero = DislocationParams::zero();
        // ϑ = 0 is the identity everywhere.
        for p in [
            Vec3::new(10.0, 10.0, 0.0),
            Vec3::new(0.3, -0.2, 1.0),
            Vec3::new(-8.0, 0.1, -2.0),
        ] {
            assert_eq!(dislocation_map(&zero, delta0, p).unwrap(), p);
        }
        // Far-sector action: quadrant III turns by +ϑ₁/2, quadrant I by
        // −ϑ₁/2 (its reflection through the origin).
        let d = DislocationParams {
            theta: [0.04, 0.0],
            ..DislocationParams::zero()
        };
        let q3 = Vec3::new(-10.0, -10.0, 0.0);
        let got = dislocation_map(&d, delta0, q3).unwrap();
        let want = rot_z(0.02, q3);
        assert!((got - want).norm() < 1e-12);
        let q1 = Vec3::new(10.0, 10.0, 0.0);
        let got = dislocation_map(&d, delta0, q1).unwrap();
        let want = rot_z(-0.02, q1);
        assert!((got - want).norm() < 1e-12);
        // Identity near the coordinate axes even at large radius.
        let axis_hugger = Vec3::new(9.0, 9.0 * (2.0 * delta0 * 0.8).tan(), 0.5);
        assert_eq!(dislocation_map(&d, delta0, axis_hugger).unwrap(), axis_hugger);
        // Identity near the x₃-axis.
        let near_axis = Vec3::new(-0.9, 1.1, 3.0);
        assert_eq!(dislocation_map(&d, delta0, near_axis).unwrap(), near_axis);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]

        #[test]
        fn prop_dislocation_commutes_with_origin_reflection(
            x in -12.0f64..12.0,
            y in -12.0f64..12.0,
            z in -3.0f64..3.0,
            t1 in -0.05f64..0.05,
            t2 in -0.05f64..0.05,
        ) {
            // R₋₁∘D_ϑ = D₋ϑ∘R₋₁.
            let d = DislocationParams { theta: [t1, t2], ..DislocationParams::zero() };
            let dm = DislocationParams { theta: [-t1, -t2], ..DislocationParams::zero() };
            let p = Vec3::new(x, y, z);
            let lhs = dislocation_map(&d, DEFAULT_DELTA0, p).unwrap();
            let lhs = Vec3::new(-lhs.x, -lhs.y, lhs.z);
            let rhs = dislocation_map(&dm, DEFAULT_DELTA0, Vec3::new(-x, -y, z)).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }

        #[test]
        fn prop_tetrad_roundtrip(
            alpha in 0.55f64..1.0,
            t1 in -0.015f64..0.015,
            t2 in -0.015f64..0.015,
            p0 in -0.015f64..0.015,
            p1 in -0.015f64..0.015,
            p2 in -0.015f64..0.015,
            p3 in -0.015f64..0.015,
            rot in -0.04f64..0.04,
        ) {
            let tet = tetrad_of(alpha, [t1, t2], [p0, p1, p2, p3], rot);
            let (a, th, ph, r) = tetrad_params(&tet, DEFAULT_DELTA0).unwrap();
            prop_assert!((a - alpha).abs() < 1e-10);
            prop_assert!((th[0] - t1).abs() < 1e-10);
            prop_assert!((th[1] - t2).abs() < 1e-10);
            for (got, want) in ph.iter().zip([p0, p1, p2, p3]) {
                prop_assert!((got - want).abs() < 1e-10);
            }
            prop_assert!((r - rot).abs() < 1e-10);
        }
    }

    #[test]
    fn tetrad_examples() {
        // Undislocated tetrad reproduces (α, 0, 0, 0).
        let tet = tetrad_of(0.8, [0.0; 2], [0.0; 4], 0.0);
        let (a, th, ph, r) = tetrad_params(&tet, DEFAULT_DELTA0).unwrap();
        assert!((a - 0.8).abs() < 1e-14);
        assert!(th[0].abs() < 1e-14 && th[1].abs() < 1e-14);
        assert!(ph.iter().all(|v| v.abs() < 1e-14));
        assert!(r.abs() < 1e-14);
        // A common rotation of all directions is pure φ_rot.
        let tet = tetrad_of(0.8, [0.0; 2], [0.0; 4], 0.013);
        let (a, th, _, r) = tetrad_params(&tet, DEFAULT_DELTA0).unwrap();
        assert!((a - 0.8).abs() < 1e-12);
        assert!(th[0].abs() < 1e-12 && th[1].abs() < 1e-12);
        assert!((r - 0.013).abs() < 1e-12);
        // Out-of-range bending is rejected.
        let tet = tetrad_of(0.8, [0.1, 0.0], [0.0; 4], 0.0);
        assert!(tetrad_params(&tet, DEFAULT_DELTA0).is_err());
    }

    #[test]
    fn dislocated_embedding_consistency() {
        let p = ScherkParams::new(PI / 4.0).unwrap();
        let zero = DislocationParams::zero();
        // All-zero dislocation reproduces the plain patch.
        let plain = scherk_patch(&p, ScherkRegion::Wing(1), 10).unwrap();
        let disl = dislocated_embedding(&p, &zero, ScherkRegion::Wing(1), 10).unwrap();
        for (a, b) in plain.pts.iter().zip(&disl.pts) {
            assert!((a - b).norm() < 1e-13);
        }

        // A pure wing rotation acts rigidly on s ≥ 1.
        let mut d = DislocationParams::zero();
        d.phi[wing_slot(1).unwrap()] = p.delta0 / 4.0;
        let rot = dislocated_embedding(&p, &d, ScherkRegion::Wing(1), 10).unwrap();
        let nv = plain.vs.len();
        let far: Vec<usize> = plain
            .vs
            .iter()
            .enumerate()
            .filter(|(_, s)| **s >= 1.0)
            .map(|(iv, _)| iv)
            .collect();
        let sample: Vec<usize> = (0..plain.us.len())
            .step_by(3)
            .flat_map(|iu| far.iter().step_by(2).map(move |&iv| iu * nv + iv))
            .collect();
        for (k, &ia) in sample.iter().enumerate() {
            for &ib in sample.iter().skip(k + 1).step_by(7) {
                let d0 = (plain.pts[ia] - plain.pts[ib]).norm();
                let d1 = (rot.pts[ia] - rot.pts[ib]).norm();
                assert!((d0 - d1).abs() < 1e-12, "wing rotation not rigid");
            }
        }

        // The blended band s ∈ (0,1) of a wing-rotation dislocation
        // acquires mean curvature that scales linearly with φ and stays
        // modest; beyond the band the wing is rigid, so H ≈ 0 again.
        let band_sup_h = |phi1: f64| -> f64 {
            let mut d = DislocationParams::zero();
            d.phi[0] = phi1;
            let patch = dislocated_embedding(&p, &d, ScherkRegion::Wing(1), 32).unwrap();
            let mut sup = 0.0f64;
            for (iu, _) in patch.us.iter().enumerate().skip(1).take(patch.us.len() - 2) {
                for (iv, &s) in patch.vs.iter().enumerate() {
                    if s > 0.05 && s < 0.95 {
                        sup = sup.max(patch.mean_curvature(iu, iv).unwrap().abs());
                    }
                }
            }
            sup
        };
        let h_full = band_sup_h(p.delta0 / 2.0);
        let h_half = band_sup_h(p.delta0 / 4.0);
        assert!(h_full > 1e-4, "wing rotation produced no bending");
        assert!(h_full <= 50.0 * p.delta0, "band curvature {h_full} too large");
        let ratio = h_half / h_full;
        assert!(
            (0.35..0.65).contains(&ratio),
            "band curvature not linear in φ: ratio {ratio}"
        );
    }

    #[test]
    fn sector_bending_curvature_is_linear_in_theta() {
        // The sector rotations act on the region between the axis square
        // and the wing starts; sampled through the slice graphs, the
        // induced mean curvature scales linearly with ϑ.
        let alpha = PI / 4.0;
        let mid_sup_h = |theta1: f64| -> f64 {
            let d = DislocationParams {
                theta: [theta1, 0.0],
                ..DislocationParams::zero()
            };
            let ts: Vec<f64> = (0..23).map(|k| 1.8 + 1.1 * k as f64 / 22.0).collect();
            let xs: Vec<f64> = (0..91).map(|k| 2.0 + 4.5 * k as f64 / 90.0).collect();
            let patch = ParamPatch::from_fn(
                AmbientSpace::Euclidean3,
                ts,
                xs,
                None,
                None,
                RegionTag::Transition,
                |t, x1| {
                    let q = arc_point(alpha, t, ArcFamily::TopBottom, x1).unwrap();
                    let q = dislocation_map(&d, DEFAULT_DELTA0, q).unwrap();
                    Vec4::new(q.x, q.y, q.z, 0.0)
                },
            )
            .unwrap();
            let mut sup = 0.0f64;
            for iu in 1..patch.us.len() - 1 {
                for iv in 1..patch.vs.len() - 1 {
                    sup = sup.max(patch.mean_curvature(iu, iv).unwrap().abs());
                }
            }
            sup
        };
        let theta = 0.04;
        let h_full = mid_sup_h(theta);
        let h_half = mid_sup_h(theta / 2.0);
        let h_zero = mid_sup_h(0.0);
        assert!(h_zero < 1e-3, "undislocated slice patch not minimal: {h_zero}");
        assert!(h_full > 0.05 * theta, "sector rotation produced no bending");
        assert!(h_full <= 100.0 * theta, "bending curvature {h_full} too large");
        let ratio = h_half / h_full;
        assert!(
            (0.4..0.6).contains(&ratio),
            "bending curvature not linear in ϑ: ratio {ratio}"
        );
    }
}
