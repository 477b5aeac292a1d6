//! First-variation force diagnostics for doubling surfaces.
//!
//! A catenoidal bridge of waist radius τ carries a vertical force 2πτ
//! through its waist. The matching force through the graph boundary ∂₁ of a
//! region Ω ⊂ Σ around the bridge point is, to first order in the graph
//! height φ₁,
//!
//!   Area(Ω) · (|A|² + Ric(ν,ν)) · φ₁ + ∮_{∂Ω} η(φ₁),
//!
//! where |A|² + Ric(ν,ν) stands for an area-weighted average over Ω and η
//! is the outward unit normal of ∂Ω inside the base surface Σ. Equality of
//! the two forces is the vertical balancing condition; it determines the
//! bridge size law τ ≈ d·exp(−2π / (Area(Ω)·(|A|²+Ric))) once the graph
//! height is matched to a truncated catenoid, φ₁ ≈ τ·log(d/τ). A necessary
//! condition for the two forces to point against each other is
//! |A|² + Ric(ν,ν) > 0 at the bridge points — instability of the area of Σ.
//!
//! Horizontal forces are measured against a horizontal Killing field K as
//! F_K = ∮_{∂₁} η₁·K with η₁ the outward conormal of ∂₁ tangent to the
//! doubled surface; subtracting the closed-curve identity ∮ η_hor·K = 0
//! leaves the quadratic surrogate −½∮ (η(φ₁))²·η·K. On a balanced
//! configuration the one-sided slope contributions cancel and F_K vanishes
//! to leading order.
//!
//! Everything here is diagnostic quadrature over immutable meshes or solved
//! rotationally symmetric profiles; tolerances are empirical regression
//! values, not theorems.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::ambient::AmbientSpace;
use crate::doubling::{BalancedProfile, BridgeSpec};
use crate::error::{Error, Result};
use crate::surfacecalc::{cross4, ParamPatch, RegionTag, SurfaceMesh};
use crate::Vec4;

/// Relative half-width of the annulus used to read the graph height near
/// the Ω boundary.
const RING_BAND: f64 = 0.08;
/// Initial relative half-width of the band used for radial slopes of the
/// graph height; widened by [`BAND_GROWTH`] up to [`BAND_TRIES`] times when
/// the mesh has no two distinct sample radii inside it.
const SLOPE_BAND: f64 = 0.12;
const BAND_GROWTH: f64 = 1.6;
const BAND_TRIES: usize = 3;
/// Relative snap window for picking up the structured hole-rim circle.
const RIM_SNAP: f64 = 2e-3;
/// A boundary flux below this fraction of the largest flux seen while
/// scanning counts as the end of the positive regime.
const FLUX_EPS: f64 = 0.05;
/// Radii probed by the balanced-Ω scan.
const SCAN_STEPS: usize = 24;
/// Largest tolerated oscillation of φ₁ along ∂₁, relative to its mean.
const MAX_PHI_OSC: f64 = 0.10;
/// Largest tolerated normal component of a Killing field along ∂₁,
/// relative to its largest magnitude there.
const MAX_K_TILT: f64 = 0.25;

// ---------------------------------------------------------------------------
// Base surfaces and Killing fields
// ---------------------------------------------------------------------------

/// The base surface Σ a doubling mesh is a two-sided graph over. The
/// variant fixes how mesh vertices split into a base distance from a bridge
/// center and a signed graph height, and which ambient Killing fields count
/// as horizontal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaseSurface {
    /// The flat plane z = 0 of the single-cell limit model (Euclidean
    /// ambient). Has no bridge neighbors and a vanishing instability
    /// coefficient; force reports on it lean entirely on the boundary term.
    Plane,
    /// The Clifford torus inside the round 3-sphere, carrying a square or
    /// rectangular bridge lattice of pitch √2·π·d.
    CliffordTorus,
    /// The equatorial 2-sphere inside the round 3-sphere, carrying bridges
    /// along parallels with in-parallel pitch 4d.
    EquatorSphere,
}

impl BaseSurface {
    /// Ric(ν,ν) of the ambient space along the doubling's normal.
    pub fn ricci(self) -> f64 {
        match self {
            BaseSurface::Plane => 0.0,
            _ => 2.0,
        }
    }

    /// Area of the geodesic disc of radius ρ on Σ. The Clifford torus and
    /// the plane are flat; the sphere disc is 2π(1 − cos ρ).
    pub fn disc_area(self, rho: f64) -> f64 {
        match self {
            BaseSurface::EquatorSphere => 2.0 * PI * (1.0 - rho.cos()),
            _ => PI * rho * rho,
        }
    }

    /// Perimeter of the geodesic disc of radius ρ on Σ.
    pub fn perimeter(self, rho: f64) -> f64 {
        match self {
            BaseSurface::EquatorSphere => 2.0 * PI * rho.sin(),
            _ => 2.0 * PI * rho,
        }
    }

    /// Distance from a bridge to its nearest lattice neighbor, in units of
    /// the hole quantum d.
    fn neighbor_spacing(self, d: f64) -> f64 {
        match self {
            BaseSurface::Plane => f64::INFINITY,
            BaseSurface::CliffordTorus => SQRT_2 * PI * d,
            BaseSurface::EquatorSphere => 4.0 * d,
        }
    }

    /// Split an ambient mesh vertex into (base distance from the bridge
    /// center, signed graph height).
    fn split(self, center: Vec4, v: Vec4) -> (f64, f64) {
        match self {
            BaseSurface::Plane => {
                let dist = (v.x - center.x).hypot(v.y - center.y);
                (dist, v.z)
            }
            BaseSurface::CliffordTorus => {
                let cc = AmbientSpace::chart_from_r4(center);
                let cv = AmbientSpace::chart_from_r4(v);
                let period = SQRT_2 * PI;
                let wrap = |t: f64| {
                    let r = t.rem_euclid(period);
                    if r > 0.5 * period {
                        r - period
                    } else {
                        r
                    }
                };
                let dist = wrap(cv.x - cc.x).hypot(wrap(cv.y - cc.y));
                (dist, cv.z)
            }
            BaseSurface::EquatorSphere => {
                let t = v.w.clamp(-1.0, 1.0).asin();
                let c = t.cos().max(1e-300);
                let dot = (v.x * center.x + v.y * center.y + v.z * center.z) / c;
                (dot.clamp(-1.0, 1.0).acos(), t)
            }
        }
    }

    /// Project an ambient vector at `p` onto the horizontal directions (the
    /// tangent plane of the parallel copy of Σ through `p`) and normalize.
    fn horizontalize(self, p: Vec4, v: Vec4) -> Vec4 {
        let mut h = v;
        match self {
            BaseSurface::Plane => h.z = 0.0,
            BaseSurface::CliffordTorus => {
                // The chart z-direction pushed to the sphere is the unit
                // vertical; remove it and stay tangent to S³.
                let cp = AmbientSpace::chart_from_r4(p);
                let vertical = AmbientSpace::CliffordChart
                    .embed_tangent_r4(Vec4::new(cp.x, cp.y, cp.z, 0.0), Vec4::new(0.0, 0.0, 1.0, 0.0))
                    .expect("doubling vertices stay inside the chart");
                h -= vertical * h.dot(&vertical);
                h -= p * h.dot(&p);
            }
            BaseSurface::EquatorSphere => {
                // Vertical is the Fermi height direction ∂t; removing the
                // e₄ component and the radial component is equivalent.
                h.w = 0.0;
                h -= p * h.dot(&p);
            }
        }
        let n = h.norm();
        if n > 1e-300 {
            h / n
        } else {
            Vec4::zeros()
        }
    }

    /// The two standard horizontal Killing directions at a bridge center.
    fn standard_killing(self, center: Vec4) -> [KillingField; 2] {
        match self {
            BaseSurface::Plane => [
                KillingField::Translation {
                    dir: Vec4::new(1.0, 0.0, 0.0, 0.0),
                },
                KillingField::Translation {
                    dir: Vec4::new(0.0, 1.0, 0.0, 0.0),
                },
            ],
            // Chart translations of the torus are coordinate-plane
            // rotations of S³: x pairs (e₃, e₄), y pairs (e₁, e₂).
            BaseSurface::CliffordTorus => [
                KillingField::Rotation {
                    a: Vec4::new(0.0, 0.0, 1.0, 0.0),
                    b: Vec4::new(0.0, 0.0, 0.0, 1.0),
                },
                KillingField::Rotation {
                    a: Vec4::new(1.0, 0.0, 0.0, 0.0),
                    b: Vec4::new(0.0, 1.0, 0.0, 0.0),
                },
            ],
            // Latitude translation along the bridge's meridian and
            // longitude rotation about the polar axis.
            BaseSurface::EquatorSphere => {
                let lon = center.y.atan2(center.x);
                [
                    KillingField::Rotation {
                        a: Vec4::new(lon.cos(), lon.sin(), 0.0, 0.0),
                        b: Vec4::new(0.0, 0.0, 1.0, 0.0),
                    },
                    KillingField::Rotation {
                        a: Vec4::new(1.0, 0.0, 0.0, 0.0),
                        b: Vec4::new(0.0, 1.0, 0.0, 0.0),
                    },
                ]
            }
        }
    }
}

/// An ambient Killing field, evaluated extrinsically.
#[derive(Clone, Copy, Debug)]
pub enum KillingField {
    /// Rotation of the coordinate 2-plane spanned by the orthonormal pair
    /// (a, b): K(p) = a⟨b,p⟩ − b⟨a,p⟩. An isometry of S³, and of ℝ³ when
    /// a and b are spatial.
    Rotation { a: Vec4, b: Vec4 },
    /// Planar rotation of ℝ³ about the vertical axis through `center`.
    PlanarRotation { center: Vec4 },
    /// Constant translation of ℝ³.
    Translation { dir: Vec4 },
}

impl KillingField {
    /// Rotation of span(a, b), orthonormalizing the pair first.
    pub fn rotation(a: Vec4, b: Vec4) -> Result<KillingField> {
        let na = a.norm();
        if na < 1e-12 {
            return Err(Error::BadParameter(
                "rotation plane spanned by a null vector".into(),
            ));
        }
        let a = a / na;
        let mut b = b - a * a.dot(&b);
        let nb = b.norm();
        if nb < 1e-12 {
            return Err(Error::BadParameter(
                "rotation plane vectors are parallel".into(),
            ));
        }
        b /= nb;
        Ok(KillingField::Rotation { a, b })
    }

    /// The field vector at an ambient point.
    pub fn eval(&self, p: Vec4) -> Vec4 {
        match *self {
            KillingField::Rotation { a, b } => a * b.dot(&p) - b * a.dot(&p),
            KillingField::PlanarRotation { center } => {
                Vec4::new(-(p.y - center.y), p.x - center.x, 0.0, 0.0)
            }
            KillingField::Translation { dir } => dir,
        }
    }
}

// ---------------------------------------------------------------------------
// Instability condition
// ---------------------------------------------------------------------------

/// Per-point values of |A|² + Ric(ν,ν) on a base patch.
#[derive(Clone, Debug, Serialize)]
pub struct InstabilityReport {
    /// One value per requested grid node.
    pub values: Vec<f64>,
    /// True when every value is strictly positive — the necessary condition
    /// for the waist and graph forces of a doubling to oppose each other.
    pub pass: bool,
}

/// Evaluate the instability coefficient |A|² + Ric(ν,ν) of a base patch at
/// the given grid nodes (prospective bridge points).
pub fn instability_check(
    patch: &ParamPatch,
    nodes: &[(usize, usize)],
) -> Result<InstabilityReport> {
    let mut values = Vec::with_capacity(nodes.len());
    for &(iu, iv) in nodes {
        let a2 = patch.second_form_sq(iu, iv)?;
        let nu = patch.normal_at(iu, iv)?;
        let ric = patch.space.ricci_normal(patch.pt(iu, iv), nu)?;
        values.push(a2 + ric);
    }
    let pass = values.iter().all(|&v| v > 0.0);
    Ok(InstabilityReport { values, pass })
}

// ---------------------------------------------------------------------------
// Mesh samples around a bridge
// ---------------------------------------------------------------------------

/// One positive-side mesh vertex in bridge-centered coordinates.
struct Sample {
    dist: f64,
    height: f64,
    area: f64,
    a2: f64,
    region: RegionTag,
    beta: f64,
    index: usize,
}

/// Bridge-centered positive-sheet samples of a doubling mesh.
fn collect_samples(
    mesh: &SurfaceMesh,
    base: BaseSurface,
    bridge: &BridgeSpec,
) -> Result<Vec<Sample>> {
    match (base, mesh.space) {
        (BaseSurface::Plane, AmbientSpace::Euclidean3) => {}
        (BaseSurface::CliffordTorus | BaseSurface::EquatorSphere, AmbientSpace::RoundSphere3) => {}
        _ => {
            return Err(Error::BadParameter(format!(
                "a {base:?} doubling cannot live in {:?}",
                mesh.space
            )))
        }
    }
    let areas = mesh.vertex_areas();
    let a2s = mesh.second_form_sq();
    let mut out = Vec::with_capacity(mesh.vertices.len() / 2);
    // Angles are taken in a fixed horizontal frame at the bridge center so
    // boundary curves can be ordered.
    let frame = angular_frame(base, bridge.center);
    for (i, &v) in mesh.vertices.iter().enumerate() {
        let (dist, height) = base.split(bridge.center, v);
        if height <= 0.0 {
            continue;
        }
        out.push(Sample {
            dist,
            height,
            area: areas[i],
            a2: a2s[i],
            region: mesh.regions[i],
            beta: frame.angle(base, bridge.center, v),
            index: i,
        });
    }
    if out.is_empty() {
        return Err(Error::BadParameter(
            "mesh has no vertices on the positive side of the base".into(),
        ));
    }
    Ok(out)
}

/// Horizontal orthonormal frame at a bridge center, for measuring the
/// angular position of nearby points.
struct AngularFrame {
    e1: Vec4,
    e2: Vec4,
}

fn angular_frame(base: BaseSurface, center: Vec4) -> AngularFrame {
    match base {
        BaseSurface::EquatorSphere => {
            let lon = center.y.atan2(center.x);
            let lat = center.z.clamp(-1.0, 1.0).asin();
            AngularFrame {
                // East and north on the base sphere.
                e1: Vec4::new(-lon.sin(), lon.cos(), 0.0, 0.0),
                e2: Vec4::new(
                    -lat.sin() * lon.cos(),
                    -lat.sin() * lon.sin(),
                    lat.cos(),
                    0.0,
                ),
            }
        }
        _ => AngularFrame {
            e1: Vec4::new(1.0, 0.0, 0.0, 0.0),
            e2: Vec4::new(0.0, 1.0, 0.0, 0.0),
        },
    }
}

impl AngularFrame {
    fn angle(&self, base: BaseSurface, center: Vec4, v: Vec4) -> f64 {
        match base {
            BaseSurface::Plane => (v.y - center.y).atan2(v.x - center.x),
            BaseSurface::CliffordTorus => {
                let cc = AmbientSpace::chart_from_r4(center);
                let cv = AmbientSpace::chart_from_r4(v);
                let period = SQRT_2 * PI;
                let wrap = |t: f64| {
                    let r = t.rem_euclid(period);
                    if r > 0.5 * period {
                        r - period
                    } else {
                        r
                    }
                };
                wrap(cv.y - cc.y).atan2(wrap(cv.x - cc.x))
            }
            BaseSurface::EquatorSphere => {
                // Base point of v in the geodesic circle parametrization
                // b = cos r · c + sin r (e₁ cos β + e₂ sin β).
                let c = v.w.clamp(-1.0, 1.0).asin().cos().max(1e-300);
                let b = Vec4::new(v.x / c, v.y / c, v.z / c, 0.0);
                b.dot(&self.e2).atan2(b.dot(&self.e1))
            }
        }
    }
}

/// Mean graph height over samples whose distance lies in [lo, hi], using
/// only graph regions (sheet and transition). Errors when the band is
/// empty.
fn ring_height(samples: &[Sample], lo: f64, hi: f64) -> Result<f64> {
    let mut sum = 0.0;
    let mut wsum = 0.0;
    for s in samples {
        if s.dist >= lo && s.dist <= hi && s.region != RegionTag::Bridge {
            sum += s.height * s.area;
            wsum += s.area;
        }
    }
    if wsum <= 0.0 {
        return Err(Error::BadParameter(format!(
            "no graph samples in the ring [{lo:.4e}, {hi:.4e}]"
        )));
    }
    Ok(sum / wsum)
}

/// Mean radial slope of the graph height at radius ρ. The band around ρ is
/// split into angular sectors and each sector contributes its own radial
/// secant, so sample clustering at particular angles cannot skew the
/// average (the mesh is dense at structured rings and sparse elsewhere,
/// and heights correlate with angle). The band widens when too few sectors
/// have samples on both sides of ρ.
///
/// Beyond the transition radius the bridge funnel (whose heights dip below
/// the graph toward the waist) is excluded, so a band straddling the hole
/// rim reads only graph samples.
fn height_slope(samples: &[Sample], rho: f64, transition: f64) -> Result<f64> {
    const NBINS: usize = 16;
    let graph_only = rho > transition;
    let mut band = SLOPE_BAND;
    for _ in 0..=BAND_TRIES {
        // Per sector: area-weighted (height, dist) sums for each half-band.
        let mut acc = [[(0.0f64, 0.0f64, 0.0f64); 2]; NBINS];
        for s in samples {
            if s.dist < rho * (1.0 - band) || s.dist > rho * (1.0 + band) {
                continue;
            }
            if graph_only && s.region == RegionTag::Bridge {
                continue;
            }
            let bin = (((s.beta + PI) / (2.0 * PI) * NBINS as f64) as usize).min(NBINS - 1);
            let half = usize::from(s.dist >= rho);
            let cell = &mut acc[bin][half];
            cell.0 += s.height * s.area;
            cell.1 += s.dist * s.area;
            cell.2 += s.area;
        }
        let mut sum = 0.0;
        let mut valid = 0;
        for sector in &acc {
            let [(sl, dl, wl), (sh, dh, wh)] = *sector;
            if wl > 0.0 && wh > 0.0 {
                let (hl, xl) = (sl / wl, dl / wl);
                let (hh, xh) = (sh / wh, dh / wh);
                if xh - xl > 5e-3 * rho {
                    sum += (hh - hl) / (xh - xl);
                    valid += 1;
                }
            }
        }
        if valid >= NBINS / 2 {
            return Ok(sum / valid as f64);
        }
        band *= BAND_GROWTH;
    }
    Err(Error::BadParameter(format!(
        "too few angular sectors with radial spread around ρ = {rho:.4e}"
    )))
}

// ---------------------------------------------------------------------------
// Ω statistics and the bridge-size estimate
// ---------------------------------------------------------------------------

/// Quadrature statistics of a region Ω around one bridge.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct OmegaStats {
    /// Geodesic radius of Ω on the base surface.
    pub radius: f64,
    /// Area of the positive sheet over Ω, summed from the mesh.
    pub area: f64,
    /// Area-weighted mean of |A|² + Ric(ν,ν) over the sheet part of Ω.
    pub coefficient: f64,
    /// Mean graph height near ∂Ω.
    pub phi1: f64,
    /// Number of mesh samples inside Ω.
    pub samples: usize,
}

/// Measure a doubling mesh around one bridge: sheet area, instability
/// coefficient, and boundary graph height of the disc Ω of the given
/// radius.
pub fn omega_stats(
    mesh: &SurfaceMesh,
    base: BaseSurface,
    bridge: &BridgeSpec,
    radius: f64,
) -> Result<OmegaStats> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::BadParameter(format!(
            "Ω radius must be positive, got {radius}"
        )));
    }
    let samples = collect_samples(mesh, base, bridge)?;
    omega_stats_from(&samples, base, radius)
}

fn omega_stats_from(samples: &[Sample], base: BaseSurface, radius: f64) -> Result<OmegaStats> {
    let ric = base.ricci();
    let mut area = 0.0;
    let mut count = 0;
    let mut csum = 0.0;
    let mut cw = 0.0;
    for s in samples {
        if s.dist > radius {
            continue;
        }
        area += s.area;
        count += 1;
        if s.region == RegionTag::Sheet {
            csum += (s.a2 + ric) * s.area;
            cw += s.area;
        }
    }
    if cw <= 0.0 {
        return Err(Error::BadParameter(
            "Ω contains no sheet samples; enlarge the radius".into(),
        ));
    }
    let phi1 = ring_height(samples, radius * (1.0 - RING_BAND), radius)?;
    Ok(OmegaStats {
        radius,
        area,
        coefficient: csum / cw,
        phi1,
        samples: count,
    })
}

/// A bridge size estimated from the balancing law.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TauEstimate {
    /// Waist radius τ = d·exp(−2π / (Area(Ω)·(|A|²+Ric))).
    pub tau: f64,
    /// Matched graph height φ₁ = τ·log(d/τ).
    pub phi1: f64,
}

/// Estimate the bridge size a region Ω can balance, given the hole quantum
/// d (half the distance at which neighboring bridge discs touch).
pub fn tau_estimate(omega: &OmegaStats, d: f64) -> Result<TauEstimate> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::BadParameter(format!(
            "hole quantum must be positive, got {d}"
        )));
    }
    if !(omega.coefficient > 0.0) {
        return Err(Error::BadParameter(format!(
            "instability coefficient {:.4e} is not positive; the waist and graph \
             forces cannot oppose each other",
            omega.coefficient
        )));
    }
    if !(omega.area > 0.0) {
        return Err(Error::BadParameter(format!(
            "Ω area must be positive, got {:.4e}",
            omega.area
        )));
    }
    let tau = d * (-2.0 * PI / (omega.area * omega.coefficient)).exp();
    let phi1 = if tau > 0.0 { tau * (d / tau).ln() } else { 0.0 };
    Ok(TauEstimate { tau, phi1 })
}

// ---------------------------------------------------------------------------
// Vertical balance
// ---------------------------------------------------------------------------

/// Vertical and horizontal force balance around one bridge.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ForceReport {
    /// Geodesic radius of Ω.
    pub omega_radius: f64,
    /// Sheet area over Ω.
    pub omega_area: f64,
    /// Area-weighted mean of |A|² + Ric(ν,ν) over the sheet part of Ω.
    pub coefficient: f64,
    /// Graph height entering the area term.
    pub phi1: f64,
    /// Vertical force through the waist: 2πτ.
    pub waist_force: f64,
    /// Area(Ω) · coefficient · φ₁.
    pub area_term: f64,
    /// ∮_{∂Ω} η(φ₁).
    pub boundary_term: f64,
    /// Vertical force through the graph boundary: area + boundary terms.
    pub graph_force: f64,
    /// |waist − graph| / max(waist, graph).
    pub residual: f64,
    /// Radius at which the scanned boundary flux leaves the positive
    /// regime, when the scan finds one.
    pub balanced_radius: Option<f64>,
    /// Horizontal force per standard Killing direction, when the boundary
    /// curve admits the measurement (it requires a nearly constant φ₁).
    pub horizontal: Option<[f64; 2]>,
}

impl ForceReport {
    /// Signed balance gap: waist force minus graph force. Linear in τ at
    /// fixed graph data, so rescaling the bridge flips its sign across the
    /// balanced size.
    pub fn gap(&self) -> f64 {
        self.waist_force - self.graph_force
    }

    /// Header line matching [`ForceReport::csv_row`].
    pub fn csv_header() -> &'static str {
        "omega_radius,omega_area,coefficient,phi1,waist_force,area_term,\
         boundary_term,graph_force,residual,balanced_radius,horizontal_a,horizontal_b"
    }

    /// The report as one CSV row; absent optional fields stay empty.
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.omega_radius,
            self.omega_area,
            self.coefficient,
            self.phi1,
            self.waist_force,
            self.area_term,
            self.boundary_term,
            self.graph_force,
            self.residual,
            opt(self.balanced_radius),
            opt(self.horizontal.map(|h| h[0])),
            opt(self.horizontal.map(|h| h[1])),
        )
    }
}

/// Check the vertical balancing law on a doubling mesh: the waist force
/// 2πτ of the tagged bridge against the first-order force through the
/// graph boundary of the disc Ω of the given radius.
///
/// The report also scans smaller radii for the balanced Ω — the radius
/// where the boundary flux ∮η(φ₁), positive near the bridge, dies off —
/// and measures the horizontal force along the two standard Killing
/// directions when the hole rim admits it.
pub fn vertical_balance_check(
    mesh: &SurfaceMesh,
    base: BaseSurface,
    bridge: &BridgeSpec,
    omega_radius: f64,
) -> Result<ForceReport> {
    if !(omega_radius > bridge.transition) {
        return Err(Error::BadParameter(format!(
            "Ω radius {omega_radius:.4e} does not contain the bridge disc \
             (transition radius {:.4e})",
            bridge.transition
        )));
    }
    let spacing = base.neighbor_spacing(bridge.d);
    if omega_radius > spacing - bridge.d {
        return Err(Error::BadParameter(format!(
            "Ω radius {omega_radius:.4e} reaches the neighboring bridge \
             (lattice pitch {spacing:.4e})"
        )));
    }
    let samples = collect_samples(mesh, base, bridge)?;
    let stats = omega_stats_from(&samples, base, omega_radius)?;

    let area_term = stats.area * stats.coefficient * stats.phi1;
    let boundary_term =
        height_slope(&samples, omega_radius, bridge.transition)? * base.perimeter(omega_radius);
    let graph_force = area_term + boundary_term;
    let waist_force = 2.0 * PI * bridge.tau;

    // Balanced-Ω scan: geometric radii from inside the catenoidal funnel
    // out to Ω, watching the boundary flux leave the positive regime.
    let rho0 = (6.0 * bridge.tau).min(0.3 * bridge.transition);
    let mut fluxes = Vec::with_capacity(SCAN_STEPS);
    for k in 0..SCAN_STEPS {
        let t = k as f64 / (SCAN_STEPS - 1) as f64;
        let rho = rho0 * (omega_radius / rho0).powf(t);
        // Inside the funnel some radii may lack two-sided samples; skip
        // those rather than abort the scan.
        if let Ok(slope) = height_slope(&samples, rho, bridge.transition) {
            fluxes.push((rho, slope * base.perimeter(rho)));
        }
    }
    let peak = fluxes.iter().fold(0.0f64, |a, &(_, f)| a.max(f));
    let mut balanced_radius = None;
    if peak > 0.0 {
        let mut seen_positive = false;
        for &(rho, f) in &fluxes {
            if f > FLUX_EPS * peak {
                seen_positive = true;
            } else if seen_positive {
                balanced_radius = Some(rho);
                break;
            }
        }
    }

    let ks = base.standard_killing(bridge.center);
    let horizontal = match (
        horizontal_force(mesh, base, bridge, &ks[0]),
        horizontal_force(mesh, base, bridge, &ks[1]),
    ) {
        (Ok(a), Ok(b)) => Some([a.direct.unwrap_or(a.surrogate), b.direct.unwrap_or(b.surrogate)]),
        _ => None,
    };

    Ok(ForceReport {
        omega_radius,
        omega_area: stats.area,
        coefficient: stats.coefficient,
        phi1: stats.phi1,
        waist_force,
        area_term,
        boundary_term,
        graph_force,
        residual: (waist_force - graph_force).abs() / waist_force.max(graph_force),
        balanced_radius,
        horizontal,
    })
}

/// Boundary flux ∮_{∂Ω} η(φ₁) of a doubling mesh at radius ρ around a
/// bridge, by quadrature of the radial height slope.
pub fn boundary_flux(
    mesh: &SurfaceMesh,
    base: BaseSurface,
    bridge: &BridgeSpec,
    rho: f64,
) -> Result<f64> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::BadParameter(format!(
            "flux radius must be positive, got {rho}"
        )));
    }
    let samples = collect_samples(mesh, base, bridge)?;
    Ok(height_slope(&samples, rho, bridge.transition)? * base.perimeter(rho))
}

// ---------------------------------------------------------------------------
// Horizontal forces
// ---------------------------------------------------------------------------

/// The horizontal force ∮_{∂₁} η₁·K of one bridge boundary.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct HorizontalForce {
    /// ∮ η₁·K from discrete conormals of the boundary curve; absent for
    /// profile quadrature, which has no mesh conormals.
    pub direct: Option<f64>,
    /// The quadratic surrogate −½∮ (η(φ₁))²·η·K.
    pub surrogate: f64,
    /// ½∮ (η(φ₁))²·|η·K| — the scale of one side's contribution, against
    /// which the cancellation in `surrogate` is judged.
    pub single_sided: f64,
}

/// Measure the horizontal force of a bridge against a Killing field along
/// the hole rim ∂₁ (the boundary circle of the graph region at the
/// transition radius).
///
/// Requires the graph height to oscillate less than 10% along the rim and
/// the field to be nearly horizontal there.
pub fn horizontal_force(
    mesh: &SurfaceMesh,
    base: BaseSurface,
    bridge: &BridgeSpec,
    k: &KillingField,
) -> Result<HorizontalForce> {
    let samples = collect_samples(mesh, base, bridge)?;
    let rim_r = bridge.transition;

    // The structured rim circle, ordered by angle.
    let mut rim: Vec<&Sample> = samples
        .iter()
        .filter(|s| (s.dist - rim_r).abs() <= RIM_SNAP * rim_r)
        .collect();
    if rim.len() < 8 {
        return Err(Error::BadParameter(format!(
            "found only {} rim vertices at the transition radius {rim_r:.4e}",
            rim.len()
        )));
    }
    rim.sort_by(|a, b| a.beta.partial_cmp(&b.beta).unwrap());

    let hmin = rim.iter().fold(f64::INFINITY, |a, s| a.min(s.height));
    let hmax = rim.iter().fold(0.0f64, |a, s| a.max(s.height));
    let hmean = rim.iter().map(|s| s.height).sum::<f64>() / rim.len() as f64;
    if (hmax - hmin) / hmean > MAX_PHI_OSC {
        return Err(Error::BadParameter(format!(
            "graph height oscillates {:.1}% along the boundary; the horizontal \
             force needs a nearly constant φ₁",
            100.0 * (hmax - hmin) / hmean
        )));
    }

    // Radial slope of the graph height per rim vertex, from the angularly
    // nearest sample in the annulus just outside the rim.
    let outer: Vec<&Sample> = samples
        .iter()
        .filter(|s| s.dist > 1.03 * rim_r && s.dist < 1.7 * rim_r && s.region != RegionTag::Bridge)
        .collect();
    if outer.is_empty() {
        return Err(Error::BadParameter(
            "no graph samples outside the rim to take a radial slope from".into(),
        ));
    }
    let n = rim.len();
    let mut kvals = Vec::with_capacity(n);
    let mut kmax = 0.0f64;
    let mut tilt = 0.0f64;
    for s in &rim {
        let p = mesh.vertices[s.index];
        let kv = k.eval(p);
        kmax = kmax.max(kv.norm());
        tilt = tilt.max(kv.dot(&mesh.normals[s.index]).abs());
        kvals.push(kv);
    }
    if kmax <= 0.0 || tilt / kmax > MAX_K_TILT {
        return Err(Error::BadParameter(
            "Killing field is not approximately horizontal along the boundary".into(),
        ));
    }

    let mut direct = 0.0;
    let mut surrogate = 0.0;
    let mut single = 0.0;
    for j in 0..n {
        let prev = &rim[(j + n - 1) % n];
        let next = &rim[(j + 1) % n];
        let s = &rim[j];
        let p = mesh.vertices[s.index];
        let pp = mesh.vertices[prev.index];
        let pn = mesh.vertices[next.index];
        let ds = 0.5 * ((p - pp).norm() + (pn - p).norm());

        // Conormal: tangent to the mesh, orthogonal to the curve, pointing
        // away from the bridge.
        let t = (pn - pp).normalize();
        let nu = mesh.normals[s.index];
        let raw = match mesh.space {
            AmbientSpace::RoundSphere3 => cross4(p, t, nu),
            _ => cross4(Vec4::new(0.0, 0.0, 0.0, 1.0), t, nu),
        };
        let nr = raw.norm();
        if nr < 1e-12 {
            return Err(Error::DegenerateMesh(format!(
                "degenerate conormal at boundary vertex {}",
                s.index
            )));
        }
        let mut eta = raw / nr;
        let probe = {
            let q = p + eta * (1e-3 * rim_r);
            let q = if mesh.space == AmbientSpace::RoundSphere3 {
                q / q.norm()
            } else {
                q
            };
            base.split(bridge.center, q).0
        };
        if probe < s.dist {
            eta = -eta;
        }

        // Nearest outer sample by angle gives the radial height slope.
        let mate = outer
            .iter()
            .min_by(|a, b| {
                let da = wrap_angle(a.beta - s.beta).abs();
                let db = wrap_angle(b.beta - s.beta).abs();
                da.partial_cmp(&db).unwrap()
            })
            .expect("outer annulus is nonempty");
        let slope = (mate.height - s.height) / (mate.dist - s.dist);

        let eta_hor = base.horizontalize(p, eta);
        let ek = eta_hor.dot(&kvals[j]);
        direct += eta.dot(&kvals[j]) * ds;
        surrogate += -0.5 * slope * slope * ek * ds;
        single += 0.5 * slope * slope * ek.abs() * ds;
    }
    Ok(HorizontalForce {
        direct: Some(direct),
        surrogate,
        single_sided: single,
    })
}

fn wrap_angle(t: f64) -> f64 {
    let r = t.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

// ---------------------------------------------------------------------------
// Profile quadrature (sphere doublings at any bridge scale)
// ---------------------------------------------------------------------------

/// Geometry of the geodesic circle of radius ρ and angle β around a point
/// at latitude `lat0` on the unit sphere: returns (latitude, dlat/dρ, the
/// base point, and the outward radial unit vector ∂ρ).
fn circle_geometry(lat0: f64, lon0: f64, rho: f64, beta: f64) -> (f64, f64, Vec4, Vec4) {
    let c = Vec4::new(
        lat0.cos() * lon0.cos(),
        lat0.cos() * lon0.sin(),
        lat0.sin(),
        0.0,
    );
    let east = Vec4::new(-lon0.sin(), lon0.cos(), 0.0, 0.0);
    let north = Vec4::new(
        -lat0.sin() * lon0.cos(),
        -lat0.sin() * lon0.sin(),
        lat0.cos(),
        0.0,
    );
    let dir = east * beta.cos() + north * beta.sin();
    let b = c * rho.cos() + dir * rho.sin();
    let radial = dir * rho.cos() - c * rho.sin();
    let lat = b.z.clamp(-1.0, 1.0).asin();
    let dlat = radial.z / lat.cos();
    (lat, dlat, b, radial)
}

/// Vertical balance of one parallel of a balanced sphere-doubling profile,
/// by quadrature of the smoothed profile over the disc Ω of the given
/// radius around a bridge point. Works at bridge scales far below mesh
/// resolution, since every term shares the profile's overall factor.
///
/// The base sphere is totally geodesic, so the instability coefficient is
/// exactly Ric(ν,ν) = 2 and the area term is 2∫_Ω φ̃ with φ₁ reported as
/// the area-weighted mean height.
pub fn vertical_balance_profile(
    profile: &BalancedProfile,
    parallel: usize,
    omega_radius: f64,
) -> Result<ForceReport> {
    let p = profile.parallels.get(parallel).ok_or_else(|| {
        Error::BadParameter(format!(
            "profile has {} parallels, no index {parallel}",
            profile.parallels.len()
        ))
    })?;
    let d = p.disc_quantum(profile.m_mer);
    if !(omega_radius > 0.0) || omega_radius > 3.0 * d {
        return Err(Error::BadParameter(format!(
            "Ω radius {omega_radius:.4e} outside (0, 3d] — neighboring bridges \
             sit 4d = {:.4e} apart along the parallel",
            4.0 * d
        )));
    }
    let lat0 = p.latitude;
    let lon0 = PI / profile.m_mer as f64;

    // Boundary: trapezoid over the ring (exact for periodic integrands).
    let nb = 1024;
    let mut boundary = 0.0;
    for k in 0..nb {
        let beta = 2.0 * PI * k as f64 / nb as f64;
        let (lat, dlat, _, _) = circle_geometry(lat0, lon0, omega_radius, beta);
        let (_, dphi) = profile.smoothed_with_deriv(lat);
        boundary += dphi * dlat;
    }
    boundary *= omega_radius.sin() * 2.0 * PI / nb as f64;

    // Area integral ∫φ̃ dA: Simpson in the radius, trapezoid in the angle.
    let nr = 400;
    let ring_mean = |r: f64| -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        let nb2 = 512;
        let mut acc = 0.0;
        for k in 0..nb2 {
            let beta = 2.0 * PI * k as f64 / nb2 as f64;
            let (lat, _, _, _) = circle_geometry(lat0, lon0, r, beta);
            acc += profile.smoothed(lat);
        }
        acc / nb2 as f64 * 2.0 * PI * r.sin()
    };
    let h = omega_radius / nr as f64;
    let mut phi_int = ring_mean(0.0) + ring_mean(omega_radius);
    for k in 1..nr {
        phi_int += ring_mean(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    phi_int *= h / 3.0;

    let base = BaseSurface::EquatorSphere;
    let area = base.disc_area(omega_radius);
    let coefficient = base.ricci();
    let phi1 = phi_int / area;
    let area_term = area * coefficient * phi1;
    let graph_force = area_term + boundary;
    let waist_force = 2.0 * PI * p.tau;

    let horizontal = match (
        horizontal_force_profile(profile, parallel, omega_radius),
        parallel_rotation_surrogate(profile, parallel, omega_radius),
    ) {
        (Ok(m), Ok(r)) => Some([m.surrogate, r]),
        _ => None,
    };

    Ok(ForceReport {
        omega_radius,
        omega_area: area,
        coefficient,
        phi1,
        waist_force,
        area_term,
        boundary_term: boundary,
        graph_force,
        residual: (waist_force - graph_force).abs() / waist_force.max(graph_force),
        balanced_radius: None,
        horizontal,
    })
}

/// Horizontal force of one bridge of a balanced sphere-doubling profile
/// against the latitude-translation Killing field (the rotation through
/// the bridge's own meridian), by quadrature of the surrogate
/// −½∮(η(φ̃))²·η·K over the circle of radius ρ.
///
/// On a balanced profile the opposite slopes on the two sides of the
/// parallel cancel to leading order; an unbalanced profile (nonzero
/// horizontal offsets) leaves a net force whose sign follows the slope
/// imbalance.
pub fn horizontal_force_profile(
    profile: &BalancedProfile,
    parallel: usize,
    rho: f64,
) -> Result<HorizontalForce> {
    let p = profile.parallels.get(parallel).ok_or_else(|| {
        Error::BadParameter(format!(
            "profile has {} parallels, no index {parallel}",
            profile.parallels.len()
        ))
    })?;
    let d = p.disc_quantum(profile.m_mer);
    if !(rho > 0.0) || rho > 3.0 * d {
        return Err(Error::BadParameter(format!(
            "boundary radius {rho:.4e} outside (0, 3d]"
        )));
    }
    let lat0 = p.latitude;
    let lon0 = PI / profile.m_mer as f64;
    let k = KillingField::Rotation {
        a: Vec4::new(lon0.cos(), lon0.sin(), 0.0, 0.0),
        b: Vec4::new(0.0, 0.0, 1.0, 0.0),
    };

    // Oscillation guard: the surrogate needs φ̃ nearly constant on ∂₁.
    let nb = 2048;
    let mut hmin = f64::INFINITY;
    let mut hmax = 0.0f64;
    let mut hsum = 0.0;
    for j in 0..nb {
        let beta = 2.0 * PI * j as f64 / nb as f64;
        let (lat, _, _, _) = circle_geometry(lat0, lon0, rho, beta);
        let v = profile.smoothed(lat);
        hmin = hmin.min(v);
        hmax = hmax.max(v);
        hsum += v;
    }
    let osc = (hmax - hmin) / (hsum / nb as f64);
    if osc > MAX_PHI_OSC {
        return Err(Error::BadParameter(format!(
            "graph height oscillates {:.1}% along the boundary; the horizontal \
             force needs a nearly constant φ₁",
            100.0 * osc
        )));
    }

    let mut surrogate = 0.0;
    let mut single = 0.0;
    for j in 0..nb {
        let beta = 2.0 * PI * j as f64 / nb as f64;
        let (lat, dlat, b, radial) = circle_geometry(lat0, lon0, rho, beta);
        let (_, dphi) = profile.smoothed_with_deriv(lat);
        let slope = dphi * dlat;
        let ek = radial.dot(&k.eval(b));
        surrogate += -0.5 * slope * slope * ek;
        single += 0.5 * slope * slope * ek.abs();
    }
    let ds = rho.sin() * 2.0 * PI / nb as f64;
    Ok(HorizontalForce {
        direct: None,
        surrogate: surrogate * ds,
        single_sided: single * ds,
    })
}

/// Surrogate horizontal force against the longitude rotation, which
/// vanishes identically for rotationally invariant profiles; kept as the
/// second diagnostic column of profile force reports.
fn parallel_rotation_surrogate(
    profile: &BalancedProfile,
    parallel: usize,
    rho: f64,
) -> Result<f64> {
    let p = &profile.parallels[parallel];
    let lat0 = p.latitude;
    let lon0 = PI / profile.m_mer as f64;
    let k = KillingField::Rotation {
        a: Vec4::new(1.0, 0.0, 0.0, 0.0),
        b: Vec4::new(0.0, 1.0, 0.0, 0.0),
    };
    let nb = 2048;
    let mut surrogate = 0.0;
    for j in 0..nb {
        let beta = 2.0 * PI * j as f64 / nb as f64;
        let (lat, dlat, b, radial) = circle_geometry(lat0, lon0, rho, beta);
        let (_, dphi) = profile.smoothed_with_deriv(lat);
        let slope = dphi * dlat;
        surrogate += -0.5 * slope * slope * radial.dot(&k.eval(b));
    }
    Ok(surrogate * rho.sin() * 2.0 * PI / nb as f64)
}
