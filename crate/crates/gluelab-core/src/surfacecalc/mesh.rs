//! Triangle surface meshes and their discrete geometry.
//!
//! Meshes live either in flat ℝ³ (`space = Euclidean3`, w-component 0) or on
//! the unit 3-sphere (`space = RoundSphere3`, extrinsic unit 4-vectors).
//! Surfaces built in the Clifford chart are embedded into S³ when they are
//! meshed, so a `SurfaceMesh` never carries chart coordinates — that keeps
//! every discrete operator a plain computation on (possibly 4-dimensional)
//! Cartesian coordinates. Chordal distances stand in for geodesic ones; the
//! O(h³) difference is far below the discretization error of the operators.
//!
//! Discrete operators follow the standard cotangent scheme with
//! Voronoi-mixed vertex areas. The per-vertex mean curvature is
//! H_i = ⟨(W X)_i / A_i, ν_i⟩ where W is the (negative semi-definite)
//! cotangent matrix — the discrete `⟨Δ_M X, ν⟩`, under which a unit round
//! 2-sphere with the inward normal reports H = +2. |A|² is estimated by a
//! local quadric fit in the tangent plane.

use crate::ambient::AmbientSpace;
use crate::error::{Error, Result};
use crate::surfacecalc::cross4;
use crate::Vec4;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::Write;

/// Which construction region a vertex belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionTag {
    /// A graph sheet over the base surface (doubling) or host surface
    /// (desingularization) away from all gluing regions.
    Sheet,
    /// A catenoidal bridge neck.
    Bridge,
    /// A handle core modeled on the Scherk surface.
    Core,
    /// An asymptotic wing of a core.
    Wing,
    /// A blend zone between model pieces and sheets/hosts.
    Transition,
    /// Host-surface cap bounding a desingularization strip.
    Host,
}

impl RegionTag {
    pub fn as_str(self) -> &'static str {
        match self {
            RegionTag::Sheet => "sheet",
            RegionTag::Bridge => "bridge",
            RegionTag::Core => "core",
            RegionTag::Wing => "wing",
            RegionTag::Transition => "transition",
            RegionTag::Host => "host",
        }
    }
}

impl std::fmt::Display for RegionTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-vertex geometric quantities of a mesh or patch.
///
/// `h` uses the graph convention ⟨Δ_M X, ν⟩ (unit round 2-sphere in
/// Euclidean 3-space: 2, with the inward normal our builders carry);
/// `q_residual` is present when the report comes from a graph decomposition
/// and houses the quadratic remainder Q_f.
#[derive(Clone, Debug)]
pub struct GeomReport {
    pub h: Vec<f64>,
    pub a2: Vec<f64>,
    pub ric: Vec<f64>,
    pub area: Vec<f64>,
    pub q_residual: Option<Vec<f64>>,
}

impl GeomReport {
    /// Write as CSV: `vertex,h,a2,ric,area[,q]`, floats at 17 significant
    /// digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let has_q = self.q_residual.is_some();
        if has_q {
            writeln!(w, "vertex,h,a2,ric,area,q")?;
        } else {
            writeln!(w, "vertex,h,a2,ric,area")?;
        }
        for i in 0..self.h.len() {
            if let Some(q) = &self.q_residual {
                writeln!(
                    w,
                    "{i},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                    self.h[i], self.a2[i], self.ric[i], self.area[i], q[i]
                )?;
            } else {
                writeln!(
                    w,
                    "{i},{:.16e},{:.16e},{:.16e},{:.16e}",
                    self.h[i], self.a2[i], self.ric[i], self.area[i]
                )?;
            }
        }
        Ok(())
    }
}

/// An oriented triangle mesh in ℝ³ or on S³ ⊂ ℝ⁴.
#[derive(Clone, Debug)]
pub struct SurfaceMesh {
    /// Euclidean3 (w = 0) or RoundSphere3 (unit 4-vectors). Chart-built
    /// surfaces are embedded before meshing.
    pub space: AmbientSpace,
    pub vertices: Vec<Vec4>,
    pub faces: Vec<[u32; 3]>,
    /// Unit vertex normals (tangent to S³ and orthogonal to the surface for
    /// sphere meshes).
    pub normals: Vec<Vec4>,
    /// Construction region per vertex (the tags partition the vertex set).
    pub regions: Vec<RegionTag>,
}

impl SurfaceMesh {
    pub fn new(
        space: AmbientSpace,
        vertices: Vec<Vec4>,
        faces: Vec<[u32; 3]>,
        normals: Vec<Vec4>,
        regions: Vec<RegionTag>,
    ) -> Result<SurfaceMesh> {
        if space == AmbientSpace::CliffordChart {
            return Err(Error::BadParameter(
                "meshes carry extrinsic coordinates; embed chart surfaces into RoundSphere3".into(),
            ));
        }
        let n = vertices.len();
        if normals.len() != n || regions.len() != n {
            return Err(Error::BadParameter(format!(
                "mesh field lengths disagree: {n} vertices, {} normals, {} regions",
                normals.len(),
                regions.len()
            )));
        }
        for (i, nu) in normals.iter().enumerate() {
            if (nu.norm() - 1.0).abs() > 1e-10 {
                return Err(Error::BadParameter(format!(
                    "normal {i} is not unit length: |ν| = {:.12}",
                    nu.norm()
                )));
            }
        }
        for f in &faces {
            for &v in f {
                if v as usize >= n {
                    return Err(Error::BadParameter(format!(
                        "face references vertex {v} out of {n}"
                    )));
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::DegenerateMesh(format!(
                    "face with repeated vertex indices: {f:?}"
                )));
            }
        }
        Ok(SurfaceMesh {
            space,
            vertices,
            faces,
            normals,
            regions,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    /// Verify manifold-with-boundary connectivity with consistent
    /// orientation: every directed edge occurs at most once, every
    /// undirected edge bounds at most two faces, and paired faces traverse
    /// the shared edge in opposite directions. Also rejects faces degenerate
    /// in area (< 10⁻¹⁴ of the mean).
    pub fn validate_manifold(&self) -> Result<()> {
        let mut directed: HashMap<(u32, u32), u32> = HashMap::new();
        for (fi, f) in self.faces.iter().enumerate() {
            for e in 0..3 {
                let a = f[e];
                let b = f[(e + 1) % 3];
                if directed.insert((a, b), fi as u32).is_some() {
                    return Err(Error::NonManifold(format!(
                        "directed edge ({a},{b}) shared by two faces — inconsistent orientation \
                         or non-manifold connectivity"
                    )));
                }
            }
        }
        let mean_area = self.faces.iter().map(|f| self.face_area(*f)).sum::<f64>()
            / self.n_faces().max(1) as f64;
        for f in &self.faces {
            let a = self.face_area(*f);
            if a <= 1e-14 * mean_area {
                return Err(Error::DegenerateMesh(format!(
                    "face {f:?} has area {a:.3e} (mean {mean_area:.3e})"
                )));
            }
        }
        Ok(())
    }

    /// Per-vertex boundary flags: a vertex is on the boundary when one of
    /// its directed edges has no opposite partner.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut directed: HashMap<(u32, u32), u8> = HashMap::new();
        for f in &self.faces {
            for e in 0..3 {
                let a = f[e];
                let b = f[(e + 1) % 3];
                *directed.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        let mut boundary = vec![false; self.n_vertices()];
        for (&(a, b), &count) in &directed {
            if count == 1 {
                boundary[a as usize] = true;
                boundary[b as usize] = true;
            }
        }
        boundary
    }

    /// Chordal area of a face.
    pub fn face_area(&self, f: [u32; 3]) -> f64 {
        let p0 = self.vertices[f[0] as usize];
        let e1 = self.vertices[f[1] as usize] - p0;
        let e2 = self.vertices[f[2] as usize] - p0;
        let g11 = e1.dot(&e1);
        let g22 = e2.dot(&e2);
        let g12 = e1.dot(&e2);
        0.5 * (g11 * g22 - g12 * g12).max(0.0).sqrt()
    }

    /// Outward-consistent face normal: orthogonal to the face (and to the
    /// sphere's radial direction for S³ meshes), oriented by the vertex
    /// winding.
    pub fn face_normal(&self, f: [u32; 3]) -> Vec4 {
        let p0 = self.vertices[f[0] as usize];
        let p1 = self.vertices[f[1] as usize];
        let p2 = self.vertices[f[2] as usize];
        let n = match self.space {
            AmbientSpace::RoundSphere3 => {
                let c = (p0 + p1 + p2).normalize();
                cross4(c, p1 - p0, p2 - p0)
            }
            _ => {
                let e1 = p1 - p0;
                let e2 = p2 - p0;
                // 3D cross product in the w = 0 hyperplane.
                Vec4::new(
                    e1.y * e2.z - e1.z * e2.y,
                    e1.z * e2.x - e1.x * e2.z,
                    e1.x * e2.y - e1.y * e2.x,
                    0.0,
                )
            }
        };
        let nn = n.norm();
        if nn > 0.0 {
            n / nn
        } else {
            n
        }
    }

    /// Mixed Voronoi vertex areas (Voronoi area in non-obtuse triangles,
    /// area/2 at the obtuse corner and area/4 elsewhere in obtuse ones).
    pub fn vertex_areas(&self) -> Vec<f64> {
        let mut areas = vec![0.0; self.n_vertices()];
        for f in &self.faces {
            let p = [
                self.vertices[f[0] as usize],
                self.vertices[f[1] as usize],
                self.vertices[f[2] as usize],
            ];
            let area = self.face_area(*f);
            // Squared edge lengths opposite to each corner and corner cots.
            let mut cot = [0.0f64; 3];
            let mut obtuse = None;
            for c in 0..3 {
                let a = p[(c + 1) % 3] - p[c];
                let b = p[(c + 2) % 3] - p[c];
                let dot = a.dot(&b);
                let crossn = (a.dot(&a) * b.dot(&b) - dot * dot).max(0.0).sqrt();
                cot[c] = if crossn > 0.0 { dot / crossn } else { 0.0 };
                if dot < 0.0 {
                    obtuse = Some(c);
                }
            }
            match obtuse {
                Some(oc) => {
                    for c in 0..3 {
                        areas[f[c] as usize] += if c == oc { area / 2.0 } else { area / 4.0 };
                    }
                }
                None => {
                    for c in 0..3 {
                        // Voronoi part at corner c: (1/8)(|e_b|² cot at the
                        // corner opposite e_b + |e_a|² cot at the corner
                        // opposite e_a) where e_a, e_b are the edges at c.
                        let ea = p[(c + 1) % 3] - p[c]; // opposite corner (c+2)
                        let eb = p[(c + 2) % 3] - p[c]; // opposite corner (c+1)
                        areas[f[c] as usize] +=
                            (ea.dot(&ea) * cot[(c + 2) % 3] + eb.dot(&eb) * cot[(c + 1) % 3])
                                / 8.0;
                    }
                }
            }
        }
        areas
    }

    /// Cotangent stiffness triplets of the (negative semi-definite) matrix
    /// W with (W f)_i = ½ Σ_j (cot α_ij + cot β_ij)(f_j − f_i). Only the
    /// upper representative of each symmetric pair is pushed; diagonal
    /// entries accumulate the negated row sums.
    pub fn cot_triplets(&self) -> Vec<(u32, u32, f64)> {
        let mut trips = Vec::with_capacity(self.n_faces() * 6 + self.n_vertices());
        for f in &self.faces {
            let p = [
                self.vertices[f[0] as usize],
                self.vertices[f[1] as usize],
                self.vertices[f[2] as usize],
            ];
            for c in 0..3 {
                // Corner c is opposite edge ((c+1),(c+2)).
                let a = p[(c + 1) % 3] - p[c];
                let b = p[(c + 2) % 3] - p[c];
                let dot = a.dot(&b);
                let crossn = (a.dot(&a) * b.dot(&b) - dot * dot).max(0.0).sqrt();
                let w = if crossn > 0.0 { 0.5 * dot / crossn } else { 0.0 };
                let (i, j) = (f[(c + 1) % 3], f[(c + 2) % 3]);
                trips.push((i, j, w));
                trips.push((i, i, -w));
                trips.push((j, j, -w));
            }
        }
        trips
    }

    /// Discrete mean curvature: H_i = ⟨(W X)_i, ν_i⟩ / A_i. For sphere
    /// meshes the radial component of the coordinate Laplacian is orthogonal
    /// to ν and drops out in the inner product.
    pub fn mean_curvature(&self) -> Vec<f64> {
        let n = self.n_vertices();
        let areas = self.vertex_areas();
        let mut acc = vec![Vec4::zeros(); n];
        for f in &self.faces {
            let p = [
                self.vertices[f[0] as usize],
                self.vertices[f[1] as usize],
                self.vertices[f[2] as usize],
            ];
            for c in 0..3 {
                let a = p[(c + 1) % 3] - p[c];
                let b = p[(c + 2) % 3] - p[c];
                let dot = a.dot(&b);
                let crossn = (a.dot(&a) * b.dot(&b) - dot * dot).max(0.0).sqrt();
                let w = if crossn > 0.0 { 0.5 * dot / crossn } else { 0.0 };
                let (i, j) = (f[(c + 1) % 3] as usize, f[(c + 2) % 3] as usize);
                let d = p[(c + 2) % 3] - p[(c + 1) % 3];
                acc[i] += d * w;
                acc[j] -= d * w;
            }
        }
        (0..n)
            .map(|i| {
                if areas[i] > 0.0 {
                    acc[i].dot(&self.normals[i]) / areas[i]
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// One-ring (and, where needed for a stable fit, two-ring) quadric
    /// estimate of |A|² per vertex: neighbors are expressed in a tangent
    /// frame at the vertex and w ≈ c₁u² + c₂uv + c₃v² + c₄u + c₅v is fitted;
    /// |A|² = 4c₁² + 2c₂² + 4c₃².
    pub fn second_form_sq(&self) -> Vec<f64> {
        let n = self.n_vertices();
        let mut ring: Vec<Vec<u32>> = vec![Vec::new(); n];
        for f in &self.faces {
            for c in 0..3 {
                let i = f[c] as usize;
                let j = f[(c + 1) % 3];
                if !ring[i].contains(&j) {
                    ring[i].push(j);
                }
                let k = f[(c + 2) % 3];
                if !ring[i].contains(&k) {
                    ring[i].push(k);
                }
            }
        }
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut nbrs = ring[i].clone();
            if nbrs.len() < 5 {
                // Extend with the two-ring.
                let mut ext = nbrs.clone();
                for &j in &nbrs {
                    for &k in &ring[j as usize] {
                        if k as usize != i && !ext.contains(&k) {
                            ext.push(k);
                        }
                    }
                }
                nbrs = ext;
            }
            if nbrs.len() < 5 {
                out[i] = 0.0;
                continue;
            }
            let p = self.vertices[i];
            let nu = self.normals[i];
            // Tangent frame orthogonal to ν (and to the radial direction for
            // sphere meshes).
            let mut t1 = Vec4::zeros();
            for trial in 0..4 {
                let mut e = Vec4::zeros();
                e[trial] = 1.0;
                let mut t = e - nu * e.dot(&nu);
                if self.space == AmbientSpace::RoundSphere3 {
                    t -= p * t.dot(&p);
                }
                if t.norm() > 0.3 {
                    t1 = t.normalize();
                    break;
                }
            }
            let t2 = match self.space {
                AmbientSpace::RoundSphere3 => cross4(p, nu, t1).normalize(),
                _ => {
                    let a = nu.xyz().cross(&t1.xyz());
                    Vec4::new(a.x, a.y, a.z, 0.0).normalize()
                }
            };
            let rows = nbrs.len();
            let mut mat = DMatrix::<f64>::zeros(rows, 5);
            let mut rhs = DVector::<f64>::zeros(rows);
            for (r, &j) in nbrs.iter().enumerate() {
                let mut d = self.vertices[j as usize] - p;
                if self.space == AmbientSpace::RoundSphere3 {
                    // Work in the tangent space of S³ at p.
                    d -= p * d.dot(&p);
                }
                let (u, v, w) = (d.dot(&t1), d.dot(&t2), d.dot(&nu));
                mat[(r, 0)] = u * u;
                mat[(r, 1)] = u * v;
                mat[(r, 2)] = v * v;
                mat[(r, 3)] = u;
                mat[(r, 4)] = v;
                rhs[r] = w;
            }
            let svd = mat.svd(true, true);
            match svd.solve(&rhs, 1e-12) {
                Ok(c) => {
                    out[i] = 4.0 * c[0] * c[0] + 2.0 * c[1] * c[1] + 4.0 * c[2] * c[2];
                }
                Err(_) => out[i] = 0.0,
            }
        }
        out
    }

    /// Per-vertex geometry report: cotangent mean curvature, quadric |A|²,
    /// the ambient Ricci constant, and mixed Voronoi areas.
    pub fn geom_report(&self) -> GeomReport {
        let ric_val = if self.space == AmbientSpace::Euclidean3 {
            0.0
        } else {
            2.0
        };
        GeomReport {
            h: self.mean_curvature(),
            a2: self.second_form_sq(),
            ric: vec![ric_val; self.n_vertices()],
            area: self.vertex_areas(),
            q_residual: None,
        }
    }

    /// Per-vertex norm of the P1 (per-face) gradient of a scalar field,
    /// aggregated by face-area-weighted averaging.
    pub fn vertex_gradient_norms(&self, vals: &[f64]) -> Vec<f64> {
        assert_eq!(vals.len(), self.n_vertices());
        let mut acc = vec![0.0f64; self.n_vertices()];
        let mut wsum = vec![0.0f64; self.n_vertices()];
        for f in &self.faces {
            let p0 = self.vertices[f[0] as usize];
            let e1 = self.vertices[f[1] as usize] - p0;
            let e2 = self.vertices[f[2] as usize] - p0;
            let d1 = vals[f[1] as usize] - vals[f[0] as usize];
            let d2 = vals[f[2] as usize] - vals[f[0] as usize];
            let g11 = e1.dot(&e1);
            let g12 = e1.dot(&e2);
            let g22 = e2.dot(&e2);
            let det = g11 * g22 - g12 * g12;
            if det <= 0.0 {
                continue;
            }
            let c1 = (g22 * d1 - g12 * d2) / det;
            let c2 = (g11 * d2 - g12 * d1) / det;
            let grad = e1 * c1 + e2 * c2;
            let area = 0.5 * det.sqrt();
            for &vid in f {
                acc[vid as usize] += grad.norm() * area;
                wsum[vid as usize] += area;
            }
        }
        acc.iter()
            .zip(&wsum)
            .map(|(a, w)| if *w > 0.0 { a / w } else { 0.0 })
            .collect()
    }

    /// Mean edge length — the "mesh scale" used by discrete norm surrogates.
    pub fn mean_edge_length(&self) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for f in &self.faces {
            for e in 0..3 {
                let a = self.vertices[f[e] as usize];
                let b = self.vertices[f[(e + 1) % 3] as usize];
                sum += (b - a).norm();
                count += 1;
            }
        }
        if count > 0 {
            sum / count as f64
        } else {
            0.0
        }
    }

    /// Total chordal surface area.
    pub fn total_area(&self) -> f64 {
        self.faces.iter().map(|f| self.face_area(*f)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surfacecalc::patch::ParamPatch;

    /// Lat-long mesh of the unit 2-sphere in ℝ³ with the inward normal
    /// (the orientation under which H = +2); open at the poles.
    fn sphere_mesh(n: usize) -> SurfaceMesh {
        let band = 0.25; // keep away from the poles
        let us: Vec<f64> = (0..2 * n)
            .map(|i| 2.0 * std::f64::consts::PI * i as f64 / (2 * n) as f64)
            .collect();
        let vs: Vec<f64> = (0..=n)
            .map(|j| band + (std::f64::consts::PI - 2.0 * band) * j as f64 / n as f64)
            .collect();
        // u = azimuth φ, v = polar θ: cross(X_φ, X_θ) points inward.
        let patch = ParamPatch::from_fn(
            AmbientSpace::Euclidean3,
            us,
            vs,
            Some(2.0 * std::f64::consts::PI),
            None,
            RegionTag::Sheet,
            |u, v| Vec4::new(v.sin() * u.cos(), v.sin() * u.sin(), v.cos(), 0.0),
        )
        .unwrap();
        patch.to_mesh().unwrap()
    }

    #[test]
    fn sphere_mesh_mean_curvature_is_two() {
        let mesh = sphere_mesh(24);
        mesh.validate_manifold().unwrap();
        let h = mesh.mean_curvature();
        let boundary = mesh.boundary_vertices();
        let mut worst = 0.0f64;
        for i in 0..mesh.n_vertices() {
            if !boundary[i] {
                worst = worst.max((h[i] - 2.0).abs());
            }
        }
        assert!(worst < 2e-2, "interior cotangent H deviates by {worst}");
    }

    #[test]
    fn sphere_mesh_quadric_a2_is_two() {
        let mesh = sphere_mesh(24);
        let a2 = mesh.second_form_sq();
        let boundary = mesh.boundary_vertices();
        let mut worst = 0.0f64;
        for i in 0..mesh.n_vertices() {
            if !boundary[i] {
                worst = worst.max((a2[i] - 2.0).abs());
            }
        }
        assert!(worst < 5e-2, "quadric |A|² deviates by {worst}");
    }

    #[test]
    fn sphere_mesh_areas_sum_to_band_area() {
        let mesh = sphere_mesh(32);
        let total: f64 = mesh.vertex_areas().iter().sum();
        // Band area = 2π(cos b − cos(π−b)) = 4π cos b.
        let want = 4.0 * std::f64::consts::PI * 0.25f64.cos();
        assert!(
            (total - want).abs() < 1e-2 * want,
            "mixed areas {total} vs band {want}"
        );
        // And they agree with the plain face-area sum.
        assert!((total - mesh.total_area()).abs() < 1e-10 * want);
    }

    #[test]
    fn cot_matrix_kills_constants_and_is_symmetric() {
        let mesh = sphere_mesh(16);
        let w = crate::sparse::SymCsr::from_triplets(mesh.n_vertices(), &mesh.cot_triplets());
        assert_eq!(w.asymmetry(), 0.0);
        let ones = vec![1.0; mesh.n_vertices()];
        let y = w.matvec_alloc(&ones);
        let worst = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst < 1e-12, "row sums do not vanish: {worst}");
    }

    #[test]
    fn gradient_of_linear_field_is_exact() {
        // On a flat planar patch the P1 gradient of a linear function is
        // exact at interior vertices.
        let us: Vec<f64> = (0..20).map(|i| i as f64 / 19.0).collect();
        let vs = us.clone();
        let patch = ParamPatch::from_fn(
            AmbientSpace::Euclidean3,
            us,
            vs,
            None,
            None,
            RegionTag::Sheet,
            |u, v| Vec4::new(u, v, 0.0, 0.0),
        )
        .unwrap();
        let mesh = patch.to_mesh().unwrap();
        let vals: Vec<f64> = mesh.vertices.iter().map(|p| 3.0 * p.x - 2.0 * p.y).collect();
        let g = mesh.vertex_gradient_norms(&vals);
        let want = (9.0f64 + 4.0).sqrt();
        for (i, gi) in g.iter().enumerate() {
            assert!(
                (gi - want).abs() < 1e-10,
                "gradient at vertex {i}: {gi} vs {want}"
            );
        }
    }

    #[test]
    fn manifold_validation_catches_bad_orientation() {
        // Two triangles sharing an edge traversed in the SAME direction.
        let verts = vec![
            Vec4::new(0.0, 0.0, 0.0, 0.0),
            Vec4::new(1.0, 0.0, 0.0, 0.0),
            Vec4::new(0.0, 1.0, 0.0, 0.0),
            Vec4::new(1.0, 1.0, 0.0, 0.0),
        ];
        let normals = vec![Vec4::new(0.0, 0.0, 1.0, 0.0); 4];
        let regions = vec![RegionTag::Sheet; 4];
        let bad = SurfaceMesh::new(
            AmbientSpace::Euclidean3,
            verts.clone(),
            vec![[0, 1, 2], [1, 2, 3]],
            normals.clone(),
            regions.clone(),
        )
        .unwrap();
        assert!(matches!(
            bad.validate_manifold(),
            Err(Error::NonManifold(_))
        ));
        let good = SurfaceMesh::new(
            AmbientSpace::Euclidean3,
            verts,
            vec![[0, 1, 2], [2, 1, 3]],
            normals,
            regions,
        )
        .unwrap();
        good.validate_manifold().unwrap();
    }
}
