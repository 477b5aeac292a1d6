//! Structured parametric patches and finite-difference surface geometry.
//!
//! A [`ParamPatch`] is an immersion sampled on a (possibly non-uniform,
//! possibly periodic) grid in (u, v). Fundamental forms are computed by
//! central differences — non-uniform 3-point stencils — with ambient
//! corrections per space:
//!
//! - Euclidean3: plain second derivatives, normal from the cross product;
//! - RoundSphere3 (extrinsic): tangents and second derivatives in ℝ⁴; the
//!   surface normal ν = cross4(p, X_u, X_v)/|·| is orthogonal to the radial
//!   direction, so ⟨X_ab, ν⟩ needs no curvature correction;
//! - CliffordChart: covariant second derivatives with finite-difference
//!   Christoffel symbols, normal raised from the metric cross covector.
//!
//! The sign convention is H = tr_I(II) with II_ab = ⟨∇²_ab X, ν⟩ for the
//! patch's own normal orientation ν ∝ "X_u × X_v" — the graph convention
//! under which a normal graph f·ν satisfies H_f = H + Lf + Q_f with
//! L = Δ + |A|² + Ric(ν,ν) and quadratic Q_f ([`mean_curvature_of_graph`]).

use crate::ambient::AmbientSpace;
use crate::error::{Error, Result};
use crate::surfacecalc::cross4;
use crate::surfacecalc::mesh::{GeomReport, RegionTag, SurfaceMesh};
use crate::{Vec3, Vec4};
use nalgebra::Matrix2;

/// Non-uniform central-difference weights over (f_{i−1}, f_i, f_{i+1}) with
/// spacings h₋, h₊: returns (first-, second-) derivative weights.
fn fd_weights(hm: f64, hp: f64) -> ([f64; 3], [f64; 3]) {
    let denom = hm * hp * (hm + hp);
    let w1 = [
        -hp * hp / denom,
        (hp * hp - hm * hm) / denom,
        hm * hm / denom,
    ];
    let w2 = [
        2.0 * hp / denom,
        -2.0 * (hm + hp) / denom,
        2.0 * hm / denom,
    ];
    (w1, w2)
}

/// Second-order jet of the immersion at a grid node.
struct Jet2 {
    p: Vec4,
    xu: Vec4,
    xv: Vec4,
    xuu: Vec4,
    xuv: Vec4,
    xvv: Vec4,
}

/// The pointwise graph decomposition H_f = H + Lf + Q_f on a base patch.
#[derive(Clone, Debug)]
pub struct GraphDecomposition {
    /// Exact mean curvature of the graph surface.
    pub h_f: Vec<f64>,
    /// Mean curvature of the base.
    pub h: Vec<f64>,
    /// Linearization (Δ + |A|² + Ric(ν,ν))f on the base.
    pub lf: Vec<f64>,
    /// Quadratic-and-higher remainder Q_f = H_f − H − Lf.
    pub qf: Vec<f64>,
    /// Nodes where all terms are computable (margin-2 interior).
    pub valid: Vec<bool>,
}

/// An immersion sampled on a structured grid.
#[derive(Clone, Debug)]
pub struct ParamPatch {
    pub space: AmbientSpace,
    /// Strictly increasing u samples (length nu ≥ 2).
    pub us: Vec<f64>,
    /// Strictly increasing v samples (length nv ≥ 2).
    pub vs: Vec<f64>,
    /// Immersion values, row-major: index iu·nv + iv.
    pub pts: Vec<Vec4>,
    /// Period of u when the patch closes up in u (the sample at us[0] +
    /// period is identified with iu = 0).
    pub wrap_u: Option<f64>,
    /// Period of v when the patch closes up in v.
    pub wrap_v: Option<f64>,
    /// Region tag inherited by meshes built from this patch.
    pub region: RegionTag,
}

impl ParamPatch {
    /// Sample `f(u, v)` over the grid.
    pub fn from_fn(
        space: AmbientSpace,
        us: Vec<f64>,
        vs: Vec<f64>,
        wrap_u: Option<f64>,
        wrap_v: Option<f64>,
        region: RegionTag,
        f: impl Fn(f64, f64) -> Vec4,
    ) -> Result<ParamPatch> {
        let mut pts = Vec::with_capacity(us.len() * vs.len());
        for &u in &us {
            for &v in &vs {
                pts.push(f(u, v));
            }
        }
        ParamPatch::new(space, us, vs, pts, wrap_u, wrap_v, region)
    }

    pub fn new(
        space: AmbientSpace,
        us: Vec<f64>,
        vs: Vec<f64>,
        pts: Vec<Vec4>,
        wrap_u: Option<f64>,
        wrap_v: Option<f64>,
        region: RegionTag,
    ) -> Result<ParamPatch> {
        if us.len() < 2 || vs.len() < 2 {
            return Err(Error::BadParameter(
                "patch grids need at least 2 samples per direction".into(),
            ));
        }
        if pts.len() != us.len() * vs.len() {
            return Err(Error::BadParameter(format!(
                "patch has {} points for a {}×{} grid",
                pts.len(),
                us.len(),
                vs.len()
            )));
        }
        for w in us.windows(2).chain(vs.windows(2)) {
            if w[1] <= w[0] {
                return Err(Error::BadParameter(
                    "patch grid coordinates must be strictly increasing".into(),
                ));
            }
        }
        if let Some(p) = wrap_u {
            if p <= us[us.len() - 1] - us[0] {
                return Err(Error::BadParameter(
                    "u-period must exceed the sampled u-span".into(),
                ));
            }
        }
        if let Some(p) = wrap_v {
            if p <= vs[vs.len() - 1] - vs[0] {
                return Err(Error::BadParameter(
                    "v-period must exceed the sampled v-span".into(),
                ));
            }
        }
        for p in &pts {
            space.check_point(*p)?;
        }
        Ok(ParamPatch {
            space,
            us,
            vs,
            pts,
            wrap_u,
            wrap_v,
            region,
        })
    }

    pub fn nu(&self) -> usize {
        self.us.len()
    }

    pub fn nv(&self) -> usize {
        self.vs.len()
    }

    pub fn idx(&self, iu: usize, iv: usize) -> usize {
        iu * self.nv() + iv
    }

    pub fn pt(&self, iu: usize, iv: usize) -> Vec4 {
        self.pts[self.idx(iu, iv)]
    }

    /// Grid neighbor in the u-direction at offset d ∈ {−1, 0, 1}, with its
    /// (possibly unwrapped) coordinate. None when it falls off an open edge.
    fn u_neighbor(&self, iu: usize, d: i64) -> Option<(f64, usize)> {
        let nu = self.nu() as i64;
        let j = iu as i64 + d;
        if (0..nu).contains(&j) {
            return Some((self.us[j as usize], j as usize));
        }
        let period = self.wrap_u?;
        let wrapped = j.rem_euclid(nu) as usize;
        let shift = if j < 0 { -period } else { period };
        Some((self.us[wrapped] + shift, wrapped))
    }

    fn v_neighbor(&self, iv: usize, d: i64) -> Option<(f64, usize)> {
        let nv = self.nv() as i64;
        let j = iv as i64 + d;
        if (0..nv).contains(&j) {
            return Some((self.vs[j as usize], j as usize));
        }
        let period = self.wrap_v?;
        let wrapped = j.rem_euclid(nv) as usize;
        let shift = if j < 0 { -period } else { period };
        Some((self.vs[wrapped] + shift, wrapped))
    }

    /// Whether the full (2·margin+1)² stencil around the node exists.
    pub fn has_stencil(&self, iu: usize, iv: usize, margin: i64) -> bool {
        self.u_neighbor(iu, -margin).is_some()
            && self.u_neighbor(iu, margin).is_some()
            && self.v_neighbor(iv, -margin).is_some()
            && self.v_neighbor(iv, margin).is_some()
    }

    /// Mask of nodes with a full stencil of the given margin.
    pub fn interior_mask(&self, margin: i64) -> Vec<bool> {
        let mut mask = vec![false; self.pts.len()];
        for iu in 0..self.nu() {
            for iv in 0..self.nv() {
                mask[self.idx(iu, iv)] = self.has_stencil(iu, iv, margin);
            }
        }
        mask
    }

    fn jet2(&self, iu: usize, iv: usize) -> Result<Jet2> {
        let stencil_err = || {
            Error::BadParameter(format!(
                "finite-difference stencil out of domain at node ({iu},{iv})"
            ))
        };
        let (um, ium) = self.u_neighbor(iu, -1).ok_or_else(stencil_err)?;
        let (up, iup) = self.u_neighbor(iu, 1).ok_or_else(stencil_err)?;
        let (vm, ivm) = self.v_neighbor(iv, -1).ok_or_else(stencil_err)?;
        let (vp, ivp) = self.v_neighbor(iv, 1).ok_or_else(stencil_err)?;
        let u0 = self.us[iu];
        let v0 = self.vs[iv];
        let (w1u, w2u) = fd_weights(u0 - um, up - u0);
        let (w1v, w2v) = fd_weights(v0 - vm, vp - v0);
        let iu3 = [ium, iu, iup];
        let iv3 = [ivm, iv, ivp];
        let p = |a: usize, b: usize| self.pts[iu3[a] * self.nv() + iv3[b]];

        let mut xu = Vec4::zeros();
        let mut xuu = Vec4::zeros();
        let mut xv = Vec4::zeros();
        let mut xvv = Vec4::zeros();
        for k in 0..3 {
            xu += p(k, 1) * w1u[k];
            xuu += p(k, 1) * w2u[k];
            xv += p(1, k) * w1v[k];
            xvv += p(1, k) * w2v[k];
        }
        let mut xuv = Vec4::zeros();
        for a in 0..3 {
            let mut col_dv = Vec4::zeros();
            for b in 0..3 {
                col_dv += p(a, b) * w1v[b];
            }
            xuv += col_dv * w1u[a];
        }
        Ok(Jet2 {
            p: p(1, 1),
            xu,
            xv,
            xuu,
            xuv,
            xvv,
        })
    }

    /// First and second fundamental forms at a grid node, in the patch's
    /// normal orientation.
    pub fn fundamental_forms(&self, iu: usize, iv: usize) -> Result<(Matrix2<f64>, Matrix2<f64>)> {
        let jet = self.jet2(iu, iv)?;
        self.forms_of_jet(&jet)
    }

    fn forms_of_jet(&self, jet: &Jet2) -> Result<(Matrix2<f64>, Matrix2<f64>)> {
        match self.space {
            AmbientSpace::Euclidean3 | AmbientSpace::RoundSphere3 => {
                let i11 = jet.xu.dot(&jet.xu);
                let i12 = jet.xu.dot(&jet.xv);
                let i22 = jet.xv.dot(&jet.xv);
                let nu = self.normal_of_jet(jet)?;
                let ii = Matrix2::new(
                    jet.xuu.dot(&nu),
                    jet.xuv.dot(&nu),
                    jet.xuv.dot(&nu),
                    jet.xvv.dot(&nu),
                );
                Ok((Matrix2::new(i11, i12, i12, i22), ii))
            }
            AmbientSpace::CliffordChart => {
                let g = self.space.metric_at(jet.p)?;
                let gamma = self.space.christoffel(jet.p)?;
                let (xu, xv) = (jet.xu.xyz(), jet.xv.xyz());
                let i11 = (g * xu).dot(&xu);
                let i12 = (g * xu).dot(&xv);
                let i22 = (g * xv).dot(&xv);
                // Covariant second derivatives.
                let cov = |xab: Vec4, a: &Vec3, b: &Vec3| -> Vec3 {
                    let mut out = xab.xyz();
                    for k in 0..3 {
                        out[k] += (gamma[k] * *a).dot(b);
                    }
                    out
                };
                let cuu = cov(jet.xuu, &xu, &xu);
                let cuv = cov(jet.xuv, &xu, &xv);
                let cvv = cov(jet.xvv, &xv, &xv);
                let nu = self.normal_of_jet(jet)?.xyz();
                let gdot = |a: &Vec3| (g * *a).dot(&nu);
                let ii = Matrix2::new(gdot(&cuu), gdot(&cuv), gdot(&cuv), gdot(&cvv));
                Ok((Matrix2::new(i11, i12, i12, i22), ii))
            }
        }
    }

    fn normal_of_jet(&self, jet: &Jet2) -> Result<Vec4> {
        let n = match self.space {
            AmbientSpace::Euclidean3 => {
                let c = jet.xu.xyz().cross(&jet.xv.xyz());
                Vec4::new(c.x, c.y, c.z, 0.0)
            }
            AmbientSpace::RoundSphere3 => cross4(jet.p, jet.xu, jet.xv),
            AmbientSpace::CliffordChart => {
                let g = self.space.metric_at(jet.p)?;
                // Covector n_i = ε_ijk X_u^j X_v^k annihilates X_u, X_v;
                // raise the index with g⁻¹.
                let cov = jet.xu.xyz().cross(&jet.xv.xyz());
                let ginv = g.try_inverse().ok_or_else(|| {
                    Error::ChartDomain("metric not invertible inside chart guard".into())
                })?;
                let up = ginv * cov;
                let norm = (g * up).dot(&up).max(0.0).sqrt();
                if norm <= 1e-300 {
                    return Err(Error::DegenerateMesh(
                        "degenerate tangent plane on patch".into(),
                    ));
                }
                let up = up / norm;
                return Ok(Vec4::new(up.x, up.y, up.z, 0.0));
            }
        };
        let norm = n.norm();
        if norm <= 1e-300 {
            return Err(Error::DegenerateMesh(
                "degenerate tangent plane on patch".into(),
            ));
        }
        Ok(n / norm)
    }

    /// Unit normal at a grid node (chart components for CliffordChart).
    pub fn normal_at(&self, iu: usize, iv: usize) -> Result<Vec4> {
        let jet = self.jet2(iu, iv)?;
        self.normal_of_jet(&jet)
    }

    /// Mean curvature H = tr_I(II) at a grid node.
    pub fn mean_curvature(&self, iu: usize, iv: usize) -> Result<f64> {
        let (i, ii) = self.fundamental_forms(iu, iv)?;
        let det = i[(0, 0)] * i[(1, 1)] - i[(0, 1)] * i[(0, 1)];
        if det <= 0.0 {
            return Err(Error::DegenerateMesh(
                "first fundamental form is not positive definite".into(),
            ));
        }
        Ok((i[(1, 1)] * ii[(0, 0)] - 2.0 * i[(0, 1)] * ii[(0, 1)] + i[(0, 0)] * ii[(1, 1)]) / det)
    }

    /// Squared norm of the second fundamental form |A|² = tr((I⁻¹ II)²).
    pub fn second_form_sq(&self, iu: usize, iv: usize) -> Result<f64> {
        let (i, ii) = self.fundamental_forms(iu, iv)?;
        let det = i[(0, 0)] * i[(1, 1)] - i[(0, 1)] * i[(0, 1)];
        if det <= 0.0 {
            return Err(Error::DegenerateMesh(
                "first fundamental form is not positive definite".into(),
            ));
        }
        let iinv = Matrix2::new(i[(1, 1)], -i[(0, 1)], -i[(0, 1)], i[(0, 0)]) / det;
        let s = iinv * ii;
        Ok((s * s).trace())
    }

    /// Pullback of the round metric of S² under the Gauss map, via finite
    /// differences of the unit normal field (Euclidean ambient only):
    /// G_ab = ⟨ν_a, ν_b⟩. Needs a margin-2 stencil.
    pub fn gauss_pullback(&self, iu: usize, iv: usize) -> Result<Matrix2<f64>> {
        if self.space != AmbientSpace::Euclidean3 {
            return Err(Error::BadParameter(
                "Gauss-map pullback is defined for surfaces in Euclidean 3-space".into(),
            ));
        }
        let stencil_err = || {
            Error::BadParameter(format!(
                "Gauss-map stencil out of domain at node ({iu},{iv})"
            ))
        };
        let (um, ium) = self.u_neighbor(iu, -1).ok_or_else(stencil_err)?;
        let (up, iup) = self.u_neighbor(iu, 1).ok_or_else(stencil_err)?;
        let (vm, ivm) = self.v_neighbor(iv, -1).ok_or_else(stencil_err)?;
        let (vp, ivp) = self.v_neighbor(iv, 1).ok_or_else(stencil_err)?;
        let (w1u, _) = fd_weights(self.us[iu] - um, up - self.us[iu]);
        let (w1v, _) = fd_weights(self.vs[iv] - vm, vp - self.vs[iv]);
        let nu_at = |a: usize, b: usize| self.normal_at(a, b);
        let n_um = nu_at(ium, iv)?;
        let n_0 = nu_at(iu, iv)?;
        let n_up = nu_at(iup, iv)?;
        let n_vm = nu_at(iu, ivm)?;
        let n_vp = nu_at(iu, ivp)?;
        let nu_u = n_um * w1u[0] + n_0 * w1u[1] + n_up * w1u[2];
        let nu_v = n_vm * w1v[0] + n_0 * w1v[1] + n_vp * w1v[2];
        Ok(Matrix2::new(
            nu_u.dot(&nu_u),
            nu_u.dot(&nu_v),
            nu_u.dot(&nu_v),
            nu_v.dot(&nu_v),
        ))
    }

    /// Discrete Laplace–Beltrami of a grid function in the induced metric,
    /// via the flux form Δf = (1/√g) ∂_a(√g I^{ab} ∂_b f). Returns values
    /// and the mask of nodes where the nested stencil exists.
    pub fn laplace_beltrami(&self, f: &[f64]) -> Result<(Vec<f64>, Vec<bool>)> {
        let (nu_n, nv_n) = (self.nu(), self.nv());
        assert_eq!(f.len(), nu_n * nv_n);
        let mut flux1 = vec![f64::NAN; nu_n * nv_n];
        let mut flux2 = vec![f64::NAN; nu_n * nv_n];
        let mut sg = vec![f64::NAN; nu_n * nv_n];
        let mut valid1 = vec![false; nu_n * nv_n];
        for iu in 0..nu_n {
            for iv in 0..nv_n {
                if !self.has_stencil(iu, iv, 1) {
                    continue;
                }
                let (um, ium) = self.u_neighbor(iu, -1).unwrap();
                let (up, iup) = self.u_neighbor(iu, 1).unwrap();
                let (vm, ivm) = self.v_neighbor(iv, -1).unwrap();
                let (vp, ivp) = self.v_neighbor(iv, 1).unwrap();
                let (w1u, _) = fd_weights(self.us[iu] - um, up - self.us[iu]);
                let (w1v, _) = fd_weights(self.vs[iv] - vm, vp - self.vs[iv]);
                let fu = w1u[0] * f[ium * nv_n + iv]
                    + w1u[1] * f[iu * nv_n + iv]
                    + w1u[2] * f[iup * nv_n + iv];
                let fv = w1v[0] * f[iu * nv_n + ivm]
                    + w1v[1] * f[iu * nv_n + iv]
                    + w1v[2] * f[iu * nv_n + ivp];
                let (i_form, _) = self.fundamental_forms(iu, iv)?;
                let det = i_form[(0, 0)] * i_form[(1, 1)] - i_form[(0, 1)] * i_form[(0, 1)];
                if det <= 0.0 {
                    continue;
                }
                let root = det.sqrt();
                let inv11 = i_form[(1, 1)] / det;
                let inv12 = -i_form[(0, 1)] / det;
                let inv22 = i_form[(0, 0)] / det;
                let id = iu * nv_n + iv;
                flux1[id] = root * (inv11 * fu + inv12 * fv);
                flux2[id] = root * (inv12 * fu + inv22 * fv);
                sg[id] = root;
                valid1[id] = true;
            }
        }
        let mut out = vec![f64::NAN; nu_n * nv_n];
        let mut valid2 = vec![false; nu_n * nv_n];
        for iu in 0..nu_n {
            for iv in 0..nv_n {
                let id = iu * nv_n + iv;
                if !valid1[id] {
                    continue;
                }
                let (um, ium) = self.u_neighbor(iu, -1).unwrap();
                let (up, iup) = self.u_neighbor(iu, 1).unwrap();
                let (vm, ivm) = self.v_neighbor(iv, -1).unwrap();
                let (vp, ivp) = self.v_neighbor(iv, 1).unwrap();
                if !(valid1[ium * nv_n + iv]
                    && valid1[iup * nv_n + iv]
                    && valid1[iu * nv_n + ivm]
                    && valid1[iu * nv_n + ivp])
                {
                    continue;
                }
                let (w1u, _) = fd_weights(self.us[iu] - um, up - self.us[iu]);
                let (w1v, _) = fd_weights(self.vs[iv] - vm, vp - self.vs[iv]);
                let df1 = w1u[0] * flux1[ium * nv_n + iv]
                    + w1u[1] * flux1[id]
                    + w1u[2] * flux1[iup * nv_n + iv];
                let df2 = w1v[0] * flux2[iu * nv_n + ivm]
                    + w1v[1] * flux2[id]
                    + w1v[2] * flux2[iu * nv_n + ivp];
                out[id] = (df1 + df2) / sg[id];
                valid2[id] = true;
            }
        }
        Ok((out, valid2))
    }

    /// Exact mean curvature of the normal graph exp(f·ν) over this patch,
    /// decomposed as H_f = H + Lf + Q_f with L = Δ + |A|² + Ric(ν,ν) on the
    /// base and Q_f the (quadratic and higher) remainder.
    pub fn mean_curvature_of_graph(&self, f: &[f64]) -> Result<GraphDecomposition> {
        let (nu_n, nv_n) = (self.nu(), self.nv());
        if f.len() != nu_n * nv_n {
            return Err(Error::BadParameter(format!(
                "graph function has {} samples for a {}×{} grid",
                f.len(),
                nu_n,
                nv_n
            )));
        }
        // Graph patch: displace along the base normal with the ambient exp.
        let mut gpts = vec![Vec4::zeros(); nu_n * nv_n];
        let mut normal_ok = vec![false; nu_n * nv_n];
        for iu in 0..nu_n {
            for iv in 0..nv_n {
                let id = iu * nv_n + iv;
                if self.has_stencil(iu, iv, 1) {
                    let nu_vec = self.normal_at(iu, iv)?;
                    gpts[id] = self.space.exp_map(self.pt(iu, iv), nu_vec * f[id])?;
                    normal_ok[id] = true;
                } else {
                    gpts[id] = self.pt(iu, iv);
                }
            }
        }
        let graph = ParamPatch::new(
            self.space,
            self.us.clone(),
            self.vs.clone(),
            gpts,
            self.wrap_u,
            self.wrap_v,
            self.region,
        )?;
        let (lap, lap_valid) = self.laplace_beltrami(f)?;
        let ric = match self.space {
            AmbientSpace::Euclidean3 => 0.0,
            _ => 2.0,
        };
        let n = nu_n * nv_n;
        let mut out = GraphDecomposition {
            h_f: vec![f64::NAN; n],
            h: vec![f64::NAN; n],
            lf: vec![f64::NAN; n],
            qf: vec![f64::NAN; n],
            valid: vec![false; n],
        };
        for iu in 0..nu_n {
            for iv in 0..nv_n {
                let id = iu * nv_n + iv;
                if !lap_valid[id] || !normal_ok[id] {
                    continue;
                }
                // The graph's FD stencil must consist of displaced nodes.
                let stencil_displaced = |a: i64, b: i64| -> bool {
                    match (self.u_neighbor(iu, a), self.v_neighbor(iv, b)) {
                        (Some((_, ju)), Some((_, jv))) => normal_ok[ju * nv_n + jv],
                        _ => false,
                    }
                };
                let mut all_ok = true;
                for a in -1..=1 {
                    for b in -1..=1 {
                        all_ok &= stencil_displaced(a, b);
                    }
                }
                if !all_ok {
                    continue;
                }
                let hf = graph.mean_curvature(iu, iv)?;
                let h = self.mean_curvature(iu, iv)?;
                let a2 = self.second_form_sq(iu, iv)?;
                let lf = lap[id] + (a2 + ric) * f[id];
                out.h_f[id] = hf;
                out.h[id] = h;
                out.lf[id] = lf;
                out.qf[id] = hf - h - lf;
                out.valid[id] = true;
            }
        }
        Ok(out)
    }

    /// Per-node geometry report (mean curvature, |A|², Ricci, area element).
    /// Nodes without a full stencil copy their nearest computable neighbor;
    /// the returned mask marks the genuinely computed nodes.
    pub fn geom_report(&self) -> Result<(GeomReport, Vec<bool>)> {
        let (nu_n, nv_n) = (self.nu(), self.nv());
        let n = nu_n * nv_n;
        let mut h = vec![f64::NAN; n];
        let mut a2 = vec![f64::NAN; n];
        let mut area = vec![0.0; n];
        let mut mask = vec![false; n];
        let ric = match self.space {
            AmbientSpace::Euclidean3 => 0.0,
            _ => 2.0,
        };
        for iu in 0..nu_n {
            for iv in 0..nv_n {
                let id = iu * nv_n + iv;
                // Area weight: half-span cell times √det I (or a chordal
                // approximation at the rim).
                let du = match (self.u_neighbor(iu, -1), self.u_neighbor(iu, 1)) {
                    (Some((um, _)), Some((up, _))) => 0.5 * (up - um),
                    (None, Some((up, _))) => 0.5 * (up - self.us[iu]),
                    (Some((um, _)), None) => 0.5 * (self.us[iu] - um),
                    (None, None) => 0.0,
                };
                let dv = match (self.v_neighbor(iv, -1), self.v_neighbor(iv, 1)) {
                    (Some((vm, _)), Some((vp, _))) => 0.5 * (vp - vm),
                    (None, Some((vp, _))) => 0.5 * (vp - self.vs[iv]),
                    (Some((vm, _)), None) => 0.5 * (self.vs[iv] - vm),
                    (None, None) => 0.0,
                };
                if self.has_stencil(iu, iv, 1) {
                    h[id] = self.mean_curvature(iu, iv)?;
                    a2[id] = self.second_form_sq(iu, iv)?;
                    let (i_form, _) = self.fundamental_forms(iu, iv)?;
                    let det =
                        (i_form[(0, 0)] * i_form[(1, 1)] - i_form[(0, 1)] * i_form[(0, 1)]).max(0.0);
                    area[id] = det.sqrt() * du * dv;
                    mask[id] = true;
                } else {
                    area[id] = du * dv; // refined below by neighbor copy
                }
            }
        }
        // Fill rim values from the nearest computed node (grid diffusion).
        let mut changed = true;
        while changed {
            changed = false;
            for iu in 0..nu_n {
                for iv in 0..nv_n {
                    let id = iu * nv_n + iv;
                    if mask[id] || !h[id].is_nan() {
                        continue;
                    }
                    let neighbors = [
                        iu.checked_sub(1).map(|a| a * nv_n + iv),
                        (iu + 1 < nu_n).then(|| (iu + 1) * nv_n + iv),
                        iv.checked_sub(1).map(|b| iu * nv_n + b),
                        (iv + 1 < nv_n).then(|| iu * nv_n + iv + 1),
                    ];
                    for nb in neighbors.into_iter().flatten() {
                        if !h[nb].is_nan() {
                            h[id] = h[nb];
                            a2[id] = a2[nb];
                            changed = true;
                            break;
                        }
                    }
                }
            }
        }
        Ok((
            GeomReport {
                h,
                a2,
                ric: vec![ric; n],
                area,
                q_residual: None,
            },
            mask,
        ))
    }

    /// Triangulate into a [`SurfaceMesh`]. Chart-space patches are embedded
    /// into S³ (the mesh's space becomes RoundSphere3); periodic directions
    /// are stitched. Vertex normals come from the patch jets where the
    /// stencil exists, otherwise from area-weighted incident face normals.
    pub fn to_mesh(&self) -> Result<SurfaceMesh> {
        let (nu_n, nv_n) = (self.nu(), self.nv());
        let out_space = match self.space {
            AmbientSpace::CliffordChart => AmbientSpace::RoundSphere3,
            s => s,
        };
        let mut vertices = Vec::with_capacity(nu_n * nv_n);
        for p in &self.pts {
            vertices.push(self.space.embed_r4(*p)?);
        }
        let ucells = if self.wrap_u.is_some() { nu_n } else { nu_n - 1 };
        let vcells = if self.wrap_v.is_some() { nv_n } else { nv_n - 1 };
        let mut faces = Vec::with_capacity(2 * ucells * vcells);
        for cu in 0..ucells {
            for cv in 0..vcells {
                let a = (cu * nv_n + cv) as u32;
                let b = (((cu + 1) % nu_n) * nv_n + cv) as u32;
                let c = (((cu + 1) % nu_n) * nv_n + (cv + 1) % nv_n) as u32;
                let d = (cu * nv_n + (cv + 1) % nv_n) as u32;
                faces.push([a, b, c]);
                faces.push([a, c, d]);
            }
        }
        // Normals: patch jets where possible, face-average fallback at rims.
        let mut normals = vec![Vec4::zeros(); nu_n * nv_n];
        let mut have = vec![false; nu_n * nv_n];
        for iu in 0..nu_n {
            for iv in 0..nv_n {
                if self.has_stencil(iu, iv, 1) {
                    let id = self.idx(iu, iv);
                    let n_chart = self.normal_at(iu, iv)?;
                    normals[id] = self.space.embed_tangent_r4(self.pt(iu, iv), n_chart)?;
                    have[id] = true;
                }
            }
        }
        let face_normal = |f: &[u32; 3]| -> Vec4 {
            let p0 = vertices[f[0] as usize];
            let p1 = vertices[f[1] as usize];
            let p2 = vertices[f[2] as usize];
            match out_space {
                AmbientSpace::RoundSphere3 => {
                    let c = (p0 + p1 + p2).normalize();
                    cross4(c, p1 - p0, p2 - p0)
                }
                _ => {
                    let e1 = (p1 - p0).xyz();
                    let e2 = (p2 - p0).xyz();
                    let c = e1.cross(&e2);
                    Vec4::new(c.x, c.y, c.z, 0.0)
                }
            }
        };
        for f in &faces {
            let need = f.iter().any(|&v| !have[v as usize]);
            if !need {
                continue;
            }
            let fnorm = face_normal(f);
            for &v in f {
                if !have[v as usize] {
                    normals[v as usize] += fnorm; // area-weighted by |cross|
                }
            }
        }
        for (id, nrm) in normals.iter_mut().enumerate() {
            if !have[id] {
                if out_space == AmbientSpace::RoundSphere3 {
                    let p = vertices[id];
                    *nrm -= p * nrm.dot(&p);
                }
                let n = nrm.norm();
                if n <= 1e-300 {
                    return Err(Error::DegenerateMesh(format!(
                        "no usable normal at patch vertex {id}"
                    )));
                }
                *nrm /= n;
            }
        }
        let regions = vec![self.region; nu_n * nv_n];
        SurfaceMesh::new(out_space, vertices, faces, normals, regions)
    }
}
