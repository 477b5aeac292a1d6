//! Discrete differential geometry and analysis utilities.
//!
//! Submodules:
//! - [`seq`]: smooth cutoffs ψ[a,b], sequence-to-function smoothing Ψ, and
//!   the discrete ℓ^r_k norms with the difference operator ∂̸;
//! - [`patch`]: structured parametric patches with finite-difference
//!   fundamental forms, mean curvature, and the graph decomposition
//!   H_f = H + Lf + Q_f;
//! - [`mesh`]: triangle surface meshes with cotangent-Laplacian geometry
//!   (mean curvature, mixed Voronoi areas, second-fundamental-form
//!   magnitude by local quadric fits) and per-vertex geometry reports;
//! - [`jacobi`]: assembly of the Jacobi operator L = Δ + |A|² + Ric(ν,ν),
//!   small-eigenvalue solves, and weighted sup-norm surrogates.

pub mod jacobi;
pub mod mesh;
pub mod patch;
pub mod seq;

pub use jacobi::{
    assemble_conformal, assemble_jacobi, assemble_operator, eigen_small, weighted_sup_norm,
    EigenSolution,
    JacobiOperator,
};
pub use mesh::{GeomReport, RegionTag, SurfaceMesh};
pub use patch::{GraphDecomposition, ParamPatch};
pub use seq::{cutoff_psi, seq_norm, seq_norm_k, smooth_sequence, step_sequence, SeqData};

use crate::Vec4;

/// Generalized cross product in ℝ⁴: the unique vector orthogonal to
/// `a`, `b`, `c` with |result| = volume of the spanned parallelepiped,
/// oriented so that det[a, b, c, result] ≥ 0.
pub fn cross4(a: Vec4, b: Vec4, c: Vec4) -> Vec4 {
    // Cofactor expansion of det[a; b; c; e_i] along the last row.
    let m = |i: usize, j: usize, k: usize| -> f64 {
        a[i] * (b[j] * c[k] - b[k] * c[j]) - a[j] * (b[i] * c[k] - b[k] * c[i])
            + a[k] * (b[i] * c[j] - b[j] * c[i])
    };
    // e_i component carries sign (−1)^(3+i) from the expansion; chosen so
    // that det[a,b,c,n] = |n|² ≥ 0.
    Vec4::new(-m(1, 2, 3), m(0, 2, 3), -m(0, 1, 3), m(0, 1, 2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross4_orthogonal_and_oriented() {
        let a = Vec4::new(1.0, 2.0, -0.5, 0.3);
        let b = Vec4::new(0.0, 1.0, 1.0, -1.0);
        let c = Vec4::new(2.0, -1.0, 0.0, 0.7);
        let n = cross4(a, b, c);
        assert!(n.dot(&a).abs() < 1e-12);
        assert!(n.dot(&b).abs() < 1e-12);
        assert!(n.dot(&c).abs() < 1e-12);
        let det = nalgebra::Matrix4::from_columns(&[a, b, c, n]).determinant();
        assert!(det >= 0.0);
        // Canonical case: cross4(e1, e2, e3) = ±e4 with positive orientation.
        let e = cross4(
            Vec4::new(1.0, 0.0, 0.0, 0.0),
            Vec4::new(0.0, 1.0, 0.0, 0.0),
            Vec4::new(0.0, 0.0, 1.0, 0.0),
        );
        assert!((e - Vec4::new(0.0, 0.0, 0.0, 1.0)).norm() < 1e-15);
    }
}
