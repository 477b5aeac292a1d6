//! Smooth cutoffs, sequence smoothing, and discrete sequence norms.
//!
//! - [`cutoff_psi`]: the two-point cutoff ψ[a,b], built from a fixed smooth
//!   nondecreasing transition ψ with ψ ≡ 0 on (−∞,−1], ψ ≡ 1 on [1,∞) and
//!   ψ − ½ odd, composed with the affine map taking (a,b) to (−3,3). The
//!   complement identity ψ[a,b] + ψ[b,a] = 1 holds bit-exactly.
//! - [`SeqData`] and [`smooth_sequence`]/[`step_sequence`]: periodic
//!   parameter sequences v_q and their conversion to functions on ℝ —
//!   plateaus of width π−2 with smooth blends of width 2 between
//!   consecutive values, or the plain step function.
//! - [`seq_norm`]/[`seq_norm_k`]: the discrete norms
//!   ‖v‖_{ℓ^r} = (ℓ_j/m_j · Σ_q |v_q|^r)^{1/r} (max for r = ∞) and their
//!   derivative-augmented versions using the scaled difference operator
//!   ∂̸v = {τ⁻¹(v_{q+1} − v_q)}.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// The fixed smooth transition: ψ(s) = ½(1 + sign(s)·G(|s|)) with
/// G(t) = tanh(t/(1−t²)) for t < 1 and G ≡ 1 for t ≥ 1. C∞, nondecreasing,
/// ψ − ½ exactly odd (bit-level, via the sign/|s| split).
fn transition(s: f64) -> f64 {
    let t = s.abs();
    let g = if t >= 1.0 {
        1.0
    } else {
        (t / (1.0 - t * t)).tanh()
    };
    0.5 * (1.0 + s.signum() * g)
}

/// Two-point cutoff ψ[a,b]: 0 near `a`, 1 near `b`, weakly monotone between,
/// transitioning on the middle third of [a,b]. Defined for a > b as well
/// (then it is 1 near b and 0 near a, i.e. decreasing in t).
///
/// The exact identity ψ[a,b](t) + ψ[b,a](t) = 1 holds for every t.
pub fn cutoff_psi(a: f64, b: f64, t: f64) -> Result<f64> {
    if a == b {
        return Err(Error::BadParameter(format!(
            "cutoff ψ[a,b] requires a ≠ b (got a = b = {a})"
        )));
    }
    // Affine L with L(a) = −3, L(b) = 3: L(t) = 6(t − (a+b)/2)/(b−a).
    // Computed so that swapping a and b negates L exactly.
    let s = (6.0 * (t - 0.5 * (a + b))) / (b - a);
    Ok(transition(s))
}

/// A periodic sequence of values v_q ∈ ℝ^dim, q ∈ ℤ/m, attached to a circle
/// of length `len`. Indexing wraps, so the periodicity invariant
/// v_{q+m} = v_q holds exactly by construction.
#[derive(Clone, Debug)]
pub struct SeqData {
    /// Value-space dimension (components per entry).
    pub dim: usize,
    /// m·dim values, entry q at vals[q*dim .. (q+1)*dim].
    pub vals: Vec<f64>,
    /// Circle length ℓ_j carried by the norms.
    pub len: f64,
    /// Step of the discrete derivative ∂̸ (the small parameter τ; by
    /// convention 1/m unless configured otherwise).
    pub tau: f64,
}

impl SeqData {
    /// Scalar sequence with the default derivative step τ = 1/m.
    pub fn scalar(vals: Vec<f64>, len: f64) -> Result<SeqData> {
        let m = vals.len();
        SeqData::new(1, vals, len, 1.0 / m as f64)
    }

    pub fn new(dim: usize, vals: Vec<f64>, len: f64, tau: f64) -> Result<SeqData> {
        if dim == 0 || vals.is_empty() || vals.len() % dim != 0 {
            return Err(Error::BadParameter(format!(
                "sequence data of length {} is not divisible into dim-{dim} entries",
                vals.len()
            )));
        }
        if !(len > 0.0) || !(tau > 0.0) {
            return Err(Error::BadParameter(
                "sequence circle length and τ must be positive".into(),
            ));
        }
        Ok(SeqData {
            dim,
            vals,
            len,
            tau,
        })
    }

    /// Number of entries m.
    pub fn m(&self) -> usize {
        self.vals.len() / self.dim
    }

    /// Entry q (wrapped modulo m).
    pub fn entry(&self, q: i64) -> &[f64] {
        let m = self.m() as i64;
        let q = q.rem_euclid(m) as usize;
        &self.vals[q * self.dim..(q + 1) * self.dim]
    }

    /// Euclidean norm of entry q.
    pub fn entry_norm(&self, q: i64) -> f64 {
        self.entry(q).iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// The scaled difference sequence ∂̸v = {τ⁻¹(v_{q+1} − v_q)} — exactly
    /// linear in v, same shape and τ.
    pub fn difference(&self) -> SeqData {
        let m = self.m();
        let mut vals = Vec::with_capacity(self.vals.len());
        for q in 0..m as i64 {
            let a = self.entry(q);
            let b = self.entry(q + 1);
            vals.extend(a.iter().zip(b).map(|(x, y)| (y - x) / self.tau));
        }
        SeqData {
            dim: self.dim,
            vals,
            len: self.len,
            tau: self.tau,
        }
    }
}

/// Smooth interpolant Ψv of a periodic sequence: equals v_q on
/// [qπ+1, (q+1)π−1] and blends between v_q and v_{q+1} on
/// [(q+1)π−1, (q+1)π+1] with the cutoff ψ[(q+1)π−1, (q+1)π+1].
/// C∞, bounded by max_q |v_q| componentwise, periodic with period mπ.
pub fn smooth_sequence(v: &SeqData, t: f64) -> Vec<f64> {
    let q0 = (t / PI).floor();
    let (blend, qa) = if t <= q0 * PI + 1.0 {
        // Still in the blend zone around qπ: from v_{q0−1} to v_{q0}.
        (q0 * PI, q0 as i64 - 1)
    } else if t >= (q0 + 1.0) * PI - 1.0 {
        ((q0 + 1.0) * PI, q0 as i64)
    } else {
        // Plateau.
        return v.entry(q0 as i64).to_vec();
    };
    let w = cutoff_psi(blend - 1.0, blend + 1.0, t).expect("blend endpoints distinct");
    let a = v.entry(qa);
    let b = v.entry(qa + 1);
    a.iter().zip(b).map(|(x, y)| x + w * (y - x)).collect()
}

/// Step interpolant Ψ₀v: the piecewise-constant function equal to v_q on
/// (qπ, (q+1)π].
pub fn step_sequence(v: &SeqData, t: f64) -> Vec<f64> {
    // t ∈ (qπ, (q+1)π] ⇔ q = ceil(t/π) − 1.
    let q = (t / PI).ceil() as i64 - 1;
    v.entry(q).to_vec()
}

/// Discrete norm ‖v‖_{ℓ^r} = (ℓ_j/m_j · Σ_q |v_q|^r)^{1/r}, with the max
/// norm for r = ∞ (pass `f64::INFINITY`). |v_q| is the Euclidean norm of
/// the entry. Requires r ≥ 1.
pub fn seq_norm(v: &SeqData, r: f64) -> Result<f64> {
    if r < 1.0 {
        return Err(Error::BadParameter(format!("ℓ^r norm needs r ≥ 1, got {r}")));
    }
    let m = v.m();
    if r.is_infinite() {
        return Ok((0..m as i64).map(|q| v.entry_norm(q)).fold(0.0, f64::max));
    }
    let s: f64 = (0..m as i64).map(|q| v.entry_norm(q).powf(r)).sum();
    Ok((v.len / m as f64 * s).powf(1.0 / r))
}

/// Derivative-augmented norm ‖v‖_{ℓ^r_k} = Σ_{k' ≤ k} ‖∂̸^{k'} v‖_{ℓ^r}.
pub fn seq_norm_k(v: &SeqData, r: f64, k: usize) -> Result<f64> {
    let mut total = 0.0;
    let mut cur = v.clone();
    for step in 0..=k {
        total += seq_norm(&cur, r)?;
        if step < k {
            cur = cur.difference();
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cutoff_endpoint_values() {
        // ψ[0,1] is 1 at b = 1 and 0 at a = 0 (saturated zones), and exactly
        // ½ at the midpoint by the odd symmetry of ψ − ½.
        assert_eq!(cutoff_psi(0.0, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(cutoff_psi(0.0, 1.0, 0.0).unwrap(), 0.0);
        assert_eq!(cutoff_psi(0.0, 1.0, 0.5).unwrap(), 0.5);
        // Saturation covers a full neighborhood (outer thirds).
        assert_eq!(cutoff_psi(0.0, 1.0, 0.16).unwrap(), 0.0);
        assert_eq!(cutoff_psi(0.0, 1.0, 0.84).unwrap(), 1.0);
        // Degenerate interval is rejected.
        assert!(cutoff_psi(2.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn cutoff_monotone_and_smoothish() {
        // Weak monotonicity on a fine sweep, and continuity of the numeric
        // derivative at the saturation joints (C∞ transition).
        let mut prev = -1.0;
        for i in 0..=10_000 {
            let t = -0.2 + 1.4 * i as f64 / 10_000.0;
            let w = cutoff_psi(0.0, 1.0, t).unwrap();
            assert!(w + 1e-15 >= prev, "not monotone at t={t}");
            assert!((0.0..=1.0).contains(&w));
            prev = w;
        }
        // Decreasing variant: a > b.
        assert_eq!(cutoff_psi(1.0, 0.0, 0.0).unwrap(), 1.0);
        assert_eq!(cutoff_psi(1.0, 0.0, 1.0).unwrap(), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]

        #[test]
        fn prop_cutoff_complement_identity(a in -10.0..10.0f64,
                                           d in 0.01..10.0f64,
                                           t in -20.0..20.0f64) {
            // ψ[a,b] + ψ[b,a] = 1, exactly.
            let b = a + d;
            let s = cutoff_psi(a, b, t).unwrap() + cutoff_psi(b, a, t).unwrap();
            prop_assert_eq!(s, 1.0);
        }
    }

    #[test]
    fn smooth_sequence_constant_and_plateaus() {
        // Constant sequences smooth to the constant everywhere.
        let v = SeqData::scalar(vec![3.5; 7], 2.0 * PI).unwrap();
        for i in 0..200 {
            let t = -10.0 + 0.1 * i as f64;
            assert_eq!(smooth_sequence(&v, t)[0], 3.5);
        }
        // Alternating sequence: plateau centers hit entries exactly.
        let v = SeqData::scalar(vec![0.0, 1.0, 0.0, 1.0], 2.0 * PI).unwrap();
        for q in -4i64..8 {
            let t = q as f64 * PI + PI / 2.0;
            let want = v.entry(q)[0];
            assert_eq!(smooth_sequence(&v, t)[0], want);
        }
    }

    #[test]
    fn smooth_sequence_bounded_and_periodic() {
        // Max principle: |Ψv| ≤ max|v_q| on a dense sample; period mπ.
        let vals: Vec<f64> = vec![0.3, -1.7, 0.9, 2.1, -0.4];
        let vmax = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let v = SeqData::scalar(vals, 1.0).unwrap();
        let m = v.m() as f64;
        for i in 0..5000 {
            let t = -5.0 + 30.0 * i as f64 / 5000.0;
            let y = smooth_sequence(&v, t)[0];
            assert!(y.abs() <= vmax + 1e-14);
            let y2 = smooth_sequence(&v, t + m * PI)[0];
            assert!((y - y2).abs() < 1e-13);
        }
        // Step variant: right-open plateau convention Ψ₀v = v_q on (qπ,(q+1)π].
        assert_eq!(step_sequence(&v, PI)[0], v.entry(0)[0]);
        assert_eq!(step_sequence(&v, PI + 1e-9)[0], v.entry(1)[0]);
    }

    #[test]
    fn seq_norm_examples() {
        // All-ones sequence: ‖1‖_{ℓ^r} = ℓ^{1/r} for any finite r.
        let l = 3.7;
        let v = SeqData::scalar(vec![1.0; 12], l).unwrap();
        for r in [1.0, 2.0, 3.5, 7.0] {
            assert!((seq_norm(&v, r).unwrap() - l.powf(1.0 / r)).abs() < 1e-14);
        }
        assert_eq!(seq_norm(&v, f64::INFINITY).unwrap(), 1.0);
        // Constant sequence: the k = 1 norm equals the k = 0 norm (∂̸ = 0).
        let c = SeqData::scalar(vec![2.5; 9], l).unwrap();
        assert_eq!(
            seq_norm_k(&c, 2.0, 1).unwrap(),
            seq_norm_k(&c, 2.0, 0).unwrap()
        );
        // r < 1 rejected.
        assert!(seq_norm(&v, 0.5).is_err());
    }

    #[test]
    fn seq_norm_riemann_oracle() {
        // v_q = sin(2πq/m): ‖v‖_{ℓ²} → (ℓ/2)^{1/2} as m → ∞ (Riemann sum of
        // ∫ sin² over a period).
        let l = 2.0 * PI;
        for m in [16usize, 64, 256] {
            let vals: Vec<f64> = (0..m)
                .map(|q| (2.0 * PI * q as f64 / m as f64).sin())
                .collect();
            let v = SeqData::scalar(vals, l).unwrap();
            let got = seq_norm(&v, 2.0).unwrap();
            let want = (l / 2.0).sqrt();
            assert!(
                (got - want).abs() < 1e-12,
                "m={m}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn difference_linear_exactly() {
        // ∂̸(au + bv) = a·∂̸u + b·∂̸v with exact floating-point equality of
        // the combined expressions.
        let u = SeqData::scalar(vec![1.0, -2.0, 0.5, 3.0], 1.0).unwrap();
        let v = SeqData::scalar(vec![0.25, 4.0, -1.0, 2.0], 1.0).unwrap();
        let (a, b) = (2.0, -0.5);
        let comb_vals: Vec<f64> = u
            .vals
            .iter()
            .zip(&v.vals)
            .map(|(x, y)| a * x + b * y)
            .collect();
        let comb = SeqData::scalar(comb_vals, 1.0).unwrap();
        let lhs = comb.difference();
        let du = u.difference();
        let dv = v.difference();
        for q in 0..4 {
            let rhs = a * du.vals[q] + b * dv.vals[q];
            assert_eq!(lhs.vals[q], rhs);
        }
        // ∂̸ of a constant vanishes identically.
        let c = SeqData::scalar(vec![7.7; 5], 1.0).unwrap();
        assert!(c.difference().vals.iter().all(|&x| x == 0.0));
    }
}
