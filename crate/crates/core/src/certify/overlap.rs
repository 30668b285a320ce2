use crate::bits::{deposit, extract};
use crate::error::{Error, Result};
use crate::gates::{C64, ZERO};
use crate::shadows::{basis_rotation, Setting, ShadowRecord, ShadowSet};
use crate::sim::StateVector;
use rayon::prelude::*;

/// Shots allowed to hit a zero-probability branch before the data is rejected.
pub const ZERO_BRANCH_TOLERANCE: f64 = 1e-3;

/// Normalized conditional state `|Ψ_{z_k}⟩` on the qubits of `k`.
///
/// Bits of `outcome` on `k` are ignored; local index bit `j` is qubit `k[j]`.
pub fn conditional_state(psi: &StateVector, k: &[usize], outcome: u64) -> Result<Vec<C64>> {
    let mask = deposit((1 << k.len()) - 1, k);
    let rest = outcome as usize & !mask;
    let mut v: Vec<C64> = (0..1usize << k.len()).map(|l| psi.amplitude(rest | deposit(l, k))).collect();
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>();
    if norm == 0.0 {
        return Err(Error::ZeroBranch);
    }
    let s = norm.sqrt();
    v.iter_mut().for_each(|a| *a /= s);
    Ok(v)
}

/// `⟨Ψ_{z_k}| ⊗_i (3|s_i⟩⟨s_i| − I) |Ψ_{z_k}⟩`.
pub fn omega_pauli(k: &[usize], bases: &[char], outcome: u64, psi: &StateVector) -> Result<f64> {
    let phi = conditional_state(psi, k, outcome)?;
    let mut w = phi.clone();
    for (j, (&q, &b)) in k.iter().zip(bases).enumerate() {
        let s = basis_rotation(b).adjoint().column((outcome >> q & 1) as usize).clone_owned();
        let stride = 1usize << j;
        for base in (0..w.len()).step_by(2 * stride) {
            for i in base..base + stride {
                let (x, y) = (w[i], w[i + stride]);
                let p = s[0].conj() * x + s[1].conj() * y;
                w[i] = s[0] * p * 3.0 - x;
                w[i + stride] = s[1] * p * 3.0 - y;
            }
        }
    }
    Ok(phi.iter().zip(&w).map(|(a, b)| a.conj() * b).sum::<C64>().re)
}

/// `(2^m + 1)|⟨b|U|Ψ_{z_k}⟩|² − 1`.
pub fn omega_clifford(k: &[usize], u: &crate::sim::CliffordOp, outcome: u64, psi: &StateVector) -> Result<f64> {
    let phi = conditional_state(psi, k, outcome)?;
    let b = extract(outcome as usize, k);
    let row = u.dense()?.row(b);
    let amp: C64 = row.iter().zip(&phi).map(|(r, p)| r * p).fold(ZERO, |a, x| a + x);
    Ok(((1u64 << k.len()) + 1) as f64 * amp.norm_sqr() - 1.0)
}

pub fn omega(rec: &ShadowRecord, psi: &StateVector) -> Result<f64> {
    match &rec.setting {
        Setting::Pauli(b) => omega_pauli(&rec.subset, b, rec.outcome, psi),
        Setting::Clifford(u) => omega_clifford(&rec.subset, u, rec.outcome, psi),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OverlapEstimate {
    pub omega_hat: f64,
    pub per_shot: Vec<f64>,
    pub t: usize,
    pub variance_hat: f64,
    /// Shots dropped on zero-probability branches.
    pub skipped: usize,
}

impl OverlapEstimate {
    pub fn from_samples(per_shot: Vec<f64>, skipped: usize) -> Self {
        let t = per_shot.len();
        let mean = per_shot.iter().sum::<f64>() / t as f64;
        let var = if t > 1 { per_shot.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (t - 1) as f64 } else { 0.0 };
        OverlapEstimate { omega_hat: mean, per_shot, t, variance_hat: var, skipped }
    }

    pub fn stderr(&self) -> f64 {
        (self.variance_hat / self.t as f64).sqrt()
    }
}

/// Mean shadow overlap of `shadows` against the hypothesis `psi`.
pub fn estimate(shadows: &ShadowSet, psi: &StateVector) -> Result<OverlapEstimate> {
    if shadows.n != psi.n() {
        return Err(Error::Structure(format!("shadows on {} qubits, hypothesis on {}", shadows.n, psi.n())));
    }
    if shadows.is_empty() {
        return Err(Error::Data("empty shadow set".into()));
    }
    let vals: Vec<Option<f64>> = shadows
        .records
        .par_iter()
        .map(|r| match omega(r, psi) {
            Ok(w) => Ok(Some(w)),
            Err(Error::ZeroBranch) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let skipped = vals.iter().filter(|v| v.is_none()).count();
    if skipped as f64 >= ZERO_BRANCH_TOLERANCE * vals.len() as f64 && skipped > 0 {
        return Err(Error::Data(format!("{skipped} of {} shots landed on zero-probability branches", vals.len())));
    }
    Ok(OverlapEstimate::from_samples(vals.into_iter().flatten().collect(), skipped))
}
