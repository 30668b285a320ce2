use crate::bits::deposit;
use crate::error::{Error, Result};
use crate::gates::{Mat, C64};
use crate::sim::{check_cap, StateVector};

/// Default qubit cap for dense L and its spectrum.
pub const SPECTRAL_CAP: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Improved,
    Baseline,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarkovAnalysis {
    pub tau: f64,
    pub lambda2: f64,
    pub spectrum_size: usize,
}

/// All `m`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(m);
    fn rec(start: usize, n: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for q in start..=n - (m - cur.len()) {
            cur.push(q);
            rec(q + 1, n, m, cur, out);
            cur.pop();
        }
    }
    rec(0, n, m, &mut cur, &mut out);
    out
}

pub fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn check_args(psi: &StateVector, m: usize) -> Result<()> {
    check_cap(psi.n(), SPECTRAL_CAP)?;
    if m == 0 || m > psi.n() {
        return Err(Error::Config(format!("level m={m} outside 1..={}", psi.n())));
    }
    Ok(())
}

/// Add `|v⟩⟨v| / norm` on the coordinates `idx`.
fn add_projector(l: &mut Mat, idx: &[usize], v: &[C64], norm: f64, weight: f64) {
    let s = weight / norm;
    for (i, &x) in idx.iter().enumerate() {
        if v[i].norm_sqr() == 0.0 {
            continue;
        }
        let a = v[i] * s;
        for (j, &y) in idx.iter().enumerate() {
            l[(x, y)] += a * v[j].conj();
        }
    }
}

/// `L = C(n,m)^{-1} Σ_k Σ_{z_k} |z_k⟩⟨z_k| ⊗ |Ψ_{z_k}⟩⟨Ψ_{z_k}|`.
pub fn build_l(psi: &StateVector, m: usize) -> Result<Mat> {
    check_args(psi, m)?;
    let n = psi.n();
    let dim = 1usize << n;
    let mut l = Mat::zeros(dim, dim);
    let w = 1.0 / binomial(n, m);
    for k in subsets(n, m) {
        let offsets: Vec<usize> = (0..1usize << m).map(|j| deposit(j, &k)).collect();
        let mask = offsets[offsets.len() - 1];
        for rest in (0..dim).filter(|x| x & mask == 0) {
            let idx: Vec<usize> = offsets.iter().map(|o| rest | o).collect();
            let v: Vec<C64> = idx.iter().map(|&x| psi.amplitude(x)).collect();
            let p: f64 = v.iter().map(|a| a.norm_sqr()).sum();
            if p > 0.0 {
                add_projector(&mut l, &idx, &v, p, w);
            }
        }
    }
    Ok(l)
}

/// Pair-based L summed over levels `1..=m`, normalized by `Σ_r C(n,r)`.
pub fn build_l_baseline(psi: &StateVector, m: usize) -> Result<Mat> {
    check_args(psi, m)?;
    let n = psi.n();
    let dim = 1usize << n;
    let mut l = Mat::zeros(dim, dim);
    let norm: f64 = (1..=m).map(|r| binomial(n, r)).sum();
    for r in 1..=m {
        for k in subsets(n, r) {
            let full = (1usize << r) - 1;
            let mask = deposit(full, &k);
            for rest in (0..dim).filter(|x| x & mask == 0) {
                // Each unordered complementary pair {ℓ, ℓ̄} once, keyed by ℓ with the top bit clear.
                for l1 in 0..1usize << (r - 1) {
                    let idx = [rest | deposit(l1, &k), rest | deposit(full ^ l1, &k)];
                    let v = [psi.amplitude(idx[0]), psi.amplitude(idx[1])];
                    let p = v[0].norm_sqr() + v[1].norm_sqr();
                    if p > 0.0 {
                        add_projector(&mut l, &idx, &v, p, 1.0 / norm);
                    }
                }
            }
        }
    }
    Ok(l)
}

/// Eigenvalues of a Hermitian matrix in descending order.
pub fn hermitian_spectrum(l: &Mat) -> Vec<f64> {
    let mut ev: Vec<f64> = l.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

pub fn analyze(l: &Mat) -> Result<MarkovAnalysis> {
    let ev = hermitian_spectrum(l);
    if (ev[0] - 1.0).abs() > 1e-8 {
        return Err(Error::Structure(format!("top eigenvalue of L is {} instead of 1", ev[0])));
    }
    let lambda2 = ev.get(1).copied().unwrap_or(0.0);
    if lambda2 >= 1.0 - 1e-12 {
        return Err(Error::InfiniteTau(lambda2));
    }
    Ok(MarkovAnalysis { tau: 1.0 / (1.0 - lambda2), lambda2, spectrum_size: ev.len() })
}

pub fn relaxation_time(psi: &StateVector, m: usize, variant: Variant) -> Result<MarkovAnalysis> {
    let l = match variant {
        Variant::Improved => build_l(psi, m)?,
        Variant::Baseline => build_l_baseline(psi, m)?,
    };
    analyze(&l)
}

/// `tr(Lρ)` for `ρ = (1−e)|φ⟩⟨φ| + e I/2^n`.
pub fn expected_overlap(l: &Mat, phi: &StateVector, e: f64) -> f64 {
    let v = nalgebra::DVector::from_column_slice(phi.amplitudes());
    let pure = (v.adjoint() * l * &v)[(0, 0)].re;
    (1.0 - e) * pure + e * l.trace().re / l.nrows() as f64
}
