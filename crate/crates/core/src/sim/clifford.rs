//! Clifford operators as symplectic tableaux with phase bits.
//!
//! Row `j < m` is the image of `X_j`, row `m + j` the image of `Z_j`.
//! Columns `0..m` hold x-bits and `m..2m` z-bits; a row `(x, z, r)` denotes
//! `(-1)^r · i^{x·z} X^x Z^z`, so `x = z = 1` on one qubit is `Y`.

use crate::error::{Error, Result};
use crate::gf2::BitMatrix;
use crate::gates::{Mat, C64, I, ONE, ZERO};
use rand::Rng;
use std::sync::OnceLock;

pub const DENSE_MAX_QUBITS: usize = 6;

#[derive(Clone, Debug)]
pub struct CliffordOp {
    m: usize,
    table: BitMatrix,
    phases: Vec<bool>,
    dense: OnceLock<Mat>,
}

impl PartialEq for CliffordOp {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m && self.table == other.table && self.phases == other.phases
    }
}

impl CliffordOp {
    pub fn from_parts(table: BitMatrix, phases: Vec<bool>) -> Result<Self> {
        let m = table.rows() / 2;
        if table.rows() != 2 * m || table.cols() != 2 * m || phases.len() != 2 * m {
            return Err(Error::Structure("tableau must be 2m x 2m with 2m phase bits".into()));
        }
        let op = CliffordOp { m, table, phases, dense: OnceLock::new() };
        if !op.is_symplectic() {
            return Err(Error::Structure("tableau is not symplectic".into()));
        }
        Ok(op)
    }

    pub fn identity(m: usize) -> Self {
        CliffordOp { m, table: BitMatrix::identity(2 * m), phases: vec![false; 2 * m], dense: OnceLock::new() }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn table(&self) -> &BitMatrix {
        &self.table
    }

    pub fn phases(&self) -> &[bool] {
        &self.phases
    }

    pub fn is_symplectic(&self) -> bool {
        let m = self.m;
        (0..2 * m).all(|a| {
            (0..2 * m).all(|b| {
                let w = (0..m)
                    .filter(|&j| {
                        (self.table.get(a, j) && self.table.get(b, m + j)) ^ (self.table.get(a, m + j) && self.table.get(b, j))
                    })
                    .count();
                (w % 2 == 1) == (a != b && a % m == b % m)
            })
        })
    }

    /// Tableau bits row-major followed by phase bits.
    pub fn to_bits(&self) -> String {
        let n = 2 * self.m;
        let mut s = String::with_capacity(n * n + n);
        for r in 0..n {
            s.extend(self.table.row(r).iter().map(|&b| if b { '1' } else { '0' }));
        }
        s.extend(self.phases.iter().map(|&b| if b { '1' } else { '0' }));
        s
    }

    pub fn from_bits(m: usize, s: &str) -> Result<Self> {
        let n = 2 * m;
        let bits: Vec<bool> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Structure(format!("bad tableau character {c:?}"))),
            })
            .collect::<Result<_>>()?;
        if bits.len() != n * n + n {
            return Err(Error::Structure(format!("tableau for m={m} needs {} bits, got {}", n * n + n, bits.len())));
        }
        let rows: Vec<Vec<bool>> = bits[..n * n].chunks(n).map(<[bool]>::to_vec).collect();
        Self::from_parts(BitMatrix::from_rows(&rows), bits[n * n..].to_vec())
    }

    /// Apply the signed Pauli of tableau row `r` to a dense vector.
    fn apply_row(&self, r: usize, v: &[C64]) -> Vec<C64> {
        let m = self.m;
        let (mut x, mut z) = (0usize, 0usize);
        for j in 0..m {
            x |= (self.table.get(r, j) as usize) << j;
            z |= (self.table.get(r, m + j) as usize) << j;
        }
        let mut coef = match (x & z).count_ones() % 4 {
            0 => ONE,
            1 => I,
            2 => -ONE,
            _ => -I,
        };
        if self.phases[r] {
            coef = -coef;
        }
        let mut out = vec![ZERO; v.len()];
        for (y, a) in v.iter().enumerate() {
            let sign = if (z & y).count_ones() % 2 == 1 { -coef } else { coef };
            out[y ^ x] = sign * a;
        }
        out
    }

    /// Dense unitary (fixed up to a global phase), cached after first use.
    pub fn dense(&self) -> Result<&Mat> {
        if self.m > DENSE_MAX_QUBITS {
            return Err(Error::Resource(format!("dense Clifford for m={} exceeds {DENSE_MAX_QUBITS}", self.m)));
        }
        Ok(self.dense.get_or_init(|| self.build_dense()))
    }

    fn build_dense(&self) -> Mat {
        let (m, dim) = (self.m, 1usize << self.m);
        let project = |mut v: Vec<C64>| {
            for j in 0..m {
                let w = self.apply_row(m + j, &v);
                v = v.iter().zip(&w).map(|(a, b)| (a + b) * 0.5).collect();
            }
            v
        };
        let u0 = (0..dim)
            .map(|y| {
                let mut e = vec![ZERO; dim];
                e[y] = ONE;
                project(e)
            })
            .find(|v| v.iter().map(|a| a.norm_sqr()).sum::<f64>() > 1e-6)
            .expect("stabilizer generators define a state");
        let norm = u0.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let u0: Vec<C64> = u0.iter().map(|a| a / norm).collect();
        let mut u = Mat::zeros(dim, dim);
        for x in 0..dim {
            let mut col = u0.clone();
            for j in 0..m {
                if x >> j & 1 == 1 {
                    col = self.apply_row(j, &col);
                }
            }
            for (r, a) in col.into_iter().enumerate() {
                u[(r, x)] = a;
            }
        }
        u
    }
}

fn sample_qmallows<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (Vec<bool>, Vec<usize>) {
    let mut had = vec![false; n];
    let mut perm = vec![0; n];
    let mut inds: Vec<usize> = (0..n).collect();
    for i in 0..n {
        let m = n - i;
        let eps = 4f64.powi(-(m as i32));
        let r: f64 = rng.gen();
        let index = (-(r + (1.0 - r) * eps).log2().ceil()) as usize;
        had[i] = index < m;
        let k = if index < m { index } else { 2 * m - index - 1 };
        perm[i] = inds.remove(k);
    }
    (had, perm)
}

fn fill_tril<R: Rng + ?Sized>(mat: &mut BitMatrix, rng: &mut R, symmetric: bool) {
    for i in 0..mat.rows() {
        for j in 0..i {
            let b: bool = rng.gen();
            mat.set(i, j, b);
            if symmetric {
                mat.set(j, i, b);
            }
        }
    }
}

fn block(a: &BitMatrix, b: &BitMatrix, c: &BitMatrix, d: &BitMatrix) -> BitMatrix {
    let n = a.rows();
    let mut out = BitMatrix::zeros(2 * n, 2 * n);
    for (blk, (ro, co)) in [(a, (0, 0)), (b, (0, n)), (c, (n, 0)), (d, (n, n))] {
        for i in 0..n {
            for j in 0..n {
                out.set(ro + i, co + j, blk.get(i, j));
            }
        }
    }
    out
}

/// Uniformly random Clifford via the Bravyi–Maslov canonical form.
pub fn random_clifford<R: Rng + ?Sized>(m: usize, rng: &mut R) -> CliffordOp {
    let (had, perm) = sample_qmallows(m, rng);
    let mut gammas = Vec::new();
    for _ in 0..2 {
        let mut g = BitMatrix::zeros(m, m);
        for i in 0..m {
            g.set(i, i, rng.gen());
        }
        fill_tril(&mut g, rng, true);
        gammas.push(g);
    }
    let mut deltas = Vec::new();
    for _ in 0..2 {
        let mut d = BitMatrix::identity(m);
        fill_tril(&mut d, rng, false);
        deltas.push(d);
    }
    let zero = BitMatrix::zeros(m, m);
    let tables: Vec<BitMatrix> = (0..2)
        .map(|i| {
            let prod = gammas[i].mul(&deltas[i]);
            let inv = deltas[i].inverse().expect("unit triangular").transpose();
            block(&deltas[i], &zero, &prod, &inv)
        })
        .collect();
    let mut table = BitMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        for c in 0..2 * m {
            table.set(i, c, tables[1].get(perm[i], c));
            table.set(m + i, c, tables[1].get(m + perm[i], c));
        }
    }
    for i in (0..m).filter(|&i| had[i]) {
        table.swap_rows(i, m + i);
    }
    let symp = tables[0].mul(&table);
    let phases = (0..2 * m).map(|_| rng.gen()).collect();
    CliffordOp { m, table: symp, phases, dense: OnceLock::new() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{self, pauli_string};
    use crate::rng::Stream;

    fn row_pauli(op: &CliffordOp, r: usize) -> Mat {
        let m = op.m();
        let dim = 1 << m;
        Mat::from_fn(dim, dim, |i, j| {
            let mut e = vec![ZERO; dim];
            e[j] = ONE;
            op.apply_row(r, &e)[i]
        })
    }

    #[test]
    fn dense_conjugates_paulis_per_tableau() {
        let mut rng = Stream::new(4).rng();
        for m in 1..=3 {
            for _ in 0..20 {
                let op = random_clifford(m, &mut rng);
                assert!(op.is_symplectic());
                let u = op.dense().unwrap();
                assert!(gates::is_unitary(u, 1e-10));
                for j in 0..m {
                    for (r, p) in [(j, 'X'), (m + j, 'Z')] {
                        let s: String = (0..m).map(|q| if q == j { p } else { 'I' }).collect();
                        let lhs = u * pauli_string(&s) * u.adjoint();
                        assert!((lhs - row_pauli(&op, r)).norm() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn single_qubit_group_is_uniform_over_24() {
        let mut rng = Stream::new(11).rng();
        let mut reps: Vec<Mat> = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        let t = 100_000;
        for _ in 0..t {
            let u = random_clifford(1, &mut rng).dense().unwrap().clone();
            match reps.iter().position(|r| gates::equal_up_to_phase(r, &u, 1e-9)) {
                Some(i) => counts[i] += 1,
                None => {
                    reps.push(u);
                    counts.push(1);
                }
            }
        }
        assert_eq!(reps.len(), 24);
        let e = t as f64 / 24.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        // 23 degrees of freedom, p = 0.001 critical value 49.73.
        assert!(chi2 < 49.73, "chi2 = {chi2}");
    }

    #[test]
    fn same_stream_same_tableau_and_bits_round_trip() {
        let a = random_clifford(3, &mut Stream::new(5).rng());
        let b = random_clifford(3, &mut Stream::new(5).rng());
        assert_eq!(a, b);
        assert_eq!(CliffordOp::from_bits(3, &a.to_bits()).unwrap(), a);
        assert!(CliffordOp::from_bits(3, &a.to_bits()[1..]).is_err());
    }

    #[test]
    fn identity_is_dense_identity() {
        let u = CliffordOp::identity(2).dense().unwrap().clone();
        assert!(gates::equal_up_to_phase(&u, &gates::identity(4), 1e-12));
    }
}
