use crate::bits::{deposit, extract};
use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::gates::{Mat, C64, ONE, ZERO};
use rand::Rng;

/// Default qubit cap for dense states.
pub const MAX_QUBITS: usize = 14;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn zero(n: usize) -> Result<Self> {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, x: usize) -> Result<Self> {
        check_cap(n, MAX_QUBITS)?;
        let mut amps = vec![ZERO; 1 << n];
        amps[x] = ONE;
        Ok(StateVector { n, amps })
    }

    /// Wrap amplitudes; they must be normalized to 1e−9.
    pub fn from_amplitudes(n: usize, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != 1 << n {
            return Err(Error::Structure(format!("{} amplitudes for n={n}", amps.len())));
        }
        let s = StateVector { n, amps };
        if (s.norm_sqr() - 1.0).abs() > 1e-9 {
            return Err(Error::Structure(format!("state norm² = {}", s.norm_sqr())));
        }
        Ok(s)
    }

    /// Haar-random pure state.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        check_cap(n, MAX_QUBITS)?;
        let mut amps: Vec<C64> = (0..1usize << n)
            .map(|_| {
                let (a, b): (f64, f64) = (rng.sample(rand_distr::StandardNormal), rng.sample(rand_distr::StandardNormal));
                C64::new(a, b)
            })
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok(StateVector { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn amplitude(&self, x: usize) -> C64 {
        self.amps[x]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        self.amps.iter_mut().for_each(|a| *a /= n);
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Tensor product with `self` on the low qubits.
    pub fn tensor(&self, high: &StateVector) -> Result<StateVector> {
        let n = self.n + high.n;
        check_cap(n, MAX_QUBITS)?;
        let mut amps = Vec::with_capacity(1 << n);
        for h in &high.amps {
            amps.extend(self.amps.iter().map(|l| l * h));
        }
        Ok(StateVector { n, amps })
    }

    pub fn apply_gate(&mut self, m: &Mat, support: &[usize]) {
        match support.len() {
            1 => self.apply_1q(m, support[0]),
            2 if is_diagonal(m) => self.apply_diag(m, support),
            2 => self.apply_2q(m, support[0], support[1]),
            _ => self.apply_kq(m, support),
        }
    }

    fn apply_1q(&mut self, m: &Mat, q: usize) {
        let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        let stride = 1 << q;
        for base in (0..self.amps.len()).step_by(2 * stride) {
            for i in base..base + stride {
                let (x, y) = (self.amps[i], self.amps[i + stride]);
                self.amps[i] = a * x + b * y;
                self.amps[i + stride] = c * x + d * y;
            }
        }
    }

    fn apply_diag(&mut self, m: &Mat, support: &[usize]) {
        let d: Vec<C64> = (0..m.nrows()).map(|i| m[(i, i)]).collect();
        for (x, a) in self.amps.iter_mut().enumerate() {
            *a *= d[extract(x, support)];
        }
    }

    fn apply_2q(&mut self, m: &Mat, qa: usize, qb: usize) {
        let (ba, bb) = (1usize << qa, 1usize << qb);
        let mask = ba | bb;
        let u: [[C64; 4]; 4] = std::array::from_fn(|r| std::array::from_fn(|c| m[(r, c)]));
        for x in 0..self.amps.len() {
            if x & mask != 0 {
                continue;
            }
            let idx = [x, x | ba, x | bb, x | mask];
            let v = idx.map(|i| self.amps[i]);
            for (r, &i) in idx.iter().enumerate() {
                self.amps[i] = u[r][0] * v[0] + u[r][1] * v[1] + u[r][2] * v[2] + u[r][3] * v[3];
            }
        }
    }

    fn apply_kq(&mut self, m: &Mat, support: &[usize]) {
        let dim = 1usize << support.len();
        let offsets: Vec<usize> = (0..dim).map(|l| deposit(l, support)).collect();
        let mask = offsets[dim - 1];
        let mut buf = vec![ZERO; dim];
        for x in 0..self.amps.len() {
            if x & mask != 0 {
                continue;
            }
            for (l, off) in offsets.iter().enumerate() {
                buf[l] = self.amps[x | off];
            }
            for (r, off) in offsets.iter().enumerate() {
                self.amps[x | off] = (0..dim).map(|c| m[(r, c)] * buf[c]).sum();
            }
        }
    }

    /// Apply a single-qubit Pauli (`'I'`, `'X'`, `'Y'`, `'Z'`) exactly.
    pub fn apply_pauli(&mut self, q: usize, p: char) {
        let bit = 1usize << q;
        match p {
            'I' => {}
            'X' => (0..self.amps.len()).filter(|x| x & bit == 0).for_each(|x| self.amps.swap(x, x | bit)),
            'Z' => self.amps.iter_mut().enumerate().filter(|(x, _)| x & bit != 0).for_each(|(_, a)| *a = -*a),
            'Y' => {
                self.apply_pauli(q, 'Z');
                self.apply_pauli(q, 'X');
                self.amps.iter_mut().for_each(|a| *a *= crate::gates::I);
            }
            _ => panic!("not a Pauli symbol: {p}"),
        }
    }

    pub fn apply_circuit(&mut self, c: &Circuit) -> Result<()> {
        if c.n != self.n {
            return Err(Error::Structure(format!("circuit on {} qubits, state on {}", c.n, self.n)));
        }
        for g in c.gates() {
            self.apply_gate(&g.unitary, &g.support);
        }
        Ok(())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// One Born-rule sample in the computational basis.
    pub fn sample_z<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen::<f64>() * self.norm_sqr();
        let mut acc = 0.0;
        for (x, a) in self.amps.iter().enumerate() {
            acc += a.norm_sqr();
            if u < acc {
                return x;
            }
        }
        self.amps.iter().rposition(|a| a.norm_sqr() > 0.0).unwrap_or(0)
    }

    /// Reduced density matrix on `qubits` (local index bit `j` = `qubits[j]`).
    pub fn reduced_density(&self, qubits: &[usize]) -> Mat {
        let k = qubits.len();
        let dim = 1usize << k;
        let mask = deposit(dim - 1, qubits);
        let offsets: Vec<usize> = (0..dim).map(|l| deposit(l, qubits)).collect();
        let mut rho = Mat::zeros(dim, dim);
        for rest in 0..self.amps.len() {
            if rest & mask != 0 {
                continue;
            }
            let v: Vec<C64> = offsets.iter().map(|o| self.amps[rest | o]).collect();
            for i in 0..dim {
                if v[i] == ZERO {
                    continue;
                }
                for j in 0..dim {
                    rho[(i, j)] += v[i] * v[j].conj();
                }
            }
        }
        rho
    }
}

fn is_diagonal(m: &Mat) -> bool {
    (0..m.nrows()).all(|r| (0..m.ncols()).all(|c| r == c || m[(r, c)] == ZERO))
}

pub(crate) fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        Err(Error::Resource(format!("{n} qubits exceeds the dense cap of {cap}")))
    } else {
        Ok(())
    }
}

/// `U_c · input`.
pub fn apply(c: &Circuit, input: &StateVector) -> Result<StateVector> {
    let mut s = input.clone();
    s.apply_circuit(c)?;
    Ok(s)
}

/// `C|0^n⟩`.
pub fn simulate(c: &Circuit) -> Result<StateVector> {
    apply(c, &StateVector::zero(c.n)?)
}

/// Dense operator of a gate embedded into `n` qubits.
pub fn embed(m: &Mat, support: &[usize], n: usize) -> Mat {
    let dim = 1usize << n;
    let mask = deposit((1 << support.len()) - 1, support);
    Mat::from_fn(dim, dim, |r, c| {
        if r & !mask != c & !mask {
            ZERO
        } else {
            m[(extract(r, support), extract(c, support))]
        }
    })
}
