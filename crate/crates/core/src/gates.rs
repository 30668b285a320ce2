//! Dense gate matrices.
//!
//! Local basis ordering is little-endian: for a gate with support
//! `[a, b, ...]`, local index `i = bit(a) + 2·bit(b) + ...`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type Mat = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn identity(dim: usize) -> Mat {
    Mat::identity(dim, dim)
}

pub fn from_rows(dim: usize, entries: &[C64]) -> Mat {
    Mat::from_row_slice(dim, dim, entries)
}

pub fn pauli(p: char) -> Mat {
    let (o, l) = (ONE, ZERO);
    match p {
        'I' => identity(2),
        'X' => from_rows(2, &[l, o, o, l]),
        'Y' => from_rows(2, &[l, -I, I, l]),
        'Z' => from_rows(2, &[o, l, l, -o]),
        _ => panic!("not a Pauli symbol: {p}"),
    }
}

pub fn hadamard() -> Mat {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    from_rows(2, &[h, h, h, -h])
}

pub fn phase_s() -> Mat {
    from_rows(2, &[ONE, ZERO, ZERO, I])
}

pub fn phase_sdg() -> Mat {
    from_rows(2, &[ONE, ZERO, ZERO, -I])
}

/// `Z^p · X^{1/2}` with `p = quarters / 4`.
pub fn zpxhalf(quarters: i8) -> Mat {
    let ph = C64::from_polar(1.0, std::f64::consts::PI * quarters as f64 / 4.0);
    let z = from_rows(2, &[ONE, ZERO, ZERO, ph]);
    let a = C64::new(0.5, 0.5);
    let b = C64::new(0.5, -0.5);
    let sx = from_rows(2, &[a, b, b, a]);
    z * sx
}

pub fn cz() -> Mat {
    Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![ONE, ONE, ONE, -ONE]))
}

/// Control on the first support qubit, target on the second.
pub fn cnot() -> Mat {
    let mut m = Mat::zeros(4, 4);
    for i in 0..4usize {
        let c = i & 1;
        let t = (i >> 1) & 1;
        let j = c | ((t ^ c) << 1);
        m[(j, i)] = ONE;
    }
    m
}

pub fn swap() -> Mat {
    let mut m = Mat::zeros(4, 4);
    for i in 0..4usize {
        let j = ((i & 1) << 1) | (i >> 1);
        m[(j, i)] = ONE;
    }
    m
}

/// Kronecker product with `a` on the high bits.
pub fn kron(a: &Mat, b: &Mat) -> Mat {
    a.kronecker(b)
}

/// Tensor product with `ops[0]` on the least significant local qubit.
pub fn tensor(ops: &[Mat]) -> Mat {
    let mut acc = identity(1);
    for op in ops {
        acc = kron(op, &acc);
    }
    acc
}

/// Pauli string from symbols, `paulis[0]` on local qubit 0.
pub fn pauli_string(paulis: &str) -> Mat {
    tensor(&paulis.chars().map(pauli).collect::<Vec<_>>())
}

/// `exp(-i θ/2 · P)` for a Pauli string `P`.
pub fn pauli_rotation(paulis: &str, theta: f64) -> Mat {
    let p = pauli_string(paulis);
    let dim = p.nrows();
    identity(dim) * C64::new((theta / 2.0).cos(), 0.0) - p * (I * (theta / 2.0).sin())
}

pub fn rx(theta: f64) -> Mat {
    pauli_rotation("X", theta)
}

pub fn rz(theta: f64) -> Mat {
    pauli_rotation("Z", theta)
}

pub fn rxx(theta: f64) -> Mat {
    pauli_rotation("XX", theta)
}

pub fn rzz(theta: f64) -> Mat {
    pauli_rotation("ZZ", theta)
}

pub fn is_unitary(m: &Mat, tol: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let d = m.adjoint() * m - identity(m.nrows());
    d.iter().all(|z| z.norm() <= tol)
}

/// `|tr(a† b)| / dim`, equal to 1 exactly when `b = e^{iφ} a`.
pub fn phase_overlap(a: &Mat, b: &Mat) -> f64 {
    let tr: C64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
    tr.norm() / a.nrows() as f64
}

pub fn equal_up_to_phase(a: &Mat, b: &Mat, tol: f64) -> bool {
    a.shape() == b.shape() && (1.0 - phase_overlap(a, b)).abs() <= tol
}

/// Haar-random unitary via QR of a complex Ginibre matrix.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Mat {
    let g = Mat::from_fn(dim, dim, |_, _| {
        let (re, im): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..dim {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..dim {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Operator-Schmidt rank of a two-qubit operator across its two qubits.
pub fn operator_schmidt_rank(u: &Mat, tol: f64) -> usize {
    assert_eq!(u.nrows(), 4);
    // Realign U[(a0 a1), (b0 b1)] into R[(a0 b0), (a1 b1)].
    let r = Mat::from_fn(4, 4, |row, col| {
        let (a0, b0) = (row & 1, row >> 1);
        let (a1, b1) = (col & 1, col >> 1);
        u[(a0 | (a1 << 1), b0 | (b1 << 1))]
    });
    r.singular_values().iter().filter(|s| **s > tol).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn standard_gates_are_unitary() {
        for m in [hadamard(), cz(), cnot(), swap(), zpxhalf(-3), rxx(0.3), rzz(1.1), phase_s()] {
            assert!(is_unitary(&m, 1e-12));
        }
    }

    #[test]
    fn zpxhalf_squares_to_x_at_p0() {
        let s = zpxhalf(0);
        assert!(equal_up_to_phase(&(&s * &s), &pauli('X'), 1e-12));
    }

    #[test]
    fn cnot_convention_is_control_first() {
        // |c=1,t=0> is index 1 and maps to |1,1> = index 3.
        assert_eq!(cnot()[(3, 1)], ONE);
        assert_eq!(cnot()[(2, 2)], ONE);
    }

    #[test]
    fn tensor_is_little_endian() {
        let xz = pauli_string("XI");
        // X on local qubit 0 flips bit 0.
        assert_eq!(xz[(1, 0)], ONE);
    }

    #[test]
    fn haar_is_unitary_and_schmidt_rank_detects_products() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let u = haar_unitary(4, &mut rng);
        assert!(is_unitary(&u, 1e-10));
        assert_eq!(operator_schmidt_rank(&u, 1e-9), 4);
        let p = tensor(&[haar_unitary(2, &mut rng), haar_unitary(2, &mut rng)]);
        assert_eq!(operator_schmidt_rank(&p, 1e-9), 1);
        assert_eq!(operator_schmidt_rank(&cz(), 1e-9), 2);
        assert_eq!(operator_schmidt_rank(&swap(), 1e-9), 4);
    }
}
