//! Dense matrices over GF(2).

use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    data: Vec<bool>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BitMatrix { rows, cols, data: vec![false; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        BitMatrix { rows: rows.len(), cols, data: rows.concat() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[bool] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.data.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }

    /// `row[dst] ^= row[src]`.
    pub fn add_row(&mut self, src: usize, dst: usize) {
        for c in 0..self.cols {
            if self.data[src * self.cols + c] {
                self.data[dst * self.cols + c] ^= true;
            }
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn mul(&self, other: &BitMatrix) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                if self.get(r, k) {
                    for c in 0..other.cols {
                        if other.get(k, c) {
                            out.data[r * other.cols + c] ^= true;
                        }
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[bool]) -> Vec<bool> {
        assert_eq!(self.cols, v.len(), "dimension mismatch");
        (0..self.rows).map(|r| self.row(r).iter().zip(v).filter(|(a, b)| **a && **b).count() % 2 == 1).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|b| !b)
    }

    /// Reduced row echelon form in place; returns pivot columns in row order.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| self.get(i, c)) else { continue };
            self.swap_rows(p, r);
            for i in 0..self.rows {
                if i != r && self.get(i, c) {
                    self.add_row(r, i);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }

    pub fn inverse(&self) -> Option<BitMatrix> {
        assert_eq!(self.rows, self.cols, "inverse of non-square matrix");
        let n = self.rows;
        let mut aug = Self::zeros(n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                aug.set(r, c, self.get(r, c));
            }
            aug.set(r, n + r, true);
        }
        if aug.rref().iter().take_while(|&&c| c < n).count() < n {
            return None;
        }
        let mut inv = Self::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                inv.set(r, c, aug.get(r, n + c));
            }
        }
        Some(inv)
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let s: String = self.row(r).iter().map(|&b| if b { '1' } else { '0' }).collect();
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn inverse_round_trip(bits in proptest::collection::vec(any::<bool>(), 36)) {
            let m = BitMatrix::from_rows(&bits.chunks(6).map(<[bool]>::to_vec).collect::<Vec<_>>());
            match m.inverse() {
                Some(inv) => prop_assert_eq!(m.mul(&inv), BitMatrix::identity(6)),
                None => prop_assert!(m.rank() < 6),
            }
        }

        #[test]
        fn rank_of_transpose(bits in proptest::collection::vec(any::<bool>(), 40)) {
            let m = BitMatrix::from_rows(&bits.chunks(8).map(<[bool]>::to_vec).collect::<Vec<_>>());
            prop_assert_eq!(m.rank(), m.transpose().rank());
        }
    }
}
