//! Qubit sets and bitstring helpers. Bit `q` of an index is qubit `q`.

use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct QubitSet {
    words: Vec<u64>,
}

impl QubitSet {
    pub fn new(n: usize) -> Self {
        QubitSet { words: vec![0; n.div_ceil(64).max(1)] }
    }

    pub fn singleton(n: usize, q: usize) -> Self {
        let mut s = Self::new(n);
        s.insert(q);
        s
    }

    pub fn full(n: usize) -> Self {
        let mut s = Self::new(n);
        for q in 0..n {
            s.insert(q);
        }
        s
    }

    pub fn insert(&mut self, q: usize) {
        self.words[q / 64] |= 1 << (q % 64);
    }

    pub fn contains(&self, q: usize) -> bool {
        self.words.get(q / 64).is_some_and(|w| w >> (q % 64) & 1 == 1)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn union_with(&mut self, other: &QubitSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn difference(&self, other: &QubitSet) -> QubitSet {
        QubitSet { words: self.words.iter().zip(&other.words).map(|(a, b)| a & !b).collect() }
    }

    pub fn is_subset(&self, other: &QubitSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn intersects(&self, qubits: &[usize]) -> bool {
        qubits.iter().any(|&q| self.contains(q))
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            (0..64).filter(move |b| w >> b & 1 == 1).map(move |b| i * 64 + b)
        })
    }
}

impl fmt::Debug for QubitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Render `n` bits with character `i` holding qubit `i`.
pub fn to_bitstring(x: u64, n: usize) -> String {
    (0..n).map(|q| if x >> q & 1 == 1 { '1' } else { '0' }).collect()
}

pub fn parse_bitstring(s: &str) -> Option<u64> {
    if s.len() > 64 {
        return None;
    }
    s.chars().enumerate().try_fold(0u64, |acc, (q, ch)| match ch {
        '0' => Some(acc),
        '1' => Some(acc | 1 << q),
        _ => None,
    })
}

/// Scatter the low bits of `local` onto the positions in `qubits`.
pub fn deposit(local: usize, qubits: &[usize]) -> usize {
    qubits.iter().enumerate().fold(0, |acc, (j, &q)| acc | ((local >> j & 1) << q))
}

/// Gather the bits at `qubits` into a compact local index.
pub fn extract(x: usize, qubits: &[usize]) -> usize {
    qubits.iter().enumerate().fold(0, |acc, (j, &q)| acc | ((x >> q & 1) << j))
}
