//! Binary linear error-detecting codes.

use crate::error::{parse_err, Error, Result};
use crate::gf2::BitMatrix;
use crate::rng::Stream;
use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use std::fmt::Write as _;

#[derive(Clone, Debug, PartialEq)]
pub struct LinearCode {
    pub len: usize,
    pub k: usize,
    /// Parity checks as supplied, possibly dependent.
    pub checks: BitMatrix,
    /// Full-rank parity checks, `(len − k) × len`.
    pub h: BitMatrix,
    /// Generator with identity on `info`, `k × len`.
    pub g: BitMatrix,
    /// Message positions: message bit `i` sits at word position `info[i]`.
    pub info: Vec<usize>,
    pub d_known: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MinDistance {
    pub d: usize,
    pub exact: bool,
}

/// Largest dimension enumerated exactly.
pub const EXACT_DISTANCE_MAX_K: usize = 26;

impl LinearCode {
    /// Build from any parity-check matrix; dependent rows are dropped.
    pub fn from_parity_checks(h_in: &BitMatrix) -> Result<Self> {
        let h = h_in;
        let len = h.cols();
        if len == 0 || len > 64 {
            return Err(Error::Config(format!("block length {len} outside 1..=64")));
        }
        let mut r = h.clone();
        let pivots = r.rref();
        let rank = pivots.len();
        let rows: Vec<Vec<bool>> = (0..rank).map(|i| r.row(i).to_vec()).collect();
        let h = if rank == 0 { BitMatrix::zeros(0, len) } else { BitMatrix::from_rows(&rows) };
        let info: Vec<usize> = (0..len).filter(|c| !pivots.contains(c)).collect();
        let k = info.len();
        let mut g = BitMatrix::zeros(k, len);
        for (i, &f) in info.iter().enumerate() {
            g.set(i, f, true);
            for (row, &p) in pivots.iter().enumerate() {
                if h.get(row, f) {
                    g.set(i, p, true);
                }
            }
        }
        Ok(LinearCode { len, k, checks: h_in.clone(), h, g, info, d_known: None })
    }

    pub fn encode(&self, msg: &[bool]) -> Result<Vec<bool>> {
        if msg.len() != self.k {
            return Err(Error::Config(format!("message has {} bits, code dimension is {}", msg.len(), self.k)));
        }
        let mut w = vec![false; self.len];
        for (i, _) in msg.iter().enumerate().filter(|(_, &b)| b) {
            for (c, x) in w.iter_mut().enumerate() {
                *x ^= self.g.get(i, c);
            }
        }
        Ok(w)
    }

    /// True when `word` is not a codeword.
    pub fn chk(&self, word: &[bool]) -> bool {
        word.len() != self.len || self.h.mul_vec(word).iter().any(|&b| b)
    }

    pub fn decode(&self, word: &[bool]) -> Result<Vec<bool>> {
        if self.chk(word) {
            return Err(Error::Data("decode called on a non-codeword".into()));
        }
        Ok(self.info.iter().map(|&p| word[p]).collect())
    }

    fn row_masks(&self) -> Vec<u64> {
        (0..self.k).map(|i| (0..self.len).fold(0u64, |acc, c| acc | (self.g.get(i, c) as u64) << c)).collect()
    }

    pub fn min_distance(&self, samples: usize, stream: Stream) -> MinDistance {
        if self.k == 0 {
            return MinDistance { d: usize::MAX, exact: true };
        }
        if self.k <= EXACT_DISTANCE_MAX_K {
            return MinDistance { d: exact_distance(&self.row_masks(), self.k), exact: true };
        }
        MinDistance { d: self.information_set_estimate(samples, stream), exact: false }
    }

    /// Lightest codeword seen over random information sets.
    fn information_set_estimate(&self, samples: usize, stream: Stream) -> usize {
        (0..samples)
            .into_par_iter()
            .map(|s| {
                let mut rng = stream.split(s as u64).rng();
                let mut cols: Vec<usize> = (0..self.len).collect();
                cols.shuffle(&mut rng);
                let mut g = self.g.clone();
                let mut best = usize::MAX;
                // Reduce G on a random column order; each reduced row is a low-weight candidate.
                let mut row = 0;
                for &c in &cols {
                    if row == self.k {
                        break;
                    }
                    if let Some(p) = (row..self.k).find(|&r| g.get(r, c)) {
                        g.swap_rows(row, p);
                        for r in 0..self.k {
                            if r != row && g.get(r, c) {
                                g.add_row(row, r);
                            }
                        }
                        row += 1;
                    }
                }
                for r in 0..self.k {
                    let w = g.row(r).iter().filter(|&&b| b).count();
                    if w > 0 {
                        best = best.min(w);
                    }
                }
                best
            })
            .min()
            .unwrap_or(usize::MAX)
    }

    pub fn with_distance(mut self) -> Self {
        let d = self.min_distance(0, Stream::new(0));
        if d.exact {
            self.d_known = Some(d.d);
        }
        self
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.len as f64
    }

    pub fn relative_distance(&self) -> Option<f64> {
        self.d_known.map(|d| d as f64 / self.len as f64)
    }
}

fn exact_distance(rows: &[u64], k: usize) -> usize {
    // Gray-code walk; the top `split` bits fan out across threads.
    let split = k.saturating_sub(12).min(8);
    let low = k - split;
    (0u64..1 << split)
        .into_par_iter()
        .map(|hi| {
            let mut w: u64 = (0..split).filter(|b| hi >> b & 1 == 1).fold(0, |acc, b| acc ^ rows[low + b]);
            let mut best = if hi != 0 { w.count_ones() as usize } else { usize::MAX };
            for i in 1u64..1 << low {
                w ^= rows[i.trailing_zeros() as usize];
                best = best.min(w.count_ones() as usize);
            }
            best
        })
        .min()
        .unwrap()
}

pub fn repetition(len: usize) -> Result<LinearCode> {
    if len < 2 {
        return Err(Error::Config("repetition code needs length ≥ 2".into()));
    }
    let rows: Vec<Vec<bool>> = (1..len).map(|i| (0..len).map(|c| c == 0 || c == i).collect()).collect();
    Ok(LinearCode::from_parity_checks(&BitMatrix::from_rows(&rows))?.with_distance())
}

pub fn hamming74() -> LinearCode {
    let rows: Vec<Vec<bool>> =
        (0..3).map(|b| (1..=7usize).map(|c| c >> b & 1 == 1).collect()).collect();
    LinearCode::from_parity_checks(&BitMatrix::from_rows(&rows)).expect("valid Hamming checks").with_distance()
}

/// Random `(ℓ, c)`-regular code from the configuration model.
pub fn sample_gallager(var_degree: usize, check_degree: usize, len: usize, seed: u64) -> Result<LinearCode> {
    let (l, c) = (var_degree, check_degree);
    if l == 0 || c == 0 || (len * l) % c != 0 || c > len {
        return Err(Error::Config(format!("no ({l},{c})-regular graph on {len} variables")));
    }
    let checks = len * l / c;
    if l > checks {
        return Err(Error::Config(format!("variable degree {l} exceeds the {checks} available checks")));
    }
    let mut rng = Stream::new(seed).child("gallager").rng();
    let mut stubs: Vec<usize> = (0..len).flat_map(|v| std::iter::repeat(v).take(l)).collect();
    stubs.shuffle(&mut rng);
    let n = stubs.len();
    let repeated = |s: &[usize], i: usize| {
        let base = i / c * c;
        (base..base + c).any(|j| j != i && s[j] == s[i])
    };
    let mut moves = 0;
    while let Some(i) = (0..n).find(|&i| repeated(&stubs, i)) {
        let j = rng.gen_range(0..n);
        stubs.swap(i, j);
        if repeated(&stubs, i) || repeated(&stubs, j) {
            stubs.swap(i, j);
        }
        moves += 1;
        if moves > 100_000 {
            return Err(Error::Config("could not remove multi-edges".into()));
        }
    }
    let mut h = BitMatrix::zeros(checks, len);
    for (i, &v) in stubs.iter().enumerate() {
        h.set(i / c, v, true);
    }
    LinearCode::from_parity_checks(&h)
}

pub fn serialize_code(code: &LinearCode) -> String {
    let mut s = String::new();
    writeln!(s, "shadowsig-code 1").unwrap();
    writeln!(s, "len {} checks {}", code.len, code.checks.rows()).unwrap();
    for r in 0..code.checks.rows() {
        writeln!(s, "{}", code.checks.row(r).iter().map(|&b| if b { '1' } else { '0' }).collect::<String>()).unwrap();
    }
    if let Some(d) = code.d_known {
        writeln!(s, "distance {d}").unwrap();
    }
    s
}

pub fn parse_code(text: &str) -> Result<LinearCode> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, "shadowsig-code 1")) => {}
        _ => return Err(parse_err(1, "expected `shadowsig-code 1`")),
    }
    let (ln, dims) = lines.next().ok_or_else(|| parse_err(2, "missing dimensions"))?;
    let tok: Vec<&str> = dims.split_whitespace().collect();
    let (len, rows) = match tok.as_slice() {
        ["len", a, "checks", b] => (
            a.parse::<usize>().map_err(|_| parse_err(ln, "bad length"))?,
            b.parse::<usize>().map_err(|_| parse_err(ln, "bad check count"))?,
        ),
        _ => return Err(parse_err(ln, "expected `len <M> checks <r>`")),
    };
    let mut h = BitMatrix::zeros(rows, len);
    for r in 0..rows {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(ln + r + 1, "missing check row"))?;
        if l.len() != len {
            return Err(parse_err(ln, format!("check row needs {len} bits")));
        }
        for (c, ch) in l.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => h.set(r, c, true),
                _ => return Err(parse_err(ln, "check row must be binary")),
            }
        }
    }
    let mut code = LinearCode::from_parity_checks(&h)?;
    if let Some((ln, l)) = lines.next() {
        let d = l.strip_prefix("distance ").and_then(|d| d.parse().ok()).ok_or_else(|| parse_err(ln, "expected `distance <d>`"))?;
        code.d_known = Some(d);
    }
    Ok(code)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits(x: u64, n: usize) -> Vec<bool> {
        (0..n).map(|i| x >> i & 1 == 1).collect()
    }

    #[test]
    fn repetition_three() {
        let c = repetition(3).unwrap();
        assert_eq!(c.k, 1);
        assert_eq!(c.encode(&[true]).unwrap(), vec![true; 3]);
        assert!(c.chk(&[true, false, true]));
        assert_eq!(c.d_known, Some(3));
    }

    #[test]
    fn hamming_detects_single_flips() {
        let c = hamming74();
        assert_eq!((c.len, c.k, c.d_known), (7, 4, Some(3)));
        for m in 0..16 {
            let w = c.encode(&bits(m, 4)).unwrap();
            for i in 0..7 {
                let mut e = w.clone();
                e[i] = !e[i];
                assert!(c.chk(&e));
            }
        }
    }

    #[test]
    fn gallager_regularity() {
        let c = sample_gallager(3, 6, 12, 1).unwrap();
        assert_eq!(c.checks.rows(), 6);
        for r in 0..6 {
            assert_eq!(c.checks.row(r).iter().filter(|&&b| b).count(), 6);
        }
        for col in 0..12 {
            assert_eq!((0..6).filter(|&r| c.checks.get(r, col)).count(), 3);
        }
        assert!(c.checks.rank() <= 11);
        assert_eq!(c.h.rows(), c.checks.rank());
        assert_eq!(c.k, 12 - c.checks.rank());
        assert_eq!(sample_gallager(3, 6, 12, 1).unwrap(), c);
        assert!(sample_gallager(3, 5, 12, 1).is_err());
    }

    #[test]
    fn gallager_distance_grows() {
        let median = |len: usize| {
            let mut d: Vec<usize> =
                (0..50).map(|s| sample_gallager(3, 6, len, s).unwrap().min_distance(0, Stream::new(0)).d).collect();
            d.sort_unstable();
            d[25]
        };
        let (a, b) = (median(12), median(24));
        assert!(b > a, "median distance {a} at 12, {b} at 24");
    }

    #[test]
    fn distance_matches_brute_force() {
        for s in 0..10 {
            let c = sample_gallager(3, 6, 12, s).unwrap();
            let brute = (1u64..1 << c.len)
                .map(|x| bits(x, c.len))
                .filter(|w| !c.chk(w))
                .map(|w| w.iter().filter(|&&b| b).count())
                .min()
                .unwrap();
            assert_eq!(c.min_distance(0, Stream::new(0)).d, brute);
        }
    }

    #[test]
    fn information_set_estimate_is_an_upper_bound() {
        let c = sample_gallager(3, 6, 24, 3).unwrap();
        let exact = c.min_distance(0, Stream::new(0)).d;
        let est = c.information_set_estimate(200, Stream::new(1));
        assert!(est >= exact);
    }

    #[test]
    fn below_distance_flips_detected() {
        let c = sample_gallager(3, 6, 12, 7).unwrap().with_distance();
        let d = c.d_known.unwrap();
        let w = c.encode(&vec![true; c.k]).unwrap();
        for e in (1u64..1 << 12).filter(|e| (e.count_ones() as usize) < d) {
            let t: Vec<bool> = w.iter().zip(bits(e, 12)).map(|(a, b)| a ^ b).collect();
            assert!(c.chk(&t));
        }
    }

    #[test]
    fn file_round_trip() {
        let c = sample_gallager(3, 6, 12, 2).unwrap().with_distance();
        assert_eq!(parse_code(&serialize_code(&c)).unwrap(), c);
        assert!(matches!(parse_code("shadowsig-code 1\nlen 3 checks 1\n10\n"), Err(Error::Parse { line: 3, .. })));
    }

    proptest! {
        #[test]
        fn encode_decode_identity(seed in 0u64..200, msg in any::<u64>()) {
            let c = sample_gallager(3, 6, 12, seed).unwrap();
            let m = bits(msg, c.k);
            let w = c.encode(&m).unwrap();
            prop_assert!(!c.chk(&w));
            prop_assert_eq!(c.decode(&w).unwrap(), m);
            prop_assert!(c.g.mul(&c.h.transpose()).is_zero());
        }
    }
}
