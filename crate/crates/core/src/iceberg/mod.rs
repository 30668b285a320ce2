//! Multi-block Iceberg error detection: code blocks with optional gauge
//! fixing, encoders, a logical-to-physical compiler and a noisy evaluator.
//!
//! Local layout of a block with `K` parent logicals: qubit 0 is the top `t`,
//! qubit `1 + j` carries logical `j`, qubit `K + 1` is the bottom `b`.

mod compile;
mod encode;
mod noisy;

pub use compile::{assemble, compile_layer, translate_logical, LogicalGate, PhysicalProgram};
pub use encode::{encoder_arbitrary, encoder_ft_gauge, encoder_ft_plus};
pub use noisy::{fault_outcome, run_noisy, run_unencoded, Fault, NoisyRun};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GaugeFix {
    /// Promote `X̄_g`: the logical sits in `|+_L⟩` and `g` is a proxy top.
    Xplus,
    /// Promote `Z̄_g`: the logical sits in `|0_L⟩` and `g` is a proxy bottom.
    Zzero,
}

/// A sparse Pauli string: `(qubit, 'X'|'Y'|'Z')`.
pub type Pauli = Vec<(usize, char)>;

#[derive(Clone, Debug, PartialEq)]
pub struct IcebergBlock {
    pub k_logical: usize,
    /// Parent-code logical indices promoted to stabilizers.
    pub gauge: Vec<(usize, GaugeFix)>,
}

impl IcebergBlock {
    pub fn new(k_logical: usize, gauge: Vec<(usize, GaugeFix)>) -> Result<Self> {
        if k_logical < 1 {
            return Err(Error::Config("an Iceberg block needs at least one logical qubit".into()));
        }
        let b = IcebergBlock { k_logical, gauge };
        let k = b.parent_logicals();
        if k % 2 != 0 {
            return Err(Error::Config(format!("Iceberg blocks need an even number of parent logicals, got {k}")));
        }
        let mut seen = vec![false; k];
        for &(g, _) in &b.gauge {
            if g >= k || seen[g] {
                return Err(Error::Config(format!("gauge index {g} repeated or out of range for {k} logicals")));
            }
            seen[g] = true;
        }
        Ok(b)
    }

    pub fn plain(k: usize) -> Result<Self> {
        Self::new(k, Vec::new())
    }

    /// `k` computational logicals plus one `|+_L⟩` and one `|0_L⟩` gauge qubit.
    pub fn plus(k: usize) -> Result<Self> {
        Self::new(k, vec![(k, GaugeFix::Xplus), (k + 1, GaugeFix::Zzero)])
    }

    pub fn parent_logicals(&self) -> usize {
        self.k_logical + self.gauge.len()
    }

    /// `k_logical + |gauge| + 2`.
    pub fn physical_count(&self) -> usize {
        self.parent_logicals() + 2
    }

    pub fn gauge_fix(&self, logical: usize) -> Option<GaugeFix> {
        self.gauge.iter().find(|g| g.0 == logical).map(|g| g.1)
    }

    /// Parent logical index of each computational logical, in order.
    pub fn computational(&self) -> Vec<usize> {
        (0..self.parent_logicals()).filter(|&j| self.gauge_fix(j).is_none()).collect()
    }

    /// Local qubit holding computational logical `i`.
    pub fn data_qubit(&self, i: usize) -> usize {
        1 + self.computational()[i]
    }

    /// Stabilizer generators in frame `f`: `S_X`, `S_Z`, then one per gauge entry.
    pub fn stabilizers(&self, f: Frame) -> Vec<Pauli> {
        let n = self.physical_count();
        let mut out = vec![(0..n).map(|q| (q, 'X')).collect(), (0..n).map(|q| (q, 'Z')).collect()];
        for &(g, fix) in &self.gauge {
            out.push(if f.x_type(fix) { vec![(f.top(self), 'X'), (1 + g, 'X')] } else { vec![(f.bottom(self), 'Z'), (1 + g, 'Z')] });
        }
        out
    }

    /// Carriers for `X̄` rotations: the top first, then proxy tops.
    pub fn x_carriers(&self, f: Frame) -> Vec<usize> {
        let mut c = vec![f.top(self)];
        c.extend(self.gauge.iter().filter(|g| f.x_type(g.1)).map(|g| 1 + g.0));
        c
    }

    /// Carriers for `Z̄` rotations: the bottom first, then proxy bottoms.
    pub fn z_carriers(&self, f: Frame) -> Vec<usize> {
        let mut c = vec![f.bottom(self)];
        c.extend(self.gauge.iter().filter(|g| !f.x_type(g.1)).map(|g| 1 + g.0));
        c
    }
}

/// Role assignment after an even (`swapped = false`) or odd number of
/// all-logical Hadamards, which exchange top with bottom and X- with Z-gauges.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Frame {
    pub swapped: bool,
}

impl Frame {
    pub fn top(self, b: &IcebergBlock) -> usize {
        if self.swapped {
            b.physical_count() - 1
        } else {
            0
        }
    }

    pub fn bottom(self, b: &IcebergBlock) -> usize {
        if self.swapped {
            0
        } else {
            b.physical_count() - 1
        }
    }

    fn x_type(self, fix: GaugeFix) -> bool {
        (fix == GaugeFix::Xplus) != self.swapped
    }
}

#[cfg(test)]
/// Symplectic `(x | z)` vector of a Pauli on `n` qubits.
pub(crate) fn symplectic(p: &Pauli, n: usize) -> Vec<bool> {
    let mut v = vec![false; 2 * n];
    for &(q, c) in p {
        v[q] ^= matches!(c, 'X' | 'Y');
        v[n + q] ^= matches!(c, 'Z' | 'Y');
    }
    v
}

#[cfg(test)]
pub(crate) fn commute(a: &[bool], b: &[bool]) -> bool {
    let n = a.len() / 2;
    (0..n).filter(|&i| (a[i] && b[n + i]) != (a[n + i] && b[i])).count() % 2 == 0
}
