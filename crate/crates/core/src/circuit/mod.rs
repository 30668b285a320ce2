//! Layered gate circuits, the secret-key and hypothesis object.

mod ensemble;
mod graph;
mod io;

pub use ensemble::{
    all_to_all_clifford, append_digit_layer, brickwork, build_experiment_ansatz, build_hypercube_circuit,
    clifford_family, instantiate, GateFamily,
};
pub use graph::{
    backward_reach, causal_sets, compress, decompress, find_pivot, forward_reach, outer_gates, pivot_candidates,
    CausalSets, GateRef, PivotCandidate, PivotReport, Side,
};
pub use io::{parse, parse_lines, serialize};

use crate::error::{Error, Result};
use crate::gates::{self, Mat};

#[derive(Clone, Debug, PartialEq)]
pub enum GateLabel {
    Hadamard,
    /// `Z^p X^{1/2}` with `p = quarters / 4`, `quarters ∈ -4..=3`.
    ZpXhalf(i8),
    CZ,
    Cnot,
    Swap,
    Rxx(f64),
    Rzz(f64),
    Clifford1,
    Clifford2,
    HaarSU4,
    Identity,
    Custom,
}

impl GateLabel {
    /// Matrix implied by the label alone, if any.
    pub fn matrix(&self) -> Option<Mat> {
        Some(match self {
            GateLabel::Hadamard => gates::hadamard(),
            GateLabel::ZpXhalf(q) => gates::zpxhalf(*q),
            GateLabel::CZ => gates::cz(),
            GateLabel::Cnot => gates::cnot(),
            GateLabel::Swap => gates::swap(),
            GateLabel::Rxx(t) => gates::rxx(*t),
            GateLabel::Rzz(t) => gates::rzz(*t),
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub support: Vec<usize>,
    pub unitary: Mat,
    pub label: GateLabel,
    pub layer: usize,
}

impl Gate {
    pub fn new(label: GateLabel, support: Vec<usize>) -> Gate {
        let unitary = match &label {
            GateLabel::Identity => gates::identity(1 << support.len()),
            l => l.matrix().expect("label has no implied matrix"),
        };
        Gate { support, unitary, label, layer: 0 }
    }

    pub fn with_matrix(label: GateLabel, support: Vec<usize>, unitary: Mat) -> Gate {
        Gate { support, unitary, label, layer: 0 }
    }

    pub fn h(q: usize) -> Gate {
        Gate::new(GateLabel::Hadamard, vec![q])
    }

    pub fn cz(a: usize, b: usize) -> Gate {
        Gate::new(GateLabel::CZ, vec![a, b])
    }

    pub fn cnot(control: usize, target: usize) -> Gate {
        Gate::new(GateLabel::Cnot, vec![control, target])
    }

    pub fn arity(&self) -> usize {
        self.support.len()
    }

    /// Inverse gate, labelled `Custom` unless self-inverse by label.
    pub fn dagger(&self) -> Gate {
        let label = match self.label {
            GateLabel::Hadamard | GateLabel::CZ | GateLabel::Cnot | GateLabel::Swap | GateLabel::Identity => {
                self.label.clone()
            }
            GateLabel::Rxx(t) => GateLabel::Rxx(-t),
            GateLabel::Rzz(t) => GateLabel::Rzz(-t),
            _ => GateLabel::Custom,
        };
        Gate { support: self.support.clone(), unitary: self.unitary.adjoint(), label, layer: self.layer }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EnsembleTag {
    ExperimentAnsatz,
    Brickwork,
    Hypercube,
    AllToAllClifford,
    Custom,
}

impl EnsembleTag {
    pub fn name(self) -> &'static str {
        match self {
            EnsembleTag::ExperimentAnsatz => "experiment-ansatz",
            EnsembleTag::Brickwork => "brickwork",
            EnsembleTag::Hypercube => "hypercube",
            EnsembleTag::AllToAllClifford => "all-to-all-clifford",
            EnsembleTag::Custom => "custom",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [Self::ExperimentAnsatz, Self::Brickwork, Self::Hypercube, Self::AllToAllClifford, Self::Custom]
            .into_iter()
            .find(|t| t.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub n: usize,
    pub layers: Vec<Vec<Gate>>,
    pub ensemble: EnsembleTag,
    pub seed: u64,
}

impl Circuit {
    pub fn new(n: usize, ensemble: EnsembleTag, seed: u64) -> Circuit {
        Circuit { n, layers: Vec::new(), ensemble, seed }
    }

    /// Append a layer, stamping each gate with its layer index.
    pub fn push_layer(&mut self, mut gates: Vec<Gate>) {
        let l = self.layers.len();
        for g in &mut gates {
            g.layer = l;
        }
        self.layers.push(gates);
    }

    /// Place `gate` in the earliest layer after every gate touching its support.
    pub fn push_asap(&mut self, mut gate: Gate) {
        let mut l = 0;
        for (i, layer) in self.layers.iter().enumerate().rev() {
            if layer.iter().any(|g| g.support.iter().any(|q| gate.support.contains(q))) {
                l = i + 1;
                break;
            }
        }
        while self.layers.len() <= l {
            self.layers.push(Vec::new());
        }
        gate.layer = l;
        self.layers[l].push(gate);
    }

    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.layers.iter().flatten()
    }

    pub fn gate_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Number of layers containing at least one gate of arity ≥ 2.
    pub fn two_qubit_depth(&self) -> usize {
        self.layers.iter().filter(|l| l.iter().any(|g| g.arity() >= 2)).count()
    }

    pub fn two_qubit_count(&self) -> usize {
        self.gates().filter(|g| g.arity() >= 2).count()
    }

    pub fn validate(&self) -> Result<()> {
        for (l, layer) in self.layers.iter().enumerate() {
            let mut used = vec![false; self.n];
            for g in layer {
                if g.layer != l {
                    return Err(Error::Structure(format!("gate stamped layer {} sits in layer {l}", g.layer)));
                }
                if g.support.is_empty() {
                    return Err(Error::Structure("gate with empty support".into()));
                }
                for &q in &g.support {
                    if q >= self.n {
                        return Err(Error::Structure(format!("qubit {q} out of range for n={}", self.n)));
                    }
                    if used[q] {
                        return Err(Error::Structure(format!("qubit {q} used twice in layer {l}")));
                    }
                    used[q] = true;
                }
                let dim = 1 << g.support.len();
                if g.unitary.shape() != (dim, dim) || !gates::is_unitary(&g.unitary, 1e-10) {
                    return Err(Error::Structure(format!("gate on {:?} in layer {l} is not unitary", g.support)));
                }
            }
        }
        Ok(())
    }

    /// Circuit implementing the inverse unitary.
    pub fn inverse(&self) -> Circuit {
        let mut out = Circuit::new(self.n, EnsembleTag::Custom, self.seed);
        for layer in self.layers.iter().rev() {
            out.push_layer(layer.iter().map(Gate::dagger).collect());
        }
        out
    }

    /// Full 2^n × 2^n unitary by gate-by-gate column evolution (small n only).
    pub fn unitary(&self) -> Result<Mat> {
        if self.n > 10 {
            return Err(Error::Resource(format!("dense unitary requested for n={}", self.n)));
        }
        let dim = 1usize << self.n;
        let mut u = gates::identity(dim);
        for g in self.gates() {
            u = crate::sim::embed(&g.unitary, &g.support, self.n) * u;
        }
        Ok(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_asap_packs_layers() {
        let mut c = Circuit::new(3, EnsembleTag::Custom, 0);
        c.push_asap(Gate::h(0));
        c.push_asap(Gate::h(1));
        c.push_asap(Gate::cz(0, 1));
        c.push_asap(Gate::h(2));
        assert_eq!(c.depth(), 2);
        assert_eq!(c.layers[0].len(), 3);
        c.validate().unwrap();
    }

    #[test]
    fn validate_rejects_overlap() {
        let mut c = Circuit::new(2, EnsembleTag::Custom, 0);
        c.push_layer(vec![Gate::h(0), Gate::cz(0, 1)]);
        assert!(c.validate().is_err());
    }

    #[test]
    fn inverse_composes_to_identity() {
        let c = build_experiment_ansatz(4, 2, 3, 9).unwrap();
        let u = c.unitary().unwrap() * c.inverse().unitary().unwrap();
        assert!(gates::equal_up_to_phase(&u, &gates::identity(16), 1e-10));
    }
}
