//! Access models. Query attacks take `&impl QueryAccess`; a [`ShadowAccess`]
//! wraps only classical records and has no way to reach a unitary.

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::shadows::ShadowSet;
use crate::sim::StateVector;
use std::sync::atomic::{AtomicU64, Ordering};

pub trait QueryAccess: Sync {
    fn n(&self) -> usize;
    /// `after · U · before |input⟩`, counted as one query.
    fn query(&self, before: &[Gate], after: &[Gate], input: &StateVector) -> Result<StateVector>;
    fn queries(&self) -> u64;
}

/// Black-box access to a secret circuit: inputs are chosen freely and outputs
/// come back as exact state vectors.
pub struct UnitaryOracle {
    secret: Circuit,
    queries: AtomicU64,
}

impl UnitaryOracle {
    pub fn new(secret: Circuit) -> Self {
        UnitaryOracle { secret, queries: AtomicU64::new(0) }
    }
}

impl QueryAccess for UnitaryOracle {
    fn n(&self) -> usize {
        self.secret.n
    }

    fn query(&self, before: &[Gate], after: &[Gate], input: &StateVector) -> Result<StateVector> {
        if input.n() != self.secret.n {
            return Err(Error::Config(format!("query input has {} qubits, oracle has {}", input.n(), self.secret.n)));
        }
        self.queries.fetch_add(1, Ordering::Relaxed);
        let mut s = input.clone();
        for g in before {
            s.apply_gate(&g.unitary, &g.support);
        }
        s.apply_circuit(&self.secret)?;
        for g in after {
            s.apply_gate(&g.unitary, &g.support);
        }
        Ok(s)
    }

    fn queries(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }
}

/// Classical shadows of a public key and nothing else.
pub struct ShadowAccess<'a> {
    shadows: &'a ShadowSet,
}

impl<'a> ShadowAccess<'a> {
    pub fn new(shadows: &'a ShadowSet) -> Self {
        ShadowAccess { shadows }
    }

    pub fn shadows(&self) -> &'a ShadowSet {
        self.shadows
    }

    /// Always zero: there is no query path from here.
    pub fn unitary_queries(&self) -> u64 {
        0
    }
}

/// Loss and gradient oracle for `ℓ = 1 − |⟨D|C⟩|²` against a hidden target.
pub struct OverlapOracle {
    target: StateVector,
    queries: AtomicU64,
}

impl OverlapOracle {
    pub fn new(target: StateVector) -> Self {
        OverlapOracle { target, queries: AtomicU64::new(0) }
    }

    pub fn n(&self) -> usize {
        self.target.n()
    }

    pub fn loss(&self, state: &StateVector) -> f64 {
        self.queries.fetch_add(1, Ordering::Relaxed);
        1.0 - self.target.fidelity(state)
    }

    /// Target handle for one adjoint gradient evaluation, counted as one query.
    pub(crate) fn gradient_query(&self) -> &StateVector {
        self.queries.fetch_add(1, Ordering::Relaxed);
        &self.target
    }

    pub fn queries(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }
}
