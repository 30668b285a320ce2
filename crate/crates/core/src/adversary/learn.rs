//! Proper light-cone learning: peel pivots from the front (and the back),
//! then fold the leftover one-qubit residual into the learned gates.

use super::access::QueryAccess;
use super::invert::{
    accepted_trials, sampled, unitary_from_images, InvertConfig, Pivot, PivotChannel, Residual, Tomography, Trials, M2, M4,
};
use crate::circuit::{compress, decompress, pivot_candidates, Circuit, Side};
use crate::error::Result;
use crate::gates::{self, Mat, C64, ONE};
use rand::Rng;
use crate::rng::Stream;
use crate::sim::{self, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    ForwardOnly,
    Alternating,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Learned {
    Circuit(Circuit),
    /// Learning stopped at inversion `step`; `inverted` gates had been peeled.
    PartialFailure { reason: String, step: usize, inverted: usize },
}

#[derive(Clone, Debug)]
pub struct LearnOutcome {
    pub result: Learned,
    pub queries_used: u64,
    pub sides: Vec<Side>,
}

impl LearnOutcome {
    pub fn circuit(&self) -> Option<&Circuit> {
        match &self.result {
            Learned::Circuit(c) => Some(c),
            Learned::PartialFailure { .. } => None,
        }
    }

    pub fn is_partial(&self) -> bool {
        matches!(self.result, Learned::PartialFailure { .. })
    }
}

/// `|⟨0|C′† C|0⟩|²`, evaluated by the harness rather than the attacker.
pub fn fidelity_vs_target(learned: &Circuit, target: &Circuit) -> Result<f64> {
    Ok(sim::simulate(learned)?.fidelity(&sim::simulate(target)?))
}

fn other(side: Side) -> Side {
    match side {
        Side::Front => Side::Back,
        Side::Back => Side::Front,
    }
}

/// Accepted trials kept per pivot, distinct up to a local product.
const BRANCH_LIMIT: usize = 4;
/// Pivots expanded before the search gives up.
const NODE_BUDGET: usize = 256;

struct Node<'a, A: QueryAccess> {
    res: Residual<'a, A>,
    remaining: Vec<usize>,
    learned: Vec<Option<Mat>>,
    order: Vec<(usize, Side)>,
    side: Side,
}

impl<A: QueryAccess> Clone for Node<'_, A> {
    fn clone(&self) -> Self {
        Node {
            res: self.res.clone(),
            remaining: self.remaining.clone(),
            learned: self.learned.clone(),
            order: self.order.clone(),
            side: self.side,
        }
    }
}

/// Learn a circuit with the layout of `template` from query access to its
/// unitary. Only the template's supports are read. Pivots are peeled depth
/// first; when several trials pass a pivot, later dead ends backtrack to the
/// next one.
pub fn forward_learn<A: QueryAccess>(
    oracle: &A,
    template: &Circuit,
    trials: &Trials,
    direction: Direction,
    cfg: &InvertConfig,
) -> Result<LearnOutcome> {
    let start = oracle.queries();
    let shape = compress(template);
    let supports: Vec<Vec<usize>> = shape.gates().map(|g| g.support.clone()).collect();
    let root = Node {
        res: Residual::new(oracle),
        remaining: (0..supports.len()).filter(|&i| supports[i].len() >= 2).collect(),
        learned: vec![None; supports.len()],
        order: Vec::new(),
        side: Side::Front,
    };
    let mut stack = vec![root];
    let mut worst: Option<(String, Vec<(usize, Side)>)> = None;
    let mut fail = |reason: String, order: &[(usize, Side)]| {
        if worst.as_ref().is_none_or(|w| order.len() > w.1.len()) {
            worst = Some((reason, order.to_vec()));
        }
    };
    let mut expanded = 0;
    while let Some(mut node) = stack.pop() {
        if node.remaining.is_empty() {
            match finish(&node, &shape, &supports, template, cfg)? {
                Ok(circuit) => {
                    return Ok(LearnOutcome {
                        result: Learned::Circuit(circuit),
                        queries_used: oracle.queries() - start,
                        sides: node.order.iter().map(|o| o.1).collect(),
                    })
                }
                Err(reason) => {
                    fail(reason, &node.order);
                    continue;
                }
            }
        }
        if expanded == NODE_BUDGET {
            fail(format!("search budget of {NODE_BUDGET} pivots exhausted"), &node.order);
            break;
        }
        expanded += 1;
        let sup: Vec<&[usize]> = node.remaining.iter().map(|&i| supports[i].as_slice()).collect();
        let mut cands = pivot_candidates(shape.n, &sup, node.side);
        if cands.is_empty() && direction == Direction::Alternating {
            node.side = other(node.side);
            cands = pivot_candidates(shape.n, &sup, node.side);
        }
        let Some(index) = cands.first().map(|c| c.index) else {
            fail("Warning, only partial inversion possible: no pivot".into(), &node.order);
            continue;
        };
        let side = node.side;
        let gi = node.remaining[index];
        if supports[gi].len() > 2 {
            return Err(crate::Error::Config(format!(
                "light-cone learning inverts two-qubit pivots, found support {:?}",
                supports[gi]
            )));
        }
        let support = [supports[gi][0], supports[gi][1]];
        let same: Vec<_> = cands.into_iter().filter(|c| c.index == index).collect();
        let pivot = Pivot::from_candidates(side, support, &same, shape.n);
        let ch = PivotChannel::build(&node.res, &pivot, cfg.tomography)?;
        let set = match side {
            Side::Front => &trials.front,
            Side::Back => &trials.back,
        };
        let found = accepted_trials(&ch, set, cfg, BRANCH_LIMIT);
        if found.is_empty() {
            fail(format!("no trial gate inverts the pivot on {support:?}"), &node.order);
            continue;
        }
        let mut children = Vec::new();
        for t in found {
            let mut child = node.clone();
            child.res.attach_inverse(side, support, &t);
            let drift = PivotChannel::build(&child.res, &pivot, cfg.tomography)?.influence(
                &M4::identity(),
                cfg.tomography,
                Stream::new(gi as u64),
                f64::INFINITY,
            );
            if drift > 10.0 * cfg.eps_f {
                fail(format!("residual influence {drift:.3e} drifted past 10 eps_f"), &node.order);
                continue;
            }
            child.learned[gi] = Some(t);
            child.order.push((gi, side));
            child.remaining.remove(index);
            children.push(child);
        }
        stack.extend(children.into_iter().rev());
    }
    let (reason, order) = worst.expect("search records a failure before giving up");
    Ok(LearnOutcome {
        result: Learned::PartialFailure { reason, step: order.len(), inverted: order.len() },
        queries_used: oracle.queries() - start,
        sides: order.iter().map(|o| o.1).collect(),
    })
}

/// Learn the leftover locals, check the residual is their product, and fold
/// them into the learned gates.
fn finish<A: QueryAccess>(
    node: &Node<'_, A>,
    shape: &Circuit,
    supports: &[Vec<usize>],
    template: &Circuit,
    cfg: &InvertConfig,
) -> Result<std::result::Result<Circuit, String>> {
    let (res, order) = (&node.res, &node.order);
    let locals = residual_locals(res, cfg)?;
    if !residual_is_product(res, &locals, cfg)? {
        return Ok(Err("residual is not a product of one-qubit unitaries".into()));
    }
    let mut out = shape.clone();
    let mut slots: Vec<Mat> = shape.gates().map(|g| gates::identity(1 << g.support.len())).collect();
    for (i, m) in node.learned.iter().enumerate() {
        if let Some(m) = m {
            slots[i] = m.clone();
        }
    }
    for (q, l) in locals.iter().enumerate() {
        let lm = Mat::from_fn(2, 2, |r, c| l[(r, c)]);
        let front = order.iter().rev().find(|(i, s)| *s == Side::Front && supports[*i].contains(&q));
        let back = order.iter().rev().find(|(i, s)| *s == Side::Back && supports[*i].contains(&q));
        if let Some(&(i, _)) = front {
            slots[i] = embed_local(&lm, supports[i].iter().position(|&x| x == q).unwrap()) * &slots[i];
        } else if let Some(&(i, _)) = back {
            slots[i] = &slots[i] * embed_local(&lm, supports[i].iter().position(|&x| x == q).unwrap());
        } else if let Some(i) = supports.iter().position(|s| s == &[q]) {
            slots[i] = lm;
        } else if !gates::equal_up_to_phase(&lm, &gates::identity(2), 1e-6) {
            return Ok(Err(format!("wire {q} carries a one-qubit residual with no gate to absorb it")));
        }
    }
    let mut k = 0;
    for layer in out.layers.iter_mut() {
        for g in layer.iter_mut() {
            g.unitary = slots[k].clone();
            g.label = crate::circuit::GateLabel::Custom;
            k += 1;
        }
    }
    Ok(Ok(decompress(&out, template)?))
}

fn embed_local(l: &Mat, pos: usize) -> Mat {
    let id = gates::identity(2);
    if pos == 0 {
        gates::kron(&id, l)
    } else {
        gates::kron(l, &id)
    }
}

/// Per-wire one-qubit unitaries of a residual that acts as a product, from
/// its images of `|0…0⟩` and `|+…+⟩`.
fn residual_locals<A: QueryAccess>(res: &Residual<'_, A>, cfg: &InvertConfig) -> Result<Vec<M2>> {
    let n = res.n();
    let zero = res.query(&StateVector::zero(n)?)?;
    let h = C64::new((0.5f64).powf(n as f64 / 2.0), 0.0);
    let plus = res.query(&StateVector::from_amplitudes(n, vec![h; 1 << n])?)?;
    let tomo = |s: &StateVector, q: usize| -> M2 {
        let r = s.reduced_density(&[q]);
        let m = M2::from_fn(|i, j| r[(i, j)]);
        match cfg.tomography {
            Tomography::Exact => m,
            Tomography::Sampled { eps_t, seed } => {
                let shots = (1.0 / (eps_t * eps_t)).ceil() as u64;
                let e = sampled(&r, shots, Stream::new(seed).child("locals").split(q as u64));
                M2::from_fn(|i, j| e[(i, j)])
            }
        }
    };
    Ok((0..n).map(|q| unitary_from_images(&tomo(&zero, q), &tomo(&plus, q))).collect())
}

/// Checks the learned locals against the residual on a random product input.
/// Sampled mode compares per-wire states within the tomography tolerance.
fn residual_is_product<A: QueryAccess>(res: &Residual<'_, A>, locals: &[M2], cfg: &InvertConfig) -> Result<bool> {
    let n = res.n();
    let mut rng = cfg.stream().child("product-check").rng();
    let wires: Vec<[C64; 2]> = (0..n)
        .map(|_| {
            let (a, b, c, d): (f64, f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen(), rng.gen());
            let v = [C64::new(a - 0.5, b - 0.5), C64::new(c - 0.5, d - 0.5)];
            let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
            [v[0] / norm, v[1] / norm]
        })
        .collect();
    let mut input = vec![ONE];
    let mut expect = vec![ONE];
    for q in 0..n {
        let w = wires[q];
        let lw = [locals[q][(0, 0)] * w[0] + locals[q][(0, 1)] * w[1], locals[q][(1, 0)] * w[0] + locals[q][(1, 1)] * w[1]];
        input = w.iter().flat_map(|&x| input.iter().map(move |y| x * y)).collect();
        expect = lw.iter().flat_map(|&x| expect.iter().map(move |y| x * y)).collect();
    }
    let out = res.query(&StateVector::from_amplitudes(n, input)?)?;
    let expect = StateVector::from_amplitudes(n, expect)?;
    Ok(match cfg.tomography {
        Tomography::Exact => out.fidelity(&expect) > 1.0 - 1e-6,
        Tomography::Sampled { .. } => (0..n).all(|q| {
            (out.reduced_density(&[q]) - expect.reduced_density(&[q])).norm() < 10.0 * cfg.eps_f
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{clifford_group, UnitaryOracle};
    use crate::circuit::{
        append_digit_layer, brickwork, build_hypercube_circuit, clifford_family, instantiate, EnsembleTag, Gate,
        GateFamily, GateLabel,
    };

    fn family_mats(f: &GateFamily) -> Vec<Mat> {
        match f {
            GateFamily::Finite(items) => items.iter().map(|(_, m)| m.clone()).collect(),
            _ => unreachable!(),
        }
    }

    fn graph_equal(a: &Circuit, b: &Circuit) -> bool {
        a.layers.len() == b.layers.len()
            && a.layers.iter().zip(&b.layers).all(|(x, y)| {
                x.len() == y.len() && x.iter().zip(y).all(|(g, h)| g.support == h.support)
            })
    }

    /// Four-qubit layout where the front runs out of pivots but the back does not.
    pub(crate) fn alternation_fixture(seed: u64) -> Circuit {
        let mut c = Circuit::new(4, EnsembleTag::Custom, seed);
        for (a, b) in [(2, 3), (1, 3), (1, 2), (0, 1), (1, 3)] {
            c.push_asap(Gate::new(GateLabel::Identity, vec![a, b]));
        }
        instantiate(&c, &GateFamily::Clifford, seed)
    }

    #[test]
    fn hypercube_with_extra_layer_fails_at_step_zero() {
        let mut c = build_hypercube_circuit(2, 3).unwrap();
        append_digit_layer(&mut c, 2, 0);
        let secret = instantiate(&c, &GateFamily::Clifford, 4);
        let oracle = UnitaryOracle::new(secret);
        for dir in [Direction::ForwardOnly, Direction::Alternating] {
            let out = forward_learn(&oracle, &c, &Trials::clifford(), dir, &InvertConfig::exact()).unwrap();
            match out.result {
                Learned::PartialFailure { step, ref reason, .. } => {
                    assert_eq!(step, 0);
                    assert!(reason.contains("partial inversion"));
                }
                _ => panic!("expected partial failure"),
            }
        }
        assert_eq!(oracle.queries(), 0);
    }

    #[test]
    fn brickwork_over_finite_family_is_learned_properly() {
        let fam = clifford_family(24, 7);
        let trials = Trials::family_with_locals(&family_mats(&fam));
        let mut good = 0;
        for seed in 0..20 {
            let secret = brickwork(8, 3, &fam, seed);
            let oracle = UnitaryOracle::new(secret.clone());
            let out = forward_learn(&oracle, &secret, &trials, Direction::ForwardOnly, &InvertConfig::exact()).unwrap();
            if let Some(c) = out.circuit() {
                assert!(graph_equal(c, &secret));
                if fidelity_vs_target(c, &secret).unwrap() >= 0.99 {
                    good += 1;
                }
            }
        }
        assert!(good >= 18, "{good}/20");
    }

    #[test]
    fn alternation_fixture_needs_both_sides() {
        let secret = alternation_fixture(3);
        let oracle = UnitaryOracle::new(secret.clone());
        let trials = Trials::clifford();
        let fwd = forward_learn(&oracle, &secret, &trials, Direction::ForwardOnly, &InvertConfig::exact()).unwrap();
        assert!(fwd.is_partial());
        let alt = forward_learn(&oracle, &secret, &trials, Direction::Alternating, &InvertConfig::exact()).unwrap();
        let c = alt.circuit().unwrap_or_else(|| panic!("{:?} {:?}", alt.result, alt.sides));
        assert!(alt.sides.contains(&Side::Back));
        assert!(graph_equal(c, &secret));
        assert!(fidelity_vs_target(c, &secret).unwrap() > 1.0 - 1e-9);
        assert!(!clifford_group(1).is_empty());
    }

    #[test]
    fn haar_gates_are_learned_by_continuous_search() {
        let secret = brickwork(4, 2, &GateFamily::Haar, 5);
        let oracle = UnitaryOracle::new(secret.clone());
        let cfg = InvertConfig { eps_f: 1e-4, ..InvertConfig::exact() };
        let out = forward_learn(&oracle, &secret, &Trials::continuous(), Direction::ForwardOnly, &cfg).unwrap();
        let c = out.circuit().expect("learned");
        assert!(fidelity_vs_target(c, &secret).unwrap() > 0.999);
    }

    #[test]
    fn every_stage_pivot_terminates_within_gate_count() {
        let fam = clifford_family(24, 1);
        let secret = brickwork(6, 3, &fam, 2);
        let oracle = UnitaryOracle::new(secret.clone());
        let out = forward_learn(&oracle, &secret, &Trials::family_with_locals(&family_mats(&fam)), Direction::Alternating, &InvertConfig::exact())
            .unwrap();
        assert!(out.sides.len() <= secret.gate_count());
        assert!(out.queries_used > 0);
    }
}
