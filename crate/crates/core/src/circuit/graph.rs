//! Light-cone analysis on the gate graph: causal sets, outer gates, pivots,
//! and same-support compression.

use super::{Circuit, EnsembleTag, Gate, GateLabel};
use crate::bits::QubitSet;
use crate::error::{Error, Result};
use crate::gates::Mat;
#[cfg(test)]
use crate::gates;

#[derive(Clone, Debug, PartialEq)]
pub struct CausalSets {
    /// `forward[q][ℓ]`: qubits reachable from input `q` after the first `ℓ` layers.
    pub forward: Vec<Vec<QubitSet>>,
    /// `backward[q][ℓ]`: inputs that reach output `q` through the last `ℓ` layers.
    pub backward: Vec<Vec<QubitSet>>,
}

impl CausalSets {
    pub fn forward_full(&self, q: usize) -> &QubitSet {
        self.forward[q].last().expect("prefix list is never empty")
    }

    pub fn backward_full(&self, q: usize) -> &QubitSet {
        self.backward[q].last().expect("prefix list is never empty")
    }
}

fn spread(set: &mut QubitSet, support: &[usize]) {
    if support.len() > 1 && set.intersects(support) {
        for &q in support {
            set.insert(q);
        }
    }
}

pub fn causal_sets(c: &Circuit) -> CausalSets {
    let sweep = |order: &mut dyn Iterator<Item = &Vec<Gate>>| -> Vec<Vec<QubitSet>> {
        let layers: Vec<&Vec<Gate>> = order.collect();
        (0..c.n)
            .map(|q| {
                let mut cur = QubitSet::singleton(c.n, q);
                let mut prefixes = vec![cur.clone()];
                for layer in &layers {
                    let before = cur.clone();
                    for g in layer.iter() {
                        if before.intersects(&g.support) {
                            spread(&mut cur, &g.support);
                        }
                    }
                    prefixes.push(cur.clone());
                }
                prefixes
            })
            .collect()
    };
    CausalSets {
        forward: sweep(&mut c.layers.iter()),
        backward: sweep(&mut c.layers.iter().rev()),
    }
}

/// Inputs reachable from `q` over gates in time order, skipping gate `skip`.
pub fn forward_reach(n: usize, supports: &[&[usize]], q: usize, skip: Option<usize>) -> QubitSet {
    let mut s = QubitSet::singleton(n, q);
    for (i, sup) in supports.iter().enumerate() {
        if Some(i) != skip {
            spread(&mut s, sup);
        }
    }
    s
}

/// Inputs that influence output `q`, skipping gate `skip`.
pub fn backward_reach(n: usize, supports: &[&[usize]], q: usize, skip: Option<usize>) -> QubitSet {
    let mut s = QubitSet::singleton(n, q);
    for (i, sup) in supports.iter().enumerate().rev() {
        if Some(i) != skip {
            spread(&mut s, sup);
        }
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Front,
    Back,
}

/// Multi-qubit gates that are first (front) or last (back) on every wire they touch.
pub fn outer_gates(n: usize, supports: &[&[usize]], side: Side) -> Vec<usize> {
    let mut owner: Vec<Option<usize>> = vec![None; n];
    let order: Box<dyn Iterator<Item = usize>> = match side {
        Side::Front => Box::new(0..supports.len()),
        Side::Back => Box::new((0..supports.len()).rev()),
    };
    for i in order {
        if supports[i].len() < 2 {
            continue;
        }
        for &q in supports[i] {
            owner[q].get_or_insert(i);
        }
    }
    let mut out: Vec<usize> = (0..supports.len())
        .filter(|&i| supports[i].len() >= 2 && supports[i].iter().all(|&q| owner[q] == Some(i)))
        .collect();
    out.sort_unstable();
    out
}

/// A pivot gate with one of its boundary qubits and the qubits cut off by removing it.
#[derive(Clone, Debug, PartialEq)]
pub struct PivotCandidate {
    pub index: usize,
    /// Front: the input qubit `q ∈ ∂G`. Back: the output qubit `q′ ∈ ∂G`.
    pub anchor: usize,
    /// Front: outputs `q′` reachable only through `G`. Back: inputs `q` reaching `q′` only through `G`.
    pub cut: QubitSet,
    /// The other boundary qubit of `G`.
    pub partner: usize,
}

pub fn pivot_candidates(n: usize, supports: &[&[usize]], side: Side) -> Vec<PivotCandidate> {
    let reach = match side {
        Side::Front => forward_reach,
        Side::Back => backward_reach,
    };
    let mut out = Vec::new();
    for i in outer_gates(n, supports, side) {
        for &q in supports[i] {
            let cut = reach(n, supports, q, None).difference(&reach(n, supports, q, Some(i)));
            if !cut.is_empty() {
                let partner = *supports[i].iter().find(|&&x| x != q).expect("multi-qubit gate");
                out.push(PivotCandidate { index: i, anchor: q, cut, partner });
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GateRef {
    pub layer: usize,
    pub index: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PivotReport {
    pub gate: Option<GateRef>,
    pub pivot_pair: Option<(usize, usize)>,
    pub side: Side,
    pub exists: bool,
}

pub fn find_pivot(c: &Circuit, side: Side) -> PivotReport {
    let refs: Vec<(GateRef, &[usize])> = c
        .layers
        .iter()
        .enumerate()
        .flat_map(|(l, layer)| {
            layer.iter().enumerate().map(move |(i, g)| (GateRef { layer: l, index: i }, g.support.as_slice()))
        })
        .collect();
    let supports: Vec<&[usize]> = refs.iter().map(|r| r.1).collect();
    match pivot_candidates(c.n, &supports, side).into_iter().next() {
        Some(p) => {
            let other = p.cut.iter().next().expect("non-empty cut");
            let pair = match side {
                Side::Front => (p.anchor, other),
                Side::Back => (other, p.anchor),
            };
            PivotReport { gate: Some(refs[p.index].0), pivot_pair: Some(pair), side, exists: true }
        }
        None => PivotReport { gate: None, pivot_pair: None, side, exists: false },
    }
}

/// Matrix of `m` (written on support `from`) re-expressed on the ordering `to`.
fn reorder(m: &Mat, from: &[usize], to: &[usize]) -> Mat {
    if from == to {
        return m.clone();
    }
    let pos: Vec<usize> = to.iter().map(|q| from.iter().position(|x| x == q).expect("same support set")).collect();
    let map = |i: usize| pos.iter().enumerate().fold(0, |acc, (j, &p)| acc | ((i >> j & 1) << p));
    Mat::from_fn(m.nrows(), m.ncols(), |r, c| m[(map(r), map(c))])
}

fn same_set(a: &[usize], b: &[usize]) -> bool {
    a.len() == b.len() && a.iter().all(|q| b.contains(q))
}

/// Compressed circuit plus, for each output gate (time order), the time-order
/// indices of the input gates merged into it.
fn compress_with_groups(c: &Circuit) -> (Circuit, Vec<Vec<usize>>) {
    let mut merged: Vec<Gate> = Vec::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut last: Vec<Option<usize>> = vec![None; c.n];
    for (t, g) in c.gates().enumerate() {
        let prev = last[g.support[0]];
        let consecutive = prev.is_some_and(|h| {
            same_set(&merged[h].support, &g.support) && g.support.iter().all(|&q| last[q] == Some(h))
        });
        if let (true, Some(h)) = (consecutive, prev) {
            let aligned = reorder(&g.unitary, &g.support, &merged[h].support);
            merged[h].unitary = aligned * &merged[h].unitary;
            merged[h].label = GateLabel::Custom;
            groups[h].push(t);
        } else {
            for &q in &g.support {
                last[q] = Some(merged.len());
            }
            merged.push(g.clone());
            groups.push(vec![t]);
        }
    }
    let mut out = Circuit::new(c.n, c.ensemble, c.seed);
    out.layers = vec![Vec::new(); c.layers.len()];
    let mut order: Vec<(usize, Gate, Vec<usize>)> =
        merged.into_iter().zip(groups).enumerate().map(|(i, (g, grp))| (i, g, grp)).collect();
    order.sort_by_key(|(i, g, _)| (g.layer, *i));
    let mut groups_out = Vec::new();
    for (_, g, grp) in order {
        out.layers[g.layer].push(g);
        groups_out.push(grp);
    }
    (out, groups_out)
}

pub fn compress(c: &Circuit) -> Circuit {
    compress_with_groups(c).0
}

/// Spread the gates of `learned` (laid out like `compress(template)`) back over
/// the template's layers: each composite lands on the first gate of its run and
/// the rest become identities.
pub fn decompress(learned: &Circuit, template: &Circuit) -> Result<Circuit> {
    let (shape, groups) = compress_with_groups(template);
    let layout = |c: &Circuit| -> Vec<Vec<Vec<usize>>> {
        c.layers.iter().map(|l| l.iter().map(|g| g.support.clone()).collect()).collect()
    };
    if learned.n != template.n || layout(learned) != layout(&shape) {
        return Err(Error::Structure("learned circuit does not match the compressed template layout".into()));
    }
    let originals: Vec<&Gate> = template.gates().collect();
    let mut slots: Vec<Option<Gate>> = vec![None; originals.len()];
    for (g, grp) in learned.gates().zip(&groups) {
        for (k, &t) in grp.iter().enumerate() {
            let o = originals[t];
            let gate = if k == 0 {
                Gate::with_matrix(g.label.clone(), o.support.clone(), reorder(&g.unitary, &g.support, &o.support))
            } else {
                Gate::new(GateLabel::Identity, o.support.clone())
            };
            slots[t] = Some(Gate { layer: o.layer, ..gate });
        }
    }
    let mut out = Circuit::new(template.n, EnsembleTag::Custom, learned.seed);
    out.layers = vec![Vec::new(); template.layers.len()];
    for g in slots.into_iter().map(|s| s.expect("every template gate is covered")) {
        out.layers[g.layer].push(g);
    }
    Ok(out)
}
