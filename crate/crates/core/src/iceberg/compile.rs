//! Logical gates to physical gates, and whole multi-block programs.

use super::encode::{arbitrary_gates, encoder_ft_gauge, encoder_ft_plus};
use super::{Frame, GaugeFix, IcebergBlock, Pauli};
use crate::bits::deposit;
use crate::circuit::{Circuit, EnsembleTag, Gate, GateLabel};
use crate::error::{Error, Result};
use crate::gates;
use crate::sim::StateVector;
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

/// Logical operations on the computational logicals of one block.
#[derive(Clone, Debug, PartialEq)]
pub enum LogicalGate {
    /// `X̄_i(θ) = exp(−iθ/2 X_t X_i)`.
    Rx(usize, f64),
    /// `Z̄_i(θ) = exp(−iθ/2 Z_b Z_i)`.
    Rz(usize, f64),
    Rxx(usize, usize, f64),
    Rzz(usize, usize, f64),
    /// `Z̄Z̄(−π/2)` followed by `Z̄(π/2)` on both qubits.
    Cz(usize, usize),
    /// `SWAP_{t,b} · ∏H`, with the swap done by relabelling roles.
    HadamardAll,
}

impl LogicalGate {
    /// Rotation decomposition of a one- or two-qubit logical label, in
    /// application order.
    pub fn from_label(label: &GateLabel, qubits: &[usize]) -> Result<Vec<LogicalGate>> {
        use LogicalGate::*;
        Ok(match (label, qubits) {
            (GateLabel::Identity, _) => Vec::new(),
            (GateLabel::Hadamard, &[q]) => vec![Rz(q, FRAC_PI_2), Rx(q, FRAC_PI_2), Rz(q, FRAC_PI_2)],
            (GateLabel::ZpXhalf(p), &[q]) => vec![Rx(q, FRAC_PI_2), Rz(q, PI * *p as f64 / 4.0)],
            (GateLabel::CZ, &[a, b]) => vec![Cz(a, b)],
            (GateLabel::Rxx(t), &[a, b]) => vec![Rxx(a, b, *t)],
            (GateLabel::Rzz(t), &[a, b]) => vec![Rzz(a, b, *t)],
            (l, q) => return Err(Error::Config(format!("unsupported logical gate {l:?} on {q:?}"))),
        })
    }
}

fn reduce(theta: f64) -> f64 {
    theta.rem_euclid(TAU)
}

fn pauli_gate(q: usize, p: char) -> Gate {
    Gate::with_matrix(GateLabel::Custom, vec![q], gates::pauli(p))
}

/// Rotation about `P_c P_q`; multiples of `π` become single-qubit Paulis.
fn rotation(c: usize, q: usize, theta: f64, axis: char, out: &mut Vec<Gate>) {
    let t = reduce(theta);
    if t.abs() < 1e-12 || (TAU - t).abs() < 1e-12 {
        return;
    }
    if (t - PI).abs() < 1e-12 {
        out.push(pauli_gate(c, axis));
        out.push(pauli_gate(q, axis));
        return;
    }
    let label = if axis == 'X' { GateLabel::Rxx(theta) } else { GateLabel::Rzz(theta) };
    out.push(Gate::new(label, vec![c, q]));
}

/// Physical gates on the block's local qubits for a set of logical gates,
/// in order. Successive `X̄`/`Z̄` rotations cycle through the top/bottom and
/// proxy carriers so that independent rotations can run in parallel.
pub fn compile_layer(block: &IcebergBlock, frame: &mut Frame, gates: &[LogicalGate]) -> Result<Vec<Gate>> {
    let (mut nx, mut nz) = (0usize, 0usize);
    let mut out = Vec::new();
    let k = block.k_logical;
    let data = |i: usize| -> Result<usize> {
        if i >= k {
            return Err(Error::Config(format!("logical index {i} out of range for k={k}")));
        }
        Ok(block.data_qubit(i))
    };
    for g in gates {
        let (xc, zc) = (block.x_carriers(*frame), block.z_carriers(*frame));
        match *g {
            LogicalGate::Rx(i, t) => {
                rotation(xc[nx % xc.len()], data(i)?, t, 'X', &mut out);
                nx += 1;
            }
            LogicalGate::Rz(i, t) => {
                rotation(zc[nz % zc.len()], data(i)?, t, 'Z', &mut out);
                nz += 1;
            }
            LogicalGate::Rxx(a, b, t) => rotation(data(a)?, data(b)?, t, 'X', &mut out),
            LogicalGate::Rzz(a, b, t) => rotation(data(a)?, data(b)?, t, 'Z', &mut out),
            LogicalGate::Cz(a, b) => {
                rotation(data(a)?, data(b)?, -FRAC_PI_2, 'Z', &mut out);
                for i in [a, b] {
                    rotation(zc[nz % zc.len()], data(i)?, FRAC_PI_2, 'Z', &mut out);
                    nz += 1;
                }
            }
            LogicalGate::HadamardAll => {
                out.extend((0..block.physical_count()).map(Gate::h));
                frame.swapped = !frame.swapped;
            }
        }
    }
    Ok(out)
}

/// Physical gates for one logical gate.
pub fn translate_logical(block: &IcebergBlock, frame: &mut Frame, gate: &LogicalGate) -> Result<Vec<Gate>> {
    compile_layer(block, frame, std::slice::from_ref(gate))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EncoderKind {
    Arbitrary,
    FtPlus,
    FtGauge,
}

#[derive(Clone, Debug)]
pub struct BlockLayout {
    pub block: IcebergBlock,
    pub offset: usize,
    /// Global index of the encoder's flag ancilla.
    pub flag: Option<usize>,
    pub encoder: EncoderKind,
    /// Roles at the end of the body.
    pub frame: Frame,
}

#[derive(Clone, Debug)]
pub struct PhysicalProgram {
    pub n_physical: usize,
    pub n_logical: usize,
    pub layouts: Vec<BlockLayout>,
    pub encoder: Circuit,
    pub body: Circuit,
    pub decoder: Circuit,
    /// Terminal stabilizer checks of every block, on global qubits.
    pub checks: Vec<Pauli>,
    /// Flag ancillas that must read `|0⟩`.
    pub flags: Vec<usize>,
    /// Physical qubit of each logical qubit.
    pub logical_map: Vec<usize>,
    /// Physical pairs of every transversal inter-block CZ.
    pub transversal: Vec<(usize, usize)>,
    pub logical_two_qubit: usize,
}

impl PhysicalProgram {
    /// Data and top/bottom qubits, excluding flag ancillas.
    pub fn code_qubits(&self) -> usize {
        self.layouts.iter().map(|l| l.block.physical_count()).sum()
    }

    /// Encoder followed by the body: the part that runs under noise.
    pub fn noisy_circuit(&self) -> Circuit {
        let mut c = self.encoder.clone();
        for layer in &self.body.layers {
            c.push_layer(layer.clone());
        }
        c
    }

    pub fn two_qubit_count(&self) -> usize {
        self.encoder.two_qubit_count() + self.body.two_qubit_count()
    }

    pub fn two_qubit_depth(&self) -> usize {
        self.encoder.two_qubit_depth() + self.body.two_qubit_depth()
    }

    pub fn max_check_weight(&self) -> usize {
        self.checks.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Decode and read the logical register; fails if the state leaves the
    /// code space.
    pub fn decode(&self, encoded: &StateVector) -> Result<StateVector> {
        let mut s = encoded.clone();
        s.apply_circuit(&self.decoder)?;
        let amps = (0..1usize << self.n_logical).map(|x| s.amplitude(deposit(x, &self.logical_map))).collect();
        StateVector::from_amplitudes(self.n_logical, amps)
    }
}

fn merge_layers(into: &mut Circuit, local: &Circuit, map: &dyn Fn(usize) -> usize) {
    for (l, layer) in local.layers.iter().enumerate() {
        while into.layers.len() <= l {
            into.push_layer(Vec::new());
        }
        for g in layer {
            let mut g = g.clone();
            g.support = g.support.iter().map(|&q| map(q)).collect();
            g.layer = l;
            into.layers[l].push(g);
        }
    }
}

fn global(offset: usize, gates: Vec<Gate>, into: &mut Circuit) {
    for mut g in gates {
        g.support.iter_mut().for_each(|q| *q += offset);
        into.push_asap(g);
    }
}

/// Encode each block of a logical circuit in its own Iceberg block and
/// couple blocks with transversal CZ gates. A leading all-qubit Hadamard
/// layer is absorbed into fault-tolerant `|+_L⟩` encoders when the block's
/// gauge layout has one.
pub fn assemble(blocks: &[IcebergBlock], logical: &Circuit) -> Result<PhysicalProgram> {
    let n_logical: usize = blocks.iter().map(|b| b.k_logical).sum();
    if blocks.is_empty() || logical.n != n_logical {
        return Err(Error::Config(format!("{} logical qubits do not fill blocks holding {n_logical}", logical.n)));
    }
    let mut owner = Vec::with_capacity(n_logical);
    for (bi, b) in blocks.iter().enumerate() {
        owner.extend((0..b.k_logical).map(|i| (bi, i)));
    }
    let first_h = logical
        .layers
        .first()
        .is_some_and(|l| l.len() == n_logical && l.iter().all(|g| g.label == GateLabel::Hadamard));

    let mut layouts = Vec::new();
    let mut offset = 0;
    for b in blocks {
        let k = b.parent_logicals();
        let ft_gauge = b.gauge == [(k - 2, GaugeFix::Xplus), (k - 1, GaugeFix::Zzero)];
        let encoder = match (first_h, b.gauge.is_empty(), ft_gauge) {
            (true, true, _) => EncoderKind::FtPlus,
            (true, false, true) => EncoderKind::FtGauge,
            _ => EncoderKind::Arbitrary,
        };
        layouts.push(BlockLayout { block: b.clone(), offset, flag: None, encoder, frame: Frame::default() });
        offset += b.physical_count();
    }
    let mut n_physical = offset;
    for l in layouts.iter_mut().filter(|l| l.encoder != EncoderKind::Arbitrary) {
        l.flag = Some(n_physical);
        n_physical += 1;
    }

    let mut encoder = Circuit::new(n_physical, EnsembleTag::Custom, logical.seed);
    for l in &layouts {
        let k = l.block.parent_logicals();
        let local = match l.encoder {
            EncoderKind::FtPlus => encoder_ft_plus(k)?,
            EncoderKind::FtGauge => encoder_ft_gauge(k)?,
            EncoderKind::Arbitrary => {
                let mut c = Circuit::new(k + 2, EnsembleTag::Custom, 0);
                for &(g, fix) in &l.block.gauge {
                    if fix == GaugeFix::Xplus {
                        c.push_asap(Gate::h(1 + g));
                    }
                }
                for g in arbitrary_gates(k, 0, k + 1) {
                    c.push_asap(g);
                }
                c
            }
        };
        let (off, flag) = (l.offset, l.flag);
        merge_layers(&mut encoder, &local, &|q| if q == k + 2 { flag.expect("FT encoders carry a flag") } else { off + q });
    }

    let mut body = Circuit::new(n_physical, EnsembleTag::Custom, logical.seed);
    let mut transversal = Vec::new();
    for (li, layer) in logical.layers.iter().enumerate() {
        let mut per_block: BTreeMap<usize, Vec<&Gate>> = BTreeMap::new();
        let mut cross: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
        for g in layer {
            let bs: Vec<usize> = g.support.iter().map(|&q| owner[q].0).collect();
            if li == 0 && first_h && layouts[bs[0]].encoder != EncoderKind::Arbitrary {
                continue;
            }
            match bs.as_slice() {
                [b0, b1] if b0 != b1 => {
                    if g.label != GateLabel::CZ {
                        return Err(Error::Config(format!("inter-block gate {:?} is not a CZ", g.label)));
                    }
                    let (a, b) = (g.support[0], g.support[1]);
                    let (pa, pb) = if b0 < b1 { (a, b) } else { (b, a) };
                    cross.entry((*b0.min(b1), *b0.max(b1))).or_default().push((owner[pa].1, owner[pb].1));
                }
                _ => per_block.entry(bs[0]).or_default().push(g),
            }
        }
        for (bi, gs) in per_block {
            let l = &mut layouts[bi];
            let k = l.block.k_logical;
            let logical_gates: Vec<Vec<LogicalGate>> = if gs.len() == k && gs.iter().all(|g| g.label == GateLabel::Hadamard) {
                vec![vec![LogicalGate::HadamardAll]]
            } else {
                gs.iter()
                    .map(|g| LogicalGate::from_label(&g.label, &g.support.iter().map(|&q| owner[q].1).collect::<Vec<_>>()))
                    .collect::<Result<_>>()?
            };
            let phases = logical_gates.iter().map(Vec::len).max().unwrap_or(0);
            for ph in 0..phases {
                let step: Vec<LogicalGate> = logical_gates.iter().filter_map(|v| v.get(ph).cloned()).collect();
                let phys = compile_layer(&l.block, &mut l.frame, &step)?;
                global(l.offset, phys, &mut body);
            }
        }
        for ((ba, bb), pairs) in cross {
            let (la, lb) = (&layouts[ba], &layouts[bb]);
            let ka = la.block.k_logical;
            let mut hit_a = vec![false; ka];
            let mut hit_b = vec![false; lb.block.k_logical];
            for &(i, j) in &pairs {
                hit_a[i] = true;
                hit_b[j] = true;
            }
            if pairs.len() != ka || lb.block.k_logical != ka || !hit_a.iter().chain(&hit_b).all(|&h| h) {
                return Err(Error::Config(format!("inter-block CZs between blocks {ba} and {bb} do not pair every logical")));
            }
            let (xa, za) = (la.block.x_carriers(la.frame), la.block.z_carriers(la.frame));
            let (xb, zb) = (lb.block.x_carriers(lb.frame), lb.block.z_carriers(lb.frame));
            if xa.len() != zb.len() || za.len() != xb.len() {
                return Err(Error::Config(format!("blocks {ba} and {bb} have mismatched proxy counts")));
            }
            let mut phys: Vec<(usize, usize)> = xa.iter().zip(&zb).chain(za.iter().zip(&xb)).map(|(&a, &b)| (a, b)).collect();
            phys.extend(pairs.iter().map(|&(i, j)| (la.block.data_qubit(i), lb.block.data_qubit(j))));
            for (a, b) in phys {
                let (ga, gb) = (la.offset + a, lb.offset + b);
                body.push_asap(Gate::cz(ga, gb));
                transversal.push((ga, gb));
            }
        }
    }

    let mut decoder = Circuit::new(n_physical, EnsembleTag::Custom, logical.seed);
    let mut checks = Vec::new();
    for l in &layouts {
        let k = l.block.parent_logicals();
        let (top, bottom) = (l.frame.top(&l.block), l.frame.bottom(&l.block));
        let mut gs: Vec<Gate> = arbitrary_gates(k, top, bottom).iter().rev().map(Gate::dagger).collect();
        let x_gauges = l.block.x_carriers(l.frame).into_iter().skip(1);
        gs.extend(x_gauges.map(Gate::h));
        global(l.offset, gs, &mut decoder);
        checks.extend(
            l.block.stabilizers(l.frame).into_iter().map(|p| p.into_iter().map(|(q, c)| (l.offset + q, c)).collect::<Pauli>()),
        );
    }
    let logical_map = owner.iter().map(|&(b, i)| layouts[b].offset + layouts[b].block.data_qubit(i)).collect();
    Ok(PhysicalProgram {
        n_physical,
        n_logical,
        flags: layouts.iter().filter_map(|l| l.flag).collect(),
        layouts,
        encoder,
        body,
        decoder,
        checks,
        logical_map,
        transversal,
        logical_two_qubit: logical.two_qubit_count(),
    })
}
