//! Public-key generation: classical shadows of a lab state.

use crate::bits::{parse_bitstring, to_bitstring};
use crate::circuit::Circuit;
use crate::error::{parse_err, Error, Result};
use crate::gates::{self, Mat};
use crate::rng::{Rng, Stream};
use crate::sim::{random_clifford, CliffordOp, LabSample, LabState, StateVector};
use rand::Rng as _;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    Pauli,
    Clifford,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Pauli => "pauli",
            Rule::Clifford => "clifford",
        }
    }

    pub fn from_name(s: &str) -> Option<Rule> {
        match s {
            "pauli" => Some(Rule::Pauli),
            "clifford" => Some(Rule::Clifford),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Setting {
    /// One of `X`, `Y`, `Z` per measured qubit.
    Pauli(Vec<char>),
    Clifford(CliffordOp),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShadowRecord {
    pub subset: Vec<usize>,
    pub setting: Setting,
    /// Bit `q` holds the outcome of qubit `q`.
    pub outcome: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShadowSet {
    pub n: usize,
    pub m: usize,
    pub rule: Rule,
    pub records: Vec<ShadowRecord>,
    pub master_seed: u64,
    pub circuit_fingerprint: Option<String>,
}

impl ShadowSet {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Hex SHA-256 of the serialized circuit.
pub fn fingerprint(c: &Circuit) -> String {
    hex::encode(Sha256::digest(crate::circuit::serialize(c).as_bytes()))
}

/// Rotation taking the `+1` eigenvector of `basis` to `|0⟩`.
pub fn basis_rotation(basis: char) -> Mat {
    match basis {
        'X' => gates::hadamard(),
        'Y' => gates::hadamard() * gates::phase_sdg(),
        _ => gates::identity(2),
    }
}

fn random_subset(n: usize, m: usize, rng: &mut Rng) -> Vec<usize> {
    let mut k = rand::seq::index::sample(rng, n, m).into_vec();
    k.sort_unstable();
    k
}

fn measure(lab: &LabState, rng: &mut Rng, rotate: impl FnOnce(&mut StateVector)) -> u64 {
    match lab.sample(rng) {
        LabSample::MaximallyMixed => {
            let n = lab.n();
            rng.gen::<u64>() & if n == 64 { u64::MAX } else { (1u64 << n) - 1 }
        }
        LabSample::Pure(s) => {
            let mut s = s.clone();
            rotate(&mut s);
            s.sample_z(rng) as u64
        }
    }
}

fn check_args(lab: &LabState, m: usize, shots: usize) -> Result<()> {
    if shots == 0 {
        return Err(Error::Config("shadow set needs at least one shot".into()));
    }
    if m == 0 || m > lab.n() {
        return Err(Error::Config(format!("level m={m} outside 1..={}", lab.n())));
    }
    Ok(())
}

fn collect(
    lab: &LabState,
    m: usize,
    shots: usize,
    stream: Stream,
    rule: Rule,
    shot: impl Fn(&mut Rng, Vec<usize>) -> ShadowRecord + Sync,
) -> Result<ShadowSet> {
    check_args(lab, m, shots)?;
    let n = lab.n();
    let records = (0..shots)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream.split(t as u64).rng();
            let k = random_subset(n, m, &mut rng);
            shot(&mut rng, k)
        })
        .collect();
    Ok(ShadowSet { n, m, rule, records, master_seed: stream.seed(), circuit_fingerprint: None })
}

pub fn collect_pauli(lab: &LabState, m: usize, shots: usize, stream: Stream) -> Result<ShadowSet> {
    collect(lab, m, shots, stream, Rule::Pauli, |rng, k| {
        let bases: Vec<char> = (0..k.len()).map(|_| ['X', 'Y', 'Z'][rng.gen_range(0..3)]).collect();
        let outcome = measure(lab, rng, |s| {
            for (&q, &b) in k.iter().zip(&bases) {
                if b != 'Z' {
                    s.apply_gate(&basis_rotation(b), &[q]);
                }
            }
        });
        ShadowRecord { subset: k, setting: Setting::Pauli(bases), outcome }
    })
}

pub fn collect_clifford(lab: &LabState, m: usize, shots: usize, stream: Stream) -> Result<ShadowSet> {
    collect_clifford_with(lab, m, shots, stream, |m, rng| random_clifford(m, rng))
}

/// Clifford collection with a caller-chosen unitary sampler.
pub fn collect_clifford_with(
    lab: &LabState,
    m: usize,
    shots: usize,
    stream: Stream,
    draw: impl Fn(usize, &mut Rng) -> CliffordOp + Sync,
) -> Result<ShadowSet> {
    if m > crate::sim::clifford::DENSE_MAX_QUBITS {
        return Err(Error::Resource(format!("Clifford shadows need m ≤ {}", crate::sim::clifford::DENSE_MAX_QUBITS)));
    }
    collect(lab, m, shots, stream, Rule::Clifford, |rng, k| {
        let u = draw(k.len(), rng);
        let outcome = measure(lab, rng, |s| s.apply_gate(u.dense().expect("checked m"), &k));
        ShadowRecord { subset: k, setting: Setting::Clifford(u), outcome }
    })
}

pub fn serialize_shadows(s: &ShadowSet) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "shadowsig-shadows 1 n={} m={} rule={} T={} seed={} fingerprint={}",
        s.n,
        s.m,
        s.rule.name(),
        s.records.len(),
        s.master_seed,
        s.circuit_fingerprint.as_deref().unwrap_or("-")
    )
    .unwrap();
    for r in &s.records {
        let k: Vec<String> = r.subset.iter().map(usize::to_string).collect();
        let setting = match &r.setting {
            Setting::Pauli(b) => b.iter().collect::<String>(),
            Setting::Clifford(u) => u.to_bits(),
        };
        writeln!(out, "{} {} {}", k.join(","), setting, to_bitstring(r.outcome, s.n)).unwrap();
    }
    out
}

fn header_field<'a>(tok: Option<&'a str>, key: &str) -> Result<&'a str> {
    tok.and_then(|t| t.strip_prefix(key)).and_then(|t| t.strip_prefix('=')).ok_or_else(|| parse_err(1, format!("missing header field {key}")))
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T> {
    s.parse().map_err(|_| parse_err(line, format!("bad {what}: {s:?}")))
}

pub fn parse_shadows(text: &str) -> Result<ShadowSet> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines.next().ok_or_else(|| parse_err(1, "empty shadow file"))?;
    let mut tok = head.split_whitespace();
    if tok.next() != Some("shadowsig-shadows") || tok.next() != Some("1") {
        return Err(parse_err(1, "expected header `shadowsig-shadows 1`"));
    }
    let n: usize = parse_num(header_field(tok.next(), "n")?, 1, "n")?;
    let m: usize = parse_num(header_field(tok.next(), "m")?, 1, "m")?;
    let rule_s = header_field(tok.next(), "rule")?;
    let rule = Rule::from_name(rule_s).ok_or_else(|| parse_err(1, format!("unknown rule {rule_s:?}")))?;
    let t: usize = parse_num(header_field(tok.next(), "T")?, 1, "T")?;
    let master_seed: u64 = parse_num(header_field(tok.next(), "seed")?, 1, "seed")?;
    let fp = header_field(tok.next(), "fingerprint")?;
    if n == 0 || n > 64 || m == 0 || m > n {
        return Err(parse_err(1, format!("invalid (n, m) = ({n}, {m})")));
    }
    let mut records = Vec::with_capacity(t);
    let mut last = 1;
    for (line, l) in lines {
        last = line;
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(parse_err(line, "record needs `subset setting outcome`"));
        }
        let subset: Vec<usize> = parts[0].split(',').map(|q| parse_num(q, line, "qubit index")).collect::<Result<_>>()?;
        if subset.len() != m || subset.windows(2).any(|w| w[0] >= w[1]) || subset.iter().any(|&q| q >= n) {
            return Err(parse_err(line, "subset must hold m strictly increasing qubits below n"));
        }
        let setting = match rule {
            Rule::Pauli => {
                let b: Vec<char> = parts[1].chars().collect();
                if b.len() != m || b.iter().any(|c| !matches!(c, 'X' | 'Y' | 'Z')) {
                    return Err(parse_err(line, "Pauli setting needs m symbols from XYZ"));
                }
                Setting::Pauli(b)
            }
            Rule::Clifford => Setting::Clifford(CliffordOp::from_bits(m, parts[1]).map_err(|e| parse_err(line, e.to_string()))?),
        };
        if parts[2].len() != n {
            return Err(parse_err(line, format!("outcome needs {n} bits")));
        }
        let outcome = parse_bitstring(parts[2]).ok_or_else(|| parse_err(line, "outcome is not a bitstring"))?;
        records.push(ShadowRecord { subset, setting, outcome });
    }
    if records.len() != t {
        return Err(parse_err(last, format!("header declares T={t} but file holds {} records", records.len())));
    }
    Ok(ShadowSet {
        n,
        m,
        rule,
        records,
        master_seed,
        circuit_fingerprint: (fp != "-").then(|| fp.to_string()),
    })
}

pub fn write_shadows(s: &ShadowSet, path: &Path) -> Result<()> {
    std::fs::write(path, serialize_shadows(s))?;
    Ok(())
}

pub fn read_shadows(path: &Path) -> Result<ShadowSet> {
    parse_shadows(&std::fs::read_to_string(path)?)
}
