//! Single-bit and multi-bit signature protocols over shadow public keys.

mod bundle;

pub use bundle::{parse_pk, parse_sig, parse_sk, serialize_pk, serialize_sig, serialize_sk};

use crate::certify::{
    certify_state, relaxation_time, CertificationReport, NoiseModel, SecurityParams, Variant, SPECTRAL_CAP,
};
use crate::circuit::{all_to_all_clifford, brickwork, build_experiment_ansatz, clifford_family, Circuit, GateFamily};
use crate::ecc::LinearCode;
use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::shadows::{collect_clifford, collect_pauli, fingerprint, Rule, ShadowSet};
use crate::sim::{simulate, LabState, Noise};
use rand::seq::SliceRandom;
use rayon::prelude::*;

#[derive(Clone, Debug, PartialEq)]
pub enum Ensemble {
    ExperimentAnsatz { n: usize, blocks: usize, depth: usize },
    HaarBrickwork { n: usize, depth: usize },
    CliffordBrickwork { n: usize, depth: usize },
    /// Brickwork over a fixed finite family of two-qubit Cliffords.
    FiniteBrickwork { n: usize, depth: usize, size: usize, family_seed: u64 },
    AllToAllClifford { n: usize, depth: usize },
}

impl Ensemble {
    pub fn n(&self) -> usize {
        match *self {
            Ensemble::ExperimentAnsatz { n, .. }
            | Ensemble::HaarBrickwork { n, .. }
            | Ensemble::CliffordBrickwork { n, .. }
            | Ensemble::FiniteBrickwork { n, .. }
            | Ensemble::AllToAllClifford { n, .. } => n,
        }
    }

    pub fn sample(&self, seed: u64) -> Result<Circuit> {
        match *self {
            Ensemble::ExperimentAnsatz { n, blocks, depth } => build_experiment_ansatz(n, blocks, depth, seed),
            Ensemble::HaarBrickwork { n, depth } => Ok(brickwork(n, depth, &GateFamily::Haar, seed)),
            Ensemble::CliffordBrickwork { n, depth } => Ok(brickwork(n, depth, &GateFamily::Clifford, seed)),
            Ensemble::FiniteBrickwork { n, depth, size, family_seed } => {
                Ok(brickwork(n, depth, &clifford_family(size, family_seed), seed))
            }
            Ensemble::AllToAllClifford { n, depth } => Ok(all_to_all_clifford(n, depth, seed)),
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            Ensemble::ExperimentAnsatz { n, blocks, depth } => format!("experiment-ansatz {n} {blocks} {depth}"),
            Ensemble::HaarBrickwork { n, depth } => format!("haar-brickwork {n} {depth}"),
            Ensemble::CliffordBrickwork { n, depth } => format!("clifford-brickwork {n} {depth}"),
            Ensemble::FiniteBrickwork { n, depth, size, family_seed } => {
                format!("finite-brickwork {n} {depth} {size} {family_seed}")
            }
            Ensemble::AllToAllClifford { n, depth } => format!("all-to-all-clifford {n} {depth}"),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let t: Vec<&str> = s.split_whitespace().collect();
        let num = |i: usize| -> Result<usize> {
            t.get(i).and_then(|x| x.parse().ok()).ok_or_else(|| Error::Config(format!("bad ensemble descriptor {s:?}")))
        };
        let e = match t.first().copied() {
            Some("experiment-ansatz") if t.len() == 4 => Ensemble::ExperimentAnsatz { n: num(1)?, blocks: num(2)?, depth: num(3)? },
            Some("haar-brickwork") if t.len() == 3 => Ensemble::HaarBrickwork { n: num(1)?, depth: num(2)? },
            Some("clifford-brickwork") if t.len() == 3 => Ensemble::CliffordBrickwork { n: num(1)?, depth: num(2)? },
            Some("finite-brickwork") if t.len() == 5 => {
                Ensemble::FiniteBrickwork { n: num(1)?, depth: num(2)?, size: num(3)?, family_seed: num(4)? as u64 }
            }
            Some("all-to-all-clifford") if t.len() == 3 => Ensemble::AllToAllClifford { n: num(1)?, depth: num(2)? },
            _ => return Err(Error::Config(format!("unknown ensemble descriptor {s:?}"))),
        };
        Ok(e)
    }
}

/// Circuits indexed by position `j` then bit `b`.
#[derive(Clone, Debug, PartialEq)]
pub struct SecretKey {
    pub ensemble: Ensemble,
    pub master_seed: u64,
    pub code: Option<LinearCode>,
    pub circuits: Vec<[Circuit; 2]>,
}

impl SecretKey {
    pub fn positions(&self) -> usize {
        self.circuits.len()
    }
}

pub fn skgen(ensemble: &Ensemble, code: Option<LinearCode>, seed: u64) -> Result<SecretKey> {
    let positions = code.as_ref().map_or(1, |c| c.len);
    let root = Stream::new(seed).child("skgen");
    let circuits = (0..positions)
        .map(|j| {
            let draw = |b: u64| ensemble.sample(root.split(2 * j as u64 + b).seed());
            Ok([draw(0)?, draw(1)?])
        })
        .collect::<Result<_>>()?;
    Ok(SecretKey { ensemble: ensemble.clone(), master_seed: seed, code, circuits })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PublicKey {
    pub n: usize,
    pub m: usize,
    pub rule: Rule,
    pub shots: usize,
    pub eps_hon: f64,
    pub noise_model: NoiseModel,
    pub code: Option<LinearCode>,
    pub shadows: Vec<[ShadowSet; 2]>,
}

impl PublicKey {
    pub fn shadow(&self, b: bool, j: usize) -> &ShadowSet {
        &self.shadows[j][b as usize]
    }
}

pub fn pkgen(sk: &SecretKey, m: usize, shots: usize, eps_hon: f64, rule: Rule, stream: Stream) -> Result<PublicKey> {
    let shadows = sk
        .circuits
        .par_iter()
        .enumerate()
        .map(|(j, pair)| {
            let one = |b: usize| -> Result<ShadowSet> {
                let c = &pair[b];
                let lab = LabState::new(simulate(c)?, Noise::Depolarizing(eps_hon))?;
                let s = stream.split(2 * j as u64 + b as u64);
                let mut set = match rule {
                    Rule::Pauli => collect_pauli(&lab, m, shots, s)?,
                    Rule::Clifford => collect_clifford(&lab, m, shots, s)?,
                };
                set.circuit_fingerprint = Some(fingerprint(c));
                Ok(set)
            };
            Ok([one(0)?, one(1)?])
        })
        .collect::<Result<_>>()?;
    Ok(PublicKey {
        n: sk.ensemble.n(),
        m,
        rule,
        shots,
        eps_hon,
        noise_model: NoiseModel::Depolarizing,
        code: sk.code.clone(),
        shadows,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum SignedMessage {
    Single { bit: bool, circuit: Circuit },
    Multi { codeword: Vec<bool>, circuits: Vec<Circuit> },
}

pub fn sign(sk: &SecretKey, msg: &[bool]) -> Result<SignedMessage> {
    match &sk.code {
        None => {
            let [bit] = msg else {
                return Err(Error::Config(format!("single-bit key signs one bit, got {}", msg.len())));
            };
            Ok(SignedMessage::Single { bit: *bit, circuit: sk.circuits[0][*bit as usize].clone() })
        }
        Some(code) => {
            let codeword = code.encode(msg)?;
            let circuits = codeword.iter().enumerate().map(|(j, &b)| sk.circuits[j][b as usize].clone()).collect();
            Ok(SignedMessage::Multi { codeword, circuits })
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Certified,
    Failed,
    Abort(String),
}

#[derive(Clone, Debug)]
pub struct VerificationOutcome {
    pub verdict: Outcome,
    pub reports: Vec<(usize, CertificationReport)>,
    pub checked: Vec<usize>,
    /// Extracted message on success.
    pub message: Option<Vec<bool>>,
}

impl VerificationOutcome {
    fn abort(reason: impl Into<String>) -> Self {
        VerificationOutcome { verdict: Outcome::Abort(reason.into()), reports: Vec::new(), checked: Vec::new(), message: None }
    }

    pub fn accepted(&self) -> bool {
        self.verdict == Outcome::Certified
    }
}

fn params_for(pk: &PublicKey, params: &SecurityParams) -> Result<SecurityParams> {
    if params.m != pk.m || params.rule != pk.rule {
        return Err(Error::Config("verification parameters do not match the public key".into()));
    }
    Ok(params.clone())
}

enum Check {
    Report(Box<CertificationReport>),
    Abort(String),
}

/// Certify one position. Hypotheses whose relaxation time exceeds the declared
/// `τ*` (checked when the spectrum is affordable) and shadow data landing on
/// unreachable branches abort.
fn check_position(set: &ShadowSet, circuit: &Circuit, p: &SecurityParams) -> Result<Check> {
    let psi = simulate(circuit)?;
    if psi.n() <= SPECTRAL_CAP {
        match relaxation_time(&psi, p.m, Variant::Improved) {
            Ok(a) if a.tau <= p.tau * (1.0 + 1e-9) => {}
            Ok(a) => return Ok(Check::Abort(format!("hypothesis tau {:.3} exceeds tau* {}", a.tau, p.tau))),
            Err(Error::InfiniteTau(_)) => return Ok(Check::Abort("hypothesis has infinite relaxation time".into())),
            Err(e) => return Err(e),
        }
    }
    match certify_state(set, &psi, p) {
        Ok(r) => Ok(Check::Report(Box::new(r))),
        Err(Error::Data(msg)) => Ok(Check::Abort(msg)),
        Err(e) => Err(e),
    }
}

pub fn verify_single(pk: &PublicKey, sig: &SignedMessage, params: &SecurityParams) -> Result<VerificationOutcome> {
    let SignedMessage::Single { bit, circuit } = sig else {
        return Ok(VerificationOutcome::abort("expected a single-bit signature"));
    };
    if pk.shadows.len() != 1 {
        return Ok(VerificationOutcome::abort("public key is not single-bit"));
    }
    if circuit.n != pk.n || circuit.validate().is_err() {
        return Ok(VerificationOutcome::abort("revealed circuit does not fit the public key"));
    }
    let p = params_for(pk, params)?;
    let r = match check_position(pk.shadow(*bit, 0), circuit, &p)? {
        Check::Report(r) => *r,
        Check::Abort(reason) => return Ok(VerificationOutcome { checked: vec![0], ..VerificationOutcome::abort(reason) }),
    };
    Ok(VerificationOutcome {
        verdict: if r.certified() { Outcome::Certified } else { Outcome::Failed },
        message: r.certified().then(|| vec![*bit]),
        reports: vec![(0, r)],
        checked: vec![0],
    })
}

/// Spot-check `v` positions chosen by a seeded Fisher–Yates prefix.
pub fn verify_multi(
    pk: &PublicKey,
    sig: &SignedMessage,
    v: usize,
    params: &SecurityParams,
    stream: Stream,
) -> Result<VerificationOutcome> {
    let SignedMessage::Multi { codeword, circuits } = sig else {
        return Ok(VerificationOutcome::abort("expected a multi-bit signature"));
    };
    let Some(code) = &pk.code else {
        return Ok(VerificationOutcome::abort("public key is not multi-bit"));
    };
    if codeword.len() != code.len || circuits.len() != code.len {
        return Ok(VerificationOutcome::abort("signature length does not match the code"));
    }
    if code.chk(codeword) {
        return Ok(VerificationOutcome::abort("Chk: not a codeword"));
    }
    if v > code.len {
        return Err(Error::Config(format!("V = {v} exceeds block length {}", code.len)));
    }
    if circuits.iter().any(|c| c.n != pk.n || c.validate().is_err()) {
        return Ok(VerificationOutcome::abort("revealed circuit does not fit the public key"));
    }
    let p = params_for(pk, params)?;
    let mut idx: Vec<usize> = (0..code.len).collect();
    let mut rng = stream.child("spot-check").rng();
    let (chosen, _) = idx.partial_shuffle(&mut rng, v);
    let checked = chosen.to_vec();
    let results: Vec<(usize, Check)> = checked
        .par_iter()
        .map(|&j| Ok((j, check_position(pk.shadow(codeword[j], j), &circuits[j], &p)?)))
        .collect::<Result<_>>()?;
    let mut reports = Vec::with_capacity(results.len());
    for (j, c) in results {
        match c {
            Check::Report(r) => reports.push((j, *r)),
            Check::Abort(reason) => {
                return Ok(VerificationOutcome { checked, ..VerificationOutcome::abort(format!("position {j}: {reason}")) })
            }
        }
    }
    let ok = reports.iter().all(|(_, r)| r.certified());
    Ok(VerificationOutcome {
        verdict: if ok { Outcome::Certified } else { Outcome::Failed },
        message: if ok { Some(code.decode(codeword)?) } else { None },
        reports,
        checked,
    })
}

/// Parse and verify a `.sig` text; malformed input aborts.
pub fn verify_text(
    pk: &PublicKey,
    sig_text: &str,
    v: usize,
    params: &SecurityParams,
    stream: Stream,
) -> Result<VerificationOutcome> {
    let sig = match parse_sig(sig_text) {
        Ok(s) => s,
        Err(e) => return Ok(VerificationOutcome::abort(format!("parse: {e}"))),
    };
    match sig {
        SignedMessage::Single { .. } => verify_single(pk, &sig, params),
        SignedMessage::Multi { .. } => verify_multi(pk, &sig, v, params, stream),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecurityPlan {
    pub v: usize,
    pub delta1_max: f64,
    pub delta2_max: f64,
    /// Planner bound on false negatives, `δ₂·V`.
    pub false_negative_bound: f64,
}

/// `V = max{2, ⌈ln(2/ε)/d_r⌉}`.
pub fn verification_count(eps_target: f64, d_r: f64) -> usize {
    let raw = (2.0 / eps_target).ln() / d_r;
    // Absorb floating-point noise in exact ratios before the ceiling.
    let v = if (raw - raw.round()).abs() < 1e-9 { raw.round() } else { raw.ceil() };
    (v as usize).max(2)
}

pub fn plan_security(eps_target: f64, code: &LinearCode, delta1: f64, delta2: f64) -> Result<SecurityPlan> {
    if !(eps_target > 0.0 && eps_target < 1.0) {
        return Err(Error::Config(format!("target epsilon {eps_target} outside (0, 1)")));
    }
    let d = code.d_known.ok_or_else(|| Error::Config("code distance unknown".into()))?;
    let v = verification_count(eps_target, d as f64 / code.len as f64);
    let plan = SecurityPlan { v, delta1_max: eps_target / 2.0, delta2_max: eps_target / v as f64, false_negative_bound: delta2 * v as f64 };
    if delta1 > plan.delta1_max {
        return Err(Error::Config(format!("delta1 = {delta1} exceeds eps/2 = {}", plan.delta1_max)));
    }
    if delta2 > plan.delta2_max {
        return Err(Error::Config(format!("delta2 = {delta2} exceeds eps/V = {}", plan.delta2_max)));
    }
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ecc::{hamming74, sample_gallager};

    fn ens() -> Ensemble {
        Ensemble::ExperimentAnsatz { n: 6, blocks: 2, depth: 3 }
    }

    #[test]
    fn key_shapes() {
        let sk = skgen(&ens(), None, 1).unwrap();
        assert_eq!(sk.circuits.len() * 2, 2);
        assert_ne!(sk.circuits[0][0], sk.circuits[0][1]);
        let code = sample_gallager(3, 6, 12, 1).unwrap();
        let sk = skgen(&ens(), Some(code), 1).unwrap();
        assert_eq!(sk.circuits.len() * 2, 24);
        assert_eq!(skgen(&ens(), None, 9).unwrap(), skgen(&ens(), None, 9).unwrap());
    }

    #[test]
    fn signing_reveals_codeword_circuits() {
        let sk = skgen(&ens(), Some(hamming74()), 2).unwrap();
        let msg = [true, false, true, true];
        let SignedMessage::Multi { codeword, circuits } = sign(&sk, &msg).unwrap() else { panic!() };
        assert_eq!(circuits.len(), 7);
        assert!(!sk.code.as_ref().unwrap().chk(&codeword));
        for (j, c) in circuits.iter().enumerate() {
            assert_eq!(c, &sk.circuits[j][codeword[j] as usize]);
        }
        let sk1 = skgen(&ens(), None, 3).unwrap();
        assert_eq!(sign(&sk1, &[false]).unwrap(), SignedMessage::Single { bit: false, circuit: sk1.circuits[0][0].clone() });
    }

    #[test]
    fn verification_counts() {
        assert_eq!(verification_count(0.01, 0.25), 22);
        assert_eq!(verification_count(0.99, 0.5), 2);
        let mut code = hamming74();
        code.d_known = Some(3);
        let p = plan_security(0.1, &code, 0.05, 0.001).unwrap();
        assert!(p.false_negative_bound <= 0.1);
        assert!(plan_security(0.1, &code, 0.2, 0.001).is_err());
    }

    #[test]
    fn ensemble_descriptor_round_trip() {
        for e in [
            ens(),
            Ensemble::HaarBrickwork { n: 4, depth: 2 },
            Ensemble::FiniteBrickwork { n: 8, depth: 3, size: 24, family_seed: 5 },
            Ensemble::AllToAllClifford { n: 6, depth: 4 },
        ] {
            assert_eq!(Ensemble::parse(&e.describe()).unwrap(), e);
        }
    }
}
