//! Circuits, keys, signatures and codes.

use super::{num, read_text, write_text, Cli, Emit, RuleArg, SecurityArgs, Table};
use crate::circuit::{self, build_hypercube_circuit, causal_sets, find_pivot, Circuit, Side};
use crate::ecc::{parse_code, sample_gallager, serialize_code};
use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::shadows::{collect_clifford, collect_pauli, fingerprint, serialize_shadows, Rule};
use crate::signatures::{
    parse_pk, parse_sig, parse_sk, pkgen, serialize_pk, serialize_sig, serialize_sk, skgen, verify_multi, verify_single,
    Ensemble, Outcome, SignedMessage,
};
use crate::sim::{simulate, LabState, Noise};
use clap::{Args, Subcommand};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CircuitCmd {
    /// Sample one circuit and write it to --out or standard output.
    Gen {
        /// `experiment-ansatz N BLOCKS DEPTH`, `haar-brickwork N DEPTH`,
        /// `clifford-brickwork N DEPTH`, `finite-brickwork N DEPTH SIZE FAMILY_SEED`,
        /// `all-to-all-clifford N DEPTH` or `hypercube K D`; `:` may replace spaces.
        #[arg(long)]
        ensemble: String,
    },
    /// Sizes, depths, light cones and pivots.
    Analyze {
        #[arg(long)]
        circuit: PathBuf,
    },
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PkCmd {
    /// Shadows of one circuit's state, written to --out or standard output.
    Gen {
        #[arg(long)]
        circuit: PathBuf,
        /// Randomized qubits per shot.
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 1000)]
        shots: usize,
        /// Honest depolarizing infidelity ε_hon.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, value_enum, default_value_t = RuleArg::Clifford)]
        rule: RuleArg,
    },
}

#[derive(Args, Debug, Serialize)]
pub struct KeygenArgs {
    /// Ensemble descriptor, as for `circuit gen`.
    #[arg(long)]
    pub ensemble: String,
    /// Code file; one key pair per codeword position when given.
    #[arg(long)]
    pub code: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, default_value_t = 1000)]
    pub shots: usize,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, value_enum, default_value_t = RuleArg::Clifford)]
    pub rule: RuleArg,
    #[arg(long)]
    pub sk: PathBuf,
    #[arg(long)]
    pub pk: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct SignArgs {
    #[arg(long)]
    pub sk: PathBuf,
    /// Message bits, e.g. `1` or `0110`.
    #[arg(long)]
    pub message: String,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyArgs {
    #[arg(long)]
    pub pk: PathBuf,
    #[arg(long)]
    pub sig: PathBuf,
    /// Relaxation-time bound τ* accepted of revealed circuits.
    #[arg(long)]
    pub tau: f64,
    /// Spot-checked positions for multi-bit signatures [default: all].
    #[arg(long)]
    pub v: Option<usize>,
    #[command(flatten)]
    pub security: SecurityArgs,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodeCmd {
    /// Random regular Gallager code, written to --out or standard output.
    Gen {
        #[arg(long, default_value_t = 3)]
        var_degree: usize,
        #[arg(long, default_value_t = 6)]
        check_degree: usize,
        #[arg(long, default_value_t = 12)]
        len: usize,
    },
    /// Length, dimension, rate and minimum distance.
    Analyze {
        #[arg(long)]
        code: PathBuf,
        /// Random information sets tried when exact enumeration is too large.
        #[arg(long, default_value_t = 2000)]
        samples: usize,
    },
}

pub(crate) fn parse_ensemble(s: &str) -> Result<Ensemble> {
    Ensemble::parse(&s.replace(':', " "))
}

fn sample_circuit(desc: &str, seed: u64) -> Result<Circuit> {
    let t: Vec<String> = desc.replace(':', " ").split_whitespace().map(str::to_string).collect();
    if t.first().map(String::as_str) == Some("hypercube") {
        let arg = |i: usize| t.get(i).and_then(|x| x.parse().ok()).ok_or_else(|| Error::Config(format!("bad descriptor {desc:?}")));
        if t.len() != 3 {
            return Err(Error::Config(format!("bad descriptor {desc:?}")));
        }
        return build_hypercube_circuit(arg(1)?, arg(2)?);
    }
    parse_ensemble(desc)?.sample(seed)
}

pub(crate) fn load_circuit(p: &std::path::Path) -> Result<Circuit> {
    circuit::parse(&read_text(p)?)
}

pub(crate) fn circuit(cli: &Cli, c: &CircuitCmd) -> Result<Emit> {
    match c {
        CircuitCmd::Gen { ensemble } => Ok(Emit::Text(circuit::serialize(&sample_circuit(ensemble, cli.seed)?))),
        CircuitCmd::Analyze { circuit } => {
            let c = load_circuit(circuit)?;
            c.validate()?;
            let cs = causal_sets(&c);
            let full = (0..c.n).all(|q| cs.forward_full(q).len() == c.n && cs.backward_full(q).len() == c.n);
            let mut t = Table::new(&[
                "n", "layers", "gates", "two_qubit_gates", "two_qubit_depth", "ensemble", "full_light_cones", "front_pivot",
                "back_pivot", "fingerprint",
            ]);
            t.push(vec![
                c.n.to_string(),
                c.layers.len().to_string(),
                c.gate_count().to_string(),
                c.two_qubit_count().to_string(),
                c.two_qubit_depth().to_string(),
                c.ensemble.name().to_string(),
                full.to_string(),
                find_pivot(&c, Side::Front).exists.to_string(),
                find_pivot(&c, Side::Back).exists.to_string(),
                fingerprint(&c),
            ]);
            Ok(Emit::Table(t))
        }
    }
}

pub(crate) fn pk(cli: &Cli, c: &PkCmd) -> Result<Emit> {
    let PkCmd::Gen { circuit, m, shots, noise, rule } = c;
    let c = load_circuit(circuit)?;
    let lab = LabState::new(simulate(&c)?, Noise::Depolarizing(*noise))?;
    let stream = Stream::new(cli.seed).child("pk");
    let mut set = match Rule::from(*rule) {
        Rule::Pauli => collect_pauli(&lab, *m, *shots, stream)?,
        Rule::Clifford => collect_clifford(&lab, *m, *shots, stream)?,
    };
    set.circuit_fingerprint = Some(fingerprint(&c));
    Ok(Emit::Text(serialize_shadows(&set)))
}

pub(crate) fn keygen(cli: &Cli, a: &KeygenArgs) -> Result<Emit> {
    let ens = parse_ensemble(&a.ensemble)?;
    let code = a.code.as_deref().map(|p| parse_code(&read_text(p)?)).transpose()?;
    let sk = skgen(&ens, code, cli.seed)?;
    let pk = pkgen(&sk, a.m, a.shots, a.noise, a.rule.into(), Stream::new(cli.seed).child("pkgen"))?;
    write_text(&a.sk, &serialize_sk(&sk))?;
    write_text(&a.pk, &serialize_pk(&pk))?;
    let mut t = Table::new(&["ensemble", "n", "positions", "m", "rule", "shots", "eps_hon"]);
    t.push(vec![
        ens.describe(),
        pk.n.to_string(),
        sk.positions().to_string(),
        pk.m.to_string(),
        pk.rule.name().into(),
        pk.shots.to_string(),
        num(pk.eps_hon),
    ]);
    Ok(Emit::Table(t))
}

fn parse_bits(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Error::Config(format!("message {s:?} is not a bit string"))),
        })
        .collect()
}

fn bits(b: &[bool]) -> String {
    b.iter().map(|&x| if x { '1' } else { '0' }).collect()
}

pub(crate) fn sign(_cli: &Cli, a: &SignArgs) -> Result<Emit> {
    let sk = parse_sk(&read_text(&a.sk)?)?;
    Ok(Emit::Text(serialize_sig(&crate::signatures::sign(&sk, &parse_bits(&a.message)?)?)))
}

pub(crate) fn verify(cli: &Cli, a: &VerifyArgs) -> Result<Emit> {
    let pk = parse_pk(&read_text(&a.pk)?)?;
    let sig = parse_sig(&read_text(&a.sig)?)?;
    let params = a.security.params(pk.n, pk.m, pk.rule, pk.eps_hon, a.tau)?;
    let out = match &sig {
        SignedMessage::Single { .. } => verify_single(&pk, &sig, &params)?,
        SignedMessage::Multi { .. } => {
            let v = a.v.unwrap_or_else(|| pk.code.as_ref().map_or(1, |c| c.len));
            verify_multi(&pk, &sig, v, &params, Stream::new(cli.seed).child("verify"))?
        }
    };
    let mut t = Table::new(&["position", "verdict", "omega_hat", "lower_bound", "threshold", "shots", "message"]);
    let verdict = match &out.verdict {
        Outcome::Certified => "Certified".to_string(),
        Outcome::Failed => "Failed".to_string(),
        Outcome::Abort(r) => format!("Abort: {r}"),
    };
    t.push(vec!["all".into(), verdict, String::new(), String::new(), num(params.threshold()), String::new(), out.message.as_deref().map(bits).unwrap_or_default()]);
    for (j, r) in &out.reports {
        t.push(vec![
            j.to_string(),
            if r.certified() { "Certified" } else { "Failed" }.into(),
            num(r.estimate.omega_hat),
            num(r.lower_bound),
            num(r.threshold),
            r.estimate.t.to_string(),
            String::new(),
        ]);
    }
    Ok(Emit::Table(t))
}

pub(crate) fn code(cli: &Cli, c: &CodeCmd) -> Result<Emit> {
    match c {
        CodeCmd::Gen { var_degree, check_degree, len } => {
            Ok(Emit::Text(serialize_code(&sample_gallager(*var_degree, *check_degree, *len, cli.seed)?)))
        }
        CodeCmd::Analyze { code, samples } => {
            let code = parse_code(&read_text(code)?)?;
            let d = code.min_distance(*samples, Stream::new(cli.seed).child("distance"));
            let mut t = Table::new(&["len", "k", "rate", "checks", "distance", "exact"]);
            t.push(vec![
                code.len.to_string(),
                code.k.to_string(),
                num(code.rate()),
                (code.len - code.k).to_string(),
                d.d.to_string(),
                d.exact.to_string(),
            ]);
            Ok(Emit::Table(t))
        }
    }
}
