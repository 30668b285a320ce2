//! Certification, relaxation times, attacks, error detection and timing.

use super::keys::load_circuit;
use super::{num, read_text, sweep, Cli, Emit, NoiseArg, SecurityArgs, Table};
use crate::adversary::{
    brute_spoof, fidelity_vs_target, forward_learn, product_candidates, success_curve, train, Ansatz, Direction,
    InvertConfig, Learned, OverlapOracle, ShadowAccess, TrainConfig, Trials, UnitaryOracle,
};
use crate::certify::{
    adversary_fidelity_bound, bernstein_tail, certify as certify_circuit, relaxation_time, soundness_shots, Variant,
};
use crate::circuit::{brickwork, build_experiment_ansatz, clifford_family, GateFamily};
use crate::error::{Error, Result};
use crate::iceberg::{assemble, run_noisy, run_unencoded, IcebergBlock};
use crate::rng::Stream;
use crate::shadows::{collect_clifford, parse_shadows};
use crate::sim::{simulate, LabState, StateVector};
use clap::{Args, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Args, Debug, Serialize)]
pub struct CertifyArgs {
    #[arg(long)]
    pub shadows: PathBuf,
    #[arg(long)]
    pub circuit: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub eps_hon: f64,
    /// Relaxation time τ [default: computed from the circuit's state].
    #[arg(long)]
    pub tau: Option<f64>,
    #[command(flatten)]
    pub security: SecurityArgs,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TauCmd {
    /// τ of one circuit's state at several levels.
    Spectrum {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        m: Vec<usize>,
        /// Use the pair-based construction instead of the improved one.
        #[arg(long)]
        baseline: bool,
    },
    /// τ of Haar-random states over an (n, m) grid.
    Sweep {
        #[arg(long, value_delimiter = ',', default_value = "4,5,6")]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        m: Vec<usize>,
        #[arg(long, default_value_t = 2)]
        states: usize,
    },
    /// Soundness δ for T shots, or T for a target δ.
    Plan {
        #[arg(long)]
        m: usize,
        /// Certification gap numerator ε.
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        eps_prime: f64,
        #[arg(long, conflicts_with = "delta", required_unless_present = "delta")]
        shots: Option<u64>,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Fidelity any CNL-bounded adversary reaches against a noisy lab state.
    Bound {
        #[arg(long)]
        eps_cnl: f64,
        #[arg(long)]
        eps_hon: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = NoiseArg::Depolarizing)]
        noise_model: NoiseArg,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialArg {
    Clifford,
    Continuous,
    /// The finite gate family given by --family-size and --family-seed.
    Family,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionArg {
    Forward,
    Alternating,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackCmd {
    /// Light-cone learning from unitary queries to a secret circuit.
    Lightcone {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long, value_enum, default_value_t = DirectionArg::Forward)]
        direction: DirectionArg,
        #[arg(long, value_enum, default_value_t = TrialArg::Clifford)]
        trials: TrialArg,
        #[arg(long, default_value_t = 6)]
        family_size: usize,
        #[arg(long, default_value_t = 0)]
        family_seed: u64,
        /// Sampled tomography precision; exact partial traces when absent.
        #[arg(long)]
        eps_t: Option<f64>,
    },
    /// Score every template instantiation over a finite family by ω̂.
    Brute {
        #[arg(long)]
        shadows: PathBuf,
        #[arg(long)]
        template: PathBuf,
        #[arg(long, default_value_t = 4)]
        family_size: usize,
        #[arg(long, default_value_t = 0)]
        family_seed: u64,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        #[arg(long, default_value_t = 2.0)]
        tau: f64,
        #[command(flatten)]
        security: SecurityArgs,
    },
    /// Gradient-trained spoofing: one target circuit, or a success curve.
    Variational {
        /// Target circuit; Haar-random targets on --n qubits when absent.
        #[arg(long)]
        circuit: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        depths: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        targets: usize,
        #[arg(long, default_value_t = 300)]
        max_steps: usize,
        #[arg(long, default_value_t = 3)]
        restarts: usize,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        /// Loss below which a run counts as a spoof.
        #[arg(long, default_value_t = 0.1)]
        threshold: f64,
    },
}

#[derive(Args, Debug, Serialize)]
pub struct QedShape {
    /// Logical qubits of the experiment ansatz.
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    /// Ansatz rounds.
    #[arg(long, default_value_t = 4)]
    pub depth: usize,
    /// Add one |+⟩ and one |0⟩ gauge qubit to every block.
    #[arg(long)]
    pub gauge: bool,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum QedCmd {
    /// Encode the ansatz and report structural counts.
    Compile {
        #[command(flatten)]
        shape: QedShape,
        #[arg(long, default_value_t = 2)]
        blocks: usize,
        /// Also write the physical encoder and body as a circuit file.
        #[arg(long)]
        physical: Option<PathBuf>,
    },
    /// Encoded and unencoded runs under two-qubit depolarizing noise.
    Run {
        #[command(flatten)]
        shape: QedShape,
        #[arg(long, value_delimiter = ',', default_value = "2")]
        blocks: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0.005")]
        p2: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        shots: usize,
    },
}

#[derive(Args, Debug, Serialize)]
pub struct BenchArgs {
    /// Qubits of the statevector kernel.
    #[arg(long, default_value_t = 16)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
}

pub(crate) fn certify(_cli: &Cli, a: &CertifyArgs) -> Result<Emit> {
    let shadows = parse_shadows(&read_text(&a.shadows)?)?;
    let c = load_circuit(&a.circuit)?;
    let tau = match a.tau {
        Some(t) => t,
        None => relaxation_time(&simulate(&c)?, shadows.m, Variant::Improved)?.tau,
    };
    let params = a.security.params(c.n, shadows.m, shadows.rule, a.eps_hon, tau)?;
    let report = certify_circuit(&shadows, &c, &params)?;
    Ok(Emit::Table(Table::from_csv(&report.to_csv())?))
}

fn tau_cell(key: &str, seed: u64) -> Result<Vec<String>> {
    let field = |name: &str| -> usize {
        key.split_whitespace().find_map(|kv| kv.strip_prefix(name)).and_then(|v| v.parse().ok()).expect("well-formed cell key")
    };
    let (n, m, i) = (field("n="), field("m="), field("state="));
    let mut rng = Stream::new(seed).child(&format!("tau-state n={n} i={i}")).rng();
    let psi = StateVector::random(n, &mut rng)?;
    let a = relaxation_time(&psi, m, Variant::Improved)?;
    Ok(vec![n.to_string(), m.to_string(), i.to_string(), num(a.tau), num(a.lambda2)])
}

pub(crate) fn tau(cli: &Cli, c: &TauCmd) -> Result<Emit> {
    match c {
        TauCmd::Spectrum { circuit, m, baseline } => {
            let psi = simulate(&load_circuit(circuit)?)?;
            let variant = if *baseline { Variant::Baseline } else { Variant::Improved };
            let mut t = Table::new(&["m", "variant", "tau", "lambda2", "spectrum_size"]);
            for &m in m {
                let a = relaxation_time(&psi, m, variant)?;
                let v = if *baseline { "baseline" } else { "improved" };
                t.push(vec![m.to_string(), v.into(), num(a.tau), num(a.lambda2), a.spectrum_size.to_string()]);
            }
            Ok(Emit::Table(t))
        }
        TauCmd::Sweep { n, m, states } => {
            let mut keys = Vec::new();
            for &n in n {
                for i in 0..*states {
                    keys.extend(m.iter().filter(|&&m| m >= 1 && m <= n).map(|m| format!("tau n={n} state={i} m={m} seed={}", cli.seed)));
                }
            }
            let t = sweep(&keys, &["n", "m", "state", "tau", "lambda2"], cli.out.as_deref(), |k| tau_cell(k, cli.seed))?;
            Ok(if cli.out.is_some() { Emit::Written(t) } else { Emit::Table(t) })
        }
        TauCmd::Plan { m, eps, tau, eps_prime, shots, delta } => {
            let gap = eps / tau - eps_prime;
            if gap <= 0.0 {
                return Err(Error::Config(format!("no soundness gap: eps/tau - eps' = {gap}")));
            }
            let (t, d) = match (shots, delta) {
                (Some(t), _) => (*t, bernstein_tail(*t, *m, gap)),
                (None, Some(d)) => (soundness_shots(*m, gap, *d)?, *d),
                (None, None) => unreachable!("clap requires one of shots, delta"),
            };
            let mut tab = Table::new(&["m", "eps", "tau", "eps_prime", "gap", "shots", "delta"]);
            tab.push(vec![m.to_string(), num(*eps), num(*tau), num(*eps_prime), num(gap), t.to_string(), num(d)]);
            Ok(Emit::Table(tab))
        }
        TauCmd::Bound { eps_cnl, eps_hon, n, noise_model } => {
            let f = adversary_fidelity_bound(*eps_cnl, *eps_hon, *n, (*noise_model).into())?;
            let mut t = Table::new(&["eps_cnl", "eps_hon", "n", "adversary_fidelity", "eps"]);
            t.push(vec![num(*eps_cnl), num(*eps_hon), n.to_string(), num(f), num(1.0 - f)]);
            Ok(Emit::Table(t))
        }
    }
}

fn finite_family(size: usize, seed: u64) -> Vec<(crate::circuit::GateLabel, crate::gates::Mat)> {
    match clifford_family(size, seed) {
        GateFamily::Finite(items) => items,
        _ => unreachable!("clifford_family is finite"),
    }
}

const TRACE: [&str; 5] = ["step", "kind", "value", "queries", "note"];

pub(crate) fn attack(cli: &Cli, c: &AttackCmd) -> Result<Emit> {
    let mut t = Table::new(&TRACE);
    match c {
        AttackCmd::Lightcone { circuit, direction, trials, family_size, family_seed, eps_t } => {
            let secret = load_circuit(circuit)?;
            let trials = match trials {
                TrialArg::Clifford => Trials::clifford(),
                TrialArg::Continuous => Trials::continuous(),
                TrialArg::Family => {
                    let mats: Vec<_> = finite_family(*family_size, *family_seed).into_iter().map(|x| x.1).collect();
                    Trials::family_with_locals(&mats)
                }
            };
            let cfg = match eps_t {
                Some(e) => InvertConfig::sampled(*e, Stream::new(cli.seed).child("tomography").seed()),
                None => InvertConfig::exact(),
            };
            let dir = match direction {
                DirectionArg::Forward => Direction::ForwardOnly,
                DirectionArg::Alternating => Direction::Alternating,
            };
            let oracle = UnitaryOracle::new(secret.clone());
            let out = forward_learn(&oracle, &secret, &trials, dir, &cfg)?;
            for (i, s) in out.sides.iter().enumerate() {
                t.push(vec![i.to_string(), "invert".into(), String::new(), String::new(), format!("{s:?}").to_lowercase()]);
            }
            let q = out.queries_used.to_string();
            match &out.result {
                Learned::Circuit(l) => {
                    t.push(vec![out.sides.len().to_string(), "fidelity".into(), num(fidelity_vs_target(l, &secret)?), q, String::new()])
                }
                Learned::PartialFailure { reason, step, inverted } => {
                    t.push(vec![step.to_string(), "failure".into(), inverted.to_string(), q, reason.clone()])
                }
            }
        }
        AttackCmd::Brute { shadows, template, family_size, family_seed, budget, tau, security } => {
            let shadows = parse_shadows(&read_text(shadows)?)?;
            let template = load_circuit(template)?;
            let family = finite_family(*family_size, *family_seed);
            let params = security.params(shadows.n, shadows.m, shadows.rule, 0.0, *tau)?;
            let r = brute_spoof(&ShadowAccess::new(&shadows), product_candidates(&template, &family), *budget, &params)?;
            for (i, s) in r.scores.iter().enumerate() {
                t.push(vec![i.to_string(), "omega".into(), num(*s), r.unitary_queries.to_string(), String::new()]);
            }
            let verdict = if r.accepted() { "Certified" } else { "Failed" };
            t.push(vec![r.best_index.to_string(), "best".into(), num(r.scores[r.best_index]), r.unitary_queries.to_string(), verdict.into()]);
            t.push(vec![r.candidates.to_string(), "cost-ratio".into(), num(r.cost_ratio), r.unitary_queries.to_string(), String::new()]);
        }
        AttackCmd::Variational { circuit, n, depths, targets, max_steps, restarts, step, threshold } => {
            let cfg = TrainConfig { max_steps: *max_steps, restarts: *restarts, step: *step, threshold: *threshold, ..TrainConfig::default() };
            match circuit {
                Some(p) => {
                    let target = simulate(&load_circuit(p)?)?;
                    let n = target.n();
                    let oracle = OverlapOracle::new(target);
                    for &d in depths {
                        let ansatz = Ansatz::new(n, n, d, 1, Stream::new(cli.seed).child("ansatz").split(d as u64).seed())?;
                        for tr in train(&oracle, &ansatz, &cfg, Stream::new(cli.seed).child("init").split(d as u64))? {
                            for (s, (l, q)) in tr.losses.iter().zip(&tr.queries).enumerate() {
                                t.push(vec![s.to_string(), "loss".into(), num(*l), q.to_string(), format!("depth={d} restart={}", tr.restart)]);
                            }
                        }
                    }
                }
                None => {
                    for p in success_curve(*n, depths, *targets, &cfg, cli.seed)? {
                        let note = format!("params={} runs={}", p.params, p.runs);
                        t.push(vec![p.depth.to_string(), "success-rate".into(), num(p.rate()), num(p.mean_queries), note]);
                    }
                }
            }
        }
    }
    Ok(Emit::Table(t))
}

fn blocks_for(shape: &QedShape, blocks: usize) -> Result<Vec<IcebergBlock>> {
    if blocks == 0 || shape.n % blocks != 0 {
        return Err(Error::Config(format!("{} logical qubits do not split into {blocks} blocks", shape.n)));
    }
    let k = shape.n / blocks;
    let b = if shape.gauge { IcebergBlock::plus(k)? } else { IcebergBlock::plain(k)? };
    Ok(vec![b; blocks])
}

const QED_COLUMNS: [&str; 9] = ["type", "logical_qubits", "blocks", "shots", "p", "two_q_depth", "fidelity", "stderr", "p2"];

fn qed_cell(key: &str, shape: &QedShape, seed: u64) -> Result<Vec<String>> {
    let field = |name: &str| key.split_whitespace().find_map(|kv| kv.strip_prefix(name)).expect("well-formed cell key");
    let (kind, blocks, p2, shots) = (field("type="), field("blocks=").parse().expect("count"), field("p2=").parse().expect("rate"), field("shots=").parse().expect("count"));
    let logical = build_experiment_ansatz(shape.n, blocks, shape.depth, seed)?;
    let stream = Stream::new(seed).child(key);
    let r = if kind == "iceberg" {
        run_noisy(&assemble(&blocks_for(shape, blocks)?, &logical)?, p2, shots, stream)?
    } else {
        run_unencoded(&logical, p2, shots, stream)?
    };
    Ok(vec![
        kind.to_string(),
        shape.n.to_string(),
        blocks.to_string(),
        shots.to_string(),
        num(r.acceptance),
        r.two_qubit_depth.to_string(),
        num(r.fidelity),
        num(r.stderr),
        num(p2),
    ])
}

pub(crate) fn qed(cli: &Cli, c: &QedCmd) -> Result<Emit> {
    match c {
        QedCmd::Compile { shape, blocks, physical } => {
            let logical = build_experiment_ansatz(shape.n, *blocks, shape.depth, cli.seed)?;
            let prog = assemble(&blocks_for(shape, *blocks)?, &logical)?;
            if let Some(p) = physical {
                super::write_text(p, &crate::circuit::serialize(&prog.noisy_circuit()))?;
            }
            let encoders: Vec<String> = prog.layouts.iter().map(|l| format!("{:?}", l.encoder).to_lowercase()).collect();
            let mut t = Table::new(&[
                "logical_qubits", "blocks", "code_qubits", "flags", "physical_two_qubit_gates", "two_q_depth",
                "logical_two_qubit_gates", "logical_two_q_depth", "max_check_weight", "encoder",
            ]);
            t.push(vec![
                shape.n.to_string(),
                blocks.to_string(),
                prog.code_qubits().to_string(),
                prog.flags.len().to_string(),
                prog.two_qubit_count().to_string(),
                prog.two_qubit_depth().to_string(),
                logical.two_qubit_count().to_string(),
                logical.two_qubit_depth().to_string(),
                prog.max_check_weight().to_string(),
                encoders.join(" "),
            ]);
            Ok(Emit::Table(t))
        }
        QedCmd::Run { shape, blocks, p2, shots } => {
            let mut keys = Vec::new();
            for &b in blocks {
                for &p in p2 {
                    for kind in ["iceberg", "physical"] {
                        keys.push(format!(
                            "qed type={kind} n={} blocks={b} depth={} gauge={} p2={} shots={shots} seed={}",
                            shape.n,
                            shape.depth,
                            shape.gauge,
                            num(p),
                            cli.seed
                        ));
                    }
                }
            }
            let t = sweep(&keys, &QED_COLUMNS, cli.out.as_deref(), |k| qed_cell(k, shape, cli.seed))?;
            Ok(if cli.out.is_some() { Emit::Written(t) } else { Emit::Table(t) })
        }
    }
}

/// Wall-clock timings; the `seconds` column is the only non-deterministic one.
pub(crate) fn bench(cli: &Cli, a: &BenchArgs) -> Result<Emit> {
    let mut t = Table::new(&["kernel", "n", "reps", "seconds", "checksum"]);
    let mut time = |name: &str, n: usize, f: &dyn Fn() -> Result<f64>| -> Result<()> {
        let start = Instant::now();
        let mut sum = 0.0;
        for _ in 0..a.reps {
            sum = f()?;
        }
        let secs = start.elapsed().as_secs_f64() / a.reps.max(1) as f64;
        t.push(vec![name.into(), n.to_string(), a.reps.to_string(), format!("{secs:.6}"), num(sum)]);
        Ok(())
    };
    let circ = brickwork(a.n, 8, &GateFamily::Haar, cli.seed);
    time("statevector-brickwork-depth8", a.n, &|| Ok(simulate(&circ)?.amplitudes()[0].norm_sqr()))?;
    let psi = StateVector::random(6, &mut Stream::new(cli.seed).rng())?;
    time("relaxation-time-m2", 6, &|| Ok(relaxation_time(&psi, 2, Variant::Improved)?.tau))?;
    let lab = LabState::pure(simulate(&brickwork(8, 4, &GateFamily::Clifford, cli.seed))?);
    time("clifford-shadows-2000", 8, &|| Ok(collect_clifford(&lab, 2, 2000, Stream::new(cli.seed))?.records[0].outcome as f64))?;
    let logical = build_experiment_ansatz(8, 2, 4, cli.seed)?;
    let prog = assemble(&[IcebergBlock::plain(4)?, IcebergBlock::plain(4)?], &logical)?;
    time("iceberg-run-2000", 8, &|| Ok(run_noisy(&prog, 5e-3, 2000, Stream::new(cli.seed))?.fidelity))?;
    Ok(Emit::Table(t))
}
