//! Acceptance criteria, one PASS/FAIL line each. Every criterion runs to
//! completion before the final assertion so the whole table is printed.
//!
//! Run: cargo test --test acceptance -- --nocapture

use shadowsig::adversary::{
    depth_bound, fidelity_vs_target, forward_learn, parameter_count, success_curve, Ansatz, Direction, InvertConfig,
    Learned, TrainConfig, Trials, UnitaryOracle,
};
use shadowsig::certify::{
    adversary_fidelity_bound, bernstein_tail, build_l, estimate, expected_overlap, relaxation_time, NoiseModel,
    SecurityParams, Variant,
};
use shadowsig::circuit::{
    append_digit_layer, brickwork, build_experiment_ansatz, build_hypercube_circuit, causal_sets, clifford_family,
    instantiate, Circuit, EnsembleTag, Gate, GateFamily, GateLabel,
};
use shadowsig::ecc::sample_gallager;
use shadowsig::gates::{hadamard, Mat};
use shadowsig::iceberg::{
    assemble, encoder_arbitrary, encoder_ft_gauge, encoder_ft_plus, fault_outcome, run_noisy, run_unencoded, Fault,
    IcebergBlock,
};
use shadowsig::rng::Stream;
use shadowsig::shadows::{collect_clifford, collect_pauli, Rule};
use shadowsig::signatures::{pkgen, sign, skgen, verification_count, verify_multi, verify_single, Ensemble, SignedMessage};
use shadowsig::sim::{LabState, Noise, StateVector};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn random_state(n: usize, stream: Stream) -> StateVector {
    StateVector::random(n, &mut stream.rng()).unwrap()
}

fn l_fixed_point() -> Verdict {
    let start = Instant::now();
    let root = Stream::new(101);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let n = 2 + i % 5;
        let m = (1 + i % 3).min(n);
        let psi = random_state(n, root.split(i as u64));
        let l = build_l(&psi, m).unwrap();
        let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
        worst = worst.max((&l * &v - &v).norm());
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(worst < 1e-9 && secs < 60.0, format!("max residual {worst:.2e} over 50 states, {secs:.1}s"))
}

fn tau_at_full_level() -> Verdict {
    let root = Stream::new(202);
    let (mut worst, mut min_baseline) = (0.0f64, f64::INFINITY);
    for i in 0..20 {
        let n = 2 + i % 5;
        let psi = random_state(n, root.split(i as u64));
        worst = worst.max((relaxation_time(&psi, n, Variant::Improved).unwrap().tau - 1.0).abs());
        min_baseline = min_baseline.min(relaxation_time(&psi, n, Variant::Baseline).unwrap().tau);
    }
    verdict(worst < 1e-6 && min_baseline > 1.0 + 1e-6, format!("max |tau - 1| {worst:.2e}; smallest baseline tau {min_baseline:.4}"))
}

fn plus(n: usize) -> StateVector {
    let mut s = StateVector::zero(n).unwrap();
    for q in 0..n {
        s.apply_gate(&hadamard(), &[q]);
    }
    s
}

fn tau_of_plus_states() -> Verdict {
    let taus: Vec<f64> = (2..=5).map(|n| relaxation_time(&plus(n), 1, Variant::Improved).unwrap().tau).collect();
    let ok = taus.iter().zip(2..).all(|(t, n)| (t - n as f64).abs() < 1e-9);
    verdict(ok, format!("tau(|+>^n, m=1) for n=2..5: {taus:.9?}"))
}

fn estimator_consistency() -> Verdict {
    let root = Stream::new(303);
    let shots = 50_000;
    let (mut misses, mut max_sigma, mut max_var) = (Vec::new(), 0.0f64, 0.0f64);
    for i in 0..20u64 {
        let n = 2 + (i as usize) % 5;
        let m = 1 + (i as usize) % n.min(3);
        let psi = random_state(n, root.child("psi").split(i));
        let phi = if i % 2 == 0 { psi.clone() } else { random_state(n, root.child("phi").split(i)) };
        let e = 0.1 * (i % 3) as f64;
        let lab = LabState::new(phi.clone(), Noise::Depolarizing(e)).unwrap();
        let expect = expected_overlap(&build_l(&psi, m).unwrap(), &phi, e);
        for rule in [Rule::Pauli, Rule::Clifford] {
            let s = root.child(rule.name()).split(i);
            let set = match rule {
                Rule::Pauli => collect_pauli(&lab, m, shots, s).unwrap(),
                Rule::Clifford => collect_clifford(&lab, m, shots, s).unwrap(),
            };
            let est = estimate(&set, &psi).unwrap();
            let z = (est.omega_hat - expect).abs() / est.stderr();
            max_sigma = max_sigma.max(z);
            if z > 3.0 {
                misses.push(format!("pair {i} {}", rule.name()));
            }
            if rule == Rule::Clifford {
                max_var = max_var.max(est.variance_hat);
            }
        }
    }
    verdict(
        misses.is_empty() && max_var <= 3.25,
        format!("max deviation {max_sigma:.2} sigma, max Clifford variance {max_var:.3}, outside 3 sigma: {misses:?}"),
    )
}

fn calculators() -> Verdict {
    let delta = bernstein_tail(17_316, 4, 0.88 / 8.0 - 0.09);
    let f = adversary_fidelity_bound(0.99, 0.11, 32, NoiseModel::Depolarizing).unwrap();
    verdict((delta - 0.36).abs() <= 0.01 && (f - 0.12).abs() < 1e-6, format!("delta {delta:.4}; adversarial fidelity {f:.6}"))
}

fn single_bit_signatures() -> Verdict {
    let ens = Ensemble::HaarBrickwork { n: 6, depth: 6 };
    let (m, delta, tau) = (2, 0.05, 8.0);
    let params = SecurityParams::plan(0.99, 0.0, 6, tau, m, delta, Rule::Clifford, NoiseModel::Depolarizing, None).unwrap();
    let shots = params.t.unwrap() as usize;
    let trials = 100;
    let (mut honest, mut forged) = (0, 0);
    for i in 0..trials as u64 {
        let sk = skgen(&ens, None, 10_000 + i).unwrap();
        let pk = pkgen(&sk, m, shots, 0.0, Rule::Clifford, Stream::new(20_000 + i)).unwrap();
        let bit = i % 2 == 1;
        if verify_single(&pk, &sign(&sk, &[bit]).unwrap(), &params).unwrap().accepted() {
            honest += 1;
        }
        let fake = SignedMessage::Single { bit, circuit: ens.sample(30_000 + i).unwrap() };
        if verify_single(&pk, &fake, &params).unwrap().accepted() {
            forged += 1;
        }
    }
    let p = 1.0 - delta;
    let band = trials as f64 * p - 1.96 * (trials as f64 * p * (1.0 - p)).sqrt();
    verdict(
        honest as f64 >= band && forged as f64 <= 5.0 * delta * trials as f64,
        format!("T = {shots}; honest accepted {honest}/{trials} (band >= {band:.1}); independent forgeries accepted {forged}/{trials}"),
    )
}

fn multi_bit_tampering() -> Verdict {
    let code = sample_gallager(3, 4, 12, 1).unwrap().with_distance();
    let d = code.d_known.unwrap();
    // Chk rejects every nonzero flip pattern of weight below d.
    let word = code.encode(&vec![true; code.k]).unwrap();
    let mut below = 0;
    let mut slipped = 0;
    for mask in 1u32..1 << code.len {
        if (mask.count_ones() as usize) < d {
            below += 1;
            let w: Vec<bool> = word.iter().enumerate().map(|(j, &b)| b ^ (mask >> j & 1 == 1)).collect();
            slipped += !code.chk(&w) as usize;
        }
    }
    let ens = Ensemble::ExperimentAnsatz { n: 4, blocks: 2, depth: 3 };
    let (m, delta) = (2, 0.05);
    let params = SecurityParams::plan(0.99, 0.0, 4, 8.0, m, delta, Rule::Clifford, NoiseModel::Depolarizing, None).unwrap();
    let sk = skgen(&ens, Some(code.clone()), 7).unwrap();
    let pk = pkgen(&sk, m, params.t.unwrap() as usize, 0.0, Rule::Clifford, Stream::new(8)).unwrap();
    let d_r = d as f64 / code.len as f64;
    let v = verification_count(0.5, d_r);
    let msg0 = vec![false; code.k];
    let SignedMessage::Multi { codeword: c0, circuits } = sign(&sk, &msg0).unwrap() else { unreachable!() };
    // Target codewords at distance exactly d: the adversary flips an α = d_r fraction.
    let targets: Vec<Vec<bool>> = (1u32..1 << code.k)
        .map(|x| code.encode(&(0..code.k).map(|i| x >> i & 1 == 1).collect::<Vec<_>>()).unwrap())
        .filter(|c| c.iter().zip(&c0).filter(|(a, b)| a != b).count() == d)
        .collect();
    let trials = 500;
    let mut detected = 0;
    for t in 0..trials as u64 {
        let c1 = &targets[t as usize % targets.len()];
        let forged: Vec<Circuit> = (0..code.len)
            .map(|j| if c1[j] == c0[j] { circuits[j].clone() } else { ens.sample(50_000 + t * 16 + j as u64).unwrap() })
            .collect();
        let sig = SignedMessage::Multi { codeword: c1.clone(), circuits: forged };
        if !verify_multi(&pk, &sig, v, &params, Stream::new(60_000 + t)).unwrap().accepted() {
            detected += 1;
        }
    }
    let rate = detected as f64 / trials as f64;
    let bound = 1.0 - ((-d_r * v as f64).exp() + delta);
    let sigma = (rate * (1.0 - rate) / trials as f64).sqrt().max(1.0 / trials as f64);
    verdict(
        slipped == 0 && rate >= bound - 3.0 * sigma,
        format!(
            "[{},{}] d={d}: {below} low-weight flips, {slipped} passed Chk; V={v}, detection {rate:.3} vs bound {bound:.3}",
            code.len, code.k
        ),
    )
}

fn hypercube_defense() -> Verdict {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut ok = true;
    for (k, d) in [(2, 3), (2, 4), (3, 2)] {
        let c = build_hypercube_circuit(k, d).unwrap();
        let cs = causal_sets(&c);
        let full = (0..c.n).all(|q| cs.forward_full(q).len() == c.n && cs.backward_full(q).len() == c.n);
        let mut ext = c.clone();
        append_digit_layer(&mut ext, k, 0);
        let oracle = UnitaryOracle::new(instantiate(&ext, &GateFamily::Clifford, 4));
        let step0 = [Direction::ForwardOnly, Direction::Alternating].iter().all(|&dir| {
            let out = forward_learn(&oracle, &ext, &Trials::clifford(), dir, &InvertConfig::exact()).unwrap();
            matches!(out.result, Learned::PartialFailure { step: 0, .. })
        });
        ok &= full && step0;
        notes.push(format!("(k={k},d={d}) n={} full={full} step0={step0}", c.n));
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(ok && secs < 10.0, format!("{}; {secs:.2}s", notes.join(", ")))
}

fn family_mats(f: &GateFamily) -> Vec<Mat> {
    match f {
        GateFamily::Finite(items) => items.iter().map(|(_, m)| m.clone()).collect(),
        _ => unreachable!("finite family"),
    }
}

fn light_cone_learning() -> Verdict {
    let fam = clifford_family(24, 7);
    let trials = Trials::family_with_locals(&family_mats(&fam));
    let mut good = 0;
    for seed in 0..20 {
        let secret = brickwork(8, 3, &fam, seed);
        let oracle = UnitaryOracle::new(secret.clone());
        let out = forward_learn(&oracle, &secret, &trials, Direction::ForwardOnly, &InvertConfig::exact()).unwrap();
        if out.circuit().is_some_and(|c| fidelity_vs_target(c, &secret).unwrap() >= 0.99) {
            good += 1;
        }
    }
    let mut fixture = Circuit::new(4, EnsembleTag::Custom, 3);
    for (a, b) in [(2, 3), (1, 3), (1, 2), (0, 1), (1, 3)] {
        fixture.push_asap(Gate::new(GateLabel::Identity, vec![a, b]));
    }
    let secret = instantiate(&fixture, &GateFamily::Clifford, 3);
    let oracle = UnitaryOracle::new(secret.clone());
    let run = |dir| forward_learn(&oracle, &secret, &Trials::clifford(), dir, &InvertConfig::exact()).unwrap();
    let fwd = run(Direction::ForwardOnly);
    let alt = run(Direction::Alternating);
    let alt_ok = alt.circuit().is_some_and(|c| fidelity_vs_target(c, &secret).unwrap() > 1.0 - 1e-9);
    verdict(
        good >= 18 && fwd.is_partial() && alt_ok,
        format!("brickwork recovered {good}/20; fixture forward-only partial={}, alternating learned={alt_ok}", fwd.is_partial()),
    )
}

fn iceberg() -> Verdict {
    let mut counts = true;
    for k in [2, 4, 6, 8] {
        let (a, p, g) = (encoder_arbitrary(k).unwrap(), encoder_ft_plus(k).unwrap(), encoder_ft_gauge(k).unwrap());
        counts &= a.two_qubit_count() == 2 * k + 1
            && p.two_qubit_count() == k + 3
            && p.two_qubit_depth() == k.div_ceil(2) + 3
            && g.two_qubit_count() == k + 4;
    }
    let mut faults = 0;
    let mut missed = 0;
    for k in [2, 4] {
        for seed in 0..2 {
            let logical = build_experiment_ansatz(k, 1, 3, seed).unwrap();
            let prog = assemble(&[IcebergBlock::plain(k).unwrap()], &logical).unwrap();
            let first = prog.encoder.gate_count() - 1;
            for after in first..prog.noisy_circuit().gate_count() {
                for q in 0..k + 2 {
                    for p in ['X', 'Y', 'Z'] {
                        faults += 1;
                        let (acc, _) = fault_outcome(&prog, &[Fault { after_gate: after, paulis: vec![(q, p)] }]).unwrap();
                        missed += (acc > 1e-12) as usize;
                    }
                }
            }
        }
    }
    let logical = build_experiment_ansatz(8, 2, 4, 1).unwrap();
    let prog = assemble(&vec![IcebergBlock::plain(4).unwrap(); 2], &logical).unwrap();
    let enc = run_noisy(&prog, 5e-3, 10_000, Stream::new(404)).unwrap();
    let raw = run_unencoded(&logical, 5e-3, 10_000, Stream::new(405)).unwrap();
    let z = (enc.fidelity - raw.fidelity) / enc.stderr.hypot(raw.stderr);
    verdict(
        counts && missed == 0 && z >= 3.0,
        format!(
            "caption counts {}; {missed}/{faults} single faults undetected; fidelity {:.4} (p={:.3}) vs {:.4} unencoded, {z:.1} sigma",
            if counts { "match" } else { "differ" },
            enc.fidelity,
            enc.acceptance,
            raw.fidelity
        ),
    )
}

fn variational_spoofer() -> Verdict {
    let mut formula = true;
    for (n, di, dout) in [(4, 1, 1), (6, 2, 3), (8, 3, 2)] {
        formula &= parameter_count(n, di, dout) == 15 * (n / 2) * di * dout;
        formula &= Ansatz::new(n, 2, di, dout, 0).unwrap().params() == parameter_count(n, di, dout);
    }
    let mut ok = formula;
    let mut notes = Vec::new();
    for (n, depths) in [(6, vec![1, 2, 3, 4, 6]), (8, vec![1, 2, 3])] {
        let curve = success_curve(n, &depths, 4, &TrainConfig::default(), 11).unwrap();
        let rates: Vec<f64> = curve.iter().map(|p| p.rate()).collect();
        let monotone = rates.windows(2).all(|w| w[1] >= w[0]);
        let probe = depth_bound(n).div_ceil(4);
        let at_probe = curve.iter().find(|p| p.depth == probe).map(|p| p.rate()).unwrap_or(f64::NAN);
        ok &= monotone && at_probe < 0.5;
        notes.push(format!("n={n} rates {rates:?} over depths {depths:?}, {at_probe} at depth {probe}"));
    }
    verdict(ok, format!("parameter formula {}; {}", if formula { "holds" } else { "fails" }, notes.join("; ")))
}

fn run_cli(dir: &Path, threads: usize, args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_shadowsig"))
        .current_dir(dir)
        .env("SHADOWSIG_THREADS", threads.to_string())
        .args(args)
        .args(["--format", "csv", "--seed", "9", "--manifest", "run.manifest.json"])
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn cli_reproducibility() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let setup: [&[&str]; 6] = [
        &["circuit", "gen", "--ensemble", "finite-brickwork 6 3 6 1", "--out", "c.circ"],
        &["circuit", "gen", "--ensemble", "haar-brickwork 4 4", "--out", "h.circ"],
        &["pk", "gen", "--circuit", "h.circ", "--m", "2", "--shots", "3000", "--out", "h.shadows"],
        &["keygen", "--ensemble", "haar-brickwork 4 4", "--shots", "3000", "--sk", "k.sk", "--pk", "k.pk"],
        &["sign", "--sk", "k.sk", "--message", "1", "--out", "s.sig"],
        &["code", "gen", "--var-degree", "3", "--check-degree", "4", "--out", "g.code"],
    ];
    for a in setup {
        if run_cli(p, 1, a).0 != 0 {
            return verdict(false, format!("setup command {a:?} failed"));
        }
    }
    let commands: Vec<Vec<&str>> = vec![
        vec!["circuit", "analyze", "--circuit", "c.circ"],
        vec!["pk", "gen", "--circuit", "h.circ", "--m", "2", "--shots", "2000"],
        vec!["keygen", "--ensemble", "haar-brickwork 4 4", "--shots", "500", "--sk", "k2.sk", "--pk", "k2.pk"],
        vec!["sign", "--sk", "k.sk", "--message", "0"],
        vec!["verify", "--pk", "k.pk", "--sig", "s.sig", "--tau", "8", "--no-shot-check"],
        vec!["certify", "--shadows", "h.shadows", "--circuit", "h.circ", "--no-shot-check"],
        vec!["tau", "sweep", "--n", "3,4", "--m", "1,2"],
        vec!["tau", "plan", "--m", "4", "--eps", "0.88", "--tau", "8", "--eps-prime", "0.09", "--shots", "17316"],
        vec!["code", "analyze", "--code", "g.code"],
        vec!["attack", "lightcone", "--circuit", "c.circ", "--trials", "family", "--family-seed", "1"],
        vec!["attack", "brute", "--shadows", "h.shadows", "--template", "h.circ", "--budget", "50", "--no-shot-check"],
        vec!["attack", "variational", "--n", "4", "--depths", "1", "--targets", "1", "--max-steps", "50", "--restarts", "1"],
        vec!["qed", "compile", "--n", "8", "--blocks", "2"],
        vec!["qed", "run", "--n", "4", "--depth", "2", "--blocks", "1,2", "--p2", "0.01", "--shots", "500"],
    ];
    let mut differing = Vec::new();
    let mut failed = Vec::new();
    for c in &commands {
        let (a, b) = (run_cli(p, 1, c), run_cli(p, 4, c));
        if a.0 != 0 || b.0 != 0 {
            failed.push(c.join(" "));
        } else if a.1 != b.1 || a.1.is_empty() {
            differing.push(c.join(" "));
        }
    }
    // Bench output is wall-clock time; every column but `seconds` must agree.
    let strip = |raw: Vec<u8>| -> Vec<String> {
        String::from_utf8(raw).unwrap().lines().map(|l| l.split(',').enumerate().filter(|(i, _)| *i != 3).map(|x| x.1).collect::<Vec<_>>().join(",")).collect()
    };
    let bench = ["bench", "--n", "10", "--reps", "1"];
    let (a, b) = (run_cli(p, 1, &bench), run_cli(p, 4, &bench));
    if a.0 != 0 || b.0 != 0 {
        failed.push("bench".into());
    } else if strip(a.1) != strip(b.1) {
        differing.push("bench".into());
    }
    verdict(
        differing.is_empty() && failed.is_empty(),
        format!("{} commands rerun at 1 and 4 threads; differing {differing:?}; failed {failed:?}", commands.len() + 1),
    )
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Verdict); 12] = [
        ("L fixed point", l_fixed_point),
        ("tau = 1 at m = n, baseline above 1", tau_at_full_level),
        ("tau of |+>^n at m = 1 equals n", tau_of_plus_states),
        ("overlap estimator consistency and variance", estimator_consistency),
        ("delta and adversarial fidelity calculators", calculators),
        ("single-bit signatures end to end", single_bit_signatures),
        ("multi-bit tampering detection", multi_bit_tampering),
        ("hypercube defense", hypercube_defense),
        ("light-cone learner", light_cone_learning),
        ("Iceberg counts, detection and break-even", iceberg),
        ("variational spoofer", variational_spoofer),
        ("CLI reproducibility", cli_reproducibility),
    ];
    let mut failures = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("{tag} {:>2} {name}: {} [{:.1}s]", i + 1, v.detail, start.elapsed().as_secs_f64());
        if !v.pass {
            failures.push(i + 1);
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
