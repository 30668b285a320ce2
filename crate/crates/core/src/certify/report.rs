use super::bounds::{
    bernstein_radius, bernstein_tail, default_eps_prime, fidelity_from_overlap, hoeffding_tail, noise_bound,
    NoiseModel,
};
use super::overlap::{estimate, OverlapEstimate};
use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::shadows::{Rule, ShadowSet};
use crate::sim::{simulate, StateVector};
use serde::Serialize;
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecisionRule {
    /// `ω̂ ≥ 1 − ε′`.
    MeanThreshold,
    /// Confidence lower bound `b ≥ 1 − ε′`.
    LowerBound,
}

impl DecisionRule {
    pub fn name(self) -> &'static str {
        match self {
            DecisionRule::MeanThreshold => "mean",
            DecisionRule::LowerBound => "lower-bound",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "mean" => Some(DecisionRule::MeanThreshold),
            "lower-bound" => Some(DecisionRule::LowerBound),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Certified,
    Failed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SecurityParams {
    pub eps_cnl: f64,
    pub eps_hon: f64,
    pub eps: f64,
    pub eps_prime: f64,
    pub tau: f64,
    pub delta: f64,
    pub m: usize,
    /// Planned shot count; `None` when the caller supplies `delta` for an arbitrary `T`.
    pub t: Option<u64>,
    pub noise_model: NoiseModel,
    pub rule: Rule,
    pub decision: DecisionRule,
}

impl SecurityParams {
    /// Derive `ε`, `ε′` and `T` from the noise model and relaxation time.
    #[allow(clippy::too_many_arguments)]
    pub fn plan(
        eps_cnl: f64,
        eps_hon: f64,
        n: usize,
        tau: f64,
        m: usize,
        delta: f64,
        rule: Rule,
        noise_model: NoiseModel,
        eps_prime: Option<f64>,
    ) -> Result<Self> {
        let eps = noise_bound(eps_cnl, eps_hon, n, noise_model)?;
        let eps_prime = eps_prime.unwrap_or_else(|| default_eps_prime(eps, tau));
        let mut p = SecurityParams {
            eps_cnl,
            eps_hon,
            eps,
            eps_prime,
            tau,
            delta,
            m,
            t: None,
            noise_model,
            rule,
            decision: DecisionRule::MeanThreshold,
        };
        p.t = Some(p.required_shots()?);
        Ok(p)
    }

    /// Soundness gap `ε/τ − ε′`.
    pub fn gap(&self) -> f64 {
        self.eps / self.tau - self.eps_prime
    }

    pub fn threshold(&self) -> f64 {
        1.0 - self.eps_prime
    }

    fn validate(&self) -> Result<()> {
        if !(self.tau >= 1.0) {
            return Err(Error::Config(format!("tau must be at least 1, got {}", self.tau)));
        }
        if !(self.eps_prime > 0.0) {
            return Err(Error::Config(format!("eps' must be positive, got {}", self.eps_prime)));
        }
        if self.eps_prime > self.eps / self.tau {
            return Err(Error::Config(format!(
                "eps' = {} exceeds eps/tau = {}; soundness needs eps >= tau·eps'",
                self.eps_prime,
                self.eps / self.tau
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        Ok(())
    }

    /// One-sided soundness shot count for the configured rule.
    pub fn required_shots(&self) -> Result<u64> {
        self.validate()?;
        let a = self.gap();
        if a <= 0.0 {
            return Err(Error::Config("zero soundness gap: eps' equals eps/tau".into()));
        }
        let l = (1.0 / self.delta).ln();
        let t = match self.rule {
            Rule::Clifford => super::soundness_shots(self.m, a, self.delta)?,
            Rule::Pauli => (2f64.powi(2 * self.m as i32 + 1) / (a * a) * l).ceil() as u64,
        };
        Ok(t)
    }

    /// Soundness failure probability actually achieved with `t` shots.
    pub fn achieved_delta(&self, t: u64) -> f64 {
        let a = self.gap().max(0.0);
        match self.rule {
            Rule::Clifford => bernstein_tail(t, self.m, a),
            Rule::Pauli => hoeffding_tail(t, self.m, a),
        }
    }

    fn radius(&self, t: u64) -> Result<f64> {
        match self.rule {
            Rule::Clifford => bernstein_radius(t, self.m, self.delta),
            Rule::Pauli => Ok((2f64.powi(2 * self.m as i32 + 1) * (1.0 / self.delta).ln() / t as f64).sqrt()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CertificationReport {
    pub estimate: OverlapEstimate,
    pub phi_hat: f64,
    pub lower_bound: f64,
    pub threshold: f64,
    pub verdict: Verdict,
    pub achieved_delta: f64,
    pub params: SecurityParams,
}

#[derive(Serialize)]
struct Row<'a> {
    verdict: &'a str,
    omega_hat: f64,
    phi_hat: f64,
    lower_bound: f64,
    threshold: f64,
    stderr: f64,
    t: usize,
    skipped: usize,
    m: usize,
    rule: &'a str,
    decision: &'a str,
    eps_cnl: f64,
    eps_hon: f64,
    eps: f64,
    eps_prime: f64,
    tau: f64,
    delta: f64,
    achieved_delta: f64,
    noise_model: &'a str,
}

impl CertificationReport {
    pub fn certified(&self) -> bool {
        self.verdict == Verdict::Certified
    }

    fn row(&self) -> Row<'_> {
        let p = &self.params;
        Row {
            verdict: if self.certified() { "Certified" } else { "Failed" },
            omega_hat: self.estimate.omega_hat,
            phi_hat: self.phi_hat,
            lower_bound: self.lower_bound,
            threshold: self.threshold,
            stderr: self.estimate.stderr(),
            t: self.estimate.t,
            skipped: self.estimate.skipped,
            m: p.m,
            rule: p.rule.name(),
            decision: p.decision.name(),
            eps_cnl: p.eps_cnl,
            eps_hon: p.eps_hon,
            eps: p.eps,
            eps_prime: p.eps_prime,
            tau: p.tau,
            delta: p.delta,
            achieved_delta: self.achieved_delta,
            noise_model: p.noise_model.name(),
        }
    }

    /// CSV with a header line and one data row.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(self.row()).expect("in-memory csv");
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8 csv")
    }

    pub fn to_text(&self) -> String {
        let r = self.row();
        let mut s = String::new();
        let v = serde_json::to_value(&r).expect("plain row");
        for (k, v) in v.as_object().expect("row object") {
            writeln!(s, "{k} = {}", v.as_str().map(str::to_string).unwrap_or_else(|| v.to_string())).unwrap();
        }
        s
    }
}

/// Certify `shadows` against the amplitudes of `psi`.
pub fn certify_state(shadows: &ShadowSet, psi: &StateVector, params: &SecurityParams) -> Result<CertificationReport> {
    params.validate()?;
    if shadows.n != psi.n() {
        return Err(Error::Structure(format!("shadows on {} qubits, target on {}", shadows.n, psi.n())));
    }
    if shadows.m != params.m || shadows.rule != params.rule {
        return Err(Error::Structure(format!(
            "shadows are level {} {}, parameters expect level {} {}",
            shadows.m,
            shadows.rule.name(),
            params.m,
            params.rule.name()
        )));
    }
    if let Some(t) = params.t {
        if (shadows.len() as u64) < t {
            return Err(Error::Config(format!("{} shots supplied, planner requires {t}", shadows.len())));
        }
    }
    let est = estimate(shadows, psi)?;
    let lower_bound = est.omega_hat - params.radius(est.t as u64)?;
    let threshold = params.threshold();
    let score = match params.decision {
        DecisionRule::MeanThreshold => est.omega_hat,
        DecisionRule::LowerBound => lower_bound,
    };
    Ok(CertificationReport {
        phi_hat: fidelity_from_overlap(est.omega_hat, params.m),
        lower_bound,
        threshold,
        verdict: if score >= threshold { Verdict::Certified } else { Verdict::Failed },
        achieved_delta: params.achieved_delta(est.t as u64),
        estimate: est,
        params: params.clone(),
    })
}

pub fn certify(shadows: &ShadowSet, target: &Circuit, params: &SecurityParams) -> Result<CertificationReport> {
    if shadows.n != target.n {
        return Err(Error::Structure(format!("shadows on {} qubits, circuit on {}", shadows.n, target.n)));
    }
    certify_state(shadows, &simulate(target)?, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;
    use crate::shadows::collect_clifford;
    use crate::sim::LabState;

    fn params(rule: Rule) -> SecurityParams {
        SecurityParams::plan(0.9, 0.0, 4, 2.0, 2, 0.05, rule, NoiseModel::Depolarizing, None).unwrap()
    }

    #[test]
    fn planner_refuses_large_slack() {
        let r = SecurityParams::plan(0.9, 0.0, 4, 2.0, 2, 0.05, Rule::Clifford, NoiseModel::Depolarizing, Some(0.5));
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn default_slack_is_three_quarters() {
        let p = params(Rule::Clifford);
        assert!((p.eps_prime - 3.0 * p.eps / (4.0 * p.tau)).abs() < 1e-15);
        assert!(p.achieved_delta(p.t.unwrap()) <= p.delta);
    }

    #[test]
    fn zero_state_clifford_overlap_near_one() {
        let lab = LabState::pure(StateVector::zero(2).unwrap());
        let s = collect_clifford(&lab, 2, 1000, Stream::new(3)).unwrap();
        let est = estimate(&s, &StateVector::zero(2).unwrap()).unwrap();
        assert!((est.omega_hat - 1.0).abs() < 0.1, "{}", est.omega_hat);
    }

    #[test]
    fn honest_and_orthogonal() {
        let mut rng = Stream::new(4).rng();
        let psi = StateVector::random(4, &mut rng).unwrap();
        let p = params(Rule::Clifford);
        let s = collect_clifford(&LabState::pure(psi.clone()), 2, p.t.unwrap() as usize, Stream::new(5)).unwrap();
        let r = certify_state(&s, &psi, &p).unwrap();
        assert!(r.certified(), "{}", r.to_text());
        assert!(r.to_csv().lines().count() == 2);

        let other = StateVector::random(4, &mut rng).unwrap();
        let s = collect_clifford(&LabState::pure(other), 2, p.t.unwrap() as usize, Stream::new(6)).unwrap();
        let r = certify_state(&s, &psi, &p).unwrap();
        assert!(!r.certified(), "{}", r.to_text());

        // A basis-state hypothesis leaves most branches of a mismatched lab state unreachable.
        let mut x = StateVector::zero(4).unwrap();
        x.apply_gate(&crate::gates::hadamard(), &[0]);
        let s = collect_clifford(&LabState::pure(x), 2, 1000, Stream::new(6)).unwrap();
        let r = certify_state(&s, &StateVector::zero(4).unwrap(), &SecurityParams { t: None, ..p });
        assert!(matches!(r, Err(Error::Data(_))));
    }

    #[test]
    fn mismatches_rejected() {
        let p = params(Rule::Pauli);
        let lab = LabState::pure(StateVector::zero(3).unwrap());
        let s = collect_clifford(&lab, 2, 10, Stream::new(1)).unwrap();
        assert!(matches!(certify_state(&s, &StateVector::zero(3).unwrap(), &p), Err(Error::Structure(_))));
        assert!(matches!(certify_state(&s, &StateVector::zero(4).unwrap(), &p), Err(Error::Structure(_))));
    }
}
