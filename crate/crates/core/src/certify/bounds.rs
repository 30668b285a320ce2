use crate::error::{Error, Result};

/// Variance bound of the Clifford-rule overlap.
pub const CLIFFORD_VARIANCE: f64 = 3.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Planner {
    /// Prior pair-based estimator, corrected Hoeffding range.
    Baseline,
    Pauli,
    Clifford,
    /// Clifford rule with completeness and soundness; needs `tau`.
    Certification,
}

fn check_eps_delta(eps: f64, delta: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Config(format!("eps must be positive, got {eps}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Config(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// Number of shots required by a planner formula.
pub fn sample_complexity(mode: Planner, m: usize, eps: f64, delta: f64, tau: Option<f64>) -> Result<u64> {
    check_eps_delta(eps, delta)?;
    let d = 2f64.powi(m as i32);
    let log = (2.0 / delta).ln();
    let t = match mode {
        Planner::Baseline => 2f64.powi(4 * m as i32 - 1) / (eps * eps) * log,
        Planner::Pauli => 2f64.powi(2 * m as i32 + 1) / (eps * eps) * log,
        Planner::Clifford => (2.0 * CLIFFORD_VARIANCE / (eps * eps) + 2.0 * d / (3.0 * eps)) * log,
        Planner::Certification => {
            let tau = tau.ok_or_else(|| Error::Config("certification planner needs tau".into()))?;
            if tau < 1.0 {
                return Err(Error::Config(format!("tau must be at least 1, got {tau}")));
            }
            (104.0 * tau * tau / (eps * eps) + 8.0 * tau * d / (3.0 * eps)) * log
        }
    };
    if !t.is_finite() || t > u64::MAX as f64 {
        return Err(Error::Config("sample count overflows".into()));
    }
    Ok(t.ceil() as u64)
}

/// One-sided Bernstein tail `exp(−T a² / (2·3.25 + (2/3) 2^m a))`.
pub fn bernstein_tail(t: u64, m: usize, a: f64) -> f64 {
    let d = 2f64.powi(m as i32);
    (-(t as f64) * a * a / (2.0 * CLIFFORD_VARIANCE + 2.0 / 3.0 * d * a)).exp()
}

/// One-sided Hoeffding tail for the Pauli rule (`|ω| ≤ 2^m`).
pub fn hoeffding_tail(t: u64, m: usize, a: f64) -> f64 {
    (-(t as f64) * a * a / 2f64.powi(2 * m as i32 + 1)).exp()
}

/// Shots for the one-sided soundness guarantee with gap `a = ε/τ − ε′`.
pub fn soundness_shots(m: usize, a: f64, delta: f64) -> Result<u64> {
    check_eps_delta(a, delta)?;
    let d = 2f64.powi(m as i32);
    Ok(((2.0 * CLIFFORD_VARIANCE / (a * a) + 2.0 * d / (3.0 * a)) * (1.0 / delta).ln()).ceil() as u64)
}

/// Deviation `ε` with `exp(−Tε²/(6.5 + (2/3)2^m ε)) = δ`.
pub fn bernstein_radius(t: u64, m: usize, delta: f64) -> Result<f64> {
    if t == 0 {
        return Err(Error::Config("need at least one shot".into()));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Config(format!("delta must lie in (0, 1], got {delta}")));
    }
    let l = (1.0 / delta).ln();
    let b = 2.0 / 3.0 * 2f64.powi(m as i32) * l;
    let t = t as f64;
    Ok((b + (b * b + 4.0 * t * 2.0 * CLIFFORD_VARIANCE * l).sqrt()) / (2.0 * t))
}

/// Lower confidence bound `ω̂ − ε` on `E[ω]`.
pub fn bernstein_lower_bound(omega_hat: f64, t: u64, m: usize, delta: f64) -> Result<f64> {
    Ok(omega_hat - bernstein_radius(t, m, delta)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseModel {
    Depolarizing,
    General,
}

impl NoiseModel {
    pub fn name(self) -> &'static str {
        match self {
            NoiseModel::Depolarizing => "depolarizing",
            NoiseModel::General => "general",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "depolarizing" => Some(NoiseModel::Depolarizing),
            "general" => Some(NoiseModel::General),
            _ => None,
        }
    }
}

/// Upper bound on the fidelity an adversary reaches with the lab state.
pub fn adversary_fidelity_bound(eps_cnl: f64, eps_hon: f64, n: usize, model: NoiseModel) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps_cnl) || !(0.0..=1.0).contains(&eps_hon) {
        return Err(Error::Config("noise parameters must lie in [0, 1]".into()));
    }
    if eps_hon > eps_cnl {
        return Err(Error::NoGap { eps_hon, eps_cnl });
    }
    Ok(match model {
        NoiseModel::Depolarizing => 1.0 - (eps_cnl - eps_hon) + eps_hon * 2f64.powi(-(n as i32)),
        NoiseModel::General => {
            let f = |x: f64| ((1.0 - eps_hon) * (1.0 - x)).sqrt() + (eps_hon * x).sqrt();
            let x = golden_max(f, eps_cnl, 1.0, 1e-10);
            f(x).powi(2)
        }
    })
}

/// `ε_noisy = 1 − adversary_fidelity_bound`.
pub fn noise_bound(eps_cnl: f64, eps_hon: f64, n: usize, model: NoiseModel) -> Result<f64> {
    Ok(1.0 - adversary_fidelity_bound(eps_cnl, eps_hon, n, model)?)
}

/// Maximizer of a unimodal function on `[a, b]` by golden-section search.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    [a, b, (a + b) / 2.0].into_iter().max_by(|x, y| f(*x).total_cmp(&f(*y))).unwrap()
}

/// `φ̂ = (2^m/(2^m−1))(ω̂ − 2^{−m})`.
pub fn fidelity_from_overlap(omega_hat: f64, m: usize) -> f64 {
    let d = 2f64.powi(m as i32);
    d / (d - 1.0) * (omega_hat - 1.0 / d)
}

/// Default threshold slack `ε′ = 3ε/(4τ)`.
pub fn default_eps_prime(eps: f64, tau: f64) -> f64 {
    3.0 * eps / (4.0 * tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn pauli_planner_value() {
        assert_eq!(sample_complexity(Planner::Pauli, 1, 0.1, 0.1, None).unwrap(), 2397);
        assert_eq!((800.0 * 20f64.ln()).ceil() as u64, 2397);
    }

    #[test]
    fn certification_equals_clifford_at_quarter_gap() {
        let (eps, tau, m, d) = (0.3, 2.5, 3, 0.05);
        let a = sample_complexity(Planner::Certification, m, eps, d, Some(tau)).unwrap();
        let b = sample_complexity(Planner::Clifford, m, eps / (4.0 * tau), d, None).unwrap();
        assert!(a.abs_diff(b) <= 1);
        assert!(sample_complexity(Planner::Certification, m, eps, d, None).is_err());
    }

    #[test]
    fn experiment_delta() {
        let a = 0.88 / 8.0 - 0.09;
        let d = bernstein_tail(17_316, 4, a);
        assert!((d - 0.36).abs() < 0.01, "delta = {d}");
    }

    #[test]
    fn monotone_in_eps() {
        let mut last = 0;
        for e in [0.5, 0.2, 0.1, 0.05, 0.01, 0.001] {
            let t = sample_complexity(Planner::Clifford, 4, e, 0.1, None).unwrap();
            assert!(t > last);
            last = t;
        }
    }

    #[test]
    fn radius_inverts_tail() {
        for (t, m, d) in [(100, 1, 0.1), (17_316, 4, 0.36), (5000, 3, 0.01)] {
            let e = bernstein_radius(t, m, d).unwrap();
            assert!((bernstein_tail(t, m, e) - d).abs() < 1e-12);
        }
        assert!(bernstein_radius(100, 2, 1.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn radius_halves_when_t_quadruples() {
        let m = 1;
        let r1 = bernstein_radius(1_000_000, m, 0.05).unwrap();
        let r4 = bernstein_radius(4_000_000, m, 0.05).unwrap();
        assert!((r1 / r4 - 2.0).abs() < 0.01);
    }

    #[test]
    fn experiment_adversary_bound() {
        let f = adversary_fidelity_bound(0.99, 0.11, 32, NoiseModel::Depolarizing).unwrap();
        assert!((f - 0.12).abs() < 1e-9);
        assert!((noise_bound(0.99, 0.11, 32, NoiseModel::Depolarizing).unwrap() - 0.88).abs() < 1e-9);
    }

    #[test]
    fn pure_case_general_bound() {
        for c in [0.0, 0.3, 0.99, 1.0] {
            let f = adversary_fidelity_bound(c, 0.0, 10, NoiseModel::General).unwrap();
            assert!((f - (1.0 - c)).abs() < 1e-9);
        }
    }

    #[test]
    fn no_gap_rejected() {
        assert!(matches!(noise_bound(0.1, 0.2, 4, NoiseModel::General), Err(Error::NoGap { .. })));
    }

    #[test]
    fn general_dominates_depolarizing_scan() {
        let mut rng = Stream::new(11).rng();
        for _ in 0..10_000 {
            let c: f64 = rng.gen();
            let h: f64 = rng.gen::<f64>() * c;
            let n = rng.gen_range(1..=32);
            let g = adversary_fidelity_bound(c, h, n, NoiseModel::General).unwrap();
            let d = adversary_fidelity_bound(c, h, n, NoiseModel::Depolarizing).unwrap();
            // The depolarizing bound carries an extra h·2^{−n} from the maximally mixed overlap.
            assert!(g >= d - h * 2f64.powi(-(n as i32)) - 1e-9, "c={c} h={h} n={n}: {g} < {d}");
        }
    }

    #[test]
    fn fidelity_transform() {
        for m in 1..6 {
            assert!((fidelity_from_overlap(1.0, m) - 1.0).abs() < 1e-15);
            assert!(fidelity_from_overlap(2f64.powi(-(m as i32)), m).abs() < 1e-15);
        }
        assert!((fidelity_from_overlap(0.91, 1) - 0.82).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn bound_below_mean(w in -1.0f64..4.0, t in 1u64..100_000, m in 1usize..6, d in 0.001f64..0.999) {
            prop_assert!(bernstein_lower_bound(w, t, m, d).unwrap() <= w);
        }
    }
}
