use super::StateVector;
use crate::error::{Error, Result};
use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Noise {
    None,
    Depolarizing(f64),
}

impl Noise {
    pub fn eps_hon(self) -> f64 {
        match self {
            Noise::None => 0.0,
            Noise::Depolarizing(e) => e,
        }
    }
}

/// `σ_lab = (1−ε)|ψ⟩⟨ψ| + ε I/2^n`, sampled branch by branch.
#[derive(Clone, Debug)]
pub struct LabState {
    pub base: StateVector,
    pub noise: Noise,
}

/// Outcome of drawing one copy of a lab state.
#[derive(Clone, Copy, Debug)]
pub enum LabSample<'a> {
    Pure(&'a StateVector),
    /// Every measured qubit yields a uniform random bit.
    MaximallyMixed,
}

impl LabState {
    pub fn new(base: StateVector, noise: Noise) -> Result<Self> {
        let e = noise.eps_hon();
        if !(0.0..=1.0).contains(&e) {
            return Err(Error::Config(format!("eps_hon = {e} outside [0, 1]")));
        }
        Ok(LabState { base, noise })
    }

    pub fn pure(base: StateVector) -> Self {
        LabState { base, noise: Noise::None }
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> LabSample<'_> {
        match self.noise {
            Noise::Depolarizing(e) if e > 0.0 && rng.gen::<f64>() < e => LabSample::MaximallyMixed,
            _ => LabSample::Pure(&self.base),
        }
    }
}

pub fn sample_lab<'a, R: Rng + ?Sized>(l: &'a LabState, rng: &mut R) -> LabSample<'a> {
    l.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    #[test]
    fn noiseless_is_always_pure() {
        let l = LabState::new(StateVector::zero(3).unwrap(), Noise::Depolarizing(0.0)).unwrap();
        let mut rng = Stream::new(4).rng();
        assert!((0..1000).all(|_| matches!(l.sample(&mut rng), LabSample::Pure(_))));
    }

    #[test]
    fn branch_frequency_matches_eps() {
        let l = LabState::new(StateVector::zero(2).unwrap(), Noise::Depolarizing(0.11)).unwrap();
        let mut rng = Stream::new(5).rng();
        let t = 100_000;
        let k = (0..t).filter(|_| matches!(l.sample(&mut rng), LabSample::MaximallyMixed)).count() as f64;
        let sigma = (t as f64 * 0.11 * 0.89).sqrt();
        assert!((k - 0.11 * t as f64).abs() < 3.0 * sigma);
    }

    #[test]
    fn rejects_bad_eps() {
        assert!(LabState::new(StateVector::zero(1).unwrap(), Noise::Depolarizing(1.5)).is_err());
    }
}
