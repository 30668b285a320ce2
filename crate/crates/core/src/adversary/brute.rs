//! Brute-force spoofing: score every candidate of a finite ensemble against
//! the public shadows and submit the best one.

use super::access::ShadowAccess;
use crate::certify::{certify_state, estimate, CertificationReport, SecurityParams};
use crate::circuit::{Circuit, GateLabel};
use crate::error::{Error, Result};
use crate::gates::Mat;
use crate::sim::simulate;
use rayon::prelude::*;

#[derive(Clone, Debug)]
pub struct BruteReport {
    pub candidates: usize,
    /// `ω̂` per candidate in enumeration order; `NaN` when the estimator refused it.
    pub scores: Vec<f64>,
    pub best_index: usize,
    pub best: Circuit,
    pub report: CertificationReport,
    /// Learning cost over one verification, both in processed shots.
    pub cost_ratio: f64,
    pub unitary_queries: u64,
}

impl BruteReport {
    pub fn accepted(&self) -> bool {
        self.report.certified()
    }
}

/// Every assignment of `family` members to the multi-qubit gates of
/// `template`, in lexicographic order with the first gate varying slowest.
pub fn product_candidates<'a>(
    template: &'a Circuit,
    family: &'a [(GateLabel, Mat)],
) -> impl Iterator<Item = Circuit> + 'a {
    let slots: Vec<(usize, usize)> = template
        .layers
        .iter()
        .enumerate()
        .flat_map(|(l, layer)| layer.iter().enumerate().filter(|(_, g)| g.arity() >= 2).map(move |(i, _)| (l, i)))
        .collect();
    let k = family.len();
    let total = (k as u128).checked_pow(slots.len() as u32).unwrap_or(u128::MAX);
    (0..total).map(move |mut idx| {
        let mut c = template.clone();
        for &(l, i) in slots.iter().rev() {
            let (label, m) = &family[(idx % k as u128) as usize];
            idx /= k as u128;
            c.layers[l][i].label = label.clone();
            c.layers[l][i].unitary = m.clone();
        }
        c
    })
}

/// Score at most `budget` candidates by `ω̂` and certify the best one.
pub fn brute_spoof(
    access: &ShadowAccess<'_>,
    candidates: impl IntoIterator<Item = Circuit>,
    budget: usize,
    params: &SecurityParams,
) -> Result<BruteReport> {
    let shadows = access.shadows();
    let pool: Vec<Circuit> = candidates.into_iter().take(budget).collect();
    if pool.is_empty() {
        return Err(Error::Config("brute force needs at least one candidate".into()));
    }
    let scores: Vec<f64> = pool
        .par_iter()
        .map(|c| -> Result<f64> {
            let psi = simulate(c)?;
            match estimate(shadows, &psi) {
                Ok(e) => Ok(e.omega_hat),
                Err(Error::Data(_)) => Ok(f64::NAN),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let best_index = (0..scores.len())
        .filter(|&i| !scores[i].is_nan())
        .max_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(b.cmp(&a)))
        .ok_or_else(|| Error::Data("every candidate hit the zero-branch policy".into()))?;
    let best = pool[best_index].clone();
    let report = certify_state(shadows, &simulate(&best)?, params)?;
    Ok(BruteReport {
        candidates: pool.len(),
        cost_ratio: (pool.len() * shadows.len()) as f64 / shadows.len() as f64,
        scores,
        best_index,
        best,
        report,
        unitary_queries: access.unitary_queries(),
    })
}
