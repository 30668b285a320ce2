//! Signal propagation from one input wire to one output wire.

use super::invert::{cross_reduced, M2};
use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::gates::{C64, ZERO};
use crate::sim::{apply, StateVector};
use nalgebra::Vector3;

/// Evenly spread points on the Bloch sphere.
fn fibonacci_sphere(samples: usize) -> Vec<Vector3<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..samples)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / samples as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            Vector3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

fn bloch_operator(r: &Vector3<f64>) -> M2 {
    let c = |x: f64| C64::new(x, 0.0);
    M2::new(c(1.0 + r.z), C64::new(r.x, -r.y), C64::new(r.x, r.y), c(1.0 - r.z)) * c(0.5)
}

/// `min ‖Φ(ρ) − Φ(ρ′)‖_F / ‖ρ − ρ′‖_F` over all pairs of `samples` Bloch
/// points, where `Φ` maps the state of input `q` to the reduced state of
/// output `qp` with every other input at `|0⟩`.
pub fn signal_probe(c: &Circuit, q: usize, qp: usize, samples: usize) -> Result<f64> {
    if q >= c.n || qp >= c.n {
        return Err(Error::Config(format!("probe wires ({q}, {qp}) out of range for n={}", c.n)));
    }
    if samples < 2 {
        return Err(Error::Config("signal probe needs at least two grid points".into()));
    }
    let outs = [0usize, 1]
        .iter()
        .map(|&b| apply(c, &StateVector::basis(c.n, b << q)?))
        .collect::<Result<Vec<_>>>()?;
    let phi: Vec<Vec<M2>> = (0..2)
        .map(|a| (0..2).map(|b| {
            let m = cross_reduced(outs[a].amplitudes(), outs[b].amplitudes(), &[qp]);
            M2::from_fn(|i, j| m[(i, j)])
        }).collect())
        .collect();
    let map = |x: &M2| -> M2 {
        let mut out = M2::zeros();
        for a in 0..2 {
            for b in 0..2 {
                if x[(a, b)] != ZERO {
                    out += phi[a][b] * x[(a, b)];
                }
            }
        }
        out
    };
    let grid: Vec<M2> = fibonacci_sphere(samples).iter().map(bloch_operator).collect();
    let mut best = f64::INFINITY;
    for i in 0..grid.len() {
        for j in i + 1..grid.len() {
            let d = grid[i] - grid[j];
            best = best.min(map(&d).norm() / d.norm());
        }
    }
    Ok(best)
}
