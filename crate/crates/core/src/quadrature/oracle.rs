//! Brute-force validation of the delta functional.
//!
//! `delta(P)` is replaced by a normalized Gaussian of width `sigma` and the
//! full `(n-1)(d-1)`-dimensional momentum integral is done by plain Monte
//! Carlo over the same per-leg Gaussian mixtures the direct estimator uses. The ladder `sigma, sigma/2,
//! sigma/4` shares its samples and is extrapolated to `sigma -> 0` by two
//! Richardson steps for an error expansion in `sigma^2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{DeltaFunctional, EstimateFlag, Mixture, QuadratureEstimate};
use crate::parallel::{self, Accumulator};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleEstimate {
    /// Extrapolated `sigma -> 0` value.
    pub estimate: QuadratureEstimate,
    /// Raw estimates at `sigma`, `sigma/2`, `sigma/4`.
    pub ladder: [Complex64; 3],
    pub ladder_stderr: [f64; 3],
    /// Set when the ladder is not monotonically converging.
    pub unreliable: bool,
}

fn nascent(x: f64, sigma: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI / sigma * (-0.5 * (x / sigma).powi(2)).exp()
}

pub fn nascent_delta_oracle(df: &DeltaFunctional, sigma: f64, budget: usize, seed: u64) -> Result<OracleEstimate> {
    let config = &df.config;
    config.validate()?;
    if !(sigma > 0.0) {
        return Err(Error::InvalidConfig(format!("nascent width must be positive, got {sigma}")));
    }
    let (n, k) = (config.n, config.k);
    if k == 0 || k == n {
        let zero = QuadratureEstimate::exact_zero(EstimateFlag::NoSupport);
        return Ok(OracleEstimate {
            estimate: zero,
            ladder: [Complex64::new(0.0, 0.0); 3],
            ladder_stderr: [0.0; 3],
            unreliable: false,
        });
    }
    let dim = config.spatial_dim();
    let extent = df.integrand.radial_extent();
    let mixtures: Vec<Mixture> = (0..n - 1).map(|j| Mixture::new(df.integrand.proposal(j), dim, extent)).collect();
    let widths = [sigma, sigma / 2.0, sigma / 4.0];

    let acc: [Accumulator; 4] = parallel::run(budget, seed, |rng, count, acc: &mut [Accumulator; 4]| {
        let mut momenta = vec![0.0; n * dim];
        let mut omegas = vec![0.0; n];
        for _ in 0..count {
            let mut density = 1.0;
            for (j, mix) in mixtures.iter().enumerate() {
                let p = &mut momenta[j * dim..(j + 1) * dim];
                mix.sample(rng, p);
                density *= mix.density(p);
            }
            for l in 0..dim {
                let s: f64 = (0..n - 1).map(|j| momenta[j * dim + l]).sum();
                momenta[(n - 1) * dim + l] = -s;
            }
            let mut p = 0.0;
            for j in 0..n {
                let m = config.masses[j];
                let p2: f64 = momenta[j * dim..(j + 1) * dim].iter().map(|x| x * x).sum();
                omegas[j] = (m * m + p2).sqrt();
                p += config.sign(j) * omegas[j];
            }
            let g = [nascent(p, widths[0]), nascent(p, widths[1]), nascent(p, widths[2])];
            if (g[0] == 0.0 && g[2] == 0.0) || !(density > 0.0) {
                acc.iter_mut().for_each(|a| a.push(Complex64::new(0.0, 0.0)));
                continue;
            }
            let f = df.integrand.eval(&omegas, &momenta) * (df.normalization / density);
            for (a, gi) in acc.iter_mut().zip(g) {
                a.push(f * gi);
            }
            acc[3].push(f * ((64.0 * g[2] - 20.0 * g[1] + g[0]) / 45.0));
        }
    });

    let ladder = [acc[0].mean(), acc[1].mean(), acc[2].mean()];
    let d1 = ladder[0].re - ladder[1].re;
    let d2 = ladder[1].re - ladder[2].re;
    let unreliable = d1 * d2 < 0.0 || d2.abs() > d1.abs();
    Ok(OracleEstimate {
        estimate: QuadratureEstimate::from_accumulator(&acc[3], 0.0),
        ladder,
        ladder_stderr: [acc[0].stderr(), acc[1].stderr(), acc[2].stderr()],
        unreliable,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::kinematics::ShellConfig;
    use crate::quadrature::{FnIntegrand, Integrand};

    #[test]
    fn zero_integrand() {
        let config = ShellConfig::new(4, 4, 2, vec![1.0; 4]).unwrap();
        let zero: Arc<dyn Integrand> = Arc::new(FnIntegrand::new(3.0, |_: &[f64], _: &[f64]| Complex64::new(0.0, 0.0)));
        let est = nascent_delta_oracle(&DeltaFunctional::new(config, zero), 0.1, 10_000, 0).unwrap();
        assert_eq!(est.estimate.value, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn vanishes_away_from_the_energy_surface() {
        // Massive legs at rest-ish momenta: P = 2 * 1 - 2 * 3 stays near -4,
        // far outside the nascent support.
        let config = ShellConfig::new(4, 3, 2, vec![1.0, 1.0, 3.0, 3.0]).unwrap();
        let sharp: Arc<dyn Integrand> = Arc::new(FnIntegrand::new(0.6, |_: &[f64], p: &[f64]| {
            let e: f64 = p.iter().map(|x| x * x).sum();
            Complex64::new((-0.5 * e / 0.01).exp(), 0.0)
        }));
        let df = DeltaFunctional::new(config, sharp);
        let est = nascent_delta_oracle(&df, 0.2, 20_000, 1).unwrap();
        assert!(est.ladder[0].norm() < 1e-30);
        assert!(est.estimate.value.norm() < 1e-30);
    }
}
