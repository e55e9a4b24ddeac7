use rand::Rng;
use serde::{Deserialize, Serialize};

use super::random_unit;
use crate::kinematics::ShellConfig;
use crate::parallel::{self, Partial};
use crate::{Error, Result};

/// Radius of the ball the independent momenta are drawn from.
pub const MOMENTUM_BOX: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinGradientReport {
    pub draws: u64,
    /// Smallest Frobenius norm of the gradient over all draws.
    pub min_norm: f64,
    /// Smallest `1 - |p_i| / omega_i` over massive legs and draws; a lower
    /// bound for every gradient norm when massless and massive legs coexist.
    pub analytic_floor: f64,
}

impl Default for MinGradientReport {
    fn default() -> Self {
        MinGradientReport { draws: 0, min_norm: f64::INFINITY, analytic_floor: f64::INFINITY }
    }
}

impl Partial for MinGradientReport {
    fn merge(self, other: &Self) -> Self {
        MinGradientReport {
            draws: self.draws + other.draws,
            min_norm: self.min_norm.min(other.min_norm),
            analytic_floor: self.analytic_floor.min(other.analytic_floor),
        }
    }
}

/// Minimum gradient norm of `P` over random momentum-conserving draws with
/// `|p_j| <= 10` for the independent legs.
pub fn mixed_mass_min_gradient(config: &ShellConfig, draws: usize, seed: u64) -> Result<MinGradientReport> {
    config.validate()?;
    if !config.is_mixed() {
        return Err(Error::InvalidConfig("mixed masses required: at least one zero and one positive".into()));
    }
    let (n, dim) = (config.n, config.spatial_dim());
    let signs = config.signs();
    Ok(parallel::run(draws, seed, |rng, count, report: &mut MinGradientReport| {
        let mut momenta = vec![0.0; n * dim];
        let mut velocity = vec![0.0; n * dim];
        for _ in 0..count {
            for j in 0..n - 1 {
                let p = &mut momenta[j * dim..(j + 1) * dim];
                random_unit(rng, p);
                let r = MOMENTUM_BOX * rng.random::<f64>().powf(1.0 / dim as f64);
                p.iter_mut().for_each(|x| *x *= r);
            }
            for l in 0..dim {
                let s: f64 = (0..n - 1).map(|j| momenta[j * dim + l]).sum();
                momenta[(n - 1) * dim + l] = -s;
            }
            let mut floor = f64::INFINITY;
            for j in 0..n {
                let p = &momenta[j * dim..(j + 1) * dim];
                let p2: f64 = p.iter().map(|x| x * x).sum();
                let m = config.masses[j];
                let w = (m * m + p2).sqrt();
                if w == 0.0 {
                    continue;
                }
                for l in 0..dim {
                    velocity[j * dim + l] = p[l] / w;
                }
                if m > 0.0 {
                    // 1 - |p|/omega written without cancellation
                    floor = floor.min(m * m / (w * (w + p2.sqrt())));
                }
            }
            let mut norm2 = 0.0;
            for j in 0..n - 1 {
                for l in 0..dim {
                    let g = signs[j] * velocity[j * dim + l] - signs[n - 1] * velocity[(n - 1) * dim + l];
                    norm2 += g * g;
                }
            }
            report.draws += 1;
            report.min_norm = report.min_norm.min(norm2.sqrt());
            report.analytic_floor = report.analytic_floor.min(floor);
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{gradient, MomentumConfig};

    #[test]
    fn single_massive_leg() {
        let config = ShellConfig::new(4, 4, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let report = mixed_mass_min_gradient(&config, 100_000, 0).unwrap();
        assert_eq!(report.draws, 100_000);
        assert!(report.min_norm > 1e-12);
        assert!(report.min_norm >= report.analytic_floor);
    }

    #[test]
    fn floor_at_box_edge() {
        let config = ShellConfig::new(4, 4, 2, vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        let report = mixed_mass_min_gradient(&config, 20_000, 5).unwrap();
        let edge = 1.0 - 10.0 / 101f64.sqrt();
        assert!((edge - 4.96e-3).abs() < 1e-5);
        assert!(report.analytic_floor >= edge);
        assert!(report.min_norm >= report.analytic_floor);
    }

    #[test]
    fn requires_mixed_masses() {
        let config = ShellConfig::massless(4, 4, 2).unwrap();
        assert!(mixed_mass_min_gradient(&config, 10, 0).is_err());
        // control: the collinear massless point has a vanishing gradient
        let p = MomentumConfig::new(vec![
            vec![1.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![-1.0, 0.0, 0.0],
            vec![-1.0, 0.0, 0.0],
        ]);
        assert_eq!(gradient(&config, &p).unwrap().norm, 0.0);
    }
}
