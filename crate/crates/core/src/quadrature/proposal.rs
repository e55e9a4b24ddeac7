//! Sampling densities for single-leg momenta.
//!
//! Each leg draws from a two-component isotropic Gaussian mixture: a
//! component shaped like the integrand's own leg factor (when the integrand
//! reports one) and a broad component centered at the origin that keeps the
//! importance weights bounded in the tails.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

/// Isotropic Gaussian `N(center, scale^2 I)` for one leg's spatial momentum.
#[derive(Debug, Clone, PartialEq)]
pub struct LegProposal {
    pub center: Vec<f64>,
    pub scale: f64,
}

impl LegProposal {
    pub fn new(center: Vec<f64>, scale: f64) -> Self {
        LegProposal { center, scale }
    }

    fn sample<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        for (x, c) in out.iter_mut().zip(&self.center) {
            let z: f64 = rng.sample(StandardNormal);
            *x = c + self.scale * z;
        }
    }

    fn density(&self, p: &[f64]) -> f64 {
        let dim = self.center.len() as f64;
        let e: f64 = p.iter().zip(&self.center).map(|(x, c)| (x - c).powi(2)).sum();
        (-0.5 * e / (self.scale * self.scale)).exp() / (2.0 * PI * self.scale * self.scale).powf(0.5 * dim)
    }

    /// Density of `p / |p|` on the unit sphere when `p` is drawn from this
    /// Gaussian.
    fn angular_density(&self, u: &[f64]) -> f64 {
        let dim = self.center.len();
        let s = self.scale;
        let mu: f64 = u.iter().zip(&self.center).map(|(x, c)| x * c).sum();
        let c2: f64 = self.center.iter().map(|c| c * c).sum();
        // int_0^inf r^{dim-1} exp(-(r - mu)^2 / (2 s^2)) dr, carried with the
        // factor exp(mu^2 / (2 s^2)) divided out
        let tail = (-0.5 * mu * mu / (s * s)).exp();
        let mut prev = s * (PI / 2.0).sqrt() * libm::erfc(-mu / (s * std::f64::consts::SQRT_2));
        let mut moment = prev;
        if dim > 1 {
            moment = mu * prev + s * s * tail;
            for k in 2..dim {
                let next = mu * moment + (k - 1) as f64 * s * s * prev;
                prev = moment;
                moment = next;
            }
        }
        let moment = moment.max(0.0);
        (-0.5 * (c2 - mu * mu) / (s * s)).exp() * moment / (2.0 * PI * s * s).powf(0.5 * dim as f64)
    }
}

/// Share of samples drawn from the broad component when a shaped component
/// is present.
const BROAD_SHARE: f64 = 0.3;

#[derive(Debug, Clone)]
pub(crate) struct Mixture {
    shaped: Option<LegProposal>,
    broad: LegProposal,
}

impl Mixture {
    pub(crate) fn new(shaped: Option<LegProposal>, dim: usize, extent: f64) -> Self {
        let shaped = shaped.filter(|p| p.center.len() == dim && p.scale > 0.0 && p.scale.is_finite());
        Mixture { shaped, broad: LegProposal::new(vec![0.0; dim], extent / 3.0) }
    }

    pub(crate) fn sample<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        match &self.shaped {
            Some(shaped) if rng.random::<f64>() >= BROAD_SHARE => shaped.sample(rng, out),
            _ => self.broad.sample(rng, out),
        }
    }

    pub(crate) fn density(&self, p: &[f64]) -> f64 {
        match &self.shaped {
            Some(shaped) => (1.0 - BROAD_SHARE) * shaped.density(p) + BROAD_SHARE * self.broad.density(p),
            None => self.broad.density(p),
        }
    }

    pub(crate) fn angular_density(&self, u: &[f64]) -> f64 {
        match &self.shaped {
            Some(shaped) => {
                (1.0 - BROAD_SHARE) * shaped.angular_density(u) + BROAD_SHARE * self.broad.angular_density(u)
            }
            None => self.broad.angular_density(u),
        }
    }
}
