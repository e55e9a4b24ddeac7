//! Monte Carlo evaluation of `delta(sum_j p_j) delta(sum_j s_j omega_j)`
//! applied to an n-leg integrand.
//!
//! The main estimator eliminates `p_n` by momentum conservation and resolves
//! the energy delta by co-area root finding along the radius of leg 1. The
//! nascent-delta oracle in [`oracle`] integrates the same functional by a
//! completely different route and is used only for validation.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::kinematics::ShellConfig;
use crate::parallel::{self, Accumulator};
use crate::{Error, Result};

mod gradient_scan;
pub mod oracle;
mod proposal;
mod scan;

pub use gradient_scan::{mixed_mass_min_gradient, MinGradientReport};
pub use oracle::{nascent_delta_oracle, OracleEstimate};
pub use proposal::LegProposal;

use proposal::Mixture;
pub use scan::{annulus_scan, exponent_fit, AnnulusScan, ExponentFit, ShellIntegral, Verdict};

/// Default number of samples per estimate.
pub const DEFAULT_BUDGET: usize = 1_000_000;
/// Default number of samples per dyadic shell.
pub const DEFAULT_SHELL_BUDGET: usize = 100_000;
/// Number of brackets searched for roots of `P` along the resolved radius.
pub const ROOT_BRACKETS: usize = 64;

/// An n-leg function evaluated on shell.
///
/// `omegas` holds the positive on-shell energies and `momenta` the flat
/// `n * (d - 1)` spatial momenta, with `p_n = -sum_{j<n} p_j`.
pub trait Integrand: Send + Sync {
    fn eval(&self, omegas: &[f64], momenta: &[f64]) -> Complex64;

    /// Momentum radius beyond which the integrand is negligible.
    fn radial_extent(&self) -> f64;

    /// Shape of the integrand's dependence on independent leg `leg`, used to
    /// place samples.
    fn proposal(&self, _leg: usize) -> Option<LegProposal> {
        None
    }
}

/// Closure-backed integrand.
pub struct FnIntegrand<F> {
    f: F,
    extent: f64,
    proposals: Vec<LegProposal>,
}

impl<F> FnIntegrand<F>
where
    F: Fn(&[f64], &[f64]) -> Complex64 + Send + Sync,
{
    pub fn new(extent: f64, f: F) -> Self {
        FnIntegrand { f, extent, proposals: Vec::new() }
    }

    pub fn with_proposals(mut self, proposals: Vec<LegProposal>) -> Self {
        self.proposals = proposals;
        self
    }
}

impl<F> Integrand for FnIntegrand<F>
where
    F: Fn(&[f64], &[f64]) -> Complex64 + Send + Sync,
{
    fn eval(&self, omegas: &[f64], momenta: &[f64]) -> Complex64 {
        (self.f)(omegas, momenta)
    }

    fn radial_extent(&self) -> f64 {
        self.extent
    }

    fn proposal(&self, leg: usize) -> Option<LegProposal> {
        self.proposals.get(leg).cloned()
    }
}

/// The delta functional applied to one integrand.
#[derive(Clone)]
pub struct DeltaFunctional {
    pub config: ShellConfig,
    pub integrand: Arc<dyn Integrand>,
    pub normalization: f64,
    /// Lower end of the root search for the resolved radius.
    pub r_min: f64,
}

impl DeltaFunctional {
    pub fn new(config: ShellConfig, integrand: Arc<dyn Integrand>) -> Self {
        DeltaFunctional { config, integrand, normalization: 1.0, r_min: 0.01 }
    }

    /// Ties the root-search floor to the positive-energy cutoff scale.
    pub fn with_cutoff_scale(mut self, beta: f64) -> Self {
        self.r_min = beta / 100.0;
        self
    }

    pub fn with_normalization(mut self, normalization: f64) -> Self {
        self.normalization = normalization;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateFlag {
    /// `k = 0` or `k = n`: the energy constraint has no positive-energy support.
    NoSupport,
    /// The connected function vanishes identically for this structure.
    StructuralZero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureEstimate {
    pub value: Complex64,
    pub stderr: f64,
    pub samples: u64,
    /// Radius below which the resolved leg was not searched.
    pub excluded_radius: f64,
    pub flag: Option<EstimateFlag>,
}

impl QuadratureEstimate {
    pub fn exact_zero(flag: EstimateFlag) -> Self {
        QuadratureEstimate {
            value: Complex64::new(0.0, 0.0),
            stderr: 0.0,
            samples: 0,
            excluded_radius: 0.0,
            flag: Some(flag),
        }
    }

    pub fn scaled(mut self, factor: Complex64) -> Self {
        self.value *= factor;
        self.stderr *= factor.norm();
        self
    }

    pub(crate) fn from_accumulator(acc: &Accumulator, excluded_radius: f64) -> Self {
        QuadratureEstimate { value: acc.mean(), stderr: acc.stderr(), samples: acc.count, excluded_radius, flag: None }
    }
}

/// Surface area of the unit sphere `S^{dim-1}` in `R^dim`.
pub fn sphere_area(dim: usize) -> f64 {
    use std::f64::consts::PI;
    match dim {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (dim as f64 - 2.0) * sphere_area(dim - 2),
    }
}

pub(crate) fn random_unit<R: Rng>(rng: &mut R, out: &mut [f64]) {
    loop {
        let mut len2 = 0.0;
        for x in out.iter_mut() {
            *x = rng.sample(StandardNormal);
            len2 += *x * *x;
        }
        if len2 > 1e-300 {
            let inv = len2.sqrt().recip();
            out.iter_mut().for_each(|x| *x *= inv);
            return;
        }
    }
}

/// `P` along the radius of the resolved leg `a`, with the other independent
/// momenta held fixed.
struct Slice<'a> {
    config: &'a ShellConfig,
    dim: usize,
    leg: usize,
    /// Unit direction of the resolved leg.
    u: &'a [f64],
    /// Sum of the other independent momenta.
    partial: &'a [f64],
    /// `sum_j s_j omega_j` over the other independent legs.
    fixed_energy: f64,
}

impl Slice<'_> {
    fn p(&self, r: f64) -> f64 {
        let n = self.config.n;
        let ma = self.config.masses[self.leg];
        let mn = self.config.masses[n - 1];
        let mut last2 = 0.0;
        for l in 0..self.dim {
            let x = r * self.u[l] + self.partial[l];
            last2 += x * x;
        }
        self.config.sign(self.leg) * (ma * ma + r * r).sqrt()
            + self.fixed_energy
            + self.config.sign(n - 1) * (mn * mn + last2).sqrt()
    }
}

/// Roots of `f` on `[lo, hi]` located by scanning `brackets` sub-intervals
/// for sign changes and bisecting each.
pub(crate) fn bracketed_roots(f: impl Fn(f64) -> f64, lo: f64, hi: f64, brackets: usize, roots: &mut Vec<f64>) {
    roots.clear();
    let step = (hi - lo) / brackets as f64;
    let mut a = lo;
    let mut fa = f(a);
    for i in 1..=brackets {
        let b = if i == brackets { hi } else { lo + step * i as f64 };
        let fb = f(b);
        if fa == 0.0 {
            roots.push(a);
        } else if fa * fb < 0.0 {
            let (mut x0, mut x1, mut f0) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (x0 + x1);
                if mid <= x0 || mid >= x1 {
                    break;
                }
                let fm = f(mid);
                if fm == 0.0 {
                    x0 = mid;
                    x1 = mid;
                    break;
                }
                if (fm < 0.0) == (f0 < 0.0) {
                    x0 = mid;
                    f0 = fm;
                } else {
                    x1 = mid;
                }
            }
            roots.push(0.5 * (x0 + x1));
        }
        a = b;
        fa = fb;
    }
}

/// Radial derivatives `dP/dr_b` of every independent leg at a full point.
fn radial_slopes(config: &ShellConfig, dim: usize, omegas: &[f64], momenta: &[f64], out: &mut [f64]) -> bool {
    let n = config.n;
    let last = &momenta[(n - 1) * dim..];
    let sn = config.sign(n - 1);
    if omegas[n - 1] == 0.0 {
        return false;
    }
    for (b, slope) in out.iter_mut().enumerate() {
        let p = &momenta[b * dim..(b + 1) * dim];
        let r = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r == 0.0 {
            return false;
        }
        let along: f64 = p.iter().zip(last).map(|(x, y)| x * y).sum::<f64>() / r;
        // p_n = -sum_b p_b, so d omega_n / d r_b = -(p_n . u_b) / omega_n
        *slope = config.sign(b) * r / omegas[b] - sn * along / omegas[n - 1];
    }
    true
}

/// Estimates `int prod_{j<n} dp_j delta(P) F((p)_n)` with `p_n = -sum p_j`.
///
/// The independent momenta are drawn from per-leg Gaussian mixtures. For each
/// independent leg `a` in turn, its radius is replaced by the roots of `P`
/// along its sampled direction. Each root carries the partition-of-unity
/// weight `|dP/dr_a| / sum_b |dP/dr_b|`, so the co-area factor becomes
/// `r^{d-2} / sum_b |dP/dr_b|` and stays bounded away from points where the
/// whole gradient vanishes.
pub fn eval_delta_functional(df: &DeltaFunctional, budget: usize, seed: u64) -> Result<QuadratureEstimate> {
    let config = &df.config;
    config.validate()?;
    let (n, k) = (config.n, config.k);
    if k == 0 || k == n {
        return Ok(QuadratureEstimate::exact_zero(EstimateFlag::NoSupport));
    }
    let dim = config.spatial_dim();
    let r_max = df.integrand.radial_extent();
    if !(r_max > df.r_min) || !r_max.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "integrand extent {r_max} must exceed the search floor {}",
            df.r_min
        )));
    }
    let legs = n - 1;
    let mixtures: Vec<Mixture> = (0..legs).map(|j| Mixture::new(df.integrand.proposal(j), dim, r_max)).collect();

    let acc: Accumulator = parallel::run(budget, seed, |rng, count, acc: &mut Accumulator| {
        let mut drawn = vec![0.0; legs * dim];
        let mut densities = vec![0.0; legs];
        let mut momenta = vec![0.0; n * dim];
        let mut omegas = vec![0.0; n];
        let mut partial = vec![0.0; dim];
        let mut u = vec![0.0; dim];
        let mut slopes = vec![0.0; legs];
        let mut roots = Vec::new();
        for _ in 0..count {
            for (j, mix) in mixtures.iter().enumerate() {
                let y = &mut drawn[j * dim..(j + 1) * dim];
                mix.sample(rng, y);
                densities[j] = mix.density(y);
            }
            let mut value = Complex64::new(0.0, 0.0);
            for a in 0..legs {
                let y = &drawn[a * dim..(a + 1) * dim];
                let len = y.iter().map(|x| x * x).sum::<f64>().sqrt();
                if len == 0.0 {
                    continue;
                }
                u.iter_mut().zip(y).for_each(|(ul, yl)| *ul = yl / len);
                let angular = mixtures[a].angular_density(&u);
                let mut others = 1.0;
                let mut fixed_energy = 0.0;
                partial.iter_mut().for_each(|x| *x = 0.0);
                for b in (0..legs).filter(|&b| b != a) {
                    let p = &drawn[b * dim..(b + 1) * dim];
                    momenta[b * dim..(b + 1) * dim].copy_from_slice(p);
                    partial.iter_mut().zip(p).for_each(|(s, x)| *s += x);
                    let m = config.masses[b];
                    omegas[b] = (m * m + p.iter().map(|x| x * x).sum::<f64>()).sqrt();
                    fixed_energy += config.sign(b) * omegas[b];
                    others *= densities[b];
                }
                if !(angular > 0.0 && others > 0.0) {
                    continue;
                }
                let slice = Slice { config, dim, leg: a, u: &u, partial: &partial, fixed_energy };
                bracketed_roots(|r| slice.p(r), df.r_min, r_max, ROOT_BRACKETS, &mut roots);
                for &r in &roots {
                    let mut last2 = 0.0;
                    for l in 0..dim {
                        let x = r * u[l];
                        momenta[a * dim + l] = x;
                        let last = -(x + partial[l]);
                        momenta[(n - 1) * dim + l] = last;
                        last2 += last * last;
                    }
                    let (ma, mn) = (config.masses[a], config.masses[n - 1]);
                    omegas[a] = (ma * ma + r * r).sqrt();
                    omegas[n - 1] = (mn * mn + last2).sqrt();
                    if !radial_slopes(config, dim, &omegas, &momenta, &mut slopes) {
                        continue;
                    }
                    let total: f64 = slopes.iter().map(|x| x.abs()).sum();
                    if total == 0.0 {
                        continue;
                    }
                    let f = df.integrand.eval(&omegas, &momenta);
                    value += f * (r.powi(dim as i32 - 1) / (total * angular * others));
                }
            }
            acc.push(value * df.normalization);
        }
    });
    Ok(QuadratureEstimate::from_accumulator(&acc, df.r_min))
}
