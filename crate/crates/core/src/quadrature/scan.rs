//! Dyadic shell decomposition around the singular cone.
//!
//! Around a singular ray the directions of legs `2..n-1` are written as
//! `u_j = s_j u_1 + e_j` with `e_j = t_j + a_j u_1`, `t_j` transverse to
//! `u_1` and `a_j` fixed by the length-preserving constraint. The stacked
//! transverse vector has `(d-2)(n-2)` components; the energy delta is
//! resolved in the energy of leg 1 in closed form. Shell `j` covers
//! `R in [eps 2^{-j-1}, eps 2^{-j}]` with `R` the norm of the stacked `e_j`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{random_unit, sphere_area, DeltaFunctional};
use crate::kinematics::{longitudinal, SingularRay};
use crate::parallel::{self, Accumulator};
use crate::tolerance;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellIntegral {
    pub level: usize,
    pub r_lo: f64,
    pub r_hi: f64,
    pub integral: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Summable,
    LogDivergent,
    Divergent,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Summable => "summable",
            Verdict::LogDivergent => "log-divergent",
            Verdict::Divergent => "divergent",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    /// Power of `R` governing the shell integrals; `None` when not fitted.
    pub exponent: Option<f64>,
    pub stderr: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusScan {
    pub ray: SingularRay,
    pub eps: f64,
    pub shells: Vec<ShellIntegral>,
}

impl AnnulusScan {
    /// Ratios `I_j / I_{j+1}` of successive shells.
    pub fn ratios(&self) -> Vec<f64> {
        self.shells.windows(2).map(|w| w[0].integral / w[1].integral).collect()
    }
}

/// Orthonormal basis of the complement of the unit vector `u`.
fn transverse_basis(u: &[f64]) -> Vec<Vec<f64>> {
    let dim = u.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(dim - 1);
    let mut candidates: Vec<usize> = (0..dim).collect();
    // start from the axes least aligned with u
    candidates.sort_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs()));
    for axis in candidates {
        if basis.len() == dim - 1 {
            break;
        }
        let mut v = vec![0.0; dim];
        v[axis] = 1.0;
        for _ in 0..2 {
            for b in std::iter::once(u).chain(basis.iter().map(Vec::as_slice)) {
                let proj: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
            }
        }
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len > 1e-6 {
            v.iter_mut().for_each(|x| *x /= len);
            basis.push(v);
        }
    }
    basis
}

/// `R^2` as a function of the transverse scale `rho` along a direction whose
/// per-leg block norms are `tau`.
fn radius_squared(rho: f64, tau: &[f64]) -> f64 {
    tau.iter()
        .map(|&t| {
            let t2 = (rho * t).powi(2);
            2.0 * t2 / (1.0 + (1.0 - t2).sqrt())
        })
        .sum()
}

/// Transverse scale with `R(rho) = target`, by bisection on the monotone map.
fn solve_rho(target: f64, tau: &[f64]) -> Option<f64> {
    let tmax = tau.iter().cloned().fold(0.0, f64::max);
    if tmax == 0.0 {
        return None;
    }
    let (mut lo, mut hi) = (0.0, 1.0 / tmax);
    if radius_squared(hi, tau) < target * target {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if radius_squared(mid, tau) < target * target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Shell integrals of the delta functional restricted to the neighborhood of
/// `ray`, with the energies of legs `2..n-1` held at the ray's values.
pub fn annulus_scan(
    df: &DeltaFunctional,
    ray: &SingularRay,
    eps: f64,
    levels: usize,
    budget: usize,
    seed: u64,
) -> Result<AnnulusScan> {
    let config = &df.config;
    config.validate()?;
    if !config.all_massless() {
        return Err(Error::InvalidConfig("annulus scans require all masses zero".into()));
    }
    let n = config.n;
    if ray.n() != n || ray.k != config.k || ray.spatial_dim() != config.spatial_dim() {
        return Err(Error::InvalidConfig("ray does not match the configuration".into()));
    }
    if n < 3 {
        return Err(Error::InfeasibleSampling("the neighborhood needs at least one offset leg".into()));
    }
    let balance: f64 = (0..n).map(|j| ray.sign(j) * ray.energies[j]).sum();
    let unit_err = (ray.direction.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs();
    if balance.abs() > tolerance::MACHINE * ray.energies.iter().sum::<f64>() || unit_err > tolerance::MACHINE {
        return Err(Error::InvalidConfig("ray is not balanced or direction is not a unit vector".into()));
    }
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::InfeasibleSampling(format!("outer radius {eps} outside (0, 0.5]")));
    }

    let dim = config.spatial_dim();
    let tdim = dim - 1;
    let offsets = n - 2;
    let stacked = tdim * offsets;
    let basis = transverse_basis(&ray.direction);
    let u = &ray.direction;
    let area = sphere_area(stacked);
    let fixed_weight: f64 = ray.energies[1..n - 1].iter().map(|w| w.powi(dim as i32 - 1)).product();
    let fixed_energy: f64 = (1..n - 1).map(|j| ray.sign(j) * ray.energies[j]).sum();

    let mut shells = Vec::with_capacity(levels);
    for level in 0..levels {
        let r_hi = eps * 0.5f64.powi(level as i32);
        let r_lo = 0.5 * r_hi;
        let acc: Accumulator =
            parallel::run(budget, parallel::subseed(seed, level as u64), |rng, count, acc: &mut Accumulator| {
                let mut w = vec![0.0; stacked];
                let mut tau = vec![0.0; offsets];
                let mut momenta = vec![0.0; n * dim];
                let mut omegas = vec![0.0; n];
                let mut b = vec![0.0; dim];
                for _ in 0..count {
                    random_unit(rng, &mut w);
                    for (i, t) in tau.iter_mut().enumerate() {
                        *t = w[i * tdim..(i + 1) * tdim].iter().map(|x| x * x).sum::<f64>().sqrt();
                    }
                    let (Some(rho_lo), Some(rho_hi)) = (solve_rho(r_lo, &tau), solve_rho(r_hi, &tau)) else {
                        acc.push(Complex64::new(0.0, 0.0));
                        continue;
                    };
                    let log_span = (rho_hi / rho_lo).ln();
                    let rho = rho_lo * (rng.random::<f64>() * log_span).exp();

                    let mut geom = area * rho.powi(stacked as i32) * log_span;
                    let mut c = 0.0;
                    b.iter_mut().for_each(|x| *x = 0.0);
                    for i in 0..offsets {
                        let j = i + 1;
                        let s = ray.sign(j);
                        let wj = ray.energies[j];
                        let t2 = (rho * tau[i]).powi(2);
                        geom /= (1.0 - t2).sqrt();
                        let a = longitudinal(s, t2);
                        c += wj * a;
                        for l in 0..dim {
                            let t: f64 = (0..tdim).map(|m| rho * w[i * tdim + m] * basis[m][l]).sum();
                            b[l] += wj * t;
                            momenta[j * dim + l] = wj * ((s + a) * u[l] + t);
                        }
                        omegas[j] = wj;
                    }
                    // P = S - sqrt((S + c)^2 + |B|^2) with S = omega_1 + fixed_energy
                    if c >= 0.0 {
                        acc.push(Complex64::new(0.0, 0.0));
                        continue;
                    }
                    let b2: f64 = b.iter().map(|x| x * x).sum();
                    let s_root = (c * c + b2) / (-2.0 * c);
                    let w1 = s_root - fixed_energy;
                    if !(w1 > 0.0) || !w1.is_finite() {
                        acc.push(Complex64::new(0.0, 0.0));
                        continue;
                    }
                    omegas[0] = w1;
                    omegas[n - 1] = s_root;
                    for l in 0..dim {
                        momenta[l] = w1 * u[l];
                        let sum: f64 = (0..n - 1).map(|j| momenta[j * dim + l]).sum();
                        momenta[(n - 1) * dim + l] = -sum;
                    }
                    // |dP/d omega_1| = -c / S at the root
                    let jacobian = w1.powi(dim as i32 - 1) * s_root / (-c);
                    let f = df.integrand.eval(&omegas, &momenta);
                    acc.push(f * (df.normalization * geom * jacobian * fixed_weight));
                }
            });
        shells.push(ShellIntegral { level, r_lo, r_hi, integral: acc.mean().re, stderr: acc.stderr() });
    }
    Ok(AnnulusScan { ray: ray.clone(), eps, shells })
}

/// Least-squares fit of `log I_j = const - e * j log 2`; `e` is the power of
/// `R` in the shell integrals.
pub fn exponent_fit(scan: &AnnulusScan) -> ExponentFit {
    fit_shells(&scan.shells)
}

pub fn fit_shells(shells: &[ShellIntegral]) -> ExponentFit {
    let inconclusive = ExponentFit { exponent: None, stderr: None, verdict: Verdict::Inconclusive };
    if shells.len() < 3 {
        return inconclusive;
    }
    if shells.iter().any(|s| {
        !(s.integral > 0.0) || !s.integral.is_finite() || s.stderr / s.integral >= tolerance::MAX_SHELL_RELATIVE_ERROR
    }) {
        return inconclusive;
    }
    let ln2 = std::f64::consts::LN_2;
    let xs: Vec<f64> = shells.iter().map(|s| s.level as f64 * ln2).collect();
    let ys: Vec<f64> = shells.iter().map(|s| s.integral.ln()).collect();
    let sig: Vec<f64> = shells.iter().map(|s| s.stderr / s.integral).collect();
    let m = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / m;
    let ybar = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let var: f64 = xs.iter().zip(&sig).map(|(x, s)| ((x - xbar) * s).powi(2)).sum::<f64>() / (sxx * sxx);
    let exponent = -slope;
    let se = var.sqrt();
    let verdict = if exponent.abs() < tolerance::LOG_DIVERGENT_EXPONENT {
        Verdict::LogDivergent
    } else if exponent - 2.0 * se > 0.0 {
        Verdict::Summable
    } else if exponent + 2.0 * se < 0.0 {
        Verdict::Divergent
    } else {
        Verdict::Inconclusive
    };
    ExponentFit { exponent: Some(exponent), stderr: Some(se), verdict }
}
