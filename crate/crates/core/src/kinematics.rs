//! On-shell kinematics of n-leg configurations.
//!
//! Legs `1..=k` carry sign `+1` and legs `k+1..=n` sign `-1` in the
//! conserved-energy function `P = sum_j s_j omega_j`. Momentum conservation
//! makes the last leg dependent: `p_n = -(p_1 + ... + p_{n-1})`.

use serde::{Deserialize, Serialize};

use crate::tolerance;
use crate::{Error, Result};

/// On-shell energy `sqrt(m^2 + |p|^2)`.
pub fn omega(mass: f64, p: &[f64]) -> Result<f64> {
    let p2 = norm2(p);
    if mass == 0.0 && p2 == 0.0 {
        return Err(Error::ZeroMomentumMassless { leg: 0 });
    }
    Ok((mass * mass + p2).sqrt())
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellConfig {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub masses: Vec<f64>,
}

impl ShellConfig {
    pub fn new(n: usize, d: usize, k: usize, masses: Vec<f64>) -> Result<Self> {
        let config = ShellConfig { n, d, k, masses };
        config.validate()?;
        Ok(config)
    }

    pub fn massless(n: usize, d: usize, k: usize) -> Result<Self> {
        Self::new(n, d, k, vec![0.0; n])
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidConfig(format!("n = {} < 2", self.n)));
        }
        if self.d < 3 {
            return Err(Error::InvalidConfig(format!("d = {} < 3", self.d)));
        }
        if self.k > self.n {
            return Err(Error::InvalidConfig(format!("k = {} > n = {}", self.k, self.n)));
        }
        if self.masses.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: self.masses.len() });
        }
        if let Some(m) = self.masses.iter().find(|m| !(**m >= 0.0) || !m.is_finite()) {
            return Err(Error::InvalidConfig(format!("mass {m} is not a finite non-negative value")));
        }
        Ok(())
    }

    /// Spatial dimension `d - 1`.
    pub fn spatial_dim(&self) -> usize {
        self.d - 1
    }

    /// Sign of leg `j` (zero-based).
    pub fn sign(&self, j: usize) -> f64 {
        if j < self.k {
            1.0
        } else {
            -1.0
        }
    }

    pub fn signs(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.sign(j)).collect()
    }

    pub fn all_massless(&self) -> bool {
        self.masses.iter().all(|&m| m == 0.0)
    }

    pub fn all_massive(&self) -> bool {
        self.masses.iter().all(|&m| m > 0.0)
    }

    pub fn is_mixed(&self) -> bool {
        !self.all_massless() && !self.all_massive()
    }

    fn check_point(&self, point: &MomentumConfig) -> Result<()> {
        if point.momenta.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: point.momenta.len() });
        }
        let dim = self.spatial_dim();
        if let Some(p) = point.momenta.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
        }
        Ok(())
    }

    /// On-shell energies of every leg of `point`.
    pub fn energies(&self, point: &MomentumConfig) -> Result<Vec<f64>> {
        self.check_point(point)?;
        self.masses
            .iter()
            .zip(&point.momenta)
            .enumerate()
            .map(|(j, (&m, p))| omega(m, p).map_err(|_| Error::ZeroMomentumMassless { leg: j }))
            .collect()
    }
}

/// A point `(p)_n` of spatial momenta, one `(d-1)`-vector per leg.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumConfig {
    pub momenta: Vec<Vec<f64>>,
}

impl MomentumConfig {
    pub fn new(momenta: Vec<Vec<f64>>) -> Self {
        MomentumConfig { momenta }
    }

    /// Builds a conserving configuration from the first `n - 1` momenta.
    pub fn from_independent(independent: Vec<Vec<f64>>) -> Self {
        let dim = independent.first().map_or(0, Vec::len);
        let mut last = vec![0.0; dim];
        for p in &independent {
            for (l, x) in last.iter_mut().zip(p) {
                *l -= x;
            }
        }
        let mut momenta = independent;
        momenta.push(last);
        MomentumConfig { momenta }
    }

    pub fn total_momentum(&self) -> Vec<f64> {
        let dim = self.momenta.first().map_or(0, Vec::len);
        let mut total = vec![0.0; dim];
        for p in &self.momenta {
            for (t, x) in total.iter_mut().zip(p) {
                *t += x;
            }
        }
        total
    }

    /// Whether the momenta sum to zero within `tol`, relative to the largest momentum.
    pub fn conserved_within(&self, tol: f64) -> bool {
        let scale = self.momenta.iter().map(|p| norm2(p).sqrt()).fold(1.0, f64::max);
        norm2(&self.total_momentum()).sqrt() <= tol * scale
    }

    pub fn conserved(&self) -> bool {
        self.conserved_within(tolerance::CONSERVATION)
    }

    pub fn scaled(&self, beta: f64) -> Self {
        MomentumConfig { momenta: self.momenta.iter().map(|p| p.iter().map(|x| beta * x).collect()).collect() }
    }
}

/// Combined JSON document for a configuration and a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellPoint {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub masses: Vec<f64>,
    pub momenta: Vec<Vec<f64>>,
}

impl ShellPoint {
    pub fn new(config: &ShellConfig, point: &MomentumConfig) -> Self {
        ShellPoint {
            n: config.n,
            d: config.d,
            k: config.k,
            masses: config.masses.clone(),
            momenta: point.momenta.clone(),
        }
    }

    pub fn split(self) -> Result<(ShellConfig, MomentumConfig)> {
        let config = ShellConfig::new(self.n, self.d, self.k, self.masses)?;
        let point = MomentumConfig::new(self.momenta);
        config.check_point(&point)?;
        Ok((config, point))
    }
}

/// Conserved-energy function `P = sum_j s_j omega_j`.
pub fn pk0(config: &ShellConfig, point: &MomentumConfig) -> Result<f64> {
    let energies = config.energies(point)?;
    Ok(energies.iter().enumerate().map(|(j, w)| config.sign(j) * w).sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    /// `(n-1) x (d-1)` matrix, row `j` is the derivative with respect to `p_j`.
    pub matrix: Vec<Vec<f64>>,
    pub norm: f64,
}

/// Gradient of `P` with respect to the independent momenta `p_1..p_{n-1}`,
/// with `p_n` eliminated through momentum conservation.
pub fn gradient(config: &ShellConfig, point: &MomentumConfig) -> Result<Gradient> {
    let energies = config.energies(point)?;
    let n = config.n;
    let last = &point.momenta[n - 1];
    let sn = config.sign(n - 1);
    let matrix: Vec<Vec<f64>> = (0..n - 1)
        .map(|j| {
            let sj = config.sign(j);
            point.momenta[j]
                .iter()
                .zip(last)
                .map(|(pj, pn)| sj * pj / energies[j] - sn * pn / energies[n - 1])
                .collect()
        })
        .collect();
    let norm = matrix.iter().map(|row| norm2(row)).sum::<f64>().sqrt();
    Ok(Gradient { matrix, norm })
}

/// A collinear all-massless configuration `p_j = s_j omega_j u_1` with
/// balanced energies, on which the gradient of `P` vanishes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularRay {
    pub k: usize,
    pub direction: Vec<f64>,
    pub energies: Vec<f64>,
}

impl SingularRay {
    pub fn n(&self) -> usize {
        self.energies.len()
    }

    pub fn spatial_dim(&self) -> usize {
        self.direction.len()
    }

    pub fn sign(&self, j: usize) -> f64 {
        if j < self.k {
            1.0
        } else {
            -1.0
        }
    }

    pub fn config(&self) -> ShellConfig {
        ShellConfig { n: self.n(), d: self.spatial_dim() + 1, k: self.k, masses: vec![0.0; self.n()] }
    }

    pub fn momenta(&self) -> MomentumConfig {
        let momenta = self
            .energies
            .iter()
            .enumerate()
            .map(|(j, w)| self.direction.iter().map(|u| self.sign(j) * w * u).collect())
            .collect();
        MomentumConfig { momenta }
    }

    /// Rescales every energy by `beta > 0`; the result is again a ray.
    pub fn scaled(&self, beta: f64) -> Self {
        SingularRay {
            k: self.k,
            direction: self.direction.clone(),
            energies: self.energies.iter().map(|w| beta * w).collect(),
        }
    }
}

/// Builds a singular ray along `direction`, balancing the energies by
/// rescaling only the negative-sign block of `energy_seed`.
pub fn sample_singular_ray(config: &ShellConfig, direction: &[f64], energy_seed: &[f64]) -> Result<SingularRay> {
    config.validate()?;
    let (n, k) = (config.n, config.k);
    if !config.all_massless() {
        return Err(Error::InvalidConfig("singular rays require all masses zero".into()));
    }
    if k == 0 || k == n {
        return Err(Error::DegenerateSignSplit { n, k });
    }
    if direction.len() != config.spatial_dim() {
        return Err(Error::DimensionMismatch { expected: config.spatial_dim(), got: direction.len() });
    }
    if energy_seed.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: energy_seed.len() });
    }
    if let Some(w) = energy_seed.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
        return Err(Error::InfeasibleEnergySplit(format!("seed energy {w} is not positive")));
    }
    let len = norm2(direction).sqrt();
    if !(len > 0.0) || !len.is_finite() {
        return Err(Error::InvalidConfig("direction must be a nonzero finite vector".into()));
    }
    let direction: Vec<f64> = direction.iter().map(|x| x / len).collect();
    let plus: f64 = energy_seed[..k].iter().sum();
    let minus: f64 = energy_seed[k..].iter().sum();
    let ratio = plus / minus;
    let energies = energy_seed.iter().enumerate().map(|(j, &w)| if j < k { w } else { w * ratio }).collect();
    Ok(SingularRay { k, direction, energies })
}

/// Offsets `e_j` (legs `2..n-1`) around a singular ray, each satisfying
/// `e_j^2 = -2 s_j (u_1 . e_j)` so that `s_j u_1 + e_j` stays a unit vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodOffsets {
    pub offsets: Vec<Vec<f64>>,
}

impl NeighborhoodOffsets {
    pub fn zero(ray: &SingularRay) -> Self {
        NeighborhoodOffsets { offsets: vec![vec![0.0; ray.spatial_dim()]; ray.n() - 2] }
    }

    /// Projects raw vectors onto the constraint: the component transverse to
    /// `u_1` is kept and the component along `u_1` is the root of the
    /// constraint quadratic that vanishes with the transverse part.
    pub fn project(ray: &SingularRay, raw: &[Vec<f64>]) -> Result<Self> {
        let n = ray.n();
        if raw.len() != n - 2 {
            return Err(Error::DimensionMismatch { expected: n - 2, got: raw.len() });
        }
        let u = &ray.direction;
        let offsets = raw
            .iter()
            .enumerate()
            .map(|(i, v)| {
                if v.len() != u.len() {
                    return Err(Error::DimensionMismatch { expected: u.len(), got: v.len() });
                }
                let along = dot(v, u);
                let transverse: Vec<f64> = v.iter().zip(u).map(|(x, ui)| x - along * ui).collect();
                let t2 = norm2(&transverse);
                if t2 >= 1.0 {
                    return Err(Error::ConstraintViolation { index: i, violation: t2 - 1.0 });
                }
                let a = longitudinal(ray.sign(i + 1), t2);
                Ok(transverse.iter().zip(u).map(|(t, ui)| t + a * ui).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(NeighborhoodOffsets { offsets })
    }

    pub fn radius_squared(&self) -> f64 {
        self.offsets.iter().map(|e| norm2(e)).sum()
    }

    pub fn scaled(&self, t: f64) -> Self {
        NeighborhoodOffsets { offsets: self.offsets.iter().map(|e| e.iter().map(|x| t * x).collect()).collect() }
    }

    /// Residual of the constraint for each offset.
    pub fn constraint_violation(&self, ray: &SingularRay) -> Vec<f64> {
        self.offsets
            .iter()
            .enumerate()
            .map(|(i, e)| (norm2(e) + 2.0 * ray.sign(i + 1) * dot(&ray.direction, e)).abs())
            .collect()
    }
}

/// Component along `u_1` solving `a^2 + 2 s a + t^2 = 0`, the root that
/// vanishes as `t -> 0`, written without cancellation.
pub(crate) fn longitudinal(sign: f64, t2: f64) -> f64 {
    -sign * t2 / (1.0 + (1.0 - t2).sqrt())
}

/// The point `p_1 = omega_1 u_1`, `p_j = omega_j (s_j u_1 + e_j)`,
/// `p_n = -sum_j p_j` in the neighborhood of `ray`.
pub fn neighborhood_point(ray: &SingularRay, offsets: &NeighborhoodOffsets) -> Result<MomentumConfig> {
    let n = ray.n();
    if offsets.offsets.len() != n - 2 {
        return Err(Error::DimensionMismatch { expected: n - 2, got: offsets.offsets.len() });
    }
    if let Some(e) = offsets.offsets.iter().find(|e| e.len() != ray.spatial_dim()) {
        return Err(Error::DimensionMismatch { expected: ray.spatial_dim(), got: e.len() });
    }
    for (index, violation) in offsets.constraint_violation(ray).into_iter().enumerate() {
        if violation > tolerance::CONSTRAINT {
            return Err(Error::ConstraintViolation { index, violation });
        }
    }
    let u = &ray.direction;
    let mut independent = Vec::with_capacity(n - 1);
    independent.push(u.iter().map(|x| ray.energies[0] * x).collect());
    for (i, e) in offsets.offsets.iter().enumerate() {
        let j = i + 1;
        let s = ray.sign(j);
        independent.push(u.iter().zip(e).map(|(x, ej)| ray.energies[j] * (s * x + ej)).collect());
    }
    Ok(MomentumConfig::from_independent(independent))
}

/// `e_n` defined by `omega_n e_n = -sum_{j=2}^{n-1} omega_j e_j`.
pub fn dependent_offset(ray: &SingularRay, offsets: &NeighborhoodOffsets) -> Vec<f64> {
    let n = ray.n();
    let mut en = vec![0.0; ray.spatial_dim()];
    for (i, e) in offsets.offsets.iter().enumerate() {
        let w = ray.energies[i + 1];
        for (x, y) in en.iter_mut().zip(e) {
            *x -= w * y;
        }
    }
    let wn = ray.energies[n - 1];
    en.iter_mut().for_each(|x| *x /= wn);
    en
}

/// `c_n` from `omega_n c_n = sum_{j<n} s_j omega_j`; equals 1 on a balanced ray.
pub fn cn(ray: &SingularRay) -> f64 {
    let n = ray.n();
    let sum: f64 = (0..n - 1).map(|j| ray.sign(j) * ray.energies[j]).sum();
    sum / ray.energies[n - 1]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalExpansion {
    pub radius_squared: f64,
    pub alpha: f64,
}

/// Second-order coefficient of `P` near the ray: `P ~ R^2 alpha` with
/// `R^2 alpha = 1/2 sum_{j=2}^{n} s_j omega_j e_j^2` and `e_n` from
/// [`dependent_offset`].
pub fn local_alpha(ray: &SingularRay, offsets: &NeighborhoodOffsets) -> Result<LocalExpansion> {
    let r2 = offsets.radius_squared();
    if r2 == 0.0 {
        return Err(Error::ZeroRadius);
    }
    let n = ray.n();
    let en = dependent_offset(ray, offsets);
    let mut sum: f64 =
        offsets.offsets.iter().enumerate().map(|(i, e)| ray.sign(i + 1) * ray.energies[i + 1] * norm2(e)).sum();
    sum += ray.sign(n - 1) * ray.energies[n - 1] * norm2(&en);
    Ok(LocalExpansion { radius_squared: r2, alpha: 0.5 * sum / r2 })
}
