//! Connected functions of the scalar model with constant couplings, the free
//! two-point functional and the four-leg LSZ amplitude.
//!
//! A connected term pairs every leg with a negative (`-`) or positive (`+`)
//! mass shell. The quadrature layer orders legs by sign with `s_j = +1` first,
//! so [`ShellAdapter`] moves the `-` legs to the front (stable order) and maps
//! every quadrature point back to the sequence's own leg order. This is the
//! only place where the two sign bookkeepings meet.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{lsz_state, phi_map, sequence_product, CutoffProfile, LegFunction, TestFunctionSequence};
use crate::kinematics::ShellConfig;
use crate::quadrature::{
    eval_delta_functional, DeltaFunctional, EstimateFlag, Integrand, LegProposal, QuadratureEstimate,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LegSign {
    #[serde(rename = "-")]
    Minus,
    #[serde(rename = "+")]
    Plus,
}

/// How a leg on the negative shell binds the test function's energy argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignConvention {
    /// Negative-shell legs are bra legs: evaluated at the reflected energy
    /// `E = +omega` and complex conjugated.
    #[default]
    Reflected,
    /// Negative-shell legs are evaluated at `E = -omega` as written. The
    /// positive-energy cutoff annihilates such legs.
    Literal,
}

impl SignConvention {
    pub fn as_str(&self) -> &'static str {
        match self {
            SignConvention::Reflected => "reflected",
            SignConvention::Literal => "literal",
        }
    }
}

/// Binds the on-shell point produced by the quadrature to one component of a
/// test-function sequence.
pub struct ShellAdapter {
    seq: TestFunctionSequence,
    n: usize,
    dim: usize,
    /// `order[q]` is the sequence position of quadrature leg `q`.
    order: Vec<usize>,
    signs: Vec<LegSign>,
    conjugate: Vec<bool>,
    convention: SignConvention,
}

impl ShellAdapter {
    pub fn new(seq: TestFunctionSequence, signs: &[LegSign], convention: SignConvention) -> Self {
        let n = signs.len();
        let order = quadrature_order(signs);
        let conjugate = signs.iter().map(|s| *s == LegSign::Minus && convention == SignConvention::Reflected).collect();
        let dim = seq.d() - 1;
        ShellAdapter { seq, n, dim, order, signs: signs.to_vec(), conjugate, convention }
    }

    /// Number of negative-shell legs, i.e. the sign split `k` of the quadrature.
    pub fn k(&self) -> usize {
        self.signs.iter().filter(|s| **s == LegSign::Minus).count()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }
}

/// Sequence positions of the `-` legs followed by the `+` legs.
pub fn quadrature_order(signs: &[LegSign]) -> Vec<usize> {
    let minus = signs.iter().enumerate().filter(|(_, s)| **s == LegSign::Minus).map(|(i, _)| i);
    let plus = signs.iter().enumerate().filter(|(_, s)| **s == LegSign::Plus).map(|(i, _)| i);
    minus.chain(plus).collect()
}

impl Integrand for ShellAdapter {
    fn eval(&self, omegas: &[f64], momenta: &[f64]) -> Complex64 {
        let (n, dim) = (self.n, self.dim);
        let mut energies = vec![0.0; n];
        let mut seq_momenta = vec![0.0; n * dim];
        for (q, &pos) in self.order.iter().enumerate() {
            energies[pos] = match (self.signs[pos], self.convention) {
                (LegSign::Minus, SignConvention::Literal) => -omegas[q],
                _ => omegas[q],
            };
            seq_momenta[pos * dim..(pos + 1) * dim].copy_from_slice(&momenta[q * dim..(q + 1) * dim]);
        }
        self.seq.eval_flat(n, &energies, &seq_momenta, &self.conjugate)
    }

    fn radial_extent(&self) -> f64 {
        self.seq.radial_extent(self.n)
    }

    /// The Gaussian factor of the matching leg when the component is a single
    /// product, widened to absorb energy and polynomial factors.
    fn proposal(&self, leg: usize) -> Option<LegProposal> {
        match self.seq.component(self.n) {
            [term] => {
                let f = &term.legs[*self.order.get(leg)?];
                Some(LegProposal::new(f.center.clone(), PROPOSAL_WIDENING * f.sigma))
            }
            _ => None,
        }
    }
}

const PROPOSAL_WIDENING: f64 = 1.25;

/// One connected term with constant couplings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectedTerm {
    pub signs: Vec<LegSign>,
    /// Mass of the species on each leg.
    pub masses: Vec<f64>,
    #[serde(default = "one")]
    pub c_n: f64,
    #[serde(default = "one")]
    pub upsilon: f64,
    #[serde(default = "yes")]
    pub two_pi_factor: bool,
    #[serde(default)]
    pub convention: SignConvention,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

impl ConnectedTerm {
    pub fn new(signs: Vec<LegSign>, masses: Vec<f64>) -> Self {
        ConnectedTerm {
            signs,
            masses,
            c_n: 1.0,
            upsilon: 1.0,
            two_pi_factor: true,
            convention: SignConvention::Reflected,
        }
    }

    pub fn n(&self) -> usize {
        self.signs.len()
    }

    /// Odd leg counts and fewer than two legs of either sign vanish identically.
    pub fn is_structural_zero(&self) -> bool {
        let minus = self.signs.iter().filter(|s| **s == LegSign::Minus).count();
        let plus = self.n() - minus;
        self.n() % 2 == 1 || minus < 2 || plus < 2
    }

    /// Constant prefactor `(2 pi)^d c_n upsilon`.
    pub fn prefactor(&self, d: usize) -> f64 {
        let base = self.c_n * self.upsilon;
        if self.two_pi_factor {
            base * (2.0 * PI).powi(d as i32)
        } else {
            base
        }
    }
}

/// Evaluates the connected term on the `n`-leg component of `phi(seq)`.
pub fn tn_eval(
    term: &ConnectedTerm,
    seq: &TestFunctionSequence,
    cutoff: &CutoffProfile,
    budget: usize,
    seed: u64,
) -> Result<QuadratureEstimate> {
    let n = term.n();
    if term.masses.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: term.masses.len() });
    }
    if term.is_structural_zero() {
        return Ok(QuadratureEstimate::exact_zero(EstimateFlag::StructuralZero));
    }
    if seq.component(n).is_empty() {
        return Err(Error::InvalidConfig(format!("sequence has no {n}-leg component")));
    }
    let d = seq.d();
    let cut = phi_map(seq, cutoff);
    let adapter = ShellAdapter::new(cut, &term.signs, term.convention);
    let masses = adapter.order().iter().map(|&pos| term.masses[pos]).collect();
    let config = ShellConfig::new(n, d, adapter.k(), masses)?;
    let beta_min = (0..n).map(|k| cutoff.beta(k)).fold(f64::INFINITY, f64::min);
    let df = DeltaFunctional::new(config, Arc::new(adapter)).with_cutoff_scale(beta_min);
    let est = eval_delta_functional(&df, budget, seed)?;
    Ok(est.scaled(Complex64::new(term.prefactor(d), 0.0)))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    for i in 0..order.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = order as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// Unit directions in `R^dim` with hyperspherical product-rule weights.
fn angular_rule(dim: usize, polar_nodes: usize, azimuth_nodes: usize) -> Vec<(Vec<f64>, f64)> {
    if dim == 2 {
        let w = 2.0 * PI / azimuth_nodes as f64;
        return (0..azimuth_nodes)
            .map(|i| {
                let phi = 2.0 * PI * (i as f64 + 0.5) / azimuth_nodes as f64;
                (vec![phi.cos(), phi.sin()], w)
            })
            .collect();
    }
    let (x, wx) = gauss_legendre(polar_nodes);
    let inner = angular_rule(dim - 1, polar_nodes, azimuth_nodes);
    let mut out = Vec::with_capacity(polar_nodes * inner.len());
    for (xi, wi) in x.iter().zip(&wx) {
        let theta = 0.5 * PI * (xi + 1.0);
        let (s, c) = theta.sin_cos();
        let w = 0.5 * PI * wi * s.powi(dim as i32 - 2);
        for (dir, wd) in &inner {
            let mut v = Vec::with_capacity(dim);
            v.push(c);
            v.extend(dir.iter().map(|y| s * y));
            out.push((v, w * wd));
        }
    }
    out
}

/// Free two-point functional `int d^{d-1}p conj(f1(omega, p)) f2(omega, p) / (2 omega)`
/// on the positive shell, by a product Gauss rule.
pub fn free_two_point(f1: &TestFunctionSequence, f2: &TestFunctionSequence, mass: f64) -> Result<Complex64> {
    if f1.d() != f2.d() {
        return Err(Error::DimensionMismatch { expected: f1.d(), got: f2.d() });
    }
    if !(mass >= 0.0) {
        return Err(Error::InvalidConfig(format!("mass {mass} must be non-negative")));
    }
    let dim = f1.d() - 1;
    let r_max = f1.radial_extent(1).max(f2.radial_extent(1));
    if f1.component(1).is_empty() || f2.component(1).is_empty() || r_max == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let (polar, azimuth) = if dim <= 3 { (32, 64) } else { (20, 40) };
    let angles = angular_rule(dim, polar, azimuth);
    let (x, wx) = gauss_legendre(16);
    let panels = 16;
    let width = r_max / panels as f64;
    let mut total = Complex64::new(0.0, 0.0);
    let mut p = vec![0.0; dim];
    for panel in 0..panels {
        let a = panel as f64 * width;
        for (xi, wi) in x.iter().zip(&wx) {
            let r = a + 0.5 * width * (xi + 1.0);
            let w_r = 0.5 * width * wi * r.powi(dim as i32 - 1);
            let omega = (mass * mass + r * r).sqrt();
            if omega == 0.0 {
                continue;
            }
            let mut shell = Complex64::new(0.0, 0.0);
            for (dir, wd) in &angles {
                p.iter_mut().zip(dir).for_each(|(pi, u)| *pi = r * u);
                let a1 = f1.eval_flat(1, &[omega], &p, &[]).conj();
                let a2 = f2.eval_flat(1, &[omega], &p, &[]);
                shell += a1 * a2 * *wd;
            }
            total += shell * (w_r / (2.0 * omega));
        }
    }
    Ok(total)
}

/// One LSZ leg: the underlying test function, its mass and time parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LszSpec {
    pub leg: LegFunction,
    pub mass: f64,
    #[serde(default)]
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeRequest {
    pub d: usize,
    #[serde(rename = "in")]
    pub in_states: Vec<LszSpec>,
    #[serde(rename = "out")]
    pub out_states: Vec<LszSpec>,
    #[serde(default = "one")]
    pub upsilon: f64,
    #[serde(default = "one")]
    pub c_n: f64,
    #[serde(default = "yes")]
    pub two_pi_factor: bool,
    #[serde(default)]
    pub cutoff: CutoffProfile,
    #[serde(default)]
    pub convention: SignConvention,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_budget() -> usize {
    crate::quadrature::DEFAULT_BUDGET
}

impl AmplitudeRequest {
    /// The four-leg sequence `out_1 out_2 in_1 in_2` and its connected term.
    pub fn build(&self) -> Result<(ConnectedTerm, TestFunctionSequence)> {
        if self.in_states.len() != 2 || self.out_states.len() != 2 {
            return Err(Error::InvalidConfig(format!(
                "the amplitude needs 2 in and 2 out states, got {} and {}",
                self.in_states.len(),
                self.out_states.len()
            )));
        }
        let mut seq = TestFunctionSequence::unit(self.d);
        let mut signs = Vec::with_capacity(4);
        let mut masses = Vec::with_capacity(4);
        let legs = self
            .out_states
            .iter()
            .map(|s| (s, LegSign::Minus))
            .chain(self.in_states.iter().map(|s| (s, LegSign::Plus)));
        for (spec, sign) in legs {
            let state = lsz_state(self.d, spec.leg.clone(), spec.mass, spec.t)?;
            seq = sequence_product(&seq, &state)?;
            signs.push(sign);
            masses.push(spec.mass);
        }
        let term = ConnectedTerm {
            signs,
            masses,
            c_n: self.c_n,
            upsilon: self.upsilon,
            two_pi_factor: self.two_pi_factor,
            convention: self.convention,
        };
        Ok((term, seq))
    }
}

/// Four-leg amplitude: out states on the negative shell, in states on the
/// positive shell, evaluated through [`tn_eval`].
pub fn scalar_4pt_lsz(req: &AmplitudeRequest) -> Result<QuadratureEstimate> {
    let (term, seq) = req.build()?;
    tn_eval(&term, &seq, &req.cutoff, req.budget, req.seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{EnergyMultiplier, ProductTerm};
    use LegSign::{Minus, Plus};

    fn four_leg(d: usize) -> TestFunctionSequence {
        let dim = d - 1;
        let mut seq = TestFunctionSequence::zero(d);
        let legs = (0..4)
            .map(|j| {
                let mut c = vec![0.0; dim];
                c[j % dim] = if j < 2 { 1.0 } else { -1.0 };
                LegFunction::gaussian(c, 0.5)
            })
            .collect();
        seq.push_term(ProductTerm { coeff: Complex64::new(1.0, 0.0), legs }).unwrap();
        seq
    }

    #[test]
    fn structural_zeros() {
        let seq = four_leg(4);
        let cut = CutoffProfile::default();
        let odd = ConnectedTerm::new(vec![Minus, Minus, Plus, Plus, Plus], vec![0.0; 5]);
        let est = tn_eval(&odd, &seq, &cut, 1000, 0).unwrap();
        assert_eq!(est.value, Complex64::new(0.0, 0.0));
        assert_eq!(est.flag, Some(EstimateFlag::StructuralZero));
        assert_eq!(est.samples, 0);
        let deficient = ConnectedTerm::new(vec![Minus, Plus, Plus, Plus], vec![0.0; 4]);
        assert_eq!(tn_eval(&deficient, &seq, &cut, 1000, 0).unwrap().flag, Some(EstimateFlag::StructuralZero));
    }

    #[test]
    fn quadrature_order_is_stable() {
        assert_eq!(quadrature_order(&[Plus, Minus, Plus, Minus]), vec![1, 3, 0, 2]);
        assert_eq!(quadrature_order(&[Minus, Minus, Plus, Plus]), vec![0, 1, 2, 3]);
    }

    #[test]
    fn adapter_maps_legs_back() {
        let d = 3;
        let mut seq = TestFunctionSequence::zero(d);
        let legs: Vec<LegFunction> = (0..4)
            .map(|j| LegFunction::gaussian(vec![j as f64, 0.0], 1.0).with_emult(EnergyMultiplier::default()))
            .collect();
        seq.push_term(ProductTerm { coeff: Complex64::new(1.0, 0.0), legs: legs.clone() }).unwrap();
        let adapter = ShellAdapter::new(seq, &[Plus, Minus, Plus, Minus], SignConvention::Reflected);
        let omegas = [1.0, 2.0, 3.0, 4.0];
        let momenta = [0.1, 0.0, 0.2, 0.0, 0.3, 0.0, 0.4, 0.0];
        // quadrature legs (0, 1, 2, 3) are sequence legs (1, 3, 0, 2)
        let expected = legs[1].eval(1.0, &[0.1, 0.0]).conj()
            * legs[3].eval(2.0, &[0.2, 0.0]).conj()
            * legs[0].eval(3.0, &[0.3, 0.0])
            * legs[2].eval(4.0, &[0.4, 0.0]);
        assert!((adapter.eval(&omegas, &momenta) - expected).norm() < 1e-14 * expected.norm());
    }

    #[test]
    fn literal_convention_is_annihilated_by_cutoff() {
        let seq = four_leg(4);
        let mut term = ConnectedTerm::new(vec![Minus, Minus, Plus, Plus], vec![0.0; 4]);
        term.convention = SignConvention::Literal;
        let est = tn_eval(&term, &seq, &CutoffProfile::default(), 4096, 0).unwrap();
        assert_eq!(est.value, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(12);
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((integral - 2.0 / 11.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn angular_rule_has_full_area() {
        for dim in 2..=5 {
            let total: f64 = angular_rule(dim, 16, 32).iter().map(|(_, w)| w).sum();
            let area = crate::quadrature::sphere_area(dim);
            assert!((total - area).abs() < 1e-12 * area, "dim {dim}: {total}");
        }
    }

    #[test]
    fn two_point_basics() {
        let f = TestFunctionSequence::one_leg(4, LegFunction::gaussian(vec![1.0, 0.5, 0.0], 0.4)).unwrap();
        let v = free_two_point(&f, &f, 0.0).unwrap();
        assert!(v.re > 0.0 && v.im.abs() < 1e-15 * v.re);
        let zero = TestFunctionSequence::zero(4);
        assert_eq!(free_two_point(&f, &zero, 0.0).unwrap(), Complex64::new(0.0, 0.0));
        // sesquilinearity in the first slot
        let i = Complex64::new(0.0, 1.0);
        let g = TestFunctionSequence::one_leg(4, LegFunction::gaussian(vec![0.8, 0.0, 0.2], 0.5)).unwrap();
        let lhs = free_two_point(&f.scaled(i), &g, 1.0).unwrap();
        let rhs = free_two_point(&f, &g, 1.0).unwrap() * (-i);
        assert!((lhs - rhs).norm() < 1e-12 * rhs.norm(), "{lhs} {rhs}");
    }

    #[test]
    fn amplitude_rejects_wrong_leg_count() {
        let spec = LszSpec { leg: LegFunction::gaussian(vec![1.0, 0.0, 0.0], 0.5), mass: 0.0, t: 0.0 };
        let req = AmplitudeRequest {
            d: 4,
            in_states: vec![spec.clone()],
            out_states: vec![spec.clone(), spec],
            upsilon: 1.0,
            c_n: 1.0,
            two_pi_factor: true,
            cutoff: CutoffProfile::default(),
            convention: SignConvention::Reflected,
            budget: 100,
            seed: 0,
        };
        assert!(scalar_4pt_lsz(&req).is_err());
    }
}
