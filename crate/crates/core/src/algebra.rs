//! Terminating sequences of multi-leg test functions.
//!
//! Each leg factor is a polynomial times a Gaussian in the spatial momentum,
//! optionally multiplied by an energy multiplier that vanishes with all its
//! derivatives at `E = 0`, by an LSZ factor `(omega + E) e^{i omega t}`, and by
//! any number of positive-energy cutoffs `h(E / beta)`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::kinematics::norm2;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Smooth step vanishing with all derivatives at `E = 0`:
/// `exp(-1/E)` for `E > 0`, `0` otherwise.
pub fn h_eval(e: f64) -> f64 {
    if e > 0.0 {
        (-1.0 / e).exp()
    } else {
        0.0
    }
}

/// One monomial `coeff * prod_l p_l^{exponents[l]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial(pub Vec<u32>, pub f64);

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial {
    pub terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn one(dim: usize) -> Self {
        Polynomial { terms: vec![Monomial(vec![0; dim], 1.0)] }
    }

    pub fn eval(&self, p: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|Monomial(exps, c)| {
                exps.iter().zip(p).fold(*c, |acc, (&e, &x)| if e == 0 { acc } else { acc * x.powi(e as i32) })
            })
            .sum()
    }
}

/// `g(E) = h(|E| / beta_g)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyMultiplier {
    pub beta_g: f64,
}

impl Default for EnergyMultiplier {
    fn default() -> Self {
        EnergyMultiplier { beta_g: 1.0 }
    }
}

impl EnergyMultiplier {
    pub fn eval(&self, e: f64) -> f64 {
        h_eval(e.abs() / self.beta_g)
    }
}

/// LSZ factor `(omega(m, p) + E) e^{i omega t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LszFactor {
    pub mass: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegFunction {
    pub center: Vec<f64>,
    pub sigma: f64,
    pub poly: Polynomial,
    #[serde(default)]
    pub emult: Option<EnergyMultiplier>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lsz: Option<LszFactor>,
    /// Cutoff scales `beta` of the `h(E / beta)` factors applied so far.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cutoffs: Vec<f64>,
}

impl LegFunction {
    /// Unit-polynomial Gaussian without energy dependence.
    pub fn gaussian(center: Vec<f64>, sigma: f64) -> Self {
        let dim = center.len();
        LegFunction { center, sigma, poly: Polynomial::one(dim), emult: None, lsz: None, cutoffs: Vec::new() }
    }

    pub fn with_emult(mut self, emult: EnergyMultiplier) -> Self {
        self.emult = Some(emult);
        self
    }

    pub fn with_poly(mut self, poly: Polynomial) -> Self {
        self.poly = poly;
        self
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.center.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: self.center.len() });
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::Schema(format!("sigma must be positive, got {}", self.sigma)));
        }
        if let Some(m) = self.poly.terms.iter().find(|m| m.0.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: m.0.len() });
        }
        if self.emult.is_some_and(|g| !(g.beta_g > 0.0)) {
            return Err(Error::Schema("beta_g must be positive".into()));
        }
        if self.lsz.is_some_and(|l| !(l.mass >= 0.0) || !l.t.is_finite()) {
            return Err(Error::Schema("LSZ mass must be non-negative and t finite".into()));
        }
        if self.cutoffs.iter().any(|b| !(*b > 0.0)) {
            return Err(Error::Schema("cutoff scales must be positive".into()));
        }
        Ok(())
    }

    /// Momentum radius beyond which the Gaussian envelope is negligible.
    pub fn radial_extent(&self) -> f64 {
        norm2(&self.center).sqrt() + 6.0 * self.sigma
    }

    pub fn eval(&self, energy: f64, p: &[f64]) -> Complex64 {
        let mut real = 1.0;
        for &beta in &self.cutoffs {
            real *= h_eval(energy / beta);
            if real == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
        }
        if let Some(g) = self.emult {
            real *= g.eval(energy);
        }
        let dist2: f64 = p.iter().zip(&self.center).map(|(x, c)| (x - c) * (x - c)).sum();
        real *= (-0.5 * dist2 / (self.sigma * self.sigma)).exp() * self.poly.eval(p);
        match self.lsz {
            None => Complex64::new(real, 0.0),
            Some(LszFactor { mass, t }) => {
                let w = (mass * mass + norm2(p)).sqrt();
                Complex64::from_polar((w + energy) * real, w * t)
            }
        }
    }
}

/// `coeff * prod_k leg_k(E_k, p_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductTerm {
    pub coeff: Complex64,
    pub legs: Vec<LegFunction>,
}

impl ProductTerm {
    fn eval(&self, energies: &[f64], momenta: &[f64], dim: usize, conjugate: &[bool]) -> Complex64 {
        let mut value = self.coeff;
        for (k, leg) in self.legs.iter().enumerate() {
            let mut f = leg.eval(energies[k], &momenta[k * dim..(k + 1) * dim]);
            if conjugate.get(k).copied().unwrap_or(false) {
                f = f.conj();
            }
            value *= f;
            if value == Complex64::new(0.0, 0.0) {
                break;
            }
        }
        value
    }
}

/// Serialized form of a sequence.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SequenceDoc {
    schema_version: u32,
    d: usize,
    components: Vec<ComponentDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ComponentDoc {
    n: usize,
    terms: Vec<ProductTerm>,
}

/// Terminating sequence `(f_0, f_1, ...)`; entry `n` is a finite sum of
/// `n`-fold products, entry `0` a complex scalar (terms without legs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SequenceDoc", into = "SequenceDoc")]
pub struct TestFunctionSequence {
    d: usize,
    components: BTreeMap<usize, Vec<ProductTerm>>,
}

impl TryFrom<SequenceDoc> for TestFunctionSequence {
    type Error = Error;

    fn try_from(doc: SequenceDoc) -> Result<Self> {
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(format!("unsupported schema version {}", doc.schema_version)));
        }
        let mut seq = TestFunctionSequence::zero(doc.d);
        for c in doc.components {
            for term in c.terms {
                if term.legs.len() != c.n {
                    return Err(Error::Schema(format!(
                        "term with {} legs listed under component {}",
                        term.legs.len(),
                        c.n
                    )));
                }
                seq.push_term(term)?;
            }
        }
        Ok(seq)
    }
}

impl From<TestFunctionSequence> for SequenceDoc {
    fn from(seq: TestFunctionSequence) -> Self {
        SequenceDoc {
            schema_version: SCHEMA_VERSION,
            d: seq.d,
            components: seq.components.into_iter().map(|(n, terms)| ComponentDoc { n, terms }).collect(),
        }
    }
}

impl TestFunctionSequence {
    pub fn zero(d: usize) -> Self {
        TestFunctionSequence { d, components: BTreeMap::new() }
    }

    /// The identity `(1, 0, 0, ...)` of the product.
    pub fn unit(d: usize) -> Self {
        Self::scalar(d, Complex64::new(1.0, 0.0))
    }

    pub fn scalar(d: usize, value: Complex64) -> Self {
        let mut seq = Self::zero(d);
        seq.components.insert(0, vec![ProductTerm { coeff: value, legs: Vec::new() }]);
        seq
    }

    pub fn one_leg(d: usize, leg: LegFunction) -> Result<Self> {
        let mut seq = Self::zero(d);
        seq.push_term(ProductTerm { coeff: Complex64::new(1.0, 0.0), legs: vec![leg] })?;
        Ok(seq)
    }

    pub fn push_term(&mut self, term: ProductTerm) -> Result<()> {
        let dim = self
            .d
            .checked_sub(1)
            .filter(|&x| x > 0)
            .ok_or_else(|| Error::InvalidConfig(format!("spacetime dimension {} too small", self.d)))?;
        for leg in &term.legs {
            leg.validate(dim)?;
        }
        self.components.entry(term.legs.len()).or_default().push(term);
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn component(&self, n: usize) -> &[ProductTerm] {
        self.components.get(&n).map_or(&[], Vec::as_slice)
    }

    pub fn leg_counts(&self) -> impl Iterator<Item = usize> + '_ {
        self.components.iter().filter(|(_, t)| !t.is_empty()).map(|(n, _)| *n)
    }

    /// Highest leg count with a nonzero term.
    pub fn degree(&self) -> Option<usize> {
        self.components
            .iter()
            .rev()
            .find(|(_, terms)| terms.iter().any(|t| t.coeff != Complex64::new(0.0, 0.0)))
            .map(|(n, _)| *n)
    }

    /// Sum of the leg-free terms.
    pub fn scalar_part(&self) -> Complex64 {
        self.component(0).iter().map(|t| t.coeff).sum()
    }

    /// Largest Gaussian radial extent over all legs of component `n`.
    pub fn radial_extent(&self, n: usize) -> f64 {
        self.component(n).iter().flat_map(|t| &t.legs).map(LegFunction::radial_extent).fold(0.0, f64::max)
    }

    /// Multiplies every term by `factor`.
    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for terms in out.components.values_mut() {
            for t in terms {
                t.coeff *= factor;
            }
        }
        out
    }

    /// Term-wise sum.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: other.d });
        }
        let mut out = self.clone();
        for (n, terms) in &other.components {
            out.components.entry(*n).or_default().extend(terms.iter().cloned());
        }
        Ok(out)
    }

    /// Evaluates component `n` at flat momenta (`n * (d-1)` entries),
    /// conjugating the legs flagged in `conjugate`.
    pub fn eval_flat(&self, n: usize, energies: &[f64], momenta: &[f64], conjugate: &[bool]) -> Complex64 {
        let dim = self.d - 1;
        self.component(n).iter().map(|t| t.eval(energies, momenta, dim, conjugate)).sum()
    }
}

/// Component `n` of `seq` at the given energies and momenta; zero when the
/// sequence has no such component.
pub fn eval_component(
    seq: &TestFunctionSequence,
    n: usize,
    energies: &[f64],
    momenta: &[Vec<f64>],
) -> Result<Complex64> {
    let dim = seq.d - 1;
    if energies.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: energies.len() });
    }
    if momenta.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: momenta.len() });
    }
    if let Some(p) = momenta.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
    }
    let flat: Vec<f64> = momenta.concat();
    Ok(seq.eval_flat(n, energies, &flat, &[]))
}

/// Per-leg positive-energy cutoff scales `beta_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CutoffProfile {
    beta: Vec<f64>,
}

impl CutoffProfile {
    pub fn new(beta: Vec<f64>) -> Result<Self> {
        if beta.is_empty() || beta.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
            return Err(Error::InvalidConfig("cutoff scales must be positive and non-empty".into()));
        }
        Ok(CutoffProfile { beta })
    }

    pub fn uniform(beta: f64) -> Result<Self> {
        Self::new(vec![beta])
    }

    /// Scale for leg position `k`; positions past the end reuse the last entry.
    pub fn beta(&self, k: usize) -> f64 {
        self.beta[k.min(self.beta.len() - 1)]
    }
}

impl Default for CutoffProfile {
    fn default() -> Self {
        CutoffProfile { beta: vec![1.0] }
    }
}

/// Multiplies every leg at position `k` by `h(E_k / beta_k)`; leg-free terms
/// are unchanged.
pub fn phi_map(seq: &TestFunctionSequence, cutoff: &CutoffProfile) -> TestFunctionSequence {
    let mut out = seq.clone();
    for terms in out.components.values_mut() {
        for term in terms {
            for (k, leg) in term.legs.iter_mut().enumerate() {
                leg.cutoffs.push(cutoff.beta(k));
            }
        }
    }
    out
}

/// Tensor product: component `n` is `sum_{j+m=n} a_j (x) b_m`, with `b`'s legs
/// appended after `a`'s.
pub fn sequence_product(a: &TestFunctionSequence, b: &TestFunctionSequence) -> Result<TestFunctionSequence> {
    if a.d != b.d {
        return Err(Error::DimensionMismatch { expected: a.d, got: b.d });
    }
    let mut out = TestFunctionSequence::zero(a.d);
    for ta in a.components.values().flatten() {
        for tb in b.components.values().flatten() {
            let mut legs = ta.legs.clone();
            legs.extend(tb.legs.iter().cloned());
            out.components.entry(legs.len()).or_default().push(ProductTerm { coeff: ta.coeff * tb.coeff, legs });
        }
    }
    Ok(out)
}

/// One-leg LSZ state `(omega + E) e^{i omega t} f(p)`.
pub fn lsz_state(d: usize, f: LegFunction, mass: f64, t: f64) -> Result<TestFunctionSequence> {
    let mut leg = f;
    leg.lsz = Some(LszFactor { mass, t });
    TestFunctionSequence::one_leg(d, leg)
}
