#![allow(dead_code)]

use std::sync::Arc;

use num_complex::Complex64;
use shellquad::kinematics::ShellConfig;
use shellquad::quadrature::{DeltaFunctional, FnIntegrand, Integrand, LegProposal};

/// `prod_j exp(-|p_j - c_j|^2 / (2 sigma^2))` over all legs, including the
/// dependent one.
pub fn gaussian_product(centers: Vec<Vec<f64>>, sigma: f64) -> Arc<dyn Integrand> {
    let extent = centers.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0, f64::max) + 6.0 * sigma;
    let dim = centers[0].len();
    let proposals = centers.iter().map(|c| LegProposal::new(c.clone(), 1.25 * sigma)).collect();
    Arc::new(
        FnIntegrand::new(extent, move |_: &[f64], p: &[f64]| {
            let mut e = 0.0;
            for (j, c) in centers.iter().enumerate() {
                for l in 0..dim {
                    e += (p[j * dim + l] - c[l]).powi(2);
                }
            }
            Complex64::new((-0.5 * e / (sigma * sigma)).exp(), 0.0)
        })
        .with_proposals(proposals),
    )
}

/// Gaussian product times `(1 + omega_1 / 2)` and a complex phase in `omega_n`.
pub fn dressed_product(centers: Vec<Vec<f64>>, sigma: f64) -> Arc<dyn Integrand> {
    let base = gaussian_product(centers, sigma);
    let extent = base.radial_extent();
    let proposals = (0..3).filter_map(|j| base.proposal(j)).collect();
    Arc::new(
        FnIntegrand::new(extent, move |w: &[f64], p: &[f64]| {
            let phase = Complex64::from_polar(1.0, 0.7 * w[w.len() - 1]);
            base.eval(w, p) * (1.0 + 0.5 * w[0]) * phase
        })
        .with_proposals(proposals),
    )
}

pub struct OracleCase {
    pub name: &'static str,
    pub df: DeltaFunctional,
    pub sigma: f64,
}

fn axis(dim: usize, l: usize, x: f64) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[l] = x;
    v
}

/// Six smooth integrands covering massive, mixed and massless (away from the
/// collinear cone) configurations at four legs.
pub fn oracle_corpus() -> Vec<OracleCase> {
    let square = |dim: usize, r: f64| vec![axis(dim, 0, r), axis(dim, 1, r), axis(dim, 0, -r), axis(dim, 1, -r)];
    let case = |name, n, d, k, masses: Vec<f64>, f: Arc<dyn Integrand>, sigma| OracleCase {
        name,
        df: DeltaFunctional::new(ShellConfig::new(n, d, k, masses).unwrap(), f),
        sigma,
    };
    vec![
        case("d3-massive", 4, 3, 2, vec![1.0; 4], gaussian_product(square(2, 0.8), 0.5), 0.1),
        case("d3-massive-unequal", 4, 3, 2, vec![1.0, 0.5, 0.8, 0.7], dressed_product(square(2, 0.6), 0.5), 0.1),
        case("d4-massive", 4, 4, 2, vec![1.0; 4], gaussian_product(square(3, 0.8), 0.5), 0.1),
        case("d4-massive-dressed", 4, 4, 2, vec![0.5; 4], dressed_product(square(3, 0.7), 0.5), 0.1),
        case("d4-mixed", 4, 4, 2, vec![1.0, 0.0, 0.0, 1.0], gaussian_product(square(3, 0.8), 0.5), 0.1),
        case("d4-massless", 4, 4, 2, vec![0.0; 4], gaussian_product(square(3, 1.0), 0.3), 0.1),
    ]
}
