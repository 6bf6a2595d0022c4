//! Product quadrature rules on the spheres `S^{n-1} = boundary of H^n`, `n <= 4`.
//!
//! `S^1` uses the equispaced trapezoid rule. Higher spheres are built by
//! slicing along the first coordinate `t`: `S^k` carries the measure
//! `(1 - t^2)^{(k-2)/2} dt dsigma_{k-1}`, integrated with Gauss-Legendre
//! (`k = 2`) or Gauss-Jacobi with `alpha = beta = 1/2` (`k = 3`).

use std::num::NonZeroUsize;

use gauss_quad::jacobi::GaussJacobi;
use gauss_quad::legendre::GaussLegendre;
use gauss_quad::FiniteAboveNegOneF64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hyperboloid::HBoundaryPoint;

/// Monomials up to this degree are checked against exact sphere moments
/// when a rule is constructed.
const VALIDATION_DEGREE: usize = 8;

/// Default node counts on `S^1`, `S^2`, `S^3`.
pub fn default_nodes(n: usize) -> usize {
    match n {
        2 => 2048,
        _ => 4096,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SphereQuadrature {
    n: usize,
    nodes: Vec<HBoundaryPoint>,
    weights: Vec<f64>,
    /// Polynomial degree integrated exactly.
    order: usize,
}

impl SphereQuadrature {
    /// Builds a rule on `S^{n-1}` with roughly `target_nodes` nodes and
    /// validates it on all monomials up to degree `min(order, 8)`.
    pub fn new(n: usize, target_nodes: usize) -> Result<Self> {
        if target_nodes < 4 {
            return Err(Error::Invalid(format!("quadrature needs at least 4 nodes, got {target_nodes}")));
        }
        let (dirs, weights, order) = match n {
            2 => circle(target_nodes),
            3 => {
                let l = ((target_nodes as f64 / 2.0).sqrt().round() as usize).max(2);
                let (d, w) = sphere2(l);
                (d, w, 2 * l - 1)
            }
            4 => {
                let l = ((target_nodes as f64 / 2.0).cbrt().round() as usize).max(2);
                let (d, w) = sphere3(l);
                (d, w, 2 * l - 1)
            }
            _ => {
                return Err(Error::Dimension(format!(
                    "sphere quadrature is implemented for H^2..H^4, got H^{n}"
                )))
            }
        };
        let nodes = dirs
            .iter()
            .map(|d| HBoundaryPoint::from_direction(d))
            .collect::<Result<Vec<_>>>()?;
        let q = Self { n, nodes, weights, order };
        q.validate()?;
        Ok(q)
    }

    pub fn with_default_order(n: usize) -> Result<Self> {
        Self::new(n, default_nodes(n))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[HBoundaryPoint] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integral of `f` against the normalized round measure.
    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(xi, w)| w * f(xi.direction()))
            .sum()
    }

    /// Largest moment error over monomials of degree `<= min(order, 8)`.
    pub fn moment_error(&self) -> f64 {
        let deg = self.order.min(VALIDATION_DEGREE);
        let mut worst: f64 = 0.0;
        for alpha in monomials(self.n, deg) {
            let approx = self.integrate(|s| {
                alpha.iter().zip(s).map(|(&k, x)| x.powi(k as i32)).product()
            });
            worst = worst.max((approx - sphere_moment(&alpha)).abs());
        }
        worst
    }

    fn validate(&self) -> Result<()> {
        let err = self.moment_error();
        if err > 1e-10 {
            return Err(Error::Invalid(format!("quadrature failed moment validation (error {err:e})")));
        }
        Ok(())
    }
}

fn circle(count: usize) -> (Vec<Vec<f64>>, Vec<f64>, usize) {
    let dirs = (0..count)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / count as f64;
            vec![t.cos(), t.sin()]
        })
        .collect();
    (dirs, vec![1.0 / count as f64; count], count - 1)
}

fn legendre(l: usize) -> Vec<(f64, f64)> {
    GaussLegendre::new(NonZeroUsize::new(l).expect("l > 0"))
        .as_node_weight_pairs()
        .to_vec()
}

fn sphere2(l: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let (circ, cw, _) = circle(2 * l);
    let mut dirs = Vec::with_capacity(2 * l * l);
    let mut weights = Vec::with_capacity(2 * l * l);
    for (t, wt) in legendre(l) {
        let rho = (1.0 - t * t).sqrt();
        for (c, w) in circ.iter().zip(&cw) {
            dirs.push(vec![t, rho * c[0], rho * c[1]]);
            // Legendre weights sum to 2.
            weights.push(wt / 2.0 * w);
        }
    }
    (dirs, weights)
}

fn sphere3(l: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let half = FiniteAboveNegOneF64::new(0.5).expect("0.5 > -1");
    let jac = GaussJacobi::new(NonZeroUsize::new(l).expect("l > 0"), half, half);
    let pairs = jac.as_node_weight_pairs();
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let (inner, iw) = sphere2(l);
    let mut dirs = Vec::new();
    let mut weights = Vec::new();
    for &(t, wt) in pairs {
        let rho = (1.0 - t * t).sqrt();
        for (s, w) in inner.iter().zip(&iw) {
            let mut d = vec![t];
            d.extend(s.iter().map(|v| rho * v));
            dirs.push(d);
            weights.push(wt / total * w);
        }
    }
    (dirs, weights)
}

/// Exponent vectors of all monomials in `n` variables of degree `<= deg`.
fn monomials(n: usize, deg: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0; n];
    fn rec(i: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for k in 0..=left {
            cur[i] = k;
            rec(i + 1, left - k, cur, out);
        }
        cur[i] = 0;
    }
    rec(0, deg, &mut cur, &mut out);
    out
}

/// `Gamma(k/2)` for a positive integer `k`.
fn gamma_half(k: usize) -> f64 {
    debug_assert!(k > 0);
    let (mut g, mut x) = if k.is_multiple_of(2) { (1.0, 1.0) } else { (std::f64::consts::PI.sqrt(), 0.5) };
    let target = k as f64 / 2.0;
    while x < target - 0.25 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Mean of `prod s_i^{alpha_i}` over the uniform measure on `S^{n-1}`:
/// `Gamma(n/2) prod Gamma((a_i+1)/2) / (pi^{n/2} Gamma(n/2 + |a|/2))`.
pub(crate) fn sphere_moment(alpha: &[usize]) -> f64 {
    if alpha.iter().any(|a| a % 2 == 1) {
        return 0.0;
    }
    let n = alpha.len();
    let total: usize = alpha.iter().sum();
    let mut num = gamma_half(n);
    for &a in alpha {
        num *= gamma_half(a + 1);
    }
    num / (std::f64::consts::PI.powf(n as f64 / 2.0) * gamma_half(n + total))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_of_known_values() {
        // E[x^2] = 1/n, E[x^4] = 3/(n(n+2)).
        assert!((sphere_moment(&[2, 0, 0]) - 1.0 / 3.0).abs() < 1e-15);
        assert!((sphere_moment(&[4, 0]) - 3.0 / 8.0).abs() < 1e-15);
        assert!((sphere_moment(&[2, 2, 0, 0]) - 1.0 / 24.0).abs() < 1e-15);
        assert_eq!(sphere_moment(&[1, 0]), 0.0);
    }

    #[test]
    fn rules_integrate_harmonics() {
        for (n, nodes) in [(2, 64), (3, 200), (4, 500)] {
            let q = SphereQuadrature::new(n, nodes).unwrap();
            let wsum: f64 = q.weights().iter().sum();
            assert!((wsum - 1.0).abs() < 1e-13);
            assert!(q.moment_error() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn default_sizes() {
        assert_eq!(SphereQuadrature::with_default_order(2).unwrap().len(), 2048);
        let s2 = SphereQuadrature::with_default_order(3).unwrap();
        assert!((4000..=4200).contains(&s2.len()));
    }

    #[test]
    fn unsupported_dimensions() {
        assert!(SphereQuadrature::new(5, 100).is_err());
        assert!(SphereQuadrature::new(1, 100).is_err());
        assert!(SphereQuadrature::new(2, 2).is_err());
    }
}
