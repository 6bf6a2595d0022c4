//! Barycenters of boundary measures: the minimizer of
//! `Lambda(x) = sum_i w_i beta_o(x, xi_i)` over `H^m`.
//!
//! Newton's method in the orthonormal frame of [`HPoint::frame`] with Armijo
//! backtracking and exponential-map steps. Frame coordinates of the Busemann
//! gradient of an atom are `c_k = <f_k, xi> / <x, xi>`, which gives
//! `grad = sum w c` and `Hess = sum w (I - c c^T)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hyperboloid::{minkowski, HPoint, HTangent};
use crate::measure::{BoundaryMeasure, MeasureView};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BarycenterOptions {
    /// Stop when the gradient norm drops below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for BarycenterOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BarycenterResult {
    pub point: HPoint,
    /// Norm of the gradient of `Lambda` at `point`.
    pub residual: f64,
    pub iterations: usize,
    pub hessian_min_eig: f64,
}

const MAX_STEP: f64 = 8.0;

/// Below this gradient norm a Newton step is taken without a line search.
const NEWTON_ZONE: f64 = 1e-3;

/// Frame gradient and frame Hessian of `Lambda`, normalized by the total mass.
struct Local {
    grad: DVector<f64>,
    hess: DMatrix<f64>,
}

fn local_model(view: &MeasureView<'_>, x: &[f64], with_hess: bool) -> Local {
    let m = x.len() - 1;
    let xs = &x[1..];
    let inv = 1.0 / (1.0 + x[0]);
    let mut grad = vec![0.0; m];
    // Lower triangle, row by row.
    let mut tri = vec![0.0; m * (m + 1) / 2];
    let mut c = vec![0.0; m];
    let mut wsum = 0.0;
    for (xi, &w) in view.points.chunks_exact(view.stride).zip(view.weights) {
        let ss: f64 = xs.iter().zip(&xi[1..]).map(|(a, b)| a * b).sum();
        let p = ss - x[0] * xi[0];
        let t = ss * inv - xi[0];
        let ip = 1.0 / p;
        for k in 0..m {
            c[k] = (xi[k + 1] + xs[k] * t) * ip;
            grad[k] += w * c[k];
        }
        if with_hess {
            let mut idx = 0;
            for k in 0..m {
                let wk = w * c[k];
                for l in 0..=k {
                    tri[idx] -= wk * c[l];
                    idx += 1;
                }
            }
        }
        wsum += w;
    }
    let mut hess = DMatrix::zeros(m, m);
    if with_hess {
        let mut idx = 0;
        for k in 0..m {
            for l in 0..=k {
                hess[(k, l)] = tri[idx] / wsum;
                hess[(l, k)] = hess[(k, l)];
                idx += 1;
            }
            hess[(k, k)] += 1.0;
        }
    }
    Local { grad: DVector::from_vec(grad) / wsum, hess }
}

fn lambda_only(view: &MeasureView<'_>, x: &[f64]) -> f64 {
    let mut value = 0.0;
    let mut wsum = 0.0;
    for i in 0..view.len() {
        let w = view.weights[i];
        value += w * (-minkowski(x, view.point(i))).ln();
        wsum += w;
    }
    value / wsum
}

/// The exponential map at `x` applied to frame coordinates `d`.
fn step(x: &[f64], d: &[f64]) -> Vec<f64> {
    let len = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    if len == 0.0 {
        return x.to_vec();
    }
    // Ambient tangent vector v = sum d_k f_k.
    let mut dot = 0.0;
    for k in 0..d.len() {
        dot += x[k + 1] * d[k];
    }
    let mut v = vec![0.0; x.len()];
    v[0] = dot;
    let r = dot / (1.0 + x[0]);
    for k in 0..d.len() {
        v[k + 1] = d[k] + x[k + 1] * r;
    }
    let (ch, sh) = (len.cosh(), len.sinh() / len);
    let y: Vec<f64> = x.iter().zip(&v).map(|(a, b)| ch * a + sh * b).collect();
    HPoint::normalized(y).into_coords()
}

/// Lift of the weighted mean direction through the Klein model.
fn initial_guess(view: &MeasureView<'_>) -> Vec<f64> {
    let m = view.stride - 1;
    let mut s = vec![0.0; m];
    let total = view.total();
    for i in 0..view.len() {
        let xi = view.point(i);
        for k in 0..m {
            s[k] += view.weights[i] * xi[k + 1] / total;
        }
    }
    let mut r2: f64 = s.iter().map(|v| v * v).sum();
    if r2 >= 1.0 - 1e-12 {
        let shrink = (1.0 - 1e-12) / r2.sqrt();
        s.iter_mut().for_each(|v| *v *= shrink);
        r2 = s.iter().map(|v| v * v).sum();
    }
    let g = 1.0 / (1.0 - r2).sqrt();
    let mut x = Vec::with_capacity(m + 1);
    x.push(g);
    x.extend(s.iter().map(|v| g * v));
    x
}

fn min_eig(h: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(h.clone()).eigenvalues.min()
}

/// Barycenter of the atoms in `view`, optionally warm-started at `init`.
pub fn barycenter_view(view: &MeasureView<'_>, init: Option<&HPoint>, opts: &BarycenterOptions) -> Result<BarycenterResult> {
    view.check_admissible()?;
    if !(opts.tol > 0.0) {
        return Err(Error::Invalid("barycenter tolerance must be positive".into()));
    }
    let mut x = match init {
        Some(p) if p.coords().len() == view.stride => p.coords().to_vec(),
        Some(_) => return Err(Error::Dimension("initial guess has the wrong dimension".into())),
        None => initial_guess(view),
    };
    let mut last_residual = f64::INFINITY;
    for iter in 0..=opts.max_iter {
        let model = local_model(view, &x, true);
        let residual = model.grad.norm();
        let lam_min = min_eig(&model.hess);
        if !residual.is_finite() {
            return Err(Error::NoConvergence { iterations: iter, residual });
        }
        if residual < opts.tol {
            return Ok(BarycenterResult {
                point: HPoint::normalized(x),
                residual,
                iterations: iter,
                hessian_min_eig: lam_min,
            });
        }
        last_residual = residual;
        if iter == opts.max_iter {
            break;
        }
        let dir: DVector<f64> = if lam_min < 1e-10 {
            -model.grad.clone() * 0.5
        } else {
            match model.hess.clone().cholesky() {
                Some(ch) => -ch.solve(&model.grad),
                None => -model.grad.clone() * 0.5,
            }
        };
        // Trust radius: keeps trial points representable far from the minimum.
        let len = dir.norm();
        let dir = if len > MAX_STEP { dir * (MAX_STEP / len) } else { dir };
        let slope = model.grad.dot(&dir);
        let mut t = 1.0;
        let mut next = step(&x, (dir.clone() * t).as_slice());
        let newton = lam_min >= 1e-10 && residual < NEWTON_ZONE;
        let value = if newton { 0.0 } else { lambda_only(view, &x) };
        if !newton && slope.abs() >= 1e-12 * (1.0 + value.abs()) {
            // Armijo backtracking; below the threshold the test cannot be
            // resolved in floating point and the full step is taken.
            let mut accepted = false;
            for _ in 0..60 {
                let v = lambda_only(view, &next);
                if v.is_finite() && v <= value + 1e-4 * t * slope {
                    accepted = true;
                    break;
                }
                t *= 0.5;
                next = step(&x, (dir.clone() * t).as_slice());
            }
            if !accepted {
                return Err(Error::NoConvergence { iterations: iter, residual });
            }
        }
        x = next;
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, residual: last_residual })
}

pub fn barycenter(nu: &BoundaryMeasure, opts: &BarycenterOptions) -> Result<BarycenterResult> {
    barycenter_view(&nu.view(), None, opts)
}

/// Warm-started [`barycenter`]; the result does not depend on `init` beyond
/// the solver tolerance.
pub fn barycenter_from(nu: &BoundaryMeasure, init: &HPoint, opts: &BarycenterOptions) -> Result<BarycenterResult> {
    barycenter_view(&nu.view(), Some(init), opts)
}

fn check_dims(nu: &BoundaryMeasure, x: &HPoint) -> Result<()> {
    if nu.n() != x.dim() {
        return Err(Error::Dimension(format!("measure on the boundary of H^{} evaluated at a point of H^{}", nu.n(), x.dim())));
    }
    nu.view().check_admissible()
}

/// `Lambda_nu(x)`, normalized by the total mass.
pub fn lambda_value(nu: &BoundaryMeasure, x: &HPoint) -> Result<f64> {
    check_dims(nu, x)?;
    Ok(lambda_only(&nu.view(), x.coords()))
}

pub fn lambda_grad(nu: &BoundaryMeasure, x: &HPoint) -> Result<HTangent> {
    check_dims(nu, x)?;
    let g = local_model(&nu.view(), x.coords(), false).grad;
    Ok(HTangent { base: x.clone(), vec: x.tangent_from_frame(g.as_slice()) })
}

/// Hessian of `Lambda_nu` at `x` in the orthonormal frame [`HPoint::frame`].
pub fn lambda_hess(nu: &BoundaryMeasure, x: &HPoint) -> Result<DMatrix<f64>> {
    check_dims(nu, x)?;
    Ok(local_model(&nu.view(), x.coords(), true).hess)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperboloid::{busemann, busemann_hess, HBoundaryPoint, HIsometry};
    use crate::measure::{pushforward, visual_measure};
    use crate::quadrature::SphereQuadrature;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn angles(deg: &[f64], w: &[f64]) -> BoundaryMeasure {
        let atoms = deg
            .iter()
            .zip(w)
            .map(|(d, &w)| {
                let t = d.to_radians();
                (HBoundaryPoint::from_direction(&[t.cos(), t.sin()]).unwrap(), w)
            })
            .collect();
        BoundaryMeasure::new(atoms).unwrap()
    }

    #[test]
    fn symmetric_measures_have_barycenter_o() {
        let q = SphereQuadrature::new(3, 300).unwrap();
        let mu = visual_measure(&HPoint::origin(3), &q).unwrap();
        let b = barycenter(&mu, &BarycenterOptions::default()).unwrap();
        assert!(b.point.dist(&HPoint::origin(3)) < 1e-12);
        assert!(lambda_value(&mu, &HPoint::origin(3)).unwrap().abs() < 1e-15);
        let tri = angles(&[0.0, 120.0, 240.0], &[1.0, 1.0, 1.0]);
        let b = barycenter(&tri, &BarycenterOptions::default()).unwrap();
        assert!(b.point.dist(&HPoint::origin(2)) < 1e-12);
    }

    #[test]
    fn frame_hessian_matches_busemann_hessians() {
        let nu = angles(&[10.0, 100.0, 200.0, 300.0], &[0.3, 0.2, 0.25, 0.25]);
        let x = HPoint::from_polar(&[0.3, -0.8], 0.7).unwrap();
        let h = lambda_hess(&nu, &x).unwrap();
        let f = x.frame();
        let col = |k: usize| HTangent::new(x.clone(), f.column(k).iter().copied().collect()).unwrap();
        for k in 0..2 {
            for l in 0..2 {
                let expect: f64 = (0..nu.len())
                    .map(|i| nu.weights()[i] * busemann_hess(&x, &nu.atom(i).0, &col(k), &col(l)))
                    .sum();
                assert!((h[(k, l)] - expect).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in 2..=4 {
            let q = SphereQuadrature::new(n, 100).unwrap();
            let nu = visual_measure(&HIsometry::random(n, 1.0, &mut rng).act(&HPoint::origin(n)), &q).unwrap();
            let x = HIsometry::random(n, 1.5, &mut rng).act(&HPoint::origin(n));
            let g = lambda_grad(&nu, &x).unwrap().frame_coords();
            let h = 1e-4;
            for k in 0..n {
                let mut e = vec![0.0; n];
                e[k] = h;
                let xp = x.exp(&x.tangent_from_frame(&e));
                e[k] = -h;
                let xm = x.exp(&x.tangent_from_frame(&e));
                let fd = (lambda_value(&nu, &xp).unwrap() - lambda_value(&nu, &xm).unwrap()) / (2.0 * h);
                assert!((fd - g[k]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn residual_and_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..30 {
            let n = rng.gen_range(2..=4);
            let k = rng.gen_range(3..12);
            let atoms: Vec<_> = (0..k)
                .map(|_| {
                    let s: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    (HBoundaryPoint::from_direction(&s).unwrap(), rng.gen_range(0.2..1.0))
                })
                .collect();
            let nu = BoundaryMeasure::new(atoms).unwrap().normalize();
            if !nu.is_admissible() {
                continue;
            }
            let b = barycenter(&nu, &BarycenterOptions::default()).unwrap();
            assert!(b.residual < 1e-10 && b.hessian_min_eig > 0.0);
            let g = HIsometry::random(n, 2.0, &mut rng);
            let moved = pushforward(&nu, |xi| Ok(g.act_boundary(xi))).unwrap();
            let bg = barycenter(&moved, &BarycenterOptions::default()).unwrap();
            assert!(bg.point.dist(&g.act(&b.point)) < 1e-7);
        }
    }

    #[test]
    fn rejects_inadmissible_and_reports_failure() {
        let two = angles(&[0.0, 180.0], &[1.0, 1.0]);
        assert!(matches!(barycenter(&two, &BarycenterOptions::default()), Err(Error::Inadmissible(_))));
        let heavy = angles(&[0.0, 90.0, 180.0], &[0.6, 0.2, 0.2]);
        assert!(barycenter(&heavy, &BarycenterOptions::default()).is_err());
        let nu = angles(&[0.0, 90.0, 180.0], &[0.4, 0.3, 0.3]);
        let tight = BarycenterOptions { tol: 1e-300, max_iter: 3 };
        assert!(matches!(barycenter(&nu, &tight), Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn warm_start_agrees() {
        let nu = angles(&[0.0, 90.0, 180.0], &[0.4, 0.3, 0.3]);
        let cold = barycenter(&nu, &BarycenterOptions::default()).unwrap();
        let far = HPoint::from_polar(&[-1.0, -1.0], 4.0).unwrap();
        let warm = barycenter_from(&nu, &far, &BarycenterOptions::default()).unwrap();
        assert!(cold.point.dist(&warm.point) < 1e-10);
    }

    #[test]
    fn busemann_sum_is_lambda() {
        let nu = angles(&[0.0, 90.0, 180.0], &[0.4, 0.3, 0.3]);
        let x = HPoint::from_polar(&[1.0, 2.0], 0.4).unwrap();
        let o = HPoint::origin(2);
        let direct: f64 = (0..3).map(|i| nu.weights()[i] * busemann(&o, &x, &nu.atom(i).0)).sum();
        assert!((lambda_value(&nu, &x).unwrap() - direct).abs() < 1e-14);
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use crate::HBoundaryPoint;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn admissible_measures_converge(
            t in prop::collection::vec(0.0..std::f64::consts::TAU, 4..8),
            w in prop::collection::vec(0.5..1.0f64, 8),
        ) {
            let atoms = t.iter().zip(&w).map(|(t, w)| (HBoundaryPoint::from_direction(&[t.cos(), t.sin()]).unwrap(), *w)).collect();
            let nu = BoundaryMeasure::new(atoms).unwrap().normalize();
            prop_assume!(nu.is_admissible());
            let b = barycenter(&nu, &BarycenterOptions::default()).unwrap();
            prop_assert!(b.residual < 1e-10);
        }
    }
}
