//! The natural map `F(a, x) = bar((phi_x)_* nu_a)` of a cocycle with a
//! boundary map, its slice differentials and the quadratic forms `h'`, `h`, `k`.
//!
//! With `A_ik = d beta_{(a, xi_i)}(e_k)` and `B_il = d beta_{(F, eta_i)}(f_l)`,
//! `eta_i = phi_x(xi_i)`, differentiating `sum w_i(a) B_i = 0` in `a` gives
//! `K J = delta sum w B A^T` where `K = sum w (I - B B^T)`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::barycenter::{barycenter_view, BarycenterOptions, BarycenterResult};
use crate::cocycle::{BoundaryMapSpec, Cocycle};
use crate::error::{Error, Result};
use crate::hyperboloid::{frame_pairings, minkowski, HPoint};
use crate::lattice::{random_word, FundamentalDomain};
use crate::measure::{conformal_factor, critical_exponent, min_separation, pairwise_sum, MeasureView};
use crate::quadrature::SphereQuadrature;

/// Separation below which a slice counts as non-injective on the nodes.
pub const INJECTIVITY_TOL: f64 = 1e-10;

/// Singular values within this distance of 1 certify an isometric embedding.
pub const ISOMETRY_TOL: f64 = 1e-3;

pub struct NaturalMapEvaluator {
    sigma: Cocycle,
    phi: BoundaryMapSpec,
    quad: SphereQuadrature,
    opts: BarycenterOptions,
    delta: f64,
    /// Flat image coordinates `phi_c(xi_i)` for each stored chain `c`.
    images: Vec<Vec<f64>>,
    separation: f64,
}

#[derive(Clone, Debug)]
pub struct SliceDifferential {
    pub a: HPoint,
    pub x: usize,
    pub point: HPoint,
    /// `m x n`, in the frames of `T_a H^n` and `T_F H^m`.
    pub j: DMatrix<f64>,
    pub hp: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub k: DMatrix<f64>,
    /// Norm of the barycenter equation at `point`.
    pub residual: f64,
}

impl SliceDifferential {
    /// Singular values of `J`, largest first.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.j.clone().svd(false, false).singular_values.iter().cloned().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    /// Product of the `p` largest singular values.
    pub fn jacobian(&self, p: usize) -> Result<f64> {
        let s = self.singular_values();
        if p == 0 || p > s.len() {
            return Err(Error::Invalid(format!("jacobian order {p} outside 1..={}", s.len())));
        }
        Ok(s[..p].iter().product())
    }

    pub fn is_isometric_embedding(&self) -> bool {
        self.singular_values().iter().all(|s| (s - 1.0).abs() <= ISOMETRY_TOL)
    }
}

/// Per-cell output of a scan: the slice value and its Jacobian.
#[derive(Clone, Debug, Serialize)]
pub struct SliceSummary {
    pub point: HPoint,
    pub jacobian: f64,
    pub sv_min: f64,
    pub sv_max: f64,
    pub residual: f64,
}

impl NaturalMapEvaluator {
    pub fn new(sigma: Cocycle, phi: BoundaryMapSpec, quad: SphereQuadrature, opts: BarycenterOptions) -> Result<Self> {
        let n = sigma.n();
        if phi.n() != n || quad.n() != n {
            return Err(Error::Dimension(format!(
                "cocycle on H^{n}, boundary map from the boundary of H^{}, quadrature on the boundary of H^{}",
                phi.n(),
                quad.n()
            )));
        }
        if phi.m() != sigma.m() {
            return Err(Error::Dimension(format!("cocycle targets H^{} but slices land in H^{}", sigma.m(), phi.m())));
        }
        phi.check_space(sigma.space().len())?;
        let delta = critical_exponent(n, 1)?;
        let mut images = Vec::with_capacity(phi.chain_count());
        let mut separation = f64::INFINITY;
        for c in 0..phi.chain_count() {
            let pts = quad
                .nodes()
                .iter()
                .map(|xi| phi.apply(c, xi))
                .collect::<Result<Vec<_>>>()?;
            let sep = min_separation(&pts);
            if sep < INJECTIVITY_TOL {
                return Err(Error::Inadmissible(format!(
                    "slice {c} identifies quadrature nodes (separation {sep:e}); its push-forwards may not be admissible"
                )));
            }
            separation = separation.min(sep);
            images.push(pts.iter().flat_map(|p| p.coords().iter().cloned()).collect());
        }
        Ok(Self { sigma, phi, quad, opts, delta, images, separation })
    }

    pub fn cocycle(&self) -> &Cocycle {
        &self.sigma
    }

    pub fn boundary(&self) -> &BoundaryMapSpec {
        &self.phi
    }

    pub fn quadrature(&self) -> &SphereQuadrature {
        &self.quad
    }

    pub fn options(&self) -> &BarycenterOptions {
        &self.opts
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn n(&self) -> usize {
        self.sigma.n()
    }

    pub fn m(&self) -> usize {
        self.sigma.m()
    }

    /// Smallest separation of slice images over the nodes.
    pub fn separation(&self) -> f64 {
        self.separation
    }

    /// Index of the stored slice used at `x`.
    pub fn chain_of(&self, x: usize) -> usize {
        if self.phi.is_shared() {
            0
        } else {
            x
        }
    }

    pub fn chain_count(&self) -> usize {
        self.images.len()
    }

    fn check_point(&self, a: &HPoint, x: usize) -> Result<()> {
        if a.dim() != self.n() {
            return Err(Error::Dimension(format!("point of H^{} for a map on H^{}", a.dim(), self.n())));
        }
        if x >= self.sigma.space().len() {
            return Err(Error::Invalid(format!("point {x} is not in X")));
        }
        Ok(())
    }

    /// Normalized node weights of `nu_a`.
    pub fn node_weights(&self, a: &HPoint) -> Vec<f64> {
        let mut w: Vec<f64> = self
            .quad
            .nodes()
            .iter()
            .zip(self.quad.weights())
            .map(|(xi, q)| q * conformal_factor(-minkowski(a.coords(), xi.coords()), self.delta))
            .collect();
        let total = pairwise_sum(&w);
        w.iter_mut().for_each(|v| *v /= total);
        w
    }

    fn view<'a>(&'a self, chain: usize, weights: &'a [f64]) -> MeasureView<'a> {
        MeasureView { stride: self.m() + 1, points: &self.images[chain], weights }
    }

    fn solve(&self, chain: usize, weights: &[f64], init: Option<&HPoint>) -> Result<BarycenterResult> {
        let view = self.view(chain, weights);
        match barycenter_view(&view, init, &self.opts) {
            Err(e) if init.is_some() && e.is_numerical() => barycenter_view(&view, None, &self.opts),
            r => r,
        }
    }

    /// `F(a, x)`.
    pub fn eval(&self, a: &HPoint, x: usize) -> Result<BarycenterResult> {
        self.check_point(a, x)?;
        self.solve(self.chain_of(x), &self.node_weights(a), None)
    }

    /// `F(a, x)` warm-started at `init`.
    pub fn eval_from(&self, a: &HPoint, x: usize, init: &HPoint) -> Result<BarycenterResult> {
        self.check_point(a, x)?;
        self.solve(self.chain_of(x), &self.node_weights(a), Some(init))
    }

    fn differential_at(&self, a: &HPoint, x: usize, weights: &[f64], f: &HPoint, residual: f64) -> Result<SliceDifferential> {
        let (n, m) = (self.n(), self.m());
        let view = self.view(self.chain_of(x), weights);
        let mut hp = DMatrix::zeros(n, n);
        let mut h = DMatrix::zeros(m, m);
        let mut k = DMatrix::zeros(m, m);
        let mut rhs = DMatrix::zeros(m, n);
        let mut ai = vec![0.0; n];
        let mut bi = vec![0.0; m];
        for (i, xi) in self.quad.nodes().iter().enumerate() {
            let w = weights[i];
            let eta = view.point(i);
            let pa = minkowski(a.coords(), xi.coords());
            let pf = minkowski(f.coords(), eta);
            frame_pairings(a.coords(), xi.coords(), &mut ai);
            frame_pairings(f.coords(), eta, &mut bi);
            ai.iter_mut().for_each(|v| *v /= pa);
            bi.iter_mut().for_each(|v| *v /= pf);
            for r in 0..n {
                for c in 0..n {
                    hp[(r, c)] += w * ai[r] * ai[c];
                }
            }
            for r in 0..m {
                for c in 0..m {
                    let bb = w * bi[r] * bi[c];
                    h[(r, c)] += bb;
                    k[(r, c)] -= bb;
                }
                k[(r, r)] += w;
                for c in 0..n {
                    rhs[(r, c)] += w * bi[r] * ai[c];
                }
            }
        }
        rhs *= self.delta;
        let kmin = SymmetricEigen::new(k.clone()).eigenvalues.min();
        if !(kmin >= 1e-10) {
            return Err(Error::DegenerateSupport(format!("k form has smallest eigenvalue {kmin:e} at x = {x}")));
        }
        let j = k
            .clone()
            .cholesky()
            .ok_or_else(|| Error::DegenerateSupport("k form is not positive definite".into()))?
            .solve(&rhs);
        Ok(SliceDifferential { a: a.clone(), x, point: f.clone(), j, hp, h, k, residual })
    }

    /// `D_a F_x` from the differentiated barycenter equation.
    pub fn differential(&self, a: &HPoint, x: usize) -> Result<SliceDifferential> {
        self.check_point(a, x)?;
        let w = self.node_weights(a);
        let r = self.solve(self.chain_of(x), &w, None)?;
        self.differential_at(a, x, &w, &r.point, r.residual)
    }

    /// `jac^p_a F_x`; `p` defaults to `n` when `None`.
    pub fn jacobian(&self, a: &HPoint, x: usize, p: Option<usize>) -> Result<f64> {
        self.differential(a, x)?.jacobian(p.unwrap_or(self.n()))
    }

    /// Slices at every cell of `dom` for the stored chains `chains`, warm-started
    /// along each Gauss line. Entry `[cell][i]` belongs to `chains[i]`; failed
    /// cells are `None`.
    pub fn scan(&self, dom: &FundamentalDomain, chains: &[usize], p: usize) -> Vec<Vec<Option<SliceSummary>>> {
        let cells = dom.cells();
        let per_line: Vec<Vec<Vec<Option<SliceSummary>>>> = dom
            .lines()
            .par_iter()
            .map(|range| {
                let mut warm: Vec<Option<HPoint>> = vec![None; chains.len()];
                let mut out = Vec::with_capacity(range.len());
                for cell in range.clone() {
                    let a = &cells[cell].0;
                    let w = self.node_weights(a);
                    let row = chains
                        .iter()
                        .zip(warm.iter_mut())
                        .map(|(&c, warm)| {
                            let got = self.solve(c, &w, warm.as_ref()).and_then(|r| {
                                // Any x with this chain gives the same differential.
                                let x = if self.phi.is_shared() { 0 } else { c };
                                let d = self.differential_at(a, x, &w, &r.point, r.residual)?;
                                let s = d.singular_values();
                                let jac = d.jacobian(p)?;
                                Ok(SliceSummary {
                                    point: r.point,
                                    jacobian: jac,
                                    sv_min: *s.last().unwrap_or(&0.0),
                                    sv_max: s[0],
                                    residual: r.residual,
                                })
                            });
                            match got {
                                Ok(s) => {
                                    *warm = Some(s.point.clone());
                                    Some(s)
                                }
                                Err(_) => {
                                    *warm = None;
                                    None
                                }
                            }
                        })
                        .collect();
                    out.push(row);
                }
                out
            })
            .collect();
        per_line.into_iter().flatten().collect()
    }

    /// Largest distance `d(F(g a, g x), sigma(g, x) F(a, x))` over random
    /// words `g` of length 1 to 3 and points `a` within distance 1 of `o`.
    /// Pairs with `d(o, g a) > 3` are redrawn: the discrete visual measure
    /// at far points concentrates on a few nodes.
    pub fn equivariance_deviation<R: Rng + ?Sized>(&self, samples: usize, rng: &mut R) -> Result<f64> {
        let group = self.sigma.group();
        let space = self.sigma.space();
        let o = HPoint::origin(self.n());
        let mut worst: f64 = 0.0;
        let mut done = 0;
        while done < samples {
            let w = random_word(group.rank(), rng.gen_range(1..=3), rng);
            let x = rng.gen_range(0..space.len());
            let dir: Vec<f64> = (0..self.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let a = HPoint::from_polar(&dir, rng.gen_range(0.0..1.0))?;
            let ga = group.act_word(&w, &a);
            if ga.dist(&o) > 3.0 {
                continue;
            }
            let lhs = self.eval(&ga, space.act_word(&w, x))?.point;
            let rhs = self.sigma.eval(&w, x).act(&self.eval(&a, x)?.point);
            worst = worst.max(lhs.dist(&rhs));
            done += 1;
        }
        Ok(worst)
    }
}

/// Margins of each inequality used to bound the Jacobian by the forms.
#[derive(Clone, Debug, Serialize)]
pub struct BcgAudit {
    pub p: usize,
    pub delta: f64,
    pub jacobian: f64,
    /// `sup k(Ju, v) / (delta sqrt(h(v,v) h'(u,u)))` over `u in U`, `v in V`.
    pub cs_ratio: f64,
    /// Largest sampled value of the same ratio.
    pub cs_sampled: f64,
    pub cs_samples: usize,
    /// `det K^V jac` against `delta^p sqrt(det H^V det H'^U)`.
    pub det_lhs: f64,
    pub det_rhs: f64,
    /// `det H'^U` against `(tr H'^U / p)^p`.
    pub trace_lhs: f64,
    pub trace_rhs: f64,
    /// `delta^p p^{-p/2} sqrt(det H^V) / det K^V`.
    pub bound: f64,
    pub cs_margin: f64,
    pub det_margin: f64,
    pub trace_margin: f64,
    /// `bound - jacobian`.
    pub final_margin: f64,
    /// `1 - bound`; needs `p >= 3` in general.
    pub bound_margin: f64,
}

impl BcgAudit {
    /// Every step of the chain holds to within `tol`, excluding the last one.
    pub fn chain_holds(&self, tol: f64) -> bool {
        self.cs_margin >= -tol && self.det_margin >= -tol && self.trace_margin >= -tol && self.final_margin >= -tol
    }
}

fn inv_sqrt(s: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let e = SymmetricEigen::new(s.clone());
    if e.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return None;
    }
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(|l| 1.0 / l.sqrt()));
    Some(&e.eigenvectors * d * e.eigenvectors.transpose())
}

/// Audits the Jacobian bound on the `p`-dimensional subspace `U` spanned by the
/// top right singular vectors of `J`, with `V = J U`.
pub fn bcg_bound_audit<R: Rng + ?Sized>(
    d: &SliceDifferential,
    delta: f64,
    p: usize,
    samples: usize,
    rng: &mut R,
) -> Result<BcgAudit> {
    let (m, n) = (d.j.nrows(), d.j.ncols());
    if p == 0 || p > n {
        return Err(Error::Invalid(format!("audit order {p} outside 1..={n}")));
    }
    let svd = d.j.clone().svd(true, true);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let u_full = svd.u.as_ref().expect("requested");
    let vt_full = svd.v_t.as_ref().expect("requested");
    let qv = DMatrix::from_fn(m, p, |r, c| u_full[(r, order[c])]);
    let qu = DMatrix::from_fn(n, p, |r, c| vt_full[(order[c], r)]);
    let jacobian: f64 = order[..p].iter().map(|&i| svd.singular_values[i]).product();

    let hv = qv.transpose() * &d.h * &qv;
    let kv = qv.transpose() * &d.k * &qv;
    let hu = qu.transpose() * &d.hp * &qu;
    let kj = qv.transpose() * &d.k * &d.j * &qu;

    let cs_ratio = match (inv_sqrt(&hv), inv_sqrt(&hu)) {
        (Some(a), Some(b)) => (a * &kj * b).svd(false, false).singular_values.max() / delta,
        _ => f64::INFINITY,
    };
    let mut cs_sampled: f64 = 0.0;
    for _ in 0..samples {
        let u = DMatrix::from_fn(p, 1, |_, _| rng.gen_range(-1.0..1.0));
        let v = DMatrix::from_fn(p, 1, |_, _| rng.gen_range(-1.0..1.0));
        let num = (v.transpose() * &kj * &u)[(0, 0)].abs();
        let den = delta * ((v.transpose() * &hv * &v)[(0, 0)] * (u.transpose() * &hu * &u)[(0, 0)]).sqrt();
        if den > 0.0 {
            cs_sampled = cs_sampled.max(num / den);
        }
    }

    let det_kv = kv.determinant();
    let det_hv = hv.determinant();
    let det_hu = hu.determinant();
    let pf = p as f64;
    let det_lhs = det_kv * jacobian;
    let det_rhs = delta.powi(p as i32) * (det_hv * det_hu).max(0.0).sqrt();
    let trace_lhs = det_hu;
    let trace_rhs = (hu.trace() / pf).powi(p as i32);
    let bound = delta.powi(p as i32) * pf.powf(-pf / 2.0) * det_hv.max(0.0).sqrt() / det_kv;
    Ok(BcgAudit {
        p,
        delta,
        jacobian,
        cs_ratio,
        cs_sampled,
        cs_samples: samples,
        det_lhs,
        det_rhs,
        trace_lhs,
        trace_rhs,
        bound,
        cs_margin: 1.0 - cs_ratio,
        det_margin: det_rhs - det_lhs,
        trace_margin: trace_rhs - trace_lhs,
        final_margin: bound - jacobian,
        bound_margin: 1.0 - bound,
    })
}
