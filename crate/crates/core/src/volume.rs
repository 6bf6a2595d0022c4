//! Volumes of equivariant maps: `vol(Phi) = int_D sum_x mu(x) jac_a Phi_x dvol`,
//! the natural volume of a cocycle, and the rigidity audit of maximal cases.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cocycle::{twist, Cocycle};
use crate::error::{Error, Result};
use crate::hyperboloid::{corner_inject, frame_pairings, geodesic_embed, minkowski, HIsometry, HPoint};
use crate::lattice::{random_word, FundamentalDomain};
use crate::measure::pairwise_sum;
use crate::natural_map::{NaturalMapEvaluator, SliceSummary};
use crate::quadrature::SphereQuadrature;

/// Floor of the error estimate, relative to the domain volume.
pub const SOLVER_ERROR_FLOOR: f64 = 1e-8;

/// Fit residual above which a maximal verdict is flagged as inconsistent.
pub const RIGIDITY_FIT_TOL: f64 = 1e-4;

/// A `sigma`-equivariant map `Phi: H^n x X -> H^m` with differentiable slices.
pub enum EquivariantMapSpec {
    /// The natural map of a cocycle and boundary map.
    Natural(NaturalMapEvaluator),
    /// `Phi_x = post_x . j_{n,m} . pre`; `post` has one entry or one per point.
    Composition { sigma: Cocycle, pre: HIsometry, post: Vec<HIsometry> },
    /// `g . Phi` for an isometry `g` of `H^m`; equivariant for `g sigma g^-1`.
    PostComposed { inner: Box<EquivariantMapSpec>, g: HIsometry },
}

impl EquivariantMapSpec {
    pub fn composition(sigma: Cocycle, pre: HIsometry, post: Vec<HIsometry>) -> Result<Self> {
        if pre.dim() != sigma.n() || post.iter().any(|g| g.dim() != sigma.m()) {
            return Err(Error::Dimension("composition isometries do not match the cocycle".into()));
        }
        if post.len() != 1 && post.len() != sigma.space().len() {
            return Err(Error::Invalid(format!("{} post-isometries for {} points", post.len(), sigma.space().len())));
        }
        Ok(Self::Composition { sigma, pre, post })
    }

    pub fn post_composed(inner: Self, g: HIsometry) -> Result<Self> {
        if g.dim() != inner.m() {
            return Err(Error::Dimension("post-composed isometry acts on the wrong space".into()));
        }
        Ok(Self::PostComposed { inner: Box::new(inner), g })
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Natural(ev) => ev.n(),
            Self::Composition { sigma, .. } => sigma.n(),
            Self::PostComposed { inner, .. } => inner.n(),
        }
    }

    pub fn m(&self) -> usize {
        match self {
            Self::Natural(ev) => ev.m(),
            Self::Composition { sigma, .. } => sigma.m(),
            Self::PostComposed { inner, .. } => inner.m(),
        }
    }

    /// The cocycle `Phi` is equivariant for.
    pub fn cocycle(&self) -> Result<Cocycle> {
        match self {
            Self::Natural(ev) => Ok(ev.cocycle().clone()),
            Self::Composition { sigma, .. } => Ok(sigma.clone()),
            Self::PostComposed { inner, g } => {
                let sigma = inner.cocycle()?;
                twist(&sigma, &vec![g.inverse(); sigma.space().len()])
            }
        }
    }

    fn space_len(&self) -> usize {
        match self {
            Self::Natural(ev) => ev.cocycle().space().len(),
            Self::Composition { sigma, .. } => sigma.space().len(),
            Self::PostComposed { inner, .. } => inner.space_len(),
        }
    }

    fn composite(sigma: &Cocycle, pre: &HIsometry, post: &[HIsometry], x: usize) -> Result<DMatrix<f64>> {
        let p = if post.len() == 1 { &post[0] } else { &post[x] };
        let j = corner_inject(&HIsometry::identity(sigma.n()), sigma.m())?;
        let c = j.matrix().columns(0, sigma.n() + 1).into_owned();
        Ok(p.matrix() * c * pre.matrix())
    }

    /// `Phi(a, x)`.
    pub fn point(&self, a: &HPoint, x: usize) -> Result<HPoint> {
        match self {
            Self::Natural(ev) => Ok(ev.eval(a, x)?.point),
            Self::Composition { sigma, pre, post } => {
                let p = if post.len() == 1 { &post[0] } else { &post[x] };
                Ok(p.act(&geodesic_embed(&pre.act(a), sigma.m())?))
            }
            Self::PostComposed { inner, g } => Ok(g.act(&inner.point(a, x)?)),
        }
    }

    /// Slice summaries at every cell, indexed `[cell][x]`.
    pub fn scan(&self, dom: &FundamentalDomain, p: usize) -> Result<Vec<Vec<Option<SliceSummary>>>> {
        let size = self.space_len();
        match self {
            Self::Natural(ev) => {
                let chains: Vec<usize> = (0..ev.chain_count()).collect();
                let rows = ev.scan(dom, &chains, p);
                Ok(rows
                    .into_iter()
                    .map(|row| (0..size).map(|x| row[ev.chain_of(x)].clone()).collect())
                    .collect())
            }
            Self::Composition { sigma, pre, post } => {
                let mats = (0..post.len())
                    .map(|x| Self::composite(sigma, pre, post, x))
                    .collect::<Result<Vec<_>>>()?;
                let n = sigma.n();
                let m = sigma.m();
                let rows = dom
                    .cells()
                    .par_iter()
                    .map(|(a, _)| {
                        let frame = a.frame();
                        let per: Vec<SliceSummary> = mats.iter().map(|mat| composite_slice(mat, a, &frame, n, m, p)).collect();
                        (0..size).map(|x| Some(per[if per.len() == 1 { 0 } else { x }].clone())).collect()
                    })
                    .collect();
                Ok(rows)
            }
            Self::PostComposed { inner, g } => {
                // The pullback metric of g . Phi_x is that of Phi_x since g is an isometry.
                let rows = inner.scan(dom, p)?;
                Ok(rows
                    .into_iter()
                    .map(|row| {
                        row.into_iter()
                            .map(|s| s.map(|s| SliceSummary { point: g.act(&s.point), ..s }))
                            .collect()
                    })
                    .collect())
            }
        }
    }

    /// Jacobians `jac_a Phi_x` for every `x`.
    pub fn jacobians(&self, a: &HPoint, p: usize) -> Result<Vec<f64>> {
        let size = self.space_len();
        match self {
            Self::Natural(ev) => {
                let per = (0..ev.chain_count())
                    .map(|c| {
                        let x = if ev.boundary().is_shared() { 0 } else { c };
                        ev.differential(a, x)?.jacobian(p)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((0..size).map(|x| per[ev.chain_of(x)]).collect())
            }
            Self::Composition { sigma, pre, post } => (0..size)
                .map(|x| {
                    let mat = Self::composite(sigma, pre, post, x)?;
                    Ok(composite_slice(&mat, a, &a.frame(), sigma.n(), sigma.m(), p).jacobian)
                })
                .collect(),
            Self::PostComposed { inner, .. } => inner.jacobians(a, p),
        }
    }

    /// `sum_x mu(x) jac_a Phi_x`, the density of the volume form at `a`.
    pub fn integrand(&self, a: &HPoint, p: usize) -> Result<f64> {
        let sigma = self.cocycle()?;
        let jac = self.jacobians(a, p)?;
        Ok(sigma.space().weights().iter().zip(&jac).map(|(w, j)| w * j).sum())
    }

    /// Largest `d(Phi(g a, g x), sigma(g, x) Phi(a, x))` over sampled words of
    /// length 1 to 3 and points `a` within distance 1 of `o`; pairs with
    /// `d(o, g a) > 3` are redrawn.
    pub fn equivariance_deviation<R: Rng + ?Sized>(&self, samples: usize, rng: &mut R) -> Result<f64> {
        if let Self::Natural(ev) = self {
            return ev.equivariance_deviation(samples, rng);
        }
        let sigma = self.cocycle()?;
        let group = sigma.group();
        let o = HPoint::origin(self.n());
        let mut worst: f64 = 0.0;
        let mut done = 0;
        while done < samples {
            let w = random_word(group.rank(), rng.gen_range(1..=3), rng);
            let x = rng.gen_range(0..sigma.space().len());
            let dir: Vec<f64> = (0..self.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let a = HPoint::from_polar(&dir, rng.gen_range(0.0..1.0))?;
            let ga = group.act_word(&w, &a);
            if ga.dist(&o) > 3.0 {
                continue;
            }
            let lhs = self.point(&ga, sigma.space().act_word(&w, x))?;
            let rhs = sigma.eval(&w, x).act(&self.point(&a, x)?);
            worst = worst.max(lhs.dist(&rhs));
            done += 1;
        }
        Ok(worst)
    }
}

/// Differential of `a -> M a` read in the frames at `a` and `M a`.
fn composite_slice(mat: &DMatrix<f64>, a: &HPoint, frame: &DMatrix<f64>, n: usize, m: usize, p: usize) -> SliceSummary {
    let image = HPoint::normalized((mat * nalgebra::DVector::from_column_slice(a.coords())).as_slice().to_vec());
    let mut j = DMatrix::zeros(m, n);
    let mut c = vec![0.0; m];
    for k in 0..n {
        let v = mat * frame.column(k);
        frame_pairings(image.coords(), v.as_slice(), &mut c);
        for l in 0..m {
            j[(l, k)] = c[l];
        }
    }
    let mut s: Vec<f64> = j.svd(false, false).singular_values.iter().cloned().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    SliceSummary {
        point: image,
        jacobian: s[..p.min(s.len())].iter().product(),
        sv_min: *s.last().unwrap_or(&0.0),
        sv_max: s[0],
        residual: 0.0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Maximal,
    Strict,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorEstimate {
    /// Compare against a coarser domain and a coarser sphere rule.
    Full,
    /// Compare against a coarser domain only.
    DomainOnly,
    /// Use the solver floor alone.
    Floor,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VolumeOptions {
    /// Jacobian order; defaults to `n`.
    pub p: Option<usize>,
    pub error: ErrorEstimate,
    pub equivariance_samples: usize,
    pub seed: u64,
    /// Keep per-cell records for dumping.
    pub keep_cells: bool,
}

impl Default for VolumeOptions {
    fn default() -> Self {
        Self { p: None, error: ErrorEstimate::Full, equivariance_samples: 20, seed: 0, keep_cells: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellRecord {
    pub cell: usize,
    pub a: Vec<f64>,
    pub x: usize,
    pub jacobian: f64,
    pub sv_min: f64,
    pub sv_max: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VolumeReport {
    pub volume: f64,
    pub domain_volume: f64,
    /// `int_D jac Phi_x` for each `x`.
    pub per_x: Vec<f64>,
    pub jac_min: f64,
    pub jac_mean: f64,
    pub jac_max: f64,
    /// `vol(D) - volume`.
    pub milnor_wood_margin: f64,
    pub error_estimate: f64,
    pub error_method: ErrorEstimate,
    pub verdict: Verdict,
    /// Some cells failed and were left out of the sums.
    pub partial: bool,
    pub failed: usize,
    pub cells: usize,
    pub space_size: usize,
    pub equivariance_deviation: f64,
    #[serde(skip)]
    pub records: Vec<CellRecord>,
}

struct RawVolume {
    volume: f64,
    per_x: Vec<f64>,
    jac: (f64, f64, f64),
    failed: usize,
    records: Vec<CellRecord>,
}

fn integrate(map: &EquivariantMapSpec, dom: &FundamentalDomain, p: usize, keep: bool) -> Result<RawVolume> {
    if dom.dim() != map.n() {
        return Err(Error::Dimension(format!("domain in H^{} for a map on H^{}", dom.dim(), map.n())));
    }
    let mu = map.cocycle()?.space().weights().to_vec();
    let rows = map.scan(dom, p)?;
    let mut failed = 0;
    let mut terms = Vec::with_capacity(rows.len());
    let mut per_x_terms = vec![Vec::with_capacity(rows.len()); mu.len()];
    let (mut jmin, mut jmax, mut jsum, mut jcount) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
    let mut records = Vec::new();
    for (cell, ((a, w), row)) in dom.cells().iter().zip(&rows).enumerate() {
        let mut density = 0.0;
        for (x, s) in row.iter().enumerate() {
            match s {
                Some(s) => {
                    density += mu[x] * s.jacobian;
                    per_x_terms[x].push(w * s.jacobian);
                    jmin = jmin.min(s.jacobian);
                    jmax = jmax.max(s.jacobian);
                    jsum += s.jacobian;
                    jcount += 1;
                    if keep {
                        records.push(CellRecord {
                            cell,
                            a: a.coords().to_vec(),
                            x,
                            jacobian: s.jacobian,
                            sv_min: s.sv_min,
                            sv_max: s.sv_max,
                            residual: s.residual,
                        });
                    }
                }
                None => failed += 1,
            }
        }
        terms.push(w * density);
    }
    if jcount == 0 {
        return Err(Error::DegenerateSupport("no cell could be evaluated".into()));
    }
    Ok(RawVolume {
        volume: pairwise_sum(&terms),
        per_x: per_x_terms.iter().map(|t| pairwise_sum(t)).collect(),
        jac: (jmin, jsum / jcount as f64, jmax),
        failed,
        records,
    })
}

fn verdict(domain_volume: f64, volume: f64, err: f64, partial: bool) -> Verdict {
    let gap = domain_volume - volume;
    if partial || gap < -3.0 * err {
        Verdict::Inconclusive
    } else if gap < 3.0 * err {
        Verdict::Maximal
    } else {
        Verdict::Strict
    }
}

fn assemble(map: &EquivariantMapSpec, dom: &FundamentalDomain, fine: RawVolume, others: &[f64], opts: &VolumeOptions) -> Result<VolumeReport> {
    let domain_volume = dom.total_volume();
    let err = others.iter().map(|v| (v - fine.volume).abs()).sum::<f64>() + SOLVER_ERROR_FLOOR * domain_volume;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let equivariance_deviation = map.equivariance_deviation(opts.equivariance_samples, &mut rng)?;
    let partial = fine.failed > 0;
    Ok(VolumeReport {
        volume: fine.volume,
        domain_volume,
        per_x: fine.per_x,
        jac_min: fine.jac.0,
        jac_mean: fine.jac.1,
        jac_max: fine.jac.2,
        milnor_wood_margin: domain_volume - fine.volume,
        error_estimate: err,
        error_method: opts.error,
        verdict: verdict(domain_volume, fine.volume, err, partial),
        partial,
        failed: fine.failed,
        cells: dom.len(),
        space_size: map.space_len(),
        equivariance_deviation,
        records: fine.records,
    })
}

/// `vol(Phi)` over the fundamental domain `dom`.
pub fn volume(map: &EquivariantMapSpec, dom: &FundamentalDomain, opts: &VolumeOptions) -> Result<VolumeReport> {
    let p = opts.p.unwrap_or(map.n());
    let fine = integrate(map, dom, p, opts.keep_cells)?;
    let mut others = Vec::new();
    if opts.error != ErrorEstimate::Floor {
        others.push(integrate(map, &dom.coarsened()?, p, false)?.volume);
    }
    if opts.error == ErrorEstimate::Full {
        if let EquivariantMapSpec::Natural(ev) = map {
            let q = ev.quadrature();
            let coarse = SphereQuadrature::new(q.n(), q.len() / 2)?;
            let ev2 = NaturalMapEvaluator::new(ev.cocycle().clone(), ev.boundary().clone(), coarse, *ev.options())?;
            others.push(integrate(&EquivariantMapSpec::Natural(ev2), dom, p, false)?.volume);
        }
    }
    assemble(map, dom, fine, &others, opts)
}

/// `nv(sigma)`: the volume of the natural map.
pub fn natural_volume(ev: NaturalMapEvaluator, dom: &FundamentalDomain, opts: &VolumeOptions) -> Result<(VolumeReport, NaturalMapEvaluator)> {
    let map = EquivariantMapSpec::Natural(ev);
    let report = volume(&map, dom, opts)?;
    match map {
        EquivariantMapSpec::Natural(ev) => Ok((report, ev)),
        _ => unreachable!(),
    }
}

/// Recovered `f(x)` with `F_x = f(x)^-1 . j_{n,m}` on sampled cells.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IsometryFit {
    pub x: usize,
    pub f: HIsometry,
    /// Largest `d(f(x)^-1 j(a), F_x(a))` over the samples.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RigidityReport {
    pub verdict: Verdict,
    pub fits: Vec<IsometryFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_residual: Option<f64>,
    /// Maximal verdict but the slices are not totally geodesic.
    pub inconsistent: bool,
}

/// Minkowski Gram-Schmidt of `cols`, completed to a basis of `R^{m,1}`.
fn lorentz_completion(cols: &DMatrix<f64>) -> Result<HIsometry> {
    let dim = cols.nrows();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(dim);
    let sign = |k: usize| if k == 0 { -1.0 } else { 1.0 };
    let project = |v: &mut Vec<f64>, basis: &[Vec<f64>]| {
        for (k, b) in basis.iter().enumerate() {
            let c = sign(k) * minkowski(v, b);
            v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= c * bi);
        }
    };
    for k in 0..cols.ncols() {
        let mut v: Vec<f64> = cols.column(k).iter().cloned().collect();
        project(&mut v, &basis);
        let q = sign(k) * minkowski(&v, &v);
        if !(q > 1e-12) {
            return Err(Error::DegenerateSupport("fitted frame is degenerate".into()));
        }
        v.iter_mut().for_each(|c| *c /= q.sqrt());
        if k == 0 && v[0] < 0.0 {
            v.iter_mut().for_each(|c| *c = -*c);
        }
        basis.push(v);
    }
    let mut candidates: Vec<usize> = (cols.ncols()..dim).collect();
    candidates.extend(1..cols.ncols());
    for e in candidates {
        if basis.len() == dim {
            break;
        }
        let mut v = vec![0.0; dim];
        v[e] = 1.0;
        project(&mut v, &basis);
        let q = minkowski(&v, &v);
        if q > 0.1 {
            v.iter_mut().for_each(|c| *c /= q.sqrt());
            basis.push(v);
        }
    }
    let mat = DMatrix::from_fn(dim, dim, |r, c| basis[c][r]);
    HIsometry::new(mat)
}

/// Least-squares `g` with `g j(a_i) ~ b_i`, as an isometry of `H^m`.
pub fn fit_isometry(a: &[HPoint], b: &[HPoint]) -> Result<(HIsometry, f64)> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Invalid("fit needs matching nonempty samples".into()));
    }
    let (n, m) = (a[0].dim(), b[0].dim());
    let am = DMatrix::from_fn(n + 1, a.len(), |r, c| a[c].coords()[r]);
    let bm = DMatrix::from_fn(m + 1, b.len(), |r, c| b[c].coords()[r]);
    let gram = &am * am.transpose();
    let l = &bm * am.transpose() * gram.try_inverse().ok_or_else(|| Error::DegenerateSupport("fit samples lie in a hyperplane".into()))?;
    let g = lorentz_completion(&l)?;
    let mut residual: f64 = 0.0;
    for (p, q) in a.iter().zip(b) {
        residual = residual.max(g.act(&geodesic_embed(p, m)?).dist(q));
    }
    Ok((g, residual))
}

/// Distance of `f_rec f0^-1` from the pointwise stabilizer of `j_{n,m}(H^n)`.
pub fn stabilizer_defect(f_rec: &HIsometry, f0: &HIsometry, n: usize) -> f64 {
    let s = f_rec.compose(&f0.inverse());
    let mat = s.matrix();
    let mut worst: f64 = 0.0;
    for r in 0..mat.nrows() {
        for c in 0..mat.ncols() {
            let target = if r == c && r <= n { 1.0 } else { 0.0 };
            if r <= n || c <= n {
                worst = worst.max((mat[(r, c)] - target).abs());
            }
        }
    }
    worst
}

/// For a maximal report, recovers `f: X -> Isom(H^m)` with `F_x = f(x)^-1 j`
/// from `samples` cells of `dom`.
pub fn rigidity_audit(report: &VolumeReport, ev: &NaturalMapEvaluator, dom: &FundamentalDomain, samples: usize) -> Result<RigidityReport> {
    if report.verdict != Verdict::Maximal {
        return Ok(RigidityReport { verdict: report.verdict, fits: Vec::new(), max_residual: None, inconsistent: false });
    }
    let stride = (dom.len() / samples.max(1)).max(1);
    let pts: Vec<HPoint> = dom.cells().iter().step_by(stride).map(|c| c.0.clone()).collect();
    let per_chain = (0..ev.chain_count())
        .map(|c| {
            let x = if ev.boundary().is_shared() { 0 } else { c };
            let f = pts.iter().map(|a| Ok(ev.eval(a, x)?.point)).collect::<Result<Vec<_>>>()?;
            let (g, res) = fit_isometry(&pts, &f)?;
            Ok((g.inverse(), res))
        })
        .collect::<Result<Vec<_>>>()?;
    let fits: Vec<IsometryFit> = (0..ev.cocycle().space().len())
        .map(|x| {
            let (f, residual) = per_chain[ev.chain_of(x)].clone();
            IsometryFit { x, f, residual }
        })
        .collect();
    let max_residual = fits.iter().map(|f| f.residual).fold(0.0, f64::max);
    Ok(RigidityReport {
        verdict: report.verdict,
        fits,
        max_residual: Some(max_residual),
        inconsistent: max_residual > RIGIDITY_FIT_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barycenter::BarycenterOptions;
    use crate::cocycle::{random_twist, standard_cocycle, twist_boundary, BoundaryMapSpec, FiniteProbSpace};
    use crate::lattice::genus2_octagon;

    fn setup(size: usize) -> (Cocycle, FundamentalDomain) {
        let (g, _) = genus2_octagon().unwrap();
        let x = FiniteProbSpace::uniform(size, g.rank()).unwrap();
        (standard_cocycle(&g, 3, &x).unwrap(), FundamentalDomain::octagon(6, 6).unwrap())
    }

    fn natural(sigma: Cocycle, phi: BoundaryMapSpec, nodes: usize) -> NaturalMapEvaluator {
        NaturalMapEvaluator::new(sigma, phi, SphereQuadrature::new(2, nodes).unwrap(), BarycenterOptions::default()).unwrap()
    }

    #[test]
    fn embedding_volume_is_the_area() {
        let (sigma, dom) = setup(2);
        let map = EquivariantMapSpec::composition(sigma, HIsometry::identity(2), vec![HIsometry::identity(3)]).unwrap();
        let r = volume(&map, &dom, &VolumeOptions::default()).unwrap();
        assert!((r.volume - 4.0 * std::f64::consts::PI).abs() < 2e-3);
        assert!((r.jac_max - 1.0).abs() < 1e-12 && (r.jac_min - 1.0).abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::Maximal);
        assert!(r.equivariance_deviation < 1e-9);
        let g = HIsometry::random(3, 1.5, &mut ChaCha8Rng::seed_from_u64(1));
        let moved = EquivariantMapSpec::post_composed(map, g).unwrap();
        let r2 = volume(&moved, &dom, &VolumeOptions::default()).unwrap();
        assert_eq!(r2.volume.to_bits(), r.volume.to_bits());
        assert!(r2.equivariance_deviation < 1e-8);
    }

    #[test]
    fn natural_volume_of_the_standard_cocycle() {
        let (sigma, dom) = setup(2);
        let ev = natural(sigma, BoundaryMapSpec::standard(2, 3).unwrap(), 512);
        let (r, ev) = natural_volume(ev, &dom, &VolumeOptions::default()).unwrap();
        assert!((r.volume - r.domain_volume).abs() < 1e-8);
        assert_eq!(r.verdict, Verdict::Maximal);
        let audit = rigidity_audit(&r, &ev, &dom, 32).unwrap();
        assert!(audit.max_residual.unwrap() < 1e-6);
        for fit in &audit.fits {
            assert!(fit.f.max_abs_diff(&HIsometry::identity(3)) < 1e-6);
        }
    }

    #[test]
    fn twisted_natural_volume_and_recovery() {
        let (sigma, dom) = setup(3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_twist(3, 3, 1.0, &mut rng);
        let sf = twist(&sigma, &f).unwrap();
        let pf = twist_boundary(&BoundaryMapSpec::standard(2, 3).unwrap(), &f).unwrap();
        let opts = VolumeOptions { error: ErrorEstimate::DomainOnly, ..Default::default() };
        let (r, ev) = natural_volume(natural(sf, pf, 512), &dom, &opts).unwrap();
        assert!((r.volume - r.domain_volume).abs() < 1e-8);
        assert_eq!(r.verdict, Verdict::Maximal);
        let audit = rigidity_audit(&r, &ev, &dom, 32).unwrap();
        assert!(audit.max_residual.unwrap() < 1e-6);
        for fit in &audit.fits {
            assert!(stabilizer_defect(&fit.f, &f[fit.x], 2) < 1e-5);
        }
    }

    #[test]
    fn squash_volume_is_strict() {
        let (sigma, dom) = setup(1);
        let phi = BoundaryMapSpec::squashed(2, 3, 2.0, BoundaryMapSpec::default_pole(3)).unwrap();
        let (r, ev) = natural_volume(natural(sigma, phi, 1024), &dom, &VolumeOptions::default()).unwrap();
        assert!(r.milnor_wood_margin > 10.0 * r.error_estimate, "{r:?}");
        assert_eq!(r.verdict, Verdict::Strict);
        let audit = rigidity_audit(&r, &ev, &dom, 32).unwrap();
        assert!(audit.fits.is_empty() && audit.max_residual.is_none());
    }

    #[test]
    fn density_is_invariant_under_the_lattice() {
        let (sigma, _) = setup(2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_twist(3, 2, 1.0, &mut rng);
        let sf = twist(&sigma, &f).unwrap();
        let pf = twist_boundary(&BoundaryMapSpec::standard(2, 3).unwrap(), &f).unwrap();
        let map = EquivariantMapSpec::Natural(natural(sf, pf, 2048));
        let group = sigma.group();
        for _ in 0..5 {
            let a = HPoint::from_polar(&[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)], rng.gen_range(0.0..0.8)).unwrap();
            let l = rng.gen_range(1..=4i32);
            let ga = group.act_word(&[l], &a);
            let d0 = map.integrand(&a, 2).unwrap();
            let d1 = map.integrand(&ga, 2).unwrap();
            assert!((d0 - d1).abs() < 1e-7);
        }
    }

    #[test]
    fn lorentz_completion_of_a_boost() {
        let g = HIsometry::random(3, 1.0, &mut ChaCha8Rng::seed_from_u64(5));
        let cols = g.matrix().columns(0, 3).into_owned();
        let h = lorentz_completion(&cols).unwrap();
        assert!(stabilizer_defect(&h, &g, 2) < 1e-12);
    }
}
