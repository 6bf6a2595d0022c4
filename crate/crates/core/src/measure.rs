//! Finite atomic measures on the boundary sphere, the visual (Patterson-Sullivan)
//! density of a lattice, orbit-sum Poincare approximations, and push-forwards.
//!
//! Atoms are stored flat (`stride = n + 1` reals per atom) because the barycenter
//! and natural-map kernels sweep them many thousands of times.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperboloid::{minkowski, HBoundaryPoint, HPoint};
use crate::lattice::{orbit_ball, orbit_growth_slope, GroupPresentation, OrbitOptions, OrbitPoint};
use crate::quadrature::SphereQuadrature;

/// Atoms closer than this (chordally) are merged by [`pushforward`].
pub const MERGE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryMeasure {
    n: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
    normalized: bool,
}

/// Borrowed view on atoms, shared by the barycenter kernel.
#[derive(Clone, Copy, Debug)]
pub struct MeasureView<'a> {
    pub stride: usize,
    pub points: &'a [f64],
    pub weights: &'a [f64],
}

impl MeasureView<'_> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.stride..(i + 1) * self.stride]
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Barycenter admissibility: no atom carries half of the mass or more.
    /// Also rejects the degenerate sum of two equal Dirac masses.
    pub fn check_admissible(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::DegenerateMeasure("measure has no atoms".into()));
        }
        let total = self.total();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::DegenerateMeasure(format!("total mass {total}")));
        }
        let max = self.weights.iter().cloned().fold(0.0, f64::max);
        if max / total >= 0.5 {
            return Err(Error::Inadmissible(format!(
                "atom of relative weight {} >= 1/2",
                max / total
            )));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct MeasureJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    v: Option<String>,
    atoms: Vec<Vec<f64>>,
}

impl Serialize for BoundaryMeasure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let atoms = (0..self.len())
            .map(|i| {
                let mut row = self.point(i).to_vec();
                row.push(self.weights[i]);
                row
            })
            .collect();
        MeasureJson { v: Some("v1".into()), atoms }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for BoundaryMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = MeasureJson::deserialize(d)?;
        let atoms = raw
            .atoms
            .into_iter()
            .map(|mut row| {
                let w = row.pop().ok_or_else(|| Error::Invalid("empty atom row".into()))?;
                Ok((HBoundaryPoint::new(row)?, w))
            })
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        BoundaryMeasure::new(atoms).map_err(serde::de::Error::custom)
    }
}

impl BoundaryMeasure {
    /// Builds a measure from `(ideal point, positive weight)` pairs.
    pub fn new(atoms: Vec<(HBoundaryPoint, f64)>) -> Result<Self> {
        let n = atoms
            .first()
            .map(|(xi, _)| xi.dim())
            .ok_or_else(|| Error::DegenerateMeasure("measure has no atoms".into()))?;
        let mut points = Vec::with_capacity(atoms.len() * (n + 1));
        let mut weights = Vec::with_capacity(atoms.len());
        for (xi, w) in atoms {
            if xi.dim() != n {
                return Err(Error::Dimension("atoms of mixed dimension".into()));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::Invalid(format!("atom weight {w} is not positive")));
            }
            points.extend_from_slice(xi.coords());
            weights.push(w);
        }
        let total: f64 = weights.iter().sum();
        Ok(Self { n, points, weights, normalized: (total - 1.0).abs() <= 1e-12 })
    }

    pub(crate) fn from_raw(n: usize, points: Vec<f64>, weights: Vec<f64>) -> Self {
        let total: f64 = weights.iter().sum();
        Self { n, points, weights, normalized: (total - 1.0).abs() <= 1e-12 }
    }

    /// Dimension `n` of the hyperbolic space whose boundary carries the atoms.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * (self.n + 1)..(i + 1) * (self.n + 1)]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atom(&self, i: usize) -> (HBoundaryPoint, f64) {
        (HBoundaryPoint::from_null(self.point(i)), self.weights[i])
    }

    pub fn view(&self) -> MeasureView<'_> {
        MeasureView { stride: self.n + 1, points: &self.points, weights: &self.weights }
    }

    pub fn total_mass(&self) -> f64 {
        pairwise_sum(&self.weights)
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().cloned().fold(0.0, f64::max)
    }

    pub fn is_admissible(&self) -> bool {
        self.view().check_admissible().is_ok()
    }

    pub fn normalize(mut self) -> Self {
        let total = self.total_mass();
        self.weights.iter_mut().for_each(|w| *w /= total);
        self.normalized = true;
        self
    }

    /// Mass of the open hemisphere `{ xi : <dir(xi), u> > 0 }`.
    pub fn hemisphere_mass(&self, u: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.len() {
            let p = self.point(i);
            let dot: f64 = p[1..].iter().zip(u).map(|(a, b)| a * b).sum();
            if dot > 0.0 {
                s += self.weights[i];
            }
        }
        s / self.total_mass()
    }
}

/// Deterministic pairwise summation.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Critical exponent `d(n+1) - 2` of a lattice in the isometry group of
/// `H^n_K`, `d = dim_R K`.
pub fn critical_exponent(n: usize, d: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("critical exponent needs n >= 2, got {n}")));
    }
    if d == 0 {
        return Err(Error::Domain("division algebra dimension must be positive".into()));
    }
    Ok((d * (n + 1)) as f64 - 2.0)
}

/// The `alpha`-conformal density at `a` discretized on `quad`: weights
/// `q_i exp(-alpha beta_o(a, xi_i)) = q_i (-<a, xi_i>)^{-alpha}`.
/// Returns the normalized measure and the mass before normalization.
pub fn conformal_density(a: &HPoint, quad: &SphereQuadrature, alpha: f64) -> Result<(BoundaryMeasure, f64)> {
    let n = quad.n();
    if a.dim() != n {
        return Err(Error::Dimension(format!("point in H^{} but quadrature on the boundary of H^{n}", a.dim())));
    }
    let mut points = Vec::with_capacity(quad.len() * (n + 1));
    let mut weights = Vec::with_capacity(quad.len());
    for (xi, q) in quad.nodes().iter().zip(quad.weights()) {
        let p = -minkowski(a.coords(), xi.coords());
        weights.push(q * conformal_factor(p, alpha));
        points.extend_from_slice(xi.coords());
    }
    let mass = pairwise_sum(&weights);
    weights.iter_mut().for_each(|w| *w /= mass);
    Ok((BoundaryMeasure::from_raw(n, points, weights), mass))
}

/// `p^{-alpha}`, with an integer fast path.
#[inline]
pub(crate) fn conformal_factor(p: f64, alpha: f64) -> f64 {
    if alpha.fract() == 0.0 && alpha.abs() < 64.0 {
        p.powi(-(alpha as i32))
    } else {
        p.powf(-alpha)
    }
}

/// Visual measure at `a`: the Patterson-Sullivan density of any uniform
/// lattice of `H^n`, with exponent `n - 1`.
pub fn visual_measure(a: &HPoint, quad: &SphereQuadrature) -> Result<BoundaryMeasure> {
    let delta = critical_exponent(a.dim(), 1)?;
    Ok(conformal_density(a, quad, delta)?.0)
}

/// Truncated Poincare series `sum exp(-s d(gamma x, x))` over orbit points
/// within distance `radius` of `x`.
pub fn poincare_series(group: &GroupPresentation, s: f64, x: &HPoint, radius: f64) -> Result<f64> {
    if !(s > 0.0) || !(radius >= 0.0) {
        return Err(Error::Invalid("Poincare series needs s > 0 and R >= 0".into()));
    }
    let orbit = orbit_ball(group, x, radius, &OrbitOptions::default())?;
    let terms: Vec<f64> = orbit.iter().map(|o| (-s * x.dist(&o.point)).exp()).collect();
    Ok(pairwise_sum(&terms))
}

/// Patterson's construction: atoms at the radial projections (from `o`) of the
/// orbit points `gamma o` within distance `radius` of `o`, weighted by
/// `exp(-s d(a, gamma o))`, normalized. The identity term has no direction and
/// is dropped.
pub fn ps_orbit_measure(group: &GroupPresentation, s: f64, a: &HPoint, radius: f64) -> Result<BoundaryMeasure> {
    if !(s > 0.0) || !(radius > 0.0) {
        return Err(Error::Invalid("orbit measure needs s > 0 and R > 0".into()));
    }
    let o = HPoint::origin(group.dim());
    let orbit = orbit_ball(group, &o, radius, &OrbitOptions::default())?;
    orbit_measure(&orbit, s, a, radius)
}

/// [`ps_orbit_measure`] over an already enumerated orbit of `o`.
pub fn orbit_measure(orbit: &[OrbitPoint], s: f64, a: &HPoint, radius: f64) -> Result<BoundaryMeasure> {
    let o = HPoint::origin(a.dim());
    let mut atoms = Vec::with_capacity(orbit.len());
    for op in orbit {
        let dir = &op.point.coords()[1..];
        if dir.iter().all(|v| v.abs() < 1e-300) || op.point.dist(&o) < 1e-9 {
            continue;
        }
        let w = (-s * a.dist(&op.point)).exp();
        atoms.push((HBoundaryPoint::from_direction(dir)?, w));
    }
    if atoms.is_empty() {
        return Err(Error::DegenerateMeasure(format!("no orbit points within radius {radius}")));
    }
    Ok(BoundaryMeasure::new(atoms)?.normalize())
}

/// Push-forward of `mu` under a boundary map. Atoms whose images coincide
/// (chordal distance `< 1e-12`) are merged; the result must stay
/// barycenter-admissible.
pub fn pushforward<F>(mu: &BoundaryMeasure, phi: F) -> Result<BoundaryMeasure>
where
    F: Fn(&HBoundaryPoint) -> Result<HBoundaryPoint>,
{
    let images = (0..mu.len())
        .map(|i| phi(&mu.atom(i).0))
        .collect::<Result<Vec<_>>>()?;
    let m = images[0].dim();
    if images.iter().any(|p| p.dim() != m) {
        return Err(Error::Dimension("boundary map produced mixed dimensions".into()));
    }
    let groups = coincidence_groups(&images, MERGE_TOL);
    let mut points = Vec::with_capacity(groups.len() * (m + 1));
    let mut weights = Vec::with_capacity(groups.len());
    for g in &groups {
        points.extend_from_slice(images[g[0]].coords());
        weights.push(g.iter().map(|&i| mu.weights()[i]).sum());
    }
    let out = BoundaryMeasure::from_raw(m, points, weights);
    if groups.len() < images.len() {
        let total = out.total_mass();
        if out.max_weight() / total >= 0.5 {
            return Err(Error::Inadmissible(format!(
                "merged atom carries relative weight {} >= 1/2 (boundary map is not injective)",
                out.max_weight() / total
            )));
        }
    }
    Ok(out)
}

/// Groups indices of points within chordal distance `tol`, in order of first
/// appearance. Sweeps along the first direction coordinate.
pub(crate) fn coincidence_groups(points: &[HBoundaryPoint], tol: f64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].direction()[0].total_cmp(&points[b].direction()[0]));
    let mut parent: Vec<usize> = (0..points.len()).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            if points[j].direction()[0] - points[i].direction()[0] > tol {
                break;
            }
            if points[i].chordal(&points[j]) < tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; points.len()];
    for i in 0..points.len() {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

/// Smallest chordal separation between distinct points, or infinity for fewer
/// than two points.
pub fn min_separation(points: &[HBoundaryPoint]) -> f64 {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].direction()[0].total_cmp(&points[b].direction()[0]));
    let mut best = f64::INFINITY;
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            if points[j].direction()[0] - points[i].direction()[0] >= best {
                break;
            }
            best = best.min(points[i].chordal(&points[j]));
        }
    }
    best
}

/// Equally spread unit directions in `R^n`: the circle for `n = 2`, a
/// Fibonacci lattice otherwise (projected from the last coordinate pair).
pub fn spread_directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        2 => (0..count)
            .map(|k| {
                let t = std::f64::consts::TAU * (k as f64 + 0.5) / count as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let t = golden * k as f64;
                    let mut v = vec![0.0; n];
                    v[0] = z;
                    v[1] = r * t.cos();
                    v[2] = r * t.sin();
                    v
                })
                .collect()
        }
    }
}

/// Largest hemisphere-mass discrepancy `max_u |mu(H_u) - nu(H_u)|` over the
/// hemispheres centred at `directions`: a smoothed total-variation distance.
pub fn hemisphere_discrepancy(mu: &BoundaryMeasure, nu: &BoundaryMeasure, directions: &[Vec<f64>]) -> f64 {
    directions
        .iter()
        .map(|u| (mu.hemisphere_mass(u) - nu.hemisphere_mass(u)).abs())
        .fold(0.0, f64::max)
}

/// Total variation `1/2 sum |mu(B) - nu(B)|` over the Voronoi cells `B` of `centers`.
pub fn binned_total_variation(mu: &BoundaryMeasure, nu: &BoundaryMeasure, centers: &[Vec<f64>]) -> f64 {
    let bins = |m: &BoundaryMeasure| {
        let mut out = vec![0.0; centers.len()];
        let total = m.total_mass();
        for i in 0..m.len() {
            let s = &m.point(i)[1..];
            let best = centers
                .iter()
                .map(|c| c.iter().zip(s).map(|(a, b)| a * b).sum::<f64>())
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
            out[best.0] += m.weights()[i] / total;
        }
        out
    };
    let (a, b) = (bins(mu), bins(nu));
    0.5 * a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Largest relative defect of `mu_a / mu_b = exp(-delta beta_b(a, .))` over the
/// nodes of `quad`, using the unnormalized densities.
pub fn density_ratio_defect(a: &HPoint, b: &HPoint, quad: &SphereQuadrature) -> Result<f64> {
    let delta = critical_exponent(quad.n(), 1)?;
    let (mu_a, ma) = conformal_density(a, quad, delta)?;
    let (mu_b, mb) = conformal_density(b, quad, delta)?;
    let mut worst = 0.0f64;
    for (i, xi) in quad.nodes().iter().enumerate() {
        let ratio = (mu_a.weights()[i] * ma) / (mu_b.weights()[i] * mb);
        let expect = (-delta * crate::hyperboloid::busemann(b, a, xi)).exp();
        worst = worst.max((ratio / expect - 1.0).abs());
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitComparison {
    pub s: f64,
    pub radius: f64,
    pub orbit_points: usize,
    /// Least-squares slope of `log N(r)`.
    pub growth_slope: f64,
    /// Binned total variation between orbit-sum and visual measures at each basepoint.
    pub total_variation: Vec<f64>,
    pub bins: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PsCheck {
    pub n: usize,
    pub delta: f64,
    pub pairs: usize,
    /// Worst relative density-ratio defect over sampled pairs and all nodes.
    pub ratio_defect: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orbit: Option<OrbitComparison>,
}

/// Density-ratio identity on `pairs` random basepoint pairs within distance
/// `spread` of `o`, plus, when a group is given, comparison of the orbit-sum
/// measure at exponent `s` and radius `radius` against the visual measure at
/// `basepoints`, with `bins` Voronoi bins.
#[allow(clippy::too_many_arguments)]
pub fn ps_check<R: rand::Rng + ?Sized>(
    quad: &SphereQuadrature,
    pairs: usize,
    spread: f64,
    group: Option<&GroupPresentation>,
    s: f64,
    radius: f64,
    basepoints: &[HPoint],
    bins: usize,
    rng: &mut R,
) -> Result<PsCheck> {
    let n = quad.n();
    let delta = critical_exponent(n, 1)?;
    let o = HPoint::origin(n);
    let mut ratio_defect = 0.0f64;
    for _ in 0..pairs {
        let a = crate::hyperboloid::HIsometry::random(n, spread, rng).act(&o);
        let b = crate::hyperboloid::HIsometry::random(n, spread, rng).act(&o);
        ratio_defect = ratio_defect.max(density_ratio_defect(&a, &b, quad)?);
    }
    let orbit = match group {
        None => None,
        Some(g) => {
            if g.dim() != n {
                return Err(Error::Dimension("group and quadrature dimensions differ".into()));
            }
            let orbit = orbit_ball(g, &o, radius, &OrbitOptions::default())?;
            let dists: Vec<f64> = orbit.iter().map(|p| o.dist(&p.point)).collect();
            let growth_slope = orbit_growth_slope(&dists, radius)?;
            let centers = spread_directions(n, bins);
            let total_variation = basepoints
                .iter()
                .map(|a| {
                    let ps = orbit_measure(&orbit, s, a, radius)?;
                    Ok(binned_total_variation(&ps, &visual_measure(a, quad)?, &centers))
                })
                .collect::<Result<Vec<_>>>()?;
            Some(OrbitComparison { s, radius, orbit_points: orbit.len(), growth_slope, total_variation, bins })
        }
    };
    Ok(PsCheck { n, delta, pairs, ratio_defect, orbit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperboloid::{busemann, HIsometry};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn critical_exponents() {
        assert_eq!(critical_exponent(2, 1).unwrap(), 1.0);
        assert_eq!(critical_exponent(3, 1).unwrap(), 2.0);
        assert_eq!(critical_exponent(2, 2).unwrap(), 4.0);
        assert!(critical_exponent(1, 1).is_err());
    }

    #[test]
    fn visual_measure_at_origin_is_the_quadrature() {
        let q = SphereQuadrature::new(3, 200).unwrap();
        let mu = visual_measure(&HPoint::origin(3), &q).unwrap();
        for (w, qw) in mu.weights().iter().zip(q.weights()) {
            assert!((w - qw).abs() < 1e-15);
        }
    }

    #[test]
    fn poisson_kernel_has_unit_mass() {
        // Dense-quadrature oracle: the exponent n-1 density of the round
        // measure has total mass 1 at every point.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in [2, 3] {
            let q = SphereQuadrature::new(n, if n == 2 { 4096 } else { 8192 }).unwrap();
            for _ in 0..5 {
                let a = HIsometry::random(n, 1.5, &mut rng).act(&HPoint::origin(n));
                let (_, mass) = conformal_density(&a, &q, (n - 1) as f64).unwrap();
                assert!((mass - 1.0).abs() < 1e-9, "n = {n}: mass {mass}");
            }
        }
    }

    #[test]
    fn density_ratio_is_the_busemann_cocycle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let q = SphereQuadrature::new(2, 512).unwrap();
        let a = HIsometry::random(2, 2.0, &mut rng).act(&HPoint::origin(2));
        let b = HIsometry::random(2, 2.0, &mut rng).act(&HPoint::origin(2));
        let (mu_a, ma) = conformal_density(&a, &q, 1.0).unwrap();
        let (mu_b, mb) = conformal_density(&b, &q, 1.0).unwrap();
        for (i, xi) in q.nodes().iter().enumerate() {
            let ratio = (mu_a.weights()[i] * ma) / (mu_b.weights()[i] * mb);
            let expect = (-busemann(&b, &a, xi)).exp();
            assert!((ratio / expect - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn binned_tv_oracle() {
        let c = vec![vec![1.0, 0.0], vec![-1.0, 0.0]];
        let e = HBoundaryPoint::from_direction(&[1.0, 0.1]).unwrap();
        let w = HBoundaryPoint::from_direction(&[-1.0, 0.1]).unwrap();
        let mu = BoundaryMeasure::new(vec![(e.clone(), 0.7), (w.clone(), 0.3)]).unwrap();
        let nu = BoundaryMeasure::new(vec![(e, 0.4), (w, 0.6)]).unwrap();
        assert!((binned_total_variation(&mu, &nu, &c) - 0.3).abs() < 1e-15);
        assert_eq!(binned_total_variation(&mu, &mu, &c), 0.0);
    }

    #[test]
    fn ps_check_small_radius() {
        let (g, _) = crate::lattice::genus2_octagon().unwrap();
        let q = SphereQuadrature::new(2, 512).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = ps_check(&q, 5, 2.0, Some(&g), 1.05, 8.0, &[HPoint::origin(2)], 32, &mut rng).unwrap();
        assert!(r.ratio_defect < 1e-9);
        let orbit = r.orbit.unwrap();
        assert!(orbit.orbit_points > 300);
        assert!(orbit.total_variation[0] < 0.2);
    }

    #[test]
    fn pushforward_identity_and_isometry() {
        let q = SphereQuadrature::new(2, 64).unwrap();
        let mu = visual_measure(&HPoint::origin(2), &q).unwrap();
        let same = pushforward(&mu, |xi| Ok(xi.clone())).unwrap();
        assert_eq!(same, mu);
        let g = HIsometry::rotation(2, 0, 1, 0.3).compose(&HIsometry::boost(2, 0, 0.7));
        let moved = pushforward(&mu, |xi| Ok(g.act_boundary(xi))).unwrap();
        assert_eq!(moved.len(), mu.len());
        for i in 0..mu.len() {
            assert_eq!(moved.weights()[i], mu.weights()[i]);
            let expect = g.act_boundary(&mu.atom(i).0);
            assert!(moved.atom(i).0.chordal(&expect) < 1e-15);
        }
        assert_eq!(moved.total_mass(), mu.total_mass());
    }

    #[test]
    fn pushforward_merges_and_rejects_collapse() {
        let q = SphereQuadrature::new(2, 8).unwrap();
        let mu = visual_measure(&HPoint::origin(2), &q).unwrap();
        let north = HBoundaryPoint::from_direction(&[0.0, 1.0]).unwrap();
        // Half the atoms collapse onto one point: weight exactly 1/2.
        let res = pushforward(&mu, |xi| {
            if xi.direction()[1] > 1e-9 || (xi.direction()[1].abs() < 1e-9 && xi.direction()[0] > 0.0) {
                Ok(north.clone())
            } else {
                Ok(xi.clone())
            }
        });
        assert!(matches!(res, Err(Error::Inadmissible(_))));
        // A collapse of two atoms is merged but stays admissible.
        let first = mu.atom(0).0;
        let second = mu.atom(1).0;
        let merged = pushforward(&mu, |xi| if *xi == second { Ok(first.clone()) } else { Ok(xi.clone()) }).unwrap();
        assert_eq!(merged.len(), 7);
        assert!((merged.weights()[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn admissibility() {
        let a = HBoundaryPoint::from_direction(&[1.0, 0.0]).unwrap();
        let b = HBoundaryPoint::from_direction(&[-1.0, 0.0]).unwrap();
        let two = BoundaryMeasure::new(vec![(a.clone(), 0.5), (b.clone(), 0.5)]).unwrap();
        assert!(!two.is_admissible());
        let c = HBoundaryPoint::from_direction(&[0.0, 1.0]).unwrap();
        let three = BoundaryMeasure::new(vec![(a, 0.4), (b, 0.3), (c, 0.3)]).unwrap();
        assert!(three.is_admissible() && three.is_normalized());
        assert!(BoundaryMeasure::new(vec![]).is_err());
    }

    #[test]
    fn json_schema() {
        let m: BoundaryMeasure =
            serde_json::from_str(r#"{"atoms": [[1,1,0,0.4],[1,-1,0,0.3],[1,0,1,0.3]]}"#).unwrap();
        assert_eq!(m.n(), 2);
        assert_eq!(m.len(), 3);
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"v\":\"v1\""));
        assert!(serde_json::from_str::<BoundaryMeasure>(r#"{"atoms": [[1,1,0,-0.4]]}"#).is_err());
    }
}
