//! Cocycles `sigma: Gamma x X -> Isom(H^m)` over a finite probability
//! `Gamma`-space, their twists, and boundary maps given slice by slice.
//!
//! `X` is finite, so integrals over it are exact sums. A finite space has
//! atoms; nothing computed here depends on `X` being atom-free.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperboloid::{boundary_embed, corner_inject, HBoundaryPoint, HIsometry};
use crate::lattice::{random_word, GroupPresentation, Word};
use crate::measure::min_separation;
use crate::quadrature::SphereQuadrature;

/// Default number of points of `X`.
pub const DEFAULT_SPACE_SIZE: usize = 16;

/// `X = {0, ..., N-1}` with weights and a permutation action of each generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteProbSpace {
    weights: Vec<f64>,
    /// `action[k][x]` is the image of `x` under generator `k`.
    action: Vec<Vec<usize>>,
    #[serde(skip)]
    inverse: Vec<Vec<usize>>,
}

impl FiniteProbSpace {
    pub fn new(weights: Vec<f64>, action: Vec<Vec<usize>>) -> Result<Self> {
        let size = weights.len();
        if size == 0 {
            return Err(Error::Invalid("probability space needs at least one point".into()));
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::Invalid("point weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid(format!("point weights sum to {total}, not 1")));
        }
        let mut inverse = Vec::with_capacity(action.len());
        for (k, perm) in action.iter().enumerate() {
            if perm.len() != size {
                return Err(Error::Invalid(format!("action of generator {k} has the wrong length")));
            }
            let mut inv = vec![usize::MAX; size];
            for (x, &y) in perm.iter().enumerate() {
                if y >= size || inv[y] != usize::MAX {
                    return Err(Error::Invalid(format!("action of generator {k} is not a bijection")));
                }
                inv[y] = x;
                if (weights[x] - weights[y]).abs() > 1e-15 {
                    return Err(Error::Invalid(format!("action of generator {k} does not preserve the measure")));
                }
            }
            inverse.push(inv);
        }
        Ok(Self { weights, action, inverse })
    }

    /// Uniform weights and the trivial action of `rank` generators.
    pub fn uniform(size: usize, rank: usize) -> Result<Self> {
        let w = 1.0 / size.max(1) as f64;
        let mut weights = vec![w; size];
        if let Some(last) = weights.last_mut() {
            // Exact unit total.
            *last = 1.0 - w * (size - 1) as f64;
        }
        Self::new(weights, vec![(0..size).collect(); rank])
    }

    pub fn validated(self) -> Result<Self> {
        Self::new(self.weights, self.action)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.action.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn act_letter(&self, l: i32, x: usize) -> usize {
        let k = l.unsigned_abs() as usize - 1;
        if l > 0 {
            self.action[k][x]
        } else {
            self.inverse[k][x]
        }
    }

    /// `w . x`, letters applied right to left.
    pub fn act_word(&self, w: &[i32], x: usize) -> usize {
        w.iter().rev().fold(x, |y, &l| self.act_letter(l, y))
    }

    /// Errors unless every relator of `group` acts trivially.
    pub fn check_relators(&self, group: &GroupPresentation) -> Result<()> {
        if self.rank() != group.rank() {
            return Err(Error::Invalid(format!(
                "space carries {} generator actions, group has {} generators",
                self.rank(),
                group.rank()
            )));
        }
        for r in group.relators() {
            for x in 0..self.len() {
                if self.act_word(r, x) != x {
                    return Err(Error::Relator(format!("relator {r:?} moves point {x}")));
                }
            }
        }
        Ok(())
    }

    /// The action induced through words: generator `k` of the new group acts
    /// as `words[k]`.
    pub fn induced(&self, words: &[Word]) -> Result<Self> {
        let action = words
            .iter()
            .map(|w| (0..self.len()).map(|x| self.act_word(w, x)).collect())
            .collect();
        Self::new(self.weights.clone(), action)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Cocycle {
    group: GroupPresentation,
    space: FiniteProbSpace,
    m: usize,
    /// `table[k][x] = sigma(g_k, x)`.
    table: Vec<Vec<HIsometry>>,
    #[serde(skip)]
    inverse: Vec<Vec<HIsometry>>,
    /// Values do not depend on `x`.
    representation: bool,
}

impl Cocycle {
    /// Builds a cocycle from generator values and checks it on relators.
    pub fn new(group: GroupPresentation, space: FiniteProbSpace, table: Vec<Vec<HIsometry>>) -> Result<Self> {
        space.check_relators(&group)?;
        if table.len() != group.rank() || table.iter().any(|row| row.len() != space.len()) {
            return Err(Error::Invalid("cocycle table must have one value per generator and point".into()));
        }
        let m = table[0][0].dim();
        if table.iter().flatten().any(|g| g.dim() != m) {
            return Err(Error::Dimension("cocycle values act on different dimensions".into()));
        }
        if m < group.dim() {
            return Err(Error::Dimension(format!("target H^{m} is smaller than the source H^{}", group.dim())));
        }
        let representation = table.iter().all(|row| row.iter().all(|g| g == &row[0]));
        let inverse = table.iter().map(|row| row.iter().map(|g| g.inverse()).collect()).collect();
        let c = Self { group, space, m, table, inverse, representation };
        for r in c.group.relators() {
            for x in 0..c.space.len() {
                let d = c.relator_defect(r, x);
                if d > crate::lattice::RELATOR_TOL {
                    return Err(Error::Relator(format!("cocycle is {d:e} from trivial on relator {r:?} at x = {x}")));
                }
            }
        }
        Ok(c)
    }

    pub fn group(&self) -> &GroupPresentation {
        &self.group
    }

    /// Product of the entry sizes of the letter values met along `w` from `x`,
    /// a bound on the scale of rounding errors in `sigma(w, x)`.
    pub fn word_scale(&self, w: &[i32], x: usize) -> f64 {
        let mut scale: f64 = 1.0;
        let mut y = x;
        for &l in w.iter().rev() {
            scale *= self.letter_value(l, y).matrix().amax().max(1.0);
            y = self.space.act_letter(l, y);
        }
        scale.min(f64::MAX)
    }

    /// Defect of `sigma(r, x)` from the identity relative to [`Self::word_scale`].
    pub fn relator_defect(&self, r: &[i32], x: usize) -> f64 {
        let g = self.eval(r, x);
        g.max_abs_diff(&HIsometry::identity(self.m)) / self.word_scale(r, x)
    }

    pub fn space(&self) -> &FiniteProbSpace {
        &self.space
    }

    /// Dimension `n` of the source space.
    pub fn n(&self) -> usize {
        self.group.dim()
    }

    /// Dimension `m` of the target space.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn is_representation(&self) -> bool {
        self.representation
    }

    pub fn generator_value(&self, k: usize, x: usize) -> &HIsometry {
        &self.table[k][x]
    }

    /// `sigma(l, x)` for a single letter; `sigma(g^-1, x) = sigma(g, g^-1 x)^-1`.
    pub fn letter_value(&self, l: i32, x: usize) -> &HIsometry {
        let k = l.unsigned_abs() as usize - 1;
        if l > 0 {
            &self.table[k][x]
        } else {
            &self.inverse[k][self.space.act_letter(l, x)]
        }
    }

    /// `sigma(w, x)` by the cocycle rule, letters consumed right to left.
    pub fn eval(&self, w: &[i32], x: usize) -> HIsometry {
        let mut acc = HIsometry::identity(self.m);
        let mut y = x;
        for &l in w.iter().rev() {
            acc = self.letter_value(l, y).compose(&acc);
            y = self.space.act_letter(l, y);
        }
        acc
    }

    /// Largest defect of `sigma(w1 w2, x) = sigma(w1, w2 x) sigma(w2, x)` over
    /// random reduced words of length `1..=max_len`, relative to the word scale.
    pub fn identity_defect<R: Rng + ?Sized>(&self, samples: usize, max_len: usize, rng: &mut R) -> f64 {
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let w1 = random_word(self.group.rank(), rng.gen_range(1..=max_len), rng);
            let w2 = random_word(self.group.rank(), rng.gen_range(1..=max_len), rng);
            let x = rng.gen_range(0..self.space.len());
            let mut w = w1.clone();
            w.extend(&w2);
            let lhs = self.eval(&w, x);
            let rhs = self.eval(&w1, self.space.act_word(&w2, x)).compose(&self.eval(&w2, x));
            worst = worst.max(lhs.max_abs_diff(&rhs) / self.word_scale(&w, x));
        }
        worst
    }
}

/// `sigma_rho(g, x) = rho(g)`.
pub fn rep_cocycle(group: &GroupPresentation, rho: &[HIsometry], space: &FiniteProbSpace) -> Result<Cocycle> {
    if rho.len() != group.rank() {
        return Err(Error::Invalid(format!("{} images for {} generators", rho.len(), group.rank())));
    }
    let table = rho.iter().map(|g| vec![g.clone(); space.len()]).collect();
    Cocycle::new(group.clone(), space.clone(), table)
}

/// The cocycle of the lattice embedding `Gamma -> Isom(H^n) -> Isom(H^m)`.
pub fn standard_cocycle(group: &GroupPresentation, m: usize, space: &FiniteProbSpace) -> Result<Cocycle> {
    let rho = group
        .generators()
        .iter()
        .map(|g| corner_inject(g, m))
        .collect::<Result<Vec<_>>>()?;
    rep_cocycle(group, &rho, space)
}

/// `sigma^f(g, x) = f(g x)^-1 sigma(g, x) f(x)`.
pub fn twist(sigma: &Cocycle, f: &[HIsometry]) -> Result<Cocycle> {
    if f.len() != sigma.space.len() {
        return Err(Error::Invalid("twist needs one isometry per point of X".into()));
    }
    if f.iter().any(|g| g.dim() != sigma.m) {
        return Err(Error::Dimension("twist values must act on the target space".into()));
    }
    let finv: Vec<HIsometry> = f.iter().map(|g| g.inverse()).collect();
    let table = (0..sigma.group.rank())
        .map(|k| {
            (0..sigma.space.len())
                .map(|x| {
                    let gx = sigma.space.act_letter(k as i32 + 1, x);
                    finv[gx].compose(&sigma.table[k][x]).compose(&f[x])
                })
                .collect()
        })
        .collect();
    Cocycle::new(sigma.group.clone(), sigma.space.clone(), table)
}

/// Random measurable maps `X -> Isom(H^m)`.
pub fn random_twist<R: Rng + ?Sized>(m: usize, size: usize, max_dist: f64, rng: &mut R) -> Vec<HIsometry> {
    (0..size).map(|_| HIsometry::random(m, max_dist, rng)).collect()
}

/// Primitive sphere maps from which slices are composed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryPrimitive {
    /// Boundary action of an isometry.
    Isometry(HIsometry),
    /// Boundary of the totally geodesic embedding into `H^m`.
    Embed(usize),
    /// Radial reparametrization `r -> r^kappa` in stereographic coordinates
    /// centred at `pole`; fixes `pole`, its antipode and the equator.
    Squash { kappa: f64, pole: Vec<f64> },
}

/// Applies the squash map to a unit direction.
pub fn squash(y: &[f64], kappa: f64, pole: &[f64]) -> Vec<f64> {
    let t: f64 = y.iter().zip(pole).map(|(a, b)| a * b).sum();
    if 1.0 + t < 1e-300 {
        return y.to_vec();
    }
    let sigma: Vec<f64> = y.iter().zip(pole).map(|(a, p)| (a - t * p) / (1.0 + t)).collect();
    let r = sigma.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r == 0.0 {
        return pole.to_vec();
    }
    let rk = r.powf(kappa);
    let scale = rk / r;
    let den = 1.0 + rk * rk;
    pole.iter()
        .zip(&sigma)
        .map(|(p, s)| ((1.0 - rk * rk) * p + 2.0 * scale * s) / den)
        .collect()
}

impl BoundaryPrimitive {
    fn apply(&self, xi: &HBoundaryPoint) -> Result<HBoundaryPoint> {
        match self {
            Self::Isometry(g) => {
                if g.dim() != xi.dim() {
                    return Err(Error::Dimension("isometry in a slice chain has the wrong dimension".into()));
                }
                Ok(g.act_boundary(xi))
            }
            Self::Embed(m) => boundary_embed(xi, *m),
            Self::Squash { kappa, pole } => {
                if pole.len() != xi.dim() {
                    return Err(Error::Dimension("squash pole has the wrong dimension".into()));
                }
                HBoundaryPoint::from_direction(&squash(xi.direction(), *kappa, pole))
            }
        }
    }

    /// Output dimension given the input dimension, validating parameters.
    fn out_dim(&self, d: usize) -> Result<usize> {
        match self {
            Self::Isometry(g) if g.dim() == d => Ok(d),
            Self::Isometry(g) => Err(Error::Dimension(format!("isometry of H^{} applied on the boundary of H^{d}", g.dim()))),
            Self::Embed(m) if *m >= d => Ok(*m),
            Self::Embed(m) => Err(Error::Dimension(format!("cannot embed the boundary of H^{d} into H^{m}"))),
            Self::Squash { kappa, pole } => {
                if !(*kappa > 0.0) || !kappa.is_finite() {
                    return Err(Error::Invalid(format!("squash exponent {kappa} must be positive")));
                }
                if pole.len() != d {
                    return Err(Error::Dimension("squash pole has the wrong dimension".into()));
                }
                let norm = pole.iter().map(|v| v * v).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > 1e-12 {
                    return Err(Error::Invalid("squash pole must be a unit vector".into()));
                }
                Ok(d)
            }
        }
    }
}

/// Slices `phi_x` as composition chains, applied first to last. A single chain
/// is shared by every `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryMapSpec {
    n: usize,
    m: usize,
    slices: Vec<Vec<BoundaryPrimitive>>,
}

impl BoundaryMapSpec {
    pub fn new(n: usize, slices: Vec<Vec<BoundaryPrimitive>>) -> Result<Self> {
        if slices.is_empty() {
            return Err(Error::Invalid("boundary map needs at least one slice".into()));
        }
        let mut m = None;
        for chain in &slices {
            let d = chain.iter().try_fold(n, |d, p| p.out_dim(d))?;
            if *m.get_or_insert(d) != d {
                return Err(Error::Dimension("slices end in different dimensions".into()));
            }
        }
        Ok(Self { n, m: m.unwrap_or(n), slices })
    }

    pub fn validated(self) -> Result<Self> {
        Self::new(self.n, self.slices)
    }

    /// `phi_x = boundary of j_{n,m}` for every `x`.
    pub fn standard(n: usize, m: usize) -> Result<Self> {
        Self::new(n, vec![vec![BoundaryPrimitive::Embed(m)]])
    }

    /// The standard slice followed by a squash of exponent `kappa`.
    pub fn squashed(n: usize, m: usize, kappa: f64, pole: Vec<f64>) -> Result<Self> {
        Self::new(n, vec![vec![BoundaryPrimitive::Embed(m), BoundaryPrimitive::Squash { kappa, pole }]])
    }

    /// Unit pole halfway between the first and last axes of `R^m`.
    pub fn default_pole(m: usize) -> Vec<f64> {
        let mut p = vec![0.0; m];
        p[0] = std::f64::consts::FRAC_1_SQRT_2;
        p[m - 1] = std::f64::consts::FRAC_1_SQRT_2;
        p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn is_shared(&self) -> bool {
        self.slices.len() == 1
    }

    pub fn slice(&self, x: usize) -> &[BoundaryPrimitive] {
        if self.slices.len() == 1 {
            &self.slices[0]
        } else {
            &self.slices[x]
        }
    }

    /// Number of distinct chains stored.
    pub fn chain_count(&self) -> usize {
        self.slices.len()
    }

    /// Errors unless the map has one chain or one chain per point of `X`.
    pub fn check_space(&self, size: usize) -> Result<()> {
        if self.slices.len() != 1 && self.slices.len() != size {
            return Err(Error::Invalid(format!("{} slices for a space of {size} points", self.slices.len())));
        }
        Ok(())
    }

    /// `phi_x(xi)`.
    pub fn apply(&self, x: usize, xi: &HBoundaryPoint) -> Result<HBoundaryPoint> {
        if xi.dim() != self.n {
            return Err(Error::Dimension("ideal point has the wrong dimension".into()));
        }
        self.slice(x).iter().try_fold(xi.clone(), |p, prim| prim.apply(&p))
    }

    /// Smallest separation of images of the quadrature nodes over all slices.
    pub fn injectivity_scan(&self, quad: &SphereQuadrature) -> Result<f64> {
        let mut worst = f64::INFINITY;
        for x in 0..self.slices.len() {
            let imgs = quad
                .nodes()
                .iter()
                .map(|xi| self.apply(x, xi))
                .collect::<Result<Vec<_>>>()?;
            worst = worst.min(min_separation(&imgs));
        }
        Ok(worst)
    }
}

/// `phi^f_x = f(x)^-1 . phi_x`.
pub fn twist_boundary(phi: &BoundaryMapSpec, f: &[HIsometry]) -> Result<BoundaryMapSpec> {
    let slices = (0..f.len())
        .map(|x| {
            let mut chain = phi.slice(x).to_vec();
            chain.push(BoundaryPrimitive::Isometry(f[x].inverse()));
            chain
        })
        .collect();
    BoundaryMapSpec::new(phi.n, slices)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivarianceReport {
    pub samples: usize,
    /// Largest chordal distance between `phi_{gx}(g xi)` and `sigma(g, x) phi_x(xi)`.
    pub max_deviation: f64,
}

/// Samples `(gamma, x, xi)` with `gamma` a random word of length 1 to 3.
pub fn check_equivariance<R: Rng + ?Sized>(
    sigma: &Cocycle,
    phi: &BoundaryMapSpec,
    samples: usize,
    rng: &mut R,
) -> Result<EquivarianceReport> {
    if phi.n() != sigma.n() || phi.m() != sigma.m() {
        return Err(Error::Dimension("cocycle and boundary map dimensions differ".into()));
    }
    phi.check_space(sigma.space().len())?;
    let group = sigma.group();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let w = random_word(group.rank(), rng.gen_range(1..=3), rng);
        let x = rng.gen_range(0..sigma.space().len());
        let s: Vec<f64> = (0..phi.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let xi = HBoundaryPoint::from_direction(&s)?;
        let gxi = w.iter().rev().fold(xi.clone(), |p, &l| group.letter(l).act_boundary(&p));
        let lhs = phi.apply(sigma.space().act_word(&w, x), &gxi)?;
        let rhs = sigma.eval(&w, x).act_boundary(&phi.apply(x, &xi)?);
        worst = worst.max(lhs.chordal(&rhs));
    }
    Ok(EquivarianceReport { samples, max_deviation: worst })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::genus2_octagon;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (GroupPresentation, FiniteProbSpace) {
        let (g, _) = genus2_octagon().unwrap();
        let x = FiniteProbSpace::uniform(DEFAULT_SPACE_SIZE, g.rank()).unwrap();
        (g, x)
    }

    /// A nontrivial action: `a1` and `a2` swap the halves, the others fix all.
    fn swap_space(rank: usize) -> FiniteProbSpace {
        let swap: Vec<usize> = (0..4).map(|x| (x + 2) % 4).collect();
        let id: Vec<usize> = (0..4).collect();
        let mut action = vec![id; rank];
        action[0] = swap.clone();
        action[2] = swap;
        FiniteProbSpace::new(vec![0.25; 4], action).unwrap()
    }

    #[test]
    fn space_validation() {
        assert!(FiniteProbSpace::new(vec![0.5, 0.5], vec![vec![0, 0]]).is_err());
        assert!(FiniteProbSpace::new(vec![0.6, 0.4], vec![vec![1, 0]]).is_err());
        assert!(FiniteProbSpace::new(vec![0.6, 0.5], vec![]).is_err());
        let (g, _) = genus2_octagon().unwrap();
        swap_space(4).check_relators(&g).unwrap();
        let mut bad = vec![(0..4).collect::<Vec<usize>>(); 4];
        bad[0] = vec![1, 2, 3, 0];
        let s = FiniteProbSpace::new(vec![0.25; 4], bad).unwrap();
        assert!(s.check_relators(&g).is_ok());
        let mut bad = vec![(0..3).collect::<Vec<usize>>(); 4];
        bad[0] = vec![1, 0, 2];
        bad[1] = vec![0, 2, 1];
        let s = FiniteProbSpace::new(vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], bad);
        assert!(s.map(|s| s.check_relators(&g).is_err()).unwrap_or(true));
    }

    #[test]
    fn representation_cocycles() {
        let (g, x) = setup();
        let sigma = standard_cocycle(&g, 3, &x).unwrap();
        assert!(sigma.is_representation());
        let w = [1, -3, 2];
        let direct = corner_inject(&g.eval_word(&w), 3).unwrap();
        assert!(sigma.eval(&w, 5).max_abs_diff(&direct) < 1e-10);
        assert_eq!(sigma.eval(&w, 0), sigma.eval(&w, 9));
        let trivial = rep_cocycle(&g, &vec![HIsometry::identity(3); 4], &x).unwrap();
        assert_eq!(trivial.eval(&w, 3), HIsometry::identity(3));
        // Commuting images would satisfy the relator, so use two different axes.
        let wrong = vec![HIsometry::boost(3, 0, 1.0), HIsometry::boost(3, 1, 1.0), HIsometry::identity(3), HIsometry::identity(3)];
        assert!(matches!(rep_cocycle(&g, &wrong, &x), Err(Error::Relator(_))));
    }

    #[test]
    fn cocycle_identity_with_action() {
        let (g, _) = genus2_octagon().unwrap();
        let x = swap_space(4);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sigma = standard_cocycle(&g, 3, &x).unwrap();
        let tw = twist(&sigma, &random_twist(3, 4, 1.0, &mut rng)).unwrap();
        assert!(!tw.is_representation());
        assert!(tw.identity_defect(100, 3, &mut rng) < 1e-10);
    }

    #[test]
    fn twisting_is_an_action() {
        let (g, x) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let sigma = standard_cocycle(&g, 3, &x).unwrap();
        let f = random_twist(3, x.len(), 1.0, &mut rng);
        let h = random_twist(3, x.len(), 1.0, &mut rng);
        let finv: Vec<_> = f.iter().map(|g| g.inverse()).collect();
        let back = twist(&twist(&sigma, &f).unwrap(), &finv).unwrap();
        let fh: Vec<_> = f.iter().zip(&h).map(|(a, b)| a.compose(b)).collect();
        let two_step = twist(&twist(&sigma, &f).unwrap(), &h).unwrap();
        let one_step = twist(&sigma, &fh).unwrap();
        for k in 0..4 {
            for xi in 0..x.len() {
                let s = sigma.generator_value(k, xi);
                let scale = s.matrix().amax();
                assert!(back.generator_value(k, xi).max_abs_diff(s) < 1e-10 * scale);
                let t = one_step.generator_value(k, xi);
                assert!(two_step.generator_value(k, xi).max_abs_diff(t) < 1e-10 * t.matrix().amax());
            }
        }
        let same = twist(&sigma, &vec![HIsometry::identity(3); x.len()]).unwrap();
        assert_eq!(same.generator_value(1, 2), sigma.generator_value(1, 2));
        let hc = HIsometry::random(3, 1.0, &mut rng);
        let conj = twist(&sigma, &vec![hc.clone(); x.len()]).unwrap();
        assert!(conj.is_representation());
        let expect = hc.inverse().compose(sigma.generator_value(0, 0)).compose(&hc);
        assert!(conj.generator_value(0, 3).max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn squash_fixes_pole_equator_and_is_injective() {
        let pole = BoundaryMapSpec::default_pole(3);
        let img = squash(&pole, 1.5, &pole);
        assert!(img.iter().zip(&pole).all(|(a, b)| (a - b).abs() < 1e-15));
        // Equator points are fixed.
        let eq = [0.0, 1.0, 0.0];
        let img = squash(&eq, 1.5, &pole);
        assert!(img.iter().zip(&eq).all(|(a, b)| (a - b).abs() < 1e-15));
        let phi = BoundaryMapSpec::squashed(2, 3, 1.5, pole).unwrap();
        let q = SphereQuadrature::new(2, 512).unwrap();
        assert!(phi.injectivity_scan(&q).unwrap() > 1e-10);
        assert!(BoundaryMapSpec::squashed(2, 3, -1.0, vec![1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn equivariance_checks() {
        let (g, x) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let sigma = standard_cocycle(&g, 3, &x).unwrap();
        let phi = BoundaryMapSpec::standard(2, 3).unwrap();
        assert!(check_equivariance(&sigma, &phi, 200, &mut rng).unwrap().max_deviation < 1e-10);
        let f = random_twist(3, x.len(), 1.0, &mut rng);
        let sf = twist(&sigma, &f).unwrap();
        let pf = twist_boundary(&phi, &f).unwrap();
        assert!(check_equivariance(&sf, &pf, 200, &mut rng).unwrap().max_deviation < 1e-9);
        assert!(check_equivariance(&sf, &phi, 200, &mut rng).unwrap().max_deviation > 0.1);
    }

    #[test]
    fn double_twist_of_slices() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let phi = BoundaryMapSpec::standard(2, 3).unwrap();
        let f = random_twist(3, 8, 1.0, &mut rng);
        let finv: Vec<_> = f.iter().map(|g| g.inverse()).collect();
        let back = twist_boundary(&twist_boundary(&phi, &f).unwrap(), &finv).unwrap();
        let q = SphereQuadrature::new(2, 256).unwrap();
        for x in 0..8 {
            for xi in q.nodes() {
                let a = phi.apply(x, xi).unwrap();
                let b = back.apply(x, xi).unwrap();
                assert!(a.chordal(&b) < 1e-12);
            }
        }
        assert!(twist_boundary(&phi, &f).unwrap().injectivity_scan(&q).unwrap() > 1e-10);
    }

    #[test]
    fn json_round_trip() {
        let phi = BoundaryMapSpec::squashed(2, 3, 1.5, BoundaryMapSpec::default_pole(3)).unwrap();
        let s = serde_json::to_string(&phi).unwrap();
        assert!(s.contains("\"squash\""));
        let back: BoundaryMapSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back.validated().unwrap(), phi);
    }
}
