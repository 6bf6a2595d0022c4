//! Finitely generated groups of isometries, orbit enumeration, the genus-2
//! octagon group and quadrature over fundamental domains.
//!
//! Words are sequences of nonzero letters: `k + 1` stands for generator `k`
//! and `-(k + 1)` for its inverse. A word `l_1 l_2 ... l_r` denotes the
//! product `g_{l_1} g_{l_2} ... g_{l_r}`.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperboloid::{stable_distance, HIsometry, HPoint};

pub type Word = Vec<i32>;

/// Relators must evaluate to the identity within this entrywise tolerance.
pub const RELATOR_TOL: f64 = 1e-8;

/// Orbit points closer than this are identified.
pub const ORBIT_DEDUP_TOL: f64 = 1e-8;

/// Default cap on enumerated group elements.
pub const DEFAULT_WORD_BUDGET: usize = 10_000_000;

pub fn invert_word(w: &[i32]) -> Word {
    w.iter().rev().map(|l| -l).collect()
}

/// Free reduction: cancels adjacent `l, -l` pairs.
pub fn reduce_word(w: &[i32]) -> Word {
    let mut out: Word = Vec::with_capacity(w.len());
    for &l in w {
        if out.last() == Some(&-l) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

/// Shortlex rank of a letter: `g1 < g1^-1 < g2 < g2^-1 < ...`.
fn letter_rank(l: i32) -> u32 {
    2 * (l.unsigned_abs() - 1) + u32::from(l < 0)
}

pub fn shortlex_cmp(a: &[i32], b: &[i32]) -> std::cmp::Ordering {
    a.len()
        .cmp(&b.len())
        .then_with(|| a.iter().map(|&l| letter_rank(l)).cmp(b.iter().map(|&l| letter_rank(l))))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupPresentation {
    pub label: String,
    generators: Vec<HIsometry>,
    #[serde(default)]
    relators: Vec<Word>,
    /// Radius of a ball about `o` containing a fundamental domain whose side
    /// pairings are the generators; makes the pruned orbit search exhaustive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain_radius: Option<f64>,
    #[serde(skip)]
    inverses: Vec<HIsometry>,
}

impl GroupPresentation {
    /// Validates dimensions and checks every relator.
    pub fn new(generators: Vec<HIsometry>, relators: Vec<Word>, label: impl Into<String>) -> Result<Self> {
        let n = generators
            .first()
            .map(|g| g.dim())
            .ok_or_else(|| Error::Invalid("a group needs at least one generator".into()))?;
        if generators.iter().any(|g| g.dim() != n) {
            return Err(Error::Dimension("generators act on different dimensions".into()));
        }
        let inverses = generators.iter().map(|g| g.inverse()).collect();
        let g = Self { label: label.into(), generators, relators, domain_radius: None, inverses };
        for r in &g.relators {
            g.check_word_letters(r)?;
            let defect = g.relator_defect(r);
            if defect > RELATOR_TOL {
                return Err(Error::Relator(format!("relator {r:?} evaluates {defect:e} away from the identity")));
            }
        }
        Ok(g)
    }

    /// Rebuilds derived data after deserialization and re-validates.
    pub fn validated(self) -> Result<Self> {
        let radius = self.domain_radius;
        let mut g = Self::new(self.generators, self.relators, self.label)?;
        g.domain_radius = radius;
        Ok(g)
    }

    /// Distance of a word's value from the identity, relative to the largest
    /// entry met along its partial products (rounding grows with it).
    pub fn relator_defect(&self, w: &[i32]) -> f64 {
        let mut acc = HIsometry::identity(self.dim());
        let mut scale: f64 = 1.0;
        for &l in w {
            acc = acc.compose(self.letter(l));
            scale = scale.max(acc.matrix().amax());
        }
        acc.max_abs_diff(&HIsometry::identity(self.dim())) / scale
    }

    pub fn with_domain_radius(mut self, r: f64) -> Self {
        self.domain_radius = Some(r);
        self
    }

    pub fn domain_radius(&self) -> Option<f64> {
        self.domain_radius
    }

    pub fn dim(&self) -> usize {
        self.generators[0].dim()
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[HIsometry] {
        &self.generators
    }

    pub fn relators(&self) -> &[Word] {
        &self.relators
    }

    fn check_word_letters(&self, w: &[i32]) -> Result<()> {
        for &l in w {
            if l == 0 || l.unsigned_abs() as usize > self.rank() {
                return Err(Error::Invalid(format!("letter {l} out of range for {} generators", self.rank())));
            }
        }
        Ok(())
    }

    pub fn letter(&self, l: i32) -> &HIsometry {
        let k = l.unsigned_abs() as usize - 1;
        if l > 0 {
            &self.generators[k]
        } else {
            &self.inverses[k]
        }
    }

    pub fn eval_word(&self, w: &[i32]) -> HIsometry {
        w.iter()
            .fold(HIsometry::identity(self.dim()), |acc, &l| acc.compose(self.letter(l)))
    }

    /// `w . p`, applying letters right to left. Stable for long words, unlike
    /// forming the matrix product.
    pub fn act_word(&self, w: &[i32], p: &HPoint) -> HPoint {
        w.iter().rev().fold(p.clone(), |q, &l| self.letter(l).act(&q))
    }

    /// Checked variant of [`GroupPresentation::eval_word`].
    pub fn try_eval_word(&self, w: &[i32]) -> Result<HIsometry> {
        self.check_word_letters(w)?;
        Ok(self.eval_word(w))
    }

    /// All letters in shortlex order.
    pub fn letters(&self) -> Vec<i32> {
        (1..=self.rank() as i32).flat_map(|k| [k, -k]).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitPoint {
    pub word: Word,
    pub point: HPoint,
}

#[derive(Clone, Debug)]
pub struct OrbitOptions {
    /// Extra search radius beyond `R`. `None` uses the group's domain radius
    /// plus `d(o, base)`, or else the largest generator displacement.
    pub slack: Option<f64>,
    pub max_words: usize,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        Self { slack: None, max_words: DEFAULT_WORD_BUDGET }
    }
}

/// Spatial hash on Poincare ball coordinates.
struct DedupGrid {
    cell: f64,
    heads: HashMap<[i64; 4], u32>,
    next: Vec<u32>,
}

const NIL: u32 = u32::MAX;

/// Identification radius at a point with time coordinate `x0`. Far out the
/// coordinates themselves only carry about `x0 * eps` of angular precision, so
/// the fixed tolerance is widened in proportion.
fn dedup_tol(x0: f64) -> f64 {
    ORBIT_DEDUP_TOL.max(1e-12 * x0)
}

impl DedupGrid {
    fn new() -> Self {
        Self { cell: ORBIT_DEDUP_TOL, heads: HashMap::new(), next: Vec::new() }
    }

    fn key(&self, y: &[f64]) -> [i64; 4] {
        let mut k = [0i64; 4];
        for (i, v) in y.iter().enumerate() {
            k[i] = (v / self.cell).floor() as i64;
        }
        k
    }

    /// Index of a stored point within `tol` of `p`, searching the neighbouring
    /// cells only along axes where `p` sits close to a cell wall.
    fn find(&self, y: &[f64], p: &[f64], pts: &[f64], stride: usize, reach: f64) -> Option<u32> {
        let base = self.key(y);
        let mut offsets: Vec<[i64; 4]> = vec![[0; 4]];
        for (i, v) in y.iter().enumerate() {
            let frac = v / self.cell - base[i] as f64;
            let mut steps = Vec::new();
            if frac * self.cell < reach {
                steps.push(-1);
            }
            if (1.0 - frac) * self.cell < reach {
                steps.push(1);
            }
            let extra: Vec<[i64; 4]> = steps
                .iter()
                .flat_map(|&step| {
                    offsets.iter().map(move |o| {
                        let mut o = *o;
                        o[i] = step;
                        o
                    })
                })
                .collect();
            offsets.extend(extra);
        }
        for off in offsets {
            let mut k = base;
            for i in 0..4 {
                k[i] += off[i];
            }
            let mut cur = self.heads.get(&k).copied().unwrap_or(NIL);
            while cur != NIL {
                let q = &pts[cur as usize * stride..(cur as usize + 1) * stride];
                if stable_distance(p, q) < dedup_tol(p[0]) {
                    return Some(cur);
                }
                cur = self.next[cur as usize];
            }
        }
        None
    }

    fn insert(&mut self, y: &[f64], idx: u32) {
        let k = self.key(y);
        let head = self.heads.insert(k, idx).unwrap_or(NIL);
        if self.next.len() <= idx as usize {
            self.next.resize(idx as usize + 1, NIL);
        }
        self.next[idx as usize] = head;
    }
}

/// All orbit points `gamma . base` with `d(base, gamma . base) <= radius`,
/// sorted by shortlex order of their words.
///
/// The search is breadth-first by left multiplication and prunes elements
/// farther than `radius + slack`. Each element keeps the first word found,
/// which is shortlex-minimal among words whose suffixes stay inside the
/// search radius.
pub fn orbit_ball(group: &GroupPresentation, base: &HPoint, radius: f64, opts: &OrbitOptions) -> Result<Vec<OrbitPoint>> {
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(Error::Invalid(format!("orbit radius {radius} must be finite and >= 0")));
    }
    if base.dim() != group.dim() {
        return Err(Error::Dimension("base point and group act on different dimensions".into()));
    }
    let n = group.dim();
    if n > 4 {
        return Err(Error::Dimension("orbit enumeration supports n <= 4".into()));
    }
    let stride = n + 1;
    let o = HPoint::origin(n);
    let slack = match opts.slack {
        Some(s) => s,
        None => match group.domain_radius() {
            Some(r) => r + 2.0 * o.dist(base) + 1e-6,
            None => group
                .generators()
                .iter()
                .map(|g| base.dist(&g.act(base)))
                .fold(0.0, f64::max),
        },
    };
    let bound = radius + slack;

    let letters = group.letters();
    let mats: Vec<Vec<f64>> = letters.iter().map(|&l| group.letter(l).to_row_major()).collect();

    // Flat storage: coordinates, parent index and the prepended letter.
    let mut pts: Vec<f64> = base.coords().to_vec();
    let mut parent: Vec<u32> = vec![NIL];
    let mut letter: Vec<i32> = vec![0];
    let mut grid = DedupGrid::new();
    grid.insert(&base.to_ball(), 0);

    let mut frontier: Vec<u32> = vec![0];
    let mut buf = vec![0.0; stride];
    let mut y = vec![0.0; n];
    while !frontier.is_empty() {
        let mut next_frontier = Vec::new();
        // Letters outermost: prepending to a shortlex-sorted frontier yields
        // shortlex-sorted words.
        for (li, &l) in letters.iter().enumerate() {
            let m = &mats[li];
            for &pi in &frontier {
                let p = &pts[pi as usize * stride..(pi as usize + 1) * stride];
                for i in 0..stride {
                    let mut s = 0.0;
                    for j in 0..stride {
                        s += m[i * stride + j] * p[j];
                    }
                    buf[i] = s;
                }
                let d = stable_distance(base.coords(), &buf);
                if d > bound {
                    continue;
                }
                for i in 0..n {
                    y[i] = buf[i + 1] / (1.0 + buf[0]);
                }
                // Euclidean size of the dedup tolerance at this depth.
                let reach = dedup_tol(buf[0]) * 2.0 / (1.0 + buf[0]);
                if grid.find(&y, &buf, &pts, stride, reach).is_some() {
                    continue;
                }
                let idx = parent.len();
                if idx >= opts.max_words {
                    return Err(Error::Resource(format!(
                        "orbit enumeration exceeded {} group elements",
                        opts.max_words
                    )));
                }
                pts.extend_from_slice(&buf);
                parent.push(pi);
                letter.push(l);
                grid.insert(&y, idx as u32);
                next_frontier.push(idx as u32);
            }
        }
        frontier = next_frontier;
    }

    let mut out = Vec::new();
    for idx in 0..parent.len() {
        let p = &pts[idx * stride..(idx + 1) * stride];
        if stable_distance(base.coords(), p) > radius {
            continue;
        }
        let mut word = Vec::new();
        let mut cur = idx as u32;
        while parent[cur as usize] != NIL {
            word.push(letter[cur as usize]);
            cur = parent[cur as usize];
        }
        out.push(OrbitPoint { word, point: HPoint::normalized(p.to_vec()) });
    }
    out.sort_by(|a, b| shortlex_cmp(&a.word, &b.word));
    Ok(out)
}

/// Least-squares slope of `log N(r)` against `r` over `r` in `[R/2, R]`,
/// sampled at 64 radii, for orbit distances `dists` up to `R`.
pub fn orbit_growth_slope(dists: &[f64], radius: f64) -> Result<f64> {
    let mut sorted: Vec<f64> = dists.to_vec();
    sorted.sort_by(f64::total_cmp);
    let samples = 64;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for k in 0..=samples {
        let r = radius * (0.5 + 0.5 * k as f64 / samples as f64);
        let count = sorted.partition_point(|&d| d <= r);
        if count > 0 {
            xs.push(r);
            ys.push((count as f64).ln());
        }
    }
    if xs.len() < 2 {
        return Err(Error::DegenerateMeasure("not enough orbit points to fit a growth rate".into()));
    }
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// Inradius and circumradius of the regular octagon with vertex angles
/// `pi/4`: `cosh r_in = 1 + sqrt 2`, `cosh R = (1 + sqrt 2)^2`.
fn octagon_radii() -> (f64, f64) {
    let c = 1.0 + 2f64.sqrt();
    (c.acosh(), (c * c).acosh())
}

/// The side pairing taking side `j` of the octagon onto side `i`.
fn side_pairing(i: usize, j: usize) -> HIsometry {
    let (r_in, _) = octagon_radii();
    HIsometry::rotation(2, 0, 1, i as f64 * FRAC_PI_4)
        .compose(&HIsometry::boost(2, 0, 2.0 * r_in))
        .compose(&HIsometry::rotation(2, 0, 1, PI))
        .compose(&HIsometry::rotation(2, 0, 1, -(j as f64) * FRAC_PI_4))
}

/// The genus-2 surface group as side pairings `a1, b1, a2, b2` of the regular
/// octagon with vertex angles `pi/4` centred at `o`, with the relator
/// `a1 b1 a1^-1 b1^-1 a2 b2 a2^-1 b2^-1`, and its default quadrature domain.
pub fn genus2_octagon() -> Result<(GroupPresentation, FundamentalDomain)> {
    let gens = vec![side_pairing(0, 2), side_pairing(3, 1), side_pairing(4, 6), side_pairing(7, 5)];
    let (_, r_v) = octagon_radii();
    let g = GroupPresentation::new(gens, vec![vec![1, 2, -1, -2, 3, 4, -3, -4]], "genus2")?.with_domain_radius(r_v);
    Ok((g, FundamentalDomain::octagon(DEFAULT_LINE_POINTS, DEFAULT_LINE_POINTS)?))
}

/// Gauss points per direction in each of the 16 octagon triangles
/// (16 * 16 * 16 = 4096 cells).
pub const DEFAULT_LINE_POINTS: usize = 16;

/// Vertices of the octagon, for plotting and angle checks.
pub fn octagon_vertices() -> Vec<HPoint> {
    let (_, r_v) = octagon_radii();
    (0..8)
        .map(|k| {
            let t = (2 * k + 1) as f64 * FRAC_PI_8;
            HPoint::from_polar(&[t.cos(), t.sin()], r_v).expect("nonzero direction")
        })
        .collect()
}

/// Interior angle of a polygon in `H^2` at vertex `v` between neighbours `p`, `q`.
pub fn interior_angle(v: &HPoint, p: &HPoint, q: &HPoint) -> f64 {
    let a = v.log(p);
    let b = v.log(q);
    let ip = crate::hyperboloid::minkowski(&a, &b);
    let na = crate::hyperboloid::minkowski(&a, &a).sqrt();
    let nb = crate::hyperboloid::minkowski(&b, &b).sqrt();
    (ip / (na * nb)).clamp(-1.0, 1.0).acos()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
enum DomainShape {
    Octagon { n_phi: usize, n_r: usize },
    Translates { n_phi: usize, n_r: usize, translates: Vec<HIsometry> },
}

/// A fundamental domain as quadrature cells `(point, weight)`.
#[derive(Clone, Debug, Serialize)]
pub struct FundamentalDomain {
    n: usize,
    cells: Vec<(HPoint, f64)>,
    total_volume: f64,
    /// Contiguous runs of neighbouring cells (one Gauss line each).
    #[serde(skip)]
    lines: Vec<std::ops::Range<usize>>,
    #[serde(skip)]
    shape: DomainShape,
}

fn gauss_on(a: f64, b: f64, k: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(k).expect("k > 0"));
    let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
    rule.as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (mid + half * x, half * w))
        .collect()
}

impl FundamentalDomain {
    /// The octagon split into 16 right triangles at `o`, each integrated in
    /// geodesic polar coordinates with `n_phi x n_r` Gauss points. The outer
    /// variable is the angle at the triangle's far vertex, which keeps the
    /// integrand analytic up to the boundary.
    pub fn octagon(n_phi: usize, n_r: usize) -> Result<Self> {
        if n_phi == 0 || n_r == 0 {
            return Err(Error::Invalid("octagon quadrature needs at least one point per direction".into()));
        }
        let (r_in, _) = octagon_radii();
        let c = r_in.tanh();
        let s = (1.0 - c * c).sqrt();
        let phi_rule = gauss_on(0.0, 3.0 * FRAC_PI_8, n_phi);
        let mut cells = Vec::with_capacity(16 * n_phi * n_r);
        let mut lines = Vec::with_capacity(16 * n_phi);
        for t in 0..16 {
            let side_angle = (t / 2) as f64 * FRAC_PI_4;
            let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
            for &(phi, wphi) in &phi_rule {
                let u = (s * phi.sin()).asin();
                let du = s * phi.cos() / u.cos();
                let r_max = (c / u.cos()).atanh();
                let theta = side_angle + sign * u;
                let dir = [theta.cos(), theta.sin()];
                let start = cells.len();
                for (r, wr) in gauss_on(0.0, r_max, n_r) {
                    cells.push((HPoint::from_polar(&dir, r)?, wphi * du * wr * r.sinh()));
                }
                lines.push(start..cells.len());
            }
        }
        Ok(Self::assemble(2, cells, lines, DomainShape::Octagon { n_phi, n_r }))
    }

    /// Octagon quadrature with about `cells` cells (rounded to `16 k^2`).
    pub fn octagon_with_cells(cells: usize) -> Result<Self> {
        let k = ((cells as f64 / 16.0).sqrt().round() as usize).max(1);
        Self::octagon(k, k)
    }

    fn assemble(n: usize, cells: Vec<(HPoint, f64)>, lines: Vec<std::ops::Range<usize>>, shape: DomainShape) -> Self {
        let weights: Vec<f64> = cells.iter().map(|c| c.1).collect();
        let total_volume = crate::measure::pairwise_sum(&weights);
        Self { n, cells, total_volume, lines, shape }
    }

    /// Union of the translates `g . D` (a domain for a finite-index subgroup
    /// when the `g` are coset representatives).
    pub fn translated_union(&self, translates: &[HIsometry]) -> Result<Self> {
        let (n_phi, n_r) = self.resolution();
        let base = Self::octagon(n_phi, n_r)?;
        if self.n != 2 {
            return Err(Error::Dimension("translated domains are built from the octagon".into()));
        }
        let mut cells = Vec::with_capacity(base.cells.len() * translates.len());
        let mut lines = Vec::new();
        for g in translates {
            let off = cells.len();
            cells.extend(base.cells.iter().map(|(p, w)| (g.act(p), *w)));
            lines.extend(base.lines.iter().map(|r| r.start + off..r.end + off));
        }
        Ok(Self::assemble(
            2,
            cells,
            lines,
            DomainShape::Translates { n_phi, n_r, translates: translates.to_vec() },
        ))
    }

    fn resolution(&self) -> (usize, usize) {
        match &self.shape {
            DomainShape::Octagon { n_phi, n_r } | DomainShape::Translates { n_phi, n_r, .. } => (*n_phi, *n_r),
        }
    }

    /// The same domain at another per-triangle resolution.
    pub fn resampled(&self, n_phi: usize, n_r: usize) -> Result<Self> {
        match &self.shape {
            DomainShape::Octagon { .. } => Self::octagon(n_phi, n_r),
            DomainShape::Translates { translates, .. } => Self::octagon(n_phi, n_r)?.translated_union(translates),
        }
    }

    /// Half the Gauss points per direction.
    pub fn coarsened(&self) -> Result<Self> {
        let (a, b) = self.resolution();
        self.resampled((a / 2).max(1), (b / 2).max(1))
    }

    /// Twice the Gauss points per direction.
    pub fn refined(&self) -> Result<Self> {
        let (a, b) = self.resolution();
        self.resampled(2 * a, 2 * b)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn cells(&self) -> &[(HPoint, f64)] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn total_volume(&self) -> f64 {
        self.total_volume
    }

    pub fn lines(&self) -> &[std::ops::Range<usize>] {
        &self.lines
    }

    /// Integral of `f` over the domain with the cell weights.
    pub fn integrate<F: Fn(&HPoint) -> f64>(&self, f: F) -> f64 {
        let terms: Vec<f64> = self.cells.iter().map(|(p, w)| w * f(p)).collect();
        crate::measure::pairwise_sum(&terms)
    }
}

/// Index-2 subgroup given by a parity homomorphism to `Z/2`, with the
/// generators expressed as words in the parent group.
#[derive(Clone, Debug)]
pub struct Index2Subgroup {
    pub group: GroupPresentation,
    pub words: Vec<Word>,
    /// Coset representatives `{e, t}` as words.
    pub transversal: Vec<Word>,
}

fn parity_of(parity: &[u8], w: &[i32]) -> u8 {
    w.iter().map(|&l| parity[l.unsigned_abs() as usize - 1]).sum::<u8>() % 2
}

/// Reidemeister-Schreier on the two cosets of `ker(parity)`.
pub fn index2_subgroup(group: &GroupPresentation, parity: &[u8]) -> Result<Index2Subgroup> {
    if parity.len() != group.rank() || parity.iter().any(|&p| p > 1) {
        return Err(Error::Invalid("parity must assign 0 or 1 to every generator".into()));
    }
    for r in group.relators() {
        if parity_of(parity, r) != 0 {
            return Err(Error::Invalid(format!("parity is not a homomorphism: relator {r:?} is odd")));
        }
    }
    let Some(t) = parity.iter().position(|&p| p == 1) else {
        let words = (1..=group.rank() as i32).map(|k| vec![k]).collect();
        return Ok(Index2Subgroup { group: group.clone(), words, transversal: vec![vec![]] });
    };
    let t_letter = t as i32 + 1;
    let rep = |c: usize| -> Word { if c == 0 { vec![] } else { vec![t_letter] } };

    // Schreier generator for the edge (coset c, generator k), or None on the
    // spanning-tree edge.
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut words = Vec::new();
    for c in 0..2 {
        for k in 0..group.rank() {
            let target = (c + parity[k] as usize) % 2;
            if c == 0 && k == t {
                continue;
            }
            let mut w = rep(c);
            w.push(k as i32 + 1);
            w.extend(invert_word(&rep(target)));
            index.insert((c, k), words.len());
            words.push(reduce_word(&w));
        }
    }
    let mut relators = Vec::new();
    for r in group.relators() {
        for start in 0..2 {
            let mut c = start;
            let mut rw = Vec::new();
            for &l in r {
                let k = l.unsigned_abs() as usize - 1;
                if l > 0 {
                    if let Some(&i) = index.get(&(c, k)) {
                        rw.push(i as i32 + 1);
                    }
                    c = (c + parity[k] as usize) % 2;
                } else {
                    let from = (c + parity[k] as usize) % 2;
                    if let Some(&i) = index.get(&(from, k)) {
                        rw.push(-(i as i32 + 1));
                    }
                    c = from;
                }
            }
            relators.push(reduce_word(&rw));
        }
    }
    let gens = words.iter().map(|w| group.eval_word(w)).collect();
    let mut sub = GroupPresentation::new(gens, relators, format!("{}-cover-{}", group.label, coset_label(t)))?;
    if let Some(r) = group.domain_radius() {
        let shift = HPoint::origin(group.dim()).dist(&group.generators()[t].act(&HPoint::origin(group.dim())));
        sub = sub.with_domain_radius(r + shift);
    }
    Ok(Index2Subgroup { group: sub, words, transversal: vec![vec![], vec![t_letter]] })
}

fn coset_label(t: usize) -> String {
    let names = ["a1", "b1", "a2", "b2"];
    names.get(t).map(|s| s.to_string()).unwrap_or_else(|| format!("g{}", t + 1))
}

/// Presentation of the kernel of `parity`; `G` itself when parity is zero.
pub fn index2_cover(group: &GroupPresentation, parity: &[u8]) -> Result<GroupPresentation> {
    Ok(index2_subgroup(group, parity)?.group)
}

/// Built-in instances: `genus2` and `genus2-cover-a1`.
pub fn named_instance(name: &str, cells: usize) -> Result<(GroupPresentation, FundamentalDomain)> {
    let (g, _) = genus2_octagon()?;
    let dom = FundamentalDomain::octagon_with_cells(cells)?;
    match name {
        "genus2" => Ok((g, dom)),
        "genus2-cover-a1" => {
            let sub = index2_subgroup(&g, &[1, 0, 0, 0])?;
            let reps: Vec<HIsometry> = sub.transversal.iter().map(|w| g.eval_word(w)).collect();
            // Half the cells per sheet so the total matches the request.
            let per_sheet = FundamentalDomain::octagon_with_cells(cells / 2)?;
            Ok((sub.group, per_sheet.translated_union(&reps)?))
        }
        other => Err(Error::Invalid(format!("unknown group instance '{other}'"))),
    }
}

/// A uniformly random reduced word of length `len`.
pub fn random_word<R: rand::Rng + ?Sized>(rank: usize, len: usize, rng: &mut R) -> Word {
    let mut w: Word = Vec::with_capacity(len);
    while w.len() < len {
        let k = rng.gen_range(1..=rank as i32);
        let l = if rng.gen_bool(0.5) { k } else { -k };
        if w.last() != Some(&-l) {
            w.push(l);
        }
    }
    w
}

/// Angle sum check helper: total interior angle of the octagon vertex cycle.
pub fn octagon_angle_sum() -> f64 {
    let v = octagon_vertices();
    (0..8).map(|k| interior_angle(&v[k], &v[(k + 7) % 8], &v[(k + 1) % 8])).sum()
}
