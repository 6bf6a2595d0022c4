//! Coverings `f: M -> N` of closed hyperbolic manifolds, pullbacks of cocycles
//! and maps along `pi_1(f)`, and the degree bound by natural volumes.
//!
//! Only coverings are instantiated, so the lift `H^n -> H^n` is the identity
//! and the number of preimages of a point is the degree.

use serde::Serialize;

use crate::cocycle::Cocycle;
use crate::error::{Error, Result};
use crate::hyperboloid::HIsometry;
use crate::lattice::{index2_subgroup, FundamentalDomain, GroupPresentation, Word, RELATOR_TOL};
use crate::natural_map::NaturalMapEvaluator;
use crate::volume::{natural_volume, EquivariantMapSpec, VolumeOptions, VolumeReport, Verdict};

/// Relative tolerance on `vol(M) = deg vol(N)`.
pub const COVER_VOLUME_TOL: f64 = 2e-3;

#[derive(Clone, Debug)]
pub struct CoveringMap {
    pub source: GroupPresentation,
    pub source_domain: FundamentalDomain,
    pub target: GroupPresentation,
    pub target_domain: FundamentalDomain,
    /// Generator `k` of the source as a word in the target generators.
    pub words: Vec<Word>,
    pub degree: usize,
}

impl CoveringMap {
    pub fn new(
        source: GroupPresentation,
        source_domain: FundamentalDomain,
        target: GroupPresentation,
        target_domain: FundamentalDomain,
        words: Vec<Word>,
        degree: usize,
    ) -> Result<Self> {
        if words.len() != source.rank() {
            return Err(Error::Invalid(format!("{} inclusion words for {} generators", words.len(), source.rank())));
        }
        if degree == 0 {
            return Err(Error::Invalid("covering degree must be positive".into()));
        }
        for (k, w) in words.iter().enumerate() {
            let img = target.try_eval_word(w)?;
            let g = &source.generators()[k];
            let d = img.max_abs_diff(g) / g.matrix().amax().max(1.0);
            if d > RELATOR_TOL {
                return Err(Error::Relator(format!("word {w:?} does not evaluate to source generator {k} ({d:e})")));
            }
        }
        for r in source.relators() {
            let image = compose_words(&words, r);
            let d = target.relator_defect(&image);
            if d > RELATOR_TOL {
                return Err(Error::Relator(format!("image of relator {r:?} is not trivial ({d:e})")));
            }
        }
        let (vm, vn) = (source_domain.total_volume(), target_domain.total_volume());
        if (vm - degree as f64 * vn).abs() > COVER_VOLUME_TOL * vm {
            return Err(Error::Invalid(format!("domain volumes {vm} and {vn} do not match degree {degree}")));
        }
        Ok(Self { source, source_domain, target, target_domain, words, degree })
    }

    pub fn identity(group: GroupPresentation, dom: FundamentalDomain) -> Result<Self> {
        let words = (1..=group.rank() as i32).map(|k| vec![k]).collect();
        Self::new(group.clone(), dom.clone(), group, dom, words, 1)
    }

    /// The double cover given by the kernel of `parity`, with domain `D u t D`.
    pub fn index2(group: GroupPresentation, dom: FundamentalDomain, parity: &[u8]) -> Result<Self> {
        let sub = index2_subgroup(&group, parity)?;
        let reps: Vec<HIsometry> = sub.transversal.iter().map(|w| group.eval_word(w)).collect();
        let degree = reps.len();
        let source_domain = dom.translated_union(&reps)?;
        Self::new(sub.group, source_domain, group, dom, sub.words, degree)
    }

    /// `pi_1(f)` applied to a source word.
    pub fn image_word(&self, w: &[i32]) -> Word {
        compose_words(&self.words, w)
    }
}

fn compose_words(words: &[Word], w: &[i32]) -> Word {
    let mut out = Vec::new();
    for &l in w {
        let img = &words[l.unsigned_abs() as usize - 1];
        if l > 0 {
            out.extend_from_slice(img);
        } else {
            out.extend(img.iter().rev().map(|v| -v));
        }
    }
    out
}

/// `f^* sigma(g, x) = sigma(pi_1(f)(g), x)`, with `X` a source space through `pi_1(f)`.
pub fn pullback_cocycle(f: &CoveringMap, sigma: &Cocycle) -> Result<Cocycle> {
    if sigma.group().rank() != f.target.rank() {
        return Err(Error::Invalid("cocycle is not defined over the covering target".into()));
    }
    let space = sigma.space().induced(&f.words)?;
    let table = f
        .words
        .iter()
        .map(|w| (0..space.len()).map(|x| sigma.eval(w, x)).collect())
        .collect();
    Cocycle::new(f.source.clone(), space, table)
}

/// `f^* Phi(a, x) = Phi(a, x)`, equivariant for `f^* sigma`.
pub fn pullback_map(f: &CoveringMap, map: &EquivariantMapSpec) -> Result<EquivariantMapSpec> {
    match map {
        EquivariantMapSpec::Natural(ev) => {
            let sigma = pullback_cocycle(f, ev.cocycle())?;
            Ok(EquivariantMapSpec::Natural(NaturalMapEvaluator::new(
                sigma,
                ev.boundary().clone(),
                ev.quadrature().clone(),
                *ev.options(),
            )?))
        }
        EquivariantMapSpec::Composition { sigma, pre, post } => {
            EquivariantMapSpec::composition(pullback_cocycle(f, sigma)?, pre.clone(), post.clone())
        }
        EquivariantMapSpec::PostComposed { inner, g } => EquivariantMapSpec::post_composed(pullback_map(f, inner)?, g.clone()),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DegreeReport {
    pub degree: usize,
    /// Preimage count of a point; equal to the degree for coverings.
    pub preimages: usize,
    pub source_volume: f64,
    pub target_volume: f64,
    pub nv_source: f64,
    pub nv_target: f64,
    /// `nv(f^* sigma) / nv(sigma)`.
    pub ratio: f64,
    pub source_verdict: Verdict,
    pub target_verdict: Verdict,
    pub source: VolumeReport,
    pub target: VolumeReport,
}

/// Natural volumes of `sigma` over the target and of `f^* sigma` over the source.
pub fn degree_experiment(f: &CoveringMap, ev: NaturalMapEvaluator, opts: &VolumeOptions) -> Result<DegreeReport> {
    let map = EquivariantMapSpec::Natural(ev);
    let EquivariantMapSpec::Natural(pulled) = pullback_map(f, &map)? else { unreachable!() };
    let EquivariantMapSpec::Natural(ev) = map else { unreachable!() };
    let (target, _) = natural_volume(ev, &f.target_domain, opts)?;
    let (source, _) = natural_volume(pulled, &f.source_domain, opts)?;
    if !(target.volume > 0.0) {
        return Err(Error::DegenerateSupport("target natural volume vanishes".into()));
    }
    Ok(DegreeReport {
        degree: f.degree,
        preimages: f.degree,
        source_volume: f.source_domain.total_volume(),
        target_volume: f.target_domain.total_volume(),
        nv_source: source.volume,
        nv_target: target.volume,
        ratio: source.volume / target.volume,
        source_verdict: source.verdict,
        target_verdict: target.verdict,
        source,
        target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barycenter::BarycenterOptions;
    use crate::cocycle::{random_twist, standard_cocycle, twist, BoundaryMapSpec, FiniteProbSpace};
    use crate::hyperboloid::{corner_inject, HPoint};
    use crate::lattice::genus2_octagon;
    use crate::quadrature::SphereQuadrature;
    use crate::volume::ErrorEstimate;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cover() -> (CoveringMap, Cocycle) {
        let (g, _) = genus2_octagon().unwrap();
        let dom = FundamentalDomain::octagon(4, 4).unwrap();
        let f = CoveringMap::index2(g.clone(), dom, &[1, 0, 0, 0]).unwrap();
        let x = FiniteProbSpace::uniform(4, 4).unwrap();
        (f, standard_cocycle(&g, 3, &x).unwrap())
    }

    #[test]
    fn identity_pullback_is_the_same_cocycle() {
        let (g, dom) = genus2_octagon().unwrap();
        let f = CoveringMap::identity(g.clone(), dom).unwrap();
        let x = FiniteProbSpace::uniform(3, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sigma = twist(&standard_cocycle(&g, 3, &x).unwrap(), &random_twist(3, 3, 1.0, &mut rng)).unwrap();
        let p = pullback_cocycle(&f, &sigma).unwrap();
        for k in 0..4 {
            for x in 0..3 {
                assert_eq!(p.generator_value(k, x), sigma.generator_value(k, x));
            }
        }
    }

    #[test]
    fn double_cover_pullback() {
        let (f, sigma) = cover();
        assert_eq!(f.degree, 2);
        assert_eq!(f.source.rank(), 7);
        let p = pullback_cocycle(&f, &sigma).unwrap();
        for k in 0..7 {
            let direct = corner_inject(&f.source.generators()[k], 3).unwrap();
            let scale = direct.matrix().amax();
            assert!(p.generator_value(k, 1).max_abs_diff(&direct) < 1e-10 * scale);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(p.identity_defect(100, 3, &mut rng) < 1e-9);
        // Volumes: 8 pi and 4 pi.
        assert!((f.source_domain.total_volume() - 8.0 * std::f64::consts::PI).abs() < 4e-3);
    }

    #[test]
    fn pulled_back_map_is_equivariant_and_natural() {
        let (f, sigma) = cover();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tw = random_twist(3, 4, 0.8, &mut rng);
        let s = twist(&sigma, &tw).unwrap();
        let phi = crate::cocycle::twist_boundary(&BoundaryMapSpec::standard(2, 3).unwrap(), &tw).unwrap();
        let quad = SphereQuadrature::new(2, 1024).unwrap();
        let ev = NaturalMapEvaluator::new(s.clone(), phi.clone(), quad.clone(), BarycenterOptions::default()).unwrap();
        let map = EquivariantMapSpec::Natural(ev);
        let pulled = pullback_map(&f, &map).unwrap();
        assert!(pulled.equivariance_deviation(10, &mut rng).unwrap() < 1e-7);
        let direct = NaturalMapEvaluator::new(pullback_cocycle(&f, &s).unwrap(), phi, quad, BarycenterOptions::default()).unwrap();
        for _ in 0..5 {
            let a = HPoint::from_polar(&[rng.gen_range(-1.0..1.0), 0.3], rng.gen_range(0.0..1.0)).unwrap();
            let x = rng.gen_range(0..4);
            let lhs = pulled.point(&a, x).unwrap();
            let rhs = map.point(&a, x).unwrap();
            assert!(lhs.dist(&rhs) < 1e-8);
            assert!(lhs.dist(&direct.eval(&a, x).unwrap().point) < 1e-8);
        }
    }

    #[test]
    fn degree_ratio_for_the_standard_cocycle() {
        let (f, sigma) = cover();
        let ev = NaturalMapEvaluator::new(
            sigma,
            BoundaryMapSpec::standard(2, 3).unwrap(),
            SphereQuadrature::new(2, 512).unwrap(),
            BarycenterOptions::default(),
        )
        .unwrap();
        let opts = VolumeOptions { error: ErrorEstimate::DomainOnly, equivariance_samples: 4, ..Default::default() };
        let r = degree_experiment(&f, ev, &opts).unwrap();
        assert!((r.ratio - 2.0).abs() < 1e-3);
        assert_eq!(r.source_verdict, Verdict::Maximal);
        assert_eq!(r.target_verdict, Verdict::Maximal);
    }

    #[test]
    fn bad_inclusion_is_rejected() {
        let (g, dom) = genus2_octagon().unwrap();
        let words = vec![vec![1], vec![2], vec![3], vec![3]];
        assert!(CoveringMap::new(g.clone(), dom.clone(), g, dom, words, 1).is_err());
    }
}
