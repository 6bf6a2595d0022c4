use std::f64::consts::PI;

use natmap_core::barycenter::{barycenter, BarycenterOptions};
use natmap_core::cocycle::{check_equivariance, random_twist, standard_cocycle, twist, twist_boundary, BoundaryMapSpec, FiniteProbSpace};
use natmap_core::hyperboloid::busemann;
use natmap_core::lattice::{genus2_octagon, octagon_angle_sum};
use natmap_core::measure::{density_ratio_defect, visual_measure};
use natmap_core::natural_map::NaturalMapEvaluator;
use natmap_core::volume::{natural_volume, ErrorEstimate, VolumeOptions};
use natmap_core::{BoundaryMeasure, FundamentalDomain, HBoundaryPoint, HIsometry, HPoint, Result, SphereQuadrature};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

fn below(name: &'static str, value: f64, threshold: f64) -> Check {
    Check { name, value, threshold, pass: value < threshold }
}

/// Small-scale versions of the invariants, a few seconds in total.
pub fn run(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let opts = BarycenterOptions::default();

    let q2 = SphereQuadrature::new(2, 512)?;
    let o2 = HPoint::origin(2);
    let round = barycenter(&visual_measure(&o2, &q2)?, &opts)?;
    out.push(below("barycenter_of_round_measure", round.point.dist(&o2), 1e-10));

    let atoms = (0..3)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / 3.0;
            Ok((HBoundaryPoint::from_direction(&[t.cos(), t.sin()])?, 1.0 / 3.0))
        })
        .collect::<Result<Vec<_>>>()?;
    let tri = barycenter(&BoundaryMeasure::new(atoms)?, &opts)?;
    out.push(below("barycenter_of_three_symmetric_atoms", tri.point.dist(&o2), 1e-10));

    let mut worst_eqv: f64 = 0.0;
    let mut worst_res: f64 = 0.0;
    for _ in 0..20 {
        let atoms = (0..5)
            .map(|_| {
                let s = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                Ok((HBoundaryPoint::from_direction(&s)?, rng.gen_range(0.5..1.0)))
            })
            .collect::<Result<Vec<_>>>()?;
        let nu = BoundaryMeasure::new(atoms)?.normalize();
        if !nu.is_admissible() {
            continue;
        }
        let g = HIsometry::random(3, 1.0, &mut rng);
        let moved = natmap_core::measure::pushforward(&nu, |xi| Ok(g.act_boundary(xi)))?;
        let (b, gb) = (barycenter(&nu, &opts)?, barycenter(&moved, &opts)?);
        worst_eqv = worst_eqv.max(g.act(&b.point).dist(&gb.point));
        worst_res = worst_res.max(b.residual);
    }
    out.push(below("barycenter_residual", worst_res, 1e-10));
    out.push(below("barycenter_equivariance", worst_eqv, 1e-7));

    let mut cocycle_defect: f64 = 0.0;
    for _ in 0..50 {
        let [a, b, c] = [(); 3].map(|_| HIsometry::random(3, 2.0, &mut rng).act(&HPoint::origin(3)));
        let xi = HBoundaryPoint::from_direction(&[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.5])?;
        cocycle_defect = cocycle_defect.max((busemann(&b, &a, &xi) - (busemann(&c, &a, &xi) - busemann(&c, &b, &xi))).abs());
    }
    out.push(below("busemann_cocycle_identity", cocycle_defect, 1e-10));

    let a = HIsometry::random(2, 1.5, &mut rng).act(&o2);
    let b = HIsometry::random(2, 1.5, &mut rng).act(&o2);
    out.push(below("density_ratio_identity", density_ratio_defect(&a, &b, &q2)?, 1e-9));

    let (g, _) = genus2_octagon()?;
    let relator = g.relators().iter().map(|r| g.relator_defect(r)).fold(0.0, f64::max);
    out.push(below("genus2_relator", relator, 1e-8));
    out.push(below("genus2_angle_sum", (octagon_angle_sum() - 2.0 * PI).abs(), 1e-8));
    let dom = FundamentalDomain::octagon_with_cells(256)?;
    out.push(below("genus2_area", (dom.total_volume() - 4.0 * PI).abs(), 1e-3));

    let x = FiniteProbSpace::uniform(4, g.rank())?;
    let sigma = standard_cocycle(&g, 3, &x)?;
    let phi = BoundaryMapSpec::standard(2, 3)?;
    out.push(below("cocycle_identity", sigma.identity_defect(100, 3, &mut rng), 1e-9));
    let f = random_twist(3, 4, 1.0, &mut rng);
    let (st, pt) = (twist(&sigma, &f)?, twist_boundary(&phi, &f)?);
    out.push(below("twisted_boundary_equivariance", check_equivariance(&st, &pt, 50, &mut rng)?.max_deviation, 1e-9));

    let ev = NaturalMapEvaluator::new(sigma, phi, q2.clone(), opts)?;
    let a = HPoint::from_polar(&[0.6, 0.8], 0.7)?;
    out.push(below("standard_jacobian", (ev.jacobian(&a, 0, None)? - 1.0).abs(), 1e-6));
    let vopts = VolumeOptions { error: ErrorEstimate::DomainOnly, equivariance_samples: 4, seed, ..Default::default() };
    let (r, _) = natural_volume(ev, &dom, &vopts)?;
    out.push(below("standard_natural_volume", (r.volume - 4.0 * PI).abs(), 2e-3));
    // Distance to 4 pi in units of the error estimate; maximal below 3.
    out.push(below("standard_verdict_maximal", (r.domain_volume - r.volume).abs() / r.error_estimate, 3.0));
    Ok(out)
}
