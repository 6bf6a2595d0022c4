//! Shared fixtures for the benchmarks.

use natmap_core::barycenter::BarycenterOptions;
use natmap_core::cocycle::{standard_cocycle, BoundaryMapSpec, FiniteProbSpace};
use natmap_core::lattice::genus2_octagon;
use natmap_core::natural_map::NaturalMapEvaluator;
use natmap_core::{FundamentalDomain, Result, SphereQuadrature};

/// Natural map of the standard genus-2 cocycle with `space` points in X.
pub fn standard_evaluator(space: usize, nodes: usize) -> Result<NaturalMapEvaluator> {
    let (g, _) = genus2_octagon()?;
    let x = FiniteProbSpace::uniform(space, g.rank())?;
    let sigma = standard_cocycle(&g, 3, &x)?;
    NaturalMapEvaluator::new(sigma, BoundaryMapSpec::standard(2, 3)?, SphereQuadrature::new(2, nodes)?, BarycenterOptions::default())
}

pub fn octagon(cells: usize) -> Result<FundamentalDomain> {
    FundamentalDomain::octagon_with_cells(cells)
}
