use std::path::Path;

use natmap_core::barycenter::{barycenter, BarycenterOptions};
use natmap_core::cocycle::{BoundaryMapSpec, Cocycle};
use natmap_core::degree::degree_experiment;
use natmap_core::io::{read_json, CocycleConfig, CoveringConfig, MapConfig};
use natmap_core::lattice::named_instance;
use natmap_core::measure::ps_check;
use natmap_core::natural_map::{bcg_bound_audit, NaturalMapEvaluator};
use natmap_core::quadrature::default_nodes;
use natmap_core::volume::{natural_volume, rigidity_audit, volume, EquivariantMapSpec, ErrorEstimate, VolumeOptions};
use natmap_core::{BoundaryMeasure, Error, FundamentalDomain, GroupPresentation, HPoint, Result, SphereQuadrature};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::args::*;
use crate::output::{cells_csv, emit, report_json, scan_records};

pub struct Ctx {
    pub global: GlobalOpts,
}

impl Ctx {
    fn solver(&self) -> Result<BarycenterOptions> {
        if !(self.global.tol > 0.0) {
            return Err(Error::Invalid(format!("--tol must be positive, got {}", self.global.tol)));
        }
        Ok(BarycenterOptions { tol: self.global.tol, max_iter: self.global.max_iter })
    }

    fn quadrature(&self, n: usize) -> Result<SphereQuadrature> {
        SphereQuadrature::new(n, self.global.quad_order.unwrap_or_else(|| default_nodes(n)))
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.global.seed)
    }

    fn json_only(&self, what: &str) -> Result<()> {
        if self.global.format == Format::Csv {
            return Err(Error::Invalid(format!("{what} has no csv output")));
        }
        Ok(())
    }

    pub fn write<C: Serialize, T: Serialize>(&self, command: &str, inputs: &C, result: &T) -> Result<()> {
        #[derive(Serialize)]
        struct Config<'a, C: Serialize> {
            options: &'a GlobalOpts,
            inputs: &'a C,
        }
        let text = report_json(command, self.global.seed, &Config { options: &self.global, inputs }, result)?;
        emit(self.global.out.as_deref(), &text)
    }

    fn evaluator(&self, sigma: Cocycle, phi: BoundaryMapSpec) -> Result<NaturalMapEvaluator> {
        let quad = self.quadrature(phi.n())?;
        NaturalMapEvaluator::new(sigma, phi, quad, self.solver()?)
    }
}

fn load_cocycle(path: Option<&Path>) -> Result<CocycleConfig> {
    match path {
        Some(p) => read_json(p),
        None => Ok(CocycleConfig::default()),
    }
}

fn instance(d: &DomainArgs) -> Result<(GroupPresentation, FundamentalDomain)> {
    named_instance(&d.domain, d.cells)
}

fn volume_options(ctx: &Ctx, o: &VolumeOpts) -> VolumeOptions {
    VolumeOptions {
        p: o.p,
        error: match o.error {
            ErrorMode::Full => ErrorEstimate::Full,
            ErrorMode::DomainOnly => ErrorEstimate::DomainOnly,
            ErrorMode::Floor => ErrorEstimate::Floor,
        },
        equivariance_samples: o.equivariance_samples,
        seed: ctx.global.seed,
        keep_cells: ctx.global.dump_cells.is_some() || ctx.global.format == Format::Csv,
    }
}

pub fn barycenter_cmd(ctx: &Ctx, a: &BarycenterArgs) -> Result<()> {
    ctx.json_only("barycenter")?;
    let nu: BoundaryMeasure = read_json(&a.measure)?;
    let r = barycenter(&nu, &ctx.solver()?)?;
    ctx.write("barycenter", &serde_json::json!({ "measure": nu }), &r)
}

pub fn ps_check_cmd(ctx: &Ctx, a: &PsCheckArgs) -> Result<()> {
    ctx.json_only("ps-check")?;
    let quad = ctx.quadrature(a.dim)?;
    let group = match a.domain.as_deref() {
        None => None,
        Some(name) => Some(named_instance(name, 64)?.0),
    };
    let basepoints = [HPoint::origin(a.dim)];
    let r = ps_check(&quad, a.pairs, 2.0, group.as_ref(), a.s, a.radius, &basepoints, a.bins, &mut ctx.rng())?;
    ctx.write("ps-check", a, &r)
}

#[derive(Serialize)]
struct EvalReport {
    a: HPoint,
    x: usize,
    point: HPoint,
    residual: f64,
    iterations: usize,
    jacobian: f64,
    singular_values: Vec<f64>,
    isometric_embedding: bool,
    trace_hp: f64,
    audit: natmap_core::natural_map::BcgAudit,
}

pub fn eval_cmd(ctx: &Ctx, a: &EvalArgs) -> Result<()> {
    ctx.json_only("natmap eval")?;
    let cfg = load_cocycle(a.cocycle.as_deref())?;
    let (group, _) = instance(&a.domain)?;
    let (sigma, phi) = cfg.build(&group)?;
    if a.x >= sigma.space().len() {
        return Err(Error::Invalid(format!("x = {} outside X of size {}", a.x, sigma.space().len())));
    }
    let ev = ctx.evaluator(sigma, phi)?;
    let point = if a.ball.is_empty() { HPoint::origin(ev.n()) } else { HPoint::from_ball(&a.ball)? };
    if point.dim() != ev.n() {
        return Err(Error::Dimension(format!("--ball needs {} coordinates", ev.n())));
    }
    let p = a.p.unwrap_or(ev.n());
    let r = ev.eval(&point, a.x)?;
    let d = ev.differential(&point, a.x)?;
    let audit = bcg_bound_audit(&d, ev.delta(), p, 1000, &mut ctx.rng())?;
    let report = EvalReport {
        a: point,
        x: a.x,
        point: r.point,
        residual: r.residual,
        iterations: r.iterations,
        jacobian: d.jacobian(p)?,
        singular_values: d.singular_values(),
        isometric_embedding: d.is_isometric_embedding(),
        trace_hp: d.hp.trace(),
        audit,
    };
    ctx.write("natmap eval", &serde_json::json!({ "args": a, "cocycle": cfg }), &report)
}

pub fn scan_cmd(ctx: &Ctx, a: &ScanArgs) -> Result<()> {
    let cfg = load_cocycle(a.cocycle.as_deref())?;
    let (group, dom) = instance(&a.domain)?;
    let (sigma, phi) = cfg.build(&group)?;
    let map = EquivariantMapSpec::Natural(ctx.evaluator(sigma, phi)?);
    let rows = map.scan(&dom, a.p.unwrap_or(map.n()))?;
    let cells: Vec<Vec<f64>> = dom.cells().iter().map(|c| c.0.coords().to_vec()).collect();
    if ctx.global.format == Format::Csv {
        return emit(ctx.global.out.as_deref(), &cells_csv(&scan_records(&cells, &rows))?);
    }
    let failed = rows.iter().flatten().filter(|s| s.is_none()).count();
    let records = scan_records(&cells, &rows);
    ctx.write(
        "jacobian-scan",
        &serde_json::json!({ "args": a, "cocycle": cfg }),
        &serde_json::json!({ "failed": failed, "records": records }),
    )
}

fn dump_cells(ctx: &Ctx, records: &[natmap_core::volume::CellRecord]) -> Result<bool> {
    let csv = || cells_csv(records);
    if let Some(p) = &ctx.global.dump_cells {
        std::fs::write(p, csv()?)?;
    }
    if ctx.global.format == Format::Csv {
        emit(ctx.global.out.as_deref(), &csv()?)?;
        return Ok(true);
    }
    Ok(false)
}

pub fn volume_cmd(ctx: &Ctx, a: &VolumeArgs) -> Result<()> {
    let cfg: MapConfig = read_json(&a.map)?;
    let (group, dom) = instance(&a.opts.domain)?;
    let map = cfg.build(&group, |s, p| ctx.evaluator(s, p))?;
    let r = volume(&map, &dom, &volume_options(ctx, &a.opts))?;
    if dump_cells(ctx, &r.records)? {
        return Ok(());
    }
    ctx.write("volume", &serde_json::json!({ "args": a, "map": cfg }), &r)
}

pub fn natural_volume_cmd(ctx: &Ctx, a: &NaturalVolumeArgs) -> Result<()> {
    let cfg = load_cocycle(a.cocycle.as_deref())?;
    let (group, dom) = instance(&a.opts.domain)?;
    let (sigma, phi) = cfg.build(&group)?;
    let (r, ev) = natural_volume(ctx.evaluator(sigma, phi)?, &dom, &volume_options(ctx, &a.opts))?;
    if dump_cells(ctx, &r.records)? {
        return Ok(());
    }
    let rigidity = if a.rigidity_samples > 0 { Some(rigidity_audit(&r, &ev, &dom, a.rigidity_samples)?) } else { None };
    #[derive(Serialize)]
    struct Out<'a> {
        volume: &'a natmap_core::volume::VolumeReport,
        #[serde(skip_serializing_if = "Option::is_none")]
        rigidity: Option<natmap_core::volume::RigidityReport>,
    }
    ctx.write(
        "natural-volume",
        &serde_json::json!({ "args": a, "cocycle": cfg }),
        &Out { volume: &r, rigidity },
    )
}

pub fn degree_cmd(ctx: &Ctx, a: &DegreeArgs) -> Result<()> {
    ctx.json_only("degree")?;
    let cover: CoveringConfig = read_json(&a.covering)?;
    let cfg = load_cocycle(a.cocycle.as_deref())?;
    let (group, dom) = instance(&a.opts.domain)?;
    let f = cover.build(group, dom)?;
    let (sigma, phi) = cfg.build(&f.target)?;
    let mut opts = volume_options(ctx, &a.opts);
    opts.keep_cells = false;
    let r = degree_experiment(&f, ctx.evaluator(sigma, phi)?, &opts)?;
    ctx.write("degree", &serde_json::json!({ "args": a, "covering": cover, "cocycle": cfg }), &r)
}
