//! JSON configuration schemas. Every file carries `"v": "v1"`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cocycle::{
    random_twist, rep_cocycle, standard_cocycle, twist, twist_boundary, BoundaryMapSpec, BoundaryPrimitive, Cocycle,
    FiniteProbSpace, DEFAULT_SPACE_SIZE,
};
use crate::degree::CoveringMap;
use crate::error::{Error, Result};
use crate::hyperboloid::HIsometry;
use crate::lattice::{FundamentalDomain, GroupPresentation};
use crate::volume::EquivariantMapSpec;

pub const SCHEMA_VERSION: &str = "v1";

fn v1() -> String {
    SCHEMA_VERSION.to_string()
}

fn check_version(v: &str) -> Result<()> {
    if v != SCHEMA_VERSION {
        return Err(Error::Invalid(format!("unsupported schema version '{v}', expected '{SCHEMA_VERSION}'")));
    }
    Ok(())
}

/// Reads and validates a JSON file.
pub fn read_json<T: for<'de> Deserialize<'de>>(path: &std::path::Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    #[serde(default = "default_size")]
    pub size: usize,
    /// Uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// Trivial when absent; otherwise one permutation per generator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<Vec<Vec<usize>>>,
}

fn default_size() -> usize {
    DEFAULT_SPACE_SIZE
}

impl Default for SpaceConfig {
    fn default() -> Self {
        Self { size: DEFAULT_SPACE_SIZE, weights: None, action: None }
    }
}

impl SpaceConfig {
    pub fn build(&self, group: &GroupPresentation) -> Result<FiniteProbSpace> {
        let space = match (&self.weights, &self.action) {
            (None, None) => FiniteProbSpace::uniform(self.size, group.rank())?,
            (w, a) => {
                let weights = w.clone().unwrap_or_else(|| vec![1.0 / self.size as f64; self.size]);
                let action = a.clone().unwrap_or_else(|| vec![(0..weights.len()).collect(); group.rank()]);
                FiniteProbSpace::new(weights, action)?
            }
        };
        space.check_relators(group)?;
        Ok(space)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleConfig {
    /// The lattice embedding composed with `j_{n,m}`.
    Standard,
    /// Images of the generators.
    Representation(Vec<HIsometry>),
    /// `rule[k][x] = sigma(g_k, x)`.
    Rule(Vec<Vec<HIsometry>>),
}

impl Default for RuleConfig {
    fn default() -> Self {
        Self::Standard
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwistConfig {
    Matrices(Vec<HIsometry>),
    Random { seed: u64, max_dist: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryConfig {
    Standard,
    Squash {
        kappa: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pole: Option<Vec<f64>>,
    },
    Chains(Vec<Vec<BoundaryPrimitive>>),
}

impl Default for BoundaryConfig {
    fn default() -> Self {
        Self::Standard
    }
}

/// A cocycle over the lattice together with a boundary map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CocycleConfig {
    #[serde(default = "v1")]
    pub v: String,
    #[serde(default)]
    pub space: SpaceConfig,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default)]
    pub cocycle: RuleConfig,
    /// Applied to both the cocycle and the boundary map.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twist: Option<TwistConfig>,
    #[serde(default)]
    pub boundary: BoundaryConfig,
}

fn default_m() -> usize {
    3
}

impl Default for CocycleConfig {
    fn default() -> Self {
        Self {
            v: v1(),
            space: SpaceConfig::default(),
            m: default_m(),
            cocycle: RuleConfig::Standard,
            twist: None,
            boundary: BoundaryConfig::Standard,
        }
    }
}

impl CocycleConfig {
    pub fn build(&self, group: &GroupPresentation) -> Result<(Cocycle, BoundaryMapSpec)> {
        check_version(&self.v)?;
        let n = group.dim();
        let space = self.space.build(group)?;
        let sigma = match &self.cocycle {
            RuleConfig::Standard => standard_cocycle(group, self.m, &space)?,
            RuleConfig::Representation(rho) => rep_cocycle(group, rho, &space)?,
            RuleConfig::Rule(table) => Cocycle::new(group.clone(), space.clone(), table.clone())?,
        };
        if sigma.m() != self.m {
            return Err(Error::Dimension(format!("cocycle acts on H^{} but m = {}", sigma.m(), self.m)));
        }
        let phi = match &self.boundary {
            BoundaryConfig::Standard => BoundaryMapSpec::standard(n, self.m)?,
            BoundaryConfig::Squash { kappa, pole } => {
                let pole = pole.clone().unwrap_or_else(|| BoundaryMapSpec::default_pole(self.m));
                BoundaryMapSpec::squashed(n, self.m, *kappa, pole)?
            }
            BoundaryConfig::Chains(chains) => BoundaryMapSpec::new(n, chains.clone())?,
        };
        phi.check_space(space.len())?;
        match &self.twist {
            None => Ok((sigma, phi)),
            Some(t) => {
                let f = match t {
                    TwistConfig::Matrices(f) => f.clone(),
                    TwistConfig::Random { seed, max_dist } => {
                        random_twist(self.m, space.len(), *max_dist, &mut ChaCha8Rng::seed_from_u64(*seed))
                    }
                };
                Ok((twist(&sigma, &f)?, twist_boundary(&phi, &f)?))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Natural,
    Composition {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pre: Option<HIsometry>,
        post: Vec<HIsometry>,
    },
}

/// An equivariant map for the `volume` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    #[serde(default = "v1")]
    pub v: String,
    pub cocycle: CocycleConfig,
    pub map: MapKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_compose: Option<HIsometry>,
}

impl MapConfig {
    /// `natural` builds the evaluator through `make`.
    pub fn build<F>(&self, group: &GroupPresentation, make: F) -> Result<EquivariantMapSpec>
    where
        F: FnOnce(Cocycle, BoundaryMapSpec) -> Result<crate::natural_map::NaturalMapEvaluator>,
    {
        check_version(&self.v)?;
        let (sigma, phi) = self.cocycle.build(group)?;
        let map = match &self.map {
            MapKind::Natural => EquivariantMapSpec::Natural(make(sigma, phi)?),
            MapKind::Composition { pre, post } => {
                let pre = pre.clone().unwrap_or_else(|| HIsometry::identity(group.dim()));
                EquivariantMapSpec::composition(sigma, pre, post.clone())?
            }
        };
        match &self.post_compose {
            None => Ok(map),
            Some(g) => EquivariantMapSpec::post_composed(map, g.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoveringKind {
    Identity,
    /// Kernel of the parity homomorphism to `Z/2`.
    Index2 { parity: Vec<u8> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveringConfig {
    #[serde(default = "v1")]
    pub v: String,
    pub covering: CoveringKind,
}

impl CoveringConfig {
    pub fn build(&self, group: GroupPresentation, dom: FundamentalDomain) -> Result<CoveringMap> {
        check_version(&self.v)?;
        match &self.covering {
            CoveringKind::Identity => CoveringMap::identity(group, dom),
            CoveringKind::Index2 { parity } => CoveringMap::index2(group, dom, parity),
        }
    }
}

/// Errors if a serialized report contains `null`, which is how non-finite
/// floats come out of `serde_json`. Reports never serialize absent options.
pub fn ensure_finite(value: &serde_json::Value) -> Result<()> {
    fn walk(v: &serde_json::Value, path: &mut String) -> std::result::Result<(), String> {
        match v {
            serde_json::Value::Null => Err(path.clone()),
            serde_json::Value::Array(a) => {
                for (i, x) in a.iter().enumerate() {
                    let len = path.len();
                    path.push_str(&format!("[{i}]"));
                    walk(x, path)?;
                    path.truncate(len);
                }
                Ok(())
            }
            serde_json::Value::Object(o) => {
                for (k, x) in o {
                    let len = path.len();
                    path.push('.');
                    path.push_str(k);
                    walk(x, path)?;
                    path.truncate(len);
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
    walk(value, &mut String::new()).map_err(|p| Error::NonFinite(format!("at {p}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::genus2_octagon;

    #[test]
    fn default_config_is_the_standard_cocycle() {
        let (g, _) = genus2_octagon().unwrap();
        let cfg: CocycleConfig = serde_json::from_str(r#"{"v": "v1"}"#).unwrap();
        let (sigma, phi) = cfg.build(&g).unwrap();
        assert!(sigma.is_representation());
        assert_eq!(sigma.space().len(), 16);
        assert_eq!(phi.m(), 3);
    }

    #[test]
    fn squash_and_twist_configs() {
        let (g, _) = genus2_octagon().unwrap();
        let text = r#"{"v":"v1","space":{"size":4},"twist":{"random":{"seed":7,"max_dist":1.0}},"boundary":{"squash":{"kappa":1.5}}}"#;
        let cfg: CocycleConfig = serde_json::from_str(text).unwrap();
        let (sigma, phi) = cfg.build(&g).unwrap();
        assert!(!sigma.is_representation());
        assert_eq!(phi.chain_count(), 4);
        let back: CocycleConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_versions_and_fields() {
        let (g, _) = genus2_octagon().unwrap();
        let cfg: CocycleConfig = serde_json::from_str(r#"{"v":"v2"}"#).unwrap();
        assert!(cfg.build(&g).is_err());
        assert!(serde_json::from_str::<CocycleConfig>(r#"{"v":"v1","bogus":1}"#).is_err());
    }

    #[test]
    fn null_detection() {
        let v = serde_json::json!({"a": [1.0, {"b": null}]});
        assert!(ensure_finite(&v).is_err());
        assert!(ensure_finite(&serde_json::json!({"a": 1})).is_ok());
    }
}
