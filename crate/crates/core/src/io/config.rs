//! TOML experiment configs: a scene description plus a phantom.
//!
//! ```toml
//! [scene]
//! layout = "ring"
//! n_tx = 8
//! blind_deg = 30.0
//! rx_step_deg = 3.0
//! radius = 3.0
//! doi_half = 0.5
//! n_grid = 32
//! frequencies = [3.0e8]
//!
//! [phantom]
//! austria = { eps_r = 6.0 }
//!
//! [[phantom.shapes]]
//! kind = "disk"
//! center = [0.0, 0.0]
//! radius = 0.1
//! eps_r = 2.0
//! ```
//!
//! `layout = "explicit"` takes the raw scene fields instead (`doi_min`,
//! `doi_max`, `n_grid`, `tx_positions`, `rx_positions`, `frequencies`,
//! `obs_radius`). Unknown keys are errors.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::read_text;
use crate::error::{Error, Result};
use crate::geometry::{build_fresnel_like_scene, Phantom, Scene, Shape};
use crate::net::NetConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingSpec {
    pub n_tx: usize,
    #[serde(default)]
    pub blind_deg: f64,
    pub rx_step_deg: f64,
    pub radius: f64,
    pub doi_half: f64,
    pub n_grid: usize,
    pub frequencies: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "lowercase")]
pub enum SceneSpec {
    Ring(RingSpec),
    Explicit(Scene),
}

impl SceneSpec {
    pub fn build(&self) -> Result<Scene> {
        match self {
            SceneSpec::Ring(r) => build_fresnel_like_scene(
                r.n_tx,
                r.blind_deg,
                r.rx_step_deg,
                r.radius,
                r.doi_half,
                r.n_grid,
                r.frequencies.clone(),
            ),
            SceneSpec::Explicit(s) => {
                s.validate()?;
                Ok(s.clone())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    pub eps_r: f64,
    #[serde(default)]
    pub sigma: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomSpec {
    /// Preset two-disk-and-ring target, drawn before `shapes`.
    #[serde(default)]
    pub austria: Option<Material>,
    #[serde(default)]
    pub shapes: Vec<Shape>,
}

impl PhantomSpec {
    pub fn build(&self) -> Result<Phantom> {
        let mut shapes = match self.austria {
            Some(m) => Phantom::austria(m.eps_r, m.sigma).shapes,
            None => Vec::new(),
        };
        shapes.extend(self.shapes.iter().cloned());
        Phantom::new(shapes)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scene: SceneSpec,
    #[serde(default)]
    pub phantom: PhantomSpec,
}

impl ExperimentConfig {
    pub fn build(&self) -> Result<(Scene, Phantom)> {
        Ok((self.scene.build()?, self.phantom.build()?))
    }
}

/// Parses TOML text; errors carry the source name plus line and column.
pub fn parse_toml<X: DeserializeOwned>(text: &str, origin: &Path) -> Result<X> {
    toml::from_str(text).map_err(|e| Error::Config(format!("{}: {e}", origin.display())))
}

pub fn load_toml<X: DeserializeOwned>(path: &Path) -> Result<X> {
    parse_toml(&read_text(path)?, path)
}

pub fn load_experiment(path: &Path) -> Result<ExperimentConfig> {
    load_toml(path)
}

pub fn load_net_config(path: &Path) -> Result<NetConfig> {
    let cfg: NetConfig = load_toml(path)?;
    cfg.validate()?;
    Ok(cfg)
}
