//! JSON scenario files: the one input format shared by every CLI command.
//!
//! A config names paths (interfaces), extra links, routes, and sources.
//! Every path implicitly defines its access link (same id, capacity `c`),
//! so a route lists only the links *beyond* its access hop. Unknown keys
//! anywhere are rejected.
//!
//! ```json
//! {
//!   "paths": [
//!     {"id": "wifi", "b": 238.2, "theta": 132.9, "c": 4.12},
//!     {"id": "lte", "b": 52.0, "theta": 1288.0, "c": 12.74}
//!   ],
//!   "links": [{"id": "core", "capacity": 10.0}],
//!   "routes": [
//!     {"id": "over_wifi", "path": "wifi", "links": ["core"]},
//!     {"id": "over_lte", "path": "lte", "links": ["core"]}
//!   ],
//!   "sources": [{
//!     "id": "download", "routes": ["over_wifi", "over_lte"],
//!     "controller": "ee_file_transfer",
//!     "utility": {"kind": "new_reno", "tau": 0.1},
//!     "alpha_s": 1.0, "beta": 0.2,
//!     "app": {"kind": "file_transfer", "size": 1000.0}
//!   }],
//!   "sim": {"dt": 0.0005, "horizon": 300.0},
//!   "sweep": {"alpha": [0.0, 1.0, 2.0]}
//! }
//! ```

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::path::PathSpec;
use crate::select::Instance;
use crate::sim::{
    AppKind, ControllerKind, Link, Route, Scenario, SelectionPolicy, SimConfig, Source,
};
use crate::utility::UtilityFunction;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub paths: Vec<PathConfig>,
    #[serde(default)]
    pub links: Vec<LinkConfig>,
    #[serde(default)]
    pub routes: Vec<RouteConfig>,
    #[serde(default)]
    pub sources: Vec<SourceConfig>,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    /// Utility and weight for the standalone `select` command; falls back
    /// to the first source when absent.
    #[serde(default)]
    pub selection: Option<SelectionSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    pub id: String,
    pub b: f64,
    pub theta: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub id: String,
    pub capacity: f64,
    /// Absolute price gain; defaults to `gamma_default / capacity`.
    #[serde(default)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteConfig {
    pub id: String,
    pub path: String,
    /// Links beyond the access hop, by id.
    #[serde(default)]
    pub links: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub id: String,
    pub routes: Vec<String>,
    pub controller: String,
    pub utility: UtilityConfig,
    #[serde(default)]
    pub alpha_s: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    pub app: AppConfig,
    /// Route ids forced on, overriding the controller's own selection.
    #[serde(default)]
    pub selection: Option<Vec<String>>,
}

fn default_beta() -> f64 {
    0.2
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityConfig {
    pub kind: String,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub tau: Option<f64>,
}

impl UtilityConfig {
    pub fn build(&self, field: &str) -> Result<UtilityFunction> {
        let need = |opt: Option<f64>, name: &str| {
            opt.ok_or_else(|| Error::Config {
                field: format!("{field}.{name}"),
                message: format!("required for utility kind `{}`", self.kind),
            })
        };
        match self.kind.as_str() {
            "alpha_fair" => {
                UtilityFunction::alpha_fair(need(self.alpha, "alpha")?, need(self.gamma, "gamma")?)
            }
            "new_reno" | "newreno" => UtilityFunction::new_reno(need(self.tau, "tau")?),
            "log" => UtilityFunction::log(need(self.gamma, "gamma")?),
            other => Err(Error::Config {
                field: format!("{field}.kind"),
                message: format!("unknown utility kind `{other}`"),
            }),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppConfig {
    pub kind: String,
    #[serde(default)]
    pub duration: Option<f64>,
    #[serde(default)]
    pub size: Option<f64>,
}

impl AppConfig {
    fn build(&self, field: &str) -> Result<AppKind> {
        match self.kind.as_str() {
            "realtime" => Ok(AppKind::Realtime {
                duration: self.duration.ok_or_else(|| Error::Config {
                    field: format!("{field}.duration"),
                    message: "realtime app needs a duration (seconds)".into(),
                })?,
            }),
            "file_transfer" => Ok(AppKind::FileTransfer {
                size: self.size.ok_or_else(|| Error::Config {
                    field: format!("{field}.size"),
                    message: "file transfer needs a size (Mbit)".into(),
                })?,
            }),
            other => Err(Error::Config {
                field: format!("{field}.kind"),
                message: format!("unknown app kind `{other}`"),
            }),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub dt: f64,
    pub horizon: f64,
    /// Convergence tolerance on the largest rate derivative, Mbps/s.
    pub tol: f64,
    /// Price gains default to `gamma_default / capacity`.
    pub gamma_default: f64,
    pub phi_alpha_weighting: bool,
    pub record_every: u32,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            dt: 1e-3,
            horizon: 600.0,
            tol: 1e-4,
            gamma_default: 0.1,
            phi_alpha_weighting: true,
            record_every: 100,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub alpha: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionSection {
    pub utility: UtilityConfig,
    #[serde(default)]
    pub alpha_s: f64,
    #[serde(default = "default_n_connections")]
    pub n_connections: u32,
}

fn default_n_connections() -> u32 {
    1
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ConfigFile = serde_json::from_str(text)?;
        Ok(cfg)
    }

    fn build_paths(&self) -> Result<Vec<PathSpec>> {
        self.paths
            .iter()
            .map(|p| PathSpec::new(p.id.clone(), p.b, p.theta, p.c))
            .collect()
    }

    /// The selection instance: all paths plus the utility/weight of the
    /// `selection` section (or, failing that, of the first source).
    pub fn to_instance(&self) -> Result<Instance> {
        let paths = self.build_paths()?;
        let (utility, alpha_s, n) = if let Some(sel) = &self.selection {
            (
                sel.utility.build("selection.utility")?,
                sel.alpha_s,
                sel.n_connections,
            )
        } else if let Some(src) = self.sources.first() {
            (
                src.utility.build("sources[0].utility")?,
                src.alpha_s,
                1,
            )
        } else {
            return Err(Error::Config {
                field: "selection".into(),
                message: "needs a `selection` section or at least one source".into(),
            });
        };
        let mut inst = Instance::new(paths, utility, alpha_s)?;
        inst.n_connections = n;
        Ok(inst)
    }

    /// Resolve ids into a runnable scenario plus integrator settings.
    pub fn to_scenario(&self) -> Result<(Scenario, SimConfig)> {
        let paths = self.build_paths()?;

        let mut links = Vec::new();
        for p in &paths {
            links.push(Link {
                id: p.id.clone(),
                capacity: p.c,
                price_gain: self.sim.gamma_default / p.c,
            });
        }
        for l in &self.links {
            if paths.iter().any(|p| p.id == l.id) {
                return Err(Error::Config {
                    field: format!("links[{}]", l.id),
                    message: "link id collides with a path id".into(),
                });
            }
            links.push(Link {
                id: l.id.clone(),
                capacity: l.capacity,
                price_gain: l.gamma.unwrap_or(self.sim.gamma_default / l.capacity),
            });
        }
        let link_index = |id: &str| links.iter().position(|l| l.id == id);

        let mut routes = Vec::new();
        for r in &self.routes {
            let path = paths
                .iter()
                .find(|p| p.id == r.path)
                .ok_or_else(|| Error::Config {
                    field: format!("routes[{}].path", r.id),
                    message: format!("unknown path `{}`", r.path),
                })?
                .clone();
            let mut link_ids = vec![link_index(&r.path).unwrap()];
            for lid in &r.links {
                let li = link_index(lid).ok_or_else(|| Error::Config {
                    field: format!("routes[{}].links", r.id),
                    message: format!("unknown link `{lid}`"),
                })?;
                link_ids.push(li);
            }
            routes.push(Route {
                id: r.id.clone(),
                links: link_ids,
                path,
            });
        }
        let route_index = |id: &str| routes.iter().position(|r| r.id == id);

        let mut sources = Vec::new();
        for s in &self.sources {
            let mut route_idx = Vec::new();
            for rid in &s.routes {
                let ri = route_index(rid).ok_or_else(|| Error::Config {
                    field: format!("sources[{}].routes", s.id),
                    message: format!("unknown route `{rid}`"),
                })?;
                route_idx.push(ri);
            }
            let controller = match s.controller.as_str() {
                "single_path" => ControllerKind::SinglePath,
                "regular_mptcp" => ControllerKind::RegularMptcp,
                "ee_realtime" => ControllerKind::EeRealtime,
                "ee_file_transfer" => ControllerKind::EeFileTransfer,
                other => {
                    return Err(Error::Config {
                        field: format!("sources[{}].controller", s.id),
                        message: format!("unknown controller `{other}`"),
                    })
                }
            };
            sources.push(Source {
                id: s.id.clone(),
                routes: route_idx,
                controller,
                utility: s.utility.build(&format!("sources[{}].utility", s.id))?,
                alpha_s: s.alpha_s,
                beta: s.beta,
                app: s.app.build(&format!("sources[{}].app", s.id))?,
                selection: match &s.selection {
                    Some(ids) => SelectionPolicy::Fixed(ids.clone()),
                    None => SelectionPolicy::Auto,
                },
            });
        }

        let scenario = Scenario {
            links,
            routes,
            sources,
        };
        scenario.validate()?;

        let config = SimConfig {
            dt: self.sim.dt,
            horizon: self.sim.horizon,
            conv_tol: self.sim.tol,
            phi_alpha_weighting: self.sim.phi_alpha_weighting,
            record_every: self.sim.record_every,
            ..SimConfig::default()
        };
        config.validate(&scenario)?;
        Ok((scenario, config))
    }

    pub fn sweep_alphas(&self) -> Result<&[f64]> {
        match &self.sweep {
            Some(s) if !s.alpha.is_empty() => Ok(&s.alpha),
            Some(_) => Err(Error::Config {
                field: "sweep.alpha".into(),
                message: "must list at least one value".into(),
            }),
            None => Err(Error::Config {
                field: "sweep".into(),
                message: "missing sweep section".into(),
            }),
        }
    }
}
