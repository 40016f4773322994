//! Versioned JSON project file (`.crnproj`).

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::EvaluationSpec;
use crate::ga::{GaConfig, GeneSpec, ReferenceData};
use crate::model::{CompartmentTree, Model, ReactionNetwork};
use crate::protocol::{format_series, parse_series, InteractionSeries, Translation};
use crate::sim::SolverConfig;

pub const FORMAT_VERSION: u32 = 1;
pub const EXTENSION: &str = "crnproj";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProjectError {
    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error at byte {offset} (line {line}, column {column}): {message}")]
    Parse {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("project format version {found} is newer than supported version {supported}; migration required")]
    MigrationRequired { found: u32, supported: u32 },
    #[error("invalid project: {0}")]
    Invalid(String),
    #[error("no {kind} named '{name}' in project")]
    NotFound { kind: &'static str, name: String },
}

/// A stored batch evaluation, referring to other entries by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationEntry {
    pub name: String,
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<String>,
    pub translations: Vec<String>,
    pub repetitions: usize,
    pub solver: SolverConfig,
    pub t_end: f64,
    pub base_seed: u64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub constants: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fitness {
    /// Squared error against reference samples; always minimized.
    TraceFit {
        reference: ReferenceData,
        solver: SolverConfig,
        t_end: f64,
    },
    /// Summary score of a stored evaluation.
    Evaluation { evaluation: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationEntry {
    pub name: String,
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<String>,
    pub genes: Vec<GeneSpec>,
    pub config: GaConfig,
    pub fitness: Fitness,
}

/// Pointer to an artifact written next to the project.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultEntry {
    pub name: String,
    pub kind: String,
    pub path: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Project {
    pub networks: Vec<ReactionNetwork>,
    pub trees: Vec<CompartmentTree>,
    pub series: Vec<InteractionSeries>,
    pub translations: Vec<Translation>,
    pub evaluations: Vec<EvaluationEntry>,
    pub optimizations: Vec<OptimizationEntry>,
    pub results: Vec<ResultEntry>,
}

#[derive(Serialize, Deserialize)]
struct NetworkRecord {
    #[serde(flatten)]
    network: ReactionNetwork,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parent: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct SeriesRecord {
    name: String,
    text: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProjectFile {
    format_version: u32,
    #[serde(default)]
    networks: Vec<NetworkRecord>,
    #[serde(default)]
    trees: Vec<CompartmentTree>,
    #[serde(default)]
    series: Vec<SeriesRecord>,
    #[serde(default)]
    translations: Vec<Translation>,
    #[serde(default)]
    evaluations: Vec<EvaluationEntry>,
    #[serde(default)]
    optimizations: Vec<OptimizationEntry>,
    #[serde(default)]
    results: Vec<ResultEntry>,
}

fn offset_of(text: &str, line: usize, column: usize) -> usize {
    let start: usize = text.split_inclusive('\n').take(line.saturating_sub(1)).map(str::len).sum();
    (start + column.saturating_sub(1)).min(text.len())
}

fn find<'a, T>(items: &'a [T], name: &str, kind: &'static str, key: impl Fn(&T) -> &str) -> Result<&'a T, ProjectError> {
    items.iter().find(|i| key(i) == name).ok_or_else(|| ProjectError::NotFound {
        kind,
        name: name.to_string(),
    })
}

impl Project {
    pub fn network(&self, name: &str) -> Result<&ReactionNetwork, ProjectError> {
        find(&self.networks, name, "network", |n| &n.name)
    }

    pub fn series(&self, name: &str) -> Result<&InteractionSeries, ProjectError> {
        find(&self.series, name, "series", |s| &s.name)
    }

    pub fn translation(&self, name: &str) -> Result<&Translation, ProjectError> {
        find(&self.translations, name, "translation", |t| &t.name)
    }

    pub fn evaluation(&self, name: &str) -> Result<&EvaluationEntry, ProjectError> {
        find(&self.evaluations, name, "evaluation", |e| &e.name)
    }

    pub fn optimization(&self, name: &str) -> Result<&OptimizationEntry, ProjectError> {
        find(&self.optimizations, name, "optimization", |o| &o.name)
    }

    /// A network or compartment tree by name; networks shadow trees.
    pub fn model(&self, name: &str) -> Result<Model, ProjectError> {
        if let Ok(n) = self.network(name) {
            return Ok(Model::Network(n.clone()));
        }
        find(&self.trees, name, "model", |t| &t.name).map(|t| Model::Tree(t.clone()))
    }

    /// The series by name, or an empty one.
    pub fn series_or_empty(&self, name: Option<&str>) -> Result<InteractionSeries, ProjectError> {
        match name {
            Some(n) => self.series(n).cloned(),
            None => Ok(InteractionSeries::default()),
        }
    }

    pub fn evaluation_spec(&self, name: &str) -> Result<EvaluationSpec, ProjectError> {
        let e = self.evaluation(name)?;
        Ok(EvaluationSpec {
            model: self.model(&e.model)?,
            series: self.series_or_empty(e.series.as_deref())?,
            translations: e
                .translations
                .iter()
                .map(|t| self.translation(t).cloned())
                .collect::<Result<_, _>>()?,
            repetitions: e.repetitions,
            solver: e.solver,
            t_end: e.t_end,
            base_seed: e.base_seed,
            constants: e.constants.clone(),
        })
    }

    /// Adds or replaces the network with the same name.
    pub fn upsert_network(&mut self, network: ReactionNetwork) {
        match self.networks.iter_mut().find(|n| n.name == network.name) {
            Some(slot) => *slot = network,
            None => self.networks.push(network),
        }
    }

    pub fn to_text(&self) -> Result<String, ProjectError> {
        let names: BTreeSet<&str> = self.networks.iter().map(|n| n.name.as_str()).collect();
        let networks = self
            .networks
            .iter()
            .map(|n| {
                let parent = n.parent.as_ref().map(|p| p.name.clone());
                if let Some(p) = &parent {
                    if !names.contains(p.as_str()) {
                        return Err(ProjectError::Invalid(format!(
                            "network '{}' extends '{p}', which is not in the project",
                            n.name
                        )));
                    }
                }
                Ok(NetworkRecord {
                    network: n.clone(),
                    parent,
                })
            })
            .collect::<Result<_, _>>()?;
        let file = ProjectFile {
            format_version: FORMAT_VERSION,
            networks,
            trees: self.trees.clone(),
            series: self
                .series
                .iter()
                .map(|s| SeriesRecord {
                    name: s.name.clone(),
                    text: format_series(s),
                })
                .collect(),
            translations: self.translations.clone(),
            evaluations: self.evaluations.clone(),
            optimizations: self.optimizations.clone(),
            results: self.results.clone(),
        };
        let mut text = serde_json::to_string_pretty(&file).map_err(|e| ProjectError::Invalid(e.to_string()))?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_text(text: &str) -> Result<Project, ProjectError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ProjectError::Parse {
            offset: offset_of(text, e.line(), e.column()),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let version = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| ProjectError::Invalid("missing or non-integer 'format_version'".into()))?;
        if version > u64::from(FORMAT_VERSION) {
            return Err(ProjectError::MigrationRequired {
                found: u32::try_from(version).unwrap_or(u32::MAX),
                supported: FORMAT_VERSION,
            });
        }
        if version == 0 {
            return Err(ProjectError::Invalid("format_version 0 does not exist".into()));
        }
        let file: ProjectFile = serde_json::from_value(value).map_err(|e| ProjectError::Invalid(e.to_string()))?;

        let parents: BTreeMap<String, Option<String>> = file
            .networks
            .iter()
            .map(|r| (r.network.name.clone(), r.parent.clone()))
            .collect();
        if parents.len() != file.networks.len() {
            return Err(ProjectError::Invalid("duplicate network names".into()));
        }
        let by_name: BTreeMap<&str, &ReactionNetwork> =
            file.networks.iter().map(|r| (r.network.name.as_str(), &r.network)).collect();
        let mut resolved: BTreeMap<String, Arc<ReactionNetwork>> = BTreeMap::new();
        fn resolve(
            name: &str,
            parents: &BTreeMap<String, Option<String>>,
            by_name: &BTreeMap<&str, &ReactionNetwork>,
            resolved: &mut BTreeMap<String, Arc<ReactionNetwork>>,
            depth: usize,
        ) -> Result<Arc<ReactionNetwork>, ProjectError> {
            if let Some(n) = resolved.get(name) {
                return Ok(Arc::clone(n));
            }
            if depth > parents.len() {
                return Err(ProjectError::Invalid(format!("network '{name}' has a cyclic parent chain")));
            }
            let base = by_name
                .get(name)
                .ok_or_else(|| ProjectError::Invalid(format!("unknown parent network '{name}'")))?;
            let mut net = (*base).clone();
            if let Some(Some(p)) = parents.get(name) {
                net.parent = Some(resolve(p, parents, by_name, resolved, depth + 1)?);
            }
            let net = Arc::new(net);
            resolved.insert(name.to_string(), Arc::clone(&net));
            Ok(net)
        }
        let mut networks = Vec::with_capacity(file.networks.len());
        for r in &file.networks {
            let n = resolve(&r.network.name, &parents, &by_name, &mut resolved, 0)?;
            networks.push((*n).clone());
        }
        let series = file
            .series
            .iter()
            .map(|s| parse_series(&s.name, &s.text).map_err(|e| ProjectError::Invalid(format!("series '{}': {e}", s.name))))
            .collect::<Result<_, _>>()?;
        Ok(Project {
            networks,
            trees: file.trees,
            series,
            translations: file.translations,
            evaluations: file.evaluations,
            optimizations: file.optimizations,
            results: file.results,
        })
    }
}

pub fn save_project(project: &Project, path: &Path) -> Result<(), ProjectError> {
    let text = project.to_text()?;
    std::fs::write(path, text).map_err(|e| ProjectError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn load_project(path: &Path) -> Result<Project, ProjectError> {
    let text = std::fs::read_to_string(path).map_err(|e| ProjectError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Project::from_text(&text)
}
