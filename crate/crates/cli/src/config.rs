//! JSON system configs.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context};
use holomenta_core::geom::{self, Vector};
use holomenta_core::mechanics::{MPoint, MechanicalSystem};
use holomenta_core::symmetry::LieAlgebraAction;
use holomenta_core::systems::{self, ChartBox, SystemDefinition};
use serde::Deserialize;

/// An expression given either as a string or as a bare JSON number.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Expr {
    Text(String),
    Number(f64),
}

impl Expr {
    fn source(&self) -> String {
        match self {
            Expr::Text(s) => s.clone(),
            Expr::Number(x) => format!("{x:?}"),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub q: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub name: String,
    pub coordinates: Vec<String>,
    pub metric: Vec<Vec<Expr>>,
    #[serde(default)]
    pub potential: Option<Expr>,
    pub distribution: Vec<Vec<Expr>>,
    pub vertical_complement: Vec<Vec<Expr>>,
    pub action_generators: Vec<Vec<Expr>>,
    #[serde(default)]
    pub sample_points: Option<Vec<Vec<f64>>>,
    /// `[lower, upper]` per coordinate.
    #[serde(default)]
    pub chart_box: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    /// Start of the drift trajectory in `analyze` and default for `simulate`.
    #[serde(default)]
    pub initial: Option<InitialState>,
    /// Relative rank tolerance.
    #[serde(default)]
    pub tol: Option<f64>,
}

fn sources(rows: &[Vec<Expr>]) -> Vec<Vec<String>> {
    rows.iter().map(|r| r.iter().map(Expr::source).collect()).collect()
}

impl SystemConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn definition(&self) -> SystemDefinition {
        SystemDefinition {
            name: self.name.clone(),
            coordinates: self.coordinates.clone(),
            metric: sources(&self.metric),
            potential: self.potential.as_ref().map_or_else(|| "0".into(), Expr::source),
            distribution: sources(&self.distribution),
            vertical_complement: sources(&self.vertical_complement),
            action_generators: sources(&self.action_generators),
            params: self.params.clone(),
            tol: self.tol.unwrap_or(geom::DEFAULT_TOL),
        }
    }
}

/// A built system together with where to sample it and where to start.
pub struct Loaded {
    pub sys: MechanicalSystem,
    pub act: LieAlgebraAction,
    pub sampling: Sampling,
    pub initial: Option<MPoint>,
}

pub enum Sampling {
    Box(ChartBox),
    Points(Vec<Vector>),
}

impl Loaded {
    pub fn samples(&self, count: usize, seed: u64) -> Vec<MPoint> {
        let r = self.sys.rank();
        match &self.sampling {
            Sampling::Box(chart) => systems::sample_states(chart, r, count, seed),
            Sampling::Points(points) => systems::states_at(points, r, seed),
        }
    }

    pub fn sample_source(&self) -> &'static str {
        match self.sampling {
            Sampling::Box(_) => "chart_box",
            Sampling::Points(_) => "sample_points",
        }
    }
}

pub fn from_builtin(name: &str, complement: Option<&str>) -> anyhow::Result<Loaded> {
    let fx = systems::builtin(name)?;
    let def = match complement {
        Some(c) => fx.definition_with(c)?,
        None => fx.definition.clone(),
    };
    let (sys, act) = def.build()?;
    Ok(Loaded {
        sys,
        act,
        sampling: Sampling::Box(fx.chart_box.clone()),
        initial: Some(fx.initial.clone()),
    })
}

pub fn from_config(path: &Path) -> anyhow::Result<Loaded> {
    let cfg = SystemConfig::load(path)?;
    let (sys, act) = cfg.definition().build().with_context(|| format!("building system `{}`", cfg.name))?;
    let n = sys.dim();
    let sampling = match (&cfg.sample_points, &cfg.chart_box) {
        (Some(points), _) => {
            let points = points
                .iter()
                .map(|p| {
                    if p.len() != n {
                        bail!("sample point has {} entries, expected {n}", p.len());
                    }
                    let q = Vector::from_column_slice(p);
                    sys.validate_at(&q).with_context(|| format!("at sample point {p:?}"))?;
                    Ok(q)
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            Sampling::Points(points)
        }
        (None, Some(bounds)) => {
            if bounds.len() != n {
                bail!("chart_box has {} entries, expected {n}", bounds.len());
            }
            if bounds.iter().any(|[lo, hi]| !lo.is_finite() || !hi.is_finite() || lo > hi) {
                bail!("chart_box bounds must be finite with lower <= upper");
            }
            let pairs: Vec<(f64, f64)> = bounds.iter().map(|[lo, hi]| (*lo, *hi)).collect();
            Sampling::Box(ChartBox::new(&pairs))
        }
        (None, None) => bail!("config must provide sample_points or chart_box"),
    };
    let initial = match &cfg.initial {
        Some(s) => Some(state(&sys, &s.q, &s.v)?),
        None => None,
    };
    Ok(Loaded {
        sys,
        act,
        sampling,
        initial,
    })
}

/// Validate lengths and build a state.
pub fn state(sys: &MechanicalSystem, q: &[f64], v: &[f64]) -> anyhow::Result<MPoint> {
    if q.len() != sys.dim() {
        bail!("q0 has {} entries, expected {}", q.len(), sys.dim());
    }
    if v.len() != sys.rank() {
        bail!("v0 has {} entries, expected {}", v.len(), sys.rank());
    }
    let m = MPoint::from_slices(q, v);
    if !m.is_finite() {
        bail!("initial state must be finite");
    }
    sys.validate_at(&m.q)?;
    Ok(m)
}
