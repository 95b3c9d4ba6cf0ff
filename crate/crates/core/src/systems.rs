//! String-level system definitions and the builtin example systems.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

// Unused when std is linked into the build graph.
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::field::{FieldExpr, FrameExpr, MatrixExpr};
use crate::geom::{self, Vector};
use crate::mechanics::{MPoint, MechanicalSystem, Observable};
use crate::symmetry::{LieAlgebraAction, Verdict};

pub const BUILTINS: [&str; 3] = ["particle", "disk", "ball"];

/// A mechanical system with symmetry, written as expression strings.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemDefinition {
    pub name: String,
    pub coordinates: Vec<String>,
    pub metric: Vec<Vec<String>>,
    pub potential: String,
    pub distribution: Vec<Vec<String>>,
    pub vertical_complement: Vec<Vec<String>>,
    pub action_generators: Vec<Vec<String>>,
    pub params: BTreeMap<String, f64>,
    pub tol: f64,
}

fn compile_rows(rows: &[Vec<String>], params: &BTreeMap<String, f64>, coords: &[String]) -> Result<Vec<Vec<Expression>>> {
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let mut exprs = Vec::with_capacity(row.len());
        for src in row {
            let e = Expression::parse(src)?.substitute(params);
            // Compile once here so unbound names surface with a clear error.
            e.compile(coords)?;
            exprs.push(e);
        }
        out.push(exprs);
    }
    Ok(out)
}

fn frame(what: &str, rows: &[Vec<Expression>], coords: &[String]) -> Result<FrameExpr> {
    let n = coords.len();
    let fields = rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            if row.len() != n {
                return Err(Error::InvalidInput(format!(
                    "{what} row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            FieldExpr::compile(row, coords)
        })
        .collect::<Result<Vec<_>>>()?;
    FrameExpr::new(n, fields)
}

impl SystemDefinition {
    pub fn build(&self) -> Result<(MechanicalSystem, LieAlgebraAction)> {
        let coords = &self.coordinates;
        if let Some(c) = coords.iter().find(|c| self.params.contains_key(*c)) {
            return Err(Error::InvalidInput(format!(
                "parameter `{c}` shadows a coordinate"
            )));
        }
        for (i, c) in coords.iter().enumerate() {
            if c.is_empty() || coords[..i].contains(c) {
                return Err(Error::InvalidInput(format!("bad or repeated coordinate name `{c}`")));
            }
        }
        let metric_rows = compile_rows(&self.metric, &self.params, coords)?;
        if metric_rows.len() != coords.len() {
            return Err(Error::InvalidInput(format!(
                "metric has {} rows, expected {}",
                metric_rows.len(),
                coords.len()
            )));
        }
        let metric = MatrixExpr::compile(&metric_rows, coords)?;
        let potential = Expression::parse(&self.potential)?
            .substitute(&self.params)
            .compile(coords)?;
        let d = frame("distribution", &compile_rows(&self.distribution, &self.params, coords)?, coords)?;
        let w = frame(
            "vertical_complement",
            &compile_rows(&self.vertical_complement, &self.params, coords)?,
            coords,
        )?;
        let g = frame(
            "action_generators",
            &compile_rows(&self.action_generators, &self.params, coords)?,
            coords,
        )?;
        let sys = MechanicalSystem::new(self.name.clone(), coords.clone(), metric, potential, d, w, self.tol)?;
        Ok((sys, LieAlgebraAction::new(g)))
    }
}

/// Axis-aligned box in the chart used for sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ChartBox {
    pub fn new(bounds: &[(f64, f64)]) -> Self {
        ChartBox {
            lower: bounds.iter().map(|b| b.0).collect(),
            upper: bounds.iter().map(|b| b.1).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }
}

/// `count` states drawn uniformly: `q` in the box, `v` in `[-1, 1]^r`.
pub fn sample_states(chart: &ChartBox, rank: usize, count: usize, seed: u64) -> Vec<MPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let q = Vector::from_iterator(
                chart.dim(),
                chart
                    .lower
                    .iter()
                    .zip(&chart.upper)
                    .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
                    .collect::<Vec<_>>(),
            );
            let v = Vector::from_iterator(rank, (0..rank).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect::<Vec<_>>());
            MPoint { q, v }
        })
        .collect()
}

/// Given configurations, attach seeded velocities in `[-1, 1]^r`.
pub fn states_at(points: &[Vector], rank: usize, seed: u64) -> Vec<MPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    points
        .iter()
        .map(|q| MPoint {
            q: q.clone(),
            v: Vector::from_iterator(rank, (0..rank).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect::<Vec<_>>()),
        })
        .collect()
}

type ObservableFn = dyn Fn(&MechanicalSystem, &MPoint) -> Result<f64> + Send + Sync;

/// A named closed-form function on `M`.
pub struct ClosedForm {
    pub name: String,
    f: Box<ObservableFn>,
}

impl core::fmt::Debug for ClosedForm {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ClosedForm").field("name", &self.name).finish()
    }
}

impl ClosedForm {
    pub fn new<F>(name: &str, f: F) -> Self
    where
        F: Fn(&MechanicalSystem, &MPoint) -> Result<f64> + Send + Sync + 'static,
    {
        ClosedForm {
            name: name.to_string(),
            f: Box::new(f),
        }
    }
}

impl Observable for ClosedForm {
    fn value(&self, sys: &MechanicalSystem, m: &MPoint) -> Result<f64> {
        (self.f)(sys, m)
    }
}

/// One choice of vertical complement, with the expected analysis outcome.
#[derive(Debug, Clone)]
pub struct Complement {
    pub name: &'static str,
    pub rows: Vec<Vec<String>>,
    pub vertical_symmetry: bool,
    pub verdicts: Vec<Verdict>,
}

#[derive(Debug)]
pub struct BuiltinFixture {
    pub name: &'static str,
    /// Definition using the first (default) complement.
    pub definition: SystemDefinition,
    pub complements: Vec<Complement>,
    pub observables: Vec<ClosedForm>,
    pub expected_rank_s: usize,
    pub chart_box: ChartBox,
    pub initial: MPoint,
}

impl BuiltinFixture {
    pub fn system(&self) -> Result<(MechanicalSystem, LieAlgebraAction)> {
        self.definition.build()
    }

    pub fn complement(&self, name: &str) -> Result<&Complement> {
        self.complements.iter().find(|c| c.name == name).ok_or_else(|| {
            let known: Vec<&str> = self.complements.iter().map(|c| c.name).collect();
            Error::InvalidInput(format!(
                "unknown complement `{name}` for {} (known: {})",
                self.name,
                known.join(", ")
            ))
        })
    }

    pub fn definition_with(&self, complement: &str) -> Result<SystemDefinition> {
        let c = self.complement(complement)?;
        let mut def = self.definition.clone();
        def.vertical_complement = c.rows.clone();
        Ok(def)
    }

    pub fn default_complement(&self) -> &Complement {
        &self.complements[0]
    }

    pub fn observable(&self, name: &str) -> Option<&ClosedForm> {
        self.observables.iter().find(|o| o.name == name)
    }
}

fn rows(src: &[&[&str]]) -> Vec<Vec<String>> {
    src.iter()
        .map(|r| r.iter().map(|s| s.to_string()).collect())
        .collect()
}

fn strings(src: &[&str]) -> Vec<String> {
    src.iter().map(|s| s.to_string()).collect()
}

fn merged(defaults: &[(&str, f64)], overrides: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>> {
    let mut params: BTreeMap<String, f64> = defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    for (k, v) in overrides {
        if !params.contains_key(k) {
            let known: Vec<&str> = defaults.iter().map(|d| d.0).collect();
            return Err(Error::InvalidInput(format!(
                "unknown parameter `{k}` (known: {})",
                known.join(", ")
            )));
        }
        params.insert(k.clone(), *v);
    }
    Ok(params)
}

pub fn builtin(name: &str) -> Result<BuiltinFixture> {
    builtin_with_params(name, &BTreeMap::new())
}

/// A builtin with some default parameters overridden.
pub fn builtin_with_params(name: &str, overrides: &BTreeMap<String, f64>) -> Result<BuiltinFixture> {
    match name {
        "particle" => particle(overrides),
        "disk" => disk(overrides),
        "ball" => ball(overrides),
        other => Err(Error::UnknownBuiltin(other.to_string())),
    }
}

fn particle(overrides: &BTreeMap<String, f64>) -> Result<BuiltinFixture> {
    let params = merged(&[], overrides)?;
    let definition = SystemDefinition {
        name: "particle".into(),
        coordinates: strings(&["x", "y", "z"]),
        metric: rows(&[&["1", "0", "0"], &["0", "1", "0"], &["0", "0", "1"]]),
        potential: "0".into(),
        distribution: rows(&[&["0", "1", "0"], &["1", "0", "y"]]),
        vertical_complement: rows(&[&["0", "0", "1"]]),
        action_generators: rows(&[&["1", "0", "0"], &["0", "0", "1"]]),
        params,
        tol: geom::DEFAULT_TOL,
    };
    let complements = vec![
        Complement {
            name: "Wz",
            rows: rows(&[&["0", "0", "1"]]),
            vertical_symmetry: true,
            verdicts: vec![Verdict::ResidualFailed],
        },
        Complement {
            // Invariant complement spanned by (1 − √(1+y²), 0, y), rescaled
            // so it stays nonzero at y = 0.
            name: "Wpaper",
            rows: rows(&[&["-y/(1+sqrt(1+y^2))", "0", "1"]]),
            vertical_symmetry: false,
            verdicts: vec![Verdict::EmpiricalOnly],
        },
    ];
    let observables = vec![ClosedForm::new("f", |sys, m| {
        let p = sys.momenta(m)?;
        Ok(p[0] * (1.0 + m.q[1] * m.q[1]).sqrt())
    })];
    Ok(BuiltinFixture {
        name: "particle",
        definition,
        complements,
        observables,
        expected_rank_s: 1,
        chart_box: ChartBox::new(&[(-1.0, 1.0), (-1.5, 1.5), (-1.0, 1.0)]),
        initial: MPoint::from_slices(&[0.0, 0.0, 0.0], &[1.0, 1.0]),
    })
}

fn disk(overrides: &BTreeMap<String, f64>) -> Result<BuiltinFixture> {
    let params = merged(&[("I", 1.0), ("J", 1.0), ("R", 1.0)], overrides)?;
    let (i, r) = (params["I"], params["R"]);
    let w = rows(&[&["1", "0", "0", "0"], &["0", "1", "0", "0"]]);
    let definition = SystemDefinition {
        name: "disk".into(),
        coordinates: strings(&["x", "y", "phi", "psi"]),
        metric: rows(&[
            &["1", "0", "0", "0"],
            &["0", "1", "0", "0"],
            &["0", "0", "I", "0"],
            &["0", "0", "0", "J"],
        ]),
        potential: "0".into(),
        distribution: rows(&[&["R*cos(psi)", "R*sin(psi)", "1", "0"], &["0", "0", "0", "1"]]),
        vertical_complement: w.clone(),
        action_generators: rows(&[
            &["1", "0", "0", "0"],
            &["0", "1", "0", "0"],
            &["-y", "x", "0", "1"],
            &["0", "0", "1", "0"],
        ]),
        params,
        tol: geom::DEFAULT_TOL,
    };
    let observables = vec![
        ClosedForm::new("J1", move |sys, m| Ok((r * r / i + 1.0) * sys.momenta(m)?[2])),
        ClosedForm::new("J2", |sys, m| Ok(sys.momenta(m)?[3])),
    ];
    Ok(BuiltinFixture {
        name: "disk",
        definition,
        complements: vec![Complement {
            name: "W",
            rows: w,
            vertical_symmetry: true,
            verdicts: vec![Verdict::Certified, Verdict::Certified],
        }],
        observables,
        expected_rank_s: 2,
        chart_box: ChartBox::new(&[
            (-1.0, 1.0),
            (-1.0, 1.0),
            (0.0, core::f64::consts::TAU),
            (0.0, core::f64::consts::TAU),
        ]),
        initial: MPoint::from_slices(&[0.1, -0.2, 0.3, 0.4], &[1.0, 0.5]),
    })
}

/// ZXZ Euler-angle kinematics: `Ω = B(θ, ψ) (φ̇, θ̇, ψ̇)`.
const BALL_B: [[&str; 3]; 3] = [
    ["sin(theta)*sin(psi)", "cos(psi)", "0"],
    ["sin(theta)*cos(psi)", "-sin(psi)", "0"],
    ["cos(theta)", "0", "1"],
];

/// Left-invariant fields: angle rates giving `Ω = e_i`.
const BALL_XL: [[&str; 3]; 3] = [
    ["sin(psi)/sin(theta)", "cos(psi)", "-cos(theta)*sin(psi)/sin(theta)"],
    ["cos(psi)/sin(theta)", "-sin(psi)", "-cos(theta)*cos(psi)/sin(theta)"],
    ["0", "0", "1"],
];

/// First two rows of the rotation matrix.
const BALL_ALPHA: [&str; 3] = [
    "cos(phi)*cos(psi) - sin(phi)*cos(theta)*sin(psi)",
    "-cos(phi)*sin(psi) - sin(phi)*cos(theta)*cos(psi)",
    "sin(phi)*sin(theta)",
];
const BALL_BETA: [&str; 3] = [
    "sin(phi)*cos(psi) + cos(phi)*cos(theta)*sin(psi)",
    "-sin(phi)*sin(psi) + cos(phi)*cos(theta)*cos(psi)",
    "-cos(phi)*sin(theta)",
];

fn ball_metric() -> Vec<Vec<String>> {
    let mut out = vec![vec![String::from("0"); 5]; 5];
    for a in 0..3 {
        for b in 0..3 {
            let terms: Vec<String> = (0..3)
                .filter(|&k| BALL_B[k][a] != "0" && BALL_B[k][b] != "0")
                .map(|k| format!("I{}*({})*({})", k + 1, BALL_B[k][a], BALL_B[k][b]))
                .collect();
            out[a][b] = if terms.is_empty() { "0".into() } else { terms.join(" + ") };
        }
    }
    out[3][3] = "m".into();
    out[4][4] = "m".into();
    out
}

fn ball_distribution() -> Vec<Vec<String>> {
    (0..3)
        .map(|i| {
            let mut row: Vec<String> = BALL_XL[i].iter().map(|s| s.to_string()).collect();
            row.push(format!("r*({})", BALL_BETA[i]));
            row.push(format!("-r*({})", BALL_ALPHA[i]));
            row
        })
        .collect()
}

/// `γ = (sinθ sinψ, sinθ cosψ, cosθ)` in the body frame.
pub fn ball_gamma(q: &Vector) -> [f64; 3] {
    let (th, ps) = (q[1], q[2]);
    [th.sin() * ps.sin(), th.sin() * ps.cos(), th.cos()]
}

/// `K = 𝕀Ω + mr²(Ω − ⟨γ,Ω⟩γ)` with `Ω = v`.
pub fn ball_body_momentum(inertia: [f64; 3], mass: f64, radius: f64, m: &MPoint) -> [f64; 3] {
    let g = ball_gamma(&m.q);
    let om = [m.v[0], m.v[1], m.v[2]];
    let go = g[0] * om[0] + g[1] * om[1] + g[2] * om[2];
    let c = mass * radius * radius;
    core::array::from_fn(|i| inertia[i] * om[i] + c * (om[i] - go * g[i]))
}

fn ball(overrides: &BTreeMap<String, f64>) -> Result<BuiltinFixture> {
    let params = merged(
        &[("I1", 2.0), ("I2", 3.0), ("I3", 4.0), ("m", 1.0), ("r", 1.0)],
        overrides,
    )?;
    let inertia = [params["I1"], params["I2"], params["I3"]];
    let (mass, radius) = (params["m"], params["r"]);
    let w = rows(&[&["0", "0", "0", "1", "0"], &["0", "0", "0", "0", "1"]]);
    let definition = SystemDefinition {
        name: "ball".into(),
        coordinates: strings(&["phi", "theta", "psi", "x", "y"]),
        metric: ball_metric(),
        potential: "0".into(),
        distribution: ball_distribution(),
        vertical_complement: w.clone(),
        action_generators: rows(&[
            &["1", "0", "0", "-y", "x"],
            &["0", "0", "0", "1", "0"],
            &["0", "0", "0", "0", "1"],
        ]),
        params,
        tol: geom::DEFAULT_TOL,
    };
    let observables = vec![ClosedForm::new("gamma_K", move |_sys, m| {
        let g = ball_gamma(&m.q);
        let k = ball_body_momentum(inertia, mass, radius, m);
        Ok(g[0] * k[0] + g[1] * k[1] + g[2] * k[2])
    })];
    let margin = 0.2;
    Ok(BuiltinFixture {
        name: "ball",
        definition,
        complements: vec![Complement {
            name: "W",
            rows: w,
            vertical_symmetry: true,
            verdicts: vec![Verdict::Certified],
        }],
        observables,
        expected_rank_s: 1,
        chart_box: ChartBox::new(&[
            (0.0, core::f64::consts::TAU),
            (margin, core::f64::consts::PI - margin),
            (0.0, core::f64::consts::TAU),
            (-1.0, 1.0),
            (-1.0, 1.0),
        ]),
        initial: MPoint::from_slices(&[0.3, 1.0, 0.5, 0.0, 0.0], &[0.3, -0.2, 0.5]),
    })
}
