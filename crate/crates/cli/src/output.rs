//! CSV trajectories, JSON reports, atomic writes.

use std::io::Write;
use std::path::Path;

use anyhow::Context;
use holomenta_core::symmetry::{GaugeAnalysis, GaugeOptions, VERTICAL_SYMMETRY_TOL};
use serde::Serialize;

/// Write to a temporary file next to `path`, then rename over it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// `path` or standard output when absent.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match path {
        Some(p) => write_atomic(p, bytes),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

/// 17 significant digits, enough to round-trip any double.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Table {
    header: Vec<String>,
    body: String,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Table {
            header,
            body: String::new(),
        }
    }

    pub fn row(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.header.len());
        let cells: Vec<String> = values.iter().map(|&x| float(x)).collect();
        self.body.push_str(&cells.join(","));
        self.body.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        let mut s = self.header.join(",");
        s.push('\n');
        s.push_str(&self.body);
        s.into_bytes()
    }
}

#[derive(Debug, Serialize)]
pub struct Candidate {
    pub eta: Vec<f64>,
    pub jk_residual_max: f64,
    pub drift: f64,
    pub verdict: String,
}

#[derive(Debug, Serialize)]
pub struct Tolerances {
    pub residual: f64,
    pub drift: f64,
    pub vertical_symmetry: f64,
    pub rank: f64,
}

#[derive(Debug, Serialize)]
pub struct SamplesUsed {
    pub count: usize,
    pub seed: u64,
    pub source: &'static str,
}

#[derive(Debug, Serialize)]
pub struct AnalysisReport {
    pub system: String,
    pub dimension_assumption: bool,
    #[serde(rename = "rank_S")]
    pub rank_s: usize,
    pub vertical_symmetry: bool,
    pub candidates: Vec<Candidate>,
    pub tolerances: Tolerances,
    pub samples: SamplesUsed,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl AnalysisReport {
    pub fn new(system: &str, rank_tol: f64, opts: &GaugeOptions, samples: SamplesUsed) -> Self {
        AnalysisReport {
            system: system.to_string(),
            dimension_assumption: true,
            rank_s: 0,
            vertical_symmetry: false,
            candidates: Vec::new(),
            tolerances: Tolerances {
                residual: opts.residual_tol,
                drift: opts.drift_tol,
                vertical_symmetry: VERTICAL_SYMMETRY_TOL,
                rank: rank_tol,
            },
            samples,
            message: None,
        }
    }

    pub fn fill(&mut self, analysis: &GaugeAnalysis) {
        self.rank_s = analysis.rank_s;
        self.vertical_symmetry = analysis.vertical_symmetry;
        self.candidates = analysis
            .reports
            .iter()
            .map(|r| Candidate {
                eta: r.eta.iter().copied().collect(),
                jk_residual_max: r.jk_residual_max,
                drift: r.drift,
                verdict: r.verdict.as_str().to_string(),
            })
            .collect();
    }

    pub fn all_certified(&self) -> bool {
        self.dimension_assumption && self.message.is_none() && self.candidates.iter().all(|c| c.verdict == "certified")
    }

    pub fn to_json(&self) -> anyhow::Result<Vec<u8>> {
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        Ok(bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, -0.0, 1.0 / 3.0, 6.02214076e23, 5e-324, f64::MAX, -1.2345678901234567e-89] {
            let back: f64 = float(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x}");
        }
    }

    #[test]
    fn table_layout() {
        let mut t = Table::new(vec!["t".into(), "x".into()]);
        t.row(&[0.0, 1.5]);
        let s = String::from_utf8(t.into_bytes()).unwrap();
        assert_eq!(s, "t,x\n0.0000000000000000e0,1.5000000000000000e0\n");
    }
}
