//! File emission: CSV and JSON outputs, all newline-terminated UTF-8.
//!
//! Fixed headers:
//! - measure.csv: `x1,...,xd,xi` (one coordinate column per grid dimension)
//! - curve.csv:   `n,method,efficiency`
//! - trace.csv:   `k,t,phi,gap`
//! - designs.json / certificate.json: schema documented in the README

use corrdesign::{
    DesignMeasure, MethodResult, OptimalityCertificate, ProblemInstance, SolveReport,
};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

pub struct OutDir {
    dir: PathBuf,
}

impl OutDir {
    pub fn new(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(OutDir { dir: dir.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn write_atomic(&self, name: &str, bytes: &[u8]) -> std::io::Result<PathBuf> {
        let target = self.path(name);
        let tmp = self.path(&format!(".{name}.tmp"));
        {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(bytes)?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp, &target)?;
        Ok(target)
    }

    pub fn measure_csv(
        &self,
        problem: &ProblemInstance,
        xi: &DesignMeasure,
    ) -> std::io::Result<PathBuf> {
        let dim = problem.grid().dim();
        let mut out = String::new();
        for j in 1..=dim {
            out.push_str(&format!("x{j},"));
        }
        out.push_str("xi\n");
        for (i, w) in xi.weights().iter().enumerate() {
            for c in problem.grid().point(i) {
                out.push_str(&format!("{c},"));
            }
            out.push_str(&format!("{w:.17e}\n"));
        }
        self.write_atomic("measure.csv", out.as_bytes())
    }

    pub fn trace_csv(&self, trace: &str) -> std::io::Result<PathBuf> {
        self.write_atomic("trace.csv", trace.as_bytes())
    }

    pub fn curve_csv(&self, rows: &[(usize, String, f64)]) -> std::io::Result<PathBuf> {
        let mut out = String::from("n,method,efficiency\n");
        for (n, method, eff) in rows {
            out.push_str(&format!("{n},{method},{eff:.10}\n"));
        }
        self.write_atomic("curve.csv", out.as_bytes())
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> std::io::Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable");
        text.push('\n');
        self.write_atomic(name, text.as_bytes())
    }
}

/// Top-level shape of designs.json.
#[derive(Debug, Serialize)]
pub struct DesignsFile {
    pub schema_version: u32,
    pub criterion: corrdesign::Criterion,
    pub n: usize,
    pub bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel_note: Option<String>,
    pub results: Vec<MethodResult>,
}

/// Top-level shape of certificate.json.
#[derive(Debug, Serialize)]
pub struct CertificateFile {
    pub schema_version: u32,
    pub criterion: corrdesign::Criterion,
    pub n: usize,
    pub iterations: usize,
    pub converged: bool,
    pub certificate: OptimalityCertificate,
}

impl CertificateFile {
    pub fn new(
        criterion: corrdesign::Criterion,
        n: usize,
        report: &SolveReport,
        certificate: OptimalityCertificate,
    ) -> Self {
        CertificateFile {
            schema_version: crate::config::SCHEMA_VERSION,
            criterion,
            n,
            iterations: report.iterations.len(),
            converged: report.converged,
            certificate,
        }
    }
}
