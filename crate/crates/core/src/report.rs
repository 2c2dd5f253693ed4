//! Run orchestration: configuration, pipeline dispatch, report and plot data.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use pathfinding::kuhn_munkres::kuhn_munkres_min;
use pathfinding::matrix::Matrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factorization::{relative_error_circles, ReconstructionResult, StopReason};
use crate::minvalue::{default_search_radii, mqmv_retrieve, MinSearchConfig};
use crate::par::Execution;
use crate::paraconj::{mqpc_retrieve, PencilConfig};
use crate::sampling::{load_modulus_field, store_modulus_field, write_complex_csv, write_real_csv, ModulusField};
use crate::synth::{draw_example2_zeros, gen_example1, gen_example2, Synthetic};

/// Seed used for Example 2 when neither a seed nor a zero list is given.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mqmv,
    Mqpc,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Mqmv => "mqmv",
            Method::Mqpc => "mqpc",
        })
    }
}

/// Where the measurements come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// Modulus CSV on disk.
    Input(PathBuf),
    Example1,
    /// Explicit zeros, or a seeded draw when `zeros` is `None`.
    Example2 {
        zeros: Option<Vec<Complex64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub method: Method,
    pub n: usize,
    pub source: Source,
    /// Interior circles to measure (examples) or search (MQMV on a file).
    pub radii: Option<Vec<f64>>,
    pub r: Option<f64>,
    pub epsilon: Option<f64>,
    pub max_zeros: Option<usize>,
    pub laurent_order: Option<usize>,
    pub k_max: Option<usize>,
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub execution: Execution,
}

impl RunConfig {
    pub fn new(method: Method, n: usize, source: Source, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            method,
            n,
            source,
            radii: None,
            r: None,
            epsilon: None,
            max_zeros: None,
            laurent_order: None,
            k_max: None,
            seed: None,
            output_dir: output_dir.into(),
            execution: Execution::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.n < 4 || !self.n.is_multiple_of(2) {
            return bad(format!("n must be even and at least 4, got {}", self.n));
        }
        match self.method {
            Method::Mqmv => {
                for (flag, set) in [
                    ("r", self.r.is_some()),
                    ("laurent-order", self.laurent_order.is_some()),
                    ("kmax", self.k_max.is_some()),
                ] {
                    if set {
                        return bad(format!("--{flag} applies to mqpc only"));
                    }
                }
            }
            Method::Mqpc => {
                for (flag, set) in [("epsilon", self.epsilon.is_some()), ("max-zeros", self.max_zeros.is_some())] {
                    if set {
                        return bad(format!("--{flag} applies to mqmv only"));
                    }
                }
            }
        }
        match &self.source {
            Source::Example2 { zeros } => {
                if zeros.is_some() && self.seed.is_some() {
                    return bad("give either explicit zeros or a seed, not both".into());
                }
                if zeros.as_ref().is_some_and(Vec::is_empty) {
                    return bad("zero list is empty".into());
                }
            }
            _ => {
                if self.seed.is_some() {
                    return bad("--seed applies to example 2 only".into());
                }
            }
        }
        if let Some(radii) = &self.radii {
            if radii.is_empty() {
                return bad("radius list is empty".into());
            }
            if let Some(r) = radii.iter().find(|&&r| !(r > 0.0 && r < 1.0)) {
                return bad(format!("radius {r} outside (0, 1)"));
            }
        }
        match self.method {
            Method::Mqmv => self.min_search_config(&default_search_radii()).validate(),
            Method::Mqpc => self.pencil_config().validate(),
        }
    }

    /// Zero-search settings; `measured` supplies the radii when none were given.
    pub fn min_search_config(&self, measured: &[f64]) -> MinSearchConfig {
        let mut cfg = MinSearchConfig { execution: self.execution, ..MinSearchConfig::default() };
        if let Some(e) = self.epsilon {
            cfg.epsilon = e;
        }
        if let Some(k) = self.max_zeros {
            cfg.max_zeros = k;
        }
        cfg.search_radii = match (&self.radii, &self.source) {
            (Some(r), _) => r.clone(),
            (None, Source::Input(_)) => measured.to_vec(),
            (None, _) => default_search_radii(),
        };
        cfg
    }

    pub fn pencil_config(&self) -> PencilConfig {
        let mut cfg = PencilConfig { execution: self.execution, order: self.laurent_order, ..PencilConfig::default() };
        if let Some(r) = self.r {
            cfg.r = r;
        }
        if let Some(k) = self.k_max {
            cfg.k_max = k;
        }
        cfg
    }

    /// Interior radii sampled by the example generators.
    pub fn generated_radii(&self) -> Vec<f64> {
        if let Some(r) = &self.radii {
            return r.clone();
        }
        let mut radii = default_search_radii();
        if self.method == Method::Mqpc {
            let r = self.pencil_config().r;
            if !radii.iter().any(|&x| (x - r).abs() <= crate::sampling::RADIUS_TOL) {
                radii.push(r);
            }
        }
        radii
    }
}

/// A recovered zero and how many times it occurs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroEntry {
    pub re: f64,
    pub im: f64,
    pub multiplicity: usize,
}

impl ZeroEntry {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageError {
    pub k: usize,
    pub err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub method: Method,
    pub n: usize,
    /// Zeros off the origin; identical values are merged into one entry.
    pub zeros: Vec<ZeroEntry>,
    /// Order of the zero at the origin.
    pub m: usize,
    pub stage_errors: Vec<StageError>,
    pub final_error: f64,
    pub stop: StopReason,
    /// Measured interior radii.
    pub radii: Vec<f64>,
    /// Zeros of the generating function, when known.
    pub truth_zeros: Option<Vec<Complex64>>,
    /// Unimodular constant aligning the reconstruction with the ground truth.
    pub constant: Option<Complex64>,
    /// Aligned relative error against the ground truth over all circles.
    pub truth_error: Option<f64>,
    pub wall_time_s: f64,
    pub config: RunConfig,
}

impl RunReport {
    /// Every zero repeated by multiplicity, origin first.
    pub fn all_zeros(&self) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.m];
        for z in &self.zeros {
            out.extend(std::iter::repeat_n(z.value(), z.multiplicity));
        }
        out
    }

    pub fn degree(&self) -> usize {
        self.m + self.zeros.iter().map(|z| z.multiplicity).sum::<usize>()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidArgument(format!("report encoding: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse { row: e.line(), msg: e.to_string() })
    }

    /// Copy with the wall time cleared, for determinism checks.
    pub fn without_timing(&self) -> Self {
        Self { wall_time_s: 0.0, ..self.clone() }
    }
}

fn group_zeros(zeros: &[Complex64]) -> Vec<ZeroEntry> {
    let mut out: Vec<ZeroEntry> = Vec::new();
    for z in zeros {
        match out.iter_mut().find(|e| e.re == z.re && e.im == z.im) {
            Some(e) => e.multiplicity += 1,
            None => out.push(ZeroEntry { re: z.re, im: z.im, multiplicity: 1 }),
        }
    }
    out
}

/// Everything a run produces before it is written out.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub result: ReconstructionResult,
    pub measurements: ModulusField,
    pub truth: Option<Synthetic>,
}

/// Loads or generates the measurements named by `config`.
pub fn prepare_input(config: &RunConfig) -> Result<(ModulusField, Option<Synthetic>)> {
    match &config.source {
        Source::Input(path) => {
            let field = load_modulus_field(File::open(path)?)?;
            if field.n() != config.n {
                return Err(Error::InvalidArgument(format!(
                    "input has {} nodes per circle, --n is {}",
                    field.n(),
                    config.n
                )));
            }
            Ok((field, None))
        }
        Source::Example1 => {
            let s = gen_example1(config.n, &config.generated_radii())?;
            Ok((s.field.clone(), Some(s)))
        }
        Source::Example2 { zeros } => {
            let zeros = zeros.clone().unwrap_or_else(|| draw_example2_zeros(config.seed.unwrap_or(DEFAULT_SEED)));
            let s = gen_example2(&zeros, config.n, &config.generated_radii())?;
            Ok((s.field.clone(), Some(s)))
        }
    }
}

/// Runs the pipeline without touching the file system.
pub fn execute(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let (measurements, truth) = prepare_input(config)?;
    let start = Instant::now();
    let result = match config.method {
        Method::Mqmv => mqmv_retrieve(&measurements, &config.min_search_config(&measurements.interior_radii()))?,
        Method::Mqpc => mqpc_retrieve(&measurements, &config.pencil_config())?,
    };
    let wall_time_s = start.elapsed().as_secs_f64();

    let (constant, truth_error) = match &truth {
        Some(s) => {
            let (c, e) = relative_error_circles(&s.truth, &result.reconstructed)?;
            (Some(c), Some(e))
        }
        None => (None, None),
    };
    let mut config = config.clone();
    if let Source::Example2 { zeros: None } = config.source {
        config.seed.get_or_insert(DEFAULT_SEED);
    }
    let report = RunReport {
        method: config.method,
        n: measurements.n(),
        zeros: group_zeros(result.inner.zeros()),
        m: result.inner.m(),
        stage_errors: result.stage_errors.iter().map(|&(k, err)| StageError { k, err }).collect(),
        final_error: result.final_error(),
        stop: result.stop,
        radii: measurements.interior_radii(),
        truth_zeros: truth.as_ref().map(|s| s.zeros.clone()),
        constant,
        truth_error,
        wall_time_s,
        config,
    };
    Ok(RunOutcome { report, result, measurements, truth })
}

/// Runs the pipeline and writes every artifact into `config.output_dir`.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    let outcome = execute(config)?;
    write_outputs(&outcome, &config.output_dir)?;
    Ok(outcome.report)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Static description of the charts the plot-data files support.
pub const CHARTS: &str = r#"{
  "charts": [
    {
      "title": "Measured vs reconstructed modulus",
      "files": ["modulus_measured.csv", "modulus_reconstructed.csv"],
      "x": "node angle 2*pi*j/n",
      "y": "modulus",
      "series": "one line per circle rho, measured solid, reconstructed dashed"
    },
    {
      "title": "Relative errors",
      "files": ["stage_errors.csv"],
      "x": "k (zeros extracted)",
      "y": "err (log scale)",
      "series": "single line"
    },
    {
      "title": "Zeros",
      "files": ["zeros.csv", "truth_zeros.csv"],
      "x": "re",
      "y": "im",
      "series": "recovered zeros as crosses, true zeros as circles, unit circle outline"
    },
    {
      "title": "Reconstruction",
      "files": ["reconstructed.csv", "truth.csv"],
      "x": "node angle 2*pi*j/n",
      "y": "re and im",
      "series": "one panel per circle rho; truth.csv is already rotated by the reported constant"
    }
  ]
}
"#;

pub fn write_outputs(outcome: &RunOutcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let report = &outcome.report;
    let mut w = create(dir, "report.json")?;
    w.write_all(report.to_json()?.as_bytes())?;
    w.write_all(b"\n")?;
    w.flush()?;

    write_complex_csv(&outcome.result.reconstructed, create(dir, "reconstructed.csv")?)?;
    store_modulus_field(&outcome.measurements, create(dir, "modulus_measured.csv")?)?;
    let moduli: Vec<_> = outcome.result.reconstructed.iter().map(|c| c.modulus()).collect();
    write_real_csv(&moduli, create(dir, "modulus_reconstructed.csv")?)?;

    let mut w = create(dir, "stage_errors.csv")?;
    writeln!(w, "k,err")?;
    for s in &report.stage_errors {
        writeln!(w, "{},{:.16e}", s.k, s.err)?;
    }
    w.flush()?;

    let mut w = create(dir, "zeros.csv")?;
    writeln!(w, "re,im,multiplicity")?;
    if report.m > 0 {
        writeln!(w, "{:.16e},{:.16e},{}", 0.0, 0.0, report.m)?;
    }
    for z in &report.zeros {
        writeln!(w, "{:.16e},{:.16e},{}", z.re, z.im, z.multiplicity)?;
    }
    w.flush()?;

    if let Some(s) = &outcome.truth {
        let c = report.constant.unwrap_or(Complex64::new(1.0, 0.0)).conj();
        let rotated: Vec<_> = s.truth.iter().map(|t| t.scale(c)).collect();
        write_complex_csv(&rotated, create(dir, "truth.csv")?)?;
        write_zeros_csv(&s.zeros, create(dir, "truth_zeros.csv")?)?;
    }

    fs::write(dir.join("charts.json"), CHARTS)?;
    Ok(())
}

/// Writes zeros in the `re,im` format.
pub fn write_zeros_csv<W: Write>(zeros: &[Complex64], sink: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
    w.write_record(["re", "im"])?;
    for z in zeros {
        w.write_record([format!("{:.16e}", z.re), format!("{:.16e}", z.im)])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads zeros in the `re,im` format.
pub fn load_zeros_csv<R: Read>(source: R) -> Result<Vec<Complex64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(source);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != ["re", "im"] {
        return Err(Error::Parse { row: 1, msg: format!("expected header \"re,im\", found {:?}", header.join(",")) });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.len() != 2 {
            return Err(Error::Parse { row, msg: format!("expected 2 fields, found {}", rec.len()) });
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse { row, msg: format!("bad number {s:?}") })
        };
        out.push(Complex64::new(parse(&rec[0])?, parse(&rec[1])?));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedZero {
    pub recovered: Complex64,
    pub truth: Complex64,
    pub distance: f64,
}

/// Minimum-total-distance assignment between two zero multisets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroMatching {
    pub pairs: Vec<MatchedZero>,
    pub unmatched_recovered: Vec<Complex64>,
    pub unmatched_truth: Vec<Complex64>,
}

impl ZeroMatching {
    /// Largest matched distance, or infinity when the counts differ.
    pub fn max_distance(&self) -> f64 {
        if !self.unmatched_recovered.is_empty() || !self.unmatched_truth.is_empty() {
            return f64::INFINITY;
        }
        self.pairs.iter().map(|p| p.distance).fold(0.0, f64::max)
    }
}

pub fn match_zeros(recovered: &[Complex64], truth: &[Complex64]) -> ZeroMatching {
    let swap = recovered.len() > truth.len();
    let (rows, cols) = if swap { (truth, recovered) } else { (recovered, truth) };
    let mut pairs = Vec::with_capacity(rows.len());
    let mut used = vec![false; cols.len()];
    if !rows.is_empty() {
        let weights = Matrix::from_fn(rows.len(), cols.len(), |(i, j)| ((rows[i] - cols[j]).norm() * 1e15) as i64);
        let (_, assign) = kuhn_munkres_min(&weights);
        for (i, &j) in assign.iter().enumerate() {
            used[j] = true;
            let (rec, tru) = if swap { (cols[j], rows[i]) } else { (rows[i], cols[j]) };
            pairs.push(MatchedZero { recovered: rec, truth: tru, distance: (rec - tru).norm() });
        }
    }
    let left: Vec<Complex64> = cols.iter().zip(&used).filter(|(_, &u)| !u).map(|(&z, _)| z).collect();
    let (unmatched_recovered, unmatched_truth) = if swap { (left, vec![]) } else { (vec![], left) };
    ZeroMatching { pairs, unmatched_recovered, unmatched_truth }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub method: Method,
    pub n: usize,
    pub stage_errors: Vec<StageError>,
    pub final_error: f64,
    pub matching: Option<ZeroMatching>,
}

/// `err_k` by `k` (columns) and by run (rows), with zero-matching distances.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
}

impl ErrorTable {
    pub fn push(&mut self, report: &RunReport, truth_zeros: Option<&[Complex64]>) {
        self.rows.push(ErrorRow {
            method: report.method,
            n: report.n,
            stage_errors: report.stage_errors.clone(),
            final_error: report.final_error,
            matching: truth_zeros.map(|t| match_zeros(&report.all_zeros(), t)),
        });
    }

    /// Long format: `method,n,k,err`.
    pub fn write_csv<W: Write>(&self, mut sink: W) -> Result<()> {
        writeln!(sink, "method,n,k,err")?;
        for row in &self.rows {
            for s in &row.stage_errors {
                writeln!(sink, "{},{},{},{:.16e}", row.method, row.n, s.k, s.err)?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for ErrorTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kmax = self.rows.iter().flat_map(|r| r.stage_errors.iter().map(|s| s.k)).max().unwrap_or(0);
        write!(f, "{:<6} {:>6}", "method", "n")?;
        for k in 0..=kmax {
            write!(f, " {:>11}", format!("k={k}"))?;
        }
        writeln!(f, " {:>11}", "max |dz|")?;
        for row in &self.rows {
            write!(f, "{:<6} {:>6}", row.method.to_string(), row.n)?;
            for k in 0..=kmax {
                match row.stage_errors.iter().find(|s| s.k == k) {
                    Some(s) => write!(f, " {:>11.4e}", s.err)?,
                    None => write!(f, " {:>11}", "-")?,
                }
            }
            match &row.matching {
                Some(m) => writeln!(f, " {:>11.4e}", m.max_distance())?,
                None => writeln!(f, " {:>11}", "-")?,
            }
        }
        Ok(())
    }
}

/// Error table for a single report against the true zeros.
pub fn compare_report(report: &RunReport, truth_zeros: &[Complex64]) -> ErrorTable {
    let mut table = ErrorTable::default();
    table.push(report, Some(truth_zeros));
    table
}
