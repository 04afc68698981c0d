//! Configuration parsing, experiment dispatch and CSV/SVG output for the
//! `halfspace-airy` command-line tool.
//!
//! A configuration file holds `key = value` lines; `#` starts a comment and
//! blank lines are ignored.  Each command accepts a fixed set of keys and
//! rejects every other key.  Lists are comma-separated.

use crate::ensembles::{
    enumerate_schur, rng_from_seed, run_glauber, sample_avoiding_rbm, sample_interlacing_rejection, sample_reverse_walk,
    schur_chain_samples, ChainSchedule, Floor, GlauberChain, SchurParams,
};
use crate::fredholm::{
    gap_discretized, gap_series_on_grid, AiryEmbeddingKernel, AiryLimitKernel, CrossKernel, LimitKernel, PfaffianKernel,
    ReferenceMeasure, DEFAULT_N_MAX,
};
use crate::kernels::{
    kernel_airy_extended, kernel_cross, kernel_geo, kernel_limit, kernel_pre_n, GeoParams, KernelOptions, LatticeSpec,
    ScalingParams,
};
use crate::skewlin::{determinant, pfaffian, pfaffian_bruteforce, KernelValue, SkewMatrix};
use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Tool name and version echoed in every output.
pub const TOOL_VERSION: &str = concat!("halfspace-airy ", env!("CARGO_PKG_VERSION"));

/// Default time parameter of the `airy-limit` gap kernel.
pub const DEFAULT_AIRY_LIMIT_T: f64 = 16.0;

/// The five experiment commands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    KernelEval,
    GapProb,
    Sample,
    Converge,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::KernelEval => "kernel-eval",
            Command::GapProb => "gap-prob",
            Command::Sample => "sample",
            Command::Converge => "converge",
            Command::Validate => "validate",
        }
    }

    /// Keys accepted in the configuration of this command.
    pub fn allowed_keys(self) -> &'static [&'static str] {
        match self {
            Command::KernelEval => &["kernel", "q", "varpi", "c", "N", "s", "t", "x", "y", "diagonal", "panels", "seed"],
            Command::GapProb => {
                &["kernel", "q", "varpi", "t", "s", "method", "grid", "cutoff", "n_max", "panels", "seed"]
            }
            Command::Sample => &[
                "ensemble", "T", "y", "q", "floor", "n_samples", "n_steps", "max_attempts", "N", "M", "varpi", "c",
                "k_max", "depth_cutoff", "burn_in", "thin", "times", "b", "mu", "grid", "seed",
            ],
            Command::Converge => &["q", "varpi", "s", "t", "x", "y", "N", "panels", "seed"],
            Command::Validate => &["suite", "seed"],
        }
    }
}

impl FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kernel-eval" => Ok(Command::KernelEval),
            "gap-prob" => Ok(Command::GapProb),
            "sample" => Ok(Command::Sample),
            "converge" => Ok(Command::Converge),
            "validate" => Ok(Command::Validate),
            other => Err(Error::Usage(format!(
                "unknown command '{other}' (use kernel-eval|gap-prob|sample|converge|validate)"
            ))),
        }
    }
}

/// A parsed configuration: the command and its raw key/value pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    params: BTreeMap<String, String>,
}

impl ExperimentConfig {
    /// Parses `key = value` lines, rejecting unknown and duplicate keys.
    pub fn parse(command: Command, text: &str) -> Result<Self> {
        let allowed = command.allowed_keys();
        let mut params = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("line {}: expected 'key = value', found '{line}'", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !allowed.contains(&key) {
                return Err(Error::Usage(format!(
                    "line {}: unknown key '{key}' for command {} (allowed: {})",
                    lineno + 1,
                    command.name(),
                    allowed.join(", ")
                )));
            }
            if value.is_empty() {
                return Err(Error::Usage(format!("line {}: key '{key}' has an empty value", lineno + 1)));
            }
            if params.insert(key.to_string(), value.to_string()).is_some() {
                return Err(Error::Usage(format!("line {}: duplicate key '{key}'", lineno + 1)));
            }
        }
        Ok(Self { command, params })
    }

    /// Reads and parses a configuration file.
    pub fn from_file(command: Command, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::parse(command, &text)
    }

    /// Sets (or overrides) the seed.
    pub fn set_seed(&mut self, seed: u64) {
        self.params.insert("seed".into(), seed.to_string());
    }

    /// All parameters in key order.
    pub fn params(&self) -> impl Iterator<Item = (&str, &str)> {
        self.params.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }

    fn required(&self, key: &str) -> Result<&str> {
        self.raw(key).ok_or_else(|| Error::Usage(format!("missing required key '{key}' for command {}", self.command.name())))
    }

    fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T> {
        v.parse().map_err(|_| Error::Usage(format!("key '{key}': cannot parse '{v}'")))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key).map(|v| Self::parse_value(key, v)).transpose()
    }

    fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn get_required<T: FromStr>(&self, key: &str) -> Result<T> {
        Self::parse_value(key, self.required(key)?)
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.raw(key)
            .map(|v| v.split(',').map(|p| Self::parse_value(key, p.trim())).collect())
            .transpose()
    }

    fn list_or<T: FromStr + Clone>(&self, key: &str, default: &[T]) -> Result<Vec<T>> {
        Ok(self.list(key)?.unwrap_or_else(|| default.to_vec()))
    }

    fn seed(&self) -> Result<u64> {
        self.get_or("seed", 0)
    }

    fn kernel_options(&self) -> Result<KernelOptions> {
        let mut opts = KernelOptions::default();
        if let Some(p) = self.get::<usize>("panels")? {
            if p == 0 {
                return Err(Error::Usage("key 'panels' must be positive".into()));
            }
            opts.panels.panels = p;
        }
        if let Some(d) = self.raw("diagonal") {
            opts.diagonal = d.parse()?;
        }
        Ok(opts)
    }
}

/// Output of one experiment: metadata, header and numeric rows.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    /// `(key, value)` pairs written as `# key = value` lines.
    pub metadata: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ResultTable {
    /// An empty table with the given header and the configuration echoed as
    /// metadata.
    pub fn new(cfg: &ExperimentConfig, header: &[&str]) -> Self {
        let mut metadata = vec![("tool".to_string(), TOOL_VERSION.to_string()), ("command".into(), cfg.command.name().into())];
        metadata.extend(cfg.params().map(|(k, v)| (k.to_string(), v.to_string())));
        if cfg.raw("seed").is_none() {
            metadata.push(("seed".into(), "0".into()));
        }
        Self { metadata, header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    /// Appends a row, checking its width.
    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::Consistency(format!("row of width {} for a header of width {}", row.len(), self.header.len())));
        }
        self.rows.push(row);
        Ok(())
    }

    /// Adds a metadata entry.
    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    /// Index of a header column.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Rows of a validation table whose `pass` column is 0.
    pub fn validation_failures(&self) -> Vec<usize> {
        match self.column("pass") {
            Some(c) => self.rows.iter().enumerate().filter(|(_, r)| r[c] == 0.0).map(|(i, _)| i).collect(),
            None => Vec::new(),
        }
    }

    /// CSV text: `#` metadata lines, the header, then the rows.  Numbers use
    /// the shortest representation that reads back to the same `f64`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k} = {v}");
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses text produced by [`ResultTable::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut metadata = Vec::new();
        let mut lines = text.lines();
        let header = loop {
            let line = lines.next().ok_or_else(|| Error::InvalidInput("CSV has no header line".into()))?;
            match line.strip_prefix('#') {
                Some(meta) => {
                    let (k, v) = meta.split_once('=').unwrap_or((meta, ""));
                    metadata.push((k.trim().to_string(), v.trim().to_string()));
                }
                None => break line.split(',').map(str::to_string).collect::<Vec<_>>(),
            }
        };
        let rows = lines
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.split(',')
                    .map(|c| c.parse::<f64>().map_err(|_| Error::InvalidInput(format!("bad CSV cell '{c}'"))))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { metadata, header, rows })
    }

    /// SVG drawing of a sample dump: one polyline per `(sample_id,
    /// curve_index)` with time on the horizontal axis.
    pub fn to_svg(&self) -> Result<String> {
        let col = |name: &str| {
            self.column(name).ok_or_else(|| Error::InvalidInput(format!("SVG output needs a '{name}' column")))
        };
        let (cs, cc, ct, cv) = (col("sample_id")?, col("curve_index")?, col("time")?, col("value")?);
        let mut curves: BTreeMap<(u64, u64), Vec<(f64, f64)>> = BTreeMap::new();
        for r in &self.rows {
            curves.entry((r[cs] as u64, r[cc] as u64)).or_default().push((r[ct], r[cv]));
        }
        let (w, h, pad) = (800.0, 500.0, 20.0);
        let bounds = |f: fn(&(f64, f64)) -> f64| {
            let vals = curves.values().flatten().map(f);
            let lo = vals.clone().fold(f64::INFINITY, f64::min);
            let hi = vals.fold(f64::NEG_INFINITY, f64::max);
            if lo.is_finite() && hi > lo {
                (lo, hi)
            } else if lo.is_finite() {
                (lo - 1.0, lo + 1.0)
            } else {
                (0.0, 1.0)
            }
        };
        let (t0, t1) = bounds(|p| p.0);
        let (v0, v1) = bounds(|p| p.1);
        let mut out = String::new();
        let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "<!-- {k} = {} -->", v.replace("--", "- -"));
        }
        let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
        for ((_, curve), pts) in &curves {
            let coords: Vec<String> = pts
                .iter()
                .map(|(t, v)| {
                    let x = pad + (t - t0) / (t1 - t0) * (w - 2.0 * pad);
                    let y = h - pad - (v - v0) / (v1 - v0) * (h - 2.0 * pad);
                    format!("{x:.3},{y:.3}")
                })
                .collect();
            let color = palette[*curve as usize % palette.len()];
            let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, coords.join(" "));
        }
        out.push_str("</svg>\n");
        Ok(out)
    }
}

/// Output format chosen from the file extension (`.svg` → SVG, else CSV).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Svg,
}

impl OutputFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("svg") => OutputFormat::Svg,
            _ => OutputFormat::Csv,
        }
    }
}

/// Writes the table to `path` in the given format.
pub fn write_outputs(table: &ResultTable, path: &Path, format: OutputFormat) -> Result<()> {
    let text = match format {
        OutputFormat::Csv => table.to_csv(),
        OutputFormat::Svg => table.to_svg()?,
    };
    std::fs::write(path, text).map_err(|source| Error::Io { path: PathBuf::from(path), source })
}

/// Runs the experiment described by `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    match cfg.command {
        Command::KernelEval => kernel_eval(cfg),
        Command::GapProb => gap_prob(cfg),
        Command::Sample => sample(cfg),
        Command::Converge => converge(cfg),
        Command::Validate => validate(cfg),
    }
}

const KERNEL_HEADER: [&str; 12] =
    ["s", "x", "t", "y", "k11_re", "k11_im", "k12_re", "k12_im", "k21_re", "k21_im", "k22_re", "k22_im"];

fn kernel_row(s: f64, x: f64, t: f64, y: f64, k: &KernelValue) -> Vec<f64> {
    let mut row = vec![s, x, t, y];
    for v in [k.k11, k.k12, k.k21, k.k22] {
        row.push(v.re);
        row.push(v.im);
    }
    row
}

fn kernel_eval(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let kind = cfg.required("kernel")?;
    let opts = cfg.kernel_options()?;
    let (s, t) = (cfg.get_or("s", 0.0)?, cfg.get_or("t", 0.0)?);
    let xs: Vec<f64> = cfg.list_or("x", &[0.0])?;
    let ys: Vec<f64> = cfg.list_or("y", &[0.0])?;
    let varpi = cfg.get_or("varpi", 0.0)?;
    let q = cfg.get_or("q", 0.5)?;
    let pairs: Vec<(f64, f64)> = xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).collect();
    let mut table = ResultTable::new(cfg, &KERNEL_HEADER);
    let rows: Vec<Vec<f64>> = match kind {
        "cross" => pairs
            .par_iter()
            .map(|&(x, y)| kernel_cross(s, x, t, y, varpi, &opts).map(|k| kernel_row(s, x, t, y, &k)))
            .collect::<Result<_>>()?,
        "limit" => {
            let p = ScalingParams::new(q, varpi)?;
            pairs
                .par_iter()
                .map(|&(x, y)| kernel_limit(s, x, t, y, &p, &opts).map(|k| kernel_row(s, x, t, y, &k)))
                .collect::<Result<_>>()?
        }
        "prelimit" => {
            let p = ScalingParams::new(q, varpi)?;
            let n: u64 = cfg.get_required("N")?;
            let (ls, lt) = (LatticeSpec::new(s, n, &p)?, LatticeSpec::new(t, n, &p)?);
            table.note("lattice_snapping", "x and y are moved to the nearest lattice points");
            pairs
                .par_iter()
                .map(|&(x, y)| {
                    let (x, y) = (ls.nearest(x), lt.nearest(y));
                    kernel_pre_n(s, x, t, y, &p, n, &opts).map(|k| kernel_row(s, x, t, y, &k))
                })
                .collect::<Result<_>>()?
        }
        "geo" => {
            let n: u64 = cfg.get_required("N")?;
            let c = match cfg.get::<f64>("c")? {
                Some(c) => c,
                None => ScalingParams::new(q, varpi)?.c_of_n(n),
            };
            let p = GeoParams::new(q, c, n)?;
            let int = |v: f64, key: &str| {
                if v.fract() == 0.0 && v.is_finite() {
                    Ok(v as i64)
                } else {
                    Err(Error::Usage(format!("key '{key}': the geo kernel needs integer values, found {v}")))
                }
            };
            let (mu, mv) = (int(s, "s")?, int(t, "t")?);
            if mu < 0 || mv < 0 {
                return Err(Error::Usage("the geo kernel needs non-negative times".into()));
            }
            pairs
                .par_iter()
                .map(|&(x, y)| {
                    let k = kernel_geo(mu as u64, int(x, "x")?, mv as u64, int(y, "y")?, &p, &opts)?;
                    Ok(kernel_row(s, x, t, y, &k))
                })
                .collect::<Result<_>>()?
        }
        "airy" => pairs
            .par_iter()
            .map(|&(x, y)| {
                let kxy = kernel_airy_extended(s, x, t, y, &opts)?;
                let kyx = kernel_airy_extended(t, y, s, x, &opts)?;
                let zero = C64::new(0.0, 0.0);
                let k = KernelValue::new(zero, C64::new(kxy, 0.0), C64::new(-kyx, 0.0), zero);
                Ok(kernel_row(s, x, t, y, &k))
            })
            .collect::<Result<_>>()?,
        other => return Err(Error::Usage(format!("unknown kernel '{other}' (use cross|limit|prelimit|geo|airy)"))),
    };
    for r in rows {
        table.push(r)?;
    }
    Ok(table)
}

fn gap_prob(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let kind = cfg.required("kernel")?;
    let opts = cfg.kernel_options()?;
    let thresholds: Vec<f64> = cfg.list_or("s", &[0.0])?;
    let method = cfg.raw("method").unwrap_or("discretized");
    let grid = cfg.get_or("grid", crate::fredholm::F2_GRID)?;
    let cutoff = cfg.get_or("cutoff", crate::fredholm::F2_CUT)?;
    let n_max = cfg.get_or("n_max", DEFAULT_N_MAX)?;
    let varpi = cfg.get_or("varpi", 0.0)?;
    let q = cfg.get_or("q", 0.5)?;
    let (kernel, time): (Box<dyn PfaffianKernel>, f64) = match kind {
        "airy-limit" => (Box::new(AiryLimitKernel { t: cfg.get_or("t", DEFAULT_AIRY_LIMIT_T)?, varpi, opts }), 0.0),
        "airy" => (Box::new(AiryEmbeddingKernel { opts }), 0.0),
        "cross" => {
            let t = cfg.get_or("t", 0.0)?;
            (Box::new(CrossKernel { varpi, opts }), t)
        }
        "limit" => {
            let t = cfg.get_or("t", 1.0)?;
            (Box::new(LimitKernel { params: ScalingParams::new(q, varpi)?, opts }), t)
        }
        other => return Err(Error::Usage(format!("unknown kernel '{other}' (use airy-limit|airy|cross|limit)"))),
    };
    let reference = ReferenceMeasure::Lebesgue { time };
    let mut table = ResultTable::new(cfg, &["s", "value", "n_terms", "imaginary_residual"]);
    for &s in &thresholds {
        let r = match method {
            "discretized" => gap_discretized(s, kernel.as_ref(), &reference, grid, s.max(0.0) + cutoff)?,
            "series" => gap_series_on_grid(s, kernel.as_ref(), &reference, n_max, s.max(0.0) + cutoff, grid)?,
            other => return Err(Error::Usage(format!("unknown method '{other}' (use discretized|series)"))),
        };
        table.push(vec![s, r.value, r.n_terms_used as f64, r.imaginary_residual])?;
    }
    Ok(table)
}

const SAMPLE_HEADER: [&str; 4] = ["sample_id", "curve_index", "time", "value"];

fn broadcast(v: Vec<f64>, k: usize, key: &str) -> Result<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; k]),
        n if n == k => Ok(v),
        n => Err(Error::Usage(format!("key '{key}' has {n} entries; expected 1 or {k}"))),
    }
}

fn sample(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let kind = cfg.required("ensemble")?;
    let seed = cfg.seed()?;
    let n_samples: u64 = cfg.get_or("n_samples", 1)?;
    let mut table = ResultTable::new(cfg, &SAMPLE_HEADER);
    let ids: Vec<u64> = (0..n_samples).collect();
    // each sample uses seed + sample_id, so the dump is independent of
    // the thread count
    let dumps: Vec<Vec<Vec<f64>>> = match kind {
        "walk" => {
            let (horizon, y, q): (usize, i64, f64) = (cfg.get_required("T")?, cfg.get_or("y", 0)?, cfg.get_required("q")?);
            ids.par_iter()
                .map(|&id| {
                    let p = sample_reverse_walk(horizon, y, q, seed.wrapping_add(id))?;
                    Ok(p.values().iter().enumerate().map(|(j, &v)| vec![id as f64, 1.0, j as f64, v as f64]).collect())
                })
                .collect::<Result<_>>()?
        }
        "rejection" | "glauber" => {
            let horizon: usize = cfg.get_required("T")?;
            let y: Vec<i64> = cfg.list("y")?.ok_or_else(|| Error::Usage("missing required key 'y'".into()))?;
            let q = broadcast(cfg.list_or("q", &[0.5])?, y.len(), "q")?;
            let floor = match cfg.get::<i64>("floor")? {
                Some(g) => Floor::Path(vec![g; horizon + 1]),
                None => Floor::NegInfinity,
            };
            let max_attempts = cfg.get_or("max_attempts", 1_000_000u64)?;
            let n_steps = cfg.get_or("n_steps", 100_000u64)?;
            ids.par_iter()
                .map(|&id| {
                    let s = seed.wrapping_add(id);
                    let ens = if kind == "rejection" {
                        sample_interlacing_rejection(horizon, &y, &q, &floor, s, max_attempts)?.0
                    } else {
                        run_glauber(horizon, &y, &q, &floor, n_steps, s)?
                    };
                    ens.check()?;
                    Ok(ens
                        .paths
                        .iter()
                        .enumerate()
                        .flat_map(|(i, p)| {
                            p.values().iter().enumerate().map(move |(j, &v)| vec![id as f64, (i + 1) as f64, j as f64, v as f64])
                        })
                        .collect())
                })
                .collect::<Result<_>>()?
        }
        "schur" => {
            let n: usize = cfg.get_required("N")?;
            let m: usize = cfg.get_required("M")?;
            let q: f64 = cfg.get_required("q")?;
            let c = match cfg.get::<f64>("c")? {
                Some(c) => c,
                None => ScalingParams::new(q, cfg.get_or("varpi", 0.0)?)?.c_of_n(n as u64),
            };
            let params = SchurParams {
                n,
                m,
                q,
                c,
                k_max: cfg.get_or("k_max", n)?,
                depth_cutoff: cfg.get_or("depth_cutoff", 10 * (n + m) as u64 + 50)?,
            };
            let default = ChainSchedule::default_for(&params);
            let schedule = ChainSchedule {
                burn_in_sweeps: cfg.get_or("burn_in", default.burn_in_sweeps)?,
                thin_sweeps: cfg.get_or("thin", default.thin_sweeps)?,
            };
            table.note("c", c);
            let times: Option<Vec<f64>> = cfg.list("times")?;
            let scaling = ScalingParams::new(q, cfg.get_or("varpi", 0.0)?)?;
            ids.par_iter()
                .map(|&id| {
                    let seq = schur_chain_samples(params, schedule, 1, seed.wrapping_add(id))?.remove(0);
                    let mut rows = Vec::new();
                    match &times {
                        None => {
                            for (j, lambda) in seq.iter().enumerate() {
                                for i in 1..=params.k_max {
                                    rows.push(vec![id as f64, i as f64, j as f64, lambda.part(i) as f64 - i as f64]);
                                }
                            }
                        }
                        Some(times) => {
                            let cfgs = crate::ensembles::rescale_samples(&[seq], &scaling, n as u64, times, params.k_max)?;
                            for (idx, p) in cfgs[0].iter().enumerate() {
                                let i = idx % params.k_max + 1;
                                rows.push(vec![id as f64, i as f64, p.t, p.x]);
                            }
                        }
                    }
                    Ok(rows)
                })
                .collect::<Result<_>>()?
        }
        "rbm" => {
            let b: f64 = cfg.get_required("b")?;
            let y: Vec<f64> = cfg.list("y")?.ok_or_else(|| Error::Usage("missing required key 'y'".into()))?;
            let mu = match cfg.list::<f64>("mu")? {
                Some(mu) => broadcast(mu, y.len(), "mu")?,
                None => {
                    let p = ScalingParams::new(0.5, cfg.get_or("varpi", 0.0)?)?;
                    (1..=y.len()).map(|i| p.drift(i)).collect()
                }
            };
            let grid = cfg.get_or("grid", 512usize)?;
            let max_attempts = cfg.get_or("max_attempts", 1_000_000u64)?;
            ids.par_iter()
                .map(|&id| {
                    let smp = sample_avoiding_rbm(b, &y, &mu, None, grid, seed.wrapping_add(id), max_attempts)?;
                    Ok(smp
                        .curves
                        .iter()
                        .enumerate()
                        .flat_map(|(i, c)| {
                            let grid = &smp.grid;
                            c.iter().enumerate().map(move |(r, &v)| vec![id as f64, (i + 1) as f64, grid[r], v])
                        })
                        .collect())
                })
                .collect::<Result<_>>()?
        }
        other => return Err(Error::Usage(format!("unknown ensemble '{other}' (use walk|rejection|glauber|schur|rbm)"))),
    };
    for row in dumps.into_iter().flatten() {
        table.push(row)?;
    }
    Ok(table)
}

fn converge(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let p = ScalingParams::new(cfg.get_or("q", 0.5)?, cfg.get_or("varpi", 0.0)?)?;
    let opts = cfg.kernel_options()?;
    let (s, t, x, y) = (cfg.get_or("s", 0.0)?, cfg.get_or("t", 0.0)?, cfg.get_or("x", 0.5)?, cfg.get_or("y", -0.5)?);
    let ns: Vec<u64> = cfg.list_or("N", &[1_000, 10_000, 100_000])?;
    let mut table = ResultTable::new(cfg, &["N", "x", "y", "err11", "err12", "err21", "err22"]);
    let rows: Vec<Vec<f64>> = ns
        .par_iter()
        .map(|&n| {
            let (ls, lt) = (LatticeSpec::new(s, n, &p)?, LatticeSpec::new(t, n, &p)?);
            let (xn, yn) = (ls.nearest(x), lt.nearest(y));
            let kn = kernel_pre_n(s, xn, t, yn, &p, n, &opts)?;
            let kl = kernel_limit(s, xn, t, yn, &p, &opts)?;
            Ok(vec![
                n as f64,
                xn,
                yn,
                (kn.k11 - kl.k11).norm(),
                (kn.k12 - kl.k12).norm(),
                (kn.k21 - kl.k21).norm(),
                (kn.k22 - kl.k22).norm(),
            ])
        })
        .collect::<Result<_>>()?;
    for r in rows {
        table.push(r)?;
    }
    Ok(table)
}

/// A random complex skew matrix with standard normal real and imaginary
/// parts above the diagonal.
pub fn random_skew(dim: usize, rng: &mut impl Rng) -> Result<SkewMatrix> {
    use rand_distr::{Distribution, StandardNormal};
    SkewMatrix::from_upper(dim, |_, _| {
        let (a, b): (f64, f64) = (StandardNormal.sample(rng), StandardNormal.sample(rng));
        C64::new(a, b)
    })
}

fn to_dense(a: &SkewMatrix) -> DMatrix<C64> {
    DMatrix::from_fn(a.dim(), a.dim(), |i, j| a.get(i, j))
}

fn validate(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let suite = cfg.required("suite")?;
    let seed = cfg.seed()?;
    let mut table = ResultTable::new(cfg, &["check", "measured", "tolerance", "pass"]);
    let mut check = |id: f64, measured: f64, tol: f64| table.push(vec![id, measured, tol, f64::from(u8::from(measured <= tol))]);
    match suite {
        "pfaffian" => {
            let mut rng = rng_from_seed(seed);
            let (mut e_det, mut e_brute, mut e_congr) = (0f64, 0f64, 0f64);
            for trial in 0..200 {
                let dim = 2 * (1 + trial % 4);
                let a = random_skew(dim, &mut rng)?;
                let pf = pfaffian(&a);
                let det = determinant(&to_dense(&a));
                e_det = e_det.max((pf * pf - det).norm() / det.norm().max(1.0));
                let brute = pfaffian_bruteforce(&a)?;
                e_brute = e_brute.max((pf - brute).norm() / brute.norm().max(1e-300));
                let r = DMatrix::from_fn(dim, dim, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
                let rar = &r * to_dense(&a) * r.transpose();
                let b = SkewMatrix::from_upper(dim, |i, j| rar[(i, j)])?;
                let lhs = pfaffian(&b);
                let rhs = determinant(&r) * pf;
                e_congr = e_congr.max((lhs - rhs).norm() / rhs.norm().max(1.0));
            }
            check(1.0, e_det, 1e-9)?;
            check(2.0, e_brute, 1e-12)?;
            check(3.0, e_congr, 1e-8)?;
        }
        "contour" => {
            let c = crate::contour::make_circle(1.0)?;
            let v = crate::contour::integrate(|z| 1.0 / z, &c)?;
            check(1.0, (v - crate::contour::two_pi_i()).norm(), 1e-10)?;
        }
        "skew" => {
            let opts = KernelOptions::default();
            let p = ScalingParams::new(0.5, 0.0)?;
            let mut worst = 0f64;
            for (s, x, t, y) in [(0.3, 0.5, 1.0, -0.2), (1.2, -0.4, 0.6, 0.9), (0.5, 0.1, 0.5, 0.7)] {
                let a = kernel_cross(s, x, t, y, 0.5, &opts)?;
                let b = kernel_cross(t, y, s, x, 0.5, &opts)?;
                worst = worst.max(a.sub(&b.neg_transpose()).max_norm());
                let a = kernel_limit(s, x, t, y, &p, &opts)?;
                let b = kernel_limit(t, y, s, x, &p, &opts)?;
                worst = worst.max(a.sub(&b.neg_transpose()).max_norm());
            }
            check(1.0, worst, 1e-8)?;
        }
        "geo-oracle" => {
            let params = SchurParams { n: 2, m: 2, q: 0.1, c: 1.0, k_max: 2, depth_cutoff: 12 };
            let all = enumerate_schur(&params)?;
            let gp = GeoParams::new(0.1, 1.0, 2)?;
            let opts = KernelOptions::default();
            let mut worst = 0f64;
            for (j, x) in [(0u64, -1i64), (0, 0), (1, -1), (1, 0), (2, 1)] {
                let exact: f64 = all
                    .iter()
                    .filter(|(seq, _)| (1..=4).any(|i| seq[j as usize].get(i - 1).copied().unwrap_or(0) as i64 - i as i64 == x))
                    .map(|(_, p)| p)
                    .sum();
                let k = kernel_geo(j, x, j, x, &gp, &opts)?;
                worst = worst.max((k.k12.re - exact).abs());
            }
            check(1.0, worst, 1e-6)?;
        }
        "sampler" => {
            let floor = Floor::Path(vec![-2, -2]);
            let mut chain = GlauberChain::new(1, &[0], &[0.5], &floor)?;
            let mut rng = rng_from_seed(seed);
            let steps = 100_000;
            let mut counts = [0f64; 3];
            for _ in 0..steps {
                chain.step(&mut rng);
                counts[(-chain.value(0, 0)) as usize] += 1.0 / steps as f64;
            }
            let exact = [4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0];
            let tv = 0.5 * counts.iter().zip(exact).map(|(c, e)| (c - e).abs()).sum::<f64>();
            check(1.0, tv, 0.01)?;
        }
        other => {
            return Err(Error::Usage(format!("unknown suite '{other}' (use pfaffian|contour|skew|geo-oracle|sampler)")))
        }
    }
    Ok(table)
}
