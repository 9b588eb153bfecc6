//! Experiment driver: multi-run training, cross-context evaluation and
//! HV/EU/SP report tables.
//!
//! Layout of an output directory:
//!
//! ```text
//! <out>/<name>.table.json        ReportTable
//! <out>/<name>.table.txt         rendered table
//! <out>/fronts/<name>/run<r>/<context>.csv
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::context::{sample_uwall, AssetLibrary, ContextSampler, ContextSpec, TrainMode, UWallBounds, UWallVector};
use crate::env::EnvConfig;
use crate::error::{Error, Result};
use crate::metrics::{evaluate_front, pareto_filter, reference_point, EuConfig, ParetoFront};
use crate::morl::{evaluate_policy, mix_seed, par_map, train_with_sampler, EnvFactory, EvalProtocol, TrainerConfig};

const STREAM_RUN: u64 = 100;
const STREAM_EVAL: u64 = 101;

/// Envelope of a context: explicit U-values, a seeded draw, or the bounds midpoint.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContextEntry {
    /// Column label; defaults to the climate id.
    pub label: Option<String>,
    /// Defaults to the training climate.
    pub climate_id: Option<String>,
    pub u_wall: Option<UWallVector>,
    pub u_wall_seed: Option<u64>,
}

impl ContextEntry {
    pub fn resolve(&self, layout_id: &str, default_climate: &str) -> Result<(String, ContextSpec)> {
        let climate = self.climate_id.clone().unwrap_or_else(|| default_climate.to_string());
        let u = match (&self.u_wall, self.u_wall_seed) {
            (Some(_), Some(_)) => {
                return Err(Error::Validation(
                    "context sets both u_wall and u_wall_seed".into(),
                ))
            }
            (Some(u), None) => *u,
            (None, Some(seed)) => sample_uwall(seed),
            (None, None) => UWallVector::midpoint(),
        };
        let label = self.label.clone().unwrap_or_else(|| climate.clone());
        Ok((label, ContextSpec::new(layout_id, climate, u)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSpec {
    pub eu: EuConfig,
    /// Fractional margin below the union minimum for the shared reference point.
    pub reference_margin: f64,
    /// Overrides the derived reference point.
    pub reference_point: Option<Vec<f64>>,
    /// Display divisors recorded in the table metadata.
    pub scale: ScaleFactors,
}

impl Default for MetricsSpec {
    fn default() -> Self {
        Self {
            eu: EuConfig::default(),
            reference_margin: 0.01,
            reference_point: None,
            scale: ScaleFactors::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub layout_id: String,
    pub mode: TrainMode,
    pub train_context: ContextEntry,
    /// Dynamic mode only: also resample the climate from this list.
    #[serde(default)]
    pub train_climates: Vec<String>,
    /// Dynamic mode only: U-value sampling box; defaults to the standard bounds.
    #[serde(default)]
    pub train_bounds: Option<UWallBounds>,
    pub eval_contexts: Vec<ContextEntry>,
    #[serde(default)]
    pub env: EnvConfig,
    #[serde(default)]
    pub trainer: TrainerConfig,
    #[serde(default)]
    pub metrics: MetricsSpec,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Explicit per-run trainer seeds, overriding derivation from `master_seed`.
    #[serde(default)]
    pub run_seeds: Option<Vec<u64>>,
}

fn default_runs() -> usize {
    5
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn seeds(&self) -> Vec<u64> {
        match &self.run_seeds {
            Some(s) => s.clone(),
            None => (0..self.runs as u64)
                .map(|r| mix_seed(self.master_seed, STREAM_RUN, r))
                .collect(),
        }
    }

    pub fn train_spec(&self) -> Result<ContextSpec> {
        let climate = self
            .train_context
            .climate_id
            .as_deref()
            .ok_or_else(|| Error::Validation("train_context.climate_id is required".into()))?;
        Ok(self.train_context.resolve(&self.layout_id, climate)?.1)
    }

    /// `(label, context)` per evaluation column.
    pub fn eval_specs(&self) -> Result<Vec<(String, ContextSpec)>> {
        let train = self.train_spec()?;
        self.eval_contexts
            .iter()
            .map(|e| e.resolve(&self.layout_id, &train.climate_id))
            .collect()
    }

    pub fn validate(&self, library: &AssetLibrary) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if self.runs == 0 {
            return bad("runs must be >= 1".into());
        }
        if let Some(s) = &self.run_seeds {
            if s.len() != self.runs {
                return bad(format!("run_seeds has {} entries, runs is {}", s.len(), self.runs));
            }
        }
        if self.eval_contexts.is_empty() {
            return bad("at least one eval context is required".into());
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad(format!("invalid experiment name '{}'", self.name));
        }
        self.env.validate()?;
        self.trainer.validate(self.env.num_objectives())?;
        let mut labels = BTreeSet::new();
        for (label, ctx) in std::iter::once(("train".to_string(), self.train_spec()?)).chain(self.eval_specs()?) {
            library.resolve(&ctx)?;
            if label != "train" && !labels.insert(label.clone()) {
                return bad(format!("duplicate eval context label '{label}'"));
            }
        }
        for c in &self.train_climates {
            library.load_weather(c)?;
        }
        if let Some(r) = &self.metrics.reference_point {
            if r.len() != self.env.num_objectives() {
                return bad("reference_point length does not match objectives".into());
            }
        }
        Ok(())
    }

    fn sampler(&self, seed: u64) -> Result<ContextSampler> {
        let mut s = ContextSampler::new(self.mode, self.train_spec()?, seed);
        if let Some(b) = &self.train_bounds {
            s = s.with_bounds(*b);
        }
        if !self.train_climates.is_empty() {
            s = s.with_climates(self.train_climates.clone());
        }
        Ok(s)
    }
}

/// Per-context fronts of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFronts {
    pub seed: u64,
    /// Aligned with [`ExperimentFronts::contexts`].
    pub fronts: Vec<ParetoFront>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentFronts {
    pub name: String,
    pub objectives: Vec<String>,
    pub contexts: Vec<String>,
    pub runs: Vec<RunFronts>,
}

/// Trains and evaluates one run: every policy on the training front is
/// rolled out in every eval context and each context's returns are filtered.
pub fn run_single(library: &Arc<AssetLibrary>, spec: &ExperimentSpec, seed: u64) -> Result<RunFronts> {
    let factory = EnvFactory::new(Arc::clone(library), spec.env.clone())?;
    let trainer = TrainerConfig {
        seed,
        ..spec.trainer.clone()
    };
    let outcome = train_with_sampler(&factory, &trainer, spec.sampler(seed)?)?;
    let eval_seeds: Vec<u64> = (0..trainer.eval_seeds as u64)
        .map(|i| mix_seed(seed, STREAM_EVAL, i))
        .collect();
    let policies: Vec<_> = outcome
        .front
        .policy_ids
        .iter()
        .map(|id| outcome.buffer.get(*id).expect("front ids come from the buffer").policy.clone())
        .collect();
    let mut fronts = Vec::new();
    for (_, ctx) in spec.eval_specs()? {
        let protocol = EvalProtocol {
            contexts: vec![ctx],
            seeds: eval_seeds.clone(),
            episodes: trainer.eval_episodes,
        };
        let returns = policies
            .iter()
            .map(|p| evaluate_policy(&factory, &outcome.buffer.normalizer, p, &protocol))
            .collect::<Result<Vec<_>>>()?;
        let ids: Vec<u64> = policies.iter().map(|p| p.id).collect();
        fronts.push(pareto_filter(&returns, &ids)?);
    }
    Ok(RunFronts { seed, fronts })
}

/// All runs of `spec`, in parallel when enabled. With `out_dir`, front CSVs
/// are written as each run completes.
pub fn collect_fronts(library: &Arc<AssetLibrary>, spec: &ExperimentSpec, out_dir: Option<&Path>) -> Result<ExperimentFronts> {
    spec.validate(library)?;
    let contexts: Vec<String> = spec.eval_specs()?.into_iter().map(|(l, _)| l).collect();
    let seeds: Vec<(usize, u64)> = spec.seeds().into_iter().enumerate().collect();
    let results = par_map(&seeds, |&(r, seed)| {
        let run = run_single(library, spec, seed)?;
        if let Some(dir) = out_dir {
            write_run_fronts(dir, &spec.name, r, &contexts, &run)?;
        }
        Ok::<_, Error>(run)
    });
    let mut runs = Vec::with_capacity(results.len());
    for (r, res) in results.into_iter().enumerate() {
        match res {
            Ok(run) => runs.push(run),
            Err(e) => {
                return Err(Error::RunFailed {
                    run: r,
                    partial: out_dir.map(|d| d.join("fronts").join(&spec.name)),
                    source: Box::new(e),
                })
            }
        }
    }
    Ok(ExperimentFronts {
        name: spec.name.clone(),
        objectives: spec.env.objectives.iter().map(|o| o.name().to_string()).collect(),
        contexts,
        runs,
    })
}

fn write_run_fronts(dir: &Path, name: &str, run: usize, contexts: &[String], fronts: &RunFronts) -> Result<()> {
    let d = dir.join("fronts").join(name).join(format!("run{run}"));
    fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    for (label, front) in contexts.iter().zip(&fronts.fronts) {
        let path = d.join(format!("{label}.csv"));
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        front.write_csv(std::io::BufWriter::new(file)).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Metric {
    Hv,
    Eu,
    Sp,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Hv, Metric::Eu, Metric::Sp];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Hv => "HV",
            Metric::Eu => "EU",
            Metric::Sp => "SP",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub mean: f64,
    /// Population standard deviation over runs.
    pub std: f64,
}

impl Cell {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub metric: Metric,
    /// Experiment label when a table pairs several experiments.
    pub label: Option<String>,
    pub cells: Vec<Cell>,
}

/// Display divisors; stored values are unscaled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleFactors {
    pub hv: f64,
    pub eu: f64,
    pub sp: f64,
}

impl Default for ScaleFactors {
    fn default() -> Self {
        Self {
            hv: 1.0,
            eu: 1.0,
            sp: 1.0,
        }
    }
}

impl ScaleFactors {
    pub fn get(&self, m: Metric) -> f64 {
        match m {
            Metric::Hv => self.hv,
            Metric::Eu => self.eu,
            Metric::Sp => self.sp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub reference_point: Vec<f64>,
    pub objectives: Vec<String>,
    pub scale: ScaleFactors,
    pub eu: EuConfig,
    pub runs: usize,
    /// Trainer seed of every run, per experiment label.
    pub run_seeds: Vec<(String, Vec<u64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub columns: Vec<String>,
    pub rows: Vec<ReportRow>,
    pub meta: ReportMeta,
}

impl ReportTable {
    pub fn cell(&self, metric: Metric, label: Option<&str>, column: &str) -> Option<Cell> {
        let c = self.columns.iter().position(|x| x == column)?;
        self.rows
            .iter()
            .find(|r| r.metric == metric && r.label.as_deref() == label)
            .map(|r| r.cells[c])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Fixed-width text rendering with display scaling applied.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let head: Vec<String> = self
            .rows
            .iter()
            .map(|r| {
                let scale = self.meta.scale.get(r.metric);
                let label = r.label.as_ref().map(|l| format!(" {l}")).unwrap_or_default();
                if scale == 1.0 {
                    format!("{}{label}", r.metric.name())
                } else {
                    format!("{}{label} (x{scale:e})", r.metric.name())
                }
            })
            .collect();
        let w0 = head.iter().map(String::len).max().unwrap_or(0).max(6);
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let s = self.meta.scale.get(r.metric);
                r.cells
                    .iter()
                    .map(|c| format!("{:.4}±{:.4}", c.mean / s, c.std / s))
                    .collect()
            })
            .collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|j| {
                cells
                    .iter()
                    .map(|r| r[j].chars().count())
                    .chain([self.columns[j].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let _ = write!(out, "{:w0$}", "metric");
        for (c, w) in self.columns.iter().zip(&widths) {
            let _ = write!(out, "  {c:>w$}");
        }
        out.push('\n');
        for (h, row) in head.iter().zip(&cells) {
            let _ = write!(out, "{h:w0$}");
            for (c, w) in row.iter().zip(&widths) {
                let _ = write!(out, "  {c:>w$}");
            }
            out.push('\n');
        }
        let _ = writeln!(out, "reference point: {:?}", self.meta.reference_point);
        let _ = writeln!(out, "runs: {}", self.meta.runs);
        out
    }

    pub fn write(&self, dir: &Path, name: &str) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json = dir.join(format!("{name}.table.json"));
        fs::write(&json, self.to_json()).map_err(|e| Error::io(&json, e))?;
        let txt = dir.join(format!("{name}.table.txt"));
        fs::write(&txt, self.render()).map_err(|e| Error::io(&txt, e))
    }
}

/// Union-minimum reference point over every front of every experiment.
pub fn shared_reference(experiments: &[&ExperimentFronts], margin: f64) -> Result<Vec<f64>> {
    reference_point(
        experiments
            .iter()
            .flat_map(|e| &e.runs)
            .flat_map(|r| &r.fronts)
            .flat_map(|f| &f.points),
        margin,
    )
    .ok_or_else(|| Error::Validation("no front points to derive a reference point from".into()))
}

/// Metric-major table: for each metric, one row per experiment.
pub fn tabulate(
    experiments: &[(Option<String>, &ExperimentFronts)],
    reference: &[f64],
    eu: &EuConfig,
    scale: ScaleFactors,
) -> Result<ReportTable> {
    let first = experiments
        .first()
        .ok_or_else(|| Error::Validation("nothing to tabulate".into()))?
        .1;
    let columns = first.contexts.clone();
    let mut per_exp = Vec::new();
    for (label, e) in experiments {
        if e.contexts != columns {
            return Err(Error::Validation(format!(
                "eval contexts differ: {:?} vs {:?}",
                columns, e.contexts
            )));
        }
        // reports[run][context]
        let reports = e
            .runs
            .iter()
            .map(|r| {
                r.fronts
                    .iter()
                    .map(|f| evaluate_front(f, reference, eu))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        per_exp.push((label.clone(), reports));
    }
    let mut rows = Vec::new();
    for metric in Metric::ALL {
        for (label, reports) in &per_exp {
            let cells = (0..columns.len())
                .map(|c| {
                    let xs: Vec<f64> = reports
                        .iter()
                        .map(|run| match metric {
                            Metric::Hv => run[c].hv,
                            Metric::Eu => run[c].eu,
                            Metric::Sp => run[c].sp,
                        })
                        .collect();
                    Cell::from_samples(&xs)
                })
                .collect();
            rows.push(ReportRow {
                metric,
                label: label.clone(),
                cells,
            });
        }
    }
    Ok(ReportTable {
        columns,
        rows,
        meta: ReportMeta {
            reference_point: reference.to_vec(),
            objectives: first.objectives.clone(),
            scale,
            eu: *eu,
            runs: first.runs.len(),
            run_seeds: experiments
                .iter()
                .map(|(l, e)| {
                    (
                        l.clone().unwrap_or_else(|| e.name.clone()),
                        e.runs.iter().map(|r| r.seed).collect(),
                    )
                })
                .collect(),
        },
    })
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub table: ReportTable,
    pub fronts: Vec<ExperimentFronts>,
}

pub fn run_experiment(library: &Arc<AssetLibrary>, spec: &ExperimentSpec, out_dir: Option<&Path>) -> Result<ExperimentResult> {
    let fronts = collect_fronts(library, spec, out_dir)?;
    let reference = match &spec.metrics.reference_point {
        Some(r) => r.clone(),
        None => shared_reference(&[&fronts], spec.metrics.reference_margin)?,
    };
    let table = tabulate(&[(None, &fronts)], &reference, &spec.metrics.eu, spec.metrics.scale)?;
    if let Some(dir) = out_dir {
        table.write(dir, &spec.name)?;
    }
    Ok(ExperimentResult {
        table,
        fronts: vec![fronts],
    })
}

/// Paired table for two experiments over the same eval contexts, with one
/// reference point shared across both. Rows are labelled by experiment name.
pub fn compare_modes(
    library: &Arc<AssetLibrary>,
    first: &ExperimentSpec,
    second: &ExperimentSpec,
    out_dir: Option<&Path>,
) -> Result<ExperimentResult> {
    let (a_ctx, b_ctx) = (first.eval_specs()?, second.eval_specs()?);
    if a_ctx != b_ctx {
        let labels = |v: &[(String, ContextSpec)]| v.iter().map(|(l, _)| l.clone()).collect::<Vec<_>>();
        return Err(Error::Validation(format!(
            "eval contexts differ between '{}' {:?} and '{}' {:?}",
            first.name,
            labels(&a_ctx),
            second.name,
            labels(&b_ctx)
        )));
    }
    if first.name == second.name {
        return Err(Error::Validation(format!(
            "both experiments are named '{}'",
            first.name
        )));
    }
    if first.metrics != second.metrics {
        return Err(Error::Validation("experiments use different metrics settings".into()));
    }
    let fa = collect_fronts(library, first, out_dir)?;
    let fb = collect_fronts(library, second, out_dir)?;
    let reference = match &first.metrics.reference_point {
        Some(r) => r.clone(),
        None => shared_reference(&[&fa, &fb], first.metrics.reference_margin)?,
    };
    let table = tabulate(
        &[(Some(first.name.clone()), &fa), (Some(second.name.clone()), &fb)],
        &reference,
        &first.metrics.eu,
        first.metrics.scale,
    )?;
    if let Some(dir) = out_dir {
        table.write(dir, &format!("{}_vs_{}", first.name, second.name))?;
    }
    Ok(ExperimentResult {
        table,
        fronts: vec![fa, fb],
    })
}

/// One row of the long-format plotting table.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontRow {
    pub mode: String,
    pub context: String,
    pub policy_id: u64,
    pub returns: Vec<f64>,
}

/// Reads `<fronts_dir>/<mode>/run<run>/<context>.csv` for every mode
/// directory. Rows are ordered by mode, context, then front order.
pub fn collect_front_rows(fronts_dir: &Path, run: usize) -> Result<Vec<FrontRow>> {
    let mut rows = Vec::new();
    for mode_dir in sorted_entries(fronts_dir)? {
        if !mode_dir.is_dir() {
            continue;
        }
        let mode = file_stem(&mode_dir);
        let run_dir = mode_dir.join(format!("run{run}"));
        if !run_dir.is_dir() {
            continue;
        }
        for csv in sorted_entries(&run_dir)? {
            if csv.extension().and_then(|e| e.to_str()) != Some("csv") {
                continue;
            }
            let file = fs::File::open(&csv).map_err(|e| Error::io(&csv, e))?;
            let front = ParetoFront::read_csv(&csv.display().to_string(), file)?;
            let context = file_stem(&csv);
            for (p, id) in front.points.into_iter().zip(front.policy_ids) {
                rows.push(FrontRow {
                    mode: mode.clone(),
                    context: context.clone(),
                    policy_id: id,
                    returns: p,
                });
            }
        }
    }
    Ok(rows)
}

/// Writes `mode,context,policy_id,g_<objective>...`.
pub fn write_front_rows<W: Write>(rows: &[FrontRow], objectives: &[String], mut out: W) -> std::io::Result<()> {
    write!(out, "mode,context,policy_id")?;
    for o in objectives {
        write!(out, ",g_{o}")?;
    }
    writeln!(out)?;
    for r in rows {
        write!(out, "{},{},{}", r.mode, r.context, r.policy_id)?;
        for g in &r.returns {
            write!(out, ",{g}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Collects the fronts of one run and writes the plotting table to `out`.
pub fn export_front_plot_data(fronts_dir: &Path, run: usize, objectives: &[String], out: &Path) -> Result<usize> {
    let rows = collect_front_rows(fronts_dir, run)?;
    if let Some(r) = rows.iter().find(|r| r.returns.len() != objectives.len()) {
        return Err(Error::Validation(format!(
            "front {}/{} has {} objectives, expected {}",
            r.mode,
            r.context,
            r.returns.len(),
            objectives.len()
        )));
    }
    let file = fs::File::create(out).map_err(|e| Error::io(out, e))?;
    write_front_rows(&rows, objectives, std::io::BufWriter::new(file)).map_err(|e| Error::io(out, e))?;
    Ok(rows.len())
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    v.sort();
    Ok(v)
}

fn file_stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}
