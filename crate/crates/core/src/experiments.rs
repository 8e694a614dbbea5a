//! The simulation study: grid enumeration, paired runs per cell, summary
//! statistics and CSV artifacts.
//!
//! Every study writes the same layout under its output directory:
//! `manifest.json`, `runs.csv`, `ratios.csv`, `summary.csv`,
//! `hist_mt_vs_best.csv`, `hist_indep.csv` and `hist_scaled.csv`. The
//! comparison histograms hold one raw ratio per run (cell and replicate), the
//! scaled one a ratio of replicate means per cell and scale. Files a study does
//! not produce are written with their header only.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{config_hash, hash_hex, DistSpec};
use crate::error::{Error, Result};
use crate::simulator::{run_pair, RetentionMode, SimConfig, SimResult, DEFAULT_MAX_ROUNDS};
use crate::stream::derive_seed;
use crate::{Retention, Scheme};

/// Drops every cell pairing this type distribution with a retention family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exclusion {
    pub type_dist: DistSpec,
    /// A retention `kind` tag such as `lomax`.
    pub retention_kind: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub type_dists: Vec<DistSpec>,
    pub retention_dists: Vec<DistSpec>,
    pub betas: Vec<f64>,
    pub growth_rates: Vec<f64>,
    pub retention_modes: Vec<RetentionMode>,
    /// Myerson scale factors; used by the scaling study only.
    pub scales: Vec<f64>,
    pub exclusions: Vec<Exclusion>,
    pub value: f64,
    pub max_rounds: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::main()
    }
}

fn exp_retention() -> Vec<DistSpec> {
    [1.0, 3.0, 5.0].into_iter().map(|lambda| DistSpec::Exponential { lambda }).collect()
}

impl GridSpec {
    /// Four type distributions, five retention laws, three discounts, three
    /// growth rates and both retention modes, minus λ = 2 types with Lomax.
    pub fn main() -> Self {
        let mut type_dists: Vec<DistSpec> =
            [1.0, 2.0, 3.0].into_iter().map(|lambda| DistSpec::ImpatienceExponential { lambda }).collect();
        type_dists.push(DistSpec::Uniform);
        let mut retention_dists = exp_retention();
        retention_dists.extend([3.0, 5.0].into_iter().map(|alpha| DistSpec::Lomax { alpha }));
        Self {
            type_dists,
            retention_dists,
            betas: vec![0.97, 0.99, 0.999],
            growth_rates: vec![0.0, 0.01, 0.05],
            retention_modes: vec![RetentionMode::Shared, RetentionMode::Independent],
            scales: vec![1.0, 2.0 / 3.0, 0.5, 1.0 / 3.0],
            exclusions: vec![Exclusion {
                type_dist: DistSpec::ImpatienceExponential { lambda: 2.0 },
                retention_kind: "lomax".into(),
            }],
            value: 1.0,
            max_rounds: DEFAULT_MAX_ROUNDS,
        }
    }

    /// The main grid restricted to independent retention draws.
    pub fn independent() -> Self {
        Self { retention_modes: vec![RetentionMode::Independent], ..Self::main() }
    }

    /// Uniform types with exponential retention, every discount and growth rate.
    pub fn scaling() -> Self {
        Self {
            type_dists: vec![DistSpec::Uniform],
            retention_dists: exp_retention(),
            retention_modes: vec![RetentionMode::Shared],
            exclusions: Vec::new(),
            ..Self::main()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("type_dists", self.type_dists.is_empty()),
            ("retention_dists", self.retention_dists.is_empty()),
            ("betas", self.betas.is_empty()),
            ("growth_rates", self.growth_rates.is_empty()),
            ("retention_modes", self.retention_modes.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::Config(format!("grid axis `{name}` is empty")));
        }
        if let Some(c) = self.scales.iter().find(|c| !(**c > 0.0 && **c <= 1.0)) {
            return Err(Error::Config(format!("scale {c} outside (0, 1]")));
        }
        for d in self.type_dists.iter().chain(&self.retention_dists) {
            d.build()?;
        }
        for b in &self.betas {
            Retention::new(crate::Distribution::exponential(1.0)?, *b)?;
        }
        Ok(())
    }

    fn excluded(&self, types: &DistSpec, retention: &DistSpec) -> bool {
        self.exclusions.iter().any(|e| e.type_dist == *types && e.retention_kind == retention.kind_name())
    }
}

/// One grid point with its seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub index: usize,
    pub type_dist: DistSpec,
    pub retention_dist: DistSpec,
    pub beta: f64,
    pub growth_rate: f64,
    pub retention_mode: RetentionMode,
    pub seed: u64,
}

impl Cell {
    pub fn label(&self) -> String {
        format!(
            "{}|{}|beta={}|g={}|{}",
            self.type_dist.label(),
            self.retention_dist.label(),
            self.beta,
            self.growth_rate,
            self.retention_mode.name()
        )
    }

    pub fn replicate_seed(&self, replicate: usize) -> u64 {
        derive_seed(self.seed, replicate as u64)
    }

    pub fn config(&self, spec: &GridSpec, n: usize, scheme: Scheme, replicate: usize) -> Result<SimConfig> {
        let retention = Retention::new(self.retention_dist.build()?, self.beta)?;
        let mut c = SimConfig::new(n, self.type_dist.build()?, spec.value, retention, scheme);
        c.retention_mode = self.retention_mode;
        c.growth_rate = self.growth_rate;
        c.seed = self.replicate_seed(replicate);
        c.max_rounds = spec.max_rounds;
        Ok(c)
    }
}

/// Cross product of the axes minus exclusions, in axis order. A cell's seed
/// depends only on the master seed and the cell's parameters, so a cell keeps
/// its random numbers across grids.
pub fn enumerate_grid(spec: &GridSpec, master_seed: u64) -> Vec<Cell> {
    let mut cells = Vec::new();
    for t in &spec.type_dists {
        for r in &spec.retention_dists {
            if spec.excluded(t, r) {
                continue;
            }
            for &beta in &spec.betas {
                for &growth_rate in &spec.growth_rates {
                    for &retention_mode in &spec.retention_modes {
                        let mut cell = Cell {
                            index: cells.len(),
                            type_dist: t.clone(),
                            retention_dist: r.clone(),
                            beta,
                            growth_rate,
                            retention_mode,
                            seed: 0,
                        };
                        let digest = hash_hex(cell.label().as_bytes());
                        let salt = u64::from_str_radix(&digest[..16], 16).expect("hex digest");
                        cell.seed = derive_seed(master_seed, salt);
                        cells.push(cell);
                    }
                }
            }
        }
    }
    cells
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Main,
    Scaling,
    Independent,
}

impl StudyKind {
    pub fn name(self) -> &'static str {
        match self {
            StudyKind::Main => "main",
            StudyKind::Scaling => "scaling",
            StudyKind::Independent => "independent",
        }
    }

    pub fn default_grid(self) -> GridSpec {
        match self {
            StudyKind::Main => GridSpec::main(),
            StudyKind::Scaling => GridSpec::scaling(),
            StudyKind::Independent => GridSpec::independent(),
        }
    }
}

impl fmt::Display for StudyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StudyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "main" => Ok(StudyKind::Main),
            "scaling" => Ok(StudyKind::Scaling),
            "independent" => Ok(StudyKind::Independent),
            other => Err(Error::Config(format!("unknown study `{other}` (expected main, scaling or independent)"))),
        }
    }
}

/// The candidate scheme, the two alternatives it is compared against and an
/// optional reference for the 1/e bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub candidate: Scheme,
    /// `[Myerson-like, threshold-like]`; the second beating the first is counted.
    pub alternatives: [Scheme; 2],
    pub reference: Option<Scheme>,
}

impl Default for Comparison {
    fn default() -> Self {
        Self {
            candidate: Scheme::MyersonThreshold,
            alternatives: [Scheme::MyersonOnly, Scheme::RetentionThresholdOnly],
            reference: Some(Scheme::KnownTypes),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyOptions {
    pub n: usize,
    pub seed: u64,
    pub replicates: usize,
    /// Standard errors the candidate must clear to count as strictly best.
    pub slack_se: f64,
    pub comparison: Comparison,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self { n: 100_000, seed: 0, replicates: 5, slack_se: 2.0, comparison: Comparison::default() }
    }
}

/// One simulation inside a study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    pub cell: usize,
    pub replicate: usize,
    pub seed: u64,
    pub scheme: String,
    pub revenue: f64,
    pub rounds: usize,
    pub final_alive_frac: f64,
    pub horizon_truncated: bool,
    pub thinning_events: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioRow {
    pub cell: usize,
    pub type_dist: String,
    pub retention: String,
    pub beta: f64,
    pub growth_rate: f64,
    pub retention_mode: String,
    pub rev_candidate: f64,
    pub rev_alt_myerson: f64,
    pub rev_alt_threshold: f64,
    pub rev_reference: f64,
    /// Candidate over the better alternative, from replicate means.
    pub ratio: f64,
    pub ratio_se: f64,
    pub within_1pct: bool,
    pub strictly_best: bool,
    pub threshold_beats_myerson: bool,
    /// Candidate over reference, compared against `0.99 / e`.
    pub reference_ratio: f64,
    pub reference_bound_holds: bool,
    pub horizon_truncated: bool,
    pub error: String,
}

/// One replicate of one cell, compared on its own revenues.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseRow {
    pub cell: usize,
    pub replicate: usize,
    pub retention_mode: String,
    pub ratio: f64,
    pub within_1pct: bool,
    /// Ratio above `1 + slack_se` standard deviations of the cell's per-run ratios.
    pub strictly_best: bool,
    pub threshold_beats_myerson: bool,
}

/// The headline fractions count single runs (cell and replicate), each
/// judged on its own revenues. The `frac_cells_*` fields use replicate means.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudySummary {
    pub cells: usize,
    pub failed_cells: usize,
    pub frac_mt_within_1pct: f64,
    pub frac_mt_strictly_best: f64,
    pub frac_threshold_beats_myerson: f64,
    pub frac_cells_mt_within_1pct: f64,
    pub frac_cells_mt_strictly_best: f64,
    pub frac_cells_threshold_beats_myerson: f64,
    pub min_reference_ratio: f64,
    pub reference_bound_all_hold: bool,
    pub truncated_cells: usize,
    pub rows: Vec<RatioRow>,
    pub cases: Vec<CaseRow>,
    pub runs: Vec<RunRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaledRow {
    pub cell: usize,
    pub type_dist: String,
    pub retention: String,
    pub beta: f64,
    pub growth_rate: f64,
    pub retention_mode: String,
    pub c: f64,
    pub rev_scaled: f64,
    pub rev_mt: f64,
    pub ratio: f64,
    pub ratio_se: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleSummary {
    pub c: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub frac_above_1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingSummary {
    pub cells: usize,
    pub failed_cells: usize,
    pub scales: Vec<ScaleSummary>,
    pub rows: Vec<ScaledRow>,
    pub runs: Vec<RunRow>,
}

fn run_row(cell: usize, replicate: usize, scheme: &Scheme, n: usize, r: &SimResult) -> RunRow {
    RunRow {
        cell,
        replicate,
        seed: r.seed_echo,
        scheme: scheme.label(),
        revenue: r.discounted_revenue,
        rounds: r.rounds_run,
        final_alive_frac: r.alive_trajectory.last().copied().unwrap_or(0.0) / n as f64,
        horizon_truncated: r.horizon_truncated,
        thinning_events: r.thinning_events,
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

fn std_error(xs: &[f64]) -> f64 {
    std_dev(xs) / (xs.len() as f64).sqrt()
}

/// Revenues `[replicate][scheme]`, run rows, and whether any run hit the horizon.
type CellRuns = (Vec<Vec<f64>>, Vec<RunRow>, bool);

/// Runs every `(cell, replicate)` pair with common random numbers across
/// `schemes`. Returns per-cell revenue matrices `[replicate][scheme]` and run rows.
fn simulate_cells(
    spec: &GridSpec,
    cells: &[Cell],
    schemes: &[Scheme],
    n: usize,
    replicates: usize,
) -> Vec<Result<CellRuns>> {
    let tasks: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..replicates).map(move |r| (c, r))).collect();
    let results: Vec<Result<Vec<SimResult>>> = tasks
        .par_iter()
        .map(|&(c, rep)| {
            let configs = schemes.iter().map(|s| cells[c].config(spec, n, *s, rep)).collect::<Result<Vec<_>>>()?;
            run_pair(&configs)
        })
        .collect();
    let mut out = Vec::with_capacity(cells.len());
    let mut iter = results.into_iter();
    for cell in cells {
        let mut revs = Vec::with_capacity(replicates);
        let mut rows = Vec::new();
        let mut truncated = false;
        let mut failure = None;
        for rep in 0..replicates {
            match iter.next().expect("one result per task") {
                Ok(results) => {
                    for (s, r) in schemes.iter().zip(&results) {
                        rows.push(run_row(cell.index, rep, s, n, r));
                        truncated |= r.horizon_truncated;
                    }
                    revs.push(results.iter().map(|r| r.discounted_revenue).collect());
                }
                Err(e) => failure = Some(e),
            }
        }
        out.push(match failure {
            Some(e) => Err(e),
            None => Ok((revs, rows, truncated)),
        });
    }
    out
}

fn check_options(spec: &GridSpec, opts: &StudyOptions) -> Result<()> {
    spec.validate()?;
    if opts.n == 0 || opts.replicates == 0 {
        return Err(Error::Config("n and replicates must be at least 1".into()));
    }
    Ok(())
}

/// Runs the comparison study on every grid cell. Per-cell failures are
/// recorded in the `error` column and left out of the fractions.
pub fn run_study(spec: &GridSpec, opts: &StudyOptions) -> Result<StudySummary> {
    check_options(spec, opts)?;
    let cells = enumerate_grid(spec, opts.seed);
    let cmp = &opts.comparison;
    let mut schemes = vec![cmp.candidate, cmp.alternatives[0], cmp.alternatives[1]];
    schemes.extend(cmp.reference);
    let simulated = simulate_cells(spec, &cells, &schemes, opts.n, opts.replicates);

    let mut rows = Vec::with_capacity(cells.len());
    let mut cases = Vec::new();
    let mut runs = Vec::new();
    for (cell, outcome) in cells.iter().zip(simulated) {
        let mut row = RatioRow {
            cell: cell.index,
            type_dist: cell.type_dist.label(),
            retention: cell.retention_dist.label(),
            beta: cell.beta,
            growth_rate: cell.growth_rate,
            retention_mode: cell.retention_mode.name().into(),
            rev_candidate: f64::NAN,
            rev_alt_myerson: f64::NAN,
            rev_alt_threshold: f64::NAN,
            rev_reference: f64::NAN,
            ratio: f64::NAN,
            ratio_se: f64::NAN,
            within_1pct: false,
            strictly_best: false,
            threshold_beats_myerson: false,
            reference_ratio: f64::NAN,
            reference_bound_holds: false,
            horizon_truncated: false,
            error: String::new(),
        };
        match outcome {
            Err(e) => row.error = e.to_string(),
            Ok((revs, cell_runs, truncated)) => {
                let col = |j: usize| revs.iter().map(|r| r[j]).collect::<Vec<f64>>();
                let (cand, alt_m, alt_t) = (col(0), col(1), col(2));
                row.rev_candidate = mean(&cand);
                row.rev_alt_myerson = mean(&alt_m);
                row.rev_alt_threshold = mean(&alt_t);
                let best = if row.rev_alt_threshold > row.rev_alt_myerson { &alt_t } else { &alt_m };
                row.ratio = row.rev_candidate / row.rev_alt_myerson.max(row.rev_alt_threshold);
                let per_rep: Vec<f64> = cand.iter().zip(best).map(|(c, b)| c / b).collect();
                row.ratio_se = std_error(&per_rep);
                row.within_1pct = row.ratio >= 0.99;
                row.strictly_best = row.ratio > 1.0 + opts.slack_se * row.ratio_se;
                row.threshold_beats_myerson = row.rev_alt_threshold > row.rev_alt_myerson;
                if cmp.reference.is_some() {
                    row.rev_reference = mean(&col(3));
                    row.reference_ratio = row.rev_candidate / row.rev_reference;
                    row.reference_bound_holds = row.reference_ratio >= 0.99 / std::f64::consts::E;
                }
                row.horizon_truncated = truncated;
                let per_run: Vec<f64> = revs.iter().map(|r| r[0] / r[1].max(r[2])).collect();
                let slack = opts.slack_se * std_dev(&per_run);
                for (rep, (r, ratio)) in revs.iter().zip(&per_run).enumerate() {
                    cases.push(CaseRow {
                        cell: cell.index,
                        replicate: rep,
                        retention_mode: row.retention_mode.clone(),
                        ratio: *ratio,
                        within_1pct: *ratio >= 0.99,
                        strictly_best: *ratio > 1.0 + slack,
                        threshold_beats_myerson: r[2] > r[1],
                    });
                }
                runs.extend(cell_runs);
            }
        }
        rows.push(row);
    }

    let ok: Vec<&RatioRow> = rows.iter().filter(|r| r.error.is_empty()).collect();
    let frac = |f: &dyn Fn(&RatioRow) -> bool| {
        if ok.is_empty() {
            f64::NAN
        } else {
            ok.iter().filter(|r| f(r)).count() as f64 / ok.len() as f64
        }
    };
    let case_frac = |f: &dyn Fn(&CaseRow) -> bool| {
        if cases.is_empty() {
            f64::NAN
        } else {
            cases.iter().filter(|c| f(c)).count() as f64 / cases.len() as f64
        }
    };
    Ok(StudySummary {
        cells: rows.len(),
        failed_cells: rows.len() - ok.len(),
        frac_mt_within_1pct: case_frac(&|c| c.within_1pct),
        frac_mt_strictly_best: case_frac(&|c| c.strictly_best),
        frac_threshold_beats_myerson: case_frac(&|c| c.threshold_beats_myerson),
        frac_cells_mt_within_1pct: frac(&|r| r.within_1pct),
        frac_cells_mt_strictly_best: frac(&|r| r.strictly_best),
        frac_cells_threshold_beats_myerson: frac(&|r| r.threshold_beats_myerson),
        min_reference_ratio: ok.iter().map(|r| r.reference_ratio).fold(f64::INFINITY, f64::min),
        reference_bound_all_hold: cmp.reference.is_some() && ok.iter().all(|r| r.reference_bound_holds),
        truncated_cells: ok.iter().filter(|r| r.horizon_truncated).count(),
        rows,
        cases,
        runs,
    })
}

fn median(mut xs: Vec<f64>) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        (xs[m - 1] + xs[m]) / 2.0
    }
}

/// Scaled MT against plain MT for every cell and every scale in `spec.scales`.
pub fn scaling_study(spec: &GridSpec, opts: &StudyOptions) -> Result<ScalingSummary> {
    check_options(spec, opts)?;
    if spec.scales.is_empty() {
        return Err(Error::Config("grid axis `scales` is empty".into()));
    }
    let cells = enumerate_grid(spec, opts.seed);
    let mut schemes = vec![Scheme::MyersonThreshold];
    schemes.extend(spec.scales.iter().map(|c| Scheme::ScaledMyersonThreshold { c: *c }));
    let simulated = simulate_cells(spec, &cells, &schemes, opts.n, opts.replicates);

    let mut rows = Vec::new();
    let mut runs = Vec::new();
    let mut failed = 0;
    for (cell, outcome) in cells.iter().zip(simulated) {
        let base = |c: f64| ScaledRow {
            cell: cell.index,
            type_dist: cell.type_dist.label(),
            retention: cell.retention_dist.label(),
            beta: cell.beta,
            growth_rate: cell.growth_rate,
            retention_mode: cell.retention_mode.name().into(),
            c,
            rev_scaled: f64::NAN,
            rev_mt: f64::NAN,
            ratio: f64::NAN,
            ratio_se: f64::NAN,
            error: String::new(),
        };
        match outcome {
            Err(e) => {
                failed += 1;
                rows.extend(spec.scales.iter().map(|c| ScaledRow { error: e.to_string(), ..base(*c) }));
            }
            Ok((revs, cell_runs, _)) => {
                let mt: Vec<f64> = revs.iter().map(|r| r[0]).collect();
                for (j, c) in spec.scales.iter().enumerate() {
                    let scaled: Vec<f64> = revs.iter().map(|r| r[j + 1]).collect();
                    let per_rep: Vec<f64> = scaled.iter().zip(&mt).map(|(s, m)| s / m).collect();
                    let (rev_scaled, rev_mt) = (mean(&scaled), mean(&mt));
                    rows.push(ScaledRow {
                        rev_scaled,
                        rev_mt,
                        ratio: rev_scaled / rev_mt,
                        ratio_se: std_error(&per_rep),
                        ..base(*c)
                    });
                }
                runs.extend(cell_runs);
            }
        }
    }
    let scales = spec
        .scales
        .iter()
        .map(|&c| {
            let ratios: Vec<f64> = rows.iter().filter(|r| r.c == c && r.error.is_empty()).map(|r| r.ratio).collect();
            ScaleSummary {
                c,
                median: median(ratios.clone()),
                min: ratios.iter().copied().fold(f64::INFINITY, f64::min),
                max: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                frac_above_1: ratios.iter().filter(|r| **r > 1.0).count() as f64 / ratios.len().max(1) as f64,
            }
        })
        .collect();
    Ok(ScalingSummary { cells: cells.len(), failed_cells: failed, scales, rows, runs })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyManifest {
    pub study: String,
    pub version: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub n: usize,
    pub replicates: usize,
    pub cells: usize,
    pub recruits_tested_on_arrival: bool,
    pub grid: GridSpec,
    pub options: StudyOptions,
}

pub enum StudyOutput {
    Comparison(StudySummary),
    Scaling(ScalingSummary),
}

fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct HistRow<'a> {
    cell: usize,
    replicate: usize,
    retention_mode: &'a str,
    ratio: f64,
}

#[derive(Serialize)]
struct ScaledHistRow {
    cell: usize,
    c: f64,
    ratio: f64,
}

const RUN_HEADER: [&str; 9] = [
    "cell",
    "replicate",
    "seed",
    "scheme",
    "revenue",
    "rounds",
    "final_alive_frac",
    "horizon_truncated",
    "thinning_events",
];
const HIST_HEADER: [&str; 4] = ["cell", "replicate", "retention_mode", "ratio"];
const SCALED_HIST_HEADER: [&str; 3] = ["cell", "c", "ratio"];

fn write_summary(path: &Path, entries: &[(String, String)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["metric", "value"])?;
    for (k, v) in entries {
        w.write_record([k, v])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs `kind` on `spec` and writes the study directory `out`.
pub fn run_and_write(kind: StudyKind, spec: &GridSpec, opts: &StudyOptions, out: &Path) -> Result<StudyOutput> {
    let output = match kind {
        StudyKind::Scaling => StudyOutput::Scaling(scaling_study(spec, opts)?),
        StudyKind::Main | StudyKind::Independent => StudyOutput::Comparison(run_study(spec, opts)?),
    };
    fs::create_dir_all(out)?;
    let cells = match &output {
        StudyOutput::Comparison(s) => s.cells,
        StudyOutput::Scaling(s) => s.cells,
    };
    let manifest = StudyManifest {
        study: kind.name().into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: config_hash(&(kind, spec, opts))?,
        master_seed: opts.seed,
        n: opts.n,
        replicates: opts.replicates,
        cells,
        recruits_tested_on_arrival: false,
        grid: spec.clone(),
        options: opts.clone(),
    };
    fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;

    let empty_hist: [HistRow; 0] = [];
    match &output {
        StudyOutput::Comparison(s) => {
            write_rows(&out.join("runs.csv"), &RUN_HEADER, &s.runs)?;
            let mut w = csv::Writer::from_path(out.join("ratios.csv"))?;
            for r in &s.rows {
                w.serialize(r)?;
            }
            if s.rows.is_empty() {
                w.write_record(["cell"])?;
            }
            w.flush()?;
            write_summary(
                &out.join("summary.csv"),
                &[
                    ("cells".into(), s.cells.to_string()),
                    ("failed_cells".into(), s.failed_cells.to_string()),
                    ("frac_mt_within_1pct".into(), s.frac_mt_within_1pct.to_string()),
                    ("frac_mt_strictly_best".into(), s.frac_mt_strictly_best.to_string()),
                    ("frac_threshold_beats_myerson".into(), s.frac_threshold_beats_myerson.to_string()),
                    ("frac_cells_mt_within_1pct".into(), s.frac_cells_mt_within_1pct.to_string()),
                    ("frac_cells_mt_strictly_best".into(), s.frac_cells_mt_strictly_best.to_string()),
                    ("frac_cells_threshold_beats_myerson".into(), s.frac_cells_threshold_beats_myerson.to_string()),
                    ("min_reference_ratio".into(), s.min_reference_ratio.to_string()),
                    ("reference_bound_all_hold".into(), s.reference_bound_all_hold.to_string()),
                    ("truncated_cells".into(), s.truncated_cells.to_string()),
                ],
            )?;
            let hist = |mode: Option<RetentionMode>| -> Vec<HistRow> {
                s.cases
                    .iter()
                    .filter(|c| mode.is_none_or(|m| c.retention_mode == m.name()))
                    .map(|c| HistRow {
                        cell: c.cell,
                        replicate: c.replicate,
                        retention_mode: &c.retention_mode,
                        ratio: c.ratio,
                    })
                    .collect()
            };
            write_rows(&out.join("hist_mt_vs_best.csv"), &HIST_HEADER, &hist(None))?;
            write_rows(&out.join("hist_indep.csv"), &HIST_HEADER, &hist(Some(RetentionMode::Independent)))?;
            write_rows::<ScaledHistRow>(&out.join("hist_scaled.csv"), &SCALED_HIST_HEADER, &[])?;
        }
        StudyOutput::Scaling(s) => {
            write_rows(&out.join("runs.csv"), &RUN_HEADER, &s.runs)?;
            let mut w = csv::Writer::from_path(out.join("ratios.csv"))?;
            for r in &s.rows {
                w.serialize(r)?;
            }
            w.flush()?;
            let mut entries = vec![
                ("cells".to_string(), s.cells.to_string()),
                ("failed_cells".to_string(), s.failed_cells.to_string()),
            ];
            for sc in &s.scales {
                let c = format!("{:.4}", sc.c);
                entries.push((format!("median_ratio_c{c}"), sc.median.to_string()));
                entries.push((format!("min_ratio_c{c}"), sc.min.to_string()));
                entries.push((format!("max_ratio_c{c}"), sc.max.to_string()));
                entries.push((format!("frac_above_1_c{c}"), sc.frac_above_1.to_string()));
            }
            write_summary(&out.join("summary.csv"), &entries)?;
            let hist: Vec<ScaledHistRow> = s
                .rows
                .iter()
                .filter(|r| r.error.is_empty())
                .map(|r| ScaledHistRow { cell: r.cell, c: r.c, ratio: r.ratio })
                .collect();
            write_rows(&out.join("hist_scaled.csv"), &SCALED_HIST_HEADER, &hist)?;
            write_rows(&out.join("hist_mt_vs_best.csv"), &HIST_HEADER, &empty_hist)?;
            write_rows(&out.join("hist_indep.csv"), &HIST_HEADER, &empty_hist)?;
        }
    }
    Ok(output)
}
