//! `snc analyze`: reads a JSON network spec, writes analytic bounds and,
//! optionally, a simulation-based validation of them.
//!
//! Exit codes: 0 success or PASS, 1 validation FAIL, 2 spec error,
//! 3 numeric error. Every failure prints one line `error: <Kind>: <detail>`
//! to stderr.

use std::collections::{HashMap, HashSet};
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::calculus::{
    analyze_tandem, tandem_output, BoundMode, BoundReport, Independence, Metric, NetworkSpec, NodeModel, Numerics,
};
use crate::models::{ArrivalVariant, ServiceCurveModel, ServiceVariant, StochasticArrivalCurve, StrictServer};
use crate::sigma_rho::{mbc_from_sigma_rho, optimize_theta, sigma_rho_iid};
use crate::simulate::{self, EmpiricalTail, NodeSim, SimConfig, Verdict};
use crate::tailbounds::prob_at;
use crate::{ArrivalCurve, Curve, Error, IncrementDist, TailBound, Time};

#[derive(Debug, Parser)]
#[command(name = "snc", version, about = "Stochastic network calculus bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute bounds for a spec file.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Path to the JSON spec.
    pub spec: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides `analysis.mode`.
    #[arg(long, value_enum)]
    pub mode: Option<ModeLit>,
    /// Runs the simulation validation even if the spec leaves it disabled.
    #[arg(long)]
    pub validate: bool,
    /// Overrides `validation.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `analysis.grid_step`.
    #[arg(long)]
    pub grid_step: Option<f64>,
}

// ---------------------------------------------------------------------------
// Spec schema

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveLit {
    Affine {
        rho: f64,
        sigma: f64,
    },
    RateLatency {
        #[serde(rename = "R")]
        rate: f64,
        #[serde(rename = "T")]
        latency: Time,
    },
    Rate {
        r: f64,
    },
    Grid {
        samples: Vec<f64>,
        tail_slope: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundLit {
    Exp { a: f64, theta: f64 },
    Deterministic,
    Grid { x: Vec<f64>, v: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantLit {
    Mbc,
    Vbc,
    Tac,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrivalLit {
    #[serde(default = "default_variant")]
    pub variant: VariantLit,
    pub alpha: CurveLit,
    pub f: BoundLit,
}

fn default_variant() -> VariantLit {
    VariantLit::Mbc
}

fn one() -> f64 {
    1.0
}

/// i.i.d. traffic, turned into an m.b.c curve `⟨a·e^{−θx}, r·t⟩`. Either
/// `theta` or `theta_grid` must be given; with a grid the θ minimising the
/// bound at `x_star` is chosen and echoed back as `theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrafficLit {
    Bernoulli {
        p: f64,
        #[serde(default = "one")]
        batch: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta: Option<f64>,
        r: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta_grid: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x_star: Option<f64>,
    },
    Discrete {
        values: Vec<f64>,
        probs: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta: Option<f64>,
        r: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta_grid: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x_star: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrival: Option<ArrivalLit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traffic: Option<TrafficLit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ServerLit {
    /// `β̂` reduced by an impairment given either as `gamma` + `g` or as a
    /// traffic literal.
    Strict {
        beta_hat: CurveLit,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<CurveLit>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        g: Option<BoundLit>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        impairment: Option<TrafficLit>,
    },
    Sc {
        beta: CurveLit,
        g: BoundLit,
    },
    WeakSc {
        beta: CurveLit,
        g: BoundLit,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: String,
    pub server: ServerLit,
    #[serde(default)]
    pub cross: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricLit {
    Backlog,
    Delay,
    Output,
    /// The tagged flow's own m.b.c bound.
    Arrival,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModeLit {
    General,
    Independent,
}

/// `start, start + step, …` up to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    pub flow: String,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<MetricLit>,
    pub x_grid: RangeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay_grid: Option<RangeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeLit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_max: Option<Time>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_max: Option<Time>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<f64>,
}

fn default_metrics() -> Vec<MetricLit> {
    vec![MetricLit::Backlog, MetricLit::Delay]
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationSpec {
    #[serde(default)]
    pub enabled: bool,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub t_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_reps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Delay horizon of the simulated measurement; defaults to the largest delay grid point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_max: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub flows: Vec<FlowSpec>,
    #[serde(default)]
    pub nodes: Vec<NodeSpec>,
    pub analysis: AnalysisSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationSpec>,
}

// ---------------------------------------------------------------------------
// Failures

#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Parse(String),
    Schema(String),
    Io(String),
    Model(Error),
}

impl Failure {
    pub fn kind(&self) -> &'static str {
        match self {
            Failure::Parse(_) => "ParseError",
            Failure::Schema(_) => "SchemaError",
            Failure::Io(_) => "IoError",
            Failure::Model(e) => e.kind(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Model(
                Error::NotInF(_)
                | Error::DivergentDeconvolution
                | Error::RateTooSmall { .. }
                | Error::UndefinedArithmetic
                | Error::NoFeasibleTheta,
            ) => 3,
            _ => 2,
        }
    }

    fn detail(&self) -> String {
        match self {
            Failure::Parse(s) | Failure::Schema(s) | Failure::Io(s) => s.clone(),
            Failure::Model(e) => e.to_string(),
        }
    }

    /// The single stderr line.
    pub fn line(&self) -> String {
        format!("error: {}: {}", self.kind(), self.detail().replace('\n', " "))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Model(e)
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn schema<T>(msg: impl Into<String>) -> Outcome<T> {
    Err(Failure::Schema(msg.into()))
}

// ---------------------------------------------------------------------------
// Parsing and resolution

/// Reads and schema-checks a spec file.
pub fn parse_spec(path: &Path) -> Outcome<SpecFile> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))?;
    parse_spec_str(&text)
}

pub fn parse_spec_str(text: &str) -> Outcome<SpecFile> {
    serde_json::from_str(text).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => Failure::Schema(e.to_string()),
        _ => Failure::Parse(e.to_string()),
    })
}

impl CurveLit {
    pub fn to_curve(&self) -> crate::Result<Curve> {
        let c = match self {
            CurveLit::Affine { rho, sigma } => Curve::affine(*rho, *sigma),
            CurveLit::RateLatency { rate, latency } => Curve::rate_latency(*rate, *latency),
            CurveLit::Rate { r } => Curve::rate(*r),
            CurveLit::Grid { samples, tail_slope } => Curve::grid(samples.clone(), *tail_slope)?,
        };
        c.validate()?;
        Ok(c)
    }

    /// Characteristic time scale in slots: latency, burst drain time or horizon.
    fn scale(&self) -> f64 {
        match self {
            CurveLit::Affine { rho, sigma } if *rho > 0.0 => sigma / rho,
            CurveLit::Affine { sigma, .. } => *sigma,
            CurveLit::RateLatency { latency, .. } => *latency as f64,
            CurveLit::Rate { .. } => 0.0,
            CurveLit::Grid { samples, .. } => samples.len() as f64,
        }
    }
}

impl BoundLit {
    pub fn to_bound(&self) -> crate::Result<TailBound> {
        let b = match self {
            BoundLit::Exp { a, theta } => TailBound::exp(*a, *theta),
            BoundLit::Deterministic => TailBound::Deterministic,
            BoundLit::Grid { x, v } => TailBound::grid(x.clone(), v.clone())?,
        };
        b.validate()?;
        Ok(b)
    }
}

impl From<VariantLit> for ArrivalVariant {
    fn from(v: VariantLit) -> Self {
        match v {
            VariantLit::Mbc => ArrivalVariant::Mbc,
            VariantLit::Vbc => ArrivalVariant::Vbc,
            VariantLit::Tac => ArrivalVariant::Tac,
        }
    }
}

impl TrafficLit {
    fn dist(&self) -> crate::Result<IncrementDist> {
        match self {
            TrafficLit::Bernoulli { p, batch, .. } => IncrementDist::bernoulli(*p, *batch),
            TrafficLit::Discrete { values, probs, .. } => IncrementDist::discrete(values.clone(), probs.clone()),
        }
    }

    /// Expands to an m.b.c curve, fixing `theta` (and `x_star`) in place.
    fn expand(&mut self) -> Outcome<(IncrementDist, ArrivalCurve)> {
        let dist = self.dist()?;
        let (TrafficLit::Bernoulli { theta, r, theta_grid, x_star, .. }
        | TrafficLit::Discrete { theta, r, theta_grid, x_star, .. }) = self;
        let arrival = match (*theta, theta_grid.as_ref()) {
            (Some(t), _) => mbc_from_sigma_rho(&sigma_rho_iid(&dist, t)?, *r)?,
            (None, Some(grid)) => {
                let xs = *x_star.get_or_insert(10.0);
                let pick = optimize_theta(&dist, grid, *r, xs)?;
                *theta = Some(pick.theta);
                pick.arrival
            }
            (None, None) => return schema("traffic literal needs `theta` or `theta_grid`"),
        };
        Ok((dist, arrival))
    }
}

struct FlowModel {
    arrival: ArrivalCurve,
    dist: Option<IncrementDist>,
}

struct NodeResolved {
    model: NodeModel,
    cross: Vec<String>,
    sim: Option<NodeSim>,
}

struct ValidationPlan {
    cfg: SimConfig,
    d_max: usize,
}

/// A spec with every default filled and every literal turned into a model.
struct Resolved {
    flows: HashMap<String, FlowModel>,
    nodes: Vec<NodeResolved>,
    tagged: String,
    metrics: Vec<MetricLit>,
    x_grid: Vec<f64>,
    delay_grid: Vec<Time>,
    independence: Independence,
    num: Numerics,
    validation: Option<ValidationPlan>,
}

fn expand_range(name: &str, r: &RangeSpec) -> Outcome<Vec<f64>> {
    let ok = [r.start, r.stop, r.step].iter().all(|v| v.is_finite()) && r.start >= 0.0 && r.stop >= r.start;
    if !ok || !(r.step > 0.0) {
        return schema(format!("{name}: need 0 <= start <= stop and step > 0"));
    }
    let n = ((r.stop - r.start) / r.step + 1e-9).floor() as usize + 1;
    if n > 1_000_000 {
        return schema(format!("{name}: {n} points is too many"));
    }
    Ok((0..n).map(|k| r.start + k as f64 * r.step).collect())
}

fn bound_theta(b: &BoundLit) -> Option<f64> {
    match b {
        BoundLit::Exp { theta, .. } => Some(*theta),
        _ => None,
    }
}

fn resolve(spec: &mut SpecFile) -> Outcome<Resolved> {
    let mut seen = HashSet::new();
    for id in spec.flows.iter().map(|f| &f.id).chain(spec.nodes.iter().map(|n| &n.id)) {
        if !seen.insert(id.clone()) {
            return schema(format!("duplicate id `{id}`"));
        }
    }

    let mut thetas = Vec::new();
    let mut scales = vec![0.0f64];
    let mut flows = HashMap::new();
    for f in &mut spec.flows {
        let model = match (&f.arrival, &mut f.traffic) {
            (Some(a), None) => {
                scales.push(a.alpha.scale());
                thetas.extend(bound_theta(&a.f));
                FlowModel {
                    arrival: StochasticArrivalCurve::new(a.variant.into(), a.alpha.to_curve()?, a.f.to_bound()?)?,
                    dist: None,
                }
            }
            (None, Some(t)) => {
                let (dist, arrival) = t.expand()?;
                thetas.extend(arrival.bound.max_theta());
                FlowModel { arrival, dist: Some(dist) }
            }
            _ => return schema(format!("flow `{}` needs exactly one of `arrival` or `traffic`", f.id)),
        };
        flows.insert(f.id.clone(), model);
    }

    let tagged = spec.analysis.flow.clone();
    if !flows.contains_key(&tagged) {
        return schema(format!("analysis.flow `{tagged}` is not a flow id"));
    }

    let independence = match spec.analysis.mode.get_or_insert(ModeLit::General) {
        ModeLit::General => Independence::General,
        ModeLit::Independent => Independence::Independent,
    };

    let mut nodes = Vec::new();
    for n in &mut spec.nodes {
        for c in &n.cross {
            if c == &tagged {
                return schema(format!("node `{}`: the analysed flow cannot be cross traffic", n.id));
            }
            if !flows.contains_key(c) {
                return schema(format!("node `{}`: unknown cross flow `{c}`", n.id));
            }
        }
        let (model, sim) = match &mut n.server {
            ServerLit::Strict { beta_hat, gamma, g, impairment } => {
                scales.push(beta_hat.scale());
                let beta_hat_c = beta_hat.to_curve()?;
                let (server, impairment_dist) = match (gamma.as_ref(), g.as_ref(), impairment.as_mut()) {
                    (None, None, None) => (StrictServer::unimpaired(beta_hat_c.clone())?, None),
                    (Some(gm), Some(gb), None) => {
                        scales.push(gm.scale());
                        thetas.extend(bound_theta(gb));
                        (StrictServer::new(beta_hat_c.clone(), gm.to_curve()?, gb.to_bound()?)?, None)
                    }
                    (None, None, Some(t)) => {
                        let (dist, imp) = t.expand()?;
                        thetas.extend(imp.bound.max_theta());
                        (StrictServer::new(beta_hat_c.clone(), imp.alpha, imp.bound)?, Some(dist))
                    }
                    _ => {
                        return schema(format!(
                            "node `{}`: give the impairment as `gamma` and `g` together, or as `impairment`",
                            n.id
                        ))
                    }
                };
                let sim = match (&beta_hat_c, gamma.is_some()) {
                    (Curve::Rate { rate }, false) => Some(NodeSim { capacity: *rate, impairment: impairment_dist }),
                    _ => None,
                };
                (NodeModel::Strict(server), sim)
            }
            server @ (ServerLit::Sc { .. } | ServerLit::WeakSc { .. }) => {
                if independence == Independence::Independent {
                    return schema(format!("node `{}`: independent mode requires strict-server nodes", n.id));
                }
                let (variant, beta, g) = match server {
                    ServerLit::WeakSc { beta, g } => (ServiceVariant::WeakSc, beta, g),
                    ServerLit::Sc { beta, g } => (ServiceVariant::Sc, beta, g),
                    ServerLit::Strict { .. } => unreachable!(),
                };
                scales.push(beta.scale());
                thetas.extend(bound_theta(g));
                (NodeModel::Service(ServiceCurveModel::new(variant, beta.to_curve()?, g.to_bound()?)?), None)
            }
        };
        nodes.push(NodeResolved { model, cross: n.cross.clone(), sim });
    }

    let a = &mut spec.analysis;
    if a.metrics.is_empty() {
        return schema("analysis.metrics is empty");
    }
    let needs_nodes = a.metrics.iter().any(|m| *m != MetricLit::Arrival);
    if needs_nodes && nodes.is_empty() {
        return schema("backlog, delay and output metrics need at least one node");
    }
    let x_grid = expand_range("analysis.x_grid", &a.x_grid)?;
    let delay_range = *a.delay_grid.get_or_insert(RangeSpec { start: 0.0, stop: 20.0, step: 1.0 });
    let delay_grid: Vec<Time> =
        expand_range("analysis.delay_grid", &delay_range)?.into_iter().map(|x| x.round() as Time).collect();
    if delay_range.step.fract() != 0.0 || delay_range.start.fract() != 0.0 {
        return schema("analysis.delay_grid: start and step must be whole slots");
    }
    let delay_max = delay_grid.last().copied().unwrap_or(0);

    let scale = scales.iter().copied().fold(0.0, f64::max);
    let window = (10.0 * scale).ceil().max(100.0) as Time;
    let y_max = *a.y_max.get_or_insert(window);
    let s_max = *a.s_max.get_or_insert(window + delay_max);
    if y_max < 1 || s_max < 1 {
        return schema("analysis.y_max and analysis.s_max must be >= 1");
    }
    let theta_max = thetas.iter().copied().fold(0.0, f64::max);
    let grid_step = *a.grid_step.get_or_insert(if theta_max > 0.0 { 0.05 / theta_max } else { 0.01 });
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return schema("analysis.grid_step must be positive");
    }
    let extent = x_grid.last().copied().unwrap_or(0.0).max(1.0);
    let num = Numerics { grid_step: Some(grid_step), grid_extent: extent, y_max, s_max };

    let validation = match spec.validation.as_mut() {
        Some(v) if v.enabled => {
            let cfg = SimConfig {
                t_len: *v.t_len.get_or_insert(10_000),
                n_reps: *v.n_reps.get_or_insert(1000),
                seed: *v.seed.get_or_insert(1),
                delta: *v.delta.get_or_insert(0.01),
            };
            let d_max = *v.d_max.get_or_insert(delay_max.max(0) as usize);
            Some(ValidationPlan { cfg, d_max })
        }
        _ => None,
    };

    Ok(Resolved {
        flows,
        nodes,
        tagged,
        metrics: spec.analysis.metrics.clone(),
        x_grid,
        delay_grid,
        independence,
        num,
        validation,
    })
}

// ---------------------------------------------------------------------------
// Running

struct Line {
    report: BoundReport,
    verdict: Option<Verdict>,
}

fn mode_of(ind: Independence) -> BoundMode {
    match ind {
        Independence::General => BoundMode::General,
        Independence::Independent => BoundMode::Independent,
    }
}

fn tail_report(metric: Metric, f: &TailBound, x_grid: &[f64], mode: BoundMode) -> BoundReport {
    BoundReport {
        metric,
        x_grid: x_grid.to_vec(),
        values: x_grid.iter().map(|&x| prob_at(f, x)).collect(),
        mode,
        vacuous: false,
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Outcome<()> {
    fs::write(path, bytes).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn bounds_csv(lines: &[Line]) -> Outcome<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Failure::Io(e.to_string());
    w.write_record(["metric", "x", "probability", "mode"]).map_err(io)?;
    for l in lines {
        for (x, v) in l.report.x_grid.iter().zip(&l.report.values) {
            w.serialize((l.report.metric.as_str(), x, v, l.report.mode.as_str())).map_err(io)?;
        }
    }
    w.into_inner().map_err(|e| Failure::Io(e.to_string()))
}

fn verdict_text(lines: &[Line]) -> String {
    let mut out = String::new();
    for l in lines {
        let r = &l.report;
        let head = format!("{} {}", r.metric.as_str(), r.mode.as_str());
        let line = match &l.verdict {
            Some(v) => format!(
                "{head} {} worst_margin={:.6e} worst_x={} vacuous={}\n",
                if v.pass { "PASS" } else { "FAIL" },
                v.worst_margin,
                v.worst_x,
                r.vacuous
            ),
            None => format!("{head} NOT_VALIDATED vacuous={}\n", r.vacuous),
        };
        out.push_str(&line);
    }
    out
}

fn unsupported<T>(msg: &str) -> Outcome<T> {
    Err(Failure::Model(Error::UnsupportedTopology(msg.into())))
}

/// Summary of a finished run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    /// `(metric, mode, pass)` for every validated report.
    pub verdicts: Vec<(String, String, bool)>,
}

impl RunSummary {
    pub fn failed(&self) -> bool {
        self.verdicts.iter().any(|(_, _, pass)| !pass)
    }
}

/// Resolves a parsed spec, writes every output into `out` and reports the verdicts.
pub fn run(mut spec: SpecFile, out: &Path) -> Outcome<RunSummary> {
    let r = resolve(&mut spec)?;
    fs::create_dir_all(out).map_err(|e| Failure::Io(format!("{}: {e}", out.display())))?;
    let resolved_json = serde_json::to_string_pretty(&spec).map_err(|e| Failure::Io(e.to_string()))? + "\n";
    write_file(&out.join("spec_resolved.json"), resolved_json.as_bytes())?;

    let tagged = &r.flows[&r.tagged];
    let mode = mode_of(r.independence);
    let mut lines: Vec<Line> = Vec::new();

    let wants = |m: MetricLit| r.metrics.contains(&m);
    let analysis = if wants(MetricLit::Backlog) || wants(MetricLit::Delay) || wants(MetricLit::Output) {
        let net = NetworkSpec {
            nodes: r.nodes.iter().map(|n| n.model.clone()).collect(),
            tagged: tagged.arrival.clone(),
            cross: r.nodes.iter().map(|n| n.cross.iter().map(|c| r.flows[c].arrival.clone()).collect()).collect(),
            independence: r.independence,
        };
        let a = analyze_tandem(&net, &r.x_grid, &r.delay_grid, &r.num)?;
        let out_curve = if wants(MetricLit::Output) { Some(tandem_output(&net, &a, &r.num)?) } else { None };
        Some((a, out_curve))
    } else {
        None
    };

    let mut seen = HashSet::new();
    for m in r.metrics.iter().filter(|m| seen.insert(**m)) {
        match (m, &analysis) {
            (MetricLit::Arrival, _) => lines.push(Line {
                report: tail_report(Metric::Arrival, &tagged.arrival.bound, &r.x_grid, BoundMode::General),
                verdict: None,
            }),
            (MetricLit::Backlog, Some((a, _))) => lines.push(Line { report: a.backlog.clone(), verdict: None }),
            (MetricLit::Delay, Some((a, _))) => {
                lines.push(Line { report: a.delay.clone(), verdict: None });
                if let Some(d2) = &a.delay_det_server {
                    lines.push(Line { report: d2.clone(), verdict: None });
                }
            }
            (MetricLit::Output, Some((_, Some(o)))) => {
                lines.push(Line { report: tail_report(Metric::Output, &o.bound, &r.x_grid, mode), verdict: None })
            }
            _ => unreachable!("analysis runs whenever a tandem metric is requested"),
        }
    }

    if let Some(plan) = &r.validation {
        validate_lines(&r, tagged, plan, &mut lines, out)?;
    }

    write_file(&out.join("bounds.csv"), &bounds_csv(&lines)?)?;
    write_file(&out.join("verdict.txt"), verdict_text(&lines).as_bytes())?;

    let verdicts = lines
        .iter()
        .filter_map(|l| {
            l.verdict.map(|v| (l.report.metric.as_str().to_string(), l.report.mode.as_str().to_string(), v.pass))
        })
        .collect();
    Ok(RunSummary { verdicts })
}

fn write_tail(out: &Path, metric: Metric, tail: &EmpiricalTail) -> Outcome<()> {
    let mut buf = Vec::new();
    tail.write_csv(&mut buf).map_err(|e| Failure::Io(e.to_string()))?;
    write_file(&out.join(format!("empirical_{}.csv", metric.as_str())), &buf)
}

fn validate_lines(
    r: &Resolved,
    tagged: &FlowModel,
    plan: &ValidationPlan,
    lines: &mut [Line],
    out: &Path,
) -> Outcome<()> {
    let present: HashSet<&'static str> = lines.iter().map(|l| l.report.metric.as_str()).collect();
    let wants = |m: Metric| present.contains(m.as_str());
    let Some(dist) = &tagged.dist else {
        return unsupported("validation needs the analysed flow given as a traffic literal");
    };

    if wants(Metric::Arrival) {
        if tagged.arrival.alpha.long_run_slope() == f64::INFINITY {
            return unsupported("arrival validation needs a finite arrival curve");
        }
        let tail = simulate::empirical_mbc_tail(dist, &tagged.arrival.alpha, &r.x_grid, &plan.cfg)?;
        write_tail(out, Metric::Arrival, &tail)?;
        for l in lines.iter_mut().filter(|l| l.report.metric == Metric::Arrival) {
            l.verdict = Some(simulate::validate(&l.report, &tail)?);
        }
    }

    if wants(Metric::Backlog) || wants(Metric::Delay) {
        if r.nodes.iter().any(|n| !n.cross.is_empty()) {
            return unsupported("validation does not simulate cross traffic");
        }
        let sims: Option<Vec<NodeSim>> = r.nodes.iter().map(|n| n.sim.clone()).collect();
        let Some(sims) = sims else {
            return unsupported("validation needs strict rate servers with traffic-literal impairments");
        };
        let samples = simulate::simulate_tandem(dist, &sims, plan.d_max, &plan.cfg)?;
        let delta = plan.cfg.delta;
        let backlog = simulate::empirical_backlog_tail(&samples, &r.x_grid, delta);
        let delay_x: Vec<f64> = r.delay_grid.iter().map(|&d| d as f64).collect();
        let delay = simulate::empirical_delay_tail(&samples, &delay_x, delta);
        for l in lines.iter_mut() {
            let tail = match l.report.metric {
                Metric::Backlog => &backlog,
                Metric::Delay => &delay,
                _ => continue,
            };
            l.verdict = Some(simulate::validate(&l.report, tail)?);
        }
        if wants(Metric::Backlog) {
            write_tail(out, Metric::Backlog, &backlog)?;
        }
        if wants(Metric::Delay) {
            write_tail(out, Metric::Delay, &delay)?;
        }
    }
    Ok(())
}

/// Parses the spec named by `args`, applies the flag overrides and runs it.
pub fn analyze(args: &AnalyzeArgs) -> Outcome<RunSummary> {
    let mut spec = parse_spec(&args.spec)?;
    if let Some(m) = args.mode {
        spec.analysis.mode = Some(m);
    }
    if let Some(s) = args.grid_step {
        spec.analysis.grid_step = Some(s);
    }
    if args.validate {
        spec.validation.get_or_insert_with(ValidationSpec::default).enabled = true;
    }
    if let Some(seed) = args.seed {
        spec.validation.get_or_insert_with(ValidationSpec::default).seed = Some(seed);
    }
    run(spec, &args.out)
}

/// Entry point of the `snc` binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Analyze(a) => match analyze(&a) {
            Ok(summary) => i32::from(summary.failed()),
            Err(f) => {
                eprintln!("{}", f.line());
                f.exit_code()
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "flows": [{"id": "f", "arrival": {"alpha": {"kind": "affine", "rho": 1.0, "sigma": 2.0},
                                           "f": {"kind": "deterministic"}}}],
        "nodes": [{"id": "n", "server": {"kind": "sc", "beta": {"kind": "rate_latency", "R": 2.0, "T": 1},
                                         "g": {"kind": "deterministic"}}}],
        "analysis": {"flow": "f", "x_grid": {"start": 0, "stop": 5, "step": 1}}
    }"#;

    #[test]
    fn minimal_spec_gets_defaults() {
        let mut spec = parse_spec_str(MINIMAL).unwrap();
        let r = resolve(&mut spec).unwrap();
        assert_eq!(r.metrics, vec![MetricLit::Backlog, MetricLit::Delay]);
        assert_eq!(r.x_grid, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(r.delay_grid.len(), 21);
        assert_eq!(spec.analysis.mode, Some(ModeLit::General));
        assert_eq!(spec.analysis.y_max, Some(100));
        assert_eq!(spec.analysis.s_max, Some(120));
        assert_eq!(spec.analysis.grid_step, Some(0.01));
        assert!(r.validation.is_none());
    }

    #[test]
    fn unknown_field_is_named() {
        let bad = MINIMAL.replace("\"x_grid\"", "\"colour\": 1, \"x_grid\"");
        let err = parse_spec_str(&bad).unwrap_err();
        assert_eq!(err.kind(), "SchemaError");
        assert!(err.line().contains("colour"), "{}", err.line());
        assert_eq!(err.exit_code(), 2);

        let nested = MINIMAL.replace("\"rho\": 1.0", "\"rho\": 1.0, \"burst\": 3");
        assert!(parse_spec_str(&nested).unwrap_err().line().contains("burst"));

        let syntax = parse_spec_str("{\"flows\": [").unwrap_err();
        assert_eq!(syntax.kind(), "ParseError");
        assert!(syntax.line().contains("line 1"));
    }

    #[test]
    fn independent_mode_rejects_sc_nodes() {
        let mut spec = parse_spec_str(MINIMAL).unwrap();
        spec.analysis.mode = Some(ModeLit::Independent);
        let err = resolve(&mut spec).err().unwrap();
        assert_eq!(err.kind(), "SchemaError");
        assert!(err.line().contains("strict"));
    }

    #[test]
    fn dangling_ids_are_schema_errors() {
        let mut spec = parse_spec_str(MINIMAL).unwrap();
        spec.analysis.flow = "g".into();
        assert_eq!(resolve(&mut spec).err().unwrap().kind(), "SchemaError");
        let mut spec = parse_spec_str(MINIMAL).unwrap();
        spec.nodes[0].cross = vec!["h".into()];
        assert_eq!(resolve(&mut spec).err().unwrap().kind(), "SchemaError");
    }

    #[test]
    fn traffic_literal_expands_and_records_theta() {
        let mut t = TrafficLit::Bernoulli {
            p: 0.3,
            batch: 1.0,
            theta: None,
            r: 0.6,
            theta_grid: Some(vec![0.5, 1.0, 1.5]),
            x_star: None,
        };
        let (_, arrival) = t.expand().unwrap();
        let TrafficLit::Bernoulli { theta: Some(th), x_star: Some(xs), .. } = t else { panic!() };
        assert_eq!(xs, 10.0);
        assert_eq!(arrival.bound.max_theta(), Some(th));

        let mut infeasible =
            TrafficLit::Bernoulli { p: 0.9, batch: 1.0, theta: Some(1.0), r: 0.5, theta_grid: None, x_star: None };
        let err = infeasible.expand().err().unwrap();
        assert_eq!((err.kind(), err.exit_code()), ("RateTooSmall", 3));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Failure::Model(Error::NotInF("x".into())).exit_code(), 3);
        assert_eq!(Failure::Model(Error::DivergentDeconvolution).exit_code(), 3);
        assert_eq!(Failure::Model(Error::UnsupportedTopology("x".into())).exit_code(), 2);
        assert_eq!(Failure::Parse("x".into()).exit_code(), 2);
    }
}
