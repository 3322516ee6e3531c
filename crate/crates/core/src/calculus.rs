//! Composition properties of the model layer: superposition, concatenation,
//! output characterisation, leftover service and backlog/delay guarantees.
//!
//! Every property comes in a general form, where bounding functions combine by
//! (min,+) convolution and nothing is assumed about dependence, and an
//! independent form, where they combine through the Stieltjes convolution of
//! their complements. The independent forms take stochastic strict servers.

use crate::curves::{self, Curve};
use crate::models::{
    strict_to_service_curve, ArrivalVariant, ServiceCurveModel, ServiceVariant, StochasticArrivalCurve, StrictServer,
};
use crate::scalar::{Scalar, Time};
use crate::tailbounds::{auto_grid, minplus_conv_bar_on, prob_at, stieltjes_conv_bound, TailBound, XGrid};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Backlog,
    Delay,
    /// Tail of a flow's own m.b.c statistic `M(t)` against its bound `f`.
    Arrival,
    /// Bound of the output characterisation.
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMode {
    General,
    Independent,
    /// Delay bound that shifts the service curve; deterministic servers only.
    DeterministicServer,
}

impl Metric {
    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Backlog => "backlog",
            Metric::Delay => "delay",
            Metric::Arrival => "arrival",
            Metric::Output => "output",
        }
    }
}

impl BoundMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundMode::General => "general",
            BoundMode::Independent => "independent",
            BoundMode::DeterministicServer => "deterministic_server",
        }
    }
}

/// Violation probabilities `P{metric > x}` on a grid of `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport<S = f64> {
    pub metric: Metric,
    /// Amounts for backlog, slot counts for delay.
    pub x_grid: Vec<S>,
    pub values: Vec<S>,
    pub mode: BoundMode,
    /// Set when the service cannot keep up with the arrivals in the long run.
    pub vacuous: bool,
}

impl<S: Scalar> BoundReport<S> {
    /// Smallest `x` whose bound is exactly 0.
    pub fn first_zero(&self) -> Option<S> {
        self.x_grid.iter().zip(&self.values).find(|(_, v)| **v == S::zero()).map(|(x, _)| *x)
    }
}

/// Numerical knobs shared by the composition operations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Numerics<S = f64> {
    /// Amount-grid step for numeric bound convolutions; `None` picks
    /// `0.05/θ` from the inputs (0.01 when no input has a decay rate).
    pub grid_step: Option<S>,
    /// Minimum extent of the amount grid.
    pub grid_extent: S,
    /// Truncation of deconvolution suprema.
    pub y_max: Time,
    /// Truncation of the deficit infima.
    pub s_max: Time,
}

impl<S: Scalar> Default for Numerics<S> {
    fn default() -> Self {
        Self { grid_step: None, grid_extent: S::lit(30.0), y_max: 1000, s_max: 1000 }
    }
}

impl<S: Scalar> Numerics<S> {
    /// Amount grid for combining the given bounds.
    pub fn grid_for(&self, bounds: &[&TailBound<S>]) -> XGrid<S> {
        let auto = auto_grid(bounds, self.grid_extent);
        match self.grid_step {
            Some(step) => XGrid::covering(step, auto.last()).expect("validated step"),
            None => auto,
        }
    }
}

fn general_combine<S: Scalar>(f: &TailBound<S>, g: &TailBound<S>, num: &Numerics<S>) -> TailBound<S> {
    minplus_conv_bar_on(f, g, &num.grid_for(&[f, g]))
}

/// `1 − f̄ ∗ ḡ`, skipping the grid when either side is identically 0.
fn indep_combine<S: Scalar>(f: &TailBound<S>, g: &TailBound<S>, num: &Numerics<S>) -> Result<TailBound<S>> {
    if f.is_deterministic() {
        return Ok(g.clone());
    }
    if g.is_deterministic() {
        return Ok(f.clone());
    }
    stieltjes_conv_bound(f, g, &num.grid_for(&[f, g]))
}

fn require_mbc<S: Scalar>(flows: &[StochasticArrivalCurve<S>]) -> Result<()> {
    if flows.is_empty() {
        return Err(Error::InvalidParameter("no flows to superpose".into()));
    }
    if let Some(f) = flows.iter().find(|f| f.variant != ArrivalVariant::Mbc) {
        return Err(Error::VariantMismatch(format!("superposition needs m.b.c curves, got {}", f.variant)));
    }
    Ok(())
}

fn superpose_with<S: Scalar>(
    flows: &[StochasticArrivalCurve<S>],
    mut combine: impl FnMut(&TailBound<S>, &TailBound<S>) -> Result<TailBound<S>>,
) -> Result<StochasticArrivalCurve<S>> {
    require_mbc(flows)?;
    let mut alpha = flows[0].alpha.clone();
    let mut bound = flows[0].bound.clone();
    for f in &flows[1..] {
        alpha = curves::sum(&alpha, &f.alpha);
        bound = combine(&bound, &f.bound)?;
    }
    Ok(StochasticArrivalCurve { variant: ArrivalVariant::Mbc, alpha, bound })
}

/// Aggregate of m.b.c flows: `⟨f₁ ⊗ … ⊗ f_N, Σ αᵢ⟩`.
pub fn superpose<S: Scalar>(
    flows: &[StochasticArrivalCurve<S>],
    num: &Numerics<S>,
) -> Result<StochasticArrivalCurve<S>> {
    superpose_with(flows, |f, g| Ok(general_combine(f, g, num)))
}

/// Aggregate of mutually independent m.b.c flows: `⟨1 − f̄₁ ∗ … ∗ f̄_N, Σ αᵢ⟩`.
pub fn superpose_indep<S: Scalar>(
    flows: &[StochasticArrivalCurve<S>],
    num: &Numerics<S>,
) -> Result<StochasticArrivalCurve<S>> {
    superpose_with(flows, |f, g| indep_combine(f, g, num))
}

/// Tandem of stochastic service curves: `⟨g¹ ⊗ … ⊗ g^N, β¹ ⊗ … ⊗ β^N⟩`.
///
/// Weak service curves do not concatenate and are rejected.
pub fn concatenate<S: Scalar>(servers: &[ServiceCurveModel<S>], num: &Numerics<S>) -> Result<ServiceCurveModel<S>> {
    concatenate_sc_with(servers, |f, g| Ok(general_combine(f, g, num)))
}

fn concatenate_sc_with<S: Scalar>(
    servers: &[ServiceCurveModel<S>],
    mut combine: impl FnMut(&TailBound<S>, &TailBound<S>) -> Result<TailBound<S>>,
) -> Result<ServiceCurveModel<S>> {
    let Some(first) = servers.first() else {
        return Err(Error::InvalidParameter("no servers to concatenate".into()));
    };
    if servers.iter().any(|s| s.variant != ServiceVariant::Sc) {
        return Err(Error::VariantMismatch("weak stochastic service curves do not concatenate".into()));
    }
    let mut beta = first.beta.clone();
    let mut bound = first.bound.clone();
    for s in &servers[1..] {
        beta = curves::min_plus_conv(&beta, &s.beta);
        bound = combine(&bound, &s.bound)?;
    }
    Ok(ServiceCurveModel { variant: ServiceVariant::Sc, beta, bound })
}

/// Tandem of strict servers with mutually independent impairments:
/// `⟨1 − ḡ¹ ∗ … ∗ ḡ^N, (β̂¹ − γ¹) ⊗ … ⊗ (β̂^N − γ^N)⟩`.
pub fn concatenate_indep<S: Scalar>(servers: &[StrictServer<S>], num: &Numerics<S>) -> Result<ServiceCurveModel<S>> {
    let scs = servers.iter().map(strict_to_service_curve).collect::<Result<Vec<_>>>()?;
    concatenate_sc_indep(&scs, num)
}

/// Concatenation of service curves whose deficits are mutually independent.
pub fn concatenate_sc_indep<S: Scalar>(
    servers: &[ServiceCurveModel<S>],
    num: &Numerics<S>,
) -> Result<ServiceCurveModel<S>> {
    concatenate_sc_with(servers, |f, g| indep_combine(f, g, num))
}

fn require_output_pair<S: Scalar>(flow: &StochasticArrivalCurve<S>, server: &ServiceCurveModel<S>) -> Result<()> {
    if flow.variant == ArrivalVariant::Tac || server.variant != ServiceVariant::Sc {
        return Err(Error::VariantMismatch(format!(
            "output characterisation needs an m.b.c or v.b.c arrival and a stochastic service curve, got {}/{}",
            flow.variant, server.variant
        )));
    }
    Ok(())
}

/// Departures of a flow: `⟨f ⊗ g, α ⊘ β⟩`.
pub fn output<S: Scalar>(
    flow: &StochasticArrivalCurve<S>,
    server: &ServiceCurveModel<S>,
    num: &Numerics<S>,
) -> Result<StochasticArrivalCurve<S>> {
    require_output_pair(flow, server)?;
    let alpha = curves::min_plus_deconv(&flow.alpha, &server.beta, num.y_max)?;
    let bound = general_combine(&flow.bound, &server.bound, num);
    Ok(StochasticArrivalCurve { variant: flow.variant, alpha, bound })
}

/// Departures of a flow independent of the server's impairment:
/// `⟨1 − f̄ ∗ ḡ, α ⊘ (β̂ − γ)⟩`.
pub fn output_indep<S: Scalar>(
    flow: &StochasticArrivalCurve<S>,
    server: &StrictServer<S>,
    num: &Numerics<S>,
) -> Result<StochasticArrivalCurve<S>> {
    output_sc_indep(flow, &strict_to_service_curve(server)?, num)
}

/// As [`output_indep`] for a service curve whose deficit is independent of the flow.
pub fn output_sc_indep<S: Scalar>(
    flow: &StochasticArrivalCurve<S>,
    server: &ServiceCurveModel<S>,
    num: &Numerics<S>,
) -> Result<StochasticArrivalCurve<S>> {
    require_output_pair(flow, server)?;
    let alpha = curves::min_plus_deconv(&flow.alpha, &server.beta, num.y_max)?;
    let bound = indep_combine(&flow.bound, &server.bound, num)?;
    Ok(StochasticArrivalCurve { variant: flow.variant, alpha, bound })
}

fn require_leftover_pair<S: Scalar>(server: &ServiceCurveModel<S>, cross: &StochasticArrivalCurve<S>) -> Result<()> {
    let ok = match cross.variant {
        ArrivalVariant::Mbc => true,
        ArrivalVariant::Vbc => server.variant == ServiceVariant::WeakSc,
        ArrivalVariant::Tac => false,
    };
    if !ok {
        return Err(Error::VariantMismatch(format!(
            "no leftover service for a {} cross flow at a {} server",
            cross.variant, server.variant
        )));
    }
    Ok(())
}

/// Service left to a flow sharing the server with `cross`: `⟨g ⊗ f₂, β − α₂⟩`.
/// The result keeps the server's variant.
pub fn leftover<S: Scalar>(
    server: &ServiceCurveModel<S>,
    cross: &StochasticArrivalCurve<S>,
    num: &Numerics<S>,
) -> Result<ServiceCurveModel<S>> {
    require_leftover_pair(server, cross)?;
    let beta = curves::difference(&server.beta, &cross.alpha)?;
    let bound = general_combine(&server.bound, &cross.bound, num);
    Ok(ServiceCurveModel { variant: server.variant, beta, bound })
}

/// Leftover service of a strict server whose impairment is independent of the
/// cross flow: `⟨1 − ḡ ∗ f̄₂, β̂ − γ − α₂⟩`.
pub fn leftover_indep<S: Scalar>(
    server: &StrictServer<S>,
    cross: &StochasticArrivalCurve<S>,
    num: &Numerics<S>,
) -> Result<ServiceCurveModel<S>> {
    let sc = strict_to_service_curve(server)?;
    require_leftover_pair(&sc, cross)?;
    let beta = curves::difference(&sc.beta, &cross.alpha)?;
    let bound = indep_combine(&sc.bound, &cross.bound, num)?;
    Ok(ServiceCurveModel { variant: ServiceVariant::Sc, beta, bound })
}

fn require_guarantee_pair<S: Scalar>(flow: &StochasticArrivalCurve<S>) -> Result<()> {
    if flow.variant == ArrivalVariant::Tac {
        return Err(Error::VariantMismatch("backlog and delay guarantees need an m.b.c or v.b.c arrival".into()));
    }
    Ok(())
}

fn vacuous_report<S: Scalar>(metric: Metric, x_grid: Vec<S>, mode: BoundMode) -> BoundReport<S> {
    let values = vec![S::one(); x_grid.len()];
    BoundReport { metric, x_grid, values, mode, vacuous: true }
}

/// `P{·} ≤ h(arg)` with `h(y) = +∞` for `y < 0`, capped at 1.
fn report_value<S: Scalar>(h: &TailBound<S>, arg: S) -> S {
    if arg < S::zero() {
        S::one()
    } else {
        prob_at(h, arg)
    }
}

fn backlog_report<S: Scalar>(
    alpha: &Curve<S>,
    beta: &Curve<S>,
    h: &TailBound<S>,
    x_grid: &[S],
    num: &Numerics<S>,
    mode: BoundMode,
) -> Result<BoundReport<S>> {
    let d = curves::inf_deficit(beta, alpha, 0, num.s_max)?;
    if d == S::neg_infinity() {
        return Ok(vacuous_report(Metric::Backlog, x_grid.to_vec(), mode));
    }
    let values = x_grid.iter().map(|x| report_value(h, *x + d)).collect();
    Ok(BoundReport { metric: Metric::Backlog, x_grid: x_grid.to_vec(), values, mode, vacuous: false })
}

fn delay_report<S: Scalar>(
    x_slots: &[Time],
    mode: BoundMode,
    h: &TailBound<S>,
    deficit: impl Fn(Time) -> Result<S>,
) -> Result<BoundReport<S>> {
    let x_grid: Vec<S> = x_slots.iter().map(|x| S::from_time(*x)).collect();
    let mut values = Vec::with_capacity(x_slots.len());
    for &x in x_slots {
        let d = deficit(x)?;
        if d == S::neg_infinity() {
            return Ok(vacuous_report(Metric::Delay, x_grid, mode));
        }
        values.push(report_value(h, d));
    }
    Ok(BoundReport { metric: Metric::Delay, x_grid, values, mode, vacuous: false })
}

/// `P{B(t) > x} ≤ (f ⊗ g)(x + inf_s [β(s) − α(s)])`.
pub fn backlog_bound<S: Scalar>(
    flow: &StochasticArrivalCurve<S>,
    server: &ServiceCurveModel<S>,
    x_grid: &[S],
    num: &Numerics<S>,
) -> Result<BoundReport<S>> {
    require_guarantee_pair(flow)?;
    let h = general_combine(&flow.bound, &server.bound, num);
    backlog_report(&flow.alpha, &server.beta, &h, x_grid, num, BoundMode::General)
}

/// `P{D(t) > x} ≤ (f ⊗ g)(inf_s [β(s) − α(s − x)])`, with `α(u) = α(0)` for `u < 0`.
pub fn delay_bound<S: Scalar>(
    flow: &StochasticArrivalCurve<S>,
    server: &ServiceCurveModel<S>,
    x_slots: &[Time],
    num: &Numerics<S>,
) -> Result<BoundReport<S>> {
    require_guarantee_pair(flow)?;
    let h = general_combine(&flow.bound, &server.bound, num);
    delay_report(x_slots, BoundMode::General, &h, |x| curves::inf_deficit(&server.beta, &flow.alpha, x, num.s_max))
}

/// `P{D(t) > x} ≤ f(inf_s [β(s + x) − α(s)])` for a deterministic server.
pub fn delay_bound_det_server<S: Scalar>(
    flow: &StochasticArrivalCurve<S>,
    server: &ServiceCurveModel<S>,
    x_slots: &[Time],
    num: &Numerics<S>,
) -> Result<BoundReport<S>> {
    require_guarantee_pair(flow)?;
    if !server.is_deterministic() {
        return Err(Error::VariantMismatch("the shifted-service delay bound needs a deterministic server".into()));
    }
    delay_report(x_slots, BoundMode::DeterministicServer, &flow.bound, |x| {
        curves::inf_deficit_shifted_service(&server.beta, &flow.alpha, x, num.s_max)
    })
}

/// Backlog guarantee for a flow independent of the server's impairment:
/// `P{B(t) > x} ≤ 1 − (f̄ ∗ ḡ)(x + inf_s [β(s) − α(s)])`, `β = β̂ − γ`.
pub fn backlog_bound_indep<S: Scalar>(
    flow: &StochasticArrivalCurve<S>,
    server: &StrictServer<S>,
    x_grid: &[S],
    num: &Numerics<S>,
) -> Result<BoundReport<S>> {
    backlog_bound_sc_indep(flow, &strict_to_service_curve(server)?, x_grid, num)
}

/// Delay counterpart of [`backlog_bound_indep`].
pub fn delay_bound_indep<S: Scalar>(
    flow: &StochasticArrivalCurve<S>,
    server: &StrictServer<S>,
    x_slots: &[Time],
    num: &Numerics<S>,
) -> Result<BoundReport<S>> {
    delay_bound_sc_indep(flow, &strict_to_service_curve(server)?, x_slots, num)
}

fn backlog_bound_sc_indep<S: Scalar>(
    flow: &StochasticArrivalCurve<S>,
    server: &ServiceCurveModel<S>,
    x_grid: &[S],
    num: &Numerics<S>,
) -> Result<BoundReport<S>> {
    require_guarantee_pair(flow)?;
    let h = indep_combine(&flow.bound, &server.bound, num)?;
    backlog_report(&flow.alpha, &server.beta, &h, x_grid, num, BoundMode::Independent)
}

fn delay_bound_sc_indep<S: Scalar>(
    flow: &StochasticArrivalCurve<S>,
    server: &ServiceCurveModel<S>,
    x_slots: &[Time],
    num: &Numerics<S>,
) -> Result<BoundReport<S>> {
    require_guarantee_pair(flow)?;
    let h = indep_combine(&flow.bound, &server.bound, num)?;
    delay_report(x_slots, BoundMode::Independent, &h, |x| curves::inf_deficit(&server.beta, &flow.alpha, x, num.s_max))
}

/// Server at one hop of a tandem.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeModel<S = f64> {
    Service(ServiceCurveModel<S>),
    Strict(StrictServer<S>),
}

impl<S: Scalar> NodeModel<S> {
    pub fn service_curve(&self) -> Result<ServiceCurveModel<S>> {
        match self {
            NodeModel::Service(s) => Ok(s.clone()),
            NodeModel::Strict(ss) => strict_to_service_curve(ss),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Independence {
    /// No assumption on dependence: (min,+) combination.
    General,
    /// Tagged flow, cross flows and impairments mutually independent.
    Independent,
}

/// Tagged flow through a tandem; `cross[n]` enters and leaves at node `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec<S = f64> {
    pub nodes: Vec<NodeModel<S>>,
    pub tagged: StochasticArrivalCurve<S>,
    pub cross: Vec<Vec<StochasticArrivalCurve<S>>>,
    pub independence: Independence,
}

/// Everything [`analyze_tandem`] derives for the tagged flow.
#[derive(Debug, Clone, PartialEq)]
pub struct TandemAnalysis<S = f64> {
    pub backlog: BoundReport<S>,
    pub delay: BoundReport<S>,
    /// Shifted-service delay bound, present when the end-to-end server is deterministic.
    pub delay_det_server: Option<BoundReport<S>>,
    pub end_to_end: ServiceCurveModel<S>,
    pub leftovers: Vec<ServiceCurveModel<S>>,
    pub cross_aggregates: Vec<Option<StochasticArrivalCurve<S>>>,
}

/// Per node: aggregate the cross flows and take the leftover service; then
/// concatenate along the path and derive backlog and delay guarantees.
pub fn analyze_tandem<S: Scalar>(
    spec: &NetworkSpec<S>,
    backlog_x: &[S],
    delay_x: &[Time],
    num: &Numerics<S>,
) -> Result<TandemAnalysis<S>> {
    if spec.nodes.is_empty() {
        return Err(Error::UnsupportedTopology("a tandem needs at least one node".into()));
    }
    if spec.cross.len() != spec.nodes.len() {
        return Err(Error::UnsupportedTopology(format!(
            "{} cross-flow lists for {} nodes",
            spec.cross.len(),
            spec.nodes.len()
        )));
    }
    let indep = spec.independence == Independence::Independent;
    let mut leftovers = Vec::with_capacity(spec.nodes.len());
    let mut cross_aggregates = Vec::with_capacity(spec.nodes.len());
    for (node, cross) in spec.nodes.iter().zip(&spec.cross) {
        let aggregate = match (cross.is_empty(), indep) {
            (true, _) => None,
            (false, false) => Some(superpose(cross, num)?),
            (false, true) => Some(superpose_indep(cross, num)?),
        };
        let left = match (indep, node, &aggregate) {
            (false, node, None) => node.service_curve()?,
            (false, node, Some(agg)) => leftover(&node.service_curve()?, agg, num)?,
            (true, NodeModel::Strict(ss), None) => strict_to_service_curve(ss)?,
            (true, NodeModel::Strict(ss), Some(agg)) => leftover_indep(ss, agg, num)?,
            (true, NodeModel::Service(_), _) => {
                return Err(Error::VariantMismatch("independent analysis needs strict servers".into()))
            }
        };
        leftovers.push(left);
        cross_aggregates.push(aggregate);
    }
    let end_to_end = match (leftovers.len(), indep) {
        (1, _) => leftovers[0].clone(),
        (_, false) => concatenate(&leftovers, num)?,
        (_, true) => concatenate_sc_indep(&leftovers, num)?,
    };
    let (backlog, delay) = if indep {
        (
            backlog_bound_sc_indep(&spec.tagged, &end_to_end, backlog_x, num)?,
            delay_bound_sc_indep(&spec.tagged, &end_to_end, delay_x, num)?,
        )
    } else {
        (
            backlog_bound(&spec.tagged, &end_to_end, backlog_x, num)?,
            delay_bound(&spec.tagged, &end_to_end, delay_x, num)?,
        )
    };
    let delay_det_server = if end_to_end.is_deterministic() {
        Some(delay_bound_det_server(&spec.tagged, &end_to_end, delay_x, num)?)
    } else {
        None
    };
    Ok(TandemAnalysis { backlog, delay, delay_det_server, end_to_end, leftovers, cross_aggregates })
}

/// Output characterisation of the tagged flow after the whole tandem.
pub fn tandem_output<S: Scalar>(
    spec: &NetworkSpec<S>,
    analysis: &TandemAnalysis<S>,
    num: &Numerics<S>,
) -> Result<StochasticArrivalCurve<S>> {
    match spec.independence {
        Independence::General => output(&spec.tagged, &analysis.end_to_end, num),
        Independence::Independent => output_sc_indep(&spec.tagged, &analysis.end_to_end, num),
    }
}
