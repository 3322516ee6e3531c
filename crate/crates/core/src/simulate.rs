//! Discrete-time fluid simulation of strict servers, used to check analytic
//! bounds against empirical tails.
//!
//! Slot convention: arrivals of slot `t` land at the start of the slot, the
//! server then drains up to `(c − i(t))⁺` during the slot, and every quantity
//! is measured at the end of the slot. Traffic can therefore leave in the slot
//! it arrived in.

use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::beta::beta_reg;

use crate::calculus::BoundReport;
use crate::scalar::pos;
use crate::sigma_rho::IncrementDist;
use crate::{Curve, Error, Result};

/// Backlog below this is treated as an empty queue.
const EMPTY: f64 = 1e-9;

/// Per-replication RNG streams: flow, then one per node impairment.
const STREAMS_PER_REP: u64 = 64;

/// One sample path through a server.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    /// Per-slot arrivals `a(1..=T)`.
    pub a: Vec<f64>,
    /// Per-slot impairment `i(1..=T)`.
    pub i: Vec<f64>,
    /// Cumulative arrivals `A(0..=T)`, `A(0) = 0`.
    pub arrivals: Vec<f64>,
    /// Cumulative departures `A*(0..=T)`, `A*(0) = 0`.
    pub departures: Vec<f64>,
    /// Backlog at the end of each slot, `B(0) = 0`.
    pub backlog: Vec<f64>,
    pub seed: u64,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Per-slot departures.
    pub fn served(&self) -> Vec<f64> {
        self.departures.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Writes `slot,a,i,A,A_star,B`.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["slot", "a", "i", "A", "A_star", "B"])?;
        for t in 0..=self.len() {
            let (a, i) = if t == 0 { (0.0, 0.0) } else { (self.a[t - 1], self.i[t - 1]) };
            out.serialize((t, a, i, self.arrivals[t], self.departures[t], self.backlog[t]))?;
        }
        out.flush()
    }
}

fn rng_for(seed: u64, rep: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep * STREAMS_PER_REP + purpose);
    rng
}

fn sample_with<R: Rng>(dist: &IncrementDist, t_len: usize, rng: &mut R) -> Vec<f64> {
    match dist {
        IncrementDist::Bernoulli { p, batch } => {
            (0..t_len).map(|_| if rng.random::<f64>() < *p { *batch } else { 0.0 }).collect()
        }
        IncrementDist::Discrete { values, probs } => {
            let index = WeightedIndex::new(probs).expect("validated probabilities");
            (0..t_len).map(|_| values[index.sample(rng)]).collect()
        }
    }
}

/// `T` i.i.d. increments, reproducible from `(seed, stream)`.
pub fn gen_increments(dist: &IncrementDist, t_len: usize, seed: u64, stream: u64) -> Result<Vec<f64>> {
    dist.validate()?;
    if t_len == 0 {
        return Err(Error::InvalidParameter("trace length must be >= 1".into()));
    }
    Ok(sample_with(dist, t_len, &mut rng_for(seed, 0, stream)))
}

fn cumulative(xs: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len() + 1);
    out.push(0.0);
    let mut acc = 0.0;
    for x in xs {
        acc += x;
        out.push(acc);
    }
    out
}

/// Fluid FIFO queue with per-slot capacity `(c − i(t))⁺`:
/// `B(t) = (B(t−1) + a(t) − (c − i(t))⁺)⁺`.
pub fn run_strict_server(a: &[f64], c: f64, i: &[f64]) -> Result<Trace> {
    if a.len() != i.len() {
        return Err(Error::LengthMismatch(a.len(), i.len()));
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("capacity {c} must be finite and >= 0")));
    }
    if let Some(bad) = a.iter().chain(i).find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter(format!("increments must be finite and >= 0, got {bad}")));
    }
    let mut backlog = Vec::with_capacity(a.len() + 1);
    let mut served = Vec::with_capacity(a.len());
    backlog.push(0.0);
    let mut b = 0.0;
    for (&at, &it) in a.iter().zip(i) {
        let work = b + at;
        let mut next = pos(work - pos(c - it));
        if next <= EMPTY {
            next = 0.0;
        }
        served.push(work - next);
        backlog.push(next);
        b = next;
    }
    Ok(Trace {
        a: a.to_vec(),
        i: i.to_vec(),
        arrivals: cumulative(a),
        departures: cumulative(&served),
        backlog,
        seed: 0,
    })
}

/// Chains strict servers: each node's departures are the next node's arrivals.
pub fn run_tandem(a: &[f64], nodes: &[(f64, Vec<f64>)]) -> Result<Vec<Trace>> {
    let mut traces: Vec<Trace> = Vec::with_capacity(nodes.len());
    for (c, i) in nodes {
        let input = match traces.last() {
            Some(prev) => prev.served(),
            None => a.to_vec(),
        };
        traces.push(run_strict_server(&input, *c, i)?);
    }
    Ok(traces)
}

/// Checks the strict-server guarantee `A*(s,t) ≥ c(t−s) − I(s,t)` on every
/// maximal run of backlogged slots, plus causality and monotonicity.
pub fn check_trace_invariants(trace: &Trace, c: f64) -> std::result::Result<(), String> {
    let tol = |scale: f64| 1e-9 * (1.0 + scale.abs());
    let a = &trace.arrivals;
    let d = &trace.departures;
    if a[0] != 0.0 || d[0] != 0.0 {
        return Err("cumulative processes must start at 0".into());
    }
    for t in 1..a.len() {
        if a[t] < a[t - 1] || d[t] < d[t - 1] - tol(d[t]) {
            return Err(format!("cumulative process decreases at slot {t}"));
        }
        if d[t] > a[t] + tol(a[t]) {
            return Err(format!("departures exceed arrivals at slot {t}"));
        }
    }
    let imp = cumulative(&trace.i);
    let check = |s: usize, t: usize| {
        let lhs = d[t] - d[s];
        let rhs = c * (t - s) as f64 - (imp[t] - imp[s]);
        if lhs < rhs - tol(rhs) {
            Err(format!("strict service violated on ({s}, {t}]: {lhs} < {rhs}"))
        } else {
            Ok(())
        }
    };
    let mut t = 1;
    while t < a.len() {
        if trace.backlog[t] > 0.0 {
            let start = t - 1;
            while t < a.len() && trace.backlog[t] > 0.0 {
                check(t - 1, t)?;
                t += 1;
            }
            check(start, t - 1)?;
        } else {
            t += 1;
        }
    }
    Ok(())
}

/// `M(t) = sup_{0≤u≤s≤t} [A(u,s) − α(s−u)]` for every `t`.
///
/// Lags up to the horizon `H` of `α` are scanned directly; longer lags use
/// the affine tail through a running maximum of `slope·u − A(u)`, so the cost
/// is `O(T·H)`. For `α(t) = r·t` this is the usual `O(T)` recurrence.
pub fn mbc_path(a: &[f64], alpha: &Curve) -> Vec<f64> {
    let cum = cumulative(a);
    let grid = alpha.to_grid();
    let h = grid.horizon() as usize;
    let slope = grid.tail_slope();
    let alpha_h = alpha.eval(h as i64);
    let mut path = Vec::with_capacity(cum.len());
    let mut m = f64::NEG_INFINITY;
    let mut tail_best = f64::NEG_INFINITY;
    for s in 0..cum.len() {
        if s > h {
            let u = s - h - 1;
            tail_best = tail_best.max(slope * u as f64 - cum[u]);
        }
        let mut w = f64::NEG_INFINITY;
        for k in 0..=h.min(s) {
            w = w.max(cum[s] - cum[s - k] - alpha.eval(k as i64));
        }
        if tail_best > f64::NEG_INFINITY {
            w = w.max(cum[s] - slope * s as f64 + tail_best - alpha_h + slope * h as f64);
        }
        m = m.max(w);
        path.push(m);
    }
    path
}

/// Per-trace arrival statistics at the end of the trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalStats {
    /// `A(T − lag, T) − α(lag)`.
    pub tac: f64,
    /// `sup_{0≤s≤T} [A(s,T) − α(T−s)]`.
    pub vbc: f64,
    /// `M(T)`.
    pub mbc: f64,
}

pub fn arrival_stats(a: &[f64], alpha: &Curve, tac_lag: usize) -> ArrivalStats {
    let cum = cumulative(a);
    let t = a.len();
    let lag = tac_lag.min(t);
    let tac = cum[t] - cum[t - lag] - alpha.eval(lag as i64);
    let vbc = (0..=t).map(|s| cum[t] - cum[s] - alpha.eval((t - s) as i64)).fold(f64::NEG_INFINITY, f64::max);
    let mbc = *mbc_path(a, alpha).last().expect("nonempty path");
    ArrivalStats { tac, vbc, mbc }
}

/// Exceedance fractions `P̂{X > x}` with one-sided Clopper-Pearson margins.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalTail {
    pub x_grid: Vec<f64>,
    pub estimates: Vec<f64>,
    pub exceedances: Vec<u64>,
    pub n_reps: u64,
    pub delta: f64,
    /// `estimate − lower confidence limit`: the estimate may sit this far
    /// above a true tail without contradicting it at level `1 − δ`.
    pub slack: Vec<f64>,
    /// Upper confidence limit at level `1 − δ`.
    pub upper_conf: Vec<f64>,
}

impl EmpiricalTail {
    pub fn from_samples(samples: &[f64], x_grid: &[f64], delta: f64) -> Self {
        let n = samples.len() as u64;
        let exceedances: Vec<u64> = x_grid.iter().map(|x| samples.iter().filter(|s| **s > *x).count() as u64).collect();
        let estimates: Vec<f64> = exceedances.iter().map(|k| *k as f64 / n as f64).collect();
        let slack = exceedances.iter().zip(&estimates).map(|(k, e)| e - clopper_pearson_lower(*k, n, delta)).collect();
        let upper_conf = exceedances.iter().map(|k| clopper_pearson_upper(*k, n, delta)).collect();
        Self { x_grid: x_grid.to_vec(), estimates, exceedances, n_reps: n, delta, slack, upper_conf }
    }

    /// Writes `x,estimate,upper_conf`.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["x", "estimate", "upper_conf"])?;
        for k in 0..self.x_grid.len() {
            out.serialize((self.x_grid[k], self.estimates[k], self.upper_conf[k]))?;
        }
        out.flush()
    }
}

fn beta_quantile(a: f64, b: f64, q: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if beta_reg(a, b, mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One-sided lower confidence limit for a binomial proportion.
pub fn clopper_pearson_lower(k: u64, n: u64, delta: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        beta_quantile(k as f64, (n - k + 1) as f64, delta)
    }
}

/// One-sided upper confidence limit for a binomial proportion.
pub fn clopper_pearson_upper(k: u64, n: u64, delta: f64) -> f64 {
    if k >= n {
        1.0
    } else {
        beta_quantile((k + 1) as f64, (n - k) as f64, 1.0 - delta)
    }
}

/// Replication settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Slots per replication.
    pub t_len: usize,
    pub n_reps: usize,
    pub seed: u64,
    /// Confidence parameter of the binomial margins.
    pub delta: f64,
}

impl SimConfig {
    fn check(&self) -> Result<()> {
        if self.n_reps < 100 {
            return Err(Error::InvalidParameter(format!("n_reps = {} must be >= 100", self.n_reps)));
        }
        if self.t_len == 0 {
            return Err(Error::InvalidParameter("trace length must be >= 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!("delta = {} must lie in (0, 1)", self.delta)));
        }
        Ok(())
    }
}

/// Runs `f` on a pool capped by `SNC_THREADS`, if set.
pub fn with_thread_cap<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match std::env::var("SNC_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}

fn per_rep<T: Send>(cfg: &SimConfig, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    with_thread_cap(|| (0..cfg.n_reps as u64).into_par_iter().map(f).collect())
}

/// Empirical tail of `M(T)` for i.i.d. arrivals.
pub fn empirical_mbc_tail(
    dist: &IncrementDist,
    alpha: &Curve,
    x_grid: &[f64],
    cfg: &SimConfig,
) -> Result<EmpiricalTail> {
    Ok(empirical_arrival_tails(dist, alpha, x_grid, cfg, 1)?.mbc)
}

/// Empirical tails of the three arrival statistics on the same ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalTails {
    pub tac: EmpiricalTail,
    pub vbc: EmpiricalTail,
    pub mbc: EmpiricalTail,
}

pub fn empirical_arrival_tails(
    dist: &IncrementDist,
    alpha: &Curve,
    x_grid: &[f64],
    cfg: &SimConfig,
    tac_lag: usize,
) -> Result<ArrivalTails> {
    cfg.check()?;
    dist.validate()?;
    let stats = per_rep(cfg, |rep| {
        let a = sample_with(dist, cfg.t_len, &mut rng_for(cfg.seed, rep, 0));
        arrival_stats(&a, alpha, tac_lag)
    });
    let pick = |f: fn(&ArrivalStats) -> f64| {
        let xs: Vec<f64> = stats.iter().map(f).collect();
        EmpiricalTail::from_samples(&xs, x_grid, cfg.delta)
    };
    Ok(ArrivalTails { tac: pick(|s| s.tac), vbc: pick(|s| s.vbc), mbc: pick(|s| s.mbc) })
}

/// Strict rate server with an optional i.i.d. impairment.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSim {
    pub capacity: f64,
    pub impairment: Option<IncrementDist>,
}

/// End-to-end backlog and virtual delay of a tandem, one sample per replication.
#[derive(Debug, Clone, PartialEq)]
pub struct TandemSamples {
    pub backlog: Vec<f64>,
    /// Slots; `d_max + 1` stands for "not served within `d_max`".
    pub delay: Vec<f64>,
}

/// Measures `B(T − d_max)` and `D(T − d_max)` in each replication.
pub fn simulate_tandem(
    flow: &IncrementDist,
    nodes: &[NodeSim],
    d_max: usize,
    cfg: &SimConfig,
) -> Result<TandemSamples> {
    cfg.check()?;
    flow.validate()?;
    if nodes.is_empty() {
        return Err(Error::UnsupportedTopology("a tandem needs at least one node".into()));
    }
    if cfg.t_len <= d_max {
        return Err(Error::InsufficientHorizon { len: cfg.t_len, d_max });
    }
    let t0 = cfg.t_len - d_max;
    let reps = per_rep(cfg, |rep| -> Result<(f64, f64)> {
        let a = sample_with(flow, cfg.t_len, &mut rng_for(cfg.seed, rep, 0));
        let specs = nodes
            .iter()
            .enumerate()
            .map(|(k, n)| {
                let i = match &n.impairment {
                    Some(d) => sample_with(d, cfg.t_len, &mut rng_for(cfg.seed, rep, k as u64 + 1)),
                    None => vec![0.0; cfg.t_len],
                };
                (n.capacity, i)
            })
            .collect::<Vec<_>>();
        let traces = run_tandem(&a, &specs)?;
        let first = &traces[0];
        let last = traces.last().expect("nonempty tandem");
        Ok((end_to_end_backlog(first, last, t0), virtual_delay(first, last, t0, d_max) as f64))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let (backlog, delay) = reps.into_iter().unzip();
    Ok(TandemSamples { backlog, delay })
}

fn end_to_end_backlog(first: &Trace, last: &Trace, t: usize) -> f64 {
    let b = first.arrivals[t] - last.departures[t];
    if b <= EMPTY {
        0.0
    } else {
        b
    }
}

/// First `d` with `A*(t+d) ≥ A(t)`, or `d_max + 1` if none within `d_max`.
fn virtual_delay(first: &Trace, last: &Trace, t: usize, d_max: usize) -> usize {
    let target = first.arrivals[t] - EMPTY;
    (0..=d_max).find(|d| last.departures[t + d] >= target).unwrap_or(d_max + 1)
}

/// Backlog tail of a simulated tandem.
pub fn empirical_backlog_tail(samples: &TandemSamples, x_grid: &[f64], delta: f64) -> EmpiricalTail {
    EmpiricalTail::from_samples(&samples.backlog, x_grid, delta)
}

/// Virtual-delay tail of a simulated tandem.
pub fn empirical_delay_tail(samples: &TandemSamples, x_grid: &[f64], delta: f64) -> EmpiricalTail {
    EmpiricalTail::from_samples(&samples.delay, x_grid, delta)
}

/// Outcome of comparing a bound report with an empirical tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub pass: bool,
    /// `min_x [bound(x) − (estimate(x) − slack(x))]`; negative means FAIL.
    pub worst_margin: f64,
    pub worst_x: f64,
    pub vacuous: bool,
}

/// PASS iff `estimate − slack ≤ bound` at every grid point.
pub fn validate(report: &BoundReport, tail: &EmpiricalTail) -> Result<Verdict> {
    if report.x_grid.len() != tail.x_grid.len()
        || report.x_grid.iter().zip(&tail.x_grid).any(|(a, b)| (a - b).abs() > 1e-9 * (1.0 + a.abs()))
    {
        return Err(Error::GridMismatch);
    }
    let (worst_margin, worst_x) = (0..tail.x_grid.len())
        .map(|k| (report.values[k] - (tail.estimates[k] - tail.slack[k]), tail.x_grid[k]))
        .fold((f64::INFINITY, f64::NAN), |acc, m| if m.0 < acc.0 { m } else { acc });
    Ok(Verdict { pass: worst_margin >= 0.0, worst_margin, worst_x, vacuous: report.vacuous })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{BoundMode, Metric};

    fn report(x: &[f64], v: &[f64]) -> BoundReport {
        BoundReport {
            metric: Metric::Backlog,
            x_grid: x.to_vec(),
            values: v.to_vec(),
            mode: BoundMode::General,
            vacuous: false,
        }
    }

    #[test]
    fn increments_examples() {
        let full = IncrementDist::bernoulli(1.0, 2.0).unwrap();
        assert!(gen_increments(&full, 50, 1, 0).unwrap().iter().all(|a| *a == 2.0));
        let none = IncrementDist::bernoulli(0.0, 1.0).unwrap();
        assert!(gen_increments(&none, 50, 1, 0).unwrap().iter().all(|a| *a == 0.0));
        let half = IncrementDist::bernoulli(0.5, 1.0).unwrap();
        let xs = gen_increments(&half, 100_000, 7, 0).unwrap();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((mean - 0.5).abs() < 3.0 * (0.25f64 / 1e5).sqrt());
        assert_eq!(xs, gen_increments(&half, 100_000, 7, 0).unwrap());
        assert_ne!(xs, gen_increments(&half, 100_000, 7, 1).unwrap());
    }

    #[test]
    fn strict_server_examples() {
        let under = run_strict_server(&[1.0; 10], 2.0, &[0.0; 10]).unwrap();
        assert!(under.backlog.iter().all(|b| *b == 0.0));
        assert_eq!(under.arrivals, under.departures);

        let over = run_strict_server(&[3.0; 10], 2.0, &[0.0; 10]).unwrap();
        assert_eq!(over.backlog[10], 10.0);

        let outage = run_strict_server(&[1.0, 0.5, 2.0], 2.0, &[2.0; 3]).unwrap();
        assert_eq!(outage.departures, vec![0.0; 4]);
        assert_eq!(outage.backlog, vec![0.0, 1.0, 1.5, 3.5]);

        assert_eq!(run_strict_server(&[1.0], 1.0, &[]), Err(Error::LengthMismatch(1, 0)));
    }

    #[test]
    fn two_node_hand_trace() {
        // Node 1 serves 2/slot, node 2 serves 1/slot with a full outage in slot 2.
        let a = [3.0, 0.0, 2.0, 0.0, 0.0];
        let traces = run_tandem(&a, &[(2.0, vec![0.0; 5]), (1.0, vec![0.0, 1.0, 0.0, 0.0, 0.0])]).unwrap();
        assert_eq!(traces[0].served(), vec![2.0, 1.0, 2.0, 0.0, 0.0]);
        assert_eq!(traces[1].backlog, vec![0.0, 1.0, 2.0, 3.0, 2.0, 1.0]);
        assert_eq!(traces[1].served(), vec![1.0, 0.0, 1.0, 1.0, 1.0]);

        let single = run_tandem(&a, &[(2.0, vec![0.0; 5])]).unwrap();
        assert_eq!(single[0], run_strict_server(&a, 2.0, &[0.0; 5]).unwrap());
        let fast = run_tandem(&a, &[(10.0, vec![0.0; 5]), (10.0, vec![0.0; 5])]).unwrap();
        assert_eq!(fast[1].departures, fast[0].arrivals);
    }

    #[test]
    fn invariants_hold_and_detect_violations() {
        let t = run_strict_server(&[3.0, 1.0, 0.0, 4.0, 0.0, 0.0], 2.0, &[0.5, 0.0, 3.0, 0.0, 1.0, 0.0]).unwrap();
        check_trace_invariants(&t, 2.0).unwrap();
        let mut broken = t.clone();
        broken.departures[2] = broken.departures[1];
        broken.departures[3] = broken.departures[1];
        assert!(check_trace_invariants(&broken, 2.0).is_err());
    }

    #[test]
    fn mbc_path_matches_brute_force() {
        let a = [0.0, 2.0, 1.0, 0.0, 3.0, 0.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 4.0];
        let cum = cumulative(&a);
        for alpha in [Curve::rate(0.8), Curve::affine(0.5, 1.0), Curve::grid(vec![0.5, 1.5, 1.75, 3.0], 0.75).unwrap()]
        {
            let path = mbc_path(&a, &alpha);
            for (t, got) in path.iter().enumerate() {
                let mut want = f64::NEG_INFINITY;
                for s in 0..=t {
                    for u in 0..=s {
                        want = want.max(cum[s] - cum[u] - alpha.eval((s - u) as i64));
                    }
                }
                assert!((got - want).abs() < 1e-12, "{alpha} t={t}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn mbc_examples() {
        assert!(mbc_path(&[0.0; 20], &Curve::rate(0.0)).iter().all(|m| *m == 0.0));
        assert!(mbc_path(&[1.0; 20], &Curve::rate(1.0)).iter().all(|m| *m == 0.0));
        let s = arrival_stats(&[2.0, 0.0, 1.0, 1.0], &Curve::rate(1.0), 2);
        assert!(s.tac <= s.vbc && s.vbc <= s.mbc);
        assert_eq!((s.tac, s.vbc, s.mbc), (0.0, 0.0, 1.0));
    }

    #[test]
    fn clopper_pearson_limits() {
        assert_eq!(clopper_pearson_lower(0, 100, 0.01), 0.0);
        assert_eq!(clopper_pearson_upper(100, 100, 0.01), 1.0);
        // k = 0: upper limit solves (1 − p)^n = δ.
        let want = 1.0 - 0.01f64.powf(1.0 / 100.0);
        assert!((clopper_pearson_upper(0, 100, 0.01) - want).abs() < 1e-10);
        // k = n: lower limit solves p^n = δ.
        let want = 0.01f64.powf(1.0 / 100.0);
        assert!((clopper_pearson_lower(100, 100, 0.01) - want).abs() < 1e-10);
        let lo = clopper_pearson_lower(30, 100, 0.01);
        let hi = clopper_pearson_upper(30, 100, 0.01);
        assert!(lo < 0.3 && 0.3 < hi);
    }

    #[test]
    fn validate_examples() {
        let tail = EmpiricalTail::from_samples(&[0.0, 1.0, 2.0, 3.0], &[0.0, 1.0], 0.01);
        assert!(validate(&report(&[0.0, 1.0], &[1.0, 1.0]), &tail).unwrap().pass);
        let tail = EmpiricalTail::from_samples(&vec![5.0; 200], &[0.0, 1.0], 0.01);
        let v = validate(&report(&[0.0, 1.0], &[0.0, 0.0]), &tail).unwrap();
        assert!(!v.pass && v.worst_margin < 0.0);
        assert_eq!(validate(&report(&[0.0], &[1.0]), &tail), Err(Error::GridMismatch));
    }

    #[test]
    fn underload_backlog_tail_is_a_step_at_zero() {
        let cfg = SimConfig { t_len: 200, n_reps: 100, seed: 3, delta: 0.01 };
        let flow = IncrementDist::bernoulli(1.0, 1.0).unwrap();
        let s = simulate_tandem(&flow, &[NodeSim { capacity: 2.0, impairment: None }], 10, &cfg).unwrap();
        let tail = empirical_backlog_tail(&s, &[0.0, 0.5], cfg.delta);
        assert_eq!(tail.estimates, vec![0.0, 0.0]);
        assert!(s.delay.iter().all(|d| *d == 0.0));
        assert!(matches!(
            simulate_tandem(&flow, &[NodeSim { capacity: 2.0, impairment: None }], 200, &cfg),
            Err(Error::InsufficientHorizon { .. })
        ));
    }

    #[test]
    fn reproducible_and_order_independent() {
        let cfg = SimConfig { t_len: 500, n_reps: 100, seed: 11, delta: 0.01 };
        let d = IncrementDist::bernoulli(0.4, 1.0).unwrap();
        let xs = [0.0, 1.0, 2.0, 4.0];
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| empirical_mbc_tail(&d, &Curve::rate(0.6), &xs, &cfg).unwrap())
        };
        let (a, b) = (run(1), run(4));
        assert_eq!(a, b);
    }

    #[test]
    fn trace_csv_has_expected_columns() {
        let t = run_strict_server(&[1.0, 2.0], 1.5, &[0.0, 0.5]).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("slot,a,i,A,A_star,B\n0,0.0,0.0,0.0,0.0,0.0\n"));
        assert_eq!(text.lines().count(), 4);
    }
}
