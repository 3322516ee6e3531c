//! Wide-sense increasing envelopes over discrete time and their (min,+) algebra.
//!
//! Time is counted in integer slots, so every inf/sup below is a finite
//! minimisation over integer indices. A [`GridCurve`] stores explicit samples
//! on `0..=H` plus a tail slope; beyond `H` the curve is affine, which lets the
//! grid operations resolve the behaviour past the horizon analytically.

use std::fmt;

use crate::scalar::{ext_sub, Scalar, Time};
use crate::{Error, Result};

/// Longest horizon extension accepted when two tail lines cross late.
const MAX_TAIL_EXTENSION: Time = 10_000_000;

/// A nonnegative, wide-sense increasing function of slot time.
///
/// For negative arguments every curve evaluates to its value at 0.
#[derive(Debug, Clone, PartialEq)]
pub enum Curve<S = f64> {
    /// `ε`: `+∞` for every `t ≥ 0` (zero element of `(∧, ⊗)`).
    Infinite,
    /// `e`: 0 at `t = 0`, `+∞` afterwards (identity of `⊗`).
    Identity,
    /// `t ↦ r·t`.
    Rate { rate: S },
    /// Token bucket `t ↦ ρ·t + σ`, with value `σ` at `t = 0`.
    Affine { rate: S, burst: S },
    /// `t ↦ R·(t − T)⁺`.
    RateLatency { rate: S, latency: Time },
    /// Sampled curve with an affine tail.
    Grid(GridCurve<S>),
}

/// Samples at `t = 0..=H` followed by `samples[H] + tail_slope·(t − H)`.
///
/// Samples may be `+∞`; once a sample is infinite every later value is too.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCurve<S = f64> {
    samples: Vec<S>,
    tail_slope: S,
}

impl<S: Scalar> GridCurve<S> {
    pub fn new(samples: Vec<S>, tail_slope: S) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if tail_slope.is_nan() || tail_slope < S::zero() || tail_slope.is_infinite() {
            return Err(Error::NotInF(format!("tail slope {tail_slope} must be finite and >= 0")));
        }
        for (t, w) in samples.iter().enumerate() {
            if w.is_nan() || *w < S::zero() {
                return Err(Error::NotInF(format!("sample {t} is {w}")));
            }
        }
        if let Some(t) = samples.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::NotInF(format!("samples decrease between t={t} and t={}", t + 1)));
        }
        Ok(Self { samples, tail_slope })
    }

    pub fn samples(&self) -> &[S] {
        &self.samples
    }

    pub fn tail_slope(&self) -> S {
        self.tail_slope
    }

    /// Last explicitly sampled slot.
    pub fn horizon(&self) -> Time {
        self.samples.len() as Time - 1
    }

    pub fn eval(&self, t: Time) -> S {
        let t = t.max(0);
        let h = self.horizon();
        if t <= h {
            self.samples[t as usize]
        } else {
            let last = self.samples[h as usize];
            if last.is_infinite() {
                last
            } else {
                last + self.tail_slope * S::from_time(t - h)
            }
        }
    }

    fn tail_line(&self) -> Line<S> {
        let h = self.horizon();
        let last = self.samples[h as usize];
        if last.is_infinite() {
            Line { intercept: S::infinity(), slope: S::zero() }
        } else {
            Line { intercept: last - self.tail_slope * S::from_time(h), slope: self.tail_slope }
        }
    }
}

/// `intercept + slope·t`.
#[derive(Debug, Clone, Copy)]
struct Line<S> {
    intercept: S,
    slope: S,
}

impl<S: Scalar> Line<S> {
    fn at(&self, t: Time) -> S {
        if self.intercept.is_infinite() {
            self.intercept
        } else {
            self.intercept + self.slope * S::from_time(t)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Combine {
    Min,
    Max,
}

impl Combine {
    fn apply<S: Scalar>(self, a: S, b: S) -> S {
        match self {
            Combine::Min => a.min(b),
            Combine::Max => a.max(b),
        }
    }
}

/// Extends `samples` (valid on `0..=h`) with `combine(l1, l2)` beyond `h`,
/// pushing the horizon past the last crossing of the two lines so that a
/// single line describes the tail.
fn finish_with_lines<S: Scalar>(mut samples: Vec<S>, l1: Line<S>, l2: Line<S>, combine: Combine) -> Result<Curve<S>> {
    let h = samples.len() as Time - 1;
    let inf1 = l1.intercept.is_infinite();
    let inf2 = l2.intercept.is_infinite();
    let (winner, crossing) = match (inf1, inf2) {
        (true, true) => (l1, None),
        (true, false) | (false, true) => {
            let (inf_line, fin_line) = if inf1 { (l1, l2) } else { (l2, l1) };
            match combine {
                Combine::Min => (fin_line, None),
                Combine::Max => (inf_line, None),
            }
        }
        (false, false) => {
            let first_wins = match combine {
                Combine::Min => l1.slope < l2.slope || (l1.slope == l2.slope && l1.intercept <= l2.intercept),
                Combine::Max => l1.slope > l2.slope || (l1.slope == l2.slope && l1.intercept >= l2.intercept),
            };
            let crossing =
                if l1.slope != l2.slope { Some((l2.intercept - l1.intercept) / (l1.slope - l2.slope)) } else { None };
            (if first_wins { l1 } else { l2 }, crossing)
        }
    };
    let mut horizon = h;
    if let Some(cross) = crossing {
        if cross > S::from_time(h) {
            let c = cross.ceil().to_i64().unwrap_or(Time::MAX);
            if c - h > MAX_TAIL_EXTENSION {
                return Err(Error::InvalidParameter(format!(
                    "tail lines cross too late (t = {cross}) to represent on a grid"
                )));
            }
            horizon = c;
        }
    }
    for t in (h + 1)..=horizon {
        samples.push(combine.apply(l1.at(t), l2.at(t)));
    }
    let last = samples[horizon as usize];
    let slope = if last.is_infinite() { S::zero() } else { winner.slope };
    Ok(Curve::Grid(GridCurve::new(samples, slope)?).simplify())
}

impl<S: Scalar> Curve<S> {
    pub fn rate(rate: S) -> Self {
        Curve::Rate { rate }
    }

    pub fn affine(rate: S, burst: S) -> Self {
        Curve::Affine { rate, burst }
    }

    pub fn rate_latency(rate: S, latency: Time) -> Self {
        Curve::RateLatency { rate, latency }
    }

    pub fn grid(samples: Vec<S>, tail_slope: S) -> Result<Self> {
        Ok(Curve::Grid(GridCurve::new(samples, tail_slope)?))
    }

    /// Checks the parameters of closed-form variants.
    pub fn validate(&self) -> Result<()> {
        let ok = |v: S, what: &str| {
            if v.is_finite() && v >= S::zero() {
                Ok(())
            } else {
                Err(Error::NotInF(format!("{what} = {v} must be finite and >= 0")))
            }
        };
        match self {
            Curve::Infinite | Curve::Identity => Ok(()),
            Curve::Rate { rate } => ok(*rate, "rate"),
            Curve::Affine { rate, burst } => ok(*rate, "rate").and(ok(*burst, "burst")),
            Curve::RateLatency { rate, latency } => {
                ok(*rate, "rate")?;
                if *latency < 0 {
                    return Err(Error::NotInF(format!("latency {latency} < 0")));
                }
                Ok(())
            }
            Curve::Grid(g) => GridCurve::new(g.samples.clone(), g.tail_slope).map(|_| ()),
        }
    }

    pub fn eval(&self, t: Time) -> S {
        let t = t.max(0);
        match self {
            Curve::Infinite => S::infinity(),
            Curve::Identity => {
                if t == 0 {
                    S::zero()
                } else {
                    S::infinity()
                }
            }
            Curve::Rate { rate } => *rate * S::from_time(t),
            Curve::Affine { rate, burst } => *rate * S::from_time(t) + *burst,
            Curve::RateLatency { rate, latency } => *rate * S::from_time((t - latency).max(0)),
            Curve::Grid(g) => g.eval(t),
        }
    }

    /// Equivalent sampled representation.
    pub fn to_grid(&self) -> GridCurve<S> {
        let (samples, tail_slope) = match self {
            Curve::Infinite => (vec![S::infinity()], S::zero()),
            Curve::Identity => (vec![S::zero(), S::infinity()], S::zero()),
            Curve::Rate { rate } => (vec![S::zero()], *rate),
            Curve::Affine { rate, burst } => (vec![*burst], *rate),
            Curve::RateLatency { rate, latency } => (vec![S::zero(); (*latency).max(0) as usize + 1], *rate),
            Curve::Grid(g) => return g.clone(),
        };
        GridCurve { samples, tail_slope }
    }

    /// Slot after which the curve is affine.
    pub fn horizon(&self) -> Time {
        match self {
            Curve::Infinite | Curve::Rate { .. } | Curve::Affine { .. } => 0,
            Curve::Identity => 1,
            Curve::RateLatency { latency, .. } => (*latency).max(0),
            Curve::Grid(g) => g.horizon(),
        }
    }

    /// Growth rate as `t → ∞`; `+∞` for curves that become infinite.
    pub fn long_run_slope(&self) -> S {
        let g = self.to_grid();
        if g.samples[g.samples.len() - 1].is_infinite() {
            S::infinity()
        } else {
            g.tail_slope
        }
    }

    pub fn is_finite_valued(&self) -> bool {
        !self.long_run_slope().is_infinite()
    }

    /// Rewrites grids that match a closed form into that form.
    pub fn simplify(self) -> Self {
        let Curve::Grid(g) = &self else {
            return self;
        };
        let last = g.samples[g.samples.len() - 1];
        if last.is_infinite() {
            if g.samples.iter().all(|v| v.is_infinite()) {
                return Curve::Infinite;
            }
            if g.samples.len() == 2 && g.samples[0] == S::zero() {
                return Curve::Identity;
            }
            return self;
        }
        if g.samples.iter().all(|v| *v == S::zero()) {
            let latency = g.horizon();
            return if latency == 0 {
                Curve::Rate { rate: g.tail_slope }
            } else {
                Curve::RateLatency { rate: g.tail_slope, latency }
            };
        }
        if g.samples.len() == 1 {
            return Curve::Affine { rate: g.tail_slope, burst: g.samples[0] };
        }
        self
    }
}

impl<S: Scalar> fmt::Display for Curve<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Curve::Infinite => write!(f, "eps"),
            Curve::Identity => write!(f, "e"),
            Curve::Rate { rate } => write!(f, "rate({rate})"),
            Curve::Affine { rate, burst } => write!(f, "affine(rho={rate}, sigma={burst})"),
            Curve::RateLatency { rate, latency } => write!(f, "rate_latency(R={rate}, T={latency})"),
            Curve::Grid(g) => write!(f, "grid(H={}, tail_slope={})", g.horizon(), g.tail_slope),
        }
    }
}

fn as_rate_latency<S: Scalar>(c: &Curve<S>) -> Option<(S, Time)> {
    match c {
        Curve::Rate { rate } => Some((*rate, 0)),
        Curve::RateLatency { rate, latency } => Some((*rate, *latency)),
        _ => None,
    }
}

fn as_affine<S: Scalar>(c: &Curve<S>) -> Option<(S, S)> {
    match c {
        Curve::Rate { rate } => Some((*rate, S::zero())),
        Curve::Affine { rate, burst } => Some((*rate, *burst)),
        _ => None,
    }
}

/// `(f ⊗ g)(t) = inf_{0≤y≤t} [f(y) + g(t−y)]`.
pub fn min_plus_conv<S: Scalar>(f: &Curve<S>, g: &Curve<S>) -> Curve<S> {
    match (f, g) {
        (Curve::Infinite, _) | (_, Curve::Infinite) => return Curve::Infinite,
        (Curve::Identity, other) | (other, Curve::Identity) => return other.clone(),
        _ => {}
    }
    if let (Some((r1, t1)), Some((r2, t2))) = (as_rate_latency(f), as_rate_latency(g)) {
        let rate = r1.min(r2);
        let latency = t1 + t2;
        return if latency == 0 { Curve::Rate { rate } } else { Curve::RateLatency { rate, latency } };
    }
    if let (Some((r1, b1)), Some((r2, b2))) = (as_affine(f), as_affine(g)) {
        return Curve::Affine { rate: r1.min(r2), burst: b1 + b2 };
    }
    grid_conv(&f.to_grid(), &g.to_grid())
}

/// Reference (min,+) convolution on the sampled representation.
pub fn grid_conv<S: Scalar>(f: &GridCurve<S>, g: &GridCurve<S>) -> Curve<S> {
    let hf = f.horizon();
    let hg = g.horizon();
    let h = hf + hg;
    let samples: Vec<S> =
        (0..=h).map(|t| (0..=t).map(|y| f.eval(y) + g.eval(t - y)).fold(S::infinity(), S::min)).collect();
    let lf = f.tail_line();
    let lg = g.tail_line();
    // y ≤ hf: f sampled, g on its tail.
    let k1 = (0..=hf).map(|y| f.eval(y) - lg.slope * S::from_time(y)).fold(S::infinity(), S::min);
    // t − y ≤ hg: g sampled, f on its tail.
    let k2 = (0..=hg).map(|z| g.eval(z) - lf.slope * S::from_time(z)).fold(S::infinity(), S::min);
    let l1 = Line { intercept: k1 + lg.intercept, slope: lg.slope };
    let l2 = Line { intercept: lf.intercept + k2, slope: lf.slope };
    finish_with_lines(samples, l1, l2, Combine::Min).expect("(min,+) convolution of curves in F stays in F")
}

/// Truncated deconvolution `t ↦ sup_{0≤y≤y_max} [f(t+y) − g(y)]`.
///
/// Once both curves are on their tails the bracket is nonincreasing in `y`,
/// so the scan stops there; the result equals the untruncated supremum as soon
/// as `y_max` passes both horizons.
pub fn min_plus_deconv<S: Scalar>(f: &Curve<S>, g: &Curve<S>, y_max: Time) -> Result<Curve<S>> {
    if y_max < 1 {
        return Err(Error::InvalidParameter(format!("y_max = {y_max} must be >= 1")));
    }
    if !f.is_finite_valued() || f.long_run_slope() > g.long_run_slope() {
        return Err(Error::DivergentDeconvolution);
    }
    if let Curve::Identity = g {
        return Ok(f.clone());
    }
    if let (Some((rho, sigma)), Some((rate, latency))) = (as_affine(f), as_rate_latency(g)) {
        if rho <= rate && y_max >= latency {
            let burst = sigma + rho * S::from_time(latency);
            return Ok(if burst == S::zero() { Curve::Rate { rate: rho } } else { Curve::Affine { rate: rho, burst } });
        }
    }
    grid_deconv(&f.to_grid(), &g.to_grid(), y_max)
}

/// Reference deconvolution on the sampled representation.
pub fn grid_deconv<S: Scalar>(f: &GridCurve<S>, g: &GridCurve<S>, y_max: Time) -> Result<Curve<S>> {
    let hf = f.horizon();
    let y_stop = y_max.min(hf.max(g.horizon()));
    let mut samples = Vec::with_capacity(hf as usize + 1);
    for t in 0..=hf {
        let mut best = S::neg_infinity();
        for y in 0..=y_stop {
            let gy = g.eval(y);
            if gy.is_infinite() {
                continue;
            }
            best = best.max(f.eval(t + y) - gy);
        }
        if best.is_infinite() {
            return Err(if best > S::zero() {
                Error::DivergentDeconvolution
            } else {
                Error::NotInF("deconvolution by a curve that is infinite everywhere".into())
            });
        }
        samples.push(best);
    }
    if let Some(t) = samples.iter().position(|v| *v < S::zero()) {
        return Err(Error::NotInF(format!("deconvolution is negative at t={t}")));
    }
    Ok(Curve::Grid(GridCurve::new(samples, f.tail_slope)?).simplify())
}

fn pointwise<S: Scalar>(f: &Curve<S>, g: &Curve<S>, combine: Combine) -> Curve<S> {
    let fg = f.to_grid();
    let gg = g.to_grid();
    let h = fg.horizon().max(gg.horizon());
    let samples = (0..=h).map(|t| combine.apply(fg.eval(t), gg.eval(t))).collect();
    finish_with_lines(samples, fg.tail_line(), gg.tail_line(), combine)
        .expect("pointwise min/max of curves in F stays in F")
}

/// `(f ∧ g)(t) = min[f(t), g(t)]`.
pub fn pointwise_min<S: Scalar>(f: &Curve<S>, g: &Curve<S>) -> Curve<S> {
    pointwise(f, g, Combine::Min)
}

/// `(f ∨ g)(t) = max[f(t), g(t)]`.
pub fn pointwise_max<S: Scalar>(f: &Curve<S>, g: &Curve<S>) -> Curve<S> {
    pointwise(f, g, Combine::Max)
}

/// `t ↦ f(t) + g(t)`.
pub fn sum<S: Scalar>(f: &Curve<S>, g: &Curve<S>) -> Curve<S> {
    if let (Some((r1, b1)), Some((r2, b2))) = (as_affine(f), as_affine(g)) {
        let burst = b1 + b2;
        return if burst == S::zero() { Curve::Rate { rate: r1 + r2 } } else { Curve::Affine { rate: r1 + r2, burst } };
    }
    let fg = f.to_grid();
    let gg = g.to_grid();
    let h = fg.horizon().max(gg.horizon());
    let samples: Vec<S> = (0..=h).map(|t| fg.eval(t) + gg.eval(t)).collect();
    let slope = if samples[h as usize].is_infinite() { S::zero() } else { fg.tail_slope + gg.tail_slope };
    Curve::Grid(GridCurve { samples, tail_slope: slope }).simplify()
}

/// `t ↦ f(t) − g(t)`, required to stay in ℱ.
///
/// Membership is checked on `0..=H` (the larger horizon) plus the sign of the
/// tail slope, so a negative long-run slope is rejected even when the sampled
/// window looks monotone.
pub fn difference<S: Scalar>(f: &Curve<S>, g: &Curve<S>) -> Result<Curve<S>> {
    if let (Curve::Rate { rate: r1 }, Curve::Rate { rate: r2 }) = (f, g) {
        if *r1 >= *r2 {
            return Ok(Curve::Rate { rate: *r1 - *r2 });
        }
        return Err(Error::NotInF(format!("rate difference {} < 0", *r1 - *r2)));
    }
    let fg = f.to_grid();
    let gg = g.to_grid();
    let h = fg.horizon().max(gg.horizon());
    let samples = (0..=h).map(|t| ext_sub(fg.eval(t), gg.eval(t))).collect::<Result<Vec<S>>>()?;
    let f_inf = fg.tail_line().intercept.is_infinite();
    let g_inf = gg.tail_line().intercept.is_infinite();
    let slope = match (f_inf, g_inf) {
        (true, true) => return Err(Error::UndefinedArithmetic),
        (false, true) => return Err(Error::NotInF("subtracting a curve that becomes infinite".into())),
        (true, false) => S::zero(),
        (false, false) => fg.tail_slope - gg.tail_slope,
    };
    if slope < S::zero() {
        return Err(Error::NotInF(format!("difference has negative tail slope {slope}")));
    }
    Ok(Curve::Grid(GridCurve::new(samples, slope)?).simplify())
}

fn deficit_scan<S: Scalar>(
    beta: &Curve<S>,
    alpha: &Curve<S>,
    s_max: Time,
    s_stop: Time,
    term: impl Fn(Time) -> Result<S>,
) -> Result<S> {
    if beta.long_run_slope() < alpha.long_run_slope() {
        return Ok(S::neg_infinity());
    }
    let mut best = S::infinity();
    for s in 0..=s_max.min(s_stop) {
        best = best.min(term(s)?);
    }
    Ok(best)
}

/// `inf_{0≤s≤s_max} [β(s) − α(s − x_shift)]`, with `α(u) = α(0)` for `u < 0`.
///
/// Returns `−∞` when the long-run slope of `β` is below that of `α`.
pub fn inf_deficit<S: Scalar>(beta: &Curve<S>, alpha: &Curve<S>, x_shift: Time, s_max: Time) -> Result<S> {
    // Past this point both terms are affine and the bracket is nondecreasing.
    let stop = beta.horizon().max(alpha.horizon() + x_shift.max(0)) + 1;
    deficit_scan(beta, alpha, s_max, stop, |s| ext_sub(beta.eval(s), alpha.eval(s - x_shift)))
}

/// `inf_{0≤s≤s_max} [β(s + x) − α(s)]`, the deterministic-server delay deficit.
pub fn inf_deficit_shifted_service<S: Scalar>(beta: &Curve<S>, alpha: &Curve<S>, x: Time, s_max: Time) -> Result<S> {
    let stop = (beta.horizon() - x).max(alpha.horizon()).max(0) + 1;
    deficit_scan(beta, alpha, s_max, stop, |s| ext_sub(beta.eval(s + x), alpha.eval(s)))
}
