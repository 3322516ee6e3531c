//! Bounding functions: nonnegative, wide-sense decreasing tails `x ↦ f(x)`.
//!
//! A bound may exceed 1 internally; only [`prob_at`] caps it. Numerical
//! operations work on a uniform amount grid and always round in the direction
//! that keeps the result a valid upper bound.

use crate::scalar::Scalar;
use crate::{Error, Result};

/// Uniform amount grid `x_k = k·step`, `k = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XGrid<S = f64> {
    step: S,
    n: usize,
}

impl<S: Scalar> XGrid<S> {
    pub fn new(step: S, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGrid);
        }
        if !(step > S::zero()) || !step.is_finite() {
            return Err(Error::InvalidParameter(format!("grid step {step} must be positive")));
        }
        Ok(Self { step, n })
    }

    /// Smallest grid with this step whose last point is `≥ x_max`.
    pub fn covering(step: S, x_max: S) -> Result<Self> {
        let n = (x_max.max(S::zero()) / step).ceil().to_usize().unwrap_or(0) + 1;
        Self::new(step, n)
    }

    pub fn step(&self) -> S {
        self.step
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn x(&self, k: usize) -> S {
        S::from_usize(k).expect("grid index") * self.step
    }

    pub fn last(&self) -> S {
        self.x(self.n - 1)
    }

    pub fn points(&self) -> Vec<S> {
        (0..self.n).map(|k| self.x(k)).collect()
    }

    /// Halves the step, keeping the same extent.
    pub fn refined(&self) -> Self {
        Self { step: self.step / S::lit(2.0), n: 2 * self.n - 1 }
    }
}

/// Sampled bound, constant between breakpoints (left-neighbour evaluation).
#[derive(Debug, Clone, PartialEq)]
pub struct GridTail<S = f64> {
    x: Vec<S>,
    v: Vec<S>,
}

impl<S: Scalar> GridTail<S> {
    /// `x` must start at 0 and increase strictly; `v` must be nonnegative and
    /// nonincreasing (`+∞` allowed).
    pub fn new(x: Vec<S>, v: Vec<S>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if x.len() != v.len() {
            return Err(Error::LengthMismatch(x.len(), v.len()));
        }
        if x[0] != S::zero() || x.windows(2).any(|w| !(w[1] > w[0])) || x.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("bound grid must start at 0 and increase strictly".into()));
        }
        if v.iter().any(|v| v.is_nan() || *v < S::zero()) {
            return Err(Error::InvalidParameter("bound values must be nonnegative".into()));
        }
        if v.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter("bound values must be nonincreasing".into()));
        }
        Ok(Self { x, v })
    }

    fn on_grid(grid: &XGrid<S>, v: Vec<S>) -> Self {
        Self { x: grid.points(), v }
    }

    pub fn x(&self) -> &[S] {
        &self.x
    }

    pub fn values(&self) -> &[S] {
        &self.v
    }

    pub fn eval(&self, x: S) -> S {
        // Index of the last breakpoint ≤ x.
        let k = self.x.partition_point(|p| *p <= x);
        self.v[k.saturating_sub(1)]
    }

    /// Step if the breakpoints are `k·step` exactly.
    fn uniform_step(&self) -> Option<S> {
        if self.x.len() < 2 {
            return None;
        }
        let step = self.x[1];
        let grid = XGrid { step, n: self.x.len() };
        (0..self.x.len()).all(|k| grid.x(k) == self.x[k]).then_some(step)
    }
}

/// A function in ℱ̄ used as a violation-probability bound.
#[derive(Debug, Clone, PartialEq)]
pub enum TailBound<S = f64> {
    /// 0 everywhere: the event never happens.
    Deterministic,
    /// `+∞` everywhere (`ε̄`): no information.
    Vacuous,
    /// `a·e^{−θx}`.
    Exp { a: S, theta: S },
    /// `inf_{0≤y≤x} [a·e^{−θy} + b·e^{−θ(x−y)}]`, kept in closed form.
    ExpConv { a: S, b: S, theta: S },
    /// Sampled values.
    Grid(GridTail<S>),
    /// Pointwise minimum.
    Min(Box<TailBound<S>>, Box<TailBound<S>>),
    /// Pointwise maximum.
    Max(Box<TailBound<S>>, Box<TailBound<S>>),
}

impl<S: Scalar> TailBound<S> {
    pub fn exp(a: S, theta: S) -> Self {
        TailBound::Exp { a, theta }
    }

    pub fn grid(x: Vec<S>, v: Vec<S>) -> Result<Self> {
        Ok(TailBound::Grid(GridTail::new(x, v)?))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TailBound::Deterministic | TailBound::Vacuous | TailBound::Grid(_) => Ok(()),
            TailBound::Exp { a, theta } | TailBound::ExpConv { a, theta, .. } => {
                let b = match self {
                    TailBound::ExpConv { b, .. } => *b,
                    _ => S::zero(),
                };
                if !(a.is_finite() && *a >= S::zero() && b.is_finite() && b >= S::zero()) {
                    return Err(Error::InvalidParameter(format!("exponential scale {a} must be finite and >= 0")));
                }
                if !(theta.is_finite() && *theta > S::zero()) {
                    return Err(Error::InvalidParameter(format!("decay rate {theta} must be positive")));
                }
                Ok(())
            }
            TailBound::Min(f, g) | TailBound::Max(f, g) => f.validate().and(g.validate()),
        }
    }

    /// Raw bound value; negative amounts evaluate as 0.
    pub fn eval(&self, x: S) -> S {
        let x = x.max(S::zero());
        match self {
            TailBound::Deterministic => S::zero(),
            TailBound::Vacuous => S::infinity(),
            TailBound::Exp { a, theta } => *a * (-*theta * x).exp(),
            TailBound::ExpConv { a, b, theta } => exp_conv_eval(*a, *b, *theta, x),
            TailBound::Grid(g) => g.eval(x),
            TailBound::Min(f, g) => f.eval(x).min(g.eval(x)),
            TailBound::Max(f, g) => f.eval(x).max(g.eval(x)),
        }
    }

    /// True when the bound is identically 0.
    pub fn is_deterministic(&self) -> bool {
        match self {
            TailBound::Deterministic => true,
            TailBound::Exp { a, .. } => *a == S::zero(),
            TailBound::ExpConv { a, b, .. } => *a == S::zero() && *b == S::zero(),
            TailBound::Grid(g) => g.v[0] == S::zero(),
            TailBound::Min(f, g) => f.is_deterministic() || g.is_deterministic(),
            TailBound::Max(f, g) => f.is_deterministic() && g.is_deterministic(),
            TailBound::Vacuous => false,
        }
    }

    /// Largest exponential decay rate appearing in the bound.
    pub fn max_theta(&self) -> Option<S> {
        match self {
            TailBound::Exp { theta, .. } | TailBound::ExpConv { theta, .. } => Some(*theta),
            TailBound::Min(f, g) | TailBound::Max(f, g) => match (f.max_theta(), g.max_theta()) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            },
            _ => None,
        }
    }

    /// Amount beyond which the bound is negligible (below `1e−12`) or constant.
    pub fn support_hint(&self) -> S {
        let tiny = S::lit(1e-12);
        match self {
            TailBound::Deterministic | TailBound::Vacuous => S::zero(),
            TailBound::Exp { a, theta } => ((*a).max(tiny) / tiny).ln().max(S::zero()) / *theta,
            TailBound::ExpConv { a, b, theta } => {
                let s = (*a + *b).max(tiny);
                S::lit(2.0) * (s / tiny).ln().max(S::zero()) / *theta
            }
            TailBound::Grid(g) => g.x[g.x.len() - 1],
            TailBound::Min(f, g) | TailBound::Max(f, g) => f.support_hint().max(g.support_hint()),
        }
    }

    /// Grid spacing that resolves this bound well (`0.05/θ`), if it has a scale.
    pub fn step_hint(&self) -> Option<S> {
        let from_grid = match self {
            TailBound::Grid(g) => g.uniform_step(),
            _ => None,
        };
        let from_theta = self.max_theta().map(|t| S::lit(0.05) / t);
        match (from_grid, from_theta) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// Samples the bound on `grid`.
    pub fn sample(&self, grid: &XGrid<S>) -> GridTail<S> {
        GridTail::on_grid(grid, (0..grid.len()).map(|k| self.eval(grid.x(k))).collect())
    }
}

fn exp_conv_eval<S: Scalar>(a: S, b: S, theta: S, x: S) -> S {
    if a == S::zero() {
        return b * (-theta * x).exp();
    }
    if b == S::zero() {
        return a * (-theta * x).exp();
    }
    // The bracket is convex in y; clamp the stationary point into [0, x].
    let y = ((x + (a / b).ln() / theta) / S::lit(2.0)).max(S::zero()).min(x);
    a * (-theta * y).exp() + b * (-theta * (x - y)).exp()
}

/// Reportable probability `min(f(x), 1)`.
pub fn prob_at<S: Scalar>(f: &TailBound<S>, x: S) -> S {
    f.eval(x).min(S::one())
}

/// Picks a grid fine enough for every input and long enough to reach where
/// they become negligible.
pub fn auto_grid<S: Scalar>(bounds: &[&TailBound<S>], x_max: S) -> XGrid<S> {
    let step = bounds
        .iter()
        .filter_map(|b| b.step_hint())
        .fold(None, |acc: Option<S>, s| Some(acc.map_or(s, |a| a.min(s))))
        .unwrap_or(S::lit(0.01));
    let extent = bounds.iter().map(|b| b.support_hint()).fold(x_max, S::max);
    XGrid::covering(step, extent).expect("positive step")
}

/// `(f ⊗ g)(x) = inf_{0≤y≤x} [f(y) + g(x−y)]`, using closed forms where they
/// exist and [`auto_grid`] otherwise.
pub fn minplus_conv_bar<S: Scalar>(f: &TailBound<S>, g: &TailBound<S>) -> TailBound<S> {
    if let Some(fast) = minplus_fast_path(f, g) {
        return fast;
    }
    if let (TailBound::Grid(gf), TailBound::Grid(gg)) = (f, g) {
        if gf.x == gg.x {
            if let Some(step) = gf.uniform_step() {
                let grid = XGrid { step, n: gf.x.len() };
                return minplus_conv_bar_grid(f, g, &grid);
            }
        }
    }
    minplus_conv_bar_grid(f, g, &auto_grid(&[f, g], S::zero()))
}

/// As [`minplus_conv_bar`] but with an explicit grid for the numeric path.
pub fn minplus_conv_bar_on<S: Scalar>(f: &TailBound<S>, g: &TailBound<S>, grid: &XGrid<S>) -> TailBound<S> {
    minplus_fast_path(f, g).unwrap_or_else(|| minplus_conv_bar_grid(f, g, grid))
}

fn minplus_fast_path<S: Scalar>(f: &TailBound<S>, g: &TailBound<S>) -> Option<TailBound<S>> {
    match (f, g) {
        (TailBound::Vacuous, _) | (_, TailBound::Vacuous) => Some(TailBound::Vacuous),
        (TailBound::Deterministic, h) | (h, TailBound::Deterministic) => Some(h.clone()),
        (TailBound::Exp { a, theta: t1 }, TailBound::Exp { a: b, theta: t2 }) if t1 == t2 => {
            Some(TailBound::ExpConv { a: *a, b: *b, theta: *t1 })
        }
        _ => None,
    }
}

/// Grid path: `h(x_n) = min_k [f(x_k) + g(x_n − x_k)]`.
///
/// Restricting `y` to grid points can only raise the infimum, so the result
/// dominates the exact convolution; for step bounds sampled on the same grid
/// it is exact at the grid points.
pub fn minplus_conv_bar_grid<S: Scalar>(f: &TailBound<S>, g: &TailBound<S>, grid: &XGrid<S>) -> TailBound<S> {
    let fs = f.sample(grid).v;
    let gs = g.sample(grid).v;
    let n = grid.len();
    let mut h = vec![S::infinity(); n];
    for (m, hm) in h.iter_mut().enumerate() {
        for k in 0..=m {
            let s = fs[k] + gs[m - k];
            if s < *hm {
                *hm = s;
            }
        }
    }
    TailBound::Grid(GridTail::on_grid(grid, h))
}

/// `f̄(x) = 1 − min(f(x), 1)`, a wide-sense increasing function into `[0, 1]`.
pub fn complement_clip<S: Scalar>(f: &TailBound<S>) -> impl Fn(S) -> S + '_ {
    move |x| S::one() - prob_at(f, x)
}

/// Independent-sum bound `h(x) = 1 − (f̄ ∗ ḡ)(x)`.
///
/// The Stieltjes integral `∫_{[0,x]} f̄(x−y) dḡ(y)` is replaced by the lower
/// Riemann sum `f̄(x)·ḡ(0) + Σ_k f̄(x − y_{k+1})·(ḡ(y_{k+1}) − ḡ(y_k))`, which
/// under-approximates it because `f̄` is increasing; the first term is the
/// atom of `ḡ` at 0. The result is clamped to `[0, 1]` and made nonincreasing.
pub fn stieltjes_conv_bound<S: Scalar>(f: &TailBound<S>, g: &TailBound<S>, grid: &XGrid<S>) -> Result<TailBound<S>> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let n = grid.len();
    let fbar: Vec<S> = (0..n).map(|k| S::one() - prob_at(f, grid.x(k))).collect();
    let gbar: Vec<S> = (0..n).map(|k| S::one() - prob_at(g, grid.x(k))).collect();
    let dg: Vec<S> = gbar.windows(2).map(|w| (w[1] - w[0]).max(S::zero())).collect();
    let mut h = Vec::with_capacity(n);
    let mut running = S::one();
    for m in 0..n {
        let mut integral = fbar[m] * gbar[0];
        for k in 0..m {
            integral = integral + fbar[m - k - 1] * dg[k];
        }
        let v = (S::one() - integral).max(S::zero()).min(S::one());
        running = running.min(v);
        h.push(running);
    }
    Ok(TailBound::Grid(GridTail::on_grid(grid, h)))
}

fn pointwise_bar<S: Scalar>(f: &TailBound<S>, g: &TailBound<S>, take_min: bool) -> TailBound<S> {
    let pick = |a: S, b: S| if take_min { a.min(b) } else { a.max(b) };
    match (f, g) {
        (TailBound::Vacuous, h) | (h, TailBound::Vacuous) => {
            return if take_min { h.clone() } else { TailBound::Vacuous };
        }
        (TailBound::Deterministic, h) | (h, TailBound::Deterministic) => {
            return if take_min { TailBound::Deterministic } else { h.clone() };
        }
        (TailBound::Exp { a, theta: t1 }, TailBound::Exp { a: b, theta: t2 }) if t1 == t2 => {
            return TailBound::Exp { a: pick(*a, *b), theta: *t1 };
        }
        (TailBound::Grid(gf), TailBound::Grid(gg)) => {
            let mut x: Vec<S> = gf.x.iter().chain(gg.x.iter()).copied().collect();
            x.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
            x.dedup();
            let v = x.iter().map(|p| pick(gf.eval(*p), gg.eval(*p))).collect();
            return TailBound::Grid(GridTail { x, v });
        }
        _ => {}
    }
    if f == g {
        return f.clone();
    }
    let (f, g) = (Box::new(f.clone()), Box::new(g.clone()));
    if take_min {
        TailBound::Min(f, g)
    } else {
        TailBound::Max(f, g)
    }
}

/// `(f ∧ g)(x) = min[f(x), g(x)]`.
pub fn pointwise_min_bar<S: Scalar>(f: &TailBound<S>, g: &TailBound<S>) -> TailBound<S> {
    pointwise_bar(f, g, true)
}

/// `(f ∨ g)(x) = max[f(x), g(x)]`.
pub fn pointwise_max_bar<S: Scalar>(f: &TailBound<S>, g: &TailBound<S>) -> TailBound<S> {
    pointwise_bar(f, g, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::TailBound;

    fn exp1() -> TailBound {
        TailBound::exp(1.0, 1.0)
    }

    /// Infimum over real y by ternary search; the bracket is convex for
    /// exponential inputs.
    fn brute_minplus(f: &TailBound, g: &TailBound, x: f64) -> f64 {
        let h = |y: f64| f.eval(y) + g.eval(x - y);
        let (mut lo, mut hi) = (0.0, x);
        for _ in 0..200 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if h(m1) <= h(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        h(lo).min(h(0.0)).min(h(x))
    }

    #[test]
    fn eval_examples() {
        assert_eq!(exp1().eval(2.0), (-2.0f64).exp());
        assert_eq!(prob_at(&TailBound::exp(5.0, 1.0), 0.0), 1.0);
        assert_eq!(TailBound::Deterministic.eval(0.0), 0.0);
        assert_eq!(exp1().eval(-3.0), 1.0);
    }

    #[test]
    fn same_rate_closed_form() {
        let h = minplus_conv_bar(&exp1(), &exp1());
        for k in 0..=100 {
            let x = k as f64 * 0.1;
            let want = 2.0 * (-x / 2.0).exp();
            assert!((h.eval(x) - want).abs() <= 1e-12 * want);
        }
        // Unequal scales push the optimum onto the boundary for small x.
        let f = TailBound::exp(10.0, 1.0);
        let g = TailBound::exp(0.1, 1.0);
        let h = minplus_conv_bar(&f, &g);
        for x in [0.0, 0.5, 1.0, 3.0, 8.0] {
            let brute = brute_minplus(&f, &g, x);
            assert!(h.eval(x) <= brute + 1e-12 && h.eval(x) >= brute - 1e-6, "x={x}");
        }
    }

    #[test]
    fn identity_and_absorbing_elements() {
        let f = TailBound::exp(2.0, 0.5);
        assert_eq!(minplus_conv_bar(&f, &TailBound::Deterministic), f);
        assert_eq!(minplus_conv_bar(&f, &TailBound::Vacuous), TailBound::Vacuous);
        assert_eq!(pointwise_min_bar(&f, &TailBound::Vacuous), f);
        assert_eq!(pointwise_min_bar(&f, &f), f);
    }

    #[test]
    fn pointwise_examples() {
        let m = pointwise_min_bar(&exp1(), &TailBound::exp(1.0, 2.0));
        assert!((m.eval(1.0) - (-2.0f64).exp()).abs() < 1e-15);
        let grid = XGrid::new(0.5, 5).unwrap();
        let a = TailBound::Grid(exp1().sample(&grid));
        let b = TailBound::grid(vec![0.0, 0.75], vec![0.6, 0.1]).unwrap();
        let lo = pointwise_min_bar(&a, &b);
        let hi = pointwise_max_bar(&a, &b);
        for x in [0.0, 0.3, 0.5, 0.75, 0.9, 1.7, 5.0] {
            assert_eq!(lo.eval(x), a.eval(x).min(b.eval(x)));
            assert_eq!(hi.eval(x), a.eval(x).max(b.eval(x)));
        }
    }

    #[test]
    fn complement_examples() {
        assert_eq!(complement_clip(&exp1())(0.0), 0.0);
        assert_eq!(complement_clip(&TailBound::Deterministic)(3.0), 1.0);
        let two = TailBound::exp(2.0, 1.0);
        assert_eq!(complement_clip(&two)(2f64.ln() - 1e-9), 0.0);
        assert!(complement_clip(&two)(2f64.ln() + 1e-6) > 0.0);
    }

    #[test]
    fn stieltjes_exp_example() {
        let grid = XGrid::new(0.01, 1001).unwrap();
        let h = stieltjes_conv_bound(&exp1(), &exp1(), &grid).unwrap();
        for k in 0..grid.len() {
            let x = grid.x(k);
            let exact = (1.0 + x) * (-x).exp();
            let got = h.eval(x);
            assert!(got >= exact - 1e-12, "x={x}");
            assert!(got <= exact * 1.02, "x={x}: {got} vs {exact}");
        }
    }

    #[test]
    fn stieltjes_with_deterministic_inputs() {
        let grid = XGrid::new(0.1, 50).unwrap();
        let g = TailBound::exp(3.0, 0.7);
        let h = stieltjes_conv_bound(&TailBound::Deterministic, &g, &grid).unwrap();
        let h2 = stieltjes_conv_bound(&g, &TailBound::Deterministic, &grid).unwrap();
        for k in 0..grid.len() {
            let x = grid.x(k);
            assert!((h.eval(x) - prob_at(&g, x)).abs() < 1e-15);
            assert!((h2.eval(x) - prob_at(&g, x)).abs() < 1e-15);
        }
        let zero = stieltjes_conv_bound::<f64>(&TailBound::Deterministic, &TailBound::Deterministic, &grid).unwrap();
        assert!(zero.is_deterministic());
    }

    #[test]
    fn grid_path_dominates_and_refines() {
        let grid = XGrid::new(0.1, 101).unwrap();
        let f = TailBound::exp(1.0, 1.0);
        let g = TailBound::exp(2.0, 0.5);
        let coarse = minplus_conv_bar_grid(&f, &g, &grid);
        let fine = minplus_conv_bar_grid(&f, &g, &grid.refined());
        let sc = stieltjes_conv_bound(&f, &g, &grid).unwrap();
        let sf = stieltjes_conv_bound(&f, &g, &grid.refined()).unwrap();
        for k in 0..grid.len() {
            let x = grid.x(k);
            assert!(coarse.eval(x) >= brute_minplus(&f, &g, x) - 1e-12);
            assert!(fine.eval(x) <= coarse.eval(x));
            assert!(sf.eval(x) <= sc.eval(x));
        }
    }

    #[test]
    fn grid_tail_rejects_bad_input() {
        assert!(TailBound::grid(vec![0.0, 1.0], vec![0.5, 0.7]).is_err());
        assert!(TailBound::grid(vec![0.5, 1.0], vec![0.5, 0.1]).is_err());
        assert!(TailBound::grid(vec![], vec![]).is_err());
        assert_eq!(stieltjes_conv_bound(&exp1(), &exp1(), &XGrid { step: 0.1, n: 0 }), Err(Error::EmptyGrid));
    }

    #[test]
    fn single_precision() {
        let h = minplus_conv_bar(&super::TailBound::<f32>::exp(1.0, 1.0), &super::TailBound::exp(1.0, 1.0));
        assert!((h.eval(2.0) - 2.0 * (-1.0f32).exp()).abs() < 1e-6);
    }
}
