//! (σ(θ), ρ(θ)) envelopes of i.i.d. traffic and the exponential m.b.c
//! arrival curves they induce.
//!
//! A process is (σ(θ), ρ(θ))-upper constrained when
//! `(1/θ)·ln E e^{θA(s,t)} ≤ ρ(θ)(t−s) + σ(θ)`. For i.i.d. per-slot increments
//! the log-MGF is additive, so `ρ(θ) = (1/θ)·ln E e^{θa}` and `σ(θ) = 0`.

use crate::curves::Curve;
use crate::models::StochasticArrivalCurve;
use crate::scalar::Scalar;
use crate::tailbounds::TailBound;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaRho<S = f64> {
    pub theta: S,
    pub rho: S,
    pub sigma: S,
}

/// Distribution of the per-slot increment `a(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum IncrementDist<S = f64> {
    /// `batch` with probability `p`, 0 otherwise.
    Bernoulli { p: S, batch: S },
    /// Finite support.
    Discrete { values: Vec<S>, probs: Vec<S> },
}

impl<S: Scalar> IncrementDist<S> {
    pub fn bernoulli(p: S, batch: S) -> Result<Self> {
        let d = IncrementDist::Bernoulli { p, batch };
        d.validate()?;
        Ok(d)
    }

    pub fn discrete(values: Vec<S>, probs: Vec<S>) -> Result<Self> {
        let d = IncrementDist::Discrete { values, probs };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            IncrementDist::Bernoulli { p, batch } => {
                if !(*p >= S::zero() && *p <= S::one()) {
                    return Err(Error::InvalidParameter(format!("probability {p} outside [0, 1]")));
                }
                if !(batch.is_finite() && *batch >= S::zero()) {
                    return Err(Error::InvalidParameter(format!("batch {batch} must be finite and >= 0")));
                }
            }
            IncrementDist::Discrete { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    return Err(Error::LengthMismatch(values.len(), probs.len()));
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= S::zero())) {
                    return Err(Error::InvalidParameter("increment values must be finite and >= 0".into()));
                }
                if probs.iter().any(|p| !(*p >= S::zero())) {
                    return Err(Error::InvalidParameter("probabilities must be >= 0".into()));
                }
                let total: S = probs.iter().copied().sum();
                if (total - S::one()).abs() > S::lit(1e-9) {
                    return Err(Error::InvalidParameter(format!("probabilities sum to {total}")));
                }
            }
        }
        Ok(())
    }

    /// `(value, probability)` pairs with nonzero probability.
    pub fn support(&self) -> Vec<(S, S)> {
        let all = match self {
            IncrementDist::Bernoulli { p, batch } => vec![(S::zero(), S::one() - *p), (*batch, *p)],
            IncrementDist::Discrete { values, probs } => values.iter().copied().zip(probs.iter().copied()).collect(),
        };
        all.into_iter().filter(|(_, p)| *p > S::zero()).collect()
    }

    pub fn mean(&self) -> S {
        self.support().into_iter().map(|(v, p)| v * p).sum()
    }

    /// `(1/θ)·ln E e^{θa}`, computed with log-sum-exp.
    pub fn log_mgf_rate(&self, theta: S) -> S {
        let support = self.support();
        let peak = support.iter().map(|(v, _)| theta * *v).fold(S::neg_infinity(), S::max);
        let sum: S = support.iter().map(|(v, p)| *p * (theta * *v - peak).exp()).sum();
        (peak + sum.ln()) / theta
    }
}

/// `ρ(θ) = (1/θ)·ln E e^{θa}`, `σ(θ) = 0`.
pub fn sigma_rho_iid<S: Scalar>(dist: &IncrementDist<S>, theta: S) -> Result<SigmaRho<S>> {
    dist.validate()?;
    if !(theta > S::zero() && theta.is_finite()) {
        return Err(Error::InvalidParameter(format!("theta {theta} must be positive")));
    }
    Ok(SigmaRho { theta, rho: dist.log_mgf_rate(theta).max(S::zero()), sigma: S::zero() })
}

/// Prefactor `a = e^{θσ}/(1 − e^{θ(ρ−r)})` of the bound `a·e^{−θx}`.
pub fn mbc_prefactor<S: Scalar>(sr: &SigmaRho<S>, r: S) -> Result<S> {
    if !(r > sr.rho) {
        return Err(Error::RateTooSmall {
            r: r.to_f64().unwrap_or(f64::NAN),
            rho: sr.rho.to_f64().unwrap_or(f64::NAN),
        });
    }
    let theta = sr.theta;
    Ok((theta * sr.sigma).exp() / (S::one() - (theta * (sr.rho - r)).exp()))
}

/// `A ∼_mb ⟨a·e^{−θx}, r·t⟩` for any `r > ρ(θ)`.
pub fn mbc_from_sigma_rho<S: Scalar>(sr: &SigmaRho<S>, r: S) -> Result<StochasticArrivalCurve<S>> {
    let a = mbc_prefactor(sr, r)?;
    StochasticArrivalCurve::mbc(Curve::rate(r), TailBound::exp(a, sr.theta))
}

/// Result of a θ grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaChoice<S = f64> {
    pub theta: S,
    pub sigma_rho: SigmaRho<S>,
    pub arrival: StochasticArrivalCurve<S>,
}

/// Picks the feasible θ minimising the bound at `x_star`; ties go to the
/// larger θ. Candidates with `ρ(θ) ≥ r` are skipped.
pub fn optimize_theta<S: Scalar>(dist: &IncrementDist<S>, theta_grid: &[S], r: S, x_star: S) -> Result<ThetaChoice<S>> {
    let mut best: Option<(S, ThetaChoice<S>)> = None;
    for &theta in theta_grid {
        let sr = sigma_rho_iid(dist, theta)?;
        let Ok(arrival) = mbc_from_sigma_rho(&sr, r) else {
            continue;
        };
        let value = arrival.bound.eval(x_star);
        let better = match &best {
            None => true,
            Some((v, c)) => value < *v || (value == *v && theta > c.theta),
        };
        if better {
            best = Some((value, ThetaChoice { theta, sigma_rho: sr, arrival }));
        }
    }
    best.map(|(_, c)| c).ok_or(Error::NoFeasibleTheta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Curve, IncrementDist, TailBound};

    #[test]
    fn bernoulli_rho_matches_direct_mgf() {
        let d = IncrementDist::bernoulli(0.3, 1.0).unwrap();
        let sr = sigma_rho_iid(&d, 1.0).unwrap();
        let direct = (0.7 + 0.3 * std::f64::consts::E).ln();
        assert!((sr.rho - direct).abs() < 1e-15);
        assert_eq!(sr.sigma, 0.0);

        let null = IncrementDist::discrete(vec![0.0], vec![1.0]).unwrap();
        assert_eq!(sigma_rho_iid(&null, 2.5).unwrap().rho, 0.0);

        let det = IncrementDist::bernoulli(1.0, 2.0).unwrap();
        assert!((sigma_rho_iid(&det, 1.0).unwrap().rho - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rho_is_nondecreasing_in_theta() {
        let d = IncrementDist::discrete(vec![0.0, 1.0, 4.0], vec![0.5, 0.3, 0.2]).unwrap();
        let mut prev = d.mean();
        for k in 1..200 {
            let rho = sigma_rho_iid(&d, k as f64 * 0.05).unwrap().rho;
            assert!(rho >= prev - 1e-12);
            prev = rho;
        }
    }

    #[test]
    fn prefactor_examples() {
        let d = IncrementDist::bernoulli(0.3, 1.0).unwrap();
        let sr = sigma_rho_iid(&d, 1.0).unwrap();
        let m = mbc_from_sigma_rho(&sr, 0.6).unwrap();
        let want = 1.0 / (1.0 - (sr.rho - 0.6).exp());
        assert_eq!(m.bound, TailBound::exp(want, 1.0));
        assert_eq!(m.alpha, Curve::rate(0.6));
        assert!(want > 1.0);
        assert!(matches!(mbc_from_sigma_rho(&sr, sr.rho), Err(Error::RateTooSmall { .. })));
        let far = mbc_prefactor(&sr, 60.0).unwrap();
        assert!((far - 1.0).abs() < 1e-12);
        assert!(mbc_prefactor(&sr, 0.9).unwrap() < mbc_prefactor(&sr, 0.7).unwrap());
    }

    #[test]
    fn theta_search() {
        let d = IncrementDist::bernoulli(0.3, 1.0).unwrap();
        let pick = optimize_theta(&d, &[0.5, 1.0], 0.6, 10.0).unwrap();
        let value = |theta: f64| {
            let sr = sigma_rho_iid(&d, theta).unwrap();
            mbc_prefactor(&sr, 0.6).unwrap() * (-theta * 10.0).exp()
        };
        let want = if value(0.5) < value(1.0) { 0.5 } else { 1.0 };
        assert_eq!(pick.theta, want);
        assert_eq!(optimize_theta(&d, &[0.7], 0.6, 10.0).unwrap().theta, 0.7);
        assert_eq!(optimize_theta(&d, &[5.0, 8.0], 0.6, 10.0), Err(Error::NoFeasibleTheta));
    }
}
