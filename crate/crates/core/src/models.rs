//! Traffic and server models: stochastic arrival curves, stochastic service
//! curves and stochastic strict servers.
//!
//! These are declarations. Whether a real process satisfies one is checked
//! empirically by [`crate::simulate`], never at construction time.

use std::fmt;

use crate::curves::{self, Curve};
use crate::scalar::Scalar;
use crate::tailbounds::TailBound;
use crate::{Error, Result};

/// Strength of a stochastic arrival curve. `Mbc ⇒ Vbc ⇒ Tac`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ArrivalVariant {
    /// Traffic-amount-centric: bounds `A(s,t) − α(t−s)`.
    Tac,
    /// Virtual-backlog-centric: bounds `sup_s [A(s,t) − α(t−s)]`.
    Vbc,
    /// Maximum-backlog-centric: bounds `sup_{s≤t} sup_{u≤s} [A(u,s) − α(s−u)]`.
    Mbc,
}

/// Strength of a stochastic service curve. `Sc ⇒ WeakSc`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ServiceVariant {
    WeakSc,
    Sc,
}

impl fmt::Display for ArrivalVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArrivalVariant::Tac => "tac",
            ArrivalVariant::Vbc => "vbc",
            ArrivalVariant::Mbc => "mbc",
        })
    }
}

impl fmt::Display for ServiceVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ServiceVariant::WeakSc => "weak_sc",
            ServiceVariant::Sc => "sc",
        })
    }
}

/// `A ∼ ⟨f, α⟩` of the given variant.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticArrivalCurve<S = f64> {
    pub variant: ArrivalVariant,
    pub alpha: Curve<S>,
    pub bound: TailBound<S>,
}

/// `S ∼ ⟨g, β⟩` of the given variant.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceCurveModel<S = f64> {
    pub variant: ServiceVariant,
    pub beta: Curve<S>,
    pub bound: TailBound<S>,
}

/// Ideal service `β̂` reduced by an impairment process `I ∼ ⟨g, γ⟩` (m.b.c):
/// in every backlogged period `[s, t)`, `A*(s,t) ≥ β̂(t−s) − I(s,t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrictServer<S = f64> {
    pub beta_hat: Curve<S>,
    pub impairment_alpha: Curve<S>,
    pub impairment_bound: TailBound<S>,
}

impl<S: Scalar> StochasticArrivalCurve<S> {
    pub fn new(variant: ArrivalVariant, alpha: Curve<S>, bound: TailBound<S>) -> Result<Self> {
        alpha.validate()?;
        bound.validate()?;
        Ok(Self { variant, alpha, bound })
    }

    pub fn mbc(alpha: Curve<S>, bound: TailBound<S>) -> Result<Self> {
        Self::new(ArrivalVariant::Mbc, alpha, bound)
    }

    pub fn is_deterministic(&self) -> bool {
        self.bound.is_deterministic()
    }
}

impl<S: Scalar> ServiceCurveModel<S> {
    pub fn new(variant: ServiceVariant, beta: Curve<S>, bound: TailBound<S>) -> Result<Self> {
        beta.validate()?;
        bound.validate()?;
        Ok(Self { variant, beta, bound })
    }

    pub fn sc(beta: Curve<S>, bound: TailBound<S>) -> Result<Self> {
        Self::new(ServiceVariant::Sc, beta, bound)
    }

    pub fn is_deterministic(&self) -> bool {
        self.bound.is_deterministic()
    }
}

impl<S: Scalar> StrictServer<S> {
    pub fn new(beta_hat: Curve<S>, impairment_alpha: Curve<S>, impairment_bound: TailBound<S>) -> Result<Self> {
        beta_hat.validate()?;
        impairment_alpha.validate()?;
        impairment_bound.validate()?;
        if beta_hat.eval(0) != S::zero() {
            return Err(Error::InvalidParameter(format!(
                "ideal strict service curve must vanish at 0, got {}",
                beta_hat.eval(0)
            )));
        }
        Ok(Self { beta_hat, impairment_alpha, impairment_bound })
    }

    /// A server with no impairment at all.
    pub fn unimpaired(beta_hat: Curve<S>) -> Result<Self> {
        Self::new(beta_hat, Curve::rate(S::zero()), TailBound::Deterministic)
    }

    /// `β = β̂ − γ`.
    pub fn beta(&self) -> Result<Curve<S>> {
        curves::difference(&self.beta_hat, &self.impairment_alpha)
    }
}

/// A deterministic arrival curve is an m.b.c curve with a zero bound.
pub fn from_deterministic_arrival<S: Scalar>(alpha: Curve<S>) -> StochasticArrivalCurve<S> {
    StochasticArrivalCurve { variant: ArrivalVariant::Mbc, alpha, bound: TailBound::Deterministic }
}

/// A deterministic service curve is a stochastic service curve with a zero bound.
pub fn from_deterministic_service<S: Scalar>(beta: Curve<S>) -> ServiceCurveModel<S> {
    ServiceCurveModel { variant: ServiceVariant::Sc, beta, bound: TailBound::Deterministic }
}

/// Re-tags an arrival curve with a weaker (or the same) variant.
pub fn weaken_arrival<S: Scalar>(
    a: &StochasticArrivalCurve<S>,
    to: ArrivalVariant,
) -> Result<StochasticArrivalCurve<S>> {
    if to > a.variant {
        return Err(Error::IllegalStrengthening { from: a.variant.to_string(), to: to.to_string() });
    }
    Ok(StochasticArrivalCurve { variant: to, ..a.clone() })
}

/// Re-tags a service curve as weak.
pub fn weaken_service<S: Scalar>(s: &ServiceCurveModel<S>) -> Result<ServiceCurveModel<S>> {
    if s.variant != ServiceVariant::Sc {
        return Err(Error::IllegalStrengthening {
            from: s.variant.to_string(),
            to: ServiceVariant::WeakSc.to_string(),
        });
    }
    Ok(ServiceCurveModel { variant: ServiceVariant::WeakSc, ..s.clone() })
}

/// A strict server provides the service curve `⟨g, β̂ − γ⟩`.
pub fn strict_to_service_curve<S: Scalar>(ss: &StrictServer<S>) -> Result<ServiceCurveModel<S>> {
    Ok(ServiceCurveModel { variant: ServiceVariant::Sc, beta: ss.beta()?, bound: ss.impairment_bound.clone() })
}
