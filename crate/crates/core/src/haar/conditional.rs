//! List sizes for scaled random lattices under a Poisson assumption on the
//! number of lattice points in a ball, with a `√(nε)`-net of centers and
//! `ε = c₁δ²`.

use super::poisson::lambert_w_newton;
use crate::error::{Error, Result};
use crate::geometry::ChannelParams;

/// Default slack added to `1 + 1/c` when choosing the exponent `a`.
pub const DEFAULT_MOMENT_MARGIN: f64 = 0.001;

/// Shared quantities: `ε = c₁δ²`, `c₂ = (√P + √N + δ√c₁)/√c₁` (so the net
/// has at most `(c₂/δ)ⁿ` points) and `c₃ = 1/√N − 1/√c₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Common {
    eps: f64,
    sqrt_eps: f64,
    c2: f64,
    c3: f64,
    /// `λ = 2^{−c₃n√ε}/(2√(πn))`.
    lambda: f64,
}

fn common(channel: &ChannelParams, c1: f64) -> Result<Common> {
    let delta = channel.delta;
    let cap = channel.capacity();
    if !(delta > 0.0 && delta < cap) {
        return Err(Error::domain(format!(
            "conditional bounds need 0 < delta < C (delta={delta}, C={cap})"
        )));
    }
    if !(c1 > 0.0) || !c1.is_finite() {
        return Err(Error::domain(format!("c1 must be positive, got {c1}")));
    }
    let c3 = 1.0 / channel.noise.sqrt() - 1.0 / c1.sqrt();
    if !(c3 > 0.0) {
        return Err(Error::domain(format!(
            "c3 = 1/sqrt(N) - 1/sqrt(c1) = {c3} is not positive; raise c1 above N"
        )));
    }
    let eps = c1 * delta * delta;
    let sqrt_eps = c1.sqrt() * delta;
    let c2 = (channel.power.sqrt() + channel.noise.sqrt() + delta * c1.sqrt()) / c1.sqrt();
    let nf = channel.n as f64;
    let ln_lambda = -std::f64::consts::LN_2 * c3 * nf * sqrt_eps
        - (2.0 * (std::f64::consts::PI * nf).sqrt()).ln();
    Ok(Common {
        eps,
        sqrt_eps,
        c2,
        c3,
        lambda: ln_lambda.exp(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistTrace {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub eps: f64,
    pub lambda: f64,
    /// `c₃√c₁·δ`, the per-`n` exponent gained per unit of `L`.
    pub slope: f64,
    /// `log₂(c₂/δ)`, the per-`n` cost of the union bound over the net.
    pub net_cost: f64,
    /// Minimal `L` with `slope·L > net_cost`.
    pub l: u64,
    /// `slope·L − net_cost` at the returned `L`.
    pub exponent: f64,
    /// `L·δ/log₂(1/δ)`, constant in `δ` when `L = Θ((1/δ)·log(1/δ))`.
    pub shape: f64,
}

/// Smallest list size for which the union bound over the net decays, under
/// the assumption that point counts in balls are Poisson.
pub fn conditional_list_dist(channel: &ChannelParams, c1: f64) -> Result<DistTrace> {
    let cm = common(channel, c1)?;
    let delta = channel.delta;
    let slope = cm.c3 * c1.sqrt() * delta;
    let net_cost = (cm.c2 / delta).log2();
    let works = |l: u64| slope * l as f64 - net_cost > 0.0;
    let mut l = ((net_cost / slope).floor().max(0.0) as u64 + 1).max(1);
    while l > 1 && works(l - 1) {
        l -= 1;
    }
    while !works(l) {
        l += 1;
    }
    Ok(DistTrace {
        c1,
        c2: cm.c2,
        c3: cm.c3,
        eps: cm.eps,
        lambda: cm.lambda,
        slope,
        net_cost,
        l,
        exponent: slope * l as f64 - net_cost,
        shape: l as f64 * delta / (1.0 / delta).log2(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentTrace {
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub eps: f64,
    pub lambda: f64,
    /// `a = 1 + 1/c + margin`.
    pub a: f64,
    /// `L = (1/δ)^a`; infinite when it overflows.
    pub l: f64,
    pub ln_l: f64,
    /// Number of matched moments `k = c·n`.
    pub k: f64,
    /// Critical index `(k − ½)/W((k − ½)/λ)` of the moment series.
    pub j_star: f64,
    /// `D = c − c·ln(c/(ln 2·c₃√ε))`.
    pub d: f64,
    /// `D + c·ln(L/2) − ln(c₂/δ)`; positive means the bound decays.
    pub exponent: f64,
    /// `a·c − (c + 1)`, the coefficient of `ln(1/δ)` in the exponent.
    pub log_coefficient: f64,
    /// Smallest `a` making the exponent positive at this `δ`.
    pub a_required: f64,
}

/// List size `(1/δ)^a` when only the first `c·n` moments are assumed Poisson.
pub fn conditional_list_mmt(
    channel: &ChannelParams,
    c: f64,
    c1: f64,
    margin: f64,
) -> Result<MomentTrace> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::domain(format!(
            "moment fraction c must lie in (0, 1), got {c}"
        )));
    }
    if !(margin >= 0.0) {
        return Err(Error::domain(format!(
            "margin must be nonnegative, got {margin}"
        )));
    }
    let cm = common(channel, c1)?;
    let delta = channel.delta;
    let a = 1.0 + 1.0 / c + margin;
    let ln_l = a * (1.0 / delta).ln();
    let k = c * channel.n as f64;
    let j_star = if k > 0.5 && cm.lambda > 0.0 {
        (k - 0.5) / lambert_w_newton((k - 0.5) / cm.lambda)?
    } else {
        f64::NAN
    };
    let rate = std::f64::consts::LN_2 * cm.c3 * cm.sqrt_eps;
    let d = c - c * (c / rate).ln();
    let net = (cm.c2 / delta).ln();
    let exponent = d + c * (ln_l - std::f64::consts::LN_2) - net;
    let a_required = (net - d + c * std::f64::consts::LN_2) / (c * (1.0 / delta).ln());
    Ok(MomentTrace {
        c,
        c1,
        c2: cm.c2,
        c3: cm.c3,
        eps: cm.eps,
        lambda: cm.lambda,
        a,
        l: ln_l.exp(),
        ln_l,
        k,
        j_star,
        d,
        exponent,
        log_coefficient: a * c - (c + 1.0),
        a_required,
    })
}
