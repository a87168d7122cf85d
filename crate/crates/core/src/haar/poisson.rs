use statrs::function::factorial::ln_factorial;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Poisson law of half the number of nonzero lattice points in a centrally
/// symmetric body of volume `volume`: mean `λ = volume/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonParams {
    pub lambda: f64,
    pub volume: f64,
}

impl PoissonParams {
    pub fn from_volume(volume: f64) -> Result<Self> {
        if !(volume >= 0.0) || !volume.is_finite() {
            return Err(Error::domain(format!(
                "volume must be nonnegative, got {volume}"
            )));
        }
        Ok(PoissonParams {
            lambda: volume / 2.0,
            volume,
        })
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::domain(format!(
            "Poisson mean must be nonnegative, got {lambda}"
        )));
    }
    Ok(())
}

fn ln_pmf(lambda: f64, k: u64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    k as f64 * lambda.ln() - lambda - ln_factorial(k)
}

/// `Pr[p = k]` for `p ~ Pois(λ)`.
pub fn pois_pmf(lambda: f64, k: u64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(ln_pmf(lambda, k).exp())
}

/// `Pr[p > ℓ]` for `p ~ Pois(λ)` and real `ℓ ≥ 0`, summed upward from
/// `⌊ℓ⌋ + 1` until the remaining terms are below `1e−17` relative.
pub fn pois_tail_exact(lambda: f64, ell: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if !(ell >= 0.0) || !ell.is_finite() {
        return Err(Error::domain(format!(
            "tail threshold must be nonnegative, got {ell}"
        )));
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let start = ell.floor() as u64 + 1;
    // Below the mode the tail is most of the mass: use the complement.
    if (start as f64) <= lambda {
        let head: f64 = (0..start).map(|k| ln_pmf(lambda, k).exp()).sum();
        return Ok((1.0 - head).max(0.0));
    }
    let mut k = start;
    let mut term = ln_pmf(lambda, k).exp();
    let mut sum = 0.0;
    while term > 0.0 {
        sum += term;
        k += 1;
        term *= lambda / k as f64;
        // Terms decrease at least geometrically with ratio λ/k past the
        // mode, so the remainder is below term/(1 − λ/k).
        if term / (1.0 - lambda / k as f64) < 1e-17 * sum {
            sum += term / (1.0 - lambda / k as f64);
            break;
        }
    }
    Ok(sum)
}

/// `e^{−λ}(eλ)^ℓ/ℓ^ℓ`, an upper bound on `Pr[p > ℓ]` for `ℓ > λ`.
pub fn pois_tail_bound(lambda: f64, ell: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if !(ell > lambda) || !ell.is_finite() {
        return Err(Error::domain(format!(
            "tail bound needs threshold above the mean (λ={lambda}, ℓ={ell})"
        )));
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    Ok((-lambda + ell * (1.0 + lambda.ln()) - ell * ell.ln()).exp())
}

/// `E[p^k] = e^{−λ}·Σ_i i^k λ^i/i!`.
///
/// Summed in the log domain around the largest term, dropping terms below
/// `1e−15` of it once past the peak.
pub fn pois_moment(lambda: f64, k: u32) -> Result<f64> {
    check_lambda(lambda)?;
    if k == 0 {
        return Ok(1.0);
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let kf = f64::from(k);
    let ln_term =
        |i: u64| kf * (i as f64).ln() + i as f64 * lambda.ln() - lambda - ln_gamma(i as f64 + 1.0);
    let mut terms = Vec::new();
    let mut max = f64::NEG_INFINITY;
    let mut i = 1u64;
    loop {
        let t = ln_term(i);
        terms.push(t);
        if t > max {
            max = t;
        } else if t < max + (1e-15f64).ln() && (i as f64) > lambda {
            break;
        }
        i += 1;
        if i > 10_000_000 {
            return Err(Error::budget("Poisson moment series terms", 10_000_000));
        }
    }
    Ok(max.exp() * terms.iter().map(|t| (t - max).exp()).sum::<f64>())
}

/// `E[p^k]` via the recursion `E[p^{j+1}] = λ·Σ_{i ≤ j} C(j, i)·E[p^i]`.
pub fn pois_moment_touchard(lambda: f64, k: u32) -> Result<f64> {
    check_lambda(lambda)?;
    let k = k as usize;
    let mut moments = vec![1.0];
    let mut row = vec![1.0f64];
    for _ in 0..k {
        let next = lambda * row.iter().zip(&moments).map(|(c, m)| c * m).sum::<f64>();
        moments.push(next);
        let mut grown = vec![1.0; row.len() + 1];
        for i in 1..row.len() {
            grown[i] = row[i - 1] + row[i];
        }
        row = grown;
    }
    Ok(moments[k])
}

/// Principal branch of the Lambert W function for `x > 0`, by Newton's
/// method on `w·e^w = x` from `ln(1 + x)`, which lies above the root.
pub fn lambert_w_newton(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!(
            "lambert_w_newton needs finite x > 0, got {x}"
        )));
    }
    let mut w = x.ln_1p();
    for _ in 0..200 {
        let ew = w.exp();
        let step = (w * ew - x) / (ew * (w + 1.0));
        w -= step;
        if step.abs() <= 1e-16 * w.abs().max(1.0) {
            break;
        }
    }
    Ok(w)
}

/// `ln x − ln ln x` with a flag for whether `x ≥ e`, where the
/// approximation is intended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambertEstimate {
    pub value: f64,
    pub in_domain: bool,
}

pub fn lambert_w_estimate(x: f64) -> Result<LambertEstimate> {
    if !(x > 1.0) || !x.is_finite() {
        return Err(Error::domain(format!(
            "lambert_w_estimate needs x > 1, got {x}"
        )));
    }
    let in_domain = x >= std::f64::consts::E;
    if !in_domain {
        log::warn!("lambert_w_estimate used below e (x = {x})");
    }
    let l = x.ln();
    Ok(LambertEstimate {
        value: l - l.ln(),
        in_domain,
    })
}
