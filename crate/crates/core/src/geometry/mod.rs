//! Euclidean primitives shared by every code ensemble: ball volumes,
//! spherical caps, minimal enclosing balls, nets and the worst-case
//! list-size search.

mod list_size;
mod meb;
mod net;

pub use list_size::{
    count_within, worst_case_list_size, ListReport, ReportMode, SearchMode, DEFAULT_NODE_BUDGET,
};
pub use meb::{min_enclosing_ball, min_enclosing_ball_of, Ball, MEB_SHUFFLE_SEED};
pub use net::{grid_net, sphere_net, NetKind, NetSpec, SphereNet};

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Relative slack on squared radii for every "inside the ball" test.
pub const MEMBERSHIP_REL_TOL: f64 = 1e-9;
const MEMBERSHIP_ABS_TOL: f64 = 1e-20;

/// `‖x‖² ≤ r²` up to the membership tolerance.
#[inline]
pub fn within_sq(dist_sq: f64, radius: f64) -> bool {
    dist_sq <= radius * radius * (1.0 + MEMBERSHIP_REL_TOL) + MEMBERSHIP_ABS_TOL
}

#[inline]
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

/// Channel parameters of the power-constrained adversarial channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub n: usize,
    /// Transmit power `P`.
    pub power: f64,
    /// Adversary power `N`.
    pub noise: f64,
    /// Gap to capacity `δ`.
    pub delta: f64,
    /// Rate in bits per dimension, `max(0, C(P, N) − δ)`.
    pub rate: f64,
}

impl ChannelParams {
    pub fn new(n: usize, power: f64, noise: f64, delta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("dimension n must be positive"));
        }
        for (name, v) in [("P", power), ("N", noise), ("delta", delta)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::domain(format!(
                    "{name} must be a positive finite number, got {v}"
                )));
            }
        }
        let rate = (0.5 * (power / noise).log2() - delta).max(0.0);
        Ok(ChannelParams {
            n,
            power,
            noise,
            delta,
            rate,
        })
    }

    /// List-decoding capacity `C(P, N)`.
    pub fn capacity(&self) -> f64 {
        (0.5 * (self.power / self.noise).log2()).max(0.0)
    }

    /// Adversarial ball radius `√(nN)`.
    pub fn noise_radius(&self) -> f64 {
        (self.n as f64 * self.noise).sqrt()
    }

    /// Power radius `√(nP)`.
    pub fn power_radius(&self) -> f64 {
        (self.n as f64 * self.power).sqrt()
    }
}

/// `ln Vₙ`, the log-volume of the unit ball in ℝⁿ.
pub fn ln_unit_ball_volume(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    h * std::f64::consts::PI.ln() - ln_gamma(h + 1.0)
}

/// Volume of the radius-`r` ball in ℝⁿ.
pub fn ball_volume(n: usize, r: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("ball_volume needs n >= 1"));
    }
    if !(r >= 0.0) {
        return Err(Error::domain(format!(
            "radius must be nonnegative, got {r}"
        )));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    Ok((ln_unit_ball_volume(n) + n as f64 * r.ln()).exp())
}

/// Surface area of the radius-`r` sphere `S^{n−1}` in ℝⁿ, `n·Vₙ·r^{n−1}`.
pub fn sphere_area(n: usize, r: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain("sphere_area needs n >= 2"));
    }
    if !(r >= 0.0) {
        return Err(Error::domain(format!(
            "radius must be nonnegative, got {r}"
        )));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    let ln = (n as f64).ln() + ln_unit_ball_volume(n) + (n as f64 - 1.0) * r.ln();
    Ok(ln.exp())
}

fn check_powers(power: f64, noise: f64) -> Result<()> {
    if !(noise > 0.0) || !(power > 0.0) {
        return Err(Error::domain(format!(
            "P and N must be positive (P={power}, N={noise})"
        )));
    }
    Ok(())
}

/// Fraction of `S^{n−1}(0, √(nP))` covered by the largest cap a radius
/// `√(nN)` ball can cut out of it.
///
/// The cap has half-angle `φ` with `cos φ = √((P − N)/P)`, and its area
/// fraction is `½·I_{sin²φ}((n − 1)/2, ½)`.
pub fn cap_fraction(n: usize, power: f64, noise: f64) -> Result<f64> {
    check_powers(power, noise)?;
    if noise > power {
        return Err(Error::domain(format!(
            "cap_fraction needs N <= P (P={power}, N={noise})"
        )));
    }
    if n < 2 {
        return Err(Error::domain("cap_fraction needs n >= 2"));
    }
    let sin_sq = noise / power;
    Ok(0.5 * beta_reg((n as f64 - 1.0) / 2.0, 0.5, sin_sq))
}

/// `ln` of [`cap_fraction`], accurate where the fraction itself underflows.
pub fn ln_cap_fraction(n: usize, power: f64, noise: f64) -> Result<f64> {
    check_powers(power, noise)?;
    if noise > power {
        return Err(Error::domain(format!(
            "cap_fraction needs N <= P (P={power}, N={noise})"
        )));
    }
    if n < 2 {
        return Err(Error::domain("cap_fraction needs n >= 2"));
    }
    let a = (n as f64 - 1.0) / 2.0;
    let b = 0.5;
    let x = noise / power;
    if x >= (a + 1.0) / (a + b + 2.0) {
        return Ok((0.5 * beta_reg(a, b, x)).ln());
    }
    // I_x(a, b) = x^a (1 − x)^b / (a·B(a, b)) · cf, with the continued
    // fraction cf of order one in this regime.
    let ln_front = a * x.ln() + b * (1.0 - x).ln() - a.ln() - ln_beta(a, b);
    Ok(0.5f64.ln() + ln_front + beta_continued_fraction(a, b, x).ln())
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut c = 1.0;
    let mut d = 1.0 - (a + b) * x / (a + 1.0);
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..10_000 {
        let m = f64::from(m);
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
        for coef in [aa, -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0))] {
            d = 1.0 + coef * d;
            if d.abs() < TINY {
                d = TINY;
            }
            c = 1.0 + coef / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            h *= d * c;
        }
        if (d * c - 1.0).abs() < 1e-15 {
            break;
        }
    }
    h
}

/// `vol(B^{n−1}(0, √(nN))) / area(S^{n−1}(0, √(nP)))`, a lower bound on
/// [`cap_fraction`].
pub fn mu_lower_bound(n: usize, power: f64, noise: f64) -> Result<f64> {
    ln_mu_lower_bound(n, power, noise).map(f64::exp)
}

/// `ln` of [`mu_lower_bound`].
pub fn ln_mu_lower_bound(n: usize, power: f64, noise: f64) -> Result<f64> {
    check_powers(power, noise)?;
    if noise >= power {
        return Err(Error::domain(format!(
            "mu_lower_bound needs N < P (P={power}, N={noise})"
        )));
    }
    if n < 2 {
        return Err(Error::domain("mu_lower_bound needs n >= 2"));
    }
    let nf = n as f64;
    let num = ln_unit_ball_volume(n - 1) + (nf - 1.0) * (nf * noise).sqrt().ln();
    let den = nf.ln() + ln_unit_ball_volume(n) + (nf - 1.0) * (nf * power).sqrt().ln();
    Ok(num - den)
}

/// `C(P, N) = max(0, ½·log₂(P/N))`.
pub fn capacity(power: f64, noise: f64) -> Result<f64> {
    check_powers(power, noise)?;
    Ok((0.5 * (power / noise).log2()).max(0.0))
}

/// Number of radius-`√(nN)` balls used to cover the cone over a maximal
/// cap when reducing a ball code to a spherical code: `⌈P/(4N)⌉`.
pub fn cone_cover_count(power: f64, noise: f64) -> Result<u64> {
    check_powers(power, noise)?;
    if noise >= power {
        return Err(Error::domain(format!(
            "cone_cover_count needs N < P (P={power}, N={noise})"
        )));
    }
    Ok((power / (4.0 * noise)).ceil().max(1.0) as u64)
}

/// Uniform point on the sphere of the given radius in ℝⁿ.
pub fn random_sphere_point<R: Rng + ?Sized>(n: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = norm_sq(&g).sqrt();
        if norm > 1e-300 {
            return g.into_iter().map(|x| x * radius / norm).collect();
        }
    }
}

/// Uniform point in the ball of the given radius in ℝⁿ.
pub fn random_ball_point<R: Rng + ?Sized>(n: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    let u: f64 = rng.random();
    let rho = radius * u.powf(1.0 / n as f64);
    random_sphere_point(n, rho, rng)
}
