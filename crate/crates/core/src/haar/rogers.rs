use rand::Rng;

use super::poisson::pois_pmf;
use crate::error::{Error, Result};
use crate::geometry::ln_unit_ball_volume;
use crate::lattice::{Lattice, DEFAULT_ENUM_CAP};

/// Largest allowed `ω^{−(n−1)}`.
pub const ROGERS_OVERFLOW_GUARD: f64 = 1e12;

/// A lattice from Rogers' ensemble: basis columns `ω·eⱼ + ω^{−(n−1)}θⱼ·eₙ`
/// for `j < n` and `ω^{−(n−1)}·eₙ`.
#[derive(Debug, Clone)]
pub struct RogersSample {
    pub n: usize,
    pub omega: f64,
    pub thetas: Vec<f64>,
    pub lattice: Lattice,
}

impl RogersSample {
    /// Builds the lattice for given `θ₁, …, θ_{n−1}`.
    pub fn from_thetas(omega: f64, thetas: Vec<f64>) -> Result<Self> {
        let n = thetas.len() + 1;
        if n < 2 {
            return Err(Error::domain("Rogers ensemble needs n >= 2"));
        }
        if !(omega > 0.0 && omega < 1.0) {
            return Err(Error::domain(format!(
                "omega must lie in (0, 1), got {omega}"
            )));
        }
        let top = omega.powi(-(n as i32 - 1));
        if !(top <= ROGERS_OVERFLOW_GUARD) {
            return Err(Error::domain(format!(
                "omega^-(n-1) = {top:.3e} exceeds the overflow guard {ROGERS_OVERFLOW_GUARD:.0e} (n={n}, omega={omega})"
            )));
        }
        let mut cols = Vec::with_capacity(n);
        for (j, &t) in thetas.iter().enumerate() {
            let mut c = vec![0.0; n];
            c[j] = omega;
            c[n - 1] = top * t;
            cols.push(c);
        }
        let mut last = vec![0.0; n];
        last[n - 1] = top;
        cols.push(last);
        let lattice = Lattice::from_columns(&cols)?;
        if (lattice.det() - 1.0).abs() > 1e-9 {
            return Err(Error::precondition(format!(
                "Rogers basis has determinant {} instead of 1",
                lattice.det()
            )));
        }
        Ok(RogersSample {
            n,
            omega,
            thetas,
            lattice,
        })
    }
}

/// Draws `θᵢ ~ U[0, 1)` and builds the lattice.
pub fn rogers_sample<R: Rng + ?Sized>(n: usize, omega: f64, rng: &mut R) -> Result<RogersSample> {
    if n < 2 {
        return Err(Error::domain("Rogers ensemble needs n >= 2"));
    }
    let thetas = (0..n - 1).map(|_| rng.random::<f64>()).collect();
    RogersSample::from_thetas(omega, thetas)
}

fn radius_for_volume(n: usize, volume: f64) -> f64 {
    if volume == 0.0 {
        return 0.0;
    }
    ((volume.ln() - ln_unit_ball_volume(n)) / n as f64).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiegelEstimate {
    pub mean: f64,
    pub std_err: f64,
    /// Volume of the body, the mean predicted by Siegel's formula.
    pub volume: f64,
    pub samples: usize,
}

/// Mean number of nonzero lattice points in `B(center, r)` over Rogers
/// samples.
pub fn siegel_mc<R: Rng + ?Sized>(
    n: usize,
    omega: f64,
    center: &[f64],
    r: f64,
    samples: usize,
    rng: &mut R,
) -> Result<SiegelEstimate> {
    if samples < 100 {
        return Err(Error::domain(format!(
            "siegel_mc needs at least 100 samples, got {samples}"
        )));
    }
    if center.len() != n || !(r >= 0.0) {
        return Err(Error::domain(
            "siegel_mc needs an n-dimensional center and r >= 0",
        ));
    }
    let volume = if r == 0.0 {
        0.0
    } else {
        (ln_unit_ball_volume(n) + n as f64 * r.ln()).exp()
    };
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let s = rogers_sample(n, omega, rng)?;
        let k = s.lattice.count_in_ball(center, r, true, DEFAULT_ENUM_CAP)? as f64;
        sum += k;
        sum_sq += k * k;
    }
    let m = samples as f64;
    let mean = sum / m;
    let var = ((sum_sq - m * mean * mean) / (m - 1.0)).max(0.0);
    Ok(SiegelEstimate {
        mean,
        std_err: (var / m).sqrt(),
        volume,
        samples,
    })
}

/// Histogram of `½·|(Λ ∖ {0}) ∩ B(0, r)|` compared with `Pois(V/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonFit {
    pub lambda: f64,
    /// `histogram[k]` counts samples with half-count `k`.
    pub histogram: Vec<u64>,
    pub tv_distance: f64,
    pub chi_square: f64,
    /// Pooled bins minus one.
    pub degrees_of_freedom: usize,
    pub mean: f64,
    pub second_moment: f64,
    pub mean_std_err: f64,
    pub second_moment_std_err: f64,
}

/// Total-variation and pooled chi-square comparison of half-counts in the
/// origin-centered ball of volume `volume` with `Pois(volume/2)`.
pub fn empirical_poissonianity<R: Rng + ?Sized>(
    n: usize,
    omega: f64,
    volume: f64,
    samples: usize,
    rng: &mut R,
) -> Result<PoissonFit> {
    if !(volume >= 0.0) || volume > 20.0 {
        return Err(Error::domain(format!(
            "volume must lie in [0, 20], got {volume}"
        )));
    }
    if samples == 0 {
        return Err(Error::domain("empirical_poissonianity needs samples >= 1"));
    }
    let r = radius_for_volume(n, volume);
    let origin = vec![0.0; n];
    let mut halves = Vec::with_capacity(samples);
    for _ in 0..samples {
        let s = rogers_sample(n, omega, rng)?;
        let k = s
            .lattice
            .count_in_ball(&origin, r, true, DEFAULT_ENUM_CAP)?;
        halves.push((k / 2) as u64);
    }
    poisson_fit(&halves, volume / 2.0)
}

pub(crate) fn poisson_fit(halves: &[u64], lambda: f64) -> Result<PoissonFit> {
    let m = halves.len() as f64;
    let top = halves.iter().copied().max().unwrap_or(0) as usize;
    let mut histogram = vec![0u64; top + 1];
    for &h in halves {
        histogram[h as usize] += 1;
    }
    let pmf: Vec<f64> = (0..=top as u64)
        .map(|k| pois_pmf(lambda, k))
        .collect::<Result<_>>()?;
    let covered: f64 = pmf.iter().sum();
    let tv = 0.5
        * (histogram
            .iter()
            .zip(&pmf)
            .map(|(&c, &p)| (c as f64 / m - p).abs())
            .sum::<f64>()
            + (1.0 - covered).max(0.0));

    // Pool consecutive bins until each expects at least five samples; the
    // last bin absorbs the upper tail.
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    let mut k = 0u64;
    let mut remaining = 1.0;
    loop {
        let p = pois_pmf(lambda, k)?;
        let obs = histogram.get(k as usize).copied().unwrap_or(0) as f64;
        acc.0 += obs;
        acc.1 += p * m;
        remaining -= p;
        if acc.1 >= 5.0 {
            bins.push(acc);
            acc = (0.0, 0.0);
        }
        k += 1;
        if remaining * m < 5.0 || k as usize > top + 1000 {
            break;
        }
    }
    let tail_obs: f64 = histogram.iter().skip(k as usize).map(|&c| c as f64).sum();
    acc.0 += tail_obs;
    acc.1 += remaining.max(0.0) * m;
    match bins.last_mut() {
        Some(last) => {
            last.0 += acc.0;
            last.1 += acc.1;
        }
        None => bins.push(acc),
    }
    let chi_square = bins
        .iter()
        .filter(|b| b.1 > 0.0)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();

    let vals: Vec<f64> = halves.iter().map(|&h| h as f64).collect();
    let mean = vals.iter().sum::<f64>() / m;
    let second_moment = vals.iter().map(|v| v * v).sum::<f64>() / m;
    let se = |xs: &mut dyn Iterator<Item = f64>, mu: f64| {
        let var = xs.map(|x| (x - mu).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
        (var / m).sqrt()
    };
    let mean_std_err = se(&mut vals.iter().copied(), mean);
    let second_moment_std_err = se(&mut vals.iter().map(|v| v * v), second_moment);
    Ok(PoissonFit {
        lambda,
        histogram,
        tv_distance: tv,
        chi_square,
        degrees_of_freedom: bins.len().saturating_sub(1),
        mean,
        second_moment,
        mean_std_err,
        second_moment_std_err,
    })
}
