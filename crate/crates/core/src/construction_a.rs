//! Nested Construction-A lattice codes: parameter selection, the fine
//! lattice, the encoder ψ and the lattice-point counting sandwich.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::finite_field::{next_prime_at_least, random_code, LinearCodeFq};
use crate::geometry::{
    ln_unit_ball_volume, worst_case_list_size, ChannelParams, ListReport, SearchMode,
};
use crate::lattice::{Lattice, RadiiReport};

/// Parameters of the nested ensemble for one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstructionAParams {
    pub channel: ChannelParams,
    pub q: u64,
    pub kappa: usize,
    pub alpha: u64,
    /// `√(P/N) / (2^{δ/8} − 1)`, the quantity both `q` and `α` must exceed.
    pub threshold: f64,
    /// `(κ/n)·log₂ q`, the rate actually realized after rounding κ.
    pub realized_rate: f64,
    pub warnings: Vec<String>,
}

impl ConstructionAParams {
    /// Same channel with a different field size; κ is re-derived.
    pub fn with_q(&self, q: u64) -> Result<Self> {
        if !crate::finite_field::is_prime(q) {
            return Err(Error::domain(format!("q = {q} is not prime")));
        }
        let kappa = kappa_for(&self.channel, q);
        Ok(ConstructionAParams {
            q,
            kappa,
            realized_rate: kappa as f64 * (q as f64).log2() / self.channel.n as f64,
            ..self.clone()
        })
    }
}

fn kappa_for(ch: &ChannelParams, q: u64) -> usize {
    let k = (ch.n as f64 * ch.rate / (q as f64).log2()).round() as usize;
    k.min(ch.n)
}

/// Smallest prime `q` with `1 + √P/(q√N) ≤ 2^{δ/8}` and smallest integer
/// `α > √(P/N)/(2^{δ/8} − 1)`; `κ` is `nR/log₂ q` rounded to nearest.
pub fn select_params(channel: &ChannelParams) -> Result<ConstructionAParams> {
    if channel.power <= channel.noise {
        return Err(Error::domain(format!(
            "nested construction needs P > N (P={}, N={})",
            channel.power, channel.noise
        )));
    }
    let mut warnings = Vec::new();
    if channel.delta >= 0.9 {
        let msg = format!(
            "delta = {} is outside (0, 0.9); bounds are not guaranteed",
            channel.delta
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let growth = (channel.delta / 8.0).exp2() - 1.0;
    let threshold = (channel.power / channel.noise).sqrt() / growth;
    if !(threshold < 1e15) {
        return Err(Error::domain(format!(
            "delta = {} is too small for a usable field size",
            channel.delta
        )));
    }
    // Guard against rounding pushing a prime just below the threshold.
    let mut q = next_prime_at_least(threshold);
    while 1.0 + (channel.power / channel.noise).sqrt() / q as f64 > (channel.delta / 8.0).exp2() {
        q = next_prime_at_least(q as f64 + 1.0);
    }
    let alpha = threshold.floor() as u64 + 1;
    let kappa = kappa_for(channel, q);
    Ok(ConstructionAParams {
        channel: *channel,
        q,
        kappa,
        alpha,
        threshold,
        realized_rate: kappa as f64 * (q as f64).log2() / channel.n as f64,
        warnings,
    })
}

/// `Φ(𝒞) + qℤⁿ` with a basis built from the code's reduced echelon form:
/// the systematic generators plus `q·e_j` for every non-pivot coordinate.
/// Its determinant is `q^{n − rank}`.
pub fn build_construction_a(code: &LinearCodeFq) -> Result<Lattice> {
    Lattice::from_basis(construction_a_basis(code))
}

fn construction_a_basis(code: &LinearCodeFq) -> DMatrix<f64> {
    let n = code.n();
    let q = code.q() as f64;
    let (rows, pivots) = code.systematic_basis();
    let mut cols: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| x as f64).collect())
        .collect();
    for j in (0..n).filter(|j| !pivots.contains(j)) {
        let mut e = vec![0.0; n];
        e[j] = q;
        cols.push(e);
    }
    DMatrix::from_fn(n, n, |i, j| cols[j][i])
}

/// Coarse lattice scaled so its certified covering-radius upper bound is
/// `√(nP)`; the codebook then meets the power constraint.
pub fn scale_coarse_to_power(coarse: &Lattice, power: f64) -> Result<Lattice> {
    if !(power > 0.0) {
        return Err(Error::domain(format!(
            "power must be positive, got {power}"
        )));
    }
    let target = (coarse.dim() as f64 * power).sqrt();
    coarse.scale(target / coarse.covering_radius_upper())
}

/// A coarse lattice, the fine Construction-A lattice above it and the code.
#[derive(Debug, Clone)]
pub struct NestedPair {
    pub coarse: Lattice,
    pub fine: Lattice,
    pub code: LinearCodeFq,
    pub coarse_radii: RadiiReport,
    /// `r_cov/r_eff ≤ 2^{δ/8}` certified with the upper bracket.
    pub rcov_condition_certified: bool,
    /// `r_pack/r_eff > 1/4`.
    pub rpack_condition_holds: bool,
    pub nested: bool,
}

/// `Λf = G_c·((1/q)·Φ(𝒞) + ℤⁿ)` over the given coarse lattice and code.
pub fn nested_from_code<R: Rng + ?Sized>(
    coarse: &Lattice,
    code: LinearCodeFq,
    delta: f64,
    radius_samples: usize,
    rng: &mut R,
) -> Result<NestedPair> {
    if code.n() != coarse.dim() {
        return Err(Error::precondition(format!(
            "code length {} differs from lattice dimension {}",
            code.n(),
            coarse.dim()
        )));
    }
    let a = construction_a_basis(&code);
    let fine = Lattice::from_basis(coarse.basis() * a / code.q() as f64)?;
    let radii = coarse.radii(radius_samples, rng);
    let nested = Lattice::sublattice_check(coarse, &fine);
    if !nested {
        return Err(Error::precondition(
            "coarse lattice is not contained in the fine lattice",
        ));
    }
    Ok(NestedPair {
        rcov_condition_certified: radii.r_cov_upper / radii.r_eff <= (delta / 8.0).exp2(),
        rpack_condition_holds: radii.r_pack / radii.r_eff > 0.25,
        coarse_radii: radii,
        coarse: coarse.clone(),
        fine,
        code,
        nested,
    })
}

/// Samples a full-rank generator and builds the nested pair.
pub fn build_nested<R: Rng + ?Sized>(
    params: &ConstructionAParams,
    coarse: &Lattice,
    rng: &mut R,
) -> Result<NestedPair> {
    let code = random_code(params.q, params.channel.n, params.kappa, rng, true)?;
    nested_from_code(coarse, code, params.channel.delta, 256, rng)
}

impl NestedPair {
    /// `ψ(m) = [(1/q)·G_c·(G_lin·m mod q)] mod Λc`.
    pub fn encode_psi(&self, m: &[u64]) -> Result<Vec<f64>> {
        let c = self.code.encode(m)?;
        let q = self.code.q() as f64;
        let b = self.coarse.basis();
        let n = c.len();
        let x: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| b[(i, j)] * c[j] as f64).sum::<f64>() / q)
            .collect();
        Ok(self.coarse.mod_lattice(&x))
    }

    /// `ψ` applied to every message, in message order.
    pub fn codebook(&self) -> Result<Vec<Vec<f64>>> {
        self.code
            .messages()?
            .iter()
            .map(|m| self.encode_psi(m))
            .collect()
    }
}

/// Analytic list-size bound of the nested ensemble: the smallest `ℓ` with
/// `log₂(4α) − 5ℓδ/8 < 0` and `L = q^ℓ − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct NestedBound {
    pub ell: u64,
    /// `L` when it fits in 128 bits.
    pub list_size: Option<u128>,
    pub log2_list_size: f64,
}

pub fn nested_analytic_bound(params: &ConstructionAParams) -> NestedBound {
    let delta = params.channel.delta;
    let ell = (8.0 / (5.0 * delta) * (4.0 * params.alpha as f64).log2()).ceil() as u64;
    let q = params.q as u128;
    let list_size = u32::try_from(ell)
        .ok()
        .and_then(|e| q.checked_pow(e))
        .map(|v| v - 1);
    NestedBound {
        ell,
        list_size,
        log2_list_size: ell as f64 * (params.q as f64).log2(),
    }
}

/// One draw of the nested ensemble and its exact worst-case list size.
#[derive(Debug, Clone)]
pub struct NestedTrial {
    pub codebook_size: usize,
    pub distinct_codewords: usize,
    pub report: ListReport,
    pub rcov_condition_certified: bool,
    pub rpack_condition_holds: bool,
}

pub fn nested_trial<R: Rng + ?Sized>(
    params: &ConstructionAParams,
    coarse: &Lattice,
    node_budget: u64,
    rng: &mut R,
) -> Result<NestedTrial> {
    let kappa_cap = (4096f64).ln() / (params.q as f64).ln();
    if params.kappa as f64 > kappa_cap + 1e-9 {
        return Err(Error::budget("nested codebook size q^kappa", 4096));
    }
    let pair = build_nested(params, coarse, rng)?;
    let book = pair.codebook()?;
    let distinct = count_distinct(&book);
    let report = worst_case_list_size(
        &book,
        params.channel.noise_radius(),
        SearchMode::Exact { node_budget },
    )?;
    Ok(NestedTrial {
        codebook_size: book.len(),
        distinct_codewords: distinct,
        report,
        rcov_condition_certified: pair.rcov_condition_certified,
        rpack_condition_holds: pair.rpack_condition_holds,
    })
}

/// Number of distinct points, treating coordinates within `1e−9` as equal.
/// Quadratic; meant for codebooks of a few thousand points.
pub fn count_distinct(points: &[Vec<f64>]) -> usize {
    let mut reps: Vec<&Vec<f64>> = Vec::new();
    for p in points {
        if !reps
            .iter()
            .any(|q| q.iter().zip(p).all(|(a, b)| (a - b).abs() <= 1e-9))
        {
            reps.push(p);
        }
    }
    reps.len()
}

/// Outcome of checking the counting sandwich on random centers.
#[derive(Debug, Clone, PartialEq)]
pub struct CountSandwichReport {
    pub checks: usize,
    pub violations: usize,
    /// Certified covering-radius bound used in place of `r_cov`.
    pub r_cov_used: f64,
    /// Smallest and largest `count / (qⁿVₙrⁿ/det)` seen.
    pub min_density_ratio: f64,
    pub max_density_ratio: f64,
}

/// Lower and upper counting bounds `(qⁿVₙ/det Λc)·(r ∓ u/q)ⁿ` for
/// `|(1/q)Λc ∩ B(y, r)|`, with `u` an upper bound on `r_cov(Λc)`.
pub fn count_sandwich_bounds(coarse: &Lattice, q: f64, r: f64, r_cov: f64) -> (f64, f64) {
    let n = coarse.dim() as f64;
    let ln_c = n * q.ln() + ln_unit_ball_volume(coarse.dim()) - coarse.det().ln();
    let lo_base = r - r_cov / q;
    let lower = if lo_base > 0.0 {
        (ln_c + n * lo_base.ln()).exp()
    } else {
        0.0
    };
    let upper = (ln_c + n * (r + r_cov / q).ln()).exp();
    (lower, upper)
}

/// Counts `(1/q)Λc ∩ B(y, r)` exactly for `trials` uniform centers per
/// radius and checks each count against [`count_sandwich_bounds`].
pub fn verify_count_sandwich<R: Rng + ?Sized>(
    coarse: &Lattice,
    q: u64,
    radii: &[f64],
    trials: usize,
    rng: &mut R,
) -> Result<CountSandwichReport> {
    if q == 0 {
        return Err(Error::domain("q must be positive"));
    }
    let qf = q as f64;
    let u = coarse.covering_radius_upper();
    if let Some(&r) = radii.iter().find(|&&r| !(r > u / qf)) {
        return Err(Error::precondition(format!(
            "radius {r} must exceed r_cov/q = {}",
            u / qf
        )));
    }
    let fine = coarse.scale(1.0 / qf)?;
    let n = coarse.dim();
    let b = coarse.basis();
    let mut report = CountSandwichReport {
        checks: 0,
        violations: 0,
        r_cov_used: u,
        min_density_ratio: f64::INFINITY,
        max_density_ratio: 0.0,
    };
    for _ in 0..trials {
        let t: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| b[(i, j)] * t[j]).sum())
            .collect();
        for &r in radii {
            let count = fine.count_in_ball(&y, r, false, 50_000_000)? as f64;
            let (lo, hi) = count_sandwich_bounds(coarse, qf, r, u);
            report.checks += 1;
            if count < lo || count > hi {
                report.violations += 1;
            }
            let (_, mid) = count_sandwich_bounds(coarse, qf, r, 0.0);
            let ratio = count / mid;
            report.min_density_ratio = report.min_density_ratio.min(ratio);
            report.max_density_ratio = report.max_density_ratio.max(ratio);
        }
    }
    Ok(report)
}
