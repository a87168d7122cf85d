use listlab_core::constellations::{
    awgn_error_mc, ball_rate_check, greedy_packing, ic_analytic_bound, ic_list_size,
    m_for_reff_ratio, sample_ic, IcSearch,
};
use listlab_core::construction_a::{
    nested_analytic_bound, nested_trial, scale_coarse_to_power, select_params,
};
use listlab_core::geometry::{
    cone_cover_count, ln_cap_fraction, ln_unit_ball_volume, random_ball_point, worst_case_list_size,
};
use listlab_core::haar::{
    conditional_list_dist, conditional_list_mmt, empirical_poissonianity, siegel_mc,
};
use listlab_core::spherical::{project_to_sphere, sample_spherical, spherical_list_mc};
use listlab_core::{Attack, Error, Lattice, Result, SearchMode};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{CoarseKind, Experiment, ExperimentConfig, IcSearchKind};
use crate::output::CsvRow;

/// Rows produced by one trial.
pub struct TrialRows<'a> {
    cfg: &'a ExperimentConfig,
    trial: u64,
    pub rows: Vec<CsvRow>,
}

impl<'a> TrialRows<'a> {
    pub fn new(cfg: &'a ExperimentConfig, trial: u64) -> Self {
        TrialRows {
            cfg,
            trial,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, metric: &str, value: f64, mode: &str, extra: Value) {
        let ch = &self.cfg.channel;
        self.rows.push(CsvRow {
            experiment: self.cfg.experiment.name().to_string(),
            n: ch.n,
            power: ch.power,
            noise: ch.noise,
            delta: ch.delta,
            seed: self.cfg.seed,
            trial: self.trial,
            metric_name: metric.to_string(),
            metric_value: value,
            mode: mode.to_string(),
            extra: extra.to_string(),
        });
    }

    /// Records a budget error as a `budget_exceeded` row.
    pub fn push_budget(&mut self, err: &Error) {
        let (limit, extra) = match err {
            Error::Budget { what, limit } => (
                *limit as f64,
                json!({ "what": what, "message": err.to_string() }),
            ),
            Error::SearchBudget { nodes, best } => (
                *nodes as f64,
                json!({ "best_lower_bound": best.list_size, "message": err.to_string() }),
            ),
            other => (f64::NAN, json!({ "message": other.to_string() })),
        };
        self.push("budget_exceeded", limit, "budget", extra);
    }
}

/// Runs one trial of the configured experiment, appending to `out`.
pub fn run_trial(
    cfg: &ExperimentConfig,
    out: &mut TrialRows<'_>,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    match cfg.experiment {
        Experiment::SphericalLs => spherical_ls(cfg, out, rng),
        Experiment::CaLs => ca_ls(cfg, out, rng),
        Experiment::IcLs => ic_ls(cfg, out, rng),
        Experiment::IcGoodness => ic_goodness(cfg, out, rng),
        Experiment::Awgn => awgn(cfg, out, rng),
        Experiment::HaarSiegel => haar_siegel(cfg, out, rng),
        Experiment::HaarPoisson => haar_poisson(cfg, out, rng),
        Experiment::BoundsCalc => bounds_calc(cfg, out),
        Experiment::ReductionCheck => reduction_check(cfg, out, rng),
    }
}

fn spherical_ls(
    cfg: &ExperimentConfig,
    out: &mut TrialRows<'_>,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let ch = &cfg.channel;
    out.push(
        "l_threshold",
        ch.capacity() / ch.delta,
        "analytic",
        json!({}),
    );
    let code = sample_spherical(ch.n, ch.power, ch.rate, rng)?;
    out.push(
        "codebook_size",
        code.len() as f64,
        "sampled",
        json!({ "rate": code.rate() }),
    );
    let attacks = match cfg.knobs.attack {
        Some(a) => vec![a],
        None => Attack::ALL.to_vec(),
    };
    for attack in attacks {
        let rep = spherical_list_mc(&code, ch.noise, attack, cfg.budget, rng)?;
        out.push(
            &format!("list_size.{}", attack.name()),
            rep.list_size as f64,
            "search-lower-bound",
            json!({ "centers": rep.nodes, "witness_center": rep.witness_center }),
        );
    }
    Ok(())
}

fn ca_ls(cfg: &ExperimentConfig, out: &mut TrialRows<'_>, rng: &mut ChaCha8Rng) -> Result<()> {
    let ch = &cfg.channel;
    let mut params = select_params(ch)?;
    if let Some(q) = cfg.knobs.q {
        params = params.with_q(q)?;
    }
    let bound = nested_analytic_bound(&params);
    let extra = json!({ "q": params.q, "kappa": params.kappa, "alpha": params.alpha });
    out.push("nested_ell", bound.ell as f64, "analytic", extra.clone());
    out.push(
        "nested_log2_l",
        bound.log2_list_size,
        "analytic",
        extra.clone(),
    );
    let base = match cfg.knobs.coarse {
        CoarseKind::Integer => Lattice::integer(ch.n)?,
        CoarseKind::Hexagonal => Lattice::hexagonal()?,
    };
    let coarse = scale_coarse_to_power(&base, ch.power)?;
    let t = nested_trial(&params, &coarse, cfg.budget, rng)?;
    out.push(
        "list_size",
        t.report.list_size as f64,
        "exact",
        json!({ "nodes": t.report.nodes }),
    );
    out.push(
        "codebook_size",
        t.codebook_size as f64,
        "sampled",
        extra.clone(),
    );
    out.push(
        "distinct_codewords",
        t.distinct_codewords as f64,
        "sampled",
        extra,
    );
    out.push(
        "rcov_certified",
        f64::from(u8::from(t.rcov_condition_certified)),
        "measured",
        json!({}),
    );
    out.push(
        "rpack_holds",
        f64::from(u8::from(t.rpack_condition_holds)),
        "measured",
        json!({}),
    );
    Ok(())
}

fn ic_ls(cfg: &ExperimentConfig, out: &mut TrialRows<'_>, rng: &mut ChaCha8Rng) -> Result<()> {
    let ch = &cfg.channel;
    let alpha = cfg.knobs.alpha_factor * ch.noise_radius();
    out.push(
        "analytic_bound",
        ic_analytic_bound(ch.delta)? as f64,
        "analytic",
        json!({}),
    );
    let m = m_for_reff_ratio(alpha, ch.n, ch.noise, ch.delta)?;
    let ic = sample_ic(alpha, m, ch.n, rng)?;
    out.push(
        "constellation_size",
        m as f64,
        "sampled",
        json!({ "alpha": alpha }),
    );
    let (search, mode) = match cfg.knobs.search {
        IcSearchKind::Exact => (
            IcSearch::Exact {
                node_budget: cfg.budget,
            },
            "exact",
        ),
        IcSearchKind::Net => (IcSearch::Net { delta: ch.delta }, "net"),
    };
    let rep = ic_list_size(&ic, ch.noise, search, None)?;
    out.push(
        "list_size",
        rep.report.list_size as f64,
        mode,
        json!({ "nodes": rep.report.nodes, "lifted": rep.lifted.len() }),
    );
    Ok(())
}

fn ic_goodness(
    cfg: &ExperimentConfig,
    out: &mut TrialRows<'_>,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let ch = &cfg.channel;
    let alpha = cfg.knobs.alpha_factor * ch.noise_radius();
    if out.trial == 0 {
        if ch.n <= 5 && alpha > 4.0 {
            let packing = greedy_packing(alpha, ch.n, cfg.knobs.resolution)?;
            let (r_pack, r_eff) = (packing.packing_radius(), packing.effective_radius());
            let extra = json!({ "alpha": alpha, "resolution": cfg.knobs.resolution });
            out.push(
                "packing_size",
                packing.len() as f64,
                "greedy",
                extra.clone(),
            );
            out.push("packing_r_pack", r_pack, "greedy", extra.clone());
            out.push("packing_r_eff", r_eff, "greedy", extra.clone());
            out.push("packing_ratio", r_pack / r_eff, "greedy", extra);
        } else {
            log::warn!(
                "greedy packing needs n <= 5 and alpha > 4; skipped (n={}, alpha={alpha})",
                ch.n
            );
        }
    }
    let m = m_for_reff_ratio(alpha, ch.n, ch.noise, ch.delta)?;
    let ic = sample_ic(alpha, m, ch.n, rng)?;
    let rep = ball_rate_check(&ic, ch.power, ch.delta)?;
    let extra = json!({ "alpha": alpha, "m": m, "lower": rep.lower, "upper": rep.upper });
    out.push("ball_count", rep.count as f64, "sampled", extra.clone());
    out.push("ball_expected", rep.expected, "analytic", extra.clone());
    out.push(
        "ball_within_band",
        f64::from(u8::from(rep.within_band)),
        "sampled",
        extra,
    );
    Ok(())
}

fn awgn(cfg: &ExperimentConfig, out: &mut TrialRows<'_>, rng: &mut ChaCha8Rng) -> Result<()> {
    let ch = &cfg.channel;
    let alpha = cfg.knobs.alpha_factor * ch.noise_radius();
    let m = m_for_reff_ratio(alpha, ch.n, ch.noise, ch.delta)?;
    let ic = sample_ic(alpha, m, ch.n, rng)?;
    let est = awgn_error_mc(&ic, ch.noise, cfg.knobs.mc_trials, rng)?;
    let extra = json!({ "alpha": alpha, "m": m, "errors": est.errors, "trials": est.trials });
    out.push("error_rate", est.rate, "monte-carlo", extra.clone());
    out.push("error_ci_low", est.ci_low, "monte-carlo", extra.clone());
    out.push("error_ci_high", est.ci_high, "monte-carlo", extra);
    Ok(())
}

fn radius_for_volume(n: usize, volume: f64) -> f64 {
    ((volume.ln() - ln_unit_ball_volume(n)) / n as f64).exp()
}

fn haar_siegel(
    cfg: &ExperimentConfig,
    out: &mut TrialRows<'_>,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let (n, k) = (cfg.channel.n, &cfg.knobs);
    let r = radius_for_volume(n, k.volume);
    let est = siegel_mc(n, k.omega, &vec![0.0; n], r, k.samples, rng)?;
    let extra = json!({ "omega": k.omega, "samples": est.samples, "radius": r });
    out.push("siegel_mean", est.mean, "monte-carlo", extra.clone());
    out.push("siegel_std_err", est.std_err, "monte-carlo", extra.clone());
    out.push("volume", est.volume, "analytic", extra);
    Ok(())
}

fn haar_poisson(
    cfg: &ExperimentConfig,
    out: &mut TrialRows<'_>,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let (n, k) = (cfg.channel.n, &cfg.knobs);
    let fit = empirical_poissonianity(n, k.omega, k.volume, k.samples, rng)?;
    let extra = json!({
        "omega": k.omega,
        "samples": k.samples,
        "histogram": fit.histogram,
        "degrees_of_freedom": fit.degrees_of_freedom,
    });
    out.push("tv_distance", fit.tv_distance, "monte-carlo", extra.clone());
    out.push("chi_square", fit.chi_square, "monte-carlo", extra.clone());
    out.push(
        "mean",
        fit.mean,
        "monte-carlo",
        json!({ "std_err": fit.mean_std_err }),
    );
    out.push(
        "second_moment",
        fit.second_moment,
        "monte-carlo",
        json!({ "std_err": fit.second_moment_std_err }),
    );
    out.push("poisson_mean", fit.lambda, "analytic", json!({}));
    out.push(
        "poisson_second_moment",
        fit.lambda + fit.lambda * fit.lambda,
        "analytic",
        json!({}),
    );
    Ok(())
}

fn skip_on_error<T>(what: &str, r: Result<T>) -> Option<T> {
    r.map_err(|e| log::warn!("{what} skipped: {e}")).ok()
}

/// Deterministic calculators; rows are written once, with trial 0.
fn bounds_calc(cfg: &ExperimentConfig, out: &mut TrialRows<'_>) -> Result<()> {
    if out.trial != 0 {
        return Ok(());
    }
    let ch = &cfg.channel;
    let k = &cfg.knobs;
    out.push("capacity", ch.capacity(), "analytic", json!({}));
    out.push(
        "l_threshold",
        ch.capacity() / ch.delta,
        "analytic",
        json!({}),
    );
    if let Some(params) = skip_on_error("nested bound", select_params(ch)) {
        let b = nested_analytic_bound(&params);
        let extra = json!({ "q": params.q, "kappa": params.kappa, "alpha": params.alpha });
        out.push("nested_ell", b.ell as f64, "analytic", extra.clone());
        out.push("nested_log2_l", b.log2_list_size, "analytic", extra);
    }
    if let Some(l) = skip_on_error("constellation bound", ic_analytic_bound(ch.delta)) {
        out.push("ic_analytic_l", l as f64, "analytic", json!({}));
    }
    if let Some(t) = skip_on_error("distribution calculator", conditional_list_dist(ch, k.c1)) {
        out.push(
            "dist_l",
            t.l as f64,
            "analytic",
            json!({ "c1": k.c1, "exponent": t.exponent }),
        );
    }
    if let Some(t) = skip_on_error(
        "moment calculator",
        conditional_list_mmt(ch, k.moment_fraction, k.c1, k.margin),
    ) {
        let extra = json!({ "c": t.c, "c1": k.c1, "margin": k.margin });
        out.push("mmt_a", t.a, "analytic", extra.clone());
        out.push("mmt_ln_l", t.ln_l, "analytic", extra.clone());
        out.push("mmt_exponent", t.exponent, "analytic", extra.clone());
        out.push("mmt_a_required", t.a_required, "analytic", extra);
    }
    if let Some(v) = skip_on_error("cap fraction", ln_cap_fraction(ch.n, ch.power, ch.noise)) {
        out.push("ln_cap_fraction", v, "analytic", json!({}));
    }
    Ok(())
}

fn reduction_check(
    cfg: &ExperimentConfig,
    out: &mut TrialRows<'_>,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let ch = &cfg.channel;
    let factor = cone_cover_count(ch.power, ch.noise)?;
    let points: Vec<Vec<f64>> = (0..cfg.knobs.codewords)
        .map(|_| random_ball_point(ch.n, ch.power_radius(), rng))
        .collect();
    let mode = SearchMode::Exact {
        node_budget: cfg.budget,
    };
    let ball = worst_case_list_size(&points, ch.noise_radius(), mode)?;
    let projected = project_to_sphere(&points, ch.power)?;
    let sphere = worst_case_list_size(projected.points(), ch.noise_radius(), mode)?;
    let violated = sphere.list_size as u64 > factor * ball.list_size as u64;
    out.push("ball_list_size", ball.list_size as f64, "exact", json!({}));
    out.push(
        "projected_list_size",
        sphere.list_size as f64,
        "exact",
        json!({}),
    );
    out.push("cone_factor", factor as f64, "analytic", json!({}));
    out.push(
        "violation",
        f64::from(u8::from(violated)),
        "exact",
        json!({ "codewords": points }),
    );
    Ok(())
}
