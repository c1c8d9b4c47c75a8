//! One function per subcommand. Each returns its records, a pass flag that
//! decides the exit code, and a JSON block of details.

use erasure_robust::bounds::{
    beta_lower_bounds, beta_upper_bounds, calibrate_cg, chi2_tail_bound, jl_min_rows,
    jl_min_rows_checked, jl_hypothesis, optimal_order_bounds, order_stat_expectation_bounds,
    partial_sum_expectation_bounds, theta_omega_bounds, BoundReport,
};
use erasure_robust::constants::ConstantsFile;
use erasure_robust::erasure::{brute_force_extremes, extreme_ratios, sort_sample};
use erasure_robust::io::{load_or_draw, read_dataset};
use erasure_robust::jl::{audit_pairwise, draw_projection, erasure_budget_jl_unchecked};
use erasure_robust::montecarlo::{
    chi2_exceedance, empirical_order_stat_means, empirical_partial_rms, estimate_membership_many,
    estimate_quantiles, MembershipQuery, PartialSide,
};
use erasure_robust::rip::{bernoulli_counterexample, build_net, certify_strong_rip, sample_net, RipLevels};
use erasure_robust::rng::{derive_seed, Stream};
use erasure_robust::{
    Dataset, DistortionBand, Error, ErasureSpec, GaussianConstants, Normalization, ProjectionSpec,
    RipOutcome, TrialPlan,
};
use serde_json::{json, Value};

use crate::config::{
    BernoulliConfig, BoundsConfig, CalibrateConfig, EstimateConfig, JlConfig, LevelSource, NetKind,
    OracleConfig, OrderStatsConfig, QuantilesConfig, RipConfig, TailcheckConfig,
};
use crate::output::Record;

/// Failure that is not an audit outcome.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(msg) => CliError::Io(msg),
            other => CliError::Config(other.to_string()),
        }
    }
}

pub type CmdResult = Result<Outcome, CliError>;

pub struct Outcome {
    pub records: Vec<Record>,
    pub passed: bool,
    pub details: Value,
}

impl Outcome {
    fn ok(records: Vec<Record>) -> Self {
        Outcome {
            records,
            passed: true,
            details: Value::Null,
        }
    }
}

pub struct Ctx {
    pub seed: u64,
    pub workers: usize,
    pub gc: GaussianConstants,
}

fn report_records(input: &str, report: &BoundReport, out: &mut Vec<Record>) {
    for (id, e) in &report.entries {
        out.push(Record::new(input, id.as_str(), e.value).formula(id.as_str(), e.valid));
    }
}

pub fn bounds(ctx: &Ctx, cfg: &BoundsConfig) -> CmdResult {
    let mut out = Vec::new();
    let gc = &ctx.gc;
    out.push(Record::new("", "c_g", gc.c_g));
    out.push(Record::new("", "eps_g", gc.eps_g));
    out.push(Record::new("", "beta_g", gc.beta_g));
    for &eps in &cfg.eps {
        let input = format!("eps={eps};alpha={}", cfg.alpha);
        report_records(&input, &beta_lower_bounds(eps, cfg.alpha)?, &mut out);
        report_records(&input, &beta_upper_bounds(eps, gc)?, &mut out);
        report_records(&input, &optimal_order_bounds(eps, cfg.alpha, gc)?, &mut out);
        if let Some(m) = cfg.m {
            let t = chi2_tail_bound(eps, m)?;
            out.push(
                Record::new(format!("eps={eps};m={m}"), "chi2_tail_one_sided", t.one_sided)
                    .formula("chi2_tail", true),
            );
        }
        for &n in &cfg.n_points {
            let rows = jl_min_rows(n, eps, cfg.alpha)?;
            let ok = jl_hypothesis(eps, cfg.alpha).is_ok();
            out.push(
                Record::new(format!("{input};n_points={n}"), "pairwise_min_rows", rows as f64)
                    .formula("pairwise_min_rows", ok),
            );
        }
    }
    let mut sandwich_ok = true;
    for &beta in &cfg.beta {
        let input = match cfg.m {
            Some(m) => format!("beta={beta};alpha={};m={m}", cfg.alpha),
            None => format!("beta={beta};alpha={}", cfg.alpha),
        };
        let m = cfg.m.filter(|&m| (m as f64) * (1.0 - beta) >= 1.0);
        let r = theta_omega_bounds(beta, cfg.alpha, m, gc)?;
        for (lo, hi) in [
            ("theta_lower_limit", "theta_upper_limit"),
            ("omega_lower_limit", "omega_upper_limit"),
            ("theta_uniform_lower_limit", "theta_uniform_upper_limit"),
            ("omega_uniform_lower_limit", "omega_uniform_upper_limit"),
        ] {
            sandwich_ok &= r.value(lo) <= r.value(hi);
        }
        out.push(Record::new(&input, "h_beta", r.h_beta.unwrap_or(f64::NAN)));
        report_records(&input, &r, &mut out);
    }
    Ok(Outcome {
        records: out,
        passed: sandwich_ok,
        details: Value::Null,
    })
}

pub fn estimate(ctx: &Ctx, cfg: &EstimateConfig) -> CmdResult {
    let plan = TrialPlan::new(cfg.m, cfg.trials, ctx.seed, ctx.workers)?;
    let mut queries = Vec::new();
    let mut inputs = Vec::new();
    for &eps in &cfg.eps {
        for &beta in &cfg.beta {
            queries.push(MembershipQuery {
                band: DistortionBand::symmetric(eps)?,
                beta,
                mode: cfg.mode,
            });
            inputs.push(format!("m={};eps={eps};beta={beta};mode={}", cfg.m, cfg.mode));
        }
    }
    let res = estimate_membership_many(&plan, &queries)?;
    Ok(Outcome::ok(
        inputs
            .into_iter()
            .zip(res)
            .map(|(input, r)| Record::new(input, "membership", r.point).ci(r.ci_low, r.ci_high))
            .collect(),
    ))
}

pub fn quantiles(ctx: &Ctx, cfg: &QuantilesConfig) -> CmdResult {
    let plan = TrialPlan::new(cfg.m, cfg.trials, ctx.seed, ctx.workers)?;
    let mut out = Vec::new();
    let mut passed = true;
    for &beta in &cfg.beta {
        let q = estimate_quantiles(beta, cfg.mode, &plan, &cfg.levels)?;
        let levels = match (cfg.alpha, cfg.mode) {
            (Some(alpha), Normalization::PerSurvivor) if beta > 0.0 => {
                Some(theta_omega_bounds(beta, alpha, None, &ctx.gc)?)
            }
            _ => None,
        };
        for (i, &level) in cfg.levels.iter().enumerate() {
            let input = format!("m={};beta={beta};mode={};level={level}", cfg.m, cfg.mode);
            let mut lo = Record::new(&input, "min_ratio_quantile", q.min_ratio_quantiles[i]);
            let mut hi = Record::new(&input, "max_ratio_quantile", q.max_ratio_quantiles[i]);
            if let Some(r) = &levels {
                let t = r.get("theta_lower_alpha").expect("reported");
                let w = r.get("omega_upper_alpha").expect("reported");
                lo = lo.bound(t.value, "theta_lower_alpha");
                lo.valid = Some(t.valid);
                hi = hi.bound(w.value, "omega_upper_alpha");
                hi.valid = Some(w.valid);
            }
            out.push(lo);
            out.push(hi);
        }
        passed &= q.min_ratio_quantiles.windows(2).all(|w| w[0] <= w[1]);
    }
    Ok(Outcome {
        records: out,
        passed,
        details: Value::Null,
    })
}

pub fn tailcheck(ctx: &Ctx, cfg: &TailcheckConfig) -> CmdResult {
    let mut out = Vec::new();
    let mut passed = true;
    for &m in &cfg.m {
        let plan = TrialPlan::new(m, cfg.trials, derive_seed(ctx.seed, m as u64), ctx.workers)?;
        let res = chi2_exceedance(&plan, &cfg.eps)?;
        for (&eps, (up, down)) in cfg.eps.iter().zip(res) {
            let bound = chi2_tail_bound(eps, m)?.one_sided;
            let input = format!("m={m};eps={eps}");
            for (name, r) in [("exceed_upper", up), ("exceed_lower", down)] {
                let ok = r.point <= bound + 3.0 * r.std_err();
                passed &= ok;
                let mut rec = Record::new(&input, name, r.point)
                    .ci(r.ci_low, r.ci_high)
                    .bound(bound, "chi2_tail");
                rec.valid = Some(ok);
                out.push(rec);
            }
        }
    }
    Ok(Outcome {
        records: out,
        passed,
        details: Value::Null,
    })
}

pub fn calibrate(ctx: &Ctx, cfg: &CalibrateConfig) -> CmdResult {
    let (gc, terms) = calibrate_cg(&cfg.m_grid, cfg.trials, ctx.seed, ctx.workers)?;
    let arg = terms
        .iter()
        .min_by(|a, b| a.shrunk_ratio.total_cmp(&b.shrunk_ratio))
        .expect("nonempty grid");
    let input = format!("m={};j={}", arg.m, arg.j);
    let out = vec![
        Record::new(&input, "c_g", gc.c_g),
        Record::new("", "eps_g", gc.eps_g),
        Record::new("", "beta_g", gc.beta_g),
    ];
    if let Some(path) = &cfg.constants_out {
        let file = ConstantsFile {
            c_g: gc.c_g,
            seed: ctx.seed,
            m_grid: cfg.m_grid.clone(),
            trials: cfg.trials,
            date: cfg.date.clone(),
        };
        std::fs::write(path, file.to_toml()?).map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(Outcome {
        records: out,
        passed: true,
        details: json!({ "argmin": { "m": arg.m, "j": arg.j, "mean": arg.mean, "std_err": arg.std_err } }),
    })
}

pub fn oracle(ctx: &Ctx, cfg: &OracleConfig) -> CmdResult {
    if cfg.m_min < 1 || cfg.m_max < cfg.m_min || cfg.m_max > erasure_robust::erasure::ORACLE_MAX_ROWS {
        return Err(CliError::Config(format!(
            "oracle rows must satisfy 1 <= m_min <= m_max <= {}",
            erasure_robust::erasure::ORACLE_MAX_ROWS
        )));
    }
    let mut out = Vec::new();
    let mut mismatches = 0usize;
    for m in cfg.m_min..=cfg.m_max {
        for mode in [Normalization::PerSurvivor, Normalization::Uniform] {
            let mut worst: f64 = 0.0;
            let mut bad = 0usize;
            for k in 0..m {
                let spec = ErasureSpec::with_budget(k, m, mode)?;
                for sample in 0..cfg.samples {
                    let idx = ((m * 64 + k) * 1_000_000 + sample) as u64;
                    let mut st = Stream::new(ctx.seed, idx);
                    let y: Vec<f64> = (0..m).map(|_| st.normal()).collect();
                    let fast = extreme_ratios(&sort_sample(&y)?, &spec)?;
                    let slow = brute_force_extremes(&y, &spec)?;
                    let e1 = (fast.min_ratio - slow.min_ratio).abs() / slow.min_ratio.abs().max(f64::MIN_POSITIVE);
                    let e2 = (fast.max_ratio - slow.max_ratio).abs() / slow.max_ratio.abs().max(f64::MIN_POSITIVE);
                    let e = e1.max(e2);
                    worst = worst.max(e);
                    bad += (e > cfg.rel_tol) as usize;
                }
            }
            mismatches += bad;
            let input = format!("m={m};mode={mode};samples={}", cfg.samples);
            out.push(Record::new(&input, "max_rel_error", worst).bound(cfg.rel_tol, "rel_tol"));
            out.push(Record::new(&input, "mismatches", bad as f64));
        }
    }
    Ok(Outcome {
        records: out,
        passed: mismatches == 0,
        details: json!({ "mismatches": mismatches }),
    })
}

fn synthetic_dataset(seed: u64, n_points: usize, dim: usize) -> Result<Dataset, CliError> {
    let rows: Vec<Vec<f64>> = (0..n_points)
        .map(|i| {
            let mut st = Stream::new(derive_seed(seed, 0xDA7A), i as u64);
            (0..dim).map(|_| st.normal()).collect()
        })
        .collect();
    Ok(Dataset::from_rows(&rows)?)
}

pub fn jl(ctx: &Ctx, cfg: &JlConfig) -> CmdResult {
    let data = match &cfg.dataset {
        Some(p) => read_dataset(p)?,
        None => synthetic_dataset(ctx.seed, cfg.n_points, cfg.dim)?,
    };
    if data.len() < 2 {
        return Err(CliError::Config("the dataset needs at least two points".into()));
    }
    let hypothesis = jl_hypothesis(cfg.eps, cfg.alpha);
    let required = if cfg.strict {
        jl_min_rows_checked(data.len(), cfg.eps, cfg.alpha)?
    } else {
        jl_min_rows(data.len(), cfg.eps, cfg.alpha)?
    };
    let m = cfg.m.unwrap_or(required);
    let budget = match cfg.budget {
        Some(b) => b,
        None => erasure_budget_jl_unchecked(cfg.eps, cfg.alpha, m)?,
    };
    let spec = ProjectionSpec::new(m, data.dim(), derive_seed(ctx.seed, 0x4A4C))?;
    let a = match &cfg.matrix_cache {
        Some(p) => load_or_draw(Some(p), &spec)?,
        None => draw_projection(&spec),
    };
    let band = DistortionBand::symmetric(cfg.eps)?;
    let report = audit_pairwise(&data, &a, band, budget, cfg.mode)?;
    let input = format!(
        "n_points={};dim={};eps={};alpha={};mode={}",
        data.len(),
        data.dim(),
        cfg.eps,
        cfg.alpha,
        cfg.mode
    );
    let mut out = vec![
        Record::new(&input, "required_rows", required as f64).formula("pairwise_min_rows", hypothesis.is_ok()),
        Record::new(&input, "rows", m as f64),
        Record::new(&input, "budget", budget as f64).formula("pairwise_erasure_budget", hypothesis.is_ok()),
        Record::new(&input, "pairs_audited", report.pairs_audited as f64),
        Record::new(&input, "pass", report.pass as u8 as f64),
        Record::new(&input, "min_slack", report.min_slack),
    ];
    if let Some(w) = &report.worst_min {
        out.push(Record::new(format!("{input};pair={}-{}", w.i, w.j), "worst_min_ratio", w.witness.ratio).bound(band.lo, "band_lo"));
    }
    if let Some(w) = &report.worst_max {
        out.push(Record::new(format!("{input};pair={}-{}", w.i, w.j), "worst_max_ratio", w.witness.ratio).bound(band.hi, "band_hi"));
    }
    Ok(Outcome {
        records: out,
        passed: report.pass,
        details: json!({
            "hypothesis": hypothesis.err().map(|e| e.to_string()),
            "report": report,
        }),
    })
}

pub fn rip(ctx: &Ctx, cfg: &RipConfig) -> CmdResult {
    let levels = match cfg.levels {
        LevelSource::Symmetric => RipLevels::Symmetric,
        LevelSource::Bounds => {
            let r = theta_omega_bounds(cfg.beta, cfg.alpha, Some(cfg.m), &ctx.gc)?;
            RipLevels::levels(r.value("jl_theta"), r.value("jl_omega"))?
        }
        LevelSource::Explicit => match (cfg.theta, cfg.omega) {
            (Some(t), Some(w)) => RipLevels::levels(t, w)?,
            _ => return Err(CliError::Config("explicit levels need theta and omega".into())),
        },
    };
    let net = match cfg.net {
        NetKind::Deterministic => build_net(cfg.s, cfg.eps)?,
        NetKind::Sampled => sample_net(cfg.s, cfg.eps, cfg.net_points, cfg.net_probes, derive_seed(ctx.seed, 0x4E45))?,
    };
    if cfg.draws == 0 {
        return Err(CliError::Config("draws must be positive".into()));
    }
    let mut out = Vec::new();
    let mut reports = Vec::new();
    let mut passes = 0usize;
    for d in 0..cfg.draws {
        let spec = ProjectionSpec::new(cfg.m, cfg.n, derive_seed(ctx.seed, d as u64))?;
        let a = draw_projection(&spec);
        let r = certify_strong_rip(&a, cfg.s, cfg.beta, levels, cfg.eps, &net)?;
        let input = format!("n={};s={};m={};beta={};eps={};draw={d}", cfg.n, cfg.s, cfg.m, cfg.beta, cfg.eps);
        passes += (r.outcome == RipOutcome::CertifiedPass) as usize;
        out.push(Record::new(&input, "certified_lo", r.certified_lo).bound(r.outer.lo, "outer_band_lo"));
        out.push(Record::new(&input, "certified_hi", r.certified_hi).bound(r.outer.hi, "outer_band_hi"));
        out.push(Record::new(&input, "net_min", r.net_min).bound(r.inner.lo, "inner_band_lo"));
        out.push(Record::new(&input, "net_max", r.net_max).bound(r.inner.hi, "inner_band_hi"));
        let mut rec = Record::new(&input, "outcome", (r.outcome == RipOutcome::CertifiedPass) as u8 as f64);
        rec.formula_id = Some(r.outcome.to_string());
        out.push(rec);
        reports.push(json!({
            "draw": d,
            "outcome": r.outcome,
            "budget": r.budget,
            "lambda_bound": r.lambda_bound,
            "net_within_inner": r.net_within_inner,
            "level_flag": r.level_flag,
            "witness": r.witness,
        }));
    }
    out.push(Record::new("", "certified_pass_fraction", passes as f64 / cfg.draws as f64));
    Ok(Outcome {
        records: out,
        passed: passes == cfg.draws,
        details: json!({
            "levels": levels,
            "net_size": net.len(),
            "net_radius": net.certified_radius,
            "heuristic_net": net.heuristic,
            "draws": reports,
        }),
    })
}

pub fn bernoulli(ctx: &Ctx, cfg: &BernoulliConfig) -> CmdResult {
    let mut out = Vec::new();
    let mut passed = true;
    for &m in &cfg.m {
        for i in 0..cfg.seeds {
            let seed = derive_seed(ctx.seed, i as u64);
            let d = bernoulli_counterexample(m, seed)?;
            passed &= d.zeros_v1 + d.zeros_v2 == m && d.erased.len() <= m / 2 && d.residual == 0.0;
            let input = format!("m={m};seed={seed};vanishing={}", d.vanishing_vector);
            out.push(Record::new(&input, "zeros_v1", d.zeros_v1 as f64));
            out.push(Record::new(&input, "zeros_v2", d.zeros_v2 as f64));
            out.push(Record::new(&input, "erased", d.erased.len() as f64).bound(m as f64 / 2.0, "half_rows"));
            out.push(Record::new(&input, "residual", d.residual));
        }
    }
    Ok(Outcome {
        records: out,
        passed,
        details: Value::Null,
    })
}

pub fn orderstats(ctx: &Ctx, cfg: &OrderStatsConfig) -> CmdResult {
    let plan = TrialPlan::new(cfg.m, cfg.trials, ctx.seed, ctx.workers)?;
    let means = empirical_order_stat_means(&plan)?;
    let tol = cfg.tolerance_se;
    let mut out = Vec::new();
    let mut passed = true;
    for j in 1..=cfg.m {
        let b = order_stat_expectation_bounds(cfg.m, j, 1.0)?;
        let (mean, se) = (means.means[j - 1], means.std_errs[j - 1]);
        let lower = b.lower.expect("p = 1 has a lower bound");
        passed &= mean >= lower - tol * se && mean <= b.upper + tol * se;
        let input = format!("m={};j={j}", cfg.m);
        let (lo, hi) = (mean - 1.96 * se, mean + 1.96 * se);
        out.push(Record::new(&input, "abs_order_stat_mean", mean).ci(lo, hi).bound(lower, "order_stat_lower"));
        out.push(Record::new(&input, "abs_order_stat_mean", mean).ci(lo, hi).bound(b.upper, "order_stat_upper"));
    }
    let rms = empirical_partial_rms(&plan, &cfg.k, PartialSide::TailRest)?;
    for (&k, e) in cfg.k.iter().zip(&rms) {
        let b = partial_sum_expectation_bounds(cfg.m, k)?;
        let (lower, upper) = match (b.tail_lower, b.tail_upper) {
            (Some(l), Some(u)) => (l, u),
            _ => return Err(CliError::Config(format!("tail size k = {k} needs k < m"))),
        };
        passed &= e.mean >= lower - tol * e.std_err && e.mean <= upper + tol * e.std_err;
        let input = format!("m={};k={k}", cfg.m);
        let (lo, hi) = (e.mean - 1.96 * e.std_err, e.mean + 1.96 * e.std_err);
        out.push(Record::new(&input, "tail_rms_mean", e.mean).ci(lo, hi).bound(lower, "tail_rms_lower"));
        out.push(Record::new(&input, "tail_rms_mean", e.mean).ci(lo, hi).bound(upper, "tail_rms_upper"));
    }
    Ok(Outcome {
        records: out,
        passed,
        details: Value::Null,
    })
}
