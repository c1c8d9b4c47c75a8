//! Seeded Monte Carlo estimation of erasure events.
//!
//! By rotation invariance of the Gaussian matrix, `y = A x₀` for a unit `x₀`
//! is a vector of `m` independent standard normals, so no matrix is ever
//! built here. Trial `i` draws from the stream `(master_seed, i)`; trials are
//! grouped into fixed-size chunks whose partial aggregates are combined in
//! chunk order, which keeps every result independent of the worker count.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::erasure::{extreme_ratios, membership, DistortionBand, ErasureSpec, Normalization, SortedSample};
use crate::error::{Error, Result};
use crate::rng::Stream;

const CHUNK: u64 = 512;

/// Row count, trial count, seed and parallelism of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialPlan {
    pub m: usize,
    pub trials: usize,
    pub master_seed: u64,
    /// Thread count; never affects results.
    pub workers: usize,
}

impl TrialPlan {
    pub fn new(m: usize, trials: usize, master_seed: u64, workers: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("row count must be positive".into()));
        }
        if trials == 0 {
            return Err(Error::InvalidParameter("trial count must be positive".into()));
        }
        if workers == 0 {
            return Err(Error::InvalidParameter("worker count must be positive".into()));
        }
        Ok(TrialPlan {
            m,
            trials,
            master_seed,
            workers,
        })
    }
}

/// Binomial frequency with an exact two-sided 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub successes: u64,
    pub trials: u64,
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub master_seed: u64,
}

impl EstimateResult {
    pub fn new(successes: u64, trials: u64, master_seed: u64) -> Self {
        assert!(trials > 0 && successes <= trials);
        let (ci_low, ci_high) = clopper_pearson(successes, trials, 0.05);
        EstimateResult {
            successes,
            trials,
            point: successes as f64 / trials as f64,
            ci_low,
            ci_high,
            master_seed,
        }
    }

    /// `√(p̂(1-p̂)/n)`.
    pub fn std_err(&self) -> f64 {
        (self.point * (1.0 - self.point) / self.trials as f64).sqrt()
    }

    /// The estimate of the complementary event.
    pub fn complement(&self) -> Self {
        EstimateResult::new(self.trials - self.successes, self.trials, self.master_seed)
    }
}

/// Exact (Clopper-Pearson) two-sided interval at level `1 - alpha`.
pub fn clopper_pearson(successes: u64, trials: u64, alpha: f64) -> (f64, f64) {
    let (x, n) = (successes as f64, trials as f64);
    let low = if successes == 0 {
        0.0
    } else {
        Beta::new(x, n - x + 1.0)
            .expect("positive shape parameters")
            .inverse_cdf(alpha / 2.0)
    };
    let high = if successes == trials {
        1.0
    } else {
        Beta::new(x + 1.0, n - x)
            .expect("positive shape parameters")
            .inverse_cdf(1.0 - alpha / 2.0)
    };
    let point = x / n;
    (low.clamp(0.0, point), high.clamp(point, 1.0))
}

/// Empirical quantiles of the extreme ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileResult {
    pub levels: Vec<f64>,
    pub min_ratio_quantiles: Vec<f64>,
    pub max_ratio_quantiles: Vec<f64>,
    pub trials: usize,
    pub m: usize,
    pub spec: ErasureSpec,
    pub master_seed: u64,
}

/// Draws `m` standard normals from `stream`, squares and sorts them.
pub fn draw_sample(m: usize, stream: &mut Stream) -> SortedSample {
    let mut sq: Vec<f64> = (0..m)
        .map(|_| {
            let z = stream.normal();
            z * z
        })
        .collect();
    sq.sort_unstable_by(|a, b| b.total_cmp(a));
    SortedSample::from_sorted_squares(sq)
}

/// The sample of trial `index` under `plan`.
pub fn trial_sample(plan: &TrialPlan, index: u64) -> SortedSample {
    draw_sample(plan.m, &mut Stream::new(plan.master_seed, index))
}

/// Runs `f` over fixed chunks of trial indices on `plan.workers` threads and
/// returns the per-chunk results in chunk order.
fn map_chunks<T, F>(plan: &TrialPlan, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(Range<u64>) -> T + Sync + Send,
{
    let n = plan.trials as u64;
    let chunks: Vec<Range<u64>> = (0..n.div_ceil(CHUNK))
        .map(|c| c * CHUNK..((c + 1) * CHUNK).min(n))
        .collect();
    if plan.workers == 1 {
        return Ok(chunks.into_iter().map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    Ok(pool.install(|| chunks.into_par_iter().map(f).collect()))
}

/// Counts, for each of `events` indicators, the trials where `f` sets it.
pub fn count_events<F>(plan: &TrialPlan, events: usize, f: F) -> Result<Vec<u64>>
where
    F: Fn(&SortedSample, &mut [bool]) + Sync + Send,
{
    let partial = map_chunks(plan, |range| {
        let mut counts = vec![0u64; events];
        let mut hit = vec![false; events];
        for i in range {
            let s = trial_sample(plan, i);
            hit.iter_mut().for_each(|h| *h = false);
            f(&s, &mut hit);
            for (c, &h) in counts.iter_mut().zip(&hit) {
                *c += h as u64;
            }
        }
        counts
    })?;
    let mut total = vec![0u64; events];
    for counts in partial {
        for (t, c) in total.iter_mut().zip(counts) {
            *t += c;
        }
    }
    Ok(total)
}

/// Collects one value per trial, in trial order.
pub fn collect_per_trial<T, F>(plan: &TrialPlan, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&SortedSample) -> T + Sync + Send,
{
    let partial = map_chunks(plan, |range| {
        range.map(|i| f(&trial_sample(plan, i))).collect::<Vec<T>>()
    })?;
    Ok(partial.into_iter().flatten().collect())
}

/// One membership event: every erasure of at most `⌊βm⌋` rows keeps the
/// normalized norm inside `band`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MembershipQuery {
    pub band: DistortionBand,
    pub beta: f64,
    pub mode: Normalization,
}

/// Frequencies of several membership events over the same trials.
///
/// Reusing the samples couples the estimates: within one call the frequency
/// is exactly nonincreasing in `β` and nondecreasing in the band.
pub fn estimate_membership_many(
    plan: &TrialPlan,
    queries: &[MembershipQuery],
) -> Result<Vec<EstimateResult>> {
    let specs = queries
        .iter()
        .map(|q| ErasureSpec::new(q.beta, plan.m, q.mode))
        .collect::<Result<Vec<_>>>()?;
    let counts = count_events(plan, queries.len(), |s, hit| {
        for ((q, spec), h) in queries.iter().zip(&specs).zip(hit.iter_mut()) {
            *h = membership(s, &q.band, spec).expect("validated spec");
        }
    })?;
    Ok(counts
        .into_iter()
        .map(|c| EstimateResult::new(c, plan.trials as u64, plan.master_seed))
        .collect())
}

pub fn estimate_membership(
    band: DistortionBand,
    beta: f64,
    mode: Normalization,
    plan: &TrialPlan,
) -> Result<EstimateResult> {
    let q = MembershipQuery { band, beta, mode };
    Ok(estimate_membership_many(plan, &[q])?[0])
}

/// Type-1 empirical quantile of a sorted vector.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let idx = ((q * n as f64).ceil() as usize).clamp(1, n) - 1;
    sorted[idx]
}

pub fn estimate_quantiles(
    beta: f64,
    mode: Normalization,
    plan: &TrialPlan,
    levels: &[f64],
) -> Result<QuantileResult> {
    if let Some(&q) = levels.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
        return Err(Error::InvalidParameter(format!("quantile level must lie in (0, 1), got {q}")));
    }
    let spec = ErasureSpec::new(beta, plan.m, mode)?;
    let pairs = collect_per_trial(plan, |s| {
        let ex = extreme_ratios(s, &spec).expect("validated spec");
        (ex.min_ratio, ex.max_ratio)
    })?;
    let (mut mins, mut maxs): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    mins.sort_unstable_by(f64::total_cmp);
    maxs.sort_unstable_by(f64::total_cmp);
    Ok(QuantileResult {
        levels: levels.to_vec(),
        min_ratio_quantiles: levels.iter().map(|&q| quantile_sorted(&mins, q)).collect(),
        max_ratio_quantiles: levels.iter().map(|&q| quantile_sorted(&maxs, q)).collect(),
        trials: plan.trials,
        m: plan.m,
        spec,
        master_seed: plan.master_seed,
    })
}

/// Mean and standard error of a per-trial statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_err: f64,
}

fn mean_estimate(sum: f64, sum_sq: f64, n: usize) -> MeanEstimate {
    let nf = n as f64;
    let mean = sum / nf;
    let var = if n > 1 {
        ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    MeanEstimate {
        mean,
        std_err: (var / nf).sqrt(),
    }
}

/// Per-rank means of the sorted magnitudes `|y|_(1) ≥ … ≥ |y|_(m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderStatMeans {
    pub m: usize,
    pub trials: usize,
    pub means: Vec<f64>,
    pub std_errs: Vec<f64>,
}

pub fn empirical_order_stat_means(plan: &TrialPlan) -> Result<OrderStatMeans> {
    let m = plan.m;
    let partial = map_chunks(plan, |range| {
        let mut sum = vec![0.0; m];
        let mut sum_sq = vec![0.0; m];
        for i in range {
            let s = trial_sample(plan, i);
            for (j, &v) in s.sq_desc().iter().enumerate() {
                sum[j] += v.sqrt();
                sum_sq[j] += v;
            }
        }
        (sum, sum_sq)
    })?;
    let mut sum = vec![0.0; m];
    let mut sum_sq = vec![0.0; m];
    for (s, q) in partial {
        for j in 0..m {
            sum[j] += s[j];
            sum_sq[j] += q[j];
        }
    }
    let est: Vec<MeanEstimate> = (0..m)
        .map(|j| mean_estimate(sum[j], sum_sq[j], plan.trials))
        .collect();
    Ok(OrderStatMeans {
        m,
        trials: plan.trials,
        means: est.iter().map(|e| e.mean).collect(),
        std_errs: est.iter().map(|e| e.std_err).collect(),
    })
}

/// Which ranks a partial sum runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartialSide {
    /// The `k` largest squared magnitudes.
    TopK,
    /// Everything after the `k` largest.
    TailRest,
}

/// Root-mean-square over the selected ranks of one sample.
pub fn partial_rms(s: &SortedSample, k: usize, side: PartialSide) -> f64 {
    let m = s.m();
    match side {
        PartialSide::TopK => (s.prefix()[k] / k as f64).sqrt(),
        PartialSide::TailRest => (s.tail_sum(k) / (m - k) as f64).sqrt(),
    }
}

fn check_partial(m: usize, k: usize, side: PartialSide) -> Result<usize> {
    let size = match side {
        PartialSide::TopK if k >= 1 && k <= m => k,
        PartialSide::TailRest if k < m => m - k,
        _ => {
            return Err(Error::InvalidParameter(format!(
                "partial size {k} out of range for m = {m} on side {side:?}"
            )))
        }
    };
    Ok(size)
}

/// `Ê √((1/|S|) Σ_{j∈S} y_(j)²)` for each `k` in `ks`, over the same trials.
pub fn empirical_partial_rms(
    plan: &TrialPlan,
    ks: &[usize],
    side: PartialSide,
) -> Result<Vec<MeanEstimate>> {
    for &k in ks {
        check_partial(plan.m, k, side)?;
    }
    let n = ks.len();
    let partial = map_chunks(plan, |range| {
        let mut sum = vec![0.0; n];
        let mut sum_sq = vec![0.0; n];
        for i in range {
            let s = trial_sample(plan, i);
            for (idx, &k) in ks.iter().enumerate() {
                let r = partial_rms(&s, k, side);
                sum[idx] += r;
                sum_sq[idx] += r * r;
            }
        }
        (sum, sum_sq)
    })?;
    let mut sum = vec![0.0; n];
    let mut sum_sq = vec![0.0; n];
    for (s, q) in partial {
        for i in 0..n {
            sum[i] += s[i];
            sum_sq[i] += q[i];
        }
    }
    Ok((0..n)
        .map(|i| mean_estimate(sum[i], sum_sq[i], plan.trials))
        .collect())
}

/// Frequency of a one-sided deviation of a partial root-mean-square from its
/// empirical mean, next to the Lipschitz bound `e^{-δ²|S|/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationResult {
    pub side: PartialSide,
    pub set_size: usize,
    pub delta: f64,
    pub mean: f64,
    pub frequency: EstimateResult,
    pub bound: f64,
}

/// `TopK` counts trials where the top-`⌊k_frac m⌋` rms exceeds `Ê + δ`;
/// `TailRest` counts trials where the rms of the remaining rows falls below
/// `Ê - δ`. `Ê` is the mean over the same trials. With `TailRest`,
/// `k_frac = 0` selects the full row set.
pub fn concentration_check(
    k_frac: f64,
    side: PartialSide,
    delta: f64,
    plan: &TrialPlan,
) -> Result<ConcentrationResult> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    let min_frac = if side == PartialSide::TailRest { 0.0 } else { f64::MIN_POSITIVE };
    if !(k_frac >= min_frac && k_frac < 1.0) {
        return Err(Error::InvalidParameter(format!("k_frac must lie in (0, 1), got {k_frac}")));
    }
    let k = (k_frac * plan.m as f64).floor() as usize;
    let size = check_partial(plan.m, k, side)?;
    let values = collect_per_trial(plan, |s| partial_rms(s, k, side))?;
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let hits = values
        .iter()
        .filter(|&&r| match side {
            PartialSide::TopK => r > mean + delta,
            PartialSide::TailRest => r < mean - delta,
        })
        .count() as u64;
    Ok(ConcentrationResult {
        side,
        set_size: size,
        delta,
        mean,
        frequency: EstimateResult::new(hits, plan.trials as u64, plan.master_seed),
        bound: (-delta * delta * size as f64 / 2.0).exp(),
    })
}

/// One-sided exceedance frequencies of `‖y‖²/m` at distortion `ε`: the
/// upper event `> 1 + ε` and the lower event `< 1 - ε`, for each `ε`.
pub fn chi2_exceedance(plan: &TrialPlan, eps: &[f64]) -> Result<Vec<(EstimateResult, EstimateResult)>> {
    let m = plan.m as f64;
    let counts = count_events(plan, 2 * eps.len(), |s, hit| {
        let r = s.total() / m;
        for (i, &e) in eps.iter().enumerate() {
            hit[2 * i] = r > 1.0 + e;
            hit[2 * i + 1] = r < 1.0 - e;
        }
    })?;
    let n = plan.trials as u64;
    Ok(counts
        .chunks(2)
        .map(|c| {
            (
                EstimateResult::new(c[0], n, plan.master_seed),
                EstimateResult::new(c[1], n, plan.master_seed),
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::ChiSquared;

    fn plan(m: usize, trials: usize, seed: u64) -> TrialPlan {
        TrialPlan::new(m, trials, seed, 1).unwrap()
    }

    #[test]
    fn sample_moments() {
        let p = plan(50, 100_000, 11);
        let v = collect_per_trial(&p, |s| s.total() / 50.0).unwrap();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
        // Var(χ²_m / m) = 2/m; sample variance has relative sd ≈ √(2/n)·√(1+6/m)
        assert!((var - 0.04).abs() < 0.04 * 0.03, "{var}");
    }

    #[test]
    fn clopper_pearson_edges() {
        let (lo, hi) = clopper_pearson(0, 10, 0.05);
        assert_eq!(lo, 0.0);
        assert!((hi - (1.0 - 0.025f64.powf(0.1))).abs() < 1e-9);
        let (lo, hi) = clopper_pearson(10, 10, 0.05);
        assert!((lo - 0.025f64.powf(0.1)).abs() < 1e-9);
        assert_eq!(hi, 1.0);
        let (lo, hi) = clopper_pearson(50, 100, 0.05);
        assert!((lo - 0.3983).abs() < 1e-3 && (hi - 0.6017).abs() < 1e-3);
        let (lo, hi) = clopper_pearson(99_000, 100_000, 0.05);
        assert!(lo < 0.99 && hi > 0.99 && hi - lo < 0.002);
    }

    #[test]
    fn vacuous_and_null_events() {
        let p = plan(30, 2000, 5);
        let r = estimate_membership(DistortionBand::unbounded(), 0.4, Normalization::PerSurvivor, &p).unwrap();
        assert_eq!(r.point, 1.0);
        let point = DistortionBand::new(1.0, 1.0).unwrap();
        let r = estimate_membership(point, 0.0, Normalization::Uniform, &p).unwrap();
        assert_eq!(r.point, 0.0);
        assert!(r.ci_low <= r.point && r.point <= r.ci_high);
    }

    #[test]
    fn beta_zero_matches_chi_square() {
        let p = plan(100, 20_000, 3);
        let r = estimate_membership(DistortionBand::symmetric(0.3).unwrap(), 0.0, Normalization::PerSurvivor, &p)
            .unwrap();
        let chi = ChiSquared::new(100.0).unwrap();
        let exact = chi.cdf(130.0) - chi.cdf(70.0);
        assert!((exact - 0.966).abs() < 2e-3);
        assert!(r.ci_low - 1e-3 <= exact && exact <= r.ci_high + 1e-3, "{r:?} vs {exact}");
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let q = [
            MembershipQuery {
                band: DistortionBand::symmetric(0.3).unwrap(),
                beta: 0.01,
                mode: Normalization::PerSurvivor,
            },
            MembershipQuery {
                band: DistortionBand::at_least(0.5).unwrap(),
                beta: 0.2,
                mode: Normalization::Uniform,
            },
        ];
        let a = estimate_membership_many(&TrialPlan::new(64, 3000, 9, 1).unwrap(), &q).unwrap();
        let b = estimate_membership_many(&TrialPlan::new(64, 3000, 9, 4).unwrap(), &q).unwrap();
        assert_eq!(a, b);
        let qa = estimate_quantiles(0.1, Normalization::PerSurvivor, &TrialPlan::new(64, 1500, 2, 1).unwrap(), &[0.1, 0.9]).unwrap();
        let qb = estimate_quantiles(0.1, Normalization::PerSurvivor, &TrialPlan::new(64, 1500, 2, 3).unwrap(), &[0.1, 0.9]).unwrap();
        assert_eq!(qa, qb);
    }

    #[test]
    fn coupled_estimates_are_monotone() {
        let p = plan(80, 2000, 17);
        let betas = [0.0, 0.05, 0.1, 0.2, 0.4];
        let queries: Vec<_> = betas
            .iter()
            .map(|&beta| MembershipQuery {
                band: DistortionBand::symmetric(0.4).unwrap(),
                beta,
                mode: Normalization::PerSurvivor,
            })
            .collect();
        let r = estimate_membership_many(&p, &queries).unwrap();
        for w in r.windows(2) {
            assert!(w[1].successes <= w[0].successes);
        }
        let queries: Vec<_> = [0.1, 0.2, 0.3, 0.5]
            .iter()
            .map(|&e| MembershipQuery {
                band: DistortionBand::symmetric(e).unwrap(),
                beta: 0.05,
                mode: Normalization::Uniform,
            })
            .collect();
        let r = estimate_membership_many(&p, &queries).unwrap();
        for w in r.windows(2) {
            assert!(w[1].successes >= w[0].successes);
        }
    }

    #[test]
    fn quantiles_nondecreasing_and_collapse_at_zero() {
        let p = plan(40, 1000, 23);
        let levels = [0.01, 0.1, 0.5, 0.9, 0.99];
        let q = estimate_quantiles(0.0, Normalization::PerSurvivor, &p, &levels).unwrap();
        assert_eq!(q.min_ratio_quantiles, q.max_ratio_quantiles);
        let q = estimate_quantiles(0.25, Normalization::PerSurvivor, &p, &levels).unwrap();
        for w in q.min_ratio_quantiles.windows(2) {
            assert!(w[0] <= w[1]);
        }
        for (a, b) in q.min_ratio_quantiles.iter().zip(&q.max_ratio_quantiles) {
            assert!(a <= b);
        }
        assert!(estimate_quantiles(0.1, Normalization::Uniform, &p, &[1.0]).is_err());
    }

    #[test]
    fn order_stat_means() {
        let r = empirical_order_stat_means(&plan(1, 100_000, 4)).unwrap();
        let target = (2.0 / std::f64::consts::PI).sqrt();
        assert!((r.means[0] - target).abs() < 4.0 * r.std_errs[0], "{:?}", r.means);
        let r = empirical_order_stat_means(&plan(5, 20_000, 4)).unwrap();
        assert!(r.means[0] > 1.0444 && r.means[0] < 3.270);
        for w in r.means.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn concentration_full_set_and_large_delta() {
        let p = plan(200, 5000, 8);
        let c = concentration_check(0.25, PartialSide::TopK, 0.4, &p).unwrap();
        assert_eq!(c.set_size, 50);
        assert!(c.frequency.point <= c.bound + 3.0 * c.frequency.std_err());
        let c = concentration_check(0.25, PartialSide::TopK, 50.0, &p).unwrap();
        assert_eq!(c.frequency.successes, 0);
        let c = concentration_check(0.0, PartialSide::TailRest, 0.1, &p).unwrap();
        assert_eq!(c.set_size, 200);
        // √(χ²_200/200) has mean ≈ 1 and sd ≈ 0.05; falling 0.1 below is ≈ 2 sd
        assert!(c.frequency.point < 0.05);
        assert!(concentration_check(0.0, PartialSide::TopK, 0.1, &p).is_err());
    }
}
