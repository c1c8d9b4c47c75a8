//! Exact worst-case row-erasure statistics.
//!
//! For a sketch vector `y = A x` the squared norm that survives after erasing
//! a row set `T^c` is `‖y‖² - ‖y_{T^c}‖²`. Once the squared magnitudes are
//! sorted, the minimum over all erasures of at most `k` rows is obtained by
//! dropping the `k` largest entries and the maximum by dropping the `k`
//! smallest (or none, under uniform `1/m` normalization). Everything here is
//! a prefix/suffix sum over that sorted vector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest instance the subset-enumeration oracle accepts.
pub const ORACLE_MAX_ROWS: usize = 22;

/// How a surviving squared norm is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Divide by the number of surviving rows `|T|`.
    PerSurvivor,
    /// Divide by the full row count `m`.
    Uniform,
}

impl std::fmt::Display for Normalization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Normalization::PerSurvivor => f.write_str("per_survivor"),
            Normalization::Uniform => f.write_str("uniform"),
        }
    }
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per_survivor" | "per-survivor" | "persurvivor" => Ok(Normalization::PerSurvivor),
            "uniform" => Ok(Normalization::Uniform),
            other => Err(Error::Parse(format!("unknown normalization mode `{other}`"))),
        }
    }
}

/// Squared magnitudes of one sketch vector, sorted nonincreasing, with
/// running sums from both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedSample {
    sq_desc: Vec<f64>,
    prefix: Vec<f64>,
    suffix: Vec<f64>,
}

impl SortedSample {
    /// Builds a sample from already-squared values. Entries are re-sorted.
    pub fn from_squares(mut squares: Vec<f64>) -> Result<Self> {
        if squares.is_empty() {
            return Err(Error::EmptySample);
        }
        if squares.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::NonFinite);
        }
        squares.sort_unstable_by(|a, b| b.total_cmp(a));
        Ok(Self::from_sorted_squares(squares))
    }

    /// Caller guarantees `sq_desc` is nonincreasing, finite and nonnegative.
    pub(crate) fn from_sorted_squares(sq_desc: Vec<f64>) -> Self {
        let m = sq_desc.len();
        let mut prefix = Vec::with_capacity(m + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for &v in &sq_desc {
            acc += v;
            prefix.push(acc);
        }
        // suffix[i] = sum of sq_desc[i..], accumulated from the smallest entry
        // upward so tail sums keep full relative precision.
        let mut suffix = vec![0.0; m + 1];
        let mut acc = 0.0;
        for i in (0..m).rev() {
            acc += sq_desc[i];
            suffix[i] = acc;
        }
        SortedSample {
            sq_desc,
            prefix,
            suffix,
        }
    }

    /// Number of rows.
    pub fn m(&self) -> usize {
        self.sq_desc.len()
    }

    /// Squared magnitudes, nonincreasing.
    pub fn sq_desc(&self) -> &[f64] {
        &self.sq_desc
    }

    /// `prefix[i]` is the sum of the `i` largest squared magnitudes.
    pub fn prefix(&self) -> &[f64] {
        &self.prefix
    }

    /// `suffix[i]` is the sum of all but the `i` largest squared magnitudes.
    pub fn suffix(&self) -> &[f64] {
        &self.suffix
    }

    /// `‖y‖²`.
    pub fn total(&self) -> f64 {
        self.suffix[0]
    }

    /// Sum of squares over the surviving rows when the `k` largest are erased.
    pub fn tail_sum(&self, k: usize) -> f64 {
        self.suffix[k]
    }

    /// Sum of squares over the surviving rows when the `k` smallest are erased.
    pub fn head_sum(&self, k: usize) -> f64 {
        if k == 0 {
            self.total()
        } else {
            self.prefix[self.m() - k]
        }
    }
}

/// Squares and sorts a sketch vector.
pub fn sort_sample(y: &[f64]) -> Result<SortedSample> {
    if y.is_empty() {
        return Err(Error::EmptySample);
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut sq: Vec<f64> = y.iter().map(|v| v * v).collect();
    sq.sort_unstable_by(|a, b| b.total_cmp(a));
    Ok(SortedSample::from_sorted_squares(sq))
}

/// Integer erasure budget `k = ⌊β m⌋`.
pub fn erased_budget(beta: f64, m: usize) -> Result<usize> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::ErasureRatioOutOfRange(beta));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("row count must be positive".into()));
    }
    let k = (beta * m as f64).floor() as usize;
    // beta < 1 already implies k <= m - 1 up to rounding of beta * m.
    Ok(k.min(m - 1))
}

/// Erasure ratio with its integer budget for a fixed row count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErasureSpec {
    pub beta: f64,
    pub k: usize,
    pub gamma: f64,
    pub m: usize,
    pub mode: Normalization,
}

impl ErasureSpec {
    pub fn new(beta: f64, m: usize, mode: Normalization) -> Result<Self> {
        let k = erased_budget(beta, m)?;
        Ok(ErasureSpec {
            beta,
            k,
            gamma: k as f64 / m as f64,
            m,
            mode,
        })
    }

    /// Spec with an explicit budget; `beta` is set to `k / m`.
    pub fn with_budget(k: usize, m: usize, mode: Normalization) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("row count must be positive".into()));
        }
        if k >= m {
            return Err(Error::NoSurvivingRows { budget: k, rows: m });
        }
        let gamma = k as f64 / m as f64;
        Ok(ErasureSpec {
            beta: gamma,
            k,
            gamma,
            m,
            mode,
        })
    }
}

/// Minimum and maximum normalized surviving norm over every admissible
/// erasure, with the number of rows erased to attain each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioExtremes {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub argmin_erased: usize,
    pub argmax_erased: usize,
}

/// Acceptance interval `[lo, hi]` for a normalized squared norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionBand {
    pub lo: f64,
    pub hi: f64,
}

impl DistortionBand {
    /// General band `[θ, ω]`; `ω` may be `+∞`.
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo < 0.0 || lo.is_infinite() || hi < lo {
            return Err(Error::InvalidBand { lo, hi });
        }
        Ok(DistortionBand { lo, hi })
    }

    /// `[1 - ε, 1 + ε]` for `ε > 0`. The lower end is clamped at zero.
    pub fn symmetric(eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "symmetric band needs 0 < eps, got {eps}"
            )));
        }
        Ok(DistortionBand {
            lo: (1.0 - eps).max(0.0),
            hi: 1.0 + eps,
        })
    }

    /// One-sided band `[θ, ∞)`.
    pub fn at_least(lo: f64) -> Result<Self> {
        Self::new(lo, f64::INFINITY)
    }

    /// One-sided band `[0, ω]`.
    pub fn at_most(hi: f64) -> Result<Self> {
        Self::new(0.0, hi)
    }

    pub fn unbounded() -> Self {
        DistortionBand {
            lo: 0.0,
            hi: f64::INFINITY,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn contains_extremes(&self, ex: &RatioExtremes) -> bool {
        ex.min_ratio >= self.lo && ex.max_ratio <= self.hi
    }
}

fn check_budget(m: usize, k: usize) -> Result<()> {
    if k + 1 > m {
        return Err(Error::NoSurvivingRows { budget: k, rows: m });
    }
    Ok(())
}

/// Exact extremes of the normalized surviving norm over all erasures of at
/// most `spec.k` rows.
pub fn extreme_ratios(s: &SortedSample, spec: &ErasureSpec) -> Result<RatioExtremes> {
    let m = s.m();
    let k = spec.k;
    check_budget(m, k)?;
    Ok(match spec.mode {
        Normalization::PerSurvivor => {
            let surv = (m - k) as f64;
            RatioExtremes {
                min_ratio: s.tail_sum(k) / surv,
                max_ratio: s.head_sum(k) / surv,
                argmin_erased: k,
                argmax_erased: k,
            }
        }
        Normalization::Uniform => {
            let mf = m as f64;
            RatioExtremes {
                min_ratio: s.tail_sum(k) / mf,
                max_ratio: s.total() / mf,
                argmin_erased: k,
                argmax_erased: 0,
            }
        }
    })
}

/// Whether every admissible erasure keeps the normalized norm inside `band`.
pub fn membership(s: &SortedSample, band: &DistortionBand, spec: &ErasureSpec) -> Result<bool> {
    let ex = extreme_ratios(s, spec)?;
    Ok(band.contains_extremes(&ex))
}

/// Subset-enumeration oracle: visits every erasure set of size at most
/// `spec.k` explicitly. Exponential in `m`; guarded at 22 rows.
pub fn brute_force_extremes(y: &[f64], spec: &ErasureSpec) -> Result<RatioExtremes> {
    let m = y.len();
    if m == 0 {
        return Err(Error::EmptySample);
    }
    if m > ORACLE_MAX_ROWS {
        return Err(Error::OracleTooLarge(m));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    check_budget(m, spec.k)?;
    let sq: Vec<f64> = y.iter().map(|v| v * v).collect();
    let mut best = RatioExtremes {
        min_ratio: f64::INFINITY,
        max_ratio: f64::NEG_INFINITY,
        argmin_erased: 0,
        argmax_erased: 0,
    };
    for erased in 0u32..(1u32 << m) {
        let count = erased.count_ones() as usize;
        if count > spec.k {
            continue;
        }
        let mut kept = 0.0;
        for (i, v) in sq.iter().enumerate() {
            if erased & (1 << i) == 0 {
                kept += v;
            }
        }
        let ratio = match spec.mode {
            Normalization::PerSurvivor => kept / (m - count) as f64,
            Normalization::Uniform => kept / m as f64,
        };
        if ratio < best.min_ratio {
            best.min_ratio = ratio;
            best.argmin_erased = count;
        }
        if ratio > best.max_ratio {
            best.max_ratio = ratio;
            best.argmax_erased = count;
        }
    }
    Ok(best)
}

/// Explicit erased row set together with the normalized norm it produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErasureWitness {
    /// Zero-based indices of erased rows, ascending.
    pub erased: Vec<usize>,
    pub ratio: f64,
}

/// Row sets attaining the minimum and maximum of [`extreme_ratios`].
pub fn extreme_erasures(y: &[f64], spec: &ErasureSpec) -> Result<(ErasureWitness, ErasureWitness)> {
    let m = y.len();
    if m == 0 {
        return Err(Error::EmptySample);
    }
    check_budget(m, spec.k)?;
    let k = spec.k;
    let mut order: Vec<usize> = (0..m).collect();
    // Stable on ties so witnesses are reproducible.
    order.sort_by(|&a, &b| (y[b] * y[b]).total_cmp(&(y[a] * y[a])).then(a.cmp(&b)));
    let mut min_rows: Vec<usize> = order[..k].to_vec();
    min_rows.sort_unstable();
    let mut max_rows: Vec<usize> = match spec.mode {
        Normalization::PerSurvivor => order[m - k..].to_vec(),
        Normalization::Uniform => Vec::new(),
    };
    max_rows.sort_unstable();
    let min_ratio = erased_ratio(y, &min_rows, spec.mode)?;
    let max_ratio = erased_ratio(y, &max_rows, spec.mode)?;
    Ok((
        ErasureWitness {
            erased: min_rows,
            ratio: min_ratio,
        },
        ErasureWitness {
            erased: max_rows,
            ratio: max_ratio,
        },
    ))
}

/// Normalized surviving norm for one explicit erasure, evaluated directly.
pub fn erased_ratio(y: &[f64], erased: &[usize], mode: Normalization) -> Result<f64> {
    let m = y.len();
    let mut mask = vec![false; m];
    for &r in erased {
        if r >= m {
            return Err(Error::DimensionMismatch(format!(
                "erased row {r} out of range for {m} rows"
            )));
        }
        if mask[r] {
            return Err(Error::InvalidParameter(format!("row {r} erased twice")));
        }
        mask[r] = true;
    }
    let survivors = m - erased.len();
    if survivors == 0 {
        return Err(Error::NoSurvivingRows {
            budget: erased.len(),
            rows: m,
        });
    }
    // Sum smallest-first to match the accuracy of the sorted tail sums.
    let mut kept: Vec<f64> = y
        .iter()
        .zip(&mask)
        .filter(|(_, &e)| !e)
        .map(|(v, _)| v * v)
        .collect();
    kept.sort_unstable_by(|a, b| a.total_cmp(b));
    let sum: f64 = kept.iter().sum();
    Ok(match mode {
        Normalization::PerSurvivor => sum / survivors as f64,
        Normalization::Uniform => sum / m as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(k: usize, m: usize, mode: Normalization) -> ErasureSpec {
        ErasureSpec::with_budget(k, m, mode).unwrap()
    }

    #[test]
    fn sort_sample_examples() {
        let s = sort_sample(&[1.0, -2.0, 0.0]).unwrap();
        assert_eq!(s.sq_desc(), &[4.0, 1.0, 0.0]);
        assert_eq!(s.prefix(), &[0.0, 4.0, 5.0, 5.0]);
        let s = sort_sample(&[1.0; 4]).unwrap();
        assert_eq!(s.sq_desc(), &[1.0; 4]);
        let s = sort_sample(&[3.0]).unwrap();
        assert_eq!(s.sq_desc(), &[9.0]);
        assert_eq!(s.prefix(), &[0.0, 9.0]);
    }

    #[test]
    fn sort_sample_errors() {
        assert_eq!(sort_sample(&[]), Err(Error::EmptySample));
        assert_eq!(sort_sample(&[1.0, f64::NAN]), Err(Error::NonFinite));
        assert_eq!(sort_sample(&[f64::INFINITY]), Err(Error::NonFinite));
        assert_eq!(Error::EmptySample.to_string(), "empty sample");
        assert_eq!(Error::NonFinite.to_string(), "non-finite input");
    }

    #[test]
    fn budget_floor() {
        assert_eq!(erased_budget(0.2, 5).unwrap(), 1);
        assert_eq!(erased_budget(0.5, 7).unwrap(), 3);
        assert_eq!(erased_budget(0.0, 10).unwrap(), 0);
        assert!(matches!(
            erased_budget(1.0, 10),
            Err(Error::ErasureRatioOutOfRange(_))
        ));
        assert!(matches!(
            erased_budget(-0.1, 10),
            Err(Error::ErasureRatioOutOfRange(_))
        ));
        let sp = ErasureSpec::new(0.999_999, 3, Normalization::Uniform).unwrap();
        assert_eq!(sp.k, 2);
        assert!(sp.gamma <= sp.beta && sp.beta < sp.gamma + 1.0 / 3.0);
    }

    #[test]
    fn extremes_examples() {
        let s = SortedSample::from_squares(vec![4.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        let ex = extreme_ratios(&s, &spec(1, 5, Normalization::PerSurvivor)).unwrap();
        assert_eq!((ex.min_ratio, ex.max_ratio), (1.0, 1.75));
        assert_eq!((ex.argmin_erased, ex.argmax_erased), (1, 1));
        let ex = extreme_ratios(&s, &spec(1, 5, Normalization::Uniform)).unwrap();
        assert!((ex.min_ratio - 0.8).abs() < 1e-15 && (ex.max_ratio - 1.6).abs() < 1e-15);
        assert_eq!((ex.argmin_erased, ex.argmax_erased), (1, 0));

        let ones = SortedSample::from_squares(vec![1.0; 9]).unwrap();
        for k in 0..9 {
            let ex = extreme_ratios(&ones, &spec(k, 9, Normalization::PerSurvivor)).unwrap();
            assert_eq!((ex.min_ratio, ex.max_ratio), (1.0, 1.0));
        }
    }

    #[test]
    fn extremes_reject_full_erasure() {
        let s = SortedSample::from_squares(vec![1.0, 2.0]).unwrap();
        let sp = ErasureSpec {
            beta: 1.0,
            k: 2,
            gamma: 1.0,
            m: 2,
            mode: Normalization::Uniform,
        };
        assert!(matches!(
            extreme_ratios(&s, &sp),
            Err(Error::NoSurvivingRows { .. })
        ));
    }

    #[test]
    fn membership_examples() {
        let s = SortedSample::from_squares(vec![4.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        let sp = spec(1, 5, Normalization::PerSurvivor);
        assert!(membership(&s, &DistortionBand::symmetric(0.8).unwrap(), &sp).unwrap());
        assert!(!membership(&s, &DistortionBand::symmetric(0.7).unwrap(), &sp).unwrap());
        assert!(membership(&s, &DistortionBand::unbounded(), &sp).unwrap());
    }

    #[test]
    fn oracle_examples() {
        let y = [2.0, 1.0, -1.0, 1.0, -1.0];
        let ex = brute_force_extremes(&y, &spec(1, 5, Normalization::PerSurvivor)).unwrap();
        assert_eq!((ex.min_ratio, ex.max_ratio), (1.0, 1.75));
        let y = [0.3, -1.2, 2.0];
        let ex = brute_force_extremes(&y, &spec(0, 3, Normalization::PerSurvivor)).unwrap();
        let s = (0.09 + 1.44 + 4.0) / 3.0;
        assert!((ex.min_ratio - s).abs() < 1e-15 && (ex.max_ratio - s).abs() < 1e-15);
        let ex = brute_force_extremes(&[1.0, 1.0], &spec(1, 2, Normalization::Uniform)).unwrap();
        assert_eq!((ex.min_ratio, ex.max_ratio), (0.5, 1.0));
        assert_eq!(
            brute_force_extremes(&[1.0; 23], &spec(0, 23, Normalization::Uniform)),
            Err(Error::OracleTooLarge(23))
        );
    }

    #[test]
    fn witnesses_replay() {
        let y = [0.5, -3.0, 1.0, 2.0, -0.1, 0.7];
        for mode in [Normalization::PerSurvivor, Normalization::Uniform] {
            let sp = spec(2, 6, mode);
            let (lo, hi) = extreme_erasures(&y, &sp).unwrap();
            let ex = extreme_ratios(&sort_sample(&y).unwrap(), &sp).unwrap();
            assert!((lo.ratio - ex.min_ratio).abs() <= 1e-15 * ex.min_ratio.abs().max(1.0));
            assert!((hi.ratio - ex.max_ratio).abs() <= 1e-15 * ex.max_ratio.abs().max(1.0));
            assert_eq!(lo.erased, vec![1, 3]);
            assert_eq!(erased_ratio(&y, &lo.erased, mode).unwrap(), lo.ratio);
        }
    }

    #[test]
    fn band_construction() {
        assert!(DistortionBand::symmetric(0.0).is_err());
        assert!(DistortionBand::new(2.0, 1.0).is_err());
        assert!(DistortionBand::new(-0.1, 1.0).is_err());
        let b = DistortionBand::at_least(0.5).unwrap();
        assert!(b.contains(1e300));
        assert_eq!(DistortionBand::symmetric(1.5).unwrap().lo, 0.0);
    }
}
