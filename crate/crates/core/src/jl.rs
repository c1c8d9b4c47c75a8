//! Pairwise-distance audits of Gaussian projections under row erasures.
//!
//! For each pair of points the normalized difference `u = A(p_i - p_j) /
//! ‖p_i - p_j‖` is a sketch vector, and the sorting reduction gives the exact
//! extremes over every erasure of at most `k` rows. An audit therefore covers
//! all erasure sets, not a sample of them.

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::erasure::{
    erased_budget, extreme_erasures, extreme_ratios, sort_sample, DistortionBand, ErasureSpec,
    ErasureWitness, Normalization,
};
use crate::error::{Error, Result};
use crate::rng::Stream;

/// `N` points in `R^n`, one per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Array2<f64>,
    labels: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(points: Array2<f64>, labels: Option<Vec<String>>) -> Result<Self> {
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if let Some(l) = &labels {
            if l.len() != points.nrows() {
                return Err(Error::DimensionMismatch(format!(
                    "{} labels for {} points",
                    l.len(),
                    points.nrows()
                )));
            }
        }
        Ok(Dataset { points, labels })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("rows of unequal length".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let points = Array2::from_shape_vec((rows.len(), n), flat)
            .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
        Dataset::new(points, None)
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn point(&self, i: usize) -> ArrayView1<'_, f64> {
        self.points.row(i)
    }
}

/// Shape and seed of a Gaussian projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionSpec {
    pub m: usize,
    pub n: usize,
    pub seed: u64,
}

impl ProjectionSpec {
    pub fn new(m: usize, n: usize, seed: u64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidParameter(format!(
                "projection shape must be positive, got {m}x{n}"
            )));
        }
        Ok(ProjectionSpec { m, n, seed })
    }
}

/// `m × n` matrix of standard normals; row `r` comes from stream `(seed, r)`.
pub fn draw_projection(spec: &ProjectionSpec) -> Array2<f64> {
    let mut a = Array2::zeros((spec.m, spec.n));
    for (r, mut row) in a.rows_mut().into_iter().enumerate() {
        let mut s = Stream::new(spec.seed, r as u64);
        for v in row.iter_mut() {
            *v = s.normal();
        }
    }
    a
}

/// `⌊m (1-√α)/32 · ε/ln(1/ε)⌋` without checking the distortion range.
pub fn erasure_budget_jl_unchecked(eps: f64, alpha: f64, m: usize) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0) || !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < eps < 1 and 0 < alpha < 1, got eps = {eps}, alpha = {alpha}"
        )));
    }
    let frac = (1.0 - alpha.sqrt()) / 32.0 * eps / (1.0 / eps).ln();
    Ok((m as f64 * frac).floor() as usize)
}

/// Erasure budget of the robust pairwise embedding, for
/// `0 < ε < (1-√α)/4`.
pub fn erasure_budget_jl(eps: f64, alpha: f64, m: usize) -> Result<usize> {
    crate::bounds::jl_hypothesis(eps, alpha)?;
    erasure_budget_jl_unchecked(eps, alpha, m)
}

/// The stated row-count condition for the fixed-ratio embedding next to the
/// stricter form it most likely intends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairwiseRowCondition {
    /// `(1/α) ln(1/(N(N-1)))`; negative for every `N ≥ 2`.
    pub literal_threshold: f64,
    pub literal_ok: bool,
    /// `(1/α) ln(N(N-1))`.
    pub strict_threshold: f64,
    pub strict_ok: bool,
}

pub fn fixed_ratio_row_condition(n_points: usize, alpha: f64, m: usize) -> Result<PairwiseRowCondition> {
    if n_points < 2 || !(alpha > 0.0) {
        return Err(Error::InvalidParameter(
            "need at least two points and alpha > 0".into(),
        ));
    }
    let pairs = (n_points as f64) * (n_points as f64 - 1.0);
    let literal = (1.0 / pairs).ln() / alpha;
    let strict = pairs.ln() / alpha;
    Ok(PairwiseRowCondition {
        literal_threshold: literal,
        literal_ok: (m as f64) > literal,
        strict_threshold: strict,
        strict_ok: (m as f64) > strict,
    })
}

/// Extremes for one pair of points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub i: usize,
    pub j: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub argmin_erased: usize,
    pub argmax_erased: usize,
    pub pass: bool,
    /// `min(min_ratio - lo, hi - max_ratio)`; negative on failure.
    pub slack: f64,
}

/// A pair together with an explicit erased row set attaining its extreme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairWitness {
    pub i: usize,
    pub j: usize,
    pub witness: ErasureWitness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub pass: bool,
    pub band: DistortionBand,
    pub budget: usize,
    pub mode: Normalization,
    pub pairs_audited: usize,
    pub duplicate_pairs: usize,
    pub min_slack: f64,
    pub worst_min: Option<PairWitness>,
    pub worst_max: Option<PairWitness>,
    pub pairs: Vec<PairResult>,
}

/// `A(p_i - p_j)/‖p_i - p_j‖`, or `None` for coincident points.
pub fn pair_sketch(data: &Dataset, matrix: &Array2<f64>, i: usize, j: usize) -> Option<Vec<f64>> {
    let d = &data.point(i) - &data.point(j);
    let norm = d.dot(&d).sqrt();
    if norm == 0.0 {
        return None;
    }
    let u = matrix.dot(&d);
    Some(u.iter().map(|v| v / norm).collect())
}

/// Exact worst-case audit of every unordered pair under erasures of at most
/// `budget` rows. Coincident points pass without being audited.
pub fn audit_pairwise(
    data: &Dataset,
    matrix: &Array2<f64>,
    band: DistortionBand,
    budget: usize,
    mode: Normalization,
) -> Result<DistortionReport> {
    let (m, n) = matrix.dim();
    if n != data.dim() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {n} columns, points have dimension {}",
            data.dim()
        )));
    }
    let spec = ErasureSpec::with_budget(budget, m, mode)?;
    let mut pairs = Vec::new();
    let mut duplicates = 0;
    for i in 0..data.len() {
        for j in i + 1..data.len() {
            let Some(u) = pair_sketch(data, matrix, i, j) else {
                duplicates += 1;
                continue;
            };
            let ex = extreme_ratios(&sort_sample(&u)?, &spec)?;
            let pass = band.contains_extremes(&ex);
            pairs.push(PairResult {
                i,
                j,
                min_ratio: ex.min_ratio,
                max_ratio: ex.max_ratio,
                argmin_erased: ex.argmin_erased,
                argmax_erased: ex.argmax_erased,
                pass,
                slack: (ex.min_ratio - band.lo).min(band.hi - ex.max_ratio),
            });
        }
    }
    let pass = pairs.iter().all(|p| p.pass);
    let min_slack = pairs.iter().map(|p| p.slack).fold(f64::INFINITY, f64::min);
    // first pair attaining each extreme, in (i, j) order
    let lowest = pairs.iter().fold(None::<&PairResult>, |acc, p| match acc {
        Some(a) if a.min_ratio <= p.min_ratio => Some(a),
        _ => Some(p),
    });
    let highest = pairs.iter().fold(None::<&PairResult>, |acc, p| match acc {
        Some(a) if a.max_ratio >= p.max_ratio => Some(a),
        _ => Some(p),
    });
    let witness = |p: &PairResult, want_min: bool| -> Result<PairWitness> {
        let u = pair_sketch(data, matrix, p.i, p.j).expect("audited pair is not a duplicate");
        let (lo, hi) = extreme_erasures(&u, &spec)?;
        Ok(PairWitness {
            i: p.i,
            j: p.j,
            witness: if want_min { lo } else { hi },
        })
    };
    Ok(DistortionReport {
        pass,
        band,
        budget,
        mode,
        pairs_audited: pairs.len(),
        duplicate_pairs: duplicates,
        min_slack,
        worst_min: lowest.map(|p| witness(p, true)).transpose()?,
        worst_max: highest.map(|p| witness(p, false)).transpose()?,
        pairs,
    })
}

/// Symmetric band `[1-ε, 1+ε]` with budget `⌊βm⌋`, a convenience for
/// fixed-ratio audits.
pub fn audit_fixed_ratio(
    data: &Dataset,
    matrix: &Array2<f64>,
    band: DistortionBand,
    beta: f64,
    mode: Normalization,
) -> Result<DistortionReport> {
    let k = erased_budget(beta, matrix.nrows())?;
    audit_pairwise(data, matrix, band, k, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::erasure::{brute_force_extremes, erased_ratio};
    use ndarray::array;

    #[test]
    fn projection_is_reproducible_and_isotropic() {
        let spec = ProjectionSpec::new(10_000, 3, 42).unwrap();
        let a = draw_projection(&spec);
        assert_eq!(a, draw_projection(&spec));
        for c in 0..3 {
            let col = a.column(c);
            let var = col.dot(&col) / 10_000.0;
            assert!((var - 1.0).abs() < 0.05, "column {c}: {var}");
        }
        let x = array![0.6, 0.0, 0.8];
        let y = a.dot(&x);
        assert!((y.dot(&y) / 10_000.0 - 1.0).abs() < 0.05);
        assert!(ProjectionSpec::new(0, 3, 1).is_err());
    }

    #[test]
    fn budget_examples() {
        assert_eq!(erasure_budget_jl_unchecked(0.2, 0.25, 4434).unwrap(), 8);
        assert!(erasure_budget_jl(0.2, 0.25, 4434).is_err());
        assert_eq!(erasure_budget_jl(0.1, 0.25, 10).unwrap(), 0);
        let mut prev = 0;
        for m in (1..20_000).step_by(97) {
            let k = erasure_budget_jl(0.1, 0.25, m).unwrap();
            assert!(k >= prev);
            prev = k;
        }
    }

    #[test]
    fn row_condition_literal_is_vacuous() {
        let c = fixed_ratio_row_condition(20, 0.1, 1).unwrap();
        assert!(c.literal_threshold < 0.0 && c.literal_ok);
        assert!(!c.strict_ok);
        assert!((c.strict_threshold - 380f64.ln() / 0.1).abs() < 1e-12);
    }

    #[test]
    fn vacuous_audits() {
        let a = draw_projection(&ProjectionSpec::new(8, 2, 1).unwrap());
        let one = Dataset::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let r = audit_pairwise(&one, &a, DistortionBand::symmetric(0.1).unwrap(), 2, Normalization::Uniform).unwrap();
        assert!(r.pass && r.pairs_audited == 0);
        let same = Dataset::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        let r = audit_pairwise(&same, &a, DistortionBand::symmetric(0.1).unwrap(), 2, Normalization::Uniform).unwrap();
        assert!(r.pass && r.pairs_audited == 0 && r.duplicate_pairs == 3);
        assert!(r.worst_min.is_none());
    }

    #[test]
    fn hand_computed_pair() {
        // A e₁ has squares [4,1,1,1,1]
        let a = array![[2.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [1.0, 0.0], [-1.0, 0.0]];
        let data = Dataset::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let band = DistortionBand::new(0.2, 1.8).unwrap();
        let r = audit_pairwise(&data, &a, band, 1, Normalization::Uniform).unwrap();
        let p = r.pairs[0];
        assert!((p.min_ratio - 0.8).abs() < 1e-15 && (p.max_ratio - 1.6).abs() < 1e-15);
        assert!(r.pass);
        let u = pair_sketch(&data, &a, 0, 1).unwrap();
        let spec = ErasureSpec::with_budget(1, 5, Normalization::Uniform).unwrap();
        let oracle = brute_force_extremes(&u, &spec).unwrap();
        assert!((oracle.min_ratio - p.min_ratio).abs() < 1e-15);
        assert!((oracle.max_ratio - p.max_ratio).abs() < 1e-15);
    }

    #[test]
    fn budget_zero_is_classical_check() {
        let spec = ProjectionSpec::new(60, 4, 7).unwrap();
        let a = draw_projection(&spec);
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|i| (0..4).map(|c| ((i * 7 + c * 3) % 5) as f64 - 2.0 + 0.1 * i as f64).collect())
            .collect();
        let data = Dataset::from_rows(&rows).unwrap();
        let band = DistortionBand::symmetric(0.3).unwrap();
        let r = audit_pairwise(&data, &a, band, 0, Normalization::PerSurvivor).unwrap();
        for p in &r.pairs {
            let d = &data.point(p.i) - &data.point(p.j);
            let ad = a.dot(&d);
            let direct = ad.dot(&ad) / (60.0 * d.dot(&d));
            assert!((direct - p.min_ratio).abs() < 1e-12 * direct);
            assert_eq!(p.min_ratio, p.max_ratio);
            assert_eq!(p.pass, band.contains(direct));
        }
    }

    #[test]
    fn witnesses_replay_exactly() {
        let a = draw_projection(&ProjectionSpec::new(40, 3, 9).unwrap());
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, (i * i) as f64, 1.0 - i as f64]).collect();
        let data = Dataset::from_rows(&rows).unwrap();
        for mode in [Normalization::PerSurvivor, Normalization::Uniform] {
            let r = audit_pairwise(&data, &a, DistortionBand::symmetric(0.5).unwrap(), 6, mode).unwrap();
            for w in [r.worst_min.as_ref().unwrap(), r.worst_max.as_ref().unwrap()] {
                let u = pair_sketch(&data, &a, w.i, w.j).unwrap();
                assert_eq!(erased_ratio(&u, &w.witness.erased, mode).unwrap(), w.witness.ratio);
            }
            let lowest = r.pairs.iter().map(|p| p.min_ratio).fold(f64::INFINITY, f64::min);
            let wmin = r.worst_min.as_ref().unwrap().witness.ratio;
            assert!((wmin - lowest).abs() <= 1e-12 * lowest);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let a = draw_projection(&ProjectionSpec::new(5, 3, 1).unwrap());
        let data = Dataset::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            audit_pairwise(&data, &a, DistortionBand::unbounded(), 0, Normalization::Uniform),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(Dataset::from_rows(&[vec![f64::NAN]]).is_err());
    }
}
