//! Restricted-isometry certification under row erasures.
//!
//! For a support `Λ` of size `s`, every unit vector in the coordinate span is
//! within the covering radius `r` of some net point `ζ`. Writing
//! `f_T(x) = ‖A_T x‖/√m`, which is a seminorm, the net extremes bound the
//! whole sphere: `sup f ≤ max_ζ f(ζ)/(1 - r)` and
//! `inf f ≥ min_ζ f(ζ) - r·sup f`, uniformly over every erasure `T`. A
//! certificate is issued only when that inflated interval fits the requested
//! band and the net radius is proven, not sampled.

use std::f64::consts::PI;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::erasure::{
    erased_budget, erased_ratio, extreme_erasures, extreme_ratios, sort_sample, DistortionBand,
    ErasureSpec, Normalization,
};
use crate::error::{Error, Result};
use crate::rng::Stream;

/// Largest number of supports [`enumerate_supports`] will produce.
pub const MAX_SUPPORTS: u128 = 1_000_000;

/// Sorted zero-based column indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SupportSet {
    pub indices: Vec<usize>,
}

fn binomial(n: usize, s: usize) -> u128 {
    let s = s.min(n - s);
    let mut c: u128 = 1;
    for i in 0..s {
        c = c * (n - i) as u128 / (i + 1) as u128;
        if c > u64::MAX as u128 {
            return u128::MAX;
        }
    }
    c
}

/// All `s`-subsets of `0..n` in lexicographic order.
pub fn enumerate_supports(n: usize, s: usize) -> Result<Vec<SupportSet>> {
    if s == 0 || s > n {
        return Err(Error::InvalidParameter(format!("need 1 <= s <= n, got s = {s}, n = {n}")));
    }
    let count = binomial(n, s);
    if count > MAX_SUPPORTS {
        return Err(Error::TooManySupports {
            n,
            s,
            count,
            limit: MAX_SUPPORTS,
        });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut idx: Vec<usize> = (0..s).collect();
    loop {
        out.push(SupportSet { indices: idx.clone() });
        // advance to the next combination
        let mut i = s;
        while i > 0 && idx[i - 1] == n - s + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        idx[i - 1] += 1;
        for j in i..s {
            idx[j] = idx[j - 1] + 1;
        }
    }
    Ok(out)
}

/// Finite set of unit vectors covering the sphere in `R^s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereNet {
    pub s: usize,
    /// Target covering radius `ε/8`.
    pub radius: f64,
    /// Covering radius achieved. Proven for deterministic nets, estimated by
    /// random probing for sampled ones.
    pub certified_radius: f64,
    pub heuristic: bool,
    pub points: Vec<Vec<f64>>,
}

impl SphereNet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `(24/ε)^s`, the cardinality of the volumetric existence argument.
    pub fn existence_bound(&self) -> f64 {
        (3.0 / self.radius).powi(self.s as i32)
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

/// Deterministic net with proven covering radius at most `ε/8`, for
/// `s ≤ 3`.
///
/// `s = 2` uses `⌈π/arcsin(ε/16)⌉` equally spaced angles. `s = 3` uses
/// latitude rings at spacing `Δφ` with `n_i` equally spaced points on ring
/// `i`; any point is within `2 sin(Δφ/4)` of its ring and then within
/// `2 sin φ_i sin(π/(2n_i))` of a ring point.
pub fn build_net(s: usize, eps: f64) -> Result<SphereNet> {
    check_eps(eps)?;
    let r = eps / 8.0;
    match s {
        1 => Ok(SphereNet {
            s,
            radius: r,
            certified_radius: 0.0,
            heuristic: false,
            points: vec![vec![1.0], vec![-1.0]],
        }),
        2 => {
            let n = (PI / (eps / 16.0).asin()).ceil() as usize;
            let points = (0..n)
                .map(|i| {
                    let t = 2.0 * PI * i as f64 / n as f64;
                    vec![t.cos(), t.sin()]
                })
                .collect();
            Ok(SphereNet {
                s,
                radius: r,
                certified_radius: 2.0 * (PI / (2.0 * n as f64)).sin(),
                heuristic: false,
                points,
            })
        }
        3 => {
            let half = r / 2.0;
            let bands = (PI / (4.0 * (half / 2.0).asin())).ceil() as usize;
            let dphi = PI / bands as f64;
            let meridian = 2.0 * (dphi / 4.0).sin();
            let mut points = Vec::new();
            let mut achieved: f64 = 0.0;
            for i in 0..bands {
                let phi = (i as f64 + 0.5) * dphi;
                let sp = phi.sin();
                let ring = if sp <= half / 2.0 {
                    1
                } else {
                    (PI / (2.0 * (half / (2.0 * sp)).asin())).ceil() as usize
                };
                achieved = achieved.max(meridian + 2.0 * sp * (PI / (2.0 * ring as f64)).sin());
                for j in 0..ring {
                    let psi = 2.0 * PI * j as f64 / ring as f64;
                    points.push(vec![sp * psi.cos(), sp * psi.sin(), phi.cos()]);
                }
            }
            Ok(SphereNet {
                s,
                radius: r,
                certified_radius: achieved,
                heuristic: false,
                points,
            })
        }
        _ => Err(Error::UnsupportedNet(s)),
    }
}

fn random_unit(s: usize, stream: &mut Stream) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..s).map(|_| stream.normal()).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Largest distance from `probes` random unit vectors to their nearest net
/// point.
pub fn covering_audit(net: &SphereNet, probes: usize, seed: u64) -> f64 {
    let mut stream = Stream::new(seed, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..probes {
        let x = random_unit(net.s, &mut stream);
        let best_dot = net
            .points
            .iter()
            .map(|p| p.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max((2.0 - 2.0 * best_dot.min(1.0)).max(0.0).sqrt());
    }
    worst
}

/// Random net of `count` points with a covering radius estimated from
/// `probes` random probes. Never used to certify.
pub fn sample_net(s: usize, eps: f64, count: usize, probes: usize, seed: u64) -> Result<SphereNet> {
    check_eps(eps)?;
    if s == 0 || count == 0 {
        return Err(Error::InvalidParameter("sampled net needs s >= 1 and count >= 1".into()));
    }
    let mut stream = Stream::new(seed, 1);
    let points = (0..count).map(|_| random_unit(s, &mut stream)).collect();
    let mut net = SphereNet {
        s,
        radius: eps / 8.0,
        certified_radius: f64::NAN,
        heuristic: true,
        points,
    };
    net.certified_radius = covering_audit(&net, probes, seed.wrapping_add(1));
    Ok(net)
}

/// Requested distortion levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RipLevels {
    /// Inner band `(1-ε/2, 1+ε/2)`, outer band `(1-ε, 1+ε)`.
    Symmetric,
    /// Inner band `(θ(1-ε/2), ω(1+ε/2))`, outer band `(θ(1-ε), ω(1+ε))`.
    Levels { theta: f64, omega: f64 },
}

impl RipLevels {
    pub fn levels(theta: f64, omega: f64) -> Result<Self> {
        if !(theta >= 0.0 && omega > theta && omega.is_finite()) {
            return Err(Error::InvalidBand { lo: theta, hi: omega });
        }
        Ok(RipLevels::Levels { theta, omega })
    }

    fn theta_omega(&self) -> (f64, f64) {
        match *self {
            RipLevels::Symmetric => (1.0, 1.0),
            RipLevels::Levels { theta, omega } => (theta, omega),
        }
    }

    pub fn inner(&self, eps: f64) -> DistortionBand {
        let (t, w) = self.theta_omega();
        DistortionBand {
            lo: t * (1.0 - eps / 2.0),
            hi: w * (1.0 + eps / 2.0),
        }
    }

    pub fn outer(&self, eps: f64) -> DistortionBand {
        let (t, w) = self.theta_omega();
        DistortionBand {
            lo: t * (1.0 - eps),
            hi: w * (1.0 + eps),
        }
    }
}

/// Sphere-wide interval implied by net extremes: `λ = √hi/(1-r)` bounds the
/// norm from above and `√lo - rλ` from below. Returns squared values.
pub fn inflate(net_lo: f64, net_hi: f64, r: f64) -> (f64, f64) {
    if r == 0.0 {
        return (net_lo, net_hi);
    }
    let lambda = net_hi.sqrt() / (1.0 - r);
    let lower = (net_lo.sqrt() - r * lambda).max(0.0);
    (lower * lower, lambda * lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RipOutcome {
    CertifiedPass,
    WitnessedFail,
    Inconclusive,
}

impl std::fmt::Display for RipOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RipOutcome::CertifiedPass => "certified_pass",
            RipOutcome::WitnessedFail => "witnessed_fail",
            RipOutcome::Inconclusive => "inconclusive",
        })
    }
}

/// A net point and erasure whose ratio leaves the outer band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RipWitness {
    pub support: SupportSet,
    pub net_index: usize,
    pub point: Vec<f64>,
    pub erased: Vec<usize>,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportCert {
    pub support: SupportSet,
    pub net_min: f64,
    pub net_max: f64,
    pub certified_lo: f64,
    pub certified_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongRipReport {
    pub outcome: RipOutcome,
    pub s: usize,
    pub beta: f64,
    pub budget: usize,
    pub eps: f64,
    pub levels: RipLevels,
    pub inner: DistortionBand,
    pub outer: DistortionBand,
    pub net_size: usize,
    pub net_radius: f64,
    pub heuristic_net: bool,
    /// Largest `λ = √(max net ratio)/(1-r)` over supports.
    pub lambda_bound: f64,
    pub net_min: f64,
    pub net_max: f64,
    pub certified_lo: f64,
    pub certified_hi: f64,
    pub net_within_inner: bool,
    /// Set when `ω ≥ 2`, outside the usual level convention.
    pub level_flag: Option<String>,
    pub witness: Option<RipWitness>,
    pub supports: Vec<SupportCert>,
}

fn restricted_sketch(matrix: &Array2<f64>, support: &SupportSet, point: &[f64]) -> Vec<f64> {
    let sub = matrix.select(Axis(1), &support.indices);
    sub.dot(&ndarray::ArrayView1::from(point)).to_vec()
}

/// Recomputes a witness's ratio directly from the matrix.
pub fn replay_witness(matrix: &Array2<f64>, w: &RipWitness) -> Result<f64> {
    let v = restricted_sketch(matrix, &w.support, &w.point);
    erased_ratio(&v, &w.erased, Normalization::Uniform)
}

/// Certifies `θ(1-ε)‖v‖² ≤ ‖A_T v‖²/m ≤ ω(1+ε)‖v‖²` for all unit
/// `s`-sparse `v` and every erasure of at most `⌊βm⌋` rows, with uniform
/// normalization. Net extremes outside the outer band are returned as
/// witnesses.
pub fn certify_strong_rip(
    matrix: &Array2<f64>,
    s: usize,
    beta: f64,
    levels: RipLevels,
    eps: f64,
    net: &SphereNet,
) -> Result<StrongRipReport> {
    check_eps(eps)?;
    if let RipLevels::Levels { theta, omega } = levels {
        RipLevels::levels(theta, omega)?;
    }
    if net.s != s {
        return Err(Error::DimensionMismatch(format!(
            "net dimension {} differs from sparsity {s}",
            net.s
        )));
    }
    let (m, n) = matrix.dim();
    let budget = erased_budget(beta, m)?;
    let spec = ErasureSpec::with_budget(budget, m, Normalization::Uniform)?;
    let supports = enumerate_supports(n, s)?;
    let inner = levels.inner(eps);
    let outer = levels.outer(eps);
    let r = net.certified_radius;

    let mut witness = None;
    let mut certs = Vec::with_capacity(supports.len());
    for support in supports {
        let sub = matrix.select(Axis(1), &support.indices);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (idx, p) in net.points.iter().enumerate() {
            let v = sub.dot(&ndarray::ArrayView1::from(p.as_slice())).to_vec();
            let ex = extreme_ratios(&sort_sample(&v)?, &spec)?;
            lo = lo.min(ex.min_ratio);
            hi = hi.max(ex.max_ratio);
            if witness.is_none() && !outer.contains_extremes(&ex) {
                let (wmin, wmax) = extreme_erasures(&v, &spec)?;
                let w = if !outer.contains(wmin.ratio) {
                    Some(wmin)
                } else if !outer.contains(wmax.ratio) {
                    Some(wmax)
                } else {
                    None
                };
                witness = w.map(|w| RipWitness {
                    support: support.clone(),
                    net_index: idx,
                    point: p.clone(),
                    erased: w.erased,
                    ratio: w.ratio,
                });
            }
        }
        let (clo, chi) = inflate(lo, hi, r);
        certs.push(SupportCert {
            support,
            net_min: lo,
            net_max: hi,
            certified_lo: clo,
            certified_hi: chi,
        });
    }
    let net_min = certs.iter().map(|c| c.net_min).fold(f64::INFINITY, f64::min);
    let net_max = certs.iter().map(|c| c.net_max).fold(0.0, f64::max);
    let certified_lo = certs.iter().map(|c| c.certified_lo).fold(f64::INFINITY, f64::min);
    let certified_hi = certs.iter().map(|c| c.certified_hi).fold(0.0, f64::max);
    let sound_net = !net.heuristic && r < 1.0;
    let outcome = if witness.is_some() {
        RipOutcome::WitnessedFail
    } else if sound_net && outer.contains(certified_lo) && outer.contains(certified_hi) {
        RipOutcome::CertifiedPass
    } else {
        RipOutcome::Inconclusive
    };
    let level_flag = match levels {
        RipLevels::Levels { omega, .. } if omega >= 2.0 => {
            Some(format!("omega = {omega} is at least 2"))
        }
        _ => None,
    };
    Ok(StrongRipReport {
        outcome,
        s,
        beta,
        budget,
        eps,
        levels,
        inner,
        outer,
        net_size: net.len(),
        net_radius: r,
        heuristic_net: net.heuristic,
        lambda_bound: net_max.sqrt() / (1.0 - r),
        net_min,
        net_max,
        certified_lo,
        certified_hi,
        net_within_inner: inner.contains(net_min) && inner.contains(net_max),
        level_flag,
        witness,
        supports: certs,
    })
}

/// Result of the Bernoulli construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernoulliDemo {
    pub m: usize,
    pub seed: u64,
    pub zeros_v1: usize,
    pub zeros_v2: usize,
    /// `"v1"` for `(1, 1)` or `"v2"` for `(1, -1)`.
    pub vanishing_vector: String,
    /// Rows where the chosen vector's sketch is nonzero; at most `m/2`.
    pub erased: Vec<usize>,
    /// `‖A_T v‖²` after erasing those rows.
    pub residual: f64,
}

/// `m × 2` matrix of independent `±1/√m` signs.
pub fn bernoulli_matrix(m: usize, seed: u64) -> Array2<f64> {
    let mut stream = Stream::new(seed, 0);
    let scale = 1.0 / (m as f64).sqrt();
    Array2::from_shape_fn((m, 2), |_| if stream.bit() { scale } else { -scale })
}

/// With `v₁ = (1, 1)` and `v₂ = (1, -1)`, every row of a sign matrix
/// annihilates exactly one of them, so one of the two vanishes after erasing
/// at most half the rows.
pub fn bernoulli_counterexample(m: usize, seed: u64) -> Result<BernoulliDemo> {
    if m < 2 || m % 2 == 1 {
        return Err(Error::InvalidParameter(format!("m must be even and at least 2, got {m}")));
    }
    let a = bernoulli_matrix(m, seed);
    let av1: Vec<f64> = a.rows().into_iter().map(|r| r[0] + r[1]).collect();
    let av2: Vec<f64> = a.rows().into_iter().map(|r| r[0] - r[1]).collect();
    let zeros_v1 = av1.iter().filter(|&&x| x == 0.0).count();
    let zeros_v2 = av2.iter().filter(|&&x| x == 0.0).count();
    let (name, av) = if zeros_v1 >= zeros_v2 { ("v1", &av1) } else { ("v2", &av2) };
    let erased: Vec<usize> = (0..m).filter(|&j| av[j] != 0.0).collect();
    let residual = (0..m)
        .filter(|j| erased.binary_search(j).is_err())
        .map(|j| av[j] * av[j])
        .sum();
    Ok(BernoulliDemo {
        m,
        seed,
        zeros_v1,
        zeros_v2,
        vanishing_vector: name.to_string(),
        erased,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jl::{draw_projection, ProjectionSpec};

    #[test]
    fn support_enumeration() {
        let s = enumerate_supports(4, 2).unwrap();
        assert_eq!(s.len(), 6);
        assert_eq!(s[0].indices, vec![0, 1]);
        assert_eq!(s[5].indices, vec![2, 3]);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(enumerate_supports(7, 1).unwrap().len(), 7);
        assert_eq!(enumerate_supports(7, 7).unwrap().len(), 1);
        assert_eq!(enumerate_supports(10, 3).unwrap().len(), 120);
        assert!(matches!(
            enumerate_supports(60, 10),
            Err(Error::TooManySupports { .. })
        ));
        assert!(enumerate_supports(3, 0).is_err());
    }

    #[test]
    fn nets_are_unit_and_within_radius() {
        for s in 1..=3 {
            for &eps in &[0.2, 0.5, 0.9] {
                let net = build_net(s, eps).unwrap();
                assert!(net.certified_radius <= net.radius, "s={s} eps={eps}");
                for p in &net.points {
                    let n2: f64 = p.iter().map(|x| x * x).sum();
                    assert!((n2.sqrt() - 1.0).abs() < 1e-12);
                }
                assert!((net.len() as f64) <= net.existence_bound());
            }
        }
        let net = build_net(2, 0.5).unwrap();
        assert_eq!(net.len(), 101);
        assert!(matches!(build_net(4, 0.5), Err(Error::UnsupportedNet(4))));
    }

    #[test]
    fn covering_audit_respects_certificate() {
        for s in 2..=3 {
            let net = build_net(s, 0.5).unwrap();
            let seen = covering_audit(&net, 20_000, 3);
            assert!(seen <= net.certified_radius, "s={s}: {seen} > {}", net.certified_radius);
        }
    }

    #[test]
    fn inflation_constants() {
        for i in 1..1000 {
            let eps = i as f64 / 1000.0;
            let r = eps / 8.0;
            let lambda = (1.0 + eps / 2.0).sqrt() / (1.0 - r);
            assert!(lambda <= (1.0 + eps).sqrt());
            let lower = (1.0 - eps / 2.0).sqrt() - r * (1.0 + eps).sqrt();
            assert!(lower >= (1.0 - eps).sqrt());
            let (lo, hi) = inflate(1.0 - eps / 2.0, 1.0 + eps / 2.0, r);
            assert!((hi.sqrt() - lambda).abs() < 1e-15);
            assert!(lo >= 1.0 - eps && hi <= 1.0 + eps);
        }
    }

    #[test]
    fn single_column_is_exact() {
        let a = draw_projection(&ProjectionSpec::new(50, 3, 4).unwrap());
        let net = build_net(1, 0.5).unwrap();
        let r = certify_strong_rip(&a, 1, 0.1, RipLevels::Symmetric, 0.5, &net).unwrap();
        for (c, cert) in r.supports.iter().enumerate() {
            let col: Vec<f64> = a.column(c).to_vec();
            let spec = ErasureSpec::new(0.1, 50, Normalization::Uniform).unwrap();
            let ex = extreme_ratios(&sort_sample(&col).unwrap(), &spec).unwrap();
            assert_eq!(cert.net_min, ex.min_ratio);
            assert_eq!(cert.net_max, ex.max_ratio);
            assert_eq!((cert.certified_lo, cert.certified_hi), (ex.min_ratio, ex.max_ratio));
        }
    }

    #[test]
    fn witnessed_failure_replays() {
        let a = draw_projection(&ProjectionSpec::new(40, 5, 8).unwrap());
        let net = build_net(2, 0.5).unwrap();
        let r = certify_strong_rip(&a, 2, 0.3, RipLevels::Symmetric, 0.2, &net).unwrap();
        assert_eq!(r.outcome, RipOutcome::WitnessedFail);
        let w = r.witness.as_ref().unwrap();
        assert_eq!(replay_witness(&a, w).unwrap(), w.ratio);
        assert!(!r.outer.contains(w.ratio));
        assert!(w.erased.len() <= r.budget);
    }

    #[test]
    fn heuristic_net_never_certifies() {
        let a = draw_projection(&ProjectionSpec::new(400, 4, 8).unwrap());
        let net = sample_net(2, 0.9, 400, 2000, 5).unwrap();
        assert!(net.heuristic);
        let r = certify_strong_rip(&a, 2, 0.0, RipLevels::levels(0.01, 50.0).unwrap(), 0.9, &net).unwrap();
        assert_eq!(r.outcome, RipOutcome::Inconclusive);
        assert!(r.level_flag.is_some());
        assert!(RipLevels::levels(1.0, 1.0).is_err());
    }

    #[test]
    fn bernoulli_identity() {
        for m in (2..=40).step_by(2) {
            for seed in 0..10 {
                let d = bernoulli_counterexample(m, seed).unwrap();
                assert_eq!(d.zeros_v1 + d.zeros_v2, m);
                assert!(d.erased.len() <= m / 2);
                assert_eq!(d.residual, 0.0);
            }
        }
        assert!(bernoulli_counterexample(7, 1).is_err());
    }
}
