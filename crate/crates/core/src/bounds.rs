//! Closed-form bounds on erasure ratios and distortion levels.
//!
//! Every evaluator is a pure function. Requests outside a formula's
//! admissible range are not errors: the value is still computed where it is
//! defined and the entry carries `valid = false` with the violated condition,
//! so whole parameter grids can be tabulated in one pass.

use std::collections::BTreeMap;
use std::f64::consts::{E, FRAC_PI_2, LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lambert::{lambert_w0, lambert_wm1};
use crate::montecarlo::{empirical_order_stat_means, TrialPlan};
use crate::rng::derive_seed;

/// Where a value of `c_g` came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Configured,
    Calibrated {
        seed: u64,
        m_grid: Vec<usize>,
        trials: usize,
    },
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::Configured => f.write_str("configured"),
            Provenance::Calibrated {
                seed,
                m_grid,
                trials,
            } => {
                let grid: Vec<String> = m_grid.iter().map(|m| m.to_string()).collect();
                write!(
                    f,
                    "calibrated(seed={seed};m_grid={};trials={trials})",
                    grid.join("/")
                )
            }
        }
    }
}

/// The order-statistics constant `c_g` and the quantities derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianConstants {
    pub c_g: f64,
    pub eps_g: f64,
    pub beta_g: f64,
    /// Upper value of `C_1` (`√(π/2)`).
    pub c1: f64,
    /// Upper value of `C_2` (`2`).
    pub c2: f64,
    pub provenance: Provenance,
}

impl GaussianConstants {
    pub fn c_g_sq(&self) -> f64 {
        self.c_g * self.c_g
    }
}

/// `ε_g` and `β_g` for a given `c_g`.
///
/// When `c_g² ln(4/√e) > 1` the maximum of `(c_g² ln 2x - 1)/(x - 1)` over
/// `x ≥ 2` sits at `x = 2`; otherwise at `x = 1/β_g` with
/// `β_g = -W₀(-2e^{-1-1/c_g²})`, and `ε_g = c_g² β_g`.
pub fn gaussian_constants(c_g: f64) -> Result<GaussianConstants> {
    if !(c_g > 0.0) || !c_g.is_finite() {
        return Err(Error::InvalidParameter(format!("c_g must be positive, got {c_g}")));
    }
    let c2 = c_g * c_g;
    let (beta_g, eps_g) = if c2 * (4.0 / E.sqrt()).ln() > 1.0 {
        (0.5, c2 * 4f64.ln() - 1.0)
    } else {
        let t = 2.0 * (-1.0 - 1.0 / c2).exp();
        let beta = -lambert_w0(-t)?;
        (beta, c2 * beta)
    };
    Ok(GaussianConstants {
        c_g,
        eps_g,
        beta_g,
        c1: FRAC_PI_2.sqrt(),
        c2: 2.0,
        provenance: Provenance::Configured,
    })
}

/// `C_p = p (π/2)^{1 - p/2}`, the closed-form upper value for `1 ≤ p ≤ 2`.
pub fn c_p(p: f64) -> f64 {
    p * FRAC_PI_2.powf(1.0 - p / 2.0)
}

/// One evaluated bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub value: f64,
    pub valid: bool,
    pub precondition: String,
}

impl BoundEntry {
    fn new(value: f64, valid: bool, precondition: impl Into<String>) -> Self {
        let valid = valid && value.is_finite();
        BoundEntry {
            value,
            valid,
            precondition: precondition.into(),
        }
    }
}

/// Inputs echoed into a report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub eps: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub m: Option<usize>,
    pub c_g: Option<f64>,
}

/// Named bound values, keyed by a stable identifier.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub inputs: BoundInputs,
    pub h_beta: Option<f64>,
    pub entries: BTreeMap<String, BoundEntry>,
}

impl BoundReport {
    fn insert(&mut self, id: &str, entry: BoundEntry) {
        self.entries.insert(id.to_string(), entry);
    }

    pub fn get(&self, id: &str) -> Option<&BoundEntry> {
        self.entries.get(id)
    }

    /// Value of an entry; panics on an unknown id.
    pub fn value(&self, id: &str) -> f64 {
        self.entries[id].value
    }

    pub fn merge(&mut self, other: BoundReport) {
        self.entries.extend(other.entries);
        if self.h_beta.is_none() {
            self.h_beta = other.h_beta;
        }
        let o = other.inputs;
        let i = &mut self.inputs;
        i.eps = i.eps.or(o.eps);
        i.alpha = i.alpha.or(o.alpha);
        i.beta = i.beta.or(o.beta);
        i.m = i.m.or(o.m);
        i.c_g = i.c_g.or(o.c_g);
    }
}

/// `min(3/4 - β/2, 1 - β)`.
pub fn h_beta(beta: f64) -> f64 {
    (0.75 - 0.5 * beta).min(1.0 - beta)
}

/// Chi-squared tail bounds for `‖Ax‖²/m` at distortion `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub one_sided: f64,
    pub two_sided: f64,
}

/// `e^{-(ε²/4 - ε³/6) m}` and twice that.
pub fn chi2_tail_bound(eps: f64, m: usize) -> Result<TailBound> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "distortion must lie in (0, 1), got {eps}"
        )));
    }
    let one = (-(eps * eps / 4.0 - eps.powi(3) / 6.0) * m as f64).exp();
    Ok(TailBound {
        one_sided: one,
        two_sided: 2.0 * one,
    })
}

fn check_alpha_unit(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

/// `(ε/2)(√(1-√α) - √(αε/2))²`, the right side of the entropy condition.
fn entropy_rhs(eps: f64, alpha: f64) -> f64 {
    let d = (1.0 - alpha.sqrt()).sqrt() - (alpha * eps / 2.0).sqrt();
    0.5 * eps * d * d
}

fn entropy(beta: f64) -> f64 {
    if beta <= 0.0 {
        0.0
    } else {
        beta * (E / beta).ln()
    }
}

/// Largest `β ∈ (0, 1]` with `β ln(e/β) ≤ target`, by bisection on the
/// increasing map `β ↦ β ln(e/β)`. Returns `0` for a nonpositive target.
pub fn entropy_root(target: f64) -> f64 {
    if !(target > 0.0) {
        return 0.0;
    }
    if target >= 1.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if entropy(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Both sufficient conditions on `β` for the small-distortion lower bound:
/// `β ≤ (1-√α)ε/(1+ε)` and `β ln(e/β) ≤ (ε/2)(√(1-√α) - √(αε/2))²`.
pub fn lower_conditions_hold(beta: f64, eps: f64, alpha: f64) -> bool {
    if !(beta > 0.0 && beta < 1.0) {
        return false;
    }
    let a = alpha.sqrt();
    beta <= (1.0 - a) * eps / (1.0 + eps) && entropy(beta) <= entropy_rhs(eps, alpha)
}

/// Lower bounds on the largest tolerable erasure ratio at distortion `ε`.
pub fn beta_lower_bounds(eps: f64, alpha: f64) -> Result<BoundReport> {
    check_alpha_unit(alpha)?;
    let mut r = BoundReport {
        inputs: BoundInputs {
            eps: Some(eps),
            alpha: Some(alpha),
            ..Default::default()
        },
        ..Default::default()
    };
    let a = 1.0 - alpha.sqrt();

    let t1 = a * eps / (16.0 * (4.0 / (a * eps)).ln());
    r.insert(
        "beta_lower_threshold",
        BoundEntry::new(
            t1,
            eps > 0.0 && eps <= 1f64.min(a / (4.0 * alpha)),
            "0 < eps <= min(1, (1-sqrt(alpha))/(4 alpha))",
        ),
    );

    let t2 = (a / 32.0) * eps / (1.0 / eps).ln();
    r.insert(
        "beta_lower_order",
        BoundEntry::new(t2, eps > 0.0 && eps < a / 4.0, "0 < eps < (1-sqrt(alpha))/4"),
    );

    let rhs = entropy_rhs(eps, alpha);
    let root = entropy_root(rhs);
    r.insert(
        "beta_lower_entropy_root",
        BoundEntry::new(
            root,
            eps > 0.0 && eps <= 1f64.min(a / (alpha / 2.0)) && root > 0.0,
            "0 < eps <= min(1, (1-sqrt(alpha))/(alpha/2))",
        ),
    );
    Ok(r)
}

/// Upper bounds on the largest tolerable erasure ratio at distortion `ε`.
///
/// `beta_upper_lambert` is the exact root of `c_g² β ln(2/β) = ε` below
/// `2/e`. `beta_upper_log` is the simplified logarithmic form, which is
/// always *smaller* than the Lambert form because `-W₋₁(-t) < 2 ln(1/t)`;
/// the entry carries a warning and the Lambert value is authoritative.
pub fn beta_upper_bounds(eps: f64, gc: &GaussianConstants) -> Result<BoundReport> {
    let c2 = gc.c_g_sq();
    let mut r = BoundReport {
        inputs: BoundInputs {
            eps: Some(eps),
            c_g: Some(gc.c_g),
            ..Default::default()
        },
        ..Default::default()
    };
    let u1 = (1.0 + 1.0 / gc.eps_g) * eps / (c2 * (2.0 * gc.eps_g / eps).ln());
    r.insert(
        "beta_upper_eps_g",
        BoundEntry::new(
            u1,
            eps > 0.0 && eps < 1f64.min(gc.eps_g),
            "0 < eps < min(1, eps_g)",
        ),
    );

    let lambert_range = eps > 0.0 && eps < 1f64.min(c2 * LN_2).min(1.0 / (2.0 * c2));
    let u2 = match lambert_wm1(-eps / (2.0 * c2)) {
        Ok(w) => eps / (-c2 * w),
        Err(_) => f64::NAN,
    };
    r.insert(
        "beta_upper_lambert",
        BoundEntry::new(
            u2,
            lambert_range,
            "0 < eps < min(1, c_g^2 ln 2, 1/(2 c_g^2))",
        ),
    );

    let u3 = eps / (2.0 * c2 * (2.0 * c2 / eps).ln());
    let mut note = String::from("0 < eps < min(1, c_g^2 ln 2, 1/(2 c_g^2))");
    if u2.is_finite() && u3 < u2 {
        note.push_str("; warning: simplified form is below the Lambert-W root, not an upper bound on it");
    }
    r.insert("beta_upper_log", BoundEntry::new(u3, lambert_range, note));
    Ok(r)
}

/// The `ε / ln(1/ε)` order sandwich for the largest tolerable erasure ratio,
/// per-survivor and uniform normalization.
pub fn optimal_order_bounds(eps: f64, alpha: f64, gc: &GaussianConstants) -> Result<BoundReport> {
    check_alpha_unit(alpha)?;
    let c2 = gc.c_g_sq();
    let a = 1.0 - alpha.sqrt();
    let order = eps / (1.0 / eps).ln();
    let per_survivor_range =
        eps > 0.0 && eps < (a / 4.0).min(gc.eps_g).min(4.0 * gc.eps_g * gc.eps_g);
    let uniform_range = eps > 0.0 && eps < (a / 4.0).min(c2 * LN_2).min(1.0 / (2.0 * c2));
    let mut r = BoundReport {
        inputs: BoundInputs {
            eps: Some(eps),
            alpha: Some(alpha),
            c_g: Some(gc.c_g),
            ..Default::default()
        },
        ..Default::default()
    };
    r.insert(
        "optimal_lower",
        BoundEntry::new(a / 32.0 * order, eps > 0.0 && eps < a / 4.0, "0 < eps < (1-sqrt(alpha))/4"),
    );
    r.insert(
        "optimal_upper_per_survivor",
        BoundEntry::new(
            (2.0 + 2.0 * gc.eps_g) / (c2 * gc.eps_g) * order,
            per_survivor_range,
            "0 < eps < min((1-sqrt(alpha))/4, eps_g, 4 eps_g^2)",
        ),
    );
    r.insert(
        "optimal_upper_uniform",
        BoundEntry::new(
            order / (4.0 * c2),
            uniform_range,
            "0 < eps < min((1-sqrt(alpha))/4, c_g^2 ln 2, 1/(2 c_g^2))",
        ),
    );
    Ok(r)
}

/// Lower/upper distortion levels sustainable at erasure ratio `β`.
///
/// Without `m`, reports the `α → 0` limits and the `α`-level bounds for both
/// normalizations. With `m`, also reports the finite-`m` level pair used for
/// pairwise embeddings (`jl_theta`, `jl_omega`) and the `γ = ⌊βm⌋/m` form of
/// the uniform upper level.
pub fn theta_omega_bounds(
    beta: f64,
    alpha: f64,
    m: Option<usize>,
    gc: &GaussianConstants,
) -> Result<BoundReport> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::ErasureRatioOutOfRange(beta));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let c2 = gc.c_g_sq();
    let one_b = 1.0 - beta;
    let h = h_beta(beta);
    let mut r = BoundReport {
        inputs: BoundInputs {
            alpha: Some(alpha),
            beta: Some(beta),
            m,
            c_g: Some(gc.c_g),
            ..Default::default()
        },
        h_beta: Some(h),
        ..Default::default()
    };

    let theta_lo = PI / 6.0 * one_b * one_b * ((3.0 - 2.0 * beta) / (4.0 * one_b)).min(1.0);
    let theta_hi = (FRAC_PI_2 * (1.0 / beta).ln().powi(2)).min(1.0);
    let omega_lo = (c2 * (2.0 / one_b).ln()).max(FRAC_PI_2 * beta * beta);
    let omega_hi = 2.0 * (E / one_b).ln();
    let always = "0 < beta < 1";
    r.insert("theta_lower_limit", BoundEntry::new(theta_lo, true, always));
    r.insert("theta_upper_limit", BoundEntry::new(theta_hi, true, always));
    r.insert("omega_lower_limit", BoundEntry::new(omega_lo, true, always));
    r.insert("omega_upper_limit", BoundEntry::new(omega_hi, true, always));
    r.insert("theta_uniform_lower_limit", BoundEntry::new(one_b * theta_lo, true, always));
    r.insert("theta_uniform_upper_limit", BoundEntry::new(one_b * theta_hi, true, always));
    r.insert("omega_uniform_lower_limit", BoundEntry::new(one_b * omega_lo, true, always));
    r.insert("omega_uniform_upper_limit", BoundEntry::new(one_b * omega_hi, true, always));

    let alpha_ok = alpha < PI / 12.0 * one_b * one_b * h;
    let alpha_cond = "0 < alpha < (pi/12)(1-beta)^2 h_beta";
    let root_term = (PI * alpha * h / 3.0).sqrt();
    let theta_alpha = PI / 6.0 * one_b * h + 2.0 * alpha / one_b - 2.0 * root_term;
    let theta_uniform_alpha = PI / 6.0 * one_b * one_b * h + 2.0 * alpha - 2.0 * one_b * root_term;
    let log_e = (E / one_b).ln();
    let omega_alpha =
        2.0 * log_e + 2.0 * alpha / one_b + 4.0 * (alpha / one_b * log_e).sqrt();
    r.insert("theta_lower_alpha", BoundEntry::new(theta_alpha, alpha_ok, alpha_cond));
    r.insert("theta_upper_alpha", BoundEntry::new(theta_hi, true, always));
    r.insert("omega_lower_alpha", BoundEntry::new(omega_lo, true, always));
    r.insert("omega_upper_alpha", BoundEntry::new(omega_alpha, true, "alpha > 0"));
    r.insert(
        "theta_uniform_lower_alpha",
        BoundEntry::new(theta_uniform_alpha, alpha_ok, alpha_cond),
    );
    r.insert("theta_uniform_upper_alpha", BoundEntry::new(one_b * theta_hi, true, always));
    r.insert("omega_uniform_lower_alpha", BoundEntry::new(one_b * omega_lo, true, always));

    if let Some(m) = m {
        let min_rows = 1.0 / one_b;
        if (m as f64) < min_rows * (1.0 - 1e-12) {
            return Err(Error::NoSurvivingRowsAtBeta { m, min_rows });
        }
        let x = (one_b - 1.0 / m as f64).max(0.0);
        let omega_jl = (2.0 * entropy(x)).sqrt() + (2.0 * alpha).sqrt();
        r.insert(
            "jl_theta",
            BoundEntry::new(theta_uniform_alpha, alpha_ok, alpha_cond),
        );
        r.insert(
            "jl_omega",
            BoundEntry::new(omega_jl * omega_jl, true, "m >= 1/(1-beta)"),
        );
        let gamma = (beta * m as f64).floor() / m as f64;
        let w = (2.0 * entropy(1.0 - gamma)).sqrt() + (2.0 * alpha).sqrt();
        r.insert(
            "omega_uniform_upper_finite_m",
            BoundEntry::new(w * w, true, "gamma = floor(beta m)/m"),
        );
    }
    Ok(r)
}

/// Bracket on `E|y_(j)|^p` for the `j`-th largest of `m` absolute normals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderStatBounds {
    /// `√(π/2)(m+1-j)/(m+1)`, reported for `p = 1` only.
    pub lower: Option<f64>,
    /// `C_p (1/j + ln(m/j))`.
    pub upper: f64,
    /// `C_p Σ_{ℓ=j}^{m} 1/ℓ`, the sharper harmonic form.
    pub upper_harmonic: f64,
}

pub fn order_stat_expectation_bounds(m: usize, j: usize, p: f64) -> Result<OrderStatBounds> {
    if m == 0 || j == 0 || j > m {
        return Err(Error::InvalidParameter(format!(
            "order statistic index {j} out of range for m = {m}"
        )));
    }
    if !(1.0..=2.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("moment p must lie in [1, 2], got {p}")));
    }
    let (mf, jf) = (m as f64, j as f64);
    let cp = c_p(p);
    let lower = (p == 1.0).then(|| FRAC_PI_2.sqrt() * (mf + 1.0 - jf) / (mf + 1.0));
    let harmonic: f64 = (j..=m).rev().map(|l| 1.0 / l as f64).sum();
    Ok(OrderStatBounds {
        lower,
        upper: cp * (1.0 / jf + (mf / jf).ln()),
        upper_harmonic: cp * harmonic,
    })
}

/// Brackets on root-mean-square partial sums of sorted squared normals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartialSumBounds {
    /// Upper bound on `E √((1/k) Σ_{j≤k} y_(j)²)`; needs `k ≥ 1`.
    pub top_upper: Option<f64>,
    /// Lower bound on `E √((1/(m-k)) Σ_{j>k} y_(j)²)`; needs `k ≤ m-1`.
    pub tail_lower: Option<f64>,
    pub tail_upper: Option<f64>,
}

pub fn partial_sum_expectation_bounds(m: usize, k: usize) -> Result<PartialSumBounds> {
    if m == 0 || k > m {
        return Err(Error::InvalidParameter(format!(
            "partial-sum size {k} out of range for m = {m}"
        )));
    }
    let (mf, kf) = (m as f64, k as f64);
    let top_upper = (k >= 1).then(|| (2.0 * (E * mf / kf).ln()).sqrt());
    let (tail_lower, tail_upper) = if k < m {
        let g = kf / mf;
        let inv = 1.0 / mf;
        let lower = (PI / 6.0).sqrt() * ((1.0 - g) * (1.0 - g + 0.5 * inv) / (1.0 + inv)).sqrt();
        let upper = if k == 0 {
            2f64.sqrt()
        } else {
            (2.0 - 2.0 * g / (1.0 - g) * ((1.0 + inv) / (g + inv)).ln()).sqrt()
        };
        (Some(lower), Some(upper))
    } else {
        (None, None)
    };
    Ok(PartialSumBounds {
        top_upper,
        tail_lower,
        tail_upper,
    })
}

/// `ln(3N(N-1)/2) / (α(ε²/4 - ε³/6))`.
fn jl_quotient(n_points: usize, eps: f64, alpha: f64) -> Result<f64> {
    if n_points < 2 {
        return Err(Error::InvalidParameter("need at least two points".into()));
    }
    check_alpha_unit(alpha)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "distortion must lie in (0, 1), got {eps}"
        )));
    }
    let n = n_points as f64;
    Ok((3.0 * n * (n - 1.0) / 2.0).ln() / (alpha * (eps * eps / 4.0 - eps.powi(3) / 6.0)))
}

/// Checks `0 < ε < (1-√α)/4`, the distortion range of the robust pairwise
/// embedding guarantee.
pub fn jl_hypothesis(eps: f64, alpha: f64) -> Result<()> {
    check_alpha_unit(alpha)?;
    let cap = (1.0 - alpha.sqrt()) / 4.0;
    if !(eps > 0.0 && eps < cap) {
        return Err(Error::HypothesisViolated(format!(
            "0 < eps < (1 - sqrt(alpha))/4 fails: eps = {eps}, (1 - sqrt(alpha))/4 = {cap}"
        )));
    }
    Ok(())
}

/// Smallest integer strictly above `ln(3N(N-1)/2) / (α(ε²/4 - ε³/6))`.
///
/// Evaluated for any `ε ∈ (0, 1)`; use [`jl_min_rows_checked`] to also
/// enforce [`jl_hypothesis`].
pub fn jl_min_rows(n_points: usize, eps: f64, alpha: f64) -> Result<usize> {
    let q = jl_quotient(n_points, eps, alpha)?;
    Ok(q.floor() as usize + 1)
}

pub fn jl_min_rows_checked(n_points: usize, eps: f64, alpha: f64) -> Result<usize> {
    jl_hypothesis(eps, alpha)?;
    jl_min_rows(n_points, eps, alpha)
}

/// Which sparse-recovery sample-size condition to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RipVariant {
    /// Small distortion, erasure budget tied to `ε`:
    /// `s ln(24en/(εs)) < α(ε²/16 - ε³/24)m - ln 3`.
    SmallDistortion,
    /// Fixed erasure ratio `β`: `s ln(24en/(εs)) < αm - ln 2`.
    FixedErasure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RipAdmissibility {
    pub ok: bool,
    /// Right side minus left side.
    pub slack: f64,
    pub left: f64,
    pub right: f64,
}

pub fn rip_admissibility(
    n: usize,
    s: usize,
    m: usize,
    eps: f64,
    alpha: f64,
    variant: RipVariant,
) -> Result<RipAdmissibility> {
    if s == 0 || s > n {
        return Err(Error::InvalidParameter(format!(
            "sparsity {s} out of range for n = {n}"
        )));
    }
    let (nf, sf, mf) = (n as f64, s as f64, m as f64);
    let left = sf * (24.0 * E * nf / (eps * sf)).ln();
    let right = match variant {
        RipVariant::SmallDistortion => {
            alpha * (eps * eps / 16.0 - eps.powi(3) / 24.0) * mf - 3f64.ln()
        }
        RipVariant::FixedErasure => alpha * mf - LN_2,
    };
    Ok(RipAdmissibility {
        ok: left < right,
        slack: right - left,
        left,
        right,
    })
}

/// Per-term diagnostics of a `c_g` calibration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTerm {
    pub m: usize,
    pub j: usize,
    pub mean: f64,
    pub std_err: f64,
    /// `(mean - 3 std_err) / √(ln(2m/j))`.
    pub shrunk_ratio: f64,
}

/// Empirical `c_g`: the minimum over `m ∈ m_grid`, `1 ≤ j ≤ m/2` of
/// `(Ê|y_(j)| - 3 SE) / √(ln(2m/j))`.
///
/// Each grid entry draws from its own seed derived from `(seed, m)`, so adding
/// rows to the grid never changes the terms already present.
pub fn calibrate_cg(
    m_grid: &[usize],
    trials: usize,
    seed: u64,
    workers: usize,
) -> Result<(GaussianConstants, Vec<CalibrationTerm>)> {
    if m_grid.is_empty() {
        return Err(Error::InvalidParameter("empty m grid".into()));
    }
    if m_grid.iter().any(|&m| m < 2) {
        return Err(Error::InvalidParameter("every grid entry needs m >= 2".into()));
    }
    let mut terms = Vec::new();
    for &m in m_grid {
        let plan = TrialPlan::new(m, trials, derive_seed(seed, m as u64), workers)?;
        let stats = empirical_order_stat_means(&plan)?;
        for j in 1..=m / 2 {
            let mean = stats.means[j - 1];
            let se = stats.std_errs[j - 1];
            let denom = (2.0 * m as f64 / j as f64).ln().sqrt();
            terms.push(CalibrationTerm {
                m,
                j,
                mean,
                std_err: se,
                shrunk_ratio: (mean - 3.0 * se) / denom,
            });
        }
    }
    let c_g = terms
        .iter()
        .map(|t| t.shrunk_ratio)
        .fold(f64::INFINITY, f64::min);
    let mut gc = gaussian_constants(c_g)?;
    gc.provenance = Provenance::Calibrated {
        seed,
        m_grid: m_grid.to_vec(),
        trials,
    };
    Ok((gc, terms))
}
