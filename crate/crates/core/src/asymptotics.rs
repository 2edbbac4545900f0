//! Asymptotic constants, bandwidth schedules and blocking sequences.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta as beta_fn;

use crate::deconv::{DeconvKernel, GnTable};
use crate::error::{Condition, Error, Result};
use crate::field::{DependenceProfile, MixingProfile, NoiseModel};
use crate::quadrature::GaussLegendre;

/// Guard against `[x]` landing one below an integer that `x` represents.
const FLOOR_EPS: f64 = 1e-9;

fn int_part(x: f64) -> u64 {
    (x + FLOOR_EPS).floor().max(0.0) as u64
}

/// `b_n = c · |Λ_n|^{-γ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthSchedule {
    pub constant: f64,
    pub exponent: f64,
}

impl BandwidthSchedule {
    pub fn new(constant: f64, exponent: f64) -> Self {
        Self { constant, exponent }
    }

    pub fn bandwidth(&self, n_sites: usize) -> f64 {
        self.constant * (n_sites as f64).powf(-self.exponent)
    }

    /// Checks `b_n → 0`, `|Λ_n| b_n → ∞` and `|Λ_n| b_n^{2β+1} → ∞`.
    pub fn validate(&self, beta: f64) -> Result<()> {
        let (c, g) = (self.constant, self.exponent);
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::violation(
                Condition::A5,
                format!("schedule constant must be positive, got {c}"),
            ));
        }
        if !(g > 0.0) {
            return Err(Error::violation(
                Condition::A5,
                format!("schedule exponent γ = {g} does not satisfy b_n → 0"),
            ));
        }
        if g >= 1.0 {
            return Err(Error::violation(
                Condition::A5,
                format!("schedule exponent γ = {g} does not satisfy |Λ_n| b_n → ∞"),
            ));
        }
        let limit = 1.0 / (2.0 * beta + 1.0);
        if g * (2.0 * beta + 1.0) >= 1.0 - 1e-12 {
            return Err(Error::violation(
                Condition::A5,
                format!(
                    "schedule exponent γ = {g} does not satisfy |Λ_n| b_n^{{2β+1}} → ∞ \
                     (β = {beta} requires γ < {limit})"
                ),
            ));
        }
        Ok(())
    }
}

/// `I₂(β) = ∫|t|^{2β} φ_K²` and `I₁(β) = ∫|t|^β |φ_K|` over `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelMoments {
    pub beta: f64,
    pub i2: f64,
    pub i1: f64,
}

impl KernelMoments {
    /// Closed forms: for `(1 − t²)^m` the substitution `u = t²` gives
    /// `I₂ = B(β + ½, 2m + 1)` and `I₁ = B((β+1)/2, m + 1)`.
    pub fn new(kernel: DeconvKernel, beta: f64) -> Result<Self> {
        kernel.validate()?;
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::invalid(format!("β must be nonnegative, got {beta}")));
        }
        let (i2, i1) = match kernel {
            DeconvKernel::Indicator => (2.0 / (2.0 * beta + 1.0), 2.0 / (beta + 1.0)),
            DeconvKernel::Polynomial { order } => {
                let m = order as f64;
                (beta_fn(beta + 0.5, 2.0 * m + 1.0), beta_fn((beta + 1.0) / 2.0, m + 1.0))
            }
        };
        Ok(Self { beta, i2, i1 })
    }

    /// Same moments by composite Gauss–Legendre; used as a cross-check.
    /// Integrates in `s = √t` so half-integer powers stay smooth.
    pub fn by_quadrature(kernel: DeconvKernel, beta: f64) -> Result<Self> {
        kernel.validate()?;
        let rule = GaussLegendre::new(64);
        let moment = |power: f64, f: &dyn Fn(f64) -> f64| {
            4.0 * rule.integrate_composite(0.0, 1.0, 64, |s| s.powf(2.0 * power + 1.0) * f(s * s))
        };
        let i2 = moment(2.0 * beta, &|t| kernel.phi(t).powi(2));
        let i1 = moment(beta, &|t| kernel.phi(t).abs());
        Ok(Self { beta, i2, i1 })
    }
}

fn check_limit_constant(b_const: f64) -> Result<()> {
    if !(b_const > 0.0 && b_const.is_finite()) {
        return Err(Error::invalid(format!("limit constant B must be positive, got {b_const}")));
    }
    Ok(())
}

/// `I₂(β) / (2π B²)`, the limit of `b^{2β} ∫ g_n²`.
pub fn variance_constant(kernel: DeconvKernel, beta: f64, b_const: f64) -> Result<f64> {
    check_limit_constant(b_const)?;
    Ok(KernelMoments::new(kernel, beta)?.i2 / (2.0 * PI * b_const * b_const))
}

/// Asymptotic variance `σ²(x) = f_Y(x) · I₂(β) / (2π B²)` of
/// `(|Λ| b^{2β+1})^{1/2} f̂_n(x)`.
pub fn sigma2(fy_at_x: f64, kernel: DeconvKernel, beta: f64, b_const: f64) -> Result<f64> {
    if !(fy_at_x >= 0.0 && fy_at_x.is_finite()) {
        return Err(Error::invalid(format!("f_Y(x) must be nonnegative, got {fy_at_x}")));
    }
    Ok(fy_at_x * variance_constant(kernel, beta, b_const)?)
}

/// Variance of `λ₁ Z(x) + λ₂ Z(y)` in the joint limit, `λ₁² + λ₂² = 1`.
pub fn eta(
    lambda1: f64,
    lambda2: f64,
    fy_x: f64,
    fy_y: f64,
    kernel: DeconvKernel,
    beta: f64,
    b_const: f64,
) -> Result<f64> {
    let norm = lambda1 * lambda1 + lambda2 * lambda2;
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!("λ₁² + λ₂² must equal 1, got {norm}")));
    }
    if !(fy_x >= 0.0 && fy_y >= 0.0) {
        return Err(Error::invalid("f_Y values must be nonnegative"));
    }
    let mix = lambda1 * lambda1 * fy_x + lambda2 * lambda2 * fy_y;
    Ok(mix * variance_constant(kernel, beta, b_const)?)
}

/// `(|Λ| b^{2β+1})^{1/2} (f̂ − E f̂) / σ`.
pub fn standardize(fhat: f64, efhat: f64, n_sites: usize, b: f64, beta: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("σ must be positive, got {sigma}")));
    }
    if !(b > 0.0) {
        return Err(Error::invalid(format!("bandwidth must be positive, got {b}")));
    }
    if n_sites == 0 {
        return Err(Error::invalid("region must contain at least one site"));
    }
    let scale = (n_sites as f64 * b.powf(2.0 * beta + 1.0)).sqrt();
    Ok(scale * (fhat - efhat) / sigma)
}

fn check_open_unit(b: f64) -> Result<()> {
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::invalid(format!("bandwidth must lie in (0, 1), got {b}")));
    }
    Ok(())
}

/// `v_n = [b^{-1/(2d)}]`.
pub fn v_n(b: f64, d: usize) -> u64 {
    int_part(b.powf(-1.0 / (2.0 * d as f64)))
}

/// `m_{n,τ} = max{v_n, [(b^{-1} Σ_{|i|>v_n} |i|^d α(|i|))^{1/d}] + 1}`.
pub fn m_seq_mixing(b: f64, mixing: &MixingProfile, d: usize) -> Result<u64> {
    check_open_unit(b)?;
    let v = v_n(b, d);
    let tail = mixing.lattice_tail(d, v);
    if !tail.is_finite() {
        return Err(Error::violation(
            Condition::MixingSummability,
            "Σ |i|^d α(|i|) diverges, the blocking sequence is undefined",
        ));
    }
    let inner = int_part((tail / b).powf(1.0 / d as f64)) + 1;
    Ok(v.max(inner))
}

/// `m_n = max{v_n, [(b^{-3} Σ_{|i|>v_n} |i|^{5d/2} δ_i)^{1/(3d)}] + 1}`.
pub fn m_seq_dependence(b: f64, profile: &DependenceProfile, d: usize) -> Result<u64> {
    check_open_unit(b)?;
    let v = v_n(b, d);
    let tail = profile.weighted_tail(d, 2.5 * d as f64, v);
    if !tail.is_finite() {
        return Err(Error::violation(
            Condition::DependenceSummability,
            "Σ |i|^{5d/2} δ_i diverges, the blocking sequence is undefined",
        ));
    }
    let inner = int_part((tail / b.powi(3)).powf(1.0 / (3.0 * d as f64))) + 1;
    Ok(v.max(inner))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LemmaProfile {
    Mixing(MixingProfile),
    Dependence(DependenceProfile),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaRow {
    pub n: f64,
    pub b: f64,
    /// `None` when the tail sum diverges.
    pub m: Option<u64>,
    pub m_d_b: f64,
    pub tail_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub rows: Vec<LemmaRow>,
    pub threshold: f64,
    pub m_increasing: bool,
    pub m_d_b_decreasing: bool,
    pub m_d_b_below_threshold: bool,
    pub tail_vanishing: bool,
}

impl LemmaReport {
    pub fn converged(&self) -> bool {
        self.m_increasing && self.m_d_b_decreasing && self.m_d_b_below_threshold && self.tail_vanishing
    }
}

/// Evaluates the three quantities of the blocking lemmas along `n_list`.
///
/// Mixing: `m`, `m^d b`, `Σ_{|i|>m} |i|^d α(|i|) / (m^d b)`.
/// Dependence: `m`, `m^d b`, `Σ_{|i|>m} |i|^{5d/2} δ_i / (m^d b)^{3/2}`.
/// A trend passes when the last value is below `threshold` times the first.
pub fn check_lemma_limits(
    schedule: &BandwidthSchedule,
    profile: &LemmaProfile,
    d: usize,
    n_list: &[f64],
    threshold: f64,
) -> Result<LemmaReport> {
    if n_list.len() < 4 {
        return Err(Error::invalid("lemma checks need at least four sizes"));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("lemma sizes must be strictly increasing"));
    }
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let b = schedule.constant * n.powf(-schedule.exponent);
        let m = match profile {
            LemmaProfile::Mixing(p) => m_seq_mixing(b, p, d),
            LemmaProfile::Dependence(p) => m_seq_dependence(b, p, d),
        };
        let m = match m {
            Ok(m) => Some(m),
            Err(e) if e.condition().is_some() => None,
            Err(e) => return Err(e),
        };
        let (m_d_b, tail_ratio) = match m {
            Some(m) => {
                let mdb = (m as f64).powi(d as i32) * b;
                let ratio = match profile {
                    LemmaProfile::Mixing(p) => p.lattice_tail(d, m) / mdb,
                    LemmaProfile::Dependence(p) => p.weighted_tail(d, 2.5 * d as f64, m) / mdb.powf(1.5),
                };
                // `+ 0.0` turns a −0 tail into +0
                (mdb, ratio + 0.0)
            }
            None => (f64::INFINITY, f64::INFINITY),
        };
        rows.push(LemmaRow { n, b, m, m_d_b, tail_ratio });
    }
    let first = &rows[0];
    let last = &rows[rows.len() - 1];
    let all_defined = rows.iter().all(|r| r.m.is_some());
    let m_increasing = all_defined
        && rows.windows(2).all(|w| w[1].m >= w[0].m)
        && last.m > first.m;
    let m_d_b_decreasing = all_defined && last.m_d_b < first.m_d_b;
    let m_d_b_below_threshold = all_defined && last.m_d_b < threshold * first.m_d_b;
    let tail_vanishing = all_defined
        && (rows.iter().all(|r| r.tail_ratio == 0.0) || last.tail_ratio < threshold * first.tail_ratio);
    Ok(LemmaReport {
        rows,
        threshold,
        m_increasing,
        m_d_b_decreasing,
        m_d_b_below_threshold,
        tail_vanishing,
    })
}

/// `∫_ℝ |f|` for an even function decaying at least like `|u|^{-3}`,
/// by 16-point panels of width `1/2` on `[0, z_max]`.
fn even_abs_integral<F: Fn(f64) -> f64 + Sync>(f: F, z_max: f64) -> f64 {
    use rayon::prelude::*;
    let rule = GaussLegendre::new(16);
    let panels = (2.0 * z_max).ceil() as usize;
    let w = z_max / panels as f64;
    let s: f64 = (0..panels)
        .into_par_iter()
        .map(|p| {
            let a = p as f64 * w;
            rule.integrate(a, a + w, |u| f(u).abs())
        })
        .sum();
    2.0 * s
}

const ABS_INTEGRAL_RANGE: f64 = 2000.0;

/// Scaled integrals of `g_n` and their `b → 0` limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlancherelCheck {
    pub b: f64,
    /// `b^{2β} ∫ g_n²`.
    pub l2_scaled: f64,
    /// `I₂ / (2π B²)`.
    pub l2_limit: f64,
    /// `b^β ∫ |g_n|`.
    pub l1_scaled: f64,
    /// `∫ |h|` with `h(u) = (2π B)^{-1} ∫ e^{-itu} |t|^β φ_K(t) dt`.
    pub l1_limit: f64,
    /// `I₁ / B`, the frequency-side expression; an upper bound for `2π ∫|h|`
    /// only, not the limit of `b^β ∫|g_n|`.
    pub l1_frequency_side: f64,
}

impl PlancherelCheck {
    pub fn l2_gap(&self) -> f64 {
        (self.l2_scaled - self.l2_limit).abs() / self.l2_limit
    }

    pub fn l1_gap(&self) -> f64 {
        (self.l1_scaled - self.l1_limit).abs() / self.l1_limit
    }
}

/// `∫ |h|` for the limit profile `h` of `b^β g_n`.
pub fn l1_limit(kernel: DeconvKernel, beta: f64, b_const: f64) -> Result<f64> {
    check_limit_constant(b_const)?;
    kernel.validate()?;
    let rule = GaussLegendre::new(1024);
    let (nodes, coef): (Vec<f64>, Vec<f64>) = rule
        .mapped(0.0, 1.0)
        .map(|(t, w)| (t, w * t.powf(beta) * kernel.phi(t) / (PI * b_const)))
        .unzip();
    Ok(even_abs_integral(
        |u| nodes.iter().zip(&coef).map(|(t, c)| c * (t * u).cos()).sum(),
        ABS_INTEGRAL_RANGE,
    ))
}

pub fn plancherel_check(kernel: DeconvKernel, noise: NoiseModel, b: f64) -> Result<PlancherelCheck> {
    let beta = noise.beta();
    let big_b = noise.limit_constant();
    let table = GnTable::new(kernel, noise, b)?;
    // ∫ g² = (2π)^{-1} ∫ |φ_K(t) / φ_θ(t/b)|² dt, even in t
    let rule = GaussLegendre::new(1024);
    let freq = rule.integrate(0.0, 1.0, |t| table.spectral_ratio(t).powi(2)) / PI;
    let l1 = even_abs_integral(|u| table.eval(u), ABS_INTEGRAL_RANGE);
    let moments = KernelMoments::new(kernel, beta)?;
    Ok(PlancherelCheck {
        b,
        l2_scaled: b.powf(2.0 * beta) * freq,
        l2_limit: variance_constant(kernel, beta, big_b)?,
        l1_scaled: b.powf(beta) * l1,
        l1_limit: l1_limit(kernel, beta, big_b)?,
        l1_frequency_side: moments.i1 / big_b,
    })
}
