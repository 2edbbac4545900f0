//! Physical dependence measures `δ_{i,p}` and α-mixing profiles, and the
//! summability conditions built on them.
//!
//! Lattice sums over `{|i| > v}` are computed shell by shell: the sup-norm
//! sphere of radius `m ≥ 1` in `ℤ^d` has exactly `(2m+1)^d − (2m−1)^d` sites.

use serde::{Deserialize, Serialize};

use super::{InnovationSpec, LinearFieldSpec, VolterraFieldSpec};
use crate::error::{Error, Result};
use crate::lattice::Site;

/// Number of sites at sup-distance exactly `m` from the origin.
pub fn shell_count(d: usize, m: u64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    let m = m as f64;
    (2.0 * m + 1.0).powi(d as i32) - (2.0 * m - 1.0).powi(d as i32)
}

/// `(exponent, coefficient)` terms of the shell count as a polynomial in `m`.
fn shell_polynomial(d: usize) -> Vec<(f64, f64)> {
    // (2m+1)^d − (2m−1)^d keeps the terms where d − j is odd, doubled
    let mut binom = 1.0;
    let mut terms = Vec::new();
    for j in 0..=d {
        if (d - j) % 2 == 1 {
            terms.push((j as f64, 2.0 * binom * 2f64.powi(j as i32)));
        }
        binom = binom * (d - j) as f64 / (j + 1) as f64;
    }
    terms
}

const EXPLICIT_TERMS: u64 = 2000;

/// `Σ_{m > v} shell(m) · m^k · c · m^{-r}`, or `+∞` when it diverges.
///
/// The first terms are summed directly; the remainder uses Euler–Maclaurin
/// on the expanded power series, which at this depth is exact to double
/// precision.
pub(crate) fn power_shell_tail(d: usize, k: f64, c: f64, r: f64, v: u64) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    if r <= d as f64 + k {
        return f64::INFINITY;
    }
    let term = |m: u64| shell_count(d, m) * (m as f64).powf(k - r) * c;
    let last = v + EXPLICIT_TERMS;
    let mut sum = 0.0;
    for m in v + 1..=last {
        sum += term(m);
    }
    let big_m = last as f64;
    let mut tail = 0.0;
    for (j, a) in shell_polynomial(d) {
        let e = j + k - r;
        let a = a * c;
        let integral = -big_m.powf(e + 1.0) / (e + 1.0);
        let f = big_m.powf(e);
        let f1 = e * big_m.powf(e - 1.0);
        let f3 = e * (e - 1.0) * (e - 2.0) * big_m.powf(e - 3.0);
        tail += a * (integral - 0.5 * f - f1 / 12.0 + f3 / 720.0);
    }
    sum + tail
}

/// `Σ_{m=lo+1}^{hi} shell(m) · m^k · c · m^{-r}`.
fn power_shell_range(d: usize, k: f64, c: f64, r: f64, lo: u64, hi: u64) -> f64 {
    (lo + 1..=hi)
        .map(|m| shell_count(d, m) * (m as f64).powf(k - r) * c)
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DependenceKind {
    /// `δ_i` listed explicitly; zero at every other site.
    Finite(Vec<(Site, f64)>),
    /// `δ_i = c · max(|i|, 1)^{-r}`, set to zero beyond `cutoff` if given.
    PowerDecay {
        constant: f64,
        exponent: f64,
        cutoff: Option<u64>,
    },
}

/// Evaluator `i ↦ δ_{i,p}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DependenceProfile {
    pub p: u32,
    pub kind: DependenceKind,
    /// False when the values are upper bounds rather than exact norms.
    pub exact: bool,
}

impl DependenceProfile {
    pub fn power_decay(p: u32, constant: f64, exponent: f64, cutoff: Option<u64>) -> Self {
        Self {
            p,
            kind: DependenceKind::PowerDecay {
                constant,
                exponent,
                cutoff,
            },
            exact: true,
        }
    }

    pub fn zero(p: u32) -> Self {
        Self {
            p,
            kind: DependenceKind::Finite(Vec::new()),
            exact: true,
        }
    }

    pub fn delta(&self, site: &Site) -> f64 {
        match &self.kind {
            DependenceKind::Finite(v) => v
                .iter()
                .filter(|(s, _)| s == site)
                .map(|(_, d)| *d)
                .sum(),
            DependenceKind::PowerDecay {
                constant,
                exponent,
                cutoff,
            } => {
                let n = site.norm();
                if cutoff.is_some_and(|c| n > c) {
                    0.0
                } else {
                    constant * (n.max(1) as f64).powf(-exponent)
                }
            }
        }
    }

    /// `Σ_{|i| > v} |i|^k δ_i` in dimension `d`.
    pub fn weighted_tail(&self, d: usize, k: f64, v: u64) -> f64 {
        match &self.kind {
            DependenceKind::Finite(vals) => vals
                .iter()
                .filter(|(s, _)| s.norm() > v)
                .map(|(s, dv)| (s.norm() as f64).powf(k) * dv)
                .sum(),
            DependenceKind::PowerDecay {
                constant,
                exponent,
                cutoff,
            } => match cutoff {
                Some(c) if *c <= v => 0.0,
                Some(c) => power_shell_range(d, k, *constant, *exponent, v, *c),
                None => power_shell_tail(d, k, *constant, *exponent, v),
            },
        }
    }
}

/// Exact `δ_{i,p} = |a_i| · ‖ε₀ − ε₀'‖_p`.
pub fn dependence_linear(spec: &LinearFieldSpec, p: u32) -> Result<DependenceProfile> {
    if p < 1 {
        return Err(Error::invalid("moment order p must be at least 1"));
    }
    let norm = spec.innovations.coupling_norm(p)?;
    if let Some(decay) = spec.decay {
        return Ok(DependenceProfile::power_decay(
            p,
            norm * decay.constant.abs(),
            decay.exponent,
            None,
        ));
    }
    let vals = spec
        .coefficients
        .iter()
        .filter(|(_, a)| *a != 0.0)
        .map(|(s, a)| (s.clone(), a.abs() * norm))
        .collect();
    Ok(DependenceProfile {
        p,
        kind: DependenceKind::Finite(vals),
        exact: true,
    })
}

/// Rosenthal-type constant in the Volterra bound. Any valid constant works
/// for summability; `C_p = p` covers the shipped orders.
pub fn volterra_rosenthal_constant(p: u32) -> f64 {
    p as f64
}

/// Upper bound `δ_{i,p} ≤ C_p A_i^{1/2} ‖ε₀‖₂ ‖ε₀‖_p + C_p B_i^{1/p} ‖ε₀‖_p²`.
pub fn dependence_volterra(spec: &VolterraFieldSpec, p: u32) -> Result<DependenceProfile> {
    if p < 2 {
        return Err(Error::Unsupported(format!(
            "Volterra dependence bound needs p >= 2, got {p}"
        )));
    }
    let n2 = spec.innovations.abs_moment_norm(2)?;
    let np = spec.innovations.abs_moment_norm(p)?;
    let cp = volterra_rosenthal_constant(p);
    let mut sites: Vec<Site> = spec
        .coefficients
        .iter()
        .filter(|(_, a)| *a != 0.0)
        .flat_map(|((s1, s2), _)| [s1.clone(), s2.clone()])
        .collect();
    sites.sort();
    sites.dedup();
    let vals = sites
        .into_iter()
        .map(|i| {
            let (a, b) = volterra_ab(spec, &i, p);
            let bound = cp * a.sqrt() * n2 * np + cp * b.powf(1.0 / p as f64) * np * np;
            (i, bound)
        })
        .collect();
    Ok(DependenceProfile {
        p,
        kind: DependenceKind::Finite(vals),
        exact: false,
    })
}

/// `A_i = Σ a²_{s,i} + Σ a²_{i,s}` and `B_i = Σ |a_{s,i}|^p + Σ |a_{i,s}|^p`.
pub fn volterra_ab(spec: &VolterraFieldSpec, i: &Site, p: u32) -> (f64, f64) {
    let mut a = 0.0;
    let mut b = 0.0;
    for ((s1, s2), c) in &spec.coefficients {
        if s2 == i {
            a += c * c;
            b += c.abs().powi(p as i32);
        }
        if s1 == i {
            a += c * c;
            b += c.abs().powi(p as i32);
        }
    }
    (a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Summability {
    Finite,
    Infinite,
    /// The profile does not describe the coefficient the condition asks for.
    Unverified,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummabilityReport {
    pub verdict: Summability,
    /// `(cutoff, partial sum over |i| ≤ cutoff)`.
    pub partial_sums: Vec<(u64, f64)>,
    /// True when the last partial sum is the full sum.
    pub exact: bool,
}

impl SummabilityReport {
    pub fn is_finite(&self) -> bool {
        self.verdict == Summability::Finite
    }
}

/// `Σ_{i ∈ ℤ^d} |i|^{5d/2} δ_i < ∞`.
///
/// Finite profiles are summed exactly. For power-law profiles the verdict
/// is analytic (`r > 5d/2 + d`) and the partial sum runs to `cutoff`.
pub fn check_dependence_summability(
    profile: &DependenceProfile,
    d: usize,
    cutoff: u64,
) -> SummabilityReport {
    let k = 2.5 * d as f64;
    let cutoff = cutoff.max(1);
    match &profile.kind {
        DependenceKind::Finite(_) => SummabilityReport {
            verdict: Summability::Finite,
            partial_sums: vec![(cutoff, profile.weighted_tail(d, k, 0))],
            exact: true,
        },
        DependenceKind::PowerDecay {
            constant,
            exponent,
            cutoff: support,
        } => {
            let finite = *constant == 0.0 || *exponent > k + d as f64;
            let mut partial_sums = Vec::new();
            let mut c = 10u64.min(cutoff);
            loop {
                let hi = support.map_or(c, |s| s.min(c));
                partial_sums.push((c, power_shell_range(d, k, *constant, *exponent, 0, hi)));
                if c >= cutoff {
                    break;
                }
                c = (c * 10).min(cutoff);
            }
            SummabilityReport {
                verdict: if finite {
                    Summability::Finite
                } else {
                    Summability::Infinite
                },
                partial_sums,
                exact: false,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingTau {
    One,
    Infinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MixingKind {
    /// `α(m) ≤ 1/4` for `m ≤ range`, zero beyond.
    MDependent { range: u64 },
    /// `α(m) = c · m^{-q}` with `c ≤ 1/4`.
    Polynomial { constant: f64, exponent: f64 },
}

/// Evaluator `m ↦ α_{1,τ}(m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingProfile {
    #[serde(flatten)]
    pub kind: MixingKind,
    pub tau: MixingTau,
}

impl MixingProfile {
    /// An `m`-dependent field: both `α_{1,1}` and `α_{1,∞}` vanish beyond `range`.
    pub fn m_dependent(range: u64) -> Self {
        Self {
            kind: MixingKind::MDependent { range },
            tau: MixingTau::Infinity,
        }
    }

    pub fn polynomial(constant: f64, exponent: f64, tau: MixingTau) -> Result<Self> {
        if !(constant > 0.0 && constant <= 0.25) {
            return Err(Error::invalid("mixing constant must lie in (0, 1/4]"));
        }
        if !(exponent > 0.0) {
            return Err(Error::invalid("mixing decay exponent must be positive"));
        }
        Ok(Self {
            kind: MixingKind::Polynomial { constant, exponent },
            tau,
        })
    }

    pub fn alpha(&self, m: u64) -> f64 {
        match self.kind {
            MixingKind::MDependent { range } => {
                if m <= range {
                    0.25
                } else {
                    0.0
                }
            }
            MixingKind::Polynomial { constant, exponent } => {
                if m == 0 {
                    0.25
                } else {
                    constant * (m as f64).powf(-exponent)
                }
            }
        }
    }

    /// `Σ_{|i| > v} |i|^d α(|i|)` in dimension `d`.
    pub fn lattice_tail(&self, d: usize, v: u64) -> f64 {
        match self.kind {
            MixingKind::MDependent { range } => (v + 1..=range)
                .map(|m| shell_count(d, m) * (m as f64).powi(d as i32) * 0.25)
                .sum(),
            MixingKind::Polynomial { constant, exponent } => {
                power_shell_tail(d, d as f64, constant, exponent, v)
            }
        }
    }
}

/// `Σ_m m^{2d-1} α_{1,τ}(m) < ∞`.
pub fn check_mixing_summability(profile: &MixingProfile, d: usize, tau: MixingTau) -> SummabilityReport {
    let k = 2 * d as i32 - 1;
    let partial = |cutoff: u64| -> f64 {
        (1..=cutoff)
            .map(|m| (m as f64).powi(k) * profile.alpha(m))
            .sum()
    };
    let cutoffs = [10u64, 100, 1000, 10_000];
    match profile.kind {
        MixingKind::MDependent { range } => SummabilityReport {
            verdict: Summability::Finite,
            partial_sums: cutoffs
                .iter()
                .map(|&c| (c, partial(c.min(range.max(1)))))
                .chain(std::iter::once((range, partial(range))))
                .collect(),
            exact: true,
        },
        MixingKind::Polynomial { exponent, .. } => {
            let verdict = if profile.tau == MixingTau::One && tau == MixingTau::Infinity {
                Summability::Unverified
            } else if exponent > 2.0 * d as f64 {
                Summability::Finite
            } else {
                Summability::Infinite
            };
            SummabilityReport {
                verdict,
                partial_sums: cutoffs.iter().map(|&c| (c, partial(c))).collect(),
                exact: false,
            }
        }
    }
}

impl InnovationSpec {
    /// Whether `‖ε₀ − ε₀'‖_p` is available in closed form.
    pub fn supports_order(&self, p: u32) -> bool {
        self.coupling_norm(p).is_ok()
    }
}
