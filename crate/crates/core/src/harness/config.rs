use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{check_lemma_limits, BandwidthSchedule, LemmaProfile, LemmaReport};
use crate::deconv::DeconvKernel;
use crate::error::{Condition, Error, Result};
use crate::field::{
    check_dependence_summability, check_mixing_summability, DependenceProfile, FieldModel, FieldSpec, MixingProfile,
    MixingTau, NoiseModel, NoiseSpec, Summability, SummabilityReport,
};
use crate::lattice::{check_region_sequence, LatticeRegion, RegionSequenceReport, RegionSpec};

pub const SCHEMA_VERSION: u32 = 1;
/// Smallest replicate count accepted for normality testing.
pub const MIN_REPLICATES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Theorem {
    Mixing,
    Dependence,
}

/// Which verdicts decide the outcome of a run, evaluated on the largest region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Checks {
    /// Every point must have a KS p-value above this level.
    pub ks_alpha: Option<f64>,
    /// `|ρ̂|` bound for off-diagonal correlations; `None` uses `3/√R + 0.05`.
    pub diagonality_threshold: Option<f64>,
    pub check_diagonality: bool,
    /// Accepted range for the variance-scaling ratio.
    pub variance_band: Option<(f64, f64)>,
    /// Largest accepted `|mean f̂ − f_X|`; also requires a decreasing gap.
    pub bias_tolerance: Option<f64>,
    /// Trend threshold for the blocking-lemma diagnostics.
    pub lemma_threshold: f64,
}

impl Default for Checks {
    fn default() -> Self {
        Self {
            ks_alpha: Some(0.01),
            diagonality_threshold: None,
            check_diagonality: true,
            variance_band: None,
            bias_tolerance: None,
            lemma_threshold: 0.2,
        }
    }
}

fn default_kernel() -> DeconvKernel {
    DeconvKernel::default()
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

/// One Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub field: FieldSpec,
    pub noise: NoiseSpec,
    #[serde(default = "default_kernel")]
    pub kernel: DeconvKernel,
    pub regions: Vec<RegionSpec>,
    pub schedule: BandwidthSchedule,
    pub points: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
    pub theorem: Theorem,
    /// Declared mixing profile, replacing the one implied by the field.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixing_profile: Option<MixingProfile>,
    /// `f_Y` at each point, replacing the computed values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fy: Option<Vec<f64>>,
    /// Sites in the reference sample used when `f_Y` has no closed form.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fy_sample_sites: Option<usize>,
    #[serde(default)]
    pub checks: Checks,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Builds every component and checks all admissibility conditions.
    pub fn validate(&self) -> Result<Experiment> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::invalid(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let model = self.field.build()?;
        let noise = self.noise.build()?;
        self.kernel.validate()?;
        let d = model.dimension();

        if self.regions.is_empty() {
            return Err(Error::invalid("at least one region is required"));
        }
        let regions = self
            .regions
            .iter()
            .map(|spec| {
                if spec.dimension() != d {
                    return Err(Error::invalid(format!(
                        "region dimension {} differs from field dimension {d}",
                        spec.dimension()
                    )));
                }
                Ok(Arc::new(spec.build()?))
            })
            .collect::<Result<Vec<_>>>()?;

        validate_points(&self.points)?;
        if self.replicates < MIN_REPLICATES {
            return Err(Error::invalid(format!(
                "replicates = {} is below the minimum of {MIN_REPLICATES} for normality tests",
                self.replicates
            )));
        }
        if let Some(fy) = &self.fy {
            if fy.len() != self.points.len() {
                return Err(Error::invalid("fy must list one value per evaluation point"));
            }
            if fy.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::invalid("fy values must be finite and nonnegative"));
            }
        }
        if let Some((lo, hi)) = self.checks.variance_band {
            if !(lo < hi) {
                return Err(Error::invalid("variance_band must be an increasing pair"));
            }
        }

        let beta = noise.beta();
        self.schedule.validate(beta)?;

        let admissibility = match self.theorem {
            Theorem::Mixing => {
                let profile = match self.mixing_profile.or_else(|| model.mixing_profile()) {
                    Some(p) => p,
                    None => {
                        return Err(Error::Unsupported(
                            "field has no computable mixing profile; declare mixing_profile".into(),
                        ))
                    }
                };
                let report = check_mixing_summability(&profile, d, MixingTau::Infinity);
                match report.verdict {
                    Summability::Finite => {}
                    Summability::Infinite => {
                        return Err(Error::violation(
                            Condition::MixingSummability,
                            "Σ m^{2d-1} α_{1,∞}(m) diverges",
                        ))
                    }
                    Summability::Unverified => {
                        return Err(Error::violation(
                            Condition::MixingSummability,
                            "the declared profile bounds α_{1,1} only, the theorem needs α_{1,∞}",
                        ))
                    }
                }
                Admissibility::Mixing { profile, summability: report }
            }
            Theorem::Dependence => {
                let profile = model.dependence_profile(2)?;
                let report = check_dependence_summability(&profile, d, 10_000);
                if !report.is_finite() {
                    return Err(Error::violation(
                        Condition::DependenceSummability,
                        "Σ |i|^{5d/2} δ_{i,2} diverges",
                    ));
                }
                Admissibility::Dependence { profile, summability: report }
            }
        };

        Ok(Experiment {
            config: self.clone(),
            model,
            noise,
            regions,
            admissibility,
        })
    }
}

pub(crate) fn validate_points(points: &[f64]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::invalid("at least one evaluation point is required"));
    }
    if points.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("evaluation points must be finite"));
    }
    for (i, a) in points.iter().enumerate() {
        if points[..i].contains(a) {
            return Err(Error::violation(
                Condition::DistinctPoints,
                format!("evaluation point {a} appears more than once"),
            ));
        }
    }
    Ok(())
}

/// The admissibility condition verified for the configured theorem.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "theorem", rename_all = "lowercase")]
pub enum Admissibility {
    Mixing {
        profile: MixingProfile,
        summability: SummabilityReport,
    },
    Dependence {
        profile: DependenceProfile,
        summability: SummabilityReport,
    },
}

impl Admissibility {
    pub fn lemma_profile(&self) -> LemmaProfile {
        match self {
            Admissibility::Mixing { profile, .. } => LemmaProfile::Mixing(*profile),
            Admissibility::Dependence { profile, .. } => LemmaProfile::Dependence(profile.clone()),
        }
    }
}

/// A validated configuration with its components built.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub model: FieldModel,
    pub noise: NoiseModel,
    pub regions: Vec<Arc<LatticeRegion>>,
    pub admissibility: Admissibility,
}

/// Everything `check` reports without simulating.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub beta: f64,
    pub limit_constant: f64,
    pub bandwidths: Vec<(usize, f64)>,
    pub admissibility: Admissibility,
    pub lemma: LemmaReport,
    pub regions: RegionSequenceReport,
}

impl Experiment {
    pub fn dimension(&self) -> usize {
        self.model.dimension()
    }

    /// Bandwidth and blocking-lemma diagnostics along `|Λ| = 10², 10³, …`
    /// for as long as the schedule keeps `b < 1`, plus region-sequence
    /// diagnostics.
    pub fn check_report(&self) -> Result<CheckReport> {
        let schedule = self.config.schedule;
        let n_list: Vec<f64> = (2..=12)
            .map(|k| 10f64.powi(k))
            .filter(|&n| {
                let b = schedule.constant * n.powf(-schedule.exponent);
                b > 0.0 && b < 1.0
            })
            .collect();
        let lemma = check_lemma_limits(
            &schedule,
            &self.admissibility.lemma_profile(),
            self.dimension(),
            &n_list,
            self.config.checks.lemma_threshold,
        )?;
        let regions: Vec<LatticeRegion> = self.regions.iter().map(|r| (**r).clone()).collect();
        Ok(CheckReport {
            beta: self.noise.beta(),
            limit_constant: self.noise.limit_constant(),
            bandwidths: self
                .regions
                .iter()
                .map(|r| (r.len(), schedule.bandwidth(r.len())))
                .collect(),
            admissibility: self.admissibility.clone(),
            lemma,
            regions: check_region_sequence(&regions)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn base_json() -> serde_json::Value {
        serde_json::json!({
            "schema_version": 1,
            "field": {"model": "linear", "dimension": 2, "innovations": {"tag": "standard_normal"},
                      "coefficients": [{"site": [0, 0], "value": 0.6}, {"site": [1, 0], "value": 0.8}]},
            "noise": {"tag": "laplace", "scale": 1.0},
            "kernel": {"tag": "polynomial", "order": 3},
            "regions": [{"kind": "rect", "dimension": 2, "sides": [8, 8]},
                        {"kind": "rect", "dimension": 2, "sides": [12, 12]}],
            "schedule": {"constant": 1.0, "exponent": 0.125},
            "points": [0.0, 3.0],
            "replicates": 100,
            "seed": 7,
            "theorem": "mixing"
        })
    }

    fn parse(v: serde_json::Value) -> ExperimentConfig {
        serde_json::from_value(v).unwrap()
    }

    #[test]
    fn valid_config_builds() {
        let exp = parse(base_json()).validate().unwrap();
        assert_eq!(exp.regions.len(), 2);
        assert!(matches!(exp.admissibility, Admissibility::Mixing { .. }));
        let report = exp.check_report().unwrap();
        assert!(report.lemma.rows.len() >= 4);
        assert_eq!(report.beta, 2.0);
    }

    #[test]
    fn rejects_gaussian_noise() {
        let mut v = base_json();
        v["noise"] = serde_json::json!({"tag": "gaussian", "scale": 1.0});
        let e = parse(v).validate().unwrap_err();
        assert_eq!(e.condition(), Some(Condition::A3));
        assert!(e.to_string().contains("noise violates A3"));
    }

    #[test]
    fn rejects_duplicate_points() {
        let mut v = base_json();
        v["points"] = serde_json::json!([0.0, 1.0, 0.0]);
        let e = parse(v).validate().unwrap_err();
        assert_eq!(e.condition(), Some(Condition::DistinctPoints));
    }

    #[test]
    fn rejects_boundary_schedule() {
        let mut v = base_json();
        v["schedule"] = serde_json::json!({"constant": 1.0, "exponent": 0.2});
        let e = parse(v).validate().unwrap_err();
        assert_eq!(e.condition(), Some(Condition::A5));
        assert!(e.to_string().contains("does not satisfy |Λ_n| b_n^{2β+1} → ∞"));
    }

    #[test]
    fn rejects_divergent_dependence() {
        let mut v = base_json();
        v["theorem"] = serde_json::json!("dependence");
        v["field"] = serde_json::json!({"model": "linear", "dimension": 2, "innovations": {"tag": "standard_normal"},
                                        "decay": {"constant": 1.0, "exponent": 3.0, "radius": 4}});
        let e = parse(v).validate().unwrap_err();
        assert_eq!(e.condition(), Some(Condition::DependenceSummability));
        assert!(e.to_string().contains("condition (8)"));
    }

    #[test]
    fn rejects_small_replicate_count_and_bad_schema() {
        let mut v = base_json();
        v["replicates"] = serde_json::json!(20);
        assert!(parse(v).validate().is_err());
        let mut v = base_json();
        v["schema_version"] = serde_json::json!(9);
        assert!(parse(v).validate().is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut v = base_json();
        v["bogus"] = serde_json::json!(1);
        assert!(serde_json::from_value::<ExperimentConfig>(v).is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = parse(base_json());
        let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(c, back);
    }
}
