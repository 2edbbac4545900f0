use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{Experiment, ExperimentConfig, Theorem};
use super::stats::{correlation_matrix, ks_normality, mean, variance, KsResult};
use crate::asymptotics::{sigma2, standardize};
use crate::deconv::GnTable;
use crate::error::{Error, Result};
use crate::field::{add_noise, FieldModel, Marginal, NoiseModel};
use crate::lattice::{make_rect_region, RegionSpec, Site};
use crate::quadrature::GaussLegendre;
use crate::rng::SeedStream;

/// Sites in the reference sample when `f_Y` has no closed form.
pub const DEFAULT_FY_SAMPLE_SITES: usize = 10_000_000;
/// Replicate index of the reference-sample stream, clear of every run index.
const REFERENCE_REPLICATE: u64 = 1 << 60;

/// Where the `f_Y(x)` values behind `σ²(x)` came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FySource {
    /// `f_X ⋆ f_θ` by quadrature from the closed-form marginal.
    Convolution,
    /// Supplied in the configuration.
    Supplied,
    /// Gaussian-kernel estimate from one large simulated sample.
    ReferenceSample { sites: usize, bandwidth: f64, std_error: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSummary {
    pub x: f64,
    pub fy: f64,
    pub sigma2: f64,
    /// Replicate mean of `f̂_n(x)`, used for centering.
    pub mean_fhat: f64,
    pub var_fhat: f64,
    /// `|Λ| b^{2β+1} Var̂(f̂_n(x)) / σ²(x)`.
    pub variance_ratio: f64,
    pub f_x: Option<f64>,
    /// `mean f̂_n(x) − f_X(x)`.
    pub bias: Option<f64>,
    /// `E f̂_n(x)` by quadrature against `f_Y`.
    pub quadrature_mean: Option<f64>,
    /// `(mean − quadrature mean)` in standard errors of the replicate mean.
    pub centering_z: Option<f64>,
    pub ks: KsResult,
    pub standardized_mean: f64,
    pub standardized_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionReport {
    pub n_sites: usize,
    pub bandwidth: f64,
    pub points: Vec<PointSummary>,
    /// Correlations of the standardized statistics across points.
    pub correlations: Vec<Vec<f64>>,
    /// `fhat[r][j]` for replicate `r` and point `j`.
    #[serde(skip)]
    pub fhat: Vec<Vec<f64>>,
    #[serde(skip)]
    pub standardized: Vec<Vec<f64>>,
}

impl RegionReport {
    /// Standardized statistics of point `j` across replicates.
    pub fn standardized_at(&self, j: usize) -> Vec<f64> {
        self.standardized.iter().map(|r| r[j]).collect()
    }

    /// CSV `replicate,x,fhat,standardized`, one row per replicate and point.
    pub fn write_replicates_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "replicate,x,fhat,standardized")?;
        for (r, (f, z)) in self.fhat.iter().zip(&self.standardized).enumerate() {
            for (j, p) in self.points.iter().enumerate() {
                writeln!(w, "{r},{},{},{}", p.x, f[j], z[j])?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagonalityVerdict {
    pub threshold: f64,
    /// `(i, j, ρ̂_ij)` for `i < j`.
    pub pairs: Vec<(usize, usize, f64)>,
    pub max_abs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltReport {
    pub theorem: Theorem,
    pub replicates: usize,
    pub seed: u64,
    pub beta: f64,
    pub limit_constant: f64,
    pub fy_source: FySource,
    pub regions: Vec<RegionReport>,
    pub verdicts: Vec<Verdict>,
}

impl CltReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn largest(&self) -> &RegionReport {
        self.regions.last().expect("reports have at least one region")
    }

    /// `(|Λ|, variance ratio)` at point `j` along the region sequence.
    pub fn variance_curve(&self, j: usize) -> Vec<(usize, f64)> {
        self.regions.iter().map(|r| (r.n_sites, r.points[j].variance_ratio)).collect()
    }

    pub fn bias_rows(&self, j: usize) -> Option<Vec<BiasRow>> {
        self.regions
            .iter()
            .map(|r| {
                let p = &r.points[j];
                p.f_x.map(|f_x| BiasRow {
                    n_sites: r.n_sites,
                    bandwidth: r.bandwidth,
                    mean: p.mean_fhat,
                    f_x,
                    gap: (p.mean_fhat - f_x).abs(),
                })
            })
            .collect()
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasRow {
    pub n_sites: usize,
    pub bandwidth: f64,
    pub mean: f64,
    pub f_x: f64,
    pub gap: f64,
}

/// Breakpoints and half-width covering the mass of `f_X ⋆ f_θ`.
fn support_scale(marginal: &Marginal, noise: &NoiseModel) -> (f64, f64) {
    let sd_y = (marginal.sd().powi(2) + noise.variance()).sqrt();
    let fine = if noise.is_none() {
        marginal.sd()
    } else {
        marginal.sd().min(noise.variance().sqrt())
    };
    (16.0 * sd_y, fine)
}

/// `f_Y(x) = ∫ f_X(x − u) f_θ(u) du`, split at the kinks of both densities.
pub fn convolved_density(marginal: &Marginal, noise: &NoiseModel, x: f64) -> f64 {
    if noise.is_none() {
        return marginal.density(x);
    }
    let (half, fine) = support_scale(marginal, noise);
    let mut cuts = vec![-half, 0.0, half];
    cuts.extend(marginal.kinks().into_iter().map(|k| x - k));
    cuts.retain(|c| c.abs() <= half);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let rule = GaussLegendre::new(20);
    let f_theta = |u: f64| noise.density(u).unwrap_or(0.0);
    cuts.windows(2)
        .map(|w| {
            let panels = ((w[1] - w[0]) / (0.25 * fine)).ceil().max(1.0) as usize;
            rule.integrate_composite(w[0], w[1], panels, |u| marginal.density(x - u) * f_theta(u))
        })
        .sum()
}

/// `E f̂_n(x) = ∫ g_n(z) f_Y(x − b z) dz`.
pub fn quadrature_mean(table: &GnTable, marginal: &Marginal, noise: &NoiseModel, x: f64) -> f64 {
    let b = table.bandwidth();
    let (half, _) = support_scale(marginal, noise);
    let z_max = half / b;
    let panels = (2.0 * z_max).ceil() as usize;
    let rule = GaussLegendre::new(16);
    let w = 2.0 * z_max / panels as f64;
    (0..panels)
        .into_par_iter()
        .map(|p| {
            let a = -z_max + p as f64 * w;
            rule.integrate(a, a + w, |z| table.eval(z) * convolved_density(marginal, noise, x - b * z))
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum()
}

fn reference_fy(exp: &Experiment, sites: usize) -> Result<(Vec<f64>, FySource)> {
    let d = exp.dimension();
    let side = (sites as f64).powf(1.0 / d as f64).ceil() as usize;
    let region = Arc::new(make_rect_region(&vec![side; d], &Site::origin(d))?);
    let stream = SeedStream::new(exp.config.seed, REFERENCE_REPLICATE);
    let x = exp.model.simulate(&region, stream)?;
    let y = add_noise(&x, &exp.noise, stream);
    let v = y.values();
    let n = v.len() as f64;
    let sd = variance(v).sqrt();
    let h = 1.06 * sd * n.powf(-0.2);
    let norm = 1.0 / (h * (2.0 * std::f64::consts::PI).sqrt() * n);
    let fy: Vec<f64> = exp
        .config
        .points
        .iter()
        .map(|&x0| {
            v.par_iter()
                .map(|&yi| (-0.5 * ((x0 - yi) / h).powi(2)).exp())
                .sum::<f64>()
                * norm
        })
        .collect();
    // Gaussian-kernel roughness 1/(2√π)
    let rk = 0.5 / std::f64::consts::PI.sqrt();
    let std_error = fy.iter().map(|f| (f * rk / (n * h)).sqrt()).collect();
    Ok((
        fy,
        FySource::ReferenceSample {
            sites: v.len(),
            bandwidth: h,
            std_error,
        },
    ))
}

fn resolve_fy(exp: &Experiment, marginal: Option<&Marginal>) -> Result<(Vec<f64>, FySource)> {
    if let Some(fy) = &exp.config.fy {
        return Ok((fy.clone(), FySource::Supplied));
    }
    match marginal {
        Some(m) => Ok((
            exp.config
                .points
                .iter()
                .map(|&x| convolved_density(m, &exp.noise, x))
                .collect(),
            FySource::Convolution,
        )),
        None => reference_fy(exp, exp.config.fy_sample_sites.unwrap_or(DEFAULT_FY_SAMPLE_SITES)),
    }
}

fn replicate_stream(seed: u64, region: usize, replicate: usize) -> SeedStream {
    SeedStream::new(seed, ((region as u64) << 32) | replicate as u64)
}

fn simulate_estimates(
    model: &FieldModel,
    noise: &NoiseModel,
    table: &GnTable,
    region: &Arc<crate::lattice::LatticeRegion>,
    points: &[f64],
    seed: u64,
    region_index: usize,
    replicates: usize,
) -> Result<Vec<Vec<f64>>> {
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let stream = replicate_stream(seed, region_index, r);
            let x = model.simulate(region, stream)?;
            let y = add_noise(&x, noise, stream);
            Ok(points.iter().map(|&p| table.density_at(y.values(), p)).collect())
        })
        .collect()
}

/// Runs every region of a validated experiment.
pub fn run_validated(exp: &Experiment) -> Result<CltReport> {
    let cfg = &exp.config;
    let beta = exp.noise.beta();
    let big_b = exp.noise.limit_constant();
    let marginal = exp.model.marginal();
    let (fy, fy_source) = resolve_fy(exp, marginal.as_ref())?;
    let sigma2s = fy
        .iter()
        .map(|&f| sigma2(f, cfg.kernel, beta, big_b))
        .collect::<Result<Vec<f64>>>()?;
    if let Some(j) = sigma2s.iter().position(|&s| s <= 0.0) {
        return Err(Error::invalid(format!(
            "σ²(x) = 0 at x = {}: f_Y vanishes there and the statistic cannot be standardized",
            cfg.points[j]
        )));
    }

    let mut regions = Vec::with_capacity(exp.regions.len());
    for (ri, region) in exp.regions.iter().enumerate() {
        let n = region.len();
        let b = cfg.schedule.bandwidth(n);
        let table = GnTable::new(cfg.kernel, exp.noise, b)?;
        let fhat = simulate_estimates(&exp.model, &exp.noise, &table, region, &cfg.points, cfg.seed, ri, cfg.replicates)?;
        let k = cfg.points.len();
        let cols: Vec<Vec<f64>> = (0..k).map(|j| fhat.iter().map(|r| r[j]).collect()).collect();
        let means: Vec<f64> = cols.iter().map(|c| mean(c)).collect();
        let standardized = fhat
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(j, &f)| standardize(f, means[j], n, b, beta, sigma2s[j].sqrt()))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let scale = n as f64 * b.powf(2.0 * beta + 1.0);
        let mut points = Vec::with_capacity(k);
        for j in 0..k {
            let x = cfg.points[j];
            let var_fhat = variance(&cols[j]);
            let z: Vec<f64> = standardized.iter().map(|r| r[j]).collect();
            let f_x = marginal.map(|m| m.density(x));
            let quad = if cfg.fy.is_none() {
                marginal.map(|m| quadrature_mean(&table, &m, &exp.noise, x))
            } else {
                None
            };
            let se = (var_fhat / cfg.replicates as f64).sqrt();
            points.push(PointSummary {
                x,
                fy: fy[j],
                sigma2: sigma2s[j],
                mean_fhat: means[j],
                var_fhat,
                variance_ratio: scale * var_fhat / sigma2s[j],
                f_x,
                bias: f_x.map(|f| means[j] - f),
                quadrature_mean: quad,
                centering_z: quad.map(|q| (means[j] - q) / se),
                ks: ks_normality(&z)?,
                standardized_mean: mean(&z),
                standardized_variance: variance(&z),
            });
        }
        regions.push(RegionReport {
            n_sites: n,
            bandwidth: b,
            correlations: correlation_matrix(&standardized),
            points,
            fhat,
            standardized,
        });
    }

    let mut report = CltReport {
        theorem: cfg.theorem,
        replicates: cfg.replicates,
        seed: cfg.seed,
        beta,
        limit_constant: big_b,
        fy_source,
        regions,
        verdicts: Vec::new(),
    };
    report.verdicts = verdicts(cfg, &report)?;
    Ok(report)
}

fn verdicts(cfg: &ExperimentConfig, report: &CltReport) -> Result<Vec<Verdict>> {
    let checks = &cfg.checks;
    let last = report.largest();
    let mut out = Vec::new();
    if let Some(alpha) = checks.ks_alpha {
        for p in &last.points {
            out.push(Verdict {
                name: format!("ks x={}", p.x),
                pass: p.ks.p_value > alpha,
                detail: format!("D = {:.5}, p = {:.5}, level {alpha}", p.ks.statistic, p.ks.p_value),
            });
        }
    }
    if checks.check_diagonality && last.points.len() >= 2 {
        let d = joint_diagonality(report, checks.diagonality_threshold)?;
        out.push(Verdict {
            name: "diagonality".into(),
            pass: d.pass,
            detail: format!("max |ρ̂| = {:.5}, threshold {:.5}", d.max_abs, d.threshold),
        });
    }
    if let Some((lo, hi)) = checks.variance_band {
        for p in &last.points {
            out.push(Verdict {
                name: format!("variance ratio x={}", p.x),
                pass: p.variance_ratio >= lo && p.variance_ratio <= hi,
                detail: format!("ratio = {:.5}, band [{lo}, {hi}]", p.variance_ratio),
            });
        }
    }
    if let Some(tol) = checks.bias_tolerance {
        for (j, p) in last.points.iter().enumerate() {
            let rows = report.bias_rows(j).ok_or_else(|| {
                Error::Unsupported("bias check needs a field with a closed-form marginal".into())
            })?;
            let gaps: Vec<f64> = rows.iter().map(|r| r.gap).collect();
            let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
            let last_gap = *gaps.last().unwrap();
            out.push(Verdict {
                name: format!("bias x={}", p.x),
                pass: decreasing && last_gap < tol,
                detail: format!("gaps = {gaps:.5?}, tolerance {tol}"),
            });
        }
    }
    Ok(out)
}

/// Validates `config` and runs it.
pub fn run_experiment(config: &ExperimentConfig) -> Result<CltReport> {
    run_validated(&config.validate()?)
}

/// Off-diagonal correlations of the standardized statistics on the largest
/// region against `threshold` (default `3/√R + 0.05`).
pub fn joint_diagonality(report: &CltReport, threshold: Option<f64>) -> Result<DiagonalityVerdict> {
    let last = report.largest();
    let k = last.points.len();
    if k < 2 {
        return Err(Error::invalid("joint diagonality needs at least two points"));
    }
    let threshold = threshold.unwrap_or(3.0 / (report.replicates as f64).sqrt() + 0.05);
    let mut pairs = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            pairs.push((i, j, last.correlations[i][j]));
        }
    }
    let max_abs = pairs.iter().map(|p| p.2.abs()).fold(0.0, f64::max);
    Ok(DiagonalityVerdict {
        threshold,
        pairs,
        max_abs,
        pass: max_abs < threshold,
    })
}

fn with_regions(config: &ExperimentConfig, regions: &[RegionSpec]) -> Result<ExperimentConfig> {
    if regions.len() < 3 {
        return Err(Error::invalid("scaling curves need at least three regions"));
    }
    let sizes = regions.iter().map(|r| Ok(r.build()?.len())).collect::<Result<Vec<_>>>()?;
    if sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("region sizes must be increasing"));
    }
    let mut c = config.clone();
    c.regions = regions.to_vec();
    Ok(c)
}

/// `(|Λ|, |Λ| b^{2β+1} Var̂(f̂_n(x₁)) / σ²(x₁))` for each region.
pub fn variance_scaling_curve(config: &ExperimentConfig, regions: &[RegionSpec]) -> Result<Vec<(usize, f64)>> {
    let report = run_experiment(&with_regions(config, regions)?)?;
    Ok(report.variance_curve(0))
}

/// Replicate-mean estimate at `x₁` against `f_X(x₁)` for each region.
pub fn bias_curve(config: &ExperimentConfig, regions: &[RegionSpec]) -> Result<Vec<BiasRow>> {
    let c = with_regions(config, regions)?;
    let exp = c.validate()?;
    if exp.model.marginal().is_none() {
        return Err(Error::Unsupported("bias curve needs a field with a closed-form marginal".into()));
    }
    let report = run_validated(&exp)?;
    Ok(report.bias_rows(0).expect("marginal is closed-form"))
}
