use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gn::{GnTable, GN_NODES, Z_DIRECT_MAX};
use super::DeconvKernel;
use crate::error::{Error, Result};
use crate::field::{FieldSample, NoiseModel};
use crate::quadrature::GaussLegendre;

/// Above this many `g_n` evaluations (`|Λ| · |grid|`) the direct form
/// switches to an interpolated table.
pub const TABULATION_THRESHOLD: usize = 10_000_000;

/// Largest tolerated imaginary part left after the `±t` symmetrization.
const IMAG_RESIDUE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorForm {
    Direct,
    Cf,
}

impl EstimatorForm {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorForm::Direct => "direct",
            EstimatorForm::Cf => "cf",
        }
    }
}

impl std::str::FromStr for EstimatorForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(EstimatorForm::Direct),
            "cf" => Ok(EstimatorForm::Cf),
            other => Err(Error::invalid(format!("unknown estimator form '{other}' (expected direct or cf)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateMeta {
    pub n_sites: usize,
    pub bandwidth: f64,
    pub kernel: String,
    pub noise: String,
    pub form: EstimatorForm,
    /// Set when the direct form used an interpolated `g_n` table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tabulation_error: Option<f64>,
    /// Largest imaginary part seen by the characteristic-function form.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imag_residue: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub meta: EstimateMeta,
}

impl DensityEstimate {
    /// CSV with header `x,fhat,form,b,n_sites`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,fhat,form,b,n_sites")?;
        for (x, v) in self.grid.iter().zip(&self.values) {
            writeln!(
                w,
                "{x},{v},{},{},{}",
                self.meta.form.as_str(),
                self.meta.bandwidth,
                self.meta.n_sites
            )?;
        }
        Ok(())
    }

    /// Trapezoid rule over the grid.
    pub fn trapezoid_mass(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, v)| 0.5 * (x[1] - x[0]) * (v[0] + v[1]))
            .sum()
    }
}

fn check_inputs(y: &FieldSample, b: f64, grid: &[f64]) -> Result<()> {
    if y.is_empty() {
        return Err(Error::invalid("empty sample"));
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::invalid(format!("bandwidth must be positive, got {b}")));
    }
    if grid.is_empty() {
        return Err(Error::invalid("evaluation grid is empty"));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("evaluation grid contains non-finite points"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("evaluation grid must be strictly increasing"));
    }
    Ok(())
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// Direct-sum estimator `f̂(x) = (|Λ| b)^{-1} Σ_i g_n((x − Y_i)/b)`.
pub fn estimate_direct(
    y: &FieldSample,
    kernel: DeconvKernel,
    noise: NoiseModel,
    b: f64,
    grid: &[f64],
) -> Result<DensityEstimate> {
    check_inputs(y, b, grid)?;
    let mut table = GnTable::new(kernel, noise, b)?;
    if y.len().saturating_mul(grid.len()) > TABULATION_THRESHOLD {
        let (ylo, yhi) = min_max(y.values());
        let zmin = (grid[0] - yhi) / b;
        let zmax = (grid[grid.len() - 1] - ylo) / b;
        if zmax > zmin {
            table = table.tabulated(zmin, zmax)?;
        }
    }
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&x| table.density_at(y.values(), x))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("estimate produced non-finite values"));
    }
    Ok(DensityEstimate {
        grid: grid.to_vec(),
        values,
        meta: EstimateMeta {
            n_sites: y.len(),
            bandwidth: b,
            kernel: kernel.tag(),
            noise: noise.tag(),
            form: EstimatorForm::Direct,
            tabulation_error: table.tabulation_error(),
            imag_residue: None,
        },
    })
}

/// `φ̂(t) = |Λ|^{-1} Σ_i e^{i t Y_i}`.
pub fn empirical_cf(y: &FieldSample, t: f64) -> Complex64 {
    let n = y.len() as f64;
    let (s, c) = y
        .values()
        .iter()
        .fold((0.0, 0.0), |(s, c), &yi| {
            let (sn, cs) = (t * yi).sin_cos();
            (s + sn, c + cs)
        });
    Complex64::new(c / n, s / n)
}

/// Characteristic-function form
/// `f̂(x) = (2π)^{-1} ∫ e^{-itx} φ̂(t) φ_K(tb) / φ_θ(t) dt` over `|t| ≤ 1/b`.
pub fn estimate_cf_form(
    y: &FieldSample,
    kernel: DeconvKernel,
    noise: NoiseModel,
    b: f64,
    grid: &[f64],
) -> Result<DensityEstimate> {
    check_inputs(y, b, grid)?;
    kernel.validate()?;
    let (ylo, yhi) = min_max(y.values());
    let phase = (grid[grid.len() - 1] - ylo).abs().max((grid[0] - yhi).abs()) / b;
    let panels = ((phase / Z_DIRECT_MAX).ceil() as usize).max(1);
    let rule = GaussLegendre::new(GN_NODES);
    let width = 1.0 / panels as f64;
    // substitute t = s/b, s ∈ [0, 1], pairing +s with −s
    let nodes: Vec<(f64, f64)> = (0..panels)
        .flat_map(|p| {
            let a = p as f64 * width;
            rule.mapped(a, a + width).collect::<Vec<_>>()
        })
        .collect();
    let spectra: Vec<(f64, f64, Complex64, Complex64)> = nodes
        .par_iter()
        .map(|&(s, w)| {
            let t = s / b;
            let weight = w * kernel.phi(s) * noise.inverse_cf(t);
            (t, weight, empirical_cf(y, t), empirical_cf(y, -t))
        })
        .collect();
    let results: Vec<Complex64> = grid
        .par_iter()
        .map(|&x| {
            let acc: Complex64 = spectra
                .iter()
                .map(|&(t, weight, pos, neg)| {
                    let e = Complex64::from_polar(1.0, -t * x);
                    weight * (e * pos + e.conj() * neg)
                })
                .sum();
            acc / (2.0 * PI * b)
        })
        .collect();
    let residue = results.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    if residue > IMAG_RESIDUE_TOL {
        return Err(Error::invalid(format!(
            "characteristic-function form left imaginary residue {residue:e}"
        )));
    }
    let values: Vec<f64> = results.iter().map(|c| c.re).collect();
    Ok(DensityEstimate {
        grid: grid.to_vec(),
        values,
        meta: EstimateMeta {
            n_sites: y.len(),
            bandwidth: b,
            kernel: kernel.tag(),
            noise: noise.tag(),
            form: EstimatorForm::Cf,
            tabulation_error: None,
            imag_residue: Some(residue),
        },
    })
}
