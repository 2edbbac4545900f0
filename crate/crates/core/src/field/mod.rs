//! Latent fields `X`, noise fields `θ`, and the observed field `Y = X + θ`.

mod dependence;
mod innovation;
mod noise;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use dependence::{
    check_dependence_summability, check_mixing_summability, dependence_linear,
    dependence_volterra, shell_count, DependenceKind, DependenceProfile, MixingKind,
    MixingProfile, MixingTau, Summability, SummabilityReport,
};
pub use innovation::InnovationSpec;
pub use noise::{NoiseModel, NoiseSpec};

use crate::error::{Error, Result};
use crate::lattice::{LatticeRegion, Site};
use crate::rng::{SeedStream, StreamRole};

/// Real values indexed by the sites of a region, in the region's order.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    region: Arc<LatticeRegion>,
    values: Vec<f64>,
}

impl FieldSample {
    pub fn new(region: Arc<LatticeRegion>, values: Vec<f64>) -> Result<Self> {
        if values.len() != region.len() {
            return Err(Error::invalid(format!(
                "{} values for a region of {} sites",
                values.len(),
                region.len()
            )));
        }
        Ok(Self { region, values })
    }

    /// Sample with no lattice structure of interest: sites `0..n` on `ℤ`.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("sample is empty"));
        }
        let region = crate::lattice::make_rect_region(&[values.len()], &Site::origin(1))?;
        Self::new(Arc::new(region), values)
    }

    pub fn region(&self) -> &Arc<LatticeRegion> {
        &self.region
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// `X_i = Σ_s a_s ε_{i-s}` over a finite coefficient support.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFieldSpec {
    pub dimension: usize,
    pub coefficients: Vec<(Site, f64)>,
    pub innovations: InnovationSpec,
    /// Analytic description of an infinite-support field whose truncation
    /// is `coefficients`. Used only for summability checks.
    pub decay: Option<CoefficientDecay>,
}

/// Radial power-law coefficients `a_s = c · max(|s|, 1)^{-r}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientDecay {
    pub constant: f64,
    pub exponent: f64,
}

impl CoefficientDecay {
    pub fn coefficient(&self, s: &Site) -> f64 {
        self.constant * (s.norm().max(1) as f64).powf(-self.exponent)
    }
}

impl LinearFieldSpec {
    pub fn new(
        dimension: usize,
        coefficients: Vec<(Site, f64)>,
        innovations: InnovationSpec,
    ) -> Result<Self> {
        let spec = Self {
            dimension,
            coefficients,
            innovations,
            decay: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// i.i.d. field `X_i = ε_i`.
    pub fn iid(dimension: usize, innovations: InnovationSpec) -> Result<Self> {
        Self::new(dimension, vec![(Site::origin(dimension), 1.0)], innovations)
    }

    /// Truncates the power-law field at sup-radius `radius`. Returns the
    /// spec and the variance lost to truncation, `Σ_{|s|>R} a_s² · Var ε`.
    pub fn power_decay(
        dimension: usize,
        decay: CoefficientDecay,
        radius: u64,
        innovations: InnovationSpec,
    ) -> Result<(Self, f64)> {
        if !(decay.exponent > 0.0) {
            return Err(Error::invalid("decay exponent must be positive"));
        }
        let r = radius as i64;
        let side = (2 * r + 1) as usize;
        let cube = crate::lattice::make_rect_region(&vec![side; dimension], &Site(vec![-r; dimension]))?;
        let coefficients = cube
            .sites()
            .iter()
            .map(|s| (s.clone(), decay.coefficient(s)))
            .collect();
        let deficit = dependence::power_shell_tail(
            dimension,
            0.0,
            decay.constant * decay.constant,
            2.0 * decay.exponent,
            radius,
        ) * innovations.variance();
        let mut spec = Self::new(dimension, coefficients, innovations)?;
        spec.decay = Some(decay);
        Ok((spec, deficit))
    }

    pub fn validate(&self) -> Result<()> {
        self.innovations.validate()?;
        if self.dimension == 0 {
            return Err(Error::invalid("field dimension must be at least 1"));
        }
        if self.coefficients.is_empty() {
            return Err(Error::invalid("linear field needs at least one coefficient"));
        }
        for (s, a) in &self.coefficients {
            if s.dimension() != self.dimension {
                return Err(Error::invalid(format!(
                    "coefficient site {s:?} does not have dimension {}",
                    self.dimension
                )));
            }
            if !a.is_finite() {
                return Err(Error::invalid("coefficients must be finite"));
            }
        }
        Ok(())
    }

    pub fn variance(&self) -> f64 {
        self.coefficients.iter().map(|(_, a)| a * a).sum::<f64>() * self.innovations.variance()
    }

    /// Largest sup-distance between two support sites with nonzero weight.
    pub fn support_diameter(&self) -> u64 {
        diameter(self.coefficients.iter().filter(|(_, a)| *a != 0.0).map(|(s, _)| s))
    }
}

/// `X_i = Σ a_{s₁,s₂} ε_{i-s₁} ε_{i-s₂}` with `a_{s,s} = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct VolterraFieldSpec {
    pub dimension: usize,
    pub coefficients: Vec<((Site, Site), f64)>,
    pub innovations: InnovationSpec,
}

impl VolterraFieldSpec {
    pub fn new(
        dimension: usize,
        coefficients: Vec<((Site, Site), f64)>,
        innovations: InnovationSpec,
    ) -> Result<Self> {
        let spec = Self {
            dimension,
            coefficients,
            innovations,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.innovations.validate()?;
        if self.dimension == 0 {
            return Err(Error::invalid("field dimension must be at least 1"));
        }
        for ((s1, s2), a) in &self.coefficients {
            if s1.dimension() != self.dimension || s2.dimension() != self.dimension {
                return Err(Error::invalid("Volterra coefficient site has wrong dimension"));
            }
            if s1 == s2 && *a != 0.0 {
                return Err(Error::invalid(format!(
                    "Volterra diagonal coefficient a[{s1:?},{s2:?}] = {a} must be zero"
                )));
            }
        }
        Ok(())
    }

    pub fn support_diameter(&self) -> u64 {
        diameter(
            self.coefficients
                .iter()
                .filter(|(_, a)| *a != 0.0)
                .flat_map(|((s1, s2), _)| [s1, s2]),
        )
    }
}

fn diameter<'a>(sites: impl Iterator<Item = &'a Site> + Clone) -> u64 {
    let mut best = 0;
    for a in sites.clone() {
        for b in sites.clone() {
            best = best.max(a.distance(b));
        }
    }
    best
}

/// Innovations on the bounding box of `region ⊖ offsets`, stored row-major.
struct InnovationGrid {
    lo: Vec<i64>,
    strides: Vec<usize>,
    values: Vec<f64>,
}

impl InnovationGrid {
    fn draw<'a>(
        region: &LatticeRegion,
        offsets: impl Iterator<Item = &'a Site> + Clone,
        innovations: InnovationSpec,
        seed: SeedStream,
    ) -> Self {
        let d = region.dimension();
        let bounds = region.bounds();
        let mut lo = vec![0i64; d];
        let mut hi = vec![0i64; d];
        for k in 0..d {
            let smax = offsets.clone().map(|s| s.0[k]).max().unwrap_or(0);
            let smin = offsets.clone().map(|s| s.0[k]).min().unwrap_or(0);
            lo[k] = bounds[k].0 - smax;
            hi[k] = bounds[k].1 - smin;
        }
        let sides: Vec<usize> = lo.iter().zip(&hi).map(|(l, h)| (h - l + 1) as usize).collect();
        let mut strides = vec![1usize; d];
        for k in (0..d.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * sides[k + 1];
        }
        let total: usize = sides.iter().product();
        let mut rng = seed.rng(StreamRole::Innovations);
        let values = (0..total).map(|_| innovations.sample(&mut rng)).collect();
        Self { lo, strides, values }
    }

    #[inline]
    fn at(&self, site: &Site, minus: &Site) -> f64 {
        let mut idx = 0usize;
        for k in 0..self.lo.len() {
            idx += (site.0[k] - minus.0[k] - self.lo[k]) as usize * self.strides[k];
        }
        self.values[idx]
    }
}

fn check_dimension(region: &LatticeRegion, d: usize) -> Result<()> {
    if region.dimension() != d {
        return Err(Error::invalid(format!(
            "region has dimension {} but field spec has dimension {d}",
            region.dimension()
        )));
    }
    Ok(())
}

pub fn simulate_linear(
    region: &Arc<LatticeRegion>,
    spec: &LinearFieldSpec,
    seed: impl Into<SeedStream>,
) -> Result<FieldSample> {
    spec.validate()?;
    check_dimension(region, spec.dimension)?;
    let support: Vec<&(Site, f64)> = spec.coefficients.iter().filter(|(_, a)| *a != 0.0).collect();
    let grid = InnovationGrid::draw(
        region,
        spec.coefficients.iter().map(|(s, _)| s),
        spec.innovations,
        seed.into(),
    );
    let values = region
        .sites()
        .iter()
        .map(|i| support.iter().map(|(s, a)| a * grid.at(i, s)).sum())
        .collect();
    FieldSample::new(region.clone(), values)
}

pub fn simulate_volterra(
    region: &Arc<LatticeRegion>,
    spec: &VolterraFieldSpec,
    seed: impl Into<SeedStream>,
) -> Result<FieldSample> {
    spec.validate()?;
    check_dimension(region, spec.dimension)?;
    let support: Vec<&((Site, Site), f64)> =
        spec.coefficients.iter().filter(|(_, a)| *a != 0.0).collect();
    let origin = [Site::origin(spec.dimension)];
    let offsets: Vec<&Site> = spec
        .coefficients
        .iter()
        .flat_map(|((s1, s2), _)| [s1, s2])
        .chain(origin.iter())
        .collect();
    let grid = InnovationGrid::draw(region, offsets.iter().copied(), spec.innovations, seed.into());
    let values = region
        .sites()
        .iter()
        .map(|i| {
            support
                .iter()
                .map(|((s1, s2), a)| a * grid.at(i, s1) * grid.at(i, s2))
                .sum()
        })
        .collect();
    FieldSample::new(region.clone(), values)
}

/// `Y_i = X_i + θ_i`, θ drawn from the noise stream of `seed`.
pub fn add_noise(x: &FieldSample, noise: &NoiseModel, seed: impl Into<SeedStream>) -> FieldSample {
    if noise.is_none() {
        return x.clone();
    }
    let mut rng = seed.into().rng(StreamRole::Noise);
    let values = x.values.iter().map(|v| v + noise.sample(&mut rng)).collect();
    FieldSample {
        region: x.region.clone(),
        values,
    }
}

/// The noise field alone (what `add_noise` adds for the same seed).
pub fn noise_field(region: &Arc<LatticeRegion>, noise: &NoiseModel, seed: impl Into<SeedStream>) -> FieldSample {
    let zero = FieldSample {
        region: region.clone(),
        values: vec![0.0; region.len()],
    };
    add_noise(&zero, noise, seed)
}

/// Any latent field model the crate can simulate.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldModel {
    Linear(LinearFieldSpec),
    Volterra(VolterraFieldSpec),
}

impl FieldModel {
    pub fn dimension(&self) -> usize {
        match self {
            FieldModel::Linear(s) => s.dimension,
            FieldModel::Volterra(s) => s.dimension,
        }
    }

    pub fn innovations(&self) -> InnovationSpec {
        match self {
            FieldModel::Linear(s) => s.innovations,
            FieldModel::Volterra(s) => s.innovations,
        }
    }

    pub fn simulate(&self, region: &Arc<LatticeRegion>, seed: impl Into<SeedStream>) -> Result<FieldSample> {
        match self {
            FieldModel::Linear(s) => simulate_linear(region, s, seed),
            FieldModel::Volterra(s) => simulate_volterra(region, s, seed),
        }
    }

    /// Mixing profile implied by finite support: the field is `m`-dependent
    /// with `m` the support diameter, so `α(m') = 0` for `m' > m`. Fields
    /// with an infinite-support tail have no computable profile.
    pub fn mixing_profile(&self) -> Option<MixingProfile> {
        match self {
            FieldModel::Linear(s) if s.decay.is_some() => None,
            FieldModel::Linear(s) => Some(MixingProfile::m_dependent(s.support_diameter())),
            FieldModel::Volterra(s) => Some(MixingProfile::m_dependent(s.support_diameter())),
        }
    }

    pub fn dependence_profile(&self, p: u32) -> Result<DependenceProfile> {
        match self {
            FieldModel::Linear(s) => dependence_linear(s, p),
            FieldModel::Volterra(s) => dependence_volterra(s, p),
        }
    }

    /// Closed-form marginal of `X_0`, when there is one.
    pub fn marginal(&self) -> Option<Marginal> {
        match self {
            FieldModel::Linear(s) => {
                let nz: Vec<f64> = s.coefficients.iter().map(|(_, a)| *a).filter(|a| *a != 0.0).collect();
                match (s.innovations, nz.as_slice()) {
                    (_, []) => None,
                    (innov, [a]) => Some(Marginal::ScaledInnovation { innovations: innov, factor: *a }),
                    (InnovationSpec::StandardNormal, _) => Some(Marginal::Normal { sd: s.variance().sqrt() }),
                    _ => None,
                }
            }
            FieldModel::Volterra(_) => None,
        }
    }
}

/// Closed-form marginal density of the latent field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Marginal {
    Normal { sd: f64 },
    /// `a · ε` for a single innovation.
    ScaledInnovation { innovations: InnovationSpec, factor: f64 },
}

impl Marginal {
    pub fn density(&self, x: f64) -> f64 {
        match *self {
            Marginal::Normal { sd } => {
                (-0.5 * (x / sd).powi(2)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
            }
            Marginal::ScaledInnovation { innovations, factor } => {
                innovations.density(x / factor) / factor.abs()
            }
        }
    }

    pub fn sd(&self) -> f64 {
        match *self {
            Marginal::Normal { sd } => sd,
            Marginal::ScaledInnovation { innovations, factor } => innovations.sd() * factor.abs(),
        }
    }

    pub(crate) fn kinks(&self) -> Vec<f64> {
        match *self {
            Marginal::Normal { .. } => vec![],
            Marginal::ScaledInnovation { innovations, factor } => {
                innovations.kinks().into_iter().map(|k| k * factor).collect()
            }
        }
    }
}

/// Structured-text form of a field model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum FieldSpec {
    Iid {
        dimension: usize,
        innovations: InnovationSpec,
    },
    Linear {
        dimension: usize,
        #[serde(default)]
        coefficients: Vec<SiteCoefficient>,
        innovations: InnovationSpec,
        /// Power-law tail, truncated at `radius` for simulation.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        decay: Option<DecaySpec>,
    },
    Volterra {
        dimension: usize,
        coefficients: Vec<PairCoefficient>,
        innovations: InnovationSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteCoefficient {
    pub site: Vec<i64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCoefficient {
    pub pair: (Vec<i64>, Vec<i64>),
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecaySpec {
    pub constant: f64,
    pub exponent: f64,
    pub radius: u64,
}

impl FieldSpec {
    pub fn dimension(&self) -> usize {
        match self {
            FieldSpec::Iid { dimension, .. }
            | FieldSpec::Linear { dimension, .. }
            | FieldSpec::Volterra { dimension, .. } => *dimension,
        }
    }

    pub fn build(&self) -> Result<FieldModel> {
        match self {
            FieldSpec::Iid {
                dimension,
                innovations,
            } => Ok(FieldModel::Linear(LinearFieldSpec::iid(*dimension, *innovations)?)),
            FieldSpec::Linear {
                dimension,
                coefficients,
                innovations,
                decay,
            } => match decay {
                Some(dec) => {
                    if !coefficients.is_empty() {
                        return Err(Error::invalid(
                            "linear field: give either coefficients or decay, not both",
                        ));
                    }
                    let (spec, _) = LinearFieldSpec::power_decay(
                        *dimension,
                        CoefficientDecay {
                            constant: dec.constant,
                            exponent: dec.exponent,
                        },
                        dec.radius,
                        *innovations,
                    )?;
                    Ok(FieldModel::Linear(spec))
                }
                None => Ok(FieldModel::Linear(LinearFieldSpec::new(
                    *dimension,
                    coefficients
                        .iter()
                        .map(|c| (Site(c.site.clone()), c.value))
                        .collect(),
                    *innovations,
                )?)),
            },
            FieldSpec::Volterra {
                dimension,
                coefficients,
                innovations,
            } => Ok(FieldModel::Volterra(VolterraFieldSpec::new(
                *dimension,
                coefficients
                    .iter()
                    .map(|c| ((Site(c.pair.0.clone()), Site(c.pair.1.clone())), c.value))
                    .collect(),
                *innovations,
            )?)),
        }
    }
}
