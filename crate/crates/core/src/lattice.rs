//! Finite observation regions on `ℤ^d`.
//!
//! All geometry uses the sup-norm `|s| = max_k |s_k|`. Regions store their
//! sites explicitly in lexicographic order, so the position of a site in
//! [`LatticeRegion::sites`] is the enumeration map from `1..=|Λ|` onto `Λ`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the integer lattice.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Site(pub Vec<i64>);

impl Site {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        Site(coords.into())
    }

    pub fn origin(dimension: usize) -> Self {
        Site(vec![0; dimension])
    }

    /// Unit vector along axis `axis`.
    pub fn unit(dimension: usize, axis: usize) -> Self {
        let mut c = vec![0; dimension];
        c[axis] = 1;
        Site(c)
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    /// Sup-norm `max_k |s_k|`.
    pub fn norm(&self) -> u64 {
        self.0.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn distance(&self, other: &Site) -> u64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.abs_diff(*b))
            .max()
            .unwrap_or(0)
    }

    pub fn add(&self, other: &Site) -> Site {
        Site(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Site) -> Site {
        Site(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct BoxShape {
    origin: Vec<i64>,
    sides: Vec<usize>,
}

/// A finite, nonempty set of lattice sites in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeRegion {
    dimension: usize,
    sites: Vec<Site>,
    rect: Option<BoxShape>,
}

impl LatticeRegion {
    /// Builds a region from an arbitrary collection of sites. Duplicates are
    /// dropped and the sites sorted.
    pub fn from_sites(dimension: usize, sites: impl IntoIterator<Item = Site>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::invalid("region dimension must be at least 1"));
        }
        let set: BTreeSet<Site> = sites.into_iter().collect();
        if set.is_empty() {
            return Err(Error::invalid("region must contain at least one site"));
        }
        if let Some(bad) = set.iter().find(|s| s.dimension() != dimension) {
            return Err(Error::invalid(format!(
                "site {bad:?} has dimension {} but region has dimension {dimension}",
                bad.dimension()
            )));
        }
        Ok(Self {
            dimension,
            sites: set.into_iter().collect(),
            rect: None,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Sites in lexicographic order.
    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Side lengths, when the region is a box built by [`make_rect_region`].
    pub fn box_sides(&self) -> Option<&[usize]> {
        self.rect.as_ref().map(|r| r.sides.as_slice())
    }

    pub fn contains(&self, site: &Site) -> bool {
        if let Some(r) = &self.rect {
            return site.dimension() == self.dimension
                && site
                    .0
                    .iter()
                    .zip(r.origin.iter().zip(&r.sides))
                    .all(|(&c, (&o, &n))| c >= o && c < o + n as i64);
        }
        self.sites.binary_search(site).is_ok()
    }

    /// Per-axis `(min, max)` coordinates.
    pub fn bounds(&self) -> Vec<(i64, i64)> {
        let mut b = vec![(i64::MAX, i64::MIN); self.dimension];
        for s in &self.sites {
            for (k, &c) in s.0.iter().enumerate() {
                b[k].0 = b[k].0.min(c);
                b[k].1 = b[k].1.max(c);
            }
        }
        b
    }

    /// The region shifted by `v`.
    pub fn translate(&self, v: &Site) -> Result<Self> {
        if v.dimension() != self.dimension {
            return Err(Error::invalid("translation vector has wrong dimension"));
        }
        Ok(Self {
            dimension: self.dimension,
            sites: self.sites.iter().map(|s| s.add(v)).collect(),
            rect: self.rect.as_ref().map(|r| BoxShape {
                origin: r.origin.iter().zip(&v.0).map(|(a, b)| a + b).collect(),
                sides: r.sides.clone(),
            }),
        })
    }
}

/// Box `∏ [origin_k, origin_k + side_k)` with sites in lexicographic order.
pub fn make_rect_region(side_lengths: &[usize], origin: &Site) -> Result<LatticeRegion> {
    let d = side_lengths.len();
    if d == 0 {
        return Err(Error::invalid("at least one side length is required"));
    }
    if origin.dimension() != d {
        return Err(Error::invalid(format!(
            "origin has dimension {} but {d} side lengths were given",
            origin.dimension()
        )));
    }
    if let Some(k) = side_lengths.iter().position(|&n| n == 0) {
        return Err(Error::invalid(format!("side length {k} must be at least 1")));
    }
    let total: usize = side_lengths.iter().product();
    let mut sites = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        sites.push(Site(
            idx.iter()
                .zip(&origin.0)
                .map(|(&i, &o)| o + i as i64)
                .collect(),
        ));
        // odometer, last axis fastest -> lexicographic order
        for k in (0..d).rev() {
            idx[k] += 1;
            if idx[k] < side_lengths[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok(LatticeRegion {
        dimension: d,
        sites,
        rect: Some(BoxShape {
            origin: origin.0.clone(),
            sides: side_lengths.to_vec(),
        }),
    })
}

/// Two-dimensional L: the union of `[0, a₁) × [0, t)` and `[0, t) × [0, a₂)`.
pub fn make_l_shaped_region(arm_lengths: (usize, usize), thickness: usize) -> Result<LatticeRegion> {
    let (a1, a2) = arm_lengths;
    if thickness == 0 {
        return Err(Error::invalid("L-shape thickness must be at least 1"));
    }
    if a1 < thickness || a2 < thickness {
        return Err(Error::invalid(format!(
            "L-shape arms ({a1}, {a2}) must be at least as long as the thickness {thickness}"
        )));
    }
    let horizontal = (0..a1 as i64).flat_map(|x| (0..thickness as i64).map(move |y| Site(vec![x, y])));
    let vertical = (0..thickness as i64).flat_map(|x| (0..a2 as i64).map(move |y| Site(vec![x, y])));
    LatticeRegion::from_sites(2, horizontal.chain(vertical))
}

/// Sites of `region` with a sup-norm neighbour outside the region.
pub fn boundary(region: &LatticeRegion) -> Vec<Site> {
    if let Some(r) = &region.rect {
        return region
            .sites
            .iter()
            .filter(|s| {
                s.0.iter()
                    .zip(r.origin.iter().zip(&r.sides))
                    .any(|(&c, (&o, &n))| c == o || c == o + n as i64 - 1)
            })
            .cloned()
            .collect();
    }
    let d = region.dimension;
    let offsets = neighbour_offsets(d);
    region
        .sites
        .iter()
        .filter(|s| offsets.iter().any(|off| !region.contains(&s.add(off))))
        .cloned()
        .collect()
}

/// All `3^d - 1` offsets at sup-distance exactly one.
fn neighbour_offsets(d: usize) -> Vec<Site> {
    let mut out = Vec::with_capacity(3usize.pow(d as u32) - 1);
    let total = 3usize.pow(d as u32);
    for code in 0..total {
        let mut c = code;
        let v: Vec<i64> = (0..d)
            .map(|_| {
                let digit = (c % 3) as i64 - 1;
                c /= 3;
                digit
            })
            .collect();
        if v.iter().any(|&x| x != 0) {
            out.push(Site(v));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionStats {
    pub sites: usize,
    pub boundary_sites: usize,
    pub ratio: f64,
}

/// Diagnostic summary of a region sequence against the growth and
/// vanishing-boundary conditions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionSequenceReport {
    pub regions: Vec<RegionStats>,
    /// `|Λ_n|` strictly increasing along the list.
    pub sizes_strictly_increasing: bool,
    /// Boundary ratio non-increasing from the second region on.
    pub ratio_nonincreasing_tail: bool,
    /// Last ratio strictly below the first.
    pub ratio_decaying: bool,
}

impl RegionSequenceReport {
    /// True when every diagnostic is consistent with `|Λ_n| → ∞` and
    /// `|∂Λ_n| / |Λ_n| → 0`.
    pub fn plausible(&self) -> bool {
        self.sizes_strictly_increasing && self.ratio_nonincreasing_tail && self.ratio_decaying
    }
}

pub fn check_region_sequence(regions: &[LatticeRegion]) -> Result<RegionSequenceReport> {
    if regions.is_empty() {
        return Err(Error::invalid("region sequence is empty"));
    }
    let stats: Vec<RegionStats> = regions
        .iter()
        .map(|r| {
            let nb = boundary(r).len();
            RegionStats {
                sites: r.len(),
                boundary_sites: nb,
                ratio: nb as f64 / r.len() as f64,
            }
        })
        .collect();
    let sizes_strictly_increasing =
        stats.len() >= 2 && stats.windows(2).all(|w| w[1].sites > w[0].sites);
    let tail = if stats.len() > 1 { &stats[1..] } else { &stats[..] };
    let ratio_nonincreasing_tail = tail.windows(2).all(|w| w[1].ratio <= w[0].ratio);
    let ratio_decaying = stats.last().unwrap().ratio < stats[0].ratio;
    Ok(RegionSequenceReport {
        regions: stats,
        sizes_strictly_increasing,
        ratio_nonincreasing_tail,
        ratio_decaying,
    })
}

/// Structured-text form of a region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RegionSpec {
    Rect {
        dimension: usize,
        sides: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        origin: Option<Vec<i64>>,
    },
    Lshape {
        dimension: usize,
        arms: (usize, usize),
        thickness: usize,
    },
    Explicit {
        dimension: usize,
        sites: Vec<Vec<i64>>,
    },
}

impl RegionSpec {
    /// Hypercube of side `side` at the origin.
    pub fn cube(dimension: usize, side: usize) -> Self {
        RegionSpec::Rect {
            dimension,
            sides: vec![side; dimension],
            origin: None,
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            RegionSpec::Rect { dimension, .. }
            | RegionSpec::Lshape { dimension, .. }
            | RegionSpec::Explicit { dimension, .. } => *dimension,
        }
    }

    pub fn build(&self) -> Result<LatticeRegion> {
        match self {
            RegionSpec::Rect {
                dimension,
                sides,
                origin,
            } => {
                if sides.len() != *dimension {
                    return Err(Error::invalid("rect: sides length differs from dimension"));
                }
                let o = origin.clone().unwrap_or_else(|| vec![0; *dimension]);
                make_rect_region(sides, &Site(o))
            }
            RegionSpec::Lshape {
                dimension,
                arms,
                thickness,
            } => {
                if *dimension != 2 {
                    return Err(Error::invalid("lshape regions are two-dimensional"));
                }
                make_l_shaped_region(*arms, *thickness)
            }
            RegionSpec::Explicit { dimension, sites } => {
                LatticeRegion::from_sites(*dimension, sites.iter().cloned().map(Site))
            }
        }
    }
}
