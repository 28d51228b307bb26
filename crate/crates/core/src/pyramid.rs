//! Spatio-temporal pyramid geometry.
//!
//! Level `i` (1-based) splits each axis of the unit cube into `i` equal parts,
//! giving `i^3` voxels. Voxels are numbered x-major: `j = cx*i^2 + cy*i + ct`.

use crate::error::{check_dim, MmkError, Result};

/// Largest `f64` strictly below 1.
pub const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VideoDims {
    pub width: u32,
    pub height: u32,
    pub frames: u32,
}

impl VideoDims {
    pub fn new(width: u32, height: u32, frames: u32) -> Result<Self> {
        if width == 0 || height == 0 || frames == 0 {
            return Err(MmkError::InvalidConfig(format!(
                "video dims must be positive, got {width}x{height}x{frames}"
            )));
        }
        Ok(Self {
            width,
            height,
            frames,
        })
    }
}

/// A point in the unit cube `[0,1)^3`: `u` along x, `v` along y, `w` along time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    u: f64,
    v: f64,
    w: f64,
}

impl Location {
    pub fn new(u: f64, v: f64, w: f64) -> Result<Self> {
        for c in [u, v, w] {
            if !(0.0..1.0).contains(&c) {
                return Err(MmkError::InvalidLocation(format!(
                    "coordinates must lie in [0,1), got ({u}, {v}, {w})"
                )));
            }
        }
        Ok(Self { u, v, w })
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn w(&self) -> f64 {
        self.w
    }
}

/// Maps a pixel position `(x, y)` in frame `t` into the unit cube of `dims`.
///
/// Points on the far boundary (coordinate equal to the extent) or beyond are
/// clamped to [`BELOW_ONE`] so they land in the last cell.
pub fn normalize_location(x: f64, y: f64, t: f64, dims: VideoDims) -> Result<Location> {
    if !(x >= 0.0 && y >= 0.0 && t >= 0.0) || !(x.is_finite() && y.is_finite() && t.is_finite()) {
        return Err(MmkError::InvalidLocation(format!(
            "raw coordinates must be finite and non-negative, got ({x}, {y}, {t})"
        )));
    }
    let norm = |c: f64, extent: u32| (c / f64::from(extent)).min(BELOW_ONE);
    Ok(Location {
        u: norm(x, dims.width),
        v: norm(y, dims.height),
        w: norm(t, dims.frames),
    })
}

/// Number of cells per axis and the cell coordinates of `loc` at `level`.
pub fn voxel_cell(loc: &Location, level: usize) -> (usize, usize, usize) {
    debug_assert!(level >= 1);
    let cell = |c: f64| ((c * level as f64).floor() as usize).min(level - 1);
    (cell(loc.u), cell(loc.v), cell(loc.w))
}

/// Voxel id of `loc` at `level` in `[0, level^3)`.
pub fn voxel_index(loc: &Location, level: usize) -> usize {
    let (cx, cy, ct) = voxel_cell(loc, level);
    cx * level * level + cy * level + ct
}

/// Total voxel count of a pyramid with levels `1..=levels`.
pub fn pyramid_voxel_count(levels: usize) -> usize {
    (1..=levels).map(|i| i * i * i).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocatedDescriptor {
    pub loc: Location,
    pub vec: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VideoMeta {
    pub video_id: String,
    pub subject: u32,
    pub label: Option<u32>,
}

/// The located descriptors of one video.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoDescriptorSet {
    dims: VideoDims,
    descriptor_dim: usize,
    descriptors: Vec<LocatedDescriptor>,
    pub meta: VideoMeta,
}

impl VideoDescriptorSet {
    pub fn new(
        dims: VideoDims,
        descriptor_dim: usize,
        descriptors: Vec<LocatedDescriptor>,
        meta: VideoMeta,
    ) -> Result<Self> {
        for d in &descriptors {
            check_dim(descriptor_dim, d.vec.len())?;
            if d.vec.iter().any(|v| !v.is_finite()) {
                return Err(MmkError::Format("descriptor has non-finite entries".into()));
            }
        }
        Ok(Self {
            dims,
            descriptor_dim,
            descriptors,
            meta,
        })
    }

    pub fn dims(&self) -> VideoDims {
        self.dims
    }

    pub fn descriptor_dim(&self) -> usize {
        self.descriptor_dim
    }

    pub fn descriptors(&self) -> &[LocatedDescriptor] {
        &self.descriptors
    }

    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }
}

/// Pyramid depth and the per-level scale applied to feature-map blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct PyramidConfig {
    levels: usize,
    weights: Vec<f64>,
}

impl PyramidConfig {
    pub fn new(levels: usize, weights: Vec<f64>) -> Result<Self> {
        if levels == 0 {
            return Err(MmkError::InvalidConfig(
                "pyramid needs at least one level".into(),
            ));
        }
        if weights.len() != levels {
            return Err(MmkError::InvalidConfig(format!(
                "expected {levels} level weights, got {}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(MmkError::InvalidConfig(
                "level weights must be finite and positive".into(),
            ));
        }
        Ok(Self { levels, weights })
    }

    /// Level `i` scaled by `2^i`, favoring finer resolutions.
    pub fn dyadic(levels: usize) -> Result<Self> {
        Self::new(levels, (1..=levels).map(|i| 2f64.powi(i as i32)).collect())
    }

    /// All levels weighted 1.
    pub fn uniform(levels: usize) -> Result<Self> {
        Self::new(levels, vec![1.0; levels])
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight of 1-based `level`.
    pub fn weight(&self, level: usize) -> f64 {
        self.weights[level - 1]
    }

    pub fn voxel_count(&self) -> usize {
        pyramid_voxel_count(self.levels)
    }
}

/// Descriptor indices grouped by `(level, voxel)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    levels: Vec<Vec<Vec<usize>>>,
}

impl Partition {
    pub fn levels(&self) -> usize {
        self.levels.len()
    }

    /// Groups of 1-based `level`, indexed by voxel id.
    pub fn level(&self, level: usize) -> &[Vec<usize>] {
        &self.levels[level - 1]
    }

    /// `(level, voxel, indices)` in pyramid order.
    pub fn groups(&self) -> impl Iterator<Item = (usize, usize, &[usize])> + '_ {
        self.levels.iter().enumerate().flat_map(|(li, voxels)| {
            voxels
                .iter()
                .enumerate()
                .map(move |(j, g)| (li + 1, j, g.as_slice()))
        })
    }
}

/// Assigns every descriptor to one voxel at each level `1..=levels`.
///
/// Within a group, indices keep the input order.
pub fn partition(video: &VideoDescriptorSet, levels: usize) -> Partition {
    let levels = (1..=levels)
        .map(|i| {
            let mut voxels = vec![Vec::new(); i * i * i];
            for (k, d) in video.descriptors.iter().enumerate() {
                voxels[voxel_index(&d.loc, i)].push(k);
            }
            voxels
        })
        .collect();
    Partition { levels }
}
