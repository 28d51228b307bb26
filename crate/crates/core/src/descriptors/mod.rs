//! Depth-video ingestion and local patch descriptors.
//!
//! Interest points come from one of two substitute detectors (a dense grid or
//! the strongest temporal differences); each point yields a 16x16 patch that
//! is summarized by a 36-bin orientation histogram or a 59-bin uniform LBP
//! histogram. Descriptors computed by external tools enter through
//! [`load_precomputed_descriptors`].

mod detect;
mod frames;
mod hog;
mod lbp;

use std::path::Path;

use rayon::prelude::*;

pub use detect::{detect_interest_points, DetectorMode, InterestPoint};
pub use frames::{load_frames, read_pgm, write_pgm, DepthVideo};
pub use hog::{hog_descriptor, HOG_BINS};
pub use lbp::{lbp_bin, lbp_descriptor, lbp_pattern, LBP_BINS};

use crate::error::Result;
use crate::formats::DescriptorFile;
use crate::pyramid::{normalize_location, LocatedDescriptor, VideoDescriptorSet, VideoMeta};

pub const PATCH_SIZE: usize = 16;

/// A 16x16 window of intensities, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    data: [f64; PATCH_SIZE * PATCH_SIZE],
}

impl Patch {
    pub fn from_fn(mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = [0.0; PATCH_SIZE * PATCH_SIZE];
        for r in 0..PATCH_SIZE {
            for c in 0..PATCH_SIZE {
                data[r * PATCH_SIZE + c] = f(r, c);
            }
        }
        Self { data }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * PATCH_SIZE + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Cuts the 16x16 window whose top-left corner is `(x-8, y-8)` out of frame
/// `t`, replicating edge pixels where the window leaves the frame.
pub fn extract_patch(video: &DepthVideo, p: &InterestPoint) -> Patch {
    let half = (PATCH_SIZE / 2) as i64;
    let w = i64::from(video.dims().width);
    let h = i64::from(video.dims().height);
    let frame = video.frame(p.t as usize);
    Patch::from_fn(|r, c| {
        let yy = (i64::from(p.y) - half + r as i64).clamp(0, h - 1);
        let xx = (i64::from(p.x) - half + c as i64).clamp(0, w - 1);
        frame[(yy * w + xx) as usize]
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DescriptorKind {
    Hog,
    Lbp,
}

impl DescriptorKind {
    pub fn dim(self) -> usize {
        match self {
            DescriptorKind::Hog => HOG_BINS,
            DescriptorKind::Lbp => LBP_BINS,
        }
    }

    pub fn compute(self, patch: &Patch) -> Vec<f64> {
        match self {
            DescriptorKind::Hog => hog_descriptor(patch).to_vec(),
            DescriptorKind::Lbp => lbp_descriptor(patch)
                .iter()
                .map(|&c| f64::from(c))
                .collect(),
        }
    }
}

/// Computes one descriptor per interest point and tags it with the point's
/// normalized location.
pub fn describe_video(
    video: &DepthVideo,
    points: &[InterestPoint],
    kind: DescriptorKind,
    meta: VideoMeta,
) -> Result<VideoDescriptorSet> {
    let dims = video.dims();
    let descriptors = points
        .par_iter()
        .map(|p| {
            let loc = normalize_location(f64::from(p.x), f64::from(p.y), f64::from(p.t), dims)?;
            Ok(LocatedDescriptor {
                loc,
                vec: kind.compute(&extract_patch(video, p)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    VideoDescriptorSet::new(dims, kind.dim(), descriptors, meta)
}

/// Reads a descriptor file (see [`crate::formats`]) into a normalized set.
pub fn load_precomputed_descriptors(path: &Path, meta: VideoMeta) -> Result<VideoDescriptorSet> {
    DescriptorFile::read_path(path)?.into_video_set(meta)
}
