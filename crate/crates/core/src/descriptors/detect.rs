use std::cmp::Ordering;

use super::frames::DepthVideo;
use crate::error::{MmkError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterestPoint {
    pub x: u32,
    pub y: u32,
    pub t: u32,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorMode {
    /// Every `stride`-th pixel in both directions, on every frame.
    DenseGrid { stride: u32 },
    /// The `top_k` pixels with the largest smoothed absolute frame difference.
    TemporalDiff { top_k: usize },
}

pub fn detect_interest_points(
    video: &DepthVideo,
    mode: DetectorMode,
) -> Result<Vec<InterestPoint>> {
    match mode {
        DetectorMode::DenseGrid { stride } => {
            if stride == 0 {
                return Err(MmkError::InvalidConfig("grid stride must be >= 1".into()));
            }
            Ok(dense_grid(video, stride))
        }
        DetectorMode::TemporalDiff { top_k } => {
            if top_k == 0 {
                return Err(MmkError::InvalidConfig("top_k must be >= 1".into()));
            }
            Ok(temporal_diff(video, top_k))
        }
    }
}

fn dense_grid(video: &DepthVideo, stride: u32) -> Vec<InterestPoint> {
    let dims = video.dims();
    let mut points = Vec::new();
    for t in 0..dims.frames {
        for y in (0..dims.height).step_by(stride as usize) {
            for x in (0..dims.width).step_by(stride as usize) {
                points.push(InterestPoint {
                    x,
                    y,
                    t,
                    score: 0.0,
                });
            }
        }
    }
    points
}

/// 3x3 box mean with edge replication.
fn box_mean(src: &[f64], w: usize, h: usize) -> Vec<f64> {
    let mut out = vec![0.0; src.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for dy in [-1i64, 0, 1] {
                let yy = (y as i64 + dy).clamp(0, h as i64 - 1) as usize;
                for dx in [-1i64, 0, 1] {
                    let xx = (x as i64 + dx).clamp(0, w as i64 - 1) as usize;
                    acc += src[yy * w + xx];
                }
            }
            out[y * w + x] = acc / 9.0;
        }
    }
    out
}

fn temporal_diff(video: &DepthVideo, top_k: usize) -> Vec<InterestPoint> {
    let dims = video.dims();
    let (w, h) = (dims.width as usize, dims.height as usize);
    let mut candidates = Vec::with_capacity(w * h * (dims.frames as usize).saturating_sub(1));
    for t in 1..dims.frames as usize {
        let diff: Vec<f64> = video
            .frame(t)
            .iter()
            .zip(video.frame(t - 1))
            .map(|(a, b)| (a - b).abs())
            .collect();
        let smooth = box_mean(&diff, w, h);
        for y in 0..h {
            for x in 0..w {
                candidates.push(InterestPoint {
                    x: x as u32,
                    y: y as u32,
                    t: t as u32,
                    score: smooth[y * w + x],
                });
            }
        }
    }
    let order = |a: &InterestPoint, b: &InterestPoint| -> Ordering {
        b.score
            .total_cmp(&a.score)
            .then_with(|| (a.t, a.y, a.x).cmp(&(b.t, b.y, b.x)))
    };
    if top_k < candidates.len() {
        candidates.select_nth_unstable_by(top_k, order);
        candidates.truncate(top_k);
    }
    candidates.sort_by(order);
    candidates
}
