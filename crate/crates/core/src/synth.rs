//! Synthetic two-class gestures that differ only in the order of motion.
//!
//! A blob crosses the frame horizontally: class 0 sweeps left to right,
//! class 1 right to left. Descriptors are emitted along the trajectory and
//! depend only on the time phase, never on position, so both classes produce
//! the same descriptor multiset; only where the descriptors occur differs.
//! The blob stays in the top third of the frame, so vertical voxel
//! boundaries at levels 2 and 3 never split it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{MmkError, Result};
use crate::formats::{DescriptorFile, DescriptorRecord};
use crate::pyramid::{VideoDescriptorSet, VideoDims, VideoMeta};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub samples_per_class: usize,
    pub subjects: u32,
    pub frames: u32,
    pub width: u32,
    pub height: u32,
    pub blob_radius: f64,
    pub descriptors_per_frame: usize,
    pub descriptor_dim: usize,
    /// Distinct prototype vectors; frame `t` uses prototype
    /// `floor(prototypes * t / frames)`.
    pub prototypes: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            samples_per_class: 40,
            subjects: 4,
            frames: 24,
            width: 64,
            height: 48,
            blob_radius: 4.0,
            descriptors_per_frame: 4,
            descriptor_dim: 16,
            prototypes: 8,
            noise_sigma: 0.05,
            seed: 0,
        }
    }
}

pub const CLASSES: u32 = 2;

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        let counts = [
            self.samples_per_class,
            self.subjects as usize,
            self.frames as usize,
            self.width as usize,
            self.height as usize,
            self.descriptors_per_frame,
            self.descriptor_dim,
            self.prototypes,
        ];
        if counts.contains(&0) {
            return Err(MmkError::InvalidConfig(
                "synthetic counts must be positive".into(),
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.blob_radius >= 0.0) {
            return Err(MmkError::InvalidConfig(
                "sigma and blob radius must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// One generated video in raw (pixel-space) form.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthVideo {
    pub file: DescriptorFile,
    pub meta: VideoMeta,
}

/// Raw synthetic videos, class 0 first. Sample `s` of each class belongs to
/// subject `s % subjects`.
pub fn synth_descriptor_files(cfg: &SynthConfig) -> Result<Vec<SynthVideo>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let prototypes: Vec<Vec<f64>> = (0..cfg.prototypes)
        .map(|_| {
            (0..cfg.descriptor_dim)
                .map(|_| rng.random::<f64>())
                .collect()
        })
        .collect();
    let noise = Normal::new(0.0, cfg.noise_sigma).expect("sigma >= 0");
    let dims = VideoDims::new(cfg.width, cfg.height, cfg.frames)?;
    let (w, h) = (f64::from(cfg.width), f64::from(cfg.height));
    // rows that keep the whole blob in the top third of the frame
    let top_band = (cfg.blob_radius, h / 3.0 - cfg.blob_radius - 1.0);
    let gap = cfg.blob_radius + 1.0;

    let mut videos = Vec::with_capacity(CLASSES as usize * cfg.samples_per_class);
    for label in 0..CLASSES {
        for s in 0..cfg.samples_per_class {
            let margin = rng.random_range(0.05..0.15) * w;
            let (start, end) = if label == 0 {
                (margin, w - margin)
            } else {
                (w - margin, margin)
            };
            let row = if top_band.0 < top_band.1 {
                rng.random_range(top_band.0..top_band.1)
            } else {
                h / 6.0
            };
            let mut records = Vec::with_capacity(cfg.frames as usize * cfg.descriptors_per_frame);
            for t in 0..cfg.frames {
                let phase = if cfg.frames > 1 {
                    f64::from(t) / f64::from(cfg.frames - 1)
                } else {
                    0.0
                };
                // the blob never straddles the vertical midline, so each
                // time half sees it in exactly one horizontal half
                let mut cx = start + (end - start) * phase;
                let left_now = (label == 0) == (2 * t < cfg.frames);
                cx = if left_now {
                    cx.min(w / 2.0 - gap)
                } else {
                    cx.max(w / 2.0 + gap)
                };
                let proto = &prototypes[cfg.prototypes * t as usize / cfg.frames as usize];
                for _ in 0..cfg.descriptors_per_frame {
                    let r = cfg.blob_radius * rng.random::<f64>().sqrt();
                    let a = rng.random_range(0.0..std::f64::consts::TAU);
                    let x = (cx + r * a.cos()).clamp(0.0, w - 1.0).round();
                    let y = (row + r * a.sin()).clamp(0.0, h - 1.0).round();
                    let vec = proto
                        .iter()
                        .map(|&p| (p + noise.sample(&mut rng)) as f32)
                        .collect();
                    records.push(DescriptorRecord {
                        x: x as f32,
                        y: y as f32,
                        t: t as f32,
                        vec,
                    });
                }
            }
            videos.push(SynthVideo {
                file: DescriptorFile {
                    dims,
                    dim: cfg.descriptor_dim,
                    records,
                },
                meta: VideoMeta {
                    video_id: format!("synth-{label}-{s:04}"),
                    subject: s as u32 % cfg.subjects,
                    label: Some(label),
                },
            });
        }
    }
    Ok(videos)
}

/// Synthetic dataset as normalized descriptor sets.
pub fn synth_gestures(cfg: &SynthConfig) -> Result<Vec<VideoDescriptorSet>> {
    synth_descriptor_files(cfg)?
        .into_iter()
        .map(|v| v.file.into_video_set(v.meta))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_classes_share_descriptor_multisets() {
        let cfg = SynthConfig {
            noise_sigma: 0.0,
            samples_per_class: 3,
            ..SynthConfig::default()
        };
        let videos = synth_gestures(&cfg).unwrap();
        let sorted = |v: &VideoDescriptorSet| {
            let mut d: Vec<Vec<f64>> = v.descriptors().iter().map(|d| d.vec.clone()).collect();
            d.sort_by(|a, b| a.partial_cmp(b).unwrap());
            d
        };
        let reference = sorted(&videos[0]);
        for v in &videos {
            assert_eq!(sorted(v), reference);
        }
    }

    #[test]
    fn classes_move_in_opposite_directions() {
        let videos = synth_gestures(&SynthConfig::default()).unwrap();
        for v in &videos {
            let early: Vec<f64> = v
                .descriptors()
                .iter()
                .filter(|d| d.loc.w() < 0.25)
                .map(|d| d.loc.u())
                .collect();
            let mean = early.iter().sum::<f64>() / early.len() as f64;
            match v.meta.label {
                Some(0) => assert!(mean < 0.5),
                Some(1) => assert!(mean > 0.5),
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn deterministic_and_balanced() {
        let cfg = SynthConfig::default();
        let a = synth_descriptor_files(&cfg).unwrap();
        assert_eq!(a, synth_descriptor_files(&cfg).unwrap());
        assert_eq!(a.len(), 80);
        for subject in 0..4 {
            for label in 0..2 {
                let n = a
                    .iter()
                    .filter(|v| v.meta.subject == subject && v.meta.label == Some(label))
                    .count();
                assert_eq!(n, 10);
            }
        }
        let other = synth_descriptor_files(&SynthConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn rejects_zero_counts() {
        let cfg = SynthConfig {
            frames: 0,
            ..SynthConfig::default()
        };
        assert!(synth_gestures(&cfg).is_err());
    }
}
