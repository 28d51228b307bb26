use mmk::codebook::{pool_descriptors, train_codebook, KMeansParams};
use mmk::matchkernel::{
    bof_histogram, median_gamma, video_feature_map, video_feature_maps, KernelBasis,
};
use mmk::synth::{synth_gestures, SynthConfig};
use mmk::{PyramidConfig, VideoDescriptorSet};
use nalgebra::DMatrix;

fn fit_basis(videos: &[VideoDescriptorSet], clusters: usize) -> KernelBasis {
    let pool = pool_descriptors(videos.iter());
    let cb = train_codebook(&pool, &KMeansParams::new(clusters, 3)).unwrap();
    let gamma = median_gamma(&pool, 3).unwrap();
    KernelBasis::new(cb, gamma).unwrap()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[test]
fn gram_matrix_is_positive_semidefinite() {
    let videos = synth_gestures(&SynthConfig {
        samples_per_class: 12,
        noise_sigma: 0.2,
        seed: 11,
        ..SynthConfig::default()
    })
    .unwrap();
    let basis = fit_basis(&videos, 16);
    let maps = video_feature_maps(&videos, &basis, &PyramidConfig::dyadic(3).unwrap()).unwrap();
    let n = maps.len();
    let gram = DMatrix::from_fn(n, n, |i, j| maps[i].dot(&maps[j]));
    let min = gram.symmetric_eigenvalues().min();
    assert!(min >= -1e-8, "min eigenvalue {min}");
}

#[test]
fn same_descriptors_different_places_are_told_apart() {
    let videos = synth_gestures(&SynthConfig {
        samples_per_class: 1,
        noise_sigma: 0.0,
        ..SynthConfig::default()
    })
    .unwrap();
    let (a, b) = (&videos[0], &videos[1]);
    let basis = fit_basis(&videos, 8);
    let flat = PyramidConfig::dyadic(1).unwrap();
    let pyramid = PyramidConfig::dyadic(2).unwrap();
    let fa = video_feature_map(a, &basis, &flat).unwrap();
    let fb = video_feature_map(b, &basis, &flat).unwrap();
    assert!(distance(&fa.values, &fb.values) < 1e-9);
    let fa = video_feature_map(a, &basis, &pyramid).unwrap();
    let fb = video_feature_map(b, &basis, &pyramid).unwrap();
    assert!(distance(&fa.values, &fb.values) > 1e-3);
}

#[test]
fn synthetic_classes_have_matching_bof_histograms() {
    let videos = synth_gestures(&SynthConfig::default()).unwrap();
    let pool = pool_descriptors(videos.iter());
    let cb = train_codebook(&pool, &KMeansParams::new(8, 0)).unwrap();
    let mut means = vec![vec![0.0; 8]; 2];
    let mut counts = [0.0; 2];
    for v in &videos {
        let class = v.meta.label.unwrap() as usize;
        for (m, h) in means[class]
            .iter_mut()
            .zip(bof_histogram(v, &cb).unwrap().values())
        {
            *m += h;
        }
        counts[class] += 1.0;
    }
    let l1: f64 = means[0]
        .iter()
        .zip(&means[1])
        .map(|(a, b)| (a / counts[0] - b / counts[1]).abs())
        .sum();
    assert!(l1 <= 0.05, "L1 distance between class means {l1}");
}

#[test]
fn noiseless_mmk2_separates_classes_by_distance() {
    let videos = synth_gestures(&SynthConfig {
        samples_per_class: 10,
        noise_sigma: 0.0,
        seed: 5,
        ..SynthConfig::default()
    })
    .unwrap();
    let basis = fit_basis(&videos, 8);
    let maps = video_feature_maps(&videos, &basis, &PyramidConfig::dyadic(2).unwrap()).unwrap();
    let mut max_intra = 0.0f64;
    let mut min_inter = f64::INFINITY;
    for i in 0..videos.len() {
        for j in i + 1..videos.len() {
            let d = distance(&maps[i].values, &maps[j].values);
            if videos[i].meta.label == videos[j].meta.label {
                max_intra = max_intra.max(d);
            } else {
                min_inter = min_inter.min(d);
            }
        }
    }
    assert!(
        min_inter > max_intra,
        "inter {min_inter} vs intra {max_intra}"
    );
}
