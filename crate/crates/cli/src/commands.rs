use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{anyhow, bail, ensure, Context, Result};
use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use mmk::classify::{
    evaluate_loso, evaluate_subject_split, train_linear_ovr, LabeledFeatures, Protocol,
};
use mmk::codebook::{pool_descriptors, train_codebook, Codebook};
use mmk::descriptors::{
    detect_interest_points, extract_patch, load_frames, load_precomputed_descriptors,
    DescriptorKind, DetectorMode,
};
use mmk::formats::{
    codebook_from_bytes, codebook_to_bytes, confusion_csv, model_from_text, model_to_text,
    report_to_text, DescriptorFile, DescriptorRecord, FeatureFile, FeatureRow, UNLABELED,
};
use mmk::matchkernel::{median_gamma, mmk_exact, video_feature_map};
use mmk::pipeline::{
    build_basis, evaluate_videos, FeatureMode, FeaturePipeline, FittedFeatures, GammaMode,
};
use mmk::synth::{synth_descriptor_files, SynthConfig};
use mmk::{
    EvalReport, KMeansParams, LocatedDescriptor, Location, PyramidConfig, SvmParams,
    VideoDescriptorSet, VideoDims, VideoMeta,
};

use crate::config::{
    pick, require, DescriptorArg, DetectorArg, FileConfig, GammaSetting, ModeArg, ProtocolArg,
    WeightsArg,
};
use crate::manifest::{read_manifest, write_manifest, ManifestRow};
use crate::{
    BenchArgs, CodebookOpts, DictArgs, EvalArgs, ExtractArgs, FeaturizeArgs, KernelCheckArgs,
    PredictArgs, PyramidOpts, SvmOpts, SynthArgs, TrainArgs,
};

const DEFAULT_LEVELS: usize = 3;

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn load_videos(manifest: &Path) -> Result<Vec<VideoDescriptorSet>> {
    let rows = read_manifest(manifest)?;
    let videos = rows
        .par_iter()
        .map(|row| {
            load_precomputed_descriptors(&row.path, row.meta())
                .with_context(|| format!("loading descriptors of '{}'", row.video_id))
        })
        .collect::<Result<Vec<_>>>()?;
    info!("loaded {} videos from {}", videos.len(), manifest.display());
    Ok(videos)
}

fn read_codebook(path: &Path) -> Result<(Codebook, Option<f64>)> {
    codebook_from_bytes(&read_file(path)?).with_context(|| format!("codebook {}", path.display()))
}

fn read_features(path: &Path) -> Result<FeatureFile> {
    FeatureFile::from_bytes(&read_file(path)?)
        .with_context(|| format!("feature file {}", path.display()))
}

fn pyramid_config(levels: usize, weights: WeightsArg) -> Result<PyramidConfig> {
    Ok(match weights {
        WeightsArg::Dyadic => PyramidConfig::dyadic(levels)?,
        WeightsArg::Uniform => PyramidConfig::uniform(levels)?,
    })
}

impl PyramidOpts {
    fn resolve(&self, cfg: &FileConfig) -> Result<PyramidConfig> {
        pyramid_config(
            pick(&self.levels, &cfg.levels).unwrap_or(DEFAULT_LEVELS),
            pick(&self.weights, &cfg.weights).unwrap_or(WeightsArg::Dyadic),
        )
    }
}

impl CodebookOpts {
    fn kmeans(&self, cfg: &FileConfig) -> Result<KMeansParams> {
        let mut p = KMeansParams::new(
            require(&self.clusters, &cfg.clusters, "clusters")?,
            pick(&self.codebook_seed, &cfg.codebook_seed).unwrap_or(0),
        );
        if let Some(iters) = pick(&self.max_iters, &cfg.max_iters) {
            p.max_iters = iters;
        }
        Ok(p)
    }

    fn gamma(&self, cfg: &FileConfig) -> GammaMode {
        match pick(&self.gamma, &cfg.gamma).unwrap_or(GammaSetting::Median) {
            GammaSetting::Median => GammaMode::Median,
            GammaSetting::Fixed(g) => GammaMode::Fixed(g),
        }
    }
}

pub fn extract(args: &ExtractArgs, cfg: &FileConfig) -> Result<()> {
    let manifest = require(&args.manifest, &cfg.manifest, "manifest")?;
    let out_dir = require(&args.out_dir, &cfg.out_dir, "out-dir")?;
    let kind = match pick(&args.descriptor, &cfg.descriptor).unwrap_or(DescriptorArg::Hog) {
        DescriptorArg::Hog => DescriptorKind::Hog,
        DescriptorArg::Lbp => DescriptorKind::Lbp,
    };
    let mode = match pick(&args.detector, &cfg.detector).unwrap_or(DetectorArg::Temporal) {
        DetectorArg::Dense => DetectorMode::DenseGrid {
            stride: pick(&args.stride, &cfg.stride).unwrap_or(8),
        },
        DetectorArg::Temporal => DetectorMode::TemporalDiff {
            top_k: pick(&args.top_k, &cfg.top_k).unwrap_or(500),
        },
    };
    fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let rows = read_manifest(&manifest)?;
    let out_rows = rows
        .par_iter()
        .map(|row| {
            let file = describe_frames(&row.path, kind, mode)
                .with_context(|| format!("video '{}'", row.video_id))?;
            let name = format!("{}.mmkd", row.video_id);
            file.write_path(&out_dir.join(&name))?;
            Ok(ManifestRow {
                path: PathBuf::from(name),
                ..row.clone()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_manifest(&out_dir.join("manifest.csv"), &out_rows)?;
    info!(
        "wrote {} descriptor files to {}",
        out_rows.len(),
        out_dir.display()
    );
    Ok(())
}

fn describe_frames(dir: &Path, kind: DescriptorKind, mode: DetectorMode) -> Result<DescriptorFile> {
    let video = load_frames(dir)?;
    let points = detect_interest_points(&video, mode)?;
    let records = points
        .par_iter()
        .map(|p| DescriptorRecord {
            x: p.x as f32,
            y: p.y as f32,
            t: p.t as f32,
            vec: kind
                .compute(&extract_patch(&video, p))
                .into_iter()
                .map(|v| v as f32)
                .collect(),
        })
        .collect();
    Ok(DescriptorFile {
        dims: video.dims(),
        dim: kind.dim(),
        records,
    })
}

pub fn dict(args: &DictArgs, cfg: &FileConfig) -> Result<()> {
    let manifest = require(&args.manifest, &cfg.manifest, "manifest")?;
    let out = require(&args.out, &cfg.codebook, "out")?;
    let params = args.codebook.kmeans(cfg)?;
    let videos = load_videos(&manifest)?;
    let pool = pool_descriptors(videos.iter());
    let codebook = train_codebook(&pool, &params)?;
    let gamma = match args.codebook.gamma(cfg) {
        GammaMode::Median => median_gamma(&pool, params.seed)?,
        GammaMode::Fixed(g) => g,
    };
    write_file(&out, codebook_to_bytes(&codebook, Some(gamma))?)?;
    info!(
        "codebook: D={} from {} descriptors, gamma={gamma:e}, written to {}",
        codebook.size(),
        pool.len(),
        out.display()
    );
    Ok(())
}

fn resolve_gamma(cli: &Option<GammaSetting>, cfg: &FileConfig, stored: Option<f64>) -> Result<f64> {
    match pick(cli, &cfg.gamma) {
        Some(GammaSetting::Fixed(g)) => Ok(g),
        Some(GammaSetting::Median) | None => {
            stored.ok_or_else(|| anyhow!("codebook stores no gamma; pass --gamma <value>"))
        }
    }
}

fn feature_rows(videos: &[VideoDescriptorSet], values: Vec<Vec<f64>>) -> Vec<FeatureRow> {
    videos
        .iter()
        .zip(values)
        .map(|(v, values)| FeatureRow {
            label: v.meta.label.unwrap_or(UNLABELED),
            subject: v.meta.subject,
            values,
        })
        .collect()
}

pub fn featurize(args: &FeaturizeArgs, cfg: &FileConfig) -> Result<()> {
    let manifest = require(&args.manifest, &cfg.manifest, "manifest")?;
    let cb_path = require(&args.codebook_path, &cfg.codebook, "codebook")?;
    let out = require(&args.out, &cfg.features, "out")?;
    let (codebook, stored_gamma) = read_codebook(&cb_path)?;
    let videos = load_videos(&manifest)?;
    let size = codebook.size();
    let (fitted, levels) = match pick(&args.mode, &cfg.mode).unwrap_or(ModeArg::Mmk) {
        ModeArg::Bof => (
            FittedFeatures {
                codebook,
                basis: None,
                mode: FeatureMode::Bof,
            },
            0,
        ),
        ModeArg::Mmk => {
            let pcfg = args.pyramid.resolve(cfg)?;
            let gamma = resolve_gamma(&args.gamma, cfg, stored_gamma)?;
            let lambda = pick(&args.pyramid.lambda, &cfg.lambda);
            let levels = pcfg.levels();
            (
                FittedFeatures {
                    basis: Some(build_basis(codebook.clone(), gamma, lambda)?),
                    codebook,
                    mode: FeatureMode::Mmk(pcfg),
                },
                levels,
            )
        }
    };
    let refs: Vec<&VideoDescriptorSet> = videos.iter().collect();
    let values = fitted.transform(&refs)?;
    let dim = values.first().map_or(0, Vec::len);
    let file = FeatureFile {
        dim,
        levels: levels as u32,
        basis_size: size as u32,
        rows: feature_rows(&videos, values),
    };
    write_file(&out, file.to_bytes()?)?;
    info!(
        "wrote {} feature vectors of dimension {dim} to {}",
        file.rows.len(),
        out.display()
    );
    Ok(())
}

fn labeled(file: &FeatureFile) -> Result<LabeledFeatures> {
    let mut data = LabeledFeatures::default();
    for (i, row) in file.rows.iter().enumerate() {
        if row.label == UNLABELED {
            bail!("feature row {i} has no label");
        }
        data.features.push(row.values.clone());
        data.labels.push(row.label);
        data.subjects.push(row.subject);
    }
    Ok(data)
}

impl SvmOpts {
    fn params(&self, cfg: &FileConfig) -> SvmParams {
        let d = SvmParams::default();
        SvmParams {
            c: pick(&self.svm_c, &cfg.svm_c).unwrap_or(d.c),
            seed: pick(&self.svm_seed, &cfg.svm_seed).unwrap_or(d.seed),
            normalize: pick(&self.normalize, &cfg.normalize).unwrap_or(d.normalize),
            ..d
        }
    }
}

pub fn train(args: &TrainArgs, cfg: &FileConfig) -> Result<()> {
    let features = require(&args.features, &cfg.features, "features")?;
    let out = require(&args.out, &cfg.model, "out")?;
    let data = labeled(&read_features(&features)?)?;
    let x: Vec<&[f64]> = data.features.iter().map(Vec::as_slice).collect();
    let model = train_linear_ovr(&x, &data.labels, &args.svm.params(cfg))?;
    write_file(&out, model_to_text(&model))?;
    info!(
        "trained {} classes on {} samples",
        model.labels.len(),
        data.len()
    );
    Ok(())
}

pub fn predict(args: &PredictArgs, cfg: &FileConfig) -> Result<()> {
    let features = require(&args.features, &cfg.features, "features")?;
    let model_path = require(&args.model, &cfg.model, "model")?;
    let text = fs::read_to_string(&model_path)
        .with_context(|| format!("reading {}", model_path.display()))?;
    let model = model_from_text(&text)?;
    let file = read_features(&features)?;
    let mut out = String::from("index,subject,label,predicted\n");
    for (i, row) in file.rows.iter().enumerate() {
        let (pred, _) = model.predict(&row.values)?;
        let label = if row.label == UNLABELED {
            String::new()
        } else {
            row.label.to_string()
        };
        out.push_str(&format!("{i},{},{label},{pred}\n", row.subject));
    }
    match pick(&args.out, &cfg.out) {
        Some(p) => write_file(&p, out),
        None => {
            print!("{out}");
            Ok(())
        }
    }
}

fn protocol(args: &EvalArgs, cfg: &FileConfig, subjects: &[u32]) -> Protocol {
    match pick(&args.protocol, &cfg.protocol).unwrap_or(ProtocolArg::Loso) {
        ProtocolArg::Loso => Protocol::LeaveOneSubjectOut,
        ProtocolArg::Split => {
            let mut distinct = subjects.to_vec();
            distinct.sort_unstable();
            distinct.dedup();
            Protocol::SubjectSplit {
                train_subjects: pick(&args.train_subjects, &cfg.train_subjects)
                    .unwrap_or(distinct.len() / 2),
                runs: pick(&args.runs, &cfg.runs).unwrap_or(5),
                seed: pick(&args.split_seed, &cfg.split_seed).unwrap_or(0),
            }
        }
    }
}

pub fn eval(args: &EvalArgs, cfg: &FileConfig) -> Result<()> {
    let svm = args.svm.params(cfg);
    let report: EvalReport = match (&args.features, &args.manifest) {
        (Some(features), _) => eval_features(features, args, cfg, &svm)?,
        (None, Some(manifest)) => eval_descriptors(manifest, args, cfg, &svm)?,
        (None, None) => match (&cfg.features, &cfg.manifest) {
            (Some(f), _) => eval_features(f, args, cfg, &svm)?,
            (None, Some(m)) => eval_descriptors(m, args, cfg, &svm)?,
            (None, None) => bail!("eval needs --features or --manifest"),
        },
    };
    info!(
        "{} accuracy {:.4} ({} of {}), mean over runs {:.4} +- {:.4}",
        report.protocol,
        report.accuracy,
        report.correct(),
        report.total(),
        report.mean_accuracy,
        report.std_accuracy
    );
    let text = report_to_text(&report);
    match pick(&args.out, &cfg.out) {
        Some(p) => write_file(&p, text)?,
        None => print!("{text}"),
    }
    if let Some(p) = pick(&args.confusion, &cfg.confusion) {
        write_file(&p, confusion_csv(&report))?;
    }
    Ok(())
}

fn eval_features(
    path: &Path,
    args: &EvalArgs,
    cfg: &FileConfig,
    svm: &SvmParams,
) -> Result<EvalReport> {
    let data = labeled(&read_features(path)?)?;
    Ok(match protocol(args, cfg, &data.subjects) {
        Protocol::LeaveOneSubjectOut => evaluate_loso(&data, svm)?,
        Protocol::SubjectSplit {
            train_subjects,
            runs,
            seed,
        } => evaluate_subject_split(&data, train_subjects, runs, seed, svm)?,
    })
}

fn eval_descriptors(
    manifest: &Path,
    args: &EvalArgs,
    cfg: &FileConfig,
    svm: &SvmParams,
) -> Result<EvalReport> {
    let videos = load_videos(manifest)?;
    let subjects: Vec<u32> = videos.iter().map(|v| v.meta.subject).collect();
    let mode = match pick(&args.mode, &cfg.mode).unwrap_or(ModeArg::Mmk) {
        ModeArg::Bof => FeatureMode::Bof,
        ModeArg::Mmk => FeatureMode::Mmk(args.pyramid.resolve(cfg)?),
    };
    let pipeline = FeaturePipeline {
        kmeans: args.codebook.kmeans(cfg)?,
        mode,
        gamma: args.codebook.gamma(cfg),
        lambda: pick(&args.pyramid.lambda, &cfg.lambda),
    };
    Ok(evaluate_videos(
        &videos,
        &pipeline,
        svm,
        protocol(args, cfg, &subjects),
    )?)
}

pub fn kernel_check(args: &KernelCheckArgs, cfg: &FileConfig) -> Result<()> {
    let manifest = require(&args.manifest, &cfg.manifest, "manifest")?;
    let cb_path = require(&args.codebook_path, &cfg.codebook, "codebook")?;
    let features = require(&args.features, &cfg.features, "features")?;
    let tolerance = pick(&args.tolerance, &cfg.tolerance).unwrap_or(1e-6);
    let (codebook, stored_gamma) = read_codebook(&cb_path)?;
    let file = read_features(&features)?;
    let videos = load_videos(&manifest)?;
    ensure!(
        file.levels > 0,
        "feature file holds BoF features; kernel-check needs MMK features"
    );
    ensure!(
        file.rows.len() == videos.len(),
        "feature file has {} rows but the manifest lists {} videos",
        file.rows.len(),
        videos.len()
    );
    ensure!(
        file.basis_size as usize == codebook.size(),
        "feature file was built with D={}, codebook has D={}",
        file.basis_size,
        codebook.size()
    );
    let pcfg = pyramid_config(
        file.levels as usize,
        pick(&args.weights, &cfg.weights).unwrap_or(WeightsArg::Dyadic),
    )?;
    let gamma = resolve_gamma(&args.gamma, cfg, stored_gamma)?;
    let basis = build_basis(codebook, gamma, pick(&args.lambda, &cfg.lambda))?;

    let n = videos.len();
    let pairs: Vec<(usize, usize)> = (0..pick(&args.pairs, &cfg.pairs).unwrap_or(20))
        .map(|k| (k % n, (k * 31 + n / 2) % n))
        .collect();
    let mut used: Vec<usize> = pairs.iter().flat_map(|&(i, j)| [i, j]).collect();
    used.sort_unstable();
    used.dedup();
    let maps: Vec<(usize, Vec<f64>)> = used
        .par_iter()
        .map(|&i| Ok((i, video_feature_map(&videos[i], &basis, &pcfg)?.values)))
        .collect::<Result<_>>()?;
    let map_of = |i: usize| &maps[maps.binary_search_by_key(&i, |m| m.0).unwrap()].1;

    let mut stored_drift = 0.0f64;
    for (i, values) in &maps {
        let stored = &file.rows[*i].values;
        ensure!(
            stored.len() == values.len(),
            "feature dimension differs from recomputed maps"
        );
        let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (a, b) in stored.iter().zip(values) {
            stored_drift = stored_drift.max((a - b).abs() / scale);
        }
    }
    let deviations = pairs
        .par_iter()
        .map(|&(i, j)| {
            let exact = mmk_exact(&videos[i], &videos[j], &basis, &pcfg)?;
            let dot: f64 = map_of(i).iter().zip(map_of(j)).map(|(a, b)| a * b).sum();
            Ok((dot - exact).abs() / exact.abs().max(1.0))
        })
        .collect::<Result<Vec<f64>>>()?;
    let worst = deviations.iter().cloned().fold(0.0, f64::max);
    println!("pairs {}", pairs.len());
    println!("max_relative_deviation {worst:e}");
    println!("stored_feature_deviation {stored_drift:e}");
    println!("tolerance {tolerance:e}");
    ensure!(
        worst <= tolerance,
        "max relative deviation {worst:e} exceeds tolerance {tolerance:e}"
    );
    // stored maps are single precision
    ensure!(
        stored_drift <= 1e-6,
        "stored features deviate from recomputed maps by {stored_drift:e}"
    );
    Ok(())
}

pub fn synth(args: &SynthArgs, cfg: &FileConfig) -> Result<()> {
    let out_dir = require(&args.out_dir, &cfg.out_dir, "out-dir")?;
    let d = SynthConfig::default();
    let scfg = SynthConfig {
        samples_per_class: pick(&args.samples_per_class, &cfg.samples_per_class)
            .unwrap_or(d.samples_per_class),
        subjects: pick(&args.subjects, &cfg.subjects).unwrap_or(d.subjects),
        frames: pick(&args.frames, &cfg.frames).unwrap_or(d.frames),
        width: pick(&args.width, &cfg.width).unwrap_or(d.width),
        height: pick(&args.height, &cfg.height).unwrap_or(d.height),
        blob_radius: pick(&args.blob_radius, &cfg.blob_radius).unwrap_or(d.blob_radius),
        descriptors_per_frame: pick(&args.descriptors_per_frame, &cfg.descriptors_per_frame)
            .unwrap_or(d.descriptors_per_frame),
        descriptor_dim: pick(&args.descriptor_dim, &cfg.descriptor_dim).unwrap_or(d.descriptor_dim),
        prototypes: pick(&args.prototypes, &cfg.prototypes).unwrap_or(d.prototypes),
        noise_sigma: pick(&args.noise_sigma, &cfg.noise_sigma).unwrap_or(d.noise_sigma),
        seed: pick(&args.synth_seed, &cfg.synth_seed).unwrap_or(d.seed),
    };
    let videos = synth_descriptor_files(&scfg)?;
    fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let rows = videos
        .par_iter()
        .map(|v| {
            let name = format!("{}.mmkd", v.meta.video_id);
            v.file.write_path(&out_dir.join(&name))?;
            Ok(ManifestRow {
                video_id: v.meta.video_id.clone(),
                subject: v.meta.subject,
                label: v.meta.label,
                path: PathBuf::from(name),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_manifest(&out_dir.join("manifest.csv"), &rows)?;
    info!(
        "wrote {} synthetic videos to {}",
        rows.len(),
        out_dir.display()
    );
    Ok(())
}

pub fn bench(args: &BenchArgs) -> Result<()> {
    ensure!(
        args.repeats > 0 && !args.sizes.is_empty(),
        "need at least one size and one repeat"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let random_vec = |rng: &mut ChaCha8Rng| {
        (0..args.dim)
            .map(|_| rng.random::<f64>())
            .collect::<Vec<f64>>()
    };
    let centers = (0..args.clusters).map(|_| random_vec(&mut rng)).collect();
    let codebook = Codebook::from_centers(centers)?;
    let basis = build_basis(codebook, 1.0 / args.dim as f64, None)?;
    let pcfg = PyramidConfig::dyadic(args.levels)?;
    let dims = VideoDims::new(320, 240, 64)?;

    println!("descriptors,seconds");
    let mut timings: Vec<(usize, Duration)> = Vec::new();
    for &m in &args.sizes {
        let descriptors = (0..m)
            .map(|_| {
                Ok(LocatedDescriptor {
                    loc: Location::new(rng.random(), rng.random(), rng.random())?,
                    vec: random_vec(&mut rng),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let video = VideoDescriptorSet::new(dims, args.dim, descriptors, VideoMeta::default())?;
        video_feature_map(&video, &basis, &pcfg)?;
        let best = (0..args.repeats)
            .map(|_| {
                let t = Instant::now();
                video_feature_map(&video, &basis, &pcfg).map(|_| t.elapsed())
            })
            .collect::<mmk::Result<Vec<_>>>()?
            .into_iter()
            .min()
            .unwrap();
        println!("{m},{:.6}", best.as_secs_f64());
        timings.push((m, best));
    }
    for w in timings.windows(2) {
        let ((m0, t0), (m1, t1)) = (w[0], w[1]);
        let growth = m1 as f64 / m0 as f64;
        let ratio = t1.as_secs_f64() / t0.as_secs_f64();
        println!("# {m0} -> {m1}: time x{ratio:.2} for size x{growth:.2}");
        ensure!(
            ratio <= args.max_slowdown * growth,
            "time grew x{ratio:.2} for size x{growth:.2}, limit x{:.2}",
            args.max_slowdown * growth
        );
    }
    Ok(())
}
