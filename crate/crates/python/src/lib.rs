//! Python bindings (`mmk_py`).

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use mmk::classify::{
    evaluate_loso as core_loso, evaluate_subject_split, train_linear_ovr, LabeledFeatures, Protocol,
};
use mmk::codebook::train_codebook;
use mmk::descriptors::{
    hog_descriptor, lbp_descriptor, load_precomputed_descriptors, Patch, PATCH_SIZE,
};
use mmk::formats::{codebook_from_bytes, codebook_to_bytes, model_from_text, model_to_text};
use mmk::matchkernel::{bof_histogram, median_gamma as core_median_gamma, phi, video_feature_map};
use mmk::pipeline::{
    evaluate_videos as core_evaluate_videos, FeatureMode, FeaturePipeline, GammaMode,
};
use mmk::pyramid::{normalize_location, voxel_index as core_voxel_index};
use mmk::synth::{synth_gestures as core_synth, SynthConfig};
use mmk::{
    EvalReport, LocatedDescriptor, Location, MmkError, PyramidConfig, SvmParams, VideoDims,
    VideoMeta,
};

fn to_py(e: MmkError) -> PyErr {
    match e {
        MmkError::Io(e) => PyIOError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn refs(rows: &[Vec<f64>]) -> Vec<&[f64]> {
    rows.iter().map(Vec::as_slice).collect()
}

/// `"dyadic"`, `"uniform"` or an explicit list of per-level weights.
fn pyramid(levels: usize, weights: Option<&Bound<'_, PyAny>>) -> PyResult<PyramidConfig> {
    let cfg = match weights {
        None => PyramidConfig::dyadic(levels),
        Some(w) => {
            if let Ok(name) = w.extract::<String>() {
                match name.as_str() {
                    "dyadic" => PyramidConfig::dyadic(levels),
                    "uniform" => PyramidConfig::uniform(levels),
                    other => {
                        return Err(PyValueError::new_err(format!("unknown weights '{other}'")))
                    }
                }
            } else {
                PyramidConfig::new(levels, w.extract::<Vec<f64>>()?)
            }
        }
    };
    cfg.map_err(to_py)
}

#[pyclass(module = "mmk_py", frozen)]
struct Codebook(mmk::Codebook);

#[pymethods]
impl Codebook {
    #[new]
    fn new(centers: Vec<Vec<f64>>) -> PyResult<Self> {
        mmk::Codebook::from_centers(centers)
            .map(Self)
            .map_err(to_py)
    }

    /// k-means++ seeded Lloyd iterations over the given descriptors.
    #[staticmethod]
    #[pyo3(signature = (descriptors, clusters, seed = 0, max_iters = 100))]
    fn train(
        py: Python<'_>,
        descriptors: Vec<Vec<f64>>,
        clusters: usize,
        seed: u64,
        max_iters: usize,
    ) -> PyResult<Self> {
        let mut params = mmk::KMeansParams::new(clusters, seed);
        params.max_iters = max_iters;
        py.detach(|| train_codebook(&refs(&descriptors), &params))
            .map(Self)
            .map_err(to_py)
    }

    /// Returns `(codebook, gamma or None)`.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<(Self, Option<f64>)> {
        let bytes = std::fs::read(&path).map_err(|e| PyIOError::new_err(e.to_string()))?;
        let (cb, gamma) = codebook_from_bytes(&bytes).map_err(to_py)?;
        Ok((Self(cb), gamma))
    }

    #[pyo3(signature = (path, gamma = None))]
    fn save(&self, path: PathBuf, gamma: Option<f64>) -> PyResult<()> {
        let bytes = codebook_to_bytes(&self.0, gamma).map_err(to_py)?;
        std::fs::write(path, bytes).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    #[getter]
    fn centers(&self) -> Vec<Vec<f64>> {
        self.0.centers().to_vec()
    }

    #[getter]
    fn size(&self) -> usize {
        self.0.size()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn quantize(&self, x: Vec<f64>) -> PyResult<usize> {
        self.0.quantize(&x).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.0.size()
    }

    fn __repr__(&self) -> String {
        format!("Codebook(size={}, dim={})", self.0.size(), self.0.dim())
    }
}

/// Descriptors of one video with normalized `(u, v, w)` locations.
#[pyclass(module = "mmk_py", frozen)]
struct VideoDescriptors(mmk::VideoDescriptorSet);

#[pymethods]
impl VideoDescriptors {
    #[new]
    #[pyo3(signature = (locations, descriptors, dims = (1, 1, 1), video_id = String::new(), subject = 0, label = None))]
    fn new(
        locations: Vec<(f64, f64, f64)>,
        descriptors: Vec<Vec<f64>>,
        dims: (u32, u32, u32),
        video_id: String,
        subject: u32,
        label: Option<u32>,
    ) -> PyResult<Self> {
        if locations.len() != descriptors.len() {
            return Err(PyValueError::new_err(
                "locations and descriptors differ in length",
            ));
        }
        let dim = descriptors.first().map_or(0, Vec::len);
        let located = locations
            .into_iter()
            .zip(descriptors)
            .map(|((u, v, w), vec)| {
                Ok(LocatedDescriptor {
                    loc: Location::new(u, v, w)?,
                    vec,
                })
            })
            .collect::<mmk::Result<Vec<_>>>()
            .map_err(to_py)?;
        let dims = VideoDims::new(dims.0, dims.1, dims.2).map_err(to_py)?;
        let meta = VideoMeta {
            video_id,
            subject,
            label,
        };
        mmk::VideoDescriptorSet::new(dims, dim, located, meta)
            .map(Self)
            .map_err(to_py)
    }

    /// Builds a set from pixel coordinates `(x, y, t)` in a video of the
    /// given `(width, height, frames)`.
    #[staticmethod]
    #[pyo3(signature = (points, descriptors, dims, video_id = String::new(), subject = 0, label = None))]
    fn from_pixels(
        points: Vec<(f64, f64, f64)>,
        descriptors: Vec<Vec<f64>>,
        dims: (u32, u32, u32),
        video_id: String,
        subject: u32,
        label: Option<u32>,
    ) -> PyResult<Self> {
        let vd = VideoDims::new(dims.0, dims.1, dims.2).map_err(to_py)?;
        let locations = points
            .into_iter()
            .map(|(x, y, t)| normalize_location(x, y, t, vd).map(|l| (l.u(), l.v(), l.w())))
            .collect::<mmk::Result<Vec<_>>>()
            .map_err(to_py)?;
        Self::new(locations, descriptors, dims, video_id, subject, label)
    }

    /// Reads a binary descriptor file.
    #[staticmethod]
    #[pyo3(signature = (path, video_id = String::new(), subject = 0, label = None))]
    fn load(path: PathBuf, video_id: String, subject: u32, label: Option<u32>) -> PyResult<Self> {
        load_precomputed_descriptors(
            &path,
            VideoMeta {
                video_id,
                subject,
                label,
            },
        )
        .map(Self)
        .map_err(to_py)
    }

    #[getter]
    fn video_id(&self) -> String {
        self.0.meta.video_id.clone()
    }

    #[getter]
    fn subject(&self) -> u32 {
        self.0.meta.subject
    }

    #[getter]
    fn label(&self) -> Option<u32> {
        self.0.meta.label
    }

    #[getter]
    fn descriptor_dim(&self) -> usize {
        self.0.descriptor_dim()
    }

    fn locations(&self) -> Vec<(f64, f64, f64)> {
        self.0
            .descriptors()
            .iter()
            .map(|d| (d.loc.u(), d.loc.v(), d.loc.w()))
            .collect()
    }

    fn descriptors(&self) -> Vec<Vec<f64>> {
        self.0.descriptors().iter().map(|d| d.vec.clone()).collect()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "VideoDescriptors(id={:?}, m={}, d={}, subject={}, label={:?})",
            self.0.meta.video_id,
            self.0.len(),
            self.0.descriptor_dim(),
            self.0.meta.subject,
            self.0.meta.label
        )
    }
}

#[pyclass(module = "mmk_py", frozen)]
struct KernelBasis(mmk::KernelBasis);

#[pymethods]
impl KernelBasis {
    #[new]
    #[pyo3(signature = (codebook, gamma, lam = None))]
    fn new(codebook: PyRef<'_, Codebook>, gamma: f64, lam: Option<f64>) -> PyResult<Self> {
        let cb = codebook.0.clone();
        match lam {
            Some(l) => mmk::KernelBasis::with_lambda(cb, gamma, l),
            None => mmk::KernelBasis::new(cb, gamma),
        }
        .map(Self)
        .map_err(to_py)
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.0.gamma()
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.0.lambda()
    }

    #[getter]
    fn size(&self) -> usize {
        self.0.size()
    }

    fn whitening(&self) -> Vec<Vec<f64>> {
        let g = self.0.whitening();
        g.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    /// Frobenius norm of `G^T G (K_ZZ + lambda I) - I`.
    fn whitening_residual(&self) -> f64 {
        self.0.whitening_residual()
    }

    fn kernel_vector(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self
            .0
            .kernel_vector(&x)
            .map_err(to_py)?
            .iter()
            .copied()
            .collect())
    }

    fn phi(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        phi(&x, &self.0).map_err(to_py)
    }
}

#[pyclass(module = "mmk_py", frozen)]
struct LinearModel(mmk::LinearModel);

#[pymethods]
impl LinearModel {
    /// One-vs-rest squared-hinge linear SVM.
    #[staticmethod]
    #[pyo3(signature = (features, labels, c = 1.0, normalize = false, seed = 0))]
    fn train(
        py: Python<'_>,
        features: Vec<Vec<f64>>,
        labels: Vec<u32>,
        c: f64,
        normalize: bool,
        seed: u64,
    ) -> PyResult<Self> {
        let params = SvmParams {
            c,
            normalize,
            seed,
            ..SvmParams::default()
        };
        py.detach(|| train_linear_ovr(&refs(&features), &labels, &params))
            .map(Self)
            .map_err(to_py)
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        model_from_text(text).map(Self).map_err(to_py)
    }

    fn to_text(&self) -> String {
        model_to_text(&self.0)
    }

    #[getter]
    fn labels(&self) -> Vec<u32> {
        self.0.labels.clone()
    }

    fn scores(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.0.scores(&x).map_err(to_py)
    }

    fn predict(&self, x: Vec<f64>) -> PyResult<u32> {
        self.0.predict(&x).map(|p| p.0).map_err(to_py)
    }
}

#[pyfunction]
#[pyo3(signature = (descriptors, seed = 0))]
fn median_gamma(descriptors: Vec<Vec<f64>>, seed: u64) -> PyResult<f64> {
    core_median_gamma(&refs(&descriptors), seed).map_err(to_py)
}

#[pyfunction]
fn voxel_index(u: f64, v: f64, w: f64, level: usize) -> PyResult<usize> {
    if level == 0 {
        return Err(PyValueError::new_err("level must be >= 1"));
    }
    Ok(core_voxel_index(
        &Location::new(u, v, w).map_err(to_py)?,
        level,
    ))
}

#[pyfunction]
fn feature_dim(basis_size: usize, levels: usize) -> usize {
    mmk::VideoFeatureMap::expected_dim(basis_size, levels)
}

#[pyfunction]
#[pyo3(signature = (video, basis, levels, weights = None))]
fn feature_map(
    py: Python<'_>,
    video: PyRef<'_, VideoDescriptors>,
    basis: PyRef<'_, KernelBasis>,
    levels: usize,
    weights: Option<&Bound<'_, PyAny>>,
) -> PyResult<Vec<f64>> {
    let pcfg = pyramid(levels, weights)?;
    let (v, b) = (&video.0, &basis.0);
    py.detach(|| video_feature_map(v, b, &pcfg))
        .map(|f| f.values)
        .map_err(to_py)
}

/// The pyramid match kernel by direct summation over descriptor pairs.
#[pyfunction]
#[pyo3(signature = (x, y, basis, levels, weights = None))]
fn mmk_exact(
    py: Python<'_>,
    x: PyRef<'_, VideoDescriptors>,
    y: PyRef<'_, VideoDescriptors>,
    basis: PyRef<'_, KernelBasis>,
    levels: usize,
    weights: Option<&Bound<'_, PyAny>>,
) -> PyResult<f64> {
    let pcfg = pyramid(levels, weights)?;
    let (x, y, b) = (&x.0, &y.0, &basis.0);
    py.detach(|| mmk::matchkernel::mmk_exact(x, y, b, &pcfg))
        .map_err(to_py)
}

/// Normalized codeword histogram.
#[pyfunction]
fn bof(video: PyRef<'_, VideoDescriptors>, codebook: PyRef<'_, Codebook>) -> PyResult<Vec<f64>> {
    bof_histogram(&video.0, &codebook.0)
        .map(|h| h.values())
        .map_err(to_py)
}

fn patch(rows: Vec<Vec<f64>>) -> PyResult<Patch> {
    if rows.len() != PATCH_SIZE || rows.iter().any(|r| r.len() != PATCH_SIZE) {
        return Err(PyValueError::new_err(format!(
            "patch must be {PATCH_SIZE}x{PATCH_SIZE}"
        )));
    }
    Ok(Patch::from_fn(|r, c| rows[r][c]))
}

#[pyfunction]
fn hog(rows: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    Ok(hog_descriptor(&patch(rows)?).to_vec())
}

#[pyfunction]
fn lbp(rows: Vec<Vec<f64>>) -> PyResult<Vec<u32>> {
    Ok(lbp_descriptor(&patch(rows)?).to_vec())
}

#[pyfunction]
#[pyo3(signature = (samples_per_class = 40, subjects = 4, noise_sigma = 0.05, seed = 0, frames = 24, descriptor_dim = 16))]
fn synth_gestures(
    samples_per_class: usize,
    subjects: u32,
    noise_sigma: f64,
    seed: u64,
    frames: u32,
    descriptor_dim: usize,
) -> PyResult<Vec<VideoDescriptors>> {
    let cfg = SynthConfig {
        samples_per_class,
        subjects,
        noise_sigma,
        seed,
        frames,
        descriptor_dim,
        ..SynthConfig::default()
    };
    Ok(core_synth(&cfg)
        .map_err(to_py)?
        .into_iter()
        .map(VideoDescriptors)
        .collect())
}

fn report_dict<'py>(py: Python<'py>, r: &EvalReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("protocol", &r.protocol)?;
    d.set_item("accuracy", r.accuracy)?;
    d.set_item("labels", &r.labels)?;
    d.set_item("confusion", &r.confusion)?;
    d.set_item("run_accuracies", &r.run_accuracies)?;
    d.set_item("mean_accuracy", r.mean_accuracy)?;
    d.set_item("std_accuracy", r.std_accuracy)?;
    Ok(d)
}

fn protocol(
    name: &str,
    train_subjects: Option<usize>,
    runs: usize,
    seed: u64,
    subjects: &[u32],
) -> PyResult<Protocol> {
    match name {
        "loso" => Ok(Protocol::LeaveOneSubjectOut),
        "split" => {
            let mut distinct = subjects.to_vec();
            distinct.sort_unstable();
            distinct.dedup();
            Ok(Protocol::SubjectSplit {
                train_subjects: train_subjects.unwrap_or(distinct.len() / 2),
                runs,
                seed,
            })
        }
        other => Err(PyValueError::new_err(format!("unknown protocol '{other}'"))),
    }
}

/// Evaluates precomputed features; returns a dict with accuracy, confusion
/// matrix and per-run accuracies.
#[pyfunction]
#[pyo3(signature = (features, labels, subjects, protocol_name = "loso", train_subjects = None, runs = 5, seed = 0, c = 1.0))]
#[allow(clippy::too_many_arguments)]
fn evaluate_features<'py>(
    py: Python<'py>,
    features: Vec<Vec<f64>>,
    labels: Vec<u32>,
    subjects: Vec<u32>,
    protocol_name: &str,
    train_subjects: Option<usize>,
    runs: usize,
    seed: u64,
    c: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let proto = protocol(protocol_name, train_subjects, runs, seed, &subjects)?;
    let data = LabeledFeatures {
        features,
        labels,
        subjects,
    };
    let params = SvmParams {
        c,
        ..SvmParams::default()
    };
    let report = py
        .detach(|| match proto {
            Protocol::LeaveOneSubjectOut => core_loso(&data, &params),
            Protocol::SubjectSplit {
                train_subjects,
                runs,
                seed,
            } => evaluate_subject_split(&data, train_subjects, runs, seed, &params),
        })
        .map_err(to_py)?;
    report_dict(py, &report)
}

/// Evaluates descriptor sets end to end, training the codebook inside each
/// fold. `levels = 0` selects bag-of-features.
#[pyfunction]
#[pyo3(signature = (videos, clusters, levels = 2, protocol_name = "loso", train_subjects = None, runs = 5, seed = 0, c = 1.0, gamma = None))]
#[allow(clippy::too_many_arguments)]
fn evaluate_videos<'py>(
    py: Python<'py>,
    videos: Vec<PyRef<'py, VideoDescriptors>>,
    clusters: usize,
    levels: usize,
    protocol_name: &str,
    train_subjects: Option<usize>,
    runs: usize,
    seed: u64,
    c: f64,
    gamma: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let sets: Vec<mmk::VideoDescriptorSet> = videos.iter().map(|v| v.0.clone()).collect();
    let subjects: Vec<u32> = sets.iter().map(|v| v.meta.subject).collect();
    let proto = protocol(protocol_name, train_subjects, runs, seed, &subjects)?;
    let mode = if levels == 0 {
        FeatureMode::Bof
    } else {
        FeatureMode::Mmk(PyramidConfig::dyadic(levels).map_err(to_py)?)
    };
    let pipeline = FeaturePipeline {
        kmeans: mmk::KMeansParams::new(clusters, seed),
        mode,
        gamma: gamma.map_or(GammaMode::Median, GammaMode::Fixed),
        lambda: None,
    };
    let params = SvmParams {
        c,
        ..SvmParams::default()
    };
    let report = py
        .detach(|| core_evaluate_videos(&sets, &pipeline, &params, proto))
        .map_err(to_py)?;
    report_dict(py, &report)
}

#[pymodule]
fn mmk_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Codebook>()?;
    m.add_class::<VideoDescriptors>()?;
    m.add_class::<KernelBasis>()?;
    m.add_class::<LinearModel>()?;
    m.add_function(wrap_pyfunction!(median_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(voxel_index, m)?)?;
    m.add_function(wrap_pyfunction!(feature_dim, m)?)?;
    m.add_function(wrap_pyfunction!(feature_map, m)?)?;
    m.add_function(wrap_pyfunction!(mmk_exact, m)?)?;
    m.add_function(wrap_pyfunction!(bof, m)?)?;
    m.add_function(wrap_pyfunction!(hog, m)?)?;
    m.add_function(wrap_pyfunction!(lbp, m)?)?;
    m.add_function(wrap_pyfunction!(synth_gestures, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_features, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_videos, m)?)?;
    Ok(())
}
