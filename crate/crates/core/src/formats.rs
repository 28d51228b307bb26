//! On-disk formats. Binary files are little-endian.
//!
//! Descriptor file (`.mmkd`):
//!
//! ```text
//! "MMKD" u32 version=1 u32 m u32 d u32 width u32 height u32 frames
//! m x [f32 x, f32 y, f32 t, f32 x d vector]
//! ```
//!
//! `x`, `y` are pixel coordinates and `t` the frame index; they are
//! normalized by the header dims when loaded.
//!
//! Codebook file (`.mmkc`):
//!
//! ```text
//! "MMKC" u32 version=1 u32 D u32 d f64 gamma (0 = unset) D x d f32 centers
//! ```
//!
//! Feature-map file (`.mmkf`):
//!
//! ```text
//! "MMKF" u32 version=1 u32 count u32 dim u32 L u32 D
//! count x [u32 label, u32 subject, f32 x dim values]
//! ```
//!
//! `L = 0` marks bag-of-features histograms; label `u32::MAX` means unlabeled.
//!
//! Models and evaluation reports are line-oriented text; see
//! [`model_to_text`] and [`report_to_text`].

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::classify::{EvalReport, LinearModel, SvmParams};
use crate::codebook::Codebook;
use crate::error::{MmkError, Result};
use crate::pyramid::{
    normalize_location, LocatedDescriptor, VideoDescriptorSet, VideoDims, VideoMeta,
};

pub const VERSION: u32 = 1;
pub const UNLABELED: u32 = u32::MAX;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8], magic: &[u8; 4], what: &'static str) -> Result<Self> {
        let mut r = Self {
            bytes,
            pos: 0,
            what,
        };
        if r.take(4)? != magic {
            return Err(MmkError::Format(format!("{what}: bad magic")));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(MmkError::Format(format!(
                "{what}: unsupported version {version}"
            )));
        }
        Ok(r)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| MmkError::Format(format!("{}: truncated file", self.what)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32> {
        let v = f32::from_le_bytes(self.take(4)?.try_into().unwrap());
        if !v.is_finite() {
            return Err(MmkError::Format(format!("{}: non-finite value", self.what)));
        }
        Ok(v)
    }

    fn f64(&mut self) -> Result<f64> {
        let v = f64::from_le_bytes(self.take(8)?.try_into().unwrap());
        if !v.is_finite() {
            return Err(MmkError::Format(format!("{}: non-finite value", self.what)));
        }
        Ok(v)
    }

    fn finish(self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(MmkError::Format(format!(
                "{}: {} trailing bytes",
                self.what,
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f32(out: &mut Vec<u8>, v: f32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn to_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| MmkError::Format(format!("{what} {v} exceeds u32")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorRecord {
    pub x: f32,
    pub y: f32,
    pub t: f32,
    pub vec: Vec<f32>,
}

/// Raw contents of a descriptor file, with pixel-space locations.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorFile {
    pub dims: VideoDims,
    pub dim: usize,
    pub records: Vec<DescriptorRecord>,
}

impl DescriptorFile {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(28 + self.records.len() * 4 * (3 + self.dim));
        out.extend_from_slice(b"MMKD");
        put_u32(&mut out, VERSION);
        put_u32(&mut out, to_u32(self.records.len(), "descriptor count")?);
        put_u32(&mut out, to_u32(self.dim, "descriptor dim")?);
        put_u32(&mut out, self.dims.width);
        put_u32(&mut out, self.dims.height);
        put_u32(&mut out, self.dims.frames);
        for r in &self.records {
            if r.vec.len() != self.dim {
                return Err(MmkError::DimensionMismatch {
                    expected: self.dim,
                    got: r.vec.len(),
                });
            }
            put_f32(&mut out, r.x);
            put_f32(&mut out, r.y);
            put_f32(&mut out, r.t);
            r.vec.iter().for_each(|&v| put_f32(&mut out, v));
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, b"MMKD", "descriptor file")?;
        let m = r.u32()? as usize;
        let dim = r.u32()? as usize;
        let dims = VideoDims::new(r.u32()?, r.u32()?, r.u32()?)
            .map_err(|e| MmkError::Format(format!("descriptor file: {e}")))?;
        let expected = m.saturating_mul(4 * (3 + dim));
        if bytes.len() - r.pos != expected {
            return Err(MmkError::Format(format!(
                "descriptor file: header declares {m} records of dimension {dim} ({expected} bytes), found {} bytes",
                bytes.len() - r.pos
            )));
        }
        let mut records = Vec::with_capacity(m);
        for _ in 0..m {
            let (x, y, t) = (r.f32()?, r.f32()?, r.f32()?);
            let vec = (0..dim).map(|_| r.f32()).collect::<Result<Vec<_>>>()?;
            records.push(DescriptorRecord { x, y, t, vec });
        }
        r.finish()?;
        Ok(Self { dims, dim, records })
    }

    pub fn read_path(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
            .map_err(|e| MmkError::Format(format!("{}: {e}", path.display())))
    }

    pub fn write_path(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    /// Normalizes locations by the header dims.
    pub fn into_video_set(self, meta: VideoMeta) -> Result<VideoDescriptorSet> {
        let dims = self.dims;
        let descriptors = self
            .records
            .into_iter()
            .map(|r| {
                Ok(LocatedDescriptor {
                    loc: normalize_location(f64::from(r.x), f64::from(r.y), f64::from(r.t), dims)
                        .map_err(|e| MmkError::Format(e.to_string()))?,
                    vec: r.vec.into_iter().map(f64::from).collect(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        VideoDescriptorSet::new(dims, self.dim, descriptors, meta)
    }
}

pub fn codebook_to_bytes(codebook: &Codebook, gamma: Option<f64>) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(24 + codebook.size() * codebook.dim() * 4);
    out.extend_from_slice(b"MMKC");
    put_u32(&mut out, VERSION);
    put_u32(&mut out, to_u32(codebook.size(), "codebook size")?);
    put_u32(&mut out, to_u32(codebook.dim(), "codebook dim")?);
    out.extend_from_slice(&gamma.unwrap_or(0.0).to_le_bytes());
    for c in codebook.centers() {
        c.iter().for_each(|&v| put_f32(&mut out, v as f32));
    }
    Ok(out)
}

/// Codebook and stored bandwidth (`None` when the file holds 0).
pub fn codebook_from_bytes(bytes: &[u8]) -> Result<(Codebook, Option<f64>)> {
    let mut r = Reader::new(bytes, b"MMKC", "codebook file")?;
    let size = r.u32()? as usize;
    let dim = r.u32()? as usize;
    let gamma = r.f64()?;
    if size == 0 || dim == 0 {
        return Err(MmkError::Format("codebook file: empty codebook".into()));
    }
    if bytes.len() - r.pos != size.saturating_mul(dim).saturating_mul(4) {
        return Err(MmkError::Format(format!(
            "codebook file: header declares {size}x{dim} centers, payload is {} bytes",
            bytes.len() - r.pos
        )));
    }
    let centers = (0..size)
        .map(|_| {
            (0..dim)
                .map(|_| r.f32().map(f64::from))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    r.finish()?;
    let gamma = (gamma != 0.0).then_some(gamma);
    if gamma.is_some_and(|g| g < 0.0) {
        return Err(MmkError::Format("codebook file: negative gamma".into()));
    }
    Ok((Codebook::from_centers(centers)?, gamma))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub label: u32,
    pub subject: u32,
    pub values: Vec<f64>,
}

/// Contents of a feature-map file.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFile {
    pub dim: usize,
    /// Pyramid levels, 0 for bag-of-features.
    pub levels: u32,
    pub basis_size: u32,
    pub rows: Vec<FeatureRow>,
}

impl FeatureFile {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(24 + self.rows.len() * (8 + 4 * self.dim));
        out.extend_from_slice(b"MMKF");
        put_u32(&mut out, VERSION);
        put_u32(&mut out, to_u32(self.rows.len(), "video count")?);
        put_u32(&mut out, to_u32(self.dim, "feature dim")?);
        put_u32(&mut out, self.levels);
        put_u32(&mut out, self.basis_size);
        for row in &self.rows {
            if row.values.len() != self.dim {
                return Err(MmkError::DimensionMismatch {
                    expected: self.dim,
                    got: row.values.len(),
                });
            }
            put_u32(&mut out, row.label);
            put_u32(&mut out, row.subject);
            row.values.iter().for_each(|&v| put_f32(&mut out, v as f32));
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, b"MMKF", "feature file")?;
        let count = r.u32()? as usize;
        let dim = r.u32()? as usize;
        let levels = r.u32()?;
        let basis_size = r.u32()?;
        if bytes.len() - r.pos != count.saturating_mul(8 + 4 * dim) {
            return Err(MmkError::Format(format!(
                "feature file: header declares {count} rows of dimension {dim}, payload is {} bytes",
                bytes.len() - r.pos
            )));
        }
        let rows = (0..count)
            .map(|_| {
                Ok(FeatureRow {
                    label: r.u32()?,
                    subject: r.u32()?,
                    values: (0..dim)
                        .map(|_| r.f32().map(f64::from))
                        .collect::<Result<_>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        r.finish()?;
        Ok(Self {
            dim,
            levels,
            basis_size,
            rows,
        })
    }
}

fn fmt_floats(out: &mut String, values: &[f64]) {
    for v in values {
        let _ = write!(out, " {v:?}");
    }
}

/// Text form of a model:
///
/// ```text
/// mmk-linear-model 1
/// loss squared_hinge
/// c <C>
/// bias <B>
/// epochs <max epochs>
/// tol <tol>
/// seed <seed>
/// normalize <true|false>
/// classes <n>
/// dim <d>
/// class <label> <bias> <w_0> ... <w_{d-1}>    (one line per class)
/// ```
pub fn model_to_text(model: &LinearModel) -> String {
    let p = &model.params;
    let mut s = String::new();
    let _ = writeln!(s, "mmk-linear-model {VERSION}");
    let _ = writeln!(s, "loss squared_hinge");
    let _ = writeln!(s, "c {:?}", p.c);
    let _ = writeln!(s, "bias {:?}", p.bias);
    let _ = writeln!(s, "epochs {}", p.max_epochs);
    let _ = writeln!(s, "tol {:?}", p.tol);
    let _ = writeln!(s, "seed {}", p.seed);
    let _ = writeln!(s, "normalize {}", p.normalize);
    let _ = writeln!(s, "classes {}", model.labels.len());
    let _ = writeln!(s, "dim {}", model.dim());
    for ((label, b), w) in model.labels.iter().zip(&model.biases).zip(&model.weights) {
        let _ = write!(s, "class {label} {b:?}");
        fmt_floats(&mut s, w);
        s.push('\n');
    }
    s
}

struct Lines<'a> {
    inner: std::str::Lines<'a>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn field(&mut self, key: &str) -> Result<&'a str> {
        self.line += 1;
        let raw = self.inner.next().ok_or_else(|| {
            MmkError::Format(format!(
                "line {}: expected '{key}', found end of file",
                self.line
            ))
        })?;
        raw.strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| MmkError::Format(format!("line {}: expected '{key}'", self.line)))
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let line = self.line + 1;
        self.field(key)?
            .parse()
            .map_err(|_| MmkError::Format(format!("line {line}: bad value for '{key}'")))
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, line: usize) -> Result<Vec<T>> {
    s.split_ascii_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| MmkError::Format(format!("line {line}: bad number '{t}'")))
        })
        .collect()
}

pub fn model_from_text(text: &str) -> Result<LinearModel> {
    let mut l = Lines {
        inner: text.lines(),
        line: 0,
    };
    let version: u32 = l.parse("mmk-linear-model")?;
    if version != VERSION {
        return Err(MmkError::Format(format!(
            "unsupported model version {version}"
        )));
    }
    if l.field("loss")? != "squared_hinge" {
        return Err(MmkError::Format("unsupported loss".into()));
    }
    let params = SvmParams {
        c: l.parse("c")?,
        bias: l.parse("bias")?,
        max_epochs: l.parse("epochs")?,
        tol: l.parse("tol")?,
        seed: l.parse("seed")?,
        normalize: l.parse("normalize")?,
    };
    let classes: usize = l.parse("classes")?;
    let dim: usize = l.parse("dim")?;
    let mut model = LinearModel {
        labels: vec![],
        weights: vec![],
        biases: vec![],
        params,
    };
    for _ in 0..classes {
        let line = l.line + 1;
        let mut parts = l.field("class")?.splitn(3, ' ');
        let label = parts.next().and_then(|t| t.parse().ok());
        let bias = parts.next().and_then(|t| t.parse().ok());
        let (Some(label), Some(bias)) = (label, bias) else {
            return Err(MmkError::Format(format!(
                "line {line}: malformed class line"
            )));
        };
        let w: Vec<f64> = parse_list(parts.next().unwrap_or(""), line)?;
        if w.len() != dim {
            return Err(MmkError::DimensionMismatch {
                expected: dim,
                got: w.len(),
            });
        }
        model.labels.push(label);
        model.biases.push(bias);
        model.weights.push(w);
    }
    if l.inner.next().is_some() {
        return Err(MmkError::Format("trailing lines after model".into()));
    }
    Ok(model)
}

/// Text form of an evaluation report:
///
/// ```text
/// mmk-eval-report 1
/// protocol <split|loso>
/// runs <n>
/// total <test predictions>
/// correct <trace of confusion>
/// accuracy <correct / total>
/// mean_run_accuracy <mean>
/// std_run_accuracy <sample std>
/// run_accuracies <a_1> ... <a_n>
/// labels <l_1> ... <l_C>
/// confusion <true label> <count predicted l_1> ... <count predicted l_C>   (one line per class)
/// ```
pub fn report_to_text(report: &EvalReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "mmk-eval-report {VERSION}");
    let _ = writeln!(s, "protocol {}", report.protocol);
    let _ = writeln!(s, "runs {}", report.run_accuracies.len());
    let _ = writeln!(s, "total {}", report.total());
    let _ = writeln!(s, "correct {}", report.correct());
    let _ = writeln!(s, "accuracy {:?}", report.accuracy);
    let _ = writeln!(s, "mean_run_accuracy {:?}", report.mean_accuracy);
    let _ = writeln!(s, "std_run_accuracy {:?}", report.std_accuracy);
    s.push_str("run_accuracies");
    fmt_floats(&mut s, &report.run_accuracies);
    s.push('\n');
    s.push_str("labels");
    for l in &report.labels {
        let _ = write!(s, " {l}");
    }
    s.push('\n');
    for (l, row) in report.labels.iter().zip(&report.confusion) {
        let _ = write!(s, "confusion {l}");
        for c in row {
            let _ = write!(s, " {c}");
        }
        s.push('\n');
    }
    s
}

pub fn report_from_text(text: &str) -> Result<EvalReport> {
    let mut l = Lines {
        inner: text.lines(),
        line: 0,
    };
    let version: u32 = l.parse("mmk-eval-report")?;
    if version != VERSION {
        return Err(MmkError::Format(format!(
            "unsupported report version {version}"
        )));
    }
    let protocol = l.field("protocol")?.to_string();
    let runs: usize = l.parse("runs")?;
    let total: u64 = l.parse("total")?;
    let correct: u64 = l.parse("correct")?;
    let accuracy = l.parse("accuracy")?;
    let mean_accuracy = l.parse("mean_run_accuracy")?;
    let std_accuracy = l.parse("std_run_accuracy")?;
    let line = l.line + 1;
    let run_accuracies: Vec<f64> = parse_list(l.field("run_accuracies").unwrap_or(""), line)?;
    let line = l.line + 1;
    let labels: Vec<u32> = parse_list(l.field("labels")?, line)?;
    if run_accuracies.len() != runs {
        return Err(MmkError::Format(
            "run count does not match run_accuracies".into(),
        ));
    }
    let mut confusion = Vec::with_capacity(labels.len());
    for &label in &labels {
        let line = l.line + 1;
        let row: Vec<u64> = parse_list(l.field("confusion")?, line)?;
        if row.first() != Some(&u64::from(label)) || row.len() != labels.len() + 1 {
            return Err(MmkError::Format(format!(
                "line {line}: malformed confusion row"
            )));
        }
        confusion.push(row[1..].to_vec());
    }
    let report = EvalReport {
        protocol,
        accuracy,
        labels,
        confusion,
        run_accuracies,
        mean_accuracy,
        std_accuracy,
    };
    if report.total() != total || report.correct() != correct {
        return Err(MmkError::Format(
            "totals do not match confusion matrix".into(),
        ));
    }
    Ok(report)
}

/// Confusion matrix as CSV: header `true\pred,<labels...>`, one row per true
/// label.
pub fn confusion_csv(report: &EvalReport) -> String {
    let mut s = String::from("true\\pred");
    for l in &report.labels {
        let _ = write!(s, ",{l}");
    }
    s.push('\n');
    for (l, row) in report.labels.iter().zip(&report.confusion) {
        let _ = write!(s, "{l}");
        for c in row {
            let _ = write!(s, ",{c}");
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn descriptor_file(m: usize, d: usize) -> DescriptorFile {
        DescriptorFile {
            dims: VideoDims::new(100, 50, 25).unwrap(),
            dim: d,
            records: (0..m)
                .map(|i| DescriptorRecord {
                    x: i as f32,
                    y: 0.5 * i as f32,
                    t: (i % 25) as f32,
                    vec: (0..d).map(|j| (i * d + j) as f32 * 0.25).collect(),
                })
                .collect(),
        }
    }

    #[test]
    fn empty_descriptor_file_is_valid() {
        let f = descriptor_file(0, 128);
        let back = DescriptorFile::from_bytes(&f.to_bytes().unwrap()).unwrap();
        let set = back.into_video_set(VideoMeta::default()).unwrap();
        assert!(set.is_empty());
        assert_eq!(set.descriptor_dim(), 128);
    }

    #[test]
    fn descriptor_file_layout() {
        let f = descriptor_file(3, 128);
        let bytes = f.to_bytes().unwrap();
        assert_eq!(&bytes[..4], b"MMKD");
        assert_eq!(bytes.len(), 28 + 3 * 4 * 131);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 128);
        let set = DescriptorFile::from_bytes(&bytes)
            .unwrap()
            .into_video_set(VideoMeta::default())
            .unwrap();
        assert_eq!(set.descriptor_dim(), 128);
        assert_eq!(set.descriptors()[2].loc.u(), 0.02);
    }

    #[test]
    fn descriptor_file_rejects_bad_input() {
        let mut bytes = descriptor_file(2, 4).to_bytes().unwrap();
        // NaN in the first vector entry
        let off = 28 + 12;
        bytes[off..off + 4].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(
            DescriptorFile::from_bytes(&bytes),
            Err(MmkError::Format(_))
        ));

        let mut bytes = descriptor_file(2, 4).to_bytes().unwrap();
        bytes[12..16].copy_from_slice(&5u32.to_le_bytes());
        assert!(matches!(
            DescriptorFile::from_bytes(&bytes),
            Err(MmkError::Format(_))
        ));

        let bytes = descriptor_file(2, 4).to_bytes().unwrap();
        assert!(DescriptorFile::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(DescriptorFile::from_bytes(b"MMKC\x01\x00\x00\x00").is_err());
    }

    #[test]
    fn codebook_round_trip_with_gamma() {
        let cb = Codebook::from_centers(vec![vec![0.5, -1.25], vec![3.0, 0.125]]).unwrap();
        let bytes = codebook_to_bytes(&cb, Some(0.75)).unwrap();
        let (back, gamma) = codebook_from_bytes(&bytes).unwrap();
        assert_eq!(back.centers(), cb.centers());
        assert_eq!(gamma, Some(0.75));
        assert_eq!(codebook_to_bytes(&back, gamma).unwrap(), bytes);
        let (_, none) = codebook_from_bytes(&codebook_to_bytes(&cb, None).unwrap()).unwrap();
        assert_eq!(none, None);
    }

    #[test]
    fn model_round_trip() {
        let model = LinearModel {
            labels: vec![0, 4],
            weights: vec![vec![0.1, -2.5e-7, 3.0], vec![1.0 / 3.0, 0.0, -1e300]],
            biases: vec![0.5, -0.25],
            params: SvmParams {
                c: 2.0,
                seed: 7,
                normalize: true,
                ..SvmParams::default()
            },
        };
        let text = model_to_text(&model);
        let back = model_from_text(&text).unwrap();
        assert_eq!(back, model);
        assert_eq!(model_to_text(&back), text);
        assert!(model_from_text(&text.replace("dim 3", "dim 4")).is_err());
    }

    #[test]
    fn report_round_trip_and_csv() {
        let report = EvalReport {
            protocol: "loso".into(),
            accuracy: 0.75,
            labels: vec![0, 1],
            confusion: vec![vec![3, 1], vec![1, 3]],
            run_accuracies: vec![0.5, 1.0],
            mean_accuracy: 0.75,
            std_accuracy: 0.353_553_390_593_273_8,
        };
        let text = report_to_text(&report);
        assert_eq!(report_from_text(&text).unwrap(), report);
        assert_eq!(confusion_csv(&report), "true\\pred,0,1\n0,3,1\n1,1,3\n");
    }

    proptest! {
        #[test]
        fn descriptor_files_round_trip(
            dims in (1u32..500, 1u32..500, 1u32..100),
            recs in prop::collection::vec((0.0f32..500.0, 0.0f32..500.0, 0.0f32..100.0, prop::collection::vec(-1e6f32..1e6, 5)), 0..20),
        ) {
            let f = DescriptorFile {
                dims: VideoDims::new(dims.0, dims.1, dims.2).unwrap(),
                dim: 5,
                records: recs.into_iter().map(|(x, y, t, vec)| DescriptorRecord { x, y, t, vec }).collect(),
            };
            let bytes = f.to_bytes().unwrap();
            let back = DescriptorFile::from_bytes(&bytes).unwrap();
            prop_assert_eq!(&back, &f);
            prop_assert_eq!(back.to_bytes().unwrap(), bytes);
        }

        #[test]
        fn feature_files_round_trip(
            rows in prop::collection::vec((any::<u32>(), any::<u32>(), prop::collection::vec(-1e30f64..1e30, 7)), 0..10),
        ) {
            let f = FeatureFile {
                dim: 7,
                levels: 2,
                basis_size: 3,
                rows: rows.into_iter().map(|(label, subject, values)| FeatureRow { label, subject, values }).collect(),
            };
            let bytes = f.to_bytes().unwrap();
            let back = FeatureFile::from_bytes(&bytes).unwrap();
            prop_assert_eq!(back.to_bytes().unwrap(), bytes);
        }
    }
}
