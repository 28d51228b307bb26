use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{MmkError, Result};
use crate::pyramid::VideoDims;

/// Grayscale depth frames scaled to `[0, 1]`, each stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthVideo {
    dims: VideoDims,
    frames: Vec<Vec<f64>>,
}

impl DepthVideo {
    pub fn new(width: u32, height: u32, frames: Vec<Vec<f64>>) -> Result<Self> {
        let dims = VideoDims::new(width, height, frames.len() as u32)?;
        let n = width as usize * height as usize;
        if let Some(bad) = frames.iter().position(|f| f.len() != n) {
            return Err(MmkError::Format(format!(
                "frame {bad} has {} samples, expected {n}",
                frames[bad].len()
            )));
        }
        Ok(Self { dims, frames })
    }

    pub fn dims(&self) -> VideoDims {
        self.dims
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.frames[t]
    }

    pub fn frames(&self) -> &[Vec<f64>] {
        &self.frames
    }
}

/// Binary PGM (P5) image; samples divided by the header's maxval.
pub fn read_pgm(path: &Path) -> Result<(u32, u32, Vec<f64>)> {
    let bytes = fs::read(path).map_err(|e| ingestion(path, e.to_string()))?;
    parse_pgm(&bytes).map_err(|reason| ingestion(path, reason))
}

fn ingestion(path: &Path, reason: String) -> MmkError {
    MmkError::Ingestion {
        path: path.to_path_buf(),
        reason,
    }
}

fn parse_pgm(bytes: &[u8]) -> std::result::Result<(u32, u32, Vec<f64>), String> {
    let mut pos = 0;
    let mut fields = [0u32; 3];
    if bytes.get(..2) != Some(b"P5") {
        return Err("not a binary PGM (missing P5 magic)".into());
    }
    pos += 2;
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or("malformed PGM header")?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err("malformed PGM header".into());
    }
    pos += 1;
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(format!(
            "unsupported PGM geometry {width}x{height} maxval {maxval}"
        ));
    }
    let n = width as usize * height as usize;
    let data = &bytes[pos..];
    let scale = 1.0 / f64::from(maxval);
    let samples: Vec<f64> = if maxval < 256 {
        if data.len() < n {
            return Err(format!("truncated PGM: {} of {n} samples", data.len()));
        }
        data[..n].iter().map(|&b| f64::from(b) * scale).collect()
    } else {
        if data.len() < 2 * n {
            return Err(format!("truncated PGM: {} of {} bytes", data.len(), 2 * n));
        }
        data[..2 * n]
            .chunks_exact(2)
            .map(|c| f64::from(u16::from_be_bytes([c[0], c[1]])) * scale)
            .collect()
    };
    if samples.iter().any(|&s| s > 1.0) {
        return Err("sample exceeds declared maxval".into());
    }
    Ok((width, height, samples))
}

/// Writes integer samples as a binary PGM with the given maxval.
pub fn write_pgm(path: &Path, width: u32, height: u32, maxval: u16, samples: &[u16]) -> Result<()> {
    let n = width as usize * height as usize;
    if samples.len() != n {
        return Err(MmkError::Format(format!(
            "expected {n} samples, got {}",
            samples.len()
        )));
    }
    let mut out = format!("P5\n{width} {height}\n{maxval}\n").into_bytes();
    for &s in samples {
        if maxval < 256 {
            out.push(s.min(maxval) as u8);
        } else {
            out.extend_from_slice(&s.min(maxval).to_be_bytes());
        }
    }
    fs::File::create(path)?.write_all(&out)?;
    Ok(())
}

/// Loads every `.pgm` file in `dir`, ordered by file name, as one video.
pub fn load_frames(dir: &Path) -> Result<DepthVideo> {
    let entries = fs::read_dir(dir).map_err(|e| ingestion(dir, e.to_string()))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .is_some_and(|ext| ext.eq_ignore_ascii_case("pgm"))
        })
        .collect();
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    if paths.is_empty() {
        return Err(ingestion(dir, "no .pgm frames found".into()));
    }
    let mut size = None;
    let mut frames = Vec::with_capacity(paths.len());
    for path in &paths {
        let (w, h, samples) = read_pgm(path)?;
        match size {
            None => size = Some((w, h)),
            Some(s) if s != (w, h) => {
                return Err(MmkError::Format(format!(
                    "{} is {w}x{h}, earlier frames are {}x{}",
                    path.display(),
                    s.0,
                    s.1
                )))
            }
            _ => {}
        }
        frames.push(samples);
    }
    let (w, h) = size.unwrap_or_default();
    DepthVideo::new(w, h, frames)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_uniform_directory() {
        let dir = tempfile::tempdir().unwrap();
        for t in 0..25 {
            let path = dir.path().join(format!("frame{t:03}.pgm"));
            write_pgm(&path, 64, 64, 255, &vec![t as u16 * 10; 64 * 64]).unwrap();
        }
        std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let v = load_frames(dir.path()).unwrap();
        assert_eq!(v.dims(), VideoDims::new(64, 64, 25).unwrap());
        assert_eq!(v.frame(3)[0], 30.0 / 255.0);
        assert_eq!(v.frame(24)[100], 240.0 / 255.0);
    }

    #[test]
    fn sixteen_bit_frames_normalize_by_maxval() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        write_pgm(&path, 2, 1, 4000, &[4000, 1000]).unwrap();
        let (w, h, s) = read_pgm(&path).unwrap();
        assert_eq!((w, h), (2, 1));
        assert_eq!(s, vec![1.0, 0.25]);
    }

    #[test]
    fn header_comments_are_skipped() {
        let mut bytes = b"P5\n# depth\n2 2\n# max\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 51, 102, 255]);
        let (_, _, s) = parse_pgm(&bytes).unwrap();
        assert_eq!(s, vec![0.0, 0.2, 0.4, 1.0]);
    }

    #[test]
    fn empty_directory_is_an_ingestion_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_frames(dir.path()),
            Err(MmkError::Ingestion { .. })
        ));
    }

    #[test]
    fn mixed_sizes_are_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        write_pgm(&dir.path().join("0.pgm"), 64, 64, 255, &vec![0; 64 * 64]).unwrap();
        write_pgm(&dir.path().join("1.pgm"), 32, 32, 255, &vec![0; 32 * 32]).unwrap();
        assert!(matches!(load_frames(dir.path()), Err(MmkError::Format(_))));
    }

    #[test]
    fn corrupt_frame_names_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("0.pgm");
        std::fs::write(&bad, b"P5\n4 4\n255\n\x00\x01").unwrap();
        match load_frames(dir.path()) {
            Err(MmkError::Ingestion { path, .. }) => assert_eq!(path, bad),
            other => panic!("unexpected {other:?}"),
        }
    }
}
