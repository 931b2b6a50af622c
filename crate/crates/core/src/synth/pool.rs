//! Stem pools: labeled stems found by a named directory parser.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SynthError;
use crate::dsp::AudioBuffer;
use crate::io::{write_wav, IoError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StemEntry {
    /// Relative to the corpus root, `/`-separated.
    pub path: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StemPool {
    pub entries: Vec<StemEntry>,
}

/// Parsers available to [`StemPool::scan`].
pub const PARSERS: &[&str] = &["flat"];

impl StemPool {
    pub fn new(entries: Vec<StemEntry>) -> Self {
        StemPool { entries }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Distinct labels, sorted.
    pub fn labels(&self) -> Vec<&str> {
        let mut l: Vec<&str> = self.entries.iter().map(|e| e.label.as_str()).collect();
        l.sort_unstable();
        l.dedup();
        l
    }

    /// Read a corpus with the parser called `parser`.
    pub fn scan(root: &Path, parser: &str) -> Result<Self, SynthError> {
        match parser {
            "flat" => flat(root),
            other => Err(SynthError::UnknownParser(other.to_string())),
        }
    }
}

fn sorted_dir(dir: &Path) -> Result<Vec<std::fs::DirEntry>, IoError> {
    let mut entries = std::fs::read_dir(dir)?.collect::<Result<Vec<_>, _>>()?;
    entries.sort_by_key(|e| e.file_name());
    Ok(entries)
}

/// `<root>/<track>/<instrument>.wav`; the label is the lowercased file stem.
fn flat(root: &Path) -> Result<StemPool, SynthError> {
    let mut entries = Vec::new();
    for track in sorted_dir(root)? {
        if !track.file_type().map_err(IoError::from)?.is_dir() {
            continue;
        }
        for file in sorted_dir(&track.path())? {
            let path = file.path();
            if path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() != Some("wav") {
                continue;
            }
            let (track_name, file_name) = (track.file_name(), file.file_name());
            let (Some(t), Some(f), Some(stem)) =
                (track_name.to_str(), file_name.to_str(), path.file_stem().and_then(|s| s.to_str()))
            else {
                continue;
            };
            entries.push(StemEntry { path: format!("{t}/{f}"), label: stem.to_ascii_lowercase() });
        }
    }
    Ok(StemPool { entries })
}

fn fundamental(label: &str) -> f64 {
    match label {
        "bass" => 55.0,
        "guitar" => 196.0,
        "piano" => 261.63,
        "vocal" | "vocals" => 330.0,
        _ => 110.0,
    }
}

/// A deterministic test stem: a short melody of decaying harmonic notes,
/// or noise bursts for `drums`. Stereo, peak below 0.3.
pub fn synthetic_stem(label: &str, frames: usize, sample_rate: u32, seed: u64) -> AudioBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sr = f64::from(sample_rate);
    let note_len = (sr * 0.25) as usize;
    let notes: Vec<f64> = (0..frames / note_len.max(1) + 1)
        .map(|_| fundamental(label) * 2f64.powf(f64::from(rng.random_range(0..12u8)) / 12.0))
        .collect();
    let drums = label == "drums";
    let mut left = Vec::with_capacity(frames);
    let mut right = Vec::with_capacity(frames);
    for n in 0..frames {
        let (note, pos) = (n / note_len.max(1), (n % note_len.max(1)) as f64 / sr);
        let env = (-pos * 12.0).exp();
        let x = if drums {
            env * env * rng.random_range(-1.0..1.0)
        } else {
            let t = n as f64 / sr;
            let f = notes[note];
            env * ((2.0 * PI * f * t).sin() + 0.4 * (4.0 * PI * f * t).sin() + 0.2 * (6.0 * PI * f * t).sin()) / 1.6
        };
        left.push((0.28 * x) as f32);
        right.push((0.24 * x) as f32);
    }
    AudioBuffer::from_channels(vec![left, right], sample_rate).expect("equal channel lengths")
}

/// Write `tracks` tracks with one synthetic stem per label under `root` in the
/// flat layout and return the resulting pool.
pub fn write_synthetic_pool(
    root: &Path,
    tracks: usize,
    labels: &[&str],
    seconds: f64,
    sample_rate: u32,
    seed: u64,
) -> Result<StemPool, SynthError> {
    let frames = (seconds * f64::from(sample_rate)).round() as usize;
    for t in 0..tracks {
        let dir = root.join(format!("track{t:03}"));
        std::fs::create_dir_all(&dir).map_err(IoError::from)?;
        for (j, label) in labels.iter().enumerate() {
            let stem_seed = seed.wrapping_mul(1_000_003).wrapping_add((t * labels.len() + j) as u64);
            write_wav(&dir.join(format!("{label}.wav")), &synthetic_stem(label, frames, sample_rate, stem_seed))?;
        }
    }
    StemPool::scan(root, "flat")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_layout_is_parsed_in_sorted_order() {
        let dir = tempfile::tempdir().unwrap();
        let pool = write_synthetic_pool(dir.path(), 2, &["guitar", "bass"], 0.1, 8000, 1).unwrap();
        let paths: Vec<&str> = pool.entries.iter().map(|e| e.path.as_str()).collect();
        assert_eq!(paths, ["track000/bass.wav", "track000/guitar.wav", "track001/bass.wav", "track001/guitar.wav"]);
        assert_eq!(pool.labels(), ["bass", "guitar"]);
        std::fs::write(dir.path().join("README.txt"), "x").unwrap();
        std::fs::write(dir.path().join("track000/notes.txt"), "x").unwrap();
        assert_eq!(StemPool::scan(dir.path(), "flat").unwrap(), pool);
    }

    #[test]
    fn unknown_parser() {
        assert!(matches!(StemPool::scan(Path::new("."), "musdb"), Err(SynthError::UnknownParser(_))));
    }

    #[test]
    fn synthetic_stems_are_deterministic_and_bounded() {
        let a = synthetic_stem("drums", 4000, 44_100, 9);
        assert_eq!(a, synthetic_stem("drums", 4000, 44_100, 9));
        assert_ne!(a, synthetic_stem("drums", 4000, 44_100, 10));
        for label in ["bass", "guitar", "drums", "piano"] {
            let s = synthetic_stem(label, 44_100, 44_100, 3);
            assert!(s.planar().iter().all(|x| x.abs() < 0.3));
            assert!(s.rms() > 1e-3);
        }
    }
}
