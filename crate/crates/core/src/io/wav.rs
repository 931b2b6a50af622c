//! WAV I/O. Writes are 32-bit float; reads accept float and 8..32-bit PCM.

use std::path::Path;

use super::IoError;
use crate::dsp::AudioBuffer;

fn map_hound(e: hound::Error) -> IoError {
    match e {
        // the file itself opened fine, so a short read means a malformed stream
        hound::Error::IoError(io) => IoError::BadRiff(io.to_string()),
        hound::Error::FormatError(m) => IoError::BadRiff(m.to_string()),
        hound::Error::Unsupported => {
            IoError::UnsupportedEncoding("unsupported sample format".into())
        }
        hound::Error::UnfinishedSample => IoError::BadRiff("truncated sample".into()),
        other => IoError::UnsupportedEncoding(other.to_string()),
    }
}

pub fn read_wav(path: &Path) -> Result<AudioBuffer, IoError> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut reader = hound::WavReader::new(file).map_err(map_hound)?;
    let spec = reader.spec();
    let channels = usize::from(spec.channels);
    if channels == 0 {
        return Err(IoError::BadRiff("zero channels".into()));
    }
    let interleaved: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .collect::<Result<_, _>>()
            .map_err(map_hound)?,
        (hound::SampleFormat::Int, bits @ 8..=32) => {
            let scale = 2f64.powi(i32::from(bits) - 1);
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| (f64::from(v) / scale) as f32))
                .collect::<Result<_, _>>()
                .map_err(map_hound)?
        }
        (fmt, bits) => {
            return Err(IoError::UnsupportedEncoding(format!(
                "{fmt:?} at {bits} bits"
            )))
        }
    };
    if !interleaved.len().is_multiple_of(channels) {
        return Err(IoError::BadRiff("partial frame at end of data".into()));
    }
    let frames = interleaved.len() / channels;
    let mut planar = vec![0.0f32; interleaved.len()];
    for (i, &s) in interleaved.iter().enumerate() {
        planar[(i % channels) * frames + i / channels] = s;
    }
    AudioBuffer::from_planar(channels, spec.sample_rate, planar)
        .map_err(|e| IoError::BadRiff(e.to_string()))
}

pub fn write_wav(path: &Path, buf: &AudioBuffer) -> Result<(), IoError> {
    let spec = hound::WavSpec {
        channels: u16::try_from(buf.channels())
            .map_err(|_| IoError::UnsupportedEncoding("too many channels".into()))?,
        sample_rate: buf.sample_rate(),
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let write_err = |e: hound::Error| match e {
        hound::Error::IoError(io) => IoError::Io(io),
        other => map_hound(other),
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(write_err)?;
    for n in 0..buf.frames() {
        for c in 0..buf.channels() {
            w.write_sample(buf.channel(c)[n]).map_err(write_err)?;
        }
    }
    w.finalize().map_err(write_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        let buf =
            AudioBuffer::from_channels(vec![vec![0.1, -0.5, 1.5], vec![0.0, 1e-7, -1.0]], 48_000)
                .unwrap();
        write_wav(&p, &buf).unwrap();
        assert_eq!(read_wav(&p).unwrap(), buf);
    }

    #[test]
    fn pcm16_is_scaled() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("i.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 44_100,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&p, spec).unwrap();
        for s in [16384i16, -32768, 0] {
            w.write_sample(s).unwrap();
        }
        w.finalize().unwrap();
        assert_eq!(read_wav(&p).unwrap().channel(0), &[0.5, -1.0, 0.0]);
    }

    #[test]
    fn garbage_and_truncation_are_bad_riff() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.wav");
        std::fs::write(&p, b"not a wav file at all").unwrap();
        assert!(matches!(read_wav(&p), Err(IoError::BadRiff(_))));

        let q = dir.path().join("t.wav");
        write_wav(&q, &AudioBuffer::silence(2, 1000, 44_100)).unwrap();
        let bytes = std::fs::read(&q).unwrap();
        std::fs::write(&q, &bytes[..20]).unwrap();
        assert!(matches!(read_wav(&q), Err(IoError::BadRiff(_))));
        assert!(matches!(
            read_wav(&dir.path().join("missing.wav")),
            Err(IoError::Io(_))
        ));
    }
}
