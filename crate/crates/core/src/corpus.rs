//! Deterministic synthetic test signals for evaluation runs.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::wav::{read_wav, write_wav, Audio, WavFormat};

/// One named corpus signal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSignal {
    pub id: String,
    pub samples: Vec<f64>,
    pub sample_rate: f64,
}

fn hann(u: f64) -> f64 {
    if (0.0..=1.0).contains(&u) {
        0.5 - 0.5 * (2.0 * PI * u).cos()
    } else {
        0.0
    }
}

// Smooth fade over the first and last 2% to avoid a wrap-around click.
fn taper(samples: &mut [f64]) {
    let n = samples.len();
    let edge = (n / 50).max(1);
    for i in 0..edge.min(n) {
        let g = 0.5 - 0.5 * (PI * i as f64 / edge as f64).cos();
        samples[i] *= g;
        samples[n - 1 - i] *= g;
    }
}

fn normalize(samples: &mut [f64], peak: f64) {
    let max = samples.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    if max > 0.0 {
        samples.iter_mut().for_each(|v| *v *= peak / max);
    }
}

// Two-pole resonator y[n] = x[n] + 2r cos(θ) y[n-1] - r² y[n-2].
fn resonate(input: &[f64], freq: f64, bandwidth: f64, rate: f64) -> Vec<f64> {
    let r = (-PI * bandwidth / rate).exp();
    let c = 2.0 * r * (2.0 * PI * freq / rate).cos();
    let mut out = vec![0.0; input.len()];
    for n in 0..input.len() {
        let y1 = if n >= 1 { out[n - 1] } else { 0.0 };
        let y2 = if n >= 2 { out[n - 2] } else { 0.0 };
        out[n] = input[n] + c * y1 - r * r * y2;
    }
    out
}

fn tone(len: usize, rate: f64) -> Vec<f64> {
    (0..len).map(|n| 0.5 * (2.0 * PI * 440.0 * n as f64 / rate).sin()).collect()
}

fn chord(len: usize, rate: f64) -> Vec<f64> {
    (0..len)
        .map(|n| {
            let t = n as f64 / rate;
            [261.63, 329.63, 392.0]
                .iter()
                .flat_map(|&f| (1..=4).map(move |h| (f, h)))
                .map(|(f, h)| (2.0 * PI * f * h as f64 * t).sin() / h as f64)
                .sum()
        })
        .collect()
}

fn linear_chirp(len: usize, rate: f64) -> Vec<f64> {
    let dur = len as f64 / rate;
    let (f0, f1) = (100.0, 0.3 * rate);
    (0..len)
        .map(|n| {
            let t = n as f64 / rate;
            (2.0 * PI * (f0 * t + 0.5 * (f1 - f0) / dur * t * t)).sin()
        })
        .collect()
}

fn exponential_chirp(len: usize, rate: f64) -> Vec<f64> {
    let dur = len as f64 / rate;
    let (f0, f1) = (50.0, 0.25 * rate);
    let k = (f1 / f0).ln() / dur;
    (0..len)
        .map(|n| {
            let t = n as f64 / rate;
            (2.0 * PI * f0 * ((k * t).exp() - 1.0) / k).sin()
        })
        .collect()
}

fn noise_burst(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, b) = (len / 4, 3 * len / 4);
    (0..len)
        .map(|n| {
            let v: f64 = rng.gen_range(-1.0..1.0);
            v * hann((n as f64 - a as f64) / (b - a) as f64)
        })
        .collect()
}

fn filtered_bursts(len: usize, rate: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let band = resonate(&noise, 0.1 * rate, 0.02 * rate, rate);
    let width = len / 8;
    (0..len)
        .map(|n| {
            let gate: f64 = (0..3).map(|i| hann((n as f64 - (len * (2 * i + 1) / 7) as f64) / width as f64)).sum();
            band[n] * gate
        })
        .collect()
}

fn am_tone(len: usize, rate: f64) -> Vec<f64> {
    (0..len)
        .map(|n| {
            let t = n as f64 / rate;
            (1.0 + 0.8 * (2.0 * PI * 4.0 * t).sin()) * (2.0 * PI * 660.0 * t).sin()
        })
        .collect()
}

fn gong(len: usize, rate: f64) -> Vec<f64> {
    let partials = [(180.0, 1.0, 1.5), (417.0, 0.7, 2.5), (663.0, 0.5, 3.5), (1011.0, 0.35, 5.0), (1462.0, 0.2, 7.0)];
    (0..len)
        .map(|n| {
            let t = n as f64 / rate;
            partials
                .iter()
                .map(|&(f, a, d)| a * (-d * t).exp() * (2.0 * PI * f * t).sin())
                .sum::<f64>()
                * (1.0 - (-t * 400.0).exp())
        })
        .collect()
}

// Glottal pulse train with a gliding pitch through three formant
// resonators, gated into two syllables.
fn speech_like(len: usize, rate: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut source = vec![0.0; len];
    let mut phase = 0.0;
    for (n, s) in source.iter_mut().enumerate() {
        let u = n as f64 / len as f64;
        let f0 = 110.0 + 30.0 * (PI * u).sin();
        phase += f0 / rate;
        if phase >= 1.0 {
            phase -= 1.0;
            *s = 1.0;
        }
        *s += 0.02 * rng.gen_range(-1.0..1.0);
    }
    let formants: [(f64, f64, f64); 3] = [(700.0, 130.0, 1.0), (1220.0, 70.0, 0.5), (2600.0, 160.0, 0.25)];
    let vowel: Vec<f64> = formants
        .iter()
        .map(|&(f, bw, g)| resonate(&source, f.min(0.45 * rate), bw, rate).into_iter().map(move |v| g * v))
        .fold(vec![0.0; len], |acc, band| acc.iter().zip(band).map(|(a, b)| a + b).collect());
    (0..len)
        .map(|n| {
            let u = n as f64 / len as f64;
            vowel[n] * (hann((u - 0.05) / 0.4) + hann((u - 0.5) / 0.45))
        })
        .collect()
}

// A short melody of plucked harmonic notes.
fn music_like(len: usize, rate: f64) -> Vec<f64> {
    let notes = [293.66, 349.23, 440.0, 392.0, 329.63, 293.66];
    let step = len / notes.len();
    (0..len)
        .map(|n| {
            let i = (n / step).min(notes.len() - 1);
            let t = (n - i * step) as f64 / rate;
            let f = notes[i];
            (1..=6)
                .map(|h| {
                    let h = h as f64;
                    (-(2.0 + 1.5 * h) * t).exp() * (2.0 * PI * f * h * t).sin() / h
                })
                .sum::<f64>()
                * (1.0 - (-t * 800.0).exp())
        })
        .collect()
}

/// The ten corpus signals of `len` samples at `sample_rate` Hz, each
/// tapered at both ends and scaled to a peak of 0.5.
pub fn desk_corpus(len: usize, sample_rate: f64) -> Result<Vec<CorpusSignal>> {
    if len < 64 || !(sample_rate >= 2000.0) {
        return invalid("the corpus needs at least 64 samples at 2 kHz or more");
    }
    let raw: Vec<(&str, Vec<f64>)> = vec![
        ("01_tone", tone(len, sample_rate)),
        ("02_chord", chord(len, sample_rate)),
        ("03_linear_chirp", linear_chirp(len, sample_rate)),
        ("04_exp_chirp", exponential_chirp(len, sample_rate)),
        ("05_noise_burst", noise_burst(len, 5)),
        ("06_filtered_bursts", filtered_bursts(len, sample_rate, 6)),
        ("07_am_tone", am_tone(len, sample_rate)),
        ("08_gong", gong(len, sample_rate)),
        ("09_speech_like", speech_like(len, sample_rate, 9)),
        ("10_music_like", music_like(len, sample_rate)),
    ];
    Ok(raw
        .into_iter()
        .map(|(id, mut samples)| {
            taper(&mut samples);
            normalize(&mut samples, 0.5);
            CorpusSignal {
                id: id.to_string(),
                samples,
                sample_rate,
            }
        })
        .collect())
}

/// Writes the corpus as 32-bit float WAV files named `<id>.wav`.
pub fn write_corpus(dir: impl AsRef<Path>, len: usize, sample_rate: u32) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    desk_corpus(len, sample_rate as f64)?
        .iter()
        .map(|s| {
            let path = dir.join(format!("{}.wav", s.id));
            write_wav(&path, &s.samples, sample_rate, WavFormat::Float32)?;
            Ok(path)
        })
        .collect()
}

/// All `.wav` files of a directory sorted by name, keyed by file stem.
pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Vec<(String, Audio)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir.as_ref())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return invalid(format!("no .wav files in {}", dir.as_ref().display()));
    }
    paths
        .into_iter()
        .map(|p| {
            let id = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok((id, read_wav(&p)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_deterministic_and_bounded() {
        let a = desk_corpus(4500, 8000.0).unwrap();
        let b = desk_corpus(4500, 8000.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
        for s in &a {
            assert_eq!(s.samples.len(), 4500);
            let peak = s.samples.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
            assert!((peak - 0.5).abs() < 1e-12, "{}", s.id);
            assert!(s.samples[0].abs() < 1e-12);
        }
        let ids: std::collections::HashSet<_> = a.iter().map(|s| &s.id).collect();
        assert_eq!(ids.len(), 10);
    }

    #[test]
    fn corpus_round_trips_through_wav() {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_corpus(dir.path(), 1000, 8000).unwrap();
        assert_eq!(paths.len(), 10);
        let loaded = load_corpus(dir.path()).unwrap();
        let original = desk_corpus(1000, 8000.0).unwrap();
        for ((id, audio), s) in loaded.iter().zip(&original) {
            assert_eq!(id, &s.id);
            assert_eq!(audio.sample_rate, 8000);
            for (x, y) in audio.samples.iter().zip(&s.samples) {
                assert_eq!(*x, *y as f32 as f64);
            }
        }
    }

    #[test]
    fn empty_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_corpus(dir.path()).is_err());
        assert!(desk_corpus(10, 8000.0).is_err());
    }
}
