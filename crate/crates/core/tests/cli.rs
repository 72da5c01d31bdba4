use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use wavephase::corpus::write_corpus;
use wavephase::gridio::load_grid;
use wavephase::wav::{read_wav, write_wav, WavFormat};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavephase")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn tone_wav(dir: &Path, len: usize) -> String {
    let path = dir.join("tone.wav");
    let s: Vec<f64> = (0..len).map(|n| 0.5 * (2.0 * PI * 80.0 * n as f64 / 8000.0).cos()).collect();
    write_wav(&path, &s, 8000, WavFormat::Float32).unwrap();
    path.to_string_lossy().into_owned()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

const TUPLE_300: [&str; 6] = ["--alpha", "300", "--decimation", "12", "--channels", "240"];

#[test]
fn analyze_writes_k_plus_one_rows() {
    let dir = tempfile::tempdir().unwrap();
    let wav = tone_wav(dir.path(), 3000);
    let grid = p(dir.path(), "tone.dcwt");
    let mut args = vec!["analyze", &wav, "--out", &grid];
    args.extend(TUPLE_300);
    let o = run(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("rows: 241"), "{text}");
    assert!(text.contains("redundancy K/a_d: 20.0000"));
    assert!(text.contains("frame bound ratio"));
    let g = load_grid(&grid).unwrap();
    assert_eq!(g.wavelet.dim(), (240, 250));
    assert_eq!(g.lowpass.len(), 250);
}

#[test]
fn analyze_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let wav = tone_wav(dir.path(), 3001);
    let grid = p(dir.path(), "tone.dcwt");
    let mut args = vec!["analyze", &wav, "--out", &grid];
    args.extend(TUPLE_300);
    assert_eq!(run(&args).status.code(), Some(3));
    assert!(!Path::new(&grid).exists());
    let missing = p(dir.path(), "missing.wav");
    assert_eq!(run(&["analyze", &missing, "--out", &grid]).status.code(), Some(4));
}

#[test]
fn analyze_then_synth_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let wav = tone_wav(dir.path(), 3000);
    let grid = p(dir.path(), "tone.dcwt");
    let out = p(dir.path(), "back.wav");
    let mut args = vec!["analyze", &wav, "--out", &grid];
    args.extend(TUPLE_300);
    assert!(run(&args).status.success());
    assert!(run(&["synth", &grid, "--out", &out]).status.success());
    let (a, b) = (read_wav(&wav).unwrap(), read_wav(&out).unwrap());
    let err = a.samples.iter().zip(&b.samples).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(err < 1e-6, "{err}");
}

#[test]
fn reconstruct_wpghi_on_a_tone() {
    let dir = tempfile::tempdir().unwrap();
    let wav = tone_wav(dir.path(), 3000);
    let grid = p(dir.path(), "tone.dcwt");
    let mut args = vec!["analyze", &wav, "--out", &grid];
    args.extend(TUPLE_300);
    assert!(run(&args).status.success());
    let out = p(dir.path(), "rec.wav");
    let report = p(dir.path(), "rec.csv");
    let o = run(&["reconstruct", &grid, "--method", "wpghi", "--out", &out, "--report", &report]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&report).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "signal_id,method,alpha,beta,a_d,K,B,sc_db,runtime_ms,seed");
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(&fields[..6], &["tone", "WPGHI", "300", "0", "12", "240"]);
    let sc: f64 = fields[7].parse().unwrap();
    assert!(sc <= -25.0, "{sc}");
}

#[test]
fn reconstruct_is_deterministic_and_validates_method() {
    let dir = tempfile::tempdir().unwrap();
    let wav = tone_wav(dir.path(), 2000);
    let out = p(dir.path(), "rec.wav");
    let mut rows = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let report = p(dir.path(), name);
        let o = run(&["reconstruct", &wav, "--method", "wfglim", "--max-iter", "8", "--seed", "4", "--out", &out, "--report", &report]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let text = std::fs::read_to_string(&report).unwrap();
        let row: Vec<String> = text.lines().nth(1).unwrap().split(',').map(String::from).collect();
        rows.push([&row[..8], &row[9..]].concat());
    }
    assert_eq!(rows[0], rows[1]);
    assert_eq!(rows[0][1], "WFGLIM");
    assert_eq!(run(&["reconstruct", &wav, "--method", "gla", "--out", &out]).status.code(), Some(2));
}

#[test]
fn evaluate_emits_rows_and_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let paths = write_corpus(&corpus, 1000, 8000).unwrap();
    for extra in &paths[2..] {
        std::fs::remove_file(extra).unwrap();
    }
    let report = p(dir.path(), "eval.csv");
    let c = corpus.to_string_lossy().into_owned();
    let o = run(&["evaluate", &c, "--tuple", "30,5,100", "--max-iter", "5", "--workers", "2", "--report", &report]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&report).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 2 * 3 + 2 * 3);
    assert_eq!(lines.iter().filter(|l| l.starts_with("mean,")).count(), 3);
    assert_eq!(lines.iter().filter(|l| l.starts_with("std,")).count(), 3);

    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let e = empty.to_string_lossy().into_owned();
    assert_ne!(run(&["evaluate", &e]).status.code(), Some(0));
}

#[test]
fn evaluate_redundancy_preset_has_four_groups() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let paths = write_corpus(&corpus, 1800, 8000).unwrap();
    for extra in &paths[1..] {
        std::fs::remove_file(extra).unwrap();
    }
    let c = corpus.to_string_lossy().into_owned();
    let o = run(&["evaluate", &c, "--preset", "redundancy", "--methods", "wpghi"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("mean,WPGHI,1000")).count(), 4);
}

#[test]
fn verify_cr_rows_decrease() {
    let o = run(&["verify", "cr", "--alpha", "100", "--refine", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rms: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(rms.len(), 3);
    assert!(rms[1] < rms[0] && rms[2] < rms[1]);
}

#[test]
fn verify_ridge_controls() {
    let mismatch = |wavelet: &str| -> f64 {
        let o = run(&["verify", "ridge", "--alpha", "100", "--refine", "1", "--wavelet", wavelet]);
        assert!(o.status.success());
        stdout(&o).lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap()
    };
    assert_eq!(mismatch("cauchy"), 0.0);
    assert!(mismatch("twopeak") > 0.1);
    assert_eq!(run(&["verify", "curl"]).status.code(), Some(2));
}

#[test]
fn reassign_writes_the_lattice() {
    let dir = tempfile::tempdir().unwrap();
    let wav = tone_wav(dir.path(), 4000);
    let out = p(dir.path(), "r.csv");
    let o = run(&["reassign", &wav, "--nt", "4", "--nf", "5", "--fmin", "60", "--fmax", "100", "--tmin", "0.2", "--tmax", "0.3", "--alpha", "100", "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1 + 20);
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f[2] == "1" {
            let xi: f64 = f[4].parse().unwrap();
            assert!((xi - 80.0).abs() < 1e-6, "{line}");
        }
    }
}
