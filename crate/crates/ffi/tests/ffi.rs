use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use wavephase_ffi::*;

fn bank(length: usize) -> WpBank {
    WpBank {
        length,
        sample_rate: 8000.0,
        channels: 60,
        fmin: 60.0,
        fmax: 3000.0,
        decimation: 4,
    }
}

fn cauchy(alpha: f64) -> WpWavelet {
    WpWavelet {
        alpha,
        beta: 0.0,
        gamma_re: 1.0,
        gamma_im: 0.0,
    }
}

fn tone(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| {
            let t = n as f64 / 8000.0;
            let env = (-((n as f64 - len as f64 / 2.0) / (len as f64 / 6.0)).powi(2)).exp();
            env * (2.0 * std::f64::consts::PI * 440.0 * t).sin()
        })
        .collect()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(wp_last_error()) }.to_string_lossy().into_owned()
}

struct Handles {
    frame: *mut WpFrame,
    grid: *mut WpGrid,
}

impl Drop for Handles {
    fn drop(&mut self) {
        unsafe {
            wp_grid_free(self.grid);
            wp_frame_free(self.frame);
        }
    }
}

fn analyzed(len: usize) -> Handles {
    let mut h = Handles {
        frame: ptr::null_mut(),
        grid: ptr::null_mut(),
    };
    unsafe {
        assert_eq!(wp_frame_new(&bank(len), &cauchy(30.0), &mut h.frame), WpStatus::Ok);
        let x = tone(len);
        assert_eq!(wp_frame_analyze(h.frame, x.as_ptr(), x.len(), &mut h.grid), WpStatus::Ok);
    }
    h
}

#[test]
fn analysis_synthesis_round_trip() {
    let h = analyzed(2000);
    let x = tone(2000);
    let mut y = vec![0.0; 2000];
    unsafe {
        assert_eq!(wp_frame_synthesize(h.frame, h.grid, y.as_mut_ptr(), y.len()), WpStatus::Ok);
    }
    let err = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    assert!(err / norm < 1e-8, "relative error {}", err / norm);
}

#[test]
fn dimensions_and_magnitude() {
    let h = analyzed(2000);
    let (mut l, mut k, mut n) = (0, 0, 0);
    let (mut gk, mut gn) = (0, 0);
    unsafe {
        assert_eq!(wp_frame_dims(h.frame, &mut l, &mut k, &mut n), WpStatus::Ok);
        assert_eq!(wp_grid_dims(h.grid, &mut gk, &mut gn), WpStatus::Ok);
    }
    assert_eq!((l, k, n), (2000, 60, 500));
    assert_eq!((gk, gn), (k, n));
    let mut m = vec![-1.0; (k + 1) * n];
    unsafe {
        assert_eq!(wp_grid_magnitude(h.grid, m.as_mut_ptr(), m.len()), WpStatus::Ok);
        assert_eq!(wp_grid_magnitude(h.grid, m.as_mut_ptr(), m.len() - 1), WpStatus::DimensionMismatch);
    }
    assert!(m.iter().all(|v| *v >= 0.0));
    assert!(m.iter().any(|v| *v > 0.0));
}

#[test]
fn reconstruction_reports_spectral_convergence() {
    let h = analyzed(2000);
    let mut y = vec![0.0; 2000];
    let mut sc = 0.0;
    unsafe {
        let opts = wp_reconstruct_options_default(WpMethod::Wpghi);
        assert_eq!(wp_reconstruct(h.frame, h.grid, &opts, y.as_mut_ptr(), y.len(), &mut sc), WpStatus::Ok);
        assert!(sc < -25.0, "sc {sc}");

        let mut again = ptr::null_mut();
        assert_eq!(wp_frame_analyze(h.frame, y.as_ptr(), y.len(), &mut again), WpStatus::Ok);
        let mut sc2 = 0.0;
        assert_eq!(wp_spectral_convergence(again, h.grid, &mut sc2), WpStatus::Ok);
        assert!((sc - sc2).abs() < 1e-9);
        let mut self_sc = 0.0;
        assert_eq!(wp_spectral_convergence(h.grid, h.grid, &mut self_sc), WpStatus::Ok);
        assert!(self_sc <= -300.0);
        wp_grid_free(again);
    }
}

#[test]
fn fglim_is_deterministic_for_a_seed() {
    let h = analyzed(1200);
    let mut opts = wp_reconstruct_options_default(WpMethod::RFglim);
    opts.max_iter = 20;
    opts.seed = 7;
    let mut a = vec![0.0; 1200];
    let mut b = vec![0.0; 1200];
    unsafe {
        assert_eq!(wp_reconstruct(h.frame, h.grid, &opts, a.as_mut_ptr(), a.len(), ptr::null_mut()), WpStatus::Ok);
        assert_eq!(wp_reconstruct(h.frame, h.grid, &opts, b.as_mut_ptr(), b.len(), ptr::null_mut()), WpStatus::Ok);
    }
    assert_eq!(a, b);
}

#[test]
fn grid_file_round_trip() {
    let h = analyzed(2000);
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("g.dcwt").to_str().unwrap()).unwrap();
    let mut loaded = ptr::null_mut();
    unsafe {
        assert_eq!(wp_grid_save(h.grid, path.as_ptr()), WpStatus::Ok);
        assert_eq!(wp_grid_load(path.as_ptr(), &mut loaded), WpStatus::Ok);
        let mut sc = 0.0;
        assert_eq!(wp_spectral_convergence(loaded, h.grid, &mut sc), WpStatus::Ok);
        assert!(sc <= -300.0);
        let mut a = vec![0.0; 2000];
        let mut b = vec![0.0; 2000];
        assert_eq!(wp_frame_synthesize(h.frame, h.grid, a.as_mut_ptr(), 2000), WpStatus::Ok);
        assert_eq!(wp_frame_synthesize(h.frame, loaded, b.as_mut_ptr(), 2000), WpStatus::Ok);
        assert_eq!(a, b);
        wp_grid_free(loaded);
    }
}

#[test]
fn error_codes_and_messages() {
    let mut frame = ptr::null_mut();
    unsafe {
        assert_eq!(wp_frame_new(&bank(2000), &cauchy(0.5), &mut frame), WpStatus::InvalidParameter);
        assert!(frame.is_null());
        assert!(last_error().contains("alpha"), "{}", last_error());

        assert_eq!(wp_frame_new(&bank(2001), &cauchy(30.0), &mut frame), WpStatus::InvalidParameter);
        assert_eq!(wp_frame_new(ptr::null(), &cauchy(30.0), &mut frame), WpStatus::NullPointer);
        assert!(last_error().contains("bank"));
        assert_eq!(wp_frame_new(&bank(2000), &cauchy(30.0), ptr::null_mut()), WpStatus::NullPointer);

        let missing = CString::new("/nonexistent/dir/g.dcwt").unwrap();
        let mut grid = ptr::null_mut();
        assert_eq!(wp_grid_load(missing.as_ptr(), &mut grid), WpStatus::Io);
        assert!(grid.is_null());
        assert_eq!(wp_grid_load(ptr::null(), &mut grid), WpStatus::NullPointer);

        let dir = tempfile::tempdir().unwrap();
        let bogus = dir.path().join("bogus.dcwt");
        std::fs::write(&bogus, b"not a grid file").unwrap();
        let bogus = CString::new(bogus.to_str().unwrap()).unwrap();
        assert_eq!(wp_grid_load(bogus.as_ptr(), &mut grid), WpStatus::Corrupt);

        wp_frame_free(ptr::null_mut());
        wp_grid_free(ptr::null_mut());
    }
}

#[test]
fn mismatched_lengths_are_rejected() {
    let h = analyzed(2000);
    let x = tone(1000);
    let mut grid = ptr::null_mut();
    let mut y = vec![0.0; 1000];
    unsafe {
        assert_eq!(wp_frame_analyze(h.frame, x.as_ptr(), x.len(), &mut grid), WpStatus::DimensionMismatch);
        assert!(grid.is_null());
        assert_eq!(wp_frame_synthesize(h.frame, h.grid, y.as_mut_ptr(), y.len()), WpStatus::DimensionMismatch);
        let opts = wp_reconstruct_options_default(WpMethod::Wpghi);
        assert_eq!(wp_reconstruct(h.frame, h.grid, &opts, y.as_mut_ptr(), y.len(), ptr::null_mut()), WpStatus::DimensionMismatch);
        assert_eq!(wp_frame_synthesize(h.frame, ptr::null(), y.as_mut_ptr(), 2000), WpStatus::NullPointer);
    }
}

#[test]
fn errors_are_per_thread() {
    let mut frame = ptr::null_mut();
    unsafe {
        assert_eq!(wp_frame_new(ptr::null(), &cauchy(30.0), &mut frame), WpStatus::NullPointer);
    }
    let other = std::thread::spawn(last_error).join().unwrap();
    assert!(other.is_empty());
    assert!(!last_error().is_empty());
}

const C_SMOKE: &str = r#"
#include <math.h>
#include <stdio.h>
#include "wavephase.h"

int main(void) {
    WpBank bank = {2000, 8000.0, 60, 60.0, 3000.0, 4};
    WpWavelet w = {30.0, 0.0, 1.0, 0.0};
    WpFrame *frame = NULL;
    WpGrid *grid = NULL;
    double x[2000], y[2000];
    for (int n = 0; n < 2000; n++) {
        double e = (n - 1000.0) / 333.0;
        x[n] = exp(-e * e) * sin(2.0 * 3.141592653589793 * 440.0 * n / 8000.0);
    }
    if (wp_frame_new(&bank, &w, &frame) != WP_STATUS_OK) return 10;
    if (wp_frame_analyze(frame, x, 2000, &grid) != WP_STATUS_OK) return 11;
    if (wp_frame_synthesize(frame, grid, y, 2000) != WP_STATUS_OK) return 12;
    double err = 0.0;
    for (int n = 0; n < 2000; n++) err = fmax(err, fabs(x[n] - y[n]));
    WpReconstructOptions opts = wp_reconstruct_options_default(WP_METHOD_WPGHI);
    double sc = 0.0;
    if (wp_reconstruct(frame, grid, &opts, y, 2000, &sc) != WP_STATUS_OK) return 13;
    WpWavelet bad = {0.5, 0.0, 1.0, 0.0};
    WpFrame *none = NULL;
    if (wp_frame_new(&bank, &bad, &none) != WP_STATUS_INVALID_PARAMETER) return 14;
    printf("%.3e %.2f %s\n", err, sc, wp_last_error());
    wp_grid_free(grid);
    wp_frame_free(frame);
    return err < 1e-8 && sc < -25.0 ? 0 : 15;
}
"#;

fn staticlib() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().join("libwavephase_ffi.a")
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/wavephase.h")).unwrap();
    for name in [
        "typedef struct WpFrame WpFrame",
        "typedef struct WpGrid WpGrid",
        "WP_STATUS_NULL_POINTER",
        "wp_frame_new",
        "wp_frame_analyze",
        "wp_frame_synthesize",
        "wp_reconstruct",
        "wp_spectral_convergence",
        "wp_grid_save",
        "wp_grid_load",
        "wp_grid_magnitude",
        "wp_last_error",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

#[test]
fn c_program_links_against_the_static_library() {
    let lib = staticlib();
    assert!(lib.exists(), "missing {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    let bin = dir.path().join("smoke");
    std::fs::write(&src, C_SMOKE).unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(cc)
        .arg("-std=c99")
        .arg("-I")
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .expect("C compiler");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("alpha"));
}
