use std::ffi::CStr;
use std::ptr;

use valse::bench::{gen_instance, GenConfig};
use valse::circular::circular_distance;
use valse_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(valse_last_error_message()) }.to_string_lossy().into_owned()
}

struct Samples {
    idx: Vec<usize>,
    re: Vec<f64>,
    im: Vec<f64>,
    n: usize,
}

fn single_tone() -> (f64, Samples) {
    let (gt, ms) = gen_instance(&GenConfig::new(32, 24, 1, 0.0, 20.0), 7).unwrap();
    let s = Samples {
        idx: ms.indices().to_vec(),
        re: ms.samples().iter().map(|z| z.re).collect(),
        im: ms.samples().iter().map(|z| z.im).collect(),
        n: 32,
    };
    (gt.omegas[0], s)
}

unsafe fn estimate(cfg: *const ValseConfig, s: &Samples) -> (ValseStatus, *mut ValseResult) {
    let mut out = ptr::null_mut();
    let st = valse_estimate(cfg, s.idx.as_ptr(), s.re.as_ptr(), s.im.as_ptr(), s.idx.len(), s.n, &mut out);
    (st, out)
}

#[test]
fn estimate_through_the_c_abi() {
    let (omega, s) = single_tone();
    unsafe {
        let (st, res) = estimate(ptr::null(), &s);
        assert_eq!(st, ValseStatus::Ok, "{}", last_error());
        assert!(!res.is_null());
        assert_eq!(valse_result_k_hat(res), 1);
        assert!(valse_result_converged(res));
        assert!(valse_result_iterations(res) >= 1);

        let mut f = [0.0; 1];
        assert_eq!(valse_result_frequencies(res, f.as_mut_ptr(), 1), ValseStatus::Ok);
        assert!(circular_distance(f[0], omega) < 0.01);

        let (mut ar, mut ai) = ([0.0; 1], [0.0; 1]);
        assert_eq!(valse_result_amplitudes(res, ar.as_mut_ptr(), ai.as_mut_ptr(), 1), ValseStatus::Ok);
        assert!(ar[0].hypot(ai[0]) > 0.0);

        let n = valse_result_signal_len(res);
        assert_eq!(n, 32);
        let (mut xr, mut xi) = (vec![0.0; n], vec![0.0; n]);
        assert_eq!(valse_result_signal(res, xr.as_mut_ptr(), xi.as_mut_ptr(), n), ValseStatus::Ok);
        assert!(xr.iter().chain(&xi).any(|v| *v != 0.0));
        assert_eq!(valse_result_signal(res, xr.as_mut_ptr(), xi.as_mut_ptr(), n - 1), ValseStatus::InvalidArgument);
        assert!(last_error().contains("need 32"));

        let (mut nu, mut rho, mut tau) = (0.0, 0.0, 0.0);
        assert_eq!(valse_result_hyperparams(res, &mut nu, &mut rho, &mut tau), ValseStatus::Ok);
        assert!(nu > 0.0 && rho > 0.0 && rho < 1.0 && tau > 0.0);
        valse_result_free(res);
    }
}

#[test]
fn config_matches_the_rust_engine() {
    let (_, s) = single_tone();
    unsafe {
        let cfg = valse_config_new();
        assert_eq!(valse_config_set_mode(cfg, ValseMode::Point), ValseStatus::Ok);
        assert_eq!(valse_config_set_heuristic(cfg, ValseHeuristic::Mixture), ValseStatus::Ok);
        assert_eq!(valse_config_set_mixture_size(cfg, 5), ValseStatus::Ok);
        assert_eq!(valse_config_set_max_iters(cfg, 300), ValseStatus::Ok);
        assert_eq!(valse_config_set_rel_tol(cfg, 1e-7), ValseStatus::Ok);
        let (st, res) = estimate(cfg, &s);
        assert_eq!(st, ValseStatus::Ok);

        let ms = valse::MeasurementSet::new(
            s.idx.clone(),
            s.n,
            s.re.iter().zip(&s.im).map(|(a, b)| num_complex::Complex64::new(*a, *b)).collect(),
        )
        .unwrap();
        let ec = valse::engine::EngineConfig {
            mode: valse::engine::Mode::Point,
            heuristic: valse::engine::Heuristic::H1,
            d: 5,
            max_iters: 300,
            rel_tol: 1e-7,
            ..Default::default()
        };
        let direct = valse::engine::run(&ms, &ec).unwrap();
        let k = valse_result_k_hat(res);
        assert_eq!(k, direct.k_hat);
        let mut f = vec![0.0; k];
        valse_result_frequencies(res, f.as_mut_ptr(), k);
        assert_eq!(f, direct.freqs);
        valse_result_free(res);
        valse_config_free(cfg);
    }
}

#[test]
fn fixed_hyperparams_are_kept() {
    let (_, s) = single_tone();
    unsafe {
        let cfg = valse_config_new();
        assert_eq!(valse_config_set_hyperparams(cfg, 0.01, 0.1, 0.5, false), ValseStatus::Ok);
        let (st, res) = estimate(cfg, &s);
        assert_eq!(st, ValseStatus::Ok);
        let (mut nu, mut rho, mut tau) = (0.0, 0.0, 0.0);
        valse_result_hyperparams(res, &mut nu, &mut rho, &mut tau);
        assert_eq!((nu, rho, tau), (0.01, 0.1, 0.5));
        valse_result_free(res);

        assert_eq!(valse_config_set_hyperparams(cfg, -1.0, 0.1, 0.5, true), ValseStatus::InvalidArgument);
        assert!(!last_error().is_empty());
        valse_config_free(cfg);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut out = ptr::null_mut();
        let idx = [0usize, 0];
        let v = [1.0, 2.0];
        let st = valse_estimate(ptr::null(), idx.as_ptr(), v.as_ptr(), v.as_ptr(), 2, 4, &mut out);
        assert_ne!(st, ValseStatus::Ok);
        assert!(out.is_null());
        assert!(!last_error().is_empty());

        let st = valse_estimate(ptr::null(), ptr::null(), ptr::null(), ptr::null(), 3, 4, &mut out);
        assert_eq!(st, ValseStatus::NullPointer);
        let st = valse_estimate(ptr::null(), idx.as_ptr(), v.as_ptr(), v.as_ptr(), 2, 4, ptr::null_mut());
        assert_eq!(st, ValseStatus::NullPointer);

        assert_eq!(valse_config_set_rel_tol(ptr::null_mut(), 1e-3), ValseStatus::NullPointer);
        assert!(last_error().contains("null"));
        let cfg = valse_config_new();
        assert_eq!(valse_config_set_rel_tol(cfg, 0.0), ValseStatus::InvalidArgument);
        assert_eq!(valse_config_set_rel_tol(cfg, f64::NAN), ValseStatus::InvalidArgument);
        assert_eq!(valse_config_set_max_iters(cfg, 0), ValseStatus::InvalidArgument);
        assert_eq!(valse_config_set_mixture_size(cfg, 0), ValseStatus::InvalidArgument);
        valse_config_free(cfg);

        assert_eq!(valse_result_k_hat(ptr::null()), 0);
        assert!(!valse_result_converged(ptr::null()));
        let mut x = 0.0;
        assert_eq!(valse_result_hyperparams(ptr::null(), &mut x, &mut x, &mut x), ValseStatus::NullPointer);
        valse_result_free(ptr::null_mut());
        valse_config_free(ptr::null_mut());
    }
}

#[test]
fn circular_helpers() {
    unsafe {
        let mut k = 0.0;
        assert_eq!(valse_solve_concentration(3, 10.0, &mut k), ValseStatus::Ok);
        assert!((k / 85.78 - 1.0).abs() < 5e-3, "{k}");
        assert_eq!(valse_solve_concentration(1, 2.5, &mut k), ValseStatus::Ok);
        assert!((k - 2.5).abs() < 1e-9);
        let mut r = 0.0;
        assert_eq!(valse_bessel_ratio(0, 3.0, &mut r), ValseStatus::Ok);
        assert_eq!(r, 1.0);
        assert_eq!(valse_bessel_ratio(1, -1.0, &mut r), ValseStatus::InvalidArgument);
        assert_eq!(valse_bessel_ratio(1, 1.0, ptr::null_mut()), ValseStatus::NullPointer);
        let v = CStr::from_ptr(valse_version()).to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }
}

#[test]
fn header_is_valid_c() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/valse.h")).unwrap();
    for sym in ["valse_estimate", "valse_result_free", "valse_last_error_message", "VALSE_STATUS_OK"] {
        assert!(header.contains(sym), "{sym}");
    }
    let Ok(out) = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c"])
        .arg(dir.join("include/valse.h"))
        .output()
    else {
        eprintln!("no C compiler, syntax check skipped");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn c_program_links_and_runs() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().and_then(|d| d.parent()).unwrap();
    if !lib_dir.join("libvalse_ffi.a").exists() {
        eprintln!("static library not found in {}, skipped", lib_dir.display());
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let bin = tmp.path().join("single_tone");
    let Ok(out) = std::process::Command::new("cc")
        .arg(dir.join("examples/single_tone.c"))
        .arg("-I")
        .arg(dir.join("include"))
        .arg(lib_dir.join("libvalse_ffi.a"))
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .output()
    else {
        eprintln!("no C compiler, skipped");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = std::process::Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let text = String::from_utf8(run.stdout).unwrap();
    let theta: f64 = text.split_whitespace().last().unwrap().parse().unwrap();
    assert!(text.starts_with("k_hat 1 "), "{text}");
    assert!((theta - 0.7).abs() < 1e-2, "{text}");
}
