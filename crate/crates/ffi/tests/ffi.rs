use std::ffi::{c_int, c_void, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use shsade_ffi::*;

fn last_error() -> String {
    let p = shsade_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn benchmark_run_and_config_setters() {
    let cfg = shsade_config_new();
    unsafe {
        assert_eq!(shsade_config_set_population_size(cfg, 30), ShsadeStatus::Ok);
        assert!(shsade_last_error().is_null());
        assert_eq!(
            shsade_config_set_population_size(cfg, 3),
            ShsadeStatus::InvalidConfig
        );
        assert!(last_error().contains('3'));
        assert_eq!(
            shsade_config_set_pbest_fraction(cfg, 1.5),
            ShsadeStatus::InvalidConfig
        );
        assert_eq!(
            shsade_config_set_max_generations(cfg, 200),
            ShsadeStatus::Ok
        );

        let name = CString::new("sphere").unwrap();
        let mut best = [0.0; 5];
        let mut summary = ShsadeRunSummary::default();
        let status = shsade_run_benchmark(
            cfg,
            name.as_ptr(),
            5,
            0,
            3,
            best.as_mut_ptr(),
            5,
            &mut summary,
        );
        assert_eq!(status, ShsadeStatus::Ok);
        assert_eq!(summary.generations, 200);
        assert_eq!(summary.evaluations, 30 * 201);
        let direct: f64 = best.iter().map(|v| v * v).sum();
        assert_eq!(direct, summary.best_fitness);

        let mut small = [0.0; 2];
        let status = shsade_run_benchmark(
            cfg,
            name.as_ptr(),
            5,
            0,
            3,
            small.as_mut_ptr(),
            2,
            &mut summary,
        );
        assert_eq!(status, ShsadeStatus::BufferTooSmall);

        let bogus = CString::new("nope").unwrap();
        let status = shsade_run_benchmark(
            cfg,
            bogus.as_ptr(),
            5,
            0,
            3,
            ptr::null_mut(),
            0,
            ptr::null_mut(),
        );
        assert_eq!(status, ShsadeStatus::InvalidConfig);
        assert!(last_error().contains("nope"));

        assert_eq!(
            shsade_run_benchmark(
                ptr::null(),
                name.as_ptr(),
                5,
                0,
                3,
                ptr::null_mut(),
                0,
                ptr::null_mut()
            ),
            ShsadeStatus::NullPointer
        );
        shsade_config_free(cfg);
        shsade_config_free(ptr::null_mut());
    }
}

#[test]
fn config_from_json() {
    let good = CString::new(r#"{"population_size": 12, "memory_size": 4}"#).unwrap();
    let bad = CString::new(r#"{"population_size": 12, "bogus": 1}"#).unwrap();
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(
            shsade_config_from_json(good.as_ptr(), &mut h),
            ShsadeStatus::Ok
        );
        assert!(!h.is_null());
        shsade_config_free(h);
        let mut h2 = ptr::null_mut();
        assert_eq!(
            shsade_config_from_json(bad.as_ptr(), &mut h2),
            ShsadeStatus::InvalidConfig
        );
        assert!(h2.is_null());
        assert!(last_error().contains("bogus"));
    }
}

unsafe extern "C" fn quadratic(
    x: *const f64,
    dim: usize,
    user: *mut c_void,
    out: *mut f64,
) -> c_int {
    let calls = &mut *(user as *mut u64);
    *calls += 1;
    let xs = std::slice::from_raw_parts(x, dim);
    *out = xs.iter().map(|v| (v - 0.25) * (v - 0.25)).sum();
    0
}

unsafe extern "C" fn failing(_: *const f64, _: usize, _: *mut c_void, _: *mut f64) -> c_int {
    7
}

#[test]
fn callback_objective() {
    let cfg = shsade_config_new();
    let (lo, hi) = ([-1.0; 4], [1.0; 4]);
    let mut calls = 0u64;
    let mut best = [0.0; 4];
    let mut summary = ShsadeRunSummary::default();
    unsafe {
        let status = shsade_minimize(
            cfg,
            lo.as_ptr(),
            hi.as_ptr(),
            4,
            Some(quadratic),
            &mut calls as *mut u64 as *mut c_void,
            10_000,
            9,
            best.as_mut_ptr(),
            4,
            &mut summary,
        );
        assert_eq!(status, ShsadeStatus::Ok);
        assert_eq!(calls, summary.evaluations);
        assert!(summary.evaluations <= 10_000);
        assert!(summary.best_fitness < 1e-8);
        assert!(best.iter().all(|v| (v - 0.25).abs() < 1e-3));

        let status = shsade_minimize(
            cfg,
            lo.as_ptr(),
            hi.as_ptr(),
            4,
            Some(failing),
            ptr::null_mut(),
            0,
            1,
            ptr::null_mut(),
            0,
            ptr::null_mut(),
        );
        assert_eq!(status, ShsadeStatus::Evaluation);
        assert!(last_error().contains('7'));

        let status = shsade_minimize(
            cfg,
            hi.as_ptr(),
            lo.as_ptr(),
            4,
            Some(quadratic),
            ptr::null_mut(),
            0,
            1,
            ptr::null_mut(),
            0,
            ptr::null_mut(),
        );
        assert_eq!(status, ShsadeStatus::InvalidConfig);
        let status = shsade_minimize(
            cfg,
            lo.as_ptr(),
            hi.as_ptr(),
            4,
            None,
            ptr::null_mut(),
            0,
            1,
            ptr::null_mut(),
            0,
            ptr::null_mut(),
        );
        assert_eq!(status, ShsadeStatus::NullPointer);
        shsade_config_free(cfg);
    }
}

#[test]
fn space_codec_and_nas() {
    let json = CString::new(r#"{"axes": [{"name": "b0.width", "values": [16, 32, 48, 64]}, {"name": "b0.depth", "values": [1, 2, 3]}, {"name": "mode", "values": ["x"]}]}"#).unwrap();
    let mut space = ptr::null_mut();
    unsafe {
        assert_eq!(
            shsade_space_from_json(json.as_ptr(), &mut space),
            ShsadeStatus::Ok
        );
        assert_eq!(shsade_space_dim(space), 3);
        let idx = [3usize, 1, 0];
        let mut u = [0.0; 3];
        assert_eq!(
            shsade_space_encode(space, idx.as_ptr(), 3, u.as_mut_ptr()),
            ShsadeStatus::Ok
        );
        assert_eq!(u, [1.0, 0.5, 0.5]);
        let mut back = [9usize; 3];
        assert_eq!(
            shsade_space_decode(space, u.as_ptr(), 3, back.as_mut_ptr()),
            ShsadeStatus::Ok
        );
        assert_eq!(back, idx);
        let far = [1.7, -0.2, 0.9];
        assert_eq!(
            shsade_space_decode(space, far.as_ptr(), 3, back.as_mut_ptr()),
            ShsadeStatus::Ok
        );
        assert_eq!(back, [3, 0, 0]);
        let bad = [4usize, 0, 0];
        assert_eq!(
            shsade_space_encode(space, bad.as_ptr(), 3, u.as_mut_ptr()),
            ShsadeStatus::InvalidArgument
        );
        assert_eq!(
            shsade_space_encode(space, idx.as_ptr(), 2, u.as_mut_ptr()),
            ShsadeStatus::InvalidArgument
        );

        let mut out = ptr::null_mut();
        assert_eq!(
            shsade_nas_run(space, 5, 100.0, 1.0, 20, 1, &mut out),
            ShsadeStatus::Ok
        );
        let text = CStr::from_ptr(out).to_str().unwrap().to_owned();
        shsade_string_free(out);
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(doc["evaluations"], 12);
        assert!(doc["best_genotype"]["b0.width"].is_i64());

        let mut out2 = ptr::null_mut();
        assert_eq!(
            shsade_nas_run(space, 5, -1.0, 1.0, 20, 1, &mut out2),
            ShsadeStatus::InvalidConfig
        );
        assert!(out2.is_null());
        shsade_space_free(space);
    }
    let broken = CString::new(r#"{"axes": []}"#).unwrap();
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(
            shsade_space_from_json(broken.as_ptr(), &mut s),
            ShsadeStatus::InvalidConfig
        );
    }
}

#[test]
fn header_declares_every_export() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(root.join("include/shsade.h")).unwrap();
    let source = std::fs::read_to_string(root.join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(
            header.contains(&format!("{name}(")),
            "{name} missing from header"
        );
    }
}

/// Compiles and runs the C smoke program against the static library when a
/// C compiler is available.
#[test]
fn c_smoke_program() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let lib = exe_dir.join("libshsade_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: static library or C compiler not available");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(root.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(root.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(
        out.status.success(),
        "smoke program exited with {:?}",
        out.status
    );
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
