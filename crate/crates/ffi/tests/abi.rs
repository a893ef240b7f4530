use std::ffi::{c_char, CStr, CString};
use std::ptr;

use hawkes_risk_ffi::*;

const CONFIG: &str = r#"{"kernel": {"family": "exponential", "alpha": 0.5, "beta": 1.0},
    "jump_rate": {"family": "relu-affine", "mu": 1.0},
    "horizon": 3.0, "deltas": [0.5, 0.1], "trials": 8, "seed": 3}"#;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    unsafe {
        hr_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn experiment(json: &str) -> *mut HrExperiment {
    let c = CString::new(json).unwrap();
    let mut exp = ptr::null_mut();
    assert_eq!(
        unsafe { hr_experiment_new(c.as_ptr(), &mut exp) },
        HrStatus::Ok,
        "{}",
        last_error()
    );
    exp
}

unsafe fn take_string(s: *mut c_char) -> String {
    let out = CStr::from_ptr(s).to_str().unwrap().to_owned();
    hr_string_free(s);
    out
}

#[test]
fn config_errors_map_to_status_codes() {
    let bad = CString::new(r#"{"kernel": {"family": "nope"}}"#).unwrap();
    let mut exp = ptr::null_mut();
    unsafe {
        assert_eq!(hr_experiment_new(bad.as_ptr(), &mut exp), HrStatus::Config);
        assert!(exp.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(
            hr_experiment_new(ptr::null(), &mut exp),
            HrStatus::NullPointer
        );
        let good = CString::new(CONFIG).unwrap();
        assert_eq!(
            hr_experiment_new(good.as_ptr(), ptr::null_mut()),
            HrStatus::NullPointer
        );
    }
    let unstable = CONFIG.replace("\"alpha\": 0.5", "\"alpha\": 1.5");
    let c = CString::new(unstable).unwrap();
    unsafe {
        let rc = hr_experiment_new(c.as_ptr(), &mut exp);
        if rc == HrStatus::Ok {
            let mut path = ptr::null_mut();
            assert_eq!(hr_simulate_risk(exp, 0, &mut path), HrStatus::Unstable);
            hr_experiment_free(exp);
        } else {
            assert_eq!(rc, HrStatus::Unstable);
        }
    }
}

#[test]
fn couple_matches_paths() {
    let exp = experiment(CONFIG);
    unsafe {
        let mut m = HrCoupleMetrics::default();
        assert_eq!(
            hr_couple(exp, 5, 0.1, &mut m),
            HrStatus::Ok,
            "{}",
            last_error()
        );
        let (mut r, mut rd) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(hr_simulate_risk(exp, 5, &mut r), HrStatus::Ok);
        assert_eq!(
            hr_simulate_discrete_risk(exp, 5, 0.1, &mut rd),
            HrStatus::Ok
        );
        let mut d = f64::NAN;
        assert_eq!(hr_uniform_distance(r, rd, &mut d), HrStatus::Ok);
        assert_eq!(d, m.uniform);
        assert_eq!(hr_sobolev_distance(r, rd, 0.25, &mut d), HrStatus::Ok);
        assert_eq!(d, m.sobolev);
        assert_eq!(hr_skorokhod_distance(r, rd, &mut d), HrStatus::Ok);
        assert_eq!(d, m.skorokhod);
        assert_eq!(hr_path_value_at(r, 3.0), m.risk);
        assert_eq!(hr_path_value_at(rd, 3.0), m.risk_delta);
        assert_eq!(hr_path_horizon(r), 3.0);

        let n = hr_path_len(r);
        let (mut b, mut v) = (vec![0.0; n], vec![0.0; n]);
        if n > 1 {
            assert_eq!(
                hr_path_copy(r, b.as_mut_ptr(), v.as_mut_ptr(), n - 1),
                HrStatus::BufferTooSmall
            );
        }
        assert_eq!(
            hr_path_copy(r, b.as_mut_ptr(), v.as_mut_ptr(), n),
            HrStatus::Ok
        );
        assert_eq!(b[0], 0.0);
        assert_eq!(*v.last().unwrap(), m.risk);

        hr_path_free(r);
        hr_path_free(rd);
        hr_experiment_free(exp);
    }
}

#[test]
fn handmade_paths() {
    unsafe {
        let mut f = ptr::null_mut();
        let mut g = ptr::null_mut();
        assert_eq!(
            hr_path_new([0.0, 1.0].as_ptr(), [0.0, 1.0].as_ptr(), 2, 2.0, &mut f),
            HrStatus::Ok
        );
        assert_eq!(
            hr_path_new([0.0, 1.1].as_ptr(), [0.0, 1.0].as_ptr(), 2, 2.0, &mut g),
            HrStatus::Ok
        );
        let mut d = 0.0;
        assert_eq!(hr_skorokhod_distance(f, g, &mut d), HrStatus::Ok);
        assert!((d - 0.1).abs() < 1e-12);
        assert_eq!(hr_uniform_distance(f, g, &mut d), HrStatus::Ok);
        assert_eq!(d, 1.0);
        assert_eq!(hr_sobolev_distance(f, g, 1.5, &mut d), HrStatus::Parameter);

        let mut bad = ptr::null_mut();
        assert_eq!(
            hr_path_new([0.5].as_ptr(), [1.0].as_ptr(), 1, 2.0, &mut bad),
            HrStatus::Parameter
        );
        assert!(bad.is_null());
        assert_eq!(
            hr_path_new(ptr::null(), ptr::null(), 3, 2.0, &mut bad),
            HrStatus::NullPointer
        );
        assert_eq!(hr_path_len(ptr::null()), 0);
        assert!(hr_path_value_at(ptr::null(), 0.0).is_nan());

        hr_path_free(f);
        hr_path_free(g);
        hr_path_free(ptr::null_mut());
        hr_experiment_free(ptr::null_mut());
        hr_string_free(ptr::null_mut());
    }
}

#[test]
fn json_reports() {
    let exp = experiment(CONFIG);
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(hr_bounds_json(exp, 0.1, &mut s), HrStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take_string(s)).unwrap();
        assert_eq!(v["delta"], 0.1);
        assert!(v["stable"].as_bool().unwrap());

        assert_eq!(hr_convergence_json(exp, 2, &mut s), HrStatus::Ok);
        let a = take_string(s);
        assert_eq!(hr_convergence_json(exp, 1, &mut s), HrStatus::Ok);
        assert_eq!(a, take_string(s));

        assert_eq!(hr_experiment_set_seed(exp, 99), HrStatus::Ok);
        assert_eq!(hr_convergence_json(exp, 2, &mut s), HrStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(&take_string(s)).unwrap();
        assert_eq!(v["seed"], 99);

        assert_eq!(hr_bounds_json(exp, 0.7, &mut s), HrStatus::Parameter);
        assert!(s.is_null());
        hr_experiment_free(exp);
    }
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(hr_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/hawkes_risk.h");
    let text = std::fs::read_to_string(header).unwrap();
    for sym in [
        "hr_experiment_new",
        "hr_couple",
        "hr_skorokhod_distance",
        "HR_STATUS_UNSTABLE",
    ] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    let Ok(status) = std::process::Command::new("cc")
        .args(["-std=c99", "-fsyntax-only", "-x", "c", header])
        .status()
    else {
        eprintln!("no C compiler; syntax check skipped");
        return;
    };
    assert!(status.success());
}
