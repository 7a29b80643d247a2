use std::ffi::{CStr, CString};
use std::ptr;

use schemaevo_ffi::*;

fn last_error() -> String {
    let p = se_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn set(cfg: *mut SeConfig, k: &str, v: &str) -> SeErrorCode {
    let (k, v) = (CString::new(k).unwrap(), CString::new(v).unwrap());
    unsafe { se_config_set(cfg, k.as_ptr(), v.as_ptr()) }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(se_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn config_roundtrip() {
    let cfg = se_config_new_default();
    assert_eq!(set(cfg, "distribution", "uniform"), SeErrorCode::Ok);
    assert_eq!(set(cfg, "incremental_schedule", "3,6"), SeErrorCode::Ok);
    let json = unsafe { se_config_to_json(cfg) };
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    unsafe { se_string_free(json) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["distribution"], "uniform");
    assert_eq!(v["incremental_schedule"], serde_json::json!([3, 6]));
    unsafe { se_config_free(cfg) };
}

#[test]
fn bad_keys_and_values() {
    let cfg = se_config_new_default();
    assert_eq!(set(cfg, "nonsense", "1"), SeErrorCode::InvalidConfig);
    assert!(last_error().contains("nonsense"));
    assert_eq!(set(cfg, "cardinality_n", "7"), SeErrorCode::Ok);
    assert_eq!(
        unsafe { se_config_validate(cfg, false) },
        SeErrorCode::InvalidConfig
    );
    assert!(last_error().contains("cardinality_n"));
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { se_batch_run(cfg, 1, &mut out) },
        SeErrorCode::InvalidConfig
    );
    assert!(out.is_null());
    unsafe { se_config_free(cfg) };
}

#[test]
fn null_handles() {
    let k = CString::new("runs").unwrap();
    assert_eq!(
        unsafe { se_config_set(ptr::null_mut(), k.as_ptr(), k.as_ptr()) },
        SeErrorCode::NullPointer
    );
    assert_eq!(
        unsafe { se_batch_run(ptr::null(), 1, ptr::null_mut()) },
        SeErrorCode::NullPointer
    );
    let mut s = SeStats::default();
    assert_eq!(
        unsafe {
            se_batch_stat(
                ptr::null(),
                SeStrategy::Eager,
                1,
                SeMetric::CumulatedCost,
                &mut s,
            )
        },
        SeErrorCode::NullPointer
    );
    assert!(unsafe { se_batch_summary_json(ptr::null()) }.is_null());
    unsafe {
        se_config_free(ptr::null_mut());
        se_batch_free(ptr::null_mut());
        se_string_free(ptr::null_mut());
    }
}

#[test]
fn batch_statistics() {
    let cfg = se_config_new_default();
    set(cfg, "releases", "3");
    let mut batch = ptr::null_mut();
    assert_eq!(unsafe { se_batch_run(cfg, 4, &mut batch) }, SeErrorCode::Ok);
    let mut s = SeStats::default();
    assert_eq!(
        unsafe { se_batch_stat(batch, SeStrategy::Eager, 1, SeMetric::MeanLatency, &mut s) },
        SeErrorCode::Ok
    );
    assert_eq!(s.n, 4);
    assert!((s.mean - 4.2).abs() < 1e-9);
    assert_eq!(
        unsafe { se_batch_stat(batch, SeStrategy::Lazy, 1, SeMetric::OnReleaseCost, &mut s) },
        SeErrorCode::Ok
    );
    assert_eq!(s.max, 0.0);
    assert_eq!(
        unsafe { se_batch_stat(batch, SeStrategy::Lazy, 99, SeMetric::OnReleaseCost, &mut s) },
        SeErrorCode::NotFound
    );
    let json = unsafe { se_batch_summary_json(batch) };
    let v: serde_json::Value =
        serde_json::from_str(unsafe { CStr::from_ptr(json) }.to_str().unwrap()).unwrap();
    assert_eq!(v["runs"], 4);
    unsafe {
        se_string_free(json);
        se_batch_free(batch);
        se_config_free(cfg);
    }
}

#[test]
fn summarize_and_money() {
    let xs = [1.0, 1.0, 1.0, 1.0, 100.0];
    let mut s = SeStats::default();
    assert_eq!(
        unsafe { se_summarize(xs.as_ptr(), xs.len(), &mut s) },
        SeErrorCode::Ok
    );
    assert_eq!((s.q1, s.median, s.q3, s.outlier_count), (1.0, 1.0, 1.0, 1));
    assert_eq!(
        unsafe { se_summarize(xs.as_ptr(), 0, &mut s) },
        SeErrorCode::EmptySample
    );

    let mut m = SeMoney::default();
    assert_eq!(
        unsafe { se_money(666, 0.2, 10_000, &mut m) },
        SeErrorCode::Ok
    );
    assert_eq!(
        ((m.pico_hi as u128) << 64) | m.pico_lo as u128,
        1_332_000_000_000
    );
    assert!((m.usd - 1.332).abs() < 1e-12);
    assert_eq!(
        unsafe { se_money(1, f64::NAN, 1, &mut m) },
        SeErrorCode::InvalidArgument
    );
}
