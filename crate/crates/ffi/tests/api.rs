use std::ffi::{CStr, CString};
use std::ptr;

use exsuff_ffi::*;

fn last_error() -> String {
    let p = exsuff_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn pmf(text: &str) -> *mut ExsuffPmf {
    let text = CString::new(text).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { exsuff_pmf_from_text(text.as_ptr(), &mut out) },
        ExsuffStatus::Ok
    );
    assert!(!out.is_null());
    out
}

fn estimand(spec: &str, n: usize) -> *mut ExsuffEstimand {
    let spec = CString::new(spec).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { exsuff_estimand_parse(spec.as_ptr(), n, &mut out) },
        ExsuffStatus::Ok
    );
    out
}

#[test]
fn version_and_status_strings() {
    let v = unsafe { CStr::from_ptr(exsuff_version()) }
        .to_str()
        .unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    let m = unsafe { CStr::from_ptr(exsuff_status_message(ExsuffStatus::NullEvent)) };
    assert!(m.to_str().unwrap().contains("probability zero"));
}

#[test]
fn pmf_round_trip_and_checks() {
    let p = pmf("dim 2\n0 1 0.6\n1 0 0.4\n");
    let (mut dim, mut atoms) = (0usize, 0usize);
    unsafe {
        assert_eq!(exsuff_pmf_shape(p, &mut dim, &mut atoms), ExsuffStatus::Ok);
        assert_eq!((dim, atoms), (2, 2));

        let mut exch = true;
        assert_eq!(
            exsuff_pmf_is_exchangeable(p, 1e-12, &mut exch),
            ExsuffStatus::Ok
        );
        assert!(!exch);

        let mut gap = 0.0;
        assert_eq!(
            exsuff_pmf_compare_conditional(p, &mut gap),
            ExsuffStatus::Ok
        );
        assert!((gap - 0.1).abs() <= 1e-12);

        let mut q = ptr::null_mut();
        assert_eq!(exsuff_pmf_symmetrize(p, &mut q), ExsuffStatus::Ok);
        assert_eq!(
            exsuff_pmf_is_exchangeable(q, 1e-12, &mut exch),
            ExsuffStatus::Ok
        );
        assert!(exch);
        assert_eq!(
            exsuff_pmf_compare_conditional(q, &mut gap),
            ExsuffStatus::Ok
        );
        assert!(gap <= 1e-12);

        // Identity gap: 0.1 on the control with g = x1 and the full support.
        let g = estimand("proj:0", 2);
        let rows = [0.0, 1.0, 1.0, 0.0];
        let mut d = 0.0;
        assert_eq!(
            exsuff_pmf_identity_gap(p, g, rows.as_ptr(), 2, &mut d),
            ExsuffStatus::Ok
        );
        assert!((d - 0.1).abs() <= 1e-12);
        assert_eq!(
            exsuff_pmf_identity_gap(q, g, rows.as_ptr(), 2, &mut d),
            ExsuffStatus::Ok
        );
        assert!(d <= 1e-12);
        assert_eq!(
            exsuff_pmf_identity_gap(q, g, ptr::null(), 0, &mut d),
            ExsuffStatus::Ok
        );
        assert_eq!(d, 0.0);

        exsuff_estimand_free(g);
        exsuff_pmf_free(q);
        exsuff_pmf_free(p);
        exsuff_pmf_free(ptr::null_mut());
    }
}

#[test]
fn parse_errors_set_last_error() {
    let text = CString::new("dim 2\n0 1 0.5\n").unwrap();
    let mut out = ptr::null_mut();
    let status = unsafe { exsuff_pmf_from_text(text.as_ptr(), &mut out) };
    assert_eq!(status, ExsuffStatus::Parse);
    assert!(out.is_null());
    assert!(last_error().contains("sum to"), "{}", last_error());

    let status = unsafe { exsuff_pmf_from_text(ptr::null(), &mut out) };
    assert_eq!(status, ExsuffStatus::NullPointer);

    let bad = [0x66u8, 0xff, 0];
    let status = unsafe { exsuff_pmf_from_text(bad.as_ptr().cast(), &mut out) };
    assert_eq!(status, ExsuffStatus::InvalidUtf8);

    let spec = CString::new("proj:5").unwrap();
    let mut g = ptr::null_mut();
    let status = unsafe { exsuff_estimand_parse(spec.as_ptr(), 3, &mut g) };
    assert_ne!(status, ExsuffStatus::Ok);
    assert!(g.is_null());

    // Success clears the message.
    let mut v = 0.0;
    assert_eq!(
        unsafe { exsuff_chi_square_sf(2.0, 2, &mut v) },
        ExsuffStatus::Ok
    );
    assert!(exsuff_last_error_message().is_null());
}

#[test]
fn symmetrization() {
    let g = estimand("wsum:1,2,3", 3);
    let y = [0.0, 1.0, 2.0];
    unsafe {
        let mut exact = 0.0;
        assert_eq!(
            exsuff_symmetrize_exact(g, y.as_ptr(), 3, &mut exact),
            ExsuffStatus::Ok
        );
        assert!((exact - 6.0).abs() <= 1e-12);

        let (mut a, mut b, mut se) = (0.0, 0.0, 0.0);
        assert_eq!(
            exsuff_symmetrize_mc(g, y.as_ptr(), 3, 4000, 9, &mut a, &mut se),
            ExsuffStatus::Ok
        );
        assert_eq!(
            exsuff_symmetrize_mc(g, y.as_ptr(), 3, 4000, 9, &mut b, ptr::null_mut()),
            ExsuffStatus::Ok
        );
        assert_eq!(a, b);
        assert!((a - exact).abs() <= 4.0 * se);

        let mut out = 0.0;
        assert_eq!(
            exsuff_symmetrize_exact(g, y.as_ptr(), 2, &mut out),
            ExsuffStatus::DimensionMismatch
        );
        exsuff_estimand_free(g);

        let big = estimand("proj:0", 11);
        let y: Vec<f64> = (0..11).map(f64::from).collect();
        assert_eq!(
            exsuff_symmetrize_exact(big, y.as_ptr(), 11, &mut out),
            ExsuffStatus::OutOfRange
        );
        exsuff_estimand_free(big);
    }
}

#[test]
fn sort_and_chi_square() {
    let x = [3.0, 1.0, 2.0, 1.0];
    let mut y = [0.0; 4];
    let mut p = [0usize; 4];
    unsafe {
        assert_eq!(
            exsuff_sort_to_cone(x.as_ptr(), 4, y.as_mut_ptr(), p.as_mut_ptr()),
            ExsuffStatus::Ok
        );
    }
    assert_eq!(y, [1.0, 1.0, 2.0, 3.0]);
    assert_eq!(p, [1, 3, 2, 0]);

    let mut v = 0.0;
    unsafe {
        assert_eq!(exsuff_chi_square_sf(3.8414588, 1, &mut v), ExsuffStatus::Ok);
        assert!((v - 0.05).abs() <= 1e-6);
        assert_eq!(
            exsuff_chi_square_sf(-1.0, 1, &mut v),
            ExsuffStatus::InvalidArgument
        );
        assert_eq!(
            exsuff_chi_square_sf(1.0, 1, ptr::null_mut()),
            ExsuffStatus::NullPointer
        );
    }
}
