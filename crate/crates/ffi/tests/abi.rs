use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use bctk_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take(s: *mut c_char) -> serde_json::Value {
    let v = serde_json::from_str(CStr::from_ptr(s).to_str().unwrap()).unwrap();
    bctk_string_free(s);
    v
}

unsafe fn last_error() -> String {
    let p = bctk_last_error();
    assert!(!p.is_null());
    CStr::from_ptr(p).to_string_lossy().into_owned()
}

const FLIP: &str = r#"{"in":[2],"out":[2],"terms":[
    {"i0":1,"l":2,"tau":0,"w":1},{"i0":2,"l":1,"tau":0,"w":1}]}"#;

#[test]
fn tensors_round_trip_and_compose() {
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(bctk_tensor_from_json(c(FLIP).as_ptr(), &mut t), BctkStatus::Ok);
        let mut tt = ptr::null_mut();
        assert_eq!(bctk_tensor_compose_seq(t, t, &mut tt), BctkStatus::Ok);
        let mut s = ptr::null_mut();
        assert_eq!(bctk_tensor_to_json(tt, &mut s), BctkStatus::Ok);
        let v = take(s);
        // Flipping twice is the identity.
        for term in v["terms"].as_array().unwrap() {
            assert_eq!(term["i0"], term["l"]);
        }
        let mut ok = false;
        assert_eq!(bctk_tensor_is_channel(tt, &mut ok), BctkStatus::Ok);
        assert!(ok);

        let mut par = ptr::null_mut();
        assert_eq!(bctk_tensor_compose_par(t, t, &mut par), BctkStatus::Ok);
        let mut s = ptr::null_mut();
        assert_eq!(bctk_tensor_embed_json(par, &mut s), BctkStatus::Ok);
        assert_eq!(take(s)["map"]["in"], 16);

        for h in [t, tt, par] {
            bctk_tensor_free(h);
        }
        bctk_tensor_free(ptr::null_mut());
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(bctk_tensor_from_json(ptr::null(), &mut t), BctkStatus::NullPointer);
        assert_eq!(bctk_tensor_from_json(c("{").as_ptr(), &mut t), BctkStatus::InvalidInput);
        assert!(!last_error().is_empty());
        let bad = r#"{"in":[2],"out":[2],"terms":[{"i0":9,"l":1,"tau":0,"w":1}]}"#;
        assert_eq!(bctk_tensor_from_json(c(bad).as_ptr(), &mut t), BctkStatus::InvalidInput);
        assert!(t.is_null());

        let mut a = ptr::null_mut();
        let mut b = ptr::null_mut();
        let three = r#"{"in":[3],"out":[3],"terms":[]}"#;
        assert_eq!(bctk_tensor_from_json(c(FLIP).as_ptr(), &mut a), BctkStatus::Ok);
        assert_eq!(bctk_tensor_from_json(c(three).as_ptr(), &mut b), BctkStatus::Ok);
        let mut ab = ptr::null_mut();
        assert_eq!(bctk_tensor_compose_seq(a, b, &mut ab), BctkStatus::ShapeMismatch);
        assert!(last_error().contains("mismatch"));
        // A successful call clears the message.
        let mut ok = false;
        assert_eq!(bctk_tensor_is_channel(a, &mut ok), BctkStatus::Ok);
        assert!(bctk_last_error().is_null());
        bctk_tensor_free(a);
        bctk_tensor_free(b);
    }
}

#[test]
fn verify_and_refute() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(bctk_verify(c("swap").as_ptr(), 1, 5, 3, &mut s), BctkStatus::Ok);
        assert_eq!(take(s)["failure_count"], 0);
        assert_eq!(bctk_verify(c("nope").as_ptr(), 1, 5, 3, &mut s), BctkStatus::InvalidInput);

        let fabricated = r#"{"L1":1,"L2":2,"xi_beta":[[1,2],[1,2]],"xi_b":[0,0],"theory_pairing":[0,1]}"#;
        assert_eq!(bctk_lct_refute_json(c(fabricated).as_ptr(), &mut s), BctkStatus::NoViolation);
        assert!(take(s)["violations"].as_array().unwrap().is_empty());
        let honest = r#"{"L1":1,"L2":2,"xi_beta":[[1,2],[1,2]],"xi_b":[0,0],"theory_pairing":1}"#;
        assert_eq!(bctk_lct_refute_json(c(honest).as_ptr(), &mut s), BctkStatus::Ok);
        assert!(!take(s)["violations"].as_array().unwrap().is_empty());
    }
}

#[test]
fn evaluates_source() {
    let src = "system a = elem 2\nstate r : a = uniform\neffect e : a = discard\ncircuit p = r ; e\n";
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(bctk_eval_source(c(src).as_ptr(), c("p").as_ptr(), &mut s), BctkStatus::Ok);
        let v = take(s);
        assert_eq!(v["value"], serde_json::json!([1, 1]));
        assert_eq!(bctk_eval_source(c("").as_ptr(), c("p").as_ptr(), &mut s), BctkStatus::InvalidInput);
        assert!(last_error().starts_with("1:1"));
    }
}

#[test]
fn header_declares_the_api() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/bctk.h")).unwrap();
    for sym in ["bctk_tensor_from_json", "bctk_verify", "bctk_string_free", "BCTK_STATUS_NO_VIOLATION", "BctkTensor"] {
        assert!(header.contains(sym), "{sym}");
    }
    // Compile it as C when a compiler is around.
    let out = std::env::temp_dir().join("bctk_header_check.o");
    let probe = Command::new("cc")
        .args(["-fsyntax-only", "-x", "c", "-Wall", "-Werror"])
        .arg(dir.join("include/bctk.h"))
        .arg("-o")
        .arg(&out)
        .status();
    if let Ok(status) = probe {
        assert!(status.success(), "header does not compile");
    }
}
