use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use soundabs_ffi::*;

fn corpus(name: &str) -> CString {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name);
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = soundabs_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn verifies_clear_a_through_handles() {
    unsafe {
        let mut inputs = ptr::null_mut();
        assert_eq!(soundabs_inputs_load_dir(corpus("clear-a").as_ptr(), &mut inputs), SoundabsStatus::Ok);
        let mut n = 0;
        assert_eq!(soundabs_inputs_task_count(inputs, &mut n), SoundabsStatus::Ok);
        assert_eq!(n, 8);

        let opts = SoundabsOptions {
            solver_cmd: ptr::null(),
            timeout_secs: 20.0,
            jobs: 1,
            basic_axioms: false,
        };
        let mut report = ptr::null_mut();
        assert_eq!(soundabs_verify(inputs, &opts, &mut report), SoundabsStatus::Ok);
        assert_eq!(soundabs_report_verdict(report), SoundabsVerdict::True);
        assert_eq!(soundabs_report_task_count(report), 8);

        let mut id = ptr::null();
        let mut class = SoundabsTaskClass::Unknown;
        assert_eq!(soundabs_report_task(report, 0, &mut id, &mut class), SoundabsStatus::Ok);
        assert_eq!(CStr::from_ptr(id).to_str().unwrap(), "task1:init");
        assert_eq!(class, SoundabsTaskClass::Valid);
        assert_eq!(soundabs_report_task(report, 8, &mut id, &mut class), SoundabsStatus::OutOfRange);

        let json: serde_json::Value = serde_json::from_str(CStr::from_ptr(soundabs_report_json(report)).to_str().unwrap()).unwrap();
        assert_eq!(json["aggregate"], "True");

        soundabs_report_free(report);
        soundabs_inputs_free(inputs);
    }
}

#[test]
fn error_codes() {
    unsafe {
        let mut inputs = ptr::null_mut();
        assert_eq!(soundabs_inputs_load_dir(ptr::null(), &mut inputs), SoundabsStatus::NullArgument);
        assert!(last_error().contains("dir"));

        let missing = CString::new("/nonexistent/soundabs").unwrap();
        assert_eq!(soundabs_inputs_load_dir(missing.as_ptr(), &mut inputs), SoundabsStatus::Io);
        assert!(inputs.is_null());

        let bad = CString::new("(domain").unwrap();
        let empty = CString::new("").unwrap();
        let status = soundabs_inputs_new(bad.as_ptr(), empty.as_ptr(), empty.as_ptr(), empty.as_ptr(), &mut inputs);
        assert_eq!(status, SoundabsStatus::Input);
        assert!(!last_error().is_empty());

        let invalid = [0xffu8, 0];
        let status = soundabs_inputs_load_dir(invalid.as_ptr().cast(), &mut inputs);
        assert_eq!(status, SoundabsStatus::InvalidUtf8);

        soundabs_inputs_free(ptr::null_mut());
        soundabs_report_free(ptr::null_mut());
    }
}

#[test]
fn missing_solver_gives_unknown() {
    unsafe {
        let mut inputs = ptr::null_mut();
        assert_eq!(soundabs_inputs_load_dir(corpus("clear-a").as_ptr(), &mut inputs), SoundabsStatus::Ok);
        let cmd = CString::new("/nonexistent/solver").unwrap();
        let opts = SoundabsOptions {
            solver_cmd: cmd.as_ptr(),
            timeout_secs: 1.0,
            jobs: 1,
            basic_axioms: true,
        };
        let mut report = ptr::null_mut();
        assert_eq!(soundabs_verify(inputs, &opts, &mut report), SoundabsStatus::Ok);
        assert_eq!(soundabs_report_verdict(report), SoundabsVerdict::Unknown);
        soundabs_report_free(report);
        soundabs_inputs_free(inputs);
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/soundabs.h")).unwrap();
    for f in ["soundabs_inputs_load_dir", "soundabs_verify", "soundabs_report_free", "soundabs_last_error"] {
        assert!(header.contains(f), "{f} missing from header");
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"soundabs.h\"\n\
         int main(void) {\n\
           SoundabsInputs *in = 0; SoundabsReport *r = 0;\n\
           SoundabsOptions o = { 0, 5.0, 1, false };\n\
           if (soundabs_inputs_load_dir(\"x\", &in) != SOUNDABS_STATUS_OK) return 1;\n\
           if (soundabs_verify(in, &o, &r) == SOUNDABS_STATUS_OK && soundabs_report_verdict(r) == SOUNDABS_VERDICT_TRUE) return 0;\n\
           soundabs_report_free(r); soundabs_inputs_free(in);\n\
           return 2;\n\
         }\n",
    )
    .unwrap();
    let out = match Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(&src)
        .output()
    {
        Ok(o) => o,
        Err(_) => {
            eprintln!("no C compiler; skipping");
            return;
        }
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
