use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use docgen_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_code() -> String {
    let p = docgen_last_error_code();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn generator(template: &str, defects: bool) -> *mut DocgenGenerator {
    let mut gen = ptr::null_mut();
    let status = unsafe { docgen_generator_new(c(template).as_ptr(), ptr::null(), 0, defects, &mut gen) };
    assert_eq!(status, DocgenStatus::Ok);
    assert!(!gen.is_null());
    gen
}

fn take_string(p: *mut std::ffi::c_char) -> String {
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string();
    unsafe { docgen_string_free(p) };
    s
}

#[test]
fn document_round_trip() {
    let gen = generator("scientific", false);
    let mut doc = ptr::null_mut();
    assert_eq!(unsafe { docgen_generate(gen, 2, 11, &mut doc) }, DocgenStatus::Ok);
    assert!(docgen_last_error_code().is_null());

    let pages = unsafe { docgen_document_page_count(doc) };
    assert!(pages >= 1);
    let (mut w, mut h) = (0u32, 0u32);
    assert_eq!(unsafe { docgen_document_page_size(doc, &mut w, &mut h) }, DocgenStatus::Ok);
    let mut buf = vec![0u8; (w * h * 3) as usize];
    assert_eq!(unsafe { docgen_document_page_rgb(doc, 0, buf.as_mut_ptr(), buf.len()) }, DocgenStatus::Ok);
    assert!(buf.iter().any(|&b| b < 128));
    assert_eq!(unsafe { docgen_document_page_rgb(doc, 0, buf.as_mut_ptr(), 3) }, DocgenStatus::InvalidArgument);
    assert_eq!(unsafe { docgen_document_page_rgb(doc, pages, buf.as_mut_ptr(), buf.len()) }, DocgenStatus::OutOfRange);

    let n = unsafe { docgen_document_element_count(doc) };
    assert!(n > 0);
    for i in 0..n {
        let mut e = DocgenElement::default();
        assert_eq!(unsafe { docgen_document_element(doc, i, &mut e) }, DocgenStatus::Ok);
        assert!((1..=10).contains(&e.category_id));
        assert!((e.page_index as usize) < pages);
        assert!(e.x >= 0 && e.y >= 0 && e.x as u32 + e.width <= w && e.y as u32 + e.height <= h);
    }

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { docgen_document_coco_json(doc, &mut json) }, DocgenStatus::Ok);
    let coco: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
    assert_eq!(coco["annotations"].as_array().unwrap().len(), n);
    assert_eq!(coco["images"].as_array().unwrap().len(), pages);

    let mut plan = ptr::null_mut();
    assert_eq!(unsafe { docgen_document_plan_json(doc, &mut plan) }, DocgenStatus::Ok);
    assert!(take_string(plan).starts_with('{'));

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("p.png");
    let path = c(file.to_str().unwrap());
    assert_eq!(unsafe { docgen_document_write_page(doc, 0, DocgenFormat::Png, path.as_ptr()) }, DocgenStatus::Ok);
    assert!(std::fs::read(&file).unwrap().starts_with(b"\x89PNG"));

    unsafe {
        docgen_document_free(doc);
        docgen_generator_free(gen);
    }
}

#[test]
fn same_inputs_give_same_pixels() {
    let gen = generator("forms", true);
    let pixels = || {
        let mut doc = ptr::null_mut();
        assert_eq!(unsafe { docgen_generate(gen, 5, 3, &mut doc) }, DocgenStatus::Ok);
        let (mut w, mut h) = (0u32, 0u32);
        unsafe { docgen_document_page_size(doc, &mut w, &mut h) };
        let mut buf = vec![0u8; (w * h * 3) as usize];
        unsafe { docgen_document_page_rgb(doc, 0, buf.as_mut_ptr(), buf.len()) };
        unsafe { docgen_document_free(doc) };
        buf
    };
    assert_eq!(pixels(), pixels());
    unsafe { docgen_generator_free(gen) };
}

#[test]
fn errors_set_status_and_code() {
    let mut gen = ptr::null_mut();
    let missing = c("/nonexistent/template.toml");
    let status = unsafe { docgen_generator_new(missing.as_ptr(), ptr::null(), 0, true, &mut gen) };
    assert_eq!(status, DocgenStatus::Template);
    assert!(gen.is_null());
    assert!(!last_code().is_empty());
    assert!(!docgen_last_error_message().is_null());

    let status = unsafe { docgen_generator_new(ptr::null(), ptr::null(), 0, true, &mut gen) };
    assert_eq!(status, DocgenStatus::InvalidArgument);
    assert_eq!(last_code(), "InvalidArgument");

    let mut doc = ptr::null_mut();
    assert_eq!(unsafe { docgen_generate(ptr::null(), 0, 0, &mut doc) }, DocgenStatus::InvalidArgument);
    assert_eq!(unsafe { docgen_document_page_count(ptr::null()) }, 0);
    unsafe {
        docgen_document_free(ptr::null_mut());
        docgen_generator_free(ptr::null_mut());
        docgen_string_free(ptr::null_mut());
    }
}

#[test]
fn inference_returns_updated_template() {
    let obs = c("{\"node_id\": \"doc.columns\", \"category_index\": 1}\n{\"node_id\": \"doc.columns\", \"category_index\": 1}\n");
    let mut out = ptr::null_mut();
    let status = unsafe { docgen_infer(c("scientific").as_ptr(), obs.as_ptr(), &mut out) };
    assert_eq!(status, DocgenStatus::Ok, "{}", last_code());
    let toml = take_string(out);
    assert!(toml.contains("doc.columns"));

    let bad = c("{\"node_id\": \"no.such.node\", \"value\": 1}");
    let status = unsafe { docgen_infer(c("scientific").as_ptr(), bad.as_ptr(), &mut out) };
    assert_eq!(status, DocgenStatus::Sampling);
    assert_eq!(last_code(), "UnknownNode");
    assert!(out.is_null());
}

#[test]
fn dataset_is_written() {
    let gen = generator("resume", true);
    let dir = tempfile::tempdir().unwrap();
    let out = c(dir.path().to_str().unwrap());
    let status = unsafe { docgen_generate_dataset(gen, out.as_ptr(), 3, 1, 1, DocgenFormat::Jpeg, false, false) };
    assert_eq!(status, DocgenStatus::Ok);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["documents"].as_array().unwrap().len(), 3);
    assert_eq!(manifest["template"], "resume");
    assert!(dir.path().join("annotations.json").exists());
    unsafe { docgen_generator_free(gen) };
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(docgen_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let header = std::fs::read_to_string(include.join("docgen.h")).unwrap();
    for f in ["docgen_generator_new", "docgen_generate", "docgen_document_element", "docgen_infer", "docgen_last_error_code"] {
        assert!(header.contains(f), "{f} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"docgen.h\"\n\
         int main(void) {\n\
           DocgenGenerator *g = NULL;\n\
           DocgenStatus s = docgen_generator_new(\"scientific\", NULL, 0, true, &g);\n\
           DocgenElement e;\n\
           (void)e;\n\
           docgen_generator_free(g);\n\
           return s == DOCGEN_STATUS_OK ? 0 : 1;\n\
         }\n",
    )
    .unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let result = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .output()
        .expect("a C compiler is available");
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
}
