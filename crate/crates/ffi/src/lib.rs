//! C interface to the docgen generator.
//!
//! Every fallible function returns a [`DocgenStatus`]. On failure the error
//! code name and message of the calling thread can be read with
//! [`docgen_last_error_code`] and [`docgen_last_error_message`]. Handles are
//! opaque and must be released with their matching `_free` function.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use docgen::annotate::{export_coco, DocumentAnnotations};
use docgen::pipeline::{
    generate_dataset, infer_template, DatasetConfig, GenerateError, GeneratedDocument, Generator, GeneratorOptions,
};
use docgen::render::{page_file_name, PageFormat};
use docgen::templates::template_to_toml;

/// Result of a call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DocgenStatus {
    Ok = 0,
    InvalidArgument = 1,
    Template = 2,
    Sampling = 3,
    Font = 4,
    Layout = 5,
    Render = 6,
    Annotation = 7,
    Io = 8,
    Verification = 9,
    OutOfRange = 10,
    Panic = 11,
}

/// Page image encoding.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DocgenFormat {
    Png = 0,
    Jpeg = 1,
}

impl From<DocgenFormat> for PageFormat {
    fn from(f: DocgenFormat) -> Self {
        match f {
            DocgenFormat::Png => PageFormat::Png,
            DocgenFormat::Jpeg => PageFormat::Jpeg,
        }
    }
}

/// One ground-truth box. `parent_id` is -1 for top-level elements.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DocgenElement {
    pub category_id: u32,
    pub page_index: u32,
    pub x: i32,
    pub y: i32,
    pub width: u32,
    pub height: u32,
    pub element_id: u32,
    pub parent_id: i64,
}

/// Loaded templates and resources.
pub struct DocgenGenerator {
    inner: Generator,
    template: String,
}

/// A generated document with its plan, boxes and pages.
pub struct DocgenDocument {
    doc_id: u64,
    inner: GeneratedDocument,
}

struct LastError {
    code: CString,
    message: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<LastError>> = const { RefCell::new(None) };
}

fn set_error(code: &str, message: &str) {
    let clean = |s: &str| CString::new(s.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(LastError { code: clean(code), message: clean(message) }));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &GenerateError) -> DocgenStatus {
    match e {
        GenerateError::Template(_) => DocgenStatus::Template,
        GenerateError::Subnet(_) => DocgenStatus::Sampling,
        GenerateError::Font(_) => DocgenStatus::Font,
        GenerateError::Layout { .. } => DocgenStatus::Layout,
        GenerateError::Render { .. } => DocgenStatus::Render,
        GenerateError::Annotate(_) => DocgenStatus::Annotation,
        GenerateError::Io { .. } | GenerateError::MissingManifest(_) => DocgenStatus::Io,
        GenerateError::Verify(_) => DocgenStatus::Verification,
    }
}

enum Failure {
    Status(DocgenStatus, String),
    Generate(GenerateError),
}

impl From<GenerateError> for Failure {
    fn from(e: GenerateError) -> Self {
        Failure::Generate(e)
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure::Status(DocgenStatus::InvalidArgument, message.into())
}

/// Run `f`, record any failure and translate it to a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DocgenStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DocgenStatus::Ok,
        Ok(Err(Failure::Generate(e))) => {
            set_error(&e.code(), &e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Status(s, message))) => {
            set_error(&format!("{s:?}"), &message);
            s
        }
        Err(_) => {
            set_error("Panic", "internal panic");
            DocgenStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(invalid(format!("`{name}` is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("`{name}` is not UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, name: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, name).map(Some)
    }
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| invalid(format!("`{name}` is null")))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| invalid(format!("`{name}` is null")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("no interior nul").into_raw()
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn docgen_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Code name of the calling thread's last error, or null. Valid until the
/// next call on this thread.
#[no_mangle]
pub extern "C" fn docgen_last_error_code() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |e| e.code.as_ptr()))
}

/// Message of the calling thread's last error, or null.
#[no_mangle]
pub extern "C" fn docgen_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |e| e.message.as_ptr()))
}

/// Release a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn docgen_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Load a template, mixture or bundled preset name. `lang` may be null and
/// `dpi` 0 keeps the template resolution.
#[no_mangle]
pub unsafe extern "C" fn docgen_generator_new(
    template: *const c_char,
    lang: *const c_char,
    dpi: u32,
    defects: bool,
    out: *mut *mut DocgenGenerator,
) -> DocgenStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let template = str_arg(template, "template")?;
        let lang = opt_str_arg(lang, "lang")?;
        let options = GeneratorOptions { dpi: (dpi > 0).then_some(dpi), defects };
        let inner = Generator::load(template.as_ref(), lang, options)?;
        *out = Box::into_raw(Box::new(DocgenGenerator { inner, template: template.to_string() }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn docgen_generator_free(gen: *mut DocgenGenerator) {
    if !gen.is_null() {
        drop(Box::from_raw(gen));
    }
}

/// Generate document `doc_id` of the dataset with `seed`.
#[no_mangle]
pub unsafe extern "C" fn docgen_generate(
    gen: *const DocgenGenerator,
    doc_id: u64,
    seed: u64,
    out: *mut *mut DocgenDocument,
) -> DocgenStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let gen = handle(gen, "generator")?;
        let inner = gen.inner.generate(doc_id, seed)?;
        *out = Box::into_raw(Box::new(DocgenDocument { doc_id, inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn docgen_document_free(doc: *mut DocgenDocument) {
    if !doc.is_null() {
        drop(Box::from_raw(doc));
    }
}

/// Number of pages, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn docgen_document_page_count(doc: *const DocgenDocument) -> usize {
    doc.as_ref().map_or(0, |d| d.inner.pages.len())
}

/// Pixel size shared by all pages.
#[no_mangle]
pub unsafe extern "C" fn docgen_document_page_size(
    doc: *const DocgenDocument,
    width: *mut u32,
    height: *mut u32,
) -> DocgenStatus {
    guard(|| {
        let doc = handle(doc, "document")?;
        let g = doc.inner.composed.geometry;
        *out_arg(width, "width")? = g.width;
        *out_arg(height, "height")? = g.height;
        Ok(())
    })
}

/// Copy a page as packed RGB8 rows into `buf`, which must hold
/// `width * height * 3` bytes.
#[no_mangle]
pub unsafe extern "C" fn docgen_document_page_rgb(
    doc: *const DocgenDocument,
    page: usize,
    buf: *mut u8,
    len: usize,
) -> DocgenStatus {
    guard(|| {
        let doc = handle(doc, "document")?;
        let p = doc
            .inner
            .pages
            .get(page)
            .ok_or_else(|| Failure::Status(DocgenStatus::OutOfRange, format!("no page {page}")))?;
        if buf.is_null() || len < p.pixels.len() {
            return Err(invalid(format!("buffer needs {} bytes", p.pixels.len())));
        }
        ptr::copy_nonoverlapping(p.pixels.as_ptr(), buf, p.pixels.len());
        Ok(())
    })
}

/// Encode one page to `path`.
#[no_mangle]
pub unsafe extern "C" fn docgen_document_write_page(
    doc: *const DocgenDocument,
    page: usize,
    format: DocgenFormat,
    path: *const c_char,
) -> DocgenStatus {
    guard(|| {
        let doc = handle(doc, "document")?;
        let path = PathBuf::from(str_arg(path, "path")?);
        let p = doc
            .inner
            .pages
            .get(page)
            .ok_or_else(|| Failure::Status(DocgenStatus::OutOfRange, format!("no page {page}")))?;
        let bytes = p
            .encode(format.into())
            .map_err(|source| GenerateError::Render { doc: doc.doc_id, source })?;
        std::fs::write(&path, bytes).map_err(|source| GenerateError::Io { path, source })?;
        Ok(())
    })
}

/// Number of ground-truth boxes, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn docgen_document_element_count(doc: *const DocgenDocument) -> usize {
    doc.as_ref().map_or(0, |d| d.inner.composed.elements.len())
}

#[no_mangle]
pub unsafe extern "C" fn docgen_document_element(
    doc: *const DocgenDocument,
    index: usize,
    out: *mut DocgenElement,
) -> DocgenStatus {
    guard(|| {
        let doc = handle(doc, "document")?;
        let out = out_arg(out, "out")?;
        let e = doc
            .inner
            .composed
            .elements
            .get(index)
            .ok_or_else(|| Failure::Status(DocgenStatus::OutOfRange, format!("no element {index}")))?;
        *out = DocgenElement {
            category_id: e.category.coco_id(),
            page_index: e.bbox.page_index as u32,
            x: e.bbox.x,
            y: e.bbox.y,
            width: e.bbox.w,
            height: e.bbox.h,
            element_id: e.element_id,
            parent_id: e.parent_id.map_or(-1, i64::from),
        };
        Ok(())
    })
}

/// The document plan as JSON. Release with [`docgen_string_free`].
#[no_mangle]
pub unsafe extern "C" fn docgen_document_plan_json(doc: *const DocgenDocument, out: *mut *mut c_char) -> DocgenStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let doc = handle(doc, "document")?;
        *out = into_c_string(doc.inner.plan.to_json());
        Ok(())
    })
}

/// The document's annotations as a COCO file with PNG page names.
#[no_mangle]
pub unsafe extern "C" fn docgen_document_coco_json(doc: *const DocgenDocument, out: *mut *mut c_char) -> DocgenStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let doc = handle(doc, "document")?;
        let c = &doc.inner.composed;
        let ann = DocumentAnnotations {
            doc_id: doc.doc_id,
            width: c.geometry.width,
            height: c.geometry.height,
            pages: (0..c.page_count).map(|i| page_file_name(doc.doc_id, i, PageFormat::Png)).collect(),
            elements: c.elements.clone(),
        };
        *out = into_c_string(export_coco(&[ann]).to_json());
        Ok(())
    })
}

/// Write a dataset of `count` documents under `out_dir`. `workers` 0 uses
/// one thread per core.
#[no_mangle]
pub unsafe extern "C" fn docgen_generate_dataset(
    gen: *const DocgenGenerator,
    out_dir: *const c_char,
    count: u64,
    seed: u64,
    workers: usize,
    format: DocgenFormat,
    emit_plans: bool,
    plan_only: bool,
) -> DocgenStatus {
    guard(|| {
        let gen = handle(gen, "generator")?;
        let out = PathBuf::from(str_arg(out_dir, "out_dir")?);
        let workers = if workers == 0 { std::thread::available_parallelism().map_or(1, |n| n.get()) } else { workers };
        let cfg = DatasetConfig {
            out,
            count,
            seed,
            workers,
            format: format.into(),
            emit_plans,
            plan_only,
            template: gen.template.clone(),
            progress: false,
        };
        generate_dataset(&gen.inner, &cfg)?;
        Ok(())
    })
}

/// Update a single template from line-delimited JSON observations and return
/// the posterior template as TOML.
#[no_mangle]
pub unsafe extern "C" fn docgen_infer(
    template: *const c_char,
    observations: *const c_char,
    out: *mut *mut c_char,
) -> DocgenStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let template = PathBuf::from(str_arg(template, "template")?);
        let observations = str_arg(observations, "observations")?;
        let inference = infer_template(&template, observations)?;
        *out = into_c_string(template_to_toml(&inference.posterior));
        Ok(())
    })
}
