//! C interface to graph construction, pattern mining and misuse detection.
//!
//! Every function returns an [`ApwStatus`]; results come back through out
//! pointers. Handles are opaque and must be released with their `_free`
//! function. After a non-`Ok` status, [`apw_last_error`] describes the failure
//! on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use apiwatch::aug::{build_aug, contains_relaxed, graph_fingerprint, parse_augs, render_aug, Aug, MethodRef};
use apiwatch::detect::{detect, overlap, Classification};
use apiwatch::java::parse_compilation_unit;
use apiwatch::miner::{mine_patterns, parse_patterns, rank_patterns, render_pattern, MinSupport, MiningConfig, Pattern};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    NotFound = 4,
    BufferTooSmall = 5,
    InvalidArgument = 6,
    /// A Rust panic was caught at the boundary.
    Internal = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApwClassification {
    Correct = 0,
    Misuse = 1,
}

/// One API usage graph.
pub struct ApwAug(Aug);

/// Patterns ordered by support (highest first).
pub struct ApwPatternSet(Vec<Pattern>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: ApwStatus, msg: impl Into<String>) -> ApwStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> ApwStatus) -> ApwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(ApwStatus::Internal, "internal error"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, ApwStatus> {
    if p.is_null() {
        return Err(fail(ApwStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(ApwStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, ApwStatus> {
    p.as_ref().ok_or_else(|| fail(ApwStatus::NullPointer, format!("{what} is null")))
}

fn out_ptr<T>(p: *mut T, what: &str) -> Result<(), ApwStatus> {
    if p.is_null() {
        Err(fail(ApwStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Message for the last failure on this thread, or null. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn apw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses the first graph of a text in the graph format.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn apw_aug_parse(text: *const c_char, out: *mut *mut ApwAug) -> ApwStatus {
    guard(|| {
        let text = tri!(str_arg(text, "text"));
        tri!(out_ptr(out, "out"));
        let blocks = match parse_augs(text) {
            Ok(b) => b,
            Err(e) => return fail(ApwStatus::ParseError, e.to_string()),
        };
        let Some(first) = blocks.into_iter().next() else {
            return fail(ApwStatus::NotFound, "no graph in text");
        };
        *out = Box::into_raw(Box::new(ApwAug(first.aug)));
        ApwStatus::Ok
    })
}

/// Builds the graph of the first method named `method` in a Java source.
///
/// # Safety
/// `source` and `method` must be NUL-terminated strings; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn apw_aug_from_java(source: *const c_char, method: *const c_char, out: *mut *mut ApwAug) -> ApwStatus {
    guard(|| {
        let source = tri!(str_arg(source, "source"));
        let method = tri!(str_arg(method, "method"));
        tri!(out_ptr(out, "out"));
        let unit = match parse_compilation_unit(source) {
            Ok(u) => u,
            Err(e) => return fail(ApwStatus::ParseError, e.to_string()),
        };
        let methods = unit.methods();
        let Some(id) = methods.iter().position(|m| m.name == method) else {
            return fail(ApwStatus::NotFound, format!("no method {method}"));
        };
        let g = build_aug(methods[id], &unit, MethodRef::new("", method, id));
        *out = Box::into_raw(Box::new(ApwAug(g)));
        ApwStatus::Ok
    })
}

/// # Safety
/// `aug` must come from this library and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn apw_aug_free(aug: *mut ApwAug) {
    if !aug.is_null() {
        drop(Box::from_raw(aug));
    }
}

/// # Safety
/// `aug` must be a live handle; the out pointers valid.
#[no_mangle]
pub unsafe extern "C" fn apw_aug_size(aug: *const ApwAug, nodes: *mut usize, edges: *mut usize) -> ApwStatus {
    guard(|| {
        let g = tri!(handle(aug, "aug"));
        tri!(out_ptr(nodes, "nodes"));
        tri!(out_ptr(edges, "edges"));
        *nodes = g.0.nodes.len();
        *edges = g.0.edges.len();
        ApwStatus::Ok
    })
}

/// Writes the 64-character hex fingerprint and a NUL into `buf`, which must
/// hold at least 65 bytes.
///
/// # Safety
/// `aug` must be a live handle; `buf` writable for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn apw_aug_fingerprint(aug: *const ApwAug, buf: *mut c_char, len: usize) -> ApwStatus {
    guard(|| {
        let g = tri!(handle(aug, "aug"));
        tri!(out_ptr(buf, "buf"));
        let fp = graph_fingerprint(&g.0);
        if len < fp.len() + 1 {
            return fail(ApwStatus::BufferTooSmall, format!("need {} bytes", fp.len() + 1));
        }
        ptr::copy_nonoverlapping(fp.as_ptr().cast::<c_char>(), buf, fp.len());
        *buf.add(fp.len()) = 0;
        ApwStatus::Ok
    })
}

/// Renders a graph in the text format. Release the string with [`apw_string_free`].
///
/// # Safety
/// `aug` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn apw_aug_render(aug: *const ApwAug, out: *mut *mut c_char) -> ApwStatus {
    guard(|| {
        let g = tri!(handle(aug, "aug"));
        tri!(out_ptr(out, "out"));
        *out = CString::new(render_aug(&g.0)).map_or(ptr::null_mut(), CString::into_raw);
        ApwStatus::Ok
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn apw_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Relaxed containment: node and edge label multisets of `pattern` are
/// included in those of `candidate`.
///
/// # Safety
/// Both handles must be live; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn apw_contains_relaxed(pattern: *const ApwAug, candidate: *const ApwAug, out: *mut bool) -> ApwStatus {
    guard(|| {
        let p = tri!(handle(pattern, "pattern"));
        let c = tri!(handle(candidate, "candidate"));
        tri!(out_ptr(out, "out"));
        *out = contains_relaxed(&p.0, &c.0);
        ApwStatus::Ok
    })
}

/// Overlap of a pattern with a usage as an exact fraction.
///
/// # Safety
/// Both handles must be live; the out pointers valid.
#[no_mangle]
pub unsafe extern "C" fn apw_overlap(pattern: *const ApwAug, usage: *const ApwAug, num: *mut usize, den: *mut usize) -> ApwStatus {
    guard(|| {
        let p = tri!(handle(pattern, "pattern"));
        let u = tri!(handle(usage, "usage"));
        tri!(out_ptr(num, "num"));
        tri!(out_ptr(den, "den"));
        match overlap(&p.0, &u.0) {
            Ok(o) => {
                *num = o.num;
                *den = o.den;
                ApwStatus::Ok
            }
            Err(e) => fail(ApwStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Mines closed patterns with at least `min_support` (>= 1) containing
/// graphs and at most `max_nodes` nodes (0 for the default bound).
///
/// # Safety
/// `augs` must point to `count` live handles; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn apw_mine(
    augs: *const *const ApwAug,
    count: usize,
    min_support: usize,
    max_nodes: usize,
    out: *mut *mut ApwPatternSet,
) -> ApwStatus {
    guard(|| {
        tri!(out_ptr(out, "out"));
        if count > 0 && augs.is_null() {
            return fail(ApwStatus::NullPointer, "augs is null");
        }
        if min_support == 0 {
            return fail(ApwStatus::InvalidArgument, "min_support must be positive");
        }
        let mut graphs = Vec::with_capacity(count);
        for i in 0..count {
            graphs.push(tri!(handle(*augs.add(i), "graph")).0.clone());
        }
        let mut cfg = MiningConfig { min_support: MinSupport::Absolute(min_support), ..MiningConfig::default() };
        if max_nodes > 0 {
            cfg.max_pattern_nodes = max_nodes;
        }
        match mine_patterns(&graphs, &cfg) {
            Ok(r) => {
                let ranked = rank_patterns(r.patterns).into_iter().map(|r| r.pattern).collect();
                *out = Box::into_raw(Box::new(ApwPatternSet(ranked)));
                ApwStatus::Ok
            }
            Err(e) => fail(ApwStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Parses patterns written in the text format with support trailers.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn apw_patterns_parse(text: *const c_char, out: *mut *mut ApwPatternSet) -> ApwStatus {
    guard(|| {
        let text = tri!(str_arg(text, "text"));
        tri!(out_ptr(out, "out"));
        match parse_patterns(text) {
            Ok(p) => {
                let ranked = rank_patterns(p).into_iter().map(|r| r.pattern).collect();
                *out = Box::into_raw(Box::new(ApwPatternSet(ranked)));
                ApwStatus::Ok
            }
            Err(e) => fail(ApwStatus::ParseError, e.to_string()),
        }
    })
}

/// # Safety
/// `set` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn apw_patterns_len(set: *const ApwPatternSet, out: *mut usize) -> ApwStatus {
    guard(|| {
        let s = tri!(handle(set, "set"));
        tri!(out_ptr(out, "out"));
        *out = s.0.len();
        ApwStatus::Ok
    })
}

/// # Safety
/// `set` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn apw_pattern_support(set: *const ApwPatternSet, index: usize, out: *mut usize) -> ApwStatus {
    guard(|| {
        let s = tri!(handle(set, "set"));
        tri!(out_ptr(out, "out"));
        match s.0.get(index) {
            Some(p) => {
                *out = p.support;
                ApwStatus::Ok
            }
            None => fail(ApwStatus::NotFound, format!("index {index} out of range")),
        }
    })
}

/// Renders all patterns with their support trailers. Release the string
/// with [`apw_string_free`].
///
/// # Safety
/// `set` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn apw_patterns_render(set: *const ApwPatternSet, out: *mut *mut c_char) -> ApwStatus {
    guard(|| {
        let s = tri!(handle(set, "set"));
        tri!(out_ptr(out, "out"));
        let text: Vec<String> = s.0.iter().map(render_pattern).collect();
        *out = CString::new(text.join("\n")).map_or(ptr::null_mut(), CString::into_raw);
        ApwStatus::Ok
    })
}

/// # Safety
/// `set` must come from this library and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn apw_patterns_free(set: *mut ApwPatternSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Classifies a usage against a pattern set; the overlap is that of the
/// pattern behind the verdict (0/1 when none applies).
///
/// # Safety
/// Both handles must be live; the out pointers valid.
#[no_mangle]
pub unsafe extern "C" fn apw_detect(
    usage: *const ApwAug,
    set: *const ApwPatternSet,
    classification: *mut ApwClassification,
    num: *mut usize,
    den: *mut usize,
) -> ApwStatus {
    guard(|| {
        let u = tri!(handle(usage, "usage"));
        let s = tri!(handle(set, "set"));
        tri!(out_ptr(classification, "classification"));
        tri!(out_ptr(num, "num"));
        tri!(out_ptr(den, "den"));
        let v = detect(&u.0, &s.0);
        *classification = match v.classification {
            Classification::Correct => ApwClassification::Correct,
            Classification::Misuse => ApwClassification::Misuse,
        };
        *num = v.overlap.num;
        *den = v.overlap.den;
        ApwStatus::Ok
    })
}
