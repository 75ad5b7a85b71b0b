//! C interface to `acc-kit`.
//!
//! Programs and packages are opaque handles owned by the caller and released
//! with their `_free` function. Every fallible call returns an [`AccStatus`];
//! the message for the last failure on the calling thread is available from
//! [`acc_last_error`]. Strings returned as `char *` are owned by the caller
//! and released with [`acc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use acc_kit::domain::{GroundDomain, TypeDomain};
use acc_kit::package::{decode_certificate, decode_package, peek_certificate_domain, Package};
use acc_kit::pipeline::{
    certify_package, check_package, domain_kind, load_program, CertifyRequest, CheckRequest, PipelineError,
};
use acc_kit::program::Program;
use acc_kit::{AnalysisError, CertKind, DomainKind};

/// Result codes. Values are stable across releases.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccStatus {
    Ok = 0,
    /// The package was well formed but is not trusted.
    Rejected = 1,
    /// The analysis does not meet the policy.
    PolicyViolation = 2,
    NullArgument = 3,
    InvalidUtf8 = 4,
    Parse = 5,
    BadEntry = 6,
    UnknownId = 7,
    Analysis = 8,
    Format = 9,
    PolicyDomain = 10,
    Panic = 11,
}

/// A parsed and normalized program.
pub struct AccProgram {
    source: String,
    program: Program,
}

/// An encoded package together with its decoded sections.
pub struct AccPackage {
    bytes: Vec<u8>,
    decoded: Package,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: AccStatus, msg: impl Into<String>) -> AccStatus {
    set_error(msg);
    status
}

fn pipeline_status(e: &PipelineError) -> AccStatus {
    match e {
        PipelineError::Parse(_) => AccStatus::Parse,
        PipelineError::Entry { .. } => AccStatus::BadEntry,
        PipelineError::UnknownDomain(_) | PipelineError::Analysis(AnalysisError::UnknownStrategy(_)) => {
            AccStatus::UnknownId
        }
        PipelineError::Analysis(_) => AccStatus::Analysis,
        PipelineError::Format(_) => AccStatus::Format,
        PipelineError::PolicyViolation(_) => AccStatus::PolicyViolation,
        PipelineError::PolicyDomain { .. } => AccStatus::PolicyDomain,
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure(pipeline_status(&e), e.to_string())
    }
}

struct Failure(AccStatus, String);

fn guarded(f: impl FnOnce() -> Result<AccStatus, Failure>) -> AccStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure(status, msg))) => fail(status, msg),
        Err(_) => fail(AccStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(AccStatus::NullArgument, format!("{what} is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(AccStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn bytes_arg<'a>(p: *const u8, len: usize, what: &str) -> Result<&'a [u8], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure(AccStatus::NullArgument, format!("{what} is NULL")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn entries_arg(p: *const *const c_char, n: usize) -> Result<Vec<String>, Failure> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if p.is_null() {
        return Err(Failure(AccStatus::NullArgument, "entries is NULL".into()));
    }
    std::slice::from_raw_parts(p, n)
        .iter()
        .map(|&e| str_arg(e, "entry").map(str::to_string))
        .collect()
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure(AccStatus::NullArgument, format!("{what} is NULL")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn acc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message describing the last failure on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn acc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn acc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a program from NUL-terminated source text.
///
/// # Safety
/// `source` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn acc_program_parse(source: *const c_char, out: *mut *mut AccProgram) -> AccStatus {
    guarded(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let source = str_arg(source, "source")?;
        let program = load_program(source)?;
        *out = Box::into_raw(Box::new(AccProgram {
            source: source.to_string(),
            program,
        }));
        Ok(AccStatus::Ok)
    })
}

/// # Safety
/// `program` must be NULL or a handle from [`acc_program_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn acc_program_free(program: *mut AccProgram) {
    if !program.is_null() {
        drop(Box::from_raw(program));
    }
}

/// Digest of the normalized program, as `sha256:<hex>`. Returns NULL when
/// `program` is NULL.
///
/// # Safety
/// `program` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn acc_program_digest(program: *const AccProgram) -> *mut c_char {
    match program.as_ref() {
        Some(p) => into_c_string(p.program.digest()),
        None => {
            set_error("program is NULL");
            ptr::null_mut()
        }
    }
}

/// Certifies `program` for `n_entries` entry patterns against an encoded
/// policy and stores the resulting package in `out`.
///
/// `domain` and `strategy` are ids such as `types-v1` and `textual-fifo`.
/// A policy violation returns [`AccStatus::PolicyViolation`] and no package.
///
/// # Safety
/// Pointers must be valid for the given lengths; `entries` must hold
/// `n_entries` C strings.
#[no_mangle]
pub unsafe extern "C" fn acc_certify(
    program: *const AccProgram,
    domain: *const c_char,
    entries: *const *const c_char,
    n_entries: usize,
    policy: *const u8,
    policy_len: usize,
    strategy: *const c_char,
    reduced: bool,
    out: *mut *mut AccPackage,
) -> AccStatus {
    guarded(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let program = program
            .as_ref()
            .ok_or_else(|| Failure(AccStatus::NullArgument, "program is NULL".into()))?;
        let domain = domain_kind(str_arg(domain, "domain")?)?;
        let entries = entries_arg(entries, n_entries)?;
        let policy = bytes_arg(policy, policy_len, "policy")?;
        let strategy = str_arg(strategy, "strategy")?;
        let outcome = certify_package(&CertifyRequest {
            source: &program.source,
            domain,
            entries: &entries,
            policy,
            strategy,
            kind: if reduced { CertKind::Reduced } else { CertKind::Full },
            policy_ref: None,
        })?;
        let decoded = decode_package(&outcome.package).map_err(PipelineError::from)?;
        *out = Box::into_raw(Box::new(AccPackage {
            bytes: outcome.package,
            decoded,
        }));
        Ok(AccStatus::Ok)
    })
}

/// Decodes a package from bytes. The bytes are copied.
///
/// # Safety
/// `bytes` must be valid for `len` bytes and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn acc_package_decode(bytes: *const u8, len: usize, out: *mut *mut AccPackage) -> AccStatus {
    guarded(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let bytes = bytes_arg(bytes, len, "bytes")?.to_vec();
        let decoded = decode_package(&bytes).map_err(PipelineError::from)?;
        *out = Box::into_raw(Box::new(AccPackage { bytes, decoded }));
        Ok(AccStatus::Ok)
    })
}

/// Encoded bytes of `package`. The buffer belongs to the package and lives
/// until it is freed. Returns NULL when `package` is NULL.
///
/// # Safety
/// `package` must be NULL or a live handle; `len` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn acc_package_encode(package: *const AccPackage, len: *mut usize) -> *const u8 {
    let (Some(p), Some(len)) = (package.as_ref(), len.as_mut()) else {
        set_error("package or len is NULL");
        return ptr::null();
    };
    *len = p.bytes.len();
    p.bytes.as_ptr()
}

/// Number of answer entries carried by the package's certificate.
///
/// # Safety
/// `package` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn acc_package_entry_count(package: *const AccPackage, out: *mut usize) -> AccStatus {
    guarded(|| {
        let out = out_arg(out, "out")?;
        let p = package
            .as_ref()
            .ok_or_else(|| Failure(AccStatus::NullArgument, "package is NULL".into()))?;
        let cert = &p.decoded.certificate;
        let id = peek_certificate_domain(cert).map_err(PipelineError::from)?;
        *out = match domain_kind(&id)? {
            DomainKind::Types => decode_certificate::<<TypeDomain as acc_kit::Domain>::Value>(cert)
                .map_err(PipelineError::from)?
                .len(),
            DomainKind::Groundness => decode_certificate::<<GroundDomain as acc_kit::Domain>::Value>(cert)
                .map_err(PipelineError::from)?
                .len(),
        };
        Ok(AccStatus::Ok)
    })
}

/// # Safety
/// `package` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn acc_package_free(package: *mut AccPackage) {
    if !package.is_null() {
        drop(Box::from_raw(package));
    }
}

/// Checks `package` against an encoded policy.
///
/// Returns [`AccStatus::Ok`] when trusted and [`AccStatus::Rejected`] when
/// not. `strategy` may be NULL to use the certificate's; `n_entries` may be 0
/// to use the certificate's entry points. When `report` is not NULL it
/// receives the rendered report, to be released with [`acc_string_free`].
///
/// # Safety
/// Pointers must be valid for the given lengths.
#[no_mangle]
pub unsafe extern "C" fn acc_check(
    package: *const AccPackage,
    policy: *const u8,
    policy_len: usize,
    strategy: *const c_char,
    entries: *const *const c_char,
    n_entries: usize,
    report: *mut *mut c_char,
) -> AccStatus {
    guarded(|| {
        if let Some(r) = report.as_mut() {
            *r = ptr::null_mut();
        }
        let p = package
            .as_ref()
            .ok_or_else(|| Failure(AccStatus::NullArgument, "package is NULL".into()))?;
        let policy = bytes_arg(policy, policy_len, "policy")?;
        let strategy = if strategy.is_null() {
            None
        } else {
            Some(str_arg(strategy, "strategy")?)
        };
        let entries = entries_arg(entries, n_entries)?;
        let req = CheckRequest {
            strategy,
            entries: (n_entries > 0).then_some(entries.as_slice()),
        };
        let outcome = check_package(&p.bytes, policy, &req)?;
        if let Some(r) = report.as_mut() {
            *r = into_c_string(outcome.report.clone());
        }
        if outcome.trusted {
            Ok(AccStatus::Ok)
        } else {
            let why = outcome
                .error
                .map_or_else(|| "policy violated".to_string(), |e| e.to_string());
            set_error(why);
            Ok(AccStatus::Rejected)
        }
    })
}
