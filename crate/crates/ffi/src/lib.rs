//! C ABI over `intersectional-irs`.
//!
//! Objects cross the boundary as opaque handles created by `irs_*_new` or
//! `irs_*_parse` and released by the matching `irs_*_free`. Every fallible
//! call returns an [`IrsStatus`]; on failure the message is kept per thread
//! and read with [`irs_last_error_message`]. Results are written through out
//! pointers, which are left untouched on failure. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use intersectional_irs::cli::{self, Command, Overrides};
use intersectional_irs::entropy::{self, EntropyMode, EntropyOptions, ModeChoice};
use intersectional_irs::freegroup::{convolution, Generator, ReducedWord, StepDistribution};
use intersectional_irs::gluing::{glue, GluedGraph, MarkedPair};
use intersectional_irs::group::DEFAULT_SUPPORT_BUDGET;
use intersectional_irs::irs::{self as irs_core, Norm};
use intersectional_irs::models::{NilpotentQuotient, QuotientCayleyGraph};
use intersectional_irs::schreier;
use intersectional_irs::Error;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IrsStatus {
    Ok = 0,
    /// A null pointer or a string that is not UTF-8.
    NullOrEncoding = 1,
    Parse = 2,
    Invalid = 3,
    Contract = 4,
    Budget = 5,
    Indeterminate = 6,
    Overflow = 7,
    Io = 8,
    Panic = 9,
}

impl From<&Error> for IrsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parse(_) => IrsStatus::Parse,
            Error::Invalid(_) => IrsStatus::Invalid,
            Error::Contract(_) => IrsStatus::Contract,
            Error::Budget { .. } => IrsStatus::Budget,
            Error::Indeterminate(_) => IrsStatus::Indeterminate,
            Error::Overflow(_) => IrsStatus::Overflow,
            Error::Io(_) => IrsStatus::Io,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(IrsStatus);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        set_error(e.to_string());
        Fail(IrsStatus::from(&e))
    }
}

fn null_or_encoding(what: &str) -> Fail {
    set_error(format!("{what} is null or not valid UTF-8"));
    Fail(IrsStatus::NullOrEncoding)
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> IrsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IrsStatus::Ok,
        Ok(Err(Fail(s))) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            IrsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null_or_encoding(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| null_or_encoding(what))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null_or_encoding(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null_or_encoding(what))
}

/// The last error message on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn irs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn irs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// A reduced word in the free group.
pub struct IrsWord {
    word: ReducedWord,
}

/// A finitely supported step measure on the free group.
pub struct IrsMeasure {
    measure: StepDistribution,
}

/// A glued Schreier graph.
pub struct IrsGlued {
    graph: GluedGraph,
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Parses a word such as `"abAB"` (capitals are inverses).
///
/// # Safety
/// `text` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn irs_word_parse(text: *const c_char, out: *mut *mut IrsWord) -> IrsStatus {
    guard(|| {
        let word = ReducedWord::parse(str_arg(text, "text")?)?;
        *out_arg(out, "out")? = boxed(IrsWord { word });
        Ok(())
    })
}

/// # Safety
/// `w` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn irs_word_free(w: *mut IrsWord) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// # Safety
/// `w` must be a valid handle or null.
#[no_mangle]
pub unsafe extern "C" fn irs_word_len(w: *const IrsWord) -> usize {
    w.as_ref().map_or(0, |w| w.word.len())
}

/// # Safety
/// Handles must be valid and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn irs_word_mul(
    a: *const IrsWord,
    b: *const IrsWord,
    out: *mut *mut IrsWord,
) -> IrsStatus {
    guard(|| {
        let word = handle(a, "a")?.word.mul(&handle(b, "b")?.word);
        *out_arg(out, "out")? = boxed(IrsWord { word });
        Ok(())
    })
}

/// # Safety
/// `w` must be valid and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn irs_word_inv(w: *const IrsWord, out: *mut *mut IrsWord) -> IrsStatus {
    guard(|| {
        let word = handle(w, "w")?.word.inv();
        *out_arg(out, "out")? = boxed(IrsWord { word });
        Ok(())
    })
}

/// Writes a newly allocated string; free it with [`irs_string_free`].
///
/// # Safety
/// `w` must be valid and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn irs_word_to_string(w: *const IrsWord, out: *mut *mut c_char) -> IrsStatus {
    guard(|| {
        let s = CString::new(handle(w, "w")?.word.to_string()).expect("words have no nul bytes");
        *out_arg(out, "out")? = s.into_raw();
        Ok(())
    })
}

/// The simple random walk on the free group of rank `rank`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn irs_measure_srw(rank: usize, out: *mut *mut IrsMeasure) -> IrsStatus {
    guard(|| {
        let measure = StepDistribution::simple_random_walk(rank)?;
        *out_arg(out, "out")? = boxed(IrsMeasure { measure });
        Ok(())
    })
}

/// Parses `word weight` lines; weights are normalised.
///
/// # Safety
/// `text` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn irs_measure_parse(
    rank: usize,
    text: *const c_char,
    out: *mut *mut IrsMeasure,
) -> IrsStatus {
    guard(|| {
        let measure = StepDistribution::parse_text(rank, str_arg(text, "text")?)?;
        *out_arg(out, "out")? = boxed(IrsMeasure { measure });
        Ok(())
    })
}

/// # Safety
/// `m` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn irs_measure_free(m: *mut IrsMeasure) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Shannon entropy of the step measure, nats.
///
/// # Safety
/// `m` must be valid and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn irs_measure_entropy(m: *const IrsMeasure, out: *mut f64) -> IrsStatus {
    guard(|| {
        *out_arg(out, "out")? = handle(m, "m")?.measure.entropy();
        Ok(())
    })
}

/// Glues quotient copies at depth `n` along the edge from the identity
/// labelled `mark` (`'a'` or `'b'`, capitals for inverses). `base` is
/// `"heisenberg"` or `"abelian:<r>"`.
///
/// # Safety
/// `base` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn irs_glued_new(
    base: *const c_char,
    mark: c_char,
    n: usize,
    out: *mut *mut IrsGlued,
) -> IrsStatus {
    guard(|| {
        let quotient = NilpotentQuotient::parse(str_arg(base, "base")?)?;
        let mark = Generator::from_char(mark as u8 as char).ok_or_else(|| {
            Fail::from(Error::Parse(format!(
                "bad mark letter {:?}",
                mark as u8 as char
            )))
        })?;
        let marked = MarkedPair::new(QuotientCayleyGraph::new(quotient, 2)?, mark)?;
        *out_arg(out, "out")? = boxed(IrsGlued {
            graph: glue(marked, n)?,
        });
        Ok(())
    })
}

/// # Safety
/// `g` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn irs_glued_free(g: *mut IrsGlued) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Norm of a word over the glued graph; `-1` encodes an infinite norm.
///
/// # Safety
/// Handles must be valid and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn irs_glued_norm(
    g: *const IrsGlued,
    w: *const IrsWord,
    out: *mut i64,
) -> IrsStatus {
    guard(|| {
        let n = irs_core::norm(&handle(g, "g")?.graph, &handle(w, "w")?.word)?;
        *out_arg(out, "out")? = match n {
            Norm::Finite(k) => k as i64,
            Norm::Infinite => -1,
        };
        Ok(())
    })
}

/// # Safety
/// `g` must be valid and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn irs_glued_is_tree_like(
    g: *const IrsGlued,
    n: usize,
    out: *mut bool,
) -> IrsStatus {
    guard(|| {
        *out_arg(out, "out")? = schreier::is_tree_like(&handle(g, "g")?.graph, n)?;
        Ok(())
    })
}

/// `(1 - p)^norm`; a negative `norm` means infinite.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn irs_membership_probability(p: f64, norm: i64, out: *mut f64) -> IrsStatus {
    guard(|| {
        let n = if norm < 0 {
            Norm::Infinite
        } else {
            Norm::Finite(norm as usize)
        };
        *out_arg(out, "out")? = irs_core::membership_probability(p, n)?;
        Ok(())
    })
}

/// Exact `H(mu^t)` for `t = 1..=t_max` into `h[0..t_max]`, on the free group
/// or, when `quotient` is non-null, on that quotient.
///
/// # Safety
/// `m` must be valid, `quotient` null or a nul-terminated string, and `h`
/// must hold `t_max` doubles.
#[no_mangle]
pub unsafe extern "C" fn irs_rw_entropy(
    m: *const IrsMeasure,
    quotient: *const c_char,
    t_max: usize,
    h: *mut f64,
) -> IrsStatus {
    guard(|| {
        let mu = &handle(m, "m")?.measure;
        let q = if quotient.is_null() {
            None
        } else {
            Some(NilpotentQuotient::parse(str_arg(quotient, "quotient")?)?)
        };
        if h.is_null() {
            return Err(null_or_encoding("h"));
        }
        let rows = entropy::rw_entropy(mu, q.as_ref(), t_max, DEFAULT_SUPPORT_BUDGET)?;
        let out = std::slice::from_raw_parts_mut(h, t_max);
        for (o, r) in out.iter_mut().zip(&rows) {
            *o = r.h;
        }
        Ok(())
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn irs_fano_bound(alpha: f64, k: usize, out: *mut f64) -> IrsStatus {
    guard(|| {
        *out_arg(out, "out")? = entropy::fano_bound(alpha, k)?;
        Ok(())
    })
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IrsGlueDepth {
    pub ell: usize,
    pub n: usize,
    pub q: f64,
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn irs_choose_glue_depth(
    k: usize,
    epsilon: f64,
    r: usize,
    beta: f64,
    eta: f64,
    delta: f64,
    out: *mut IrsGlueDepth,
) -> IrsStatus {
    guard(|| {
        let d = entropy::choose_glue_depth(k, epsilon, r, beta, eta, delta)?;
        *out_arg(out, "out")? = IrsGlueDepth {
            ell: d.ell,
            n: d.n,
            q: d.q,
        };
        Ok(())
    })
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IrsFixingReport {
    pub k: usize,
    pub n: usize,
    pub alpha_lower: f64,
    pub alpha_upper: f64,
    pub std_error: f64,
    pub horizon: usize,
    pub walks: usize,
}

/// Fixing estimate on the glued graph at its own depth.
///
/// # Safety
/// Handles must be valid and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn irs_glued_fixing(
    g: *const IrsGlued,
    m: *const IrsMeasure,
    k: usize,
    horizon: usize,
    walks: usize,
    seed: u64,
    out: *mut IrsFixingReport,
) -> IrsStatus {
    guard(|| {
        let g = &handle(g, "g")?.graph;
        let r = entropy::fixing_estimate(
            g,
            &handle(m, "m")?.measure,
            k,
            g.depth(),
            horizon,
            walks,
            seed,
        )?;
        *out_arg(out, "out")? = IrsFixingReport {
            k: r.k,
            n: r.n,
            alpha_lower: r.alpha_lower,
            alpha_upper: r.alpha_upper,
            std_error: r.stderr(),
            horizon: r.horizon,
            walks: r.walks,
        };
        Ok(())
    })
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IrsEntropyEstimate {
    /// `H_t / t`, nats.
    pub value: f64,
    pub std_error: f64,
    pub t: usize,
    pub theta_samples: usize,
    /// 0 exact, 1 Monte Carlo, 2 sampled.
    pub mode: i32,
}

/// Bundle entropy `(1/t) H_t(p)` on the glued graph; `theta_samples = 0`
/// requests exact mode.
///
/// # Safety
/// Handles must be valid and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn irs_glued_bundle_entropy(
    g: *const IrsGlued,
    m: *const IrsMeasure,
    p: f64,
    t: usize,
    theta_samples: usize,
    seed: u64,
    out: *mut IrsEntropyEstimate,
) -> IrsStatus {
    guard(|| {
        let g = &handle(g, "g")?.graph;
        let law = convolution(&handle(m, "m")?.measure, t, DEFAULT_SUPPORT_BUDGET)?;
        let opts = EntropyOptions {
            mode: if theta_samples == 0 {
                ModeChoice::Exact
            } else {
                ModeChoice::Auto
            },
            theta_samples,
            seed,
            ..EntropyOptions::default()
        };
        let e = entropy::bundle_entropy(g, &law, p, t, &opts)?;
        *out_arg(out, "out")? = IrsEntropyEstimate {
            value: e.value,
            std_error: e.stderr,
            t: e.t,
            theta_samples: e.theta_samples,
            mode: match e.mode {
                EntropyMode::Exact => 0,
                EntropyMode::MonteCarlo => 1,
                EntropyMode::Sampled => 2,
            },
        };
        Ok(())
    })
}

/// Runs a CLI command (`"entropy-curve"`, `"fixing"`, ...) from a config
/// file, writing into `out_dir`. `threads = 0` uses all cores.
///
/// # Safety
/// Strings must be nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn irs_run_config(
    command: *const c_char,
    config_path: *const c_char,
    out_dir: *const c_char,
    threads: usize,
) -> IrsStatus {
    guard(|| {
        let name = str_arg(command, "command")?;
        let cmd = Command::from_name(name)
            .ok_or_else(|| Fail::from(Error::Parse(format!("unknown command {name:?}"))))?;
        let overrides = Overrides {
            config: Some(PathBuf::from(str_arg(config_path, "config_path")?)),
            out_dir: Some(PathBuf::from(str_arg(out_dir, "out_dir")?)),
            threads: (threads > 0).then_some(threads),
            ..Overrides::default()
        };
        cli::execute(cmd, &overrides)?;
        Ok(())
    })
}
