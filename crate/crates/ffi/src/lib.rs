//! C interface to the qrepath solver.
//!
//! Games and traces are opaque handles owned by the caller and released with the matching
//! `_free` function. Every fallible call returns a [`QrepathStatus`]; on failure the message
//! is available from [`qrepath_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qrepath::game::parse_game;
use qrepath::homotopy::{
    export_path, random_anchor, trace, PathFormat, TraceResult, TraceStatus, TracerConfig,
    TransformParams,
};
use qrepath::sequence::{compile, SequenceSpace};
use qrepath::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QrepathStatus {
    Ok = 0,
    /// Null pointer, bad index, short buffer or invalid configuration.
    InvalidArgument = 1,
    /// The game text could not be parsed or does not describe a valid game.
    Parse = 2,
    /// The game does not have perfect recall.
    Recall = 3,
    /// The path was traced but did not end at a certified equilibrium.
    NoConvergence = 4,
    Io = 5,
    Internal = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QrepathConfig {
    pub seed: u64,
    pub kappa0: f64,
    pub alpha_scale: f64,
    pub t_end: f64,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub corrector_tol: f64,
    pub eps_nash: f64,
    pub max_restarts: u32,
}

pub struct QrepathGame {
    space: SequenceSpace,
}

pub struct QrepathTrace {
    result: TraceResult,
    config: TracerConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: QrepathStatus, msg: impl Into<String>) -> QrepathStatus {
    set_error(msg);
    status
}

fn status_of(err: &Error) -> QrepathStatus {
    match err {
        Error::Syntax { .. } | Error::InvalidGame { .. } | Error::Json(_) => QrepathStatus::Parse,
        Error::ImperfectRecall(_) => QrepathStatus::Recall,
        Error::NoConvergence { .. } => QrepathStatus::NoConvergence,
        Error::Io(_) => QrepathStatus::Io,
        Error::Config(_) | Error::DimensionMismatch(_) => QrepathStatus::InvalidArgument,
        _ => QrepathStatus::Internal,
    }
}

fn guard(f: impl FnOnce() -> QrepathStatus) -> QrepathStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(QrepathStatus::Internal, "panic inside qrepath"),
    }
}

fn report(err: Error) -> QrepathStatus {
    let mut msg = err.to_string();
    if let Error::ImperfectRecall(violations) = &err {
        for v in violations {
            msg.push_str(&format!("\n{v}"));
        }
    }
    fail(status_of(&err), msg)
}

/// Message of the last failed call on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn qrepath_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn qrepath_config_default() -> QrepathConfig {
    let t = TracerConfig::default();
    QrepathConfig {
        seed: 0,
        kappa0: TransformParams::DEFAULT_KAPPA0,
        alpha_scale: TransformParams::DEFAULT_ALPHA_SCALE,
        t_end: t.t_end,
        initial_step: t.initial_step,
        min_step: t.min_step,
        max_step: t.max_step,
        corrector_tol: t.corrector_tol,
        eps_nash: t.eps_nash,
        max_restarts: t.max_restarts as u32,
    }
}

/// Parse a game from NUL-terminated JSON text and store a new handle in `*out`.
///
/// # Safety
/// `json` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qrepath_game_parse(json: *const c_char, out: *mut *mut QrepathGame) -> QrepathStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return fail(QrepathStatus::InvalidArgument, "null argument");
        }
        let text = match CStr::from_ptr(json).to_str() {
            Ok(t) => t,
            Err(_) => return fail(QrepathStatus::Parse, "game text is not UTF-8"),
        };
        let loaded = parse_game(text).and_then(|game| {
            let space = compile(&game)?;
            Ok(QrepathGame { space })
        });
        match loaded {
            Ok(g) => {
                *out = Box::into_raw(Box::new(g));
                QrepathStatus::Ok
            }
            Err(e) => report(e),
        }
    })
}

/// # Safety
/// `game` must be null or a handle from [`qrepath_game_parse`] that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn qrepath_game_free(game: *mut QrepathGame) {
    if !game.is_null() {
        drop(Box::from_raw(game));
    }
}

/// # Safety
/// `game` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qrepath_game_num_players(game: *const QrepathGame) -> usize {
    game.as_ref().map_or(0, |g| g.space.num_players())
}

/// Number of sequences of `player`, the empty sequence included; 0 for a bad index.
///
/// # Safety
/// `game` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qrepath_game_num_sequences(game: *const QrepathGame, player: usize) -> usize {
    match game.as_ref() {
        Some(g) if player < g.space.num_players() => g.space.player(player).len(),
        _ => 0,
    }
}

/// Trace one path from the random starting plan drawn from `config.seed`. A trace that ends
/// uncertified is still stored in `*out` and the call returns `NoConvergence`.
///
/// # Safety
/// `game` must be a live handle; `config` null (defaults) or valid; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn qrepath_solve(
    game: *const QrepathGame,
    config: *const QrepathConfig,
    out: *mut *mut QrepathTrace,
) -> QrepathStatus {
    guard(|| {
        let (Some(g), false) = (game.as_ref(), out.is_null()) else {
            return fail(QrepathStatus::InvalidArgument, "null argument");
        };
        let c = config.as_ref().copied().unwrap_or_else(|| qrepath_config_default());
        let cfg = TracerConfig {
            t_end: c.t_end,
            initial_step: c.initial_step,
            min_step: c.min_step,
            max_step: c.max_step,
            corrector_tol: c.corrector_tol,
            eps_nash: c.eps_nash,
            max_restarts: c.max_restarts as usize,
            ..TracerConfig::default()
        };
        let space = &g.space;
        let params = TransformParams::seeded(space.n0(), c.alpha_scale, c.seed).with_kappa0(c.kappa0);
        let traced = cfg
            .validate()
            .and_then(|_| params.validate(space.n0()))
            .and_then(|_| trace(space, &random_anchor(space, c.seed), &params, &cfg));
        match traced {
            Ok(result) => {
                let ok = result.status == TraceStatus::Converged;
                let gap = result.nash_gap;
                *out = Box::into_raw(Box::new(QrepathTrace { result, config: cfg }));
                if ok {
                    QrepathStatus::Ok
                } else {
                    fail(QrepathStatus::NoConvergence, format!("trace ended uncertified, Nash gap {gap:e}"))
                }
            }
            Err(e) => report(e),
        }
    })
}

/// # Safety
/// `trace` must be null or a handle from [`qrepath_solve`] that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn qrepath_trace_free(trace: *mut QrepathTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// # Safety
/// `trace` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qrepath_trace_converged(trace: *const QrepathTrace) -> bool {
    trace.as_ref().is_some_and(|t| t.result.status == TraceStatus::Converged)
}

/// Largest best-response gain at the endpoint; NaN for a null handle.
///
/// # Safety
/// `trace` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qrepath_trace_nash_gap(trace: *const QrepathTrace) -> f64 {
    trace.as_ref().map_or(f64::NAN, |t| t.result.nash_gap)
}

/// # Safety
/// `trace` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qrepath_trace_num_points(trace: *const QrepathTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.result.path.len())
}

unsafe fn copy_out(src: &[f64], out: *mut f64, len: usize) -> QrepathStatus {
    if out.is_null() || len < src.len() {
        return fail(
            QrepathStatus::InvalidArgument,
            format!("buffer of {len} entries, {} needed", src.len()),
        );
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    QrepathStatus::Ok
}

/// Expected payoffs at the endpoint, one per player.
///
/// # Safety
/// `trace` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qrepath_trace_payoffs(trace: *const QrepathTrace, out: *mut f64, len: usize) -> QrepathStatus {
    guard(|| match trace.as_ref() {
        Some(t) => copy_out(&t.result.payoffs, out, len),
        None => fail(QrepathStatus::InvalidArgument, "null trace"),
    })
}

/// Endpoint realization plan of `player`, indexed by sequence.
///
/// # Safety
/// `trace` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qrepath_trace_realization(
    trace: *const QrepathTrace,
    player: usize,
    out: *mut f64,
    len: usize,
) -> QrepathStatus {
    guard(|| match trace.as_ref() {
        Some(t) => match t.result.final_gamma.plans.get(player) {
            Some(plan) => copy_out(plan, out, len),
            None => fail(QrepathStatus::InvalidArgument, format!("no player {player}")),
        },
        None => fail(QrepathStatus::InvalidArgument, "null trace"),
    })
}

/// Write the traced path to `path` as CSV (`json` false) or JSON.
///
/// # Safety
/// `game` must be the handle the trace was solved on; `path` a valid C string.
#[no_mangle]
pub unsafe extern "C" fn qrepath_trace_export(
    game: *const QrepathGame,
    trace: *const QrepathTrace,
    path: *const c_char,
    json: bool,
) -> QrepathStatus {
    guard(|| {
        let (Some(g), Some(t), false) = (game.as_ref(), trace.as_ref(), path.is_null()) else {
            return fail(QrepathStatus::InvalidArgument, "null argument");
        };
        let Ok(path) = CStr::from_ptr(path).to_str() else {
            return fail(QrepathStatus::InvalidArgument, "path is not UTF-8");
        };
        let format = if json { PathFormat::Json } else { PathFormat::Csv };
        let written = File::create(path).map_err(Error::from).and_then(|f| {
            let mut w = BufWriter::new(f);
            export_path(&g.space, &t.result, &t.config, format, &mut w)?;
            w.flush()?;
            Ok(())
        });
        match written {
            Ok(()) => QrepathStatus::Ok,
            Err(e) => report(e),
        }
    })
}
