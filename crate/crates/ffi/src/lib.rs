//! C ABI for `dmwm-core`.
//!
//! Scenarios and simulations cross the boundary as opaque handles created by
//! `*_new`/`*_builtin`/`*_from_json` and released with the matching `*_free`. Every
//! fallible call returns a [`DmwmStatus`]; on failure a message is available from
//! [`dmwm_last_error`] on the calling thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use dmwm_core::harness::{Episode, TrafficPairing};
use dmwm_core::scenario::{ConfigError, RolloutRewardMode, ScenarioConfig};
use dmwm_core::twin::TwinError;
use dmwm_core::types::{ConflictGraph, Deadline, NodeSet, Provenance};
use dmwm_core::{dual_mind, icn, PolicyKind};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DmwmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    UnknownScenario = 4,
    UnknownPolicy = 5,
    SimulationEnded = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DmwmProvenance {
    SlowMind = 0,
    FastMind = 1,
    Baseline = 2,
}

impl From<Provenance> for DmwmProvenance {
    fn from(p: Provenance) -> Self {
        match p {
            Provenance::SlowMind => DmwmProvenance::SlowMind,
            Provenance::FastMind => DmwmProvenance::FastMind,
            Provenance::Baseline => DmwmProvenance::Baseline,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DmwmRolloutMode {
    PaperLiteral = 0,
    ServedTransmissions = 1,
}

/// Result of one executed slot. Node sets are bitmasks (bit `i` = node `i`), so at most 64 nodes.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DmwmStepInfo {
    pub slot: u32,
    pub reward: u32,
    pub provenance: u32,
    pub scheduled_mask: u64,
    pub served_mask: u64,
    pub new_violations: u64,
    pub new_drops: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DmwmMetrics {
    pub throughput: f64,
    pub avg_queue: f64,
    pub avg_delay: f64,
    pub violations: u64,
    pub drops: u64,
    pub arrivals: u64,
    pub delivered: u64,
    pub final_backlog: u64,
}

/// Opaque scenario handle.
pub struct DmwmScenario {
    cfg: ScenarioConfig,
}

/// Opaque simulation handle: one seeded run of one policy.
pub struct DmwmSimulation {
    episode: Episode,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: DmwmStatus, msg: impl Into<String>) -> DmwmStatus {
    set_error(msg);
    status
}

fn config_status(e: &ConfigError) -> DmwmStatus {
    match e {
        ConfigError::UnknownScenario(_) => DmwmStatus::UnknownScenario,
        ConfigError::InvalidConfig { .. } | ConfigError::Json(_) => DmwmStatus::InvalidConfig,
    }
}

fn guard(f: impl FnOnce() -> DmwmStatus) -> DmwmStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(DmwmStatus::Panic, "panic inside dmwm"))
}

unsafe fn c_str<'a>(p: *const c_char) -> Result<&'a str, DmwmStatus> {
    if p.is_null() {
        return Err(fail(DmwmStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(DmwmStatus::InvalidArgument, "string is not valid UTF-8"))
}

/// Slice from a C pointer; a null pointer is accepted only with `len == 0`.
unsafe fn c_slice<'a, T>(p: *const T, len: usize) -> Result<&'a [T], DmwmStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(DmwmStatus::NullPointer, "null array argument"));
    }
    Ok(slice::from_raw_parts(p, len))
}

fn mask(nodes: &NodeSet) -> u64 {
    nodes.iter().filter(|&i| i < 64).fold(0, |m, i| m | (1u64 << i))
}

/// Message of the most recent failure on this thread, or null. Owned by the library.
#[no_mangle]
pub extern "C" fn dmwm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn dmwm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates one of the built-in scenarios: `default`, `bursty`, `deadline`, `interference`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dmwm_scenario_builtin(name: *const c_char, out: *mut *mut DmwmScenario) -> DmwmStatus {
    guard(|| {
        if out.is_null() {
            return fail(DmwmStatus::NullPointer, "null output handle");
        }
        let name = match c_str(name) {
            Ok(s) => s,
            Err(st) => return st,
        };
        match dmwm_core::builtin_scenario(name) {
            Ok(cfg) => {
                *out = Box::into_raw(Box::new(DmwmScenario { cfg }));
                DmwmStatus::Ok
            }
            Err(e) => fail(config_status(&e), e.to_string()),
        }
    })
}

/// Parses and validates a JSON scenario document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dmwm_scenario_from_json(json: *const c_char, out: *mut *mut DmwmScenario) -> DmwmStatus {
    guard(|| {
        if out.is_null() {
            return fail(DmwmStatus::NullPointer, "null output handle");
        }
        let text = match c_str(json) {
            Ok(s) => s,
            Err(st) => return st,
        };
        match ScenarioConfig::from_json(text).and_then(ScenarioConfig::validate) {
            Ok(cfg) => {
                *out = Box::into_raw(Box::new(DmwmScenario { cfg }));
                DmwmStatus::Ok
            }
            Err(e) => fail(config_status(&e), e.to_string()),
        }
    })
}

/// Serializes a scenario to JSON. Free the result with [`dmwm_string_free`].
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dmwm_scenario_to_json(scenario: *const DmwmScenario, out: *mut *mut c_char) -> DmwmStatus {
    guard(|| {
        let Some(s) = scenario.as_ref() else {
            return fail(DmwmStatus::NullPointer, "null scenario");
        };
        if out.is_null() {
            return fail(DmwmStatus::NullPointer, "null output pointer");
        }
        *out = CString::new(s.cfg.to_json_pretty()).unwrap_or_default().into_raw();
        DmwmStatus::Ok
    })
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dmwm_scenario_n_nodes(scenario: *const DmwmScenario) -> usize {
    scenario.as_ref().map_or(0, |s| s.cfg.n_nodes)
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dmwm_scenario_set_seed(scenario: *mut DmwmScenario, seed: u64) -> DmwmStatus {
    match scenario.as_mut() {
        Some(s) => {
            s.cfg.base_seed = seed;
            DmwmStatus::Ok
        }
        None => fail(DmwmStatus::NullPointer, "null scenario"),
    }
}

/// # Safety
/// `scenario` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dmwm_scenario_free(scenario: *mut DmwmScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Starts run `run_index` of `policy` (`dmwm|random|lqf|deadline|rr|qlearn`) on a copy of the scenario.
///
/// # Safety
/// `scenario` must be a live handle, `policy` a NUL-terminated string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dmwm_simulation_new(
    scenario: *const DmwmScenario,
    policy: *const c_char,
    run_index: u32,
    out: *mut *mut DmwmSimulation,
) -> DmwmStatus {
    guard(|| {
        let Some(s) = scenario.as_ref() else {
            return fail(DmwmStatus::NullPointer, "null scenario");
        };
        if out.is_null() {
            return fail(DmwmStatus::NullPointer, "null output handle");
        }
        let name = match c_str(policy) {
            Ok(p) => p,
            Err(st) => return st,
        };
        let kind: PolicyKind = match name.parse() {
            Ok(k) => k,
            Err(msg) => return fail(DmwmStatus::UnknownPolicy, msg),
        };
        let cfg = match s.cfg.clone().validate() {
            Ok(c) => c,
            Err(e) => return fail(config_status(&e), e.to_string()),
        };
        let episode = Episode::new(&cfg, kind, run_index, TrafficPairing::Paired);
        *out = Box::into_raw(Box::new(DmwmSimulation { episode }));
        DmwmStatus::Ok
    })
}

/// Executes one slot. `info` may be null.
///
/// # Safety
/// `sim` must be a live handle; `info` null or writable.
#[no_mangle]
pub unsafe extern "C" fn dmwm_simulation_step(sim: *mut DmwmSimulation, info: *mut DmwmStepInfo) -> DmwmStatus {
    guard(|| {
        let Some(sim) = sim.as_mut() else {
            return fail(DmwmStatus::NullPointer, "null simulation");
        };
        match sim.episode.step() {
            Ok(outcome) => {
                if let Some(info) = info.as_mut() {
                    let rec = sim.episode.trace.last().expect("step records a decision");
                    *info = DmwmStepInfo {
                        slot: outcome.slot,
                        reward: outcome.reward,
                        provenance: DmwmProvenance::from(rec.provenance) as u32,
                        scheduled_mask: mask(&rec.nodes),
                        served_mask: mask(&outcome.served),
                        new_violations: outcome.new_violations,
                        new_drops: outcome.new_drops,
                    };
                }
                DmwmStatus::Ok
            }
            Err(e @ TwinError::SimulationEnded { .. }) => fail(DmwmStatus::SimulationEnded, e.to_string()),
            Err(e) => fail(DmwmStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Steps until the configured horizon is reached.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dmwm_simulation_run(sim: *mut DmwmSimulation) -> DmwmStatus {
    guard(|| {
        let Some(sim) = sim.as_mut() else {
            return fail(DmwmStatus::NullPointer, "null simulation");
        };
        while !sim.episode.is_finished() {
            if let Err(e) = sim.episode.step() {
                return fail(DmwmStatus::InvalidArgument, e.to_string());
            }
        }
        DmwmStatus::Ok
    })
}

/// Current slot index, or 0 for a null handle.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dmwm_simulation_slot(sim: *const DmwmSimulation) -> u32 {
    sim.as_ref().map_or(0, |s| s.episode.twin.t)
}

/// Copies the current queue lengths into `out[0..len]`; `len` must be at least the node count.
///
/// # Safety
/// `sim` must be a live handle; `out` must point to `len` writable `u32`s.
#[no_mangle]
pub unsafe extern "C" fn dmwm_simulation_queue_lengths(
    sim: *const DmwmSimulation,
    out: *mut u32,
    len: usize,
) -> DmwmStatus {
    let Some(sim) = sim.as_ref() else {
        return fail(DmwmStatus::NullPointer, "null simulation");
    };
    let q = sim.episode.twin.queue_lengths();
    if len < q.len() {
        return fail(DmwmStatus::BufferTooSmall, format!("need {} entries, got {len}", q.len()));
    }
    if out.is_null() {
        return fail(DmwmStatus::NullPointer, "null output buffer");
    }
    let dst = slice::from_raw_parts_mut(out, q.len());
    for (d, &v) in dst.iter_mut().zip(&q) {
        *d = v as u32;
    }
    DmwmStatus::Ok
}

/// Metrics over the slots executed so far.
///
/// # Safety
/// `sim` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dmwm_simulation_metrics(sim: *const DmwmSimulation, out: *mut DmwmMetrics) -> DmwmStatus {
    let Some(sim) = sim.as_ref() else {
        return fail(DmwmStatus::NullPointer, "null simulation");
    };
    let Some(out) = out.as_mut() else {
        return fail(DmwmStatus::NullPointer, "null output");
    };
    let m = sim.episode.twin.metrics();
    *out = DmwmMetrics {
        throughput: m.throughput,
        avg_queue: m.avg_queue,
        avg_delay: m.avg_delay,
        violations: m.violations,
        drops: m.drops,
        arrivals: m.arrivals,
        delivered: m.delivered,
        final_backlog: m.final_backlog,
    };
    DmwmStatus::Ok
}

/// # Safety
/// `sim` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dmwm_simulation_free(sim: *mut DmwmSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

unsafe fn read_constraints(
    n: usize,
    deadlines: *const u32,
    conflict_pairs: *const u32,
    n_pairs: usize,
) -> Result<(Vec<Deadline>, ConflictGraph), DmwmStatus> {
    let d = c_slice(deadlines, n)?;
    let raw = c_slice(conflict_pairs, 2 * n_pairs)?;
    let mut graph = ConflictGraph::new();
    for pair in raw.chunks_exact(2) {
        let (i, j) = (pair[0] as usize, pair[1] as usize);
        if i >= n || j >= n || i == j {
            return Err(fail(DmwmStatus::InvalidArgument, format!("bad conflict pair ({i}, {j})")));
        }
        graph.insert(i, j);
    }
    let deadlines = d
        .iter()
        .map(|&v| if v == 0 { Deadline::Unbounded } else { Deadline::Finite(v) })
        .collect();
    Ok((deadlines, graph))
}

/// Constraint feasibility of one schedule.
///
/// `queue_lengths`, `oldest_age` and `deadlines` have `n` entries. An age of `-1` means an
/// empty queue and a deadline of `0` means no deadline. `conflict_pairs` holds `n_pairs`
/// `(i, j)` pairs flattened.
///
/// # Safety
/// All pointers must reference arrays of the stated lengths; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dmwm_icn_check(
    schedule: *const u32,
    schedule_len: usize,
    queue_lengths: *const u32,
    oldest_age: *const i64,
    deadlines: *const u32,
    n: usize,
    conflict_pairs: *const u32,
    n_pairs: usize,
    out: *mut bool,
) -> DmwmStatus {
    guard(|| {
        if out.is_null() {
            return fail(DmwmStatus::NullPointer, "null output");
        }
        let run = || -> Result<bool, DmwmStatus> {
            let s: Vec<usize> = c_slice(schedule, schedule_len)?.iter().map(|&i| i as usize).collect();
            if let Some(&bad) = s.iter().find(|&&i| i >= n) {
                return Err(fail(DmwmStatus::InvalidArgument, format!("node {bad} out of range")));
            }
            let q: Vec<usize> = c_slice(queue_lengths, n)?.iter().map(|&v| v as usize).collect();
            let ages: Vec<Option<u32>> = c_slice(oldest_age, n)?
                .iter()
                .map(|&a| u32::try_from(a).ok())
                .collect();
            let (d, graph) = read_constraints(n, deadlines, conflict_pairs, n_pairs)?;
            Ok(icn::icn_check(&s, &q, &ages, &d, &graph))
        };
        match run() {
            Ok(ok) => {
                *out = ok;
                DmwmStatus::Ok
            }
            Err(st) => st,
        }
    })
}

/// Imagined reward of serving `schedule` for `horizon` slots from `queue_lengths`.
///
/// # Safety
/// `queue_lengths` must hold `n` entries, `schedule` `schedule_len`; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dmwm_rollout_reward(
    queue_lengths: *const u32,
    n: usize,
    schedule: *const u32,
    schedule_len: usize,
    horizon: usize,
    mode: DmwmRolloutMode,
    out: *mut u32,
) -> DmwmStatus {
    guard(|| {
        if out.is_null() {
            return fail(DmwmStatus::NullPointer, "null output");
        }
        let run = || -> Result<u32, DmwmStatus> {
            let q: Vec<usize> = c_slice(queue_lengths, n)?.iter().map(|&v| v as usize).collect();
            let s: NodeSet = c_slice(schedule, schedule_len)?.iter().map(|&i| i as usize).collect();
            if s.iter().any(|i| i >= n) {
                return Err(fail(DmwmStatus::InvalidArgument, "schedule node out of range"));
            }
            let mode = match mode {
                DmwmRolloutMode::PaperLiteral => RolloutRewardMode::PaperLiteral,
                DmwmRolloutMode::ServedTransmissions => RolloutRewardMode::ServedTransmissions,
            };
            Ok(dual_mind::rollout(&q, &s, horizon, mode).reward)
        };
        match run() {
            Ok(r) => {
                *out = r;
                DmwmStatus::Ok
            }
            Err(st) => st,
        }
    })
}
