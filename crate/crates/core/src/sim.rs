//! Trace-driven simulation of the register file under an allocation
//! policy.
//!
//! The simulator replays every register access of a trace against a
//! stateful model: current allocation mode, last accessed register
//! (which fixes the vertical alignment position), and the contents of
//! every register. Contents matter because write cost depends on the
//! bit delta between the old and new value. The simulator tracks
//! contents itself, starting from all zeroes; destination `before`
//! claims in the trace are not consulted during replay, only the
//! offline window planner uses them.
//!
//! Policies may change the mode at window boundaries (every `window`
//! instructions). A switch drains the file: every register is read
//! under the old mode, then rewritten with the same value under the
//! new one, with the realignment anchor reset to register 0 between
//! the two passes. Switch costs land in the totals; the read/write
//! counters cover trace accesses only.

use std::error::Error;
use std::fmt;

use crate::cost::{access_cost, AccessKind, CostError, CostTriple, RegisterValue};
use crate::geometry::{AllocationMode, CostParams, ValidatedGeometry};
use crate::recommend::{RecommendationTable, TableError};
use crate::trace::{access_sequence, RegisterAccess, TraceInstruction};

/// Allocation policy the simulator applies at window boundaries.
#[derive(Debug, Clone, Copy)]
pub enum Policy<'a> {
    StaticHorizontal,
    StaticVertical,
    /// Mode of the instruction at each window boundary, looked up by
    /// address in a precomputed table.
    Recommended(&'a RecommendationTable),
    /// Explicit mode per window, e.g. from `lopt_schedule`.
    LocalOptimal(&'a [AllocationMode]),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    Cost(CostError),
    Table(TableError),
    /// Window length must be at least 1.
    ZeroWindow,
    /// The recommendation table has no entry for an instruction at a
    /// window boundary.
    MissingRecommendation { address: u64 },
    /// A local-optimal schedule must carry one mode per window.
    ScheduleLength { expected: usize, actual: usize },
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::Cost(e) => e.fmt(f),
            SimError::Table(e) => e.fmt(f),
            SimError::ZeroWindow => write!(f, "window length must be at least 1"),
            SimError::MissingRecommendation { address } => {
                write!(f, "no recommendation for instruction at {address:x}")
            }
            SimError::ScheduleLength { expected, actual } => {
                write!(f, "schedule has {actual} modes for {expected} windows")
            }
        }
    }
}

impl Error for SimError {}

impl From<CostError> for SimError {
    fn from(e: CostError) -> Self {
        SimError::Cost(e)
    }
}

impl From<TableError> for SimError {
    fn from(e: TableError) -> Self {
        SimError::Table(e)
    }
}

/// Accumulated costs of one simulation. Totals include mode-switch
/// overhead; `reads`/`writes` count trace accesses only, so the
/// per-access averages spread the switch overhead over the work the
/// program actually asked for.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostReport {
    pub totals: CostTriple,
    pub reads: u64,
    pub writes: u64,
    pub mode_switches: u64,
}

impl CostReport {
    pub fn accesses(&self) -> u64 {
        self.reads + self.writes
    }

    pub fn avg_shifts_per_access(&self) -> f64 {
        self.per_access(self.totals.shifts as f64)
    }

    pub fn avg_energy_per_access_fj(&self) -> f64 {
        self.per_access(self.totals.energy_fj)
    }

    pub fn avg_latency_per_access_ns(&self) -> f64 {
        self.per_access(self.totals.latency_ns)
    }

    fn per_access(&self, total: f64) -> f64 {
        match self.accesses() {
            0 => 0.0,
            n => total / n as f64,
        }
    }
}

/// Register file state during replay.
struct FileState<'g> {
    geom: &'g ValidatedGeometry,
    params: &'g CostParams,
    mode: AllocationMode,
    last_reg: u32,
    contents: Vec<RegisterValue>,
}

impl<'g> FileState<'g> {
    fn new(geom: &'g ValidatedGeometry, params: &'g CostParams, mode: AllocationMode) -> Self {
        let width = geom.register_bits();
        FileState {
            geom,
            params,
            mode,
            last_reg: 0,
            contents: vec![RegisterValue::zero(width); geom.num_registers() as usize],
        }
    }

    fn step(&mut self, access: &RegisterAccess) -> Result<CostTriple, SimError> {
        let width = self.geom.register_bits();
        let cost = match access.kind {
            AccessKind::Read => access_cost(
                self.geom,
                self.params,
                self.mode,
                AccessKind::Read,
                self.last_reg,
                access.reg,
                None,
                None,
            )?,
            AccessKind::Write => {
                let new = access.value_after.zero_extended(width).ok_or(
                    CostError::WidthMismatch { expected: width, actual: access.value_after.width() },
                )?;
                let old = &self.contents[access.reg as usize];
                let cost = access_cost(
                    self.geom,
                    self.params,
                    self.mode,
                    AccessKind::Write,
                    self.last_reg,
                    access.reg,
                    Some(old),
                    Some(&new),
                )?;
                self.contents[access.reg as usize] = new;
                cost
            }
        };
        self.last_reg = access.reg;
        Ok(cost)
    }

    /// Reads every register under the current mode, then rewrites the
    /// same values under `to`, re-anchored at register 0. No-op when
    /// already in `to`.
    fn switch_mode(&mut self, to: AllocationMode) -> Result<CostTriple, SimError> {
        if to == self.mode {
            return Ok(CostTriple::ZERO);
        }
        let mut total = CostTriple::ZERO;
        for reg in 0..self.geom.num_registers() {
            total += access_cost(
                self.geom,
                self.params,
                self.mode,
                AccessKind::Read,
                self.last_reg,
                reg,
                None,
                None,
            )?;
            self.last_reg = reg;
        }
        self.mode = to;
        self.last_reg = 0;
        for reg in 0..self.geom.num_registers() {
            let value = self.contents[reg as usize].clone();
            total += access_cost(
                self.geom,
                self.params,
                self.mode,
                AccessKind::Write,
                self.last_reg,
                reg,
                Some(&self.contents[reg as usize]),
                Some(&value),
            )?;
            self.last_reg = reg;
        }
        Ok(total)
    }
}

fn policy_mode_at(
    policy: &Policy<'_>,
    instr: &TraceInstruction,
    window_index: usize,
) -> Result<AllocationMode, SimError> {
    match policy {
        Policy::StaticHorizontal => Ok(AllocationMode::Horizontal),
        Policy::StaticVertical => Ok(AllocationMode::Vertical),
        Policy::Recommended(table) => table
            .get(instr.address)
            .ok_or(SimError::MissingRecommendation { address: instr.address }),
        Policy::LocalOptimal(schedule) => Ok(schedule[window_index]),
    }
}

/// Replays `trace` under `policy`, switching modes at window
/// boundaries when the policy asks for it. The initial mode is the
/// policy's choice for the first instruction and costs nothing.
pub fn simulate(
    geom: &ValidatedGeometry,
    params: &CostParams,
    trace: &[TraceInstruction],
    policy: Policy<'_>,
    window: usize,
) -> Result<CostReport, SimError> {
    if window == 0 {
        return Err(SimError::ZeroWindow);
    }
    if let Policy::Recommended(table) = policy {
        table.validate_for(geom, window)?;
    }
    if let Policy::LocalOptimal(schedule) = policy {
        let expected = trace.len().div_ceil(window);
        if schedule.len() != expected {
            return Err(SimError::ScheduleLength { expected, actual: schedule.len() });
        }
    }

    let mut report = CostReport::default();
    let Some(first) = trace.first() else {
        return Ok(report);
    };
    let initial = policy_mode_at(&policy, first, 0)?;
    let mut file = FileState::new(geom, params, initial);

    for (i, instr) in trace.iter().enumerate() {
        if i > 0 && i % window == 0 {
            let desired = policy_mode_at(&policy, instr, i / window)?;
            if desired != file.mode {
                report.totals += file.switch_mode(desired)?;
                report.mode_switches += 1;
            }
        }
        for access in access_sequence(instr) {
            report.totals += file.step(&access)?;
            match access.kind {
                AccessKind::Read => report.reads += 1,
                AccessKind::Write => report.writes += 1,
            }
        }
    }
    Ok(report)
}

/// Which total a locally optimal schedule minimizes per window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoptObjective {
    Shifts,
    EnergyFj,
    LatencyNs,
}

impl LoptObjective {
    pub fn pick(self, triple: &CostTriple) -> f64 {
        match self {
            LoptObjective::Shifts => triple.shifts as f64,
            LoptObjective::EnergyFj => triple.energy_fj,
            LoptObjective::LatencyNs => triple.latency_ns,
        }
    }
}

/// Cost of one window replayed in isolation under each mode: the
/// vertical walk anchors at the window's first accessed register, and
/// write deltas come from the trace's own before/after values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowCosts {
    pub horizontal: CostTriple,
    pub vertical: CostTriple,
}

/// Isolated per-window costs of a trace, one entry per window.
pub fn isolated_window_costs(
    geom: &ValidatedGeometry,
    params: &CostParams,
    trace: &[TraceInstruction],
    window: usize,
) -> Result<Vec<WindowCosts>, SimError> {
    if window == 0 {
        return Err(SimError::ZeroWindow);
    }
    let width = geom.register_bits();
    let mut out = Vec::with_capacity(trace.len().div_ceil(window));
    for chunk in trace.chunks(window) {
        let mut horizontal = CostTriple::ZERO;
        let mut vertical = CostTriple::ZERO;
        let mut prev: Option<u32> = None;
        for instr in chunk {
            for access in access_sequence(instr) {
                let (old, new) = match access.kind {
                    AccessKind::Read => (None, None),
                    AccessKind::Write => {
                        let widen = |v: &RegisterValue| {
                            v.zero_extended(width).ok_or(CostError::WidthMismatch {
                                expected: width,
                                actual: v.width(),
                            })
                        };
                        (Some(widen(&access.value_before)?), Some(widen(&access.value_after)?))
                    }
                };
                let anchor = prev.unwrap_or(access.reg);
                for (mode, total) in [
                    (AllocationMode::Horizontal, &mut horizontal),
                    (AllocationMode::Vertical, &mut vertical),
                ] {
                    *total += access_cost(
                        geom,
                        params,
                        mode,
                        access.kind,
                        anchor,
                        access.reg,
                        old.as_ref(),
                        new.as_ref(),
                    )?;
                }
                prev = Some(access.reg);
            }
        }
        out.push(WindowCosts { horizontal, vertical });
    }
    Ok(out)
}

/// Picks the cheaper mode per window under `objective`; exact ties
/// keep the previous window's mode, and the window before the first
/// counts as horizontal.
pub fn lopt_schedule(costs: &[WindowCosts], objective: LoptObjective) -> Vec<AllocationMode> {
    let mut prev = AllocationMode::Horizontal;
    costs
        .iter()
        .map(|w| {
            let h = objective.pick(&w.horizontal);
            let v = objective.pick(&w.vertical);
            let mode = if v < h {
                AllocationMode::Vertical
            } else if h < v {
                AllocationMode::Horizontal
            } else {
                prev
            };
            prev = mode;
            mode
        })
        .collect()
}

/// Reports of the same trace under all four policies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRun {
    pub recommended: CostReport,
    pub local_optimal: CostReport,
    pub static_horizontal: CostReport,
    pub static_vertical: CostReport,
}

impl ComparisonRun {
    /// Componentwise minimum of the two static policies.
    pub fn static_best(&self) -> CostTriple {
        let h = self.static_horizontal.totals;
        let v = self.static_vertical.totals;
        CostTriple {
            shifts: h.shifts.min(v.shifts),
            energy_fj: h.energy_fj.min(v.energy_fj),
            latency_ns: h.latency_ns.min(v.latency_ns),
        }
    }

    /// Componentwise maximum of the two static policies.
    pub fn static_worst(&self) -> CostTriple {
        let h = self.static_horizontal.totals;
        let v = self.static_vertical.totals;
        CostTriple {
            shifts: h.shifts.max(v.shifts),
            energy_fj: h.energy_fj.max(v.energy_fj),
            latency_ns: h.latency_ns.max(v.latency_ns),
        }
    }
}

/// Runs the recommended policy, the locally optimal schedule (under
/// `objective`), and both statics over one trace.
pub fn run_versions(
    geom: &ValidatedGeometry,
    params: &CostParams,
    trace: &[TraceInstruction],
    table: &RecommendationTable,
    window: usize,
    objective: LoptObjective,
) -> Result<ComparisonRun, SimError> {
    let costs = isolated_window_costs(geom, params, trace, window)?;
    let schedule = lopt_schedule(&costs, objective);
    Ok(ComparisonRun {
        recommended: simulate(geom, params, trace, Policy::Recommended(table), window)?,
        local_optimal: simulate(geom, params, trace, Policy::LocalOptimal(&schedule), window)?,
        static_horizontal: simulate(geom, params, trace, Policy::StaticHorizontal, window)?,
        static_vertical: simulate(geom, params, trace, Policy::StaticVertical, window)?,
    })
}
