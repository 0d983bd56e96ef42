//! Per-instruction allocation recommendation.
//!
//! For every static instruction, enumerate the weighted execution paths
//! of one window starting there, score each path's register accesses
//! under both allocation modes (shift counts only), and pick the mode
//! with the lower expected cost. Vertical must win by more than a
//! configurable hysteresis margin, which defaults to the shift cost of
//! one mode switch, so a recommendation never flips the file for less
//! than the flip costs; ties go to horizontal. The result is one bit
//! per instruction address.
//!
//! Path weights come from edge probabilities. Paths that leave static
//! knowledge (indirect targets, returns without callers, the end of the
//! listing) are truncated but keep their weight, so without pruning the
//! weights of an instruction's path set sum to 1. Beam pruning drops
//! low-weight paths and caps the frontier; the dropped mass is tracked
//! and the kept weights are renormalized.

use std::collections::BTreeMap;
use std::error::Error;
use std::fmt;

use rayon::prelude::*;

use crate::cfg::{Cfg, FlowTarget};
use crate::cost::{shift_cost_horizontal, shift_cost_vertical, CostError};
use crate::geometry::{AllocationMode, ValidatedGeometry};

/// Beam limits for path enumeration plus the mode-flip margin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PruneOptions {
    /// Frontier cap; lowest-weight paths beyond it are dropped.
    pub max_paths: usize,
    /// Continuations below this weight are dropped.
    pub min_weight: f64,
    /// Vertical is recommended only when it beats horizontal by more
    /// than this many shifts.
    pub hysteresis_shifts: f64,
}

impl Default for PruneOptions {
    fn default() -> Self {
        PruneOptions { max_paths: 4096, min_weight: 1e-6, hysteresis_shifts: 0.0 }
    }
}

impl PruneOptions {
    /// Default limits with the hysteresis set to the shift cost of one
    /// mode switch under `geom`: all registers are read back in the old
    /// mode and rewritten in the new one, so a flip costs one
    /// horizontal sweep per register plus the vertical walk across the
    /// whole file.
    pub fn for_geometry(geom: &ValidatedGeometry) -> Self {
        let regs = geom.num_registers();
        let sweeps = regs as u64 * shift_cost_horizontal(geom);
        let walk = shift_cost_vertical(geom, 0, regs - 1)
            .expect("register range was validated with the geometry");
        PruneOptions {
            hysteresis_shifts: (sweeps + walk) as f64,
            ..PruneOptions::default()
        }
    }
}

/// One enumerated execution path: listing indices in execution order.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPath {
    pub instrs: Vec<usize>,
    pub weight: f64,
}

/// Paths of one window, plus the probability mass pruning dropped.
/// Weights sum to 1: exactly when nothing was pruned, by
/// renormalization otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub paths: Vec<WeightedPath>,
    pub pruned_weight: f64,
}

/// True when no statically known instruction follows `instr`.
fn is_terminal(cfg: &Cfg, instr: usize) -> bool {
    let block = cfg.block_of_instr(instr);
    if instr + 1 != cfg.blocks()[block].end_instr {
        return false;
    }
    cfg.block_edges(block).iter().all(|e| e.target == FlowTarget::Unknown)
}

/// Enumerates up to `window` instructions of control flow from
/// `start_instr` (inclusive) as a beam search. Deterministic: frontier
/// order follows discovery order, ties in the weight sort keep it.
pub fn enumerate_paths(
    cfg: &Cfg,
    start_instr: usize,
    window: usize,
    opts: &PruneOptions,
) -> PathSet {
    let mut complete: Vec<WeightedPath> = Vec::new();
    let mut pruned_weight = 0.0;
    if window == 0 {
        return PathSet {
            paths: vec![WeightedPath { instrs: vec![], weight: 1.0 }],
            pruned_weight,
        };
    }

    let mut frontier: Vec<WeightedPath> = Vec::new();
    let admit = |path: WeightedPath,
                     frontier: &mut Vec<WeightedPath>,
                     complete: &mut Vec<WeightedPath>,
                     pruned_weight: &mut f64| {
        if path.instrs.len() == window || is_terminal(cfg, *path.instrs.last().unwrap()) {
            complete.push(path);
        } else if path.weight < opts.min_weight {
            *pruned_weight += path.weight;
        } else {
            frontier.push(path);
        }
    };
    admit(
        WeightedPath { instrs: vec![start_instr], weight: 1.0 },
        &mut frontier,
        &mut complete,
        &mut pruned_weight,
    );

    while !frontier.is_empty() {
        let mut next = Vec::new();
        for path in frontier.drain(..) {
            let last = *path.instrs.last().unwrap();
            let block = cfg.block_of_instr(last);
            if last + 1 != cfg.blocks()[block].end_instr {
                let mut instrs = path.instrs;
                instrs.push(last + 1);
                admit(
                    WeightedPath { instrs, weight: path.weight },
                    &mut next,
                    &mut complete,
                    &mut pruned_weight,
                );
                continue;
            }
            for edge in cfg.block_edges(block) {
                let weight = path.weight * edge.probability;
                match edge.target {
                    FlowTarget::Block(b) => {
                        let mut instrs = path.instrs.clone();
                        instrs.push(cfg.blocks()[b].first_instr);
                        admit(
                            WeightedPath { instrs, weight },
                            &mut next,
                            &mut complete,
                            &mut pruned_weight,
                        );
                    }
                    // The path leaves static knowledge here; it ends
                    // and keeps this arm's probability mass.
                    FlowTarget::Unknown => complete.push(WeightedPath {
                        instrs: path.instrs.clone(),
                        weight,
                    }),
                }
            }
        }
        if next.len() > opts.max_paths {
            next.sort_by(|a, b| b.weight.total_cmp(&a.weight));
            for dropped in next.drain(opts.max_paths..) {
                pruned_weight += dropped.weight;
            }
        }
        frontier = next;
    }

    if pruned_weight > 0.0 {
        let total: f64 = complete.iter().map(|p| p.weight).sum();
        if total > 0.0 {
            for path in &mut complete {
                path.weight /= total;
            }
        }
    }
    PathSet { paths: complete, pruned_weight }
}

/// Shift counts of one path under each mode: horizontal charges a full
/// sweep per register access; vertical charges the realignment walk
/// between consecutive accesses, anchored at the path's first accessed
/// register.
pub fn score_path(
    cfg: &Cfg,
    instrs: &[usize],
    geom: &ValidatedGeometry,
) -> Result<(u64, u64), CostError> {
    let sweep = shift_cost_horizontal(geom);
    let mut shifts_h = 0u64;
    let mut shifts_v = 0u64;
    let mut prev: Option<u32> = None;
    for &idx in instrs {
        let entry = cfg.listing().entry(idx);
        for &reg in entry.sources.iter().chain(entry.dests.iter()) {
            shifts_h += sweep;
            shifts_v += shift_cost_vertical(geom, prev.unwrap_or(reg), reg)?;
            prev = Some(reg);
        }
    }
    Ok((shifts_h, shifts_v))
}

/// Expected shift cost of the window starting at `start_instr` under
/// each mode.
pub fn window_scores(
    cfg: &Cfg,
    start_instr: usize,
    window: usize,
    geom: &ValidatedGeometry,
    opts: &PruneOptions,
) -> Result<(f64, f64), CostError> {
    let paths = enumerate_paths(cfg, start_instr, window, opts);
    let mut expected_h = 0.0;
    let mut expected_v = 0.0;
    for path in &paths.paths {
        let (h, v) = score_path(cfg, &path.instrs, geom)?;
        expected_h += path.weight * h as f64;
        expected_v += path.weight * v as f64;
    }
    Ok((expected_h, expected_v))
}

/// The allocation bit for one instruction: vertical only when its
/// expected window cost beats horizontal by more than the hysteresis.
pub fn recommend_bit(
    cfg: &Cfg,
    start_instr: usize,
    window: usize,
    geom: &ValidatedGeometry,
    opts: &PruneOptions,
) -> Result<AllocationMode, CostError> {
    let (expected_h, expected_v) = window_scores(cfg, start_instr, window, geom, opts)?;
    if expected_v + opts.hysteresis_shifts < expected_h {
        Ok(AllocationMode::Vertical)
    } else {
        Ok(AllocationMode::Horizontal)
    }
}

/// Recommendation bits for every instruction of a listing, keyed by
/// address, bound to the geometry they were computed for and the
/// window length the simulator must apply them with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecommendationTable {
    entries: BTreeMap<u64, AllocationMode>,
    window: usize,
    geometry_fingerprint: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TableError {
    Parse { line: usize, message: String },
    GeometryMismatch { expected: u64, actual: u64 },
    WindowMismatch { expected: usize, actual: usize },
}

impl fmt::Display for TableError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TableError::Parse { line, message } => {
                write!(f, "recommendation table line {line}: {message}")
            }
            TableError::GeometryMismatch { expected, actual } => write!(
                f,
                "recommendation table was built for geometry {actual:016x}, not {expected:016x}"
            ),
            TableError::WindowMismatch { expected, actual } => write!(
                f,
                "recommendation table was built for window {actual}, not {expected}"
            ),
        }
    }
}

impl Error for TableError {}

impl RecommendationTable {
    pub fn get(&self, address: u64) -> Option<AllocationMode> {
        self.entries.get(&address).copied()
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn geometry_fingerprint(&self) -> u64 {
        self.geometry_fingerprint
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (u64, AllocationMode)> + '_ {
        self.entries.iter().map(|(&a, &m)| (a, m))
    }

    /// Rejects a table built for another geometry or window.
    pub fn validate_for(
        &self,
        geom: &ValidatedGeometry,
        window: usize,
    ) -> Result<(), TableError> {
        if self.geometry_fingerprint != geom.fingerprint() {
            return Err(TableError::GeometryMismatch {
                expected: geom.fingerprint(),
                actual: self.geometry_fingerprint,
            });
        }
        if self.window != window {
            return Err(TableError::WindowMismatch { expected: window, actual: self.window });
        }
        Ok(())
    }

    /// Text form: a header binding window and geometry, then one
    /// `<address:hex> <bit>` line per instruction in address order.
    pub fn serialize(&self) -> String {
        let mut out = format!(
            "RECBITS window={} geomfp={:016x}\n",
            self.window, self.geometry_fingerprint
        );
        for (addr, mode) in &self.entries {
            out.push_str(&format!("{:x} {}\n", addr, mode.to_bit()));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, TableError> {
        let err = |line: usize, message: String| TableError::Parse { line, message };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| err(1, "empty table".to_string()))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("RECBITS") {
            return Err(err(1, "header must start with RECBITS".to_string()));
        }
        let window = fields
            .next()
            .and_then(|f| f.strip_prefix("window="))
            .and_then(|v| v.parse::<usize>().ok())
            .ok_or_else(|| err(1, "header needs window=<decimal>".to_string()))?;
        let geometry_fingerprint = fields
            .next()
            .and_then(|f| f.strip_prefix("geomfp="))
            .and_then(|v| u64::from_str_radix(v, 16).ok())
            .ok_or_else(|| err(1, "header needs geomfp=<hex>".to_string()))?;
        if let Some(extra) = fields.next() {
            return Err(err(1, format!("unexpected header field {extra:?}")));
        }

        let mut entries = BTreeMap::new();
        for (idx, line) in lines {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let addr_text = fields.next().unwrap();
            let address = u64::from_str_radix(addr_text, 16)
                .map_err(|_| err(line_no, format!("address {addr_text:?} is not hex")))?;
            let bit_text = fields
                .next()
                .ok_or_else(|| err(line_no, "missing allocation bit".to_string()))?;
            let mode = match bit_text {
                "0" => AllocationMode::Horizontal,
                "1" => AllocationMode::Vertical,
                other => {
                    return Err(err(line_no, format!("allocation bit {other:?} is not 0 or 1")))
                }
            };
            if let Some(extra) = fields.next() {
                return Err(err(line_no, format!("unexpected trailing field {extra:?}")));
            }
            if entries.insert(address, mode).is_some() {
                return Err(err(line_no, format!("duplicate address {address:x}")));
            }
        }
        Ok(RecommendationTable { entries, window, geometry_fingerprint })
    }
}

/// Computes the recommendation bit of every listing instruction.
/// Rejects listings that name registers outside the geometry before
/// spending any enumeration work.
pub fn build_table(
    cfg: &Cfg,
    window: usize,
    geom: &ValidatedGeometry,
    opts: &PruneOptions,
) -> Result<RecommendationTable, CostError> {
    if let Some(max) = cfg.listing().max_register() {
        if max >= geom.num_registers() {
            return Err(CostError::RegisterOutOfRange {
                reg: max,
                num_registers: geom.num_registers(),
            });
        }
    }
    let entries = (0..cfg.listing().len())
        .into_par_iter()
        .map(|idx| {
            recommend_bit(cfg, idx, window, geom, opts)
                .map(|mode| (cfg.listing().entry(idx).address, mode))
        })
        .collect::<Result<BTreeMap<_, _>, _>>()?;
    Ok(RecommendationTable {
        entries,
        window,
        geometry_fingerprint: geom.fingerprint(),
    })
}
