//! Trace-driven cost simulation and offline allocation tuning for a
//! CPU register file built from racetrack memory.
//!
//! The crate models a register file whose registers can be mapped onto
//! the nanotracks in two ways (horizontal along a track, vertical
//! across tracks), prices every register access in shifts, energy, and
//! latency, and derives per-instruction recommendations for which
//! mapping a program region should run under. The pieces compose into a
//! pipeline: parse or synthesize an access trace, build a control-flow
//! graph from the matching program listing, weight its paths with
//! branch statistics from the trace, and emit a one-bit-per-instruction
//! recommendation table that the simulator can replay against the trace
//! next to static and locally optimal reference schedules.

pub mod cfg;
pub mod cost;
pub mod geometry;
pub mod recommend;
pub mod sim;
pub mod trace;

pub use cfg::{
    parse_listing, serialize_listing, straight_line_listing, BranchProfile, Cfg, CfgError,
    InstrKind, ListingEntry, ProgramListing,
};
pub use cost::{
    access_cost, access_energy, access_latency, shift_cost_horizontal, shift_cost_vertical,
    write_delta, AccessKind, CostError, CostTriple, RegisterValue, WriteDelta,
};
pub use geometry::{
    AllocationMode, CostParams, DerivedLayout, GeometryError, RegisterFileGeometry,
    ValidatedGeometry,
};
pub use recommend::{
    build_table, enumerate_paths, recommend_bit, window_scores, PathSet, PruneOptions,
    RecommendationTable, TableError, WeightedPath,
};
pub use sim::{
    isolated_window_costs, lopt_schedule, run_versions, simulate, ComparisonRun, CostReport,
    LoptObjective, Policy, SimError, WindowCosts,
};
pub use trace::{
    access_sequence, generate_phased, generate_synthetic, parse_trace, serialize_trace,
    AccessProfile, PhasePattern, RegisterAccess, SyntheticSpec, TraceError, TraceInstruction,
};
