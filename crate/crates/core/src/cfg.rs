//! Control-flow graph construction from a program listing, with branch
//! probabilities profiled from an execution trace.
//!
//! A listing line gives one static instruction: address, mnemonic, the
//! register sets it reads/writes, its control-flow kind, and an optional
//! direct target:
//!
//! ```text
//! 1a2b mul ; S=3,4 D=3 K=seq
//! 1a2f beq ; S=5 D=- K=cbr T=1a40
//! ```
//!
//! Kinds: `seq` (straight-line), `br` (unconditional branch), `cbr`
//! (conditional branch), `call`, `ret`. A `br` or `call` without `T=`
//! is indirect; its unknown successor ends path enumeration. A `cbr`
//! must carry a target. Calls edge into the callee entry and returns
//! edge back to the continuation of every call site that can reach the
//! return, found by a context-insensitive fixed point, so one return
//! may fan out to several continuations.

use std::collections::{BTreeMap, BTreeSet};
use std::error::Error;
use std::fmt;

use crate::trace::TraceInstruction;

/// Control-flow class of one listing instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InstrKind {
    Sequential,
    Branch,
    CondBranch,
    Call,
    Return,
}

impl InstrKind {
    fn text(self) -> &'static str {
        match self {
            InstrKind::Sequential => "seq",
            InstrKind::Branch => "br",
            InstrKind::CondBranch => "cbr",
            InstrKind::Call => "call",
            InstrKind::Return => "ret",
        }
    }

    fn from_text(text: &str) -> Option<Self> {
        match text {
            "seq" => Some(InstrKind::Sequential),
            "br" => Some(InstrKind::Branch),
            "cbr" => Some(InstrKind::CondBranch),
            "call" => Some(InstrKind::Call),
            "ret" => Some(InstrKind::Return),
            _ => None,
        }
    }
}

/// One static instruction of the program under analysis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ListingEntry {
    pub address: u64,
    pub mnemonic: String,
    /// Registers read, in operand order.
    pub sources: Vec<u32>,
    /// Registers written, in operand order.
    pub dests: Vec<u32>,
    pub kind: InstrKind,
    /// Direct control-flow target; `None` on `seq`/`ret` and on
    /// indirect branches or calls.
    pub target: Option<u64>,
}

/// Static program listing with strictly increasing addresses and all
/// direct targets resolved within the listing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramListing {
    entries: Vec<ListingEntry>,
    index: BTreeMap<u64, usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CfgError {
    Parse { line: usize, column: usize, message: String },
    /// Listing addresses must strictly increase.
    NonIncreasingAddress { address: u64 },
    /// A direct target does not name a listing address.
    UnresolvedTarget { address: u64, target: u64 },
    /// `seq` and `ret` instructions cannot carry a target.
    UnexpectedTarget { address: u64 },
    /// Conditional branches must be direct; only `br` and `call` may
    /// omit their target.
    MissingTarget { address: u64 },
    /// A trace instruction's address is not in the listing.
    AddressNotInListing { address: u64 },
    /// A conditional branch was followed by neither its target nor its
    /// fallthrough in the trace.
    InconsistentBranchFlow { address: u64, next: u64 },
}

impl fmt::Display for CfgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CfgError::Parse { line, column, message } => {
                write!(f, "listing line {line}, column {column}: {message}")
            }
            CfgError::NonIncreasingAddress { address } => {
                write!(f, "listing address {address:x} does not increase")
            }
            CfgError::UnresolvedTarget { address, target } => {
                write!(f, "unresolved target {target:x} at {address:x}")
            }
            CfgError::UnexpectedTarget { address } => {
                write!(f, "instruction at {address:x} cannot carry a target")
            }
            CfgError::MissingTarget { address } => {
                write!(f, "conditional branch at {address:x} needs a target")
            }
            CfgError::AddressNotInListing { address } => {
                write!(f, "trace address {address:x} is not in the listing")
            }
            CfgError::InconsistentBranchFlow { address, next } => write!(
                f,
                "conditional branch at {address:x} followed by {next:x}, which is neither its target nor its fallthrough"
            ),
        }
    }
}

impl Error for CfgError {}

impl ProgramListing {
    /// Validates entry order, target resolution, and kind/target
    /// consistency.
    pub fn from_entries(entries: Vec<ListingEntry>) -> Result<Self, CfgError> {
        let mut index = BTreeMap::new();
        let mut last = None;
        for (idx, entry) in entries.iter().enumerate() {
            if let Some(prev) = last {
                if entry.address <= prev {
                    return Err(CfgError::NonIncreasingAddress { address: entry.address });
                }
            }
            last = Some(entry.address);
            index.insert(entry.address, idx);
            if entry.target.is_some()
                && matches!(entry.kind, InstrKind::Sequential | InstrKind::Return)
            {
                return Err(CfgError::UnexpectedTarget { address: entry.address });
            }
            if entry.target.is_none() && entry.kind == InstrKind::CondBranch {
                return Err(CfgError::MissingTarget { address: entry.address });
            }
        }
        for entry in &entries {
            if let Some(target) = entry.target {
                if !index.contains_key(&target) {
                    return Err(CfgError::UnresolvedTarget {
                        address: entry.address,
                        target,
                    });
                }
            }
        }
        Ok(ProgramListing { entries, index })
    }

    pub fn entries(&self) -> &[ListingEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, idx: usize) -> &ListingEntry {
        &self.entries[idx]
    }

    pub fn index_of_address(&self, address: u64) -> Option<usize> {
        self.index.get(&address).copied()
    }

    /// Largest register index named anywhere in the listing.
    pub fn max_register(&self) -> Option<u32> {
        self.entries
            .iter()
            .flat_map(|e| e.sources.iter().chain(e.dests.iter()))
            .copied()
            .max()
    }
}

fn parse_reg_list(
    line_no: usize,
    column: usize,
    text: &str,
) -> Result<Vec<u32>, CfgError> {
    if text == "-" {
        return Ok(vec![]);
    }
    let mut regs = Vec::new();
    let mut offset = 0;
    for item in text.split(',') {
        let col = column + offset;
        offset += item.len() + 1;
        let reg: u32 = item.parse().map_err(|_| CfgError::Parse {
            line: line_no,
            column: col,
            message: format!("register index {item:?} is not decimal"),
        })?;
        regs.push(reg);
    }
    Ok(regs)
}

/// Parses listing text; `#` starts a comment, blank lines are skipped.
/// Errors carry the line and column of the offending field.
pub fn parse_listing(text: &str) -> Result<ProgramListing, CfgError> {
    let mut entries = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.split_once('#') {
            Some((before, _)) => before,
            None => raw_line,
        };
        if line.trim().is_empty() {
            continue;
        }

        let mut tokens = Vec::new();
        let mut pos = 0;
        while pos < line.len() {
            let rest = &line[pos..];
            let skipped = rest.len() - rest.trim_start().len();
            let start = pos + skipped;
            if start >= line.len() {
                break;
            }
            let token = line[start..].split_whitespace().next().unwrap();
            tokens.push((start + 1, token));
            pos = start + token.len();
        }
        let err = |column: usize, message: String| CfgError::Parse {
            line: line_no,
            column,
            message,
        };
        let token = |slot: usize, what: &str| {
            tokens.get(slot).copied().ok_or_else(|| {
                err(line.len() + 1, format!("expected {what}"))
            })
        };

        let (col, addr_text) = token(0, "hex address")?;
        let address = u64::from_str_radix(addr_text, 16)
            .map_err(|_| err(col, format!("address {addr_text:?} is not hex")))?;
        let (_, mnemonic) = token(1, "mnemonic")?;
        let (col, sep) = token(2, "separator ';'")?;
        if sep != ";" {
            return Err(err(col, format!("expected ';', got {sep:?}")));
        }
        let (col, src) = token(3, "S=<regs>")?;
        let sources = match src.strip_prefix("S=") {
            Some(rest) => parse_reg_list(line_no, col + 2, rest)?,
            None => return Err(err(col, format!("expected S=<regs>, got {src:?}"))),
        };
        let (col, dst) = token(4, "D=<regs>")?;
        let dests = match dst.strip_prefix("D=") {
            Some(rest) => parse_reg_list(line_no, col + 2, rest)?,
            None => return Err(err(col, format!("expected D=<regs>, got {dst:?}"))),
        };
        let (col, kind_text) = token(5, "K=<kind>")?;
        let kind = match kind_text.strip_prefix("K=") {
            Some(rest) => InstrKind::from_text(rest).ok_or_else(|| {
                err(col + 2, format!("unknown instruction kind {rest:?}"))
            })?,
            None => return Err(err(col, format!("expected K=<kind>, got {kind_text:?}"))),
        };
        let target = match tokens.get(6).copied() {
            None => None,
            Some((col, t)) => match t.strip_prefix("T=") {
                Some(rest) => Some(u64::from_str_radix(rest, 16).map_err(|_| {
                    err(col + 2, format!("target {rest:?} is not hex"))
                })?),
                None => return Err(err(col, format!("expected T=<addr>, got {t:?}"))),
            },
        };
        if let Some((col, extra)) = tokens.get(7).copied() {
            return Err(err(col, format!("unexpected trailing token {extra:?}")));
        }

        entries.push(ListingEntry {
            address,
            mnemonic: mnemonic.to_string(),
            sources,
            dests,
            kind,
            target,
        });
    }
    ProgramListing::from_entries(entries)
}

/// Canonical text form; `parse_listing` of the output reproduces the
/// listing exactly.
pub fn serialize_listing(listing: &ProgramListing) -> String {
    let mut out = String::new();
    for entry in listing.entries() {
        let fmt_regs = |regs: &[u32]| {
            if regs.is_empty() {
                "-".to_string()
            } else {
                regs.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",")
            }
        };
        out.push_str(&format!(
            "{:x} {} ; S={} D={} K={}",
            entry.address,
            entry.mnemonic,
            fmt_regs(&entry.sources),
            fmt_regs(&entry.dests),
            entry.kind.text(),
        ));
        if let Some(target) = entry.target {
            out.push_str(&format!(" T={target:x}"));
        }
        out.push('\n');
    }
    out
}

/// Derives the straight-line listing of a trace whose addresses
/// strictly increase (as synthetic workloads do): every instruction
/// becomes a `seq` entry carrying its register sets.
pub fn straight_line_listing(trace: &[TraceInstruction]) -> Result<ProgramListing, CfgError> {
    let entries = trace
        .iter()
        .map(|instr| ListingEntry {
            address: instr.address,
            mnemonic: instr.mnemonic.clone(),
            sources: instr.sources.iter().map(|s| s.reg).collect(),
            dests: instr.destinations.iter().map(|d| d.reg).collect(),
            kind: InstrKind::Sequential,
            target: None,
        })
        .collect();
    ProgramListing::from_entries(entries)
}

/// Maximal straight-line run of instructions; `instrs` is a half-open
/// index range into the listing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasicBlock {
    pub first_instr: usize,
    pub end_instr: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    /// Block ends where the next one starts.
    Fallthrough,
    /// Unconditional branch.
    Jump,
    /// Conditional branch taken.
    Taken,
    /// Conditional branch not taken.
    NotTaken,
    /// Into a callee entry.
    Call,
    /// Back to a call-site continuation.
    Return,
}

/// Where an edge leads: a block, or outside static knowledge (indirect
/// target, return with no known caller). Unknown targets end path
/// enumeration but keep their probability mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowTarget {
    Block(usize),
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfgEdge {
    pub kind: EdgeKind,
    pub target: FlowTarget,
    pub probability: f64,
}

/// Taken/not-taken execution counts for the conditional branches of a
/// listing, keyed by branch address.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BranchProfile {
    pub counts: BTreeMap<u64, BranchCounts>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BranchCounts {
    pub taken: u64,
    pub not_taken: u64,
}

/// Control-flow graph over a listing. Blocks are ordered by address;
/// outgoing probabilities of every block sum to 1 (structural uniform
/// priors until annotated with a trace profile).
#[derive(Debug, Clone, PartialEq)]
pub struct Cfg {
    listing: ProgramListing,
    blocks: Vec<BasicBlock>,
    edges: Vec<Vec<CfgEdge>>,
    block_of_instr: Vec<usize>,
}

impl Cfg {
    /// Builds blocks and edges. Leaders are the entry, every direct
    /// target, and every instruction following a branch, call, or
    /// return; unreachable code simply forms blocks nothing points to.
    pub fn build(listing: ProgramListing) -> Cfg {
        let n = listing.len();
        let mut leader = vec![false; n];
        if n > 0 {
            leader[0] = true;
        }
        for (idx, entry) in listing.entries().iter().enumerate() {
            match entry.kind {
                InstrKind::Sequential => {}
                _ => {
                    if idx + 1 < n {
                        leader[idx + 1] = true;
                    }
                }
            }
            if let Some(target) = entry.target {
                leader[listing.index_of_address(target).unwrap()] = true;
            }
        }

        let mut blocks = Vec::new();
        let mut block_of_instr = vec![0; n];
        for idx in 0..n {
            if leader[idx] {
                blocks.push(BasicBlock { first_instr: idx, end_instr: idx + 1 });
            } else {
                blocks.last_mut().unwrap().end_instr = idx + 1;
            }
            block_of_instr[idx] = blocks.len() - 1;
        }

        let block_of_addr =
            |addr: u64| block_of_instr[listing.index_of_address(addr).unwrap()];

        // Call sites: (callee entry block, continuation block).
        let mut call_sites: Vec<(usize, Option<usize>)> = Vec::new();
        for block in &blocks {
            let entry = listing.entry(block.end_instr - 1);
            if entry.kind == InstrKind::Call {
                if let Some(target) = entry.target {
                    let continuation =
                        (block.end_instr < n).then(|| block_of_instr[block.end_instr]);
                    call_sites.push((block_of_addr(target), continuation));
                }
            }
        }

        // Function membership: from each callee entry, flow through
        // fallthrough/branch edges and step over calls into their
        // continuation; stop at returns. A block reachable from several
        // entries belongs to every one of them.
        let entry_blocks: BTreeSet<usize> = call_sites.iter().map(|&(e, _)| e).collect();
        let mut members: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for &entry_block in &entry_blocks {
            let mut seen = BTreeSet::new();
            let mut stack = vec![entry_block];
            while let Some(b) = stack.pop() {
                if !seen.insert(b) {
                    continue;
                }
                let block = &blocks[b];
                let entry = listing.entry(block.end_instr - 1);
                let push_addr = |addr: u64, stack: &mut Vec<usize>| {
                    stack.push(block_of_instr[listing.index_of_address(addr).unwrap()]);
                };
                match entry.kind {
                    InstrKind::Sequential => {
                        if block.end_instr < n {
                            stack.push(block_of_instr[block.end_instr]);
                        }
                    }
                    InstrKind::Branch => {
                        if let Some(t) = entry.target {
                            push_addr(t, &mut stack);
                        }
                    }
                    InstrKind::CondBranch => {
                        if let Some(t) = entry.target {
                            push_addr(t, &mut stack);
                        }
                        if block.end_instr < n {
                            stack.push(block_of_instr[block.end_instr]);
                        }
                    }
                    InstrKind::Call => {
                        if block.end_instr < n {
                            stack.push(block_of_instr[block.end_instr]);
                        }
                    }
                    InstrKind::Return => {}
                }
            }
            members.insert(entry_block, seen);
        }

        let mut edges: Vec<Vec<CfgEdge>> = vec![Vec::new(); blocks.len()];
        for (b, block) in blocks.iter().enumerate() {
            let entry = listing.entry(block.end_instr - 1);
            let fallthrough_target = if block.end_instr < n {
                FlowTarget::Block(block_of_instr[block.end_instr])
            } else {
                FlowTarget::Unknown
            };
            let direct_target = entry
                .target
                .map(|t| FlowTarget::Block(block_of_addr(t)))
                .unwrap_or(FlowTarget::Unknown);
            match entry.kind {
                InstrKind::Sequential => {
                    // Falling off the end of the listing ends the path;
                    // no edge is materialized for that.
                    if let FlowTarget::Block(t) = fallthrough_target {
                        edges[b].push(CfgEdge {
                            kind: EdgeKind::Fallthrough,
                            target: FlowTarget::Block(t),
                            probability: 1.0,
                        });
                    }
                }
                InstrKind::Branch => {
                    edges[b].push(CfgEdge {
                        kind: EdgeKind::Jump,
                        target: direct_target,
                        probability: 1.0,
                    });
                }
                InstrKind::CondBranch => {
                    edges[b].push(CfgEdge {
                        kind: EdgeKind::Taken,
                        target: direct_target,
                        probability: 0.5,
                    });
                    edges[b].push(CfgEdge {
                        kind: EdgeKind::NotTaken,
                        target: fallthrough_target,
                        probability: 0.5,
                    });
                }
                InstrKind::Call => {
                    edges[b].push(CfgEdge {
                        kind: EdgeKind::Call,
                        target: direct_target,
                        probability: 1.0,
                    });
                }
                InstrKind::Return => {
                    let mut continuations = BTreeSet::new();
                    for &(callee, continuation) in &call_sites {
                        if members[&callee].contains(&b) {
                            if let Some(cont) = continuation {
                                continuations.insert(cont);
                            }
                        }
                    }
                    if continuations.is_empty() {
                        edges[b].push(CfgEdge {
                            kind: EdgeKind::Return,
                            target: FlowTarget::Unknown,
                            probability: 1.0,
                        });
                    } else {
                        let p = 1.0 / continuations.len() as f64;
                        for cont in continuations {
                            edges[b].push(CfgEdge {
                                kind: EdgeKind::Return,
                                target: FlowTarget::Block(cont),
                                probability: p,
                            });
                        }
                    }
                }
            }
        }

        Cfg { listing, blocks, edges, block_of_instr }
    }

    pub fn listing(&self) -> &ProgramListing {
        &self.listing
    }

    pub fn blocks(&self) -> &[BasicBlock] {
        &self.blocks
    }

    pub fn block_edges(&self, block: usize) -> &[CfgEdge] {
        &self.edges[block]
    }

    pub fn block_of_instr(&self, instr: usize) -> usize {
        self.block_of_instr[instr]
    }

    /// Counts taken/not-taken outcomes for every conditional branch over
    /// the first `limit` trace instructions and replaces the uniform
    /// priors of executed branches with the measured ratios. Branches
    /// the trace never reaches keep 0.5/0.5. Returns the raw counts.
    pub fn annotate_probabilities(
        &mut self,
        trace: &[TraceInstruction],
        limit: u64,
    ) -> Result<BranchProfile, CfgError> {
        let considered = trace.len().min(limit.try_into().unwrap_or(usize::MAX));
        let mut profile = BranchProfile::default();
        for (pos, instr) in trace[..considered].iter().enumerate() {
            let idx = self
                .listing
                .index_of_address(instr.address)
                .ok_or(CfgError::AddressNotInListing { address: instr.address })?;
            let entry = self.listing.entry(idx);
            if entry.kind != InstrKind::CondBranch || pos + 1 >= considered {
                continue;
            }
            let next = trace[pos + 1].address;
            let fallthrough =
                (idx + 1 < self.listing.len()).then(|| self.listing.entry(idx + 1).address);
            let counts = profile.counts.entry(entry.address).or_default();
            if entry.target == Some(next) {
                counts.taken += 1;
            } else if fallthrough == Some(next) {
                counts.not_taken += 1;
            } else {
                return Err(CfgError::InconsistentBranchFlow {
                    address: entry.address,
                    next,
                });
            }
        }

        for (b, block) in self.blocks.iter().enumerate() {
            let entry = self.listing.entry(block.end_instr - 1);
            if entry.kind != InstrKind::CondBranch {
                continue;
            }
            let Some(counts) = profile.counts.get(&entry.address) else { continue };
            let total = counts.taken + counts.not_taken;
            if total == 0 {
                continue;
            }
            let p_taken = counts.taken as f64 / total as f64;
            for edge in &mut self.edges[b] {
                edge.probability = match edge.kind {
                    EdgeKind::Taken => p_taken,
                    EdgeKind::NotTaken => 1.0 - p_taken,
                    _ => edge.probability,
                };
            }
        }
        Ok(profile)
    }
}
