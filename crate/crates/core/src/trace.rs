//! Instruction-level register access traces.
//!
//! A trace line records one executed instruction: its address, mnemonic,
//! the registers it read (with the value seen), and the registers it
//! wrote (value before and after). The text form is line-based so traces
//! can be produced by any emulator hook and diffed by eye:
//!
//! ```text
//! I 1a2b mul S 3:64:ff,4:64:2 D 3:64:ff:1fe
//! I 1a2f nop S - D -
//! # comment
//! ```
//!
//! Source items are `reg:width:value`, destination items are
//! `reg:width:before:after`; registers in decimal, values in hex, lists
//! comma-separated, `-` for an empty list.
//!
//! The module also generates synthetic workloads with a tunable
//! hot-set/churn mix, used by the sweep harness and the test suite.

use std::error::Error;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cost::{AccessKind, RegisterValue};
use crate::geometry::ValidatedGeometry;

/// One register read performed by an instruction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceOperand {
    pub reg: u32,
    /// Access width in bits, at most the register width.
    pub width: u32,
    pub value: RegisterValue,
}

/// One register write performed by an instruction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DestOperand {
    pub reg: u32,
    pub width: u32,
    pub before: RegisterValue,
    pub after: RegisterValue,
}

/// One executed instruction with its register traffic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceInstruction {
    pub address: u64,
    pub mnemonic: String,
    pub sources: Vec<SourceOperand>,
    pub destinations: Vec<DestOperand>,
}

/// A single register-file access in issue order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterAccess {
    pub reg: u32,
    pub kind: AccessKind,
    pub width: u32,
    /// For reads, equals `value_after`.
    pub value_before: RegisterValue,
    pub value_after: RegisterValue,
}

/// Flattens an instruction into its access sequence: all sources in
/// listed order (reads), then all destinations in listed order
/// (writes). Duplicate registers stay as distinct accesses.
pub fn access_sequence(instr: &TraceInstruction) -> Vec<RegisterAccess> {
    let mut out = Vec::with_capacity(instr.sources.len() + instr.destinations.len());
    for src in &instr.sources {
        out.push(RegisterAccess {
            reg: src.reg,
            kind: AccessKind::Read,
            width: src.width,
            value_before: src.value.clone(),
            value_after: src.value.clone(),
        });
    }
    for dst in &instr.destinations {
        out.push(RegisterAccess {
            reg: dst.reg,
            kind: AccessKind::Write,
            width: dst.width,
            value_before: dst.before.clone(),
            value_after: dst.after.clone(),
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for TraceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "trace line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl Error for TraceError {}

struct LineScanner<'a> {
    line: &'a str,
    pos: usize,
    line_no: usize,
}

impl<'a> LineScanner<'a> {
    fn new(line: &'a str, line_no: usize) -> Self {
        LineScanner { line, pos: 0, line_no }
    }

    fn err(&self, column: usize, message: impl Into<String>) -> TraceError {
        TraceError { line: self.line_no, column, message: message.into() }
    }

    /// Next space-separated token with its 1-based start column.
    fn token(&mut self, what: &str) -> Result<(usize, &'a str), TraceError> {
        let rest = &self.line[self.pos..];
        let skipped = rest.len() - rest.trim_start().len();
        let start = self.pos + skipped;
        if start >= self.line.len() {
            return Err(self.err(self.line.len() + 1, format!("expected {what}")));
        }
        let token = self.line[start..].split_whitespace().next().unwrap();
        self.pos = start + token.len();
        Ok((start + 1, token))
    }

    fn finish(&mut self) -> Result<(), TraceError> {
        let rest = &self.line[self.pos..];
        if !rest.trim().is_empty() {
            let column = self.pos + (rest.len() - rest.trim_start().len()) + 1;
            return Err(self.err(column, "unexpected trailing text"));
        }
        Ok(())
    }
}

fn parse_reg(
    scanner: &LineScanner<'_>,
    column: usize,
    text: &str,
    num_registers: u32,
) -> Result<u32, TraceError> {
    let reg: u32 = text
        .parse()
        .map_err(|_| scanner.err(column, format!("register index {text:?} is not decimal")))?;
    if reg >= num_registers {
        return Err(scanner.err(
            column,
            format!("register r{reg} out of range (file holds {num_registers})"),
        ));
    }
    Ok(reg)
}

fn parse_width(
    scanner: &LineScanner<'_>,
    column: usize,
    text: &str,
    register_bits: u32,
) -> Result<u32, TraceError> {
    let width: u32 = text
        .parse()
        .map_err(|_| scanner.err(column, format!("width {text:?} is not decimal")))?;
    if width == 0 || width > register_bits {
        return Err(scanner.err(
            column,
            format!("width {width} outside 1..={register_bits}"),
        ));
    }
    Ok(width)
}

fn parse_value(
    scanner: &LineScanner<'_>,
    column: usize,
    text: &str,
    width: u32,
) -> Result<RegisterValue, TraceError> {
    RegisterValue::from_hex(text, width).ok_or_else(|| {
        scanner.err(column, format!("value {text:?} is not hex or exceeds {width} bits"))
    })
}

/// Splits a comma-separated operand list, yielding each item with the
/// 1-based column where it starts.
fn list_items(start_col: usize, list: &str) -> Vec<(usize, &str)> {
    let mut items = Vec::new();
    let mut offset = 0;
    for item in list.split(',') {
        items.push((start_col + offset, item));
        offset += item.len() + 1;
    }
    items
}

/// Splits a colon-separated operand into fields with start columns.
fn split_fields(item: &str, item_col: usize) -> Vec<(usize, &str)> {
    let mut fields = Vec::new();
    let mut offset = 0;
    for field in item.split(':') {
        fields.push((item_col + offset, field));
        offset += field.len() + 1;
    }
    fields
}

/// Parses trace text. Register indices and access widths are validated
/// against the geometry; errors carry the line and column of the
/// offending field. `#` starts a comment, blank lines are skipped.
pub fn parse_trace(
    text: &str,
    geom: &ValidatedGeometry,
) -> Result<Vec<TraceInstruction>, TraceError> {
    let num_registers = geom.num_registers();
    let register_bits = geom.register_bits();
    let mut out = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.split_once('#') {
            Some((before, _)) => before,
            None => raw_line,
        };
        if line.trim().is_empty() {
            continue;
        }
        let mut scanner = LineScanner::new(line, line_no);

        let (col, tag) = scanner.token("instruction tag 'I'")?;
        if tag != "I" {
            return Err(scanner.err(col, format!("expected instruction tag 'I', got {tag:?}")));
        }
        let (col, addr_text) = scanner.token("hex address")?;
        let address = u64::from_str_radix(addr_text, 16)
            .map_err(|_| scanner.err(col, format!("address {addr_text:?} is not hex")))?;
        let (_, mnemonic) = scanner.token("mnemonic")?;

        let (col, tag) = scanner.token("source marker 'S'")?;
        if tag != "S" {
            return Err(scanner.err(col, format!("expected source marker 'S', got {tag:?}")));
        }
        let (src_col, src_list) = scanner.token("source list")?;
        let mut sources = Vec::new();
        if src_list != "-" {
            for (item_col, item) in list_items(src_col, src_list) {
                let fields = split_fields(item, item_col);
                if fields.len() != 3 {
                    return Err(scanner.err(
                        item_col,
                        format!("source operand {item:?} is not reg:width:value"),
                    ));
                }
                let reg = parse_reg(&scanner, fields[0].0, fields[0].1, num_registers)?;
                let width = parse_width(&scanner, fields[1].0, fields[1].1, register_bits)?;
                let value = parse_value(&scanner, fields[2].0, fields[2].1, width)?;
                sources.push(SourceOperand { reg, width, value });
            }
        }

        let (col, tag) = scanner.token("destination marker 'D'")?;
        if tag != "D" {
            return Err(
                scanner.err(col, format!("expected destination marker 'D', got {tag:?}"))
            );
        }
        let (dst_col, dst_list) = scanner.token("destination list")?;
        let mut destinations = Vec::new();
        if dst_list != "-" {
            for (item_col, item) in list_items(dst_col, dst_list) {
                let fields = split_fields(item, item_col);
                if fields.len() != 4 {
                    return Err(scanner.err(
                        item_col,
                        format!("destination operand {item:?} is not reg:width:before:after"),
                    ));
                }
                let reg = parse_reg(&scanner, fields[0].0, fields[0].1, num_registers)?;
                let width = parse_width(&scanner, fields[1].0, fields[1].1, register_bits)?;
                let before = parse_value(&scanner, fields[2].0, fields[2].1, width)?;
                let after = parse_value(&scanner, fields[3].0, fields[3].1, width)?;
                destinations.push(DestOperand { reg, width, before, after });
            }
        }
        scanner.finish()?;

        out.push(TraceInstruction {
            address,
            mnemonic: mnemonic.to_string(),
            sources,
            destinations,
        });
    }
    Ok(out)
}

/// Canonical text form: lowercase minimal hex, single spaces, one
/// instruction per line with a trailing newline. `parse_trace` of the
/// output reproduces the input instructions exactly.
pub fn serialize_trace(trace: &[TraceInstruction]) -> String {
    let mut out = String::new();
    for instr in trace {
        out.push_str(&format!("I {:x} {} S ", instr.address, instr.mnemonic));
        if instr.sources.is_empty() {
            out.push('-');
        } else {
            let items: Vec<String> = instr
                .sources
                .iter()
                .map(|s| format!("{}:{}:{}", s.reg, s.width, s.value.to_hex()))
                .collect();
            out.push_str(&items.join(","));
        }
        out.push_str(" D ");
        if instr.destinations.is_empty() {
            out.push('-');
        } else {
            let items: Vec<String> = instr
                .destinations
                .iter()
                .map(|d| {
                    format!("{}:{}:{}:{}", d.reg, d.width, d.before.to_hex(), d.after.to_hex())
                })
                .collect();
            out.push_str(&items.join(","));
        }
        out.push('\n');
    }
    out
}

/// Register-selection behavior for one synthetic phase: accesses hit a
/// hot set of the first `working_set` registers with probability
/// `hot_ratio` and are spread uniformly over the remaining registers
/// otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccessProfile {
    pub working_set: u32,
    pub hot_ratio: f64,
}

/// Parameters for a single-phase synthetic workload.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub instruction_count: u64,
    pub working_set: u32,
    /// Probability that an access targets the hot set.
    pub hot_ratio: f64,
    /// Probability that an instruction writes instead of reads.
    pub write_fraction: f64,
    /// Expected number of bits a write flips in the register.
    pub value_entropy: f64,
    pub seed: u64,
}

/// A workload alternating through `phases` in order, `repetitions`
/// times, `phase_length` instructions per phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePattern {
    pub phases: Vec<AccessProfile>,
    pub phase_length: u64,
    pub repetitions: u32,
    pub write_fraction: f64,
    pub value_entropy: f64,
    pub seed: u64,
}

struct SyntheticState {
    rng: ChaCha8Rng,
    shadow: Vec<RegisterValue>,
    next_address: u64,
}

impl SyntheticState {
    fn new(seed: u64, geom: &ValidatedGeometry) -> Self {
        SyntheticState {
            rng: ChaCha8Rng::seed_from_u64(seed),
            shadow: (0..geom.num_registers())
                .map(|_| RegisterValue::zero(geom.register_bits()))
                .collect(),
            next_address: 0x1000,
        }
    }

    fn pick_register(&mut self, profile: &AccessProfile, num_registers: u32) -> u32 {
        let hot = profile.working_set.min(num_registers);
        let take_hot = if hot == 0 {
            false
        } else if hot == num_registers {
            true
        } else {
            self.rng.gen_bool(profile.hot_ratio.clamp(0.0, 1.0))
        };
        if take_hot {
            self.rng.gen_range(0..hot)
        } else {
            self.rng.gen_range(hot..num_registers)
        }
    }

    fn emit(
        &mut self,
        profile: &AccessProfile,
        write_fraction: f64,
        value_entropy: f64,
        count: u64,
        geom: &ValidatedGeometry,
        out: &mut Vec<TraceInstruction>,
    ) {
        let bits = geom.register_bits();
        let flip_probability = (value_entropy / bits as f64).clamp(0.0, 1.0);
        for _ in 0..count {
            let address = self.next_address;
            self.next_address += 4;
            let reg = self.pick_register(profile, geom.num_registers());
            let is_write = self.rng.gen_bool(write_fraction.clamp(0.0, 1.0));
            if is_write {
                let before = self.shadow[reg as usize].clone();
                let mut after = before.clone();
                for bit in 0..bits {
                    if self.rng.gen_bool(flip_probability) {
                        after.set_bit(bit, !after.bit(bit));
                    }
                }
                self.shadow[reg as usize] = after.clone();
                out.push(TraceInstruction {
                    address,
                    mnemonic: "wr".to_string(),
                    sources: vec![],
                    destinations: vec![DestOperand { reg, width: bits, before, after }],
                });
            } else {
                let value = self.shadow[reg as usize].clone();
                out.push(TraceInstruction {
                    address,
                    mnemonic: "rd".to_string(),
                    sources: vec![SourceOperand { reg, width: bits, value }],
                    destinations: vec![],
                });
            }
        }
    }
}

/// Deterministic synthetic workload: same spec and geometry give the
/// same trace on every run and platform. Addresses are sequential
/// four-byte slots from 0x1000, one register access per instruction.
pub fn generate_synthetic(
    spec: &SyntheticSpec,
    geom: &ValidatedGeometry,
) -> Vec<TraceInstruction> {
    let mut state = SyntheticState::new(spec.seed, geom);
    let mut out = Vec::with_capacity(spec.instruction_count as usize);
    let profile = AccessProfile { working_set: spec.working_set, hot_ratio: spec.hot_ratio };
    state.emit(
        &profile,
        spec.write_fraction,
        spec.value_entropy,
        spec.instruction_count,
        geom,
        &mut out,
    );
    out
}

/// Deterministic multi-phase workload; register contents persist across
/// phase boundaries.
pub fn generate_phased(
    pattern: &PhasePattern,
    geom: &ValidatedGeometry,
) -> Vec<TraceInstruction> {
    let mut state = SyntheticState::new(pattern.seed, geom);
    let total =
        pattern.phase_length as usize * pattern.phases.len() * pattern.repetitions as usize;
    let mut out = Vec::with_capacity(total);
    for _ in 0..pattern.repetitions {
        for profile in &pattern.phases {
            state.emit(
                profile,
                pattern.write_fraction,
                pattern.value_entropy,
                pattern.phase_length,
                geom,
                &mut out,
            );
        }
    }
    out
}
