//! Per-access cost model for the racetrack register file.
//!
//! Costs are built from four primitive track operations (detect, shift,
//! remove, insert) priced by [`CostParams`]. A shift is counted per
//! track per position: a pulse that moves all tracks together by one
//! position costs one shift unit per participating track.
//!
//! Horizontal accesses sweep each affected track across its ports and
//! back, so their shift count is independent of which register was
//! touched before. Vertical accesses realign every track to the target
//! register's offset, so their shift count is the distance from the
//! previously accessed register's offset. Horizontal writes reuse the
//! domains already present in the track segment and only remove the
//! surplus or insert the missing ones; vertical writes clear all bits of
//! the register and insert the new ones.

use std::error::Error;
use std::fmt;

use crate::geometry::{AllocationMode, CostParams, ValidatedGeometry};

/// Fixed-width bit pattern held by one register.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RegisterValue {
    width: u32,
    /// Little-endian 64-bit limbs; bits at and above `width` are zero.
    limbs: Vec<u64>,
}

impl fmt::Debug for RegisterValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RegisterValue({}:{})", self.width, self.to_hex())
    }
}

fn limb_count(width: u32) -> usize {
    (width as usize).div_ceil(64)
}

impl RegisterValue {
    pub fn zero(width: u32) -> Self {
        RegisterValue { width, limbs: vec![0; limb_count(width)] }
    }

    /// Wraps a machine word; `None` when the value needs more than
    /// `width` bits.
    pub fn from_u64(value: u64, width: u32) -> Option<Self> {
        if width < 64 && width < 64 - value.leading_zeros() {
            return None;
        }
        let mut out = RegisterValue::zero(width.max(1));
        out.width = width;
        if width == 0 {
            return if value == 0 { Some(RegisterValue { width: 0, limbs: vec![] }) } else { None };
        }
        out.limbs[0] = value;
        Some(out)
    }

    /// Parses lowercase/uppercase hex without a radix prefix. `None`
    /// when the text is not hex or the value does not fit `width`.
    pub fn from_hex(text: &str, width: u32) -> Option<Self> {
        if text.is_empty() || !text.bytes().all(|b| b.is_ascii_hexdigit()) {
            return None;
        }
        let mut value = RegisterValue::zero(width);
        for (pos, byte) in text.bytes().rev().enumerate() {
            let nibble = (byte as char).to_digit(16).unwrap() as u64;
            if nibble == 0 {
                continue;
            }
            let bit = pos as u64 * 4;
            let top = bit + (63 - nibble.leading_zeros() as u64);
            if top >= width as u64 {
                return None;
            }
            value.limbs[(bit / 64) as usize] |= nibble << (bit % 64);
        }
        Some(value)
    }

    /// Minimal lowercase hex, `"0"` for zero.
    pub fn to_hex(&self) -> String {
        let mut top = None;
        for (idx, &limb) in self.limbs.iter().enumerate().rev() {
            if limb != 0 {
                top = Some(idx);
                break;
            }
        }
        match top {
            None => "0".to_string(),
            Some(top) => {
                let mut out = format!("{:x}", self.limbs[top]);
                for &limb in self.limbs[..top].iter().rev() {
                    out.push_str(&format!("{limb:016x}"));
                }
                out
            }
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn popcount(&self) -> u32 {
        self.limbs.iter().map(|limb| limb.count_ones()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.limbs.iter().all(|&limb| limb == 0)
    }

    pub fn bit(&self, index: u32) -> bool {
        assert!(index < self.width, "bit index {index} out of width {}", self.width);
        self.limbs[(index / 64) as usize] >> (index % 64) & 1 == 1
    }

    pub fn set_bit(&mut self, index: u32, on: bool) {
        assert!(index < self.width, "bit index {index} out of width {}", self.width);
        let limb = &mut self.limbs[(index / 64) as usize];
        if on {
            *limb |= 1 << (index % 64);
        } else {
            *limb &= !(1 << (index % 64));
        }
    }

    /// Same bits at a wider width; `None` when narrowing is requested.
    pub fn zero_extended(&self, width: u32) -> Option<Self> {
        if width < self.width {
            return None;
        }
        let mut limbs = self.limbs.clone();
        limbs.resize(limb_count(width), 0);
        Some(RegisterValue { width, limbs })
    }
}

/// Domain bookkeeping for one register write: how many ones the old and
/// new contents hold and the net surplus/deficit a permutation write has
/// to remove or insert. At most one of `removed_ones` / `inserted_ones`
/// is nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WriteDelta {
    /// Ones in the old contents.
    pub ones_before: u32,
    /// Ones in the new contents.
    pub ones_after: u32,
    /// Surplus domains a permutation write removes: max(before - after, 0).
    pub removed_ones: u32,
    /// Missing domains a permutation write inserts: max(after - before, 0).
    pub inserted_ones: u32,
}

/// Shift count plus its priced energy and latency for one access or an
/// accumulated run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostTriple {
    pub shifts: u64,
    pub energy_fj: f64,
    pub latency_ns: f64,
}

impl CostTriple {
    pub const ZERO: CostTriple = CostTriple { shifts: 0, energy_fj: 0.0, latency_ns: 0.0 };
}

impl std::ops::Add for CostTriple {
    type Output = CostTriple;

    fn add(self, rhs: CostTriple) -> CostTriple {
        CostTriple {
            shifts: self.shifts + rhs.shifts,
            energy_fj: self.energy_fj + rhs.energy_fj,
            latency_ns: self.latency_ns + rhs.latency_ns,
        }
    }
}

impl std::ops::AddAssign for CostTriple {
    fn add_assign(&mut self, rhs: CostTriple) {
        *self = *self + rhs;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AccessKind {
    Read,
    Write,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CostError {
    RegisterOutOfRange { reg: u32, num_registers: u32 },
    WidthMismatch { expected: u32, actual: u32 },
    /// A write access was costed without its old/new values.
    MissingWriteValues,
}

impl fmt::Display for CostError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostError::RegisterOutOfRange { reg, num_registers } => {
                write!(f, "register r{reg} out of range (file holds {num_registers})")
            }
            CostError::WidthMismatch { expected, actual } => {
                write!(f, "register value width {actual} does not match {expected}")
            }
            CostError::MissingWriteValues => {
                write!(f, "write access costed without old/new register values")
            }
        }
    }
}

impl Error for CostError {}

/// Shifts for one horizontal access: every track holding part of the
/// register sweeps each position of a port segment under its port and
/// shifts back, (track_length / ports - 1) * 2 per track, summed over
/// max(1, register_bits / track_length) tracks. Independent of the
/// access sequence.
pub fn shift_cost_horizontal(geom: &ValidatedGeometry) -> u64 {
    let track_length = geom.track_length() as u64;
    let ports = geom.num_access_ports() as u64;
    let bits = geom.register_bits() as u64;
    let per_track = (track_length / ports - 1) * 2;
    per_track * (bits / track_length).max(1)
}

fn vertical_offset(geom: &ValidatedGeometry, reg: u32) -> u64 {
    // Each aligned position group exposes num_tracks * ports bits, i.e.
    // max(1, num_tracks * ports / register_bits) registers; consecutive
    // groups sit one position apart.
    reg as u64 * geom.register_bits() as u64
        / (geom.num_tracks() as u64 * geom.num_access_ports() as u64)
}

/// Shifts to move the vertical alignment from the offset of `reg_old`
/// to the offset of `reg`: every one-position pulse moves all
/// num_tracks tracks, so the distance in positions is multiplied by the
/// track count. Zero when both registers share an alignment group.
pub fn shift_cost_vertical(
    geom: &ValidatedGeometry,
    reg_old: u32,
    reg: u32,
) -> Result<u64, CostError> {
    for r in [reg_old, reg] {
        if r >= geom.num_registers() {
            return Err(CostError::RegisterOutOfRange {
                reg: r,
                num_registers: geom.num_registers(),
            });
        }
    }
    let from = vertical_offset(geom, reg_old);
    let to = vertical_offset(geom, reg);
    Ok(from.abs_diff(to) * geom.num_tracks() as u64)
}

/// Ones bookkeeping for writing `new` over `old`. Both values must have
/// the same width.
pub fn write_delta(old: &RegisterValue, new: &RegisterValue) -> Result<WriteDelta, CostError> {
    if old.width() != new.width() {
        return Err(CostError::WidthMismatch { expected: old.width(), actual: new.width() });
    }
    let ones_before = old.popcount();
    let ones_after = new.popcount();
    Ok(WriteDelta {
        ones_before,
        ones_after,
        removed_ones: ones_before.saturating_sub(ones_after),
        inserted_ones: ones_after.saturating_sub(ones_before),
    })
}

/// Scale that converts a horizontal shift count into the number of
/// local shift pulses a permutation write issues: ports * min(1,
/// register_bits / track_length), always a power-of-two integer under a
/// validated geometry.
fn permutation_shift_scale(geom: &ValidatedGeometry) -> u64 {
    let ports = geom.num_access_ports() as u64;
    let bits = geom.register_bits() as u64;
    let track_length = geom.track_length() as u64;
    if bits >= track_length {
        ports
    } else {
        debug_assert_eq!(ports * bits % track_length, 0);
        ports * bits / track_length
    }
}

/// Energy in femtojoules for one access given its positioning shift
/// count (from [`shift_cost_horizontal`] / [`shift_cost_vertical`]).
/// Writes need the [`WriteDelta`] of the value change.
pub fn access_energy(
    geom: &ValidatedGeometry,
    params: &CostParams,
    mode: AllocationMode,
    kind: AccessKind,
    shifts: u64,
    delta: Option<&WriteDelta>,
) -> Result<f64, CostError> {
    let bits = geom.register_bits() as f64;
    Ok(match (mode, kind) {
        (_, AccessKind::Read) => {
            // Same expression both modes: position, then detect each bit.
            shifts as f64 * params.shift_energy_fj + bits * params.detect_energy_fj
        }
        (AllocationMode::Horizontal, AccessKind::Write) => {
            let delta = delta.ok_or(CostError::MissingWriteValues)?;
            let local_pulses = (shifts as u128 * permutation_shift_scale(geom) as u128) as f64;
            local_pulses * params.shift_energy_fj
                + bits * params.detect_energy_fj
                + delta.inserted_ones as f64 * params.insert_energy_fj
                + delta.removed_ones as f64
                    * (params.shift_energy_fj + params.remove_energy_fj)
        }
        (AllocationMode::Vertical, AccessKind::Write) => {
            let delta = delta.ok_or(CostError::MissingWriteValues)?;
            shifts as f64 * params.shift_energy_fj
                + bits * params.remove_energy_fj
                + delta.ones_after as f64 * params.insert_energy_fj
        }
    })
}

/// Latency in nanoseconds for one access; same conventions as
/// [`access_energy`]. Horizontal shifts serialize the bit sweep per
/// port, so latency scales with the full shift count; vertical removes
/// and inserts run once across all tracks in parallel.
pub fn access_latency(
    geom: &ValidatedGeometry,
    params: &CostParams,
    mode: AllocationMode,
    kind: AccessKind,
    shifts: u64,
    delta: Option<&WriteDelta>,
) -> Result<f64, CostError> {
    let bits = geom.register_bits() as f64;
    let shift_time = shifts as f64 * params.shift_latency_ns;
    Ok(match (mode, kind) {
        (AllocationMode::Horizontal, AccessKind::Read) => {
            shift_time + bits * params.detect_latency_ns
        }
        (AllocationMode::Horizontal, AccessKind::Write) => {
            let delta = delta.ok_or(CostError::MissingWriteValues)?;
            shift_time
                + bits * params.detect_latency_ns
                + delta.inserted_ones as f64 * params.insert_latency_ns
                + delta.removed_ones as f64
                    * (params.shift_latency_ns + params.remove_latency_ns)
        }
        (AllocationMode::Vertical, AccessKind::Read) => shift_time + params.detect_latency_ns,
        (AllocationMode::Vertical, AccessKind::Write) => {
            delta.ok_or(CostError::MissingWriteValues)?;
            shift_time + params.remove_latency_ns + params.insert_latency_ns
        }
    })
}

/// Full cost of one register access. `reg_old` is the previously
/// accessed register (it only matters vertically); write accesses carry
/// the old and new contents at full register width.
#[allow(clippy::too_many_arguments)]
pub fn access_cost(
    geom: &ValidatedGeometry,
    params: &CostParams,
    mode: AllocationMode,
    kind: AccessKind,
    reg_old: u32,
    reg: u32,
    old_value: Option<&RegisterValue>,
    new_value: Option<&RegisterValue>,
) -> Result<CostTriple, CostError> {
    if reg >= geom.num_registers() {
        return Err(CostError::RegisterOutOfRange { reg, num_registers: geom.num_registers() });
    }
    let shifts = match mode {
        AllocationMode::Horizontal => shift_cost_horizontal(geom),
        AllocationMode::Vertical => shift_cost_vertical(geom, reg_old, reg)?,
    };
    let delta = match kind {
        AccessKind::Read => None,
        AccessKind::Write => {
            let old = old_value.ok_or(CostError::MissingWriteValues)?;
            let new = new_value.ok_or(CostError::MissingWriteValues)?;
            for value in [old, new] {
                if value.width() != geom.register_bits() {
                    return Err(CostError::WidthMismatch {
                        expected: geom.register_bits(),
                        actual: value.width(),
                    });
                }
            }
            Some(write_delta(old, new)?)
        }
    };
    Ok(CostTriple {
        shifts,
        energy_fj: access_energy(geom, params, mode, kind, shifts, delta.as_ref())?,
        latency_ns: access_latency(geom, params, mode, kind, shifts, delta.as_ref())?,
    })
}
