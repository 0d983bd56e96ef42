//! Register-file geometry for a racetrack (domain-wall/skyrmion) memory.
//!
//! The register file is an array of nanotracks. Each track stores
//! `track_length` bit positions that shift past a fixed set of access
//! ports. Registers can be laid out horizontally (a register's bits run
//! along one or more tracks) or vertically (each bit of a register sits
//! in a different track at a common aligned offset). Geometry validation
//! checks that both layouts are addressable with the configured port
//! count before any cost is computed.

use std::collections::BTreeMap;
use std::error::Error;
use std::fmt;

/// How registers are mapped onto the nanotracks.
///
/// The mode is a single global bit at runtime; `Horizontal` is the reset
/// default everywhere a tie has to be broken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AllocationMode {
    /// Register bits are laid out along a track; any access shifts the
    /// track across its ports and back, independent of access order.
    Horizontal,
    /// Register bits are spread across tracks at one aligned offset;
    /// repeated access to the same alignment group is shift-free.
    Vertical,
}

impl AllocationMode {
    /// Encoding used by recommendation tables: 0 horizontal, 1 vertical.
    pub fn to_bit(self) -> u8 {
        match self {
            AllocationMode::Horizontal => 0,
            AllocationMode::Vertical => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            0 => Some(AllocationMode::Horizontal),
            1 => Some(AllocationMode::Vertical),
            _ => None,
        }
    }
}

impl fmt::Display for AllocationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AllocationMode::Horizontal => write!(f, "horizontal"),
            AllocationMode::Vertical => write!(f, "vertical"),
        }
    }
}

/// Raw geometry parameters as supplied by the user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RegisterFileGeometry {
    /// Number of nanotracks.
    pub num_tracks: u32,
    /// Bit positions per nanotrack.
    pub track_length: u32,
    /// Access ports per nanotrack, evenly spaced.
    pub num_access_ports: u32,
    /// Architectural registers stored in the file.
    pub num_registers: u32,
    /// Bits per register.
    pub register_bits: u32,
}

impl Default for RegisterFileGeometry {
    /// 32 tracks x 64 positions, 2 ports per track, 32 x 64-bit registers.
    fn default() -> Self {
        RegisterFileGeometry {
            num_tracks: 32,
            track_length: 64,
            num_access_ports: 2,
            num_registers: 32,
            register_bits: 64,
        }
    }
}

/// Quantities derived from a validated geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedLayout {
    /// Registers that fit along one track horizontally (track_length /
    /// register_bits). Below 1.0 a register spans several tracks; the
    /// value is always an exact power-of-two ratio.
    pub regs_per_track: f64,
    /// Aligned positions a register occupies vertically:
    /// max(1, register_bits / num_tracks).
    pub vertical_positions_per_reg: u32,
    /// Reserve positions at each track end so ports can sweep their
    /// whole segment: track_length / (2 * num_access_ports). Exact, may
    /// be a half position when ports equal positions.
    pub overflow_positions: f64,
}

/// Why a geometry was rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GeometryError {
    /// A structural field must be a nonzero power of two.
    NotPowerOfTwo { field: &'static str, value: u32 },
    /// num_registers must be at least 1.
    NoRegisters,
    /// More ports than positions on a track.
    TooManyPorts { num_access_ports: u32, track_length: u32 },
    /// Horizontal layout needs at least one port per register stored in
    /// a track: num_access_ports >= track_length / register_bits.
    HorizontalPortShortfall { required: u32, available: u32 },
    /// Vertical layout needs enough ports to reach every aligned
    /// position of one register: num_access_ports >= ceil(register_bits
    /// / num_tracks).
    VerticalPortShortfall { required: u32, available: u32 },
    /// Total track capacity is smaller than the register file contents.
    CapacityShortfall { capacity_bits: u64, required_bits: u64 },
    /// Bad key=value geometry config text.
    Config { line: usize, message: String },
    /// A cost parameter that must be strictly positive is not.
    NonPositiveParam { field: &'static str },
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::NotPowerOfTwo { field, value } => {
                write!(f, "{field} must be a nonzero power of two (got {value})")
            }
            GeometryError::NoRegisters => write!(f, "num_registers must be at least 1"),
            GeometryError::TooManyPorts { num_access_ports, track_length } => write!(
                f,
                "num_access_ports ({num_access_ports}) exceeds track_length ({track_length})"
            ),
            GeometryError::HorizontalPortShortfall { required, available } => write!(
                f,
                "horizontal port shortfall: need {required} ports per track, have {available}"
            ),
            GeometryError::VerticalPortShortfall { required, available } => write!(
                f,
                "vertical port shortfall: need {required} ports per track, have {available}"
            ),
            GeometryError::CapacityShortfall { capacity_bits, required_bits } => write!(
                f,
                "capacity shortfall: tracks hold {capacity_bits} bits, registers need {required_bits}"
            ),
            GeometryError::Config { line, message } => {
                write!(f, "geometry config line {line}: {message}")
            }
            GeometryError::NonPositiveParam { field } => {
                write!(f, "cost parameter {field} must be strictly positive")
            }
        }
    }
}

impl Error for GeometryError {}

/// A geometry that passed [`RegisterFileGeometry::validate`]. Cost
/// functions take this type so invalid configurations cannot reach the
/// arithmetic (which relies on the power-of-two structure for exact
/// division).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidatedGeometry {
    geometry: RegisterFileGeometry,
    layout: DerivedLayout,
}

fn require_power_of_two(field: &'static str, value: u32) -> Result<(), GeometryError> {
    if value.is_power_of_two() {
        Ok(())
    } else {
        Err(GeometryError::NotPowerOfTwo { field, value })
    }
}

impl RegisterFileGeometry {
    /// Checks every structural invariant and returns the proven-valid
    /// wrapper. Total over arbitrary inputs: never panics, never
    /// overflows.
    ///
    /// Check order is part of the contract: power-of-two shape, port
    /// count vs track length, horizontal port feasibility, vertical port
    /// feasibility, then capacity. A configuration violating several
    /// constraints reports the first in that order.
    pub fn validate(self) -> Result<ValidatedGeometry, GeometryError> {
        require_power_of_two("num_tracks", self.num_tracks)?;
        require_power_of_two("track_length", self.track_length)?;
        require_power_of_two("num_access_ports", self.num_access_ports)?;
        require_power_of_two("register_bits", self.register_bits)?;
        if self.num_registers == 0 {
            return Err(GeometryError::NoRegisters);
        }
        if self.num_access_ports > self.track_length {
            return Err(GeometryError::TooManyPorts {
                num_access_ports: self.num_access_ports,
                track_length: self.track_length,
            });
        }
        if self.track_length > self.register_bits {
            // Power-of-two fields make floor(track_length / register_bits) exact.
            let required = self.track_length / self.register_bits;
            if self.num_access_ports < required {
                return Err(GeometryError::HorizontalPortShortfall {
                    required,
                    available: self.num_access_ports,
                });
            }
        }
        if self.register_bits > self.num_tracks {
            let required = self.register_bits / self.num_tracks;
            if self.num_access_ports < required {
                return Err(GeometryError::VerticalPortShortfall {
                    required,
                    available: self.num_access_ports,
                });
            }
        }
        let capacity_bits = self.num_tracks as u64 * self.track_length as u64;
        let required_bits = self.num_registers as u64 * self.register_bits as u64;
        if capacity_bits < required_bits {
            return Err(GeometryError::CapacityShortfall { capacity_bits, required_bits });
        }

        let layout = DerivedLayout {
            regs_per_track: self.track_length as f64 / self.register_bits as f64,
            vertical_positions_per_reg: (self.register_bits / self.num_tracks).max(1),
            overflow_positions: self.track_length as f64
                / (2.0 * self.num_access_ports as f64),
        };
        Ok(ValidatedGeometry { geometry: self, layout })
    }

    /// Parses `key=value` geometry text. Keys: `num_tracks`,
    /// `track_length`, `num_aps`, `num_regs`, `reg_bits`; one per line,
    /// `#` starts a comment. Missing keys keep the defaults. The result
    /// is validated.
    pub fn from_config_str(text: &str) -> Result<ValidatedGeometry, GeometryError> {
        let mut geometry = RegisterFileGeometry::default();
        let mut seen = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw_line.split_once('#') {
                Some((before, _)) => before,
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| GeometryError::Config {
                line: line_no,
                message: format!("expected key=value, got {line:?}"),
            })?;
            let key = key.trim();
            let value: u32 =
                value.trim().parse().map_err(|_| GeometryError::Config {
                    line: line_no,
                    message: format!("value for {key:?} is not an unsigned integer"),
                })?;
            if seen.insert(key.to_string(), line_no).is_some() {
                return Err(GeometryError::Config {
                    line: line_no,
                    message: format!("duplicate key {key:?}"),
                });
            }
            match key {
                "num_tracks" => geometry.num_tracks = value,
                "track_length" => geometry.track_length = value,
                "num_aps" => geometry.num_access_ports = value,
                "num_regs" => geometry.num_registers = value,
                "reg_bits" => geometry.register_bits = value,
                other => {
                    return Err(GeometryError::Config {
                        line: line_no,
                        message: format!("unknown key {other:?}"),
                    })
                }
            }
        }
        geometry.validate()
    }
}

impl ValidatedGeometry {
    pub fn geometry(&self) -> &RegisterFileGeometry {
        &self.geometry
    }

    pub fn layout(&self) -> &DerivedLayout {
        &self.layout
    }

    pub fn num_tracks(&self) -> u32 {
        self.geometry.num_tracks
    }

    pub fn track_length(&self) -> u32 {
        self.geometry.track_length
    }

    pub fn num_access_ports(&self) -> u32 {
        self.geometry.num_access_ports
    }

    pub fn num_registers(&self) -> u32 {
        self.geometry.num_registers
    }

    pub fn register_bits(&self) -> u32 {
        self.geometry.register_bits
    }

    /// Stable 64-bit fingerprint of the five geometry fields, embedded in
    /// recommendation tables so a table cannot be replayed against a
    /// different register file.
    pub fn fingerprint(&self) -> u64 {
        // FNV-1a over the little-endian field bytes; fixed here so table
        // files stay comparable across builds and platforms.
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let fields = [
            self.geometry.num_tracks,
            self.geometry.track_length,
            self.geometry.num_access_ports,
            self.geometry.num_registers,
            self.geometry.register_bits,
        ];
        let mut hash = OFFSET;
        for field in fields {
            for byte in field.to_le_bytes() {
                hash ^= byte as u64;
                hash = hash.wrapping_mul(PRIME);
            }
        }
        hash
    }
}

/// Energy and latency of the four primitive racetrack operations:
/// detect (read a bit under a port), shift (move one track by one
/// position), remove (clear a bit), insert (nucleate a bit).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    pub detect_energy_fj: f64,
    pub shift_energy_fj: f64,
    pub remove_energy_fj: f64,
    pub insert_energy_fj: f64,
    pub detect_latency_ns: f64,
    pub shift_latency_ns: f64,
    pub remove_latency_ns: f64,
    pub insert_latency_ns: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams {
            detect_energy_fj: 2.0,
            shift_energy_fj: 20.0,
            remove_energy_fj: 20.0,
            insert_energy_fj: 200.0,
            detect_latency_ns: 0.1,
            shift_latency_ns: 0.5,
            remove_latency_ns: 0.8,
            insert_latency_ns: 1.0,
        }
    }
}

impl CostParams {
    /// All parameters must be strictly positive.
    pub fn validate(&self) -> Result<(), GeometryError> {
        let fields = [
            ("detect_energy_fj", self.detect_energy_fj),
            ("shift_energy_fj", self.shift_energy_fj),
            ("remove_energy_fj", self.remove_energy_fj),
            ("insert_energy_fj", self.insert_energy_fj),
            ("detect_latency_ns", self.detect_latency_ns),
            ("shift_latency_ns", self.shift_latency_ns),
            ("remove_latency_ns", self.remove_latency_ns),
            ("insert_latency_ns", self.insert_latency_ns),
        ];
        for (field, value) in fields {
            // NaN compares as None and is rejected with the rest.
            if value.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
                return Err(GeometryError::NonPositiveParam { field });
            }
        }
        Ok(())
    }
}
