//! Shared definitions for the pipeline binary: the published SRAM
//! register-file reference band and the sweep CSV schema.

/// Reference energy and latency figures for an SRAM register file,
/// used for advisory comparison in reports. Each range is (low, high);
/// SRAM itself is never simulated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SramBaseline {
    pub read_energy_pj: (f64, f64),
    pub write_energy_pj: (f64, f64),
    pub access_latency_ns: (f64, f64),
}

impl Default for SramBaseline {
    fn default() -> Self {
        SramBaseline {
            read_energy_pj: (0.39, 0.71),
            write_energy_pj: (0.8, 1.57),
            access_latency_ns: (164.0, 254.0),
        }
    }
}

impl SramBaseline {
    /// Every range must run low to high.
    pub fn bands_are_ordered(&self) -> bool {
        self.read_energy_pj.0 <= self.read_energy_pj.1
            && self.write_energy_pj.0 <= self.write_energy_pj.1
            && self.access_latency_ns.0 <= self.access_latency_ns.1
    }

    /// Bottom edge of the whole energy band in femtojoules; per-access
    /// energies under this undercut every SRAM access kind.
    pub fn min_energy_fj(&self) -> f64 {
        self.read_energy_pj.0.min(self.write_energy_pj.0) * 1000.0
    }
}

/// Column layout of sweep output. v1 is the static horizontal run, v2
/// the static vertical one; reports validate against this verbatim.
pub const CSV_HEADER: &str = "benchmark,num_aps,num_tracks,track_length,window_size,\
recommended_total_shifts,opt_total_shifts,v1_total_shifts,v2_total_shifts,\
recommended_total_energy,opt_total_energy,v1_total_energy,v2_total_energy,\
recommended_total_latency,opt_total_latency,v1_total_latency,v2_total_latency";
