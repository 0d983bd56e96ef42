//! Pipeline driver: generate traces, build CFGs, derive recommendation
//! tables, replay traces under the four policies, sweep geometries into
//! CSV, and summarize results against the SRAM reference band.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use rtrf_cli::{SramBaseline, CSV_HEADER};
use rtrf_core::cfg::{EdgeKind, FlowTarget};
use rtrf_core::{
    access_sequence, build_table, generate_phased, generate_synthetic, isolated_window_costs,
    lopt_schedule, parse_listing, parse_trace, run_versions, serialize_listing, serialize_trace,
    simulate, straight_line_listing, AccessProfile, Cfg, ComparisonRun, CostParams, CostReport,
    CostTriple, LoptObjective, PhasePattern, Policy, ProgramListing, PruneOptions,
    RecommendationTable, RegisterFileGeometry, SyntheticSpec, TraceInstruction,
    ValidatedGeometry,
};

#[derive(Parser)]
#[command(
    name = "rtrf",
    version,
    about = "Trace-driven simulator and offline tuner for a racetrack register file"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic access trace (and optionally its listing)
    Gen(GenArgs),
    /// Print the control-flow graph of a program listing
    Cfg(CfgArgs),
    /// Derive a per-instruction allocation recommendation table
    Recommend(RecommendArgs),
    /// Replay a trace under one policy and report totals
    Simulate(SimulateArgs),
    /// Run trace x geometry x window combinations into a CSV
    Sweep(SweepArgs),
    /// Summarize a sweep CSV against the SRAM reference band
    Report(ReportArgs),
}

#[derive(Args, Clone)]
struct GeometryArgs {
    /// Geometry config file with key=value lines (num_tracks,
    /// track_length, num_aps, num_regs, reg_bits)
    #[arg(long)]
    geometry: Option<PathBuf>,
    /// Number of nanotracks
    #[arg(long)]
    num_tracks: Option<u32>,
    /// Bit positions per nanotrack
    #[arg(long)]
    track_length: Option<u32>,
    /// Access ports per nanotrack
    #[arg(long)]
    num_aps: Option<u32>,
    /// Architectural register count
    #[arg(long)]
    num_regs: Option<u32>,
    /// Bits per register
    #[arg(long)]
    reg_bits: Option<u32>,
}

impl GeometryArgs {
    fn resolve(&self) -> Result<ValidatedGeometry> {
        let mut raw = match &self.geometry {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading geometry file {}", path.display()))?;
                *RegisterFileGeometry::from_config_str(&text)
                    .with_context(|| format!("geometry file {}", path.display()))?
                    .geometry()
            }
            None => RegisterFileGeometry::default(),
        };
        if let Some(v) = self.num_tracks {
            raw.num_tracks = v;
        }
        if let Some(v) = self.track_length {
            raw.track_length = v;
        }
        if let Some(v) = self.num_aps {
            raw.num_access_ports = v;
        }
        if let Some(v) = self.num_regs {
            raw.num_registers = v;
        }
        if let Some(v) = self.reg_bits {
            raw.register_bits = v;
        }
        raw.validate().map_err(|e| anyhow!("invalid geometry: {e}"))
    }
}

#[derive(Args, Clone)]
struct PruneArgs {
    /// Beam width: concurrently explored paths per window
    #[arg(long, default_value_t = 4096)]
    prune_max_paths: usize,
    /// Drop in-progress paths lighter than this weight
    #[arg(long, default_value_t = 1e-6)]
    prune_min_weight: f64,
    /// Shift margin a vertical window must win by before being
    /// recommended; defaults to the geometry's full mode-switch cost
    #[arg(long)]
    hysteresis: Option<f64>,
}

impl PruneArgs {
    fn resolve(&self, geom: &ValidatedGeometry) -> PruneOptions {
        PruneOptions {
            max_paths: self.prune_max_paths,
            min_weight: self.prune_min_weight,
            hysteresis_shifts: self
                .hysteresis
                .unwrap_or_else(|| PruneOptions::for_geometry(geom).hysteresis_shifts),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    StaticH,
    StaticV,
    Rec,
    Lopt,
}

impl PolicyArg {
    fn text(self) -> &'static str {
        match self {
            PolicyArg::StaticH => "static-h",
            PolicyArg::StaticV => "static-v",
            PolicyArg::Rec => "rec",
            PolicyArg::Lopt => "lopt",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LoptObjectiveArg {
    Shifts,
    Energy,
    Latency,
}

impl From<LoptObjectiveArg> for LoptObjective {
    fn from(arg: LoptObjectiveArg) -> Self {
        match arg {
            LoptObjectiveArg::Shifts => LoptObjective::Shifts,
            LoptObjectiveArg::Energy => LoptObjective::EnergyFj,
            LoptObjectiveArg::Latency => LoptObjective::LatencyNs,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    /// Output trace file
    #[arg(long)]
    out: PathBuf,
    /// Also write the trace's straight-line program listing here
    #[arg(long)]
    listing_out: Option<PathBuf>,
    /// Instruction count (ignored when --phases is given)
    #[arg(long, default_value_t = 1000)]
    count: u64,
    /// Registers in the hot set
    #[arg(long, default_value_t = 8)]
    working_set: u32,
    /// Fraction of accesses that hit the hot set
    #[arg(long, default_value_t = 0.9)]
    hot_ratio: f64,
    /// Fraction of instructions that write
    #[arg(long, default_value_t = 0.3)]
    write_fraction: f64,
    /// 0 = values stay near zero, 1 = uniformly random bits
    #[arg(long, default_value_t = 1.0)]
    value_entropy: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Alternating phase profiles as working_set:hot_ratio pairs;
    /// switches generation to the phased pattern
    #[arg(long, value_delimiter = ',')]
    phases: Vec<String>,
    /// Instructions per phase (with --phases)
    #[arg(long, default_value_t = 500)]
    phase_length: u64,
    /// Times the phase list repeats (with --phases)
    #[arg(long, default_value_t = 1)]
    repetitions: u32,
    #[command(flatten)]
    geometry: GeometryArgs,
}

#[derive(Args)]
struct CfgArgs {
    /// Program listing file
    #[arg(long)]
    listing: PathBuf,
    /// Trace used to measure branch probabilities
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Cap on trace instructions consulted for probabilities
    #[arg(long)]
    profile_limit: Option<u64>,
    /// Write the dump here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    geometry: GeometryArgs,
}

#[derive(Args)]
struct RecommendArgs {
    /// Program listing file
    #[arg(long)]
    listing: PathBuf,
    /// Trace used to measure branch probabilities (uniform priors
    /// otherwise)
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Cap on trace instructions consulted for probabilities
    #[arg(long)]
    profile_limit: Option<u64>,
    /// Lookahead window in instructions
    #[arg(long, default_value_t = 100)]
    window: usize,
    /// Output table file
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    prune: PruneArgs,
    #[command(flatten)]
    geometry: GeometryArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// Trace file to replay
    #[arg(long)]
    trace: PathBuf,
    #[arg(long, value_enum)]
    policy: PolicyArg,
    /// Recommendation table file (required with --policy rec)
    #[arg(long)]
    rec_table: Option<PathBuf>,
    /// Instructions per reconfiguration window
    #[arg(long, default_value_t = 100)]
    window: usize,
    /// Metric the locally optimal schedule minimizes
    #[arg(long, value_enum, default_value_t = LoptObjectiveArg::Shifts)]
    lopt_objective: LoptObjectiveArg,
    /// Also write the report here
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    geometry: GeometryArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Benchmark traces as NAME=PATH (repeatable)
    #[arg(long = "trace", value_name = "NAME=PATH", required = true)]
    traces: Vec<String>,
    /// Program listings as NAME=PATH matching trace names; benchmarks
    /// without one run on the trace's straight-line listing
    #[arg(long = "listing", value_name = "NAME=PATH")]
    listings: Vec<String>,
    /// Access-port counts to sweep (default: the base geometry's)
    #[arg(long, value_delimiter = ',')]
    num_aps: Vec<u32>,
    /// Track counts to sweep; width follows so total capacity stays at
    /// num_regs x reg_bits
    #[arg(long, value_delimiter = ',')]
    num_tracks: Vec<u32>,
    /// Window sizes to sweep
    #[arg(long, value_delimiter = ',')]
    windows: Vec<usize>,
    /// Output CSV file
    #[arg(long)]
    out: PathBuf,
    /// Metric the locally optimal schedule minimizes
    #[arg(long, value_enum, default_value_t = LoptObjectiveArg::Shifts)]
    lopt_objective: LoptObjectiveArg,
    #[command(flatten)]
    prune: PruneArgs,
    /// Base geometry config file
    #[arg(long)]
    geometry: Option<PathBuf>,
    /// Base bit positions per nanotrack
    #[arg(long)]
    track_length: Option<u32>,
    /// Architectural register count
    #[arg(long)]
    num_regs: Option<u32>,
    /// Bits per register
    #[arg(long)]
    reg_bits: Option<u32>,
}

#[derive(Args)]
struct ReportArgs {
    /// Sweep results CSV
    #[arg(long)]
    csv: PathBuf,
    /// Traces as NAME=PATH; needed to turn totals into per-access
    /// averages for the matching benchmarks
    #[arg(long = "trace", value_name = "NAME=PATH")]
    traces: Vec<String>,
    #[command(flatten)]
    geometry: GeometryArgs,
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Gen(args) => cmd_gen(args),
        Command::Cfg(args) => cmd_cfg(args),
        Command::Recommend(args) => cmd_recommend(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Report(args) => cmd_report(args),
    }
}

fn read_trace(path: &PathBuf, geom: &ValidatedGeometry) -> Result<Vec<TraceInstruction>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading trace {}", path.display()))?;
    parse_trace(&text, geom).with_context(|| format!("trace {}", path.display()))
}

fn read_listing(path: &PathBuf) -> Result<ProgramListing> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading listing {}", path.display()))?;
    parse_listing(&text).with_context(|| format!("listing {}", path.display()))
}

fn parse_phase(text: &str) -> Result<AccessProfile> {
    let (ws, hot) = text
        .split_once(':')
        .ok_or_else(|| anyhow!("phase {text:?} is not working_set:hot_ratio"))?;
    Ok(AccessProfile {
        working_set: ws.parse().with_context(|| format!("phase {text:?} working set"))?,
        hot_ratio: hot.parse().with_context(|| format!("phase {text:?} hot ratio"))?,
    })
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let geom = args.geometry.resolve()?;
    let trace = if args.phases.is_empty() {
        let spec = SyntheticSpec {
            instruction_count: args.count,
            working_set: args.working_set,
            hot_ratio: args.hot_ratio,
            write_fraction: args.write_fraction,
            value_entropy: args.value_entropy,
            seed: args.seed,
        };
        generate_synthetic(&spec, &geom)
    } else {
        let phases = args
            .phases
            .iter()
            .map(|p| parse_phase(p))
            .collect::<Result<Vec<_>>>()?;
        let pattern = PhasePattern {
            phases,
            phase_length: args.phase_length,
            repetitions: args.repetitions,
            write_fraction: args.write_fraction,
            value_entropy: args.value_entropy,
            seed: args.seed,
        };
        generate_phased(&pattern, &geom)
    };
    fs::write(&args.out, serialize_trace(&trace))
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!("wrote {} instructions to {}", trace.len(), args.out.display());
    if let Some(listing_out) = &args.listing_out {
        let listing = straight_line_listing(&trace)?;
        fs::write(listing_out, serialize_listing(&listing))
            .with_context(|| format!("writing {}", listing_out.display()))?;
        println!("wrote listing to {}", listing_out.display());
    }
    Ok(())
}

fn load_cfg(
    listing_path: &PathBuf,
    trace_path: Option<&PathBuf>,
    profile_limit: Option<u64>,
    geom: &ValidatedGeometry,
) -> Result<Cfg> {
    let mut cfg = Cfg::build(read_listing(listing_path)?);
    if let Some(trace_path) = trace_path {
        let trace = read_trace(trace_path, geom)?;
        cfg.annotate_probabilities(&trace, profile_limit.unwrap_or(u64::MAX))
            .with_context(|| format!("profiling branches from {}", trace_path.display()))?;
    }
    Ok(cfg)
}

fn dump_cfg(cfg: &Cfg) -> String {
    let mut out = String::new();
    let listing = cfg.listing();
    let _ = writeln!(out, "instrs={} blocks={}", listing.len(), cfg.blocks().len());
    for (idx, block) in cfg.blocks().iter().enumerate() {
        let first = listing.entry(block.first_instr).address;
        let last = listing.entry(block.end_instr - 1).address;
        let _ = writeln!(
            out,
            "block {idx}: addrs {first:x}..{last:x} instrs {}..{}",
            block.first_instr, block.end_instr
        );
        for edge in cfg.block_edges(idx) {
            let kind = match edge.kind {
                EdgeKind::Fallthrough => "fallthrough",
                EdgeKind::Jump => "jump",
                EdgeKind::Taken => "taken",
                EdgeKind::NotTaken => "not-taken",
                EdgeKind::Call => "call",
                EdgeKind::Return => "return",
            };
            let target = match edge.target {
                FlowTarget::Block(b) => format!("block {b}"),
                FlowTarget::Unknown => "unknown".to_string(),
            };
            let _ = writeln!(out, "  {kind} -> {target} p={}", edge.probability);
        }
    }
    out
}

fn cmd_cfg(args: CfgArgs) -> Result<()> {
    let geom = args.geometry.resolve()?;
    let cfg = load_cfg(&args.listing, args.trace.as_ref(), args.profile_limit, &geom)?;
    let dump = dump_cfg(&cfg);
    match &args.out {
        Some(path) => fs::write(path, dump)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{dump}"),
    }
    Ok(())
}

fn cmd_recommend(args: RecommendArgs) -> Result<()> {
    let geom = args.geometry.resolve()?;
    let cfg = load_cfg(&args.listing, args.trace.as_ref(), args.profile_limit, &geom)?;
    let opts = args.prune.resolve(&geom);
    let table = build_table(&cfg, args.window, &geom, &opts)?;
    fs::write(&args.out, table.serialize())
        .with_context(|| format!("writing {}", args.out.display()))?;
    let vertical = table.entries().filter(|(_, m)| m.to_bit() == 1).count();
    println!(
        "wrote {} recommendations ({} vertical, {} horizontal) to {}",
        table.len(),
        vertical,
        table.len() - vertical,
        args.out.display()
    );
    Ok(())
}

fn format_report(policy: &str, window: usize, geom: &ValidatedGeometry, r: &CostReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "policy={policy} window={window} geomfp={:016x}",
        geom.fingerprint()
    );
    let _ = writeln!(
        out,
        "reads={} writes={} accesses={} mode_switches={}",
        r.reads,
        r.writes,
        r.accesses(),
        r.mode_switches
    );
    let _ = writeln!(out, "total_shifts={}", r.totals.shifts);
    let _ = writeln!(out, "total_energy_fj={}", r.totals.energy_fj);
    let _ = writeln!(out, "total_latency_ns={}", r.totals.latency_ns);
    let _ = writeln!(out, "avg_shifts_per_access={}", r.avg_shifts_per_access());
    let _ = writeln!(out, "avg_energy_per_access_fj={}", r.avg_energy_per_access_fj());
    let _ = writeln!(out, "avg_latency_per_access_ns={}", r.avg_latency_per_access_ns());
    out
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let geom = args.geometry.resolve()?;
    let params = CostParams::default();
    let trace = read_trace(&args.trace, &geom)?;
    let report = match args.policy {
        PolicyArg::StaticH => {
            simulate(&geom, &params, &trace, Policy::StaticHorizontal, args.window)?
        }
        PolicyArg::StaticV => {
            simulate(&geom, &params, &trace, Policy::StaticVertical, args.window)?
        }
        PolicyArg::Rec => {
            let path = args
                .rec_table
                .as_ref()
                .ok_or_else(|| anyhow!("--rec-table is required with --policy rec"))?;
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading table {}", path.display()))?;
            let table = RecommendationTable::parse(&text)
                .with_context(|| format!("table {}", path.display()))?;
            table
                .validate_for(&geom, args.window)
                .with_context(|| format!("table {}", path.display()))?;
            simulate(&geom, &params, &trace, Policy::Recommended(&table), args.window)?
        }
        PolicyArg::Lopt => {
            let costs = isolated_window_costs(&geom, &params, &trace, args.window)?;
            let schedule = lopt_schedule(&costs, args.lopt_objective.into());
            simulate(&geom, &params, &trace, Policy::LocalOptimal(&schedule), args.window)?
        }
    };
    let text = format_report(args.policy.text(), args.window, &geom, &report);
    print!("{text}");
    if let Some(path) = &args.out {
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn parse_named_paths(pairs: &[String], what: &str) -> Result<Vec<(String, PathBuf)>> {
    pairs
        .iter()
        .map(|pair| {
            let (name, path) = pair
                .split_once('=')
                .ok_or_else(|| anyhow!("{what} {pair:?} is not NAME=PATH"))?;
            if name.is_empty() || name.contains(',') || name.contains('"') {
                bail!("{what} name {name:?} must be nonempty and free of commas and quotes");
            }
            Ok((name.to_string(), PathBuf::from(path)))
        })
        .collect()
}

struct SweepRow {
    bench: usize,
    num_aps: u32,
    num_tracks: u32,
    track_length: u32,
    window: usize,
}

fn csv_row(name: &str, row: &SweepRow, run: &ComparisonRun) -> String {
    let (rec, opt, v1, v2) = (
        run.recommended.totals,
        run.local_optimal.totals,
        run.static_horizontal.totals,
        run.static_vertical.totals,
    );
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        name,
        row.num_aps,
        row.num_tracks,
        row.track_length,
        row.window,
        rec.shifts,
        opt.shifts,
        v1.shifts,
        v2.shifts,
        rec.energy_fj,
        opt.energy_fj,
        v1.energy_fj,
        v2.energy_fj,
        rec.latency_ns,
        opt.latency_ns,
        v1.latency_ns,
        v2.latency_ns
    )
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let base = GeometryArgs {
        geometry: args.geometry.clone(),
        num_tracks: None,
        track_length: args.track_length,
        num_aps: None,
        num_regs: args.num_regs,
        reg_bits: args.reg_bits,
    }
    .resolve()?;
    let params = CostParams::default();

    let trace_paths = parse_named_paths(&args.traces, "--trace")?;
    let listing_paths: BTreeMap<String, PathBuf> =
        parse_named_paths(&args.listings, "--listing")?.into_iter().collect();
    for name in listing_paths.keys() {
        if !trace_paths.iter().any(|(n, _)| n == name) {
            bail!("--listing {name} has no matching --trace");
        }
    }

    // Traces parse against the base geometry; register indices and
    // widths do not depend on the swept dimensions.
    let mut benchmarks = Vec::new();
    for (name, path) in &trace_paths {
        let trace = read_trace(path, &base)?;
        let cfg = match listing_paths.get(name) {
            Some(listing) => {
                let mut cfg = Cfg::build(read_listing(listing)?);
                cfg.annotate_probabilities(&trace, u64::MAX)
                    .with_context(|| format!("profiling branches of benchmark {name}"))?;
                cfg
            }
            None => Cfg::build(straight_line_listing(&trace)?),
        };
        benchmarks.push((name.clone(), trace, cfg));
    }

    let aps = if args.num_aps.is_empty() {
        vec![base.num_access_ports()]
    } else {
        args.num_aps.clone()
    };
    let tracks_swept = !args.num_tracks.is_empty();
    let tracks = if tracks_swept { args.num_tracks.clone() } else { vec![base.num_tracks()] };
    let windows = if args.windows.is_empty() { vec![100] } else { args.windows.clone() };
    let capacity = base.num_registers() as u64 * base.register_bits() as u64;

    let mut rows = Vec::new();
    let mut skipped = 0u32;
    for (bench, (bench_name, _, _)) in benchmarks.iter().enumerate() {
        for &num_aps in &aps {
            for &num_tracks in &tracks {
                let track_length = if tracks_swept {
                    u32::try_from(capacity / num_tracks.max(1) as u64).unwrap_or(u32::MAX)
                } else {
                    base.track_length()
                };
                for &window in &windows {
                    let row =
                        SweepRow { bench, num_aps, num_tracks, track_length, window };
                    let raw = RegisterFileGeometry {
                        num_tracks: row.num_tracks,
                        track_length: row.track_length,
                        num_access_ports: row.num_aps,
                        num_registers: base.num_registers(),
                        register_bits: base.register_bits(),
                    };
                    match raw.validate() {
                        Ok(_) if row.window == 0 => {
                            skipped += 1;
                            eprintln!(
                                "warning: skipping {} aps={} tracks={} width={}: \
                                 window must be positive",
                                bench_name, row.num_aps, row.num_tracks,
                                row.track_length
                            );
                        }
                        Ok(_) => rows.push(row),
                        Err(e) => {
                            skipped += 1;
                            eprintln!(
                                "warning: skipping {} aps={} tracks={} width={}: {e}",
                                bench_name, row.num_aps, row.num_tracks,
                                row.track_length
                            );
                        }
                    }
                }
            }
        }
    }

    let objective: LoptObjective = args.lopt_objective.into();
    let lines = rows
        .par_iter()
        .map(|row| -> Result<String> {
            let (name, trace, cfg) = &benchmarks[row.bench];
            let geom = RegisterFileGeometry {
                num_tracks: row.num_tracks,
                track_length: row.track_length,
                num_access_ports: row.num_aps,
                num_registers: base.num_registers(),
                register_bits: base.register_bits(),
            }
            .validate()
            .expect("row geometry was validated before scheduling");
            let opts = args.prune.resolve(&geom);
            let table = build_table(cfg, row.window, &geom, &opts)?;
            let run = run_versions(&geom, &params, trace, &table, row.window, objective)?;
            Ok(csv_row(name, row, &run))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = String::with_capacity(lines.len() * 128 + CSV_HEADER.len() + 1);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for line in &lines {
        out.push_str(line);
        out.push('\n');
    }
    fs::write(&args.out, out).with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "wrote {} rows to {} ({} skipped)",
        lines.len(),
        args.out.display(),
        skipped
    );
    Ok(())
}

struct CsvRow {
    benchmark: String,
    num_aps: u32,
    num_tracks: u32,
    track_length: u32,
    window: usize,
    rec: CostTriple,
    v1: CostTriple,
    v2: CostTriple,
}

fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == CSV_HEADER => {}
        Some(header) => bail!("malformed CSV: unexpected header {header:?}"),
        None => bail!("malformed CSV: empty file"),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 17 {
            bail!("malformed CSV: line {line_no} has {} fields, expected 17", fields.len());
        }
        let num = |i: usize| -> Result<f64> {
            fields[i]
                .parse()
                .map_err(|_| anyhow!("malformed CSV: line {line_no} field {} is not a number", i + 1))
        };
        let int = |i: usize| -> Result<u64> {
            fields[i]
                .parse()
                .map_err(|_| anyhow!("malformed CSV: line {line_no} field {} is not an integer", i + 1))
        };
        // The opt columns are validated even though the summary only
        // compares rec against the statics.
        let _opt = CostTriple { shifts: int(6)?, energy_fj: num(10)?, latency_ns: num(14)? };
        rows.push(CsvRow {
            benchmark: fields[0].to_string(),
            num_aps: int(1)? as u32,
            num_tracks: int(2)? as u32,
            track_length: int(3)? as u32,
            window: int(4)? as usize,
            rec: CostTriple {
                shifts: int(5)?,
                energy_fj: num(9)?,
                latency_ns: num(13)?,
            },
            v1: CostTriple {
                shifts: int(7)?,
                energy_fj: num(11)?,
                latency_ns: num(15)?,
            },
            v2: CostTriple {
                shifts: int(8)?,
                energy_fj: num(12)?,
                latency_ns: num(16)?,
            },
        });
    }
    Ok(rows)
}

fn ratio(worst: f64, rec: f64) -> String {
    if rec == 0.0 {
        "n/a".to_string()
    } else {
        format!("{:.4}", worst / rec)
    }
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let text = fs::read_to_string(&args.csv)
        .with_context(|| format!("reading {}", args.csv.display()))?;
    let rows = parse_csv(&text)?;
    let geom = args.geometry.resolve()?;

    let mut access_counts: BTreeMap<String, u64> = BTreeMap::new();
    for (name, path) in parse_named_paths(&args.traces, "--trace")? {
        let trace = read_trace(&path, &geom)?;
        let accesses = trace.iter().map(|i| access_sequence(i).len() as u64).sum();
        access_counts.insert(name, accesses);
    }

    let sram = SramBaseline::default();
    for row in &rows {
        println!(
            "benchmark={} num_aps={} num_tracks={} track_length={} window_size={}",
            row.benchmark, row.num_aps, row.num_tracks, row.track_length, row.window
        );
        let worst_shifts = row.v1.shifts.max(row.v2.shifts) as f64;
        let worst_energy = row.v1.energy_fj.max(row.v2.energy_fj);
        let worst_latency = row.v1.latency_ns.max(row.v2.latency_ns);
        println!(
            "  worst-static/rec ratio: shifts={} energy={} latency={}",
            ratio(worst_shifts, row.rec.shifts as f64),
            ratio(worst_energy, row.rec.energy_fj),
            ratio(worst_latency, row.rec.latency_ns)
        );
        match access_counts.get(&row.benchmark) {
            Some(0) => {
                println!(
                    "  rec per-access: shifts=0.0000 energy_fj=0.0000 latency_ns=0.0000 \
                     (accesses=0)"
                );
                println!("  warning: benchmark {} has zero accesses", row.benchmark);
            }
            Some(&accesses) => {
                let n = accesses as f64;
                let avg_energy = row.rec.energy_fj / n;
                println!(
                    "  rec per-access: shifts={:.4} energy_fj={:.4} latency_ns={:.4} \
                     (accesses={})",
                    row.rec.shifts as f64 / n,
                    avg_energy,
                    row.rec.latency_ns / n,
                    accesses
                );
                let verdict = if avg_energy < sram.min_energy_fj() {
                    "below the SRAM band"
                } else {
                    "not below the SRAM band"
                };
                println!(
                    "  rec energy per access is {verdict} \
                     (read {:.0}-{:.0} fJ, write {:.0}-{:.0} fJ)",
                    sram.read_energy_pj.0 * 1000.0,
                    sram.read_energy_pj.1 * 1000.0,
                    sram.write_energy_pj.0 * 1000.0,
                    sram.write_energy_pj.1 * 1000.0
                );
            }
            None => {
                println!(
                    "  rec per-access: unavailable (pass --trace {}=PATH to compute)",
                    row.benchmark
                );
            }
        }
    }
    Ok(())
}
