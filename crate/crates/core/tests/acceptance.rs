//! Acceptance gate for the cost model, simulator, and recommender.
//! Runs without the default test harness so every criterion prints one
//! [PASS]/[FAIL] line even when an earlier one fails; the process exit
//! code reports overall success.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};

use rtrf_core::cfg::{straight_line_listing, Cfg};
use rtrf_core::recommend::{
    build_table, enumerate_paths, recommend_bit, window_scores, PruneOptions,
};
use rtrf_core::sim::{isolated_window_costs, simulate, Policy};
use rtrf_core::trace::{
    generate_phased, generate_synthetic, AccessProfile, PhasePattern, SyntheticSpec,
};
use rtrf_core::{
    access_cost, shift_cost_horizontal, shift_cost_vertical, AccessKind, AllocationMode,
    CostParams, CostReport, RegisterFileGeometry, RegisterValue, ValidatedGeometry,
};

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {{
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($arg)+));
        }
    }};
}

type Criterion = (u32, &'static str, fn() -> Result<(), String>);

fn main() {
    let criteria: &[Criterion] = &[
        (1, "pinned per-operation energy and latency constants", criterion_1),
        (2, "closed-form shift costs match a mechanical port-walk oracle", criterion_2),
        (3, "one displaced bit costs exactly one recirculation on writes", criterion_3),
        (4, "per-window lower bound never exceeds the better static run", criterion_4),
        (5, "more ports strictly cut per-access costs; phased run halves worst static energy", criterion_5),
        (6, "recommendations are window-stable and short windows switch more", criterion_6),
        (7, "beam recommendation equals exhaustive path expansion", criterion_7),
    ];
    let mut failures = 0;
    for &(n, desc, check) in criteria {
        match catch_unwind(AssertUnwindSafe(check)) {
            Ok(Ok(())) => println!("[PASS] criterion {n}: {desc}"),
            Ok(Err(msg)) => {
                println!("[FAIL] criterion {n}: {desc}: {msg}");
                failures += 1;
            }
            Err(_) => {
                println!("[FAIL] criterion {n}: {desc}: panicked");
                failures += 1;
            }
        }
    }
    if failures > 0 {
        eprintln!("acceptance: {failures} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("acceptance: all {} criteria passed", criteria.len());
}

fn default_geom() -> ValidatedGeometry {
    RegisterFileGeometry::default().validate().unwrap()
}

fn criterion_1() -> Result<(), String> {
    let p = CostParams::default();
    let checks = [
        ("detect energy", p.detect_energy_fj, 2.0),
        ("shift energy", p.shift_energy_fj, 20.0),
        ("remove energy", p.remove_energy_fj, 20.0),
        ("insert energy", p.insert_energy_fj, 200.0),
        ("detect latency", p.detect_latency_ns, 0.1),
        ("shift latency", p.shift_latency_ns, 0.5),
        ("remove latency", p.remove_latency_ns, 0.8),
        ("insert latency", p.insert_latency_ns, 1.0),
    ];
    for (name, actual, expected) in checks {
        ensure!(actual == expected, "{name} is {actual}, expected {expected}");
    }
    Ok(())
}

/// Walks one track's port segment position by position: forward to the
/// far end, then back home, once per track the register occupies.
fn oracle_horizontal_shifts(geom: &ValidatedGeometry, reg: u32) -> u64 {
    let track_len = geom.track_length() as u64;
    let bits = geom.register_bits() as u64;
    let segment = (geom.track_length() / geom.num_access_ports()) as u64;
    let mut tracks = BTreeSet::new();
    for bit in 0..bits {
        tracks.insert((reg as u64 * bits + bit) / track_len);
    }
    let mut count = 0u64;
    for _ in &tracks {
        let mut pos = 0u64;
        while pos + 1 < segment {
            pos += 1;
            count += 1;
        }
        while pos > 0 {
            pos -= 1;
            count += 1;
        }
    }
    count
}

/// Registers are packed into aligned stops in index order; each stop
/// exposes one bit per port on every track, so it holds as many
/// registers as fit into tracks x ports bits.
fn oracle_alignment_state(geom: &ValidatedGeometry, reg: u32) -> u64 {
    let visible = geom.num_tracks() as u64 * geom.num_access_ports() as u64;
    let per_stop = visible / geom.register_bits() as u64;
    reg as u64 / per_stop
}

/// Moves the whole track bundle one aligned stop at a time; every stop
/// advances each of the tracks by one position.
fn oracle_walk_shifts(geom: &ValidatedGeometry, from: u64, to: u64) -> u64 {
    let mut count = 0u64;
    let mut state = from;
    while state != to {
        state = if state < to { state + 1 } else { state - 1 };
        for _ in 0..geom.num_tracks() {
            count += 1;
        }
    }
    count
}

fn criterion_2() -> Result<(), String> {
    let sizes = [4u32, 8, 16, 32, 64];
    let mut combos = 0u64;
    let mut pair_checks = 0u64;
    for &tracks in &sizes {
        for &track_len in &sizes {
            for &bits in &sizes {
                let full = tracks as u64 * track_len as u64 / bits as u64;
                for regs in [full, full / 2] {
                    let Ok(regs) = u32::try_from(regs) else { continue };
                    if regs == 0 {
                        continue;
                    }
                    let mut ports = 1u32;
                    while ports <= track_len {
                        let geom = RegisterFileGeometry {
                            num_tracks: tracks,
                            track_length: track_len,
                            num_access_ports: ports,
                            num_registers: regs,
                            register_bits: bits,
                        };
                        ports *= 2;
                        let Ok(g) = geom.validate() else { continue };
                        combos += 1;

                        let closed_h = shift_cost_horizontal(&g);
                        for reg in 0..regs {
                            let mech = oracle_horizontal_shifts(&g, reg);
                            ensure!(
                                mech == closed_h,
                                "horizontal N={tracks} W={track_len} B={bits} ap={}: \
                                 reg {reg} walks {mech}, formula says {closed_h}",
                                g.num_access_ports()
                            );
                        }

                        let states: Vec<u64> =
                            (0..regs).map(|r| oracle_alignment_state(&g, r)).collect();
                        let max_state = *states.last().unwrap() as usize;
                        let mut walks: Vec<Option<u64>> = vec![None; max_state + 1];
                        for a in 0..regs {
                            for b in 0..regs {
                                let (sa, sb) = (states[a as usize], states[b as usize]);
                                let d = sa.abs_diff(sb) as usize;
                                let mech = *walks[d].get_or_insert_with(|| {
                                    oracle_walk_shifts(&g, sa.min(sb), sa.max(sb))
                                });
                                let closed = shift_cost_vertical(&g, a, b)
                                    .map_err(|e| e.to_string())?;
                                ensure!(
                                    closed == mech,
                                    "vertical N={tracks} W={track_len} B={bits} ap={}: \
                                     {a}->{b} walks {mech}, formula says {closed}",
                                    g.num_access_ports()
                                );
                                pair_checks += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    ensure!(combos >= 100, "only {combos} geometry combinations were feasible");
    ensure!(pair_checks > 1_000_000, "only {pair_checks} register pairs were checked");
    Ok(())
}

fn criterion_3() -> Result<(), String> {
    let g = default_geom();
    let p = CostParams::default();
    let write = |old: u64, new: u64| {
        access_cost(
            &g,
            &p,
            AllocationMode::Horizontal,
            AccessKind::Write,
            0,
            3,
            Some(&RegisterValue::from_u64(old, 64).unwrap()),
            Some(&RegisterValue::from_u64(new, 64).unwrap()),
        )
        .unwrap()
    };
    // 0101 -> 0001 strands one set bit; it recirculates instead of
    // being destroyed and re-nucleated.
    let displaced = write(0b0101, 0b0001);
    let clean = write(0b0001, 0b0001);
    ensure!(
        displaced.energy_fj - clean.energy_fj == 40.0,
        "recirculating one bit added {} fJ, expected exactly 40",
        displaced.energy_fj - clean.energy_fj
    );
    ensure!(
        p.shift_latency_ns + p.remove_latency_ns == 1.3,
        "recirculation latency term is not exactly 1.3 ns"
    );
    let latency_delta = displaced.latency_ns - clean.latency_ns;
    ensure!(
        (latency_delta - 1.3).abs() < 1e-12,
        "recirculating one bit added {latency_delta} ns, expected 1.3"
    );
    ensure!(displaced.shifts == clean.shifts, "shift counts must not differ");

    // The opposite direction nucleates one new bit.
    let grown = write(0b0001, 0b0101);
    ensure!(
        grown.energy_fj - clean.energy_fj == 200.0,
        "nucleating one bit added {} fJ, expected exactly 200",
        grown.energy_fj - clean.energy_fj
    );
    ensure!(
        grown.latency_ns - clean.latency_ns == 1.0,
        "nucleating one bit added {} ns, expected exactly 1",
        grown.latency_ns - clean.latency_ns
    );
    Ok(())
}

fn criterion_4() -> Result<(), String> {
    let geom = default_geom();
    let params = CostParams::default();
    for seed in 0..100u64 {
        let spec = SyntheticSpec {
            instruction_count: 1200,
            working_set: 1 + (seed % 8) as u32 * 4,
            hot_ratio: 0.2 + (seed % 7) as f64 * 0.12,
            write_fraction: (seed % 5) as f64 * 0.2,
            value_entropy: (seed % 4) as f64,
            seed,
        };
        let window = 25 * (1 + (seed % 4) as usize);
        let trace = generate_synthetic(&spec, &geom);
        let windows = isolated_window_costs(&geom, &params, &trace, window)
            .map_err(|e| e.to_string())?;
        let bound: u64 =
            windows.iter().map(|w| w.horizontal.shifts.min(w.vertical.shifts)).sum();
        let h = simulate(&geom, &params, &trace, Policy::StaticHorizontal, window)
            .map_err(|e| e.to_string())?;
        let v = simulate(&geom, &params, &trace, Policy::StaticVertical, window)
            .map_err(|e| e.to_string())?;
        let best = h.totals.shifts.min(v.totals.shifts);
        ensure!(
            bound <= best,
            "seed {seed}: window bound {bound} exceeds best static {best}"
        );
    }
    Ok(())
}

fn rec_report(
    geom: &ValidatedGeometry,
    params: &CostParams,
    trace: &[rtrf_core::TraceInstruction],
    window: usize,
    opts: &PruneOptions,
) -> Result<CostReport, String> {
    let cfg = Cfg::build(straight_line_listing(trace).map_err(|e| e.to_string())?);
    let table = build_table(&cfg, window, geom, opts).map_err(|e| e.to_string())?;
    simulate(geom, params, trace, Policy::Recommended(&table), window)
        .map_err(|e| e.to_string())
}

fn criterion_5() -> Result<(), String> {
    let params = CostParams::default();
    let pattern = PhasePattern {
        phases: vec![
            AccessProfile { working_set: 2, hot_ratio: 0.95 },
            AccessProfile { working_set: 32, hot_ratio: 0.0 },
        ],
        phase_length: 500,
        repetitions: 2,
        write_fraction: 0.15,
        value_entropy: 1.0,
        seed: 77,
    };
    let base = RegisterFileGeometry::default().validate().unwrap();
    let trace = generate_phased(&pattern, &base);

    let mut prev: Option<(u32, CostReport)> = None;
    for ports in [2u32, 4, 8, 16, 32] {
        let geom = RegisterFileGeometry {
            num_access_ports: ports,
            ..RegisterFileGeometry::default()
        }
        .validate()
        .unwrap();
        let report =
            rec_report(&geom, &params, &trace, 100, &PruneOptions::for_geometry(&geom))?;
        if let Some((p_ports, p_report)) = prev {
            let pairs = [
                ("shifts", report.avg_shifts_per_access(), p_report.avg_shifts_per_access()),
                (
                    "energy",
                    report.avg_energy_per_access_fj(),
                    p_report.avg_energy_per_access_fj(),
                ),
                (
                    "latency",
                    report.avg_latency_per_access_ns(),
                    p_report.avg_latency_per_access_ns(),
                ),
            ];
            for (metric, now, before) in pairs {
                ensure!(
                    now < before,
                    "per-access {metric} did not drop going from {p_ports} to {ports} \
                     ports: {before} -> {now}"
                );
            }
        }
        prev = Some((ports, report));
    }

    // Evenly alternating phases: the adaptive run must use at most half
    // the energy of the worse static allocation.
    let alternating = PhasePattern {
        phases: vec![
            AccessProfile { working_set: 2, hot_ratio: 0.98 },
            AccessProfile { working_set: 32, hot_ratio: 0.0 },
        ],
        phase_length: 1000,
        repetitions: 2,
        write_fraction: 0.05,
        value_entropy: 0.5,
        seed: 101,
    };
    let geom = default_geom();
    let trace = generate_phased(&alternating, &geom);
    let rec = rec_report(&geom, &params, &trace, 100, &PruneOptions::for_geometry(&geom))?;
    let h = simulate(&geom, &params, &trace, Policy::StaticHorizontal, 100)
        .map_err(|e| e.to_string())?;
    let v = simulate(&geom, &params, &trace, Policy::StaticVertical, 100)
        .map_err(|e| e.to_string())?;
    let worst = h.totals.energy_fj.max(v.totals.energy_fj);
    ensure!(
        rec.totals.energy_fj <= 0.5 * worst,
        "adaptive energy {} exceeds half of the worst static {}",
        rec.totals.energy_fj,
        worst
    );
    Ok(())
}

fn criterion_6() -> Result<(), String> {
    let geom = default_geom();
    let params = CostParams::default();
    let pattern = PhasePattern {
        phases: vec![
            AccessProfile { working_set: 2, hot_ratio: 0.9 },
            AccessProfile { working_set: 32, hot_ratio: 0.0 },
        ],
        phase_length: 2000,
        repetitions: 1,
        write_fraction: 0.1,
        value_entropy: 1.0,
        seed: 13,
    };
    let trace = generate_phased(&pattern, &geom);
    let opts = PruneOptions { hysteresis_shifts: 0.0, ..PruneOptions::default() };

    let mut reports = Vec::new();
    for window in [100usize, 1000, 2000] {
        reports.push((window, rec_report(&geom, &params, &trace, window, &opts)?));
    }
    type Metric = (&'static str, fn(&CostReport) -> f64);
    let metrics: [Metric; 3] = [
        ("shifts", |r| r.totals.shifts as f64),
        ("energy", |r| r.totals.energy_fj),
        ("latency", |r| r.totals.latency_ns),
    ];
    for (metric, pick) in metrics {
        let values: Vec<f64> = reports.iter().map(|(_, r)| pick(r)).collect();
        let max = values.iter().cloned().fold(f64::MIN, f64::max);
        let min = values.iter().cloned().fold(f64::MAX, f64::min);
        ensure!(
            max <= 1.10 * min,
            "{metric} varies more than 10% across windows 100/1000/2000: {values:?}"
        );
    }

    let fine = rec_report(&geom, &params, &trace, 10, &opts)?;
    let coarse = reports[0].1;
    ensure!(
        fine.mode_switches > coarse.mode_switches,
        "window 10 switched {} times, window 100 {} times; expected strictly more",
        fine.mode_switches,
        coarse.mode_switches
    );
    Ok(())
}

fn criterion_7() -> Result<(), String> {
    let geom = default_geom();
    let opts =
        PruneOptions { max_paths: usize::MAX, min_weight: 0.0, hysteresis_shifts: 0.0 };
    let mut checked = 0u64;
    for seed in 0..200u64 {
        let cfg = Cfg::build(common::random_listing(seed, 12, 32));
        for start in 0..cfg.listing().len() {
            for window in 0..=8usize {
                let set = enumerate_paths(&cfg, start, window, &opts);
                ensure!(
                    set.pruned_weight == 0.0,
                    "seed {seed} start {start} window {window}: unexpected pruning"
                );
                let total: f64 = set.paths.iter().map(|p| p.weight).sum();
                ensure!(
                    (total - 1.0).abs() < 1e-9,
                    "seed {seed} start {start} window {window}: weights sum to {total}"
                );

                let (h, v) =
                    window_scores(&cfg, start, window, &geom, &opts).map_err(|e| e.to_string())?;
                let (rh, rv) = common::reference_scores(&cfg, start, window, &geom);
                ensure!(
                    (h - rh).abs() <= 1e-9 * rh.abs().max(1.0),
                    "seed {seed} start {start} window {window}: horizontal {h} vs reference {rh}"
                );
                ensure!(
                    (v - rv).abs() <= 1e-9 * rv.abs().max(1.0),
                    "seed {seed} start {start} window {window}: vertical {v} vs reference {rv}"
                );

                let expected = if rv < rh {
                    AllocationMode::Vertical
                } else {
                    AllocationMode::Horizontal
                };
                let got =
                    recommend_bit(&cfg, start, window, &geom, &opts).map_err(|e| e.to_string())?;
                ensure!(
                    got == expected,
                    "seed {seed} start {start} window {window}: picked {got}, reference {expected}"
                );
                checked += 1;
            }
        }
    }
    ensure!(checked > 5_000, "only {checked} recommendation sites were compared");
    Ok(())
}
