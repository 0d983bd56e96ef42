mod common;

use std::fs;

use common::{assert_ok, csv_rows, demo_path, path_str, rtrf, stderr, stdout, tmp_dir};

#[test]
fn demo_pipeline_produces_a_csv_row() {
    let dir = tmp_dir("demo-pipeline");
    let listing = demo_path("demo.listing");
    let trace = demo_path("demo.trace");

    let cfg = rtrf(&["cfg", "--listing", &listing, "--trace", &trace]);
    assert_ok(&cfg, "cfg");
    let dump = stdout(&cfg);
    assert!(dump.contains("instrs=12 blocks=6"), "unexpected dump:\n{dump}");
    assert!(dump.contains("taken -> block 1 p=0.6666666666666666"), "{dump}");
    assert!(dump.contains("return -> unknown p=1"), "{dump}");

    let table = dir.join("demo.rec");
    let rec = rtrf(&[
        "recommend", "--listing", &listing, "--trace", &trace, "--window", "8", "--out",
        &path_str(&table),
    ]);
    assert_ok(&rec, "recommend");
    let table_text = fs::read_to_string(&table).unwrap();
    assert!(table_text.starts_with("RECBITS window=8 geomfp="), "{table_text}");
    assert_eq!(table_text.lines().count(), 13, "header plus one line per instruction");

    let sim = rtrf(&[
        "simulate", "--trace", &trace, "--policy", "rec", "--rec-table", &path_str(&table),
        "--window", "8",
    ]);
    assert_ok(&sim, "simulate");
    assert!(stdout(&sim).contains("policy=rec window=8"), "{}", stdout(&sim));

    let csv = dir.join("results.csv");
    let sweep = rtrf(&[
        "sweep", "--trace", &format!("demo={trace}"), "--listing",
        &format!("demo={listing}"), "--windows", "8", "--out", &path_str(&csv),
    ]);
    assert_ok(&sweep, "sweep");
    let rows = csv_rows(&csv);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][..5], ["demo", "2", "32", "64", "8"].map(String::from));

    let report = rtrf(&["report", "--csv", &path_str(&csv), "--trace", &format!("demo={trace}")]);
    assert_ok(&report, "report");
    let summary = stdout(&report);
    assert!(summary.contains("benchmark=demo num_aps=2"), "{summary}");
    assert!(summary.contains("(accesses=27)"), "{summary}");
}

#[test]
fn missing_rec_table_is_a_clear_error() {
    let out = rtrf(&[
        "simulate", "--trace", &demo_path("demo.trace"), "--policy", "rec", "--window", "8",
    ]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("--rec-table is required"), "{}", stderr(&out));
}

#[test]
fn mismatched_tables_are_rejected() {
    let dir = tmp_dir("mismatched-tables");
    let listing = demo_path("demo.listing");
    let trace = demo_path("demo.trace");
    let table = dir.join("demo.rec");
    let rec = rtrf(&[
        "recommend", "--listing", &listing, "--window", "8", "--out", &path_str(&table),
    ]);
    assert_ok(&rec, "recommend");

    let wrong_window = rtrf(&[
        "simulate", "--trace", &trace, "--policy", "rec", "--rec-table", &path_str(&table),
        "--window", "16",
    ]);
    assert!(!wrong_window.status.success());
    assert!(
        stderr(&wrong_window).contains("built for window 8, not 16"),
        "{}",
        stderr(&wrong_window)
    );

    let wrong_geometry = rtrf(&[
        "simulate", "--trace", &trace, "--policy", "rec", "--rec-table", &path_str(&table),
        "--window", "8", "--num-aps", "8",
    ]);
    assert!(!wrong_geometry.status.success());
    assert!(
        stderr(&wrong_geometry).contains("built for geometry"),
        "{}",
        stderr(&wrong_geometry)
    );
}

#[test]
fn port_sweep_shifts_are_non_increasing() {
    let dir = tmp_dir("port-sweep");
    let trace = dir.join("hot.trace");
    let gen = rtrf(&[
        "gen", "--out", &path_str(&trace), "--count", "600", "--working-set", "2",
        "--hot-ratio", "0.97", "--write-fraction", "0.2", "--seed", "3",
    ]);
    assert_ok(&gen, "gen");

    let csv = dir.join("results.csv");
    let sweep = rtrf(&[
        "sweep", "--trace", &format!("hot={}", path_str(&trace)), "--num-aps",
        "2,4,8,16,32", "--windows", "100", "--out", &path_str(&csv),
    ]);
    assert_ok(&sweep, "sweep");
    let rows = csv_rows(&csv);
    assert_eq!(rows.len(), 5);
    let shifts: Vec<u64> = rows.iter().map(|r| r[5].parse().unwrap()).collect();
    for pair in shifts.windows(2) {
        assert!(pair[1] <= pair[0], "shifts rose across a port doubling: {shifts:?}");
    }
}

#[test]
fn window_sweep_covers_all_requested_sizes() {
    let dir = tmp_dir("window-sweep");
    let trace = dir.join("mixed.trace");
    let gen = rtrf(&[
        "gen", "--out", &path_str(&trace), "--phases", "2:0.95,32:0.0", "--phase-length",
        "300", "--repetitions", "2", "--seed", "9",
    ]);
    assert_ok(&gen, "gen");

    let csv = dir.join("results.csv");
    let sweep = rtrf(&[
        "sweep", "--trace", &format!("mixed={}", path_str(&trace)), "--windows",
        "10,100,1000,2000", "--out", &path_str(&csv),
    ]);
    assert_ok(&sweep, "sweep");
    let rows = csv_rows(&csv);
    let windows: Vec<String> = rows.iter().map(|r| r[4].clone()).collect();
    assert_eq!(windows, ["10", "100", "1000", "2000"].map(String::from));
}

#[test]
fn track_sweep_keeps_total_capacity() {
    let dir = tmp_dir("track-sweep");
    let trace = dir.join("hot.trace");
    let gen = rtrf(&["gen", "--out", &path_str(&trace), "--count", "400", "--seed", "4"]);
    assert_ok(&gen, "gen");

    let csv = dir.join("results.csv");
    let sweep = rtrf(&[
        "sweep", "--trace", &format!("hot={}", path_str(&trace)), "--num-tracks",
        "8,16,32,64,128,256", "--num-aps", "8", "--windows", "100", "--out",
        &path_str(&csv),
    ]);
    assert_ok(&sweep, "sweep");
    let rows = csv_rows(&csv);
    assert_eq!(rows.len(), 6);
    for row in &rows {
        let tracks: u64 = row[2].parse().unwrap();
        let width: u64 = row[3].parse().unwrap();
        assert_eq!(tracks * width, 2048, "row {row:?} changed the total capacity");
    }
}

#[test]
fn zero_access_trace_reports_zero_averages() {
    let dir = tmp_dir("zero-access");
    let trace = dir.join("empty.trace");
    fs::write(&trace, "I 1000 nop S - D -\nI 1004 nop S - D -\n").unwrap();

    let csv = dir.join("results.csv");
    let sweep = rtrf(&[
        "sweep", "--trace", &format!("idle={}", path_str(&trace)), "--windows", "100",
        "--out", &path_str(&csv),
    ]);
    assert_ok(&sweep, "sweep");

    let report = rtrf(&[
        "report", "--csv", &path_str(&csv), "--trace", &format!("idle={}", path_str(&trace)),
    ]);
    assert_ok(&report, "report");
    let summary = stdout(&report);
    assert!(summary.contains("warning: benchmark idle has zero accesses"), "{summary}");
    assert!(summary.contains("shifts=0.0000"), "{summary}");
    assert!(summary.contains("ratio: shifts=n/a"), "{summary}");
}

#[test]
fn malformed_csv_is_rejected() {
    let dir = tmp_dir("bad-csv");
    let csv = dir.join("bad.csv");
    fs::write(&csv, "not,a,sweep,header\n").unwrap();
    let report = rtrf(&["report", "--csv", &path_str(&csv)]);
    assert!(!report.status.success());
    assert!(stderr(&report).contains("malformed CSV"), "{}", stderr(&report));
}
