use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_potentiostat"));
    c.env_remove("POTENTIOSTAT_SEED")
        .env_remove("SOURCE_DATE_EPOCH");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn run_stdin(args: &[&str], input: &[u8]) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input).unwrap();
    child.wait_with_output().unwrap()
}

fn data_rows(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split('\t').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn single_point_eis_on_decade_rc_row1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.tsv");
    let o = run(&[
        "eis",
        "--cell",
        "rc-table3-row1",
        "--f-start",
        "10080",
        "--f-end",
        "10080",
        "--f-step",
        "50",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], 10080.0);
    assert!((rows[0][1] / 844.81 - 1.0).abs() < 0.02, "{:?}", rows[0]);
    assert!((rows[0][2] + 32.35).abs() < 1.0, "{:?}", rows[0]);
}

#[test]
fn output_is_deterministic_for_fixed_seed() {
    let args = [
        "eis",
        "--cell",
        "redox-dummy",
        "--f-step",
        "990",
        "--noise-sigma",
        "5m",
        "--n-average",
        "2",
    ];
    let a = bin()
        .args(args)
        .env("POTENTIOSTAT_SEED", "42")
        .env("SOURCE_DATE_EPOCH", "0")
        .output()
        .unwrap();
    let b = bin()
        .args(args)
        .args(["--seed", "42", "--timestamp", "0", "--sequential"])
        .output()
        .unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.contains("# seed\t42\n"));
    assert!(text.contains("# timestamp\t0\n"));

    let c = bin().args(args).args(["--seed", "43"]).output().unwrap();
    assert_ne!(text.as_bytes(), c.stdout.as_slice());
}

#[test]
fn compare_identical_files_reports_zero() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.tsv");
    assert!(run(&["eis", "--f-step", "2475", "-o", a.to_str().unwrap()])
        .status
        .success());
    let o = run(&["compare", a.to_str().unwrap(), a.to_str().unwrap()]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("# max_abs_percent\t0\n"));
    assert!(text.contains("# max_abs_phase_deg\t0\n"));
    let rows = text.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(rows, 11);
}

#[test]
fn compare_pairs_nearest_frequency() {
    let dir = tempfile::tempdir().unwrap();
    let dense = dir.path().join("dense.tsv");
    let reference = dir.path().join("ref.tsv");
    std::fs::write(
        &dense,
        "frequency_hz\timpedance_ohm\tphase_deg\n9900\t1000\t-1\n9950\t2000\t-2\n",
    )
    .unwrap();
    std::fs::write(
        &reference,
        "frequency_hz\timpedance_ohm\tphase_deg\n9925\t1003\t-0.5\n",
    )
    .unwrap();
    let o = run(&[
        "compare",
        dense.to_str().unwrap(),
        reference.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let row = text.lines().find(|l| l.starts_with("9925")).unwrap();
    let cols: Vec<&str> = row.split('\t').collect();
    assert_eq!(cols[1], "9900");
    let pct: f64 = cols[4].parse().unwrap();
    assert!((pct - (1000.0 - 1003.0) / 1003.0 * 100.0).abs() < 1e-6);
    // measured − expected, as signed value and magnitude
    assert_eq!(cols[5], "-0.5");
    assert_eq!(cols[6], "0.5");
}

#[test]
fn encode_decode_roundtrip() {
    let o = run(&[
        "encode",
        "cv",
        "--rate-mv-s",
        "1000",
        "--v-start-mv",
        "-500",
        "--v-end-mv",
        "500",
    ]);
    assert!(o.status.success());
    assert_eq!(o.stdout.len(), 22);
    assert_eq!(o.stdout[0], 0x02);
    let d = run_stdin(&["decode"], &o.stdout);
    assert!(d.status.success());
    assert_eq!(
        String::from_utf8(d.stdout).unwrap(),
        "CV_SCAN rate_mv_s=1000 v_start_mv=-500 v_end_mv=500 cycles=1\n"
    );
}

#[test]
fn decode_errors_are_protocol_errors() {
    let frame = run(&["encode", "select-we", "--channel", "3"]).stdout;
    let o = run_stdin(&["decode"], &frame[..21]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("22 bytes"));

    let mut bad = frame.clone();
    bad[2] ^= 0x10;
    assert_eq!(run_stdin(&["decode"], &bad).status.code(), Some(4));
    assert_eq!(
        run(&["encode", "select-we", "--channel", "10"])
            .status
            .code(),
        Some(4)
    );
}

#[test]
fn exit_codes_by_error_class() {
    let o = run(&["eis", "--f-sart", "100"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--f-sart"));
    let o = run(&["eis", "--f-start", "ten"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--f-start"));

    assert_eq!(
        run(&["eis", "--set", "frontend.bogus=1"]).status.code(),
        Some(3)
    );
    assert_eq!(run(&["eis", "--cell", "nonsense"]).status.code(), Some(3));
    assert_eq!(
        run(&["eis", "--f-start", "60k", "--f-end", "60k"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        run(&["eis", "--cell", "R1k", "--we", "1"]).status.code(),
        Some(3)
    );

    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.tsv");
    assert_eq!(
        run(&[
            "compare",
            missing.to_str().unwrap(),
            missing.to_str().unwrap()
        ])
        .status
        .code(),
        Some(5)
    );

    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "frontend.noise_sigma = 1m\nthis line is wrong\n").unwrap();
    let o = run(&["eis", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(6));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let o = run(&[
        "eis",
        "--amplitude",
        "0",
        "--f-start",
        "1k",
        "--f-end",
        "1k",
    ]);
    assert_eq!(o.status.code(), Some(7));
}

#[test]
fn config_file_cells_and_multiplexer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.conf");
    std::fs::write(
        &cfg,
        "# two cells on the mux\ncell.small = (r 2.2k)\ncell.big = (parallel (r 10k) (c 4.4n))\n",
    )
    .unwrap();
    let out = dir.path().join("o.tsv");
    let o = run(&[
        "eis",
        "--config",
        cfg.to_str().unwrap(),
        "--cell",
        "small",
        "--cell",
        "big",
        "--we",
        "0",
        "--f-start",
        "1k",
        "--f-end",
        "1k",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_rows(&out);
    assert!((rows[0][1] / 2200.0 - 1.0).abs() < 0.01, "{rows:?}");
}

#[test]
fn calibration_file_feeds_later_scans() {
    let dir = tempfile::tempdir().unwrap();
    let cal = dir.path().join("cal.tsv");
    let o = run(&[
        "calibrate",
        "--gain-error-tia",
        "0.05",
        "--tia-offset",
        "-10m",
        "-o",
        cal.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&cal).unwrap();
    assert!(text.starts_with("[offsets]\n"));

    let scan = |extra: &[&str]| {
        let out = dir.path().join("s.tsv");
        let mut args = vec![
            "eis",
            "--cell",
            "R2.2k",
            "--f-start",
            "1k",
            "--f-end",
            "1k",
            "--gain-error-tia",
            "0.05",
            "-o",
            out.to_str().unwrap(),
        ];
        args.extend_from_slice(extra);
        assert!(run(&args).status.success());
        data_rows(&out)[0][1]
    };
    let raw = scan(&[]);
    let fixed = scan(&["--calibration", cal.to_str().unwrap()]);
    assert!(
        (raw / 2200.0 - 1.0).abs() > 0.03,
        "gain error not visible: {raw}"
    );
    assert!(
        (fixed / 2200.0 - 1.0).abs() < 0.01,
        "not corrected: {fixed}"
    );
}

#[test]
fn cv_writes_time_ordered_rows() {
    let o = run(&[
        "cv",
        "--cell",
        "R10k",
        "--rate",
        "2",
        "--v-start",
        "-200m",
        "--v-end",
        "200m",
    ]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("time_s\tvoltage_v\tcurrent_a\n"));
    let t: Vec<f64> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split('\t').next().unwrap().parse().unwrap())
        .collect();
    assert!(t.windows(2).all(|w| w[1] > w[0]));
    assert!((t.last().unwrap() - 0.4).abs() < 0.01);
}
