//! `potentiostat` — batch front end for the simulator.
//!
//! Exit codes: 0 ok, 2 usage, 3 invalid input or configuration, 4 protocol,
//! 5 I/O, 6 parse, 7 measurement failure.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use potentiostat_core::calibration::{
    apply_calibration, apply_cv_calibration, calibrate_offsets, CalibrationTable,
};
use potentiostat_core::cell::{resolve_cell, CellNetwork};
use potentiostat_core::dsp::{
    cv_scan, eis_measure_point, eis_scan_with, CvScanParams, EisScanParams, Execution,
    InstrumentConfig,
};
use potentiostat_core::frontend::{select_working_electrode, ElectrodeMux};
use potentiostat_core::fsutil::write_atomic;
use potentiostat_core::host::{
    align_datasets, decode_command, encode_command, format_sig, parse_config, read_dataset,
    set_config_value, Command, ConfigFile, EisRow, ScanDataset,
};
use potentiostat_core::signal::derive_seed;
use potentiostat_core::units::parse_si;
use potentiostat_core::Error;

#[derive(Parser)]
#[command(
    name = "potentiostat",
    version,
    about = "Simulated miniature potentiostat"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Impedance sweep; writes frequency, |Z| and phase as TSV.
    Eis(EisArgs),
    /// Cyclic voltammogram; writes time, voltage and current as TSV.
    Cv(CvArgs),
    /// Offset, phase and gain calibration against reference resistors.
    Calibrate(CalibrateArgs),
    /// Pair each reference point with the nearest dense point and report errors.
    Compare(CompareArgs),
    /// Write one 22-byte command frame.
    Encode(EncodeArgs),
    /// Read one 22-byte command frame and print it.
    Decode(DecodeArgs),
}

fn si(s: &str) -> Result<f64, String> {
    parse_si(s).map_err(|e| e.to_string())
}

fn key_value(s: &str) -> Result<(String, String), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected KEY=VALUE, got {s:?}"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

/// Instrument settings shared by the measuring subcommands.
#[derive(Args)]
struct InstrumentArgs {
    /// Config file with `key = value` settings and `cell.<name>` definitions.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one setting, e.g. `--set frontend.noise_sigma=1m` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = key_value)]
    overrides: Vec<(String, String)>,
    /// TIA feedback resistance, ohms.
    #[arg(long, value_parser = si)]
    tia_feedback: Option<f64>,
    /// Control amplifier attenuation (DAC volts per cell volt).
    #[arg(long, value_parser = si)]
    control_attenuation: Option<f64>,
    #[arg(long, value_parser = si)]
    electrometer_gain: Option<f64>,
    /// Electrometer output offset, volts.
    #[arg(long, value_parser = si, allow_hyphen_values = true)]
    electrometer_offset: Option<f64>,
    /// TIA output offset, volts.
    #[arg(long, value_parser = si, allow_hyphen_values = true)]
    tia_offset: Option<f64>,
    #[arg(long, value_parser = si, allow_hyphen_values = true)]
    gain_error_electrometer: Option<f64>,
    #[arg(long, value_parser = si, allow_hyphen_values = true)]
    gain_error_tia: Option<f64>,
    /// Gaussian noise per amplifier output, volts RMS.
    #[arg(long, value_parser = si)]
    noise_sigma: Option<f64>,
    #[arg(long, value_parser = si, allow_hyphen_values = true)]
    rail_low: Option<f64>,
    #[arg(long, value_parser = si)]
    rail_high: Option<f64>,
    #[arg(long, value_parser = si)]
    virtual_ground: Option<f64>,
    /// Sample-rate ceiling, samples/s.
    #[arg(long, value_parser = si)]
    max_sample_rate: Option<f64>,
    /// Delay between voltage and current samples in EIS mode, seconds.
    #[arg(long, value_parser = si)]
    eis_mux_skew: Option<f64>,
    /// Delay between voltage and current samples in CV mode, seconds.
    #[arg(long, value_parser = si)]
    cv_mux_skew: Option<f64>,
    /// Random seed for noise.
    #[arg(long, env = "POTENTIOSTAT_SEED", default_value_t = 0)]
    seed: u64,
}

impl InstrumentArgs {
    fn load(&self) -> Result<ConfigFile, Error> {
        let mut file = match &self.config {
            Some(p) => parse_config(&std::fs::read_to_string(p)?, InstrumentConfig::default())?,
            None => ConfigFile::default(),
        };
        let cfg = &mut file.instrument;
        let direct = [
            ("frontend.tia_feedback_resistance", self.tia_feedback),
            ("frontend.control_attenuation", self.control_attenuation),
            ("frontend.electrometer_gain", self.electrometer_gain),
            ("frontend.electrometer_offset", self.electrometer_offset),
            ("frontend.tia_offset", self.tia_offset),
            (
                "frontend.gain_error_electrometer",
                self.gain_error_electrometer,
            ),
            ("frontend.gain_error_tia", self.gain_error_tia),
            ("frontend.noise_sigma", self.noise_sigma),
            ("frontend.rail_low", self.rail_low),
            ("frontend.rail_high", self.rail_high),
            ("frontend.virtual_ground", self.virtual_ground),
            ("adc.max_sample_rate", self.max_sample_rate),
            ("adc.eis_mux_skew", self.eis_mux_skew),
            ("adc.cv_mux_skew", self.cv_mux_skew),
        ];
        for (key, v) in direct {
            if let Some(v) = v {
                set_config_value(cfg, key, &format!("{v:e}"))?;
            }
        }
        for (k, v) in &self.overrides {
            set_config_value(cfg, k, v)?;
        }
        cfg.validate()?;
        Ok(file)
    }

    fn metadata(&self, d: ScanDataset) -> ScanDataset {
        let mut d = d.with_meta("seed", self.seed);
        if let Some(p) = &self.config {
            d = d.with_meta("config", p.display());
        }
        for (k, v) in &self.overrides {
            d = d.with_meta(format!("set {k}"), v);
        }
        d
    }
}

#[derive(Args)]
struct CellArgs {
    /// Cell preset (`R1k`, `rc-table3-row1`…`row9`, `redox-dummy`), a name
    /// from the config file, or an inline expression. Repeat to populate the
    /// electrode multiplexer.
    #[arg(long = "cell", default_value = "R1k")]
    cells: Vec<String>,
    /// Working-electrode channel to measure.
    #[arg(long, default_value_t = 0)]
    we: usize,
}

impl CellArgs {
    fn resolve(&self, file: &ConfigFile) -> Result<(String, CellNetwork), Error> {
        let cells = self
            .cells
            .iter()
            .map(|c| match file.cell(c) {
                Some(n) => Ok(n.clone()),
                None => resolve_cell(c),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mux = select_working_electrode(&ElectrodeMux::new(cells)?, self.we)?;
        Ok((self.cells[self.we].clone(), mux.cell().clone()))
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Output file (stdout when omitted). Written atomically.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Timestamp recorded in the file header.
    #[arg(long, env = "SOURCE_DATE_EPOCH")]
    timestamp: Option<String>,
}

impl OutputArgs {
    fn emit_dataset(&self, d: ScanDataset) -> Result<(), Error> {
        let d = match &self.timestamp {
            Some(t) => d.with_meta("timestamp", t),
            None => d,
        };
        self.emit(d.to_tsv()?.as_bytes())
    }

    fn emit(&self, bytes: &[u8]) -> Result<(), Error> {
        match &self.out {
            Some(p) => write_atomic(p, bytes),
            None => {
                let mut out = std::io::stdout().lock();
                match out.write_all(bytes).and_then(|_| out.flush()) {
                    // reader went away (e.g. `| head`); nothing left to do
                    Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                    r => Ok(r?),
                }
            }
        }
    }
}

#[derive(Args)]
struct EisArgs {
    #[command(flatten)]
    cell: CellArgs,
    #[arg(long, value_parser = si, default_value = "100")]
    f_start: f64,
    #[arg(long, value_parser = si, default_value = "25000")]
    f_end: f64,
    #[arg(long, value_parser = si, default_value = "50")]
    f_step: f64,
    /// Peak sine amplitude across the cell, volts.
    #[arg(long, value_parser = si, default_value = "50m")]
    amplitude: f64,
    /// Repetitions averaged per frequency.
    #[arg(long, default_value_t = 1)]
    n_average: usize,
    /// Cycles discarded before analysis.
    #[arg(long, default_value_t = 5)]
    settle_cycles: usize,
    /// Lowest frequency the sweep policy accepts.
    #[arg(long, value_parser = si, default_value = "100")]
    f_min: f64,
    /// Highest frequency the sweep policy accepts.
    #[arg(long, value_parser = si, default_value = "50k")]
    f_max: f64,
    /// Leave the sampling-skew phase error in the result.
    #[arg(long)]
    no_skew_compensation: bool,
    /// Calibration table to apply.
    #[arg(long)]
    calibration: Option<PathBuf>,
    /// Evaluate points one at a time.
    #[arg(long)]
    sequential: bool,
    #[command(flatten)]
    instrument: InstrumentArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CvArgs {
    #[command(flatten)]
    cell: CellArgs,
    /// Sweep rate across the cell, V/s.
    #[arg(long, value_parser = si, default_value = "1")]
    rate: f64,
    #[arg(long, value_parser = si, allow_hyphen_values = true, default_value = "-500m")]
    v_start: f64,
    #[arg(long, value_parser = si, allow_hyphen_values = true, default_value = "500m")]
    v_end: f64,
    #[arg(long, default_value_t = 1)]
    cycles: usize,
    /// Calibration table whose offsets are removed.
    #[arg(long)]
    calibration: Option<PathBuf>,
    #[command(flatten)]
    instrument: InstrumentArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Reference resistors for the gain table (repeatable).
    #[arg(long = "reference", value_parser = si, default_values = ["1k", "4.7k", "10k"])]
    references: Vec<f64>,
    /// Frequencies of the phase-offset table (repeatable).
    #[arg(long = "phase-freq", value_parser = si, default_values = ["100", "1k", "10k", "25k"])]
    phase_freqs: Vec<f64>,
    /// Frequency at which the gain table is measured.
    #[arg(long, value_parser = si, default_value = "1k")]
    gain_freq: f64,
    #[arg(long, value_parser = si, default_value = "50m")]
    amplitude: f64,
    #[arg(long, default_value_t = 4)]
    n_average: usize,
    /// Only measure the channel offsets.
    #[arg(long)]
    offsets_only: bool,
    #[command(flatten)]
    instrument: InstrumentArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CompareArgs {
    /// Densely sampled EIS dataset.
    dense: PathBuf,
    /// Reference EIS dataset; every row gets one pair.
    reference: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct EncodeArgs {
    #[command(subcommand)]
    frame: FrameCmd,
    /// Output file (stdout when omitted).
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum FrameCmd {
    Eis {
        #[arg(long)]
        f_start: i32,
        #[arg(long)]
        f_end: i32,
        #[arg(long)]
        f_step: i32,
        #[arg(long)]
        amplitude_mv: i32,
        #[arg(long, default_value_t = 1)]
        n_average: i32,
    },
    Cv {
        #[arg(long)]
        rate_mv_s: i32,
        #[arg(long, allow_negative_numbers = true)]
        v_start_mv: i32,
        #[arg(long, allow_negative_numbers = true)]
        v_end_mv: i32,
        #[arg(long, default_value_t = 1)]
        cycles: i32,
    },
    SelectWe {
        #[arg(long)]
        channel: i32,
    },
    Calibrate,
    SetConfig {
        #[arg(long)]
        key: i32,
        #[arg(long, allow_negative_numbers = true)]
        value: i32,
    },
}

#[derive(Args)]
struct DecodeArgs {
    /// Frame file (stdin when omitted).
    input: Option<PathBuf>,
}

fn run_eis(a: &EisArgs) -> Result<(), Error> {
    let file = a.instrument.load()?;
    let (name, cell) = a.cell.resolve(&file)?;
    let params = EisScanParams {
        f_start: a.f_start,
        f_end: a.f_end,
        f_step: a.f_step,
        excitation_amplitude: a.amplitude,
        n_average: a.n_average,
        settle_cycles: a.settle_cycles,
        f_min: a.f_min,
        f_max: a.f_max,
        compensate_skew: !a.no_skew_compensation,
    };
    let mode = if a.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let mut points = eis_scan_with(&params, &cell, &file.instrument, a.instrument.seed, mode)?;
    let table = a
        .calibration
        .as_deref()
        .map(CalibrationTable::load)
        .transpose()?;
    if let Some(t) = &table {
        points = points.iter().map(|p| apply_calibration(t, p)).collect();
    }
    let clipped = points.iter().filter(|p| p.clipped).count();
    if clipped > 0 {
        eprintln!("warning: {clipped} point(s) clipped at the converter rails");
    }
    let mut d = ScanDataset::eis(points.iter().map(EisRow::from).collect())
        .with_meta("cell", &name)
        .with_meta("network", &cell)
        .with_meta("amplitude_v", a.amplitude)
        .with_meta("n_average", a.n_average);
    if let Some(p) = &a.calibration {
        d = d.with_meta("calibration", p.display());
    }
    eprintln!("eis: {} point(s) on {name}", points.len());
    a.output.emit_dataset(a.instrument.metadata(d))
}

fn run_cv(a: &CvArgs) -> Result<(), Error> {
    let file = a.instrument.load()?;
    let (name, cell) = a.cell.resolve(&file)?;
    let params = CvScanParams {
        rate: a.rate,
        v_start: a.v_start,
        v_end: a.v_end,
        cycles: a.cycles,
    };
    let mut points = cv_scan(&params, &cell, &file.instrument, a.instrument.seed)?;
    if let Some(p) = &a.calibration {
        let t = CalibrationTable::load(p)?;
        points = apply_cv_calibration(&t, &file.instrument.frontend, &points);
    }
    let mut d = ScanDataset::cv(points)
        .with_meta("cell", &name)
        .with_meta("network", &cell)
        .with_meta("rate_v_per_s", a.rate)
        .with_meta("cycles", a.cycles);
    if let Some(p) = &a.calibration {
        d = d.with_meta("calibration", p.display());
    }
    eprintln!("cv: {} point(s) on {name}", d.len());
    a.output.emit_dataset(a.instrument.metadata(d))
}

fn run_calibrate(a: &CalibrateArgs) -> Result<(), Error> {
    let cfg = a.instrument.load()?.instrument;
    let seed = a.instrument.seed;
    let (e, t) = calibrate_offsets(&cfg.frontend, &cfg.adc, derive_seed(seed, 0))?;
    let mut phase_offsets = Vec::new();
    let mut gain_points = Vec::new();
    if !a.offsets_only {
        let mut refs = a.references.clone();
        refs.sort_by(f64::total_cmp);
        refs.dedup();
        let mut freqs = a.phase_freqs.clone();
        freqs.sort_by(f64::total_cmp);
        freqs.dedup();
        let measure = |r: f64, f: f64, k: u64| {
            let params = EisScanParams {
                excitation_amplitude: a.amplitude,
                n_average: a.n_average,
                ..EisScanParams::single(f)
            };
            let p = eis_measure_point(
                f,
                &params,
                &CellNetwork::resistor(r),
                &cfg,
                derive_seed(seed, k),
            )?;
            if p.clipped {
                return Err(Error::CalibrationFailed(format!(
                    "reference {r} ohm clipped at {f} Hz; lower the amplitude or use a larger resistor"
                )));
            }
            Ok(p)
        };
        // a resistor has zero phase, so whatever remains is instrument error
        let phase_ref = refs[refs.len() / 2];
        for (k, &f) in freqs.iter().enumerate() {
            phase_offsets.push((f, measure(phase_ref, f, 1 + k as u64)?.phase));
        }
        for (k, &r) in refs.iter().enumerate() {
            let m = measure(r, a.gain_freq, 1000 + k as u64)?;
            gain_points.push((r, m.impedance_magnitude));
        }
    }
    let table = CalibrationTable::new(e, t, phase_offsets, gain_points)
        .map_err(|err| Error::CalibrationFailed(err.to_string()))?;
    eprintln!(
        "calibrate: offsets {:.3} mV / {:.3} mV",
        table.electrometer_offset * 1e3,
        table.tia_offset * 1e3
    );
    a.output.emit(table.to_tsv().as_bytes())
}

fn run_compare(a: &CompareArgs) -> Result<(), Error> {
    let dense = read_dataset(&a.dense)?;
    let reference = read_dataset(&a.reference)?;
    let report = align_datasets(&dense, &reference)?;
    let mut out = String::new();
    out += &format!(
        "# dense\t{}\n# reference\t{}\n",
        a.dense.display(),
        a.reference.display()
    );
    out += "reference_hz\tdense_hz\treference_ohm\tdense_ohm\tpercent_error\tphase_error_deg\tabs_phase_error_deg\n";
    for p in &report.pairs {
        let cols = [
            p.reference.frequency,
            p.dense.frequency,
            p.reference.impedance,
            p.dense.impedance,
            p.percent_error,
            p.phase_error,
            p.phase_error.abs(),
        ];
        let cols: Vec<String> = cols.iter().map(|&v| format_sig(v)).collect();
        out += &cols.join("\t");
        out.push('\n');
    }
    for (k, v) in [
        ("max_abs_percent", report.max_abs_percent),
        ("mean_abs_percent", report.mean_abs_percent),
        ("max_abs_phase_deg", report.max_abs_phase),
        ("mean_abs_phase_deg", report.mean_abs_phase),
    ] {
        out += &format!("# {k}\t{}\n", format_sig(v));
    }
    eprintln!(
        "compare: {} pair(s), max |error| {:.3}% / {:.3} deg",
        report.pairs.len(),
        report.max_abs_percent,
        report.max_abs_phase
    );
    a.output.emit(out.as_bytes())
}

fn run_encode(a: &EncodeArgs) -> Result<(), Error> {
    let cmd = match a.frame {
        FrameCmd::Eis {
            f_start,
            f_end,
            f_step,
            amplitude_mv,
            n_average,
        } => Command::EisScan {
            f_start,
            f_end,
            f_step,
            amplitude_mv,
            n_average,
        },
        FrameCmd::Cv {
            rate_mv_s,
            v_start_mv,
            v_end_mv,
            cycles,
        } => Command::CvScan {
            rate_mv_s,
            v_start_mv,
            v_end_mv,
            cycles,
        },
        FrameCmd::SelectWe { channel } => Command::SelectWe { channel },
        FrameCmd::Calibrate => Command::Calibrate,
        FrameCmd::SetConfig { key, value } => Command::SetConfig { key, value },
    };
    let frame = encode_command(&cmd)?;
    OutputArgs {
        out: a.out.clone(),
        timestamp: None,
    }
    .emit(&frame)
}

fn describe(c: &Command) -> String {
    match *c {
        Command::EisScan {
            f_start,
            f_end,
            f_step,
            amplitude_mv,
            n_average,
        } => format!(
            "EIS_SCAN f_start={f_start} f_end={f_end} f_step={f_step} amplitude_mv={amplitude_mv} n_average={n_average}"
        ),
        Command::CvScan {
            rate_mv_s,
            v_start_mv,
            v_end_mv,
            cycles,
        } => format!(
            "CV_SCAN rate_mv_s={rate_mv_s} v_start_mv={v_start_mv} v_end_mv={v_end_mv} cycles={cycles}"
        ),
        Command::SelectWe { channel } => format!("SELECT_WE channel={channel}"),
        Command::Calibrate => "CALIBRATE".into(),
        Command::SetConfig { key, value } => format!("SET_CONFIG key={key} value={value}"),
    }
}

fn run_decode(a: &DecodeArgs) -> Result<(), Error> {
    let bytes = match &a.input {
        Some(p) => std::fs::read(p)?,
        None => {
            let mut buf = Vec::new();
            std::io::stdin().lock().read_to_end(&mut buf)?;
            buf
        }
    };
    println!("{}", describe(&decode_command(&bytes)?));
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::FrameLength(_)
        | Error::Checksum { .. }
        | Error::UnknownOpcode(_)
        | Error::MalformedFrame(_) => 4,
        Error::Io(_) => 5,
        Error::Parse { .. } => 6,
        Error::OpenCircuit { .. } | Error::PointFailed { .. } | Error::CalibrationFailed(_) => 7,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Eis(a) => run_eis(a),
        Cmd::Cv(a) => run_cv(a),
        Cmd::Calibrate(a) => run_calibrate(a),
        Cmd::Compare(a) => run_compare(a),
        Cmd::Encode(a) => run_encode(a),
        Cmd::Decode(a) => run_decode(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn key_value_splits_on_first_equals() {
        assert_eq!(
            key_value(" adc.v_ref = 3.3 ").unwrap(),
            ("adc.v_ref".to_string(), "3.3".to_string())
        );
        assert!(key_value("adc.v_ref").is_err());
    }

    #[test]
    fn error_classes_map_to_distinct_codes() {
        assert_eq!(exit_code(&Error::FrameLength(21)), 4);
        assert_eq!(exit_code(&Error::UnknownOpcode(9)), 4);
        assert_eq!(
            exit_code(&Error::Parse {
                line: 1,
                message: String::new()
            }),
            6
        );
        assert_eq!(exit_code(&Error::OpenCircuit { frequency: 1.0 }), 7);
        assert_eq!(exit_code(&Error::InvalidConfig(String::new())), 3);
        assert_eq!(exit_code(&std::io::Error::other("x").into()), 5);
    }

    #[test]
    fn negative_si_values_parse() {
        let cli = Cli::try_parse_from([
            "potentiostat",
            "cv",
            "--v-start",
            "-200m",
            "--tia-offset",
            "-1m",
        ])
        .unwrap();
        let Cmd::Cv(a) = cli.cmd else { panic!() };
        assert_eq!(a.v_start, -0.2);
        assert_eq!(a.instrument.tia_offset, Some(-1e-3));
    }
}
