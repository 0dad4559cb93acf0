use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use metabeam::coding::{
    synthesize, CodingMethod, SdmAxis, SynthesisOptions, TdmBudget, NR_SUBFRAME,
};
use metabeam::farfield::{radiation_pattern, AngleGrid, Aperture, ElementPattern, PatternMetrics};
use metabeam::scenario::{
    build_indoor, calibrate_bandwidth, code_surface, evaluate_with, sweep, EvalSettings, Overrides,
    Scenario,
};
use metabeam::surface::{build_grid, canonical_codebook, UnitCellGrid};
use metabeam::{io as mio, Error};

#[derive(Debug, Parser)]
#[command(
    name = "metabeam",
    version,
    about = "Multi-beam metasurface coding and link evaluation"
)]
struct Cli {
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Fading seed, overriding the scenario file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Far-field angular sampling step in degrees.
    #[arg(long, global = true, default_value_t = 0.5)]
    angle_res_deg: f64,

    /// Disable small-scale fading regardless of the scenario file.
    #[arg(long, global = true)]
    no_fading: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    #[value(name = "phase_only", alias = "phase-only")]
    PhaseOnly,
    #[value(name = "amp_phs", alias = "amp-phs")]
    AmpPhs,
    Sdm,
}

impl From<Method> for CodingMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::PhaseOnly => CodingMethod::PhaseOnly,
            Method::AmpPhs => CodingMethod::AmpPhs,
            Method::Sdm => CodingMethod::Sdm,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Axis {
    Row,
    Column,
}

impl From<Axis> for SdmAxis {
    fn from(a: Axis) -> Self {
        match a {
            Axis::Row => SdmAxis::Row,
            Axis::Column => SdmAxis::Column,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Indoor,
    Umi,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Cells along m.
    #[arg(long, default_value_t = 24)]
    m: usize,
    /// Cells along n.
    #[arg(long, default_value_t = 24)]
    n: usize,
    /// Cell pitch in wavelengths.
    #[arg(long, default_value_t = 1.0 / 3.0)]
    cell_size_wl: f64,
    #[arg(long, default_value_t = 28e9)]
    frequency_hz: f64,
    /// Number of phase states per cell.
    #[arg(long, default_value_t = 4)]
    states: usize,
}

impl GridArgs {
    fn grid(&self) -> metabeam::Result<UnitCellGrid> {
        build_grid(self.m, self.n, self.cell_size_wl, self.frequency_hz)
    }
}

#[derive(Debug, Args)]
struct ScenarioSource {
    /// Scenario JSON file.
    #[arg(long, conflicts_with = "kind")]
    file: Option<PathBuf>,
    /// Bundled deployment to use when no file is given.
    #[arg(long, value_enum, default_value_t = Kind::Indoor)]
    kind: Kind,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize and quantize a multi-beam coding; writes the state matrix.
    Code {
        /// JSON list of {"theta_deg", "phi_deg"} targets.
        #[arg(long)]
        targets: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value_t = Method::PhaseOnly)]
        method: Method,
        #[arg(long, value_enum, default_value_t = Axis::Row)]
        sdm_axis: Axis,
    },
    /// Far-field pattern and metrics of a coding.
    Pattern {
        /// Targets to code in-process.
        #[arg(long, group = "input")]
        targets: Option<PathBuf>,
        /// State matrix CSV written by `code`.
        #[arg(long, group = "input")]
        states_file: Option<PathBuf>,
        /// Continuous phase matrix CSV in radians.
        #[arg(long, group = "input")]
        profile: Option<PathBuf>,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value_t = Method::PhaseOnly)]
        method: Method,
        #[arg(long, value_enum, default_value_t = Axis::Row)]
        sdm_axis: Axis,
        /// Surface efficiency used for realized gain.
        #[arg(long, default_value_t = 0.9)]
        efficiency: f64,
        /// Number of peaks to report (defaults to the target count).
        #[arg(long)]
        peaks: Option<usize>,
        /// Apply a cosθ element factor.
        #[arg(long)]
        cosine_element: bool,
        /// Metrics JSON path; defaults to `<out>.metrics.json`.
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Throughput report for one configuration.
    Scenario {
        #[command(flatten)]
        source: ScenarioSource,
        #[arg(long, value_enum, default_value_t = Method::PhaseOnly)]
        method: Method,
        /// Number of served UEs.
        #[arg(long, short = 'k', default_value_t = 1)]
        ues: usize,
        #[arg(long, default_value_t = 0.0)]
        offset_m: f64,
    },
    /// Throughput reports over methods × UE counts × offsets.
    Sweep {
        #[command(flatten)]
        source: ScenarioSource,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Method::PhaseOnly, Method::AmpPhs])]
        methods: Vec<Method>,
        #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3, 4, 5, 6, 7, 8])]
        ues: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.0])]
        offsets_m: Vec<f64>,
    },
    /// Time-division subframe length `N × (UGD + R)`.
    Tdm {
        /// Number of user groups N.
        #[arg(long)]
        groups: u32,
        /// User-group delay in microseconds.
        #[arg(long)]
        ugd_us: f64,
        /// Surface reconfiguration time in microseconds.
        #[arg(long)]
        reconfig_us: f64,
    },
    /// Calibrate the mmWave bandwidth so one UE reaches a target throughput; prints the scenario.
    Calibrate {
        #[command(flatten)]
        source: ScenarioSource,
        #[arg(long, default_value_t = 0.5)]
        target_gbps: f64,
    },
}

#[derive(Debug)]
enum CliError {
    Lib(Error),
    Io(io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) | CliError::Lib(Error::Io(_)) => 1,
            CliError::Lib(Error::Numeric(_)) => 3,
            CliError::Lib(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "I/O error: {e}"),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn sink(out: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_scenario(source: &ScenarioSource, cli: &Cli) -> CliResult<Scenario> {
    let mut s = match (&source.file, source.kind) {
        (Some(path), _) => {
            let text = io::read_to_string(open(path)?)?;
            Scenario::from_json(&text)?
        }
        (None, Kind::Indoor) => Scenario::bundled_indoor()?,
        (None, Kind::Umi) => Scenario::bundled_umi()?,
    };
    if cli.no_fading {
        s.fading.enabled = false;
    }
    Ok(s)
}

fn settings(cli: &Cli) -> EvalSettings {
    EvalSettings {
        angle_resolution_deg: cli.angle_res_deg,
        seed: cli.seed,
        ..Default::default()
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Code {
            targets,
            grid,
            method,
            sdm_axis,
        } => {
            let g = grid.grid()?;
            let codebook = canonical_codebook(grid.states)?;
            let targets = mio::read_targets_json(open(targets)?)?;
            let aperture = code_surface(
                &g,
                &targets,
                (*method).into(),
                &codebook,
                (*sdm_axis).into(),
            )?;
            let states = metabeam::surface::StateMatrix::new(
                aperture.phase().mapv(|p| codebook.nearest(p)),
                codebook.state_count(),
            )?;
            let destructive = match method {
                Method::Sdm => 0,
                _ => synthesize(&g, &targets, &SynthesisOptions::default())?.destructive_cells(),
            };
            let mut w = sink(&cli.out)?;
            match cli.format {
                Format::Csv => mio::write_state_matrix_csv(&mut w, &states)?,
                Format::Json => mio::write_state_matrix_json(&mut w, &states)?,
            }
            w.flush()?;
            eprintln!(
                "K={} N_s={} method={} destructive_cells={}",
                targets.len(),
                codebook.state_count(),
                CodingMethod::from(*method),
                destructive
            );
        }
        Command::Pattern {
            targets,
            states_file,
            profile,
            grid,
            method,
            sdm_axis,
            efficiency,
            peaks,
            cosine_element,
            metrics,
        } => {
            let g = grid.grid()?;
            let codebook = canonical_codebook(grid.states)?;
            let (aperture, target_list) = match (targets, states_file, profile) {
                (Some(t), _, _) => {
                    let t = mio::read_targets_json(open(t)?)?;
                    (
                        code_surface(&g, &t, (*method).into(), &codebook, (*sdm_axis).into())?,
                        t,
                    )
                }
                (_, Some(s), _) => {
                    let states = mio::read_state_matrix_csv(open(s)?, codebook.state_count())?;
                    (
                        Aperture::from_phase(&states.to_profile(g, &codebook)?),
                        Vec::new(),
                    )
                }
                (_, _, Some(p)) => (
                    Aperture::from_phase(&mio::read_profile_csv(open(p)?, g)?),
                    Vec::new(),
                ),
                _ => {
                    return Err(Error::InvalidParameter(
                        "one of --targets, --states-file or --profile is required".into(),
                    )
                    .into())
                }
            };
            let aperture = if *cosine_element {
                aperture.with_element(ElementPattern::Cosine)
            } else {
                aperture
            };
            let angles = AngleGrid::hemisphere(cli.angle_res_deg)?;
            let pattern = radiation_pattern(&aperture, &angles)?.with_targets(&target_list);
            let m = PatternMetrics::evaluate(&aperture, &pattern, *efficiency, *peaks)?;
            match (&cli.out, cli.format) {
                (Some(out), Format::Csv) => {
                    let mut w = create(out)?;
                    mio::write_pattern_csv(&mut w, &pattern)?;
                    w.flush()?;
                    let path = metrics
                        .clone()
                        .unwrap_or_else(|| out.with_extension("metrics.json"));
                    let mut w = create(&path)?;
                    mio::write_metrics_json(&mut w, &m)?;
                    writeln!(w)?;
                    w.flush()?;
                }
                _ => {
                    let mut w = match metrics {
                        Some(p) => Box::new(create(p)?) as Box<dyn Write>,
                        None => sink(&cli.out)?,
                    };
                    mio::write_metrics_json(&mut w, &m)?;
                    writeln!(w)?;
                    w.flush()?;
                }
            }
            eprintln!(
                "directivity={:.2} dBi realized_gain={:.2} dBi specular={:.2} dB sidelobe={:.2} dB peaks={}",
                m.directivity_dbi,
                m.realized_gain_dbi,
                m.specular_level_db,
                m.sidelobe_level_db,
                m.peak_directions.len()
            );
        }
        Command::Scenario {
            source,
            method,
            ues,
            offset_m,
        } => {
            let s = load_scenario(source, cli)?;
            let report = evaluate_with(&s, (*method).into(), *ues, *offset_m, &settings(cli))?;
            write_reports(cli, &[report])?;
        }
        Command::Sweep {
            source,
            methods,
            ues,
            offsets_m,
        } => {
            let s = load_scenario(source, cli)?;
            let methods: Vec<CodingMethod> = methods.iter().map(|&m| m.into()).collect();
            let reports = sweep(&s, &methods, ues, offsets_m, &settings(cli))?;
            write_reports(cli, &reports)?;
        }
        Command::Tdm {
            groups,
            ugd_us,
            reconfig_us,
        } => {
            let micros = |name: &str, us: f64| -> CliResult<Duration> {
                if !(us.is_finite() && us >= 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "{name} must be a non-negative duration"
                    ))
                    .into());
                }
                Ok(Duration::from_nanos((us * 1e3).round() as u64))
            };
            let budget = TdmBudget::new(
                *groups,
                micros("ugd", *ugd_us)?,
                micros("reconfig", *reconfig_us)?,
            )?;
            let sl = budget.subframe_length();
            let fits = !budget.exceeds(NR_SUBFRAME);
            let mut w = sink(&cli.out)?;
            match cli.format {
                Format::Csv => {
                    writeln!(w, "groups,subframe_us,fits_1ms")?;
                    writeln!(w, "{},{},{}", groups, sl.as_nanos() as f64 / 1e3, fits)?;
                }
                Format::Json => {
                    let v = serde_json::json!({
                        "groups": groups,
                        "subframe_us": sl.as_nanos() as f64 / 1e3,
                        "fits_1ms": fits,
                    });
                    writeln!(
                        w,
                        "{}",
                        serde_json::to_string_pretty(&v).map_err(Error::from)?
                    )?;
                }
            }
            w.flush()?;
        }
        Command::Calibrate {
            source,
            target_gbps,
        } => {
            let mut s = load_scenario(source, cli)?;
            let reference = match s.kind {
                metabeam::scenario::ScenarioKind::Indoor => s.clone(),
                metabeam::scenario::ScenarioKind::Umi => build_indoor(&Overrides::default())?,
            };
            let cal = calibrate_bandwidth(&reference, target_gbps * 1e9, &settings(cli))?;
            s.apply_calibration(cal);
            let mut w = sink(&cli.out)?;
            writeln!(w, "{}", s.to_json()?)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn write_reports(cli: &Cli, reports: &[metabeam::ThroughputReport]) -> CliResult<()> {
    let mut w = sink(&cli.out)?;
    match cli.format {
        Format::Csv => mio::write_report_csv(&mut w, reports)?,
        Format::Json => {
            mio::write_report_json(&mut w, reports)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
