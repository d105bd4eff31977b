use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use optoent_core::config::{ConfigFile, DetuningMode, SweepSection};
use optoent_core::entanglement::BipartitePair;
use optoent_core::linear_dynamics::write_matrix;
use optoent_core::sweep::{
    csv_string, find_critical_temperature, render_svg, run_sweep, PointStatus, PreparedPoint, SweepAxis,
    SweepSpec, TcritError, DEFAULT_TCRIT_MAX, DEFAULT_TCRIT_TOLERANCE,
};
use optoent_core::{PhysicalParams, PointResult};

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_UNSTABLE: u8 = 3;
const EXIT_NO_CROSSING: u8 = 4;

#[derive(Parser)]
#[command(name = "optoent", version, about = "Stationary entanglement in a two-cavity optomechanical system with an atomic ensemble")]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one parameter point.
    Point {
        /// Write the drift (A.txt) and diffusion (D.txt) matrices here.
        #[arg(long)]
        dump_dir: Option<PathBuf>,
    },
    /// Sweep one axis, optionally with overlays of a second.
    Sweep(SweepArgs),
    /// Find the temperature above which a pair becomes separable.
    Tcrit(TcritArgs),
    /// Stability and validity diagnostics only.
    Check {
        #[arg(long)]
        dump_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// delta | temperature | j
    #[arg(long)]
    axis: Option<SweepAxis>,
    #[arg(long, allow_hyphen_values = true)]
    start: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    stop: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    overlay_axis: Option<SweepAxis>,
    /// Comma-separated overlay values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    overlays: Option<Vec<f64>>,
    /// CSV output path (stdout if omitted).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// SVG plot output path.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Pair plotted in the SVG.
    #[arg(long, default_value = "mirror-atoms")]
    plot_pair: BipartitePair,
}

#[derive(Args)]
struct TcritArgs {
    #[arg(long)]
    pair: Option<BipartitePair>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    tolerance: Option<f64>,
}

macro_rules! param_args {
    ($( $section:ident . $field:ident $( / $scaled:ident )? ),* $(,)?) => {
        #[derive(Args, Default)]
        struct ParamArgs {
            $(
                #[arg(long, global = true, allow_hyphen_values = true, help_heading = "Parameters")]
                $field: Option<f64>,
                $(
                    #[arg(long, global = true, allow_hyphen_values = true, help_heading = "Parameters")]
                    $scaled: Option<f64>,
                )?
            )*
            /// effective | bare
            #[arg(long, global = true, help_heading = "Parameters")]
            mode: Option<String>,
        }

        impl ParamArgs {
            /// Apply flags on top of the file; a flag replaces both unit forms of its key.
            fn apply(&self, cfg: &mut ConfigFile) {
                $(
                    if let Some(v) = self.$field {
                        cfg.$section.$field = Some(v);
                        $( cfg.$section.$scaled = None; )?
                    }
                    $(
                        if let Some(v) = self.$scaled {
                            cfg.$section.$scaled = Some(v);
                            cfg.$section.$field = None;
                        }
                    )?
                )*
            }

            fn sets_atom_detuning(&self) -> bool {
                self.detuning_delta_a.is_some() || self.detuning_delta_a_in_omega_m.is_some()
            }
        }
    };
}

param_args!(
    cavity.length,
    cavity.decay_kappa / decay_kappa_in_omega_m,
    cavity.wavelength,
    cavity.coupling_j / coupling_j_in_omega_m,
    drive.power,
    mirror.omega_m,
    mirror.mass,
    mirror.damping_gamma_m / damping_gamma_m_in_omega_m,
    mirror.temperature,
    atoms.decay_gamma_a / decay_gamma_a_in_omega_m,
    atoms.coupling_g_a / coupling_g_a_in_omega_m,
    atoms.detuning_delta_a / detuning_delta_a_in_omega_m,
    atoms.number,
    detuning.delta / delta_in_omega_m,
    detuning.delta1 / delta1_in_omega_m,
    detuning.delta2 / delta2_in_omega_m,
);

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl std::fmt::Display) -> Self {
        Self { code, message: message.to_string() }
    }
}

struct Setup {
    config: ConfigFile,
    params: PhysicalParams,
    assumed_atom_detuning: bool,
}

fn load(cli: &Cli) -> Result<Setup, Failure> {
    let mut config = match &cli.config {
        Some(path) => ConfigFile::load(path).map_err(|e| Failure::new(EXIT_CONFIG, e))?,
        None => ConfigFile::default(),
    };
    let from_file = config.atoms.detuning_delta_a.is_some() || config.atoms.detuning_delta_a_in_omega_m.is_some();
    if let Some(mode) = &cli.params.mode {
        let mode = match mode.as_str() {
            "effective" => DetuningMode::Effective,
            "bare" => DetuningMode::Bare,
            other => return Err(Failure::new(EXIT_CONFIG, format!("unknown detuning mode `{other}` (expected effective or bare)"))),
        };
        if mode != config.detuning.mode {
            config.detuning = Default::default();
            config.detuning.mode = mode;
        }
    }
    cli.params.apply(&mut config);
    let params = config.to_params().map_err(|e| Failure::new(EXIT_CONFIG, e))?;
    Ok(Setup { config, params, assumed_atom_detuning: !from_file && !cli.params.sets_atom_detuning() })
}

fn write_output(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::new(EXIT_FAILURE, format!("cannot write {}: {e}", path.display())))
}

fn dump_matrices(dir: &Path, prep: &PreparedPoint, temperature: f64) -> Result<(), Failure> {
    let io_err = |e: io::Error| Failure::new(EXIT_FAILURE, format!("cannot write matrices to {}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io_err)?;
    let nbar = optoent_core::params::thermal_occupation(prep.params.mech_freq, temperature);
    let diffusion = optoent_core::linear_dynamics::diffusion_matrix(&prep.params, nbar);
    write_matrix(fs::File::create(dir.join("A.txt")).map_err(io_err)?, &prep.model.drift).map_err(io_err)?;
    write_matrix(fs::File::create(dir.join("D.txt")).map_err(io_err)?, &diffusion).map_err(io_err)?;
    Ok(())
}

fn header_lines(out: &mut String, setup: &Setup) {
    let p = &setup.params;
    let note = if setup.assumed_atom_detuning { " (assumed default)" } else { "" };
    out.push_str(&format!("Delta_a_over_omega_m = {}{note}\n", p.atom_detuning / p.mech_freq));
    out.push_str(&format!("J_over_omega_m = {}\n", p.cavity_coupling / p.mech_freq));
    out.push_str(&format!("T_K = {}\n", p.temperature));
}

fn diagnostics(out: &mut String, prep: &PreparedPoint) {
    let v = &prep.validity;
    let wm = prep.params.mech_freq;
    out.push_str(&format!("stable = {}\n", prep.model.stable));
    out.push_str(&format!("marginal = {}\n", prep.model.marginal));
    out.push_str(&format!("spectral_abscissa_over_omega_m = {}\n", prep.model.spectral_abscissa / wm));
    out.push_str(&format!("multivalued = {}\n", prep.multivalued));
    out.push_str(&format!("q_s = {}\n", prep.steady.q));
    out.push_str(&format!("abs_a1 = {}\n", v.amp1_abs));
    out.push_str(&format!("abs_a2 = {}\n", v.amp2_abs));
    out.push_str(&format!("Delta2_eff_over_omega_m = {}\n", prep.steady.delta2_eff / wm));
    out.push_str(&format!("G_over_omega_m = {}\n", prep.steady.coupling / wm));
    out.push_str(&format!("excitation_prob = {}\n", v.excitation_prob));
    out.push_str(&format!("low_excitation_ok = {}\n", v.low_excitation_ok));
    out.push_str(&format!("strong_drive_ok = {}\n", v.strong_drive_ok));
    out.push_str(&format!("quality_factor = {}\n", v.quality_factor));
    out.push_str(&format!("markovian_ok = {}\n", v.markovian_ok));
}

fn entanglement_lines(out: &mut String, r: &PointResult) {
    for (k, pair) in BipartitePair::ALL.iter().enumerate() {
        match r.reports {
            Some(reports) => {
                let rep = &reports[k];
                out.push_str(&format!("EN{} = {}  # {}\n", k + 1, rep.log_negativity, pair.name()));
                out.push_str(&format!("nu{} = {}\n", k + 1, rep.nu_minus));
            }
            None => out.push_str(&format!("EN{} =  # {}, absent\n", k + 1, pair.name())),
        }
    }
}

fn prepare(setup: &Setup) -> Result<PreparedPoint, Failure> {
    PreparedPoint::new(&setup.params).map_err(|e| Failure::new(EXIT_FAILURE, e))
}

fn cmd_point(setup: &Setup, dump_dir: Option<&Path>) -> Result<String, Failure> {
    let prep = prepare(setup)?;
    if let Some(dir) = dump_dir {
        dump_matrices(dir, &prep, setup.params.temperature)?;
    }
    let result = prep.result_at(setup.params.temperature);
    let mut out = String::new();
    header_lines(&mut out, setup);
    diagnostics(&mut out, &prep);
    entanglement_lines(&mut out, &result);
    match &result.status {
        PointStatus::Ok => Ok(out),
        PointStatus::Unstable => {
            print!("{out}");
            Err(Failure::new(EXIT_UNSTABLE, "unstable: no stationary state exists at this point"))
        }
        PointStatus::Failed(msg) => {
            print!("{out}");
            Err(Failure::new(EXIT_FAILURE, msg))
        }
    }
}

fn cmd_check(setup: &Setup, dump_dir: Option<&Path>) -> Result<String, Failure> {
    let prep = prepare(setup)?;
    if let Some(dir) = dump_dir {
        dump_matrices(dir, &prep, setup.params.temperature)?;
    }
    let mut out = String::new();
    header_lines(&mut out, setup);
    diagnostics(&mut out, &prep);
    Ok(out)
}

fn sweep_spec(setup: &Setup, args: &SweepArgs) -> Result<SweepSpec, Failure> {
    let file = setup.config.sweep.clone();
    let pick = |flag: Option<f64>, from: Option<f64>, key: &str| {
        flag.or(from).ok_or_else(|| Failure::new(EXIT_CONFIG, format!("sweep needs `{key}` (flag or [sweep] section)")))
    };
    let axis = args
        .axis
        .or(file.as_ref().map(|s| s.axis))
        .ok_or_else(|| Failure::new(EXIT_CONFIG, "sweep needs `axis` (flag or [sweep] section)"))?;
    let start = pick(args.start, file.as_ref().map(|s| s.start), "start")?;
    let stop = pick(args.stop, file.as_ref().map(|s| s.stop), "stop")?;
    let points = args
        .points
        .or(file.as_ref().map(|s| s.points))
        .unwrap_or(optoent_core::config::DEFAULT_SWEEP_POINTS);
    let overlay_axis = args.overlay_axis.or(file.as_ref().and_then(|s| s.overlay_axis));
    let overlays = args
        .overlays
        .clone()
        .or(file.map(|s: SweepSection| s.overlays))
        .unwrap_or_default();
    let spec = SweepSpec { axis, start, stop, points, overlay_axis, overlays, base: setup.params.clone() };
    spec.validate().map_err(|e| Failure::new(EXIT_CONFIG, e))?;
    Ok(spec)
}

fn cmd_sweep(setup: &Setup, args: &SweepArgs) -> Result<String, Failure> {
    let spec = sweep_spec(setup, args)?;
    let rows = run_sweep(&spec).map_err(|e| Failure::new(EXIT_CONFIG, e))?;
    if setup.assumed_atom_detuning {
        eprintln!("note: Delta_a = {} omega_m is the assumed default", setup.params.atom_detuning / setup.params.mech_freq);
    }
    let unstable = rows.iter().filter(|r| r.point.status == PointStatus::Unstable).count();
    let failed = rows.iter().filter(|r| matches!(r.point.status, PointStatus::Failed(_))).count();
    if unstable + failed > 0 {
        eprintln!("note: {unstable} unstable and {failed} failed points (E_N left empty)");
    }
    let csv = csv_string(&spec, &rows);
    if let Some(path) = &args.plot {
        write_output(path, &render_svg(&spec, &rows, args.plot_pair))?;
    }
    match &args.out {
        Some(path) => {
            write_output(path, &csv)?;
            Ok(String::new())
        }
        None => Ok(csv),
    }
}

fn cmd_tcrit(setup: &Setup, args: &TcritArgs) -> Result<String, Failure> {
    let section = setup.config.tcrit.clone();
    let pair = args.pair.or(section.as_ref().map(|s| s.pair)).unwrap_or_default();
    let t_max = args
        .t_max
        .or(section.as_ref().and_then(|s| s.t_max))
        .unwrap_or(DEFAULT_TCRIT_MAX);
    let tolerance = args
        .tolerance
        .or(section.as_ref().and_then(|s| s.tolerance))
        .unwrap_or(DEFAULT_TCRIT_TOLERANCE);
    let result = find_critical_temperature(&setup.params, pair, t_max, tolerance).map_err(|e| match e {
        TcritError::NoCrossing { .. } => Failure::new(EXIT_NO_CROSSING, e),
        TcritError::Unstable { .. } => Failure::new(EXIT_UNSTABLE, e),
        TcritError::BadRange { .. } | TcritError::BadTolerance(_) => Failure::new(EXIT_CONFIG, e),
        TcritError::Pipeline(_) => Failure::new(EXIT_FAILURE, e),
    })?;
    let mut out = String::new();
    header_lines(&mut out, setup);
    out.push_str(&format!("pair = {}\n", pair.name()));
    out.push_str(&format!("T_c_K = {}\n", result.critical_temperature));
    out.push_str(&format!("bracket_K = [{}, {}]\n", result.bracket.0, result.bracket.1));
    out.push_str(&format!("tolerance_K = {}\n", result.tolerance));
    out.push_str(&format!("monotone = {}\n", result.monotone));
    if !result.monotone {
        eprintln!("warning: E_N is not monotonically decreasing in T on [{}, {t_max}] K; sampled profile:", setup.params.temperature);
        for (t, e) in &result.profile {
            eprintln!("  T = {t} K, E_N = {e}");
        }
    }
    Ok(out)
}

fn run(cli: &Cli) -> Result<String, Failure> {
    let setup = load(cli)?;
    match &cli.command {
        Command::Point { dump_dir } => cmd_point(&setup, dump_dir.as_deref()),
        Command::Check { dump_dir } => cmd_check(&setup, dump_dir.as_deref()),
        Command::Sweep(args) => cmd_sweep(&setup, args),
        Command::Tcrit(args) => cmd_tcrit(&setup, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let mut stdout = io::stdout().lock();
            if stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(EXIT_FAILURE);
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
