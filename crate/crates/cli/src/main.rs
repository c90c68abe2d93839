mod manifest;
mod rgrid;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use parsets::gaussian::{bound_table, gaussian_surface_fd, write_bound_table_csv};
use parsets::measure::mc_volume;
use parsets::surface::{default_schedule, geometric_schedule, outer_content, DEFAULT_LEVELS};
use parsets::verify::{
    monotonicity_run, r_parallel_certificate, thm1_sweep, thm2_sweep, Fixture, MonotonicityConfig, SweepConfig,
};
use parsets::{Error, Scene};

use manifest::Manifest;

#[derive(Parser, Debug)]
#[command(name = "parsets", version, about = "Volume, surface and Gaussian surface of parallel sets A + rK")]
struct Cli {
    /// Rayon worker threads; results do not depend on it.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo volume |A + rK|.
    Volume(VolumeArgs),
    /// Outer Minkowski content of A + rK.
    Surface(SurfaceArgs),
    /// Gaussian surface area of A + rK.
    GaussSurface(SurfaceArgs),
    /// Run a verification harness.
    Verify(VerifyArgs),
    /// Explicit Gaussian surface bounds over a (d, r) grid, as CSV.
    BoundTable(BoundTableArgs),
}

#[derive(Args, Debug, Serialize)]
struct VolumeArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct SurfaceArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long)]
    seed: u64,
    /// Largest shell width; defaults to r/10.
    #[arg(long)]
    eps0: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_LEVELS as u64, value_parser = clap::value_parser!(u64).range(2..))]
    levels: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum Which {
    Thm1,
    Thm2,
    Monotonicity,
    Rparallel,
}

#[derive(Args, Debug, Serialize)]
struct VerifyArgs {
    #[arg(value_enum)]
    which: Which,
    /// JSON config; missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides any seed in the config.
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct BoundTableArgs {
    /// Comma-separated dimensions.
    #[arg(long, value_delimiter = ',', required = true)]
    d: Vec<usize>,
    /// `log:LO:HI:COUNT`, `lin:LO:HI:COUNT`, or a comma-separated list.
    #[arg(long)]
    r_grid: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(serde::Deserialize, Serialize, Debug, Default)]
#[serde(default, deny_unknown_fields)]
struct RparallelConfig {
    fixture: Option<Fixture>,
    r: Option<f64>,
    h: Option<f64>,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

struct Outcome {
    pass: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(w) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w as usize).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(Outcome { pass: true }) => ExitCode::SUCCESS,
        Ok(Outcome { pass: false }) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    let start = Instant::now();
    match &cli.command {
        Command::Volume(a) => {
            let scene = load_scene(&a.scene)?;
            let est = mc_volume(&scene, a.n as usize, a.seed)?;
            let outputs = emit(a.out.as_deref(), &to_json(&est))?;
            Manifest::new("volume", json!(a), Some(a.seed), start, cli.workers, outputs).emit(a.out.as_deref())?;
        }
        Command::Surface(a) | Command::GaussSurface(a) => {
            let gaussian = matches!(cli.command, Command::GaussSurface(_));
            let scene = load_scene(&a.scene)?;
            let schedule = match a.eps0 {
                Some(e) => geometric_schedule(e, a.levels as usize)?,
                None if a.levels as usize == DEFAULT_LEVELS => default_schedule(scene.r()),
                None => geometric_schedule(scene.r() / 10.0, a.levels as usize)?,
            };
            let est = if gaussian {
                gaussian_surface_fd(&scene, &schedule, a.n as usize, a.seed)?
            } else {
                outer_content(&scene, &schedule, a.n as usize, a.seed)?
            };
            let outputs = emit(a.out.as_deref(), &to_json(&est))?;
            let name = if gaussian { "gauss-surface" } else { "surface" };
            Manifest::new(name, json!(a), Some(a.seed), start, cli.workers, outputs).emit(a.out.as_deref())?;
        }
        Command::Verify(a) => return verify(cli, a, start),
        Command::BoundTable(a) => {
            let radii = rgrid::parse(&a.r_grid).map_err(Failure::Usage)?;
            let rows = bound_table(&a.d, &radii)?;
            let mut buf = Vec::new();
            write_bound_table_csv(&rows, &mut buf)?;
            let text = String::from_utf8(buf).expect("CSV is ASCII");
            let outputs = emit(a.out.as_deref(), &text)?;
            Manifest::new("bound-table", json!(a), None, start, cli.workers, outputs).emit(a.out.as_deref())?;
        }
    }
    Ok(Outcome { pass: true })
}

fn verify(cli: &Cli, a: &VerifyArgs, start: Instant) -> Result<Outcome, Failure> {
    let config_text = match &a.config {
        Some(p) => Some(read(p)?),
        None => None,
    };
    let (report, csv, pass, params): (String, Option<String>, bool, Value) = match a.which {
        Which::Thm1 | Which::Thm2 => {
            let mut cfg: SweepConfig = parse_config(config_text.as_deref())?;
            cfg.seed = a.seed;
            let rep = if matches!(a.which, Which::Thm1) { thm1_sweep(&cfg)? } else { thm2_sweep(&cfg)? };
            let mut buf = Vec::new();
            rep.write_csv(&mut buf)?;
            eprintln!(
                "{:?}: {}/{} scenes within bound ({} skipped), pass rate {:.4}",
                a.which, rep.passed, rep.evaluated, rep.skipped, rep.pass_rate
            );
            (rep.to_json(), Some(String::from_utf8(buf).expect("ASCII")), rep.pass, json!(cfg))
        }
        Which::Monotonicity => {
            let mut cfg: MonotonicityConfig = parse_config(config_text.as_deref())?;
            cfg.seed = a.seed;
            let run = monotonicity_run(&cfg)?;
            let mut csv = String::from("s,t,volume,std_error,oracle\n");
            for (i, s) in run.coupled.s_grid.iter().enumerate() {
                for (j, t) in run.coupled.t_grid.iter().enumerate() {
                    let oracle = run.oracle.as_ref().map(|o| format!("{:.16e}", o.volumes[i][j])).unwrap_or_default();
                    csv.push_str(&format!(
                        "{s:.16e},{t:.16e},{:.16e},{:.16e},{oracle}\n",
                        run.coupled.volumes[i][j], run.coupled.std_errors[i][j]
                    ));
                }
            }
            (to_json(&run), Some(csv), run.pass, json!(cfg))
        }
        Which::Rparallel => {
            let cfg: RparallelConfig = parse_config(config_text.as_deref())?;
            let fixture = cfg.fixture.unwrap_or(Fixture::SquareComplement);
            let r = cfg.r.unwrap_or(0.5);
            let h = cfg.h.unwrap_or(0.01);
            let oracle = fixture.oracle();
            let cert = r_parallel_certificate(&oracle, r, h)?;
            let mut csv = String::from("x,y\n");
            for w in &cert.witnesses {
                let cols: Vec<String> = w.iter().map(|v| format!("{v:.16e}")).collect();
                csv.push_str(&cols.join(","));
                csv.push('\n');
            }
            let body = json!({ "fixture": fixture, "description": oracle.description(), "certificate": cert });
            let params = json!({ "fixture": fixture, "r": r, "h": h });
            (to_json(&body), Some(csv), cert.pass, params)
        }
    };
    let mut outputs = emit(a.out.as_deref(), &report)?;
    if let (Some(path), Some(text)) = (&a.csv, &csv) {
        fs::write(path, text)?;
        outputs.push(manifest::OutputDigest::of(path, text.as_bytes()));
    }
    let params = json!({ "which": a.which, "config": params, "csv": a.csv, "out": a.out });
    Manifest::new("verify", params, Some(a.seed), start, cli.workers, outputs).emit(a.out.as_deref())?;
    Ok(Outcome { pass })
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn load_scene(path: &Path) -> Result<Scene, Failure> {
    let text = read(path)?;
    Scene::from_json(&text).map_err(|e| match e {
        Error::Parse { message, line, column } => Failure::Usage(format!(
            "{}: invalid scene at byte offset {}: {message}",
            path.display(),
            byte_offset(&text, line, column)
        )),
        other => Failure::Usage(format!("{}: {other}", path.display())),
    })
}

fn parse_config<T: serde::de::DeserializeOwned + Default>(text: Option<&str>) -> Result<T, Failure> {
    match text {
        None => Ok(T::default()),
        Some(t) => serde_json::from_str(t).map_err(|e| {
            Failure::Usage(format!(
                "invalid config at byte offset {}: {e}",
                byte_offset(t, e.line(), e.column())
            ))
        }),
    }
}

/// Byte offset of a 1-based (line, column) position as reported by serde_json.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let line_start: usize = text.split_inclusive('\n').take(line.saturating_sub(1)).map(str::len).sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("value serializes")
}

/// Writes primary output to `out` or standard output.
fn emit(out: Option<&Path>, text: &str) -> Result<Vec<manifest::OutputDigest>, Failure> {
    let mut body = text.to_string();
    if !body.ends_with('\n') {
        body.push('\n');
    }
    match out {
        Some(path) => {
            fs::write(path, &body)?;
            Ok(vec![manifest::OutputDigest::of(path, body.as_bytes())])
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            stdout.flush()?;
            Ok(vec![manifest::OutputDigest::of(Path::new("-"), body.as_bytes())])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_offsets() {
        let text = "{\n  \"a\": 1,\n  \"b\": x\n}";
        let err = serde_json::from_str::<Value>(text).unwrap_err();
        let off = byte_offset(text, err.line(), err.column());
        assert_eq!(&text[off..off + 1], "x");
        assert_eq!(byte_offset("abc", 1, 1), 0);
        assert_eq!(byte_offset("abc", 9, 9), 3);
    }
}
