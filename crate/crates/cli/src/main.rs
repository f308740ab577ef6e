mod config;
mod json;
mod svg;
mod verify;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use tvball::oracle_raster::RasterError;
use tvball::solver::{rasterize_u, Breakpoints, Regime, SolverError};
use tvball::thresholds::{breakpoints, CaseFlag, Thresholds};
use tvball::{Solution, TwoBallConfig};

use config::{ConfigError, Output, RunConfig};

#[derive(Parser)]
#[command(name = "tvball", version, about = "Exact TV denoising of two disjoint balls")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Thresholds, case flags and the regime of each λ (report.json).
    Report(Args),
    /// u_λ on the grid as CSV / 16-bit PGM, level lines as SVG.
    Field(Args),
    /// Selected minimizer over an (s, λ) grid (phase.csv).
    Phase(Args),
    /// Analytic-vs-oracle checks (verify.json); exit 1 on any failure.
    Verify(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    /// Bad usage, config or environment: exit 2.
    Usage(String),
    /// Verification failed: exit 1.
    Verify(Vec<String>),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(format!("I/O error: {e}"))
    }
}

impl From<SolverError> for Failure {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Raster(RasterError::BoxTooSmall { .. }) => Failure::Usage(format!("BoxTooSmall: {e}")),
            e => Failure::Usage(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let result = threads().and_then(|()| match &cli.cmd {
        Cmd::Report(a) => with_setup(a, report),
        Cmd::Field(a) => with_setup(a, field),
        Cmd::Phase(a) => with_setup(a, phase),
        Cmd::Verify(a) => with_setup(a, verify_cmd),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Verify(names)) => {
            for n in names {
                eprintln!("FAIL: {n}");
            }
            ExitCode::from(1)
        }
    }
}

/// `TVBALL_THREADS` caps the worker pool of the library's parallel loops.
fn threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("TVBALL_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("TVBALL_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))
}

struct Setup<'a> {
    rc: RunConfig,
    cfg: TwoBallConfig,
    th: Thresholds,
    out: &'a Path,
}

fn with_setup(a: &Args, run: fn(&Setup) -> Result<(), Failure>) -> Result<(), Failure> {
    let rc = RunConfig::load(&a.config)?;
    let cfg = rc.geometry()?;
    let th = breakpoints(&cfg);
    fs::create_dir_all(&a.out)?;
    run(&Setup { rc, cfg, th, out: &a.out })
}

fn write_file(path: &Path, write: impl FnOnce(&mut BufWriter<fs::File>) -> Result<(), Failure>) -> Result<(), Failure> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write(&mut w)?;
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<String, Failure> {
    let text = json::to_string(value).map_err(|e| Failure::Usage(e.to_string()))?;
    fs::write(path, &text)?;
    Ok(text)
}

#[derive(Serialize)]
struct Geometry {
    r1: f64,
    r2: f64,
    d: f64,
}

#[derive(Serialize)]
struct RegimeRow {
    lambda: f64,
    regime: Regime,
    /// Value of u_λ on S1, the maximum of the solution.
    u_max: f64,
    breakpoints: Breakpoints,
}

#[derive(Serialize)]
struct Report {
    config: Geometry,
    interacting: bool,
    case_flag: CaseFlag,
    r_c: f64,
    #[serde(rename = "R1", skip_serializing_if = "Option::is_none")]
    big_r1: Option<f64>,
    #[serde(rename = "R2", skip_serializing_if = "Option::is_none")]
    big_r2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda2: Option<f64>,
    lambda3: f64,
    dual_norm: f64,
    lambda2_multiple_roots: bool,
    regimes: Vec<RegimeRow>,
}

fn report(st: &Setup) -> Result<(), Failure> {
    let th = &st.th;
    let mut regimes = Vec::new();
    for lambda in st.rc.lambdas(th) {
        let sol = Solution::new(&st.cfg, th, lambda)?;
        regimes.push(RegimeRow { lambda, regime: sol.regime(), u_max: sol.s_top().max(0.0), breakpoints: sol.breakpoints() });
    }
    let rep = Report {
        config: Geometry { r1: st.cfg.r1(), r2: st.cfg.r2(), d: st.cfg.d() },
        interacting: th.interacting,
        case_flag: th.case_flag,
        r_c: th.r_c,
        big_r1: th.r1,
        big_r2: th.r2,
        lambda1: th.lambda1,
        lambda2: th.lambda2,
        lambda3: th.lambda3,
        dual_norm: th.dual_norm,
        lambda2_multiple_roots: th.lambda2_multiple_roots,
        regimes,
    };
    print!("{}", write_json(&st.out.join("report.json"), &rep)?);
    Ok(())
}

#[derive(Serialize)]
struct FieldEntry {
    lambda: f64,
    regime: Regime,
    max: f64,
    levels: Vec<f64>,
    files: Vec<String>,
}

fn field(st: &Setup) -> Result<(), Failure> {
    let grid = st.rc.grid(&st.cfg).map_err(|e| Failure::Usage(e.to_string()))?;
    grid.require_cover(st.cfg.hull_bbox()).map_err(|e| Failure::Usage(format!("BoxTooSmall: {e}")))?;
    let mut entries = Vec::new();
    for (k, lambda) in st.rc.lambdas(&st.th).into_iter().enumerate() {
        let sol = Solution::new(&st.cfg, &st.th, lambda)?;
        let u = rasterize_u(&st.cfg, &st.th, lambda, grid)?;
        let stem = format!("field_{k:02}");
        let mut files = Vec::new();
        let levels: Vec<f64> = match &st.rc.levels {
            Some(l) => l.clone(),
            None if sol.s_top() > 0.0 => [0.1, 0.3, 0.5, 0.7, 0.9].iter().map(|f| f * sol.s_top()).collect(),
            None => Vec::new(),
        };
        for out in &st.rc.outputs {
            let name = match out {
                Output::Csv => format!("{stem}.csv"),
                Output::Pgm => format!("{stem}.pgm"),
                Output::Svg => format!("{stem}.svg"),
            };
            let path = st.out.join(&name);
            match out {
                Output::Csv => write_file(&path, |w| Ok(u.write_csv(w)?))?,
                Output::Pgm => write_file(&path, |w| Ok(u.write_pgm16(w)?))?,
                Output::Svg => {
                    let regions: Vec<_> = levels.iter().map(|&s| (s, sol.region(s))).collect();
                    fs::write(&path, svg::level_lines(&st.cfg, &grid, lambda, &regions))?;
                }
            }
            files.push(name);
        }
        entries.push(FieldEntry { lambda, regime: sol.regime(), max: u.max(), levels, files });
    }
    write_json(&st.out.join("fields.json"), &entries)?;
    Ok(())
}

fn phase(st: &Setup) -> Result<(), Failure> {
    let rc = &st.rc;
    let lmax = rc.phase_lambda_max.unwrap_or(1.1 * st.th.lambda3);
    write_file(&st.out.join("phase.csv"), |w| {
        writeln!(w, "lambda,s,regime,kind,energy")?;
        for li in 1..=rc.phase_n_lambda {
            let lambda = lmax * li as f64 / rc.phase_n_lambda as f64;
            let sol = Solution::new(&st.cfg, &st.th, lambda)?;
            for si in 0..rc.phase_n_s {
                let s = si as f64 / (rc.phase_n_s - 1) as f64;
                let d = sol.decision(s)?;
                writeln!(w, "{lambda:.16e},{s:.16e},{:?},{},{:.16e}", d.regime, d.kind.name(), d.energy)?;
            }
        }
        Ok(())
    })
}

fn verify_cmd(st: &Setup) -> Result<(), Failure> {
    let summary = verify::run(&st.rc, &st.cfg, &st.th).map_err(Failure::Usage)?;
    print!("{}", write_json(&st.out.join("verify.json"), &summary)?);
    if summary.passed {
        Ok(())
    } else {
        Err(Failure::Verify(summary.failed))
    }
}
