use std::f64::consts::TAU;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use tdsim::imaging::{projected_area, read_pgm, threshold, GrayImage};
use tdsim::nav::{navigate, read_catalog, Extraction, MatchError, NavError, SkyWindow};
use tdsim::scenario::load_scenario;
use tdsim::sysid::{
    estimate_response, eval_w, fit_model, infer_sweep, initial_guess, log_space, usable_band, SysIdError, TransferModel,
};
use tdsim::topology::{format_groups, ChainComplex};

#[derive(Parser)]
#[command(name = "tdsim", version, about = "Simulation, identification, star navigation and homology tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write the recorded channels as CSV.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long = "t-end")]
        t_end: Option<f64>,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit W(s) to a chirp record with columns `u` and `y`.
    Identify {
        record: PathBuf,
        #[arg(long)]
        dt: f64,
        /// Starting parameters (JSON with k, T1..T8).
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Bode table of measured and fitted response; next to `--out` by default.
        #[arg(long)]
        bode: Option<PathBuf>,
        /// Number of analysis frequencies across the usable band.
        #[arg(long, default_value_t = 60)]
        points: usize,
    },
    /// Determine boresight and roll from a star image.
    Navigate {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        ra0: f64,
        #[arg(long)]
        de0: f64,
        #[arg(long = "ra-span")]
        ra_span: f64,
        #[arg(long = "de-span")]
        de_span: f64,
        #[arg(long = "mag-min")]
        mag_min: f64,
        /// Pixels per degree.
        #[arg(long = "plate-scale")]
        plate_scale: f64,
    },
    /// Integer homology of a chain complex.
    Homology {
        complex: PathBuf,
        /// Coefficients in Z/p instead of Z.
        #[arg(long)]
        modulus: Option<u64>,
        #[arg(long)]
        cohomology: bool,
    },
    /// Projected area of a silhouette image.
    Aero {
        #[arg(long)]
        image: PathBuf,
        /// Pixel footprint (m per pixel).
        #[arg(long)]
        scale: f64,
        /// Foreground threshold; half of maxval by default.
        #[arg(long)]
        level: Option<u16>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn numeric(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }
}

type Outcome = Result<(), Failure>;

fn read_image(path: &Path) -> Result<GrayImage, Failure> {
    let data = fs::read(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    read_pgm(&data).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn io_failure(path: &Path) -> impl Fn(io::Error) -> Failure + '_ {
    move |e| Failure::input(format!("{}: {e}", path.display()))
}

fn run_simulate(scenario: &Path, dt: Option<f64>, t_end: Option<f64>, out: Option<&Path>) -> Outcome {
    let fail = |e: tdsim::scenario::ScenarioError| Failure { code: e.exit_code() as u8, message: format!("{}: {e}", scenario.display()) };
    let mut sc = load_scenario(scenario).map_err(fail)?;
    if let Some(dt) = dt {
        sc.sim.dt = dt;
    }
    if let Some(t) = t_end {
        sc.sim.t_end = t;
    }
    let table = sc.run().map_err(fail)?;
    match out {
        Some(path) => {
            let mut w = create(path)?;
            table.write_csv(&mut w).and_then(|_| w.flush()).map_err(io_failure(path))
        }
        None => table.write_csv(io::stdout().lock()).map_err(|e| Failure::input(e.to_string())),
    }
}

fn sysid_failure(e: SysIdError) -> Failure {
    match e {
        SysIdError::Unobservable(_) | SysIdError::NonFiniteInit | SysIdError::Pole(_) => Failure::numeric(e.to_string()),
        _ => Failure::input(e.to_string()),
    }
}

/// Columns `u` and `y` by name, otherwise the first two columns other than `t`.
fn read_uy(path: &Path) -> Result<(Vec<f64>, Vec<f64>), Failure> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = rd.headers().map_err(|e| Failure::input(e.to_string()))?.iter().map(|h| h.trim().to_string()).collect();
    let find = |n: &str| headers.iter().position(|h| h == n);
    let (iu, iy) = match (find("u"), find("y")) {
        (Some(u), Some(y)) => (u, y),
        _ => {
            let rest: Vec<usize> = (0..headers.len()).filter(|&i| headers[i] != "t").collect();
            if rest.len() < 2 {
                return Err(Failure::input(format!("{}: need columns `u` and `y`", path.display())));
            }
            (rest[0], rest[1])
        }
    };
    let (mut u, mut y) = (Vec::new(), Vec::new());
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        let num = |i: usize| -> Result<f64, Failure> {
            let s = rec.get(i).unwrap_or("").trim();
            s.parse().map_err(|_| Failure::input(format!("{} row {}: bad number `{s}`", path.display(), line + 2)))
        };
        u.push(num(iu)?);
        y.push(num(iy)?);
    }
    Ok((u, y))
}

fn run_identify(record: &Path, dt: f64, init: Option<&Path>, out: &Path, bode: Option<&Path>, points: usize) -> Outcome {
    if !(dt > 0.0) {
        return Err(Failure::input(format!("--dt must be positive, got {dt}")));
    }
    let (u, y) = read_uy(record)?;
    let sweep = infer_sweep(&u, dt).map_err(sysid_failure)?;
    let (lo, hi) = usable_band(&sweep, dt).ok_or_else(|| Failure::input("the record is too short for any analysis window"))?;
    let resp = estimate_response(&u, &y, dt, &log_space(lo, hi, points.max(9))).map_err(sysid_failure)?;
    let start = match init {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(io_failure(p))?;
            serde_json::from_str::<TransferModel>(&text).map_err(|e| Failure::input(format!("{}: {e}", p.display())))?
        }
        None => initial_guess(&resp),
    };
    let fit = fit_model(&resp, &start).map_err(sysid_failure)?;
    let text = serde_json::to_string_pretty(&fit.model).expect("plain numbers");
    fs::write(out, text + "\n").map_err(io_failure(out))?;

    let bode = bode.map(Path::to_path_buf).unwrap_or_else(|| out.with_extension("bode.csv"));
    let mut w = create(&bode)?;
    let write = |w: &mut BufWriter<File>| -> io::Result<()> {
        writeln!(w, "omega,gain_db,phase_deg,fit_gain_db,fit_phase_deg")?;
        for i in 0..resp.len() {
            let m = eval_w(&fit.model, resp.omega[i]).map_err(io::Error::other)?;
            // fitted phase on the same branch as the measured one
            let d = m.arg() - resp.phase[i];
            let fit_phase = resp.phase[i] + d - TAU * (d / TAU).round();
            writeln!(
                w,
                "{},{},{},{},{}",
                resp.omega[i],
                20.0 * resp.gain[i].log10(),
                resp.phase[i].to_degrees(),
                20.0 * m.norm().log10(),
                fit_phase.to_degrees()
            )?;
        }
        w.flush()
    };
    write(&mut w).map_err(io_failure(&bode))?;
    eprintln!("fit residual {:.3e} after {} iterations over [{lo:.4}, {hi:.4}] rad/s", fit.residual, fit.iterations);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_navigate(image: &Path, catalog: &Path, ra0: f64, de0: f64, ra_span: f64, de_span: f64, mag_min: f64, plate_scale: f64) -> Outcome {
    let img = read_image(image)?;
    let file = File::open(catalog).map_err(io_failure(catalog))?;
    let stars = read_catalog(BufReader::new(file)).map_err(|e| Failure::input(format!("{}: {e}", catalog.display())))?;
    if !(plate_scale > 0.0 && ra_span > 0.0 && de_span > 0.0) {
        return Err(Failure::input("spans and plate scale must be positive"));
    }
    let window = SkyWindow::centered(ra0, de0, ra_span, de_span, mag_min);
    let sol = navigate(&img, &stars, &window, plate_scale, Extraction::for_image(&img)).map_err(|e| match e {
        NavError::Projection(_) => Failure::input(e.to_string()),
        NavError::Match(MatchError::TooFew { .. }) => Failure::input(e.to_string()),
        NavError::Match(_) => Failure::numeric(e.to_string()),
    })?;
    let out = json!({
        "ra_deg": sol.attitude.ra,
        "de_deg": sol.attitude.de,
        "roll_deg": sol.attitude.roll.to_degrees(),
        "a_px": sol.transform.a,
        "b_px": sol.transform.b,
        "phi_rad": sol.transform.phi,
        "inliers": sol.inliers,
        "rms_px": sol.rms_px,
        "image_points": sol.image_points,
        "catalog_points": sol.catalog_points,
    });
    println!("{}", serde_json::to_string_pretty(&out).expect("plain values"));
    Ok(())
}

fn run_homology(path: &Path, modulus: Option<u64>, cohomology: bool) -> Outcome {
    let text = fs::read_to_string(path).map_err(io_failure(path))?;
    let cx = ChainComplex::from_json(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let groups = match (modulus, cohomology) {
        (Some(_), true) => return Err(Failure::input("--modulus and --cohomology cannot be combined")),
        (Some(m), false) => cx.homology_with_coefficients(m),
        (None, true) => cx.cohomology(),
        (None, false) => cx.homology(),
    }
    .map_err(|e| Failure::input(e.to_string()))?;
    println!("{}", format_groups(&groups, cohomology));
    Ok(())
}

fn run_aero(image: &Path, scale: f64, level: Option<u16>) -> Outcome {
    if !(scale > 0.0) {
        return Err(Failure::input(format!("--scale must be positive, got {scale}")));
    }
    let img = read_image(image)?;
    let mask = threshold(&img, level.unwrap_or_else(|| img.maxval().div_ceil(2)));
    let out = json!({ "pixels": mask.count(), "scale_m_per_px": scale, "area_m2": projected_area(&mask, scale) });
    println!("{}", serde_json::to_string_pretty(&out).expect("plain values"));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { scenario, dt, t_end, out } => run_simulate(scenario, *dt, *t_end, out.as_deref()),
        Command::Identify { record, dt, init, out, bode, points } => {
            run_identify(record, *dt, init.as_deref(), out, bode.as_deref(), *points)
        }
        Command::Navigate { image, catalog, ra0, de0, ra_span, de_span, mag_min, plate_scale } => {
            run_navigate(image, catalog, *ra0, *de0, *ra_span, *de_span, *mag_min, *plate_scale)
        }
        Command::Homology { complex, modulus, cohomology } => run_homology(complex, *modulus, *cohomology),
        Command::Aero { image, scale, level } => run_aero(image, *scale, *level),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
