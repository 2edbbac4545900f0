use std::collections::HashMap;
use std::fmt::Display;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use latdeconv_core::deconv::{estimate_cf_form, estimate_direct};
use latdeconv_core::field::add_noise;
use latdeconv_core::harness::{run_validated, Experiment};
use latdeconv_core::{ExperimentConfig, FieldSample, LatticeRegion, SeedStream, Site};

const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_VERDICT: u8 = 4;

#[derive(Parser)]
#[command(name = "latdeconv", version, about = "Deconvolution density estimation on lattice random fields")]
struct Cli {
    /// Caps the number of worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one noisy field and write it as CSV.
    Simulate(SimulateArgs),
    /// Estimate the latent density from a CSV of noisy observations.
    Estimate(EstimateArgs),
    /// Run the Monte Carlo normality experiment.
    Clt(CltArgs),
    /// Run admissibility and blocking-lemma checks without simulating.
    Check(CheckArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Index into the config's region list; defaults to the last region.
    #[arg(long)]
    region: Option<usize>,
    /// Also write the latent field and the noise to `<stem>_x.csv` and `<stem>_theta.csv`.
    #[arg(long)]
    latent: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Form {
    Direct,
    Cf,
}

#[derive(Args)]
struct EstimateArgs {
    /// CSV of site coordinates and observed values.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Evaluation grid as `min:max:count`.
    #[arg(long, value_parser = parse_grid)]
    grid: Grid,
    #[arg(long, value_enum, default_value = "direct")]
    form: Form,
    #[arg(long)]
    region: Option<usize>,
    /// Overrides the bandwidth given by the schedule.
    #[arg(long)]
    bandwidth: Option<f64>,
}

#[derive(Args)]
struct CltArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    config: PathBuf,
    /// Writes the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

fn config_err(e: impl Display) -> Failure {
    Failure { code: EXIT_CONFIG, message: e.to_string() }
}

fn data_err(e: impl Display) -> Failure {
    Failure { code: EXIT_DATA, message: e.to_string() }
}

type CliResult<T = ()> = Result<T, Failure>;

#[derive(Clone)]
struct Grid(Vec<f64>);

fn parse_grid(spec: &str) -> Result<Grid, String> {
    grid_points(spec).map(Grid)
}

fn grid_points(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, count] = parts[..] else {
        return Err("expected min:max:count".into());
    };
    let lo: f64 = lo.trim().parse().map_err(|e| format!("min: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("max: {e}"))?;
    let count: usize = count.trim().parse().map_err(|e| format!("count: {e}"))?;
    if !lo.is_finite() || !hi.is_finite() {
        return Err("grid bounds must be finite".into());
    }
    match count {
        0 => Err("grid is empty".into()),
        1 if lo == hi => Ok(vec![lo]),
        1 => Err("a one-point grid needs min = max".into()),
        _ if hi <= lo => Err("grid needs min < max".into()),
        _ => Ok((0..count)
            .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
            .collect()),
    }
}

#[derive(Serialize)]
struct RunManifest {
    command: &'static str,
    tool_version: &'static str,
    config_digest: String,
    seed: u64,
    started_unix: f64,
    finished_unix: f64,
    outputs: Vec<String>,
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

/// SHA-256 of the canonical JSON form: object keys sorted, no whitespace.
fn config_digest(text: &str) -> CliResult<String> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(config_err)?;
    let canonical = serde_json::to_string(&value).map_err(config_err)?;
    Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
}

struct LoadedConfig {
    experiment: Experiment,
    digest: String,
}

fn load_config(path: &Path, seed: Option<u64>) -> CliResult<LoadedConfig> {
    let text = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let digest = config_digest(&text)?;
    let mut config = ExperimentConfig::from_json(&text).map_err(config_err)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    let experiment = config.validate().map_err(config_err)?;
    Ok(LoadedConfig { experiment, digest })
}

fn pick_region(exp: &Experiment, index: Option<usize>) -> CliResult<(usize, Arc<LatticeRegion>)> {
    let i = index.unwrap_or(exp.regions.len() - 1);
    exp.regions
        .get(i)
        .map(|r| (i, Arc::clone(r)))
        .ok_or_else(|| config_err(format!("region index {i} out of range ({} regions)", exp.regions.len())))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| data_err(format!("{}: {e}", path.display())))
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| data_err(format!("{}: {e}", path.display()))
}

fn write_manifest(path: &Path, manifest: &RunManifest) -> CliResult {
    let text = serde_json::to_string_pretty(manifest).map_err(data_err)?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}_{suffix}.csv"))
}

fn write_field_csv(path: &Path, sample: &FieldSample) -> CliResult {
    let mut w = create(path)?;
    let d = sample.region().dimension();
    let header: Vec<String> = (1..=d).map(|k| format!("s{k}")).chain(["value".to_string()]).collect();
    let io = io_err(path);
    writeln!(w, "{}", header.join(",")).map_err(&io)?;
    for (site, v) in sample.region().sites().iter().zip(sample.values()) {
        for c in site.coords() {
            write!(w, "{c},").map_err(&io)?;
        }
        writeln!(w, "{v}").map_err(&io)?;
    }
    w.flush().map_err(&io)
}

fn read_field_csv(path: &Path, region: &Arc<LatticeRegion>) -> CliResult<FieldSample> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| data_err(format!("{}: empty file", path.display())))?;
    let d = region.dimension();
    if header.split(',').count() != d + 1 {
        return Err(data_err(format!(
            "{}: expected {} site columns and a value column, header is '{header}'",
            path.display(),
            d
        )));
    }
    let index: HashMap<&Site, usize> = region.sites().iter().enumerate().map(|(i, s)| (s, i)).collect();
    let mut values = vec![f64::NAN; region.len()];
    let mut rows = 0;
    for (lineno, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let bad = |what: &str| data_err(format!("{}:{}: {what}", path.display(), lineno + 2));
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != d + 1 {
            return Err(bad("wrong number of columns"));
        }
        let coords = fields[..d]
            .iter()
            .map(|f| f.parse::<i64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| bad("site coordinates must be integers"))?;
        let value: f64 = fields[d].parse().map_err(|_| bad("value is not a number"))?;
        let site = Site::new(coords);
        let &i = index.get(&site).ok_or_else(|| bad("site outside the configured region"))?;
        if !values[i].is_nan() {
            return Err(bad("duplicate site"));
        }
        values[i] = value;
        rows += 1;
    }
    if rows != region.len() {
        return Err(data_err(format!(
            "{}: {rows} sites, the configured region has {}",
            path.display(),
            region.len()
        )));
    }
    FieldSample::new(Arc::clone(region), values).map_err(data_err)
}

fn cmd_simulate(args: SimulateArgs) -> CliResult {
    let started = unix_now();
    let cfg = load_config(&args.config, args.seed)?;
    let exp = &cfg.experiment;
    let (idx, region) = pick_region(exp, args.region)?;
    // the same stream as replicate 0 of the experiment on this region
    let stream = SeedStream::new(exp.config.seed, (idx as u64) << 32);
    let x = exp.model.simulate(&region, stream).map_err(data_err)?;
    let y = add_noise(&x, &exp.noise, stream);
    write_field_csv(&args.out, &y)?;
    let mut outputs = vec![args.out.display().to_string()];
    if args.latent {
        let theta: Vec<f64> = y.values().iter().zip(x.values()).map(|(a, b)| a - b).collect();
        let theta = FieldSample::new(Arc::clone(&region), theta).map_err(data_err)?;
        for (suffix, sample) in [("x", &x), ("theta", &theta)] {
            let path = sibling(&args.out, suffix);
            write_field_csv(&path, sample)?;
            outputs.push(path.display().to_string());
        }
    }
    write_manifest(
        &manifest_path(&args.out),
        &RunManifest {
            command: "simulate",
            tool_version: env!("CARGO_PKG_VERSION"),
            config_digest: cfg.digest,
            seed: exp.config.seed,
            started_unix: started,
            finished_unix: unix_now(),
            outputs,
        },
    )
}

fn cmd_estimate(args: EstimateArgs) -> CliResult {
    let started = unix_now();
    let cfg = load_config(&args.config, None)?;
    let exp = &cfg.experiment;
    let (_, region) = pick_region(exp, args.region)?;
    let y = read_field_csv(&args.data, &region)?;
    let b = args.bandwidth.unwrap_or_else(|| exp.config.schedule.bandwidth(y.len()));
    let kernel = exp.config.kernel;
    let est = match args.form {
        Form::Direct => estimate_direct(&y, kernel, exp.noise, b, &args.grid.0),
        Form::Cf => estimate_cf_form(&y, kernel, exp.noise, b, &args.grid.0),
    }
    .map_err(data_err)?;
    let mut w = create(&args.out)?;
    est.write_csv(&mut w).map_err(io_err(&args.out))?;
    w.flush().map_err(io_err(&args.out))?;
    write_manifest(
        &manifest_path(&args.out),
        &RunManifest {
            command: "estimate",
            tool_version: env!("CARGO_PKG_VERSION"),
            config_digest: cfg.digest,
            seed: exp.config.seed,
            started_unix: started,
            finished_unix: unix_now(),
            outputs: vec![args.out.display().to_string()],
        },
    )
}

fn cmd_clt(args: CltArgs) -> CliResult {
    let started = unix_now();
    let cfg = load_config(&args.config, args.seed)?;
    let exp = &cfg.experiment;
    let check = exp.check_report().map_err(config_err)?;
    let report = run_validated(exp).map_err(data_err)?;
    fs::create_dir_all(&args.out).map_err(io_err(&args.out))?;

    let mut outputs = Vec::new();
    let mut emit = |name: &str, body: &dyn Fn(&mut BufWriter<File>) -> std::io::Result<()>| -> CliResult {
        let path = args.out.join(name);
        let mut w = create(&path)?;
        body(&mut w).and_then(|_| w.flush()).map_err(io_err(&path))?;
        outputs.push(path.display().to_string());
        Ok(())
    };
    for (i, region) in report.regions.iter().enumerate() {
        emit(&format!("replicates_region{i}.csv"), &|w| region.write_replicates_csv(w))?;
    }
    emit("summary.json", &|w| writeln!(w, "{}", report.summary_json()))?;
    emit("check.json", &|w| {
        writeln!(w, "{}", serde_json::to_string_pretty(&check).expect("check report serializes"))
    })?;
    emit("variance_curve.csv", &|w| {
        writeln!(w, "n_sites,bandwidth,x,variance_ratio")?;
        for r in &report.regions {
            for p in &r.points {
                writeln!(w, "{},{},{},{}", r.n_sites, r.bandwidth, p.x, p.variance_ratio)?;
            }
        }
        Ok(())
    })?;
    emit("bias_curve.csv", &|w| {
        writeln!(w, "n_sites,bandwidth,x,mean_fhat,f_x,bias")?;
        for r in &report.regions {
            for p in &r.points {
                let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
                writeln!(w, "{},{},{},{},{},{}", r.n_sites, r.bandwidth, p.x, p.mean_fhat, opt(p.f_x), opt(p.bias))?;
            }
        }
        Ok(())
    })?;
    write_manifest(
        &args.out.join("manifest.json"),
        &RunManifest {
            command: "clt",
            tool_version: env!("CARGO_PKG_VERSION"),
            config_digest: cfg.digest,
            seed: exp.config.seed,
            started_unix: started,
            finished_unix: unix_now(),
            outputs,
        },
    )?;

    for v in &report.verdicts {
        println!("{} {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.name, v.detail);
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure { code: EXIT_VERDICT, message: "one or more verdicts failed".into() })
    }
}

fn cmd_check(args: CheckArgs) -> CliResult {
    let cfg = load_config(&args.config, None)?;
    let report = cfg.experiment.check_report().map_err(config_err)?;
    let text = serde_json::to_string_pretty(&report).map_err(data_err)? + "\n";
    match &args.out {
        Some(path) => fs::write(path, text).map_err(io_err(path)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Clt(a) => cmd_clt(a),
        Command::Check(a) => cmd_check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
