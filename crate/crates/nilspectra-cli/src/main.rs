//! Command-line front end: builds algebra files for the built-in families,
//! decides isospectrality and equivalence of pairs, enumerates Laplace
//! spectra of compact quotients, and tabulates Ricci data along
//! deformations.
//!
//! Exit codes: 0 for success or an affirmative verdict, 2 for a negative
//! verdict (spectra differ, pair inequivalent, family not isospectral),
//! 1 for usage or runtime errors. Reports go to stdout in the format picked
//! by `--format`; data files land in the `--out` directory. With a fixed
//! seed and config, reports are byte-identical across runs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use nilspectra::curvature::{curvature_deformation_scan, ricci_report};
use nilspectra::exactlat::{parse_rational, RationalMatrix};
use nilspectra::families::{
    build_jab, build_jab_exact, deform, integer_instances, quaternion_algebra_pair,
    DeformationFamily,
};
use nilspectra::isocheck::{
    genericity_rank, is_equivalent, is_isospectral, is_isospectral_seeded, random_jmap,
    EquivalenceCertificate,
};
use nilspectra::mat::Mat;
use nilspectra::nilalg::{AlgebraDocument, GammaData, MetricTwoStepAlgebra};
use nilspectra::spectra::{compare_spectra, full_spectrum, SpectrumMultiset};
use nilspectra::Real;

const EXIT_NEGATIVE: u8 = 2;

/// Spectral and curvature toolkit for two-step nilmanifold lattices.
#[derive(Parser)]
#[command(name = "nilspectra", version, about)]
struct Cli {
    /// JSON file with default seed, cutoff, tol, samples, format, out,
    /// prefix; explicit flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Report format printed to stdout.
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    /// Directory for output files (created if missing).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct algebra files for the built-in families.
    BuildFamily(BuildFamilyArgs),
    /// Decide whether two algebras have matching j-spectra in every central
    /// direction (exit 0 yes, 2 no).
    Isospectral(IsospectralArgs),
    /// Search for an intertwining pair (A, C) or report the obstruction
    /// (exit 0 equivalent, 2 inequivalent or unresolved).
    Equivalence(PairArgs),
    /// Enumerate the Laplace spectrum of the compact quotient up to a
    /// cutoff; writes CSV and JSON files.
    Spectrum(SpectrumArgs),
    /// Compare two spectrum files as multisets (exit 0 equal, 2 not).
    Compare(CompareArgs),
    /// Tabulate Ricci data along a deformation family.
    Curvature(CurvatureArgs),
    /// Measure the rank of the isospectrality constraints at a random
    /// point and the leftover deformation dimension.
    Genericity(GenericityArgs),
    /// Run a preset end-to-end pipeline.
    Demo(DemoArgs),
}

#[derive(Args)]
struct BuildFamilyArgs {
    /// Which family to build.
    #[arg(long, value_enum)]
    kind: FamilyKind,
    /// Diagonal of the positive matrix T, e.g. "1,2,3" (quaternion).
    #[arg(long)]
    t: Option<String>,
    /// Frequencies a1 < a2 < a3, e.g. "1,2,3" (deform, integer-search).
    #[arg(long)]
    a: Option<String>,
    /// Off-diagonal magnitudes b12, b13, b23, e.g. "4,7,7" (deform).
    #[arg(long)]
    b: Option<String>,
    /// Deformation parameter; at the default 0 the entries stay exact.
    #[arg(long)]
    u: Option<f64>,
    /// Bound on the entries searched for integer partners (integer-search).
    #[arg(long)]
    max: Option<i64>,
    /// Stem for the written files.
    #[arg(long)]
    prefix: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FamilyKind {
    Quaternion,
    Deform,
    IntegerSearch,
}

#[derive(Args)]
struct IsospectralArgs {
    /// Algebra file for the left side.
    #[arg(long)]
    left: PathBuf,
    /// Algebra file for the right side.
    #[arg(long)]
    right: PathBuf,
    /// Relative tolerance on frequency agreement.
    #[arg(long)]
    tol: Option<f64>,
    /// Seed for the sampled central directions; required.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct PairArgs {
    /// Algebra file for the left side.
    #[arg(long)]
    left: PathBuf,
    /// Algebra file for the right side.
    #[arg(long)]
    right: PathBuf,
}

#[derive(Args)]
struct SpectrumArgs {
    /// Algebra file to enumerate.
    #[arg(long)]
    algebra: PathBuf,
    /// Upper bound on the eigenvalues; required (flag or config).
    #[arg(long)]
    cutoff: Option<f64>,
    /// Stem for the written files.
    #[arg(long)]
    prefix: Option<String>,
}

#[derive(Args)]
struct CompareArgs {
    /// Spectrum JSON for the left side.
    #[arg(long)]
    left: PathBuf,
    /// Spectrum JSON for the right side.
    #[arg(long)]
    right: PathBuf,
    /// Relative tolerance on eigenvalue agreement.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct CurvatureArgs {
    /// Built-in family preset.
    #[arg(long, value_enum)]
    family: Option<FamilyPreset>,
    /// Frequencies a1 < a2 < a3, e.g. "1,2,3".
    #[arg(long)]
    a: Option<String>,
    /// Off-diagonal magnitudes b12, b13, b23, e.g. "4,7,7".
    #[arg(long)]
    b: Option<String>,
    /// Number of equispaced parameter samples.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FamilyPreset {
    #[value(name = "deformation-2-3")]
    Deformation23,
}

#[derive(Args)]
struct GenericityArgs {
    /// Dimension of the nonsingular part v.
    #[arg(long)]
    m: usize,
    /// Seed for the random two-generator map; required.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of consecutive seeds to sample.
    #[arg(long)]
    count: Option<usize>,
}

#[derive(Args)]
struct DemoArgs {
    /// Preset pipeline to run.
    #[arg(value_enum)]
    preset: DemoPreset,
    /// Spectrum cutoff for example-3-11 (default 150).
    #[arg(long)]
    cutoff: Option<f64>,
    /// Parameter samples for deformation-2-3 (default 9).
    #[arg(long)]
    samples: Option<usize>,
    /// Stem for written files.
    #[arg(long)]
    prefix: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DemoPreset {
    /// Quaternionic pair: isospectral, inequivalent, split Ricci spectra.
    #[value(name = "example-1-10")]
    Example110,
    /// Integer pair b = (4,7,7) vs (5,5,8): equal Laplace spectra.
    #[value(name = "example-3-11")]
    Example311,
    /// Curvature scan plus pairwise isospectrality along the family.
    #[value(name = "deformation-2-3")]
    Deformation23,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct JobConfig {
    seed: Option<u64>,
    cutoff: Option<f64>,
    tol: Option<f64>,
    samples: Option<usize>,
    format: Option<OutputFormat>,
    out: Option<PathBuf>,
    prefix: Option<String>,
}

struct Settings {
    config: JobConfig,
    format: OutputFormat,
    out_dir: PathBuf,
}

impl Settings {
    fn new(cli: &Cli) -> Result<Self> {
        let config = match &cli.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config {}", path.display()))?
            }
            None => JobConfig::default(),
        };
        let format = cli.format.or(config.format).unwrap_or(OutputFormat::Json);
        let out_dir = cli
            .out
            .clone()
            .or_else(|| config.out.clone())
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(Settings { config, format, out_dir })
    }

    fn seed(&self, flag: Option<u64>) -> Result<u64> {
        flag.or(self.config.seed).ok_or_else(|| {
            anyhow!("a seed is required for randomized checks; pass --seed or set \"seed\" in the config")
        })
    }

    fn cutoff(&self, flag: Option<f64>, default: Option<f64>) -> Result<f64> {
        let c = flag.or(self.config.cutoff).or(default).ok_or_else(|| {
            anyhow!("a cutoff is required; pass --cutoff or set \"cutoff\" in the config")
        })?;
        ensure!(c.is_finite() && c > 0.0, "cutoff must be positive, got {c}");
        Ok(c)
    }

    fn tol(&self, flag: Option<f64>, default: f64) -> Result<f64> {
        let t = flag.or(self.config.tol).unwrap_or(default);
        ensure!(t.is_finite() && t > 0.0, "tolerance must be positive, got {t}");
        Ok(t)
    }

    fn samples(&self, flag: Option<usize>, default: usize) -> Result<usize> {
        let s = flag.or(self.config.samples).unwrap_or(default);
        ensure!(s >= 1, "samples must be at least 1");
        Ok(s)
    }

    fn prefix(&self, flag: Option<String>, default: &str) -> String {
        flag.or_else(|| self.config.prefix.clone())
            .unwrap_or_else(|| default.to_string())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run() -> Result<u8> {
    init_thread_pool()?;
    // Clap exits with 2 by default; that code is reserved for negative
    // verdicts, so usage errors are remapped to 1.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return Ok(code);
        }
    };
    let settings = Settings::new(&cli)?;
    match &cli.command {
        Command::BuildFamily(args) => cmd_build_family(&settings, args),
        Command::Isospectral(args) => cmd_isospectral(&settings, args),
        Command::Equivalence(args) => cmd_equivalence(&settings, args),
        Command::Spectrum(args) => cmd_spectrum(&settings, args),
        Command::Compare(args) => cmd_compare(&settings, args),
        Command::Curvature(args) => cmd_curvature(&settings, args),
        Command::Genericity(args) => cmd_genericity(&settings, args),
        Command::Demo(args) => cmd_demo(&settings, args),
    }
}

/// All orchestration is sequential; the env var only sizes the worker pool
/// used inside the spectrum enumeration.
fn init_thread_pool() -> Result<()> {
    if let Ok(raw) = std::env::var("NILSPECTRA_THREADS") {
        let n: usize = raw
            .trim()
            .parse()
            .with_context(|| format!("NILSPECTRA_THREADS must be a positive integer, got {raw:?}"))?;
        ensure!(n >= 1, "NILSPECTRA_THREADS must be at least 1");
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("installing the global worker pool")?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Shared plumbing

/// Reports print floats with 15 significant digits; comparisons always run
/// on the stored full-precision values, never on rendered text.
fn fmt15(x: f64) -> String {
    format!("{x:.14e}")
}

fn sha_hex(data: &str) -> String {
    let digest = Sha256::digest(data.as_bytes());
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// Hashes identify the algebra (everything) and the lattice part of a
/// document, so spectrum files can be traced back to their inputs.
fn doc_hashes(doc: &AlgebraDocument) -> (String, String) {
    let canon = doc.canonical_string();
    let lattice_part = canon
        .find(";log:")
        .map(|i| &canon[i + 1..])
        .unwrap_or(canon.as_str());
    (sha_hex(&canon), sha_hex(lattice_part))
}

fn load_algebra(path: &Path) -> Result<(AlgebraDocument, MetricTwoStepAlgebra, GammaData)> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading algebra file {}", path.display()))?;
    let doc = AlgebraDocument::from_json(&text)
        .with_context(|| format!("parsing algebra file {}", path.display()))?;
    let (alg, gamma) = doc
        .into_parts::<Real>()
        .with_context(|| format!("validating algebra file {}", path.display()))?;
    Ok((doc, alg, gamma))
}

fn write_document(settings: &Settings, name: &str, doc: &AlgebraDocument) -> Result<PathBuf> {
    fs::create_dir_all(&settings.out_dir)
        .with_context(|| format!("creating {}", settings.out_dir.display()))?;
    let path = settings.path(name);
    fs::write(&path, doc.to_json() + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// On-disk spectrum format: full-precision eigenvalues with exact counts.
#[derive(Serialize, Deserialize)]
struct SpectrumFile {
    cutoff: f64,
    algebra_hash: String,
    lattice_hash: String,
    total_count: u64,
    entries: Vec<(f64, u64)>,
}

fn write_spectrum(
    settings: &Settings,
    prefix: &str,
    spec: &SpectrumMultiset,
    doc: &AlgebraDocument,
) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(&settings.out_dir)
        .with_context(|| format!("creating {}", settings.out_dir.display()))?;
    let (algebra_hash, lattice_hash) = doc_hashes(doc);
    let csv_path = settings.path(&format!("{prefix}.csv"));
    fs::write(&csv_path, spec.to_csv())
        .with_context(|| format!("writing {}", csv_path.display()))?;
    let file = SpectrumFile {
        cutoff: spec.cutoff(),
        algebra_hash,
        lattice_hash,
        total_count: spec.total_count(),
        entries: spec.entries().to_vec(),
    };
    let json_path = settings.path(&format!("{prefix}.json"));
    let text = serde_json::to_string_pretty(&file).context("serializing spectrum")?;
    fs::write(&json_path, text + "\n")
        .with_context(|| format!("writing {}", json_path.display()))?;
    Ok((csv_path, json_path))
}

fn read_spectrum(path: &Path) -> Result<(SpectrumFile, SpectrumMultiset)> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading spectrum file {}", path.display()))?;
    let file: SpectrumFile = serde_json::from_str(&text)
        .with_context(|| format!("parsing spectrum file {}", path.display()))?;
    ensure!(
        file.cutoff.is_finite() && file.cutoff > 0.0,
        "spectrum file {} has a bad cutoff",
        path.display()
    );
    let spec = SpectrumMultiset::from_raw(file.entries.clone(), file.cutoff);
    Ok((file, spec))
}

fn emit<T: Serialize>(settings: &Settings, report: &T, csv: String) -> Result<()> {
    match settings.format {
        OutputFormat::Json => {
            let text = serde_json::to_string_pretty(report).context("serializing report")?;
            println!("{text}");
        }
        OutputFormat::Csv => print!("{csv}"),
    }
    Ok(())
}

fn csv_kv(rows: &[(&str, String)]) -> String {
    let mut out = String::from("key,value\n");
    for (k, v) in rows {
        out.push_str(k);
        out.push(',');
        out.push_str(v);
        out.push('\n');
    }
    out
}

fn parse_triple_rat(s: &str, what: &str) -> Result<[BigRational; 3]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    ensure!(parts.len() == 3, "{what} needs three comma-separated values");
    let mut out = Vec::with_capacity(3);
    for p in &parts {
        out.push(
            parse_rational(p).map_err(|_| anyhow!("cannot parse {what} entry {p:?} as a rational"))?,
        );
    }
    Ok([out[0].clone(), out[1].clone(), out[2].clone()])
}

fn parse_triple_f64(s: &str, what: &str) -> Result<[f64; 3]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    ensure!(parts.len() == 3, "{what} needs three comma-separated values");
    let mut out = [0.0; 3];
    for (slot, p) in out.iter_mut().zip(&parts) {
        *slot = p
            .parse::<f64>()
            .map_err(|_| anyhow!("cannot parse {what} entry {p:?} as a number"))?;
    }
    Ok(out)
}

fn parse_triple_i64(s: &str, what: &str) -> Result<[i64; 3]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    ensure!(parts.len() == 3, "{what} needs three comma-separated values");
    let mut out = [0i64; 3];
    for (slot, p) in out.iter_mut().zip(&parts) {
        *slot = p
            .parse::<i64>()
            .map_err(|_| anyhow!("cannot parse {what} entry {p:?} as an integer"))?;
    }
    Ok(out)
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

fn diag_matrix(d: &[BigRational; 3]) -> RationalMatrix {
    RationalMatrix::from_fn(3, 3, |i, l| if i == l { d[i].clone() } else { BigRational::zero() })
}

fn mat_rows(m: &Mat<Real>) -> Vec<Vec<f64>> {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|l| m[(i, l)]).collect())
        .collect()
}

// ---------------------------------------------------------------------------
// build-family

#[derive(Serialize)]
struct BuildReport {
    kind: String,
    m: usize,
    r: usize,
    files: Vec<String>,
    algebra_hashes: Vec<String>,
}

#[derive(Serialize)]
struct IntegerRow {
    b: [i64; 3],
    b_new: [i64; 3],
    u: String,
}

#[derive(Serialize)]
struct IntegerSearchReport {
    kind: String,
    a: [i64; 3],
    max: i64,
    count: usize,
    rows: Vec<IntegerRow>,
}

fn cmd_build_family(settings: &Settings, args: &BuildFamilyArgs) -> Result<u8> {
    match args.kind {
        FamilyKind::Quaternion => {
            let t_raw = args
                .t
                .as_deref()
                .ok_or_else(|| anyhow!("--kind quaternion needs --t with the diagonal of T"))?;
            let t = parse_triple_rat(t_raw, "--t")?;
            let (left, right) = quaternion_algebra_pair::<Real>(&diag_matrix(&t))?;
            let gamma = GammaData::standard(4, 3);
            let prefix = settings.prefix(args.prefix.clone(), "quaternion_pair");
            let ldoc = AlgebraDocument::from_parts(&left, &gamma);
            let rdoc = AlgebraDocument::from_parts(&right, &gamma);
            let lpath = write_document(settings, &format!("{prefix}_left.json"), &ldoc)?;
            let rpath = write_document(settings, &format!("{prefix}_right.json"), &rdoc)?;
            let report = BuildReport {
                kind: "quaternion".into(),
                m: 4,
                r: 3,
                files: vec![lpath.display().to_string(), rpath.display().to_string()],
                algebra_hashes: vec![doc_hashes(&ldoc).0, doc_hashes(&rdoc).0],
            };
            let csv = csv_kv(&[
                ("kind", report.kind.clone()),
                ("m", report.m.to_string()),
                ("r", report.r.to_string()),
                ("file_left", report.files[0].clone()),
                ("file_right", report.files[1].clone()),
                ("hash_left", report.algebra_hashes[0].clone()),
                ("hash_right", report.algebra_hashes[1].clone()),
            ]);
            emit(settings, &report, csv)?;
            Ok(0)
        }
        FamilyKind::Deform => {
            let a_raw = args.a.as_deref().ok_or_else(|| anyhow!("--kind deform needs --a"))?;
            let b_raw = args.b.as_deref().ok_or_else(|| anyhow!("--kind deform needs --b"))?;
            let u = args.u.unwrap_or(0.0);
            let alg: MetricTwoStepAlgebra = if u == 0.0 {
                build_jab_exact(&parse_triple_rat(a_raw, "--a")?, &parse_triple_rat(b_raw, "--b")?)?
            } else {
                let a = parse_triple_f64(a_raw, "--a")?;
                let b = parse_triple_f64(b_raw, "--b")?;
                let fam = DeformationFamily::new(a, b)?;
                let bu = deform(&fam, u)?;
                MetricTwoStepAlgebra::from_float(build_jab(a, bu)?)
            };
            let gamma = GammaData::standard(6, 2);
            let doc = AlgebraDocument::from_parts(&alg, &gamma);
            let prefix = settings.prefix(args.prefix.clone(), "deform");
            let path = write_document(settings, &format!("{prefix}.json"), &doc)?;
            let report = BuildReport {
                kind: "deform".into(),
                m: 6,
                r: 2,
                files: vec![path.display().to_string()],
                algebra_hashes: vec![doc_hashes(&doc).0],
            };
            let csv = csv_kv(&[
                ("kind", report.kind.clone()),
                ("m", report.m.to_string()),
                ("r", report.r.to_string()),
                ("u", fmt15(u)),
                ("file", report.files[0].clone()),
                ("hash", report.algebra_hashes[0].clone()),
            ]);
            emit(settings, &report, csv)?;
            Ok(0)
        }
        FamilyKind::IntegerSearch => {
            let a_raw = args
                .a
                .as_deref()
                .ok_or_else(|| anyhow!("--kind integer-search needs --a"))?;
            let a = parse_triple_i64(a_raw, "--a")?;
            let max = args.max.unwrap_or(30);
            ensure!(max >= 1, "--max must be at least 1");
            let instances = integer_instances(a, max)?;
            let rows: Vec<IntegerRow> = instances
                .iter()
                .map(|inst| IntegerRow {
                    b: inst.b,
                    b_new: inst.b_new,
                    u: inst.u.to_string(),
                })
                .collect();
            let report = IntegerSearchReport {
                kind: "integer-search".into(),
                a,
                max,
                count: rows.len(),
                rows,
            };
            let mut csv = String::from("b12,b13,b23,b12_new,b13_new,b23_new,u\n");
            for row in &report.rows {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    row.b[0], row.b[1], row.b[2], row.b_new[0], row.b_new[1], row.b_new[2], row.u
                ));
            }
            emit(settings, &report, csv)?;
            Ok(0)
        }
    }
}

// ---------------------------------------------------------------------------
// isospectral / equivalence

#[derive(Serialize)]
struct IsospectralReport {
    left: String,
    right: String,
    tol: f64,
    seed: u64,
    isospectral: bool,
}

fn cmd_isospectral(settings: &Settings, args: &IsospectralArgs) -> Result<u8> {
    let (_, left, _) = load_algebra(&args.left)?;
    let (_, right, _) = load_algebra(&args.right)?;
    let tol = settings.tol(args.tol, 1e-8)?;
    let seed = settings.seed(args.seed)?;
    let verdict = is_isospectral_seeded(left.jmap(), right.jmap(), tol, seed)?;
    let report = IsospectralReport {
        left: args.left.display().to_string(),
        right: args.right.display().to_string(),
        tol,
        seed,
        isospectral: verdict,
    };
    let csv = csv_kv(&[
        ("left", report.left.clone()),
        ("right", report.right.clone()),
        ("tol", fmt15(tol)),
        ("seed", seed.to_string()),
        ("isospectral", verdict.to_string()),
    ]);
    emit(settings, &report, csv)?;
    Ok(if verdict { 0 } else { EXIT_NEGATIVE })
}

#[derive(Serialize)]
struct WitnessJson {
    a: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct ObstructionJson {
    invariant: String,
    left_value: String,
    right_value: String,
}

#[derive(Serialize)]
struct EquivalenceReport {
    left: String,
    right: String,
    verdict: String,
    witness: Option<WitnessJson>,
    obstruction: Option<ObstructionJson>,
}

fn cmd_equivalence(settings: &Settings, args: &PairArgs) -> Result<u8> {
    let (_, left, _) = load_algebra(&args.left)?;
    let (_, right, _) = load_algebra(&args.right)?;
    let cert = is_equivalent(left.jmap(), right.jmap())?;
    let (witness, obstruction) = match &cert {
        EquivalenceCertificate::Equivalent { a, c } => (
            Some(WitnessJson { a: mat_rows(a), c: mat_rows(c) }),
            None,
        ),
        EquivalenceCertificate::Inequivalent { invariant, left, right } => (
            None,
            Some(ObstructionJson {
                invariant: invariant.clone(),
                left_value: left.clone(),
                right_value: right.clone(),
            }),
        ),
        EquivalenceCertificate::Unknown => (None, None),
    };
    let report = EquivalenceReport {
        left: args.left.display().to_string(),
        right: args.right.display().to_string(),
        verdict: cert.verdict_name().to_string(),
        witness,
        obstruction,
    };
    let mut kv = vec![
        ("left", report.left.clone()),
        ("right", report.right.clone()),
        ("verdict", report.verdict.clone()),
    ];
    if let Some(ob) = &report.obstruction {
        kv.push(("invariant", ob.invariant.clone()));
        kv.push(("left_value", ob.left_value.clone()));
        kv.push(("right_value", ob.right_value.clone()));
    }
    let mut csv = csv_kv(&kv);
    if let Some(w) = &report.witness {
        for (name, mat) in [("a", &w.a), ("c", &w.c)] {
            for (i, row) in mat.iter().enumerate() {
                let vals: Vec<String> = row.iter().map(|&v| fmt15(v)).collect();
                csv.push_str(&format!("{name}_row_{i},{}\n", vals.join(",")));
            }
        }
    }
    emit(settings, &report, csv)?;
    Ok(if cert.is_equivalent() { 0 } else { EXIT_NEGATIVE })
}

// ---------------------------------------------------------------------------
// spectrum / compare

#[derive(Serialize)]
struct SpectrumReport {
    algebra: String,
    cutoff: f64,
    distinct_eigenvalues: usize,
    total_count: u64,
    first_nonzero: Option<f64>,
    algebra_hash: String,
    lattice_hash: String,
    csv_file: String,
    json_file: String,
}

fn cmd_spectrum(settings: &Settings, args: &SpectrumArgs) -> Result<u8> {
    let (doc, alg, gamma) = load_algebra(&args.algebra)?;
    let cutoff = settings.cutoff(args.cutoff, None)?;
    let spec = full_spectrum(&alg, &gamma, cutoff)?;
    let stem = args
        .algebra
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("algebra");
    let prefix = settings.prefix(args.prefix.clone(), &format!("{stem}_spectrum"));
    let (csv_path, json_path) = write_spectrum(settings, &prefix, &spec, &doc)?;
    let (algebra_hash, lattice_hash) = doc_hashes(&doc);
    let report = SpectrumReport {
        algebra: args.algebra.display().to_string(),
        cutoff,
        distinct_eigenvalues: spec.entries().len(),
        total_count: spec.total_count(),
        first_nonzero: spec.entries().iter().find(|&&(v, _)| v > 0.0).map(|&(v, _)| v),
        algebra_hash,
        lattice_hash,
        csv_file: csv_path.display().to_string(),
        json_file: json_path.display().to_string(),
    };
    let csv = csv_kv(&[
        ("algebra", report.algebra.clone()),
        ("cutoff", fmt15(cutoff)),
        ("distinct_eigenvalues", report.distinct_eigenvalues.to_string()),
        ("total_count", report.total_count.to_string()),
        (
            "first_nonzero",
            report.first_nonzero.map(fmt15).unwrap_or_else(|| "none".into()),
        ),
        ("algebra_hash", report.algebra_hash.clone()),
        ("lattice_hash", report.lattice_hash.clone()),
        ("csv_file", report.csv_file.clone()),
        ("json_file", report.json_file.clone()),
    ]);
    emit(settings, &report, csv)?;
    Ok(0)
}

#[derive(Serialize)]
struct MismatchJson {
    index: usize,
    left: Option<(f64, u64)>,
    right: Option<(f64, u64)>,
}

#[derive(Serialize)]
struct CompareReport {
    left: String,
    right: String,
    tol: f64,
    cutoff: f64,
    equal: bool,
    weyl_ratio: f64,
    same_algebra_hash: bool,
    first_mismatch: Option<MismatchJson>,
}

fn cmd_compare(settings: &Settings, args: &CompareArgs) -> Result<u8> {
    let (lfile, lspec) = read_spectrum(&args.left)?;
    let (rfile, rspec) = read_spectrum(&args.right)?;
    let tol = settings.tol(args.tol, 1e-9)?;
    let outcome = compare_spectra(&lspec, &rspec, tol)?;
    let report = CompareReport {
        left: args.left.display().to_string(),
        right: args.right.display().to_string(),
        tol,
        cutoff: lfile.cutoff,
        equal: outcome.equal,
        weyl_ratio: outcome.weyl_ratio,
        same_algebra_hash: lfile.algebra_hash == rfile.algebra_hash,
        first_mismatch: outcome.first_mismatch.map(|m| MismatchJson {
            index: m.index,
            left: m.left,
            right: m.right,
        }),
    };
    let mut kv = vec![
        ("left", report.left.clone()),
        ("right", report.right.clone()),
        ("tol", fmt15(tol)),
        ("cutoff", fmt15(report.cutoff)),
        ("equal", report.equal.to_string()),
        ("weyl_ratio", fmt15(report.weyl_ratio)),
        ("same_algebra_hash", report.same_algebra_hash.to_string()),
    ];
    if let Some(m) = &report.first_mismatch {
        kv.push(("mismatch_index", m.index.to_string()));
        kv.push((
            "mismatch_left",
            m.left.map(|(v, c)| format!("{} x{}", fmt15(v), c)).unwrap_or_else(|| "absent".into()),
        ));
        kv.push((
            "mismatch_right",
            m.right.map(|(v, c)| format!("{} x{}", fmt15(v), c)).unwrap_or_else(|| "absent".into()),
        ));
    }
    let csv = csv_kv(&kv);
    emit(settings, &report, csv)?;
    Ok(if report.equal { 0 } else { EXIT_NEGATIVE })
}

// ---------------------------------------------------------------------------
// curvature

#[derive(Serialize, Clone)]
struct ScanRowJson {
    u: f64,
    det_s: f64,
    frobenius_s: f64,
    v_block_eigs: Vec<f64>,
}

#[derive(Serialize)]
struct CurvatureReport {
    a: [f64; 3],
    b: [f64; 3],
    interval: (f64, f64),
    samples: usize,
    det_min: f64,
    det_max: f64,
    frobenius_spread: f64,
    rows: Vec<ScanRowJson>,
}

fn scan_csv(rows: &[ScanRowJson]) -> String {
    let eigs = rows.first().map(|r| r.v_block_eigs.len()).unwrap_or(0);
    let mut csv = String::from("u,det_S,frobenius_S");
    for k in 1..=eigs {
        csv.push_str(&format!(",eig_{k}"));
    }
    csv.push('\n');
    for row in rows {
        csv.push_str(&fmt15(row.u));
        csv.push(',');
        csv.push_str(&fmt15(row.det_s));
        csv.push(',');
        csv.push_str(&fmt15(row.frobenius_s));
        for v in &row.v_block_eigs {
            csv.push(',');
            csv.push_str(&fmt15(*v));
        }
        csv.push('\n');
    }
    csv
}

fn resolve_family(
    family: Option<FamilyPreset>,
    a: &Option<String>,
    b: &Option<String>,
) -> Result<DeformationFamily> {
    match (family, a, b) {
        (Some(FamilyPreset::Deformation23), None, None) => {
            Ok(DeformationFamily::new([1.0, 2.0, 3.0], [4.0, 7.0, 7.0])?)
        }
        (None, Some(a), Some(b)) => Ok(DeformationFamily::new(
            parse_triple_f64(a, "--a")?,
            parse_triple_f64(b, "--b")?,
        )?),
        _ => bail!("pass either --family deformation-2-3 or both --a and --b"),
    }
}

fn cmd_curvature(settings: &Settings, args: &CurvatureArgs) -> Result<u8> {
    let fam = resolve_family(args.family, &args.a, &args.b)?;
    let samples = settings.samples(args.samples, 9)?;
    let scan = curvature_deformation_scan(&fam, samples)?;
    let rows: Vec<ScanRowJson> = scan
        .rows
        .iter()
        .map(|r| ScanRowJson {
            u: r.u,
            det_s: r.det_s,
            frobenius_s: r.frobenius_s,
            v_block_eigs: r.v_block_eigs.clone(),
        })
        .collect();
    let report = CurvatureReport {
        a: fam.a(),
        b: fam.b(),
        interval: fam.interval(),
        samples,
        det_min: scan.det_min,
        det_max: scan.det_max,
        frobenius_spread: scan.frobenius_spread,
        rows,
    };
    emit(settings, &report, scan_csv(&report.rows))?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// genericity

#[derive(Serialize)]
struct GenericityRow {
    seed: u64,
    rank: usize,
    d: isize,
}

#[derive(Serialize)]
struct GenericityReport {
    m: usize,
    r: usize,
    rows: Vec<GenericityRow>,
}

fn cmd_genericity(settings: &Settings, args: &GenericityArgs) -> Result<u8> {
    ensure!(args.m >= 2, "--m must be at least 2");
    let seed = settings.seed(args.seed)?;
    let count = args.count.unwrap_or(1).max(1);
    let mut rows = Vec::with_capacity(count);
    for s in seed..seed + count as u64 {
        let j = random_jmap::<Real>(args.m, 2, s);
        let (rank, d) = genericity_rank(&j)?;
        rows.push(GenericityRow { seed: s, rank, d });
    }
    let report = GenericityReport { m: args.m, r: 2, rows };
    let mut csv = String::from("seed,rank,d\n");
    for row in &report.rows {
        csv.push_str(&format!("{},{},{}\n", row.seed, row.rank, row.d));
    }
    emit(settings, &report, csv)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// demo

fn cmd_demo(settings: &Settings, args: &DemoArgs) -> Result<u8> {
    match args.preset {
        DemoPreset::Example110 => demo_quaternion(settings),
        DemoPreset::Example311 => demo_integer_pair(settings, args),
        DemoPreset::Deformation23 => demo_deformation(settings, args),
    }
}

#[derive(Serialize)]
struct DemoQuaternionReport {
    preset: String,
    t_diagonal: [i64; 3],
    isospectral: bool,
    equivalence: String,
    obstruction: Option<ObstructionJson>,
    ricci_v_eigs_left: Vec<f64>,
    ricci_v_eigs_right: Vec<f64>,
    ricci_eig_sum_sq_left: f64,
    ricci_eig_sum_sq_right: f64,
}

fn demo_quaternion(settings: &Settings) -> Result<u8> {
    let t = [rat(1), rat(2), rat(3)];
    let (left, right) = quaternion_algebra_pair::<Real>(&diag_matrix(&t))?;
    let tol = settings.tol(None, 1e-8)?;
    let iso = is_isospectral(left.jmap(), right.jmap(), tol)?;
    let cert = is_equivalent(left.jmap(), right.jmap())?;
    let obstruction = match &cert {
        EquivalenceCertificate::Inequivalent { invariant, left, right } => Some(ObstructionJson {
            invariant: invariant.clone(),
            left_value: left.clone(),
            right_value: right.clone(),
        }),
        _ => None,
    };
    let rl = ricci_report(left.jmap());
    let rr = ricci_report(right.jmap());
    let sum_sq = |eigs: &[f64]| eigs.iter().map(|e| e * e).sum::<f64>();
    let report = DemoQuaternionReport {
        preset: "example-1-10".into(),
        t_diagonal: [1, 2, 3],
        isospectral: iso,
        equivalence: cert.verdict_name().to_string(),
        obstruction,
        ricci_eig_sum_sq_left: sum_sq(&rl.v_block_eigs),
        ricci_eig_sum_sq_right: sum_sq(&rr.v_block_eigs),
        ricci_v_eigs_left: rl.v_block_eigs,
        ricci_v_eigs_right: rr.v_block_eigs,
    };
    let mut kv = vec![
        ("preset", report.preset.clone()),
        ("isospectral", iso.to_string()),
        ("equivalence", report.equivalence.clone()),
    ];
    if let Some(ob) = &report.obstruction {
        kv.push(("invariant", ob.invariant.clone()));
        kv.push(("left_value", ob.left_value.clone()));
        kv.push(("right_value", ob.right_value.clone()));
    }
    kv.push((
        "ricci_v_eigs_left",
        report.ricci_v_eigs_left.iter().map(|&v| fmt15(v)).collect::<Vec<_>>().join(" "),
    ));
    kv.push((
        "ricci_v_eigs_right",
        report.ricci_v_eigs_right.iter().map(|&v| fmt15(v)).collect::<Vec<_>>().join(" "),
    ));
    kv.push(("ricci_eig_sum_sq_left", fmt15(report.ricci_eig_sum_sq_left)));
    kv.push(("ricci_eig_sum_sq_right", fmt15(report.ricci_eig_sum_sq_right)));
    let csv = csv_kv(&kv);
    emit(settings, &report, csv)?;
    Ok(if iso && cert.is_inequivalent() { 0 } else { EXIT_NEGATIVE })
}

#[derive(Serialize)]
struct DemoSpectraReport {
    preset: String,
    cutoff: f64,
    tol: f64,
    equal: bool,
    weyl_ratio: f64,
    total_count_left: u64,
    total_count_right: u64,
    distinct_left: usize,
    distinct_right: usize,
    files: Vec<String>,
}

fn demo_integer_pair(settings: &Settings, args: &DemoArgs) -> Result<u8> {
    let cutoff = settings.cutoff(args.cutoff, Some(150.0))?;
    let tol = settings.tol(None, 1e-9)?;
    let a = [rat(1), rat(2), rat(3)];
    let left = build_jab_exact::<Real>(&a, &[rat(4), rat(7), rat(7)])?;
    let right = build_jab_exact::<Real>(&a, &[rat(5), rat(5), rat(8)])?;
    let gamma = GammaData::standard(6, 2);
    let ldoc = AlgebraDocument::from_parts(&left, &gamma);
    let rdoc = AlgebraDocument::from_parts(&right, &gamma);
    let lspec = full_spectrum(&left, &gamma, cutoff)?;
    let rspec = full_spectrum(&right, &gamma, cutoff)?;
    let prefix = settings.prefix(args.prefix.clone(), "example_3_11");
    let (lcsv, ljson) = write_spectrum(settings, &format!("{prefix}_left"), &lspec, &ldoc)?;
    let (rcsv, rjson) = write_spectrum(settings, &format!("{prefix}_right"), &rspec, &rdoc)?;
    let outcome = compare_spectra(&lspec, &rspec, tol)?;
    let report = DemoSpectraReport {
        preset: "example-3-11".into(),
        cutoff,
        tol,
        equal: outcome.equal,
        weyl_ratio: outcome.weyl_ratio,
        total_count_left: lspec.total_count(),
        total_count_right: rspec.total_count(),
        distinct_left: lspec.entries().len(),
        distinct_right: rspec.entries().len(),
        files: vec![
            lcsv.display().to_string(),
            ljson.display().to_string(),
            rcsv.display().to_string(),
            rjson.display().to_string(),
        ],
    };
    let csv = csv_kv(&[
        ("preset", report.preset.clone()),
        ("cutoff", fmt15(cutoff)),
        ("tol", fmt15(tol)),
        ("equal", report.equal.to_string()),
        ("weyl_ratio", fmt15(report.weyl_ratio)),
        ("total_count_left", report.total_count_left.to_string()),
        ("total_count_right", report.total_count_right.to_string()),
        ("distinct_left", report.distinct_left.to_string()),
        ("distinct_right", report.distinct_right.to_string()),
        ("files", report.files.join(" ")),
    ]);
    emit(settings, &report, csv)?;
    Ok(if report.equal { 0 } else { EXIT_NEGATIVE })
}

#[derive(Serialize)]
struct DemoDeformationReport {
    preset: String,
    samples: usize,
    interval: (f64, f64),
    pairs_checked: usize,
    all_isospectral: bool,
    det_min: f64,
    det_max: f64,
    frobenius_spread: f64,
    rows: Vec<ScanRowJson>,
}

fn demo_deformation(settings: &Settings, args: &DemoArgs) -> Result<u8> {
    let fam = DeformationFamily::new([1.0, 2.0, 3.0], [4.0, 7.0, 7.0])?;
    let samples = settings.samples(args.samples, 9)?;
    let tol = settings.tol(None, 1e-8)?;
    let scan = curvature_deformation_scan(&fam, samples)?;
    let mut jmaps = Vec::with_capacity(scan.rows.len());
    for row in &scan.rows {
        jmaps.push(build_jab([1.0, 2.0, 3.0], deform(&fam, row.u)?)?);
    }
    let mut all_iso = true;
    let mut pairs = 0usize;
    for i in 0..jmaps.len() {
        for l in i + 1..jmaps.len() {
            pairs += 1;
            if !is_isospectral(&jmaps[i], &jmaps[l], tol)? {
                all_iso = false;
            }
        }
    }
    let rows: Vec<ScanRowJson> = scan
        .rows
        .iter()
        .map(|r| ScanRowJson {
            u: r.u,
            det_s: r.det_s,
            frobenius_s: r.frobenius_s,
            v_block_eigs: r.v_block_eigs.clone(),
        })
        .collect();
    let report = DemoDeformationReport {
        preset: "deformation-2-3".into(),
        samples,
        interval: fam.interval(),
        pairs_checked: pairs,
        all_isospectral: all_iso,
        det_min: scan.det_min,
        det_max: scan.det_max,
        frobenius_spread: scan.frobenius_spread,
        rows,
    };
    let mut csv = csv_kv(&[
        ("preset", report.preset.clone()),
        ("samples", samples.to_string()),
        ("interval_lo", fmt15(report.interval.0)),
        ("interval_hi", fmt15(report.interval.1)),
        ("pairs_checked", pairs.to_string()),
        ("all_isospectral", all_iso.to_string()),
        ("det_min", fmt15(report.det_min)),
        ("det_max", fmt15(report.det_max)),
        ("frobenius_spread", fmt15(report.frobenius_spread)),
    ]);
    csv.push_str(&scan_csv(&report.rows));
    emit(settings, &report, csv)?;
    Ok(if all_iso { 0 } else { EXIT_NEGATIVE })
}
