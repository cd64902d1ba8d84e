use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use entwit::criteria::{ppt_check, realignment_check, DECISION_TOL};
use entwit::linalg::BipartiteDims;
use entwit::maps::{self, LinearMap};
use entwit::states::{self, DensityMatrix};
use entwit::witness::{self, ExtremumOptions, Witness};
use rayon::prelude::*;

use crate::matrix_file::{fmt_f64, read_density, read_witness, MatrixFile, MatrixKind};
use crate::params::{map_detection, DetectorSpec, Family, MapSpec, Range, DEFAULT_B};

/// Exit status: nothing detected.
pub const EXIT_UNDETECTED: u8 = 0;
/// Exit status: at least one test certified entanglement.
pub const EXIT_DETECTED: u8 = 1;
/// Exit status: bad input or failed computation.
pub const EXIT_INPUT_ERROR: u8 = 2;

pub const SCAN_HEADER: &str = "# entwit-scan v1";

#[derive(Debug, Parser)]
#[command(name = "entwit", version, about = "Bipartite entanglement detection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every criterion, witness and map on a state file.
    Analyze(AnalyzeArgs),
    /// Build a witness from a state file.
    Witness(WitnessArgs),
    /// Tabulate diagnostics over a one-parameter family.
    #[command(allow_negative_numbers = true)]
    Scan(ScanArgs),
    /// Bisect for the parameter where a detector starts firing.
    #[command(allow_negative_numbers = true)]
    Threshold(ThresholdArgs),
    /// Write a state from one of the built-in families.
    #[command(allow_negative_numbers = true)]
    Gen(GenArgs),
    /// Test a witness on random states equal to their own partial transpose.
    Sample(SampleArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// State file.
    pub state: PathBuf,
    /// Extra positive map: tang:u=..[,eps=..], tang-dual:u=.. or witness:FILE (repeatable).
    #[arg(long = "map", value_name = "SPEC")]
    pub maps: Vec<String>,
    /// Extra witness file (repeatable).
    #[arg(long = "witness", value_name = "FILE")]
    pub witnesses: Vec<PathBuf>,
    /// Also write the diagnostics as a one-row scan CSV.
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// I − (R⁻¹(U* Vᵀ))ᵀ from the realigned state.
    Thm1,
    /// I − (V U†)^{T_A} from the partial transpose.
    Thm2,
    /// εI − ρ with ε the largest product-state overlap.
    Projection,
}

#[derive(Debug, Args)]
pub struct WitnessArgs {
    /// State file.
    pub state: PathBuf,
    #[arg(long, value_enum, default_value = "thm1")]
    pub method: Method,
    /// Shift by the minimum product-state expectation.
    #[arg(long)]
    pub optimize: bool,
    /// Seed of the product-state search.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random restarts of the product-state search.
    #[arg(long, default_value_t = 50)]
    pub restarts: usize,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    /// Grid as lo:hi:steps, both ends included.
    #[arg(long, value_name = "LO:HI:STEPS", allow_hyphen_values = true)]
    pub range: String,
    /// Horodecki parameter of the noisy family.
    #[arg(long, default_value_t = DEFAULT_B)]
    pub b: f64,
    /// Positive map: tang:u=..[,eps=..], tang-dual:u=.. or witness:FILE (repeatable).
    #[arg(long = "map", value_name = "SPEC")]
    pub maps: Vec<String>,
    /// Witness file to evaluate at each point (repeatable).
    #[arg(long = "witness", value_name = "FILE")]
    pub witnesses: Vec<PathBuf>,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    /// realign, ppt, witness:FILE, map:FILE, tang:u=..[,eps=..],
    /// tang-dual:u=.. or thm1-map:p=..
    #[arg(long)]
    pub detector: String,
    /// Horodecki parameter of the noisy family.
    #[arg(long, default_value_t = DEFAULT_B)]
    pub b: f64,
    /// Width of the final bracket.
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    /// Search interval; defaults to the family's parameter range.
    #[arg(long)]
    pub lo: Option<f64>,
    /// Upper end of the search interval.
    #[arg(long)]
    pub hi: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub family: Family,
    /// Werner parameter.
    #[arg(long)]
    pub f: Option<f64>,
    /// Mixing weight of the noisy families.
    #[arg(long)]
    pub p: Option<f64>,
    /// Horodecki parameter.
    #[arg(long)]
    pub b: Option<f64>,
    /// First subsystem dimension (mixed, random, ppt-symmetric).
    #[arg(long)]
    pub m: Option<usize>,
    /// Second subsystem dimension (mixed, random, ppt-symmetric).
    #[arg(long)]
    pub n: Option<usize>,
    /// Seed of the random families.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// First subsystem dimension.
    #[arg(long)]
    pub m: usize,
    /// Second subsystem dimension.
    #[arg(long)]
    pub n: usize,
    /// Number of states to draw.
    #[arg(long, default_value_t = 10_000)]
    pub count: usize,
    /// Sampler seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Witness to test; its dimensions must match.
    #[arg(long)]
    pub witness: PathBuf,
    /// Rejection-sampling budget per state.
    #[arg(long, default_value_t = 10_000)]
    pub max_tries: usize,
}

/// Runs a parsed command and returns the process exit status.
pub fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Analyze(a) => analyze(&a),
        Command::Witness(a) => build_witness(&a).map(|_| EXIT_UNDETECTED),
        Command::Scan(a) => scan(&a).map(|_| EXIT_UNDETECTED),
        Command::Threshold(a) => threshold(&a).map(|_| EXIT_UNDETECTED),
        Command::Gen(a) => gen(&a).map(|_| EXIT_UNDETECTED),
        Command::Sample(a) => sample(&a).map(|_| EXIT_UNDETECTED),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// scan rows

/// Extra witnesses and maps evaluated alongside the built-in criteria.
pub struct Probes {
    pub witnesses: Vec<(String, Witness)>,
    pub maps: Vec<(String, LinearMap)>,
}

impl Probes {
    pub fn load(witnesses: &[PathBuf], map_specs: &[String]) -> Result<Self> {
        let witnesses = witnesses
            .iter()
            .map(|p| Ok((p.display().to_string(), read_witness(p)?)))
            .collect::<Result<_>>()?;
        let maps = map_specs
            .iter()
            .map(|s| Ok((s.clone(), MapSpec::parse(s)?.build()?)))
            .collect::<Result<_>>()?;
        Ok(Self { witnesses, maps })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub param: Option<f64>,
    pub realign_norm: f64,
    pub ppt_min_eig: f64,
    pub ppt_norm: f64,
    pub witness_values: Vec<f64>,
    pub map_lambda_min: Vec<f64>,
}

impl ScanRow {
    pub fn compute(param: Option<f64>, rho: &DensityMatrix, probes: &Probes) -> Result<Self> {
        let r = realignment_check(rho);
        let p = ppt_check(rho);
        let witness_values = probes
            .witnesses
            .iter()
            .map(|(_, w)| Ok(witness::evaluate(w, rho)?))
            .collect::<Result<_>>()?;
        let map_lambda_min = probes
            .maps
            .iter()
            .map(|(_, m)| Ok(map_detection(m, rho)?.lambda_min))
            .collect::<Result<_>>()?;
        Ok(Self {
            param,
            realign_norm: r.value,
            ppt_min_eig: p.min_eigenvalue.expect("ppt reports eigenvalue"),
            ppt_norm: p.value,
            witness_values,
            map_lambda_min,
        })
    }

    pub fn realign_entangled(&self) -> bool {
        self.realign_norm > 1.0 + DECISION_TOL
    }

    pub fn ppt_entangled(&self) -> bool {
        self.ppt_min_eig < -DECISION_TOL
    }

    pub fn any_entangled(&self) -> bool {
        self.realign_entangled()
            || self.ppt_entangled()
            || self.witness_values.iter().any(|&v| v < -DECISION_TOL)
            || self.map_lambda_min.iter().any(|&v| v < -DECISION_TOL)
    }

    pub fn csv_header(witnesses: usize, maps: usize) -> String {
        let mut cols = vec![
            "param".to_string(),
            "realign_norm".into(),
            "ppt_min_eig".into(),
            "ppt_norm".into(),
        ];
        cols.extend((1..=witnesses).map(|k| format!("witness{k}")));
        for k in 1..=maps {
            cols.push(format!("map{k}_lambda_min"));
            cols.push(format!("map{k}_f"));
        }
        cols.push("realign_entangled".into());
        cols.push("ppt_entangled".into());
        cols.extend((1..=witnesses).map(|k| format!("witness{k}_entangled")));
        cols.extend((1..=maps).map(|k| format!("map{k}_entangled")));
        cols.join(",")
    }

    pub fn csv_line(&self) -> String {
        let flag = |b: bool| if b { "1" } else { "0" }.to_string();
        let num = |x: f64| format!("{x:e}");
        let mut cols = vec![
            self.param.map(|x| x.to_string()).unwrap_or_default(),
            num(self.realign_norm),
            num(self.ppt_min_eig),
            num(self.ppt_norm),
        ];
        cols.extend(self.witness_values.iter().map(|&v| num(v)));
        for &l in &self.map_lambda_min {
            cols.push(num(l));
            cols.push(num(l.min(0.0)));
        }
        cols.push(flag(self.realign_entangled()));
        cols.push(flag(self.ppt_entangled()));
        cols.extend(self.witness_values.iter().map(|&v| flag(v < -DECISION_TOL)));
        cols.extend(self.map_lambda_min.iter().map(|&v| flag(v < -DECISION_TOL)));
        cols.join(",")
    }
}

fn csv_preamble(out: &mut String, probes: &Probes, context: &str) {
    let _ = writeln!(out, "{SCAN_HEADER}");
    let _ = writeln!(out, "# {context}");
    for (k, (name, _)) in probes.witnesses.iter().enumerate() {
        let _ = writeln!(out, "# witness{} {name}", k + 1);
    }
    for (k, (name, _)) in probes.maps.iter().enumerate() {
        let _ = writeln!(out, "# map{} {name}", k + 1);
    }
    let _ = writeln!(
        out,
        "{}",
        ScanRow::csv_header(probes.witnesses.len(), probes.maps.len())
    );
}

// ---------------------------------------------------------------------------
// analyze

pub fn analyze(args: &AnalyzeArgs) -> Result<u8> {
    let rho = read_density(&args.state)?;
    let probes = Probes::load(&args.witnesses, &args.maps)?;
    let row = ScanRow::compute(None, &rho, &probes)?;

    let w1 = witness::realignment_witness(&rho)?;
    let w2 = witness::partial_transpose_witness(&rho)?;
    let t1 = witness::evaluate(&w1, &rho)?;
    let t2 = witness::evaluate(&w2, &rho)?;
    let m1 = map_detection(&maps::from_witness(&w1), &rho)?.lambda_min;
    let m2 = map_detection(&maps::from_witness(&w2), &rho)?.lambda_min;

    let mut hits = Vec::new();
    let mut out = String::new();
    let mut line = |key: &str, value: f64, extra: &str, hit: bool| {
        let mark = if hit { "  entangled" } else { "" };
        let _ = writeln!(out, "{key:<22}{value:>24.16e}{extra}{mark}");
        if hit {
            hits.push(key.to_string());
        }
    };
    let tol = DECISION_TOL;
    line("realignment_norm", row.realign_norm, "", row.realign_entangled());
    line("ppt_min_eigenvalue", row.ppt_min_eig, "", row.ppt_entangled());
    line("ppt_norm", row.ppt_norm, "", false);
    line("thm1_witness", t1, "", t1 < -tol);
    line("thm2_witness", t2, "", t2 < -tol);
    line("thm1_map_lambda_min", m1, "", m1 < -tol);
    line("thm2_map_lambda_min", m2, "", m2 < -tol);
    for (k, ((name, _), &v)) in probes.witnesses.iter().zip(&row.witness_values).enumerate() {
        line(&format!("witness{}", k + 1), v, &format!("  {name}"), v < -tol);
    }
    for (k, ((name, _), &v)) in probes.maps.iter().zip(&row.map_lambda_min).enumerate() {
        line(&format!("map{}_lambda_min", k + 1), v, &format!("  {name}"), v < -tol);
    }

    let detected = !hits.is_empty();
    let header = format!("state {} ({})\n", args.state.display(), rho.dims());
    let verdict = if detected {
        format!("verdict entangled ({})\n", hits.join(", "))
    } else {
        "verdict undetected\n".to_string()
    };
    print!("{header}{out}{verdict}");

    if let Some(path) = &args.csv {
        let mut csv = String::new();
        csv_preamble(&mut csv, &probes, &format!("state {}", args.state.display()));
        let _ = writeln!(csv, "{}", row.csv_line());
        emit(Some(path), &csv)?;
    }
    Ok(if detected { EXIT_DETECTED } else { EXIT_UNDETECTED })
}

// ---------------------------------------------------------------------------
// witness

pub fn build_witness(args: &WitnessArgs) -> Result<MatrixFile> {
    let rho = read_density(&args.state)?;
    let opts = ExtremumOptions {
        restarts: args.restarts,
        seed: args.seed,
        ..ExtremumOptions::default()
    };
    let mut comments = vec![format!("witness {:?}", args.method).to_lowercase()];
    comments.push(format!("source {}", args.state.display()));
    let w = match args.method {
        Method::Thm1 => witness::realignment_witness(&rho)?,
        Method::Thm2 => witness::partial_transpose_witness(&rho)?,
        Method::Projection => {
            let (w, ext) = witness::projection_witness(&rho, &opts)?;
            comments.push(format!("projection_epsilon {}", fmt_f64(ext.value)));
            w
        }
    };
    if w.construction_defect() > 0.0 {
        comments.push(format!(
            "construction_defect {}",
            fmt_f64(w.construction_defect())
        ));
    }
    let w = if args.optimize {
        let (shifted, ext) = witness::optimize(&w, &opts)?;
        comments.push(format!("epsilon {}", fmt_f64(ext.value)));
        if let Some(gap) = ext.agreement() {
            comments.push(format!("grid_agreement {}", fmt_f64(gap)));
        }
        shifted
    } else {
        w
    };
    let value = witness::evaluate(&w, &rho)?;
    comments.push(format!("value_on_source {}", fmt_f64(value)));
    eprintln!("Tr(W rho) = {value:e}");

    let mut file = MatrixFile::new(w.dims(), w.matrix().clone());
    file.comments = comments;
    emit(args.out.as_deref(), &file.to_text())?;
    Ok(file)
}

// ---------------------------------------------------------------------------
// scan

pub fn scan_rows(
    family: Family,
    range: &Range,
    b: f64,
    probes: &Probes,
) -> Result<Vec<ScanRow>> {
    family.require_parametric()?;
    range
        .points()
        .into_par_iter()
        .map(|x| {
            let rho = family.state(x, b)?;
            ScanRow::compute(Some(x), &rho, probes)
        })
        .collect()
}

pub fn scan(args: &ScanArgs) -> Result<String> {
    let (name, _) = args.family.require_parametric()?;
    let range = Range::parse(&args.range)?;
    let probes = Probes::load(&args.witnesses, &args.maps)?;
    let rows = scan_rows(args.family, &range, args.b, &probes)?;
    let mut context = format!("family {} parameter {name}", args.family.name());
    if args.family == Family::HorodeckiNoisy {
        let _ = write!(context, " b {}", args.b);
    }
    let mut csv = String::new();
    csv_preamble(&mut csv, &probes, &context);
    for row in &rows {
        let _ = writeln!(csv, "{}", row.csv_line());
    }
    emit(args.out.as_deref(), &csv)?;
    Ok(csv)
}

// ---------------------------------------------------------------------------
// threshold

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdResult {
    /// Midpoint of the final bracket.
    pub p_star: f64,
    pub bracket: (f64, f64),
    pub diagnostic: f64,
    pub iterations: usize,
}

/// Bisects for the crossing of `diag < −DECISION_TOL` on `[lo, hi]`; exactly
/// one endpoint must be detected.
pub fn bisect<F>(mut diag: F, lo: f64, hi: f64, tol: f64) -> Result<ThresholdResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if tol.is_nan() || tol <= 0.0 {
        bail!("tolerance must be positive, got {tol}");
    }
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        bail!("empty search interval [{lo}, {hi}]");
    }
    let detected = |v: f64| v < -DECISION_TOL;
    let (d_lo, d_hi) = (diag(lo)?, diag(hi)?);
    if detected(d_lo) == detected(d_hi) {
        bail!(
            "detector does not change verdict on [{lo}, {hi}]: diagnostic {d_lo:e} at {lo}, {d_hi:e} at {hi}"
        );
    }
    let lo_detected = detected(d_lo);
    let (mut a, mut b) = (lo, hi);
    let mut iterations = 0;
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if detected(diag(mid)?) == lo_detected {
            a = mid;
        } else {
            b = mid;
        }
        iterations += 1;
    }
    let p_star = 0.5 * (a + b);
    Ok(ThresholdResult {
        p_star,
        bracket: (a, b),
        diagnostic: diag(p_star)?,
        iterations,
    })
}

pub fn threshold_value(args: &ThresholdArgs) -> Result<ThresholdResult> {
    args.family.require_parametric()?;
    let detector = DetectorSpec::parse(&args.detector)?.prepare(args.family, args.b)?;
    let (def_lo, def_hi) = match args.family {
        Family::Werner => (-1.0, 1.0),
        Family::Horodecki => (1e-6, 1.0 - 1e-6),
        _ => (0.0, 1.0),
    };
    let lo = args.lo.unwrap_or(def_lo);
    let hi = args.hi.unwrap_or(def_hi);
    bisect(
        |x| detector.diagnostic(&args.family.state(x, args.b)?),
        lo,
        hi,
        args.tol,
    )
}

pub fn threshold(args: &ThresholdArgs) -> Result<ThresholdResult> {
    let r = threshold_value(args)?;
    let (name, _) = args.family.require_parametric()?;
    println!("family {}", args.family.name());
    println!("detector {}", args.detector);
    println!("parameter {name}");
    println!("bracket {} {}", fmt_f64(r.bracket.0), fmt_f64(r.bracket.1));
    println!("iterations {}", r.iterations);
    println!("diagnostic {}", fmt_f64(r.diagnostic));
    println!("p* {}", fmt_f64(r.p_star));
    Ok(r)
}

// ---------------------------------------------------------------------------
// gen

fn need(value: Option<f64>, flag: &str, family: Family, interval: &str) -> Result<f64> {
    value.with_context(|| format!("{} requires --{flag} in {interval}", family.name()))
}

pub fn generate(args: &GenArgs) -> Result<(DensityMatrix, Vec<String>)> {
    let fam = args.family;
    let dims = || -> Result<BipartiteDims> {
        let m = args.m.with_context(|| format!("{} requires --m and --n", fam.name()))?;
        let n = args.n.with_context(|| format!("{} requires --m and --n", fam.name()))?;
        Ok(BipartiteDims::new(m, n)?)
    };
    let mut comments = vec![format!("family {}", fam.name())];
    let rho = match fam {
        Family::Werner => {
            let f = need(args.f, "f", fam, "[-1, 1]")?;
            comments.push(format!("f {f}"));
            states::werner_2x2(f)?
        }
        Family::Upb => states::upb_tiles_bes(),
        Family::UpbNoisy => {
            let p = need(args.p, "p", fam, "[0, 1]")?;
            comments.push(format!("p {p}"));
            fam.state(p, DEFAULT_B)?
        }
        Family::Horodecki => {
            let b = need(args.b, "b", fam, "(0, 1)")?;
            comments.push(format!("b {b}"));
            states::horodecki_2x4(b)?
        }
        Family::HorodeckiNoisy => {
            let p = need(args.p, "p", fam, "[0, 1]")?;
            let b = args.b.unwrap_or(DEFAULT_B);
            comments.push(format!("p {p}"));
            comments.push(format!("b {b}"));
            fam.state(p, b)?
        }
        Family::Mixed => DensityMatrix::maximally_mixed(dims()?),
        Family::Random => {
            comments.push(format!("seed {}", args.seed));
            states::random_density(dims()?, args.seed)
        }
        Family::PptSymmetric => {
            comments.push(format!("seed {}", args.seed));
            states::random_ppt_symmetric(dims()?, args.seed, 10_000)?
        }
    };
    Ok((rho, comments))
}

pub fn gen(args: &GenArgs) -> Result<MatrixFile> {
    let (rho, comments) = generate(args)?;
    let mut file = MatrixFile::new(rho.dims(), rho.into_matrix());
    file.comments = comments;
    file.validate(MatrixKind::Density)?;
    emit(args.out.as_deref(), &file.to_text())?;
    Ok(file)
}

// ---------------------------------------------------------------------------
// sample

#[derive(Debug, Clone, PartialEq)]
pub struct SampleReport {
    pub count: usize,
    pub witness_detected: usize,
    pub realign_detected: usize,
}

impl SampleReport {
    pub fn rate(&self) -> f64 {
        self.witness_detected as f64 / self.count.max(1) as f64
    }
}

pub fn sample_report(args: &SampleArgs) -> Result<SampleReport> {
    let dims = BipartiteDims::new(args.m, args.n)?;
    let w = read_witness(&args.witness)?;
    if w.dims() != dims {
        bail!("witness is {} but samples are {dims}", w.dims());
    }
    let mut rng = states::rng_from_seed(args.seed);
    let mut report = SampleReport {
        count: args.count,
        witness_detected: 0,
        realign_detected: 0,
    };
    for _ in 0..args.count {
        let sigma = states::random_ppt_symmetric_with(dims, &mut rng, args.max_tries)?;
        if witness::detects(&w, &sigma)? {
            report.witness_detected += 1;
        }
        if realignment_check(&sigma).entangled {
            report.realign_detected += 1;
        }
    }
    Ok(report)
}

pub fn sample(args: &SampleArgs) -> Result<SampleReport> {
    let r = sample_report(args)?;
    println!("samples {}", r.count);
    println!("witness_detected {}", r.witness_detected);
    println!("realign_detected {}", r.realign_detected);
    println!("rate {}", r.rate());
    Ok(r)
}
