//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use entwit::criteria::{ppt_check, realignment_check};
use entwit::linalg::{self, from_real_rows, BipartiteDims, ComplexMatrix};
use entwit::maps::{self, from_witness, to_witness, LinearMap};
use entwit::states::{self, rng_from_seed, DensityMatrix, PureState};
use entwit::witness::{self, ExtremumOptions, Witness};
use tempfile::TempDir;

struct Outcome {
    pass: bool,
    detail: String,
    notes: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
            notes: Vec::new(),
        }
    }

    fn note(mut self, line: impl Into<String>) -> Self {
        self.notes.push(line.into());
        self
    }
}

fn entwit(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_entwit"))
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "entwit {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn keyed(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(' ')))
        .unwrap_or_else(|| panic!("no `{key}` in output:\n{text}"))
        .trim()
        .parse()
        .unwrap()
}

fn threshold(args: &[&str]) -> f64 {
    let mut full = vec!["threshold"];
    full.extend_from_slice(args);
    keyed(&entwit(&full), "p*")
}

fn within(name: &str, got: f64, want: f64, tol: f64) -> Outcome {
    let dev = (got - want).abs();
    Outcome::new(
        dev <= tol,
        format!("{name} p* = {got:.5} (target {want} ± {tol}, deviation {dev:.5})"),
    )
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let example = from_real_rows(
        4,
        4,
        &[
            1.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        ],
    );
    let (mut worst_value, mut worst_entry) = (0.0_f64, 0.0_f64);
    for f in [-1.0, -0.5, 0.0, 0.4] {
        let rho = states::werner_2x2(f).unwrap();
        let w = witness::realignment_witness(&rho).unwrap();
        worst_value = worst_value.max((witness::evaluate(&w, &rho).unwrap() - f).abs());
        worst_entry = worst_entry.max(linalg::max_abs_diff(w.matrix(), &example));
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        worst_value < 1e-8 && worst_entry < 1e-8 && secs < 1.0,
        format!(
            "max |Tr(Wρ_f) − f| = {worst_value:.1e}, max entry deviation = {worst_entry:.1e}, {secs:.3} s"
        ),
    )
}

fn criterion_2() -> Outcome {
    let p = threshold(&["--family", "upb-noisy", "--detector", "realign"]);
    within("realignment", p, 0.8897, 0.0005)
}

fn svd_note(p: f64) -> String {
    let rho = states::noisy_mixture(&states::upb_tiles_bes(), p).unwrap();
    let d = witness::realignment_svd_diagnostic(&rho);
    let sv: Vec<String> = d.singular_values.iter().map(|s| format!("{s:.4}")).collect();
    format!(
        "svd of R(ρ_{p}): singular values [{}], {} zero, min relative gap {:.2e}",
        sv.join(", "),
        d.zero_count,
        d.min_relative_gap
    )
}

fn criterion_3() -> Outcome {
    let p = threshold(&["--family", "upb-noisy", "--detector", "thm1-map:p=1"]);
    within("thm1 map of ρ_1", p, 0.8841, 0.001).note(svd_note(1.0))
}

fn criterion_4() -> Outcome {
    let p = threshold(&["--family", "upb-noisy", "--detector", "thm1-map:p=0.3"]);
    within("thm1 map of ρ_0.3", p, 0.8744, 0.001).note(svd_note(0.3))
}

fn criterion_5(dir: &Path) -> Outcome {
    let csv = dir.join("fig1.csv");
    entwit(&[
        "scan",
        "--family",
        "horodecki",
        "--range",
        "0.01:0.99:99",
        "--map",
        "tang:u=0.849",
        "--out",
        csv.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "map1_f").unwrap();
    let fs: Vec<f64> = lines
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect();
    let max_f = fs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let positivity = maps::sampled_positivity(&maps::tang_map(0.849, None).unwrap(), 10_000, 0);
    Outcome::new(
        fs.len() == 99 && max_f < 0.0,
        format!("{} grid points, max f = {max_f:.4e}, CSV {}", fs.len(), csv.display()),
    )
    .note(format!(
        "map as printed is not positive: sampled min eigenvalue of Λ(|ψ⟩⟨ψ|) = {:.4}",
        positivity.min_eigenvalue
    ))
}

fn criterion_6() -> Outcome {
    let p = threshold(&[
        "--family",
        "horodecki-noisy",
        "--b",
        "0.218",
        "--detector",
        "tang:u=0.849",
    ]);
    within("tang map", p, 0.9926, 0.0005)
}

/// Random `d × d` complex matrix from a normalized Gaussian vector.
fn random_matrix(d: usize, seed: u64) -> ComplexMatrix {
    let v = PureState::random(d * d, &mut rng_from_seed(seed));
    ComplexMatrix::from_fn(d, d, |i, j| v.vector()[i * d + j] * (d as f64))
}

enum Probe {
    Witness(String, Witness),
    Map(String, LinearMap),
}

impl Probe {
    fn name(&self) -> &str {
        match self {
            Probe::Witness(n, _) | Probe::Map(n, _) => n,
        }
    }

    /// Signed value; below `-floor` counts as a detection.
    fn value(&self, rho: &DensityMatrix) -> f64 {
        match self {
            Probe::Witness(_, w) => witness::evaluate(w, rho).unwrap(),
            Probe::Map(_, m) => {
                let n = rho.dims().n;
                if m.in_dim() == n {
                    maps::detection_value(m, rho).unwrap().lambda_min
                } else {
                    maps::detection_value_tensor_id(m, rho).unwrap().lambda_min
                }
            }
        }
    }
}

fn witness_probes(tag: &str, rho: &DensityMatrix, opts: &ExtremumOptions) -> Vec<Probe> {
    let w1 = witness::realignment_witness(rho).unwrap();
    let w2 = witness::partial_transpose_witness(rho).unwrap();
    let (w1_opt, _) = witness::optimize(&w1, opts).unwrap();
    let (wp, _) = witness::projection_witness(rho, opts).unwrap();
    vec![
        Probe::Map(format!("thm1 map({tag})"), from_witness(&w1)),
        Probe::Map(format!("thm2 map({tag})"), from_witness(&w2)),
        Probe::Witness(format!("thm1({tag})"), w1),
        Probe::Witness(format!("thm2({tag})"), w2),
        Probe::Witness(format!("thm1 optimized({tag})"), w1_opt),
        Probe::Witness(format!("projection({tag})"), wp),
    ]
}

fn criterion_7() -> Outcome {
    const FLOOR: f64 = 1e-6;
    let mut notes = Vec::new();
    let mut pass = true;
    let mut check = |ok: bool, line: String| {
        pass &= ok;
        notes.push(format!("[{}] {line}", if ok { "ok" } else { "FAIL" }));
    };

    // realignment round trip
    let mut exact = 0;
    for k in 0..1000u64 {
        let dims = BipartiteDims::new(1 + (k % 4) as usize, 1 + ((k / 4) % 4) as usize).unwrap();
        let z = random_matrix(dims.total(), k);
        let back = linalg::realign_inverse(&linalg::realign(&z, dims).unwrap(), dims).unwrap();
        exact += usize::from(back == z);
    }
    check(exact == 1000, format!("realign round trip exact on {exact}/1000 matrices"));

    // witness identities and Jamiołkowski round trip
    let (mut id1, mut id2, mut jam) = (0.0_f64, 0.0_f64, 0.0_f64);
    for k in 0..100u64 {
        let dims = BipartiteDims::new(2 + (k % 2) as usize, 2 + ((k / 2) % 3) as usize).unwrap();
        let rho = states::random_density(dims, 1000 + k);
        let w1 = witness::realignment_witness(&rho).unwrap();
        let w2 = witness::partial_transpose_witness(&rho).unwrap();
        id1 = id1.max(
            (witness::evaluate(&w1, &rho).unwrap() - (1.0 - linalg::trace_norm(&rho.realigned())))
                .abs(),
        );
        id2 = id2.max(
            (witness::evaluate(&w2, &rho).unwrap()
                - (1.0 - linalg::trace_norm(&rho.partial_transpose())))
            .abs(),
        );
        let back = to_witness(&from_witness(&w1)).unwrap();
        jam = jam.max(linalg::max_abs_diff(back.matrix(), w1.matrix()));
    }
    let tang = maps::tang_map(0.849, None).unwrap();
    let tang_back = from_witness(&to_witness(&tang).unwrap());
    check(
        id1 < 1e-8 && id2 < 1e-8,
        format!("witness identities on 100 states: max deviation {id1:.1e} (thm1), {id2:.1e} (thm2)"),
    );
    check(
        jam < 1e-12 && tang_back == tang,
        format!("Jamiołkowski round trip: max deviation {jam:.1e}"),
    );

    // product states and separable mixtures
    let opts = ExtremumOptions::default();
    let d22 = BipartiteDims::new(2, 2).unwrap();
    let d33 = BipartiteDims::new(3, 3).unwrap();
    let d24 = BipartiteDims::new(2, 4).unwrap();
    let upb_03 = states::noisy_mixture(&states::upb_tiles_bes(), 0.3).unwrap();
    let mut sets: Vec<(BipartiteDims, Vec<Probe>)> = vec![
        (d22, witness_probes("werner -1", &states::werner_2x2(-1.0).unwrap(), &opts)),
        (d33, witness_probes("upb", &states::upb_tiles_bes(), &opts)),
        (d24, witness_probes("horodecki 0.218", &states::horodecki_2x4(0.218).unwrap(), &opts)),
    ];
    sets[1].1.push(Probe::Map(
        "thm1 map(upb p=0.3)".into(),
        from_witness(&witness::realignment_witness(&upb_03).unwrap()),
    ));
    sets[2].1.push(Probe::Map("tang".into(), tang.clone()));
    sets[2].1.push(Probe::Map("tang dual".into(), maps::tang_dual(0.849, None).unwrap()));

    let mut rng = rng_from_seed(2024);
    for (dims, probes) in &sets {
        let products: Vec<DensityMatrix> = (0..10_000)
            .map(|_| states::random_pure_product_with(*dims, &mut rng))
            .collect();
        let mixtures: Vec<DensityMatrix> = (0..1000)
            .map(|_| states::random_separable_with(*dims, 5, &mut rng).unwrap())
            .collect();
        for (label, batch) in [("product states", &products), ("5-term mixtures", &mixtures)] {
            let crit = batch
                .iter()
                .filter(|r| realignment_check(r).entangled || ppt_check(r).entangled)
                .count();
            check(crit == 0, format!("{dims} {label}: {crit} realignment/PPT detections"));
            for probe in probes {
                let (hits, min) = batch.iter().fold((0, f64::INFINITY), |(h, m), r| {
                    let v = probe.value(r);
                    (h + usize::from(v < -FLOOR), m.min(v))
                });
                check(
                    hits == 0,
                    format!("{dims} {label}: {} detects {hits}/{} (min {min:.3e})", probe.name(), batch.len()),
                );
            }
        }
    }

    let cert = maps::indecomposability_certificate(&tang, &states::horodecki_2x4(0.3).unwrap()).unwrap();
    check(
        cert.certified,
        format!(
            "indecomposability certificate (tang, horodecki 0.3): PPT min {:.1e}, map λ_min {:.4}",
            cert.ppt_min_eigenvalue, cert.map_lambda_min
        ),
    );

    let failed = notes.iter().filter(|n| n.starts_with("[FAIL]")).count();
    let mut out = Outcome::new(pass, format!("{} checks, {failed} failed", notes.len()));
    out.notes = notes;
    out
}

fn criterion_8(dir: &Path) -> Outcome {
    let state = dir.join("upb.txt");
    let w = dir.join("upb_thm1.txt");
    entwit(&["gen", "upb", "--out", state.to_str().unwrap()]);
    entwit(&["witness", state.to_str().unwrap(), "--out", w.to_str().unwrap()]);
    let out = entwit(&[
        "sample",
        "--m",
        "3",
        "--n",
        "3",
        "--count",
        "10000",
        "--witness",
        w.to_str().unwrap(),
    ]);
    let n = keyed(&out, "samples");
    let rate = keyed(&out, "rate");
    Outcome::new(
        n == 10_000.0 && (0.0..=1.0).contains(&rate),
        format!(
            "{n} PPT-symmetric 3x3 states, detection rate {:.2}% with the thm1 witness of the UPB state (unasserted)",
            100.0 * rate
        ),
    )
}

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn main() {
    let dir = TempDir::new().unwrap();
    let criteria: Vec<Criterion> = vec![
        ("werner witness identity", Box::new(criterion_1)),
        ("upb realignment threshold", Box::new(criterion_2)),
        ("upb thm1 map threshold", Box::new(criterion_3)),
        ("upb best map threshold", Box::new(criterion_4)),
        ("tang map on horodecki grid", Box::new(|| criterion_5(dir.path()))),
        ("tang map threshold", Box::new(criterion_6)),
        ("property suite", Box::new(criterion_7)),
        ("ppt-symmetric sampling end to end", Box::new(|| criterion_8(dir.path()))),
    ];
    let mut failed = Vec::new();
    for (k, (title, run)) in criteria.iter().enumerate() {
        let n = k + 1;
        let outcome = panic::catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Outcome::new(false, format!("panicked: {msg}"))
            });
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {n} {verdict}: {title}: {}", outcome.detail);
        for note in &outcome.notes {
            println!("    {note}");
        }
        if !outcome.pass {
            failed.push(n);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
