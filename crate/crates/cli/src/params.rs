//! Parsing of state families, parameter ranges, maps and detectors given on
//! the command line.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use entwit::linalg::BipartiteDims;
use entwit::maps::{self, LinearMap, MapDetectionReport};
use entwit::states::{self, DensityMatrix};
use entwit::witness::{self, Witness};

use crate::matrix_file;

/// Default Horodecki parameter for the noisy family.
pub const DEFAULT_B: f64 = 0.218;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Family {
    /// Two-qubit Werner states, parameter f in [-1, 1].
    Werner,
    /// The 3x3 Tiles bound entangled state.
    Upb,
    /// p·upb + (1-p)·I/9, p in [0, 1].
    UpbNoisy,
    /// Horodecki 2x4 states, b in (0, 1).
    Horodecki,
    /// p·horodecki(b) + (1-p)·I/8, p in [0, 1].
    HorodeckiNoisy,
    /// Maximally mixed m x n state.
    Mixed,
    /// Random state from a Ginibre draw, seeded.
    Random,
    /// Random state equal to its own partial transpose, seeded.
    PptSymmetric,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Werner => "werner",
            Family::Upb => "upb",
            Family::UpbNoisy => "upb-noisy",
            Family::Horodecki => "horodecki",
            Family::HorodeckiNoisy => "horodecki-noisy",
            Family::Mixed => "mixed",
            Family::Random => "random",
            Family::PptSymmetric => "ppt-symmetric",
        }
    }

    /// Name and interval of the scanned parameter for one-parameter families.
    pub fn parameter(self) -> Option<(&'static str, &'static str)> {
        match self {
            Family::Werner => Some(("f", "[-1, 1]")),
            Family::UpbNoisy | Family::HorodeckiNoisy => Some(("p", "[0, 1]")),
            Family::Horodecki => Some(("b", "(0, 1)")),
            _ => None,
        }
    }

    /// Member of a one-parameter family; `b` is only used by the noisy
    /// Horodecki family.
    pub fn state(self, x: f64, b: f64) -> Result<DensityMatrix> {
        let rho = match self {
            Family::Werner => states::werner_2x2(x)?,
            Family::UpbNoisy => states::noisy_mixture(&states::upb_tiles_bes(), x)?,
            Family::Horodecki => states::horodecki_2x4(x)?,
            Family::HorodeckiNoisy => states::noisy_mixture(&states::horodecki_2x4(b)?, x)?,
            other => bail!("family {} has no scan parameter", other.name()),
        };
        Ok(rho)
    }

    pub fn require_parametric(self) -> Result<(&'static str, &'static str)> {
        self.parameter().ok_or_else(|| {
            anyhow!(
                "family {} has no scan parameter; use werner, upb-noisy, horodecki or horodecki-noisy",
                self.name()
            )
        })
    }
}

/// Evenly spaced grid `lo:hi:steps` including both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Range {
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            bail!("range must be lo:hi:steps, got `{s}`");
        }
        let lo: f64 = parts[0].trim().parse().with_context(|| format!("bad range start `{}`", parts[0]))?;
        let hi: f64 = parts[1].trim().parse().with_context(|| format!("bad range end `{}`", parts[1]))?;
        let steps: usize = parts[2]
            .trim()
            .parse()
            .with_context(|| format!("bad step count `{}`", parts[2]))?;
        if !lo.is_finite() || !hi.is_finite() {
            bail!("range ends must be finite");
        }
        if steps == 0 {
            bail!("range needs at least one point");
        }
        if lo > hi {
            bail!("range start {lo} exceeds end {hi}");
        }
        if steps == 1 && lo != hi {
            bail!("a single-point range needs lo = hi");
        }
        Ok(Self { lo, hi, steps })
    }

    pub fn points(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        let h = (self.hi - self.lo) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| {
                if k + 1 == self.steps {
                    self.hi
                } else {
                    self.lo + k as f64 * h
                }
            })
            .collect()
    }
}

/// `key=value` pairs separated by commas.
fn parse_kv(s: &str) -> Result<Vec<(String, f64)>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| anyhow!("expected key=value, got `{p}`"))?;
            let v: f64 = v
                .trim()
                .parse()
                .with_context(|| format!("`{v}` is not a number"))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn take_params(s: &str, allowed: &[&str]) -> Result<Vec<Option<f64>>> {
    let kv = parse_kv(s)?;
    let mut out = vec![None; allowed.len()];
    for (k, v) in kv {
        let idx = allowed
            .iter()
            .position(|a| *a == k)
            .ok_or_else(|| anyhow!("unknown parameter `{k}`, expected one of {}", allowed.join(", ")))?;
        out[idx] = Some(v);
    }
    Ok(out)
}

/// A positive-map specification: `tang:u=..[,eps=..]`, `tang-dual:u=..[,eps=..]`
/// or `witness:FILE` (the map associated with a witness file).
#[derive(Debug, Clone, PartialEq)]
pub enum MapSpec {
    Tang { u: f64, eps: Option<f64> },
    TangDual { u: f64, eps: Option<f64> },
    WitnessFile(PathBuf),
}

impl MapSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        match kind {
            "tang" | "tang-dual" => {
                let p = take_params(rest, &["u", "eps"])?;
                let u = p[0].ok_or_else(|| anyhow!("{kind} needs u=<value>"))?;
                Ok(if kind == "tang" {
                    MapSpec::Tang { u, eps: p[1] }
                } else {
                    MapSpec::TangDual { u, eps: p[1] }
                })
            }
            "witness" if !rest.is_empty() => Ok(MapSpec::WitnessFile(rest.into())),
            _ => bail!("unknown map `{s}`; expected tang:u=.., tang-dual:u=.. or witness:FILE"),
        }
    }

    pub fn build(&self) -> Result<LinearMap> {
        Ok(match self {
            MapSpec::Tang { u, eps } => maps::tang_map(*u, *eps)?,
            MapSpec::TangDual { u, eps } => maps::tang_dual(*u, *eps)?,
            MapSpec::WitnessFile(path) => maps::from_witness(&matrix_file::read_witness(path)?),
        })
    }
}

/// Applies `Λ` to the subsystem whose dimension matches its input, preferring
/// the second one: `(Id ⊗ Λ)ρ` if `in_dim = n`, otherwise `(Λ ⊗ Id)ρ`.
pub fn map_detection(map: &LinearMap, rho: &DensityMatrix) -> Result<MapDetectionReport> {
    let BipartiteDims { m, n } = rho.dims();
    if map.in_dim() == n {
        Ok(maps::detection_value(map, rho)?)
    } else if map.in_dim() == m {
        Ok(maps::detection_value_tensor_id(map, rho)?)
    } else {
        bail!(
            "map acts on {}x{} matrices but the state is {m}x{n}",
            map.in_dim(),
            map.in_dim()
        )
    }
}

/// Signed diagnostic used by threshold searches; negative beyond the decision
/// tolerance means "entangled".
#[derive(Debug, Clone, PartialEq)]
pub enum DetectorSpec {
    /// `1 − ‖R(ρ)‖`.
    Realign,
    /// `λ_min(ρ^{T_A})`.
    Ppt,
    /// `Tr(Wρ)` for a witness file.
    WitnessFile(PathBuf),
    /// `λ_min` of a map applied to `ρ`.
    Map(MapSpec),
    /// Map of the realignment witness of the same family at parameter `p`.
    Thm1Map { p: f64 },
}

impl DetectorSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        match kind {
            "realign" | "realignment" if rest.is_empty() => Ok(DetectorSpec::Realign),
            "ppt" if rest.is_empty() => Ok(DetectorSpec::Ppt),
            "witness" if !rest.is_empty() => Ok(DetectorSpec::WitnessFile(rest.into())),
            "map" if !rest.is_empty() => Ok(DetectorSpec::Map(MapSpec::WitnessFile(rest.into()))),
            "tang" | "tang-dual" => Ok(DetectorSpec::Map(MapSpec::parse(s)?)),
            "thm1-map" => {
                let p = take_params(rest, &["p"])?;
                let p = p[0].ok_or_else(|| anyhow!("thm1-map needs p=<value>"))?;
                Ok(DetectorSpec::Thm1Map { p })
            }
            _ => bail!(
                "unknown detector `{s}`; expected realign, ppt, witness:FILE, map:FILE, tang:u=.., tang-dual:u=.. or thm1-map:p=.."
            ),
        }
    }

    /// Resolves files and source states once, before any evaluation.
    pub fn prepare(&self, family: Family, b: f64) -> Result<Detector> {
        Ok(match self {
            DetectorSpec::Realign => Detector::Realign,
            DetectorSpec::Ppt => Detector::Ppt,
            DetectorSpec::WitnessFile(path) => Detector::Witness(matrix_file::read_witness(path)?),
            DetectorSpec::Map(spec) => Detector::Map(spec.build()?),
            DetectorSpec::Thm1Map { p } => {
                let source = family.state(*p, b)?;
                let w = witness::realignment_witness(&source)?;
                Detector::Map(maps::from_witness(&w))
            }
        })
    }
}

pub enum Detector {
    Realign,
    Ppt,
    Witness(Witness),
    Map(LinearMap),
}

impl Detector {
    pub fn diagnostic(&self, rho: &DensityMatrix) -> Result<f64> {
        Ok(match self {
            Detector::Realign => 1.0 - entwit::realignment_check(rho).value,
            Detector::Ppt => entwit::ppt_check(rho).min_eigenvalue.expect("ppt reports eigenvalue"),
            Detector::Witness(w) => witness::evaluate(w, rho)?,
            Detector::Map(map) => map_detection(map, rho)?.lambda_min,
        })
    }
}
