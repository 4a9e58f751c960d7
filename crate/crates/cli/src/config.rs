use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};
use triwell::ModelParams;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "triwell", version, about = "Three-well Bose-Hubbard model: spectra, purity, classical limit")]
pub struct Cli {
    /// TOML file with `key = value` defaults (keys as flags, `_` for `-`).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory [default: out].
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,

    /// Worker threads [default: all cores].
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lowest eigenvalues of H.
    Spectrum(SpectrumArgs),
    /// Ground-state purity and its derivative on a chi grid, one file per N.
    PurityScan(PurityScanArgs),
    /// Purity minimum chi_q(N) and the power-law fit of chi_q - chi_c.
    Scaling(ScalingArgs),
    /// Husimi and phase distributions of the ground state.
    Fields(FieldsArgs),
    /// Classical fixed points, optionally with a chi scan of branch energies.
    FixedPoints(FixedPointsArgs),
    /// Classical trajectories from one or more initial conditions.
    Trajectory(TrajectoryArgs),
    /// Minimum of the twin-circle energy against chi.
    ThetaMin(ThetaMinArgs),
}

/// Model parameters: reduced `(chi, mu)` or raw `(kappa, lambda)`.
#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// Tunneling rate [default: -1].
    #[arg(long, allow_negative_numbers = true)]
    pub omega: Option<f64>,
    /// kappa (N - 1) / Omega [default: 0].
    #[arg(long, allow_negative_numbers = true, conflicts_with_all = ["kappa", "lambda"])]
    pub chi: Option<f64>,
    /// Lambda (N - 1) / Omega [default: 0].
    #[arg(long, allow_negative_numbers = true, conflicts_with_all = ["kappa", "lambda"])]
    pub mu: Option<f64>,
    /// Raw on-site collision strength.
    #[arg(long, allow_negative_numbers = true)]
    pub kappa: Option<f64>,
    /// Raw cross-collision strength.
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Particle number [default: 30].
    #[arg(long)]
    pub n: Option<usize>,
}

/// `chi` grid `min, min + step, ..., <= max`.
#[derive(Debug, Clone, Default, Args)]
pub struct ChiGridArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub chi_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub chi_max: Option<f64>,
    #[arg(long)]
    pub chi_step: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of eigenvalues [default: 4].
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct PurityScanArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub omega: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    /// Particle numbers, comma separated [default: 30].
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// Grid defaults: 0 to 4 in steps of 0.05.
    #[command(flatten)]
    pub grid: ChiGridArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ScalingArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub omega: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    /// Particle numbers, at least three [default: 10,15,20,25,30,40,50,60].
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// Search window and coarse spacing [default: 1.95 to 2.6, step 0.005].
    #[command(flatten)]
    pub grid: ChiGridArgs,
    /// Half-width of the purity difference quotient [default: 0.005].
    #[arg(long)]
    pub fd_step: Option<f64>,
    /// Final bracket width of the minimum [default: 1e-4].
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Classical transition point [default: semiclassical level crossing].
    #[arg(long, allow_negative_numbers = true)]
    pub chi_c: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct FieldsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Points per occupation axis [default: 101].
    #[arg(long)]
    pub grid: Option<usize>,
    /// Points per phase axis [default: 256].
    #[arg(long)]
    pub phase_grid: Option<usize>,
    /// Relative height for counting maxima [default: 0.2].
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct FixedPointsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Also tabulate branch energies on a chi grid (needs --scan-max).
    #[arg(long, allow_negative_numbers = true)]
    pub scan_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub scan_max: Option<f64>,
    #[arg(long)]
    pub scan_step: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct TrajectoryArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Twin-sector start `THETA,PHI`; repeatable.
    #[arg(long = "init", value_name = "THETA,PHI", allow_negative_numbers = true)]
    pub init: Vec<String>,
    /// General start `RE_W1,IM_W1,RE_W2,IM_W2`; repeatable.
    #[arg(long = "init-w", value_name = "W", allow_negative_numbers = true)]
    pub init_w: Vec<String>,
    /// Final time [default: 100].
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Sampling interval [default: 0.01].
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ThetaMinArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub omega: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    /// Grid defaults: 0 to 4 in steps of 0.01.
    #[command(flatten)]
    pub grid: ChiGridArgs,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(usize),
    Many(Vec<usize>),
}

/// Contents of a `--config` file. Keys that a command does not use are ignored.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub out_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub omega: Option<f64>,
    pub chi: Option<f64>,
    pub mu: Option<f64>,
    pub kappa: Option<f64>,
    pub lambda: Option<f64>,
    pub n: Option<OneOrMany>,
    pub k: Option<usize>,
    pub chi_min: Option<f64>,
    pub chi_max: Option<f64>,
    pub chi_step: Option<f64>,
    pub fd_step: Option<f64>,
    pub tolerance: Option<f64>,
    pub chi_c: Option<f64>,
    pub grid: Option<usize>,
    pub phase_grid: Option<usize>,
    pub threshold: Option<f64>,
    pub scan_min: Option<f64>,
    pub scan_max: Option<f64>,
    pub scan_step: Option<f64>,
    pub init: Option<Vec<[f64; 2]>>,
    pub init_w: Option<Vec<[f64; 4]>>,
    pub t_max: Option<f64>,
    pub dt: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    fn single_n(&self) -> Result<Option<usize>, CliError> {
        match &self.n {
            None => Ok(None),
            Some(OneOrMany::One(n)) => Ok(Some(*n)),
            Some(OneOrMany::Many(v)) if v.len() == 1 => Ok(Some(v[0])),
            Some(OneOrMany::Many(_)) => Err(CliError::Usage("config key n must be a single integer here".into())),
        }
    }

    fn n_list(&self) -> Option<Vec<usize>> {
        match &self.n {
            None => None,
            Some(OneOrMany::One(n)) => Some(vec![*n]),
            Some(OneOrMany::Many(v)) => Some(v.clone()),
        }
    }
}

pub const DEFAULT_OMEGA: f64 = -1.0;
pub const DEFAULT_N: usize = 30;

/// Model parameters after merging flags, config file and defaults.
#[derive(Debug, Clone, Copy)]
pub struct ResolvedModel {
    pub params: ModelParams,
    /// `None` when the reduced form is undefined (`N < 2`, `Omega = 0`).
    pub chi: Option<f64>,
    pub mu: Option<f64>,
    pub raw_input: bool,
}

impl ResolvedModel {
    pub fn to_json(&self) -> Value {
        json!({
            "omega": self.params.omega,
            "kappa": self.params.kappa + 0.0,
            "lambda": self.params.lambda + 0.0,
            "chi": self.chi,
            "mu": self.mu,
            "n": self.params.n_particles,
            "input": if self.raw_input { "raw" } else { "reduced" },
        })
    }
}

fn finite(name: &str, x: f64) -> Result<f64, CliError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::Usage(format!("{name} must be finite, got {x}")))
    }
}

pub fn resolve_omega(flag: Option<f64>, file: &FileConfig) -> Result<f64, CliError> {
    let omega = finite("omega", flag.or(file.omega).unwrap_or(DEFAULT_OMEGA))?;
    if omega == 0.0 {
        return Err(CliError::Usage("omega must be nonzero".into()));
    }
    Ok(omega)
}

pub fn resolve_mu(flag: Option<f64>, file: &FileConfig) -> Result<f64, CliError> {
    finite("mu", flag.or(file.mu).unwrap_or(0.0))
}

impl ModelArgs {
    /// Command-line values win group-wise: any raw flag on the command line
    /// discards reduced values from the config file and vice versa.
    pub fn resolve(&self, file: &FileConfig) -> Result<ResolvedModel, CliError> {
        let omega = resolve_omega(self.omega, file)?;
        let n = match self.n {
            Some(n) => n,
            None => file.single_n()?.unwrap_or(DEFAULT_N),
        };
        let cli_raw = self.kappa.is_some() || self.lambda.is_some();
        let cli_reduced = self.chi.is_some() || self.mu.is_some();
        let file_raw = file.kappa.is_some() || file.lambda.is_some();
        let file_reduced = file.chi.is_some() || file.mu.is_some();
        let raw = if cli_raw || cli_reduced {
            cli_raw
        } else if file_raw && file_reduced {
            return Err(CliError::Usage(
                "config mixes raw (kappa, lambda) and reduced (chi, mu) parameters".into(),
            ));
        } else {
            file_raw
        };
        let from_cli = cli_raw || cli_reduced;
        if raw {
            let (k, l) = if from_cli { (self.kappa, self.lambda) } else { (file.kappa, file.lambda) };
            let kappa = finite("kappa", k.unwrap_or(0.0))?;
            let lambda = finite("lambda", l.unwrap_or(0.0))?;
            let params = ModelParams::new(omega, kappa, lambda, n);
            Ok(ResolvedModel {
                params,
                chi: params.chi().ok(),
                mu: params.mu().ok(),
                raw_input: true,
            })
        } else {
            let (c, m) = if from_cli { (self.chi, self.mu) } else { (file.chi, file.mu) };
            let chi = finite("chi", c.unwrap_or(0.0))?;
            let mu = finite("mu", m.unwrap_or(0.0))?;
            let params = ModelParams::from_reduced(omega, chi, mu, n).map_err(|e| CliError::Usage(e.to_string()))?;
            Ok(ResolvedModel {
                params,
                chi: Some(chi),
                mu: Some(mu),
                raw_input: false,
            })
        }
    }
}

/// Particle-number list from `--n` or the config file.
pub fn resolve_n_list(flag: &[usize], file: &FileConfig, default: &[usize]) -> Vec<usize> {
    if !flag.is_empty() {
        flag.to_vec()
    } else {
        file.n_list().unwrap_or_else(|| default.to_vec())
    }
}

/// Inclusive uniform grid specification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn new(name: &str, min: f64, max: f64, step: f64) -> Result<Self, CliError> {
        for (what, x) in [("min", min), ("max", max), ("step", step)] {
            finite(&format!("{name} {what}"), x)?;
        }
        if !(step > 0.0) {
            return Err(CliError::Usage(format!("{name} step must be positive, got {step}")));
        }
        if max < min {
            return Err(CliError::Usage(format!("{name} range [{min}, {max}] is empty")));
        }
        if (max - min) / step > 1e7 {
            return Err(CliError::Usage(format!("{name} grid has more than 1e7 points")));
        }
        Ok(GridSpec { min, max, step })
    }

    /// `min + i step` for `i = 0..=floor((max - min) / step)`, tolerant of round-off at `max`.
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.max - self.min) / self.step + 1e-9).floor() as usize;
        (0..=count).map(|i| self.min + i as f64 * self.step).collect()
    }

    pub fn to_json(&self) -> Value {
        json!({ "min": self.min, "max": self.max, "step": self.step, "points": self.values().len() })
    }
}

impl ChiGridArgs {
    pub fn resolve(&self, file: &FileConfig, default: (f64, f64, f64)) -> Result<GridSpec, CliError> {
        GridSpec::new(
            "chi",
            self.chi_min.or(file.chi_min).unwrap_or(default.0),
            self.chi_max.or(file.chi_max).unwrap_or(default.1),
            self.chi_step.or(file.chi_step).unwrap_or(default.2),
        )
    }
}

/// Parses a comma-separated list of exactly `len` floats.
pub fn parse_tuple(flag: &str, text: &str, len: usize) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != len {
        return Err(CliError::Usage(format!("--{flag} expects {len} comma-separated numbers, got {text:?}")));
    }
    parts
        .iter()
        .map(|p| {
            p.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::Usage(format!("--{flag}: {p:?} is not a finite number")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_endpoint() {
        let g = GridSpec::new("chi", 0.0, 4.0, 0.05).unwrap();
        let v = g.values();
        assert_eq!(v.len(), 81);
        assert!((v[80] - 4.0).abs() < 1e-12);
        assert!(GridSpec::new("chi", 1.0, 0.0, 0.1).is_err());
        assert!(GridSpec::new("chi", 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn command_line_group_wins_over_file() {
        let file = FileConfig {
            chi: Some(3.0),
            n: Some(OneOrMany::One(5)),
            ..Default::default()
        };
        let args = ModelArgs {
            kappa: Some(0.5),
            ..Default::default()
        };
        let m = args.resolve(&file).unwrap();
        assert!(m.raw_input);
        assert_eq!(m.params.kappa, 0.5);
        assert_eq!(m.params.n_particles, 5);

        let m = ModelArgs::default().resolve(&file).unwrap();
        assert_eq!(m.chi, Some(3.0));
    }

    #[test]
    fn mixed_file_groups_are_rejected() {
        let file = FileConfig {
            chi: Some(1.0),
            lambda: Some(0.1),
            ..Default::default()
        };
        assert!(ModelArgs::default().resolve(&file).is_err());
    }
}
