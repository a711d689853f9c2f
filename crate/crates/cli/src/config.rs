use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use deltaprime::geometry::ContourSpec;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

const COLUMNS: &str = "\
CSV columns (--format csv):
  circle          R,omega,k_star,lambda1,residual,k_lower,k_upper,small_radius_bound,defect_derivative,defect_jump
  sweep           R,omega,k_star,lambda1,residual
  bound           contour,length,omega,k_star,horizon,lambda1_circle,domain_bound,margin,circle_quotient,
                  domain_gradient,domain_jump,domain_denominator,ordering
  fem             contour,h,r_out,lambda1,nodes,error,order  (error and order only for circles)
  verify-theorem  contour,lambda1_fem,domain_bound,lambda1_circle,margin,passed

Side files: --profiles-out writes side,t,A,L; --eigen-out writes x,y,side,value; --mesh-out writes the
plain-text mesh (node, triangle, interface-pair and boundary sections).

Config files (--config, TOML or JSON by extension) use the long flag names as keys, e.g.
  command = \"bound\"
  contour = \"ellipse\"
  aspect = 2.0
verify-theorem also accepts `contours = [{ type = \"ellipse\", length = 6.283, aspect = 2.0 }, ...]`.
Values from the file win over flags; every override is reported on stderr.";

#[derive(Parser, Debug)]
#[command(
    name = "deltaprime",
    version,
    about = "Lowest eigenvalue of the attractive delta-prime interaction on closed planar contours",
    after_long_help = COLUMNS
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArgs,

    /// Run settings file (TOML or JSON); its values override flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write the report here instead of stdout.
    #[arg(long, short = 'o', global = true, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum CommandArgs {
    /// Exact solution on a circle of radius R.
    Circle(CircleArgs),
    /// lambda1 over a range of radii at fixed omega.
    Sweep(SweepArgs),
    /// Parallel-coordinate upper bound for a contour.
    Bound(BoundArgs),
    /// Finite-element lambda1 for a contour, optionally as a convergence table.
    Fem(FemArgs),
    /// FEM value, bound and circle value over a family of contours of equal length.
    VerifyTheorem(VerifyArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Circle,
    Sweep,
    Bound,
    Fem,
    VerifyTheorem,
}

impl fmt::Display for CommandName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            CommandName::Circle => "circle",
            CommandName::Sweep => "sweep",
            CommandName::Bound => "bound",
            CommandName::Fem => "fem",
            CommandName::VerifyTheorem => "verify-theorem",
        };
        f.write_str(name)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContourKind {
    Circle,
    Ellipse,
    Perturbed,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct CircleArgs {
    /// Circle radius.
    #[arg(long = "R", value_name = "R")]
    pub radius: Option<f64>,
    /// Interaction strength (default 1).
    #[arg(long)]
    pub omega: Option<f64>,
    /// Root tolerance on k (default 1e-12 omega).
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct SweepArgs {
    #[arg(long)]
    pub omega: Option<f64>,
    /// Smallest radius (default 0.1).
    #[arg(long)]
    pub r_min: Option<f64>,
    /// Largest radius (default 100).
    #[arg(long)]
    pub r_max: Option<f64>,
    /// Radius increment (default 0.1).
    #[arg(long)]
    pub r_step: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ContourArgs {
    /// Contour family (default circle).
    #[arg(long, value_enum)]
    pub contour: Option<ContourKind>,
    /// Perimeter (default 2 pi).
    #[arg(long)]
    pub length: Option<f64>,
    /// Ellipse aspect ratio (default 2).
    #[arg(long)]
    pub aspect: Option<f64>,
    /// Angular mode of the perturbed circle (default 3).
    #[arg(long)]
    pub mode: Option<u32>,
    /// Relative amplitude of the perturbation (default 0.1).
    #[arg(long)]
    pub eps: Option<f64>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct BoundArgs {
    #[command(flatten)]
    pub contour: ContourArgs,
    #[arg(long)]
    pub omega: Option<f64>,
    /// Outer truncation of the profile (default: where the tail falls below 1e-14).
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Grid points of the exported and checked distance profiles (default 512).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Write the area and level-length profiles as CSV.
    #[arg(long, value_name = "FILE")]
    pub profiles_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct FemArgs {
    #[command(flatten)]
    pub contour: ContourArgs,
    #[arg(long)]
    pub omega: Option<f64>,
    /// Target mesh size (default 0.04).
    #[arg(long)]
    pub h: Option<f64>,
    /// Radius of the truncation disk (default 6 L / 2 pi).
    #[arg(long)]
    pub r_out: Option<f64>,
    /// Eigen-residual tolerance (default 1e-10).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Decreasing mesh sizes for a convergence table.
    #[arg(long, value_delimiter = ',')]
    pub h_list: Option<Vec<f64>>,
    /// Truncation radii for a convergence table.
    #[arg(long, value_delimiter = ',')]
    pub r_out_list: Option<Vec<f64>>,
    #[arg(long, value_name = "FILE")]
    pub mesh_out: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub eigen_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct VerifyArgs {
    #[arg(long)]
    pub omega: Option<f64>,
    /// Common perimeter of the family (default 2 pi).
    #[arg(long)]
    pub length: Option<f64>,
    /// Ellipse aspect ratios in the family (default 1.2,1.5,2,3).
    #[arg(long, value_delimiter = ',')]
    pub aspects: Option<Vec<f64>>,
    /// Perturbation modes in the family (default 2,3,4).
    #[arg(long, value_delimiter = ',')]
    pub modes: Option<Vec<u32>>,
    /// Perturbation amplitude (default 0.1).
    #[arg(long)]
    pub eps: Option<f64>,
    /// FEM mesh size (default 0.04).
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub r_out: Option<f64>,
    /// Allowed excess of the bound over the circle value (default 1e-4).
    #[arg(long)]
    pub assert_tol: Option<f64>,
    /// Allowed excess of the FEM value over the bound (default 5e-3).
    #[arg(long)]
    pub fem_slack: Option<f64>,
}

/// Flat run settings; keys match the long flag names.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Settings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(rename = "R", skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contour: Option<ContourKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aspect: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_out: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_out_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aspects: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contours: Option<Vec<ContourSpec>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assert_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fem_slack: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profiles_out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh_out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigen_out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// Invalid flags, config files or parameter values.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn contour_settings(args: ContourArgs, s: &mut Settings) {
    s.contour = args.contour;
    s.length = args.length;
    s.aspect = args.aspect;
    s.mode = args.mode;
    s.eps = args.eps;
}

impl Cli {
    /// Settings given on the command line.
    pub fn into_settings(self) -> (Option<PathBuf>, Settings) {
        let mut s = Settings {
            format: self.format,
            output: self.output,
            ..Settings::default()
        };
        match self.command {
            CommandArgs::Circle(a) => {
                s.command = Some(CommandName::Circle);
                s.radius = a.radius;
                s.omega = a.omega;
                s.tol = a.tol;
            }
            CommandArgs::Sweep(a) => {
                s.command = Some(CommandName::Sweep);
                s.omega = a.omega;
                s.r_min = a.r_min;
                s.r_max = a.r_max;
                s.r_step = a.r_step;
                s.tol = a.tol;
            }
            CommandArgs::Bound(a) => {
                s.command = Some(CommandName::Bound);
                contour_settings(a.contour, &mut s);
                s.omega = a.omega;
                s.horizon = a.horizon;
                s.grid = a.grid;
                s.profiles_out = a.profiles_out;
            }
            CommandArgs::Fem(a) => {
                s.command = Some(CommandName::Fem);
                contour_settings(a.contour, &mut s);
                s.omega = a.omega;
                s.h = a.h;
                s.r_out = a.r_out;
                s.tol = a.tol;
                s.h_list = a.h_list;
                s.r_out_list = a.r_out_list;
                s.mesh_out = a.mesh_out;
                s.eigen_out = a.eigen_out;
            }
            CommandArgs::VerifyTheorem(a) => {
                s.command = Some(CommandName::VerifyTheorem);
                s.omega = a.omega;
                s.length = a.length;
                s.aspects = a.aspects;
                s.modes = a.modes;
                s.eps = a.eps;
                s.h = a.h;
                s.r_out = a.r_out;
                s.assert_tol = a.assert_tol;
                s.fem_slack = a.fem_slack;
            }
        }
        (self.config, s)
    }
}

/// Reads a settings file; `.json` is parsed as JSON, anything else as TOML.
pub fn read_settings(path: &Path) -> Result<Settings, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config file {}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| ConfigError(format!("invalid config file {}: {e}", path.display())))
}

fn as_map(settings: &Settings) -> Map<String, Value> {
    match serde_json::to_value(settings) {
        Ok(Value::Object(map)) => map,
        _ => unreachable!("settings serialize to an object"),
    }
}

/// Overlays `file` on `flags`. Returns the merged settings and one warning
/// per flag whose value the file replaced.
pub fn merge(flags: &Settings, file: &Settings) -> Result<(Settings, Vec<String>), ConfigError> {
    let mut merged = as_map(flags);
    let mut warnings = Vec::new();
    for (key, value) in as_map(file) {
        if let Some(previous) = merged.get(&key) {
            if *previous != value {
                warnings.push(format!(
                    "config file sets `{key}` to {value}, overriding the command-line value {previous}"
                ));
            }
        }
        merged.insert(key, value);
    }
    let settings = serde_json::from_value(Value::Object(merged)).map_err(|e| ConfigError(e.to_string()))?;
    Ok((settings, warnings))
}

pub fn positive(name: &str, value: f64) -> Result<f64, ConfigError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(ConfigError(format!("`{name}` must be a positive finite number, got {value}")))
    }
}

impl Settings {
    pub fn omega(&self) -> Result<f64, ConfigError> {
        positive("omega", self.omega.unwrap_or(1.0))
    }

    pub fn length(&self) -> Result<f64, ConfigError> {
        positive("length", self.length.unwrap_or(2.0 * std::f64::consts::PI))
    }

    pub fn contour_spec(&self) -> Result<ContourSpec, ConfigError> {
        let length = self.length()?;
        Ok(match self.contour.unwrap_or(ContourKind::Circle) {
            ContourKind::Circle => ContourSpec::Circle { length },
            ContourKind::Ellipse => ContourSpec::Ellipse {
                length,
                aspect: positive("aspect", self.aspect.unwrap_or(2.0))?,
            },
            ContourKind::Perturbed => ContourSpec::Perturbed {
                length,
                mode: self.mode.unwrap_or(3),
                eps: positive("eps", self.eps.unwrap_or(0.1))?,
            },
        })
    }

    /// The verify-theorem family: an explicit `contours` list, or a circle,
    /// ellipses of the given aspects and perturbed circles of the given modes.
    pub fn family(&self) -> Result<Vec<ContourSpec>, ConfigError> {
        if let Some(list) = &self.contours {
            if list.is_empty() {
                return Err(ConfigError("`contours` is empty".into()));
            }
            return Ok(list.clone());
        }
        let length = self.length()?;
        let eps = positive("eps", self.eps.unwrap_or(0.1))?;
        let mut family = vec![ContourSpec::Circle { length }];
        for &aspect in self.aspects.as_deref().unwrap_or(&[1.2, 1.5, 2.0, 3.0]) {
            family.push(ContourSpec::Ellipse {
                length,
                aspect: positive("aspects", aspect)?,
            });
        }
        for &mode in self.modes.as_deref().unwrap_or(&[2, 3, 4]) {
            family.push(ContourSpec::Perturbed { length, mode, eps });
        }
        Ok(family)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_win_and_are_reported() {
        let flags = Settings {
            omega: Some(1.0),
            radius: Some(2.0),
            ..Settings::default()
        };
        let file: Settings = toml::from_str("omega = 3.0\nR = 2.0\ntol = 1e-9").unwrap();
        let (merged, warnings) = merge(&flags, &file).unwrap();
        assert_eq!(merged.omega, Some(3.0));
        assert_eq!(merged.radius, Some(2.0));
        assert_eq!(merged.tol, Some(1e-9));
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("omega"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<Settings>("omgea = 1.0").is_err());
        assert!(serde_json::from_str::<Settings>(r#"{"r-min": 0.5}"#).is_ok());
    }

    #[test]
    fn family_defaults_to_eight_contours() {
        let family = Settings::default().family().unwrap();
        assert_eq!(family.len(), 8);
        assert!(matches!(family[0], ContourSpec::Circle { .. }));
    }

    #[test]
    fn nonpositive_values_are_config_errors() {
        let s = Settings {
            omega: Some(-1.0),
            ..Settings::default()
        };
        assert!(s.omega().is_err());
        assert!(positive("h", f64::NAN).is_err());
    }
}
