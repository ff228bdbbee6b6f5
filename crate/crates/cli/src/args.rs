use clap::{Args, Parser, Subcommand};
use hairfield::Rgb;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "hairfield", version, about = "Ray-distance hair fields: analysis, morphable model, extraction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ray direction templates.
    #[command(subcommand)]
    Template(TemplateCmd),
    /// Scalp specifications.
    #[command(subcommand)]
    Scalp(ScalpCmd),
    /// Synthetic head and hair fixtures.
    #[command(subcommand)]
    Fixtures(FixturesCmd),
    /// Cast the ray set against a hair mesh and record the field.
    Analyze(AnalyzeArgs),
    /// Build or sample the morphable model.
    #[command(subcommand)]
    Model(ModelCmd),
    /// Field editing operators.
    #[command(subcommand)]
    Field(FieldCmd),
    /// Reconstruct a colored hair mesh from a field.
    Extract(ExtractArgs),
    /// Compare a predicted mesh against ground truth.
    Eval(EvalArgs),
    /// Serve the model over HTTP for the viewer.
    Serve(ServeArgs),
}

#[derive(Debug, Subcommand)]
pub enum TemplateCmd {
    Gen {
        #[arg(long)]
        rays: usize,
        #[arg(long = "max-polar", value_name = "DEG")]
        max_polar: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum ScalpCmd {
    /// Parse a scalp spec; with `--head`, also check topology and frames.
    Validate {
        spec: PathBuf,
        #[arg(long)]
        head: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum FixturesCmd {
    Gen(FixtureArgs),
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    /// sphere-head, shell-cap, asymmetric-cap, two-cap or noisy-shell.
    #[arg(long)]
    pub kind: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Head icosphere subdivision level.
    #[arg(long = "head-level")]
    pub head_level: Option<u32>,
    /// Hair shell subdivision level.
    #[arg(long = "hair-level")]
    pub hair_level: Option<u32>,
    /// Mirrored scalp pairs; the scalp file lists twice as many entries.
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Also write this many jittered hair meshes under `variants/`.
    #[arg(long, default_value_t = 0)]
    pub variants: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct RayInputs {
    #[arg(long)]
    pub head: PathBuf,
    #[arg(long)]
    pub scalp: PathBuf,
    #[arg(long)]
    pub template: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub rays: RayInputs,
    #[arg(long)]
    pub hair: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long = "skin-color", value_name = "R,G,B", value_parser = parse_rgb)]
    pub skin_color: Option<Rgb>,
}

#[derive(Debug, Subcommand)]
pub enum ModelCmd {
    /// Fit the model to every `.srmh` file in a directory, in name order.
    Build {
        #[arg(long)]
        fields: PathBuf,
        #[arg(long)]
        modes: usize,
        #[arg(long = "albedo-modes")]
        albedo_modes: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Field for a coefficient file; zero coefficients without `--coeffs`.
    Synth {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        coeffs: Option<PathBuf>,
        /// Overrides the thickness factor in the coefficient file.
        #[arg(long = "beta-s")]
        beta_s: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print model dimensions and spectra as JSON.
    Info {
        #[arg(long)]
        model: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum FieldCmd {
    /// Weighted blend of fields.
    Fuse {
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, num_args = 1.., required = true, allow_negative_numbers = true)]
        weights: Vec<f64>,
        /// Blend only entries where every input with nonzero weight has hair.
        #[arg(long = "mask-aware")]
        mask_aware: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mirror across the sagittal plane.
    Flip {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        scalp: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Scale every distance by `beta_s`.
    Thicken {
        #[arg(long)]
        field: PathBuf,
        #[arg(long = "beta-s")]
        beta_s: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Zero the entries flagged in an exclusion map.
    Exclude {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        map: PathBuf,
        #[arg(long = "skin-color", value_name = "R,G,B", value_parser = parse_rgb)]
        skin_color: Option<Rgb>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Add seeded noise to randomly chosen slots and record them.
    Perturb {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        magnitude: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Exclusion map of the perturbed slots.
        #[arg(long = "map-out")]
        map_out: PathBuf,
    },
    /// Threshold a score file (`score > 0`) into an exclusion map.
    Binarize {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub field: PathBuf,
    #[command(flatten)]
    pub rays: RayInputs,
    /// Voxel edge relative to the largest extent; accepts `a/b`.
    #[arg(long, value_parser = parse_real)]
    pub voxel: Option<f64>,
    /// Laplacian smoothing iterations.
    #[arg(long)]
    pub smooth: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// JSON file with nine `[r, g, b]` lighting rows.
    #[arg(long = "sh-coeffs")]
    pub sh_coeffs: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    /// Recall radius; defaults to 1% of the ground-truth diagonal.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Area-weighted surface samples added to each mesh's vertices.
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Print the report as JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub rays: RayInputs,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Directory of `.srmh` fields offered for fusion, keyed by file stem.
    #[arg(long)]
    pub samples: Option<PathBuf>,
    /// Viewer bundle served at `/`.
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
    /// Allowed CORS origin; any origin when absent.
    #[arg(long = "cors-origin")]
    pub cors_origin: Option<String>,
    #[arg(long, value_parser = parse_real)]
    pub voxel: Option<f64>,
    #[arg(long)]
    pub smooth: Option<usize>,
}

/// Decimal or `a/b`.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
            let b: f64 = b.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
            a / b
        }
        None => s.trim().parse().map_err(|e| format!("{s:?}: {e}"))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{s:?} is not a finite number"))
    }
}

pub fn parse_rgb(s: &str) -> Result<Rgb, String> {
    let parts: Vec<f32> = s
        .split(',')
        .map(|p| p.trim().parse::<f32>().map_err(|e| format!("{s:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [r, g, b] if parts.iter().all(|c| (0.0..=1.0).contains(c)) => Ok([r, g, b]),
        _ => Err(format!("{s:?}: expected three components in [0, 1]")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_and_colors() {
        assert_eq!(parse_real("1/64"), Ok(0.015625));
        assert_eq!(parse_real("0.5"), Ok(0.5));
        assert!(parse_real("1/0").is_err());
        assert!(parse_real("x").is_err());
        assert_eq!(parse_rgb("0.6, 0.45,0.35"), Ok([0.6, 0.45, 0.35]));
        assert!(parse_rgb("0.6,0.45").is_err());
        assert!(parse_rgb("0.6,0.45,1.5").is_err());
    }

    #[test]
    fn command_tree_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
