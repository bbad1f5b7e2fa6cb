//! `fogfool noise` - render the fused noise field to a graymap.

use std::path::PathBuf;

use serde::Serialize;

use crate::error::Result;
use crate::io::write_p5;
use crate::noise::{fbm_field, normalize01, FbmSpec};

#[derive(Debug, clap::Args, Serialize)]
pub struct NoiseArgs {
    /// Output graymap path (binary P5)
    #[arg(long, short = 'o')]
    #[serde(skip_serializing)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 256)]
    pub height: usize,
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    /// Number of octaves fused into the field
    #[arg(long, default_value_t = 6)]
    pub octaves: usize,
    /// Lattice cells per axis at the coarsest octave
    #[arg(long = "base-cells", default_value_t = 4)]
    pub base_cells: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn run(args: NoiseArgs) -> Result<()> {
    let spec = FbmSpec::new(args.octaves, args.base_cells)?;
    let field = normalize01(&fbm_field(&spec, args.height, args.width, args.seed)?);
    write_p5(&field, &args.out)?;
    println!(
        "wrote {}x{} fog field ({} octaves, seed {}) to {}",
        args.width,
        args.height,
        args.octaves,
        args.seed,
        args.out.display()
    );
    Ok(())
}
