//! Regenerates the shipped synthetic subject:
//!
//! ```text
//! cargo run --example generate_synthetic
//! ```
//!
//! Default model, 30-min sampling over one day, 5% multiplicative noise.

use std::fs;
use std::path::Path;

use hpa_dyn::config::RunConfig;
use hpa_dyn::io::observations_csv;
use hpa_dyn::synthetic::{half_hourly_day, synthetic_observations};

const NOISE_SD: f64 = 0.05;
const SEED: u64 = 20240501;

fn main() -> hpa_dyn::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    fs::create_dir_all(&dir).expect("create data dir");
    let cfg = RunConfig::default();
    let obs = synthetic_observations(
        &cfg.model,
        &cfg.integration,
        &half_hourly_day(),
        NOISE_SD,
        SEED,
    )?;
    observations_csv(&obs).write(&dir.join("synthetic_subject.csv"))?;

    let manifest = format!(
        "# generating values for synthetic_subject.csv\n\
         # noise: multiplicative gaussian, sd = {NOISE_SD}, seed = {SEED}\n\
         # sampling: every 30 min, t = 0..1440\n{}",
        cfg.to_text()
    );
    let path = dir.join("synthetic_subject.manifest.cfg");
    fs::write(&path, manifest).map_err(|e| hpa_dyn::Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    println!("wrote {}", dir.display());
    Ok(())
}
