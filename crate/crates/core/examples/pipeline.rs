//! Writes the synthetic desk-scale fixture and runs every pipeline stage on
//! it, printing the manifest.
//!
//! cargo run --release --example pipeline [-- <workdir>]

use std::path::PathBuf;
use std::time::Instant;

use adaptkit::pipeline::run_config_file;
use adaptkit::synth::{write_desk_fixture, PlantedConfig};

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("adaptkit-desk"));
    std::fs::create_dir_all(&dir)?;
    let cfg = write_desk_fixture(&dir, &PlantedConfig::default(), 42)?;
    println!("fixture and config in {}", dir.display());

    let t = Instant::now();
    let report = run_config_file(&cfg, Some(&dir.join("out")))?;
    if let Some(e) = &report.error {
        anyhow::bail!("pipeline failed: {e}");
    }
    for e in &report.manifest.entries {
        println!("{:<12} {:<40} {}", e.stage, e.path, &e.sha256[..16]);
    }
    println!(
        "{} artifacts in {:.1?}",
        report.manifest.entries.len(),
        t.elapsed()
    );
    Ok(())
}
