use std::fs;
use std::path::Path;

use anyhow::Context;
use veriscope_core::corpus::{write_corpus, CorpusPaths};
use veriscope_core::demo::{demo_dates, generate_demo, DemoConfig};

use crate::config::{InputConfig, RunConfig, WindowConfig};
use crate::error::{runtime, Result};

pub const DEMO_CONFIG: &str = "veriscope.toml";

/// Settings sized for the demo corpus: a short topic grid around the planted
/// count, fewer Gibbs sweeps and shallower boosting inside importance and
/// selection.
pub fn demo_run_config(data_dir: &Path, demo: &DemoConfig) -> RunConfig {
    let dates = demo_dates();
    let mut cfg = RunConfig {
        seed: Some(demo.seed),
        output_dir: data_dir.join("out"),
        input: InputConfig {
            dir: Some(data_dir.to_path_buf()),
            ..Default::default()
        },
        window: WindowConfig {
            start: dates.window_start,
            end: dates.window_end,
            snapshot: dates.snapshot,
        },
        ..Default::default()
    };
    let t = demo.topics.max(2);
    cfg.topics.candidates = vec![(t / 2).max(2), t, 2 * t];
    cfg.topics.candidates.dedup();
    cfg.topics.n_iter = 200;
    cfg.select.n_rounds = 20;
    cfg.importance.n_rounds = 30;
    cfg
}

pub fn write_demo(dir: &Path, demo: &DemoConfig) -> Result<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(runtime)?;
    let dir = dir.canonicalize().map_err(runtime)?;
    let corpus = generate_demo(demo);
    write_corpus(&corpus, &CorpusPaths::in_dir(&dir)).map_err(runtime)?;
    let cfg = demo_run_config(&dir, demo);
    let text = toml::to_string_pretty(&cfg).map_err(runtime)?;
    fs::write(dir.join(DEMO_CONFIG), text).map_err(runtime)?;
    log::info!(
        "wrote {} users to {} with config {}",
        corpus.len(),
        dir.display(),
        DEMO_CONFIG
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_config_round_trips_through_toml() {
        let cfg = demo_run_config(Path::new("/data"), &DemoConfig::default());
        let text = toml::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert!(back.validate(false).is_ok());
    }
}
