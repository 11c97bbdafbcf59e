//! The command pipeline as a library: map, plan, then a tiny train/eval and
//! a replay image, all under one master seed. Every artifact is listed in
//! the run manifest with its checksum.

use relax_nav::harness::{cmd_eval, cmd_map, cmd_plan, cmd_replay, cmd_train, RunConfig, RunManifest};

fn summarize(m: &RunManifest) {
    println!("{:<6} {:>3} artifacts, {:.2} s", m.command.to_string(), m.artifacts.len(), m.wall_seconds);
    assert!(m.artifacts.iter().all(|a| a.matches()));
}

pub fn run_example() -> relax_nav::Result<()> {
    let mut cfg = RunConfig {
        seed: 21,
        out_dir: std::env::temp_dir().join("relax-nav-pipeline"),
        ..RunConfig::default()
    };
    cfg.agent.episode.n_eps = 3;
    cfg.eval.episodes = 4;

    summarize(&cmd_map(&cfg)?);
    summarize(&cmd_plan(&cfg)?);
    summarize(&cmd_train(&cfg, None)?);
    summarize(&cmd_eval(&cfg)?);
    summarize(&cmd_replay(&cfg)?);
    println!("outputs in {}", cfg.out_dir.display());
    Ok(())
}

#[allow(dead_code)]
fn main() -> relax_nav::Result<()> {
    run_example()
}
