//! Train the obstacle handler in randomized farmland and compare it with a
//! random policy on held-out layouts.
//!
//! `cargo run --release --example train_obstacle_handler -- 500` runs the
//! full schedule (a few tens of seconds); without an argument a short run
//! is made.

use relax_nav::agent::{
    evaluation_seeds, run_evaluation, run_training, AgentConfig, EvalPolicy, ScenarioSource, TrainOptions,
};
use relax_nav::world::{DoneReason, ScenarioTemplate};

pub fn train_and_evaluate(episodes: usize, seed: u64) -> relax_nav::Result<(f64, f64)> {
    let mut cfg = AgentConfig::default();
    cfg.episode.n_eps = episodes;
    let source = ScenarioSource::Template(ScenarioTemplate::Farmland);

    let mut progress = |r: &relax_nav::agent::CurveRow| {
        if (r.episode + 1) % 50 == 0 {
            println!(
                "episode {:4}  avg score {:9.1}  epsilon {:.3}",
                r.episode + 1,
                r.rolling_avg,
                r.epsilon
            );
        }
    };
    let trained = run_training(
        &cfg,
        &source,
        seed,
        TrainOptions {
            on_episode: Some(&mut progress),
            ..TrainOptions::default()
        },
    )?;
    println!(
        "{} env steps, {} transitions stored, {} collisions during resets",
        trained.env_steps, trained.buffer_len, trained.reset_collisions
    );

    let seeds = evaluation_seeds(seed, 50);
    let greedy = run_evaluation(EvalPolicy::Greedy(&trained.policy), &cfg, &source, &seeds, 4)?;
    let random = run_evaluation(EvalPolicy::Random, &cfg, &source, &seeds, 4)?;
    for (name, r) in [("trained", &greedy), ("random", &random)] {
        println!(
            "{name:8} success {:4.0}%  collision {:2}  step limit {:2}",
            r.success_rate() * 100.0,
            r.count(DoneReason::Collision),
            r.count(DoneReason::StepLimit)
        );
    }
    Ok((greedy.success_rate(), random.success_rate()))
}

pub fn run_example() -> relax_nav::Result<()> {
    train_and_evaluate(20, 1).map(|_| ())
}

#[allow(dead_code)]
fn main() -> relax_nav::Result<()> {
    let episodes = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(60);
    train_and_evaluate(episodes, 1).map(|_| ())
}
