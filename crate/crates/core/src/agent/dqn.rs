use crate::error::{Error, Result};
use crate::nn::{argmax, Adam, DuelingNet, Tape};

use super::replay::Transition;

/// Double-DQN bootstrap target: the policy net picks `a*` on `s'`, the
/// target net evaluates it.
pub fn double_dqn_target(
    policy: &DuelingNet,
    target: &DuelingNet,
    t: &Transition,
    gamma: f64,
    terminal_mask: bool,
) -> Result<f64> {
    if t.done && terminal_mask {
        return Ok(t.reward);
    }
    let a_star = argmax(&policy.forward(t.next_state.as_slice())?);
    let q_next = target.forward(t.next_state.as_slice())?[a_star];
    Ok(t.reward + gamma * q_next)
}

/// One gradient step on the mean squared TD error of `batch`. Returns the
/// loss measured before the update. Nothing changes when the loss is not
/// finite.
pub fn train_step(
    policy: &mut DuelingNet,
    target: &DuelingNet,
    opt: &mut Adam,
    batch: &[Transition],
    gamma: f64,
    terminal_mask: bool,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let n = batch.len() as f64;
    let mut tape = Tape::default();
    let mut upstream = Vec::with_capacity(batch.len());
    let mut loss = 0.0;
    for t in batch {
        let y = double_dqn_target(policy, target, t, gamma, terminal_mask)?;
        let q = policy.forward_recorded(t.state.as_slice(), &mut tape)?;
        let err = q[t.action] - y;
        loss += err * err / n;
        let mut d = vec![0.0; q.len()];
        d[t.action] = 2.0 * err / n;
        upstream.push(d);
    }
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss {
            loss,
            episode: 0,
            step: opt.step,
        });
    }
    let grads = policy.backward(&mut tape, &upstream)?;
    opt.step_net(policy, &grads)?;
    Ok(loss)
}

/// Copy the policy parameters into the target net when `step` is a multiple
/// of `f_u`. Returns whether a copy happened.
pub fn sync_target(policy: &DuelingNet, target: &mut DuelingNet, step: u64, f_u: u64) -> bool {
    if f_u == 0 || step % f_u != 0 {
        return false;
    }
    target.clone_from(policy);
    true
}
