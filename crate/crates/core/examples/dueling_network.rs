//! The dueling Q network on its own: forward pass, the value/advantage
//! split, a few Adam steps on a regression target and a checkpoint round
//! trip.

use relax_nav::nn::{argmax, load_checkpoint, save_checkpoint, Adam, DuelingNet, Tape, Topology};

pub fn run_example() -> relax_nav::Result<()> {
    let mut net = DuelingNet::new(Topology::default(), 3)?;
    let state = [0.4, -0.2, 0.0, 6.0, 6.0, 1.2, 6.0, 6.0, 3.5, 6.0, 6.0];
    let q = net.forward(&state)?;
    println!("{} parameters, Q = {:.4?}, greedy action {}", net.n_params(), q, argmax(&q));

    // pull Q(s, 2) toward 1.0 with plain MSE
    let mut opt = Adam::for_net(&net);
    let mut tape = Tape::default();
    for step in 0..200 {
        let q = net.forward_recorded(&state, &mut tape)?;
        let err = q[2] - 1.0;
        let mut up = vec![0.0; q.len()];
        up[2] = 2.0 * err;
        let g = net.backward(&mut tape, &[up])?;
        opt.step_net(&mut net, &g)?;
        if step % 50 == 0 {
            println!("step {step:3}: loss {:.6}", err * err);
        }
    }
    let q = net.forward(&state)?;
    println!("after training Q(s, 2) = {:.5}", q[2]);

    let path = std::env::temp_dir().join("relax-nav-dueling.ckpt");
    save_checkpoint(&net, &opt, serde_json::json!({ "example": true }), &path)?;
    let (back, _, header) = load_checkpoint(&path)?;
    assert_eq!(back.forward(&state)?, q);
    println!("checkpoint {} restored ({} params)", path.display(), header.n_params);
    Ok(())
}

#[allow(dead_code)]
fn main() -> relax_nav::Result<()> {
    run_example()
}
