use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::momdp::Momdp;

/// Four-state chain with two actions and two objectives, `gamma = 0.8`, uniform start.
///
/// Action 0 moves left deterministically. Action 1 moves right with
/// probability 0.9 and left otherwise (state 3 stays put on success).
/// Objective 1 pays 1 for action 0 in state 3; objective 2 pays 2 and 1.6 for
/// action 0 in states 1 and 2 and 1 for action 1 in state 3.
pub fn toy_momdp() -> Momdp {
    #[rustfmt::skip]
    let kernel = vec![
        // action 0
        1.0, 0.0, 0.0, 0.0,
        1.0, 0.0, 0.0, 0.0,
        0.0, 1.0, 0.0, 0.0,
        0.0, 0.0, 1.0, 0.0,
        // action 1
        0.1, 0.9, 0.0, 0.0,
        0.1, 0.0, 0.9, 0.0,
        0.0, 0.1, 0.0, 0.9,
        0.0, 0.0, 0.1, 0.9,
    ];
    #[rustfmt::skip]
    let rewards = vec![
        // (s, a=0)   (s, a=1)
        0.0, 0.0,     0.0, 0.0,
        0.0, 2.0,     0.0, 0.0,
        0.0, 1.6,     0.0, 0.0,
        1.0, 0.0,     0.0, 1.0,
    ];
    Momdp::new(4, 2, 2, 0.8, vec![0.25; 4], kernel, rewards).expect("toy environment is valid")
}

/// Random environment with Dirichlet(1) transition rows and start
/// distribution and rewards uniform on `[0, 1)`. Deterministic in `seed`.
pub fn random_momdp(
    n_states: usize,
    n_actions: usize,
    n_objectives: usize,
    gamma: f64,
    seed: u64,
) -> Result<Momdp> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let simplex = |n: usize, rng: &mut ChaCha8Rng| -> Vec<f64> {
        let w: Vec<f64> = (0..n)
            .map(|_| {
                let x: f64 = Exp1.sample(rng);
                x.max(f64::MIN_POSITIVE)
            })
            .collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    };
    let p0 = simplex(n_states, &mut rng);
    let kernel: Vec<f64> = (0..n_actions * n_states)
        .flat_map(|_| simplex(n_states, &mut rng))
        .collect();
    let rewards: Vec<f64> = (0..n_states * n_actions * n_objectives)
        .map(|_| rng.random::<f64>())
        .collect();
    Momdp::new(n_states, n_actions, n_objectives, gamma, p0, kernel, rewards)
}

/// Resolves `builtin:<name>` environments. Only `builtin:toy` exists.
pub fn builtin(name: &str) -> Result<Momdp> {
    match name.strip_prefix("builtin:").unwrap_or(name) {
        "toy" => Ok(toy_momdp()),
        other => Err(Error::InvalidParameter(format!("unknown builtin environment `{other}`"))),
    }
}

/// `builtin:<name>` or a path to an environment JSON file.
pub fn load_env(spec: &str) -> Result<Momdp> {
    if spec.starts_with("builtin:") {
        builtin(spec)
    } else {
        Momdp::load_json(spec)
    }
}
