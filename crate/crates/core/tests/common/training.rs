use neurosym::grpo::{default_toy_tasks, objective, objective_gradient, Batch, PolicyParams, ToyTask, TrainConfig};
use neurosym::scoring::GroundTruth;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Tasks whose fragments never form a tagged block, so every reward is 0.
pub fn untagged_tasks() -> Vec<ToyTask> {
    let frag = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    (0..3)
        .map(|k| {
            ToyTask::new(
                format!("untagged-{k}"),
                GroundTruth::ExactNumber(num_bigint::BigInt::from(k).into()),
                vec![frag(&["Answer: ", "So "]), frag(&["Length[{1}]", "2", "x"]), frag(&[".", "!"])],
            )
            .unwrap()
        })
        .collect()
}

fn random_params(shape: &PolicyParams, rng: &mut ChaCha8Rng, scale: f64) -> PolicyParams {
    let flat: Vec<f64> = (0..shape.len()).map(|_| rng.random_range(-scale..scale)).collect();
    PolicyParams::from_flat(shape, &flat)
}

/// Relative error `|g - g_fd| / max(|g|, |g_fd|)` at each of `points` random
/// parameter settings, with central differences of step `1e-5`. Old-policy
/// logits are perturbed so some ratios leave the clip band, and every other
/// point carries a KL penalty.
pub fn gradient_check(points: usize, seed: u64) -> Vec<f64> {
    let tasks = default_toy_tasks();
    let shape = PolicyParams::uniform(&tasks);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-5;
    (0..points)
        .map(|point| {
            let config =
                TrainConfig { kl_coefficient: if point % 2 == 0 { 0.0 } else { 0.3 }, ..TrainConfig::default() };
            let params = random_params(&shape, &mut rng, 1.5);
            let shift = random_params(&shape, &mut rng, 0.15);
            let old = PolicyParams::from_flat(
                &shape,
                &params.flatten().iter().zip(shift.flatten()).map(|(a, b)| a + b).collect::<Vec<_>>(),
            );
            let reference = random_params(&shape, &mut rng, 0.5);
            let task = point % tasks.len();
            let actions: Vec<Vec<usize>> =
                (0..6).map(|_| tasks[task].positions.iter().map(|c| rng.random_range(0..c.len())).collect()).collect();
            let advantages: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
            let batch = Batch { task, actions, advantages };

            let analytic = objective_gradient(&params, &batch, &old, &reference, &config).flatten();
            let base = params.flatten();
            let numeric: Vec<f64> = (0..base.len())
                .map(|i| {
                    let at = |delta: f64| {
                        let mut v = base.clone();
                        v[i] += delta;
                        objective(&PolicyParams::from_flat(&params, &v), &batch, &old, &reference, &config)
                    };
                    (at(h) - at(-h)) / (2.0 * h)
                })
                .collect();
            let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, n)| a - n).collect();
            norm(&diff) / norm(&analytic).max(norm(&numeric)).max(1e-12)
        })
        .collect()
}
