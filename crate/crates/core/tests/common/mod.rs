//! Helpers shared by integration test targets.

use prisk::network::{loss_and_grads, Arch, EgoChannels, ModelConfig, ModelParams, WindowSample};
use prisk::scenario::Level;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STEP: f64 = 1e-5;
pub const TOL: f64 = 1e-4;
/// Gradients smaller than this are compared absolutely rather than relatively.
pub const FLOOR: f64 = 1e-6;

pub fn sample(rng: &mut ChaCha8Rng, cfg: &ModelConfig) -> WindowSample {
    let mut rows = |w: usize| -> Vec<Vec<f64>> {
        (0..cfg.window)
            .map(|_| (0..w).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect()
    };
    let ego = rows(cfg.ego_width());
    let env = rows(6);
    WindowSample {
        ego,
        env,
        label: Level::saturating(rng.gen_range(0..5)),
    }
}

/// Worst relative error between analytic and central-difference gradients
/// over every parameter of a small random model (H = 4, d_a = 4, T = 5).
pub fn max_rel_error(arch: Arch, swap_query: bool, seed: u64) -> (f64, &'static str) {
    let cfg = ModelConfig {
        arch,
        window: 5,
        hidden: 4,
        attn: 4,
        ego_channels: EgoChannels::Reduced,
        swap_query,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ModelParams::init(&cfg, seed);
    // Spread the weights a little beyond the init range so every gate is exercised.
    for (_, t) in params.named_tensors_mut() {
        for v in t.data_mut() {
            *v += rng.gen_range(-0.3..0.3);
        }
    }
    let batch: Vec<WindowSample> = (0..3).map(|_| sample(&mut rng, &cfg)).collect();
    let refs: Vec<&WindowSample> = batch.iter().collect();
    let weights = [1.0, 0.7, 1.3, 0.9, 1.1];
    let (_, grads) = loss_and_grads(&params, &cfg, &refs, &weights).unwrap();

    let mut worst = (0.0, "");
    let names: Vec<&'static str> = params.named_tensors().iter().map(|(n, _)| *n).collect();
    for (ti, name) in names.iter().enumerate() {
        let len = params.named_tensors()[ti].1.len();
        for i in 0..len {
            let orig = params.named_tensors()[ti].1.data()[i];
            let mut at = |v: f64| {
                params.named_tensors_mut()[ti].1.data_mut()[i] = v;
                loss_and_grads(&params, &cfg, &refs, &weights).unwrap().0
            };
            let numeric = (at(orig + STEP) - at(orig - STEP)) / (2.0 * STEP);
            at(orig);
            let analytic = grads.named_tensors()[ti].1.data()[i];
            let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FLOOR);
            if err > worst.0 {
                worst = (err, name);
            }
        }
    }
    worst
}
