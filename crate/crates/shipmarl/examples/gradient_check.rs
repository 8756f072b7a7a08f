//! Finite-difference verification of the analytic gradients on both
//! network architectures used for training (actor and critic, for each
//! scenario), including input gradients and the relaxed Gumbel path.
//!
//!     cargo run --release --example gradient_check

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use shipmarl::channels::gumbel;
use shipmarl::neural::{check_gradients, HeadSegment, MlpParams};

fn random_case(
    rng: &mut ChaCha12Rng,
    input: usize,
    hidden: &[usize],
    heads: Vec<HeadSegment>,
) -> (MlpParams, Vec<f64>) {
    // Keep hidden pre-activations away from the ReLU kink so the central
    // differences stay meaningful at h = 1e-5.
    loop {
        let net = MlpParams::new(input, hidden, heads.clone(), rng).expect("shapes");
        let x: Vec<f64> = (0..input).map(|_| rng.random_range(-1.5..1.5)).collect();
        let report = check_gradients(&net, &x, &vec![0.0; net.output_slots()], None, 1.0, 1e-5);
        if report.min_hidden_preact > 1e-3 {
            return (net, x);
        }
    }
}

fn main() {
    let mut rng = ChaCha12Rng::seed_from_u64(2024);
    let cases: Vec<(&str, usize, Vec<usize>, Vec<HeadSegment>)> = vec![
        (
            "navigation actor (ship)",
            12,
            vec![64, 64, 64],
            vec![
                HeadSegment::bounded(0.0, 150.0, 1),
                HeadSegment::bounded(-0.6109, 0.6109, 1),
            ],
        ),
        (
            "navigation actor (speaker, gumbel bits)",
            3,
            vec![64, 64, 64],
            vec![HeadSegment::gumbel_bits(2)],
        ),
        (
            "navigation critic",
            19,
            vec![64, 64],
            vec![HeadSegment::identity(1)],
        ),
        (
            "avoidance actor",
            10,
            vec![256, 256],
            vec![
                HeadSegment::bounded(0.0, 150.0, 1),
                HeadSegment::bounded(-0.6109, 0.6109, 1),
                HeadSegment::bounded(-1.0, 1.0, 3),
            ],
        ),
        (
            "avoidance critic",
            30,
            vec![128, 128],
            vec![HeadSegment::identity(1)],
        ),
    ];

    let mut worst: f64 = 0.0;
    for (name, input, hidden, heads) in cases {
        let (net, x) = random_case(&mut rng, input, &hidden, heads);
        let weights: Vec<f64> = (0..net.output_slots())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let noise: Vec<f64> = (0..net.gumbel_noise_width())
            .map(|_| gumbel::sample(&mut rng))
            .collect();
        let noise_opt = (!noise.is_empty()).then_some(noise.as_slice());
        let report = check_gradients(&net, &x, &weights, noise_opt, 1.0, 1e-5);
        println!(
            "{name:42} {:7} params checked, max rel err params {:.2e}, inputs {:.2e}",
            report.params_checked, report.max_param_rel_err, report.max_input_rel_err
        );
        worst = worst.max(report.max_param_rel_err).max(report.max_input_rel_err);
    }
    println!("\nworst relative error: {worst:.3e} (tolerance 1e-5)");
    assert!(worst < 1e-5);
}
