//! Monte-Carlo sanity checks of the channel models: BSC flip rates,
//! AWGN noise moments, power normalization and the SNR conversion.
//!
//!     cargo run --release --example channel_statistics

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use shipmarl::channels::{
    binarize, normalize_power, sigma2_to_snr_db, snr_db_to_sigma2, transmit, ChannelConfig,
    Message,
};

fn main() {
    let mut rng = ChaCha12Rng::seed_from_u64(7);
    let n = 100_000usize;

    println!("BSC empirical flip rates over {n} bits:");
    for p_e in [0.0, 0.05, 0.1, 0.3] {
        let cfg = ChannelConfig::bsc(p_e);
        let block = Message(vec![1.0; 1000]);
        let mut flips = 0usize;
        for _ in 0..n / 1000 {
            let out = transmit(&block, &cfg, &mut rng).expect("transmit");
            flips += out.0.iter().filter(|&&b| b == 0.0).count();
        }
        println!("  p_e = {p_e:4.2}  ->  {:.4}", flips as f64 / n as f64);
    }

    println!("\nAWGN noise moments over {n} samples:");
    for sigma2 in [0.01, 1.0 / 9.0, 1.0] {
        let cfg = ChannelConfig {
            kind: shipmarl::channels::ChannelKind::Awgn { sigma2 },
            normalize_power: false,
        };
        let block = Message(vec![0.0; 1000]);
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for _ in 0..n / 1000 {
            for v in transmit(&block, &cfg, &mut rng).expect("transmit").0 {
                sum += v;
                sumsq += v * v;
            }
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        println!(
            "  sigma2 = {sigma2:6.4} ({:5.2} dB)  mean {mean:+.4}  var {var:.4}",
            sigma2_to_snr_db(sigma2)
        );
    }

    println!("\npower normalization:");
    for raw in [vec![3.0, 4.0], vec![0.2, -0.1], vec![1.0, 1.0, 1.0]] {
        let m = normalize_power(&Message(raw.clone()));
        println!("  {raw:?} -> {:?} (mean power {:.12})", m.0, m.mean_power());
    }

    println!("\nSNR <-> sigma^2 round trip:");
    for db in [0.0, 5.8, 9.54, 20.0] {
        let s2 = snr_db_to_sigma2(db);
        println!("  {db:5.2} dB -> sigma2 {s2:.6} -> {:.2} dB", sigma2_to_snr_db(s2));
    }

    println!("\nGumbel-Softmax binarization (equal logits, 10^4 draws):");
    let mut ones = 0;
    for _ in 0..10_000 {
        let s = binarize(&[0.0, 0.0], 1.0, true, &mut rng).expect("binarize");
        ones += (s.message.0[0] == 1.0) as usize;
    }
    println!("  bit = 1 frequency: {:.3}", ones as f64 / 10_000.0);
}
