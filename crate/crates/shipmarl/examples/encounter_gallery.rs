//! Samples collision-avoidance resets and shows the encounter mix, the
//! COLREGs give-way assignment and the projected meeting points.
//!
//!     cargo run --release --example encounter_gallery

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use shipmarl::scenarios::{classify_encounter, meeting_point, reset, WorldConfig};

fn main() {
    let cfg = WorldConfig::avoidance();
    let mut rng = ChaCha12Rng::seed_from_u64(11);

    println!("five sample encounters:");
    for i in 0..5 {
        let ws = reset(&cfg, &mut rng).expect("reset");
        let (encounter, give_way) = ws.encounter.expect("classified at reset");
        let meeting = ws.initial_meeting.expect("meeting point at reset");
        println!(
            "  #{i}: {:?}, give way {:?}, P = ({:6.1}, {:6.1}), R_a {:5.1} m, R_b {:5.1} m",
            encounter, give_way, meeting.point[0], meeting.point[1], meeting.r_a, meeting.r_b
        );
        // The stored classification must agree with an on-the-spot one.
        let again = classify_encounter(&ws.ships[0], &ws.ships[1]).expect("classify");
        assert_eq!(again.0, encounter);
        assert!(meeting_point(&ws.ships[0], &ws.ships[1]).is_some());
    }

    let n = 10_000;
    let mut counts = [0usize; 3];
    for _ in 0..n {
        let ws = reset(&cfg, &mut rng).expect("reset");
        counts[ws.encounter.unwrap().0.family()] += 1;
    }
    println!("\nencounter mix over {n} resets:");
    for (name, c) in ["head-on", "crossing", "overtaking"].iter().zip(counts) {
        println!("  {name:10} {:.3}", c as f64 / n as f64);
    }
}
