//! Generates a few instances from each synthetic task family and prints
//! them as JSON lines, the same format the CLI's gen-tasks subcommand and
//! the harness run directories use.
//!
//!     cargo run --example gen_tasks

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rftlab::tasks::{gen_arithmetic, gen_classification, gen_multichoice, GeneratorConfig};

fn main() {
    let cfg = GeneratorConfig { n_classes: 4, ..GeneratorConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(0);

    println!("# classification (containment verifier)");
    for t in gen_classification(&cfg, 3, 0.0, &mut rng) {
        println!("{}", serde_json::to_string(&t).unwrap());
    }

    println!("# arithmetic (exact verifier)");
    let arith = gen_arithmetic(&cfg, 0..=9, 3, &mut rng);
    for t in &arith {
        println!("{}", serde_json::to_string(t).unwrap());
    }

    println!("# multichoice (choice-letter verifier, wraps base instances)");
    for t in gen_multichoice(&arith, 4, &mut rng) {
        println!("{}", serde_json::to_string(&t).unwrap());
    }
}
