//! Calibration driver for the game defaults.
//!
//! Sweeps the attacker opening parameters over the four benchmark attack
//! budgets and prints seed-averaged final protection rates, used once to
//! pin the defaults shipped in `AttackOpening`. Run with:
//!
//! ```text
//! cargo run --release -p ssdf-arena --example calibrate [reserve] [depth] [margin]
//! ```

use ssdf_arena::game::{run_to_equilibrium, GameConfig};

fn protection(y: f64, seeds: u64, reserve: f64, depth: f64, margin: f64) -> f64 {
    let mut total = 0.0;
    for seed in 0..seeds {
        let mut config = GameConfig::new(50, 20.0, y);
        config.seed = seed;
        config.opening.reserve_fraction = reserve;
        config.opening.depth_xi = depth;
        config.opening.pipeline_margin_xi = margin;
        let outcome = run_to_equilibrium(config).expect("valid config");
        total += outcome.final_state.protected_fraction();
    }
    total / seeds as f64
}

fn main() {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("numeric argument"))
        .collect();
    let (reserves, depths, margins) = if args.len() == 3 {
        (vec![args[0]], vec![args[1]], vec![args[2]])
    } else {
        (
            vec![0.40, 0.44, 0.47, 0.50, 0.53],
            vec![1.5, 2.0, 3.0],
            vec![0.5],
        )
    };
    println!("reserve depth margin |    Y=8   Y=10   Y=13   Y=17");
    for &reserve in &reserves {
        for &depth in &depths {
            for &margin in &margins {
                let rates: Vec<f64> = [8.0, 10.0, 13.0, 17.0]
                    .iter()
                    .map(|&y| 100.0 * protection(y, 100, reserve, depth, margin))
                    .collect();
                println!(
                    "{reserve:7.2} {depth:5.1} {margin:6.2} | {:6.1} {:6.1} {:6.1} {:6.1}",
                    rates[0], rates[1], rates[2], rates[3]
                );
            }
        }
    }
}
