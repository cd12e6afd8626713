//! Seeded instance generation, file round trip and content hashing.

use ompn::instance::{generate_random, load_instance, save_instance, ScenarioSpec};
use ompn::om::LambdaPreset;

fn main() -> ompn::Result<()> {
    let dir = std::env::temp_dir();
    for scenario in 1..=3 {
        let spec = ScenarioSpec::new(scenario)?;
        let inst = generate_random(8, 2, spec, 3, LambdaPreset::Kcentrum { k: 4 }, 42)?;
        let path = dir.join(format!("ompn-scenario{scenario}.ompn.json"));
        save_instance(&inst, &path)?;
        let back = load_instance(&path)?;
        assert_eq!(back, inst);
        let (lo, hi) = spec.radius_range();
        println!(
            "scenario {scenario}: radii in [{lo}, {hi}], hash {}..., file {}",
            &inst.hash()[..16],
            path.display()
        );
    }
    let again = generate_random(8, 2, ScenarioSpec::new(1)?, 3, LambdaPreset::Median, 42)?;
    let other = generate_random(8, 2, ScenarioSpec::new(1)?, 3, LambdaPreset::Median, 43)?;
    println!(
        "same seed, same points: {}",
        again.points() == generate_random(8, 2, ScenarioSpec::new(1)?, 3, LambdaPreset::Median, 42)?.points()
    );
    println!("next seed, same points: {}", again.points() == other.points());
    Ok(())
}
