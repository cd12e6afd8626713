//! Ordered median values, k-sums and subgradients for the four weight
//! families on a small distance vector.

use ompn::om::{evaluate_om, k_sum, make_lambda, om_subgradient, telescoping_weights, LambdaPreset};

fn main() -> ompn::Result<()> {
    let d = [4.0, 9.0, 1.0, 9.0, 6.0];
    println!("distances {d:?}");
    for preset in [
        LambdaPreset::Median,
        LambdaPreset::Center,
        LambdaPreset::Kcentrum { k: 2 },
        LambdaPreset::Centdian { alpha: 0.5 },
    ] {
        let lambda = make_lambda(preset, d.len())?;
        let value = evaluate_om(&lambda, &d)?;
        let deltas = telescoping_weights(&lambda).deltas;
        let mut via_sums = 0.0;
        for (k, delta) in deltas.iter().enumerate() {
            via_sums += delta * k_sum(&d, k + 1)?;
        }
        let g = om_subgradient(&lambda, &d)?;
        println!(
            "{:>9}  weights {:?}  value {value:>5.2}  via k-sums {via_sums:>5.2}  subgradient {g:?}",
            preset.name(),
            lambda.weights()
        );
    }
    Ok(())
}
