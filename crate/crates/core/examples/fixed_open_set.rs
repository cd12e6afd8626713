//! Costing one open set: multistart location/allocation, the exhaustive
//! assignment search and the assignment fixings that shrink it.

use ompn::alloc::{alloc_exact_enum, alloc_multistart, fix_assignments, AllocParams};
use ompn::exact::{lower_bound_j, upper_bound_j};
use ompn::geometry::BoundsMatrix;
use ompn::instance::{generate_random, ScenarioSpec};
use ompn::om::LambdaPreset;

fn main() -> ompn::Result<()> {
    let inst = generate_random(8, 2, ScenarioSpec::new(2)?, 3, LambdaPreset::Centdian { alpha: 0.5 }, 11)?;
    let open = [1, 4, 6];
    let params = AllocParams::default();
    let bounds = BoundsMatrix::compute(&inst);

    let lo = lower_bound_j(&open, &inst, &bounds);
    let hi = upper_bound_j(&open, &inst, &bounds);
    let ms = alloc_multistart(&open, &inst, &params)?;
    let ex = alloc_exact_enum(&open, &inst, &params)?;
    let fixing = fix_assignments(&open, &inst, &bounds)?;

    println!("open set {open:?}");
    println!("  bounds          [{lo:.4}, {hi:.4}]");
    println!("  multistart      {:.4} ({} starts)", ms.total, ms.starts_used);
    println!("  all assignments {:.4}", ex.total);
    println!("  fixed fraction  {:.0}%", 100.0 * fixing.fixed_fraction());
    for (slot, loc) in ex.placement.locations.iter().enumerate() {
        println!("  facility {} at ({:.3}, {:.3})", open[slot], loc[0], loc[1]);
    }
    println!("  assignment {:?}", ex.assignment.assign);
    Ok(())
}
