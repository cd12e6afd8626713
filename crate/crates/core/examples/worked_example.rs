//! The bundled five-site example under every cost convention.

use ompn::exact::{solve_exact, ExactParams};
use ompn::instance::{example_3_5_with, SelfService, SetupConvention};

fn main() -> ompn::Result<()> {
    for setup in [SetupConvention::Zero, SetupConvention::Radius] {
        for mode in [SelfService::Travel, SelfService::Zero] {
            let inst = example_3_5_with(setup, mode);
            let sol = solve_exact(&inst, &ExactParams::default())?;
            println!(
                "set-up {setup:?}, self-service {}: objective {:.4} with sites {:?}",
                mode.as_str(),
                sol.objective,
                sol.open
            );
            for (slot, loc) in sol.alloc.placement.locations.iter().enumerate() {
                println!("    facility {} at ({:.4}, {:.4})", sol.open[slot], loc[0], loc[1]);
            }
        }
    }
    Ok(())
}
