//! Writes every formulation of a small instance, plain and strengthened,
//! and checks the native optimum against each model.

use ompn::exact::{solve_exact, ExactParams};
use ompn::geometry::NormSpec;
use ompn::instance::{generate_random, ScenarioSpec};
use ompn::model::text::{write_model, ModelFormat};
use ompn::model::{export_model, lift_solution, ExportOptions, Formulation, Strengthening};
use ompn::om::LambdaPreset;

fn main() -> ompn::Result<()> {
    let inst = generate_random(5, 2, ScenarioSpec::new(1)?, 2, LambdaPreset::Kcentrum { k: 2 }, 5)?;
    let boxy = inst.clone().with_norms(NormSpec::LINF, NormSpec::LINF);
    let dir = std::env::temp_dir().join("ompn-models");
    std::fs::create_dir_all(&dir).map_err(|e| ompn::OmpnError::Io {
        path: dir.display().to_string(),
        detail: e.to_string(),
    })?;

    for f in Formulation::ALL {
        let inst = if f == Formulation::MilpBlock { &boxy } else { &inst };
        let sol = solve_exact(inst, &ExactParams::default())?;
        let format = if f == Formulation::MilpBlock {
            ModelFormat::LpText
        } else {
            ModelFormat::ConicText
        };
        for strengthen in [None, Some(Strengthening::new(sol.objective * (1.0 + 1e-9)))] {
            let tag = if strengthen.is_some() { "strong" } else { "plain" };
            let options = ExportOptions {
                strengthen,
                ..Default::default()
            };
            let model = export_model(inst, f, &options)?;
            let point = lift_solution(&model, inst, &options, &sol.alloc.assignment.assign, &sol.alloc.placement)?;
            let check = model.check_point(&point, 1e-9);
            let path = dir.join(format!("{}-{tag}{}", f.id(), format.extension()));
            write_model(&model, &path, format)?;
            let c = model.counts();
            println!(
                "{:>10} {tag:>6}: {:>4} vars ({:>3} binary) {:>4} rows {:>3} cones, native optimum {} at objective {:.4} (native {:.4})",
                f.id(),
                c.variables,
                c.binaries,
                c.linear,
                c.soc,
                if check.feasible() { "feasible" } else { "INFEASIBLE" },
                check.objective,
                sol.objective
            );
        }
    }
    println!("models written to {}", dir.display());
    Ok(())
}
