//! With every radius zero the problem is a discrete ordered median problem
//! on the center distances; both solvers agree.

use ompn::exact::{solve_domp_matrix, solve_exact, DompMode, DompProblem, ExactParams};
use ompn::instance::{builtin_us49, SelfService};
use ompn::om::LambdaPreset;

fn main() -> ompn::Result<()> {
    for preset in [LambdaPreset::Median, LambdaPreset::Center, LambdaPreset::Kcentrum { k: 24 }] {
        let inst = builtin_us49(1, 3, preset)?.degenerate();
        let n = inst.n();
        let mut cost = inst.center_distances();
        if inst.self_service() == SelfService::Zero {
            for j in 0..n {
                cost[j * n + j] = 0.0;
            }
        }
        let problem = DompProblem {
            n,
            cost: &cost,
            lambda: inst.lambda(),
            p: inst.p(),
            setup: inst.setup_costs(),
            forbidden: &[],
        };
        let (open, value) = solve_domp_matrix(&problem, DompMode::ExactEnum, 1e7)?;
        let (swap_open, swap_value) = solve_domp_matrix(&problem, DompMode::SwapHeuristic, 1e7)?;
        let full = solve_exact(&inst, &ExactParams::default())?;
        let labels: Vec<String> = open.iter().map(|&j| inst.label(j)).collect();
        println!(
            "{:>9}: discrete {value:.4} {labels:?}, swap {swap_value:.4} {swap_open:?}, continuous solver {:.4}",
            preset.name(),
            full.objective
        );
    }
    Ok(())
}
