//! Solve, serialize the run report, then re-check it from scratch and show
//! what a tampered report looks like.

use ompn::cli::report::{evaluate_report, ParamsEcho, RunReport};
use ompn::heuristics::{heuristic1, HeuristicParams};
use ompn::instance::builtin_us49;
use ompn::om::LambdaPreset;

fn main() -> ompn::Result<()> {
    let inst = builtin_us49(2, 3, LambdaPreset::Median)?;
    let params = HeuristicParams::default();
    let sol = heuristic1(&inst, &params)?;
    let echo = ParamsEcho {
        starts: params.alloc.starts,
        it_max: Some(params.it_max),
        theta: Some(params.theta),
        randomized: Some(params.randomized),
        subset_cap: None,
    };
    let report = RunReport::new(&inst, "h1", params.alloc.seed, echo, &sol, false);
    println!("{}", report.summary());

    let reread = RunReport::from_json(&report.to_json())?;
    let mut tampered = reread.clone();
    tampered.placements[0][1] += 5.0;
    for (label, r) in [("as written", &reread), ("moved facility", &tampered)] {
        let failed: Vec<String> = evaluate_report(&inst, r)
            .into_iter()
            .filter(|c| !c.pass)
            .map(|c| format!("{} ({})", c.name, c.detail))
            .collect();
        println!(
            "{label}: {}",
            if failed.is_empty() {
                "all checks pass".to_string()
            } else {
                failed.join("; ")
            }
        );
    }
    Ok(())
}
