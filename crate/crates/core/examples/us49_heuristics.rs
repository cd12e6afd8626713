//! Runs the start heuristic, both local searches and (for p = 2) the exact
//! enumerator on the US-49 data.
//!
//! `cargo run --release --example us49_heuristics -- [scale] [p] [lambda]`

use std::time::Instant;

use ompn::exact::{solve_exact, ExactParams};
use ompn::heuristics::{heuristic1, heuristic2, initial_solution, HeuristicParams};
use ompn::instance::{builtin_us49, preset_with_defaults};

fn main() -> ompn::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let scale: u32 = args.first().and_then(|s| s.parse().ok()).unwrap_or(1);
    let p: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let name = args.get(2).map(String::as_str).unwrap_or("center");
    let inst = builtin_us49(scale, p, preset_with_defaults(name, None, None, 49)?)?;
    let params = HeuristicParams::default();

    let report = |label: &str, open: &[usize], value: f64, secs: f64| {
        let labels: Vec<String> = open.iter().map(|&j| inst.label(j)).collect();
        println!("{label:>5}  {value:>10.4}  {secs:>7.2}s  {}", labels.join(" "));
    };

    let t = Instant::now();
    let h0 = initial_solution(&inst, &params)?;
    report("H0", &h0.open, h0.objective, t.elapsed().as_secs_f64());
    let t = Instant::now();
    let h1 = heuristic1(&inst, &params)?;
    report("H1", &h1.open, h1.objective, t.elapsed().as_secs_f64());
    let t = Instant::now();
    let h2 = heuristic2(&inst, &params)?;
    report("H2", &h2.open, h2.objective, t.elapsed().as_secs_f64());
    if p == 2 {
        let t = Instant::now();
        let ex = solve_exact(&inst, &ExactParams::default())?;
        report("exact", &ex.open, ex.objective, t.elapsed().as_secs_f64());
        println!(
            "       {} open sets costed, {} pruned",
            ex.stats.subsets_evaluated, ex.stats.subsets_pruned
        );
    }
    Ok(())
}
