//! Benchmark suites over the bundled US data.

use std::fmt::Write as _;
use std::time::Instant;

use crate::error::{OmpnError, Result};
use crate::exact::{binomial, solve_exact, ExactParams, Solution};
use crate::heuristics::{heuristic1, heuristic2, initial_solution, HeuristicParams};
use crate::instance::{builtin_us49, preset_with_defaults};

/// Best published objective per (scale, p, weights), used as the gap base.
const REFERENCE: &[(u32, usize, &str, f64)] = &[
    (1, 2, "median", 394.891),
    (1, 2, "center", 18.0278),
    (1, 2, "kcentrum", 270.7348),
    (1, 2, "centdian", 207.2298),
    (1, 5, "median", 222.6594),
    (1, 5, "center", 16.2491),
    (1, 5, "kcentrum", 160.1138),
    (1, 5, "centdian", 119.7391),
    (1, 10, "median", 141.8635),
    (1, 10, "center", 19.9944),
    (1, 10, "kcentrum", 125.0503),
    (1, 10, "centdian", 85.5946),
    (2, 2, "median", 395.1789),
    (2, 2, "center", 21.7935),
    (2, 2, "kcentrum", 274.2601),
    (2, 2, "centdian", 209.7885),
    (2, 5, "median", 223.3972),
    (2, 5, "center", 21.5931),
    (2, 5, "kcentrum", 166.7242),
    (2, 5, "centdian", 127.2981),
    (2, 10, "median", 151.5515),
    (2, 10, "center", 29.842),
    (2, 10, "kcentrum", 142.0924),
    (2, 10, "centdian", 108.2469),
    (3, 2, "median", 395.7311),
    (3, 2, "center", 24.1051),
    (3, 2, "kcentrum", 278.0228),
    (3, 2, "centdian", 210.6248),
    (3, 5, "median", 240.8416),
    (3, 5, "center", 26.5732),
    (3, 5, "kcentrum", 173.4423),
    (3, 5, "centdian", 138.3565),
    (3, 10, "median", 177.7685),
    (3, 10, "center", 38.5431),
    (3, 10, "kcentrum", 161.303),
    (3, 10, "centdian", 116.5976),
];

const WEIGHTS: [&str; 4] = ["median", "center", "kcentrum", "centdian"];

pub fn reference_value(scale: u32, p: usize, weights: &str) -> Option<f64> {
    REFERENCE
        .iter()
        .find(|r| r.0 == scale && r.1 == p && r.2 == weights)
        .map(|r| r.3)
}

/// `(value − reference) / reference`; negative beats the reference.
pub fn gap(value: f64, reference: f64) -> f64 {
    (value - reference) / reference
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// Scale 1, two facilities, every weight family.
    Us49Quick,
    /// Every scale, `p ∈ {2, 5, 10}`, every weight family.
    Us49Full,
}

impl Suite {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "us49-quick" => Ok(Suite::Us49Quick),
            "us49-full" => Ok(Suite::Us49Full),
            other => Err(OmpnError::validation(
                "suite",
                format!("`{other}` is not us49-quick or us49-full"),
            )),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Us49Quick => "us49-quick",
            Suite::Us49Full => "us49-full",
        }
    }

    pub fn cells(&self) -> Vec<(u32, usize, &'static str)> {
        let (scales, ps): (&[u32], &[usize]) = match self {
            Suite::Us49Quick => (&[1], &[2]),
            Suite::Us49Full => (&[1, 2, 3], &[2, 5, 10]),
        };
        let mut out = Vec::new();
        for &s in scales {
            for &p in ps {
                for w in WEIGHTS {
                    out.push((s, p, w));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub heuristic: HeuristicParams,
    pub exact: ExactParams,
    /// Exact solves run only when `C(n,p)` is at most this.
    pub exact_cap: f64,
    pub timings: bool,
}

fn timed(f: impl FnOnce() -> Result<Solution>) -> Result<(f64, f64)> {
    let t = Instant::now();
    let s = f()?;
    Ok((s.objective, t.elapsed().as_secs_f64()))
}

fn num(x: Option<f64>, digits: usize) -> String {
    x.map(|v| format!("{v:.digits$}")).unwrap_or_default()
}

/// CSV text, one row per cell. Without timings the output depends only on
/// the options and is byte-stable.
pub fn run_suite(suite: Suite, opts: &BenchOptions, mut progress: impl FnMut(&str)) -> Result<String> {
    let mut csv = String::from("suite,instance,scenario,p,lambda,reference,h0,h1,h2,exact,gap_h0,gap_h1,gap_h2,gap_exact");
    if opts.timings {
        csv.push_str(",t_h0,t_h1,t_h2,t_exact,finished_at");
    }
    csv.push('\n');
    for (scale, p, weights) in suite.cells() {
        let preset = preset_with_defaults(weights, None, None, 49)?;
        let inst = builtin_us49(scale, p, preset)?;
        let h0 = timed(|| initial_solution(&inst, &opts.heuristic))?;
        let h1 = timed(|| heuristic1(&inst, &opts.heuristic))?;
        let h2 = timed(|| heuristic2(&inst, &opts.heuristic))?;
        let exact = if binomial(inst.n(), p) <= opts.exact_cap {
            Some(timed(|| solve_exact(&inst, &opts.exact))?)
        } else {
            None
        };
        let reference = reference_value(scale, p, weights);
        let g = |v: Option<f64>| v.zip(reference).map(|(v, r)| gap(v, r));
        let values = [Some(h0.0), Some(h1.0), Some(h2.0), exact.map(|e| e.0)];
        let name = format!("us49_s{scale}_p{p}_{weights}");
        write!(csv, "{},{name},S{scale},{p},{}", suite.name(), preset.short_name()).unwrap();
        write!(csv, ",{}", num(reference, 4)).unwrap();
        for v in values {
            write!(csv, ",{}", num(v, 4)).unwrap();
        }
        for v in values {
            write!(csv, ",{}", num(g(v), 6)).unwrap();
        }
        if opts.timings {
            for t in [Some(h0.1), Some(h1.1), Some(h2.1), exact.map(|e| e.1)] {
                write!(csv, ",{}", num(t, 3)).unwrap();
            }
            let stamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
            write!(csv, ",{stamp}").unwrap();
        }
        csv.push('\n');
        progress(&name);
    }
    Ok(csv)
}
