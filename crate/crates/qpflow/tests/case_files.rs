//! The shipped network cases must parse, solve from a flat start, and
//! support high-penetration scenario sampling without excessive redraws.

use qpflow::powerflow::{
    build_ybus, sample_scenarios_with_stats, solve_nr, PowerCase, ScenarioConfig, SolveOptions,
};
use std::path::Path;

fn load(name: &str) -> PowerCase {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../cases")
        .join(name);
    PowerCase::from_path(&path).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn six_bus_counts_and_convergence() {
    let case = load("ieee6.json");
    assert_eq!(case.n_bus(), 6);
    assert_eq!(case.n_branch(), 11);
    let sol = solve_nr(&case, &build_ybus(&case), &SolveOptions::default()).unwrap();
    assert!(sol.iterations <= 10, "took {} iterations", sol.iterations);
    assert!(sol.max_mismatch <= 1e-8);
}

#[test]
fn thirty_bus_counts_and_convergence() {
    let case = load("ieee30.json");
    assert_eq!(case.n_bus(), 30);
    assert_eq!(case.n_branch(), 41);
    let sol = solve_nr(&case, &build_ybus(&case), &SolveOptions::default()).unwrap();
    assert!(sol.iterations <= 10, "took {} iterations", sol.iterations);
}

#[test]
fn synthetic_118_bus_converges() {
    let case = load("case118.json");
    assert_eq!(case.n_bus(), 118);
    let sol = solve_nr(&case, &build_ybus(&case), &SolveOptions::default()).unwrap();
    assert!(sol.iterations <= 10, "took {} iterations", sol.iterations);
}

#[test]
fn losses_are_nonnegative_on_all_cases() {
    for name in ["ieee6.json", "ieee30.json", "case118.json"] {
        let case = load(name);
        let sol = solve_nr(&case, &build_ybus(&case), &SolveOptions::default()).unwrap();
        let loss: f64 = sol.flows.iter().map(|f| f.p_from + f.p_to).sum();
        assert!(loss >= 0.0, "{name}: negative loss {loss}");
        // Slack balances the books: total injection equals total loss.
        let net: f64 = sol.p_inj.iter().sum();
        assert!((net - loss).abs() < 1e-6, "{name}: net {net} vs loss {loss}");
    }
}

#[test]
fn half_penetration_sampling_stays_within_redraw_budget() {
    for name in ["ieee6.json", "ieee30.json", "case118.json"] {
        let case = load(name);
        let cfg = ScenarioConfig {
            penetration: 0.5,
            count: 60,
            seed: 42,
            ..ScenarioConfig::default()
        };
        let (ds, stats) =
            sample_scenarios_with_stats(&case, &cfg).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(ds.len(), 60);
        assert!(stats.redraws <= 6, "{name}: {} redraws", stats.redraws);
    }
}
