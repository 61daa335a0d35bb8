use mca_core::cueing::{McaConfig, McaMode};
use mca_core::eval;
use mca_core::plant::PlantKind;
use mca_core::scenario;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("step");
    let k: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let n: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(40);
    let scen = match which {
        "step" => scenario::make_step(0.01),
        "multisine" => scenario::make_multisine(0.01),
        _ => scenario::make_synthetic_slalom(0.01),
    };
    for mode in [McaMode::FrequencySplitting, McaMode::Benchmark] {
        let cfg = McaConfig { mode, horizon: n, ..Default::default() };
        let t0 = std::time::Instant::now();
        let s = eval::run_and_summarize(&cfg, PlantKind::Ideal, &scen, k).unwrap();
        println!(
            "{which} k={k} N={n} {mode}: rmse=({:.4},{:.4}) tot={:.4} slack={:.3} viol={} mean_ms={:.2} wall={:.1}s err={:?}",
            s.rmse_long, s.rmse_lat, s.rmse_total, s.total_slack, s.violation_count,
            s.mean_solve_ms, t0.elapsed().as_secs_f64(), s.error
        );
    }
}
