use mca_core::cueing::{McaConfig, McaMode};
use mca_core::plant::{run_closed_loop, PlantKind};
use mca_core::scenario;

fn main() {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(150);
    let secs: f64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(8.0);
    let cfg = McaConfig { mode: McaMode::Benchmark, horizon: n, ..Default::default() };
    let mut scen = scenario::make_synthetic_slalom(0.01);
    let keep = (secs / 0.01) as usize + 1;
    scen.ax.truncate(keep);
    scen.ay.truncate(keep);
    let t0 = std::time::Instant::now();
    let log = run_closed_loop(&cfg, PlantKind::Ideal, &scen, 0.15).unwrap();
    let iters: usize = log.rows.iter().map(|r| r.iters).sum();
    println!(
        "N={n} ticks {} mean_iters {:.2} mean_ms {:.2} wall {:.1}s (per 5000 ticks: {:.0}s)",
        log.rows.len(),
        iters as f64 / log.rows.len() as f64,
        log.rows.iter().map(|r| r.solve_ms).sum::<f64>() / log.rows.len() as f64,
        t0.elapsed().as_secs_f64(),
        t0.elapsed().as_secs_f64() / log.rows.len() as f64 * 5000.0
    );
}
