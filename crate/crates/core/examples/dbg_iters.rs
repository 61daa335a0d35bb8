use mca_core::cueing::{McaConfig, McaMode};
use mca_core::plant::{run_closed_loop, PlantKind};
use mca_core::scenario;

fn main() {
    let cfg = McaConfig { mode: McaMode::FrequencySplitting, ..Default::default() };
    let mut scen = scenario::make_step(0.01);
    scen.ax.truncate(601);
    scen.ay.truncate(601);
    let log = run_closed_loop(&cfg, PlantKind::Ideal, &scen, 1.0).unwrap();
    let total: usize = log.rows.iter().map(|r| r.iters).sum();
    let max = log.rows.iter().map(|r| r.iters).max().unwrap();
    let ms: f64 = log.rows.iter().map(|r| r.solve_ms).sum::<f64>() / log.rows.len() as f64;
    println!("ticks {} mean_iters {:.2} max_iters {} mean_ms {:.2}", log.rows.len(), total as f64 / log.rows.len() as f64, max, ms);
    let mut hist = [0usize; 10];
    for r in &log.rows { hist[(r.iters).min(9)] += 1; }
    println!("iter histogram (1..9+): {:?}", &hist[1..]);
}
