use mca_core::cueing::{McaConfig, McaMode, MotionCueing};
use mca_core::freq_split;
use mca_core::model::{step_dynamics, PlatformState};
use mca_core::scenario;

fn main() {
    let cfg = McaConfig { mode: McaMode::FrequencySplitting, ..Default::default() };
    let scen = scenario::make_step(0.01);
    let refs = freq_split::build_references(&scen.ax, &scen.ay, &cfg.split_config(1.0)).unwrap();
    let mut mca = MotionCueing::new(cfg).unwrap();
    let mut x = PlatformState::default();
    for i in 0..400 {
        let la = freq_split::lookahead(&refs, i, cfg.horizon);
        let trace = i == 205 || i == 220;
        if trace {
            std::env::set_var("MCA_TRACE", "1");
            eprintln!("=== tick {i} t={:.2}", i as f64 * 0.01);
        } else {
            std::env::remove_var("MCA_TRACE");
        }
        let (cmd, sol) = mca.tick(&x, &la).unwrap();
        if sol.iterations > 50 && !trace {
            eprintln!("tick {i}: iters {} status {:?}", sol.iterations, sol.status);
        }
        x = step_dynamics(&x, &cmd, cfg.dt).unwrap();
        if trace { eprintln!("  -> iters {} status {:?}", sol.iterations, sol.status); }
    }
}
