// scratch: strategy-gap calibration across (video_scatter, appearance_modes)
use stepal_cli::config::{ExperimentConfig, PoolSource};
use stepal_cli::experiment::compare_strategies;
use stepal_core::synthgen::benchmark_suite;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    // args: scatter,modes pairs e.g. 0.5,12 0.7,8
    for arg in &args {
        let (s, g) = arg.split_once(',').unwrap();
        let scatter: f64 = s.parse().unwrap();
        let modes: usize = g.parse().unwrap();
        let mut gen = benchmark_suite("default").unwrap();
        gen.video_scatter = scatter;
        gen.appearance_modes = modes;
        let cfg = ExperimentConfig {
            pool: PoolSource::Generate { generate: gen },
            seeds: (0..10).collect(),
            output_dir: "/tmp/calib".into(),
            ..ExperimentConfig::default()
        };
        let strategies: Vec<String> = ["random", "entropy", "kmeans", "me-kmeans", "ewc", "stepal"]
            .iter().map(|s| s.to_string()).collect();
        let report = compare_strategies(&cfg, &strategies).unwrap();
        println!("=== scatter {scatter} modes {modes}");
        let acc = |name: &str, cycle: usize| -> (f64, f64) {
            let row = report.summary.iter()
                .find(|r| r.strategy == name && r.cycle == cycle && r.metric == "accuracy").unwrap();
            (row.mean, row.std)
        };
        for name in ["random", "entropy", "kmeans", "me-kmeans", "ewc", "stepal"] {
            let (m0, _) = acc(name, 0);
            let (m1, s1) = acc(name, 1);
            let (m4, _) = acc(name, 4);
            println!("  {:<12} r0 {:.4}  r1 {:.4}+/-{:.3}  r4 {:.4}", name, m0, m1, s1, m4);
        }
        let runs = &report.runs;
        let find = |name: &str| runs.iter().find(|r| r.strategy == name).unwrap();
        let r1acc = |run: &stepal_cli::experiment::StrategyRun, seed_idx: usize| {
            run.seed_runs[seed_idx].cycles.iter().find(|c| c.cycle == 1).unwrap().metrics.accuracy
        };
        let (random, stepal) = (find("random"), find("stepal"));
        let wins = (0..10).filter(|&i| r1acc(stepal, i) > r1acc(random, i)).count();
        let gap = (0..10).map(|i| r1acc(stepal, i) - r1acc(random, i)).sum::<f64>() / 10.0;
        println!("  stepal-random at r1: mean gap {gap:+.4}, wins {wins}/10");
    }
}
