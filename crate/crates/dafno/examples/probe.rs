use dafno::data::{gen_poisson_dataset, split};
use dafno::geometry::BoxGrid;
use dafno::operator::ModelConfig;
use dafno::tape::ActKind;
use dafno::training::*;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let variant = args.get(1).map(|s| s.as_str()).unwrap_or("edafno");
    let epochs: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(200);
    let width: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(8);
    let layers: usize = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(3);
    let lr: f64 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(1e-2);
    let modes: usize = args.get(6).and_then(|s| s.parse().ok()).unwrap_or(6);

    let t0 = Instant::now();
    let grid = BoxGrid::square(1.0, 32);
    let ds = gen_poisson_dataset(200, grid, 7, 20.0).unwrap();
    println!("dataset gen: {:.1}s", t0.elapsed().as_secs_f64());
    let (tr, va, te) = split(&ds, (0.7, 0.15, 0.15), 0).unwrap();

    let spec = VariantSpec::parse(variant).unwrap();
    let mcfg = ModelConfig {
        variant: spec.variant(), layers, modes: (modes, modes), width,
        activation: ActKind::Gelu,
        in_channels: 1 + spec.extra_channels(), out_channels: 1, proj_hidden: 2 * width,
    };
    let cfg = TrainConfig { lr, decay: 0.5, weight_decay: 1e-5, epochs, batch: 16,
        seeds: vec![0], beta: 20.0, optimizer: None, allow_long: false };
    let t1 = Instant::now();
    let out = train(&mcfg, &cfg, spec, &tr, &va, &te, None, 0).unwrap();
    let secs = t1.elapsed().as_secs_f64();
    let curve: Vec<String> = out.report.epochs.iter().step_by(epochs/8)
        .map(|e| format!("{:.2e}/{:.2e}", e.train_rel_l2, e.val_rel_l2)).collect();
    println!("{variant} w{width} L{layers} m{modes} lr{lr:.0e}: {secs:.0}s test {:.4} best-val {:.4} train/val {}",
        out.report.test_rel_l2, out.report.best_val_rel_l2, curve.join(" "));
}
