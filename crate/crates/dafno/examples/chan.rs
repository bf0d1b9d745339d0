use dafno::data::{gen_poisson_dataset, split, Dataset};
use dafno::geometry::BoxGrid;
use dafno::operator::ModelConfig;
use dafno::tape::ActKind;
use dafno::tensor::concat_channels;
use dafno::training::*;
use std::time::Instant;

fn with_chi_channel(ds: &Dataset) -> Dataset {
    let mut out = ds.clone();
    for i in 0..ds.len() {
        out.g[i] = concat_channels(&[&ds.g[i], &ds.chi_smooth[i].as_channel()]).unwrap();
    }
    out
}

fn main() {
    let grid = BoxGrid::square(1.0, 32);
    let ds = gen_poisson_dataset(200, grid, 7, 10.0).unwrap();
    let (tr, va, te) = split(&ds, (0.7, 0.15, 0.15), 0).unwrap();
    let (tr2, va2, te2) = (with_chi_channel(&tr), with_chi_channel(&va), with_chi_channel(&te));
    let spec = VariantSpec::Edafno;
    let width: usize = std::env::var("W").ok().and_then(|v| v.parse().ok()).unwrap_or(8);
    let modes: usize = std::env::var("M").ok().and_then(|v| v.parse().ok()).unwrap_or(6);
    let epochs: usize = std::env::var("EP").ok().and_then(|v| v.parse().ok()).unwrap_or(120);
    let mcfg = ModelConfig { variant: spec.variant(), layers: 3, modes: (modes, modes), width,
        activation: ActKind::Gelu, in_channels: 2, out_channels: 1, proj_hidden: 2 * width };
    let cfg = TrainConfig { lr: 1e-2, decay: 0.5, weight_decay: 1e-3, epochs, batch: 4,
        seeds: vec![0], beta: 10.0, optimizer: None, allow_long: false };
    let t = Instant::now();
    let out = train(&mcfg, &cfg, spec, &tr2, &va2, &te2, None, 0).unwrap();
    println!("edafno + chi-channel: {:.0}s test {:.4} best-val {:.4} last-train {:.4}",
        t.elapsed().as_secs_f64(), out.report.test_rel_l2, out.report.best_val_rel_l2,
        out.report.epochs.last().unwrap().train_rel_l2);
}
