use dafno::data::{gen_poisson_dataset, split, Dataset};
use dafno::geometry::BoxGrid;
use dafno::operator::ModelConfig;
use dafno::tape::ActKind;
use dafno::tensor::concat_channels;
use dafno::training::*;
use std::time::Instant;

fn with_chi(ds: &Dataset) -> Dataset {
    let mut out = ds.clone();
    for i in 0..ds.len() {
        out.g[i] = concat_channels(&[&ds.g[i], &ds.chi_smooth[i].as_channel()]).unwrap();
    }
    out
}

fn main() {
    let beta: f64 = std::env::var("BETA").ok().and_then(|v| v.parse().ok()).unwrap_or(10.0);
    let grid = BoxGrid::square(1.0, 32);
    let ds = gen_poisson_dataset(200, grid, 7, beta).unwrap();
    let (tr, va, te) = split(&ds, (0.85, 0.05, 0.10), 0).unwrap();
    let (tr, va, te) = (with_chi(&tr), with_chi(&va), with_chi(&te));
    let spec = VariantSpec::Edafno;
    let modes: usize = std::env::var("M").ok().and_then(|v| v.parse().ok()).unwrap_or(6);
    let mcfg = ModelConfig { variant: spec.variant(), layers: 3, modes: (modes, modes), width: 8,
        activation: ActKind::Gelu, in_channels: 2, out_channels: 1, proj_hidden: 16 };
    let cfg = TrainConfig { lr: 1e-2, decay: 0.5, weight_decay: 1e-3, epochs: 200, batch: 4,
        seeds: vec![0], beta, optimizer: None, allow_long: false };
    let t = Instant::now();
    let out = train(&mcfg, &cfg, spec, &tr, &va, &te, None, 0).unwrap();
    println!("trained {:.0}s test {:.4} val {:.4} train {:.4}", t.elapsed().as_secs_f64(),
        out.report.test_rel_l2, out.report.best_val_rel_l2, out.report.epochs.last().unwrap().train_rel_l2);
    // per-sample test errors
    let packs = assemble_packs(&te, spec, beta, &out.norm_in, None).unwrap();
    let coords = te.grid.coords();
    let mut errs: Vec<(usize, f64)> = packs.iter().enumerate().map(|(i, p)| {
        let pred = predict_physical(&out.model, &out.norm_out, &coords, p).unwrap();
        (i, rel_l2(&pred, &p.truth, Some(&p.metric_mask)).unwrap())
    }).collect();
    errs.sort_by(|a, b| a.1.total_cmp(&b.1));
    let vals: Vec<String> = errs.iter().map(|(i, e)| format!("{i}:{:.3}", e)).collect();
    println!("per-sample sorted: {}", vals.join(" "));
    // truth norms to check scale correlation
    for (i, e) in errs.iter().rev().take(3) {
        println!("worst sample {i}: err {e:.3} truth_norm {:.4}", packs[*i].truth_norm);
    }
    for (i, e) in errs.iter().take(3) {
        println!("best sample {i}: err {e:.3} truth_norm {:.4}", packs[*i].truth_norm);
    }
}
