use dafno::data::{gen_poisson_dataset, split};
use dafno::geometry::{distance_field, BoxGrid};
use dafno::operator::ModelConfig;
use dafno::tape::ActKind;
use dafno::tensor::Tensor;
use dafno::training::*;

fn main() {
    let grid = BoxGrid::square(1.0, 32);
    let ds = gen_poisson_dataset(200, grid, 7, 20.0).unwrap();
    let (tr, va, te) = split(&ds, (0.7, 0.15, 0.15), 0).unwrap();
    let spec = VariantSpec::Edafno;
    let mcfg = ModelConfig { variant: spec.variant(), layers: 3, modes: (6, 6), width: 8,
        activation: ActKind::Gelu, in_channels: 1, out_channels: 1, proj_hidden: 16 };
    let cfg = TrainConfig { lr: 1e-2, decay: 0.5, weight_decay: 1e-5, epochs: 60, batch: 16,
        seeds: vec![0], beta: 20.0, optimizer: None, allow_long: false };
    let out = train(&mcfg, &cfg, spec, &tr, &va, &te, None, 0).unwrap();

    // error decomposition on validation: full-mask vs interior-only
    let packs = assemble_packs(&va, spec, 20.0, &out.norm_in, None).unwrap();
    let coords = va.grid.coords();
    let h = va.grid.spacing().0;
    let mut full = 0.0; let mut interior = 0.0; let mut boundary = 0.0;
    for (idx, pack) in packs.iter().enumerate() {
        let pred = predict_physical(&out.model, &out.norm_out, &coords, pack).unwrap();
        let dist = distance_field(&va.chi[idx], &va.grid).unwrap();
        let m_int: Vec<f64> = (0..32*32).map(|p| if pack.metric_mask.data()[p] == 1.0 && dist.data()[p] >= 3.0*h { 1.0 } else { 0.0 }).collect();
        let m_bnd: Vec<f64> = (0..32*32).map(|p| if pack.metric_mask.data()[p] == 1.0 && dist.data()[p] < 3.0*h { 1.0 } else { 0.0 }).collect();
        full += rel_l2(&pred, &pack.truth, Some(&pack.metric_mask)).unwrap();
        interior += rel_l2(&pred, &pack.truth, Some(&Tensor::from_vec(&[32,32,1], m_int))).unwrap();
        boundary += rel_l2(&pred, &pack.truth, Some(&Tensor::from_vec(&[32,32,1], m_bnd))).unwrap();
    }
    let n = packs.len() as f64;
    println!("val rel-l2: full {:.4}  interior(d>=3h) {:.4}  boundary(d<3h) {:.4}", full/n, interior/n, boundary/n);
}
