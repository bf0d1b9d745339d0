//! Browser bindings for three interactive views of the toolkit:
//! the smoothed geometry encoding, zero-shot operator inference on fresh
//! void geometries, and the live crack simulation driven by the bond-based
//! physics. Everything renders into RGBA pixel buffers that the page blits
//! onto canvases.

use wasm_bindgen::prelude::*;

use dafno::container::read_container_from;
use dafno::data::{gen_poisson_dataset, solve_poisson_masked, SourceField};
use dafno::data::derive_seed;
use dafno::geometry::{
    distance_field, rasterize, sample_void_shape, smooth_chi, BoxGrid, GrfParams,
};
use dafno::peridynamics::{BondForce, PdConfig, PdSim, PdState};
use dafno::tensor::Tensor;
use dafno::training::{assemble_packs, checkpoint_from_container, predict_physical, rel_l2};

/// Embedded demo checkpoint: a small geometry-masked operator trained on
/// the Poisson-on-void task at 32^2 (see the README for the exact
/// training command).
const CHECKPOINT: &[u8] = include_bytes!("../assets/poisson_edafno.dafn");

// viridis control points, linearly interpolated
const VIRIDIS: [[f64; 3]; 9] = [
    [0.267, 0.005, 0.329],
    [0.283, 0.141, 0.458],
    [0.254, 0.265, 0.530],
    [0.207, 0.372, 0.553],
    [0.164, 0.471, 0.558],
    [0.128, 0.567, 0.551],
    [0.135, 0.659, 0.518],
    [0.267, 0.749, 0.441],
    [0.993, 0.906, 0.144],
];

fn colormap(t: f64) -> [u8; 4] {
    let t = t.clamp(0.0, 1.0) * (VIRIDIS.len() - 1) as f64;
    let i = (t.floor() as usize).min(VIRIDIS.len() - 2);
    let f = t - i as f64;
    let mut px = [0u8; 4];
    for c in 0..3 {
        let v = VIRIDIS[i][c] * (1.0 - f) + VIRIDIS[i + 1][c] * f;
        px[c] = (v * 255.0).round() as u8;
    }
    px[3] = 255;
    px
}

/// Scalar field (row-major [n1, n2]) to RGBA with min/max normalization.
fn field_to_rgba(data: &[f64], lo: f64, hi: f64) -> Vec<u8> {
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = Vec::with_capacity(data.len() * 4);
    for &v in data {
        out.extend_from_slice(&colormap((v - lo) / span));
    }
    out
}

fn minmax(data: &[f64]) -> (f64, f64) {
    data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    })
}

/// Interactive geometry encoding: sample a random void, rasterize it, and
/// smooth the indicator with a tanh of the interface distance.
#[wasm_bindgen]
pub fn render_encoding(seed: u32, beta: f64, resolution: usize, which: &str) -> Result<Vec<u8>, JsValue> {
    let grid = BoxGrid::square(1.0, resolution);
    let shape = sample_void_shape(seed as u64, GrfParams::default());
    let err = |e: dafno::Error| JsValue::from_str(&e.to_string());
    let chi = rasterize(&shape, &grid).map_err(err)?;
    let field = match which {
        "sharp" => chi.values.data().to_vec(),
        "distance" => distance_field(&chi, &grid).map_err(err)?.data().to_vec(),
        _ => {
            let dist = distance_field(&chi, &grid).map_err(err)?;
            smooth_chi(&chi, &dist, beta).map_err(err)?.values.data().to_vec()
        }
    };
    let (lo, hi) = minmax(&field);
    Ok(field_to_rgba(&field, lo, hi))
}

/// Operator inference on a freshly sampled geometry at any resolution the
/// embedded 32^2-trained model has never seen.
#[wasm_bindgen]
pub struct OperatorDemo {
    model: dafno::operator::OperatorModel,
    norm_in: dafno::training::Normalizer,
    norm_out: dafno::training::Normalizer,
    beta: f64,
    last_rel_l2: f64,
}

#[wasm_bindgen]
impl OperatorDemo {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Result<OperatorDemo, JsValue> {
        let container = read_container_from(CHECKPOINT)
            .map_err(|e| JsValue::from_str(&e.to_string()))?;
        let (model, norm_in, norm_out, meta) = checkpoint_from_container(&container)
            .map_err(|e| JsValue::from_str(&e.to_string()))?;
        Ok(OperatorDemo {
            model,
            norm_in,
            norm_out,
            beta: meta.beta,
            last_rel_l2: f64::NAN,
        })
    }

    /// Predict the solution field for a seeded void/source pair; `which`
    /// selects the rendered panel: "pred", "truth", or "error".
    pub fn render(&mut self, seed: u32, resolution: usize, which: &str) -> Result<Vec<u8>, JsValue> {
        let err = |e: dafno::Error| JsValue::from_str(&e.to_string());
        let ds = gen_poisson_dataset(1, BoxGrid::square(1.0, resolution), seed as u64, self.beta)
            .map_err(err)?;
        let spec = dafno::training::VariantSpec::Edafno;
        let packs = assemble_packs(&ds, spec, self.beta, &self.norm_in, None).map_err(err)?;
        let coords = ds.grid.coords();
        let pred = predict_physical(&self.model, &self.norm_out, &coords, &packs[0]).map_err(err)?;
        self.last_rel_l2 = rel_l2(&pred, &packs[0].truth, Some(&packs[0].metric_mask)).map_err(err)?;

        let n = resolution;
        let truth = &packs[0].truth;
        let select = |t: &Tensor| -> Vec<f64> { (0..n * n).map(|p| t.data()[p]).collect() };
        let (field, lo, hi) = match which {
            "truth" => {
                let f = select(truth);
                let (lo, hi) = minmax(&f);
                (f, lo, hi)
            }
            "error" => {
                let f: Vec<f64> = (0..n * n)
                    .map(|p| (pred.data()[p] - truth.data()[p]).abs())
                    .collect();
                let (_, hi) = minmax(&f);
                (f, 0.0, hi)
            }
            _ => {
                // color predictions on the truth scale so panels compare
                let f = select(&pred);
                let t = select(truth);
                let (lo, hi) = minmax(&t);
                (f, lo, hi)
            }
        };
        Ok(field_to_rgba(&field, lo, hi))
    }

    /// Masked relative L2 of the last rendered prediction.
    pub fn rel_l2(&self) -> f64 {
        self.last_rel_l2
    }
}

/// Live crack propagation at desk scale, stepped from the browser.
#[wasm_bindgen]
pub struct CrackSim {
    sim: PdSim,
    state: PdState,
}

#[wasm_bindgen]
impl CrackSim {
    #[wasm_bindgen(constructor)]
    pub fn new(traction_mpa: f64) -> Result<CrackSim, JsValue> {
        let mut config = PdConfig::desk();
        config.traction = traction_mpa * 1e6;
        let sim = PdSim::new(config).map_err(|e| JsValue::from_str(&e.to_string()))?;
        let state = sim.initial_state();
        Ok(CrackSim { sim, state })
    }

    /// Advance the simulation; returns false once the state goes unstable.
    pub fn step(&mut self, n: usize) -> bool {
        for _ in 0..n {
            if dafno::peridynamics::velocity_verlet_step(&self.sim, &mut self.state, &mut BondForce)
                .is_err()
            {
                return false;
            }
        }
        true
    }

    pub fn time_us(&self) -> f64 {
        self.state.time * 1e6
    }

    pub fn step_count(&self) -> usize {
        self.state.step
    }

    pub fn resolution(&self) -> usize {
        self.sim.config.resolution
    }

    /// Rendered panels: "damage" (phi over the indicator), "chi", or the
    /// displacement magnitude "u".
    pub fn render(&self, which: &str) -> Vec<u8> {
        let n = self.sim.config.resolution;
        match which {
            "chi" => field_to_rgba(self.state.chi.values.data(), 0.0, 1.0),
            "u" => {
                let f: Vec<f64> = (0..n * n)
                    .map(|p| {
                        (self.state.u.data()[2 * p].powi(2)
                            + self.state.u.data()[2 * p + 1].powi(2))
                        .sqrt()
                    })
                    .collect();
                let (_, hi) = minmax(&f);
                field_to_rgba(&f, 0.0, hi.max(1e-12))
            }
            _ => {
                // damage over material, exterior solid dark
                let f: Vec<f64> = (0..n * n)
                    .map(|p| {
                        if self.state.chi.values.data()[p] == 1.0 {
                            0.15 + 0.85 * self.state.phi.data()[p]
                        } else {
                            0.0
                        }
                    })
                    .collect();
                field_to_rgba(&f, 0.0, 1.0)
            }
        }
    }
}

/// Direct solve of one demo sample, for parity displays (slow path, used
/// by tests; the page uses the dataset generator through OperatorDemo).
#[wasm_bindgen]
pub fn solve_reference(seed: u32, resolution: usize) -> Result<Vec<u8>, JsValue> {
    let err = |e: dafno::Error| JsValue::from_str(&e.to_string());
    let grid = BoxGrid::square(1.0, resolution);
    let shape = sample_void_shape(derive_seed(seed as u64, 0), GrfParams::default());
    let chi = rasterize(&shape, &grid).map_err(err)?;
    let source = SourceField::sample(derive_seed(seed as u64, 1));
    let g = source.rasterize(&grid);
    let u = solve_poisson_masked(&shape, &chi, &g, &grid, 1e-10).map_err(err)?;
    let (lo, hi) = minmax(u.data());
    Ok(field_to_rgba(u.data(), lo, hi))
}
