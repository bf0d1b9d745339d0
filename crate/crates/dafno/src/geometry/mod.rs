//! Geometry encodings on a periodic box grid: rasterized characteristic
//! fields, exact grid distance transforms, the tanh-smoothed encoding, and
//! the one-directional topology update driven by nodal damage.

mod airfoil;
mod shape;

pub use airfoil::{airfoil_map_forward, airfoil_map_inverse};
pub use shape::{rasterize, sample_void_shape, CrackSegment, DomainShape, GrfParams, RadialProfile};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Uniform node-centered grid over a periodic box: node `(i, j)` sits at
/// `((i + 1/2) h1, (j + 1/2) h2)`, so no node coincides with the box edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxGrid {
    /// physical box extents (length units per axis)
    pub extent: (f64, f64),
    /// resolution `n1 x n2`
    pub n: (usize, usize),
}

impl BoxGrid {
    pub fn square(extent: f64, n: usize) -> Self {
        BoxGrid {
            extent: (extent, extent),
            n: (n, n),
        }
    }

    pub fn spacing(&self) -> (f64, f64) {
        (self.extent.0 / self.n.0 as f64, self.extent.1 / self.n.1 as f64)
    }

    pub fn node_pos(&self, i: usize, j: usize) -> (f64, f64) {
        let (h1, h2) = self.spacing();
        ((i as f64 + 0.5) * h1, (j as f64 + 0.5) * h2)
    }

    pub fn node_count(&self) -> usize {
        self.n.0 * self.n.1
    }

    /// Physical node coordinates as a `[n1, n2, 2]` tensor.
    pub fn coords(&self) -> Tensor {
        let (n1, n2) = self.n;
        let mut data = Vec::with_capacity(n1 * n2 * 2);
        for i in 0..n1 {
            for j in 0..n2 {
                let (x, y) = self.node_pos(i, j);
                data.push(x);
                data.push(y);
            }
        }
        Tensor::from_vec(&[n1, n2, 2], data)
    }

    pub fn cell_area(&self) -> f64 {
        let (h1, h2) = self.spacing();
        h1 * h2
    }
}

/// Sharp domain indicator on a box grid, strictly 0/1 valued.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicField {
    pub grid: BoxGrid,
    /// `[n1, n2]` with values in {0, 1}
    pub values: Tensor,
}

impl CharacteristicField {
    pub fn new(grid: BoxGrid, values: Tensor) -> Self {
        debug_assert!(values.data().iter().all(|&v| v == 0.0 || v == 1.0));
        debug_assert_eq!(values.shape(), &[grid.n.0, grid.n.1]);
        CharacteristicField { grid, values }
    }

    pub fn ones(grid: BoxGrid) -> Self {
        let values = Tensor::full(&[grid.n.0, grid.n.1], 1.0);
        CharacteristicField { grid, values }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values.data()[i * self.grid.n.1 + j]
    }

    pub fn ones_count(&self) -> usize {
        self.values.data().iter().filter(|&&v| v == 1.0).count()
    }

    /// Values reshaped to the `[n1, n2, 1]` channel layout the models use.
    pub fn as_channel(&self) -> Tensor {
        Tensor::from_vec(&[self.grid.n.0, self.grid.n.1, 1], self.values.data().to_vec())
    }
}

/// Tanh-smoothed domain encoding, values in `[0, 1]`, exactly 0.5 on the
/// discrete interface.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedField {
    pub grid: BoxGrid,
    /// `[n1, n2]` in `[0, 1]`
    pub values: Tensor,
    pub beta: f64,
}

impl SmoothedField {
    pub fn as_channel(&self) -> Tensor {
        Tensor::from_vec(&[self.grid.n.0, self.grid.n.1, 1], self.values.data().to_vec())
    }
}

/// Per-node Euclidean distance to the discrete interface: the set of
/// exterior rim nodes (chi = 0 with a 4-neighbor of chi = 1). Exact with
/// respect to that node set.
pub fn distance_field(chi: &CharacteristicField, grid: &BoxGrid) -> Result<Tensor> {
    if chi.grid != *grid {
        return Err(Error::GridMismatch("distance_field chi/grid".into()));
    }
    let (n1, n2) = grid.n;
    let vals = chi.values.data();
    let mut has_zero = false;
    let mut has_one = false;
    for &v in vals {
        if v == 0.0 {
            has_zero = true;
        } else {
            has_one = true;
        }
    }
    if !has_zero || !has_one {
        return Err(Error::UniformChi);
    }

    let mut sites = vec![false; n1 * n2];
    let mut any_site = false;
    for i in 0..n1 {
        for j in 0..n2 {
            if vals[i * n2 + j] != 0.0 {
                continue;
            }
            let neighbor_one = (i > 0 && vals[(i - 1) * n2 + j] == 1.0)
                || (i + 1 < n1 && vals[(i + 1) * n2 + j] == 1.0)
                || (j > 0 && vals[i * n2 + j - 1] == 1.0)
                || (j + 1 < n2 && vals[i * n2 + j + 1] == 1.0);
            if neighbor_one {
                sites[i * n2 + j] = true;
                any_site = true;
            }
        }
    }
    if !any_site {
        return Err(Error::UniformChi);
    }

    let (h1, h2) = grid.spacing();
    let sq = if (h1 - h2).abs() <= f64::EPSILON * h1.abs() {
        squared_edt_isotropic(&sites, n1, n2)
            .into_iter()
            .map(|d2| (d2 as f64).sqrt() * h1)
            .collect::<Vec<f64>>()
    } else {
        // anisotropic spacing: direct minimum over sites
        let site_list: Vec<(usize, usize)> = (0..n1 * n2)
            .filter(|&p| sites[p])
            .map(|p| (p / n2, p % n2))
            .collect();
        (0..n1 * n2)
            .map(|p| {
                let (i, j) = (p / n2, p % n2);
                site_list
                    .iter()
                    .map(|&(si, sj)| {
                        let dx = (i as f64 - si as f64) * h1;
                        let dy = (j as f64 - sj as f64) * h2;
                        (dx * dx + dy * dy).sqrt()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    };
    Ok(Tensor::from_vec(&[n1, n2], sq))
}

const EDT_INF: u64 = u64::MAX / 4;

/// Exact squared Euclidean distance transform (integer cell units) via the
/// two-pass parabolic envelope method.
fn squared_edt_isotropic(sites: &[bool], n1: usize, n2: usize) -> Vec<u64> {
    // pass 1: per column (axis 0), nearest site in the same column
    let mut g = vec![EDT_INF; n1 * n2];
    for j in 0..n2 {
        let mut last: Option<usize> = None;
        for i in 0..n1 {
            if sites[i * n2 + j] {
                last = Some(i);
            }
            if let Some(s) = last {
                g[i * n2 + j] = ((i - s) * (i - s)) as u64;
            }
        }
        last = None;
        for i in (0..n1).rev() {
            if sites[i * n2 + j] {
                last = Some(i);
            }
            if let Some(s) = last {
                g[i * n2 + j] = g[i * n2 + j].min(((s - i) * (s - i)) as u64);
            }
        }
    }
    // pass 2: per row, lower envelope of parabolas f(q) + (j - q)^2
    let mut out = vec![EDT_INF; n1 * n2];
    let mut v = vec![0usize; n2];
    let mut z = vec![0.0f64; n2 + 1];
    for i in 0..n1 {
        let row = |q: usize| g[i * n2 + q];
        let mut k = 0usize;
        let mut started = false;
        for q in 0..n2 {
            if row(q) >= EDT_INF {
                continue;
            }
            if !started {
                v[0] = q;
                z[0] = f64::NEG_INFINITY;
                z[1] = f64::INFINITY;
                started = true;
                k = 0;
                continue;
            }
            loop {
                let p = v[k];
                let s = ((row(q) as f64 + (q * q) as f64) - (row(p) as f64 + (p * p) as f64))
                    / (2.0 * q as f64 - 2.0 * p as f64);
                if s <= z[k] {
                    if k == 0 {
                        v[0] = q;
                        z[0] = f64::NEG_INFINITY;
                        z[1] = f64::INFINITY;
                        break;
                    }
                    k -= 1;
                } else {
                    k += 1;
                    v[k] = q;
                    z[k] = s;
                    z[k + 1] = f64::INFINITY;
                    break;
                }
            }
        }
        if !started {
            continue;
        }
        let mut kk = 0usize;
        for j in 0..n2 {
            while z[kk + 1] < j as f64 {
                kk += 1;
            }
            let q = v[kk];
            let dj = j.abs_diff(q) as u64;
            out[i * n2 + j] = row(q) + dj * dj;
        }
    }
    out
}

/// `tanh(beta * dist) * (chi - 1/2) + 1/2`, evaluated pointwise.
pub fn smooth_chi(chi: &CharacteristicField, dist: &Tensor, beta: f64) -> Result<SmoothedField> {
    if beta <= 0.0 {
        return Err(Error::NonPositiveBeta(beta));
    }
    if dist.shape() != chi.values.shape() {
        return Err(Error::ShapeMismatch {
            left: dist.shape().to_vec(),
            right: chi.values.shape().to_vec(),
            context: "smooth_chi distance field",
        });
    }
    let values: Vec<f64> = chi
        .values
        .data()
        .iter()
        .zip(dist.data())
        .map(|(&c, &d)| (beta * d).tanh() * (c - 0.5) + 0.5)
        .collect();
    Ok(SmoothedField {
        grid: chi.grid,
        values: Tensor::from_vec(chi.values.shape(), values),
        beta,
    })
}

/// Convenience: distance transform plus smoothing in one call. A uniform
/// all-ones chi (no interface anywhere) smooths to the constant 1 field.
pub fn smooth_from_chi(chi: &CharacteristicField, beta: f64) -> Result<SmoothedField> {
    match distance_field(chi, &chi.grid) {
        Ok(dist) => smooth_chi(chi, &dist, beta),
        Err(Error::UniformChi) => {
            if beta <= 0.0 {
                return Err(Error::NonPositiveBeta(beta));
            }
            Ok(SmoothedField {
                grid: chi.grid,
                values: chi.values.clone(),
                beta,
            })
        }
        Err(e) => Err(e),
    }
}

/// Time-dependent topology update: a node switches 1 -> 0 once its damage
/// exceeds the threshold. Material never reappears.
pub fn evolve_chi(
    damage: &Tensor,
    threshold: f64,
    prev: &CharacteristicField,
) -> CharacteristicField {
    assert_eq!(damage.shape(), prev.values.shape());
    let values: Vec<f64> = prev
        .values
        .data()
        .iter()
        .zip(damage.data())
        .map(|(&c, &phi)| if c == 1.0 && phi > threshold { 0.0 } else { c })
        .collect();
    CharacteristicField {
        grid: prev.grid,
        values: Tensor::from_vec(prev.values.shape(), values),
    }
}
