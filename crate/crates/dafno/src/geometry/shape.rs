//! Shape descriptors with deterministic inside-tests, their rasterization
//! onto a box grid, and the random-void sampler used by the synthetic
//! datasets.

use serde::{Deserialize, Serialize};

use super::{BoxGrid, CharacteristicField};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// A zero-width crack carved into a plate as a thin band around a segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrackSegment {
    pub a: (f64, f64),
    pub b: (f64, f64),
}

impl CrackSegment {
    /// Squared distance from `p` to the segment.
    fn dist2(&self, p: (f64, f64)) -> f64 {
        let (ax, ay) = self.a;
        let (bx, by) = self.b;
        let (dx, dy) = (bx - ax, by - ay);
        let len2 = dx * dx + dy * dy;
        let t = if len2 == 0.0 {
            0.0
        } else {
            (((p.0 - ax) * dx + (p.1 - ay) * dy) / len2).clamp(0.0, 1.0)
        };
        let (cx, cy) = (ax + t * dx, ay + t * dy);
        (p.0 - cx) * (p.0 - cx) + (p.1 - cy) * (p.1 - cy)
    }
}

/// Smooth periodic radial profile `r(theta)` of a random void, stored as
/// the coefficients of its truncated angular expansion so evaluation is
/// exact at any resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    /// constant term of the latent field
    pub mean: f64,
    /// cosine coefficients, mode k = 1.. (already scaled)
    pub cos_coeffs: Vec<f64>,
    /// sine coefficients, mode k = 1..
    pub sin_coeffs: Vec<f64>,
}

impl RadialProfile {
    /// Latent field value at angle `theta`.
    pub fn latent(&self, theta: f64) -> f64 {
        let mut acc = self.mean;
        for (k, (c, s)) in self.cos_coeffs.iter().zip(&self.sin_coeffs).enumerate() {
            let kk = (k + 1) as f64;
            acc += c * (kk * theta).cos() + s * (kk * theta).sin();
        }
        acc
    }

    /// Void radius `0.2 + 0.2 / (1 + exp(latent))`, always in (0.2, 0.4).
    pub fn radius(&self, theta: f64) -> f64 {
        0.2 + 0.2 / (1.0 + self.latent(theta).exp())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainShape {
    /// Solid disk.
    Disk { center: (f64, f64), radius: f64 },
    /// Unit-cell material with a star-shaped void cut out of it.
    CellWithVoid {
        center: (f64, f64),
        profile: RadialProfile,
    },
    /// Simple polygon, even-odd inside rule.
    Polygon { vertices: Vec<(f64, f64)> },
    /// Axis-aligned plate with optional crack bands carved out. The band
    /// half-width defaults to one grid spacing at rasterization time.
    PlateWithCracks {
        origin: (f64, f64),
        size: (f64, f64),
        cracks: Vec<CrackSegment>,
        #[serde(default)]
        opening_half_width: Option<f64>,
    },
}

impl DomainShape {
    /// Deterministic inside test. `crack_half_width` is the band half-width
    /// used for plate cracks.
    pub fn contains(&self, p: (f64, f64), crack_half_width: f64) -> bool {
        match self {
            DomainShape::Disk { center, radius } => {
                let (dx, dy) = (p.0 - center.0, p.1 - center.1);
                dx * dx + dy * dy < radius * radius
            }
            DomainShape::CellWithVoid { center, profile } => {
                let (dx, dy) = (p.0 - center.0, p.1 - center.1);
                let r2 = dx * dx + dy * dy;
                if r2 == 0.0 {
                    return false;
                }
                let theta = dy.atan2(dx);
                let r = profile.radius(theta);
                r2 >= r * r
            }
            DomainShape::Polygon { vertices } => point_in_polygon(p, vertices),
            DomainShape::PlateWithCracks {
                origin,
                size,
                cracks,
                opening_half_width,
            } => {
                let hw = opening_half_width.unwrap_or(crack_half_width);
                let inside_rect = p.0 >= origin.0
                    && p.0 <= origin.0 + size.0
                    && p.1 >= origin.1
                    && p.1 <= origin.1 + size.1;
                inside_rect && cracks.iter().all(|c| c.dist2(p) > hw * hw)
            }
        }
    }

    fn check_degenerate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::DegenerateShape(what.into()));
        match self {
            DomainShape::Disk { radius, .. } if *radius <= 0.0 => bad("disk radius <= 0"),
            DomainShape::Polygon { vertices } => {
                if vertices.len() < 3 || polygon_area(vertices).abs() == 0.0 {
                    bad("polygon with zero area")
                } else {
                    Ok(())
                }
            }
            DomainShape::PlateWithCracks { size, .. } if size.0 <= 0.0 || size.1 <= 0.0 => {
                bad("plate with non-positive extent")
            }
            _ => Ok(()),
        }
    }
}

fn polygon_area(vertices: &[(f64, f64)]) -> f64 {
    let n = vertices.len();
    let mut acc = 0.0;
    for i in 0..n {
        let (x0, y0) = vertices[i];
        let (x1, y1) = vertices[(i + 1) % n];
        acc += x0 * y1 - x1 * y0;
    }
    0.5 * acc
}

fn point_in_polygon(p: (f64, f64), vertices: &[(f64, f64)]) -> bool {
    let mut inside = false;
    let n = vertices.len();
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = vertices[i];
        let (xj, yj) = vertices[j];
        if ((yi > p.1) != (yj > p.1))
            && (p.0 < (xj - xi) * (p.1 - yi) / (yj - yi) + xi)
        {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Node is 1 iff its coordinate lies inside the shape; plate cracks carve a
/// band of one grid spacing (half-width) unless the shape overrides it.
pub fn rasterize(shape: &DomainShape, grid: &BoxGrid) -> Result<CharacteristicField> {
    shape.check_degenerate()?;
    let (n1, n2) = grid.n;
    let hw = grid.spacing().0;
    let mut data = Vec::with_capacity(n1 * n2);
    for i in 0..n1 {
        for j in 0..n2 {
            let inside = shape.contains(grid.node_pos(i, j), hw);
            data.push(if inside { 1.0 } else { 0.0 });
        }
    }
    Ok(CharacteristicField::new(
        *grid,
        Tensor::from_vec(&[n1, n2], data),
    ))
}

/// Gaussian random field parameters for the void sampler: the latent field
/// is `N(0, amplitude^2 (-Laplace + shift^2)^{-1})` on the periodic circle,
/// truncated to `modes` angular frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrfParams {
    pub amplitude: f64,
    pub shift: f64,
    pub modes: usize,
}

impl Default for GrfParams {
    fn default() -> Self {
        GrfParams {
            amplitude: 4.0,
            shift: 3.0,
            modes: 64,
        }
    }
}

impl GrfParams {
    /// Eigenvalue of the covariance operator at angular frequency k.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        self.amplitude * self.amplitude / ((k * k) as f64 + self.shift * self.shift)
    }

    /// Pointwise variance of the truncated expansion (angle independent).
    pub fn analytic_variance(&self) -> f64 {
        use std::f64::consts::PI;
        let mut var = self.eigenvalue(0) / (2.0 * PI);
        for k in 1..self.modes {
            var += self.eigenvalue(k) / PI;
        }
        var
    }
}

/// Draw a random void shape centered in the unit cell: the latent radius
/// field is sampled by its truncated orthonormal expansion on the circle,
/// reproducible from the seed.
pub fn sample_void_shape(seed: u64, params: GrfParams) -> DomainShape {
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    // Box-Muller, two uniforms per normal
    let mut normal = move || -> f64 {
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    };
    let mean = params.eigenvalue(0).sqrt() / (2.0 * PI).sqrt() * normal();
    let mut cos_coeffs = Vec::with_capacity(params.modes.saturating_sub(1));
    let mut sin_coeffs = Vec::with_capacity(params.modes.saturating_sub(1));
    for k in 1..params.modes {
        let scale = params.eigenvalue(k).sqrt() / PI.sqrt();
        cos_coeffs.push(scale * normal());
        sin_coeffs.push(scale * normal());
    }
    DomainShape::CellWithVoid {
        center: (0.5, 0.5),
        profile: RadialProfile {
            mean,
            cos_coeffs,
            sin_coeffs,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn full_box_plate_rasterizes_to_all_ones() {
        let grid = BoxGrid::square(1.0, 16);
        let shape = DomainShape::PlateWithCracks {
            origin: (0.0, 0.0),
            size: (1.0, 1.0),
            cracks: vec![],
            opening_half_width: None,
        };
        let chi = rasterize(&shape, &grid).unwrap();
        assert_eq!(chi.ones_count(), 256);
    }

    #[test]
    fn disk_area_fraction_matches_monte_carlo() {
        let grid = BoxGrid::square(1.0, 64);
        let shape = DomainShape::Disk {
            center: (0.5, 0.5),
            radius: 0.25,
        };
        let chi = rasterize(&shape, &grid).unwrap();
        let frac = chi.ones_count() as f64 / 64.0 / 64.0;

        // independent area oracle: 1e6 quasi-random points
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut hits = 0usize;
        let total = 1_000_000usize;
        for _ in 0..total {
            let p = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
            if shape.contains(p, 0.0) {
                hits += 1;
            }
        }
        let mc = hits as f64 / total as f64;
        assert!((mc - std::f64::consts::PI * 0.0625).abs() < 1e-3);
        assert!((frac - mc).abs() < 2.0 / 64.0, "grid {frac} vs Monte Carlo {mc}");
    }

    #[test]
    fn crack_band_removes_exactly_the_banded_nodes() {
        let grid = BoxGrid::square(1.0, 32);
        let plate = DomainShape::PlateWithCracks {
            origin: (0.1, 0.1),
            size: (0.8, 0.8),
            cracks: vec![],
            opening_half_width: None,
        };
        let seg = CrackSegment {
            a: (0.1, 0.5),
            b: (0.45, 0.5),
        };
        let cracked = DomainShape::PlateWithCracks {
            origin: (0.1, 0.1),
            size: (0.8, 0.8),
            cracks: vec![seg],
            opening_half_width: None,
        };
        let chi_plate = rasterize(&plate, &grid).unwrap();
        let chi_crack = rasterize(&cracked, &grid).unwrap();

        // brute-force band membership among plate nodes
        let hw = grid.spacing().0;
        let mut banded = 0usize;
        for i in 0..32 {
            for j in 0..32 {
                let p = grid.node_pos(i, j);
                if plate.contains(p, hw) && seg.dist2(p) <= hw * hw {
                    banded += 1;
                }
            }
        }
        assert!(banded > 0);
        assert_eq!(chi_crack.ones_count(), chi_plate.ones_count() - banded);
    }

    #[test]
    fn degenerate_shapes_rejected() {
        let grid = BoxGrid::square(1.0, 8);
        let zero_disk = DomainShape::Disk {
            center: (0.5, 0.5),
            radius: 0.0,
        };
        assert!(matches!(
            rasterize(&zero_disk, &grid),
            Err(Error::DegenerateShape(_))
        ));
        let flat_poly = DomainShape::Polygon {
            vertices: vec![(0.0, 0.0), (1.0, 0.0), (0.5, 0.0)],
        };
        assert!(matches!(
            rasterize(&flat_poly, &grid),
            Err(Error::DegenerateShape(_))
        ));
    }

    #[test]
    fn void_profile_constant_when_latent_vanishes() {
        let profile = RadialProfile {
            mean: 0.0,
            cos_coeffs: vec![0.0; 4],
            sin_coeffs: vec![0.0; 4],
        };
        for k in 0..8 {
            let theta = k as f64;
            assert!((profile.radius(theta) - 0.3).abs() < 1e-15);
        }
    }

    #[test]
    fn void_radius_always_in_open_interval() {
        for seed in 0..40 {
            let shape = sample_void_shape(seed, GrfParams::default());
            let DomainShape::CellWithVoid { profile, .. } = &shape else {
                panic!("expected a void shape");
            };
            for k in 0..256 {
                let theta = k as f64 / 256.0 * std::f64::consts::TAU;
                let r = profile.radius(theta);
                assert!(r > 0.2 && r < 0.4, "r({theta}) = {r}");
            }
        }
    }

    #[test]
    fn latent_variance_matches_truncated_expansion() {
        // empirical variance over many samples vs the analytic eigenvalue sum
        let params = GrfParams::default();
        let analytic = params.analytic_variance();
        let angles = [0.0, 1.1, 2.9, 4.4];
        let trials = 10_000usize;
        let mut acc = vec![0.0f64; angles.len()];
        let mut acc2 = vec![0.0f64; angles.len()];
        for seed in 0..trials {
            let shape = sample_void_shape(seed as u64, params);
            let DomainShape::CellWithVoid { profile, .. } = &shape else {
                unreachable!()
            };
            for (a, &theta) in angles.iter().enumerate() {
                let v = profile.latent(theta);
                acc[a] += v;
                acc2[a] += v * v;
            }
        }
        for a in 0..angles.len() {
            let mean = acc[a] / trials as f64;
            let var = acc2[a] / trials as f64 - mean * mean;
            let rel = (var - analytic).abs() / analytic;
            assert!(rel < 0.05, "angle {}: empirical {var} vs analytic {analytic}", angles[a]);
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let a = sample_void_shape(31, GrfParams::default());
        let b = sample_void_shape(31, GrfParams::default());
        assert_eq!(a, b);
    }

    #[test]
    fn shape_roundtrips_through_json() {
        let shape = sample_void_shape(5, GrfParams::default());
        let text = serde_json::to_string(&shape).unwrap();
        let back: DomainShape = serde_json::from_str(&text).unwrap();
        assert_eq!(shape, back);
    }
}
