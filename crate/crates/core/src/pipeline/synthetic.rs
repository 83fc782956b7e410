//! Spotted test surfaces with known material → appearance relations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::material::{hsv_to_rgb, measure, rgb_to_yuv_luminance, wrap_unit};
use crate::mesh::{channel, mean_edge_length, primitives, Mesh};
use crate::spheremap::LandmarkSet;
use crate::vec3::Vec3;

use super::PipelineError;

/// Ground-truth region of each vertex in generated meshes; 0 is background.
pub const REGION: &str = "region";

const C_BG: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BaseShape {
    Sphere,
    Egg { a: f64, b: f64, taper: f64 },
}

/// Appearance of one region as a function of its material:
/// `s = gain c + offset`, `h = m + hue_offset` (wrapped).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Relation {
    pub gain: f64,
    pub offset: f64,
    pub hue_offset: f64,
}

impl Relation {
    pub fn saturation(&self, c: f64) -> f64 {
        (self.gain * c + self.offset).clamp(0.0, 1.0)
    }

    pub fn hue(&self, m: f64) -> f64 {
        wrap_unit(m + self.hue_offset)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    pub axis: [f64; 3],
    pub degrees: f64,
}

impl Rotation {
    pub fn matrix(&self) -> Matrix<f64> {
        let a = Vec3::new(self.axis[0], self.axis[1], self.axis[2]).normalized();
        let (s, c) = self.degrees.to_radians().sin_cos();
        let (x, y, z) = (a.x(), a.y(), a.z());
        let t = 1.0 - c;
        Matrix::from_rows(&[
            vec![t * x * x + c, t * x * y - s * z, t * x * z + s * y],
            vec![t * x * y + s * z, t * y * y + c, t * y * z - s * x],
            vec![t * x * z - s * y, t * y * z + s * x, t * z * z + c],
        ])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub base: BaseShape,
    pub subdivision: u32,
    pub spots: usize,
    /// Angular spot radius range in radians.
    pub radius: [f64; 2],
    /// Spot peak concentration above background, in `(0, 1]`.
    pub contrast: f64,
    /// Width of the spot edge ramp in mean edge lengths.
    pub edge_width: f64,
    /// Minimum gap between spot edges in mean edge lengths.
    pub separation: f64,
    /// One relation per region (background first). Drawn from the seed
    /// when empty.
    pub relations: Vec<Relation>,
    /// Standard deviation of additive colour noise before quantization.
    pub noise: f64,
    /// Target concentration relative to the source.
    pub concentration_scale: f64,
    /// Rotation applied to the target surface.
    pub rotation: Option<Rotation>,
    pub max_retries: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            base: BaseShape::Egg {
                a: 1.0,
                b: 1.3,
                taper: 0.15,
            },
            subdivision: 5,
            spots: 5,
            radius: [0.3, 0.45],
            contrast: 0.7,
            edge_width: 0.0,
            separation: 3.0,
            relations: Vec::new(),
            noise: 0.0,
            concentration_scale: 0.8,
            rotation: None,
            max_retries: 10_000,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if !(self.contrast > 0.0 && self.contrast <= 1.0) {
            return bad(format!("contrast must be in (0, 1], got {}", self.contrast));
        }
        if !(self.radius[0] > 0.0 && self.radius[0] <= self.radius[1] && self.radius[1] < 1.5) {
            return bad(format!("bad spot radius range {:?}", self.radius));
        }
        if !(self.edge_width >= 0.0 && self.separation >= 0.0 && self.noise >= 0.0) {
            return bad("edge width, separation and noise must be non-negative".into());
        }
        if !(self.concentration_scale > 0.0 && self.concentration_scale.is_finite()) {
            return bad(format!("concentration scale must be positive, got {}", self.concentration_scale));
        }
        if !self.relations.is_empty() && self.relations.len() != self.spots + 1 {
            return bad(format!(
                "{} relations given for {} regions",
                self.relations.len(),
                self.spots + 1
            ));
        }
        if let Some(r) = self.relations.iter().find(|r| r.gain == 0.0 || !r.gain.is_finite()) {
            return bad(format!("relation gain must be non-zero, got {}", r.gain));
        }
        Ok(())
    }

    fn peak(&self) -> f64 {
        C_BG + 0.8 * self.contrast
    }
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub source: Mesh<f64>,
    pub target: Mesh<f64>,
    pub ground_truth: Mesh<f64>,
    pub landmarks: Option<LandmarkSet>,
    pub relations: Vec<Relation>,
}

struct Spot {
    centre: Vec3<f64>,
    radius: f64,
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

fn random_direction(rng: &mut ChaCha8Rng) -> Vec3<f64> {
    loop {
        let v = Vec3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        let n = v.norm();
        if n > 1e-9 {
            return v * (1.0 / n);
        }
    }
}

fn angle(a: Vec3<f64>, b: Vec3<f64>) -> f64 {
    a.dot(&b).clamp(-1.0, 1.0).acos()
}

fn place_spots(spec: &SyntheticSpec, edge: f64, rng: &mut ChaCha8Rng) -> Result<Vec<Spot>, PipelineError> {
    let mut spots: Vec<Spot> = Vec::with_capacity(spec.spots);
    let gap = (spec.separation + spec.edge_width) * edge;
    let mut tries = 0;
    while spots.len() < spec.spots {
        tries += 1;
        if tries > spec.max_retries {
            return Err(PipelineError::SpotPlacement {
                placed: spots.len(),
                wanted: spec.spots,
                tries: spec.max_retries,
            });
        }
        let radius = rng.random_range(spec.radius[0]..=spec.radius[1]);
        let centre = random_direction(rng);
        if spots.iter().all(|s| angle(s.centre, centre) >= s.radius + radius + gap) {
            spots.push(Spot { centre, radius });
        }
    }
    Ok(spots)
}

/// Region compositions spread over `[0.05, 0.95]` at least 0.1 apart.
fn draw_compositions(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let slots = ((0.9 / 0.1) as usize).max(n);
    let mut idx: Vec<usize> = (0..slots).collect();
    for i in 0..n.min(slots) {
        let j = rng.random_range(i..slots);
        idx.swap(i, j);
    }
    let width = 0.9 / slots as f64;
    idx[..n]
        .iter()
        .map(|&k| 0.05 + width * (k as f64 + rng.random_range(0.25..0.75)))
        .collect()
}

fn draw_relations(n: usize, peak: f64, rng: &mut ChaCha8Rng) -> Vec<Relation> {
    (0..n)
        .map(|_| {
            let offset = rng.random_range(0.02..0.12);
            let max_gain = ((0.95 - offset) / peak).min(1.0);
            Relation {
                gain: rng.random_range(0.5 * max_gain..=max_gain),
                offset,
                hue_offset: rng.random_range(-0.2..0.2),
            }
        })
        .collect()
}

/// Luminance of the fully saturated colour of hue `m` at value 1.
fn pure_luminance(m: f64) -> f64 {
    rgb_to_yuv_luminance(hsv_to_rgb([m, 1.0, 1.0]))
}

/// Colour with hue `m` and luminance `c` at the region's fixed saturation.
fn bispectral(m: f64, sat: f64, c: f64) -> [f64; 3] {
    let v = c / ((1.0 - sat) + sat * pure_luminance(m));
    hsv_to_rgb([m, sat, v.min(1.0)])
}

fn quantize(x: f64) -> f64 {
    (x.clamp(0.0, 1.0) * 255.0).round() / 255.0
}

/// Generates a spotted source, a target carrying only material channels
/// and the target's withheld appearance. Deterministic in `seed`.
pub fn gen_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Synthetic, PipelineError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs_mesh = primitives::icosphere::<f64>(spec.subdivision);
    let hem = dirs_mesh.half_edges()?;
    let dirs = dirs_mesh.positions.clone();
    let edge = mean_edge_length(&dirs, &hem);
    let spots = place_spots(spec, edge, &mut rng)?;
    let regions = spec.spots + 1;
    let comps = draw_compositions(regions, &mut rng);
    let peak = spec.peak();
    let relations = if spec.relations.is_empty() {
        draw_relations(regions, peak, &mut rng)
    } else {
        spec.relations.clone()
    };
    let sats: Vec<f64> = comps
        .iter()
        .map(|&m| (0.95 * (1.0 - peak) / (1.0 - pure_luminance(m))).clamp(0.1, 0.8))
        .collect();

    let ramp = spec.edge_width * edge;
    let (labels, conc): (Vec<i32>, Vec<f64>) = dirs
        .iter()
        .map(|&d| {
            let mut region = 0;
            let mut inside: f64 = 0.0;
            for (k, s) in spots.iter().enumerate() {
                let a = angle(d, s.centre);
                let w = if ramp > 0.0 {
                    1.0 - smoothstep((a - s.radius) / ramp + 0.5)
                } else if a < s.radius {
                    1.0
                } else {
                    0.0
                };
                if a < s.radius {
                    region = k as i32 + 1;
                }
                inside = inside.max(w);
            }
            (region, C_BG + (peak - C_BG) * inside)
        })
        .unzip();

    let shape = match spec.base {
        BaseShape::Sphere => dirs_mesh.clone(),
        BaseShape::Egg { a, b, taper } => primitives::egg::<f64>(spec.subdivision, a, b, taper),
    };
    let noise = Normal::new(0.0, spec.noise.max(f64::MIN_POSITIVE)).expect("finite noise");
    let colours = |scale: f64, rng: &mut ChaCha8Rng| -> Vec<Vec3<f64>> {
        labels
            .iter()
            .zip(&conc)
            .map(|(&r, &c)| {
                let rgb = bispectral(comps[r as usize], sats[r as usize], c * scale);
                let rgb = rgb.map(|x| {
                    let x = if spec.noise > 0.0 { x + noise.sample(rng) } else { x };
                    quantize(x)
                });
                Vec3(rgb)
            })
            .collect()
    };
    let src_rgb = colours(1.0, &mut rng);
    let tar_rgb = colours(spec.concentration_scale, &mut rng);

    // Appearance follows from the measured (quantized) material.
    let appearance = |rgb: &[Vec3<f64>]| -> (Vec<f64>, Vec<f64>) {
        rgb.iter()
            .zip(&labels)
            .map(|(c, &r)| {
                let s = measure(c.0);
                let rel = &relations[r as usize];
                (rel.hue(s.composition), rel.saturation(s.concentration))
            })
            .unzip()
    };

    let mut source = shape.clone();
    let (h, s) = appearance(&src_rgb);
    source.set_vector(channel::BISPECTRAL, src_rgb)?;
    source.set_scalar(channel::HUE, h)?;
    source.set_scalar(channel::SATURATION, s)?;
    source.set_label(REGION, labels.clone())?;

    let mut target = shape;
    let mut landmarks = None;
    if let Some(rot) = spec.rotation {
        let r = rot.matrix();
        for p in &mut target.positions {
            let q = r.mul_vec(&p.0);
            *p = Vec3::new(q[0], q[1], q[2]);
        }
        // The twelve icosahedron corners keep their ids under subdivision.
        landmarks = Some(LandmarkSet {
            pairs: (0..12).map(|i| [i, i]).collect(),
            directions: Vec::new(),
        });
    }
    let (h, s) = appearance(&tar_rgb);
    target.set_vector(channel::BISPECTRAL, tar_rgb)?;
    let mut ground_truth = target.clone();
    ground_truth.set_scalar(channel::HUE, h)?;
    ground_truth.set_scalar(channel::SATURATION, s)?;
    ground_truth.set_label(REGION, labels)?;

    Ok(Synthetic {
        source,
        target,
        ground_truth,
        landmarks,
        relations,
    })
}
