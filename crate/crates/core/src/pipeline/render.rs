//! Diagnostic pictures: false-colour meshes and small PNG plots drawn
//! straight into a pixel buffer.

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::mesh::{channel, Channel, Mesh};
use crate::vec3::Vec3;

use super::PipelineError;

const W: u32 = 640;
const H: u32 = 400;
const MARGIN: i64 = 30;
const BG: Rgb<u8> = Rgb([255, 255, 255]);
const AXIS: Rgb<u8> = Rgb([40, 40, 40]);
const INK: Rgb<u8> = Rgb([31, 119, 180]);

/// Blue → white → red ramp over `[0, 1]`.
pub fn diverging(t: f64) -> [f64; 3] {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.5 };
    if t < 0.5 {
        let u = t / 0.5;
        [u, u, 1.0]
    } else {
        let u = (1.0 - t) / 0.5;
        [1.0, u, u]
    }
}

/// Distinct colours for integer labels; label 0 is grey.
pub fn categorical(label: i32) -> [f64; 3] {
    if label == 0 {
        return [0.6, 0.6, 0.6];
    }
    // Golden-ratio hue steps keep neighbouring ids apart.
    let h = (label as f64 * 0.618_033_988_75).fract();
    crate::material::hsv_to_rgb([h, 0.75, 0.95])
}

/// Geometry of `mesh` coloured by one channel. Scalars are scaled to their
/// own range, labels get categorical colours, vectors are used as RGB.
pub fn false_colour(mesh: &Mesh<f64>, name: &str) -> Result<Mesh<f64>, PipelineError> {
    let ch = mesh
        .channel(name)
        .ok_or_else(|| crate::mesh::MeshError::MissingChannel(name.to_string()))?;
    let colours: Vec<Vec3<f64>> = match ch {
        Channel::Scalar(v) => {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let span = if hi > lo { hi - lo } else { 1.0 };
            v.iter().map(|&x| Vec3(diverging((x - lo) / span))).collect()
        }
        Channel::Label(v) => v.iter().map(|&l| Vec3(categorical(l))).collect(),
        Channel::Vector(v) => v.iter().map(|c| Vec3(c.0.map(|x| x.clamp(0.0, 1.0)))).collect(),
    };
    let mut out = Mesh::new(mesh.positions.clone(), mesh.faces.clone())?;
    out.set_vector(channel::BISPECTRAL, colours)?;
    Ok(out)
}

fn canvas() -> RgbImage {
    let mut img = RgbImage::from_pixel(W, H, BG);
    let (x0, y0, x1, y1) = (MARGIN, MARGIN, W as i64 - MARGIN, H as i64 - MARGIN);
    line(&mut img, (x0, y1), (x1, y1), AXIS);
    line(&mut img, (x0, y0), (x0, y1), AXIS);
    img
}

fn put(img: &mut RgbImage, x: i64, y: i64, c: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, c);
    }
}

/// Bresenham line.
fn line(img: &mut RgbImage, a: (i64, i64), b: (i64, i64), c: Rgb<u8>) {
    let (mut x, mut y) = a;
    let dx = (b.0 - x).abs();
    let dy = -(b.1 - y).abs();
    let sx = if x < b.0 { 1 } else { -1 };
    let sy = if y < b.1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        put(img, x, y, c);
        if x == b.0 && y == b.1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

fn fill(img: &mut RgbImage, x0: i64, y0: i64, x1: i64, y1: i64, c: Rgb<u8>) {
    for y in y0.min(y1)..=y0.max(y1) {
        for x in x0.min(x1)..=x0.max(x1) {
            put(img, x, y, c);
        }
    }
}

fn save(img: &RgbImage, path: &Path) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    }
    img.save(path).map_err(|e| PipelineError::Plot(format!("{}: {e}", path.display())))
}

/// Polyline of `values` against their index, y scaled to the data range.
pub fn plot_series(values: &[f64], path: &Path) -> Result<(), PipelineError> {
    let mut img = canvas();
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.len() >= 2 {
        let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let pw = (W as i64 - 2 * MARGIN) as f64;
        let ph = (H as i64 - 2 * MARGIN) as f64;
        let pt = |i: usize, v: f64| {
            let x = MARGIN + (i as f64 / (finite.len() - 1) as f64 * pw).round() as i64;
            let y = H as i64 - MARGIN - ((v - lo) / span * ph).round() as i64;
            (x, y)
        };
        for i in 1..finite.len() {
            line(&mut img, pt(i - 1, finite[i - 1]), pt(i, finite[i]), INK);
        }
    }
    save(&img, path)
}

/// Heat map of a row-major matrix, low values blue and high values red.
pub fn plot_matrix(rows: &[Vec<f64>], path: &Path) -> Result<(), PipelineError> {
    let mut img = canvas();
    let nr = rows.len();
    let nc = rows.iter().map(|r| r.len()).max().unwrap_or(0);
    if nr > 0 && nc > 0 {
        let all = rows.iter().flatten().copied().filter(|v| v.is_finite());
        let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        let span = if hi > lo { hi - lo } else { 1.0 };
        let cw = (W as i64 - 2 * MARGIN) as f64 / nc as f64;
        let ch = (H as i64 - 2 * MARGIN) as f64 / nr as f64;
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                let c = diverging((v - lo) / span).map(|x| (x * 255.0).round() as u8);
                let x0 = MARGIN + (j as f64 * cw) as i64 + 1;
                let y0 = MARGIN + (i as f64 * ch) as i64;
                let x1 = MARGIN + ((j + 1) as f64 * cw) as i64 - 1;
                let y1 = MARGIN + ((i + 1) as f64 * ch) as i64 - 2;
                fill(&mut img, x0, y0, x1, y1, Rgb(c));
            }
        }
    }
    save(&img, path)
}

/// Bar histogram of `values` over `[lo, hi]`.
pub fn plot_histogram(values: &[f64], lo: f64, hi: f64, bins: usize, path: &Path) -> Result<(), PipelineError> {
    let mut img = canvas();
    let bins = bins.max(1);
    let mut counts = vec![0usize; bins];
    let span = if hi > lo { hi - lo } else { 1.0 };
    for &v in values.iter().filter(|v| v.is_finite()) {
        let b = (((v - lo) / span) * bins as f64).floor().clamp(0.0, (bins - 1) as f64) as usize;
        counts[b] += 1;
    }
    let top = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let bw = (W as i64 - 2 * MARGIN) as f64 / bins as f64;
    let ph = (H as i64 - 2 * MARGIN) as f64;
    for (b, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let x0 = MARGIN + (b as f64 * bw) as i64 + 1;
        let x1 = MARGIN + ((b + 1) as f64 * bw) as i64 - 1;
        let y1 = H as i64 - MARGIN - 1;
        let y0 = y1 - (c as f64 / top * ph).round() as i64;
        fill(&mut img, x0, y0, x1, y1, INK);
    }
    save(&img, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;

    #[test]
    fn ramps_and_palette() {
        assert_eq!(diverging(0.0), [0.0, 0.0, 1.0]);
        assert_eq!(diverging(0.5), [1.0, 1.0, 1.0]);
        assert_eq!(diverging(1.0), [1.0, 0.0, 0.0]);
        assert_ne!(categorical(1), categorical(2));
    }

    #[test]
    fn false_colour_of_scalar_spans_the_ramp() {
        let mut m = primitives::icosphere::<f64>(1);
        let v: Vec<f64> = (0..m.vertex_count()).map(|i| i as f64).collect();
        m.set_scalar(channel::CURVATURE, v).unwrap();
        let fc = false_colour(&m, channel::CURVATURE).unwrap();
        let c = fc.vector(channel::BISPECTRAL).unwrap();
        assert_eq!(c[0].0, [0.0, 0.0, 1.0]);
        assert_eq!(c[c.len() - 1].0, [1.0, 0.0, 0.0]);
    }

    #[test]
    fn plots_are_png_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        plot_series(&[3.0, 2.0, 1.5, 1.4], &p).unwrap();
        plot_matrix(&[vec![0.0, 1.0], vec![0.5, 0.2]], &dir.path().join("b.png")).unwrap();
        plot_histogram(&[0.1, 0.2, 0.2, 0.9], 0.0, 1.0, 10, &dir.path().join("c.png")).unwrap();
        let img = image::open(&p).unwrap().to_rgb8();
        assert_eq!((img.width(), img.height()), (W, H));
        assert!(img.pixels().any(|px| *px == INK));
    }
}
