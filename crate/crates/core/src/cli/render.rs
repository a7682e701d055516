//! Escape-time renders with piece overlays, written as binary PPM.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{Plane, RenderConfig};
use crate::quaddyn::C64;

pub const OVERLAY: [u8; 3] = [230, 40, 40];
const INTERIOR: [u8; 3] = [0, 0, 0];

/// An RGB raster, row 0 at the top (`im_max`).
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
    /// Pixels whose every sample stayed bounded.
    pub interior: usize,
    pub overlay: usize,
}

impl Image {
    /// Centre of pixel `(x, y)`.
    pub fn center(cfg: &RenderConfig, x: usize, y: usize) -> C64 {
        let (re0, re1, im0, im1) = cfg.window;
        C64::new(
            re0 + (re1 - re0) * (x as f64 + 0.5) / cfg.width as f64,
            im1 - (im1 - im0) * (y as f64 + 0.5) / cfg.height as f64,
        )
    }

    /// Pixel containing `z`, if inside the window.
    pub fn pixel_of(cfg: &RenderConfig, z: C64) -> Option<(usize, usize)> {
        let (re0, re1, im0, im1) = cfg.window;
        let x = ((z.re - re0) / (re1 - re0) * cfg.width as f64).floor();
        let y = ((im1 - z.im) / (im1 - im0) * cfg.height as f64).floor();
        (x >= 0.0 && y >= 0.0 && x < cfg.width as f64 && y < cfg.height as f64).then(|| (x as usize, y as usize))
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    /// P6 with `#` comment lines after the magic number.
    pub fn to_ppm(&self, comments: &[String]) -> Vec<u8> {
        let mut out = b"P6\n".to_vec();
        for c in comments {
            for line in c.lines() {
                out.extend_from_slice(format!("# {line}\n").as_bytes());
            }
        }
        out.extend_from_slice(format!("{} {}\n255\n", self.width, self.height).as_bytes());
        out.extend_from_slice(&self.pixels);
        out
    }
}

/// Escape count of `z -> z^2 + c` from `z0`, or `None` if bounded for `cap` steps.
fn escape(z0: C64, c: C64, cap: u32) -> Option<(u32, f64)> {
    let mut z = z0;
    for k in 0..cap {
        let r2 = z.norm_sqr();
        if r2 > 1e6 {
            return Some((k, r2));
        }
        z = z * z + c;
    }
    None
}

/// Grey level of an escaping sample from the smooth iteration count.
fn shade(k: u32, r2: f64) -> f64 {
    let smooth = k as f64 + 1.0 - (0.5 * r2.ln()).ln() / std::f64::consts::LN_2;
    0.5 + 0.5 * (0.35 * smooth).cos()
}

/// Escape-time image of the Julia set of `z^2 + c` or of the Mandelbrot set. With
/// `supersample = s > 1` each pixel averages `s^2` jittered samples drawn from a
/// generator seeded by `seed` and the pixel index, so pixels are independent of the
/// thread schedule.
pub fn escape_time(cfg: &RenderConfig, c: C64, seed: u64) -> Image {
    let (w, h, s) = (cfg.width, cfg.height, cfg.supersample);
    let (re0, re1, im0, im1) = cfg.window;
    let (dx, dy) = ((re1 - re0) / w as f64, (im1 - im0) / h as f64);
    let rows: Vec<(Vec<u8>, usize)> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut row = Vec::with_capacity(3 * w);
            let mut interior = 0;
            for x in 0..w {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((y * w + x) as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
                let mut bounded = 0;
                let mut grey = 0.0;
                for i in 0..s * s {
                    let (ox, oy) = if s == 1 {
                        (0.5, 0.5)
                    } else {
                        (((i % s) as f64 + rng.gen::<f64>()) / s as f64, ((i / s) as f64 + rng.gen::<f64>()) / s as f64)
                    };
                    let p = C64::new(re0 + dx * (x as f64 + ox), im1 - dy * (y as f64 + oy));
                    let e = match cfg.plane {
                        Plane::Julia => escape(p, c, cfg.iterations),
                        Plane::Mandelbrot => escape(C64::new(0.0, 0.0), p, cfg.iterations),
                    };
                    match e {
                        Some((k, r2)) => grey += shade(k, r2),
                        None => bounded += 1,
                    }
                }
                if bounded == s * s {
                    interior += 1;
                    row.extend_from_slice(&INTERIOR);
                } else {
                    let g = grey / (s * s) as f64;
                    let v = (40.0 + 215.0 * g).round() as u8;
                    row.extend_from_slice(&[v / 3, v / 2, v]);
                }
            }
            (row, interior)
        })
        .collect();
    let interior = rows.iter().map(|r| r.1).sum();
    Image {
        width: w,
        height: h,
        pixels: rows.into_iter().flat_map(|r| r.0).collect(),
        interior,
        overlay: 0,
    }
}

/// Paint closed polylines: each segment is sampled at a quarter pixel and every pixel
/// containing a sample is coloured.
pub fn overlay(img: &mut Image, cfg: &RenderConfig, curves: &[&[C64]]) {
    let (re0, re1, im0, im1) = cfg.window;
    let px = ((re1 - re0) / cfg.width as f64).min((im1 - im0) / cfg.height as f64);
    let mut painted = vec![false; img.width * img.height];
    for curve in curves {
        let n = curve.len();
        for i in 0..n {
            let (a, b) = (curve[i], curve[(i + 1) % n]);
            let k = ((b - a).norm() / (0.25 * px)).ceil().clamp(1.0, 1e7) as usize;
            for j in 0..=k {
                let z = a + (b - a) * (j as f64 / k as f64);
                if let Some((x, y)) = Image::pixel_of(cfg, z) {
                    painted[y * img.width + x] = true;
                }
            }
        }
    }
    for (i, _) in painted.iter().enumerate().filter(|p| *p.1) {
        img.pixels[3 * i..3 * i + 3].copy_from_slice(&OVERLAY);
    }
    img.overlay = painted.iter().filter(|&&p| p).count();
}

#[cfg(test)]
mod tests {
    use super::super::config::Overlay;
    use super::*;

    fn cfg(w: usize, window: (f64, f64, f64, f64)) -> RenderConfig {
        RenderConfig {
            plane: Plane::Julia,
            width: w,
            height: w,
            window,
            iterations: 200,
            overlay: Overlay::None,
            supersample: 1,
        }
    }

    #[test]
    fn pixel_centres_round_trip() {
        let c = cfg(7, (-1.0, 3.0, -2.0, 0.0));
        for (x, y) in [(0, 0), (6, 6), (3, 1)] {
            assert_eq!(Image::pixel_of(&c, Image::center(&c, x, y)), Some((x, y)));
        }
        assert_eq!(Image::pixel_of(&c, C64::new(5.0, -1.0)), None);
    }

    #[test]
    fn disc_interior_of_z_squared() {
        // c = 0: the filled Julia set is the closed unit disc
        let c = cfg(101, (-2.0, 2.0, -2.0, 2.0));
        let img = escape_time(&c, C64::new(0.0, 0.0), 0);
        let expected = (0..101 * 101)
            .filter(|i| Image::center(&c, i % 101, i / 101).norm() <= 1.0)
            .count();
        assert!((img.interior as f64 - expected as f64).abs() <= 0.02 * expected as f64);
        assert_eq!(img.get(50, 50), INTERIOR);
    }

    #[test]
    fn jitter_is_seeded() {
        let mut c = cfg(24, (-2.0, 2.0, -2.0, 2.0));
        c.supersample = 3;
        let a = escape_time(&c, C64::new(-1.0, 0.0), 7);
        assert_eq!(a, escape_time(&c, C64::new(-1.0, 0.0), 7));
        assert_ne!(a.pixels, escape_time(&c, C64::new(-1.0, 0.0), 8).pixels);
    }

    #[test]
    fn ppm_layout() {
        let img = Image {
            width: 2,
            height: 1,
            pixels: vec![1, 2, 3, 4, 5, 6],
            interior: 0,
            overlay: 0,
        };
        let b = img.to_ppm(&["hash abc".into()]);
        assert_eq!(b, b"P6\n# hash abc\n2 1\n255\n\x01\x02\x03\x04\x05\x06".to_vec());
    }

    #[test]
    fn overlay_pixels_lie_on_the_curve() {
        let c = cfg(64, (-2.0, 2.0, -2.0, 2.0));
        let mut img = escape_time(&c, C64::new(0.0, 0.0), 0);
        let circle = crate::conformal::circle(C64::new(0.1, 0.0), 1.3, 40);
        overlay(&mut img, &c, &[&circle]);
        let px = 4.0 / 64.0;
        assert!(img.overlay > 0);
        for y in 0..64 {
            for x in 0..64 {
                if img.get(x, y) == OVERLAY {
                    let d = crate::geometry::distance_to_polyline(&circle, Image::center(&c, x, y));
                    assert!(d <= px, "pixel ({x}, {y}) is {d} from the curve");
                }
            }
        }
    }
}
