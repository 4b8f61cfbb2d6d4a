//! Photometric stand-in for a physical sensor: three coloured directional
//! lights shade the smoothed gel surface. Used to produce calibration
//! pairs for the lookup table.

use image::{Rgb, RgbImage};
use nalgebra::Vector3;

use super::filter::{gradients, smooth_heightmap};
use crate::geometry::HeightMap;

#[derive(Debug, Clone, Copy)]
pub struct Light {
    pub direction: Vector3<f64>,
    pub tint: [f64; 3],
}

impl Light {
    pub fn new(azimuth: f64, elevation: f64, tint: [f64; 3]) -> Self {
        Self {
            direction: Vector3::new(
                elevation.cos() * azimuth.cos(),
                elevation.cos() * azimuth.sin(),
                elevation.sin(),
            ),
            tint,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PhongReference {
    pub lights: Vec<Light>,
    pub background: RgbImage,
    pub sigma: f64,
}

impl PhongReference {
    /// Red, green and blue lights 120° apart in azimuth at 45° elevation.
    pub fn new(width: u32, height: u32, sigma: f64) -> Self {
        let elevation = 45f64.to_radians();
        let lights = [[90.0, 20.0, 20.0], [20.0, 90.0, 20.0], [20.0, 20.0, 90.0]]
            .into_iter()
            .enumerate()
            .map(|(k, tint)| Light::new((90.0 + 120.0 * k as f64).to_radians(), elevation, tint))
            .collect();
        Self {
            lights,
            background: default_background(width, height),
            sigma,
        }
    }

    /// Colour change relative to a flat gel for surface slope `(gx, gy)`.
    pub fn shade(&self, gx: f64, gy: f64) -> [f64; 3] {
        let n = Vector3::new(-gx, -gy, 1.0).normalize();
        let mut out = [0.0; 3];
        for light in &self.lights {
            let lit = n.dot(&light.direction).max(0.0) - light.direction.z;
            for (c, o) in out.iter_mut().enumerate() {
                *o += light.tint[c] * lit;
            }
        }
        out
    }

    pub fn render(&self, map: &HeightMap) -> RgbImage {
        let g = gradients(&smooth_heightmap(map, self.sigma));
        let mut img = self.background.clone();
        for (col, row, px) in img.enumerate_pixels_mut() {
            let (gx, gy) = g.at(col, row);
            if gx == 0.0 && gy == 0.0 {
                continue;
            }
            let delta = self.shade(gx, gy);
            for c in 0..3 {
                px.0[c] = (px.0[c] as f64 + delta[c]).round().clamp(0.0, 255.0) as u8;
            }
        }
        img
    }
}

/// Mild vignette around a warm grey, like an unlit gel seen through the sensor optics.
pub fn default_background(width: u32, height: u32) -> RgbImage {
    let base = [150.0, 140.0, 130.0];
    let (cx, cy) = (width as f64 / 2.0, height as f64 / 2.0);
    let r_max2 = cx * cx + cy * cy;
    RgbImage::from_fn(width, height, |col, row| {
        let dx = col as f64 + 0.5 - cx;
        let dy = row as f64 + 0.5 - cy;
        let fall = 25.0 * (dx * dx + dy * dy) / r_max2;
        Rgb(base.map(|b| (b - fall).round() as u8))
    })
}
