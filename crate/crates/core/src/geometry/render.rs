//! Orthographic depth rendering of a mesh as seen from behind the sensor surface.
//!
//! Camera frame: rays travel along +z from the `near` plane, the sensor
//! surface is the plane `z = gel_plane`, image columns run along +x and
//! image rows run along -y (row 0 is the top of the image).

use std::path::Path;

use image::{ImageBuffer, Luma};
use nalgebra::{Point3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bvh::{Bvh, Ray};
use super::mesh::{transform_mesh, TriangleMesh};
use super::pose::Pose;
use crate::error::{Error, Result};

/// Depth per unit in height-map PNG files, mm.
pub const HEIGHT_PNG_UNIT: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthCamera {
    pub width: u32,
    pub height: u32,
    /// mm per pixel
    pub pixel_pitch: f64,
    pub near: f64,
    pub far: f64,
    /// Camera frame to world frame.
    pub view: Pose,
}

impl Default for DepthCamera {
    fn default() -> Self {
        Self {
            width: 320,
            height: 240,
            pixel_pitch: 0.06,
            near: -4.0,
            far: 500.0,
            view: Pose::identity(),
        }
    }
}

impl DepthCamera {
    /// 640×480 at 0.03 mm: same field of view as the default at twice the resolution.
    pub fn high_resolution() -> Self {
        Self {
            width: 640,
            height: 480,
            pixel_pitch: 0.03,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < 8 || self.height < 8 {
            return Err(Error::InvalidCamera(format!(
                "resolution {}x{} below 8x8",
                self.width, self.height
            )));
        }
        if !(self.pixel_pitch > 0.0 && self.pixel_pitch.is_finite()) {
            return Err(Error::InvalidCamera(format!("pixel pitch {}", self.pixel_pitch)));
        }
        if !(self.near < self.far) {
            return Err(Error::InvalidCamera(format!("near {} >= far {}", self.near, self.far)));
        }
        Ok(())
    }

    pub fn with_view(self, view: Pose) -> Self {
        Self { view, ..self }
    }

    /// Camera-frame (x, y) of a pixel centre in mm.
    pub fn pixel_center(&self, col: u32, row: u32) -> (f64, f64) {
        pixel_center(self.width, self.height, self.pixel_pitch, col, row)
    }

    pub fn field_of_view(&self) -> (f64, f64) {
        (self.width as f64 * self.pixel_pitch, self.height as f64 * self.pixel_pitch)
    }
}

fn pixel_center(width: u32, height: u32, pitch: f64, col: u32, row: u32) -> (f64, f64) {
    (
        (col as f64 + 0.5 - width as f64 / 2.0) * pitch,
        (height as f64 / 2.0 - row as f64 - 0.5) * pitch,
    )
}

/// Per-pixel indentation depth (mm) of the sensor surface, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightMap {
    width: u32,
    height: u32,
    pixel_pitch: f64,
    depths: Vec<f64>,
}

impl HeightMap {
    pub fn new(width: u32, height: u32, pixel_pitch: f64, depths: Vec<f64>) -> Result<Self> {
        if depths.len() != (width as usize) * (height as usize) {
            return Err(Error::InvalidInput(format!(
                "{} depths for a {width}x{height} map",
                depths.len()
            )));
        }
        if !(pixel_pitch > 0.0) {
            return Err(Error::InvalidInput(format!("pixel pitch {pixel_pitch}")));
        }
        if let Some(d) = depths.iter().find(|d| !d.is_finite() || **d < 0.0) {
            return Err(Error::InvalidInput(format!("depth {d} is negative or non-finite")));
        }
        Ok(Self {
            width,
            height,
            pixel_pitch,
            depths,
        })
    }

    pub fn zeros(width: u32, height: u32, pixel_pitch: f64) -> Self {
        Self {
            width,
            height,
            pixel_pitch,
            depths: vec![0.0; width as usize * height as usize],
        }
    }

    /// Fills every pixel from its camera-frame centre `(x, y)` in mm.
    pub fn from_fn(width: u32, height: u32, pixel_pitch: f64, f: impl Fn(f64, f64) -> f64) -> Self {
        let depths = (0..height)
            .flat_map(|row| (0..width).map(move |col| (col, row)))
            .map(|(col, row)| {
                let (x, y) = pixel_center(width, height, pixel_pitch, col, row);
                f(x, y).max(0.0)
            })
            .collect();
        Self {
            width,
            height,
            pixel_pitch,
            depths,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixel_pitch(&self) -> f64 {
        self.pixel_pitch
    }

    pub fn depths(&self) -> &[f64] {
        &self.depths
    }

    pub fn get(&self, col: u32, row: u32) -> f64 {
        self.depths[row as usize * self.width as usize + col as usize]
    }

    pub fn max_depth(&self) -> f64 {
        self.depths.iter().copied().fold(0.0, f64::max)
    }

    pub fn pixel_center(&self, col: u32, row: u32) -> (f64, f64) {
        pixel_center(self.width, self.height, self.pixel_pitch, col, row)
    }

    /// Unweighted centroid (camera-frame mm) of pixels deeper than `threshold`.
    pub fn footprint_centroid(&self, threshold: f64) -> Option<(f64, f64)> {
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
        for row in 0..self.height {
            for col in 0..self.width {
                if self.get(col, row) > threshold {
                    let (x, y) = self.pixel_center(col, row);
                    sx += x;
                    sy += y;
                    n += 1;
                }
            }
        }
        (n > 0).then(|| (sx / n as f64, sy / n as f64))
    }

    /// 16-bit grayscale PNG, one unit per [`HEIGHT_PNG_UNIT`] mm; deeper values saturate.
    pub fn save_png(&self, path: &Path) -> Result<()> {
        let pixels = self
            .depths
            .iter()
            .map(|d| (d / HEIGHT_PNG_UNIT).round().clamp(0.0, u16::MAX as f64) as u16)
            .collect();
        let image = ImageBuffer::<Luma<u16>, Vec<u16>>::from_raw(self.width, self.height, pixels)
            .expect("buffer matches the map size");
        image.save(path)?;
        Ok(())
    }

    pub fn load_png(path: &Path, pixel_pitch: f64) -> Result<Self> {
        let image = image::open(path)?.into_luma16();
        let (w, h) = image.dimensions();
        Self::new(w, h, pixel_pitch, image.into_raw().into_iter().map(|v| v as f64 * HEIGHT_PNG_UNIT).collect())
    }

    pub(crate) fn map_depths(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            depths: self.depths.iter().map(|&d| f(d)).collect(),
            ..self.clone()
        }
    }
}

/// First-hit camera-frame z for every pixel ray; `INFINITY` where the ray misses.
#[derive(Debug, Clone)]
pub struct SurfaceScan {
    width: u32,
    height: u32,
    pixel_pitch: f64,
    near: f64,
    hits: Vec<f64>,
}

impl SurfaceScan {
    pub fn capture(mesh: &TriangleMesh, pose: &Pose, camera: &DepthCamera) -> Self {
        let to_camera = camera.view.inverse().compose(pose);
        let local = transform_mesh(mesh, &to_camera);
        let bvh = Bvh::build(&local);
        let t_max = camera.far - camera.near;
        let width = camera.width as usize;
        let mut hits = vec![f64::INFINITY; width * camera.height as usize];
        hits.par_chunks_mut(width).enumerate().for_each(|(row, line)| {
            for (col, slot) in line.iter_mut().enumerate() {
                let (x, y) = camera.pixel_center(col as u32, row as u32);
                let ray = Ray {
                    origin: Point3::new(x, y, camera.near),
                    direction: Vector3::z(),
                };
                if let Some(hit) = bvh.nearest_hit(&ray, t_max) {
                    *slot = camera.near + hit.t;
                }
            }
        });
        Self {
            width: camera.width,
            height: camera.height,
            pixel_pitch: camera.pixel_pitch,
            near: camera.near,
            hits,
        }
    }

    pub fn any_hit(&self) -> bool {
        self.hits.iter().any(|z| z.is_finite())
    }

    /// Smallest hit z, i.e. the object point closest to the camera.
    pub fn closest(&self) -> Option<f64> {
        self.hits.iter().copied().filter(|z| z.is_finite()).min_by(f64::total_cmp)
    }

    /// Height map after moving the object `advance` mm toward the camera.
    ///
    /// Equivalent to re-rendering the translated object as long as no
    /// surface is pushed behind the near plane; depths are clamped to `max_depth`.
    pub fn height_map(&self, gel_plane: f64, advance: f64, max_depth: f64) -> HeightMap {
        let depths = self
            .hits
            .iter()
            .map(|&z| if z.is_finite() { (gel_plane - (z - advance)).clamp(0.0, max_depth) } else { 0.0 })
            .collect();
        HeightMap {
            width: self.width,
            height: self.height,
            pixel_pitch: self.pixel_pitch,
            depths,
        }
    }

    pub fn near(&self) -> f64 {
        self.near
    }
}

/// Penetration of the posed mesh past `gel_plane`, one orthographic ray per pixel.
pub fn render_depth(mesh: &TriangleMesh, pose: &Pose, camera: &DepthCamera, gel_plane: f64) -> HeightMap {
    SurfaceScan::capture(mesh, pose, camera).height_map(gel_plane, 0.0, (gel_plane - camera.near).max(0.0))
}
