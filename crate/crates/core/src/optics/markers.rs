use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::contact::CONTACT_THRESHOLD;
use crate::error::{Error, Result};
use crate::geometry::HeightMap;

/// Marker displacement decays to zero over this many pixels outside the footprint.
pub const FALLOFF_PIXELS: f64 = 10.0;

const MARKER_COLOR: Rgb<u8> = Rgb([25, 25, 25]);

/// Dots printed on the gel. Positions are (column, row) in pixels with
/// pixel centres at integer coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkerField {
    rest: Vec<[f64; 2]>,
    displacement: Vec<[f64; 2]>,
    radius: f64,
}

impl MarkerField {
    /// Evenly spaced `cols × rows` grid covering a `width × height` image.
    pub fn grid(width: u32, height: u32, cols: u32, rows: u32, radius: f64) -> Result<Self> {
        if cols == 0 || rows == 0 {
            return Err(Error::InvalidInput("marker grid needs at least one row and column".into()));
        }
        let (sx, sy) = (width as f64 / cols as f64, height as f64 / rows as f64);
        if sx.min(sy) <= 2.0 * radius {
            return Err(Error::InvalidInput(format!(
                "marker spacing {:.2} px does not exceed twice the radius {radius}",
                sx.min(sy)
            )));
        }
        let rest: Vec<[f64; 2]> = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| [((c as f64 + 0.5) * sx).floor(), ((r as f64 + 0.5) * sy).floor()]))
            .collect();
        Ok(Self {
            displacement: vec![[0.0; 2]; rest.len()],
            rest,
            radius,
        })
    }

    pub fn from_positions(rest: Vec<[f64; 2]>, radius: f64) -> Self {
        Self {
            displacement: vec![[0.0; 2]; rest.len()],
            rest,
            radius,
        }
    }

    pub fn len(&self) -> usize {
        self.rest.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rest.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn rest(&self) -> &[[f64; 2]] {
        &self.rest
    }

    pub fn displacements(&self) -> &[[f64; 2]] {
        &self.displacement
    }

    pub fn positions(&self) -> Vec<[f64; 2]> {
        self.rest
            .iter()
            .zip(&self.displacement)
            .map(|(r, d)| [r[0] + d[0], r[1] + d[1]])
            .collect()
    }

    /// Sum of displacement magnitudes, pixels.
    pub fn total_motion(&self) -> f64 {
        self.displacement.iter().map(|d| d[0].hypot(d[1])).sum()
    }
}

/// Drags markers with the gel: full shear inside the contact footprint,
/// fading linearly to zero across [`FALLOFF_PIXELS`] outside it.
///
/// `shear_dir` is in camera coordinates (y up); image rows grow downward.
pub fn displace_markers(field: &MarkerField, shear_displacement: f64, shear_dir: [f64; 2], contact: &HeightMap) -> MarkerField {
    let pixels = shear_displacement / contact.pixel_pitch();
    let step = [shear_dir[0] * pixels, -shear_dir[1] * pixels];
    let (w, h) = (contact.width() as i64, contact.height() as i64);
    let in_contact = |c: i64, r: i64| (0..w).contains(&c) && (0..h).contains(&r) && contact.get(c as u32, r as u32) > CONTACT_THRESHOLD;
    let band = FALLOFF_PIXELS as i64;
    let displacement = field
        .rest
        .iter()
        .map(|&[x, y]| {
            let (c0, r0) = (x.round() as i64, y.round() as i64);
            let weight = if in_contact(c0, r0) {
                1.0
            } else {
                let mut best = f64::INFINITY;
                for r in r0 - band..=r0 + band {
                    for c in c0 - band..=c0 + band {
                        if in_contact(c, r) {
                            best = best.min((((c - c0).pow(2) + (r - r0).pow(2)) as f64).sqrt());
                        }
                    }
                }
                (1.0 - best / FALLOFF_PIXELS).max(0.0)
            };
            [weight * step[0], weight * step[1]]
        })
        .collect();
    MarkerField {
        rest: field.rest.clone(),
        displacement,
        radius: field.radius,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TactileFrame {
    pub rgb: RgbImage,
    pub markers: Vec<[f64; 2]>,
    /// Seconds since the gripper closed.
    pub timestamp: f64,
}

/// Paints markers as dark discs over the shaded image.
pub fn compose_frame(mut rgb: RgbImage, markers: &MarkerField, timestamp: f64) -> TactileFrame {
    let positions = markers.positions();
    let r = markers.radius;
    let (w, h) = rgb.dimensions();
    for &[x, y] in &positions {
        let (c0, c1) = ((x - r).floor().max(0.0) as u32, ((x + r).ceil()).min(w as f64 - 1.0));
        let (r0, r1) = ((y - r).floor().max(0.0) as u32, ((y + r).ceil()).min(h as f64 - 1.0));
        if c1 < 0.0 || r1 < 0.0 {
            continue;
        }
        for row in r0..=r1 as u32 {
            for col in c0..=c1 as u32 {
                if (col as f64 - x).powi(2) + (row as f64 - y).powi(2) <= r * r {
                    rgb.put_pixel(col, row, MARKER_COLOR);
                }
            }
        }
    }
    TactileFrame {
        rgb,
        markers: positions,
        timestamp,
    }
}
