//! Gradient-to-colour lookup table.
//!
//! Gradients are binned by direction (uniform in angle) and magnitude
//! (uniform up to the steepest calibration slope). Each bin stores a
//! per-channel affine model of colour change against the centred gradient.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use image::RgbImage;
use nalgebra::{Matrix3, Vector3};

use super::filter::{gradients, smooth_heightmap};
use super::reference::PhongReference;
use crate::error::{Error, Result};
use crate::geometry::HeightMap;

const MAGIC: &[u8; 8] = b"TACLUT\0\0";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LookupSettings {
    pub direction_bins: usize,
    pub magnitude_bins: usize,
    /// Gaussian gel smoothing applied before differentiation, pixels.
    pub sigma: f64,
    pub min_samples: usize,
}

impl Default for LookupSettings {
    fn default() -> Self {
        Self {
            direction_bins: 64,
            magnitude_bins: 32,
            sigma: 2.0,
            min_samples: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct BinFit {
    mean: [f64; 2],
    /// Per channel: offset, x slope, y slope.
    coeffs: [[f64; 3]; 3],
}

impl BinFit {
    fn eval(&self, gx: f64, gy: f64) -> [f64; 3] {
        let (dx, dy) = (gx - self.mean[0], gy - self.mean[1]);
        self.coeffs.map(|[a, b, c]| a + b * dx + c * dy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LookupTable {
    direction_bins: usize,
    magnitude_bins: usize,
    max_magnitude: f64,
    pixel_pitch: f64,
    sigma: f64,
    bins: Vec<BinFit>,
    populated: Vec<bool>,
    background: RgbImage,
    residual_rms: [f64; 3],
}

impl LookupTable {
    pub fn background(&self) -> &RgbImage {
        &self.background
    }

    pub fn residual_rms(&self) -> [f64; 3] {
        self.residual_rms
    }

    pub fn pixel_pitch(&self) -> f64 {
        self.pixel_pitch
    }

    /// Smoothing the table was calibrated with.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn resolution(&self) -> (u32, u32) {
        self.background.dimensions()
    }

    pub fn bin_counts(&self) -> (usize, usize) {
        (self.direction_bins, self.magnitude_bins)
    }

    pub fn populated_bins(&self) -> usize {
        self.populated.iter().filter(|&&p| p).count()
    }

    pub fn is_populated(&self, direction: usize, magnitude: usize) -> bool {
        self.populated[magnitude * self.direction_bins + direction]
    }

    pub fn max_magnitude(&self) -> f64 {
        self.max_magnitude
    }

    /// Upper edges of the magnitude bins.
    pub fn magnitude_edges(&self) -> Vec<f64> {
        (1..=self.magnitude_bins)
            .map(|k| self.max_magnitude * k as f64 / self.magnitude_bins as f64)
            .collect()
    }

    fn bin_index(&self, gx: f64, gy: f64) -> usize {
        bin_index(gx, gy, self.max_magnitude, self.direction_bins, self.magnitude_bins)
    }

    /// Colour change for a slope; exactly zero on a flat surface.
    pub fn lookup(&self, gx: f64, gy: f64) -> [f64; 3] {
        let m = gx.hypot(gy);
        if m == 0.0 {
            return [0.0; 3];
        }
        let (gx, gy) = if m > self.max_magnitude {
            let s = self.max_magnitude / m;
            (gx * s, gy * s)
        } else {
            (gx, gy)
        };
        self.bins[self.bin_index(gx, gy)].eval(gx, gy)
    }

    /// Calibrates against the built-in photometric reference using sphere presses.
    pub fn from_reference(reference: &PhongReference, pixel_pitch: f64, settings: &LookupSettings) -> Result<Self> {
        let (w, h) = reference.background.dimensions();
        let pairs: Vec<(HeightMap, RgbImage)> = sphere_press_maps(w, h, pixel_pitch)
            .into_iter()
            .map(|m| {
                let img = reference.render(&m);
                (m, img)
            })
            .collect();
        calibrate_lookup(&reference.background, &pairs, settings)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        let (w, h) = self.background.dimensions();
        for v in [VERSION, self.direction_bins as u32, self.magnitude_bins as u32, w, h] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let mut put = |v: f64| out.extend_from_slice(&v.to_le_bytes());
        for v in [self.max_magnitude, self.pixel_pitch, self.sigma] {
            put(v);
        }
        self.residual_rms.iter().for_each(|&v| put(v));
        for (bin, &populated) in self.bins.iter().zip(&self.populated) {
            put(if populated { 1.0 } else { 0.0 });
            bin.mean.iter().for_each(|&v| put(v));
            bin.coeffs.iter().flatten().for_each(|&v| put(v));
        }
        out.extend_from_slice(self.background.as_raw());
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        file.write_all(&out)?;
        file.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        let mut cursor = Cursor { bytes: &bytes, pos: 0 };
        if cursor.take(8)? != MAGIC {
            return Err(Error::TableFormat("bad magic".into()));
        }
        let version = cursor.u32()?;
        if version != VERSION {
            return Err(Error::TableFormat(format!("unsupported version {version}")));
        }
        let direction_bins = cursor.u32()? as usize;
        let magnitude_bins = cursor.u32()? as usize;
        let (w, h) = (cursor.u32()?, cursor.u32()?);
        if direction_bins < 8 || magnitude_bins < 8 {
            return Err(Error::TableFormat("fewer than 8 bins".into()));
        }
        let max_magnitude = cursor.f64()?;
        let pixel_pitch = cursor.f64()?;
        let sigma = cursor.f64()?;
        let residual_rms = [cursor.f64()?, cursor.f64()?, cursor.f64()?];
        let total = direction_bins.saturating_mul(magnitude_bins);
        if total.saturating_mul(12 * 8) > bytes.len() {
            return Err(Error::TableFormat(format!("{total} bins do not fit in {} bytes", bytes.len())));
        }
        let mut bins = Vec::with_capacity(total);
        let mut populated = Vec::with_capacity(total);
        for _ in 0..total {
            populated.push(cursor.f64()? != 0.0);
            let mean = [cursor.f64()?, cursor.f64()?];
            let mut coeffs = [[0.0; 3]; 3];
            for c in coeffs.iter_mut().flatten() {
                *c = cursor.f64()?;
            }
            bins.push(BinFit { mean, coeffs });
        }
        let raw = cursor.take(w as usize * h as usize * 3)?.to_vec();
        if cursor.pos != bytes.len() {
            return Err(Error::TableFormat("trailing bytes".into()));
        }
        let background =
            RgbImage::from_raw(w, h, raw).ok_or_else(|| Error::TableFormat("background size".into()))?;
        Ok(Self {
            direction_bins,
            magnitude_bins,
            max_magnitude,
            pixel_pitch,
            sigma,
            bins,
            populated,
            background,
            residual_rms,
        })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        let slice = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::TableFormat(format!("truncated at byte {}", self.pos)))?;
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn bin_index(gx: f64, gy: f64, max_magnitude: f64, direction_bins: usize, magnitude_bins: usize) -> usize {
    let angle = gy.atan2(gx) + PI;
    let d = ((angle / (2.0 * PI) * direction_bins as f64) as usize).min(direction_bins - 1);
    let m = ((gx.hypot(gy) / max_magnitude * magnitude_bins as f64) as usize).min(magnitude_bins - 1);
    m * direction_bins + d
}

/// Sphere (R = 5 mm) presses at three depths and five positions.
pub fn sphere_press_maps(width: u32, height: u32, pixel_pitch: f64) -> Vec<HeightMap> {
    const RADIUS: f64 = 5.0;
    let (fw, fh) = (width as f64 * pixel_pitch, height as f64 * pixel_pitch);
    let (ox, oy) = (fw * 0.2, fh * 0.2);
    let centers = [(0.0, 0.0), (-ox, -oy), (ox, -oy), (-ox, oy), (ox, oy)];
    let mut maps = Vec::new();
    for depth in [0.5, 1.0, 1.5] {
        for &(cx, cy) in &centers {
            maps.push(HeightMap::from_fn(width, height, pixel_pitch, |x, y| {
                let r2 = (x - cx).powi(2) + (y - cy).powi(2);
                if r2 < RADIUS * RADIUS {
                    depth - (RADIUS - (RADIUS * RADIUS - r2).sqrt())
                } else {
                    0.0
                }
            }));
        }
    }
    maps
}

struct Sample {
    bin: usize,
    gx: f64,
    gy: f64,
    delta: [f64; 3],
}

/// Least-squares fit of colour change against surface slope, per bin.
///
/// `background` is the sensor image with nothing in contact. Bins with
/// fewer than `min_samples` samples borrow the fit of the nearest
/// populated bin.
pub fn calibrate_lookup(
    background: &RgbImage,
    reference: &[(HeightMap, RgbImage)],
    settings: &LookupSettings,
) -> Result<LookupTable> {
    let (dirs, mags) = (settings.direction_bins, settings.magnitude_bins);
    if dirs < 8 || mags < 8 {
        return Err(Error::InvalidInput("lookup tables need at least 8 bins per axis".into()));
    }
    let total = dirs * mags;
    let (w, h) = background.dimensions();
    let pitch = reference.first().map(|(m, _)| m.pixel_pitch()).unwrap_or(0.0);
    let mut raw = Vec::new();
    for (map, img) in reference {
        if (map.width(), map.height()) != (w, h) {
            return Err(Error::ResolutionMismatch {
                expected: (w, h),
                actual: (map.width(), map.height()),
            });
        }
        if img.dimensions() != (w, h) {
            return Err(Error::ResolutionMismatch {
                expected: (w, h),
                actual: img.dimensions(),
            });
        }
        if map.pixel_pitch() != pitch {
            return Err(Error::InvalidInput("reference maps disagree on pixel pitch".into()));
        }
        let g = gradients(&smooth_heightmap(map, settings.sigma));
        for (i, (px, bg)) in img.pixels().zip(background.pixels()).enumerate() {
            let (gx, gy) = (g.gx[i], g.gy[i]);
            if gx == 0.0 && gy == 0.0 {
                continue;
            }
            let delta = [0, 1, 2].map(|c| px.0[c] as f64 - bg.0[c] as f64);
            raw.push((gx, gy, delta));
        }
    }
    let max_magnitude = raw.iter().map(|(gx, gy, _)| gx.hypot(*gy)).fold(0.0, f64::max);
    if max_magnitude == 0.0 {
        return Err(Error::InsufficientCoverage { populated: 0, total });
    }
    let samples: Vec<Sample> = raw
        .into_iter()
        .map(|(gx, gy, delta)| Sample {
            bin: bin_index(gx, gy, max_magnitude, dirs, mags),
            gx,
            gy,
            delta,
        })
        .collect();

    let mut counts = vec![0usize; total];
    let mut sums = vec![[0.0f64; 2]; total];
    for s in &samples {
        counts[s.bin] += 1;
        sums[s.bin][0] += s.gx;
        sums[s.bin][1] += s.gy;
    }
    let means: Vec<[f64; 2]> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &n)| if n > 0 { [s[0] / n as f64, s[1] / n as f64] } else { [0.0; 2] })
        .collect();
    let mut normal = vec![Matrix3::<f64>::zeros(); total];
    let mut rhs = vec![[Vector3::<f64>::zeros(); 3]; total];
    for s in &samples {
        let x = Vector3::new(1.0, s.gx - means[s.bin][0], s.gy - means[s.bin][1]);
        normal[s.bin] += x * x.transpose();
        for c in 0..3 {
            rhs[s.bin][c] += x * s.delta[c];
        }
    }

    let populated: Vec<bool> = counts.iter().map(|&n| n >= settings.min_samples).collect();
    let filled = populated.iter().filter(|&&p| p).count();
    if filled * 2 < total {
        return Err(Error::InsufficientCoverage { populated: filled, total });
    }
    if reference.len() < 5 {
        return Err(Error::InvalidInput(format!(
            "{} reference pairs, at least 5 required",
            reference.len()
        )));
    }

    let mut bins: Vec<BinFit> = (0..total)
        .map(|b| {
            if !populated[b] {
                return BinFit::default();
            }
            let n = counts[b] as f64;
            let coeffs = match normal[b].try_inverse().filter(|_| normal[b].determinant().abs() > 1e-18 * n.powi(3)) {
                Some(inv) => [0, 1, 2].map(|c| {
                    let beta = inv * rhs[b][c];
                    [beta.x, beta.y, beta.z]
                }),
                None => [0, 1, 2].map(|c| [rhs[b][c].x / n, 0.0, 0.0]),
            };
            BinFit { mean: means[b], coeffs }
        })
        .collect();
    for b in 0..total {
        if populated[b] {
            continue;
        }
        let (d0, m0) = ((b % dirs) as isize, (b / dirs) as isize);
        let nearest = (0..total)
            .filter(|&o| populated[o])
            .min_by_key(|&o| {
                let (d1, m1) = ((o % dirs) as isize, (o / dirs) as isize);
                let dd = (d1 - d0).abs().min(dirs as isize - (d1 - d0).abs());
                (dd * dd + (m1 - m0) * (m1 - m0), o)
            })
            .expect("at least half the bins are populated");
        bins[b] = bins[nearest];
    }

    let mut sq = [0.0; 3];
    for s in &samples {
        let predicted = bins[s.bin].eval(s.gx, s.gy);
        for c in 0..3 {
            sq[c] += (predicted[c] - s.delta[c]).powi(2);
        }
    }
    let residual_rms = sq.map(|v| (v / samples.len() as f64).sqrt());

    Ok(LookupTable {
        direction_bins: dirs,
        magnitude_bins: mags,
        max_magnitude,
        pixel_pitch: pitch,
        sigma: settings.sigma,
        bins,
        populated,
        background: background.clone(),
        residual_rms,
    })
}

/// Smooths, differentiates and shades a contact map into an RGB image.
pub fn render_tactile(map: &HeightMap, table: &LookupTable, sigma: f64) -> Result<RgbImage> {
    let expected = table.resolution();
    if (map.width(), map.height()) != expected {
        return Err(Error::ResolutionMismatch {
            expected,
            actual: (map.width(), map.height()),
        });
    }
    let g = gradients(&smooth_heightmap(map, sigma));
    let mut img = table.background.clone();
    for (i, px) in img.pixels_mut().enumerate() {
        let delta = table.lookup(g.gx[i], g.gy[i]);
        for c in 0..3 {
            px.0[c] = (px.0[c] as f64 + delta[c]).round().clamp(0.0, 255.0) as u8;
        }
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn calibrated() -> (PhongReference, LookupTable) {
        let reference = PhongReference::new(320, 240, 2.0);
        let table = LookupTable::from_reference(&reference, 0.06, &LookupSettings::default()).unwrap();
        (reference, table)
    }

    #[test]
    fn residual_is_small() {
        let (_, table) = calibrated();
        for c in table.residual_rms() {
            assert!(c <= 2.0, "residual {c}");
        }
        assert!(table.magnitude_edges().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn magnitude_coverage() {
        let (_, table) = calibrated();
        let (dirs, mags) = table.bin_counts();
        for m in 0..mags {
            assert!((0..dirs).any(|d| table.is_populated(d, m)), "magnitude bin {m} empty");
        }
    }

    #[test]
    fn flat_reference_is_insufficient() {
        let reference = PhongReference::new(64, 48, 2.0);
        let flat = HeightMap::zeros(64, 48, 0.06);
        let img = reference.render(&flat);
        assert!(matches!(
            calibrate_lookup(&reference.background, &[(flat, img)], &LookupSettings::default()),
            Err(Error::InsufficientCoverage { populated: 0, .. })
        ));
    }

    #[test]
    fn zero_map_gives_background() {
        let (_, table) = calibrated();
        let img = render_tactile(&HeightMap::zeros(320, 240, 0.06), &table, 2.0).unwrap();
        assert_eq!(&img, table.background());
        assert!(matches!(
            render_tactile(&HeightMap::zeros(32, 24, 0.06), &table, 2.0),
            Err(Error::ResolutionMismatch { .. })
        ));
    }

    #[test]
    fn save_load_round_trip() {
        let (_, table) = calibrated();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.bin");
        table.save(&path).unwrap();
        assert_eq!(LookupTable::load(&path).unwrap(), table);
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..100]).unwrap();
        assert!(matches!(LookupTable::load(&path), Err(Error::TableFormat(_))));
    }
}
