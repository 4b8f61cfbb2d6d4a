use crate::geometry::HeightMap;

/// Gaussian blur with zero padding outside the sensor, so an interior
/// contact keeps its volume. `sigma` is in pixels.
pub fn smooth_heightmap(map: &HeightMap, sigma: f64) -> HeightMap {
    if sigma <= 0.0 {
        return map.clone();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let norm: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|w| *w /= norm);

    let (w, h) = (map.width() as isize, map.height() as isize);
    let src = map.depths();
    let mut tmp = vec![0.0; src.len()];
    for row in 0..h {
        for col in 0..w {
            let mut acc = 0.0;
            for (k, weight) in kernel.iter().enumerate() {
                let c = col + k as isize - radius;
                if (0..w).contains(&c) {
                    acc += weight * src[(row * w + c) as usize];
                }
            }
            tmp[(row * w + col) as usize] = acc;
        }
    }
    let mut out = vec![0.0; src.len()];
    for row in 0..h {
        for col in 0..w {
            let mut acc = 0.0;
            for (k, weight) in kernel.iter().enumerate() {
                let r = row + k as isize - radius;
                if (0..h).contains(&r) {
                    acc += weight * tmp[(r * w + col) as usize];
                }
            }
            out[(row * w + col) as usize] = acc;
        }
    }
    HeightMap::new(map.width(), map.height(), map.pixel_pitch(), out).expect("blur keeps depths valid")
}

/// Surface slopes in image axes (x along columns, y along rows), mm/mm.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub width: u32,
    pub height: u32,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
}

impl GradientField {
    pub fn at(&self, col: u32, row: u32) -> (f64, f64) {
        let i = row as usize * self.width as usize + col as usize;
        (self.gx[i], self.gy[i])
    }
}

/// Central differences in the interior, one-sided at the border.
pub fn gradients(map: &HeightMap) -> GradientField {
    let (w, h) = (map.width() as usize, map.height() as usize);
    let p = map.pixel_pitch();
    let d = map.depths();
    let diff = |lo: usize, hi: usize, span: usize| (d[hi] - d[lo]) / (span as f64 * p);
    let mut gx = vec![0.0; d.len()];
    let mut gy = vec![0.0; d.len()];
    for row in 0..h {
        for col in 0..w {
            let i = row * w + col;
            let (l, r) = (col.saturating_sub(1), (col + 1).min(w - 1));
            let (u, b) = (row.saturating_sub(1), (row + 1).min(h - 1));
            if r > l {
                gx[i] = diff(row * w + l, row * w + r, r - l);
            }
            if b > u {
                gy[i] = diff(u * w + col, b * w + col, b - u);
            }
        }
    }
    GradientField {
        width: map.width(),
        height: map.height(),
        gx,
        gy,
    }
}
