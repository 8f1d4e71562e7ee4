use crate::geometry::ImagePoint;
use crate::image::GrayImage;

/// One edge sample. `normal` is the unit intensity gradient direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgePoint {
    pub pos: ImagePoint,
    pub magnitude: f64,
    pub normal: (f64, f64),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EdgeMap {
    pub points: Vec<EdgePoint>,
}

impl EdgeMap {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Sobel gradient (scaled to intensity per pixel) with non-maximum
/// suppression along the gradient and sub-pixel peak interpolation.
/// Points with magnitude below `threshold` are dropped.
pub fn detect_edges(image: &GrayImage, threshold: f64) -> EdgeMap {
    let w = image.width() as usize;
    let h = image.height() as usize;
    if w < 3 || h < 3 || !(threshold < f64::INFINITY) {
        return EdgeMap::default();
    }
    let px = |x: usize, y: usize| image.get(x as u32, y as u32) as f64;

    let mut gx = vec![0.0f64; w * h];
    let mut gy = vec![0.0f64; w * h];
    let mut mag = vec![0.0f64; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let dx = (px(x + 1, y - 1) + 2.0 * px(x + 1, y) + px(x + 1, y + 1))
                - (px(x - 1, y - 1) + 2.0 * px(x - 1, y) + px(x - 1, y + 1));
            let dy = (px(x - 1, y + 1) + 2.0 * px(x, y + 1) + px(x + 1, y + 1))
                - (px(x - 1, y - 1) + 2.0 * px(x, y - 1) + px(x + 1, y - 1));
            let i = y * w + x;
            gx[i] = dx / 8.0;
            gy[i] = dy / 8.0;
            mag[i] = gx[i].hypot(gy[i]);
        }
    }

    let sample = |fx: f64, fy: f64| -> f64 {
        let x0 = fx.floor();
        let y0 = fy.floor();
        let tx = fx - x0;
        let ty = fy - y0;
        let (x0, y0) = (x0 as isize, y0 as isize);
        let at = |x: isize, y: isize| -> f64 {
            if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
                0.0
            } else {
                mag[y as usize * w + x as usize]
            }
        };
        at(x0, y0) * (1.0 - tx) * (1.0 - ty)
            + at(x0 + 1, y0) * tx * (1.0 - ty)
            + at(x0, y0 + 1) * (1.0 - tx) * ty
            + at(x0 + 1, y0 + 1) * tx * ty
    };

    let mut points = Vec::new();
    for y in 2..h - 2 {
        for x in 2..w - 2 {
            let i = y * w + x;
            let m0 = mag[i];
            if m0 < threshold || m0 <= 0.0 {
                continue;
            }
            let nx = gx[i] / m0;
            let ny = gy[i] / m0;
            let (fx, fy) = (x as f64, y as f64);
            let m_minus = sample(fx - nx, fy - ny);
            let m_plus = sample(fx + nx, fy + ny);
            if m0 < m_minus || m0 < m_plus || (m0 == m_minus && m0 == m_plus) {
                continue;
            }
            let denom = m_minus - 2.0 * m0 + m_plus;
            let s = if denom < 0.0 {
                (0.5 * (m_minus - m_plus) / denom).clamp(-0.5, 0.5)
            } else {
                0.0
            };
            points.push(EdgePoint {
                pos: ImagePoint::new(fx + s * nx, fy + s * ny),
                magnitude: m0,
                normal: (nx, ny),
            });
        }
    }
    EdgeMap { points }
}
