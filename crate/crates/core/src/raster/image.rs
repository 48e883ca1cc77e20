use crate::scalar::Real;

/// Row-major RGB image.
#[derive(Clone, Debug, PartialEq)]
pub struct RenderedImage<T> {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<[T; 3]>,
}

impl<T: Real> RenderedImage<T> {
    pub fn filled(width: u32, height: u32, rgb: [T; 3]) -> Self {
        Self {
            width,
            height,
            pixels: vec![rgb; width as usize * height as usize],
        }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [T; 3] {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, rgb: [T; 3]) {
        let w = self.width as usize;
        self.pixels[y as usize * w + x as usize] = rgb;
    }

    /// One channel as a flat plane.
    pub fn channel(&self, c: usize) -> Vec<T> {
        self.pixels.iter().map(|p| p[c]).collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.pixels
            .iter()
            .zip(&other.pixels)
            .flat_map(|(a, b)| (0..3).map(move |c| (a[c] - b[c]).abs()))
            .fold(T::zero(), T::max)
    }

    /// 8-bit RGB with identity transfer: `round(clamp(v, 0, 1) · 255)`.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .flat_map(|p| p.map(|v| (v.as_f64().clamp(0.0, 1.0) * 255.0).round() as u8))
            .collect()
    }

    pub fn from_rgb8(width: u32, height: u32, data: &[u8]) -> Self {
        Self {
            width,
            height,
            pixels: data
                .chunks_exact(3)
                .map(|c| [0, 1, 2].map(|i| T::lit(c[i] as f64 / 255.0)))
                .collect(),
        }
    }
}
