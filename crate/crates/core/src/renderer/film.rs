use crate::imageio::Image;
use crate::math::Rgb;

/// Progressive accumulation of per-iteration estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Film {
    width: usize,
    height: usize,
    mean: Vec<Rgb>,
    mean_luminance: Vec<f64>,
    /// Sum of squared luminance deviations (Welford).
    luminance_m2: Vec<f64>,
    iterations: u64,
}

impl Film {
    pub fn new(width: usize, height: usize) -> Self {
        let n = width * height;
        Self {
            width,
            height,
            mean: vec![Rgb::ZERO; n],
            mean_luminance: vec![0.0; n],
            luminance_m2: vec![0.0; n],
            iterations: 0,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    /// Folds one full-frame estimate into the running means.
    pub fn accumulate(&mut self, frame: &[Rgb]) {
        assert_eq!(frame.len(), self.mean.len(), "frame size");
        self.iterations += 1;
        let inv = 1.0 / self.iterations as f64;
        for (i, &x) in frame.iter().enumerate() {
            let m = self.mean[i];
            self.mean[i] = m + (x - m) * inv;
            let l = x.luminance();
            let delta = l - self.mean_luminance[i];
            self.mean_luminance[i] += delta * inv;
            self.luminance_m2[i] += delta * (l - self.mean_luminance[i]);
        }
    }

    pub fn mean(&self) -> &[Rgb] {
        &self.mean
    }

    pub fn pixel(&self, x: usize, y: usize) -> Rgb {
        self.mean[y * self.width + x]
    }

    /// Sample variance of the per-iteration luminance at pixel `i`.
    pub fn luminance_variance(&self, i: usize) -> f64 {
        if self.iterations < 2 {
            return 0.0;
        }
        self.luminance_m2[i] / (self.iterations - 1) as f64
    }

    /// Standard error of the mean luminance at pixel `i`.
    pub fn luminance_stderr(&self, i: usize) -> f64 {
        if self.iterations == 0 {
            return 0.0;
        }
        (self.luminance_variance(i) / self.iterations as f64).sqrt()
    }

    pub fn mean_luminance(&self, i: usize) -> f64 {
        self.mean_luminance[i]
    }

    pub fn to_image(&self) -> Image {
        Image::from_pixels(self.width, self.height, self.mean.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::vec3;

    #[test]
    fn running_mean_and_variance() {
        let mut film = Film::new(1, 1);
        let xs = [1.0, 2.0, 4.0, 7.0];
        for x in xs {
            film.accumulate(&[Rgb::splat(x)]);
        }
        assert_eq!(film.iterations(), 4);
        assert!((film.pixel(0, 0).x - 3.5).abs() < 1e-15);
        // Luminance of a grey pixel is its value.
        assert!((film.luminance_variance(0) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn mean_stays_accurate_for_long_runs() {
        let mut film = Film::new(1, 1);
        for i in 0..1_000_000 {
            film.accumulate(&[vec3(0.1, 0.2, 0.3) * if i % 2 == 0 { 1.0 } else { 3.0 }]);
        }
        assert!((film.pixel(0, 0).x - 0.2).abs() < 1e-12);
    }
}
