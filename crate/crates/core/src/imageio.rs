//! Float images and their PFM / PNG encodings.

use std::fs;
use std::io::{self, BufRead, BufReader, Read};
use std::path::Path;

use thiserror::Error;

use crate::math::{vec3, Rgb};

#[derive(Debug, Error)]
pub enum ImageError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("malformed PFM: {0}")]
    Format(String),
    #[error("image size mismatch: {0}x{1} vs {2}x{3}")]
    SizeMismatch(usize, usize, usize, usize),
    #[error("PNG encoding failed: {0}")]
    Png(String),
}

/// Row-major RGB image, row 0 at the top.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<Rgb>,
}

impl Image {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![Rgb::ZERO; width * height],
        }
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<Rgb>) -> Self {
        assert_eq!(pixels.len(), width * height);
        Self {
            width,
            height,
            pixels,
        }
    }

    /// PFM bytes: `PF` header, scale -1 (little-endian), rows bottom to top.
    pub fn to_pfm(&self) -> Vec<u8> {
        let mut out = format!("PF\n{} {}\n-1.0\n", self.width, self.height).into_bytes();
        out.reserve(self.pixels.len() * 12);
        for y in (0..self.height).rev() {
            for p in &self.pixels[y * self.width..(y + 1) * self.width] {
                for c in [p.x, p.y, p.z] {
                    out.extend_from_slice(&(c as f32).to_le_bytes());
                }
            }
        }
        out
    }

    pub fn from_pfm(bytes: &[u8]) -> Result<Self, ImageError> {
        let mut reader = BufReader::new(bytes);
        let mut tokens = Vec::new();
        let mut line = String::new();
        while tokens.len() < 4 {
            line.clear();
            if reader.read_line(&mut line)? == 0 {
                return Err(ImageError::Format("truncated header".into()));
            }
            tokens.extend(line.split_whitespace().map(str::to_owned));
        }
        if tokens.len() != 4 {
            return Err(ImageError::Format("unexpected header layout".into()));
        }
        let channels = match tokens[0].as_str() {
            "PF" => 3,
            "Pf" => 1,
            other => return Err(ImageError::Format(format!("bad magic '{other}'"))),
        };
        let dim = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| ImageError::Format(format!("bad dimension '{s}'")))
        };
        let (width, height) = (dim(&tokens[1])?, dim(&tokens[2])?);
        let scale: f64 = tokens[3]
            .parse()
            .map_err(|_| ImageError::Format(format!("bad scale '{}'", tokens[3])))?;
        if scale == 0.0 {
            return Err(ImageError::Format("scale must be nonzero".into()));
        }
        let little = scale < 0.0;
        let mut data = Vec::new();
        reader.read_to_end(&mut data)?;
        let expected = width * height * channels * 4;
        if data.len() != expected {
            return Err(ImageError::Format(format!(
                "expected {expected} data bytes, found {}",
                data.len()
            )));
        }
        let floats: Vec<f64> = data
            .chunks_exact(4)
            .map(|b| {
                let b = [b[0], b[1], b[2], b[3]];
                f64::from(if little {
                    f32::from_le_bytes(b)
                } else {
                    f32::from_be_bytes(b)
                })
            })
            .collect();
        let mut pixels = vec![Rgb::ZERO; width * height];
        for (row, y) in (0..height).rev().enumerate() {
            for x in 0..width {
                let i = (row * width + x) * channels;
                pixels[y * width + x] = if channels == 3 {
                    vec3(floats[i], floats[i + 1], floats[i + 2])
                } else {
                    Rgb::splat(floats[i])
                };
            }
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn write_pfm(&self, path: &Path) -> Result<(), ImageError> {
        fs::write(path, self.to_pfm())?;
        Ok(())
    }

    pub fn read_pfm(path: &Path) -> Result<Self, ImageError> {
        Self::from_pfm(&fs::read(path)?)
    }

    /// 8-bit sRGB-ish PNG with a plain 1/2.2 gamma.
    pub fn write_png(&self, path: &Path) -> Result<(), ImageError> {
        let encode = |c: f64| (c.max(0.0).powf(1.0 / 2.2).min(1.0) * 255.0 + 0.5) as u8;
        let mut buf = Vec::with_capacity(self.pixels.len() * 3);
        for p in &self.pixels {
            buf.extend([encode(p.x), encode(p.y), encode(p.z)]);
        }
        image::save_buffer(
            path,
            &buf,
            self.width as u32,
            self.height as u32,
            image::ExtendedColorType::Rgb8,
        )
        .map_err(|e| match e {
            image::ImageError::IoError(io) => ImageError::Io(io),
            other => ImageError::Png(other.to_string()),
        })
    }

    /// Root mean squared difference over every pixel and channel.
    pub fn rmse(&self, other: &Image) -> Result<f64, ImageError> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(ImageError::SizeMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(rmse(&self.pixels, &other.pixels))
    }
}

pub fn rmse(a: &[Rgb], b: &[Rgb]) -> f64 {
    assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    let sum: f64 = a
        .iter()
        .zip(b)
        .map(|(p, q)| (*p - *q).length_squared())
        .sum();
    (sum / (3 * a.len()) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmse_examples() {
        let a = Image::new(1, 1);
        let mut b = Image::new(1, 1);
        assert_eq!(a.rmse(&a).unwrap(), 0.0);
        b.pixels[0] = Rgb::ONE;
        assert_eq!(a.rmse(&b).unwrap(), 1.0);
        assert!(matches!(
            a.rmse(&Image::new(2, 1)),
            Err(ImageError::SizeMismatch(1, 1, 2, 1))
        ));
    }

    #[test]
    fn pfm_header_and_row_order() {
        let mut img = Image::new(2, 2);
        img.pixels[0] = vec3(1.0, 2.0, 3.0);
        let bytes = img.to_pfm();
        assert!(bytes.starts_with(b"PF\n2 2\n-1.0\n"));
        let header = b"PF\n2 2\n-1.0\n".len();
        // Top-left pixel is stored in the last row.
        let at = header + 2 * 12;
        assert_eq!(&bytes[at..at + 4], &1.0f32.to_le_bytes());
        assert_eq!(Image::from_pfm(&bytes).unwrap(), img);
    }

    #[test]
    fn rejects_truncated_data() {
        let mut bytes = Image::new(3, 2).to_pfm();
        bytes.pop();
        assert!(matches!(Image::from_pfm(&bytes), Err(ImageError::Format(_))));
        assert!(Image::from_pfm(b"P6\n1 1\n255\n").is_err());
    }
}
