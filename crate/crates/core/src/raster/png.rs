//! 8-bit PNG output. Values are written without a transfer curve: 3DGS colors
//! are fitted to sRGB-encoded photographs, so they are already display-referred.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::RenderedImage;
use crate::scalar::Real;

pub fn write_png<T: Real>(image: &RenderedImage<T>, path: impl AsRef<Path>) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    let mut enc = png::Encoder::new(file, image.width, image.height);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    enc.set_source_srgb(png::SrgbRenderingIntent::Perceptual);
    let mut w = enc.write_header().map_err(|e| Error::Png(e.to_string()))?;
    w.write_image_data(&image.to_rgb8())
        .map_err(|e| Error::Png(e.to_string()))?;
    w.finish().map_err(|e| Error::Png(e.to_string()))?;
    Ok(())
}

/// Reads an 8-bit RGB or RGBA PNG (alpha dropped).
pub fn read_png<T: Real>(path: impl AsRef<Path>) -> Result<RenderedImage<T>> {
    let mut dec = png::Decoder::new(BufReader::new(File::open(path)?));
    dec.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = dec.read_info().map_err(|e| Error::Png(e.to_string()))?;
    let mut buf = vec![
        0;
        reader
            .output_buffer_size()
            .ok_or_else(|| Error::Png("image too large".into()))?
    ];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Png(e.to_string()))?;
    let data = &buf[..info.buffer_size()];
    let rgb: Vec<u8> = match info.color_type {
        png::ColorType::Rgb => data.to_vec(),
        png::ColorType::Rgba => data
            .chunks_exact(4)
            .flat_map(|c| [c[0], c[1], c[2]])
            .collect(),
        png::ColorType::Grayscale => data.iter().flat_map(|&v| [v, v, v]).collect(),
        png::ColorType::GrayscaleAlpha => data
            .chunks_exact(2)
            .flat_map(|c| [c[0], c[0], c[0]])
            .collect(),
        other => return Err(Error::Png(format!("unsupported color type {other:?}"))),
    };
    Ok(RenderedImage::from_rgb8(info.width, info.height, &rgb))
}
