use std::io::Cursor;
use std::path::Path;

use image::codecs::png::PngEncoder;
use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder, ImageFormat, ImageReader};

use super::RgbImage;
use crate::error::{Error, Result};
use crate::persist;

fn image_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Image {
        path: path.to_path_buf(),
        msg: e.to_string(),
    }
}

/// Reads a PNG or binary/ASCII PNM file and converts it to 8-bit RGB.
pub fn load_image(path: &Path) -> Result<RgbImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| image_err(path, e))?
        .decode()
        .map_err(|e| image_err(path, e))?
        .into_rgb8();
    RgbImage::from_interleaved(img.width(), img.height(), img.as_raw())
}

/// Writes PNG or binary PPM (P6), picked from the file extension.
pub fn save_image(path: &Path, img: &RgbImage) -> Result<()> {
    let format = ImageFormat::from_path(path).map_err(|e| image_err(path, e))?;
    let rgb = img.to_interleaved();
    let (w, h) = (img.width(), img.height());
    let mut buf = Vec::new();
    match format {
        ImageFormat::Png => {
            PngEncoder::new(&mut buf).write_image(&rgb, w, h, ExtendedColorType::Rgb8)
        }
        ImageFormat::Pnm => PnmEncoder::new(&mut buf)
            .with_subtype(PnmSubtype::Pixmap(SampleEncoding::Binary))
            .write_image(&rgb, w, h, ExtendedColorType::Rgb8),
        other => {
            return Err(image_err(
                path,
                format!("unsupported output format {other:?}"),
            ))
        }
    }
    .map_err(|e| image_err(path, e))?;
    persist::write_atomic(path, &buf)
}
