use std::path::Path;

use image::{GrayImage, ImageFormat, RgbImage};
use proxmag::export::encode_pgm;
use serde::Serialize;

use crate::CliError;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default()
}

/// Writes 8-bit grayscale as PGM or PNG, chosen by extension.
pub fn write_gray(path: &Path, width: usize, height: usize, gray: &[u8]) -> Result<(), CliError> {
    match extension(path).as_str() {
        "pgm" => {
            let bytes = encode_pgm(width, height, gray)?;
            std::fs::write(path, bytes).map_err(|e| io_err(path, e))
        }
        "png" => {
            let img = GrayImage::from_raw(width as u32, height as u32, gray.to_vec())
                .ok_or_else(|| CliError::Runtime("image buffer size mismatch".into()))?;
            img.save_with_format(path, ImageFormat::Png).map_err(|e| io_err(path, e))
        }
        _ => Err(CliError::Usage(format!(
            "{}: grayscale output must be .pgm or .png",
            path.display()
        ))),
    }
}

pub fn write_rgb(path: &Path, width: usize, height: usize, rgb: &[[u8; 3]]) -> Result<(), CliError> {
    if extension(path) != "png" {
        return Err(CliError::Usage(format!("{}: colour output must be .png", path.display())));
    }
    let raw: Vec<u8> = rgb.iter().flatten().copied().collect();
    let img = RgbImage::from_raw(width as u32, height as u32, raw)
        .ok_or_else(|| CliError::Runtime("image buffer size mismatch".into()))?;
    img.save_with_format(path, ImageFormat::Png).map_err(|e| io_err(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| io_err(path, e))
}
