//! Captioned grids of training images.

use std::fmt::Write as _;
use std::fs;
use std::io::Cursor;
use std::path::Path;

use base64::Engine as _;
use image::{ImageFormat, RgbImage};
use rayon::prelude::*;

use crate::dataset::{load_image_sized, DatasetIndex, ImageTensor, SplitIndex};
use crate::error::{Error, Result};
use crate::rng::SeededRng;

pub const TILE_SIDE: usize = 128;
const CAPTION_HEIGHT: usize = 20;
const GAP: usize = 8;

/// Picks `n` training entries (positions into `index.entries()`) with a
/// seeded draw without replacement.
pub fn contact_sheet_selection(split: &SplitIndex, n: usize, seed: u64) -> Result<Vec<usize>> {
    if n == 0 || n > split.train.len() {
        return Err(Error::DegenerateInput(format!(
            "cannot show {n} of {} training images",
            split.train.len()
        )));
    }
    Ok(SeededRng::new(seed)
        .sample_indices(split.train.len(), n)
        .into_iter()
        .map(|i| split.train[i])
        .collect())
}

fn tile_png(tile: &ImageTensor) -> Result<String> {
    let bytes: Vec<u8> = tile
        .pixels()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let img = RgbImage::from_raw(tile.width() as u32, tile.height() as u32, bytes)
        .expect("tile buffer matches its dimensions");
    let mut png = Vec::new();
    img.write_to(&mut Cursor::new(&mut png), ImageFormat::Png)
        .map_err(|e| Error::Format(e.to_string()))?;
    Ok(base64::engine::general_purpose::STANDARD.encode(png))
}

/// Writes an SVG grid of `n` seeded-random training images, each captioned
/// with its class name. Returns the selected entry positions.
pub fn export_contact_sheet(
    index: &DatasetIndex,
    split: &SplitIndex,
    n: usize,
    seed: u64,
    path: impl AsRef<Path>,
) -> Result<Vec<usize>> {
    let chosen = contact_sheet_selection(split, n, seed)?;
    let tiles: Vec<String> = chosen
        .par_iter()
        .map(|&i| {
            let entry = &index.entries()[i];
            let tile = load_image_sized(index.absolute_path(entry), (TILE_SIDE, TILE_SIDE))?;
            tile_png(&tile)
        })
        .collect::<Result<_>>()?;

    let cols = (1..=n).find(|c| c * c >= n).unwrap_or(1);
    let rows = n.div_ceil(cols);
    let cell_w = TILE_SIDE + GAP;
    let cell_h = TILE_SIDE + CAPTION_HEIGHT + GAP;
    let width = GAP + cols * cell_w;
    let height = GAP + rows * cell_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (k, (&i, data)) in chosen.iter().zip(&tiles).enumerate() {
        let x = GAP + (k % cols) * cell_w;
        let y = GAP + (k / cols) * cell_h;
        let entry = &index.entries()[i];
        let name = &index.class_names()[entry.class_id as usize];
        let _ = writeln!(
            s,
            r#"<image x="{x}" y="{y}" width="{TILE_SIDE}" height="{TILE_SIDE}" href="data:image/png;base64,{data}"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            x + TILE_SIDE / 2,
            y + TILE_SIDE + 15,
            name.replace('&', "&amp;").replace('<', "&lt;")
        );
    }
    s.push_str("</svg>\n");
    fs::write(path, s)?;
    Ok(chosen)
}
