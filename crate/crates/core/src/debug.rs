//! Overlay images for inspecting intermediate results.

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::cell_grid::{CellGrid, MergeResolution};
use crate::error::Result;
use crate::image_prep::GrayImage;
use crate::line_detect::{DataMask, Orientation, RealLine};
use crate::region_detect::Region;

const RED: Rgb<u8> = Rgb([220, 30, 30]);
const BLUE: Rgb<u8> = Rgb([30, 80, 230]);
const GREEN: Rgb<u8> = Rgb([20, 170, 60]);

fn to_rgb(img: &GrayImage) -> RgbImage {
    RgbImage::from_fn(img.width(), img.height(), |x, y| {
        let v = img.get(x, y);
        Rgb([v, v, v])
    })
}

fn rect(img: &mut RgbImage, r: &Region, color: Rgb<u8>) {
    let (w, h) = img.dimensions();
    if w == 0 || h == 0 {
        return;
    }
    let x1 = r.x_max.min(w - 1);
    let y1 = r.y_max.min(h - 1);
    for x in r.x_min.min(x1)..=x1 {
        img.put_pixel(x, r.y_min.min(y1), color);
        img.put_pixel(x, y1, color);
    }
    for y in r.y_min.min(y1)..=y1 {
        img.put_pixel(r.x_min.min(x1), y, color);
        img.put_pixel(x1, y, color);
    }
}

fn vline(img: &mut RgbImage, x: u32, color: Rgb<u8>) {
    if x < img.width() {
        for y in 0..img.height() {
            img.put_pixel(x, y, color);
        }
    }
}

fn hline(img: &mut RgbImage, y: u32, color: Rgb<u8>) {
    if y < img.height() {
        for x in 0..img.width() {
            img.put_pixel(x, y, color);
        }
    }
}

/// Page with detected table regions outlined.
pub fn regions_overlay(page: &GrayImage, regions: &[Region]) -> RgbImage {
    let mut img = to_rgb(page);
    for r in regions {
        rect(&mut img, r, RED);
    }
    img
}

/// Table crop with real lines in red and final structure lines that are
/// not real lines in blue.
pub fn lines_overlay(crop: &GrayImage, real: &[RealLine], grid: &CellGrid) -> RgbImage {
    let mut img = to_rgb(crop);
    for &x in &grid.col_bounds {
        vline(&mut img, x, BLUE);
    }
    for &y in &grid.row_bounds {
        hline(&mut img, y, BLUE);
    }
    for l in real {
        match l.orientation {
            Orientation::Vertical => vline(&mut img, l.coordinate, RED),
            Orientation::Horizontal => hline(&mut img, l.coordinate, RED),
        }
    }
    img
}

/// Data pixels black on white.
pub fn mask_image(mask: &DataMask) -> GrayImage {
    GrayImage::from_fn(mask.width, mask.height, |x, y| if mask.get(x, y) { 0 } else { 255 })
}

/// Merged cells outlined in green; empty cells tinted.
pub fn merge_overlay(crop: &GrayImage, grid: &CellGrid, res: &MergeResolution) -> RgbImage {
    let mut img = to_rgb(crop);
    for comp in &res.components {
        let r = Region::new(
            grid.col_bounds[comp.col0],
            grid.row_bounds[comp.row0],
            grid.col_bounds[comp.col1 + 1],
            grid.row_bounds[comp.row1 + 1],
        );
        if !res.component_occupied(comp) {
            for y in r.y_min..=r.y_max.min(img.height() - 1) {
                for x in r.x_min..=r.x_max.min(img.width() - 1) {
                    let p = img.get_pixel_mut(x, y);
                    p.0[0] = (p.0[0] as u16 * 3 / 4) as u8;
                    p.0[1] = (p.0[1] as u16 * 3 / 4) as u8;
                }
            }
        }
        rect(&mut img, &r, GREEN);
    }
    img
}

pub fn save_rgb(img: &RgbImage, path: &Path) -> Result<()> {
    img.save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}
