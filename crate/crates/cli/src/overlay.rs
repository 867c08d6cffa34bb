use std::path::Path;

use driftguard_core::benchmark::{save_image, BBox, FrameSource};
use driftguard_core::features::Image;

use crate::{write_dir_atomic, CliResult};

const PREDICTED: [u8; 3] = [0, 220, 0];
const TRUTH: [u8; 3] = [230, 0, 0];

fn to_rgb(img: &Image) -> Image {
    if img.is_color() {
        return img.clone();
    }
    let data = img.as_bytes().iter().flat_map(|&v| [v, v, v]).collect();
    Image::new(img.width(), img.height(), 3, data).expect("sized buffer")
}

/// Draws a one-pixel outline of `b`, clipped to the image.
fn draw_box(img: &mut Image, b: &BBox, color: [u8; 3]) {
    if !b.is_finite() {
        return;
    }
    let (w, h) = (img.width() as i64, img.height() as i64);
    let x0 = b.x.round() as i64;
    let y0 = b.y.round() as i64;
    let x1 = (b.x + b.w).round() as i64 - 1;
    let y1 = (b.y + b.h).round() as i64 - 1;
    let mut put = |x: i64, y: i64| {
        if (0..w).contains(&x) && (0..h).contains(&y) {
            img.pixel_mut(x as usize, y as usize).copy_from_slice(&color);
        }
    };
    for x in x0..=x1 {
        put(x, y0);
        put(x, y1);
    }
    for y in y0..=y1 {
        put(x0, y);
        put(x1, y);
    }
}

pub fn write_overlays(dir: &Path, seq: &dyn FrameSource, boxes: &[BBox]) -> CliResult {
    write_dir_atomic(dir, |tmp| {
        for (i, (pred, gt)) in boxes.iter().zip(seq.ground_truth()).enumerate() {
            let mut img = to_rgb(&seq.frame(i)?.image);
            draw_box(&mut img, gt, TRUTH);
            draw_box(&mut img, pred, PREDICTED);
            save_image(&img, &tmp.join(format!("{:04}.png", i + 1)))?;
        }
        Ok(())
    })
}
