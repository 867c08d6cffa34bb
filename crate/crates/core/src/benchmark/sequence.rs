//! OTB-style sequence directories: `img/` with numerically named frames and a
//! `groundtruth_rect.txt` holding one 1-based `x,y,w,h` box per line.

use std::fs;
use std::path::{Path, PathBuf};

use image::{ColorType, DynamicImage};

use super::BBox;
use crate::error::{Error, Result};
use crate::features::{Frame, Image};

pub const GROUND_TRUTH_FILE: &str = "groundtruth_rect.txt";
pub const IMAGE_DIR: &str = "img";

/// Anything that can hand out frames and ground truth for one sequence.
pub trait FrameSource {
    fn name(&self) -> &str;
    fn ground_truth(&self) -> &[BBox];
    fn frame(&self, index: usize) -> Result<Frame>;

    fn len(&self) -> usize {
        self.ground_truth().len()
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceRecord {
    pub name: String,
    pub frame_paths: Vec<PathBuf>,
    pub ground_truth: Vec<BBox>,
}

impl FrameSource for SequenceRecord {
    fn name(&self) -> &str {
        &self.name
    }

    fn ground_truth(&self) -> &[BBox] {
        &self.ground_truth
    }

    fn frame(&self, index: usize) -> Result<Frame> {
        let path = self
            .frame_paths
            .get(index)
            .ok_or_else(|| Error::invalid(format!("{}: no frame {index}", self.name)))?;
        Ok(Frame {
            index,
            image: decode_image(path)?,
        })
    }
}

pub fn decode_image(path: &Path) -> Result<Image> {
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let gray = matches!(
        img.color(),
        ColorType::L8 | ColorType::L16 | ColorType::La8 | ColorType::La16
    );
    if gray {
        Image::new(w, h, 1, img.into_luma8().into_raw())
    } else {
        Image::new(w, h, 3, img.into_rgb8().into_raw())
    }
}

pub fn encode_image(img: &Image) -> DynamicImage {
    let (w, h) = (img.width() as u32, img.height() as u32);
    let bytes = img.as_bytes().to_vec();
    if img.is_color() {
        DynamicImage::ImageRgb8(image::RgbImage::from_raw(w, h, bytes).expect("sized buffer"))
    } else {
        DynamicImage::ImageLuma8(image::GrayImage::from_raw(w, h, bytes).expect("sized buffer"))
    }
}

/// Saves an image, picking the format from the file extension.
pub fn save_image(img: &Image, path: &Path) -> Result<()> {
    encode_image(img).save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_ground_truth(text: &str, path: &Path) -> Result<Vec<BBox>> {
    let mut boxes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let values: Vec<f64> = line
            .split(|c: char| c == ',' || c == '\t' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("{} line {}: {e}", path.display(), i + 1)))?;
        if values.len() != 4 {
            return Err(Error::Format(format!(
                "{} line {}: expected 4 values, got {}",
                path.display(),
                i + 1,
                values.len()
            )));
        }
        boxes.push(BBox::new(values[0] - 1.0, values[1] - 1.0, values[2], values[3]));
    }
    Ok(boxes)
}

pub fn load_sequence(dir: &Path) -> Result<SequenceRecord> {
    let gt_path = dir.join(GROUND_TRUTH_FILE);
    let text = fs::read_to_string(&gt_path).map_err(|e| Error::io(&gt_path, e))?;
    let ground_truth = parse_ground_truth(&text, &gt_path)?;

    let img_dir = dir.join(IMAGE_DIR);
    let entries = fs::read_dir(&img_dir).map_err(|e| Error::io(&img_dir, e))?;
    let mut frames: Vec<(u64, PathBuf)> = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(&img_dir, e))?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        if !matches!(ext.as_deref(), Some("jpg" | "jpeg" | "png")) {
            continue;
        }
        let Some(num) = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| s.parse::<u64>().ok())
        else {
            continue;
        };
        frames.push((num, path));
    }
    frames.sort();

    if frames.len() != ground_truth.len() {
        return Err(Error::Format(format!(
            "{}: {} frames in {} but {} ground-truth boxes in {}",
            dir.display(),
            frames.len(),
            IMAGE_DIR,
            ground_truth.len(),
            GROUND_TRUTH_FILE
        )));
    }
    if frames.len() < 2 {
        return Err(Error::Format(format!(
            "{}: a sequence needs at least 2 frames",
            dir.display()
        )));
    }

    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string());
    Ok(SequenceRecord {
        name,
        frame_paths: frames.into_iter().map(|(_, p)| p).collect(),
        ground_truth,
    })
}

fn format_coord(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Writes frames as lossless PNGs plus ground truth into `dir` (created if
/// missing).
pub fn write_sequence(dir: &Path, frames: &[Frame], ground_truth: &[BBox]) -> Result<()> {
    if frames.len() != ground_truth.len() {
        return Err(Error::invalid("frame and ground-truth counts differ"));
    }
    let img_dir = dir.join(IMAGE_DIR);
    fs::create_dir_all(&img_dir).map_err(|e| Error::io(&img_dir, e))?;
    for (i, f) in frames.iter().enumerate() {
        let path = img_dir.join(format!("{:04}.png", i + 1));
        encode_image(&f.image)
            .save_with_format(&path, image::ImageFormat::Png)
            .map_err(|source| Error::Image { path, source })?;
    }
    let mut text = String::new();
    for b in ground_truth {
        text.push_str(&format!(
            "{},{},{},{}\n",
            format_coord(b.x + 1.0),
            format_coord(b.y + 1.0),
            format_coord(b.w),
            format_coord(b.h)
        ));
    }
    let gt_path = dir.join(GROUND_TRUTH_FILE);
    fs::write(&gt_path, text).map_err(|e| Error::io(&gt_path, e))
}
