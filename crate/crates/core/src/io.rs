//! OTB-layout sequence loading and result files.
//!
//! A sequence directory holds `img/` with numerically named frames
//! (`0001.jpg`, `0002.jpg`, ...) and `groundtruth_rect.txt` with one
//! `x,y,w,h` row per frame in 1-based pixel coordinates. Rows may be comma,
//! tab or space separated; rows containing NaN mark unlabeled frames.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evaluation::RunSummary;
use crate::geometry::BoundingBox;
use crate::gray::GrayImage;

pub const IMAGE_DIR: &str = "img";
pub const GROUND_TRUTH_FILE: &str = "groundtruth_rect.txt";

const IMAGE_EXTENSIONS: &[&str] = &["jpg", "jpeg", "png", "bmp"];

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSpec {
    pub name: String,
    pub frames: Vec<PathBuf>,
    pub ground_truth: Vec<Option<BoundingBox>>,
}

impl SequenceSpec {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

pub fn load_sequence(dir: &Path) -> Result<SequenceSpec> {
    let img_dir = dir.join(IMAGE_DIR);
    let entries = fs::read_dir(&img_dir).map_err(|e| Error::io(&img_dir, e))?;
    let mut frames: Vec<(u64, PathBuf)> = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(&img_dir, e))?.path();
        let ext_ok = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
        let number = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| s.parse::<u64>().ok());
        if let (true, Some(n)) = (ext_ok, number) {
            frames.push((n, path));
        }
    }
    if frames.is_empty() {
        return Err(Error::invalid(format!(
            "no numbered frames found in {}",
            img_dir.display()
        )));
    }
    frames.sort();

    let ground_truth = read_boxes(&dir.join(GROUND_TRUTH_FILE))?;
    if ground_truth.len() > frames.len() {
        return Err(Error::invalid(format!(
            "{} ground-truth rows for {} frames",
            ground_truth.len(),
            frames.len()
        )));
    }
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sequence".into());
    Ok(SequenceSpec {
        name,
        frames: frames.into_iter().map(|(_, p)| p).collect(),
        ground_truth,
    })
}

/// Parses an OTB box file into 0-based boxes.
pub fn read_boxes(path: &Path) -> Result<Vec<Option<BoundingBox>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_boxes(&text, path)
}

pub fn parse_boxes(text: &str, origin: &Path) -> Result<Vec<Option<BoundingBox>>> {
    let lines: Vec<&str> = text.lines().collect();
    let last = lines.iter().rposition(|l| !l.trim().is_empty()).map_or(0, |i| i + 1);
    lines[..last]
        .iter()
        .enumerate()
        .map(|(i, line)| {
            parse_box_line(line).map_err(|message| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                message,
            })
        })
        .collect()
}

fn parse_box_line(line: &str) -> std::result::Result<Option<BoundingBox>, String> {
    let fields: Vec<&str> = line
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|f| !f.is_empty())
        .collect();
    if fields.len() != 4 {
        return Err(format!("expected 4 fields x,y,w,h, found {}", fields.len()));
    }
    let mut v = [0.0; 4];
    for (slot, f) in v.iter_mut().zip(&fields) {
        *slot = f
            .parse::<f64>()
            .map_err(|_| format!("cannot parse {f:?} as a number"))?;
    }
    if v.iter().any(|x| x.is_nan()) {
        return Ok(None);
    }
    BoundingBox::new(v[0] - 1.0, v[1] - 1.0, v[2], v[3])
        .map(Some)
        .map_err(|e| e.to_string())
}

/// Formats boxes in the 1-based `x,y,w,h` convention of the input files.
pub fn format_boxes(boxes: &[BoundingBox]) -> String {
    boxes
        .iter()
        .map(|b| format!("{},{},{},{}\n", b.x + 1.0, b.y + 1.0, b.w, b.h))
        .collect()
}

pub fn load_frame(path: &Path) -> Result<GrayImage> {
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(GrayImage::from_dynamic(&img))
}

pub fn save_frame(img: &GrayImage, path: &Path) -> Result<()> {
    img.to_luma8().save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Serialize)]
struct SummaryFile<'a, C: Serialize> {
    sequence: &'a str,
    frames: usize,
    frames_scored: usize,
    mean_overlap: f64,
    auc: f64,
    seed: Option<u64>,
    config: &'a C,
}

/// Writes `results.txt`, `overlaps.csv`, `curve.csv` and `summary.json`.
pub fn write_results<C: Serialize>(
    results: &[BoundingBox],
    summary: &RunSummary,
    seed: Option<u64>,
    config: &C,
    out_dir: &Path,
) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    write_file(&out_dir.join("results.txt"), &format_boxes(results))?;

    let mut overlaps = String::from("frame,overlap\n");
    for (i, o) in summary.overlaps.iter().enumerate() {
        match o {
            Some(v) => overlaps.push_str(&format!("{},{v}\n", i + 1)),
            None => overlaps.push_str(&format!("{},\n", i + 1)),
        }
    }
    write_file(&out_dir.join("overlaps.csv"), &overlaps)?;

    let mut curve = String::from("threshold,fraction\n");
    for (t, f) in summary.curve.thresholds.iter().zip(&summary.curve.fractions) {
        curve.push_str(&format!("{t},{f}\n"));
    }
    write_file(&out_dir.join("curve.csv"), &curve)?;

    let file = SummaryFile {
        sequence: &summary.sequence,
        frames: summary.frames,
        frames_scored: summary.frames_scored,
        mean_overlap: summary.mean_overlap,
        auc: summary.auc,
        seed,
        config,
    };
    let json = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::invalid(format!("cannot serialize summary: {e}")))?;
    write_file(&out_dir.join("summary.json"), &(json + "\n"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_based_correction() {
        let b = parse_boxes("10,20,30,40\n", Path::new("gt")).unwrap();
        assert_eq!(b, vec![Some(BoundingBox::new(9.0, 19.0, 30.0, 40.0).unwrap())]);
    }

    #[test]
    fn tab_and_comma_agree() {
        let a = parse_boxes("1,2,3,4\n5,6,7,8\n", Path::new("a")).unwrap();
        let b = parse_boxes("1\t2\t3\t4\n5\t6\t7\t8\n\n", Path::new("b")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nan_rows_are_missing() {
        let b = parse_boxes("1,2,3,4\nNaN,NaN,NaN,NaN\n", Path::new("gt")).unwrap();
        assert_eq!(b[1], None);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_boxes("1,2,3,4\n1,2,x,4\n", Path::new("gt")).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_boxes("1,2,3\n", Path::new("gt")).is_err());
        assert!(parse_boxes("1,2,0,4\n", Path::new("gt")).is_err());
    }
}
