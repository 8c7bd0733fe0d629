//! CSV ingestion for regression and image-classification datasets.

use crate::synth;
use drcert::DataPoint;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const SYNTHETIC_PREFIX: &str = "synthetic:";
pub const DEFAULT_SYNTHETIC_SIZE: usize = 500;
pub const CLASSES: usize = 10;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: pixel {value} outside [0, 1]")]
    Range { line: usize, value: f64 },
    #[error("line {line}: label {label} outside 0..{classes}")]
    Label { line: usize, label: i64, classes: usize },
    #[error("dataset is empty")]
    Empty,
    #[error("{0}")]
    Invalid(String),
}

fn parse_err(line: usize, message: impl Into<String>) -> IngestError {
    IngestError::Parse { line, message: message.into() }
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes())
}

fn line_of(pos: Option<&csv::Position>, fallback: usize) -> usize {
    pos.map(|p| p.line() as usize).unwrap_or(fallback)
}

fn read_text(path: &Path) -> Result<String, IngestError> {
    std::fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })
}

/// Parses `x1,x2,y` rows.
pub fn parse_regression_csv(text: &str) -> Result<Vec<DataPoint>, IngestError> {
    let mut rdr = reader(text);
    let header = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let names: Vec<&str> = header.iter().collect();
    if names != ["x1", "x2", "y"] {
        return Err(parse_err(1, format!("expected header x1,x2,y, found {}", names.join(","))));
    }
    let mut points = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| parse_err(line_of(e.position(), k + 2), e.to_string()))?;
        let line = line_of(record.position(), k + 2);
        let values = record
            .iter()
            .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| parse_err(line, "non-numeric field"))?;
        points.push(DataPoint::regression(vec![values[0], values[1]], values[2]));
    }
    if points.is_empty() {
        return Err(IngestError::Empty);
    }
    Ok(points)
}

/// Rescales every feature to `[0, 1]` by its observed range.
pub fn min_max_normalize(points: &mut [DataPoint]) {
    let Some(first) = points.first() else { return };
    let dim = first.x.len();
    for k in 0..dim {
        let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.x[k]), hi.max(p.x[k])));
        let span = hi - lo;
        for p in points.iter_mut() {
            p.x[k] = if span > 0.0 { (p.x[k] - lo) / span } else { 0.0 };
        }
    }
}

/// Loads a regression dataset. `synthetic:` or `synthetic:<n>` selects the
/// travel-time generator.
pub fn ingest_regression(source: &str, normalize: bool, seed: u64) -> Result<Vec<DataPoint>, IngestError> {
    let mut points = if let Some(rest) = source.strip_prefix(SYNTHETIC_PREFIX) {
        let n = if rest.is_empty() {
            DEFAULT_SYNTHETIC_SIZE
        } else {
            rest.parse().map_err(|_| IngestError::Invalid(format!("bad synthetic size {rest:?}")))?
        };
        if n < 2 {
            return Err(IngestError::Invalid("synthetic dataset needs at least 2 points".into()));
        }
        synth::travel_times(n, seed)
    } else {
        parse_regression_csv(&read_text(Path::new(source))?)?
    };
    if normalize {
        min_max_normalize(&mut points);
    }
    Ok(points)
}

/// A row-major square grayscale image with a class label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImage {
    pub label: usize,
    pub side: usize,
    pub pixels: Vec<f64>,
}

impl LabeledImage {
    pub fn to_point(&self, classes: usize) -> DataPoint {
        let y = (0..classes).map(|c| if c == self.label { 1.0 } else { 0.0 }).collect();
        DataPoint::new(self.pixels.clone(), y)
    }

    pub fn rescaled(&self, side: usize) -> LabeledImage {
        LabeledImage { label: self.label, side, pixels: rescale(&self.pixels, self.side, side) }
    }
}

/// Parses `label,p1,...,p_{s²}` rows; the side is inferred from the header.
pub fn parse_classification_csv(text: &str, classes: usize) -> Result<Vec<LabeledImage>, IngestError> {
    let mut rdr = reader(text);
    let width = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.len();
    let pixels = width.saturating_sub(1);
    let side = (pixels as f64).sqrt().round() as usize;
    if pixels == 0 || side * side != pixels {
        return Err(parse_err(1, format!("{pixels} pixel columns is not a square image")));
    }
    let mut images = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| parse_err(line_of(e.position(), k + 2), e.to_string()))?;
        let line = line_of(record.position(), k + 2);
        let label: i64 = record[0].parse().map_err(|_| parse_err(line, format!("bad label {:?}", &record[0])))?;
        if label < 0 || label as usize >= classes {
            return Err(IngestError::Label { line, label, classes });
        }
        let mut px = Vec::with_capacity(pixels);
        for field in record.iter().skip(1) {
            let v: f64 = field.parse().map_err(|_| parse_err(line, format!("bad pixel {field:?}")))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(IngestError::Range { line, value: v });
            }
            px.push(v);
        }
        images.push(LabeledImage { label: label as usize, side, pixels: px });
    }
    if images.is_empty() {
        return Err(IngestError::Empty);
    }
    Ok(images)
}

/// Loads an image dataset and rescales it to `side`.
pub fn ingest_classification(path: &Path, side: usize) -> Result<Vec<LabeledImage>, IngestError> {
    let images = parse_classification_csv(&read_text(path)?, CLASSES)?;
    Ok(images.into_iter().map(|im| im.rescaled(side)).collect())
}

pub fn classification_csv_string(images: &[LabeledImage]) -> String {
    let mut out = String::from("label");
    let n = images.first().map_or(0, |im| im.pixels.len());
    for k in 1..=n {
        out.push_str(&format!(",p{k}"));
    }
    out.push('\n');
    for im in images {
        out.push_str(&im.label.to_string());
        for v in &im.pixels {
            out.push_str(&format!(",{v:?}"));
        }
        out.push('\n');
    }
    out
}

/// Resamples a square image: area averaging with fractional pixel overlap
/// when shrinking, nearest-neighbour replication when growing.
pub fn rescale(pixels: &[f64], from: usize, to: usize) -> Vec<f64> {
    if from == to {
        return pixels.to_vec();
    }
    if to > from {
        let src = |i: usize| i * from / to;
        return (0..to * to).map(|k| pixels[src(k / to) * from + src(k % to)]).collect();
    }
    let scale = from as f64 / to as f64;
    let overlaps = |i: usize| -> Vec<(usize, f64)> {
        let (lo, hi) = (i as f64 * scale, (i + 1) as f64 * scale);
        (lo.floor() as usize..(hi.ceil() as usize).min(from))
            .map(|s| (s, (hi.min(s as f64 + 1.0) - lo.max(s as f64)).max(0.0)))
            .filter(|(_, w)| *w > 0.0)
            .collect()
    };
    let weights: Vec<Vec<(usize, f64)>> = (0..to).map(overlaps).collect();
    let area = scale * scale;
    let mut out = Vec::with_capacity(to * to);
    for row in &weights {
        for col in &weights {
            let sum: f64 = row
                .iter()
                .flat_map(|&(r, wr)| col.iter().map(move |&(c, wc)| wr * wc * pixels[r * from + c]))
                .sum();
            out.push((sum / area).clamp(0.0, 1.0));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regression_rows() {
        let pts = parse_regression_csv("x1,x2,y\n0.1,0.2,3\n0.4,0.5,6\n1,2,9\n").unwrap();
        assert_eq!(pts.len(), 3);
        assert_eq!(pts[1].x, vec![0.4, 0.5]);
        assert_eq!(pts[2].y, vec![9.0]);
        match parse_regression_csv("x1,x2,y\n0.1,0.2,3\n0.4,abc,6\n") {
            Err(IngestError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_regression_csv("a,b,c\n1,2,3\n"), Err(IngestError::Parse { line: 1, .. })));
    }

    #[test]
    fn normalization() {
        let mut pts = parse_regression_csv("x1,x2,y\n1,5,0\n3,5,0\n2,5,0\n").unwrap();
        min_max_normalize(&mut pts);
        assert_eq!(pts.iter().map(|p| p.x[0]).collect::<Vec<_>>(), vec![0.0, 1.0, 0.5]);
        assert!(pts.iter().all(|p| p.x[1] == 0.0));
    }

    #[test]
    fn synthetic_is_deterministic() {
        let a = ingest_regression("synthetic:40", false, 3).unwrap();
        assert_eq!(a, ingest_regression("synthetic:40", false, 3).unwrap());
        assert_ne!(a, ingest_regression("synthetic:40", false, 4).unwrap());
        assert_eq!(ingest_regression("synthetic:", false, 3).unwrap().len(), DEFAULT_SYNTHETIC_SIZE);
    }

    fn fixture(rows: usize) -> String {
        let mut text = String::from("label,p1,p2,p3,p4\n");
        for k in 0..rows {
            text.push_str(&format!("{},0,0.25,0.5,1\n", k % 10));
        }
        text
    }

    #[test]
    fn classification_rows() {
        let images = parse_classification_csv(&fixture(10), CLASSES).unwrap();
        assert_eq!(images.len(), 10);
        assert_eq!(images[3].side, 2);
        assert_eq!(images[3].to_point(CLASSES).y[3], 1.0);
        let bad_label = "label,p1\n10,0.5\n";
        assert!(matches!(parse_classification_csv(bad_label, CLASSES), Err(IngestError::Label { line: 2, label: 10, .. })));
        let bad_pixel = "label,p1\n1,0.5\n2,1.5\n";
        assert!(matches!(parse_classification_csv(bad_pixel, CLASSES), Err(IngestError::Range { line: 3, .. })));
    }

    #[test]
    fn area_average_on_checkerboards() {
        let fine: Vec<f64> = (0..256).map(|k| ((k / 16 + k % 16) % 2) as f64).collect();
        assert!(rescale(&fine, 16, 8).iter().all(|&v| (v - 0.5).abs() < 1e-15));
        let blocks: Vec<f64> = (0..256).map(|k| ((k / 32 + (k % 16) / 2) % 2) as f64).collect();
        let coarse = rescale(&blocks, 16, 8);
        let want: Vec<f64> = (0..64).map(|k| ((k / 8 + k % 8) % 2) as f64).collect();
        assert_eq!(coarse, want);
    }

    #[test]
    fn fractional_overlap_preserves_mean() {
        let img: Vec<f64> = (0..256).map(|k| (k % 7) as f64 / 6.0).collect();
        let small = rescale(&img, 16, 14);
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!((mean(&small) - mean(&img)).abs() < 1e-12);
    }

    #[test]
    fn nearest_replication_up() {
        let img = vec![0.0, 1.0, 0.5, 0.25];
        assert_eq!(rescale(&img, 2, 4)[..4], [0.0, 0.0, 1.0, 1.0]);
        assert_eq!(rescale(&img, 2, 4)[12..], [0.5, 0.5, 0.25, 0.25]);
    }

    #[test]
    fn csv_round_trip() {
        let images = parse_classification_csv(&fixture(3), CLASSES).unwrap();
        let back = parse_classification_csv(&classification_csv_string(&images), CLASSES).unwrap();
        assert_eq!(back, images);
    }
}
