#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use echoaug::io::{write_frame, FramePaths, Metadata};
use echoaug::{sector_mask, Frame64, Geometry64, Image64, LabelMask};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_echoaug"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Sector frame with smooth speckle-free texture and LV/MYO/LA labels.
/// `i` shifts depth, angle and the anatomy so frames differ.
pub fn synthetic_frame(i: usize, size: usize) -> Frame64 {
    let s = size as f64;
    let depth = 110.0 + 8.0 * i as f64;
    let angle = 60.0 + 2.0 * (i % 6) as f64;
    let geometry = Geometry64::new((1.0, (s - 1.0) / 2.0), depth, angle, s * 0.9, (size, size)).unwrap();
    let inside = sector_mask(&geometry);
    let phase = i as f64 * 0.7;
    let image = Image64::from_fn(size, size, |(r, c)| {
        if inside[[r, c]] {
            let (y, x) = (r as f64 / s, c as f64 / s);
            0.45 + 0.3 * (7.0 * y + phase).sin() * (5.0 * x - phase).cos()
        } else {
            0.0
        }
    })
    .unwrap();
    let cy = s * (0.42 + 0.01 * (i % 3) as f64);
    let cx = s * 0.5;
    let mask = LabelMask::from_fn(size, size, |(r, c)| {
        let dy = (r as f64 - cy) / (s * 0.22);
        let dx = (c as f64 - cx) / (s * 0.1);
        let e = dy * dy + dx * dx;
        let la = ((r as f64 - s * 0.72) / (s * 0.07)).powi(2) + ((c as f64 - cx) / (s * 0.08)).powi(2);
        if !inside[[r, c]] {
            0
        } else if e <= 1.0 {
            1
        } else if e <= 1.6 {
            2
        } else if la <= 1.0 {
            3
        } else {
            0
        }
    })
    .unwrap();
    Frame64::new(image, Some(mask), geometry).unwrap()
}

pub fn write_dataset(dir: &Path, n: usize, size: usize) -> Vec<PathBuf> {
    std::fs::create_dir_all(dir).unwrap();
    (0..n)
        .map(|i| {
            let id = format!("frame{i:02}");
            let paths = FramePaths::new(dir, &id);
            write_frame(&paths, &synthetic_frame(i, size), &Metadata::default()).unwrap();
            paths.image
        })
        .collect()
}

/// Every file under `dir`, sorted, with contents.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}
