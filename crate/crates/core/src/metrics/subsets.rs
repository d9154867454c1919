use serde::{Deserialize, Serialize};

/// Per-frame metrics with the geometry used to group them. A missing
/// `dice`/`hd_mm` marks a segmentation failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub id: String,
    pub dice: Option<f64>,
    pub hd_mm: Option<f64>,
    pub depth_mm: f64,
    pub angle_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsetThresholds {
    pub depth_mm: f64,
    pub angle_deg: f64,
}

impl Default for SubsetThresholds {
    fn default() -> Self {
        SubsetThresholds {
            depth_mm: 150.0,
            angle_deg: 70.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSd {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub sd: f64,
}

impl MeanSd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(MeanSd { mean, sd })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupStats {
    pub name: String,
    pub n: usize,
    pub failures: usize,
    pub dice: Option<MeanSd>,
    pub hd_mm: Option<MeanSd>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetReport {
    pub total: usize,
    pub groups: Vec<GroupStats>,
}

fn group(name: String, rows: &[&MetricRow]) -> GroupStats {
    let dice: Vec<f64> = rows.iter().filter_map(|r| r.dice).collect();
    let hd: Vec<f64> = rows.iter().filter_map(|r| r.hd_mm).collect();
    GroupStats {
        name,
        n: rows.len(),
        failures: rows.iter().filter(|r| r.dice.is_none() || r.hd_mm.is_none()).count(),
        dice: MeanSd::of(&dice),
        hd_mm: MeanSd::of(&hd),
    }
}

/// Mean ± sd of Dice and Hausdorff for depth below/at-or-above and sector
/// angle below/at-or-above the thresholds.
pub fn subset_report(rows: &[MetricRow], thresholds: SubsetThresholds) -> SubsetReport {
    let d = thresholds.depth_mm;
    let a = thresholds.angle_deg;
    let pick = |f: &dyn Fn(&MetricRow) -> bool| rows.iter().filter(|r| f(r)).collect::<Vec<_>>();
    SubsetReport {
        total: rows.len(),
        groups: vec![
            group(format!("depth < {d} mm"), &pick(&|r| r.depth_mm < d)),
            group(format!("depth >= {d} mm"), &pick(&|r| r.depth_mm >= d)),
            group(format!("angle < {a} deg"), &pick(&|r| r.angle_deg < a)),
            group(format!("angle >= {a} deg"), &pick(&|r| r.angle_deg >= a)),
        ],
    }
}
