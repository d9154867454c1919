use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use echoaug::diffusion::{Denoiser, GaussianOracle, NoiseSchedule};
use echoaug::ef::{bland_altman as agreement, exam_ef, feasibility, is_out_of_range, Cycle, EfOutcome, ExamRecord, PhaseFrame};
use echoaug::io::{self, Metadata, IMAGE_SUFFIX, MASK_SUFFIX, META_SUFFIX};
use echoaug::metrics::{dice as dice_of, hausdorff_mm, subset_report, MetricRow, SubsetThresholds};
use echoaug::pipeline::{augment_dataset, AugmentOptions, Augmenter};
use echoaug::survey::{build_plan, summarize, ResponseStore, SurveyPlan};
use echoaug::{rng, Image, KeepMask, Label};
use echoaug_onnx::OnnxDenoiser;
use log::{info, warn};

use crate::config::RunConfig;

/// The plan copy kept inside a response store.
pub const STORE_PLAN: &str = "plan.json";

fn denoiser(cfg: &RunConfig, chain: &NoiseSchedule<f64>, shape: (usize, usize)) -> Result<Box<dyn Denoiser<f64>>> {
    Ok(match &cfg.model {
        Some(path) => Box::new(OnnxDenoiser::load(path, shape)?),
        None => Box::new(GaussianOracle::uniform(shape, cfg.toy_mean, cfg.toy_variance, chain.clone())?),
    })
}

fn train_schedule(cfg: &RunConfig) -> Result<NoiseSchedule<f64>> {
    Ok(NoiseSchedule::cosine(cfg.train_steps)?)
}

fn parent_dir(path: &Path) -> &Path {
    path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."))
}

pub fn schedule_inspect(steps: usize, respace: Option<usize>, csv_out: Option<&Path>) -> Result<()> {
    let train = NoiseSchedule::<f64>::cosine(steps)?;
    let s = match respace {
        Some(k) => train.respaced(k)?,
        None => train,
    };
    let last = s.len() - 1;
    let mut out = String::new();
    let _ = writeln!(out, "steps={}", s.len());
    let _ = writeln!(out, "train_steps={steps}");
    let _ = writeln!(out, "alpha_bar_first={:e}", s.alpha_bar(0));
    let _ = writeln!(out, "alpha_bar_last={:e}", s.alpha_bar(last));
    let _ = writeln!(out, "beta_first={:e}", s.beta(0));
    let _ = writeln!(out, "beta_last={:e}", s.beta(last));
    print!("{out}");
    if let Some(path) = csv_out {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "model_t", "beta", "alpha_bar"])?;
        for t in 0..s.len() {
            w.write_record([
                t.to_string(),
                s.model_timestep(t).to_string(),
                format!("{:e}", s.beta(t)),
                format!("{:e}", s.alpha_bar(t)),
            ])?;
        }
        w.flush()?;
    }
    Ok(())
}

pub fn sample(cfg: &RunConfig, count: usize, size: usize, out: &Path) -> Result<()> {
    if size == 0 {
        bail!("size must be positive");
    }
    let chain = train_schedule(cfg)?.respaced(cfg.repaint.inference_steps)?;
    let d = denoiser(cfg, &chain, (size, size))?;
    cfg.echo(out)?;
    for i in 0..count {
        let mut r = rng::stream(cfg.seed, "sample", i as u64);
        let x = echoaug::diffusion::sample(&chain, &*d, (size, size), &mut r)?;
        let path = out.join(format!("sample_{i:04}.png"));
        io::write_image(&path, &Image::from_model_domain(&x))?;
        info!("wrote {}", path.display());
    }
    println!("samples={count}");
    Ok(())
}

pub fn inpaint(cfg: &RunConfig, image: &Path, keep: &Path, out: &Path) -> Result<()> {
    let input = io::read_image::<f64>(image)?;
    let keep = io::read_image::<f64>(keep)?;
    let keep = KeepMask::new(keep.pixels().mapv(|v| v > 0.0));
    let train = train_schedule(cfg)?;
    let chain = cfg.repaint.chain(&train)?;
    let d = denoiser(cfg, &chain, input.shape())?;
    let mut r = rng::stream(cfg.seed, "inpaint", 0);
    let result = echoaug::repaint::inpaint(&train, &*d, &input, &keep, &cfg.repaint, &mut r)?;
    cfg.echo(parent_dir(out))?;
    io::write_image(out, &result)?;
    println!("synthesized_pixels={}", keep.synthesized_count());
    Ok(())
}

fn first_frame_shape(input: &Path) -> Result<(usize, usize)> {
    for paths in io::discover_frames(input)? {
        if let Ok(img) = io::read_image::<f64>(&paths.image) {
            return Ok(img.shape());
        }
    }
    Ok(echoaug::geometry::DEFAULT_SIZE)
}

pub fn augment(cfg: &RunConfig, input: &Path, output: &Path) -> Result<()> {
    if !input.is_dir() {
        bail!("input directory {} does not exist", input.display());
    }
    let train = train_schedule(cfg)?;
    let chain = cfg.repaint.chain(&train)?;
    let d = denoiser(cfg, &chain, first_frame_shape(input)?)?;
    let augmenter = Augmenter {
        denoiser: &*d,
        schedule: &train,
        repaint: cfg.repaint,
        family: cfg.family,
    };
    let options = AugmentOptions {
        variants: cfg.variants,
        master_seed: cfg.seed,
        workers: cfg.workers,
    };
    cfg.echo(output)?;
    let summary = augment_dataset(&augmenter, input, output, &options)?;
    print!("{}", summary.render());
    Ok(())
}

/// Frame ids in `dir` that have a mask.
fn mask_ids(dir: &Path) -> Result<Vec<String>> {
    let mut ids = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let name = entry?.file_name();
        if let Some(id) = name.to_string_lossy().strip_suffix(MASK_SUFFIX) {
            ids.push(id.to_string());
        }
    }
    ids.sort();
    Ok(ids)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

pub fn metrics(pred: &Path, reference: &Path, label: Label, report: &Path, subsets: Option<&Path>) -> Result<()> {
    let mut rows = Vec::new();
    for id in mask_ids(reference)? {
        let truth = io::read_mask(&reference.join(format!("{id}{MASK_SUFFIX}")))?;
        let meta_path = reference.join(format!("{id}{META_SUFFIX}"));
        let geometry = Metadata::read(&meta_path)?.geometry::<f64>(truth.shape(), &meta_path.display().to_string())?;
        let pred_path = pred.join(format!("{id}{MASK_SUFFIX}"));
        let (dice, hd_mm) = match io::read_mask(&pred_path) {
            Ok(p) => (
                dice_of(&p, &truth, label).ok(),
                hausdorff_mm(&p, &truth, label, geometry.mm_per_px()).ok(),
            ),
            Err(e) => {
                warn!("{id}: no usable prediction: {e}");
                (None, None)
            }
        };
        rows.push(MetricRow {
            id,
            dice,
            hd_mm,
            depth_mm: geometry.depth_mm(),
            angle_deg: geometry.angle_deg(),
        });
    }
    let mut w = csv::Writer::from_path(report)?;
    w.write_record(["id", "dice", "hd_mm", "depth_mm", "angle_deg"])?;
    for r in &rows {
        w.write_record([
            r.id.clone(),
            fmt_opt(r.dice),
            fmt_opt(r.hd_mm),
            r.depth_mm.to_string(),
            r.angle_deg.to_string(),
        ])?;
    }
    w.flush()?;
    let table = subset_report(&rows, SubsetThresholds::default());
    let json = serde_json::to_string_pretty(&table)?;
    if let Some(path) = subsets {
        std::fs::write(path, json.clone() + "\n")?;
    }
    println!("{json}");
    Ok(())
}

fn read_phase(dir: &Path, stem: &str) -> Result<PhaseFrame<f64>> {
    let mask = io::read_mask(&dir.join(format!("{stem}{MASK_SUFFIX}")))?;
    let meta_path = dir.join(format!("{stem}{META_SUFFIX}"));
    let geometry = Metadata::read(&meta_path)?.geometry(mask.shape(), &meta_path.display().to_string())?;
    Ok(PhaseFrame { mask, geometry })
}

/// Exam directory layout: `<view>_<cycle>_<ed|es>_msk.png` plus the matching
/// `_meta.txt` for view `a2c`/`a4c`, and an optional `exam.txt` with
/// `manual_ef=<fraction>`.
pub fn read_exam(dir: &Path) -> Result<ExamRecord<f64>> {
    let patient_id = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut cycles: BTreeMap<(String, u32), ()> = BTreeMap::new();
    for id in mask_ids(dir)? {
        let parts: Vec<&str> = id.split('_').collect();
        if let [view @ ("a2c" | "a4c"), cycle, "ed" | "es"] = parts.as_slice() {
            if let Ok(c) = cycle.parse() {
                cycles.insert((view.to_string(), c), ());
            }
        }
    }
    let mut exam = ExamRecord {
        patient_id,
        a2c: Vec::new(),
        a4c: Vec::new(),
        manual_ef: None,
    };
    for (view, c) in cycles.keys() {
        let cycle = Cycle {
            ed: read_phase(dir, &format!("{view}_{c}_ed"))?,
            es: read_phase(dir, &format!("{view}_{c}_es"))?,
        };
        match view.as_str() {
            "a2c" => exam.a2c.push(cycle),
            _ => exam.a4c.push(cycle),
        }
    }
    let info = dir.join("exam.txt");
    if info.exists() {
        let meta = Metadata::read(&info)?;
        if meta.get("manual_ef").is_some() {
            exam.manual_ef = Some(meta.number("manual_ef", &info.display().to_string())?);
        }
    }
    Ok(exam)
}

pub fn ef(exams: &Path, out: &Path) -> Result<()> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(exams)
        .with_context(|| format!("reading {}", exams.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    let mut w = csv::Writer::from_path(out)?;
    w.write_record(["patient_id", "auto_ef", "manual_ef", "out_of_range", "n_pairs", "failed"])?;
    let mut outcomes = Vec::new();
    for dir in dirs {
        let exam = read_exam(&dir)?;
        let outcome = exam_ef(&exam);
        let out_of_range = match is_out_of_range(&exam) {
            Ok(v) => v.to_string(),
            Err(e) => {
                warn!("{}: {e}", exam.patient_id);
                String::new()
            }
        };
        let (auto, pairs, failed) = match &outcome {
            EfOutcome::Computed(r) => (
                format!("{}", r.ef),
                r.pairs.len(),
                (r.failed_a2c.len() + r.failed_a4c.len()).to_string(),
            ),
            EfOutcome::Omitted { reason } => (String::new(), 0, reason.clone()),
        };
        w.write_record([
            exam.patient_id.clone(),
            auto,
            fmt_opt(exam.manual_ef),
            out_of_range,
            pairs.to_string(),
            failed,
        ])?;
        outcomes.push(outcome);
    }
    w.flush()?;
    let f = feasibility(&outcomes);
    println!(
        "exams={}\ncomputed={}\nomitted={}\nfeasibility={:.4}",
        f.total,
        f.computed,
        f.omitted,
        f.fraction()
    );
    Ok(())
}

pub fn bland_altman(input: &Path, split: Option<&str>, out: &Path) -> Result<()> {
    let mut reader = csv::Reader::from_path(input)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("{} has no `{name}` column", input.display()))
    };
    let (auto_col, manual_col) = (col("auto_ef")?, col("manual_ef")?);
    let split_col = split.map(col).transpose()?;
    let id_col = headers.iter().position(|h| h == "patient_id");

    // (group, id, auto, manual)
    let mut rows: Vec<(String, String, f64, f64)> = Vec::new();
    for (n, rec) in reader.records().enumerate() {
        let rec = rec?;
        let (a, m) = (rec.get(auto_col).unwrap_or(""), rec.get(manual_col).unwrap_or(""));
        if a.is_empty() || m.is_empty() {
            continue;
        }
        let parse = |s: &str| s.parse::<f64>().with_context(|| format!("row {}: `{s}` is not a number", n + 1));
        let group = split_col.and_then(|c| rec.get(c)).unwrap_or("").to_string();
        let id = id_col.and_then(|c| rec.get(c)).unwrap_or("").to_string();
        rows.push((group, id, parse(a)?, parse(m)?));
    }
    let mut groups: BTreeMap<String, Vec<&(String, String, f64, f64)>> = BTreeMap::new();
    groups.insert("all".into(), rows.iter().collect());
    if split.is_some() {
        for r in &rows {
            groups.entry(format!("{}={}", split.unwrap_or_default(), r.0)).or_default().push(r);
        }
    }

    std::fs::create_dir_all(out)?;
    let mut stats_w = csv::Writer::from_path(out.join("bland_altman_stats.csv"))?;
    stats_w.write_record(["group", "n", "bias", "sd", "loa_low", "loa_high"])?;
    let mut points_w = csv::Writer::from_path(out.join("bland_altman_points.csv"))?;
    points_w.write_record(["group", "patient_id", "mean", "difference"])?;
    for (name, members) in &groups {
        let pairs: Vec<(f64, f64)> = members.iter().map(|r| (r.2, r.3)).collect();
        match agreement(&pairs) {
            Ok((s, points)) => {
                stats_w.write_record([
                    name.clone(),
                    s.n.to_string(),
                    s.bias.to_string(),
                    s.sd.to_string(),
                    s.loa_low.to_string(),
                    s.loa_high.to_string(),
                ])?;
                println!(
                    "{name}: n={} bias={:.4} loa=[{:.4}, {:.4}]",
                    s.n, s.bias, s.loa_low, s.loa_high
                );
                for (r, p) in members.iter().zip(points) {
                    points_w.write_record([name.clone(), r.1.clone(), p.mean.to_string(), p.difference.to_string()])?;
                }
            }
            Err(e) => warn!("{name}: {e}"),
        }
    }
    stats_w.flush()?;
    points_w.flush()?;
    Ok(())
}

/// Image ids in `dir`: PNG file names without `_img.png` / `.png`.
fn image_ids(dir: &Path) -> Result<Vec<String>> {
    let mut ids = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let name = entry?.file_name().to_string_lossy().into_owned();
        if name.ends_with(MASK_SUFFIX) {
            continue;
        }
        if let Some(id) = name.strip_suffix(IMAGE_SUFFIX).or_else(|| name.strip_suffix(".png")) {
            ids.push(id.to_string());
        }
    }
    ids.sort();
    ids.dedup();
    Ok(ids)
}

pub fn survey_plan(cfg: &RunConfig, real: &Path, synth: &Path, out: &Path) -> Result<()> {
    let mut r = rng::stream(cfg.seed, "survey-plan", 0);
    let plan = build_plan(&image_ids(real)?, &image_ids(synth)?, &mut r)?;
    plan.write(out)?;
    cfg.echo(parent_dir(out))?;
    println!("pairs={}", plan.len());
    Ok(())
}

pub fn survey_serve(
    plan_path: &Path,
    addr: SocketAddr,
    store_dir: &Path,
    images: &Path,
    static_dir: Option<&Path>,
) -> Result<()> {
    let plan = SurveyPlan::read(plan_path)?;
    std::fs::create_dir_all(store_dir)?;
    let kept = store_dir.join(STORE_PLAN);
    if kept.exists() {
        if SurveyPlan::read(&kept)? != plan {
            bail!("{} belongs to a different plan", store_dir.display());
        }
    } else {
        plan.write(&kept)?;
    }
    let store = ResponseStore::open(store_dir, plan.len())?;
    let state = Arc::new(echoaug_survey::AppState {
        plan,
        store,
        images: images.to_path_buf(),
    });
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(echoaug_survey::serve(state, static_dir, addr))?;
    Ok(())
}

pub fn survey_report(store_dir: &Path, plan: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let plan_path = plan.map(Path::to_path_buf).unwrap_or_else(|| store_dir.join(STORE_PLAN));
    let plan = SurveyPlan::read(&plan_path).with_context(|| format!("reading plan {}", plan_path.display()))?;
    if !store_dir.is_dir() {
        bail!("store {} does not exist", store_dir.display());
    }
    let store = ResponseStore::open(store_dir, plan.len())?;
    let summary = summarize(&store.snapshot().responses, &plan);
    let json = serde_json::to_string_pretty(&summary)?;
    if let Some(path) = out {
        std::fs::write(path, json.clone() + "\n")?;
    }
    println!("{json}");
    Ok(())
}
