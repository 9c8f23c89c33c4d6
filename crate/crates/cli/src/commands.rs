//! Subcommand implementations. Machine-readable output (metrics JSON,
//! gradcheck report) goes to stdout; progress goes to stderr; every run
//! writes a manifest next to its primary output.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use cofusion_datasim::{
    apply_srf, default_srf, min_kernel_size, read_hsc, synth_cube, wald_degrade, write_hsc,
    DegradationSpec, HyperCube, Srf, SynthKind,
};
use cofusion_metrics::MetricsReport;
use cofusion_model::{
    cofusion_forward, load_model, save_model, Ablation, ModelConfig, ModelParams,
};
use cofusion_objective::{
    train_loop, LrSchedule, TrainSchedule, DEFAULT_LAMBDA, DEFAULT_LR, DEFAULT_LR_END,
    DEFAULT_WEIGHT_DECAY,
};
use cofusion_tensor::Graph;
use serde::Deserialize;

use crate::args::ArgMap;
use crate::error::{usage, CliError, Result};
use crate::gradcheck::run_gradcheck;
use crate::manifest::ManifestBuilder;
use crate::rgb::{default_bands, parse_bands, write_ppm};

const ALLOWED_SCALES: [usize; 3] = [2, 4, 8];

fn path_of(raw: String) -> PathBuf {
    PathBuf::from(raw)
}

pub fn cmd_synth(args: &[String]) -> Result<()> {
    let mut a = ArgMap::parse(args, &[])?;
    let h: usize = a.require_parsed("h")?;
    let w: usize = a.require_parsed("w")?;
    let bands: usize = a.require_parsed("bands")?;
    let seed: u64 = a.take_parsed("seed")?.unwrap_or(0);
    let kind_raw = a.take("kind").unwrap_or_else(|| "piecewise-materials".into());
    let out = path_of(a.require("out")?);
    a.finish()?;

    if bands < 2 {
        return usage(format!("--bands must be >= 2, got {bands}"));
    }
    if h < 8 || w < 8 {
        return usage(format!("--h/--w must be >= 8, got {h}x{w}"));
    }
    let kind: SynthKind = kind_raw
        .parse()
        .map_err(|e: cofusion_datasim::DataError| CliError::Usage(e.to_string()))?;

    let mut manifest = ManifestBuilder::new("synth");
    manifest.seed(seed);
    let cube = synth_cube(h, w, bands, seed, kind)?;
    write_hsc(&out, &cube)?;
    manifest.output(&out);
    manifest.write(&out)?;
    eprintln!("synth: wrote {}x{}x{} cube to {}", h, w, bands, out.display());
    Ok(())
}

fn read_srf_file(path: &Path, hsi_bands: usize) -> Result<Srf> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("unreadable srf '{}': {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split_whitespace().map(|t| t.parse::<f64>()).collect();
        let row = row.map_err(|e| {
            CliError::Data(format!("srf line {}: {e}", lineno + 1))
        })?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Data("srf file has no rows".into()));
    }
    let cols = rows[0].len();
    if cols != hsi_bands || rows.iter().any(|r| r.len() != cols) {
        return Err(CliError::Data(format!(
            "srf must have {hsi_bands} columns per row"
        )));
    }
    Ok(Srf::new(rows.len(), cols, rows.concat())?)
}

pub fn cmd_simulate(args: &[String]) -> Result<()> {
    let mut a = ArgMap::parse(args, &[])?;
    let input = path_of(a.require("input")?);
    let scale: usize = a.require_parsed("scale")?;
    let sigma_raw = a.take("sigma").unwrap_or_else(|| "auto".into());
    let srf_raw = a.take("srf").unwrap_or_else(|| "default".into());
    let msi_bands: usize = a.take_parsed("msi-bands")?.unwrap_or(3);
    let out_lr = path_of(a.require("out-lr")?);
    let out_ms = path_of(a.require("out-ms")?);
    a.finish()?;

    if !ALLOWED_SCALES.contains(&scale) {
        return usage(format!(
            "--scale {scale} not supported; allowed scales: 2, 4, 8"
        ));
    }
    let sigma = if sigma_raw == "auto" {
        scale as f64 / 2.0
    } else {
        sigma_raw
            .parse::<f64>()
            .or_else(|_| usage(format!("--sigma must be 'auto' or a number, got '{sigma_raw}'")))?
    };
    if sigma <= 0.0 {
        return usage(format!("--sigma must be > 0, got {sigma}"));
    }

    let mut manifest = ManifestBuilder::new("simulate");
    manifest.input(&input)?;
    let gt = read_hsc(&input)?;
    let srf = if srf_raw == "default" {
        default_srf(gt.bands, msi_bands)?
    } else {
        let p = path_of(srf_raw);
        let srf = read_srf_file(&p, gt.bands)?;
        manifest.input(&p)?;
        srf
    };
    let spec = DegradationSpec::new(sigma, min_kernel_size(sigma), scale, srf)?;
    let lr = wald_degrade(&gt, &spec)?;
    let ms = apply_srf(&gt, &spec.srf)?;
    write_hsc(&out_lr, &lr)?;
    write_hsc(&out_ms, &ms)?;
    manifest.output(&out_lr).output(&out_ms);
    manifest.write(&out_lr)?;
    eprintln!(
        "simulate: {}x{}x{} -> lr {}x{}x{}, ms {}x{}x{} (sigma {sigma}, scale {scale})",
        gt.height, gt.width, gt.bands, lr.height, lr.width, lr.bands, ms.height, ms.width,
        ms.bands
    );
    Ok(())
}

/// Config file fields, all optional; mirrors the model configuration.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialConfig {
    hidden_dim: Option<usize>,
    scm_topk: Option<usize>,
    dilations: Option<Vec<usize>>,
    levels: Option<usize>,
    lka_kernels: Option<Vec<usize>>,
    split_groups: Option<usize>,
    dropout_rate: Option<f64>,
    ablation: Option<BTreeSet<Ablation>>,
    hsi_bands: Option<usize>,
    msi_bands: Option<usize>,
    scale_factor: Option<usize>,
}

fn overlay_config(base: &mut ModelConfig, file: PartialConfig) -> Result<()> {
    macro_rules! set {
        ($field:ident) => {
            if let Some(v) = file.$field {
                base.$field = v;
            }
        };
    }
    set!(hidden_dim);
    set!(scm_topk);
    set!(dilations);
    set!(levels);
    set!(lka_kernels);
    set!(split_groups);
    set!(dropout_rate);
    set!(ablation);
    for (name, given, derived) in [
        ("hsi_bands", file.hsi_bands, base.hsi_bands),
        ("msi_bands", file.msi_bands, base.msi_bands),
        ("scale_factor", file.scale_factor, base.scale_factor),
    ] {
        if let Some(v) = given {
            if v != derived {
                return usage(format!(
                    "config file sets {name}={v} but the data implies {derived}"
                ));
            }
        }
    }
    Ok(())
}

fn parse_ablation_list(raw: &str) -> Result<BTreeSet<Ablation>> {
    let mut set = BTreeSet::new();
    for item in raw.split(',').filter(|s| !s.trim().is_empty()) {
        let flag: Ablation = item
            .trim()
            .parse()
            .map_err(|e: cofusion_model::ModelError| CliError::Usage(e.to_string()))?;
        set.insert(flag);
    }
    Ok(set)
}

struct LoadedPair {
    lr: HyperCube,
    ms: HyperCube,
    scale: usize,
}

fn load_pair(lr_path: &Path, ms_path: &Path) -> Result<LoadedPair> {
    let lr = read_hsc(lr_path)?;
    let ms = read_hsc(ms_path)?;
    if lr.height == 0 || ms.height % lr.height != 0 {
        return Err(CliError::Data(format!(
            "hrmsi height {} is not an integer multiple of lrhsi height {}",
            ms.height, lr.height
        )));
    }
    let scale = ms.height / lr.height;
    if ms.width != lr.width * scale || scale < 2 {
        return Err(CliError::Data(format!(
            "inconsistent scales: lr {}x{}, ms {}x{}",
            lr.height, lr.width, ms.height, ms.width
        )));
    }
    Ok(LoadedPair { lr, ms, scale })
}

pub fn cmd_train(args: &[String]) -> Result<()> {
    let mut a = ArgMap::parse(args, &[])?;
    let lr_path = path_of(a.require("lr")?);
    let ms_path = path_of(a.require("ms")?);
    let gt_path = path_of(a.require("gt")?);
    let steps: usize = a.require_parsed("steps")?;
    let seed: u64 = a.take_parsed("seed")?.unwrap_or(42);
    let config_path = a.take("config").map(path_of);
    let out = path_of(a.require("out")?);
    let log_path = a.take("log").map(path_of);
    let hidden_dim: Option<usize> = a.take_parsed("hidden-dim")?;
    let topk: Option<usize> = a.take_parsed("topk")?;
    let ablation_raw = a.take("ablation");
    let learning_rate: Option<f64> = a.take_parsed("learning-rate")?;
    let lr_end: Option<f64> = a.take_parsed("lr-end")?;
    let lr_schedule = a.take("lr-schedule");
    let weight_decay: Option<f64> = a.take_parsed("weight-decay")?;
    let lambda: Option<f64> = a.take_parsed("lambda")?;
    a.finish()?;

    let mut manifest = ManifestBuilder::new("train");
    manifest.seed(seed);
    manifest.input(&lr_path)?.input(&ms_path)?.input(&gt_path)?;

    let pair = load_pair(&lr_path, &ms_path)?;
    let gt = read_hsc(&gt_path)?;
    if gt.height != pair.ms.height || gt.width != pair.ms.width || gt.bands != pair.lr.bands {
        return Err(CliError::Data(format!(
            "ground truth {}x{}x{} does not match ms extent {}x{} with lr bands {}",
            gt.height, gt.width, gt.bands, pair.ms.height, pair.ms.width, pair.lr.bands
        )));
    }

    let mut config = ModelConfig::for_data(pair.lr.bands, pair.ms.bands, pair.scale);
    if let Some(p) = &config_path {
        manifest.input(p)?;
        let text = std::fs::read_to_string(p)?;
        let partial: PartialConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Data(format!("config file: {e}")))?;
        overlay_config(&mut config, partial)?;
    }
    if let Some(d) = hidden_dim {
        config.hidden_dim = d;
    }
    if let Some(k) = topk {
        config.scm_topk = k;
    }
    if let Some(raw) = ablation_raw {
        config.ablation = parse_ablation_list(&raw)?;
    }
    config.validate()?;
    manifest.config_json(&config.to_canonical_json())?;

    let start = LrSchedule::Cosine {
        start: learning_rate.unwrap_or(DEFAULT_LR),
        end: lr_end.unwrap_or(DEFAULT_LR_END),
    };
    let schedule = TrainSchedule {
        steps,
        lr: match lr_schedule.as_deref() {
            None | Some("cosine") => start,
            Some("constant") => LrSchedule::Constant(learning_rate.unwrap_or(DEFAULT_LR)),
            Some(other) => {
                return usage(format!(
                    "--lr-schedule must be 'cosine' or 'constant', got '{other}'"
                ))
            }
        },
        weight_decay: weight_decay.unwrap_or(DEFAULT_WEIGHT_DECAY),
        loss_lambda: lambda.unwrap_or(DEFAULT_LAMBDA),
    };

    let dataset = vec![(
        pair.lr.to_tensor(),
        pair.ms.to_tensor(),
        gt.to_tensor(),
    )];
    eprintln!(
        "train: {} steps, D={}, K={}, seed {seed}",
        steps, config.hidden_dim, config.scm_topk
    );
    let (params, log) = train_loop(&dataset, &config, &schedule, seed)?;

    save_model(&out, &config, &params)?;
    manifest.output(&out);
    if let Some(lp) = &log_path {
        let mut body = String::new();
        for rec in &log {
            body.push_str(&rec.to_json_line());
            body.push('\n');
        }
        std::fs::write(lp, body)?;
        manifest.output(lp);
    }
    manifest.write(&out)?;
    if let (Some(first), Some(last)) = (log.first(), log.last()) {
        eprintln!(
            "train: loss {:.6} -> {:.6} over {} steps",
            first.total,
            last.total,
            log.len()
        );
    }
    Ok(())
}

/// Inference result before export clipping.
fn run_inference(
    config: &ModelConfig,
    params: &ModelParams,
    lr: &HyperCube,
    ms: &HyperCube,
) -> Result<HyperCube> {
    if lr.bands != config.hsi_bands || ms.bands != config.msi_bands {
        return Err(CliError::Data(format!(
            "band mismatch: model expects {}/{} (hsi/msi), inputs have {}/{}",
            config.hsi_bands, config.msi_bands, lr.bands, ms.bands
        )));
    }
    let g = Graph::inference();
    let fused = cofusion_forward(&g, params, config, &lr.to_tensor(), &ms.to_tensor(), 0)?;
    let mut cube = HyperCube::from_tensor(&fused)?;
    for v in cube.data.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(cube)
}

pub fn cmd_infer(args: &[String]) -> Result<()> {
    let mut a = ArgMap::parse(args, &[])?;
    let model_path = path_of(a.require("model")?);
    let lr_path = path_of(a.require("lr")?);
    let ms_path = path_of(a.require("ms")?);
    let out = path_of(a.require("out")?);
    let dump_rgb = a.take("dump-rgb").map(path_of);
    let rgb_bands = a.take("rgb-bands");
    a.finish()?;

    let mut manifest = ManifestBuilder::new("infer");
    manifest.input(&model_path)?.input(&lr_path)?.input(&ms_path)?;

    let (config, params) = load_model(&model_path)?;
    let pair = load_pair(&lr_path, &ms_path)?;
    if pair.scale != config.scale_factor {
        return Err(CliError::Data(format!(
            "inputs imply scale {}, model was built for {}",
            pair.scale, config.scale_factor
        )));
    }
    manifest.config_json(&config.to_canonical_json())?;
    let fused = run_inference(&config, &params, &pair.lr, &pair.ms)?;
    write_hsc(&out, &fused)?;
    manifest.output(&out);
    if let Some(ppm) = &dump_rgb {
        let bands = match rgb_bands {
            Some(raw) => parse_bands(&raw)?,
            None => default_bands(fused.bands),
        };
        write_ppm(ppm, &fused, bands)?;
        manifest.output(ppm);
    }
    manifest.write(&out)?;
    eprintln!(
        "infer: wrote fused {}x{}x{} to {}",
        fused.height,
        fused.width,
        fused.bands,
        out.display()
    );
    Ok(())
}

pub fn cmd_eval(args: &[String]) -> Result<()> {
    let mut a = ArgMap::parse(args, &["no-ref"])?;
    let no_ref = a.switch("no-ref");
    let fused_path = path_of(a.require("fused")?);
    let ref_path = a.take("ref").map(path_of);
    let lr_path = a.take("lr").map(path_of);
    let ms_path = a.take("ms").map(path_of);
    let scale: usize = a.take_parsed("scale")?.unwrap_or(4);
    let peak: f64 = a.take_parsed("peak")?.unwrap_or(1.0);
    let out = a.take("out").map(path_of);
    let dump_rgb = a.take("dump-rgb").map(path_of);
    let rgb_bands = a.take("rgb-bands");
    a.finish()?;

    let mut manifest = ManifestBuilder::new("eval");
    manifest.input(&fused_path)?;
    let fused = read_hsc(&fused_path)?;

    let report = match (no_ref, &ref_path, &lr_path, &ms_path) {
        (false, Some(rp), None, None) => {
            manifest.input(rp)?;
            let reference = read_hsc(rp)?;
            if !ALLOWED_SCALES.contains(&scale) {
                return usage(format!(
                    "--scale {scale} not supported; allowed scales: 2, 4, 8"
                ));
            }
            MetricsReport::full_reference(&fused, &reference, peak, 1.0 / scale as f64)?
        }
        (true, None, Some(lp), Some(mp)) => {
            manifest.input(lp)?.input(mp)?;
            let lr = read_hsc(lp)?;
            let ms = read_hsc(mp)?;
            MetricsReport::no_reference(&fused, &ms, &lr)?
        }
        _ => {
            return usage(
                "eval needs either '--fused F --ref R' (full-reference) or \
                 '--no-ref --fused F --lr L --ms M' (no-reference)",
            )
        }
    };

    let json = report.to_json();
    println!("{json}");
    let out_path = out.unwrap_or_else(|| {
        let mut s = fused_path.as_os_str().to_owned();
        s.push(".metrics.json");
        PathBuf::from(s)
    });
    std::fs::write(&out_path, format!("{json}\n"))?;
    manifest.output(&out_path);
    if let Some(ppm) = &dump_rgb {
        let bands = match rgb_bands {
            Some(raw) => parse_bands(&raw)?,
            None => default_bands(fused.bands),
        };
        write_ppm(ppm, &fused, bands)?;
        manifest.output(ppm);
    }
    manifest.write(&out_path)?;
    Ok(())
}

pub fn cmd_gradcheck(args: &[String]) -> Result<()> {
    let mut a = ArgMap::parse(args, &[])?;
    let size = a.take("size").unwrap_or_else(|| "small".into());
    let seed: u64 = a.take_parsed("seed")?.unwrap_or(0);
    let corrupt = a.take("corrupt");
    a.finish()?;
    if size != "small" {
        return usage(format!("--size supports only 'small', got '{size}'"));
    }

    let report = run_gradcheck(seed, corrupt.as_deref());
    println!("{}", report.to_json());
    if report.pass {
        eprintln!("gradcheck: all {} checks passed", report.ops.len());
        Ok(())
    } else {
        let bad: Vec<String> = report
            .ops
            .iter()
            .filter(|o| !o.pass)
            .map(|o| o.name.clone())
            .collect();
        Err(CliError::Numerical(format!(
            "gradient check failed for: {}",
            bad.join(", ")
        )))
    }
}
