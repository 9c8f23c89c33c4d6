//! Finite-difference verification suite over every primitive, every
//! network module, and the end-to-end forward through the training loss.
//!
//! Each check builds a scalar from leaf tensors, takes autodiff gradients
//! once, and compares them against central differences coordinate by
//! coordinate (sampled for the large parameter sets). The `corrupt` hook
//! scales the autodiff gradients of one named check by 1.5 before the
//! comparison, to demonstrate that the harness actually rejects a broken
//! backward rule.

use std::collections::BTreeSet;

use cofusion_model::{
    cofusion_forward, msg_build_pyramid, reconstruct, spacam_forward, specam_forward,
    sscfm_forward, ModelConfig, ModelParams,
};
use cofusion_objective::{l1_loss, ssim_loss, total_loss};
use cofusion_tensor::{Graph, HaarBands, Rng, Tensor};
use serde::Serialize;

pub const TOLERANCE: f64 = 1e-4;
const STEP: f64 = 1e-5;

#[derive(Debug, Serialize)]
pub struct OpReport {
    pub name: String,
    pub max_rel_err: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct GradReport {
    pub tolerance: f64,
    pub ops: Vec<OpReport>,
    pub pass: bool,
}

impl GradReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

type Build = Box<dyn Fn(&Graph, &[Tensor]) -> cofusion_tensor::Result<Tensor>>;

fn eval(build: &Build, inputs: &[Tensor]) -> f64 {
    let g = Graph::training();
    build(&g, inputs).expect("gradcheck build").item()
}

/// Central-difference comparison with optional gradient corruption.
fn fd_max_rel_err(
    build: &Build,
    inputs: &[Tensor],
    per_input: usize,
    sample_seed: u64,
    corrupt: bool,
) -> f64 {
    let g = Graph::training();
    let loss = build(&g, inputs).expect("gradcheck build");
    g.backward(&loss).expect("backward");
    let mut grads: Vec<Vec<f64>> = inputs
        .iter()
        .map(|t| t.grad().unwrap_or_else(|| vec![0.0; t.len()]))
        .collect();
    for t in inputs {
        t.clear_grad();
    }
    drop(g);
    if corrupt {
        for gr in grads.iter_mut() {
            for v in gr.iter_mut() {
                *v *= 1.5;
            }
        }
    }

    let mut rng = Rng::seed(sample_seed);
    let mut worst = 0.0f64;
    for (t, grad) in inputs.iter().zip(&grads) {
        let n = t.len();
        let coords: Vec<usize> = if per_input >= n {
            (0..n).collect()
        } else {
            let mut seen = BTreeSet::new();
            while seen.len() < per_input {
                seen.insert(rng.below(n));
            }
            seen.into_iter().collect()
        };
        for i in coords {
            let orig = t.data()[i];
            t.update_data(|d| d[i] = orig + STEP);
            let fp = eval(build, inputs);
            t.update_data(|d| d[i] = orig - STEP);
            let fm = eval(build, inputs);
            t.update_data(|d| d[i] = orig);
            let fd = (fp - fm) / (2.0 * STEP);
            let err = (grad[i] - fd).abs() / fd.abs().max(1.0);
            worst = worst.max(err);
        }
    }
    worst
}

/// Weighted sum so every output element has a distinct influence.
fn spread(g: &Graph, y: &Tensor) -> cofusion_tensor::Result<Tensor> {
    let n = y.len();
    let w: Vec<f64> = (0..n).map(|i| 0.25 + 0.05 * (i % 17) as f64).collect();
    let wt = Tensor::constant(vec![n], w)?;
    let flat = g.reshape(y, vec![n])?;
    g.sum_all(&g.mul(&flat, &wt)?)
}

fn rand_param(rng: &mut Rng, shape: Vec<usize>, scale: f64) -> Tensor {
    let n: usize = shape.iter().product();
    Tensor::param(shape, (0..n).map(|_| rng.range(-scale, scale)).collect()).unwrap()
}

struct Check {
    name: &'static str,
    inputs: Vec<Tensor>,
    per_input: usize,
    build: Build,
}

fn primitive_checks(seed: u64) -> Vec<Check> {
    let mut rng = Rng::seed(Rng::derive(seed, 1));
    let mut checks: Vec<Check> = Vec::new();
    let mut push = |name: &'static str, inputs: Vec<Tensor>, build: Build| {
        checks.push(Check {
            name,
            inputs,
            per_input: usize::MAX,
            build,
        });
    };

    let a = rand_param(&mut rng, vec![6], 0.1);
    let b = rand_param(&mut rng, vec![6], 0.1);
    // offset so |b| stays away from zero for div
    let b_off = Tensor::param(
        vec![6],
        b.to_vec().iter().map(|v| v + 0.5).collect(),
    )
    .unwrap();
    push("add", vec![a.clone(), b.clone()], Box::new(|g, i| spread(g, &g.add(&i[0], &i[1])?)));
    push("sub", vec![a.clone(), b.clone()], Box::new(|g, i| spread(g, &g.sub(&i[0], &i[1])?)));
    push("mul", vec![a.clone(), b.clone()], Box::new(|g, i| spread(g, &g.mul(&i[0], &i[1])?)));
    push("div", vec![a.clone(), b_off], Box::new(|g, i| spread(g, &g.div(&i[0], &i[1])?)));
    push("scale", vec![a.clone()], Box::new(|g, i| spread(g, &g.scale(&i[0], 1.7)?)));
    push(
        "add_scalar",
        vec![a.clone()],
        Box::new(|g, i| spread(g, &g.add_scalar(&i[0], -0.3)?)),
    );
    let off = Tensor::param(
        vec![6],
        a.to_vec().iter().map(|v| v + v.signum() * 0.05 + 0.01).collect(),
    )
    .unwrap();
    push("abs", vec![off.clone()], Box::new(|g, i| spread(g, &g.abs(&i[0])?)));
    push("relu", vec![off], Box::new(|g, i| spread(g, &g.relu(&i[0])?)));
    push("sum_all", vec![a.clone()], Box::new(|g, i| g.sum_all(&i[0])));
    push("mean_all", vec![a.clone()], Box::new(|g, i| g.mean_all(&i[0])));
    push("gelu", vec![a.clone()], Box::new(|g, i| spread(g, &g.gelu(&i[0])?)));
    push("sigmoid", vec![a], Box::new(|g, i| spread(g, &g.sigmoid(&i[0])?)));

    let x = rand_param(&mut rng, vec![6, 8, 8], 0.1);
    push(
        "softmax",
        vec![rand_param(&mut rng, vec![4, 6], 1.0)],
        Box::new(|g, i| spread(g, &g.softmax(&i[0], 1)?)),
    );
    push(
        "softmax_spatial",
        vec![x.clone()],
        Box::new(|g, i| spread(g, &g.softmax_spatial(&i[0])?)),
    );

    let kd = rand_param(&mut rng, vec![6, 3, 3], 0.2);
    push(
        "conv2d_depthwise",
        vec![x.clone(), kd.clone()],
        Box::new(|g, i| spread(g, &g.conv2d_depthwise(&i[0], &i[1], 2, 1)?)),
    );
    push(
        "conv2d_depthwise_valid",
        vec![x.clone(), kd],
        Box::new(|g, i| spread(g, &g.conv2d_depthwise_padded(&i[0], &i[1], 1, 1, 0)?)),
    );
    push(
        "conv2d_pointwise",
        vec![
            x.clone(),
            rand_param(&mut rng, vec![4, 6], 0.2),
            rand_param(&mut rng, vec![4], 0.1),
        ],
        Box::new(|g, i| spread(g, &g.conv2d_pointwise(&i[0], &i[1], &i[2])?)),
    );
    push(
        "conv2d",
        vec![
            x.clone(),
            rand_param(&mut rng, vec![4, 6, 3, 3], 0.2),
            rand_param(&mut rng, vec![4], 0.1),
        ],
        Box::new(|g, i| spread(g, &g.conv2d(&i[0], &i[1], &i[2], 1, 1, 1)?)),
    );

    // well-separated values keep pooling argmaxes stable under +-h
    let mut vals: Vec<f64> = (0..6 * 64).map(|i| i as f64 * 0.01).collect();
    for v in vals.iter_mut() {
        *v += rng.range(0.0, 0.004);
    }
    let xp = Tensor::param(vec![6, 8, 8], vals).unwrap();
    push(
        "maxpool2d",
        vec![xp.clone()],
        Box::new(|g, i| spread(g, &g.maxpool2d(&i[0], 3, 1, 1)?)),
    );
    push(
        "global_maxpool",
        vec![xp],
        Box::new(|g, i| spread(g, &g.global_maxpool(&i[0])?)),
    );

    push(
        "layernorm",
        vec![
            x.clone(),
            rand_param(&mut rng, vec![6], 1.0),
            rand_param(&mut rng, vec![6], 0.2),
        ],
        Box::new(|g, i| spread(g, &g.layernorm(&i[0], &i[1], &i[2], 1e-5)?)),
    );
    push(
        "bilinear_resize_up",
        vec![x.clone()],
        Box::new(|g, i| spread(g, &g.bilinear_resize(&i[0], 16, 16)?)),
    );
    push(
        "bilinear_resize_down",
        vec![x.clone()],
        Box::new(|g, i| spread(g, &g.bilinear_resize(&i[0], 4, 4)?)),
    );
    push(
        "haar_dwt2",
        vec![x.clone()],
        Box::new(|g, i| {
            let bands = g.haar_dwt2(&i[0])?;
            let mut acc = spread(g, &bands.ll)?;
            for band in [&bands.lh, &bands.hl, &bands.hh] {
                acc = g.add(&acc, &spread(g, band)?)?;
            }
            Ok(acc)
        }),
    );
    push(
        "haar_idwt2",
        vec![
            rand_param(&mut rng, vec![2, 4, 4], 0.1),
            rand_param(&mut rng, vec![2, 4, 4], 0.1),
            rand_param(&mut rng, vec![2, 4, 4], 0.1),
            rand_param(&mut rng, vec![2, 4, 4], 0.1),
        ],
        Box::new(|g, i| {
            let bands = HaarBands {
                ll: i[0].clone(),
                lh: i[1].clone(),
                hl: i[2].clone(),
                hh: i[3].clone(),
            };
            spread(g, &g.haar_idwt2(&bands)?)
        }),
    );

    let mut tv: Vec<f64> = (0..12).map(|i| 0.06 * i as f64).collect();
    for v in tv.iter_mut() {
        *v += rng.range(0.0, 0.02);
    }
    push(
        "topk",
        vec![Tensor::param(vec![12], tv).unwrap()],
        Box::new(|g, i| spread(g, &g.topk(&i[0], 3)?.values)),
    );
    push(
        "zero_small",
        vec![Tensor::param(vec![6], vec![0.2, -0.15, 1e-6, -1e-6, 0.4, 0.09]).unwrap()],
        Box::new(|g, i| spread(g, &g.zero_small(&i[0], 1e-3)?)),
    );
    push(
        "dropout_mask",
        vec![rand_param(&mut rng, vec![24], 0.3)],
        Box::new(|g, i| spread(g, &g.dropout_mask(&i[0], 0.1, 99)?)),
    );

    push(
        "linear",
        vec![
            rand_param(&mut rng, vec![6], 0.3),
            rand_param(&mut rng, vec![4, 6], 0.3),
            rand_param(&mut rng, vec![4], 0.1),
        ],
        Box::new(|g, i| spread(g, &g.linear(&i[0], &i[1], &i[2])?)),
    );
    push(
        "outer",
        vec![
            rand_param(&mut rng, vec![5], 0.4),
            rand_param(&mut rng, vec![5], 0.4),
        ],
        Box::new(|g, i| spread(g, &g.outer(&i[0], &i[1])?)),
    );
    push(
        "diag_embed",
        vec![rand_param(&mut rng, vec![5], 0.4)],
        Box::new(|g, i| spread(g, &g.diag_embed(&i[0])?)),
    );
    push(
        "select_columns",
        vec![rand_param(&mut rng, vec![4, 5], 0.3)],
        Box::new(|g, i| spread(g, &g.select_columns(&i[0], &[4, 0, 2])?)),
    );
    push(
        "mul_channels",
        vec![x.clone(), rand_param(&mut rng, vec![6], 0.5)],
        Box::new(|g, i| spread(g, &g.mul_channels(&i[0], &i[1])?)),
    );
    push(
        "mul_scalar",
        vec![x.clone(), rand_param(&mut rng, vec![1], 0.8)],
        Box::new(|g, i| spread(g, &g.mul_scalar(&i[0], &i[1])?)),
    );
    push(
        "concat",
        vec![x.clone(), rand_param(&mut rng, vec![2, 8, 8], 0.1)],
        Box::new(|g, i| spread(g, &g.concat(&[&i[0], &i[1]], 0)?)),
    );
    push(
        "narrow",
        vec![x.clone()],
        Box::new(|g, i| spread(g, &g.narrow(&i[0], 0, 2, 3)?)),
    );
    push(
        "reshape",
        vec![x],
        Box::new(|g, i| spread(g, &g.reshape(&i[0], vec![8, 48])?)),
    );
    checks
}

/// Config used by the module and end-to-end checks: D=8, C=6 spectral
/// bands, 3 spatial bands, scale 2, K=3, 8x8 high-res extent.
fn check_config() -> ModelConfig {
    let mut cfg = ModelConfig::for_data(6, 3, 2);
    cfg.hidden_dim = 8;
    cfg.scm_topk = 3;
    cfg
}

/// Fresh init with every zero-initialized tensor (biases, the mixing
/// scalar, the traversal state) nudged to small random values, so no ReLU
/// or threshold sits exactly on its kink at the probe point.
fn generic_point_params(cfg: &ModelConfig, seed: u64) -> ModelParams {
    let params = ModelParams::init(cfg, seed).unwrap();
    let mut rng = Rng::seed(Rng::derive(seed, 0x6f66665f));
    for (_, t) in params.iter() {
        if t.data().iter().all(|&v| v == 0.0) {
            t.update_data(|d| {
                for v in d.iter_mut() {
                    *v = rng.range(0.02, 0.08) * if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
                }
            });
        }
    }
    params
}

/// Leaves = the parameters under `prefix`, with the module forward run on
/// fixed random inputs.
fn module_check(
    name: &'static str,
    seed: u64,
    prefix: &'static str,
    forward: impl Fn(&Graph, &ModelParams, &ModelConfig) -> cofusion_model::Result<Tensor> + 'static,
) -> Check {
    let cfg = check_config();
    let params = generic_point_params(&cfg, Rng::derive(seed, 2));
    let paths: Vec<String> = params
        .iter()
        .filter(|(p, _)| p.starts_with(prefix))
        .map(|(p, _)| p.clone())
        .collect();
    let inputs: Vec<Tensor> = paths.iter().map(|p| params.get(p).unwrap().clone()).collect();
    let base = params;
    let build: Build = Box::new(move |g, leaves| {
        let mut pm = base.clone();
        for (p, t) in paths.iter().zip(leaves) {
            pm.insert(p.clone(), t.clone());
        }
        forward(g, &pm, &check_config()).map_err(|e| {
            cofusion_tensor::TensorError::InvalidArgument {
                op: "module",
                detail: e.to_string(),
            }
        })
    });
    Check {
        name,
        inputs,
        per_input: 4,
        build,
    }
}

fn module_checks(seed: u64) -> Vec<Check> {
    let mut rng = Rng::seed(Rng::derive(seed, 3));
    let feat = rand_param(&mut rng, vec![8, 8, 8], 0.2);
    let feat2 = rand_param(&mut rng, vec![8, 8, 8], 0.2);
    let lr = rand_param(&mut rng, vec![6, 4, 4], 0.3);
    let ms = rand_param(&mut rng, vec![3, 8, 8], 0.3);
    let fused1 = rand_param(&mut rng, vec![8, 8, 8], 0.2);
    let fused2 = rand_param(&mut rng, vec![8, 4, 4], 0.2);
    let fused3 = rand_param(&mut rng, vec![8, 2, 2], 0.2);

    let mut checks = Vec::new();
    {
        let (lr, ms) = (lr.clone(), ms.clone());
        checks.push(module_check("msg_build_pyramid", seed, "msg.", move |g, p, cfg| {
            let pyr = msg_build_pyramid(g, p, cfg, &lr, &ms)?;
            let mut acc = spread(g, &pyr.local[0])?;
            for t in pyr.local.iter().skip(1).chain(pyr.global_proxy.iter()) {
                acc = g.add(&acc, &spread(g, t)?)?;
            }
            Ok(acc)
        }));
    }
    {
        let feat = feat.clone();
        checks.push(module_check(
            "spacam_forward",
            seed,
            "level1.spacam.",
            move |g, p, cfg| {
                let y = spacam_forward(g, p, cfg, 1, &feat)?;
                Ok(spread(g, &y)?)
            },
        ));
    }
    {
        let feat = feat.clone();
        checks.push(module_check(
            "specam_forward",
            seed,
            "level1.specam.",
            move |g, p, cfg| {
                let y = specam_forward(g, p, cfg, 1, &feat)?;
                Ok(spread(g, &y)?)
            },
        ));
    }
    {
        let (a, b) = (feat, feat2);
        checks.push(module_check(
            "sscfm_forward",
            seed,
            "level1.sscfm.",
            move |g, p, cfg| {
                let y = sscfm_forward(g, p, cfg, 1, &a, &b, 977)?;
                Ok(spread(g, &y)?)
            },
        ));
    }
    {
        let lr = lr.clone();
        checks.push(module_check("reconstruct", seed, "recon.", move |g, p, cfg| {
            let y = reconstruct(
                g,
                p,
                cfg,
                &[fused1.clone(), fused2.clone(), fused3.clone()],
                &lr,
            )?;
            Ok(spread(g, &y)?)
        }));
    }
    checks
}

fn loss_and_end_to_end_checks(seed: u64) -> Vec<Check> {
    let mut rng = Rng::seed(Rng::derive(seed, 4));
    let mut checks = Vec::new();

    let pred = rand_param(&mut rng, vec![2, 8, 8], 0.4);
    let reference = Tensor::constant(
        vec![2, 8, 8],
        (0..128).map(|_| rng.uniform()).collect(),
    )
    .unwrap();
    {
        let reference = reference.clone();
        checks.push(Check {
            name: "l1_loss",
            inputs: vec![pred.clone()],
            per_input: usize::MAX,
            build: Box::new(move |g, i| {
                l1_loss(g, &i[0], &reference).map_err(to_tensor_err)
            }),
        });
    }
    checks.push(Check {
        name: "ssim_loss",
        inputs: vec![pred],
        per_input: usize::MAX,
        build: Box::new(move |g, i| ssim_loss(g, &i[0], &reference).map_err(to_tensor_err)),
    });

    // end to end: every parameter of the full model through the training
    // objective, sampled coordinates
    let cfg = check_config();
    let params = generic_point_params(&cfg, Rng::derive(seed, 5));
    let lr = Tensor::constant(vec![6, 4, 4], (0..96).map(|_| rng.uniform()).collect()).unwrap();
    let ms = Tensor::constant(vec![3, 8, 8], (0..192).map(|_| rng.uniform()).collect()).unwrap();
    let gt = Tensor::constant(
        vec![6, 8, 8],
        (0..384).map(|_| rng.uniform()).collect(),
    )
    .unwrap();
    let paths: Vec<String> = params.iter().map(|(p, _)| p.clone()).collect();
    let inputs: Vec<Tensor> = params.iter().map(|(_, t)| t.clone()).collect();
    checks.push(Check {
        name: "cofusion_total_loss",
        inputs,
        per_input: 2,
        build: Box::new(move |g, leaves| {
            let mut pm = ModelParams::empty();
            for (p, t) in paths.iter().zip(leaves) {
                pm.insert(p.clone(), t.clone());
            }
            let pred = cofusion_forward(g, &pm, &check_config(), &lr, &ms, 31)
                .map_err(to_tensor_err)?;
            let (loss, _) = total_loss(g, &pred, &gt, 0.1).map_err(to_tensor_err)?;
            Ok(loss)
        }),
    });
    checks
}

fn to_tensor_err<E: std::fmt::Display>(e: E) -> cofusion_tensor::TensorError {
    cofusion_tensor::TensorError::InvalidArgument {
        op: "gradcheck",
        detail: e.to_string(),
    }
}

/// Run the whole suite. `corrupt` names a check whose autodiff gradients
/// are deliberately scaled, to prove the harness catches bad rules.
pub fn run_gradcheck(seed: u64, corrupt: Option<&str>) -> GradReport {
    let mut checks = primitive_checks(seed);
    checks.extend(module_checks(seed));
    checks.extend(loss_and_end_to_end_checks(seed));

    let mut ops = Vec::with_capacity(checks.len());
    for c in checks {
        let is_corrupted = corrupt == Some(c.name);
        let err = fd_max_rel_err(
            &c.build,
            &c.inputs,
            c.per_input,
            Rng::derive(seed, cofusion_tensor::fnv1a64(c.name.as_bytes())),
            is_corrupted,
        );
        ops.push(OpReport {
            name: c.name.to_string(),
            max_rel_err: err,
            pass: err < TOLERANCE,
        });
    }
    let pass = ops.iter().all(|o| o.pass);
    GradReport {
        tolerance: TOLERANCE,
        ops,
        pass,
    }
}
