//! Library surface behind the `cofusion` binary: argument parsing, the
//! subcommands, run manifests, and the gradient verification harness.

pub mod args;
pub mod commands;
pub mod error;
pub mod gradcheck;
pub mod manifest;
pub mod rgb;

pub use error::{CliError, Result};

pub const USAGE: &str = "\
cofusion <subcommand> [flags]

subcommands:
  synth      --h H --w W --bands B [--seed S] [--kind gaussian-blobs|piecewise-materials] --out cube.hsc
  simulate   --input gt.hsc --scale 2|4|8 [--sigma auto|S] [--srf default|path] [--msi-bands N] --out-lr lr.hsc --out-ms ms.hsc
  train      --lr lr.hsc --ms ms.hsc --gt gt.hsc --steps N [--seed S] [--config cfg.json] [--hidden-dim D] [--topk K] [--ablation flags] [--learning-rate LR] [--lr-end LR] [--lr-schedule cosine|constant] [--weight-decay WD] [--lambda L] --out model.cfm [--log losses.ndjson]
  infer      --model model.cfm --lr lr.hsc --ms ms.hsc --out fused.hsc [--dump-rgb img.ppm] [--rgb-bands r,g,b]
  eval       --fused fused.hsc --ref gt.hsc [--scale 2|4|8] [--peak P] [--out metrics.json] | --no-ref --fused fused.hsc --lr lr.hsc --ms ms.hsc
  gradcheck  [--size small] [--seed S] [--corrupt op]

exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure
";

/// Dispatch a full argv (without the binary name).
pub fn run(argv: &[String]) -> Result<()> {
    let Some(sub) = argv.first() else {
        return error::usage(format!("no subcommand given\n{USAGE}"));
    };
    let rest = &argv[1..];
    match sub.as_str() {
        "synth" => commands::cmd_synth(rest),
        "simulate" => commands::cmd_simulate(rest),
        "train" => commands::cmd_train(rest),
        "infer" => commands::cmd_infer(rest),
        "eval" => commands::cmd_eval(rest),
        "gradcheck" => commands::cmd_gradcheck(rest),
        "help" | "--help" | "-h" => {
            println!("{USAGE}");
            Ok(())
        }
        other => error::usage(format!("unknown subcommand '{other}'\n{USAGE}")),
    }
}
