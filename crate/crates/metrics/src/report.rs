//! Aggregated score report with canonical JSON output.

use cofusion_datasim::HyperCube;

use crate::error::Result;
use crate::full_ref::{ergas, psnr, sam, ssim_metric};
use crate::noref::{d_lambda, d_s, qnr};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportMode {
    FullReference,
    NoReference,
    Both,
}

impl ReportMode {
    fn as_str(&self) -> &'static str {
        match self {
            ReportMode::FullReference => "full-reference",
            ReportMode::NoReference => "no-reference",
            ReportMode::Both => "both",
        }
    }
}

/// Scores for one fused image. Full-reference fields are absent in
/// no-reference mode and vice versa.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub mode: ReportMode,
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
    pub sam: Option<f64>,
    pub ergas: Option<f64>,
    pub d_lambda: Option<f64>,
    pub d_s: Option<f64>,
    pub qnr: Option<f64>,
}

impl MetricsReport {
    pub fn full_reference(
        fused: &HyperCube,
        reference: &HyperCube,
        peak: f64,
        scale_ratio: f64,
    ) -> Result<Self> {
        Ok(MetricsReport {
            mode: ReportMode::FullReference,
            psnr: Some(psnr(fused, reference, peak)?),
            ssim: Some(ssim_metric(fused, reference)?),
            sam: Some(sam(fused, reference)?),
            ergas: Some(ergas(fused, reference, scale_ratio)?),
            d_lambda: None,
            d_s: None,
            qnr: None,
        })
    }

    pub fn no_reference(fused: &HyperCube, hrmsi: &HyperCube, lrhsi: &HyperCube) -> Result<Self> {
        let dl = d_lambda(fused, lrhsi)?;
        let ds = d_s(fused, hrmsi, lrhsi)?;
        Ok(MetricsReport {
            mode: ReportMode::NoReference,
            psnr: None,
            ssim: None,
            sam: None,
            ergas: None,
            d_lambda: Some(dl),
            d_s: Some(ds),
            qnr: Some(qnr(dl, ds)?),
        })
    }

    /// Canonical JSON: fixed key order, 6-decimal values, infinite PSNR
    /// serialized as the string "inf".
    pub fn to_json(&self) -> String {
        let mut parts = vec![format!("\"mode\": \"{}\"", self.mode.as_str())];
        let fields = [
            ("psnr", self.psnr),
            ("ssim", self.ssim),
            ("sam", self.sam),
            ("ergas", self.ergas),
            ("d_lambda", self.d_lambda),
            ("d_s", self.d_s),
            ("qnr", self.qnr),
        ];
        for (name, value) in fields {
            if let Some(v) = value {
                if v.is_infinite() {
                    parts.push(format!("\"{name}\": \"inf\""));
                } else {
                    parts.push(format!("\"{name}\": {v:.6}"));
                }
            }
        }
        format!("{{{}}}", parts.join(", "))
    }
}
