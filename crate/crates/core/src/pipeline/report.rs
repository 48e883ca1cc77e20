//! Per-stage size and quality report.

use std::fmt::Write as _;

use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageRow {
    pub stage: String,
    pub primitives: usize,
    pub bytes: usize,
    /// Baseline bytes over this stage's bytes.
    pub gain: f64,
    /// Previous stage's bytes over this stage's bytes.
    pub step_gain: f64,
    pub psnr: f64,
    pub ssim: f64,
    /// Input PSNR minus this stage's PSNR.
    pub psnr_drop: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StageReport {
    pub rows: Vec<StageRow>,
    /// Input primitive count at 59 floats each.
    pub baseline_bytes: usize,
    /// `ground_truth` or `input`.
    pub reference: String,
    pub eval_views: usize,
    pub eval_width: u32,
    pub eval_height: u32,
}

impl StageReport {
    pub(crate) fn push(
        &mut self,
        stage: &str,
        primitives: usize,
        bytes: usize,
        quality: (f64, f64),
        seconds: f64,
    ) {
        let prev = self.rows.last().map(|r| r.bytes);
        let input_psnr = self.rows.first().map_or(quality.0, |r| r.psnr);
        let drop = if input_psnr.is_infinite() && quality.0.is_infinite() {
            0.0
        } else {
            input_psnr - quality.0
        };
        self.rows.push(StageRow {
            stage: stage.to_string(),
            primitives,
            bytes,
            gain: self.baseline_bytes as f64 / bytes as f64,
            step_gain: prev.map_or(1.0, |p| p as f64 / bytes as f64),
            psnr: quality.0,
            ssim: quality.1,
            psnr_drop: drop,
            seconds,
        });
    }

    pub fn last(&self) -> &StageRow {
        self.rows.last().expect("report has rows")
    }

    /// Baseline bytes over final bytes.
    pub fn total_gain(&self) -> f64 {
        self.last().gain
    }

    pub fn psnr_drop(&self) -> f64 {
        self.last().psnr_drop
    }

    pub fn to_csv(&self) -> String {
        let mut s =
            String::from("stage,primitives,bytes,gain,step_gain,psnr,ssim,psnr_drop,seconds\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.3}",
                r.stage,
                r.primitives,
                r.bytes,
                r.gain,
                r.step_gain,
                r.psnr,
                r.ssim,
                r.psnr_drop,
                r.seconds
            );
        }
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = format!(
            "{:<16} {:>11} {:>13} {:>8} {:>8} {:>8} {:>7} {:>8}\n",
            "stage", "primitives", "bytes", "gain", "PSNR", "SSIM", "dPSNR", "time"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<16} {:>11} {:>13} {:>7.2}x {:>8.3} {:>8.4} {:>7.3} {:>7.2}s",
                r.stage, r.primitives, r.bytes, r.gain, r.psnr, r.ssim, r.psnr_drop, r.seconds
            );
        }
        let _ = writeln!(
            s,
            "reference: {} | {} views at {}x{}",
            self.reference, self.eval_views, self.eval_width, self.eval_height
        );
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
