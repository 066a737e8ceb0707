use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::run::{Metrics, RunReport, RunStatus, TrajectoryRecord};
use super::HarnessError;

/// Bumped whenever [`RECORD_COLUMNS`] changes.
pub const RECORD_SCHEMA_VERSION: u32 = 1;

pub const RECORD_COLUMNS: [&str; 12] = [
    "t", "s1_in", "s2_in", "sc_in", "s1_out", "s2_out", "sc_out", "f_est", "e", "u_fb_raw",
    "clamped", "backwash",
];

/// Trajectory as CSV: header row, one line per sample, flags as 0/1.
pub fn write_trajectory_csv<W: Write>(rec: &TrajectoryRecord, out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_COLUMNS)?;
    let flag = |b: bool| if b { "1" } else { "0" }.to_string();
    for r in &rec.rows {
        w.write_record([
            r.t.to_string(),
            r.s1_in.to_string(),
            r.s2_in.to_string(),
            r.sc_in.to_string(),
            r.s1_out.to_string(),
            r.s2_out.to_string(),
            r.sc_out.to_string(),
            r.f_est.to_string(),
            r.e.to_string(),
            r.u_fb_raw.to_string(),
            flag(r.clamped),
            flag(r.backwash),
        ])?;
    }
    w.flush()
        .map_err(|e| HarnessError::io("writing trajectory", e))?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct NitrogenBalance {
    pub inflow: f64,
    pub outflow: f64,
    pub converted: f64,
    pub clipped: f64,
    pub storage_change: f64,
    pub imbalance: f64,
}

/// Contents of the JSON file written next to each trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsSidecar {
    pub schema_version: u32,
    pub scenario: String,
    pub seed: u64,
    pub s2_target: f64,
    pub rows: usize,
    #[serde(flatten)]
    pub status: RunStatus,
    pub metrics: Option<Metrics>,
    pub metrics_error: Option<String>,
    pub nitrogen: NitrogenBalance,
    pub influent_exhausted: bool,
    pub warnings: Vec<String>,
}

impl MetricsSidecar {
    pub fn from_report(report: &RunReport) -> Self {
        let sc = &report.scenario;
        let ledger = &report.final_state.ledger;
        MetricsSidecar {
            schema_version: RECORD_SCHEMA_VERSION,
            scenario: sc.name.clone(),
            seed: sc.seed,
            s2_target: sc.controller.s2_target,
            rows: report.record.rows.len(),
            status: report.status.clone(),
            metrics: report.metrics.as_ref().ok().copied(),
            metrics_error: report.metrics.as_ref().err().map(|e| e.to_string()),
            nitrogen: NitrogenBalance {
                inflow: ledger.inflow,
                outflow: ledger.outflow,
                converted: ledger.converted,
                clipped: ledger.clipped,
                storage_change: report.final_state.nitrogen_storage(&sc.reactor)
                    - report.initial_storage,
                imbalance: report.nitrogen_imbalance(),
            },
            influent_exhausted: report.influent_exhausted,
            warnings: sc.warnings(),
        }
    }
}

pub fn write_metrics_json<W: Write>(report: &RunReport, out: W) -> Result<(), HarnessError> {
    serde_json::to_writer_pretty(out, &MetricsSidecar::from_report(report))?;
    Ok(())
}

fn create(path: &Path) -> Result<fs::File, HarnessError> {
    fs::File::create(path).map_err(|e| HarnessError::io(format!("creating {}", path.display()), e))
}

/// Writes `<stem>.csv` and `<stem>.metrics.json` into `dir`; returns both paths.
pub fn write_run_files(
    report: &RunReport,
    dir: &Path,
    stem: &str,
) -> Result<(PathBuf, PathBuf), HarnessError> {
    fs::create_dir_all(dir)
        .map_err(|e| HarnessError::io(format!("creating {}", dir.display()), e))?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.metrics.json"));
    write_trajectory_csv(&report.record, std::io::BufWriter::new(create(&csv_path)?))?;
    let mut json = create(&json_path)?;
    write_metrics_json(report, &mut json)?;
    writeln!(json).map_err(|e| HarnessError::io("writing metrics", e))?;
    Ok((csv_path, json_path))
}

/// Writes `<stem>.dat` (whitespace columns) and `<stem>.gp`, a gnuplot
/// script that stacks nitrate, nitrite and methanol against time.
pub fn write_plot_files(
    report: &RunReport,
    dir: &Path,
    stem: &str,
) -> Result<(PathBuf, PathBuf), HarnessError> {
    let dat_path = dir.join(format!("{stem}.dat"));
    let gp_path = dir.join(format!("{stem}.gp"));
    let io = |e| HarnessError::io(format!("writing {}", dat_path.display()), e);
    let mut dat = std::io::BufWriter::new(create(&dat_path)?);
    writeln!(dat, "# t_days s1_in s1_out s2_out s2_target sc_in backwash").map_err(io)?;
    for r in &report.record.rows {
        let target = report.scenario.controller.reference_at(r.t).y_star;
        writeln!(
            dat,
            "{} {} {} {} {} {} {}",
            r.t, r.s1_in, r.s1_out, r.s2_out, target, r.sc_in, r.backwash as u8
        )
        .map_err(io)?;
    }
    dat.flush().map_err(io)?;

    let data = dat_path.file_name().unwrap_or_default().to_string_lossy();
    let script = format!(
        "set terminal pngcairo size 900,1000\n\
         set output '{stem}.png'\n\
         set multiplot layout 3,1 title '{title}'\n\
         set xlabel 't (days)'\n\
         set ylabel 'S1 (g/m3)'\n\
         plot '{data}' using 1:2 with lines title 'S1,in', '' using 1:3 with lines title 'S1,out'\n\
         set ylabel 'S2 (g/m3)'\n\
         plot '{data}' using 1:4 with lines title 'S2,out', '' using 1:5 with lines dt 2 title 'S2,target'\n\
         set ylabel 'Sc,in (g/m3)'\n\
         plot '{data}' using 1:6 with lines title 'Sc,in'\n\
         unset multiplot\n",
        title = report.scenario.name,
    );
    fs::write(&gp_path, script)
        .map_err(|e| HarnessError::io(format!("writing {}", gp_path.display()), e))?;
    Ok((dat_path, gp_path))
}

/// One CSV line per sweep member.
pub fn write_sweep_summary<W: Write>(reports: &[RunReport], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "s2_target",
        "status",
        "rmse_s2",
        "mean_sc_in",
        "pct_time_in_band",
        "max_s2",
        "clip_events",
    ])?;
    for r in reports {
        let status = match &r.status {
            RunStatus::Completed => "completed".to_string(),
            RunStatus::Failed { at_days, .. } => format!("failed at {at_days}"),
        };
        let mut line = vec![r.scenario.controller.s2_target.to_string(), status];
        match &r.metrics {
            Ok(m) => line.extend([
                m.rmse_s2.to_string(),
                m.mean_sc_in.to_string(),
                m.pct_time_in_band.to_string(),
                m.max_s2.to_string(),
                m.clip_events.to_string(),
            ]),
            Err(_) => line.extend(std::iter::repeat_n(String::new(), 5)),
        }
        w.write_record(&line)?;
    }
    w.flush()
        .map_err(|e| HarnessError::io("writing sweep summary", e))?;
    Ok(())
}
