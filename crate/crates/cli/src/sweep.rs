//! `sweep` command: evaluate the metric set over a parameter grid and emit
//! machine-readable curve data plus a provenance sidecar.
//!
//! Grid points are evaluated concurrently; rows are assembled in grid order
//! so output is byte-identical for a given configuration and seed. Non-finite
//! values never reach the file: a failed cell is left empty and the row's
//! `note` column names the reason.

use std::path::Path;

use rayon::prelude::*;

use crate::config::{RunConfig, SweepVar};
use crate::metrics::{compute_point, to_db, write_sidecar, PointValues};
use crate::{CliError, FormatName};

fn apply(cfg: &RunConfig, var: SweepVar, x: f64) -> RunConfig {
    let mut point = cfg.clone();
    match var {
        SweepVar::PtDbm => point.system.pt_dbm = x,
        SweepVar::DKm => {
            point.topology.d_km = x;
            // A fixed relay distance from the base config would go stale;
            // keep the midpoint rule unless the user pinned dr_km.
        }
        SweepVar::DrKm => point.topology.dr_km = Some(x),
        SweepVar::GammaThDb => point.gamma_th_db = x,
    }
    point
}

pub fn cmd_sweep(cfg: &RunConfig, out: Option<&Path>, format: FormatName) -> Result<(), CliError> {
    let sweep = cfg
        .sweep
        .clone()
        .ok_or_else(|| CliError::Config("missing sweep section".into()))?;
    cfg.validate()?;
    // Fail fast on base-config problems before touching the grid.
    cfg.resolve()?;

    let grid: Vec<f64> = (0..sweep.points)
        .map(|i| sweep.lo + (sweep.hi - sweep.lo) * i as f64 / (sweep.points - 1) as f64)
        .collect();

    let rows: Vec<(f64, PointValues)> = grid
        .par_iter()
        .map(|&x| {
            let point_cfg = apply(cfg, sweep.variable, x);
            let values = match point_cfg.resolve() {
                Ok(scn) => compute_point(&point_cfg, &scn),
                Err(e) => PointValues {
                    note: format!("point invalid: {e:?}"),
                    ..PointValues::default()
                },
            };
            (x, values)
        })
        .collect();

    let all_failed = rows.iter().all(|(_, v)| {
        v.outage_cf.is_none() && v.outage_quad.is_none() && v.outage_mc.is_none()
    });
    if all_failed {
        return Err(CliError::Numerical(format!(
            "every grid point failed; first note: {}",
            rows.first().map(|(_, v)| v.note.as_str()).unwrap_or("")
        )));
    }

    let text = match format {
        FormatName::Csv => render_csv(&sweep.variable, cfg.baseline, &rows),
        FormatName::Json => render_json(&sweep.variable, &rows),
    };
    match out {
        Some(path) => {
            std::fs::write(path, &text)
                .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
            write_sidecar(cfg, path)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x}"),
        _ => String::new(),
    }
}

fn render_csv(var: &SweepVar, baseline: bool, rows: &[(f64, PointValues)]) -> String {
    let mut s = String::new();
    s.push_str(var.column());
    s.push_str(
        ",outage_cf,outage_quad,outage_mc,mc_lo,mc_hi,\
         avg_snr_db_cf,avg_snr_db_quad,avg_snr_db_mc,rate_cf,rate_quad,rate_mc",
    );
    if baseline {
        s.push_str(
            ",direct_outage_cf,direct_avg_snr_db_cf,direct_rate_cf,\
             direct_avg_snr_db_quad,direct_rate_quad",
        );
    }
    s.push_str(",note\n");
    for (x, v) in rows {
        let mut note = v.note.clone();
        let mut guard = |o: Option<f64>, name: &str| -> Option<f64> {
            match o {
                Some(x) if x.is_finite() => Some(x),
                Some(_) => {
                    if !note.is_empty() {
                        note.push_str("; ");
                    }
                    note.push_str(name);
                    note.push_str(" non-finite");
                    None
                }
                None => None,
            }
        };
        let cols = [
            guard(v.outage_cf, "outage_cf"),
            guard(v.outage_quad, "outage_quad"),
            guard(v.outage_mc, "outage_mc"),
            guard(v.mc_lo, "mc_lo"),
            guard(v.mc_hi, "mc_hi"),
            guard(to_db(v.avg_snr_cf), "avg_snr_db_cf"),
            guard(to_db(v.avg_snr_quad), "avg_snr_db_quad"),
            guard(to_db(v.avg_snr_mc), "avg_snr_db_mc"),
            guard(v.rate_cf, "rate_cf"),
            guard(v.rate_quad, "rate_quad"),
            guard(v.rate_mc, "rate_mc"),
        ];
        s.push_str(&format!("{x}"));
        for c in cols {
            s.push(',');
            s.push_str(&cell(c));
        }
        if baseline {
            let dcols = [
                guard(v.direct_outage_cf, "direct_outage_cf"),
                guard(to_db(v.direct_avg_snr_cf), "direct_avg_snr_db_cf"),
                guard(v.direct_rate_cf, "direct_rate_cf"),
                guard(to_db(v.direct_avg_snr_quad), "direct_avg_snr_db_quad"),
                guard(v.direct_rate_quad, "direct_rate_quad"),
            ];
            for c in dcols {
                s.push(',');
                s.push_str(&cell(c));
            }
        }
        s.push(',');
        // Notes never contain commas that would break the CSV shape.
        s.push_str(&note.replace(',', ";"));
        s.push('\n');
    }
    s
}

fn render_json(var: &SweepVar, rows: &[(f64, PointValues)]) -> String {
    let items: Vec<serde_json::Value> = rows
        .iter()
        .map(|(x, v)| {
            let mut obj = serde_json::to_value(v).expect("serializable");
            obj.as_object_mut()
                .expect("object")
                .insert(var.column().into(), serde_json::json!(x));
            obj
        })
        .collect();
    serde_json::to_string_pretty(&items).expect("serializable") + "\n"
}
