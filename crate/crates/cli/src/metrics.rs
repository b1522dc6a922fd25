//! One-point metric evaluation shared by `metrics` and `sweep`, plus the
//! `metrics` and `simulate` commands.

use std::path::Path;

use serde::Serialize;

use foglink::channel::{snr_cdf, DomainMode};
use foglink::montecarlo::{simulate, SimResult};
use foglink::relay::{
    avg_snr_closed, avg_snr_k2, avg_snr_quad, direct_avg_snr_closed, direct_avg_snr_quad,
    direct_rate_closed, direct_rate_quad, e2e_cdf_bound, ergodic_rate_closed, ergodic_rate_k2,
    outage_closed_form, outage_exact, rate_quad, OutageMode,
};

use crate::config::{MethodName, ModeName, RunConfig, Scenario};
use crate::{CliError, FormatName};

/// Everything a sweep row / metrics table needs for one operating point.
#[derive(Debug, Clone, Default, Serialize)]
pub struct PointValues {
    pub outage_cf: Option<f64>,
    /// Symmetric-only closed-form outage approximation (reported by
    /// `metrics`; the `_cf` column uses the bound-route CDF uniformly).
    pub outage_prop1: Option<f64>,
    pub outage_quad: Option<f64>,
    pub outage_mc: Option<f64>,
    pub mc_lo: Option<f64>,
    pub mc_hi: Option<f64>,
    pub avg_snr_cf: Option<f64>,
    pub avg_snr_quad: Option<f64>,
    pub avg_snr_mc: Option<f64>,
    pub avg_snr_mc_se: Option<f64>,
    pub rate_cf: Option<f64>,
    pub rate_quad: Option<f64>,
    pub rate_mc: Option<f64>,
    pub rate_mc_se: Option<f64>,
    pub direct_outage_cf: Option<f64>,
    pub direct_avg_snr_cf: Option<f64>,
    pub direct_rate_cf: Option<f64>,
    pub direct_avg_snr_quad: Option<f64>,
    pub direct_rate_quad: Option<f64>,
    pub note: String,
}

fn push_note(note: &mut String, msg: impl AsRef<str>) {
    if !note.is_empty() {
        note.push_str("; ");
    }
    note.push_str(msg.as_ref());
}

fn is_k2(k: f64) -> bool {
    (k - 2.0).abs() <= 1e-9
}

/// Quadrature route implied by the simulation mode: the min bound for
/// `relay-min`, the half-harmonic convolution otherwise (it is the analytic
/// stand-in for `relay-true`, which only Monte Carlo evaluates directly).
fn quad_mode(mode: ModeName) -> OutageMode {
    match mode {
        ModeName::RelayMin => OutageMode::Bound,
        _ => OutageMode::Harmonic,
    }
}

pub fn compute_point(cfg: &RunConfig, scn: &Scenario) -> PointValues {
    let mut v = PointValues::default();
    let tol = scn.tolerances;
    let th = scn.gamma_th;
    let direct_mode = cfg.sim.mode == ModeName::Direct;

    if direct_mode {
        compute_direct_point(cfg, scn, &mut v);
        return v;
    }

    if scn.wants(MethodName::ClosedForm) {
        match e2e_cdf_bound(th, &scn.relay, DomainMode::Tolerant) {
            Ok(p) => v.outage_cf = Some(p),
            Err(e) => push_note(&mut v.note, format!("outage_cf: {e}")),
        }
        if th >= scn.relay.min_cap() {
            push_note(&mut v.note, "gamma_th above support cap; outage saturates at 1");
        }
        if scn.relay.symmetric {
            match outage_closed_form(th, &scn.relay) {
                Ok(p) => v.outage_prop1 = Some(p),
                Err(e) => push_note(&mut v.note, format!("outage_prop1: {e}")),
            }
        } else {
            // Average-SNR/rate closed forms are symmetric-only; note it once
            // and let the quadrature columns carry asymmetric points.
            push_note(&mut v.note, "closed-form avg SNR/rate need symmetric hops");
        }
        let k2 = is_k2(cfg.fog.k);
        let avg = if !scn.relay.symmetric {
            Err(foglink::Error::NotSymmetric)
        } else if k2 {
            avg_snr_k2(&scn.relay)
        } else {
            avg_snr_closed(&scn.relay)
        };
        match avg {
            Ok(a) => v.avg_snr_cf = Some(a),
            Err(foglink::Error::NotSymmetric) => {}
            Err(foglink::Error::SingularParameter { .. }) => {
                // The closed forms divide by m = z_r - rho^2; switch to the
                // quadrature value when it vanishes.
                match avg_snr_quad(&scn.relay, OutageMode::Bound, &tol) {
                    Ok(a) => {
                        v.avg_snr_cf = Some(a);
                        push_note(&mut v.note, "avg_snr_cf via quadrature (m ~ 0)");
                    }
                    Err(e) => push_note(&mut v.note, format!("avg_snr_cf: {e}")),
                }
            }
            Err(e) => push_note(&mut v.note, format!("avg_snr_cf: {e}")),
        }
        let rate = if !scn.relay.symmetric {
            Err(foglink::Error::NotSymmetric)
        } else if k2 {
            ergodic_rate_k2(&scn.relay)
        } else {
            ergodic_rate_closed(&scn.relay)
        };
        match rate {
            Ok((r, invalid)) => {
                v.rate_cf = Some(r * scn.rate_scale);
                if invalid {
                    push_note(&mut v.note, "rate_cf bound_invalid (negative lower bound)");
                }
            }
            Err(foglink::Error::NotSymmetric) => {}
            Err(foglink::Error::SingularParameter { .. }) => {
                match rate_quad(&scn.relay, OutageMode::Bound, &tol) {
                    Ok(r) => {
                        v.rate_cf = Some(r * scn.rate_scale);
                        push_note(&mut v.note, "rate_cf via quadrature (m ~ 0)");
                    }
                    Err(e) => push_note(&mut v.note, format!("rate_cf: {e}")),
                }
            }
            Err(e) => push_note(&mut v.note, format!("rate_cf: {e}")),
        }
    }

    if scn.wants(MethodName::Quadrature) {
        let mode = quad_mode(cfg.sim.mode);
        match outage_exact(th, &scn.relay, mode, &tol) {
            Ok(p) => v.outage_quad = Some(p),
            Err(e) => push_note(&mut v.note, format!("outage_quad: {e}")),
        }
        match avg_snr_quad(&scn.relay, mode, &tol) {
            Ok(a) => v.avg_snr_quad = Some(a),
            Err(e) => push_note(&mut v.note, format!("avg_snr_quad: {e}")),
        }
        match rate_quad(&scn.relay, mode, &tol) {
            Ok(r) => v.rate_quad = Some(r * scn.rate_scale),
            Err(e) => push_note(&mut v.note, format!("rate_quad: {e}")),
        }
    }

    if scn.wants(MethodName::MonteCarlo) {
        match simulate(&scn.sim_spec, &scn.relay_target(), &scn.fog) {
            Ok(r) => fill_mc(&mut v, &r, scn.rate_scale),
            Err(e) => push_note(&mut v.note, format!("monte_carlo: {e}")),
        }
    }

    if scn.baseline {
        fill_direct_block(cfg, scn, &mut v);
    }
    v
}

fn compute_direct_point(cfg: &RunConfig, scn: &Scenario, v: &mut PointValues) {
    let tol = scn.tolerances;
    let th = scn.gamma_th;
    let link = &scn.direct_link;

    if scn.wants(MethodName::ClosedForm) {
        match snr_cdf(th, link, DomainMode::Tolerant) {
            Ok(p) => v.outage_cf = Some(p),
            Err(e) => push_note(&mut v.note, format!("outage_cf: {e}")),
        }
        if th >= link.support_cap() {
            push_note(&mut v.note, "gamma_th above support cap; outage saturates at 1");
        }
        if is_k2(cfg.fog.k) {
            match direct_avg_snr_closed(link) {
                Ok(a) => v.avg_snr_cf = Some(a),
                Err(e) => push_note(&mut v.note, format!("avg_snr_cf: {e}")),
            }
            match direct_rate_closed(link) {
                Ok((r, invalid)) => {
                    v.rate_cf = Some(r);
                    if invalid {
                        push_note(&mut v.note, "rate_cf bound_invalid");
                    }
                }
                Err(e) => push_note(&mut v.note, format!("rate_cf: {e}")),
            }
        }
    }
    if scn.wants(MethodName::Quadrature) {
        v.outage_quad = v.outage_cf; // the CDF is already the exact integral
        match direct_avg_snr_quad(link, &tol) {
            Ok(a) => v.avg_snr_quad = Some(a),
            Err(e) => push_note(&mut v.note, format!("avg_snr_quad: {e}")),
        }
        match direct_rate_quad(link, &tol) {
            Ok(r) => v.rate_quad = Some(r),
            Err(e) => push_note(&mut v.note, format!("rate_quad: {e}")),
        }
    }
    if scn.wants(MethodName::MonteCarlo) {
        match simulate(&scn.sim_spec, &scn.direct_target(), &scn.fog) {
            Ok(r) => fill_mc(v, &r, 1.0),
            Err(e) => push_note(&mut v.note, format!("monte_carlo: {e}")),
        }
    }
}

fn fill_mc(v: &mut PointValues, r: &SimResult, rate_scale: f64) {
    v.outage_mc = Some(r.outage_hat);
    v.mc_lo = Some(r.outage_lo);
    v.mc_hi = Some(r.outage_hi);
    v.avg_snr_mc = Some(r.avg_snr_hat);
    v.avg_snr_mc_se = Some(r.avg_snr_se);
    v.rate_mc = Some(r.rate_hat * rate_scale);
    v.rate_mc_se = Some(r.rate_se * rate_scale);
}

fn fill_direct_block(cfg: &RunConfig, scn: &Scenario, v: &mut PointValues) {
    let link = &scn.direct_link;
    let tol = scn.tolerances;
    match snr_cdf(scn.gamma_th, link, DomainMode::Tolerant) {
        Ok(p) => v.direct_outage_cf = Some(p),
        Err(e) => push_note(&mut v.note, format!("direct_outage_cf: {e}")),
    }
    if is_k2(cfg.fog.k) {
        if let Ok(a) = direct_avg_snr_closed(link) {
            v.direct_avg_snr_cf = Some(a);
        }
        if let Ok((r, _)) = direct_rate_closed(link) {
            v.direct_rate_cf = Some(r);
        }
    }
    if scn.wants(MethodName::Quadrature) {
        match direct_avg_snr_quad(link, &tol) {
            Ok(a) => v.direct_avg_snr_quad = Some(a),
            Err(e) => push_note(&mut v.note, format!("direct_avg_snr_quad: {e}")),
        }
        match direct_rate_quad(link, &tol) {
            Ok(r) => v.direct_rate_quad = Some(r),
            Err(e) => push_note(&mut v.note, format!("direct_rate_quad: {e}")),
        }
    }
}

pub fn to_db(x: Option<f64>) -> Option<f64> {
    x.and_then(|v| if v > 0.0 { Some(10.0 * v.log10()) } else { None })
}

fn fmt(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x}"),
        _ => String::new(),
    }
}

fn fmt_fixed(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.6}"),
        _ => "-".into(),
    }
}

/// `metrics` command: the three routes side by side with deviations.
pub fn cmd_metrics(
    cfg: &RunConfig,
    out: Option<&Path>,
    format: FormatName,
) -> Result<(), CliError> {
    let scn = cfg.resolve()?;
    // A single point is evaluated strictly: numerical failures become
    // exit-code-3 errors naming the quantity, not silent blanks.
    let v = compute_point(cfg, &scn);

    println!(
        "# d = {} km, d_r = {} km, pt = {} dBm, gamma_th = {} dB, mode = {:?}",
        scn.d_km, scn.dr_km, cfg.system.pt_dbm, scn.gamma_th_db, cfg.sim.mode
    );
    println!(
        "{:<22}{:>16}{:>16}{:>16}{:>24}",
        "metric", "closed_form", "quadrature", "monte_carlo", "mc_95% / se"
    );
    println!(
        "{:<22}{:>16}{:>16}{:>16}{:>24}",
        "outage",
        fmt_fixed(v.outage_cf),
        fmt_fixed(v.outage_quad),
        fmt_fixed(v.outage_mc),
        format!("[{}, {}]", fmt_fixed(v.mc_lo), fmt_fixed(v.mc_hi)),
    );
    if let Some(p) = v.outage_prop1 {
        println!("{:<22}{:>16}", "outage_prop_approx", fmt_fixed(Some(p)));
    }
    println!(
        "{:<22}{:>16}{:>16}{:>16}{:>24}",
        "avg_snr_db",
        fmt_fixed(to_db(v.avg_snr_cf)),
        fmt_fixed(to_db(v.avg_snr_quad)),
        fmt_fixed(to_db(v.avg_snr_mc)),
        format!("se {}", fmt_fixed(v.avg_snr_mc_se)),
    );
    println!(
        "{:<22}{:>16}{:>16}{:>16}{:>24}",
        "rate_bits_per_use",
        fmt_fixed(v.rate_cf),
        fmt_fixed(v.rate_quad),
        fmt_fixed(v.rate_mc),
        format!("se {}", fmt_fixed(v.rate_mc_se)),
    );
    if scn.baseline && cfg.sim.mode != ModeName::Direct {
        println!(
            "{:<22}{:>16}{:>16}",
            "direct_outage",
            fmt_fixed(v.direct_outage_cf),
            fmt_fixed(v.direct_outage_cf),
        );
        println!(
            "{:<22}{:>16}{:>16}",
            "direct_avg_snr_db",
            fmt_fixed(to_db(v.direct_avg_snr_cf)),
            fmt_fixed(to_db(v.direct_avg_snr_quad)),
        );
        println!(
            "{:<22}{:>16}{:>16}",
            "direct_rate",
            fmt_fixed(v.direct_rate_cf),
            fmt_fixed(v.direct_rate_quad),
        );
    }
    if let (Some(cf), Some(q)) = (v.outage_cf, v.outage_quad) {
        if q > 0.0 {
            println!("# closed-form vs quadrature outage deviation: {:.2}%", 100.0 * (cf - q).abs() / q);
        }
    }
    if let (Some(cf), Some(q)) = (v.avg_snr_cf, v.avg_snr_quad) {
        if q > 0.0 && cf > 0.0 {
            println!(
                "# closed-form vs quadrature avg SNR deviation: {:.2}% ({:+.3} dB)",
                100.0 * (cf - q).abs() / q,
                10.0 * (cf / q).log10()
            );
        }
    }
    if !v.note.is_empty() {
        println!("# note: {}", v.note);
    }

    // Surface numerical failures as exit code 3 for the single-point command.
    if v.note.contains("did not converge") {
        return Err(CliError::Numerical(v.note.clone()));
    }

    if let Some(path) = out {
        write_point(cfg, &v, path, format)?;
    }
    Ok(())
}

fn write_point(
    cfg: &RunConfig,
    v: &PointValues,
    path: &Path,
    format: FormatName,
) -> Result<(), CliError> {
    let text = match format {
        FormatName::Json => serde_json::to_string_pretty(v).expect("serializable") + "\n",
        FormatName::Csv => {
            let mut s = String::new();
            s.push_str("metric,closed_form,quadrature,monte_carlo,mc_lo,mc_hi\n");
            s.push_str(&format!(
                "outage,{},{},{},{},{}\n",
                fmt(v.outage_cf),
                fmt(v.outage_quad),
                fmt(v.outage_mc),
                fmt(v.mc_lo),
                fmt(v.mc_hi)
            ));
            s.push_str(&format!(
                "avg_snr_db,{},{},{},,\n",
                fmt(to_db(v.avg_snr_cf)),
                fmt(to_db(v.avg_snr_quad)),
                fmt(to_db(v.avg_snr_mc))
            ));
            s.push_str(&format!(
                "rate_bits_per_use,{},{},{},,\n",
                fmt(v.rate_cf),
                fmt(v.rate_quad),
                fmt(v.rate_mc)
            ));
            s
        }
    };
    std::fs::write(path, text)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    write_sidecar(cfg, path)?;
    Ok(())
}

/// Provenance sidecar: the full resolved configuration next to the output.
pub fn write_sidecar(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let mut sidecar = out.as_os_str().to_owned();
    sidecar.push(".config.json");
    let text = serde_json::to_string_pretty(cfg).expect("config serializable") + "\n";
    std::fs::write(&sidecar, text).map_err(|e| {
        CliError::Config(format!(
            "cannot write sidecar {}: {e}",
            Path::new(&sidecar).display()
        ))
    })
}

/// `simulate` command: Monte Carlo only.
pub fn cmd_simulate(cfg: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let scn = cfg.resolve()?;
    let target = if cfg.sim.mode == ModeName::Direct {
        scn.direct_target()
    } else {
        scn.relay_target()
    };
    let r = simulate(&scn.sim_spec, &target, &scn.fog).map_err(CliError::num)?;
    println!(
        "mode = {:?}, trials = {}, seed = {}",
        cfg.sim.mode, r.trials_used, cfg.sim.master_seed
    );
    println!(
        "outage    = {:.6e}  wilson95 = [{:.6e}, {:.6e}]",
        r.outage_hat, r.outage_lo, r.outage_hi
    );
    println!(
        "avg_snr   = {:.6e} (= {:.3} dB)  se = {:.3e}",
        r.avg_snr_hat,
        10.0 * r.avg_snr_hat.log10(),
        r.avg_snr_se
    );
    println!(
        "rate      = {:.6} bits/use  se = {:.3e}",
        r.rate_hat * scn.rate_scale,
        r.rate_se * scn.rate_scale
    );
    if let Some(path) = out {
        let doc = serde_json::json!({
            "result": {
                "outage_hat": r.outage_hat,
                "outage_lo": r.outage_lo,
                "outage_hi": r.outage_hi,
                "avg_snr_hat": r.avg_snr_hat,
                "avg_snr_se": r.avg_snr_se,
                "rate_hat": r.rate_hat * scn.rate_scale,
                "rate_se": r.rate_se * scn.rate_scale,
                "trials_used": r.trials_used,
            },
            "config": cfg,
        });
        let text = serde_json::to_string_pretty(&doc).expect("serializable") + "\n";
        std::fs::write(path, text)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}
