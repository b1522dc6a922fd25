// Dev scratch: acceptance-value reconnaissance. Not part of the deliverable API.
use foglink::channel::{make_link, FogParams, LinkParams, SystemParams};
use foglink::geometry::{pointing_params, PointingGeometry, WzeqConvention};
use foglink::relay::{
    avg_snr_closed, avg_snr_k2, avg_snr_quad, direct_avg_snr_closed, e2e_cdf_bound,
    ergodic_rate_closed, ergodic_rate_k2, outage_closed_form, outage_exact, rate_quad,
    OutageMode, RelayConfig, Tolerances,
};
use foglink::channel::DomainMode;
use std::time::Instant;

fn geom() -> PointingGeometry<f64> {
    PointingGeometry::new(0.1, 0.005, 650e-9, 0.28, 2.5, 1000.0, WzeqConvention::Paper).unwrap()
}

fn hop(d_km: f64, pt_dbm: f64) -> LinkParams<f64> {
    let fog = FogParams::new(2.0, 13.12).unwrap();
    let sys = SystemParams::new(pt_dbm, 0.41, 1e-14).unwrap();
    let pp = pointing_params(d_km * 1000.0, &geom()).unwrap();
    make_link(d_km, &fog, &pp, &sys).unwrap()
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn main() {
    let tol = Tolerances::default();
    let gamma_th = 10f64.powf(0.6);

    println!("== Theorem (printed) vs Lemma vs quadrature ==");
    for &(d, pt) in &[(0.6f64, 15.0), (1.0, 15.0), (1.0, 25.0), (2.0, 15.0)] {
        let cfg = RelayConfig::symmetric(hop(d / 2.0, pt));
        let lemma = avg_snr_k2(&cfg).unwrap();
        let quad = avg_snr_quad(&cfg, OutageMode::Bound, &tol).unwrap();
        let printed = avg_snr_closed(&cfg);
        let rate_lemma = ergodic_rate_k2(&cfg).unwrap();
        let rate_quad_v = rate_quad(&cfg, OutageMode::Bound, &tol).unwrap();
        let rate_printed = ergodic_rate_closed(&cfg);
        println!(
            "d={d} pt={pt}: m={:+.4}  lemma={lemma:.6e} quad={quad:.6e} printed={printed:?}",
            cfg.hop1.m
        );
        println!("    rate: lemma={rate_lemma:?} quad={rate_quad_v:.6} printed={rate_printed:?}");
    }

    println!("\n== Criterion 3: relay-vs-direct average SNR gaps at d=1km ==");
    let cfg1 = RelayConfig::symmetric(hop(0.5, 15.0));
    let lemma = avg_snr_k2(&cfg1).unwrap();
    let direct = direct_avg_snr_closed(&hop(1.0, 15.0)).unwrap();
    let t0 = Instant::now();
    let harm = avg_snr_quad(&cfg1, OutageMode::Harmonic, &Tolerances { rel_tol: 1e-7, ..tol }).unwrap();
    println!(
        "lemma={lemma:.4e} ({:.3} dB)  direct={direct:.4e} ({:.3} dB)  harm={harm:.4e} ({:.3} dB) [{:?}]",
        db(lemma), db(direct), db(harm), t0.elapsed()
    );
    println!(
        "gap lemma-direct = {:.3} dB   gap harm-direct = {:.3} dB",
        db(lemma) - db(direct),
        db(harm) - db(direct)
    );

    println!("\n== Criterion 1: d_r sweep of outage at d=1km, pt=15dBm ==");
    let t0 = Instant::now();
    for i in 0..11 {
        let dr = 0.25 + 0.05 * i as f64;
        let cfg = RelayConfig::new(hop(dr, 15.0), hop(1.0 - dr, 15.0));
        let cf = e2e_cdf_bound(gamma_th, &cfg, DomainMode::Strict).unwrap();
        let hq = outage_exact(gamma_th, &cfg, OutageMode::Harmonic, &Tolerances { rel_tol: 1e-6, ..tol }).unwrap();
        println!("  d_r={dr:.2} km  bound={cf:.6}  harmonic={hq:.6}");
    }
    println!("  sweep time {:?}", t0.elapsed());

    println!("\n== Criterion 2: 0.1-crossings ==");
    for &d in &[0.8f64, 1.6] {
        let cross = |f: &dyn Fn(f64) -> f64| {
            // bisect pt in [-10, 70] for f(pt) = 0.1 (monotone decreasing)
            let (mut lo, mut hi) = (-10.0f64, 70.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if f(mid) > 0.1 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let relay_cf = cross(&|pt| {
            outage_closed_form(gamma_th, &RelayConfig::symmetric(hop(d / 2.0, pt))).unwrap()
        });
        let relay_bound = cross(&|pt| {
            e2e_cdf_bound(gamma_th, &RelayConfig::symmetric(hop(d / 2.0, pt)), DomainMode::Strict)
                .unwrap()
        });
        let direct = cross(&|pt| {
            foglink::channel::snr_cdf(gamma_th, &hop(d, pt), DomainMode::Tolerant).unwrap()
        });
        println!(
            "d={d}: relay prop1 @ {relay_cf:.2} dBm, relay bound-cdf @ {relay_bound:.2} dBm, direct @ {direct:.2} dBm; gaps {:.2} / {:.2} dB",
            direct - relay_cf, direct - relay_bound
        );
    }

    println!("\n== Criterion 4: average-SNR curve gaps (lemma route) ==");
    for &pt in &[10.0f64, 20.0, 30.0] {
        let g06 = db(avg_snr_k2(&RelayConfig::symmetric(hop(0.3, pt))).unwrap());
        let g10 = db(avg_snr_k2(&RelayConfig::symmetric(hop(0.5, pt))).unwrap());
        let g20 = db(avg_snr_k2(&RelayConfig::symmetric(hop(1.0, pt))).unwrap());
        println!("  pt={pt}: gap(0.6->1.0)={:.3} dB, gap(1.0->2.0)={:.3} dB", g06 - g10, g10 - g20);
    }

    println!("\n== Criterion 5: high-power diversity slopes ==");
    for &d in &[0.8f64, 1.6] {
        let f = |pt: f64| {
            outage_closed_form(gamma_th, &RelayConfig::symmetric(hop(d / 2.0, pt)))
                .unwrap()
                .log10()
        };
        for &(p1, p2) in &[(28.0f64, 30.0), (48.0, 50.0), (58.0, 62.0)] {
            let slope = (f(p2) - f(p1)) / ((p2 - p1) / 10.0);
            let fog = FogParams::new(2.0f64, 13.12).unwrap();
            let z_r = 4.343 / (13.12 * d / 2.0);
            let fitted_m = -slope / 2.0;
            let _ = fog;
            println!(
                "  d={d} fit[{p1},{p2}]: slope={slope:.4}  fitted M={fitted_m:.4}  z_r/2={:.4}  ratio={:.3}",
                z_r / 2.0,
                fitted_m / (z_r / 2.0)
            );
        }
    }

    println!("\n== Criterion 6d: Prop1 vs bound quadrature over outage range ==");
    for &d in &[1.0f64, 1.6] {
        let mut worst: f64 = 0.0;
        let mut n = 0;
        for i in 0..40 {
            let pt = 5.0 + i as f64;
            let cfg = RelayConfig::symmetric(hop(d / 2.0, pt));
            let p_cf = outage_closed_form(gamma_th, &cfg).unwrap();
            let p_q = e2e_cdf_bound(gamma_th, &cfg, DomainMode::Strict).unwrap();
            if p_q >= 1e-3 && p_q <= 0.5 {
                worst = worst.max((p_cf - p_q).abs() / p_q);
                n += 1;
            }
        }
        println!("  d={d}: worst rel dev = {worst:.4} over {n} grid points in [1e-3, 0.5]");
    }

    println!("\n== Harmonic outage timing at d=1km pt=15 ==");
    let t0 = Instant::now();
    let p = outage_exact(gamma_th, &cfg1, OutageMode::Harmonic, &Tolerances { rel_tol: 1e-6, ..tol }).unwrap();
    println!("  harmonic outage = {p:.6} in {:?}", t0.elapsed());
    let p_b = e2e_cdf_bound(gamma_th, &cfg1, DomainMode::Strict).unwrap();
    let p_cf = outage_closed_form(gamma_th, &cfg1).unwrap();
    println!("  bound-cdf = {p_b:.6}, prop1 = {p_cf:.6}");
}
