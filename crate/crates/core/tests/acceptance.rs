//! Acceptance gate: system-level claims checked end to end, one line of
//! output per criterion (run with `--nocapture` to see them all).
//!
//! Every tolerance is pinned here in code. A failing criterion prints its
//! measured values before asserting, so the gap is visible in the test
//! report.

use std::time::Instant;

use foglink::channel::{make_link, snr_cdf, snr_pdf, DomainMode, FogParams, SystemParams};
use foglink::geometry::{pointing_params, PointingGeometry, WzeqConvention};
use foglink::montecarlo::{
    coupled_ordering_violations, ks_statistic, simulate, single_hop_snr_samples, SimChannel,
    SimMode, SimSpec, SimTarget,
};
use foglink::quadrature::{integrate, Bound, QuadSpec, Singularity};
use foglink::relay::{
    avg_snr_closed, avg_snr_k2, avg_snr_quad, direct_avg_snr_closed, diversity_order,
    e2e_cdf_bound, outage_closed_form, outage_exact, OutageMode, RelayConfig, Tolerances,
};
use foglink::specfun::{gamma_fn, upper_incomplete_gamma, EvalOptions};
use foglink::LinkParams64;

const SEED: u64 = 20260810;

fn geometry() -> PointingGeometry<f64> {
    PointingGeometry::new(0.1, 0.005, 650e-9, 0.28, 2.5, 1000.0, WzeqConvention::Paper).unwrap()
}

fn hop(d_km: f64, pt_dbm: f64) -> LinkParams64 {
    let fog = FogParams::new(2.0, 13.12).unwrap();
    let sys = SystemParams::new(pt_dbm, 0.41, 1e-14).unwrap();
    let pp = pointing_params(d_km * 1000.0, &geometry()).unwrap();
    make_link(d_km, &fog, &pp, &sys).unwrap()
}

fn relay_at(d_total_km: f64, pt_dbm: f64) -> RelayConfig<f64> {
    RelayConfig::symmetric(hop(d_total_km / 2.0, pt_dbm))
}

fn gamma_th_6db() -> f64 {
    10f64.powf(0.6)
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Bisect the transmit power where `outage(pt)` crosses 0.1 (monotone
/// decreasing in pt). Returns None when the crossing is outside the range.
fn crossing_dbm(outage: impl Fn(f64) -> f64) -> Option<f64> {
    let (mut lo, mut hi) = (-10.0f64, 69.0);
    if outage(lo) < 0.1 || outage(hi) > 0.1 {
        return None;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if outage(mid) > 0.1 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[test]
fn criterion_1_midpoint_optimality() {
    let start = Instant::now();
    let gamma_th = gamma_th_6db();
    let tol = Tolerances {
        rel_tol: 1e-6,
        ..Tolerances::default()
    };
    let mut closed = Vec::new();
    let mut quad = Vec::new();
    for i in 0..11 {
        let dr = 0.25 + 0.05 * i as f64;
        let cfg = RelayConfig::new(hop(dr, 15.0), hop(1.0 - dr, 15.0));
        closed.push(e2e_cdf_bound(gamma_th, &cfg, DomainMode::Strict).unwrap());
        quad.push(outage_exact(gamma_th, &cfg, OutageMode::Harmonic, &tol).unwrap());
    }
    let argmin = |v: &[f64]| {
        v.iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0
    };
    let (ic, iq) = (argmin(&closed), argmin(&quad));
    let elapsed = start.elapsed();
    let pass = ic == 5 && iq == 5 && elapsed.as_secs_f64() < 10.0;
    println!(
        "ACCEPTANCE 1 {}: midpoint optimality; closed-form min at d_r = {:.0} m, quadrature min at d_r = {:.0} m, runtime {:.2?} (< 10 s)",
        if pass { "PASS" } else { "FAIL" },
        250.0 + 50.0 * ic as f64,
        250.0 + 50.0 * iq as f64,
        elapsed
    );
    assert!(pass, "closed {closed:?} quad {quad:?}");
}

#[test]
fn criterion_2_relay_power_gain() {
    let start = Instant::now();
    let gamma_th = gamma_th_6db();
    let mut verdicts = Vec::new();
    let mut passing_point: Option<(f64, f64)> = None;
    for &d in &[0.8f64, 1.6] {
        let relay_cross = crossing_dbm(|pt| {
            outage_closed_form(gamma_th, &relay_at(d, pt)).unwrap_or(f64::NAN)
        });
        let direct_cross = crossing_dbm(|pt| {
            snr_cdf(gamma_th, &hop(d, pt), DomainMode::Tolerant).unwrap_or(f64::NAN)
        });
        let ok = match (relay_cross, direct_cross) {
            (Some(r), Some(dc)) => {
                let gap = dc - r;
                verdicts.push(format!("d={d}: relay@{r:.2} dBm, direct@{dc:.2} dBm, gap {gap:.2} dB"));
                let in_band = (gap - 15.0).abs() <= 2.0 && (r - 15.0).abs() <= 2.0;
                if in_band && passing_point.is_none() {
                    passing_point = Some((d, r));
                }
                in_band
            }
            _ => {
                verdicts.push(format!("d={d}: crossing outside the search range"));
                false
            }
        };
        let _ = ok;
    }

    // Monte Carlo confirmation at the passing anchor: min-mode simulation
    // against the bound CDF at the relay crossing power.
    let mc_ok = passing_point.map(|(d, pt)| {
        let cfg = relay_at(d, pt);
        let pp = pointing_params(d / 2.0 * 1000.0, &geometry()).unwrap();
        let fog = FogParams::new(2.0, 13.12).unwrap();
        let target = SimTarget::Relay(
            SimChannel { link: cfg.hop1, pointing: pp },
            SimChannel { link: cfg.hop2, pointing: pp },
        );
        let spec = SimSpec::new(1_000_000, SEED, 65536, SimMode::RelayMin, gamma_th).unwrap();
        let mc = simulate(&spec, &target, &fog).unwrap();
        let cdf = e2e_cdf_bound(gamma_th, &cfg, DomainMode::Strict).unwrap();
        let half = 0.5 * (mc.outage_hi - mc.outage_lo);
        let ok = (mc.outage_hat - cdf).abs() <= 3.0 * half;
        verdicts.push(format!(
            "mc confirm at d={d}, pt={pt:.2}: {:.5e} vs cdf {:.5e} (3hw {:.1e})",
            mc.outage_hat, cdf, 3.0 * half
        ));
        ok
    });

    let elapsed = start.elapsed();
    let pass = passing_point.is_some() && mc_ok == Some(true) && elapsed.as_secs_f64() < 30.0;
    println!(
        "ACCEPTANCE 2 {}: relay power gain; {}; runtime {:.2?} (< 30 s)",
        if pass { "PASS" } else { "FAIL" },
        verdicts.join("; "),
        elapsed
    );
    assert!(pass);
}

#[test]
fn criterion_3_average_snr_gap() {
    // As specified: the k = 2 closed form against the direct closed form at
    // d = 1 km must differ by 4.7 +/- 0.5 dB, confirmed by quadrature
    // within 2%. The measured closed-form gap is ~6.7 dB for any aperture
    // and either w_zeq convention; the 4.7 dB figure matches the exact
    // half-harmonic route instead (reported below). Kept faithful to the
    // stated criterion, so this records a FAIL.
    let cfg = relay_at(1.0, 15.0);
    let tol = Tolerances {
        rel_tol: 1e-7,
        ..Tolerances::default()
    };
    let lemma = avg_snr_k2(&cfg).unwrap();
    let quad = avg_snr_quad(&cfg, OutageMode::Bound, &tol).unwrap();
    let direct = direct_avg_snr_closed(&hop(1.0, 15.0)).unwrap();
    let harm = avg_snr_quad(&cfg, OutageMode::Harmonic, &tol).unwrap();

    let gap_closed = db(lemma) - db(direct);
    let gap_harm = db(harm) - db(direct);
    let quad_dev = (lemma - quad).abs() / quad;

    let gap_ok = (gap_closed - 4.7).abs() <= 0.5;
    let quad_ok = quad_dev <= 0.02;
    let pass = gap_ok && quad_ok;
    println!(
        "ACCEPTANCE 3 {}: avg-SNR gap via closed forms = {gap_closed:.3} dB (band 4.7±0.5), \
         closed-vs-quadrature dev {quad_dev:.2e} (<= 2%); exact harmonic-route gap = {gap_harm:.3} dB",
        if pass { "PASS" } else { "FAIL" },
    );
    assert!(
        pass,
        "closed-form gap {gap_closed:.3} dB outside 4.7±0.5 (harmonic gap {gap_harm:.3} dB)"
    );
}

#[test]
fn criterion_4_distance_degradation() {
    let mut worst1: f64 = 0.0;
    let mut worst2: f64 = 0.0;
    for i in 0..5 {
        let pt = 10.0 + 5.0 * i as f64;
        let g06 = db(avg_snr_k2(&relay_at(0.6, pt)).unwrap());
        let g10 = db(avg_snr_k2(&relay_at(1.0, pt)).unwrap());
        let g20 = db(avg_snr_k2(&relay_at(2.0, pt)).unwrap());
        worst1 = worst1.max((g06 - g10 - 9.0).abs());
        worst2 = worst2.max((g10 - g20 - 17.0).abs());
    }
    let pass = worst1 <= 1.5 && worst2 <= 2.0;
    println!(
        "ACCEPTANCE 4 {}: distance degradation; worst |gap(0.6→1.0) − 9| = {worst1:.3} dB (<= 1.5), \
         worst |gap(1.0→2.0) − 17| = {worst2:.3} dB (<= 2.0) over pt in [10, 30] dBm",
        if pass { "PASS" } else { "FAIL" },
    );
    assert!(pass);
}

#[test]
fn criterion_5_diversity_doubling() {
    // Fitted log10(P_out) slope against pt/10 in the asymptotic window
    // (58–62 dBm; the approach to the asymptote is ~1/(z_r ln u), so lower
    // windows are still biased). gamma0 ∝ Pt² makes the asymptotic slope
    // −2·(z_r/2); the fitted diversity is |slope|/2.
    let gamma_th = gamma_th_6db();
    let fog = FogParams::new(2.0, 13.12).unwrap();
    let fitted = |d: f64| {
        let pts = [58.0f64, 60.0, 62.0];
        let ys: Vec<f64> = pts
            .iter()
            .map(|&pt| {
                outage_closed_form(gamma_th, &relay_at(d, pt))
                    .unwrap()
                    .log10()
            })
            .collect();
        let xs: Vec<f64> = pts.iter().map(|&p| p / 10.0).collect();
        let xm = xs.iter().sum::<f64>() / 3.0;
        let ym = ys.iter().sum::<f64>() / 3.0;
        let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
        let den: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
        (num / den).abs() / 2.0
    };
    let m08 = fitted(0.8);
    let m16 = fitted(1.6);
    let z08 = diversity_order(&fog, 0.4);
    let z16 = diversity_order(&fog, 0.8);
    let ratio_ok = (m08 / m16 / 2.0 - 1.0).abs() <= 0.15;
    let match08 = (m08 / z08 - 1.0).abs() <= 0.15;
    let match16 = (m16 / z16 - 1.0).abs() <= 0.15;
    let pass = ratio_ok && match08 && match16;
    println!(
        "ACCEPTANCE 5 {}: diversity doubling; fitted M(0.8 km) = {m08:.4} vs z_r/2 = {z08:.4} \
         ({:+.1}%), fitted M(1.6 km) = {m16:.4} vs z_r/2 = {z16:.4} ({:+.1}%), ratio {:.3} vs 2",
        if pass { "PASS" } else { "FAIL" },
        100.0 * (m08 / z08 - 1.0),
        100.0 * (m16 / z16 - 1.0),
        m08 / m16,
    );
    assert!(pass);
}

#[test]
fn criterion_6_oracle_equivalence() {
    let start = Instant::now();
    let mut failures: Vec<&str> = Vec::new();
    let fog = FogParams::new(2.0, 13.12).unwrap();
    let cfg = relay_at(1.0, 15.0);
    let tol = Tolerances::default();

    // (a) single-hop normalization and sampler-vs-CDF KS at 1e6 trials.
    {
        let link = cfg.hop1;
        let spec = QuadSpec::new(0.0, Bound::Finite(link.support_cap()))
            .unwrap()
            .with_tol(1e-10, 1e-14)
            .with_singularity(Singularity::Lower);
        let mass = integrate(
            |g: f64| snr_pdf(g, &link, DomainMode::Tolerant).unwrap(),
            &spec,
        )
        .unwrap()
        .value;
        let pp = pointing_params(500.0, &geometry()).unwrap();
        let channel = SimChannel { link, pointing: pp };
        let mut samples = single_hop_snr_samples(1_000_000, SEED, &channel, &fog);
        let ks = ks_statistic(&mut samples, |x| {
            snr_cdf(x, &link, DomainMode::Tolerant).unwrap()
        });
        let ok = (mass - 1.0).abs() <= 1e-6 && ks < 0.002;
        println!("  6a {}: pdf mass − 1 = {:.2e} (<= 1e-6), KS = {ks:.2e} (< 2e-3)",
                 if ok { "pass" } else { "FAIL" }, mass - 1.0);
        if !ok {
            failures.push("6a");
        }
    }

    // (b) k = 2 closed form vs quadrature to 1e-6.
    {
        let tight = Tolerances {
            rel_tol: 1e-11,
            abs_tol: 1e-16,
            max_subdivisions: 4000,
        };
        let lemma = avg_snr_k2(&cfg).unwrap();
        let quad = avg_snr_quad(&cfg, OutageMode::Bound, &tight).unwrap();
        let dev = (lemma - quad).abs() / quad;
        let ok = dev <= 1e-6;
        println!("  6b {}: light-fog closed form vs quadrature dev = {dev:.2e} (<= 1e-6)",
                 if ok { "pass" } else { "FAIL" });
        if !ok {
            failures.push("6b");
        }
    }

    // (c) general-shape closed form vs quadrature (2%) and vs the k = 2
    // form (5%). The published general-shape expression fails this by
    // orders of magnitude (see the measured values); recorded honestly.
    {
        let lemma = avg_snr_k2(&cfg).unwrap();
        let quad = avg_snr_quad(&cfg, OutageMode::Bound, &tol).unwrap();
        let general = avg_snr_closed(&cfg);
        let (dev_quad, dev_lemma, shown) = match &general {
            Ok(g) => (
                (g - quad).abs() / quad,
                (g - lemma).abs() / lemma,
                format!("{g:.4e}"),
            ),
            Err(e) => (f64::INFINITY, f64::INFINITY, format!("error: {e}")),
        };
        let ok = dev_quad <= 0.02 && dev_lemma <= 0.05;
        println!(
            "  6c {}: general-shape closed form = {shown} vs quadrature {quad:.4e} \
             (dev {dev_quad:.2e}, need <= 2e-2) and vs k=2 form {lemma:.4e} (dev {dev_lemma:.2e}, need <= 5e-2)",
            if ok { "pass" } else { "FAIL" }
        );
        if !ok {
            failures.push("6c");
        }
    }

    // (d) closed-form outage vs quadrature within 10% over P_out in
    // [1e-3, 0.5] (power sweeps at d = 1.0 and 1.6 km).
    {
        let gamma_th = gamma_th_6db();
        let mut worst: f64 = 0.0;
        let mut points = 0;
        for &d in &[1.0f64, 1.6] {
            for i in 0..40 {
                let pt = 5.0 + i as f64;
                let c = relay_at(d, pt);
                let p_quad = outage_exact(gamma_th, &c, OutageMode::Bound, &tol).unwrap();
                if (1e-3..=0.5).contains(&p_quad) {
                    let p_cf = outage_closed_form(gamma_th, &c).unwrap();
                    worst = worst.max((p_cf - p_quad).abs() / p_quad);
                    points += 1;
                }
            }
        }
        let ok = worst <= 0.10 && points > 20;
        println!("  6d {}: closed-form outage vs quadrature, worst dev = {worst:.2e} over {points} points (<= 0.10)",
                 if ok { "pass" } else { "FAIL" });
        if !ok {
            failures.push("6d");
        }
    }

    // (e) the two tail identities over randomized parameters, to 1e-8.
    {
        let opts = EvalOptions::default();
        let mut state = 0x51EE7u64;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let spec = QuadSpec::new(1.0, Bound::PosInf).unwrap();
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let p = 4.0 * next();
            let n = 1.5 + 8.5 * next();
            let v = integrate(|u: f64| u.ln().powf(p) * u.powf(-n), &spec)
                .unwrap()
                .value;
            let closed = gamma_fn(p + 1.0).unwrap() / (n - 1.0).powf(p + 1.0);
            worst = worst.max((v - closed).abs() / closed.abs());

            let k = 0.5 + 3.5 * next();
            let n2 = 1.2 + 8.8 * next();
            let v = integrate(
                |u: f64| u.powf(-n2) * upper_incomplete_gamma(k, n2 * u.ln(), &opts).unwrap(),
                &spec,
            )
            .unwrap()
            .value;
            let closed = (1.0 - n2.powf(k) * (2.0 * n2 - 1.0).powf(-k)) * gamma_fn(k).unwrap()
                / (n2 - 1.0);
            worst = worst.max((v - closed).abs() / closed.abs());
        }
        let ok = worst <= 1e-8;
        println!("  6e {}: tail identities worst dev = {worst:.2e} (<= 1e-8)",
                 if ok { "pass" } else { "FAIL" });
        if !ok {
            failures.push("6e");
        }
    }

    // (f) trial-wise combiner ordering under shared draws, 1e6 trials.
    {
        let pp = pointing_params(500.0, &geometry()).unwrap();
        let ch = SimChannel {
            link: cfg.hop1,
            pointing: pp,
        };
        let target = SimTarget::Relay(ch, ch);
        let violations = coupled_ordering_violations(1_000_000, SEED, &target, &fog);
        let ok = violations == 0;
        println!("  6f {}: combiner ordering violations = {violations} of 1e6 (must be 0)",
                 if ok { "pass" } else { "FAIL" });
        if !ok {
            failures.push("6f");
        }
    }

    let elapsed = start.elapsed();
    let runtime_ok = elapsed.as_secs_f64() < 120.0;
    let pass = failures.is_empty() && runtime_ok;
    println!(
        "ACCEPTANCE 6 {}: oracle equivalence; failing subparts: {:?}; runtime {:.2?} (< 2 min)",
        if pass { "PASS" } else { "FAIL" },
        failures,
        elapsed
    );
    assert!(pass, "failing subparts: {failures:?}");
}
