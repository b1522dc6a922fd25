use foglink::channel::{make_link, snr_cdf, DomainMode, FogParams, SystemParams};
use foglink::geometry::{pointing_params, PointingGeometry, WzeqConvention};
use foglink::relay::{outage_closed_form, RelayConfig};

fn hop(d_km: f64, pt_dbm: f64) -> foglink::LinkParams64 {
    let geom = PointingGeometry::new(0.1, 0.005, 650e-9, 0.28, 2.5, 1000.0, WzeqConvention::Paper).unwrap();
    let fog = FogParams::new(2.0, 13.12).unwrap();
    let sys = SystemParams::new(pt_dbm, 0.41, 1e-14).unwrap();
    let pp = pointing_params(d_km * 1000.0, &geom).unwrap();
    make_link(d_km, &fog, &pp, &sys).unwrap()
}

fn main() {
    let th = 10f64.powf(0.6);
    for &pt in &[-10.0f64, 0.0, 15.0, 30.0, 69.0] {
        let r = outage_closed_form(th, &RelayConfig::symmetric(hop(0.4, pt)));
        let d = snr_cdf(th, &hop(0.8, pt), DomainMode::Tolerant);
        println!("pt={pt}: relay={r:?} direct={d:?}");
    }
}
