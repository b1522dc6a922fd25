//! JSON run configuration: one human-readable document shared by the input
//! file and the provenance sidecar. CLI flags override file fields.

use serde::{Deserialize, Serialize};

use foglink::channel::make_link;
use foglink::geometry::{pointing_params, WzeqConvention};
use foglink::montecarlo::{SimChannel, SimMode, SimSpec};
use foglink::relay::Tolerances;
use foglink::{FogParams64, LinkParams64, PointingGeometry64, PointingParams64, RelayConfig64, SystemParams64};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "defaults::fog")]
    pub fog: FogSection,
    #[serde(default = "defaults::system")]
    pub system: SystemSection,
    #[serde(default = "defaults::pointing")]
    pub pointing: PointingSection,
    #[serde(default = "defaults::topology")]
    pub topology: TopologySection,
    /// Outage threshold in dB.
    #[serde(default = "defaults::gamma_th_db")]
    pub gamma_th_db: f64,
    /// Which evaluation routes to run.
    #[serde(default = "defaults::methods")]
    pub methods: Vec<MethodName>,
    #[serde(default = "defaults::sim")]
    pub sim: SimSection,
    #[serde(default = "defaults::numerics")]
    pub numerics: NumericsSection,
    /// Include the direct-transmission baseline columns/rows.
    #[serde(default = "defaults::yes")]
    pub baseline: bool,
    /// Multiply reported rates by 1/2 to account for the relaying slot.
    #[serde(default)]
    pub half_duplex_penalty: bool,
    /// Sweep request; filled by the `--sweep` flag and persisted in the
    /// sidecar so a sidecar re-run reproduces the CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults are complete")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FogSection {
    pub k: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub pt_dbm: f64,
    pub responsivity: f64,
    pub noise_var: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum PointingSection {
    /// Beam-optics pipeline: derive (ρ, A0) at any distance.
    Geometry {
        aperture_radius_m: f64,
        waist_w0_m: f64,
        wavelength_m: f64,
        jitter_sigma_m: f64,
        beam_waist_at_ref_m: f64,
        ref_distance_m: f64,
        #[serde(default)]
        wzeq_convention: ConventionName,
    },
    /// Measured (ρ, A0) pairs per hop (and for the direct link when the
    /// baseline is requested).
    Direct {
        hop1: RhoA0,
        hop2: RhoA0,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        full_link: Option<RhoA0>,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhoA0 {
    pub rho: f64,
    pub a0: f64,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ConventionName {
    #[default]
    Paper,
    Literature,
}

impl From<ConventionName> for WzeqConvention {
    fn from(c: ConventionName) -> Self {
        match c {
            ConventionName::Paper => WzeqConvention::Paper,
            ConventionName::Literature => WzeqConvention::Literature,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySection {
    /// Source-to-destination distance, km.
    pub d_km: f64,
    /// Source-to-relay distance, km; null places the relay at the midpoint.
    #[serde(default)]
    pub dr_km: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub trials: u64,
    pub master_seed: u64,
    pub chunk_size: u64,
    pub mode: ModeName,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "kebab-case")]
pub enum ModeName {
    Direct,
    RelayMin,
    RelayHarmonic,
    RelayTrue,
}

impl From<ModeName> for SimMode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::Direct => SimMode::Direct,
            ModeName::RelayMin => SimMode::RelayMin,
            ModeName::RelayHarmonic => SimMode::RelayHarmonic,
            ModeName::RelayTrue => SimMode::RelayTrue,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub variable: SweepVar,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    PtDbm,
    DKm,
    DrKm,
    GammaThDb,
}

impl SweepVar {
    pub fn parse(name: &str) -> Result<Self, CliError> {
        match name {
            "pt_dbm" => Ok(Self::PtDbm),
            "d" | "d_km" => Ok(Self::DKm),
            "d_r" | "dr_km" => Ok(Self::DrKm),
            "gamma_th_db" => Ok(Self::GammaThDb),
            other => Err(CliError::Config(format!(
                "unknown sweep variable '{other}' (expected pt_dbm, d, d_r or gamma_th_db)"
            ))),
        }
    }

    /// CSV column name, units included.
    pub fn column(&self) -> &'static str {
        match self {
            Self::PtDbm => "pt_dbm",
            Self::DKm => "d_km",
            Self::DrKm => "dr_km",
            Self::GammaThDb => "gamma_th_db",
        }
    }
}

mod defaults {
    use super::*;

    pub fn fog() -> FogSection {
        FogSection { k: 2.0, beta: 13.12 }
    }
    pub fn system() -> SystemSection {
        SystemSection {
            pt_dbm: 15.0,
            responsivity: 0.41,
            noise_var: 1e-14,
        }
    }
    pub fn pointing() -> PointingSection {
        PointingSection::Geometry {
            aperture_radius_m: 0.1,
            waist_w0_m: 0.005,
            wavelength_m: 650e-9,
            jitter_sigma_m: 0.28,
            beam_waist_at_ref_m: 2.5,
            ref_distance_m: 1000.0,
            wzeq_convention: ConventionName::Paper,
        }
    }
    pub fn topology() -> TopologySection {
        TopologySection {
            d_km: 1.0,
            dr_km: None,
        }
    }
    pub fn gamma_th_db() -> f64 {
        6.0
    }
    pub fn methods() -> Vec<MethodName> {
        vec![
            MethodName::ClosedForm,
            MethodName::Quadrature,
            MethodName::MonteCarlo,
        ]
    }
    pub fn sim() -> SimSection {
        SimSection {
            trials: 1_000_000,
            master_seed: 20260810,
            chunk_size: 65536,
            mode: ModeName::RelayHarmonic,
        }
    }
    pub fn numerics() -> NumericsSection {
        NumericsSection {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_subdivisions: 2000,
        }
    }
    pub fn yes() -> bool {
        true
    }
}

/// Everything resolved into core types, ready for computation.
pub struct Scenario {
    pub fog: FogParams64,
    pub relay: RelayConfig64,
    pub direct_link: LinkParams64,
    pub hop1_pointing: PointingParams64,
    pub hop2_pointing: PointingParams64,
    pub direct_pointing: PointingParams64,
    pub gamma_th: f64,
    pub gamma_th_db: f64,
    pub sim_spec: SimSpec,
    pub tolerances: Tolerances<f64>,
    pub methods: Vec<MethodName>,
    pub baseline: bool,
    pub rate_scale: f64,
    pub d_km: f64,
    pub dr_km: f64,
}

impl Scenario {
    pub fn relay_target(&self) -> foglink::montecarlo::SimTarget {
        foglink::montecarlo::SimTarget::Relay(
            SimChannel {
                link: self.relay.hop1,
                pointing: self.hop1_pointing,
            },
            SimChannel {
                link: self.relay.hop2,
                pointing: self.hop2_pointing,
            },
        )
    }

    pub fn direct_target(&self) -> foglink::montecarlo::SimTarget {
        foglink::montecarlo::SimTarget::Direct(SimChannel {
            link: self.direct_link,
            pointing: self.direct_pointing,
        })
    }

    pub fn wants(&self, m: MethodName) -> bool {
        self.methods.contains(&m)
    }
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }

    /// Field-level validation with messages naming the violated constraint.
    pub fn validate(&self) -> Result<(), CliError> {
        let t = &self.topology;
        if !(t.d_km > 0.0) {
            return Err(CliError::Config(format!(
                "topology.d_km must be positive, got {}",
                t.d_km
            )));
        }
        if let Some(dr) = t.dr_km {
            if !(dr > 0.0 && dr < t.d_km) {
                return Err(CliError::Config(format!(
                    "topology.dr_km must satisfy 0 < dr_km < d_km, got dr_km = {dr}, d_km = {}",
                    t.d_km
                )));
            }
        }
        if !self.gamma_th_db.is_finite() {
            return Err(CliError::Config("gamma_th_db must be finite".into()));
        }
        if self.fog.k <= 0.0 || self.fog.beta <= 0.0 {
            return Err(CliError::Config(
                "fog.k and fog.beta must be positive".into(),
            ));
        }
        if self.methods.is_empty() {
            return Err(CliError::Config("methods must not be empty".into()));
        }
        if let Some(s) = &self.sweep {
            if s.points < 3 {
                return Err(CliError::Config(format!(
                    "sweep.points must be at least 3, got {}",
                    s.points
                )));
            }
            if !(s.lo < s.hi) {
                return Err(CliError::Config(format!(
                    "sweep range must satisfy lo < hi, got {}:{}",
                    s.lo, s.hi
                )));
            }
        }
        Ok(())
    }

    pub fn resolve(&self) -> Result<Scenario, CliError> {
        self.validate()?;
        let fog = FogParams64::new(self.fog.k, self.fog.beta).map_err(CliError::num)?;
        let sys = SystemParams64::new(
            self.system.pt_dbm,
            self.system.responsivity,
            self.system.noise_var,
        )
        .map_err(CliError::num)?;
        let d = self.topology.d_km;
        let dr = self.topology.dr_km.unwrap_or(d / 2.0);

        let (p1, p2, pd) = self.pointing_at(dr, d - dr, d)?;
        let hop1 = make_link(dr, &fog, &p1, &sys).map_err(CliError::num)?;
        let hop2 = make_link(d - dr, &fog, &p2, &sys).map_err(CliError::num)?;
        let direct_link = make_link(d, &fog, &pd, &sys).map_err(CliError::num)?;
        let relay = RelayConfig64::new(hop1, hop2);

        let gamma_th = 10f64.powf(self.gamma_th_db / 10.0);
        let sim_spec = SimSpec::new(
            self.sim.trials.max(1),
            self.sim.master_seed,
            self.sim.chunk_size,
            self.sim.mode.into(),
            gamma_th,
        )
        .map_err(CliError::num)?;

        let mut methods = self.methods.clone();
        if self.sim.trials == 0 {
            methods.retain(|m| *m != MethodName::MonteCarlo);
        }

        Ok(Scenario {
            fog,
            relay,
            direct_link,
            hop1_pointing: p1,
            hop2_pointing: p2,
            direct_pointing: pd,
            gamma_th,
            gamma_th_db: self.gamma_th_db,
            sim_spec,
            tolerances: Tolerances {
                rel_tol: self.numerics.rel_tol,
                abs_tol: self.numerics.abs_tol,
                max_subdivisions: self.numerics.max_subdivisions,
            },
            methods,
            baseline: self.baseline,
            rate_scale: if self.half_duplex_penalty { 0.5 } else { 1.0 },
            d_km: d,
            dr_km: dr,
        })
    }

    fn pointing_at(
        &self,
        d1_km: f64,
        d2_km: f64,
        d_km: f64,
    ) -> Result<(PointingParams64, PointingParams64, PointingParams64), CliError> {
        match &self.pointing {
            PointingSection::Geometry {
                aperture_radius_m,
                waist_w0_m,
                wavelength_m,
                jitter_sigma_m,
                beam_waist_at_ref_m,
                ref_distance_m,
                wzeq_convention,
            } => {
                let geom = PointingGeometry64::new(
                    *aperture_radius_m,
                    *waist_w0_m,
                    *wavelength_m,
                    *jitter_sigma_m,
                    *beam_waist_at_ref_m,
                    *ref_distance_m,
                    (*wzeq_convention).into(),
                )
                .map_err(CliError::num)?;
                let at = |dk: f64| pointing_params(dk * 1000.0, &geom).map_err(CliError::num);
                Ok((at(d1_km)?, at(d2_km)?, at(d_km)?))
            }
            PointingSection::Direct {
                hop1,
                hop2,
                full_link,
            } => {
                let make = |r: &RhoA0| {
                    PointingParams64::from_rho_a0(r.rho, r.a0).map_err(CliError::num)
                };
                let pd = match full_link {
                    Some(r) => make(r)?,
                    None => {
                        if self.baseline {
                            return Err(CliError::Config(
                                "pointing.full_link (rho, a0) is required when baseline = true \
                                 and pointing.mode = direct"
                                    .into(),
                            ));
                        }
                        make(hop1)?
                    }
                };
                Ok((make(hop1)?, make(hop2)?, pd))
            }
        }
    }
}
