//! TOML experiment configuration. Human-authored configs are TOML; machine
//! artifacts are JSON. A config block plus a seed fully determines a run.

use serde::{Deserialize, Serialize};

use momentcert::distributions::{Adversary, ContaminationSpec, DistributionSpec, Family};
use momentcert::robust_mean::{FilterConfig, SweepAdversary};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: Option<String>,
    pub distribution: Option<DistributionBlock>,
    pub sample: Option<SampleBlock>,
    pub contamination: Option<ContaminationBlock>,
    pub profile: Option<ProfileBlock>,
    pub sweep: Option<SweepBlock>,
    pub filter: Option<FilterBlock>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| format!("config parse error: {e}"))
    }

    /// Applies the SOS_CERT_SEED override to every seeded block.
    pub fn override_seeds(&mut self, seed: u64) {
        if let Some(s) = self.sample.as_mut() {
            s.seed = seed;
        }
        if let Some(c) = self.contamination.as_mut() {
            c.seed = seed;
        }
        if let Some(s) = self.sweep.as_mut() {
            s.seed = seed;
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributionBlock {
    pub family: String,
    pub d: usize,
    pub sigma: Option<Vec<Vec<f64>>>,
    pub bias: Option<f64>,
    pub nu: Option<f64>,
}

impl DistributionBlock {
    pub fn to_spec(&self) -> Result<DistributionSpec, String> {
        let family = match self.family.as_str() {
            "gaussian-iso" => Family::GaussianIso,
            "gaussian-cov" => Family::GaussianCov(
                self.sigma
                    .clone()
                    .ok_or("gaussian-cov requires field `sigma`")?,
            ),
            "rademacher" => Family::RademacherProduct,
            "uniform-sphere" => Family::UniformSphere,
            "scale-mixture" => Family::ScaleMixture,
            "centered-bernoulli" => {
                Family::CenteredBernoulli(self.bias.ok_or("centered-bernoulli requires `bias`")?)
            }
            "student-t" => Family::StudentT(self.nu.ok_or("student-t requires `nu`")?),
            other => return Err(format!("unknown family `{other}`")),
        };
        Ok(DistributionSpec::new(family, self.d))
    }
}

fn default_seed() -> u64 {
    0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleBlock {
    pub n: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContaminationBlock {
    pub epsilon: f64,
    pub adversary: String,
    pub location: Option<Vec<f64>>,
    pub center: Option<Vec<f64>>,
    pub spread: Option<f64>,
    pub factor: Option<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl ContaminationBlock {
    pub fn to_spec(&self) -> Result<ContaminationSpec, String> {
        let adversary = match self.adversary.as_str() {
            "point-mass" => Adversary::PointMass(
                self.location
                    .clone()
                    .ok_or("point-mass requires `location`")?,
            ),
            "shifted-cluster" => Adversary::ShiftedCluster {
                center: self
                    .center
                    .clone()
                    .ok_or("shifted-cluster requires `center`")?,
                spread: self.spread.unwrap_or(0.0),
            },
            "mirror-inliers" => Adversary::MirrorInliers {
                factor: self.factor.unwrap_or(3.0),
            },
            other => return Err(format!("unknown adversary `{other}`")),
        };
        Ok(ContaminationSpec {
            epsilon: self.epsilon,
            adversary,
            seed: self.seed,
        })
    }
}

fn default_m_list() -> Vec<usize> {
    vec![2, 4, 6, 8]
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileBlock {
    #[serde(default = "default_m_list")]
    pub m_list: Vec<usize>,
    #[serde(default = "default_true")]
    pub center: bool,
    pub s_known: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepBlock {
    pub epsilon_list: Vec<f64>,
    pub trials: usize,
    pub n: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub center_scale: Option<f64>,
    pub spread_ratio: Option<f64>,
    pub point_mass_distance: Option<f64>,
}

impl SweepBlock {
    pub fn adversary(&self) -> SweepAdversary {
        if let Some(distance) = self.point_mass_distance {
            SweepAdversary::FixedPointMass { distance }
        } else {
            SweepAdversary::ScaledShiftedCluster {
                center_scale: self.center_scale.unwrap_or(2.2),
                spread_ratio: self.spread_ratio.unwrap_or(1.0 / 3.0),
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilterBlock {
    pub c2: Option<f64>,
    pub c4: Option<f64>,
    pub spectral_threshold: Option<f64>,
    pub q_scale: Option<f64>,
    pub deg4_cert_bound: Option<f64>,
    pub max_iters: Option<usize>,
}

impl FilterBlock {
    pub fn to_config(&self) -> FilterConfig {
        let mut cfg = FilterConfig::default();
        if let Some(v) = self.c2 {
            cfg.c2 = v;
        }
        if let Some(v) = self.c4 {
            cfg.c4 = v;
        }
        if let Some(v) = self.spectral_threshold {
            cfg.spectral_threshold = v;
        }
        if let Some(v) = self.q_scale {
            cfg.q_scale = v;
        }
        if let Some(v) = self.deg4_cert_bound {
            cfg.deg4_cert_bound = Some(v);
        }
        if let Some(v) = self.max_iters {
            cfg.max_iters = v;
        }
        cfg
    }
}
