//! Run configuration: one TOML document whose keys are mirrored by CLI
//! flags. Resolution order is defaults, then the config file, then flags;
//! every artifact embeds the fully resolved document so outputs are
//! self-describing.

use serde::{Deserialize, Serialize};

use boltz2d::kernel::KernelParams;
use boltz2d::mollifier::MollifierParams;
use boltz2d::particles::{CollisionStyle, InitialLaw, SimulationConfig};
use boltz2d::Vec2;

use crate::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub kernel: KernelSection,
    pub mollifier: MollifierSection,
    pub simulation: SimulationSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSection {
    /// Velocity exponent gamma in (0,1); ignored when `s` is set.
    pub gamma: f64,
    /// Angular singularity exponent nu in (0,1/2); ignored when `s` is set.
    pub nu: f64,
    /// Inverse-power-law index (s > 5); derives gamma and nu when present.
    pub s: Option<f64>,
    /// Exponential-moment exponent; defaults to the midpoint of (gamma v nu, 1).
    pub delta: Option<f64>,
    /// Mollifier log-exponent; defaults to the midpoint of (1/delta, 1/(gamma v nu)).
    pub eta0: Option<f64>,
}

impl Default for KernelSection {
    fn default() -> Self {
        KernelSection { gamma: 0.75, nu: 0.25, s: None, delta: None, eta0: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct MollifierSection {
    /// Truncation scale (dimensionless velocity units).
    pub epsilon: f64,
}

impl Default for MollifierSection {
    fn default() -> Self {
        MollifierSection { epsilon: 1e-2 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    /// Angular cutoff in (0,1).
    pub zeta: f64,
    pub n_particles: usize,
    /// Horizon T (time units).
    pub horizon: f64,
    /// "one-sided" (Nanbu, matches the SDE) or "symmetric" (Bird, exactly
    /// conservative).
    pub collision_style: String,
    pub initial_law: InitialLawSection,
    pub seed: u64,
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection {
            zeta: 0.05,
            n_particles: 10_000,
            horizon: 1.0,
            collision_style: "one-sided".into(),
            initial_law: InitialLawSection::default(),
            seed: 20260810,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct InitialLawSection {
    /// gaussian | two-point | uniform-disk
    pub kind: String,
    /// Initial energy for the Gaussian law.
    pub e0: f64,
    /// Atom for the two-point law.
    pub w: [f64; 2],
    /// Radius for the uniform-disk law.
    pub radius: f64,
}

impl Default for InitialLawSection {
    fn default() -> Self {
        InitialLawSection { kind: "gaussian".into(), e0: 2.0, w: [1.0, 0.0], radius: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub replicas: u64,
    pub output_times: Vec<f64>,
    pub output_dir: String,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            replicas: 32,
            output_times: vec![0.25, 0.5, 1.0],
            output_dir: "out".into(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config parse: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn kernel_params(&self) -> CliResult<KernelParams> {
        let k = &self.kernel;
        let params = match k.s {
            Some(s) => KernelParams::with_overrides(s, k.delta, k.eta0)?,
            None => {
                let base = k.gamma.max(k.nu);
                if !(base > 0.0 && base < 1.0) {
                    return Err(CliError::Config(format!(
                        "gamma = {}, nu = {} outside their ranges",
                        k.gamma, k.nu
                    )));
                }
                let delta = k.delta.unwrap_or(0.5 * (base + 1.0));
                let eta0 = k.eta0.unwrap_or(0.5 * (1.0 / delta + 1.0 / base));
                KernelParams::new(k.gamma, k.nu, delta, eta0)?
            }
        };
        Ok(params)
    }

    pub fn mollifier_params(&self) -> CliResult<MollifierParams> {
        let kernel = self.kernel_params()?;
        Ok(MollifierParams::new(self.mollifier.epsilon, kernel.eta0())?)
    }

    pub fn initial_law(&self) -> CliResult<InitialLaw> {
        let law = &self.simulation.initial_law;
        match law.kind.as_str() {
            "gaussian" => Ok(InitialLaw::Gaussian { e0: law.e0 }),
            "two-point" => Ok(InitialLaw::TwoPoint { w: Vec2::new(law.w[0], law.w[1]) }),
            "uniform-disk" => Ok(InitialLaw::UniformDisk { radius: law.radius }),
            other => Err(CliError::Config(format!(
                "unknown initial law kind '{other}' (gaussian | two-point | uniform-disk)"
            ))),
        }
    }

    pub fn collision_style(&self) -> CliResult<CollisionStyle> {
        match self.simulation.collision_style.as_str() {
            "one-sided" => Ok(CollisionStyle::OneSided),
            "symmetric" => Ok(CollisionStyle::Symmetric),
            other => Err(CliError::Config(format!(
                "unknown collision style '{other}' (one-sided | symmetric)"
            ))),
        }
    }

    /// Full admissibility-checked core configuration.
    pub fn simulation_config(&self) -> CliResult<SimulationConfig> {
        let config = SimulationConfig {
            kernel: self.kernel_params()?,
            mollifier: self.mollifier_params()?,
            zeta: self.simulation.zeta,
            n_particles: self.simulation.n_particles,
            horizon: self.simulation.horizon,
            collision_style: self.collision_style()?,
            initial_law: self.initial_law()?,
            seed: self.simulation.seed,
        };
        config.validate()?;
        Ok(config)
    }

    /// Validates everything that any subcommand relies on.
    pub fn validate(&self) -> CliResult<()> {
        self.simulation_config()?;
        if self.run.replicas == 0 {
            return Err(CliError::Config("replicas must be at least 1".into()));
        }
        if self.run.output_times.is_empty() {
            return Err(CliError::Config("output_times must be nonempty".into()));
        }
        Ok(())
    }

    /// Copy with all derived kernel values filled in, for embedding into
    /// artifacts (self-describing outputs).
    pub fn resolved(&self) -> CliResult<RunConfig> {
        let kernel = self.kernel_params()?;
        let mut out = self.clone();
        out.kernel.gamma = kernel.gamma();
        out.kernel.nu = kernel.nu();
        out.kernel.delta = Some(kernel.delta());
        out.kernel.eta0 = Some(kernel.eta0());
        Ok(out)
    }
}
