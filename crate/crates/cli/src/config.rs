//! Layered run configuration: built-in defaults, then an optional TOML file,
//! then command-line flag overrides.  Every physical precondition of the
//! downstream operations is checked at load time and reported with the
//! config field path, so a bad value fails before any work starts.

use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use polariton_cloning::cloning::{CloneParams, SpinEnsemble, SweepGrid, SWEEP_CAP};
use polariton_cloning::fock::DEFAULT_AMPLITUDE_CAP;
use polariton_cloning::polariton::{hopfield, CavityParams};
use polariton_cloning::validation::SuiteConfig;

use crate::CliError;

/// Serialization target for command output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnitsBlock {
    /// Reduced Planck constant in the working unit system.
    pub hbar: f64,
    /// Speed of light in the working unit system.
    pub c: f64,
    /// Photon–matter coupling energy g.
    pub g: f64,
}

impl Default for UnitsBlock {
    fn default() -> Self {
        Self { hbar: 1.0, c: 1.0, g: 0.05 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CavityBlock {
    /// Atomic transition energy E_at.
    pub e_at: f64,
    /// Cavity length; omitted → tuned so the k∥ = 0 photon sits on E_at.
    pub l_cav: Option<f64>,
    /// Transverse mode number m ≥ 1.
    pub m: u32,
}

impl Default for CavityBlock {
    fn default() -> Self {
        Self { e_at: 2.0, l_cav: None, m: 1 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolBlock {
    pub gamma_re: f64,
    pub gamma_im: f64,
    /// Input signal variance; 1 is a pure coherent state.
    pub v_in: f64,
    /// Amplifier gain G ≥ 1.
    pub gain: f64,
    /// Ensemble size; 0 means all atoms absent (vacuum matter mode).
    pub n: u64,
    /// Lower-state population |α|² of each atom.
    pub alpha2: f64,
    /// Relative phase arg α − arg β.
    pub phi_rel: f64,
    /// Detuning steering the mixer coefficients; 0 is the balanced point.
    pub delta: f64,
}

impl Default for ProtocolBlock {
    fn default() -> Self {
        Self {
            gamma_re: 1.0,
            gamma_im: 0.0,
            v_in: 1.0,
            gain: 2.0,
            n: 0,
            alpha2: 1.0,
            phi_rel: 0.0,
            delta: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleBlock {
    /// Per-mode occupation cutoff of the pipeline-scale comparison runs.
    #[serde(alias = "cutoffs")]
    pub cutoff: usize,
    /// Amplitude-count cap for every Fock space the suite builds.
    pub cap: usize,
    /// Tolerance for engine-vs-oracle comparison checks.
    pub tolerance: f64,
    /// Seed of the randomized draws.
    pub seed: u64,
}

impl Default for OracleBlock {
    fn default() -> Self {
        Self {
            cutoff: 30,
            cap: DEFAULT_AMPLITUDE_CAP,
            tolerance: 1e-6,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    /// Output serialization; omitted → CSV for tabular commands
    /// (dispersion, sweep), JSON for the rest.
    pub format: Option<OutputFormat>,
    /// Output file; omitted → stdout.
    pub path: Option<PathBuf>,
    /// Significant digits for every floating-point value emitted.
    pub precision: usize,
    /// Suppress progress chatter.
    pub quiet: bool,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { format: None, path: None, precision: 15, quiet: false }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispersionBlock {
    /// Upper end of the in-plane wave-vector scan (starts at 0).
    pub k_par_max: f64,
    pub n_points: usize,
}

impl Default for DispersionBlock {
    fn default() -> Self {
        Self { k_par_max: 1.5, n_points: 101 }
    }
}

/// Sweep axes; an omitted axis inherits the protocol block's single value,
/// so an empty `[sweep]` block reproduces the `clone` command exactly.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepBlock {
    pub delta: Option<Vec<f64>>,
    pub alpha2: Option<Vec<f64>>,
    pub phi: Option<Vec<f64>>,
    pub n: Option<Vec<u64>>,
    pub gain: Option<Vec<f64>>,
    pub v_in: Option<Vec<f64>>,
    pub cap: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReadoutBlock {
    /// End of the interaction-time grid (starts at 0).
    pub t_max: Option<f64>,
    pub n_points: usize,
}

impl Default for ReadoutBlock {
    fn default() -> Self {
        Self { t_max: None, n_points: 1001 }
    }
}

/// The full layered configuration.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub units: UnitsBlock,
    pub cavity: CavityBlock,
    pub protocol: ProtocolBlock,
    pub oracle: OracleBlock,
    pub output: OutputBlock,
    pub dispersion: DispersionBlock,
    pub sweep: SweepBlock,
    pub readout: ReadoutBlock,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn require(ok: bool, path: &str, msg: String) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(config_err(format!("{path}: {msg}")))
    }
}

fn finite(value: f64, path: &str) -> Result<(), CliError> {
    require(value.is_finite(), path, format!("must be finite, got {value}"))
}

fn positive(value: f64, path: &str) -> Result<(), CliError> {
    require(
        value.is_finite() && value > 0.0,
        path,
        format!("must be positive and finite, got {value}"),
    )
}

impl RunConfig {
    /// Read and parse the TOML file at `path`.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            config_err(format!("cannot read config file {}: {e}", path.display()))
        })?;
        toml::from_str(&text)
            .map_err(|e| config_err(format!("config file {}: {e}", path.display())))
    }

    /// Check every physical precondition, naming the offending field.
    pub fn validate(&self) -> Result<(), CliError> {
        positive(self.units.hbar, "units.hbar")?;
        positive(self.units.c, "units.c")?;
        positive(self.units.g, "units.g")?;

        positive(self.cavity.e_at, "cavity.e_at")?;
        if let Some(l) = self.cavity.l_cav {
            positive(l, "cavity.l_cav")?;
        }
        require(self.cavity.m >= 1, "cavity.m", "mode number must be at least 1".into())?;

        let p = &self.protocol;
        finite(p.gamma_re, "protocol.gamma_re")?;
        finite(p.gamma_im, "protocol.gamma_im")?;
        require(
            p.v_in.is_finite() && p.v_in >= 1.0,
            "protocol.v_in",
            format!("input variance must be at least 1, got {}", p.v_in),
        )?;
        require(
            p.gain.is_finite() && p.gain >= 1.0,
            "protocol.gain",
            format!("amplifier gain must be at least 1, got {}", p.gain),
        )?;
        require(
            (0.0..=1.0).contains(&p.alpha2),
            "protocol.alpha2",
            format!("population fraction must lie in [0, 1], got {}", p.alpha2),
        )?;
        finite(p.phi_rel, "protocol.phi_rel")?;
        finite(p.delta, "protocol.delta")?;

        positive(self.oracle.tolerance, "oracle.tolerance")?;
        require(
            self.oracle.cutoff >= 2,
            "oracle.cutoff",
            format!("occupation cutoff must be at least 2, got {}", self.oracle.cutoff),
        )?;
        require(self.oracle.cap >= 1, "oracle.cap", "amplitude cap must be at least 1".into())?;

        require(
            (2..=17).contains(&self.output.precision),
            "output.precision",
            format!("significant digits must lie in [2, 17], got {}", self.output.precision),
        )?;

        require(
            self.dispersion.k_par_max.is_finite() && self.dispersion.k_par_max > 0.0,
            "dispersion.k_par_max",
            format!("scan range must be positive, got {}", self.dispersion.k_par_max),
        )?;
        require(
            self.dispersion.n_points >= 2,
            "dispersion.n_points",
            format!("grid needs at least 2 points, got {}", self.dispersion.n_points),
        )?;

        if let Some(t) = self.readout.t_max {
            positive(t, "readout.t_max")?;
        }
        require(
            self.readout.n_points >= 2,
            "readout.n_points",
            format!("time grid needs at least 2 points, got {}", self.readout.n_points),
        )?;

        let s = &self.sweep;
        for (name, axis) in [("delta", &s.delta), ("alpha2", &s.alpha2), ("phi", &s.phi), ("gain", &s.gain), ("v_in", &s.v_in)] {
            if let Some(values) = axis {
                require(
                    !values.is_empty(),
                    &format!("sweep.{name}"),
                    "axis has no points".into(),
                )?;
                for &v in values {
                    finite(v, &format!("sweep.{name}"))?;
                }
            }
        }
        if let Some(values) = &s.n {
            require(!values.is_empty(), "sweep.n", "axis has no points".into())?;
        }
        if let Some(values) = &s.alpha2 {
            for &v in values {
                require(
                    (0.0..=1.0).contains(&v),
                    "sweep.alpha2",
                    format!("population fraction must lie in [0, 1], got {v}"),
                )?;
            }
        }
        if let Some(values) = &s.v_in {
            for &v in values {
                require(
                    v >= 1.0,
                    "sweep.v_in",
                    format!("input variance must be at least 1, got {v}"),
                )?;
            }
        }
        if let Some(values) = &s.gain {
            for &v in values {
                require(
                    v >= 1.0,
                    "sweep.gain",
                    format!("amplifier gain must be at least 1, got {v}"),
                )?;
            }
        }
        if let Some(cap) = s.cap {
            require(cap >= 1, "sweep.cap", "grid cap must be at least 1".into())?;
        }
        Ok(())
    }

    pub fn gamma(&self) -> C64 {
        C64::new(self.protocol.gamma_re, self.protocol.gamma_im)
    }

    /// Cavity parameters in the configured unit system; a missing length is
    /// resolved to the resonant one, L = πm·ħc/E_at.
    pub fn cavity_params(&self) -> Result<CavityParams, CliError> {
        let hbar_c = self.units.hbar * self.units.c;
        let l_cav = self.cavity.l_cav.unwrap_or_else(|| {
            std::f64::consts::PI * f64::from(self.cavity.m) * hbar_c / self.cavity.e_at
        });
        let params = CavityParams {
            e_at: self.cavity.e_at,
            g: self.units.g,
            hbar_c,
            l_cav,
            mode_index: self.cavity.m,
            c_light: self.units.c,
            hbar: self.units.hbar,
        };
        params.validate().map_err(|e| config_err(format!("cavity: {e}")))?;
        Ok(params)
    }

    pub fn ensemble(&self) -> Result<SpinEnsemble, CliError> {
        SpinEnsemble::from_populations(self.protocol.n, self.protocol.alpha2, self.protocol.phi_rel)
            .map_err(|e| config_err(format!("protocol: {e}")))
    }

    /// The cloning-run inputs, with mixer coefficients resolved from the
    /// configured detuning and coupling.
    pub fn clone_params(&self) -> Result<CloneParams, CliError> {
        let hp = hopfield(self.protocol.delta, self.units.g)
            .map_err(|e| config_err(format!("protocol.delta: {e}")))?;
        Ok(CloneParams {
            gamma: self.gamma(),
            v_in: self.protocol.v_in,
            ensemble: self.ensemble()?,
            gain: self.protocol.gain,
            hopfield: Some(hp),
            literal_nu_sign: false,
        })
    }

    pub fn sweep_grid(&self) -> SweepGrid {
        let p = &self.protocol;
        let s = &self.sweep;
        SweepGrid {
            delta: s.delta.clone().unwrap_or_else(|| vec![p.delta]),
            alpha2: s.alpha2.clone().unwrap_or_else(|| vec![p.alpha2]),
            phi: s.phi.clone().unwrap_or_else(|| vec![p.phi_rel]),
            n_atoms: s.n.clone().unwrap_or_else(|| vec![p.n]),
            gain: s.gain.clone().unwrap_or_else(|| vec![p.gain]),
            v_in: s.v_in.clone().unwrap_or_else(|| vec![p.v_in]),
            g: self.units.g,
            gamma: self.gamma(),
            cap: s.cap.unwrap_or(SWEEP_CAP),
        }
    }

    pub fn suite_config(&self) -> SuiteConfig {
        SuiteConfig {
            seed: self.oracle.seed,
            comparison_tol: self.oracle.tolerance,
            cutoff: self.oracle.cutoff,
            cap: self.oracle.cap,
        }
    }

    /// Readout time grid: (t_max, points). The default span is one full
    /// swap period π·ħ/g, whose midpoint row lands exactly on gt/ħ = π/2.
    pub fn readout_grid(&self) -> (f64, usize) {
        let t_max = self
            .readout
            .t_max
            .unwrap_or(std::f64::consts::PI * self.units.hbar / self.units.g);
        (t_max, self.readout.n_points)
    }
}
