//! Experiment parameters and their TOML form.
//!
//! A config file holds any subset of the fields below; missing fields keep
//! the defaults of the chosen experiment.
//!
//! ```toml
//! experiment = "fig3"
//! kernel = "gaussian"        # gaussian | bump | tabulated
//! kernel_file = "phi.csv"    # x,value rows; required for tabulated
//! kernel_parity = "even"     # even | general
//! epsilon = 0.55
//! order = 90                 # Taylor degree for fig1, series order otherwise
//! edge_margin = 0.1
//! output_dir = "out/fig3"
//!
//! [grid]
//! t0 = -6.0
//! t1 = 6.0
//! n = 2048
//!
//! [noise]
//! seed = 42
//! variance = 0.5
//!
//! [filter]
//! kind = "sinc"              # sinc | allpass
//! bandwidth = 1.0
//! half_width = 8.0
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use deconv_core::deconvolution::{DEFAULT_EDGE_MARGIN, DEFAULT_SINC_HALF_WIDTH};
use deconv_core::{Kernel, KernelFamily, Parity};
use serde::{Deserialize, Serialize};

use crate::error::AppError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentId {
    Fig1,
    Fig2,
    Fig3,
    Custom,
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentId::Fig1 => "fig1",
            ExperimentId::Fig2 => "fig2",
            ExperimentId::Fig3 => "fig3",
            ExperimentId::Custom => "custom",
        })
    }
}

impl FromStr for ExperimentId {
    type Err = AppError;

    fn from_str(s: &str) -> Result<Self, AppError> {
        match s {
            "fig1" => Ok(ExperimentId::Fig1),
            "fig2" => Ok(ExperimentId::Fig2),
            "fig3" => Ok(ExperimentId::Fig3),
            "custom" => Ok(ExperimentId::Custom),
            other => Err(AppError::Usage(format!("unknown experiment {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub t0: f64,
    pub t1: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub seed: u64,
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    /// `h(t) = 2B sinc(2Bt)`.
    Sinc,
    /// A single unit tap.
    Allpass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSpec {
    pub kind: FilterKind,
    pub bandwidth: f64,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub experiment: ExperimentId,
    pub kernel: KernelFamily,
    pub kernel_file: Option<PathBuf>,
    pub kernel_parity: Parity,
    pub epsilon: f64,
    pub order: usize,
    pub grid: GridSpec,
    pub noise: NoiseSpec,
    pub filter: FilterSpec,
    pub edge_margin: f64,
    pub output_dir: PathBuf,
}

pub const DEFAULT_SEED: u64 = 42;

impl ExperimentSpec {
    pub fn defaults(id: ExperimentId) -> Self {
        let signal = |variance, kind| ExperimentSpec {
            experiment: id,
            kernel: KernelFamily::Gaussian,
            kernel_file: None,
            kernel_parity: Parity::Even,
            epsilon: 0.55,
            order: 90,
            grid: GridSpec {
                t0: -6.0,
                t1: 6.0,
                n: 2048,
            },
            noise: NoiseSpec {
                seed: DEFAULT_SEED,
                variance,
            },
            filter: FilterSpec {
                kind,
                bandwidth: 1.0,
                half_width: DEFAULT_SINC_HALF_WIDTH,
            },
            edge_margin: DEFAULT_EDGE_MARGIN,
            output_dir: PathBuf::from("out").join(id.to_string()),
        };
        match id {
            ExperimentId::Fig1 => ExperimentSpec {
                kernel: KernelFamily::Bump,
                epsilon: 0.9,
                order: 50,
                grid: GridSpec {
                    t0: -2.0,
                    t1: 2.0,
                    n: 2001,
                },
                ..signal(0.0, FilterKind::Allpass)
            },
            ExperimentId::Fig2 => signal(0.0, FilterKind::Allpass),
            ExperimentId::Fig3 | ExperimentId::Custom => signal(0.5, FilterKind::Sinc),
        }
    }

    /// Defaults of `id` overridden by the fields present in `text`. A file
    /// naming a different experiment than `id` is rejected.
    pub fn from_toml(id: Option<ExperimentId>, text: &str) -> Result<Self, AppError> {
        let file: SpecFile = toml::from_str(text).map_err(|e| AppError::Config(e.to_string()))?;
        let id = match (id, file.experiment) {
            (Some(a), Some(b)) if a != b => {
                return Err(AppError::Usage(format!("config file is for {b}, not {a}")));
            }
            (Some(a), _) => a,
            (None, Some(b)) => b,
            (None, None) => return Err(AppError::Usage("config file does not name an experiment".into())),
        };
        let mut spec = Self::defaults(id);
        file.apply(&mut spec);
        Ok(spec)
    }

    pub fn load(id: Option<ExperimentId>, path: &Path) -> Result<Self, AppError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(id, &text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec is serializable")
    }

    pub fn build_kernel(&self) -> Result<Kernel, AppError> {
        build_kernel(self.kernel, self.kernel_file.as_deref(), self.kernel_parity)
    }

    /// Names of fields whose value is an unpublished reconstruction and is
    /// still at its default.
    pub fn reconstructed_defaults(&self) -> Vec<&'static str> {
        let d = Self::defaults(self.experiment);
        let mut out = Vec::new();
        if self.grid == d.grid {
            out.push("grid");
        }
        if self.experiment != ExperimentId::Fig1 {
            if self.noise.seed == d.noise.seed && self.noise.variance > 0.0 {
                out.push("noise.seed");
            }
            if self.filter.kind == FilterKind::Sinc && self.filter.half_width == d.filter.half_width {
                out.push("filter.half_width");
            }
        }
        if self.edge_margin == d.edge_margin {
            out.push("edge_margin");
        }
        out
    }
}

pub fn build_kernel(family: KernelFamily, file: Option<&Path>, parity: Parity) -> Result<Kernel, AppError> {
    match (family, file) {
        (KernelFamily::Gaussian, None) => Ok(Kernel::gaussian()),
        (KernelFamily::Bump, None) => Ok(Kernel::bump()),
        (KernelFamily::Tabulated, Some(path)) => Ok(Kernel::tabulated_from_csv(path, parity)?),
        (KernelFamily::Tabulated, None) => Err(AppError::Usage("tabulated kernel needs a kernel file".into())),
        (f, Some(_)) => Err(AppError::Usage(format!(
            "a kernel file only applies to tabulated kernels, not {f}"
        ))),
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    t0: Option<f64>,
    t1: Option<f64>,
    n: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseFile {
    seed: Option<u64>,
    variance: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FilterFile {
    kind: Option<FilterKind>,
    bandwidth: Option<f64>,
    half_width: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    experiment: Option<ExperimentId>,
    kernel: Option<KernelFamily>,
    kernel_file: Option<PathBuf>,
    kernel_parity: Option<Parity>,
    epsilon: Option<f64>,
    order: Option<usize>,
    grid: Option<GridFile>,
    noise: Option<NoiseFile>,
    filter: Option<FilterFile>,
    edge_margin: Option<f64>,
    output_dir: Option<PathBuf>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl SpecFile {
    fn apply(self, spec: &mut ExperimentSpec) {
        set(&mut spec.kernel, self.kernel);
        if self.kernel_file.is_some() {
            spec.kernel_file = self.kernel_file;
        }
        set(&mut spec.kernel_parity, self.kernel_parity);
        set(&mut spec.epsilon, self.epsilon);
        set(&mut spec.order, self.order);
        set(&mut spec.edge_margin, self.edge_margin);
        set(&mut spec.output_dir, self.output_dir);
        if let Some(g) = self.grid {
            set(&mut spec.grid.t0, g.t0);
            set(&mut spec.grid.t1, g.t1);
            set(&mut spec.grid.n, g.n);
        }
        if let Some(n) = self.noise {
            set(&mut spec.noise.seed, n.seed);
            set(&mut spec.noise.variance, n.variance);
        }
        if let Some(f) = self.filter {
            set(&mut spec.filter.kind, f.kind);
            set(&mut spec.filter.bandwidth, f.bandwidth);
            set(&mut spec.filter.half_width, f.half_width);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_defaults() {
        let f1 = ExperimentSpec::defaults(ExperimentId::Fig1);
        assert_eq!((f1.kernel, f1.epsilon, f1.order), (KernelFamily::Bump, 0.9, 50));
        for id in [ExperimentId::Fig2, ExperimentId::Fig3] {
            let s = ExperimentSpec::defaults(id);
            assert_eq!((s.kernel, s.epsilon, s.order), (KernelFamily::Gaussian, 0.55, 90));
        }
        assert_eq!(ExperimentSpec::defaults(ExperimentId::Fig3).noise.variance, 0.5);
    }

    #[test]
    fn partial_override() {
        let spec =
            ExperimentSpec::from_toml(None, "experiment = \"fig3\"\nepsilon = 0.4\n[noise]\nseed = 7\n").unwrap();
        assert_eq!(spec.epsilon, 0.4);
        assert_eq!(spec.noise.seed, 7);
        assert_eq!(spec.noise.variance, 0.5);
        assert_eq!(spec.order, 90);
    }

    #[test]
    fn full_round_trip() {
        let spec = ExperimentSpec::defaults(ExperimentId::Fig3);
        assert_eq!(ExperimentSpec::from_toml(None, &spec.to_toml()).unwrap(), spec);
    }

    #[test]
    fn rejected_files() {
        assert!(matches!(
            ExperimentSpec::from_toml(None, "epsilon = 1.0"),
            Err(AppError::Usage(_))
        ));
        assert!(matches!(
            ExperimentSpec::from_toml(Some(ExperimentId::Fig1), "typo = 1"),
            Err(AppError::Config(_))
        ));
        assert!(matches!(
            ExperimentSpec::from_toml(Some(ExperimentId::Fig1), "experiment = \"fig2\""),
            Err(AppError::Usage(_))
        ));
    }

    #[test]
    fn flags_reconstructions() {
        let spec = ExperimentSpec::defaults(ExperimentId::Fig3);
        assert_eq!(
            spec.reconstructed_defaults(),
            ["grid", "noise.seed", "filter.half_width", "edge_margin"]
        );
    }
}
