use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use proxsgd::data::{gen_synthetic, parse_libsvm, solve_reference, SyntheticSpec, DEFAULT_REFERENCE_TOL};
use proxsgd::estimators::{Diana, Estimator, LSvrg, MConvention, Quantizer, Saga, Sega, SgdAs};
use proxsgd::problem::{CompositeProblem, Loss, NoiseMode, ReferenceSolution, Regularizer};
use proxsgd::sampling::SamplingScheme;
use proxsgd::verify::SuiteOptions;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Algo {
    Sgd,
    Saga,
    Lsvrg,
    Sega,
    Diana,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Sgd => "sgd",
            Algo::Saga => "saga",
            Algo::Lsvrg => "lsvrg",
            Algo::Sega => "sega",
            Algo::Diana => "diana",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Libsvm {
        path: PathBuf,
        /// Force the feature dimension; inferred from the file otherwise.
        #[serde(default)]
        dim: Option<usize>,
    },
    Synthetic(SyntheticSpec),
}

/// Experiment description. Every field is optional so that flags can fill
/// in or override anything.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: Option<DataSource>,
    /// Loss for LIBSVM data; synthetic data carries its own.
    pub loss: Option<Loss>,
    pub regularizer: Option<Regularizer>,
    pub algo: Option<Algo>,
    pub b: Option<usize>,
    pub gamma: Option<f64>,
    /// Decreasing schedule `γ0/√(k+1)` instead of a constant step.
    pub gamma0_inv_sqrt: Option<f64>,
    /// L-SVRG refresh probability.
    pub p: Option<f64>,
    pub quantizer: Option<Quantizer>,
    pub workers: Option<usize>,
    pub alpha: Option<f64>,
    pub sgd_noise: Option<NoiseMode>,
    pub grid: Option<Vec<usize>>,
    pub replicates: Option<u64>,
    pub seed: Option<u64>,
    pub eps_rel: Option<f64>,
    pub max_iters: Option<u64>,
    pub log_every: Option<u64>,
    pub convention: Option<MConvention>,
    pub unsafe_step: Option<bool>,
    pub reference_tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub verify: Option<SuiteOptions>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(CliError::config)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative dataset paths are taken relative to it.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(DataSource::Libsvm { path: p, .. }) = &mut cfg.data {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(CliError::config(format!("{name} must be positive, got {x}"))),
            _ => Ok(()),
        };
        positive("gamma", self.gamma)?;
        positive("gamma0_inv_sqrt", self.gamma0_inv_sqrt)?;
        positive("eps_rel", self.eps_rel)?;
        positive("reference_tol", self.reference_tol)?;
        if self.gamma.is_some() && self.gamma0_inv_sqrt.is_some() {
            return Err(CliError::config("gamma and gamma0_inv_sqrt are mutually exclusive"));
        }
        if self.b == Some(0) {
            return Err(CliError::config("b must be at least 1"));
        }
        if self.max_iters == Some(0) {
            return Err(CliError::config("max_iters must be at least 1"));
        }
        if self.replicates == Some(0) {
            return Err(CliError::config("replicates must be at least 1"));
        }
        if let Some(g) = &self.grid {
            if g.is_empty() || g.contains(&0) {
                return Err(CliError::config("grid must be a nonempty list of positive batch sizes"));
            }
        }
        if let Some(p) = self.p {
            if !(p > 0.0 && p <= 1.0) {
                return Err(CliError::config(format!("p must lie in (0, 1], got {p}")));
            }
        }
        if let Some(r) = &self.regularizer {
            r.validate().map_err(CliError::config)?;
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn algo(&self) -> Algo {
        self.algo.unwrap_or(Algo::Saga)
    }
}

/// Loaded problem and its reference solution.
pub struct Setup {
    pub problem: CompositeProblem,
    pub reference: ReferenceSolution,
}

pub fn load_problem(cfg: &ExperimentConfig) -> CliResult<CompositeProblem> {
    let regularizer = cfg.regularizer.unwrap_or(Regularizer::Zero);
    match &cfg.data {
        None => Err(CliError::config("no data source given")),
        Some(DataSource::Libsvm { path, dim }) => {
            let file = fs::File::open(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
            let ds = parse_libsvm(std::io::BufReader::new(file)).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
            let loss = cfg.loss.unwrap_or(Loss::Logistic);
            let problem = match dim {
                None => ds.to_problem(loss, regularizer),
                Some(d) => {
                    let mut padded = ds.clone();
                    padded.d_inferred = padded.d_inferred.max(*d);
                    padded.to_problem(loss, regularizer)
                }
            };
            problem.map_err(CliError::data)
        }
        Some(DataSource::Synthetic(spec)) => {
            if cfg.loss.is_some_and(|l| l != spec.kind) {
                return Err(CliError::config("loss conflicts with the synthetic spec kind"));
            }
            let mut p = gen_synthetic(spec)?;
            p.regularizer = regularizer;
            Ok(p)
        }
    }
}

pub fn load_setup(cfg: &ExperimentConfig) -> CliResult<Setup> {
    let problem = load_problem(cfg)?;
    let reference = solve_reference(&problem, cfg.reference_tol.unwrap_or(DEFAULT_REFERENCE_TOL))?;
    Ok(Setup { problem, reference })
}

pub fn build_estimator(cfg: &ExperimentConfig, b: usize, problem: &CompositeProblem) -> CliResult<Estimator> {
    let n = problem.n();
    Ok(match cfg.algo() {
        Algo::Sgd => {
            let est = SgdAs::new(SamplingScheme::b_nice(n, b)?);
            Estimator::Sgd(match cfg.sgd_noise {
                Some(mode) => est.with_noise_mode(mode),
                None => est,
            })
        }
        Algo::Saga => Estimator::Saga(Saga::new(b)),
        Algo::Lsvrg => Estimator::LSvrg(match cfg.p {
            Some(p) => LSvrg::with_probability(b, p),
            None => LSvrg::new(b),
        }),
        Algo::Sega => Estimator::Sega(Sega::new(b)),
        Algo::Diana => {
            let mut est = Diana::new(cfg.quantizer.unwrap_or(Quantizer::Identity));
            if let Some(m) = cfg.workers {
                est = est.with_workers(m);
            }
            if let Some(a) = cfg.alpha {
                est = est.with_alpha(a);
            }
            Estimator::Diana(est)
        }
    })
}

/// Convention used for the default step: `B/(2ρ)` for smooth problems,
/// `B/ρ` otherwise.
pub fn convention(cfg: &ExperimentConfig, problem: &CompositeProblem) -> MConvention {
    cfg.convention.unwrap_or(if problem.regularizer.is_zero() { MConvention::Smooth } else { MConvention::General })
}
