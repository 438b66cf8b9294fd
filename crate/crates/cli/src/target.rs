use langevin_kit::integrators::SchemeId;
use langevin_kit::potentials::{
    blr_potential, gaussian_potential, load_idx, minimize, synth_dataset, AnisotropicGaussian, BlrPotential,
    EstimatorKind, Potential,
};

use crate::args::{GradKind, TargetArgs, TargetKind};
use crate::error::{require, CliError};

/// Prior variance used for the IDX targets unless overridden.
pub const IDX_PRIOR_VARIANCE: f64 = 0.001;
pub const SYNTH_ROWS: usize = 500;
pub const SYNTH_DIM: usize = 20;
pub const SYNTH_SEPARATION: f64 = 2.0;

const MINIMIZE_TOL: f64 = 1e-10;
const MINIMIZE_ITERS: usize = 10_000;

pub enum Target {
    Gaussian(AnisotropicGaussian),
    Blr(BlrPotential),
}

impl Target {
    pub fn build(t: &TargetArgs) -> Result<Self, CliError> {
        match t.target.unwrap_or(TargetKind::Gaussian) {
            TargetKind::Gaussian => {
                let m = require(t.m, "m")?;
                let big_m = require(t.big_m, "M")?;
                Ok(Target::Gaussian(gaussian_potential(&[m, big_m])?))
            }
            TargetKind::BlrSynth => {
                let mut data = synth_dataset(
                    t.data_seed.unwrap_or(0),
                    t.n_data.unwrap_or(SYNTH_ROWS),
                    t.dim.unwrap_or(SYNTH_DIM),
                    t.separation.unwrap_or(SYNTH_SEPARATION),
                )?;
                if let Some(v) = t.prior_variance {
                    data = data.with_prior_variance(v)?;
                }
                Ok(Target::Blr(blr_potential(data)?))
            }
            TargetKind::BlrIdx => {
                let images = require(t.mnist_images.as_ref(), "mnist-images")?;
                let labels = require(t.mnist_labels.as_ref(), "mnist-labels")?;
                let digits = require(t.digits.as_ref(), "digits")?;
                let data = load_idx(images, labels, digits, t.prior_variance.unwrap_or(IDX_PRIOR_VARIANCE))?;
                Ok(Target::Blr(blr_potential(data)?))
            }
        }
    }

    pub fn potential(&self) -> &dyn Potential {
        match self {
            Target::Gaussian(g) => g,
            Target::Blr(b) => b,
        }
    }

    pub fn blr(&self) -> Option<&BlrPotential> {
        match self {
            Target::Blr(b) => Some(b),
            Target::Gaussian(_) => None,
        }
    }

    /// The mode of the target: the origin for the Gaussian.
    pub fn minimizer(&self) -> Result<Vec<f64>, CliError> {
        match self {
            Target::Gaussian(g) => Ok(vec![0.0; g.dim()]),
            Target::Blr(b) => Ok(minimize(b, MINIMIZE_TOL, MINIMIZE_ITERS)?),
        }
    }

    /// The logistic-regression potential, or a usage error naming the
    /// gradient kind that needs it.
    pub fn require_blr(&self, grad: GradKind) -> Result<&BlrPotential, CliError> {
        self.blr().ok_or_else(|| {
            CliError::Usage(format!(
                "--grad {} needs a data-set target (blr-synth or blr-idx)",
                grad_tag(grad)
            ))
        })
    }
}

pub fn estimator_kind(g: GradKind) -> EstimatorKind {
    match g {
        GradKind::Full => EstimatorKind::Full,
        GradKind::Sg => EstimatorKind::Subsampled,
        GradKind::Vrsg => EstimatorKind::VarianceReduced,
    }
}

pub fn grad_tag(g: GradKind) -> &'static str {
    match g {
        GradKind::Full => "full",
        GradKind::Sg => "sg",
        GradKind::Vrsg => "vrsg",
    }
}

/// Parses `a,b,c` or `all` (the eight kinetic schemes).
pub fn parse_schemes(list: &str, allow_overdamped: bool) -> Result<Vec<SchemeId>, CliError> {
    if list.trim().eq_ignore_ascii_case("all") {
        return Ok(SchemeId::KINETIC.to_vec());
    }
    let mut out = Vec::new();
    for tag in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let id: SchemeId = tag.parse().map_err(|e: langevin_kit::Error| CliError::Usage(e.to_string()))?;
        if !allow_overdamped && !id.is_kinetic() {
            return Err(CliError::Usage(format!("{id} is overdamped; this command needs a kinetic scheme")));
        }
        if !out.contains(&id) {
            out.push(id);
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("--scheme is empty".into()));
    }
    Ok(out)
}
