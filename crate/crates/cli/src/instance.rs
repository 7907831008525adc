//! Turns an [`InstanceConfig`] into a solvable problem.

use deadcore::model::{validate_params, MatrixCoef, VectorCoef};
use deadcore::radial::{ExponentialSolution, RadialProfile};
use deadcore::{BoundaryData, DirichletProblem, Domain, Grid, OperatorKind, ProblemParams};

use crate::config::{BoundaryConfig, DomainShape, InstanceConfig, OperatorConfig};
use crate::error::{CliError, Result};

/// A validated problem plus what is known about it in closed form.
#[derive(Debug, Clone)]
pub struct Instance {
    pub problem: DirichletProblem,
    /// `κ` when `μ < γ + 1`.
    pub kappa: Option<f64>,
    /// The exact solution when the boundary data are the untruncated radial
    /// profile of a drift-free Laplacian instance.
    pub exact: Option<RadialProfile>,
}

impl Instance {
    pub fn grid(&self) -> &Grid {
        self.problem.params.grid()
    }
}

pub fn params(c: &InstanceConfig) -> ProblemParams {
    let op = match &c.operator {
        OperatorConfig::Laplacian => OperatorKind::Laplacian,
        OperatorConfig::PucciMinus => OperatorKind::PucciMinus,
        OperatorConfig::PucciPlus => OperatorKind::PucciPlus,
        OperatorConfig::TraceA { matrix } => OperatorKind::TraceA(MatrixCoef::Constant(*matrix)),
    };
    let mut p = ProblemParams::laplacian(c.dim, c.gamma, c.mu, c.lambda0)
        .with_operator(op, c.ellipticity[0], c.ellipticity[1])
        .with_drift(VectorCoef::Constant(c.drift));
    p.wide_frames = c.wide_frames;
    p
}

pub fn build(c: &InstanceConfig) -> Result<Instance> {
    let grid = Grid::centered(c.dim, c.center, c.half_width, c.n).map_err(|e| CliError::Invalid(e.to_string()))?;
    let p = params(c);
    let vp = validate_params(&p, &grid).map_err(|errs| CliError::Core(deadcore::Error::Params(errs)))?;
    let kappa = deadcore::kappa(c.gamma, c.mu).ok();
    let domain = match c.domain {
        DomainShape::Box => Domain::Box,
        DomainShape::Ball => Domain::Ball { center: c.center, radius: c.half_width },
    };
    let plain = matches!(c.operator, OperatorConfig::Laplacian) && c.drift == [0.0, 0.0];
    let (boundary, exact) = match c.boundary {
        BoundaryConfig::Constant { value } => (BoundaryData::constant(value), None),
        BoundaryConfig::ExactProfile { scale, r0 } => {
            let prof = RadialProfile::exact(c.dim, c.lambda0, c.gamma, c.mu, r0, c.center)?;
            let exact = (plain && scale == 1.0).then_some(prof);
            (BoundaryData::from_fn(move |x| scale * prof.eval(x)), exact)
        }
        BoundaryConfig::Exponential { direction } => {
            if direction >= c.dim {
                return Err(CliError::Invalid(format!("exponential direction {direction} exceeds dimension {}", c.dim)));
            }
            let e = ExponentialSolution::borderline(c.lambda0, c.gamma, direction);
            (BoundaryData::from_fn(move |x| e.eval(x)), None)
        }
    };
    Ok(Instance { problem: DirichletProblem::new(vp, domain, boundary), kappa, exact })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_gamma_is_a_config_error() {
        let c = InstanceConfig { gamma: -1.0, ..Default::default() };
        let err = build(&c).unwrap_err();
        assert_eq!(err.exit_code(), crate::error::EXIT_CONFIG);
    }

    #[test]
    fn exact_oracle_only_for_plain_profiles() {
        let c = InstanceConfig { n: 17, ..Default::default() };
        assert!(build(&c).unwrap().exact.is_some());
        let scaled = InstanceConfig { boundary: BoundaryConfig::ExactProfile { scale: 0.5, r0: 0.0 }, ..c.clone() };
        assert!(build(&scaled).unwrap().exact.is_none());
        let pucci = InstanceConfig { operator: OperatorConfig::PucciMinus, ..c };
        assert!(build(&pucci).unwrap().exact.is_none());
    }
}
