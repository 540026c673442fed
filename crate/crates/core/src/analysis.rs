use crate::chain::{build_transition_matrix_with, Kernel, StateSpace, SystemState, TransitionMatrix};
use crate::error::Result;
use crate::metrics::MetricsReport;
use crate::paoii::{paoii_pmf_with, PaoiiPmf, TaggedChain};
use crate::params::SystemParams;
use crate::stationary::{solve_stationary_with, SolverOptions, StationaryDistribution};

/// Solved steady state of one configuration: transition matrix, stationary
/// distribution and metrics. The PAoII distribution is computed on demand.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub params: SystemParams,
    pub space: StateSpace,
    pub kernel: Kernel,
    pub matrix: TransitionMatrix,
    pub stationary: StationaryDistribution,
    pub metrics: MetricsReport,
}

impl Analysis {
    pub fn solve(params: &SystemParams) -> Result<Self> {
        Self::solve_with(params, &SolverOptions::default())
    }

    pub fn solve_with(params: &SystemParams, opts: &SolverOptions) -> Result<Self> {
        params.validate()?;
        let space = StateSpace::new(params.n_sensors);
        let kernel = Kernel::new(params);
        let matrix = build_transition_matrix_with(&space, &kernel);
        let n = params.n_sensors;
        let stationary = if params.lambda == 0.0 {
            // reducible: every node drains to idle and stays there
            let idle = space.index(SystemState::new(0, 0, 0));
            StationaryDistribution::point_mass(space.len(), idle, &matrix)
        } else if params.beta == 1.0 && n >= 2 {
            // two backoff nodes always collide, so all nodes end up collided
            let deadlock = space.index(SystemState::new(0, n, 0));
            StationaryDistribution::point_mass(space.len(), deadlock, &matrix)
        } else {
            solve_stationary_with(&matrix, opts)?
        };
        let metrics = MetricsReport::compute(&stationary, &space, &kernel);
        Ok(Self { params: *params, space, kernel, matrix, stationary, metrics })
    }

    pub fn tagged_chain(&self) -> TaggedChain {
        TaggedChain::new(&self.space, &self.kernel)
    }

    pub fn paoii_pmf(&self, t_max: usize, tail_tol: f64) -> Result<PaoiiPmf> {
        let chain = self.tagged_chain();
        paoii_pmf_with(&self.stationary, &self.space, &chain, &self.params, t_max, tail_tol)
    }
}
