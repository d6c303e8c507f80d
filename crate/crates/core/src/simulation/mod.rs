//! Operator splitting driver.
//!
//! Pressure is solved at the start of every outer step, then saturation is
//! advanced by `C_n` explicit substeps with that velocity held fixed. The
//! multiscale variants either rebuild the basis at every step or reuse it
//! through the perturbation update until the conductivity has drifted by more
//! than `eta`.
//!
//! Several methods are advanced in lockstep: the first candidate sets the
//! clock (its CFL step) and is the reference for all error norms. A candidate
//! whose own velocity needs a smaller step subcycles within each substep.

mod cost;

pub use cost::{rcr, CostModel};

use std::time::Instant;

use rayon::prelude::*;

use crate::elliptic::{solve_cell_centered, BoundarySpec, DomainBoundary};
use crate::error::{Error, Result};
use crate::grid::{conservation_residual, CellField, DomainDecomposition, FaceField, Side};
use crate::metrics::{outlet_reached, pvi, relative_flux_error, relative_sat_error};
use crate::mpm::{EpsilonNorm, PerturbationState};
use crate::mrcm::{mrcm_solve, MrcmConfig, SolveCounts};
use crate::transport::{advance, cfl_timestep, FluidModel};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    FineReference,
    MrcmEveryStep,
    /// Reuse while the drift stays at or below `eta`; `eta = 0` rebuilds every step.
    Mpm2p { eta: f64 },
    Mpm2pNoUpdates,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::FineReference => "fine-reference",
            Method::MrcmEveryStep => "mrcm-every-step",
            Method::Mpm2p { .. } => "mpm2p",
            Method::Mpm2pNoUpdates => "mpm2p-no-updates",
        }
    }

    fn eta(&self) -> Option<f64> {
        match *self {
            Method::Mpm2p { eta } => Some(eta),
            Method::Mpm2pNoUpdates => Some(f64::INFINITY),
            _ => None,
        }
    }
}

/// How many transport substeps separate pressure updates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PressureStep {
    /// Fixed `C_n`, each substep at the CFL step.
    Substeps(usize),
    /// Fixed pressure interval, split into the fewest CFL-stable substeps.
    Interval(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StopRule {
    /// Total number of elliptic solves.
    Steps(usize),
    /// Reference pore volumes injected.
    Pvi(f64),
    /// Step at which the reference reaches the outlet.
    Breakthrough,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplittingConfig {
    pub pressure: PressureStep,
    pub stop: StopRule,
    /// Hard limit on elliptic solves whatever the stop rule.
    pub max_steps: usize,
    pub safety: f64,
    /// Transport step used when nothing flows.
    pub dt_cap: f64,
    pub breakthrough_threshold: f64,
    pub epsilon_norm: EpsilonNorm,
    /// Steps at which saturation snapshots are kept.
    pub snapshot_steps: Vec<usize>,
}

impl Default for SplittingConfig {
    fn default() -> Self {
        Self {
            pressure: PressureStep::Substeps(1),
            stop: StopRule::Breakthrough,
            max_steps: 100_000,
            safety: 0.9,
            dt_cap: 1.0,
            breakthrough_threshold: 0.05,
            epsilon_norm: EpsilonNorm::Relative,
            snapshot_steps: Vec::new(),
        }
    }
}

impl SplittingConfig {
    pub fn validate(&self) -> Result<()> {
        match self.pressure {
            PressureStep::Substeps(0) => return Err(Error::Config("C_n must be at least 1".into())),
            PressureStep::Interval(dt) if !(dt > 0.0) || !dt.is_finite() => {
                return Err(Error::Config(format!("pressure interval must be positive, got {dt}")))
            }
            _ => {}
        }
        match self.stop {
            StopRule::Steps(0) => return Err(Error::Config("at least one elliptic solve is needed".into())),
            StopRule::Pvi(t) if !(t > 0.0) => return Err(Error::Config(format!("final PVI must be positive, got {t}"))),
            _ => {}
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(Error::Config(format!("CFL safety must lie in (0, 1], got {}", self.safety)));
        }
        if !(self.dt_cap > 0.0) {
            return Err(Error::Config(format!("time step cap must be positive, got {}", self.dt_cap)));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be positive".into()));
        }
        Ok(())
    }
}

/// Everything except the pressure method.
#[derive(Clone, Debug)]
pub struct Problem {
    pub permeability: CellField,
    pub fluid: FluidModel,
    pub boundary: DomainBoundary,
    pub q: CellField,
    pub s0: CellField,
    /// Saturation entering through inflow faces.
    pub s_bar: f64,
    pub outlet: Side,
}

impl Problem {
    /// Oil-filled medium, water injected through inflow faces, outlet east.
    pub fn waterflood(permeability: CellField, fluid: FluidModel, boundary: DomainBoundary) -> Self {
        let grid = permeability.grid;
        Self {
            permeability,
            fluid,
            boundary,
            q: CellField::zeros(grid),
            s0: CellField::zeros(grid),
            s_bar: 1.0,
            outlet: Side::East,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Candidate {
    pub label: String,
    pub method: Method,
    pub decomposition: Option<DomainDecomposition>,
    pub mrcm: MrcmConfig,
}

impl Candidate {
    pub fn fine() -> Self {
        Self {
            label: "fine".into(),
            method: Method::FineReference,
            decomposition: None,
            mrcm: MrcmConfig::default(),
        }
    }

    pub fn multiscale(label: impl Into<String>, method: Method, dd: DomainDecomposition, mrcm: MrcmConfig) -> Self {
        Self {
            label: label.into(),
            method,
            decomposition: Some(dd),
            mrcm,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub pvi: f64,
    /// Transport step and substep count used to reach this step.
    pub dt_s: f64,
    pub substeps: usize,
    /// Drift from the conductivity of the stored basis, after this solve.
    pub epsilon: f64,
    /// Whether this solve computed a full basis (always for non-reusing methods).
    pub rebuild: bool,
    pub flux_err: f64,
    pub sat_err: f64,
    /// Cumulative local solves.
    pub counts: SolveCounts,
    pub repair_warning: bool,
    /// Largest cell-wise `|div u - q|` of the delivered velocity, relative.
    pub conservation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub s: CellField,
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub label: String,
    pub method: Method,
    pub steps: Vec<StepRecord>,
    /// Steps at which the basis was built, starting with step 0.
    pub events: Vec<usize>,
    pub breakthrough: Option<usize>,
    pub n_hat: usize,
    pub n_sub: usize,
    pub snapshots: Vec<Snapshot>,
    pub final_s: CellField,
    pub final_u: FaceField,
    /// Wall time of each elliptic solve in seconds (not part of the results proper).
    pub wall_seconds: Vec<f64>,
}

impl RunRecord {
    /// Elliptic solves.
    pub fn t_e(&self) -> usize {
        self.steps.len()
    }

    /// Basis builds including the initial one.
    pub fn rebuilds(&self) -> usize {
        self.events.len()
    }

    /// Basis builds after the initial one.
    pub fn updates(&self) -> usize {
        self.rebuilds().saturating_sub(1)
    }

    pub fn counts(&self) -> SolveCounts {
        self.steps.last().map(|s| s.counts).unwrap_or_default()
    }

    pub fn cost_model(&self) -> Result<CostModel> {
        CostModel::new(self.n_hat, self.n_sub, self.t_e(), self.rebuilds())
    }

    /// Local solves actually performed and those a rebuild at every step would need.
    pub fn exact_costs(&self) -> (usize, usize) {
        let c = self.counts();
        let every = (self.n_hat + 2 * self.n_sub) * self.t_e();
        (every, c.homogeneous + c.particular + c.downscale)
    }
}

struct Runner<'a> {
    cand: &'a Candidate,
    s: CellField,
    u: FaceField,
    time: f64,
    injected: f64,
    state: Option<PerturbationState>,
    epsilon: f64,
    counts: SolveCounts,
    record: RunRecord,
}

struct Solved {
    rebuild: bool,
    warning: bool,
    seconds: f64,
}

impl<'a> Runner<'a> {
    fn new(cand: &'a Candidate, problem: &Problem) -> Result<Self> {
        let grid = problem.permeability.grid;
        if cand.method != Method::FineReference && cand.decomposition.is_none() {
            return Err(Error::Config(format!("candidate {} needs a domain decomposition", cand.label)));
        }
        if let Some(eta) = cand.method.eta() {
            if !(eta >= 0.0) {
                return Err(Error::Config(format!("eta must be nonnegative, got {eta}")));
            }
        }
        Ok(Self {
            cand,
            s: problem.s0.clone(),
            u: FaceField::zeros(grid),
            time: 0.0,
            injected: 0.0,
            state: None,
            epsilon: 0.0,
            counts: SolveCounts::default(),
            record: RunRecord {
                label: cand.label.clone(),
                method: cand.method,
                steps: Vec::new(),
                events: Vec::new(),
                breakthrough: None,
                n_hat: 0,
                n_sub: cand.decomposition.as_ref().map_or(0, |d| d.num_subdomains()),
                snapshots: Vec::new(),
                final_s: problem.s0.clone(),
                final_u: FaceField::zeros(grid),
                wall_seconds: Vec::new(),
            },
        })
    }

    fn pressure(&mut self, problem: &Problem, spec: &BoundarySpec, norm: EpsilonNorm, step: usize) -> Result<Solved> {
        let start = Instant::now();
        let kappa = problem.fluid.conductivity(&self.s, &problem.permeability);
        let method = self.cand.method;
        let (rebuild, warning) = match method {
            Method::FineReference => {
                self.u = solve_cell_centered(&kappa, &problem.q, spec, None)?.u;
                (true, false)
            }
            _ => {
                let dd = self.cand.decomposition.as_ref().expect("checked in Runner::new");
                let eta = method.eta();
                let rebuild = match eta {
                    None => true,
                    Some(eta) => self.state.is_none() || eta == 0.0 || self.epsilon > eta,
                };
                let sol = if rebuild {
                    let (sol, basis) = mrcm_solve(&kappa, dd, &self.cand.mrcm, &problem.q, &problem.boundary)?;
                    self.record.n_hat = basis.num_homogeneous();
                    if let Some(eta) = eta {
                        self.state = Some(PerturbationState::new(basis, &sol, eta, norm));
                    }
                    sol
                } else {
                    self.state.as_ref().expect("basis stored").update(&kappa, &problem.q, &problem.boundary)?
                };
                self.epsilon = self.state.as_ref().map_or(0.0, |st| st.epsilon(&kappa));
                self.counts += sol.counts;
                self.u = sol.fine.u;
                (rebuild, sol.report.warning())
            }
        };
        if rebuild && method != Method::FineReference {
            self.record.events.push(step);
        }
        Ok(Solved {
            rebuild,
            warning,
            seconds: start.elapsed().as_secs_f64(),
        })
    }

    /// `substeps` transport steps of `dt`, subcycled if this velocity needs it.
    fn transport(&mut self, problem: &Problem, dt: f64, substeps: usize, safety: f64) -> Result<()> {
        let own = cfl_timestep(&self.u, &problem.fluid, safety, f64::INFINITY);
        let k = if own >= dt { 1 } else { (dt / own).ceil() as usize };
        let b = advance(&mut self.s, &self.u, dt / k as f64, substeps * k, &problem.fluid, problem.s_bar)?;
        self.injected += b.total_in;
        self.time += dt * substeps as f64;
        Ok(())
    }
}

/// Advance all candidates in lockstep; the first one is the clock and the
/// error reference. Returns one record per candidate.
pub fn run_ensemble(problem: &Problem, candidates: &[Candidate], config: &SplittingConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    if candidates.is_empty() {
        return Err(Error::Config("no methods to run".into()));
    }
    let grid = problem.permeability.grid;
    for (name, g) in [("saturation", problem.s0.grid), ("source", problem.q.grid), ("boundary", problem.boundary.grid)] {
        if g != grid {
            return Err(Error::Config(format!("{name} grid differs from the permeability grid")));
        }
    }
    if !(0.0..=1.0).contains(&problem.s_bar) || problem.s0.values.iter().any(|s| !(0.0..=1.0).contains(s)) {
        return Err(Error::Config("saturations must lie in [0, 1]".into()));
    }
    let spec = problem.boundary.to_spec();
    let mut runners = candidates
        .iter()
        .map(|c| Runner::new(c, problem))
        .collect::<Result<Vec<_>>>()?;

    let mut step = 0;
    let (mut dt_s, mut substeps) = (0.0, 0);
    loop {
        let solved = runners
            .par_iter_mut()
            .map(|r| r.pressure(problem, &spec, config.epsilon_norm, step))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.at_step(step))?;

        let (u_ref, s_ref) = (runners[0].u.clone(), runners[0].s.clone());
        for (r, sv) in runners.iter_mut().zip(solved) {
            r.record.steps.push(StepRecord {
                step,
                time: r.time,
                pvi: pvi(r.injected, grid.lx, grid.ly),
                dt_s,
                substeps,
                epsilon: r.epsilon,
                rebuild: sv.rebuild,
                flux_err: relative_flux_error(&r.u, &u_ref),
                sat_err: relative_sat_error(&r.s, &s_ref),
                counts: r.counts,
                repair_warning: sv.warning,
                conservation: conservation_residual(&r.u, &problem.q),
            });
            r.record.wall_seconds.push(sv.seconds);
            if r.record.breakthrough.is_none() && outlet_reached(&r.s, problem.outlet, config.breakthrough_threshold) {
                r.record.breakthrough = Some(step);
            }
            if config.snapshot_steps.contains(&step) {
                r.record.snapshots.push(Snapshot { step, s: r.s.clone() });
            }
        }

        let clock = &runners[0];
        let done = match config.stop {
            StopRule::Steps(t_e) => step + 1 >= t_e,
            StopRule::Pvi(t) => pvi(clock.injected, grid.lx, grid.ly) >= t,
            StopRule::Breakthrough => clock.record.breakthrough.is_some(),
        };
        if done || step + 1 >= config.max_steps {
            break;
        }

        let cfl = cfl_timestep(&clock.u, &problem.fluid, config.safety, config.dt_cap);
        (dt_s, substeps) = match config.pressure {
            PressureStep::Substeps(c) => (cfl, c),
            PressureStep::Interval(dt_p) => {
                let c = (dt_p / cfl).ceil().max(1.0) as usize;
                (dt_p / c as f64, c)
            }
        };
        step += 1;
        runners
            .par_iter_mut()
            .try_for_each(|r| r.transport(problem, dt_s, substeps, config.safety))
            .map_err(|e| e.at_step(step))?;
    }

    Ok(runners
        .into_iter()
        .map(|mut r| {
            r.record.final_s = r.s;
            r.record.final_u = r.u;
            r.record
        })
        .collect())
}

/// Run one method against a fine reference on the reference clock.
pub fn run(problem: &Problem, candidate: &Candidate, config: &SplittingConfig) -> Result<RunRecord> {
    if candidate.method == Method::FineReference {
        return Ok(run_ensemble(problem, std::slice::from_ref(candidate), config)?.remove(0));
    }
    Ok(run_ensemble(problem, &[Candidate::fine(), candidate.clone()], config)?.remove(1))
}
