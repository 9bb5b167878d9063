use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::radial::{laplacian, shifted_laplacian, RadialGrid};
use crate::solver::driver::{self, Advance, Cursor, Discretization};
use crate::solver::rhs::{advective_velocity, face_fluxes, reaction, signals, FluxHook};
use crate::solver::{Scheme, Status, StepControl};

#[derive(Debug, Clone)]
pub(crate) struct Signals {
    pub v: Vec<f64>,
    pub w: Vec<f64>,
}

pub(crate) struct Primal<'a> {
    pub grid: &'a RadialGrid,
    pub params: &'a ModelParams,
    pub hook: FluxHook,
}

impl Primal<'_> {
    fn explicit_part(&self, u: &[f64], sig: &Signals, diffusion: bool) -> Vec<f64> {
        let vel = advective_velocity(self.grid, self.params, &sig.v, &sig.w);
        let flux = face_fluxes(self.grid, u, &vel);
        let outer_sign = match self.hook {
            FluxHook::Exact => 1.0,
            FluxHook::FlipInnerSide => -1.0,
        };
        let vol = self.grid.volumes();
        let re = reaction(self.params, u);
        let lap = if diffusion {
            laplacian(self.grid, u)
        } else {
            vec![0.0; u.len()]
        };
        (0..u.len())
            .map(|i| (flux[i] - outer_sign * flux[i + 1]) / vol[i] + re[i] + lap[i])
            .collect()
    }
}

impl Discretization for Primal<'_> {
    type Aux = Signals;

    fn prepare(&self, u: &[f64]) -> Result<Signals> {
        let (v, w) = signals(self.grid, self.params, u)?;
        Ok(Signals { v, w })
    }

    fn positivity_dt(&self, u: &[f64], sig: &Signals, scheme: Scheme) -> f64 {
        let vel = advective_velocity(self.grid, self.params, &sig.v, &sig.w);
        let area = self.grid.face_areas();
        let cond = self.grid.conductance();
        let vol = self.grid.volumes();
        let p = self.params;
        let mut rate: f64 = 0.0;
        for i in 0..u.len() {
            let out_adv = area[i + 1] * vel[i + 1].max(0.0) + area[i] * (-vel[i]).max(0.0);
            let out_diff = match scheme {
                Scheme::Heun => cond[i] + cond[i + 1],
                Scheme::ImexHeun => 0.0,
            };
            let r = (2.0 * out_adv + out_diff) / vol[i]
                + (-p.lambda).max(0.0)
                + p.mu * u[i].max(0.0).powf(p.k - 1.0);
            rate = rate.max(r);
        }
        if rate > 0.0 {
            1.0 / rate
        } else {
            f64::INFINITY
        }
    }

    fn stage(&self, u: &[f64], sig: &Signals, h: f64, scheme: Scheme) -> Result<Vec<f64>> {
        match scheme {
            Scheme::Heun => {
                let d = self.explicit_part(u, sig, true);
                Ok(u.iter().zip(&d).map(|(a, b)| a + h * b).collect())
            }
            Scheme::ImexHeun => {
                let d = self.explicit_part(u, sig, false);
                let b: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + h * b).collect();
                shifted_laplacian(self.grid, 1.0, h).solve(&b)
            }
        }
    }

    fn admissible(&self, u: &[f64]) -> bool {
        u.iter().all(|x| x.is_finite() && *x >= 0.0)
    }

    fn relative_change(&self, old: &[f64], new: &[f64]) -> f64 {
        let floor = 1e-3 * self.peak(old);
        old.iter()
            .zip(new)
            .map(|(a, b)| (b - a).abs() / (a.abs() + floor))
            .fold(0.0, f64::max)
    }

    fn peak(&self, u: &[f64]) -> f64 {
        u.iter().fold(0.0, |m: f64, x| m.max(*x))
    }
}

/// Mutable state of a primal run.
#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    /// Size of the last accepted step (0 before the first).
    pub dt: f64,
    pub dt_next: f64,
    pub step_index: u64,
    pub rejections: u64,
    pub status: Status,
}

impl SimState {
    pub fn new(grid: &RadialGrid, params: &ModelParams, u0: Vec<f64>, ctrl: &StepControl) -> Result<Self> {
        check_initial(grid, &u0)?;
        let (v, w) = signals(grid, params, &u0)?;
        Ok(SimState {
            t: 0.0,
            u: u0,
            v,
            w,
            dt: 0.0,
            dt_next: ctrl.dt_init,
            step_index: 0,
            rejections: 0,
            status: Status::Running,
        })
    }
}

fn check_initial(grid: &RadialGrid, u0: &[f64]) -> Result<()> {
    if u0.len() != grid.cells() {
        return Err(Error::arg(
            "u0",
            format!("length {} does not match {} cells", u0.len(), grid.cells()),
        ));
    }
    if let Some(x) = u0.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::arg("u0", format!("must be finite and nonnegative, found {x}")));
    }
    Ok(())
}

/// Advance `state` by one accepted step towards `ctrl.t_end`.
///
/// On a step collapse the status becomes `BlowUp` (peak above threshold) or
/// `DtUnderflow`; a state that is no longer `Running` is left untouched.
pub fn step(grid: &RadialGrid, params: &ModelParams, state: &mut SimState, ctrl: &StepControl) -> Result<()> {
    if state.status != Status::Running {
        return Ok(());
    }
    let disc = Primal {
        grid,
        params,
        hook: FluxHook::Exact,
    };
    let mut cur = Cursor {
        t: state.t,
        x: std::mem::take(&mut state.u),
        aux: Signals {
            v: std::mem::take(&mut state.v),
            w: std::mem::take(&mut state.w),
        },
        dt_last: state.dt,
        dt_next: state.dt_next,
        steps: state.step_index,
        rejections: state.rejections,
    };
    let over = disc.peak(&cur.x) >= ctrl.linf_blowup_threshold;
    let outcome = driver::advance(&disc, &mut cur, ctrl, ctrl.t_end);
    state.t = cur.t;
    state.u = cur.x;
    state.v = cur.aux.v;
    state.w = cur.aux.w;
    state.dt = cur.dt_last;
    state.dt_next = cur.dt_next;
    state.step_index = cur.steps;
    state.rejections = cur.rejections;
    match outcome {
        Advance::Accepted => {
            if state.t >= ctrl.t_end {
                state.status = Status::Completed;
            }
        }
        Advance::Stalled => {
            state.status = if over {
                Status::BlowUp { time: state.t }
            } else {
                Status::DtUnderflow
            };
        }
        Advance::Fault(reason) => state.status = Status::Fault { reason },
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub dt: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<Snapshot>,
    pub status: Status,
    pub steps: u64,
    pub rejections: u64,
}

impl Trajectory {
    pub fn final_time(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }
}

/// Integrate from `u0` until `ctrl.t_end` or blow-up.
pub fn run(grid: &RadialGrid, params: &ModelParams, u0: Vec<f64>, ctrl: &StepControl) -> Result<Trajectory> {
    run_with_hook(grid, params, u0, ctrl, FluxHook::Exact)
}

#[doc(hidden)]
pub fn run_with_hook(
    grid: &RadialGrid,
    params: &ModelParams,
    u0: Vec<f64>,
    ctrl: &StepControl,
    hook: FluxHook,
) -> Result<Trajectory> {
    ctrl.validate()?;
    check_initial(grid, &u0)?;
    let disc = Primal { grid, params, hook };
    let out = driver::integrate(&disc, u0, ctrl, true)?;
    Ok(Trajectory {
        samples: out
            .samples
            .into_iter()
            .map(|s| Snapshot {
                t: s.t,
                dt: s.dt,
                u: s.x,
                v: s.aux.v,
                w: s.aux.w,
            })
            .collect(),
        status: out.status,
        steps: out.steps,
        rejections: out.rejections,
    })
}
