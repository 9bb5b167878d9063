use crate::error::Result;
use crate::solver::{Scheme, Status, StepControl};

/// A semi-discrete system advanced by the shared Heun driver.
pub(crate) trait Discretization {
    /// Quantities re-derived from the state before every stage (signal fields).
    type Aux: Clone;

    fn prepare(&self, x: &[f64]) -> Result<Self::Aux>;

    /// Largest step for which one forward stage keeps the state admissible.
    fn positivity_dt(&self, x: &[f64], aux: &Self::Aux, scheme: Scheme) -> f64;

    /// One forward stage `S(x)` of length `h`.
    fn stage(&self, x: &[f64], aux: &Self::Aux, h: f64, scheme: Scheme) -> Result<Vec<f64>>;

    fn admissible(&self, x: &[f64]) -> bool;

    fn relative_change(&self, old: &[f64], new: &[f64]) -> f64;

    /// Quantity compared against the blow-up threshold.
    fn peak(&self, x: &[f64]) -> f64;
}

#[derive(Debug, Clone)]
pub(crate) struct Sample<A> {
    pub t: f64,
    pub dt: f64,
    pub x: Vec<f64>,
    pub aux: A,
}

pub(crate) struct Cursor<A> {
    pub t: f64,
    pub x: Vec<f64>,
    pub aux: A,
    pub dt_last: f64,
    pub dt_next: f64,
    pub steps: u64,
    pub rejections: u64,
}

pub(crate) enum Advance {
    Accepted,
    /// No admissible step of at least `dt_min` exists.
    Stalled,
    Fault(String),
}

fn heun<D: Discretization>(
    disc: &D,
    x: &[f64],
    aux: &D::Aux,
    h: f64,
    scheme: Scheme,
) -> Result<Option<Vec<f64>>> {
    let x1 = disc.stage(x, aux, h, scheme)?;
    if !disc.admissible(&x1) {
        return Ok(None);
    }
    let aux1 = disc.prepare(&x1)?;
    let x2 = disc.stage(&x1, &aux1, h, scheme)?;
    let next: Vec<f64> = x.iter().zip(&x2).map(|(a, b)| 0.5 * (a + b)).collect();
    Ok(disc.admissible(&next).then_some(next))
}

/// Proposed size of the next step from the current state.
pub(crate) fn proposal<D: Discretization>(disc: &D, cur: &Cursor<D::Aux>, ctrl: &StepControl) -> f64 {
    let stable = ctrl.cfl_safety * disc.positivity_dt(&cur.x, &cur.aux, ctrl.scheme);
    cur.dt_next.min(stable).min(ctrl.dt_max)
}

/// Take one accepted step, never passing `t_target`.
pub(crate) fn advance<D: Discretization>(
    disc: &D,
    cur: &mut Cursor<D::Aux>,
    ctrl: &StepControl,
    t_target: f64,
) -> Advance {
    let mut h = proposal(disc, cur, ctrl);
    if h < ctrl.dt_min {
        return Advance::Stalled;
    }
    let remaining = t_target - cur.t;
    let mut clipped = false;
    if h >= remaining {
        h = remaining;
        clipped = true;
    }
    loop {
        let tried = match heun(disc, &cur.x, &cur.aux, h, ctrl.scheme) {
            Ok(r) => r,
            Err(e) => return Advance::Fault(e.to_string()),
        };
        let shrink = match tried {
            Some(next) => {
                let rc = disc.relative_change(&cur.x, &next);
                if rc <= 2.0 * ctrl.rel_change {
                    let aux = match disc.prepare(&next) {
                        Ok(a) => a,
                        Err(e) => return Advance::Fault(e.to_string()),
                    };
                    let growth = if rc > 0.0 { (0.9 * ctrl.rel_change / rc).min(2.0) } else { 2.0 };
                    let mut next_dt = h * growth;
                    if clipped {
                        next_dt = next_dt.max(cur.dt_next);
                    }
                    cur.t = if clipped { t_target } else { cur.t + h };
                    cur.x = next;
                    cur.aux = aux;
                    cur.dt_last = h;
                    cur.dt_next = next_dt.min(ctrl.dt_max);
                    cur.steps += 1;
                    return Advance::Accepted;
                }
                (0.9 * ctrl.rel_change / rc).clamp(0.1, 0.5)
            }
            None => 0.5,
        };
        cur.rejections += 1;
        h *= shrink;
        clipped = false;
        if h < ctrl.dt_min {
            return Advance::Stalled;
        }
    }
}

pub(crate) struct Integration<A> {
    pub samples: Vec<Sample<A>>,
    pub status: Status,
    pub steps: u64,
    pub rejections: u64,
}

/// Integrate from `t = 0` to `ctrl.t_end`, sampling every `ctrl.sample_interval`.
///
/// With `detect_blowup`, the run stops with [`Status::BlowUp`] once the peak
/// exceeds the threshold while the admissible step has collapsed below
/// `10·dt_min`.
pub(crate) fn integrate<D: Discretization>(
    disc: &D,
    x0: Vec<f64>,
    ctrl: &StepControl,
    detect_blowup: bool,
) -> Result<Integration<D::Aux>> {
    let aux0 = disc.prepare(&x0)?;
    let mut cur = Cursor {
        t: 0.0,
        x: x0,
        aux: aux0,
        dt_last: 0.0,
        dt_next: ctrl.dt_init,
        steps: 0,
        rejections: 0,
    };
    let snap = |cur: &Cursor<D::Aux>| Sample {
        t: cur.t,
        dt: cur.dt_last,
        x: cur.x.clone(),
        aux: cur.aux.clone(),
    };
    let mut samples = vec![snap(&cur)];
    let finish = |samples, status, cur: &Cursor<D::Aux>| Integration {
        samples,
        status,
        steps: cur.steps,
        rejections: cur.rejections,
    };
    if ctrl.t_end == 0.0 {
        return Ok(finish(samples, Status::Completed, &cur));
    }
    let mut k: u64 = 1;
    loop {
        let target = (k as f64 * ctrl.sample_interval).min(ctrl.t_end);
        if cur.steps >= ctrl.max_steps {
            samples.push(snap(&cur));
            let reason = format!("step budget of {} exhausted at t = {:e}", ctrl.max_steps, cur.t);
            return Ok(finish(samples, Status::Fault { reason }, &cur));
        }
        let over = detect_blowup && disc.peak(&cur.x) >= ctrl.linf_blowup_threshold;
        match advance(disc, &mut cur, ctrl, target) {
            Advance::Accepted => {}
            Advance::Stalled => {
                samples.push(snap(&cur));
                let status = if over {
                    Status::BlowUp { time: cur.t }
                } else {
                    Status::DtUnderflow
                };
                return Ok(finish(samples, status, &cur));
            }
            Advance::Fault(reason) => {
                samples.push(snap(&cur));
                return Ok(finish(samples, Status::Fault { reason }, &cur));
            }
        }
        if cur.t >= target {
            samples.push(snap(&cur));
            if cur.t >= ctrl.t_end {
                return Ok(finish(samples, Status::Completed, &cur));
            }
            k += 1;
        }
        if detect_blowup
            && disc.peak(&cur.x) >= ctrl.linf_blowup_threshold
            && proposal(disc, &cur, ctrl) < 10.0 * ctrl.dt_min
        {
            if samples.last().map(|s| s.t) != Some(cur.t) {
                samples.push(snap(&cur));
            }
            return Ok(finish(samples, Status::BlowUp { time: cur.t }, &cur));
        }
    }
}
