//! Central-difference gradient checking against the hand-derived backward
//! passes. Runs in 64-bit shadow mode; 32-bit finite differences would drown
//! in rounding noise at the step sizes involved.

use crate::params::ParamStore;
use crate::Result;

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst_param: String,
    pub worst_index: usize,
    pub checked: usize,
}

/// Compares the analytic gradients already accumulated in `ps` against
/// central differences of `loss` for every parameter value.
///
/// Relative error per component is `|a - n| / max(|a|, |n|, floor)`; the
/// floor makes near-zero gradients compare in absolute terms. `floor = 1e-3`
/// is the conventional choice for these checks.
pub fn grad_check<F>(
    ps: &mut ParamStore<f64>,
    mut loss: F,
    h: f64,
    floor: f64,
) -> Result<GradCheckReport>
where
    F: FnMut(&ParamStore<f64>) -> Result<f64>,
{
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_param: String::new(),
        worst_index: 0,
        checked: 0,
    };
    for ei in 0..ps.n_entries() {
        let len = ps.entry_at(ei).value.len();
        for j in 0..len {
            let orig = ps.entry_at(ei).value[j];
            ps.entry_at_mut(ei).value[j] = orig + h;
            let lp = loss(ps)?;
            ps.entry_at_mut(ei).value[j] = orig - h;
            let lm = loss(ps)?;
            ps.entry_at_mut(ei).value[j] = orig;

            let numeric = (lp - lm) / (2.0 * h);
            let analytic = ps.entry_at(ei).grad[j];
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor);
            report.checked += 1;
            if rel > report.max_rel_err {
                report.max_rel_err = rel;
                report.worst_param = ps.entry_at(ei).name.clone();
                report.worst_index = j;
            }
        }
    }
    Ok(report)
}
