//! Sliding-window change-point detection with the trace statistic
//! `tr(S1^{-1} S2)` and removal of flagged samples.
//!
//! Time indices are zero-based positions in the input sequence.

use crate::error::{invalid, Error, Result};
use crate::model::{cholesky_checked, estimate_beta, sample_covariance};
use crate::spiketest::{check_alpha, TestReport};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Form of the composite ratio entering the null variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum H2Form {
    /// `c1 + c2 - c1 c2`
    #[default]
    Derived,
    /// `c1² + c2² - c1 c2`, kept for comparison only.
    Printed,
}

impl H2Form {
    pub fn eval(&self, c_den: f64, c_num: f64) -> f64 {
        match self {
            H2Form::Derived => c_den + c_num - c_den * c_num,
            H2Form::Printed => c_den * c_den + c_num * c_num - c_den * c_num,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowPlan {
    pub q11: usize,
    pub q12: usize,
    pub s: usize,
    pub alpha: f64,
    pub h2_form: H2Form,
}

impl WindowPlan {
    /// Group sizes `2p`, run length 20 and level 0.0005.
    pub fn default_for(p: usize) -> Self {
        WindowPlan {
            q11: 2 * p,
            q12: 2 * p,
            s: 20,
            alpha: 0.0005,
            h2_form: H2Form::Derived,
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.q11 <= p + 1 {
            return invalid(format!("q11 = {} must exceed p + 1 = {}", self.q11, p + 1));
        }
        if self.s < 2 {
            return invalid("s must be at least 2");
        }
        if self.q12 < self.s + 4 {
            return invalid(format!(
                "q12 = {} leaves fewer than four samples in group two after a run of s = {}",
                self.q12, self.s
            ));
        }
        check_alpha(self.alpha)
    }
}

/// `p / (1 - c)`: the centring of `tr(S1^{-1} S2)` when group one has ratio `c`.
pub fn trace_centering(p: usize, c: f64) -> f64 {
    p as f64 / (1.0 - c)
}

/// Standardised trace statistic for one window. Groups are p×q matrices of
/// observations; `q` is the field indicator.
pub fn window_statistic(
    group1: &DMatrix<f64>,
    group2: &DMatrix<f64>,
    q: u8,
    form: H2Form,
    alpha: f64,
) -> Result<TestReport> {
    let p = group1.nrows();
    let (q1, q2) = (group1.ncols(), group2.ncols());
    if group2.nrows() != p {
        return invalid("groups have different dimensions");
    }
    if q1 <= p + 1 {
        return invalid(format!("group one has {q1} samples, needs more than p + 1 = {}", p + 1));
    }
    if q2 < 4 {
        return invalid("group two needs at least four samples");
    }
    let s1 = sample_covariance(group1, true)?;
    let l = cholesky_checked(&s1)?;
    let mean2 = group2.column_mean();
    let centred = DMatrix::from_fn(p, q2, |i, j| group2[(i, j)] - mean2[i]);
    let solved = l
        .solve_lower_triangular(&centred)
        .ok_or(Error::Singular { ratio: 0.0 })?;
    let trace = solved.norm_squared() / (q2 - 1) as f64;

    // Centred covariances carry q - 1 degrees of freedom.
    let c_den = p as f64 / (q1 - 1) as f64;
    let c_num = p as f64 / (q2 - 1) as f64;
    let b_den = estimate_beta(group1, q)?;
    let b_num = estimate_beta(group2, q)?;
    let qf = q as f64;
    let h2 = form.eval(c_den, c_num);
    let d = trace_centering(p, c_den);
    let mu = qf * c_den / (1.0 - c_den).powi(2) + b_den * c_den / (1.0 - c_den);
    let nu = (qf + 1.0) * h2 / (1.0 - c_den).powi(4)
        + (b_num * c_num + b_den * c_den) / (1.0 - c_den).powi(2);
    if !(nu > 0.0) {
        return Err(Error::Domain(format!("non-positive variance {nu} in window statistic")));
    }
    Ok(TestReport::assemble(trace, d, 0.0, mu, nu, alpha, 0))
}

/// One evaluated window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    /// Time index of the newest sample in the window.
    pub end: usize,
    pub q1: usize,
    pub q2: usize,
    pub z: f64,
    pub rejected: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DetectionState {
    /// Time indices flagged as anomalous, increasing.
    pub anomalies: Vec<usize>,
    /// Samples excluded from later windows.
    pub removed: Vec<usize>,
    pub windows: Vec<WindowRecord>,
    pub change_point: Option<usize>,
}

fn gather(x: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), idx.len(), |i, j| x[(i, idx[j])])
}

/// Runs the point-by-point slide over `x` (p×T). A rejected window drops its
/// newest sample for good; the first run of `s` consecutive flagged time
/// indices marks the change point. `threshold` replaces the normal critical
/// value with a bound on `|z|`.
pub fn detect_change_point(
    x: &DMatrix<f64>,
    plan: &WindowPlan,
    q: u8,
    threshold: Option<f64>,
) -> Result<DetectionState> {
    let (p, t) = x.shape();
    plan.validate(p)?;
    if t < plan.q11 + plan.q12 + plan.s {
        return invalid(format!(
            "sequence length {t} is shorter than q11 + q12 + s = {}",
            plan.q11 + plan.q12 + plan.s
        ));
    }
    let mut state = DetectionState::default();
    let mut window: Vec<usize> = (0..plan.q11 + plan.q12).collect();
    let mut next = window.len();
    loop {
        let (g1, g2) = window.split_at(plan.q11);
        if g2.len() < 4 {
            break;
        }
        let r = window_statistic(&gather(x, g1), &gather(x, g2), q, plan.h2_form, plan.alpha)?;
        let rejected = match threshold {
            Some(c) => r.z_score.abs() > c,
            None => r.rejected(),
        };
        let end = *window.last().expect("window is non-empty");
        if let Some(prev) = state.windows.last() {
            debug_assert!(prev.q1 == g1.len() && prev.q2 >= g2.len());
        }
        state.windows.push(WindowRecord {
            end,
            q1: g1.len(),
            q2: g2.len(),
            z: r.z_score,
            rejected,
        });
        if rejected {
            window.pop();
            state.anomalies.push(end);
            state.removed.push(end);
            let k = state.anomalies.len();
            if k >= plan.s {
                let run = &state.anomalies[k - plan.s..];
                if run.windows(2).all(|w| w[1] == w[0] + 1) {
                    state.change_point = Some(run[0]);
                    break;
                }
            }
        }
        if next >= t {
            break;
        }
        window.remove(0);
        window.push(next);
        next += 1;
    }
    Ok(state)
}

/// Empirical 95% quantile of `|z|` over all windows of an anomaly-free
/// reference sequence, sliding without removal.
pub fn calibrate_threshold(x_ref: &DMatrix<f64>, plan: &WindowPlan, q: u8) -> Result<f64> {
    let (p, t) = x_ref.shape();
    plan.validate(p)?;
    let len = plan.q11 + plan.q12;
    if t < len + 99 {
        return invalid(format!(
            "reference sequence gives {} windows, at least 100 needed",
            (t + 1).saturating_sub(len)
        ));
    }
    let mut z = Vec::with_capacity(t - len + 1);
    for start in 0..=t - len {
        let g1 = x_ref.columns(start, plan.q11).into_owned();
        let g2 = x_ref.columns(start + plan.q11, plan.q12).into_owned();
        z.push(window_statistic(&g1, &g2, q, plan.h2_form, plan.alpha)?.z_score.abs());
    }
    z.sort_by(|a, b| a.total_cmp(b));
    let k = ((0.95 * z.len() as f64).ceil() as usize).clamp(1, z.len()) - 1;
    Ok(z[k])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Population;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn centering_arithmetic() {
        assert_eq!(trace_centering(50, 0.5), 100.0);
    }

    #[test]
    fn h2_forms() {
        assert!((H2Form::Derived.eval(0.5, 0.5) - 0.75).abs() < 1e-15);
        assert!((H2Form::Printed.eval(0.5, 0.5) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn scalar_window_is_variance_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g1 = Population::Gaussian.matrix(1, 30, &mut rng);
        let g2 = Population::Gaussian.matrix(1, 30, &mut rng);
        let r = window_statistic(&g1, &g2, 1, H2Form::Derived, 0.05).unwrap();
        let v1 = sample_covariance(&g1, true).unwrap()[(0, 0)];
        let v2 = sample_covariance(&g2, true).unwrap()[(0, 0)];
        assert!((r.statistic_raw - v2 / v1).abs() < 1e-12);
        assert!(r.z_score.is_finite());
    }

    #[test]
    fn singular_group_one() {
        let g1 = DMatrix::from_element(3, 10, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g2 = Population::Gaussian.matrix(3, 10, &mut rng);
        assert!(window_statistic(&g1, &g2, 1, H2Form::Derived, 0.05).is_err());
    }

    #[test]
    fn plan_checks() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Population::Gaussian.matrix(10, 100, &mut rng);
        let plan = WindowPlan { q11: 10, ..WindowPlan::default_for(10) };
        assert!(detect_change_point(&x, &plan, 1, None).is_err());
        let plan = WindowPlan { s: 10, ..WindowPlan::default_for(10) };
        assert!(detect_change_point(&x.columns(0, 45).into_owned(), &plan, 1, None).is_err());
        assert!(WindowPlan::default_for(10).validate(10).is_err());
    }

    #[test]
    fn variance_shift_is_found_and_windows_shrink() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = 10;
        let mut x = Population::Gaussian.matrix(p, 300, &mut rng);
        for j in 200..300 {
            for i in 0..p {
                x[(i, j)] *= 20f64.sqrt();
            }
        }
        let plan = WindowPlan { s: 10, ..WindowPlan::default_for(p) };
        let st = detect_change_point(&x, &plan, 1, None).unwrap();
        let cp = st.change_point.expect("change detected");
        assert!((cp as i64 - 200).abs() <= plan.s as i64);
        assert!(st.windows.windows(2).all(|w| w[0].q1 == w[1].q1 && w[1].q2 <= w[0].q2));
        assert_eq!(st.removed, st.anomalies);
    }

    #[test]
    fn unreachable_run_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let plan = WindowPlan { s: 150, q12: 160, ..WindowPlan::default_for(5) };
        let x = Population::Gaussian.matrix(5, 400, &mut rng);
        let st = detect_change_point(&x, &plan, 1, None).unwrap();
        assert!(st.change_point.is_none());
    }

    #[test]
    fn calibration_needs_windows() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = Population::Gaussian.matrix(5, 60, &mut rng);
        let plan = WindowPlan { s: 5, ..WindowPlan::default_for(5) };
        assert!(calibrate_threshold(&x, &plan, 1).is_err());
        let c = DMatrix::from_element(5, 200, 3.0);
        assert!(calibrate_threshold(&c, &plan, 1).is_err());
        let x = Population::Gaussian.matrix(5, 200, &mut rng);
        let thr = calibrate_threshold(&x, &plan, 1).unwrap();
        assert!(thr > 0.5 && thr < 10.0);
    }
}
