//! Asymptotic mean and variance of the partial linear spectral statistic.

use crate::error::{domain, invalid, Error, Result};
use crate::model::{MomentProfile, SpectrumH};
use crate::quad::gauss_legendre;
use crate::rmt::{wachter_edges, FisherTransform, TransformNode};
use crate::spectral::SpectralFn;
use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// How the mean and variance are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CltMethod {
    ClosedForm,
    ContourLowRank,
    ContourGeneral,
}

impl std::str::FromStr for CltMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed" | "closed_form" => Ok(CltMethod::ClosedForm),
            "contour" | "lowrank" | "contour_lowrank" => Ok(CltMethod::ContourLowRank),
            "general" | "contour_general" => Ok(CltMethod::ContourGeneral),
            other => invalid(format!(
                "unknown method '{other}' (expected closed, contour or general)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub mu_error: f64,
    pub nu_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanVar {
    pub mu: f64,
    pub nu: f64,
    pub method: CltMethod,
    pub diagnostics: Diagnostics,
}

fn checked(mu: f64, nu: f64, method: CltMethod, diagnostics: Diagnostics) -> Result<MeanVar> {
    if !mu.is_finite() || !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::Domain(format!(
            "invalid limiting moments mu = {mu}, nu = {nu}"
        )));
    }
    Ok(MeanVar {
        mu,
        nu,
        method,
        diagnostics,
    })
}

fn check_c2(c1: f64, c2: f64) -> Result<()> {
    if !(c1 > 0.0) || !(0.0..1.0).contains(&c2) {
        return invalid(format!("ratios c1 = {c1}, c2 = {c2} outside c1 > 0, 0 <= c2 < 1"));
    }
    Ok(())
}

/// Closed form for `f(x) = x` and `H = δ1`.
pub fn meanvar_x_delta1(c1: f64, c2: f64, m: &MomentProfile) -> Result<MeanVar> {
    check_c2(c1, c2)?;
    let h2 = c1 + c2 - c1 * c2;
    let mu = m.q() * c2 / (1.0 - c2).powi(2) + m.beta_y * c2 / (1.0 - c2);
    let nu = (m.q() + 1.0) * h2 / (1.0 - c2).powi(4)
        + (m.beta_x * c1 + m.beta_y * c2) / (1.0 - c2).powi(2);
    checked(mu, nu, CltMethod::ClosedForm, Diagnostics::default())
}

/// Closed form for `f(x) = log x` and `H = δ1`.
pub fn meanvar_log_delta1(c1: f64, c2: f64, m: &MomentProfile) -> Result<MeanVar> {
    check_c2(c1, c2)?;
    let h2 = c1 + c2 - c1 * c2;
    if h2 >= 1.0 {
        return domain("log statistic needs h^2 < 1 (c1 < 1)");
    }
    let mu = 0.5 * m.q() * ((1.0 - h2) / (1.0 - c2).powi(2)).ln()
        - 0.5 * (m.beta_x * c1 - m.beta_y * c2);
    let nu = -(m.q() + 1.0) * (1.0 - h2).ln() + (m.beta_x * c1 + m.beta_y * c2);
    checked(mu, nu, CltMethod::ClosedForm, Diagnostics::default())
}

/// Constants of the modified Wilks statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionConstants {
    pub h: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

pub fn regression_constants(c1: f64, c2: f64) -> Result<RegressionConstants> {
    if !(c1 > 0.0) || !(c2 > 0.0 && c2 < 1.0) {
        return invalid(format!("ratios c1 = {c1}, c2 = {c2} outside c1 > 0, 0 < c2 < 1"));
    }
    let h = (c1 + c2 - c1 * c2).sqrt();
    let (a, b) = wachter_edges(c1, c2);
    let u = (1.0 + c2 * b / c1).sqrt();
    let v = (1.0 + c2 * a / c1).sqrt();
    Ok(RegressionConstants {
        h,
        a,
        b,
        c: 0.5 * (u + v),
        d: 0.5 * (u - v),
    })
}

/// Mean and variance of `-log Λ*` after removing the spiked terms.
pub fn meanvar_regression(c1: f64, c2: f64) -> Result<MeanVar> {
    let k = regression_constants(c1, c2)?;
    let (c, d, h) = (k.c, k.d, k.h);
    let mu = 0.5 * ((c * c - d * d) * h * h / (c * h - c2 * d).powi(2)).ln();
    let nu = 2.0 * (c * c / (c * c - d * d)).ln();
    checked(mu, nu, CltMethod::ClosedForm, Diagnostics::default())
}

/// Settings for the unit-circle integrals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowRankOptions {
    /// Radii approaching one from above, used for the extrapolated limit.
    pub r_sequence: Vec<f64>,
    /// Trapezoid nodes on the unit circle (rounded up to a power of two).
    pub nodes: usize,
}

impl Default for LowRankOptions {
    fn default() -> Self {
        LowRankOptions {
            r_sequence: vec![1.02, 1.01, 1.005, 1.0025, 1.00125],
            nodes: 1 << 16,
        }
    }
}

/// Polynomial extrapolation to `x = 0` through `(x_i, y_i)` (Neville).
/// Returns the full-order value and the change from dropping the first point.
fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let neville = |xs: &[f64], ys: &[f64]| -> f64 {
        let mut t = ys.to_vec();
        let n = xs.len();
        for k in 1..n {
            for i in 0..n - k {
                t[i] = (xs[i + k] * t[i] - xs[i] * t[i + 1]) / (xs[i + k] - xs[i]);
            }
        }
        t[0]
    };
    let full = neville(xs, ys);
    if xs.len() < 2 {
        return (full, f64::INFINITY);
    }
    let reduced = neville(&xs[1..], &ys[1..]);
    (full, (full - reduced).abs())
}

/// Unit-circle integrals for `H = δ1`, with the `r ↓ 1` limits taken by
/// polynomial extrapolation in `r - 1`.
pub fn meanvar_contour_lowrank(
    f: &SpectralFn,
    c1: f64,
    c2: f64,
    m: &MomentProfile,
    opts: &LowRankOptions,
) -> Result<MeanVar> {
    check_c2(c1, c2)?;
    if opts.r_sequence.is_empty() || opts.r_sequence.iter().any(|r| !(*r > 1.0)) {
        return invalid("radii must exceed one");
    }
    let n = opts.nodes.max(64).next_power_of_two();
    let h = (c1 + c2 - c1 * c2).sqrt();
    let k = (1.0 - c2).powi(2);
    let (a, _) = wachter_edges(c1, c2);
    if let Some(s) = f.singular_point() {
        if a <= s {
            return domain(format!("{f} is not analytic on the support"));
        }
    }
    let dtheta = 2.0 * PI / n as f64;
    let xi: Vec<C64> = (0..n).map(|j| C64::from_polar(1.0, dtheta * j as f64)).collect();
    let g: Vec<f64> = xi
        .iter()
        .map(|x| f.eval((1.0 + h * h + 2.0 * h * x.re) / k))
        .collect();
    if g.iter().any(|v| !v.is_finite()) {
        return domain(format!("{f} is not finite on the support"));
    }
    let i = C64::new(0.0, 1.0);
    // ∮ g(ξ) k(ξ) dξ with dξ = i ξ dθ.
    let circle = |kern: &dyn Fn(C64) -> C64| -> C64 {
        xi.iter()
            .zip(&g)
            .map(|(&x, &gv)| gv * kern(x) * i * x)
            .sum::<C64>()
            * dtheta
    };
    let s = c2 / h;
    let rs = c2.sqrt() / h;

    let xs: Vec<f64> = opts.r_sequence.iter().map(|r| r - 1.0).collect();
    let mut mu_q_r = Vec::new();
    for &r in &opts.r_sequence {
        let v = circle(&|x| 1.0 / (x - 1.0 / r) + 1.0 / (x + 1.0 / r) - 2.0 / (x + s));
        mu_q_r.push((v / (4.0 * PI * i)).re);
    }
    let (mu_q, mu_q_err) = extrapolate_to_zero(&xs, &mu_q_r);

    let bx = circle(&|x| 1.0 / (x + s).powi(3)) * (c1 * k / (2.0 * PI * i * h * h));
    let by = circle(&|x| {
        (x * x - c2 / (h * h)) / (x + s).powi(2) * (1.0 / (x - rs) + 1.0 / (x + rs) - 2.0 / (x + s))
    }) * ((1.0 - c2) / (4.0 * PI * i));
    let mu = m.q() * mu_q + m.beta_x * bx.re + m.beta_y * by.re;

    // Double integral: ξ_j - r ξ_l = ξ_l (e^{iθ_{j-l}} - r), so the tensor sum
    // is a circular convolution with κ(d) = e^{iθ_d} / (e^{iθ_d} - r)².
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut gh: Vec<C64> = g.iter().map(|&v| C64::new(v, 0.0)).collect();
    fwd.process(&mut gh);
    let mut nu_q_r = Vec::new();
    for &r in &opts.r_sequence {
        let mut kern: Vec<C64> = xi.iter().map(|&x| x / (x - r).powi(2)).collect();
        fwd.process(&mut kern);
        let mut conv: Vec<C64> = kern.iter().zip(&gh).map(|(a, b)| a * b).collect();
        inv.process(&mut conv);
        let sum: C64 = conv
            .iter()
            .zip(&g)
            .map(|(cv, &gv)| cv * gv / n as f64)
            .sum();
        let double = -sum * dtheta * dtheta;
        nu_q_r.push((-(m.q() + 1.0) / (4.0 * PI * PI) * double).re);
    }
    let (nu_q, nu_q_err) = extrapolate_to_zero(&xs, &nu_q_r);
    let single = circle(&|x| 1.0 / (x + s).powi(2));
    let nu_b = -((m.beta_x * c1 + m.beta_y * c2) * k / (4.0 * PI * PI * h * h)) * (single * single).re;
    let nu = nu_q + nu_b;
    checked(
        mu,
        nu,
        CltMethod::ContourLowRank,
        Diagnostics {
            mu_error: m.q() * mu_q_err,
            nu_error: nu_q_err,
        },
    )
}

/// Settings for the general-spectrum contour integrals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourOptions {
    /// Gauss–Legendre order per panel.
    pub order: usize,
    /// Largest panel length as a fraction of the support width.
    pub panel_fraction: f64,
    /// Half-height of the outer rectangle as a fraction of the support width.
    pub outer_margin: f64,
    /// Half-height of the inner rectangle as a fraction of the support width.
    pub inner_margin: f64,
}

impl Default for ContourOptions {
    fn default() -> Self {
        ContourOptions {
            order: 16,
            panel_fraction: 0.02,
            outer_margin: 0.6,
            inner_margin: 0.2,
        }
    }
}

/// Chevron-shaped contour: it crosses the real axis at `left` and `right`,
/// and its left edges slant outwards by `slant` per unit of height.
#[derive(Debug, Clone, Copy)]
struct Chevron {
    left: f64,
    right: f64,
    half_height: f64,
    slant: f64,
}

impl Chevron {
    /// Counter-clockwise vertices, closed.
    fn vertices(&self) -> [C64; 6] {
        let h = self.half_height;
        let corner = self.left - self.slant * h;
        [
            C64::new(self.left, 0.0),
            C64::new(corner, -h),
            C64::new(self.right, -h),
            C64::new(self.right, h),
            C64::new(corner, h),
            C64::new(self.left, 0.0),
        ]
    }

    fn distance(&self, z: C64) -> f64 {
        self.vertices()
            .windows(2)
            .map(|e| segment_distance(z, e[0], e[1]))
            .fold(f64::INFINITY, f64::min)
    }
}

fn segment_distance(z: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let t = ((z - a).re * d.re + (z - a).im * d.im) / d.norm_sqr();
    (z - (a + d * t.clamp(0.0, 1.0))).norm()
}

/// Quadrature nodes `(z, dz-weight)` on a contour. Panels are capped at
/// `max_len` and at half the distance from their centre to the nearest
/// hazard (support edge, singularity, or the companion contour).
fn contour_nodes(
    shape: Chevron,
    order: usize,
    max_len: f64,
    hazard: &dyn Fn(C64) -> f64,
) -> Vec<(C64, C64)> {
    let (gx, gw) = gauss_legendre(order);
    let mut out = Vec::new();
    for side in shape.vertices().windows(2) {
        let mut stack = vec![(side[0], side[1])];
        let mut panels = Vec::new();
        while let Some((a, b)) = stack.pop() {
            let len = (b - a).norm();
            let centre = 0.5 * (a + b);
            if len > max_len || len > 0.5 * hazard(centre) && len > 1e-9 * max_len {
                stack.push((centre, b));
                stack.push((a, centre));
            } else {
                panels.push((a, b));
            }
        }
        for (a, b) in panels {
            let half = 0.5 * (b - a);
            for (x, w) in gx.iter().zip(&gw) {
                out.push((0.5 * (a + b) + half * *x, half * *w));
            }
        }
    }
    out
}

struct ContourSums {
    mu: f64,
    nu: f64,
}

fn general_sums(
    f: &SpectralFn,
    ft: &FisherTransform,
    m: &MomentProfile,
    outer: &[(C64, C64)],
    inner: &[(C64, C64)],
) -> Result<ContourSums> {
    let c1 = ft.c1();
    let c2 = ft.c2();
    let h2 = c1 + c2 - c1 * c2;
    let atoms = ft.spectrum().atoms();
    let i = C64::new(0.0, 1.0);
    let moments = |m0: C64, k: i32, j: i32| -> C64 {
        atoms
            .iter()
            .map(|&(t, w)| w * t.powi(j) / (m0 + t).powi(k))
            .sum()
    };
    let nodes: Vec<TransformNode> = outer.iter().map(|(z, _)| ft.node(*z)).collect::<Result<_>>()?;

    let mut mu_q = C64::new(0.0, 0.0);
    let mut mu_bx = C64::new(0.0, 0.0);
    let mut mu_by = C64::new(0.0, 0.0);
    let mut single = vec![C64::new(0.0, 0.0); atoms.len()];
    let mut g_outer = Vec::with_capacity(nodes.len());
    for (nd, &(z, w)) in nodes.iter().zip(outer) {
        let fz = f.eval_c(z);
        let m0 = nd.m0;
        let i10 = moments(m0, 1, 0);
        let i20 = moments(m0, 2, 0);
        let i30 = moments(m0, 3, 0);
        let i21 = moments(m0, 2, 1);
        let a = 1.0 - c2 * m0 * i10;
        let d = 1.0 - c2 * m0 * m0 * i20;
        let e = h2 * d - c1 * a * a;
        let da = -c2 * i21;
        let dd = -c2 * (2.0 * m0 * i20 - 2.0 * m0 * m0 * i30);
        let de = (h2 * dd - 2.0 * c1 * a * da) * nd.dm0;
        mu_q += w * fz * de / e;
        mu_bx += w * fz * nd.m_underline * nd.m_underline * m0 * m0 * moments(m0, 3, 2) / e;
        mu_by += w * fz * nd.dm_underline * m0 * m0 * m0 * moments(m0, 3, 1) / d;
        for (s, &(t, _)) in single.iter_mut().zip(atoms) {
            *s += w * fz * nd.dm0 / ((t + m0) * (t + m0));
        }
        g_outer.push((m0, w * fz * nd.dm0));
    }
    let mu = m.q() / (4.0 * PI * i) * mu_q - m.beta_x * c1 * c2 / (2.0 * PI * i) * mu_bx
        + m.beta_y * c2 / (2.0 * PI * i) * mu_by;

    let inner_nodes: Vec<(C64, C64)> = inner
        .iter()
        .map(|&(z, w)| ft.node(z).map(|nd| (nd.m0, w * f.eval_c(z) * nd.dm0)))
        .collect::<Result<_>>()?;
    let mut double = C64::new(0.0, 0.0);
    for &(m1, g1) in &g_outer {
        let mut acc = C64::new(0.0, 0.0);
        for &(m2, g2) in &inner_nodes {
            let d = m1 - m2;
            acc += g2 / (d * d);
        }
        double += g1 * acc;
    }
    let nu_q = -(m.q() + 1.0) / (4.0 * PI * PI) * double;
    let nu_b: C64 = atoms
        .iter()
        .zip(&single)
        .map(|(&(t, w), s)| w * t * t * s * s)
        .sum::<C64>()
        * (-(m.beta_x * c1 + m.beta_y * c2) / (4.0 * PI * PI));
    Ok(ContourSums {
        mu: mu.re,
        nu: (nu_q + nu_b).re,
    })
}

/// Contour integrals for an arbitrary atomic `H`, on two nested rectangles
/// around the support. The error estimate is the change against a rule of
/// half the order on the same panels.
pub fn meanvar_contour_general(
    f: &SpectralFn,
    c1: f64,
    c2: f64,
    h: &SpectrumH,
    m: &MomentProfile,
    opts: &ContourOptions,
) -> Result<MeanVar> {
    check_c2(c1, c2)?;
    if opts.order < 4 || !(opts.panel_fraction > 0.0) {
        return invalid("contour order must be at least 4 and panels positive");
    }
    if !(opts.outer_margin > opts.inner_margin && opts.inner_margin > 0.0) {
        return invalid("outer contour margin must exceed the inner margin");
    }
    let ft = FisherTransform::new(c1, c2, h)?;
    let support = ft.support()?;
    let a = support[0].0;
    let b = support[support.len() - 1].1;
    let width = b - a;
    let needs_zero = ft.point_mass_at_zero() > 0.0;
    if needs_zero {
        if f.singular_point().is_some_and(|s| s >= -0.5 * width) {
            return domain(format!("{f} is singular at the point mass at zero"));
        }
    } else if let Some(s) = f.singular_point() {
        if s >= a {
            return domain(format!("{f} is not analytic on the support"));
        }
    }
    let left_gap = |frac: f64| -> f64 {
        if needs_zero {
            -frac * width
        } else {
            let lo = f.singular_point().map_or(0.0, |s| s.max(0.0));
            lo + (a - lo) * frac
        }
    };
    let outer = Chevron {
        left: left_gap(0.3),
        right: b + opts.outer_margin * width,
        half_height: opts.outer_margin * width,
        slant: 1.0,
    };
    let inner = Chevron {
        left: left_gap(0.65),
        right: b + opts.inner_margin * width,
        half_height: opts.inner_margin * width,
        slant: 0.5,
    };
    let mut points: Vec<f64> = support.iter().flat_map(|&(lo, hi)| [lo, hi]).collect();
    if needs_zero {
        points.push(0.0);
    }
    if let Some(s) = f.singular_point() {
        points.push(s);
    }
    let near = |z: C64| points.iter().map(|&x| (z - x).norm()).fold(f64::INFINITY, f64::min);
    let outer_hazard = |z: C64| near(z).min(inner.distance(z));
    let inner_hazard = |z: C64| near(z).min(outer.distance(z));
    let max_len = opts.panel_fraction * width;
    let rule = |order: usize| -> Result<ContourSums> {
        general_sums(
            f,
            &ft,
            m,
            &contour_nodes(outer, order, max_len, &outer_hazard),
            &contour_nodes(inner, order, max_len, &inner_hazard),
        )
    };
    let fine = rule(opts.order)?;
    let coarse = rule(opts.order / 2)?;
    checked(
        fine.mu,
        fine.nu,
        CltMethod::ContourGeneral,
        Diagnostics {
            mu_error: (fine.mu - coarse.mu).abs(),
            nu_error: (fine.nu - coarse.nu).abs(),
        },
    )
}

/// Mean and variance by the requested method.
pub fn meanvar(
    method: CltMethod,
    f: &SpectralFn,
    c1: f64,
    c2: f64,
    h: &SpectrumH,
    m: &MomentProfile,
) -> Result<MeanVar> {
    match method {
        CltMethod::ClosedForm => {
            if !h.is_delta1() {
                return invalid("closed forms need H = δ1");
            }
            match f {
                SpectralFn::X => meanvar_x_delta1(c1, c2, m),
                SpectralFn::Log => meanvar_log_delta1(c1, c2, m),
                _ => invalid(format!("no closed form for f = {f}")),
            }
        }
        CltMethod::ContourLowRank => {
            if !h.is_delta1() {
                return invalid("unit-circle integrals need H = δ1");
            }
            meanvar_contour_lowrank(f, c1, c2, m, &LowRankOptions::default())
        }
        CltMethod::ContourGeneral => {
            meanvar_contour_general(f, c1, c2, h, m, &ContourOptions::default())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-12)
    }

    #[test]
    fn x_closed_form_examples() {
        let g = MomentProfile::gaussian();
        let r = meanvar_x_delta1(0.5, 0.2, &g).unwrap();
        assert!((r.mu - 0.3125).abs() < 1e-12);
        assert!((r.nu - 1.2 / 0.4096).abs() < 1e-12);
        let gm = MomentProfile::new(1, 3.0, 3.0).unwrap();
        assert!((meanvar_x_delta1(0.5, 0.2, &gm).unwrap().mu - 1.0625).abs() < 1e-12);
        assert!(meanvar_x_delta1(0.5, 1e-12, &g).unwrap().mu.abs() < 1e-10);
    }

    #[test]
    fn log_closed_form_examples() {
        let g = MomentProfile::gaussian();
        let r = meanvar_log_delta1(0.5, 0.2, &g).unwrap();
        assert!((r.mu - 0.5 * 0.625f64.ln()).abs() < 1e-12);
        assert!((r.nu + 2.0 * 0.4f64.ln()).abs() < 1e-12);
        let gm = MomentProfile::new(1, 3.0, 3.0).unwrap();
        let d = meanvar_log_delta1(0.5, 0.2, &gm).unwrap().mu - r.mu;
        assert!((d + 0.45).abs() < 1e-12);
        assert!(meanvar_log_delta1(1.2, 0.2, &g).is_err());
    }

    #[test]
    fn regression_constants_example() {
        let k = regression_constants(0.5, 0.2).unwrap();
        assert!((k.h - 0.774597).abs() < 1e-6);
        assert!((k.c - 1.369306).abs() < 1e-6);
        assert!((k.d - 0.353553).abs() < 1e-6);
        let r = meanvar_regression(0.5, 0.2).unwrap();
        assert!((r.mu - 0.034496).abs() < 1e-6);
        assert!((r.nu - 0.137986).abs() < 1e-6);
        let lhs = k.c * k.c - k.d * k.d;
        let rhs = ((1.0 + 0.2 * k.b / 0.5) * (1.0 + 0.2 * k.a / 0.5)).sqrt();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn regression_matches_lowrank_with_log1p() {
        for (c1, c2) in [(0.5, 0.2), (0.5, 0.5)] {
            let f = SpectralFn::Log1pScaled(c2 / c1);
            let lr = meanvar_contour_lowrank(&f, c1, c2, &MomentProfile::gaussian(), &LowRankOptions::default()).unwrap();
            let cf = meanvar_regression(c1, c2).unwrap();
            assert!(rel(lr.mu, cf.mu) < 1e-4, "{} {}", lr.mu, cf.mu);
            assert!(rel(lr.nu, cf.nu) < 1e-6);
        }
    }

    #[test]
    fn lowrank_matches_closed_forms() {
        let gm = MomentProfile::new(1, 3.0, 3.0).unwrap();
        for m in [MomentProfile::gaussian(), gm] {
            for (c1, c2) in [(0.5, 0.2), (0.2, 0.5), (0.4, 0.5)] {
                let opts = LowRankOptions::default();
                let x = meanvar_contour_lowrank(&SpectralFn::X, c1, c2, &m, &opts).unwrap();
                let xc = meanvar_x_delta1(c1, c2, &m).unwrap();
                assert!(rel(x.mu, xc.mu) < 1e-4 && rel(x.nu, xc.nu) < 1e-4);
                let l = meanvar_contour_lowrank(&SpectralFn::Log, c1, c2, &m, &opts).unwrap();
                let lc = meanvar_log_delta1(c1, c2, &m).unwrap();
                assert!(rel(l.mu, lc.mu) < 1e-4, "{c1} {c2}: {} vs {}", l.mu, lc.mu);
                assert!(rel(l.nu, lc.nu) < 1e-4);
            }
        }
    }

    #[test]
    fn complex_gaussian_x_mean_vanishes() {
        let m = MomentProfile::new(0, 0.0, 0.0).unwrap();
        let r = meanvar_contour_lowrank(&SpectralFn::X, 0.5, 0.2, &m, &LowRankOptions::default()).unwrap();
        assert!(r.mu.abs() < 1e-10);
    }

    #[test]
    fn general_matches_closed_forms() {
        let gm = MomentProfile::new(1, 3.0, 3.0).unwrap();
        let h = SpectrumH::delta1();
        for m in [MomentProfile::gaussian(), gm] {
            for (c1, c2) in [(0.5, 0.2), (0.2, 0.5)] {
                for (f, cf) in [
                    (SpectralFn::X, meanvar_x_delta1(c1, c2, &m).unwrap()),
                    (SpectralFn::Log, meanvar_log_delta1(c1, c2, &m).unwrap()),
                ] {
                    let g = meanvar_contour_general(&f, c1, c2, &h, &m, &ContourOptions::default()).unwrap();
                    assert!(rel(g.mu, cf.mu) < 1e-3, "{f} {c1} {c2} mu {} vs {}", g.mu, cf.mu);
                    assert!(rel(g.nu, cf.nu) < 1e-3, "{f} {c1} {c2} nu {} vs {}", g.nu, cf.nu);
                }
            }
        }
    }

    #[test]
    fn general_two_atom_is_finite() {
        let h = SpectrumH::new(vec![(1.0, 0.5), (2.0, 0.5)]).unwrap();
        let r = meanvar_contour_general(&SpectralFn::Log, 0.2, 0.5, &h, &MomentProfile::gaussian(), &ContourOptions::default()).unwrap();
        assert!(r.nu > 0.0 && r.mu.is_finite());
        assert!(r.diagnostics.nu_error < 1e-3 * r.nu);
    }

    #[test]
    fn dispatcher_rejects_unsupported() {
        let h = SpectrumH::new(vec![(1.0, 0.5), (2.0, 0.5)]).unwrap();
        let g = MomentProfile::gaussian();
        assert!(meanvar(CltMethod::ClosedForm, &SpectralFn::Log, 0.2, 0.5, &h, &g).is_err());
        assert!(meanvar(CltMethod::ContourLowRank, &SpectralFn::Log, 0.2, 0.5, &h, &g).is_err());
    }
}
