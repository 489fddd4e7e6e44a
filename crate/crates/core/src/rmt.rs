//! Stieltjes transforms, the Fisher limiting spectral distribution, the spike
//! map and the centering integral.
//!
//! Everything is parametrised by `m0`, the companion Stieltjes transform of
//! the second sample evaluated at `-m(z)`. With `P(m) = Π (t_i + m)` and
//! `Q(m) = Σ w_i Π_{j≠i} (t_j + m)` the Fisher transform becomes the rational
//! map
//!
//! ```text
//! z(m0) = -m0 [(1 - c1) P + c1 m0 Q] / (P - c2 m0 Q)
//! ```
//!
//! so every evaluation reduces to the roots of a polynomial of degree `K + 1`
//! for a spectrum with `K` atoms.

use crate::error::{domain, invalid, Error, Result};
use crate::model::SpectrumH;
use crate::poly::{complex_roots, Poly};
use crate::quad::gauss_legendre;
use crate::spectral::SpectralFn;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// Solution of the Fisher Stieltjes system at one point `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StieltjesSolution {
    pub z: C64,
    pub m_underline: C64,
    pub m0: C64,
    pub residual: f64,
}

/// Transform values and their `z`-derivatives at a contour node.
#[derive(Debug, Clone, Copy)]
pub struct TransformNode {
    pub z: C64,
    pub m0: C64,
    pub m_underline: C64,
    /// `d m0 / dz`
    pub dm0: C64,
    /// `d m_underline / dz`
    pub dm_underline: C64,
}

/// Rational parametrisation of the Fisher LSD for fixed `(c1, c2, H)`.
#[derive(Debug, Clone)]
pub struct FisherTransform {
    c1: f64,
    c2: f64,
    h: SpectrumH,
    p: Poly,
    n: Poly,
    u: Poly,
    v: Poly,
}

impl FisherTransform {
    pub fn new(c1: f64, c2: f64, h: &SpectrumH) -> Result<Self> {
        if !(c1 > 0.0) || !c1.is_finite() {
            return invalid(format!("c1 = {c1} must be positive"));
        }
        if !(0.0..1.0).contains(&c2) {
            return invalid(format!("c2 = {c2} must lie in [0, 1)"));
        }
        let mut p = Poly::constant(1.0);
        for &(t, _) in h.atoms() {
            p = &p * &Poly::linear(t);
        }
        let mut q = Poly::constant(0.0);
        for (i, &(_, w)) in h.atoms().iter().enumerate() {
            let mut term = Poly::constant(w);
            for (j, &(t, _)) in h.atoms().iter().enumerate() {
                if i != j {
                    term = &term * &Poly::linear(t);
                }
            }
            q = &q + &term;
        }
        let mq = &Poly::x() * &q;
        let n = &p - &mq.scale(c2);
        let inner = &p.scale(1.0 - c1) + &mq.scale(c1);
        let u = (&Poly::x() * &inner).scale(-1.0);
        Ok(FisherTransform {
            c1,
            c2,
            h: h.clone(),
            p,
            v: n.clone(),
            n,
            u,
        })
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn spectrum(&self) -> &SpectrumH {
        &self.h
    }

    pub fn z_of_m0(&self, m0: C64) -> C64 {
        self.u.eval_c(m0) / self.v.eval_c(m0)
    }

    pub fn dz_dm0(&self, m0: C64) -> C64 {
        let v = self.v.eval_c(m0);
        (self.u.derivative().eval_c(m0) * v - self.u.eval_c(m0) * self.v.derivative().eval_c(m0))
            / (v * v)
    }

    pub fn m_underline_of_m0(&self, m0: C64) -> C64 {
        self.n.eval_c(m0) / (m0 * self.p.eval_c(m0))
    }

    /// `d m_underline / d m0`
    pub fn dm_underline_dm0(&self, m0: C64) -> C64 {
        let s: C64 = self
            .h
            .atoms()
            .iter()
            .map(|&(t, w)| w / ((m0 + t) * (m0 + t)))
            .sum();
        -1.0 / (m0 * m0) + s * self.c2
    }

    fn roots_at(&self, z: C64) -> Vec<C64> {
        let deg = self.u.0.len().max(self.v.0.len());
        let coeffs: Vec<C64> = (0..deg)
            .map(|k| {
                C64::new(*self.u.0.get(k).unwrap_or(&0.0), 0.0)
                    - z * *self.v.0.get(k).unwrap_or(&0.0)
            })
            .collect();
        complex_roots(&coeffs)
    }

    fn residual(&self, m0: C64, z: C64) -> f64 {
        let u = self.u.eval_c(m0);
        let v = self.v.eval_c(m0);
        (u - z * v).norm() / (u.norm() + z.norm() * v.norm()).max(f64::MIN_POSITIVE)
    }

    /// Solves for `(m0, m_underline)` at a non-real `z`, picking the branch
    /// with `Im m_underline` of the same sign as `Im z` and `Im m0` of the
    /// opposite sign.
    pub fn solve(&self, z: C64) -> Result<StieltjesSolution> {
        if z.im == 0.0 {
            return invalid("solve requires a non-real argument; use density for real points");
        }
        let sg = z.im.signum();
        let mut best: Option<(f64, C64, C64)> = None;
        for r in self.roots_at(z) {
            let mu = self.m_underline_of_m0(r);
            let score = (-sg * r.im).min(sg * mu.im) / (1.0 + r.norm());
            if best.is_none_or(|b| score > b.0) {
                best = Some((score, r, mu));
            }
        }
        let (score, m0, mu) = best.ok_or_else(|| Error::NoConvergence {
            what: "Fisher transform root".into(),
            residual: f64::INFINITY,
        })?;
        let residual = self.residual(m0, z);
        if score <= 0.0 || residual > 1e-10 {
            return Err(Error::NoConvergence {
                what: format!("Fisher transform branch at z = {z}"),
                residual,
            });
        }
        Ok(StieltjesSolution {
            z,
            m_underline: mu,
            m0,
            residual,
        })
    }

    /// Transform values and derivatives at a non-real `z`.
    pub fn node(&self, z: C64) -> Result<TransformNode> {
        let s = self.solve(z)?;
        let dm0 = 1.0 / self.dz_dm0(s.m0);
        Ok(TransformNode {
            z,
            m0: s.m0,
            m_underline: s.m_underline,
            dm0,
            dm_underline: self.dm_underline_dm0(s.m0) * dm0,
        })
    }

    /// Boundary value `m_underline(x + i0)` at real `x`, if `x` is inside the
    /// continuous part of the support.
    fn boundary_m_underline(&self, x: f64) -> Option<C64> {
        let mut best: Option<C64> = None;
        for r in self.roots_at(C64::new(x, 0.0)) {
            if r.im >= -1e-10 * (1.0 + r.norm()) {
                continue;
            }
            let mu = self.m_underline_of_m0(r);
            if mu.im > 1e-10 * (1.0 + mu.norm()) && best.is_none_or(|b| mu.im > b.im) {
                best = Some(mu);
            }
        }
        best
    }

    /// Density of the continuous part of the Fisher LSD at `x`.
    pub fn density(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.boundary_m_underline(x)
            .map_or(0.0, |mu| mu.im / (PI * self.c1))
    }

    pub fn point_mass_at_zero(&self) -> f64 {
        (1.0 - 1.0 / self.c1).max(0.0)
    }

    /// Real critical points of `z(m0)` (zeros of `dz/dm0`).
    fn critical_points(&self) -> Vec<f64> {
        let w = &(&self.u.derivative() * &self.v) - &(&self.u * &self.v.derivative());
        let dw = w.derivative();
        let mut out = Vec::new();
        for r in w.roots() {
            if r.im.abs() > 1e-7 * (1.0 + r.re.abs()) {
                continue;
            }
            let mut x = r.re;
            for _ in 0..5 {
                let d = dw.eval(x);
                if d == 0.0 {
                    break;
                }
                let step = w.eval(x) / d;
                if !step.is_finite() {
                    break;
                }
                x -= step;
                if step.abs() < 1e-16 * (1.0 + x.abs()) {
                    break;
                }
            }
            out.push(x);
        }
        out
    }

    /// Disjoint intervals forming the continuous part of the support.
    pub fn support(&self) -> Result<Vec<(f64, f64)>> {
        let mut cands: Vec<f64> = self
            .critical_points()
            .into_iter()
            .filter(|m| m.abs() > 1e-14 && self.v.eval(*m).abs() > 1e-14)
            .map(|m| self.u.eval(m) / self.v.eval(m))
            .filter(|x| x.is_finite() && *x > 1e-14)
            .collect();
        cands.sort_by(|a, b| a.total_cmp(b));
        cands.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
        if cands.is_empty() {
            return Err(Error::Support("no real edge candidates".into()));
        }
        let last = *cands.last().unwrap();
        if self.boundary_m_underline(2.0 * last + 1.0).is_some() {
            return Err(Error::Support("density does not vanish beyond the last edge".into()));
        }
        let mut breaks = vec![0.0];
        breaks.extend(&cands);
        let mut intervals: Vec<(f64, f64)> = Vec::new();
        for w in breaks.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            if self.boundary_m_underline(mid).is_some() {
                match intervals.last_mut() {
                    Some(iv) if iv.1 == w[0] => iv.1 = w[1],
                    _ => intervals.push((w[0], w[1])),
                }
            }
        }
        if intervals.is_empty() {
            return Err(Error::Support("no interval with positive density".into()));
        }
        Ok(intervals)
    }

    /// Smallest spike value whose sample counterpart separates from the bulk:
    /// the spike map is increasing beyond it and equals the right edge there.
    pub fn spike_threshold(&self) -> Result<f64> {
        let m = self
            .critical_points()
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if !(m < -self.h.t_max()) {
            return Err(Error::Support(
                "no critical point beyond the largest atom".into(),
            ));
        }
        Ok(-m)
    }

    /// `∫ g dF` over the continuous part of the LSD, with the edge
    /// substitution `x = a + (b - a) sin²θ` and panel doubling until two
    /// successive estimates agree to `rel_tol`. Returns the value and the
    /// last difference.
    pub fn integrate<G: Fn(f64) -> f64>(&self, g: G, rel_tol: f64) -> Result<(f64, f64)> {
        let intervals = self.support()?;
        let (gx, gw) = gauss_legendre(24);
        let mut total = 0.0;
        let mut err = 0.0;
        for (a, b) in intervals {
            let rule = |panels: usize| -> f64 {
                let h = FRAC_PI_2 / panels as f64;
                let mut s = 0.0;
                for k in 0..panels {
                    for (xi, wi) in gx.iter().zip(&gw) {
                        let th = h * (k as f64 + 0.5 * (xi + 1.0));
                        let x = a + (b - a) * th.sin().powi(2);
                        let jac = (b - a) * (2.0 * th).sin();
                        s += 0.5 * h * wi * jac * self.density(x) * g(x);
                    }
                }
                s
            };
            let mut panels = 1;
            let mut prev = rule(panels);
            loop {
                panels *= 2;
                let cur = rule(panels);
                let diff = (cur - prev).abs();
                prev = cur;
                if diff <= rel_tol * cur.abs().max(1e-300) || diff < 1e-15 {
                    err += diff;
                    break;
                }
                if panels >= 256 {
                    return Err(Error::Quadrature(format!(
                        "no convergence on [{a}, {b}] (last change {diff:.3e})"
                    )));
                }
            }
            total += prev;
        }
        Ok((total, err))
    }
}

impl FisherTransform {
    /// Stieltjes transform `m(x) = ∫ (t - x)^{-1} dF(t)` at a real `x < 0`
    /// left of the support.
    pub fn stieltjes_real(&self, x: f64) -> Result<f64> {
        if !(x < 0.0) {
            return invalid(format!("real Stieltjes evaluation needs x < 0, got {x}"));
        }
        let delta = 1e-9 * x.abs();
        let s = self.solve(C64::new(x, delta))?;
        // Real part is exact to O(delta²) since m is real on this ray.
        Ok((s.m_underline.re + (1.0 - self.c1) / x) / self.c1)
    }

    /// Log potential `∫ log(t - z0) dF(t)` for real `z0 < 0`, including any
    /// point mass at zero.
    ///
    /// With `u = 1/z` this is `log(-z0) - ∫_{1/z0}^0 (m(1/u) + u) / u² du`;
    /// the integrand is analytic on the path but has singularities at
    /// `u = 1/b` close to zero, so panels are graded geometrically toward it.
    pub fn log_potential(&self, z0: f64) -> Result<f64> {
        if !(z0 < 0.0) {
            return invalid(format!("log potential needs z0 < 0, got {z0}"));
        }
        if !(self.c2 < 1.0) {
            return invalid(format!("c2 = {} must lie in [0, 1)", self.c2));
        }
        // Upper bound on the right edge from λmax(S1) / λmin(S2).
        let right = self.h.t_max() * (1.0 + self.c1.sqrt()).powi(2) / (1.0 - self.c2.sqrt()).powi(2);
        let (gx, gw) = gauss_legendre(16);
        let u0 = 1.0 / z0;
        let stop = (1e-3 * u0.abs()).min(0.5 / right);
        let mut ends = vec![u0];
        let mut u = u0;
        while u.abs() > stop {
            u *= 0.25;
            ends.push(u);
        }
        ends.push(0.0);
        let mut total = 0.0;
        for w in ends.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for (xi, wi) in gx.iter().zip(&gw) {
                let u = mid + half * xi;
                let m = self.stieltjes_real(1.0 / u)?;
                total += half * wi * (m + u) / (u * u);
            }
        }
        Ok((-z0).ln() - total)
    }
}

/// Edges `(1 ∓ h)² / (1 - c2)²` of the Fisher LSD for `H = δ1`.
pub fn wachter_edges(c1: f64, c2: f64) -> (f64, f64) {
    let h = (c1 + c2 - c1 * c2).sqrt();
    let k = (1.0 - c2).powi(2);
    ((1.0 - h).powi(2) / k, (1.0 + h).powi(2) / k)
}

/// Closed-form Fisher density for `H = δ1`.
pub fn wachter_density(x: f64, c1: f64, c2: f64) -> f64 {
    let (a, b) = wachter_edges(c1, c2);
    if x <= a || x >= b {
        return 0.0;
    }
    (1.0 - c2) * ((b - x) * (x - a)).sqrt() / (2.0 * PI * x * (c1 + c2 * x))
}

/// Solution `m` of `z = -1/m + c2 Σ w_i/(t_i + m)` on the Stieltjes branch.
pub fn solve_stieltjes_mc2(z: C64, c2: f64, h: &SpectrumH) -> Result<C64> {
    if !(0.0..1.0).contains(&c2) {
        return invalid(format!("c2 = {c2} must lie in [0, 1)"));
    }
    let mut p = Poly::constant(1.0);
    for &(t, _) in h.atoms() {
        p = &p * &Poly::linear(t);
    }
    let mut q = Poly::constant(0.0);
    for (i, &(_, w)) in h.atoms().iter().enumerate() {
        let mut term = Poly::constant(w);
        for (j, &(t, _)) in h.atoms().iter().enumerate() {
            if i != j {
                term = &term * &Poly::linear(t);
            }
        }
        q = &q + &term;
    }
    // z m P + P - c2 m Q = 0
    let mp = &Poly::x() * &p;
    let base = &p - &(&Poly::x() * &q).scale(c2);
    let deg = mp.0.len().max(base.0.len());
    let coeffs: Vec<C64> = (0..deg)
        .map(|k| z * *mp.0.get(k).unwrap_or(&0.0) + *base.0.get(k).unwrap_or(&0.0))
        .collect();
    let eq = |m: C64| -> C64 {
        let s: C64 = h.atoms().iter().map(|&(t, w)| w / (m + t)).sum();
        -1.0 / m + s * c2
    };
    let slope = |m: f64| -> f64 {
        1.0 / (m * m) - c2 * h.atoms().iter().map(|&(t, w)| w / (m + t).powi(2)).sum::<f64>()
    };
    let roots = complex_roots(&coeffs);
    let pick = if z.im != 0.0 {
        roots
            .iter()
            .filter(|m| m.im * z.im > 0.0)
            .max_by(|a, b| (a.im * z.im).total_cmp(&(b.im * z.im)))
            .copied()
    } else {
        let real = roots
            .iter()
            .filter(|m| m.im.abs() <= 1e-9 * (1.0 + m.norm()) && slope(m.re) > 0.0)
            .map(|m| C64::new(m.re, 0.0))
            .next();
        real.or_else(|| {
            roots
                .iter()
                .filter(|m| m.im > 0.0)
                .max_by(|a, b| a.im.total_cmp(&b.im))
                .copied()
        })
    };
    let m = pick.ok_or_else(|| Error::NoConvergence {
        what: "companion Stieltjes branch".into(),
        residual: f64::INFINITY,
    })?;
    let residual = (eq(m) - z).norm() / (1.0 + z.norm());
    if residual > 1e-10 {
        return Err(Error::NoConvergence {
            what: "companion Stieltjes transform".into(),
            residual,
        });
    }
    Ok(m)
}

/// Density of the Fisher LSD sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsdDensity {
    pub support: Vec<(f64, f64)>,
    /// `(x, density)` pairs, increasing in `x`.
    pub grid: Vec<(f64, f64)>,
    pub point_mass_at_zero: f64,
    /// Integral of the continuous part plus the point mass.
    pub total_mass: f64,
}

/// Density of the Fisher LSD `F^{(c1, c2, H)}` on `grid_size` points per
/// support interval (clustered at the edges).
pub fn fisher_lsd_density(c1: f64, c2: f64, h: &SpectrumH, grid_size: usize) -> Result<LsdDensity> {
    if grid_size < 64 {
        return invalid("grid_size must be at least 64");
    }
    let ft = FisherTransform::new(c1, c2, h)?;
    let closed = h.is_delta1();
    let support = if closed {
        let (a, b) = wachter_edges(c1, c2);
        vec![(a, b)]
    } else {
        ft.support()?
    };
    let dens = |x: f64| {
        if closed {
            wachter_density(x, c1, c2)
        } else {
            ft.density(x)
        }
    };
    let mut grid = Vec::with_capacity(grid_size * support.len());
    for &(a, b) in &support {
        for k in 0..grid_size {
            let th = FRAC_PI_2 * k as f64 / (grid_size - 1) as f64;
            let x = a + (b - a) * th.sin().powi(2);
            grid.push((x, dens(x)));
        }
    }
    let (mass, _) = if closed {
        let mut m = 0.0;
        let (gx, gw) = gauss_legendre(64);
        let (a, b) = support[0];
        for (xi, wi) in gx.iter().zip(&gw) {
            let th = FRAC_PI_2 * 0.5 * (xi + 1.0);
            let x = a + (b - a) * th.sin().powi(2);
            m += FRAC_PI_2 * 0.5 * wi * (b - a) * (2.0 * th).sin() * wachter_density(x, c1, c2);
        }
        (m, 0.0)
    } else {
        ft.integrate(|_| 1.0, 1e-10)?
    };
    let point_mass = ft.point_mass_at_zero();
    let total = mass + point_mass;
    let tol = if closed { 1e-6 } else { 1e-3 };
    if (total - 1.0).abs() > tol {
        return Err(Error::Quadrature(format!("LSD mass {total} differs from 1")));
    }
    Ok(LsdDensity {
        support,
        grid,
        point_mass_at_zero: point_mass,
        total_mass: total,
    })
}

/// The spike map `ψ(α) = α(1 - c1 ∫ t/(t-α) dH) / (1 + c2 ∫ α/(t-α) dH)`.
pub fn psi(alpha: f64, c1: f64, c2: f64, h: &SpectrumH) -> Result<f64> {
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for &(t, w) in h.atoms() {
        if (t - alpha).abs() <= 1e-12 * t {
            return domain(format!("spike {alpha} coincides with atom {t}"));
        }
        s1 += w * t / (t - alpha);
        s2 += w * alpha / (t - alpha);
    }
    let den = 1.0 + c2 * s2;
    if den.abs() < 1e-12 {
        return domain(format!("spike map denominator vanishes at {alpha}"));
    }
    Ok(alpha * (1.0 - c1 * s1) / den)
}

/// Inverse of the spike map on its increasing branch.
#[derive(Debug, Clone)]
pub struct PsiInverse {
    c1: f64,
    c2: f64,
    h: SpectrumH,
    threshold: f64,
    edge: f64,
}

impl PsiInverse {
    pub fn new(c1: f64, c2: f64, h: &SpectrumH) -> Result<Self> {
        let ft = FisherTransform::new(c1, c2, h)?;
        let threshold = ft.spike_threshold()?;
        let edge = psi(threshold, c1, c2, h)?;
        Ok(PsiInverse {
            c1,
            c2,
            h: h.clone(),
            threshold,
            edge,
        })
    }

    /// Spike value below which no sample eigenvalue separates.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// `ψ(threshold)`, the right edge of the bulk.
    pub fn edge(&self) -> f64 {
        self.edge
    }

    /// Spike `α > threshold` with `ψ(α) = l`; eigenvalues at or below the edge
    /// map to the threshold itself.
    pub fn invert(&self, l: f64) -> Result<f64> {
        if !l.is_finite() {
            return invalid("cannot invert the spike map at a non-finite value");
        }
        if l <= self.edge {
            return Ok(self.threshold);
        }
        let f = |a: f64| psi(a, self.c1, self.c2, &self.h);
        let mut lo = self.threshold;
        let mut hi = (2.0 * self.threshold).max(l);
        while f(hi)? < l {
            lo = hi;
            hi *= 2.0;
            if hi > 1e300 {
                return invalid("spike map inversion bracket overflow");
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid)? < l {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// `∫ log x dF` for `H = δ1`, requires `c1 < 1`.
pub fn log_mean_delta1(c1: f64, c2: f64) -> Result<f64> {
    let h2 = c1 + c2 - c1 * c2;
    if !(c1 < 1.0) || !(h2 < 1.0) {
        return domain("log statistic needs c1 < 1");
    }
    let first = if c2 == 0.0 {
        -1.0
    } else {
        (1.0 - c2) * (-c2).ln_1p() / c2
    };
    Ok(first + (1.0 - h2) * ((1.0 - h2).ln() - (1.0 - c2).ln()) / (c2 - h2))
}

/// `d1 = p ∫ f dF^{(c1, c2, H)}`. Uses the exact reductions for `f = x` and
/// `f = log` and numerical quadrature otherwise.
pub fn centering_d1(f: &SpectralFn, c1: f64, c2: f64, h: &SpectrumH, p: usize) -> Result<f64> {
    let pf = p as f64;
    match f {
        SpectralFn::X => {
            if !(0.0..1.0).contains(&c2) {
                return invalid(format!("c2 = {c2} must lie in [0, 1)"));
            }
            Ok(pf * h.mean() / (1.0 - c2))
        }
        SpectralFn::Log => Ok(pf * (log_mean_delta1(c1, c2)? + h.log_mean())),
        SpectralFn::Log1pScaled(k) if *k > 0.0 => {
            let ft = FisherTransform::new(c1, c2, h)?;
            Ok(pf * (k.ln() + ft.log_potential(-1.0 / k)?))
        }
        _ => centering_d1_quadrature(f, c1, c2, h, p),
    }
}

/// `d1` by quadrature against the LSD for any `f`.
pub fn centering_d1_quadrature(
    f: &SpectralFn,
    c1: f64,
    c2: f64,
    h: &SpectrumH,
    p: usize,
) -> Result<f64> {
    let ft = FisherTransform::new(c1, c2, h)?;
    let zero_mass = ft.point_mass_at_zero();
    let mut at_zero = 0.0;
    if zero_mass > 0.0 {
        let v = f.eval(0.0);
        if !v.is_finite() {
            return domain(format!("{f} is undefined at the point mass at zero"));
        }
        at_zero = zero_mass * v;
    }
    let (val, _) = ft.integrate(|x| f.eval(x), 1e-11)?;
    Ok(p as f64 * (val + at_zero))
}
