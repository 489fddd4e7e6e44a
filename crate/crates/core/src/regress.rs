//! Counting significant regressors with the modified Wilks statistic.
//!
//! For `z_i = B w_i + e_i`, the hypothesis block `B1` (first `r1` columns)
//! produces a spiked numerator `H = B̂1 A_{11:2} B̂1^T / r1` against the residual
//! covariance `G`. The number of spikes of `H G^{-1}` is the number of
//! significant directions.

use crate::clt::meanvar_regression;
use crate::error::{invalid, Error, Result};
use crate::model::{cholesky_checked, pencil_eigenvalues, symmetrize, FisherEigs, RatioProfile, SpectrumH};
use crate::spectral::SpectralFn;
use crate::spiketest::{SpikeCount, SpikeTester, TestReport};
use nalgebra::DMatrix;

/// Responses `z` (p×n), design `w` (r×n) and the split `r1`.
#[derive(Debug, Clone)]
pub struct RegressionDesign {
    z: DMatrix<f64>,
    w: DMatrix<f64>,
    r1: usize,
}

impl RegressionDesign {
    pub fn new(z: DMatrix<f64>, w: DMatrix<f64>, r1: usize) -> Result<Self> {
        let (p, n) = z.shape();
        let (r, nw) = w.shape();
        if n != nw {
            return invalid(format!("responses have {n} samples but the design has {nw}"));
        }
        if p == 0 || r == 0 {
            return invalid("empty response or design matrix");
        }
        if n < p + r {
            return invalid(format!("need n >= p + r, got n = {n} < {p} + {r}"));
        }
        if r1 == 0 || r1 > r {
            return invalid(format!("r1 = {r1} must lie in 1..={r}"));
        }
        if z.iter().chain(w.iter()).any(|v| !v.is_finite()) {
            return invalid("non-finite entries in regression data");
        }
        let sv = w.singular_values();
        if !(sv.min() > 1e-10 * sv.max()) {
            return invalid("design matrix does not have full row rank");
        }
        Ok(RegressionDesign { z, w, r1 })
    }

    pub fn p(&self) -> usize {
        self.z.nrows()
    }

    pub fn n(&self) -> usize {
        self.z.ncols()
    }

    pub fn r(&self) -> usize {
        self.w.nrows()
    }

    pub fn r1(&self) -> usize {
        self.r1
    }

    /// Ratios `c1 = p / r1` and `c2 = p / (n - r)` as a profile with
    /// `n1 = r1`, `n2 = n - r`.
    pub fn ratios(&self) -> Result<RatioProfile> {
        RatioProfile::new(self.p(), self.r1, self.n() - self.r())
    }

    /// Scale `r1 / (n - r)` applied to the eigenvalues inside the logarithm.
    pub fn kappa(&self) -> f64 {
        self.r1 as f64 / (self.n() - self.r()) as f64
    }
}

#[derive(Debug, Clone)]
pub struct ManovaFactors {
    pub h: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub a112: DMatrix<f64>,
    pub bhat: DMatrix<f64>,
}

fn inverse_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(Error::Singular { ratio: 0.0 })
}

/// Maximum-likelihood fit and the two matrices of the Wilks pencil.
pub fn fit_mle(design: &RegressionDesign) -> Result<ManovaFactors> {
    let (z, w, r1) = (&design.z, &design.w, design.r1);
    let (n, r) = (design.n(), design.r());
    let wwt = w * w.transpose();
    let bhat = z * w.transpose() * inverse_spd(&wwt)?;
    let resid = z - &bhat * w;
    let mut g = &resid * resid.transpose() / (n - r) as f64;
    symmetrize(&mut g);
    let scale = z.norm_squared() / n as f64;
    if !(g.trace() > 1e-20 * scale) {
        return Err(Error::Singular { ratio: g.trace() / scale });
    }
    cholesky_checked(&g)?;
    let w11 = wwt.view((0, 0), (r1, r1)).into_owned();
    let a112 = if r1 == r {
        w11
    } else {
        let w12 = wwt.view((0, r1), (r1, r - r1)).into_owned();
        let w22 = wwt.view((r1, r1), (r - r1, r - r1)).into_owned();
        let mut s = &w11 - &w12 * inverse_spd(&w22)? * w12.transpose();
        symmetrize(&mut s);
        s
    };
    let b1 = bhat.columns(0, r1).into_owned();
    let mut h = &b1 * &a112 * b1.transpose() / r1 as f64;
    symmetrize(&mut h);
    Ok(ManovaFactors { h, g, a112, bhat })
}

/// `-log Λ* = Σ log(1 + κ l_j)` over the eigenvalues `l_j` of `H G^{-1}`.
pub fn wilks_modified(factors: &ManovaFactors, design: &RegressionDesign) -> Result<(f64, FisherEigs)> {
    let eig = pencil_eigenvalues(&factors.h, &factors.g)?;
    let kappa = design.kappa();
    let stat = eig.iter().map(|l| (kappa * l).ln_1p()).sum();
    let eigs = FisherEigs::new(eig, design.r1, design.n() - design.r())?;
    Ok((stat, eigs))
}

/// Tester for the regression spike count. `ratios` has `n1 = r1` and
/// `n2 = n - r`.
pub fn regression_tester(ratios: &RatioProfile, alpha: f64) -> Result<SpikeTester> {
    let ratios = *ratios;
    let mv = meanvar_regression(ratios.c_n1, ratios.c_n2)?;
    let kappa = ratios.n1 as f64 / ratios.n2 as f64;
    SpikeTester::with_meanvar(
        SpectralFn::Log1pScaled(kappa),
        SpectrumH::delta1(),
        alpha,
        ratios,
        mv,
    )
}

fn check_m(design: &RegressionDesign, m: usize) -> Result<()> {
    let lim = design.p().min(design.r1);
    if 2 * m >= lim {
        return invalid(format!("M0 = {m} must be below min(p, r1)/2 = {}", lim as f64 / 2.0));
    }
    Ok(())
}

/// Tests that exactly `m0` regressor directions are significant.
pub fn test_variable_count(design: &RegressionDesign, m0: usize, alpha: f64) -> Result<TestReport> {
    check_m(design, m0)?;
    let (_, eigs) = wilks_modified(&fit_mle(design)?, design)?;
    regression_tester(&design.ratios()?, alpha)?.test(&eigs, m0, None)
}

/// Sequential count: the first accepted `M0` scanning up from zero.
pub fn count_significant_variables(design: &RegressionDesign, alpha: f64, m_max: usize) -> Result<SpikeCount> {
    check_m(design, m_max)?;
    let (_, eigs) = wilks_modified(&fit_mle(design)?, design)?;
    let tester = regression_tester(&design.ratios()?, alpha)?;
    let mut reports = Vec::new();
    for m0 in 0..=m_max {
        let r = tester.test(&eigs, m0, None)?;
        let accepted = !r.rejected();
        reports.push(r);
        if accepted {
            return Ok(SpikeCount {
                count: m0,
                found: true,
                reports,
            });
        }
    }
    Ok(SpikeCount {
        count: m_max,
        found: false,
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Population;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_design(p: usize, n: usize, r: usize, r1: usize, seed: u64) -> RegressionDesign {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = Population::Gaussian.matrix(r, n, &mut rng);
        let z = Population::Gaussian.matrix(p, n, &mut rng);
        RegressionDesign::new(z, w, r1).unwrap()
    }

    #[test]
    fn noiseless_fit_is_degenerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = Population::Gaussian.matrix(3, 12, &mut rng);
        let b = Population::Gaussian.matrix(2, 3, &mut rng);
        let d = RegressionDesign::new(&b * &w, w, 2).unwrap();
        assert!(matches!(fit_mle(&d), Err(Error::Singular { .. })));
    }

    #[test]
    fn orthogonal_blocks_give_plain_gram() {
        // Rows of W are orthogonal by construction.
        let n = 8;
        let w = DMatrix::from_fn(2, n, |i, j| if i == 0 { [1.0, -1.0][j % 2] } else { [1.0, 1.0, -1.0, -1.0][j % 4] });
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let z = Population::Gaussian.matrix(3, n, &mut rng);
        let d = RegressionDesign::new(z, w.clone(), 1).unwrap();
        let f = fit_mle(&d).unwrap();
        let w1 = w.rows(0, 1).into_owned();
        assert!((&f.a112 - &w1 * w1.transpose()).amax() < 1e-12);
    }

    #[test]
    fn design_preconditions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = Population::Gaussian.matrix(5, 10, &mut rng);
        let z = Population::Gaussian.matrix(6, 10, &mut rng);
        let err = RegressionDesign::new(z, w, 2).unwrap_err();
        assert!(err.to_string().contains("n >= p + r"));
    }

    #[test]
    fn wilks_matches_log_determinant() {
        let d = random_design(5, 40, 6, 3, 4);
        let f = fit_mle(&d).unwrap();
        let (stat, _) = wilks_modified(&f, &d).unwrap();
        let ginv = f.g.clone().try_inverse().unwrap();
        let m = DMatrix::identity(5, 5) + &f.h * ginv * d.kappa();
        assert!((stat - m.determinant().ln()).abs() < 1e-9);
    }

    #[test]
    fn scalar_identity() {
        let d = random_design(1, 30, 2, 1, 5);
        let f = fit_mle(&d).unwrap();
        let (stat, _) = wilks_modified(&f, &d).unwrap();
        let want = (d.kappa() * f.h[(0, 0)] / f.g[(0, 0)]).ln_1p();
        assert!((stat - want).abs() < 1e-12);
    }

    #[test]
    fn zero_numerator() {
        let d = random_design(4, 30, 3, 2, 6);
        let mut f = fit_mle(&d).unwrap();
        f.h.fill(0.0);
        assert_eq!(wilks_modified(&f, &d).unwrap().0, 0.0);
    }

    #[test]
    fn response_rescaling_invariance() {
        let d = random_design(10, 120, 20, 15, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = Population::Gaussian.matrix(10, 10, &mut rng) + DMatrix::identity(10, 10) * 3.0;
        let d2 = RegressionDesign::new(&a * &d.z, d.w.clone(), 15).unwrap();
        let r1 = test_variable_count(&d, 1, 0.05).unwrap();
        let r2 = test_variable_count(&d2, 1, 0.05).unwrap();
        assert!((r1.z_score - r2.z_score).abs() < 1e-8);
    }

    #[test]
    fn bound_on_m0() {
        let d = random_design(10, 120, 20, 6, 9);
        assert!(test_variable_count(&d, 3, 0.05).is_err());
        assert!(test_variable_count(&d, 2, 0.05).is_ok());
    }
}
