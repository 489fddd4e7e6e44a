//! The test of `H0: M = M0` and sequential estimation of the spike count.

use crate::clt::{meanvar, CltMethod, MeanVar};
use crate::error::{invalid, Result};
use crate::model::{FisherEigs, MomentProfile, RatioProfile, SpectrumH, SpikeConfig};
use crate::rmt::{centering_d1, psi, PsiInverse};
use crate::spectral::SpectralFn;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Reject,
}

/// Everything needed to audit one test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic_raw: f64,
    pub d1: f64,
    pub d2: f64,
    pub mu: f64,
    pub nu: f64,
    pub z_score: f64,
    pub p_value: f64,
    pub decision: Decision,
    pub alpha: f64,
    pub m0: usize,
}

impl TestReport {
    /// Standardises `raw - d1 + d2 - mu` and applies the two-sided rule.
    pub fn assemble(raw: f64, d1: f64, d2: f64, mu: f64, nu: f64, alpha: f64, m0: usize) -> Self {
        let z = (raw - d1 + d2 - mu) / nu.sqrt();
        let p_value = two_sided_p(z);
        TestReport {
            statistic_raw: raw,
            d1,
            d2,
            mu,
            nu,
            z_score: z,
            p_value,
            decision: if p_value < alpha {
                Decision::Reject
            } else {
                Decision::Accept
            },
            alpha,
            m0,
        }
    }

    pub fn rejected(&self) -> bool {
        self.decision == Decision::Reject
    }
}

/// `2 (1 - Φ(|z|))`
pub fn two_sided_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return invalid(format!("significance level {alpha} outside (0, 1)"));
    }
    Ok(())
}

/// `Σ_{j > M0} f(l_j)`: the linear spectral statistic without the `M0`
/// largest eigenvalues.
pub fn partial_lss(eigs: &FisherEigs, m0: usize, f: &SpectralFn) -> Result<f64> {
    if m0 >= eigs.p {
        return invalid(format!("M0 = {m0} must be below p = {}", eigs.p));
    }
    eigs.eigenvalues[m0..]
        .iter()
        .map(|&l| f.eval_checked(l))
        .sum()
}

/// Result of the sequential search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeCount {
    pub count: usize,
    pub found: bool,
    pub reports: Vec<TestReport>,
}

/// A spike-count test with its limiting mean and variance computed once.
#[derive(Debug, Clone)]
pub struct SpikeTester {
    f: SpectralFn,
    h: SpectrumH,
    alpha: f64,
    ratios: RatioProfile,
    meanvar: MeanVar,
    psi_inv: PsiInverse,
    d0: f64,
}

impl SpikeTester {
    /// `h` is the non-spiked population spectrum; the ratios are the
    /// finite-sample ones of the data to be tested.
    pub fn new(
        f: SpectralFn,
        h: SpectrumH,
        moments: MomentProfile,
        alpha: f64,
        method: CltMethod,
        ratios: RatioProfile,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        let meanvar = meanvar(method, &f, ratios.c_n1, ratios.c_n2, &h, &moments)?;
        let psi_inv = PsiInverse::new(ratios.c_n1, ratios.c_n2, &h)?;
        Ok(SpikeTester {
            f,
            h,
            alpha,
            ratios,
            meanvar,
            psi_inv,
            d0: 0.2,
        })
    }

    /// Tester with externally supplied limiting moments (used by the
    /// regression statistic, whose moments have their own closed form).
    pub fn with_meanvar(
        f: SpectralFn,
        h: SpectrumH,
        alpha: f64,
        ratios: RatioProfile,
        meanvar: MeanVar,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        let psi_inv = PsiInverse::new(ratios.c_n1, ratios.c_n2, &h)?;
        Ok(SpikeTester {
            f,
            h,
            alpha,
            ratios,
            meanvar,
            psi_inv,
            d0: 0.2,
        })
    }

    /// Relative separation required between hypothesised spikes and atoms of `H`.
    pub fn with_separation(mut self, d0: f64) -> Self {
        self.d0 = d0;
        self
    }

    pub fn meanvar(&self) -> &MeanVar {
        &self.meanvar
    }

    pub fn ratios(&self) -> &RatioProfile {
        &self.ratios
    }

    /// Spikes recovered by inverting the spike map at the `m0` largest eigenvalues.
    pub fn estimate_spikes(&self, eigs: &FisherEigs, m0: usize) -> Result<SpikeConfig> {
        if m0 > eigs.p {
            return invalid("more spikes requested than eigenvalues");
        }
        let values: Vec<f64> = eigs.eigenvalues[..m0]
            .iter()
            .map(|&l| self.psi_inv.invert(l))
            .collect::<Result<_>>()?;
        SpikeConfig::from_values(&values)
    }

    fn validate_known(&self, spikes: &SpikeConfig) -> Result<()> {
        spikes.check_against(self.ratios.p, &self.h, self.d0)?;
        for &(a, _) in spikes.spikes() {
            if a <= self.psi_inv.threshold() {
                return invalid(format!(
                    "spike {a} does not separate from the bulk (threshold {})",
                    self.psi_inv.threshold()
                ));
            }
        }
        Ok(())
    }

    /// Tests `H0: M = m0`. With `spikes = None` the spike values entering
    /// the centring are estimated from the data.
    pub fn test(&self, eigs: &FisherEigs, m0: usize, spikes: Option<&SpikeConfig>) -> Result<TestReport> {
        if eigs.p != self.ratios.p || eigs.n1 != self.ratios.n1 || eigs.n2 != self.ratios.n2 {
            return invalid("eigenvalue dimensions differ from the tester's ratio profile");
        }
        if 2 * m0 >= eigs.p.max(1) && m0 > 0 {
            return invalid(format!("M0 = {m0} must be below p/2"));
        }
        let estimated;
        let spikes = match spikes {
            Some(s) => {
                if s.total() != m0 {
                    return invalid(format!(
                        "spike hypothesis has multiplicity {} but M0 = {m0}",
                        s.total()
                    ));
                }
                self.validate_known(s)?;
                s
            }
            None => {
                estimated = self.estimate_spikes(eigs, m0)?;
                &estimated
            }
        };
        let raw = partial_lss(eigs, m0, &self.f)?;
        let (c1, c2) = (self.ratios.c_n1, self.ratios.c_n2);
        let hn = self.h.with_spikes(eigs.p, spikes)?;
        let d1 = centering_d1(&self.f, c1, c2, &hn, eigs.p)?;
        let mut d2 = 0.0;
        for &(a, k) in spikes.spikes() {
            d2 += k as f64 * self.f.eval_checked(psi(a, c1, c2, &self.h)?)?;
        }
        Ok(TestReport::assemble(
            raw,
            d1,
            d2,
            self.meanvar.mu,
            self.meanvar.nu,
            self.alpha,
            m0,
        ))
    }

    /// Smallest `M0` in `0..=m_max` that is accepted.
    pub fn estimate_count(&self, eigs: &FisherEigs, m_max: usize) -> Result<SpikeCount> {
        if 2 * m_max >= eigs.p {
            return invalid(format!("M_max = {m_max} must be below p/2"));
        }
        let mut reports = Vec::new();
        for m0 in 0..=m_max {
            let r = self.test(eigs, m0, None)?;
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
}

/// One-shot test with known spikes.
#[allow(clippy::too_many_arguments)]
pub fn test_spike_count(
    eigs: &FisherEigs,
    m0: usize,
    f: &SpectralFn,
    spikes: &SpikeConfig,
    h: &SpectrumH,
    moments: &MomentProfile,
    alpha: f64,
    method: CltMethod,
) -> Result<TestReport> {
    let tester = SpikeTester::new(f.clone(), h.clone(), *moments, alpha, method, eigs.ratios()?)?;
    tester.test(eigs, m0, Some(spikes))
}

/// One-shot sequential estimate of the spike count.
pub fn estimate_spike_count(
    eigs: &FisherEigs,
    f: &SpectralFn,
    h: &SpectrumH,
    moments: &MomentProfile,
    alpha: f64,
    m_max: usize,
    method: CltMethod,
) -> Result<SpikeCount> {
    let tester = SpikeTester::new(f.clone(), h.clone(), *moments, alpha, method, eigs.ratios()?)?;
    tester.estimate_count(eigs, m_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eigs(v: &[f64], n1: usize, n2: usize) -> FisherEigs {
        FisherEigs::new(v.to_vec(), n1, n2).unwrap()
    }

    #[test]
    fn partial_lss_examples() {
        let e = eigs(&[4.0, 3.0, 2.0, 1.0], 8, 20);
        assert!((partial_lss(&e, 2, &SpectralFn::Log).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(partial_lss(&e, 0, &SpectralFn::X).unwrap(), 10.0);
        assert_eq!(partial_lss(&e, 3, &SpectralFn::X).unwrap(), 1.0);
        assert!(partial_lss(&e, 4, &SpectralFn::X).is_err());
        let z = eigs(&[1.0, 0.0], 8, 20);
        assert!(partial_lss(&z, 0, &SpectralFn::Log).is_err());
    }

    #[test]
    fn report_is_reconstructible() {
        let r = TestReport::assemble(10.0, 8.0, 1.5, 0.3, 2.0, 0.05, 1);
        let z = (r.statistic_raw - r.d1 + r.d2 - r.mu) / r.nu.sqrt();
        assert!((z - r.z_score).abs() < 1e-12);
        assert!((r.p_value - two_sided_p(z)).abs() < 1e-15);
        assert!((two_sided_p(1.959963984540054) - 0.05).abs() < 1e-9);
    }

    #[test]
    fn scalar_smoke_case() {
        let e = eigs(&[1.3], 10, 10);
        let t = SpikeTester::new(
            SpectralFn::X,
            SpectrumH::delta1(),
            MomentProfile::gaussian(),
            0.05,
            CltMethod::ClosedForm,
            e.ratios().unwrap(),
        )
        .unwrap();
        let r = t.test(&e, 0, None).unwrap();
        assert!(r.z_score.is_finite());
    }

    #[test]
    fn hypothesis_must_match_m0() {
        let e = eigs(&[1.0; 20], 40, 100);
        let s = SpikeConfig::from_values(&[10.0]).unwrap();
        let g = MomentProfile::gaussian();
        let h = SpectrumH::delta1();
        assert!(test_spike_count(&e, 2, &SpectralFn::X, &s, &h, &g, 0.05, CltMethod::ClosedForm).is_err());
        assert!(test_spike_count(&e, 1, &SpectralFn::X, &s, &h, &g, 0.05, CltMethod::ClosedForm).is_ok());
    }

    #[test]
    fn known_spike_centring_matches_closed_form() {
        // d1 - d2 for f = x equals the printed closed form with spikes.
        let e = eigs(&vec![1.0; 100], 200, 500);
        let s = SpikeConfig::from_values(&[10.0, 8.0, 8.0, 6.0]).unwrap();
        let r = test_spike_count(
            &e,
            4,
            &SpectralFn::X,
            &s,
            &SpectrumH::delta1(),
            &MomentProfile::gaussian(),
            0.05,
            CltMethod::ClosedForm,
        )
        .unwrap();
        let (c1, c2) = (0.5, 0.2);
        let want = (100.0 - 4.0 + 32.0) / (1.0 - c2)
            - [10.0, 8.0, 8.0, 6.0]
                .iter()
                .map(|a| a * (1.0 - a - c1) / (1.0 - a + c2 * a))
                .sum::<f64>();
        assert!((r.d1 - r.d2 - want).abs() < 1e-10);
    }

    #[test]
    fn search_exhausts_at_zero() {
        let mut v = vec![1.0; 40];
        v[0] = 80.0;
        let e = eigs(&v, 80, 200);
        let c = estimate_spike_count(
            &e,
            &SpectralFn::Log,
            &SpectrumH::delta1(),
            &MomentProfile::gaussian(),
            0.05,
            0,
            CltMethod::ClosedForm,
        )
        .unwrap();
        assert_eq!(c.count, 0);
        assert!(!c.found);
    }
}
