//! Population and sample model: spectra, spikes, ratios, Fisher eigenvalues and
//! synthetic two-sample data.

use crate::error::{domain, invalid, Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

/// A population spectral distribution made of weighted atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumH {
    atoms: Vec<(f64, f64)>,
}

impl SpectrumH {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return invalid("spectrum needs at least one atom");
        }
        for w in atoms.windows(2) {
            if w[1].0 <= w[0].0 {
                return invalid("atom locations must be strictly increasing");
            }
        }
        for &(t, w) in &atoms {
            if !(t > 0.0) || !t.is_finite() {
                return invalid(format!("atom location {t} is not a positive number"));
            }
            if !(w > 0.0 && w <= 1.0) {
                return invalid(format!("atom weight {w} outside (0, 1]"));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return invalid(format!("atom weights sum to {total}, not 1"));
        }
        Ok(SpectrumH { atoms })
    }

    /// Point mass at one.
    pub fn delta1() -> Self {
        SpectrumH {
            atoms: vec![(1.0, 1.0)],
        }
    }

    /// Builds a spectrum from unsorted `(location, weight)` pairs, merging
    /// repeated locations and renormalising tiny rounding drift.
    pub fn from_unsorted(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (t, w) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == t => last.1 += w,
                _ => merged.push((t, w)),
            }
        }
        let total: f64 = merged.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-9 {
            return invalid(format!("atom weights sum to {total}, not 1"));
        }
        for a in merged.iter_mut() {
            a.1 /= total;
        }
        SpectrumH::new(merged)
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn is_delta1(&self) -> bool {
        self.atoms.len() == 1 && self.atoms[0].0 == 1.0
    }

    pub fn t_min(&self) -> f64 {
        self.atoms[0].0
    }

    pub fn t_max(&self) -> f64 {
        self.atoms[self.atoms.len() - 1].0
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|(t, w)| t * w).sum()
    }

    pub fn log_mean(&self) -> f64 {
        self.atoms.iter().map(|(t, w)| w * t.ln()).sum()
    }

    /// Finite-population spectrum of dimension `p`: this spectrum carries the
    /// `p - M` non-spiked eigenvalues and each spike adds an atom of weight
    /// `m_k / p`.
    pub fn with_spikes(&self, p: usize, spikes: &SpikeConfig) -> Result<SpectrumH> {
        let m = spikes.total();
        if m >= p {
            return invalid(format!("{m} spikes leave no bulk in dimension {p}"));
        }
        if m == 0 {
            return Ok(self.clone());
        }
        let bulk = (p - m) as f64 / p as f64;
        let mut atoms: Vec<(f64, f64)> = self.atoms.iter().map(|&(t, w)| (t, w * bulk)).collect();
        atoms.extend(spikes.spikes().iter().map(|&(a, k)| (a, k as f64 / p as f64)));
        SpectrumH::from_unsorted(atoms)
    }
}

/// Distinct spike values with multiplicities, largest first.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SpikeConfig {
    spikes: Vec<(f64, usize)>,
}

impl SpikeConfig {
    pub fn new(spikes: Vec<(f64, usize)>) -> Result<Self> {
        for &(a, m) in &spikes {
            if !(a > 0.0) || !a.is_finite() {
                return invalid(format!("spike {a} is not a positive number"));
            }
            if m == 0 {
                return invalid("spike multiplicity must be positive");
            }
        }
        for w in spikes.windows(2) {
            if w[1].0 >= w[0].0 {
                return invalid("spikes must be strictly decreasing");
            }
        }
        Ok(SpikeConfig { spikes })
    }

    pub fn none() -> Self {
        SpikeConfig::default()
    }

    /// Groups a list of spike values (any order, repeats allowed).
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let mut v = values.to_vec();
        v.sort_by(|a, b| b.total_cmp(a));
        let mut spikes: Vec<(f64, usize)> = Vec::new();
        for a in v {
            match spikes.last_mut() {
                Some(last) if last.0 == a => last.1 += 1,
                _ => spikes.push((a, 1)),
            }
        }
        SpikeConfig::new(spikes)
    }

    pub fn spikes(&self) -> &[(f64, usize)] {
        &self.spikes
    }

    pub fn total(&self) -> usize {
        self.spikes.iter().map(|s| s.1).sum()
    }

    /// Checks the size bound `M < p / 2` and relative separation `d0` from
    /// every atom of `h`.
    pub fn check_against(&self, p: usize, h: &SpectrumH, d0: f64) -> Result<()> {
        let m = self.total();
        if 2 * m >= p {
            return invalid(format!("{m} spikes is too many for dimension {p}"));
        }
        for &(a, _) in &self.spikes {
            for &(t, _) in h.atoms() {
                if (a / t - 1.0).abs() <= d0 {
                    return invalid(format!(
                        "spike {a} is within relative distance {d0} of atom {t}"
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Dimensions and their ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioProfile {
    pub p: usize,
    pub n1: usize,
    pub n2: usize,
    pub c_n1: f64,
    pub c_n2: f64,
    pub h2: f64,
}

impl RatioProfile {
    pub fn new(p: usize, n1: usize, n2: usize) -> Result<Self> {
        if p == 0 || n1 == 0 || n2 == 0 {
            return invalid("dimensions must be positive");
        }
        if n2 <= p {
            return invalid(format!("n2 = {n2} must exceed p = {p} for S2 to be invertible"));
        }
        let c_n1 = p as f64 / n1 as f64;
        let c_n2 = p as f64 / n2 as f64;
        Ok(RatioProfile {
            p,
            n1,
            n2,
            c_n1,
            c_n2,
            h2: c_n1 + c_n2 - c_n1 * c_n2,
        })
    }

    /// Sample sizes closest to the requested ratios.
    pub fn from_ratios(p: usize, c1: f64, c2: f64) -> Result<Self> {
        if !(c1 > 0.0) || !(c2 > 0.0) {
            return invalid("ratios must be positive");
        }
        let n1 = (p as f64 / c1).round() as usize;
        let n2 = (p as f64 / c2).round() as usize;
        RatioProfile::new(p, n1, n2)
    }
}

/// Field indicator (`q = 1` real, `q = 0` complex) and fourth-cumulant terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentProfile {
    pub q: u8,
    pub beta_x: f64,
    pub beta_y: f64,
}

impl MomentProfile {
    pub fn new(q: u8, beta_x: f64, beta_y: f64) -> Result<Self> {
        if q > 1 {
            return invalid("q must be 0 (complex) or 1 (real)");
        }
        if beta_x < -2.0 || beta_y < -2.0 || !beta_x.is_finite() || !beta_y.is_finite() {
            return invalid("fourth-cumulant terms must be finite and at least -2");
        }
        Ok(MomentProfile { q, beta_x, beta_y })
    }

    /// Real Gaussian entries.
    pub fn gaussian() -> Self {
        MomentProfile {
            q: 1,
            beta_x: 0.0,
            beta_y: 0.0,
        }
    }

    pub fn for_population(pop: Population) -> Self {
        let beta = pop.beta();
        MomentProfile {
            q: 1,
            beta_x: beta,
            beta_y: beta,
        }
    }

    pub fn q(&self) -> f64 {
        self.q as f64
    }
}

/// Eigenvalues of `S1 S2^{-1}` in descending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherEigs {
    pub eigenvalues: Vec<f64>,
    pub p: usize,
    pub n1: usize,
    pub n2: usize,
}

impl FisherEigs {
    pub fn new(mut eigenvalues: Vec<f64>, n1: usize, n2: usize) -> Result<Self> {
        if eigenvalues.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return invalid("eigenvalues must be finite and non-negative");
        }
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        Ok(FisherEigs {
            p: eigenvalues.len(),
            eigenvalues,
            n1,
            n2,
        })
    }

    pub fn ratios(&self) -> Result<RatioProfile> {
        RatioProfile::new(self.p, self.n1, self.n2)
    }
}

/// `X X^T / n` (no centring), or the centred covariance with divisor `n - 1`
/// when `unbiased` is set.
pub fn sample_covariance(data: &DMatrix<f64>, unbiased: bool) -> Result<DMatrix<f64>> {
    let (p, n) = data.shape();
    if p == 0 || n == 0 {
        return invalid("empty data matrix");
    }
    if data.iter().any(|v| !v.is_finite()) {
        return invalid("data contains non-finite entries");
    }
    let mut s = if unbiased {
        if n < 2 {
            return invalid("unbiased covariance needs at least two samples");
        }
        let mean = data.column_mean();
        let centred = DMatrix::from_fn(p, n, |i, j| data[(i, j)] - mean[i]);
        let mut s = &centred * centred.transpose();
        s /= (n - 1) as f64;
        s
    } else {
        let mut s = data * data.transpose();
        s /= n as f64;
        s
    };
    symmetrize(&mut s);
    Ok(s)
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

const SINGULAR_RATIO: f64 = 1e-12;

/// Generalized eigenvalues of the pencil `(s1, s2)`, i.e. the eigenvalues of
/// `s1 s2^{-1}`, through the Cholesky reduction `L^{-1} s1 L^{-T}`.
pub fn fisher_eigenvalues(
    s1: &DMatrix<f64>,
    s2: &DMatrix<f64>,
    n1: usize,
    n2: usize,
) -> Result<FisherEigs> {
    let eig = pencil_eigenvalues(s1, s2)?;
    Ok(FisherEigs {
        p: eig.len(),
        eigenvalues: eig,
        n1,
        n2,
    })
}

pub fn pencil_eigenvalues(s1: &DMatrix<f64>, s2: &DMatrix<f64>) -> Result<Vec<f64>> {
    let p = s1.nrows();
    if s1.shape() != (p, p) || s2.shape() != (p, p) || p == 0 {
        return invalid("pencil matrices must be square and of equal size");
    }
    let l = cholesky_checked(s2)?;
    let a = l
        .solve_lower_triangular(s1)
        .ok_or(Error::Singular { ratio: 0.0 })?;
    let mut reduced = l
        .solve_lower_triangular(&a.transpose())
        .ok_or(Error::Singular { ratio: 0.0 })?;
    symmetrize(&mut reduced);
    let mut eig: Vec<f64> = reduced.symmetric_eigenvalues().iter().copied().collect();
    let scale = eig.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    for v in eig.iter_mut() {
        if *v < 0.0 && *v > -1e-10 * scale {
            *v = 0.0;
        }
    }
    if eig.iter().any(|v| *v < 0.0) {
        return invalid("first matrix of the pencil is not positive semidefinite");
    }
    eig.sort_by(|a, b| b.total_cmp(a));
    Ok(eig)
}

/// Lower Cholesky factor after checking the eigenvalue ratio of `s`.
pub(crate) fn cholesky_checked(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let ev = s.symmetric_eigenvalues();
    let max = ev.max();
    let min = ev.min();
    let ratio = if max > 0.0 { min / max } else { 0.0 };
    if !(ratio >= SINGULAR_RATIO) {
        return Err(Error::Singular { ratio });
    }
    let chol = s.clone().cholesky().ok_or(Error::Singular { ratio })?;
    Ok(chol.l())
}

/// Distribution of the raw standardized entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Population {
    Gaussian,
    /// `(Gamma(2, 1) - 2) / sqrt(2)`
    Gamma,
}

impl Population {
    /// `E x^4 - 3` of a standardized entry.
    pub fn beta(&self) -> f64 {
        match self {
            Population::Gaussian => 0.0,
            Population::Gamma => 3.0,
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Population::Gaussian => StandardNormal.sample(rng),
            Population::Gamma => {
                let g = Gamma::new(2.0, 1.0).expect("valid gamma parameters");
                (g.sample(rng) - 2.0) / std::f64::consts::SQRT_2
            }
        }
    }

    pub fn matrix<R: Rng + ?Sized>(&self, rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
        // Column-major fill keeps draws in a fixed order.
        DMatrix::from_fn(rows, cols, |_, _| self.draw(rng))
    }
}

impl std::str::FromStr for Population {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Population::Gaussian),
            "gamma" => Ok(Population::Gamma),
            other => invalid(format!("unknown population '{other}'")),
        }
    }
}

/// Population covariance constructions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SigmaSpec {
    Identity,
    Diagonal(Vec<f64>),
    /// `U diag(d) U^T` with a fresh Haar-like orthogonal `U` per draw.
    Conjugated(Vec<f64>),
    /// `scale * rho^{|i-j|}`
    Toeplitz { rho: f64, scale: f64 },
}

impl SigmaSpec {
    /// Diagonal of length `p` whose leading entries are `spikes` and the rest `bulk`.
    pub fn spiked_diagonal(p: usize, spikes: &[f64], bulk: f64) -> Vec<f64> {
        let mut d = vec![bulk; p];
        d[..spikes.len()].copy_from_slice(spikes);
        d
    }

    fn validate(&self, p: usize) -> Result<()> {
        match self {
            SigmaSpec::Identity => Ok(()),
            SigmaSpec::Diagonal(d) | SigmaSpec::Conjugated(d) => {
                if d.len() != p {
                    invalid(format!("diagonal has length {} but p = {p}", d.len()))
                } else if d.iter().any(|v| !(*v > 0.0)) {
                    invalid("diagonal entries must be positive")
                } else {
                    Ok(())
                }
            }
            SigmaSpec::Toeplitz { rho, scale } => {
                if !(rho.abs() < 1.0) || !(*scale > 0.0) {
                    invalid("Toeplitz covariance needs |rho| < 1 and positive scale")
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Explicit covariance matrix (a random orthogonal factor is drawn for
    /// conjugated specs).
    pub fn matrix<R: Rng + ?Sized>(&self, p: usize, rng: &mut R) -> Result<DMatrix<f64>> {
        self.validate(p)?;
        Ok(match self {
            SigmaSpec::Identity => DMatrix::identity(p, p),
            SigmaSpec::Diagonal(d) => DMatrix::from_diagonal(&DVector::from_column_slice(d)),
            SigmaSpec::Conjugated(d) => {
                let u = random_orthogonal(p, rng);
                let mut m = &u * DMatrix::from_diagonal(&DVector::from_column_slice(d)) * u.transpose();
                symmetrize(&mut m);
                m
            }
            SigmaSpec::Toeplitz { rho, scale } => {
                DMatrix::from_fn(p, p, |i, j| scale * rho.powi((i as i32 - j as i32).abs()))
            }
        })
    }

    /// Symmetric square root, or `None` for the identity.
    pub fn sqrt<R: Rng + ?Sized>(&self, p: usize, rng: &mut R) -> Result<Option<DMatrix<f64>>> {
        self.validate(p)?;
        Ok(match self {
            SigmaSpec::Identity => None,
            SigmaSpec::Diagonal(d) => Some(DMatrix::from_diagonal(&DVector::from_iterator(
                p,
                d.iter().map(|v| v.sqrt()),
            ))),
            SigmaSpec::Conjugated(d) => {
                let u = random_orthogonal(p, rng);
                let root = DVector::from_iterator(p, d.iter().map(|v| v.sqrt()));
                Some(&u * DMatrix::from_diagonal(&root) * u.transpose())
            }
            SigmaSpec::Toeplitz { .. } => Some(symmetric_sqrt(&self.matrix(p, rng)?)?),
        })
    }
}

pub(crate) fn symmetric_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = m.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|v| *v < -1e-12) {
        return invalid("matrix is not positive semidefinite");
    }
    let root = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose())
}

/// Orthogonal matrix from the QR factorisation of a Gaussian matrix, with the
/// signs fixed so the distribution is Haar.
pub fn random_orthogonal<R: Rng + ?Sized>(p: usize, rng: &mut R) -> DMatrix<f64> {
    let g = Population::Gaussian.matrix(p, p, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..p {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Draws `X` (p×n1) and `Y` (p×n2) with covariances `sigma1` and `sigma2`.
pub fn generate_two_sample<R: Rng + ?Sized>(
    sigma1: &SigmaSpec,
    sigma2: &SigmaSpec,
    ratio: &RatioProfile,
    population: Population,
    rng: &mut R,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let p = ratio.p;
    let root1 = sigma1.sqrt(p, rng)?;
    let root2 = sigma2.sqrt(p, rng)?;
    let x = population.matrix(p, ratio.n1, rng);
    let y = population.matrix(p, ratio.n2, rng);
    let x = match root1 {
        Some(r) => r * x,
        None => x,
    };
    let y = match root2 {
        Some(r) => r * y,
        None => y,
    };
    Ok((x, y))
}

/// Empirical fourth moment of per-coordinate standardized entries minus `q + 2`.
pub fn estimate_beta(data: &DMatrix<f64>, q: u8) -> Result<f64> {
    let (p, n) = data.shape();
    if n < 4 || p == 0 {
        return invalid("fourth-moment estimate needs p >= 1 and n >= 4");
    }
    let mut total = 0.0;
    for row in data.row_iter() {
        let mean = row.mean();
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        if !(var > 0.0) {
            return domain("zero-variance coordinate in fourth-moment estimate");
        }
        total += row.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / (n as f64 * var * var);
    }
    Ok(total / p as f64 - q as f64 - 2.0)
}
