//! Finite-shot simulation of the two-setting protocol: both parties measure
//! in the Z basis, or both in the Fourier (X) basis. Both witnesses are
//! estimated from exactly one record of each setting.
//!
//! Sampling is reproducible across platforms: a `ChaCha8Rng` seeded with
//! `seed_from_u64(seed)` and switched to stream 0 (Z) or 1 (X) draws one
//! uniform `f64` per shot, mapped through the cumulative distribution in
//! row-major `(j, k)` order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::BoundResult;
use crate::error::{QwError, Result};
use crate::qudit::{cos_omega, BasisLabel, QuditState};
use crate::witness::{fraction_from_c, fraction_from_r, schmidt_from_fraction};
use crate::EPS_DECIDE;

/// Largest tolerated deviation of the outcome distribution from unit mass.
pub const PROB_TOL: f64 = 1e-9;

/// Outcome counts of one joint measurement setting.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub d: usize,
    pub basis: BasisLabel,
    pub shots: u64,
    /// Row-major `d × d` counts over outcome pairs `(j, k)`.
    pub counts: Vec<u64>,
    pub seed: u64,
}

impl ShotRecord {
    pub fn count(&self, j: usize, k: usize) -> u64 {
        self.counts[j * self.d + k]
    }

    fn validate(&self) -> Result<()> {
        if self.counts.len() != self.d * self.d {
            return Err(QwError::InvalidState(format!(
                "record has {} cells, expected {}",
                self.counts.len(),
                self.d * self.d
            )));
        }
        if self.counts.iter().sum::<u64>() != self.shots || self.shots == 0 {
            return Err(QwError::InvalidState("record counts do not sum to a positive shot number".into()));
        }
        Ok(())
    }
}

fn stream(basis: BasisLabel) -> u64 {
    match basis {
        BasisLabel::ZBasis => 0,
        BasisLabel::XBasis => 1,
    }
}

/// Draws `shots` joint outcomes of `rho` in the chosen product basis.
pub fn sample_joint_basis(rho: &QuditState, basis: BasisLabel, shots: u64, seed: u64) -> Result<ShotRecord> {
    if rho.parties() != 2 {
        return Err(QwError::Domain(format!("expected a two-qudit state, got {} parties", rho.parties())));
    }
    if shots == 0 {
        return Err(QwError::Domain("need at least one shot".into()));
    }
    let d = rho.d();
    let mut probs = match basis {
        BasisLabel::ZBasis => rho.z_probabilities(),
        BasisLabel::XBasis => rho.x_probabilities()?,
    };
    if let Some(neg) = probs.iter().copied().find(|&p| p < -PROB_TOL) {
        return Err(QwError::InvalidState(format!("negative outcome probability {neg:.3e}")));
    }
    probs.iter_mut().for_each(|p| *p = p.max(0.0));
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(QwError::InvalidState(format!("outcome probabilities sum to {total}")));
    }
    let cdf: Vec<f64> = probs
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p / total;
            Some(*acc)
        })
        .collect();
    let last = probs.iter().rposition(|&p| p > 0.0).expect("non-zero distribution");

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream(basis));
    let mut counts = vec![0u64; d * d];
    for _ in 0..shots {
        let u: f64 = rng.random();
        let idx = cdf.partition_point(|&c| c <= u).min(last);
        counts[idx] += 1;
    }
    Ok(ShotRecord {
        d,
        basis,
        shots,
        counts,
        seed,
    })
}

/// Samples both settings, splitting `total_shots` evenly (Z takes the odd one).
pub fn sample_both(rho: &QuditState, total_shots: u64, seed: u64) -> Result<(ShotRecord, ShotRecord)> {
    if total_shots < 2 {
        return Err(QwError::Domain("need at least one shot per setting".into()));
    }
    let x_shots = total_shots / 2;
    let z_shots = total_shots - x_shots;
    Ok((
        sample_joint_basis(rho, BasisLabel::ZBasis, z_shots, seed)?,
        sample_joint_basis(rho, BasisLabel::XBasis, x_shots, seed)?,
    ))
}

fn check_pair(z: &ShotRecord, x: &ShotRecord) -> Result<usize> {
    if z.basis != BasisLabel::ZBasis || x.basis != BasisLabel::XBasis {
        return Err(QwError::Domain("estimators need one Z-basis and one X-basis record".into()));
    }
    if z.d != x.d {
        return Err(QwError::Domain(format!("records have different d ({} vs {})", z.d, x.d)));
    }
    z.validate()?;
    x.validate()?;
    Ok(z.d)
}

/// `ĉ` and its standard error: the correlated-cell frequencies of both
/// settings, treated as independent binomials.
pub fn estimate_c(z: &ShotRecord, x: &ShotRecord) -> Result<(f64, f64)> {
    let d = check_pair(z, x)?;
    let qz = (0..d).map(|j| z.count(j, j)).sum::<u64>() as f64 / z.shots as f64;
    let qx = (0..d).map(|j| x.count(j, (d - j) % d)).sum::<u64>() as f64 / x.shots as f64;
    let var = qz * (1.0 - qz) / z.shots as f64 + qx * (1.0 - qx) / x.shots as f64;
    Ok((qz + qx, var.sqrt()))
}

/// Mean and variance of the mean of a per-cell score.
fn scored_mean(rec: &ShotRecord, score: impl Fn(usize, usize) -> f64) -> (f64, f64) {
    let d = rec.d;
    let n = rec.shots as f64;
    let cells = || (0..d * d).map(|i| (rec.counts[i] as f64, score(i / d, i % d)));
    let mean = cells().map(|(c, s)| c * s).sum::<f64>() / n;
    if rec.shots < 2 {
        return (mean, 0.0);
    }
    let var = cells().map(|(c, s)| c * (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
    (mean, var / n)
}

/// `r̂ = mean cos[ω(j−k)]` over Z shots plus `mean cos[ω(j+k)]` over X shots,
/// with the plug-in standard error.
pub fn estimate_r(z: &ShotRecord, x: &ShotRecord) -> Result<(f64, f64)> {
    let d = check_pair(z, x)?;
    let (mz, vz) = scored_mean(z, |j, k| cos_omega(d, j as i64 - k as i64));
    let (mx, vx) = scored_mean(x, |j, k| cos_omega(d, (j + k) as i64));
    Ok((mz + mx, (vz + vx).sqrt()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateReport {
    pub c_hat: f64,
    pub c_se: f64,
    pub r_hat: f64,
    pub r_se: f64,
    /// `(Z shots, X shots)`.
    pub shots_per_setting: (u64, u64),
}

pub fn estimate(z: &ShotRecord, x: &ShotRecord) -> Result<EstimateReport> {
    let (c_hat, c_se) = estimate_c(z, x)?;
    let (r_hat, r_se) = estimate_r(z, x)?;
    Ok(EstimateReport {
        c_hat,
        c_se,
        r_hat,
        r_se,
        shots_per_setting: (z.shots, x.shots),
    })
}

/// Witness decisions from shot data at a fixed number of standard errors.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertifiedReport {
    pub d: usize,
    pub estimate: EstimateReport,
    pub sigmas: f64,
    pub c_bound: f64,
    pub r_bound: f64,
    pub c_margin: f64,
    pub r_margin: f64,
    pub c_certified: bool,
    pub r_certified: bool,
    /// Fraction bound evaluated at `estimate − sigmas·SE` for each witness.
    pub mes_fraction_lb: f64,
    pub schmidt_lb: usize,
}

/// A violation counts only if `estimate − bound > sigmas × SE` (and above
/// the decision tolerance when the standard error vanishes).
pub fn certify_from_shots(z: &ShotRecord, x: &ShotRecord, bound: &BoundResult, sigmas: f64) -> Result<CertifiedReport> {
    if sigmas.is_nan() || sigmas <= 0.0 {
        return Err(QwError::Domain(format!("sigmas must be positive, got {sigmas}")));
    }
    let est = estimate(z, x)?;
    let d = z.d;
    if bound.d != d {
        return Err(QwError::Domain(format!("bound computed for d={}, records have d={d}", bound.d)));
    }
    let c_bound = 1.0 + 1.0 / d as f64;
    let r_bound = bound.m_value;
    let c_margin = est.c_hat - c_bound;
    let r_margin = est.r_hat - r_bound;
    let fc = fraction_from_c(est.c_hat - sigmas * est.c_se);
    let fr = fraction_from_r(d, est.r_hat - sigmas * est.r_se);
    let lb = fc.max(fr);
    Ok(CertifiedReport {
        d,
        c_certified: c_margin > (sigmas * est.c_se).max(EPS_DECIDE),
        r_certified: r_margin > (sigmas * est.r_se).max(EPS_DECIDE),
        estimate: est,
        sigmas,
        c_bound,
        r_bound,
        c_margin,
        r_margin,
        mes_fraction_lb: lb,
        schmidt_lb: schmidt_from_fraction(d, lb),
    })
}
