//! Noisy MES families and the noise level at which each witness starts to
//! detect them.
//!
//! All three families are Bell-diagonal, so witness expectations are affine
//! in `p` and thresholds have a closed form through [`bell_coefficients`].
//! Each closed-form value is cross-checked by bisection on dense matrices.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{separable_bound_m, DEFAULT_TOL};
use crate::error::{QwError, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::qudit::{bell_vector, check_d, max_dim, QuditState};
use crate::witness::{bell_coefficients, BellCoefficients, WitnessOperators};

const BISECTION_STEPS: usize = 60;
/// Allowed gap between closed-form and bisection thresholds.
pub const THRESHOLD_AGREEMENT: f64 = 1e-8;
/// Regions narrower than this are reported as empty.
const REGION_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NoiseFamily {
    /// `ψ(p) = p Φ_{0,0} + (1−p) Φ_{⌊d/2⌋,⌊d/2⌋}`
    #[serde(rename = "psi")]
    PsiHalfShift,
    /// `φ(p) = p Φ_{0,0} + (1−p) Φ_{1,0}`
    #[serde(rename = "phi")]
    PhiUnitShift,
    /// `p Φ_{0,0} + (1−p) I/d²`
    #[serde(rename = "iso")]
    Isotropic,
}

impl NoiseFamily {
    pub const ALL: [NoiseFamily; 3] = [NoiseFamily::PsiHalfShift, NoiseFamily::PhiUnitShift, NoiseFamily::Isotropic];

    pub fn name(self) -> &'static str {
        match self {
            NoiseFamily::PsiHalfShift => "psi",
            NoiseFamily::PhiUnitShift => "phi",
            NoiseFamily::Isotropic => "iso",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "psi" => Ok(NoiseFamily::PsiHalfShift),
            "phi" => Ok(NoiseFamily::PhiUnitShift),
            "iso" => Ok(NoiseFamily::Isotropic),
            other => Err(QwError::Parse(format!("unknown noise family '{other}' (psi|phi|iso)"))),
        }
    }

    /// The Bell state mixed into `Φ_{0,0}`, if the noise is a single Bell state.
    fn partner(self, d: usize) -> Option<(usize, usize)> {
        match self {
            NoiseFamily::PsiHalfShift => Some((d / 2, d / 2)),
            NoiseFamily::PhiUnitShift => Some((1, 0)),
            NoiseFamily::Isotropic => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WitnessKind {
    #[serde(rename = "c")]
    Cd,
    #[serde(rename = "r")]
    Rd,
}

impl WitnessKind {
    pub const ALL: [WitnessKind; 2] = [WitnessKind::Cd, WitnessKind::Rd];

    pub fn name(self) -> &'static str {
        match self {
            WitnessKind::Cd => "c",
            WitnessKind::Rd => "r",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "c" => Ok(WitnessKind::Cd),
            "r" => Ok(WitnessKind::Rd),
            other => Err(QwError::Parse(format!("unknown witness '{other}' (c|r)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMethod {
    ClosedForm,
    Bisection,
}

impl ThresholdMethod {
    pub fn name(self) -> &'static str {
        match self {
            ThresholdMethod::ClosedForm => "closed_form",
            ThresholdMethod::Bisection => "bisection",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdResult {
    pub d: usize,
    pub family: NoiseFamily,
    pub witness: WitnessKind,
    /// Smallest `p` with a strict violation; `None` if no `p ≤ 1` violates.
    pub p_star: Option<f64>,
    pub method: ThresholdMethod,
    /// Bisection value when the cross-check ran.
    pub p_check: Option<f64>,
}

/// Half-open interval `(lo, hi]` of noise parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(QwError::Domain(format!("noise parameter must lie in [0,1], got {p}")));
    }
    Ok(())
}

/// Bell-basis weights of the family member at `p`.
pub fn family_weights(d: usize, family: NoiseFamily, p: f64) -> Result<BellCoefficients> {
    check_d(d)?;
    check_p(p)?;
    let mut coeffs = vec![0.0; d * d];
    match family.partner(d) {
        Some((l, m)) => {
            coeffs[0] += p;
            coeffs[l * d + m] += 1.0 - p;
        }
        None => {
            let w = (1.0 - p) / (d * d) as f64;
            coeffs.iter_mut().for_each(|c| *c = w);
            coeffs[0] += p;
        }
    }
    Ok(BellCoefficients { d, coeffs })
}

/// Density matrix of the family member at `p`.
pub fn noisy_state(d: usize, family: NoiseFamily, p: f64) -> Result<QuditState> {
    check_d(d)?;
    check_p(p)?;
    if d * d > max_dim() {
        return Err(QwError::Resource {
            what: "noisy two-qudit state".into(),
            needed: d * d,
            cap: max_dim(),
        });
    }
    let phi = ComplexMatrix::outer(&bell_vector(d, 0, 0)?).scale_real(p);
    let noise = match family.partner(d) {
        Some((l, m)) => ComplexMatrix::outer(&bell_vector(d, l, m)?),
        None => ComplexMatrix::identity(d * d).scale_real(1.0 / (d * d) as f64),
    };
    let rho = &phi + &noise.scale(C64::new(1.0 - p, 0.0));
    Ok(QuditState::from_density_unchecked(d, 2, rho))
}

/// Witness operators and their Bell coefficients at one `d`.
pub struct ThresholdContext {
    pub d: usize,
    pub m_value: f64,
    ops: WitnessOperators,
    coeff_c: BellCoefficients,
    coeff_r: BellCoefficients,
}

impl ThresholdContext {
    pub fn new(d: usize, m_value: f64) -> Result<Self> {
        let ops = WitnessOperators::new(d)?;
        let coeff_c = bell_coefficients(&ops.c, d)?;
        let coeff_r = bell_coefficients(&ops.r, d)?;
        Ok(Self {
            d,
            m_value,
            ops,
            coeff_c,
            coeff_r,
        })
    }

    fn bound(&self, witness: WitnessKind) -> f64 {
        match witness {
            WitnessKind::Cd => 1.0 + 1.0 / self.d as f64,
            WitnessKind::Rd => self.m_value,
        }
    }

    /// Affine `<W>(p) = a p + b`, read off the Bell coefficients.
    pub fn affine(&self, family: NoiseFamily, witness: WitnessKind) -> Result<(f64, f64)> {
        let coeffs = match witness {
            WitnessKind::Cd => &self.coeff_c,
            WitnessKind::Rd => &self.coeff_r,
        };
        let at0 = coeffs.expectation(&family_weights(self.d, family, 0.0)?);
        let at1 = coeffs.expectation(&family_weights(self.d, family, 1.0)?);
        Ok((at1 - at0, at0))
    }

    pub fn closed_form(&self, family: NoiseFamily, witness: WitnessKind) -> Result<Option<f64>> {
        let (a, b) = self.affine(family, witness)?;
        let bound = self.bound(witness);
        if b > bound {
            return Ok(Some(0.0));
        }
        if a <= 0.0 {
            return Ok(None);
        }
        let p = (bound - b) / a;
        Ok(if p >= 1.0 { None } else { Some(p.max(0.0)) })
    }

    fn dense_margin(&self, family: NoiseFamily, witness: WitnessKind, p: f64) -> Result<f64> {
        let rho = noisy_state(self.d, family, p)?;
        let (c, r) = self.ops.values(&rho)?;
        Ok(match witness {
            WitnessKind::Cd => c,
            WitnessKind::Rd => r,
        } - self.bound(witness))
    }

    /// Fixed 60-step bisection on the dense-matrix margin.
    pub fn bisection(&self, family: NoiseFamily, witness: WitnessKind) -> Result<Option<f64>> {
        if self.dense_margin(family, witness, 1.0)? <= 0.0 {
            return Ok(None);
        }
        if self.dense_margin(family, witness, 0.0)? > 0.0 {
            return Ok(Some(0.0));
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if self.dense_margin(family, witness, mid)? > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(Some((0.5 * (lo + hi)).clamp(0.0, 1.0)))
    }

    pub fn threshold(&self, family: NoiseFamily, witness: WitnessKind, check: bool) -> Result<ThresholdResult> {
        let p_star = self.closed_form(family, witness)?;
        let p_check = if check {
            let b = self.bisection(family, witness)?;
            let agree = match (p_star, b) {
                (Some(x), Some(y)) => (x - y).abs() <= THRESHOLD_AGREEMENT,
                (None, None) => true,
                // a threshold sitting right at p = 1 may fall on either side
                (Some(x), None) | (None, Some(x)) => x >= 1.0 - THRESHOLD_AGREEMENT,
            };
            if !agree {
                return Err(QwError::Contract(format!(
                    "closed-form threshold {p_star:?} disagrees with bisection {b:?} (d={}, {}, {})",
                    self.d,
                    family.name(),
                    witness.name()
                )));
            }
            b
        } else {
            None
        };
        Ok(ThresholdResult {
            d: self.d,
            family,
            witness,
            p_star,
            method: ThresholdMethod::ClosedForm,
            p_check,
        })
    }

    /// `X`: ψ(p) caught by `C_d` only; `Y`: φ(p) caught by `R_d` only.
    pub fn exclusive_regions(&self) -> Result<(Option<Interval>, Option<Interval>)> {
        let region = |family: NoiseFamily, first: WitnessKind, second: WitnessKind| -> Result<Option<Interval>> {
            let Some(lo) = self.closed_form(family, first)? else {
                return Ok(None);
            };
            let hi = self.closed_form(family, second)?.unwrap_or(1.0);
            Ok((hi - lo > REGION_TOL).then_some(Interval { lo, hi }))
        };
        Ok((
            region(NoiseFamily::PsiHalfShift, WitnessKind::Cd, WitnessKind::Rd)?,
            region(NoiseFamily::PhiUnitShift, WitnessKind::Rd, WitnessKind::Cd)?,
        ))
    }
}

/// Threshold for one (family, witness) cell. `m_value` is required for `R_d`.
pub fn threshold(d: usize, family: NoiseFamily, witness: WitnessKind, m_value: Option<f64>) -> Result<ThresholdResult> {
    let m = match (witness, m_value) {
        (WitnessKind::Rd, None) => {
            return Err(QwError::Domain("the R_d threshold needs the separable bound M_d".into()))
        }
        (_, m) => m.unwrap_or(f64::NAN),
    };
    ThresholdContext::new(d, m)?.threshold(family, witness, true)
}

/// Exclusive detection regions `(X, Y)`; both empty for `d ≤ 3`.
pub fn exclusive_regions(d: usize, m_value: f64) -> Result<(Option<Interval>, Option<Interval>)> {
    ThresholdContext::new(d, m_value)?.exclusive_regions()
}

/// One `d` of the threshold table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Figure2Row {
    pub d: usize,
    pub m_value: f64,
    /// Ordered by family (psi, phi, iso), then witness (c, r).
    pub thresholds: Vec<ThresholdResult>,
    pub region_x: Option<Interval>,
    pub region_y: Option<Interval>,
}

/// All six thresholds per `d` in `d_min..=d_max`, each cross-checked by bisection.
pub fn figure2_scan(d_min: usize, d_max: usize) -> Result<Vec<Figure2Row>> {
    check_d(d_min)?;
    if d_max < d_min {
        return Err(QwError::Domain(format!("empty range {d_min}..={d_max}")));
    }
    if d_max.checked_mul(d_max).is_none_or(|n| n > max_dim()) {
        return Err(QwError::Resource {
            what: "two-qudit operators".into(),
            needed: d_max.saturating_mul(d_max),
            cap: max_dim(),
        });
    }
    (d_min..=d_max)
        .into_par_iter()
        .map(|d| {
            let m_value = separable_bound_m(d, DEFAULT_TOL)?.m_value;
            let ctx = ThresholdContext::new(d, m_value)?;
            let mut thresholds = Vec::with_capacity(6);
            for family in NoiseFamily::ALL {
                for witness in WitnessKind::ALL {
                    thresholds.push(ctx.threshold(family, witness, true)?);
                }
            }
            let (region_x, region_y) = ctx.exclusive_regions()?;
            Ok(Figure2Row {
                d,
                m_value,
                thresholds,
                region_x,
                region_y,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qudit::{cos_omega, mes};

    fn m(d: usize) -> f64 {
        separable_bound_m(d, DEFAULT_TOL).unwrap().m_value
    }

    #[test]
    fn pure_limits() {
        let phi = mes(3).unwrap().density_matrix();
        for f in NoiseFamily::ALL {
            let s = noisy_state(3, f, 1.0).unwrap();
            assert!(s.density_matrix().max_abs_diff(&phi) < 1e-15);
        }
        let iso = noisy_state(3, NoiseFamily::Isotropic, 0.0).unwrap();
        assert!(iso.density_matrix().max_abs_diff(&ComplexMatrix::identity(9).scale_real(1.0 / 9.0)) < 1e-15);
        assert!(matches!(noisy_state(3, NoiseFamily::Isotropic, 1.2), Err(QwError::Domain(_))));
    }

    #[test]
    fn psi_half_bell_weights() {
        let s = noisy_state(4, NoiseFamily::PsiHalfShift, 0.5).unwrap();
        let bc = bell_coefficients(&s.density_matrix(), 4).unwrap();
        for l in 0..4 {
            for mm in 0..4 {
                let want = if (l, mm) == (0, 0) || (l, mm) == (2, 2) { 0.5 } else { 0.0 };
                assert!((bc.get(l, mm) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn c_thresholds_match_affine_oracle() {
        for d in 2..=8 {
            let df = d as f64;
            let t = threshold(d, NoiseFamily::PsiHalfShift, WitnessKind::Cd, None).unwrap();
            assert!((t.p_star.unwrap() - (df + 1.0) / (2.0 * df)).abs() < 1e-12);
            let t = threshold(d, NoiseFamily::Isotropic, WitnessKind::Cd, None).unwrap();
            assert!((t.p_star.unwrap() - 0.5).abs() < 1e-12);
            let t = threshold(d, NoiseFamily::PhiUnitShift, WitnessKind::Cd, None).unwrap();
            assert!((t.p_star.unwrap() - 1.0 / df).abs() < 1e-12);
            assert!((t.p_check.unwrap() - 1.0 / df).abs() < 1e-8);
        }
    }

    #[test]
    fn r_thresholds_match_affine_oracle() {
        for d in 2..=7 {
            let md = m(d);
            let c = cos_omega(d, 1);
            let h = d / 2;
            // <R>(ψ) = 2p + (1−p)·2cos(hω)
            let b_psi = 2.0 * cos_omega(d, h as i64);
            let want_psi = (md - b_psi) / (2.0 - b_psi);
            let want_phi = (md - 1.0 - c) / (1.0 - c);
            let want_iso = md / 2.0;
            let got = |f| threshold(d, f, WitnessKind::Rd, Some(md)).unwrap().p_star.unwrap();
            assert!((got(NoiseFamily::PsiHalfShift) - want_psi).abs() < 1e-12, "d={d}");
            assert!((got(NoiseFamily::PhiUnitShift) - want_phi.max(0.0)).abs() < 1e-12, "d={d}");
            assert!((got(NoiseFamily::Isotropic) - want_iso).abs() < 1e-12, "d={d}");
        }
    }

    #[test]
    fn r_threshold_needs_bound() {
        assert!(matches!(
            threshold(4, NoiseFamily::Isotropic, WitnessKind::Rd, None),
            Err(QwError::Domain(_))
        ));
    }

    #[test]
    fn qubit_row_is_three_quarters() {
        let rows = figure2_scan(2, 2).unwrap();
        let t = &rows[0].thresholds;
        assert!((t[0].p_star.unwrap() - 0.75).abs() < 1e-12);
        assert!((t[1].p_star.unwrap() - 0.75).abs() < 1e-9);
    }

    #[test]
    fn regions() {
        for d in [2, 3] {
            assert_eq!(exclusive_regions(d, m(d)).unwrap(), (None, None));
        }
        for d in 4..=8 {
            let (x, y) = exclusive_regions(d, m(d)).unwrap();
            let x = x.unwrap();
            let y = y.unwrap();
            assert!(x.hi > x.lo && y.hi > y.lo);
            assert!((x.lo - (d as f64 + 1.0) / (2.0 * d as f64)).abs() < 1e-12);
            assert!((y.hi - 1.0 / d as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn affine_and_monotone() {
        let d = 5;
        let ctx = ThresholdContext::new(d, m(d)).unwrap();
        for f in NoiseFamily::ALL {
            for w in WitnessKind::ALL {
                let (a, b) = ctx.affine(f, w).unwrap();
                assert!(a >= 0.0);
                let mut prev = f64::NEG_INFINITY;
                for i in 0..=100 {
                    let p = i as f64 / 100.0;
                    let v = ctx.dense_margin(f, w, p).unwrap() + ctx.bound(w);
                    assert!((v - (a * p + b)).abs() < 1e-10);
                    assert!(v >= prev - 1e-12);
                    prev = v;
                }
            }
        }
    }

    #[test]
    fn scan_ordering_and_range_checks() {
        let rows = figure2_scan(3, 5).unwrap();
        assert_eq!(rows.iter().map(|r| r.d).collect::<Vec<_>>(), vec![3, 4, 5]);
        let order: Vec<_> = rows[0].thresholds.iter().map(|t| (t.family, t.witness)).collect();
        assert_eq!(order[0], (NoiseFamily::PsiHalfShift, WitnessKind::Cd));
        assert_eq!(order[5], (NoiseFamily::Isotropic, WitnessKind::Rd));
        assert!(figure2_scan(5, 4).is_err());
        assert!(figure2_scan(1, 4).is_err());
        assert!(matches!(figure2_scan(2, 100), Err(QwError::Resource { .. })));
    }
}
