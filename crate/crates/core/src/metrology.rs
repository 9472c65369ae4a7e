//! Quantum and classical Fisher information for estimating `g`.
//!
//! At `T = 0` the spin is the displaced vacuum `D(alpha)|0_g>` of an oscillator
//! of frequency `omega` and mass `1/g`. Its quantum Fisher information has a
//! closed form in `alpha`, `omega` and their `g`-derivatives; photon counting
//! in a Fock basis of frequency `Omega` sees the same state as a displaced
//! squeezed vacuum.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{ness_critical_gs, solve_equilibrium, solve_ness, Phase};
use crate::numerics::{central_diff, ln_gamma_unchecked, ln_laguerre_assoc, DiffConfig};

/// Default bound on the probability mass left beyond the last photon number.
pub const DEFAULT_TAIL_THRESHOLD: f64 = 1e-10;

/// Outcomes with probability at or below this are left out of the Fisher sum.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// Tail threshold for squeezing sweeps, tight enough that truncation noise
/// stays far below the step-to-step changes in `F`.
pub const SWEEP_TAIL_THRESHOLD: f64 = 1e-13;

/// Below this displacement the photon statistics are taken as those of the
/// squeezed vacuum.
pub const SQUEEZED_VACUUM_SWITCH: f64 = 1e-6;

const SERIES_REL_TOL: f64 = 1e-14;
const SERIES_STALL_TERMS: usize = 10;
const SERIES_MAX_TERMS: usize = 20_000;
const MAX_PHOTON_NUMBER: usize = 20_000;

/// Bogoliubov squeezing between the oscillator basis and a measurement basis,
/// `zeta = r exp(2 i phi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezeParams {
    pub r: f64,
    pub phi: f64,
}

impl SqueezeParams {
    /// `exp(2 i phi)`, real for the two phases that occur (`+1` or `-1`).
    pub fn phase_sign(&self) -> f64 {
        if self.phi == 0.0 {
            1.0
        } else {
            (2.0 * self.phi).cos().round()
        }
    }

    pub fn zeta(&self) -> Complex64 {
        Complex64::new(self.r * self.phase_sign(), 0.0)
    }
}

/// `tanh r = |omega - g Omega| / (omega + g Omega)`, `phi = -arg(omega - g Omega)/2`.
pub fn squeezing_parameters(g: f64, omega: f64, omega_meas: f64) -> SqueezeParams {
    let scaled = g * omega_meas;
    let diff = omega - scaled;
    if diff == 0.0 {
        return SqueezeParams { r: 0.0, phi: 0.0 };
    }
    let r = (diff.abs() / (omega + scaled)).atanh();
    let phi = if diff > 0.0 { 0.0 } else { -0.5 * std::f64::consts::PI };
    SqueezeParams { r, phi }
}

/// Which of the two measurement frequencies realizing a given `r` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SqueezeBranch {
    /// `g Omega = omega e^{-2r}` (`Omega <= omega / g`).
    #[default]
    Below,
    /// `g Omega = omega e^{2r}`.
    Above,
}

/// Measurement frequency at which the `T = 0` ordered state appears squeezed by `r`.
pub fn omega_for_squeezing(g: f64, r: f64, branch: SqueezeBranch) -> Result<f64> {
    if !(g > 0.0 && g < 4.0) {
        return Err(domain(format!("g must lie in the ordered phase (0, 4), got {g}")));
    }
    if !(r >= 0.0) || !r.is_finite() {
        return Err(domain(format!("squeezing magnitude must be >= 0, got {r}")));
    }
    let matched = g.sqrt() / g;
    Ok(match branch {
        SqueezeBranch::Below => matched * (-2.0 * r).exp(),
        SqueezeBranch::Above => matched * (2.0 * r).exp(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QfiResult {
    pub g: f64,
    pub value: f64,
    pub term_displacement: f64,
    pub term_squeezing: f64,
}

impl QfiResult {
    /// Quantum Fisher information of `D(alpha)|0_g>` along a protocol
    /// `(omega(g), alpha(g))`:
    /// `[2 a' + (a/g)(w - g w')/w]^2 + [1/g - w'/w]^2 / 2`.
    pub fn from_protocol(g: f64, omega: f64, d_omega: f64, alpha: f64, d_alpha: f64) -> Self {
        let displacement = 2.0 * d_alpha + (alpha / g) * (omega - g * d_omega) / omega;
        let squeezing = 1.0 / g - d_omega / omega;
        let term_displacement = displacement * displacement;
        let term_squeezing = 0.5 * squeezing * squeezing;
        Self {
            g,
            value: term_displacement + term_squeezing,
            term_displacement,
            term_squeezing,
        }
    }
}

fn check_ordered_equilibrium(g: f64) -> Result<()> {
    if !(g > 0.0 && g < 4.0) {
        return Err(domain(format!("g must lie in the ordered phase (0, 4), got {g}")));
    }
    Ok(())
}

/// Closed-form `T = 0` ordered-phase quantities `(omega, omega', alpha, alpha')`.
fn equilibrium_protocol(g: f64) -> (f64, f64, f64, f64) {
    let root_g = g.sqrt();
    let alpha = (0.5 / root_g - 0.25).sqrt();
    let d_alpha = -1.0 / (8.0 * g * root_g * alpha);
    (root_g, 0.5 / root_g, alpha, d_alpha)
}

pub fn qfi_equilibrium(g: f64) -> Result<QfiResult> {
    check_ordered_equilibrium(g)?;
    let (omega, d_omega, alpha, d_alpha) = equilibrium_protocol(g);
    Ok(QfiResult::from_protocol(g, omega, d_omega, alpha, d_alpha))
}

/// Zero: `alpha = 0` and `omega = g/2` cancel both terms.
pub fn qfi_disordered(g: f64) -> Result<QfiResult> {
    if !(g > 4.0) || !g.is_finite() {
        return Err(domain(format!("disordered phase needs g > 4, got {g}")));
    }
    Ok(QfiResult::from_protocol(g, 0.5 * g, 0.5, 0.0, 0.0))
}

/// QFI along the steady-state protocol; `alpha'` by a central difference
/// kept inside the ordered window.
pub fn qfi_ness(g: f64, gamma: f64) -> Result<QfiResult> {
    let sol = solve_ness(g, gamma)?;
    if sol.phase != Phase::Ordered {
        return Err(Error::Phase(format!(
            "steady state at g = {g}, gamma = {gamma} is {}",
            sol.phase
        )));
    }
    let (g_lo, g_hi) = ness_critical_gs(gamma)?;
    let clearance = (g - g_lo).min(g_hi - g);
    let mut cfg = DiffConfig::default_at(g);
    if cfg.reach() > 0.25 * clearance {
        cfg.step = 0.25 * clearance / (cfg.reach() / cfg.step);
    }
    let alpha_at = |x: f64| match solve_ness(x, gamma) {
        Ok(s) if s.phase == Phase::Ordered => s.alpha,
        _ => f64::NAN,
    };
    let d_alpha = central_diff(alpha_at, g, cfg).map_err(|_| Error::StencilOutOfPhase {
        g,
        lo: g - cfg.reach(),
        hi: g + cfg.reach(),
    })?;
    let d_omega = 1.0 / (4.0 * g - gamma * gamma).sqrt();
    Ok(QfiResult::from_protocol(g, sol.omega, d_omega, sol.alpha, d_alpha))
}

/// Coefficients `(c1, c2)` of `d/dg |0_SQS> = c1 |1_SQS> + c2 |2_SQS>`.
pub fn derivative_state_coefficients(g: f64) -> Result<(f64, f64)> {
    check_ordered_equilibrium(g)?;
    let (omega, d_omega, alpha, d_alpha) = equilibrium_protocol(g);
    let c1 = d_alpha + (alpha / (2.0 * g)) * (omega - g * d_omega) / omega;
    let c2 = (1.0 / g - d_omega / omega) / 2f64.powf(1.5);
    Ok((c1, c2))
}

/// `1 / sqrt(nu F)`.
pub fn cramer_rao_bound(fisher: f64, nu: u64) -> Result<f64> {
    if !(fisher > 0.0) || !fisher.is_finite() {
        return Err(domain(format!("Fisher information must be positive, got {fisher}")));
    }
    if nu == 0 {
        return Err(domain("need at least one repetition"));
    }
    Ok(1.0 / (nu as f64 * fisher).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonCountDistribution {
    pub omega_meas: f64,
    /// `p_0 .. p_M`, normalized to unit mass.
    pub probs: Vec<f64>,
    /// Mass beyond `p_M` (`1 - raw_mass`, clamped at zero).
    pub tail_mass: f64,
    /// `Σ p_m` as evaluated, before renormalization.
    pub raw_mass: f64,
}

impl PhotonCountDistribution {
    pub(crate) fn from_raw(omega_meas: f64, mut probs: Vec<f64>) -> Self {
        let raw_mass: f64 = probs.iter().sum();
        if (raw_mass - 1.0).abs() > 1e-8 && raw_mass > 1.0 {
            log::warn!("photon-count mass exceeds one before renormalization: {raw_mass}");
        }
        for p in probs.iter_mut() {
            *p /= raw_mass;
        }
        Self {
            omega_meas,
            probs,
            tail_mass: (1.0 - raw_mass).max(0.0),
            raw_mass,
        }
    }
}

/// State of the `T = 0` ordered spin as seen from the measurement basis.
#[derive(Debug, Clone, Copy)]
struct MeasurementFrame {
    /// Displacement in measurement-basis ladder operators.
    beta: f64,
    tanh_r: f64,
    phase_sign: f64,
    ln_sech_r: f64,
}

impl MeasurementFrame {
    fn new(g: f64, omega_meas: f64) -> Result<Self> {
        check_ordered_equilibrium(g)?;
        if !(omega_meas > 0.0) || !omega_meas.is_finite() {
            return Err(domain(format!("measurement frequency must be positive, got {omega_meas}")));
        }
        let sol = solve_equilibrium(g, 0.0)?;
        let sq = squeezing_parameters(g, sol.omega, omega_meas);
        Ok(Self {
            // D(alpha) built from a_g equals D(beta) built from a_Omega
            beta: sol.alpha * (g * omega_meas / sol.omega).sqrt(),
            tanh_r: sq.r.tanh(),
            phase_sign: sq.phase_sign(),
            ln_sech_r: -sq.r.cosh().ln(),
        })
    }

    /// Amplitude `<m_Omega| D(beta) S(zeta) |0_Omega>`, real for real `beta`, `zeta`.
    fn amplitude(&self, m: usize) -> Result<f64> {
        if self.beta.abs() < SQUEEZED_VACUUM_SWITCH {
            return Ok(self.squeezed_vacuum_amplitude(m));
        }
        let x = self.beta * self.beta;
        let ln_beta = self.beta.ln();
        let ln_two_t = (2.0 * self.tanh_r).ln();
        let ln_prefactor = 0.5 * self.ln_sech_r
            - 0.5 * std::f64::consts::PI.ln()
            - 0.5 * ln_gamma_unchecked(m as f64 + 1.0)
            - 0.5 * x;

        let mut sum = 0.0;
        let mut stall = 0;
        for n in 0..SERIES_MAX_TERMS {
            let term = if n > 0 && self.tanh_r == 0.0 {
                0.0
            } else {
                let k = m as i64 - 2 * n as i64;
                let (l_sign, l_ln) = ln_laguerre_assoc(2 * n, k, x);
                if l_sign == 0.0 {
                    0.0
                } else {
                    let power = if n == 0 { 0.0 } else { n as f64 * ln_two_t };
                    let ln_mag = ln_prefactor
                        + ln_gamma_unchecked(n as f64 + 0.5)
                        + power
                        + k as f64 * ln_beta
                        + l_ln;
                    let sign = if n.is_multiple_of(2) { 1.0 } else { -self.phase_sign };
                    sign * l_sign * ln_mag.exp()
                }
            };
            sum += term;
            if term.abs() <= SERIES_REL_TOL * sum.abs() || (term == 0.0 && sum == 0.0) {
                stall += 1;
            } else {
                stall = 0;
            }
            if stall >= SERIES_STALL_TERMS && 2 * n > m {
                return Ok(sum);
            }
        }
        Err(Error::SeriesDivergence(format!(
            "photon number {m}: no convergence in {SERIES_MAX_TERMS} terms (tanh r = {})",
            self.tanh_r
        )))
    }

    fn squeezed_vacuum_amplitude(&self, m: usize) -> f64 {
        if m % 2 == 1 {
            return 0.0;
        }
        let n = m / 2;
        if n > 0 && self.tanh_r == 0.0 {
            return 0.0;
        }
        // sqrt(sech r) (-e^{2i phi} tanh r)^n sqrt((2n)!) / (2^n n!)
        let power = if n == 0 { 0.0 } else { n as f64 * self.tanh_r.ln() };
        let ln_mag = 0.5 * self.ln_sech_r + power + 0.5 * ln_gamma_unchecked(m as f64 + 1.0)
            - n as f64 * 2f64.ln()
            - ln_gamma_unchecked(n as f64 + 1.0);
        let sign = if n.is_multiple_of(2) { 1.0 } else { -self.phase_sign };
        sign * ln_mag.exp()
    }
}

/// Photon-count amplitudes `c_0 .. c_{len-1}` in the measurement basis.
pub fn photon_count_amplitudes(g: f64, omega_meas: f64, len: usize) -> Result<Vec<f64>> {
    let frame = MeasurementFrame::new(g, omega_meas)?;
    (0..len).map(|m| frame.amplitude(m)).collect()
}

/// Photon-count distribution for the `T = 0` ordered state, extended until
/// the missing mass drops below `tail_threshold`.
pub fn photon_count_probabilities(
    g: f64,
    omega_meas: f64,
    tail_threshold: f64,
) -> Result<PhotonCountDistribution> {
    if !(tail_threshold > 0.0) {
        return Err(domain(format!("tail threshold must be positive, got {tail_threshold}")));
    }
    let frame = MeasurementFrame::new(g, omega_meas)?;
    let mut probs = Vec::new();
    let mut mass = 0.0;
    // the running sum cannot resolve a deficit below its own rounding error
    let mut floor = tail_threshold;
    while 1.0 - mass >= floor {
        if probs.len() >= MAX_PHOTON_NUMBER {
            return Err(Error::SeriesDivergence(format!(
                "photon distribution still missing {} after {MAX_PHOTON_NUMBER} outcomes",
                1.0 - mass
            )));
        }
        let c = frame.amplitude(probs.len())?;
        let p = c * c;
        mass += p;
        probs.push(p);
        floor = tail_threshold.max(16.0 * f64::EPSILON * probs.len() as f64);
    }
    Ok(PhotonCountDistribution::from_raw(omega_meas, probs))
}

/// Distribution restricted to the first `len` outcomes and renormalized.
pub fn photon_count_probabilities_truncated(
    g: f64,
    omega_meas: f64,
    len: usize,
) -> Result<PhotonCountDistribution> {
    if len == 0 {
        return Err(domain("need at least one outcome"));
    }
    let probs = photon_count_amplitudes(g, omega_meas, len)?
        .into_iter()
        .map(|c| c * c)
        .collect();
    Ok(PhotonCountDistribution::from_raw(omega_meas, probs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherResult {
    pub g: f64,
    pub omega_meas: f64,
    pub value: f64,
    /// `value / qfi_equilibrium(g)`.
    pub normalized: f64,
    /// Outcomes at or below [`PROBABILITY_FLOOR`], scored as `4 (dc/dg)^2`
    /// from the real amplitude instead of `(dp)^2 / p`.
    pub excluded_terms: usize,
    pub excluded_mass: f64,
    /// Part of `value` contributed by those outcomes.
    pub excluded_contribution: f64,
}

/// Classical Fisher information of photon counting at frequency `omega_meas`.
///
/// Every stencil point uses the outcome count `M` fixed at the centre.
pub fn fisher_information(
    g: f64,
    omega_meas: f64,
    cfg: DiffConfig,
    tail_threshold: f64,
) -> Result<FisherResult> {
    check_ordered_equilibrium(g)?;
    let (lo, hi) = (g - cfg.reach(), g + cfg.reach());
    if lo <= 0.0 || hi >= 4.0 {
        return Err(Error::StencilOutOfPhase { g, lo, hi });
    }
    let center = photon_count_probabilities(g, omega_meas, tail_threshold)?;
    let len = center.probs.len();
    let mut d_prob = vec![0.0; len];
    let mut d_amp = vec![0.0; len];
    for &(offset, weight) in cfg.stencil() {
        let amps = photon_count_amplitudes(g + offset * cfg.step, omega_meas, len)?;
        let mass: f64 = amps.iter().map(|c| c * c).sum();
        let scale = mass.sqrt();
        for ((dp, dc), c) in d_prob.iter_mut().zip(d_amp.iter_mut()).zip(&amps) {
            let c = c / scale;
            *dp += weight * c * c;
            *dc += weight * c;
        }
    }
    let mut value = 0.0;
    let mut excluded_terms = 0;
    let mut excluded_mass = 0.0;
    let mut excluded_contribution = 0.0;
    for ((p, dp), dc) in center.probs.iter().zip(&d_prob).zip(&d_amp) {
        if *p > PROBABILITY_FLOOR {
            let dp = dp / cfg.step;
            value += dp * dp / p;
        } else {
            let dc = dc / cfg.step;
            excluded_terms += 1;
            excluded_mass += p;
            excluded_contribution += 4.0 * dc * dc;
        }
    }
    value += excluded_contribution;
    if excluded_terms > 0 {
        log::debug!(
            "fisher_information(g = {g}, Omega = {omega_meas}): {excluded_terms} outcomes below floor, \
             mass {excluded_mass:e}, contribution {excluded_contribution:e}"
        );
    }
    let qfi = qfi_equilibrium(g)?.value;
    Ok(FisherResult {
        g,
        omega_meas,
        value,
        normalized: value / qfi,
        excluded_terms,
        excluded_mass,
        excluded_contribution,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezingPoint {
    pub r: f64,
    pub omega_meas: f64,
    pub fisher: f64,
}

/// Photon-counting Fisher information at fixed `g` as the measurement basis
/// is detuned to give squeezing `r`.
pub fn fisher_vs_squeezing(
    g: f64,
    r_values: &[f64],
    branch: SqueezeBranch,
) -> Result<Vec<SqueezingPoint>> {
    if r_values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(domain("squeezing values must be strictly ascending"));
    }
    r_values
        .par_iter()
        .map(|&r| {
            let omega_meas = omega_for_squeezing(g, r, branch)?;
            let f = fisher_information(g, omega_meas, DiffConfig::default_at(g), SWEEP_TAIL_THRESHOLD)?;
            Ok(SqueezingPoint {
                r,
                omega_meas,
                fisher: f.value,
            })
        })
        .collect()
}
