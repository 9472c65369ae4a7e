//! Self-consistent solutions of the spherical-spin constraints.
//!
//! Thermal equilibrium at temperature `T` and the dissipative steady state at
//! rate `gamma` each admit an ordered (displaced, `h != 0`) and a disordered
//! (`h = 0`) solution. The solvers below pick the physical one, classify the
//! phase and tabulate phase diagrams.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numerics::{coth, find_root, Bracket};

/// `|h^2|` (equilibrium) or `|g^2 - 4g + gamma^2|` (steady state) below which a
/// point is labelled critical.
pub const CRITICAL_TOL: f64 = 1e-10;

/// Bracket width at which the disordered frequency is accepted.
const FREQUENCY_ROOT_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Ordered,
    Disordered,
    Critical,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Ordered => "ordered",
            Phase::Disordered => "disordered",
            Phase::Critical => "critical",
        }
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSolution {
    pub g: f64,
    pub temperature: f64,
    pub phase: Phase,
    pub omega: f64,
    /// Rescaled driving; non-negative (the `h >= 0` branch of the degenerate pair).
    pub h: f64,
    /// Order parameter `h / omega`.
    pub alpha: f64,
    /// Thermal occupation of the oscillator.
    pub occupation: f64,
}

/// `coth(omega / 2T)` with the exact `T = 0` limit.
fn thermal_coth(omega: f64, temperature: f64) -> Result<f64> {
    if temperature == 0.0 {
        Ok(1.0)
    } else {
        coth(omega / (2.0 * temperature))
    }
}

fn occupation(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        0.0
    } else {
        1.0 / (omega / temperature).exp_m1()
    }
}

/// Squared field of the ordered solution, `sqrt(g)/2 - (g/4) coth(sqrt(g)/2T)`.
/// Positive exactly where the ordered phase exists.
pub fn ordered_field_squared(g: f64, temperature: f64) -> Result<f64> {
    let root_g = g.sqrt();
    Ok(0.5 * root_g - 0.25 * g * thermal_coth(root_g, temperature)?)
}

fn check_equilibrium_args(g: f64, temperature: f64) -> Result<()> {
    if !(g > 0.0) || !g.is_finite() {
        return Err(domain(format!("g must be positive and finite, got {g}")));
    }
    if !(temperature >= 0.0) || !temperature.is_finite() {
        return Err(domain(format!("temperature must be >= 0, got {temperature}")));
    }
    Ok(())
}

/// Disordered frequency, the root of `omega = (g/2) coth(omega / 2T)`.
fn disordered_frequency(g: f64, temperature: f64) -> Result<f64> {
    if temperature == 0.0 {
        return Ok(0.5 * g);
    }
    let f = |w: f64| w - 0.5 * g * coth(w / (2.0 * temperature)).unwrap_or(f64::NAN);
    let lo = 1e-12 * g.min(1.0);
    let mut hi = g;
    let mut grown = 0;
    while f(hi) <= 0.0 {
        hi *= 2.0;
        grown += 1;
        if grown > 200 || !hi.is_finite() {
            return Err(Error::SolverFailure(format!(
                "no bracket for the disordered frequency at g = {g}, T = {temperature}"
            )));
        }
    }
    let tol = FREQUENCY_ROOT_TOL * hi.max(1.0);
    find_root(f, Bracket::new(lo, hi)?, tol).map_err(|e| {
        Error::SolverFailure(format!(
            "disordered frequency at g = {g}, T = {temperature}: {e}"
        ))
    })
}

pub fn solve_equilibrium(g: f64, temperature: f64) -> Result<EquilibriumSolution> {
    check_equilibrium_args(g, temperature)?;
    let h_sq = ordered_field_squared(g, temperature)?;
    if h_sq.abs() <= CRITICAL_TOL {
        let omega = g.sqrt();
        return Ok(EquilibriumSolution {
            g,
            temperature,
            phase: Phase::Critical,
            omega,
            h: 0.0,
            alpha: 0.0,
            occupation: occupation(omega, temperature),
        });
    }
    if h_sq > 0.0 {
        let omega = g.sqrt();
        let h = h_sq.sqrt();
        return Ok(EquilibriumSolution {
            g,
            temperature,
            phase: Phase::Ordered,
            omega,
            h,
            alpha: h / omega,
            occupation: occupation(omega, temperature),
        });
    }
    let omega = disordered_frequency(g, temperature)?;
    Ok(EquilibriumSolution {
        g,
        temperature,
        phase: Phase::Disordered,
        omega,
        h: 0.0,
        alpha: 0.0,
        occupation: occupation(omega, temperature),
    })
}

impl EquilibriumSolution {
    /// Residuals of the two constraint equations
    /// `omega/g - 2h^2/omega^2 - coth(omega/2T)/2` and `h/g - h/omega^2`.
    pub fn residuals(&self) -> Result<(f64, f64)> {
        let c = thermal_coth(self.omega, self.temperature)?;
        let w2 = self.omega * self.omega;
        let r1 = self.omega / self.g - 2.0 * self.h * self.h / w2 - 0.5 * c;
        let r2 = self.h / self.g - self.h / w2;
        Ok((r1, r2))
    }
}

/// Critical temperature on the line `2/sqrt(g) = coth(sqrt(g) / 2T_c)`, `0 < g < 4`.
pub fn equilibrium_critical_temperature(g: f64) -> Result<f64> {
    if !(g > 0.0 && g < 4.0) {
        return Err(domain(format!("critical temperature needs 0 < g < 4, got {g}")));
    }
    let root_g = g.sqrt();
    let target = 2.0 / root_g;
    // increasing in T: coth(.) - 2/sqrt(g) goes from 1 - 2/sqrt(g) < 0 to +inf
    let f = |t: f64| coth(root_g / (2.0 * t)).unwrap_or(f64::NAN) - target;
    let lo = 1e-6;
    if f(lo) >= 0.0 {
        return Err(Error::SolverFailure(format!("T_c below {lo} for g = {g}")));
    }
    let mut hi = 1.0;
    while f(hi) <= 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::SolverFailure(format!("no T_c bracket for g = {g}")));
        }
    }
    find_root(f, Bracket::new(lo, hi)?, 1e-15)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NessSolution {
    pub g: f64,
    pub gamma: f64,
    pub phase: Phase,
    pub omega: f64,
    /// Non-positive (the sign carried by the steady-state protocol).
    pub h: f64,
    pub alpha: f64,
}

/// `g^2 - 4g + gamma^2`; non-positive inside the ordered window.
pub fn ness_discriminant(g: f64, gamma: f64) -> f64 {
    g * g - 4.0 * g + gamma * gamma
}

impl NessSolution {
    /// Disordered steady state: `h = alpha = 0` and the `T = 0` equilibrium
    /// frequency `g/2`. Defined for every `g > 0`.
    pub fn disordered(g: f64, gamma: f64) -> Self {
        Self {
            g,
            gamma,
            phase: Phase::Disordered,
            omega: 0.5 * g,
            h: 0.0,
            alpha: 0.0,
        }
    }
}

pub fn solve_ness(g: f64, gamma: f64) -> Result<NessSolution> {
    if !(g > 0.0) || !g.is_finite() {
        return Err(domain(format!("g must be positive and finite, got {g}")));
    }
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(domain(format!("gamma must be >= 0, got {gamma}")));
    }
    let radicand = 4.0 * g - gamma * gamma;
    if radicand <= 0.0 {
        return Err(domain(format!(
            "steady-state frequency is imaginary for 4g <= gamma^2 (g = {g}, gamma = {gamma})"
        )));
    }
    let disc = ness_discriminant(g, gamma);
    if disc >= CRITICAL_TOL {
        return Ok(NessSolution::disordered(g, gamma));
    }
    let omega = 0.5 * radicand.sqrt();
    if disc > -CRITICAL_TOL {
        return Ok(NessSolution {
            g,
            gamma,
            phase: Phase::Critical,
            omega,
            h: 0.0,
            alpha: 0.0,
        });
    }
    let h = if gamma == 0.0 {
        // equilibrium limit: omega = sqrt(g), |h| = the T = 0 ordered field
        -(0.5 * omega - 0.25 * g).sqrt()
    } else {
        -(g * gamma / radicand) * (1.0 - 2.0 * omega / g).abs().sqrt()
    };
    Ok(NessSolution {
        g,
        gamma,
        phase: Phase::Ordered,
        omega,
        h,
        alpha: h / omega,
    })
}

/// Boundaries `(g_minus, g_plus) = 2 -/+ sqrt(4 - gamma^2)` of the ordered window.
pub fn ness_critical_gs(gamma: f64) -> Result<(f64, f64)> {
    if !(0.0..=2.0).contains(&gamma) {
        return Err(domain(format!("ordered window exists only for 0 <= gamma <= 2, got {gamma}")));
    }
    let s = (4.0 - gamma * gamma).sqrt();
    // g_minus written without the 2 - s cancellation
    Ok((gamma * gamma / (2.0 + s), 2.0 + s))
}

/// Steady-state moments `(<a>, <aa>)` of the unconstrained dissipative
/// oscillator at frequency `omega`.
pub fn ness_unconstrained_moments(
    omega: f64,
    g: f64,
    gamma: f64,
) -> Result<(Complex64, Complex64)> {
    if !(omega > 0.0 && g > 0.0) {
        return Err(domain(format!("need omega > 0 and g > 0, got omega = {omega}, g = {g}")));
    }
    if !(gamma >= 0.0) {
        return Err(domain(format!("gamma must be >= 0, got {gamma}")));
    }
    if 2.0 * omega > g {
        return Err(domain(format!("moments need 2 omega <= g, got omega = {omega}, g = {g}")));
    }
    let mean_a = 0.5 * (1.0 - 2.0 * omega / g).sqrt() * Complex64::new(-gamma / (2.0 * omega), 1.0);
    let pref = (g - 2.0 * omega) / (4.0 * g * omega);
    let mean_aa = pref * Complex64::new((gamma * gamma - 2.0 * g) / (2.0 * omega), -gamma);
    Ok((mean_a, mean_aa))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagramMode {
    Equilibrium,
    Ness,
}

impl DiagramMode {
    pub fn axis2_name(&self) -> &'static str {
        match self {
            DiagramMode::Equilibrium => "T",
            DiagramMode::Ness => "gamma",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointState {
    pub phase: Phase,
    pub omega: f64,
    pub h: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRecord {
    pub g: f64,
    pub axis2: f64,
    pub state: Result<PointState>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub g: f64,
    pub axis2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiagramGrid {
    pub mode: DiagramMode,
    pub g_values: Vec<f64>,
    pub axis2_values: Vec<f64>,
    /// `g`-major: all `axis2` values for the first `g`, then the next `g`.
    pub records: Vec<GridRecord>,
    /// Refined boundary points, sorted by `(g, axis2)`.
    pub critical_line: Vec<CriticalPoint>,
}

impl PhaseDiagramGrid {
    pub fn record(&self, g_index: usize, axis2_index: usize) -> &GridRecord {
        &self.records[g_index * self.axis2_values.len() + axis2_index]
    }

    pub fn failures(&self) -> impl Iterator<Item = &GridRecord> {
        self.records.iter().filter(|r| r.state.is_err())
    }
}

fn classify(mode: DiagramMode, g: f64, axis2: f64) -> Result<PointState> {
    match mode {
        DiagramMode::Equilibrium => solve_equilibrium(g, axis2).map(|s| PointState {
            phase: s.phase,
            omega: s.omega,
            h: s.h,
            alpha: s.alpha,
        }),
        DiagramMode::Ness => {
            let s = if g > 0.0 && 4.0 * g <= axis2 * axis2 {
                // far outside the window; solve_ness rejects the imaginary frequency
                NessSolution::disordered(g, axis2)
            } else {
                solve_ness(g, axis2)?
            };
            Ok(PointState {
                phase: s.phase,
                omega: s.omega,
                h: s.h,
                alpha: s.alpha,
            })
        }
    }
}

/// Positive in the ordered phase, negative in the disordered one.
fn order_indicator(mode: DiagramMode, g: f64, axis2: f64) -> f64 {
    match mode {
        DiagramMode::Equilibrium => ordered_field_squared(g, axis2).unwrap_or(f64::NAN),
        DiagramMode::Ness => -ness_discriminant(g, axis2),
    }
}

fn check_axis(name: &str, values: &[f64], allow_zero: bool) -> Result<()> {
    if values.is_empty() {
        return Err(domain(format!("{name} axis is empty")));
    }
    for w in values.windows(2) {
        if !(w[0] < w[1]) {
            return Err(domain(format!("{name} axis must be strictly ascending")));
        }
    }
    let first = values[0];
    let ok = if allow_zero { first >= 0.0 } else { first > 0.0 };
    if !ok || !values.iter().all(|v| v.is_finite()) {
        return Err(domain(format!("{name} axis has out-of-range values")));
    }
    Ok(())
}

/// Locate the boundary between two neighbouring grid points that disagree on
/// order. `param` moves from `a` to `b` along one axis.
fn refine_boundary<F: Fn(f64) -> f64>(
    indicator: F,
    a: f64,
    b: f64,
    tol: f64,
) -> Option<f64> {
    let (fa, fb) = (indicator(a), indicator(b));
    if fa.abs() <= CRITICAL_TOL {
        return Some(a);
    }
    if fb.abs() <= CRITICAL_TOL {
        return Some(b);
    }
    let bracket = Bracket::new(a.min(b), a.max(b)).ok()?;
    find_root(indicator, bracket, tol).ok()
}

fn is_ordered(r: &GridRecord) -> Option<bool> {
    r.state.as_ref().ok().map(|s| s.phase == Phase::Ordered)
}

/// Classify every grid point and refine the order/disorder boundary between
/// neighbours that disagree, along both axes.
pub fn phase_diagram(
    mode: DiagramMode,
    g_values: &[f64],
    axis2_values: &[f64],
    tol: f64,
) -> Result<PhaseDiagramGrid> {
    check_axis("g", g_values, false)?;
    check_axis(mode.axis2_name(), axis2_values, true)?;
    if !(tol > 0.0) {
        return Err(domain(format!("tolerance must be positive, got {tol}")));
    }
    let n2 = axis2_values.len();
    let records: Vec<GridRecord> = (0..g_values.len() * n2)
        .into_par_iter()
        .map(|idx| {
            let g = g_values[idx / n2];
            let axis2 = axis2_values[idx % n2];
            let state = classify(mode, g, axis2).map_err(|e| Error::AtGridPoint {
                g,
                axis2_name: mode.axis2_name(),
                axis2,
                source: Box::new(e),
            });
            GridRecord { g, axis2, state }
        })
        .collect();

    let mut critical_line = Vec::new();
    let at = |i: usize, j: usize| &records[i * n2 + j];
    for (j, &axis2) in axis2_values.iter().enumerate() {
        for i in 1..g_values.len() {
            let (left, right) = (at(i - 1, j), at(i, j));
            if let (Some(a), Some(b)) = (is_ordered(left), is_ordered(right)) {
                if a != b {
                    let ind = |g: f64| order_indicator(mode, g, axis2);
                    if let Some(g) = refine_boundary(ind, left.g, right.g, tol) {
                        critical_line.push(CriticalPoint { g, axis2 });
                    }
                }
            }
        }
    }
    for (i, &g) in g_values.iter().enumerate() {
        for j in 1..n2 {
            let (low, high) = (at(i, j - 1), at(i, j));
            if let (Some(a), Some(b)) = (is_ordered(low), is_ordered(high)) {
                if a != b {
                    let ind = |x: f64| order_indicator(mode, g, x);
                    if let Some(axis2) = refine_boundary(ind, low.axis2, high.axis2, tol) {
                        critical_line.push(CriticalPoint { g, axis2 });
                    }
                }
            }
        }
    }
    critical_line.sort_by(|p, q| p.g.total_cmp(&q.g).then(p.axis2.total_cmp(&q.axis2)));
    critical_line.dedup();

    Ok(PhaseDiagramGrid {
        mode,
        g_values: g_values.to_vec(),
        axis2_values: axis2_values.to_vec(),
        records,
        critical_line,
    })
}
