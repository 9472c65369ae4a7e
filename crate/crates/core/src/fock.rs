//! Truncated Fock-space oracle.
//!
//! States are built by exponentiating ladder-operator generators as dense
//! matrices, with no use of the closed forms in [`crate::metrology`]. A
//! basis of frequency `Omega` has position operator `x = (a + a^dag) / sqrt(2 Omega)`,
//! so the oscillator of frequency `omega` and mass `1/g` has matched basis
//! `Omega = omega / g`.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::metrology::{squeezing_parameters, PhotonCountDistribution};
use crate::model::solve_equilibrium;

pub const DEFAULT_DIM: usize = 64;
pub const MAX_DIM: usize = 1024;
pub const MIN_OPERATOR_DIM: usize = 16;

/// Largest mass allowed in the untrusted top block of a state.
pub const TAIL_TOL: f64 = 1e-10;
pub const UNITARITY_TOL: f64 = 1e-8;
pub const NORM_TOL: f64 = 1e-10;

/// Relative shift allowed between fidelity QFIs in two reference bases.
pub const BASIS_SHIFT_TOL: f64 = 1e-4;

/// Top rows excluded from trust checks.
pub fn truncation_margin(dim: usize) -> usize {
    dim / 4
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    matrix: DMatrix<Complex64>,
}

impl FockOperator {
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() < 2 {
            return Err(domain(format!(
                "operator must be square with dim >= 2, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    /// `a[m, m+1] = sqrt(m+1)`.
    pub fn annihilation(dim: usize) -> Self {
        let mut matrix = DMatrix::zeros(dim, dim);
        for m in 0..dim.saturating_sub(1) {
            matrix[(m, m + 1)] = c(((m + 1) as f64).sqrt());
        }
        Self { matrix }
    }

    pub fn creation(dim: usize) -> Self {
        Self::annihilation(dim).adjoint()
    }

    pub fn number(dim: usize) -> Self {
        Self {
            matrix: DMatrix::from_fn(dim, dim, |i, j| if i == j { c(i as f64) } else { c(0.0) }),
        }
    }

    /// `x = (a + a^dag) / sqrt(2 Omega)`.
    pub fn position(dim: usize, basis_freq: f64) -> Self {
        let a = Self::annihilation(dim);
        let scale = c((2.0 * basis_freq).sqrt().recip());
        Self {
            matrix: (&a.matrix + a.matrix.adjoint()) * scale,
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self {
            matrix: &self.matrix * &other.matrix,
        }
    }

    pub fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        &self.matrix * v
    }

    /// Matrix exponential by scaling and squaring around a Taylor kernel.
    /// Real generators are exponentiated in real arithmetic.
    pub fn exp(&self) -> Self {
        if self.matrix.iter().all(|z| z.im == 0.0) {
            let real = expm(&self.matrix.map(|z| z.re));
            return Self {
                matrix: real.map(c),
            };
        }
        Self {
            matrix: expm(&self.matrix),
        }
    }

    /// `max |U^dag U - I|` over the trusted `(dim - margin)` block.
    pub fn unitarity_defect(&self) -> f64 {
        let trusted = self.dim() - truncation_margin(self.dim());
        let product = self.matrix.adjoint() * &self.matrix;
        let mut worst = 0.0f64;
        for i in 0..trusted {
            for j in 0..trusted {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((product[(i, j)] - c(target)).norm());
            }
        }
        worst
    }

    fn checked_unitary(self, what: &str) -> Result<Self> {
        let defect = self.unitarity_defect();
        if !(defect <= UNITARITY_TOL) {
            return Err(Error::Truncation(format!(
                "{what} at dim {}: unitarity defect {defect:e}",
                self.dim()
            )));
        }
        Ok(self)
    }
}

fn one_norm<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> f64 {
    m.column_iter()
        .map(|col| col.iter().map(|z| z.clone().modulus()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn expm<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> DMatrix<T> {
    let dim = m.nrows();
    let norm = one_norm(m);
    let squarings = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as i32
    } else {
        0
    };
    let scaled = m * T::from_real(0.5f64.powi(squarings));
    let mut result = DMatrix::<T>::identity(dim, dim);
    let mut term = DMatrix::<T>::identity(dim, dim);
    for k in 1..=40 {
        term = &term * &scaled;
        term *= T::from_real(1.0 / k as f64);
        result += &term;
        if one_norm(&term) <= f64::EPSILON * 1e-2 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

fn check_operator_dim(dim: usize) -> Result<()> {
    if dim < MIN_OPERATOR_DIM {
        return Err(domain(format!("dim must be >= {MIN_OPERATOR_DIM}, got {dim}")));
    }
    Ok(())
}

/// `D(alpha) = exp(alpha a^dag - alpha^* a)`.
pub fn displacement(dim: usize, alpha: Complex64) -> Result<FockOperator> {
    check_operator_dim(dim)?;
    let a = FockOperator::annihilation(dim).matrix;
    let generator = a.adjoint() * alpha - a * alpha.conj();
    FockOperator { matrix: generator }.exp().checked_unitary("displacement")
}

/// `S(zeta) = exp((zeta^*/2) a^2 - (zeta/2) a^dag^2)`.
pub fn squeeze(dim: usize, zeta: Complex64) -> Result<FockOperator> {
    check_operator_dim(dim)?;
    let a = FockOperator::annihilation(dim).matrix;
    let a2 = &a * &a;
    let generator = &a2 * (zeta.conj() * 0.5) - a2.adjoint() * (zeta * 0.5);
    FockOperator { matrix: generator }.exp().checked_unitary("squeeze")
}

pub fn build_operators(
    dim: usize,
    alpha: Complex64,
    zeta: Complex64,
) -> Result<(FockOperator, FockOperator)> {
    Ok((displacement(dim, alpha)?, squeeze(dim, zeta)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockStateVector {
    amplitudes: DVector<Complex64>,
    basis_freq: f64,
}

impl FockStateVector {
    /// Checks normalization and the tail bound.
    pub fn new(amplitudes: DVector<Complex64>, basis_freq: f64) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(domain("state needs at least two amplitudes"));
        }
        if !(basis_freq > 0.0) || !basis_freq.is_finite() {
            return Err(domain(format!("basis frequency must be positive, got {basis_freq}")));
        }
        let state = Self {
            amplitudes,
            basis_freq,
        };
        let norm = state.amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Truncation(format!(
                "state norm {norm} at dim {}",
                state.dim()
            )));
        }
        let tail = state.tail_mass();
        if tail > TAIL_TOL {
            return Err(Error::Truncation(format!(
                "tail mass {tail:e} above {TAIL_TOL:e} at dim {}",
                state.dim()
            )));
        }
        Ok(state)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn basis_freq(&self) -> f64 {
        self.basis_freq
    }

    /// `Σ |c_m|^2` over the top `margin` levels.
    pub fn tail_mass(&self) -> f64 {
        let start = self.dim() - truncation_margin(self.dim());
        self.amplitudes.rows(start, self.dim() - start).norm_squared()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    /// `<self|other>`; both states must share dimension and basis.
    pub fn overlap(&self, other: &Self) -> Result<Complex64> {
        self.check_compatible(other)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// `min_theta || self - e^{i theta} other ||^2 = 2 (1 - |<self|other>|)`
    /// evaluated without the cancellation in `1 - |<.|.>|`.
    pub fn distance_squared(&self, other: &Self) -> Result<f64> {
        let overlap = self.overlap(other)?;
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            c(1.0)
        };
        Ok((&self.amplitudes - &other.amplitudes * phase).norm_squared())
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() || self.basis_freq != other.basis_freq {
            return Err(domain(format!(
                "states live in different bases: (dim {}, Omega {}) vs (dim {}, Omega {})",
                self.dim(),
                self.basis_freq,
                other.dim(),
                other.basis_freq
            )));
        }
        Ok(())
    }
}

/// `D(beta) S(zeta) |0>` in the Fock basis of frequency `basis_freq`.
pub fn displaced_squeezed_vacuum(
    dim: usize,
    beta: Complex64,
    zeta: Complex64,
    basis_freq: f64,
) -> Result<FockStateVector> {
    let (d, s) = build_operators(dim, beta, zeta)?;
    let squeezed = s.matrix.column(0).into_owned();
    FockStateVector::new(d.apply(&squeezed), basis_freq)
}

/// `T = 0` state of the spin at coupling `g` in the basis of frequency `basis_freq`.
pub fn sqs_state(g: f64, basis_freq: f64, dim: usize) -> Result<FockStateVector> {
    if !(basis_freq > 0.0) || !basis_freq.is_finite() {
        return Err(domain(format!("basis frequency must be positive, got {basis_freq}")));
    }
    let sol = solve_equilibrium(g, 0.0)?;
    let sq = squeezing_parameters(g, sol.omega, basis_freq);
    // the displacement alpha refers to a_g; rescale to the basis ladder operators
    let beta = sol.alpha * (g * basis_freq / sol.omega).sqrt();
    displaced_squeezed_vacuum(dim, c(beta), sq.zeta(), basis_freq)
}

/// [`sqs_state`] starting at [`DEFAULT_DIM`] and doubling until the
/// truncation checks pass.
pub fn sqs_state_auto(g: f64, basis_freq: f64) -> Result<FockStateVector> {
    let mut dim = DEFAULT_DIM;
    loop {
        match sqs_state(g, basis_freq, dim) {
            Err(Error::Truncation(msg)) if dim < MAX_DIM => {
                log::debug!("sqs_state(g = {g}, Omega = {basis_freq}): {msg}; doubling");
                dim *= 2;
            }
            other => return other,
        }
    }
}

pub fn probabilities_numeric(g: f64, omega_meas: f64, dim: usize) -> Result<PhotonCountDistribution> {
    let state = sqs_state(g, omega_meas, dim)?;
    Ok(PhotonCountDistribution::from_raw(omega_meas, state.probabilities()))
}

/// `1e-4 max(1, |g|)`.
pub fn default_qfi_step(g: f64) -> f64 {
    1e-4 * g.abs().max(1.0)
}

fn check_qfi_stencil(g: f64, delta: f64) -> Result<()> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(domain(format!("step must be positive, got {delta}")));
    }
    let (lo, hi) = (g - delta, g + delta);
    let ordered = lo > 0.0 && hi < 4.0;
    let disordered = lo > 4.0 && hi.is_finite();
    if !(ordered || disordered) {
        return Err(Error::StencilOutOfPhase { g, lo, hi });
    }
    Ok(())
}

/// Fidelity QFI `8 (1 - |<psi(g)|psi(g +/- delta)>|) / delta^2`, averaged
/// over both sides, with all three states in one fixed basis.
pub fn qfi_numeric_in_basis(g: f64, delta: f64, dim: usize, basis_freq: f64) -> Result<f64> {
    check_qfi_stencil(g, delta)?;
    let center = sqs_state(g, basis_freq, dim)?;
    let mut total = 0.0;
    for side in [-1.0, 1.0] {
        let shifted = sqs_state(g + side * delta, basis_freq, dim)?;
        total += 4.0 * center.distance_squared(&shifted)? / (delta * delta);
    }
    Ok(0.5 * total)
}

/// Fidelity QFI in the basis matched at `g`, cross-checked in a second basis
/// at `1.5` times that frequency.
pub fn qfi_numeric(g: f64, delta: f64, dim: usize) -> Result<f64> {
    check_qfi_stencil(g, delta)?;
    let sol = solve_equilibrium(g, 0.0)?;
    let matched = sol.omega / g;
    let value = qfi_numeric_in_basis(g, delta, dim, matched)?;
    let other = qfi_numeric_in_basis(g, delta, dim, 1.5 * matched)?;
    if (value - other).abs() > BASIS_SHIFT_TOL * value.abs() + 1e-9 {
        return Err(Error::Truncation(format!(
            "fidelity QFI at g = {g} depends on the basis: {value} vs {other}"
        )));
    }
    Ok(value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    A,
    AA,
    AdagA,
    X,
    XX,
}

/// `<psi|O|psi>` with `O` built at the state's basis frequency.
pub fn moments(state: &FockStateVector, which: Observable) -> Complex64 {
    let dim = state.dim();
    let op = match which {
        Observable::A => FockOperator::annihilation(dim),
        Observable::AA => {
            let a = FockOperator::annihilation(dim);
            a.compose(&a)
        }
        Observable::AdagA => FockOperator::number(dim),
        Observable::X => FockOperator::position(dim, state.basis_freq),
        Observable::XX => {
            let x = FockOperator::position(dim, state.basis_freq);
            x.compose(&x)
        }
    };
    state.amplitudes.dotc(&op.apply(&state.amplitudes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrology::qfi_equilibrium;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn ladder_entries() {
        let a = FockOperator::annihilation(5);
        for i in 0..5 {
            for j in 0..5 {
                let expected = if j == i + 1 { (j as f64).sqrt() } else { 0.0 };
                assert_eq!(a.matrix()[(i, j)], c(expected));
            }
        }
        assert!(FockOperator::from_matrix(DMatrix::zeros(1, 1)).is_err());
        assert!(FockOperator::from_matrix(DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn zero_generators_give_identity() {
        let (d, s) = build_operators(16, c(0.0), c(0.0)).unwrap();
        assert_eq!(d, FockOperator::identity(16));
        assert_eq!(s, FockOperator::identity(16));
        assert!(build_operators(8, c(0.0), c(0.0)).is_err());
    }

    #[test]
    fn exp_agrees_with_eigen_route_on_hermitian_generator() {
        // exp(i t H) through the Hermitian eigendecomposition
        let dim = 24;
        let a = FockOperator::annihilation(dim).matrix;
        let h = &a + a.adjoint();
        let t = 0.7;
        let ours = FockOperator { matrix: &h * Complex64::new(0.0, t) }.exp();
        let real_h = h.map(|z| z.re);
        let eig = real_h.symmetric_eigen();
        let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| Complex64::new(0.0, t * e).exp()));
        let vecs = eig.eigenvectors.map(c);
        let reference = &vecs * phases * vecs.adjoint();
        let diff = (ours.matrix() - reference).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn coherent_state_amplitudes() {
        let state = displaced_squeezed_vacuum(40, c(0.5), c(0.0), 1.0).unwrap();
        for m in 0..30 {
            let expected = (-0.125f64).exp() * 0.5f64.powi(m as i32) / factorial(m).sqrt();
            assert!((state.amplitudes()[m] - c(expected)).norm() < 1e-10, "m = {m}");
        }
    }

    #[test]
    fn squeezed_vacuum_amplitudes() {
        let r: f64 = 0.6;
        let state = displaced_squeezed_vacuum(64, c(0.0), c(r), 1.0).unwrap();
        assert!((state.amplitudes()[0].norm_sqr() - 1.0 / r.cosh()).abs() < 1e-12);
        for m in (1..48).step_by(2) {
            assert!(state.amplitudes()[m].norm() < 1e-14);
        }
        // closed-form even amplitudes (-tanh r)^n sqrt((2n)!)/(2^n n!) sqrt(sech r)
        for n in 0..20 {
            let expected = (-r.tanh()).powi(n as i32) * factorial(2 * n).sqrt()
                / (2f64.powi(n as i32) * factorial(n))
                / r.cosh().sqrt();
            assert!((state.amplitudes()[2 * n] - c(expected)).norm() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn unitaries_pass_trusted_block_check() {
        let (d, s) = build_operators(64, c(1.2), Complex64::new(-0.4, 0.0)).unwrap();
        assert!(d.unitarity_defect() <= UNITARITY_TOL);
        assert!(s.unitarity_defect() <= UNITARITY_TOL);
    }

    #[test]
    fn truncation_is_reported() {
        assert!(matches!(
            displaced_squeezed_vacuum(16, c(3.0), c(0.0), 1.0),
            Err(Error::Truncation(_))
        ));
        let state = sqs_state_auto(0.01, 1.0).unwrap();
        assert!(state.dim() > DEFAULT_DIM);
    }

    #[test]
    fn matched_basis_gives_coherent_state() {
        let state = sqs_state(1.0, 1.0, 64).unwrap();
        let a = moments(&state, Observable::A);
        assert!((a - c(0.5)).norm() < 1e-12);
        assert!((moments(&state, Observable::AdagA) - c(0.25)).norm() < 1e-12);
        assert!((moments(&state, Observable::AA) - c(0.25)).norm() < 1e-12);
    }

    #[test]
    fn constraints_hold_in_any_basis() {
        for &(g, om) in &[(1.0, 1.0), (1.0, 3.0), (0.5, 0.4), (2.5, 0.2), (3.9, 1.0)] {
            let state = sqs_state(g, om, 128).unwrap();
            let sol = solve_equilibrium(g, 0.0).unwrap();
            let h0 = sol.h * (2.0 * sol.omega / g).sqrt();
            let xx = moments(&state, Observable::XX);
            let x = moments(&state, Observable::X);
            assert!((xx - c(1.0)).norm() <= 1e-8, "g={g} Omega={om}: <xx> = {xx}");
            assert!((x - c(h0)).norm() <= 1e-8, "g={g} Omega={om}: <x> = {x}");
        }
    }

    #[test]
    fn vacuum_variance_in_matched_basis() {
        for g in [0.5f64, 2.0, 6.0] {
            let omega = if g < 4.0 { g.sqrt() } else { 0.5 * g };
            let vac = displaced_squeezed_vacuum(16, c(0.0), c(0.0), omega / g).unwrap();
            assert!((moments(&vac, Observable::XX).re - g / (2.0 * omega)).abs() < 1e-14);
        }
    }

    #[test]
    fn parity_near_critical_point() {
        let state = sqs_state(4.0 - 1e-14, 1.0, 64).unwrap();
        for m in (1..48).step_by(2) {
            assert!(state.amplitudes()[m].norm() <= 1e-12);
        }
    }

    #[test]
    fn fidelity_qfi_examples() {
        let v = qfi_numeric(1.0, 1e-4, 64).unwrap();
        assert!(((v - 0.1875) / 0.1875).abs() < 1e-3, "{v}");
        assert!(qfi_numeric(5.0, 1e-4, 64).unwrap() <= 1e-6);
        let vals: Vec<f64> = [3.0, 3.5, 3.9].iter().map(|&g| qfi_numeric(g, 1e-4, 64).unwrap()).collect();
        assert!(vals[0] < vals[1] && vals[1] < vals[2], "{vals:?}");
        assert!(matches!(qfi_numeric(3.99995, 1e-4, 64), Err(Error::StencilOutOfPhase { .. })));
    }

    #[test]
    fn fidelity_qfi_tracks_closed_form() {
        for g in [0.3, 1.0, 2.0, 3.0, 3.8] {
            let v = qfi_numeric(g, default_qfi_step(g), 128).unwrap();
            let q = qfi_equilibrium(g).unwrap().value;
            assert!(((v - q) / q).abs() < 1e-3, "g = {g}: {v} vs {q}");
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let d = probabilities_numeric(1.0, 3.0, 64).unwrap();
        assert!((d.raw_mass - 1.0).abs() < 1e-8);
        let d = probabilities_numeric(1.0, 1.0, 64).unwrap();
        let mut poisson = (-0.25f64).exp();
        for (m, p) in d.probs.iter().take(30).enumerate() {
            if m > 0 {
                poisson *= 0.25 / m as f64;
            }
            assert!((p - poisson).abs() < 1e-12, "m = {m}");
        }
    }
}
