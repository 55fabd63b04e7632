//! Complex-coefficient polynomial, rational-function and transfer-matrix
//! algebra.
//!
//! All frequency-domain objects in the crate are rational functions of the
//! Laplace variable `s` with complex coefficients.  Rational functions are
//! kept in a normalized form (monic denominator, common factors cancelled
//! within [`tol::CANCEL_TOL`]) so that equality testing, pole extraction and
//! para-conjugation are deterministic.

use num_complex::Complex64;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::tol;

/// Errors produced by rational-function algebra.
#[derive(Debug, Clone, thiserror::Error)]
pub enum RationalError {
    /// Evaluation point is (numerically) a pole of the function.
    #[error("evaluation point {0} hits a pole of the rational function")]
    PoleHit(Complex64),
    /// Matrix (or scalar) inverse of something identically singular.
    #[error("determinant is identically zero; no inverse exists")]
    SingularMatrix,
    /// `hinf_norm` requires a stable argument.
    #[error("H-infinity norm is only defined for stable transfer functions")]
    UnstableInput,
    /// Guard against runaway degree growth; the synthesis constructions
    /// never need degrees beyond the cap.
    #[error("polynomial degree {0} exceeds the supported cap of {cap}", cap = tol::DEGREE_CAP)]
    DegreeCapExceeded(usize),
    /// Matrix dimensions do not match the requested operation.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

pub type Result<T> = std::result::Result<T, RationalError>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

// ---------------------------------------------------------------------------
// Polynomial
// ---------------------------------------------------------------------------

/// Polynomial in `s` with complex coefficients stored in ascending degree.
///
/// The zero polynomial is represented by an empty coefficient vector; for
/// nonzero polynomials the leading coefficient is nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
}

impl Polynomial {
    /// Builds a polynomial from ascending-degree coefficients, trimming
    /// leading coefficients that are negligible relative to the largest one.
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        let mut p = Polynomial { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Polynomial { coeffs: vec![ONE] }
    }

    pub fn constant(c: Complex64) -> Self {
        Polynomial::new(vec![c])
    }

    /// The monomial `s`.
    pub fn s() -> Self {
        Polynomial { coeffs: vec![ZERO, ONE] }
    }

    /// `leading * prod (s - r_j)` expanded into coefficients.
    pub fn from_roots(leading: Complex64, roots: &[Complex64]) -> Self {
        let mut coeffs = vec![leading];
        for &r in roots {
            // multiply by (s - r)
            let mut next = vec![ZERO; coeffs.len() + 1];
            for (k, &c) in coeffs.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * r;
            }
            coeffs = next;
        }
        Polynomial::new(coeffs)
    }

    fn trim(&mut self) {
        let max_mag = self
            .coeffs
            .iter()
            .map(|c| c.norm())
            .fold(0.0_f64, f64::max);
        let cut = 1e-14 * max_mag;
        while let Some(last) = self.coeffs.last() {
            if last.norm() <= cut {
                self.coeffs.pop();
            } else {
                break;
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree of the polynomial; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn leading(&self) -> Complex64 {
        *self.coeffs.last().unwrap_or(&ZERO)
    }

    /// Horner evaluation.
    pub fn eval(&self, s: Complex64) -> Complex64 {
        let mut acc = ZERO;
        for &c in self.coeffs.iter().rev() {
            acc = acc * s + c;
        }
        acc
    }

    /// Upper bound `sum |c_k| |s|^k`, used for scale-aware pole detection.
    pub fn eval_magnitude_bound(&self, s: Complex64) -> f64 {
        let r = s.norm();
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * r + c.norm();
        }
        acc
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() <= 1 {
            return Polynomial::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * k as f64)
            .collect();
        Polynomial::new(coeffs)
    }

    pub fn scale(&self, c: Complex64) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|&a| a * c).collect())
    }

    /// Para-conjugate `p^H` with `p^H(iw) = conj(p(iw))` for real `w`:
    /// coefficient `c_k` maps to `conj(c_k) * (-1)^k`.
    pub fn para_conjugate(&self) -> Polynomial {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                c.conj() * sign
            })
            .collect();
        Polynomial::new(coeffs)
    }

    /// Coefficients of `p(s + shift)` (Taylor shift).
    pub fn shift(&self, shift: Complex64) -> Polynomial {
        // Synthetic division by (s - (-shift)) applied repeatedly yields the
        // Taylor coefficients at -(-shift) = shift... done directly via
        // repeated Horner steps.
        let n = self.coeffs.len();
        if n == 0 {
            return Polynomial::zero();
        }
        let mut work = self.coeffs.clone();
        let mut out = vec![ZERO; n];
        for slot in out.iter_mut() {
            // divide work by (s - (-shift)) keeping the remainder
            let mut rem = ZERO;
            for c in work.iter_mut().rev() {
                let tmp = *c + rem * shift;
                rem = tmp;
                *c = tmp;
            }
            // after the loop, work[0] holds the remainder; the quotient is
            // work[1..] shifted down
            *slot = work.remove(0);
            if work.is_empty() {
                break;
            }
        }
        Polynomial::new(out)
    }

    /// All complex roots, found with the Durand-Kerner (Weierstrass)
    /// simultaneous iteration and a Newton polish.
    ///
    /// Degrees 1 and 2 use the closed forms.  A companion-matrix eigenvalue
    /// solver would need a complex nonsymmetric eigensolver, which the
    /// dependency set lacks; at the degrees used here (<= 16) the iteration
    /// is accurate and deterministic.
    pub fn roots(&self) -> Vec<Complex64> {
        let n = match self.degree() {
            None | Some(0) => return Vec::new(),
            Some(n) => n,
        };
        let lead = self.leading();
        let monic: Vec<Complex64> = self.coeffs.iter().map(|&c| c / lead).collect();
        match n {
            1 => return vec![-monic[0]],
            2 => {
                let (c, b) = (monic[0], monic[1]);
                let disc = (b * b - 4.0 * c).sqrt();
                // pick the sign that avoids cancellation in -b -+ disc
                let q = if (b + disc).norm() >= (b - disc).norm() {
                    -(b + disc) / 2.0
                } else {
                    -(b - disc) / 2.0
                };
                let r1 = q;
                let r2 = if q.norm() > 0.0 { c / q } else { ZERO };
                return vec![r1, r2];
            }
            _ => {}
        }

        // Cauchy-style bound on root magnitudes.
        let radius = 1.0
            + monic[..n]
                .iter()
                .map(|c| c.norm())
                .fold(0.0_f64, f64::max);
        let seed = Complex64::new(0.4, 0.9);
        let mut z: Vec<Complex64> = (0..n)
            .map(|j| radius * seed.powu(j as u32 + 1) / seed.norm().powi(j as i32))
            .collect();

        let eval_monic = |s: Complex64| -> Complex64 {
            let mut acc = ONE;
            for &c in monic[..n].iter().rev() {
                acc = acc * s + c;
            }
            acc
        };

        for _ in 0..400 {
            let mut max_step = 0.0_f64;
            for j in 0..n {
                let mut denom = ONE;
                for k in 0..n {
                    if k != j {
                        denom *= z[j] - z[k];
                    }
                }
                if denom.norm() == 0.0 {
                    // nudge coincident estimates apart
                    z[j] += Complex64::new(1e-8, 1e-8);
                    continue;
                }
                let step = eval_monic(z[j]) / denom;
                z[j] -= step;
                max_step = max_step.max(step.norm() / (1.0 + z[j].norm()));
            }
            if max_step < 1e-14 {
                break;
            }
        }

        // Newton polish against the original coefficients.
        let deriv = self.derivative();
        for r in z.iter_mut() {
            for _ in 0..3 {
                let d = deriv.eval(*r);
                if d.norm() < 1e-300 {
                    break;
                }
                let step = self.eval(*r) / d;
                if step.norm() < 1e-17 * (1.0 + r.norm()) {
                    break;
                }
                *r -= step;
            }
        }
        z
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(k, c)| match k {
                0 => format!("({c})"),
                1 => format!("({c})*s"),
                _ => format!("({c})*s^{k}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut coeffs = vec![ZERO; n];
        for (k, &c) in self.coeffs.iter().enumerate() {
            coeffs[k] += c;
        }
        for (k, &c) in rhs.coeffs.iter().enumerate() {
            coeffs[k] += c;
        }
        Polynomial::new(coeffs)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &rhs.scale(-ONE)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut coeffs = vec![ZERO; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Polynomial::new(coeffs)
    }
}

// ---------------------------------------------------------------------------
// RationalFunction
// ---------------------------------------------------------------------------

/// Rational function `num/den` in normalized form: the denominator is monic
/// and numerator/denominator roots closer than [`tol::CANCEL_TOL`] are
/// cancelled at construction time.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
}

impl RationalFunction {
    /// Normalizing constructor.  Panics if `den` is identically zero (that
    /// is a programming error, not a data condition) or the degree cap is
    /// exceeded.
    pub fn new(num: Polynomial, den: Polynomial) -> Self {
        Self::try_new(num, den).expect("rational function construction failed")
    }

    pub fn try_new(num: Polynomial, den: Polynomial) -> Result<Self> {
        assert!(!den.is_zero(), "rational function with zero denominator");
        let (num, den) = cancel_common_factors(num, den);
        let lead = den.leading();
        let num = num.scale(ONE / lead);
        // force the leading coefficient to exactly one so that
        // normalization is idempotent (lead * (1/lead) can be off by an ulp)
        let mut den_coeffs = den.scale(ONE / lead).coeffs().to_vec();
        *den_coeffs.last_mut().expect("nonzero denominator") = ONE;
        let den = Polynomial::new(den_coeffs);
        for d in [num.degree().unwrap_or(0), den.degree().unwrap_or(0)] {
            if d > tol::DEGREE_CAP {
                return Err(RationalError::DegreeCapExceeded(d));
            }
        }
        Ok(RationalFunction { num, den })
    }

    pub fn constant(c: Complex64) -> Self {
        RationalFunction {
            num: Polynomial::constant(c),
            den: Polynomial::one(),
        }
    }

    pub fn real_constant(x: f64) -> Self {
        Self::constant(Complex64::new(x, 0.0))
    }

    pub fn zero() -> Self {
        Self::constant(ZERO)
    }

    pub fn one() -> Self {
        Self::constant(ONE)
    }

    /// The identity map `s`.
    pub fn s() -> Self {
        RationalFunction {
            num: Polynomial::s(),
            den: Polynomial::one(),
        }
    }

    /// First-order factor `s + a` (as a polynomial over 1).
    pub fn linear(a: Complex64) -> Self {
        RationalFunction {
            num: Polynomial::new(vec![a, ONE]),
            den: Polynomial::one(),
        }
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// True when the function is a degree-0/degree-0 constant.
    pub fn as_constant(&self) -> Option<Complex64> {
        if self.den.degree() == Some(0) && self.num.degree().unwrap_or(0) == 0 {
            Some(self.num.coeffs().first().copied().unwrap_or(ZERO) / self.den.coeffs()[0])
        } else {
            None
        }
    }

    /// Evaluates at `s`, reporting [`RationalError::PoleHit`] when the
    /// denominator is negligible relative to its coefficient scale.
    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        let d = self.den.eval(s);
        let scale = self.den.eval_magnitude_bound(s).max(1e-300);
        if d.norm() < 1e-12 * scale {
            return Err(RationalError::PoleHit(s));
        }
        Ok(self.num.eval(s) / d)
    }

    /// Para-conjugate `f^H` with `f^H(iw) = conj(f(iw))`.
    pub fn para_conjugate(&self) -> RationalFunction {
        RationalFunction::new(self.num.para_conjugate(), self.den.para_conjugate())
    }

    pub fn inverse(&self) -> Result<RationalFunction> {
        if self.num.is_zero() {
            return Err(RationalError::SingularMatrix);
        }
        RationalFunction::try_new(self.den.clone(), self.num.clone())
    }

    /// Substitutes `s -> s + shift`.
    pub fn shift(&self, shift: Complex64) -> RationalFunction {
        RationalFunction::new(self.num.shift(shift), self.den.shift(shift))
    }

    /// Poles (denominator roots in normalized form).
    pub fn poles(&self) -> Vec<Complex64> {
        self.den.roots()
    }

    pub fn zeros(&self) -> Vec<Complex64> {
        self.num.roots()
    }

    /// All poles strictly in the open left half-plane.
    pub fn is_stable(&self) -> bool {
        self.poles().iter().all(|p| p.re < 0.0)
    }

    /// `tau` such that the function is analytic for `Re s > -tau`; infinite
    /// for polynomials (no poles).
    pub fn analytic_margin(&self) -> f64 {
        self.poles()
            .iter()
            .map(|p| -p.re)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_proper(&self) -> bool {
        self.num.degree().unwrap_or(0) <= self.den.degree().unwrap_or(0)
    }

    /// Grid-based estimate of the H-infinity norm (supremum of `|f(iw)|`),
    /// refined by golden-section search around the grid maximizer.
    ///
    /// The result is a lower-bound estimate at grid resolution.
    pub fn hinf_norm(&self, omegas: &[f64]) -> Result<f64> {
        if !self.is_stable() {
            return Err(RationalError::UnstableInput);
        }
        let mag = |w: f64| -> f64 {
            self.eval(Complex64::new(0.0, w))
                .map(|v| v.norm())
                .unwrap_or(f64::INFINITY)
        };
        Ok(refine_grid_maximum(omegas, mag))
    }
}

/// Default frequency grid for norm estimation: log-spaced magnitudes over
/// [1e-4, 1e4], mirrored about zero, plus the origin.
pub fn default_hinf_grid() -> Vec<f64> {
    let n = 2048;
    let (lo, hi) = (1e-4_f64, 1e4_f64);
    let mut grid = Vec::with_capacity(2 * n + 1);
    grid.push(0.0);
    for k in 0..n {
        let w = lo * (hi / lo).powf(k as f64 / (n - 1) as f64);
        grid.push(w);
        grid.push(-w);
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid
}

/// Finds the maximum of `f` over the grid and polishes it with a
/// golden-section search on the bracket formed by the neighbors of the
/// grid maximizer.
pub fn refine_grid_maximum(omegas: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    assert!(!omegas.is_empty(), "empty frequency grid");
    let mut best_idx = 0;
    let mut best = f64::NEG_INFINITY;
    for (i, &w) in omegas.iter().enumerate() {
        let v = f(w);
        if v > best {
            best = v;
            best_idx = i;
        }
    }
    let lo = if best_idx == 0 {
        omegas[0]
    } else {
        omegas[best_idx - 1]
    };
    let hi = if best_idx + 1 == omegas.len() {
        omegas[best_idx]
    } else {
        omegas[best_idx + 1]
    };
    if hi <= lo {
        return best;
    }
    // golden-section maximization
    let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-12 * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    best.max(fc).max(fd)
}

fn cancel_common_factors(num: Polynomial, den: Polynomial) -> (Polynomial, Polynomial) {
    if num.is_zero() {
        return (num, Polynomial::one().scale(den.leading()));
    }
    if num.degree() == Some(0) || den.degree() == Some(0) {
        return (num, den);
    }
    let num_roots = num.roots();
    let mut den_roots = den.roots();
    let mut kept_num = Vec::new();
    let mut cancelled = false;
    for r in num_roots {
        if let Some(pos) = den_roots
            .iter()
            .position(|d| (d - r).norm() < tol::CANCEL_TOL)
        {
            den_roots.remove(pos);
            cancelled = true;
        } else {
            kept_num.push(r);
        }
    }
    if !cancelled {
        return (num, den);
    }
    (
        Polynomial::from_roots(num.leading(), &kept_num),
        Polynomial::from_roots(den.leading(), &den_roots),
    )
}

impl Add for &RationalFunction {
    type Output = RationalFunction;
    fn add(self, rhs: &RationalFunction) -> RationalFunction {
        // Combine over the least common denominator instead of the plain
        // product: shared denominator roots would otherwise become multiple
        // roots, which the root finder resolves much less accurately.
        let d1_roots = if self.den.degree().unwrap_or(0) == 0 {
            Vec::new()
        } else {
            self.den.roots()
        };
        let mut d2_roots = if rhs.den.degree().unwrap_or(0) == 0 {
            Vec::new()
        } else {
            rhs.den.roots()
        };
        let mut shared = Vec::new();
        let mut r1_roots = Vec::new();
        for r in d1_roots {
            if let Some(pos) = d2_roots
                .iter()
                .position(|z| (z - r).norm() < tol::CANCEL_TOL)
            {
                d2_roots.remove(pos);
                shared.push(r);
            } else {
                r1_roots.push(r);
            }
        }
        let g = Polynomial::from_roots(ONE, &shared);
        let r1 = Polynomial::from_roots(self.den.leading(), &r1_roots);
        let r2 = Polynomial::from_roots(rhs.den.leading(), &d2_roots);
        RationalFunction::new(
            &(&self.num * &r2) + &(&rhs.num * &r1),
            &(&g * &r1) * &r2,
        )
    }
}

impl Sub for &RationalFunction {
    type Output = RationalFunction;
    fn sub(self, rhs: &RationalFunction) -> RationalFunction {
        self + &(-rhs)
    }
}

impl Neg for &RationalFunction {
    type Output = RationalFunction;
    fn neg(self) -> RationalFunction {
        RationalFunction {
            num: self.num.scale(-ONE),
            den: self.den.clone(),
        }
    }
}

impl Mul for &RationalFunction {
    type Output = RationalFunction;
    fn mul(self, rhs: &RationalFunction) -> RationalFunction {
        // Cross-cancel before multiplying to keep degrees low.
        let a = RationalFunction::new(self.num.clone(), rhs.den.clone());
        let b = RationalFunction::new(rhs.num.clone(), self.den.clone());
        RationalFunction::new(&a.num * &b.num, &a.den * &b.den)
    }
}

impl Div for &RationalFunction {
    type Output = RationalFunction;
    fn div(self, rhs: &RationalFunction) -> RationalFunction {
        let inv = rhs.inverse().expect("division by the zero function");
        self * &inv
    }
}

impl Mul<Complex64> for &RationalFunction {
    type Output = RationalFunction;
    fn mul(self, rhs: Complex64) -> RationalFunction {
        RationalFunction {
            num: self.num.scale(rhs),
            den: self.den.clone(),
        }
    }
}

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] / [{}]", self.num, self.den)
    }
}

// ---------------------------------------------------------------------------
// TransferMatrix
// ---------------------------------------------------------------------------

/// Small matrix of rational functions (row-major storage).
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<RationalFunction>,
}

impl TransferMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<RationalFunction>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(RationalError::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Ok(TransferMatrix { rows, cols, entries })
    }

    pub fn identity(n: usize) -> Self {
        let entries = (0..n * n)
            .map(|k| {
                if k / n == k % n {
                    RationalFunction::one()
                } else {
                    RationalFunction::zero()
                }
            })
            .collect();
        TransferMatrix { rows: n, cols: n, entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &RationalFunction {
        &self.entries[i * self.cols + j]
    }

    /// Entrywise evaluation.
    pub fn eval(&self, s: Complex64) -> Result<Vec<Vec<Complex64>>> {
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut row = Vec::with_capacity(self.cols);
            for j in 0..self.cols {
                row.push(self.get(i, j).eval(s)?);
            }
            out.push(row);
        }
        Ok(out)
    }

    /// Para-conjugate (conjugate transpose on the imaginary axis).
    pub fn para_conjugate(&self) -> TransferMatrix {
        let mut entries = Vec::with_capacity(self.entries.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                entries.push(self.get(i, j).para_conjugate());
            }
        }
        TransferMatrix {
            rows: self.cols,
            cols: self.rows,
            entries,
        }
    }

    pub fn matmul(&self, rhs: &TransferMatrix) -> Result<TransferMatrix> {
        if self.cols != rhs.rows {
            return Err(RationalError::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut entries = Vec::with_capacity(self.rows * rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let mut acc = RationalFunction::zero();
                for k in 0..self.cols {
                    acc = &acc + &(self.get(i, k) * rhs.get(k, j));
                }
                entries.push(acc);
            }
        }
        TransferMatrix::new(self.rows, rhs.cols, entries)
    }

    pub fn add(&self, rhs: &TransferMatrix) -> Result<TransferMatrix> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(RationalError::DimensionMismatch("matrix addition".into()));
        }
        let entries = self
            .entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| a + b)
            .collect();
        TransferMatrix::new(self.rows, self.cols, entries)
    }

    pub fn sub(&self, rhs: &TransferMatrix) -> Result<TransferMatrix> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(RationalError::DimensionMismatch("matrix subtraction".into()));
        }
        let entries = self
            .entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| a - b)
            .collect();
        TransferMatrix::new(self.rows, self.cols, entries)
    }

    /// Exact inverse for square matrices up to 2x2.
    pub fn inverse(&self) -> Result<TransferMatrix> {
        if self.rows != self.cols {
            return Err(RationalError::DimensionMismatch("inverse of non-square".into()));
        }
        match self.rows {
            1 => {
                let inv = self.get(0, 0).inverse()?;
                TransferMatrix::new(1, 1, vec![inv])
            }
            2 => {
                let (a, b, c, d) = (self.get(0, 0), self.get(0, 1), self.get(1, 0), self.get(1, 1));
                let det = &(a * d) - &(b * c);
                let det_inv = det.inverse().map_err(|_| RationalError::SingularMatrix)?;
                TransferMatrix::new(
                    2,
                    2,
                    vec![
                        &det_inv * d,
                        &(-b) * &det_inv,
                        &(-c) * &det_inv,
                        &det_inv * a,
                    ],
                )
            }
            n => Err(RationalError::DimensionMismatch(format!(
                "inverse supported up to 2x2, got {n}x{n}"
            ))),
        }
    }

    /// All entries stable.
    pub fn is_stable(&self) -> bool {
        self.entries.iter().all(|f| f.is_stable())
    }

    /// Largest singular value over the grid (entries evaluated pointwise),
    /// golden-section refined; requires all entries stable.
    pub fn hinf_norm(&self, omegas: &[f64]) -> Result<f64> {
        if !self.is_stable() {
            return Err(RationalError::UnstableInput);
        }
        let sv = |w: f64| -> f64 {
            match self.eval(Complex64::new(0.0, w)) {
                Ok(m) => max_singular_value(&m),
                Err(_) => f64::INFINITY,
            }
        };
        Ok(refine_grid_maximum(omegas, sv))
    }
}

/// Largest singular value of a small dense complex matrix via the largest
/// eigenvalue of `A^dagger A` (power iteration-free closed forms for 1x1
/// and 2x2, nalgebra for anything larger).
pub fn max_singular_value(m: &[Vec<Complex64>]) -> f64 {
    let rows = m.len();
    let cols = m.first().map(|r| r.len()).unwrap_or(0);
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    if rows == 1 && cols == 1 {
        return m[0][0].norm();
    }
    // Gram matrix G = A^dagger A (cols x cols), Hermitian PSD.
    let mut g = vec![vec![ZERO; cols]; cols];
    for i in 0..cols {
        for j in 0..cols {
            let mut acc = ZERO;
            for r in m.iter() {
                acc += r[i].conj() * r[j];
            }
            g[i][j] = acc;
        }
    }
    if cols == 1 {
        return g[0][0].re.max(0.0).sqrt();
    }
    if cols == 2 {
        // Hermitian 2x2 eigenvalues: mean +- sqrt(mean^2 - det)
        let tr = g[0][0].re + g[1][1].re;
        let det = (g[0][0] * g[1][1] - g[0][1] * g[1][0]).re;
        let mean = tr / 2.0;
        let disc = (mean * mean - det).max(0.0).sqrt();
        return (mean + disc).max(0.0).sqrt();
    }
    let dm = nalgebra::DMatrix::from_fn(cols, cols, |i, j| g[i][j]);
    let eig = dm.symmetric_eigen();
    eig.eigenvalues
        .iter()
        .fold(0.0_f64, |acc, &v| acc.max(v))
        .max(0.0)
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eval_first_order_section() {
        // (s - 5 + 10i)/(s + 5 + 10i) at s = 0 equals 0.6 + 0.8i
        let f = RationalFunction::new(
            Polynomial::new(vec![c(-5.0, 10.0), ONE]),
            Polynomial::new(vec![c(5.0, 10.0), ONE]),
        );
        let v = f.eval(ZERO).unwrap();
        assert_abs_diff_eq!(v.re, 0.6, epsilon = 1e-14);
        assert_abs_diff_eq!(v.im, 0.8, epsilon = 1e-14);
    }

    #[test]
    fn eval_constant_is_identity() {
        let f = RationalFunction::one();
        assert_eq!(f.eval(c(3.0, 4.0)).unwrap(), ONE);
    }

    #[test]
    fn eval_at_pole_reports_pole_hit() {
        let f = RationalFunction::new(Polynomial::one(), Polynomial::new(vec![ONE, ONE]));
        assert!(matches!(
            f.eval(c(-1.0, 0.0)),
            Err(RationalError::PoleHit(_))
        ));
    }

    #[test]
    fn para_conjugate_constant() {
        let f = RationalFunction::constant(c(2.0, -3.0));
        let g = f.para_conjugate();
        assert_eq!(g.as_constant().unwrap(), c(2.0, 3.0));
    }

    #[test]
    fn para_conjugate_first_order() {
        // (1/(s+a))^H = 1/(-s + conj(a))
        let a = c(1.5, -0.7);
        let f = RationalFunction::new(Polynomial::one(), Polynomial::new(vec![a, ONE]));
        let g = f.para_conjugate();
        for k in 0..50 {
            let w = -20.0 + 0.8 * k as f64;
            let s = c(0.0, w);
            let lhs = g.eval(s).unwrap();
            let rhs = f.eval(s).unwrap().conj();
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn para_conjugate_pointwise_oracle_random() {
        // deterministic "random" coefficients; checks f^H(iw) = conj(f(iw))
        let num = Polynomial::new(vec![c(0.3, -1.2), c(-0.5, 0.9), c(1.1, 0.2)]);
        let den = Polynomial::new(vec![c(2.0, 0.4), c(0.7, -0.3), ONE]);
        let f = RationalFunction::new(num, den);
        let g = f.para_conjugate();
        let mut w = -87.3_f64;
        for _ in 0..200 {
            w = (w * 1.1 + 3.7) % 55.0;
            let s = c(0.0, w);
            let lhs = g.eval(s).unwrap();
            let rhs = f.eval(s).unwrap().conj();
            assert!((lhs - rhs).norm() < 1e-12 * (1.0 + rhs.norm()));
        }
    }

    #[test]
    fn product_with_inverse_is_one() {
        let f = RationalFunction::new(
            Polynomial::new(vec![c(2.0, 0.0), ONE]),
            Polynomial::new(vec![c(3.0, 0.0), ONE]),
        );
        let p = &f * &f.inverse().unwrap();
        assert_eq!(p.as_constant().unwrap(), ONE);
    }

    #[test]
    fn poles_and_stability() {
        let f = RationalFunction::new(Polynomial::one(), Polynomial::new(vec![c(5.0, 10.0), ONE]));
        let poles = f.poles();
        assert_eq!(poles.len(), 1);
        assert_abs_diff_eq!(poles[0].re, -5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(poles[0].im, -10.0, epsilon = 1e-12);
        assert!(f.is_stable());
        assert_abs_diff_eq!(f.analytic_margin(), 5.0, epsilon = 1e-12);

        let g = RationalFunction::new(
            Polynomial::new(vec![ONE, ONE]),
            &Polynomial::new(vec![-ONE, ONE]) * &Polynomial::new(vec![c(2.0, 0.0), ONE]),
        );
        assert!(!g.is_stable());
    }

    #[test]
    fn cancellation_removes_common_factor() {
        // (s+2)(s+1) / (s+2)(s+3) reduces to (s+1)/(s+3)
        let num = &Polynomial::new(vec![c(2.0, 0.0), ONE]) * &Polynomial::new(vec![ONE, ONE]);
        let den = &Polynomial::new(vec![c(2.0, 0.0), ONE]) * &Polynomial::new(vec![c(3.0, 0.0), ONE]);
        let f = RationalFunction::new(num, den);
        assert_eq!(f.den().degree(), Some(1));
        let v = f.eval(ZERO).unwrap();
        assert_abs_diff_eq!(v.re, 1.0 / 3.0, epsilon = 1e-10);
    }

    #[test]
    fn hinf_norm_constant_and_first_order() {
        let grid = default_hinf_grid();
        let half = RationalFunction::real_constant(0.5);
        assert_abs_diff_eq!(half.hinf_norm(&grid).unwrap(), 0.5, epsilon = 1e-12);

        let f = RationalFunction::new(Polynomial::one(), Polynomial::new(vec![ONE, ONE]));
        assert_abs_diff_eq!(f.hinf_norm(&grid).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn hinf_norm_rejects_unstable() {
        let f = RationalFunction::new(Polynomial::one(), Polynomial::new(vec![-ONE, ONE]));
        assert!(matches!(f.hinf_norm(&[0.0]), Err(RationalError::UnstableInput)));
    }

    #[test]
    fn hinf_submultiplicative_on_samples() {
        let grid = default_hinf_grid();
        let fs = [
            RationalFunction::new(Polynomial::new(vec![c(0.5, 0.2), ONE]), Polynomial::new(vec![c(2.0, 0.0), ONE])),
            RationalFunction::new(Polynomial::new(vec![c(1.0, -1.0)]), Polynomial::new(vec![c(1.0, 3.0), ONE])),
            RationalFunction::new(Polynomial::new(vec![c(3.0, 0.0), ZERO, ONE]), Polynomial::new(vec![c(4.0, 0.0), c(2.5, 0.0), ONE])),
        ];
        for f in &fs {
            for g in &fs {
                let fg = f * g;
                let lhs = fg.hinf_norm(&grid).unwrap();
                let rhs = f.hinf_norm(&grid).unwrap() * g.hinf_norm(&grid).unwrap();
                assert!(lhs <= rhs * (1.0 + 1e-9), "{lhs} > {rhs}");
            }
        }
    }

    #[test]
    fn product_poles_subset_of_union() {
        let f = RationalFunction::new(Polynomial::one(), Polynomial::new(vec![c(1.0, 1.0), ONE]));
        let g = RationalFunction::new(
            Polynomial::new(vec![c(1.0, 1.0), ONE]),
            Polynomial::new(vec![c(4.0, -2.0), ONE]),
        );
        let prod = &f * &g;
        // the (s+1+i) factors cancel; remaining pole must be -4+2i
        let poles = prod.poles();
        assert_eq!(poles.len(), 1);
        assert!((poles[0] - c(-4.0, 2.0)).norm() < 1e-9);
    }

    #[test]
    fn roots_of_quartic_match_construction() {
        let roots = [c(-1.0, 2.0), c(3.0, -0.5), c(0.0, -4.0), c(-2.5, 0.0)];
        let p = Polynomial::from_roots(c(2.0, 1.0), &roots);
        let mut found = p.roots();
        for r in roots {
            let pos = found
                .iter()
                .position(|z| (z - r).norm() < 1e-8)
                .expect("missing root");
            found.remove(pos);
        }
    }

    #[test]
    fn polynomial_shift_matches_pointwise() {
        let p = Polynomial::new(vec![c(1.0, -2.0), c(0.5, 0.0), c(-1.0, 1.0), ONE]);
        let tau = c(1e-3, 0.0);
        let q = p.shift(tau);
        for k in 0..20 {
            let s = c(-1.0 + 0.3 * k as f64, 0.7 * k as f64);
            let lhs = q.eval(s);
            let rhs = p.eval(s + tau);
            assert!((lhs - rhs).norm() < 1e-10 * (1.0 + rhs.norm()));
        }
    }

    #[test]
    fn swap_matrix_squares_to_identity() {
        let swap = TransferMatrix::new(
            2,
            2,
            vec![
                RationalFunction::zero(),
                RationalFunction::one(),
                RationalFunction::one(),
                RationalFunction::zero(),
            ],
        )
        .unwrap();
        let sq = swap.matmul(&swap).unwrap();
        assert_eq!(sq, TransferMatrix::identity(2));
    }

    #[test]
    fn two_by_two_inverse() {
        let m = TransferMatrix::new(
            2,
            2,
            vec![
                RationalFunction::new(Polynomial::new(vec![ONE, ONE]), Polynomial::new(vec![c(2.0, 0.0), ONE])),
                RationalFunction::real_constant(0.5),
                RationalFunction::zero(),
                RationalFunction::new(Polynomial::new(vec![c(3.0, 0.0), ONE]), Polynomial::new(vec![c(4.0, 0.0), ONE])),
            ],
        )
        .unwrap();
        let inv = m.inverse().unwrap();
        let prod = m.matmul(&inv).unwrap();
        for w in [-3.0, -0.2, 0.0, 1.7, 11.0] {
            let v = prod.eval(c(0.0, w)).unwrap();
            assert!((v[0][0] - ONE).norm() < 1e-10);
            assert!(v[0][1].norm() < 1e-10);
            assert!(v[1][0].norm() < 1e-10);
            assert!((v[1][1] - ONE).norm() < 1e-10);
        }
    }

    #[test]
    fn degree_cap_is_enforced() {
        let p = Polynomial::from_roots(ONE, &vec![c(-1.0, 0.0); 17]);
        assert!(matches!(
            RationalFunction::try_new(p, Polynomial::one()),
            Err(RationalError::DegreeCapExceeded(_))
        ));
    }
}
