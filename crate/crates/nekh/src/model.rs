//! Quasi-convex nearly integrable Hamiltonians: the unperturbed part H0,
//! truncated Fourier data for the perturbation, weighted norms and the
//! splitting H = <w*, I> + G + eps*Hbar + eps*Htilde.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{sup_abs, SlowGrid};
use crate::lattice::FrequencyVector;

/// Tolerance for the frequency match `grad H0(0) = w*` in [`taylor_split`].
pub const FREQ_MATCH_TOL: f64 = 1e-10;

// ---------------------------------------------------------------------------
// H0
// ---------------------------------------------------------------------------

/// The unperturbed Hamiltonian H0(I), either quadratic or a multivariate
/// polynomial with explicit terms. All derivatives are analytic.
#[derive(Debug, Clone)]
pub enum H0Spec {
    Quadratic { matrix: DMatrix<f64>, linear: DVector<f64>, constant: f64 },
    Polynomial { n: usize, terms: Vec<(Vec<u32>, f64)> },
}

impl H0Spec {
    pub fn quadratic(matrix: DMatrix<f64>, linear: DVector<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() != linear.len() {
            return Err(Error::invalid("H0Spec", "matrix/linear dimension mismatch"));
        }
        if (&matrix - matrix.transpose()).amax() > 1e-12 {
            return Err(Error::invalid("H0Spec", "quadratic form matrix must be symmetric"));
        }
        Ok(H0Spec::Quadratic { matrix, linear, constant: 0.0 })
    }

    pub fn polynomial(n: usize, terms: Vec<(Vec<u32>, f64)>) -> Result<Self> {
        if terms.iter().any(|(e, _)| e.len() != n) {
            return Err(Error::invalid("H0Spec", "term exponent length must equal n"));
        }
        Ok(H0Spec::Polynomial { n, terms })
    }

    pub fn dim(&self) -> usize {
        match self {
            H0Spec::Quadratic { linear, .. } => linear.len(),
            H0Spec::Polynomial { n, .. } => *n,
        }
    }

    pub fn value(&self, i: &[f64]) -> f64 {
        match self {
            H0Spec::Quadratic { matrix, linear, constant } => {
                let v = DVector::from_column_slice(i);
                0.5 * (matrix * &v).dot(&v) + linear.dot(&v) + constant
            }
            H0Spec::Polynomial { terms, .. } => terms
                .iter()
                .map(|(e, c)| c * e.iter().zip(i).map(|(&p, &x)| x.powi(p as i32)).product::<f64>())
                .sum(),
        }
    }

    pub fn grad(&self, i: &[f64]) -> DVector<f64> {
        match self {
            H0Spec::Quadratic { matrix, linear, .. } => {
                matrix * DVector::from_column_slice(i) + linear
            }
            H0Spec::Polynomial { n, terms } => {
                let mut g = DVector::zeros(*n);
                for (e, c) in terms {
                    for j in 0..*n {
                        if e[j] == 0 {
                            continue;
                        }
                        let mut t = c * e[j] as f64;
                        for (d, (&p, &x)) in e.iter().zip(i).enumerate() {
                            let p = if d == j { p - 1 } else { p };
                            t *= x.powi(p as i32);
                        }
                        g[j] += t;
                    }
                }
                g
            }
        }
    }

    pub fn hessian(&self, i: &[f64]) -> DMatrix<f64> {
        match self {
            H0Spec::Quadratic { matrix, .. } => matrix.clone(),
            H0Spec::Polynomial { n, terms } => {
                let mut h = DMatrix::zeros(*n, *n);
                for (e, c) in terms {
                    for j in 0..*n {
                        for l in j..*n {
                            let factor = if j == l {
                                (e[j] as f64) * (e[j] as f64 - 1.0)
                            } else {
                                (e[j] as f64) * (e[l] as f64)
                            };
                            if factor == 0.0 {
                                continue;
                            }
                            let mut t = c * factor;
                            for (d, (&p, &x)) in e.iter().zip(i).enumerate() {
                                let mut p = p;
                                if d == j {
                                    p -= 1;
                                }
                                if d == l {
                                    p -= 1;
                                }
                                t *= x.powi(p as i32);
                            }
                            h[(j, l)] += t;
                            if j != l {
                                h[(l, j)] += t;
                            }
                        }
                    }
                }
                h
            }
        }
    }

    /// Largest absolute third partial derivative at `i` (zero for quadratics).
    pub fn third_partial_max(&self, i: &[f64]) -> f64 {
        match self {
            H0Spec::Quadratic { .. } => 0.0,
            H0Spec::Polynomial { n, terms } => {
                let mut worst: f64 = 0.0;
                for a in 0..*n {
                    for b in a..*n {
                        for c in b..*n {
                            let mut v = 0.0;
                            for (e, coef) in terms {
                                let mut exps = e.clone();
                                let mut factor = *coef;
                                let mut ok = true;
                                for &d in &[a, b, c] {
                                    if exps[d] == 0 {
                                        ok = false;
                                        break;
                                    }
                                    factor *= exps[d] as f64;
                                    exps[d] -= 1;
                                }
                                if !ok {
                                    continue;
                                }
                                for (&p, &x) in exps.iter().zip(i) {
                                    factor *= x.powi(p as i32);
                                }
                                v += factor;
                            }
                            worst = worst.max(v.abs());
                        }
                    }
                }
                worst
            }
        }
    }

    /// Re-center at `center`: returns H0'(I) = H0(center + I).
    pub fn translate(&self, center: &[f64]) -> H0Spec {
        match self {
            H0Spec::Quadratic { matrix, linear, constant } => {
                let c = DVector::from_column_slice(center);
                let new_linear = matrix * &c + linear;
                let new_constant =
                    constant + 0.5 * (matrix * &c).dot(&c) + linear.dot(&c);
                H0Spec::Quadratic { matrix: matrix.clone(), linear: new_linear, constant: new_constant }
            }
            H0Spec::Polynomial { n, terms } => {
                // expand each product of binomials (I_j + c_j)^{e_j}
                let mut out: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
                for (e, c) in terms {
                    let mut partial: Vec<(Vec<u32>, f64)> = vec![(vec![], *c)];
                    for (j, &p) in e.iter().enumerate() {
                        let mut next = Vec::new();
                        for (exps, coef) in &partial {
                            let mut binom = 1.0;
                            for k in 0..=p {
                                // binomial(p, k) * center^ (p-k)
                                let term = coef * binom * center[j].powi((p - k) as i32);
                                let mut ex = exps.clone();
                                ex.push(k);
                                next.push((ex, term));
                                binom = binom * (p - k) as f64 / (k + 1) as f64;
                            }
                        }
                        partial = next;
                    }
                    for (ex, coef) in partial {
                        *out.entry(ex).or_insert(0.0) += coef;
                    }
                }
                let terms = out.into_iter().filter(|(_, c)| *c != 0.0).collect();
                H0Spec::Polynomial { n: *n, terms }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Convexity constants
// ---------------------------------------------------------------------------

/// Hessian bounds and gradient sups characterizing the convexity of H0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexityConstants {
    /// Lower Rayleigh bound M- > 0.
    pub m_minus: f64,
    /// Upper Hessian norm bound M+ >= M-.
    pub m_plus: f64,
    /// sup over the action domain of |grad H0|_inf.
    pub grad_inf: f64,
    /// sup of the third derivative tensor entries (0 for quadratic H0).
    pub grad3_inf: f64,
}

impl ConvexityConstants {
    pub fn new(m_minus: f64, m_plus: f64, grad_inf: f64, grad3_inf: f64) -> Result<Self> {
        if !(m_minus > 0.0) || !(m_plus >= m_minus) {
            return Err(Error::invalid("ConvexityConstants", "need 0 < m_minus <= m_plus"));
        }
        if !(grad_inf > 0.0) || grad3_inf < 0.0 {
            return Err(Error::invalid("ConvexityConstants", "need grad_inf > 0, grad3_inf >= 0"));
        }
        Ok(ConvexityConstants { m_minus, m_plus, grad_inf, grad3_inf })
    }
}

// ---------------------------------------------------------------------------
// Slow-variable polynomials (analytic coefficient evaluators)
// ---------------------------------------------------------------------------

/// A polynomial in the slow variables with complex coefficients. Used both to
/// seed [`FourierField`] coefficients on the grid and for exact evaluation
/// along trajectories in the harness.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowPoly {
    pub dims: usize,
    pub terms: Vec<(Vec<u32>, Complex64)>,
}

impl SlowPoly {
    pub fn constant(dims: usize, c: Complex64) -> Self {
        SlowPoly { dims, terms: vec![(vec![0; dims], c)] }
    }

    pub fn new(dims: usize, terms: Vec<(Vec<u32>, Complex64)>) -> Result<Self> {
        if terms.iter().any(|(e, _)| e.len() != dims) {
            return Err(Error::invalid("SlowPoly", "exponent length must equal slow dimension"));
        }
        Ok(SlowPoly { dims, terms })
    }

    pub fn eval(&self, z: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(z).map(|(&p, &x)| x.powi(p as i32)).product::<f64>())
            .sum()
    }

    pub fn derivative(&self, dim: usize) -> SlowPoly {
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| e[dim] > 0)
            .map(|(e, c)| {
                let mut e2 = e.clone();
                e2[dim] -= 1;
                (e2, c * e[dim] as f64)
            })
            .collect();
        SlowPoly { dims: self.dims, terms }
    }

    pub fn conj(&self) -> SlowPoly {
        SlowPoly {
            dims: self.dims,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c.conj())).collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// FourierField
// ---------------------------------------------------------------------------

/// Truncated Fourier series in the angles, with each coefficient sampled over
/// the real slow-variable grid.
#[derive(Debug, Clone)]
pub struct FourierField {
    pub angle_dim: usize,
    pub grid: Arc<SlowGrid>,
    pub truncation_radius: i64,
    /// invariant: every stored k has |k|_1 <= truncation_radius
    pub modes: BTreeMap<Vec<i32>, Vec<Complex64>>,
    /// analyticity width of the owning spec; weighted norms beyond it are rejected
    pub rho_limit: f64,
}

pub fn l1_norm(k: &[i32]) -> i64 {
    k.iter().map(|&x| (x as i64).abs()).sum()
}

impl FourierField {
    pub fn empty(angle_dim: usize, grid: Arc<SlowGrid>, truncation_radius: i64) -> Self {
        FourierField {
            angle_dim,
            grid,
            truncation_radius,
            modes: BTreeMap::new(),
            rho_limit: f64::INFINITY,
        }
    }

    pub fn with_rho_limit(mut self, rho: f64) -> Self {
        self.rho_limit = rho;
        self
    }

    /// Insert a mode; rejects indices outside the truncation radius.
    pub fn insert(&mut self, k: Vec<i32>, values: Vec<Complex64>) -> Result<()> {
        if k.len() != self.angle_dim {
            return Err(Error::invalid("FourierField", "mode index dimension mismatch"));
        }
        if l1_norm(&k) > self.truncation_radius {
            return Err(Error::invalid(
                "FourierField",
                format!("|k|_1 = {} exceeds truncation radius {}", l1_norm(&k), self.truncation_radius),
            ));
        }
        if values.len() != self.grid.len() {
            return Err(Error::invalid("FourierField", "coefficient grid length mismatch"));
        }
        self.modes.insert(k, values);
        Ok(())
    }

    /// Build from analytic slow-polynomial coefficients sampled on the grid.
    pub fn from_polys(
        angle_dim: usize,
        grid: Arc<SlowGrid>,
        truncation_radius: i64,
        modes: &[(Vec<i32>, SlowPoly)],
    ) -> Result<Self> {
        let mut field = FourierField::empty(angle_dim, grid.clone(), truncation_radius);
        for (k, poly) in modes {
            let values = grid.sample(|z| poly.eval(z));
            field.insert(k.clone(), values)?;
        }
        Ok(field)
    }

    /// Reality symmetry: the coefficient at -k must be the conjugate of the
    /// coefficient at k. Returns the worst deviation.
    pub fn reality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, vals) in &self.modes {
            let neg: Vec<i32> = k.iter().map(|&x| -x).collect();
            match self.modes.get(&neg) {
                None => {
                    worst = worst.max(sup_abs(vals));
                }
                Some(nv) => {
                    for (a, b) in vals.iter().zip(nv) {
                        worst = worst.max((a - b.conj()).norm());
                    }
                }
            }
        }
        worst
    }

    /// Mode-wise sum. Fields must share the grid and angle dimension.
    pub fn add(&self, other: &FourierField) -> Result<FourierField> {
        if self.angle_dim != other.angle_dim || self.grid != other.grid {
            return Err(Error::invalid("FourierField", "incompatible fields in add"));
        }
        let mut out = self.clone();
        out.truncation_radius = self.truncation_radius.max(other.truncation_radius);
        for (k, vals) in &other.modes {
            match out.modes.get_mut(k) {
                Some(existing) => {
                    for (a, b) in existing.iter_mut().zip(vals) {
                        *a += b;
                    }
                }
                None => {
                    out.modes.insert(k.clone(), vals.clone());
                }
            }
        }
        Ok(out)
    }

    /// Field of the partial derivative with respect to angle `j`
    /// (coefficients multiplied by i*k_j, exact).
    pub fn theta_derivative(&self, j: usize) -> FourierField {
        let mut out = self.clone();
        for (k, vals) in out.modes.iter_mut() {
            let factor = Complex64::new(0.0, k[j] as f64);
            for v in vals.iter_mut() {
                *v *= factor;
            }
        }
        out
    }

    /// Field of the partial derivative with respect to slow variable `dim`
    /// (order-4 finite differences on the grid).
    pub fn slow_derivative(&self, dim: usize) -> FourierField {
        let mut out = self.clone();
        for (_, vals) in out.modes.iter_mut() {
            let d = self.grid.derivative_alloc(vals, dim);
            *vals = d;
        }
        out
    }
}

// ---------------------------------------------------------------------------
// HamiltonianSpec
// ---------------------------------------------------------------------------

/// The full system: H(I, theta, x, y) = H0(I) + eps * H1.
#[derive(Debug, Clone)]
pub struct HamiltonianSpec {
    pub n: usize,
    pub m: usize,
    pub h0: H0Spec,
    /// Analytic per-mode coefficients of H1 as polynomials in the slow
    /// variables (I..., x..., y...).
    pub perturbation: Vec<(Vec<i32>, SlowPoly)>,
    pub rho: f64,
    pub sigma: f64,
    pub convexity: ConvexityConstants,
    /// Half-widths of the action sample box (the real slice of the domain).
    pub action_box: Vec<f64>,
    /// Half-widths of the (x, y) sample box, length 2m.
    pub slow_xy_box: Vec<f64>,
}

impl HamiltonianSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid("HamiltonianSpec", "need n >= 2"));
        }
        if !(self.rho > 0.0) || !(self.sigma > 0.0) {
            return Err(Error::invalid("HamiltonianSpec", "need rho > 0 and sigma > 0"));
        }
        if self.h0.dim() != self.n {
            return Err(Error::invalid("HamiltonianSpec", "H0 dimension != n"));
        }
        if self.action_box.len() != self.n || self.slow_xy_box.len() != 2 * self.m {
            return Err(Error::invalid("HamiltonianSpec", "sample box dimensions"));
        }
        let slow = self.n + 2 * self.m;
        for (k, poly) in &self.perturbation {
            if k.len() != self.n || poly.dims != slow {
                return Err(Error::invalid("HamiltonianSpec", "perturbation mode shape"));
            }
        }
        // reality: every k must have the conjugate partner at -k
        for (k, poly) in &self.perturbation {
            let neg: Vec<i32> = k.iter().map(|&x| -x).collect();
            let partner = self
                .perturbation
                .iter()
                .find(|(k2, _)| *k2 == neg)
                .ok_or_else(|| Error::invalid("HamiltonianSpec", "missing conjugate mode"))?;
            let conj = poly.conj();
            let mut probe = vec![0.37; slow];
            for (d, p) in probe.iter_mut().enumerate() {
                *p += 0.11 * d as f64;
            }
            if (partner.1.eval(&probe) - conj.eval(&probe)).norm() > 1e-12 {
                return Err(Error::invalid("HamiltonianSpec", "perturbation is not real"));
            }
        }
        Ok(())
    }

    pub fn slow_dims(&self) -> usize {
        self.n + 2 * self.m
    }

    /// Default slow grid covering the action box and (x, y) box.
    pub fn slow_grid(&self, points_per_dim: usize) -> Result<SlowGrid> {
        let mut half = self.action_box.clone();
        half.extend_from_slice(&self.slow_xy_box);
        SlowGrid::centered(half, points_per_dim)
    }

    /// Sample H1 on a slow grid as a FourierField.
    pub fn perturbation_field(
        &self,
        grid: Arc<SlowGrid>,
        truncation_radius: i64,
    ) -> Result<FourierField> {
        Ok(FourierField::from_polys(self.n, grid, truncation_radius, &self.perturbation)?
            .with_rho_limit(self.rho))
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Weighted Fourier norm of the field at width `rho_prime`:
/// sup over the slow sample set of `sum_k |f^k| e^{|k|_1 rho'}`.
///
/// Norms here are real-grid estimates: the sup runs over the real sample
/// grid, not the complexified domain.
pub fn fourier_norm(f: &FourierField, rho_prime: f64) -> Result<f64> {
    if rho_prime < 0.0 {
        return Err(Error::invalid("fourier_norm", "rho_prime must be nonnegative"));
    }
    if rho_prime > f.rho_limit {
        return Err(Error::invalid(
            "fourier_norm",
            format!("rho_prime {} exceeds analyticity width {}", rho_prime, f.rho_limit),
        ));
    }
    let npts = f.grid.len();
    let mut per_point = vec![0.0; npts.max(1)];
    for (k, vals) in &f.modes {
        let weight = ((l1_norm(k) as f64) * rho_prime).exp();
        for (acc, v) in per_point.iter_mut().zip(vals) {
            *acc += v.norm() * weight;
        }
    }
    Ok(per_point.into_iter().fold(0.0, f64::max))
}

/// mu = max(|H1|_rho, |grad H1|_rho): the norm of the perturbation and of all
/// its partial derivatives (angle derivatives exact, slow by finite
/// differences of order 4).
pub fn perturbation_mu(spec: &HamiltonianSpec, grid: Arc<SlowGrid>) -> Result<f64> {
    let trunc = spec.perturbation.iter().map(|(k, _)| l1_norm(k)).max().unwrap_or(0);
    let field = spec.perturbation_field(grid, trunc.max(1))?;
    let mut mu = fourier_norm(&field, spec.rho)?;
    for j in 0..spec.n {
        mu = mu.max(fourier_norm(&field.theta_derivative(j), spec.rho)?);
    }
    for d in 0..spec.slow_dims() {
        mu = mu.max(fourier_norm(&field.slow_derivative(d), spec.rho)?);
    }
    Ok(mu)
}

/// Split into (resonant, nonresonant) parts relative to w* = p / T-bar.
/// Membership is the exact integer test <k, p> = 0.
pub fn split_resonant(
    f: &FourierField,
    omega: &FrequencyVector,
) -> Result<(FourierField, FourierField)> {
    if omega.p.len() != f.angle_dim {
        return Err(Error::invalid("split_resonant", "frequency dimension mismatch"));
    }
    let mut resonant = FourierField::empty(f.angle_dim, f.grid.clone(), f.truncation_radius);
    resonant.rho_limit = f.rho_limit;
    let mut nonresonant = resonant.clone();
    for (k, vals) in &f.modes {
        if omega.dot_p(k) == 0 {
            resonant.modes.insert(k.clone(), vals.clone());
        } else {
            nonresonant.modes.insert(k.clone(), vals.clone());
        }
    }
    Ok((resonant, nonresonant))
}

/// The Taylor remainder G(I) = H0(I) - <w*, I> - H0(0) together with its
/// gradient, certified against |G| <= M+ R^2 / 2 and |grad G|_2 <= M+ R on a
/// sample grid of radius R.
#[derive(Debug, Clone)]
pub struct GPart {
    h0: H0Spec,
    omega_star: Vec<f64>,
    h0_at_origin: f64,
    pub radius: f64,
    pub max_g: f64,
    pub max_grad_g: f64,
}

impl GPart {
    pub fn value(&self, i: &[f64]) -> f64 {
        let dot: f64 = self.omega_star.iter().zip(i).map(|(a, b)| a * b).sum();
        self.h0.value(i) - dot - self.h0_at_origin
    }

    pub fn grad(&self, i: &[f64]) -> DVector<f64> {
        self.h0.grad(i) - DVector::from_column_slice(&self.omega_star)
    }

    /// G == 0 evaluator for systems with linear H0 (homogeneous test specs).
    pub fn zero(n: usize, omega: &[f64]) -> GPart {
        GPart {
            h0: H0Spec::Quadratic {
                matrix: DMatrix::zeros(n, n),
                linear: DVector::from_column_slice(omega),
                constant: 0.0,
            },
            omega_star: omega.to_vec(),
            h0_at_origin: 0.0,
            radius: 0.0,
            max_g: 0.0,
            max_grad_g: 0.0,
        }
    }
}

/// Sample points of the closed l2 ball of radius `r` (tensor grid filtered to
/// the ball, plus the axis extremes).
fn ball_samples(n: usize, r: f64, per_dim: usize) -> Vec<Vec<f64>> {
    let mut pts = Vec::new();
    let steps = per_dim.max(3);
    let mut idx = vec![0usize; n];
    loop {
        let p: Vec<f64> =
            idx.iter().map(|&i| -r + 2.0 * r * i as f64 / (steps - 1) as f64).collect();
        if p.iter().map(|x| x * x).sum::<f64>() <= r * r * (1.0 + 1e-12) {
            pts.push(p);
        }
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < steps {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == n {
                return {
                    for j in 0..n {
                        for s in [-1.0, 1.0] {
                            let mut p = vec![0.0; n];
                            p[j] = s * r;
                            pts.push(p);
                        }
                    }
                    pts
                };
            }
        }
    }
}

/// Build the G part of the splitting, verifying `grad H0(0) = w*` and the
/// Hessian-derived bounds on a sample grid of radius `r_confine`.
pub fn taylor_split(
    h0: &H0Spec,
    omega: &FrequencyVector,
    m_plus: f64,
    r_confine: f64,
) -> Result<GPart> {
    let n = h0.dim();
    let omega_star = omega.omega();
    if omega_star.len() != n {
        return Err(Error::invalid("taylor_split", "frequency dimension mismatch"));
    }
    let g0 = h0.grad(&vec![0.0; n]);
    let worst = g0
        .iter()
        .zip(&omega_star)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if worst > FREQ_MATCH_TOL {
        return Err(Error::Certification(format!(
            "grad H0(0) differs from w* by {worst:.3e} (tolerance {FREQ_MATCH_TOL:.0e}); translate the actions first"
        )));
    }
    let mut part = GPart {
        h0: h0.clone(),
        omega_star,
        h0_at_origin: h0.value(&vec![0.0; n]),
        radius: r_confine,
        max_g: 0.0,
        max_grad_g: 0.0,
    };
    let bound_g = m_plus * r_confine * r_confine / 2.0;
    let bound_grad = m_plus * r_confine;
    for p in ball_samples(n, r_confine, 7) {
        let g = part.value(&p).abs();
        let dg = part.grad(&p).norm();
        part.max_g = part.max_g.max(g);
        part.max_grad_g = part.max_grad_g.max(dg);
    }
    if part.max_g > bound_g * (1.0 + 1e-9) + 1e-300 {
        return Err(Error::Certification(format!(
            "|G| = {:.6e} exceeds M+ R^2/2 = {:.6e} on the sample grid; convexity constants look wrong",
            part.max_g, bound_g
        )));
    }
    if part.max_grad_g > bound_grad * (1.0 + 1e-9) + 1e-300 {
        return Err(Error::Certification(format!(
            "|grad G|_2 = {:.6e} exceeds M+ R = {:.6e} on the sample grid",
            part.max_grad_g, bound_grad
        )));
    }
    Ok(part)
}

/// Grid-estimate the convexity constants of H0 over the action box.
/// Conservative: M- is the minimum Hessian eigenvalue over the grid, M+ the
/// maximum absolute eigenvalue.
pub fn estimate_convexity(
    h0: &H0Spec,
    action_box: &[f64],
    grid_resolution: usize,
) -> Result<ConvexityConstants> {
    if grid_resolution < 2 {
        return Err(Error::invalid("estimate_convexity", "grid_resolution must be >= 2"));
    }
    let n = h0.dim();
    let mut m_minus = f64::INFINITY;
    let mut m_plus: f64 = 0.0;
    let mut grad_inf: f64 = 0.0;
    let mut grad3: f64 = 0.0;
    let mut idx = vec![0usize; n];
    loop {
        let p: Vec<f64> = idx
            .iter()
            .zip(action_box)
            .map(|(&i, &w)| -w + 2.0 * w * i as f64 / (grid_resolution - 1) as f64)
            .collect();
        let hess = h0.hessian(&p);
        let eig = hess.symmetric_eigen().eigenvalues;
        for &lambda in eig.iter() {
            m_minus = m_minus.min(lambda);
            m_plus = m_plus.max(lambda.abs());
        }
        grad_inf = grad_inf.max(h0.grad(&p).amax());
        grad3 = grad3.max(h0.third_partial_max(&p));
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < grid_resolution {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == n {
                if m_minus <= 0.0 {
                    return Err(Error::Certification(format!(
                        "minimum Rayleigh quotient {m_minus:.6e} <= 0: H0 is not quasi-convex on the grid"
                    )));
                }
                return ConvexityConstants::new(m_minus, m_plus, grad_inf, grad3);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_grid() -> Arc<SlowGrid> {
        Arc::new(SlowGrid::trivial())
    }

    fn cos_theta1(n: usize) -> FourierField {
        let grid = unit_grid();
        let mut f = FourierField::empty(n, grid, 4);
        let mut k = vec![0i32; n];
        k[0] = 1;
        f.insert(k.clone(), vec![Complex64::new(0.5, 0.0)]).unwrap();
        k[0] = -1;
        f.insert(k, vec![Complex64::new(0.5, 0.0)]).unwrap();
        f
    }

    #[test]
    fn fourier_norm_examples() {
        let f = cos_theta1(2);
        assert!((fourier_norm(&f, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((fourier_norm(&f, 1.0).unwrap() - std::f64::consts::E).abs() < 1e-14);
        let zero = FourierField::empty(2, unit_grid(), 3);
        assert_eq!(fourier_norm(&zero, 0.7).unwrap(), 0.0);
    }

    #[test]
    fn fourier_norm_rejects_beyond_width() {
        let f = cos_theta1(2).with_rho_limit(0.5);
        assert!(fourier_norm(&f, 0.6).is_err());
        assert!(fourier_norm(&f, 0.5).is_ok());
    }

    #[test]
    fn split_resonant_examples() {
        let omega = FrequencyVector::new(vec![1, 1], 1.0).unwrap();
        let grid = unit_grid();
        let mut f = FourierField::empty(2, grid.clone(), 4);
        f.insert(vec![1, -1], vec![Complex64::new(1.0, 0.0)]).unwrap();
        f.insert(vec![1, 0], vec![Complex64::new(2.0, 0.0)]).unwrap();
        let (res, non) = split_resonant(&f, &omega).unwrap();
        assert!(res.modes.contains_key(&vec![1, -1]) && res.modes.len() == 1);
        assert!(non.modes.contains_key(&vec![1, 0]) && non.modes.len() == 1);

        let mut mean = FourierField::empty(2, grid, 4);
        mean.insert(vec![0, 0], vec![Complex64::new(3.0, 0.0)]).unwrap();
        let (res, non) = split_resonant(&mean, &omega).unwrap();
        assert_eq!(res.modes.len(), 1);
        assert!(non.modes.is_empty());

        let zero = FourierField::empty(2, unit_grid(), 4);
        let (res, non) = split_resonant(&zero, &omega).unwrap();
        assert!(res.modes.is_empty() && non.modes.is_empty());
    }

    #[test]
    fn taylor_split_quadratic() {
        let omega = FrequencyVector::new(vec![1, 1], 1.0).unwrap();
        let h0 = H0Spec::Quadratic {
            matrix: DMatrix::identity(2, 2),
            linear: DVector::from_vec(vec![1.0, 1.0]),
            constant: 0.0,
        };
        let g = taylor_split(&h0, &omega, 1.0, 1.0).unwrap();
        assert!(g.max_g <= 0.5 + 1e-12);
        assert!(g.max_grad_g <= 1.0 + 1e-12);
        // linear H0: G identically zero
        let h0_lin = H0Spec::Quadratic {
            matrix: DMatrix::zeros(2, 2),
            linear: DVector::from_vec(vec![1.0, 1.0]),
            constant: 0.0,
        };
        let g = taylor_split(&h0_lin, &omega, 1.0, 1.0).unwrap();
        assert_eq!(g.max_g, 0.0);
        assert_eq!(g.max_grad_g, 0.0);
    }

    #[test]
    fn taylor_split_rejects_frequency_mismatch() {
        let omega = FrequencyVector::new(vec![1, 2], 1.0).unwrap();
        let h0 = H0Spec::Quadratic {
            matrix: DMatrix::identity(2, 2),
            linear: DVector::from_vec(vec![1.0, 1.0]),
            constant: 0.0,
        };
        assert!(taylor_split(&h0, &omega, 1.0, 1.0).is_err());
    }

    #[test]
    fn estimate_convexity_examples() {
        let id = H0Spec::Quadratic {
            matrix: DMatrix::identity(2, 2),
            linear: DVector::zeros(2),
            constant: 0.0,
        };
        let c = estimate_convexity(&id, &[1.0, 1.0], 3).unwrap();
        assert!((c.m_minus - 1.0).abs() < 1e-14 && (c.m_plus - 1.0).abs() < 1e-14);
        assert_eq!(c.grad3_inf, 0.0);

        let aniso = H0Spec::polynomial(2, vec![(vec![2, 0], 0.5), (vec![0, 2], 2.0)]).unwrap();
        let c = estimate_convexity(&aniso, &[1.0, 1.0], 4).unwrap();
        assert!((c.m_minus - 1.0).abs() < 1e-12 && (c.m_plus - 4.0).abs() < 1e-12);

        let indef = H0Spec::polynomial(2, vec![(vec![2, 0], 1.0), (vec![0, 2], -1.0)]).unwrap();
        assert!(estimate_convexity(&indef, &[1.0, 1.0], 3).is_err());
    }

    #[test]
    fn h0_translate_matches_direct_evaluation() {
        let h0 = H0Spec::polynomial(
            2,
            vec![(vec![2, 0], 0.5), (vec![0, 2], 0.5), (vec![1, 1], 0.25), (vec![3, 0], 0.1)],
        )
        .unwrap();
        let center = [0.3, -0.2];
        let t = h0.translate(&center);
        for p in [[0.0, 0.0], [0.1, 0.2], [-0.4, 0.15]] {
            let shifted = [center[0] + p[0], center[1] + p[1]];
            assert!((t.value(&p) - h0.value(&shifted)).abs() < 1e-13);
            assert!((t.grad(&p) - h0.grad(&shifted)).amax() < 1e-12);
        }
    }

    fn arb_field(n: usize) -> impl Strategy<Value = FourierField> {
        proptest::collection::vec((proptest::collection::vec(-3i32..=3, n), -1.0f64..1.0, -1.0f64..1.0), 1..8)
            .prop_map(move |entries| {
                let mut f = FourierField::empty(n, Arc::new(SlowGrid::trivial()), 3 * n as i64);
                for (k, re, im) in entries {
                    let v = vec![Complex64::new(re, im)];
                    let _ = f.insert(k, v);
                }
                f
            })
    }

    proptest! {
        #[test]
        fn norm_triangle_inequality(f in arb_field(2), g in arb_field(2), rho in 0.0f64..1.0) {
            let sum = f.add(&g).unwrap();
            let lhs = fourier_norm(&sum, rho).unwrap();
            let rhs = fourier_norm(&f, rho).unwrap() + fourier_norm(&g, rho).unwrap();
            prop_assert!(lhs <= rhs + 1e-12);
        }

        #[test]
        fn split_is_a_partition(f in arb_field(2), p1 in -3i64..=3, p2 in -3i64..=3) {
            prop_assume!(p1 != 0 || p2 != 0);
            let omega = FrequencyVector::reduced(vec![p1, p2], 1.0).unwrap();
            let (res, non) = split_resonant(&f, &omega).unwrap();
            let mut all: Vec<_> = res.modes.keys().cloned().collect();
            all.extend(non.modes.keys().cloned());
            all.sort();
            let mut orig: Vec<_> = f.modes.keys().cloned().collect();
            orig.sort();
            prop_assert_eq!(all, orig);
            for k in res.modes.keys() {
                prop_assert_eq!(omega.dot_p(k), 0);
            }
            for k in non.modes.keys() {
                prop_assert!(omega.dot_p(k) != 0);
            }
            // mode-wise sums reconstruct f, so norms obey the triangle bound
            let rho = 0.3;
            let nf = fourier_norm(&f, rho).unwrap();
            let parts = fourier_norm(&res, rho).unwrap() + fourier_norm(&non, rho).unwrap();
            prop_assert!(parts >= nf - 1e-12);
        }
    }
}
