//! Majorant calculus: the coefficientwise ordering on power series, closure
//! of the ordering under the series algebra, the majorant commutator, and the
//! exact solutions W, W^{|k|} of the majorant PDEs together with the
//! one-and-a-half-degree-of-freedom Burgers solution.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::sums::BudgetFn;

pub const DEFAULT_CAP: usize = 24;

// ---------------------------------------------------------------------------
// Truncated multivariate power series
// ---------------------------------------------------------------------------

/// A truncated power series with real coefficients indexed by multi-indices.
/// `tail_flag` records that a product pushed mass beyond the cap.
#[derive(Debug, Clone, PartialEq)]
pub struct MajorantSeries {
    pub dim: usize,
    pub degree_cap: usize,
    pub coeffs: BTreeMap<Vec<u16>, f64>,
    pub tail_flag: bool,
}

impl MajorantSeries {
    pub fn zero(dim: usize, degree_cap: usize) -> Self {
        MajorantSeries { dim, degree_cap, coeffs: BTreeMap::new(), tail_flag: false }
    }

    pub fn from_coeffs(dim: usize, degree_cap: usize, entries: &[(Vec<u16>, f64)]) -> Result<Self> {
        let mut s = MajorantSeries::zero(dim, degree_cap);
        for (beta, c) in entries {
            s.set(beta.clone(), *c)?;
        }
        Ok(s)
    }

    /// Univariate series from a dense coefficient slice.
    pub fn univariate(degree_cap: usize, coeffs: &[f64]) -> Self {
        let mut s = MajorantSeries::zero(1, degree_cap);
        for (j, &c) in coeffs.iter().enumerate().take(degree_cap + 1) {
            if c != 0.0 {
                s.coeffs.insert(vec![j as u16], c);
            }
        }
        s
    }

    pub fn set(&mut self, beta: Vec<u16>, c: f64) -> Result<()> {
        if beta.len() != self.dim {
            return Err(Error::invalid("MajorantSeries", "multi-index dimension mismatch"));
        }
        if order(&beta) > self.degree_cap {
            return Err(Error::invalid("MajorantSeries", "multi-index beyond degree cap"));
        }
        if c == 0.0 {
            self.coeffs.remove(&beta);
        } else {
            self.coeffs.insert(beta, c);
        }
        Ok(())
    }

    pub fn coeff(&self, beta: &[u16]) -> f64 {
        self.coeffs.get(beta).copied().unwrap_or(0.0)
    }

    pub fn add(&self, other: &MajorantSeries) -> Result<MajorantSeries> {
        self.compatible(other)?;
        let mut out = self.clone();
        out.degree_cap = self.degree_cap.min(other.degree_cap);
        out.coeffs.retain(|b, _| order(b) <= out.degree_cap);
        out.tail_flag = self.tail_flag || other.tail_flag;
        for (b, c) in &other.coeffs {
            if order(b) <= out.degree_cap {
                *out.coeffs.entry(b.clone()).or_insert(0.0) += c;
            }
        }
        out.coeffs.retain(|_, c| *c != 0.0);
        Ok(out)
    }

    pub fn scale(&self, factor: f64) -> MajorantSeries {
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c *= factor;
        }
        out.coeffs.retain(|_, c| *c != 0.0);
        out
    }

    /// Truncated product; sets the tail flag when any cross term falls beyond
    /// the cap.
    pub fn mul(&self, other: &MajorantSeries) -> Result<MajorantSeries> {
        self.compatible(other)?;
        let cap = self.degree_cap.min(other.degree_cap);
        let mut out = MajorantSeries::zero(self.dim, cap);
        out.tail_flag = self.tail_flag || other.tail_flag;
        for (b1, c1) in &self.coeffs {
            for (b2, c2) in &other.coeffs {
                if order(b1) + order(b2) > cap {
                    out.tail_flag = true;
                    continue;
                }
                let sum: Vec<u16> = b1.iter().zip(b2).map(|(a, b)| a + b).collect();
                *out.coeffs.entry(sum).or_insert(0.0) += c1 * c2;
            }
        }
        out.coeffs.retain(|_, c| *c != 0.0);
        Ok(out)
    }

    /// Partial derivative. The cap drops by one: the top-degree coefficients
    /// of the derivative would need the truncated tail.
    pub fn partial(&self, var: usize) -> Result<MajorantSeries> {
        if var >= self.dim {
            return Err(Error::invalid("MajorantSeries", "derivative variable out of range"));
        }
        let mut out = MajorantSeries::zero(self.dim, self.degree_cap.saturating_sub(1));
        out.tail_flag = self.tail_flag;
        for (b, c) in &self.coeffs {
            if b[var] == 0 {
                continue;
            }
            let mut b2 = b.clone();
            b2[var] -= 1;
            *out.coeffs.entry(b2).or_insert(0.0) += c * b[var] as f64;
        }
        Ok(out)
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .map(|(b, c)| {
                c * b.iter().zip(z).map(|(&p, &x)| x.powi(p as i32)).product::<f64>()
            })
            .sum()
    }

    fn compatible(&self, other: &MajorantSeries) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::invalid("MajorantSeries", "dimension mismatch"));
        }
        Ok(())
    }
}

fn order(beta: &[u16]) -> usize {
    beta.iter().map(|&x| x as usize).sum()
}

/// `g` majorates `f`: g_beta >= |f_beta| for every multi-index up to the
/// smaller of the two caps. Comparisons carry a relative slack of 1e-12 so
/// that ties produced by rounding do not flip the verdict.
pub fn majorizes(g: &MajorantSeries, f: &MajorantSeries) -> bool {
    if g.dim != f.dim {
        return false;
    }
    let cap = g.degree_cap.min(f.degree_cap);
    let mut keys: Vec<&Vec<u16>> = g.coeffs.keys().chain(f.coeffs.keys()).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter().filter(|b| order(b) <= cap).all(|b| {
        let fb = f.coeff(b).abs();
        g.coeff(b) >= fb - 1e-12 * fb - 1e-300
    })
}

/// Trapezoid integral over a parameter of a series-valued function; preserves
/// the ordering when the integrands are ordered at every node.
pub fn param_integral(
    f: impl Fn(f64) -> MajorantSeries,
    a: f64,
    b: f64,
    steps: usize,
) -> Result<MajorantSeries> {
    let h = (b - a) / steps as f64;
    let mut acc = f(a).scale(0.5 * h);
    for i in 1..steps {
        acc = acc.add(&f(a + i as f64 * h).scale(h))?;
    }
    acc.add(&f(b).scale(0.5 * h))
}

/// The Cauchy-type majorant `b c / (b - z)` of any function bounded by `c` on
/// the polydisk of radius `b`, expanded in `dims` variables: the coefficient
/// of z^beta is `c b^{-|beta|} |beta|! / beta!`.
pub fn bound_to_majorant(c: f64, b: f64, dims: usize, cap: usize) -> Result<MajorantSeries> {
    if c < 0.0 || !(b > 0.0) {
        return Err(Error::invalid("bound_to_majorant", "need c >= 0 and b > 0"));
    }
    let mut out = MajorantSeries::zero(dims, cap);
    if c == 0.0 {
        return Ok(out);
    }
    let mut beta = vec![0u16; dims];
    fn rec(
        out: &mut MajorantSeries,
        beta: &mut Vec<u16>,
        dim: usize,
        left: usize,
        c: f64,
        b: f64,
    ) {
        if dim == beta.len() {
            let total = order(beta);
            let mut coef = c * b.powi(-(total as i32));
            // multinomial |beta|! / beta!
            let mut rem = total;
            for &e in beta.iter() {
                for i in 1..=e as usize {
                    coef = coef * rem as f64 / i as f64;
                    rem -= 1;
                }
            }
            out.coeffs.insert(beta.clone(), coef);
            return;
        }
        for e in 0..=left {
            beta[dim] = e as u16;
            rec(out, beta, dim + 1, left - e, c, b);
        }
        beta[dim] = 0;
    }
    rec(&mut out, &mut beta, 0, cap, c, b);
    Ok(out)
}

/// The majorant commutator `(|l| + |k|) F G + (n + 2m) d/dY (F G)` in the
/// collapsed variable Y.
pub fn majorant_commutator(
    f: &MajorantSeries,
    g: &MajorantSeries,
    l: &[i32],
    k: &[i32],
    n: usize,
    m: usize,
) -> Result<MajorantSeries> {
    let prod = f.mul(g)?;
    let weight = (crate::lattice::l1(l) + crate::lattice::l1(k)) as f64;
    prod.scale(weight).add(&prod.partial(0)?.scale((n + 2 * m) as f64))
}

// ---------------------------------------------------------------------------
// Univariate series helpers (needed for coefficientwise checks on W)
// ---------------------------------------------------------------------------

fn uni_mul(a: &[f64], b: &[f64], cap: usize) -> Vec<f64> {
    let mut out = vec![0.0; cap + 1];
    for (i, &x) in a.iter().enumerate().take(cap + 1) {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(cap + 1 - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// Reciprocal of a series with nonzero constant term.
fn uni_inv(a: &[f64], cap: usize) -> Vec<f64> {
    let mut out = vec![0.0; cap + 1];
    out[0] = 1.0 / a[0];
    for j in 1..=cap {
        let mut s = 0.0;
        for i in 1..=j.min(a.len() - 1) {
            s += a[i] * out[j - i];
        }
        out[j] = -s / a[0];
    }
    out
}

/// Square root of a series with positive constant term.
fn uni_sqrt(a: &[f64], cap: usize) -> Vec<f64> {
    let mut out = vec![0.0; cap + 1];
    out[0] = a[0].sqrt();
    for j in 1..=cap {
        let mut s = 0.0;
        for i in 1..j {
            s += out[i] * out[j - i];
        }
        let aj = if j < a.len() { a[j] } else { 0.0 };
        out[j] = (aj - s) / (2.0 * out[0]);
    }
    out
}

/// exp of a series with zero constant term, via the ODE (exp f)' = f' exp f.
fn uni_exp(a: &[f64], cap: usize) -> Vec<f64> {
    debug_assert!(a[0] == 0.0);
    let mut out = vec![0.0; cap + 1];
    out[0] = 1.0;
    for j in 1..=cap {
        let mut s = 0.0;
        for i in 1..=j.min(a.len() - 1) {
            s += i as f64 * a[i] * out[j - i];
        }
        out[j] = s / j as f64;
    }
    out
}

// ---------------------------------------------------------------------------
// The exact majorant solutions
// ---------------------------------------------------------------------------

/// Closed-form solutions of the majorant PDEs:
/// `W = 2 / ((sigma - Y) + sqrt((sigma - Y)^2 - 4 A(delta)))` and
/// `W^{|k|} = W exp(W A(delta) |k| / K)` for |k| > K. The second budget in
/// the printed solution is identified with A; with that choice both closed
/// forms satisfy their PDEs exactly.
#[derive(Debug, Clone)]
pub struct MajorantSolution {
    pub sigma: f64,
    pub k_cutoff: f64,
    pub budget: BudgetFn,
    /// admissible |Y| window, typically (sqrt(n) + 2 sqrt(m)) R
    pub y_max: f64,
}

impl MajorantSolution {
    pub fn new(sigma: f64, k_cutoff: f64, budget: BudgetFn, y_max: f64) -> Result<Self> {
        if !(sigma > 0.0) || !(k_cutoff > 0.0) || y_max < 0.0 || y_max >= sigma {
            return Err(Error::invalid("MajorantSolution", "need 0 <= y_max < sigma, K > 0"));
        }
        Ok(MajorantSolution { sigma, k_cutoff, budget, y_max })
    }

    pub fn a_of(&self, delta: f64) -> f64 {
        self.budget.a_integral(delta)
    }

    fn discriminant(&self, y: f64, delta: f64) -> Result<f64> {
        let s = self.sigma - y;
        let d2 = s * s - 4.0 * self.a_of(delta);
        if d2 < 0.0 {
            return Err(Error::MajorantDomain(format!(
                "(sigma - Y)^2 - 4A = {d2:.6e} < 0 at Y = {y}, delta = {delta}: flow time exceeded"
            )));
        }
        Ok(d2)
    }

    /// W(Y, delta); at delta = 0 equals 1 / (sigma - Y).
    pub fn eval_w(&self, y: f64, delta: f64) -> Result<f64> {
        if y.abs() > self.y_max * (1.0 + 1e-12) {
            return Err(Error::MajorantDomain(format!(
                "|Y| = {} outside the configured window {}",
                y.abs(),
                self.y_max
            )));
        }
        let d2 = self.discriminant(y, delta)?;
        Ok(2.0 / ((self.sigma - y) + d2.sqrt()))
    }

    /// W^{|k|}(Y, delta): equals W for k_norm <= K.
    pub fn eval_wk(&self, y: f64, delta: f64, k_norm: f64) -> Result<f64> {
        let w = self.eval_w(y, delta)?;
        if k_norm <= self.k_cutoff {
            Ok(w)
        } else {
            Ok(w * (w * self.a_of(delta) * k_norm / self.k_cutoff).exp())
        }
    }

    /// d/dY of W, used by the transfer-property checks.
    pub fn eval_w_y(&self, y: f64, delta: f64) -> Result<f64> {
        let d2 = self.discriminant(y, delta)?;
        let w = self.eval_w(y, delta)?;
        Ok(w / d2.sqrt())
    }

    /// Taylor coefficients of Y -> W(Y, delta) about Y = 0 up to `cap`.
    pub fn w_series(&self, delta: f64, cap: usize) -> Result<MajorantSeries> {
        self.discriminant(0.0, delta)?;
        let a = self.a_of(delta);
        // s = sigma - Y, s^2 - 4A as polynomials in Y
        let s = vec![self.sigma, -1.0];
        let disc = vec![self.sigma * self.sigma - 4.0 * a, -2.0 * self.sigma, 1.0];
        let root = uni_sqrt(&disc, cap);
        let mut denom = root;
        denom[0] += s[0];
        denom[1] += s[1];
        let inv = uni_inv(&denom, cap);
        Ok(MajorantSeries::univariate(cap, &inv).scale(2.0))
    }

    /// Taylor coefficients of Y -> W^{|k|}(Y, delta) up to `cap`.
    pub fn wk_series(&self, delta: f64, k_norm: f64, cap: usize) -> Result<MajorantSeries> {
        let w = self.w_series(delta, cap)?;
        if k_norm <= self.k_cutoff {
            return Ok(w);
        }
        let a = self.a_of(delta);
        let mut dense = vec![0.0; cap + 1];
        for (b, c) in &w.coeffs {
            dense[b[0] as usize] = *c;
        }
        let scaled: Vec<f64> = dense.iter().map(|c| c * a * k_norm / self.k_cutoff).collect();
        // exp(c0) * exp(series - c0)
        let c0 = scaled[0];
        let mut centered = scaled;
        centered[0] = 0.0;
        let e = uni_exp(&centered, cap);
        let prod = uni_mul(&dense, &e, cap);
        Ok(MajorantSeries::univariate(cap, &prod).scale(c0.exp()))
    }
}

/// Residual report from the finite-difference verification of the W PDEs.
#[derive(Debug, Clone)]
pub struct PdeResidualReport {
    pub max_w_residual: f64,
    pub max_wk_residual: f64,
    pub samples: usize,
}

/// Grid for residual and transfer-property checks.
#[derive(Debug, Clone)]
pub struct MajorantGrid {
    pub y_values: Vec<f64>,
    pub delta_values: Vec<f64>,
    pub k_norms: Vec<f64>,
}

impl MajorantGrid {
    /// Standard grid strictly inside the validity region of `sol` up to
    /// `delta_max`: Y in [0, y_max], 21 x 21 nodes, three k norms.
    pub fn standard(sol: &MajorantSolution, delta_max: f64) -> MajorantGrid {
        let ny = 21;
        let nd = 21;
        let y_values: Vec<f64> =
            (0..ny).map(|i| sol.y_max * 0.999 * i as f64 / (ny - 1) as f64).collect();
        let delta_values: Vec<f64> =
            (0..nd).map(|i| delta_max * i as f64 / (nd - 1) as f64).collect();
        let k = sol.k_cutoff;
        MajorantGrid { y_values, delta_values, k_norms: vec![0.5 * k, 2.0 * k, 3.7 * k] }
    }
}

/// Central-difference residuals of `W_delta = a W W_Y` and
/// `W^{|k|}_delta = a (W W^{|k|}_Y + (|k|/K) W W^{|k|})` over the grid.
/// Nodes within `switch_margin` of a branch switch of `a` are skipped.
pub fn check_w_pde(
    sol: &MajorantSolution,
    grid: &MajorantGrid,
    switch_points: &[f64],
) -> Result<PdeResidualReport> {
    let h = 1e-4;
    let mut report = PdeResidualReport { max_w_residual: 0.0, max_wk_residual: 0.0, samples: 0 };
    for &y in &grid.y_values {
        for &delta in &grid.delta_values {
            if delta < h {
                continue;
            }
            if switch_points.iter().any(|&s| (delta - s).abs() < 20.0 * h) {
                continue;
            }
            let hy = h * sol.sigma.max(1.0);
            if y - hy < -sol.y_max || y + hy > sol.y_max {
                continue;
            }
            let a = sol.budget.a(delta);
            let w = sol.eval_w(y, delta)?;
            let w_d = (sol.eval_w(y, delta + h)? - sol.eval_w(y, delta - h)?) / (2.0 * h);
            let w_y = (sol.eval_w(y + hy, delta)? - sol.eval_w(y - hy, delta)?) / (2.0 * hy);
            report.max_w_residual = report.max_w_residual.max((w_d - a * w * w_y).abs());
            for &kn in &grid.k_norms {
                // below the cutoff W^{|k|} = W and obeys the W equation,
                // already covered above
                if kn <= sol.k_cutoff {
                    debug_assert_eq!(sol.eval_wk(y, delta, kn)?, w);
                    continue;
                }
                let wk = sol.eval_wk(y, delta, kn)?;
                let wk_d =
                    (sol.eval_wk(y, delta + h, kn)? - sol.eval_wk(y, delta - h, kn)?) / (2.0 * h);
                let wk_y =
                    (sol.eval_wk(y + hy, delta, kn)? - sol.eval_wk(y - hy, delta, kn)?) / (2.0 * hy);
                let rhs = a * (w * wk_y + kn / sol.k_cutoff * w * wk);
                report.max_wk_residual = report.max_wk_residual.max((wk_d - rhs).abs());
            }
            report.samples += 1;
        }
    }
    Ok(report)
}

/// Pointwise verification of the five transfer properties of W and W^{|k|}
/// on the grid. Each side is a positive function of Y; the checks compare
/// values on [0, y_max]. k-norm pairs for the last item stay on one side of
/// the cutoff.
#[derive(Debug, Clone)]
pub struct TransferReport {
    pub chain_lower: bool,      // 1/(sigma - Y) <= W
    pub chain_upper: bool,      // W <= W_Y
    pub w_below_wk: bool,       // W <= W^{|k|}
    pub cross_derivative: bool, // W_Y W^{|k|} <= W W^{|k|}_Y
    pub exp_bound: bool,        // W^{|k|} <= W e^{sigma |k| / K}
    pub monotone_in_k: bool,    // W^{|k'|} <= W^{|k|} e^{sigma(|k'|-|k|)/K}
    pub samples: usize,
}

impl TransferReport {
    pub fn all_pass(&self) -> bool {
        self.chain_lower
            && self.chain_upper
            && self.w_below_wk
            && self.cross_derivative
            && self.exp_bound
            && self.monotone_in_k
    }
}

pub fn check_tr_properties(sol: &MajorantSolution, grid: &MajorantGrid) -> Result<TransferReport> {
    let mut rep = TransferReport {
        chain_lower: true,
        chain_upper: true,
        w_below_wk: true,
        cross_derivative: true,
        exp_bound: true,
        monotone_in_k: true,
        samples: 0,
    };
    let tol = 1e-12;
    let mut k_norms = grid.k_norms.clone();
    k_norms.sort_by(f64::total_cmp);
    for &y in &grid.y_values {
        for &delta in &grid.delta_values {
            let w = sol.eval_w(y, delta)?;
            let w_y = sol.eval_w_y(y, delta)?;
            rep.chain_lower &= 1.0 / (sol.sigma - y) <= w * (1.0 + tol);
            rep.chain_upper &= w <= w_y * (1.0 + tol);
            let a = sol.a_of(delta);
            for &kn in &k_norms {
                let wk = sol.eval_wk(y, delta, kn)?;
                rep.w_below_wk &= w <= wk * (1.0 + tol);
                // W^{|k|}_Y = W_Y e^{kappa A W} (1 + kappa A W) for |k| > K,
                // and equals W_Y below the cutoff
                let wk_y = if kn <= sol.k_cutoff {
                    w_y
                } else {
                    let kappa = kn / sol.k_cutoff;
                    w_y * (kappa * a * w).exp() * (1.0 + kappa * a * w)
                };
                rep.cross_derivative &= w_y * wk <= w * wk_y * (1.0 + tol);
                rep.exp_bound &= wk <= w * (sol.sigma * kn / sol.k_cutoff).exp() * (1.0 + tol);
            }
            for pair in k_norms.windows(2) {
                let (ka, kb) = (pair[0], pair[1]);
                if ka >= kb || (ka <= sol.k_cutoff) != (kb <= sol.k_cutoff) {
                    continue;
                }
                let wa = sol.eval_wk(y, delta, ka)?;
                let wb = sol.eval_wk(y, delta, kb)?;
                rep.monotone_in_k &=
                    wb <= wa * (sol.sigma * (kb - ka) / sol.k_cutoff).exp() * (1.0 + tol);
            }
            rep.samples += 1;
        }
    }
    Ok(rep)
}

/// The pedagogical Burgers solution
/// `U(Y, delta) = 2 sigma / ((sigma - Y) + sqrt((sigma - Y)^2 - 8 sigma C delta))`.
pub fn solve_burgers_1dof(sigma: f64, c: f64, y: f64, delta: f64) -> Result<f64> {
    let s = sigma - y;
    let d2 = s * s - 8.0 * sigma * c * delta;
    if d2 < 0.0 {
        return Err(Error::MajorantDomain(format!(
            "Burgers discriminant {d2:.6e} < 0 at Y = {y}, delta = {delta} (maximal flow time {:.6e})",
            sigma / (8.0 * c)
        )));
    }
    Ok(2.0 * sigma / (s + d2.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series1(coeffs: &[f64]) -> MajorantSeries {
        MajorantSeries::univariate(12, coeffs)
    }

    #[test]
    fn majorizes_examples() {
        let f = MajorantSeries::from_coeffs(
            1,
            8,
            &[(vec![0], -0.3), (vec![1], 0.7), (vec![2], -1.1)],
        )
        .unwrap();
        let mut g = MajorantSeries::zero(1, 8);
        for (b, c) in &f.coeffs {
            g.set(b.clone(), c.abs()).unwrap();
        }
        assert!(majorizes(&g, &f));
        // f = Y is not majorized by g = Y^2
        let y = series1(&[0.0, 1.0]);
        let y2 = series1(&[0.0, 0.0, 1.0]);
        assert!(!majorizes(&y2, &y));
        // geometric comparison: 1/(sigma - Y) truncated vs sigma' < sigma
        let sigma: f64 = 0.9;
        let sigma_p: f64 = 0.7;
        let f: Vec<f64> = (0..=12).map(|j| sigma.powi(-(j as i32) - 1)).collect();
        let g: Vec<f64> = (0..=12).map(|j| sigma_p.powi(-(j as i32) - 1)).collect();
        assert!(majorizes(&series1(&g), &series1(&f)));
    }

    #[test]
    fn derivative_example() {
        let y2 = series1(&[0.0, 0.0, 1.0]);
        let d = y2.partial(0).unwrap();
        assert_eq!(d.coeff(&[1]), 2.0);
    }

    #[test]
    fn bound_to_majorant_examples() {
        let g = bound_to_majorant(1.0, 1.0, 1, 6).unwrap();
        for j in 0..=6u16 {
            assert!((g.coeff(&[j]) - 1.0).abs() < 1e-14);
        }
        assert!(bound_to_majorant(0.0, 1.0, 2, 4).unwrap().coeffs.is_empty());
        // Cauchy-type initial data: coefficient c sigma^{-j}
        let c = 0.37;
        let sigma = 1.3;
        let g = bound_to_majorant(c, sigma, 1, 8).unwrap();
        for j in 0..=8u16 {
            assert!((g.coeff(&[j]) - c * sigma.powi(-(j as i32))).abs() < 1e-14);
        }
    }

    #[test]
    fn bound_to_majorant_dominates_bounded_polynomials() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let dims = rng.gen_range(1..=3usize);
            let b: f64 = rng.gen_range(0.5..2.0);
            let cap = 8;
            let mut f = MajorantSeries::zero(dims, cap);
            for _ in 0..rng.gen_range(1..6) {
                let beta: Vec<u16> =
                    (0..dims).map(|_| rng.gen_range(0..=2u16)).collect();
                if order(&beta) <= cap {
                    f.set(beta, rng.gen_range(-1.0..1.0)).unwrap();
                }
            }
            // certified sup on the polydisk |z_j| <= b
            let c: f64 = f.coeffs.iter().map(|(beta, v)| v.abs() * b.powi(order(beta) as i32)).sum();
            let g = bound_to_majorant(c, b, dims, cap).unwrap();
            assert!(majorizes(&g, &f));
        }
    }

    #[test]
    fn commutator_examples() {
        // constants with zero weights vanish
        let one = series1(&[1.0]);
        let c = majorant_commutator(&one, &one, &[0, 0], &[0, 0], 2, 0).unwrap();
        assert!(c.coeffs.is_empty());
        // 1/(sigma - Y) against itself
        let sigma = 1.1f64;
        let f: Vec<f64> = (0..=12).map(|j| sigma.powi(-(j as i32) - 1)).collect();
        let fs = series1(&f);
        let c = majorant_commutator(&fs, &fs, &[1, 0], &[0, 1], 2, 0).unwrap();
        let prod = fs.mul(&fs).unwrap();
        let expect = prod.scale(2.0).add(&prod.partial(0).unwrap().scale(2.0)).unwrap();
        for (b, v) in &expect.coeffs {
            assert!((c.coeff(b) - v).abs() < 1e-12 * v.abs().max(1.0));
        }
        // bilinearity in F
        let c2 = majorant_commutator(&fs.scale(2.0), &fs, &[1, 0], &[0, 1], 2, 0).unwrap();
        for (b, v) in &c.coeffs {
            assert!((c2.coeff(b) - 2.0 * v).abs() < 1e-12 * v.abs().max(1.0));
        }
    }

    fn sol_const(sigma: f64, a_rate: f64, y_max: f64, k: f64) -> MajorantSolution {
        MajorantSolution::new(sigma, k, BudgetFn::Constant(a_rate), y_max).unwrap()
    }

    #[test]
    fn eval_w_examples() {
        let sol = sol_const(1.0, 0.0, 0.5, 4.0);
        assert!((sol.eval_w(0.3, 5.0).unwrap() - 1.0 / 0.7).abs() < 1e-14);
        // sigma = 1, Y = 0, A = 0.1875 -> 4/3
        let sol = sol_const(1.0, 0.1875, 0.5, 4.0);
        assert!((sol.eval_w(0.0, 1.0).unwrap() - 4.0 / 3.0).abs() < 1e-14);
        // past the flow time
        let sol = sol_const(1.0, 0.25 + 1e-6, 0.5, 4.0);
        assert!(sol.eval_w(0.0, 1.0).is_err());
    }

    #[test]
    fn eval_wk_examples() {
        let sol = sol_const(1.0, 0.1875, 0.5, 4.0);
        let w = sol.eval_w(0.0, 1.0).unwrap();
        assert_eq!(sol.eval_wk(0.0, 1.0, 3.0).unwrap(), w);
        let wk = sol.eval_wk(0.0, 1.0, 8.0).unwrap();
        assert!((wk - w * (0.5f64).exp()).abs() < 1e-13);
        let flat = sol_const(1.0, 0.0, 0.5, 4.0);
        assert!((flat.eval_wk(0.2, 3.0, 11.0).unwrap() - 1.0 / 0.8).abs() < 1e-14);
    }

    #[test]
    fn w_pde_residuals() {
        // a identically zero: solution constant in delta
        let sol = sol_const(1.0, 0.0, 0.18, 5.0);
        let grid = MajorantGrid::standard(&sol, 2.0);
        let rep = check_w_pde(&sol, &grid, &[]).unwrap();
        assert!(rep.max_w_residual < 1e-12);
        assert!(rep.max_wk_residual < 1e-12);
        // constant a
        let sol = sol_const(1.0, 0.02, 0.18, 5.0);
        let rep = check_w_pde(&sol, &MajorantGrid::standard(&sol, 2.0), &[]).unwrap();
        assert!(rep.max_w_residual < 1e-5, "residual {}", rep.max_w_residual);
        assert!(rep.max_wk_residual < 1e-5, "residual {}", rep.max_wk_residual);
    }

    #[test]
    fn transfer_properties_hold_on_admissible_samples() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let sigma = rng.gen_range(0.3..1.0);
            let y_max = sigma / 5.0 * 0.999;
            let a_star = rng.gen_range(0.0..4.0 * sigma * sigma / 25.0 * 0.999);
            let delta_max = 1.0;
            let k = rng.gen_range(4.0..12.0);
            let sol = sol_const(sigma, a_star / delta_max, y_max, k);
            let grid = MajorantGrid::standard(&sol, delta_max);
            let rep = check_tr_properties(&sol, &grid).unwrap();
            assert!(rep.all_pass(), "sigma={sigma} A*={a_star} K={k}: {rep:?}");
        }
    }

    #[test]
    fn w_series_matches_closed_form_and_orderings() {
        let sol = sol_const(0.8, 0.015, 0.15, 5.0);
        let delta = 1.0;
        let cap = 12;
        let w = sol.w_series(delta, cap).unwrap();
        // series evaluation agrees with the closed form well inside the disk
        for y in [0.0, 0.05, 0.1] {
            let direct = sol.eval_w(y, delta).unwrap();
            assert!((w.eval(&[y]) - direct).abs() < 1e-6 * direct);
        }
        // coefficientwise chain at cap: 1/(sigma - Y) << W << W_Y
        let geo: Vec<f64> = (0..=cap).map(|j| (0.8f64).powi(-(j as i32) - 1)).collect();
        assert!(majorizes(&w, &series1(&geo)));
        let w_y = w.partial(0).unwrap();
        assert!(majorizes(&w_y, &w));
        // W << W^{|k|} coefficientwise
        let wk = sol.wk_series(delta, 2.0 * sol.k_cutoff, cap).unwrap();
        assert!(majorizes(&wk, &w));
    }

    #[test]
    fn burgers_examples() {
        let sigma = 1.0;
        assert!((solve_burgers_1dof(sigma, 0.3, 0.2, 0.0).unwrap() - sigma / 0.8).abs() < 1e-14);
        // sigma=1, C=1/8, Y=0, delta=0.75 -> 4/3
        assert!((solve_burgers_1dof(1.0, 0.125, 0.0, 0.75).unwrap() - 4.0 / 3.0).abs() < 1e-14);
        // past the maximal flow time sigma / (8 C)
        let c = 0.125;
        assert!(solve_burgers_1dof(1.0, c, 0.0, 1.0 + 1e-9).is_err());
    }

    fn arb_ordered_pair() -> impl Strategy<Value = (MajorantSeries, MajorantSeries)> {
        proptest::collection::vec((0u16..=6, 0.0f64..1.0, -1.0f64..1.0), 1..8).prop_map(|entries| {
            let mut g = MajorantSeries::zero(1, 12);
            let mut f = MajorantSeries::zero(1, 12);
            for (deg, mag, frac) in entries {
                let b = vec![deg];
                let cur = g.coeff(&b);
                g.set(b.clone(), cur + mag).unwrap();
                let curf = f.coeff(&b);
                f.set(b, curf + mag * frac).unwrap();
            }
            (f, g)
        })
    }

    proptest! {
        #[test]
        fn ordering_closed_under_algebra(
            (f1, g1) in arb_ordered_pair(),
            (f2, g2) in arb_ordered_pair(),
        ) {
            prop_assert!(majorizes(&g1, &f1));
            prop_assert!(majorizes(&g1.add(&g2).unwrap(), &f1.add(&f2).unwrap()));
            prop_assert!(majorizes(&g1.mul(&g2).unwrap(), &f1.mul(&f2).unwrap()));
            prop_assert!(majorizes(&g1.partial(0).unwrap(), &f1.partial(0).unwrap()));
            let fi = param_integral(|t| f1.scale(t), 0.0, 1.0, 8).unwrap();
            let gi = param_integral(|t| g1.scale(t), 0.0, 1.0, 8).unwrap();
            prop_assert!(majorizes(&gi, &fi));
            // squares of ordered pairs stay ordered
            prop_assert!(majorizes(&g1.mul(&g1).unwrap(), &f1.mul(&f1).unwrap()));
        }

        #[test]
        fn ordering_is_a_partial_order(
            (f, g) in arb_ordered_pair(),
            (_, h_extra) in arb_ordered_pair(),
        ) {
            // reflexivity on nonnegative series
            prop_assert!(majorizes(&g, &g));
            // transitivity: g << g + h for nonnegative h
            let bigger = g.add(&h_extra).unwrap();
            prop_assert!(majorizes(&bigger, &f));
            // antisymmetry on nonnegative pairs
            let f_abs = {
                let mut s = MajorantSeries::zero(1, 12);
                for (b, c) in &f.coeffs { s.set(b.clone(), c.abs()).unwrap(); }
                s
            };
            if majorizes(&f_abs, &g) && majorizes(&g, &f_abs) {
                for (b, c) in &g.coeffs {
                    prop_assert!((f_abs.coeff(b) - c).abs() < 1e-14);
                }
            }
        }
    }
}
