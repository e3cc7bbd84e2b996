//! Exponential-weighted convolution sums over the resonance lattice, their
//! closed-form upper bounds, and the budget a(delta), A(delta) feeding the
//! majorant solutions.
//!
//! The weight is
//! `E(k, l+-, l, delta) = exp(-(|l+-| + |l| - |k|)(rho3 + 2 rho2))
//!                      * exp(-(S_{l+-}<w*,l+-> + S_l<w*,l> - S_k<w*,k>))`
//! and the three sums range over decompositions `l+- + l = k` with the free
//! variable in D+-(delta) and the partner in D-+/D>/D0 respectively.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{
    classify, diamond_count, enumerate_diamond, l1, s_k, stopping_time, FrequencyVector,
    LatticeClass, PartitionParams, ENUMERATION_CAP,
};

/// Which of the three convolution sums to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumKind {
    /// Both decomposition members in D+(delta) x D-(delta).
    Pm,
    /// Partner in D>(delta).
    Greater,
    /// Partner in D0.
    Zero,
}

/// A single brute-force sum query.
#[derive(Debug, Clone)]
pub struct SumQuery<'a> {
    pub k: Vec<i32>,
    pub delta: f64,
    pub params: &'a PartitionParams,
    pub omega: &'a FrequencyVector,
}

impl<'a> SumQuery<'a> {
    pub fn new(
        k: Vec<i32>,
        delta: f64,
        params: &'a PartitionParams,
        omega: &'a FrequencyVector,
    ) -> Result<Self> {
        if delta < 0.0 {
            return Err(Error::invalid("SumQuery", "delta must be nonnegative"));
        }
        let dstar = stopping_time(params, omega)?;
        if delta > dstar + 1e-9 {
            return Err(Error::invalid(
                "SumQuery",
                format!("delta = {delta} beyond stopping time {dstar}"),
            ));
        }
        Ok(SumQuery { k, delta, params, omega })
    }
}

/// The weight exponent w(l, delta) = |l| (rho3 + 2 rho2) + S_l <w*, l>, so
/// that E = exp(w(k) - w(l+-) - w(l)).
fn weight_exponent(k: &[i32], delta: f64, params: &PartitionParams, omega: &FrequencyVector) -> f64 {
    l1(k) as f64 * params.conv_width() + s_k(k, delta, params, omega) * omega.dot_omega(k)
}

/// Exact brute-force evaluation of one convolution sum by enumerating the
/// free variable over D+-(delta) and deriving the partner.
pub fn sum_brute(query: &SumQuery, which: SumKind) -> Result<f64> {
    let params = query.params;
    let omega = query.omega;
    let delta = query.delta;
    let n = omega.dim();
    if diamond_count(params.k_cutoff, n) > ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            count: diamond_count(params.k_cutoff, n),
            cap: ENUMERATION_CAP,
        });
    }
    let diamond = enumerate_diamond(params.k_cutoff, n)?;
    let w_k = weight_exponent(&query.k, delta, params, omega);
    let dot_k = omega.dot_p(&query.k);
    let mut total = 0.0;
    for free in &diamond {
        let class_free = classify(free, delta, params, omega);
        let free_sign = match class_free {
            LatticeClass::Dplus => 1,
            LatticeClass::Dminus => -1,
            _ => continue,
        };
        // Claim 1 case split: for Pm the free variable is l+ when <w*,k> >= 0
        // and l- otherwise; each ordered pair is then counted exactly once.
        if which == SumKind::Pm {
            let want = if dot_k >= 0 { 1 } else { -1 };
            if free_sign != want {
                continue;
            }
        }
        let partner: Vec<i32> = query.k.iter().zip(free).map(|(&a, &b)| a - b).collect();
        let class_partner = classify(&partner, delta, params, omega);
        let admit = match which {
            SumKind::Pm => {
                class_partner
                    == if free_sign > 0 { LatticeClass::Dminus } else { LatticeClass::Dplus }
            }
            SumKind::Greater => class_partner == LatticeClass::Dgreater,
            SumKind::Zero => class_partner == LatticeClass::D0,
        };
        if !admit {
            continue;
        }
        let e = (w_k
            - weight_exponent(free, delta, params, omega)
            - weight_exponent(&partner, delta, params, omega))
        .exp();
        total += e;
    }
    Ok(total)
}

/// Claim 1 bound on Sigma_+-: `(2K)^n / (2 n!)` for delta <= T-bar n / (2K),
/// then `(2K)^{n-1} T-bar / (2 (n-1)! delta)`. Continuous at the switch and
/// nonincreasing in delta.
pub fn bound_pm(delta: f64, params: &PartitionParams, omega: &FrequencyVector) -> f64 {
    0.5 * bound_greater(delta, params, omega)
}

/// Claim 2 bound on Sigma_>: twice the Claim 1 constants.
pub fn bound_greater(delta: f64, params: &PartitionParams, omega: &FrequencyVector) -> f64 {
    let n = omega.dim() as f64;
    let k2 = 2.0 * params.k_cutoff;
    let t_bar = omega.t_bar;
    let switch = t_bar * n / k2;
    if delta <= switch {
        k2.powf(n) / factorial(omega.dim())
    } else {
        k2.powf(n - 1.0) * t_bar / (factorial(omega.dim() - 1) * delta)
    }
}

/// Claim 3 bound on Sigma_0 for a fixed k:
/// `(2K - 2 |<w*,k>| delta / rho3)^{n-1} / (n-1)!`, floored at zero.
pub fn bound_zero(k: &[i32], delta: f64, params: &PartitionParams, omega: &FrequencyVector) -> f64 {
    let n = omega.dim();
    let base = 2.0 * params.k_cutoff - 2.0 * omega.dot_omega(k).abs() * delta / params.rho3;
    if base <= 0.0 {
        return 0.0;
    }
    base.powi(n as i32 - 1) / factorial(n - 1)
}

/// The k-free relaxation of Claim 3, with |<w*,k>| replaced by 1/T-bar.
/// Valid for nonresonant k (resonant k have Sigma_0 = 0).
pub fn bound_zero_relaxed(delta: f64, params: &PartitionParams, omega: &FrequencyVector) -> f64 {
    let n = omega.dim();
    let base = 2.0 * params.k_cutoff - 2.0 * delta / (omega.t_bar * params.rho3);
    if base <= 0.0 {
        return 0.0;
    }
    base.powi(n as i32 - 1) / factorial(n - 1)
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

// ---------------------------------------------------------------------------
// Budget
// ---------------------------------------------------------------------------

/// The budget a(delta) = 6 K e^sigma eps sigma mu (2 Sigma_+- + Sigma_0 +
/// Sigma_>) with the claim bounds substituted, and its exact piecewise
/// antiderivative A(delta). `a_star` is the closed-form value of Eq-level
/// A(K T-bar rho3).
#[derive(Debug, Clone)]
pub struct Budget {
    pub n: usize,
    pub k_cutoff: f64,
    pub t_bar: f64,
    pub rho3: f64,
    pub sigma: f64,
    pub eps: f64,
    pub mu: f64,
    /// 6 K e^sigma eps sigma mu
    prefactor: f64,
    /// delta at which the pm/greater bounds switch branch
    pub switch_delta: f64,
    /// upper end of the budget support, K T-bar rho3
    pub support_end: f64,
    /// closed-form A(K T-bar rho3)
    pub a_star: f64,
}

/// A budget-like function for the majorant PDE checks: either the claim-bound
/// budget or a constant rate.
#[derive(Debug, Clone)]
pub enum BudgetFn {
    Claims(Budget),
    Constant(f64),
}

impl BudgetFn {
    pub fn a(&self, delta: f64) -> f64 {
        match self {
            BudgetFn::Claims(b) => b.a(delta),
            BudgetFn::Constant(c) => *c,
        }
    }

    pub fn a_integral(&self, delta: f64) -> f64 {
        match self {
            BudgetFn::Claims(b) => b.a_integral(delta),
            BudgetFn::Constant(c) => c * delta,
        }
    }
}

impl Budget {
    pub fn new(
        params: &PartitionParams,
        omega: &FrequencyVector,
        eps: f64,
        mu: f64,
        sigma: f64,
    ) -> Result<Budget> {
        if !(eps >= 0.0 && mu >= 0.0 && sigma > 0.0) {
            return Err(Error::invalid("Budget", "eps, mu must be >= 0 and sigma > 0"));
        }
        let n = omega.dim();
        let k = params.k_cutoff;
        let t_bar = omega.t_bar;
        let rho3 = params.rho3;
        let switch_delta = t_bar * n as f64 / (2.0 * k);
        let support_end = k * t_bar * rho3;
        if support_end < switch_delta {
            return Err(Error::invalid(
                "Budget",
                format!(
                    "branch switch {switch_delta:.3e} lies beyond K T-bar rho3 = {support_end:.3e} (need 2 K^2 rho3 >= n)"
                ),
            ));
        }
        let prefactor = 6.0 * k * sigma.exp() * eps * sigma * mu;
        let a_star = 6.0
            * sigma.exp()
            * sigma
            * eps
            * mu
            * t_bar
            * (2.0 * k).powi(n as i32 - 1)
            * k
            * k
            * rho3
            / factorial(n)
            * (1.0
                + (2.0 * n as f64 / (rho3 * k))
                    * (1.0 + (2.0 * k * k * rho3 / n as f64).ln()));
        let budget = Budget {
            n,
            k_cutoff: k,
            t_bar,
            rho3,
            sigma,
            eps,
            mu,
            prefactor,
            switch_delta,
            support_end,
            a_star,
        };
        // the piecewise antiderivative must reproduce the closed form
        let direct = budget.a_integral(support_end);
        if eps * mu > 0.0 && (direct - a_star).abs() > 0.01 * a_star.abs() {
            return Err(Error::Certification(format!(
                "piecewise integral {direct:.6e} does not match the closed-form budget {a_star:.6e}"
            )));
        }
        Ok(budget)
    }

    /// Combined claim bound 2 Sigma_+- + Sigma_0 + Sigma_>, using the k-free
    /// relaxation for Sigma_0.
    pub fn combined_bound(&self, delta: f64, params: &PartitionParams, omega: &FrequencyVector) -> f64 {
        2.0 * bound_pm(delta, params, omega)
            + bound_zero_relaxed(delta, params, omega)
            + bound_greater(delta, params, omega)
    }

    /// a(delta) on [0, K T-bar rho3]; zero beyond (D+- is empty there).
    pub fn a(&self, delta: f64) -> f64 {
        if delta < 0.0 || delta > self.support_end {
            return 0.0;
        }
        let n = self.n as f64;
        let k2 = 2.0 * self.k_cutoff;
        let zero_part = {
            let base = k2 - 2.0 * delta / (self.t_bar * self.rho3);
            if base <= 0.0 { 0.0 } else { base.powf(n - 1.0) / factorial(self.n - 1) }
        };
        let pm_part = if delta <= self.switch_delta {
            2.0 * k2.powf(n) / factorial(self.n)
        } else {
            2.0 * k2.powf(n - 1.0) * self.t_bar / (factorial(self.n - 1) * delta)
        };
        self.prefactor * (zero_part + pm_part)
    }

    /// Exact antiderivative A(delta) = int_0^delta a, branch by branch.
    pub fn a_integral(&self, delta: f64) -> f64 {
        let delta = delta.clamp(0.0, self.support_end);
        let n = self.n as f64;
        let k2 = 2.0 * self.k_cutoff;
        // integral of the hyperplane (Sigma_0) term
        let zero_int = {
            let scale = self.t_bar * self.rho3 / 2.0;
            let base = (k2 - 2.0 * delta / (self.t_bar * self.rho3)).max(0.0);
            scale * (k2.powf(n) - base.powf(n)) / factorial(self.n)
        };
        // integral of the pm+greater term
        let flat = 2.0 * k2.powf(n) / factorial(self.n);
        let pm_int = if delta <= self.switch_delta {
            flat * delta
        } else {
            flat * self.switch_delta
                + 2.0 * k2.powf(n - 1.0) * self.t_bar / factorial(self.n - 1)
                    * (delta / self.switch_delta).ln()
        };
        self.prefactor * (zero_int + pm_int)
    }
}

// ---------------------------------------------------------------------------
// Batch evaluation over the diamond (domination suite, CSV reports)
// ---------------------------------------------------------------------------

/// All three brute sums for every k in the diamond at one delta, computed in
/// a single sweep with a dense class/weight table over the reachable box.
pub struct DiamondSums {
    pub ks: Vec<Vec<i32>>,
    pub pm: Vec<f64>,
    pub greater: Vec<f64>,
    pub zero: Vec<f64>,
}

struct DenseTable {
    n: usize,
    radius: i64,
    side: usize,
    class: Vec<i8>, // 0 = D0, 1 = D+, -1 = D-, 2 = D>
    exp_neg_w: Vec<f64>,
}

impl DenseTable {
    fn build(radius: i64, delta: f64, params: &PartitionParams, omega: &FrequencyVector) -> Self {
        let n = omega.dim();
        let side = (2 * radius + 1) as usize;
        let len = side.pow(n as u32);
        let mut class = vec![2i8; len];
        let mut exp_neg_w = vec![0.0; len];
        let mut k = vec![0i32; n];
        for flat in 0..len {
            let mut rem = flat;
            for d in (0..n).rev() {
                k[d] = (rem % side) as i32 - radius as i32;
                rem /= side;
            }
            class[flat] = match classify(&k, delta, params, omega) {
                LatticeClass::D0 => 0,
                LatticeClass::Dplus => 1,
                LatticeClass::Dminus => -1,
                LatticeClass::Dgreater => 2,
            };
            exp_neg_w[flat] = (-weight_exponent(&k, delta, params, omega)).exp();
        }
        DenseTable { n, radius, side, class, exp_neg_w }
    }

    #[inline]
    fn flat(&self, k: &[i32]) -> Option<usize> {
        let mut idx = 0usize;
        for d in 0..self.n {
            let c = k[d] as i64 + self.radius;
            if c < 0 || c > 2 * self.radius {
                return None;
            }
            idx = idx * self.side + c as usize;
        }
        Some(idx)
    }
}

/// Compute Sigma_+-, Sigma_>, Sigma_0 for all diamond vectors at `delta`.
pub fn diamond_sums(
    delta: f64,
    params: &PartitionParams,
    omega: &FrequencyVector,
) -> Result<DiamondSums> {
    let n = omega.dim();
    let diamond = enumerate_diamond(params.k_cutoff, n)?;
    let radius = 2 * params.k_cutoff.floor() as i64;
    let table = DenseTable::build(radius, delta, params, omega);
    let free_list: Vec<(Vec<i32>, i8, f64)> = diamond
        .iter()
        .filter_map(|k| {
            let idx = table.flat(k)?;
            match table.class[idx] {
                1 => Some((k.clone(), 1i8, table.exp_neg_w[idx])),
                -1 => Some((k.clone(), -1i8, table.exp_neg_w[idx])),
                _ => None,
            }
        })
        .collect();

    let rows: Vec<(f64, f64, f64)> = diamond
        .par_iter()
        .map(|k| {
            let w_k = match table.flat(k) {
                Some(idx) => 1.0 / table.exp_neg_w[idx],
                None => 1.0,
            };
            let dot_k = omega.dot_p(k);
            let pm_free_sign: i8 = if dot_k >= 0 { 1 } else { -1 };
            let mut pm = 0.0;
            let mut greater = 0.0;
            let mut zero = 0.0;
            let mut partner = vec![0i32; n];
            for (free, sign, ew_free) in &free_list {
                for d in 0..n {
                    partner[d] = k[d] - free[d];
                }
                let Some(pidx) = table.flat(&partner) else { continue };
                let e = w_k * ew_free * table.exp_neg_w[pidx];
                match table.class[pidx] {
                    0 => zero += e,
                    2 => greater += e,
                    c => {
                        // pm pair: count once, from the side fixed by the case split
                        if c == -sign && *sign == pm_free_sign {
                            pm += e;
                        }
                    }
                }
            }
            (pm, greater, zero)
        })
        .collect();

    let mut out = DiamondSums {
        ks: diamond,
        pm: Vec::with_capacity(rows.len()),
        greater: Vec::with_capacity(rows.len()),
        zero: Vec::with_capacity(rows.len()),
    };
    for (pm, greater, zero) in rows {
        out.pm.push(pm);
        out.greater.push(greater);
        out.zero.push(zero);
    }
    Ok(out)
}
