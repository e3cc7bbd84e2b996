//! Resonance-lattice geometry: the rational frequency w* = p / T-bar, the
//! cutoff K, the time-dependent partition D+/D-/D0/D> of Z^n, the switching
//! sign sigma_k and its integral S_k, and the stopping time.

use crate::error::{Error, Result};

/// Default cap on lattice enumeration size.
pub const ENUMERATION_CAP: u128 = 100_000_000;

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Rational frequency vector w* = p / T-bar with gcd(p) = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyVector {
    pub p: Vec<i64>,
    pub t_bar: f64,
}

impl FrequencyVector {
    pub fn new(p: Vec<i64>, t_bar: f64) -> Result<Self> {
        if p.is_empty() || p.iter().all(|&x| x == 0) {
            return Err(Error::invalid("FrequencyVector", "p must be a nonzero integer vector"));
        }
        if !(t_bar > 0.0) {
            return Err(Error::invalid("FrequencyVector", "T-bar must be positive"));
        }
        let g = p.iter().fold(0i64, |acc, &x| gcd(acc, x));
        if g != 1 {
            return Err(Error::invalid("FrequencyVector", format!("gcd(p) = {g}, expected 1")));
        }
        Ok(FrequencyVector { p, t_bar })
    }

    /// Divide out the gcd of `p`, rescaling T-bar so that p / T-bar is unchanged.
    pub fn reduced(p: Vec<i64>, t_bar: f64) -> Result<Self> {
        let g = p.iter().fold(0i64, |acc, &x| gcd(acc, x));
        if g == 0 {
            return Err(Error::invalid("FrequencyVector", "p must be nonzero"));
        }
        let p: Vec<i64> = p.into_iter().map(|x| x / g).collect();
        FrequencyVector::new(p, t_bar / g as f64)
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    /// w* as a real vector.
    pub fn omega(&self) -> Vec<f64> {
        self.p.iter().map(|&x| x as f64 / self.t_bar).collect()
    }

    /// Period T = 2 pi T-bar.
    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.t_bar
    }

    /// Exact integer pairing <k, p>.
    pub fn dot_p(&self, k: &[i32]) -> i64 {
        k.iter().zip(&self.p).map(|(&a, &b)| a as i64 * b).sum()
    }

    /// <k, w*> = <k, p> / T-bar.
    pub fn dot_omega(&self, k: &[i32]) -> f64 {
        self.dot_p(k) as f64 / self.t_bar
    }

    pub fn omega_l2(&self) -> f64 {
        self.omega().iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// The rho-splitting, cutoff K and confinement radius R.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionParams {
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: f64,
    pub k_cutoff: f64,
    pub radius: f64,
}

impl PartitionParams {
    /// Construct from the splitting and the system data, deriving
    /// K = rho1 / (rho3 M+ R T-bar) and checking the budget identity
    /// rho1 + 2 rho2 + rho3 = rho.
    pub fn from_spec(
        rho: f64,
        rho_split: (f64, f64, f64),
        m_plus: f64,
        radius: f64,
        t_bar: f64,
    ) -> Result<Self> {
        let (rho1, rho2, rho3) = rho_split;
        if rho1 <= 0.0 || rho2 <= 0.0 || rho3 <= 0.0 {
            return Err(Error::invalid("PartitionParams", "rho split parts must be positive"));
        }
        if (rho1 + 2.0 * rho2 + rho3 - rho).abs() > 1e-12 {
            return Err(Error::invalid(
                "PartitionParams",
                format!("rho1 + 2 rho2 + rho3 = {} != rho = {}", rho1 + 2.0 * rho2 + rho3, rho),
            ));
        }
        let k_cutoff = rho1 / (rho3 * m_plus * radius * t_bar);
        Ok(PartitionParams { rho1, rho2, rho3, k_cutoff, radius })
    }

    /// Construct with an explicit cutoff, bypassing the K relation. Used by
    /// diagnostics and tests that fix K directly.
    pub fn with_explicit_k(rho1: f64, rho2: f64, rho3: f64, k_cutoff: f64, radius: f64) -> Self {
        PartitionParams { rho1, rho2, rho3, k_cutoff, radius }
    }

    /// The exponential-weight width rho3 + 2 rho2.
    pub fn conv_width(&self) -> f64 {
        self.rho3 + 2.0 * self.rho2
    }

    pub fn rho_total(&self) -> f64 {
        self.rho1 + 2.0 * self.rho2 + self.rho3
    }
}

/// Partition class of a lattice vector at averaging time delta.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeClass {
    Dplus,
    Dminus,
    D0,
    Dgreater,
}

pub fn l1(k: &[i32]) -> i64 {
    k.iter().map(|&x| (x as i64).abs()).sum()
}

/// Classify `k` at time `delta`. The diamond condition
/// `|k|_1 rho3 + |<k, w*>| delta <= rho3 K` is closed, as printed.
pub fn classify(
    k: &[i32],
    delta: f64,
    params: &PartitionParams,
    omega: &FrequencyVector,
) -> LatticeClass {
    let dp = omega.dot_p(k);
    if dp == 0 {
        return LatticeClass::D0;
    }
    let inner = omega.dot_omega(k);
    if l1(k) as f64 * params.rho3 + inner.abs() * delta <= params.rho3 * params.k_cutoff {
        if dp > 0 {
            LatticeClass::Dplus
        } else {
            LatticeClass::Dminus
        }
    } else {
        LatticeClass::Dgreater
    }
}

/// sigma_k(delta): +1 on D+, -1 on D-, 0 on D0 and D>.
pub fn sigma_k(k: &[i32], delta: f64, params: &PartitionParams, omega: &FrequencyVector) -> i32 {
    match classify(k, delta, params, omega) {
        LatticeClass::Dplus => 1,
        LatticeClass::Dminus => -1,
        _ => 0,
    }
}

/// Time at which a nonresonant in-diamond vector leaves D+/-; infinity is
/// never returned (resonant or out-of-diamond vectors yield `None`).
pub fn exit_time(k: &[i32], params: &PartitionParams, omega: &FrequencyVector) -> Option<f64> {
    let dp = omega.dot_p(k);
    if dp == 0 || l1(k) as f64 > params.k_cutoff {
        return None;
    }
    let inner = omega.dot_omega(k).abs();
    Some(params.rho3 * (params.k_cutoff - l1(k) as f64) / inner)
}

/// S_k(delta) = integral of sigma_k over [0, delta], in closed form:
/// sigma_k is a step function that switches off exactly once at the exit time.
pub fn s_k(k: &[i32], delta: f64, params: &PartitionParams, omega: &FrequencyVector) -> f64 {
    debug_assert!(delta >= 0.0);
    match exit_time(k, params, omega) {
        None => 0.0,
        Some(te) => {
            let sign = if omega.dot_p(k) > 0 { 1.0 } else { -1.0 };
            sign * delta.min(te)
        }
    }
}

/// Exact count of integer points with |k|_1 <= K in Z^n:
/// sum_j 2^j C(n, j) C(floor(K), j).
pub fn diamond_count(k_cutoff: f64, n: usize) -> u128 {
    if k_cutoff < 0.0 {
        return 0;
    }
    let kf = k_cutoff.floor() as u128;
    let mut total = 0u128;
    for j in 0..=n.min(kf as usize) {
        let mut term = 1u128 << j;
        // C(n, j)
        for i in 0..j {
            term = term * (n as u128 - i as u128) / (i as u128 + 1);
        }
        // C(kf, j)
        let mut binom = 1u128;
        for i in 0..j {
            binom = binom * (kf - i as u128) / (i as u128 + 1);
        }
        total += term * binom;
    }
    total
}

/// All k in Z^n with |k|_1 <= K, in lexicographic order.
pub fn enumerate_diamond(k_cutoff: f64, n: usize) -> Result<Vec<Vec<i32>>> {
    enumerate_diamond_capped(k_cutoff, n, ENUMERATION_CAP)
}

pub fn enumerate_diamond_capped(k_cutoff: f64, n: usize, cap: u128) -> Result<Vec<Vec<i32>>> {
    if n == 0 {
        return Err(Error::invalid("enumerate_diamond", "n must be >= 1"));
    }
    let count = diamond_count(k_cutoff, n);
    if count > cap {
        return Err(Error::EnumerationCap { count, cap });
    }
    let radius = k_cutoff.floor() as i64;
    let mut out = Vec::with_capacity(count as usize);
    let mut current = vec![0i32; n];
    fn rec(out: &mut Vec<Vec<i32>>, current: &mut Vec<i32>, dim: usize, budget: i64, n: usize) {
        if dim == n {
            out.push(current.clone());
            return;
        }
        for v in -budget..=budget {
            current[dim] = v as i32;
            rec(out, current, dim + 1, budget - v.abs(), n);
        }
    }
    rec(&mut out, &mut current, 0, radius, n);
    out.sort();
    Ok(out)
}

/// Exact stopping time delta* = sup { delta : D+/-(delta) nonempty }, found by
/// enumerating the diamond; certified against the bound K T-bar rho3.
pub fn stopping_time(params: &PartitionParams, omega: &FrequencyVector) -> Result<f64> {
    let n = omega.dim();
    let diamond = enumerate_diamond(params.k_cutoff, n)?;
    let mut worst = 0.0f64;
    for k in &diamond {
        if let Some(te) = exit_time(k, params, omega) {
            worst = worst.max(te);
        }
    }
    let bound = params.k_cutoff * omega.t_bar * params.rho3;
    if worst > bound * (1.0 + 1e-12) {
        return Err(Error::Certification(format!(
            "stopping time {worst:.6e} exceeds K T-bar rho3 = {bound:.6e}"
        )));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params_k(rho3: f64, k: f64) -> PartitionParams {
        PartitionParams::with_explicit_k(0.4, 0.1, rho3, k, 1.0)
    }

    #[test]
    fn classify_examples() {
        let omega = FrequencyVector::new(vec![1, 1], 1.0).unwrap();
        let p = params_k(1.0, 5.0);
        assert_eq!(classify(&[1, -1], 0.0, &p, &omega), LatticeClass::D0);
        assert_eq!(classify(&[1, -1], 7.3, &p, &omega), LatticeClass::D0);
        assert_eq!(classify(&[2, 1], 0.0, &p, &omega), LatticeClass::Dplus);
        assert_eq!(classify(&[2, 1], 1.0, &p, &omega), LatticeClass::Dgreater);
    }

    #[test]
    fn sigma_examples() {
        let omega = FrequencyVector::new(vec![1, 1], 1.0).unwrap();
        let p = params_k(1.0, 5.0);
        assert_eq!(sigma_k(&[1, -1], 0.3, &p, &omega), 0);
        assert_eq!(sigma_k(&[-2, -1], 0.0, &p, &omega), -1);
        assert_eq!(sigma_k(&[2, 1], 1.0, &p, &omega), 0);
    }

    #[test]
    fn s_k_examples() {
        let omega = FrequencyVector::new(vec![1, 1], 1.0).unwrap();
        let p = params_k(1.0, 5.0);
        assert_eq!(s_k(&[3, 1], 0.0, &p, &omega), 0.0);
        assert!((s_k(&[2, 1], 1.0, &p, &omega) - 2.0 / 3.0).abs() < 1e-15);
        assert!((s_k(&[2, 1], 0.5, &p, &omega) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn stopping_time_examples() {
        let omega = FrequencyVector::new(vec![1, 1], 1.0).unwrap();
        let p = params_k(1.0, 5.0);
        let t = stopping_time(&p, &omega).unwrap();
        assert!((t - 4.0).abs() < 1e-14);
        assert!(t <= p.k_cutoff * omega.t_bar * p.rho3);

        let small = params_k(1.0, 0.9);
        assert_eq!(stopping_time(&small, &omega).unwrap(), 0.0);

        let omega10 = FrequencyVector::new(vec![1, 0], 1.0).unwrap();
        let p = params_k(0.5, 4.0);
        let t = stopping_time(&p, &omega10).unwrap();
        assert!((t - 1.5).abs() < 1e-14);
    }

    #[test]
    fn diamond_examples() {
        assert_eq!(enumerate_diamond(1.0, 2).unwrap().len(), 5);
        assert_eq!(enumerate_diamond(3.0, 2).unwrap().len(), 25);
        assert_eq!(enumerate_diamond(2.0, 3).unwrap().len(), 25);
        assert!(enumerate_diamond_capped(100.0, 6, 1000).is_err());
    }

    #[test]
    fn diamond_count_matches_enumeration() {
        for n in 1..=3usize {
            for k in 0..=6 {
                let c = diamond_count(k as f64, n);
                let e = enumerate_diamond(k as f64, n).unwrap().len() as u128;
                assert_eq!(c, e, "n={n} K={k}");
            }
        }
    }

    #[test]
    fn stopping_time_is_sharp() {
        let omega = FrequencyVector::new(vec![2, 3], 1.3).unwrap();
        let p = params_k(0.4, 6.0);
        let t = stopping_time(&p, &omega).unwrap();
        let diamond = enumerate_diamond(p.k_cutoff, 2).unwrap();
        let nonempty = |delta: f64| {
            diamond.iter().any(|k| {
                matches!(classify(k, delta, &p, &omega), LatticeClass::Dplus | LatticeClass::Dminus)
            })
        };
        assert!(nonempty(t * (1.0 - 1e-9)));
        assert!(!nonempty(t * (1.0 + 1e-9)));
    }

    proptest! {
        #[test]
        fn partition_tiles_the_lattice(
            p1 in -4i64..=4, p2 in -4i64..=4,
            t_bar in 0.5f64..3.0,
            k_cut in 2.0f64..8.0,
            rho3 in 0.1f64..0.8,
            delta in 0.0f64..4.0,
        ) {
            prop_assume!(p1 != 0 || p2 != 0);
            let omega = FrequencyVector::reduced(vec![p1, p2], t_bar).unwrap();
            let params = params_k(rho3, k_cut);
            for k in enumerate_diamond(k_cut + 2.0, 2).unwrap() {
                let class = classify(&k, delta, &params, &omega);
                // exactly one class: classify is a function; check consistency with sigma
                let s = sigma_k(&k, delta, &params, &omega);
                match class {
                    LatticeClass::Dplus => prop_assert_eq!(s, 1),
                    LatticeClass::Dminus => prop_assert_eq!(s, -1),
                    _ => prop_assert_eq!(s, 0),
                }
                // monotone collapse: once in D>, stays in D>
                if class == LatticeClass::Dgreater {
                    prop_assert_eq!(classify(&k, delta + 1.0, &params, &omega), LatticeClass::Dgreater);
                }
                // nonresonant modes obey the T-bar gap
                if omega.dot_p(&k) != 0 {
                    prop_assert!(omega.dot_omega(&k).abs() >= 1.0 / t_bar - 1e-12);
                }
            }
        }

        #[test]
        fn s_k_matches_quadrature(
            k1 in -5i32..=5, k2 in -5i32..=5,
            p1 in -3i64..=3, p2 in -3i64..=3,
            delta in 0.01f64..3.0,
            k_cut in 2.0f64..7.0,
        ) {
            prop_assume!(p1 != 0 || p2 != 0);
            let omega = FrequencyVector::reduced(vec![p1, p2], 1.0).unwrap();
            let params = params_k(0.5, k_cut);
            let k = [k1, k2];
            // trapezoid over 1e4 uniform steps with the switch time inserted as a node
            let mut nodes: Vec<f64> = (0..=10_000).map(|i| delta * i as f64 / 1e4).collect();
            if let Some(te) = exit_time(&k, &params, &omega) {
                if te < delta {
                    nodes.push(te);
                    nodes.sort_by(f64::total_cmp);
                }
            }
            // sigma is piecewise constant; with the switch as a node, cell
            // values are taken at midpoints so the rule is exact there
            let mut quad = 0.0;
            for w in nodes.windows(2) {
                let mid = 0.5 * (w[0] + w[1]);
                quad += sigma_k(&k, mid, &params, &omega) as f64 * (w[1] - w[0]);
            }
            let exact = s_k(&k, delta, &params, &omega);
            prop_assert!((quad - exact).abs() < 1e-6);
        }
    }
}
