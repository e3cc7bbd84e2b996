//! Simultaneous Diophantine approximation: the classical Dirichlet search,
//! the rescaled variant producing a rational frequency vector of controlled
//! period, and the frequency-map inversion locating the periodic action.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::lattice::FrequencyVector;
use crate::model::H0Spec;

/// Result of a simultaneous approximation.
#[derive(Debug, Clone)]
pub struct ApproximationResult {
    /// Denominator found by the search, 1 <= q < Q.
    pub q: u64,
    /// Integer vector with alpha* = p / t_bar.
    pub p: Vec<i64>,
    /// Period of the rational vector.
    pub t_bar: f64,
    /// |alpha* - alpha|_inf.
    pub err_inf: f64,
    /// The rational approximation itself.
    pub alpha_star: Vec<f64>,
}

fn round_half_away(x: f64) -> i64 {
    if x >= 0.0 { (x + 0.5).floor() as i64 } else { (x - 0.5).ceil() as i64 }
}

/// Classical Dirichlet search: the smallest q in [1, Q) with
/// |q alpha - round(q alpha)|_inf <= Q^{-1/n}.
pub fn dirichlet_classic(alpha: &[f64], q_cap: f64) -> Result<ApproximationResult> {
    if q_cap <= 1.0 {
        return Err(Error::invalid("dirichlet_classic", "need Q > 1"));
    }
    if alpha.is_empty() {
        return Err(Error::invalid("dirichlet_classic", "alpha must be nonempty"));
    }
    let n = alpha.len();
    let bound = q_cap.powf(-1.0 / n as f64);
    let q_max = q_cap.ceil() as u64 - 1;
    for q in 1..=q_max {
        let p: Vec<i64> = alpha.iter().map(|&a| round_half_away(q as f64 * a)).collect();
        let err = alpha
            .iter()
            .zip(&p)
            .map(|(&a, &pi)| (q as f64 * a - pi as f64).abs())
            .fold(0.0, f64::max);
        if err <= bound {
            let alpha_star: Vec<f64> = p.iter().map(|&pi| pi as f64 / q as f64).collect();
            return Ok(ApproximationResult {
                q,
                p,
                t_bar: q as f64,
                err_inf: err / q as f64,
                alpha_star,
            });
        }
    }
    // existence is guaranteed; reaching this point means a bug
    Err(Error::Certification(format!(
        "no q < {q_cap} met the Dirichlet bound {bound:.3e}; this should be impossible"
    )))
}

/// Rescaled variant: divide out a pivot component (the first nonzero entry),
/// keep it exact, and approximate the remaining n-1 components. Returns a
/// rational vector of period T-bar = q / |alpha_pivot| with
/// |alpha* - alpha|_inf <= 1 / (T-bar Q^{1/(n-1)}).
pub fn dirichlet_rescaled(alpha: &[f64], q_cap: f64) -> Result<ApproximationResult> {
    let n = alpha.len();
    if n < 2 {
        return Err(Error::invalid("dirichlet_rescaled", "need n >= 2 (use the classic search)"));
    }
    if q_cap <= 1.0 {
        return Err(Error::invalid("dirichlet_rescaled", "need Q > 1"));
    }
    let pivot = alpha
        .iter()
        .position(|&a| a != 0.0)
        .ok_or_else(|| Error::invalid("dirichlet_rescaled", "alpha must be nonzero"))?;
    let pivot_abs = alpha[pivot].abs();
    let rest: Vec<f64> = alpha
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != pivot)
        .map(|(_, &a)| a / pivot_abs)
        .collect();

    let bound = q_cap.powf(-1.0 / (n - 1) as f64);
    let q_max = q_cap.ceil() as u64 - 1;
    for q in 1..=q_max {
        let p_rest: Vec<i64> = rest.iter().map(|&b| round_half_away(q as f64 * b)).collect();
        let err_scaled = rest
            .iter()
            .zip(&p_rest)
            .map(|(&b, &pi)| (q as f64 * b - pi as f64).abs())
            .fold(0.0, f64::max);
        if err_scaled <= bound {
            let t_bar = q as f64 / pivot_abs;
            let mut p = vec![0i64; n];
            let mut alpha_star = vec![0.0; n];
            p[pivot] = if alpha[pivot] >= 0.0 { q as i64 } else { -(q as i64) };
            alpha_star[pivot] = alpha[pivot];
            let mut it = p_rest.iter();
            for i in 0..n {
                if i == pivot {
                    continue;
                }
                let pi = *it.next().unwrap();
                p[i] = pi;
                alpha_star[i] = pi as f64 / t_bar;
            }
            let err_inf = alpha
                .iter()
                .zip(&alpha_star)
                .map(|(a, s)| (a - s).abs())
                .fold(0.0, f64::max);
            return Ok(ApproximationResult { q, p, t_bar, err_inf, alpha_star });
        }
    }
    Err(Error::Certification(format!(
        "no q < {q_cap} met the rescaled Dirichlet bound; this should be impossible"
    )))
}

impl ApproximationResult {
    /// Reduce (p, q) by their common divisor and build the frequency vector,
    /// so that the gcd(p) = 1 invariant holds with alpha* unchanged.
    pub fn frequency_vector(&self) -> Result<FrequencyVector> {
        FrequencyVector::reduced(self.p.clone(), self.t_bar)
    }
}

/// Outcome of the periodic-action search.
#[derive(Debug, Clone)]
pub struct PeriodicAction {
    pub action: Vec<f64>,
    pub omega: FrequencyVector,
    pub approximation: ApproximationResult,
    /// |I - I*|_2 and its certified bound sqrt(n-1)/(M- T-bar Q^{1/(n-1)}).
    pub distance: f64,
    pub distance_bound: f64,
}

/// Locate an action I* near `action` whose frequency grad H0(I*) is the
/// rational vector produced by the rescaled Dirichlet search. Newton inverts
/// the frequency map to tolerance 1e-12.
pub fn locate_periodic_action(
    h0: &H0Spec,
    m_minus: f64,
    grad3_inf: f64,
    action: &[f64],
    q_cap: f64,
) -> Result<PeriodicAction> {
    let n = h0.dim();
    if action.len() != n {
        return Err(Error::invalid("locate_periodic_action", "action dimension mismatch"));
    }
    // implicit-function hypothesis; vacuous for quadratic H0
    if grad3_inf > 0.0 {
        let lhs = (n as f64 - 1.0).sqrt() / q_cap.powf(1.0 / (n as f64 - 1.0));
        let rhs = m_minus * m_minus / (4.0 * grad3_inf);
        if lhs >= rhs {
            return Err(Error::Constraint {
                name: "dirichlet inversion ball: sqrt(n-1)/Q^{1/(n-1)} < M-^2/(4|grad^3 H0|)"
                    .into(),
                lhs,
                rhs,
            });
        }
    }
    let alpha = h0.grad(action);
    let approx = dirichlet_rescaled(alpha.as_slice(), q_cap)?;
    let target = DVector::from_column_slice(&approx.alpha_star);

    let mut i_star = DVector::from_column_slice(action);
    let mut converged = false;
    for _ in 0..50 {
        let res = h0.grad(i_star.as_slice()) - &target;
        if res.amax() <= 1e-12 {
            converged = true;
            break;
        }
        let hess = h0.hessian(i_star.as_slice());
        let step = hess.lu().solve(&res).ok_or_else(|| {
            Error::NoConvergence("singular Hessian in frequency-map Newton".into())
        })?;
        i_star -= step;
    }
    if !converged {
        return Err(Error::NoConvergence(
            "frequency-map inversion did not reach 1e-12 in 50 iterations".into(),
        ));
    }

    let distance = (DVector::from_column_slice(action) - &i_star).norm();
    let distance_bound =
        (n as f64 - 1.0).sqrt() / (m_minus * approx.t_bar * q_cap.powf(1.0 / (n as f64 - 1.0)));
    if distance > distance_bound * (1.0 + 1e-9) {
        return Err(Error::Certification(format!(
            "|I - I*|_2 = {distance:.6e} exceeds the certified bound {distance_bound:.6e}"
        )));
    }
    // the chain M- |I - I*|_2 <= |w(I) - w(I*)|_2 <= sqrt(n-1) |...|_inf
    let dw = h0.grad(action) - h0.grad(i_star.as_slice());
    let chain_l2 = dw.norm();
    let chain_inf = dw.amax();
    if m_minus * distance > chain_l2 * (1.0 + 1e-9) + 1e-300
        || chain_l2 > (n as f64 - 1.0).sqrt().max(1.0) * chain_inf * (1.0 + 1e-9) + 1e-300
    {
        return Err(Error::Certification("frequency-chain inequality failed".into()));
    }

    Ok(PeriodicAction {
        action: i_star.as_slice().to_vec(),
        omega: approx.frequency_vector()?,
        approximation: approx,
        distance,
        distance_bound,
    })
}
