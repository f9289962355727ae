use crate::error::{check_len, Error, Result};
use crate::momdp::{Momdp, OccupancyMeasure, Policy};

fn xlogy_ratio(x: f64, num: f64, den: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (num / den).ln()
    }
}

/// Occupancy-weighted conditional KL,
/// `sum_{s,a} mu_pi(s,a) log(pi(a|s) / pi0(a|s)) = sum_s rho_pi(s) KL(pi(.|s) || pi0(.|s))`.
pub fn occupancy_weighted_kl(momdp: &Momdp, pi: &Policy, pi0: &Policy) -> Result<f64> {
    check_len("reference policy", pi.probs().len(), pi0.probs().len())?;
    pi0.require_full_support()?;
    let occ = momdp.occupancy_measure(pi)?;
    let mut total = 0.0;
    for s in 0..momdp.n_states() {
        let kl: f64 = pi
            .row(s)
            .iter()
            .zip(pi0.row(s))
            .map(|(p, q)| xlogy_ratio(*p, *p, *q))
            .sum();
        total += occ.rho[s] * kl;
    }
    Ok(total)
}

/// Negative conditional entropy `psi(mu) = sum_{s,a} mu(s,a) log(mu(s,a) / rho_mu(s))`.
pub fn conditional_negentropy(mu: &OccupancyMeasure) -> f64 {
    let na = mu.n_actions;
    mu.mu
        .chunks_exact(na)
        .map(|row| {
            let rho: f64 = row.iter().sum();
            row.iter().map(|m| xlogy_ratio(*m, *m, rho)).sum::<f64>()
        })
        .sum()
}

/// Bregman divergence of the conditional negentropy,
/// `D(mu | mu0) = psi(mu) - psi(mu0) - <grad psi(mu0), mu - mu0>` with
/// `grad psi(mu0)(s,a) = log pi_{mu0}(a|s)`.
pub fn bregman_divergence(
    momdp: &Momdp,
    mu: &OccupancyMeasure,
    mu0: &OccupancyMeasure,
) -> Result<f64> {
    let size = momdp.n_states() * momdp.n_actions();
    check_len("occupancy", size, mu.mu.len())?;
    check_len("reference occupancy", size, mu0.mu.len())?;
    if !mu0.is_interior() {
        return Err(Error::InvalidParameter(
            "reference occupancy must be strictly positive".into(),
        ));
    }
    let grad: Vec<f64> = mu0.policy()?.probs().iter().map(|p| p.ln()).collect();
    let linear: f64 = grad
        .iter()
        .zip(mu.mu.iter().zip(&mu0.mu))
        .map(|(g, (a, b))| g * (a - b))
        .sum();
    Ok(conditional_negentropy(mu) - conditional_negentropy(mu0) - linear)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::toy_momdp;
    use crate::solvers::random_policy;

    #[test]
    fn self_divergence_is_zero() {
        let toy = toy_momdp();
        for seed in 0..20 {
            let pi = random_policy(&toy, seed);
            assert!(occupancy_weighted_kl(&toy, &pi, &pi).unwrap().abs() < 1e-12);
            let mu = toy.occupancy_measure(&pi).unwrap();
            assert!(bregman_divergence(&toy, &mu, &mu).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn single_state_reduces_to_plain_kl() {
        let one = Momdp::new(1, 2, 1, 0.9, vec![1.0], vec![1.0, 1.0], vec![0.0, 1.0]).unwrap();
        let pi = Policy::new(1, 2, vec![0.75, 0.25]).unwrap();
        let kl = occupancy_weighted_kl(&one, &pi, &Policy::uniform(1, 2)).unwrap();
        // 0.75 ln 1.5 + 0.25 ln 0.5
        assert!((kl - 0.130_812_035_941_136_97).abs() < 1e-15, "{kl}");
    }

    #[test]
    fn deterministic_policy_against_interior_reference() {
        let toy = toy_momdp();
        let det = Policy::deterministic(2, &[1, 1, 0, 0]).unwrap();
        let pi0 = random_policy(&toy, 9);
        let g = occupancy_weighted_kl(&toy, &det, &pi0).unwrap();
        let d = bregman_divergence(
            &toy,
            &toy.occupancy_measure(&det).unwrap(),
            &toy.occupancy_measure(&pi0).unwrap(),
        )
        .unwrap();
        assert!(g > 0.0);
        assert!((g - d).abs() < 1e-12);
    }

    #[test]
    fn rejects_boundary_reference() {
        let toy = toy_momdp();
        let det = Policy::deterministic(2, &[1, 1, 0, 0]).unwrap();
        let uni = Policy::uniform(4, 2);
        assert!(occupancy_weighted_kl(&toy, &uni, &det).is_err());
        let mu = toy.occupancy_measure(&uni).unwrap();
        let mu_det = toy.occupancy_measure(&det).unwrap();
        assert!(bregman_divergence(&toy, &mu, &mu_det).is_err());
    }
}
