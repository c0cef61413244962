use crate::error::{Error, Result};

/// Declared `α(n)` and `ρ′(n)` for lags `n = 1, 2, ...`.
///
/// Values are tabulated for `n = 1..=len`; every lag past the table is
/// exactly zero, so the profile always describes a field with finite
/// dependence range.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingProfile {
    alpha: Vec<f64>,
    rho_prime: Vec<f64>,
}

impl MixingProfile {
    pub fn tabulated(alpha: Vec<f64>, rho_prime: Vec<f64>) -> Result<Self> {
        check_table("alpha", &alpha, 0.25)?;
        check_table("rho'", &rho_prime, 1.0)?;
        Ok(Self { alpha, rho_prime })
    }

    /// Worst-case declaration for an `m`-dependent field: `α = 1/4` and
    /// `ρ′ = 1` up to lag `m`, zero beyond.
    pub fn m_dependent(m: usize) -> Self {
        Self {
            alpha: vec![0.25; m],
            rho_prime: vec![1.0; m],
        }
    }

    /// `α(n)`; lag 0 is reported as the worst case `1/4`.
    pub fn alpha(&self, n: usize) -> f64 {
        match n {
            0 => 0.25,
            n => self.alpha.get(n - 1).copied().unwrap_or(0.0),
        }
    }

    /// `ρ′(n)`; lag 0 is reported as the worst case `1`.
    pub fn rho_prime(&self, n: usize) -> f64 {
        match n {
            0 => 1.0,
            n => self.rho_prime.get(n - 1).copied().unwrap_or(0.0),
        }
    }

    /// Least `j >= 1` with `ρ′(j) < 1`.
    pub fn j_star(&self) -> usize {
        (1..=self.rho_prime.len() + 1)
            .find(|&j| self.rho_prime(j) < 1.0)
            .unwrap_or(self.rho_prime.len() + 1)
    }

    /// Largest lag with a nonzero declared coefficient.
    pub fn dependence_range(&self) -> usize {
        let last_nonzero = |t: &[f64]| t.iter().rposition(|&v| v > 0.0).map_or(0, |i| i + 1);
        last_nonzero(&self.alpha).max(last_nonzero(&self.rho_prime))
    }
}

fn check_table(name: &str, values: &[f64], upper: f64) -> Result<()> {
    for (i, &v) in values.iter().enumerate() {
        if !(0.0..=upper).contains(&v) {
            return Err(Error::InvalidProfile(format!(
                "{name}({}) = {v} outside [0, {upper}]",
                i + 1
            )));
        }
        if i > 0 && v > values[i - 1] {
            return Err(Error::InvalidProfile(format!("{name} must be nonincreasing")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn m_dependent_profile() {
        let p = MixingProfile::m_dependent(1);
        assert_eq!(p.alpha(1), 0.25);
        assert_eq!(p.alpha(2), 0.0);
        assert_eq!(p.rho_prime(1), 1.0);
        assert_eq!(p.rho_prime(2), 0.0);
        assert_eq!(p.j_star(), 2);
        assert_eq!(p.dependence_range(), 1);

        let iid = MixingProfile::m_dependent(0);
        assert_eq!(iid.j_star(), 1);
        assert_eq!(iid.alpha(1), 0.0);
    }

    #[test]
    fn zero_beyond_range_for_every_lag() {
        for m in 0..6 {
            let p = MixingProfile::m_dependent(m);
            for n in m + 1..m + 50 {
                assert_eq!((p.alpha(n), p.rho_prime(n)), (0.0, 0.0));
            }
            assert!(p.j_star() <= m + 1);
        }
    }

    #[test]
    fn tabulated_validation() {
        let p = MixingProfile::tabulated(vec![0.2, 0.1], vec![0.9, 0.5]).unwrap();
        assert_eq!(p.j_star(), 1);
        assert!(MixingProfile::tabulated(vec![0.3], vec![]).is_err());
        assert!(MixingProfile::tabulated(vec![0.1, 0.2], vec![]).is_err());
        assert!(MixingProfile::tabulated(vec![], vec![1.5]).is_err());
    }
}
