//! Privacy accounting: mechanism calibration, composition across
//! iterations, collusion and dropout adjustment, and subsampling
//! amplification.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AccountError {
    #[error("epsilon must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("delta must lie in {constraint}, got {value}")]
    BadDelta { value: f64, constraint: &'static str },
    #[error("classic Gaussian calibration needs epsilon <= 1; use the rdp mode for epsilon = {0}")]
    EpsilonTooLargeForClassic(f64),
    #[error("no honest noise remains: t + s = {ts} >= n = {n}")]
    NoHonestNoise { ts: u32, n: u32 },
    #[error("composition ledger is empty")]
    EmptyLedger,
    #[error("k-fold composition requires a shared epsilon; ledger mixes {0} and {1}")]
    MixedEpsilon(f64, f64),
    #[error("renyi order must exceed 1, got {0}")]
    BadOrder(f64),
    #[error("sampling rate must lie in (0, 1], got {0}")]
    BadRate(f64),
    #[error("group size must be >= 1, got {0}")]
    BadGroupSize(u32),
    #[error("rdp calibration could not reach epsilon {0} within the search bracket")]
    CalibrationFailed(f64),
}

/// Privacy target plus the sensitivities the mechanisms calibrate against.
/// Under per-example clipping both sensitivities equal the clip norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyBudget {
    pub eps: f64,
    pub delta: f64,
    pub sensitivity_l1: f64,
    pub sensitivity_l2: f64,
}

impl PrivacyBudget {
    pub fn new(eps: f64, delta: f64, l1: f64, l2: f64) -> Result<Self, AccountError> {
        if eps <= 0.0 {
            return Err(AccountError::BadEpsilon(eps));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(AccountError::BadDelta {
                value: delta,
                constraint: "[0, 1)",
            });
        }
        Ok(PrivacyBudget {
            eps,
            delta,
            sensitivity_l1: l1,
            sensitivity_l2: l2,
        })
    }

    /// Convenience for clipped-gradient mechanisms where both
    /// sensitivities equal the clip norm.
    pub fn with_clip(eps: f64, delta: f64, clip_k: f64) -> Result<Self, AccountError> {
        Self::new(eps, delta, clip_k, clip_k)
    }
}

/// Classic Gaussian calibration `sigma = sqrt(2 ln(1.25/delta)) * l2 / eps`,
/// valid for `eps <= 1`.
pub fn gaussian_sigma(budget: &PrivacyBudget) -> Result<f64, AccountError> {
    if budget.eps <= 0.0 {
        return Err(AccountError::BadEpsilon(budget.eps));
    }
    if budget.eps > 1.0 {
        return Err(AccountError::EpsilonTooLargeForClassic(budget.eps));
    }
    if budget.delta <= 0.0 {
        return Err(AccountError::BadDelta {
            value: budget.delta,
            constraint: "(0, 1) for the Gaussian mechanism",
        });
    }
    Ok((2.0 * (1.25 / budget.delta).ln()).sqrt() * budget.sensitivity_l2 / budget.eps)
}

/// Laplace scale `lambda = l1 / eps`. Pure DP, delta may be zero.
pub fn laplace_lambda(budget: &PrivacyBudget) -> Result<f64, AccountError> {
    if budget.eps <= 0.0 {
        return Err(AccountError::BadEpsilon(budget.eps));
    }
    Ok(budget.sensitivity_l1 / budget.eps)
}

/// Per-party variance under collusion and dropout:
/// `sigma2_dp / (n - t - s)`. The sum over the surviving honest parties
/// then meets or exceeds the central target.
pub fn collusion_adjusted_variance(
    sigma2_dp: f64,
    n: u32,
    t: u32,
    s: u32,
) -> Result<f64, AccountError> {
    let ts = t.saturating_add(s);
    if ts >= n {
        return Err(AccountError::NoHonestNoise { ts, n });
    }
    Ok(sigma2_dp / (n - ts) as f64)
}

/// Minimal binomial trial count `m = ceil(8 ln(2/delta) / eps^2)` at
/// `p = 1/2`.
pub fn binomial_trials(budget: &PrivacyBudget) -> Result<u64, AccountError> {
    if budget.eps <= 0.0 {
        return Err(AccountError::BadEpsilon(budget.eps));
    }
    if budget.delta <= 0.0 || budget.delta >= 2.0 {
        return Err(AccountError::BadDelta {
            value: budget.delta,
            constraint: "(0, 2) so that ln(2/delta) > 0",
        });
    }
    Ok((8.0 * (2.0 / budget.delta).ln() / (budget.eps * budget.eps)).ceil() as u64)
}

/// Renyi-DP to approximate DP: `(eps + ln(1/delta)/(alpha - 1), delta)`.
pub fn rdp_to_dp(alpha: f64, eps_rdp: f64, delta: f64) -> Result<f64, AccountError> {
    if alpha <= 1.0 {
        return Err(AccountError::BadOrder(alpha));
    }
    if delta <= 0.0 || delta >= 1.0 {
        return Err(AccountError::BadDelta {
            value: delta,
            constraint: "(0, 1)",
        });
    }
    Ok(eps_rdp + (1.0 / delta).ln() / (alpha - 1.0))
}

/// zCDP to approximate DP: `(rho + 2 sqrt(rho ln(1/delta)), delta)`.
pub fn zcdp_to_dp(rho: f64, delta: f64) -> Result<f64, AccountError> {
    if rho <= 0.0 {
        return Err(AccountError::BadEpsilon(rho));
    }
    if delta <= 0.0 || delta >= 1.0 {
        return Err(AccountError::BadDelta {
            value: delta,
            constraint: "(0, 1)",
        });
    }
    Ok(rho + 2.0 * (rho * (1.0 / delta).ln()).sqrt())
}

/// Poisson-subsampling amplification in its tight closed form
/// `eps' = ln(1 + q (e^eps - 1))`, `delta' = q delta`.
pub fn subsample_amplify(eps: f64, delta: f64, q: f64) -> Result<(f64, f64), AccountError> {
    if q <= 0.0 || q > 1.0 {
        return Err(AccountError::BadRate(q));
    }
    Ok(((q * (eps.exp() - 1.0)).ln_1p(), q * delta))
}

/// Record-level to user-level guarantee for up to `z` records per user:
/// `(z eps, z e^{z eps} delta)`.
pub fn group_privacy(eps: f64, delta: f64, z: u32) -> Result<(f64, f64), AccountError> {
    if z < 1 {
        return Err(AccountError::BadGroupSize(z));
    }
    let ze = z as f64 * eps;
    Ok((ze, z as f64 * ze.exp() * delta))
}

/// Composition modes. The k-fold modes assume every entry shares one
/// epsilon and report the bound at the entries' shared delta.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompositionMode {
    Basic,
    Advanced,
    Zcdp,
    Rdp,
}

impl CompositionMode {
    pub fn parse(s: &str) -> Option<CompositionMode> {
        Some(match s {
            "basic" => CompositionMode::Basic,
            "advanced" => CompositionMode::Advanced,
            "zcdp" => CompositionMode::Zcdp,
            "rdp" => CompositionMode::Rdp,
            _ => return None,
        })
    }
}

/// Append-only ledger of per-step `(eps, delta)` spends.
#[derive(Debug, Clone)]
pub struct CompositionLedger {
    pub mode: CompositionMode,
    entries: Vec<(f64, f64)>,
}

impl CompositionLedger {
    pub fn new(mode: CompositionMode) -> Self {
        CompositionLedger {
            mode,
            entries: Vec::new(),
        }
    }

    pub fn record(&mut self, eps: f64, delta: f64) {
        self.entries.push((eps, delta));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    /// Total `(eps, delta)` under the selected mode.
    pub fn compose(&self) -> Result<(f64, f64), AccountError> {
        if self.entries.is_empty() {
            return Err(AccountError::EmptyLedger);
        }
        match self.mode {
            CompositionMode::Basic => {
                let eps: f64 = self.entries.iter().map(|e| e.0).sum();
                let delta: f64 = self.entries.iter().map(|e| e.1).sum();
                Ok((eps, delta))
            }
            CompositionMode::Advanced | CompositionMode::Zcdp | CompositionMode::Rdp => {
                let (eps, delta) = self.entries[0];
                for &(e, _) in &self.entries {
                    if (e - eps).abs() > 1e-12 {
                        return Err(AccountError::MixedEpsilon(eps, e));
                    }
                }
                let k = self.entries.len() as f64;
                let log_inv_delta = (1.0 / delta).ln();
                let total = match self.mode {
                    CompositionMode::Advanced => {
                        eps * (2.0 * k * log_inv_delta).sqrt() + k * eps * (eps.exp() - 1.0)
                    }
                    CompositionMode::Zcdp => {
                        eps * (2.0 * k * log_inv_delta).sqrt() + k * eps * eps / 2.0
                    }
                    CompositionMode::Rdp => 4.0 * eps * (2.0 * k * log_inv_delta).sqrt(),
                    CompositionMode::Basic => unreachable!(),
                };
                Ok((total, delta))
            }
        }
    }
}

/// Renyi-DP of the Poisson-subsampled Gaussian with noise multiplier `z`
/// (noise sigma over sensitivity) at integer order `alpha`, per step.
///
/// For `q = 1` this is the plain Gaussian value `alpha / (2 z^2)`; for
/// `q < 1` it is the binomial-expansion upper bound evaluated in log
/// space.
pub fn rdp_subsampled_gaussian(q: f64, z: f64, alpha: u32) -> f64 {
    assert!(alpha >= 2, "order grid starts at 2");
    if z <= 0.0 {
        return f64::INFINITY;
    }
    if q >= 1.0 {
        return alpha as f64 / (2.0 * z * z);
    }
    // log sum over j of C(alpha, j) (1-q)^{alpha-j} q^j exp(j(j-1)/(2 z^2))
    let a = alpha as f64;
    let log_q = q.ln();
    let log_1q = (1.0 - q).ln();
    let mut log_terms = Vec::with_capacity(alpha as usize + 1);
    let mut log_binom = 0.0f64; // ln C(alpha, 0)
    for j in 0..=alpha {
        if j > 0 {
            log_binom += ((a - j as f64 + 1.0) / j as f64).ln();
        }
        let jf = j as f64;
        let log_term =
            log_binom + jf * log_q + (a - jf) * log_1q + jf * (jf - 1.0) / (2.0 * z * z);
        log_terms.push(log_term);
    }
    let max = log_terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = log_terms.iter().map(|t| (t - max).exp()).sum();
    (max + sum.ln()) / (a - 1.0)
}

/// Default order grid for the subsampled-Gaussian accountant.
pub const RDP_ORDERS: std::ops::RangeInclusive<u32> = 2..=64;

/// Accumulated-RDP accountant over the integer order grid.
#[derive(Debug, Clone)]
pub struct RdpAccountant {
    rdp: Vec<f64>,
    steps: u64,
}

impl RdpAccountant {
    pub fn new() -> Self {
        RdpAccountant {
            rdp: vec![0.0; RDP_ORDERS.count()],
            steps: 0,
        }
    }

    /// Record one subsampled-Gaussian step.
    pub fn step(&mut self, q: f64, noise_multiplier: f64) {
        for (slot, alpha) in self.rdp.iter_mut().zip(RDP_ORDERS) {
            *slot += rdp_subsampled_gaussian(q, noise_multiplier, alpha);
        }
        self.steps += 1;
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Best `(eps, delta)` over the order grid.
    pub fn epsilon(&self, delta: f64) -> Result<f64, AccountError> {
        if delta <= 0.0 || delta >= 1.0 {
            return Err(AccountError::BadDelta {
                value: delta,
                constraint: "(0, 1)",
            });
        }
        let mut best = f64::INFINITY;
        for (slot, alpha) in self.rdp.iter().zip(RDP_ORDERS) {
            let eps = rdp_to_dp(alpha as f64, *slot, delta)?;
            best = best.min(eps);
        }
        Ok(best)
    }
}

impl Default for RdpAccountant {
    fn default() -> Self {
        Self::new()
    }
}

/// Total epsilon of `steps` subsampled-Gaussian iterations at rate `q`
/// and noise multiplier `z`.
pub fn rdp_total_epsilon(q: f64, z: f64, steps: u64, delta: f64) -> Result<f64, AccountError> {
    if !(0.0..=1.0).contains(&q) || q == 0.0 {
        return Err(AccountError::BadRate(q));
    }
    let mut best = f64::INFINITY;
    for alpha in RDP_ORDERS {
        let per_step = rdp_subsampled_gaussian(q, z, alpha);
        let eps = rdp_to_dp(alpha as f64, per_step * steps as f64, delta)?;
        best = best.min(eps);
    }
    Ok(best)
}

/// Calibrate the Gaussian noise multiplier so that `steps` iterations at
/// sampling rate `q` spend at most `(eps, delta)`. Binary search to three
/// significant digits; the returned multiplier never overshoots the
/// budget.
pub fn calibrate_noise_multiplier(
    eps: f64,
    delta: f64,
    q: f64,
    steps: u64,
) -> Result<f64, AccountError> {
    if eps <= 0.0 {
        return Err(AccountError::BadEpsilon(eps));
    }
    let mut lo = 1e-2;
    let mut hi = 1e1;
    // grow the bracket until it straddles the target
    while rdp_total_epsilon(q, hi, steps, delta)? > eps {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(AccountError::CalibrationFailed(eps));
        }
    }
    while rdp_total_epsilon(q, lo, steps, delta)? < eps {
        lo /= 2.0;
        if lo < 1e-8 {
            return Err(AccountError::CalibrationFailed(eps));
        }
    }
    // eps decreases in z: bisect until 3 significant digits
    while (hi - lo) / hi > 5e-4 {
        let mid = 0.5 * (lo + hi);
        if rdp_total_epsilon(q, mid, steps, delta)? > eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn budget(eps: f64, delta: f64, k: f64) -> PrivacyBudget {
        PrivacyBudget::with_clip(eps, delta, k).unwrap()
    }

    #[test]
    fn gaussian_sigma_golden() {
        let s = gaussian_sigma(&budget(1.0, 1e-5, 1.0)).unwrap();
        assert!((s - 4.84481).abs() < 1e-5, "{s}");
    }

    #[test]
    fn gaussian_sigma_zero_sensitivity() {
        let b = PrivacyBudget::new(1.0, 1e-5, 0.0, 0.0).unwrap();
        assert_eq!(gaussian_sigma(&b).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_sigma_large_eps_advises_rdp() {
        assert!(matches!(
            gaussian_sigma(&budget(3.0, 1e-5, 1.0)),
            Err(AccountError::EpsilonTooLargeForClassic(_))
        ));
    }

    #[test]
    fn gaussian_sigma_scale_consistency_with_ring_units() {
        // eps=1, delta=1e-6, K=0.1 and ring-unit variance 29698 imply a
        // quantization scale s with (s * sigma)^2 = 29698
        let sigma = gaussian_sigma(&budget(1.0, 1e-6, 0.1)).unwrap();
        let s = 29698f64.sqrt() / sigma;
        let reconstructed = (s * sigma) * (s * sigma);
        assert!((reconstructed - 29698.0).abs() / 29698.0 < 1e-6);
        assert!((s - 325.2).abs() < 0.5, "implied scale {s}");
    }

    #[test]
    fn laplace_lambda_ratios() {
        assert_eq!(
            laplace_lambda(&PrivacyBudget::new(0.5, 0.0, 1.0, 1.0).unwrap()).unwrap(),
            2.0
        );
        assert_eq!(
            laplace_lambda(&PrivacyBudget::new(1.0, 0.0, 0.0, 0.0).unwrap()).unwrap(),
            0.0
        );
        let l = laplace_lambda(&PrivacyBudget::new(8.0, 0.0, 0.3, 0.3).unwrap()).unwrap();
        assert!((l - 0.0375).abs() < 1e-12);
    }

    #[test]
    fn collusion_variance_cases() {
        assert_eq!(
            collusion_adjusted_variance(1.0, 100, 0, 0).unwrap(),
            1.0 / 100.0
        );
        assert_eq!(collusion_adjusted_variance(1.0, 100, 99, 0).unwrap(), 1.0);
        assert_eq!(collusion_adjusted_variance(1.0, 100, 50, 0).unwrap(), 0.02);
        assert!(matches!(
            collusion_adjusted_variance(1.0, 100, 60, 40),
            Err(AccountError::NoHonestNoise { ts: 100, n: 100 })
        ));
    }

    #[test]
    fn collusion_algebra_exact() {
        // (n - t - s) * sigma2_c >= sigma2_dp over an admissible sweep
        for n in [2u32, 3, 10, 100] {
            for t in 0..n {
                for s in 0..(n - t) {
                    let c = collusion_adjusted_variance(7.5, n, t, s).unwrap();
                    assert!((n - t - s) as f64 * c >= 7.5 - 1e-12);
                }
            }
        }
    }

    #[test]
    fn compose_basic_sums() {
        let mut ledger = CompositionLedger::new(CompositionMode::Basic);
        ledger.record(1.0, 1e-6);
        ledger.record(2.0, 1e-6);
        let (e, d) = ledger.compose().unwrap();
        assert_eq!(e, 3.0);
        assert!((d - 2e-6).abs() < 1e-18);
    }

    #[test]
    fn compose_advanced_golden() {
        // eps sqrt(2k ln(1/delta)) + k eps (e^eps - 1), k=100, eps=0.1
        let mut ledger = CompositionLedger::new(CompositionMode::Advanced);
        for _ in 0..100 {
            ledger.record(0.1, 1e-5);
        }
        let (e, d) = ledger.compose().unwrap();
        let want = 0.1 * (200.0 * (1e5f64).ln()).sqrt() + 10.0 * (0.1f64.exp() - 1.0);
        assert!((e - want).abs() < 1e-12);
        assert!((e - 5.850235).abs() < 1e-5, "{e}");
        assert_eq!(d, 1e-5);
    }

    #[test]
    fn compose_zcdp_golden() {
        let mut ledger = CompositionLedger::new(CompositionMode::Zcdp);
        ledger.record(0.1, 1e-5);
        let (e, _) = ledger.compose().unwrap();
        let want = 0.1 * (2.0 * (1e5f64).ln()).sqrt() + 0.005;
        assert!((e - want).abs() < 1e-12);
        assert!((e - 0.484853).abs() < 1e-6, "{e}");
    }

    #[test]
    fn compose_rejects_mixed_epsilon_in_kfold() {
        let mut ledger = CompositionLedger::new(CompositionMode::Rdp);
        ledger.record(0.1, 1e-5);
        ledger.record(0.2, 1e-5);
        assert!(matches!(
            ledger.compose(),
            Err(AccountError::MixedEpsilon(..))
        ));
    }

    #[test]
    fn compose_empty_ledger_errors() {
        let ledger = CompositionLedger::new(CompositionMode::Basic);
        assert_eq!(ledger.compose(), Err(AccountError::EmptyLedger));
    }

    #[test]
    fn conversions_golden() {
        let e = rdp_to_dp(2.0, 1.0, 1e-6).unwrap();
        assert!((e - (1.0 + (1e6f64).ln())).abs() < 1e-12);
        assert!((e - 14.8155).abs() < 1e-4);

        let e = zcdp_to_dp(0.1, 1e-5).unwrap();
        let want = 0.1 + 2.0 * (0.1 * (1e5f64).ln()).sqrt();
        assert!((e - want).abs() < 1e-12);
        assert!((e - 2.24595).abs() < 1e-5, "{e}");

        // delta -> 1 kills the log term
        let e = rdp_to_dp(2.0, 1.0, 1.0 - 1e-12).unwrap();
        assert!((e - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rdp_to_dp_rejects_bad_order() {
        assert!(matches!(
            rdp_to_dp(1.0, 1.0, 1e-5),
            Err(AccountError::BadOrder(_))
        ));
    }

    #[test]
    fn subsample_amplify_golden() {
        let (e, d) = subsample_amplify(1.0, 1e-5, 1.0).unwrap();
        assert_eq!((e, d), (1.0, 1e-5));

        let (e, _) = subsample_amplify(1.0, 1e-5, 0.01).unwrap();
        assert!((e - 0.017037).abs() < 1e-6, "{e}");

        let (_, d) = subsample_amplify(1.0, 1e-5, 0.01).unwrap();
        assert!((d - 1e-7).abs() < 1e-20);

        // componentwise never above the unamplified pair
        for q in [0.001, 0.1, 0.5, 1.0] {
            let (e, d) = subsample_amplify(2.0, 1e-5, q).unwrap();
            assert!(e <= 2.0 + 1e-12 && d <= 1e-5 + 1e-20);
        }
    }

    #[test]
    fn group_privacy_golden() {
        assert_eq!(group_privacy(1.0, 1e-6, 1).unwrap(), (1.0, 1e-6));
        let (e, d) = group_privacy(1.0, 1e-6, 2).unwrap();
        assert_eq!(e, 2.0);
        assert!((d - 2.0 * 2f64.exp() * 1e-6).abs() < 1e-12);
        assert!((d - 1.47781e-5).abs() < 1e-9, "{d}");
        assert_eq!(group_privacy(1.0, 1e-6, 10).unwrap().0, 10.0);
    }

    #[test]
    fn binomial_trials_golden() {
        assert_eq!(binomial_trials(&budget(1.0, 1e-5, 1.0)).unwrap(), 98);
        assert_eq!(binomial_trials(&budget(2.0, 1e-5, 1.0)).unwrap(), 25);
        assert!(binomial_trials(&budget(1.0, 0.9, 1.0)).is_ok());
        let mut b = budget(1.0, 1e-5, 1.0);
        b.delta = 2.0;
        assert!(binomial_trials(&b).is_err());
    }

    #[test]
    fn gaussian_sigma_monotone_in_eps() {
        let mut last = f64::INFINITY;
        for i in 1..=10 {
            let eps = i as f64 / 10.0;
            let s = gaussian_sigma(&budget(eps, 1e-5, 1.0)).unwrap();
            assert!(s < last);
            last = s;
        }
    }

    #[test]
    fn compose_totals_nondecreasing_in_k() {
        for mode in [
            CompositionMode::Basic,
            CompositionMode::Advanced,
            CompositionMode::Zcdp,
            CompositionMode::Rdp,
        ] {
            let mut ledger = CompositionLedger::new(mode);
            let mut last = 0.0;
            for _ in 0..50 {
                ledger.record(0.1, 1e-6);
                let (e, _) = ledger.compose().unwrap();
                assert!(e >= last);
                last = e;
            }
        }
    }

    #[test]
    fn rdp_full_batch_matches_gaussian() {
        // q = 1 collapses to alpha / (2 z^2)
        let v = rdp_subsampled_gaussian(1.0, 2.0, 8);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rdp_accountant_matches_closed_loop() {
        let mut acc = RdpAccountant::new();
        for _ in 0..100 {
            acc.step(0.01, 1.0);
        }
        let eps = acc.epsilon(1e-5).unwrap();
        let direct = rdp_total_epsilon(0.01, 1.0, 100, 1e-5).unwrap();
        assert!((eps - direct).abs() < 1e-12);
        assert!(eps.is_finite() && eps > 0.0);
    }

    #[test]
    fn calibration_hits_target_without_overshoot() {
        for (eps, q, steps) in [(1.0, 0.05, 100u64), (3.0, 0.06, 83), (8.0, 0.1, 200)] {
            let z = calibrate_noise_multiplier(eps, 1e-5, q, steps).unwrap();
            let spent = rdp_total_epsilon(q, z, steps, 1e-5).unwrap();
            assert!(spent <= eps, "eps {eps}: spent {spent} with z {z}");
            assert!(spent > 0.99 * eps, "calibration too loose: {spent} vs {eps}");
        }
    }
}
