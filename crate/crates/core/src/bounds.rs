//! Closed-form perturbation and concentration bounds.
//!
//! Every function evaluates a `max{σ-term, B-term}` expression with the
//! suppressed universal constants taken from [`Constants`] (all 1 by
//! default). Logarithms are natural. Branches are evaluated in the log
//! domain and exponentiated at the end, so a branch that exceeds `f64`
//! reports `+∞` in `branch_*` while `ln_branch_*` stays finite.

use crate::error::{Error, Result};

/// Universal constants left unspecified by the bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub big_c1: f64,
    pub big_c2: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
            big_c1: 1.0,
            big_c2: 1.0,
        }
    }
}

impl Constants {
    pub fn convention(&self) -> String {
        if *self == Self::default() {
            "all suppressed universal constants set to 1".to_string()
        } else {
            format!(
                "c1={}, c2={}, c3={}, C1={}, C2={}",
                self.c1, self.c2, self.c3, self.big_c1, self.big_c2
            )
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundValue {
    pub total: f64,
    pub branch_sigma: f64,
    pub branch_b: f64,
    pub ln_branch_sigma: f64,
    pub ln_branch_b: f64,
    pub convention: String,
}

impl BoundValue {
    fn from_logs(ln_sigma: f64, ln_b: f64, consts: &Constants) -> Self {
        let branch_sigma = ln_sigma.exp();
        let branch_b = ln_b.exp();
        Self {
            total: branch_sigma.max(branch_b),
            branch_sigma,
            branch_b,
            ln_branch_sigma: ln_sigma,
            ln_branch_b: ln_b,
            convention: consts.convention(),
        }
    }

    /// `ln(total)`, finite even when `total` overflows.
    pub fn ln_total(&self) -> f64 {
        self.ln_branch_sigma.max(self.ln_branch_b)
    }

    /// Which branch attains the maximum.
    pub fn dominant(&self) -> Branch {
        if self.ln_branch_sigma >= self.ln_branch_b {
            Branch::Sigma
        } else {
            Branch::B
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Sigma,
    B,
}

/// Outcome of a sufficient-condition check `lhs ≥ rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionCheck {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; at least 1 when the condition holds.
    pub margin: f64,
}

impl ConditionCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            holds: lhs >= rhs,
            lhs,
            rhs,
            margin: lhs / rhs,
        }
    }
}

/// `exponent · ln(base)`, with `0 · ln 0 = 0`.
fn ln_pow(base: f64, exponent: f64) -> f64 {
    if exponent == 0.0 {
        0.0
    } else {
        exponent * base.ln()
    }
}

fn check_noise(sigma: f64, b: f64) -> Result<()> {
    if !(sigma >= 0.0 && b >= 0.0 && sigma.is_finite() && b.is_finite()) {
        return Err(Error::invalid(format!("need finite σ, B ≥ 0, got σ = {sigma}, B = {b}")));
    }
    Ok(())
}

fn check_n(n: f64) -> Result<f64> {
    if !(n >= 3.0 && n.is_finite()) {
        return Err(Error::invalid(format!("bounds need n ≥ 3, got {n}")));
    }
    Ok(n.ln())
}

fn check_sup(v: f64, name: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::invalid(format!("{name} = {v} outside [0, 1]")));
    }
    Ok(())
}

fn check_k_range(k: u32, lo: u32, ln_n: f64) -> Result<()> {
    if k < lo || f64::from(k) > 20.0 * ln_n {
        return Err(Error::invalid(format!("k = {k} outside [{lo}, 20 ln n]")));
    }
    Ok(())
}

fn check_mu(mu: f64, n: f64) -> Result<()> {
    if !(1.0..=n).contains(&mu) {
        return Err(Error::invalid(format!("μ = {mu} outside [1, n]")));
    }
    Ok(())
}

/// Tolerance absorbing rounding in the `k₀` ratio before the ceiling.
const K0_SLACK: f64 = 1e-9;

/// `k₀ = ⌈(ln μ + 2 ln a∞)/(2 ln(σ/B) + ln n − 3 ln ln n)⌉`, clamped at 0.
///
/// A ratio within `1e-9` of an integer is rounded to it, so `μ = 100`,
/// `a∞ = 0.1` gives `k₀ = 0` rather than 1.
pub fn k_zero(mu: f64, a_inf: f64, sigma: f64, b: f64, n: f64) -> Result<u32> {
    let ln_n = check_n(n)?;
    if !(sigma > 0.0 && b > 0.0) {
        return Err(Error::invalid("k₀ needs σ, B > 0"));
    }
    if mu < 1.0 {
        return Err(Error::invalid(format!("μ = {mu} below 1")));
    }
    check_sup(a_inf, "‖a‖∞")?;
    let den = 2.0 * (sigma / b).ln() + ln_n - 3.0 * ln_n.ln();
    if !(den > 0.0) {
        return Err(Error::Regime(format!(
            "k₀ denominator 2 ln(σ/B) + ln n − 3 ln ln n = {den} is not positive"
        )));
    }
    let num = mu.ln() + 2.0 * a_inf.ln();
    let ratio = num / den;
    if ratio == f64::NEG_INFINITY {
        return Ok(0);
    }
    Ok((ratio - K0_SLACK).ceil().max(0.0) as u32)
}

/// Catalan number `C_m = (2m)!/((m+1)! m!)`.
pub fn catalan(m: i64) -> Result<u128> {
    if m < 0 {
        return Err(Error::invalid(format!("catalan index {m} is negative")));
    }
    let mut c: u128 = 1;
    for i in 0..m as u128 {
        // C_{i+1} = C_i · 2(2i+1)/(i+2), exact at every step.
        c = c
            .checked_mul(2 * (2 * i + 1))
            .ok_or_else(|| Error::invalid(format!("catalan({m}) overflows u128")))?
            / (i + 2);
    }
    Ok(c)
}

/// `2·exp(−min(t²/(4ν), 3t/(4L)))`.
pub fn bernstein_tail(nu: f64, l: f64, t: f64) -> Result<f64> {
    if !(nu > 0.0 && l > 0.0 && t > 0.0) {
        return Err(Error::invalid("bernstein tail needs ν, L, t > 0"));
    }
    Ok(2.0 * (-(t * t / (4.0 * nu)).min(3.0 * t / (4.0 * l))).exp())
}

/// Bound calculator carrying the universal constants.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Bounds {
    pub constants: Constants,
}

impl Bounds {
    pub fn new(constants: Constants) -> Self {
        Self { constants }
    }

    fn value(&self, ln_sigma: f64, ln_b: f64) -> BoundValue {
        BoundValue::from_logs(ln_sigma, ln_b, &self.constants)
    }

    /// `c₁·max{σ√(n ln n), B ln n}`.
    pub fn spectral_norm_bound(&self, sigma: f64, b: f64, n: f64) -> Result<BoundValue> {
        let ln_n = check_n(n)?;
        check_noise(sigma, b)?;
        let c = self.constants.c1.ln();
        Ok(self.value(
            c + sigma.ln() + 0.5 * (n * ln_n).ln(),
            c + b.ln() + ln_n.ln(),
        ))
    }

    /// Spectral-norm bound scaled by `√(μ/n)`.
    pub fn prior_eigenvalue_bound(&self, sigma: f64, b: f64, n: f64, mu: f64) -> Result<BoundValue> {
        let base = self.spectral_norm_bound(sigma, b, n)?;
        check_mu(mu, n)?;
        let s = 0.5 * (mu / n).ln();
        Ok(self.value(base.ln_branch_sigma + s, base.ln_branch_b + s))
    }

    /// Signal strength required by the rank-one bounds:
    /// `|λ*| ≥ C₁·max{σ√(n ln³n), B ln³n}`.
    pub fn signal_condition_rank_one(&self, sigma: f64, b: f64, n: f64, lambda_star: f64) -> Result<ConditionCheck> {
        let ln_n = check_n(n)?;
        check_noise(sigma, b)?;
        let ln3 = ln_n.powi(3);
        let rhs = self.constants.big_c1 * (sigma * (n * ln3).sqrt()).max(b * ln3);
        Ok(ConditionCheck::new(lambda_star.abs(), rhs))
    }

    /// `(ln²n/√n)·max{B a∞ √μ ln³n/|λ*|, (σ√n ln^{3/2}n/|λ*|)^{k₀}}`.
    pub fn master_rank_one(
        &self,
        sigma: f64,
        b: f64,
        n: f64,
        mu: f64,
        lambda_star: f64,
        a_inf: f64,
    ) -> Result<BoundValue> {
        let ln_n = check_n(n)?;
        check_mu(mu, n)?;
        let cond = self.signal_condition_rank_one(sigma, b, n, lambda_star)?;
        if !cond.holds {
            return Err(Error::Regime(format!(
                "|λ*| = {} below the required {}",
                cond.lhs, cond.rhs
            )));
        }
        let k0 = k_zero(mu, a_inf, sigma, b, n)?;
        let lam = lambda_star.abs().ln();
        let pre = 2.0 * ln_n.ln() - 0.5 * n.ln();
        let ln_b = pre + b.ln() + a_inf.ln() + 0.5 * mu.ln() + 3.0 * ln_n.ln() - lam;
        let ratio = sigma.ln() + 0.5 * n.ln() + 1.5 * ln_n.ln() - lam;
        Ok(self.value(pre + f64::from(k0) * ratio, ln_b))
    }

    /// `max{B μ ln⁵n/n, (σ√n ln^{3/2}n/|λ*|)^{k₀}·|λ*| ln²n/√n}` with
    /// `a∞ = √(μ/n)`.
    pub fn eigenvalue_rank_one(&self, sigma: f64, b: f64, n: f64, mu: f64, lambda_star: f64) -> Result<BoundValue> {
        let ln_n = check_n(n)?;
        check_mu(mu, n)?;
        let cond = self.signal_condition_rank_one(sigma, b, n, lambda_star)?;
        if !cond.holds {
            return Err(Error::Regime(format!(
                "|λ*| = {} below the required {}",
                cond.lhs, cond.rhs
            )));
        }
        let k0 = k_zero(mu, (mu / n).sqrt(), sigma, b, n)?;
        let lam = lambda_star.abs().ln();
        let ln_b = b.ln() + mu.ln() + 5.0 * ln_n.ln() - n.ln();
        let ratio = sigma.ln() + 0.5 * n.ln() + 1.5 * ln_n.ln() - lam;
        let ln_sigma = f64::from(k0) * ratio + lam + 2.0 * ln_n.ln() - 0.5 * n.ln();
        Ok(self.value(ln_sigma, ln_b))
    }

    /// High-moment bound on `E(xᵀHᵏy − E xᵀHᵏy)^p`, requiring `kp ≤ ln³n`.
    #[allow(clippy::too_many_arguments)]
    pub fn centered_moment_bound(
        &self,
        n: f64,
        k: u32,
        p: u32,
        sigma: f64,
        b: f64,
        nx: f64,
        ny: f64,
        x_inf: f64,
        y_inf: f64,
    ) -> Result<BoundValue> {
        let ln_n = check_n(n)?;
        if f64::from(k * p) > ln_n.powi(3) {
            return Err(Error::invalid(format!("kp = {} exceeds ln³n = {}", k * p, ln_n.powi(3))));
        }
        self.centered_moment_formula(n, k, p, sigma, b, nx, ny, x_inf, y_inf)
    }

    /// The same expression without the `n ≥ 3` and `kp ≤ ln³n` requirements,
    /// for comparison against exact moments at very small `n`.
    #[allow(clippy::too_many_arguments)]
    pub fn centered_moment_formula(
        &self,
        n: f64,
        k: u32,
        p: u32,
        sigma: f64,
        b: f64,
        nx: f64,
        ny: f64,
        x_inf: f64,
        y_inf: f64,
    ) -> Result<BoundValue> {
        if k < 2 {
            return Err(Error::invalid(format!("k = {k} below 2")));
        }
        if p < 2 || p % 2 != 0 {
            return Err(Error::invalid(format!("p = {p} is not an even integer ≥ 2")));
        }
        if !(n >= 1.0) {
            return Err(Error::invalid(format!("n = {n} below 1")));
        }
        check_noise(sigma, b)?;
        if !(nx >= 0.0 && ny >= 0.0 && x_inf >= 0.0 && y_inf >= 0.0) {
            return Err(Error::invalid("support sizes and sup-norms must be non-negative"));
        }
        let (kf, pf) = (f64::from(k), f64::from(p));
        let kp = kf * pf;
        let ln_n = n.ln();
        let nxy = nx * ny;
        let pre = (kf + 1.0) * pf * std::f64::consts::LN_2
            + kp * kp.ln()
            + pf.ln()
            + ln_pow(x_inf * y_inf, pf);
        let ln_sigma = ln_pow(sigma, kp) + 0.5 * kp * ln_n + ln_pow(nxy, 0.5 * pf)
            - 0.5 * pf * ln_n
            - 0.5 * kp * kp.ln();
        // B^{pk}/B^{2k} = B^{k(p−2)}.
        let ln_b = ln_pow(b, kf * (pf - 2.0)) + ln_pow(sigma, 2.0 * kf) + kf * ln_n + ln_pow(nxy, 1.0)
            - ln_n
            - kf * kp.ln();
        Ok(self.value(pre + ln_sigma, pre + ln_b))
    }

    /// `c₂ᵏ x∞y∞ max{(σ²n ln³n)^{k/2}√(NxNy/n), (B ln³n)ᵏ}`.
    #[allow(clippy::too_many_arguments)]
    pub fn high_probability_bound(
        &self,
        n: f64,
        k: u32,
        sigma: f64,
        b: f64,
        nx: f64,
        ny: f64,
        x_inf: f64,
        y_inf: f64,
    ) -> Result<BoundValue> {
        let ln_n = check_n(n)?;
        check_k_range(k, 2, ln_n)?;
        check_noise(sigma, b)?;
        if !(nx >= 0.0 && ny >= 0.0 && nx <= n && ny <= n) {
            return Err(Error::invalid("support sizes must lie in [0, n]"));
        }
        let kf = f64::from(k);
        let pre = kf * self.constants.c2.ln() + (x_inf * y_inf).ln();
        let ln3 = 3.0 * ln_n.ln();
        let ln_sigma = 0.5 * kf * (2.0 * sigma.ln() + n.ln() + ln3) + 0.5 * (nx * ny / n).ln();
        let ln_b = kf * (b.ln() + ln3);
        Ok(self.value(pre + ln_sigma, pre + ln_b))
    }

    /// `c₂ᵏ ln²n max{√((σ²n ln³n)ᵏ/n), (B ln³n)ᵏ x∞y∞}`.
    pub fn bilinear_power_bound(&self, n: f64, k: u32, sigma: f64, b: f64, x_inf: f64, y_inf: f64) -> Result<BoundValue> {
        let ln_n = check_n(n)?;
        check_k_range(k, 2, ln_n)?;
        self.unit_vector_shape(n, k, self.constants.c2, sigma, b, x_inf, y_inf)
    }

    /// `(2c₂)ᵏ ln²n max{√((σ²n ln³n)ᵏ/n), (B ln³n)ᵏ x∞y∞}`, for `1 ≤ k ≤ 20 ln n`.
    pub fn symmetric_bilinear_power_bound(&self, n: f64, k: u32, sigma: f64, b: f64, x_inf: f64, y_inf: f64) -> Result<BoundValue> {
        let ln_n = check_n(n)?;
        check_k_range(k, 1, ln_n)?;
        self.unit_vector_shape(n, k, 2.0 * self.constants.c2, sigma, b, x_inf, y_inf)
    }

    #[allow(clippy::too_many_arguments)]
    fn unit_vector_shape(
        &self,
        n: f64,
        k: u32,
        c: f64,
        sigma: f64,
        b: f64,
        x_inf: f64,
        y_inf: f64,
    ) -> Result<BoundValue> {
        check_noise(sigma, b)?;
        check_sup(x_inf, "‖x‖∞")?;
        check_sup(y_inf, "‖y‖∞")?;
        let ln_n = n.ln();
        let kf = f64::from(k);
        let ln3 = 3.0 * ln_n.ln();
        let pre = kf * c.ln() + 2.0 * ln_n.ln();
        let ln_sigma = 0.5 * (kf * (2.0 * sigma.ln() + n.ln() + ln3) - n.ln());
        let ln_b = kf * (b.ln() + ln3) + (x_inf * y_inf).ln();
        Ok(self.value(pre + ln_sigma, pre + ln_b))
    }

    /// `ln²n (2k)ᵏ max{σ²B^{k−2}/k, (σ²n/k)^{k/2−2}}`; needs `σ > 0`.
    pub fn power_mean_bound(&self, n: f64, k: u32, sigma: f64, b: f64) -> Result<BoundValue> {
        let ln_n = check_n(n)?;
        check_k_range(k, 2, ln_n)?;
        check_noise(sigma, b)?;
        if sigma == 0.0 {
            return Err(Error::invalid("the mean bound needs σ > 0"));
        }
        let kf = f64::from(k);
        let pre = 2.0 * ln_n.ln() + kf * (2.0 * kf).ln();
        let ln_b = 2.0 * sigma.ln() + ln_pow(b, kf - 2.0) - kf.ln();
        let ln_sigma = (0.5 * kf - 2.0) * (sigma * sigma * n / kf).ln();
        Ok(self.value(pre + ln_sigma, pre + ln_b))
    }

    /// `c₂·max{σ√(ln n), x∞y∞ B ln n}`.
    pub fn linear_form_bound(&self, sigma: f64, b: f64, n: f64, x_inf: f64, y_inf: f64) -> Result<BoundValue> {
        let ln_n = check_n(n)?;
        check_noise(sigma, b)?;
        check_sup(x_inf, "‖x‖∞")?;
        check_sup(y_inf, "‖y‖∞")?;
        let c = self.constants.c2.ln();
        Ok(self.value(
            c + sigma.ln() + 0.5 * ln_n.ln(),
            c + (x_inf * y_inf).ln() + b.ln() + ln_n.ln(),
        ))
    }

    /// `C_{k/2}(σ²n)^{k/2}` for even `k`, exactly 0 for odd `k`.
    pub fn symmetric_mean_bound(&self, n: f64, k: u32, sigma: f64) -> Result<f64> {
        if k % 2 == 1 {
            return Ok(0.0);
        }
        if !(n >= 1.0 && sigma >= 0.0) {
            return Err(Error::invalid("need n ≥ 1 and σ ≥ 0"));
        }
        let c = catalan(i64::from(k / 2))? as f64;
        Ok(c * (sigma * sigma * n).powi(k as i32 / 2))
    }

    /// `√(κ² r ln⁴n/n)·max{√μ B ln³n a∞/λ*min, (σ√(n ln³n)/λ*min)^{k₀}}`.
    #[allow(clippy::too_many_arguments)]
    pub fn rank_r_master(
        &self,
        sigma: f64,
        b: f64,
        n: f64,
        mu: f64,
        lambda_min: f64,
        lambda_max: f64,
        r: u32,
        a_inf: f64,
    ) -> Result<BoundValue> {
        let ln_n = check_n(n)?;
        check_mu(mu, n)?;
        let kappa = check_kappa(lambda_min, lambda_max)?;
        if r == 0 {
            return Err(Error::invalid("rank must be at least 1"));
        }
        let k0 = k_zero(mu, a_inf, sigma, b, n)?;
        let lmin = lambda_min.abs().ln();
        let pre = 0.5 * (2.0 * kappa.ln() + f64::from(r).ln() + 4.0 * ln_n.ln() - n.ln());
        let ln_b = 0.5 * mu.ln() + b.ln() + 3.0 * ln_n.ln() + a_inf.ln() - lmin;
        let ratio = sigma.ln() + 0.5 * (n.ln() + 3.0 * ln_n.ln()) - lmin;
        Ok(self.value(pre + f64::from(k0) * ratio, pre + ln_b))
    }

    /// `c₃ r² max{κμB ln³n/n, (κσ√(n ln³n))^{k₀}/((λ*max)^{k₀−1}√n)}` with
    /// `k₀` taken at `a∞ = √(μ/n)`.
    #[allow(clippy::too_many_arguments)]
    pub fn rank_r_eigenvalue(
        &self,
        sigma: f64,
        b: f64,
        n: f64,
        mu: f64,
        lambda_max: f64,
        kappa: f64,
        r: u32,
    ) -> Result<BoundValue> {
        let ln_n = check_n(n)?;
        check_mu(mu, n)?;
        if !(kappa >= 1.0) {
            return Err(Error::invalid(format!("κ = {kappa} below 1")));
        }
        if r == 0 {
            return Err(Error::invalid("rank must be at least 1"));
        }
        let k0 = f64::from(k_zero(mu, (mu / n).sqrt(), sigma, b, n)?);
        let pre = self.constants.c3.ln() + 2.0 * f64::from(r).ln();
        let ln_b = kappa.ln() + mu.ln() + b.ln() + 3.0 * ln_n.ln() - n.ln();
        let ln_sigma = k0 * (kappa.ln() + sigma.ln() + 0.5 * (n.ln() + 3.0 * ln_n.ln()))
            - (k0 - 1.0) * lambda_max.abs().ln()
            - 0.5 * n.ln();
        Ok(self.value(pre + ln_sigma, pre + ln_b))
    }

    /// `Δ_l ≥` [`Bounds::rank_r_eigenvalue`]; always true for `Δ_l = ∞`.
    #[allow(clippy::too_many_arguments)]
    pub fn gap_condition(
        &self,
        delta_l: f64,
        sigma: f64,
        b: f64,
        n: f64,
        mu: f64,
        lambda_max: f64,
        kappa: f64,
        r: u32,
    ) -> Result<ConditionCheck> {
        if !(delta_l >= 0.0) {
            return Err(Error::invalid(format!("gap {delta_l} is negative")));
        }
        let rhs = self.rank_r_eigenvalue(sigma, b, n, mu, lambda_max, kappa, r)?.total;
        Ok(ConditionCheck::new(delta_l, rhs))
    }

    /// `λ*max/κ ≥ C₂·max{σ√(n ln³n), B ln³n}`.
    pub fn signal_condition_rank_r(
        &self,
        lambda_max: f64,
        kappa: f64,
        sigma: f64,
        b: f64,
        n: f64,
    ) -> Result<ConditionCheck> {
        let ln_n = check_n(n)?;
        check_noise(sigma, b)?;
        if !(kappa >= 1.0) {
            return Err(Error::invalid(format!("κ = {kappa} below 1")));
        }
        let ln3 = ln_n.powi(3);
        let rhs = self.constants.big_c2 * (sigma * (n * ln3).sqrt()).max(b * ln3);
        Ok(ConditionCheck::new(lambda_max.abs() / kappa, rhs))
    }
}

fn check_kappa(lambda_min: f64, lambda_max: f64) -> Result<f64> {
    if !(lambda_min != 0.0 && lambda_min.is_finite() && lambda_max.is_finite()) {
        return Err(Error::invalid("signal eigenvalues must be finite and non-zero"));
    }
    let kappa = lambda_max.abs() / lambda_min.abs();
    if kappa < 1.0 {
        return Err(Error::invalid(format!("κ = {kappa} below 1")));
    }
    Ok(kappa)
}
