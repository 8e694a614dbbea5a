//! Pricing a task that repeats every round, for insensitive players whose
//! continued play depends on a per-round retention threshold.
//!
//! A player who earns round utility `u` stays for the next round when a
//! threshold drawn from `F_r` is at most `u`; revenue is discounted by `β`
//! per round.

use serde::{Deserialize, Serialize};

use crate::dists::ScalarDistribution;
use crate::error::{Error, Result};
use crate::numeric;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct RetentionModel<T> {
    dist: ScalarDistribution<T>,
    beta: T,
}

impl<T: Real> RetentionModel<T> {
    pub fn new(dist: ScalarDistribution<T>, beta: T) -> Result<Self> {
        if !(beta > T::zero() && beta <= T::one()) {
            return Err(Error::invalid(format!("beta must lie in (0, 1], got {beta}")));
        }
        if dist.support().0 != T::zero() {
            return Err(Error::invalid("retention distribution must start at 0"));
        }
        Ok(Self { dist, beta })
    }

    pub fn dist(&self) -> &ScalarDistribution<T> {
        &self.dist
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    /// `1 - β F_r(u)`, the per-round loss factor for a player earning `u`.
    pub fn churn_factor(&self, utility: T) -> T {
        T::one() - self.beta + self.beta * self.dist.sf(utility)
    }

    /// `x - (1 - β F_r(v - x)) / (β f_r(v - x))`.
    fn regularity_expr(&self, value: T, x: T) -> Result<T> {
        let y = value - x;
        let dens = self.dist.pdf(y)?;
        if !(dens > T::zero()) {
            return Err(Error::ZeroDensity(y.as_f64()));
        }
        Ok(x - self.churn_factor(y) / (self.beta * dens))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegularityReport {
    pub regular: bool,
    /// Grid points skipped because the retention density vanished there.
    pub skipped: usize,
}

/// Grid check that the retention expression is non-decreasing on `[0, v]`.
pub fn retention_regular<T: Real>(rm: &RetentionModel<T>, value: T, grid_n: usize) -> Result<RegularityReport> {
    let grid_n = grid_n.max(100);
    let mut prev: Option<T> = None;
    let mut report = RegularityReport { regular: true, skipped: 0 };
    for i in 0..=grid_n {
        let x = value * T::from_usize(i).unwrap() / T::from_usize(grid_n).unwrap();
        let g = match rm.regularity_expr(value, x) {
            Ok(g) => g,
            Err(Error::ZeroDensity(_)) => {
                report.skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        if let Some(p) = prev {
            if g < p - T::lit(1e-9) * p.abs().max(T::one()) {
                report.regular = false;
            }
        }
        prev = Some(g);
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPrice<T> {
    pub price: T,
    /// False when no root exists below `v`, so the threshold never caps a price.
    pub binding: bool,
}

/// The retention threshold price `q` solving `q = (1 - β F_r(v - q)) / (β f_r(v - q))`.
pub fn retention_threshold_price<T: Real>(rm: &RetentionModel<T>, value: T) -> Result<ThresholdPrice<T>> {
    let report = retention_regular(rm, value, 1000)?;
    if !report.regular {
        return Err(Error::NotRegular(value.as_f64()));
    }
    let residual = |q: T| rm.regularity_expr(value, q).unwrap_or(T::nan());
    let tol = T::lit(1e-12).max(T::resolution()) * value.max(T::one());
    match numeric::bisect(residual, T::lit(1e-12).min(value), value, tol) {
        Some(price) => Ok(ThresholdPrice { price, binding: true }),
        None => Ok(ThresholdPrice { price: value, binding: false }),
    }
}

/// Personalized static price `min((1 - γ) v, q)` for a player of known type.
pub fn known_types_price<T: Real>(gamma: T, value: T, rm: &RetentionModel<T>) -> Result<T> {
    let q = retention_threshold_price(rm, value)?.price;
    Ok(known_types_price_given(gamma, value, q))
}

pub fn known_types_price_given<T: Real>(gamma: T, value: T, threshold: T) -> T {
    ((T::one() - gamma) * value).min(threshold).max(T::zero())
}

/// Discounted revenue from a static price `p`: `p / (1 - β F_r(v - p))` if
/// the player buys, else zero.
pub fn known_types_revenue<T: Real>(gamma: T, value: T, rm: &RetentionModel<T>, price: T) -> T {
    if price > (T::one() - gamma) * value {
        return T::zero();
    }
    price / rm.churn_factor(value - price)
}

/// Per-capita known-types revenue averaged over the type distribution.
pub fn known_types_expected_revenue<T: Real>(
    types: &ScalarDistribution<T>,
    value: T,
    rm: &RetentionModel<T>,
) -> Result<T> {
    let q = retention_threshold_price(rm, value)?.price;
    let per_type = |g: T| known_types_revenue(g, value, rm, known_types_price_given(g, value, q));
    Ok(match types.kind() {
        crate::dists::DistKind::Empirical { samples } => {
            samples.iter().map(|g| per_type(*g)).sum::<T>() / T::from_usize(samples.len()).unwrap()
        }
        crate::dists::DistKind::Discrete { values, probs } => {
            values.iter().zip(probs).map(|(g, p)| per_type(*g) * *p).sum()
        }
        _ => {
            // Integrate over quantiles, splitting at the kink where (1 - γ) v = q.
            let kink = types.cdf(T::one() - q / value).max(T::zero()).min(T::one());
            let tol = T::lit(1e-12).max(T::resolution());
            let f = |u: T| per_type(types.quantile(u));
            numeric::integrate(f, T::zero(), kink, tol) + numeric::integrate(f, kink, T::one(), tol)
        }
    })
}

/// Posted price maximizing `p (1 - F_m(p^-))`.
///
/// Continuous kinds solve `p = (1 - F_m(p)) / f_m(p)`, falling back to a
/// revenue scan when that equation has no bracketed root; atomic kinds scan
/// their atoms, preferring the higher price on ties.
pub fn myerson_price<T: Real>(marginal: &ScalarDistribution<T>) -> T {
    match marginal.kind() {
        crate::dists::DistKind::Empirical { samples } => empirical_myerson(samples).0,
        crate::dists::DistKind::Discrete { values, probs } => {
            let mut best = (values[0], T::neg_infinity());
            let mut tail = T::one();
            for (v, p) in values.iter().zip(probs) {
                let rev = *v * tail;
                if rev >= best.1 {
                    best = (*v, rev);
                }
                tail = tail - *p;
            }
            best.0
        }
        _ => {
            let (lo, _) = marginal.support();
            let hi = marginal.effective_upper();
            let gap = |p: T| p - marginal.inverse_hazard(p).unwrap_or(T::zero());
            let tol = T::lit(1e-12).max(T::resolution()) * hi.max(T::one());
            numeric::bisect(gap, lo, hi, tol).unwrap_or_else(|| {
                let rev = |p: T| p * marginal.sf(p);
                let (i, _, _) = numeric::grid_argmax(rev, lo, hi, 10_000);
                let step = (hi - lo) / T::lit(10_000.0);
                let a = (lo + step * T::from_usize(i.saturating_sub(1)).unwrap()).max(lo);
                let b = (lo + step * T::from_usize(i + 1).unwrap()).min(hi);
                numeric::golden_section_max(rev, a, b, tol).0
            })
        }
    }
}

/// Myerson scan over sorted samples: returns `(price, revenue per capita)`,
/// where a sample buys iff its value is at least the price.
pub fn empirical_myerson<T: Real>(sorted: &[T]) -> (T, T) {
    let n = T::from_usize(sorted.len()).unwrap();
    let mut best = (T::zero(), T::zero());
    for (i, x) in sorted.iter().enumerate() {
        if i > 0 && sorted[i - 1] == *x {
            continue;
        }
        let rev = *x * T::from_usize(sorted.len() - i).unwrap() / n;
        if rev >= best.1 {
            best = (*x, rev);
        }
    }
    best
}

/// `min(q, c · myerson)`.
pub fn mt_price<T: Real>(marginal: &ScalarDistribution<T>, rm: &RetentionModel<T>, value: T, scale: T) -> Result<T> {
    if !(scale > T::zero() && scale <= T::one()) {
        return Err(Error::invalid(format!("scale must lie in (0, 1], got {scale}")));
    }
    let q = retention_threshold_price(rm, value)?.price;
    Ok(q.min(scale * myerson_price(marginal)))
}

/// Marginal-value distribution after every type below `γ*` has churned.
pub fn truncation_update<T: Real>(
    marginal: &ScalarDistribution<T>,
    gamma_star: T,
    value: T,
) -> Result<ScalarDistribution<T>> {
    let (lo, _) = marginal.support();
    let cut = (T::one() - gamma_star) * value;
    if cut <= lo {
        return Err(Error::EmptyMass { lo: lo.as_f64(), hi: cut.as_f64() });
    }
    marginal.truncate(lo, cut)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PricingScheme<T> {
    /// Personalized `min((1 - γ) v, q)` for every agent.
    KnownTypes,
    MyersonOnly,
    RetentionThresholdOnly,
    MyersonThreshold,
    ScaledMyersonThreshold {
        c: T,
    },
    FixedPrice {
        p: T,
    },
}

impl<T: Real> PricingScheme<T> {
    pub fn label(&self) -> String {
        match self {
            PricingScheme::KnownTypes => "known_types".into(),
            PricingScheme::MyersonOnly => "myerson".into(),
            PricingScheme::RetentionThresholdOnly => "threshold".into(),
            PricingScheme::MyersonThreshold => "mt".into(),
            PricingScheme::ScaledMyersonThreshold { c } => format!("scaled_mt_{:.4}", c.as_f64()),
            PricingScheme::FixedPrice { p } => format!("fixed_{}", p.as_f64()),
        }
    }

    /// Anonymous price for a round, given the threshold price `q` and the
    /// current Myerson price. `None` for [`PricingScheme::KnownTypes`].
    pub fn anonymous_price(&self, threshold: T, myerson: impl FnOnce() -> T) -> Option<T> {
        match *self {
            PricingScheme::KnownTypes => None,
            PricingScheme::MyersonOnly => Some(myerson()),
            PricingScheme::RetentionThresholdOnly => Some(threshold),
            PricingScheme::MyersonThreshold => Some(threshold.min(myerson())),
            PricingScheme::ScaledMyersonThreshold { c } => Some(threshold.min(c * myerson())),
            PricingScheme::FixedPrice { p } => Some(p),
        }
    }

    pub fn validate(&self, value: T) -> Result<()> {
        match *self {
            PricingScheme::ScaledMyersonThreshold { c } if !(c > T::zero() && c <= T::one()) => {
                Err(Error::invalid(format!("scale must lie in (0, 1], got {c}")))
            }
            PricingScheme::FixedPrice { p } if !(p >= T::zero() && p <= value) => {
                Err(Error::invalid(format!("fixed price must lie in [0, {value}], got {p}")))
            }
            _ => Ok(()),
        }
    }
}

/// One price per task.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSequence<T> {
    prices: Vec<T>,
}

impl<T: Real> PriceSequence<T> {
    pub fn new(prices: Vec<T>, value: T) -> Result<Self> {
        if let Some(p) = prices.iter().find(|p| !(**p >= T::zero() && **p <= value)) {
            return Err(Error::invalid(format!("price {p} outside [0, {value}]")));
        }
        Ok(Self { prices })
    }

    pub fn prices(&self) -> &[T] {
        &self.prices
    }
}

/// Revenue gap on the equal-revenue instance with value `e^c`.
///
/// Returns `(known-types revenue, best fixed-price revenue)`. The known-types
/// designer extracts each marginal value in full; only the continuous part of
/// the marginal law on `[1, e^c]` is integrated.
pub fn equal_revenue_gap<T: Real>(c: T) -> Result<(T, T)> {
    if !(c > T::zero()) || !c.is_finite() {
        return Err(Error::invalid(format!("c must be positive, got {c}")));
    }
    let d = ScalarDistribution::<T>::equal_revenue();
    let top = c.exp();
    // x f(x) over [1, e^c], integrated in log space: x = e^t, dx = x dt.
    let integrand = |t: T| {
        let x = t.exp();
        x * d.pdf(x).unwrap_or(T::zero()) * x
    };
    let known = numeric::integrate(integrand, T::zero(), c, T::lit(1e-12).max(T::resolution()));
    let (_, _, best) = numeric::grid_argmax(|p| p * d.sf(p), T::one(), top, 10_000);
    Ok((known, best))
}

#[cfg(test)]
mod tests {
    use super::*;

    type D = ScalarDistribution<f64>;

    fn exp_retention(lambda: f64, beta: f64) -> RetentionModel<f64> {
        RetentionModel::new(D::exponential(lambda).unwrap(), beta).unwrap()
    }

    #[test]
    fn regularity_examples() {
        assert!(retention_regular(&exp_retention(2.0, 1.0), 1.0, 1000).unwrap().regular);
        let lomax = RetentionModel::new(D::lomax(3.0).unwrap(), 0.99).unwrap();
        assert!(retention_regular(&lomax, 1.0, 1000).unwrap().regular);
        assert!(retention_regular(&exp_retention(3.0, 1e-6), 1.0, 1000).unwrap().regular);
    }

    #[test]
    fn regularity_skips_zero_density() {
        let rm = RetentionModel::new(D::uniform_unit(), 1.0).unwrap();
        let report = retention_regular(&rm, 2.0, 100).unwrap();
        assert!(report.skipped > 0);
    }

    #[test]
    fn threshold_is_inverse_rate_at_unit_discount() {
        for lambda in [1.0, 2.0, 3.0, 5.0] {
            let q = retention_threshold_price(&exp_retention(lambda, 1.0), 1.0).unwrap();
            assert!((q.price - 1.0 / lambda).abs() < 1e-6, "lambda {lambda}: {}", q.price);
            assert!(q.binding);
        }
    }

    #[test]
    fn threshold_without_interior_root_is_value() {
        // For rate 1 and β = 0.97 the residual stays negative on [0, 1], so the
        // revenue curve rises all the way to v.
        let rm = exp_retention(1.0, 0.97);
        let residual = |q: f64| q - (1.0 - 0.97 * (1.0 - (-(1.0 - q)).exp())) / (0.97 * (-(1.0 - q)).exp());
        assert!((0..=100).all(|i| residual(i as f64 / 100.0) < 0.0));
        let q = retention_threshold_price(&rm, 1.0).unwrap();
        assert_eq!(q.price, 1.0);
        assert!(!q.binding);
    }

    #[test]
    fn threshold_residual_vanishes_when_binding() {
        let rm = exp_retention(3.0, 0.97);
        let q = retention_threshold_price(&rm, 1.0).unwrap();
        assert!(q.binding);
        let y: f64 = 1.0 - q.price;
        let residual = q.price - (1.0 - 0.97 * (1.0 - (-3.0 * y).exp())) / (0.97 * 3.0 * (-3.0 * y).exp());
        assert!(residual.abs() < 1e-8);
    }

    #[test]
    fn known_types_examples() {
        let rm = exp_retention(2.0, 1.0);
        assert!((known_types_price(0.9, 1.0, &rm).unwrap() - 0.1).abs() < 1e-12);
        assert!((known_types_price(0.0, 1.0, &rm).unwrap() - 0.5).abs() < 1e-6);
        assert_eq!(known_types_price(1.0, 1.0, &rm).unwrap(), 0.0);
        let p = known_types_price(0.9, 1.0, &rm).unwrap();
        let rev = known_types_revenue(0.9, 1.0, &rm, p);
        assert!((rev - 0.1 / (-1.8f64).exp()).abs() < 1e-12);
        assert!((rev - 0.6050).abs() < 1e-4);
        assert_eq!(known_types_revenue(0.9, 1.0, &rm, 0.2), 0.0);
        let myopic = exp_retention(2.0, 1e-9);
        assert!((known_types_revenue(0.5, 1.0, &myopic, 0.3) - 0.3).abs() < 1e-8);
    }

    #[test]
    fn myerson_examples() {
        assert!((myerson_price(&D::uniform_unit()) - 0.5).abs() < 1e-9);
        assert!((myerson_price(&D::exponential(4.0).unwrap()) - 0.25).abs() < 1e-9);
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let samples = D::uniform_unit().sample(&mut rng, 1_000_000);
        let emp = D::empirical(samples).unwrap();
        assert!((myerson_price(&emp) - 0.5).abs() < 0.01);
    }

    #[test]
    fn empirical_myerson_ties_go_high() {
        // Revenue 0.25 at both 0.25 (all four buy) and 0.5 (two buy).
        let (p, r) = empirical_myerson(&[0.25, 0.25, 0.5, 0.5]);
        assert_eq!(p, 0.5);
        assert_eq!(r, 0.25);
    }

    #[test]
    fn myerson_sale_probability_on_mhr_marginals() {
        assert!((D::uniform_unit().sf(myerson_price(&D::uniform_unit())) - 0.5).abs() < 1e-9);
        let e = D::exponential(1.0).unwrap();
        assert!((e.sf(myerson_price(&e)) - (-1f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn mt_examples() {
        let rm = exp_retention(5.0, 1.0);
        let u = D::uniform_unit();
        assert!((mt_price(&u, &rm, 1.0, 1.0).unwrap() - 0.2).abs() < 1e-6);
        let loose = exp_retention(10.0 / 9.0, 1.0);
        assert!((mt_price(&u, &loose, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-6);
        let s = PricingScheme::ScaledMyersonThreshold { c: 2.0f64 / 3.0 };
        assert!((s.anonymous_price(0.9, || 0.5).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(mt_price(&u, &rm, 1.0, 0.0).is_err());
    }

    #[test]
    fn truncation_update_examples() {
        let u = D::uniform_unit();
        assert_eq!(truncation_update(&u, 0.0, 1.0).unwrap(), u);
        let half = truncation_update(&u, 0.5, 1.0).unwrap();
        assert_eq!(half.support(), (0.0, 0.5));
        assert!((half.cdf(0.25) - 0.5).abs() < 1e-12);
        let marginal = crate::dists::marginal_value_dist(&D::impatience_exponential(3.0).unwrap(), 1.0).unwrap();
        let cut = truncation_update(&marginal, 0.3, 1.0).unwrap();
        assert!(cut.is_mhr(10_000).unwrap().is_mhr);
        assert!(truncation_update(&u, 1.0, 1.0).is_err());
    }

    #[test]
    fn equal_revenue_examples() {
        let (known, best) = equal_revenue_gap(5.0f64).unwrap();
        assert!((known - 5.0).abs() < 1e-3);
        assert!((best - 1.0).abs() < 1e-6);
        let (known, best) = equal_revenue_gap(1.0f64).unwrap();
        assert!((known - 1.0).abs() < 1e-6 && (best - 1.0).abs() < 1e-6);
    }

    #[test]
    fn mt_retains_everyone_known_types_retains() {
        // With the Myerson price below q, any type kept at its known-types price
        // is kept at the Myerson price too: max(γv, v - pM) ≥ max(γv, v - q).
        let (v, q, p_m) = (1.0, 0.4, 0.3);
        for i in 0..=1000 {
            let g = i as f64 / 1000.0;
            let known = known_types_price_given(g, v, q);
            let u_known = (g * v).max(v - known);
            let u_mt = if (1.0 - g) * v >= p_m { v - p_m } else { g * v };
            assert!(u_mt >= u_known - 1e-12, "gamma {g}");
        }
    }

    #[test]
    fn expected_known_types_revenue_matches_sum() {
        let rm = exp_retention(2.0, 0.99);
        let u = D::uniform_unit();
        let integral = known_types_expected_revenue(&u, 1.0, &rm).unwrap();
        let q = retention_threshold_price(&rm, 1.0).unwrap().price;
        let n = 200_000;
        let riemann: f64 = (0..n)
            .map(|i| {
                let g = (i as f64 + 0.5) / n as f64;
                known_types_revenue(g, 1.0, &rm, known_types_price_given(g, 1.0, q))
            })
            .sum::<f64>()
            / n as f64;
        assert!((integral - riemann).abs() < 1e-6);
    }

    #[test]
    fn price_sequence_bounds() {
        assert!(PriceSequence::new(vec![0.1, 0.5], 1.0).is_ok());
        assert!(PriceSequence::new(vec![1.5], 1.0).is_err());
    }
}
