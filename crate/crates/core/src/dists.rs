//! One-dimensional distributions for player types, impatience, retention
//! thresholds and marginal values.
//!
//! Type distributions live on `[0, 1]` and describe patience `γ`. The
//! exponential type families are parameterized through impatience `1 - γ`,
//! which follows a truncated (optionally tail-flattened) exponential on
//! `[0, 1]`; a large rate therefore means a patient population.
//!
//! Distributions are immutable once built. Truncation, scaling and reflection
//! produce new values that wrap the original.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numeric;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub enum DistKind<T> {
    /// Uniform on `[0, 1]`.
    UniformUnit,
    /// Type distribution whose impatience is exponential with `rate`,
    /// truncated to `[0, 1]` and renormalized.
    ImpatienceExponential {
        rate: T,
    },
    /// As [`DistKind::ImpatienceExponential`], but the impatience density is
    /// held at its value at `cut` on `(cut, 1]` before renormalizing.
    FlattenedTailImpatienceExponential {
        rate: T,
        cut: T,
    },
    /// Exponential on `[0, ∞)`.
    Exponential {
        rate: T,
    },
    /// Pareto shifted to start at zero (scale 1), on `[0, ∞)`.
    Lomax {
        shape: T,
    },
    /// `F(x) = 1 - 1/x` on `[1, ∞)`.
    EqualRevenue,
    /// Finitely many atoms, sorted by value.
    Discrete {
        values: Vec<T>,
        probs: Vec<T>,
    },
    /// Sorted samples; the cdf is the right-continuous step function.
    Empirical {
        samples: Vec<T>,
    },
    Truncated {
        base: Box<ScalarDistribution<T>>,
        lo: T,
        hi: T,
        mass: T,
        via_sf: bool,
    },
    Scaled {
        base: Box<ScalarDistribution<T>>,
        factor: T,
    },
    /// Law of `1 - X` for `X` drawn from `base`.
    Reflected {
        base: Box<ScalarDistribution<T>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarDistribution<T> {
    kind: DistKind<T>,
}

/// Result of a grid check of the monotone hazard rate property.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MhrReport<T> {
    pub is_mhr: bool,
    /// Largest increase of the inverse hazard rate between neighbouring grid
    /// points (zero or negative when MHR holds).
    pub worst_violation: T,
}

/// Impatience-space helpers for the exponential type families.
#[derive(Clone, Copy)]
struct ExpImpatience<T> {
    rate: T,
    cut: T,
}

impl<T: Real> ExpImpatience<T> {
    // (mass of the exponential part, density at cut, normalizer)
    fn parts(&self) -> (T, T, T) {
        let head = -(-self.rate * self.cut).exp_m1();
        let flat = self.rate * (-self.rate * self.cut).exp();
        (head, flat, head + flat * (T::one() - self.cut))
    }

    fn cdf(&self, y: T) -> T {
        if y <= T::zero() {
            return T::zero();
        }
        if y >= T::one() {
            return T::one();
        }
        let (head, flat, z) = self.parts();
        if y <= self.cut {
            -(-self.rate * y).exp_m1() / z
        } else {
            (head + flat * (y - self.cut)) / z
        }
    }

    fn sf(&self, y: T) -> T {
        if y <= T::zero() {
            return T::one();
        }
        if y >= T::one() {
            return T::zero();
        }
        let (_, flat, z) = self.parts();
        if y <= self.cut {
            let gap = (-self.rate * y).exp() * -(-self.rate * (self.cut - y)).exp_m1();
            (gap + flat * (T::one() - self.cut)) / z
        } else {
            flat * (T::one() - y) / z
        }
    }

    fn pdf(&self, y: T) -> T {
        if y < T::zero() || y > T::one() {
            return T::zero();
        }
        let (_, flat, z) = self.parts();
        if y <= self.cut {
            self.rate * (-self.rate * y).exp() / z
        } else {
            flat / z
        }
    }

    fn quantile(&self, u: T) -> T {
        let u = u.max(T::zero()).min(T::one());
        let (head, flat, z) = self.parts();
        let target = u * z;
        if target <= head {
            (-(-target).ln_1p() / self.rate).min(self.cut)
        } else {
            (self.cut + (target - head) / flat).min(T::one())
        }
    }
}

impl<T: Real> ScalarDistribution<T> {
    pub fn uniform_unit() -> Self {
        Self { kind: DistKind::UniformUnit }
    }

    pub fn impatience_exponential(rate: T) -> Result<Self> {
        check_positive("rate", rate)?;
        Ok(Self { kind: DistKind::ImpatienceExponential { rate } })
    }

    pub fn flattened_impatience_exponential(rate: T, cut: T) -> Result<Self> {
        check_positive("rate", rate)?;
        if !(cut > T::zero() && cut <= T::one()) {
            return Err(Error::invalid(format!("cut must lie in (0, 1], got {cut}")));
        }
        Ok(Self { kind: DistKind::FlattenedTailImpatienceExponential { rate, cut } })
    }

    pub fn exponential(rate: T) -> Result<Self> {
        check_positive("rate", rate)?;
        Ok(Self { kind: DistKind::Exponential { rate } })
    }

    pub fn lomax(shape: T) -> Result<Self> {
        if !(shape > T::one()) || !shape.is_finite() {
            return Err(Error::invalid(format!("Lomax shape must exceed 1, got {shape}")));
        }
        Ok(Self { kind: DistKind::Lomax { shape } })
    }

    pub fn equal_revenue() -> Self {
        Self { kind: DistKind::EqualRevenue }
    }

    pub fn two_point(values: [T; 2], probs: [T; 2]) -> Result<Self> {
        Self::discrete(values.to_vec(), probs.to_vec())
    }

    /// Finite distribution; duplicate values are merged.
    pub fn discrete(values: Vec<T>, probs: Vec<T>) -> Result<Self> {
        if values.is_empty() || values.len() != probs.len() {
            return Err(Error::invalid("discrete distribution needs matching, non-empty values and probabilities"));
        }
        if probs.iter().any(|p| !(*p >= T::zero()) || !p.is_finite()) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("discrete values and probabilities must be finite, probabilities non-negative"));
        }
        let total: T = probs.iter().copied().sum();
        if (total - T::one()).abs() > T::lit(1e-9).max(T::resolution()) {
            return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
        }
        let mut pairs: Vec<(T, T)> = values.into_iter().zip(probs).filter(|(_, p)| *p > T::zero()).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut values: Vec<T> = Vec::with_capacity(pairs.len());
        let mut probs: Vec<T> = Vec::with_capacity(pairs.len());
        for (v, p) in pairs {
            match values.last() {
                Some(last) if *last == v => *probs.last_mut().unwrap() = *probs.last().unwrap() + p,
                _ => {
                    values.push(v);
                    probs.push(p);
                }
            }
        }
        Ok(Self { kind: DistKind::Discrete { values, probs } })
    }

    pub fn empirical(mut samples: Vec<T>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyPopulation);
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("empirical samples must be finite"));
        }
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { kind: DistKind::Empirical { samples } })
    }

    /// Builds an empirical distribution from samples already sorted ascending.
    pub fn empirical_sorted(samples: Vec<T>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyPopulation);
        }
        debug_assert!(samples.windows(2).all(|w| w[0] <= w[1]));
        Ok(Self { kind: DistKind::Empirical { samples } })
    }

    pub fn kind(&self) -> &DistKind<T> {
        &self.kind
    }

    /// True for step-cdf kinds (`Discrete`, `Empirical`), which have no density.
    pub fn is_atomic(&self) -> bool {
        matches!(self.kind, DistKind::Discrete { .. } | DistKind::Empirical { .. })
    }

    pub fn support(&self) -> (T, T) {
        use DistKind::*;
        match &self.kind {
            UniformUnit | ImpatienceExponential { .. } | FlattenedTailImpatienceExponential { .. } => {
                (T::zero(), T::one())
            }
            Exponential { .. } | Lomax { .. } => (T::zero(), T::infinity()),
            EqualRevenue => (T::one(), T::infinity()),
            Discrete { values, .. } => (values[0], *values.last().unwrap()),
            Empirical { samples } => (samples[0], *samples.last().unwrap()),
            Truncated { lo, hi, .. } => (*lo, *hi),
            Scaled { base, factor } => {
                let (lo, hi) = base.support();
                (lo * *factor, hi * *factor)
            }
            Reflected { base } => {
                let (lo, hi) = base.support();
                (T::one() - hi, T::one() - lo)
            }
        }
    }

    fn exp_impatience(&self) -> Option<ExpImpatience<T>> {
        match self.kind {
            DistKind::ImpatienceExponential { rate } => Some(ExpImpatience { rate, cut: T::one() }),
            DistKind::FlattenedTailImpatienceExponential { rate, cut } => Some(ExpImpatience { rate, cut }),
            _ => None,
        }
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: T) -> T {
        use DistKind::*;
        match &self.kind {
            UniformUnit => x.max(T::zero()).min(T::one()),
            ImpatienceExponential { .. } | FlattenedTailImpatienceExponential { .. } => {
                self.exp_impatience().unwrap().sf(T::one() - x)
            }
            Exponential { rate } => {
                if x <= T::zero() {
                    T::zero()
                } else {
                    -(-*rate * x).exp_m1()
                }
            }
            Lomax { shape } => {
                if x <= T::zero() {
                    T::zero()
                } else {
                    -(-*shape * x.ln_1p()).exp_m1()
                }
            }
            EqualRevenue => {
                if x <= T::one() {
                    T::zero()
                } else {
                    T::one() - x.recip()
                }
            }
            Discrete { values, probs } => {
                let k = values.partition_point(|v| *v <= x);
                probs[..k].iter().copied().sum::<T>().min(T::one())
            }
            Empirical { samples } => {
                let k = samples.partition_point(|s| *s <= x);
                T::from_usize(k).unwrap() / T::from_usize(samples.len()).unwrap()
            }
            Truncated { base, lo, hi, mass, via_sf } => {
                if x <= *lo {
                    T::zero()
                } else if x >= *hi {
                    T::one()
                } else if *via_sf {
                    ((base.sf(*lo) - base.sf(x)) / *mass).max(T::zero()).min(T::one())
                } else {
                    ((base.cdf(x) - base.cdf(*lo)) / *mass).max(T::zero()).min(T::one())
                }
            }
            Scaled { base, factor } => base.cdf(x / *factor),
            Reflected { base } => base.cdf_reflected(x),
        }
    }

    /// `P(X > x)`, computed without cancellation where the kind allows it.
    pub fn sf(&self, x: T) -> T {
        use DistKind::*;
        match &self.kind {
            UniformUnit => T::one() - x.max(T::zero()).min(T::one()),
            ImpatienceExponential { .. } | FlattenedTailImpatienceExponential { .. } => {
                self.exp_impatience().unwrap().cdf(T::one() - x)
            }
            Exponential { rate } => {
                if x <= T::zero() {
                    T::one()
                } else {
                    (-*rate * x).exp()
                }
            }
            Lomax { shape } => {
                if x <= T::zero() {
                    T::one()
                } else {
                    (-*shape * x.ln_1p()).exp()
                }
            }
            EqualRevenue => {
                if x <= T::one() {
                    T::one()
                } else {
                    x.recip()
                }
            }
            Discrete { values, probs } => {
                let k = values.partition_point(|v| *v <= x);
                probs[k..].iter().copied().sum::<T>().min(T::one())
            }
            Empirical { samples } => {
                let k = samples.partition_point(|s| *s <= x);
                T::from_usize(samples.len() - k).unwrap() / T::from_usize(samples.len()).unwrap()
            }
            Truncated { base, lo, hi, mass, via_sf } => {
                if x <= *lo {
                    T::one()
                } else if x >= *hi {
                    T::zero()
                } else if *via_sf {
                    ((base.sf(x) - base.sf(*hi)) / *mass).max(T::zero()).min(T::one())
                } else {
                    ((base.cdf(*hi) - base.cdf(x)) / *mass).max(T::zero()).min(T::one())
                }
            }
            Scaled { base, factor } => base.sf(x / *factor),
            Reflected { base } => base.sf_reflected(x),
        }
    }

    /// Density for continuous kinds; zero outside the support.
    pub fn pdf(&self, x: T) -> Result<T> {
        if self.is_atomic() {
            return Err(Error::NoDensity);
        }
        Ok(self.density(x))
    }

    fn density(&self, x: T) -> T {
        use DistKind::*;
        match &self.kind {
            UniformUnit => {
                if (T::zero()..=T::one()).contains(&x) {
                    T::one()
                } else {
                    T::zero()
                }
            }
            ImpatienceExponential { .. } | FlattenedTailImpatienceExponential { .. } => {
                if x < T::zero() || x > T::one() {
                    T::zero()
                } else {
                    self.exp_impatience().unwrap().pdf(T::one() - x)
                }
            }
            Exponential { rate } => {
                if x < T::zero() {
                    T::zero()
                } else {
                    *rate * (-*rate * x).exp()
                }
            }
            Lomax { shape } => {
                if x < T::zero() {
                    T::zero()
                } else {
                    *shape * (-(*shape + T::one()) * x.ln_1p()).exp()
                }
            }
            EqualRevenue => {
                if x < T::one() {
                    T::zero()
                } else {
                    (x * x).recip()
                }
            }
            Discrete { .. } | Empirical { .. } => T::nan(),
            Truncated { base, lo, hi, mass, .. } => {
                if x < *lo || x > *hi {
                    T::zero()
                } else {
                    base.density(x) / *mass
                }
            }
            Scaled { base, factor } => base.density(x / *factor) / *factor,
            Reflected { base } => base.pdf_reflected(x),
        }
    }

    // The *_reflected helpers evaluate the law of 1 - X at y. The exponential
    // type families are defined in impatience space, so they answer directly.
    fn cdf_reflected(&self, y: T) -> T {
        match (&self.kind, self.exp_impatience()) {
            (_, Some(imp)) => imp.cdf(y),
            (DistKind::UniformUnit, _) => y.max(T::zero()).min(T::one()),
            _ => self.sf(T::one() - y),
        }
    }

    fn sf_reflected(&self, y: T) -> T {
        match (&self.kind, self.exp_impatience()) {
            (_, Some(imp)) => imp.sf(y),
            (DistKind::UniformUnit, _) => T::one() - y.max(T::zero()).min(T::one()),
            _ => self.cdf(T::one() - y),
        }
    }

    fn pdf_reflected(&self, y: T) -> T {
        match self.exp_impatience() {
            Some(imp) => imp.pdf(y),
            None => self.density(T::one() - y),
        }
    }

    fn quantile_reflected(&self, u: T) -> T {
        match (&self.kind, self.exp_impatience()) {
            (_, Some(imp)) => imp.quantile(u),
            (DistKind::UniformUnit, _) => u.max(T::zero()).min(T::one()),
            _ => T::one() - self.quantile(T::one() - u),
        }
    }

    /// Generalized inverse of the cdf; `u` is clamped to `[0, 1]`.
    pub fn quantile(&self, u: T) -> T {
        use DistKind::*;
        let u = u.max(T::zero()).min(T::one());
        match &self.kind {
            UniformUnit => u,
            ImpatienceExponential { .. } | FlattenedTailImpatienceExponential { .. } => {
                T::one() - self.exp_impatience().unwrap().quantile(T::one() - u)
            }
            Exponential { rate } => -(-u).ln_1p() / *rate,
            Lomax { shape } => (-(-u).ln_1p() / *shape).exp_m1(),
            EqualRevenue => (T::one() - u).recip(),
            Discrete { values, probs } => {
                let mut acc = T::zero();
                for (v, p) in values.iter().zip(probs) {
                    acc = acc + *p;
                    if acc >= u {
                        return *v;
                    }
                }
                *values.last().unwrap()
            }
            Empirical { samples } => {
                let n = samples.len();
                let k = (u * T::from_usize(n).unwrap()).ceil().to_usize().unwrap_or(0);
                samples[k.saturating_sub(1).min(n - 1)]
            }
            Truncated { .. } => self.quantile_by_bisection(u),
            Scaled { base, factor } => base.quantile(u) * *factor,
            Reflected { base } => base.quantile_reflected(u),
        }
    }

    fn quantile_by_bisection(&self, u: T) -> T {
        let (lo, mut hi) = self.support();
        if u <= T::zero() {
            return lo;
        }
        if !hi.is_finite() {
            hi = lo + T::one();
            while self.cdf(hi) < u && hi.is_finite() {
                hi = lo + (hi - lo) * T::lit(2.0);
            }
        }
        if u >= T::one() {
            return hi;
        }
        let tol = (T::lit(1e-10) * (hi - lo)).max(T::resolution() * hi.abs().max(T::one()));
        numeric::bisect(|x| self.cdf(x) - u, lo, hi, tol).unwrap_or(hi)
    }

    /// Upper end used for grids and quadrature: the support end when finite,
    /// otherwise a far quantile.
    pub fn effective_upper(&self) -> T {
        let (_, hi) = self.support();
        if hi.is_finite() {
            hi
        } else {
            self.quantile(T::one() - T::lit(1e-9).max(T::resolution()))
        }
    }

    fn integration_upper(&self) -> T {
        let (_, hi) = self.support();
        if hi.is_finite() {
            hi
        } else {
            self.quantile(T::one() - T::lit(1e-15).max(T::resolution()))
        }
    }

    /// `(1 - F(x)) / f(x)`.
    pub fn inverse_hazard(&self, x: T) -> Result<T> {
        let f = self.pdf(x)?;
        if !(f > T::zero()) {
            return Err(Error::ZeroDensity(x.as_f64()));
        }
        Ok(self.sf(x) / f)
    }

    /// Checks that the inverse hazard rate is non-increasing on `grid_n`
    /// evenly spaced support points. Points with zero density are skipped.
    pub fn is_mhr(&self, grid_n: usize) -> Result<MhrReport<T>> {
        if self.is_atomic() {
            return Err(Error::NoDensity);
        }
        let grid_n = grid_n.max(2);
        let (lo, _) = self.support();
        let hi = self.effective_upper();
        let step = (hi - lo) / T::from_usize(grid_n - 1).unwrap();
        let mut worst = T::neg_infinity();
        let mut prev: Option<T> = None;
        let mut ok = true;
        for i in 0..grid_n {
            let x = if i + 1 == grid_n { hi } else { lo + step * T::from_usize(i).unwrap() };
            let Ok(ih) = self.inverse_hazard(x) else { continue };
            if let Some(p) = prev {
                let d = ih - p;
                worst = worst.max(d);
                if d > T::lit(1e-9) * p.abs().max(T::one()) {
                    ok = false;
                }
            }
            prev = Some(ih);
        }
        Ok(MhrReport { is_mhr: ok, worst_violation: worst.max(T::zero()) })
    }

    /// Restricts the law to `[a, b]` and renormalizes.
    pub fn truncate(&self, a: T, b: T) -> Result<Self> {
        if !(a < b) {
            return Err(Error::invalid(format!("truncation needs a < b, got [{a}, {b}]")));
        }
        let empty = || Error::EmptyMass { lo: a.as_f64(), hi: b.as_f64() };
        match &self.kind {
            DistKind::Empirical { samples } => {
                let kept: Vec<T> = samples.iter().copied().filter(|s| *s >= a && *s <= b).collect();
                if kept.is_empty() {
                    return Err(empty());
                }
                Self::empirical_sorted(kept)
            }
            DistKind::Discrete { values, probs } => {
                let (vals, ps): (Vec<T>, Vec<T>) =
                    values.iter().zip(probs).filter(|(v, _)| **v >= a && **v <= b).map(|(v, p)| (*v, *p)).unzip();
                let total: T = ps.iter().copied().sum();
                if vals.is_empty() || !(total > T::zero()) {
                    return Err(empty());
                }
                let ps = ps.into_iter().map(|p| p / total).collect();
                Ok(Self { kind: DistKind::Discrete { values: vals, probs: ps } })
            }
            _ => {
                let (lo, hi) = self.support();
                let a = a.max(lo);
                let b = b.min(hi);
                if !(a < b) {
                    return Err(empty());
                }
                if a <= lo && b >= hi {
                    return Ok(self.clone());
                }
                // Truncating a truncation only needs the original base.
                let base = match &self.kind {
                    DistKind::Truncated { base, .. } => base.as_ref().clone(),
                    _ => self.clone(),
                };
                let via_sf = base.cdf(a) > T::lit(0.5);
                let mass = if via_sf { base.sf(a) - base.sf(b) } else { base.cdf(b) - base.cdf(a) };
                if !(mass > T::zero()) {
                    return Err(empty());
                }
                Ok(Self { kind: DistKind::Truncated { base: Box::new(base), lo: a, hi: b, mass, via_sf } })
            }
        }
    }

    /// Law of `factor * X`.
    pub fn scale(&self, factor: T) -> Result<Self> {
        check_positive("scale factor", factor)?;
        Ok(match &self.kind {
            DistKind::Empirical { samples } => {
                Self { kind: DistKind::Empirical { samples: samples.iter().map(|s| *s * factor).collect() } }
            }
            DistKind::Discrete { values, probs } => Self {
                kind: DistKind::Discrete { values: values.iter().map(|v| *v * factor).collect(), probs: probs.clone() },
            },
            DistKind::Scaled { base, factor: inner } => {
                Self { kind: DistKind::Scaled { base: base.clone(), factor: *inner * factor } }
            }
            _ => Self { kind: DistKind::Scaled { base: Box::new(self.clone()), factor } },
        })
    }

    /// Law of `1 - X`.
    pub fn reflect(&self) -> Self {
        match &self.kind {
            DistKind::UniformUnit => self.clone(),
            DistKind::Reflected { base } => base.as_ref().clone(),
            DistKind::Empirical { samples } => {
                Self { kind: DistKind::Empirical { samples: samples.iter().rev().map(|s| T::one() - *s).collect() } }
            }
            DistKind::Discrete { values, probs } => Self {
                kind: DistKind::Discrete {
                    values: values.iter().rev().map(|v| T::one() - *v).collect(),
                    probs: probs.iter().rev().copied().collect(),
                },
            },
            _ => Self { kind: DistKind::Reflected { base: Box::new(self.clone()) } },
        }
    }

    /// Impatience `1 - γ` of a type distribution.
    pub fn impatience(&self) -> ImpatienceView<T> {
        ImpatienceView { dist: self.reflect() }
    }

    /// `P(1 - X >= y)`, the sale probability at price-to-value ratio `y`.
    pub fn prob_reflected_at_least(&self, y: T) -> T {
        if self.is_atomic() {
            self.cdf(T::one() - y)
        } else {
            self.sf_reflected(y)
        }
    }

    /// `E[X ; X > t]`, the partial expectation above `t`.
    pub fn partial_expectation_above(&self, t: T) -> T {
        match &self.kind {
            DistKind::Empirical { samples } => {
                let k = samples.partition_point(|s| *s <= t);
                samples[k..].iter().copied().sum::<T>() / T::from_usize(samples.len()).unwrap()
            }
            DistKind::Discrete { values, probs } => {
                values.iter().zip(probs).filter(|(v, _)| **v > t).map(|(v, p)| *v * *p).sum()
            }
            _ => {
                let (lo, _) = self.support();
                let hi = self.integration_upper();
                let a = t.max(lo);
                if a >= hi {
                    return T::zero();
                }
                let tol = T::lit(1e-13).max(T::resolution()) * (hi - a).max(T::one());
                a * self.sf(a) + numeric::integrate(|x| self.sf(x), a, hi, tol)
            }
        }
    }

    pub fn mean(&self) -> T {
        let (lo, _) = self.support();
        self.partial_expectation_above(lo - T::one())
    }

    /// `E[X | X > t]`.
    pub fn cond_expect_above(&self, t: T) -> Result<T> {
        let tail = self.sf(t);
        if !(tail > T::zero()) {
            return Err(Error::EmptyTail(t.as_f64()));
        }
        Ok(self.partial_expectation_above(t) / tail)
    }

    /// `n` i.i.d. draws by inverse transform.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<T> {
        (0..n).map(|_| self.quantile(T::lit(rng.gen::<f64>()))).collect()
    }
}

/// Impatience `1 - γ` of a type distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpatienceView<T> {
    dist: ScalarDistribution<T>,
}

impl<T: Real> ImpatienceView<T> {
    pub fn new(type_dist: &ScalarDistribution<T>) -> Self {
        type_dist.impatience()
    }

    pub fn as_distribution(&self) -> &ScalarDistribution<T> {
        &self.dist
    }

    pub fn into_distribution(self) -> ScalarDistribution<T> {
        self.dist
    }
}

impl<T> std::ops::Deref for ImpatienceView<T> {
    type Target = ScalarDistribution<T>;

    fn deref(&self) -> &Self::Target {
        &self.dist
    }
}

/// Distribution of marginal values `(1 - γ) v` for types drawn from `type_dist`.
pub fn marginal_value_dist<T: Real>(type_dist: &ScalarDistribution<T>, value: T) -> Result<ScalarDistribution<T>> {
    let (lo, hi) = type_dist.support();
    if lo < T::zero() || hi > T::one() {
        return Err(Error::invalid("type distribution must be supported on [0, 1]"));
    }
    type_dist.reflect().scale(value)
}

/// Kolmogorov-Smirnov distance between sorted samples and a cdf.
pub fn ks_statistic<T: Real, F: Fn(T) -> T>(sorted: &[T], cdf: F) -> T {
    let n = T::from_usize(sorted.len()).unwrap();
    sorted.iter().enumerate().fold(T::zero(), |acc, (i, x)| {
        let f = cdf(*x);
        let upper = T::from_usize(i + 1).unwrap() / n - f;
        let lower = f - T::from_usize(i).unwrap() / n;
        acc.max(upper).max(lower)
    })
}

fn check_positive<T: Real>(name: &str, x: T) -> Result<()> {
    if x > T::zero() && x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {x}")))
    }
}
