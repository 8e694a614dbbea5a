//! Value functions `v(p)`: how much finishing a task is worth to a player
//! when the skip is posted at price `p`.
//!
//! Sensitive kinds rise from `v(0) = 0` and flatten into a plateau at the
//! no-sale price `p̄`, past which nobody buys and the value stays constant.

use crate::dists::{ImpatienceView, ScalarDistribution};
use crate::error::{Error, Result};
use crate::numeric;
use crate::scalar::Real;

/// Slopes above this are reported as `+∞`.
const SLOPE_CAP: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub enum ValueKind<T> {
    /// `v(p) = p̄ (1 - (1 - p/p̄)^k)` below `p̄`.
    PriceSensitivePoly { k: T, p_bar: T },
    /// Zero up to `threshold`, `level` above it.
    Insensitive { level: T, threshold: T },
    /// Fixed point of `v = c (1 - F_γ(1 - p/v))`, stored as the monotone
    /// inverse map `p(v) = v Q_ι(v/c)` on a grid of values.
    CLinear { c: T, impatience: ImpatienceView<T>, values: Vec<T>, prices: Vec<T> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction<T> {
    kind: ValueKind<T>,
    p_nosale: T,
}

/// Insensitive stand-in for a sensitive value function: its value frozen at
/// the price where the slope drops to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InsensitiveProjection<T> {
    pub p_star: T,
    pub v_const: T,
    pub rev_ratio_bound: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeReport<T> {
    pub monotone: bool,
    pub midpoint_concave: bool,
    /// Largest violation seen of either property.
    pub worst: T,
}

impl<T: Real> ValueFunction<T> {
    pub fn poly(k: T, p_bar: T) -> Result<Self> {
        if !(k >= T::lit(2.0)) || !k.is_finite() {
            return Err(Error::invalid(format!("poly exponent must be at least 2, got {k}")));
        }
        if !(p_bar > T::zero()) || !p_bar.is_finite() {
            return Err(Error::invalid(format!("p_bar must be positive, got {p_bar}")));
        }
        Ok(Self { kind: ValueKind::PriceSensitivePoly { k, p_bar }, p_nosale: p_bar })
    }

    pub fn insensitive(level: T, threshold: T) -> Result<Self> {
        if !(level > T::zero()) || !level.is_finite() {
            return Err(Error::invalid(format!("level must be positive, got {level}")));
        }
        if !(threshold >= T::zero()) || threshold >= level {
            return Err(Error::invalid(format!("threshold must lie in [0, level), got {threshold}")));
        }
        Ok(Self { kind: ValueKind::Insensitive { level, threshold }, p_nosale: level })
    }

    /// Builds the c-linear value function for `type_dist` from `grid_n + 1`
    /// tabulated values.
    pub fn clinear(c: T, type_dist: &ScalarDistribution<T>, grid_n: usize) -> Result<Self> {
        if !(c > T::zero()) || !c.is_finite() {
            return Err(Error::invalid(format!("c must be positive, got {c}")));
        }
        if grid_n < 100 {
            return Err(Error::invalid(format!("c-linear grid needs at least 100 points, got {grid_n}")));
        }
        let (lo, hi) = type_dist.support();
        if type_dist.is_atomic() || lo < T::zero() || hi > T::one() {
            return Err(Error::invalid("c-linear needs a continuous type distribution on [0, 1]"));
        }
        let impatience = type_dist.impatience();
        let n = T::from_usize(grid_n).unwrap();
        let mut values = Vec::with_capacity(grid_n + 1);
        let mut prices = Vec::with_capacity(grid_n + 1);
        for i in 0..=grid_n {
            let v = if i == grid_n { c } else { c * T::from_usize(i).unwrap() / n };
            let p = v * impatience.quantile(v / c);
            if let Some(prev) = prices.last() {
                if !(p > *prev) {
                    return Err(Error::NonMonotone(v.as_f64()));
                }
            }
            values.push(v);
            prices.push(p);
        }
        let p_nosale = *prices.last().unwrap();
        Ok(Self { kind: ValueKind::CLinear { c, impatience, values, prices }, p_nosale })
    }

    pub fn kind(&self) -> &ValueKind<T> {
        &self.kind
    }

    /// The no-sale price `p̄`; the value is constant from here on.
    pub fn p_nosale(&self) -> T {
        self.p_nosale
    }

    pub fn is_sensitive(&self) -> bool {
        !matches!(self.kind, ValueKind::Insensitive { .. })
    }

    pub fn eval(&self, p: T) -> T {
        match &self.kind {
            ValueKind::PriceSensitivePoly { k, p_bar } => {
                if p <= T::zero() {
                    T::zero()
                } else if p >= *p_bar {
                    *p_bar
                } else {
                    *p_bar * -(*k * (-p / *p_bar).ln_1p()).exp_m1()
                }
            }
            ValueKind::Insensitive { level, threshold } => {
                if p > *threshold {
                    *level
                } else {
                    T::zero()
                }
            }
            ValueKind::CLinear { c, impatience, values, prices } => {
                if p <= T::zero() {
                    return T::zero();
                }
                if p >= self.p_nosale {
                    return *c;
                }
                let j = prices.partition_point(|q| *q <= p);
                let (v_lo, v_hi) = (values[j - 1], values[j]);
                let tol = T::resolution() * *c;
                numeric::bisect(|v| v * impatience.quantile(v / *c) - p, v_lo, v_hi, tol).unwrap_or(v_lo)
            }
        }
    }

    /// `v'(p)`. At `p̄` this is the left derivative; `+∞` where the slope
    /// diverges.
    pub fn derivative(&self, p: T) -> Result<T> {
        match &self.kind {
            ValueKind::PriceSensitivePoly { k, p_bar } => {
                if p >= *p_bar {
                    return Ok(T::zero());
                }
                let p = p.max(T::zero());
                Ok(*k * (T::one() - p / *p_bar).powf(*k - T::one()))
            }
            ValueKind::Insensitive { .. } => Err(Error::NotDifferentiable),
            ValueKind::CLinear { c, impatience, .. } => {
                if p > self.p_nosale {
                    return Ok(T::zero());
                }
                let u = self.eval(p) / *c;
                let q = impatience.quantile(u);
                let dens = impatience.pdf(q)?;
                // p(v) = v Q(v/c), so dp/dv = Q(u) + u Q'(u) with Q' = 1/f(Q).
                let dp_dv = q + u / dens;
                let slope = dp_dv.recip();
                Ok(if slope > T::lit(SLOPE_CAP) || !slope.is_finite() { T::infinity() } else { slope })
            }
        }
    }

    /// Price-to-value ratio `p / v(p)`, using the limit `1 / v'(0)` at zero
    /// and `+∞` where the value is zero at a positive price.
    pub fn price_value_ratio(&self, p: T) -> T {
        match &self.kind {
            ValueKind::PriceSensitivePoly { k, .. } if p <= T::zero() => k.recip(),
            ValueKind::CLinear { c, impatience, .. } => impatience.quantile(self.eval(p) / *c),
            _ => {
                let v = self.eval(p);
                if v > T::zero() {
                    p / v
                } else if p > T::zero() {
                    T::infinity()
                } else {
                    T::zero()
                }
            }
        }
    }

    /// Freezes the value where `v'(p*) = 1`.
    pub fn insensitive_projection(&self) -> Result<InsensitiveProjection<T>> {
        if !self.is_sensitive() {
            return Err(Error::NotDifferentiable);
        }
        let p_bar = self.p_nosale;
        let slope_minus_one = |p: T| self.derivative(p).map(|d| d - T::one()).unwrap_or(T::nan());
        if slope_minus_one(p_bar) >= T::zero() {
            return Err(Error::NoCrossing);
        }
        let tol = T::lit(1e-8).max(T::resolution()) * p_bar;
        let p_star = numeric::bisect(slope_minus_one, T::zero(), p_bar, tol).ok_or(Error::NoCrossing)?;
        let v_const = self.eval(p_star);
        Ok(InsensitiveProjection { p_star, v_const, rev_ratio_bound: v_const / self.eval(p_bar) })
    }

    /// Checks monotonicity and midpoint concavity on `grid_n` points of `[0, p̄]`.
    pub fn shape_check(&self, grid_n: usize) -> ShapeReport<T> {
        let grid_n = grid_n.max(3);
        let step = self.p_nosale / T::from_usize(grid_n - 1).unwrap();
        let xs: Vec<T> = (0..grid_n).map(|i| step * T::from_usize(i).unwrap()).collect();
        let vs: Vec<T> = xs.iter().map(|x| self.eval(*x)).collect();
        let tol = T::lit(1e-9).max(T::resolution()) * self.p_nosale.max(T::one());
        let mut report = ShapeReport { monotone: true, midpoint_concave: true, worst: T::zero() };
        for w in vs.windows(2) {
            let drop = w[0] - w[1];
            report.worst = report.worst.max(drop);
            report.monotone &= drop <= tol;
        }
        if self.is_sensitive() {
            for i in 0..grid_n - 2 {
                let mid = self.eval((xs[i] + xs[i + 2]) / T::lit(2.0));
                let gap = (vs[i] + vs[i + 2]) / T::lit(2.0) - mid;
                report.worst = report.worst.max(gap);
                report.midpoint_concave &= gap <= tol;
            }
        }
        report
    }
}
