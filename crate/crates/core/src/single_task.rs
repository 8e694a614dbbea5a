//! Utility and revenue of a single skip offer, the optimal prices, and the
//! checks and bounds that relate them.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dists::ScalarDistribution;
use crate::error::{Error, Result};
use crate::numeric;
use crate::scalar::Real;
use crate::valuefn::ValueFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Utility,
    Revenue,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions<T> {
    pub grid_n: usize,
    pub refine_tol: T,
}

impl<T: Real> Default for SearchOptions<T> {
    fn default() -> Self {
        Self { grid_n: 10_000, refine_tol: T::lit(1e-6) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NosaleCheck<T> {
    pub holds: bool,
    pub lhs: T,
    pub rhs: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RevenueFrontier<T> {
    /// Largest grid price with the inequality holding at every grid price up to it.
    pub frontier: T,
    /// Root of the equality, when the impatience distribution is MHR.
    pub crossing: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingleTaskReport<T> {
    pub p_util: T,
    pub u_max: T,
    pub p_rev: T,
    pub rev_max: T,
    pub nosale_condition_holds: bool,
    pub revenue_frontier: T,
    /// Present only when the no-sale condition holds.
    pub utility_floor: Option<T>,
}

/// Expected utility over all players when the skip costs `p`.
pub fn expected_utility<T: Real>(types: &ScalarDistribution<T>, vf: &ValueFunction<T>, p: T) -> T {
    let v = vf.eval(p);
    if !(v > T::zero()) {
        return T::zero();
    }
    let ratio = vf.price_value_ratio(p);
    let sale = types.prob_reflected_at_least(ratio);
    // Buyers have γ ≤ 1 - p/v and pay; everybody else waits and keeps γ v.
    sale * (v - p) + types.partial_expectation_above(T::one() - ratio) * v
}

/// Expected revenue from offering the skip at `p`.
pub fn expected_revenue<T: Real>(types: &ScalarDistribution<T>, vf: &ValueFunction<T>, p: T) -> T {
    if !(p > T::zero()) || !(vf.eval(p) > T::zero()) {
        return T::zero();
    }
    p * types.prob_reflected_at_least(vf.price_value_ratio(p))
}

pub fn objective_value<T: Real>(objective: Objective, types: &ScalarDistribution<T>, vf: &ValueFunction<T>, p: T) -> T {
    match objective {
        Objective::Utility => expected_utility(types, vf, p),
        Objective::Revenue => expected_revenue(types, vf, p),
    }
}

/// Grid scan over `[0, p̄]` refined by golden-section search in the best
/// bracket. Returns `(price, value)`; ties favour the higher price.
pub fn optimal_price<T: Real>(
    objective: Objective,
    types: &ScalarDistribution<T>,
    vf: &ValueFunction<T>,
    opts: SearchOptions<T>,
) -> (T, T) {
    let f = |p: T| objective_value(objective, types, vf, p);
    maximize(f, vf.p_nosale(), opts)
}

fn maximize<T: Real, F: Fn(T) -> T + Sync>(f: F, p_bar: T, opts: SearchOptions<T>) -> (T, T) {
    let n = opts.grid_n.max(100);
    let n_t = T::from_usize(n).unwrap();
    let grid_point = |i: usize| if i == n { p_bar } else { p_bar * T::from_usize(i).unwrap() / n_t };
    let values: Vec<T> = (0..=n).into_par_iter().map(|i| f(grid_point(i))).collect();
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v >= values[best] {
            best = i;
        }
    }
    let (lo, hi) = (grid_point(best.saturating_sub(1)), grid_point((best + 1).min(n)));
    let (x, fx) = numeric::golden_section_max(&f, lo, hi, opts.refine_tol);
    if fx > values[best] {
        (x, fx)
    } else {
        (grid_point(best), values[best])
    }
}

/// The sufficient condition for the utility-optimal price to sit at `p̄`.
pub fn nosale_condition<T: Real>(types: &ScalarDistribution<T>, vf: &ValueFunction<T>) -> Result<NosaleCheck<T>> {
    let end_slope = vf.derivative(vf.p_nosale())?;
    nosale_condition_with_slope(types, vf, end_slope)
}

/// As [`nosale_condition`], with the slope at `p̄` supplied by the caller.
pub fn nosale_condition_with_slope<T: Real>(
    types: &ScalarDistribution<T>,
    vf: &ValueFunction<T>,
    end_slope: T,
) -> Result<NosaleCheck<T>> {
    let start = vf.derivative(T::zero())?;
    let arg = if start.is_infinite() { T::one() } else { (start - T::one()) / start };
    let lhs = types.cdf(arg);
    let rhs = if end_slope >= T::one() { T::infinity() } else { end_slope / (T::one() - end_slope) * types.mean() };
    Ok(NosaleCheck { holds: lhs <= rhs, lhs, rhs })
}

/// Scans for the largest price up to which the revenue first-order
/// inequality `h(p/v) ≥ (p/v)(1 - p v'(p)/v)` holds, `h` being the inverse
/// hazard of impatience.
pub fn revenue_frontier<T: Real>(
    types: &ScalarDistribution<T>,
    vf: &ValueFunction<T>,
    grid_n: usize,
) -> Result<RevenueFrontier<T>> {
    if !vf.is_sensitive() {
        return Err(Error::NotDifferentiable);
    }
    let impatience = types.impatience();
    let gap = |p: T| -> T {
        let r = vf.price_value_ratio(p);
        let Ok(slope) = vf.derivative(p) else { return T::nan() };
        let rhs = if r > T::zero() { r * (T::one() - r * slope) } else { T::zero() };
        match impatience.inverse_hazard(r) {
            Ok(h) => h - rhs,
            Err(_) => T::neg_infinity(),
        }
    };
    let n = grid_n.max(2);
    let p_bar = vf.p_nosale();
    let step = p_bar / T::from_usize(n).unwrap();
    let mut frontier = T::zero();
    let mut next = None;
    for i in 0..=n {
        let p = if i == n { p_bar } else { step * T::from_usize(i).unwrap() };
        if gap(p) >= T::zero() {
            frontier = p;
        } else {
            next = Some(p);
            break;
        }
    }
    let mhr = impatience.is_mhr(1000).map(|r| r.is_mhr).unwrap_or(false);
    let crossing = match next {
        Some(hi) if mhr => {
            let tol = T::lit(1e-10).max(T::resolution()) * p_bar;
            numeric::bisect(|p| if gap(p).is_finite() { gap(p) } else { -T::one() }, frontier, hi, tol)
        }
        _ => None,
    };
    Ok(RevenueFrontier { frontier, crossing })
}

/// Utility guaranteed by the revenue-optimal price when the no-sale
/// condition holds.
pub fn utility_floor<T: Real>(
    types: &ScalarDistribution<T>,
    vf: &ValueFunction<T>,
    opts: SearchOptions<T>,
) -> Result<T> {
    let check = nosale_condition(types, vf)?;
    if !check.holds {
        return Err(Error::ConditionNotMet { lhs: check.lhs.as_f64(), rhs: check.rhs.as_f64() });
    }
    let (_, u_max) = optimal_price(Objective::Utility, types, vf, opts);
    let (p_rev, _) = optimal_price(Objective::Revenue, types, vf, opts);
    floor_at(vf, u_max, p_rev)
}

fn floor_at<T: Real>(vf: &ValueFunction<T>, u_max: T, p_rev: T) -> Result<T> {
    let slope = vf.derivative(p_rev)?;
    let gap = vf.p_nosale() - p_rev;
    Ok(if gap > T::zero() { u_max - slope * gap } else { u_max })
}

/// Runs every single-task computation for one (type distribution, value function) pair.
pub fn analyze<T: Real>(
    types: &ScalarDistribution<T>,
    vf: &ValueFunction<T>,
    opts: SearchOptions<T>,
) -> Result<SingleTaskReport<T>> {
    let (p_util, u_max) = optimal_price(Objective::Utility, types, vf, opts);
    let (p_rev, rev_max) = optimal_price(Objective::Revenue, types, vf, opts);
    if !vf.is_sensitive() {
        return Ok(SingleTaskReport {
            p_util,
            u_max,
            p_rev,
            rev_max,
            nosale_condition_holds: false,
            revenue_frontier: p_rev,
            utility_floor: None,
        });
    }
    let check = nosale_condition(types, vf)?;
    let frontier = revenue_frontier(types, vf, opts.grid_n)?;
    let utility_floor = if check.holds { Some(floor_at(vf, u_max, p_rev)?) } else { None };
    Ok(SingleTaskReport {
        p_util,
        u_max,
        p_rev,
        rev_max,
        nosale_condition_holds: check.holds,
        revenue_frontier: frontier.frontier,
        utility_floor,
    })
}

/// Rows of `(p, v(p), U(p), REV(p))` at `points` evenly spaced prices on `[0, p̄]`.
pub fn curve<T: Real>(types: &ScalarDistribution<T>, vf: &ValueFunction<T>, points: usize) -> Vec<[T; 4]> {
    let points = points.max(2);
    let p_bar = vf.p_nosale();
    (0..points)
        .into_par_iter()
        .map(|i| {
            let p = p_bar * T::from_usize(i).unwrap() / T::from_usize(points - 1).unwrap();
            [p, vf.eval(p), expected_utility(types, vf, p), expected_revenue(types, vf, p)]
        })
        .collect()
}

/// Parameter sweeps behind the single-task figures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureFamily {
    /// Poly k = 4 value, exponential impatience with λ ∈ {1, 3, 10}.
    Patience,
    /// Poly k = 4 value, λ = 10 flattened at τ ∈ {1, 0.35, 0.25}.
    FlattenedTail,
    /// c-linear values, λ ∈ {1, 5}.
    ClinearRising,
    /// c-linear values, λ ∈ {5, 15}.
    ClinearFalling,
    /// c-linear values, λ = 8 flattened at τ ∈ {1, 0.5, 0.4}.
    ClinearFlattened,
    /// c-linear values, (λ, τ) ∈ {(10, 1), (20, 0.25)}.
    ClinearConcentrated,
}

impl FigureFamily {
    pub const ALL: [FigureFamily; 6] = [
        FigureFamily::Patience,
        FigureFamily::FlattenedTail,
        FigureFamily::ClinearRising,
        FigureFamily::ClinearFalling,
        FigureFamily::ClinearFlattened,
        FigureFamily::ClinearConcentrated,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigureFamily::Patience => "patience",
            FigureFamily::FlattenedTail => "flattened_tail",
            FigureFamily::ClinearRising => "clinear_rising",
            FigureFamily::ClinearFalling => "clinear_falling",
            FigureFamily::ClinearFlattened => "clinear_flattened",
            FigureFamily::ClinearConcentrated => "clinear_concentrated",
        }
    }

    /// `(λ, τ)` for each member, in plotting order.
    pub fn members(self) -> Vec<(f64, f64)> {
        match self {
            FigureFamily::Patience => vec![(1.0, 1.0), (3.0, 1.0), (10.0, 1.0)],
            FigureFamily::FlattenedTail => vec![(10.0, 1.0), (10.0, 0.35), (10.0, 0.25)],
            FigureFamily::ClinearRising => vec![(1.0, 1.0), (5.0, 1.0)],
            FigureFamily::ClinearFalling => vec![(5.0, 1.0), (15.0, 1.0)],
            FigureFamily::ClinearFlattened => vec![(8.0, 1.0), (8.0, 0.5), (8.0, 0.4)],
            FigureFamily::ClinearConcentrated => vec![(10.0, 1.0), (20.0, 0.25)],
        }
    }

    pub fn uses_clinear(self) -> bool {
        !matches!(self, FigureFamily::Patience | FigureFamily::FlattenedTail)
    }

    /// Type distribution and value function of one member. c-linear members use c = 1.
    pub fn build(self, lambda: f64, tau: f64) -> Result<(ScalarDistribution<f64>, ValueFunction<f64>)> {
        let types = if tau >= 1.0 {
            ScalarDistribution::impatience_exponential(lambda)?
        } else {
            ScalarDistribution::flattened_impatience_exponential(lambda, tau)?
        };
        let vf = if self.uses_clinear() {
            ValueFunction::clinear(1.0, &types, 2000)?
        } else {
            ValueFunction::poly(4.0, 1.0)?
        };
        Ok((types, vf))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FigureRow {
    pub param: String,
    pub lambda: f64,
    pub tau: f64,
    pub p_util: f64,
    pub p_rev: f64,
    pub u_at_putil: f64,
    pub rev_at_prev: f64,
    /// Revenue-optimal price when the value is frozen at `v(p_rev)`.
    pub p_rev_const: f64,
}

pub const CURVE_POINTS: usize = 500;

/// Computes one figure family and writes `<name>.csv`, one
/// `curve_<name>_<param>.csv` per member and `density_<name>.csv` under `out`.
pub fn figure_sweep(family: FigureFamily, out: &Path, opts: SearchOptions<f64>) -> Result<Vec<FigureRow>> {
    fs::create_dir_all(out)?;
    let members = family.members();
    let computed: Vec<Result<(FigureRow, Vec<[f64; 4]>)>> = members
        .par_iter()
        .map(|&(lambda, tau)| {
            let (types, vf) = family.build(lambda, tau)?;
            let (p_util, u) = optimal_price(Objective::Utility, &types, &vf, opts);
            let (p_rev, rev) = optimal_price(Objective::Revenue, &types, &vf, opts);
            let flat = ValueFunction::insensitive(vf.eval(p_rev), 0.0)?;
            let (p_rev_const, _) = optimal_price(Objective::Revenue, &types, &flat, opts);
            let row = FigureRow {
                param: format!("lambda{lambda}_tau{tau}"),
                lambda,
                tau,
                p_util,
                p_rev,
                u_at_putil: u,
                rev_at_prev: rev,
                p_rev_const,
            };
            Ok((row, curve(&types, &vf, CURVE_POINTS)))
        })
        .collect();
    let mut rows = Vec::with_capacity(members.len());
    let mut table = csv::Writer::from_path(out.join(format!("{}.csv", family.name())))?;
    let mut density = csv::Writer::from_path(out.join(format!("density_{}.csv", family.name())))?;
    density.write_record(["param", "impatience", "pdf"])?;
    for ((lambda, tau), item) in members.iter().zip(computed) {
        let (row, samples) = item?;
        let mut w = csv::Writer::from_path(out.join(format!("curve_{}_{}.csv", family.name(), row.param)))?;
        w.write_record(["p", "v", "U", "REV"])?;
        for s in samples {
            w.write_record(s.iter().map(|x| x.to_string()))?;
        }
        w.flush()?;
        let (types, _) = family.build(*lambda, *tau)?;
        let imp = types.impatience();
        for i in 0..CURVE_POINTS {
            let y = i as f64 / (CURVE_POINTS - 1) as f64;
            density.write_record([row.param.clone(), y.to_string(), imp.pdf(y)?.to_string()])?;
        }
        table.serialize(&row)?;
        rows.push(row);
    }
    table.flush()?;
    density.flush()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    type D = ScalarDistribution<f64>;
    type Vf = ValueFunction<f64>;

    fn sqrt_vf() -> Vf {
        Vf::clinear(1.0, &D::uniform_unit(), 1000).unwrap()
    }

    // Closed form for uniform types with v = √p, in s = √p.
    fn utility_oracle(s: f64) -> f64 {
        s - s * s + s * s * s / 2.0
    }

    #[test]
    fn utility_examples() {
        let u = D::uniform_unit();
        let vf = sqrt_vf();
        assert!((expected_utility(&u, &vf, 1.0) - 0.5).abs() < 1e-9);
        assert!((expected_utility(&u, &vf, 0.25) - 0.3125).abs() < 1e-9);
        for s in [0.1, 0.3, 0.7, 0.95] {
            assert!((expected_utility(&u, &vf, s * s) - utility_oracle(s)).abs() < 1e-9);
        }
        let poly = Vf::poly(4.0, 1.0).unwrap();
        let types = D::impatience_exponential(3.0).unwrap();
        let end = expected_utility(&types, &poly, 1.0);
        assert!((end - types.mean()).abs() < 1e-9);
    }

    #[test]
    fn revenue_examples() {
        let u = D::uniform_unit();
        let vf = sqrt_vf();
        assert_eq!(expected_revenue(&u, &vf, 0.0), 0.0);
        assert!(expected_revenue(&u, &vf, 1.0).abs() < 1e-12);
        assert!((expected_revenue(&u, &vf, 4.0 / 9.0) - 4.0 / 27.0).abs() < 1e-9);
    }

    #[test]
    fn optimal_price_examples() {
        let u = D::uniform_unit();
        let vf = sqrt_vf();
        let (p, r) = optimal_price(Objective::Revenue, &u, &vf, SearchOptions::default());
        assert!((p - 4.0 / 9.0).abs() < 1e-4);
        assert!((r - 4.0 / 27.0).abs() < 1e-5);
        let (p, _) = optimal_price(Objective::Utility, &u, &vf, SearchOptions::default());
        assert_eq!(p, 1.0);
    }

    #[test]
    fn constant_value_gives_myerson_price() {
        let u = D::uniform_unit();
        let flat = Vf::insensitive(1.0, 0.0).unwrap();
        let (p, _) = optimal_price(Objective::Revenue, &u, &flat, SearchOptions::default());
        assert!((p - 0.5).abs() < 1e-4);
    }

    #[test]
    fn nosale_examples() {
        let u = D::uniform_unit();
        let check = nosale_condition(&u, &sqrt_vf()).unwrap();
        assert!(!check.holds);
        assert_eq!(check.lhs, 1.0);
        assert!((check.rhs - 0.5).abs() < 1e-9);

        let poly = Vf::poly(4.0, 1.0).unwrap();
        let check = nosale_condition_with_slope(&u, &poly, 1.0).unwrap();
        assert!(check.holds && check.rhs.is_infinite());
    }

    #[test]
    fn nosale_with_patient_population() {
        // Types concentrated on [0.8, 1] put no mass below (k - 1)/k = 0.75.
        let types = D::uniform_unit().truncate(0.8, 1.0).unwrap();
        let poly = Vf::poly(4.0, 1.0).unwrap();
        let check = nosale_condition(&types, &poly).unwrap();
        assert!(check.holds);
        let opts = SearchOptions::default();
        let (p_util, _) = optimal_price(Objective::Utility, &types, &poly, opts);
        assert!((p_util - 1.0).abs() <= 2e-4);
        let floor = utility_floor(&types, &poly, opts).unwrap();
        let (p_rev, _) = optimal_price(Objective::Revenue, &types, &poly, opts);
        let (_, u_max) = optimal_price(Objective::Utility, &types, &poly, opts);
        assert!(floor <= u_max + 1e-9);
        assert!(expected_utility(&types, &poly, p_rev) >= floor - 1e-9);
    }

    #[test]
    fn utility_floor_refuses_without_condition() {
        let res = utility_floor(&D::uniform_unit(), &sqrt_vf(), SearchOptions::default());
        assert!(matches!(res, Err(Error::ConditionNotMet { .. })));
    }

    #[test]
    fn frontier_for_square_root_model() {
        let u = D::uniform_unit();
        let vf = sqrt_vf();
        let f = revenue_frontier(&u, &vf, 10_000).unwrap();
        assert!((f.frontier - 4.0 / 9.0).abs() < 2e-4);
        let crossing = f.crossing.unwrap();
        assert!((crossing - 4.0 / 9.0).abs() < 1e-6);
        let (p_rev, _) = optimal_price(Objective::Revenue, &u, &vf, SearchOptions::default());
        assert!((crossing - p_rev).abs() < 1e-5);
    }

    #[test]
    fn frontier_rises_with_heavier_impatient_tail() {
        let vf = Vf::poly(4.0, 1.0).unwrap();
        let base = D::impatience_exponential(10.0).unwrap();
        let heavy = D::flattened_impatience_exponential(10.0, 0.25).unwrap();
        let a = revenue_frontier(&base, &vf, 10_000).unwrap().frontier;
        let b = revenue_frontier(&heavy, &vf, 10_000).unwrap().frontier;
        assert!(b > a, "{b} <= {a}");
    }

    #[test]
    fn report_invariants() {
        let vf = Vf::poly(4.0, 1.0).unwrap();
        for lambda in [1.0, 3.0, 10.0] {
            let types = D::impatience_exponential(lambda).unwrap();
            let r = analyze(&types, &vf, SearchOptions::default()).unwrap();
            assert!(r.p_util >= 0.0 && r.p_util <= 1.0);
            assert!(r.p_rev >= 0.0 && r.p_rev <= 1.0);
            if let Some(floor) = r.utility_floor {
                assert!(floor <= r.u_max + 1e-9);
            }
        }
    }

    #[test]
    fn utility_and_revenue_bounds() {
        let vf = Vf::poly(4.0, 1.0).unwrap();
        let types = D::flattened_impatience_exponential(10.0, 0.35).unwrap();
        let mean_gamma = types.mean();
        let mean_iota = 1.0 - mean_gamma;
        for i in 0..=50 {
            let p = i as f64 / 50.0;
            let v = vf.eval(p);
            assert!(expected_utility(&types, &vf, p) >= mean_gamma * v - 1e-9);
            let rev = expected_revenue(&types, &vf, p);
            assert!(rev <= p + 1e-12);
            assert!(rev <= mean_iota * v + 1e-9);
        }
    }

    #[test]
    fn single_precision_search() {
        let u = ScalarDistribution::<f32>::uniform_unit();
        let vf = ValueFunction::<f32>::poly(2.0, 1.0).unwrap();
        let opts = SearchOptions { grid_n: 1000, refine_tol: 1e-4 };
        let (p, _) = optimal_price(Objective::Revenue, &u, &vf, opts);
        // Revenue p(1 - p/v) with v = 2p - p^2 reduces to p(1 - p)/(2 - p).
        let oracle = 2.0 - 2f32.sqrt();
        assert!((p - oracle).abs() < 1e-3);
    }
}
