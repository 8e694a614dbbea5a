//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. The main-grid study dominates the runtime.

use std::fs;
use std::path::Path;
use std::time::Instant;

use num_rational::Ratio;
use skip_pricing::config::DistSpec;
use skip_pricing::dists::marginal_value_dist;
use skip_pricing::experiments::{run_and_write, GridSpec, StudyKind, StudyOptions, StudyOutput};
use skip_pricing::multi_block::{multi_block_revenue, DiscreteTypes};
use skip_pricing::repeat_pricing::{
    equal_revenue_gap, known_types_expected_revenue, myerson_price, retention_threshold_price,
};
use skip_pricing::simulator::{self, RetentionMode, SimConfig};
use skip_pricing::single_task::{analyze, nosale_condition, FigureFamily, SearchOptions};
use skip_pricing::{Distribution, Retention, Scheme, ValueFn};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn multi_block_exact() -> Outcome {
    let q = Ratio::<i64>::new;
    let types = DiscreteTypes::new(vec![q(1, 4), q(3, 4)], vec![q(1, 2), q(1, 2)]).unwrap();
    let blocks = multi_block_revenue(&types, q(1, 1), q(13, 16), Some(q(1, 4))).revenue;
    let high = multi_block_revenue(&types, q(1, 1), q(15, 16), None).revenue;
    let low = multi_block_revenue(&types, q(1, 1), q(7, 16), None).revenue;
    let got = [blocks, high, low].map(|r| *r.numer() as f64 / *r.denom() as f64);
    let want = [0.53125, 0.46875, 0.4375];
    let pass = got.iter().zip(want).all(|(g, w)| (g - w).abs() <= 1e-12);
    outcome(pass, format!("two-block {blocks}, single prices {high} and {low}"))
}

fn equal_revenue() -> Outcome {
    let (known, best) = equal_revenue_gap(5.0f64).unwrap();
    let mut pass = (known - 5.0).abs() <= 1e-3 && (best - 1.0).abs() <= 1e-6;
    let ratios: Vec<f64> = (1..=8)
        .map(|c| {
            let (k, b) = equal_revenue_gap(c as f64).unwrap();
            k / b
        })
        .collect();
    // Linear in c: ratio(c) = c up to quadrature error, so successive steps are all 1.
    for (i, r) in ratios.iter().enumerate() {
        pass &= (r - (i + 1) as f64).abs() <= 1e-3;
    }
    outcome(pass, format!("c=5 known {known:.6} best {best:.8}; ratios {ratios:.4?}"))
}

fn threshold_closed_form() -> (bool, String) {
    let mut pass = true;
    let mut got = Vec::new();
    for lambda in [1.0, 2.0, 3.0, 5.0] {
        let rm = Retention::new(Distribution::exponential(lambda).unwrap(), 1.0).unwrap();
        let q = retention_threshold_price(&rm, 1.0).unwrap().price;
        pass &= (q - 1.0 / lambda).abs() <= 1e-6;
        got.push(q);
    }
    (pass, format!("q at beta=1: {got:.8?}"))
}

fn known_types_closed_form() -> Outcome {
    let cases = [
        (Distribution::uniform_unit(), Distribution::exponential(2.0).unwrap(), 0.99),
        (Distribution::impatience_exponential(1.0).unwrap(), Distribution::exponential(5.0).unwrap(), 0.97),
        (Distribution::impatience_exponential(3.0).unwrap(), Distribution::lomax(3.0).unwrap(), 0.97),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (types, ret, beta) in cases {
        let rm = Retention::new(ret, beta).unwrap();
        let exact = known_types_expected_revenue(&types, 1.0, &rm).unwrap();
        let mut cfg = SimConfig::new(1_000_000, types, 1.0, rm, Scheme::KnownTypes);
        cfg.retention_mode = RetentionMode::Independent;
        cfg.seed = 11;
        let sim = simulator::run(&cfg).unwrap();
        let per_capita = sim.discounted_revenue;
        let err = per_capita / exact - 1.0;
        pass &= err.abs() <= 0.01;
        parts.push(format!("{per_capita:.5}/{exact:.5}"));
    }
    let (q_pass, q_detail) = threshold_closed_form();
    outcome(pass && q_pass, format!("simulated/exact {}; {q_detail}", parts.join(", ")))
}

fn mhr_suite() -> Outcome {
    const GRID: usize = 10_000;
    let mut failures = Vec::new();
    let mut checked = 0;
    let mut bases: Vec<(String, Distribution)> = vec![("uniform".into(), Distribution::uniform_unit())];
    for lambda in [1.0, 3.0, 5.0] {
        bases.push((format!("exp({lambda})"), Distribution::exponential(lambda).unwrap()));
    }
    let mut type_dists = vec![Distribution::uniform_unit()];
    for lambda in [1.0, 2.0, 3.0] {
        let t = Distribution::impatience_exponential(lambda).unwrap();
        bases.push((format!("impatience of impexp({lambda})"), t.impatience().into_distribution()));
        bases.push((format!("impexp({lambda})"), t.clone()));
        type_dists.push(t);
    }
    let mut check = |name: String, d: &Distribution, failures: &mut Vec<String>| {
        checked += 1;
        match d.is_mhr(GRID) {
            Ok(r) if r.is_mhr => {}
            Ok(r) => failures.push(format!("{name} (worst {:.3e})", r.worst_violation)),
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    };
    // Fixed generator so the suite is reproducible.
    let mut state = 0x5eed_u64;
    let mut next = || {
        state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64
    };
    for (name, d) in &bases {
        check(name.clone(), d, &mut failures);
        let (lo, hi) = d.support();
        let span = if hi.is_finite() { hi - lo } else { 3.0 };
        for _ in 0..20 {
            let a = lo + next() * 0.9 * span;
            let b = a + (0.05 + next() * 0.95) * (lo + span - a);
            check(format!("{name} on [{a:.3}, {b:.3}]"), &d.truncate(a, b).unwrap(), &mut failures);
        }
        for c in [0.1, 2.0, 7.0] {
            check(format!("{name} x{c}"), &d.scale(c).unwrap(), &mut failures);
        }
        for _ in 0..20 {
            let c = 0.05 + next() * 10.0;
            check(format!("{name} x{c:.3}"), &d.scale(c).unwrap(), &mut failures);
        }
    }
    let bound = (-1.0f64).exp();
    let mut min_sale = f64::INFINITY;
    let mut sale = |m: &Distribution| {
        let s = m.sf(myerson_price(m));
        min_sale = min_sale.min(s);
        s
    };
    let mut sale_ok = (sale(&Distribution::uniform_unit()) - 0.5).abs() < 1e-9;
    sale_ok &= (sale(&Distribution::exponential(1.0).unwrap()) - bound).abs() < 1e-9;
    for types in &type_dists {
        if types.impatience().is_mhr(GRID).map(|r| r.is_mhr).unwrap_or(false) {
            let m = marginal_value_dist(types, 1.0).unwrap();
            check(format!("marginal of {:?}", types.kind()), &m, &mut failures);
            sale_ok &= sale(&m) >= bound - 1e-9;
            for _ in 0..20 {
                let top = 0.05 + 0.95 * next();
                let t = m.truncate(0.0, top).unwrap();
                check(format!("marginal of {:?} below {top:.3}", types.kind()), &t, &mut failures);
                sale_ok &= sale(&t) >= bound - 1e-9;
            }
        } else {
            failures.push(format!("impatience of {:?} not MHR", types.kind()));
        }
    }
    let pass = failures.is_empty() && sale_ok;
    let mut detail = format!("{checked} distributions checked, min Myerson sale prob {min_sale:.4}");
    if !failures.is_empty() {
        detail.push_str(&format!("; failures: {}", failures.join("; ")));
    }
    outcome(pass, detail)
}

fn single_task_oracles() -> Outcome {
    let opts = SearchOptions::default();
    let types = Distribution::uniform_unit();
    let sqrt = ValueFn::clinear(1.0, &types, 2000).unwrap();
    let r = analyze(&types, &sqrt, opts).unwrap();
    let mut pass = (r.p_rev - 4.0 / 9.0).abs() <= 1e-4
        && (r.rev_max - 4.0 / 27.0).abs() <= 1e-5
        && (r.p_util - 1.0).abs() <= 1e-4
        && (sqrt.p_nosale() - 1.0).abs() <= 1e-12;
    let mut detail = format!("sqrt: p_rev {:.6} rev {:.7} p_util {:.6}", r.p_rev, r.rev_max, r.p_util);

    let mut prev = f64::NEG_INFINITY;
    let mut patience = Vec::new();
    for (lambda, tau) in FigureFamily::Patience.members() {
        let (t, vf) = FigureFamily::Patience.build(lambda, tau).unwrap();
        let p = analyze(&t, &vf, opts).unwrap().p_util;
        pass &= p >= prev - 1e-9;
        prev = p;
        patience.push(p);
    }
    detail.push_str(&format!("; patience family p_util {patience:.4?}"));

    let mut nosale_cases = 0;
    let mut worst = 0.0f64;
    for family in FigureFamily::ALL {
        for (lambda, tau) in family.members() {
            let (t, vf) = family.build(lambda, tau).unwrap();
            if nosale_condition(&t, &vf).map(|c| c.holds).unwrap_or(false) {
                let p = analyze(&t, &vf, opts).unwrap().p_util;
                let gap = (p - vf.p_nosale()).abs() / vf.p_nosale();
                worst = worst.max(gap);
                nosale_cases += 1;
            }
        }
    }
    // Patient populations with no mass below (k - 1)/k satisfy the condition
    // for the poly family, whose slope at p̄ is 0.
    let mut patient = Vec::new();
    for k in [2.0, 3.0, 4.0] {
        let vf = ValueFn::poly(k, 1.0).unwrap();
        let floor = (k - 1.0) / k;
        for lo in [floor, floor + 0.05, 0.95] {
            patient.push((Distribution::uniform_unit().truncate(lo, 1.0).unwrap(), vf.clone()));
        }
        let imp = Distribution::impatience_exponential(20.0).unwrap();
        patient.push((imp.truncate(floor, 1.0).unwrap(), vf.clone()));
    }
    patient.push((Distribution::uniform_unit(), sqrt.clone()));
    for (t, vf) in &patient {
        if nosale_condition(t, vf).map(|c| c.holds).unwrap_or(false) {
            let gap = (analyze(t, vf, opts).unwrap().p_util - vf.p_nosale()).abs() / vf.p_nosale();
            worst = worst.max(gap);
            nosale_cases += 1;
        }
    }
    pass &= nosale_cases > 0;
    pass &= worst <= 2e-4;
    detail.push_str(&format!("; no-sale condition held in {nosale_cases} cases, worst relative gap {worst:.2e}"));
    outcome(pass, detail)
}

fn main_grid(out: &Path) -> (Outcome, Outcome) {
    let start = Instant::now();
    let opts = StudyOptions::default();
    let StudyOutput::Comparison(s) = run_and_write(StudyKind::Main, &GridSpec::main(), &opts, out).unwrap() else {
        unreachable!()
    };
    let elapsed = start.elapsed().as_secs_f64();
    let bound = outcome(
        s.reference_bound_all_hold && s.failed_cells == 0,
        format!(
            "{} cells, min MT/known-types {:.4} vs bound {:.4}, {} horizon-truncated, {elapsed:.0}s",
            s.cells,
            s.min_reference_ratio,
            0.99 / std::f64::consts::E,
            s.truncated_cells
        ),
    );
    let stats = outcome(
        (0.72..=0.92).contains(&s.frac_mt_within_1pct)
            && (0.04..=0.20).contains(&s.frac_mt_strictly_best)
            && s.frac_threshold_beats_myerson >= 0.10,
        format!(
            "per run: within 1% {:.3}, strictly best {:.3}, threshold beats Myerson {:.3} \
             (replicate means: {:.3}, {:.3}, {:.3})",
            s.frac_mt_within_1pct,
            s.frac_mt_strictly_best,
            s.frac_threshold_beats_myerson,
            s.frac_cells_mt_within_1pct,
            s.frac_cells_mt_strictly_best,
            s.frac_cells_threshold_beats_myerson
        ),
    );
    (bound, stats)
}

fn scaling(out: &Path) -> Outcome {
    let StudyOutput::Scaling(s) =
        run_and_write(StudyKind::Scaling, &GridSpec::scaling(), &StudyOptions::default(), out).unwrap()
    else {
        unreachable!()
    };
    let median = |c: f64| s.scales.iter().find(|r| (r.c - c).abs() < 1e-12).map(|r| r.median).unwrap();
    let (m23, m12, m13) = (median(2.0 / 3.0), median(0.5), median(1.0 / 3.0));
    outcome(m23 >= 0.99 && m13 < m12 && m12 <= m23, format!("medians c=2/3 {m23:.4}, 1/2 {m12:.4}, 1/3 {m13:.4}"))
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism(root: &Path) -> Outcome {
    let mut spec = GridSpec::main();
    spec.type_dists = vec![DistSpec::Uniform, DistSpec::ImpatienceExponential { lambda: 3.0 }];
    spec.retention_dists = vec![DistSpec::Exponential { lambda: 3.0 }, DistSpec::Lomax { alpha: 5.0 }];
    spec.betas = vec![0.97];
    spec.growth_rates = vec![0.0, 0.01];
    spec.scales = vec![1.0, 0.5];
    let opts = StudyOptions { n: 5_000, seed: 42, replicates: 2, ..StudyOptions::default() };
    let mut pass = true;
    let mut compared = 0;
    for kind in [StudyKind::Main, StudyKind::Scaling] {
        let a = root.join(format!("{}_a", kind.name()));
        let b = root.join(format!("{}_b", kind.name()));
        run_and_write(kind, &spec, &opts, &a).unwrap();
        run_and_write(kind, &spec, &opts, &b).unwrap();
        let (fa, fb) = (csv_files(&a), csv_files(&b));
        pass &= !fa.is_empty() && fa == fb;
        compared += fa.len();
    }
    outcome(pass, format!("{compared} CSV files identical across reruns"))
}

fn main() {
    let tmp = std::env::temp_dir().join(format!("skip-pricing-acceptance-{}", std::process::id()));
    fs::create_dir_all(&tmp).unwrap();
    // Optional substring filters, e.g. `cargo test --test acceptance -- mhr`.
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |name: &str| filters.is_empty() || filters.iter().any(|f| name.contains(f.as_str()));

    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut record = |name, o: Outcome| {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((name, o));
    };
    let checks: [(&str, &dyn Fn() -> Outcome); 7] = [
        ("multi-block exact arithmetic", &multi_block_exact),
        ("equal-revenue gap", &equal_revenue),
        ("known-types closed forms", &known_types_closed_form),
        ("MHR property suite", &mhr_suite),
        ("single-task oracles", &single_task_oracles),
        ("determinism", &|| determinism(&tmp.join("determinism"))),
        ("price scaling ordering", &|| scaling(&tmp.join("scaling"))),
    ];
    for (name, check) in checks {
        if wanted(name) {
            record(name, check());
        }
    }
    let (bound_name, stats_name) = ("MT vs known-types bound", "main-grid statistics");
    if wanted(bound_name) || wanted(stats_name) {
        let (bound, stats) = main_grid(&tmp.join("main"));
        record(bound_name, bound);
        record(stats_name, stats);
    }

    let _ = fs::remove_dir_all(&tmp);
    let failed = results.iter().filter(|(_, o)| !o.pass).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
