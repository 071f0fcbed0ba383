//! End-to-end acceptance run. Prints one line per criterion and exits
//! non-zero if any of them fails.

use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use swapcheck::axioms::{check_axioms, check_lower_invariance, check_swap_monotonicity, check_strategyproof, check_weak_sp, Axiom, SpMode};
use swapcheck::classify::{classify, Manifest};
use swapcheck::enumerate::{all_types, profiles, Caps, Symmetry};
use swapcheck::mechanisms::{builtin, nbm, ps, rank_min, Capabilities, Mechanism, TableMechanism, LIBRARY};
use swapcheck::model::ratio::{int, ratio};
use swapcheck::model::{fosd_compare, Dominance, PrefOrder, Profile, Rational, Setting, UtilityFn};
use swapcheck::psp::{
    compute_rho, manipulation_gain, maximality_counterexample, rho_bisect, sample_urbi, urbi_contains, urbi_share,
    verify_psp, violating_pair,
};
use swapcheck::{CheckOptions, Scope};

type Outcome = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn unit(n: usize, m: usize) -> Setting {
    Setting::unit(n, m).unwrap()
}

fn row(v: &[(i64, i64)]) -> Vec<Rational> {
    v.iter().map(|&(p, q)| ratio(p, q)).collect()
}

fn order(s: &Setting, t: &str) -> PrefOrder {
    PrefOrder::parse(s, t).unwrap()
}

fn dot(u: &[Rational], x: &[Rational]) -> Rational {
    u.iter().zip(x).map(|(a, b)| a * b).sum()
}

fn within(start: Instant, limit: Duration, what: &str) -> Outcome {
    let took = start.elapsed();
    ensure!(took <= limit, "{what} took {took:?}, limit {limit:?}");
    Ok(())
}

fn ps_exactness() -> Outcome {
    let start = Instant::now();
    let s = unit(3, 3);
    let truthful = Profile::parse(&s, &["a>b>c", "b>a>c", "b>c>a"]).unwrap();
    let lie = truthful.with_report(0, order(&s, "b>a>c"));
    let x = ps(&s, &truthful).unwrap();
    let y = ps(&s, &lie).unwrap();
    ensure!(x.row(0) == row(&[(3, 4), (0, 1), (1, 4)]).as_slice(), "truthful row {:?}", x.to_strings()[0]);
    ensure!(y.row(0) == row(&[(1, 2), (1, 3), (1, 6)]).as_slice(), "misreport row {:?}", y.to_strings()[0]);
    within(start, Duration::from_secs(1), "PS rows")
}

fn nbm_exactness() -> Outcome {
    let start = Instant::now();
    let s = unit(4, 4);
    let profile = Profile::parse(&s, &["a>b>c>d", "a>c>b>d", "b>c>a>d", "b>c>a>d"]).unwrap();
    let lie = order(&s, "a>c>b>d");
    let x = nbm(&s, &profile).unwrap();
    let y = nbm(&s, &profile.with_report(0, lie.clone())).unwrap();
    ensure!(x.row(0) == row(&[(1, 2), (0, 1), (0, 1), (1, 2)]).as_slice(), "truthful row {:?}", x.to_strings()[0]);
    ensure!(y.row(0) == row(&[(1, 2), (0, 1), (1, 4), (1, 4)]).as_slice(), "misreport row {:?}", y.to_strings()[0]);

    let mech = builtin("nbm", &Caps::default()).unwrap();
    let pinned = CheckOptions::default().with_scope(Scope::Single {
        agent: 0,
        profile: profile.clone(),
        misreport: lie.clone(),
    });
    for report in [
        check_swap_monotonicity(&*mech, &s, &pinned).unwrap(),
        check_lower_invariance(&*mech, &s, &pinned).unwrap(),
    ] {
        let w = report.witness.as_ref().ok_or(format!("{} holds on the pinned profile", report.axiom))?;
        ensure!(w.profile == profile && w.misreport == lie, "{} witness {}", report.axiom, w.describe(&s));
        ensure!(w.truthful_row == x.row(0) && w.misreport_row == y.row(0), "witness rows differ");
    }
    let full = CheckOptions::default();
    ensure!(!check_swap_monotonicity(&*mech, &s, &full).unwrap().holds, "full sweep finds no swap violation");
    ensure!(!check_lower_invariance(&*mech, &s, &full).unwrap().holds, "full sweep finds no lower violation");
    within(start, Duration::from_secs(1), "NBM rows and checks")
}

fn abm_degree() -> Outcome {
    let start = Instant::now();
    let s = unit(4, 4);
    let abm = builtin("abm", &Caps::default()).unwrap();
    let opts = CheckOptions::default().with_symmetry(Symmetry::Anonymous);
    let rho = compute_rho(&*abm, &s, &opts).map_err(|e| e.to_string())?;
    ensure!(rho.value() == Some(&ratio(1, 3)), "rho = [{}, {}]", rho.lo, rho.hi);
    ensure!(verify_psp(&*abm, &s, &ratio(1, 3), &opts).unwrap().holds, "not 1/3-PSP");
    ensure!(!verify_psp(&*abm, &s, &ratio(34, 100), &opts).unwrap().holds, "0.34-PSP holds");
    within(start, Duration::from_secs(600), "ABM degree")
}

fn table_one() -> Outcome {
    let start = Instant::now();
    let result = classify(&Manifest::builtin(), &CheckOptions::default()).map_err(|e| e.to_string())?;
    for r in &result.rows {
        ensure!(r.matches(), "{}: expected {:?}, observed {:?}", r.label, r.expected, r.observed);
    }
    ensure!(result.rows.len() == 7, "{} rows", result.rows.len());
    within(start, Duration::from_secs(1800), "classification")
}

/// Every library mechanism on small unit and non-unit settings.
fn small_settings() -> Vec<Setting> {
    let mut out = Vec::new();
    for n in 1..=3 {
        for m in 1..=3 {
            out.push(unit(n, m));
        }
    }
    let labels = |m: usize| ["a", "b", "c"][..m].iter().map(|s| s.to_string()).collect::<Vec<_>>();
    out.push(Setting::new(3, labels(2), vec![2, 1]).unwrap());
    out.push(Setting::new(3, labels(3), vec![1, 1, 2]).unwrap());
    out.push(Setting::new(2, labels(2), vec![2, 2]).unwrap());
    out
}

fn characterization() -> Outcome {
    let opts = CheckOptions::default().with_symmetry(Symmetry::None);
    for s in small_settings() {
        for name in LIBRARY {
            let mech = builtin(name, &Caps::default()).unwrap();
            let axioms = [Axiom::SwapMonotonic, Axiom::UpperInvariant, Axiom::LowerInvariant, Axiom::Strategyproof];
            let reports = check_axioms(&*mech, &s, &axioms, &opts).unwrap();
            let three = reports[..3].iter().all(|r| r.holds);
            let global = reports[3].holds;
            let local = check_strategyproof(&*mech, &s, SpMode::Local, &opts).unwrap().holds;
            ensure!(global == three, "{name} on {:?}: sp {global}, axioms {three}", s.to_doc());
            ensure!(global == local, "{name} on {:?}: global {global}, local {local}", s.to_doc());
        }
    }
    Ok(())
}

/// Distinct `(truth, delta)` pairs over every profile, agent and misreport,
/// computed from raw allocations.
fn raw_constraints(mech: &dyn Mechanism, s: &Setting) -> BTreeSet<(PrefOrder, Vec<Rational>)> {
    let types = all_types(s, &Caps::default()).unwrap();
    let mut out = BTreeSet::new();
    for class in profiles(s, Symmetry::None, Capabilities::default(), &Caps::default()).unwrap() {
        let p = class.representative;
        let x = mech.allocate(s, &p).unwrap();
        for i in 0..s.n() {
            for lie in types.iter().filter(|t| *t != p.agent(i)) {
                let y = mech.allocate(s, &p.with_report(i, lie.clone())).unwrap();
                let delta: Vec<Rational> = x.row(i).iter().zip(y.row(i)).map(|(a, b)| a - b).collect();
                if delta.iter().any(|d| !d.is_zero()) {
                    out.insert((p.agent(i).clone(), delta));
                }
            }
        }
    }
    out
}

fn sampled_oracle() -> Outcome {
    let s = unit(3, 3);
    let types = all_types(&s, &Caps::default()).unwrap();
    let grid = [ratio(1, 3), ratio(1, 2), ratio(3, 4), int(1)];
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let opts = CheckOptions::default();
    let mut sampled = 0usize;
    for name in LIBRARY {
        let mech = builtin(name, &Caps::default()).unwrap();
        let constraints = raw_constraints(&*mech, &s);
        for r in &grid {
            let verdict = verify_psp(&*mech, &s, r, &opts).unwrap();
            if verdict.holds {
                sampled += 1;
                for t in &types {
                    let deltas: Vec<&Vec<Rational>> =
                        constraints.iter().filter(|(truth, _)| truth == t).map(|(_, d)| d).collect();
                    for _ in 0..10_000 {
                        let u = sample_urbi(t, r, &mut rng);
                        for d in &deltas {
                            ensure!(!dot(u.values(), d).is_negative(), "{name} at r={r}: sampled utility gains");
                        }
                    }
                }
            } else {
                let w = verdict.witness.as_ref().unwrap();
                let u = verdict.utility.as_ref().ok_or(format!("{name} at r={r}: no witness utility"))?;
                ensure!(urbi_contains(u, r), "{name} at r={r}: utility outside URBI");
                ensure!(u.induced_order().as_ref() == Some(w.truth()), "{name}: utility inconsistent with truth");
                let gain = manipulation_gain(&*mech, &s, w.agent, &w.profile, &w.misreport, u).unwrap();
                ensure!(gain.is_positive(), "{name} at r={r}: witness gain {gain}");
            }
        }
    }
    ensure!(sampled >= 8, "only {sampled} true verdicts were sampled");
    Ok(())
}

fn two_algorithms() -> Outcome {
    let tol = ratio(1, 1_000_000);
    for name in ["ps", "abm"] {
        let mech = builtin(name, &Caps::default()).unwrap();
        for s in [unit(3, 3), unit(4, 4)] {
            let opts = CheckOptions::default();
            let rho = compute_rho(&*mech, &s, &opts).unwrap();
            let (lo, hi) = rho_bisect(&*mech, &s, &tol, &opts).unwrap();
            ensure!(&hi - &lo <= tol, "{name}: interval wider than tolerance");
            ensure!(lo <= rho.lo && rho.hi <= hi, "{name} on {}x{}: rho {} outside [{lo}, {hi}]", s.n(), s.m(), rho.lo);
        }
    }
    Ok(())
}

/// Random `r` and a strictly ordered integer utility outside `URBI(r)`.
fn violating_draw(rng: &mut ChaCha8Rng, m: usize) -> (Rational, UtilityFn) {
    loop {
        let q = rng.gen_range(2..=20);
        let r = ratio(rng.gen_range(1..q), q);
        let mut values: Vec<i64> = Vec::new();
        while values.len() < m {
            let v = rng.gen_range(0..1000);
            if !values.contains(&v) {
                values.push(v);
            }
        }
        let u = UtilityFn::from_ints(&values);
        if !urbi_contains(&u, &r) {
            return (r, u);
        }
    }
}

fn maximality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in 0..20 {
        let s = if k < 10 { unit(3, 3) } else { unit(4, 4) };
        let (r, u) = violating_draw(&mut rng, s.m());
        let table = maximality_counterexample(&s, &r, &u).map_err(|e| e.to_string())?;
        let verdict = verify_psp(&table, &s, &r, &CheckOptions::default()).unwrap();
        ensure!(verdict.holds, "draw {k}: generated table is not {r}-PSP");
        let t = u.induced_order().unwrap();
        let (a, b) = violating_pair(&u, &r).unwrap();
        let lie = t.swapped(t.rank_of(a));
        ensure!(lie.rank_of(b) + 1 == t.rank_of(b), "draw {k}: pair not adjacent");
        let profile = Profile::new(&s, vec![t.clone(); s.n()]).unwrap();
        let x = table.allocate(&s, &profile).unwrap();
        let y = table.allocate(&s, &profile.with_report(0, lie)).unwrap();
        let gain = dot(u.values(), y.row(0)) - dot(u.values(), x.row(0));
        ensure!(gain.is_positive(), "draw {k}: gain {gain}");
    }
    Ok(())
}

fn urbi_share_estimate() -> Outcome {
    // Ordered pairs from the unit square with second <= r * first cover a
    // fraction r of the triangle.
    let est = urbi_share(0.4, 100_000, 11).unwrap();
    ensure!((est.estimate - 0.4).abs() <= 0.02, "share {}", est.estimate);
    ensure!(urbi_share(1.0, 100_000, 11).unwrap().estimate == 1.0, "share at 1 is not 1");
    Ok(())
}

fn choose(n: u128, k: u128) -> u128 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn symmetry_counts() -> Outcome {
    let everything = Capabilities {
        anonymous: true,
        neutral: true,
        keyed: None,
    };
    for m in 1..=4usize {
        let types: u128 = (1..=m as u128).product();
        for n in 1..=4usize {
            let s = unit(n, m);
            if s.has_dummy() {
                continue;
            }
            let (mut classes, mut total) = (0u128, 0u128);
            for c in profiles(&s, Symmetry::Anonymous, everything, &Caps::default()).unwrap() {
                classes += 1;
                total += c.multiplicity as u128;
            }
            ensure!(total == types.pow(n as u32), "{n}x{m}: multiplicities sum to {total}");
            ensure!(classes == choose(types + n as u128 - 1, n as u128), "{n}x{m}: {classes} classes");
        }
    }
    Ok(())
}

fn appendix_fixtures() -> Outcome {
    let text = include_str!("fixtures/three_report_fragment.json");
    let table = TableMechanism::from_json(text).map_err(|e| e.to_string())?;
    let s = table.setting().clone();
    let weak = check_weak_sp(&table, &s, &CheckOptions::default()).unwrap();
    ensure!(weak.holds, "fragment is not weakly strategyproof");
    ensure!(!weak.coverage.is_full() && weak.coverage.evaluated > 0, "coverage {:?}", weak.coverage);
    let f = |t: &str| table.allocate(&s, &Profile::parse(&s, &[t]).unwrap()).unwrap().row(0).to_vec();
    let mixed: Vec<Rational> = f("a>c>b").iter().zip(f("b>a>c")).map(|(x, y)| (x + y) / int(2)).collect();
    ensure!(mixed == row(&[(7, 18), (7, 18), (2, 9)]), "mixture {:?}", mixed);
    ensure!(
        fosd_compare(&mixed, &f("a>b>c"), &order(&s, "a>b>c")) == Dominance::DominatesStrictly,
        "mixture does not dominate"
    );

    let cases: [(usize, [&str; 5], &str, [&str; 5], [&str; 5]); 2] = [
        (
            4,
            ["a>d>c>b", "a>b>d>c", "b>c>d>a", "c>a>b>d", ""],
            "a>c>b>d",
            ["d", "a", "b", "c", ""],
            ["a", "d", "b", "c", ""],
        ),
        (
            5,
            ["a>c>b>d>e", "c>b>a>d>e", "c>a>b>e>d", "a>c>b>e>d", "e>a>b>c>d"],
            "b>a>c>d>e",
            ["d", "b", "c", "a", "e"],
            ["b", "d", "c", "a", "e"],
        ),
    ];
    for (n, reports, lie, before, after) in cases {
        let s = unit(n, n);
        let p = Profile::parse(&s, &reports[..n]).unwrap();
        for (profile, expect) in [(p.clone(), before), (p.with_report(0, order(&s, lie)), after)] {
            let o = rank_min(&s, &profile).unwrap();
            let got: Vec<&str> = o.assignment.iter().map(|&j| s.label(j)).collect();
            ensure!(got == expect[..n], "{n} agents: assignment {got:?}");
            ensure!(o.unique, "{n} agents: optimum not unique");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("PS rows are exact", ps_exactness),
        ("NBM rows are exact and break swap monotonicity and lower invariance", nbm_exactness),
        ("ABM on 4x4 has degree 1/3", abm_degree),
        ("classification matrix matches", table_one),
        ("strategyproofness equals the three axioms, globally and locally", characterization),
        ("r-PSP verdicts agree with sampled utilities", sampled_oracle),
        ("root computation lies in the bisection interval", two_algorithms),
        ("generated counterexamples are r-PSP yet manipulable", maximality),
        ("URBI share estimate", urbi_share_estimate),
        ("anonymous class counts", symmetry_counts),
        ("fragment table and rank-efficient fixtures", appendix_fixtures),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("PASS  criterion {:>2}: {name} ({secs:.2}s)", i + 1),
            Err(e) => {
                failed += 1;
                println!("FAIL  criterion {:>2}: {name} ({secs:.2}s): {e}", i + 1);
            }
        }
    }
    let _ = panic::take_hook();
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
