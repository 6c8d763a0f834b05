//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the test harness so
//! the lines always reach the console.

use std::time::{Duration, Instant};

use scg_core::dist::Distribution;
use scg_core::equilibria::mixed::{
    build_probability_tensor, enumerate_mixed_equilibria, tensor_nash_two_player,
    verify_equilibrium, MixedSettings, DEFAULT_TENSOR_CAP,
};
use scg_core::equilibria::pure::{
    best_response_set, find_pure_equilibria, DEFAULT_ENUMERATION_CAP,
};
use scg_core::network::{enumerate_assignments, MixedProfile};
use scg_core::nonatomic::nonatomic_poa;
use scg_core::optim::bisect_predicate;
use scg_core::path_eval::{Criterion, Evaluator};
use scg_core::scenario::{builtin, Scenario, BUILTINS};
use scg_core::social::{optimal_assignment, SocialReport};

const CAP: usize = DEFAULT_ENUMERATION_CAP;

type Outcome = Result<String, String>;

type Check = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn near(what: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    ensure((got - want).abs() <= tol, || {
        format!("{what}: got {got:.6}, want {want} ± {tol}")
    })
}

fn sized(name: &str, n: usize) -> Scenario {
    builtin(name).unwrap().with_players(n).unwrap()
}

fn evaluator(sc: &Scenario) -> Evaluator<'_> {
    Evaluator::new(&sc.game, sc.solver.eval())
}

fn err(e: scg_core::Error) -> String {
    format!("{} ({})", e, e.code())
}

fn within(budget: Duration, start: Instant) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < budget, || format!("took {t:.1?}, budget {budget:?}"))
}

fn c1_pigou_probability() -> Outcome {
    let start = Instant::now();
    let sc = builtin("pigou").unwrap();
    let ev = evaluator(&sc);
    // top link fully loaded, bottom link constant
    let v = ev.values_at(Criterion::Rae, 0, &[1.0, 0.0]).map_err(err)?;
    near("P(bottom <= top)", v.values[1], 0.6, 0.005)?;
    within(Duration::from_secs(5), start)?;
    Ok(format!(
        "{:.4} ± {:.4} in {:.2?}",
        v.values[1],
        v.stderr[1],
        start.elapsed()
    ))
}

fn c2_braess_probabilities() -> Outcome {
    let sc = builtin("braess").unwrap();
    let ev = evaluator(&sc);
    // everyone on the middle route: both congestible links full
    let v = ev
        .values_at(Criterion::Rae, 0, &[1.0, 0.0, 0.0, 1.0, 1.0])
        .map_err(err)?;
    near("P(path 1 shortest)", v.values[0], 0.375, 0.005)?;
    near("P(path 2 shortest)", v.values[1], 0.25, 0.005)?;
    Ok(format!(
        "{:.4}, {:.4}, {:.4}",
        v.values[0], v.values[1], v.values[2]
    ))
}

fn c3_nash_pure() -> Outcome {
    for n in 1..=50 {
        for (name, corner, delay) in [("pigou", vec![n, 0], 1.0), ("braess", vec![0, n, 0], 2.0)] {
            let sc = sized(name, n);
            let ev = evaluator(&sc);
            let eqs = find_pure_equilibria(&ev, Criterion::Nash, CAP).map_err(err)?;
            let e = eqs
                .iter()
                .find(|e| e.assignment.counts[0] == corner)
                .ok_or_else(|| format!("{name} n={n}: {corner:?} not found"))?;
            near(&format!("{name} n={n} delay"), e.social_delay, delay, 1e-9)?;
            let worst = eqs.iter().map(|e| e.social_delay).fold(0.0, f64::max);
            near(&format!("{name} n={n} worst delay"), worst, delay, 1e-9)?;
        }
    }
    Ok("(n,0) and (0,n,0) for n = 1..50, delays 1 and 2".into())
}

fn c4_social_optima() -> Outcome {
    for n in 1..=50 {
        let odd = (n % 2) as f64;
        let nf = n as f64;
        let sc = sized("pigou", n);
        let opt = optimal_assignment(&evaluator(&sc), CAP).map_err(err)?;
        near(
            &format!("pigou D(o) n={n}"),
            opt.delay,
            0.75 + odd / (4.0 * nf * nf),
            1e-9,
        )?;
        for a in &opt.assignments {
            let m = a.counts[0][0];
            ensure(m == n / 2 || m == n.div_ceil(2), || {
                format!("pigou n={n}: optimum {m}")
            })?;
        }
        let sc = sized("braess", n);
        let opt = optimal_assignment(&evaluator(&sc), CAP).map_err(err)?;
        near(
            &format!("braess D(o) n={n}"),
            opt.delay,
            1.5 + odd / (2.0 * nf * nf),
            1e-9,
        )?;
        ensure(
            opt.assignments.iter().any(|a| {
                let c = &a.counts[0];
                c[1] == 0 && c[0].abs_diff(c[2]) <= 1
            }),
            || format!("braess n={n}: no (n/2, 0, n/2) optimum"),
        )?;
    }
    Ok("closed forms hold for n = 1..50".into())
}

struct Target {
    criterion: Criterion,
    fractions: Vec<f64>,
    poa: f64,
}

fn nonatomic_check(name: &str, targets: &[Target], budget: Duration) -> Outcome {
    let start = Instant::now();
    let sc = builtin(name).unwrap();
    let ev = evaluator(&sc);
    let mut shown = Vec::new();
    for t in targets {
        let r = nonatomic_poa(
            &ev,
            t.criterion,
            sc.symmetry.as_deref(),
            &sc.solver.nonatomic,
        )
        .map_err(err)?;
        let worst = r
            .equilibria
            .iter()
            .max_by(|a, b| a.social_delay.total_cmp(&b.social_delay))
            .unwrap();
        for (p, (&got, &want)) in worst.fractions.iter().zip(&t.fractions).enumerate() {
            near(&format!("{} fraction {p}", t.criterion), got, want, 0.005)?;
        }
        near(&format!("{} PoA", t.criterion), r.poa, t.poa, 0.005)?;
        let fr: Vec<String> = worst.fractions.iter().map(|x| format!("{x:.4}")).collect();
        shown.push(format!(
            "{} ({}) PoA {:.4}",
            t.criterion.name(),
            fr.join(", "),
            r.poa
        ));
    }
    within(budget, start)?;
    Ok(format!("{} in {:.1?}", shown.join("; "), start.elapsed()))
}

fn c5_nonatomic_pigou() -> Outcome {
    let t = |criterion, a: f64, poa| Target {
        criterion,
        fractions: vec![a, 1.0 - a],
        poa,
    };
    nonatomic_check(
        "pigou",
        &[
            t(Criterion::Rae, 0.7303, 1.0707),
            t(Criterion::MeanVariance { rho: 1.0 }, 0.7750, 1.1008),
            t(Criterion::Cvar { alpha: 0.1 }, 0.6822, 1.0442),
            t(Criterion::Nash, 1.0, 4.0 / 3.0),
        ],
        Duration::from_secs(60),
    )
}

fn c6_nonatomic_braess() -> Outcome {
    let t = |criterion, a: f64, b: f64, poa| Target {
        criterion,
        fractions: vec![a, b, a],
        poa,
    };
    nonatomic_check(
        "braess",
        &[
            t(Criterion::Rae, 0.2655, 0.4690, 1.0733),
            t(Criterion::MeanVariance { rho: 1.0 }, 0.1716, 0.6568, 1.1438),
            t(Criterion::Cvar { alpha: 0.1 }, 0.3045, 0.3910, 1.0509),
            t(Criterion::Nash, 0.0, 1.0, 4.0 / 3.0),
        ],
        Duration::from_secs(120),
    )
}

fn c7_two_player_mixed() -> Outcome {
    let sc = sized("pigou", 2);
    let ev = evaluator(&sc);
    let opt = optimal_assignment(&ev, CAP).map_err(err)?;
    let mut shown = Vec::new();
    for (c, pure_poa, all_poa) in [
        (Criterion::Rae, 1.0, Some(1.2405)),
        (Criterion::MeanVariance { rho: 1.0 }, 1.0, Some(1.1689)),
        (Criterion::Cvar { alpha: 0.1 }, 1.0, Some(1.2897)),
        (Criterion::Nash, 4.0 / 3.0, None),
    ] {
        let eqs = enumerate_mixed_equilibria(&ev, c, &MixedSettings::default()).map_err(err)?;
        let (pure, mixed): (Vec<_>, Vec<_>) = eqs.iter().partition(|e| e.is_pure());
        let r = SocialReport::new(
            opt.clone(),
            pure.iter().map(|e| e.social_delay).collect(),
            mixed.iter().map(|e| e.social_delay).collect(),
        );
        let pp = r
            .poa_pure
            .ok_or_else(|| format!("{c}: no pure equilibrium"))?;
        let pa = r.poa_all.unwrap();
        near(&format!("{c} pure PoA"), pp, pure_poa, 1e-9)?;
        if let Some(want) = all_poa {
            near(&format!("{c} pure+mixed PoA"), pa, want, 0.01)?;
        }
        shown.push(format!("{} {:.4}/{:.4}", c.name(), pp, pa));
    }
    Ok(format!("pure/all PoA: {}", shown.join(", ")))
}

/// Smallest parameter in `[lo, hi]` at which the lone player prefers the other link.
fn flip(name: &str, crit: impl Fn(f64) -> Criterion, lo: f64, hi: f64) -> Result<f64, String> {
    let sc = builtin(name).unwrap();
    let ev = evaluator(&sc);
    let choice = |x: f64| -> usize {
        let eqs = find_pure_equilibria(&ev, crit(x), CAP).unwrap();
        eqs[0].assignment.counts[0]
            .iter()
            .position(|&m| m == 1)
            .unwrap()
    };
    let before = choice(lo);
    ensure(choice(hi) != before, || {
        format!("{name}: no flip in [{lo}, {hi}]")
    })?;
    Ok(bisect_predicate(|x| choice(x) == before, lo, hi, 40))
}

fn c8_practitioner_examples() -> Outcome {
    let moments = |name: &str| {
        let sc = builtin(name).unwrap();
        let ev = evaluator(&sc);
        let m: Vec<(f64, f64)> = (0..2)
            .map(|p| ev.path_moments_at(0, p, &[1.0, 1.0]).unwrap())
            .collect();
        let v = ev.values_at(Criterion::Rae, 0, &[1.0, 1.0]).unwrap();
        (m, v.values)
    };
    let check = |name: &str,
                 means: [f64; 2],
                 vars: [f64; 2],
                 path: usize,
                 prob: f64|
     -> Result<(), String> {
        let (m, p) = moments(name);
        for i in 0..2 {
            near(&format!("{name} mean {i}"), m[i].0, means[i], 0.01)?;
            near(&format!("{name} variance {i}"), m[i].1, vars[i], 0.01)?;
        }
        near(
            &format!("{name} P(path {path} shortest)"),
            p[path],
            prob,
            0.005,
        )
    };
    let mv = |rho| Criterion::MeanVariance { rho };
    let cvar = |alpha| Criterion::Cvar { alpha };

    check("ex3", [16.5, 20.0], [6.255, 0.005], 0, 1.0)?;
    let f3 = flip("ex3", mv, 0.5, 5.0)?;
    near("ex3 MV flip", f3, 1.7857, 0.02)?;

    check("ex4", [6.0, 8.4], [4.005, 0.645], 0, 0.82)?;
    let f4 = flip("ex4", mv, 0.5, 5.0)?;
    near("ex4 MV flip", f4, 1.4, 0.02)?;
    let sc = builtin("ex4").unwrap();
    let ev = evaluator(&sc);
    for alpha in [0.001, 0.01, 0.05, 0.1, 0.15, 0.2] {
        let v = ev.values_at(cvar(alpha), 0, &[1.0, 1.0]).map_err(err)?;
        near(
            &format!("ex4 CVaR gap at {alpha}"),
            v.values[0] - v.values[1],
            0.0,
            1e-3,
        )?;
    }

    check("ex5", [7.0, 6.5], [0.005, 5.255], 1, 0.7)?;
    let f5c = flip("ex5", cvar, 0.5, 0.95)?;
    near("ex5 CVaR flip", f5c, 0.748, 0.005)?;
    let f5m = flip("ex5", mv, 5.0, 20.0)?;
    near("ex5 MV flip", f5m, 10.5, 0.1)?;
    Ok(format!(
        "moments and probabilities match; flips at rho {f3:.4}, {f4:.4}, {f5m:.3} and alpha {f5c:.4}"
    ))
}

fn criteria() -> [Criterion; 4] {
    [
        Criterion::Nash,
        Criterion::Rae,
        Criterion::MeanVariance { rho: 1.0 },
        Criterion::Cvar { alpha: 0.1 },
    ]
}

fn small(name: &str) -> Scenario {
    match name {
        "pigou" => sized(name, 4),
        "braess" => sized(name, 3),
        _ => builtin(name).unwrap(),
    }
}

fn c9_properties() -> Outcome {
    // link laws of every builtin at a few loads
    let mut laws: Vec<Distribution> = Vec::new();
    for name in BUILTINS {
        let sc = builtin(name).unwrap();
        for l in 0..sc.game.links().len() {
            for u in [0.1, 0.5, 1.0] {
                laws.push(sc.game.link_at_fraction(l, u).unwrap());
            }
        }
    }
    for d in laws
        .iter()
        .filter(|d| !matches!(d, Distribution::PointMass(_)))
    {
        near("normalization", d.cdf(d.support_hull().1), 1.0, 1e-9)?;
        for q in [0.05, 0.3, 0.5, 0.7, 0.95] {
            near("quantile inversion", d.cdf(d.quantile(q).unwrap()), q, 1e-6)?;
        }
        near(
            "CVaR_1",
            d.cvar_upper(1.0).unwrap(),
            d.mean(),
            1e-9 * d.mean().abs().max(1.0),
        )?;
        let cv: Vec<f64> = [0.05, 0.1, 0.3, 0.6, 1.0]
            .iter()
            .map(|&a| d.cvar_upper(a).unwrap())
            .collect();
        ensure(cv.windows(2).all(|w| w[0] >= w[1] - 1e-9), || {
            format!("CVaR not monotone: {cv:?}")
        })?;

        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n as f64;
        near(
            "sampled mean",
            mean,
            d.mean(),
            3.0 * (d.variance() / n as f64).sqrt(),
        )?;
        near(
            "sampled variance",
            var,
            d.variance(),
            3.0 * ((m4 - var * var) / n as f64).sqrt(),
        )?;
    }

    let braess = builtin("braess").unwrap();
    let ev = evaluator(&braess);
    for u in [
        [1.0, 0.0, 0.0, 1.0, 1.0],
        [0.3, 0.0, 0.7, 0.5, 0.2],
        [0.0; 5],
    ] {
        let v = ev.values_at(Criterion::Rae, 0, &u).map_err(err)?;
        let se: f64 = v.stderr.iter().map(|s| s * s).sum::<f64>().sqrt();
        near(
            "sum of shortest probabilities",
            v.values.iter().sum(),
            1.0,
            3.0 * se + 1e-12,
        )?;
        let path = ev.path_distribution_at(0, 1, &u).map_err(err)?;
        if let Distribution::Gridded(g) = path.as_ref() {
            near(
                "convolution mass",
                g.density().iter().sum::<f64>() * g.step(),
                1.0,
                1e-6,
            )?;
        }
    }

    let mut verified = 0;
    for name in BUILTINS {
        let sc = small(name);
        let ev = evaluator(&sc);
        let players: Vec<usize> = sc.game.pairs().iter().map(|p| p.players).collect();
        for c in criteria() {
            for e in find_pure_equilibria(&ev, c, CAP).map_err(err)? {
                let v = verify_equilibrium(
                    &ev,
                    c,
                    &MixedProfile::from_pure(&sc.game, &e.assignment.profile()),
                    0xF00D,
                )
                .map_err(err)?;
                ensure(v.passes(), || {
                    format!("{name} {c}: {:?} fails re-verification", e.assignment)
                })?;
                verified += 1;
            }
            for a in enumerate_assignments(&sc.game, &players) {
                for (k, cs) in a.counts.iter().enumerate() {
                    for (p, &m) in cs.iter().enumerate() {
                        if m > 0 {
                            let br = best_response_set(&ev, c, &a, k, Some(p)).map_err(err)?;
                            ensure(!br.is_empty(), || {
                                format!("{name} {c}: empty best response")
                            })?;
                        }
                    }
                }
            }
        }
    }
    let pigou2 = sized("pigou", 2);
    let ev = evaluator(&pigou2);
    for c in criteria() {
        for e in enumerate_mixed_equilibria(&ev, c, &MixedSettings::default()).map_err(err)? {
            let v = verify_equilibrium(&ev, c, &e.profile, 0xF00D).map_err(err)?;
            ensure(v.passes(), || {
                format!("pigou mixed {c}: {:?} fails re-verification", e.profile)
            })?;
            verified += 1;
        }
    }
    let ours =
        enumerate_mixed_equilibria(&ev, Criterion::Rae, &MixedSettings::default()).map_err(err)?;
    let tensor = build_probability_tensor(&ev, DEFAULT_TENSOR_CAP).map_err(err)?;
    let theirs = tensor_nash_two_player(&tensor).map_err(err)?;
    ensure(ours.len() == theirs.len(), || {
        format!("{} vs {} equilibria", ours.len(), theirs.len())
    })?;
    for t in &theirs {
        let matched = ours.iter().any(|e| {
            e.profile
                .probs
                .iter()
                .flatten()
                .zip(t.probs.iter().flatten())
                .all(|(a, b)| (a - b).abs() <= 1e-3)
        });
        ensure(matched, || format!("tensor equilibrium {t:?} unmatched"))?;
    }
    Ok(format!(
        "{} laws checked, {verified} equilibria re-verified",
        laws.len()
    ))
}

fn c10_convergence() -> Outcome {
    let sc = builtin("pigou").unwrap();
    let mut shown = Vec::new();
    for n in [20, 30, 50] {
        let s = sc.with_players(n).unwrap();
        let eqs = find_pure_equilibria(&evaluator(&s), Criterion::Rae, CAP).map_err(err)?;
        ensure(!eqs.is_empty(), || format!("n={n}: no equilibrium"))?;
        for e in &eqs {
            let f = e.assignment.counts[0][0] as f64 / n as f64;
            near(&format!("n={n} fraction"), f, 0.7303, 2.0 / n as f64)?;
            shown.push(format!("{n}: {f:.3}"));
        }
    }
    Ok(shown.join(", "))
}

fn main() {
    let checks: [Check; 10] = [
        ("pigou probability anchor", c1_pigou_probability),
        ("braess probability anchors", c2_braess_probabilities),
        ("nash pure equilibria", c3_nash_pure),
        ("social optima", c4_social_optima),
        ("non-atomic pigou", c5_nonatomic_pigou),
        ("non-atomic braess", c6_nonatomic_braess),
        ("two-player pigou mixed", c7_two_player_mixed),
        ("practitioner examples", c8_practitioner_examples),
        ("property suite", c9_properties),
        ("atomic to non-atomic convergence", c10_convergence),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in checks.iter().enumerate() {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(why) => {
                println!("criterion {}: FAIL  {name}: {why}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
