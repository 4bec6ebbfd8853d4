//! Acceptance run: one line per criterion, nonzero exit if any fails.

use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use compac::cli::{default_oracles, dense_left, jump_programs, staged_scenario, stump_cases, stump_vc_pool, ERM_BUDGET};
use compac::exact::{pow2_neg, rat, real_from_rational, GenericReal, Rational};
use compac::hypotheses::{
    behaviors_on, default_rationals, halting_presentation, oracle_halting_presentation,
    sauer_bound, some_subset_shattered, stump_presentation, trace_matrix,
};
use compac::learners::{alpha, erm_anytime, erm_behavior_count, erm_realizable, TotalErm};
use compac::machines::{enumerate_halting, jump_bit};
use compac::pac::{
    bad_sample_fn_demo, erm_sample_bound, extract_halting_prefix, extract_jump_bits, pac_validate,
    SampleFunction, StumpLearner, StumpSetting, VerdictRule,
};
use compac::spaces::{
    baire_space, cantor_space, check_metric_triple, check_point_description, discrete_naturals,
    discrete_space, finseq_space, product_space, real_line, IdealId, MetricSpace, PointDescription,
};
use compac::weihrauch::{
    check_monotone, compose, deinterleave, interleave, lim_transducer, lim_with_witness,
    parallel_outputs, parallelize, stage_builder, Transducer,
};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn index_pairs(rng: &mut ChaCha8Rng, n: usize) -> Vec<(u32, u32)> {
    (0..n)
        .map(|_| {
            let j = rng.random_range(1..=40);
            (rng.random_range(0..j), j)
        })
        .collect()
}

fn rapid_cauchy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pairs = index_pairs(&mut rng, 1000);
    let q = rat(-22, 7);
    for (name, s) in [
        ("real_from_rational", real_from_rational(q.clone())),
        ("generic_real", GenericReal::new(q.clone(), 9).stream()),
    ] {
        s.check_rapid_cauchy(&pairs).map_err(|p| format!("{name} at {p:?}"))?;
    }
    let baire = PointDescription::baire(|n| (n * 7 + 3) % 11);
    let cantor = PointDescription::cantor(|n| n % 3 == 1);
    let (prod, pc) = product_space(&baire_space(), &cantor_space());
    let (seq, sc) = finseq_space(&baire_space());
    let limit_seq: Vec<PointDescription> = (0..8).map(|_| PointDescription::constant(IdealId::new(5))).collect();
    let limit = lim_with_witness(&discrete_naturals(), &limit_seq, |_| 0, 8, 8).map_err(|e| e.to_string())?;
    let checks: Vec<(&str, MetricSpace, PointDescription)> = vec![
        ("constant", discrete_naturals(), PointDescription::constant(IdealId::new(3))),
        ("baire", baire_space(), baire.clone()),
        ("cantor", cantor_space(), cantor.clone()),
        ("product", prod, PointDescription::product(pc, baire.clone(), cantor)),
        ("finseq", seq, PointDescription::finseq(sc, vec![baire.clone(), baire])),
        ("lim", discrete_naturals(), limit),
    ];
    for (name, space, p) in &checks {
        check_point_description(space, p, &pairs).map_err(|e| format!("{name} at {e:?}"))?;
    }
    Ok(format!("{} constructors x 1000 pairs", checks.len() + 2))
}

fn metric_axioms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let reals = real_line((0..200).map(|i| rat(i * 13 - 900, 17)).collect());
    let finite = discrete_space((0..50).map(|i| i * i).collect()).unwrap();
    let spaces: Vec<MetricSpace> = vec![
        discrete_naturals(),
        finite.clone(),
        baire_space(),
        cantor_space(),
        reals.clone(),
        product_space(&baire_space(), &cantor_space()).0,
        product_space(&reals, &finite).0,
        product_space(&discrete_naturals(), &reals).0,
        finseq_space(&discrete_naturals()).0,
        finseq_space(&reals).0,
    ];
    for space in &spaces {
        for _ in 0..1000 {
            let mut id = || {
                let raw = BigUint::from(rng.random_range(0u64..1 << 20));
                IdealId(match space.ideal_count() {
                    Some(n) => raw % n,
                    None => raw,
                })
            };
            let (a, b, c) = (id(), id(), id());
            check_metric_triple(space, &a, &b, &c, 96)
                .map_err(|e| format!("{}: {e:?} on ({a:?}, {b:?}, {c:?})", space.label()))?;
        }
    }
    Ok(format!("{} constructors x 1000 triples", spaces.len()))
}

fn stump_vc() -> Outcome {
    let h = stump_presentation(default_rationals(4096)).map_err(|e| e.to_string())?;
    let pool: Vec<_> = stump_vc_pool(64).iter().map(GenericReal::stream).collect();
    let rows = trace_matrix(&h, &pool, 4096, 64).map_err(|e| e.to_string())?;
    let single = some_subset_shattered(&rows, 64, 1);
    let pair = some_subset_shattered(&rows, 64, 2);
    ensure(single && !pair, format!("singleton {single}, pair {pair}"))?;
    Ok("VC lower bound 1 on 64 generic features".into())
}

fn halting_vc() -> Outcome {
    let en = enumerate_halting(256, 10_000);
    let h = halting_presentation(&en);
    let pool: Vec<u64> = (0..64).collect();
    let rows = trace_matrix(&h, &pool, en.len() as u64, 1).map_err(|e| e.to_string())?;
    ensure(!some_subset_shattered(&rows, 64, 2), "a pair is shattered")?;
    Ok(format!("no shattered pair among 64 programs ({} halting ideals)", en.len()))
}

fn erm_equivalence() -> Outcome {
    let cutoffs = default_rationals(ERM_BUDGET as usize);
    let h = stump_presentation(cutoffs.clone()).map_err(|e| e.to_string())?;
    let cases = stump_cases(200, 64, 5, true, &cutoffs);
    let mut max_stage = 0;
    for (i, case) in cases.iter().enumerate() {
        let sample = case.sample();
        let (brute, errs) = case.brute_force(&cutoffs);
        ensure(errs == 0, format!("sample {i} not realizable"))?;
        let out = erm_realizable(&h, &sample, ERM_BUDGET, 64).map_err(|e| e.to_string())?;
        ensure(out.ideal == brute, format!("sample {i}: erm {} vs brute {brute}", out.ideal))?;
        let staged = erm_anytime(&h, &sample, 160, 64).map_err(|e| e.to_string())?;
        let at = staged.stabilized_at.ok_or(format!("sample {i}: no stabilization"))?;
        ensure(staged.last() == Some(brute), format!("sample {i}: anytime {:?} vs {brute}", staged.last()))?;
        max_stage = max_stage.max(at);
    }
    Ok(format!("200 samples, latest stabilization at stage {}", max_stage + 1))
}

fn behavior_count() -> Outcome {
    let cutoffs = default_rationals(ERM_BUDGET as usize);
    let h = stump_presentation(cutoffs.clone()).map_err(|e| e.to_string())?;
    for (i, case) in stump_cases(200, 64, 6, false, &cutoffs).iter().enumerate() {
        let want = case.distinct_points() + 1;
        let out = erm_behavior_count(&h, &case.sample(), |_| want, ERM_BUDGET, 64).map_err(|e| e.to_string())?;
        let (brute, _) = case.brute_force(&cutoffs);
        ensure(out.ideal == brute, format!("sample {i}: {} vs {brute}", out.ideal))?;
    }
    for u in 0..=12u64 {
        let xs: Vec<_> = (0..u as i64).map(|j| GenericReal::new(rat(3 * j - 7, 16), 12).stream()).collect();
        let n = behaviors_on(&h, &xs, ERM_BUDGET, 64).map_err(|e| e.to_string())?.len() as u128;
        ensure(n == sauer_bound(1, u), format!("|U| = {u}: {n} behaviors"))?;
    }
    Ok("200 agnostic samples; |behaviors| = |U| + 1 for |U| <= 12".into())
}

fn coarsening() -> Outcome {
    let third = rat(1, 3);
    for k in 1..=20 {
        let a = alpha(&third, k);
        ensure(a <= &third - pow2_neg(k + 2), format!("k = {k}: alpha = {a}"))?;
    }
    Ok("k = 1..=20".into())
}

fn sample_bound() -> Outcome {
    let pinned = erm_sample_bound(1, &rat(1, 10), &rat(1, 10)).map_err(|e| e.to_string())?;
    ensure(pinned == 103_346, format!("m(1, 1/10, 1/10) = {pinned}"))?;
    let grid = [rat(1, 20), rat(1, 10), rat(1, 5), rat(2, 5)];
    let m = |d: u64, e: &Rational, dl: &Rational| erm_sample_bound(d, e, dl).map_err(|e| e.to_string());
    for d in [1u64, 2, 5] {
        for (i, e) in grid.iter().enumerate() {
            for (j, dl) in grid.iter().enumerate() {
                let v = m(d, e, dl)?;
                if i + 1 < grid.len() {
                    ensure(v >= m(d, &grid[i + 1], dl)?, format!("epsilon step at d={d} ({e}, {dl})"))?;
                }
                if j + 1 < grid.len() {
                    ensure(v >= m(d, e, &grid[j + 1])?, format!("delta step at d={d} ({e}, {dl})"))?;
                }
                if d < 5 {
                    ensure(m(5, e, dl)? >= v, format!("d step at ({e}, {dl})"))?;
                }
            }
        }
    }
    Ok(format!("m = {pinned}; monotone on 4x4x3 grid"))
}

fn pac_monte_carlo() -> Outcome {
    let setting = StumpSetting {
        distribution: dense_left(&rat(4, 1), rat(1, 3)).map_err(|e| e.to_string())?,
        learner: StumpLearner::AStep { enumeration: default_rationals(4096), cap: 64 },
        cap: 64,
    };
    let r = pac_validate(&setting, &rat(1, 10), &rat(1, 10), 1000, 500, 2024, VerdictRule::ThreeSigma);
    ensure(r.learner_errors == 0, format!("{} learner errors", r.learner_errors))?;
    ensure(r.verdict, format!("{} failures of 500", r.failures))?;
    Ok(format!("{} failures of 500 trials", r.failures))
}

fn halting_extraction() -> Outcome {
    let en = enumerate_halting(256, 10_000);
    let h = halting_presentation(&en);
    let learner = TotalErm { class: &h, ideal_budget: u64::MAX, cap: 1 };
    let m = SampleFunction::closed_form(1);
    let bits = extract_halting_prefix(&learner, &h, &m, 32, &rat(1, 2), &rat(1, 2)).map_err(|e| e.to_string())?;
    ensure(bits == en.table(32), "bits differ from the halting table")?;
    Ok(format!("32 bits, {} halting", bits.iter().filter(|&&b| b).count()))
}

fn bad_sample() -> Outcome {
    let en = Arc::new(enumerate_halting(256, 10_000));
    let r = bad_sample_fn_demo(16, &rat(1, 10), en.clone(), rat(4, 1), 7).map_err(|e| e.to_string())?;
    ensure(r.bits == en.table(16), "bits differ from the halting table")?;
    ensure(r.control_third_first == 0, format!("{} violations with 1/3 first", r.control_third_first))?;
    Ok(format!(
        "16 bits; coarsening violations over {} samples: 1/3 first {}, default order {}",
        r.control_samples, r.control_third_first, r.control_default
    ))
}

fn jump_extraction() -> Outcome {
    let programs = jump_programs(16);
    let h = oracle_halting_presentation(&programs, 256, 500);
    let learner = TotalErm { class: &h, ideal_budget: u64::MAX, cap: 64 };
    let m = SampleFunction::closed_form(1);
    for (i, z) in default_oracles().iter().enumerate() {
        let bits = extract_jump_bits(&learner, &h, &m, z, &programs, &rat(1, 2), &rat(1, 2)).map_err(|e| e.to_string())?;
        let want: Vec<bool> = programs.iter().map(|&e| jump_bit(z, e, 500)).collect();
        ensure(bits == want, format!("oracle {i}: {bits:?} vs {want:?}"))?;
    }
    Ok(format!("3 oracles x {} programs", programs.len()))
}

fn weihrauch_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let id = Transducer::identity();
    let sum = Transducer::new("sum", |p| p.iter().scan(0u64, |a, &v| { *a += v; Some(*a) }).collect());
    let thin = Transducer::new("thin", |p| p.iter().step_by(2).copied().collect());
    let family = [
        compose(&sum, &thin, &id),
        compose(&thin, &sum, &sum),
        parallelize(&sum),
        lim_transducer(|k| k as usize),
        stage_builder((0..50).collect()),
    ];
    for _ in 0..200 {
        let len = rng.random_range(0..60);
        let p: Vec<u64> = (0..len).map(|_| rng.random_range(0..20)).collect();
        ensure(compose(&id, &sum, &id).apply(&p) == sum.apply(&p), "identity composition")?;
        ensure(
            compose(&compose(&sum, &thin, &id), &sum, &id).apply(&p) == compose(&sum, &compose(&thin, &sum, &id), &id).apply(&p),
            "associativity",
        )?;
        for t in &family {
            ensure(check_monotone(t, &p, rng.random_range(0..=len)), format!("{} not monotone", t.label()))?;
        }
        let outs = parallel_outputs(&sum, &p);
        for (i, o) in outs.iter().enumerate() {
            ensure(o == &sum.apply(&deinterleave(&p, i as u64)), format!("coordinate {i}"))?;
        }
        ensure(parallelize(&sum).apply(&p) == interleave(&outs), "interleaving")?;
    }
    let cutoffs = default_rationals(ERM_BUDGET as usize);
    let h = stump_presentation(cutoffs.clone()).map_err(|e| e.to_string())?;
    for seed in 0..10 {
        let case = stump_cases(1, 16, 100 + seed, true, &cutoffs).remove(0);
        let sc = staged_scenario(&case, &h, 96).map_err(|e| e.to_string())?;
        ensure(sc.pass(), format!("staged scenario {seed}: {:?} / {:?}", sc.honest, sc.corrupted))?;
    }
    Ok("composition, monotonicity, parallel, 10 staged-ERM reductions with corrupted controls".into())
}

fn cli_reproducible() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_compac");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cases: &[(&[&str], &str)] = &[
        (&["vc"], "pool = 32"),
        (&["vc", "--class", "halting"], "pool = 64"),
        (&["erm", "--mode", "realizable"], "samples = 20\nseed = 4"),
        (&["erm", "--mode", "anytime"], "samples = 20\nseed = 4"),
        (&["erm", "--mode", "behavior"], "samples = 20\nseed = 4\nn = 8"),
        (&["stump"], ""),
        (&["pac-validate"], "m = 500\ntrials = 100\nseed = 9"),
        (&["halting-extract"], "n = 32"),
        (&["jump-extract"], "n = 16"),
        (&["bad-sample-fn"], "n = 16\nseed = 3"),
        (&["reduce-check"], "seed = 8"),
    ];
    for (i, (args, toml)) in cases.iter().enumerate() {
        let cfg = dir.path().join(format!("{i}.toml"));
        std::fs::write(&cfg, toml).map_err(|e| e.to_string())?;
        let mut reports = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("{i}-{run}.csv"));
            let status = Command::new(bin)
                .args(*args)
                .args(["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
                .status()
                .map_err(|e| e.to_string())?;
            ensure(status.code() == Some(0), format!("{args:?} exited {status}"))?;
            reports.push(std::fs::read(&out).map_err(|e| e.to_string())?);
        }
        ensure(reports[0] == reports[1], format!("{args:?} reports differ"))?;
    }
    Ok(format!("{} subcommand configs rerun byte-identically", cases.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 14] = [
        ("rapid Cauchy streams and point descriptions", rapid_cauchy),
        ("metric axioms", metric_axioms),
        ("stump VC dimension", stump_vc),
        ("halting-class VC dimension", halting_vc),
        ("realizable and anytime ERM", erm_equivalence),
        ("behavior-count ERM", behavior_count),
        ("coarsening inequality", coarsening),
        ("sample-bound formula", sample_bound),
        ("PAC Monte Carlo", pac_monte_carlo),
        ("halting extraction", halting_extraction),
        ("bad sample function", bad_sample),
        ("jump extraction", jump_extraction),
        ("Weihrauch suite", weihrauch_suite),
        ("CLI reproducibility", cli_reproducible),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("acceptance {:>2} PASS  {name}: {detail} [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("acceptance {:>2} FAIL  {name}: {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
