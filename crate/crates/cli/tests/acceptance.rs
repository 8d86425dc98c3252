//! Acceptance criteria 1-15, one line each. Exits non-zero if any fails.

use std::process::Command;
use std::time::{Duration, Instant};

use continuant_lab::cf::{cf_expand, matrix_to_fraction, word_to_matrix, Alphabet, CfWord, Fraction};
use continuant_lab::dimension::dimension;
use continuant_lab::enumerate::{hensley_exponent, multiplicity_table, sumset_check, Counting};
use continuant_lab::expsum::{default_dft_len, representation_numbers, ExpSumSource};
use continuant_lab::modular::{closure_mod_q, nu_q_exact, singular_series};
use continuant_lab::products::{
    build_omega, calibrate_constants, comparability_chains_hold, default_target, mult_defect,
    random_even_word, sample_omega, CALIBRATED_C,
};
use continuant_lab::qmc::{star_discrepancy, zaremba_bound, zn_points};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

#[allow(clippy::excessive_precision)]
const DELTA_2: f64 = 0.531_280_506_277_205_141_624_468_6;
const DELTA_13: f64 = 0.454_489_077_661_8;
const SEED: u64 = 20_240_101;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn alpha(v: &[u32]) -> Alphabet {
    Alphabet::new(v.to_vec()).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let t = start.elapsed();
    if t < limit {
        Ok(t)
    } else {
        Err(format!("took {t:.1?}, limit {limit:?}"))
    }
}

fn cli(args: &[&str]) -> Result<Value, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_continuant-lab"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "exit {:?}: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())
}

fn c01() -> Outcome {
    let start = Instant::now();
    let v = cli(&["dimension", "--alphabet", "1,2", "--threads", "1"])?;
    let t = within(Duration::from_secs(10), start)?;
    let delta = v["delta"].as_f64().ok_or("no delta")?;
    let err = (delta - DELTA_2).abs();
    check(
        err <= 1e-10,
        format!("delta = {delta:.16}, |error| = {err:.1e}, {t:.2?}"),
    )
}

fn c02() -> Outcome {
    let d = dimension(&alpha(&[1, 3]), 1e-12, 64)
        .map_err(|e| e.to_string())?
        .delta;
    let err = (d - DELTA_13).abs();
    check(err <= 1e-9, format!("delta = {d:.13}, |error| = {err:.1e}"))
}

fn c03() -> Outcome {
    let a = alpha(&[2, 4, 6, 8, 10]);
    let d = dimension(&a, 1e-12, 64).map_err(|e| e.to_string())?.delta;
    let cl = closure_mod_q(&a, 4).map_err(|e| e.to_string())?;
    let sub = cl.attainable_d.iter().all(|r| [0, 1, 2].contains(r));
    check(
        (d - 0.517).abs() <= 5e-4 && sub,
        format!("delta = {d:.6}, attainable d mod 4 = {:?}", cl.attainable_d),
    )
}

fn c04() -> Outcome {
    let d = dimension(&Alphabet::range(5).unwrap(), 1e-12, 64)
        .map_err(|e| e.to_string())?
        .delta;
    check((d - 0.83).abs() <= 1e-2, format!("delta_5 = {d:.6}"))
}

fn c05() -> Outcome {
    let start = Instant::now();
    let v = cli(&[
        "exceptions",
        "--alphabet",
        "1,2,3,4",
        "--N",
        "1000",
        "--format",
        "json",
    ])?;
    let t = within(Duration::from_secs(60), start)?;
    let found: Vec<u64> = v["rows"]
        .as_array()
        .ok_or("no rows")?
        .iter()
        .filter_map(|r| r["d"].as_u64())
        .collect();
    check(
        found == [6, 54, 150],
        format!("exceptions below 1000 = {found:?}, {t:.2?}"),
    )
}

fn c06() -> Outcome {
    // the alphabet {1} needs the expansion ending in 1
    let t = multiplicity_table(&alpha(&[1]), 100, Counting::Either);
    let support: Vec<u64> = t.support();
    let ones = t.iter().all(|(_, c)| c == 1);
    check(
        support == [2, 3, 5, 8, 13, 21, 34, 55, 89] && ones,
        format!("denominators = {support:?}, all multiplicity 1: {ones}"),
    )
}

fn c07() -> Outcome {
    let cases: [(u64, &[u32]); 2] = [
        (3523, &[1, 3, 2, 3, 1, 2, 3, 2, 1, 3]),
        (3535, &[1, 3, 2, 35, 1, 1, 1, 4]),
    ];
    let mut ok = true;
    let mut words = Vec::new();
    for (b, want) in cases {
        let f = Fraction::new(b, 4547).map_err(|e| e.to_string())?;
        let w = cf_expand(f).map_err(|e| e.to_string())?;
        let back = matrix_to_fraction(&word_to_matrix(&w)).map_err(|e| e.to_string())?;
        ok &= w.quotients() == want && back == f && w == CfWord::new(want.to_vec()).unwrap();
        words.push(format!("{b}/4547 = {:?}", w.quotients()));
    }
    check(ok, words.join(", "))
}

fn c08() -> Outcome {
    let start = Instant::now();
    let good = star_discrepancy(&zn_points(3523, 4547, false).unwrap()).map_err(|e| e.to_string())?;
    let bad = star_discrepancy(&zn_points(3535, 4547, false).unwrap()).map_err(|e| e.to_string())?;
    let t = within(Duration::from_secs(120), start)?;
    let bound = zaremba_bound(3, 4547).unwrap();
    check(
        good <= bound && good < bad,
        format!("D*(3523) = {good:.6} <= bound {bound:.6}, D*(3535) = {bad:.6}, {t:.2?}"),
    )
}

fn c09() -> Outcome {
    let bounds: Vec<u64> = (10..=20).map(|e| 1u64 << e).collect();
    let slope = hensley_exponent(&alpha(&[1, 2]), Counting::Canonical, &bounds).map_err(|e| e.to_string())?;
    let gap = (slope - 2.0 * DELTA_2).abs();
    check(
        gap <= 0.05,
        format!(
            "slope = {slope:.4}, 2 delta_2 = {:.4}, gap = {gap:.4}",
            2.0 * DELTA_2
        ),
    )
}

fn c10() -> Outcome {
    let r = sumset_check(&alpha(&[1, 2]), Counting::Canonical, 500);
    check(
        r.counterexamples.is_empty() && r.enlarged_bound == 1500,
        format!(
            "{} fractions, {} counterexamples in D_2({})",
            r.fractions_checked,
            r.counterexamples.len(),
            r.enlarged_bound
        ),
    )
}

fn c11() -> Outcome {
    let mut bad = Vec::new();
    let alphabets = [vec![1, 2], vec![1, 2, 3], vec![1, 2, 5], vec![1, 2, 3, 4, 5]];
    for a in &alphabets {
        for q in 2..=30 {
            let cl = closure_mod_q(&alpha(a), q).map_err(|e| e.to_string())?;
            if !cl.is_full() {
                bad.push((a.clone(), q));
            }
        }
    }
    check(
        bad.is_empty(),
        format!("{} alphabets x q = 2..30, not full: {bad:?}", alphabets.len()),
    )
}

fn c12() -> Outcome {
    let a = alpha(&[1, 2]);
    let ens = build_omega(&a, 1e6, default_target(&a)).map_err(|e| e.to_string())?;
    let (c, _) = sample_omega(&ens, 500, SEED).map_err(|e| e.to_string())?;
    check(
        c.samples == 500 && c.eigenvalue_ok && c.norm_ok,
        format!(
            "J = {}, lambda / prod N_j in [{:.3}, {:.3}], norm chain {}",
            c.j, c.min_ratio, c.max_ratio, c.norm_ok
        ),
    )
}

fn c13() -> Outcome {
    let src = ExpSumSource::from_orbit(&alpha(&[1, 2]), 2000, Counting::Canonical);
    let r = representation_numbers(&src, default_dft_len(&src)).map_err(|e| e.to_string())?;
    let exact = r.agree && r.direct == r.inverted;
    let perr = r.parseval_relative_error();
    check(
        exact && perr <= 1e-9,
        format!(
            "DFT length {}, exact agreement {exact}, Parseval relative error {perr:.1e}",
            r.dft_len
        ),
    )
}

fn c14() -> Outcome {
    let s = singular_series(1, 10_000).map_err(|e| e.to_string())?;
    let err = (s - std::f64::consts::PI.powi(2) / 6.0).abs();
    let nu = nu_q_exact(2, 1).map_err(|e| e.to_string())?;
    check(
        err < 1e-3 && nu == Some(Ratio::new(-1, 3)),
        format!("|S(1) - pi^2/6| = {err:.1e}, nu_2(1) = {nu:?}"),
    )
}

/// Even words of every length up to `max_len` over `letters`.
fn exhaustive_even(letters: &[u32], max_len: usize) -> Vec<CfWord> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<u32>> = vec![vec![]];
    for len in 1..=max_len {
        layer = layer
            .iter()
            .flat_map(|w| letters.iter().map(move |&a| [w.as_slice(), &[a]].concat()))
            .collect();
        if len % 2 == 0 {
            out.extend(layer.iter().map(|w| CfWord::new(w.clone()).unwrap()));
        }
    }
    out
}

fn c15() -> Outcome {
    let a = alpha(&[1, 2]);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut failures = Vec::new();
    for _ in 0..1000 {
        let u = random_even_word(&a, 2, 30, &mut rng);
        let v = random_even_word(&a, 2, 30, &mut rng);
        if word_to_matrix(&u.concat(&v)) != &word_to_matrix(&u) * &word_to_matrix(&v) {
            failures.push("homomorphism");
        }
        if !word_to_matrix(&u).satisfies_entry_order() {
            failures.push("entry order");
        }
        let k = rng.gen_range(1..4);
        let g = word_to_matrix(&random_even_word(&a, 2, 8, &mut rng));
        let (defect, budget) = mult_defect(&g.pow(k), &g).map_err(|e| e.to_string())?;
        if defect > CALIBRATED_C * budget.max(f64::EPSILON) {
            failures.push("power defect");
        }
    }
    let words = exhaustive_even(&[1, 2], 12);
    for w in &words {
        let e = word_to_matrix(w).entries_i64().ok_or("overflow")?;
        if !comparability_chains_hold(&e.map(|x| x as u64)) {
            failures.push("norm/trace chains");
        }
    }
    let cal = calibrate_constants(&a, 1000, (20, 40), SEED).map_err(|e| e.to_string())?;
    let worst = cal
        .max_defect_ratio
        .max(cal.max_drift_plus_ratio)
        .max(cal.max_drift_minus_ratio);
    if worst > CALIBRATED_C {
        failures.push("calibrated defect");
    }
    check(
        failures.is_empty(),
        format!(
            "1000 random pairs, {} exhaustive words, worst defect/budget {worst:.3} <= C = {CALIBRATED_C}; failures {failures:?}",
            words.len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 15] = [
        ("dimension {1,2} to 1e-10 in < 10 s", c01),
        ("dimension {1,3} to 1e-9", c02),
        ("{2,4,6,8,10}: dimension 0.517 and d mod 4 in {0,1,2}", c03),
        ("dimension {1..5} = 0.83 +- 0.01", c04),
        ("A = 4 exceptions below 1000 are {6,54,150} in < 60 s", c05),
        ("A = 1 gives Fibonacci denominators", c06),
        ("expansions of 3523/4547 and 3535/4547", c07),
        ("discrepancy bound and contrast in < 120 s", c08),
        ("Hensley slope over 2^10..2^20", c09),
        ("sum-set check at N = 500", c10),
        ("closures full for q <= 30", c11),
        ("ensemble invariants at N = 1e6", c12),
        ("exponential sum duality at N = 2000", c13),
        ("singular series and nu_2(1)", c14),
        ("property suites under a fixed seed", c15),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let t = start.elapsed();
        match res {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{t:.2?}]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{t:.2?}]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
