use std::path::{Path, PathBuf};
use std::time::Instant;

use continuant_lab::cf::{cf_expand, even_normalize, matrix_to_fraction, spectral, word_to_matrix};
use continuant_lab::dimension::{dimension, DimensionResult};
use continuant_lab::enumerate::{
    density_ratio, enumerate_orbit, exceptions_with, hensley_exponent, multiplicity_table, orbit_counts,
    orbit_pairs, sumset_check, Counting,
};
use continuant_lab::expsum::{
    arc_partition, arc_profiles, default_dft_len, representation_numbers, s_n, s_rational, ExpSumSource,
};
use continuant_lab::modular::{
    closure_mod_q, is_admissible, nu_q, nu_q_exact, primitive_root_witness, residue_profiles, singular_series,
};
use continuant_lab::products::{build_omega, default_target, omega_cardinality_report, sample_omega};
use continuant_lab::qmc::{
    multiplier_scan, schmidt_floor, star_discrepancy, star_discrepancy_sampled, zaremba_bound, zn_points,
    PointSet2D,
};
use continuant_lab::{io, Alphabet, Fraction};
use serde_json::{json, Value};

use crate::args::*;
use crate::emit::{Cache, Cell, Emitter, Table};
use crate::Failure;

pub fn run(cli: &Cli, em: &Emitter) -> Result<(), Failure> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Cf(c) => cf(c, out, em),
        Command::Enumerate(c) => enumerate(c, out, em),
        Command::Exceptions(a) => {
            let o = &a.orbit;
            let ex = exceptions_with(&o.alphabet.alphabet, o.counting.into(), o.n)?;
            let mut t = Table::new(&["d"])
                .note("alphabet", o.alphabet.alphabet.to_string())
                .note("N", o.n)
                .note("count", ex.len());
            for d in ex {
                t.push(vec![d.into()]);
            }
            em.table(out, &t)
        }
        Command::Dimension(a) => {
            let start = Instant::now();
            let r = cached_dimension(&a.alphabet.alphabet, a.tol, a.nodes)?;
            let seconds = a.timing.then(|| start.elapsed().as_secs_f64());
            em.json(
                out,
                json!({
                    "alphabet": a.alphabet.alphabet.to_string(),
                    "delta": r.delta,
                    "residual": r.residual,
                    "eigenvalue_at_delta": r.eigenvalue_at_delta,
                    "nodes": r.nodes,
                    "tol": a.tol,
                    "seconds": seconds,
                }),
            )
        }
        Command::Ensemble(a) => ensemble(a, cli.seed, out, em),
        Command::Modular(c) => modular(c, out, em),
        Command::Qmc(c) => qmc(c, cli.seed, out, em),
        Command::Expsum(c) => expsum(c, out, em),
        Command::Repro(a) => repro(a, out, em),
    }
}

fn alphabet_of(letters: &[u32]) -> Alphabet {
    Alphabet::new(letters.to_vec()).expect("fixed alphabet")
}

/// Dimension at the given settings, memoized when a cache directory is set.
pub fn cached_dimension(alphabet: &Alphabet, tol: f64, nodes: usize) -> Result<DimensionResult, Failure> {
    let mut cache = Cache::open("dimension");
    let key = format!("{alphabet}|tol={tol:e}|nodes={nodes}");
    if let Some(r) = cache
        .get(&key)
        .and_then(|v| serde_json::from_value::<DimensionResult>(v.clone()).ok())
    {
        return Ok(r);
    }
    let mut r = dimension(alphabet, tol, nodes)?;
    r.history.clear();
    cache.put(key, serde_json::to_value(&r).expect("json"));
    Ok(r)
}

fn cf(c: &CfCmd, out: Option<&Path>, em: &Emitter) -> Result<(), Failure> {
    let (word, fraction) = match c {
        CfCmd::Expand { fraction } => (cf_expand(*fraction)?, Some(*fraction)),
        CfCmd::Matrix { word } => (word.clone(), None),
    };
    let m = word_to_matrix(&word);
    let entries: Vec<String> = m.entries_big().iter().map(|e| e.to_string()).collect();
    let value = fraction.or_else(|| matrix_to_fraction(&m).ok());
    let even = even_normalize(&word)?;
    let spectral_data = if word.len() % 2 == 0 {
        spectral(&m).ok()
    } else {
        spectral(&word_to_matrix(&even)).ok()
    };
    em.json(
        out,
        json!({
            "word": word.quotients(),
            "even_word": even.quotients(),
            "fraction": value.map(|f| format!("{}/{}", f.numer(), f.denom())),
            "max_quotient": word.max_quotient(),
            "matrix": entries,
            "determinant": m.det().to_string(),
            "spectral_of_even_word": spectral_data.map(|s| json!({
                "lambda_plus": s.lambda_plus,
                "v_plus": s.v_plus,
                "v_minus": s.v_minus,
                "point": s.point(),
            })),
        }),
    )
}

fn enumerate(c: &EnumerateCmd, out: Option<&Path>, em: &Emitter) -> Result<(), Failure> {
    match c {
        EnumerateCmd::Mult(o) => {
            let t = multiplicity_table(&o.alphabet.alphabet, o.n, o.counting.into());
            let mut table = Table::new(&["d", "count"])
                .note("N", o.n)
                .note("fractions", t.total())
                .note("denominators", t.support_len())
                .note("max_multiplicity", t.max_multiplicity());
            for (d, n) in t.iter() {
                table.push(vec![d.into(), n.into()]);
            }
            em.table(out, &table)
        }
        EnumerateCmd::List(o) => {
            let mut rows = Vec::new();
            enumerate_orbit(&o.alphabet.alphabet, o.n, o.counting.into(), |p| {
                let w: Vec<String> = p.word.iter().map(u32::to_string).collect();
                rows.push((p.d, p.b, w.join(" ")));
            });
            rows.sort();
            let mut table = Table::new(&["b", "d", "word"])
                .note("N", o.n)
                .note("fractions", rows.len());
            for (d, b, w) in rows {
                table.push(vec![b.into(), d.into(), Cell::Text(w)]);
            }
            em.table(out, &table)
        }
        EnumerateCmd::Hensley {
            alphabet,
            lo,
            hi,
            counting,
        } => {
            if lo >= hi || *hi > 40 || hi - lo < 2 {
                return Err(Failure::Usage("need lo + 2 <= hi <= 40".into()));
            }
            let bounds: Vec<u64> = (*lo..=*hi).map(|e| 1u64 << e).collect();
            let a = &alphabet.alphabet;
            let counts = orbit_counts(a, (*counting).into(), &bounds);
            let slope = hensley_exponent(a, (*counting).into(), &bounds)?;
            let delta = cached_dimension(a, 1e-12, 64)?.delta;
            let mut t = Table::new(&["N", "fractions"])
                .note("slope", slope)
                .note("two_delta", 2.0 * delta);
            for (n, c) in bounds.iter().zip(counts) {
                t.push(vec![(*n).into(), c.into()]);
            }
            em.table(out, &t)
        }
        EnumerateCmd::Sumset(o) => {
            let r = sumset_check(&o.alphabet.alphabet, o.counting.into(), o.n);
            em.json(out, serde_json::to_value(&r).expect("json"))
        }
        EnumerateCmd::Density { orbit, delta, points } => {
            let a = &orbit.alphabet.alphabet;
            let delta = match delta {
                Some(d) => *d,
                None => cached_dimension(a, 1e-12, 64)?.delta,
            };
            let r = density_ratio(a, orbit.counting.into(), orbit.n, delta, *points)?;
            em.table(out, &density_table(&r))
        }
    }
}

fn density_table(r: &continuant_lab::enumerate::DensityReport) -> Table {
    let mut t = Table::new(&["N", "denominators", "ratio"])
        .note("delta", r.delta)
        .note("max_multiplicity", r.max_multiplicity);
    for row in &r.rows {
        t.push(vec![row.n.into(), row.denominators.into(), row.ratio.into()]);
    }
    t
}

fn ensemble(a: &EnsembleArgs, seed: u64, out: Option<&Path>, em: &Emitter) -> Result<(), Failure> {
    let alphabet = &a.alphabet.alphabet;
    let x = a.x.unwrap_or_else(|| default_target(alphabet));
    let ens = build_omega(alphabet, a.n as f64, x)?;
    let (check, _) = sample_omega(&ens, a.sample, seed)?;
    let delta = cached_dimension(alphabet, 1e-12, 64)?.delta;
    let card = omega_cardinality_report(&ens, alphabet, delta);
    let factors: Vec<Value> = ens
        .factors
        .iter()
        .map(|f| {
            json!({
                "m": f.m,
                "l": f.l,
                "word_length": f.k,
                "size": f.members.len(),
                "stages": f.stages,
            })
        })
        .collect();
    em.json(
        out,
        json!({
            "alphabet": alphabet.to_string(),
            "N": a.n,
            "x_target": x,
            "delta": delta,
            "j": ens.j(),
            "degenerate": ens.degenerate,
            "scales": ens.scales,
            "alphas": ens.alphas,
            "scale_product_over_n": ens.scale_product() / a.n as f64,
            "factors": factors,
            "check": check,
            "cardinality": card,
            "all_ok": check.all_ok(),
        }),
    )
}

fn modular(c: &ModularCmd, out: Option<&Path>, em: &Emitter) -> Result<(), Failure> {
    match c {
        ModularCmd::Closure { alphabet, q } => {
            let a = &alphabet.alphabet;
            let mut cache = Cache::open("closure");
            let key = format!("{a}|q={q}");
            let body = match cache.get(&key) {
                Some(v) => v.clone(),
                None => {
                    let cl = closure_mod_q(a, *q)?;
                    let v = json!({
                        "alphabet": a.to_string(),
                        "q": q,
                        "even_elements": cl.even.len(),
                        "odd_elements": cl.odd.len(),
                        "attainable_d": cl.attainable_d,
                        "full": cl.is_full(),
                    });
                    cache.put(key, v.clone());
                    v
                }
            };
            em.json(out, body)
        }
        ModularCmd::Admissible { alphabet, d, q_max } => {
            let r = is_admissible(&alphabet.alphabet, *d, *q_max)?;
            em.json(
                out,
                json!({"d": d, "q_max": q_max, "admissible": r.admissible, "witness": r.witness}),
            )
        }
        ModularCmd::Nu { q, a } => {
            let z = nu_q(*q, *a)?;
            let exact = nu_q_exact(*q, *a)?;
            em.json(
                out,
                json!({
                    "q": q, "a": a, "re": z.re, "im": z.im,
                    "exact": exact.map(|r| format!("{}/{}", r.numer(), r.denom())),
                }),
            )
        }
        ModularCmd::Sseries { n, p } => {
            let v = singular_series(*n, *p)?;
            em.json(out, json!({"n": n, "P": p, "value": v}))
        }
        ModularCmd::Residues { orbit, q } => {
            let profiles = residue_profiles(&orbit.alphabet.alphabet, orbit.counting.into(), orbit.n, q)?;
            let mut t = Table::new(&[
                "q",
                "residue",
                "support_fraction",
                "mass_share",
                "predicted_share",
            ])
            .note("N", orbit.n);
            let mut spreads = Vec::new();
            for p in &profiles {
                spreads.push(
                    json!({"q": p.q, "support_spread": p.support_spread, "mass_deviation": p.mass_deviation}),
                );
                for r in &p.rows {
                    t.push(vec![
                        (p.q as u64).into(),
                        (r.residue as u64).into(),
                        r.support_fraction.into(),
                        r.mass_share.into(),
                        r.predicted_share.into(),
                    ]);
                }
            }
            em.table(out, &t.note("spread", spreads))
        }
        ModularCmd::Witness(o) => {
            let w = primitive_root_witness(&o.alphabet.alphabet, o.n, o.counting.into())?;
            em.json(
                out,
                json!({"N": o.n, "witness": w.map(|(b, d)| json!({"b": b, "d": d}))}),
            )
        }
    }
}

fn read_points(path: &Path) -> Result<PointSet2D, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(io::read_points_csv(&text)?)
}

fn qmc(c: &QmcCmd, seed: u64, out: Option<&Path>, em: &Emitter) -> Result<(), Failure> {
    match c {
        QmcCmd::Zn { b, d, drop_origin } => {
            let ps = zn_points(*b, *d, *drop_origin)?;
            em.table(out, &points_table(&ps))
        }
        QmcCmd::Disc {
            input,
            b,
            d,
            drop_origin,
            sampled,
            columns,
        } => {
            let ps = match (input, b, d) {
                (Some(p), _, _) => read_points(p)?,
                (None, Some(b), Some(d)) => zn_points(*b, *d, *drop_origin)?,
                _ => return Err(Failure::Usage("give --in or both --b and --d".into())),
            };
            let value = if *sampled {
                star_discrepancy_sampled(&ps, *columns, seed)?
            } else {
                star_discrepancy(&ps)?
            };
            let n = ps.len() as u64;
            let mut body = json!({
                "points": n,
                "star_discrepancy": value,
                "exact": !*sampled,
                "extreme_discrepancy_upper_bound": (4.0 * value).min(1.0),
                "schmidt_floor": if n >= 2 { Some(schmidt_floor(n)?) } else { None },
            });
            if let (Some(b), Some(d)) = (b, d) {
                let a = cf_expand(Fraction::new(*b, *d)?)?.max_quotient();
                body["max_quotient"] = json!(a);
                body["zaremba_bound"] = json!(zaremba_bound(a, *d)?);
            }
            em.json(out, body)
        }
        QmcCmd::Bound { a, d } => em.json(
            out,
            json!({"A": a, "d": d, "zaremba_bound": zaremba_bound(*a, *d)?, "schmidt_floor": schmidt_floor(*d)?}),
        ),
        QmcCmd::Scan { d } => {
            let rows = multiplier_scan(*d)?;
            let mut t = Table::new(&["b", "max_quotient", "star_discrepancy"]).note("d", d);
            for r in rows {
                t.push(vec![r.b.into(), (r.max_quotient as u64).into(), r.star_discrepancy.into()]);
            }
            em.table(out, &t)
        }
    }
}

fn points_table(ps: &PointSet2D) -> Table {
    let mut t = Table::new(&["x", "y"]).note("points", ps.len());
    for &(x, y) in &ps.points {
        t.push(vec![Cell::Exact(x), Cell::Exact(y)]);
    }
    t
}

fn source(s: &SourceArgs) -> Result<ExpSumSource, Failure> {
    let o = &s.orbit;
    let a = &o.alphabet.alphabet;
    Ok(match s.source {
        SourceArg::Orbit => {
            if o.n > continuant_lab::expsum::MAX_SOURCE {
                return Err(Failure::Resource(format!(
                    "N = {} exceeds {}",
                    o.n,
                    continuant_lab::expsum::MAX_SOURCE
                )));
            }
            ExpSumSource::from_orbit(a, o.n, o.counting.into())
        }
        SourceArg::Ensemble => ExpSumSource::from_ensemble(&build_omega(a, o.n as f64, default_target(a))?)?,
    })
}

fn expsum(c: &ExpsumCmd, out: Option<&Path>, em: &Emitter) -> Result<(), Failure> {
    match c {
        ExpsumCmd::Profile { source: s, q, k } => {
            let src = source(s)?;
            let arcs = arc_profiles(&src, s.orbit.n, *q, *k)?;
            let mut t = Table::new(&["Q", "K", "measure", "mass", "ratio"])
                .note("N", s.orbit.n)
                .note("size", src.size());
            for a in arcs {
                t.push(vec![
                    a.q.into(),
                    a.k.into(),
                    a.measure.into(),
                    a.mass.into(),
                    a.ratio.into(),
                ]);
            }
            em.table(out, &t)
        }
        ExpsumCmd::Repr { source: s, dft_len } => {
            let src = source(s)?;
            let len = dft_len.unwrap_or_else(|| default_dft_len(&src));
            let r = representation_numbers(&src, len)?;
            em.json(
                out,
                json!({
                    "N": s.orbit.n,
                    "size": src.size(),
                    "dft_len": r.dft_len,
                    "agree": r.agree,
                    "max_rounding": r.max_rounding,
                    "parseval_lhs": r.parseval_lhs,
                    "parseval_rhs": r.parseval_rhs,
                    "parseval_relative_error": r.parseval_relative_error(),
                }),
            )
        }
        ExpsumCmd::Partition { source: s } => {
            let src = source(s)?;
            let p = arc_partition(&src, s.orbit.n)?;
            let mut t = Table::new(&["Q", "K", "points", "mass"])
                .note("N", p.n)
                .note("grid", p.grid)
                .note("total_mass", p.total_mass)
                .note("energy", p.energy)
                .note("relative_gap", p.relative_gap());
            for c in &p.classes {
                t.push(vec![
                    c.q.into(),
                    c.k.into(),
                    (c.points as u64).into(),
                    c.mass.into(),
                ]);
            }
            em.table(out, &t)
        }
        ExpsumCmd::Eval {
            source: s,
            theta,
            a,
            q,
        } => {
            let src = source(s)?;
            let (z, at) = match (theta, a, q) {
                (Some(t), _, _) => (s_n(&src, *t), json!(t)),
                (None, Some(a), Some(q)) if *q >= 1 => (s_rational(&src, *a, *q), json!(format!("{a}/{q}"))),
                _ => return Err(Failure::Usage("give --theta or --a and --q >= 1".into())),
            };
            em.json(
                out,
                json!({"N": s.orbit.n, "size": src.size(), "at": at, "re": z.re, "im": z.im, "abs": z.norm()}),
            )
        }
    }
}

fn repro(a: &ReproArgs, out: Option<&Path>, em: &Emitter) -> Result<(), Failure> {
    let dir = out.map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    std::fs::create_dir_all(&dir)
        .map_err(|e| Failure::Other(format!("cannot create {}: {e}", dir.display())))?;
    let mut written = Vec::new();
    let mut save = |name: &str, t: &Table| -> Result<(), Failure> {
        let p = dir.join(name);
        em.csv_file(&p, t)?;
        written.push(p);
        Ok(())
    };
    match a.figure {
        Figure::Fig2 | Figure::Fig3 => {
            let (b, d) = if matches!(a.figure, Figure::Fig2) {
                (3523, 4547)
            } else {
                (3535, 4547)
            };
            let ps = zn_points(b, d, false)?;
            let t = points_table(&ps)
                .note("b", b)
                .note("d", d)
                .note("star_discrepancy", star_discrepancy(&ps)?);
            let name = if matches!(a.figure, Figure::Fig2) {
                "fig2.csv"
            } else {
                "fig3.csv"
            };
            save(name, &t)?;
        }
        Figure::Fig5 => {
            let two = alphabet_of(&[1, 2]);
            match a.n {
                Some(n) => save("fig5.csv", &fiber_table(&two, n))?,
                None => {
                    save("fig5a.csv", &fiber_table(&two, 1000))?;
                    save("fig5b.csv", &fiber_table(&two, 10_000))?;
                }
            }
        }
        Figure::Fig6 => save(
            "fig6.csv",
            &fiber_table(&alphabet_of(&[1, 2, 3, 4, 5]), a.n.unwrap_or(500)),
        )?,
        Figure::Fig7 => {
            let five = alphabet_of(&[1, 2, 3, 4, 5]);
            let n = a.n.unwrap_or(1000);
            let delta = cached_dimension(&five, 1e-12, 64)?.delta;
            let table = multiplicity_table(&five, n, Counting::Canonical);
            let mut mult = Table::new(&["d", "count", "trend"])
                .note("N", n)
                .note("delta", delta);
            let mut norm = Table::new(&["d", "normalized"]).note("N", n).note("delta", delta);
            for d in 2..n {
                let c = table.get(d);
                let trend = (d as f64).powf(2.0 * delta - 1.0);
                mult.push(vec![d.into(), c.into(), trend.into()]);
                norm.push(vec![d.into(), (c as f64 / trend).into()]);
            }
            save("mult.csv", &mult)?;
            save("normalized.csv", &norm)?;
        }
        Figure::Fig8 => {
            let a13 = alphabet_of(&[1, 3]);
            let delta = cached_dimension(&a13, 1e-12, 64)?.delta;
            let r = density_ratio(&a13, Counting::Canonical, a.n.unwrap_or(200_000), delta, 60)?;
            save("fig8.csv", &density_table(&r))?;
        }
    }
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

/// Points `(d, b/d)` of the fractions with denominator below `n`.
fn fiber_table(alphabet: &Alphabet, n: u64) -> Table {
    let pairs = orbit_pairs(alphabet, n, Counting::Canonical);
    let mut t = Table::new(&["d", "b", "x"])
        .note("alphabet", alphabet.to_string())
        .note("N", n)
        .note("fractions", pairs.len());
    for (b, d) in pairs {
        t.push(vec![d.into(), b.into(), Cell::Exact(b as f64 / d as f64)]);
    }
    t
}
