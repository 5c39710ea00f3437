//! One function per subcommand; each streams JSON objects and returns how
//! the run ended.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use splitval_core::approx::{
    line_trick_solve, norm_multiplier_solve, verify_certificate, verify_line_solution, w_fiber_verify, FiberVerdict,
    NormMultiplierProblem, NormTarget, PointTarget, PuncturedAffineProblem, SearchBox,
};
use splitval_core::field::NumberFieldAbs;
use splitval_core::galois::{almost_abelian_test, find_split_prime, reverify_rejection, AlmostAbelianValue};
use splitval_core::local::{
    cyclic_invariant, hilbert_symbol, relevant_places, reciprocity_defect, DirichletCharacter, NormVerdict, PlaceOfQ,
    Precision,
};
use splitval_core::sieve::{
    cubic_form_build, forbidden_class_scan, hh1_search, verify_hh1_solution, verify_scan_hit, Hh1Bounds, Hh1Problem,
    Hh1Target, HomogeneousForm, ScanBounds,
};
use splitval_core::split::{
    change_variables, check_t0, extend_places, search_t0, verify_hypotheses_asserting, Assertions, ConjectureInstance,
    DenominatorPolicy, LocalTarget, Mobius, Overall, SearchParams,
};
use splitval_core::text::{parse_affine_form, parse_instance, parse_local_target, parse_poly, parse_rational, write_instance};
use splitval_core::Rational;

use crate::output::Stream;
use crate::{CliError, Command, Ctx, CubicArgs, InstanceArgs, Outcome};

type Res<T> = Result<T, CliError>;

fn rational(s: &str) -> Res<Rational> {
    Ok(parse_rational(s)?)
}

fn place(s: &str) -> Res<PlaceOfQ> {
    let s = s.trim();
    if s == "real" {
        return Ok(PlaceOfQ::Real);
    }
    let p: u64 = s.parse().map_err(|_| CliError::usage(format!("'{s}' is neither 'real' nor a prime")))?;
    Ok(PlaceOfQ::finite(p)?)
}

fn primes(list: Option<&str>) -> Res<Vec<u64>> {
    let Some(list) = list else { return Ok(vec![]) };
    list.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|x| x.trim().parse().map_err(|_| CliError::usage(format!("'{x}' is not an integer"))))
        .collect()
}

fn places(list: Option<&str>) -> Res<Vec<PlaceOfQ>> {
    let Some(list) = list else { return Ok(vec![]) };
    list.split(',').filter(|x| !x.trim().is_empty()).map(place).collect()
}

/// `key=value` words; a bare `real` becomes `v=real`.
fn words(src: &str) -> Res<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for w in src.split_whitespace() {
        let (k, v) = match w.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None if w == "real" => ("v".to_string(), "real".to_string()),
            None => return Err(CliError::usage(format!("expected key=value in '{src}', found '{w}'"))),
        };
        if out.insert(k.clone(), v).is_some() {
            return Err(CliError::usage(format!("'{k}' given twice in '{src}'")));
        }
    }
    Ok(out)
}

fn need<'a>(m: &'a BTreeMap<String, String>, key: &str, src: &str) -> Res<&'a str> {
    m.get(key).map(String::as_str).ok_or_else(|| CliError::usage(format!("'{src}' needs {key}=")))
}

/// Precision of a place from `N=` or `eps=`.
fn precision_of(m: &BTreeMap<String, String>, v: PlaceOfQ, src: &str) -> Res<Precision> {
    Ok(match v {
        PlaceOfQ::Real => Precision::Real(rational(need(m, "eps", src)?)?),
        PlaceOfQ::Finite(_) => {
            let n: i64 = need(m, "N", src)?.parse().map_err(|_| CliError::usage(format!("bad N in '{src}'")))?;
            Precision::Adic(n)
        }
    })
}

fn load(args: &InstanceArgs) -> Res<(ConjectureInstance, Assertions)> {
    let text = std::fs::read_to_string(&args.instance)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", args.instance.display())))?;
    let mut inst = parse_instance(&text)?;
    if let Some(spec) = &args.precision {
        let mut targets: BTreeMap<PlaceOfQ, LocalTarget> = inst.targets().clone();
        for item in spec.split(',').filter(|x| !x.trim().is_empty()) {
            let (v, val) = item
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("precision override '{item}' must be place=value")))?;
            let v = place(v)?;
            let old = targets
                .get(&v)
                .ok_or_else(|| CliError::usage(format!("no target at {v} to override")))?;
            let new = match v {
                PlaceOfQ::Real => LocalTarget::real(old.t.clone(), rational(val)?)?,
                PlaceOfQ::Finite(p) => {
                    let n = val.trim().parse().map_err(|_| CliError::usage(format!("bad precision '{val}'")))?;
                    LocalTarget::finite(p, old.t.clone(), n)?
                }
            };
            targets.insert(v, new);
        }
        inst = inst.with_targets(targets.into_values().collect(), [])?;
    }
    let mut asserted = Assertions::new();
    for a in &args.assert_hypothesis {
        let (i, v) = a
            .split_once(',')
            .ok_or_else(|| CliError::usage(format!("--assert-hypothesis '{a}' must be entry,place")))?;
        let i: usize = i.trim().parse().map_err(|_| CliError::usage(format!("bad entry index in '{a}'")))?;
        if i >= inst.entries().len() {
            return Err(CliError::usage(format!("entry {i} does not exist")));
        }
        asserted.insert((i, place(v)?));
    }
    Ok((inst, asserted))
}

fn field(src: &str) -> Res<NumberFieldAbs> {
    Ok(NumberFieldAbs::new(parse_poly(src, "t")?)?)
}

pub fn run(ctx: &Ctx, cmd: &Command, out: &mut Stream) -> Res<Outcome> {
    match cmd {
        Command::VerifyHypotheses(args) => {
            let (inst, asserted) = load(args)?;
            let hyps = verify_hypotheses_asserting(&inst, &asserted)?;
            for h in &hyps {
                out.emit(h);
            }
            Ok(if hyps.iter().any(|h| h.verdict == NormVerdict::NotNorm) {
                Outcome::Failures
            } else if hyps.iter().any(|h| h.verdict.is_undetermined() && !h.asserted) {
                Outcome::Inconclusive
            } else {
                Outcome::Completed
            })
        }
        Command::CheckT0 { inst, t0 } => {
            let (inst, asserted) = load(inst)?;
            let t0 = rational(t0)?;
            let hyps = verify_hypotheses_asserting(&inst, &asserted)?;
            let report = check_t0(&inst, &t0, &hyps)?;
            out.emit(&report);
            Ok(match report.overall {
                Overall::Pass => Outcome::Completed,
                Overall::Fail { .. } => Outcome::Failures,
                Overall::Conditional { .. } => Outcome::Inconclusive,
            })
        }
        Command::SearchT0 { inst, bound, max_hits, integers_only } => {
            let (inst, asserted) = load(inst)?;
            let mut params = SearchParams::new(*bound);
            params.max_hits = *max_hits;
            params.asserted = asserted;
            if *integers_only {
                params.denominators = DenominatorPolicy::IntegersOnly;
            }
            let res = search_t0(&inst, &params)?;
            for h in &res.hits {
                out.emit(h);
            }
            out.emit(&json!({ "stats": res.stats }));
            Ok(if res.hits.is_empty() { Outcome::Inconclusive } else { Outcome::Completed })
        }
        Command::ChangeVars { inst, map, s_prime, t0_prime, points } => {
            let (inst, _) = load(inst)?;
            let c: Vec<Rational> = map.split(',').map(rational).collect::<Res<_>>()?;
            let [a, b, g, d] = <[Rational; 4]>::try_from(c)
                .map_err(|_| CliError::usage("--map needs four rationals α,β,γ,δ"))?;
            let m = Mobius::new(a, b, g, d)?;
            let cov = change_variables(&inst, &m, &places(s_prime.as_deref())?)?;
            out.emit(&json!({ "transformed": {
                "mobius": cov.mobius,
                "instance": write_instance(&cov.instance),
                "s0_extra": cov.s0_extra,
                "new_primes": cov.new_primes,
                "hypothesis_iii": cov.hypothesis_iii,
                "transferred": cov.transferred.iter().map(|t| json!({
                    "original": t.original.describe(),
                    "transformed": t.transformed.describe(),
                })).collect::<Vec<_>>(),
            }}));
            let mut pts: Vec<Rational> = t0_prime.iter().map(|s| rational(s)).collect::<Res<_>>()?;
            if *points > 0 {
                pts.extend(cov.premise_points(*points)?);
            }
            let mut failed = false;
            for t in &pts {
                let r = cov.verify_conclusions(t)?;
                failed |= !r.all_hold();
                out.emit(&r);
            }
            Ok(if failed { Outcome::Failures } else { Outcome::Completed })
        }
        Command::ExtendS { inst, primes: list } => {
            let (inst, _) = load(inst)?;
            let ps = primes(Some(list))?;
            let ext = extend_places(&inst, &ps)?;
            let added: Vec<_> = ps
                .iter()
                .filter_map(|&p| ext.target(PlaceOfQ::Finite(p)))
                .map(|t| t.describe())
                .collect();
            out.emit(&json!({ "instance": write_instance(&ext), "targets": added }));
            Ok(Outcome::Completed)
        }
        Command::NormMultiplier { field: f, target, s, v0, local_box, global_box } => {
            let k = field(f)?;
            let targets = target
                .iter()
                .map(|t| {
                    let lt = parse_local_target(t)?;
                    Ok(NormTarget { place: lt.place, t: lt.t, precision: lt.precision })
                })
                .collect::<Res<Vec<_>>>()?;
            let prob = NormMultiplierProblem::new(k, places(s.as_deref())?, targets, *v0)?;
            let bx = SearchBox { local: *local_box, global: *global_box, ..SearchBox::default() };
            let cert = norm_multiplier_solve(&prob, &bx)?;
            let verified = verify_certificate(&prob, &cert)?;
            out.emit(&json!({ "certificate": cert, "verified": verified }));
            Ok(if verified { Outcome::Completed } else { Outcome::Failures })
        }
        Command::LineTrick { dim, exclude, target, s, v0 } => {
            let excluded = exclude
                .iter()
                .map(|e| {
                    let (f, g) = e
                        .split_once(';')
                        .ok_or_else(|| CliError::usage(format!("--exclude '{e}' must be 'f ; g'")))?;
                    Ok((parse_affine_form(f, *dim)?, parse_affine_form(g, *dim)?))
                })
                .collect::<Res<Vec<_>>>()?;
            let targets = target
                .iter()
                .map(|t| {
                    let m = words(t)?;
                    let v = place(need(&m, "v", t)?)?;
                    let point = need(&m, "point", t)?.split(',').map(rational).collect::<Res<Vec<_>>>()?;
                    Ok(PointTarget { place: v, point, precision: precision_of(&m, v, t)? })
                })
                .collect::<Res<Vec<_>>>()?;
            let prob = PuncturedAffineProblem::new(*dim, excluded, places(s.as_deref())?, targets, PlaceOfQ::finite(*v0)?)?;
            let sol = line_trick_solve(&prob, ctx.seed)?;
            let verified = verify_line_solution(&prob, &sol);
            out.emit(&json!({ "solution": sol, "verified": verified }));
            Ok(if verified { Outcome::Completed } else { Outcome::Failures })
        }
        Command::WVerify { inst, t0, place: ps } => {
            let (inst, _) = load(inst)?;
            let t0 = rational(t0)?;
            let ps: Vec<PlaceOfQ> = ps.iter().map(|p| place(p)).collect::<Res<_>>()?;
            let verdicts = w_fiber_verify(&inst, &t0, &ps)?;
            for v in &verdicts {
                out.emit(v);
            }
            Ok(if verdicts.iter().any(|v| v.verdict == FiberVerdict::No) {
                Outcome::Failures
            } else if verdicts.iter().any(|v| v.verdict == FiberVerdict::Undetermined) {
                Outcome::Inconclusive
            } else {
                Outcome::Completed
            })
        }
        Command::Hilbert { a, b, place: v } => {
            let (x, y, v) = (rational(a)?, rational(b)?, place(v)?);
            let symbol = hilbert_symbol(&x, &y, v)?;
            out.emit(&json!({ "a": x.to_string(), "b": y.to_string(), "place": v, "symbol": symbol }));
            Ok(Outcome::Completed)
        }
        Command::Reciprocity { a, b } => {
            let (x, y) = (rational(a)?, rational(b)?);
            let symbols = relevant_places(&x, &y)?
                .into_iter()
                .map(|v| Ok(json!({ "place": v, "symbol": hilbert_symbol(&x, &y, v)? })))
                .collect::<Res<Vec<_>>>()?;
            let defect = reciprocity_defect(&x, &y)?;
            out.emit(&json!({ "a": x.to_string(), "b": y.to_string(), "symbols": symbols, "defect": defect }));
            Ok(if defect.is_zero() { Outcome::Completed } else { Outcome::Failures })
        }
        Command::CyclicInv { a, prime, quadratic, modulus, order, generator, k } => {
            let chi = match (quadratic, modulus, order, generator) {
                (Some(d), None, None, None) => DirichletCharacter::quadratic(*d)?,
                (None, Some(m), Some(n), Some(g)) => DirichletCharacter::from_generator(*m, *n, *g, *k)?,
                _ => return Err(CliError::usage("give either --quadratic d or --modulus, --order and --generator")),
            };
            let x = rational(a)?;
            let inv = cyclic_invariant(&chi, &x, *prime)?;
            out.emit(&json!({
                "a": x.to_string(), "prime": prime, "modulus": chi.modulus(), "order": chi.order(), "invariant": inv,
            }));
            Ok(Outcome::Completed)
        }
        Command::AlmostAbelian { poly, bound } => {
            let f = parse_poly(poly, "x")?;
            let verdict = almost_abelian_test(&f, *bound)?;
            let reverified = if verdict.is_rejected() { Some(reverify_rejection(&f, &verdict)?) } else { None };
            out.emit(&json!({ "verdict": verdict, "reverified": reverified }));
            Ok(match verdict.value {
                AlmostAbelianValue::Inconclusive => Outcome::Inconclusive,
                _ if reverified == Some(false) => Outcome::Failures,
                _ => Outcome::Completed,
            })
        }
        Command::SplitPrime { field: fs, exclude, bound } => {
            if fs.is_empty() {
                return Err(CliError::usage("at least one --field is required"));
            }
            let ks: Vec<NumberFieldAbs> = fs.iter().map(|f| field(f)).collect::<Res<_>>()?;
            let ex: BTreeSet<u64> = primes(exclude.as_deref())?.into_iter().collect();
            let p = find_split_prime(&ks, &ex, *bound)?;
            out.emit(&json!({ "prime": p, "fields": fs }));
            Ok(Outcome::Completed)
        }
        Command::Hh1Search { form, s, target, bound, lambda_bound, max_hits, segment } => {
            if form.is_empty() {
                return Err(CliError::usage("at least one --form is required"));
            }
            let forms = form
                .iter()
                .map(|f| Ok(HomogeneousForm::from_poly(&parse_poly(f, "x")?)?))
                .collect::<Res<Vec<_>>>()?;
            let targets = target
                .iter()
                .map(|t| {
                    let m = words(t)?;
                    let lambda = rational(need(&m, "lambda", t)?)?;
                    let mu = rational(need(&m, "mu", t)?)?;
                    Ok(match place(need(&m, "v", t)?)? {
                        PlaceOfQ::Real => Hh1Target::Real { lambda, mu, eps: rational(need(&m, "eps", t)?)? },
                        PlaceOfQ::Finite(p) => {
                            let n = need(&m, "N", t)?.parse().map_err(|_| CliError::usage(format!("bad N in '{t}'")))?;
                            Hh1Target::Finite { p, lambda, mu, precision: n }
                        }
                    })
                })
                .collect::<Res<Vec<_>>>()?;
            let prob = Hh1Problem::new(forms, primes(s.as_deref())?, targets)?;
            let mut b = Hh1Bounds::new(lambda_bound.unwrap_or(*bound), *bound);
            b.max_hits = *max_hits;
            b.segment = *segment;
            let rep = hh1_search(&prob, &b)?;
            let mut bad = false;
            for h in &rep.hits {
                bad |= !verify_hh1_solution(&prob, h);
                out.emit(h);
            }
            out.emit(&json!({ "stats": rep.stats }));
            Ok(if bad {
                Outcome::Failures
            } else if rep.hits.is_empty() {
                Outcome::Inconclusive
            } else {
                Outcome::Completed
            })
        }
        Command::IrvingBuild { form, samples } => {
            let f = build_cubic(form)?;
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
            let mut failures = 0;
            for _ in 0..*samples {
                let tau = Rational::new(BigInt::from(rng.gen_range(-1000i64..=1000)), BigInt::from(rng.gen_range(1i64..=100)));
                let r = Rational::new(BigInt::from(rng.gen_range(1i64..=20)), BigInt::from(rng.gen_range(1i64..=20)));
                if !f.identity_holds(&tau, &r.pow(f.q as i32)) {
                    failures += 1;
                }
            }
            out.emit(&json!({ "form": f, "identity_samples": samples, "identity_failures": failures }));
            Ok(if failures == 0 { Outcome::Completed } else { Outcome::Failures })
        }
        Command::IrvingScan { form, coeffs, s, bound, y_bound, x_class, y_class, max_hits } => {
            let f: Vec<BigInt> = match coeffs {
                Some(c) => c
                    .split(',')
                    .map(|x| x.trim().parse().map_err(|_| CliError::usage(format!("'{x}' is not an integer"))))
                    .collect::<Res<_>>()?,
                None => build_cubic(form)?.coeffs,
            };
            let s: BTreeSet<u64> = primes(s.as_deref())?.into_iter().collect();
            let class = |c: &Option<String>| -> Res<Option<(u64, u64)>> {
                let Some(c) = c else { return Ok(None) };
                let v = primes(Some(c))?;
                match v[..] {
                    [r, m] if m > 0 => Ok(Some((r, m))),
                    _ => Err(CliError::usage(format!("class '{c}' must be r,m with m > 0"))),
                }
            };
            let mut b = ScanBounds::new(*bound, y_bound.unwrap_or(*bound));
            b.x_class = class(x_class)?;
            b.y_class = class(y_class)?;
            b.max_hits = *max_hits;
            let rep = forbidden_class_scan(&f, &s, form.q, &b)?;
            let mut bad = false;
            for h in &rep.hits {
                bad |= !verify_scan_hit(&f, &s, form.q, h);
                out.emit(h);
            }
            out.emit(&json!({
                "form": f.iter().map(|c| c.to_string()).collect::<Vec<_>>(), "stats": rep.stats,
            }));
            Ok(if bad {
                Outcome::Failures
            } else if rep.hits.is_empty() {
                Outcome::Inconclusive
            } else {
                Outcome::Completed
            })
        }
    }
}

fn build_cubic(a: &CubicArgs) -> Res<splitval_core::sieve::CubicForm> {
    let k = field(&a.field)?;
    Ok(cubic_form_build(
        &k,
        a.q,
        &parse_poly(&a.a1, "t")?,
        &rational(&a.a2)?,
        &parse_poly(&a.b1, "t")?,
        &rational(&a.b2)?,
    )?)
}
