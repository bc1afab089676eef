//! The acceptance suite: ten criteria, each with its own time limit.
//!
//! Every check compares a library result against a value computed here by
//! independent means (closed forms, brute force, or hand-derived tables).

use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use sumprod::census::{component_census, fano_connected, fano_nonempty, torus_fixed_planes, ComponentType};
use sumprod::identity::{cancel, match_products, DegreeConstraint, MatchResult, SumProductIdentity};
use sumprod::multipoly::{factor_product, Factorization, LinearForm, Monomial, ProductOfLinear};
use sumprod::plane::{lambda_profile, membership, min_splitting, sharp_witness, KPlane, PlaneError};
use sumprod::prodrank::{det_cover, pfaffian_cover, perm4_certificate, rank_bounds, replay, theorem_bound, CoverConfig, Step, Target};
use sumprod::search::{hunt_counterexamples, sample_member_plane, SearchReport, SearchSpace};
use sumprod::{Exec, FieldCtx, Matrix};

pub const REPORT_SCHEMA: &str = "sumprod.repro/1";

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    /// Whether the check itself held, regardless of timing.
    pub check_passed: bool,
    pub elapsed_ms: u128,
    pub limit_ms: u128,
    pub detail: String,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "{} criterion {:>2} {}: {} ({} ms, limit {} ms)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed_ms,
            self.limit_ms
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReproReport {
    pub schema: String,
    pub jobs: usize,
    pub seed: u64,
    pub criteria: Vec<CriterionResult>,
    pub searches: Vec<SearchReport>,
}

impl ReproReport {
    pub fn all_pass(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }
}

fn timed(id: u32, name: &str, limit: Duration, f: impl FnOnce() -> Result<String, String>) -> CriterionResult {
    let start = Instant::now();
    let outcome = f();
    let elapsed = start.elapsed();
    let (check_passed, detail) = match outcome {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    let in_time = elapsed <= limit;
    let detail = if check_passed && !in_time {
        format!("{detail}; over the time limit")
    } else {
        detail
    };
    CriterionResult {
        id,
        name: name.into(),
        passed: check_passed && in_time,
        check_passed,
        elapsed_ms: elapsed.as_millis(),
        limit_ms: limit.as_millis(),
        detail,
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn gf(p: u64) -> FieldCtx {
    FieldCtx::prime(p).expect("prime")
}

// ---------------------------------------------------------------------------
// 1-4, 10: census and planes

pub fn census_table() -> Result<String, String> {
    let t = component_census(4, 3, 5).map_err(|e| e.to_string())?;
    let want = [
        (ComponentType::A, 81u32, 12usize),
        (ComponentType::B, 324, 8),
        (ComponentType::C, 648, 5),
        (ComponentType::D, 216, 4),
    ];
    let got: Vec<(ComponentType, BigUint, usize)> = t.rows.iter().map(|r| (r.kind, r.count.clone(), r.dimension)).collect();
    let want: Vec<(ComponentType, BigUint, usize)> = want.iter().map(|&(k, c, d)| (k, BigUint::from(c), d)).collect();
    ensure(got == want, || format!("got {got:?}"))?;
    Ok("A:(81,12) B:(324,8) C:(648,5) D:(216,4)".into())
}

pub fn dimension_identity() -> Result<String, String> {
    let mut checked = 0;
    for r in 3..=8 {
        for d in 3..=8 {
            let k = (r - 2) * (d - 1) + 1;
            let t = component_census(r, d, k).map_err(|e| e.to_string())?;
            let a = t
                .rows
                .iter()
                .find(|row| row.kind == ComponentType::A)
                .ok_or_else(|| format!("no type A row at ({r},{d})"))?;
            let example = 2 * ((r - 2) * (d - 1) + 2) * (d - 2);
            let grassmannian = (k + 1) * (r * (d - 1) - (k + 1));
            ensure(a.dimension == example && example == grassmannian, || {
                format!("({r},{d}): table {}, formula {example}, Grassmannian {grassmannian}", a.dimension)
            })?;
            checked += 1;
        }
    }
    Ok(format!("{checked} (r,d) pairs agree"))
}

pub fn torus_counts(exec: Exec) -> Result<String, String> {
    let mut parts = Vec::new();
    for (r, d) in [(2, 3), (2, 4), (3, 3), (3, 4), (4, 3)] {
        let k = r * (d - 1) - 1;
        let planes = torus_fixed_planes(r, d, k, exec).map_err(|e| e.to_string())?;
        let want = d.pow(r as u32);
        ensure(planes.len() == want, || format!("({r},{d}): {} planes, d^r = {want}", planes.len()))?;
        let ctx = gf(5);
        ensure(planes.iter().all(|p| membership(&p.to_kplane(ctx))), || {
            format!("({r},{d}): a coordinate plane is not a member")
        })?;
        parts.push(format!("({r},{d})={want}"));
    }
    Ok(format!("{} (d^r; r^d would give 64 at (4,3))", parts.join(" ")))
}

pub fn sharp_witnesses() -> Result<String, String> {
    let mut parts = Vec::new();
    for (r, d) in [(2, 3), (4, 3), (4, 4), (6, 3), (5, 3)] {
        for ctx in [FieldCtx::rationals(), gf(7)] {
            let w = sharp_witness(ctx, r, d).map_err(|e| e.to_string())?;
            ensure(membership(&w), || format!("({r},{d}) witness is not a member"))?;
            let lam = min_splitting(&w).map_err(|e| e.to_string())?;
            ensure(lam > 1, || format!("({r},{d}) witness is one-split"))?;
            if r % 2 == 0 {
                ensure(lam == 2, || format!("({r},{d}) witness has min splitting {lam}"))?;
            }
            if ctx == FieldCtx::rationals() {
                parts.push(format!("({r},{d}):k={},min={lam}", w.k()));
            }
        }
    }
    Ok(parts.join(" "))
}

pub fn connectedness() -> Result<String, String> {
    // (r, d, k, nonempty, connected) from k < r(d-1) and k < r(d-1) - 1.
    let table = [
        (2, 3, 3, true, false),
        (2, 3, 4, false, false),
        (4, 3, 6, true, true),
        (4, 3, 7, true, false),
    ];
    for (r, d, k, ne, co) in table {
        ensure(fano_nonempty(r, d, k) == ne && fano_connected(r, d, k) == co, || {
            format!("({r},{d},{k}): nonempty {}, connected {}", fano_nonempty(r, d, k), fano_connected(r, d, k))
        })?;
        let fixed = torus_fixed_planes(r, d, k, Exec::Sequential).map_err(|e| e.to_string())?;
        ensure(fixed.is_empty() != ne, || format!("({r},{d},{k}): torus-fixed planes disagree with nonemptiness"))?;
    }
    Ok("4 boundary triples match".into())
}

// ---------------------------------------------------------------------------
// 5-6: searches

/// `(d, m, pattern)` runs with every pair of degrees summing to `d + 2` or
/// more. The ring has exactly the pattern's variables.
pub const STRICT_RUNS: &[(u32, usize, &[u32])] = &[
    (3, 1, &[2, 3]),
    (3, 1, &[3, 3]),
    (3, 1, &[2, 3, 3]),
    (3, 1, &[3, 3, 3]),
    (4, 1, &[2, 4]),
    (4, 1, &[3, 3]),
    (4, 1, &[3, 4]),
    (4, 1, &[4, 4]),
    (4, 1, &[2, 4, 4]),
    (5, 1, &[2, 5]),
    (5, 1, &[3, 4]),
    (5, 1, &[3, 5]),
    (5, 1, &[4, 4]),
    (3, 2, &[2, 3, 3]),
    (3, 2, &[3, 3, 3]),
    (4, 2, &[3, 3, 3]),
];

/// Boundary runs: degree sums equal to `d + 1` are allowed.
pub const RELAXED_RUNS: &[(u32, usize, &[u32])] = &[(3, 1, &[2, 2]), (4, 1, &[2, 3])];

pub const SEARCH_LIMIT: Duration = Duration::from_secs(600);

pub struct SearchOutcome {
    pub strict: CriterionResult,
    pub tail: CriterionResult,
    pub reports: Vec<SearchReport>,
}

fn run_space(d: u32, m: usize, pattern: &[u32], c: DegreeConstraint, exec: Exec) -> Result<SearchReport, String> {
    let space = SearchSpace::new(gf(2), d, m, 0, pattern.to_vec(), c);
    hunt_counterexamples(&space, exec).map_err(|e| format!("{pattern:?} d={d} m={m}: {e}"))
}

/// The boundary witness shape: a single product `(a + c) b t` with
/// monomials `a b` and `c t` in some labelling, i.e. both coefficients
/// nonzero and the product has a factor in the span of two variables from
/// different monomials.
fn is_boundary_shape(inst: &SumProductIdentity) -> bool {
    let mons = inst.monomials();
    let block = |v: usize| mons.iter().position(|x| x.exps()[v] > 0);
    inst.m() == 1
        && inst.vanishing_indices().is_empty()
        && inst.products()[0].factors().iter().any(|l| {
            let s = l.support();
            s.len() == 2 && block(s[0]).is_some() && block(s[1]).is_some() && block(s[0]) != block(s[1])
        })
}

pub fn searches(exec: Exec) -> SearchOutcome {
    let start = Instant::now();
    let mut reports = Vec::new();
    let mut problems = Vec::new();
    let mut lines = Vec::new();
    let mut slowest = Duration::ZERO;
    for &(d, m, pat) in STRICT_RUNS {
        match run_space(d, m, pat, DegreeConstraint::Strict, exec) {
            Ok(rep) => {
                let t = Duration::from_millis(rep.wall_clock_ms as u64);
                slowest = slowest.max(t);
                if !rep.counterexamples.is_empty() {
                    problems.push(format!("{pat:?} d={d} m={m}: {} counterexamples", rep.counterexamples.len()));
                }
                if !rep.complete {
                    problems.push(format!("{pat:?} d={d} m={m}: incomplete"));
                }
                if t > SEARCH_LIMIT {
                    problems.push(format!("{pat:?} d={d} m={m}: {} ms", rep.wall_clock_ms));
                }
                lines.push(format!("{pat:?}/d{d}/m{m}:{}", rep.instances_examined));
                reports.push(rep);
            }
            Err(e) => problems.push(e),
        }
    }
    let mut witnesses = 0;
    for &(d, m, pat) in RELAXED_RUNS {
        match run_space(d, m, pat, DegreeConstraint::Relaxed, exec) {
            Ok(rep) => {
                for c in &rep.counterexamples {
                    match SumProductIdentity::from_json(c) {
                        Ok(inst) if is_boundary_shape(&inst) => witnesses += 1,
                        Ok(_) => {}
                        Err(e) => problems.push(format!("counterexample does not load: {e}")),
                    }
                }
                reports.push(rep);
            }
            Err(e) => problems.push(e),
        }
    }
    if witnesses == 0 {
        problems.push("no boundary witness under the relaxed constraint".into());
    }
    let elapsed = start.elapsed();
    let strict = CriterionResult {
        id: 5,
        name: "C-property searches".into(),
        passed: problems.is_empty(),
        check_passed: problems.is_empty(),
        elapsed_ms: slowest.as_millis(),
        limit_ms: SEARCH_LIMIT.as_millis(),
        detail: if problems.is_empty() {
            format!(
                "{} strict runs empty, {witnesses} boundary witnesses; instances {}; total {} ms",
                STRICT_RUNS.len(),
                lines.join(" "),
                elapsed.as_millis()
            )
        } else {
            problems.join("; ")
        },
    };

    let (applicable, violations) = reports
        .iter()
        .filter(|r| r.m == 1 && r.constraint == DegreeConstraint::Strict)
        .fold((0, 0), |(a, v), r| (a + r.tail_check.applicable, v + r.tail_check.violations));
    let ok = violations == 0 && applicable > 0;
    let tail = CriterionResult {
        id: 6,
        name: "tail vanishing".into(),
        passed: ok,
        check_passed: ok,
        elapsed_ms: 0,
        limit_ms: SEARCH_LIMIT.as_millis(),
        detail: format!("{applicable} applicable instances, {violations} violations"),
    };
    SearchOutcome { strict, tail, reports }
}

// ---------------------------------------------------------------------------
// 7-8: product rank

pub fn rank_engine() -> Result<String, String> {
    let e = |x: sumprod::prodrank::RankError| x.to_string();
    // det3: rank 4 ruled out with proof.
    let v = theorem_bound(4, 3, 5, 8, None).map_err(e)?;
    ensure(v.is_proven_exclusion(), || format!("det3 r=4: {v}"))?;
    let det4: Vec<bool> = (4..=6)
        .map(|r| theorem_bound(r, 4, 11, 15, None).map(|v| v.is_proven_exclusion()))
        .collect::<Result<_, _>>()
        .map_err(e)?;
    ensure(det4.iter().all(|&x| x), || format!("det4 4..6: {det4:?}"))?;
    let v = theorem_bound(6, 3, 9, 14, None).map_err(e)?;
    ensure(v.is_proven_exclusion(), || format!("Pf6 r=6: {v}"))?;
    let mut bounds = Vec::new();
    for (t, want) in [(Target::Det3, 5), (Target::Det4, 7), (Target::Pf6, 7)] {
        let rep = rank_bounds(t).map_err(e)?;
        ensure(rep.lower_bound == want, || format!("{t}: lower bound {}", rep.lower_bound))?;
        bounds.push(format!("{t}>={want}"));
    }
    Ok(format!("det3 r=4, det4 r=4..6, Pf6 r=6 ruled out (proven); {}", bounds.join(" ")))
}

pub fn cover_witnesses(exec: Exec, seed: u64) -> Result<String, String> {
    let cfg = CoverConfig { seed, ..CoverConfig::default() };
    let e = |x: sumprod::prodrank::RankError| x.to_string();
    let families = [det_cover(3, &cfg, exec).map_err(e)?, det_cover(4, &cfg, exec).map_err(e)?, pfaffian_cover(&cfg, exec).map_err(e)?];
    let mut parts = Vec::new();
    for (w, k) in families.iter().zip([5, 11, 9]) {
        ensure(w.k == k && w.samples.len() == 100 && w.all_pass(), || {
            format!("{}: k={} samples={} failures={}", w.target, w.k, w.samples.len(), w.failures())
        })?;
        parts.push(format!("{} dim {k}: 100/100", w.target));
    }
    Ok(parts.join(", "))
}

pub fn perm4() -> Result<String, String> {
    let cert = perm4_certificate().map_err(|e| e.to_string())?;
    let rep = replay(&cert).map_err(|e| e.to_string())?;
    ensure(rep.all_checks_pass(), || {
        let bad: Vec<&str> = rep.outcomes.iter().filter(|o| o.passed == Some(false)).map(|o| o.label.as_str()).collect();
        format!("failed steps: {bad:?}")
    })?;
    let linear = cert.steps.iter().filter(|s| matches!(s, Step::LinearAlgebraCheck { .. })).count();
    let imported = rep.imported();
    ensure(!imported.is_empty(), || "no imported facts listed".into())?;
    Ok(format!(
        "{} checks pass ({linear} linear-algebra), {} imported facts, bound {}",
        rep.checked(),
        imported.len(),
        cert.lower_bound
    ))
}

// ---------------------------------------------------------------------------
// 9: property suites

fn random_form(ctx: FieldCtx, p: u32, n: usize, rng: &mut ChaCha8Rng) -> LinearForm {
    loop {
        let c: Vec<i64> = (0..n).map(|_| rng.random_range(0..p) as i64).collect();
        if c.iter().any(|&x| x != 0) {
            return LinearForm::from_i64(ctx, &c);
        }
    }
}

/// Factor multiset and scalar, normalized so that every factor has leading
/// coefficient one.
fn normal_form(p: &ProductOfLinear) -> (String, Vec<String>) {
    let mut scalar = p.scalar().clone();
    let mut fs: Vec<String> = p
        .factors()
        .iter()
        .map(|l| {
            let (c, n) = l.normalized().expect("nonzero factor");
            scalar = &scalar * &c;
            n.to_string()
        })
        .collect();
    fs.sort();
    (scalar.to_string(), fs)
}

pub fn factor_round_trips(count: usize, seed: u64) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..count {
        let (p, ctx) = if i % 2 == 0 { (2, gf(2)) } else { (3, gf(3)) };
        let n = rng.random_range(2..=4);
        let d = rng.random_range(1..=3);
        let factors: Vec<LinearForm> = (0..d).map(|_| random_form(ctx, p, n, &mut rng)).collect();
        let scalar = ctx.from_i64(rng.random_range(1..p) as i64);
        let prod = ProductOfLinear::new(scalar, factors, n).map_err(|e| e.to_string())?;
        match factor_product(&prod.expand()).map_err(|e| e.to_string())? {
            Factorization::Split(back) => {
                ensure(normal_form(&back) == normal_form(&prod), || format!("{prod} came back as {back}"))?;
            }
            Factorization::NotSplit(why) => return Err(format!("{prod} reported {why:?}")),
        }
    }
    Ok(count)
}

/// Disjoint monomials on consecutive variables with the given degrees.
fn monomials(n: usize, degs: &[usize]) -> Vec<Monomial> {
    let mut next = 0;
    degs.iter()
        .map(|&g| {
            let vars: Vec<usize> = (next..next + g).collect();
            next += g;
            Monomial::from_vars(n, &vars).expect("fits")
        })
        .collect()
}

/// Single-product identities `x * rest` with `x` a variable of monomial
/// `i`; cancelling `x` must drop the degree and keep the identity.
pub fn cancel_suite(count: usize, seed: u64) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ctx = gf(3);
    let mut done = 0;
    while done < count {
        let d = rng.random_range(3..=4usize);
        let mut degs = vec![rng.random_range(2..d), rng.random_range(2..d)];
        degs.sort_unstable();
        if degs[0] + degs[1] < d + 1 {
            continue;
        }
        let n = degs[0] + degs[1] + 1;
        let mons = monomials(n, &degs);
        let i = rng.random_range(0..2);
        let vars_i = mons[i].vars();
        let x = vars_i[rng.random_range(0..vars_i.len())];
        // Product = x * (the other variables of some monomial j, scaled)
        // * random forms, so that it lies in the ideal.
        let j = rng.random_range(0..2);
        let mut factors = vec![LinearForm::var(ctx, n, x)];
        for v in mons[j].vars() {
            if j == i && v == x {
                continue;
            }
            let c = ctx.from_i64(rng.random_range(1..3));
            factors.push(LinearForm::var(ctx, n, v).scale(&c));
        }
        while factors.len() < d {
            factors.push(random_form(ctx, 3, n, &mut rng));
        }
        if factors.len() > d {
            continue;
        }
        let prod = ProductOfLinear::new(ctx.one(), factors, n).map_err(|e| e.to_string())?;
        let inst = match SumProductIdentity::from_products(d as u32, 0, DegreeConstraint::Relaxed, vec![prod.clone()], mons)
            .map_err(|e| e.to_string())?
        {
            Some(inst) => inst,
            None => return Err(format!("{prod} should lie in the monomial ideal")),
        };
        // x divides every coefficient except the i-th one.
        let c = cancel(&inst, x, i).map_err(|e| format!("cancel refused {prod} by x{x} at {i} ({:?}): {e}", inst.monomials()))?;
        ensure(c.d() + 1 == inst.d(), || "degree did not drop".into())?;
        let xpoly = LinearForm::var(ctx, n, x).to_poly();
        let back = &c.products()[0].expand() * &xpoly;
        ensure(back == prod.expand(), || format!("product changed for {prod}"))?;
        done += 1;
    }
    Ok(done)
}

/// Products that are a relabelled copy of the monomials, with factor
/// scalings whose product is one.
pub fn match_suite(count: usize, seed: u64) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ctx = gf(5);
    for _ in 0..count {
        let nmon = rng.random_range(2..=4usize);
        let degs: Vec<usize> = (0..nmon).map(|_| rng.random_range(2..=3)).collect();
        let n: usize = degs.iter().sum();
        let mons = monomials(n, &degs);
        let mut order: Vec<usize> = (0..nmon).collect();
        order.shuffle(&mut rng);
        let products: Vec<ProductOfLinear> = order
            .iter()
            .map(|&t| {
                let vars = mons[t].vars();
                let mut scal: Vec<_> = (1..vars.len()).map(|_| ctx.from_i64(rng.random_range(1..5))).collect();
                let prod = scal.iter().fold(ctx.one(), |a, c| &a * c);
                scal.push(prod.inv().expect("unit"));
                let mut fs: Vec<LinearForm> = vars.iter().zip(&scal).map(|(&v, c)| LinearForm::var(ctx, n, v).scale(c)).collect();
                fs.shuffle(&mut rng);
                ProductOfLinear::new(ctx.one(), fs, n).expect("nonzero")
            })
            .collect();
        match match_products(&products, &mons).map_err(|e| e.to_string())? {
            MatchResult::Matched(sigma) => ensure(sigma == order, || format!("matched {sigma:?}, planted {order:?}"))?,
            MatchResult::NoMatch => return Err("no match on a conforming instance".into()),
        }
    }
    Ok(count)
}

fn permute_rows(l: &KPlane, perm: &[usize]) -> Result<KPlane, PlaneError> {
    let params = l.params();
    let b = l.matrix();
    let mut out = Matrix::zeros(l.ctx(), b.nrows(), b.ncols());
    for (i, &src) in perm.iter().enumerate() {
        for j in 0..params.d {
            for a in 0..b.nrows() {
                out.set(a, params.col(i, j), b.get(a, params.col(src, j)).clone());
            }
        }
    }
    KPlane::new(params, out)
}

/// The lambda multiset does not depend on the row order or the basis.
pub fn profile_suite(count: usize, seed: u64) -> Result<usize, String> {
    let ctx = gf(101);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shapes = [(4usize, 3usize, 5usize), (4, 4, 7), (5, 3, 6), (6, 3, 8), (3, 3, 3)];
    let mut done = 0;
    let mut draws = 0u64;
    while done < count {
        draws += 1;
        if draws > 20 * count as u64 {
            return Err(format!("only {done} non-one-split planes sampled"));
        }
        let (r, d, k) = shapes[rng.random_range(0..shapes.len())];
        let Some(l) = sample_member_plane(ctx, r, d, k, true, rng.random()).map_err(|e| e.to_string())? else {
            continue;
        };
        let base = match lambda_profile(&l) {
            Ok(p) => p.lambdas,
            Err(PlaneError::OneSplitDetected { .. }) => continue,
            Err(e) => return Err(e.to_string()),
        };
        ensure(base.iter().sum::<usize>() == k + 1, || format!("profile {base:?} does not sum to k+1"))?;
        let mut perm: Vec<usize> = (0..r).collect();
        perm.shuffle(&mut rng);
        let moved = permute_rows(&l, &perm).map_err(|e| e.to_string())?;
        let g = loop {
            let rows: Vec<Vec<i64>> = (0..=k).map(|_| (0..=k).map(|_| rng.random_range(0..101)).collect()).collect();
            let g = Matrix::from_i64(ctx, &rows);
            if g.rank() == k + 1 {
                break g;
            }
        };
        let moved = moved.change_basis(&g).map_err(|e| e.to_string())?;
        let other = lambda_profile(&moved).map_err(|e| e.to_string())?.lambdas;
        ensure(other == base, || format!("({r},{d},{k}): {base:?} vs {other:?}"))?;
        done += 1;
    }
    Ok(done)
}

pub fn property_suites(seed: u64) -> Result<String, String> {
    let f = factor_round_trips(10_000, seed)?;
    let c = cancel_suite(1_000, seed + 1)?;
    let m = match_suite(1_000, seed + 2)?;
    let p = profile_suite(1_000, seed + 3)?;
    Ok(format!("factor {f}, cancel {c}, match {m}, profile {p}; zero failures"))
}

// ---------------------------------------------------------------------------

/// Runs every criterion. The randomized parts use `seed`.
pub fn run(jobs: usize, seed: u64) -> ReproReport {
    let exec = Exec::from_jobs(jobs);
    let s = Duration::from_secs;
    let mut criteria = vec![
        timed(1, "census table", s(1), census_table),
        timed(2, "dimension identity", s(1), dimension_identity),
        timed(3, "torus fixed planes", s(10), || torus_counts(exec)),
        timed(4, "sharp witnesses", s(5), sharp_witnesses),
    ];
    let search = searches(exec);
    criteria.push(search.strict);
    criteria.push(search.tail);
    let rank = timed(7, "rank engine", s(1), rank_engine);
    let cover = timed(7, "cover witnesses", s(30), || cover_witnesses(exec, seed));
    criteria.push(rank);
    criteria.push(cover);
    criteria.push(timed(8, "perm4 certificate", s(5), perm4));
    criteria.push(timed(9, "property suites", s(600), || property_suites(seed)));
    criteria.push(timed(10, "connectedness", s(1), connectedness));
    ReproReport {
        schema: REPORT_SCHEMA.into(),
        jobs,
        seed,
        criteria,
        searches: search.reports,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_shape_detects_the_textbook_witness() {
        let ctx = FieldCtx::rationals();
        let n = 4;
        // (a + c) b d = d * ab + b * cd
        let p = ProductOfLinear::new(
            ctx.one(),
            vec![LinearForm::from_i64(ctx, &[1, 0, 1, 0]), LinearForm::var(ctx, n, 1), LinearForm::var(ctx, n, 3)],
            n,
        )
        .unwrap();
        let inst = SumProductIdentity::from_products(3, 0, DegreeConstraint::Relaxed, vec![p], monomials(n, &[2, 2]))
            .unwrap()
            .unwrap();
        assert!(is_boundary_shape(&inst));
    }

    #[test]
    fn small_suites_pass() {
        assert_eq!(factor_round_trips(200, 1).unwrap(), 200);
        assert_eq!(cancel_suite(50, 2).unwrap(), 50);
        assert_eq!(match_suite(50, 3).unwrap(), 50);
        assert_eq!(profile_suite(30, 4).unwrap(), 30);
    }
}
