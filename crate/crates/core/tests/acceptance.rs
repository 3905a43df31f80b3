//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest harness so the
//! lines always print in order.

mod common;

use std::time::{Duration, Instant};

use common::*;
use conformal_core::cones::{
    catalog, cone_constants, lambda_star, mu_minus, Cone, FuncKind, MuMinus, SymFunc, MU_TOL,
};
use conformal_core::field::JetMethod;
use conformal_core::hessian::{
    boundary_values, one_var_spectrum, radial_eigenvalues, ricci_transform, spectrum,
    BoundaryConvention, RicciDirection, RicciMap,
};
use conformal_core::liouville::{
    counterexample, critical_lambda, kelvin_gap, Counterexample, GridSpec,
};
use conformal_core::mobius::pushforward;
use conformal_core::ode::{
    first_integral, integrate_general, integrate_model, predicts_blowup, threshold_w0, OdeParams,
    OdeState,
};
use conformal_core::{BubbleParams, EigList, Jet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const INVARIANCE_TOL: f64 = 1e-9;
const BUBBLE_TOL: f64 = 1e-10;
const CLOSED_FORM_TOL: f64 = 1e-10;
const MU_MINUS_TOL: f64 = 1e-8;
const DRIFT_TOL: f64 = 1e-7;
const DRIFT_HORIZON: f64 = 50.0;
const THRESHOLD_TMAX: f64 = 200.0;
const I0_BAND: f64 = 1e-3;
const LAMBDA_TOL: f64 = 1e-5;
const KELVIN_TOL: f64 = 1e-6;
const XN_ONLY_TOL: f64 = 1e-8;
const NONEXISTENCE_TMAX: f64 = 200.0;
const LONG_TMAX: f64 = 1e5;
const RICCI_TOL: f64 = 1e-10;

const THRESHOLD_GRID: [(f64, f64); 3] = [(3.0, 6.0), (2.0, 4.0), (1.5, 3.0)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn invariance() -> Outcome {
    let mut r = rng(101);
    let (mut pairs, mut worst) = (0, 0.0f64);
    let mut per_dim = [0usize; 6];
    while pairs < 100 {
        let n = 2 + pairs % 4;
        let (v, sing) = random_field(&mut r, n);
        let m = random_map(&mut r, n);
        let Some((y, image)) = safe_point(&mut r, &m, sing.as_deref()) else {
            continue;
        };
        let pushed = pushforward(&v, &m).unwrap();
        let a = spectrum(&pushed.jet(&y, JetMethod::Analytic).unwrap()).unwrap();
        let b = spectrum(&v.jet(&image, JetMethod::Analytic).unwrap()).unwrap();
        worst = worst.max(a.max_abs_diff(&b));
        per_dim[n] += 1;
        pairs += 1;
    }
    Outcome {
        pass: worst <= INVARIANCE_TOL,
        detail: format!(
            "{pairs} pairs (n=2..5: {:?}), max gap {worst:.3e} <= {INVARIANCE_TOL:e}",
            &per_dim[2..]
        ),
    }
}

fn bubbles() -> Outcome {
    let mut r = rng(202);
    let (mut eig, mut neu) = (0.0f64, 0.0f64);
    for i in 0..50 {
        let n = 2 + i % 4;
        let p = random_bubble_params(&mut r, n);
        let v = bubble_field(&p);
        let want = p.eigenvalue();
        for _ in 0..10 {
            let x: Vec<f64> = (0..n).map(|_| r.gen_range(-3.0..3.0)).collect();
            let lam = spectrum(&v.jet(&x, JetMethod::Analytic).unwrap()).unwrap();
            for l in lam.as_slice() {
                eig = eig.max((l - want).abs());
            }
            let mut xb = x.clone();
            xb[n - 1] = 0.0;
            let c = boundary_values(
                &v.jet(&xb, JetMethod::Analytic).unwrap(),
                BoundaryConvention::Neumann,
            )
            .unwrap();
            neu = neu.max((c - p.neumann()).abs());
        }
    }
    Outcome {
        pass: eig <= BUBBLE_TOL && neu <= BUBBLE_TOL,
        detail: format!(
            "50 bubbles, eigenvalue gap {eig:.3e}, Neumann gap {neu:.3e} (tol {BUBBLE_TOL:e})"
        ),
    }
}

fn closed_forms() -> Outcome {
    let mut r = rng(303);
    let (mut rad, mut one) = (0.0f64, 0.0f64);
    for i in 0..200 {
        let n = 2 + i % 5;
        let (v, v1, v2) = (
            r.gen_range(-2.0..2.0),
            r.gen_range(-3.0..3.0),
            r.gen_range(-3.0..3.0),
        );
        let x: Vec<f64> = (0..n).map(|_| r.gen_range(-2.0..2.0)).collect();
        if i % 2 == 0 {
            let center: Vec<f64> = (0..n).map(|_| r.gen_range(-2.0..2.0)).collect();
            let rr = conformal_core::linalg::dist(&x, &center);
            if rr < 0.1 {
                continue;
            }
            let generic = spectrum(&Jet::radial(x.clone(), &center, rr, v, v1, v2)).unwrap();
            let closed = radial_eigenvalues(n, rr, v, v1, v2).unwrap();
            rad = rad.max(generic.max_abs_diff(&closed) / closed.norm().max(1.0));
        } else {
            let generic = spectrum(&Jet::one_var(x, v, v1, v2)).unwrap();
            let closed = one_var_spectrum(n, v, v1, v2);
            one = one.max(generic.max_abs_diff(&closed) / closed.norm().max(1.0));
        }
    }
    Outcome {
        pass: rad <= CLOSED_FORM_TOL && one <= CLOSED_FORM_TOL,
        detail: format!(
            "200 jets, radial gap {rad:.3e}, one-variable gap {one:.3e} (tol {CLOSED_FORM_TOL:e})"
        ),
    }
}

fn cone_constants_check() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for n in 2..=6 {
        let m = mu_minus(&Cone::gamma_k(n, 1).unwrap(), MU_TOL);
        let gap = (m.value() - (n as f64 - 1.0)).abs();
        if gap.is_nan() || gap > MU_MINUS_TOL {
            pass = false;
            notes.push(format!("gamma_1 n={n}: {m:?}"));
        }
        for k in 2..=n {
            if !mu_minus(&Cone::gamma_k(n, k).unwrap(), MU_TOL).is_unbounded() {
                pass = false;
                notes.push(format!("gamma_{k} n={n} bounded"));
            }
        }
        for c in catalog(n) {
            let k = cone_constants(&c);
            let small = matches!(k.mu_minus, MuMinus::Finite(m) if m <= 1.0 + MU_MINUS_TOL);
            if k.lambda_star_in_closure != small || !k.consistent {
                pass = false;
                notes.push(format!("{} n={n}: {k:?}", c.name()));
            }
        }
    }
    let detail = if notes.is_empty() {
        "gamma_1 gives n-1, gamma_k (k>=2) unbounded, lambda* flag matches mu<=1 on the catalog for n=2..6".into()
    } else {
        notes.join("; ")
    };
    Outcome { pass, detail }
}

fn random_model_cases(r: &mut ChaCha8Rng, count: usize) -> Vec<(f64, f64, f64, f64)> {
    (0..count)
        .map(|_| {
            let mu = r.gen_range(1.2..5.0);
            let p = mu + 1.0 + r.gen_range(0.2..4.0);
            (mu, p, r.gen_range(-1.5..1.5), r.gen_range(-1.0..4.0))
        })
        .collect()
}

fn threshold_cases() -> Vec<(f64, f64, f64, f64)> {
    let mut out = Vec::new();
    for (mu, p) in THRESHOLD_GRID {
        for v0 in [-1.0, 0.0, 1.0] {
            let w = threshold_w0(mu, p, v0).unwrap();
            for s in [0.90, 0.95, 1.05, 1.10] {
                out.push((mu, p, v0, s * w));
            }
        }
    }
    out
}

fn drift() -> Outcome {
    let mut cases = threshold_cases();
    cases.extend(random_model_cases(&mut rng(505), 100));
    let mut worst = 0.0f64;
    for &(mu, p, v0, w0) in &cases {
        let t = integrate_model(&OdeParams::new(mu, p).unwrap(), v0, w0, DRIFT_HORIZON).unwrap();
        worst = worst.max(t.max_drift);
    }
    Outcome {
        pass: worst <= DRIFT_TOL,
        detail: format!(
            "{} trajectories to t={DRIFT_HORIZON}, max drift {worst:.3e} <= {DRIFT_TOL:e}",
            cases.len()
        ),
    }
}

fn threshold() -> Outcome {
    let mut grid_bad = Vec::new();
    for (i, &(mu, p, v0, w0)) in threshold_cases().iter().enumerate() {
        let t = integrate_model(&OdeParams::new(mu, p).unwrap(), v0, w0, THRESHOLD_TMAX).unwrap();
        let expect_blowup = i % 4 < 2;
        if t.classification.is_blowup() != expect_blowup {
            grid_bad.push(format!("(mu={mu}, p={p}, v0={v0}, w0={w0:.4})"));
        }
    }
    let (mut checked, mut skipped, mut bad) = (0, 0, 0);
    for (mu, p, v0, w0) in random_model_cases(&mut rng(606), 200) {
        let params = OdeParams::new(mu, p).unwrap();
        let i0 = first_integral(
            &params,
            &OdeState {
                t: 0.0,
                phi: v0.exp(),
                w: w0,
            },
        )
        .unwrap();
        if i0.abs() <= I0_BAND {
            skipped += 1;
            continue;
        }
        checked += 1;
        let t = integrate_model(&params, v0, w0, THRESHOLD_TMAX).unwrap();
        if t.classification.is_blowup() != predicts_blowup(&params, v0, w0).unwrap() {
            bad += 1;
        }
    }
    Outcome {
        pass: grid_bad.is_empty() && bad == 0,
        detail: format!(
            "grid 36 runs, {} mismatches {:?}; random {checked} checked, {skipped} in band, {bad} mismatches",
            grid_bad.len(),
            grid_bad
        ),
    }
}

fn template(n: usize) -> GridSpec {
    let mut lo = vec![-3.0; n];
    lo[n - 1] = 0.0;
    GridSpec::uniform(lo, vec![3.0; n], 7).excluding(vec![0.0; n], 1.0)
}

fn spheres() -> Outcome {
    let mut r = rng(707);
    let (mut lam_gap, mut kel, mut graze) = (0.0f64, 0.0f64, true);
    let mut runs = 0;
    for i in 0..25 {
        let n = 2 + i % 3;
        let p = random_bubble_params(&mut r, n);
        let v = bubble_field(&p);
        // first 20 at the origin, then boundary centers (x', 0)
        let mut x = vec![0.0; n];
        if i >= 20 {
            for c in x.iter_mut().take(n - 1) {
                *c = r.gen_range(-1.0..1.0);
            }
        }
        let d2: f64 = x.iter().zip(&p.xbar).map(|(a, b)| (a - b) * (a - b)).sum();
        let want = ((1.0 + p.b * d2) / p.b).sqrt();
        let tpl = GridSpec::uniform(
            x.iter()
                .enumerate()
                .map(|(k, c)| if k == n - 1 { 0.0 } else { c - 3.0 })
                .collect(),
            x.iter().map(|c| c + 3.0).collect(),
            7,
        )
        .excluding(x.clone(), 1.0);
        let tpl = if i < 20 { template(n) } else { tpl };
        let rep = critical_lambda(&v, &x, &tpl, 1e-3).unwrap();
        let got = rep.lambda.value();
        lam_gap = lam_gap.max((got - want).abs());
        graze &= rep.grazing_consistent;
        kel = kel.max(kelvin_gap(&v, &x, want, &tpl).unwrap());
        runs += 1;
    }
    Outcome {
        pass: lam_gap <= LAMBDA_TOL && kel <= KELVIN_TOL,
        detail: format!(
            "{runs} bubbles (20 at origin, 5 boundary centers), lambda gap {lam_gap:.3e} <= {LAMBDA_TOL:e}, \
             Kelvin gap {kel:.3e} <= {KELVIN_TOL:e}, grazing consistent {graze}"
        ),
    }
}

fn catalog_examples() -> Outcome {
    let mut fails = Vec::new();
    let mut count = 0;
    let mut run = |k: Counterexample, seed: u64, fails: &mut Vec<String>| {
        let (_, rep) = counterexample(&k, 60, seed).unwrap();
        count += 1;
        if !rep.pass {
            fails.push(format!(
                "{k:?}: {:?}",
                rep.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>()
            ));
        }
        rep
    };
    for n in 2..=5 {
        for alpha in [0.3, 1.0, 2.5] {
            run(Counterexample::LogPower { n, alpha }, n as u64, &mut fails);
        }
    }
    let barrier_cones = [
        (Cone::min_mu(4, 3.0).unwrap(), [1.5, 2.0, 3.0]),
        (Cone::gamma_k(4, 1).unwrap(), [1.5, 2.0, 2.5]),
        (Cone::g_p(4, 1).unwrap(), [1.5, 2.0, 4.0]),
    ];
    for (cone, mus) in barrier_cones {
        for mu in mus {
            run(
                Counterexample::Barrier {
                    n: 4,
                    mu,
                    delta: 0.01f64.powf(mu - 1.0),
                    c: 1.0,
                    cone: cone.clone(),
                },
                8,
                &mut fails,
            );
        }
    }
    let mut xn_worst = 0.0f64;
    for (n, mu, c) in [(3, 3.0, 1.0), (3, 2.5, 0.5), (4, 4.0, 2.0)] {
        let rep = run(Counterexample::XnOnly { n, mu, c }, 9, &mut fails);
        let v = rep.verify.unwrap();
        xn_worst = xn_worst
            .max(v.interior_residual_max)
            .max(v.boundary_residual_max);
    }
    if xn_worst > XN_ONLY_TOL {
        fails.push(format!("xn_only residual {xn_worst:e}"));
    }
    Outcome {
        pass: fails.is_empty(),
        detail: if fails.is_empty() {
            format!("{count} catalog instances pass, xn_only residual {xn_worst:.3e} <= {XN_ONLY_TOL:e}")
        } else {
            fails.join("; ")
        },
    }
}

/// Affine-cone runs from random data; returns (blow-ups, cone exits, runs that reached `t_max`, errors).
fn affine_sweep(
    r: &mut ChaCha8Rng,
    count: usize,
    bc_range: (f64, f64),
    v0_range: (f64, f64),
    t_max: f64,
) -> (usize, usize, Vec<String>, Vec<String>) {
    let (mut blowups, mut exits, mut reached, mut errors) = (0, 0, Vec::new(), Vec::new());
    for i in 0..count {
        let n = 2 + i % 4;
        let mu = r.gen_range(1.5..4.0);
        let bc = r.gen_range(bc_range.0..bc_range.1);
        let v0 = r.gen_range(v0_range.0..v0_range.1);
        let p = if i % 2 == 0 { 0.0 } else { mu + 1.0 };
        let f = SymFunc::new(n, FuncKind::Affine(mu)).unwrap();
        let cone = Cone::affine(n, mu).unwrap();
        match integrate_general(&f, &cone, p, bc, v0, t_max) {
            Ok(t) if t.reached_in_cone(t_max) => reached.push(format!(
                "(n={n}, mu={mu:.3}, bc={bc:.3}, v0={v0:.3}, p={p:.3})"
            )),
            Ok(t) if t.classification.is_blowup() => blowups += 1,
            Ok(_) => exits += 1,
            Err(e) => errors.push(e.to_string()),
        }
    }
    (blowups, exits, reached, errors)
}

// In the critical case p = mu + 1 the blow-up time grows like exp(theta I / 2), so a fixed
// horizon only decides data with moderate first integral; the long run covers larger data.
fn nonexistence() -> Outcome {
    let mut r = rng(909);
    let (b, x, reached, errors) =
        affine_sweep(&mut r, 30, (0.2, 2.0), (-1.0, 0.0), NONEXISTENCE_TMAX);
    let (lb, lx, lreached, lerrors) = affine_sweep(&mut r, 10, (0.2, 1.0), (0.0, 0.5), LONG_TMAX);
    Outcome {
        pass: reached.is_empty() && errors.is_empty() && lreached.is_empty() && lerrors.is_empty(),
        detail: format!(
            "30 runs to t={NONEXISTENCE_TMAX}: {b} blow up, {x} leave the cone, reached {reached:?}, errors {errors:?}; \
             10 runs to t={LONG_TMAX:e}: {lb} blow up, {lx} leave the cone, reached {lreached:?}, errors {lerrors:?}"
        ),
    }
}

fn ricci() -> Outcome {
    let mut r = rng(1010);
    let mut dir = 0.0f64;
    for n in 3..=7 {
        let t = RicciMap::new(n).unwrap().apply(&lambda_star(n));
        let mut want = vec![-2.0 * (n as f64 - 2.0); n];
        want[0] = 0.0;
        for (a, b) in t.iter().zip(&want) {
            dir = dir.max((a - b).abs());
        }
    }
    let mut bub = 0.0f64;
    for i in 0..20 {
        let n = 3 + i % 4;
        let a = r.gen_range(0.5..3.0);
        let b = a * a / (4.0 * (n as f64 - 1.0));
        let p = BubbleParams::new(a, b, (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap();
        let v = bubble_field(&p);
        for _ in 0..5 {
            let x: Vec<f64> = (0..n).map(|_| r.gen_range(-3.0..3.0)).collect();
            let lam = spectrum(&v.jet(&x, JetMethod::Analytic).unwrap()).unwrap();
            let ric = ricci_transform(&lam, RicciDirection::SchoutenToRicci).unwrap();
            bub = bub.max(ric.max_abs_diff(&EigList::from_unsorted(vec![1.0; n])));
        }
    }
    Outcome {
        pass: dir <= RICCI_TOL && bub <= RICCI_TOL,
        detail: format!("T lambda* gap {dir:.3e}, bubble Ricci gap {bub:.3e} (tol {RICCI_TOL:e})"),
    }
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("Mobius invariance", Duration::from_secs(10), invariance),
        ("bubble identities", Duration::from_secs(5), bubbles),
        (
            "closed-form eigenvalues",
            Duration::from_secs(5),
            closed_forms,
        ),
        (
            "cone constants",
            Duration::from_secs(5),
            cone_constants_check,
        ),
        ("first-integral drift", Duration::from_secs(10), drift),
        ("blow-up threshold", Duration::from_secs(60), threshold),
        ("moving spheres", Duration::from_secs(60), spheres),
        (
            "counterexample catalog",
            Duration::from_secs(10),
            catalog_examples,
        ),
        ("nonexistence sweep", Duration::from_secs(60), nonexistence),
        ("Ricci map", Duration::from_secs(5), ricci),
    ];
    let mut failed = 0;
    for (k, (name, budget, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = f();
        let took = start.elapsed();
        let pass = out.pass && took <= *budget;
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {}: {name}: {} [{:.2}s of {}s]",
            if pass { "PASS" } else { "FAIL" },
            k + 1,
            out.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
