mod common;

use std::time::{Duration, Instant};

use qhcert::certify::*;
use qhcert::decay::*;
use qhcert::distgeo::*;
use qhcert::symbols::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn positive(name: &str, grid: &GridSpec) -> Result<(QhSymbol, DirectionOutcome), String> {
    let sym = builtin(name).map_err(|e| e.to_string())?;
    let out = run_direction(&sym, Direction::XiPositive, grid, 2024).map_err(|e| e.to_string())?;
    Ok((sym, out))
}

fn lf1_and_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let ell = rng.gen_range(1.0..=4.0);
        let tau = rng.gen_range(0.0..=10.0);
        let g = rng.gen_range(-10.0..=10.0);
        let lhs = f_ell(tau + g, ell) - f_ell(g, ell);
        ensure(lhs >= f_ell(tau / 2.0, ell) * (1.0 - 1e-12), || format!("LF1 fails at ell={ell} tau={tau} g={g}"))?;

        let v = DistoPoint::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let w = DistoPoint::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let (dv, dw) = (dressing(v, ell), dressing(w, ell));
        let dot = dv.t * dw.t + dv.s * dw.s;
        let det = dv.t * dw.s - dv.s * dw.t;
        worst = worst.max((dscalar(v, w, ell) - dot).abs() / dot.abs().max(1.0));
        worst = worst.max((ddet(v, w, ell) - det).abs() / det.abs().max(1.0));

        let dir = CirclePoint::from_angle(rng.gen_range(0.0..std::f64::consts::TAU), ell);
        let d0 = ddet(dir.point(), v, ell);
        let x = line_step(v, &dir, Heading::Outgoing, tau, ell);
        worst = worst.max((ddet(dir.point(), x, ell) - d0).abs() / d0.abs().max(1.0));
    }
    ensure(worst <= 1e-10, || format!("identity error {worst:e}"))?;
    Ok(format!("10^4 triples, identity error {worst:.1e}"))
}

fn jacobian_closed_form() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst, mut pieces): (f64, usize) = (0.0, 0);
    for n in 1..=4 {
        for ell in [1.0, 1.5, 2.0, 3.0] {
            for _ in 0..20 {
                let b = common::random_branch(n, ell, &mut rng);
                let (k, err) = common::branch_fd_error(&b, ell, &mut rng);
                pieces += k;
                worst = worst.max(err);
            }
        }
    }
    ensure(worst <= 1e-6, || format!("worst relative error {worst:e}"))?;
    Ok(format!("320 plans, {pieces} pieces, worst {worst:.1e}"))
}

fn slope_within(r: &DecayReport, label: &str) -> Result<(), String> {
    ensure(r.relative_slope_error() <= 0.10, || {
        format!("{label}: slope {:.4} vs {:.4}", r.fitted_slope, r.predicted_slope)
    })
}

fn sweep_default(sym: &QhSymbol, cert: &Certificate) -> Result<DecayReport, String> {
    let spec = SweepSpec { xi_min: 1e2, xi_max: 1e5, n_points: 16 };
    sweep_and_fit(cert, sym, &spec, &GridSpec::default()).map_err(|e| e.to_string())
}

fn maire(ell: i64) -> Outcome {
    let name = format!("maire-l{ell}");
    let (sym, out) = positive(&name, &GridSpec::default())?;
    ensure(out.verdict.pass, || format!("{name}: check fails {:?}", out.verdict.failed_items()))?;
    ensure(out.verdict.p_global == Some(Rational::from_integer(1)), || format!("p = {:?}", out.verdict.p_global))?;
    ensure(sym.weights.m == Rational::from_integer(2 * ell + 1), || format!("m = {}", sym.weights.m))?;
    let cert = out.certificate.ok_or("no certificate")?;
    ensure(cert.pass, || format!("certificate fails: {:?}", cert.witnesses))?;
    ensure(cert.a == Rational::from_integer(2 * ell + 1), || format!("a = {}", cert.a))?;
    let r = sweep_default(&sym, &cert)?;
    slope_within(&r, &name)?;
    Ok(format!("a = {}, slope {:.4} vs {:.4}", cert.a, r.fitted_slope, r.predicted_slope))
}

fn jt_q8() -> Outcome {
    let sym = builtin("jt-q8").map_err(|e| e.to_string())?;
    ensure(sym.ell() == 2.0 && sym.weights.m == Rational::from_integer(8), || {
        format!("ell = {}, m = {}", sym.ell(), sym.weights.m)
    })?;
    let mut notes = Vec::new();
    for direction in [Direction::XiPositive, Direction::XiNegative] {
        let out = run_direction(&sym, direction, &GridSpec::default(), 2024).map_err(|e| e.to_string())?;
        let cert = out.certificate.ok_or_else(|| format!("{direction:?}: {:?}", out.refusal))?;
        ensure(cert.pass, || format!("{direction:?}: {:?}", cert.witnesses))?;
        ensure(cert.s_order == Rational::new(1, 8), || format!("s_order = {}", cert.s_order))?;
        let r = sweep_default(&out.symbol, &cert)?;
        slope_within(&r, &format!("{direction:?}"))?;
        notes.push(format!("{:.4}", r.fitted_slope));
    }
    Ok(format!("s_order 1/8, slopes {} vs -0.1250", notes.join(" / ")))
}

fn quasielliptic() -> Outcome {
    let (sym, out) = positive("quasielliptic-l2-m4", &GridSpec::default())?;
    let cert = out.certificate.ok_or("no certificate")?;
    ensure(cert.pass, || format!("{:?}", cert.witnesses))?;
    ensure(cert.c3 <= 16.0 * 1.05, || format!("C3 = {}", cert.c3))?;
    let xi = 1e4;
    let m = kernel_norm(&sym, &cert.plans, xi, &GridSpec::default()).map_err(|e| e.to_string())?;
    let w = watson_asymptote(xi, cert.a_value(), cert.c3);
    let rel = (m - w).abs() / w;
    ensure(rel <= 0.05, || format!("M(1e4) = {m:.5e}, Watson {w:.5e}, off by {:.1}%", 100.0 * rel))?;
    Ok(format!("C3 = {:.4}, M(1e4) = {m:.4e} vs {w:.4e}", cert.c3))
}

fn negative_controls() -> Outcome {
    let grid = GridSpec::default();
    let negmax = run_direction(&builtin("negmax").unwrap(), Direction::XiPositive, &grid, 0).map_err(|e| e.to_string())?;
    ensure(!negmax.verdict.item(2).pass, || "negmax passes item 2".into())?;
    ensure(negmax.certificate.is_none() && negmax.verdict.item(2).witness_theta.is_some(), || {
        "negmax certificate not refused with a witness".into()
    })?;
    let qe = builtin("quasielliptic-l2-m4").unwrap();
    let all_neg = run_direction(&qe, Direction::XiNegative, &grid, 0).map_err(|e| e.to_string())?;
    ensure(!all_neg.verdict.item(1).pass, || "all-negative passes item 1".into())?;
    ensure(all_neg.certificate.is_none() && all_neg.verdict.item(1).witness_theta.is_some(), || {
        "all-negative certificate not refused with a witness".into()
    })?;
    Ok(format!(
        "negmax item 2 at {:.6}, all-negative item 1 at {:.6}",
        negmax.verdict.item(2).witness_theta.unwrap(),
        all_neg.verdict.item(1).witness_theta.unwrap()
    ))
}

fn refinement() -> Outcome {
    let coarse = GridSpec::default().scaled(0.5);
    let fine = GridSpec::default();
    let mut worst: (f64, String) = (0.0, String::new());
    for (name, _) in BUILTINS {
        let sym = builtin(name).unwrap();
        for direction in [Direction::XiPositive, Direction::XiNegative] {
            let a = run_direction(&sym, direction, &coarse, 2024).map_err(|e| e.to_string())?;
            let b = run_direction(&sym, direction, &fine, 2024).map_err(|e| e.to_string())?;
            ensure(a.pass() == b.pass(), || format!("{name} {direction:?}: outcome changes"))?;
            if let (Some(x), Some(y)) = (&a.certificate, &b.certificate) {
                for (label, u, v) in [("C1", x.c1, y.c1), ("C2", x.c2, y.c2), ("C3", x.c3, y.c3)] {
                    let rel = (u - v).abs() / u.abs().max(v.abs());
                    ensure(rel < 0.05, || format!("{name} {direction:?}: {label} {u} -> {v}"))?;
                    if rel > worst.0 {
                        worst = (rel, format!("{name} {label}"));
                    }
                }
            }
        }
    }
    Ok(format!("largest change {:.2}% ({})", 100.0 * worst.0, worst.1))
}

fn main() {
    let criteria: Vec<(&str, Duration, Box<dyn Fn() -> Outcome>)> = vec![
        ("1 disto-geometry identities", Duration::from_secs(5), Box::new(lf1_and_identities)),
        ("2 closed-form Jacobians", Duration::from_secs(30), Box::new(jacobian_closed_form)),
        ("3a maire ell = 1", Duration::from_secs(180), Box::new(|| maire(1))),
        ("3b maire ell = 2", Duration::from_secs(180), Box::new(|| maire(2))),
        ("3c maire ell = 3", Duration::from_secs(180), Box::new(|| maire(3))),
        ("4 jt-q8 after swap", Duration::from_secs(180), Box::new(jt_q8)),
        ("5 quasielliptic", Duration::from_secs(60), Box::new(quasielliptic)),
        ("6 negative controls", Duration::from_secs(10), Box::new(negative_controls)),
        ("7 refinement stability", Duration::from_secs(600), Box::new(refinement)),
    ];
    let mut failed = 0;
    for (label, budget, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if took > budget => Err(format!("{msg}; took {took:.1?} > {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(msg) => println!("PASS {label}: {msg} [{took:.1?}]"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {label}: {msg} [{took:.1?}]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
