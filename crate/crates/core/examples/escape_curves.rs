//! Sector plans and sampled escape curves as CSV on stdout.
//!
//! `cargo run --example escape_curves -- jt-q8 > curves.csv`

use qhcert::circle::{check_h2, DEFAULT_SAMPLES};
use qhcert::distgeo::{ray_point, rho, CirclePoint};
use qhcert::escape::{build_curve_any, plan_sectors};
use qhcert::symbols::builtin;

fn main() -> qhcert::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "maire-l1".into());
    let sym = builtin(&name)?;
    let ell = sym.ell();
    let verdict = check_h2(&sym, DEFAULT_SAMPLES)?;
    let plans = plan_sectors(&verdict, ell)?;
    for p in &plans {
        eprintln!(
            "{:?} sector [{:.4}, +{:.4}] N = {} omega = {}",
            p.kind, p.sector.start.theta, p.sector.width, p.n, p.omega_radius
        );
        for b in &p.branches {
            let dirs: Vec<String> = b.dirs.iter().map(|d| format!("{:.4}", d.theta)).collect();
            eprintln!("  branch {:+} dirs [{}]", b.orientation, dirs.join(", "));
        }
    }
    println!("curve,theta0,tau,t,s,rho,phi");
    let omega = plans[0].omega_radius;
    for k in 0..24 {
        let theta0 = std::f64::consts::TAU * (k as f64 + 0.5) / 24.0;
        let start = ray_point(&CirclePoint::from_angle(theta0, ell), 0.5 * omega, ell);
        let Ok(curve) = build_curve_any(&plans, start, ell) else { continue };
        for j in 0..=50 {
            let tau = j as f64 / 50.0;
            let g = curve.eval(tau);
            println!("{k},{theta0:.6},{tau},{:e},{:e},{:e},{:e}", g.t, g.s, rho(g, ell), sym.eval_at(g));
        }
    }
    Ok(())
}
