//! The distorted geometry: dressing, quasihomogeneous radius, disto-lines.

use qhcert::distgeo::{
    ddet, dressed_angle, dressing, f_ell, line_step, rho, CirclePoint, DistoPoint, Heading,
};

fn main() -> qhcert::Result<()> {
    let ell = 2.0;
    let p = DistoPoint::new(0.3, -0.2);
    let d = dressing(p, ell);
    println!("dressing {p:?} -> ({}, {})", d.t, d.s);
    println!("rho = {:.6}, dressed angle = {:.6}", rho(p, ell), dressed_angle(p, ell)?);

    // rho is 1-homogeneous under (t, s) -> (l t, l^ell s)
    let l = 3.0;
    let q = DistoPoint::new(l * p.t, l.powf(ell) * p.s);
    println!("rho(dilated) / rho = {:.12}", rho(q, ell) / rho(p, ell));

    // a disto-line keeps its disto-determinant with the direction
    let dir = CirclePoint::from_angle(0.7, ell);
    for tau in [0.0, 0.25, 0.5, 1.0] {
        let x = line_step(p, &dir, Heading::Outgoing, tau, ell);
        println!("tau {tau:4}: ({:+.6}, {:+.6})  det = {:+.12}", x.t, x.s, ddet(dir.point(), x, ell));
    }

    // f(tau + g) - f(g) >= f(tau / 2)
    let mut worst = f64::INFINITY;
    for i in 0..=200 {
        let g = -5.0 + 0.05 * i as f64;
        for tau in [0.1, 1.0, 4.0] {
            worst = worst.min(f_ell(tau + g, ell) - f_ell(g, ell) - f_ell(tau / 2.0, ell));
        }
    }
    println!("min of f(tau+g) - f(g) - f(tau/2) on a sample: {worst:.6}");
    Ok(())
}
