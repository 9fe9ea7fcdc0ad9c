//! Certify every builtin symbol in both microlocal directions.
//!
//! `cargo run --release --example certify_builtins -- [grid-scale]`

use std::time::Instant;

use qhcert::certify::{run_direction, Direction, GridSpec};
use qhcert::symbols::{builtin, BUILTINS};

fn main() -> qhcert::Result<()> {
    let scale: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let grid = GridSpec::default().scaled(scale);
    println!("grid {:?}", grid);
    for (name, _) in BUILTINS {
        let sym = builtin(name)?;
        for dir in [Direction::XiPositive, Direction::XiNegative] {
            let t = Instant::now();
            let out = run_direction(&sym, dir, &grid, 2024)?;
            match &out.certificate {
                Some(c) => println!(
                    "{name:22} {dir:?}: pass={} a={} C1={:.4} C2={:.4} at {:?} C3={:.4} at {:?} omega={} starts={} fd_err={:.1e} ({:.2?})",
                    c.pass, c.a, c.c1, c.c2, c.c2_node, c.c3, c.c3_node, c.omega_radius, c.n_starts, c.fd_max_rel_error, t.elapsed()
                ),
                None => println!("{name:22} {dir:?}: refused: {}", out.refusal.unwrap_or_default()),
            }
        }
    }
    Ok(())
}
