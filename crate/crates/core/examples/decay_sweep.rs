//! Kernel decay sweep for each certifiable builtin, fitted against `-1/a`.
//!
//! `cargo run --release --example decay_sweep -- [grid-scale] [xi-max]`

use std::time::Instant;

use qhcert::certify::{run_direction, Direction, GridSpec};
use qhcert::decay::{sweep, SweepSpec};
use qhcert::symbols::{builtin, BUILTINS};

fn main() -> qhcert::Result<()> {
    let mut args = std::env::args().skip(1);
    let scale: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let xi_max: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1e5);
    let grid = GridSpec::default().scaled(scale);
    let spec = SweepSpec { xi_min: xi_max / 1e3, xi_max, n_points: 16 };
    for (name, _) in BUILTINS {
        let sym = builtin(name)?;
        for dir in [Direction::XiPositive, Direction::XiNegative] {
            let out = run_direction(&sym, dir, &grid, 2024)?;
            let Some(cert) = out.certificate.filter(|c| c.pass) else {
                continue;
            };
            let t = Instant::now();
            let r = sweep(&cert, &out.symbol, &spec, &grid, false)?;
            println!(
                "{name:22} {dir:?}: slope {:.4} predicted {:.4} rel.err {:.1}% residual {:.1e} M/bound <= {:.3} ({:.2?})",
                r.fitted_slope,
                r.predicted_slope,
                100.0 * r.relative_slope_error(),
                r.fit_residual,
                r.sandwich_ratio(),
                t.elapsed()
            );
        }
    }
    Ok(())
}
