//! The half-line xi < 0 is handled by negating the symbol.

use qhcert::certify::{certify_negative_direction, run_direction, Direction, GridSpec};
use qhcert::symbols::builtin;

fn main() -> qhcert::Result<()> {
    let grid = GridSpec::default().scaled(0.5);
    for name in ["maire-l1", "quasielliptic-l2-m4"] {
        let sym = builtin(name)?;
        match certify_negative_direction(&sym, &grid, 1) {
            Ok(c) => println!("{name}: xi < 0 certified, a = {}, C3 = {:.4}", c.a, c.c3),
            Err(e) => println!("{name}: xi < 0 refused: {e}"),
        }
    }
    // negating twice gives back the positive-direction constants
    let q = builtin("quasielliptic-l2-m4")?;
    let pos = run_direction(&q, Direction::XiPositive, &grid, 1)?.certificate.unwrap();
    let neg = certify_negative_direction(&q.negate(), &grid, 1)?;
    println!("C3 for phi: {:.6}, for -(-phi): {:.6}", pos.c3, neg.c3);
    Ok(())
}
