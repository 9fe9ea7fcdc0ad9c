//! A symbol given only through its circle profile.

use std::sync::Arc;

use qhcert::certify::{run_direction, Direction, GridSpec};
use qhcert::symbols::{QhSymbol, QuasiWeights, Rational};

fn main() -> qhcert::Result<()> {
    let w = QuasiWeights::new(1, 2, Rational::from_integer(6))?;
    // two positive lobes separated by simple zeros
    let sym = QhSymbol::callback("two-lobes", w, Arc::new(|th: f64| (2.0 * th).cos() + 0.3), Some(Rational::from_integer(1)));
    let out = run_direction(&sym, Direction::XiPositive, &GridSpec::default().scaled(0.5), 3)?;
    println!("verdict pass = {}, zeros = {}", out.verdict.pass, out.verdict.zeros.len());
    match out.certificate {
        Some(c) => println!("certificate pass = {}, a = {}, C1 = {:.3}, C2 = {:.3}, C3 = {:.3}", c.pass, c.a, c.c1, c.c2, c.c3),
        None => println!("refused: {}", out.refusal.unwrap_or_default()),
    }
    Ok(())
}
