//! Circle analysis of a symbol: zeros, sign components, orders.
//!
//! `cargo run --example check_symbol -- maire-l2`
//! `cargo run --example check_symbol -- '{"l1":1,"l2":2,"m":6,"monomials":[[2,2,1],[6,0,-1]]}'`

use qhcert::circle::{check_h2, DEFAULT_SAMPLES};
use qhcert::symbols::{builtin, parse_symbol};

fn main() -> qhcert::Result<()> {
    let arg = std::env::args().nth(1).unwrap_or_else(|| "maire-l1".into());
    let sym = if arg.trim_start().starts_with('{') { parse_symbol(&arg)? } else { builtin(&arg)? };
    let v = check_h2(&sym, DEFAULT_SAMPLES)?;
    println!("{} (ell = {}, m = {}): pass = {}", sym.name, sym.ell(), sym.weights.m, v.pass);
    for item in &v.items {
        println!("  item {}: {} ({})", item.item, item.pass, item.detail);
    }
    for z in &v.zeros {
        println!("  zero theta = {:.9} {:?} p = {:?}", z.theta, z.kind, z.p.map(|p| p.to_string()));
    }
    for c in &v.components {
        println!(
            "  {:?} arc from {:.4} width {:.4}, extremum {:+.4} at {:.4}, {} sub-arcs",
            c.kind,
            c.arc.start.theta,
            c.arc.width,
            c.extremum_value,
            c.extremum.theta,
            c.sub_arcs.len()
        );
    }
    Ok(())
}
