//! Drive the command-line front end in-process.

fn main() {
    let out = std::env::temp_dir().join("qhcert-example");
    let out = out.to_string_lossy();
    let runs: [&[&str]; 3] = [
        &["qhcert", "check", "--builtin", "negmax", "--direction", "both", "--out", &out],
        &["qhcert", "certify", "--builtin", "maire-l1", "--out", &out],
        &["qhcert", "examples", "list"],
    ];
    for args in runs {
        let code = qhcert::cli::run(args.iter().copied());
        println!("-> exit {code}\n");
    }
}
