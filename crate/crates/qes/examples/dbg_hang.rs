use qes::catalog;
use qes::solver::{solve, SolveOptions};
fn main() {
    let pre = catalog::preset("lame", &[("k", 0.6)]).unwrap();
    let mut opts = SolveOptions::default();
    opts.check_bounded = false;
    let t = std::time::Instant::now();
    eprintln!("assembling...");
    let sys = qes::assembler::assemble(&pre.spec.with_n(0)).unwrap();
    eprintln!("assembled {} rows in {:?}", sys.rows.len(), t.elapsed());
    for r in &sys.rows { eprintln!("row {}: {}", r.j, r.poly); }
    let t = std::time::Instant::now();
    let recs = solve(&pre.spec.with_n(0), &opts).unwrap();
    eprintln!("solved {} in {:?}", recs.len(), t.elapsed());
}
