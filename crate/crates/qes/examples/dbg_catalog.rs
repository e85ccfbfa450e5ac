use qes::catalog;
use qes::solver::{solve, solve_levels, SolveOptions};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(|s| s.as_str());
    let mut opts = SolveOptions::default();
    opts.check_bounded = true;
    for name in catalog::names() {
        if let Some(w) = which {
            if w != name { continue; }
        }
        let pre = catalog::preset(name, &[]).unwrap();
        println!("=== {name} (n_levels {}) ===", pre.n_levels);
        let t0 = std::time::Instant::now();
        match solve_levels(&pre.spec, pre.n_levels, &opts) {
            Ok(recs) => {
                println!("  {} records in {:?}", recs.len(), t0.elapsed());
                for r in &recs {
                    println!(
                        "    n={} E={:<22} λ={:<22} glog={:<8} bounded={:?} exact={} fits={:?}",
                        r.ansatz_n,
                        format!("{}", r.energy.to_f64()),
                        format!("{}", r.lambda.to_f64()),
                        format!("{}", r.glog.to_f64()),
                        r.bounded,
                        r.exact,
                        r.fitted_potential.iter().map(|(k, v)| format!("{k:?}={}", v.to_f64())).collect::<Vec<_>>(),
                    );
                }
                for g in &pre.goldens {
                    let hit = recs.iter().any(|r| {
                        (r.energy.to_f64() - g.energy).abs() <= 1e-8 * (1.0 + g.energy.abs())
                    });
                    println!("    golden [{}] E={} -> {}", g.label, g.energy, if hit { "FOUND" } else { "MISSING" });
                }
            }
            Err(e) => println!("  error: {e}"),
        }
        // per-level solve timing for the highest level
        let t1 = std::time::Instant::now();
        let _ = solve(&pre.spec.with_n(pre.n_levels), &opts);
        println!("  top-level solve: {:?}", t1.elapsed());
    }
}
