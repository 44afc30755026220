//! Plans a truncation for a target tail fraction and evaluates a few paths.
use dirichlet_lil::rng::derive_seed;
use dirichlet_lil::series::{eval_truncated, normalize, plan_truncation, SigmaPoint};
use dirichlet_lil::SignPath;

fn main() -> dirichlet_lil::Result<()> {
    let sp = SigmaPoint::from_sigma(0.75)?;
    let plan = plan_truncation(sp, 1e-3, 100_000_000)?;
    println!(
        "sigma = 0.75: M = {}, tail variance <= {:.3e} (fraction {:.2e}), feasible = {}",
        plan.terms, plan.tail_variance_bound, plan.achieved_fraction, plan.feasible
    );
    for i in 0..4 {
        let r = eval_truncated(&SignPath::new(derive_seed(42, i)), sp, &plan);
        println!("path {i}: F = {:+.12}  F/sd = {:+.6}", r.value, normalize(&r).value);
    }
    // close to the pole the required length explodes
    let near = plan_truncation(SigmaPoint::from_sigma(0.51)?, 1e-2, 1_000_000_000_000)?;
    println!("sigma = 0.51: log10 M = {:.1}, feasible = {}", near.log_required_terms / std::f64::consts::LN_10, near.feasible);
    Ok(())
}
