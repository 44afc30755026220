//! Tail probability P(F/sd >= a) by exponential tilting versus plain Monte Carlo.
use dirichlet_lil::bounds::{default_t0_tol, solve_t0};
use dirichlet_lil::series::SigmaPoint;
use dirichlet_lil::stream::{SharedTermPlan, StreamConfig};
use dirichlet_lil::tilted::{estimate_tail, plain_estimate, plain_values, TailEvent};

fn main() -> dirichlet_lil::Result<()> {
    let sp = SigmaPoint::from_sigma(0.6)?;
    let (a, m, n) = (2.0, 10_000_000u64, 20_000u64);
    let model = solve_t0(sp, a, default_t0_tol(a))?;
    let is = estimate_tail(&model, a, n, m, 7)?;
    println!("tilted:  p = {:.5} ± {:.1e}  (mean LR {:.3}, ESS {:.0})", is.p_hat, is.std_err, is.mean_lr, is.ess);
    let plan = SharedTermPlan::new(&[sp], m, StreamConfig::default())?;
    let plain = plain_estimate(&plain_values(&plan, model.norm, n, 7), TailEvent::Above { a });
    println!("plain:   p = {:.5} ± {:.1e}", plain.p_hat, plain.std_err);
    println!("variance reduction: {:.1}", (plain.std_err / is.std_err).powi(2));
    Ok(())
}
