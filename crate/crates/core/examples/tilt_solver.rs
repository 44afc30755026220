//! The tilt function h(t) and the solver for h(t0) = target.
use dirichlet_lil::bounds::{default_t0_tol, h_of_t, solve_t0, tilt_target_limit};
use dirichlet_lil::series::{variance, SigmaPoint};

fn main() -> dirichlet_lil::Result<()> {
    let sp = SigmaPoint::from_sigma(0.6)?;
    let limit = tilt_target_limit(variance(sp)?.bracket);
    println!("sigma = 0.6: admissible targets below {limit:.4}");
    for t in [0.5, 1.0, 2.0] {
        let h = h_of_t(sp, t, 1e-12)?;
        println!("  h({t}) in [{:.12}, {:.12}]", h.lo(), h.hi());
    }
    for target in [0.5, 1.0, 2.0] {
        let m = solve_t0(sp, target, default_t0_tol(target))?;
        println!("  target {target}: t0 = {:.10}, residual {:.1e}", m.t0, m.residual);
    }
    Ok(())
}
