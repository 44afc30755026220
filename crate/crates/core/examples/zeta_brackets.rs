//! Certified brackets for ζ(s) near the pole and for 𝔼F(σ)² = ζ(2σ).
use dirichlet_lil::series::{deriv_variance_bracket, variance, zeta_bracket, SigmaPoint};

fn main() -> dirichlet_lil::Result<()> {
    for s in [1.02, 1.5, 2.0, 4.0] {
        let z = zeta_bracket(s, 1000)?;
        println!("zeta({s}) in [{:.15}, {:.15}]  (1/(s-1) = {:.6})", z.total.lo(), z.total.hi(), 1.0 / (s - 1.0));
    }
    for sigma in [0.51, 0.6, 0.75, 1.0] {
        let sp = SigmaPoint::from_sigma(sigma)?;
        let v = variance(sp)?;
        let d = deriv_variance_bracket(sp)?;
        println!(
            "sigma = {sigma}: E F^2 = {:.10} (rel width {:.1e}, M = {}), E F'^2 = {:.6}",
            v.bracket.mid(),
            v.bracket.rel_width(),
            v.terms,
            d.bracket.mid()
        );
    }
    Ok(())
}
