//! σ_k sequences, split points held in log space and a dyadic chaining grid.
use dirichlet_lil::schedules::{
    chain_threshold, sigma_seq, split_points, DyadicGrid, Schedule, ScheduleKind,
};

fn main() -> dirichlet_lil::Result<()> {
    let delta = 0.1;
    for kind in [ScheduleKind::Lower, ScheduleKind::Upper] {
        let s = Schedule::new(kind, delta)?;
        let us: Vec<String> = (1..=5).map(|k| sigma_seq(&s, k).map(|p| format!("{:.3e}", p.u()))).collect::<Result<_, _>>()?;
        println!("{kind:?}: u_k = 2 sigma_k - 1 for k = 1..5: {}", us.join(", "));
    }
    let lower = Schedule::new(ScheduleKind::Lower, delta)?;
    for k in [10u64, 1000, 1_000_000_000_000_000] {
        match split_points(&lower, k) {
            Ok(p) => println!(
                "k = {k}: log log N1 = {:.4}, log log N2 = {:.4}, independence margin = {:.3e}",
                p.log_log_n1, p.log_log_n2, p.independence_margin
            ),
            Err(e) => println!("k = {k}: {e}"),
        }
    }
    let upper = Schedule::new(ScheduleKind::Upper, delta)?;
    let g = DyadicGrid::new(&upper, 2, 6, 1.0)?;
    println!("grid k = 2: delta sigma = {:.4}", g.delta_sigma());
    for l in 1..=g.level_cap {
        println!("  level {l}: {} points, threshold {:.4}", g.level(l)?.len(), chain_threshold(&g, l));
    }
    Ok(())
}
