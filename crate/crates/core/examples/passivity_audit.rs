//! Stepwise passivity audit of every bundled preset at two step sizes.
//!
//! The audit residual is `Δ(H_cl + H_t)/h − w_extᵀ·ν̄`, which is at most the
//! tolerance for a passive loop. The discretization error is the residual
//! plus the known dissipation; it shrinks linearly with the step size.

use aerial_passivity::scenario::{Scenario, PRESETS};
use aerial_passivity::simulator::run;

fn worst(log: &[aerial_passivity::simulator::StepLog]) -> f64 {
    log.iter()
        .map(|r| (r.residual + r.dissipation).abs())
        .fold(0.0, f64::max)
}

fn main() -> aerial_passivity::Result<()> {
    println!(
        "{:<17} {:>9} {:>12} {:>12} {:>12} {:>7}",
        "preset", "pass", "max resid W", "disc 1ms", "disc 0.5ms", "ratio"
    );
    for (name, _) in PRESETS {
        let sc = Scenario::load(name)?;
        let coarse = run(&sc)?;
        let fine = run(&sc.with_overrides(&[format!("sim.dt={}", sc.sim.dt / 2.0)])?)?;
        let (a, b) = (worst(&coarse.log), worst(&fine.log));
        println!(
            "{name:<17} {:>8.2}% {:>12.3e} {a:>12.3e} {b:>12.3e} {:>7.2}",
            100.0 * coarse.summary.audit_pass_rate,
            coarse.summary.audit_max_residual,
            a / b
        );
    }
    Ok(())
}
