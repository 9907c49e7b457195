//! Pushing the cart over an obstacle with and without a power policy. With
//! IGS the tracking power is capped and the run stays bounded; without the
//! tank the integral action winds up and the vehicle runs away once the cart
//! breaks free.

use aerial_passivity::power_valves::Policy;
use aerial_passivity::scenario::Scenario;
use aerial_passivity::simulator::run;

fn main() -> aerial_passivity::Result<()> {
    let base = Scenario::load("obstacle_compare")?;
    let c = &base.environment.cart;
    println!(
        "obstacle at {:.2} m, resistance {:.1} N (Coulomb {:.1} N + obstacle {:.1} N), push {:.1} N\n",
        c.obstacle_position,
        c.coulomb + c.obstacle_force,
        c.coulomb,
        c.obstacle_force,
        base.reference.push_force
    );
    for policy in [Policy::Igs, Policy::None] {
        let mut sc = base.clone();
        sc.sim.policy = policy;
        let out = run(&sc)?;
        let s = &out.summary;
        println!(
            "{:<4}  {:<10}  t_end {:6.3} s  cart moved {:7.3} m  peak speed {:5.2} m/s  audit {:5.1}%",
            policy.name(),
            format!("{:?}", s.termination).to_lowercase(),
            s.final_time,
            s.cart_distance,
            s.max_linear_speed,
            100.0 * s.audit_pass_rate
        );
    }
    Ok(())
}
