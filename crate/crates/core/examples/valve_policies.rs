//! Raw valve gains chosen by IGS, WGS and SGA for the same set of port flows.

use aerial_passivity::power_valves::{Policy, PolicyConfig, PowerFlows};

fn main() {
    let cases = [
        (
            "all within limits",
            PowerFlows {
                p1: 0.5,
                p2_lin: 0.2,
                p3_lin: 10.0,
                p3_ang: 1.0,
                ..Default::default()
            },
        ),
        (
            "tracking overload",
            PowerFlows {
                p1: 4.0,
                p2_lin: 0.5,
                p3_lin: 20.0,
                ..Default::default()
            },
        ),
        (
            "observer surge",
            PowerFlows {
                p1: 1.0,
                p2_lin: 2.0,
                p2_ang: 0.5,
                p3_lin: 120.0,
                p3_ang: 8.0,
                ..Default::default()
            },
        ),
        (
            "mixed signs",
            PowerFlows {
                p1: 3.0,
                p2_lin: -5.0,
                p3_lin: 95.0,
                p3_ang: -2.0,
                ..Default::default()
            },
        ),
    ];
    for (label, mut flows) in cases {
        flows.p2 = flows.p2_lin + flows.p2_ang;
        flows.p3 = flows.p3_lin + flows.p3_ang;
        println!("{label}: flows {:?} W", flows.slots());
        for policy in [Policy::Igs, Policy::Wgs, Policy::Sga] {
            let cfg = PolicyConfig {
                policy,
                ..Default::default()
            };
            let g = cfg.raw_gains(&flows);
            let admitted: f64 = flows
                .slots()
                .iter()
                .zip(&g)
                .map(|(p, g)| (p * g).max(0.0))
                .sum();
            println!(
                "  {:<4} gains [{}]  admitted {admitted:7.3} W",
                policy.name(),
                g.map(|x| format!("{x:.3}")).join(", ")
            );
        }
    }
}
