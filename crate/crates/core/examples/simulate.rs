//! Integrate scaled Lorenz, check the flow property and print a few samples.
use attractor_sos::dynsys::{apply_scaling, builtin};
use attractor_sos::sim::{integrate, semigroup_check, write_trajectories_csv, IntegratorSettings};

fn main() {
    let (sys, _) = builtin("lorenz").unwrap();
    let sys = apply_scaling(&sys);
    let settings = IntegratorSettings::default();
    let traj = integrate(&sys, &[1.0, 1.0, 1.0], 20.0, &settings).unwrap();
    println!("{} samples, final state {:?}", traj.times.len(), traj.final_state());
    println!("{:?}", traj.stats);
    let ratio = semigroup_check(&sys, &traj, 500, 50, &settings).unwrap();
    // short window: nearby Lorenz solutions separate roughly like e^(0.9 t)
    println!("semigroup ratio over 0.5 time units {ratio:.3} (<= 1 passes)");

    let mut buf = Vec::new();
    write_trajectories_csv(std::slice::from_ref(&traj), None, &mut buf).unwrap();
    for line in String::from_utf8(buf).unwrap().lines().take(4) {
        println!("{line}");
    }
}
