use attractor_sos::dynsys::{apply_scaling, builtin, DynamicalSystem};
use attractor_sos::poly::parse_polynomial;
use attractor_sos::sim::{integrate, integrate_from, semigroup_check, IntegratorSettings};

fn scaled(name: &str) -> DynamicalSystem {
    apply_scaling(&builtin(name).unwrap().0)
}

#[test]
fn vanderpol_limit_cycle_amplitude_and_period() {
    // mu = 1: amplitude 2.00862, period 6.66329 (classical values)
    let sys = scaled("vanderpol");
    let s = IntegratorSettings { sample_dt: 0.001, ..Default::default() };
    let tr = integrate(&sys, &[0.1, 0.0], 60.0, &s).unwrap();
    let tail: Vec<(f64, f64)> = tr
        .times
        .iter()
        .zip(&tr.states)
        .filter(|(t, _)| **t > 40.0)
        .map(|(t, x)| (*t, x[0] * 3.1))
        .collect();
    let amp = tail.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    assert!((amp - 2.00862).abs() < 2e-4, "amplitude {amp}");
    let ups: Vec<f64> = tail.windows(2).filter(|w| w[0].1 < 0.0 && w[1].1 >= 0.0).map(|w| w[1].0).collect();
    let period = (ups[ups.len() - 1] - ups[0]) / (ups.len() - 1) as f64;
    assert!((period - 6.66329).abs() < 2e-3, "period {period}");
}

#[test]
fn semigroup_holds_on_lorenz() {
    let sys = scaled("lorenz");
    let s = IntegratorSettings::default();
    let tr = integrate(&sys, &[1.0, 1.0, 1.0], 30.0, &s).unwrap();
    assert_eq!(tr.times.len(), 3001);
    assert_eq!(*tr.times.last().unwrap(), 30.0);
    for (k, m) in [(0, 3000), (700, 50), (1500, 1200), (2999, 1)] {
        assert!(semigroup_check(&sys, &tr, k, m, &s).unwrap() <= 1.0, "k = {k}, m = {m}");
    }
}

#[test]
fn escape_stops_before_leaving_the_box() {
    let grow = DynamicalSystem::new("grow", vec![parse_polynomial("x1", 1).unwrap()], 1.0, 1.0).unwrap();
    let s = IntegratorSettings::default();
    let tr = integrate_from(&grow, &[1.0], 0.0, 10.0, &s, Some(&[[-5.0, 5.0]])).unwrap();
    let t = tr.escaped_at.unwrap();
    assert!((t - 5f64.ln()).abs() < 0.011, "escaped at {t}");
    assert!(tr.states.iter().all(|x| x[0] <= 5.0));
}

#[test]
fn lorenz_stays_bounded_in_scaled_ball() {
    let sys = scaled("lorenz");
    let tr = integrate(&sys, &[0.04, 0.04, 0.04], 50.0, &IntegratorSettings::default()).unwrap();
    let r = tr.states.iter().map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max);
    assert!(r < 3.0, "max radius {r}");
}
