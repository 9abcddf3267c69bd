//! Parse a vector field, scale it and take a Lie derivative.
use attractor_sos::dynsys::{apply_scaling, builtin};
use attractor_sos::poly::{lie_derivative, parse_polynomial};

fn main() {
    let (lorenz, dom) = builtin("lorenz").expect("builtin system");
    let scaled = apply_scaling(&lorenz);
    for (i, fi) in scaled.f.iter().enumerate() {
        println!("f{} = {:?}", i + 1, fi);
    }
    let v = parse_polynomial("x1^2 + x2^2 + (x3 - 1)^2", 3).unwrap();
    let lv = lie_derivative(&v, &scaled.f).unwrap();
    let x = [0.2, -0.1, 0.9];
    println!("V(x) = {:.6}, dV/dt(x) = {:.6}", v.eval(&x), lv.eval(&x));
    println!("x in Omega: {}", dom.contains(&x));
}
