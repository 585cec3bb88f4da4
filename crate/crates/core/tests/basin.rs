use vibro::orbits::NewtonOptions;
use vibro::perturbed::{basin_check, perturbed_spectrum, PerturbedParams};
use vibro::Params;

const P_STAR: (f64, f64) = (0.1002798898, 0.5419433068);

#[test]
fn perturbed_fixed_point_attracts_its_neighbourhood() {
    let pp = PerturbedParams::new(Params::baseline(), 1e-3, 0.0).unwrap();
    let spec = perturbed_spectrum(&pp, P_STAR, &NewtonOptions::default()).unwrap();
    let modulus = spec.eigenvalue_moduli.0.max(spec.eigenvalue_moduli.1);
    assert!(modulus < 1.0);

    let (samples, radius, iterations) = (200, 0.01, 500);
    let report = basin_check(&pp, spec.z, samples, radius, iterations, 1e-6, 7).unwrap();
    let linear = radius * modulus.powi(iterations as i32);
    println!("max final distance {:.3e}, linear envelope {:.3e}, within 1e-6: {}", report.max_final_distance, linear, report.converged);
    assert!(report.max_final_distance < 10.0 * linear);

    let long = basin_check(&pp, spec.z, 20, radius, 8000, 1e-6, 7).unwrap();
    assert_eq!(long.converged, long.samples);
}
