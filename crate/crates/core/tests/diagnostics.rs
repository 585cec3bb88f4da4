use vibro::diagnostics::{sali, sali_decay_rate, SaliCategory, SALI_THRESHOLD};
use vibro::orbits::{newton_fixed_point, NewtonOptions};
use vibro::Params;

fn p_star() -> (f64, f64) {
    newton_fixed_point(&Params::baseline(), (0.1, 0.54), &NewtonOptions::default()).unwrap().z
}

#[test]
fn island_centre_is_regular() {
    let p = Params::baseline();
    for n in [15, 100] {
        let r = sali(&p, p_star(), n, 0);
        assert_eq!(r.category, SaliCategory::Regular);
        let log10 = r.log10_sali.unwrap();
        assert!((-2.0..=0.0).contains(&log10), "N = {n}: {log10}");
        assert!(sali_decay_rate(&r.history).abs() < 0.1);
    }
}

#[test]
fn offset_orbit_separates_from_the_island() {
    let p = Params::baseline();
    let z = p_star();
    let z0 = (z.0 + 0.05, z.1 + 0.05);
    let short = sali(&p, z0, 15, 0);
    assert!(short.log10_sali.unwrap() > SALI_THRESHOLD);
    let long = sali(&p, z0, 100, 0);
    assert_eq!(long.category, SaliCategory::Chaotic);
    assert!(long.log10_sali.unwrap() < -6.0);
    assert!(sali_decay_rate(&long.history) < 0.0);
}
