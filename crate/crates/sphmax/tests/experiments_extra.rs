//! Heavier experiment integration runs beyond the acceptance gate: the
//! trilinear variants of both decay scans.

use sphmax::experiments::{prop1_scan, prop2_scan, Outcome, Prop1Params, Prop2Params};
use sphmax::region::{ExponentTuple, Q};

#[test]
fn trilinear_critical_decay() {
    // (5/6, 5/6, 5/6) sums to 5/2 = (mn-1)/n: critical for m = 3, n = 2.
    let tuple = ExponentTuple::new(2, vec![Q::new(5, 6), Q::new(5, 6), Q::new(5, 6)]).unwrap();
    let mut params = Prop1Params::for_factors(3);
    params.ball_count = 40_000;
    assert_eq!(params.slope_tolerance, 0.4);
    let rs = [16.0, 32.0, 64.0, 128.0, 256.0, 512.0];
    let report = prop1_scan(&tuple, &rs, 0x3A, &params).unwrap();
    assert_eq!(report.outcome, Outcome::Pass, "{}", report.details);
    let fit = report.fit.unwrap();
    assert!((fit.slope + 5.0).abs() <= 0.4, "slope {}", fit.slope);
}

#[test]
fn trilinear_indicator_decay() {
    let params = Prop2Params::for_factors(3);
    let rs = [16.0, 32.0, 64.0, 128.0, 256.0, 512.0];
    let report = prop2_scan(3, 2, 2, &rs, 0x3B, &params).unwrap();
    assert_eq!(report.outcome, Outcome::Pass, "{}", report.details);
    let fit = report.fit.unwrap();
    assert!((fit.slope + 4.0).abs() <= 0.4, "slope {}", fit.slope);
}

#[test]
fn bilinear_indicator_decay_k1_values() {
    // The k = 1 design is exact by construction: the sampling ball sits
    // strictly inside the indicator support, so values are deterministic in
    // R up to the slice geometry.
    let params = Prop2Params::for_factors(2);
    let rs = [16.0, 32.0, 64.0, 128.0];
    let report = prop2_scan(2, 2, 1, &rs, 0x3C, &params).unwrap();
    for w in report.points.windows(2) {
        let ratio = w[0].value / w[1].value;
        // halving R multiplies the value by 2^{kn} = 4
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }
}
