use regenline::analysis::{ber_curve, fit_linear_regime, sweep_fit, BerSeries};
use regenline::{iterate_chain, ChainConfig, Complex64};

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn curve(beta: f64, n_max: usize) -> BerSeries {
    ber_curve(real(beta), n_max, None, 1.0).unwrap()
}

#[test]
fn beta_twenty_curve_shape() {
    let s = curve(20.0, 200);
    assert!(s.truncation_flags.is_empty());

    let b1 = s.ber_at(1).unwrap();
    let b20 = s.ber_at(20).unwrap();
    let b100 = s.ber_at(100).unwrap();
    let b200 = s.ber_at(200).unwrap();

    // bounded below by the vacuum component of the input
    assert!(b1 >= (-400.0f64).exp());
    // fast rise over the first steps, then linear growth
    assert!(b20 / b1 > 1e30);
    let doubling = b200 / b100;
    assert!((1.9..=2.3).contains(&doubling), "B(200)/B(100) = {doubling}");

    for w in s.points.windows(2) {
        assert!(w[1].ber >= w[0].ber);
        assert!(w[1].deficit >= w[0].deficit);
    }
    assert!(s.points.iter().all(|p| p.deficit <= 1e-2 * p.ber));
}

#[test]
fn beta_twenty_coefficient_near_reference_law() {
    let s = curve(20.0, 200);
    let fit = fit_linear_regime(&s, (50, 200)).unwrap();
    let reference = -0.44 - 0.0356 * 400.0;
    let dev = (fit.coefficient.log10() - reference).abs();
    assert!(dev <= 0.15, "log10 C = {}, reference {reference}", fit.coefficient.log10());
}

#[test]
fn ber_falls_with_input_level() {
    let bers: Vec<f64> = (17..=22)
        .map(|b| curve(f64::from(b), 100).ber_at(100).unwrap())
        .collect();
    for w in bers.windows(2) {
        assert!(w[1] < w[0], "{bers:?}");
    }
}

#[test]
fn transmissivity_does_not_change_the_curve() {
    let a = ber_curve(real(6.0), 30, None, 1.0).unwrap();
    let b = ber_curve(real(6.0), 30, None, 0.3).unwrap();
    for (p, q) in a.points.iter().zip(&b.points) {
        assert!(((p.ber - q.ber) / p.ber).abs() < 1e-9);
    }
}

#[test]
fn per_segment_transmissivities() {
    let mut chain = ChainConfig::uniform(real(5.0), 0.5, 6, None).unwrap();
    chain.segment_transmissivities = vec![0.5, 0.9, 0.2, 1.0, 0.5, 0.7];
    let mixed = iterate_chain(&chain).unwrap();
    let uniform = iterate_chain(&ChainConfig::uniform(real(5.0), 1.0, 6, None).unwrap()).unwrap();
    for (x, y) in mixed.ber_series.iter().zip(&uniform.ber_series) {
        assert!(((x - y) / y).abs() < 1e-9);
    }
}

#[test]
fn sweep_needs_four_levels() {
    assert!(sweep_fit(&[3.0, 4.0, 5.0], 10, (5, 10), 1.0, None).is_err());
}

#[test]
fn small_sweep_recovers_a_decaying_law() {
    let report = sweep_fit(&[4.0, 5.0, 6.0, 7.0], 80, (40, 80), 1.0, None).unwrap();
    assert_eq!(report.entries.len(), 4);
    assert!(report.law.slope < 0.0);
    for e in &report.entries {
        assert!(e.fit.coefficient > 0.0);
        assert!(e.final_point.deficit <= e.final_point.ber);
    }
}
