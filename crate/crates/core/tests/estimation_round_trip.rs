use approx::assert_relative_eq;
use wqed_core::estimation::synth::{saturation_curve, weak_probe_trace};
use wqed_core::estimation::{extract_qubit_params, fit_saturation};
use wqed_core::{Error, IqTrace, QubitParams, TraceAxis, ValueKind};

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn circle_fit_recovers_varied_devices() {
    for (big, nonrad, phi) in [(10.0, 0.1, 0.0), (22.15, 0.39, 0.0526), (35.0, 3.0, -0.12), (15.0, 1.0, 0.2)] {
        let p = QubitParams::from_table(5.0, big, nonrad, phi, 1e32).unwrap();
        let trace = weak_probe_trace(&p, 4.0, 801, 0.0, 0).unwrap();
        let r = extract_qubit_params(&trace).unwrap();
        assert_relative_eq!(r.omega, p.omega(), max_relative = 1e-9);
        assert_relative_eq!(r.relaxation, p.relaxation(), max_relative = 1e-6);
        assert_relative_eq!(r.decoherence, p.decoherence(), max_relative = 1e-6);
        assert!((r.phi - phi).abs() < 1e-6);
        assert!(r.converged && r.span_ok && !r.gamma_n_negative);
    }
}

#[test]
fn circle_fit_noise_within_one_percent_across_seeds() {
    let p = QubitParams::reference();
    for seed in 0..5 {
        let trace = weak_probe_trace(&p, 3.0, 16001, 0.01, seed).unwrap();
        let r = extract_qubit_params(&trace).unwrap();
        assert!(rel(r.omega, p.omega()) < 1e-2);
        assert!(rel(r.relaxation, p.relaxation()) < 1e-2);
        assert!(rel(r.decoherence, p.decoherence()) < 1e-2);
        assert!(rel(r.phi, p.phi()) < 1e-2, "seed {seed}: phi {}", r.phi);
    }
}

#[test]
fn narrow_span_flagged() {
    let p = QubitParams::reference();
    let trace = weak_probe_trace(&p, 1.5, 401, 0.0, 0).unwrap();
    let r = extract_qubit_params(&trace).unwrap();
    assert!(!r.span_ok);
}

#[test]
fn wrong_value_kind_rejected() {
    let p = QubitParams::reference();
    let t = weak_probe_trace(&p, 3.0, 101, 0.0, 0).unwrap();
    let refl = IqTrace::new(TraceAxis::Frequency, ValueKind::Reflection, t.x().to_vec(), t.values().to_vec()).unwrap();
    assert!(matches!(extract_qubit_params(&refl), Err(Error::Usage(_))));
}

#[test]
fn collinear_trace_is_degenerate() {
    let x: Vec<f64> = (0..20).map(|i| 4e9 + i as f64 * 1e6).collect();
    let v = x.iter().map(|f| num_complex::Complex64::new(1.0 - (f - 4e9) / 1e8, 0.0)).collect();
    let t = IqTrace::new(TraceAxis::Frequency, ValueKind::Transmission, x, v).unwrap();
    assert!(matches!(extract_qubit_params(&t), Err(Error::DegenerateGeometry(_))));
}

#[test]
fn saturation_recovers_injected_k() {
    for k in [3e31, 1e32, 4e32] {
        let p = QubitParams::reference().with_k(k).unwrap();
        let curve = saturation_curve(&p, 2.0, 41, 0.0, 0).unwrap();
        // start from the reference k, not the injected one
        let r = fit_saturation(&curve, &QubitParams::reference()).unwrap();
        assert!(rel(r.k, k) <= 5e-3, "k {k}: got {}", r.k);
        assert_relative_eq!(r.relaxation, p.relaxation(), max_relative = 1e-6);
    }
}

#[test]
fn saturation_short_span_warns() {
    let p = QubitParams::reference();
    let curve = saturation_curve(&p, 0.5, 21, 0.0, 0).unwrap();
    let r = fit_saturation(&curve, &p).unwrap();
    assert!(!r.warnings.is_empty());
}
