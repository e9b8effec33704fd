use pdpstar_core::analytic::{v3_finite, v3_inf, vpm_finite, BlochVector, SpinStarParams};
use pdpstar_core::engine::{
    simulate_form1, simulate_form2, spinstar_interaction, Form2Config, InitialMixture, PureMixture,
};
use pdpstar_core::ensemble::TimeGrid;
use pdpstar_core::oracle::{build_spinstar, density_from_bloch, spinstar_initial_state};
use pdpstar_core::pdp1;
use pdpstar_core::stats::log_slope;
use pdpstar_core::{CVector, Complex};

fn bath_mixture(n: u32) -> PureMixture {
    let d = 1usize << n;
    PureMixture::new(vec![1.0 / d as f64; d], (0..d).map(|i| CVector::basis(d, i)).collect()).unwrap()
}

#[test]
fn closed_forms_match_oracle() {
    let times = TimeGrid::new(3.0, 60).unwrap().points();
    for n in 1..=5 {
        let p = SpinStarParams::new(n, 0.7).unwrap();
        let model = build_spinstar(&p).unwrap();
        let rho_s = density_from_bloch(&BlochVector { v1: 0.3, v2: -0.4, v3: 0.5 });
        let bloch = model.reduced_bloch(&spinstar_initial_state(&rho_s, n), &times).unwrap();
        for (b, &t) in bloch.iter().zip(&times) {
            assert!((b.v3 - v3_finite(&p, t, 0.5)).abs() < 1e-10, "N={n} t={t}");
            let vm = vpm_finite(&p, t, Complex::new(0.15, 0.2));
            assert!((b.v_minus() - vm).norm() < 1e-10, "N={n} t={t}");
        }
    }
}

#[test]
fn large_bath_approaches_infinite_limit() {
    let p = SpinStarParams::new(2000, 1.0).unwrap();
    for i in 0..=10 {
        let t = 0.1 * f64::from(i);
        let d = (v3_finite(&p, t, 1.0) - v3_inf(1.0, t, 1.0).unwrap()).abs();
        assert!(d < 5e-3, "t={t}: {d}");
    }
}

#[test]
fn both_forms_reproduce_exact_reduced_state() {
    let p = SpinStarParams::new(2, 1.0).unwrap();
    let h = spinstar_interaction(&p).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let psi = CVector::new(vec![Complex::new(s, 0.0), Complex::new(0.0, s)]).unwrap();
    let init = InitialMixture::new(PureMixture::pure(psi).unwrap(), bath_mixture(2));
    let times = TimeGrid::new(1.0, 5).unwrap().points();
    let exact = build_spinstar(&p).unwrap().reduced_states(&init.density(), &times).unwrap();
    let cfg = Form2Config::uniform(2, 1.5).unwrap();
    let f1 = simulate_form1(&h, &init, &times, 60_000, 5, false).unwrap();
    let f2 = simulate_form2(&h, &cfg, &init, &times, 60_000, 5, false).unwrap();
    for i in 0..times.len() {
        assert!(f1[i].reduced.max_sigma_distance(&exact[i]) < 4.5, "form1 t={}", times[i]);
        assert!(f2[i].reduced.max_sigma_distance(&exact[i]) < 4.5, "form2 t={}", times[i]);
    }
}

#[test]
fn pdp1_fluctuations_grow_exponentially() {
    let p = SpinStarParams::new(50, 1.0).unwrap();
    let times: Vec<f64> = (1..=8).map(|i| 0.25 * f64::from(i)).collect();
    let f = pdp1::fluctuation_curve(&p, 20_000, &times, 3).unwrap();
    assert!(f.windows(2).all(|w| w[1] > w[0]));
    assert!(log_slope(&times, &f).unwrap() > 1.0);
}
