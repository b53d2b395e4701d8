use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qfridge::entanglement::entanglement_report;
use qfridge::io::{density_from_json, density_to_json, params_from_json, params_to_json};
use qfridge::model::{
    carnot_cop, cooling_sign, gamma_sign, random_params, steady_state, steady_state_xblock,
};
use qfridge::FridgeParams;

fn params_strategy() -> impl Strategy<Value = FridgeParams> {
    any::<u64>().prop_map(|seed| random_params(&mut ChaCha8Rng::seed_from_u64(seed)))
}

fn max_entry_gap(a: &qfridge::ComplexMatrix, b: &qfridge::ComplexMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn uncoupled_machine_is_thermal() {
    let p = FridgeParams::new(1.5, 7.0, 0.0, [1e-5, 3e-5, 2e-5], [1.0, 1.7, 20.0]);
    let ss = steady_state(&p).unwrap();
    let tau = p.product_thermal_state().unwrap();
    assert!(max_entry_gap(ss.rho.matrix(), tau.matrix()) < 1e-12);
    assert_eq!((cooling_sign(&ss, &p), gamma_sign(&ss, &p)), (0, 0));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn full_and_reduced_solvers_agree(p in params_strategy()) {
        let full = steady_state(&p).unwrap();
        let x = steady_state_xblock(&p).unwrap();
        prop_assert!(max_entry_gap(full.rho.matrix(), x.rho.matrix()) < 1e-10);
        prop_assert!(x.residual < 1e-9);
    }

    #[test]
    fn energy_is_conserved(p in params_strategy()) {
        let ss = steady_state(&p).unwrap();
        let q = ss.heat_currents;
        let scale = p.p.iter().copied().fold(0.0, f64::max) * p.e2();
        prop_assert!(q.total().abs() <= 1e-12 * scale);
    }

    #[test]
    fn cooling_is_sub_carnot(p in params_strategy()) {
        let ss = steady_state(&p).unwrap();
        let s = cooling_sign(&ss, &p);
        prop_assert_eq!(s, gamma_sign(&ss, &p));
        if s > 0 {
            let eta = ss.efficiency.unwrap();
            prop_assert!(eta > 0.0 && eta < carnot_cop(p.tc(), p.tr(), p.th()));
        }
    }

    #[test]
    fn steady_states_are_x_form(p in params_strategy()) {
        let ss = steady_state(&p).unwrap();
        prop_assert!(ss.rho.is_x_form(1e-10));
        prop_assert!(entanglement_report(&ss.rho).x_form);
    }

    #[test]
    fn json_round_trips(p in params_strategy()) {
        prop_assert_eq!(params_from_json(&params_to_json(&p).unwrap()).unwrap(), p);
        let rho = steady_state(&p).unwrap().rho;
        let back = density_from_json(&density_to_json(&rho).unwrap()).unwrap();
        prop_assert_eq!(back.matrix(), rho.matrix());
    }
}
