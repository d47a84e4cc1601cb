// quick probe of identification recovery quality
use tandem_core::model::*;
use tandem_core::fuzzy::TNorm;
use tandem_core::model::{MeasurementStore, InputDisturbanceStore};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn one_var_model(class: ModelClass, c: Vec<f64>) -> SubsystemModel {
    SubsystemModel::new("sub", class, TermScheme::for_class(class),
        &[VarSpec { name: "x".into(), range: 10.0, default_consequent: c }],
        &[10.0], &[10.0], TNorm::Min).unwrap()
}

fn main() {
    let truth_coeffs = vec![1.5, 0.7, -0.3, 0.2];
    let truth = one_var_model(ModelClass::Type1, truth_coeffs.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut meas = MeasurementStore::new();
    let mut ud = InputDisturbanceStore::new();
    let mut x = vec![-3.0];
    meas.insert(0, x.clone(), true);
    for t in 0..12u64 {
        let u = vec![rng.random_range(-5.0..-1.0)];
        let nu = vec![rng.random_range(-5.0..-1.0)];
        ud.insert_input(t, u.clone());
        ud.insert_disturbance(t, nu.clone());
        x = truth.step(&x, &u, &nu);
        meas.insert(t + 1, x.clone(), true);
    }
    let mut model = one_var_model(ModelClass::Type1, vec![0.0, 0.5, 0.0, 0.0]);
    let cfg = IdentificationConfig { window_len: 12, optimizer_budget: 60_000, num_starts: 1, ..Default::default() };
    let window: Vec<u64> = (1..=12).collect();
    let out = identify_consequents(&mut model, &meas, &ud, &cfg, &window).unwrap();
    println!("objective after: {:.3e} (before {:.3e}, warned {})", out[0].objective_after, out[0].objective_before, out[0].warned);
    println!("recovered rule0: {:?}", model.vars()[0].rule_base.rules()[0].consequent);
}
