//! Cross-validation of the first-order perturbation formulas against the ODE
//! oracle on a 3-bus asymmetric triangle with inhomogeneous damping ratios
//! γ_i = γ (1 + g a_i).

use gridplace::oracle::{integrate_swing, measure_oracle, OracleOptions};
use gridplace::response::{
    modal_drive, modal_drive_from_forcing, modal_energy_integral, perturbed_modal_velocity,
    project_velocities, FaultSpec,
};
use gridplace::spectral::{eigendecompose, Spectrum, Weighting};
use nalgebra::{DMatrix, DVector};

fn triangle() -> (DMatrix<f64>, Spectrum) {
    // Susceptances 1.0 / 1.3 / 1.7: well-separated nonzero eigenvalues.
    let l = DMatrix::from_row_slice(3, 3, &[2.3, -1.0, -1.3, -1.0, 2.7, -1.7, -1.3, -1.7, 3.0]);
    let spec = eigendecompose(&l, Weighting::Unweighted).unwrap();
    (l, spec)
}

#[test]
fn perturbed_trajectories_track_the_oracle_at_second_order_in_g() {
    let (l, spec) = triangle();
    let n = 3;
    let m = DVector::from_element(n, 1.0);
    let gamma = 1.0;
    let a = DVector::from_row_slice(&[0.7, -0.2, -0.5]);

    let mut forcing = DVector::zeros(n);
    forcing[1] = -1.0;
    let drive = modal_drive_from_forcing(&spec, &m, gamma, &forcing).unwrap();

    let dt = 1e-3;
    let mut errors = Vec::new();
    for g in [0.2, 0.1, 0.05] {
        let d = DVector::from_iterator(n, (0..n).map(|i| m[i] * gamma * (1.0 + g * a[i])));
        let traj = integrate_swing(&l, &m, &d, &forcing, dt, 15.0).unwrap();
        let mut err = 0.0f64;
        for (k, &t) in traj.times.iter().enumerate() {
            let got = project_velocities(&spec, &m, &traj.omega[k]);
            let want = perturbed_modal_velocity(&spec, gamma, g, &a, &drive, t, true).unwrap();
            // All modes, including the overdamped zero mode in slot 0.
            err = err.max((got - want).amax());
        }
        errors.push(err);
    }
    // Residual after the first-order correction is O(g²).
    let order1 = (errors[0] / errors[1]).log2();
    let order2 = (errors[1] / errors[2]).log2();
    assert!(order1 > 1.8, "order {order1:.2} between g=0.2 and g=0.1");
    assert!(order2 > 1.8, "order {order2:.2} between g=0.1 and g=0.05");
}

#[test]
fn dropping_the_zero_mode_coupling_degrades_to_first_order() {
    let (l, spec) = triangle();
    let n = 3;
    let m = DVector::from_element(n, 1.0);
    let gamma = 1.0;
    let a = DVector::from_row_slice(&[0.7, -0.2, -0.5]);

    let mut forcing = DVector::zeros(n);
    forcing[1] = -1.0;
    let drive = modal_drive_from_forcing(&spec, &m, gamma, &forcing).unwrap();

    let dt = 1e-3;
    let mut errors = Vec::new();
    for g in [0.2, 0.1] {
        let d = DVector::from_iterator(n, (0..n).map(|i| m[i] * gamma * (1.0 + g * a[i])));
        let traj = integrate_swing(&l, &m, &d, &forcing, dt, 15.0).unwrap();
        let mut err = 0.0f64;
        for (k, &t) in traj.times.iter().enumerate() {
            let got = project_velocities(&spec, &m, &traj.omega[k]);
            let want = perturbed_modal_velocity(&spec, gamma, g, &a, &drive, t, false).unwrap();
            for alpha in 1..n {
                err = err.max((got[alpha] - want[alpha]).abs());
            }
        }
        errors.push(err);
    }
    let order = (errors[0] / errors[1]).log2();
    assert!(
        order < 1.5,
        "without the zero-mode coupling the residual should be O(g), got order {order:.2}"
    );
}

#[test]
fn summed_modal_energies_match_oracle_measure_slope() {
    let (l, spec) = triangle();
    let n = 3;
    let m = DVector::from_element(n, 1.0);
    let gamma = 1.0;
    let fault = FaultSpec {
        bus: 1,
        delta_p: 1.0,
    };
    let a = DVector::from_row_slice(&[0.7, -0.2, -0.5]);

    let drive = modal_drive(&spec, &m, gamma, &fault).unwrap();
    let opts = OracleOptions {
        dt: Some(5e-4),
        tail_rel: 1e-13,
        ..OracleOptions::default()
    };
    let measure_at = |g: f64| -> f64 {
        let d = DVector::from_iterator(n, (0..n).map(|i| m[i] * gamma * (1.0 + g * a[i])));
        measure_oracle(&l, &m, &d, &fault, &opts).unwrap().value
    };

    // Central difference in g removes the O(g²) term: FD = slope + O(g²).
    let g = 0.025;
    let fd = (measure_at(g) - measure_at(-g)) / (2.0 * g);

    let baseline: f64 = modal_energy_integral(&spec, gamma, 0.0, &a, &drive, true)
        .unwrap()
        .iter()
        .sum();
    let energies = modal_energy_integral(&spec, gamma, g, &a, &drive, true).unwrap();
    let slope = (energies.iter().sum::<f64>() - baseline) / g;

    let rel = ((fd - slope) / slope).abs();
    assert!(
        rel < 5e-4,
        "oracle slope {fd:.9} vs closed form {slope:.9} (rel {rel:.2e})"
    );

    // The zero-mode coupling carries most of the first-order energy shift on
    // this fixture; excluding it must visibly disagree with the oracle.
    let energies_nz = modal_energy_integral(&spec, gamma, g, &a, &drive, false).unwrap();
    let slope_nz = (energies_nz.iter().sum::<f64>() - baseline) / g;
    assert!(((fd - slope_nz) / fd).abs() > 0.5);
}
