//! Frequency transients after an abrupt power loss, in the modal frame.
//!
//! With `ξ = U M^{1/2} δθ` the linearized swing dynamics decouple (for a
//! homogeneous damping ratio γ_i ≡ γ) into damped oscillators
//!
//! ```text
//! ξ̈_α + γ ξ̇_α + λ_α ξ_α = 𝒫_α ,   𝒫_α = Σ_i u_αi δP_i / √m_i ,
//! ```
//!
//! and the performance measure M = ∫ (ω − ω̄)ᵀ M (ω − ω̄) dt is the summed
//! energy of the non-zero modes, `Σ_{α>1} ∫ ξ̇_α² dt`. This module provides
//! the unperturbed trajectories and measures plus their first-order
//! corrections when the damping ratios deviate as γ_i = γ (1 + g a_i).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::spectral::{pinv_diagonal, Spectrum};

/// An abrupt power loss: at t = 0 the injection at `bus` drops by `delta_p`.
#[derive(Debug, Clone, Copy)]
pub struct FaultSpec {
    pub bus: usize,
    pub delta_p: f64,
}

/// Modal decomposition of a disturbance: projections 𝒫_α and the natural
/// frequencies f_α = √(4λ_α − γ²) of the underdamped modes.
#[derive(Debug, Clone)]
pub struct ModalDrive {
    /// 𝒫_α for every mode, including the zero mode in slot 0.
    pub p: DVector<f64>,
    /// f_α for α ≥ 1; slot 0 is unused and set to zero (the zero mode is
    /// non-oscillatory, its decay rate is γ itself).
    pub f: DVector<f64>,
}

fn natural_frequencies(spec: &Spectrum, gamma: f64) -> Result<DVector<f64>> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "damping ratio must be positive, got {gamma}"
        )));
    }
    let n = spec.n();
    let mut f = DVector::zeros(n);
    let mut overdamped = Vec::new();
    for alpha in 1..n {
        let disc = 4.0 * spec.eigenvalues[alpha] - gamma * gamma;
        if disc <= 0.0 {
            overdamped.push(alpha);
        } else {
            f[alpha] = disc.sqrt();
        }
    }
    if !overdamped.is_empty() {
        return Err(Error::OverdampedMode {
            modes: overdamped,
            gamma,
        });
    }
    Ok(f)
}

/// Modal drive for an arbitrary forcing vector: 𝒫_α = Σ_i u_αi F_i / √m_i.
pub fn modal_drive_from_forcing(
    spec: &Spectrum,
    inertia: &DVector<f64>,
    gamma: f64,
    forcing: &DVector<f64>,
) -> Result<ModalDrive> {
    let n = spec.n();
    if inertia.len() != n || forcing.len() != n {
        return Err(Error::InvalidArgument(
            "inertia/forcing length does not match spectrum size".into(),
        ));
    }
    let f = natural_frequencies(spec, gamma)?;
    let weighted = DVector::from_iterator(n, (0..n).map(|i| forcing[i] / inertia[i].sqrt()));
    let p = &spec.u * weighted;
    Ok(ModalDrive { p, f })
}

/// Modal drive of a single-bus disturbance of magnitude `delta_p`:
/// 𝒫_α = u_α,b δP / √m_b. Modes that are not underdamped (4λ_α ≤ γ²) are
/// rejected.
pub fn modal_drive(
    spec: &Spectrum,
    inertia: &DVector<f64>,
    gamma: f64,
    fault: &FaultSpec,
) -> Result<ModalDrive> {
    let n = spec.n();
    if fault.bus >= n {
        return Err(Error::InvalidArgument(format!(
            "fault bus index {} out of range (N = {})",
            fault.bus, n
        )));
    }
    let mut forcing = DVector::zeros(n);
    forcing[fault.bus] = fault.delta_p;
    modal_drive_from_forcing(spec, inertia, gamma, &forcing)
}

/// Modal velocities of the homogeneous-ratio system at time t:
///
/// ```text
/// ξ̇_α(t) = (2𝒫_α / f_α) e^{−γt/2} sin(f_α t / 2) ,      α > 1,
/// ξ̇₁(t) = (𝒫₁ / γ) (1 − e^{−γt})                         (slot 0).
/// ```
pub fn homogeneous_modal_velocity(drive: &ModalDrive, gamma: f64, t: f64) -> DVector<f64> {
    let n = drive.p.len();
    let mut v = DVector::zeros(n);
    v[0] = drive.p[0] / gamma * (1.0 - (-gamma * t).exp());
    let envelope = (-0.5 * gamma * t).exp();
    for alpha in 1..n {
        let f = drive.f[alpha];
        v[alpha] = 2.0 * drive.p[alpha] / f * envelope * (0.5 * f * t).sin();
    }
    v
}

/// Projects bus frequencies onto the modal frame: ξ̇_α = Σ_i u_αi √m_i ω_i.
pub fn project_velocities(
    spec: &Spectrum,
    inertia: &DVector<f64>,
    omega: &DVector<f64>,
) -> DVector<f64> {
    let n = spec.n();
    let weighted = DVector::from_iterator(n, (0..n).map(|i| inertia[i].sqrt() * omega[i]));
    &spec.u * weighted
}

/// Closed-form performance measure for a fault at bus b with inertia m_b:
///
/// ```text
/// M_b = (δP² / 2γ m_b) Σ_{α>1} u_αb² / λ_α ,
/// ```
///
/// with (λ_α, u_α) from the inertia-weighted Laplacian and homogeneous
/// damping ratio γ.
pub fn measure_closed_form(
    spec: &Spectrum,
    inertia_b: f64,
    gamma: f64,
    fault: &FaultSpec,
) -> Result<f64> {
    if fault.bus >= spec.n() {
        return Err(Error::InvalidArgument(format!(
            "fault bus index {} out of range (N = {})",
            fault.bus,
            spec.n()
        )));
    }
    if !(gamma > 0.0) || !(inertia_b > 0.0) {
        return Err(Error::InvalidArgument(
            "measure requires positive gamma and fault-bus inertia".into(),
        ));
    }
    Ok(fault.delta_p * fault.delta_p / (2.0 * gamma * inertia_b) * pinv_diagonal(spec, fault.bus))
}

/// Performance measure of the fully homogeneous grid (uniform inertia and
/// damping), which depends only on the unweighted Laplacian spectrum:
/// `M_b⁰ = (δP²/2γ) Σ_{α>1} u_αb⁰² / λ_α⁰`.
pub fn measure_homogeneous(spec: &Spectrum, gamma: f64, fault: &FaultSpec) -> Result<f64> {
    measure_closed_form(spec, 1.0, gamma, fault)
}

/// Same measure through graph quantities:
/// `M_b⁰ = (δP²/2γ) (C_b⁻¹ − Kf₁/N²)` with resistance-distance centrality
/// C_b and Kirchhoff index Kf₁. Algebraically identical to
/// [`measure_homogeneous`]; kept as an independent evaluation route.
pub fn measure_homogeneous_graph(spec: &Spectrum, gamma: f64, fault: &FaultSpec) -> Result<f64> {
    if fault.bus >= spec.n() {
        return Err(Error::InvalidArgument(format!(
            "fault bus index {} out of range (N = {})",
            fault.bus,
            spec.n()
        )));
    }
    let n = spec.n() as f64;
    let c = crate::spectral::centrality(spec, fault.bus);
    let kf1 = crate::spectral::kirchhoff_index(spec, 1);
    Ok(fault.delta_p * fault.delta_p / (2.0 * gamma) * (1.0 / c - kf1 / (n * n)))
}

fn coupling_matrix(spec: &Spectrum, a: &DVector<f64>) -> DMatrix<f64> {
    // V_{αβ} = Σ_i a_i u_αi u_βi = (U diag(a) Uᵀ)_{αβ}.
    let n = spec.n();
    let mut ua = spec.u.clone();
    for alpha in 0..n {
        for i in 0..n {
            ua[(alpha, i)] *= a[i];
        }
    }
    &ua * spec.u.transpose()
}

fn check_perturbation_args(
    spec: &Spectrum,
    g: f64,
    a: &DVector<f64>,
    drive: &ModalDrive,
) -> Result<()> {
    spec.require_nondegenerate()?;
    if a.len() != spec.n() || drive.p.len() != spec.n() {
        return Err(Error::InvalidArgument(
            "perturbation shape/drive length does not match spectrum size".into(),
        ));
    }
    if !(g.abs() < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "perturbation amplitude |g| must be < 1, got {g}"
        )));
    }
    Ok(())
}

/// Modal velocities to first order in g when the damping ratios deviate as
/// γ_i = γ (1 + g a_i), with V_{αβ} = Σ_i a_i u_αi u_βi:
///
/// ```text
/// ξ̇_α(t) = (𝒫_α/f_α) e^{−γt/2} [ 2 s_α (1 + g (γ²/f_α²) V_αα)
///                                − g γ t V_αα (s_α + (γ/f_α) c_α) ]
///        + g γ Σ_{β≠α,β>1} (V_αβ 𝒫_β)/(λ_α−λ_β)
///                          e^{−γt/2} [ (γ/f_β) s_β − (γ/f_α) s_α + c_α − c_β ]
///        + g γ (V_α1 𝒫₁ / λ_α) [ e^{−γt/2} (c_α − (γ/f_α) s_α) − e^{−γt} ]
/// ```
///
/// with s_α = sin(f_α t/2), c_α = cos(f_α t/2). The last line is the
/// coupling to the (overdamped) zero mode; `include_zero_mode` keeps or
/// drops it. Slot 0 carries the zero mode's own first-order velocity.
/// Near-degenerate spectra are rejected because of the 1/(λ_α−λ_β) factors.
pub fn perturbed_modal_velocity(
    spec: &Spectrum,
    gamma: f64,
    g: f64,
    a: &DVector<f64>,
    drive: &ModalDrive,
    t: f64,
    include_zero_mode: bool,
) -> Result<DVector<f64>> {
    check_perturbation_args(spec, g, a, drive)?;
    let n = spec.n();
    let v2 = coupling_matrix(spec, a);
    let lam = &spec.eigenvalues;
    let envelope = (-0.5 * gamma * t).exp();
    let env_full = (-gamma * t).exp();

    let mut out = DVector::zeros(n);

    let s = DVector::from_iterator(n, (0..n).map(|alpha| (0.5 * drive.f[alpha] * t).sin()));
    let c = DVector::from_iterator(n, (0..n).map(|alpha| (0.5 * drive.f[alpha] * t).cos()));

    for alpha in 1..n {
        let f_a = drive.f[alpha];
        let (s_a, c_a) = (s[alpha], c[alpha]);
        let vaa = v2[(alpha, alpha)];

        let mut val = drive.p[alpha] / f_a
            * envelope
            * (2.0 * s_a * (1.0 + g * gamma * gamma / (f_a * f_a) * vaa)
                - g * gamma * t * vaa * (s_a + gamma / f_a * c_a));

        for beta in 1..n {
            if beta == alpha {
                continue;
            }
            let f_b = drive.f[beta];
            val += g * gamma * v2[(alpha, beta)] * drive.p[beta] / (lam[alpha] - lam[beta])
                * envelope
                * (gamma / f_b * s[beta] - gamma / f_a * s_a + c_a - c[beta]);
        }

        if include_zero_mode {
            val += g * gamma * v2[(alpha, 0)] * drive.p[0] / lam[alpha]
                * (envelope * (c_a - gamma / f_a * s_a) - env_full);
        }

        out[alpha] = val;
    }

    // Zero mode to the same order (not part of the performance measure).
    let mut v0 = drive.p[0] / gamma * (1.0 - env_full);
    v0 -= g * v2[(0, 0)] * drive.p[0] * ((1.0 - env_full) / gamma - t * env_full);
    if include_zero_mode {
        for beta in 1..n {
            let f_b = drive.f[beta];
            v0 -= g * gamma * v2[(0, beta)] * drive.p[beta] / lam[beta]
                * (envelope * (gamma / f_b * s[beta] - c[beta]) + env_full);
        }
    }
    out[0] = v0;

    Ok(out)
}

/// Per-mode energies ∫₀^∞ ξ̇_α² dt to first order in g:
///
/// ```text
/// E_α = 𝒫_α² (1 − g V_αα) / (2γλ_α)
///     − 2gγ Σ_{β≠α} (V_αβ 𝒫_α 𝒫_β) / [ (λ_α−λ_β)² + 2γ² (λ_α+λ_β) ] ,
/// ```
///
/// where the β-sum runs over the oscillatory modes and, when
/// `include_zero_mode` is set, also over β = 1 (λ_β = 0). Slot 0 is zero:
/// the zero mode is excluded from the measure by construction. The summed
/// energies give the perturbed performance measure
/// M(g) = Σ_{α>1} E_α + O(g²).
pub fn modal_energy_integral(
    spec: &Spectrum,
    gamma: f64,
    g: f64,
    a: &DVector<f64>,
    drive: &ModalDrive,
    include_zero_mode: bool,
) -> Result<DVector<f64>> {
    check_perturbation_args(spec, g, a, drive)?;
    let n = spec.n();
    let v2 = coupling_matrix(spec, a);
    let lam = &spec.eigenvalues;

    let mut out = DVector::zeros(n);
    for alpha in 1..n {
        let p_a = drive.p[alpha];
        let mut e = p_a * p_a * (1.0 - g * v2[(alpha, alpha)]) / (2.0 * gamma * lam[alpha]);
        let beta_start = if include_zero_mode { 0 } else { 1 };
        for beta in beta_start..n {
            if beta == alpha {
                continue;
            }
            let dl = lam[alpha] - lam[beta];
            let denom = dl * dl + 2.0 * gamma * gamma * (lam[alpha] + lam[beta]);
            e -= 2.0 * g * gamma * v2[(alpha, beta)] * p_a * drive.p[beta] / denom;
        }
        out[alpha] = e;
    }
    Ok(out)
}
