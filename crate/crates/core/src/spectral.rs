//! Spectral decomposition of network Laplacians and derived graph quantities.
//!
//! The central object is the inertia-weighted Laplacian
//! `L_M = M^{−1/2} L M^{−1/2}` whose eigenpairs (λ_α, u_α) govern the
//! frequency transient. Eigenvalues are returned in ascending order with the
//! connected-network zero mode snapped to exactly 0; the zero-mode
//! eigenvector is replaced by its known analytic form (uniform for `L`,
//! ∝ √m_i for `L_M`).
//!
//! Derived quantities: resistance distances `Ω_ij`, closeness centralities
//! `C_j = N / Σ_i Ω_ij`, and generalized Kirchhoff indices
//! `Kf_p = N Σ_{α>1} λ_α^{−p}`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative threshold below which the smallest eigenvalue is snapped to zero.
pub const ZERO_MODE_REL_TOL: f64 = 1e-9;
/// Relative eigenvalue gap below which the spectrum is flagged degenerate.
pub const DEGENERACY_REL_TOL: f64 = 1e-8;
/// Permitted relative asymmetry of the input matrix.
pub const SYMMETRY_REL_TOL: f64 = 1e-10;

/// Which mass weighting produced the decomposed matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Weighting {
    /// Plain network Laplacian `L`.
    Unweighted,
    /// `L_M = M^{−1/2} L M^{−1/2}` for the given inertia vector.
    Inertia(DVector<f64>),
}

/// Sorted eigendecomposition of a (weighted) network Laplacian.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Eigenvalues, ascending; `eigenvalues[0] == 0` exactly.
    pub eigenvalues: DVector<f64>,
    /// Row α holds the eigenvector u_α (so `u * u.transpose() == I`).
    pub u: DMatrix<f64>,
    /// Mass weighting of the decomposed matrix.
    pub weighting: Weighting,
    /// True when some consecutive eigenvalue gap above the zero mode is below
    /// [`DEGENERACY_REL_TOL`] × λ_max; perturbative formulas refuse such spectra.
    pub degenerate: bool,
}

impl Spectrum {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Component i of eigenvector α.
    #[inline]
    pub fn u_comp(&self, alpha: usize, i: usize) -> f64 {
        self.u[(alpha, i)]
    }

    /// Smallest nonzero eigenvalue λ₂ (Fiedler value).
    pub fn lambda2(&self) -> f64 {
        self.eigenvalues[1]
    }

    /// Smallest gap between consecutive eigenvalues above the zero mode.
    pub fn min_gap(&self) -> f64 {
        let n = self.n();
        let mut gap = f64::INFINITY;
        for alpha in 1..n - 1 {
            gap = gap.min(self.eigenvalues[alpha + 1] - self.eigenvalues[alpha]);
        }
        gap
    }

    /// Errors with [`Error::DegenerateSpectrum`] when the degeneracy flag is set.
    pub fn require_nondegenerate(&self) -> Result<()> {
        if self.degenerate {
            Err(Error::DegenerateSpectrum {
                gap: self.min_gap(),
                threshold: DEGENERACY_REL_TOL * self.eigenvalues[self.n() - 1],
            })
        } else {
            Ok(())
        }
    }
}

/// Builds the inertia-weighted Laplacian `M^{−1/2} L M^{−1/2}`.
pub fn weighted_laplacian(
    laplacian: &DMatrix<f64>,
    inertia: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let n = laplacian.nrows();
    if inertia.len() != n {
        return Err(Error::InvalidArgument(format!(
            "inertia vector length {} does not match matrix size {}",
            inertia.len(),
            n
        )));
    }
    for (i, &m) in inertia.iter().enumerate() {
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::NonPositiveParameter {
                bus: format!("#{i}"),
                field: "inertia",
                value: m,
            });
        }
    }
    let inv_sqrt: Vec<f64> = inertia.iter().map(|&m| 1.0 / m.sqrt()).collect();
    let mut out = laplacian.clone();
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    Ok(out)
}

/// Eigendecomposes a symmetric (weighted) Laplacian.
///
/// Checks symmetry, sorts eigenvalues ascending, fixes each eigenvector's
/// sign so its first component of significant magnitude is positive, snaps
/// the zero mode to exactly 0, and substitutes the analytic zero-mode
/// eigenvector implied by `weighting`. A second near-zero eigenvalue means
/// the network is disconnected and is rejected.
pub fn eigendecompose(matrix: &DMatrix<f64>, weighting: Weighting) -> Result<Spectrum> {
    let n = matrix.nrows();
    if n != matrix.ncols() || n < 2 {
        return Err(Error::InvalidArgument(format!(
            "expected square matrix of size ≥ 2, got {}×{}",
            n,
            matrix.ncols()
        )));
    }
    if let Weighting::Inertia(m) = &weighting {
        if m.len() != n {
            return Err(Error::InvalidArgument(
                "inertia vector length does not match matrix size".into(),
            ));
        }
    }

    let scale = matrix.amax().max(f64::MIN_POSITIVE);
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            asym = asym.max((matrix[(i, j)] - matrix[(j, i)]).abs());
        }
    }
    if asym > SYMMETRY_REL_TOL * scale {
        return Err(Error::NotSymmetric(asym));
    }

    // Symmetrize exactly before the QR iteration to keep the decomposition
    // orthogonal to working precision.
    let mut sym = matrix.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (sym[(i, j)] + sym[(j, i)]);
            sym[(i, j)] = avg;
            sym[(j, i)] = avg;
        }
    }

    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut eigenvalues = DVector::zeros(n);
    let mut u = DMatrix::zeros(n, n);
    for (alpha, &k) in order.iter().enumerate() {
        eigenvalues[alpha] = eig.eigenvalues[k];
        let col = eig.eigenvectors.column(k);
        for i in 0..n {
            u[(alpha, i)] = col[i];
        }
    }

    let lambda_max = eigenvalues[n - 1].abs().max(f64::MIN_POSITIVE);
    if eigenvalues[0].abs() > ZERO_MODE_REL_TOL * lambda_max {
        return Err(Error::NoZeroMode(eigenvalues[0]));
    }
    if eigenvalues[1].abs() <= ZERO_MODE_REL_TOL * lambda_max {
        return Err(Error::MultipleZeroModes);
    }
    eigenvalues[0] = 0.0;

    // The zero-mode eigenvector is known exactly; substituting it removes
    // rounding noise from every downstream zero-mode projection.
    match &weighting {
        Weighting::Unweighted => {
            let v = 1.0 / (n as f64).sqrt();
            for i in 0..n {
                u[(0, i)] = v;
            }
        }
        Weighting::Inertia(m) => {
            let total: f64 = m.sum();
            let norm = total.sqrt();
            for i in 0..n {
                u[(0, i)] = m[i].sqrt() / norm;
            }
        }
    }

    // Sign convention: first component with significant magnitude positive.
    for alpha in 1..n {
        let row = u.row(alpha);
        let maxabs = row.amax();
        let lead = (0..n).find(|&i| row[i].abs() > 1e-8 * maxabs).unwrap_or(0);
        if u[(alpha, lead)] < 0.0 {
            for i in 0..n {
                u[(alpha, i)] = -u[(alpha, i)];
            }
        }
    }

    let mut degenerate = false;
    for alpha in 1..n - 1 {
        if eigenvalues[alpha + 1] - eigenvalues[alpha] < DEGENERACY_REL_TOL * lambda_max {
            degenerate = true;
            break;
        }
    }

    Ok(Spectrum {
        eigenvalues,
        u,
        weighting,
        degenerate,
    })
}

/// Resistance distance between buses i and j:
///
/// ```text
/// Ω_ij = Σ_{α>1} (u_αi − u_αj)² / λ_α .
/// ```
///
/// Equals `L†_ii + L†_jj − 2 L†_ij` for the unweighted Laplacian
/// pseudo-inverse; a metric on the network (zero iff i = j).
pub fn resistance_distance(spec: &Spectrum, i: usize, j: usize) -> f64 {
    debug_assert!(matches!(spec.weighting, Weighting::Unweighted));
    if i == j {
        return 0.0;
    }
    let n = spec.n();
    let mut total = 0.0;
    for alpha in 1..n {
        let d = spec.u[(alpha, i)] - spec.u[(alpha, j)];
        total += d * d / spec.eigenvalues[alpha];
    }
    total
}

/// Resistance-distance closeness centrality `C_j = N / Σ_i Ω_ij`.
pub fn centrality(spec: &Spectrum, j: usize) -> f64 {
    let n = spec.n();
    let mut sum = 0.0;
    for i in 0..n {
        sum += resistance_distance(spec, i, j);
    }
    n as f64 / sum
}

/// Generalized Kirchhoff index `Kf_p = N Σ_{α>1} λ_α^{−p}`.
pub fn kirchhoff_index(spec: &Spectrum, p: i32) -> f64 {
    let n = spec.n();
    let mut sum = 0.0;
    for alpha in 1..n {
        sum += spec.eigenvalues[alpha].powi(-p);
    }
    n as f64 * sum
}

/// Σ_{α>1} u_αb² / λ_α, the fault-bus diagonal of the Laplacian
/// pseudo-inverse. Also expressible through graph quantities as
/// `C_b⁻¹ − Kf₁/N²`, which [`crate::response::measure_homogeneous_graph`]
/// exploits.
pub fn pinv_diagonal(spec: &Spectrum, b: usize) -> f64 {
    let n = spec.n();
    let mut sum = 0.0;
    for alpha in 1..n {
        let u = spec.u[(alpha, b)];
        sum += u * u / spec.eigenvalues[alpha];
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn two_bus_laplacian() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0])
    }

    fn ring_laplacian(n: usize, b: f64) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(n, n);
        for i in 0..n {
            let j = (i + 1) % n;
            l[(i, i)] += b;
            l[(j, j)] += b;
            l[(i, j)] -= b;
            l[(j, i)] -= b;
        }
        l
    }

    fn star_laplacian(n: usize, b: f64) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(n, n);
        for i in 1..n {
            l[(0, 0)] += b;
            l[(i, i)] += b;
            l[(0, i)] -= b;
            l[(i, 0)] -= b;
        }
        l
    }

    #[test]
    fn weighted_laplacian_scales_by_inverse_sqrt_masses() {
        let l = two_bus_laplacian();
        let m = DVector::from_row_slice(&[1.0, 4.0]);
        let lm = weighted_laplacian(&l, &m).unwrap();
        assert_abs_diff_eq!(lm[(0, 0)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(lm[(0, 1)], -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(lm[(1, 1)], 0.25, epsilon = 1e-15);

        // Uniform masses m: L_M = L/m.
        let m = DVector::from_row_slice(&[4.0, 4.0]);
        let lm = weighted_laplacian(&l, &m).unwrap();
        assert_abs_diff_eq!((lm - l / 4.0).amax(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn weighted_laplacian_rejects_bad_masses() {
        let l = two_bus_laplacian();
        assert!(weighted_laplacian(&l, &DVector::from_row_slice(&[1.0])).is_err());
        assert!(weighted_laplacian(&l, &DVector::from_row_slice(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn two_bus_spectrum() {
        let spec = eigendecompose(&two_bus_laplacian(), Weighting::Unweighted).unwrap();
        assert_eq!(spec.eigenvalues[0], 0.0);
        assert_abs_diff_eq!(spec.eigenvalues[1], 2.0, epsilon = 1e-14);
        let s = 1.0 / 2.0f64.sqrt();
        assert_abs_diff_eq!(spec.u[(0, 0)], s, epsilon = 1e-14);
        assert_abs_diff_eq!(spec.u[(0, 1)], s, epsilon = 1e-14);
        // Sign convention: leading significant component positive.
        assert_abs_diff_eq!(spec.u[(1, 0)], s, epsilon = 1e-14);
        assert_abs_diff_eq!(spec.u[(1, 1)], -s, epsilon = 1e-14);
        assert!(!spec.degenerate);
    }

    #[test]
    fn complete_graph_spectrum_is_zero_then_n() {
        let n = 6;
        let mut l = DMatrix::from_element(n, n, -1.0);
        for i in 0..n {
            l[(i, i)] = (n - 1) as f64;
        }
        let spec = eigendecompose(&l, Weighting::Unweighted).unwrap();
        assert_eq!(spec.eigenvalues[0], 0.0);
        for alpha in 1..n {
            assert_relative_eq!(spec.eigenvalues[alpha], n as f64, max_relative = 1e-12);
        }
        // Fully degenerate nonzero block is flagged.
        assert!(spec.degenerate);
    }

    #[test]
    fn orthonormality_and_reconstruction() {
        let l = ring_laplacian(12, 1.3);
        let spec = eigendecompose(&l, Weighting::Unweighted).unwrap();
        let n = 12;
        let gram = &spec.u * spec.u.transpose();
        assert_abs_diff_eq!(
            (gram - DMatrix::identity(n, n)).amax(),
            0.0,
            epsilon = 1e-10
        );
        // U^T Λ U reconstructs the input.
        let lambda = DMatrix::from_diagonal(&spec.eigenvalues);
        let rebuilt = spec.u.transpose() * lambda * &spec.u;
        assert!(((&rebuilt - &l).amax()) <= 1e-9 * l.amax());
    }

    #[test]
    fn weighted_zero_mode_is_sqrt_mass_profile() {
        let l = ring_laplacian(5, 1.0);
        let m = DVector::from_row_slice(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let lm = weighted_laplacian(&l, &m).unwrap();
        let spec = eigendecompose(&lm, Weighting::Inertia(m.clone())).unwrap();
        let total: f64 = m.sum();
        for i in 0..5 {
            assert_abs_diff_eq!(spec.u[(0, i)], (m[i] / total).sqrt(), epsilon = 1e-14);
        }
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        // Block-diagonal Laplacian of two 2-cliques.
        let mut l = DMatrix::zeros(4, 4);
        for &(a, b) in &[(0usize, 1usize), (2, 3)] {
            l[(a, a)] += 1.0;
            l[(b, b)] += 1.0;
            l[(a, b)] -= 1.0;
            l[(b, a)] -= 1.0;
        }
        assert!(matches!(
            eigendecompose(&l, Weighting::Unweighted),
            Err(Error::MultipleZeroModes)
        ));
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let mut l = two_bus_laplacian();
        l[(0, 1)] = -1.0 + 1e-6;
        assert!(matches!(
            eigendecompose(&l, Weighting::Unweighted),
            Err(Error::NotSymmetric(_))
        ));
    }

    #[test]
    fn shifted_matrix_has_no_zero_mode() {
        let mut l = two_bus_laplacian();
        l[(0, 0)] += 0.5;
        l[(1, 1)] += 0.5;
        assert!(matches!(
            eigendecompose(&l, Weighting::Unweighted),
            Err(Error::NoZeroMode(_))
        ));
    }

    #[test]
    fn resistance_distances_on_small_graphs() {
        let spec = eigendecompose(&two_bus_laplacian(), Weighting::Unweighted).unwrap();
        assert_abs_diff_eq!(resistance_distance(&spec, 0, 1), 1.0, epsilon = 1e-12);
        assert_eq!(resistance_distance(&spec, 1, 1), 0.0);

        // Path A-B-C with unit lines: Ω_AC = 2 (series), Ω_AB = 1.
        let mut l = DMatrix::zeros(3, 3);
        for &(a, b) in &[(0usize, 1usize), (1, 2)] {
            l[(a, a)] += 1.0;
            l[(b, b)] += 1.0;
            l[(a, b)] -= 1.0;
            l[(b, a)] -= 1.0;
        }
        let spec = eigendecompose(&l, Weighting::Unweighted).unwrap();
        assert_relative_eq!(resistance_distance(&spec, 0, 2), 2.0, max_relative = 1e-12);
        assert_relative_eq!(resistance_distance(&spec, 0, 1), 1.0, max_relative = 1e-12);
        // Symmetry and triangle identity on the path: Ω_AC = Ω_AB + Ω_BC.
        assert_relative_eq!(
            resistance_distance(&spec, 2, 0),
            resistance_distance(&spec, 0, 1) + resistance_distance(&spec, 1, 2),
            max_relative = 1e-12
        );
    }

    #[test]
    fn resistance_matches_pseudo_inverse_route() {
        let l = ring_laplacian(9, 0.7);
        let spec = eigendecompose(&l, Weighting::Unweighted).unwrap();
        let svd = l.clone().svd(true, true);
        let cutoff = 1e-10 * svd.singular_values.amax();
        let pinv = svd.pseudo_inverse(cutoff).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                let via_pinv = pinv[(i, i)] + pinv[(j, j)] - 2.0 * pinv[(i, j)];
                assert_abs_diff_eq!(resistance_distance(&spec, i, j), via_pinv, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn centrality_ranks_star_center_highest() {
        let spec = eigendecompose(&star_laplacian(7, 1.0), Weighting::Unweighted).unwrap();
        let center = centrality(&spec, 0);
        let leaf = centrality(&spec, 3);
        assert!(center > leaf);
        // Two-bus: Σ_i Ω_i1 = 1, C = 2/1.
        let spec2 = eigendecompose(&two_bus_laplacian(), Weighting::Unweighted).unwrap();
        assert_relative_eq!(centrality(&spec2, 0), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn ring_centralities_are_uniform() {
        let spec = eigendecompose(&ring_laplacian(8, 1.0), Weighting::Unweighted).unwrap();
        let c0 = centrality(&spec, 0);
        for j in 1..8 {
            assert_relative_eq!(centrality(&spec, j), c0, max_relative = 1e-10);
        }
    }

    #[test]
    fn kirchhoff_index_values_and_scaling() {
        let spec = eigendecompose(&two_bus_laplacian(), Weighting::Unweighted).unwrap();
        assert_relative_eq!(kirchhoff_index(&spec, 1), 1.0, max_relative = 1e-12);

        // Kf₁ equals the sum of pairwise resistance distances.
        let l = ring_laplacian(7, 1.0);
        let spec = eigendecompose(&l, Weighting::Unweighted).unwrap();
        let mut pairwise = 0.0;
        for i in 0..7 {
            for j in (i + 1)..7 {
                pairwise += resistance_distance(&spec, i, j);
            }
        }
        assert_relative_eq!(kirchhoff_index(&spec, 1), pairwise, max_relative = 1e-10);

        // Scaling every susceptance by c scales Kf_p by c^{−p}.
        let spec_scaled = eigendecompose(&(l * 3.0), Weighting::Unweighted).unwrap();
        for p in 1..=2 {
            assert_relative_eq!(
                kirchhoff_index(&spec_scaled, p),
                kirchhoff_index(&spec, p) * 3.0f64.powi(-p),
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn pinv_diagonal_matches_graph_identity() {
        // Σ_{α>1} u_αb²/λ_α = C_b⁻¹ − Kf₁/N².
        let l = star_laplacian(9, 1.4);
        let spec = eigendecompose(&l, Weighting::Unweighted).unwrap();
        let n = 9.0;
        for b in 0..9 {
            let lhs = pinv_diagonal(&spec, b);
            let rhs = 1.0 / centrality(&spec, b) - kirchhoff_index(&spec, 1) / (n * n);
            assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
        }
    }
}
