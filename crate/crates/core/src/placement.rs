//! Discrete placement of inertia and primary-control budgets.
//!
//! Each algorithm distributes a fixed total budget over the buses as
//! deviation signs r_i, a_i ∈ {−1, 0, +1} with Σ r_i = Σ a_i = 0,
//! minimizing the first-order change Σ ρ_i r_i + Σ α_i a_i predicted by the
//! susceptibilities. The single-resource problem is a linear program whose
//! vertices lie in {−1, 0, +1}^N, solved exactly by sorting; the combined
//! problem adds the nonconvex constraint Σ r_i a_i = 0 (fixed total damping
//! d_i = m_i γ_i) and is handled by an orthogonalization heuristic that
//! zeroes opposite-signed pairs.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which placement algorithm produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Inertia,
    Damping,
    Combined,
}

/// Fault-probability weighting used when aggregating susceptibilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Uniform,
    Squared,
    Threshold,
}

/// A sign placement with its predicted first-order objective change and
/// integer constraint residuals (Σr, Σa, Σra).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlacementResult {
    pub algorithm: Algorithm,
    pub weighting: WeightKind,
    pub r: Vec<i8>,
    pub a: Vec<i8>,
    pub objective_linear: f64,
    pub residuals: (i64, i64, i64),
    /// Pair-zeroing passes the combined algorithm ran (0 for the pure
    /// single-resource placements); bounded by ⌈N/2⌉.
    pub zeroing_passes: usize,
}

impl PlacementResult {
    /// Bundle sign vectors with their objective and residuals.
    pub fn assemble(
        algorithm: Algorithm,
        weighting: WeightKind,
        r: Vec<i8>,
        a: Vec<i8>,
        rho: &DVector<f64>,
        alpha: &DVector<f64>,
        zeroing_passes: usize,
    ) -> Self {
        let objective_linear = linear_objective(&r, rho) + linear_objective(&a, alpha);
        let residuals = residuals(&r, &a);
        PlacementResult {
            algorithm,
            weighting,
            r,
            a,
            objective_linear,
            residuals,
            zeroing_passes,
        }
    }
}

/// Σ c_i x_i for a sign vector x.
pub fn linear_objective(x: &[i8], c: &DVector<f64>) -> f64 {
    x.iter()
        .zip(c.iter())
        .map(|(&xi, &ci)| f64::from(xi) * ci)
        .sum()
}

fn residuals(r: &[i8], a: &[i8]) -> (i64, i64, i64) {
    let sr: i64 = r.iter().map(|&x| i64::from(x)).sum();
    let sa: i64 = a.iter().map(|&x| i64::from(x)).sum();
    let sra: i64 = r
        .iter()
        .zip(a)
        .map(|(&x, &y)| i64::from(x) * i64::from(y))
        .sum();
    (sr, sa, sra)
}

/// Exact minimizer of Σ c_i x_i over |x_i| ≤ 1, Σ x_i = 0: sort c
/// ascending, set x = +1 on the first ⌊N/2⌋ indices and −1 on the last
/// ⌊N/2⌋; for odd N the median index gets 0. Ties break toward ascending
/// bus index so results are deterministic.
pub fn balanced_signs(c: &DVector<f64>) -> Vec<i8> {
    let n = c.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| c[i].total_cmp(&c[j]).then(i.cmp(&j)));
    let half = n / 2;
    let mut x = vec![0i8; n];
    for &i in &order[..half] {
        x[i] = 1;
    }
    for &i in &order[n - half..] {
        x[i] = -1;
    }
    x
}

/// Inertia placement from aggregated susceptibilities ρ: grow inertia
/// (r = +1) where ρ is most negative.
pub fn optimize_inertia(rho_agg: &DVector<f64>) -> Vec<i8> {
    balanced_signs(rho_agg)
}

/// Primary-control placement from aggregated susceptibilities α: grow
/// damping (a = +1) where α is most negative.
pub fn optimize_damping(alpha_agg: &DVector<f64>) -> Vec<i8> {
    balanced_signs(alpha_agg)
}

/// Joint placement under the additional orthogonality constraint
/// Σ r_i a_i = 0, which keeps the total damping Σ d_i = Σ m_i γ_i fixed.
///
/// Seeds r and a from the single-resource solutions, aligns their zeros at
/// a common bus when N is odd (this also makes Σ r_i a_i even, so the loop
/// below can reach zero), then repeatedly zeroes the opposite-signed pair
/// from ℐ = {i : sgn(r_i a_i) = sgn(Σ r a)} whose removal least degrades
/// the linear objective. Each pass shrinks |Σ r a| by exactly 2, so at most
/// ⌈N/2⌉ passes run. The result is feasible but not certified optimal.
pub fn optimize_combined(
    rho_agg: &DVector<f64>,
    alpha_agg: &DVector<f64>,
    weighting: WeightKind,
) -> Result<PlacementResult> {
    let n = rho_agg.len();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "combined placement needs at least two buses".into(),
        ));
    }
    if alpha_agg.len() != n {
        return Err(Error::InvalidArgument(format!(
            "susceptibility vectors disagree in length: {} vs {}",
            n,
            alpha_agg.len()
        )));
    }

    let mut r = balanced_signs(rho_agg);
    let mut a = balanced_signs(alpha_agg);

    if n % 2 == 1 {
        align_zeros(&mut r, &mut a, rho_agg, alpha_agg);
    }

    for pass in 0..=n / 2 {
        let dot: i64 = r
            .iter()
            .zip(&a)
            .map(|(&x, &y)| i64::from(x) * i64::from(y))
            .sum();
        if dot == 0 {
            return Ok(PlacementResult::assemble(
                Algorithm::Combined,
                weighting,
                r,
                a,
                rho_agg,
                alpha_agg,
                pass,
            ));
        }
        let sign = dot.signum() as i8;
        let members: Vec<usize> = (0..n).filter(|&i| r[i] * a[i] == sign).collect();

        // Cheapest opposite-signed pair in ℐ × ℐ, in either field. Ties
        // break toward damping pairs, then lexicographic (i1, i2).
        let mut best: Option<(f64, bool, usize, usize)> = None;
        for (k, &i1) in members.iter().enumerate() {
            for &i2 in &members[k + 1..] {
                if a[i1] == -a[i2] {
                    let cost =
                        -(f64::from(a[i1]) * alpha_agg[i1] + f64::from(a[i2]) * alpha_agg[i2]);
                    if best.is_none_or(|(c, is_a, _, _)| cost < c || (cost == c && !is_a)) {
                        best = Some((cost, true, i1, i2));
                    }
                }
                if r[i1] == -r[i2] {
                    let cost = -(f64::from(r[i1]) * rho_agg[i1] + f64::from(r[i2]) * rho_agg[i2]);
                    if best.is_none_or(|(c, _, _, _)| cost < c) {
                        best = Some((cost, false, i1, i2));
                    }
                }
            }
        }
        match best {
            Some((_, true, i1, i2)) => {
                a[i1] = 0;
                a[i2] = 0;
            }
            Some((_, false, i1, i2)) => {
                r[i1] = 0;
                r[i2] = 0;
            }
            None => return Err(Error::NoFeasiblePair),
        }
    }
    unreachable!("|Σ r a| shrinks by 2 each pass and starts at most N");
}

/// Odd-N zero alignment: move the zeros of r (at i_r0) and a (at i_a0) to
/// the common bus minimizing the objective increase
/// Δ(i) = r_i (ρ_{i_r0} − ρ_i) + a_i (α_{i_a0} − α_i), which is ≥ 0 because
/// the seeds are optimal.
fn align_zeros(r: &mut [i8], a: &mut [i8], rho: &DVector<f64>, alpha: &DVector<f64>) {
    let i_r0 = r
        .iter()
        .position(|&x| x == 0)
        .expect("odd-N seed has a zero");
    let i_a0 = a
        .iter()
        .position(|&x| x == 0)
        .expect("odd-N seed has a zero");
    let mut i_align = 0;
    let mut best = f64::INFINITY;
    for i in 0..r.len() {
        let delta =
            f64::from(r[i]) * (rho[i_r0] - rho[i]) + f64::from(a[i]) * (alpha[i_a0] - alpha[i]);
        if delta < best {
            best = delta;
            i_align = i;
        }
    }
    r.swap(i_r0, i_align);
    a.swap(i_a0, i_align);
}

/// Fault-probability weights η_b from the homogeneous-baseline measures:
/// uniform (all 1), squared (η_b = M_b²), or a hard indicator
/// η_b = 1 iff M_b > threshold.
pub fn weight_scheme(kind: WeightKind, m0: &[f64], m_thres: Option<f64>) -> Result<Vec<f64>> {
    match kind {
        WeightKind::Uniform => Ok(vec![1.0; m0.len()]),
        WeightKind::Squared => Ok(m0.iter().map(|&m| m * m).collect()),
        WeightKind::Threshold => {
            let thres = m_thres.ok_or(Error::MissingThreshold)?;
            Ok(m0
                .iter()
                .map(|&m| if m > thres { 1.0 } else { 0.0 })
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// All x ∈ {−1, 0, +1}^N with Σx = 0, by counting in base 3.
    fn balanced_sign_vectors(n: usize) -> Vec<Vec<i8>> {
        let mut out = Vec::new();
        for code in 0..3usize.pow(n as u32) {
            let mut c = code;
            let mut x = Vec::with_capacity(n);
            let mut sum = 0i64;
            for _ in 0..n {
                let digit = (c % 3) as i8 - 1;
                c /= 3;
                sum += i64::from(digit);
                x.push(digit);
            }
            if sum == 0 {
                out.push(x);
            }
        }
        out
    }

    fn brute_force_min(c: &DVector<f64>) -> f64 {
        balanced_sign_vectors(c.len())
            .iter()
            .map(|x| linear_objective(x, c))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn sorting_examples() {
        let r = optimize_inertia(&DVector::from_row_slice(&[-2.0, 0.0, 5.0]));
        assert_eq!(r, vec![1, 0, -1]);

        // Degenerate tie: ascending-index break.
        let r = optimize_inertia(&DVector::from_row_slice(&[1.0, 1.0, 1.0, 1.0]));
        assert_eq!(r, vec![1, 1, -1, -1]);
        assert_eq!(
            linear_objective(&r, &DVector::from_row_slice(&[1.0; 4])),
            0.0
        );

        // All-negative distinct α: +1 on the two most negative.
        let a = optimize_damping(&DVector::from_row_slice(&[-0.1, -0.4, -0.2, -0.3, -0.05]));
        assert_eq!(a, vec![-1, 1, 0, 1, -1]);
    }

    #[test]
    fn matches_brute_force_for_small_n() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 2..=6 {
            for _ in 0..25 {
                let c = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
                let x = balanced_signs(&c);
                assert_eq!(x.iter().map(|&v| i64::from(v)).sum::<i64>(), 0);
                let obj = linear_objective(&x, &c);
                let best = brute_force_min(&c);
                assert!(
                    (obj - best).abs() <= 1e-12,
                    "N={n}: sorted objective {obj} vs brute force {best}"
                );
            }
        }
    }

    #[test]
    fn agrees_with_stationarity_condition_for_large_n() {
        // x_i = −sgn(ε₀ + c_i) with ε₀ = −median(c) solves the LP when the
        // c_i are distinct; the sorting construction must reproduce it.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &n in &[31usize, 100, 200] {
            let c = DVector::from_fn(n, |i, _| rng.gen_range(-1.0..1.0) + i as f64 * 1e-9);
            let x = balanced_signs(&c);
            let mut sorted: Vec<f64> = c.iter().copied().collect();
            sorted.sort_by(f64::total_cmp);
            let median = if n % 2 == 1 {
                sorted[n / 2]
            } else {
                0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
            };
            for i in 0..n {
                let kkt = -(c[i] - median).signum();
                let expect = if (c[i] - median).abs() == 0.0 {
                    0.0
                } else {
                    kkt
                };
                assert_eq!(f64::from(x[i]), expect, "bus {i} of N={n}");
            }
        }
    }

    #[test]
    fn combined_returns_orthogonal_seeds_unchanged() {
        let rho = DVector::from_row_slice(&[-3.0, -1.0, 1.0, 3.0]);
        let alpha = DVector::from_row_slice(&[-3.0, 1.0, -1.0, 3.0]);
        let out = optimize_combined(&rho, &alpha, WeightKind::Uniform).unwrap();
        assert_eq!(out.r, vec![1, 1, -1, -1]);
        assert_eq!(out.a, vec![1, -1, 1, -1]);
        assert_eq!(out.residuals, (0, 0, 0));
        assert_eq!(out.objective_linear, -16.0);
        assert_eq!(out.algorithm, Algorithm::Combined);
    }

    #[test]
    fn combined_orthogonalizes_conflicting_seeds() {
        // Identical coefficients ⇒ identical seeds ⇒ Σ r a = N; the loop
        // must zero pairs until orthogonal.
        let c = DVector::from_row_slice(&[-2.0, -1.0, 1.0, 2.0]);
        let out = optimize_combined(&c, &c, WeightKind::Uniform).unwrap();
        assert_eq!(out.residuals, (0, 0, 0));
        let zeros =
            out.a.iter().filter(|&&v| v == 0).count() + out.r.iter().filter(|&&v| v == 0).count();
        assert!(
            zeros > 0,
            "conflicting seeds need zeroed pairs: {:?} {:?}",
            out.r,
            out.a
        );
    }

    #[test]
    fn combined_aligns_zeros_for_odd_n() {
        // Distinct minima: ρ favors bus 2 as median, α favors bus 0.
        let rho = DVector::from_row_slice(&[-2.0, -1.0, 0.0, 1.0, 2.0]);
        let alpha = DVector::from_row_slice(&[0.0, -2.0, 2.0, -1.0, 1.0]);
        let out = optimize_combined(&rho, &alpha, WeightKind::Uniform).unwrap();
        assert_eq!(out.residuals, (0, 0, 0));
        // Both zero sets coincide on whatever bus the alignment chose (the
        // loop may add more zeroed pairs afterwards, always in pairs).
        let r_zeros = out.r.iter().filter(|&&v| v == 0).count();
        let a_zeros = out.a.iter().filter(|&&v| v == 0).count();
        assert_eq!(r_zeros % 2, 1);
        assert_eq!(a_zeros % 2, 1);
    }

    #[test]
    fn combined_never_beats_exhaustive_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 4;
        let candidates = balanced_sign_vectors(n);
        let mut worst_gap: f64 = 0.0;
        for _ in 0..50 {
            let rho = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let alpha = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let out = optimize_combined(&rho, &alpha, WeightKind::Uniform).unwrap();
            assert_eq!(out.residuals, (0, 0, 0));

            let mut best = f64::INFINITY;
            for r in &candidates {
                for a in &candidates {
                    let dot: i64 = r
                        .iter()
                        .zip(a)
                        .map(|(&x, &y)| i64::from(x) * i64::from(y))
                        .sum();
                    if dot != 0 {
                        continue;
                    }
                    best = best.min(linear_objective(r, &rho) + linear_objective(a, &alpha));
                }
            }
            assert!(
                out.objective_linear >= best - 1e-12,
                "heuristic beat the exhaustive optimum: {} < {best}",
                out.objective_linear
            );
            worst_gap = worst_gap.max(out.objective_linear - best);
        }
        // The heuristic is not certified optimal; the gap is recorded so a
        // regression that widens it shows up here.
        assert!(worst_gap < 2.0, "optimality gap grew to {worst_gap:.3}");
    }

    #[test]
    fn weight_schemes() {
        assert_eq!(
            weight_scheme(WeightKind::Uniform, &[0.1, 0.2], None).unwrap(),
            vec![1.0, 1.0]
        );
        assert_eq!(
            weight_scheme(WeightKind::Squared, &[0.1, 0.2], None).unwrap(),
            vec![0.010000000000000002, 0.04000000000000001]
        );
        // Strict inequality: the maximum itself is excluded.
        assert_eq!(
            weight_scheme(WeightKind::Threshold, &[0.1, 0.2], Some(0.2)).unwrap(),
            vec![0.0, 0.0]
        );
        assert_eq!(
            weight_scheme(WeightKind::Threshold, &[0.1, 0.2], Some(0.15)).unwrap(),
            vec![0.0, 1.0]
        );
        assert!(matches!(
            weight_scheme(WeightKind::Threshold, &[0.1], None),
            Err(Error::MissingThreshold)
        ));
    }

    proptest! {
        #[test]
        fn combined_output_is_always_feasible(
            coeffs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..12)
        ) {
            let n = coeffs.len();
            let rho = DVector::from_iterator(n, coeffs.iter().map(|c| c.0));
            let alpha = DVector::from_iterator(n, coeffs.iter().map(|c| c.1));
            match optimize_combined(&rho, &alpha, WeightKind::Uniform) {
                Ok(out) => {
                    prop_assert_eq!(out.residuals, (0, 0, 0));
                    prop_assert!(out.r.iter().all(|v| (-1..=1).contains(v)));
                    prop_assert!(out.a.iter().all(|v| (-1..=1).contains(v)));
                    // Seeds minimize each term separately, so the combined
                    // objective can never be positive from zeroing alone.
                    prop_assert!(out.objective_linear <= 1e-12);
                }
                Err(Error::NoFeasiblePair) => {} // surfaced, not guessed
                Err(e) => return Err(TestCaseError::fail(format!("unexpected error {e}"))),
            }
        }
    }
}
