//! Dispersive elimination of coupler modes and its exact-diagonalization check.
//!
//! Energies are measured from the coupler frequency, so qubit `i` sits at
//! `detuning_i` and a coupler photon at 0. In the single-excitation sector
//! the coupler is exactly a two-level mode.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::linalg::symmetric_eigen;
use crate::model::MicroscopicParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectivePairCouplings {
    pub t_c_eff: f64,
    pub t_p_eff: f64,
    pub lamb_shift_a: f64,
    pub lamb_shift_b: f64,
}

pub fn effective_pair_couplings(micro: &MicroscopicParams) -> EffectivePairCouplings {
    let (da, db) = (micro.detuning_a, micro.detuning_b);
    EffectivePairCouplings {
        t_c_eff: 0.5 * micro.g_a * micro.g_b * (1.0 / da + 1.0 / db),
        t_p_eff: micro.g_bar_a * micro.g_bar_a / da,
        lamb_shift_a: micro.g_a * micro.g_a / da,
        lamb_shift_b: micro.g_b * micro.g_b / db,
    }
}

/// Waveguide-mediated exchange and correlated decay of two emitters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaveguidePair {
    pub g_ab: f64,
    pub gamma_ab: f64,
}

pub fn waveguide_pair(d: f64, gamma0: f64, lambda0: f64) -> Result<WaveguidePair> {
    if !(gamma0 > 0.0 && gamma0.is_finite()) {
        return Err(invalid("gamma0", "must be finite and > 0"));
    }
    if !(lambda0 > 0.0 && lambda0.is_finite()) {
        return Err(invalid("lambda0", "must be finite and > 0"));
    }
    if !d.is_finite() {
        return Err(invalid("d_ab", "must be finite"));
    }
    let phase = 2.0 * std::f64::consts::PI * d / lambda0;
    Ok(WaveguidePair { g_ab: 0.5 * gamma0 * phase.sin(), gamma_ab: gamma0 * phase.cos() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Relative,
    Absolute,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub check: String,
    /// `max|g| / min|Delta|`.
    pub g_over_delta: f64,
    /// Second-order prediction of the checked quantity.
    pub effective: f64,
    /// Same quantity from exact diagonalization.
    pub exact: f64,
    pub error: f64,
    pub error_kind: ErrorKind,
    pub bound: f64,
    pub within_bound: bool,
    /// `|sum of eigenvalues - trace|` of the exact model.
    pub trace_residual: f64,
    /// Nearest-neighbour couplings `(J12, J23)` of the three-qubit model.
    pub nearest_neighbour: Option<(f64, f64)>,
}

fn ratio(micro: &MicroscopicParams) -> (f64, f64) {
    let g = micro.g_a.abs().max(micro.g_b.abs());
    let d = micro.detuning_a.abs().min(micro.detuning_b.abs());
    (g, d)
}

/// Indices of the `k` eigenvectors with the largest weight on `rows`.
fn most_weighted(vecs: &DMatrix<f64>, rows: &[usize], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..vecs.ncols()).collect();
    let w = |c: usize| rows.iter().map(|&r| vecs[(r, c)].powi(2)).sum::<f64>();
    order.sort_by(|&a, &b| w(b).total_cmp(&w(a)));
    order.truncate(k);
    order.sort_unstable();
    order
}

/// Two qubits sharing one coupler; basis `(A, B, photon)`.
pub fn sw_validate_two_qubit(micro: &MicroscopicParams) -> Result<ValidationReport> {
    micro.validate()?;
    let (da, db) = (micro.detuning_a, micro.detuning_b);
    #[rustfmt::skip]
    let h = DMatrix::from_row_slice(3, 3, &[
        da, 0.0, micro.g_a,
        0.0, db, micro.g_b,
        micro.g_a, micro.g_b, 0.0,
    ]);
    let trace = h.trace();
    let (vals, vecs) = symmetric_eigen(h)?;
    let trace_residual = (vals.iter().sum::<f64>() - trace).abs();
    let q = most_weighted(&vecs, &[0, 1], 2);
    let exact = (vals[q[1]] - vals[q[0]]).abs();

    let eff = effective_pair_couplings(micro);
    let asym = (da + eff.lamb_shift_a) - (db + eff.lamb_shift_b);
    let effective = (asym * asym + 4.0 * eff.t_c_eff * eff.t_c_eff).sqrt();
    let error = if effective == exact { 0.0 } else { (exact - effective).abs() / effective.abs() };
    let (g, d) = ratio(micro);
    let bound = 5.0 * (g / d).powi(2);
    Ok(ValidationReport {
        check: "two_qubit_splitting".into(),
        g_over_delta: g / d,
        effective,
        exact,
        error,
        error_kind: ErrorKind::Relative,
        bound,
        within_bound: error <= bound,
        trace_residual,
        nearest_neighbour: None,
    })
}

/// Effective Hamiltonian on `rows` from the eigenpairs `cols` by symmetric
/// (des Cloizeaux) orthogonalization of their projections.
fn projected_hamiltonian(vals: &[f64], vecs: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> Result<DMatrix<f64>> {
    let k = rows.len();
    let b = DMatrix::from_fn(k, cols.len(), |i, j| vecs[(rows[i], cols[j])]);
    let e = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(cols.len(), cols.iter().map(|&c| vals[c])));
    let (s_vals, s_vecs) = symmetric_eigen(&b * b.transpose())?;
    let inv_sqrt = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        k,
        s_vals.iter().map(|&s| 1.0 / s.sqrt()),
    ));
    let s_inv_half = &s_vecs * inv_sqrt * s_vecs.transpose();
    Ok(&s_inv_half * &b * e * b.transpose() * &s_inv_half)
}

/// Chain `q1 - c12 - q2 - c23 - q3` with all couplings `g` except the
/// `q2 - c23` link, which carries `-g`; basis `(q1, q2, q3, c12, c23)`.
/// Checks that the induced `q1 <-> q3` element is fourth order.
pub fn sw_validate_three_qubit(micro: &MicroscopicParams) -> Result<ValidationReport> {
    micro.validate()?;
    let g = micro.g_a;
    let d = micro.detuning_a;
    #[rustfmt::skip]
    let h = DMatrix::from_row_slice(5, 5, &[
        d,   0.0, 0.0, g,   0.0,
        0.0, d,   0.0, g,   -g,
        0.0, 0.0, d,   0.0, g,
        g,   g,   0.0, 0.0, 0.0,
        0.0, -g,  g,   0.0, 0.0,
    ]);
    let trace = h.trace();
    let (vals, vecs) = symmetric_eigen(h)?;
    let trace_residual = (vals.iter().sum::<f64>() - trace).abs();
    let qubits = [0, 1, 2];
    let cols = most_weighted(&vecs, &qubits, 3);
    let heff = projected_hamiltonian(&vals, &vecs, &qubits, &cols)?;
    let j13 = heff[(0, 2)];
    let scale = g.powi(4) / d.abs().powi(3);
    let bound = 10.0 * scale;
    let error = j13.abs();
    Ok(ValidationReport {
        check: "three_qubit_next_nearest".into(),
        g_over_delta: g.abs() / d.abs(),
        effective: 0.0,
        exact: j13,
        error,
        error_kind: ErrorKind::Absolute,
        bound,
        within_bound: error <= bound,
        trace_residual,
        nearest_neighbour: Some((heff[(0, 1)], heff[(1, 2)])),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sym(g: f64, d: f64) -> MicroscopicParams {
        MicroscopicParams::symmetric(g, d).unwrap()
    }

    #[test]
    fn couplings_examples() {
        let e = effective_pair_couplings(&sym(0.05, 0.5));
        assert!((e.t_c_eff - 0.005).abs() < 1e-15);
        assert!((e.lamb_shift_a - 0.005).abs() < 1e-15);
        assert!((e.lamb_shift_b - 0.005).abs() < 1e-15);
        assert!((e.t_p_eff - 0.005).abs() < 1e-15);

        let mut m = sym(0.05, 0.5);
        m.g_a = 0.0;
        let e = effective_pair_couplings(&m);
        assert_eq!((e.t_c_eff, e.lamb_shift_a), (0.0, 0.0));
    }

    #[test]
    fn waveguide_examples() {
        let w = waveguide_pair(1.0, 0.2, 1.0).unwrap();
        assert!(w.g_ab.abs() < 1e-15 && (w.gamma_ab - 0.2).abs() < 1e-15);
        let w = waveguide_pair(0.25, 0.2, 1.0).unwrap();
        assert!((w.g_ab - 0.1).abs() < 1e-15 && w.gamma_ab.abs() < 1e-15);
        let w = waveguide_pair(0.5, 0.2, 1.0).unwrap();
        assert!(w.g_ab.abs() < 1e-15 && (w.gamma_ab + 0.2).abs() < 1e-15);
        assert!(waveguide_pair(0.5, 0.0, 1.0).is_err());
        assert!(waveguide_pair(0.5, 1.0, -1.0).is_err());
    }

    #[test]
    fn two_qubit_error_scaling() {
        let a = sw_validate_two_qubit(&sym(0.05, 0.5)).unwrap();
        let b = sw_validate_two_qubit(&sym(0.01, 0.5)).unwrap();
        assert!(a.within_bound && b.within_bound, "{a:?} {b:?}");
        let r = a.error / b.error;
        assert!((25.0 / 3.0..75.0).contains(&r), "ratio {r}");
        // Closed form for the symmetric model: relative error ~ 2 (g/Delta)^2.
        assert!((a.error - 0.02).abs() < 2e-3);
    }

    #[test]
    fn two_qubit_decoupled_is_exact() {
        let r = sw_validate_two_qubit(&sym(0.0, 0.5)).unwrap();
        assert_eq!(r.error, 0.0);
    }

    #[test]
    fn two_qubit_asymmetric_detunings() {
        let m = MicroscopicParams::new(1.0, 1.0, 1.0, 0.04, 0.05, 0.0, 0.5, 0.6).unwrap();
        let r = sw_validate_two_qubit(&m).unwrap();
        assert!(r.within_bound, "{r:?}");
    }

    #[test]
    fn three_qubit_next_nearest_is_fourth_order() {
        let r = sw_validate_three_qubit(&sym(0.05, 0.5)).unwrap();
        assert!(r.within_bound, "{r:?}");
        assert!(r.error < 5e-4);
        let (j12, j23) = r.nearest_neighbour.unwrap();
        assert!((j12.abs() - 0.005).abs() < 5e-4);
        assert!(j12 * j23 < 0.0, "nearest couplings must carry opposite signs");
        assert!((j12 + j23).abs() < 1e-12);
    }

    #[test]
    fn three_qubit_decoupled() {
        let r = sw_validate_three_qubit(&sym(0.0, 0.5)).unwrap();
        assert_eq!(r.exact, 0.0);
    }

    proptest! {
        #[test]
        fn waveguide_unit_circle(d in -10.0f64..10.0, g0 in 0.01f64..5.0, l0 in 0.1f64..5.0) {
            let w = waveguide_pair(d, g0, l0).unwrap();
            let s = (2.0 * w.g_ab / g0).powi(2) + (w.gamma_ab / g0).powi(2);
            prop_assert!((s - 1.0).abs() < 1e-12);
        }

        #[test]
        fn oracle_conserves_trace(g in 0.0f64..0.09, d in 0.5f64..2.0) {
            let m = sym(g, d);
            prop_assert!(sw_validate_two_qubit(&m).unwrap().trace_residual < 1e-12);
            prop_assert!(sw_validate_three_qubit(&m).unwrap().trace_residual < 1e-12);
        }

        #[test]
        fn halving_g_quarters_error(g in 0.02f64..0.09) {
            let a = sw_validate_two_qubit(&sym(g, 0.5)).unwrap().error;
            let b = sw_validate_two_qubit(&sym(g / 2.0, 0.5)).unwrap().error;
            prop_assert!((2.5..6.0).contains(&(a / b)));
        }
    }
}
