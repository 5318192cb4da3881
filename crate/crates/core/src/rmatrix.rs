//! Channel coefficients, boundary amplitudes and the R-matrix.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::ansatz::RegisterLayout;
use crate::error::{Error, Result};
use crate::oracle::fix_column_signs;

/// Default half-width (Ha) of the excluded window around each pole.
pub const DEFAULT_POLE_GUARD: f64 = 1e-9;

/// `a_{i j(i) k}`: one row per open channel, one column per eigenstate.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelCoefficients {
    pub channels: Vec<String>,
    /// Continuum qubit `j(i)` of each channel.
    pub continuum: Vec<usize>,
    pub a: DMatrix<f64>,
}

/// Reads the channel rows out of `rotation` (rows = layout trials,
/// columns = eigenstates). Trials that are not channels carry bound
/// amplitudes and are left out.
pub fn extract_channel_coeffs(
    rotation: &DMatrix<f64>,
    layout: &RegisterLayout,
) -> Result<ChannelCoefficients> {
    if rotation.nrows() != layout.k() {
        return Err(Error::Dimension(format!(
            "rotation has {} rows for {} trials",
            rotation.nrows(),
            layout.k()
        )));
    }
    layout.check_close_coupling()?;
    let channels = layout.channels();
    let a = DMatrix::from_fn(channels.len(), rotation.ncols(), |i, k| {
        rotation[(channels[i].trial, k)]
    });
    Ok(ChannelCoefficients {
        channels: channels.iter().map(|c| c.name.clone()).collect(),
        continuum: channels.iter().map(|c| c.continuum_qubit).collect(),
        a,
    })
}

/// `w_ik(a) = Σ_j a_ijk u_ij(a)`; under close coupling the sum has the
/// single term `j = j(i)`. `u` is keyed by channel name.
pub fn boundary_amplitudes(
    coeffs: &ChannelCoefficients,
    u: &BTreeMap<String, f64>,
) -> Result<DMatrix<f64>> {
    let mut w = coeffs.a.clone();
    for (i, name) in coeffs.channels.iter().enumerate() {
        let ui = *u.get(name).ok_or_else(|| {
            Error::Input(format!("no boundary value u(a) for channel `{name}`"))
        })?;
        if !ui.is_finite() {
            return Err(Error::Input(format!("u(a) for channel `{name}` is not finite")));
        }
        for v in w.row_mut(i).iter_mut() {
            *v *= ui;
        }
    }
    Ok(w)
}

/// `R_ij(E) = ½ Σ_k w_ik w_jk / (E_k − E)`.
pub fn r_matrix(w: &DMatrix<f64>, energies: &[f64], e: f64, pole_guard: f64) -> Result<DMatrix<f64>> {
    if w.ncols() != energies.len() {
        return Err(Error::Dimension(format!(
            "{} boundary columns for {} energies",
            w.ncols(),
            energies.len()
        )));
    }
    if let Some(pole) = energies.iter().find(|ek| (*ek - e).abs() <= pole_guard) {
        return Err(Error::Pole {
            energy: e,
            pole: *pole,
        });
    }
    let n = w.nrows();
    let mut r = DMatrix::zeros(n, n);
    for (k, ek) in energies.iter().enumerate() {
        let d = 0.5 / (ek - e);
        for i in 0..n {
            for j in 0..=i {
                r[(i, j)] += w[(i, k)] * w[(j, k)] * d;
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            r[(j, i)] = r[(i, j)];
        }
    }
    Ok(r)
}

/// Solver output dressed with channel data.
#[derive(Clone, Debug)]
pub struct ScatteringSolution {
    pub energies: Vec<f64>,
    pub rotation: DMatrix<f64>,
    pub channel_coeffs: ChannelCoefficients,
    pub boundary: DMatrix<f64>,
    pub layout: RegisterLayout,
}

impl ScatteringSolution {
    /// Columns of `rotation` are brought to the sign gauge first (largest
    /// entry positive); `R` does not depend on it.
    pub fn new(
        energies: Vec<f64>,
        rotation: &DMatrix<f64>,
        layout: &RegisterLayout,
        u: &BTreeMap<String, f64>,
    ) -> Result<Self> {
        if rotation.ncols() != energies.len() {
            return Err(Error::Dimension(format!(
                "{} rotation columns for {} energies",
                rotation.ncols(),
                energies.len()
            )));
        }
        let rotation = fix_column_signs(rotation);
        let channel_coeffs = extract_channel_coeffs(&rotation, layout)?;
        let boundary = boundary_amplitudes(&channel_coeffs, u)?;
        Ok(ScatteringSolution {
            energies,
            rotation,
            channel_coeffs,
            boundary,
            layout: layout.clone(),
        })
    }

    /// `max |UᵀU − I|`.
    pub fn orthogonality_error(&self) -> f64 {
        let g = self.rotation.transpose() * &self.rotation;
        (g - DMatrix::identity(self.rotation.ncols(), self.rotation.ncols())).amax()
    }

    pub fn r_matrix(&self, e: f64, pole_guard: f64) -> Result<DMatrix<f64>> {
        r_matrix(&self.boundary, &self.energies, e, pole_guard)
    }
}

/// Evenly spaced scattering energies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyGrid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub pole_guard: f64,
}

impl EnergyGrid {
    pub fn new(start: f64, stop: f64, points: usize, pole_guard: f64) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite() && start < stop) {
            return Err(Error::Parameter(format!(
                "energy grid needs start < stop, got [{start}, {stop}]"
            )));
        }
        if points < 2 {
            return Err(Error::Parameter("energy grid needs at least two points".into()));
        }
        if !(pole_guard >= 0.0 && pole_guard.is_finite()) {
            return Err(Error::Parameter(format!("pole guard {pole_guard} is invalid")));
        }
        Ok(EnergyGrid {
            start,
            stop,
            points,
            pole_guard,
        })
    }

    pub fn energies(&self) -> Vec<f64> {
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.start + step * i as f64).collect()
    }
}

/// R-matrix over a grid, with pole hits listed instead of evaluated.
#[derive(Clone, Debug, Default)]
pub struct RSweep {
    pub rows: Vec<(f64, DMatrix<f64>)>,
    /// `(E, E_k)` for every grid point inside a pole guard.
    pub skipped: Vec<(f64, f64)>,
}

pub fn sweep(solution: &ScatteringSolution, grid: &EnergyGrid) -> Result<RSweep> {
    let mut out = RSweep::default();
    for e in grid.energies() {
        match solution.r_matrix(e, grid.pole_guard) {
            Ok(r) => out.rows.push((e, r)),
            Err(Error::Pole { energy, pole }) => out.skipped.push((energy, pole)),
            Err(other) => return Err(other),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{BranchSpec, Channel};
    use approx::assert_abs_diff_eq;

    fn two_channel_layout() -> RegisterLayout {
        // target {0,1}, continuum {2,3}, N = 1
        let mut l = RegisterLayout::new(
            vec![0, 1],
            vec![2, 3],
            None,
            1,
            vec![BranchSpec::new("a", &[0, 2]), BranchSpec::new("b", &[1, 3])],
        )
        .unwrap();
        l.add_channel(Channel { name: "a".into(), trial: 0, continuum_qubit: 2 }).unwrap();
        l.add_channel(Channel { name: "b".into(), trial: 1, continuum_qubit: 3 }).unwrap();
        l
    }

    #[test]
    fn single_term() {
        let w = DMatrix::from_element(1, 1, 1.0);
        let r = r_matrix(&w, &[1.0], 0.0, DEFAULT_POLE_GUARD).unwrap();
        assert_eq!(r[(0, 0)], 0.5);
    }

    #[test]
    fn pole_sign_flip_and_error() {
        let w = DMatrix::from_element(1, 1, 1.0);
        let below = r_matrix(&w, &[1.0], 1.0 - 1e-4, 1e-9).unwrap()[(0, 0)];
        let above = r_matrix(&w, &[1.0], 1.0 + 1e-4, 1e-9).unwrap()[(0, 0)];
        assert!(below > 0.0 && above < 0.0);
        match r_matrix(&w, &[1.0], 1.0, 1e-9) {
            Err(Error::Pole { pole, .. }) => assert_eq!(pole, 1.0),
            other => panic!("expected pole error, got {other:?}"),
        }
    }

    #[test]
    fn identity_rotation_gives_delta_coefficients() {
        let l = two_channel_layout();
        let c = extract_channel_coeffs(&DMatrix::identity(2, 2), &l).unwrap();
        assert_eq!(c.a, DMatrix::identity(2, 2));
        assert_eq!(c.continuum, vec![2, 3]);
    }

    #[test]
    fn k2_rotation_entries() {
        let l = two_channel_layout();
        let t: f64 = 0.37;
        let u = DMatrix::from_row_slice(2, 2, &[t.cos(), t.sin(), -t.sin(), t.cos()]);
        let c = extract_channel_coeffs(&u, &l).unwrap();
        assert_abs_diff_eq!(c.a, u, epsilon = 0.0);
    }

    #[test]
    fn boundary_values() {
        let l = two_channel_layout();
        let c = extract_channel_coeffs(&DMatrix::identity(2, 2), &l).unwrap();
        let u = BTreeMap::from([("a".to_string(), 0.7), ("b".to_string(), 0.0)]);
        let w = boundary_amplitudes(&c, &u).unwrap();
        assert_eq!(w[(0, 0)], 0.7);
        assert_eq!(w.row(1).amax(), 0.0);
        let missing = BTreeMap::from([("a".to_string(), 0.7)]);
        match boundary_amplitudes(&c, &missing) {
            Err(Error::Input(msg)) => assert!(msg.contains("`b`")),
            other => panic!("expected input error, got {other:?}"),
        }
    }

    #[test]
    fn closed_boundary_gives_zero_r() {
        let l = two_channel_layout();
        let u0 = BTreeMap::from([("a".to_string(), 0.0), ("b".to_string(), 0.0)]);
        let s = ScatteringSolution::new(vec![-1.0, 0.5], &DMatrix::identity(2, 2), &l, &u0).unwrap();
        assert_eq!(s.r_matrix(0.1, 1e-9).unwrap().amax(), 0.0);
    }

    #[test]
    fn grid_skips_poles() {
        let l = two_channel_layout();
        let u = BTreeMap::from([("a".to_string(), 1.0), ("b".to_string(), 0.5)]);
        let s = ScatteringSolution::new(vec![0.0, 0.5], &DMatrix::identity(2, 2), &l, &u).unwrap();
        let grid = EnergyGrid::new(-0.5, 1.0, 4, 1e-9).unwrap();
        let sw = sweep(&s, &grid).unwrap();
        assert_eq!(sw.rows.len(), 2);
        assert_eq!(sw.skipped, vec![(0.0, 0.0), (0.5, 0.5)]);
        assert!(EnergyGrid::new(1.0, 0.0, 10, 1e-9).is_err());
    }
}
