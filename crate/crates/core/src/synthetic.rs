//! Seeded random integral sets that keep the point-group zeros of a base set.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fermion::SpatialIntegrals;

/// Scales every independent integral of `base` by `1 + amplitude·ξ` with
/// `ξ ~ U(−1, 1)`. Zeros stay zero and all permutational symmetries are
/// kept, so symmetry sectors of `base` remain closed.
pub fn perturb_integrals(base: &SpatialIntegrals, seed: u64, amplitude: f64) -> Result<SpatialIntegrals> {
    if !(0.0..1.0).contains(&amplitude) {
        return Err(Error::Parameter(format!(
            "perturbation amplitude {amplitude} must lie in [0, 1)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut factor = || 1.0 + amplitude * rng.random_range(-1.0..1.0);
    let mut out = base.clone();
    let n = base.norb;
    for i in 0..n {
        for j in 0..=i {
            let v = base.h_one[(i, j)] * factor();
            out.h_one[(i, j)] = v;
            out.h_one[(j, i)] = v;
        }
    }
    for i in 0..n {
        for j in 0..=i {
            for k in 0..n {
                for l in 0..=k {
                    if i * (i + 1) / 2 + j < k * (k + 1) / 2 + l {
                        continue;
                    }
                    let v = base.eri(i, j, k, l) * factor();
                    out.set_eri(i, j, k, l, v);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fermion::parse_fcidump_str;

    const TOY: &str = "&FCI NORB=2,NELEC=2,MS2=0,\n&END\n\
        0.6 1 1 1 1\n0.2 2 1 2 1\n0.5 2 2 1 1\n0.7 2 2 2 2\n\
        -1.2 1 1 0 0\n-0.4 2 2 0 0\n0.7 0 0 0 0\n";

    #[test]
    fn deterministic_and_zero_preserving() {
        let base = parse_fcidump_str(TOY).unwrap();
        let a = perturb_integrals(&base, 7, 0.15).unwrap();
        let b = perturb_integrals(&base, 7, 0.15).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, perturb_integrals(&base, 8, 0.15).unwrap());
        assert_eq!(a.h_one[(0, 1)], 0.0);
        assert_eq!(a.eri(1, 0, 0, 0), 0.0);
        assert_eq!(a.eri(1, 0, 1, 0), a.eri(0, 1, 1, 0));
        assert_eq!(a.eri(1, 1, 0, 0), a.eri(0, 0, 1, 1));
        for (x, y) in a.eri.iter().zip(&base.eri) {
            assert!((x - y).abs() <= 0.15 * y.abs() + 1e-15);
        }
        assert!(a.to_problem().check_symmetry().is_ok());
    }

    #[test]
    fn rejects_large_amplitude() {
        let base = parse_fcidump_str(TOY).unwrap();
        assert!(perturb_integrals(&base, 0, 1.5).is_err());
    }
}
