use rand::Rng;

use super::{ClockParts, ClockSpec, RegisterMode};
use crate::error::Result;
use crate::linalg::{random_ginibre, random_hermitian, DensityMatrix};

/// Random clock with a Gaussian Hamiltonian, zero to two `L` operators, one
/// or two `J` operators (all Ginibre, scaled to order-one rates) and a random
/// full-rank initial state in register block 0.
pub fn random_clock<R: Rng + ?Sized>(rng: &mut R, d: usize, n_ticks: usize, mode: RegisterMode) -> Result<ClockSpec> {
    let scale = 1.0 / (d as f64).sqrt();
    let h = random_hermitian(d, rng).scale_real(scale);
    let n_l = rng.random_range(0..=2);
    let n_j = rng.random_range(1..=2);
    let l_ops = (0..n_l).map(|_| random_ginibre(d, rng).scale_real(0.5 * scale)).collect();
    let j_ops = (0..n_j).map(|_| random_ginibre(d, rng).scale_real(0.7 * scale)).collect();
    ClockParts {
        n_ticks,
        mode,
        h,
        l_ops,
        j_ops,
        rho_c0: DensityMatrix::random(d, rng),
        k0: 0,
    }
    .validate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_clocks_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in 1..4 {
            let s = random_clock(&mut rng, d, 2, RegisterMode::Periodic).unwrap();
            assert_eq!(s.d(), d);
            assert!(!s.j_ops().is_empty());
        }
    }
}
