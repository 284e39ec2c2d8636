//! Magnetic quantum walks on the hypercube `{0,1}^(n+1)`.
//!
//! The position space is the Bernoulli Fock space `h_n` spanned by `Z_σ`,
//! `σ ⊆ {0,…,n}`. A magnetic potential `ν` turns the ladder operators
//! `∂_j, ∂_j*` into shift involutions `Ξ_j^(ν)`, and a coin operator system
//! `{C_j}` on `K = ℂ^d` couples them into the unitary evolution
//! `W^(ν) = ∑_j Ξ_j^(ν) ⊗ C_j`.
//!
//! Besides simulation, the crate checks numerically that the spectrum of
//! `W^(ν)` is the union of the spectra of the signed coin sums
//! `U_σ = ∑_j E_σ(j) C_j`, and hence does not depend on `ν`.

pub mod cli;
pub mod coin;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod magnetic;
pub mod spectra;
pub mod walk;

pub use coin::{
    algebraic_sum, coin_from_unitary_partition, grover_coin_system, hadamard_partition_coin_system,
    random_coin_system, validate_coin_system, CoinReport, CoinSystem,
};
pub use error::{Error, Result};
pub use fock::{annihilation_operator, creation_operator, verify_car, CarReport, FockSpace, SubsetIndex};
pub use linalg::{CsrMatrix, OperatorMatrix, StateVector, C64};
pub use magnetic::{
    magnetic_basis_change, magnetic_basis_vector, magnetic_basis_vector_explicit, magnetic_shift,
    null_potential, reduce_potential, shift_product_action, xi_hat, FullPotentialTable, MagneticPotential,
};
pub use spectra::{
    approximate_spectrum, coin_union_spectrum, unitary_eigenvalues, verify_approximate_spectrum_theorem,
    verify_point_spectrum_theorem, verify_spectral_stability, walk_point_spectrum, SpectrumReport,
};
pub use walk::{
    evolution_operator, evolve, intertwining_check, null_potential_operator, position_distribution, step,
    WalkOperator, WalkState,
};
