//! Unit system: energies in eV, times in fs, lengths in Angstrom.

/// Reduced Planck constant in eV*fs.
pub const HBAR_EV_FS: f64 = 0.6582119569;

/// Coulomb constant e^2/(4 pi eps0) in eV*Angstrom, used as the default
/// dipole-dipole prefactor for dipoles expressed in e*Angstrom.
pub const KAPPA_COULOMB_EV_ANG: f64 = 14.39964;

/// Default cap on qubit counts for dense-matrix realization (2^12 = 4096).
pub const DENSE_QUBIT_CAP: usize = 12;
