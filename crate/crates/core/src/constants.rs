//! Physical constants (SI). CODATA 2018 exact or recommended values.

/// Planck constant, J s (exact).
pub const H: f64 = 6.626_070_15e-34;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = H / (2.0 * std::f64::consts::PI);
/// Boltzmann constant, J/K (exact).
pub const K_B: f64 = 1.380_649e-23;
/// Bohr magneton, J/T (CODATA 2018).
pub const MU_BOHR: f64 = 9.274_010_078_3e-24;
/// Vacuum permeability, H/m (CODATA 2018).
pub const MU_0: f64 = 1.256_637_062_12e-6;
/// Speed of light, m/s (exact).
pub const C_LIGHT: f64 = 299_792_458.0;
/// Atomic mass unit, kg (CODATA 2018).
pub const AMU: f64 = 1.660_539_066_60e-27;
/// Mass of 87Rb, kg.
pub const M_RB87: f64 = 86.909_180_527 * AMU;
/// 87Rb ground-state hyperfine splitting, Hz.
pub const RB87_GROUND_SPLITTING_HZ: f64 = 6.834_682_610_904e9;
/// 87Rb D1 line wavelength, m.
pub const RB87_D1_WAVELENGTH: f64 = 794.979e-9;
/// 87Rb ground-state magnetic-dipole hyperfine constant A/h, Hz.
pub const RB87_A_HFS_HZ: f64 = 3.417_341_305_452e9;
/// Electron spin g-factor (magnitude).
pub const G_S: f64 = 2.002_319_304_36;
/// 87Rb nuclear g-factor (in units of the Bohr magneton).
pub const G_I_RB87: f64 = -0.000_995_141_4;

/// Gauss per tesla.
pub const GAUSS_PER_TESLA: f64 = 1.0e4;
