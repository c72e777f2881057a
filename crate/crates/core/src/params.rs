//! Dimensionless system parameters, unit conversion and the analytic
//! efficiency reference curves.
//!
//! Lengths are measured in units of the cloud scale `L` (the cloud is a
//! uniform sphere of volume `L³`), times in units of the excited-state
//! lifetime `1/γ`.

use std::f64::consts::PI;

use crate::constants::{C_LIGHT, RB87_D1_WAVELENGTH, RB87_GROUND_SPLITTING_HZ};
use crate::error::{Result, RouterError};

/// Dimensionless speed of light used throughout the numerical experiments.
pub const DEFAULT_C_TILDE: f64 = 850.0;
/// Cloud scale, m.
pub const DEFAULT_LENGTH: f64 = 0.01;

/// SI scales that connect the dimensionless model to a rubidium setup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalUnits {
    /// Cloud length scale `L`, m.
    pub length: f64,
    /// Excited-state decay rate `γ`, 1/s.
    pub gamma: f64,
    /// Speed of light, m/s.
    pub c: f64,
    /// Signal carrier wavenumber `|k_s|`, 1/m.
    pub k_s_mag: f64,
    /// Ground-state splitting `ω_gs`, rad/s.
    pub omega_gs: f64,
}

impl Default for PhysicalUnits {
    /// 87Rb D1 line in a 10 mm cloud with `c̃ = 850`.
    fn default() -> Self {
        Self::from_c_tilde(
            DEFAULT_LENGTH,
            DEFAULT_C_TILDE,
            2.0 * PI / RB87_D1_WAVELENGTH,
            2.0 * PI * RB87_GROUND_SPLITTING_HZ,
        )
        .expect("default units are valid")
    }
}

impl PhysicalUnits {
    pub fn new(length: f64, gamma: f64, c: f64, k_s_mag: f64, omega_gs: f64) -> Result<Self> {
        let units = Self { length, gamma, c, k_s_mag, omega_gs };
        units.validate()?;
        Ok(units)
    }

    /// Units whose decay rate is chosen so that `c/(γL) = c_tilde`.
    pub fn from_c_tilde(length: f64, c_tilde: f64, k_s_mag: f64, omega_gs: f64) -> Result<Self> {
        if !(c_tilde > 0.0) || !(length > 0.0) {
            return Err(RouterError::Parameter(format!(
                "c_tilde ({c_tilde}) and length ({length}) must be positive"
            )));
        }
        Self::new(length, C_LIGHT / (c_tilde * length), C_LIGHT, k_s_mag, omega_gs)
    }

    fn validate(&self) -> Result<()> {
        let fields = [
            ("length", self.length),
            ("gamma", self.gamma),
            ("c", self.c),
            ("k_s_mag", self.k_s_mag),
            ("omega_gs", self.omega_gs),
        ];
        for (name, value) in fields {
            if !(value > 0.0) || !value.is_finite() {
                return Err(RouterError::Parameter(format!("{name} must be positive, got {value}")));
            }
        }
        Ok(())
    }

    pub fn c_tilde(&self) -> f64 {
        self.c / (self.gamma * self.length)
    }

    /// Control carrier wavenumber from two-photon resonance, `|k_c| = |k_s| − ω_gs/c`.
    pub fn k_c_mag(&self) -> f64 {
        self.k_s_mag - self.omega_gs / self.c
    }

    /// Converts a wavenumber in 1/m to units of `1/L`.
    pub fn wavenumber_to_tilde(&self, k: f64) -> f64 {
        k * self.length
    }

    /// Converts a wavenumber in units of `γ/c` to 1/m.
    pub fn gamma_over_c(&self) -> f64 {
        self.gamma / self.c
    }
}

/// Sampling of the `(x̃, ỹ)` simulation plane. The domain is centered on the
/// cloud; cell `i` has center `x_min + (i + ½)·dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub x_extent: f64,
    pub y_extent: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { nx: 48, ny: 48, x_extent: 1.44, y_extent: 1.44 }
    }
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, x_extent: f64, y_extent: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(RouterError::Parameter("grid sample counts must be nonzero".into()));
        }
        if !(x_extent > 0.0) || !(y_extent > 0.0) {
            return Err(RouterError::Parameter(format!(
                "grid extents must be positive, got {x_extent} x {y_extent}"
            )));
        }
        Ok(Self { nx, ny, x_extent, y_extent })
    }

    /// Square cells of width `dx` covering `[-extent/2, extent/2]²`.
    pub fn square(n: usize, extent: f64) -> Result<Self> {
        Self::new(n, n, extent, extent)
    }

    pub fn dx(&self) -> f64 {
        self.x_extent / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.y_extent / self.ny as f64
    }

    /// Time step locked to the advection: the signal moves exactly one cell per step.
    pub fn dt(&self, c_tilde: f64) -> f64 {
        self.dx() / c_tilde
    }

    pub fn x_min(&self) -> f64 {
        -0.5 * self.x_extent
    }

    pub fn y_min(&self) -> f64 {
        -0.5 * self.y_extent
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min() + (i as f64 + 0.5) * self.dx()
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y_min() + (j as f64 + 0.5) * self.dy()
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    /// Same extents with the sample counts scaled by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        Self { nx: self.nx * factor, ny: self.ny * factor, ..*self }
    }
}

/// Relative atomic density `ñ = n/(N/V)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityProfile {
    /// Uniform sphere of unit volume centered at the origin; `ñ = 1` inside.
    UniformSphere { radius: f64 },
}

impl Default for DensityProfile {
    fn default() -> Self {
        Self::unit_sphere()
    }
}

impl DensityProfile {
    pub fn unit_sphere() -> Self {
        Self::UniformSphere { radius: (3.0 / (4.0 * PI)).cbrt() }
    }

    pub fn radius(&self) -> f64 {
        match *self {
            Self::UniformSphere { radius } => radius,
        }
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.radius()
    }

    /// Point density.
    pub fn at(&self, x: f64, y: f64, z: f64) -> f64 {
        let r = self.radius();
        if x * x + y * y + z * z <= r * r {
            1.0
        } else {
            0.0
        }
    }

    /// Density of a simulation cell in the equatorial plane: the fraction of
    /// `[x_lo, x_hi]` that lies inside the cloud's chord at height `y`. This
    /// keeps the optical depth of every row exact on coarse grids.
    pub fn cell_density(&self, x_lo: f64, x_hi: f64, y: f64) -> f64 {
        let r = self.radius();
        let h2 = r * r - y * y;
        if h2 <= 0.0 {
            return 0.0;
        }
        let half = h2.sqrt();
        let lo = x_lo.max(-half);
        let hi = x_hi.min(half);
        if hi <= lo {
            0.0
        } else {
            (hi - lo) / (x_hi - x_lo)
        }
    }
}

/// All dimensionless constants of one simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    pub c_tilde: f64,
    pub g_tilde: f64,
    pub delta_tilde: f64,
    /// Optical depth with `L` as length scale, `g̃²/c̃`.
    pub d: f64,
    /// Optical depth along the cloud diameter.
    pub d_prime: f64,
    pub grid: GridSpec,
    pub density: DensityProfile,
    pub units: PhysicalUnits,
}

/// Builds the dimensionless parameter set.
pub fn make_params(
    units: PhysicalUnits,
    g_tilde: f64,
    delta_tilde: f64,
    grid: GridSpec,
) -> Result<SimParams> {
    let c_tilde = units.c_tilde();
    if !(c_tilde > 0.0) || !c_tilde.is_finite() {
        return Err(RouterError::Parameter(format!("c_tilde must be positive, got {c_tilde}")));
    }
    if !(g_tilde >= 0.0) || !g_tilde.is_finite() {
        return Err(RouterError::Parameter(format!("g_tilde must be >= 0, got {g_tilde}")));
    }
    if !delta_tilde.is_finite() {
        return Err(RouterError::Parameter("delta_tilde must be finite".into()));
    }
    let grid = GridSpec::new(grid.nx, grid.ny, grid.x_extent, grid.y_extent)?;
    let density = DensityProfile::unit_sphere();
    let d = g_tilde * g_tilde / c_tilde;
    Ok(SimParams {
        c_tilde,
        g_tilde,
        delta_tilde,
        d,
        d_prime: d * density.diameter(),
        grid,
        density,
        units,
    })
}

impl SimParams {
    /// Parameters at a given optical depth `d`, with `g̃ = sqrt(d·c̃)`.
    pub fn with_optical_depth(units: PhysicalUnits, d: f64, delta_tilde: f64, grid: GridSpec) -> Result<Self> {
        if !(d >= 0.0) {
            return Err(RouterError::Parameter(format!("optical depth must be >= 0, got {d}")));
        }
        make_params(units, (d * units.c_tilde()).sqrt(), delta_tilde, grid)
    }

    /// Default rubidium setup at optical depth `d`.
    pub fn rubidium(d: f64) -> Result<Self> {
        Self::with_optical_depth(PhysicalUnits::default(), d, 0.0, GridSpec::default())
    }

    pub fn dt(&self) -> f64 {
        self.grid.dt(self.c_tilde)
    }

    pub fn with_grid(&self, grid: GridSpec) -> Result<Self> {
        make_params(self.units, self.g_tilde, self.delta_tilde, grid)
    }

    /// Recovers the SI units; `γ` is rebuilt from `c̃`, `L` and `c`.
    pub fn physical_units(&self) -> PhysicalUnits {
        PhysicalUnits {
            gamma: self.units.c / (self.c_tilde * self.units.length),
            ..self.units
        }
    }
}

fn check_depth(d_prime: f64) -> Result<()> {
    if d_prime < 0.0 || d_prime.is_nan() {
        return Err(RouterError::Domain(format!("optical depth must be >= 0, got {d_prime}")));
    }
    Ok(())
}

/// Free-space reference efficiency `(1 − 1/(1 + d′/2.9))²`.
pub fn eta_ref(d_prime: f64) -> Result<f64> {
    check_depth(d_prime)?;
    let x = 1.0 - 1.0 / (1.0 + d_prime / 2.9);
    Ok(x * x)
}

/// Cavity-limited efficiency `(1 − 1/(1 + d′))²`.
pub fn eta_cavity_max(d_prime: f64) -> Result<f64> {
    check_depth(d_prime)?;
    let x = 1.0 - 1.0 / (1.0 + d_prime);
    Ok(x * x)
}

/// Signal bandwidth in units of `γ`: `Δω_s/γ = c̃/w̃_∥`.
pub fn signal_bandwidth(c_tilde: f64, w_par: f64) -> Result<f64> {
    if !(w_par > 0.0) {
        return Err(RouterError::Domain(format!("signal length must be positive, got {w_par}")));
    }
    Ok(c_tilde / w_par)
}
