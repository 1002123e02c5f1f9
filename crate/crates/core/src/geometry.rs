//! Array geometry: steering vectors, the direction <-> spatial-frequency map,
//! and single-bounce ray tracing of an urban canyon by the image method.
//!
//! Coordinate conventions (documented once, used everywhere):
//! - Global frame: the street runs along `y`, the ground is the plane `z = 0`,
//!   the canyon walls are the vertical planes `x = 0` and `x = street_width`.
//! - An untilted array sits in its local x-z plane with boresight along local
//!   `+y`. Elements are indexed `(m, n)` over `0..n_1d` with `m` along local x
//!   and `n` along local z; vectorization is row-major with `m` fastest.
//! - Array tilt: azimuth rotates the boresight toward `+x`, elevation tips it
//!   downward. Both angles are given in degrees.
//! - A path's spatial frequency at an array is `2*pi*(d/lambda)` times the
//!   local x and z components of the unit vector pointing from the array
//!   toward the (image of the) other terminal.

use num_complex::Complex;
use thiserror::Error;

use crate::channel::{path_gain_db, Path};
use crate::scalar::{lit, Scalar};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("invalid array config: {0}")]
    InvalidArray(&'static str),
    #[error("invalid scene: {0}")]
    InvalidScene(&'static str),
    #[error("mobile must lie strictly inside the canyon")]
    MobileOutsideCanyon,
    #[error("degenerate geometry: mobile coincides with the basestation")]
    DegenerateGeometry,
}

/// A regular square antenna array: `n_1d x n_1d` elements, `spacing` metres
/// apart, operating at `wavelength` metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayConfig<T> {
    n_1d: usize,
    spacing: T,
    wavelength: T,
}

impl<T: Scalar> ArrayConfig<T> {
    pub fn new(n_1d: usize, spacing: T, wavelength: T) -> Result<Self, GeometryError> {
        if n_1d < 1 {
            return Err(GeometryError::InvalidArray("n_1d must be >= 1"));
        }
        if !(spacing > T::zero()) || !spacing.is_finite() {
            return Err(GeometryError::InvalidArray("spacing must be positive"));
        }
        if !(wavelength > T::zero()) || !wavelength.is_finite() {
            return Err(GeometryError::InvalidArray("wavelength must be positive"));
        }
        Ok(Self { n_1d, spacing, wavelength })
    }

    /// Half-wavelength spaced array, the usual deployment.
    pub fn half_wavelength(n_1d: usize, wavelength: T) -> Result<Self, GeometryError> {
        Self::new(n_1d, wavelength / lit(2.0), wavelength)
    }

    pub fn n_1d(&self) -> usize {
        self.n_1d
    }

    pub fn n_elements(&self) -> usize {
        self.n_1d * self.n_1d
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn wavelength(&self) -> T {
        self.wavelength
    }

    /// Largest attainable |omega| per axis, `2*pi*d/lambda`.
    pub fn omega_limit(&self) -> T {
        T::TAU() * self.spacing / self.wavelength
    }

    pub fn steering_vector(&self, omega: SpatialFrequency<T>) -> Vec<Complex<T>> {
        steering_vector(self.n_1d, omega)
    }
}

/// 2D spatial frequency `(omega_x, omega_z)` in radians per element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialFrequency<T> {
    pub omega_x: T,
    pub omega_z: T,
}

impl<T: Scalar> SpatialFrequency<T> {
    pub fn new(omega_x: T, omega_z: T) -> Self {
        Self { omega_x, omega_z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    /// Wrap both components into `(-pi, pi]`.
    pub fn wrapped(self) -> Self {
        Self::new(crate::scalar::wrap_angle(self.omega_x), crate::scalar::wrap_angle(self.omega_z))
    }

    /// l-infinity distance, circular per axis.
    pub fn linf_dist(self, other: Self) -> T {
        let dx = crate::scalar::wrap_angle(self.omega_x - other.omega_x).abs();
        let dz = crate::scalar::wrap_angle(self.omega_z - other.omega_z).abs();
        dx.max(dz)
    }

    /// Euclidean distance, circular per axis.
    pub fn l2_dist(self, other: Self) -> T {
        let dx = crate::scalar::wrap_angle(self.omega_x - other.omega_x);
        let dz = crate::scalar::wrap_angle(self.omega_z - other.omega_z);
        (dx * dx + dz * dz).sqrt()
    }
}

/// Response of the array to a unit plane wave at spatial frequency `omega`:
/// entry `(m, n)` is `exp(j*(omega_x*m + omega_z*n))`, vectorized with `m`
/// fastest. Total function; every entry has unit magnitude.
pub fn steering_vector<T: Scalar>(n_1d: usize, omega: SpatialFrequency<T>) -> Vec<Complex<T>> {
    let mut out = Vec::with_capacity(n_1d * n_1d);
    // exp(j w m) built incrementally per axis keeps this allocation-bound.
    let ex: Vec<Complex<T>> = phase_ramp(n_1d, omega.omega_x);
    let ez: Vec<Complex<T>> = phase_ramp(n_1d, omega.omega_z);
    for zn in &ez {
        for xm in &ex {
            out.push(*zn * *xm);
        }
    }
    out
}

fn phase_ramp<T: Scalar>(n: usize, w: T) -> Vec<Complex<T>> {
    (0..n)
        .map(|k| {
            let ph = w * T::from_usize(k).unwrap();
            Complex::new(ph.cos(), ph.sin())
        })
        .collect()
}

/// Map an inclination/azimuth direction (radians, relative to the array's
/// local x-z plane) to spatial frequencies:
/// `omega_x = 2*pi*(d/lambda)*sin(theta)*cos(phi)`,
/// `omega_z = 2*pi*(d/lambda)*sin(theta)*sin(phi)`.
pub fn direction_to_freq<T: Scalar>(
    array: &ArrayConfig<T>,
    theta: T,
    phi: T,
) -> SpatialFrequency<T> {
    let scale = array.omega_limit();
    SpatialFrequency::new(
        scale * theta.sin() * phi.cos(),
        scale * theta.sin() * phi.sin(),
    )
}

/// 3D vector in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Scalar> Vec3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    pub fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }

    pub fn scale(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Self {
        self.scale(T::one() / self.norm())
    }
}

/// Orientation of an array: azimuth/elevation tilt in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayOrientation<T> {
    pub tilt_azimuth_deg: T,
    pub tilt_elevation_deg: T,
}

impl<T: Scalar> ArrayOrientation<T> {
    pub fn axis_aligned() -> Self {
        Self { tilt_azimuth_deg: T::zero(), tilt_elevation_deg: T::zero() }
    }

    pub fn new(tilt_azimuth_deg: T, tilt_elevation_deg: T) -> Self {
        Self { tilt_azimuth_deg, tilt_elevation_deg }
    }

    /// Transform a global direction into the local array frame.
    fn to_local(&self, u: Vec3<T>) -> Vec3<T> {
        let az = self.tilt_azimuth_deg.to_radians();
        let el = self.tilt_elevation_deg.to_radians();
        let (ca, sa) = (az.cos(), az.sin());
        let (ce, se) = (el.cos(), el.sin());
        Vec3::new(
            ca * u.x - sa * u.y,
            sa * ce * u.x + ca * ce * u.y - se * u.z,
            sa * se * u.x + ca * se * u.y + ce * u.z,
        )
    }

    /// Boresight direction in the global frame.
    pub fn boresight(&self) -> Vec3<T> {
        let az = self.tilt_azimuth_deg.to_radians();
        let el = self.tilt_elevation_deg.to_radians();
        Vec3::new(az.sin() * el.cos(), az.cos() * el.cos(), -el.sin())
    }
}

/// Spatial frequency seen by a (possibly tilted) array for a ray departing
/// toward global direction `u` (unit vector).
pub fn frequency_toward<T: Scalar>(
    array: &ArrayConfig<T>,
    orientation: &ArrayOrientation<T>,
    u: Vec3<T>,
) -> SpatialFrequency<T> {
    let ul = orientation.to_local(u);
    let scale = array.omega_limit();
    SpatialFrequency::new(scale * ul.x, scale * ul.z)
}

/// Basestation deployment: position, array and its tilt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Basestation<T> {
    pub position: Vec3<T>,
    pub array: ArrayConfig<T>,
    pub orientation: ArrayOrientation<T>,
}

/// Urban canyon: two walls, a ground plane, one basestation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanyonScene<T> {
    street_width: T,
    basestation: Basestation<T>,
    absorption_db_per_m: T,
    reflection_amplitude: T,
}

impl<T: Scalar> CanyonScene<T> {
    pub fn new(
        street_width: T,
        basestation: Basestation<T>,
        absorption_db_per_m: T,
        reflection_amplitude: T,
    ) -> Result<Self, GeometryError> {
        if !(street_width > T::zero()) {
            return Err(GeometryError::InvalidScene("street width must be positive"));
        }
        if absorption_db_per_m < T::zero() {
            return Err(GeometryError::InvalidScene("absorption must be nonnegative"));
        }
        if reflection_amplitude < T::zero() || reflection_amplitude > T::one() {
            return Err(GeometryError::InvalidScene("reflection amplitude must be in [0, 1]"));
        }
        let p = basestation.position;
        if p.x <= T::zero() || p.x >= street_width || p.z <= T::zero() {
            return Err(GeometryError::InvalidScene("basestation must be inside the canyon"));
        }
        if !basestation.orientation.tilt_azimuth_deg.is_finite()
            || !basestation.orientation.tilt_elevation_deg.is_finite()
        {
            return Err(GeometryError::InvalidScene("tilt angles must be finite"));
        }
        Ok(Self { street_width, basestation, absorption_db_per_m, reflection_amplitude })
    }

    pub fn street_width(&self) -> T {
        self.street_width
    }

    pub fn basestation(&self) -> &Basestation<T> {
        &self.basestation
    }

    pub fn absorption_db_per_m(&self) -> T {
        self.absorption_db_per_m
    }

    pub fn reflection_amplitude(&self) -> T {
        self.reflection_amplitude
    }

    pub fn contains(&self, p: Vec3<T>) -> bool {
        p.x > T::zero() && p.x < self.street_width && p.z > T::zero()
    }
}

/// A mobile terminal: position, velocity and handset array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobileState<T> {
    pub position: Vec3<T>,
    pub velocity: Vec3<T>,
    pub array: ArrayConfig<T>,
    pub orientation: ArrayOrientation<T>,
}

impl<T: Scalar> MobileState<T> {
    pub fn new(position: Vec3<T>, velocity: Vec3<T>, array: ArrayConfig<T>) -> Self {
        Self { position, velocity, array, orientation: ArrayOrientation::axis_aligned() }
    }

    /// Position after `dt` seconds of straight-line motion.
    pub fn advanced(&self, dt: T) -> Self {
        Self { position: self.position.add(self.velocity.scale(dt)), ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bounce {
    None,
    Ground,
    WallLow,  // x = 0
    WallHigh, // x = street_width
}

fn mirror<T: Scalar>(p: Vec3<T>, bounce: Bounce, width: T) -> Vec3<T> {
    match bounce {
        Bounce::None => p,
        Bounce::Ground => Vec3::new(p.x, p.y, -p.z),
        Bounce::WallLow => Vec3::new(-p.x, p.y, p.z),
        Bounce::WallHigh => Vec3::new(width + width - p.x, p.y, p.z),
    }
}

/// Trace the LoS ray and the three single-bounce reflections (ground, both
/// walls) from the basestation to the mobile. The LoS path comes first. Path
/// gains combine free-space spreading, oxygen absorption, one reflection-loss
/// factor per bounce, and the propagation phase `exp(-j*2*pi*len/lambda)`.
pub fn trace_paths<T: Scalar>(
    scene: &CanyonScene<T>,
    mobile: &MobileState<T>,
) -> Result<Vec<Path<T>>, GeometryError> {
    if !scene.contains(mobile.position) {
        return Err(GeometryError::MobileOutsideCanyon);
    }
    let bs = scene.basestation;
    let lambda = bs.array.wavelength();
    let min_range = lit::<T>(1e-6);
    if mobile.position.sub(bs.position).norm() < min_range {
        return Err(GeometryError::DegenerateGeometry);
    }

    let mut paths = Vec::with_capacity(4);
    for bounce in [Bounce::None, Bounce::Ground, Bounce::WallLow, Bounce::WallHigh] {
        let mob_img = mirror(mobile.position, bounce, scene.street_width);
        let bs_img = mirror(bs.position, bounce, scene.street_width);
        let len = mob_img.sub(bs.position).norm();
        let depart = mob_img.sub(bs.position).normalized();
        let arrive = bs_img.sub(mobile.position).normalized();

        let omega_t = frequency_toward(&bs.array, &bs.orientation, depart);
        let omega_r = frequency_toward(&mobile.array, &mobile.orientation, arrive);

        let gain_db = path_gain_db(len, scene.absorption_db_per_m, lambda)
            .expect("path length is positive");
        let mut amp = lit::<T>(10.0).powf(gain_db / lit(20.0));
        if bounce != Bounce::None {
            amp = amp * scene.reflection_amplitude;
        }
        let phase = -T::TAU() * len / lambda;
        let gain = Complex::from_polar(amp, phase);
        paths.push(Path { gain, omega_t, omega_r, length: len });
    }
    Ok(paths)
}
