//! Time, frames, two-body dynamics, observer kinematics and the angles-only
//! measurement model.
//!
//! The inertial frame is Earth centered with its x-axis through longitude 0 at
//! the scenario reference epoch. The Earth is a sphere rotating uniformly about
//! the z-axis; no precession or nutation is modelled.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{Matrix2x6, Vector2, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Earth gravitational parameter, km^3/s^2.
pub const MU_EARTH: f64 = 398_600.441_8;
/// Spherical Earth radius, km.
pub const R_EARTH: f64 = 6378.137;
/// Earth rotation rate, rad/s.
pub const OMEGA_EARTH: f64 = 7.292_115_9e-5;

const KEPLER_MAX_ITER: usize = 50;
const KEPLER_TOL: f64 = 1e-12;
const ANGLE_EPS: f64 = 1e-10;

/// Seconds since the scenario reference epoch.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
pub struct Epoch(pub f64);

impl Epoch {
    pub fn seconds(self) -> f64 {
        self.0
    }

    pub fn offset(self, dt: f64) -> Epoch {
        Epoch(self.0 + dt)
    }
}

/// Inertial Cartesian state, km and km/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
}

impl StateVector {
    pub fn new(position: Vector3<f64>, velocity: Vector3<f64>) -> Self {
        Self { position, velocity }
    }

    pub fn from_vector(x: &Vector6<f64>) -> Self {
        Self {
            position: Vector3::new(x[0], x[1], x[2]),
            velocity: Vector3::new(x[3], x[4], x[5]),
        }
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        let (r, v) = (&self.position, &self.velocity);
        Vector6::new(r.x, r.y, r.z, v.x, v.y, v.z)
    }

    /// Specific orbital energy about the Earth.
    pub fn specific_energy(&self, mu: f64) -> f64 {
        0.5 * self.velocity.norm_squared() - mu / self.position.norm()
    }

    pub fn angular_momentum(&self) -> Vector3<f64> {
        self.position.cross(&self.velocity)
    }

    pub fn eccentricity_vector(&self, mu: f64) -> Vector3<f64> {
        let r = self.position.norm();
        let v2 = self.velocity.norm_squared();
        let rv = self.position.dot(&self.velocity);
        ((v2 - mu / r) * self.position - rv * self.velocity) / mu
    }
}

/// Classical orbital elements. Angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeplerianElements {
    pub a: f64,
    pub e: f64,
    pub i: f64,
    pub raan: f64,
    pub argp: f64,
    pub true_anomaly: f64,
}

impl KeplerianElements {
    /// Elements given with angles in degrees.
    pub fn from_degrees(a: f64, e: f64, i: f64, raan: f64, argp: f64, nu: f64) -> Self {
        Self {
            a,
            e,
            i: i.to_radians(),
            raan: wrap_two_pi(raan.to_radians()),
            argp: wrap_two_pi(argp.to_radians()),
            true_anomaly: wrap_two_pi(nu.to_radians()),
        }
    }

    pub fn periapsis_radius(&self) -> f64 {
        self.a * (1.0 - self.e)
    }

    pub fn period(&self, mu: f64) -> f64 {
        TAU * (self.a.powi(3) / mu).sqrt()
    }
}

/// Ground site on the spherical rotating Earth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverSite {
    /// Degrees.
    pub latitude: f64,
    /// Degrees, wrapped to (-180, 180].
    pub longitude: f64,
    /// km above the spherical surface.
    pub altitude: f64,
}

impl ObserverSite {
    pub fn new(latitude: f64, longitude: f64, altitude: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&latitude) || !latitude.is_finite() {
            return Err(Error::InvalidArgument(format!("latitude {latitude} outside [-90, 90]")));
        }
        if !longitude.is_finite() || !altitude.is_finite() {
            return Err(Error::InvalidArgument("non-finite site coordinates".into()));
        }
        let mut lon = (longitude + 180.0).rem_euclid(360.0) - 180.0;
        if lon == -180.0 {
            lon = 180.0;
        }
        Ok(Self { latitude, longitude: lon, altitude })
    }
}

/// Topocentric right ascension and declination, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleMeasurement {
    pub ra: f64,
    pub dec: f64,
}

impl AngleMeasurement {
    pub fn to_vector(self) -> Vector2<f64> {
        Vector2::new(self.ra, self.dec)
    }
}

/// Wraps an angle to [0, 2π).
pub fn wrap_two_pi(x: f64) -> f64 {
    let w = x.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Wraps an angle difference to (-π, π].
pub fn wrap_pi(x: f64) -> f64 {
    let w = wrap_two_pi(x + PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

pub fn kepler_to_cartesian(el: &KeplerianElements, mu: f64) -> Result<StateVector> {
    if !(0.0..1.0).contains(&el.e) {
        return Err(Error::NonElliptical { eccentricity: el.e });
    }
    if el.a <= 0.0 || !el.a.is_finite() {
        return Err(Error::InvalidArgument(format!("semimajor axis {} must be positive", el.a)));
    }
    let p = el.a * (1.0 - el.e * el.e);
    let (snu, cnu) = el.true_anomaly.sin_cos();
    let r = p / (1.0 + el.e * cnu);
    let r_pf = Vector3::new(r * cnu, r * snu, 0.0);
    let k = (mu / p).sqrt();
    let v_pf = Vector3::new(-k * snu, k * (el.e + cnu), 0.0);

    let (so, co) = el.raan.sin_cos();
    let (sw, cw) = el.argp.sin_cos();
    let (si, ci) = el.i.sin_cos();
    let rot = nalgebra::Matrix3::new(
        co * cw - so * sw * ci,
        -co * sw - so * cw * ci,
        so * si,
        so * cw + co * sw * ci,
        -so * sw + co * cw * ci,
        -co * si,
        sw * si,
        cw * si,
        ci,
    );
    Ok(StateVector::new(rot * r_pf, rot * v_pf))
}

/// Osculating elements of an elliptical state.
///
/// Undefined angles are zeroed: the node for equatorial orbits (raan = 0),
/// the argument of periapsis for circular orbits (argp = 0). The true anomaly
/// then measures from the node, or from the x-axis when both degenerate.
pub fn cartesian_to_kepler(sv: &StateVector, mu: f64) -> Result<KeplerianElements> {
    let r = sv.position.norm();
    if r <= 0.0 || !r.is_finite() {
        return Err(Error::ZeroRange);
    }
    let h = sv.angular_momentum();
    let hn = h.norm();
    if hn <= 1e-10 * r * sv.velocity.norm().max(1e-300) {
        return Err(Error::DegenerateOrbit { h: hn });
    }
    let energy = sv.specific_energy(mu);
    let e_vec = sv.eccentricity_vector(mu);
    let e = e_vec.norm();
    if e >= 1.0 || energy >= 0.0 {
        return Err(Error::NonElliptical { eccentricity: e });
    }
    let a = -mu / (2.0 * energy);
    let i = (h.z / hn).clamp(-1.0, 1.0).acos();
    let node = Vector3::new(-h.y, h.x, 0.0);
    let nn = node.norm();
    let equatorial = nn <= ANGLE_EPS * hn;
    let circular = e <= ANGLE_EPS;

    let raan = if equatorial { 0.0 } else { wrap_two_pi(node.y.atan2(node.x)) };
    // Reference direction in the orbit plane from which argp is measured.
    let line = if equatorial { Vector3::x() } else { node / nn };
    let h_hat = h / hn;
    let angle_from_line = |v: &Vector3<f64>| -> f64 {
        let y = h_hat.dot(&line.cross(v));
        let x = line.dot(v);
        wrap_two_pi(y.atan2(x))
    };
    let (argp, true_anomaly) = if circular {
        (0.0, angle_from_line(&sv.position))
    } else {
        let argp = angle_from_line(&e_vec);
        let y = h_hat.dot(&e_vec.cross(&sv.position));
        let x = e_vec.dot(&sv.position);
        (argp, wrap_two_pi(y.atan2(x)))
    };
    Ok(KeplerianElements { a, e: if circular { 0.0 } else { e }, i, raan, argp, true_anomaly })
}

/// Solves E - e sin E = M for the eccentric anomaly.
pub fn solve_kepler(mean_anomaly: f64, e: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&e) {
        return Err(Error::NonElliptical { eccentricity: e });
    }
    // Same root problem as the difference form with r0 at periapsis.
    solve_anomaly_step(mean_anomaly, e, 0.0).map_err(|_| Error::KeplerNonConvergence {
        mean_anomaly,
        eccentricity: e,
    })
}

/// Root of x - c1 sin x + c2 (1 - cos x) = m, with c1^2 + c2^2 = e^2 < 1.
fn solve_anomaly_step(m: f64, c1: f64, c2: f64) -> Result<f64> {
    let f = |x: f64| x - c1 * x.sin() + c2 * (1.0 - x.cos()) - m;
    let df = |x: f64| 1.0 - c1 * x.cos() + c2 * x.sin();
    let mut x = m;
    for _ in 0..KEPLER_MAX_ITER {
        let step = f(x) / df(x);
        x -= step;
        if !x.is_finite() {
            break;
        }
        if step.abs() <= KEPLER_TOL {
            return Ok(x);
        }
    }
    // f is monotone with |f(x) - (x - m)| < 2, so the root is bracketed.
    let (mut lo, mut hi) = (m - 2.0, m + 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= KEPLER_TOL {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(Error::KeplerNonConvergence { mean_anomaly: m, eccentricity: (c1 * c1 + c2 * c2).sqrt() })
}

/// Keplerian propagation by the eccentric-anomaly-difference f and g functions.
pub fn propagate_two_body(sv: &StateVector, dt: f64, mu: f64) -> Result<StateVector> {
    if !dt.is_finite() {
        return Err(Error::InvalidArgument("non-finite propagation interval".into()));
    }
    if dt == 0.0 {
        return Ok(*sv);
    }
    let r0 = sv.position.norm();
    if r0 <= 0.0 {
        return Err(Error::ZeroRange);
    }
    let energy = sv.specific_energy(mu);
    if energy >= 0.0 {
        return Err(Error::NonElliptical { eccentricity: sv.eccentricity_vector(mu).norm() });
    }
    let a = -mu / (2.0 * energy);
    let sqrt_a = a.sqrt();
    let n = (mu / (a * a * a)).sqrt();
    let sigma0 = sv.position.dot(&sv.velocity) / mu.sqrt();
    // e cos E0 and e sin E0
    let c1 = 1.0 - r0 / a;
    let c2 = sigma0 / sqrt_a;
    if c1 * c1 + c2 * c2 >= 1.0 {
        return Err(Error::NonElliptical { eccentricity: (c1 * c1 + c2 * c2).sqrt() });
    }
    let m = n * dt;
    let revs = (m / TAU).round();
    let de = solve_anomaly_step(m - revs * TAU, c1, c2)? + revs * TAU;
    let (s, c) = de.sin_cos();
    let r = a + (r0 - a) * c + sigma0 * sqrt_a * s;
    let f = 1.0 - a / r0 * (1.0 - c);
    let g = dt - (de - s) / n;
    let fdot = -(mu * a).sqrt() / (r * r0) * s;
    let gdot = 1.0 - a / r * (1.0 - c);
    Ok(StateVector::new(
        f * sv.position + g * sv.velocity,
        fdot * sv.position + gdot * sv.velocity,
    ))
}

/// Single-target dynamics used for truth, catalog and filter prediction.
pub trait Propagator: Sync {
    fn propagate(&self, sv: &StateVector, dt: f64) -> Result<StateVector>;
}

/// Unperturbed Keplerian motion about the Earth.
#[derive(Debug, Clone, Copy)]
pub struct TwoBody {
    pub mu: f64,
}

impl Default for TwoBody {
    fn default() -> Self {
        Self { mu: MU_EARTH }
    }
}

impl Propagator for TwoBody {
    fn propagate(&self, sv: &StateVector, dt: f64) -> Result<StateVector> {
        propagate_two_body(sv, dt, self.mu)
    }
}

/// Inertial state of a ground site at `epoch`.
pub fn site_state(site: &ObserverSite, epoch: Epoch) -> StateVector {
    let radius = R_EARTH + site.altitude;
    let lat = site.latitude.to_radians();
    let theta = site.longitude.to_radians() + OMEGA_EARTH * epoch.seconds();
    let (st, ct) = theta.sin_cos();
    let (sl, cl) = lat.sin_cos();
    let position = Vector3::new(radius * cl * ct, radius * cl * st, radius * sl);
    let velocity = Vector3::new(-OMEGA_EARTH * position.y, OMEGA_EARTH * position.x, 0.0);
    StateVector::new(position, velocity)
}

/// Line-of-sight right ascension and declination of `target` seen from `observer`.
pub fn measure_radec(target: &StateVector, observer: &StateVector) -> Result<AngleMeasurement> {
    radec_of_offset(&(target.position - observer.position))
}

pub(crate) fn radec_of_offset(d: &Vector3<f64>) -> Result<AngleMeasurement> {
    let rho = d.norm();
    if rho <= 0.0 || !rho.is_finite() {
        return Err(Error::ZeroRange);
    }
    let rxy = d.x.hypot(d.y);
    let ra = if rxy <= 1e-12 * rho { 0.0 } else { wrap_two_pi(d.y.atan2(d.x)) };
    let dec = d.z.atan2(rxy).clamp(-FRAC_PI_2, FRAC_PI_2);
    Ok(AngleMeasurement { ra, dec })
}

/// Jacobian of (ra, dec) with respect to the target state. Velocity columns are zero.
pub fn measurement_jacobian(target: &StateVector, observer: &StateVector) -> Result<Matrix2x6<f64>> {
    let d = target.position - observer.position;
    let rho2 = d.norm_squared();
    if rho2 <= 0.0 || !rho2.is_finite() {
        return Err(Error::ZeroRange);
    }
    let rxy2 = d.x * d.x + d.y * d.y;
    let rxy = rxy2.sqrt();
    let mut h = Matrix2x6::zeros();
    if rxy > 1e-12 * rho2.sqrt() {
        h[(0, 0)] = -d.y / rxy2;
        h[(0, 1)] = d.x / rxy2;
        h[(1, 0)] = -d.x * d.z / (rho2 * rxy);
        h[(1, 1)] = -d.y * d.z / (rho2 * rxy);
    }
    h[(1, 2)] = rxy / rho2;
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const GEO_A: f64 = 42164.0;

    fn case2_elements() -> KeplerianElements {
        KeplerianElements::from_degrees(42259.0, 0.001, 5.0, 0.001, 0.001, 135.0)
    }

    #[test]
    fn circular_equatorial_state() {
        let el = KeplerianElements { a: GEO_A, e: 0.0, i: 0.0, raan: 0.0, argp: 0.0, true_anomaly: 0.0 };
        let sv = kepler_to_cartesian(&el, MU_EARTH).unwrap();
        assert_relative_eq!(sv.position, Vector3::new(GEO_A, 0.0, 0.0), epsilon = 1e-9);
        let vc = (MU_EARTH / GEO_A).sqrt();
        assert_relative_eq!(sv.velocity, Vector3::new(0.0, vc, 0.0), epsilon = 1e-12);

        let back = cartesian_to_kepler(&sv, MU_EARTH).unwrap();
        assert_relative_eq!(back.a, GEO_A, max_relative = 1e-12);
        assert_eq!(back.e, 0.0);
        assert_eq!((back.i, back.raan, back.argp), (0.0, 0.0, 0.0));
    }

    #[test]
    fn conic_radius_matches_case2() {
        let el = case2_elements();
        let sv = kepler_to_cartesian(&el, MU_EARTH).unwrap();
        let nu = 135f64.to_radians();
        let expected = el.a * (1.0 - el.e * el.e) / (1.0 + el.e * nu.cos());
        assert_relative_eq!(sv.position.norm(), expected, max_relative = 1e-13);
        assert_relative_eq!(sv.specific_energy(MU_EARTH), -MU_EARTH / (2.0 * el.a), max_relative = 1e-12);
    }

    #[test]
    fn rejects_open_orbits() {
        let mut el = case2_elements();
        el.e = 1.0;
        assert!(matches!(kepler_to_cartesian(&el, MU_EARTH), Err(Error::NonElliptical { .. })));
        let sv = StateVector::new(Vector3::new(7000.0, 0.0, 0.0), Vector3::new(0.0, 12.0, 0.0));
        assert!(cartesian_to_kepler(&sv, MU_EARTH).is_err());
        assert!(propagate_two_body(&sv, 10.0, MU_EARTH).is_err());
    }

    #[test]
    fn rectilinear_is_degenerate() {
        let sv = StateVector::new(Vector3::new(7000.0, 0.0, 0.0), Vector3::new(1.0, 0.0, 0.0));
        assert!(matches!(cartesian_to_kepler(&sv, MU_EARTH), Err(Error::DegenerateOrbit { .. })));
    }

    #[test]
    fn vis_viva_semimajor_axis() {
        let sv = StateVector::new(Vector3::new(9000.0, 1500.0, -400.0), Vector3::new(-0.8, 6.1, 1.2));
        let a = -MU_EARTH / (2.0 * sv.specific_energy(MU_EARTH));
        let el = cartesian_to_kepler(&sv, MU_EARTH).unwrap();
        assert_relative_eq!(el.a, a, max_relative = 1e-12);
    }

    /// Independent element computation from the textbook vector formulas.
    fn textbook_elements(sv: &StateVector) -> (f64, f64, f64, f64, f64, f64) {
        let r = sv.position;
        let v = sv.velocity;
        let h = r.cross(&v);
        let n = Vector3::z().cross(&h);
        let e = ((v.norm_squared() - MU_EARTH / r.norm()) * r - r.dot(&v) * v) / MU_EARTH;
        let a = 1.0 / (2.0 / r.norm() - v.norm_squared() / MU_EARTH);
        let i = (h.z / h.norm()).acos();
        let mut raan = (n.x / n.norm()).acos();
        if n.y < 0.0 {
            raan = TAU - raan;
        }
        let mut argp = (n.dot(&e) / (n.norm() * e.norm())).acos();
        if e.z < 0.0 {
            argp = TAU - argp;
        }
        let mut nu = (e.dot(&r) / (e.norm() * r.norm())).acos();
        if r.dot(&v) < 0.0 {
            nu = TAU - nu;
        }
        (a, e.norm(), i, raan, argp, nu)
    }

    #[test]
    fn matches_textbook_conversion() {
        let sv = StateVector::new(Vector3::new(-6045.0, -3490.0, 2500.0), Vector3::new(-3.457, 6.618, 2.533));
        let el = cartesian_to_kepler(&sv, MU_EARTH).unwrap();
        let (a, e, i, raan, argp, nu) = textbook_elements(&sv);
        assert_relative_eq!(el.a, a, max_relative = 1e-10);
        assert_relative_eq!(el.e, e, max_relative = 1e-10);
        assert_relative_eq!(el.i, i, epsilon = 1e-10);
        assert_relative_eq!(el.raan, raan, epsilon = 1e-10);
        assert_relative_eq!(el.argp, argp, epsilon = 1e-9);
        assert_relative_eq!(el.true_anomaly, nu, epsilon = 1e-9);
    }

    #[test]
    fn circular_kepler_identity() {
        assert_eq!(solve_kepler(1.234, 0.0).unwrap(), 1.234);
        let e = 0.66;
        let big_e = solve_kepler(4.0, e).unwrap();
        assert_relative_eq!(big_e - e * big_e.sin(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn geo_period_recovers_state() {
        let el = KeplerianElements { a: GEO_A, e: 0.0, i: 0.1, raan: 0.3, argp: 0.0, true_anomaly: 1.0 };
        let sv = kepler_to_cartesian(&el, MU_EARTH).unwrap();
        let period = el.period(MU_EARTH);
        assert!((period - 86164.1).abs() < 1.0);
        let out = propagate_two_body(&sv, period, MU_EARTH).unwrap();
        assert!((out.position - sv.position).norm() < 1e-6);
    }

    fn rk4_two_body(sv: &StateVector, dt: f64, steps: usize) -> StateVector {
        let deriv = |x: &Vector6<f64>| {
            let r = Vector3::new(x[0], x[1], x[2]);
            let acc = -MU_EARTH * r / r.norm().powi(3);
            Vector6::new(x[3], x[4], x[5], acc.x, acc.y, acc.z)
        };
        let mut x = sv.to_vector();
        let h = dt / steps as f64;
        for _ in 0..steps {
            let k1 = deriv(&x);
            let k2 = deriv(&(x + 0.5 * h * k1));
            let k3 = deriv(&(x + 0.5 * h * k2));
            let k4 = deriv(&(x + h * k3));
            x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        StateVector::from_vector(&x)
    }

    #[test]
    fn gto_matches_rk4_integration() {
        let el = KeplerianElements::from_degrees(25447.5, 0.66, 1.0, 0.001, 0.001, 240.0);
        let sv = kepler_to_cartesian(&el, MU_EARTH).unwrap();
        for &dt in &[900.0, 7200.0, -3000.0] {
            let analytic = propagate_two_body(&sv, dt, MU_EARTH).unwrap();
            let numeric = rk4_two_body(&sv, dt, 200_000);
            assert!((analytic.position - numeric.position).norm() < 1e-6, "dt = {dt}");
        }
    }

    #[test]
    fn site_on_equator_at_reference() {
        let site = ObserverSite::new(0.0, 0.0, 0.0).unwrap();
        let sv = site_state(&site, Epoch(0.0));
        assert_relative_eq!(sv.position, Vector3::new(R_EARTH, 0.0, 0.0), epsilon = 1e-9);
        assert_relative_eq!(sv.velocity, Vector3::new(0.0, OMEGA_EARTH * R_EARTH, 0.0), epsilon = 1e-12);
        let pole = site_state(&ObserverSite::new(90.0, 10.0, 0.0).unwrap(), Epoch(123.0));
        assert!(pole.velocity.norm() < 1e-12);
    }

    #[test]
    fn site_longitude_wraps() {
        assert_eq!(ObserverSite::new(0.0, 190.0, 0.0).unwrap().longitude, -170.0);
        assert_eq!(ObserverSite::new(0.0, -180.0, 0.0).unwrap().longitude, 180.0);
        assert!(ObserverSite::new(91.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn site_rotation_between_epochs() {
        let site = ObserverSite::new(20.7, -156.3, 0.1).unwrap();
        let (t0, t1) = (Epoch(100.0), Epoch(3700.0));
        let p0 = site_state(&site, t0).position;
        let p1 = site_state(&site, t1).position;
        assert_relative_eq!(p0.norm(), p1.norm(), max_relative = 1e-12);
        let angle = p1.y.atan2(p1.x) - p0.y.atan2(p0.x);
        assert!((wrap_pi(angle) - OMEGA_EARTH * 3600.0).abs() < 1e-10);
        assert_relative_eq!(p0.z, p1.z, epsilon = 1e-9);
        let sv = site_state(&site, t0);
        let spin_distance = p0.x.hypot(p0.y);
        assert_relative_eq!(sv.velocity.norm(), OMEGA_EARTH * spin_distance, max_relative = 1e-9);
    }

    #[test]
    fn line_of_sight_along_x() {
        let obs = StateVector::new(Vector3::new(7000.0, 0.0, 0.0), Vector3::zeros());
        let tgt = StateVector::new(Vector3::new(8000.0, 0.0, 0.0), Vector3::zeros());
        let z = measure_radec(&tgt, &obs).unwrap();
        assert_eq!((z.ra, z.dec), (0.0, 0.0));
        let up = StateVector::new(Vector3::new(7000.0, 0.0, 500.0), Vector3::zeros());
        let z = measure_radec(&up, &obs).unwrap();
        assert_eq!(z.ra, 0.0);
        assert_relative_eq!(z.dec, FRAC_PI_2);
        assert_eq!(measure_radec(&obs, &obs), Err(Error::ZeroRange));
    }

    #[test]
    fn angle_wrapping() {
        assert_eq!(wrap_two_pi(-0.5), TAU - 0.5);
        assert_relative_eq!(wrap_pi(TAU - 0.1), -0.1, epsilon = 1e-15);
        assert_eq!(wrap_pi(-PI), PI);
    }
}
