#![allow(dead_code)]

use m2m_channel::geometry::{LinkState, WorldPlane};
use m2m_channel::{DelayRange, PlaneCoeffs, Scenario, Vec3};

pub const KMH: f64 = 1.0 / 3.6;
pub const TX_SPEED: f64 = 247.3 * KMH;
pub const RX_SPEED: f64 = 245.4 * KMH;
pub const ALTITUDE: f64 = 580.0;
pub const SEPARATION: f64 = 627.5;
pub const XI_MIN: f64 = 2.11;
pub const XI_MAX: f64 = 12.24;

/// Both aircraft fly along the link over flat ground, in the local frame.
pub fn aircraft() -> Scenario {
    let plane = PlaneCoeffs::new(0.0, 1.0, 0.0, ALTITUDE / (0.5 * SEPARATION)).unwrap();
    Scenario::with_speed(0.5 * SEPARATION, plane, Vec3::new(0.0, 0.0, TX_SPEED), Vec3::new(0.0, 0.0, RX_SPEED), 250e6, 3e8).unwrap()
}

pub fn aircraft_range(sc: &Scenario) -> DelayRange {
    DelayRange::new(XI_MIN, XI_MAX, sc.plane()).unwrap()
}

/// The same geometry in world coordinates with the ground at z = 0.
pub fn aircraft_world() -> (LinkState, WorldPlane) {
    let link = LinkState {
        tx_pos: Vec3::new(0.0, 0.0, ALTITUDE),
        rx_pos: Vec3::new(SEPARATION, 0.0, ALTITUDE),
        tx_vel: Vec3::new(TX_SPEED, 0.0, 0.0),
        rx_vel: Vec3::new(RX_SPEED, 0.0, 0.0),
    };
    (link, WorldPlane { normal: Vec3::new(0.0, 0.0, 1.0), offset: 0.0 })
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
