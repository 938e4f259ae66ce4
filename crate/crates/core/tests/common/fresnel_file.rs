//! Writer for synthetic datasets in the single-frequency ASCII layout read
//! by `msinv::fresnel`.

use msinv::greens::green;
use msinv::measurement::SPEED_OF_LIGHT;
use num_complex::Complex64;
use std::f64::consts::TAU;
use std::fmt::Write;

pub const RING_RADIUS_M: f64 = 1.67;

/// `tx_count` transmitters on a 360-slot ring; each records the 241 slots
/// furthest from it. The incident column is `amplitude * g` at 3 GHz and the
/// total field is `incident + scattered(tx, rx)`.
pub fn synthesize<F>(tx_count: usize, freq_ghz: f64, amplitude: Complex64, scattered: F) -> String
where
    F: Fn(usize, usize) -> Complex64,
{
    let k_b = TAU * 3e9 / SPEED_OF_LIGHT;
    let mut s = String::from("# tx rx freq_ghz re_total im_total re_incident im_incident\n");
    for t in 1..=tx_count {
        let ta = TAU * (t - 1) as f64 / tx_count as f64;
        let tp = [RING_RADIUS_M * ta.cos(), RING_RADIUS_M * ta.sin()];
        let nearest = ((t - 1) * 360) / tx_count;
        for off in 60..=300 {
            let r = (nearest + off) % 360 + 1;
            let ra = TAU * (r - 1) as f64 / 360.0;
            let d = [RING_RADIUS_M * ra.cos() - tp[0], RING_RADIUS_M * ra.sin() - tp[1], 0.0];
            let inc = amplitude * green(2, &d, k_b).unwrap();
            let tot = inc + scattered(t, r);
            writeln!(s, "{t} {r} {freq_ghz} {:.17e} {:.17e} {:.17e} {:.17e}", tot.re, tot.im, inc.re, inc.im).unwrap();
        }
    }
    s
}
