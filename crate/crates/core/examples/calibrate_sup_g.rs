//! Runs the pinned calibration protocol behind `mc::SUP_G_RATE` and prints
//! the measured growth rate. The frozen constant is this rate times a 1.25
//! safety factor, rounded up.

use vortorus_core::mc;

fn main() {
    let spec = mc::sup_g_calibration_spec().expect("calibration spec builds");
    let rate = mc::calibrate_sup_g_rate(&spec).expect("calibration run succeeds");
    println!("measured sup-g growth rate: {rate:.6}");
    println!("frozen SUP_G_RATE:          {:.6}", mc::SUP_G_RATE);
    println!("safety ratio:               {:.3}", mc::SUP_G_RATE / rate);
}
