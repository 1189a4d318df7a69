//! Shared fixtures for the benchmark targets.

use vortorus_core::dynamics::{SDEConfig, Scheme, Simulator, VortexState};
use vortorus_core::kernel::KernelSpec;
use vortorus_core::spectral::NoiseFamily;

/// A three-vortex stochastic simulator matching the ensemble workloads.
pub fn ensemble_simulator() -> (Simulator, VortexState) {
    let noise = NoiseFamily::sample(2, 0.0, 8, 0.4, 7).expect("valid family");
    let sim = Simulator::new(SDEConfig {
        scheme: Scheme::EulerHeunStrat,
        dt: 1e-3,
        t_final: 1.0,
        kernel: KernelSpec::regularized(1e-3),
        noise: Some(noise),
        stop_delta: 0.0,
        seed: 1,
    })
    .expect("valid config");
    let state = VortexState::new(
        vec![[0.0, 0.0], [2.0, 0.5], [-1.5, -1.5]],
        vec![2.0, 2.0, -1.0],
    )
    .expect("valid state");
    (sim, state)
}
