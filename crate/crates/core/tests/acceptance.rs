//! Acceptance suite: every release gate runs here, one test per criterion,
//! each printing a PASS line with its measured figures (visible with
//! `cargo test --test acceptance -- --nocapture`).

use std::f64::consts::PI;
use std::time::Instant;
use vortorus_core::diagnostics::{self, hamiltonian, moment, volume_check};
use vortorus_core::dynamics::{drift, SDEConfig, Scheme, Simulator, VortexState};
use vortorus_core::hypo::{
    bracket_closure, check_span, check_span_at, genericity_trial, LiftedFamily, SpanGrid,
};
use vortorus_core::kernel::{BoundConstants, Kernel, KernelSpec};
use vortorus_core::mc::{
    self, collision_prob, run_ensemble, CollapseMode, EnsembleSpec, InitialLaw,
};
use vortorus_core::rng::{domain, step_normals, substream};
use vortorus_core::spectral::{local_basis, sample_field, NoiseFamily, SpectralField};
use vortorus_core::torus::{perp, TorusVec};
use rand::Rng;

fn random_point(rng: &mut impl Rng) -> TorusVec {
    TorusVec::wrap([rng.gen_range(-PI..PI), rng.gen_range(-PI..PI)]).unwrap()
}

#[test]
fn criterion_01_kernel_consistency() {
    let start = Instant::now();
    let kernel = Kernel::new(KernelSpec::exact()).unwrap();
    let mut rng = substream(101, domain::TEST_POINTS, 0);
    let h = 1e-5;
    let mut checked = 0;
    let mut worst = 0.0f64;
    while checked < 1000 {
        let x = random_point(&mut rng);
        if x.norm() <= 0.05 {
            continue;
        }
        checked += 1;
        let k = kernel.biot_savart(x).unwrap();
        let c = x.components();
        let mut grad = [0.0; 2];
        for axis in 0..2 {
            let mut cp = c;
            let mut cm = c;
            cp[axis] += h;
            cm[axis] -= h;
            let gp = kernel.green(TorusVec::wrap(cp).unwrap()).unwrap();
            let gm = kernel.green(TorusVec::wrap(cm).unwrap()).unwrap();
            grad[axis] = (gp - gm) / (2.0 * h);
        }
        let kfd = perp(grad);
        let scale = k[0].hypot(k[1]).max(1e-12);
        worst = worst.max((k[0] - kfd[0]).hypot(k[1] - kfd[1]) / scale);
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(worst < 1e-5, "max relative error {worst:e}");
    assert!(elapsed < 10.0, "runtime {elapsed:.1}s over budget");
    println!(
        "criterion 01 kernel-consistency: PASS (max rel err {worst:.2e}, {elapsed:.2}s)"
    );
}

#[test]
fn criterion_02_green_log_bounds() {
    let kernel = Kernel::new(KernelSpec::exact()).unwrap();
    let bounds = BoundConstants::fit(&kernel).unwrap();
    assert!(bounds.c1 <= bounds.c2, "C1 must not exceed C2");
    let mut rng = substream(102, domain::TEST_POINTS, 0);
    let mut violations = 0;
    let mut checked = 0;
    while checked < 10_000 {
        let x = random_point(&mut rng);
        if x.is_zero() {
            continue;
        }
        checked += 1;
        let g = kernel.green(x).unwrap();
        if !bounds.check_green(g, x.norm()) {
            violations += 1;
        }
    }
    assert_eq!(violations, 0, "{violations} bound violations on fresh samples");
    println!(
        "criterion 02 green-bounds: PASS (C1={:.3}, C2={:.3}, C3={:.3}, 0 violations / 10000)",
        bounds.c1, bounds.c2, bounds.c3
    );
}

#[test]
fn criterion_03_regularization_contract() {
    let kernel = Kernel::new(KernelSpec::exact()).unwrap();
    let bounds = BoundConstants::fit(&kernel).unwrap();
    let delta = 0.05;
    let mut rng = substream(103, domain::TEST_POINTS, 0);
    let mut outside = 0;
    while outside < 10_000 {
        let x = random_point(&mut rng);
        if x.norm() <= delta {
            continue;
        }
        outside += 1;
        let g = kernel.green(x).unwrap();
        let gr = kernel.green_reg(x, delta).unwrap();
        assert_eq!(
            g.to_bits(),
            gr.to_bits(),
            "regularized value differs outside the disk at {:?}",
            x.components()
        );
    }
    // C2 junction: one-sided second differences of the analytic gradient
    let jd = 0.2;
    let h = 1e-5;
    let mut worst = 0.0f64;
    for th in [0.0f64, 0.7, 1.9, 2.6, 4.1, 5.5] {
        let dir = [th.cos(), th.sin()];
        let radial = |r: f64| {
            let x = TorusVec::wrap([r * dir[0], r * dir[1]]).unwrap();
            let g = kernel.grad_green_reg(x, jd).unwrap();
            g[0] * dir[0] + g[1] * dir[1]
        };
        let value = |r: f64| {
            kernel
                .green_reg(TorusVec::wrap([r * dir[0], r * dir[1]]).unwrap(), jd)
                .unwrap()
        };
        let v_gap = ((value(jd - 1e-12) - value(jd + 1e-12)) / value(jd).abs()).abs();
        let g_gap = ((radial(jd - 1e-12) - radial(jd + 1e-12)) / radial(jd).abs()).abs();
        let h_in = (3.0 * radial(jd) - 4.0 * radial(jd - h) + radial(jd - 2.0 * h)) / (2.0 * h);
        let h_out = (-3.0 * radial(jd) + 4.0 * radial(jd + h) - radial(jd + 2.0 * h)) / (2.0 * h);
        let h_gap = ((h_in - h_out) / h_out.abs()).abs();
        worst = worst.max(v_gap).max(g_gap).max(h_gap);
    }
    assert!(worst < 1e-6, "junction residual {worst:e}");
    // bounded value at the origin
    let origin = TorusVec::wrap([0.0, 0.0]).unwrap();
    for d in [1e-1, 1e-2, 1e-3] {
        let g0 = kernel.green_reg(origin, d).unwrap();
        assert!(
            g0.abs() <= bounds.c2 * d.ln().abs() + bounds.c3,
            "|G^delta(0)| = {g0} breaks the bound at delta = {d}"
        );
    }
    println!(
        "criterion 03 regularization-contract: PASS (exact equality x10000, junction residual {worst:.2e})"
    );
}

#[test]
fn criterion_04_deterministic_conservation() {
    let start = Instant::now();
    // n = 3 seeded-random configuration, pairwise separated
    let mut rng = substream(104, domain::TEST_POINTS, 0);
    let state = loop {
        let pts: Vec<[f64; 2]> = (0..3)
            .map(|_| [rng.gen_range(-PI..PI), rng.gen_range(-PI..PI)])
            .collect();
        let s = VortexState::new(pts, vec![0.8, -0.5, 0.3]).unwrap();
        if s.min_pair_distance().unwrap().0 > 1.0 {
            break s;
        }
    };
    let sim = Simulator::new(SDEConfig {
        scheme: Scheme::Rk4Deterministic,
        dt: 1e-3,
        t_final: 10.0,
        kernel: KernelSpec::exact(),
        noise: None,
        stop_delta: 0.0,
        seed: 0,
    })
    .unwrap();
    let traj = sim.simulate(&state).unwrap();
    let h0 = hamiltonian(&traj.states[0], sim.kernel()).unwrap();
    let hf = hamiltonian(traj.final_state(), sim.kernel()).unwrap();
    let h_drift = ((hf - h0) / h0.abs()).abs();
    assert!(h_drift < 1e-8, "H drift {h_drift:e}");
    let m0 = moment(&traj.states[0]);
    let mf = moment(traj.final_state());
    let m_drift = (mf[0] - m0[0]).hypot(mf[1] - m0[1]) / m0[0].hypot(m0[1]).max(1.0);
    assert!(m_drift < 1e-8, "moment drift {m_drift:e}");

    // co-rotating equal pair at separation 0.1
    let pair = VortexState::new(vec![[-0.05, 0.0], [0.05, 0.0]], vec![0.02, 0.02]).unwrap();
    let sim_pair = Simulator::new(SDEConfig {
        scheme: Scheme::Rk4Deterministic,
        dt: 1e-3,
        t_final: 5.0,
        kernel: KernelSpec::exact(),
        noise: None,
        stop_delta: 0.0,
        seed: 0,
    })
    .unwrap();
    let ptraj = sim_pair.simulate(&pair).unwrap();
    let d0 = ptraj.states[0].min_pair_distance().unwrap().0;
    let mut worst = 0.0f64;
    for s in &ptraj.states {
        let d = s.min_pair_distance().unwrap().0;
        worst = worst.max(((d - d0) / d0).abs());
    }
    assert!(worst < 1e-6, "pair distance drift {worst:e}");
    // cross-check against a dt/10 reference run
    let sim_ref = Simulator::new(SDEConfig {
        scheme: Scheme::Rk4Deterministic,
        dt: 1e-4,
        t_final: 5.0,
        kernel: KernelSpec::exact(),
        noise: None,
        stop_delta: 0.0,
        seed: 0,
    })
    .unwrap();
    let rtraj = sim_ref.simulate(&pair).unwrap();
    let a = ptraj.final_state().lifts();
    let b = rtraj.final_state().lifts();
    let gap = a
        .iter()
        .zip(b.iter())
        .map(|(x, y)| (x[0] - y[0]).hypot(x[1] - y[1]))
        .fold(0.0f64, f64::max);
    assert!(gap < 1e-6, "dt/10 reference disagrees by {gap:e}");
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "runtime {elapsed:.1}s over budget");
    println!(
        "criterion 04 deterministic-conservation: PASS (H drift {h_drift:.2e}, moment drift {m_drift:.2e}, pair {worst:.2e}, {elapsed:.1}s)"
    );
}

#[test]
fn criterion_05_additive_noise_exactness() {
    // constant common noise: subtracting the accumulated shift must reproduce
    // the deterministic per-step map
    let fields = vec![
        SpectralField::constant([1.0, 0.3]),
        SpectralField::constant([-0.2, 0.8]),
    ];
    let amp = 0.5;
    let noise = NoiseFamily::new(fields.clone(), amp).unwrap();
    let steps = 10_000;
    let dt = 1e-4;
    let stochastic = Simulator::new(SDEConfig {
        scheme: Scheme::EulerHeunStrat,
        dt,
        t_final: steps as f64 * dt,
        kernel: KernelSpec::exact(),
        noise: Some(noise),
        stop_delta: 0.0,
        seed: 77,
    })
    .unwrap();
    let deterministic = Simulator::new(SDEConfig {
        scheme: Scheme::EulerHeunStrat,
        dt,
        t_final: steps as f64 * dt,
        kernel: KernelSpec::exact(),
        noise: None,
        stop_delta: 0.0,
        seed: 77,
    })
    .unwrap();
    let x0 = VortexState::new(
        vec![[0.0, 0.0], [2.0, 0.3], [-1.2, -2.1]],
        vec![0.8, -0.5, 0.3],
    )
    .unwrap();
    let traj = stochastic.simulate(&x0).unwrap();
    assert_eq!(traj.increments.len(), steps);
    let consts: Vec<[f64; 2]> = fields.iter().map(|f| f.mean()).collect();
    let mut shift = [0.0f64, 0.0];
    let mut worst = 0.0f64;
    for m in 0..steps {
        // shifted state y_m = x_m - shift(t_m), identical for every vortex
        let shifted = |state: &VortexState, sh: [f64; 2]| {
            let lifts: Vec<[f64; 2]> = state
                .lifts()
                .iter()
                .map(|l| [l[0] - sh[0], l[1] - sh[1]])
                .collect();
            state.with_lifts(lifts).unwrap()
        };
        let y_m = shifted(&traj.states[m], shift);
        let z = deterministic.step(&y_m, &[]).unwrap();
        // advance the shift by this step's increments
        for (k, c) in consts.iter().enumerate() {
            let dw = traj.increments[m][k] * amp;
            shift[0] += dw * c[0];
            shift[1] += dw * c[1];
        }
        let y_next = shifted(&traj.states[m + 1], shift);
        for (a, b) in y_next.lifts().iter().zip(z.lifts().iter()) {
            worst = worst.max((a[0] - b[0]).abs()).max((a[1] - b[1]).abs());
        }
    }
    assert!(worst < 1e-12, "shift argument deviation {worst:e}");
    println!(
        "criterion 05 additive-noise-exactness: PASS (max per-step deviation {worst:.2e} over {steps} steps)"
    );
}

#[test]
fn criterion_06_volume_preservation() {
    let x0 = VortexState::new(vec![[0.0, 0.0], [2.0, 1.0]], vec![1.0, -0.7]).unwrap();
    let h = 1e-5;
    let det = Simulator::new(SDEConfig {
        scheme: Scheme::Rk4Deterministic,
        dt: 1e-3,
        t_final: 1.0,
        kernel: KernelSpec::regularized(0.05),
        noise: None,
        stop_delta: 0.0,
        seed: 0,
    })
    .unwrap();
    let det_err = volume_check(&det, &x0, h).unwrap();
    assert!(det_err < 1e-3, "deterministic |det - 1| = {det_err:e}");
    // pathwise check: smooth (gamma = 1) fields at moderate amplitude keep
    // the explicit scheme well inside its stability region
    let noise = NoiseFamily::sample(2, 1.0, 4, 0.1, 61).unwrap();
    let stoch = Simulator::new(SDEConfig {
        scheme: Scheme::EulerHeunStrat,
        dt: 2.5e-4,
        t_final: 1.0,
        kernel: KernelSpec::regularized(0.1),
        noise: Some(noise),
        stop_delta: 0.0,
        seed: 555,
    })
    .unwrap();
    let stoch_err = volume_check(&stoch, &x0, h).unwrap();
    assert!(stoch_err < 1e-3, "stochastic |det - 1| = {stoch_err:e}");
    println!(
        "criterion 06 volume-preservation: PASS (deterministic {det_err:.2e}, pathwise {stoch_err:.2e})"
    );
}

#[test]
fn criterion_07_scheme_cross_validation() {
    // smooth moderate noise: the inter-scheme gap then reflects the
    // discretization difference rather than chaotic path divergence
    let noise = NoiseFamily::sample(2, 1.0, 4, 0.15, 71).unwrap();
    let x0 = VortexState::new(
        vec![[0.0, 0.0], [2.0, 0.3], [-1.2, -2.1]],
        vec![0.5, -0.3, 0.2],
    )
    .unwrap();
    let t_final = 0.5;
    let dt0 = 1e-2;
    let levels = 4;
    // one refinable Brownian path: draw at the finest level, sum for coarser
    let fine_steps = (t_final / (dt0 / (1 << (levels - 1)) as f64)).round() as usize;
    let fine_dt = t_final / fine_steps as f64;
    let n_noise = noise.len();
    let fine: Vec<Vec<f64>> = (0..fine_steps)
        .map(|m| {
            let mut v = step_normals(9090, m as u64, n_noise);
            for w in v.iter_mut() {
                *w *= fine_dt.sqrt();
            }
            v
        })
        .collect();
    let mut gaps = Vec::new();
    for level in 0..levels {
        let group = 1 << (levels - 1 - level);
        let dt = fine_dt * group as f64;
        let coarse: Vec<Vec<f64>> = fine
            .chunks(group)
            .map(|chunk| {
                let mut acc = vec![0.0; n_noise];
                for dw in chunk {
                    for (a, w) in acc.iter_mut().zip(dw.iter()) {
                        *a += w;
                    }
                }
                acc
            })
            .collect();
        let run = |scheme: Scheme| {
            let sim = Simulator::new(SDEConfig {
                scheme,
                dt,
                t_final,
                kernel: KernelSpec::regularized(0.05),
                noise: Some(noise.clone()),
                stop_delta: 0.0,
                seed: 9090,
            })
            .unwrap();
            sim.simulate_with_increments(&x0, coarse.clone()).unwrap()
        };
        let heun = run(Scheme::EulerHeunStrat);
        let ito = run(Scheme::EulerMaruyamaItoCorrected);
        let mut gap = 0.0f64;
        for (a, b) in heun.states.iter().zip(ito.states.iter()) {
            for (la, lb) in a.lifts().iter().zip(b.lifts().iter()) {
                gap = gap.max((la[0] - lb[0]).hypot(la[1] - lb[1]));
            }
        }
        gaps.push(gap);
    }
    for w in gaps.windows(2) {
        assert!(
            w[1] <= 2.0 * w[0],
            "scheme gap grew beyond the noise allowance: {gaps:?}"
        );
    }
    assert!(
        gaps[levels - 1] < gaps[0],
        "scheme gap did not shrink overall: {gaps:?}"
    );
    let gap_text: Vec<String> = gaps.iter().map(|g| format!("{g:.3e}")).collect();
    println!(
        "criterion 07 scheme-cross-validation: PASS (gaps {})",
        gap_text.join(" -> ")
    );
}

#[test]
fn criterion_08_lift_bracket_identity() {
    let mut rng = substream(108, domain::TEST_POINTS, 0);
    let mut worst = 0.0f64;
    for trial in 0..100u64 {
        let f = {
            let mut r = substream(2000, domain::FIELD_SAMPLING, trial);
            sample_field(2, 0.0, &mut r)
        };
        let g = {
            let mut r = substream(2001, domain::FIELD_SAMPLING, trial);
            sample_field(2, 0.0, &mut r)
        };
        let n = 2;
        let pts: Vec<TorusVec> = (0..n).map(|_| random_point(&mut rng)).collect();
        let lift = |field: &SpectralField, config: &[TorusVec]| -> Vec<f64> {
            config
                .iter()
                .flat_map(|&p| field.eval(p).into_iter())
                .collect()
        };
        let shift = |config: &[TorusVec], dir: &[f64], s: f64| -> Vec<TorusVec> {
            config
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    TorusVec::wrap([p.c1() + s * dir[2 * i], p.c2() + s * dir[2 * i + 1]])
                        .unwrap()
                })
                .collect()
        };
        let h = 1e-6;
        let af = lift(&f, &pts);
        let ag = lift(&g, &pts);
        let gp = lift(&g, &shift(&pts, &af, h));
        let gm = lift(&g, &shift(&pts, &af, -h));
        let fp = lift(&f, &shift(&pts, &ag, h));
        let fm = lift(&f, &shift(&pts, &ag, -h));
        let lifted = lift(&f.lie_bracket(&g), &pts);
        let scale = lifted.iter().map(|v| v.abs()).fold(1e-9f64, f64::max);
        for a in 0..2 * n {
            let fd = (gp[a] - gm[a]) / (2.0 * h) - (fp[a] - fm[a]) / (2.0 * h);
            worst = worst.max((fd - lifted[a]).abs() / scale);
        }
    }
    assert!(worst < 1e-6, "lift-bracket identity residual {worst:e}");
    println!("criterion 08 lift-bracket-identity: PASS (max rel residual {worst:.2e})");
}

#[test]
fn criterion_09_hypoellipticity_suite() {
    let start = Instant::now();
    let tol = 1e-9;
    // (a) constant fields fail with rank exactly 2
    let constants = LiftedFamily::new(
        NoiseFamily::new(
            vec![
                SpectralField::constant([1.0, 0.0]),
                SpectralField::constant([0.0, 1.0]),
            ],
            1.0,
        )
        .unwrap(),
        2,
    )
    .unwrap();
    let grid_small = SpanGrid {
        per_axis: 6,
        delta: 0.25,
        n: 2,
    };
    let basis_c = bracket_closure(&constants.base, 1, 100).unwrap();
    let report_c = check_span(&constants, &basis_c, &grid_small, tol).unwrap();
    assert!(!report_c.pass);
    assert_eq!(report_c.min_rank, 2);

    // (b) the local bump basis spans at its centers
    let centers = [
        TorusVec::wrap([0.0, 0.0]).unwrap(),
        TorusVec::wrap([2.5, -1.5]).unwrap(),
    ];
    let basis_fields = local_basis(&centers, 0.9, 0.05).unwrap();
    let local_fam = LiftedFamily::new(NoiseFamily::new(basis_fields.fields, 1.0).unwrap(), 2).unwrap();
    let basis_l = bracket_closure(&local_fam.base, 1, 100).unwrap();
    let report_l = check_span_at(&local_fam, &basis_l, &[centers.to_vec()], 0.25, tol).unwrap();
    assert!(report_l.pass, "local basis fails at its centers: {report_l:?}");

    // (c) a random degree-2 family with M = 5 spans over the 20^4 grid
    let m_fields = 5;
    let fields: Vec<SpectralField> = (0..(2 * 2 * m_fields))
        .map(|i| {
            let mut r = substream(3000, domain::FIELD_SAMPLING, i as u64);
            sample_field(2, 0.0, &mut r)
        })
        .collect();
    let random_fam = LiftedFamily::new(NoiseFamily::new(fields, 1.0).unwrap(), 2).unwrap();
    let grid = SpanGrid {
        per_axis: 20,
        delta: 0.25,
        n: 2,
    };
    let basis_r = bracket_closure(&random_fam.base, 1, 1000).unwrap();
    let report_r = check_span(&random_fam, &basis_r, &grid, tol).unwrap();
    assert!(
        report_r.pass,
        "random family failed the 20^4 grid: {report_r:?}"
    );

    // genericity over 50 trials; failures trigger a margin audit
    let stats = genericity_trial(2, 2, 5, &grid, 50, 424242, tol).unwrap();
    if stats.pass_rate < 1.0 {
        eprintln!("margin audit: {stats:#?}");
    }
    assert_eq!(
        stats.passes, stats.trials,
        "genericity pass rate {} (see margin audit above)",
        stats.pass_rate
    );
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 600.0, "runtime {elapsed:.1}s over budget");
    println!(
        "criterion 09 hypoellipticity-suite: PASS (grid margin {:.2e}, genericity 50/50, {elapsed:.0}s)",
        report_r.min_margin
    );
}

#[test]
fn criterion_10_collision_statistics() {
    let start = Instant::now();
    let noise = NoiseFamily::sample(2, 0.0, 8, 0.4, 1001).unwrap();
    let spec = EnsembleSpec {
        config: SDEConfig {
            scheme: Scheme::EulerHeunStrat,
            dt: 1e-3,
            t_final: 2.0,
            kernel: KernelSpec::regularized(1e-3),
            noise: Some(noise),
            stop_delta: 0.0,
            seed: 0,
        },
        trajectories: 2000,
        law: InitialLaw::UniformOffDiagonal {
            margin: 0.15,
            intensities: vec![2.0, 2.0, -1.0],
        },
        epsilon_ladder: vec![0.1, 0.05, 0.02, 0.01, 0.005],
        base_seed: 7100,
        seed_stride: 1,
    };
    let table = collision_prob(&spec).unwrap();
    assert_eq!(table.failed, 0, "trajectories failed: {}", table.failed);
    for w in table.rows.windows(2) {
        assert!(
            w[1].count <= w[0].count,
            "counts not nested: {:?}",
            table.rows
        );
    }
    assert!(
        table.fit_upper_bounds_within_2se,
        "fit fails to upper-bound the table: {table:#?}"
    );
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 1800.0, "runtime {elapsed:.0}s over budget");
    let rows: Vec<String> = table
        .rows
        .iter()
        .map(|r| format!("p({})={:.4}", r.epsilon, r.p_hat))
        .collect();
    println!(
        "criterion 10 collision-statistics: PASS (a={:.4}, {}, {elapsed:.0}s)",
        table.fit_a,
        rows.join(", ")
    );
}

#[test]
fn criterion_11_collapse_demo() {
    let det_report = mc::collapse_demo(CollapseMode::Deterministic, 42).unwrap();
    let det = det_report.deterministic.as_ref().unwrap();
    assert!(
        det.reached && det.time < 10.0,
        "deterministic collapse missed the threshold: {det:?}"
    );
    let family = NoiseFamily::sample(2, 0.0, 8, 0.3, 4242).unwrap();
    let noisy_report = mc::collapse_demo(
        CollapseMode::Noisy {
            family,
            trajectories: 100,
        },
        42,
    )
    .unwrap();
    let noisy = noisy_report.noisy.as_ref().unwrap();
    // the deterministic indicator is 1; the noisy ensemble must do strictly better
    assert!(
        noisy.fraction < 1.0,
        "every noisy path collapsed: {noisy:?}"
    );
    println!(
        "criterion 11 collapse-demo: PASS (deterministic t={:.3}, noisy hits {}/{} CI95 [{:.3}, {:.3}])",
        det.time, noisy.hits, noisy.total, noisy.ci95.0, noisy.ci95.1
    );
}

#[test]
fn criterion_12_determinism_across_workers() {
    // library-level replay: identical summaries text from different pools
    let noise = NoiseFamily::sample(2, 0.0, 4, 0.4, 31).unwrap();
    let spec = EnsembleSpec {
        config: SDEConfig {
            scheme: Scheme::EulerHeunStrat,
            dt: 1e-3,
            t_final: 0.5,
            kernel: KernelSpec::regularized(1e-2),
            noise: Some(noise),
            stop_delta: 0.0,
            seed: 0,
        },
        trajectories: 24,
        law: InitialLaw::UniformOffDiagonal {
            margin: 0.3,
            intensities: vec![2.0, 2.0, -1.0],
        },
        epsilon_ladder: vec![0.1],
        base_seed: 1200,
        seed_stride: 3,
    };
    let render = |summaries: &[mc::TrajectorySummary]| -> String {
        summaries
            .iter()
            .map(|s| {
                format!(
                    "{} {} {:?}\n",
                    s.seed,
                    s.min_pair_distance.to_bits(),
                    s.stopped_at
                )
            })
            .collect()
    };
    let mut texts = Vec::new();
    for workers in [1usize, 2, 4] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .unwrap();
        let summaries = pool.install(|| run_ensemble(&spec).unwrap());
        texts.push(render(&summaries));
    }
    assert_eq!(texts[0], texts[1], "1 vs 2 workers differ");
    assert_eq!(texts[0], texts[2], "1 vs 4 workers differ");

    // trajectory-level replay through the text serialization
    let sim = Simulator::new(spec.config.clone()).unwrap();
    let x0 = VortexState::new(vec![[0.0, 0.0], [2.0, 1.0]], vec![1.0, -1.0]).unwrap();
    let t1 = sim.simulate(&x0).unwrap();
    let t2 = sim.simulate(&x0).unwrap();
    let d1 = diagnostics::records_for(&t1, sim.kernel(), 1e-2).unwrap();
    let d2 = diagnostics::records_for(&t2, sim.kernel(), 1e-2).unwrap();
    let text1 = vortorus_core::output::trajectory_text(&t1, &d1).unwrap();
    let text2 = vortorus_core::output::trajectory_text(&t2, &d2).unwrap();
    assert_eq!(text1, text2, "trajectory text replay differs");
    println!("criterion 12 determinism: PASS (byte-identical across 1/2/4 workers)");
}

// Full-scale running-maximum bound: the 200-path calibration configuration
// must satisfy `mean sup_t g^delta <= g^delta(X0) + C T` with the frozen rate
// within three standard errors.
#[test]
fn sup_g_expectation_bound_holds_at_full_scale() {
    let spec = mc::sup_g_calibration_spec().unwrap();
    let report = mc::sup_g_bound(&spec).unwrap();
    assert_eq!(report.paths, 200);
    assert!(
        report.pass,
        "sup-g bound violated: lhs {} vs rhs {} (se {})",
        report.lhs_mean, report.rhs_bound, report.std_err
    );
    println!(
        "sup-g bound: PASS (mean sup {:.3} <= {:.3} + 3se, 200 paths)",
        report.lhs_mean, report.rhs_bound
    );
}

// Shared-noise audit: the realized step decomposes exactly into the recorded
// drift, correction and common Brownian increments; no per-vortex randomness
// exists anywhere in the integrator.
#[test]
fn shared_noise_structure_is_auditable_from_the_record() {
    let noise = NoiseFamily::sample(2, 0.0, 3, 0.6, 91).unwrap();
    let sim = Simulator::new(SDEConfig {
        scheme: Scheme::EulerMaruyamaItoCorrected,
        dt: 1e-3,
        t_final: 0.2,
        kernel: KernelSpec::regularized(0.05),
        noise: Some(noise.clone()),
        stop_delta: 0.0,
        seed: 17,
    })
    .unwrap();
    let x0 = VortexState::new(
        vec![[0.0, 0.0], [1.5, 0.7], [-1.0, 2.0]],
        vec![1.0, -0.5, 0.25],
    )
    .unwrap();
    let traj = sim.simulate(&x0).unwrap();
    for m in 0..traj.increments.len() {
        let s0 = &traj.states[m];
        let s1 = &traj.states[m + 1];
        let a = drift(s0, sim.kernel()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut expect = [0.0f64; 2];
                let ci = noise.strat_correction(s0.positions()[i]);
                let cj = noise.strat_correction(s0.positions()[j]);
                for c in 0..2 {
                    expect[c] = (a[i][c] - a[j][c] + ci[c] - cj[c]) * 1e-3;
                }
                for (k, &dw) in traj.increments[m].iter().enumerate() {
                    let vi = noise.eval_field(k, s0.positions()[i]);
                    let vj = noise.eval_field(k, s0.positions()[j]);
                    for c in 0..2 {
                        expect[c] += dw * (vi[c] - vj[c]);
                    }
                }
                for c in 0..2 {
                    let got = (s1.lifts()[i][c] - s0.lifts()[i][c])
                        - (s1.lifts()[j][c] - s0.lifts()[j][c]);
                    assert!(
                        (got - expect[c]).abs() < 1e-14,
                        "step {m}, pair ({i},{j}), component {c}: {got} vs {expect:?}"
                    );
                }
            }
        }
    }
    println!("shared-noise audit: PASS");
}
