use std::sync::Arc;

use super::*;
use crate::measures::{flow_distance, rho_upper};
use crate::operators::{check_pairing_inequality, graph_probes, resolve, CatalogOperator, OperatorKind};

fn zero_op(dim: usize) -> CatalogOperator {
    CatalogOperator::new(OperatorKind::Zero { dim }).unwrap()
}

fn half_line() -> CatalogOperator {
    CatalogOperator::new(OperatorKind::NormalConeBox {
        lo: vec![0.0],
        hi: vec![f64::INFINITY],
    })
    .unwrap()
}

fn unit_ball(dim: usize) -> CatalogOperator {
    CatalogOperator::new(OperatorKind::NormalConeBall {
        center: vec![0.0; dim],
        radius: 1.0,
    })
    .unwrap()
}

fn point(x: &[f64]) -> InitialCondition {
    InitialCondition::Point { point: x.to_vec() }
}

fn dirac(x: f64) -> EmpiricalMeasure {
    EmpiricalMeasure::dirac(&[x]).unwrap()
}

/// RK4 on the mean/second-moment system of the mean-field linear model:
/// m1' = (-a + b̄) m1,  m2' = -2a m2 + 2b̄ m1² + s².
fn moment_oracle(a: f64, bbar: f64, s: f64, m1: f64, m2: f64, t: f64) -> (f64, f64) {
    let f = |y: [f64; 2]| [(-a + bbar) * y[0], -2.0 * a * y[1] + 2.0 * bbar * y[0] * y[0] + s * s];
    let steps = ((t / 1e-4).ceil() as usize).max(1);
    let dt = t / steps as f64;
    let mut y = [m1, m2];
    for _ in 0..steps {
        let k1 = f(y);
        let k2 = f([y[0] + 0.5 * dt * k1[0], y[1] + 0.5 * dt * k1[1]]);
        let k3 = f([y[0] + 0.5 * dt * k2[0], y[1] + 0.5 * dt * k2[1]]);
        let k4 = f([y[0] + dt * k3[0], y[1] + dt * k3[1]]);
        for i in 0..2 {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    (y[0], y[1])
}

#[test]
fn step_examples() {
    let state = Ensemble::at_rest(vec![0.7, -0.2], 1);
    let mu = state.measure();
    let (next, dk) = step(&zero_op(1), &ConstantDrift::zero(1), &state, &mu, 0.1, &[0.3, -1.0]).unwrap();
    assert_eq!(next.x, state.x);
    assert_eq!(dk, vec![0.0, 0.0]);

    let state = Ensemble::at_rest(vec![0.05], 1);
    let (next, dk) = step(&half_line(), &ConstantDrift::new(vec![-1.0]), &state, &state.measure(), 0.1, &[0.0]).unwrap();
    assert_eq!(next.x, vec![0.0]);
    assert!((dk[0] + 0.05).abs() < 1e-15);
    assert!((next.variation[0] - 0.05).abs() < 1e-15);

    let state = Ensemble::at_rest(vec![1.0], 1);
    let ou = MeanFieldLinear::new(1, 1.0, 0.0, 0.0);
    let (next, dk) = step(&zero_op(1), &ou, &state, &state.measure(), 0.1, &[0.0]).unwrap();
    assert!((next.x[0] - 0.9).abs() < 1e-15);
    assert_eq!(dk, vec![0.0]);
}

#[test]
fn step_reports_blowups() {
    let nan = FnCoefficients::new(1, 1, |_, _, out| out[0] = f64::NAN, |_, _, out| out[0] = 0.0);
    let state = Ensemble::at_rest(vec![1.0, 2.0], 1);
    let err = step(&zero_op(1), &nan, &state, &state.measure(), 0.1, &[0.0, 0.0]).unwrap_err();
    assert_eq!(err, SolverError::CoefficientBlowup { step: 0, particle: 0 });

    let explosive = MeanFieldLinear::new(1, -1e3, 0.0, 0.0);
    let config = SchemeConfig::new(0.1, 2, 10.0, 0, point(&[1.0]));
    let err = simulate(&zero_op(1), &explosive, &config).unwrap_err();
    assert!(matches!(err, SolverError::StateBlowup { particle: 0, .. }), "{err:?}");
}

#[test]
fn config_validation() {
    let base = SchemeConfig::new(0.1, 4, 1.0, 0, point(&[0.0]));
    assert_eq!(base.steps().unwrap(), 10);
    assert_eq!(SchemeConfig::new(0.1, 1, 2.0, 0, point(&[0.0])).steps().unwrap(), 20);
    assert!(matches!(base.with_step(0.0).steps(), Err(SolverError::InvalidConfig { key: "scheme.h", .. })));
    assert!(matches!(base.with_step(0.3).steps(), Err(SolverError::InvalidConfig { key: "scheme.horizon", .. })));
    assert!(matches!(base.with_horizon(0.05).steps(), Err(SolverError::InvalidConfig { key: "scheme.horizon", .. })));
    let mut empty = base.clone();
    empty.particles = 0;
    assert!(matches!(empty.steps(), Err(SolverError::InvalidConfig { key: "scheme.particles", .. })));
    let outside = SchemeConfig::new(0.1, 1, 1.0, 0, point(&[-1.0]));
    assert!(matches!(
        simulate(&half_line(), &ConstantDrift::zero(1), &outside),
        Err(SolverError::InvalidConfig { key: "initial.point", .. })
    ));
}

fn reflected_drift_error(h: f64) -> (f64, f64) {
    let config = SchemeConfig::new(h, 1, 2.0, 7, point(&[1.0]));
    let traj = simulate(&half_line(), &ConstantDrift::new(vec![-1.0]), &config).unwrap();
    let mut x_err = 0.0_f64;
    let mut k_err = 0.0_f64;
    for (k, t) in traj.grid().iter().enumerate() {
        x_err = x_err.max((traj.positions(k)[0] - (1.0 - t).max(0.0)).abs());
        k_err = k_err.max((traj.constraint(k)[0] + (t - 1.0).max(0.0)).abs());
    }
    (x_err, k_err)
}

#[test]
fn reflected_drift_matches_closed_form() {
    for h in [0.1, 0.05, 0.025, 0.0125] {
        let (x_err, k_err) = reflected_drift_error(h);
        assert!(x_err <= 2.0 * h && k_err <= 2.0 * h, "h={h}: {x_err} {k_err}");
    }
}

#[test]
fn reflected_drift_with_misaligned_start_converges() {
    // x₀ = 0.93 is not on any of the grids, so the contact step carries an O(h) error.
    let hs = [0.1, 0.05, 0.025, 0.0125];
    let errors: Vec<f64> = hs
        .iter()
        .map(|&h| {
            let config = SchemeConfig::new(h, 1, 2.0, 0, point(&[0.93]));
            let traj = simulate(&half_line(), &ConstantDrift::new(vec![-1.0]), &config).unwrap();
            traj.grid()
                .iter()
                .enumerate()
                .map(|(k, t)| (traj.constraint(k)[0] + (t - 0.93_f64).max(0.0)).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    for w in errors.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{errors:?}");
    }
    for (e, h) in errors.iter().zip(hs) {
        assert!(*e <= 2.0 * h);
    }
}

#[test]
fn zero_dynamics_keep_the_flow_constant() {
    let config = SchemeConfig::new(
        0.1,
        16,
        1.0,
        3,
        InitialCondition::Gaussian {
            mean: vec![0.0, 1.0],
            std: vec![1.0, 0.5],
        },
    );
    let traj = simulate(&zero_op(2), &ConstantDrift::zero(2), &config).unwrap();
    for k in 0..traj.grid().len() {
        assert_eq!(traj.positions(k), traj.positions(0));
        assert!(traj.constraint(k).iter().all(|c| *c == 0.0));
    }
    let report = moment_monitor(&traj, &[0.0, 0.0]).unwrap();
    assert_eq!(report.sup_second_moment, traj.flow().at(0).second_moment_norm());
}

#[test]
fn mean_field_moments_follow_the_ode() {
    let (a, bbar, s) = (1.0, 0.5, 0.3);
    let config = SchemeConfig::new(0.01, 2000, 1.0, 11, point(&[1.0]));
    let traj = simulate(&zero_op(1), &MeanFieldLinear::new(1, a, bbar, s), &config).unwrap();
    for (k, t) in traj.grid().iter().enumerate().step_by(10) {
        let (m1, m2) = moment_oracle(a, bbar, s, 1.0, 1.0, *t);
        let mu = traj.flow().at(k);
        let var = mu.second_moment_norm() - mu.mean()[0].powi(2);
        let se1 = (var / 2000.0).sqrt();
        assert!((mu.mean()[0] - m1).abs() <= 4.0 * se1 + 5.0 * config.h, "t={t}");
        assert!((mu.second_moment_norm() - m2).abs() <= 4.0 * 2.0 * se1 + 5.0 * config.h, "t={t}");
    }
}

#[test]
fn frozen_flow_at_the_fixed_point_is_bit_identical() {
    let coeffs = MeanFieldLinear::new(1, 1.0, 0.5, 0.3);
    let config = SchemeConfig::new(
        0.02,
        64,
        1.0,
        5,
        InitialCondition::Gaussian {
            mean: vec![1.0],
            std: vec![0.2],
        },
    );
    let noise = Arc::new(noise_for(&coeffs, &config).unwrap());
    let own = simulate_with_noise(&zero_op(1), &coeffs, &config, noise.clone()).unwrap();
    let frozen = solve_frozen_flow(&zero_op(1), &coeffs, own.flow(), &config, noise).unwrap();
    assert_eq!(own.flow(), frozen.flow());
    assert_eq!(simulate(&zero_op(1), &coeffs, &config).unwrap().flow(), own.flow());
}

#[test]
fn frozen_flow_examples() {
    let config = SchemeConfig::new(0.01, 3, 1.0, 0, point(&[0.5]));
    let grid = config.grid().unwrap();
    let follow_mean = MeanFieldLinear::new(1, 0.0, 1.0, 0.0);
    let c = 2.0;
    let frozen = MeasureFlow::constant(grid.clone(), dirac(c)).unwrap();
    let noise = Arc::new(noise_for(&follow_mean, &config).unwrap());
    let traj = solve_frozen_flow(&zero_op(1), &follow_mean, &frozen, &config, noise.clone()).unwrap();
    for (k, t) in grid.iter().enumerate() {
        assert!((traj.positions(k)[0] - (0.5 + c * t)).abs() < 1e-12);
    }

    let relax = MeanFieldLinear::new(1, 1.0, 1.0, 0.0);
    let frozen = MeasureFlow::constant(grid.clone(), dirac(0.0)).unwrap();
    let traj = solve_frozen_flow(&zero_op(1), &relax, &frozen, &config, noise.clone()).unwrap();
    for (k, t) in grid.iter().enumerate() {
        assert!((traj.positions(k)[0] - 0.5 * (-t).exp()).abs() < config.h);
    }

    let other = MeasureFlow::constant(SchemeConfig::new(0.02, 3, 1.0, 0, point(&[0.5])).grid().unwrap(), dirac(0.0)).unwrap();
    assert!(matches!(
        solve_frozen_flow(&zero_op(1), &relax, &other, &config, noise),
        Err(SolverError::GridMismatch)
    ));
}

#[test]
fn picard_on_measure_free_coefficients_converges_at_once() {
    let config = SchemeConfig::new(0.05, 32, 1.0, 2, point(&[1.0]));
    let out = picard(&zero_op(1), &MeanFieldLinear::new(1, 1.0, 0.0, 0.4), &config, 1e-10, 5).unwrap();
    assert_eq!(out.iterations, 1);
    assert_eq!(out.deltas, vec![0.0]);
    assert!(out.converged);

    let coupled = MeanFieldLinear::new(1, 1.0, 0.5, 0.3);
    let out = picard(&zero_op(1), &coupled, &config, 1e6, 5).unwrap();
    assert_eq!(out.iterations, 1);
    assert!(out.converged);

    let err = picard(&zero_op(1), &coupled, &config, 1e-300, 2).unwrap_err();
    assert!(matches!(err, SolverError::NotConverged { ref deltas } if deltas.len() == 2));
}

#[test]
fn picard_contracts_on_a_short_window() {
    let coeffs = MeanFieldLinear::new(1, 1.0, 1.0, 0.3);
    let config = SchemeConfig::new(
        0.01,
        200,
        0.5,
        9,
        InitialCondition::Gaussian {
            mean: vec![1.0],
            std: vec![0.5],
        },
    );
    let out = picard(&zero_op(1), &coeffs, &config, 1e-10, 30).unwrap();
    let ratios: Vec<f64> = out.deltas.windows(2).filter(|w| w[0] > 1e-13).map(|w| w[1] / w[0]).collect();
    assert!(!ratios.is_empty());
    assert!(ratios.iter().all(|r| *r <= 0.5), "{:?}", out.deltas);

    // The fixed point is (up to tolerance) the self-consistent flow of the same noise.
    let own = simulate(&zero_op(1), &coeffs, &config).unwrap();
    assert!(flow_distance(own.flow(), &out.flow).unwrap() < 1e-8);
}

fn shifted(flow: &MeasureFlow, by: f64) -> MeasureFlow {
    let measures = flow
        .measures()
        .iter()
        .map(|m| EmpiricalMeasure::new(m.points().iter().map(|x| x + by).collect(), m.dim()).unwrap())
        .collect();
    MeasureFlow::new(flow.grid().to_vec(), measures).unwrap()
}

#[test]
fn contraction_ratio_examples() {
    let config = SchemeConfig::new(0.01, 100, 0.05, 4, point(&[1.0]));
    let independent = MeanFieldLinear::new(1, 1.0, 0.0, 0.3);
    let base = simulate(&zero_op(1), &independent, &config).unwrap().into_flow();
    let noise = Arc::new(noise_for(&independent, &config).unwrap());
    let ratio = contraction_ratio(&zero_op(1), &independent, &config, &base, &shifted(&base, 0.3), noise.clone()).unwrap();
    assert_eq!(ratio, 0.0);
    assert_eq!(
        contraction_ratio(&zero_op(1), &independent, &config, &base, &base, noise),
        Err(SolverError::ZeroDenominator)
    );

    let unit = MeanFieldLinear::new(1, 1.0, 1.0, 0.3);
    let base = simulate(&zero_op(1), &unit, &config).unwrap().into_flow();
    let noise = Arc::new(noise_for(&unit, &config).unwrap());
    let ratio = contraction_ratio(&zero_op(1), &unit, &config, &base, &shifted(&base, 0.3), noise).unwrap();
    assert!(ratio < 0.5, "{ratio}");

    let long = config.with_horizon(10.0);
    let base = simulate(&zero_op(1), &unit, &long).unwrap().into_flow();
    let noise = Arc::new(noise_for(&unit, &long).unwrap());
    let ratio = contraction_ratio(&zero_op(1), &unit, &long, &base, &shifted(&base, 0.3), noise).unwrap();
    assert!(ratio > 0.5, "long windows are not contractive here: {ratio}");
}

#[test]
fn moment_monitor_examples() {
    let config = SchemeConfig::new(0.1, 4, 1.0, 0, point(&[0.6, -0.8]));
    let traj = simulate(&zero_op(2), &ConstantDrift::zero(2), &config).unwrap();
    let report = moment_monitor(&traj, &[0.0, 0.0]).unwrap();
    assert_eq!(report.sup_second_moment, 0.6 * 0.6 + 0.8 * 0.8);

    let config = SchemeConfig::new(0.05, 1, 2.0, 0, point(&[1.0]));
    let traj = simulate(&half_line(), &ConstantDrift::new(vec![-1.0]), &config).unwrap();
    let report = moment_monitor(&traj, &[1.0]).unwrap();
    assert_eq!(report.sup_second_moment, 1.0);
    assert_eq!(report.initial_offset_moment, 0.0);
    assert!(report.running_sup_second_moment.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn trajectories_respect_constraint_invariants() {
    let op = unit_ball(2);
    let coeffs = MeanFieldLinear::new(2, 0.5, 0.3, 0.8);
    let config = SchemeConfig::new(
        0.02,
        40,
        1.0,
        13,
        InitialCondition::Uniform {
            lo: vec![-1.0, -1.0],
            hi: vec![1.0, 1.0],
        },
    );
    let traj = simulate(&op, &coeffs, &config).unwrap();
    assert!(traj.constraint(0).iter().all(|c| *c == 0.0));
    let mut contact = 0;
    for k in 0..traj.steps() {
        let x_next = traj.positions(k + 1);
        let dk = traj.increment(k);
        for i in 0..traj.particles() {
            let x = &x_next[2 * i..2 * i + 2];
            assert!(crate::operators::norm(x) <= 1.0 + 1e-12);
            let y: Vec<f64> = x.iter().zip(&dk[2 * i..2 * i + 2]).map(|(a, b)| a + b).collect();
            let back = resolve(&op, &y, config.h).unwrap();
            assert!(crate::operators::distance(&back, x) <= 1e-10);
            assert!(traj.variation(k + 1)[i] >= traj.variation(k)[i]);
            if dk[2 * i] != 0.0 || dk[2 * i + 1] != 0.0 {
                contact += 1;
            }
        }
    }
    assert!(contact > 0, "scenario should touch the boundary");

    let seeds: Vec<Vec<f64>> = (0..6).map(|j| vec![1.5 * (j as f64).cos(), 1.5 * (j as f64).sin() * 0.7]).collect();
    let probes = graph_probes(&op, &seeds, 0.5).unwrap();
    for i in 0..traj.particles() {
        let report = check_pairing_inequality(&op, &traj.particle_path(i), &traj.constraint_path(i), traj.grid(), &probes, None).unwrap();
        assert!(report.pass, "particle {i}: {report:?}");
    }
}

#[test]
fn reruns_are_bit_identical() {
    let coeffs = MeanFieldLinear::new(1, 1.0, 0.5, 0.3);
    let config = SchemeConfig::new(0.05, 50, 1.0, 21, point(&[1.0]));
    let a = simulate(&half_line(), &coeffs, &config).unwrap();
    let b = simulate(&half_line(), &coeffs, &config).unwrap();
    assert_eq!(a.flow(), b.flow());
    for k in 0..a.grid().len() {
        assert_eq!(a.constraint(k), b.constraint(k));
    }
}

#[test]
fn permuting_noise_permutes_particles() {
    let coeffs = MeanFieldLinear::new(1, 1.0, 0.5, 0.3);
    let config = SchemeConfig::new(0.05, 12, 1.0, 8, point(&[1.0]));
    let noise = noise_for(&coeffs, &config).unwrap();
    let perm: Vec<usize> = (0..12).map(|i| (i * 5) % 12).collect();
    let a = simulate_with_noise(&half_line(), &coeffs, &config, Arc::new(noise.clone())).unwrap();
    let b = simulate_with_noise(&half_line(), &coeffs, &config, Arc::new(noise.permuted(&perm))).unwrap();
    for k in 0..a.grid().len() {
        for (i, &src) in perm.iter().enumerate() {
            assert!((b.positions(k)[i] - a.positions(k)[src]).abs() < 1e-12);
        }
        assert!(rho_upper(a.flow().at(k), b.flow().at(k)).unwrap() < 1e-12);
    }
}
