//! Closed-form values of the built-in examples through the public API.

use maxslope_core::banach_gs::{banach_step, chain_rule_validation, interpolant_trace, BanachSystem, Selection};
use maxslope_core::convex_kernel::ScalarDensity;
use maxslope_core::metric_gs::{metric_step, Distance, MetricSystem};
use maxslope_core::mms_driver::{edb_report, interpolant_trace as mms_interpolant, run_mms};
use maxslope_core::models::{double_well_energy, kinked_quadratic_potential, DissipationPotential, EnergyFunctional};
use maxslope_core::report::{Classification, GapReport};
use maxslope_core::sets::SubdifferentialSet;
use maxslope_core::solver::{constrained_dual_minimize, grid_oracle, FnObjective, SolveConfig, Window};
use maxslope_core::system::GradientSystem;

fn quadratic_banach() -> GradientSystem {
    GradientSystem::Banach(
        BanachSystem::new(EnergyFunctional::half_square(1), DissipationPotential::quadratic(1)).unwrap(),
    )
}

fn positive_part_metric() -> GradientSystem {
    GradientSystem::Metric(
        MetricSystem::new(
            EnergyFunctional::PositivePart { slope: 1.0 },
            Distance::Euclidean,
            ScalarDensity::Quadratic { scale: 1.0 },
        )
        .unwrap(),
    )
}

#[test]
fn truncated_distance_step_below_the_crossover() {
    let sys = MetricSystem::new(
        EnergyFunctional::half_square(1),
        Distance::Truncated { radius: 1.0 },
        ScalarDensity::Quadratic { scale: 1.0 },
    )
    .unwrap();
    let step = metric_step(&sys, &[2.0], 0.25).unwrap();
    assert_eq!(step.minimizers.len(), 1);
    assert!((step.representative()[0] - 1.6).abs() < 1e-6);
    assert!((step.phi - 1.6).abs() < 1e-9);
    let far = metric_step(&sys, &[2.0], 2.0).unwrap();
    assert!(far.representative()[0].abs() < 1e-6);
}

#[test]
fn double_well_reports_both_minimizers_at_the_jump() {
    let sys = BanachSystem::new(double_well_energy(), DissipationPotential::quadratic(1)).unwrap();
    let step = banach_step(&sys, &[2.0], 1.0).unwrap();
    assert_eq!(step.minimizers.len(), 2);
    assert!((step.minimizers[0][0] - 0.5).abs() < 1e-6);
    assert!((step.minimizers[1][0] - 1.5).abs() < 1e-6);
    assert!(step.d_minus < step.d_plus);

    let mut sys = sys;
    sys.quadrature = sys.quadrature.with_uniform_nodes(256);
    let trace = interpolant_trace(&sys, &[2.0], 2.0, &[2.0], Selection::Optimal).unwrap();
    let report = chain_rule_validation(&sys, &trace).unwrap();
    assert_eq!(report.jumps.len(), 1);
    assert!((report.jumps[0].tau - 1.0).abs() < 1e-6);
    assert!(report.jumps[0].value_mismatch < 1e-6);
}

#[test]
fn kinked_step_on_the_grid_oracle() {
    let pot = kinked_quadratic_potential();
    let sigma = 3.0;
    let obj = FnObjective::new(1, |u: &[f64]| sigma * pot.value(&[(u[0] - 6.0) / sigma]) + 0.5 * u[0] * u[0]);
    let window = Window::new(vec![-10.0], vec![10.0]).unwrap();
    let min = grid_oracle(&obj, &window, 1e-3, &SolveConfig::default()).unwrap();
    assert!((min.representative()[0] - 3.0).abs() < 1e-3);
}

#[test]
fn dual_minimization_on_intervals() {
    let cfg = SolveConfig::default();
    let half_square = |x: &[f64]| 0.5 * x[0] * x[0];
    let (xi, v) = constrained_dual_minimize(&half_square, &SubdifferentialSet::singleton(vec![0.5]), &cfg).unwrap();
    assert_eq!((xi[0], v), (0.5, 0.125));
    let unit = SubdifferentialSet::interval_box(vec![0.0], vec![1.0]);
    let (xi, v) = constrained_dual_minimize(&half_square, &unit, &cfg).unwrap();
    assert_eq!((xi[0], v), (0.0, 0.0));
}

#[test]
fn backward_euler_nodes_and_cell_interpolant() {
    let sys = quadratic_banach();
    let traj = run_mms(&sys, &[1.0], 0.5, 2.0).unwrap();
    for (k, u) in traj.nodes.iter().enumerate() {
        assert!((u[0] - (1.0f64 / 1.5).powi(k as i32)).abs() < 1e-7);
    }
    let inter = mms_interpolant(&sys, &traj, 32).unwrap();
    assert!(inter.endpoint_mismatch < 1e-7);
    for (t, u) in inter.times.iter().zip(&inter.states) {
        let k = ((t / 0.5).ceil() as usize).max(1);
        let sigma = t - 0.5 * (k - 1) as f64;
        let expected = traj.nodes[k - 1][0] / (1.0 + sigma);
        assert!((u[0] - expected).abs() < 1e-7, "t = {t}");
    }
}

#[test]
fn metric_scheme_runs_down_to_the_kink() {
    let sys = positive_part_metric();
    let traj = run_mms(&sys, &[1.0], 0.25, 2.0).unwrap();
    for (k, u) in traj.nodes.iter().enumerate() {
        assert!((u[0] - (1.0 - 0.25 * k as f64).max(0.0)).abs() < 1e-7);
    }
    assert!(traj.energies.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn zero_energy_keeps_the_state() {
    let sys = GradientSystem::Banach(
        BanachSystem::new(EnergyFunctional::Zero { dim: 2 }, DissipationPotential::quadratic(2)).unwrap(),
    );
    let traj = run_mms(&sys, &[0.3, -0.7], 0.5, 1.0).unwrap();
    assert!(traj.nodes.iter().all(|u| u == &vec![0.3, -0.7]));
    let edb = edb_report(&sys, &traj, 2).unwrap();
    assert_eq!(edb.total_residual, 0.0);
    assert!(edb.cell_gaps.iter().all(|g| *g == 0.0));
}

#[test]
fn sweep_csv_schema() {
    let mut sys = quadratic_banach();
    sys.quadrature_mut().uniform_nodes = 128;
    let report = sys.gap_report(&[1.0], &[0.5, 1.0]).unwrap();
    let csv = report.to_csv();
    let header = csv.lines().next().unwrap();
    assert_eq!(
        header,
        "sigma,u_0,phi,energy,dissipation_term,r_slope,conditioned_slope,integral_term,gap,classification,quad_error"
    );
    assert_eq!(header, GapReport::csv_header(1));
    assert_eq!(csv.lines().count(), 3);
    assert!(report.all(Classification::Identity));
}

#[test]
fn metric_gap_beyond_the_kink() {
    let mut sys = positive_part_metric();
    sys.quadrature_mut().uniform_nodes = 256;
    let report = sys.gap_report(&[1.0], &[0.5, 2.0]).unwrap();
    assert_eq!(report.entries[0].classification, Classification::Identity);
    let e = &report.entries[1];
    assert_eq!(e.classification, Classification::StrictEstimate);
    assert!((e.gap - 0.25).abs() < 1e-4);
}
