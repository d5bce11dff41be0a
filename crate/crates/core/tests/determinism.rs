//! Every estimator must give bit-identical output for any worker count.

use bcp_core::closedform::piecewise_linear_bcp_1d;
use bcp_core::domain::{estimate_gamma, make_domain, DomainFamily, DomainSpec, TimeSpaceDomain};
use bcp_core::mc::{
    bridge_conditional_survival, estimate_gaps, estimate_survival, hitting_time_histogram, radial_domination_rate,
    window_exit_probability, with_threads, SimConfig,
};
use bcp_core::path::{PointPath, Polyline};

fn shrinking_ball() -> TimeSpaceDomain {
    make_domain(&DomainSpec {
        horizon: 1.0,
        start: None,
        family: DomainFamily::BallTube {
            center: PointPath::stationary(1.0, vec![0.0, 0.0]).unwrap(),
            radius: Polyline::line(1.0, 1.0, -0.25).unwrap(),
        },
    })
    .unwrap()
}

/// Runs `f` with 1, 4 and 8 workers and checks the results are identical.
fn same_on_all_pools<R: PartialEq + std::fmt::Debug + Send>(f: impl Fn() -> R + Sync) {
    let one = with_threads(1, &f).unwrap();
    for n in [4, 8] {
        assert_eq!(with_threads(n, &f).unwrap(), one, "{n} threads");
    }
}

fn cfg() -> SimConfig {
    SimConfig { n_paths: 5000, n_steps: 64, seed: 77, ..Default::default() }
}

#[test]
fn survival_and_gaps() {
    let d = shrinking_ball();
    same_on_all_pools(|| estimate_survival(&d, &cfg()).unwrap());
    same_on_all_pools(|| estimate_gaps(&d, &[0.005, 0.01, 0.02], &cfg()).unwrap());
}

#[test]
fn histogram() {
    let d = shrinking_ball();
    same_on_all_pools(|| hitting_time_histogram(&d, 20, &cfg()).unwrap());
}

#[test]
fn conditional_estimators() {
    let d = shrinking_ball();
    same_on_all_pools(|| bridge_conditional_survival(&d, 0.5, &[0.3, 0.1], &cfg()).unwrap());
    same_on_all_pools(|| window_exit_probability(&d, 0.2, &[0.5, 0.0], 0.1, &cfg()).unwrap());
    same_on_all_pools(|| radial_domination_rate(&[1.0, 0.0], &[1.2, 0.3], 1.0, 0.25, 1.0, &cfg()).unwrap());
}

#[test]
fn band_and_gamma() {
    let lo = Polyline::constant(1.0, -1.0).unwrap();
    let hi = Polyline::new(vec![0.0, 0.5, 1.0], vec![1.0, 0.8, 1.2]).unwrap();
    same_on_all_pools(|| piecewise_linear_bcp_1d(Some(&lo), Some(&hi), 5000, 3).unwrap());
    let d = shrinking_ball();
    let ts = [0.25, 0.5, 1.0];
    let vs = [0.01, 0.02, 0.05];
    same_on_all_pools(|| estimate_gamma(&d, &ts, &vs, 20_000, 8).unwrap());
}
