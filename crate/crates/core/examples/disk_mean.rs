//! Mean of the analytic disk problem by multilevel QMC, compared with the
//! closed form. `cargo run --release --example disk_mean`

use mlquad::coeff::{Functional, ProblemSpec};
use mlquad::fem::ScalarField;
use mlquad::mlq::{ml_estimate_nested_q, measure_error, Hierarchy, MlConfig, NormKind, Representation};
use mlquad::quad::Family;

fn main() -> mlquad::Result<()> {
    let problem = ProblemSpec::analytic_disk();
    let hierarchy = Hierarchy::new(&problem, 4, 6, 1)?;
    let exact = problem.exact_statistic(Functional::Identity).expect("closed form");
    let reference = ScalarField::from_fn(hierarchy.reference().clone(), exact);
    for j in 0..=4 {
        let cfg = MlConfig::new(j, Family::QmcHalton, Representation::NestedQ);
        let report = ml_estimate_nested_q(&hierarchy, &cfg, Functional::Identity)?;
        let err = measure_error(&report.statistics[0], &reference, NormKind::H1)?;
        println!(
            "j = {j}: {:6} solves, {:9} cost units, H1 error {err:.3e}",
            report.total_solves(),
            report.total_cost_units()
        );
    }
    Ok(())
}
