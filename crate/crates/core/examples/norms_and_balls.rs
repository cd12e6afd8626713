//! Norm evaluation, projection onto ball neighborhoods and the distance
//! bounds between a customer and a ball.

use ompn::geometry::{distance_bounds, norm_eval, project_to_neighborhood, Neighborhood, NormSpec};

fn main() -> ompn::Result<()> {
    let v = [3.0, -4.0];
    for norm in [
        NormSpec::L1,
        NormSpec::L2,
        NormSpec::rational(3, 1)?,
        NormSpec::rational(3, 2)?,
        NormSpec::LINF,
    ] {
        println!("norm {norm:>4} of {v:?} = {:.4}", norm_eval(norm, &v));
    }

    let far = [6.0, 8.0];
    for norm in [NormSpec::L1, NormSpec::L2, NormSpec::LINF] {
        let ball = Neighborhood::new(vec![0.0, 0.0], 5.0, norm);
        let p = project_to_neighborhood(&far, &ball)?;
        println!(
            "projection of {far:?} onto the radius-5 {norm} ball: ({:.4}, {:.4})",
            p[0], p[1]
        );
    }

    let customer = [10.0, 0.0];
    let ball = Neighborhood::new(vec![0.0, 0.0], 1.0, NormSpec::LINF);
    for nu in [NormSpec::L1, NormSpec::L2, NormSpec::LINF] {
        let (lo, hi) = distance_bounds(&customer, &ball, nu);
        println!("customer {customer:?} to the unit box, measured in {nu}: [{lo:.4}, {hi:.4}]");
    }
    Ok(())
}
