use fracfill::filling::FillingParams;
use fracfill::fractional::FractionalProblem;
use fracfill::fixtures;

fn main() {
    // codimension over the common radius set k = 1..=5
    for depth in [6usize, 7, 8] {
        let space = fixtures::cycle(32).unwrap();
        let params = FillingParams::new(2.0, 1.5, depth, 2.0, 0.5).unwrap();
        let prob = FractionalProblem::new(space, params).unwrap();
        let rep = prob.filling().codimension_check_up_to(prob.space(), 5);
        println!(
            "codim common-radii depth {depth}: min {:.9} max {:.9} spread {:.9}",
            rep.ratio_min, rep.ratio_max, rep.spread()
        );
    }
}
