//! Prints per-component sup errors of the first-order composition over a
//! halving sequence of ε, to inspect the convergence rates.

use stackelberg_cheap_control::asymptotics::Expansion1;
use stackelberg_cheap_control::exact::{assemble_bvp, solve_linear_bvp, SolveOptions};
use stackelberg_cheap_control::games::supply_chain;
use stackelberg_cheap_control::model::prepare;

fn main() {
    let tg = prepare(&supply_chain(), None).unwrap();
    let exp = Expansion1::build(&tg).unwrap();
    let names = ["z1", "z2", "lu1", "lu2", "lv1", "lv2", "mu1", "mu2"];
    let mut prev: Option<Vec<f64>> = None;
    for eps in [0.2, 0.1, 0.05, 0.025, 0.0125] {
        let bvp = assemble_bvp(&tg, eps).unwrap();
        let sol = solve_linear_bvp(&bvp, &SolveOptions::default()).unwrap();
        let off = sol.layout.offsets();
        let sizes = sol.layout.sizes();
        let states = sol.eval_states(&bvp, &sol.shooting.mesh);
        let mut errs = vec![0.0f64; 8];
        for (&t, y) in sol.shooting.mesh.iter().zip(&states) {
            let approx = exp.eval_scaled(t, eps, 1).unwrap();
            for c in 0..8 {
                errs[c] = errs[c].max((y.rows(off[c], sizes[c]) - approx.rows(off[c], sizes[c])).amax());
            }
        }
        print!("eps={eps:7}");
        for (c, name) in names.iter().enumerate() {
            if let Some(p) = &prev {
                print!(" {name}={:.2e}(r{:.2})", errs[c], p[c] / errs[c]);
            } else {
                print!(" {name}={:.2e}", errs[c]);
            }
        }
        println!();
        prev = Some(errs);
    }
}
