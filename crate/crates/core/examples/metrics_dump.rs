//! Prints the accuracy metrics for the supply-chain game over an ε grid.

use stackelberg_cheap_control::asymptotics::Expansion1;
use stackelberg_cheap_control::evaluate::metrics_for_eps;
use stackelberg_cheap_control::exact::SolveOptions;
use stackelberg_cheap_control::games::supply_chain;
use stackelberg_cheap_control::model::prepare;

fn main() {
    let g = supply_chain();
    let tg = prepare(&g, None).unwrap();
    let exp = Expansion1::build(&tg).unwrap();
    let opts = SolveOptions::default();
    for eps in [0.2, 0.1, 0.05, 0.025, 0.01] {
        let r = metrics_for_eps(&tg, &exp, eps, &opts).unwrap();
        println!(
            "eps={:5} Ju*={:.8} Jv*={:.8} dJhat_u={:.3e} dJhat_v={:.3e} dJtil_u={:.3e} dJtil_v={:.3e} rel%: {:.4} {:.4} {:.4} {:.4}",
            eps, r.j_u_star, r.j_v_star, r.dj_hat_u, r.dj_hat_v, r.dj_tilde_u, r.dj_tilde_v,
            r.rel_hat_u, r.rel_hat_v, r.rel_tilde_u, r.rel_tilde_v
        );
    }
}
