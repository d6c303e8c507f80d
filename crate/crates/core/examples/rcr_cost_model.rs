//! Relative cost reduction of basis reuse for a few rebuild counts, next to
//! the raw local-solve tallies behind it.
//!
//! cargo run --example rcr_cost_model -- [N_hat] [N] [T_e]

use mrcmflow::simulation::CostModel;

fn main() -> mrcmflow::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let n_hat = args.first().copied().unwrap_or(96);
    let n = args.get(1).copied().unwrap_or(16);
    let t_e = args.get(2).copied().unwrap_or(3500);

    println!("N_hat = {n_hat}, N = {n}, T_e = {t_e}");
    println!("{:>6} {:>10} {:>14} {:>14}", "T_m", "RCR %", "every step", "with reuse");
    for t_m in [1, 3, 10, 50, 100, t_e / 2, t_e] {
        let model = CostModel::new(n_hat, n, t_e, t_m)?;
        let (full, reuse) = model.cost_estimates(1.0);
        println!("{t_m:>6} {:>10.2} {full:>14} {reuse:>14}", model.rcr());
    }
    Ok(())
}
