//! Draw a random expander and measure how well small column sets expand.
//!
//!     cargo run --example expansion

use expander_wl1::graph::{ExpansionMode, SparseBinaryMatrix};

fn main() -> expander_wl1::Result<()> {
    let a = SparseBinaryMatrix::generate(14, 40, 4, 7)?;
    println!("A: n = {}, N = {}, d = {}", a.n(), a.big_n(), a.d());

    for k in 1..=4 {
        let r = a.expansion_coefficient(k, ExpansionMode::exhaustive())?;
        println!(
            "eps_{k} = {:.4}  worst set {:?}  ({} subsets)",
            r.epsilon, r.worst_set, r.examined
        );
    }

    // too many subsets for enumeration; sample instead (lower bound)
    let big = SparseBinaryMatrix::generate(1024, 256, 12, 7)?;
    let mc = big.expansion_coefficient(6, ExpansionMode::MonteCarlo { trials: 20_000, seed: 1 })?;
    println!("N = 1024: eps_6 >= {:.4} from {} random sets", mc.epsilon, mc.examined);

    let order: Vec<usize> = (0..a.big_n()).collect();
    let e = a.collision_set(&order)?;
    println!("collisions over all columns: {} (dN - |Γ([N])|)", e.len());
    Ok(())
}
