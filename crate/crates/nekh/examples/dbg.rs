use nekh::majorant::*;
use rand::{Rng, SeedableRng};
fn main() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for it in 0..200 {
        let dims = rng.gen_range(1..=3usize);
        let b: f64 = rng.gen_range(0.5..2.0);
        let cap = 8;
        let mut f = MajorantSeries::zero(dims, cap);
        for _ in 0..rng.gen_range(1..6) {
            let beta: Vec<u16> = (0..dims).map(|_| rng.gen_range(0..=2u16)).collect();
            f.set(beta, rng.gen_range(-1.0..1.0)).unwrap();
        }
        let c: f64 = f.coeffs.iter().map(|(beta, v)| v.abs() * b.powi(beta.iter().map(|&x| x as i32).sum())).sum();
        let g = bound_to_majorant(c, b, dims, cap).unwrap();
        if !majorizes(&g, &f) {
            println!("iter {it}: dims={dims} b={b} c={c}");
            for (beta, v) in &f.coeffs {
                println!("  f[{beta:?}] = {v},  g = {}", g.coeff(beta));
            }
            break;
        }
    }
    println!("done");
}
