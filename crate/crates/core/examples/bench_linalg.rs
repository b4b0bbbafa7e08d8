use nalgebra::DMatrix;
use std::time::Instant;

fn main() {
    let p = 1488usize;
    let n = 3000usize;
    let mut seed = 12345u64;
    let mut rnd = || {
        seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((seed >> 33) as f64) / (u32::MAX as f64) - 0.5
    };
    let b = DMatrix::from_fn(n, p, |_, _| rnd());
    let t = Instant::now();
    let g = b.transpose() * &b;
    println!("gemm BtB ({n}x{p}): {:?}", t.elapsed());

    let spd = &g + DMatrix::identity(p, p) * (n as f64);
    let t = Instant::now();
    let chol = spd.clone().cholesky().unwrap();
    println!("cholesky({p}): {:?}", t.elapsed());

    let t = Instant::now();
    let x = chol.solve(&b.transpose());
    println!("chol solve {p}x{n} rhs: {:?}  ({})", t.elapsed(), x[(0, 0)]);

    let t = Instant::now();
    let lu = spd.clone().lu();
    let _y = lu.solve(&DMatrix::identity(p, 3)).unwrap();
    println!("lu({p})+solve3: {:?}", t.elapsed());

    let sym = (&spd + spd.transpose()) * 0.5;
    let t = Instant::now();
    let eig = sym.symmetric_eigen();
    println!("symmetric_eigen({p}): {:?}  (ev0={:.3e})", t.elapsed(), eig.eigenvalues[0]);
}
