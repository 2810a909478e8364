use ganspect::nn::{Tape, Tensor};
use ganspect::rng::Rng;
use std::time::Instant;

fn t(shape: &[usize], rng: &mut Rng) -> Tensor {
    let n: usize = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.normal()).collect()).unwrap()
}

#[test]
#[ignore]
fn matmul_throughput() {
    let mut rng = Rng::new(1);
    // The dominant training shape: [32x128] x [128x512]
    let a = t(&[32, 128], &mut rng);
    let b = t(&[128, 512], &mut rng);
    let reps = 2000;
    let t0 = Instant::now();
    let mut sink = 0.0;
    for _ in 0..reps {
        let mut tape = Tape::new();
        let av = tape.leaf(a.clone());
        let bv = tape.leaf(b.clone());
        let c = tape.matmul(av, bv);
        sink += tape.value(c).as_slice()[0];
    }
    let dt = t0.elapsed().as_secs_f64();
    let flops = reps as f64 * 2.0 * 32.0 * 128.0 * 512.0;
    eprintln!("matmul via tape: {:.2} Gflop/s (sink {sink})", flops / dt / 1e9);

    // elementwise op cost at [32x512]
    let big = t(&[32, 512], &mut rng);
    let t0 = Instant::now();
    let reps2 = 20000;
    let mut sink2 = 0.0;
    for _ in 0..reps2 {
        let mut tape = Tape::new();
        let v = tape.leaf(big.clone());
        let s = tape.sigmoid(v);
        let m = tape.mul(s, s);
        sink2 += tape.value(m).as_slice()[0];
    }
    let dt2 = t0.elapsed().as_secs_f64();
    eprintln!("leaf+sigmoid+mul at [32x512]: {:.1} ns/op-chain ({sink2})", dt2 / reps2 as f64 * 1e9);
}
