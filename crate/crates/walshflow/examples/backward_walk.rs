//! One projection sample drawn as its backward walk.
//!
//! The time projection of a spectral sample has the law of the zero set of
//! a doubled-speed walk run backward from a uniform maximal element. This
//! prints the walk and marks the zeros, which are exactly the sampled
//! times.
//!
//! ```bash
//! cargo run --example backward_walk [seed]
//! ```

use walshflow::rng::SeededSource;
use walshflow::sampler::backward_walk;

fn main() {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(11u64);
    let n = 40u64;
    let walk = backward_walk(n, &SeededSource::new(seed, 0)).unwrap();
    let r = walk.time_set();

    println!("horizon n = {n}, seed {seed}: maximal element x_m = {}", walk.x_m());
    println!("projection R = {:?} (|R| = {})\n", r.xs(), r.len());
    println!("{:>4} {:>5}  walk (o = zero, in R)", "x", "v");
    for x in (0..=walk.x_m()).rev() {
        let v = walk.values()[(walk.x_m() - x) as usize];
        let offset = (v + 12).clamp(0, 24) as usize;
        let mut lane = vec![b' '; 25];
        lane[12] = b'|';
        lane[offset] = if v == 0 { b'o' } else { b'*' };
        println!("{x:>4} {v:>5}  {}", String::from_utf8(lane).unwrap());
    }
    println!("\ncsv form: x,v,in_r");
    for x in 0..=walk.x_m() {
        let v = walk.values()[(walk.x_m() - x) as usize];
        println!("{x},{v},{}", u8::from(v == 0));
    }
}
