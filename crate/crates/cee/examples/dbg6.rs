use cee::interp::{normalize, Node, Problem};
use cee::oracles::{random_positive_real, random_schur_roots};
use cee::poly::{c64, rational_jet, C64, Poly};
use cee::scalar::{solve, CeeOptions, SpectralPrior};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for trial in 0..200 {
        let base_mult = 1 + trial % 4;
        let mut layout: Vec<(C64, usize)> = vec![(C64::ZERO, base_mult)];
        let mut total = base_mult;
        while total < 8 && rng.random_bool(0.75) {
            if rng.random_bool(0.5) && total + 2 <= 8 {
                let r: f64 = rng.random_range(0.2..0.9);
                let th: f64 = rng.random_range(0.3..2.8);
                let m = 1 + rng.random_range(0..2usize);
                if total + 2 * m > 9 { continue; }
                layout.push((c64(r * th.cos(), r * th.sin()), m));
                layout.push((c64(r * th.cos(), -r * th.sin()), m));
                total += 2 * m;
            } else {
                let m = 1 + rng.random_range(0..3usize);
                if total + m > 9 { continue; }
                let mut x: f64 = rng.random_range(-0.9..0.9);
                while layout.iter().any(|(z, _)| (z - c64(x, 0.0)).norm() < 0.05) {
                    x = rng.random_range(-0.9..0.9);
                }
                layout.push((c64(x, 0.0), m));
                total += m;
            }
        }
        let n = total - 1;
        if n == 0 { continue; }
        let truth = random_positive_real(&mut rng, n.max(1));
        let nodes: Vec<Node> = layout.iter().map(|&(z, m)| {
            let jet = rational_jet(&truth.num, &truth.den, z, m - 1).unwrap();
            Node::new(z, jet.coeffs().to_vec())
        }).collect();
        let problem = Problem::validate(nodes).unwrap().problem;
        let (problem, _) = normalize(&problem).unwrap();
        let sigma = Poly::from_roots_real(&random_schur_roots(&mut rng, n)).unwrap();
        let prior = SpectralPrior::new(sigma.clone()).unwrap();
        match solve(&problem, &prior, &CeeOptions::default()) {
            Ok(_) => {}
            Err(e) => {
                eprintln!("trial {trial} FAILED: {e}");
                eprintln!("n = {n}, layout: {layout:?}");
                eprintln!("sigma roots: {:?}", sigma.roots().unwrap());
                eprintln!("truth a roots: {:?}", truth.a.roots().unwrap());
                eprintln!("truth sigma roots: {:?}", truth.sigma.roots().unwrap());
                eprintln!("pick: {:?}", cee::interp::pick_test(&problem).map(|p| p.min_eigenvalue));
                std::process::exit(1);
            }
        }
    }
    eprintln!("all 200 ok");
}
