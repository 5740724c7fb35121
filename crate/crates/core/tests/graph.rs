use proptest::prelude::*;
use tdsim::components::{Constant, Gain, Integrator, Noise, Shape, Sum};
use tdsim::graph::{Finding, NO_BINDINGS};
use tdsim::{simulate, Graph, SimConfig};

/// Feedback loop `x' = -(g_{n-1} ∘ … ∘ g_0)(x) + 1` built with the nodes
/// inserted in the given order.
fn chain(gains: &[f64], insert: &[usize]) -> Graph {
    let n = gains.len();
    let mut g = Graph::new();
    for &k in insert {
        match k {
            k if k < n => {
                let src = if k == 0 { "x.out".to_string() } else { format!("g{}.out", k - 1) };
                g.add(format!("g{k}"), Gain::scalar(gains[k]), [("in", src)]);
            }
            k if k == n => {
                g.add("one", Constant::scalar(1.0), NO_BINDINGS);
            }
            k if k == n + 1 => {
                g.add("err", Sum::new(Shape::Scalar, vec![1.0, -1.0]), [("in0", "one.out".to_string()), ("in1", format!("g{}.out", n - 1))]);
            }
            _ => {
                g.add("x", Integrator::scalar(0.0), [("in", "err.out")]);
            }
        }
    }
    g
}

fn run(g: Graph) -> Vec<f64> {
    let cfg = SimConfig { dt: 0.01, t_end: 2.0, record: vec!["x.out".into()] };
    simulate(&g.compile().unwrap(), &cfg).unwrap().channel("x.out").unwrap().to_vec()
}

proptest! {
    #[test]
    fn insertion_order_does_not_matter(gains in prop::collection::vec(0.1..2.0f64, 1..6), seed in any::<u64>()) {
        let n = gains.len();
        let forward: Vec<usize> = (0..n + 3).collect();
        let mut shuffled = forward.clone();
        let mut s = seed;
        for i in (1..shuffled.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(run(chain(&gains, &forward)), run(chain(&gains, &shuffled)));
    }

    #[test]
    fn gain_ring_is_an_algebraic_loop(n in 1usize..6) {
        let mut g = Graph::new();
        for k in 0..n {
            g.add(format!("g{k}"), Gain::scalar(0.5), [("in", format!("g{}.out", (k + n - 1) % n))]);
        }
        let report = g.compile().unwrap_err();
        let ids: Vec<String> = (0..n).map(|k| format!("g{k}")).collect();
        prop_assert!(report.findings.contains(&Finding::AlgebraicLoop(ids)));
    }

    #[test]
    fn integrator_in_ring_breaks_loop(n in 1usize..6) {
        let mut g = Graph::new();
        g.add("x", Integrator::scalar(1.0), [("in", format!("g{}.out", n - 1))]);
        for k in 0..n {
            let src = if k == 0 { "x.out".to_string() } else { format!("g{}.out", k - 1) };
            g.add(format!("g{k}"), Gain::scalar(-0.5), [("in", src)]);
        }
        prop_assert!(g.compile().is_ok());
    }

    #[test]
    fn integrating_a_constant(c in -5.0..5.0f64, x0 in -5.0..5.0f64) {
        let mut g = Graph::new();
        g.add("c", Constant::scalar(c), NO_BINDINGS);
        g.add("x", Integrator::scalar(x0), [("in", "c.out")]);
        let cfg = SimConfig { dt: 0.1, t_end: 3.0, record: vec!["x.out".into()] };
        let out = simulate(&g.compile().unwrap(), &cfg).unwrap();
        let x = out.channel("x.out").unwrap();
        prop_assert!((x[x.len() - 1] - (x0 + 3.0 * c)).abs() < 1e-12);
    }
}

#[test]
fn noise_is_held_and_reproducible() {
    let n = Noise::new(Shape::Vec3, 0.5, 0.1, 42).unwrap();
    assert_eq!(n.sample(0.30), n.sample(0.3999));
    assert_ne!(n.sample(0.30), n.sample(0.40));
    let again = Noise::new(Shape::Vec3, 0.5, 0.1, 42).unwrap();
    assert_eq!(n.sample(7.25), again.sample(7.25));
    let draws: Vec<f64> = (0..20_000).flat_map(|k| n.sample(k as f64 * 0.1 + 0.05).iter().copied().collect::<Vec<_>>()).collect();
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let sd = (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / draws.len() as f64).sqrt();
    assert!(mean.abs() < 0.01 && (sd / 0.5 - 1.0).abs() < 0.02, "mean {mean} sd {sd}");
}

#[test]
fn zero_sigma_noise_passes_through() {
    let mut g = Graph::new();
    g.add("c", Constant::scalar(1.25), NO_BINDINGS);
    g.add("n", Noise::new(Shape::Scalar, 0.0, 0.1, 1).unwrap(), [("in", "c.out")]);
    let cfg = SimConfig { dt: 0.1, t_end: 1.0, record: vec!["n.out".into()] };
    let out = simulate(&g.compile().unwrap(), &cfg).unwrap();
    assert!(out.channel("n.out").unwrap().iter().all(|x| *x == 1.25));
}
