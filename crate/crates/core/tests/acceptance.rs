//! End-to-end acceptance checks. Runs without the libtest harness so that
//! every check prints exactly one `PASS` / `FAIL` line, even when it passes.
//!
//! `cargo test -p graph-ising --test acceptance`

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use graph_ising::coloring::{greedy_color, Coloring};
use graph_ising::field_net::{backward, forward, init_params, FieldNetConfig, FieldNetParams};
use graph_ising::graph::Graph;
use graph_ising::ising::{
    delta_energy, energy, energy_trace, exact_distribution, MetropolisSampler, SpinState,
};
use graph_ising::mesh::{geodesic_sphere, shape_corpus, evaluate_mesh, MeshEvalRow, MeshMethod, MeshTask};
use graph_ising::sai::{evaluate_sai, gen_dataset1, summarize, PositionMode, SaiMethod, SaiTask};
use graph_ising::trainer::{
    magnetization_penalty, rloo_step, train, SampleSource, Split, Task, TrainConfig,
};
use graph_ising::{rng, Coupling, IsingParams};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

struct FnTask {
    g: Graph,
    c: Coloring,
    f: fn(&SpinState) -> f64,
}

impl Task for FnTask {
    fn graph(&self) -> &Graph {
        &self.g
    }
    fn coloring(&self) -> &Coloring {
        &self.c
    }
    fn loss(&self, x: &SpinState) -> f64 {
        (self.f)(x)
    }
}

fn features(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
    let mut r = rng::seeded_rng(seed);
    DMatrix::from_fn(n, d, |_, j| if j == 0 { 1.0 } else { r.gen_range(-1.0..1.0) })
}

fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
    let mut r = rng::seeded_rng(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

fn fn_task(g: Graph, seed: u64, f: fn(&SpinState) -> f64) -> FnTask {
    let n = g.num_nodes();
    let g = g.with_node_features(features(n, 3, seed)).unwrap();
    let c = greedy_color(&g);
    FnTask { g, c, f }
}

fn tv_after(g: &Graph, c: &Coloring, p: &IsingParams, sweeps: usize, draws: u64, seed: u64) -> f64 {
    let exact = exact_distribution(g, p).unwrap();
    let sampler = MetropolisSampler::new(g, c).unwrap();
    let idx: Vec<usize> = (0..draws)
        .into_par_iter()
        .map(|s| sampler.sample(p, sweeps, rng::hash_key(seed, &[s])).unwrap().to_index())
        .collect();
    let mut counts = vec![0u64; 1 << g.num_nodes()];
    for i in idx {
        counts[i] += 1;
    }
    exact.total_variation(&counts)
}

/// Each draw is an independent chain of 50 sweeps from a random start. The
/// worst case over three field draws per setting is judged; the same draws
/// after 1000 sweeps are reported alongside to separate bias from slow mixing.
fn sampler_matches_enumeration() -> Outcome {
    let draws = 50_000u64;
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (name, g, c) in [
        ("path8", Graph::path(8), greedy_color(&Graph::path(8))),
        ("grid3x3", Graph::grid(3, 3), Coloring::checkerboard(3, 3)),
    ] {
        for j in [1.0, -1.0] {
            let (mut short, mut long): (f64, f64) = (0.0, 0.0);
            for k in 0..3u64 {
                let seed = rng::hash_key(g.num_nodes() as u64, &[(j > 0.0) as u64, k]);
                let mut r = rng::seeded_rng(seed);
                let h: Vec<f64> = (0..g.num_nodes()).map(|_| r.gen_range(-0.5..0.5)).collect();
                let p = IsingParams::new(1.0, Coupling::Uniform(j), h).unwrap();
                short = short.max(tv_after(&g, &c, &p, 50, draws, seed));
                long = long.max(tv_after(&g, &c, &p, 1000, draws, seed));
            }
            worst = worst.max(short);
            parts.push(format!("{name} J={j:+}: {short:.4} [T=1000: {long:.4}]"));
        }
    }
    check(worst < 0.05, format!("max TV at T=50 {worst:.4} (< 0.05); {}", parts.join(", ")))
}

fn rloo_is_unbiased() -> Outcome {
    let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (1, 4)]).unwrap();
    let t = fn_task(g, 2, |x| {
        let s = x.to_f64();
        (s[0] - 2.0 * s[3]).powi(2) + s[1] * s[2] - s[5]
    });
    let net = FieldNetConfig {
        num_layers: 2,
        hidden_dim: 4,
        ..FieldNetConfig::new(3)
    };
    let mut params = init_params(&net, 3).unwrap();
    params.head_bias = 0.2;
    let cfg = TrainConfig {
        sampler: SampleSource::Exact,
        coupling: 0.3,
        penalty_weight: 0.0,
        ..TrainConfig::default()
    };
    // exact gradient of the expected loss: central differences of the enumerated expectation
    let expected = |p: &FieldNetParams| {
        let h = forward(&t.g, p, &net).unwrap().field;
        let d = exact_distribution(&t.g, &cfg.ising_params(&t.g, h).unwrap()).unwrap();
        d.expectation(|x| (t.f)(x))
    };
    let flat = params.to_flat();
    let mut probe = params.clone();
    let exact: Vec<f64> = (0..flat.len())
        .map(|i| {
            let eps = 1e-5;
            let mut f = flat.clone();
            f[i] += eps;
            probe.set_flat(&f).unwrap();
            let plus = expected(&probe);
            f[i] -= 2.0 * eps;
            probe.set_flat(&f).unwrap();
            (plus - expected(&probe)) / (2.0 * eps)
        })
        .collect();
    let draws = 200_000u64;
    let sum = (0..draws)
        .into_par_iter()
        .map(|s| rloo_step(&t, &params, &net, &cfg, s).unwrap().0.to_flat())
        .reduce(
            || vec![0.0; exact.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let mean: Vec<f64> = sum.iter().map(|s| s / draws as f64).collect();
    let dot: f64 = mean.iter().zip(&exact).map(|(a, b)| a * b).sum();
    let na = mean.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nb = exact.iter().map(|b| b * b).sum::<f64>().sqrt();
    let diff = mean.iter().zip(&exact).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let (cos, rel) = (dot / (na * nb), diff / nb);
    check(
        cos > 0.99 && rel < 0.10,
        format!("cosine {cos:.4} (> 0.99), relative L2 error {:.2}% (< 10%)", rel * 100.0),
    )
}

fn max_gradient_error<F: Fn(&FieldNetParams) -> f64>(objective: F, p: &FieldNetParams, grad: &[f64]) -> f64 {
    let flat = p.to_flat();
    let mut probe = p.clone();
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..flat.len() {
        let mut f = flat.clone();
        f[i] += eps;
        probe.set_flat(&f).unwrap();
        let plus = objective(&probe);
        f[i] -= 2.0 * eps;
        probe.set_flat(&f).unwrap();
        let fd = (plus - objective(&probe)) / (2.0 * eps);
        worst = worst.max((fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-6));
    }
    worst
}

fn gradients_match_finite_differences() -> Outcome {
    let (mut net_err, mut pen_err): (f64, f64) = (0.0, 0.0);
    for seed in 0..20u64 {
        let n = 8 + (seed as usize % 9);
        let g = random_graph(n, 0.3, seed).with_node_features(features(n, 3, seed)).unwrap();
        let cfg = FieldNetConfig {
            num_layers: 1 + seed as usize % 3,
            hidden_dim: 6,
            weight_sharing: seed % 2 == 0,
            center_features: seed % 3 != 0,
            zero_sum_output: seed % 5 == 0,
            ..FieldNetConfig::new(3)
        };
        let p = init_params(&cfg, seed).unwrap();
        let out = forward(&g, &p, &cfg).unwrap();

        let up: Vec<f64> = (0..n).map(|i| rng::uniform(seed, &[i as u64]) - 0.5).collect();
        let grad = backward(&out.cache, &p, &up).unwrap().to_flat();
        let linear = |q: &FieldNetParams| -> f64 {
            let h = forward(&g, q, &cfg).unwrap().field;
            h.iter().zip(&up).map(|(a, b)| a * b).sum()
        };
        net_err = net_err.max(max_gradient_error(linear, &p, &grad));

        let (beta, eta, w) = (0.5 + (seed % 4) as f64 * 0.5, 0.6 * rng::uniform(seed, &[99]) - 0.3, 2.0);
        let (_, up) = magnetization_penalty(&out.field, beta, eta, w);
        let grad = backward(&out.cache, &p, &up).unwrap().to_flat();
        let penalty = |q: &FieldNetParams| {
            let h = forward(&g, q, &cfg).unwrap().field;
            magnetization_penalty(&h, beta, eta, w).0
        };
        pen_err = pen_err.max(max_gradient_error(penalty, &p, &grad));
    }
    check(
        net_err < 1e-4 && pen_err < 1e-4,
        format!("max relative error: network {net_err:.2e}, penalty {pen_err:.2e} (< 1e-4, 20 instances)"),
    )
}

fn fraction_is_controlled() -> Outcome {
    let tasks: Vec<FnTask> = (0..10).map(|s| fn_task(Graph::grid(8, 8), s, |_| 1.0)).collect();
    let net = FieldNetConfig {
        num_layers: 2,
        hidden_dim: 8,
        ..FieldNetConfig::new(3)
    };
    let cfg = TrainConfig {
        eta_target: 0.0,
        coupling: -1.0,
        sampler: SampleSource::Metropolis { sweeps: 10 },
        epochs: 60,
        seed: 4,
        ..TrainConfig::default()
    };
    // start far from the target: a +1.5 bias keeps ~90% of the nodes
    let mut init = init_params(&net, 1).unwrap();
    init.head_bias = 1.5;
    let out = train(&tasks, &[], &net, init, &cfg, None, |_| {}).unwrap();
    let rows: Vec<f64> = out
        .metrics
        .iter()
        .filter(|m| m.split == Split::Train)
        .map(|m| m.mean_sampling_fraction)
        .collect();
    let first = rows[0];
    let f = rows[rows.len() - 10..].iter().sum::<f64>() / 10.0;
    check(
        (0.45..=0.55).contains(&f),
        format!("kept fraction over the last 10 epochs {f:.3} in [0.45, 0.55] (epoch 1: {first:.3})"),
    )
}

fn sai_reproduction() -> Outcome {
    let tasks: Vec<SaiTask> = gen_dataset1(400, 1)
        .unwrap()
        .into_iter()
        .enumerate()
        .map(|(i, m)| SaiTask::new(format!("m{i}"), m, PositionMode::Pattern).unwrap())
        .collect();
    let (train_set, rest) = tasks.split_at(240);
    let (val, test) = rest.split_at(80);
    let net = FieldNetConfig::new(3);
    let cfg = TrainConfig {
        coupling: -0.4,
        sampler: SampleSource::Metropolis { sweeps: 3 },
        epochs: 30,
        seed: 3,
        ..TrainConfig::default()
    };
    let init = init_params(&net, 7).unwrap();
    let out = train(train_set, val, &net, init, &cfg, None, |_| {}).unwrap();
    let rows = evaluate_sai(test, &out.best_params, &net, &cfg, &[SaiMethod::Ising, SaiMethod::Random], 11).unwrap();
    let s = summarize(&rows);
    let mean = |m: SaiMethod| s.iter().find(|r| r.0 == m).unwrap();
    let (model, ising, random) = (mean(SaiMethod::Model), mean(SaiMethod::Ising), mean(SaiMethod::Random));
    let margin = 1.0 - model.1 / ising.1.min(random.1);
    check(
        margin >= 0.05 && ising.1 <= random.1,
        format!(
            "test loss ISING+MAG {:.3} / ISING {:.3} / RANDOM {:.3} at fractions {:.3}/{:.3}/{:.3}; margin {:.1}% (>= 5%)",
            model.1,
            ising.1,
            random.1,
            model.3,
            ising.3,
            random.3,
            margin * 100.0
        ),
    )
}

fn mesh_reproduction() -> Outcome {
    let tasks: Vec<MeshTask> = shape_corpus(20, 5)
        .into_iter()
        .enumerate()
        .map(|(i, m)| MeshTask::new(format!("shape{i}"), m).unwrap())
        .collect();
    let (train_set, test) = tasks.split_at(15);
    let net = FieldNetConfig::new(3);
    let mut cfg = TrainConfig {
        coupling: -1.0,
        sampler: SampleSource::Metropolis { sweeps: 10 },
        epochs: 50,
        seed: 3,
        ..TrainConfig::default()
    };
    cfg.adam.learning_rate = 0.001;
    let init = init_params(&net, 7).unwrap();
    let out = train(train_set, &[], &net, init, &cfg, None, |_| {}).unwrap();
    let mut rows: Vec<MeshEvalRow> = Vec::new();
    for s in 0..3 {
        rows.extend(
            evaluate_mesh(test, Some((&out.best_params, &net)), &cfg, &[MeshMethod::Ising, MeshMethod::Random], 100 + s)
                .unwrap(),
        );
    }
    let stat = |m: MeshMethod| {
        let v: Vec<&MeshEvalRow> = rows.iter().filter(|r| r.method == m).collect();
        let n = v.len() as f64;
        (
            v.iter().map(|r| r.point_to_mesh_dist).sum::<f64>() / n,
            v.iter().map(|r| r.kept_fraction).sum::<f64>() / n,
        )
    };
    let (model, ising, random) = (stat(MeshMethod::Model), stat(MeshMethod::Ising), stat(MeshMethod::Random));
    check(
        model.0 <= ising.0 && ising.0 < random.0 && (ising.1 - 0.5).abs() <= 0.05,
        format!(
            "distance ISING+MAG {:.4} / ISING {:.4} / RANDOM {:.4}; antiferromagnetic fraction {:.3} (0.5 ± 0.05)",
            model.0, ising.0, random.0, ising.1
        ),
    )
}

fn antiferromagnet_converges_faster() -> Outcome {
    let sphere = geodesic_sphere(10);
    let g = sphere.graph();
    let c = greedy_color(g);
    let gap = |j: f64| {
        let p = IsingParams::zero_field(1.0, j, g.num_nodes()).unwrap();
        let t = energy_trace(g, &c, &p, 50, 32, 17).unwrap();
        ((t.mean_at(5) - t.mean_at(50)) / t.mean_at(50)).abs()
    };
    let (anti, ferro) = (gap(-1.0), gap(1.0));
    check(
        anti <= 0.02 && ferro > anti,
        format!(
            "{} vertices; relative gap sweep 5 vs 50: J=-1 {:.2}% (<= 2%), J=+1 {:.2}%",
            g.num_nodes(),
            anti * 100.0,
            ferro * 100.0
        ),
    )
}

fn exactness_and_properties() -> Outcome {
    let worst_loss = gen_dataset1(20, 8)
        .unwrap()
        .into_par_iter()
        .map(|m| {
            assert_eq!(m.dim(), 30);
            let t = SaiTask::new("full", m, PositionMode::Full).unwrap();
            t.loss(&SpinState::all_up(t.graph().num_nodes()))
        })
        .reduce(|| 0.0, f64::max);

    let mut bad_colorings = 0;
    let mut worst_flip: f64 = 0.0;
    for seed in 0..1000u64 {
        let mut r = rng::seeded_rng(seed);
        let n = r.gen_range(1..40);
        let g = random_graph(n, r.gen_range(0.0..0.5), seed ^ 0x5eed);
        if !greedy_color(&g).validate(&g).unwrap() {
            bad_colorings += 1;
        }
        let coupling: Vec<f64> = (0..g.num_edges()).map(|_| r.gen_range(-2.0..2.0)).collect();
        let h: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let p = IsingParams::new(r.gen_range(0.1..3.0), Coupling::PerEdge(coupling), h).unwrap();
        let x = SpinState::new((0..n).map(|_| if r.gen::<bool>() { 1 } else { -1 }).collect()).unwrap();
        let e = energy(&g, &p, &x).unwrap();
        for i in 0..n {
            let d = delta_energy(&g, &p, &x, i).unwrap();
            let exact = energy(&g, &p, &x.flipped(i)).unwrap() - e;
            worst_flip = worst_flip.max((d - exact).abs());
        }
    }
    check(
        worst_loss < 1e-8 && bad_colorings == 0 && worst_flip < 1e-9,
        format!(
            "full-pattern loss max {worst_loss:.1e} (< 1e-8) on 20 matrices; 1000 graphs: {bad_colorings} improper colorings, max flip-energy mismatch {worst_flip:.1e}"
        ),
    )
}

fn main() {
    let checks: [(&str, fn() -> Outcome); 8] = [
        ("sampler matches enumeration", sampler_matches_enumeration),
        ("leave-one-out estimator is unbiased", rloo_is_unbiased),
        ("analytic gradients", gradients_match_finite_differences),
        ("sampling-fraction control", fraction_is_controlled),
        ("sparse approximate inverse benchmark", sai_reproduction),
        ("mesh sparsification benchmark", mesh_reproduction),
        ("antiferromagnetic convergence", antiferromagnet_converges_faster),
        ("exactness and property suites", exactness_and_properties),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (k, (name, f)) in checks.iter().enumerate() {
        if only.is_some_and(|o| o != k + 1) {
            continue;
        }
        let t0 = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            check(false, format!("panicked: {msg}"))
        });
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} [{}] {name}: {} ({:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            k + 1,
            o.detail,
            t0.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        eprintln!("{failed} acceptance check(s) failed");
        std::process::exit(1);
    }
}
