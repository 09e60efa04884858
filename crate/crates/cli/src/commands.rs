use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use graph_ising::coloring::{greedy_color, Coloring};
use graph_ising::field_net::{init_params, read_checkpoint, Checkpoint, FieldNetConfig};
use graph_ising::graph::{parse_edge_list, Graph};
use graph_ising::ising::{energy_trace, AcceptanceRule, MetropolisSampler};
use graph_ising::mesh::{self, MeshMethod, MeshTask};
use graph_ising::rng;
use graph_ising::sai::{self, SaiMethod, SaiTask};
use graph_ising::trainer::{self, metrics_csv, Task, TrainConfig, METRICS_HEADER};
use graph_ising::{Coupling, IsingParams};

use crate::config::{ExperimentConfig, TaskKind};
use crate::data::{self, assign_splits, write_manifest};
use crate::{CliError, EvalArgs, GenDataArgs, GraphSource, SampleArgs, TraceArgs, TrainArgs, Variant};

/// Node features per instance, identical for both tasks.
const INPUT_DIM: usize = 3;

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn gen_data(a: &GenDataArgs) -> Result<(), CliError> {
    std::fs::create_dir_all(&a.out)?;
    let need_count = || {
        a.count
            .ok_or_else(|| CliError::Config("--count is required for this variant".into()))
    };
    match a.task {
        TaskKind::Sai => {
            let matrices = match a.variant {
                Variant::Synthetic => sai::gen_dataset1(need_count()?, a.seed)?,
                Variant::Banded => sai::gen_banded(need_count()?, &sai::BandedConfig::default(), a.seed)?,
                Variant::Suitesparse => {
                    let src = a.input.as_ref().ok_or_else(|| {
                        CliError::Config("--variant suitesparse needs --in FILE".into())
                    })?;
                    let text = std::fs::read_to_string(src)
                        .map_err(|e| CliError::Data(format!("{}: {e}", src.display())))?;
                    let big = sai::parse_matrix_market(&text)?;
                    let mut w = sai::extract_submatrices(&big, a.window, &sai::MatrixFilter::default())?;
                    if let Some(c) = a.count {
                        w.truncate(c);
                    }
                    w
                }
            };
            let splits = assign_splits(matrices.len(), a.split.as_deref().unwrap_or("0.6,0.2,0.2"))?;
            let mut rows = Vec::with_capacity(matrices.len());
            for (i, (m, split)) in matrices.iter().zip(splits).enumerate() {
                let file = format!("m{i:04}.mtx");
                std::fs::write(a.out.join(&file), m.to_matrix_market())?;
                let extra = format!("{},{},{},{}", m.dim(), m.nnz(), m.determinant(), m.sparsity());
                rows.push((file, split, extra));
            }
            write_manifest(&a.out, "n,nnz,det,sparsity", &rows)?;
            log::info!("wrote {} matrices to {}", rows.len(), a.out.display());
        }
        TaskKind::Mesh => {
            if a.variant != Variant::Synthetic {
                return Err(CliError::Config("mesh datasets only support --variant synthetic".into()));
            }
            let shapes = mesh::shape_corpus(need_count()?, a.seed);
            let splits = assign_splits(shapes.len(), a.split.as_deref().unwrap_or("0.75,0,0.25"))?;
            let mut rows = Vec::with_capacity(shapes.len());
            for (i, (m, split)) in shapes.iter().zip(splits).enumerate() {
                let file = format!("shape{i:04}.off");
                std::fs::write(a.out.join(&file), mesh::write_off(m))?;
                rows.push((file, split, format!("{},{}", m.num_vertices(), m.num_faces())));
            }
            write_manifest(&a.out, "vertices,faces", &rows)?;
            log::info!("wrote {} meshes to {}", rows.len(), a.out.display());
        }
    }
    Ok(())
}

fn load_sai(dir: &Path, split: &str, cfg: &ExperimentConfig) -> Result<Vec<SaiTask>, CliError> {
    data::list(dir, split, &[".mtx"])?
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            let m = sai::parse_matrix_market(&text)
                .map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            let mut t = SaiTask::new(stem(p), m, cfg.task.position_mode())?;
            t.options = cfg.task.pattern_options();
            Ok(t)
        })
        .collect()
}

fn load_mesh(dir: &Path, split: &str) -> Result<Vec<MeshTask>, CliError> {
    data::list(dir, split, &[".off", ".obj"])?
        .iter()
        .map(|p| {
            let m = mesh::load_mesh(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            Ok(MeshTask::new(stem(p), m)?)
        })
        .collect()
}

fn fit<T: Task>(
    train_set: &[T],
    val_set: &[T],
    net: &FieldNetConfig,
    cfg: &TrainConfig,
    resume: Option<&Checkpoint>,
    out: &Path,
) -> Result<(), CliError> {
    if train_set.is_empty() {
        return Err(CliError::Data("no training instances in the dataset".into()));
    }
    log::info!("{} training / {} validation instances", train_set.len(), val_set.len());
    let init = init_params(net, rng::hash_key(cfg.seed, &[u64::MAX]))?;
    println!("{METRICS_HEADER}");
    let outcome = trainer::train(train_set, val_set, net, init, cfg, resume, |m| {
        println!("{}", m.csv_row());
    })?;
    std::fs::write(out.join("metrics.csv"), metrics_csv(&outcome.metrics))?;
    if outcome.best_validation.is_finite() {
        log::info!("best validation objective {}", outcome.best_validation);
    }
    Ok(())
}

pub fn train(a: &TrainArgs) -> Result<(), CliError> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(e) = a.epochs {
        cfg.train.epochs = e;
    }
    if let Some(s) = a.seed {
        cfg.io.seed = s;
    }
    if let Some(d) = &a.data {
        cfg.io.data = Some(d.clone());
    }
    cfg.validate()?;
    log::info!("resolved config:\n{}", cfg.to_toml());
    let dir = cfg
        .io
        .data
        .clone()
        .ok_or_else(|| CliError::Config("no dataset: pass --data or set [io] data".into()))?;
    let net = cfg.net_config(INPUT_DIM);
    let tcfg = cfg.train_config(Some(a.out.clone()));
    let resume = if a.resume {
        let c = read_checkpoint(&a.out.join("last.ckpt"))?;
        if c.config != net {
            return Err(CliError::Config("checkpoint was trained with a different [model]".into()));
        }
        Some(c)
    } else {
        None
    };
    std::fs::create_dir_all(&a.out)?;
    std::fs::write(a.out.join("config.toml"), cfg.to_toml())?;
    match cfg.task.kind {
        TaskKind::Sai => {
            let tr = load_sai(&dir, "train", &cfg)?;
            let va = load_sai(&dir, "val", &cfg)?;
            fit(&tr, &va, &net, &tcfg, resume.as_ref(), &a.out)
        }
        TaskKind::Mesh => {
            let tr = load_mesh(&dir, "train")?;
            let va = load_mesh(&dir, "val")?;
            fit(&tr, &va, &net, &tcfg, resume.as_ref(), &a.out)
        }
    }
}

fn parse_list<M: std::str::FromStr<Err = graph_ising::Error>>(s: Option<&str>) -> Result<Vec<M>, CliError> {
    s.map(|s| {
        s.split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| t.parse::<M>().map_err(|e| CliError::Config(e.to_string())))
            .collect()
    })
    .unwrap_or_else(|| Ok(Vec::new()))
}

pub fn eval(a: &EvalArgs) -> Result<(), CliError> {
    let ckpt = read_checkpoint(&a.ckpt)
        .map_err(|e| CliError::Data(format!("{}: {e}", a.ckpt.display())))?;
    let cfg = match &a.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => {
            let beside = a.ckpt.parent().map(|d| d.join("config.toml"));
            match beside.filter(|p| p.exists()) {
                Some(p) => ExperimentConfig::load(&p)?,
                None => ExperimentConfig::defaults_for(a.task),
            }
        }
    };
    if cfg.task.kind != a.task {
        return Err(CliError::Config(format!(
            "config is for task {:?}, but --task {:?} was given",
            cfg.task.kind, a.task
        )));
    }
    log::info!("resolved config:\n{}", cfg.to_toml());
    if ckpt.config.input_dim != INPUT_DIM {
        return Err(CliError::Data(format!(
            "checkpoint expects {} input features, this task provides {INPUT_DIM}",
            ckpt.config.input_dim
        )));
    }
    let tcfg = cfg.train_config(None);
    let mut summary = String::new();
    let csv = match a.task {
        TaskKind::Sai => {
            let methods: Vec<SaiMethod> = parse_list(a.baselines.as_deref())?;
            let tasks = load_sai(&a.data, &a.split, &cfg)?;
            if tasks.is_empty() {
                return Err(CliError::Data(format!("no `{}` matrices in {}", a.split, a.data.display())));
            }
            let rows = sai::evaluate_sai(&tasks, &ckpt.params, &ckpt.config, &tcfg, &methods, a.seed)?;
            let _ = writeln!(summary, "method        mean loss (std)      fraction");
            for (m, mean, sd, frac) in sai::summarize(&rows) {
                let _ = writeln!(summary, "{:<12}  {mean:.4} ({sd:.4})  {frac:.3}", m.name());
            }
            sai::sai_eval_csv(&rows)
        }
        TaskKind::Mesh => {
            let methods: Vec<MeshMethod> = parse_list(a.baselines.as_deref())?;
            let tasks = load_mesh(&a.data, &a.split)?;
            if tasks.is_empty() {
                return Err(CliError::Data(format!("no `{}` meshes in {}", a.split, a.data.display())));
            }
            let rows = mesh::evaluate_mesh(
                &tasks,
                Some((&ckpt.params, &ckpt.config)),
                &tcfg,
                &methods,
                a.seed,
            )?;
            let _ = writeln!(summary, "method        mean distance (std)  fraction");
            for (m, mean, sd, frac) in mesh::summarize_mesh(&rows) {
                let _ = writeln!(summary, "{:<12}  {mean:.5} ({sd:.5})  {frac:.3}", m.name());
            }
            mesh::mesh_eval_csv(&rows)
        }
    };
    eprint!("{summary}");
    emit(a.out.as_deref(), &csv)
}

fn build_graph(s: &GraphSource) -> Result<(Graph, Coloring), CliError> {
    if let Some(p) = &s.edges {
        let text = std::fs::read_to_string(p)
            .map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
        let g = parse_edge_list(&text)?;
        let c = greedy_color(&g);
        Ok((g, c))
    } else if let Some(dims) = &s.grid {
        let (r, c) = dims
            .split_once(['x', 'X'])
            .and_then(|(r, c)| Some((r.trim().parse().ok()?, c.trim().parse().ok()?)))
            .ok_or_else(|| CliError::Config(format!("--grid expects ROWSxCOLS, got `{dims}`")))?;
        Ok((Graph::grid(r, c), Coloring::checkerboard(r, c)))
    } else if let Some(p) = &s.mesh {
        let m = mesh::load_mesh(p)?;
        let g = m.graph().clone();
        let c = greedy_color(&g);
        Ok((g, c))
    } else if let Some(f) = s.sphere {
        let g = mesh::geodesic_sphere(f).graph().clone();
        let c = greedy_color(&g);
        Ok((g, c))
    } else {
        Err(CliError::Config("no graph source given".into()))
    }
}

pub fn sample(a: &SampleArgs) -> Result<(), CliError> {
    let (g, c) = build_graph(&a.source)?;
    let p = IsingParams::new(a.beta, Coupling::Uniform(a.coupling), vec![a.field; g.num_nodes()])?;
    let rule = if a.doubled_beta {
        AcceptanceRule::DoubledBeta
    } else {
        AcceptanceRule::Metropolis
    };
    let x = MetropolisSampler::new(&g, &c)?.with_rule(rule).sample(&p, a.sweeps, a.seed)?;
    let agree = g
        .edges()
        .iter()
        .filter(|&&(i, j)| x.get(i) == x.get(j))
        .count() as f64
        / g.num_edges().max(1) as f64;
    log::info!(
        "{} nodes, mean spin {:.4}, neighbor agreement {:.4}",
        g.num_nodes(),
        x.mean_spin(),
        agree
    );
    let mut out = format!("% nodes {}\n", g.num_nodes());
    for s in x.as_slice() {
        let _ = writeln!(out, "{s}");
    }
    emit(a.out.as_deref(), &out)
}

pub fn trace(a: &TraceArgs) -> Result<(), CliError> {
    let (g, c) = build_graph(&a.source)?;
    let p = IsingParams::zero_field(a.beta, a.coupling, g.num_nodes())?;
    let t = energy_trace(&g, &c, &p, a.sweeps, a.replicas, a.seed)?;
    emit(a.out.as_deref(), &t.to_csv())
}
