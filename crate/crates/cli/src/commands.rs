use std::collections::HashSet;
use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use kgxk_core::eval::{
    edge_drop_sweep, ego_radius_sweep, evaluate_model, run_protocol, EmptyExplainer, Explainer,
    FullGraphExplainer, InstanceMaskExplainer, ParameterizedMaskExplainer, ProtocolInputs,
    ProtocolReport, RawExplainer, RankingMetrics, Views,
};
use kgxk_core::evaluator::train_evaluator;
use kgxk_core::explainer::{read_explanations, train_explainer, write_explanations, MaskNet, PprConfig};
use kgxk_core::kg::{
    load_dataset, make_queries, parse_query_spec, Dataset, KnowledgeGraph, KnownTriples, Query,
    RelationId, Split, SubgraphView,
};
use kgxk_core::model::{forward, init_model, load_checkpoint, save_checkpoint, train_backbone, Model};
use kgxk_core::synthetic::generate;
use serde_json::json;

use crate::config::RunConfig;
use crate::manifest::Manifest;
use crate::{Cli, Command, Failure, Method, SplitArg, VERSION};

type Outcome<T = ()> = Result<T, Failure>;

const EXPLAINERS: [&str; 5] = ["full", "empty", "raw", "param_mask", "instance_mask"];

struct Run {
    cfg: RunConfig,
    out: PathBuf,
    dir: PathBuf,
    inputs: Vec<PathBuf>,
    outputs: Vec<String>,
}

impl Run {
    fn seed(&self) -> u64 {
        self.cfg.seed
    }

    /// Conventional artifact path of another subcommand's default run.
    fn produced_by(&self, command: &str, file: &str) -> PathBuf {
        self.out.join(default_run_id(command, self.seed())).join(file)
    }

    fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    fn output(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_owned());
        self.dir.join(name)
    }

    fn write_json(&mut self, name: &str, value: &serde_json::Value) -> Outcome {
        let path = self.output(name);
        fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
        Ok(())
    }

    fn load_model(&mut self, path: &Path, g: &KnowledgeGraph) -> Outcome<Model> {
        self.input(path);
        load_checkpoint(path, Some(g)).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
    }

    fn load_net(&mut self, path: &Path) -> Outcome<MaskNet> {
        self.input(path);
        MaskNet::load(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
    }
}

fn default_run_id(command: &str, seed: u64) -> String {
    format!("{command}-seed{seed}")
}

fn out_root(flag: Option<&PathBuf>, cfg: &RunConfig) -> PathBuf {
    flag.cloned()
        .or_else(|| cfg.out_dir.clone())
        .or_else(|| env::var_os("KGXK_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

fn resolve_config(cli: &Cli) -> Outcome<RunConfig> {
    let c = &cli.common;
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p).map_err(|e| Failure::data(format!("invalid configuration: {e}")))?,
        None => RunConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(d) = &c.dataset {
        cfg.dataset = d.clone();
    }
    if let Some(b) = &c.budgets {
        cfg.budgets = b.clone();
    }
    if let Command::TrainEvaluator { schedule: Some(k) } = &cli.command {
        cfg.evaluator.kind = *k;
    }
    cfg.propagate_seed();
    cfg.validate()
        .map_err(|e| Failure::data(format!("invalid configuration: {e}")))?;
    Ok(cfg)
}

/// Runs one subcommand and returns its output directory.
pub(crate) fn execute(cli: &Cli, args: Vec<String>) -> Outcome<PathBuf> {
    let cfg = resolve_config(cli)?;
    let run_id = cli
        .common
        .run_id
        .clone()
        .unwrap_or_else(|| default_run_id(cli.command.name(), cfg.seed));
    if run_id.is_empty() || run_id.contains(['/', '\\']) || run_id == "." || run_id == ".." {
        return Err(Failure::usage(format!("invalid run id `{run_id}`")));
    }
    let out = out_root(cli.common.out.as_ref(), &cfg);
    let dir = out.join(&run_id);
    fs::create_dir_all(&dir).map_err(|e| Failure::data(format!("{}: {e}", dir.display())))?;
    let mut run = Run {
        cfg,
        out,
        dir,
        inputs: Vec::new(),
        outputs: Vec::new(),
    };
    match &cli.command {
        Command::Prepare { synthetic } => prepare(&mut run, *synthetic)?,
        Command::TrainBackbone => cmd_train_backbone(&mut run)?,
        Command::TrainEvaluator { .. } => cmd_train_evaluator(&mut run)?,
        Command::TrainExplainer { evaluator, no_ppr } => {
            cmd_train_explainer(&mut run, evaluator.as_deref(), *no_ppr)?
        }
        Command::Explain {
            explainer,
            evaluator,
            method,
            query,
            split,
            budget,
            limit,
        } => explain(
            &mut run,
            ExplainArgs {
                explainer: explainer.as_deref(),
                evaluator: evaluator.as_deref(),
                method: *method,
                query: query.as_deref(),
                split: split.unwrap_or(SplitArg::Test),
                budget: *budget,
                limit: *limit,
            },
        )?,
        Command::Evaluate {
            model,
            split,
            explanations,
        } => evaluate(&mut run, model.as_deref(), *split, explanations.as_deref())?,
        Command::SweepDrop { models } => sweep(&mut run, models, false)?,
        Command::SweepEgo { models } => sweep(&mut run, models, true)?,
        Command::Protocol {
            backbone,
            evaluator,
            explainer,
            param_explainer,
            explainers,
        } => protocol(
            &mut run,
            ProtocolArgs {
                backbone: backbone.as_deref(),
                evaluator: evaluator.as_deref(),
                explainer: explainer.as_deref(),
                param_explainer: param_explainer.as_deref(),
                explainers,
            },
        )?,
        Command::Report { run: protocol_dir } => report(&mut run, protocol_dir.as_deref())?,
    }
    let manifest = Manifest {
        tool: "kgxk".to_owned(),
        version: VERSION.to_owned(),
        command: cli.command.name().to_owned(),
        args,
        run_id,
        seed: run.cfg.seed,
        config: run.cfg.clone(),
        inputs: run.inputs,
        outputs: run.outputs,
    };
    manifest.write(&run.dir)?;
    Ok(run.dir)
}

struct Data {
    dataset: Dataset,
    graph: KnowledgeGraph,
    known: KnownTriples,
    relations: Option<HashSet<RelationId>>,
}

fn load_data(run: &mut Run) -> Outcome<Data> {
    let dir = run.cfg.dataset.clone();
    run.input(&dir);
    let dataset = load_dataset(&dir).map_err(|e| Failure::data(format!("dataset {}: {e}", dir.display())))?;
    let graph = dataset.train_graph()?;
    let known = KnownTriples::new(dataset.all_triples(), graph.num_base_relations());
    let relations = if run.cfg.query_relations.is_empty() {
        None
    } else {
        let mut set = HashSet::new();
        for name in &run.cfg.query_relations {
            let id = graph
                .vocab()
                .resolve_relation_label(name)
                .ok_or_else(|| Failure::data(format!("query_relations: unknown relation `{name}`")))?;
            set.insert(id);
        }
        Some(set)
    };
    Ok(Data {
        dataset,
        graph,
        known,
        relations,
    })
}

impl Data {
    /// Queries of one split in both directions, evenly thinned to `limit`.
    fn queries(&self, split: SplitArg, limit: Option<usize>) -> Vec<Query> {
        let split = match split {
            SplitArg::Train => Split::Train,
            SplitArg::Valid => Split::Valid,
            SplitArg::Test => Split::Test,
        };
        let mut qs = make_queries(self.dataset.split(split), self.graph.num_base_relations());
        if let Some(rel) = &self.relations {
            qs.retain(|q| rel.contains(&q.relation));
        }
        match limit {
            Some(k) if k < qs.len() => (0..k).map(|i| qs[i * qs.len() / k]).collect(),
            _ => qs,
        }
    }

    fn nonempty_queries(&self, split: SplitArg, limit: Option<usize>) -> Outcome<Vec<Query>> {
        let qs = self.queries(split, limit);
        if qs.is_empty() {
            return Err(Failure::data(format!("no {split:?} queries to work with").to_lowercase()));
        }
        Ok(qs)
    }
}

fn prepare(run: &mut Run, synthetic: bool) -> Outcome {
    let dataset = if synthetic {
        let kg = generate(&run.cfg.synthetic)?;
        let data_dir = run.dir.join("data");
        kg.dataset.write(&data_dir)?;
        for f in ["train.txt", "valid.txt", "test.txt"] {
            run.outputs.push(format!("data/{f}"));
        }
        let vocab = &kg.dataset.vocab;
        let name = |t: &kgxk_core::kg::Triple| {
            [
                vocab.entity_name(t.head).unwrap_or("?"),
                vocab.relation_name(t.relation).unwrap_or("?"),
                vocab.entity_name(t.tail).unwrap_or("?"),
            ]
        };
        let planted: Vec<_> = kg
            .support_paths
            .iter()
            .map(|(t, paths)| {
                json!({
                    "target": name(t),
                    "paths": paths.iter().map(|p| [name(&p.first), name(&p.second)]).collect::<Vec<_>>(),
                })
            })
            .collect();
        run.write_json("planted.json", &json!(planted))?;
        // entities outside every triple do not survive the round trip
        load_dataset(&data_dir)?
    } else {
        let dir = run.cfg.dataset.clone();
        run.input(&dir);
        load_dataset(&dir).map_err(|e| Failure::data(format!("dataset {}: {e}", dir.display())))?
    };
    let g = dataset.train_graph()?;
    let stats = json!({
        "entities": dataset.vocab.num_entities(),
        "relations": dataset.vocab.num_relations(),
        "train": dataset.train.len(),
        "valid": dataset.valid.len(),
        "test": dataset.test.len(),
        "train_duplicates_removed": g.duplicates_removed(),
    });
    run.write_json("stats.json", &stats)
}

fn cmd_train_backbone(run: &mut Run) -> Outcome {
    let data = load_data(run)?;
    let train_q = data.nonempty_queries(SplitArg::Train, run.cfg.max_train_queries)?;
    let model = fit_backbone(&run.cfg, &data, &train_q)?;
    save_checkpoint(&model, &run.output("backbone.json"))?;
    Ok(())
}

fn fit_backbone(cfg: &RunConfig, data: &Data, train_q: &[Query]) -> Outcome<Model> {
    let init = init_model(&cfg.backbone, &data.graph, cfg.seed)?;
    Ok(train_backbone(&init, &data.graph, train_q, &cfg.train)?)
}

fn fit_evaluator(cfg: &RunConfig, data: &Data, train_q: &[Query]) -> Outcome<Model> {
    let schedule = cfg.evaluator.schedule();
    Ok(train_evaluator(
        &cfg.backbone,
        &data.graph,
        &schedule,
        train_q,
        &cfg.train,
        cfg.seed,
    )?)
}

fn no_ppr(ppr: &PprConfig) -> PprConfig {
    PprConfig {
        beta_in: 0.0,
        beta_out: 0.0,
        ..ppr.clone()
    }
}

fn fit_explainer(cfg: &RunConfig, data: &Data, evaluator: &Model, train_q: &[Query], ppr: &PprConfig) -> Outcome<MaskNet> {
    let init = MaskNet::new(evaluator.config.embed_dim, &cfg.explainer.hidden, cfg.seed)?;
    Ok(train_explainer(&init, evaluator, &data.graph, train_q, ppr, &cfg.explainer)?)
}

fn cmd_train_evaluator(run: &mut Run) -> Outcome {
    let data = load_data(run)?;
    let train_q = data.nonempty_queries(SplitArg::Train, run.cfg.max_train_queries)?;
    let model = fit_evaluator(&run.cfg, &data, &train_q)?;
    save_checkpoint(&model, &run.output("evaluator.json"))?;
    Ok(())
}

fn cmd_train_explainer(run: &mut Run, evaluator: Option<&Path>, without_ppr: bool) -> Outcome {
    let data = load_data(run)?;
    let eval_path = evaluator.map_or_else(|| run.produced_by("train-evaluator", "evaluator.json"), Path::to_path_buf);
    let ev = run.load_model(&eval_path, &data.graph)?;
    let train_q = data.nonempty_queries(SplitArg::Train, run.cfg.max_train_queries)?;
    let ppr = if without_ppr { no_ppr(&run.cfg.ppr) } else { run.cfg.ppr.clone() };
    let net = fit_explainer(&run.cfg, &data, &ev, &train_q, &ppr)?;
    let name = if without_ppr { "param_explainer.json" } else { "explainer.json" };
    net.save(&run.output(name))?;
    Ok(())
}

struct ExplainArgs<'a> {
    explainer: Option<&'a Path>,
    evaluator: Option<&'a Path>,
    method: Method,
    query: Option<&'a str>,
    split: SplitArg,
    budget: Option<usize>,
    limit: Option<usize>,
}

/// Highest-scoring answer on the full graph, lowest id on ties.
fn top_prediction(ev: &Model, g: &KnowledgeGraph, head: u32, relation: u32) -> Outcome<u32> {
    let probe = Query::new(head, relation, head);
    let scores = forward(ev, &SubgraphView::full(g), &probe, None)?.scores;
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    Ok(best as u32)
}

fn explain(run: &mut Run, args: ExplainArgs<'_>) -> Outcome {
    let data = load_data(run)?;
    let g = &data.graph;
    let budget = args.budget.unwrap_or(run.cfg.explainer.budget);
    if budget == 0 {
        return Err(Failure::usage("--budget must be at least 1"));
    }
    let spec = args
        .query
        .map(|s| parse_query_spec(s).map_err(|e| Failure::usage(format!("--query: {e}"))))
        .transpose()?;
    let eval_path = args
        .evaluator
        .map_or_else(|| run.produced_by("train-evaluator", "evaluator.json"), Path::to_path_buf);
    let ev = run.load_model(&eval_path, g)?;
    let queries = match spec {
        Some(spec) => {
            let (h, r, t) = spec
                .resolve(g.vocab())
                .map_err(|e| Failure::data(format!("--query: {e}")))?;
            let t = match t {
                Some(t) => t,
                None => top_prediction(&ev, g, h, r)?,
            };
            vec![Query::new(h, r, t)]
        }
        None => data.nonempty_queries(args.split, args.limit.or(run.cfg.max_eval_queries))?,
    };
    let default_net = |file| run.produced_by("train-explainer", file);
    let net = match args.method {
        Method::Raw => Some(args.explainer.map_or_else(|| default_net("explainer.json"), Path::to_path_buf)),
        Method::ParamMask => Some(args.explainer.map_or_else(|| default_net("param_explainer.json"), Path::to_path_buf)),
        Method::InstanceMask => None,
    };
    let net = net.map(|p| run.load_net(&p)).transpose()?;
    let explainer: Box<dyn Explainer + '_> = match (args.method, &net) {
        (Method::Raw, Some(net)) => Box::new(RawExplainer {
            net,
            evaluator: &ev,
            ppr: run.cfg.ppr.clone(),
        }),
        (Method::ParamMask, Some(net)) => Box::new(ParameterizedMaskExplainer { net, evaluator: &ev }),
        _ => Box::new(InstanceMaskExplainer {
            evaluator: &ev,
            config: run.cfg.instance.clone(),
        }),
    };
    let mut out = Vec::with_capacity(queries.len());
    for q in &queries {
        let e = explainer.explain(g, q, budget)?;
        if e.len() > budget {
            return Err(Failure::data(format!(
                "contract violation: explainer `{}` emitted {} edges for budget {budget}",
                explainer.name(),
                e.len()
            )));
        }
        out.push(e);
    }
    write_explanations(&run.output("explanations.jsonl"), &out, g)?;
    Ok(())
}

fn metrics_json(m: &RankingMetrics) -> serde_json::Value {
    json!({
        "queries": m.n_queries,
        "mrr": m.mrr,
        "hits1": m.hits(1),
        "hits3": m.hits(3),
        "hits10": m.hits(10),
    })
}

fn evaluate(run: &mut Run, model: Option<&Path>, split: SplitArg, explanations: Option<&Path>) -> Outcome {
    let data = load_data(run)?;
    let g = &data.graph;
    let path = model.map_or_else(|| run.produced_by("train-backbone", "backbone.json"), Path::to_path_buf);
    let m = run.load_model(&path, g)?;
    let metrics = match explanations {
        Some(p) => {
            run.input(p);
            let records = read_explanations(p)?;
            let mut queries = Vec::with_capacity(records.len());
            let mut views = Vec::with_capacity(records.len());
            for rec in &records {
                let (target, edges) = rec.resolve(g)?;
                let mut ids = Vec::with_capacity(2 * edges.len());
                for t in edges {
                    let e = g
                        .find_edge(t)
                        .ok_or_else(|| Failure::data(format!("explanation edge {t:?} is not in the training graph")))?;
                    ids.push(e);
                    ids.extend(g.inverse_edge(e));
                }
                queries.push(Query::new(target.head, target.relation, target.tail));
                views.push(SubgraphView::from_edges(g, ids)?);
            }
            evaluate_model(&m, Views::PerQuery(&views), &queries, &data.known)?
        }
        None => {
            let queries = data.nonempty_queries(split, run.cfg.max_eval_queries)?;
            evaluate_model(&m, Views::Shared(&SubgraphView::full(g)), &queries, &data.known)?
        }
    };
    run.write_json("metrics.json", &metrics_json(&metrics))
}

fn parse_model_arg(s: &str) -> Outcome<(String, PathBuf)> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => Ok((name.to_owned(), PathBuf::from(path))),
        _ => Err(Failure::usage(format!("--model expects name=checkpoint, got `{s}`"))),
    }
}

fn sweep(run: &mut Run, model_args: &[String], ego: bool) -> Outcome {
    let data = load_data(run)?;
    let mut named = model_args.iter().map(|s| parse_model_arg(s)).collect::<Outcome<Vec<_>>>()?;
    if named.is_empty() {
        named.push(("backbone".to_owned(), run.produced_by("train-backbone", "backbone.json")));
    }
    let mut models = Vec::with_capacity(named.len());
    for (name, path) in &named {
        models.push((name.as_str(), run.load_model(path, &data.graph)?));
    }
    let refs: Vec<(&str, &Model)> = models.iter().map(|(n, m)| (*n, m)).collect();
    let queries = data.nonempty_queries(SplitArg::Test, run.cfg.max_eval_queries)?;
    let report = if ego {
        ego_radius_sweep(&refs, &data.graph, &queries, &data.known, &run.cfg.sweep.radii)?
    } else {
        edge_drop_sweep(
            &refs,
            &data.graph,
            &queries,
            &data.known,
            &run.cfg.sweep.drop_probs,
            run.cfg.seed,
        )?
    };
    report.write_csv(&run.output("sweep.csv"))?;
    Ok(())
}

struct ProtocolArgs<'a> {
    backbone: Option<&'a Path>,
    evaluator: Option<&'a Path>,
    explainer: Option<&'a Path>,
    param_explainer: Option<&'a Path>,
    explainers: &'a [String],
}

fn protocol(run: &mut Run, args: ProtocolArgs<'_>) -> Outcome {
    for name in args.explainers {
        if !EXPLAINERS.contains(&name.as_str()) {
            return Err(Failure::usage(format!(
                "unknown explainer `{name}` (expected one of {})",
                EXPLAINERS.join(", ")
            )));
        }
    }
    let wants = |n: &str| args.explainers.iter().any(|e| e == n);
    let data = load_data(run)?;
    let g = &data.graph;
    let cfg = run.cfg.clone();
    let train_q = data.nonempty_queries(SplitArg::Train, cfg.max_train_queries)?;
    let val_q = data.nonempty_queries(SplitArg::Valid, cfg.max_eval_queries)?;
    let test_q = data.nonempty_queries(SplitArg::Test, cfg.max_eval_queries)?;

    let backbone = match args.backbone {
        Some(p) => run.load_model(p, g)?,
        None => {
            let m = fit_backbone(&cfg, &data, &train_q)?;
            save_checkpoint(&m, &run.output("backbone.json"))?;
            m
        }
    };
    let needs_evaluator = wants("raw") || wants("param_mask") || wants("instance_mask");
    let evaluator = match (args.evaluator, needs_evaluator) {
        (_, false) => None,
        (Some(p), true) => Some(run.load_model(p, g)?),
        (None, true) => {
            let m = fit_evaluator(&cfg, &data, &train_q)?;
            save_checkpoint(&m, &run.output("evaluator.json"))?;
            Some(m)
        }
    };
    let mut nets: Vec<(bool, Option<MaskNet>)> = Vec::new();
    for (name, path, file, without_ppr) in [
        ("raw", args.explainer, "explainer.json", false),
        ("param_mask", args.param_explainer, "param_explainer.json", true),
    ] {
        let net = match (wants(name), path, &evaluator) {
            (false, ..) => None,
            (true, Some(p), _) => Some(run.load_net(p)?),
            (true, None, Some(ev)) => {
                let ppr = if without_ppr { no_ppr(&cfg.ppr) } else { cfg.ppr.clone() };
                let net = fit_explainer(&cfg, &data, ev, &train_q, &ppr)?;
                net.save(&run.output(file))?;
                Some(net)
            }
            (true, None, None) => unreachable!("mask explainers imply an evaluator"),
        };
        nets.push((without_ppr, net));
    }

    let mut arms: Vec<Box<dyn Explainer + '_>> = Vec::new();
    for name in args.explainers {
        let arm: Box<dyn Explainer + '_> = match (name.as_str(), &evaluator) {
            ("full", _) => Box::new(FullGraphExplainer),
            ("empty", _) => Box::new(EmptyExplainer),
            ("raw", Some(ev)) => Box::new(RawExplainer {
                net: nets[0].1.as_ref().expect("trained above"),
                evaluator: ev,
                ppr: cfg.ppr.clone(),
            }),
            ("param_mask", Some(ev)) => Box::new(ParameterizedMaskExplainer {
                net: nets[1].1.as_ref().expect("trained above"),
                evaluator: ev,
            }),
            ("instance_mask", Some(ev)) => Box::new(InstanceMaskExplainer {
                evaluator: ev,
                config: cfg.instance.clone(),
            }),
            _ => unreachable!("explainer names checked above"),
        };
        arms.push(arm);
    }
    let refs: Vec<&dyn Explainer> = arms.iter().map(|a| a.as_ref()).collect();
    let inputs = ProtocolInputs {
        graph: g,
        known: &data.known,
        val_queries: &val_q,
        test_queries: &test_q,
        budgets: &cfg.budgets,
        fine_tune: cfg.fine_tune.clone(),
    };
    let report = run_protocol(&backbone, &refs, &inputs)?;
    report.write(&run.dir)?;
    run.outputs
        .extend(["protocol.csv", "metrics.csv", "protocol.json"].map(String::from));
    Ok(())
}

fn report(run: &mut Run, protocol_dir: Option<&Path>) -> Outcome {
    let dir = protocol_dir.map_or_else(|| run.out.join(default_run_id("protocol", run.seed())), Path::to_path_buf);
    let path = dir.join("protocol.json");
    run.input(&path);
    let rep = ProtocolReport::read_json(&path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    fs::write(run.output("report.csv"), rep.to_csv(false)?)?;
    fs::write(run.output("report_mrr.csv"), mrr_table(&rep))?;
    Ok(())
}

/// One row per explainer, one MRR column per budget. Unbudgeted reference
/// arms repeat their single value across the row.
fn mrr_table(rep: &ProtocolReport) -> String {
    let mut s = String::from("explainer");
    for k in &rep.budgets {
        s.push_str(&format!(",k={k}"));
    }
    s.push('\n');
    let mut seen = Vec::new();
    for r in &rep.rows {
        if seen.contains(&r.explainer) {
            continue;
        }
        seen.push(r.explainer.clone());
        s.push_str(&r.explainer);
        for &k in &rep.budgets {
            let v = rep.row(&r.explainer, Some(k)).or_else(|| rep.row(&r.explainer, None));
            match v {
                Some(row) => s.push_str(&format!(",{:.6}", row.mrr)),
                None => s.push(','),
            }
        }
        s.push('\n');
    }
    s
}
