use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use hawkes_adoption::baselines::DEFAULT_MEMORY;
use hawkes_adoption::estimate::{
    cross_validate, fit_all, Compensator, Corpus, FitConfig, FitResult,
};
use hawkes_adoption::evaluate::{
    aic, avg_test_loglik, detect_intervention, param_mse, win_percentages, Better, DetectConfig,
    HawkesModel, PoissonModel, RecencyModel, Scorer, UserScore, WeibullModel,
};
use hawkes_adoption::io;
use hawkes_adoption::network::{
    build_mention_network, kronecker_generate, FirstEdgeTimes, KroneckerSeed, Mention, Network,
};
use hawkes_adoption::simulate::{simulate as run_simulation, SimConfig};
use hawkes_adoption::synthetic::draw_params;
use hawkes_adoption::{EventLog64, ModelParams64};

use crate::fail::Failure;
use crate::{
    CompensatorArg, DataArgs, DetectArgs, EvaluateArgs, FitArgs, GenParamsArgs, IngestArgs,
    SimulateArgs, SynthNetArgs,
};

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Config(format!("cannot open {}: {e}", path.display())))
}

fn create(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    match path {
        None => Ok(Box::new(BufWriter::new(std::io::stdout().lock()))),
        Some(p) => File::create(p)
            .map(|f| Box::new(BufWriter::new(f)) as Box<dyn Write>)
            .map_err(|e| Failure::Config(format!("cannot create {}: {e}", p.display()))),
    }
}

fn finish(mut w: Box<dyn Write>) -> Result<(), Failure> {
    w.flush().map_err(Failure::config)
}

fn write_err(e: impl std::fmt::Display) -> Failure {
    Failure::Config(format!("write failed: {e}"))
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, Failure> {
    if jobs == Some(0) {
        return Err(Failure::config("--jobs must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(Failure::config)
}

fn load_network(path: &Path) -> Result<(Network, Option<FirstEdgeTimes<f64>>), Failure> {
    io::read_network(open(path)?)
        .and_then(|f| f.into_network(None))
        .map_err(|e| Failure::data(path, e))
}

fn load_params(path: &Path) -> Result<ModelParams64, Failure> {
    io::read_params(open(path)?).map_err(|e| Failure::data(path, e))
}

/// Events, graph and split points shared by fit, evaluate and detect.
struct Data {
    net: Network,
    gate: Option<FirstEdgeTimes<f64>>,
    log: EventLog64,
    train_end: f64,
    test_end: f64,
}

impl Data {
    fn load(args: &DataArgs) -> Result<Self, Failure> {
        let (net, gate) = load_network(&args.network)?;
        let file =
            io::read_events(open(&args.events)?).map_err(|e| Failure::data(&args.events, e))?;
        let end = file.end.or(args.test_end).unwrap_or_else(|| {
            file.events
                .iter()
                .map(|e| e.time)
                .fold(0.0, f64::max)
                .next_up()
        });
        let log = file
            .into_log(Some(net.num_users()), args.products, None, Some(end))
            .map_err(|e| Failure::data(&args.events, e))?;
        let test_end = args.test_end.unwrap_or(log.end());
        let train_end = args.train_end.unwrap_or(test_end);
        if !(log.start() < train_end && train_end <= test_end && test_end <= log.end()) {
            return Err(Failure::Config(format!(
                "need {} < --train-end ({train_end}) <= --test-end ({test_end}) <= {}",
                log.start(),
                log.end()
            )));
        }
        let log = log.truncate(test_end).map_err(Failure::from_lib)?;
        Ok(Data {
            net,
            gate,
            log,
            train_end,
            test_end,
        })
    }

    fn train_log(&self) -> Result<EventLog64, Failure> {
        self.log.truncate(self.train_end).map_err(Failure::from_lib)
    }

    fn hawkes(&self, params: ModelParams64, floor: f64) -> Result<HawkesModel<f64>, Failure> {
        if params.num_products() != self.log.num_products() {
            return Err(Failure::Data(format!(
                "parameters cover {} products, events have {}",
                params.num_products(),
                self.log.num_products()
            )));
        }
        let model = HawkesModel::new(params, self.net.clone(), floor).map_err(Failure::from_lib)?;
        Ok(match &self.gate {
            Some(g) => model.with_gate(g.clone()),
            None => model,
        })
    }
}

pub fn synth_net(a: SynthNetArgs) -> Result<(), Failure> {
    let [t00, t01, t10, t11] = a.theta[..] else {
        return Err(Failure::Config(format!(
            "--theta needs 4 comma-separated values, got {}",
            a.theta.len()
        )));
    };
    let seed = KroneckerSeed::new([[t00, t01], [t10, t11]], a.k).map_err(Failure::config)?;
    let net = kronecker_generate(&seed, a.seed).map_err(Failure::config)?;
    let mut w = create(a.out.as_deref())?;
    io::write_network(&mut w, &net, None).map_err(write_err)?;
    finish(w)?;
    eprintln!("nodes={} edges={}", net.num_users(), net.num_edges());
    Ok(())
}

pub fn gen_params(a: GenParamsArgs) -> Result<(), Failure> {
    let (net, _) = load_network(&a.network)?;
    let params = draw_params::<f64>(
        net.num_users(),
        a.products,
        a.omega,
        a.baseline_fraction,
        a.seed,
    )
    .map_err(Failure::config)?;
    let mut w = create(a.out.as_deref())?;
    io::write_params(&mut w, &params).map_err(write_err)?;
    finish(w)
}

pub fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    let (net, _) = load_network(&a.network)?;
    let params = load_params(&a.params)?;
    if params.num_users() != net.num_users() {
        return Err(Failure::Data(format!(
            "{} parameter entries for {} network users",
            params.num_users(),
            net.num_users()
        )));
    }
    let mut cfg = SimConfig::new(a.start, a.end, a.seed);
    if let Some(m) = a.max_events {
        cfg = cfg.with_max_events(m);
    }
    let sim = run_simulation(&net, &params, &cfg).map_err(Failure::from_lib)?;
    let mut w = create(a.out.as_deref())?;
    io::write_events(&mut w, &sim.log).map_err(write_err)?;
    finish(w)?;
    let r = &sim.report;
    eprintln!(
        "events={} proposals={} rejections={} bound_violations={} truncated={} branching_proxy={:.4}",
        sim.log.len(),
        r.proposals,
        r.rejections,
        r.bound_violations,
        r.truncated,
        r.branching_proxy
    );
    Ok(())
}

pub fn fit(a: FitArgs) -> Result<(), Failure> {
    let data = Data::load(&a.data)?;
    let train = data.train_log()?;
    let mut corpus = Corpus::new(&train, &data.net).map_err(Failure::from_lib)?;
    if let Some(g) = &data.gate {
        corpus = corpus.with_gate(g);
    }
    let cfg = FitConfig {
        beta: a.beta_grid.first().copied().unwrap_or(10.0),
        beta_grid: a.beta_grid.clone(),
        omega_grid: a.omega_grid.clone(),
        intensity_floor: a.intensity_floor,
        max_iterations: a.max_iterations,
        tolerance: a.tolerance,
        compensator: match a.compensator {
            CompensatorArg::Affine => Compensator::Affine,
            CompensatorArg::Exact => Compensator::Exact,
        },
    };
    cfg.validate().map_err(Failure::config)?;
    let pool = pool(a.jobs)?;

    let (result, scores): (FitResult<f64>, Vec<(f64, f64, f64)>) =
        if cfg.beta_grid.len() == 1 && cfg.omega_grid.len() == 1 {
            let fit = pool
                .install(|| fit_all(&corpus, &cfg, cfg.omega_grid[0]))
                .map_err(Failure::from_lib)?;
            (fit, Vec::new())
        } else {
            let cv = pool
                .install(|| cross_validate(&corpus, &cfg))
                .map_err(Failure::from_lib)?;
            eprintln!(
                "selected beta={} omega={} ({} users without validation events)",
                cv.best_beta, cv.best_omega, cv.users_without_validation_events
            );
            let scores = cv
                .scores
                .iter()
                .map(|s| (s.beta, s.omega, s.validation_loglik))
                .collect();
            (cv.fit, scores)
        };

    let mut w = create(a.out.as_deref())?;
    io::write_params(&mut w, &result.params).map_err(write_err)?;
    finish(w)?;
    if let Some(path) = &a.cv_report {
        let mut w = create(Some(path))?;
        writeln!(w, "beta,omega,validation_loglik").map_err(write_err)?;
        for (beta, omega, ll) in scores {
            writeln!(w, "{beta},{omega},{ll}").map_err(write_err)?;
        }
        finish(w)?;
    }
    let unconverged = result.unconverged().len();
    eprintln!(
        "fitted {} users x {} products; {} subproblems unconverged; {} training events",
        train.num_users(),
        train.num_products(),
        unconverged,
        train.len()
    );
    Ok(())
}

fn build_model(
    name: &str,
    data: &Data,
    params: Option<&PathBuf>,
    floor: f64,
    memory: usize,
) -> Result<Box<dyn Scorer<f64>>, Failure> {
    let (log, start, end) = (&data.log, data.log.start(), data.train_end);
    Ok(match name {
        "hawkes" => {
            let path = params.ok_or_else(|| Failure::config("model `hawkes` needs --params"))?;
            Box::new(data.hawkes(load_params(path)?, floor)?)
        }
        "poisson" => {
            Box::new(PoissonModel::fit(log, start, end, floor).map_err(Failure::from_lib)?)
        }
        "weibull" => {
            Box::new(WeibullModel::fit(log, start, end, floor).map_err(Failure::from_lib)?)
        }
        "recency" => {
            Box::new(RecencyModel::fit(log, start, end, memory).map_err(Failure::from_lib)?)
        }
        other => {
            return Err(Failure::Config(format!(
                "unknown model `{other}` (expected hawkes, poisson, weibull or recency)"
            )))
        }
    })
}

const METRICS: [(&str, Better); 3] = [
    ("prediction_probability", Better::Higher),
    ("avg_test_loglik", Better::Higher),
    ("aic", Better::Lower),
];

pub fn evaluate(a: EvaluateArgs) -> Result<(), Failure> {
    let data = Data::load(&a.data)?;
    if data.train_end >= data.test_end {
        return Err(Failure::config(
            "evaluation needs --train-end before --test-end",
        ));
    }
    let mut names: Vec<&str> = Vec::new();
    for m in &a.models {
        if !names.contains(&m.as_str()) {
            names.push(m);
        }
    }
    if names.is_empty() {
        return Err(Failure::config("--models is empty"));
    }
    if a.memory == 0 {
        return Err(Failure::config("--memory must be positive"));
    }
    let models = names
        .iter()
        .map(|n| build_model(n, &data, a.params.as_ref(), a.intensity_floor, a.memory))
        .collect::<Result<Vec<_>, _>>()?;

    let pool = pool(a.jobs)?;
    let (start, train_end, test_end) = (data.log.start(), data.train_end, data.test_end);
    let scored: Vec<(Vec<UserScore<f64>>, Vec<UserScore<f64>>)> = pool
        .install(|| {
            use rayon::prelude::*;
            models
                .par_iter()
                .map(|m| {
                    Ok((
                        m.score(&data.log, start, train_end)?,
                        m.score(&data.log, train_end, test_end)?,
                    ))
                })
                .collect::<hawkes_adoption::Result<_>>()
        })
        .map_err(Failure::from_lib)?;

    let users = data.log.num_users();
    // table[metric][user][model]
    let mut table = vec![vec![vec![None; models.len()]; users]; METRICS.len()];
    for (m, (model, (train, test))) in models.iter().zip(&scored).enumerate() {
        for u in 0..users {
            table[0][u][m] = test[u].prediction_probability();
            table[1][u][m] = test[u].avg_loglik();
            table[2][u][m] = model
                .num_params(u)
                .zip(train[u].avg_loglik())
                .map(|(np, l)| aic(np, l));
        }
    }

    let mut w = create(a.out.as_deref())?;
    writeln!(w, "user,model,metric,value").map_err(write_err)?;
    for u in 0..users {
        for (m, name) in names.iter().enumerate() {
            for (k, (metric, _)) in METRICS.iter().enumerate() {
                if let Some(v) = table[k][u][m] {
                    writeln!(w, "{u},{name},{metric},{v}").map_err(write_err)?;
                }
            }
        }
    }
    for (m, name) in names.iter().enumerate() {
        let test = &scored[m].1;
        let events: usize = test.iter().map(|s| s.events).sum();
        let correct: usize = test.iter().map(|s| s.correct).sum();
        if events > 0 {
            writeln!(
                w,
                "all,{name},prediction_probability,{}",
                correct as f64 / events as f64
            )
            .map_err(write_err)?;
        }
        if let Some(v) = avg_test_loglik(test) {
            writeln!(w, "all,{name},avg_test_loglik,{v}").map_err(write_err)?;
        }
        let aics: Vec<f64> = table[2].iter().filter_map(|row| row[m]).collect();
        if !aics.is_empty() {
            writeln!(
                w,
                "all,{name},mean_aic,{}",
                aics.iter().sum::<f64>() / aics.len() as f64
            )
            .map_err(write_err)?;
        }
    }
    for (k, (metric, better)) in METRICS.iter().enumerate() {
        if table[k].iter().all(|row| row.iter().all(Option::is_none)) {
            continue;
        }
        let pct = win_percentages(&table[k], *better);
        for (name, p) in names.iter().zip(pct) {
            writeln!(w, "all,{name},win_pct_{metric},{p}").map_err(write_err)?;
        }
    }
    if let (Some(truth), Some(est)) = (&a.true_params, &a.params) {
        let mse = param_mse(&load_params(truth)?, &load_params(est)?)
            .map_err(|e| Failure::data(truth, e))?;
        writeln!(w, "all,hawkes,param_mse,{mse}").map_err(write_err)?;
    }
    finish(w)
}

pub fn detect(a: DetectArgs) -> Result<(), Failure> {
    let data = Data::load(&a.data)?;
    if a.model == "recency" {
        return Err(Failure::config("detection needs a continuous-time model"));
    }
    let model = build_model(
        &a.model,
        &data,
        a.params.as_ref(),
        a.intensity_floor,
        DEFAULT_MEMORY,
    )?;
    let cfg = DetectConfig {
        window_length: a.window,
        drop_threshold: a.threshold,
        min_history: a.min_history,
    };
    let found = pool(a.jobs)?
        .install(|| detect_intervention(model.as_ref(), &data.log, data.train_end, &cfg))
        .map_err(Failure::from_lib)?;
    let mut w = create(a.out.as_deref())?;
    writeln!(w, "window_start,window_end,events,avg_loglik,flagged,onset").map_err(write_err)?;
    for win in &found.windows {
        let value = win.value.map(|v| v.to_string()).unwrap_or_default();
        let onset = found.changes.contains(&win.start);
        writeln!(
            w,
            "{},{},{},{value},{},{onset}",
            win.start, win.end, win.events, win.flagged
        )
        .map_err(write_err)?;
    }
    finish(w)?;
    eprintln!("{} change points", found.changes.len());
    Ok(())
}

fn write_symbols(path: &Path, ids: &[String]) -> Result<(), Failure> {
    let file = File::create(path)
        .map_err(|e| Failure::Config(format!("cannot create {}: {e}", path.display())))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(["index", "id"]).map_err(write_err)?;
    for (i, id) in ids.iter().enumerate() {
        w.write_record([i.to_string().as_str(), id])
            .map_err(write_err)?;
    }
    w.flush().map_err(write_err)
}

pub fn ingest(a: IngestArgs) -> Result<(), Failure> {
    let mentions = io::read_labeled(open(&a.mentions)?, "mentioner", "mentioned")
        .map_err(|e| Failure::data(&a.mentions, e))?;
    let raw = io::read_labeled(open(&a.events)?, "user", "product")
        .map_err(|e| Failure::data(&a.events, e))?;
    let start = a.active_from.unwrap_or(0.0);
    if let Some(to) = a.active_to {
        if !(to > start) {
            return Err(Failure::config("--active-to must exceed --active-from"));
        }
    }
    let in_window = |t: f64| t >= start && a.active_to.is_none_or(|to| t < to);
    let kept: Vec<_> = raw.iter().filter(|r| in_window(r.time)).collect();

    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &kept {
        *counts.entry(&r.first).or_default() += 1;
    }
    let active = |id: &str| {
        a.min_events
            .is_none_or(|n| counts.get(id).copied().unwrap_or(0) >= n)
    };
    let mut user_ids: BTreeSet<&str> = kept
        .iter()
        .map(|r| r.first.as_str())
        .filter(|id| active(id))
        .collect();
    if a.min_events.is_none() {
        for m in &mentions {
            user_ids.insert(&m.first);
            user_ids.insert(&m.second);
        }
    }
    let users: Vec<String> = user_ids.iter().map(|s| s.to_string()).collect();
    let index: BTreeMap<&str, usize> = user_ids.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let products: Vec<String> = kept
        .iter()
        .filter(|r| index.contains_key(r.first.as_str()))
        .map(|r| r.second.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let product_index: BTreeMap<&str, usize> = products
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();

    let links: Vec<Mention<f64>> = mentions
        .iter()
        .filter_map(|m| {
            Some(Mention {
                mentioner: *index.get(m.first.as_str())?,
                mentioned: *index.get(m.second.as_str())?,
                time: m.time,
            })
        })
        .collect();
    let graph =
        build_mention_network(users.len(), &links).map_err(|e| Failure::data(&a.mentions, e))?;

    let events: Vec<_> = kept
        .iter()
        .filter_map(|r| {
            Some(hawkes_adoption::Event64::new(
                *index.get(r.first.as_str())?,
                product_index[r.second.as_str()],
                r.time,
            ))
        })
        .collect();
    let end = a.active_to.unwrap_or_else(|| {
        events
            .iter()
            .map(|e| e.time)
            .fold(start, f64::max)
            .next_up()
    });
    let log = EventLog64::new(users.len(), products.len(), start, end, events)
        .map_err(|e| Failure::data(&a.events, e))?;

    let mut w = create(Some(&a.out_network))?;
    io::write_network(
        &mut w,
        &graph.network,
        a.gate_first_mention.then_some(&graph.first_edge_time),
    )
    .map_err(write_err)?;
    finish(w)?;
    let mut w = create(Some(&a.out_events))?;
    io::write_events(&mut w, &log).map_err(write_err)?;
    finish(w)?;
    write_symbols(&a.out_users, &users)?;
    write_symbols(&a.out_products, &products)?;
    eprintln!(
        "users={} products={} events={} edges={} self_mentions_ignored={}",
        users.len(),
        products.len(),
        log.len(),
        graph.network.num_edges(),
        graph.ignored_self_mentions
    );
    Ok(())
}
