//! Single-atom srGW dictionary learning.
//!
//! A graph is embedded by solving srGW against the atom `C̄`; the induced
//! target weights `h̄` are its representation. The atom is learned by
//! stochastic projected gradient steps (Adam) on the mean srGW loss, with the
//! couplings held fixed inside each step.

use std::time::Instant;

use log::{info, warn};
use ndarray::{Array1, Array2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{param, Error, Result};
use crate::graph::{max_asymmetry, Graph, GraphDataset};
use crate::kmeans::kmeans;
use crate::solvers::{solve_srfgw, solve_srgw, InitStrategy, SolverConfig};

/// Symmetry tolerance for atom structures.
pub const ATOM_SYMMETRY_TOL: f64 = 1e-12;
/// Trade-off used for attributed graphs when none is configured.
pub const DEFAULT_ALPHA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct DictionaryAtom {
    pub structure: Array2<f64>,
    pub features: Option<Array2<f64>>,
}

impl DictionaryAtom {
    pub fn new(structure: Array2<f64>, features: Option<Array2<f64>>) -> Result<Self> {
        let m = structure.nrows();
        if m == 0 || structure.ncols() != m {
            return Err(Error::Dimension(format!("atom structure is {:?}", structure.dim())));
        }
        if structure.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("atom structure".into()));
        }
        let dev = max_asymmetry(structure.view());
        if dev > ATOM_SYMMETRY_TOL {
            return Err(Error::NotSymmetric(dev));
        }
        if structure.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidInput("atom structure must be nonnegative".into()));
        }
        if let Some(f) = &features {
            if f.nrows() != m {
                return Err(Error::Dimension(format!("atom features have {} rows, expected {m}", f.nrows())));
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("atom features".into()));
            }
        }
        Ok(DictionaryAtom { structure, features })
    }

    pub fn m(&self) -> usize {
        self.structure.nrows()
    }
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub atom_size: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub eval_every: usize,
    pub patience: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub solver: SolverConfig,
    pub seed: u64,
    /// Structure/feature trade-off for attributed datasets.
    pub alpha: Option<f64>,
    /// Start each embedding from the previous coupling of the same graph.
    pub warm_start: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            atom_size: 10,
            batch_size: 16,
            learning_rate: 0.01,
            max_epochs: 100,
            eval_every: 5,
            patience: 2,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            solver: SolverConfig::default(),
            seed: 0,
            alpha: None,
            warm_start: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.atom_size == 0 {
            return Err(param("atom_size", "must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(param("batch_size", "must be at least 1"));
        }
        if self.eval_every == 0 {
            return Err(param("eval_every", "must be at least 1"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(param("learning_rate", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(param("betas", "must lie in [0, 1)"));
        }
        if !(self.adam_eps > 0.0) {
            return Err(param("adam_eps", "must be positive"));
        }
        if let Some(a) = self.alpha {
            if !(0.0..=1.0).contains(&a) {
                return Err(param("alpha", format!("must lie in [0, 1], got {a}")));
            }
        }
        self.solver.validate()
    }
}

#[derive(Debug, Clone)]
pub struct Embedding {
    pub hbar: Array1<f64>,
    pub coupling: Array2<f64>,
    pub loss: f64,
}

/// Projects `graph` onto `atom`. Attributed graphs use the fused objective
/// with `solver_config.alpha` (default [`DEFAULT_ALPHA`]).
pub fn embed(graph: &Graph, atom: &DictionaryAtom, solver_config: &SolverConfig) -> Result<Embedding> {
    let r = match (&graph.features, &atom.features) {
        (None, None) => solve_srgw(
            graph.structure.view(),
            graph.distribution.view(),
            atom.structure.view(),
            solver_config,
        )?,
        (Some(f), Some(fbar)) => solve_srfgw(
            graph.structure.view(),
            f.view(),
            graph.distribution.view(),
            atom.structure.view(),
            fbar.view(),
            solver_config.alpha.unwrap_or(DEFAULT_ALPHA),
            solver_config,
        )?,
        (Some(_), None) => return Err(Error::InvalidInput("graph has features but the atom does not".into())),
        (None, Some(_)) => return Err(Error::InvalidInput("atom has features but the graph does not".into())),
    };
    Ok(Embedding { hbar: r.hbar, coupling: r.coupling, loss: r.loss })
}

fn check_batch(batch: &[(&Graph, &Array2<f64>)], m: usize) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    for (g, t) in batch {
        if t.dim() != (g.n(), m) {
            return Err(Error::Dimension(format!(
                "coupling is {:?}, expected ({}, {m})",
                t.dim(),
                g.n()
            )));
        }
    }
    Ok(())
}

/// `(2/B) Σ_k (C̄ ⊙ h̄_k h̄_kᵀ - T_kᵀ C_k T_k)` at fixed couplings.
pub fn atom_structure_gradient(batch: &[(&Graph, &Array2<f64>)], atom: &DictionaryAtom) -> Result<Array2<f64>> {
    let m = atom.m();
    check_batch(batch, m)?;
    let mut grad = Array2::<f64>::zeros((m, m));
    for (g, t) in batch {
        let hbar = t.sum_axis(Axis(0));
        let tct = t.t().dot(&g.structure).dot(*t);
        Zip::indexed(&mut grad).and(&tct).for_each(|(k, l), acc, &x| {
            *acc += atom.structure[[k, l]] * hbar[k] * hbar[l] - x;
        });
    }
    grad *= 2.0 / batch.len() as f64;
    Ok(grad)
}

/// `(2/B) Σ_k (diag(h̄_k) F̄ - T_kᵀ F_k)` at fixed couplings.
pub fn atom_feature_gradient(batch: &[(&Graph, &Array2<f64>)], atom: &DictionaryAtom) -> Result<Array2<f64>> {
    let m = atom.m();
    check_batch(batch, m)?;
    let fbar = atom
        .features
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("atom has no features".into()))?;
    let mut grad = Array2::<f64>::zeros(fbar.dim());
    for (g, t) in batch {
        let f = g
            .features
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("graph in batch has no features".into()))?;
        if f.ncols() != fbar.ncols() {
            return Err(Error::Dimension(format!("feature dims {} vs {}", f.ncols(), fbar.ncols())));
        }
        let hbar = t.sum_axis(Axis(0));
        let tf = t.t().dot(f);
        Zip::indexed(&mut grad).and(&tf).for_each(|(k, d), acc, &x| {
            *acc += hbar[k] * fbar[[k, d]] - x;
        });
    }
    grad *= 2.0 / batch.len() as f64;
    Ok(grad)
}

/// `max((M + Mᵀ)/2, 0)`.
pub fn project_symmetric_nonneg(m: &Array2<f64>) -> Array2<f64> {
    let mut out = m + &m.t();
    out.mapv_inplace(|v| (0.5 * v).max(0.0));
    out
}

/// Random atom with structure entries drawn from `N(0.5, 0.01)` and features
/// set to k-means centroids of all node features in `dataset`.
pub fn init_atom(m: usize, d: Option<usize>, dataset: &GraphDataset, seed: u64) -> Result<DictionaryAtom> {
    if m == 0 {
        return Err(param("m", "must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.5, 0.1).expect("valid normal");
    let raw = Array2::from_shape_fn((m, m), |_| normal.sample(&mut rng));
    let structure = project_symmetric_nonneg(&raw);
    let features = match d {
        None => None,
        Some(d) => {
            let rows: Vec<_> = dataset.graphs.iter().filter_map(|g| g.features.as_ref()).collect();
            if rows.len() != dataset.len() {
                return Err(Error::InvalidInput("every graph needs features to initialise atom features".into()));
            }
            if rows.iter().any(|f| f.ncols() != d) {
                return Err(Error::Dimension(format!("node features must have {d} columns")));
            }
            let views: Vec<_> = rows.iter().map(|f| f.view()).collect();
            let all = ndarray::concatenate(Axis(0), &views).map_err(|e| Error::Dimension(e.to_string()))?;
            if all.nrows() < m {
                return Err(Error::InvalidInput(format!("{} nodes cannot seed {m} feature centroids", all.nrows())));
            }
            Some(kmeans(all.view(), m, 10, seed)?.centroids)
        }
    };
    DictionaryAtom::new(structure, features)
}

struct Adam {
    m: Array2<f64>,
    v: Array2<f64>,
    t: i32,
}

impl Adam {
    fn new(dim: (usize, usize)) -> Self {
        Adam { m: Array2::zeros(dim), v: Array2::zeros(dim), t: 0 }
    }

    fn step(&mut self, param: &mut Array2<f64>, grad: &Array2<f64>, cfg: &TrainConfig) {
        self.t += 1;
        let (b1, b2) = (cfg.beta1, cfg.beta2);
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        Zip::from(param).and(&mut self.m).and(&mut self.v).and(grad).for_each(|p, m, v, &g| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= cfg.learning_rate * (*m / c1) / ((*v / c2).sqrt() + cfg.adam_eps);
        });
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEntry {
    pub epoch: usize,
    pub eval_loss: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Default)]
pub struct TrainingLog {
    /// Evaluation checkpoints, the first one before any update.
    pub entries: Vec<LogEntry>,
    /// Epoch whose atom was returned.
    pub best_epoch: usize,
    pub failed_embeddings: usize,
    pub skipped_batches: usize,
}

impl TrainingLog {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,eval_loss,wall_ms\n");
        for e in &self.entries {
            s.push_str(&format!("{},{},{:.3}\n", e.epoch, e.eval_loss, e.wall_ms));
        }
        s
    }
}

/// Per-graph solver configuration so that random starts differ across
/// graphs yet stay reproducible.
pub(crate) fn item_config(base: &SolverConfig, index: usize, alpha: Option<f64>) -> SolverConfig {
    let mut cfg = base.clone();
    cfg.seed = base.seed.wrapping_add(index as u64);
    match base.init {
        InitStrategy::OuterRandom(s) => cfg.init = InitStrategy::OuterRandom(s.wrapping_add(index as u64)),
        InitStrategy::RandomAssignment(s) => cfg.init = InitStrategy::RandomAssignment(s.wrapping_add(index as u64)),
        _ => {}
    }
    if alpha.is_some() {
        cfg.alpha = alpha;
    }
    cfg
}

fn mean_loss(dataset: &GraphDataset, atom: &DictionaryAtom, config: &TrainConfig, alpha: Option<f64>) -> (f64, usize) {
    let losses: Vec<Option<f64>> = dataset
        .graphs
        .par_iter()
        .enumerate()
        .map(|(i, g)| embed(g, atom, &item_config(&config.solver, i, alpha)).ok().map(|e| e.loss))
        .collect();
    let ok: Vec<f64> = losses.iter().flatten().copied().collect();
    let failed = losses.len() - ok.len();
    if ok.is_empty() {
        (f64::INFINITY, failed)
    } else {
        (ok.iter().sum::<f64>() / ok.len() as f64, failed)
    }
}

/// Learns one atom by stochastic projected Adam steps with early stopping on
/// the full-dataset mean loss. Returns the best evaluated atom.
pub fn train_dictionary(dataset: &GraphDataset, config: &TrainConfig) -> Result<(DictionaryAtom, TrainingLog)> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::InvalidInput("dataset is empty".into()));
    }
    let attributed = dataset.graphs[0].features.is_some();
    if dataset.graphs.iter().any(|g| g.features.is_some() != attributed) {
        return Err(Error::InvalidInput("either all graphs or none must carry features".into()));
    }
    let d = dataset.graphs[0].features.as_ref().map(|f| f.ncols());
    let alpha = attributed.then(|| config.alpha.or(config.solver.alpha).unwrap_or(DEFAULT_ALPHA));
    let start = Instant::now();
    let mut atom = init_atom(config.atom_size, d, dataset, config.seed)?;
    let m = atom.m();
    let mut adam_s = Adam::new((m, m));
    let mut adam_f = atom.features.as_ref().map(|f| Adam::new(f.dim()));
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut warm: Vec<Option<Array2<f64>>> = vec![None; dataset.len()];
    let mut order: Vec<usize> = (0..dataset.len()).collect();

    let mut log = TrainingLog::default();
    let (loss0, failed0) = mean_loss(dataset, &atom, config, alpha);
    log.failed_embeddings += failed0;
    log.entries.push(LogEntry { epoch: 0, eval_loss: loss0, wall_ms: start.elapsed().as_secs_f64() * 1e3 });
    let mut best = (loss0, atom.clone(), 0usize);
    let mut stale = 0;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let results: Vec<(usize, Result<Embedding>)> = chunk
                .par_iter()
                .map(|&i| {
                    let mut cfg = item_config(&config.solver, i, alpha);
                    if config.warm_start {
                        if let Some(t) = &warm[i] {
                            cfg.init = InitStrategy::Given(t.clone());
                        }
                    }
                    (i, embed(&dataset.graphs[i], &atom, &cfg))
                })
                .collect();
            let mut items = Vec::with_capacity(results.len());
            for (i, r) in results {
                match r {
                    Ok(e) => items.push((i, e)),
                    Err(err) => {
                        warn!("embedding of graph {i} failed: {err}");
                        log.failed_embeddings += 1;
                    }
                }
            }
            if items.is_empty() {
                log.skipped_batches += 1;
                continue;
            }
            let batch: Vec<(&Graph, &Array2<f64>)> =
                items.iter().map(|(i, e)| (&dataset.graphs[*i], &e.coupling)).collect();
            let mut gs = atom_structure_gradient(&batch, &atom)?;
            if let Some(a) = alpha {
                gs *= a;
            }
            let gf = match alpha {
                Some(a) => Some(atom_feature_gradient(&batch, &atom)? * (1.0 - a)),
                None => None,
            };
            adam_s.step(&mut atom.structure, &gs, config);
            atom.structure = project_symmetric_nonneg(&atom.structure);
            if let (Some(f), Some(g), Some(opt)) = (atom.features.as_mut(), gf.as_ref(), adam_f.as_mut()) {
                opt.step(f, g, config);
            }
            if config.warm_start {
                for (i, e) in items {
                    warm[i] = Some(e.coupling);
                }
            }
        }

        if epoch % config.eval_every == 0 || epoch == config.max_epochs {
            let (loss, failed) = mean_loss(dataset, &atom, config, alpha);
            log.failed_embeddings += failed;
            log.entries.push(LogEntry { epoch, eval_loss: loss, wall_ms: start.elapsed().as_secs_f64() * 1e3 });
            info!("epoch {epoch}: mean srGW loss {loss:.6e}");
            if loss < best.0 {
                best = (loss, atom.clone(), epoch);
                stale = 0;
            } else {
                stale += 1;
                if stale >= config.patience {
                    info!("no improvement over {stale} evaluations, stopping at epoch {epoch}");
                    break;
                }
            }
        }
    }
    log.best_epoch = best.2;
    Ok((best.1, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use ndarray::array;
    use rand::Rng;

    fn random_graph(rng: &mut ChaCha8Rng, n: usize, d: Option<usize>) -> Graph {
        let a = Array2::from_shape_fn((n, n), |_| rng.random::<f64>());
        let g = Graph::new(&a + &a.t(), oracle::random_simplex(rng, n), None).unwrap();
        match d {
            Some(d) => g.with_features(Array2::from_shape_fn((n, d), |_| rng.random::<f64>())).unwrap(),
            None => g,
        }
    }

    fn random_atom(rng: &mut ChaCha8Rng, m: usize, d: Option<usize>) -> DictionaryAtom {
        let a = Array2::from_shape_fn((m, m), |_| rng.random::<f64>());
        let f = d.map(|d| Array2::from_shape_fn((m, d), |_| rng.random::<f64>()));
        DictionaryAtom::new(project_symmetric_nonneg(&a), f).unwrap()
    }

    #[test]
    fn projection_examples() {
        let p = project_symmetric_nonneg(&array![[1.0, -2.0], [0.0, 3.0]]);
        assert_eq!(p, array![[1.0, 0.0], [0.0, 3.0]]);
        let s = array![[0.0, 2.0], [2.0, 1.0]];
        assert_eq!(project_symmetric_nonneg(&s), s);
        assert_eq!(project_symmetric_nonneg(&p), p);
    }

    #[test]
    fn identity_embedding() {
        let atom = DictionaryAtom::new(array![[0.0, 1.0, 0.5], [1.0, 0.0, 1.0], [0.5, 1.0, 0.0]], None).unwrap();
        let g = Graph::uniform(atom.structure.clone()).unwrap();
        let cfg = SolverConfig { init: InitStrategy::Given(Array2::from_diag(&g.distribution)), ..Default::default() };
        let e = embed(&g, &atom, &cfg).unwrap();
        assert_eq!(e.loss, 0.0);
        assert!((&e.hbar - &g.distribution).iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn submatrix_embedding_stays_in_block() {
        let atom = DictionaryAtom::new(array![[0.0, 1.0, 0.5], [1.0, 0.0, 1.0], [0.5, 1.0, 0.0]], None).unwrap();
        let g = Graph::uniform(array![[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let cfg = SolverConfig { init: InitStrategy::Given(array![[0.5, 0.0, 0.0], [0.0, 0.5, 0.0]]), ..Default::default() };
        let e = embed(&g, &atom, &cfg).unwrap();
        assert!(e.loss <= 1e-10);
        assert_eq!(e.hbar[2], 0.0);
    }

    #[test]
    fn isomorphic_graphs_embed_alike() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let atom = random_atom(&mut rng, 4, None);
        let g = random_graph(&mut rng, 5, None);
        let perm = [2, 0, 4, 1, 3];
        let gp = g.permuted(&perm);
        let t0 = oracle::random_coupling(&mut rng, &g.distribution, 4);
        let t0p = Array2::from_shape_fn((5, 4), |(i, k)| t0[[perm[i], k]]);
        let a = embed(&g, &atom, &SolverConfig { init: InitStrategy::Given(t0), ..Default::default() }).unwrap();
        let b = embed(&gp, &atom, &SolverConfig { init: InitStrategy::Given(t0p), ..Default::default() }).unwrap();
        assert!((a.loss - b.loss).abs() < 1e-9);
    }

    #[test]
    fn feature_presence_must_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let plain = random_atom(&mut rng, 3, None);
        let attr = random_atom(&mut rng, 3, Some(2));
        let g = random_graph(&mut rng, 4, None);
        let gf = random_graph(&mut rng, 4, Some(2));
        let cfg = SolverConfig::default();
        assert!(embed(&g, &attr, &cfg).is_err());
        assert!(embed(&gf, &plain, &cfg).is_err());
        assert!(embed(&gf, &attr, &cfg).is_ok());
    }

    #[test]
    fn structure_gradient_fixed_point_and_averaging() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let atom = random_atom(&mut rng, 4, None);
        let h = oracle::random_simplex(&mut rng, 4);
        let g = Graph::new(atom.structure.clone(), h.clone(), None).unwrap();
        let t = Array2::from_diag(&h);
        let grad = atom_structure_gradient(&[(&g, &t)], &atom).unwrap();
        assert!(grad.iter().all(|v| v.abs() < 1e-15));

        let other = random_graph(&mut rng, 5, None);
        let t2 = oracle::random_coupling(&mut rng, &other.distribution, 4);
        let single = atom_structure_gradient(&[(&other, &t2)], &atom).unwrap();
        let double = atom_structure_gradient(&[(&other, &t2), (&other, &t2)], &atom).unwrap();
        assert!((&single - &double).iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn structure_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let atom = random_atom(&mut rng, 3, None);
        let graphs: Vec<Graph> = (0..3).map(|i| random_graph(&mut rng, 3 + i, None)).collect();
        let ts: Vec<Array2<f64>> = graphs.iter().map(|g| oracle::random_coupling(&mut rng, &g.distribution, 3)).collect();
        let batch: Vec<_> = graphs.iter().zip(ts.iter()).collect();
        let grad = atom_structure_gradient(&batch, &atom).unwrap();
        let fd = oracle::finite_difference(&atom.structure, 1e-6, |cbar| {
            batch.iter().map(|(g, t)| oracle::loss(g.structure.view(), cbar.view(), t.view())).sum::<f64>()
                / batch.len() as f64
        });
        assert!(oracle::relative_error(&grad, &fd) <= 1e-5);
    }

    #[test]
    fn structure_gradient_vanishes_off_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let atom = random_atom(&mut rng, 4, None);
        let g = random_graph(&mut rng, 3, None);
        let mut t = oracle::random_coupling(&mut rng, &g.distribution, 3);
        t.push_column(Array1::zeros(3).view()).unwrap();
        let grad = atom_structure_gradient(&[(&g, &t)], &atom).unwrap();
        assert!(grad.row(3).iter().chain(grad.column(3).iter()).all(|&v| v == 0.0));
    }

    #[test]
    fn feature_gradient_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let atom = random_atom(&mut rng, 3, Some(2));
        let h = oracle::random_simplex(&mut rng, 3);
        let g = Graph::new(atom.structure.clone(), h.clone(), atom.features.clone()).unwrap();
        let t = Array2::from_diag(&h);
        let grad = atom_feature_gradient(&[(&g, &t)], &atom).unwrap();
        assert!(grad.iter().all(|v| v.abs() < 1e-15));

        let other = random_graph(&mut rng, 4, Some(2));
        let mut t2 = oracle::random_coupling(&mut rng, &other.distribution, 2);
        t2.push_column(Array1::zeros(4).view()).unwrap();
        let grad = atom_feature_gradient(&[(&other, &t2)], &atom).unwrap();
        assert!(grad.row(2).iter().all(|&v| v == 0.0));
        assert!(atom_feature_gradient(&[(&random_graph(&mut rng, 4, None), &t2)], &atom).is_err());
    }

    #[test]
    fn feature_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let atom = random_atom(&mut rng, 3, Some(2));
        let graphs: Vec<Graph> = (0..2).map(|i| random_graph(&mut rng, 4 + i, Some(2))).collect();
        let ts: Vec<Array2<f64>> = graphs.iter().map(|g| oracle::random_coupling(&mut rng, &g.distribution, 3)).collect();
        let batch: Vec<_> = graphs.iter().zip(ts.iter()).collect();
        let grad = atom_feature_gradient(&batch, &atom).unwrap();
        let fbar = atom.features.clone().unwrap();
        let fd = oracle::finite_difference(&fbar, 1e-6, |fb| {
            batch
                .iter()
                .map(|(g, t)| {
                    let m = oracle::pairwise_sq_distances(g.features.as_ref().unwrap().view(), fb.view());
                    crate::gw::frobenius(m.view(), t.view())
                })
                .sum::<f64>()
                / batch.len() as f64
        });
        assert!(oracle::relative_error(&grad, &fd) <= 1e-5);
    }

    #[test]
    fn init_atom_properties() {
        let ds = GraphDataset::new(vec![Graph::uniform(Array2::zeros((2, 2))).unwrap()], None).unwrap();
        let a = init_atom(30, None, &ds, 4).unwrap();
        let b = init_atom(30, None, &ds, 4).unwrap();
        assert_eq!(a, b);
        assert!(DictionaryAtom::new(a.structure.clone(), None).is_ok());
        let mean = a.structure.mean().unwrap();
        assert!((0.45..=0.55).contains(&mean), "{mean}");
    }

    #[test]
    fn init_atom_features_from_centroids() {
        let g = Graph::uniform(Array2::zeros((4, 4)))
            .unwrap()
            .with_features(array![[0.0], [0.1], [5.0], [5.1]])
            .unwrap();
        let ds = GraphDataset::new(vec![g], None).unwrap();
        let a = init_atom(2, Some(1), &ds, 0).unwrap();
        let mut f: Vec<f64> = a.features.unwrap().iter().copied().collect();
        f.sort_by(f64::total_cmp);
        assert!((f[0] - 0.05).abs() < 1e-12 && (f[1] - 5.05).abs() < 1e-12);
    }

    #[test]
    fn zero_gradient_leaves_atom_unchanged() {
        let cfg = TrainConfig::default();
        let mut p = array![[0.3, 0.1], [0.1, 0.7]];
        let before = p.clone();
        Adam::new((2, 2)).step(&mut p, &Array2::zeros((2, 2)), &cfg);
        assert_eq!(p, before);
    }

    #[test]
    fn training_single_graph_improves() {
        let c = array![[0.0, 1.0, 1.0, 0.0], [1.0, 0.0, 1.0, 0.0], [1.0, 1.0, 0.0, 1.0], [0.0, 0.0, 1.0, 0.0]];
        let ds = GraphDataset::new(vec![Graph::uniform(c).unwrap()], None).unwrap();
        let cfg = TrainConfig { atom_size: 4, batch_size: 1, max_epochs: 40, seed: 1, ..Default::default() };
        let (atom, log) = train_dictionary(&ds, &cfg).unwrap();
        assert!(log.entries.last().unwrap().eval_loss <= log.entries[0].eval_loss);
        assert!(DictionaryAtom::new(atom.structure.clone(), None).is_ok());
        let (_, again) = train_dictionary(&ds, &cfg).unwrap();
        let losses = |l: &TrainingLog| l.entries.iter().map(|e| (e.epoch, e.eval_loss)).collect::<Vec<_>>();
        assert_eq!(losses(&log), losses(&again));
        assert!(log.to_csv().starts_with("epoch,eval_loss,wall_ms\n"));
    }

    #[test]
    fn training_attributed_dataset() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let graphs: Vec<Graph> = (0..4).map(|_| random_graph(&mut rng, 5, Some(2))).collect();
        let ds = GraphDataset::new(graphs, None).unwrap();
        let cfg = TrainConfig { atom_size: 3, batch_size: 2, max_epochs: 10, alpha: Some(0.5), ..Default::default() };
        let (atom, log) = train_dictionary(&ds, &cfg).unwrap();
        assert!(atom.features.is_some());
        assert!(log.entries.len() >= 2);
        let e = embed(&ds.graphs[0], &atom, &SolverConfig { alpha: Some(0.5), ..Default::default() }).unwrap();
        assert!(e.loss.is_finite());
    }

    #[test]
    fn train_config_validation() {
        let ds = GraphDataset::new(vec![Graph::uniform(Array2::zeros((2, 2))).unwrap()], None).unwrap();
        for bad in [
            TrainConfig { atom_size: 0, ..Default::default() },
            TrainConfig { batch_size: 0, ..Default::default() },
            TrainConfig { eval_every: 0, ..Default::default() },
            TrainConfig { learning_rate: 0.0, ..Default::default() },
        ] {
            assert!(train_dictionary(&ds, &bad).is_err());
        }
    }
}
