//! One function per subcommand. Each resolves its settings, echoes them,
//! then does the work and prints JSON lines on stdout.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use covext::io;
use covext::study::{run_study, StudyConfig};
use covext::wiener::IdentifyConfig;
use covext::{
    biased_cov, cone_test_toeplitz_1d, grid_positivity_test, hard_weight_from_soft, singular_free_bound,
    soft_weight_from_hard, sufficient_hard_existence, unbiased_cov, DataRecord, DualSolution, Error, GridSpec,
    HermitianSeq, IndexSet, Mode, SolverConfig, WeightMatrix,
};
use serde_json::{json, Value};

use crate::settings::Settings;
use crate::specs::{Direction, Estimator, Extents, Prior, WeightSpec};
use crate::{
    AnalyzeArgs, CliError, ConvertWeightArgs, EstimateArgs, SimulateArgs, SolveArgs, TextureAnalyzeArgs,
    TextureSynthArgs,
};

type Res<T = ()> = Result<T, CliError>;

fn emit(v: &Value) {
    println!("{v}");
}

fn ctx<T>(r: covext::Result<T>, what: impl std::fmt::Display) -> Res<T> {
    r.map_err(|e| CliError::from(e).with_context(what))
}

fn atoms_json(sol: &DualSolution) -> Value {
    sol.atoms.iter().map(|a| json!({ "theta": a.theta, "mass": a.mass })).collect()
}

fn kkt_json(sol: &DualSolution) -> Value {
    let k = &sol.kkt;
    json!({
        "dual_feasibility": k.dual_feasibility,
        "complementarity": k.complementarity,
        "moment_matching": k.moment_matching,
        "weight_relation": k.weight_relation,
    })
}

fn read_cov(path: &str) -> Res<HermitianSeq> {
    ctx(io::read_coefficients(path), path)
}

pub fn estimate(a: EstimateArgs, s: &mut Settings) -> Res {
    let data = s.get::<String>("data", a.data, None)?;
    let extents = s.get::<Extents>("lambda-box", a.lambda_box, None)?;
    let mode = s.get("mode", a.mode, Some(Estimator::Biased))?;
    let out = s.get("out", a.out, Some("cov.txt".to_string()))?;
    emit(&s.echo("estimate"));

    let y = ctx(io::read_record(&data), &data)?;
    let index = IndexSet::boxed(&extents.broadcast(y.dim())?)?;
    let c = match mode {
        Estimator::Biased => biased_cov(&y, &index)?,
        Estimator::Unbiased => unbiased_cov(&y, &index)?,
    };
    ctx(io::write_coefficients(&out, &c), &out)?;
    let mut report = json!({
        "event": "estimate",
        "mode": mode.to_string(),
        "dims": y.dims(),
        "size": index.len(),
        "c0": c.dc(),
        "out": out,
    });
    if index.dim() == 1 {
        let (class, min_eig) = cone_test_toeplitz_1d(&c)?;
        report["toeplitz"] = json!({ "class": format!("{class:?}").to_lowercase(), "min_eigenvalue": min_eig });
    }
    emit(&report);
    Ok(())
}

pub fn solve(a: SolveArgs, s: &mut Settings) -> Res {
    let cov = s.get::<String>("cov", a.cov, None)?;
    let prior = s.get("prior", a.prior, Some(Prior::MaxEntropy))?;
    let mode = s.get("mode", a.mode, Some(Mode::Soft))?;
    let weight = s.get_opt::<WeightSpec>("weight", a.weight)?;
    let grid = s.get_opt::<usize>("grid", a.grid)?;
    let offset = s.get("offset", a.offset, Some(true))?;
    let out = s.get("out", a.out, Some("solution.txt".to_string()))?;
    let spectrum = s.get("spectrum", a.spectrum, Some("spectrum.csv".to_string()))?;
    emit(&s.echo("solve"));

    let c = read_cov(&cov)?;
    let index = c.index_set().clone();
    let p = prior.load(&index)?;
    let w = match (mode, weight) {
        (Mode::Exact, _) => None,
        (_, Some(spec)) => Some(spec.load(index.len())?),
        (_, None) => return Err(CliError::usage(format!("--weight is required in {mode} mode"))),
    };
    let mut cfg = SolverConfig::default();
    cfg.grid = Some(match grid {
        Some(n) => GridSpec::uniform(index.dim(), n, offset)?,
        None => GridSpec::new(GridSpec::default_for(&index).points().to_vec(), offset)?,
    });
    let sol = match covext::solve(mode, &c, &p, w.as_ref(), &cfg) {
        Ok(sol) => sol,
        Err(e @ Error::NoSolution { sufficient_condition_holds, .. }) => {
            emit(&json!({
                "event": "no_solution",
                "sufficient_condition_holds": sufficient_condition_holds,
                "diagnostic": e.to_string(),
            }));
            return Err(e.into());
        }
        Err(e) => return Err(e.into()),
    };
    ctx(io::write_solution(&out, &sol, w.as_ref()), &out)?;
    let field = sol.spectrum(&p, &sol.diagnostics.grid)?;
    ctx(io::write_field_csv(&spectrum, &field), &spectrum)?;
    let d = &sol.diagnostics;
    emit(&json!({
        "event": "solution",
        "mode": mode.name(),
        "atoms": atoms_json(&sol),
        "chat_norm": sol.c_hat.norm(),
        "gamma": sol.gamma,
        "kkt": kkt_json(&sol),
        "kkt_max": sol.kkt.max_residual(),
        "iterations": d.iterations,
        "grad_norm": d.grad_norm,
        "stalled": d.stalled,
        "min_q": d.min_q_refined,
        "refinement": d.refinement.name(),
        "out": out,
        "spectrum": spectrum,
    }));
    Ok(())
}

pub fn convert_weight(a: ConvertWeightArgs, s: &mut Settings) -> Res {
    let solution = s.get::<String>("solution", a.solution, None)?;
    let direction = s.get::<Direction>("direction", a.direction, None)?;
    let weight = s.get_opt::<String>("weight", a.weight)?;
    let out = s.get("out", a.out, Some("weight.txt".to_string()))?;
    emit(&s.echo("convert-weight"));

    let (sol, stored) = ctx(io::read_solution(&solution), &solution)?;
    let w = match (weight, stored) {
        (Some(path), _) => ctx(io::read_weight(&path), &path)?,
        (None, Some(w)) => w,
        (None, None) => {
            return Err(CliError::usage("the solution file has no [weight] section; pass --weight"));
        }
    };
    if w.size() != sol.q.len() {
        return Err(CliError::from(Error::IndexSetMismatch).with_context("weight and solution sizes differ"));
    }
    let converted = match direction {
        Direction::SoftToHard => hard_weight_from_soft(&w, &sol.q)?,
        Direction::HardToSoft => soft_weight_from_hard(&w, &sol.q)?,
    };
    ctx(io::write_weight(&out, &converted), &out)?;
    let scale = weight_scale(&converted, &w);
    emit(&json!({
        "event": "weight",
        "direction": direction.to_string(),
        "scale": scale,
        "scalar": converted.as_scalar(),
        "out": out,
    }));
    Ok(())
}

/// Ratio of two proportional weights, read off the largest entry.
fn weight_scale(to: &WeightMatrix, from: &WeightMatrix) -> f64 {
    let (i, _) = from
        .matrix()
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))
        .expect("nonempty weight");
    to.matrix().as_slice()[i].re / from.matrix().as_slice()[i].re
}

pub fn analyze(a: AnalyzeArgs, s: &mut Settings) -> Res {
    let cov = s.get::<String>("cov", a.cov, None)?;
    let prior = s.get("prior", a.prior, Some(Prior::MaxEntropy))?;
    let weight = s.get::<WeightSpec>("weight", a.weight, None)?;
    let solution = s.get_opt::<String>("solution", a.solution)?;
    emit(&s.echo("analyze"));

    let c = read_cov(&cov)?;
    let index = c.index_set().clone();
    let p = prior.load(&index)?;
    let w = weight.load(index.len())?;

    let b = singular_free_bound(&c, &p, &w)?;
    emit(&json!({
        "event": "bound",
        "guaranteed_absolutely_continuous": b.guaranteed_absolutely_continuous,
        "margin": b.margin,
        "lhs": b.lhs,
        "rhs": b.rhs,
        "exact_norm": b.exact_norm,
    }));

    if index.dim() == 1 && index.box_extents().is_some() {
        let (class, min_eig) = cone_test_toeplitz_1d(&c)?;
        emit(&json!({
            "event": "cone",
            "class": format!("{class:?}").to_lowercase(),
            "min_eigenvalue": min_eig,
        }));
    }

    let grid = GridSpec::default_for(&index);
    let pos = grid_positivity_test(&p, &grid)?;
    let diff = c.sub(&p)?;
    emit(&json!({
        "event": "prior",
        "positivity": format!("{:?}", pos.class).to_lowercase(),
        "min": pos.min,
        "argmin": pos.argmin,
        "distance_inv_w": w.inv_norm(&diff)?,
        "inside_ball": w.inv_norm(&diff)? <= 1.0,
    }));
    emit(&json!({
        "event": "hard_existence",
        "sufficient": sufficient_hard_existence(&c, &w)?,
    }));

    if let Some(path) = solution {
        let (sol, _) = ctx(io::read_solution(&path), &path)?;
        if sol.q.index_set() != &index {
            return Err(CliError::from(Error::IndexSetMismatch).with_context("solution and covariances differ"));
        }
        let dist = w.norm(&sol.q.sub(&HermitianSeq::unit(index.clone()))?)?;
        emit(&json!({
            "event": "weight_conversion",
            "distance_w": dist,
            "soft2hard_scale": dist * dist,
            "hard2soft_scale": if dist > 0.0 { 1.0 / dist } else { f64::INFINITY },
        }));
    }
    Ok(())
}

pub fn simulate(a: SimulateArgs, s: &mut Settings) -> Res {
    let system = s.get("system", a.system, Some("default".to_string()))?;
    let steps = s.get("N", a.steps, Some(500))?;
    let window = s.get("window", a.window, Some(9))?;
    let seed = s.get("seed", a.seed, Some(0))?;
    let replicates = s.get("replicates", a.replicates, Some(20))?;
    let lambda_box = s.get("lambda-box", a.lambda_box, Some(2))?;
    let grid = s.get("grid", a.grid, Some(50))?;
    let truth_grid = s.get("truth-grid", a.truth_grid, Some(128))?;
    let hard = s.get("hard", a.hard.then_some(true), Some(false))?;
    let out_dir = s.get("out-dir", a.out_dir, Some("simulation".to_string()))?;
    let echo = s.echo("simulate");
    emit(&echo);

    if system != "default" {
        return Err(CliError::usage(format!("unknown system {system:?}; only \"default\" is built in")));
    }
    let sys = covext::default_system();
    let cfg = StudyConfig {
        steps,
        window,
        lambda_box,
        solver: SolverConfig::with_grid(GridSpec::uniform(2, grid, true)?),
        truth_grid,
        seed,
        include_hard: hard,
    };
    let summary = run_study(&sys, &cfg, replicates)?;

    let dir = PathBuf::from(&out_dir);
    fs::create_dir_all(&dir).map_err(|e| CliError::io(format!("{out_dir}: {e}")))?;
    let mut lines = vec![echo.to_string()];
    let truth_path = dir.join("truth.txt");
    ctx(io::write_coefficients(&truth_path, &summary.truth), truth_path.display())?;
    for rep in &summary.replicates {
        write_in(&dir, &format!("window_{:03}.txt", rep.replicate), &rep.window)?;
        for (name, c) in [("biased", &rep.biased), ("unbiased", &rep.unbiased)] {
            let path = dir.join(format!("{name}_{:03}.txt", rep.replicate));
            ctx(io::write_coefficients(&path, c), path.display())?;
        }
        for r in &rep.results {
            let line = json!({
                "event": "replicate",
                "replicate": rep.replicate,
                "procedure": r.procedure.name(),
                "error": r.error.as_ref().ok(),
                "failure": r.error.as_ref().err(),
                "lambda": r.lambda,
            });
            emit(&line);
            lines.push(line.to_string());
        }
    }
    let procs = match hard {
        true => &covext::study::Procedure::ALL[..],
        false => &covext::study::Procedure::PRIMARY[..],
    };
    let mut means = serde_json::Map::new();
    let mut failures = serde_json::Map::new();
    for &p in procs {
        means.insert(p.name().into(), json!(summary.mean_error(p)));
        let failed = summary
            .replicates
            .iter()
            .flat_map(|r| &r.results)
            .filter(|r| r.procedure == p && r.error.is_err())
            .count();
        failures.insert(p.name().into(), json!(failed));
    }
    let line = json!({
        "event": "summary",
        "replicates": replicates,
        "truth_c0": summary.truth.dc(),
        "mean_error": means,
        "failures": failures,
        "out_dir": out_dir,
    });
    emit(&line);
    lines.push(line.to_string());
    let path = dir.join("summary.jsonl");
    let mut f = fs::File::create(&path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    writeln!(f, "{}", lines.join("\n")).map_err(|e| CliError::io(e.to_string()))?;
    Ok(())
}

fn write_in(dir: &Path, name: &str, y: &DataRecord) -> Res {
    let path = dir.join(name);
    ctx(io::write_record(&path, y), path.display())
}

fn is_image(path: &str) -> bool {
    let ext = Path::new(path).extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    matches!(ext.as_deref(), Some("pbm" | "pgm" | "pnm" | "ppm" | "png"))
}

pub fn texture_analyze(a: TextureAnalyzeArgs, s: &mut Settings) -> Res {
    let image = s.get::<String>("image", a.image, None)?;
    let lambda_box = s.get("lambda-box", a.lambda_box, Some(2))?;
    let lambda = s.get("lambda", a.lambda, Some(0.01))?;
    let filter_grid = s.get("filter-grid", a.filter_grid, Some(64))?;
    let out = s.get("out", a.out, Some("model.txt".to_string()))?;
    emit(&s.echo("texture analyze"));

    let y = if is_image(&image) {
        ctx(io::read_binary_image(&image), &image)?
    } else {
        ctx(io::read_record(&image), &image)?
    };
    let index = IndexSet::boxed(&vec![lambda_box; y.dim()])?;
    let w = WeightMatrix::scalar(index.len(), lambda)?;
    let cfg = IdentifyConfig { filter_grid, ..IdentifyConfig::default() };
    let model = covext::identify(&y, &index, &w, &cfg)?;
    ctx(io::write_model(&out, &model), &out)?;
    emit(&json!({
        "event": "texture_model",
        "dims": y.dims(),
        "mean": y.mean().re,
        "tau": model.tau,
        "predicted_mean": model.predicted_mean(),
        "filter_dims": model.filter.dims,
        "out": out,
    }));
    Ok(())
}

pub fn texture_synth(a: TextureSynthArgs, s: &mut Settings) -> Res {
    let model_path = s.get::<String>("model", a.model, None)?;
    let size = s.get("size", a.size, Some(Extents(vec![500])))?;
    let seed = s.get("seed", a.seed, Some(0))?;
    let out = s.get("out", a.out, Some("texture.pbm".to_string()))?;
    emit(&s.echo("texture synth"));

    let model = ctx(io::read_model(&model_path), &model_path)?;
    let size = size.broadcast(model.filter.dims.len())?;
    let y = covext::synthesize_texture(&model, &size, seed)?;
    if is_image(&out) {
        ctx(io::write_image(&out, &y), &out)?;
    } else {
        ctx(io::write_record(&out, &y), &out)?;
    }
    emit(&json!({
        "event": "texture",
        "dims": y.dims(),
        "mean": y.mean().re,
        "predicted_mean": model.predicted_mean(),
        "seed": seed,
        "out": out,
    }));
    Ok(())
}
