//! Reproduction harness: configuration, closed-form reference values, the
//! bound-vs-N sweep, CSV/SVG output and the command-line front end.

mod cli;

pub use cli::cli_main;

use std::io::Write;
use std::path::{Path, PathBuf};

use plotters::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{assemble_bound, estimate_cmi_terms, BoundReport};
use crate::environment::{default_task_means, TaskEnvironment, REFERENCE_TASK_PROBS};
use crate::error::{Error, Result};
use crate::learners::{BaseLearnerConfig, GrandMean};
use crate::losses::{true_avg_meta_gap_mc, LossBounds};
use crate::scalar::Scalar;
use crate::stream::RandomStream;

/// Flat key/value experiment settings. Every key is optional in the file;
/// missing keys take the reference values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task_probs: Vec<f64>,
    /// Empty means the evenly spaced grid `i/(|T|+1)`.
    pub task_means: Vec<f64>,
    pub m: usize,
    pub alpha: f64,
    pub n_sweep: Vec<usize>,
    pub mc_trials: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            task_probs: REFERENCE_TASK_PROBS.to_vec(),
            task_means: Vec::new(),
            m: 5,
            alpha: 0.5,
            n_sweep: vec![1, 2, 5, 10, 20],
            mc_trials: 2000,
            seed: 0,
            output_dir: PathBuf::from("results"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate().map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: format!("cannot read: {e}"),
        })?;
        Self::from_toml_str(&text, path)
    }

    pub fn validate(&self) -> Result<()> {
        self.environment()?;
        self.learner()?;
        if self.m == 0 {
            return Err(Error::InvalidParameter("m must be ≥ 1".into()));
        }
        if self.n_sweep.is_empty() || self.n_sweep[0] == 0 {
            return Err(Error::InvalidParameter(
                "n_sweep must be nonempty with entries ≥ 1".into(),
            ));
        }
        if self.n_sweep.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "n_sweep must be strictly ascending".into(),
            ));
        }
        if self.mc_trials < 2 {
            return Err(Error::InvalidParameter("mc_trials must be ≥ 2".into()));
        }
        Ok(())
    }

    pub fn environment(&self) -> Result<TaskEnvironment<f64>> {
        let means = if self.task_means.is_empty() {
            default_task_means(self.task_probs.len())
        } else {
            self.task_means.clone()
        };
        TaskEnvironment::new(self.task_probs.clone(), means)
    }

    pub fn learner(&self) -> Result<BaseLearnerConfig<f64>> {
        BaseLearnerConfig::new(self.alpha)
    }
}

/// `E[L(U)]` for the grand-mean meta-learner and the convex-combination
/// base-learner:
///
/// ```text
/// E[L(U)] = (1−α)²(Var U + σ²) + (α²/M + 1)·V̄,   Var U = (σ² + V̄/M)/N
/// ```
///
/// with `σ²` the variance of the task means and `V̄ = E_τ[μ(1−μ)]`.
pub fn expected_meta_loss_closed_form<T: Scalar>(
    env: &TaskEnvironment<T>,
    n: usize,
    m: usize,
    alpha: T,
) -> T {
    let mo = env.moments();
    let (sigma2, v) = (mo.var_of_means, mo.mean_bernoulli_var);
    let m_t = T::of_usize(m);
    let var_u = (sigma2 + v / m_t) / T::of_usize(n);
    let shrink = (T::one() - alpha) * (T::one() - alpha);
    shrink * (var_u + sigma2) + (alpha * alpha / m_t + T::one()) * v
}

/// `E[L(U) − L_train(U)] = 2(1−α)²·Var U + 2α·V̄/M` for the same pair of
/// learners.
pub fn expected_gap_closed_form<T: Scalar>(
    env: &TaskEnvironment<T>,
    n: usize,
    m: usize,
    alpha: T,
) -> T {
    let mo = env.moments();
    let (sigma2, v) = (mo.var_of_means, mo.mean_bernoulli_var);
    let m_t = T::of_usize(m);
    let var_u = (sigma2 + v / m_t) / T::of_usize(n);
    let two = T::lit(2.0);
    two * (T::one() - alpha) * (T::one() - alpha) * var_u + two * alpha * v / m_t
}

/// One CSV row of the sweep. Field order is the column order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub bound_value: f64,
    pub bound_stderr: f64,
    pub env_term: f64,
    pub task_term: f64,
    pub env_cmi_nats: f64,
    pub mean_task_cmi_nats: f64,
    pub expected_meta_loss: f64,
    pub true_gap: f64,
    pub true_gap_stderr: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Bound and reference values at one `n`. CMI terms use
/// `stream.substream(0)`, the true gap `stream.substream(1)`.
pub fn evaluate_point(
    config: &ExperimentConfig,
    n: usize,
    stream: &RandomStream,
) -> Result<(SweepRow, BoundReport<f64>)> {
    let env = config.environment()?;
    let cfg = config.learner()?;
    let m = config.m;
    let trials = config.mc_trials;
    let terms = estimate_cmi_terms(&env, n, m, &cfg, trials, &stream.substream(0))?;
    let report = assemble_bound(&terms, n, m, &LossBounds::unit())?;
    let gap = true_avg_meta_gap_mc(&env, n, m, &cfg, &GrandMean, trials, &stream.substream(1))?;
    let row = SweepRow {
        n,
        bound_value: report.bound_value,
        bound_stderr: report.bound_stderr,
        env_term: report.env_term,
        task_term: report.task_term,
        env_cmi_nats: terms.env_cmi.mean,
        mean_task_cmi_nats: terms.mean_task_cmi(),
        expected_meta_loss: expected_meta_loss_closed_form(&env, n, m, config.alpha),
        true_gap: gap.mean,
        true_gap_stderr: gap.stderr,
        trials,
        seed: config.seed,
    };
    Ok((row, report))
}

/// One row per entry of `n_sweep`; point `k` draws from
/// `RandomStream::from_seed(seed).substream(k)`.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let root = RandomStream::from_seed(config.seed);
    config
        .n_sweep
        .iter()
        .enumerate()
        .map(|(k, &n)| evaluate_point(config, n, &root.substream(k as u64)).map(|(row, _)| row))
        .collect()
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[SweepRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

/// Bound, `E[L(U)]` and the true gap against `N`.
pub fn plot_sweep(rows: &[SweepRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::EmptyInput("sweep rows"));
    }
    let plot_err = |e: &dyn std::fmt::Display| Error::Plot(e.to_string());
    let x_max = rows.iter().map(|r| r.n).max().unwrap_or(1) as f64;
    let x_min = rows.iter().map(|r| r.n).min().unwrap_or(1) as f64;
    let y_max = rows
        .iter()
        .flat_map(|r| {
            [
                r.bound_value + r.bound_stderr,
                r.expected_meta_loss,
                r.true_gap,
            ]
        })
        .fold(0.0f64, f64::max)
        * 1.1;
    let x_hi = if x_max > x_min { x_max } else { x_min + 1.0 };

    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(&e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption("CMI bound vs. number of training tasks", ("sans-serif", 22))
        .margin(15)
        .x_label_area_size(40)
        .y_label_area_size(55)
        .build_cartesian_2d(x_min..x_hi, 0.0..y_max.max(1e-3))
        .map_err(|e| plot_err(&e))?;
    chart
        .configure_mesh()
        .x_desc("N")
        .y_desc("loss")
        .draw()
        .map_err(|e| plot_err(&e))?;

    type Series<'a> = (&'a str, RGBColor, Box<dyn Fn(&SweepRow) -> f64>);
    let series: [Series; 3] = [
        ("CMI bound", BLUE, Box::new(|r| r.bound_value)),
        ("E[L(U)]", BLACK, Box::new(|r| r.expected_meta_loss)),
        ("true gap", RED, Box::new(|r| r.true_gap)),
    ];
    for (label, color, value) in series {
        let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, value(r))).collect();
        chart
            .draw_series(LineSeries::new(points.clone(), color.stroke_width(2)))
            .map_err(|e| plot_err(&e))?
            .label(label)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
        chart
            .draw_series(
                points
                    .into_iter()
                    .map(|p| Circle::new(p, 3, color.filled())),
            )
            .map_err(|e| plot_err(&e))?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| plot_err(&e))?;
    root.present().map_err(|e| plot_err(&e))?;
    Ok(())
}

/// Writes `<dir>/sweep.csv` and `<dir>/sweep.svg`, creating `dir` if needed.
pub fn write_sweep_outputs(rows: &[SweepRow], dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join("sweep.csv");
    let svg_path = dir.join("sweep.svg");
    write_csv(rows, std::fs::File::create(&csv_path)?)?;
    plot_sweep(rows, &svg_path)?;
    Ok((csv_path, svg_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms_degenerate_and_constant() {
        for mu in [0.0, 1.0] {
            let env = TaskEnvironment::single_task(mu).unwrap();
            assert_eq!(expected_meta_loss_closed_form(&env, 3, 5, 0.5), 0.0);
            assert_eq!(expected_gap_closed_form(&env, 3, 5, 0.5), 0.0);
        }
        let c = 0.3f64;
        let env = TaskEnvironment::new(vec![0.5, 0.5], vec![c, c]).unwrap();
        let (n, m, alpha) = (4, 5, 0.25);
        let v = c * (1.0 - c);
        let want = (1.0 - alpha) * (1.0 - alpha) * v / (n * m) as f64
            + (alpha * alpha / m as f64 + 1.0) * v;
        assert!((expected_meta_loss_closed_form(&env, n, m, alpha) - want).abs() < 1e-15);
    }

    #[test]
    fn config_defaults_and_errors() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.environment().unwrap().task_means()[0], 1.0 / 11.0);

        let path = Path::new("x.cfg");
        let parsed = ExperimentConfig::from_toml_str("m = 3\nseed = 9\n", path).unwrap();
        assert_eq!((parsed.m, parsed.seed, parsed.alpha), (3, 9, 0.5));
        for bad in [
            "n_sweep = [5, 2]",
            "alpha = 1.5",
            "bogus = 1",
            "mc_trials = 1",
            "n_sweep = []",
        ] {
            let err = ExperimentConfig::from_toml_str(bad, path).unwrap_err();
            assert!(err.to_string().contains("x.cfg"), "{bad}: {err}");
        }
        let err = ExperimentConfig::load(Path::new("/nonexistent/fig.cfg")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/fig.cfg"));
    }

    #[test]
    fn degenerate_sweep_is_zero() {
        let cfg = ExperimentConfig {
            task_probs: vec![1.0],
            task_means: vec![1.0],
            n_sweep: vec![1],
            mc_trials: 10,
            ..Default::default()
        };
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!((rows[0].bound_value, rows[0].true_gap), (0.0, 0.0));
    }

    #[test]
    fn csv_header_order() {
        let cfg = ExperimentConfig {
            n_sweep: vec![1, 2],
            mc_trials: 20,
            ..Default::default()
        };
        let text = csv_string(&run_sweep(&cfg).unwrap()).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "n,bound_value,bound_stderr,env_term,task_term,env_cmi_nats,mean_task_cmi_nats,\
             expected_meta_loss,true_gap,true_gap_stderr,trials,seed"
        );
        assert_eq!(text.lines().count(), 3);
    }
}
