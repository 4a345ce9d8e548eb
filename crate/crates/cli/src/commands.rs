use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use windfreq_core::experiments::{
    derive_seed, gen_wind, nadir, rotor_speed_distortion, run_frequency_experiment, run_identification_comparison,
    train_group_models, turbine_training_trajectory, ModelKind, RunOptions, Stream, TimeSeries,
};
use windfreq_core::koopman::{load_model, save_model, LiftedModel, ObservableMap, Trajectory};

use crate::config::RunConfig;
use crate::error::{output_err, CliError, CliResult};
use crate::manifest::Manifest;

/// Output directory plus the list of files written into it.
pub struct Output {
    dir: PathBuf,
    written: Vec<String>,
}

impl Output {
    pub fn create(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(output_err(dir))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn write_with(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> CliResult<()>) -> CliResult<()> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(output_err(&path))?;
        let mut w = BufWriter::new(file);
        f(&mut w)?;
        w.flush().map_err(output_err(&path))?;
        self.written.push(name.to_string());
        log::info!("wrote {}", path.display());
        Ok(())
    }

    fn write_text(&mut self, name: &str, text: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        self.write_with(name, |w| w.write_all(text.as_bytes()).map_err(output_err(&path)))
    }

    fn write_model(&mut self, name: &str, model: &LiftedModel) -> CliResult<()> {
        save_model(model, &self.dir.join(name))?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Saves the effective config and the manifest; called last.
    fn finish(mut self, command: &str, config: &RunConfig, seed: u64, inputs: &[PathBuf]) -> CliResult<()> {
        let text = config.to_toml()?;
        self.write_text("config.toml", &text)?;
        let mut manifest = Manifest::new(command, &text, seed);
        for p in inputs {
            manifest.add_input(p)?;
        }
        self.written.push("manifest.toml".to_string());
        manifest.outputs = self.written.clone();
        manifest.write(&self.dir)
    }
}

fn model_file(group: usize) -> String {
    format!("model_{}.txt", group + 1)
}

/// Open-loop run of each turbine group under MPPT plus the configured random
/// offsets; one row per control step.
pub fn simulate(config: &RunConfig, out: Output) -> CliResult<()> {
    let sc = &config.scenario;
    sc.validate()?;
    let sim = &config.simulate;
    if !(sim.duration > 0.0) {
        return Err(CliError::Config("simulate.duration must be positive".into()));
    }
    let mut groups: Vec<Trajectory> = Vec::with_capacity(sc.winds.len());
    for (i, desc) in sc.winds.iter().enumerate() {
        let wind = gen_wind(desc, sim.duration, sc.control_step, derive_seed(sc.seed, Stream::Wind, i as u64))?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(sc.seed, Stream::Excitation, i as u64));
        groups.push(turbine_training_trajectory(
            &wind,
            &sc.turbine,
            sc.control_step,
            sc.substeps(),
            &sim.excitation,
            &mut rng,
        )?);
    }
    let mut out = out;
    out.write_with("simulate.csv", |w| {
        let mut csv = csv::Writer::from_writer(w);
        let m = groups.len();
        let mut header = vec!["t".to_string()];
        for prefix in ["omega_r", "p_ref", "v_w"] {
            header.extend((1..=m).map(|i| format!("{prefix}_{i}")));
        }
        csv.write_record(&header).map_err(windfreq_core::Error::from)?;
        for k in 0..groups[0].len() {
            let mut row = vec![(k as f64 * sc.control_step).to_string()];
            row.extend(groups.iter().map(|g| g.omega_r[k].to_string()));
            row.extend(groups.iter().map(|g| g.inputs[k].p_ref.to_string()));
            row.extend(groups.iter().map(|g| g.inputs[k].v_w.to_string()));
            csv.write_record(&row).map_err(windfreq_core::Error::from)?;
        }
        csv.flush().map_err(|e| windfreq_core::Error::Io(e).into())
    })?;
    out.finish("simulate", config, sc.seed, &[])
}

/// Fits one model per group on its training history and serializes them.
pub fn identify(config: &RunConfig, out: Output) -> CliResult<()> {
    let sc = &config.scenario;
    sc.validate()?;
    let (models, histories) = train_group_models(sc)?;
    let mut out = out;
    let mut report = String::new();
    for (i, (model, history)) in models.iter().zip(&histories).enumerate() {
        let name = model_file(i);
        out.write_model(&name, model)?;
        let alpha = match model.map {
            ObservableMap::Sdmd { alpha } => format!("{alpha}"),
            ObservableMap::Rbf(_) => "-".to_string(),
        };
        report.push_str(&format!(
            "group {} file = {name}\ngroup {} kind = {}\ngroup {} dim = {}\ngroup {} alpha = {alpha}\ngroup {} training_samples = {}\ngroup {} fit_residual = {:e}\n",
            i + 1,
            i + 1,
            model.map.kind(),
            i + 1,
            model.map.dim(),
            i + 1,
            i + 1,
            history.len(),
            i + 1,
            model.fit_residual
        ));
    }
    out.write_text("identify.txt", &report)?;
    out.finish("identify", config, sc.seed, &[])
}

/// The identification study over random-wind scenarios.
pub fn compare_id(config: &RunConfig, out: Output) -> CliResult<()> {
    let id = &config.identification;
    let report = run_identification_comparison(id)?;
    let mut out = out;
    out.write_with("accuracy.csv", |w| Ok(report.write_accuracy_csv(w)?))?;
    out.write_with("timing.csv", |w| Ok(report.write_timing_csv(w)?))?;
    out.write_text("compare_id.txt", &report.to_text())?;
    print!("{}", report.to_text());
    out.finish("compare-id", config, id.seed, &[])
}

/// Closed-loop frequency response under the configured policy.
pub fn respond(config: &RunConfig, model_files: &[PathBuf], out: Output) -> CliResult<()> {
    let sc = &config.scenario;
    let models = if model_files.is_empty() {
        None
    } else {
        if model_files.len() != sc.winds.len() {
            return Err(CliError::Config(format!(
                "{} model files given for {} turbine groups",
                model_files.len(),
                sc.winds.len()
            )));
        }
        let loaded: Vec<LiftedModel> = model_files.iter().map(|p| load_model(p)).collect::<Result<_, _>>()?;
        let expected = match sc.models.kind {
            ModelKind::Sdmd => "sdmd",
            ModelKind::Edmd => "rbf",
        };
        if let Some(m) = loaded.iter().find(|m| m.map.kind() != expected) {
            log::warn!("model file uses {} observables while the config names {expected}", m.map.kind());
        }
        Some(loaded)
    };
    let run = run_frequency_experiment(sc, RunOptions { models, observer: None })?;
    let mut out = out;
    out.write_with("frequency.csv", |w| Ok(run.series.write_csv(w)?))?;
    out.write_with("dispatch.csv", |w| Ok(run.dispatch.write_csv(w)?))?;
    out.write_text("report.txt", &run.report.to_text())?;
    if model_files.is_empty() {
        for (i, m) in run.models.iter().enumerate() {
            out.write_model(&model_file(i), m)?;
        }
    }
    print!("{}", run.report.to_text());
    log::info!(
        "closed loop took {:.3} s (training {:.3} s)",
        run.loop_time.as_secs_f64(),
        run.training_time.as_secs_f64()
    );
    out.finish("respond", config, sc.seed, model_files)
}

/// Recomputes the frequency and distortion metrics from a dumped series.
pub fn metrics(config: &RunConfig, series_path: &Path, out: Output) -> CliResult<()> {
    let file = File::open(series_path)
        .map_err(|e| CliError::Config(format!("cannot open series {}: {e}", series_path.display())))?;
    let series = TimeSeries::read_csv(std::io::BufReader::new(file))?;
    if series.t.len() < 2 {
        return Err(CliError::Config("series needs at least two samples".into()));
    }
    let ts = config.scenario.control_step;
    let dt = series.t[1] - series.t[0];
    let ratio = ts / dt;
    if !(ratio >= 1.0 - 1e-6) || (ratio - ratio.round()).abs() > 1e-6 {
        return Err(CliError::Config(format!("series step {dt} does not divide the control step {ts}")));
    }
    let stride = ratio.round() as usize;
    let sampled: Vec<Vec<f64>> = series.omega_r.iter().map(|w| w.iter().step_by(stride).copied().collect()).collect();
    let gamma = rotor_speed_distortion(&sampled, ts)?;
    let (idx, nadir_hz) = nadir(&series.f).expect("series is non-empty");
    let mut text = format!(
        "gamma = {gamma:.6e}\nnadir_hz = {nadir_hz:.6}\nnadir_time_s = {:.4}\nfinal_frequency_hz = {:.6}\n",
        series.t[idx],
        series.f.last().expect("series is non-empty")
    );
    for (i, w) in sampled.iter().enumerate() {
        let lo = w.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        text.push_str(&format!("omega_r_{} range = [{lo:.6}, {hi:.6}]\n", i + 1));
    }
    let mut out = out;
    out.write_text("metrics.txt", &text)?;
    print!("{text}");
    out.finish("metrics", config, config.scenario.seed, &[series_path.to_path_buf()])
}
