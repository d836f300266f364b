//! Command implementations. Each one validates its arguments and computes
//! every output before the first file is written.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use corteml::eval::folds::CvScheme;
use corteml::eval::pipeline::{classify_segment, regress_segment, Pipeline, SelectionMode};
use corteml::eval::LabelScheme;
use corteml::featsel::{aggregate_rankings, correlate, rank_all, DEFAULT_SELECT};
use corteml::linalg::select_columns;
use corteml::models::grid::grid_search;
use corteml::models::persist::SavedModel;
use corteml::models::{
    check_assumptions, ClassifierParams, Family, GridSpec, LogisticParams, StandardizedClassifier, SvmParams,
    TreeParams,
};
use corteml::signal::{load_recording, ChannelSchema, SegmentLabel};
use corteml::spectral::{exclude_outliers, FeatureId, OutlierScope, SubjectRecord, WelchParams, N_FEATURES};
use corteml::synth::{gen_dataset, SynthSpec};
use corteml::table::{design, load_table, read_scores, read_selection, write_selection, write_table};
use corteml::{extract, rng, write_atomic, Error, Execution};

use crate::args::{ClassifyArgs, ConfigError, ExtractArgs, RegressArgs, SelectArgs, SynthArgs};

fn required<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| ConfigError(format!("missing required --{flag}")).into())
}

fn usage(message: impl Into<String>) -> anyhow::Error {
    ConfigError(message.into()).into()
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn parse_segments(list: Option<&[String]>) -> Result<Vec<SegmentLabel>> {
    let Some(list) = list else {
        return Ok(SegmentLabel::ALL.to_vec());
    };
    let mut out: Vec<SegmentLabel> = list
        .iter()
        .map(|s| s.parse::<SegmentLabel>().map_err(|e| usage(e.to_string())))
        .collect::<Result<_>>()?;
    out.sort_unstable();
    out.dedup();
    if out.is_empty() {
        bail!(usage("--segments is empty"));
    }
    Ok(out)
}

fn cv_scheme(cv: Option<&str>, default: &str, folds: Option<usize>, seed: u64) -> Result<CvScheme> {
    match cv.unwrap_or(default) {
        "loo" | "leave-one-out" => {
            if folds.is_some() {
                bail!(usage("--folds only applies to --cv kfold"));
            }
            Ok(CvScheme::Loo)
        }
        "kfold" | "k-fold" => Ok(CvScheme::KFold {
            k: folds.unwrap_or(5),
            seed,
        }),
        other => bail!(usage(format!("unknown --cv {other:?}; expected loo or kfold"))),
    }
}

fn check_k(k: usize) -> Result<usize> {
    if k == 0 || k > N_FEATURES {
        bail!(usage(format!("--k must be in 1..={N_FEATURES}, got {k}")));
    }
    Ok(k)
}

fn load_selection(path: &Path, segments: &[SegmentLabel]) -> Result<BTreeMap<SegmentLabel, Vec<usize>>> {
    let sel = read_selection(&read_text(path)?, path)?;
    for s in segments {
        if !sel.contains_key(s) {
            return Err(Error::Schema {
                path: path.to_path_buf(),
                message: format!("no selection for segment {}", s.key()),
            }
            .into());
        }
    }
    Ok(sel)
}

fn feature_name(j: usize) -> String {
    FeatureId::from_index(j).column()
}

pub fn synth(a: SynthArgs, exec: Execution) -> Result<()> {
    let out = required(a.out, "out")?;
    let d = SynthSpec::default();
    let spec = SynthSpec {
        n_subjects: a.n_subjects.unwrap_or(d.n_subjects),
        fs: a.fs.unwrap_or(d.fs),
        segment_seconds: a.segment_seconds.unwrap_or(d.segment_seconds),
        coupling: a.coupling.unwrap_or(d.coupling),
        noise_sd: a.noise_sd.unwrap_or(d.noise_sd),
        score_range: (a.score_lo.unwrap_or(d.score_range.0), a.score_hi.unwrap_or(d.score_range.1)),
        seed: a.seed.unwrap_or(d.seed),
    };
    spec.validate()?;
    let subjects = gen_dataset(&spec, &out, exec)?;
    log::info!("wrote {} synthetic subjects to {}", subjects.len(), out.display());
    Ok(())
}

enum Source {
    Segmented([PathBuf; 3]),
    Continuous(PathBuf),
}

/// Group `<subject>_<segment>.csv` files by subject.
fn segmented_sources(files: &[PathBuf], skip: &Path) -> Result<BTreeMap<String, Source>> {
    let mut found: BTreeMap<String, [Option<PathBuf>; 3]> = BTreeMap::new();
    // Longer keys first so `_pre_video` is not read as `_video`.
    let suffixes = [SegmentLabel::PreVideo, SegmentLabel::PostVideo, SegmentLabel::Video]
        .map(|l| (l, format!("_{}", l.key())));
    for path in files {
        if path == skip {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let Some((label, id)) = suffixes
            .iter()
            .find_map(|(l, suf)| stem.strip_suffix(suf.as_str()).map(|id| (*l, id)))
        else {
            log::warn!("skipping {}: not named <subject>_<segment>.csv", path.display());
            continue;
        };
        found.entry(id.to_string()).or_default()[label.index()] = Some(path.clone());
    }
    found
        .into_iter()
        .map(|(id, [pre, video, post])| match (pre, video, post) {
            (Some(a), Some(b), Some(c)) => Ok((id, Source::Segmented([a, b, c]))),
            _ => Err(Error::Schema {
                path: files[0].parent().unwrap_or(Path::new(".")).to_path_buf(),
                message: format!("subject {id} lacks one of the three segment files"),
            }
            .into()),
        })
        .collect()
}

fn parse_boundaries(text: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || usage(format!("--boundaries expects two sample indices b1,b2, got {text:?}"));
    if parts.len() != 2 {
        return Err(bad());
    }
    Ok((parts[0].parse().map_err(|_| bad())?, parts[1].parse().map_err(|_| bad())?))
}

pub fn extract(a: ExtractArgs, exec: Execution) -> Result<()> {
    let input = required(a.input, "input")?;
    let out = required(a.out, "out")?;
    let scope = match a.outlier_scope.as_deref().unwrap_or("per-segment") {
        "per-segment" | "per_segment" | "segment" => OutlierScope::PerSegment,
        "pooled" => OutlierScope::Pooled,
        other => bail!(usage(format!("unknown --outlier-scope {other:?}; expected per-segment or pooled"))),
    };
    let threshold = a.outlier_z.unwrap_or(3.0);
    if !(threshold > 0.0) {
        bail!(usage(format!("--outlier-z must be positive, got {threshold}")));
    }
    let welch = WelchParams {
        segment_seconds: a.welch_seconds.unwrap_or(WelchParams::default().segment_seconds),
        ..WelchParams::default()
    };
    let boundaries = a.boundaries.as_deref().map(parse_boundaries).transpose()?;
    let scores_path = a.scores.unwrap_or_else(|| input.join("manifest.csv"));
    let scores = read_scores(&read_text(&scores_path)?, &scores_path)?;

    let mut files: Vec<PathBuf> = std::fs::read_dir(&input)
        .with_context(|| format!("listing {}", input.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()
        .with_context(|| format!("listing {}", input.display()))?;
    files.retain(|p| p.extension().is_some_and(|e| e == "csv"));
    files.sort();
    let sources: BTreeMap<String, Source> = match boundaries {
        None => segmented_sources(&files, &scores_path)?,
        Some(_) => files
            .iter()
            .filter(|p| **p != scores_path)
            .map(|p| {
                let id = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
                (id, Source::Continuous(p.clone()))
            })
            .collect(),
    };
    if sources.is_empty() {
        return Err(Error::Schema {
            path: input,
            message: "no recordings found".into(),
        }
        .into());
    }
    let jobs: Vec<(&String, &Source)> = sources.iter().collect();
    let schema = ChannelSchema::default();
    let subjects = exec.try_map_range(jobs.len(), |i| -> Result<SubjectRecord> {
        let (id, source) = jobs[i];
        let score = *scores.get(id).ok_or_else(|| Error::Schema {
            path: scores_path.clone(),
            message: format!("no score for subject {id}"),
        })?;
        let load = |p: &Path| load_recording(p, &schema, a.fs).map_err(|e| e.context(p.display().to_string()));
        let features = match source {
            Source::Segmented(paths) => {
                let [pre, video, post] = [0, 1, 2].map(|s| load(&paths[s]));
                let seg = corteml::signal::SegmentedRecording::new(pre?, video?, post?)
                    .map_err(|e| e.context(format!("subject {id}")))?;
                extract::from_segments(&seg, welch)
            }
            Source::Continuous(path) => extract::from_continuous(&load(path)?, boundaries.expect("continuous mode"), welch),
        }
        .map_err(|e| e.context(format!("subject {id}")))?;
        Ok(SubjectRecord::new(id.clone(), score, features)?)
    })?;
    let subjects = if threshold.is_infinite() {
        subjects
    } else {
        let (kept, removed) = exclude_outliers(subjects, threshold, scope)?;
        if !removed.is_empty() {
            let ids: Vec<&str> = removed.iter().map(|s| s.subject_id.as_str()).collect();
            eprintln!("excluded {} outlier subject(s) at |z| > {threshold}: {}", ids.len(), ids.join(", "));
        }
        kept
    };
    write_atomic(&out, &write_table(&subjects))?;
    log::info!("wrote {} subjects to {}", subjects.len(), out.display());
    Ok(())
}

pub fn select(a: SelectArgs, exec: Execution) -> Result<()> {
    let features = required(a.features, "features")?;
    let out = required(a.out, "out")?;
    let k = check_k(a.k.unwrap_or(DEFAULT_SELECT))?;
    let segments = parse_segments(a.segments.as_deref())?;
    let seed = a.seed.unwrap_or(0);
    let subjects = load_table(&features)?;
    let all: Vec<usize> = (0..N_FEATURES).collect();
    let mut files = Vec::new();
    let mut selection = Vec::new();
    for &label in &segments {
        let (x, y) = design(&subjects, label, &all);
        let rankings = rank_all(&x, &y, seed, exec).map_err(|e| e.context(label.key()))?;
        let agg = aggregate_rankings(&rankings, k)?;
        let corr = correlate(&x, &y).map_err(|e| e.context(label.key()))?;

        let mut matrix = String::from("feature");
        for r in &rankings {
            let _ = write!(matrix, ",{}_rank", r.method.key());
        }
        matrix.push_str(",mean_rank,selected\n");
        for j in 0..N_FEATURES {
            matrix.push_str(&feature_name(j));
            for r in &rankings {
                let _ = write!(matrix, ",{}", r.ranks[j]);
            }
            let _ = writeln!(matrix, ",{},{}", agg.mean_rank[j], agg.is_selected(j));
        }
        let mut correlation = String::from("feature,r,p\n");
        for (j, c) in corr.iter().enumerate() {
            let _ = writeln!(correlation, "{},{},{}", feature_name(j), c.r, c.p);
        }
        files.push((out.join(format!("ranking_{}.csv", label.key())), matrix));
        files.push((out.join(format!("correlation_{}.csv", label.key())), correlation));
        selection.push((label, agg.selected));
    }
    files.push((out.join("selection.csv"), write_selection(&selection)));
    create_dir(&out)?;
    for (path, text) in files {
        write_atomic(&path, &text)?;
    }
    Ok(())
}

pub fn regress(a: RegressArgs, exec: Execution) -> Result<()> {
    if let Some(l) = &a.labels {
        if l.parse::<LabelScheme>().ok() != Some(LabelScheme::Continuous) {
            bail!(usage(format!("regress models the raw score; label scheme {l:?} is not allowed")));
        }
    }
    let features = required(a.features, "features")?;
    let out = required(a.out, "out")?;
    let segments = parse_segments(a.segments.as_deref())?;
    let seed = a.seed.unwrap_or(0);
    let cv = cv_scheme(a.cv.as_deref(), "kfold", a.folds, seed)?;
    if a.select_within_folds && a.selection.is_some() {
        bail!(usage("--selection and --select-within-folds are exclusive"));
    }
    let k = check_k(a.k.unwrap_or(DEFAULT_SELECT))?;
    let selection = a.selection.as_deref().map(|p| load_selection(p, &segments)).transpose()?;
    let subjects = load_table(&features)?;
    let all: Vec<usize> = (0..N_FEATURES).collect();

    let mut metrics = String::from("model,segment,mse,mae,p\n");
    let mut coefs = String::from("model,segment,feature,coef,t,p\n");
    let mut checks = String::from("model,segment,jarque_bera,jarque_bera_p,breusch_pagan,breusch_pagan_p,max_vif\n");
    let mut models = Vec::new();
    for &label in &segments {
        let mut variants = vec![(format!("{N_FEATURES} features"), SelectionMode::Fixed(all.clone()))];
        if let Some(sel) = &selection {
            let cols = sel[&label].clone();
            variants.push((format!("{} features", cols.len()), SelectionMode::Fixed(cols)));
        }
        if a.select_within_folds {
            variants.push((format!("{k} features (within folds)"), SelectionMode::WithinFolds { k }));
        }
        for (name, mode) in variants {
            let pipeline = Pipeline {
                cv,
                selection: mode,
                grid: None,
                grid_global: false,
                seed,
                exec,
            };
            let run = regress_segment(&pipeline, &subjects, label)?;
            let _ = writeln!(metrics, "{name},{},{},{},{}", label.key(), run.mse, run.mae, run.p);
            let fit = &run.fit;
            let _ = writeln!(coefs, "{name},{},const,{},{},{}", label.key(), fit.intercept, fit.t_values[0], fit.p_values[0]);
            for (i, &j) in run.features.iter().enumerate() {
                let _ = writeln!(
                    coefs,
                    "{name},{},{},{},{},{}",
                    label.key(),
                    feature_name(j),
                    fit.coefficients[i],
                    fit.feature_t(i),
                    fit.feature_p(i)
                );
            }
            let (x, _) = design(&subjects, label, &all);
            let report = check_assumptions(fit, &select_columns(&x, &run.features))?;
            let max_vif = report.vif.iter().map(|v| v.value).fold(0.0, f64::max);
            let _ = writeln!(
                checks,
                "{name},{},{},{},{},{},{max_vif}",
                label.key(),
                report.jarque_bera,
                report.jarque_bera_p,
                report.breusch_pagan,
                report.breusch_pagan_p
            );
            let file = format!("{}_{}f.model", label.key(), run.features.len());
            models.push((file, SavedModel::Ols(run.fit).to_text()));
        }
    }
    create_dir(&out)?;
    write_atomic(&out.join("regression.csv"), &metrics)?;
    write_atomic(&out.join("coefficients.csv"), &coefs)?;
    write_atomic(&out.join("assumptions.csv"), &checks)?;
    if let Some(dir) = a.save_models {
        create_dir(&dir)?;
        for (file, text) in models {
            write_atomic(&dir.join(file), &text)?;
        }
    }
    Ok(())
}

fn default_params(family: Family) -> ClassifierParams {
    match family {
        Family::Logistic => ClassifierParams::Logistic(LogisticParams::default()),
        Family::Svm => ClassifierParams::Svm(SvmParams::default()),
        Family::Tree => ClassifierParams::Tree(TreeParams::default()),
    }
}

pub fn classify(a: ClassifyArgs, exec: Execution) -> Result<()> {
    let features = required(a.features, "features")?;
    let out = required(a.out, "out")?;
    let segments = parse_segments(a.segments.as_deref())?;
    let seed = a.seed.unwrap_or(0);
    let cv = cv_scheme(a.cv.as_deref(), "loo", a.folds, seed)?;
    let labels: LabelScheme = a.labels.as_deref().unwrap_or("binary").parse().map_err(|e: Error| usage(e.to_string()))?;
    if labels.n_classes().is_none() {
        bail!(usage("classify needs a discrete label scheme: binary or three"));
    }
    let families: Vec<Family> = match &a.models {
        None => Family::ALL.to_vec(),
        Some(list) => list
            .iter()
            .map(|s| s.parse::<Family>().map_err(|e| usage(e.to_string())))
            .collect::<Result<_>>()?,
    };
    if a.select_within_folds && (a.selection.is_some() || a.grid_global) {
        bail!(usage("--select-within-folds excludes --selection and --grid-global"));
    }
    if a.no_grid && a.grid_global {
        bail!(usage("--grid-global needs the grid; drop --no-grid"));
    }
    let k = check_k(a.k.unwrap_or(DEFAULT_SELECT))?;
    let selection = a.selection.as_deref().map(|p| load_selection(p, &segments)).transpose()?;
    let subjects = load_table(&features)?;
    let grid = (!a.no_grid).then(GridSpec::standard);

    let mut report = String::from("segment,model,accuracy,precision,recall,f1\n");
    let mut models = Vec::new();
    for &label in &segments {
        let mode = if a.select_within_folds {
            SelectionMode::WithinFolds { k }
        } else if let Some(sel) = &selection {
            SelectionMode::Fixed(sel[&label].clone())
        } else {
            SelectionMode::Fixed((0..N_FEATURES).collect())
        };
        for &family in &families {
            let pipeline = Pipeline {
                cv,
                selection: mode.clone(),
                grid: grid.clone(),
                grid_global: a.grid_global,
                seed,
                exec,
            };
            let run = classify_segment(&pipeline, &subjects, label, labels, default_params(family))
                .map_err(|e| e.context(format!("{} {family}", label.key())))?;
            if !run.skipped_folds.is_empty() {
                eprintln!(
                    "{} {family}: {} fold(s) skipped for single-class training labels",
                    label.key(),
                    run.skipped_folds.len()
                );
            }
            let m = run.metrics;
            let _ = writeln!(report, "{},{family},{},{},{},{}", label.key(), m.accuracy, m.precision, m.recall, m.f1);
            if a.save_models.is_some() {
                let model = final_classifier(&pipeline, &subjects, label, labels, family)?;
                models.push((format!("{}_{}.model", label.key(), family.abbrev().to_lowercase()), model));
            }
        }
    }
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_atomic(&out, &report)?;
    if let Some(dir) = a.save_models {
        create_dir(&dir)?;
        for (file, text) in models {
            write_atomic(&dir.join(file), &text)?;
        }
    }
    Ok(())
}

/// Fit on the whole cohort with the hyperparameters the grid picks there.
fn final_classifier(
    pipeline: &Pipeline,
    subjects: &[SubjectRecord],
    label: SegmentLabel,
    labels: LabelScheme,
    family: Family,
) -> Result<String> {
    let cols = match &pipeline.selection {
        SelectionMode::Fixed(cols) => cols.clone(),
        SelectionMode::WithinFolds { k } => {
            let all: Vec<usize> = (0..N_FEATURES).collect();
            let (x, y) = design(subjects, label, &all);
            aggregate_rankings(&rank_all(&x, &y, pipeline.seed, pipeline.exec)?, *k)?.selected
        }
    };
    let (x, scores) = design(subjects, label, &cols);
    let y = labels.labels(&scores)?;
    let n_classes = labels.n_classes().expect("discrete scheme");
    let params = match &pipeline.grid {
        None => default_params(family),
        Some(grid) => {
            let inner = CvScheme::KFold {
                k: corteml::eval::pipeline::INNER_FOLDS,
                seed: rng::derive_seed(pipeline.seed, &[rng::tag::INNER_CV, u64::MAX]),
            };
            grid_search(family, grid, &x, &y, n_classes, inner, pipeline.seed, pipeline.exec)?.best
        }
    };
    let model = StandardizedClassifier::fit(params, &x, &y, n_classes, pipeline.seed)?;
    Ok(SavedModel::Classifier(model).to_text())
}
