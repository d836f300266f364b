//! Plain-text serialization of fitted models.
//!
//! ```text
//! corteml-model 1
//! kind classifier
//! ...
//! ```
//!
//! One `key value...` entry per line, read back in the order written.
//! Floats use the shortest representation that parses back to the same
//! bits, so a save/load round trip is exact.

use std::fmt::Write as _;
use std::str::FromStr;

use super::{
    BinaryModel, Classifier, ClassifierParams, Kernel, LogisticModel, LogisticParams, MaxFeatures,
    OlsFit, SplitCriterion, StandardizedClassifier, SvmModel, SvmParams, TreeModel, TreeParams,
};
use super::tree::Node;
use crate::error::{Error, Result};
use crate::linalg::Standardizer;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "corteml-model";

#[derive(Debug, Clone, PartialEq)]
pub enum SavedModel {
    Ols(OlsFit),
    Classifier(StandardizedClassifier),
}

impl SavedModel {
    pub fn to_text(&self) -> String {
        let mut w = Writer::default();
        w.line(MAGIC, &[FORMAT_VERSION.to_string()]);
        match self {
            SavedModel::Ols(fit) => {
                w.line("kind", &["ols"]);
                write_ols(&mut w, fit);
            }
            SavedModel::Classifier(m) => {
                w.line("kind", &["classifier"]);
                w.floats("means", &m.standardizer.means);
                w.floats("sds", &m.standardizer.sds);
                write_classifier(&mut w, &m.classifier);
            }
        }
        w.out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut r = Reader::new(text);
        let version: u32 = r.value(MAGIC)?;
        if version != FORMAT_VERSION {
            return Err(Error::ModelFormat(format!("unsupported version {version}")));
        }
        let kind: String = r.value("kind")?;
        let model = match kind.as_str() {
            "ols" => SavedModel::Ols(read_ols(&mut r)?),
            "classifier" => {
                let means = r.floats("means")?;
                let sds = r.floats("sds")?;
                if means.len() != sds.len() {
                    return Err(Error::ModelFormat("means and sds differ in length".into()));
                }
                SavedModel::Classifier(StandardizedClassifier {
                    standardizer: Standardizer { means, sds },
                    classifier: read_classifier(&mut r)?,
                })
            }
            other => return Err(Error::ModelFormat(format!("unknown kind {other:?}"))),
        };
        r.finish()?;
        Ok(model)
    }
}

fn f(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Default)]
struct Writer {
    out: String,
}

impl Writer {
    fn line<S: AsRef<str>>(&mut self, key: &str, values: &[S]) {
        self.out.push_str(key);
        for v in values {
            self.out.push(' ');
            self.out.push_str(v.as_ref());
        }
        self.out.push('\n');
    }

    fn value(&mut self, key: &str, v: impl ToString) {
        self.line(key, &[v.to_string()]);
    }

    fn float(&mut self, key: &str, v: f64) {
        self.line(key, &[f(v)]);
    }

    fn floats(&mut self, key: &str, v: &[f64]) {
        let _ = write!(self.out, "{key} {}", v.len());
        for x in v {
            let _ = write!(self.out, " {x:?}");
        }
        self.out.push('\n');
    }
}

struct Reader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Reader {
            lines: text.lines().enumerate(),
        }
    }

    fn tokens(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let (no, line) = loop {
            match self.lines.next() {
                Some((_, l)) if l.trim().is_empty() => continue,
                Some(x) => break x,
                None => return Err(Error::ModelFormat(format!("missing {key:?}"))),
            }
        };
        let mut it = line.split_whitespace();
        let got = it.next().unwrap_or_default();
        if got != key {
            return Err(Error::ModelFormat(format!(
                "line {}: expected {key:?}, found {got:?}",
                no + 1
            )));
        }
        Ok(it.collect())
    }

    fn value<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let t = self.tokens(key)?;
        match t.as_slice() {
            [v] => parse(key, v),
            _ => Err(Error::ModelFormat(format!("{key}: expected one value"))),
        }
    }

    fn floats(&mut self, key: &str) -> Result<Vec<f64>> {
        let t = self.tokens(key)?;
        let (n, rest) = t
            .split_first()
            .ok_or_else(|| Error::ModelFormat(format!("{key}: missing length")))?;
        let n: usize = parse(key, n)?;
        if rest.len() != n {
            return Err(Error::ModelFormat(format!(
                "{key}: declared {n} values, found {}",
                rest.len()
            )));
        }
        rest.iter().map(|v| parse(key, v)).collect()
    }

    fn finish(mut self) -> Result<()> {
        match self.lines.find(|(_, l)| !l.trim().is_empty()) {
            Some((no, _)) => Err(Error::ModelFormat(format!("trailing data at line {}", no + 1))),
            None => Ok(()),
        }
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::ModelFormat(format!("{key}: cannot parse {v:?}")))
}

fn write_ols(w: &mut Writer, fit: &OlsFit) {
    w.value("n_obs", fit.n_obs);
    w.float("intercept", fit.intercept);
    w.floats("coefficients", &fit.coefficients);
    w.floats("std_errors", &fit.std_errors);
    w.floats("t_values", &fit.t_values);
    w.floats("p_values", &fit.p_values);
    w.float("r_squared", fit.r_squared);
    w.floats("f_statistic", fit.f_statistic.as_slice());
    w.floats("f_p_value", fit.f_p_value.as_slice());
    w.float("mse", fit.mse);
    w.float("mae", fit.mae);
    w.floats("residuals", &fit.residuals);
}

fn optional(key: &str, v: Vec<f64>) -> Result<Option<f64>> {
    match v.as_slice() {
        [] => Ok(None),
        [x] => Ok(Some(*x)),
        _ => Err(Error::ModelFormat(format!("{key}: at most one value"))),
    }
}

fn read_ols(r: &mut Reader) -> Result<OlsFit> {
    let n_obs = r.value("n_obs")?;
    let intercept = r.value("intercept")?;
    let coefficients = r.floats("coefficients")?;
    let std_errors = r.floats("std_errors")?;
    let t_values = r.floats("t_values")?;
    let p_values = r.floats("p_values")?;
    let r_squared = r.value("r_squared")?;
    let f_statistic = optional("f_statistic", r.floats("f_statistic")?)?;
    let f_p_value = optional("f_p_value", r.floats("f_p_value")?)?;
    let mse = r.value("mse")?;
    let mae = r.value("mae")?;
    let residuals = r.floats("residuals")?;
    let p = coefficients.len();
    if std_errors.len() != p + 1 || t_values.len() != p + 1 || p_values.len() != p + 1 {
        return Err(Error::ModelFormat("inconsistent OLS array lengths".into()));
    }
    Ok(OlsFit {
        intercept,
        coefficients,
        std_errors,
        t_values,
        p_values,
        r_squared,
        f_statistic,
        f_p_value,
        mse,
        mae,
        residuals,
        n_obs,
    })
}

fn write_classifier(w: &mut Writer, c: &Classifier) {
    w.value("n_classes", c.n_classes);
    match c.params {
        ClassifierParams::Logistic(p) => {
            w.line("family", &["LR"]);
            write_logistic_params(w, &p);
        }
        ClassifierParams::Svm(p) => {
            w.line("family", &["SVM"]);
            write_svm_params(w, &p);
        }
        ClassifierParams::Tree(p) => {
            w.line("family", &["DT"]);
            write_tree_params(w, &p);
        }
    }
    w.value("models", c.models.len());
    for m in &c.models {
        match m {
            None => w.line("model", &["absent"]),
            Some(BinaryModel::Logistic(m)) => {
                w.line("model", &["present"]);
                w.floats("weights", &m.weights);
                w.float("bias", m.intercept);
                w.value("iterations", m.iterations);
                w.value("converged", m.converged);
            }
            Some(BinaryModel::Svm(m)) => {
                w.line("model", &["present"]);
                w.value("support_vectors", m.support_vectors.len());
                for (sv, (a, y)) in m.support_vectors.iter().zip(m.alphas.iter().zip(&m.labels)) {
                    w.float("alpha", *a);
                    w.float("label", *y);
                    w.floats("sv", sv);
                }
                w.float("bias", m.bias);
                w.value("iterations", m.iterations);
                w.value("converged", m.converged);
            }
            Some(BinaryModel::Tree(m)) => {
                w.line("model", &["present"]);
                write_tree(w, m);
            }
        }
    }
}

fn read_classifier(r: &mut Reader) -> Result<Classifier> {
    let n_classes: usize = r.value("n_classes")?;
    let family: super::Family = r.value("family")?;
    let params = match family {
        super::Family::Logistic => ClassifierParams::Logistic(read_logistic_params(r)?),
        super::Family::Svm => ClassifierParams::Svm(read_svm_params(r)?),
        super::Family::Tree => ClassifierParams::Tree(read_tree_params(r)?),
    };
    let count: usize = r.value("models")?;
    let expected = if n_classes == 2 { 1 } else { n_classes };
    if n_classes < 2 || count != expected {
        return Err(Error::ModelFormat(format!(
            "{count} binary models for {n_classes} classes"
        )));
    }
    let mut models = Vec::with_capacity(count);
    for _ in 0..count {
        let state: String = r.value("model")?;
        if state == "absent" {
            models.push(None);
            continue;
        }
        if state != "present" {
            return Err(Error::ModelFormat(format!("unknown model state {state:?}")));
        }
        models.push(Some(match params {
            ClassifierParams::Logistic(p) => BinaryModel::Logistic(LogisticModel {
                weights: r.floats("weights")?,
                intercept: r.value("bias")?,
                params: p,
                iterations: r.value("iterations")?,
                converged: r.value("converged")?,
            }),
            ClassifierParams::Svm(p) => {
                let n: usize = r.value("support_vectors")?;
                let (mut svs, mut alphas, mut labels) = (Vec::new(), Vec::new(), Vec::new());
                for _ in 0..n {
                    alphas.push(r.value("alpha")?);
                    labels.push(r.value("label")?);
                    svs.push(r.floats("sv")?);
                }
                BinaryModel::Svm(SvmModel {
                    params: p,
                    support_vectors: svs,
                    alphas,
                    labels,
                    bias: r.value("bias")?,
                    iterations: r.value("iterations")?,
                    converged: r.value("converged")?,
                })
            }
            ClassifierParams::Tree(p) => {
                let m = read_tree(r)?;
                if m.params != p {
                    return Err(Error::ModelFormat("tree parameters disagree".into()));
                }
                BinaryModel::Tree(m)
            }
        }));
    }
    Ok(Classifier {
        params,
        n_classes,
        models,
    })
}

fn write_logistic_params(w: &mut Writer, p: &LogisticParams) {
    w.float("C", p.c);
    w.value("dual", p.dual);
    w.value("max_iter", p.max_iter);
}

fn read_logistic_params(r: &mut Reader) -> Result<LogisticParams> {
    Ok(LogisticParams {
        c: r.value("C")?,
        dual: r.value("dual")?,
        max_iter: r.value("max_iter")?,
    })
}

fn write_svm_params(w: &mut Writer, p: &SvmParams) {
    w.float("C", p.c);
    w.float("gamma", p.gamma);
    w.value("kernel", p.kernel);
    w.value("degree", p.degree);
    w.value("max_iter", p.max_iter);
}

fn read_svm_params(r: &mut Reader) -> Result<SvmParams> {
    Ok(SvmParams {
        c: r.value("C")?,
        gamma: r.value("gamma")?,
        kernel: r.value::<Kernel>("kernel")?,
        degree: r.value("degree")?,
        max_iter: r.value("max_iter")?,
    })
}

fn write_tree_params(w: &mut Writer, p: &TreeParams) {
    w.value("max_features", p.max_features);
    w.value("min_samples_leaf", p.min_samples_leaf);
    w.value("min_samples_split", p.min_samples_split);
    w.value("criterion", p.criterion);
}

fn read_tree_params(r: &mut Reader) -> Result<TreeParams> {
    Ok(TreeParams {
        max_features: r.value::<MaxFeatures>("max_features")?,
        min_samples_leaf: r.value("min_samples_leaf")?,
        min_samples_split: r.value("min_samples_split")?,
        criterion: r.value::<SplitCriterion>("criterion")?,
    })
}

fn write_tree(w: &mut Writer, m: &TreeModel) {
    write_tree_params(w, &m.params);
    w.value("n_features", m.n_features);
    w.value("n_classes", m.n_classes);
    w.value("nodes", m.nodes.len());
    for (node, samples) in m.nodes.iter().zip(&m.node_samples) {
        match node {
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => w.line(
                "split",
                &[
                    samples.to_string(),
                    feature.to_string(),
                    f(*threshold),
                    left.to_string(),
                    right.to_string(),
                ],
            ),
            Node::Leaf { value } => {
                w.value("leaf", samples);
                w.floats("value", value);
            }
        }
    }
}

fn read_tree(r: &mut Reader) -> Result<TreeModel> {
    let params = read_tree_params(r)?;
    let n_features: usize = r.value("n_features")?;
    let n_classes: usize = r.value("n_classes")?;
    let n: usize = r.value("nodes")?;
    let mut nodes = Vec::with_capacity(n);
    let mut node_samples = Vec::with_capacity(n);
    for i in 0..n {
        // The line key tells which node kind follows.
        let peek = r.lines.clone().find(|(_, l)| !l.trim().is_empty()).map(|(_, l)| l);
        if peek.is_some_and(|l| l.starts_with("split")) {
            let t = r.tokens("split")?;
            let [s, feat, thr, left, right] = t.as_slice() else {
                return Err(Error::ModelFormat("split: expected 5 values".into()));
            };
            let (left, right): (usize, usize) = (parse("split", left)?, parse("split", right)?);
            let feature: usize = parse("split", feat)?;
            if left <= i || right <= i || left >= n || right >= n || feature >= n_features {
                return Err(Error::ModelFormat(format!("node {i}: invalid split")));
            }
            node_samples.push(parse("split", s)?);
            nodes.push(Node::Split {
                feature,
                threshold: parse("split", thr)?,
                left,
                right,
            });
        } else {
            node_samples.push(r.value("leaf")?);
            nodes.push(Node::Leaf {
                value: r.floats("value")?,
            });
        }
    }
    if nodes.is_empty() {
        return Err(Error::ModelFormat("tree without nodes".into()));
    }
    Ok(TreeModel {
        params,
        n_features,
        n_classes,
        nodes,
        node_samples,
    })
}
