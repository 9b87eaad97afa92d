use std::fs::File;
use std::io::{self, BufWriter, Write};

use mgpd::analysis::diagnose as diagnose_table;
use mgpd::batch::{read_csv_path, sidecar_path, write_csv, BatchMeta};
use mgpd::fit::{fit_mle, FitFamily};
use mgpd::optim::NelderMeadConfig;
use mgpd::{Error, GevParams, GpParams, Matrix, ModelSpec, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::{ConvertArgs, DiagnoseArgs, EvalArgs, ExcessArgs, FamilyArg, FitArgs, McArgs, SimulateArgs};

/// Parses `arg` as inline JSON when it starts with `{`, else as a file path.
fn load_json<T: DeserializeOwned>(arg: &str) -> Result<T> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg)?
    };
    Ok(serde_json::from_str(&text)?)
}

fn load_model(arg: &str) -> Result<ModelSpec> {
    let value: serde_json::Value = load_json(arg)?;
    let spec = if value.get("representation").is_some() {
        serde_json::from_value(value)?
    } else {
        ModelSpec::PiEll(serde_json::from_value(value)?)
    };
    spec.validate()?;
    Ok(spec)
}

fn model_params(spec: &ModelSpec, mc: &McArgs) -> Result<GpParams> {
    match spec {
        ModelSpec::PiEll(h) => Ok(h.clone()),
        ModelSpec::Spectral { .. } => {
            let seed = mc.seed.ok_or_else(|| Error::invalid("seed", "required to extract (pi, l) from a spectral model"))?;
            spec.gp_params(mc.n_mc, seed)
        }
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn parse_point(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid("x", format!("not a number: {f:?}")))
        })
        .collect()
}

pub fn simulate(a: SimulateArgs) -> Result<()> {
    let (spec, seed, n) = match &a.from_sidecar {
        Some(path) => {
            let meta: BatchMeta = serde_json::from_reader(File::open(path)?)?;
            let spec: ModelSpec = serde_json::from_value(meta.params)?;
            (spec, a.seed.unwrap_or(meta.seed), a.n.unwrap_or(meta.n))
        }
        None => {
            let model = a.model.as_deref().ok_or_else(|| Error::invalid("model", "missing"))?;
            let seed = a.seed.ok_or_else(|| Error::invalid("seed", "missing"))?;
            let n = a.n.ok_or_else(|| Error::invalid("n", "missing"))?;
            (load_model(model)?, seed, n)
        }
    };
    let batch = spec.simulate(n, seed)?;
    batch.save(&a.out)?;
    if let Some(w) = &batch.meta.warning {
        eprintln!("warning: {w}");
    }
    eprintln!("wrote {} rows to {} ({})", batch.n(), a.out.display(), sidecar_path(&a.out).display());
    Ok(())
}

/// Rows with some `y_j > u_j`, shifted to `y - u`. A `-inf` threshold keeps
/// its column as is.
pub fn excess_rows(data: &Matrix, u: &[f64]) -> Result<Matrix> {
    let d = data.ncols();
    let u: Vec<f64> = match u.len() {
        1 => vec![u[0]; d],
        k if k == d => u.to_vec(),
        k => return Err(Error::DimensionMismatch { expected: d, got: k }),
    };
    if let Some(j) = u.iter().position(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::invalid("u", format!("component {j} is {}", u[j])));
    }
    let mut out = Matrix::with_capacity(d, 0);
    let mut shifted = vec![0.0; d];
    for row in data.rows() {
        if row.iter().zip(&u).any(|(y, t)| y > t) {
            for j in 0..d {
                shifted[j] = if u[j] == f64::NEG_INFINITY { row[j] } else { row[j] - u[j] };
            }
            out.push_row(&shifted);
        }
    }
    Ok(out)
}

pub fn excess(a: ExcessArgs) -> Result<()> {
    let data = read_csv_path(&a.input)?;
    let out = excess_rows(&data, &a.u)?;
    match &a.out {
        Some(path) => write_csv(&out, BufWriter::new(File::create(path)?))?,
        None => write_csv(&out, io::stdout().lock())?,
    }
    eprintln!("kept {} of {} rows", out.nrows(), data.nrows());
    Ok(())
}

#[derive(Serialize)]
struct CdfValue {
    x: Vec<f64>,
    cdf: f64,
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let spec = load_model(&a.model)?;
    let h = model_params(&spec, &a.mc)?;
    let mut points: Vec<Vec<f64>> = a.points.iter().map(|p| parse_point(p)).collect::<Result<_>>()?;
    if let Some(path) = &a.input {
        points.extend(read_csv_path(path)?.rows().map(<[f64]>::to_vec));
    }
    if points.is_empty() {
        return Err(Error::invalid("x", "no points given (use --x or --input)"));
    }
    let values = points
        .into_iter()
        .map(|x| Ok(CdfValue { cdf: h.cdf(&x)?, x }))
        .collect::<Result<Vec<_>>>()?;
    print_json(&values)
}

pub fn convert(a: ConvertArgs) -> Result<()> {
    let mut g: GevParams = load_json(&a.gev)?;
    g.validate()?;
    if let Some(t) = a.orbit {
        g = g.orbit(t)?;
    }
    print_json(&g.to_gp()?)
}

pub fn fit(a: FitArgs) -> Result<()> {
    let data = read_csv_path(&a.input)?;
    let family = match a.family {
        FamilyArg::Univariate => FitFamily::UnivariateGp,
        FamilyArg::Logistic => FitFamily::LogisticGp { dim: data.ncols() },
    };
    let init = a.init.clone().unwrap_or_else(|| family.default_init());
    let mut cfg = NelderMeadConfig::default();
    if let Some(m) = a.max_iter {
        cfg.max_iter = m;
    }
    if let Some(f) = a.ftol {
        cfg.ftol = f;
    }
    let report = fit_mle(&data, family, &init, &cfg)?;
    print_json(&report)?;
    report.require_converged()
}

pub fn diagnose(a: DiagnoseArgs) -> Result<()> {
    let data = read_csv_path(&a.input)?;
    let h = model_params(&load_model(&a.model)?, &a.mc)?;
    let rows = diagnose_table(&data, &h, &a.p)?;
    if a.csv {
        write_table(&rows, io::stdout().lock())
    } else {
        print_json(&rows)
    }
}

fn write_table<W: Write>(rows: &[mgpd::analysis::DiagnoseRow], mut out: W) -> Result<()> {
    writeln!(out, "p,empirical,se,predicted,ratio")?;
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.p, r.empirical, r.se, r.predicted, r.ratio)?;
    }
    Ok(())
}
