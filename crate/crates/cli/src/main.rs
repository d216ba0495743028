//! Batch front door: read matrices and configs, dispatch to the analysis
//! library, emit deterministic JSON/CSV reports.

mod phi;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Map, Value};

use twoproj::bergman::{ideal_commutator_profile, ideal_family, quotient_family, Polynomial};
use twoproj::cmatrix::CMatrix;
use twoproj::dixmier::{verify_isomorphism, SymbolWord};
use twoproj::halmos::{decompose, principal_angles, ProjectionPair};
use twoproj::lattice::{join_with_rank, meet_from_form, span_certificate_from_form};
use twoproj::locality::{coordinate_family, local_support, winding_index, SigmaModel};
use twoproj::spectral::projection_rank;
use twoproj::truncation::{builtin_pair, family_sweep, TruncFamily};
use twoproj::{Error, Result, Tolerances};

use report::{base_config, exit_code, render, render_error, write_out, Payload, Report};

#[derive(Parser)]
#[command(
    name = "twoproj",
    version,
    about = "Analysis of pairs of orthogonal projections: canonical forms, span certificates, \
             symbol calculus, truncation families, ideal profiles, supports and winding numbers"
)]
struct Cli {
    /// Tolerance override: projection validation for matrix subcommands, the
    /// witness threshold for `support`.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Seed for randomized fixtures (echoed into the report header).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output path; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format. Defaults: csv for `family` and `ideal`, json elsewhere.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Escalate desk-scale warnings to errors.
    #[arg(long, global = true)]
    strict: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Canonical form, span certificate and principal angles of a pair.
    Analyze {
        /// Matrix file for P (JSON).
        #[arg(long)]
        p: Option<PathBuf>,
        /// Matrix file for Q (JSON).
        #[arg(long)]
        q: Option<PathBuf>,
        /// Prefix expanding to `<prefix>.p.json` and `<prefix>.q.json`.
        #[arg(long)]
        pair: Option<PathBuf>,
    },
    /// Meet/join ranks and the span gap of a pair.
    Lattice {
        #[arg(long)]
        p: Option<PathBuf>,
        #[arg(long)]
        q: Option<PathBuf>,
        #[arg(long)]
        pair: Option<PathBuf>,
    },
    /// Word norm versus symbol sup-norm for a pair in generic position.
    Dixmier {
        /// Word over P, Q, I with complex coefficients, e.g. "P*Q*P - 0.25*I".
        #[arg(long)]
        word: String,
        #[arg(long)]
        p: Option<PathBuf>,
        #[arg(long)]
        q: Option<PathBuf>,
        #[arg(long)]
        pair: Option<PathBuf>,
    },
    /// Sweep a built-in pair family: commutator norms, gap, span ranks.
    Family {
        /// Built-in name: paper-l2, orthogonal, aligned, quarter-blocks.
        #[arg(long)]
        family: String,
        /// Comma-separated family parameters, strictly increasing.
        #[arg(long)]
        dims: String,
        /// Essential-span cut.
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        /// Comma-separated Schatten exponents.
        #[arg(long, default_value = "1,2")]
        p: String,
    },
    /// Commutator profile of truncated ideal projections on the disk.
    Ideal {
        /// Ascending coefficients of p, e.g. "-1,1" for z-1.
        #[arg(long)]
        p: String,
        /// Optional second polynomial q.
        #[arg(long)]
        q: Option<String>,
        /// Optional common factor r (profiles [pr] against [qr]).
        #[arg(long)]
        r: Option<String>,
        /// Largest degree cap.
        #[arg(long)]
        dmax: usize,
        /// Explicit degree caps (overrides the doubling ladder to dmax).
        #[arg(long)]
        dims: Option<String>,
        /// Comma-separated Schatten exponents for the shift commutator.
        #[arg(long, default_value = "2,4")]
        schatten: String,
    },
    /// Local support of a projection family under a discretized model.
    Support {
        /// Model kind: diagonal, toeplitz, bergman.
        #[arg(long)]
        model: String,
        /// Projection spec: left-half, right-half, full, tail:<k>,
        /// ideal:<coeffs>, ideal-quotient:<coeffs>.
        #[arg(long)]
        proj: String,
        /// Comma-separated family parameters (two largest drive witnesses).
        #[arg(long)]
        dims: Option<String>,
        /// Grid size for the model space.
        #[arg(long, default_value_t = 64)]
        grid: usize,
    },
    /// Winding number of a circle symbol.
    Winding {
        /// Expression in z (e.g. "z^3", "(z-0.5)(z-2)") or `@file` with a
        /// JSON array of samples (numbers or [re, im] pairs).
        #[arg(long)]
        phi: String,
        /// Sample count for expressions.
        #[arg(long, default_value_t = 1024)]
        grid: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json_mode = effective_format(&cli) == Format::Json;
    match run(&cli) {
        Ok(report) => {
            let text = render(&report);
            match write_out(&text, cli.out.as_deref()) {
                Ok(()) => ExitCode::SUCCESS,
                Err(err) => {
                    eprintln!("error: cannot write output: {err}");
                    ExitCode::from(1)
                }
            }
        }
        Err(err) => {
            let code = exit_code(&err);
            let text = render_error(&err, json_mode);
            if json_mode {
                print!("{text}");
            } else {
                eprint!("{text}");
            }
            ExitCode::from(code as u8)
        }
    }
}

fn effective_format(cli: &Cli) -> Format {
    cli.format.unwrap_or(match cli.command {
        Command::Family { .. } | Command::Ideal { .. } => Format::Csv,
        _ => Format::Json,
    })
}

fn format_name(format: Format) -> &'static str {
    match format {
        Format::Json => "json",
        Format::Csv => "csv",
    }
}

fn run(cli: &Cli) -> Result<Report> {
    let format = effective_format(cli);
    if format == Format::Csv
        && !matches!(cli.command, Command::Family { .. } | Command::Ideal { .. })
    {
        return Err(Error::invalid(
            "csv output is only available for `family` and `ideal`",
        ));
    }
    match &cli.command {
        Command::Analyze { p, q, pair } => run_analyze(cli, p, q, pair),
        Command::Lattice { p, q, pair } => run_lattice(cli, p, q, pair),
        Command::Dixmier { word, p, q, pair } => run_dixmier(cli, word, p, q, pair),
        Command::Family {
            family,
            dims,
            epsilon,
            p,
        } => run_family(cli, family, dims, *epsilon, p),
        Command::Ideal {
            p,
            q,
            r,
            dmax,
            dims,
            schatten,
        } => run_ideal(cli, p, q.as_deref(), r.as_deref(), *dmax, dims.as_deref(), schatten),
        Command::Support {
            model,
            proj,
            dims,
            grid,
        } => run_support(cli, model, proj, dims.as_deref(), *grid),
        Command::Winding { phi, grid } => run_winding(cli, phi, *grid),
    }
}

fn config_for(cli: &Cli, subcommand: &str) -> Map<String, Value> {
    base_config(
        subcommand,
        cli.seed,
        cli.strict,
        format_name(effective_format(cli)),
        cli.tol,
    )
}

/// Resolves `--p/--q` files or a `--pair` prefix into a validated pair.
fn load_pair(
    cli: &Cli,
    p: &Option<PathBuf>,
    q: &Option<PathBuf>,
    pair: &Option<PathBuf>,
    config: &mut Map<String, Value>,
) -> Result<ProjectionPair> {
    let (p_path, q_path) = match (p, q, pair) {
        (Some(p), Some(q), None) => (p.clone(), q.clone()),
        (None, None, Some(prefix)) => {
            let base = prefix.to_string_lossy();
            (
                PathBuf::from(format!("{base}.p.json")),
                PathBuf::from(format!("{base}.q.json")),
            )
        }
        _ => {
            return Err(Error::invalid(
                "pass either --p and --q, or --pair <prefix>",
            ))
        }
    };
    config.insert("p_file".into(), json!(p_path.to_string_lossy()));
    config.insert("q_file".into(), json!(q_path.to_string_lossy()));
    let tol = cli.tol.unwrap_or(Tolerances::DEFAULT.projection);
    config.insert("projection_tol".into(), json!(tol));
    let p = CMatrix::read_json(&p_path)?;
    let q = CMatrix::read_json(&q_path)?;
    ProjectionPair::with_tolerance(p, q, tol)
}

fn run_analyze(
    cli: &Cli,
    p: &Option<PathBuf>,
    q: &Option<PathBuf>,
    pair: &Option<PathBuf>,
) -> Result<Report> {
    let mut config = config_for(cli, "analyze");
    let pair = load_pair(cli, p, q, pair, &mut config)?;
    let form = decompose(&pair, Tolerances::DEFAULT.cluster)?;
    let cert = span_certificate_from_form(&form);
    let angles = principal_angles(&pair)?;
    let payload = json!({
        "dim": pair.dim(),
        "halmos": {
            "d": form.d,
            "dg": form.dg,
            "s": form.s,
            "tol": form.tol_used,
        },
        "certificate": cert,
        "angles": angles,
    });
    Ok(Report {
        config,
        payload: Payload::Json(payload),
    })
}

fn run_lattice(
    cli: &Cli,
    p: &Option<PathBuf>,
    q: &Option<PathBuf>,
    pair: &Option<PathBuf>,
) -> Result<Report> {
    let mut config = config_for(cli, "lattice");
    let pair = load_pair(cli, p, q, pair, &mut config)?;
    let form = decompose(&pair, Tolerances::DEFAULT.cluster)?;
    let cert = span_certificate_from_form(&form);
    let meet = meet_from_form(&form)?;
    let (_, join_rank) = join_with_rank(&pair)?;
    let payload = json!({
        "meet_rank": projection_rank(&meet),
        "join_rank": join_rank,
        "gap_to_one": cert.gap_to_one,
        "s_spectrum": form.s,
    });
    Ok(Report {
        config,
        payload: Payload::Json(payload),
    })
}

fn run_dixmier(
    cli: &Cli,
    word: &str,
    p: &Option<PathBuf>,
    q: &Option<PathBuf>,
    pair: &Option<PathBuf>,
) -> Result<Report> {
    let mut config = config_for(cli, "dixmier");
    config.insert("word".into(), json!(word));
    let pair = load_pair(cli, p, q, pair, &mut config)?;
    let parsed = SymbolWord::parse(word)?;
    let report = verify_isomorphism(&parsed, &pair)?;
    Ok(Report {
        config,
        payload: Payload::Json(serde_json::to_value(&report)?),
    })
}

fn parse_usize_list(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::invalid(format!("bad integer `{}` in list", s.trim())))
        })
        .collect()
}

fn parse_f64_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("bad number `{}` in list", s.trim())))
        })
        .collect()
}

fn csv_float(x: f64) -> String {
    format!("{x:.12e}")
}

fn run_family(cli: &Cli, family: &str, dims: &str, epsilon: f64, p: &str) -> Result<Report> {
    let mut config = config_for(cli, "family");
    let params = parse_usize_list(dims)?;
    let p_list = parse_f64_list(p)?;
    config.insert("family".into(), json!(family));
    config.insert("dims".into(), json!(params));
    config.insert("epsilon".into(), json!(epsilon));
    config.insert("schatten_p".into(), json!(p_list));
    let fam = builtin_pair(family, params.clone())?;
    let rows = family_sweep(&fam, &params, epsilon, &p_list)?;
    if effective_format(cli) == Format::Json {
        return Ok(Report {
            config,
            payload: Payload::Json(serde_json::to_value(&rows)?),
        });
    }
    let mut columns = String::from("dim,comm_norm");
    for p in &p_list {
        columns.push_str(&format!(",schatten_{p}"));
    }
    columns.push_str(",gap_to_one,rank_join,rank_ess_span,delta");
    let body = rows
        .iter()
        .map(|row| {
            let mut line = format!("{},{}", row.param, csv_float(row.comm_norm));
            for s in &row.schatten {
                line.push_str(&format!(",{}", csv_float(*s)));
            }
            line.push_str(&format!(
                ",{},{},{},{}",
                csv_float(row.gap_to_one),
                row.rank_join,
                row.rank_ess_span,
                row.delta
            ));
            line
        })
        .collect();
    Ok(Report {
        config,
        payload: Payload::Csv {
            columns,
            rows: body,
        },
    })
}

/// Degree-cap ladder: doubling from 10 up to `dmax`, always including `dmax`.
fn degree_ladder(dmax: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut d = 10;
    while d < dmax {
        out.push(d);
        d *= 2;
    }
    out.push(dmax);
    out
}

fn run_ideal(
    cli: &Cli,
    p: &str,
    q: Option<&str>,
    r: Option<&str>,
    dmax: usize,
    dims: Option<&str>,
    schatten: &str,
) -> Result<Report> {
    let mut config = config_for(cli, "ideal");
    let p_poly = Polynomial::parse_list(p)?;
    let q_poly = q.map(Polynomial::parse_list).transpose()?;
    let r_poly = r.map(Polynomial::parse_list).transpose()?;
    let d_list = match dims {
        Some(text) => parse_usize_list(text)?,
        None => degree_ladder(dmax),
    };
    let p_list = parse_f64_list(schatten)?;
    config.insert("p".into(), json!(p));
    config.insert("q".into(), json!(q));
    config.insert("r".into(), json!(r));
    config.insert("dmax".into(), json!(dmax));
    config.insert("d_list".into(), json!(d_list));
    config.insert("schatten_p".into(), json!(p_list));
    let rows = ideal_commutator_profile(
        &p_poly,
        q_poly.as_ref(),
        r_poly.as_ref(),
        &d_list,
        &p_list,
    )?;
    if effective_format(cli) == Format::Json {
        return Ok(Report {
            config,
            payload: Payload::Json(serde_json::to_value(&rows)?),
        });
    }
    let mut columns = String::from("d,shift_comm_norm");
    for p in &p_list {
        columns.push_str(&format!(",schatten_{p}"));
    }
    columns.push_str(",cross_comm_norm");
    let body = rows
        .iter()
        .map(|row| {
            let mut line = format!("{},{}", row.d, csv_float(row.shift_comm_norm));
            for s in &row.schatten {
                line.push_str(&format!(",{}", csv_float(*s)));
            }
            match row.cross_comm_norm {
                Some(v) => line.push_str(&format!(",{}", csv_float(v))),
                None => line.push(','),
            }
            line
        })
        .collect();
    Ok(Report {
        config,
        payload: Payload::Csv {
            columns,
            rows: body,
        },
    })
}

fn run_support(
    cli: &Cli,
    model_name: &str,
    proj: &str,
    dims: Option<&str>,
    grid: usize,
) -> Result<Report> {
    let mut config = config_for(cli, "support");
    let tol = cli.tol.unwrap_or(1e-3);
    config.insert("model".into(), json!(model_name));
    config.insert("proj".into(), json!(proj));
    config.insert("grid".into(), json!(grid));
    config.insert("support_tol".into(), json!(tol));
    let model = Arc::new(match model_name {
        "diagonal" => SigmaModel::diagonal(grid),
        "toeplitz" => SigmaModel::toeplitz(grid),
        "bergman" => SigmaModel::bergman(grid),
        other => {
            return Err(Error::invalid(format!(
                "unknown model `{other}` (expected diagonal, toeplitz, bergman)"
            )))
        }
    });
    let params = match dims {
        Some(text) => parse_usize_list(text)?,
        None => match model_name {
            "bergman" => vec![30, 60],
            _ => vec![32, 64],
        },
    };
    config.insert("dims".into(), json!(params));
    let family = build_projection_family(&model, proj, &params)?;
    let support = local_support(&family, &model, &params, tol, cli.strict)?;
    Ok(Report {
        config,
        payload: Payload::Json(serde_json::to_value(&support)?),
    })
}

fn build_projection_family(
    model: &Arc<SigmaModel>,
    proj: &str,
    params: &[usize],
) -> Result<TruncFamily> {
    let g = model.grid_size();
    if let Some(rest) = proj.strip_prefix("ideal:") {
        let poly = Polynomial::parse_list(rest)?;
        return ideal_family(&poly, params.to_vec());
    }
    if let Some(rest) = proj.strip_prefix("ideal-quotient:") {
        let poly = Polynomial::parse_list(rest)?;
        return quotient_family(&poly, params.to_vec());
    }
    if let Some(rest) = proj.strip_prefix("tail:") {
        let k: usize = rest
            .parse()
            .map_err(|_| Error::invalid(format!("bad tail count `{rest}`")))?;
        return TruncFamily::new(
            format!("tail:{k}"),
            params.to_vec(),
            twoproj::truncation::Embedding::LeadingPrincipal,
            move |n| {
                CMatrix::from_fn(n, n, |i, j| {
                    if i == j && i >= k {
                        Complex64::new(1.0, 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
            },
        );
    }
    match proj {
        "left-half" => coordinate_family(model, "left-half", params.to_vec(), move |j| j < g / 2),
        "right-half" => {
            coordinate_family(model, "right-half", params.to_vec(), move |j| j >= g / 2)
        }
        "full" => coordinate_family(model, "full", params.to_vec(), |_| true),
        other => Err(Error::invalid(format!(
            "unknown projection spec `{other}` (expected left-half, right-half, full, tail:<k>, \
             ideal:<coeffs>, ideal-quotient:<coeffs>)"
        ))),
    }
}

fn run_winding(cli: &Cli, phi: &str, grid: usize) -> Result<Report> {
    let mut config = config_for(cli, "winding");
    config.insert("phi".into(), json!(phi));
    config.insert("grid".into(), json!(grid));
    let samples = if let Some(path) = phi.strip_prefix('@') {
        read_samples(Path::new(path))?
    } else {
        phi::sample_expression(phi, grid)?
    };
    let winding = winding_index(&samples)?;
    Ok(Report {
        config,
        payload: Payload::Json(json!({ "winding": winding })),
    })
}

/// Sample files: a JSON array whose entries are numbers or `[re, im]` pairs.
fn read_samples(path: &Path) -> Result<Vec<Complex64>> {
    let text = std::fs::read_to_string(path)?;
    let raw: Vec<Value> = serde_json::from_str(&text)?;
    raw.iter()
        .enumerate()
        .map(|(k, v)| match v {
            Value::Number(n) => Ok(Complex64::new(n.as_f64().unwrap_or(f64::NAN), 0.0)),
            Value::Array(parts) if parts.len() == 2 => {
                let re = parts[0].as_f64();
                let im = parts[1].as_f64();
                match (re, im) {
                    (Some(re), Some(im)) => Ok(Complex64::new(re, im)),
                    _ => Err(Error::Parse {
                        position: k,
                        message: "sample entries must be numbers".into(),
                    }),
                }
            }
            _ => Err(Error::Parse {
                position: k,
                message: "expected a number or an [re, im] pair".into(),
            }),
        })
        .collect()
}
