use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use iceberg_qaoa::baselines::{goemans_williamson, run_pcs};
use iceberg_qaoa::config::Config;
use iceberg_qaoa::experiments::{
    breakeven_contour, breakeven_k, end_fractions, frontier_sweep, gadget_times, gw_breakeven_scan,
    mc_scale, perturbation_study, post_rate_contour, runtime_estimate, sk_comparison, sweep_csv,
    syndrome_placement_sweep, BreakevenTarget, SweepSpec,
};
use iceberg_qaoa::fitting::{
    bootstrap, filter_dataset, fit_iceberg, fit_unencoded, CircuitRecord, Dataset,
};
use iceberg_qaoa::iceberg::{gate_budget, sidecar_json};
use iceberg_qaoa::montecarlo::{
    encode_for, iceberg_shots, run_iceberg_with, run_unencoded, unencoded_shots, write_shots_csv,
    IcebergOptions, RunSummary,
};
use iceberg_qaoa::noise::{Mode, NoiseParams};
use iceberg_qaoa::oracle::{enumerate_fractions, report_csv_row, CSV_HEADER};
use iceberg_qaoa::perfmodel::{predict, predict_batch_json, CircuitShape, GadgetKind};
use iceberg_qaoa::problems::{gen_erdos_renyi, gen_regular_graph, gen_sk, Family, ProblemInstance};
use iceberg_qaoa::qaoa::{
    approximation_ratio, fixed_angles, load_params_file, noiseless_energy, optimize_params,
    QaoaParams,
};
use iceberg_qaoa::{Error, Result};

/// Iceberg-encoded QAOA benchmarking toolkit.
#[derive(Parser, Debug)]
#[command(name = "iceberg", version, about)]
struct Cli {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 1000)]
    shots: usize,
    /// Flat `key = value` file with noise rates or sweep ranges.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone)]
struct Circ {
    /// Edge list file.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 1)]
    ell: usize,
    /// Parameter file (`ell gamma... beta...` lines); fixed angles otherwise.
    #[arg(long)]
    params: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Block {
    Init,
    Syndrome,
    Final,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Study {
    Frontier,
    Breakeven,
    Placement,
    Sk,
    Perturb,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Generate a problem instance as an edge list.
    Gen {
        #[arg(long, default_value = "regular")]
        family: Family,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 3)]
        degree: usize,
        /// Edge count for erdos_renyi.
        #[arg(long)]
        edges: Option<usize>,
    },
    /// Noiseless QAOA energy and approximation ratio.
    Qaoa {
        #[command(flatten)]
        circ: Circ,
        /// Optimize angles instead of using the fixed set.
        #[arg(long)]
        optimize: bool,
    },
    /// Encode a QAOA circuit and print its gate list.
    Encode {
        #[command(flatten)]
        circ: Circ,
        #[arg(long, default_value_t = 1)]
        s: usize,
        #[arg(long)]
        no_dd: bool,
        /// Write the block sidecar JSON here.
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
    /// Noisy Monte-Carlo run; `--s 0` runs the unencoded circuit.
    Run {
        #[command(flatten)]
        circ: Circ,
        #[arg(long, default_value_t = 1)]
        s: usize,
        /// Per-shot CSV.
        #[arg(long)]
        shots_csv: Option<PathBuf>,
        /// Append the run to this dataset JSON.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Performance-model prediction.
    Model {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 1)]
        ell: usize,
        #[arg(long, default_value_t = 1)]
        s: usize,
        #[arg(long, default_value_t = 3)]
        degree: usize,
        /// JSON batch of `{shape, noise}` items.
        #[arg(long)]
        batch: Option<PathBuf>,
    },
    /// Exact fault enumeration in one gadget.
    Oracle {
        #[arg(long, value_enum)]
        block: Block,
        #[arg(long, value_delimiter = ',')]
        k: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        mu: usize,
    },
    /// Fit error rates to a dataset.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "iceberg")]
        role: String,
        #[arg(long, default_value_t = 3000)]
        iterations: usize,
        #[arg(long)]
        no_filter: bool,
    },
    /// Model sweeps and Monte-Carlo studies.
    Sweep {
        #[arg(long, value_enum)]
        study: Study,
        #[arg(long, default_value_t = 16)]
        k: usize,
        #[arg(long, default_value_t = 10)]
        ell: usize,
        #[arg(long, default_value_t = 4)]
        s: usize,
        /// Breakeven target fidelity; derived from the ratios below when absent.
        #[arg(long)]
        target: Option<f64>,
        #[arg(long, default_value_t = 0.9554)]
        gw_alpha: f64,
        #[arg(long, default_value_t = 0.9810)]
        noiseless_alpha: f64,
        /// Random-assignment ratio; switches the target to the noisy ratio.
        #[arg(long)]
        random_alpha: Option<f64>,
    },
    /// Goemans–Williamson baseline.
    Gw {
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, default_value_t = 16)]
        k: usize,
        /// Number of seeded 3-regular graphs when no file is given.
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Pauli-check sandwiching run.
    Pcs {
        #[command(flatten)]
        circ: Circ,
        #[arg(long, default_value_t = 1)]
        checks: usize,
    },
    /// Runtime factor λ from gadget times and discard fractions, or from a run.
    Runtime {
        #[arg(long, value_delimiter = ',')]
        times: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        discards: Vec<f64>,
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        ell: usize,
        #[arg(long, default_value_t = 1)]
        s: usize,
    },
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn load_graph(p: &Path) -> Result<ProblemInstance> {
    ProblemInstance::read_edge_list(BufReader::new(File::open(p)?))
}

fn params_for(circ: &Circ, inst: &ProblemInstance) -> Result<QaoaParams> {
    if let Some(p) = &circ.params {
        return load_params_file(p)?.remove(&circ.ell).ok_or_else(|| {
            Error::InvalidArgument(format!("no parameters for ell = {}", circ.ell))
        });
    }
    if inst.family.is_maxcut() {
        if let Some(p) = fixed_angles(circ.ell) {
            return Ok(p);
        }
    }
    optimize_params(inst, circ.ell, 30)
}

fn noise(cli: &Cli) -> Result<NoiseParams> {
    match &cli.config {
        Some(p) => NoiseParams::from_config(&Config::load(p)?),
        None => Ok(NoiseParams::central_fit()),
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.cmd {
        Cmd::Gen {
            family,
            k,
            degree,
            edges,
        } => {
            let inst = match family {
                Family::Regular => gen_regular_graph(*k, *degree, cli.seed)?,
                Family::ErdosRenyi => {
                    let m =
                        edges.ok_or_else(|| Error::InvalidArgument("--edges required".into()))?;
                    gen_erdos_renyi(*k, m, cli.seed)?
                }
                Family::Sk => gen_sk(*k, cli.seed)?,
            };
            let mut buf = Vec::new();
            inst.write_edge_list(&mut buf)?;
            emit(&cli.out, &String::from_utf8_lossy(&buf))
        }
        Cmd::Qaoa { circ, optimize } => {
            let inst = load_graph(&circ.graph)?;
            let params = if *optimize {
                optimize_params(&inst, circ.ell, 30)?
            } else {
                params_for(circ, &inst)?
            };
            let e = noiseless_energy(&inst, &params)?;
            let alpha = approximation_ratio(&inst, e.energy)?;
            let v = serde_json::json!({ "k": inst.k, "ell": circ.ell, "energy": e.energy, "alpha": alpha, "params": params.to_line() });
            emit(
                &cli.out,
                &format!("{}\n", serde_json::to_string_pretty(&v)?),
            )
        }
        Cmd::Encode {
            circ,
            s,
            no_dd,
            sidecar,
        } => {
            let inst = load_graph(&circ.graph)?;
            let params = params_for(circ, &inst)?;
            let opts = IcebergOptions {
                s: *s,
                offsets: None,
                dd: !no_dd,
            };
            let enc = encode_for(&inst, &params, &opts)?;
            if let Some(p) = sidecar {
                std::fs::write(p, sidecar_json(&enc)?)?;
            }
            for b in gate_budget(&enc) {
                eprintln!("{b:?}");
            }
            emit(&cli.out, &enc.circuit.dump())
        }
        Cmd::Run {
            circ,
            s,
            shots_csv,
            dataset,
        } => {
            let inst = load_graph(&circ.graph)?;
            let params = params_for(circ, &inst)?;
            let nz = noise(cli)?;
            let g1 = inst.k * params.layers();
            let g2 = inst.num_edges() * params.layers();
            let (summary, shape) = if *s == 0 {
                if let Some(p) = shots_csv {
                    write_shots_csv(
                        &inst,
                        &unencoded_shots(&inst, &params, &nz, cli.shots, cli.seed)?,
                        File::create(p)?,
                    )?;
                }
                (
                    run_unencoded(&inst, &params, &nz, cli.shots, cli.seed)?,
                    CircuitShape::balanced(inst.k, g1, g2, 1)?,
                )
            } else {
                let opts = IcebergOptions::new(*s);
                if let Some(p) = shots_csv {
                    let (_, recs) = iceberg_shots(&inst, &params, &nz, &opts, cli.shots, cli.seed)?;
                    write_shots_csv(&inst, &recs, File::create(p)?)?;
                }
                let enc = encode_for(&inst, &params, &opts)?;
                (
                    run_iceberg_with(&inst, &params, &nz, &opts, cli.shots, cli.seed)?,
                    CircuitShape::from_encoded(&enc),
                )
            };
            if let Some(p) = dataset {
                let mut d = if p.exists() {
                    Dataset::from_json(&std::fs::read_to_string(p)?)?
                } else {
                    Dataset::default()
                };
                d.records
                    .push(CircuitRecord::from_summary(&summary, shape)?);
                std::fs::write(p, d.to_json()?)?;
            }
            emit(
                &cli.out,
                &format!("{}\n{}\n", RunSummary::CSV_HEADER, summary.csv_row()),
            )
        }
        Cmd::Model {
            k,
            ell,
            s,
            degree,
            batch,
        } => {
            if let Some(b) = batch {
                return emit(&cli.out, &predict_batch_json(&std::fs::read_to_string(b)?)?);
            }
            let k = k.ok_or_else(|| Error::InvalidArgument("--k or --batch required".into()))?;
            let shape = CircuitShape::regular(k, *degree, *ell, *s)?;
            let p = predict(&shape, &noise(cli)?)?;
            emit(
                &cli.out,
                &format!("{}\n", serde_json::to_string_pretty(&p)?),
            )
        }
        Cmd::Oracle { block, k, mu } => {
            let kind = match block {
                Block::Init => GadgetKind::Init,
                Block::Syndrome => GadgetKind::Syndrome,
                Block::Final => GadgetKind::Final,
            };
            let mut s = format!("{CSV_HEADER}\n");
            for &kk in k {
                s.push_str(&report_csv_row(&enumerate_fractions(kind, kk, *mu)?));
                s.push('\n');
            }
            emit(&cli.out, &s)
        }
        Cmd::Fit {
            data,
            role,
            iterations,
            no_filter,
        } => {
            let raw = Dataset::from_json(&std::fs::read_to_string(data)?)?;
            let mode = match role.as_str() {
                "unencoded" => Mode::Unencoded,
                "iceberg" => Mode::Iceberg,
                other => return Err(Error::InvalidArgument(format!("unknown role {other}"))),
            };
            let d = if *no_filter {
                Dataset {
                    records: raw.records.into_iter().filter(|r| r.role == mode).collect(),
                }
            } else {
                filter_dataset(&raw, mode)?
            };
            let fitter = match mode {
                Mode::Unencoded => fit_unencoded,
                Mode::Iceberg => fit_iceberg,
            };
            let mut res = fitter(&d)?;
            res.bootstrap = Some(bootstrap(&d, fitter, *iterations, cli.seed)?);
            eprint!("{}", res.table());
            emit(
                &cli.out,
                &format!("{}\n", serde_json::to_string_pretty(&res)?),
            )
        }
        Cmd::Sweep {
            study,
            k,
            ell,
            s,
            target,
            gw_alpha,
            noiseless_alpha,
            random_alpha,
        } => {
            let nz = noise(cli)?;
            match study {
                Study::Frontier => {
                    let spec = match &cli.config {
                        Some(p) => SweepSpec::from_config(&Config::load(p)?)?,
                        None => SweepSpec::default(),
                    };
                    let pts = frontier_sweep(&spec, &nz)?;
                    let mut summary = Vec::new();
                    for &ss in &spec.ss {
                        for &sc in &spec.scales {
                            for &l in &spec.ells {
                                summary.push(serde_json::json!({ "s": ss, "scale": sc, "ell": l, "breakeven_k": breakeven_k(&pts, l, ss, sc) }));
                            }
                        }
                    }
                    let contours = serde_json::json!({
                        "breakeven": breakeven_contour(&pts),
                        "post_rate_10pct": post_rate_contour(&pts, 0.1),
                        "breakeven_k": summary,
                    });
                    eprintln!("{}", serde_json::to_string(&contours)?);
                    emit(&cli.out, &sweep_csv(&pts))
                }
                Study::Breakeven => {
                    let t = match (target, random_alpha) {
                        (Some(t), _) => BreakevenTarget::Fidelity(*t),
                        (None, Some(r)) => BreakevenTarget::Ratio {
                            alpha_target: *gw_alpha,
                            alpha_noiseless: *noiseless_alpha,
                            alpha_random: *r,
                        },
                        (None, None) => BreakevenTarget::from_ratio(*gw_alpha, *noiseless_alpha)?,
                    };
                    let r = gw_breakeven_scan(*k, *ell, *s, &nz, t, 1.0)?;
                    emit(
                        &cli.out,
                        &format!("{}\n", serde_json::to_string_pretty(&r)?),
                    )
                }
                Study::Placement => {
                    let (kk, reduced) = mc_scale(*k);
                    let inst = gen_regular_graph(kk, 3, cli.seed)?;
                    let params = fixed_angles(*ell)
                        .ok_or_else(|| Error::InvalidArgument("no fixed angles".into()))?;
                    let pts = syndrome_placement_sweep(
                        &inst,
                        &params,
                        &nz,
                        &[1, 2, 3, 4, 5, 6, 7],
                        7,
                        cli.shots,
                        cli.seed,
                    )?;
                    let v = serde_json::json!({ "k": kk, "reduced_scale": reduced, "ell": ell, "points": pts });
                    emit(
                        &cli.out,
                        &format!("{}\n", serde_json::to_string_pretty(&v)?),
                    )
                }
                Study::Sk => {
                    let (kk, reduced) = mc_scale(*k);
                    let inst = gen_sk(kk, cli.seed)?;
                    let rows = sk_comparison(
                        &inst,
                        &(1..=*ell).collect::<Vec<_>>(),
                        *s,
                        &nz,
                        cli.shots,
                        cli.seed,
                        |l| optimize_params(&inst, l, 30),
                    )?;
                    let v = serde_json::json!({ "k": kk, "reduced_scale": reduced, "s": s, "rows": rows });
                    emit(
                        &cli.out,
                        &format!("{}\n", serde_json::to_string_pretty(&v)?),
                    )
                }
                Study::Perturb => {
                    let inst = gen_regular_graph(*k, 3, cli.seed)?;
                    let params = fixed_angles(*ell)
                        .ok_or_else(|| Error::InvalidArgument("no fixed angles".into()))?;
                    let rows = perturbation_study(
                        &inst,
                        &params,
                        &[0.0, 0.01, 0.02, 0.05, 0.1, 0.2],
                        cli.seed,
                    )?;
                    let mut s = String::from("delta,alpha\n");
                    for (d, a) in rows {
                        s.push_str(&format!("{d},{a}\n"));
                    }
                    emit(&cli.out, &s)
                }
            }
        }
        Cmd::Gw {
            graph,
            k,
            count,
            trials,
        } => {
            let insts: Vec<ProblemInstance> = match graph {
                Some(p) => vec![load_graph(p)?],
                None => (0..*count as u64)
                    .map(|sd| gen_regular_graph(*k, 3, cli.seed + sd))
                    .collect::<Result<_>>()?,
            };
            let mut s = format!("{}\n", RunSummary::CSV_HEADER);
            let mut mean = 0.0;
            for (i, inst) in insts.iter().enumerate() {
                let r = goemans_williamson(inst, *trials, cli.seed + i as u64)?;
                mean += r.mean_alpha / insts.len() as f64;
                s.push_str(&r.csv_row());
                s.push('\n');
            }
            eprintln!("mean alpha {mean:.4}");
            emit(&cli.out, &s)
        }
        Cmd::Pcs { circ, checks } => {
            let inst = load_graph(&circ.graph)?;
            let params = params_for(circ, &inst)?;
            let r = run_pcs(&inst, &params, &noise(cli)?, *checks, cli.shots, cli.seed)?;
            emit(
                &cli.out,
                &format!("{}\n{}\n", RunSummary::CSV_HEADER, r.csv_row()),
            )
        }
        Cmd::Runtime {
            times,
            discards,
            graph,
            ell,
            s,
        } => {
            let est = match graph {
                Some(p) => {
                    let inst = load_graph(p)?;
                    let params = fixed_angles(*ell)
                        .ok_or_else(|| Error::InvalidArgument("no fixed angles".into()))?;
                    let opts = IcebergOptions::new(*s);
                    let enc = encode_for(&inst, &params, &opts)?;
                    let r =
                        run_iceberg_with(&inst, &params, &noise(cli)?, &opts, cli.shots, cli.seed)?;
                    runtime_estimate(&gadget_times(&enc), &end_fractions(&r))?
                }
                None => runtime_estimate(times, discards)?,
            };
            emit(
                &cli.out,
                &format!("{}\n", serde_json::to_string_pretty(&est)?),
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Guard(_) => ExitCode::from(3),
                _ => ExitCode::from(1),
            }
        }
    }
}
