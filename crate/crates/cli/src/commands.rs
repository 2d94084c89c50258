use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::json;

use entromin::experiments::{
    calibrate_image_nu, calibrate_nu, default_image_methods, gen_instance, metrics, run_image_recovery,
    run_noisy_sweep, run_phase_transition, synthetic_phantom, write_image_plot_data, write_noisy_plot_data,
    write_ptc_csv, write_ptc_plot_data, write_rates_csv, write_results_csv, ExperimentGrid, GrayImage,
    ImageExperiment, Method, NoisySweep, RunManifest,
};
use entromin::selftest::{run_selftest, Fault, SelftestOptions};
use entromin::solver::{Initializer, SolverConfig};
use entromin::{LinearOperator, OperatorManifest, Penalty, RegularizerSpec};

use crate::config::{config_error, load_config};
use crate::{
    GlobalArgs, ImageArgs, MethodArgs, MethodKind, NoisyArgs, PtcArgs, Scale, SelftestArgs, SolveArgs,
};

const DEFAULT_SEED: u64 = 1;

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .map_err(|e| config_error(format!("cannot create output directory {}: {e}", dir.display())))
}

fn matches_kind(penalty: Penalty, kind: MethodKind) -> bool {
    matches!(
        (penalty, kind),
        (Penalty::L1, MethodKind::L1)
            | (Penalty::Sef { .. }, MethodKind::Sef)
            | (Penalty::Ref { .. }, MethodKind::Ref)
            | (Penalty::Lpp { .. }, MethodKind::Lp)
    )
}

/// Regularizer for `kind`, taking unspecified shape parameters from `base`
/// when it has the same kind, else from the defaults p = 1.1 (SEF, REF),
/// α = 1.1, p = 0.5 (Lp).
fn regularizer(
    kind: MethodKind,
    args: &MethodArgs,
    base: Option<RegularizerSpec>,
) -> Result<RegularizerSpec> {
    let (base_p, base_alpha) = match base.map(|b| b.penalty()) {
        Some(Penalty::Sef { p }) if kind == MethodKind::Sef => (Some(p), None),
        Some(Penalty::Ref { p, alpha }) if kind == MethodKind::Ref => (Some(p), Some(alpha)),
        Some(Penalty::Lpp { p }) if kind == MethodKind::Lp => (Some(p), None),
        _ => (None, None),
    };
    let p = args.p.or(base_p);
    let alpha = args.alpha.or(base_alpha);
    let spec = match kind {
        MethodKind::L1 => {
            if args.p.is_some() || args.alpha.is_some() {
                return Err(config_error("--p and --alpha do not apply to l1"));
            }
            RegularizerSpec::l1()
        }
        MethodKind::Sef => RegularizerSpec::sef(p.unwrap_or(1.1))?,
        MethodKind::Ref => RegularizerSpec::renyi(p.unwrap_or(1.1), alpha.unwrap_or(1.1))?,
        MethodKind::Lp => RegularizerSpec::lpp(p.unwrap_or(0.5))?,
    };
    if kind != MethodKind::Ref && args.alpha.is_some() {
        return Err(config_error("--alpha only applies to ref"));
    }
    let eps = base.map_or(spec.epsilon(), |b| b.epsilon());
    Ok(RegularizerSpec::with_epsilon(spec.penalty(), eps)?)
}

fn require_method_for_overrides(args: &MethodArgs) -> Result<()> {
    if args.method.is_none() && (args.p.is_some() || args.alpha.is_some() || args.lambda.is_some()) {
        return Err(config_error("--p, --alpha and --lambda require --method"));
    }
    Ok(())
}

/// Keeps only the methods of the selected kind and applies shape overrides;
/// adds a default method of that kind if none is configured.
fn select_methods<T: Clone>(
    methods: &[T],
    args: &MethodArgs,
    spec_of: impl Fn(&T) -> RegularizerSpec,
    set_spec: impl Fn(&mut T, RegularizerSpec),
    make: impl Fn(RegularizerSpec) -> T,
) -> Result<Vec<T>> {
    require_method_for_overrides(args)?;
    let Some(kind) = args.method else {
        return Ok(methods.to_vec());
    };
    let mut chosen: Vec<T> =
        methods.iter().filter(|m| matches_kind(spec_of(m).penalty(), kind)).cloned().collect();
    if chosen.is_empty() {
        chosen.push(make(regularizer(kind, args, None)?));
    }
    for m in &mut chosen {
        let spec = regularizer(kind, args, Some(spec_of(m)))?;
        set_spec(m, spec);
    }
    Ok(chosen)
}

fn print_table(header: &[String], rows: &[Vec<String>]) {
    let widths: Vec<usize> = (0..header.len())
        .map(|c| rows.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: &[String]| {
        cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect::<Vec<_>>().join("  ")
    };
    println!("{}", line(header));
    for r in rows {
        println!("{}", line(r));
    }
}

pub fn solve(global: &GlobalArgs, args: &SolveArgs) -> Result<u8> {
    let kind = args.method.method.unwrap_or(MethodKind::Sef);
    let spec = regularizer(kind, &args.method, None)?;
    let mut cfg = load_config(SolverConfig::new(spec), global.config.as_deref())?;
    if args.method.method.is_some() || global.config.is_none() {
        cfg.regularizer = regularizer(kind, &args.method, Some(cfg.regularizer))?;
        cfg.initializer = SolverConfig::new(cfg.regularizer).initializer;
    }
    if let Some(lambda) = args.method.lambda {
        cfg = cfg.fixed_lambda(lambda);
    }
    cfg.validate()?;

    let seed = global.seed.unwrap_or(DEFAULT_SEED);
    let (op, y, truth, source) = match &args.operator {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                config_error(format!("cannot read operator manifest {}: {e}", path.display()))
            })?;
            let manifest: OperatorManifest = serde_json::from_str(&text)
                .map_err(|e| config_error(format!("invalid operator manifest {}: {e}", path.display())))?;
            let op = manifest.build()?;
            let input = args.input.as_ref().expect("clap enforces --input");
            let text = fs::read_to_string(input)
                .map_err(|e| config_error(format!("cannot read measurements {}: {e}", input.display())))?;
            let y: Vec<f64> = serde_json::from_str(&text)
                .map_err(|e| config_error(format!("measurements must be a JSON array of numbers: {e}")))?;
            (op, y, None, json!({ "operator": manifest }))
        }
        None => {
            if args.input.is_some() {
                return Err(config_error("--input requires --operator"));
            }
            let inst = gen_instance(args.n, args.m, args.s, seed, args.nu)?;
            let source = json!({
                "generated": { "n": args.n, "m": args.m, "s": args.s, "nu": args.nu, "seed": seed }
            });
            (inst.a, inst.y, Some(inst.x), source)
        }
    };
    let out = solve_checked(&y, &op, &cfg)?;

    prepare_out(&global.out)?;
    let mut bin = Vec::with_capacity(out.x.len() * 8);
    for v in &out.x {
        bin.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(global.out.join("xhat.bin"), bin)?;
    let rel_err = match &truth {
        Some(x) => Some(metrics(x, &out.x, 1.0)?.rel_err),
        None => None,
    };
    let header = json!({
        "length": out.x.len(),
        "dtype": "float64",
        "byte_order": "little",
        "method": cfg.regularizer.penalty().name(),
        "regularizer": cfg.regularizer,
        "kappa": out.trace.kappa,
        "outer_iterations": out.trace.total_outer_iters(),
        "phases": out.trace.phases(),
        "converged": out.trace.converged,
        "final_objective": out.trace.final_objective(),
        "rel_err": rel_err,
        "notes": out.trace.notes,
    });
    fs::write(global.out.join("xhat.json"), serde_json::to_string_pretty(&header)? + "\n")?;
    let trace_file = fs::File::create(global.out.join("trace.csv"))?;
    out.trace.write_csv(trace_file)?;
    RunManifest::new("solve", seed, json!({ "solver": cfg, "input": source }), &header)
        .write(&global.out.join("manifest.json"))?;

    println!(
        "method {}  outer iterations {}  converged {}",
        cfg.regularizer.penalty().name(),
        out.trace.total_outer_iters(),
        out.trace.converged
    );
    if let Some(e) = rel_err {
        println!("rel_err {e:.3e}");
    }
    println!("wrote {}", global.out.join("xhat.bin").display());
    Ok(0)
}

fn solve_checked(y: &[f64], op: &LinearOperator, cfg: &SolverConfig) -> Result<entromin::SolveOutput> {
    entromin::solve(y, op, cfg).context("solver failed")
}

fn method_list(methods: &[Method], args: &MethodArgs) -> Result<Vec<Method>> {
    let mut chosen = select_methods(
        methods,
        args,
        |m| m.solver.regularizer,
        |m, spec| {
            m.solver.regularizer = spec;
            m.name = spec.penalty().name().to_string();
        },
        Method::from_spec,
    )?;
    if let Some(lambda) = args.lambda {
        for m in &mut chosen {
            m.solver.lambda0 = Some(lambda);
        }
    }
    // the configured L1 run stays in the list when it initializes the others
    let needs_l1 = chosen.iter().any(|m| m.solver.initializer == Initializer::L1);
    let has_l1 = chosen.iter().any(|m| m.solver.regularizer.penalty() == Penalty::L1);
    if needs_l1 && !has_l1 {
        if let Some(l1) = methods.iter().find(|m| m.solver.regularizer.penalty() == Penalty::L1) {
            chosen.insert(0, l1.clone());
        }
    }
    Ok(chosen)
}

pub fn ptc(global: &GlobalArgs, args: &PtcArgs) -> Result<u8> {
    let seed = global.seed.unwrap_or(DEFAULT_SEED);
    let preset = match global.scale {
        Scale::Desk => ExperimentGrid::desk(seed),
        Scale::Full => ExperimentGrid::full(seed),
    };
    let mut grid = load_config(preset, global.config.as_deref())?;
    if let Some(s) = global.seed {
        grid.master_seed = s;
    }
    grid.threads = global.threads;
    grid.record_wall_time |= args.timing;
    grid.methods = method_list(&grid.methods, &args.method)?;
    grid.validate()?;
    prepare_out(&global.out)?;

    let report = run_phase_transition(&grid)?;
    write_results_csv(&global.out.join("results.csv"), &report.results)?;
    write_rates_csv(&global.out.join("rates.csv"), &report.rates)?;
    write_ptc_csv(&global.out.join("ptc.csv"), &report.contours)?;
    write_ptc_plot_data(&global.out, &report)?;
    let totals: Vec<_> = grid
        .methods
        .iter()
        .map(|m| json!({ "method": m.name, "successes": report.total_successes(&m.name) }))
        .collect();
    RunManifest::new(
        "ptc",
        grid.master_seed,
        &grid,
        json!({ "total_successes": totals, "contours": report.contours }),
    )
    .write(&global.out.join("manifest.json"))?;

    let header: Vec<String> = ["method".to_string(), "successes".into()]
        .into_iter()
        .chain(grid.sigmas.iter().map(|s| format!("rho50@{s}")))
        .collect();
    let rows: Vec<Vec<String>> = report
        .contours
        .iter()
        .map(|(name, pts)| {
            let total = grid.sigmas.len() * grid.rhos.len() * grid.trials;
            [name.clone(), format!("{}/{total}", report.total_successes(name))]
                .into_iter()
                .chain(pts.iter().map(|p| format!("{:.3}{}", p.rho_half, if p.clamped { "*" } else { "" })))
                .collect()
        })
        .collect();
    print_table(&header, &rows);
    println!("(* = no 0.5 crossing in that column; clamped to the grid edge)");
    Ok(0)
}

pub fn noisy(global: &GlobalArgs, args: &NoisyArgs) -> Result<u8> {
    let seed = global.seed.unwrap_or(DEFAULT_SEED);
    let preset = match global.scale {
        Scale::Desk => NoisySweep::desk(seed),
        Scale::Full => NoisySweep::full(seed),
    };
    let mut sweep = load_config(preset, global.config.as_deref())?;
    if let Some(s) = global.seed {
        sweep.master_seed = s;
    }
    sweep.threads = global.threads;
    sweep.record_wall_time |= args.timing;
    if let Some(s) = &args.sigma {
        sweep.sigmas = s.clone();
    }
    if let Some(nu) = args.nu {
        sweep.nu = nu;
    }
    if let Some(snr) = args.snr {
        sweep.nu = calibrate_nu(sweep.n, sweep.s, snr);
    }
    sweep.methods = method_list(&sweep.methods, &args.method)?;
    for m in &mut sweep.methods {
        // noisy runs use a single fixed λ
        m.solver.continuation_ratio = None;
    }
    sweep.validate()?;
    prepare_out(&global.out)?;

    let report = run_noisy_sweep(&sweep)?;
    write_results_csv(&global.out.join("results.csv"), &report.results)?;
    write_noisy_plot_data(&global.out, &report)?;
    RunManifest::new(
        "noisy",
        sweep.master_seed,
        &sweep,
        json!({ "measurement_snr_db": report.measurement_snr_db, "mean_snr_db": report.mean_snr }),
    )
    .write(&global.out.join("manifest.json"))?;

    println!("measurement SNR {:.2} dB (nu = {:.5})", report.measurement_snr_db, sweep.nu);
    let header: Vec<String> =
        ["sigma".to_string()].into_iter().chain(sweep.methods.iter().map(|m| m.name.clone())).collect();
    let rows: Vec<Vec<String>> = sweep
        .sigmas
        .iter()
        .map(|&s| {
            [format!("{s}")]
                .into_iter()
                .chain(
                    sweep
                        .methods
                        .iter()
                        .map(|m| format!("{:.2}", report.mean(&m.name, s).unwrap_or(f64::NAN))),
                )
                .collect()
        })
        .collect();
    print_table(&header, &rows);
    Ok(0)
}

pub fn image(global: &GlobalArgs, args: &ImageArgs) -> Result<u8> {
    let seed = global.seed.unwrap_or(DEFAULT_SEED);
    let mut exp = load_config(ImageExperiment::desk(seed), global.config.as_deref())?;
    if let Some(s) = global.seed {
        exp.master_seed = s;
    }
    exp.record_wall_time |= args.timing;
    if let Some(s) = &args.sigma {
        exp.sigmas = s.clone();
    }
    let image = match &args.input {
        Some(path) => GrayImage::read_pgm(path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(|e| config_error(format!("{e:#}")))?,
        None => synthetic_phantom(64),
    };
    if let Some(nu) = args.nu {
        exp.nu = nu;
    }
    if let Some(snr) = args.snr {
        exp.nu = calibrate_image_nu(&image, snr);
    }
    let configured = exp.methods.clone();
    exp.methods = select_methods(
        &configured,
        &args.method,
        |m| m.solver.regularizer,
        |m, spec| {
            m.solver.regularizer = spec;
            m.name = spec.penalty().name().to_string();
        },
        |spec| {
            // borrow λ from the preset method of the same kind
            let mut m = default_image_methods()
                .into_iter()
                .find(|m| {
                    std::mem::discriminant(&m.solver.regularizer.penalty())
                        == std::mem::discriminant(&spec.penalty())
                })
                .expect("every kind has a preset");
            m.solver.regularizer = spec;
            m
        },
    )?;
    if let Some(lambda) = args.method.lambda {
        for m in &mut exp.methods {
            m.solver.lambda = lambda;
        }
    }
    if exp.methods.iter().any(|m| m.init_from_l1)
        && !exp.methods.iter().any(|m| m.solver.regularizer.penalty() == Penalty::L1)
    {
        if let Some(l1) = configured.iter().find(|m| m.solver.regularizer.penalty() == Penalty::L1) {
            exp.methods.insert(0, l1.clone());
        }
    }
    prepare_out(&global.out)?;

    let report = run_image_recovery(&image, &exp)?;
    write_results_csv(&global.out.join("results.csv"), &report.results)?;
    write_image_plot_data(&global.out, &report)?;
    image.write_pgm(&global.out.join("original.pgm"))?;
    for (r, recon) in report.results.iter().zip(&report.reconstructions) {
        recon.write_pgm(&global.out.join(format!("recon_{}_sigma{}.pgm", r.method, r.sigma)))?;
    }
    RunManifest::new(
        "image",
        exp.master_seed,
        json!({ "experiment": exp, "image": args.input.as_ref().map_or("synthetic phantom 64x64".to_string(), |p| p.display().to_string()), "side": image.side }),
        json!({ "measurement_snr_db": report.measurement_snr_db }),
    )
    .write(&global.out.join("manifest.json"))?;

    if let Some(snr) = report.measurement_snr_db {
        println!("measurement SNR {snr:.2} dB (nu = {:.5})", exp.nu);
    }
    let header: Vec<String> = ["sigma".to_string()]
        .into_iter()
        .chain(exp.methods.iter().map(|m| format!("{} PSNR", m.name)))
        .collect();
    let rows: Vec<Vec<String>> = exp
        .sigmas
        .iter()
        .map(|&s| {
            [format!("{s}")]
                .into_iter()
                .chain(exp.methods.iter().map(|m| {
                    let v = report.psnr(&m.name, s).unwrap_or(f64::NAN);
                    if v.is_infinite() {
                        "inf".to_string()
                    } else {
                        format!("{v:.2}")
                    }
                }))
                .collect()
        })
        .collect();
    print_table(&header, &rows);
    Ok(0)
}

pub fn selftest(args: &SelftestArgs) -> Result<u8> {
    let outcomes = run_selftest(SelftestOptions {
        quick: args.quick,
        fault: args.inject_fault.then_some(Fault::ShrinkageSign),
    });
    let rows: Vec<Vec<String>> = outcomes
        .iter()
        .map(|c| {
            vec![
                c.name.to_string(),
                if c.passed { "PASS" } else { "FAIL" }.to_string(),
                format!("{:.0} ms", c.millis),
                c.detail.clone(),
            ]
        })
        .collect();
    print_table(&["check".into(), "result".into(), "time".into(), "detail".into()], &rows);
    let failed: Vec<&str> = outcomes.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    std::io::stdout().flush()?;
    if failed.is_empty() {
        Ok(0)
    } else {
        eprintln!("selftest failed: {}", failed.join(", "));
        Ok(1)
    }
}
