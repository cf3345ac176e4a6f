use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use dirichlet_zeros::conditions::condition_report;
use dirichlet_zeros::dbar::BoxDomain;
use dirichlet_zeros::discretization::{discretize_truncated, partition_gamma, verify_error_bound, BlockPartition};
use dirichlet_zeros::divisor::DivisorTable;
use dirichlet_zeros::paley_wiener::Profile;
use dirichlet_zeros::scheme::{run_scheme_unchecked, SchemeConfig};
use dirichlet_zeros::spaces::ZeroSequence;
use dirichlet_zeros::verify::{error_bound_sample, run_suite, VerifyOptions};
use dirichlet_zeros::Error;
use serde::Serialize;
use serde_json::json;

use crate::{ConditionArgs, ConstructArgs, DiscretizeArgs, SieveArgs, VerifyArgs};

/// Accepts integers and scientific notation ("1e6").
pub fn parse_count(s: &str) -> std::result::Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if !(v >= 1.0) || v.fract() != 0.0 || v > u64::MAX as f64 {
        return Err(format!("'{s}' is not a positive integer"));
    }
    Ok(v as u64)
}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(
            Error::ContractionFailure { .. }
            | Error::Divergent(_)
            | Error::Quadrature { .. }
            | Error::InsufficientDecay { .. },
        ) => 3,
        _ => 2,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn config_header(w: &mut dyn Write, cfg: &impl Serialize) -> Result<()> {
    writeln!(w, "# config: {}", serde_json::to_string(cfg)?)?;
    Ok(())
}

fn write_json(path: Option<&PathBuf>, value: &impl Serialize) -> Result<()> {
    let mut w = output(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn read_zeros(path: &Path) -> Result<ZeroSequence> {
    Ok(ZeroSequence::from_json(&read(path)?)?)
}

/// x = 10^{k/4} up to x_max, then x_max itself.
fn checkpoints(x_max: u64) -> Vec<f64> {
    let mut out: Vec<f64> = (4..)
        .map(|k| 10f64.powf(k as f64 / 4.0).round())
        .take_while(|&x| x < x_max as f64)
        .collect();
    out.push(x_max as f64);
    out
}

pub fn sieve(a: &SieveArgs) -> Result<u8> {
    let table = DivisorTable::sieve(a.x_max)?;
    let xs = checkpoints(a.x_max);
    let sums = table.divisor_power_sums(a.alpha, &xs)?;
    let mut w = output(a.out.as_ref())?;
    config_header(&mut w, a)?;
    {
        let mut wr = csv::Writer::from_writer(&mut w);
        wr.write_record(["x", "D_alpha"])?;
        for (x, s) in xs.iter().zip(&sums) {
            wr.serialize((x, s))?;
        }
        wr.flush()?;
    }
    let Some(gamma) = a.gamma else {
        w.flush()?;
        return Ok(0);
    };
    let top = table.x_max() as f64;
    let j_max = a.j_max.unwrap_or_else(|| (top.ln().powf(1.0 / gamma).floor() as u64).saturating_sub(1).max(1));
    let j_min = a.j_min.unwrap_or((j_max / 10).max(1));
    let rows = table.block_sum_rows(a.alpha, gamma, j_min, j_max)?;
    let blocks_path = a.blocks.clone().or_else(|| a.out.as_ref().map(|p| p.with_extension("blocks.csv")));
    let mut bw: Box<dyn Write> = match &blocks_path {
        Some(p) => Box::new(create(p)?),
        None => {
            writeln!(w)?;
            w
        }
    };
    config_header(&mut bw, a)?;
    let mut wr = csv::Writer::from_writer(&mut bw);
    wr.write_record(["j", "block_sum", "predicted_exponent_value"])?;
    for r in rows {
        wr.serialize((r.j, r.block_sum, r.predicted_exponent_value))?;
    }
    wr.flush()?;
    Ok(0)
}

pub fn discretize(a: &DiscretizeArgs) -> Result<u8> {
    let table = DivisorTable::sieve(a.x_max)?;
    let part = BlockPartition::build_to_table(a.alpha, a.n, &table)?;
    let phi = Profile::read_csv(File::open(&a.profile).with_context(|| format!("cannot open {}", a.profile.display()))?, Some(part.log_n()))?;
    let (f, tail) = discretize_truncated(&phi, &part)?;
    f.to_json_writer(create(&a.out)?)?;
    if let Some(p) = &a.partition {
        let mut w = create(p)?;
        config_header(&mut w, a)?;
        part.write_csv(&mut w)?;
    }
    let beta = part.beta;
    let phi_norm = phi.l2beta_norm(beta)?;
    let f_norm = f.dirichlet_norm(&dirichlet_zeros::divisor::WeightSpec::divisor_power(a.alpha), Some(&table))?;
    let bound = if tail == 0.0 && phi_norm > 0.0 {
        Some(verify_error_bound(&phi, &f, &part, &error_bound_sample())?)
    } else {
        None
    };
    write_json(
        a.report.as_ref(),
        &json!({
            "config": a,
            "gamma": partition_gamma(a.alpha),
            "beta": beta,
            "first_block": part.j_first,
            "last_block": part.j_last(),
            "n_first": part.n_first(),
            "n_last": part.n_last(),
            "terms": f.terms().count(),
            "profile_norm": phi_norm,
            "dirichlet_norm": f_norm,
            "truncated_tail_norm": tail,
            "error_bound": bound,
        }),
    )?;
    Ok(0)
}

fn parse_pair(s: &str, what: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok((a.parse().with_context(|| format!("bad {what}"))?, b.parse().with_context(|| format!("bad {what}"))?)),
        _ => Err(Error::InvalidParameter(format!("{what} must be two comma-separated numbers, got '{s}'")).into()),
    }
}

pub fn construct_zero(a: &ConstructArgs) -> Result<u8> {
    let zeros = read_zeros(&a.zeros)?;
    let (r, tau) = parse_pair(&a.r#box, "box")?;
    let mut cfg = SchemeConfig::new(a.alpha, a.n);
    cfg.domain = BoxDomain::new(r, tau)?;
    cfg.iterations = a.iters;
    cfg.h = a.h;
    cfg.tolerance = a.tolerance;
    let table = DivisorTable::sieve(a.x_max)?;
    let (run, report) = run_scheme_unchecked(&zeros, &cfg, &table)?;
    run.f_total.to_json_writer(create(&a.out)?)?;
    let report_path = a.report.clone().unwrap_or_else(|| a.out.with_extension("report.json"));
    write_json(Some(&report_path), &json!({"config": a, "scheme": cfg, "report": report}))?;
    run.check_contraction()?;
    let ok = report.max_residual <= a.tolerance && report.nontriviality_margin > 0.0;
    eprintln!(
        "max residual {:.3e}, nontriviality margin {:.3e}, norms {:?}",
        report.max_residual, report.nontriviality_margin, report.norm_history
    );
    Ok(if ok { 0 } else { 1 })
}

pub fn check_conditions(a: &ConditionArgs) -> Result<u8> {
    let zeros = read_zeros(&a.zeros)?;
    let cone = a.cone.as_deref().map(|c| parse_pair(c, "cone")).transpose()?;
    let report = condition_report(&zeros, &a.epsilons, &a.gammas, cone)?;
    write_json(a.out.as_ref(), &report)?;
    Ok(0)
}

pub fn verify(a: &VerifyArgs) -> Result<u8> {
    let opts = VerifyOptions {
        seed: a.seed,
        alpha: a.alpha,
    };
    let report = run_suite(&opts, &a.only, |c| println!("{}", c.line()))?;
    if let Some(p) = &a.report {
        write_json(Some(p), &report)?;
    }
    Ok(if report.passed { 0 } else { 1 })
}
