use crate::{Common, Failure, Format};
use floquet4::asymptotics::{perturbation_sweep, PerturbationSweep};
use floquet4::discriminants::bundle_with;
use floquet4::reference::{lambda_of_s, SpectralPoint};
use floquet4::spectrum::{assemble_with, coefficient_hash, report_csv, AssembleOptions};
use floquet4::verify::{run_all, SuiteReport, VerifyConfig};
use floquet4::zeros::{enumerate_with, zero_table, LocatedZero, SearchRange, ZeroSolver, ZeroTableEntry};
use floquet4::{CoefficientSet, DiscriminantBundle, IntegratorOptions};
use serde::Serialize;

/// Common JSON wrapper for every command except `spectrum`, whose report carries
/// its own schema and provenance.
#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: String,
    command: &'a str,
    coefficients_sha256: String,
    config: &'a Common,
    data: T,
}

fn json<T: Serialize>(common: &Common, c: &CoefficientSet, command: &str, data: T) -> String {
    let env = Envelope {
        schema_version: format!("floquet4.{command}/1"),
        command,
        coefficients_sha256: coefficient_hash(c),
        config: common,
        data,
    };
    let mut s = serde_json::to_string_pretty(&env).expect("report serializes");
    s.push('\n');
    s
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn spectrum(common: &Common, c: &CoefficientSet) -> Result<String, Failure> {
    let opts = AssembleOptions { tol_ode: common.tol_ode, tol_root: common.tol_root, ..Default::default() };
    let report = assemble_with(c, common.lambda_max, &opts)?;
    Ok(match common.format.unwrap_or(Format::Json) {
        Format::Json => serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
        Format::Csv => report_csv(&report),
    })
}

/// Uniform s-grid with `samples` points; one point sits at `s_min`, none when empty.
fn grid(s_min: f64, s_max: f64, samples: usize) -> Vec<f64> {
    match samples {
        0 => Vec::new(),
        1 => vec![s_min],
        n => (0..n).map(|k| s_min + (s_max - s_min) * k as f64 / (n - 1) as f64).collect(),
    }
}

pub fn trace(common: &Common, c: &CoefficientSet, s_min: f64, s_max: f64, samples: usize) -> Result<String, Failure> {
    if !(s_min.is_finite() && s_max.is_finite() && s_min <= s_max) {
        return Err(Failure::Input("need finite --s-min ≤ --s-max".into()));
    }
    let opts = IntegratorOptions::fast(common.tol_ode);
    let rows = grid(s_min, s_max, samples)
        .into_iter()
        .map(|s| bundle_with(c, &SpectralPoint::real(lambda_of_s(s)), &opts))
        .collect::<floquet4::Result<Vec<DiscriminantBundle>>>()?;
    Ok(match common.format.unwrap_or(Format::Csv) {
        Format::Json => json(common, c, "trace", rows),
        Format::Csv => {
            let mut out = String::from(DiscriminantBundle::CSV_HEADER);
            out.push('\n');
            for b in &rows {
                out.push_str(&b.csv_row());
                out.push('\n');
            }
            out
        }
    })
}

fn zero_csv<'a>(zeros: impl IntoIterator<Item = &'a LocatedZero>) -> String {
    let mut out = String::from("lambda_re,lambda_im,which,multiplicity,label\n");
    for z in zeros {
        let row = ZeroTableEntry::from(z);
        let which = serde_json::to_value(row.which).expect("serializes");
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            num(row.lambda_re),
            num(row.lambda_im),
            which.as_str().unwrap_or_default(),
            row.multiplicity,
            row.label.unwrap_or_default()
        ));
    }
    out
}

#[derive(Serialize)]
struct EigenTables {
    periodic: Vec<ZeroTableEntry>,
    antiperiodic: Vec<ZeroTableEntry>,
    nonreal: Vec<ZeroTableEntry>,
}

pub fn eigs(common: &Common, c: &CoefficientSet) -> Result<String, Failure> {
    let n = common.n_max;
    let solver = ZeroSolver::with_tolerances(c, common.tol_ode, common.tol_root);
    let t = enumerate_with(&solver, SearchRange { periodic_n: n, antiperiodic_n: n, resonance_n: 0 })?;
    Ok(match common.format.unwrap_or(Format::Json) {
        Format::Json => json(
            common,
            c,
            "eigs",
            EigenTables {
                periodic: zero_table(&t.periodic),
                antiperiodic: zero_table(&t.antiperiodic),
                nonreal: zero_table(&t.nonreal_eigenvalues),
            },
        ),
        Format::Csv => zero_csv(t.periodic.iter().chain(&t.antiperiodic)),
    })
}

#[derive(Serialize)]
struct ResonanceTables {
    labeled: Vec<ZeroTableEntry>,
    unlabeled: Vec<ZeroTableEntry>,
}

pub fn resonances(common: &Common, c: &CoefficientSet) -> Result<String, Failure> {
    let solver = ZeroSolver::with_tolerances(c, common.tol_ode, common.tol_root);
    let t = enumerate_with(&solver, SearchRange { periodic_n: 0, antiperiodic_n: 0, resonance_n: common.n_max })?;
    Ok(match common.format.unwrap_or(Format::Json) {
        Format::Json => json(
            common,
            c,
            "resonances",
            ResonanceTables { labeled: zero_table(&t.resonances), unlabeled: zero_table(&t.unlabeled) },
        ),
        Format::Csv => zero_csv(t.resonances.iter().chain(&t.unlabeled)),
    })
}

#[derive(Serialize)]
struct VerifyOutput {
    suites_config: VerifyConfig,
    suites: Vec<SuiteReport>,
}

/// Returns the rendered report and the statements of the failed suites.
pub fn verify(
    common: &Common,
    c: &CoefficientSet,
    seed: u64,
    random_sets: usize,
    lambdas: usize,
) -> Result<(String, Vec<String>), Failure> {
    let cfg = VerifyConfig {
        seed,
        random_sets,
        lambdas_per_set: lambdas,
        contour_sets: 1 + random_sets.min(2),
        count_n_max: common.n_max.clamp(1, 2),
        tol_ode: common.tol_ode,
        ..Default::default()
    };
    let suites = run_all(&cfg, std::slice::from_ref(c));
    let mut failed = Vec::new();
    for s in &suites {
        let verdict = if s.passed() { "PASS" } else { "FAIL" };
        eprintln!(
            "{verdict} {:<20} max {:.3e} (tol {:.0e}), {} checks, {} skipped",
            s.name, s.max_residual, s.tolerance, s.checks, s.skipped
        );
        for note in &s.notes {
            eprintln!("     {note}");
        }
        if !s.passed() {
            failed.push(format!("{} [{}]", s.name, s.statement));
        }
    }
    let text = match common.format.unwrap_or(Format::Json) {
        Format::Json => json(common, c, "verify", VerifyOutput { suites_config: cfg, suites }),
        Format::Csv => {
            let mut out = String::from("suite,checks,skipped,max_residual,tolerance,passed\n");
            for s in &suites {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    s.name,
                    s.checks,
                    s.skipped,
                    num(s.max_residual),
                    num(s.tolerance),
                    s.passed()
                ));
            }
            out
        }
    };
    Ok((text, failed))
}

pub fn perturb(common: &Common, c: &CoefficientSet) -> Result<String, Failure> {
    let sweep: PerturbationSweep = perturbation_sweep(c, &common.eps, common.tol_ode);
    Ok(match common.format.unwrap_or(Format::Json) {
        Format::Json => json(common, c, "perturb", sweep),
        Format::Csv => {
            let mut out = String::from(
                "eps,r0,l0,gap,t1_at_l0,r0_multiplicity,indicator_inside,gap_pred,gap_pred_trace_normalized,t1_at_l0_pred,error\n",
            );
            for r in &sweep.rows {
                let p = r.prediction.as_ref();
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{},{},{}\n",
                    num(r.eps),
                    opt(r.r0),
                    opt(r.l0),
                    opt(r.gap),
                    opt(r.t1_at_l0),
                    r.r0_multiplicity.map(|m| m.to_string()).unwrap_or_default(),
                    r.indicator_inside.map(|m| m.to_string()).unwrap_or_default(),
                    opt(p.map(|p| p.gap_pred)),
                    opt(p.map(|p| p.gap_pred_trace_normalized)),
                    opt(p.map(|p| p.t1_at_l0_pred)),
                    r.error.as_deref().unwrap_or("").replace(',', ";"),
                ));
            }
            out
        }
    })
}
