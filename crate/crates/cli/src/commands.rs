//! One function per subcommand. Each computes in nats, converts at the
//! document boundary, and reports every argmax alongside its value.

use crate::config::Instance;
use crate::report::{
    sig12, write_csv, Base, BoundSection, ClassTermReport, CompositionReport, Construction,
    ExponentSection, PartitionSection, SimulateSection, SpherePacking, SweepSection, ValueAtRate,
    ValueAtRho,
};
use crate::CliError;
use jscc::ensemble::{exact_ensemble_error, monte_carlo_error, TiePolicy};
use jscc::exponents::{
    best_pair_search_with, critical_rate, csiszar_jscc_exponent_dual_with,
    csiszar_jscc_exponent_primal_with, gallager_jscc_exponent_with,
    jscc_sphere_packing_exponent_with, ExponentResult, EXTENSION_FACTOR, RHO_CAP_CHANNEL,
};
use jscc::finite_length::{random_coding_bound, realize_partition, FiniteBound, PartitionSpec};
use jscc::gallager::{channel_function, class_source_bound, source_function, ClassIndex, RhoGrid};
use jscc::hull::{capacity, E0Table};
use std::path::{Path, PathBuf};

fn class_name(class: ClassIndex) -> &'static str {
    match class {
        ClassIndex::One => "one",
        ClassIndex::Two => "two",
    }
}

fn construction_report(res: &ExponentResult, base: Base) -> Construction {
    Construction {
        value: base.convert(res.value),
        degenerate: res.degenerate.unwrap_or(false),
        rho0: res.rho_star,
        rho1: res.pair.as_ref().map(|p| p.rho1),
        rho2: res.pair.as_ref().map(|p| p.rho2),
        gamma0: res.gamma0,
        gamma: res.gamma,
        q1: res.pair.as_ref().map(|p| p.q1.probs().to_vec()),
        q2: res.pair.as_ref().map(|p| p.q2.probs().to_vec()),
        q_star: res.q_star.as_ref().map(|q| q.probs().to_vec()),
    }
}

/// Partition for bound/simulate/partition: distributions and threshold come
/// from the best-pair construction unless a gamma override is given.
fn derive_partition(
    instance: &Instance,
    k: usize,
    gamma_override: Option<f64>,
) -> Result<(PartitionSpec, Construction), CliError> {
    let table = E0Table::build(&instance.channel, &instance.set, &instance.unit_grid()?)?;
    let hull = table.hull()?;
    let res = best_pair_search_with(&hull, &instance.source, &instance.channel, instance.t)?;
    let report = construction_report(&res, Base::Nats);
    let partition = if report.degenerate {
        let q = res
            .q_star
            .clone()
            .expect("degenerate construction names its distribution");
        let gamma = gamma_override.unwrap_or(0.0);
        PartitionSpec::new(k, gamma, q.clone(), q)?
    } else {
        let pair = res.pair.as_ref().expect("non-degenerate construction has a pair");
        let gamma = gamma_override
            .or(res.gamma)
            .expect("non-degenerate construction has a threshold");
        PartitionSpec::new(k, gamma, pair.q1.clone(), pair.q2.clone())?
    };
    Ok((partition, report))
}

fn bound_section(
    bound: &FiniteBound,
    partition: &PartitionSpec,
    base: Base,
) -> BoundSection {
    BoundSection {
        k: bound.k,
        n: bound.n,
        gamma: bound.gamma,
        q1: partition.q(ClassIndex::One).probs().to_vec(),
        q2: partition.q(ClassIndex::Two).probs().to_vec(),
        log_total: base.convert(bound.log_total),
        normalized_exponent: base.convert(-bound.log_total / bound.n as f64),
        prefactor: bound.prefactor,
        nonempty_classes: bound.nonempty_classes,
        declared_classes: bound.declared_classes,
        display_total: bound.display_total(),
        terms: bound
            .terms
            .iter()
            .map(|t| ClassTermReport {
                class: class_name(t.class).into(),
                rho_star: t.rho_star,
                exponent: base.convert(t.exponent),
                log_mass: base.convert(t.ln_mass),
            })
            .collect(),
    }
}

pub fn cmd_exponent(instance: &Instance, base: Base) -> Result<ExponentSection, CliError> {
    let grid = instance.unit_grid()?;
    let table = E0Table::build(&instance.channel, &instance.set, &grid)?;
    let hull = table.hull()?;
    let extended = E0Table::build(
        &instance.channel,
        &instance.set,
        &RhoGrid::extended(instance.rho_step, RHO_CAP_CHANNEL, EXTENSION_FACTOR)?,
    )?;
    let gall = gallager_jscc_exponent_with(&table, &instance.source, instance.t)?;
    let dual = csiszar_jscc_exponent_dual_with(&hull, &instance.source, instance.t)?;
    let primal = csiszar_jscc_exponent_primal_with(&table, &instance.source, instance.t)?;
    let sp = jscc_sphere_packing_exponent_with(&extended, &instance.source, instance.t)?;
    let pair = best_pair_search_with(&hull, &instance.source, &instance.channel, instance.t)?;
    Ok(ExponentSection {
        entropy: base.convert(instance.source.entropy()),
        capacity: base.convert(capacity(&instance.channel)?),
        critical_rate: base.convert(critical_rate(&instance.channel)?),
        gallager: ValueAtRho {
            value: base.convert(gall.value),
            rho_star: gall.rho_star,
        },
        csiszar_dual: ValueAtRho {
            value: base.convert(dual.value),
            rho_star: dual.rho_star,
        },
        csiszar_primal: ValueAtRate {
            value: base.convert(primal.value),
            rate_star: base.convert_opt(primal.rate_star),
        },
        sphere_packing: SpherePacking {
            value: base.convert(sp.value),
            infinite: sp.infinite,
            rate_star: base.convert_opt(sp.rate_star),
            tight: sp.tight,
        },
        construction: {
            let mut c = construction_report(&pair, base);
            c.value = base.convert(pair.value);
            c
        },
    })
}

pub fn cmd_sweep_rho(
    instance: &Instance,
    base: Base,
    out_dir: &Path,
) -> Result<(SweepSection, Vec<PathBuf>), CliError> {
    let grid = instance.unit_grid()?;
    let table = E0Table::build(&instance.channel, &instance.set, &grid)?;
    let hull = table.hull()?;
    let gall = gallager_jscc_exponent_with(&table, &instance.source, instance.t)?;
    let dual = csiszar_jscc_exponent_dual_with(&hull, &instance.source, instance.t)?;
    let pair = best_pair_search_with(&hull, &instance.source, &instance.channel, instance.t)?;
    let t = instance.t.get();

    let mut rows = Vec::with_capacity(table.samples().len());
    for s in table.samples() {
        let es = source_function(s.rho, &instance.source);
        let hv = hull.evaluate(s.rho).value;
        rows.push(vec![
            sig12(s.rho),
            sig12(base.convert(s.value)),
            sig12(base.convert(hv)),
            sig12(base.convert(s.value - t * es)),
            sig12(base.convert(hv - t * es)),
        ]);
    }
    let exponent_csv = out_dir.join("curves_exponent.csv");
    write_csv(
        &exponent_csv,
        &[
            "rho",
            "e0_max",
            "e0_hull",
            "gallager_objective",
            "csiszar_objective",
        ],
        &rows,
    )?;
    let mut files = vec![exponent_csv];

    let construction = {
        let mut c = construction_report(&pair, base);
        c.value = base.convert(pair.value);
        c
    };
    if !construction.degenerate {
        let p = pair.pair.as_ref().expect("non-degenerate construction has a pair");
        let rho0 = pair.rho_star.expect("construction reports its center");
        let gamma0 = pair.gamma0.expect("non-degenerate construction has a threshold");
        let mut rows = Vec::with_capacity(table.samples().len());
        for s in table.samples() {
            let mut cols = vec![sig12(s.rho)];
            for (q, class) in [(&p.q1, ClassIndex::One), (&p.q2, ClassIndex::Two)] {
                let e0 = channel_function(s.rho, &instance.channel, q)?;
                let es = class_source_bound(s.rho, rho0, gamma0, &instance.source, class)?;
                cols.push(sig12(base.convert(e0 - t * es)));
            }
            rows.push(cols);
        }
        let classes_csv = out_dir.join("curves_classes.csv");
        write_csv(&classes_csv, &["rho", "class_one", "class_two"], &rows)?;
        files.push(classes_csv);
    }

    let reference_csv = out_dir.join("curves_reference.csv");
    write_csv(
        &reference_csv,
        &["name", "value"],
        &[
            vec!["gallager".into(), sig12(base.convert(gall.value))],
            vec!["csiszar".into(), sig12(base.convert(dual.value))],
        ],
    )?;
    files.push(reference_csv);

    let section = SweepSection {
        gallager: base.convert(gall.value),
        csiszar: base.convert(dual.value),
        construction,
        files: files
            .iter()
            .map(|p| {
                p.file_name()
                    .expect("curve files have names")
                    .to_string_lossy()
                    .into_owned()
            })
            .collect(),
    };
    Ok((section, files))
}

pub fn cmd_bound(
    instance: &Instance,
    base: Base,
    k: usize,
    n: usize,
    gamma: Option<f64>,
) -> Result<BoundSection, CliError> {
    let (partition, _) = derive_partition(instance, k, gamma)?;
    let bound = random_coding_bound(&instance.source, &instance.channel, &partition, n)?;
    Ok(bound_section(&bound, &partition, base))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SimMode {
    Exact,
    Mc,
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_simulate(
    instance: &Instance,
    base: Base,
    k: usize,
    n: usize,
    gamma: Option<f64>,
    mode: SimMode,
    trials: u64,
    seed: u64,
) -> Result<SimulateSection, CliError> {
    let (partition, _) = derive_partition(instance, k, gamma)?;
    let bound = random_coding_bound(&instance.source, &instance.channel, &partition, n)?;
    let bound = bound_section(&bound, &partition, base);
    let section = match mode {
        SimMode::Exact => {
            let exact = exact_ensemble_error(&instance.source, &instance.channel, &partition, n)?;
            SimulateSection {
                mode: "exact".into(),
                k,
                n,
                gamma: partition.gamma(),
                trials: exact.average.trials,
                seed: None,
                estimate: exact.average.estimate,
                half_width: exact.average.half_width,
                tie_policy: tie_name(exact.average.tie_policy),
                best_codebook_error: Some(exact.best_codebook_error),
                bound,
            }
        }
        SimMode::Mc => {
            let mc = monte_carlo_error(
                &instance.source,
                &instance.channel,
                &partition,
                n,
                trials,
                seed,
            )?;
            SimulateSection {
                mode: "mc".into(),
                k,
                n,
                gamma: partition.gamma(),
                trials: mc.trials,
                seed: Some(seed),
                estimate: mc.estimate,
                half_width: mc.half_width,
                tie_policy: tie_name(mc.tie_policy),
                best_codebook_error: None,
                bound,
            }
        }
    };
    Ok(section)
}

fn tie_name(policy: TiePolicy) -> String {
    match policy {
        TiePolicy::TiesAsErrors => "ties-as-errors".into(),
    }
}

pub fn cmd_partition(
    instance: &Instance,
    base: Base,
    k: usize,
    gamma: Option<f64>,
) -> Result<PartitionSection, CliError> {
    let gamma = match gamma {
        Some(g) => g,
        None => derive_partition(instance, k, None)?.0.gamma(),
    };
    let summary = realize_partition(&instance.source, k, gamma)?;
    Ok(PartitionSection {
        k: summary.k,
        gamma: summary.gamma,
        class_sizes: [
            summary.class_sizes[0].to_string(),
            summary.class_sizes[1].to_string(),
        ],
        class_mass: [
            summary.class_mass[0].to_linear(),
            summary.class_mass[1].to_linear(),
        ],
        log_class_mass: [
            base.convert(summary.class_mass[0].ln()),
            base.convert(summary.class_mass[1].ln()),
        ],
        compositions: summary
            .compositions
            .iter()
            .map(|c| CompositionReport {
                counts: c.counts.clone(),
                class: class_name(c.class).into(),
                sequences: c.sequences.to_string(),
                log_seq_prob: base.convert(c.ln_seq_prob),
            })
            .collect(),
    })
}
