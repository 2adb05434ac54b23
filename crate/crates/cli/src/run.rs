//! Executes one validated experiment.

use liblab_core::entropy::{chi_orb, chi_orb_report, i_star, verify_identity};
use liblab_core::fubm::{moment_flow, moments_of};
use liblab_core::loewner::{self, FlowCounters};
use liblab_core::measures::CircleMeasure;
use liblab_core::{fourier, Complex64};
use liblab_matrix_oracle::{analytic_laws, compare_to_flow, simulate_spectrum, write_csv, Initial};
use serde_json::{json, Value};

use crate::output::{csv_row, fmt, num, nums};
use crate::spec::{Command, ExperimentSpec, Pair, SpecError};

/// Result of a run before it is written out.
#[derive(Debug, Clone)]
pub struct Outcome {
    /// Scalar report; becomes `"result"` in the JSON document.
    pub report: Value,
    /// Primary table, written instead of the report when `format = csv`.
    pub table: String,
    /// Secondary tables, written next to the output as `<path>.<suffix>`.
    pub extra: Vec<(&'static str, String)>,
    pub counters: FlowCounters,
}

#[derive(Debug)]
pub enum RunError {
    /// Exit code 1.
    Invalid(SpecError),
    /// Exit code 2.
    Numerical { kind: String, message: String },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Invalid(_) => 1,
            RunError::Numerical { .. } => 2,
        }
    }
}

impl From<liblab_core::Error> for RunError {
    fn from(e: liblab_core::Error) -> Self {
        numerical(&e)
    }
}

impl From<liblab_matrix_oracle::Error> for RunError {
    fn from(e: liblab_matrix_oracle::Error) -> Self {
        match e {
            liblab_matrix_oracle::Error::Core(c) => numerical(&c),
            other => numerical(&other),
        }
    }
}

fn numerical(e: &(impl std::fmt::Debug + std::fmt::Display)) -> RunError {
    let dbg = format!("{e:?}");
    let kind = dbg
        .split(|c: char| !c.is_alphanumeric() && c != '_')
        .next()
        .unwrap_or("Error")
        .to_string();
    RunError::Numerical {
        kind,
        message: e.to_string(),
    }
}

pub fn run(spec: &ExperimentSpec) -> Result<Outcome, RunError> {
    spec.validate().map_err(RunError::Invalid)?;
    let mu0 = spec
        .initial_measure
        .build(&spec.params, spec.grid_size)
        .map_err(|e| RunError::Invalid(SpecError::new(format!("initial_measure: {e}"))))?;
    match spec.command {
        Command::Evolve => evolve(spec, &mu0),
        Command::Istar => istar(spec, &mu0),
        Command::Chiorb => chiorb(spec, &mu0),
        Command::Verify => verify(spec, &mu0),
        Command::Moments => moments(spec, &mu0),
        Command::OracleMc => oracle(spec, &mu0),
        Command::PdeCheck => pde(spec, &mu0),
    }
}

fn moment_header(n_max: usize) -> impl Iterator<Item = String> {
    (1..=n_max).map(|n| format!("c{n}"))
}

fn evolve(spec: &ExperimentSpec, mu0: &CircleMeasure) -> Result<Outcome, RunError> {
    let mut counters = FlowCounters::default();
    let mut table = csv_row(
        std::iter::once("t".to_string())
            .chain(moment_header(spec.n_max))
            .chain(["interior_mass".into(), "mass_defect".into()]),
    );
    let mut density = csv_row(["t", "theta", "density"].map(String::from));
    let mut rows = Vec::new();
    for &t in &spec.times {
        let state = loewner::evolve(mu0, &spec.params, t)?;
        counters.merge(state.counters);
        let m = &state.measure;
        let c = moments_of(m, spec.n_max);
        table.push_str(&csv_row(
            std::iter::once(fmt(t))
                .chain(c.c.iter().map(|v| fmt(*v)))
                .chain([fmt(m.total_mass()), fmt(state.mass_defect)]),
        ));
        for (th, h) in fourier::thetas(m.grid_size()).iter().zip(m.density()) {
            density.push_str(&csv_row([fmt(t), fmt(*th), fmt(*h)]));
        }
        rows.push(json!({
            "t": num(t),
            "moments": nums(&c.c),
            "interior_mass": num(m.total_mass()),
            "atom_zero": num(m.atom_zero),
            "atom_pi": num(m.atom_pi),
            "mass_defect": num(state.mass_defect),
        }));
    }
    Ok(Outcome {
        report: json!({
            "expected_interior_mass": num(spec.params.interior_mass()),
            "flows": rows,
        }),
        table,
        extra: vec![("density.csv", density)],
        counters,
    })
}

fn istar(spec: &ExperimentSpec, mu0: &CircleMeasure) -> Result<Outcome, RunError> {
    let r = i_star(mu0, &spec.params, spec.t_max, spec.tolerances.quadrature)?;
    let mut table = csv_row(["t", "phi_star"].map(String::from));
    for (t, phi) in r.profile.times.iter().zip(&r.profile.phi_star) {
        table.push_str(&csv_row([fmt(*t), fmt(*phi)]));
    }
    Ok(Outcome {
        report: json!({
            "i_star": num(r.value),
            "error": num(r.error),
            "power_law_fit": r.fit.map(|(p, r2)| json!({"exponent": num(p), "r2": num(r2)})),
            "divergent_at_zero": r.profile.divergent_at_zero,
            "profile": {"times": nums(&r.profile.times), "phi_star": nums(&r.profile.phi_star)},
        }),
        table,
        extra: vec![],
        counters: r.counters,
    })
}

fn scalar_table(pairs: &[(&str, f64)]) -> String {
    let mut t = csv_row(["quantity", "value"].map(String::from));
    for (k, v) in pairs {
        t.push_str(&csv_row([k.to_string(), fmt(*v)]));
    }
    t
}

fn chiorb(spec: &ExperimentSpec, mu0: &CircleMeasure) -> Result<Outcome, RunError> {
    let (report, pairs) = if mu0.has_atoms() {
        let v = chi_orb(mu0, &spec.params, true)?;
        (json!({"chi_orb": num(v)}), vec![("chi_orb", v)])
    } else {
        let r = chi_orb_report(mu0, &spec.params, true)?;
        (
            json!({
                "chi_orb": num(r.value),
                "log_energy": num(r.log_energy),
                "log_energy_direct": num(r.log_energy_direct),
                "potential_plus": num(r.potential_plus),
                "potential_minus": num(r.potential_minus),
                "z": num(r.z),
            }),
            vec![
                ("chi_orb", r.value),
                ("log_energy", r.log_energy),
                ("log_energy_direct", r.log_energy_direct),
                ("potential_plus", r.potential_plus),
                ("potential_minus", r.potential_minus),
                ("z", r.z),
            ],
        )
    };
    Ok(Outcome {
        report,
        table: scalar_table(&pairs),
        extra: vec![],
        counters: FlowCounters::default(),
    })
}

fn verify(spec: &ExperimentSpec, mu0: &CircleMeasure) -> Result<Outcome, RunError> {
    let tol = spec.tolerances;
    let r = verify_identity(mu0, &spec.params, spec.t_max, tol.quadrature, tol.gap)?;
    let mut pairs = vec![("i_star", r.i_star), ("i_star_error", r.i_star_error), ("chi_orb", r.chi_orb)];
    if let Some(g) = r.gap {
        pairs.push(("gap", g));
    }
    Ok(Outcome {
        report: json!({
            "i_star": num(r.i_star),
            "i_star_error": num(r.i_star_error),
            "chi_orb": num(r.chi_orb),
            "gap": r.gap.map(num),
            "both_infinite": r.both_infinite,
            "holds": r.holds,
        }),
        table: scalar_table(&pairs),
        extra: vec![],
        counters: r.counters,
    })
}

fn moments(spec: &ExperimentSpec, mu0: &CircleMeasure) -> Result<Outcome, RunError> {
    // Loewner time t is recursion time 2t
    let c0 = moments_of(mu0, spec.n_max);
    let mut table = csv_row(std::iter::once("t".to_string()).chain(moment_header(spec.n_max)));
    let mut rows = Vec::new();
    for &t in &spec.times {
        let c = moment_flow(&c0, 2.0 * t);
        table.push_str(&csv_row(std::iter::once(fmt(t)).chain(c.c.iter().map(|v| fmt(*v)))));
        rows.push(json!({"t": num(t), "recursion_time": num(2.0 * t), "moments": nums(&c.c)}));
    }
    Ok(Outcome {
        report: json!({"flows": rows}),
        table,
        extra: vec![],
        counters: FlowCounters::default(),
    })
}

fn oracle(spec: &ExperimentSpec, mu0: &CircleMeasure) -> Result<Outcome, RunError> {
    let config = spec.oracle_config();
    let initial = match spec.oracle.pair {
        Pair::Free => Initial::Free,
        Pair::Equal => Initial::equal(config.n, config.rank_p()),
    };
    let spectrum = simulate_spectrum(&config, &initial, &spec.times)?;
    let laws = analytic_laws(mu0, &spec.params, &spec.times)?;
    let ks = compare_to_flow(&spectrum.snapshots, &laws)?;
    let mut table = Vec::new();
    write_csv(&mut table, &spectrum.snapshots).expect("in-memory write");
    Ok(Outcome {
        report: json!({
            "n": config.n,
            "samples": config.samples,
            "dt": num(config.dt),
            "seed": config.seed,
            "unitarity_drift": num(spectrum.unitarity_drift),
            "ks": ks.iter().map(|k| json!({"t": num(k.t), "distance": num(k.distance)})).collect::<Vec<_>>(),
        }),
        table: String::from_utf8(table).expect("CSV is UTF-8"),
        extra: vec![],
        counters: FlowCounters::default(),
    })
}

/// Points with `|Im z| ≥ 0.5`, on both sides of the real axis.
pub fn pde_grid() -> Vec<Complex64> {
    [-0.5, 0.0, 0.5, 1.0, 1.5]
        .iter()
        .flat_map(|x| [0.5, -0.5, 1.0].map(|y| Complex64::new(*x, y)))
        .collect()
}

fn pde(spec: &ExperimentSpec, mu0: &CircleMeasure) -> Result<Outcome, RunError> {
    let zs = pde_grid();
    let h = spec.tolerances.pde_step;
    let coarse = loewner::pde_check(mu0, &spec.params, &spec.times, &zs, h, h)?;
    let fine = loewner::pde_check(mu0, &spec.params, &spec.times, &zs, h / 2.0, h / 2.0)?;
    let ratio = coarse.max / fine.max;
    let mut table = csv_row(["step", "max", "mean", "points"].map(String::from));
    for (s, r) in [(h, coarse), (h / 2.0, fine)] {
        table.push_str(&csv_row([fmt(s), fmt(r.max), fmt(r.mean), r.points.to_string()]));
    }
    let side = |s: f64, r: liblab_core::transforms::pde::PdeResidual| {
        json!({"step": num(s), "max": num(r.max), "mean": num(r.mean), "points": r.points})
    };
    Ok(Outcome {
        report: json!({
            "coarse": side(h, coarse),
            "fine": side(h / 2.0, fine),
            "ratio": num(ratio),
        }),
        table,
        extra: vec![],
        counters: FlowCounters::default(),
    })
}
